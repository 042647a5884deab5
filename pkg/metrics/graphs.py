"""
Lazily materialized layered graphs.

Distances are analytic: each family below has a small closed-form distance table, and
`to_networkx` exposes the materialized part so breadth-first search can cross-check it.
"""

import logging
import re
import threading
from dataclasses import dataclass, field

import networkx as nx

from serverlab.exceptions import MetricError

from .spaces import MetricSpace

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class Node:
    index: int
    layer: int = field(compare=False)
    key: str = field(compare=False)

    def __repr__(self):
        return self.key


class LayeredGraph(MetricSpace):
    """Graph whose edges join adjacent layers, with the root alone in layer 0."""

    kind = 'layered-graph'

    def __init__(self, depth):
        self.depth = int(depth)
        self._lock = threading.RLock()
        self._nodes = {}
        self._order = []
        root = self._node('v0', 0)
        super().__init__(root)

    @property
    def root(self):
        return self.source

    def _node(self, key, layer):
        with self._lock:
            node = self._nodes.get(key)
            if node is None:
                node = Node(len(self._order), layer, key)
                self._nodes[key] = node
                self._order.append(node)
            return node

    def layer_of(self, p):
        return p.layer

    def materialized(self):
        with self._lock:
            return list(self._order)

    def contains(self, p):
        return isinstance(p, Node) and self._nodes.get(p.key) == p

    def encode(self, p):
        return p.key

    def decode(self, token):
        node = self._nodes.get(token)
        if node is None:
            node = self._parse(token)
        if node is None:
            raise MetricError(f"unknown node {token!r}")
        return node

    def _parse(self, token):
        return None

    def neighbors(self, p):
        raise NotImplementedError

    def reaches_outward(self, p, q):
        """True when q can be reached from p moving away from the root only."""
        return q.layer > p.layer and self.distance(p, q) == q.layer - p.layer

    def to_networkx(self):
        """Materialized nodes and the edges among them."""
        graph = nx.Graph()
        nodes = self.materialized()
        graph.add_nodes_from(nodes)
        for node in nodes:
            for other in self.neighbors(node):
                graph.add_edge(node, other)
        return graph


class BlockGraph(LayeredGraph):
    """
    One node per layer on layers 0..D-2, then a_0, a_1, ... on layer D-1 and b_0, b_1, ...
    on layer D; block i = b_{ik}..b_{(i+1)k-1} is adjacent exactly to a_{ik}..a_{(i+2)k-1}.
    """

    def __init__(self, depth, k):
        if depth < 2 or k < 1:
            raise MetricError("block graph needs D >= 2 and k >= 1")
        super().__init__(depth)
        self.k = int(k)
        self.chain = [self.root] + [self._node(f"v{i}", i) for i in range(1, depth - 1)]

    def describe(self):
        return f"block-graph:D={self.depth},k={self.k}"

    def a(self, m):
        return self._node(f"a{m}", self.depth - 1)

    def b(self, j):
        return self._node(f"b{j}", self.depth)

    def _parse(self, token):
        match = re.fullmatch(r'([ab])(\d+)', token)
        if not match:
            return None
        kind, number = match.group(1), int(match.group(2))
        return self.a(number) if kind == 'a' else self.b(number)

    @staticmethod
    def _number(node):
        return int(node.key[1:])

    def _window(self, j):
        block = j // self.k
        return block * self.k, (block + 2) * self.k

    def adjacent(self, a_node, b_node):
        low, high = self._window(self._number(b_node))
        return low <= self._number(a_node) < high

    def neighbors(self, p):
        top = self.depth - 1
        if p.layer < top:
            result = []
            if p.layer > 0:
                result.append(self.chain[p.layer - 1])
            if p.layer < top - 1:
                result.append(self.chain[p.layer + 1])
            else:
                result.extend(n for n in self.materialized() if n.layer == top)
            return result
        if p.layer == top:
            m = self._number(p)
            blocks = [i for i in (m // self.k - 1, m // self.k) if i >= 0]
            bs = [self.b(j) for i in blocks for j in range(i * self.k, (i + 1) * self.k)]
            return [self.chain[-1]] + bs
        low, high = self._window(self._number(p))
        return [self.a(m) for m in range(low, high)]

    def distance(self, p, q):
        if p == q:
            return 0
        top = self.depth - 1
        if p.layer < top or q.layer < top:
            return abs(p.layer - q.layer)
        if p.layer == q.layer:
            if p.layer == top:
                return 2
            bp, bq = self._number(p) // self.k, self._number(q) // self.k
            return 2 if abs(bp - bq) <= 1 else 4
        a_node, b_node = (p, q) if p.layer == top else (q, p)
        return 1 if self.adjacent(a_node, b_node) else 3


@dataclass(frozen=True)
class Family:
    """A set S of 2k layer-D nodes with its k-node sets A^S (layer D-1) and B^S (layer D)."""

    ident: int
    S: tuple
    A: tuple
    B: tuple
    generation: int

    @property
    def reach(self):
        return frozenset(self.S) | frozenset(self.B)


class GenerationGraph(LayeredGraph):
    """
    Chain v_0..v_{D-1}; v_{D-1} is adjacent to the 2k nodes of S_0.  For every family S the
    nodes of A^S hang from v_{D-2} and are adjacent exactly to S and B^S on layer D.
    """

    def __init__(self, depth, k):
        if depth < 3 or k < 1:
            raise MetricError("generation graph needs D >= 3 and k >= 1")
        super().__init__(depth)
        self.k = int(k)
        self.chain = [self.root] + [self._node(f"v{i}", i) for i in range(1, depth)]
        self.S0 = tuple(self._node(f"s{i}", depth) for i in range(2 * self.k))
        self._s0_members = frozenset(self.S0)
        self._families = {}
        self._family_list = []
        self._owner = {}
        self._groups = {}
        self._generation = {}

    def describe(self):
        return f"generation-graph:D={self.depth},k={self.k}"

    @property
    def hub(self):
        return self.chain[-1]

    def generation(self, p):
        return self._generation.get(p, 1)

    def families(self):
        with self._lock:
            return list(self._family_list)

    def family_of(self, p):
        """Family owning an A or B node, or None."""
        return self._owner.get(p)

    def family(self, S):
        """Materialize (or fetch) A^S and B^S for a set S of 2k layer-D nodes."""
        members = tuple(sorted(set(S)))
        if len(members) != 2 * self.k or len(members) != len(S):
            raise MetricError(f"a family needs exactly {2 * self.k} distinct nodes, got {len(S)}")
        with self._lock:
            cached = self._families.get(members)
            if cached is not None:
                return cached
            member_set = frozenset(members)
            if member_set != self._s0_members and not any(
                    member_set <= fam.reach for fam in self._family_list):
                raise MetricError("S must be S_0 or lie inside S ∪ B^S of a materialized family")
            ident = len(self._family_list)
            gen = max(self.generation(p) for p in members) + 1
            A = tuple(self._node(f"a{ident}.{j}", self.depth - 1) for j in range(self.k))
            B = tuple(self._node(f"b{ident}.{j}", self.depth) for j in range(self.k))
            fam = Family(ident, members, A, B, gen)
            self._families[members] = fam
            self._family_list.append(fam)
            for node in A + B:
                self._owner[node] = fam
                self._generation[node] = gen
            for node in fam.reach:
                self._groups.setdefault(node, set()).add(ident)
            logger.debug("materialized family %s (generation %s)", ident, gen)
            return fam

    def _parse(self, token):
        return None

    def _near(self, u, w):
        if u in self._s0_members and w in self._s0_members:
            return True
        return bool(self._groups.get(u, set()) & self._groups.get(w, set()))

    def neighbors(self, p):
        D = self.depth
        if p.layer < D - 1 or p == self.hub:
            result = []
            if p.layer > 0:
                result.append(self.chain[p.layer - 1])
            if p.layer < D - 1:
                result.append(self.chain[p.layer + 1])
            if p.layer == D - 2:
                result.extend(a for fam in self.families() for a in fam.A)
            if p == self.hub:
                result.extend(self.S0)
            return result
        if p.layer == D - 1:
            fam = self._owner[p]
            return [self.chain[D - 2]] + list(fam.S) + list(fam.B)
        result = [self._family_list[i].A for i in sorted(self._groups.get(p, ()))]
        flat = [a for group in result for a in group]
        if p in self._s0_members:
            flat.append(self.hub)
        return flat

    def distance(self, p, q):
        if p == q:
            return 0
        D = self.depth
        if p.layer < D - 1 or q.layer < D - 1:
            return abs(p.layer - q.layer)
        if p.layer == D - 1 and q.layer == D - 1:
            return 2
        if p.layer == D and q.layer == D:
            return 2 if self._near(p, q) else 4
        upper, lower = (p, q) if p.layer == D - 1 else (q, p)
        if upper == self.hub:
            return 1 if lower in self._s0_members else 3
        return 1 if lower in self._owner[upper].reach else 3


def make_layered_block_graph(D, k):
    return BlockGraph(D, k)


def make_generation_graph(D, k):
    return GenerationGraph(D, k)
