"""
Round-based adversaries on layered graphs.

`MooRounds` runs on the block graph: each round occupies k fresh nodes a_{ik+m} on layer
D-1, then requests the block b_{ik}..b_{ik+k-1} one node at a time, each followed by the
a-node the online algorithm just left.  `GenerationRounds` plays the same game on the
generation graph, where every round opens a new family A^S, B^S hanging off the set S
held by the offline servers.
"""

import logging

from analysis.formulas import layer_potential
from metrics.graphs import make_generation_graph, make_layered_block_graph
from serverlab.exceptions import ConstructionError

from .base import OfflineWitness, ScriptedSource, cap_factor

logger = logging.getLogger(__name__)


class MooRounds(ScriptedSource):
    name = 'moo_rounds'

    def __init__(self, graph, rounds):
        super().__init__(graph)
        if rounds < 1:
            raise ConstructionError(f"need at least one round, got {rounds}")
        self.graph = graph
        self.k = graph.k
        self.rounds = rounds
        self.deviations = 0

    def describe(self):
        return f"moo_rounds:D={self.graph.depth},k={self.k},n={self.rounds}"

    def script(self):
        graph, k = self.graph, self.k
        for i in range(self.rounds):
            block = [graph.a(i * k + m) for m in range(k)]
            for m, node in enumerate(block):
                self.slot = ('a', i, m)
                yield node
            for j in range(k):
                self.slot = ('b', i, j)
                yield graph.b(i * k + j)
                left = self.vacated(set(block))
                if not left:
                    self.deviations += 1
                    continue
                self.slot = ('re', i, j)
                yield left[0]
        if self.deviations:
            logger.warning("%s: %s b-steps left no a-node to re-request", self.describe(), self.deviations)
        return 'rounds-complete'

    def witness(self):
        """
        Round 0 spawns onto its a-nodes, later rounds move up from the previous block's
        b-nodes; each b-request takes an adjacent a-server (needed furthest in the future)
        and an emptied a-node that is requested again gets a fresh server.
        """
        graph, k = self.graph, self.k
        offline = OfflineWitness(graph, self.requests)
        for t, (point, (role, i, m)) in enumerate(zip(self.requests, self.slots), start=1):
            if offline.covers(point):
                offline.serve(t, point)
            elif role == 'a':
                below = offline.at(graph.b((i - 1) * k + m)) if i else []
                offline.serve(t, point, candidates=below, spawn=True)
            elif role == 'b':
                adjacent = [
                    sid for sid, p in offline.position.items()
                    if p.layer == graph.depth - 1 and graph.adjacent(p, point)
                ]
                offline.serve(t, point, candidates=adjacent, spawn=True)
            else:
                offline.serve(t, point, candidates=[], spawn=True)
        return offline.plan(label=self.describe())


class GenerationRounds(ScriptedSource):
    name = 'generation_rounds'

    def __init__(self, graph, rounds):
        super().__init__(graph)
        if rounds < 1:
            raise ConstructionError(f"need at least one round, got {rounds}")
        self.graph = graph
        self.k = graph.k
        self.rounds = rounds
        self.cap = cap_factor() * 4 * self.k
        self.offline = OfflineWitness(graph)
        self.deviations = 0
        self.records = []
        self.S = tuple(graph.S0)
        self._simulated = 0

    def describe(self):
        return f"generation_rounds:D={self.graph.depth},k={self.k},n={self.rounds}"

    def potential(self):
        return layer_potential([p for _, p in self.view.servers()], self.graph)

    def script(self):
        graph = self.graph
        self.slot = 'setup'
        if not (yield from self.until_covered(list(self.S), self.cap)):
            return 'cap'
        self.settle_setup()

        for r in range(self.rounds):
            fam = graph.family(self.S)
            cost_before, phi_before = self.view.total_cost, self.potential()
            witness_before = self.offline.cost
            self.slot = r

            # Part a: open the new A-nodes, sending back whatever the online side pulls off S
            S_nodes = set(fam.S)
            for a_node in fam.A:
                if self.view.covers(a_node):
                    raise ConstructionError(
                        f"round {r}: {a_node!r} is already covered; the online policy is not lazy and local"
                    )
                yield a_node
                for node in self.vacated(S_nodes):
                    if not self.view.covers(node):
                        yield node
            if not (yield from self.until_covered(list(fam.A), self.cap)):
                return 'cap'

            # Part b: each B-node, then the A-node it emptied, then anything emptied on S or B
            lower = S_nodes | set(fam.B)
            A_nodes = set(fam.A)
            for b_node in fam.B:
                if self.view.covers(b_node):
                    self.deviations += 1
                    logger.debug("round %s: %r covered before its request", r, b_node)
                    continue
                yield b_node
                left = self.vacated(A_nodes)
                if not left:
                    self.deviations += 1
                    logger.debug("round %s: serving %r emptied no A-node", r, b_node)
                    continue
                yield left[0]
                for node in self.vacated(lower):
                    if not self.view.covers(node):
                        yield node

            self.settle_round(fam)
            self.records.append({
                'round': r,
                'online_cost': self.view.total_cost - cost_before,
                'phi_before': phi_before,
                'phi_after': self.potential(),
                'witness_cost': self.offline.cost - witness_before,
            })
            logger.debug("round %s: %s", r, self.records[-1])
        if self.deviations:
            logger.warning("%s: %s b-steps left the round off script", self.describe(), self.deviations)
        return 'rounds-complete'

    def _simulate_tail(self):
        """Serve every request not yet seen by the offline side."""
        tail = self.requests[self._simulated:]
        start = self._simulated + 1
        self.offline.extend(tail)
        for t, point in enumerate(tail, start=start):
            self.offline.serve(t, point)
        self._simulated += len(tail)

    def settle_setup(self):
        for node in self.S:
            self.offline.spawn(node)
        self._simulate_tail()

    def settle_round(self, fam):
        """Serve the round offline, then bring layer D-1 servers down to free S or B nodes."""
        self._simulate_tail()
        top = self.graph.depth - 1
        occupied = set(self.offline.position.values())
        free = sorted(node for node in set(fam.S) | set(fam.B) if node not in occupied)
        for sid in sorted(self.offline.position):
            if self.offline.position[sid].layer == top:
                if not free:
                    raise ConstructionError("no free S or B node left for an offline server")
                self.offline.move(sid, free.pop(0))
        positions = list(self.offline.position.values())
        if len(set(positions)) != 2 * self.k or any(p.layer != self.graph.depth for p in positions):
            raise ConstructionError(f"offline servers do not occupy {2 * self.k} distinct layer-D nodes")
        self.S = tuple(sorted(positions))

    def witness(self):
        if self._simulated < len(self.requests):
            if not self.offline.position:
                self.settle_setup()
            else:
                self._simulate_tail()
        return self.offline.plan(label=self.describe())


def moo_rounds(D, k, n):
    graph = make_layered_block_graph(D, k)
    return graph, MooRounds(graph, n)


def generation_rounds(D, k, n):
    graph = make_generation_graph(D, k)
    return graph, GenerationRounds(graph, n)
