"""Min-cost flow by successive shortest paths with Johnson potentials, integer costs."""

import heapq

INF = 10 ** 30


class MinCostFlow:
    class Edge:
        __slots__ = ('u', 'v', 'cap', 'cost', 'rev')

        def __init__(self, u, v, cap, cost):
            self.u = u
            self.v = v
            self.cap = cap
            self.cost = cost
            self.rev = None

    def __init__(self, n):
        self.n = n
        self.graph = [[] for _ in range(n)]

    def add_edge(self, u, v, cap, cost):
        forward = MinCostFlow.Edge(u, v, cap, cost)
        backward = MinCostFlow.Edge(v, u, 0, -cost)
        forward.rev = backward
        backward.rev = forward
        self.graph[u].append(forward)
        self.graph[v].append(backward)
        return forward

    def dag_potentials(self, s, order):
        """Shortest distances from s over forward edges, visiting nodes in topological `order`."""
        dist = [INF] * self.n
        dist[s] = 0
        for u in order:
            if dist[u] == INF:
                continue
            for e in self.graph[u]:
                if e.cap > 0 and dist[u] + e.cost < dist[e.v]:
                    dist[e.v] = dist[u] + e.cost
        return [0 if d == INF else d for d in dist]

    def min_cost_flow(self, s, t, want, potentials=None):
        """Push up to `want` units from s to t; returns (flow, cost)."""
        pot = list(potentials) if potentials is not None else [0] * self.n
        flow = 0
        cost = 0
        while flow < want:
            dist = [INF] * self.n
            parent = [None] * self.n
            dist[s] = 0
            heap = [(0, s)]
            while heap:
                d, u = heapq.heappop(heap)
                if d != dist[u]:
                    continue
                for e in self.graph[u]:
                    if e.cap <= 0:
                        continue
                    nd = d + e.cost + pot[u] - pot[e.v]
                    if nd < dist[e.v]:
                        dist[e.v] = nd
                        parent[e.v] = e
                        heapq.heappush(heap, (nd, e.v))
            if parent[t] is None:
                break
            for v in range(self.n):
                if dist[v] < INF:
                    pot[v] += dist[v]

            add = want - flow
            v = t
            while v != s:
                e = parent[v]
                add = min(add, e.cap)
                v = e.u
            v = t
            while v != s:
                e = parent[v]
                e.cap -= add
                e.rev.cap += add
                cost += add * e.cost
                v = e.u
            flow += add
        return flow, cost
