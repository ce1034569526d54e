"""Max-flow / min-cut on a directed network (Dinic's algorithm).

Arcs are added in pairs (forward + reverse) and explored in insertion
order, so results are deterministic for a fixed construction sequence.
Capacities are nonnegative floats; residuals below 1e-12 count as
saturated to keep float dust from spinning extra phases.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

_RESIDUAL_EPS = 1e-12


@dataclass
class FlowNetwork:
    """Adjacency-list flow network with paired reverse arcs."""

    node_count: int
    source: int
    sink: int
    head: list[list[int]] = field(default_factory=list)    # node -> arc indices
    to: list[int] = field(default_factory=list)
    cap: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not (0 <= self.source < self.node_count and 0 <= self.sink < self.node_count):
            raise ValueError("source/sink out of range")
        if self.source == self.sink:
            raise ValueError("source equals sink")
        if not self.head:
            self.head = [[] for _ in range(self.node_count)]

    def add_node(self) -> int:
        self.head.append([])
        self.node_count += 1
        return self.node_count - 1

    def add_arc(self, u: int, v: int, cap: float, rev_cap: float = 0.0) -> None:
        """Directed arc u->v plus its paired reverse arc v->u."""
        if cap < 0 or rev_cap < 0:
            raise ValueError("negative capacity")
        self.head[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(float(cap))
        self.head[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(float(rev_cap))

    def add_edge(self, u: int, v: int, cap: float) -> None:
        """Undirected edge: equal capacity in both directions."""
        self.add_arc(u, v, cap, cap)


def max_flow(net: FlowNetwork) -> tuple[float, np.ndarray]:
    """Maximum s-t flow and the source side of a minimum cut.

    Returns (flow_value, member) where member is a bool array over nodes
    with member[i] True iff i lies on the source side (reachable from
    the source in the final residual network).
    """
    n = net.node_count
    to, cap, head = net.to, net.cap, net.head
    s, t = net.source, net.sink
    level = [0] * n
    it = [0] * n
    total = 0.0

    def bfs() -> bool:
        for i in range(n):
            level[i] = -1
        level[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for a in head[u]:
                v = to[a]
                if cap[a] > _RESIDUAL_EPS and level[v] < 0:
                    level[v] = level[u] + 1
                    q.append(v)
        return level[t] >= 0

    def dfs(u: int, pushed: float) -> float:
        if u == t:
            return pushed
        while it[u] < len(head[u]):
            a = head[u][it[u]]
            v = to[a]
            if cap[a] > _RESIDUAL_EPS and level[v] == level[u] + 1:
                got = dfs(v, min(pushed, cap[a]))
                if got > 0:
                    cap[a] -= got
                    cap[a ^ 1] += got
                    return got
            it[u] += 1
        return 0.0

    import sys
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 2 * n + 100))
    try:
        while bfs():
            for i in range(n):
                it[i] = 0
            while True:
                pushed = dfs(s, float("inf"))
                if pushed <= 0:
                    break
                total += pushed
    finally:
        sys.setrecursionlimit(old_limit)

    member = np.zeros(n, dtype=bool)
    member[s] = True
    q = deque([s])
    while q:
        u = q.popleft()
        for a in head[u]:
            v = to[a]
            if cap[a] > _RESIDUAL_EPS and not member[v]:
                member[v] = True
                q.append(v)
    return total, member
