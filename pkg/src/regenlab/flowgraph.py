"""Information flow graphs and exact source-to-collector min-cuts.

Storage node ``i`` is the vertex pair ``in:i -> out:i`` whose edge carries
what the node stores.  The source feeds the initial nodes through infinite
edges, newcomers download ``beta`` from each of ``d`` helpers, and a data
collector reads ``k`` out-vertices through infinite edges.

Max-flow is Dinic's algorithm on integers: rational capacities are scaled by
the LCM of their denominators and infinity becomes a sentinel larger than
the sum of all finite capacities.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .tradeoff import SystemParams, capacity

SOURCE = "S"
INF = None  # capacity marker for unbounded edges


class InvalidHistory(ValueError):
    pass


def v_in(node: int) -> str:
    return f"in:{node}"


def v_out(node: int) -> str:
    return f"out:{node}"


# -- repair histories -----------------------------------------------------


@dataclass(frozen=True)
class Fail:
    node: int


@dataclass(frozen=True)
class Join:
    node: int
    helpers: tuple[int, ...]


@dataclass
class RepairHistory:
    """Ordered fail/join events over initial nodes ``1..n``."""

    n: int
    events: list = field(default_factory=list)

    def fail(self, node: int) -> "RepairHistory":
        self.events.append(Fail(node))
        return self

    def join(self, node: int, helpers: Iterable[int]) -> "RepairHistory":
        self.events.append(Join(node, tuple(helpers)))
        return self

    def dumps(self) -> str:
        lines = []
        for ev in self.events:
            if isinstance(ev, Fail):
                lines.append(f"fail {ev.node}")
            else:
                lines.append(f"join {ev.node} {','.join(map(str, ev.helpers))}")
        return "".join(line + "\n" for line in lines)

    @classmethod
    def parse(cls, n: int, text: str) -> "RepairHistory":
        hist = cls(n)
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if parts[0] == "fail" and len(parts) == 2:
                    hist.fail(int(parts[1]))
                elif parts[0] == "join" and len(parts) == 3:
                    hist.join(int(parts[1]), [int(h) for h in parts[2].split(",")])
                else:
                    raise ValueError
            except ValueError:
                raise InvalidHistory(f"line {lineno}: cannot parse {raw!r}") from None
        return hist


# -- the graph --------------------------------------------------------------


@dataclass
class Edge:
    src: str
    dst: str
    cap: Fraction | None  # None = infinite


class InfoFlowGraph:
    """Information flow graph grown one failure/repair at a time.

    With ``relaxed=True`` newcomers may download from any existing node,
    active or not, which is the wider graph family the cut bound covers.
    """

    def __init__(self, params: SystemParams, relaxed: bool = False):
        self.params = params
        self.relaxed = relaxed
        self.vertices: list[str] = [SOURCE]
        self.edges: list[Edge] = []
        self.active: dict[int, bool] = {}
        self.stored: dict[int, Fraction] = {}
        self.helpers: dict[int, tuple[int, ...]] = {}
        for node in range(1, params.n + 1):
            self._add_storage(node, params.alpha)
            self.edges.append(Edge(SOURCE, v_in(node), INF))

    def _add_storage(self, node: int, alpha: Fraction):
        self.vertices += [v_in(node), v_out(node)]
        self.edges.append(Edge(v_in(node), v_out(node), alpha))
        self.active[node] = True
        self.stored[node] = alpha

    @property
    def active_nodes(self) -> list[int]:
        return [v for v, up in self.active.items() if up]

    def fail(self, node: int):
        if not self.active.get(node, False):
            raise InvalidHistory(f"node {node} is not active")
        if not self.relaxed and len(self.active_nodes) != self.params.n:
            raise InvalidHistory("a failure must be followed by a join before the next failure")
        self.active[node] = False

    def join(self, node: int, helpers: Sequence[int]):
        p = self.params
        helpers = tuple(helpers)
        if node in self.active:
            raise InvalidHistory(f"node id {node} already used")
        if len(helpers) != p.d or len(set(helpers)) != p.d:
            raise InvalidHistory(f"newcomer {node} needs {p.d} distinct helpers, got {helpers}")
        for h in helpers:
            if h not in self.active:
                raise InvalidHistory(f"helper {h} does not exist")
            if not self.relaxed and not self.active[h]:
                raise InvalidHistory(f"helper {h} is not active")
        if not self.relaxed and len(self.active_nodes) != p.n - 1:
            raise InvalidHistory("a join must replace exactly one failed node")
        self._add_storage(node, p.alpha)
        for h in helpers:
            self.edges.append(Edge(v_out(h), v_in(node), p.beta))
        self.helpers[node] = helpers

    def apply(self, event):
        if isinstance(event, Fail):
            self.fail(event.node)
        else:
            self.join(event.node, event.helpers)

    def dump(self, collectors: Sequence[Sequence[int]] = ()) -> str:
        """One edge per line: ``src dst capacity`` with ``p/q`` or ``inf``."""
        lines = [f"{e.src} {e.dst} {_fmt_cap(e.cap)}" for e in self.edges]
        for j, nodes in enumerate(collectors):
            lines += [f"{v_out(v)} DC:{j} inf" for v in nodes]
        return "".join(line + "\n" for line in lines)


def _fmt_cap(cap):
    if cap is None:
        return "inf"
    return f"{cap.numerator}/{cap.denominator}"


def parse_dump(text: str) -> list[Edge]:
    edges = []
    for line in text.splitlines():
        if not line.strip():
            continue
        src, dst, cap = line.split()
        edges.append(Edge(src, dst, None if cap == "inf" else Fraction(cap)))
    return edges


def build_graph(params: SystemParams, history: RepairHistory, relaxed: bool = False) -> InfoFlowGraph:
    if history.n != params.n:
        raise InvalidHistory(f"history has n={history.n}, params have n={params.n}")
    g = InfoFlowGraph(params, relaxed=relaxed)
    for ev in history.events:
        g.apply(ev)
    return g


# -- max-flow -----------------------------------------------------------------


class _Dinic:
    def __init__(self, nv: int):
        self.nv = nv
        self.head = [-1] * nv
        self.to: list[int] = []
        self.cap: list[int] = []
        self.nxt: list[int] = []

    def add(self, u: int, v: int, c: int):
        for a, b, cc in ((u, v, c), (v, u, 0)):
            self.to.append(b)
            self.cap.append(cc)
            self.nxt.append(self.head[a])
            self.head[a] = len(self.to) - 1

    def _bfs(self, s, t):
        level = [-1] * self.nv
        level[s] = 0
        q = deque([s])
        to, cap, nxt, head = self.to, self.cap, self.nxt, self.head
        while q:
            u = q.popleft()
            e = head[u]
            while e != -1:
                if cap[e] > 0 and level[to[e]] < 0:
                    level[to[e]] = level[u] + 1
                    q.append(to[e])
                e = nxt[e]
        return level if level[t] >= 0 else None

    def maxflow(self, s: int, t: int) -> int:
        flow = 0
        to, cap, nxt = self.to, self.cap, self.nxt
        while True:
            level = self._bfs(s, t)
            if level is None:
                return flow
            it = list(self.head)
            # iterative blocking-flow DFS
            while True:
                path = []
                u = s
                while u != t:
                    e = it[u]
                    while e != -1 and not (cap[e] > 0 and level[to[e]] == level[u] + 1):
                        e = nxt[e]
                    it[u] = e
                    if e == -1:
                        if u == s:
                            break
                        level[u] = -1  # dead end
                        u = to[path.pop() ^ 1]
                        continue
                    path.append(e)
                    u = to[e]
                if u != t:
                    break
                push = min(cap[e] for e in path)
                for e in path:
                    cap[e] -= push
                    cap[e ^ 1] += push
                flow += push

    def reachable(self, s: int) -> set[int]:
        seen = {s}
        q = deque([s])
        while q:
            u = q.popleft()
            e = self.head[u]
            while e != -1:
                if self.cap[e] > 0 and self.to[e] not in seen:
                    seen.add(self.to[e])
                    q.append(self.to[e])
                e = self.nxt[e]
        return seen


@dataclass
class CutResult:
    value: Fraction | None  # None = infinite
    edges: list[Edge]


def _check_collector(graph: InfoFlowGraph, collector: Sequence[int]):
    collector = list(collector)
    if len(set(collector)) != len(collector):
        raise ValueError(f"collector nodes must be distinct: {collector}")
    for v in collector:
        if v not in graph.active:
            raise ValueError(f"unknown node {v}")
        if not graph.relaxed and not graph.active[v]:
            raise ValueError(f"collector node {v} is not active")
    return collector


def solve_cut(edges: Sequence[Edge], source: str, sink: str) -> CutResult:
    """Exact max-flow / min-cut on an arbitrary edge list."""
    names = {}
    for e in edges:
        names.setdefault(e.src, len(names))
        names.setdefault(e.dst, len(names))
    if source not in names or sink not in names:
        return CutResult(Fraction(0), [])
    finite = [e.cap for e in edges if e.cap is not None]
    scale = math.lcm(*(c.denominator for c in finite)) if finite else 1
    big = sum(int(c * scale) for c in finite) + 1
    net = _Dinic(len(names))
    for e in edges:
        net.add(names[e.src], names[e.dst], big if e.cap is None else int(e.cap * scale))
    flow = net.maxflow(names[source], names[sink])
    side = net.reachable(names[source])
    cut = [e for e in edges if names[e.src] in side and names[e.dst] not in side]
    if flow >= big:
        return CutResult(None, cut)
    return CutResult(Fraction(flow, scale), cut)


def min_cut_detail(graph: InfoFlowGraph, collector: Sequence[int]) -> CutResult:
    collector = _check_collector(graph, collector)
    dc = "DC:0"
    edges = graph.edges + [Edge(v_out(v), dc, INF) for v in collector]
    return solve_cut(edges, SOURCE, dc)


def min_cut(graph: InfoFlowGraph, collector: Sequence[int]) -> Fraction | None:
    """Min-cut between the source and a collector reading ``collector`` nodes."""
    return min_cut_detail(graph, collector).value


def lemma2_bound(params: SystemParams) -> Fraction:
    """Lower bound on every collector's min-cut in any graph of the family."""
    return capacity(params)


@dataclass
class Feasibility:
    feasible: bool
    cut_value: Fraction | None
    witness: list[Edge]

    def __bool__(self):
        return self.feasible


def check_reconstruction_feasible(graph: InfoFlowGraph, collector: Sequence[int]) -> Feasibility:
    """Whether the collector's min-cut reaches the file size.

    The witness is the saturated cut edge set when reconstruction is
    impossible, empty otherwise.
    """
    res = min_cut_detail(graph, collector)
    ok = res.value is None or res.value >= graph.params.M
    return Feasibility(ok, res.value, [] if ok else res.edges)


def worst_case_history(params: SystemParams) -> RepairHistory:
    """Failure pattern of the graph that meets the cut bound with equality.

    Newcomer ``n+i`` downloads from nodes ``n+i-d .. n+i-1``; node ``i``
    (never among those helpers since d <= n-1) is the one that failed.
    """
    n, k, d = params.n, params.k, params.d
    hist = RepairHistory(n)
    for i in range(1, k + 1):
        hist.fail(i)
        hist.join(n + i, range(n + i - d, n + i))
    return hist


def build_worst_case(params: SystemParams) -> tuple[InfoFlowGraph, list[int]]:
    g = build_graph(params, worst_case_history(params))
    return g, [params.n + i for i in range(1, params.k + 1)]
