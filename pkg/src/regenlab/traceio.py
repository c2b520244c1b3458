"""Node availability traces: parsing, PlanetLab-style cleaning, and
estimation of the churn parameters ``f`` and ``a``.

Trace CSV format, one interval per row, optional header line::

    node_id,start_epoch_s,end_epoch_s,up
    pl-17,1072915200,1072916100,1

Intervals of one node must not overlap.  Time a node does not cover between
its first interval and the end of the trace counts as down.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable, TextIO

import numpy as np

DAY = 86400.0
DEFAULT_TIMEOUT_HOURS = 24.0


@dataclass(frozen=True)
class TraceConstants:
    length_days: float
    start: str
    mean_nodes_up: int
    f: float
    a: float


# published per-trace values; the raw traces are not shipped
TABLE_I = {
    "planetlab": TraceConstants(527, "Jan. 2004", 303, 0.017, 0.97),
    "microsoft": TraceConstants(35, "Jul. 6, 1999", 41970, 0.038, 0.91),
    "skype": TraceConstants(25, "Sept. 12, 2005", 710, 0.12, 0.65),
    "gnutella": TraceConstants(2.5, "May, 2001", 1846, 0.30, 0.38),
}


class TraceFormatError(ValueError):
    pass


@dataclass
class AvailabilityTrace:
    """Per-node up/down intervals, held as parallel arrays.

    Rows are sorted by (node, start) and touching intervals with the same
    state are merged, so two traces describing the same timeline compare
    equal after construction.
    """

    names: list[str]
    node: np.ndarray
    start: np.ndarray
    end: np.ndarray
    up: np.ndarray
    span: tuple[float, float]
    period: float | None = None

    def __post_init__(self):
        self.node = np.asarray(self.node, dtype=np.int64)
        self.start = np.asarray(self.start, dtype=np.float64)
        self.end = np.asarray(self.end, dtype=np.float64)
        self.up = np.asarray(self.up, dtype=bool)
        self._normalize()

    def _normalize(self):
        order = np.lexsort((self.start, self.node))
        node, start, end, up = (x[order] for x in (self.node, self.start, self.end, self.up))
        if np.any(end <= start):
            i = int(np.flatnonzero(end <= start)[0])
            raise TraceFormatError(f"empty interval for node {self.names[node[i]]!r} at {start[i]}")
        same = node[1:] == node[:-1]
        bad = same & (start[1:] < end[:-1])
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise TraceFormatError(f"overlapping intervals for node {self.names[node[i]]!r} at {start[i + 1]}")
        if len(node):
            lo, hi = self.span
            if start[0] < lo or end.max() > hi:
                raise TraceFormatError("interval outside the trace span")
        # merge touching intervals with equal state
        joined = same & (start[1:] == end[:-1]) & (up[1:] == up[:-1])
        keep = np.ones(len(node), dtype=bool)
        keep[1:] = ~joined
        last = np.ones(len(node), dtype=bool)
        last[:-1] = keep[1:]
        self.node, self.start, self.end, self.up = node[keep], start[keep], end[last], up[keep]

    @property
    def span_days(self) -> float:
        return (self.span[1] - self.span[0]) / DAY

    def __eq__(self, other):
        if not isinstance(other, AvailabilityTrace):
            return NotImplemented
        key = lambda t: sorted(zip((t.names[i] for i in t.node), t.start.tolist(), t.end.tolist(), t.up.tolist()))
        return self.span == other.span and key(self) == key(other)

    def relabel(self, mapping: dict[str, str]) -> "AvailabilityTrace":
        return AvailabilityTrace([mapping[n] for n in self.names], self.node, self.start, self.end, self.up, self.span, self.period)


def from_rows(rows: Iterable[tuple], span=None, period=None) -> AvailabilityTrace:
    names: dict[str, int] = {}
    node, start, end, up = [], [], [], []
    for name, s, e, u in rows:
        node.append(names.setdefault(str(name), len(names)))
        start.append(float(s))
        end.append(float(e))
        up.append(bool(u))
    if span is None:
        span = (min(start), max(end)) if start else (0.0, 0.0)
    return AvailabilityTrace(list(names), node, start, end, up, (float(span[0]), float(span[1])), period)


def parse_trace(stream: TextIO, span=None, period=None) -> AvailabilityTrace:
    rows = []
    for lineno, row in enumerate(csv.reader(stream), 1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        if lineno == 1 and row[0].strip() == "node_id":
            continue
        if len(row) != 4:
            raise TraceFormatError(f"line {lineno}: expected 4 fields, got {len(row)}")
        name, s, e, u = (x.strip() for x in row)
        try:
            s, e = float(s), float(e)
        except ValueError:
            raise TraceFormatError(f"line {lineno}: bad timestamp") from None
        if u not in ("0", "1") or not math.isfinite(s) or not math.isfinite(e):
            raise TraceFormatError(f"line {lineno}: malformed row {row!r}")
        if e <= s:
            raise TraceFormatError(f"line {lineno}: interval end {e} not after start {s}")
        rows.append((name, s, e, u == "1"))
    return from_rows(rows, span=span, period=period)


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def emit_trace(trace: AvailabilityTrace, stream: TextIO):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["node_id", "start_epoch_s", "end_epoch_s", "up"])
    for i in range(len(trace.node)):
        w.writerow([trace.names[trace.node[i]], _num(trace.start[i]), _num(trace.end[i]), int(trace.up[i])])


def dumps_trace(trace: AvailabilityTrace) -> str:
    buf = io.StringIO()
    emit_trace(trace, buf)
    return buf.getvalue()


# -- timeline helpers ---------------------------------------------------------


def _first_seen(trace: AvailabilityTrace) -> np.ndarray:
    first = np.full(len(trace.names), np.inf)
    np.minimum.at(first, trace.node, trace.start)
    return first


def down_periods(trace: AvailabilityTrace):
    """Maximal down periods of every node as ``(node, start, end)`` arrays.

    A node is down between its first interval and the end of the span
    whenever no up interval covers it.
    """
    end_of_span = trace.span[1]
    first = _first_seen(trace)
    m = trace.up
    un, us, ue = trace.node[m], trace.start[m], trace.end[m]
    parts_n, parts_s, parts_e = [], [], []
    same = un[1:] == un[:-1]
    parts_n.append(un[1:][same])
    parts_s.append(ue[:-1][same])
    parts_e.append(us[1:][same])
    # leading and trailing downtime
    is_first = np.ones(len(un), dtype=bool)
    is_first[1:] = ~same
    is_last = np.ones(len(un), dtype=bool)
    is_last[:-1] = ~same
    parts_n += [un[is_first], un[is_last]]
    parts_s += [first[un[is_first]], ue[is_last]]
    parts_e += [us[is_first], np.full(int(is_last.sum()), end_of_span)]
    # nodes that are never up
    seen = np.isfinite(first)
    never = np.flatnonzero(seen & ~np.isin(np.arange(len(first)), un))
    parts_n.append(never)
    parts_s.append(first[never])
    parts_e.append(np.full(len(never), end_of_span))
    n = np.concatenate(parts_n).astype(np.int64)
    s = np.concatenate(parts_s)
    e = np.concatenate(parts_e)
    keep = e > s
    return n[keep], s[keep], e[keep]


def _step_integral(starts, ends, span):
    """Breakpoints, cumulative integral and level of an interval-count step function."""
    times = np.concatenate([starts, ends, [span[0], span[1]]])
    delta = np.concatenate([np.ones(len(starts)), -np.ones(len(ends)), [0, 0]])
    order = np.argsort(times, kind="stable")
    times, delta = times[order], delta[order]
    level = np.cumsum(delta)
    cum = np.concatenate([[0.0], np.cumsum(np.diff(times) * level[:-1])])
    return times, cum, level


def _integral_at(times, cum, level, t):
    i = np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 1)
    return cum[i] + (t - times[i]) * level[i]


def _filled(trace: AvailabilityTrace, drop=None) -> AvailabilityTrace:
    """Up intervals plus one explicit row per down period.

    Down periods flagged in ``drop`` are turned into up time.
    """
    n, s, e = down_periods(trace)
    if drop is None:
        drop = np.zeros(len(n), dtype=bool)
    m = trace.up
    return AvailabilityTrace(
        trace.names,
        np.concatenate([trace.node[m], n]),
        np.concatenate([trace.start[m], s]),
        np.concatenate([trace.end[m], e]),
        np.concatenate([np.ones(int(m.sum()), dtype=bool), drop]),
        trace.span,
        trace.period,
    )


def _mass_outages(trace: AvailabilityTrace) -> np.ndarray:
    """Flags, per down period, whether fewer than half the usual nodes were up."""
    lo, hi = trace.span
    m = trace.up
    times, cum, level = _step_integral(trace.start[m], trace.end[m], trace.span)
    overall = (_integral_at(times, cum, level, hi) - _integral_at(times, cum, level, lo)) / (hi - lo)
    _, s, e = down_periods(trace)
    avg = (_integral_at(times, cum, level, e) - _integral_at(times, cum, level, s)) / (e - s)
    return avg < overall / 2


def clean_planetlab(trace: AvailabilityTrace) -> AvailabilityTrace:
    """Treat a node's downtime as uptime when it coincides with a mass outage.

    A down period is dropped when the average number of nodes up during it
    is below half the all-time average number of nodes up.  Passes repeat
    until nothing changes, which makes the operation idempotent.  The result
    has an explicit row for every remaining down period.
    """
    current = _filled(trace)
    if trace.span[1] <= trace.span[0] or not len(trace.node):
        return current
    while True:
        drop = _mass_outages(current)
        if not drop.any():
            return current
        current = _filled(current, drop)


# -- estimation -------------------------------------------------------------


@dataclass
class TraceSummary:
    f: float
    a: float
    mean_nodes_up: float
    span_days: float
    timeout_hours: float
    nodes: int
    failures: int
    live_node_days: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def estimate(trace: AvailabilityTrace, timeout_hours: float = DEFAULT_TIMEOUT_HOURS) -> TraceSummary:
    """Estimate the per-day permanent failure rate and live-node availability.

    A node down for longer than the timeout is taken to have failed
    permanently when that downtime began, and is ignored afterwards.
    ``f`` is failures per live node-day, capped at 1; ``a`` is the time
    average of the fraction of live nodes that are up.
    """
    if timeout_hours <= 0:
        raise ValueError("timeout must be positive")
    lo, hi = trace.span
    nnodes = len(trace.names)
    if nnodes == 0 or hi <= lo:
        return TraceSummary(0.0, 1.0 if nnodes else 0.0, 0.0, trace.span_days, timeout_hours, nnodes, 0, 0.0)
    timeout = timeout_hours * 3600.0
    first = _first_seen(trace)
    n, s, e = down_periods(trace)
    perm = e - s > timeout
    fail_at = np.full(nnodes, np.inf)
    np.minimum.at(fail_at, n[perm], s[perm])
    failures = int(np.isfinite(fail_at).sum())
    live_end = np.minimum(fail_at, hi)
    live_days = float(np.sum(live_end - first) / DAY)
    # a per-day failure fraction lives in [0, 1]; failures with no live time
    # (nodes down from their first appearance) saturate it
    if live_days > 0:
        f = min(failures / live_days, 1.0)
    else:
        f = 1.0 if failures else 0.0

    m = trace.up
    un, us, ue = trace.node[m], trace.start[m], np.minimum(trace.end[m], live_end[trace.node[m]])
    ok = ue > us
    times = np.concatenate([first, live_end, us[ok], ue[ok]])
    d_live = np.concatenate([np.ones(nnodes), -np.ones(nnodes), np.zeros(2 * int(ok.sum()))])
    d_up = np.concatenate([np.zeros(2 * nnodes), np.ones(int(ok.sum())), -np.ones(int(ok.sum()))])
    order = np.argsort(times, kind="stable")
    times, live, upc = times[order], np.cumsum(d_live[order]), np.cumsum(d_up[order])
    seg = np.diff(times)
    live, upc = live[:-1], upc[:-1]
    covered = (live > 0) & (seg > 0)
    total = seg[covered].sum()
    a = float(np.sum(seg[covered] * upc[covered] / live[covered]) / total) if total > 0 else 0.0

    mean_up = float(np.sum(trace.end[m] - trace.start[m]) / (hi - lo))
    return TraceSummary(f, a, mean_up, trace.span_days, timeout_hours, nnodes, failures, live_days)


# -- synthetic traces ---------------------------------------------------------


def synthetic_trace(
    nodes: int,
    days: float,
    p_fail: float,
    a: float,
    seed: int = 0,
    mean_down_hours: float = 2.0,
    max_down_hours: float = 12.0,
) -> AvailabilityTrace:
    """Trace with known churn parameters and a steady population.

    There are ``nodes`` slots.  The node in a slot fails permanently at the
    end of each day of its life with probability ``p_fail`` and is replaced
    at that moment by a fresh node, so about ``nodes`` nodes are live at any
    time.  Node ids are ``n<slot>.<generation>``.  While alive a node
    alternates between up and down spells; down spells are exponential with
    mean ``mean_down_hours`` capped at ``max_down_hours`` (below any sane
    timeout) and up spells are exponential with the mean that makes the
    long-run availability ``a``.  Each node starts in the up state with
    probability ``a``.
    """
    rng = np.random.default_rng(seed)
    span = days * DAY
    md = mean_down_hours * 3600.0
    cap = max_down_hours * 3600.0
    mean_down = md * (1 - math.exp(-cap / md))
    mean_up = mean_down * a / (1 - a) if a < 1 else math.inf
    names: list[str] = []
    out_n, out_s, out_e, out_u = [], [], [], []

    def add(v, s, e, u):
        out_n.append(np.full(len(s), v)); out_s.append(np.asarray(s, dtype=float))
        out_e.append(np.asarray(e, dtype=float)); out_u.append(np.asarray(u, dtype=bool))

    for slot in range(nodes):
        born, gen = 0.0, 0
        while born < span:
            v = len(names)
            names.append(f"n{slot}.{gen}")
            life_days = rng.geometric(p_fail) if p_fail > 0 else math.inf
            death = min(born + life_days * DAY, span)
            if math.isinf(mean_up):
                add(v, [born], [death], [True])
            else:
                t, state = born, rng.random() < a
                while t < death:
                    est = int((death - t) / (mean_up + mean_down) * 1.3) + 8
                    ups = rng.exponential(mean_up, est)
                    downs = np.minimum(rng.exponential(md, est), cap)
                    spells = np.empty(2 * est)
                    first, second = (ups, downs) if state else (downs, ups)
                    spells[0::2], spells[1::2] = first, second
                    bounds = t + np.concatenate([[0.0], np.cumsum(spells)])
                    states = np.empty(2 * est, dtype=bool)
                    states[0::2], states[1::2] = state, not state
                    s, e = bounds[:-1], np.minimum(bounds[1:], death)
                    keep = s < death
                    add(v, s[keep], e[keep], states[keep])
                    t = bounds[-1]
            if death < span:
                add(v, [death], [span], [False])
            born, gen = death, gen + 1
    node = np.concatenate(out_n)
    start = np.concatenate(out_s)
    end = np.concatenate(out_e)
    up = np.concatenate(out_u)
    ok = end > start
    return AvailabilityTrace(names, node[ok], start[ok], end[ok], up[ok], (0.0, span), None)
