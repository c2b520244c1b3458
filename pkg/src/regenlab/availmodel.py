"""Analytical availability / maintenance-bandwidth model.

A fraction ``f`` of the nodes holding file data fail permanently per day,
and each remaining node is independently available with probability ``a``.
For each redundancy strategy we compute total storage, expected repair
traffic per day and the probability the file cannot be reconstructed.
Regenerating codes use ``d = n - 1``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction

from .tradeoff import delta_mbr, delta_msr
from .traceio import TABLE_I

STRATEGIES = ("replication", "ideal", "hybrid", "msr", "mbr")
CSV_COLUMNS = (
    "strategy",
    "n",
    "k",
    "R",
    "unavailability",
    "bandwidth_bytes_per_day",
    "storage_bytes",
    "nearest",
)


@dataclass(frozen=True)
class ChurnModel:
    f: float  # permanent failures per node per day
    a: float  # availability of a live node

    def __post_init__(self):
        if not 0 <= self.f <= 1:
            raise ValueError(f"f must lie in [0, 1], got {self.f}")
        if not 0 < self.a <= 1:
            raise ValueError(f"a must lie in (0, 1], got {self.a}")

    @classmethod
    def from_trace(cls, name: str) -> "ChurnModel":
        try:
            row = TABLE_I[name.lower()]
        except KeyError:
            raise KeyError(f"unknown trace {name!r}; known: {', '.join(TABLE_I)}") from None
        return cls(row.f, row.a)


@dataclass(frozen=True)
class StrategyPoint:
    strategy: str
    n: int
    k: int
    R: Fraction
    unavailability: float
    bandwidth: float
    storage: float


def u_ideal(n: int, k: int, a):
    """P(fewer than k of n independent nodes are up), summed term by term.

    Each binomial term is formed in log space and the terms are added with
    ``math.fsum``.  Passing ``a`` as a ``Fraction`` gives an exact result.
    """
    if k <= 0:
        return 0 if not isinstance(a, Fraction) else Fraction(0)
    if k > n:
        return 1 if not isinstance(a, Fraction) else Fraction(1)
    if isinstance(a, Fraction):
        return sum(math.comb(n, i) * a**i * (1 - a) ** (n - i) for i in range(k))
    if a == 1:
        return 0.0
    if a == 0:
        return 1.0
    la, lb = math.log(a), math.log1p(-a)
    lg = math.lgamma
    terms = [
        math.exp(lg(n + 1) - lg(i + 1) - lg(n - i + 1) + i * la + (n - i) * lb)
        for i in range(k)
    ]
    return min(math.fsum(terms), 1.0)


def replication_point(M, R: int, model: ChurnModel) -> StrategyPoint:
    if R < 1 or int(R) != R:
        raise ValueError("R must be a positive integer")
    storage = R * M
    return StrategyPoint("replication", R, 1, Fraction(R), (1 - model.a) ** R, model.f * storage, storage)


def _integral(x: Fraction, what: str) -> int:
    if x.denominator != 1:
        raise ValueError(f"{what} = {x} is not an integer")
    return int(x)


def ideal_point(M, k: int, R, model: ChurnModel) -> StrategyPoint:
    R = Fraction(R)
    n = _integral(k * R, "n = k*R")
    storage = float(R) * M
    return StrategyPoint("ideal", n, k, R, u_ideal(n, k, model.a), model.f * storage, storage)


def hybrid_point(M, k: int, R, model: ChurnModel) -> StrategyPoint:
    """One full replica plus an (n, k) code with ``n = k (R - 1)``."""
    R = Fraction(R)
    if R < 2:
        raise ValueError("hybrid needs R >= 2")
    n = _integral(k * (R - 1), "n = k*(R-1)")
    storage = float(R) * M
    unavail = (1 - model.a) * u_ideal(n, k, model.a)
    return StrategyPoint("hybrid", n, k, R, unavail, model.f * storage, storage)


def hybrid_point_n(M, n: int, k: int, model: ChurnModel) -> StrategyPoint:
    return hybrid_point(M, k, 1 + Fraction(n, k), model)


def msr_point_model(M, n: int, k: int, model: ChurnModel) -> StrategyPoint:
    R = Fraction(n, k)
    storage = float(R) * M
    bandwidth = model.f * storage * float(delta_msr(n, k))
    return StrategyPoint("msr", n, k, R, u_ideal(n, k, model.a), bandwidth, storage)


def mbr_point_model(M, n: int, k: int, model: ChurnModel) -> StrategyPoint:
    """MBR with per-node storage ``(M/k) * delta_MBR``, so n times that in total."""
    R = Fraction(n, k)
    storage = float(R * delta_mbr(n, k)) * M
    return StrategyPoint("mbr", n, k, R, u_ideal(n, k, model.a), model.f * storage, storage)


def point(strategy: str, M, n: int, k: int, model: ChurnModel) -> StrategyPoint:
    """Strategy point indexed by its integral node count ``n``."""
    if strategy == "replication":
        return replication_point(M, n, model)
    if strategy == "ideal":
        return ideal_point(M, k, Fraction(n, k), model)
    if strategy == "hybrid":
        return hybrid_point_n(M, n, k, model)
    if strategy == "msr":
        return msr_point_model(M, n, k, model)
    if strategy == "mbr":
        return mbr_point_model(M, n, k, model)
    raise ValueError(f"unknown strategy {strategy!r}")


def _node_range(strategy: str, k: int, r_max) -> range:
    if strategy == "replication":
        return range(1, int(r_max) + 1)
    if strategy == "hybrid":
        # erasure-coded part of n = k (R - 1) fragments
        return range(k, int(k * (Fraction(r_max) - 1)) + 1)
    return range(k + 1, int(k * Fraction(r_max)) + 1)


def _log_distance(u: float, target: float) -> float:
    if u <= 0:
        return math.inf
    return abs(math.log(u) - math.log(target))


@dataclass
class Sweep:
    strategy: str
    points: list[StrategyPoint]
    nearest: StrategyPoint | None


def sweep(strategy: str, M, k: int, model: ChurnModel, target: float = 1e-4, r_max=10) -> Sweep:
    """All feasible (integral-n) points with redundancy up to ``r_max``.

    ``nearest`` is the point whose unavailability is closest to ``target``
    on a log scale; ties go to the smaller storage.
    """
    pts = [point(strategy, M, n, k, model) for n in _node_range(strategy, k, r_max)]
    nearest = None
    if pts:
        nearest = min(pts, key=lambda p: (_log_distance(p.unavailability, target), p.storage))
        if math.isinf(_log_distance(nearest.unavailability, target)):
            nearest = None
    return Sweep(strategy, pts, nearest)


def frontier_csv(sweeps: list[Sweep]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for s in sweeps:
        for p in s.points:
            w.writerow([
                p.strategy,
                p.n,
                p.k,
                f"{float(p.R):.12g}",
                f"{p.unavailability:.12g}",
                f"{p.bandwidth:.12g}",
                f"{p.storage:.12g}",
                int(p is s.nearest),
            ])
    return buf.getvalue()


@dataclass
class Comparison:
    """Regenerating codes against Hybrid at the points nearest a target."""

    trace: str
    hybrid: StrategyPoint
    msr: StrategyPoint
    mbr: StrategyPoint

    @property
    def msr_bandwidth_excess(self) -> float:
        return self.msr.bandwidth / self.hybrid.bandwidth - 1

    @property
    def msr_storage_saving(self) -> float:
        return 1 - self.msr.storage / self.hybrid.storage

    @property
    def mbr_bandwidth_saving(self) -> float:
        return 1 - self.mbr.bandwidth / self.hybrid.bandwidth


def compare_at_target(trace: str, k: int = 7, target: float = 1e-4, M=1.0, r_max=10) -> Comparison:
    model = ChurnModel.from_trace(trace)
    near = {s: sweep(s, M, k, model, target, r_max).nearest for s in ("hybrid", "msr", "mbr")}
    return Comparison(trace, near["hybrid"], near["msr"], near["mbr"])
