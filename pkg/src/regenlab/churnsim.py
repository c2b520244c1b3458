"""Long failure/repair runs of a regenerating code.

Each round one active node fails and a newcomer is repaired from ``d``
survivors.  After every round a set of ``k``-node collectors tries to decode,
and optionally the realized information flow graph is checked to give every
sampled collector a min-cut of at least ``M``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import flowgraph
from .rlnc import KEY_CHURN, KEY_SAMPLE, KEY_SOURCE, RegeneratingCode, rng_for
from .tradeoff import SystemParams

FAILURE_POLICIES = ("uniform-random", "round-robin", "oldest-first")
HELPER_POLICIES = ("all-active-random-d", "adversarial")
EXHAUSTIVE_N = 8


def fstr(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass
class SimConfig:
    params: SystemParams
    rounds: int = 100
    failure: str = "uniform-random"
    helpers: str = "all-active-random-d"
    seed: int = 0
    collectors: int = 20  # per round; ignored when n <= EXHAUSTIVE_N
    mincut_every: int = 0  # 0 disables the flow-graph cross-check
    mincut_samples: int = 1
    bits: int = 8
    payload: int = 0  # symbols per packet, 0 tracks coefficients only

    def __post_init__(self):
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")
        if self.failure not in FAILURE_POLICIES:
            raise ValueError(f"unknown failure policy {self.failure!r}")
        if self.helpers not in HELPER_POLICIES:
            raise ValueError(f"unknown helper policy {self.helpers!r}")
        if self.params.d > self.params.n - 1:
            raise ValueError("d must not exceed n-1")


@dataclass
class RoundRecord:
    round: int
    failed: int
    newcomer: int
    helpers: list[int]
    bandwidth_units: int
    overhead_symbols: int
    decode_trials: int
    decode_successes: int
    mincut: list[dict] = field(default_factory=list)


@dataclass
class SimReport:
    config: dict
    params: dict
    unit: dict
    initial: dict
    rounds: list[RoundRecord]
    cumulative_bandwidth_units: int
    bandwidth_per_repair: str | None
    decode_trials: int
    decode_successes: int
    mincut_checks: int
    mincut_violations: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _collectors(active: list[int], k: int, count: int, rng) -> list[tuple[int, ...]]:
    if len(active) <= EXHAUSTIVE_N:
        return list(itertools.combinations(active, k))
    total = math.comb(len(active), k)
    if total <= 100_000:
        combos = list(itertools.combinations(active, k))
        if count >= total:
            return combos
        picks = np.sort(rng.choice(total, size=count, replace=False))
        return [combos[i] for i in picks]
    return [tuple(sorted(rng.choice(active, size=k, replace=False).tolist())) for _ in range(count)]


class _Run:
    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        p = cfg.params
        self.code = RegeneratingCode(p, bits=cfg.bits)
        u = self.code.unit
        self.source = None
        if cfg.payload:
            self.source = self.code.gf.random(rng_for(cfg.seed, KEY_SOURCE), (u.M, cfg.payload))
        self.nodes = {s.node: s for s in self.code.initial_encode(cfg.seed, self.source)}
        self.slots = list(range(1, p.n + 1))
        self.graph = flowgraph.InfoFlowGraph(p) if cfg.mincut_every else None

    def decode_ok(self, subset) -> bool:
        nodes = [self.nodes[v] for v in subset]
        if self.source is None:
            return self.code.decodable(nodes)
        try:
            out = self.code.collect_and_decode(nodes)
        except ArithmeticError:
            return False
        return bool(np.array_equal(out, self.source))

    def sample(self, r: int):
        active = sorted(self.nodes)
        subsets = _collectors(active, self.cfg.params.k, self.cfg.collectors, rng_for(self.cfg.seed, KEY_SAMPLE, r))
        ok = sum(self.decode_ok(s) for s in subsets)
        return subsets, ok

    def step(self, r: int) -> RoundRecord:
        cfg, p = self.cfg, self.cfg.params
        rng = rng_for(cfg.seed, KEY_CHURN, r)
        active = sorted(self.nodes)
        if cfg.failure == "uniform-random":
            failed = int(rng.choice(active))
        elif cfg.failure == "round-robin":
            # newcomers take over the failed slot, so this visits slots cyclically
            failed = self.slots[(r - 1) % p.n]
        else:
            failed = active[0]
        survivors = [v for v in active if v != failed]
        if cfg.helpers == "adversarial":
            helpers = survivors[-p.d:]
        else:
            helpers = sorted(rng.choice(survivors, size=p.d, replace=False).tolist())
        newcomer = p.n + r
        rep = self.code.repair(cfg.seed, [self.nodes[h] for h in helpers], newcomer)
        del self.nodes[failed]
        self.nodes[newcomer] = rep.node
        self.slots[self.slots.index(failed)] = newcomer
        if self.graph is not None:
            self.graph.fail(failed)
            self.graph.join(newcomer, helpers)

        subsets, ok = self.sample(r)
        rec = RoundRecord(r, failed, newcomer, helpers, rep.bandwidth, rep.overhead, len(subsets), ok)
        if self.graph is not None and r % cfg.mincut_every == 0:
            for s in subsets[: cfg.mincut_samples]:
                value = flowgraph.min_cut(self.graph, s)
                rec.mincut.append({"collector": list(s), "value": fstr(value), "ok": value >= p.M})
        return rec


def _per_repair(records, size: Fraction) -> str | None:
    """Measured download per repair in base units, if the same every round."""
    seen = {r.bandwidth_units for r in records}
    if len(seen) != 1:
        return None
    return fstr(seen.pop() * size)


def run(cfg: SimConfig) -> SimReport:
    p = cfg.params
    sim = _Run(cfg)
    u = sim.code.unit
    subsets, ok = sim.sample(0)
    records = [sim.step(r) for r in range(1, cfg.rounds + 1)]
    checks = [c for rec in records for c in rec.mincut]
    return SimReport(
        config={
            "rounds": cfg.rounds,
            "failure": cfg.failure,
            "helpers": cfg.helpers,
            "seed": cfg.seed,
            "collectors": cfg.collectors,
            "mincut_every": cfg.mincut_every,
            "mincut_samples": cfg.mincut_samples,
            "bits": cfg.bits,
            "payload": cfg.payload,
        },
        params={
            "n": p.n,
            "k": p.k,
            "d": p.d,
            "M": fstr(p.M),
            "alpha": fstr(p.alpha),
            "beta": fstr(p.beta),
            "gamma": fstr(p.gamma),
        },
        unit={"M": u.M, "alpha": u.alpha, "beta": u.beta, "size": fstr(u.size)},
        initial={"decode_trials": len(subsets), "decode_successes": ok},
        rounds=records,
        cumulative_bandwidth_units=sum(r.bandwidth_units for r in records),
        bandwidth_per_repair=_per_repair(records, u.size),
        decode_trials=sum(r.decode_trials for r in records),
        decode_successes=sum(r.decode_successes for r in records),
        mincut_checks=len(checks),
        mincut_violations=sum(not c["ok"] for c in checks),
    )
