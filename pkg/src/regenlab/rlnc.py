"""Regenerating codes built from random linear network coding.

The file is ``M_u`` source symbol vectors.  Every stored or transmitted
packet is a linear combination of them over GF(2^8) or GF(2^16) and carries
its coefficient vector.  A node stores ``alpha_u`` packets; on repair each of
``d`` helpers sends ``beta_u`` fresh combinations of what it stores, and the
newcomer keeps ``alpha_u`` fresh combinations of the ``d * beta_u`` packets
it received.

Seeding
-------
All randomness derives from one 64-bit seed.  A draw for a given purpose
uses ``numpy.random.SeedSequence(seed, spawn_key=key)`` with a PCG64
generator, where ``key`` is:

    (0, node)              initial coefficients of an initial node
    (1, newcomer, helper)  parity packets a helper sends to a newcomer
    (2, newcomer)          the newcomer's own re-mixing
    (3,)                   source data for simulations
    (4, round)             collector sampling in round ``round``
    (5, round)             failure / helper selection in round ``round``

so identical (params, history, seed) give identical packets bit for bit,
independent of evaluation order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .gf import GF, field
from .tradeoff import SystemParams

DEFAULT_UNIT_CAP = 1 << 12

KEY_INIT, KEY_HELPER, KEY_NEWCOMER, KEY_SOURCE, KEY_SAMPLE, KEY_CHURN = range(6)


def rng_for(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


class InsufficientHelpers(ValueError):
    pass


class RankDeficient(ArithmeticError):
    """Collected coefficient rows do not span the source space."""

    def __init__(self, rank: int, needed: int):
        super().__init__(f"coefficient rank {rank} < {needed}")
        self.rank = rank
        self.needed = needed


@dataclass(frozen=True)
class SymbolUnit:
    """Integral sub-packetization of a rational (M, alpha, beta) point."""

    M: int
    alpha: int
    beta: int
    size: Fraction  # base units per symbol

    @classmethod
    def for_params(cls, params: SystemParams, cap: int = DEFAULT_UNIT_CAP) -> "SymbolUnit":
        M, alpha, beta = params.M, params.alpha, params.beta
        if min(M, alpha, beta) <= 0:
            raise ValueError("M, alpha and beta must be positive")
        scale = math.lcm(M.denominator, alpha.denominator, beta.denominator)
        counts = [int(x * scale) for x in (M, alpha, beta)]
        g = math.gcd(*counts)
        m_u, a_u, b_u = (c // g for c in counts)
        if m_u > cap:
            raise ValueError(f"point needs {m_u} source symbols, cap is {cap}")
        return cls(m_u, a_u, b_u, M / m_u)


@dataclass
class CodedPacket:
    coefficients: np.ndarray
    payload: np.ndarray | None = None


@dataclass
class NodeState:
    """Packets held by one storage node, one row per packet."""

    node: int
    coeffs: np.ndarray
    payload: np.ndarray | None = None
    active: bool = True

    @property
    def packets(self) -> list[CodedPacket]:
        return [
            CodedPacket(self.coeffs[i], None if self.payload is None else self.payload[i])
            for i in range(self.coeffs.shape[0])
        ]


class Repair(NamedTuple):
    node: NodeState
    bandwidth: int  # symbols downloaded, excluding coefficient headers
    overhead: int  # coefficient header entries downloaded


class RegeneratingCode:
    """A random linear regenerating code for one (n, k, d, alpha, beta) point."""

    def __init__(self, params: SystemParams, bits: int = 8, unit: SymbolUnit | None = None):
        self.params = params
        self.gf: GF = field(bits)
        self.unit = unit or SymbolUnit.for_params(params)
        u = self.unit
        if u.alpha * params.k < u.M:
            raise ValueError("k nodes cannot hold the file: k * alpha < M")
        if u.alpha > params.d * u.beta:
            warnings.warn(
                "alpha exceeds the repair download; a newcomer's stored rank is "
                "capped at d*beta",
                stacklevel=2,
            )

    def _mix(self, rng, rows: int, node_coeffs, node_payload):
        mixing = self.gf.random(rng, (rows, node_coeffs.shape[0]))
        coeffs = self.gf.matmul(mixing, node_coeffs)
        payload = None if node_payload is None else self.gf.matmul(mixing, node_payload)
        return coeffs, payload

    def initial_encode(self, seed: int, source=None) -> list[NodeState]:
        """Store ``alpha_u`` random combinations of the source on nodes 1..n.

        ``source`` is an ``(M_u, L)`` symbol array, or ``None`` to track
        coefficients only.
        """
        u = self.unit
        if source is not None:
            source = np.asarray(source, dtype=self.gf.dtype)
            if source.ndim != 2 or source.shape[0] != u.M:
                raise ValueError(f"source must have shape ({u.M}, L)")
        nodes = []
        for node in range(1, self.params.n + 1):
            coeffs = self.gf.random(rng_for(seed, KEY_INIT, node), (u.alpha, u.M))
            payload = None if source is None else self.gf.matmul(coeffs, source)
            nodes.append(NodeState(node, coeffs, payload))
        return nodes

    def repair(self, seed: int, survivors: Sequence[NodeState], newcomer: int) -> Repair:
        u, d = self.unit, self.params.d
        helpers = [s for s in survivors if s.active]
        if len(helpers) < d:
            raise InsufficientHelpers(f"need {d} active helpers, got {len(helpers)}")
        helpers = helpers[:d]
        got_c, got_p = [], []
        for h in helpers:
            c, p = self._mix(rng_for(seed, KEY_HELPER, newcomer, h.node), u.beta, h.coeffs, h.payload)
            got_c.append(c)
            got_p.append(p)
        recv_c = np.concatenate(got_c)
        recv_p = None if any(p is None for p in got_p) else np.concatenate(got_p)
        coeffs, payload = self._mix(rng_for(seed, KEY_NEWCOMER, newcomer), u.alpha, recv_c, recv_p)
        sent = d * u.beta
        return Repair(NodeState(newcomer, coeffs, payload), sent, sent * u.M)

    def coefficient_rank(self, nodes: Sequence[NodeState]) -> int:
        return self.gf.rank(np.concatenate([n.coeffs for n in nodes]))

    def decodable(self, nodes: Sequence[NodeState]) -> bool:
        return self.coefficient_rank(nodes) == self.unit.M

    def collect_and_decode(self, nodes: Sequence[NodeState]):
        """Recover the source from the packets on ``nodes``.

        Returns the ``(M_u, L)`` source array, or ``None`` when the nodes carry
        coefficients only and the rank is full.  Raises :class:`RankDeficient`
        when the coefficient rows do not span the source space.
        """
        m_u = self.unit.M
        coeffs = np.concatenate([n.coeffs for n in nodes])
        if any(n.payload is None for n in nodes):
            r = self.gf.rank(coeffs)
            if r < m_u:
                raise RankDeficient(r, m_u)
            return None
        payload = np.concatenate([n.payload for n in nodes])
        red, pivots = self.gf.row_reduce(np.concatenate([coeffs, payload], axis=1), ncols=m_u)
        if len(pivots) < m_u:
            raise RankDeficient(len(pivots), m_u)
        return red[:m_u, m_u:]
