"""Storage / repair-bandwidth tradeoff for regenerating codes.

Everything here is exact: inputs are coerced to :class:`fractions.Fraction`
and every returned quantity is a ``Fraction`` (or ``int``).  Floats are
accepted as inputs but converted through their decimal ``str`` form so that
``1.5`` means 3/2 rather than the nearest binary double.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

MSR = "MSR"
MBR = "MBR"
INTERIOR = "interior"
INFEASIBLE = "infeasible"


class InfeasibleBandwidth(ValueError):
    """The repair bandwidth is below the minimum for which any storage works."""


def frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class SystemParams:
    """The tuple (n, k, d, M, alpha, beta).

    ``gamma = d * beta`` is derived.  If ``d < k`` the reconstruction degree
    is lowered to ``d`` (any d nodes then carry the same flow condition as any
    k) and ``k_normalized`` records that this happened.
    """

    n: int
    k: int
    d: int
    M: Fraction = Fraction(1)
    alpha: Fraction = Fraction(0)
    beta: Fraction = Fraction(0)
    k_normalized: bool = field(default=False, compare=False)

    def __post_init__(self):
        for name in ("n", "k", "d"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v:
                raise ValueError(f"{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        for name in ("M", "alpha", "beta"):
            v = frac(getattr(self, name))
            if v < 0:
                raise ValueError(f"{name} must be nonnegative, got {v}")
            object.__setattr__(self, name, v)
        n, k, d = self.n, self.k, self.d
        if not 1 <= k <= n:
            raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
        if not 1 <= d <= n - 1:
            raise ValueError(f"need 1 <= d <= n-1, got d={d}, n={n}")
        if d < k:
            object.__setattr__(self, "k", d)
            object.__setattr__(self, "k_normalized", True)

    @classmethod
    def from_gamma(cls, n, k, d, M=1, alpha=0, gamma=0):
        return cls(n, k, d, M, alpha, frac(gamma) / d)

    @property
    def gamma(self) -> Fraction:
        return self.d * self.beta

    def with_point(self, alpha, gamma) -> "SystemParams":
        return SystemParams.from_gamma(self.n, self.k, self.d, self.M, alpha, gamma)


@dataclass(frozen=True)
class TradeoffPoint:
    alpha: Fraction
    gamma: Fraction
    regime: str


def _check_index(params: SystemParams, i: int):
    if not 0 <= i <= params.k - 1:
        raise ValueError(f"index {i} outside [0, {params.k - 1}]")


def f_break(params: SystemParams, i: int) -> Fraction:
    """Bandwidth at which the i-th linear piece of the threshold starts."""
    _check_index(params, i)
    k, d, M = params.k, params.d, params.M
    return Fraction(2 * d) * M / ((2 * k - i - 1) * i + 2 * k * (d - k + 1))


def g_break(params: SystemParams, i: int) -> Fraction:
    _check_index(params, i)
    k, d = params.k, params.d
    return Fraction((2 * d - 2 * k + i + 1) * i, 2 * d)


def gamma_min(params: SystemParams) -> Fraction:
    k, d = params.k, params.d
    return Fraction(2 * d) * params.M / (2 * k * d - k * k + k)


def threshold_alpha(params: SystemParams, gamma) -> Fraction:
    """Minimum per-node storage alpha*(d, gamma), closed form.

    Branch ``i`` covers ``gamma`` in ``[f(i), f(i-1))``; ``gamma >= f(0)``
    gives ``M/k``.
    """
    gamma = frac(gamma)
    k, M = params.k, params.M
    if gamma < gamma_min(params):
        raise InfeasibleBandwidth(f"gamma={gamma} < gamma_min={gamma_min(params)}")
    if gamma >= f_break(params, 0):
        return M / k
    for i in range(1, k):
        if gamma >= f_break(params, i):
            return (M - g_break(params, i) * gamma) / (k - i)
    raise AssertionError("unreachable: gamma >= f(k-1) was checked")


@dataclass(frozen=True)
class PiecewiseCapacity:
    """Cut capacity ``C(alpha) = sum_i min(b_i, alpha)`` for fixed gamma."""

    breakpoints: tuple[Fraction, ...]

    @classmethod
    def for_gamma(cls, params: SystemParams, gamma) -> "PiecewiseCapacity":
        gamma = frac(gamma)
        k, d = params.k, params.d
        return cls(tuple((1 - Fraction(k - 1 - i, d)) * gamma for i in range(k)))

    def __call__(self, alpha) -> Fraction:
        alpha = frac(alpha)
        return sum((min(b, alpha) for b in self.breakpoints), Fraction(0))

    @property
    def maximum(self) -> Fraction:
        return sum(self.breakpoints, Fraction(0))

    def inverse(self, target) -> Fraction:
        """Smallest alpha with ``C(alpha) >= target``."""
        target = frac(target)
        if target > self.maximum:
            raise InfeasibleBandwidth(f"capacity {self.maximum} < {target}")
        k = len(self.breakpoints)
        below = Fraction(0)  # sum of b_j already saturated
        for j, b in enumerate(self.breakpoints):
            # on (b_{j-1}, b_j]: C = below + (k - j) * alpha
            if below + (k - j) * b >= target:
                return max((target - below) / (k - j), Fraction(0))
            below += b
        raise AssertionError("unreachable: target <= maximum was checked")


def threshold_alpha_numeric(params: SystemParams, gamma) -> Fraction:
    """alpha*(d, gamma) by inverting the piecewise cut capacity directly.

    Independent of :func:`threshold_alpha`; used to cross-check it.
    """
    gamma = frac(gamma)
    if gamma <= 0:
        raise InfeasibleBandwidth("gamma must be positive")
    return PiecewiseCapacity.for_gamma(params, gamma).inverse(params.M)


def msr_point(params: SystemParams) -> TradeoffPoint:
    k, d, M = params.k, params.d, params.M
    return TradeoffPoint(M / k, M * d / (k * (d - k + 1)), MSR)


def mbr_point(params: SystemParams) -> TradeoffPoint:
    g = gamma_min(params)
    return TradeoffPoint(g, g, MBR)


def classify(params: SystemParams, alpha, gamma) -> TradeoffPoint:
    alpha, gamma = frac(alpha), frac(gamma)
    if gamma < gamma_min(params) or alpha < threshold_alpha(params, gamma):
        return TradeoffPoint(alpha, gamma, INFEASIBLE)
    msr, mbr = msr_point(params), mbr_point(params)
    if (alpha, gamma) == (msr.alpha, msr.gamma):
        regime = MSR
    elif (alpha, gamma) == (mbr.alpha, mbr.gamma):
        regime = MBR
    else:
        regime = INTERIOR
    return TradeoffPoint(alpha, gamma, regime)


def delta_msr(n: int, k: int) -> Fraction:
    """Repair traffic of an MSR code (d = n-1) relative to the fragment size."""
    if n <= k:
        raise ValueError(f"need n > k, got n={n}, k={k}")
    return Fraction(n - 1, n - k)


def delta_mbr(n: int, k: int) -> Fraction:
    if n <= k:
        raise ValueError(f"need n > k, got n={n}, k={k}")
    return Fraction(2 * (n - 1), 2 * n - k - 1)


def msr_bandwidth_factor(n: int, k: int) -> Fraction:
    """MSR maintenance bandwidth per unit time in units of f*M."""
    return Fraction(n, k) * delta_msr(n, k)


def n_opt(k: int) -> int:
    """Redundancy n minimising the MSR maintenance bandwidth.

    Ties between the two integers around ``k + sqrt(k^2 - k)`` go to the
    smaller n.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    lo = k + math.isqrt(k * k - k)
    candidates = [n for n in (lo, lo + 1) if n > k] or [k + 1]
    return min(candidates, key=lambda n: (msr_bandwidth_factor(n, k), n))


def capacity(params: SystemParams) -> Fraction:
    """Flow guaranteed to any collector: sum of min((d-i) beta, alpha)."""
    d, k, alpha, beta = params.d, params.k, params.alpha, params.beta
    return sum((min((d - i) * beta, alpha) for i in range(min(d, k))), Fraction(0))
