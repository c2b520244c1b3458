import csv
import io
import math
from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import given, strategies as st

from regenlab import availmodel as am
from regenlab.availmodel import ChurnModel
from regenlab.tradeoff import delta_mbr, delta_msr

mpmath.mp.dps = 50


def u_oracle(n, k, a):
    a = mpmath.mpf(a)
    return mpmath.fsum(mpmath.binomial(n, i) * a**i * (1 - a) ** (n - i) for i in range(k))


def upper_oracle(n, k, a):
    a = mpmath.mpf(a)
    return mpmath.fsum(mpmath.binomial(n, i) * a**i * (1 - a) ** (n - i) for i in range(k, n + 1))


def rel_close(x, y, tol=1e-12):
    return abs(x - y) <= tol * max(abs(y), 1e-300)


def test_u_ideal_examples():
    assert am.u_ideal(2, 1, 0.5) == 0.25
    for n in range(1, 9):
        assert math.isclose(am.u_ideal(n, n, 0.8), 1 - 0.8**n, rel_tol=1e-12)
    assert rel_close(am.u_ideal(14, 7, 0.97), float(u_oracle(14, 7, 0.97)))
    assert am.u_ideal(14, 7, F(97, 100)) == sum(
        math.comb(14, i) * F(97, 100) ** i * F(3, 100) ** (14 - i) for i in range(7)
    )
    assert am.u_ideal(5, 0, 0.3) == 0 and am.u_ideal(3, 4, 0.3) == 1
    assert am.u_ideal(5, 2, 1.0) == 0 and am.u_ideal(5, 2, 0.0) == 1


@given(st.integers(1, 120), st.data(), st.floats(0.01, 0.999))
def test_u_ideal_matches_high_precision(n, data, a):
    k = data.draw(st.integers(0, n))
    got = am.u_ideal(n, k, a)
    want = float(u_oracle(n, k, a))
    assert rel_close(got, want, 1e-11)
    assert abs(got + float(upper_oracle(n, k, a)) - 1) <= 1e-12


def test_replication():
    m = ChurnModel(0.1, 0.5)
    p = am.replication_point(1, 2, m)
    assert p.unavailability == 0.25 and p.storage == 2 and p.bandwidth == pytest.approx(0.2)
    assert am.replication_point(3, 1, m).bandwidth == pytest.approx(0.3)
    assert am.replication_point(1, 3, ChurnModel(0.1, 0.97)).unavailability == pytest.approx(2.7e-5, rel=1e-9)
    with pytest.raises(ValueError):
        am.replication_point(1, 0, m)


def test_ideal():
    m = ChurnModel(0.05, 0.97)
    p = am.ideal_point(1, 7, 2, m)
    assert p.n == 14 and p.unavailability == am.u_ideal(14, 7, 0.97)
    assert p.bandwidth == am.replication_point(1, 2, m).bandwidth
    for R in range(1, 6):
        assert am.ideal_point(1, 1, R, m).unavailability == pytest.approx((1 - 0.97) ** R, rel=1e-9)
    with pytest.raises(ValueError):
        am.ideal_point(1, 7, F(3, 2), m)


def test_hybrid():
    assert am.hybrid_point(1, 1, 2, ChurnModel(0.1, 0.5)).unavailability == 0.25
    m = ChurnModel(0.12, 0.65)
    p = am.hybrid_point(1, 7, 2, m)
    assert rel_close(p.unavailability, float(mpmath.mpf("0.35") * u_oracle(7, 7, 0.65)), 1e-11)
    for R in (2, 3, F(16, 7)):
        assert am.hybrid_point(1, 7, R, m).unavailability <= 1 - m.a
    with pytest.raises(ValueError):
        am.hybrid_point(1, 7, F(13, 7), m)


def test_msr_model():
    m = ChurnModel(0.1, 0.9)
    factors = {n: am.msr_point_model(1, n, 7, m).bandwidth / 0.1 for n in range(8, 29)}
    assert factors[13] == pytest.approx(26 / 7) and factors[14] == pytest.approx(26 / 7)
    assert min(factors.values()) == pytest.approx(26 / 7)
    for n in range(8, 29):
        p = am.msr_point_model(1, n, 7, m)
        assert p.storage == am.ideal_point(1, 7, F(n, 7), m).storage
        assert p.bandwidth == pytest.approx(m.f * p.storage * float(delta_msr(n, 7)))
    with pytest.raises(ValueError):
        am.msr_point_model(1, 7, 7, m)


def test_msr_bandwidth_sign_change():
    m = ChurnModel(0.1, 0.9)
    bw = [am.msr_point_model(1, n, 7, m).bandwidth for n in range(8, 29)]
    diffs = [b - a for a, b in zip(bw, bw[1:])]
    signs = [d > 1e-15 for d in diffs if abs(d) > 1e-15]
    assert signs[0] is False and signs[-1] is True
    assert sum(a != b for a, b in zip(signs, signs[1:])) == 1


def test_mbr_model():
    m = ChurnModel(0.12, 0.65)
    for n in range(8, 22):
        p = am.mbr_point_model(1, n, 7, m)
        assert p.storage == pytest.approx(n * float(delta_mbr(n, 7)) / 7)
        assert p.bandwidth == m.f * p.storage
        assert p.unavailability == am.ideal_point(1, 7, F(n, 7), m).unavailability


@given(
    st.sampled_from(am.STRATEGIES),
    st.integers(1, 10),
    st.floats(0.05, 0.95),
    st.floats(0.001, 0.04),
)
def test_unavailability_monotone(strategy, k, a, step):
    lo, hi = ChurnModel(0.1, a), ChurnModel(0.1, min(a + step, 1.0))
    nodes = list(am._node_range(strategy, k, 6))
    for n in nodes:
        u_lo = am.point(strategy, 1, n, k, lo).unavailability
        assert 0 <= u_lo <= 1
        assert am.point(strategy, 1, n, k, hi).unavailability <= u_lo * (1 + 1e-12)
    us = [am.point(strategy, 1, n, k, lo).unavailability for n in nodes]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(us, us[1:]))


@given(st.sampled_from(am.STRATEGIES), st.integers(1, 9), st.floats(0.0, 1.0), st.floats(0.05, 1.0))
def test_bandwidth_is_f_times_storage(strategy, k, f, a):
    m = ChurnModel(f, a)
    for n in am._node_range(strategy, k, 4):
        p = am.point(strategy, 2.5, n, k, m)
        factor = float(delta_msr(n, k)) if strategy == "msr" else 1.0
        assert p.bandwidth == pytest.approx(f * p.storage * factor, rel=1e-12, abs=0)


def test_churn_model_validation():
    for f, a in [(-0.1, 0.5), (1.1, 0.5), (0.1, 0), (0.1, 1.2)]:
        with pytest.raises(ValueError):
            ChurnModel(f, a)
    assert ChurnModel.from_trace("Skype") == ChurnModel(0.12, 0.65)
    with pytest.raises(KeyError):
        ChurnModel.from_trace("kazaa")
    with pytest.raises(ValueError):
        am.point("raid", 1, 2, 1, ChurnModel(0.1, 0.5))


def test_replication_sweep_halves():
    s = am.sweep("replication", 1, 1, ChurnModel(0.1, 0.5), target=0.01)
    assert [p.unavailability for p in s.points] == [0.5**R for R in range(1, 11)]
    assert s.nearest.n == 7  # 2^-7 is the closest power of two to 0.01 in log distance


def test_sweep_nearest_uses_log_distance():
    m = ChurnModel.from_trace("microsoft")
    s = am.sweep("msr", 1, 7, m, target=1e-4)
    best = min(s.points, key=lambda p: abs(math.log(p.unavailability / 1e-4)))
    assert s.nearest is best
    assert am.sweep("msr", 1, 7, ChurnModel(0.1, 1.0)).nearest is None


def test_hybrid_sweep_starts_at_two_replicas():
    s = am.sweep("hybrid", 1, 7, ChurnModel(0.1, 0.9), r_max=3)
    assert [p.n for p in s.points] == list(range(7, 15))
    assert s.points[0].R == 2


def test_frontier_csv():
    m = ChurnModel.from_trace("planetlab")
    sweeps = [am.sweep(s, 1, 7, m) for s in am.STRATEGIES]
    rows = list(csv.DictReader(io.StringIO(am.frontier_csv(sweeps))))
    assert tuple(rows[0]) == am.CSV_COLUMNS
    assert {r["strategy"] for r in rows} == set(am.STRATEGIES)
    for s in am.STRATEGIES:
        assert sum(int(r["nearest"]) for r in rows if r["strategy"] == s) == 1


def test_zero_failure_rate_means_zero_bandwidth():
    m = ChurnModel(0.0, 0.8)
    for s in am.STRATEGIES:
        assert all(p.bandwidth == 0 for p in am.sweep(s, 1, 7, m).points)
