import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from regenlab import gf
from regenlab.gf import GF, SingularMatrixError, field

F8 = field(8)


def clmul_reduce(x, y, poly=0x11D, bits=8):
    """Shift-and-add product with polynomial reduction; no tables."""
    acc = 0
    while y:
        if y & 1:
            acc ^= x
        y >>= 1
        x <<= 1
        if x >> bits:
            x ^= poly
    return acc


@pytest.fixture(scope="module")
def table():
    t = np.zeros((256, 256), dtype=np.uint8)
    for x in range(256):
        for y in range(256):
            t[x, y] = clmul_reduce(x, y)
    return t


def test_table_matches_bitwise_multiplication(table):
    xs, ys = np.meshgrid(np.arange(256), np.arange(256), indexing="ij")
    assert np.array_equal(F8.vmul(xs, ys), table)


def test_scalar_mul_matches_vectorized(table):
    for x, y in [(0, 5), (1, 77), (2, 128), (255, 255), (19, 200)]:
        assert F8.mul(x, y) == table[x, y]


def test_field_axioms_exhaustive(table):
    t = table.astype(np.intp)
    assert np.array_equal(t, t.T)
    x = np.arange(256)
    # associativity over all 256^3 triples
    lhs = t[t[:, :, None], x[None, None, :]]
    rhs = t[x[:, None, None], t[None, :, :]]
    assert np.array_equal(lhs, rhs)
    # distributivity over xor
    xor = x[:, None] ^ x[None, :]
    lhs = t[:, xor]
    rhs = t[:, :, None] ^ t[:, None, :]
    assert np.array_equal(lhs, rhs)


def test_identity_and_zero():
    for y in range(256):
        assert gf.mul(0, y) == 0
        assert gf.mul(1, y) == y


def test_inverses_exhaustive():
    for x in range(1, 256):
        assert F8.mul(x, F8.inv(x)) == 1
    with pytest.raises(ZeroDivisionError):
        F8.inv(0)


def test_gf16_inverses_sampled():
    f = field(16)
    rng = np.random.default_rng(0)
    for x in rng.integers(1, 1 << 16, size=2000):
        x = int(x)
        assert f.mul(x, f.inv(x)) == 1
        assert f.mul(x, f.inv(x)) == clmul_reduce(x, f.inv(x), 0x1100B, 16)


def test_non_primitive_polynomial_rejected():
    with pytest.raises(ValueError):
        GF(8, 0x11B)  # AES polynomial: irreducible but 2 is not a generator


# -- rank oracles ------------------------------------------------------------------


def det_leibniz(m):
    n = len(m)
    total = 0
    for perm in itertools.permutations(range(n)):
        term = 1
        for i, j in enumerate(perm):
            term = clmul_reduce(term, int(m[i][j]))
        total ^= term  # signs vanish in characteristic 2
    return total


def rank_by_minors(m):
    m = np.asarray(m)
    rows, cols = m.shape
    for r in range(min(rows, cols), 0, -1):
        for ri in itertools.combinations(range(rows), r):
            for ci in itertools.combinations(range(cols), r):
                if det_leibniz(m[np.ix_(ri, ci)]):
                    return r
    return 0


# GF(4) embedded in GF(2^8): {0, 1, w, w^2} with w = g^85
W = int(F8._exp[85])
GF4 = [0, 1, W, F8.mul(W, W)]


def test_gf4_subfield_is_closed():
    for x in GF4:
        for y in GF4:
            assert F8.mul(x, y) in GF4
            assert x ^ y in GF4


def test_rank_matches_minor_oracle_all_2x2_over_gf4():
    for entries in itertools.product(GF4, repeat=4):
        m = np.array(entries, dtype=np.uint8).reshape(2, 2)
        assert F8.rank(m) == rank_by_minors(m)


@given(
    st.integers(1, 4),
    st.integers(1, 4),
    st.data(),
)
def test_rank_matches_minor_oracle_up_to_4x4(rows, cols, data):
    alphabet = data.draw(st.sampled_from([GF4, list(range(256)), [0, 1, 2]]))
    entries = data.draw(st.lists(st.sampled_from(alphabet), min_size=rows * cols, max_size=rows * cols))
    m = np.array(entries, dtype=np.uint8).reshape(rows, cols)
    assert F8.rank(m) == rank_by_minors(m)
    assert gf.rank(m) <= min(rows, cols)


def test_rank_matches_row_space_enumeration_binary_3x3():
    # rank over GF(2^8) of a {0,1} matrix equals its rank over GF(2), and a
    # row space over GF(2) of dimension r has exactly 2^r elements
    for bits in range(512):
        m = np.array([(bits >> i) & 1 for i in range(9)], dtype=np.uint8).reshape(3, 3)
        span = {tuple(np.bitwise_xor.reduce(m[list(sub)], axis=0)) if sub else (0, 0, 0)
                for r in range(4) for sub in itertools.combinations(range(3), r)}
        assert 2 ** F8.rank(m) == len(span)


@given(st.data())
def test_rank_invariant_under_row_ops(data):
    rows, cols = data.draw(st.integers(1, 6)), data.draw(st.integers(1, 6))
    seed = data.draw(st.integers(0, 2**32))
    rng = np.random.default_rng(seed)
    m = F8.random(rng, (rows, cols))
    m[rng.random((rows, cols)) < 0.4] = 0
    r = F8.rank(m)
    perm = rng.permutation(rows)
    scale = rng.integers(1, 256, size=rows)
    scaled = F8.vmul(m[perm], scale[:, None])
    assert F8.rank(scaled) == r
    assert F8.rank(m.T) == r
    red, pivots = F8.row_reduce(m)
    assert len(pivots) == r


def test_trivial_ranks():
    assert F8.rank(F8.identity(4)) == 4
    assert F8.rank(np.zeros((3, 5), dtype=np.uint8)) == 0
    assert F8.rank(np.zeros((0, 0), dtype=np.uint8)) == 0


def test_random_tall_matrix_full_rank_frequency():
    rng = np.random.default_rng(1)
    trials = 10_000
    full = sum(F8.rank(F8.random(rng, (8, 4))) == 4 for _ in range(trials))
    assert full / trials >= 0.98


# -- solve -----------------------------------------------------------------------------


def test_solve_identity():
    rhs = np.array([[3, 4], [5, 6], [7, 8]], dtype=np.uint8)
    assert np.array_equal(gf.solve(F8.identity(3), rhs), rhs)
    assert np.array_equal(F8.solve(F8.identity(3), rhs[:, 0]), rhs[:, 0])


def test_solve_singular():
    m = np.array([[1, 2], [1, 2]], dtype=np.uint8)
    with pytest.raises(SingularMatrixError):
        F8.solve(m, np.array([1, 1], dtype=np.uint8))
    with pytest.raises(ValueError):
        F8.solve(np.ones((2, 3), dtype=np.uint8), np.ones(2, dtype=np.uint8))


@pytest.mark.parametrize("bits", [8, 16])
def test_solve_round_trip(bits):
    f = field(bits)
    rng = np.random.default_rng(bits)
    done = 0
    while done < 1000:
        n = int(rng.integers(1, 7))
        m = f.random(rng, (n, n))
        if f.rank(m) < n:
            continue
        rhs = f.random(rng, (n, 3))
        x = f.solve(m, rhs)
        assert np.array_equal(f.matmul(m, x), rhs)
        done += 1
