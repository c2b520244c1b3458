"""Binary extension fields GF(2^8) and GF(2^16) with dense linear algebra.

Field elements are plain integers ``0 <= x < order``; matrices are 2-D numpy
arrays of an unsigned dtype wide enough for the field.  Addition is xor.
Multiplication goes through log/antilog tables built once per field.

Reduction polynomials (bit-exact, both primitive with generator 2):

    GF(2^8)   x^8 + x^4 + x^3 + x^2 + 1     0x11D
    GF(2^16)  x^16 + x^12 + x^3 + x + 1     0x1100B
"""

from __future__ import annotations

import functools

import numpy as np

POLYNOMIALS = {8: 0x11D, 16: 0x1100B}


class SingularMatrixError(ArithmeticError):
    """Raised by :meth:`GF.solve` when the system matrix is not invertible."""


class GF:
    """A binary extension field GF(2^bits).

    Instances are immutable after construction and can be shared across
    threads.  Use :func:`field` to get the cached instance for a given size.
    """

    def __init__(self, bits: int = 8, poly: int | None = None):
        if poly is None:
            if bits not in POLYNOMIALS:
                raise ValueError(f"unsupported field size 2^{bits}")
            poly = POLYNOMIALS[bits]
        self.bits = bits
        self.order = 1 << bits
        self.poly = poly
        self.dtype = np.uint8 if bits <= 8 else np.uint16

        q1 = self.order - 1
        exp = np.zeros(2 * q1, dtype=np.int64)
        log = np.zeros(self.order, dtype=np.int64)
        x = 1
        for i in range(q1):
            exp[i] = x
            log[x] = i
            x <<= 1
            if x & self.order:
                x ^= poly
        if x != 1 or len(set(exp[:q1].tolist())) != q1:
            raise ValueError(f"polynomial {poly:#x} is not primitive")
        exp[q1:] = exp[:q1]
        exp.setflags(write=False)
        log.setflags(write=False)
        self._exp = exp
        self._log = log

    def __repr__(self):
        return f"GF(2^{self.bits}, poly={self.poly:#x})"

    # -- scalars ---------------------------------------------------------

    def add(self, x, y):
        return x ^ y

    def mul(self, x: int, y: int) -> int:
        if x == 0 or y == 0:
            return 0
        return int(self._exp[self._log[x] + self._log[y]])

    def inv(self, x: int) -> int:
        if x == 0:
            raise ZeroDivisionError("0 has no inverse")
        return int(self._exp[(self.order - 1) - self._log[x]])

    def div(self, x: int, y: int) -> int:
        return self.mul(x, self.inv(y))

    # -- arrays ----------------------------------------------------------

    def vmul(self, x, y):
        """Elementwise product of broadcastable arrays."""
        x = np.asarray(x)
        y = np.asarray(y)
        out = self._exp[self._log[x] + self._log[y]]
        out[(x == 0) | (y == 0)] = 0
        return out.astype(self.dtype, copy=False)

    def random(self, rng: np.random.Generator, shape) -> np.ndarray:
        return rng.integers(0, self.order, size=shape, dtype=self.dtype)

    def matmul(self, a, b) -> np.ndarray:
        a = np.asarray(a)
        b = np.asarray(b)
        if a.shape[1] != b.shape[0]:
            raise ValueError(f"shape mismatch {a.shape} @ {b.shape}")
        out = np.zeros((a.shape[0], b.shape[1]), dtype=self.dtype)
        for j in range(a.shape[1]):
            out ^= self.vmul(a[:, j, None], b[None, j, :])
        return out

    def identity(self, size: int) -> np.ndarray:
        return np.eye(size, dtype=self.dtype)

    def row_reduce(self, m, ncols: int | None = None):
        """Reduced row echelon form.

        Only the first ``ncols`` columns are used for pivoting (all columns by
        default), so an augmented matrix ``[A | B]`` can be reduced in one go.
        Returns ``(rref, pivot_columns)``.
        """
        m = np.array(m, dtype=self.dtype, copy=True)
        rows, cols = m.shape
        if ncols is None:
            ncols = cols
        pivots = []
        r = 0
        for c in range(ncols):
            if r == rows:
                break
            nz = np.flatnonzero(m[r:, c])
            if nz.size == 0:
                continue
            p = r + nz[0]
            if p != r:
                m[[r, p]] = m[[p, r]]
            m[r] = self.vmul(m[r], self.inv(int(m[r, c])))
            col = m[:, c].copy()
            col[r] = 0
            hit = np.flatnonzero(col)
            if hit.size:
                m[hit] ^= self.vmul(col[hit, None], m[None, r])
            pivots.append(c)
            r += 1
        return m, pivots

    def rank(self, m) -> int:
        m = np.array(m, dtype=self.dtype, copy=True)
        if m.size == 0:
            return 0
        rows, cols = m.shape
        r = 0
        for c in range(cols):
            if r == rows:
                break
            nz = np.flatnonzero(m[r:, c])
            if nz.size == 0:
                continue
            p = r + nz[0]
            if p != r:
                m[[r, p]] = m[[p, r]]
            below = m[r + 1:, c]
            hit = np.flatnonzero(below)
            if hit.size:
                factors = self.vmul(below[hit], self.inv(int(m[r, c])))
                m[r + 1 + hit] ^= self.vmul(factors[:, None], m[None, r])
            r += 1
        return r

    def solve(self, m, rhs) -> np.ndarray:
        """Solve ``m @ x = rhs`` for square ``m``."""
        m = np.asarray(m)
        rhs = np.asarray(rhs)
        n = m.shape[0]
        if m.ndim != 2 or m.shape[1] != n:
            raise ValueError(f"solve needs a square matrix, got {m.shape}")
        vector = rhs.ndim == 1
        if vector:
            rhs = rhs[:, None]
        aug = np.concatenate([m.astype(self.dtype), rhs.astype(self.dtype)], axis=1)
        red, pivots = self.row_reduce(aug, ncols=n)
        if len(pivots) < n:
            raise SingularMatrixError(f"matrix has rank {len(pivots)} < {n}")
        x = red[:, n:]
        return x[:, 0] if vector else x


@functools.cache
def field(bits: int = 8) -> GF:
    return GF(bits)


def mul(x: int, y: int, bits: int = 8) -> int:
    return field(bits).mul(x, y)


def inv(x: int, bits: int = 8) -> int:
    return field(bits).inv(x)


def rank(m, bits: int = 8) -> int:
    return field(bits).rank(m)


def solve(m, rhs, bits: int = 8) -> np.ndarray:
    return field(bits).solve(m, rhs)
