"""Truncated Jacobi and CMV matrices with their Lax companions.

Matrices are stored by diagonals (``Banded``); dense conversion is only for
inspection and test oracles.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import mpmath
from mpmath import mp, mpf

from .direct import RecurrenceData, VerblunskyData
from .errors import PositivityViolation, SizeMismatch
from .report import decimal


class Banded:
    """Square matrix stored as ``{offset: tuple of entries}``.

    Offset k holds entries (i, i+k); missing offsets are zero.
    """

    def __init__(self, size: int, diagonals: dict):
        self.size = size
        diags = {}
        for k, values in diagonals.items():
            values = tuple(values)
            if len(values) != size - abs(k):
                raise SizeMismatch(f"diagonal {k} of a {size}x{size} matrix needs {size - abs(k)} entries")
            if abs(k) < size:
                diags[k] = values
        self.diagonals = diags

    @classmethod
    def from_dense(cls, rows) -> "Banded":
        n = len(rows)
        diags = {}
        for k in range(-n + 1, n):
            vals = [rows[i][i + k] for i in range(max(0, -k), min(n, n - k))]
            if any(v != 0 for v in vals):
                diags[k] = vals
        return cls(n, diags)

    @classmethod
    def identity(cls, size: int) -> "Banded":
        return cls(size, {0: [mpf(1)] * size})

    def __getitem__(self, ij):
        i, j = ij
        if not (0 <= i < self.size and 0 <= j < self.size):
            raise IndexError(ij)
        diag = self.diagonals.get(j - i)
        if diag is None:
            return mpf(0)
        return diag[min(i, j)]

    @property
    def bandwidth(self) -> int:
        return max((abs(k) for k in self.diagonals), default=0)

    def _check(self, other):
        if not isinstance(other, Banded) or other.size != self.size:
            raise SizeMismatch("matrices differ in size")

    def _combine(self, other, sign):
        self._check(other)
        out = {}
        for k in set(self.diagonals) | set(other.diagonals):
            n = self.size - abs(k)
            x = self.diagonals.get(k, (0,) * n)
            y = other.diagonals.get(k, (0,) * n)
            out[k] = [p + sign * q for p, q in zip(x, y)]
        return Banded(self.size, out)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, factor) -> "Banded":
        return Banded(self.size, {k: [factor * v for v in d] for k, d in self.diagonals.items()})

    def __matmul__(self, other) -> "Banded":
        self._check(other)
        n = self.size
        acc = {}
        for p, dp in self.diagonals.items():
            for q, dq in other.diagonals.items():
                k = p + q
                if abs(k) >= n:
                    continue
                row = acc.setdefault(k, [mpf(0)] * (n - abs(k)))
                # (i, i+p) * (i+p, i+p+q)
                for i in range(max(0, -p, -k), min(n, n - p, n - k)):
                    row[min(i, i + k)] += dp[min(i, i + p)] * dq[min(i + p, i + k)]
        return Banded(n, acc)

    def transpose(self) -> "Banded":
        return Banded(self.size, {-k: d for k, d in self.diagonals.items()})

    def lower(self) -> "Banded":
        """Strictly lower triangular part."""
        return Banded(self.size, {k: d for k, d in self.diagonals.items() if k < 0})

    def upper(self) -> "Banded":
        """Strictly upper triangular part."""
        return Banded(self.size, {k: d for k, d in self.diagonals.items() if k > 0})

    def to_dense(self) -> list:
        return [[self[i, j] for j in range(self.size)] for i in range(self.size)]

    def max_abs(self, window=None):
        lo, hi = window if window is not None else (0, self.size - 1)
        worst = mpf(0)
        for k, d in self.diagonals.items():
            for i in range(max(lo, lo - k), min(hi, hi - k) + 1):
                worst = max(worst, abs(d[min(i, i + k)]))
        return worst

    def to_csv(self, digits: int = 20) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for row in self.to_dense():
            w.writerow([decimal(v, digits) for v in row])
        return buf.getvalue()

    def to_json(self, digits: int = 20) -> str:
        data = {"size": self.size,
                "diagonals": {str(k): [decimal(v, digits) for v in d]
                              for k, d in sorted(self.diagonals.items())}}
        return json.dumps(data, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Banded":
        """Inverse of ``to_json``; entries are parsed at the ambient precision."""
        data = json.loads(text)
        return cls(data["size"], {int(k): [mpf(v) for v in d] for k, d in data["diagonals"].items()})

    def __repr__(self):
        return f"Banded(size={self.size}, offsets={sorted(self.diagonals)})"


def commutator(x: Banded, y: Banded) -> Banded:
    """[X, Y] = XY - YX."""
    if x.size != y.size:
        raise SizeMismatch("commutator needs equal sizes")
    return x @ y - y @ x


# -- Jacobi side ------------------------------------------------------------

class JacobiMatrix(Banded):
    """Symmetric tridiagonal matrix with diagonal b_n and off-diagonal a_n."""

    def __init__(self, b, a_off):
        b = tuple(b)
        a_off = tuple(a_off)
        if len(a_off) != len(b) - 1:
            raise SizeMismatch("a Jacobi matrix of size N needs N-1 off-diagonal entries")
        for n, a in enumerate(a_off, start=1):
            if not a > 0:
                raise PositivityViolation(f"off-diagonal a_{n} is not positive")
        diags = {0: b}
        if a_off:
            diags[1] = a_off
            diags[-1] = a_off
        super().__init__(len(b), diags)
        self.b = b
        self.a = a_off

    @classmethod
    def from_coefficients(cls, a_sq, b, size=None) -> "JacobiMatrix":
        """From index-aligned a_n^2 (a_sq[0] unused) and b_n sequences."""
        size = len(b) if size is None else size
        if len(b) < size or len(a_sq) < size:
            raise SizeMismatch(f"need {size} coefficients")
        return cls(b[:size], [mpmath.sqrt(a_sq[n]) for n in range(1, size)])


def build_jacobi(rec: RecurrenceData, N: int) -> JacobiMatrix:
    if rec.N < N:
        raise SizeMismatch(f"recurrence data holds {rec.N} coefficients, {N} requested")
    return JacobiMatrix.from_coefficients(rec.a_sq, rec.b, N)


def jacobi_power(J: Banded, k: int) -> Banded:
    if k not in (1, 2, 3):
        raise ValueError("k must be 1, 2 or 3")
    if 2 * k + 1 > J.size:
        raise SizeMismatch(f"J^{k} needs size at least {2 * k + 1}")
    out = J
    for _ in range(k - 1):
        out = out @ J
    return out


@dataclass(frozen=True)
class LaxMatrices:
    """The antisymmetric companion of a Lax pair and the matrix it came from."""

    companion: Banded
    source: Banded
    kind: str

    def antisymmetry_defect(self):
        return (self.companion + self.companion.transpose()).max_abs()


def lax_A(x: Banded) -> LaxMatrices:
    """(1/2)(X_- - X_+): the Toda companion for X = J, the hierarchy one for X = J^k."""
    return LaxMatrices((x.lower() - x.upper()).scale(mpf(1) / 2), x, "toda")


def sturm_count(J: JacobiMatrix, x) -> int:
    """Number of eigenvalues of J strictly below x (LDL^T sign count)."""
    count = 0
    d = J.b[0] - x
    tiny = mpf(10) ** (-2 * mp.dps)
    for n in range(J.size):
        if n:
            d = (J.b[n] - x) - J.a[n - 1] ** 2 / d
        if d == 0:
            d = -tiny
        if d < 0:
            count += 1
    return count


def eigenvalues(J: JacobiMatrix, tol=None) -> list:
    """All eigenvalues of a symmetric tridiagonal matrix by Sturm bisection, ascending."""
    n = J.size
    if tol is None:
        tol = mpf(10) ** (-(mp.dps - 5))
    radius = [(J.a[i - 1] if i else 0) + (J.a[i] if i < n - 1 else 0) for i in range(n)]
    lo = min(J.b[i] - radius[i] for i in range(n)) - 1
    hi = max(J.b[i] + radius[i] for i in range(n)) + 1
    scale = max(abs(lo), abs(hi))
    out = []
    for k in range(n):
        a, b = lo, hi
        # k-th eigenvalue: smallest x with more than k eigenvalues below it
        while b - a > tol * scale:
            mid = (a + b) / 2
            if sturm_count(J, mid) > k:
                b = mid
            else:
                a = mid
        out.append((a + b) / 2)
    return out


# -- CMV side ---------------------------------------------------------------

def theta_block(alpha, rho) -> tuple:
    return ((mpmath.conj(alpha), rho), (rho, -alpha))


@dataclass(frozen=True)
class CMVMatrix:
    alpha: tuple
    rho: tuple
    L: Banded
    M: Banded
    C: Banded

    @property
    def size(self) -> int:
        return self.C.size

    def theta_defect(self):
        """max_n of the entries of Theta_n Theta_n^T - I."""
        worst = mpf(0)
        for a, r in zip(self.alpha, self.rho):
            (p, q), (s, u) = theta_block(a, r)
            worst = max(worst, abs(p * p + q * q - 1), abs(p * s + q * u), abs(s * s + u * u - 1))
        return worst

    def interior_unitarity_defect(self):
        """Largest deviation of C^T C from the identity away from the last 2 rows/columns."""
        gram = self.C.transpose() @ self.C - Banded.identity(self.size)
        return gram.max_abs((0, self.size - 3))


def _block_diagonal(size, blocks):
    """Assemble 2x2 blocks placed at the given starting rows, clipped at the edge."""
    diags = {k: [mpf(0)] * (size - abs(k)) for k in (-1, 0, 1)}
    for start, blk in blocks:
        for i in range(2):
            for j in range(2):
                r, c = start + i, start + j
                if r < size and c < size:
                    diags[c - r][min(r, c)] = blk[i][j]
    return Banded(size, diags)


def build_cmv(v: VerblunskyData, N: int) -> CMVMatrix:
    """C = L M with L = diag(Theta_0, Theta_2, ...) and M = diag(1, Theta_1, Theta_3, ...)."""
    if N % 2:
        raise SizeMismatch("CMV size must be even")
    if v.N < N:
        raise SizeMismatch(f"Verblunsky data holds {v.N} coefficients, {N} requested")
    alpha = tuple(v.alpha[:N])
    rho = tuple(mpmath.sqrt(1 - abs(a) ** 2) for a in alpha)
    L = _block_diagonal(N, [(n, theta_block(alpha[n], rho[n])) for n in range(0, N, 2)])
    M = _block_diagonal(N, [(n, theta_block(alpha[n], rho[n])) for n in range(1, N, 2)])
    M.diagonals[0] = (mpf(1),) + M.diagonals[0][1:]
    return CMVMatrix(alpha, rho, L, M, L @ M)


def alpha_from_cmv(C: Banded) -> list:
    """Recover alpha_0..alpha_{N-1} from the entries of C = L M."""
    alpha = [mpmath.conj(C[0, 0])]
    rho = [C[1, 0]]
    for n in range(1, C.size):
        if n % 2:
            a = mpmath.conj(C[n - 1, n] / rho[n - 1])        # C[2k,2k+1] = rho_2k conj(alpha_2k+1)
        else:
            a = mpmath.conj(C[n, n - 1] / rho[n - 1])        # C[2k,2k-1] = conj(alpha_2k) rho_2k-1
        alpha.append(a)
        rho.append(mpmath.sqrt(1 - abs(a) ** 2))
    return alpha


def lax_B(cmv: CMVMatrix) -> LaxMatrices:
    """Band form with entries rho_n Delta_n / 2 and rho_n rho_{n+1} / 2,
    Delta_n = alpha_{n+1} - alpha_{n-1}, alpha_{-1} = -1 (real alpha)."""
    N = cmv.size
    al = (mpf(-1),) + cmv.alpha
    rho = cmv.rho
    half = mpf(1) / 2
    d1 = [half * rho[n] * (al[n + 2] - al[n]) for n in range(N - 1)]
    d2 = [half * rho[n] * rho[n + 1] for n in range(N - 2)]
    diags = {1: d1, -1: [-x for x in d1]}
    if d2:
        diags[2] = d2
        diags[-2] = [-x for x in d2]
    return LaxMatrices(Banded(N, diags), cmv.C, "ablowitz-ladik")


def lax_B_from_split(C: Banded) -> Banded:
    """(1/2)[(C + C^T)_+ - (C + C^T)_-] computed from the assembled matrix."""
    s = C + C.transpose()
    return (s.upper() - s.lower()).scale(mpf(1) / 2)
