"""Independent reference computations in exact rational arithmetic.

The moments are converted exactly (mpf values are dyadic rationals) and
classical Gram-Schmidt is carried out on the monomials with ``Fraction``.
Nothing here shares code with the Cholesky or Levinson paths.
"""
from __future__ import annotations

from fractions import Fraction

import mpmath
from mpmath import mpf


def to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    # read the mantissa directly; mpf(value) would round to the ambient precision
    if not isinstance(value, mpmath.mpf):
        value = mpf(value)
    sign, man, exp, _ = value._mpf_
    if man == 0:
        return Fraction(0)
    return (-1) ** sign * Fraction(man) * Fraction(2) ** exp


def _inner(p, q, moments):
    return sum(pi * qj * moments[i + j] for i, pi in enumerate(p) if pi for j, qj in enumerate(q) if qj)


def gram_schmidt_recurrence(moments, N: int):
    """(a_sq[0..N], b[0..N-1]) of the monic orthogonal polynomials, exactly.

    P_n = x^n - sum_k <x^n, P_k>/<P_k, P_k> P_k; then
    b_n = <x P_n, P_n>/<P_n, P_n> and a_n^2 = <P_n, P_n>/<P_{n-1}, P_{n-1}>.
    """
    m = [to_fraction(v) for v in moments[:2 * N + 1]]
    polys, norms = [], []
    for n in range(N + 1):
        p = [Fraction(0)] * n + [Fraction(1)]
        mono = list(p)
        for q, nq in zip(polys, norms):
            c = _inner(mono, q, m) / nq
            for i, qi in enumerate(q):
                p[i] -= c * qi
        polys.append(p)
        norms.append(_inner(p, p, m))
    b = []
    for n in range(N):
        xp = [Fraction(0)] + polys[n]
        b.append(_inner(xp, polys[n], m) / norms[n])
    a_sq = [Fraction(0)] + [norms[n] / norms[n - 1] for n in range(1, N + 1)]
    return a_sq, b


def gram_schmidt_verblunsky(moments, N: int):
    """alpha_0..alpha_{N-1} from exact Gram-Schmidt of 1, z, z^2, ... for real
    even Toeplitz moments c_k, using alpha_n = -Phi_{n+1}(0)."""
    c = [to_fraction(v) for v in moments[:N + 1]]

    def inner(p, q):
        # <z^i, z^j> = c_{|i-j|}
        return sum(pi * qj * c[abs(i - j)] for i, pi in enumerate(p) if pi for j, qj in enumerate(q) if qj)

    polys, norms = [], []
    for n in range(N + 1):
        mono = [Fraction(0)] * n + [Fraction(1)]
        p = list(mono)
        for q, nq in zip(polys, norms):
            coef = inner(mono, q) / nq
            for i, qi in enumerate(q):
                p[i] -= coef * qi
        polys.append(p)
        norms.append(inner(p, p))
    return [-polys[n + 1][0] for n in range(N)]


def monic_by_determinant(moments, n: int, x):
    """P_n(x) as a bordered Hankel determinant ratio."""
    if n == 0:
        return mpf(1)
    H = mpmath.matrix(n, n)
    for i in range(n):
        for j in range(n):
            H[i, j] = moments[i + j]
    B = mpmath.matrix(n + 1, n + 1)
    for i in range(n):
        for j in range(n + 1):
            B[i, j] = moments[i + j]
    for j in range(n + 1):
        B[n, j] = x ** j
    return mpmath.det(B) / mpmath.det(H)


def relative_disagreement(exact, approx, skip: int = 0):
    """max |exact - approx| / max(|exact|, 1) over paired entries, in the
    ambient precision."""
    worst = mpf(0)
    for x, y in list(zip(exact, approx))[skip:]:
        xv = mpmath.mpf(x.numerator) / x.denominator if isinstance(x, Fraction) else x
        worst = max(worst, abs(xv - y) / max(abs(xv), 1))
    return worst
