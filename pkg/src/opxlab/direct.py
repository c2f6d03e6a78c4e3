"""Direct problem: moments to recurrence coefficients.

On the real line the Hankel Gram matrix is Cholesky-factored to obtain
(a_n^2, b_n, gamma_n); on the unit circle a Levinson-type recursion on the
Toeplitz moments produces the Verblunsky coefficients alpha_n and kappa_n.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Optional

import mpmath
from mpmath import mp, mpf

from .errors import ModulusViolation, OffCircle, PositivityViolation, SizeMismatch
from .numerics import Certified, default_digits, digits_from_disagreement, precision_ladder
from .report import ResidualReport, decimal
from .weights import Family, MomentTable, WeightSpec, moment_table

DEFAULT_N = 15


@dataclass(frozen=True)
class RecurrenceData:
    """Coefficients of x P_n = P_{n+1} + b_n P_n + a_n^2 P_{n-1}.

    Sequences are index-aligned: ``a_sq[n]`` is a_n^2 for 0 <= n <= N with
    ``a_sq[0] == 0``; ``b[n]`` for 0 <= n < N; ``gamma[n]`` for 0 <= n <= N.
    """

    a_sq: tuple
    b: tuple
    gamma: tuple
    certified_digits: int = 0
    precision: int = 0
    spec: Optional[WeightSpec] = None

    @property
    def N(self) -> int:
        return len(self.b)

    def a(self, n: int) -> mpf:
        return mpmath.sqrt(self.a_sq[n])

    def check_invariants(self) -> None:
        if self.a_sq[0] != 0:
            raise PositivityViolation("a_0^2 must be 0")
        for n in range(1, len(self.a_sq)):
            if not self.a_sq[n] > 0:
                raise PositivityViolation(f"a_{n}^2 = {self.a_sq[n]} is not positive")
        for n, g in enumerate(self.gamma):
            if not g > 0:
                raise PositivityViolation(f"gamma_{n} is not positive")

    def a_gamma_residual(self) -> mpf:
        """max_n |a_{n+1} gamma_{n+1} / gamma_n - 1|."""
        return max((abs(self.a(n + 1) * self.gamma[n + 1] / self.gamma[n] - 1)
                    for n in range(len(self.gamma) - 1)), default=mpf(0))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "a_sq", "b", "gamma"])
        digits = max(self.certified_digits, 20)
        for n in range(self.N + 1):
            b = decimal(self.b[n], digits) if n < self.N else ""
            w.writerow([n, decimal(self.a_sq[n], digits), b, decimal(self.gamma[n], digits)])
        return buf.getvalue()

    def to_json(self) -> str:
        digits = max(self.certified_digits, 20)
        data = {
            "spec": self.spec.to_config() if self.spec else None,
            "certified_digits": self.certified_digits,
            "a_sq": [decimal(v, digits) for v in self.a_sq],
            "b": [decimal(v, digits) for v in self.b],
            "gamma": [decimal(v, digits) for v in self.gamma],
        }
        return json.dumps(data, indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class VerblunskyData:
    """alpha_0..alpha_{N-1}, kappa_0..kappa_N; alpha_{-1} = -1 by convention."""

    alpha: tuple
    kappa: tuple
    certified_digits: int = 0
    precision: int = 0
    spec: Optional[WeightSpec] = None

    alpha_minus1 = mpf(-1)

    @property
    def N(self) -> int:
        return len(self.alpha)

    def alpha_at(self, n: int):
        if n == -1:
            return mpf(-1)
        return self.alpha[n]

    @property
    def rho(self) -> tuple:
        return tuple(mpmath.sqrt(1 - abs(a) ** 2) for a in self.alpha)

    def check_invariants(self) -> None:
        for n, a in enumerate(self.alpha):
            if not abs(a) < 1:
                raise ModulusViolation(f"|alpha_{n}| = {abs(a)} is not below 1")

    def kappa_alpha_residual(self) -> mpf:
        """max_n |kappa_n^2/kappa_{n+1}^2 - (1 - |alpha_n|^2)|."""
        return max((abs(self.kappa[n] ** 2 / self.kappa[n + 1] ** 2 - (1 - abs(self.alpha[n]) ** 2))
                    for n in range(self.N)), default=mpf(0))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "alpha", "kappa"])
        digits = max(self.certified_digits, 20)
        w.writerow([-1, decimal(-1, digits), ""])
        for n in range(self.N + 1):
            a = decimal(self.alpha[n], digits) if n < self.N else ""
            w.writerow([n, a, decimal(self.kappa[n], digits)])
        return buf.getvalue()

    def to_json(self) -> str:
        digits = max(self.certified_digits, 20)
        data = {
            "spec": self.spec.to_config() if self.spec else None,
            "certified_digits": self.certified_digits,
            "alpha": [decimal(v, digits) for v in self.alpha],
            "kappa": [decimal(v, digits) for v in self.kappa],
        }
        return json.dumps(data, indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class PolyValue:
    n: int
    value: object
    star: object = None


# -- factorization kernels --------------------------------------------------

def cholesky_recurrence(moments, N: int):
    """(a_sq, b, gamma) from the upper Cholesky factor R of the Hankel matrix.

    With H = R^T R: gamma_n = 1/R_nn, a_n = R_nn / R_{n-1,n-1} and
    b_n = R_{n,n+1}/R_nn - R_{n-1,n}/R_{n-1,n-1}.
    """
    size = N + 1
    if len(moments) < 2 * N + 1:
        raise SizeMismatch(f"need moments through m_{2 * N}, have {len(moments) - 1}")
    R = [[mpf(0)] * size for _ in range(size)]
    for i in range(size):
        s = moments[2 * i] - mpmath.fsum(R[k][i] ** 2 for k in range(i))
        if not s > 0:
            raise PositivityViolation(f"Hankel pivot {i} is not positive (precision exhausted or invalid measure)")
        R[i][i] = mpmath.sqrt(s)
        for j in range(i + 1, size):
            R[i][j] = (moments[i + j] - mpmath.fsum(R[k][i] * R[k][j] for k in range(i))) / R[i][i]
    a_sq = [mpf(0)] + [(R[n][n] / R[n - 1][n - 1]) ** 2 for n in range(1, size)]
    b = []
    for n in range(N):
        v = R[n][n + 1] / R[n][n]
        if n:
            v -= R[n - 1][n] / R[n - 1][n - 1]
        b.append(v)
    gamma = [1 / R[n][n] for n in range(size)]
    return tuple(a_sq), tuple(b), tuple(gamma)


def levinson_verblunsky(moments, N: int):
    """(alpha, kappa, monic coefficient lists) from real Toeplitz moments c_0..c_N."""
    if len(moments) < N + 1:
        raise SizeMismatch(f"need trigonometric moments through c_{N}")
    c = moments
    phi = [mpf(1)]
    alpha = []
    kappa = [1 / mpmath.sqrt(c[0])]
    polys = [tuple(phi)]
    for n in range(N):
        # <z Phi_n, 1> and ||Phi_n||^2 = <Phi_n^*, 1>
        num = mpmath.fsum(phi[j] * c[j + 1] for j in range(n + 1))
        norm = mpmath.fsum(phi[j] * c[n - j] for j in range(n + 1))
        a = num / norm
        if not abs(a) < 1:
            raise ModulusViolation(f"|alpha_{n}| >= 1: precision lost")
        alpha.append(a)
        shifted = [mpf(0)] + phi
        reversed_ = phi[::-1] + [mpf(0)]
        phi = [shifted[j] - a * reversed_[j] for j in range(n + 2)]
        kappa.append(kappa[-1] / mpmath.sqrt(1 - a * a))
        polys.append(tuple(phi))
    return tuple(alpha), tuple(kappa), polys


def recurrence_disagreement(lo, hi) -> mpf:
    """Relative disagreement of two recurrence runs; b_n is measured against
    the scale of its Jacobi row so that vanishing b_n do not dominate."""
    (a_lo, b_lo, g_lo), (a_hi, b_hi, g_hi) = lo, hi
    worst = mpf(0)
    for n in range(1, len(a_hi)):
        worst = max(worst, abs(a_lo[n] - a_hi[n]) / a_hi[n])
    for n in range(len(g_hi)):
        worst = max(worst, abs(g_lo[n] - g_hi[n]) / g_hi[n])
    for n in range(len(b_hi)):
        scale = max(abs(b_hi[n]), mpmath.sqrt(a_hi[n + 1]), mpmath.sqrt(a_hi[n]))
        worst = max(worst, abs(b_lo[n] - b_hi[n]) / scale)
    return worst


def verblunsky_disagreement(lo, hi) -> mpf:
    (al_lo, k_lo), (al_hi, k_hi) = lo[:2], hi[:2]
    worst = mpf(0)
    for x, y in zip(al_lo, al_hi):
        d = abs(x - y) / abs(y) if y else abs(x - y)
        worst = max(worst, d)
    for x, y in zip(k_lo, k_hi):
        worst = max(worst, abs(x - y) / y)
    return worst


def _round_entries(entries, digits):
    with mp.workdps(digits):
        return [+e for e in entries]


# -- public operations ------------------------------------------------------

def recurrence_from_moments(table: MomentTable, N: int) -> RecurrenceData:
    """Cholesky path on a fixed table; certified digits are the table's digits
    minus the loss observed when the factorization is repeated at half precision."""
    if table.kind != "hankel":
        raise SizeMismatch("recurrence_from_moments needs a Hankel table")
    if table.K < N:
        raise SizeMismatch(f"table holds moments through m_{2 * table.K}; N={N} needs m_{2 * N}")
    p = table.precision
    with mp.workdps(p):
        full = cholesky_recurrence(table.entries, N)
    half = max(p // 2, 15)
    with mp.workdps(half):
        coarse = cholesky_recurrence(_round_entries(table.entries, half), N)
    with mp.workdps(p):
        agree = digits_from_disagreement(recurrence_disagreement(coarse, full), half)
    loss = half - agree
    cert = max(0, min(table.certified_digits, p - loss))
    data = RecurrenceData(*full, certified_digits=cert, precision=p, spec=table.spec)
    with mp.workdps(p):
        data.check_invariants()
    return data


def verblunsky_from_moments(table: MomentTable, N: int) -> VerblunskyData:
    if table.kind != "toeplitz":
        raise SizeMismatch("verblunsky_from_moments needs a Toeplitz table")
    if table.K < N:
        raise SizeMismatch(f"table holds moments through c_{table.K}; N={N} needs c_{N}")
    p = table.precision
    with mp.workdps(p):
        alpha, kappa, _ = levinson_verblunsky(table.entries, N)
    half = max(p // 2, 15)
    with mp.workdps(half):
        a2, k2, _ = levinson_verblunsky(_round_entries(table.entries, half), N)
    with mp.workdps(p):
        agree = digits_from_disagreement(verblunsky_disagreement((a2, k2), (alpha, kappa)), half)
    cert = max(0, min(table.certified_digits, p - (half - agree)))
    data = VerblunskyData(alpha, kappa, certified_digits=cert, precision=p, spec=table.spec)
    data.check_invariants()
    return data


def _guess_guard(spec: WeightSpec, N: int) -> int:
    # rough Hankel conditioning by family; the ladder corrects any shortfall
    if spec.family in (Family.CHARLIER, Family.MEIXNER, Family.HYPERGEOMETRIC):
        return 20 + 5 * N
    if spec.family is Family.CIRCLE:
        return 20
    return 20 + 3 * N


def recurrence_coefficients(spec: WeightSpec, N: int = DEFAULT_N, digits: int | None = None,
                            crosscheck: bool = False, guard: int | None = None) -> RecurrenceData:
    """Moments -> Cholesky with precision-ladder certification of ``digits`` digits."""
    digits = digits or default_digits()
    if spec.kind != "hankel":
        raise ValueError("use verblunsky_coefficients for the circle family")
    if crosscheck:
        moment_table(spec, N, digits, crosscheck=True)
    guard = _guess_guard(spec, N) if guard is None else guard

    def run(p):
        table = moment_table(spec, N, p, validate=False)
        with mp.workdps(p):
            return cholesky_recurrence(table.entries, N)

    cert: Certified = precision_ladder(run, digits + guard, digits=digits, disagreement=recurrence_disagreement)
    data = RecurrenceData(*cert.value, certified_digits=cert.certified_digits, precision=cert.precision, spec=spec)
    with mp.workdps(cert.precision):
        data.check_invariants()
    return data


def verblunsky_coefficients(spec: WeightSpec, N: int = DEFAULT_N, digits: int | None = None,
                            crosscheck: bool = False) -> VerblunskyData:
    digits = digits or default_digits()
    if spec.family is not Family.CIRCLE:
        raise ValueError("Verblunsky coefficients need the CircleExpCos family")
    if crosscheck:
        moment_table(spec, N, digits, crosscheck=True)

    def run(p):
        table = moment_table(spec, N, p, validate=False)
        with mp.workdps(p):
            return levinson_verblunsky(table.entries, N)[:2]

    cert = precision_ladder(run, digits + _guess_guard(spec, N), digits=digits,
                            disagreement=verblunsky_disagreement)
    data = VerblunskyData(*cert.value, certified_digits=cert.certified_digits, precision=cert.precision, spec=spec)
    data.check_invariants()
    return data


# -- polynomial evaluation --------------------------------------------------

def monic_values(rec: RecurrenceData, n: int, x) -> list:
    """[P_0(x), ..., P_n(x)] by the forward three-term recurrence."""
    if n > rec.N:
        raise SizeMismatch(f"degree {n} exceeds N={rec.N}")
    values = [mpf(1)]
    prev = mpf(0)
    for k in range(n):
        nxt = (x - rec.b[k]) * values[k] - rec.a_sq[k] * prev
        prev = values[k]
        values.append(nxt)
    return values


def eval_monic(rec: RecurrenceData, n: int, x) -> PolyValue:
    return PolyValue(n, monic_values(rec, n, x)[n])


def monic_coefficients(rec: RecurrenceData, n: int) -> list:
    """Monomial coefficient lists of P_0..P_n (lowest degree first)."""
    polys = [[mpf(1)]]
    prev = [mpf(0)]
    for k in range(n):
        cur = polys[k]
        nxt = [mpf(0)] + list(cur)
        for i, c in enumerate(cur):
            nxt[i] -= rec.b[k] * c
        for i, c in enumerate(prev):
            nxt[i] -= rec.a_sq[k] * c
        prev = cur
        polys.append(nxt)
    return polys


def opuc_values(v: VerblunskyData, n: int, z) -> list:
    """[(Phi_k(z), Phi_k^*(z)) for k = 0..n] by the transfer matrix."""
    if n > v.N:
        raise SizeMismatch(f"degree {n} exceeds N={v.N}")
    phi, star = mpmath.mpc(1), mpmath.mpc(1)
    out = [(phi, star)]
    for k in range(n):
        a = v.alpha[k]
        phi, star = z * phi - mpmath.conj(a) * star, -a * z * phi + star
        out.append((phi, star))
    return out


def eval_opuc(v: VerblunskyData, n: int, z, tol=None) -> PolyValue:
    z = mpmath.mpc(z)
    if tol is None:
        tol = mpf(10) ** (-(mp.dps // 2))
    if abs(abs(z) - 1) > tol:
        raise OffCircle(f"|z| = {abs(z)} is not on the unit circle")
    phi, star = opuc_values(v, n, z)[n]
    return PolyValue(n, phi, star)


def transfer_matrix(alpha, z):
    return mpmath.matrix([[z, -mpmath.conj(alpha)], [-alpha * z, 1]])


def gamma_norm_check(rec: RecurrenceData, table: MomentTable, tolerance=None) -> ResidualReport:
    """|gamma_n^2 * int P_n^2 dmu - 1| with the integral contracted against the moments."""
    n_max = min(rec.N, table.K)
    with mp.workdps(max(rec.precision, table.precision)):
        polys = monic_coefficients(rec, n_max)
        residuals = []
        for n, coeffs in enumerate(polys):
            integral = mpmath.fsum(ci * cj * table.entries[i + j]
                                   for i, ci in enumerate(coeffs) for j, cj in enumerate(coeffs))
            residuals.append(abs(integral * rec.gamma[n] ** 2 - 1))
        cert = min(rec.certified_digits, table.certified_digits)
        if tolerance is None:
            tolerance = mpf(10) ** (-cert + 5)
    return ResidualReport("monic-norm", tuple(range(n_max + 1)), tuple(residuals), tolerance,
                          {"certified_digits": cert})


# -- sampling along the deformation parameter -------------------------------

def recurrence_on_grid(spec: WeightSpec, N: int, grid, digits: int | None = None) -> list:
    """RecurrenceData at every grid value of the family's deformation parameter."""
    name = spec.deformation
    with mp.workdps(4 * (digits or default_digits())):
        specs = [spec.with_param(name, g) for g in grid]
    return [recurrence_coefficients(s, N, digits) for s in specs]


def verblunsky_on_grid(spec: WeightSpec, N: int, grid, digits: int | None = None) -> list:
    with mp.workdps(4 * (digits or default_digits())):
        specs = [spec.with_param("t", g) for g in grid]
    return [verblunsky_coefficients(s, N, digits) for s in specs]
