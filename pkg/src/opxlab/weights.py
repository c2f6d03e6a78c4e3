"""The eight weight families and their moments.

Real-line and lattice families expose power moments ``m_k = \\int x^k dmu``;
the circle family exposes trigonometric moments
``c_k = (1/2pi) \\int e^{-ik theta} e^{t cos theta} d theta``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import mpmath
from mpmath import mp, mpf

from .errors import (
    ConfigError,
    CrossCheckFailure,
    DivergentMoment,
    PositivityViolation,
)
from .numerics import digits_from_disagreement, sum_series

GUARD_DIGITS = 20


class Family(str, Enum):
    FREUD = "FreudQuartic"
    MODIFIED_LAGUERRE = "ModifiedLaguerre"
    CHEN_ITS = "ChenIts"
    JACOBI_TODA = "JacobiToda"
    CHARLIER = "GeneralizedCharlier"
    MEIXNER = "GeneralizedMeixner"
    HYPERGEOMETRIC = "HypergeometricLattice"
    CIRCLE = "CircleExpCos"


PARAMETERS = {
    Family.FREUD: ("t",),
    Family.MODIFIED_LAGUERRE: ("alpha", "t"),
    Family.CHEN_ITS: ("alpha", "t"),
    Family.JACOBI_TODA: ("alpha", "beta", "t"),
    Family.CHARLIER: ("a", "beta"),
    Family.MEIXNER: ("a", "beta", "gamma"),
    Family.HYPERGEOMETRIC: ("alpha", "beta", "gamma", "a"),
    Family.CIRCLE: ("t",),
}

SUPPORT = {
    Family.FREUD: "R",
    Family.MODIFIED_LAGUERRE: "[0,inf)",
    Family.CHEN_ITS: "[0,inf)",
    Family.JACOBI_TODA: "[-1,1]",
    Family.CHARLIER: "N",
    Family.MEIXNER: "N",
    Family.HYPERGEOMETRIC: "N",
    Family.CIRCLE: "unit circle",
}

# parameter that carries the time-like deformation of each family
DEFORMATION = {
    Family.FREUD: "t",
    Family.MODIFIED_LAGUERRE: "t",
    Family.CHEN_ITS: "t",
    Family.JACOBI_TODA: "t",
    Family.CHARLIER: "a",
    Family.MEIXNER: "a",
    Family.HYPERGEOMETRIC: "a",
    Family.CIRCLE: "t",
}

LATTICE = (Family.CHARLIER, Family.MEIXNER, Family.HYPERGEOMETRIC)
SYMMETRIC = (Family.FREUD,)


def _decimal_string(value) -> str:
    if isinstance(value, str):
        mpf(value)  # validate
        return value.strip()
    if isinstance(value, bool):
        raise TypeError("boolean is not a number")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, mpf):
        return mpmath.nstr(value, mp.dps, min_fixed=-mp.inf, max_fixed=mp.inf)
    raise TypeError(f"cannot use {type(value).__name__} as a parameter value")


@dataclass(frozen=True)
class WeightSpec:
    family: Family
    params: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        family = Family(self.family)
        object.__setattr__(self, "family", family)
        expected = PARAMETERS[family]
        params = {k: _decimal_string(v) for k, v in dict(self.params).items()}
        missing = [p for p in expected if p not in params]
        extra = [p for p in params if p not in expected]
        if missing or extra:
            raise ValueError(f"{family.value} takes parameters {expected}; missing {missing}, unexpected {extra}")
        object.__setattr__(self, "params", dict(sorted(params.items())))

    def __hash__(self):
        return hash((self.family, tuple(self.params.items())))

    # accessors evaluate at the ambient precision
    def __getitem__(self, name: str) -> mpf:
        return mpf(self.params[name])

    @property
    def support(self) -> str:
        return SUPPORT[self.family]

    @property
    def kind(self) -> str:
        return "toeplitz" if self.family is Family.CIRCLE else "hankel"

    @property
    def deformation(self) -> str:
        return DEFORMATION[self.family]

    def with_param(self, name: str, value) -> "WeightSpec":
        params = dict(self.params)
        params[name] = _decimal_string(value)
        return WeightSpec(self.family, params)

    def validate(self) -> None:
        """Raise DivergentMoment when the weight is not a finite positive measure."""
        f = self.family
        p = {k: mpf(v) for k, v in self.params.items()}
        bad = None
        if f in (Family.MODIFIED_LAGUERRE,) and p["alpha"] <= -1:
            bad = "alpha > -1 required"
        elif f is Family.CHEN_ITS:
            if p["alpha"] <= -1:
                bad = "alpha > -1 required"
            elif p["t"] <= 0:
                bad = "t > 0 required for e^(-t/x) to be integrable at 0"
        elif f is Family.JACOBI_TODA and (p["alpha"] <= -1 or p["beta"] <= -1):
            bad = "alpha, beta > -1 required"
        elif f is Family.CHARLIER and (p["a"] <= 0 or p["beta"] <= 0):
            bad = "a, beta > 0 required"
        elif f is Family.MEIXNER and (p["a"] <= 0 or p["beta"] <= 0 or p["gamma"] <= 0):
            bad = "a, beta, gamma > 0 required"
        elif f is Family.HYPERGEOMETRIC:
            if min(p["alpha"], p["beta"], p["gamma"]) <= 0:
                bad = "alpha, beta, gamma > 0 required"
            elif not 0 < p["a"] < 1:
                bad = "0 < a < 1 required"
        if bad:
            raise DivergentMoment(f"{f.value}: {bad}")

    def to_config(self) -> dict:
        return {"family": self.family.value, **self.params}

    @classmethod
    def from_config(cls, block: Mapping) -> "WeightSpec":
        block = dict(block)
        try:
            family = Family(block.pop("family"))
        except KeyError:
            raise ConfigError("missing key", "weight.family") from None
        except ValueError as exc:
            raise ConfigError(str(exc), "weight.family") from None
        try:
            return cls(family, block)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc), "weight") from None


def freud(t) -> WeightSpec:
    return WeightSpec(Family.FREUD, {"t": t})


def modified_laguerre(alpha, t) -> WeightSpec:
    return WeightSpec(Family.MODIFIED_LAGUERRE, {"alpha": alpha, "t": t})


def chen_its(alpha, t) -> WeightSpec:
    return WeightSpec(Family.CHEN_ITS, {"alpha": alpha, "t": t})


def jacobi_toda(alpha, beta, t) -> WeightSpec:
    return WeightSpec(Family.JACOBI_TODA, {"alpha": alpha, "beta": beta, "t": t})


def charlier(a, beta) -> WeightSpec:
    return WeightSpec(Family.CHARLIER, {"a": a, "beta": beta})


def meixner(a, beta, gamma) -> WeightSpec:
    return WeightSpec(Family.MEIXNER, {"a": a, "beta": beta, "gamma": gamma})


def hypergeometric(alpha, beta, gamma, a) -> WeightSpec:
    return WeightSpec(Family.HYPERGEOMETRIC, {"alpha": alpha, "beta": beta, "gamma": gamma, "a": a})


def circle(t) -> WeightSpec:
    return WeightSpec(Family.CIRCLE, {"t": t})


# -- series routes ----------------------------------------------------------

def _freud_moment(t, k, tol):
    if k % 2:
        return mpf(0)
    # m_k = sum_j t^j/j! * Gamma((k+2j+1)/4)/2 ; Gamma argument steps by 1/2
    gam = [mpmath.gamma(mpf(k + 1) / 4), mpmath.gamma(mpf(k + 3) / 4)]
    coef = [mpf(1)]

    def term(j):
        if j >= 2:
            gam.append(gam[j - 2] * (mpf(k + 2 * j - 3) / 4))
        if j >= 1:
            coef.append(coef[j - 1] * t / j)
        return coef[j] * gam[j] / 2

    if t == 0:
        return term(0)
    return sum_series(term, tol)


def _laguerre_moment(alpha, t, k, tol):
    # m_k = sum_j t^j/j! * Gamma((k+j+alpha+1)/2)/2
    gam = [mpmath.gamma((k + alpha + 1) / 2), mpmath.gamma((k + alpha + 2) / 2)]
    coef = [mpf(1)]

    def term(j):
        if j >= 2:
            gam.append(gam[j - 2] * ((k + j - 2 + alpha + 1) / 2))
        if j >= 1:
            coef.append(coef[j - 1] * t / j)
        return coef[j] * gam[j] / 2

    if t == 0:
        return term(0)
    return sum_series(term, tol)


def _chen_its_moment(alpha, t, k):
    nu = k + alpha + 1
    return 2 * t ** (nu / 2) * mpmath.besselk(nu, 2 * mpmath.sqrt(t))


class _JacobiBase:
    """Moments of (1-x)^alpha (1+x)^beta on [-1,1], by the three-term
    recurrence (alpha+beta+2+k) M_{k+1} = (beta-alpha) M_k + k M_{k-1}."""

    def __init__(self, alpha, beta):
        self.alpha, self.beta = alpha, beta
        m0 = 2 ** (alpha + beta + 1) * mpmath.beta(alpha + 1, beta + 1)
        self.M = [m0, m0 * (beta - alpha) / (alpha + beta + 2)]

    def __getitem__(self, k):
        M, a, b = self.M, self.alpha, self.beta
        while len(M) <= k:
            j = len(M) - 1
            M.append(((b - a) * M[j] + j * M[j - 1]) / (a + b + 2 + j))
        return M[k]


def _jacobi_toda_moment(alpha, beta, t, k, tol, base=None):
    base = base or _JacobiBase(alpha, beta)
    if t == 0:
        return base[k]
    coef = [mpf(1)]

    def term(j):
        if j >= 1:
            coef.append(coef[j - 1] * (-t) / j)
        return coef[j] * base[k + j]

    return sum_series(term, tol)


class _LatticeWeights:
    """Lattice weights w_0 = 1, w_{n+1} = w_n * ratio(n), cached."""

    def __init__(self, spec: WeightSpec):
        f = spec.family
        a = spec["a"]
        if f is Family.CHARLIER:
            beta = spec["beta"]
            self.ratio = lambda n: a / ((beta + n) * (n + 1))
        elif f is Family.MEIXNER:
            beta, gamma = spec["beta"], spec["gamma"]
            self.ratio = lambda n: (gamma + n) * a / ((beta + n) * (n + 1))
        else:
            al, be, ga = spec["alpha"], spec["beta"], spec["gamma"]
            self.ratio = lambda n: (al + n) * (be + n) * a / ((ga + n) * (n + 1))
        self.w = [mpf(1)]

    def __getitem__(self, n):
        w = self.w
        while len(w) <= n:
            w.append(w[-1] * self.ratio(len(w) - 1))
        return w[n]


def _lattice_moment(weights: _LatticeWeights, k, tol):
    def term(n):
        if k == 0:
            return weights[n]
        return mpf(n) ** k * weights[n]

    return sum_series(term, tol)


# -- quadrature route -------------------------------------------------------

def _tail_cutoff(log_integrand, digits):
    """Smallest power-of-two X (>= 2) with log|integrand(X)| below -digits*ln10."""
    limit = -(digits + 10) * mpmath.log(10)
    x = mpf(2)
    while log_integrand(x) > limit:
        x *= 2
    return x


def _breakpoints(lo, hi):
    pts = [lo]
    x = mpf(1)
    while x < hi:
        if x > lo:
            pts.append(x)
        x *= 4
    pts.append(hi)
    return pts


def quadrature_moment(spec: WeightSpec, k: int, digits: int) -> mpf:
    """Independent route: numerical integration over a truncated domain."""
    spec.validate()
    f = spec.family
    with mp.workdps(digits + GUARD_DIGITS):
        if f is Family.FREUD:
            t = spec["t"]
            X = _tail_cutoff(lambda x: k * mpmath.log(x) - x**4 + t * x**2, digits)
            pts = _breakpoints(mpf(0), X)
            half = mpmath.quad(lambda x: x**k * mpmath.exp(-x**4 + t * x**2), pts)
            return half * (1 + (-1) ** k)
        if f is Family.MODIFIED_LAGUERRE:
            al, t = spec["alpha"], spec["t"]
            X = _tail_cutoff(lambda x: (k + al) * mpmath.log(x) - x**2 + t * x, digits)
            return mpmath.quad(lambda x: x ** (k + al) * mpmath.exp(-x**2 + t * x), _breakpoints(mpf(0), X))
        if f is Family.CHEN_ITS:
            al, t = spec["alpha"], spec["t"]
            X = _tail_cutoff(lambda x: (k + al) * mpmath.log(x) - x, digits)
            return mpmath.quad(lambda x: x ** (k + al) * mpmath.exp(-x - t / x) if x else mpf(0),
                               _breakpoints(mpf(0), X))
        if f is Family.JACOBI_TODA:
            al, be, t = spec["alpha"], spec["beta"], spec["t"]
            return mpmath.quad(lambda x: x**k * (1 - x) ** al * (1 + x) ** be * mpmath.exp(-t * x), [-1, 0, 1])
        if f is Family.CIRCLE:
            t = spec["t"]
            half = mpmath.quad(lambda th: mpmath.cos(k * th) * mpmath.exp(t * mpmath.cos(th)), [0, mpmath.pi / 2, mpmath.pi])
            return half / mpmath.pi
    raise ValueError(f"no quadrature route for {f.value}")


# -- public moment operations -----------------------------------------------

def _power_moment_raw(spec: WeightSpec, k: int, tol, cache=None):
    f = spec.family
    if f is Family.FREUD:
        return _freud_moment(spec["t"], k, tol)
    if f is Family.MODIFIED_LAGUERRE:
        return _laguerre_moment(spec["alpha"], spec["t"], k, tol)
    if f is Family.CHEN_ITS:
        return _chen_its_moment(spec["alpha"], spec["t"], k)
    if f is Family.JACOBI_TODA:
        return _jacobi_toda_moment(spec["alpha"], spec["beta"], spec["t"], k, tol, cache)
    if f in LATTICE:
        return _lattice_moment(cache or _LatticeWeights(spec), k, tol)
    raise ValueError(f"{f.value} has no power moments; use trig_moment")


def _cache_for(spec):
    if spec.family is Family.JACOBI_TODA:
        return _JacobiBase(spec["alpha"], spec["beta"])
    if spec.family in LATTICE:
        return _LatticeWeights(spec)
    return None


def _check_agreement(primary, oracle, digits, what):
    scale = abs(oracle) or 1
    agree = digits_from_disagreement(abs(primary - oracle) / scale, digits + GUARD_DIGITS)
    if agree < digits - 3:
        raise CrossCheckFailure(f"{what}: series and quadrature agree to only {agree} digits (wanted {digits})")
    return agree


def power_moment(spec: WeightSpec, k: int, digits: int, crosscheck: bool = False) -> mpf:
    """m_k of a real-line or lattice family, accurate to ``digits`` digits."""
    spec.validate()
    if spec.family is Family.CIRCLE:
        raise ValueError("CircleExpCos has trigonometric moments; use trig_moment")
    if k < 0:
        raise ValueError("k must be non-negative")
    with mp.workdps(digits + GUARD_DIGITS):
        value = _power_moment_raw(spec, k, mpf(10) ** (-(digits + GUARD_DIGITS)), _cache_for(spec))
    if crosscheck and spec.family not in LATTICE:
        _check_agreement(value, quadrature_moment(spec, k, digits), digits, f"{spec.family.value} m_{k}")
    return value


def trig_moment(spec: WeightSpec, k: int, digits: int, crosscheck: bool = False) -> mpf:
    """c_k = (1/2pi) int e^{-ik theta} e^{t cos theta} d theta = I_|k|(t)."""
    if spec.family is not Family.CIRCLE:
        raise ValueError("trig_moment needs the CircleExpCos family")
    with mp.workdps(digits + GUARD_DIGITS):
        t = spec["t"]
        value = mpf(1) if (t == 0 and k == 0) else (mpf(0) if t == 0 else mpmath.besseli(abs(k), t))
    if crosscheck:
        _check_agreement(value, quadrature_moment(spec, abs(k), digits), digits, f"CircleExpCos c_{k}")
    return value


@dataclass(frozen=True)
class MomentTable:
    """Immutable moment table.

    Hankel tables hold m_0..m_{2K}; Toeplitz tables hold c_0..c_K (the
    measure is real and even, so c_{-k} = c_k).
    """

    kind: str
    entries: tuple
    spec: WeightSpec
    certified_digits: int
    precision: int

    @property
    def K(self) -> int:
        return (len(self.entries) - 1) // 2 if self.kind == "hankel" else len(self.entries) - 1

    def moment(self, k: int):
        if self.kind == "toeplitz":
            # conjugate symmetry; entries are real for this family
            return self.entries[abs(k)]
        return self.entries[k]


def leading_pivots(matrix_entry, size: int) -> list:
    """Pivots Delta_n / Delta_{n-1} of Gaussian elimination without pivoting."""
    A = [[matrix_entry(i, j) for j in range(size)] for i in range(size)]
    pivots = []
    for c in range(size):
        p = A[c][c]
        pivots.append(p)
        if p == 0:
            break
        for r in range(c + 1, size):
            factor = A[r][c] / p
            if factor:
                row_r, row_c = A[r], A[c]
                for j in range(c + 1, size):
                    row_r[j] -= factor * row_c[j]
    return pivots


def leading_determinants(table: MomentTable, upto: int | None = None) -> list:
    """Delta_0..Delta_K of the Hankel or Toeplitz matrix of the table."""
    size = (upto if upto is not None else table.K) + 1
    if table.kind == "hankel":
        entry = lambda i, j: table.entries[i + j]
    else:
        entry = lambda i, j: table.moment(j - i)
    dets, acc = [], mpf(1)
    for p in leading_pivots(entry, size):
        acc *= p
        dets.append(acc)
    return dets


def _compute_entries(spec: WeightSpec, K: int, digits: int) -> list:
    with mp.workdps(digits + GUARD_DIGITS):
        tol = mpf(10) ** (-(digits + GUARD_DIGITS))
        if spec.kind == "toeplitz":
            return [trig_moment(spec, k, digits) for k in range(K + 1)]
        cache = _cache_for(spec)
        return [_power_moment_raw(spec, k, tol, cache) for k in range(2 * K + 1)]


def moment_table(spec: WeightSpec, K: int, digits: int, crosscheck: bool | Sequence[int] = False,
                 validate: bool = True) -> MomentTable:
    """Moments 0..2K (Hankel) or 0..K (Toeplitz) with determinant validation.

    ``crosscheck`` may be True (indices 0, 1 and the last) or an explicit
    list of indices to confirm by quadrature.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    spec.validate()
    entries = _compute_entries(spec, K, digits)
    if crosscheck and spec.family not in LATTICE:
        last = len(entries) - 1
        idx = sorted({0, 1, last}) if crosscheck is True else list(crosscheck)
        for k in idx:
            _check_agreement(entries[k], quadrature_moment(spec, k, digits), digits,
                             f"{spec.family.value} moment {k}")
    table = MomentTable(spec.kind, tuple(entries), spec, digits, digits + GUARD_DIGITS)
    if validate:
        with mp.workdps(digits + GUARD_DIGITS):
            _validate_positivity(table)
    return table


def _validate_positivity(table: MomentTable) -> None:
    if table.entries[0] <= 0:
        raise PositivityViolation("m_0 must be positive")
    dets = leading_determinants(table)
    bad = next((n for n, d in enumerate(dets) if d <= 0), None)
    if bad is None and len(dets) == table.K + 1:
        return
    if bad is None:
        bad = len(dets)
    # distinguish lost precision from an invalid measure by doubling
    hi = moment_table(table.spec, table.K, 2 * table.certified_digits, validate=False)
    with mp.workdps(2 * table.precision):
        dets_hi = leading_determinants(hi)
    if len(dets_hi) == table.K + 1 and all(d > 0 for d in dets_hi):
        raise PositivityViolation(
            f"determinant {bad} not positive at {table.certified_digits} digits but positive at "
            f"{hi.certified_digits}: insufficient precision")
    raise PositivityViolation(f"determinant {bad} not positive even at doubled precision: invalid measure")
