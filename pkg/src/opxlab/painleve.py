"""Discrete and continuous Painleve checks on moment-derived recurrence data.

Every identity is evaluated as displayed, with no denominators cleared, and
reported as |LHS - RHS| per index.  Where a displayed formula admits more than
one reading, all candidate readings are evaluated and the one whose
residuals vanish is locked; the choice is recorded in the report notes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import mpmath
from mpmath import mp, mpf

from .direct import (
    RecurrenceData,
    recurrence_coefficients,
    recurrence_on_grid,
    verblunsky_coefficients,
    verblunsky_on_grid,
)
from .errors import BranchAmbiguity, IndexOutOfStencil, SingularDenominator
from .numerics import GridFunction, central_derivative, default_digits, grid_step, to_mpf, uniform_grid
from .report import ResidualReport, decimal
from .weights import Family, WeightSpec

# Labels from the geometric classification; documentation only.
CLASSIFICATION = {
    Family.FREUD: "d-P_I",
    Family.CHEN_ITS: "d-P((2A_1)^(1)/D_6^(1))",
    Family.JACOBI_TODA: "d-P(D_4^(1)/D_4^(1)) after a change of variables",
    Family.MODIFIED_LAGUERRE: "d-P(A_2^(1)/E_6^(1)) after a change of variables",
    Family.CHARLIER: "limiting case of d-P(D_4^(1)/D_4^(1))",
    Family.MEIXNER: "d-P(E_6^(1)/A_2^(1))",
    Family.HYPERGEOMETRIC: "d-P(D_4^(1)/D_4^(1))",
    Family.CIRCLE: "d-P_II",
}


def _div(num, den, index=None, what="denominator"):
    if den == 0:
        raise SingularDenominator(f"{what} vanishes" + (f" at n={index}" if index is not None else ""), index)
    return num / den


@dataclass
class AuxVariables:
    family: Family
    sequences: dict
    params: dict
    notes: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.sequences[name]


@dataclass(frozen=True)
class PainleveParams:
    A: object
    B: object
    C: object
    D: object


def meixner_params(beta, gamma, n) -> PainleveParams:
    return PainleveParams((beta - 1) ** 2 / 2, -mpf(n) ** 2 / 2, n - beta + 2 * gamma, -mpf(1) / 2)


def hypergeometric_params(alpha, beta, gamma, n) -> PainleveParams:
    return PainleveParams((alpha - 1) ** 2 / 2, -(beta - gamma) ** 2 / 2, (n + beta) ** 2 / 2,
                          mpf(1) / 2 - (n + alpha - gamma) ** 2 / 2)


def _params(spec: WeightSpec) -> dict:
    return {k: spec[k] for k in spec.params}


# -- auxiliary variables ----------------------------------------------------

def bce_roots(n, t, R, a_sq, alpha, beta):
    """Both roots in r of t(t+R) a_n^2 = n(n+beta) - (2n+alpha+beta) r - t r (r+alpha)/R."""
    A = _div(t, R, n, "R_n")
    B = 2 * n + alpha + beta + t * alpha / R
    C = t * (t + R) * a_sq - n * (n + beta)
    if C == 0:
        return mpf(0), -B / A
    disc = mpmath.sqrt(B * B - 4 * A * C)
    return (-B + disc) / (2 * A), (-B - disc) / (2 * A)


def bce_product_residual(n, t, R, r, alpha, beta):
    lhs = (t / R[n] + 1) * (t / R[n - 1] + 1)
    rhs = 1 + _div(n * (n + beta) - (2 * n + alpha + beta) * r, r * (r + alpha), n, "r_n (r_n + alpha)")
    return abs(lhs - rhs)


def aux_extract(spec: WeightSpec, data, hypergeometric_t: str = "1/c", branch_tol=None) -> AuxVariables:
    """Invert the family's algebraic parametrisation of the recurrence coefficients."""
    f = spec.family
    p = _params(spec)
    if f is Family.CIRCLE:
        return AuxVariables(f, {"alpha": tuple(data.alpha)}, p)
    a_sq, b = data.a_sq, data.b
    N = data.N
    if f is Family.FREUD:
        return AuxVariables(f, {"x": tuple(a_sq)}, p)
    if f is Family.CHEN_ITS:
        al = p["alpha"]
        c = [b[n] - (2 * n + al + 1) for n in range(N)]
        d = [a_sq[n] - n * (n + al) - mpmath.fsum(c[:n]) for n in range(N + 1)]
        x = [_div(1, c[n], n, "c_n") for n in range(N)]
        return AuxVariables(f, {"c": tuple(c), "d": tuple(d), "x": tuple(x), "y": tuple(d)}, p)
    if f is Family.JACOBI_TODA:
        al, be, t = p["alpha"], p["beta"], p["t"]
        R = [(2 * n + 1 + al + be - t - t * b[n]) / 2 for n in range(N)]
        for n, v in enumerate(R):
            if v == 0:
                raise SingularDenominator("R_n vanishes", n)
        # B_0 vanishes identically, which forces r_0 = 0 (a root since a_0^2 = 0)
        r = [mpf(0)]
        worst = mpf(0)
        for n in range(1, N):
            roots = bce_roots(n, t, R[n], a_sq[n], al, be)
            scored = sorted(((bce_product_residual(n, t, R, x, al, be), i, x) for i, x in enumerate(roots)),
                            key=lambda s: s[0])
            worst = max(worst, scored[0][0])
            r.append(scored[0][2])
        tol = mpf(10) ** (-(data.certified_digits // 2)) if branch_tol is None else branch_tol
        if worst > tol:
            raise BranchAmbiguity(f"no root of the quadratic satisfies the product equation (best {mpmath.nstr(worst, 5)})")
        return AuxVariables(f, {"R": tuple(R), "r": tuple(r)}, p,
                            {"branch": "per-index root minimising the product equation; r_0 = 0"})
    if f is Family.MODIFIED_LAGUERRE:
        al, t = p["alpha"], p["t"]
        y = [2 * a_sq[n] - n - al / 2 for n in range(N + 1)]
        x = [_div(mpmath.sqrt(2), t - 2 * b[n], n, "t - 2 b_n") for n in range(N)]
        return AuxVariables(f, {"x": tuple(x), "y": tuple(y)}, p)
    if f is Family.CHARLIER:
        return AuxVariables(f, {"d": tuple(b[n] - n for n in range(N))}, p)
    if f is Family.MEIXNER:
        a, be, ga = p["a"], p["beta"], p["gamma"]
        if ga == 1:
            raise SingularDenominator("gamma - 1 vanishes")
        u = [(n * a - a_sq[n]) / (ga - 1) for n in range(N + 1)]
        v = [a * (n + ga - be + a - b[n]) / (ga - 1) for n in range(N)]
        return AuxVariables(f, {"u": tuple(u), "v": tuple(v)}, p)
    if f is Family.HYPERGEOMETRIC:
        al, be, ga, c = p["alpha"], p["beta"], p["gamma"], p["a"]
        x = [b[n] - (n + (n + al + be) * c - ga) / (1 - c) for n in range(N)]
        y = [(1 - c) / c * a_sq[n] - mpmath.fsum(x[:n]) - n * (n + al + be - ga - 1) / (1 - c) for n in range(N)]
        t = {"c": c, "1/c": 1 / c}[hypergeometric_t]
        fs, gs = [], []
        for n in range(N):
            Q = (x[n] - al) * (x[n] - be) - n * x[n] - y[n]
            fs.append(_div((x[n] - be) * (x[n] - ga), c * Q, n, "f_n denominator"))
            gs.append(-(x[n] - ga) * _div(Q - t * (x[n] - be) * (x[n] - ga + be + n),
                                          Q - t * (x[n] - be) * (x[n] - ga), n, "g_n denominator"))
        return AuxVariables(f, {"x": tuple(x), "y": tuple(y), "f": tuple(fs), "g": tuple(gs)}, p,
                            {"t_in_g": hypergeometric_t})
    raise ValueError(f"no auxiliary variables for {f.value}")


def substitute_back(aux: AuxVariables):
    """(a_sq, b) rebuilt from the auxiliary variables through the defining relations."""
    f, s, p = aux.family, aux.sequences, aux.params
    if f is Family.FREUD:
        return tuple(s["x"]), None
    if f is Family.CHEN_ITS:
        al = p["alpha"]
        c, d = s["c"], s["d"]
        b = [2 * n + al + 1 + c[n] for n in range(len(c))]
        a_sq = [n * (n + al) + d[n] + mpmath.fsum(c[:n]) for n in range(len(d))]
        return tuple(a_sq), tuple(b)
    if f is Family.MODIFIED_LAGUERRE:
        al, t = p["alpha"], p["t"]
        a_sq = [(y + n + al / 2) / 2 for n, y in enumerate(s["y"])]
        b = [(t - mpmath.sqrt(2) / x) / 2 for x in s["x"]]
        return tuple(a_sq), tuple(b)
    if f is Family.CHARLIER:
        return None, tuple(d + n for n, d in enumerate(s["d"]))
    if f is Family.MEIXNER:
        a, be, ga = p["a"], p["beta"], p["gamma"]
        a_sq = [n * a - (ga - 1) * u for n, u in enumerate(s["u"])]
        b = [n + ga - be + a - (ga - 1) / a * v for n, v in enumerate(s["v"])]
        return tuple(a_sq), tuple(b)
    if f is Family.JACOBI_TODA:
        al, be, t = p["alpha"], p["beta"], p["t"]
        R, r = s["R"], s["r"]
        b = [(2 * n + 1 + al + be - t - 2 * R[n]) / t for n in range(len(R))]
        a_sq = [(n * (n + be) - (2 * n + al + be) * r[n] - t * r[n] * (r[n] + al) / R[n]) / (t * (t + R[n]))
                for n in range(len(r))]
        return tuple(a_sq), tuple(b)
    if f is Family.HYPERGEOMETRIC:
        al, be, ga, c = p["alpha"], p["beta"], p["gamma"], p["a"]
        x, y = s["x"], s["y"]
        b = [x[n] + (n + (n + al + be) * c - ga) / (1 - c) for n in range(len(x))]
        a_sq = [c / (1 - c) * (y[n] + mpmath.fsum(x[:n]) + n * (n + al + be - ga - 1) / (1 - c))
                for n in range(len(y))]
        return tuple(a_sq), tuple(b)
    return None, None


# -- discrete Painleve residuals --------------------------------------------

def _report(name, indices, fn, tolerance, notes=None):
    residuals = []
    for n in indices:
        residuals.append(abs(fn(n)))
    return ResidualReport(name, list(indices), residuals, tolerance, dict(notes or {}))


def _upto(last, n_max):
    return last if n_max is None else min(last, n_max)


def dp_residual(spec: WeightSpec, data, tolerance=None, n_max: int | None = None,
                readings: dict | None = None) -> list:
    """Residual reports of the family's discrete Painleve system (one per equation).

    ``readings`` selects among ambiguous readings: {"bce_sum": "literal"|"corrected",
    "hypergeometric_t": "c"|"1/c"}.
    """
    readings = dict(readings or {})
    f = spec.family
    p = _params(spec)
    if tolerance is None:
        tolerance = mpf(10) ** (-mpf(data.certified_digits) / 2)
    N = data.N
    if f is Family.CIRCLE:
        t = p["t"]
        al = (mpf(-1),) + tuple(data.alpha)

        def eq(n):
            return -t / 2 * (1 - al[n + 1] ** 2) * (al[n + 2] + al[n]) - (n + 1) * al[n + 1]
        return [_report("dPII", range(0, _upto(N - 2, n_max) + 1), eq, tolerance)]
    if f is Family.FREUD:
        t, a = p["t"], data.a_sq

        def eq(n):
            return 4 * a[n] * (a[n + 1] + a[n] + a[n - 1] - t / 2) - n
        return [_report("dPI", range(1, _upto(N - 1, n_max) + 1), eq, tolerance)]
    aux = aux_extract(spec, data, readings.get("hypergeometric_t", "1/c"))
    s = aux.sequences
    if f is Family.CHEN_ITS:
        al, t, x, y = p["alpha"], p["t"], s["x"], s["y"]
        return [
            _report("chen-its-1", range(1, _upto(N - 1, n_max) + 1),
                    lambda n: x[n] + x[n - 1] - _div(n * t - (2 * n + al) * y[n], y[n] * (y[n] - t), n), tolerance),
            _report("chen-its-2", range(0, _upto(N - 1, n_max) + 1),
                    lambda n: y[n] + y[n + 1] - (t - (2 * n + al + 1) / x[n] - 1 / x[n] ** 2), tolerance),
        ]
    if f is Family.JACOBI_TODA:
        al, be, t, R, r = p["alpha"], p["beta"], p["t"], s["R"], s["r"]
        reading = readings.get("bce_sum", "corrected")
        shift = t if reading == "literal" else 2 * t

        def sum_eq(n):
            return 2 * t * (r[n] + r[n + 1]) - (4 * R[n] ** 2 - 2 * R[n] * (2 * n + 1 + al + be - shift) - 2 * al * t)
        notes = {"bce_sum": reading, "branch": aux.notes["branch"]}
        return [
            _report("bce-sum", range(0, _upto(N - 2, n_max) + 1), sum_eq, tolerance, notes),
            _report("bce-product", range(1, _upto(N - 1, n_max) + 1),
                    lambda n: bce_product_residual(n, t, R, r[n], al, be), tolerance, notes),
        ]
    if f is Family.MODIFIED_LAGUERRE:
        al, t, x, y = p["alpha"], p["t"], s["x"], s["y"]
        return [
            _report("mod-laguerre-1", range(1, _upto(N - 1, n_max) + 1),
                    lambda n: x[n] * x[n - 1] - _div(y[n] + n + al / 2, y[n] ** 2 - al ** 2 / 4, n), tolerance),
            _report("mod-laguerre-2", range(0, _upto(N - 1, n_max) + 1),
                    lambda n: y[n] + y[n + 1] - 1 / x[n] * (t / mpmath.sqrt(2) - 1 / x[n]), tolerance),
        ]
    if f is Family.CHARLIER:
        a, be, d, A = p["a"], p["beta"], s["d"], data.a_sq
        return [
            _report("charlier-1", range(0, _upto(N - 1, n_max) + 1),
                    lambda n: (A[n + 1] - a) * (A[n] - a) - a * d[n] * (d[n] + be - 1), tolerance),
            _report("charlier-2", range(1, _upto(N - 1, n_max) + 1),
                    lambda n: d[n] + d[n - 1] - (-n - be + 1 + _div(a * n, A[n], n)), tolerance),
        ]
    if f is Family.MEIXNER:
        a, be, ga, u, v = p["a"], p["beta"], p["gamma"], s["u"], s["v"]
        k = (ga - be) / (ga - 1)
        return [
            _report("meixner-1", range(0, _upto(N - 1, n_max) + 1),
                    lambda n: (u[n] + v[n]) * (u[n + 1] + v[n]) - (ga - 1) / a ** 2 * v[n] * (v[n] - a) * (v[n] - a * k),
                    tolerance),
            _report("meixner-2", range(1, _upto(N - 1, n_max) + 1),
                    lambda n: (u[n] + v[n]) * (u[n] + v[n - 1])
                    - _div(u[n], u[n] - a * n / (ga - 1), n) * (u[n] + a) * (u[n] + a * k), tolerance),
        ]
    if f is Family.HYPERGEOMETRIC:
        al, be, ga, c, F, G = p["alpha"], p["beta"], p["gamma"], p["a"], s["f"], s["g"]
        notes = {"t_in_g": aux.notes["t_in_g"]}

        def eq1(n):
            return F[n + 1] * F[n] - _div(G[n] * (G[n] - ga + be),
                                          c * (G[n] + n + be - ga + 1) * (G[n] + n + al + be - ga), n)

        def eq2(n):
            # the displayed constant -2n + gamma - alpha - 2 beta + gamma, evaluated literally
            const = -2 * n + ga - al - 2 * be + ga
            return G[n] + G[n - 1] - (const - _div(n + be, F[n] - 1, n) - _div(n + al - ga, c * F[n] - 1, n))
        return [
            _report("hypergeometric-1", range(0, _upto(N - 2, n_max) + 1), eq1, tolerance, notes),
            _report("hypergeometric-2", range(1, _upto(N - 1, n_max) + 1), eq2, tolerance, notes),
        ]
    raise ValueError(f"no discrete system for {f.value}")


def resolve_reading(candidates: dict, evaluate: Callable[[str], list]):
    """Evaluate every candidate reading; lock the unique one whose reports pass.

    Returns (locked reading, its reports, notes).  When several readings pass
    they are reported as equivalent and the first is kept; when none passes the
    reading with the smallest worst residual is returned (and its reports fail).
    """
    results = {}
    for name in candidates:
        try:
            reps = evaluate(name)
            worst = max(r.max_residual / r.tolerance for r in reps)
        except SingularDenominator:
            reps, worst = None, mpf("inf")
        results[name] = (reps, worst)
    passing = [n for n in candidates if results[n][0] is not None and all(r.passed for r in results[n][0])]
    summary = "; ".join(f"{n}: worst/tol {decimal(results[n][1], 3)}" for n in candidates)
    if len(passing) == 1:
        locked, status = passing[0], "unique"
    elif passing:
        locked, status = passing[0], "equivalent"
    else:
        locked = min(candidates, key=lambda n: results[n][1])
        status = "none-passed"
    notes = {"reading": locked, "resolution": status, "candidates": summary, "meaning": candidates[locked]}
    reps = results[locked][0] or []
    for r in reps:
        r.notes.update(notes)
    return locked, reps, notes


BCE_SUM_READINGS = {
    "literal": "2t(r_n + r_{n+1}) = 4R_n^2 - 2R_n(2n+1+alpha+beta-t) - 2 alpha t",
    "corrected": "2t(r_n + r_{n+1}) = 4R_n^2 - 2R_n(2n+1+alpha+beta-2t) - 2 alpha t",
}
HYPERGEOMETRIC_T_READINGS = {"c": "t = c inside g_n", "1/c": "t = 1/c inside g_n (ct = 1)"}
HYPERGEOMETRIC_CONSTANT_READINGS = {
    "literal": "-2n + gamma - alpha - 2 beta + gamma",
    "collected": "-2n - alpha - 2 beta + 2 gamma",
}


def dp_check(spec: WeightSpec, N: int = 15, digits: int | None = None, n_max: int | None = None):
    """Run the moment pipeline and the family's discrete system with reading
    resolution.  Returns (reports, resolutions)."""
    digits = digits or default_digits()
    n_max = N - 2 if n_max is None else n_max
    if spec.family is Family.CIRCLE:
        data = verblunsky_coefficients(spec, N, digits)
    else:
        data = recurrence_coefficients(spec, N, digits)
    resolutions = {}
    with mp.workdps(data.precision):
        if spec.family is Family.JACOBI_TODA:
            locked, reps, notes = resolve_reading(
                BCE_SUM_READINGS, lambda r: dp_residual(spec, data, n_max=n_max, readings={"bce_sum": r}))
            resolutions["bce_sum"] = notes
        elif spec.family is Family.HYPERGEOMETRIC:
            locked, reps, notes = resolve_reading(
                HYPERGEOMETRIC_T_READINGS,
                lambda r: dp_residual(spec, data, n_max=n_max, readings={"hypergeometric_t": r}))
            resolutions["hypergeometric_t"] = notes
            resolutions["hypergeometric_constant"] = _constant_readings(spec, data, locked)
        else:
            reps = dp_residual(spec, data, n_max=n_max)
    for r in reps:
        r.notes.setdefault("family", spec.family.value)
        r.notes.setdefault("certified_digits", data.certified_digits)
    return reps, resolutions


def _constant_readings(spec, data, t_reading) -> dict:
    """Compare the two readings of the constant in the second hypergeometric equation."""
    p = _params(spec)
    al, be, ga = p["alpha"], p["beta"], p["gamma"]
    worst = max(abs((-2 * n + ga - al - 2 * be + ga) - (-2 * n - al - 2 * be + 2 * ga)) for n in range(data.N))
    scale = abs(al) + 2 * abs(be) + 2 * abs(ga) + 2 * data.N
    same = worst <= scale * mpf(10) ** (-(mp.dps - 5))
    return {"reading": "literal", "resolution": "equivalent" if same else "differ",
            "candidates": "; ".join(f"{k}: {v}" for k, v in HYPERGEOMETRIC_CONSTANT_READINGS.items()),
            "max_difference": decimal(worst, 3)}


def propagate_dpi(a1_sq, a2_sq, t, upto: int) -> list:
    """a_n^2 for n = 0..upto from dP_I run forward: a_{n+1}^2 = n/(4a_n^2) - a_n^2 - a_{n-1}^2 + t/2."""
    a = [mpf(0), a1_sq, a2_sq]
    for n in range(2, upto):
        a.append(n / (4 * a[n]) - a[n] - a[n - 1] + t / 2)
    return a[:upto + 1]


# -- structure relations ----------------------------------------------------

def _apply_x(vec, a, b):
    """Coefficients of x*q from the orthonormal-basis coefficients of q."""
    out = [mpf(0)] * (len(vec) + 1)
    for k, c in enumerate(vec):
        if c == 0:
            continue
        out[k] += b[k] * c
        out[k + 1] += a[k + 1] * c
        if k:
            out[k - 1] += a[k] * c
    return out


def _pad(vec, size):
    return list(vec) + [mpf(0)] * (size - len(vec))


def derivative_expansion(rec: RecurrenceData, n: int) -> list:
    """Coefficients of p_n' in the orthonormal basis p_0..p_{n-1}."""
    a = [mpmath.sqrt(v) for v in rec.a_sq]
    b = rec.b
    d = [[], []]                    # p_0' = 0; vectors are padded as they grow
    d[0] = [mpf(0)]
    # p_1 = (x - b_0)/a_1, so p_1' = 1/a_1
    if n == 0:
        return []
    d[1] = [1 / a[1]]
    for k in range(1, n):
        size = k + 1
        xk = _apply_x(d[k], a, b)
        term = _pad(xk, size + 1)
        cur = _pad(d[k], size + 1)
        prev = _pad(d[k - 1], size + 1)
        new = [mpf(0)] * (size + 1)
        new[k] += 1                                  # p_k itself
        for i in range(size + 1):
            new[i] += term[i] - b[k] * cur[i] - a[k] * prev[i]
        d.append([v / a[k + 1] for v in new][:k + 1])
    return d[n]


def shift_expansion(rec: RecurrenceData, n: int) -> list:
    """Coefficients of p_n(x+1) - p_n(x) in the orthonormal basis."""
    a = [mpmath.sqrt(v) for v in rec.a_sq]
    b = rec.b
    # S_k = coefficients of p_k(x+1); p_0 = 1/sqrt(m_0) is handled by normalising to e_0
    S = [[mpf(1)]]
    prev = [mpf(0)]
    for k in range(n):
        xs = _apply_x(S[k], a, b)
        size = k + 2
        cur = _pad(S[k], size)
        pr = _pad(prev, size)
        xs = _pad(xs, size)
        new = [(xs[i] + (1 - b[k]) * cur[i] - a[k] * pr[i]) / a[k + 1] for i in range(size)]
        prev = S[k]
        S.append(new)
    out = list(S[n])
    out[n] -= 1
    return out[:n]


STRUCTURE_SUPPORT = {Family.FREUD: (1, 3), Family.CHARLIER: (1, 2)}


def structure_residual(spec: WeightSpec, rec: RecurrenceData, n: int, tolerance=None) -> ResidualReport:
    """Largest expansion coefficient of p_n' (Freud) or p_n(x+1)-p_n(x) (Charlier)
    outside the allowed indices {n-1, n-3} resp. {n-1, n-2}."""
    if spec.family not in STRUCTURE_SUPPORT:
        raise ValueError("structure relations exist for FreudQuartic and GeneralizedCharlier")
    if not 3 <= n <= rec.N - 1:
        raise IndexOutOfStencil(f"need 3 <= n <= {rec.N - 1}")
    with mp.workdps(rec.precision):
        coeffs = derivative_expansion(rec, n) if spec.family is Family.FREUD else shift_expansion(rec, n)
        allowed = {n - j for j in STRUCTURE_SUPPORT[spec.family]}
        off = [k for k in range(n) if k not in allowed]
        if tolerance is None:
            tolerance = mpf(10) ** (-rec.certified_digits + 10)
        name = "structure-derivative" if spec.family is Family.FREUD else "structure-difference"
        return ResidualReport(name, off, [coeffs[k] for k in off], tolerance,
                              {"n": n, "allowed": sorted(allowed), "family": spec.family.value})


# -- continuous Painleve equations ------------------------------------------
# Each function returns the right-hand side for y'' given (y, y') and the
# independent variable; residual = y'' - rhs.

def freud_p4(x, dx, t, n):
    return dx ** 2 / (2 * x) + 3 * x ** 3 / 2 - t * x ** 2 + x * (mpf(n) / 4 + t ** 2 / 8) - mpf(n) ** 2 / (32 * x)


def opuc_alpha_ode(al, dal, t, n):
    q = 1 - al ** 2
    return -al / q * dal ** 2 - dal / t - al * q + (n + 1) ** 2 / t ** 2 * al / q


def opuc_w_p3(w, dw, t, n):
    return dw ** 2 / w - dw / t + 2 * n / t * w ** 2 - 2 * (n + 1) / t + w ** 3 - 1 / w


def chen_its_p3(c, dc, t, n, alpha, reading="corrected"):
    # the displayed alpha/s term is read as alpha/t in both readings
    power = 1 if reading == "literal" else 2
    return dc ** 2 / c - dc / t + (2 * n + alpha + 1) * c ** 2 / t ** power + c ** 3 / t ** 2 + alpha / t - 1 / c


def bce_p5(y, dy, t, n, alpha, beta, reading="corrected"):
    num = 2 * y - 1 if reading == "literal" else 3 * y - 1
    return (num / (2 * y * (y - 1)) * dy ** 2 - dy / t + 2 * (2 * n + alpha + beta + 1) * y / t
            - 2 * y * (y + 1) / (y - 1) + (y - 1) ** 2 / t ** 2 * (alpha ** 2 * y / 2 - beta ** 2 / (2 * y)))


def mod_laguerre_p4(x, dx, t, n, alpha):
    return (mpf(3) / 2 * dx ** 2 / x + alpha ** 2 / 4 * x ** 3 - x / 8 * (t ** 2 - 4 - 8 * n - 4 * alpha)
            + t / mpmath.sqrt(2) - 3 / (4 * x))


def charlier_p5(y, dy, a, n, beta):
    return ((1 / (2 * y) + 1 / (y - 1)) * dy ** 2 - dy / a
            + (y - 1) ** 2 / a ** 2 * (mpf(n) ** 2 / 2 * y - (beta - 1) ** 2 / (2 * y)) - 2 * y / a)


def p5(y, dy, a, prm: PainleveParams):
    return ((1 / (2 * y) + 1 / (y - 1)) * dy ** 2 - dy / a + (y - 1) ** 2 / a ** 2 * (prm.A * y + prm.B / y)
            + prm.C * y / a + prm.D * y * (y + 1) / (y - 1))


def p6(f, df, t, prm: PainleveParams):
    for v, what in ((f, "f"), (f - 1, "f - 1"), (f - t, "f - t"), (t, "t"), (t - 1, "t - 1")):
        if v == 0:
            raise SingularDenominator(f"{what} vanishes")
    return (((1 / f + 1 / (f - 1) + 1 / (f - t)) * df ** 2) / 2 - (1 / t + 1 / (t - 1) + 1 / (f - t)) * df
            + f * (f - 1) * (f - t) / (t ** 2 * (t - 1) ** 2)
            * (prm.A + prm.B * t / f ** 2 + prm.C * (t - 1) / (f - 1) ** 2 + prm.D * t * (t - 1) / (f - t) ** 2))


def meixner_y_prime(a, y, v, n, beta, gamma):
    """y' from v_n = a(a y' - (1+beta-2gamma) y^2 + (1+n-a+beta-2gamma) y - n) / (2(gamma-1)(y-1)y)."""
    return (2 * (gamma - 1) * (y - 1) * y * v / a + (1 + beta - 2 * gamma) * y ** 2
            - (1 + n - a + beta - 2 * gamma) * y + n) / a


def pvi_residual(y: GridFunction, params: PainleveParams, t_center=None):
    """P_VI residual y'' - rhs at the grid centre (generic evaluator)."""
    c = y.center_index
    if t_center is not None and abs(y.grid[c] - to_mpf(t_center)) > abs(y.step) / 2:
        raise IndexOutOfStencil("t_center is not the grid centre")
    f, df, d2f = y.values[c], central_derivative(y, 1, c), central_derivative(y, 2, c)
    return d2f - p6(f, df, y.grid[c], params)


def _ode_residual(values, grid, rhs):
    gf = GridFunction(tuple(grid), tuple(values))
    c = gf.center_index
    y, dy, d2y = values[c], central_derivative(gf, 1, c), central_derivative(gf, 2, c)
    return d2y - rhs(y, dy, grid[c])


CHEN_ITS_READINGS = {
    "literal": "(2n+alpha+1) c^2/t, alpha/s read as alpha/t",
    "corrected": "(2n+alpha+1) c^2/t^2, alpha/t",
}
BCE_P5_READINGS = {
    "literal": "(2y-1)/(2y(y-1)) (y')^2",
    "corrected": "(3y-1)/(2y(y-1)) (y')^2 = (1/(2y) + 1/(y-1)) (y')^2",
}
CP_FAMILIES = (Family.FREUD, Family.CIRCLE, Family.CHEN_ITS, Family.JACOBI_TODA,
               Family.MODIFIED_LAGUERRE, Family.CHARLIER, Family.MEIXNER)


def cp_residual(spec: WeightSpec, n: int, center, digits: int | None = None, points: int = 5,
                variant: str | None = None, spacing=None):
    """Continuous Painleve residual at (n, center) from moment data on a uniform grid.

    Returns (reports, resolutions).  For the circle family two reports are
    produced (alpha ODE and the w_n = alpha_n/alpha_{n-1} form).
    """
    digits = digits or default_digits()
    f = spec.family
    if f is Family.MEIXNER:
        return meixner_shooting(spec, n, center, digits, spacing=spacing)
    if f not in CP_FAMILIES:
        raise ValueError(f"no continuous Painleve equation for {f.value}")
    h = grid_step(digits) if spacing is None else to_mpf(spacing)
    with mp.workdps(digits + 20):
        grid = uniform_grid(center, h, points)
    if f is Family.CIRCLE:
        data = verblunsky_on_grid(spec, n + 2, grid, digits)
    else:
        data = recurrence_on_grid(spec, n + 2, grid, digits)
    cert = min(d.certified_digits for d in data)
    resolutions = {}
    with mp.workdps(max(d.precision for d in data)):
        p = _params(spec)
        tol = max(10 * h ** 4, mpf(10) ** (-mpf(cert) / 2))
        notes = {"family": f.value, "n": n, "center": str(center), "certified_digits": cert}
        reports = []

        def single(name, values, rhs, extra=None):
            res = _ode_residual(values, grid, rhs)
            return ResidualReport(name, [n], [res], tol, {**notes, **(extra or {})})

        if f is Family.FREUD:
            reports.append(single("freud-p4", [d.a_sq[n] for d in data], lambda y, dy, t: freud_p4(y, dy, t, n)))
        elif f is Family.CIRCLE:
            al = [d.alpha[n] for d in data]
            reports.append(single("opuc-alpha", al, lambda y, dy, t: opuc_alpha_ode(y, dy, t, n)))
            if n >= 1:
                w = [_div(d.alpha[n], d.alpha[n - 1], n, "alpha_{n-1}") for d in data]
                reports.append(single("opuc-w-p3", w, lambda y, dy, t: opuc_w_p3(y, dy, t, n)))
        elif f is Family.CHEN_ITS:
            c = [d.b[n] - (2 * n + p["alpha"] + 1) for d in data]

            def evaluate(reading):
                return [single("chen-its-p3", c,
                               lambda y, dy, t: chen_its_p3(y, dy, t, n, p["alpha"], reading))]
            _, reports, resolutions["chen_its_ode"] = resolve_reading(CHEN_ITS_READINGS, evaluate)
        elif f is Family.JACOBI_TODA:
            ys = []
            for d, t in zip(data, grid):
                R = (2 * n + 1 + p["alpha"] + p["beta"] - t - t * d.b[n]) / 2
                ys.append(1 + _div(t, R, n, "R_n"))

            def evaluate(reading):
                return [single("bce-p5", ys,
                               lambda y, dy, t: bce_p5(y, dy, t, n, p["alpha"], p["beta"], reading))]
            _, reports, resolutions["bce_p5"] = resolve_reading(BCE_P5_READINGS, evaluate)
        elif f is Family.MODIFIED_LAGUERRE:
            xs = [_div(mpmath.sqrt(2), t - 2 * d.b[n], n, "t - 2 b_n") for d, t in zip(data, grid)]
            reports.append(single("mod-laguerre-p4", xs, lambda y, dy, t: mod_laguerre_p4(y, dy, t, n, p["alpha"])))
        elif f is Family.CHARLIER:
            # x_n = a_n^2 is the sequence put equal to a/(1-y)
            ys = [1 - a / d.a_sq[n] for d, a in zip(data, grid)]
            reports.append(single("charlier-p5", ys, lambda y, dy, a: charlier_p5(y, dy, a, n, p["beta"]),
                                  {"x_n": "a_n^2"}))
    return reports, resolutions


# -- Meixner shooting -------------------------------------------------------

def _shoot(y0, grid, v_half, n, beta, gamma):
    """RK4 through the grid for y' = G(a, y, v(a)); v sampled at half steps."""
    ys = [y0]
    h = grid[1] - grid[0]
    for i in range(len(grid) - 1):
        a, y = grid[i], ys[-1]
        vm, v1 = v_half[2 * i + 1], v_half[2 * i + 2]
        k1 = meixner_y_prime(a, y, v_half[2 * i], n, beta, gamma)
        k2 = meixner_y_prime(a + h / 2, y + h / 2 * k1, vm, n, beta, gamma)
        k3 = meixner_y_prime(a + h / 2, y + h / 2 * k2, vm, n, beta, gamma)
        k4 = meixner_y_prime(a + h, y + h * k3, v1, n, beta, gamma)
        ys.append(y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4))
    return ys


def _shot_residuals(y0, grid, v_half, n, beta, gamma, prm):
    """P_V residuals at every stencil centre of the shot trajectory."""
    ys = _shoot(y0, grid, v_half, n, beta, gamma)
    dys = [meixner_y_prime(a, y, v_half[2 * i], n, beta, gamma) for i, (a, y) in enumerate(zip(grid, ys))]
    gf = GridFunction(tuple(grid), tuple(dys))
    out = []
    for c in range(2, len(grid) - 2):
        d2y = central_derivative(gf, 1, c)
        out.append(d2y - p5(ys[c], dys[c], grid[c], prm))
    return out


def _golden_min(fn, lo, hi, tol):
    """Golden-section minimisation of a unimodal function on [lo, hi]."""
    g = (mpmath.sqrt(5) - 1) / 2
    x1, x2 = hi - g * (hi - lo), lo + g * (hi - lo)
    f1, f2 = fn(x1), fn(x2)
    while hi - lo > tol * max(1, abs(lo)):
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - g * (hi - lo)
            f1 = fn(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + g * (hi - lo)
            f2 = fn(x2)
    return (x1, f1) if f1 < f2 else (x2, f2)


def meixner_shooting(spec: WeightSpec, n: int, center, digits: int | None = None, points: int = 9,
                     scan=(-20, 20), scan_points: int = 400, spacing=None):
    """Integrate the first-order relation between y and v_n from the left grid
    end and minimise the P_V residual over the unknown initial value.

    Candidate initial values come from sign changes of the centre residual;
    each is refined by golden-section search, and the genuine branch is the
    one whose residual stays small at every stencil centre.
    """
    digits = digits or default_digits()
    if points < 5 or points % 2 == 0:
        raise ValueError("grids need an odd number (>= 5) of points")
    h = grid_step(digits) if spacing is None else to_mpf(spacing)
    with mp.workdps(digits + 20):
        grid = uniform_grid(center, h, points)
        half = uniform_grid(center, h / 2, 2 * points - 1)
    data = recurrence_on_grid(spec, n + 1, half, digits)
    cert = min(d.certified_digits for d in data)
    with mp.workdps(max(d.precision for d in data)):
        p = _params(spec)
        be, ga = p["beta"], p["gamma"]
        v_half = [aux_extract(spec.with_param("a", a), d).sequences["v"][n] for d, a in zip(data, half)]
        prm = meixner_params(be, ga, n)
        tol = max(10 * h ** 4, mpf(10) ** (-mpf(cert) / 2))
        c = (points - 5) // 2      # centre stencil among the centres 2..points-3

        def centre(y0):
            try:
                return _shot_residuals(y0, grid, v_half, n, be, ga, prm)[c]
            except ZeroDivisionError:
                return mpf("nan")

        lo, hi = mpf(scan[0]), mpf(scan[1])
        ys = [lo + (hi - lo) * k / scan_points for k in range(scan_points + 1)]
        vals = [centre(y) for y in ys]
        candidates = []
        for (y1, f1), (y2, f2) in zip(zip(ys, vals), zip(ys[1:], vals[1:])):
            if mpmath.isnan(f1) or mpmath.isnan(f2) or f1 * f2 > 0:
                continue
            if y1 <= 0 <= y2 or y1 <= 1 <= y2:
                continue        # sign change across a pole of the equation
            y0, _ = _golden_min(lambda y: abs(centre(y)), y1, y2, tol / 10 ** 10)
            worst = max(abs(r) for r in _shot_residuals(y0, grid, v_half, n, be, ga, prm))
            candidates.append((worst, y0))
        candidates.sort(key=lambda s: s[0])
        if not candidates:
            raise BranchAmbiguity("no sign change of the P_V residual in the scanned range")
        worst, y0 = candidates[0]
        genuine = [cnd for cnd in candidates if cnd[0] <= tol]
        notes = {"family": spec.family.value, "n": n, "center": str(center), "certified_digits": cert,
                 "y_initial": decimal(y0, 20), "candidates": len(candidates), "passing_branches": len(genuine),
                 "A,B,C,D": ", ".join(decimal(v, 6) for v in (prm.A, prm.B, prm.C, prm.D))}
        residuals = [abs(r) for r in _shot_residuals(y0, grid, v_half, n, be, ga, prm)]
    report = ResidualReport("meixner-p5-shooting", list(range(2, points - 2)), residuals, tol, notes)
    return [report], {"meixner_branch": {"reading": "shooting", "resolution":
                                         "unique" if len(genuine) == 1 else f"{len(genuine)} branches pass",
                                         "y_initial": notes["y_initial"]}}


# -- P_VI self-consistency --------------------------------------------------

def pvi_self_consistency(params: PainleveParams, t0="0.5", f0="-0.5", df0="0.1", center="0.55",
                         digits: int | None = None, points: int = 5, perturbation="0.01", spacing=None):
    """Integrate P_VI from (t0, f0, f0') with mpmath's Taylor-series ODE solver,
    sample on a stencil around ``center`` and evaluate the generic residual.

    The solution is computed to ``digits`` + 50 working digits and credited
    with ``digits`` certified digits, so the bound is
    max(10 h^4, 10^(-digits/2)).  The residual with A shifted by
    ``perturbation`` is kept in the notes as a negative control.
    """
    digits = digits or default_digits()
    h = grid_step(digits) if spacing is None else to_mpf(spacing)
    with mp.workdps(digits + 50):
        prm = PainleveParams(*(to_mpf(v) for v in (params.A, params.B, params.C, params.D)))
        solution = mpmath.odefun(lambda t, u: [u[1], p6(u[0], u[1], t, prm)], to_mpf(t0), [to_mpf(f0), to_mpf(df0)])
        grid = uniform_grid(to_mpf(center), h, points)
        sampled = GridFunction(grid, tuple(solution(t)[0] for t in grid))
        residual = pvi_residual(sampled, prm)
        shifted = PainleveParams(prm.A + to_mpf(perturbation), prm.B, prm.C, prm.D)
        control = pvi_residual(sampled, shifted)
        tol = max(10 * h ** 4, mpf(10) ** (-mpf(digits) / 2))
        return ResidualReport("pvi-self-consistency", [0], [residual], tol,
                              {"t0": str(t0), "f0": str(f0), "df0": str(df0), "center": str(center),
                               "control_residual": mp.nstr(abs(control), 6)})
