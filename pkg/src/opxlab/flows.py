"""Toda, Kac-van Moerbeke and Ablowitz-Ladik flows in Flaschka variables.

Two integrators are available: classical RK4 with step-halving acceptance and
a Taylor-series method.  The right-hand sides are quadratic or cubic
polynomials in the lattice variables, so Taylor coefficients of any order
follow from Cauchy products; this is what makes 25+ digit agreement with the
moment pipeline affordable.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from enum import Enum

import mpmath
from mpmath import mp, mpf

from .direct import (
    monic_values,
    opuc_values,
    recurrence_coefficients,
    recurrence_on_grid,
    verblunsky_coefficients,
    verblunsky_on_grid,
)
from .errors import IndexOutOfStencil, InvariantBreach, SizeMismatch, StepRejected
from .numerics import GridFunction, central_derivative, default_digits, grid_step, to_mpf, uniform_grid
from .operators import JacobiMatrix, build_cmv, commutator, jacobi_power, lax_A, lax_B
from .report import ResidualReport, decimal
from .weights import Family, LATTICE, WeightSpec

DEFAULT_BUFFER = 10
MIN_BUFFER = 8


class FlowKind(str, Enum):
    TODA = "Toda"
    KVM = "KvM"
    AL = "AblowitzLadik"


# Flow induced by deforming each family's parameter.  The JacobiToda weight
# carries e^{-tx}, so its Toda time is s = -t; lattice families use a = e^t.
FLOW_OF = {
    Family.MODIFIED_LAGUERRE: FlowKind.TODA,
    Family.JACOBI_TODA: FlowKind.TODA,
    Family.CHARLIER: FlowKind.TODA,
    Family.MEIXNER: FlowKind.TODA,
    Family.HYPERGEOMETRIC: FlowKind.TODA,
    Family.FREUD: FlowKind.KVM,
    Family.CIRCLE: FlowKind.AL,
}


def param_rate(spec: WeightSpec, param):
    """d(parameter)/d(flow time), so that d/dtime = param_rate * d/dparam."""
    if spec.family is Family.JACOBI_TODA:
        return mpf(-1)
    if spec.family in LATTICE:
        return param
    if spec.family not in FLOW_OF:
        raise ValueError(f"{spec.family.value} has no lattice flow")
    return mpf(1)


def param_at_time(spec: WeightSpec, param0, dt):
    """Parameter value reached from ``param0`` after flow time ``dt``."""
    if spec.family is Family.JACOBI_TODA:
        return param0 - dt
    if spec.family in LATTICE:
        return param0 * mpmath.exp(dt)
    return param0 + dt


@dataclass(frozen=True)
class FlowState:
    """Truncated lattice state.

    Toda: ``a_sq[0..M-1]`` (a_sq[0] = 0) and ``b[0..M-1]`` with a_M^2 = 0.
    KvM: ``a_sq[0..M]`` (a_sq[0] = 0) with a_{M+1}^2 = 0.
    AblowitzLadik: ``alpha[0..M-1]`` with alpha_{-1} = -1 and alpha_M = 0.
    """

    kind: FlowKind
    time: object = mpf(0)
    a_sq: tuple = ()
    b: tuple = ()
    alpha: tuple = ()
    target: int | None = None

    @property
    def sites(self) -> int:
        if self.kind is FlowKind.AL:
            return len(self.alpha)
        if self.kind is FlowKind.KVM:
            return len(self.a_sq) - 1
        return len(self.b)

    def vector(self) -> list:
        if self.kind is FlowKind.TODA:
            return list(self.a_sq[1:]) + list(self.b)
        if self.kind is FlowKind.KVM:
            return list(self.a_sq[1:])
        return list(self.alpha)

    def with_vector(self, vec, time) -> "FlowState":
        vec = list(vec)
        if self.kind is FlowKind.TODA:
            m = len(self.b)
            return replace(self, time=time, a_sq=(mpf(0),) + tuple(vec[:m - 1]), b=tuple(vec[m - 1:]))
        if self.kind is FlowKind.KVM:
            return replace(self, time=time, a_sq=(mpf(0),) + tuple(vec))
        return replace(self, time=time, alpha=tuple(vec))

    def watched(self, sites: int | None = None) -> list:
        """Variables on sites 0..sites (default: the target sites)."""
        s = self.target if sites is None else sites
        if s is None:
            return self.vector()
        if self.kind is FlowKind.TODA:
            return list(self.a_sq[1:s + 1]) + list(self.b[:s + 1])
        if self.kind is FlowKind.KVM:
            return list(self.a_sq[1:s + 1])
        return list(self.alpha[:s + 1])

    def check_invariants(self) -> None:
        if self.kind is FlowKind.AL:
            for n, a in enumerate(self.alpha):
                if not abs(a) < 1:
                    raise InvariantBreach(f"|alpha_{n}| >= 1 at t={mpmath.nstr(self.time, 10)}")
            return
        if self.a_sq and self.a_sq[0] != 0:
            raise InvariantBreach("a_0^2 must stay 0")
        for n, v in enumerate(self.a_sq[1:], start=1):
            if not v > 0:
                raise InvariantBreach(f"a_{n}^2 <= 0 at t={mpmath.nstr(self.time, 10)}")


def toda_state(rec, sites: int, time=0, target=None) -> FlowState:
    if rec.N < sites:
        raise SizeMismatch(f"need {sites} sites, data has {rec.N}")
    return FlowState(FlowKind.TODA, to_mpf(time), tuple(rec.a_sq[:sites]), tuple(rec.b[:sites]), target=target)


def kvm_state(rec, sites: int, time=0, target=None) -> FlowState:
    if rec.N < sites:
        raise SizeMismatch(f"need {sites} sites, data has {rec.N}")
    return FlowState(FlowKind.KVM, to_mpf(time), tuple(rec.a_sq[:sites + 1]), target=target)


def al_state(v, sites: int, time=0, target=None) -> FlowState:
    if v.N < sites:
        raise SizeMismatch(f"need {sites} sites, data has {v.N}")
    return FlowState(FlowKind.AL, to_mpf(time), alpha=tuple(v.alpha[:sites]), target=target)


# -- right-hand sides -------------------------------------------------------

def toda_rhs(state: FlowState):
    """((a_k^2)', b_k') with (a_k^2)' = a_k^2 (b_k - b_{k-1}), b_k' = a_{k+1}^2 - a_k^2."""
    a, b = state.a_sq, state.b
    m = len(b)
    da = [mpf(0)] + [a[k] * (b[k] - b[k - 1]) for k in range(1, m)]
    db = [(a[k + 1] if k + 1 < m else 0) - a[k] for k in range(m)]
    return tuple(da), tuple(db)


def kvm_rhs(state: FlowState):
    """(a_n^2)' = a_n^2 (a_{n+1}^2 - a_{n-1}^2), a_0^2 = 0."""
    a = state.a_sq
    m = len(a)
    return (mpf(0),) + tuple(a[n] * ((a[n + 1] if n + 1 < m else 0) - a[n - 1]) for n in range(1, m))


def al_rhs(state: FlowState):
    """alpha_n' = (1/2)(1 - alpha_n^2)(alpha_{n+1} - alpha_{n-1}), alpha_{-1} = -1."""
    al = (mpf(-1),) + state.alpha + (mpf(0),)
    return tuple((1 - al[n + 1] ** 2) * (al[n + 2] - al[n]) / 2 for n in range(len(state.alpha)))


def _vector_rhs(state: FlowState):
    if state.kind is FlowKind.TODA:
        da, db = toda_rhs(state)
        return list(da[1:]) + list(db)
    if state.kind is FlowKind.KVM:
        return list(kvm_rhs(state)[1:])
    return list(al_rhs(state))


# -- integrators ------------------------------------------------------------

def rk4_step(state: FlowState, h) -> FlowState:
    y = state.vector()
    t = state.time
    k1 = _vector_rhs(state)
    k2 = _vector_rhs(state.with_vector([v + h / 2 * k for v, k in zip(y, k1)], t + h / 2))
    k3 = _vector_rhs(state.with_vector([v + h / 2 * k for v, k in zip(y, k2)], t + h / 2))
    k4 = _vector_rhs(state.with_vector([v + h * k for v, k in zip(y, k3)], t + h))
    new = [v + h / 6 * (p + 2 * q + 2 * r + s) for v, p, q, r, s in zip(y, k1, k2, k3, k4)]
    return state.with_vector(new, t + h)


def _taylor_coefficients(state: FlowState, order: int) -> list:
    """Taylor coefficients (one list per variable) about the current time."""
    if state.kind is FlowKind.TODA:
        m = len(state.b)
        U = [[state.a_sq[k]] for k in range(m)]
        B = [[state.b[k]] for k in range(m)]
        for j in range(order):
            inv = mpf(1) / (j + 1)
            nu = [mpf(0)]
            for k in range(1, m):
                nu.append(inv * mpmath.fsum(U[k][i] * (B[k][j - i] - B[k - 1][j - i]) for i in range(j + 1)))
            nb = [inv * ((U[k + 1][j] if k + 1 < m else 0) - U[k][j]) for k in range(m)]
            for k in range(m):
                U[k].append(nu[k])
                B[k].append(nb[k])
        return U[1:] + B
    if state.kind is FlowKind.KVM:
        m = len(state.a_sq)
        U = [[state.a_sq[k]] for k in range(m)]
        for j in range(order):
            inv = mpf(1) / (j + 1)
            new = [mpf(0)]
            for k in range(1, m):
                up = U[k + 1] if k + 1 < m else None
                new.append(inv * mpmath.fsum(
                    U[k][i] * ((up[j - i] if up else 0) - U[k - 1][j - i]) for i in range(j + 1)))
            for k in range(m):
                U[k].append(new[k])
        return U[1:]
    m = len(state.alpha)
    A = [[a] for a in state.alpha]
    S = [[a * a] for a in state.alpha]     # Taylor coefficients of alpha^2
    for j in range(order):
        inv = mpf(1) / (2 * (j + 1))
        new = []
        for k in range(m):
            def delta(i):
                hi = A[k + 1][i] if k + 1 < m else 0
                lo = A[k - 1][i] if k > 0 else (mpf(-1) if i == 0 else 0)
                return hi - lo
            total = delta(j) - mpmath.fsum(S[k][i] * delta(j - i) for i in range(j + 1))
            new.append(inv * total)
        for k in range(m):
            A[k].append(new[k])
        for k in range(m):
            S[k].append(mpmath.fsum(A[k][i] * A[k][j + 1 - i] for i in range(j + 2)))
    return A


def taylor_step(state: FlowState, h, order: int = 30) -> FlowState:
    coeffs = _taylor_coefficients(state, order)
    new = []
    for c in coeffs:
        acc = c[-1]
        for v in reversed(c[:-1]):
            acc = acc * h + v
        new.append(acc)
    return state.with_vector(new, state.time + h)


def _march(state: FlowState, t_end, step, method: str, order: int, trajectory=None) -> FlowState:
    span = t_end - state.time
    if span == 0:
        return state
    count = int(mpmath.ceil(abs(span) / step - mpf(10) ** (-10)))
    h = span / count
    for _ in range(count):
        state = rk4_step(state, h) if method == "rk4" else taylor_step(state, h, order)
        state.check_invariants()
        if trajectory is not None:
            trajectory.append(state)
    return state


def integrate(state0: FlowState, t_end, step, method: str = "rk4", order: int = 30,
              tol=None, trajectory: list | None = None) -> FlowState:
    """Advance ``state0`` to ``t_end`` with fixed steps of at most ``step``.

    The run is repeated with half the step; it is accepted when the watched
    variables change by less than ``tol`` (default 10 step^4 for RK4 and
    10^(-dps/2) for the Taylor method), otherwise StepRejected is raised.
    """
    t_end = to_mpf(t_end)
    step = to_mpf(step)
    if step <= 0:
        raise ValueError("step must be positive")
    if method not in ("rk4", "taylor"):
        raise ValueError(f"unknown method {method!r}")
    state0.check_invariants()
    if t_end == state0.time:
        return state0
    if tol is None:
        tol = 10 * step ** 4 if method == "rk4" else mpf(10) ** (-(mp.dps // 2))
    coarse = _march(state0, t_end, step, method, order, trajectory)
    fine = _march(state0, t_end, step / 2, method, order)
    change = max((abs(x - y) for x, y in zip(coarse.watched(), fine.watched())), default=mpf(0))
    if change >= tol:
        raise StepRejected(f"halving the step changed watched variables by {mpmath.nstr(change, 5)}"
                           f" (tolerance {mpmath.nstr(tol, 5)})")
    return fine


def trajectory_csv(states, digits: int = 20) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "site", "variable", "value"])
    for s in states:
        t = decimal(s.time, digits)
        if s.kind is FlowKind.AL:
            for n, a in enumerate(s.alpha):
                w.writerow([t, n, "alpha", decimal(a, digits)])
            continue
        for n, a in enumerate(s.a_sq):
            w.writerow([t, n, "a_sq", decimal(a, digits)])
        for n, b in enumerate(s.b):
            w.writerow([t, n, "b", decimal(b, digits)])
    return buf.getvalue()


# -- consistency with the moment pipeline -----------------------------------

def _initial_state(spec: WeightSpec, sites: int, target: int, digits: int) -> FlowState:
    kind = FLOW_OF[spec.family]
    if kind is FlowKind.AL:
        return al_state(verblunsky_coefficients(spec, sites, digits), sites, target=target)
    rec = recurrence_coefficients(spec, sites, digits)
    if kind is FlowKind.KVM:
        return kvm_state(rec, sites, target=target)
    return toda_state(rec, sites, target=target)


def flow_duration(spec: WeightSpec, param_end):
    """Flow time needed to move the deformation parameter from the weight's value to ``param_end``."""
    p0, p1 = spec[spec.deformation], to_mpf(param_end)
    if spec.family is Family.JACOBI_TODA:
        return p0 - p1
    if spec.family in LATTICE:
        return mpmath.log(p1 / p0)
    return p1 - p0


def flow_trajectory(spec: WeightSpec, target: int, buffer: int, param_end, digits: int | None = None,
                    step="0.05", method: str = "taylor", order: int = 30, tolerance="1e-25") -> list:
    """Every accepted state (the initial one included) of the flow from the
    weight's parameter to ``param_end`` on target + buffer sites."""
    digits = digits or default_digits()
    with mp.workdps(digits + 40):
        state = _initial_state(spec, target + buffer, target, digits)
        states = [state]
        integrate(state, flow_duration(spec, param_end), step, method=method, order=order,
                  tol=to_mpf(tolerance) / 100, trajectory=states)
    return states


def flow_consistency(spec: WeightSpec, target: int, param_end, digits: int | None = None,
                     step="0.05", method: str = "taylor", order: int = 30,
                     buffer: int = DEFAULT_BUFFER, tolerance="1e-25", max_buffer: int = 160) -> ResidualReport:
    """Integrate from moment-derived data at the weight's parameter to
    ``param_end`` and compare sites 0..target with a fresh moment computation.

    The buffer of extra sites doubles until the watched sites change by less
    than ``tolerance``.
    """
    digits = digits or default_digits()
    if buffer < MIN_BUFFER:
        raise ValueError(f"buffer must be at least {MIN_BUFFER}")
    tolerance = to_mpf(tolerance)
    name = spec.deformation
    with mp.workdps(digits + 40):
        p1 = to_mpf(param_end)
        duration = flow_duration(spec, p1)
        previous = None
        while True:
            state = _initial_state(spec, target + buffer, target, digits)
            end = integrate(state, duration, step, method=method, order=order, tol=tolerance / 100)
            if previous is not None:
                change = max(abs(x - y) for x, y in zip(end.watched(), previous.watched()))
                if change < tolerance:
                    break
            if 2 * buffer > max_buffer:
                raise InvariantBreach(f"buffer {buffer} still moves the watched sites")
            previous = end
            buffer *= 2
        reference = _initial_state(spec.with_param(name, p1), target + 1, target, digits)
        residuals = [abs(x - y) for x, y in zip(end.watched(), reference.watched())]
    labels = _watched_labels(end.kind, target)
    return ResidualReport(f"flow-{end.kind.value}", labels, residuals, tolerance,
                          {"family": spec.family.value, "buffer": buffer, "step": step, "method": method,
                           "order": order, "from": spec.params[name], "to": str(param_end),
                           "buffer_change": decimal(change, 6)})


def _watched_labels(kind: FlowKind, target: int) -> list:
    if kind is FlowKind.TODA:
        return [f"a_sq[{n}]" for n in range(1, target + 1)] + [f"b[{n}]" for n in range(target + 1)]
    if kind is FlowKind.KVM:
        return [f"a_sq[{n}]" for n in range(1, target + 1)]
    return [f"alpha[{n}]" for n in range(target + 1)]


# -- Lax residuals ----------------------------------------------------------

def _matrix_derivative(mats, grid, window):
    lo, hi = window
    c = len(grid) // 2
    out = {}
    for i in range(lo, hi + 1):
        for j in range(lo, hi + 1):
            gf = GridFunction(tuple(grid), tuple(m[i, j] for m in mats))
            out[i, j] = central_derivative(gf, 1, c)
    return out


def lax_residual(flow: str, mats, grid, rate=1, tolerance=None) -> ResidualReport:
    """Residual of a Lax equation on the interior window, per row.

    ``flow`` is "toda" (J' = [J, A]), "toda-2" (J' = [J, (1/2)((J^2)_- - (J^2)_+)])
    or "ablowitz-ladik" (C' = (1/2)[B, C] with C given as CMVMatrix samples).
    ``rate`` is d(parameter)/d(time), converting parameter derivatives to time derivatives.
    """
    if len(mats) != len(grid) or len(grid) < 5:
        raise IndexOutOfStencil("a Lax residual needs matrices on at least 5 grid points")
    c = len(grid) // 2
    if flow == "ablowitz-ladik":
        cmv = mats[c]
        rhs = commutator(lax_B(cmv).companion, cmv.C).scale(mpf(1) / 2)
        samples = [m.C for m in mats]
        k = 2
    elif flow in ("toda", "toda-2"):
        J = mats[c]
        k = 1 if flow == "toda" else 2
        rhs = commutator(J, lax_A(jacobi_power(J, k) if k > 1 else J).companion)
        samples = mats
    else:
        raise ValueError(f"unknown flow {flow!r}")
    n = samples[0].size
    window = (k, n - 1 - k)
    deriv = _matrix_derivative(samples, grid, window)
    rows, residuals = [], []
    for i in range(window[0], window[1] + 1):
        rows.append(i)
        residuals.append(max(abs(rate * deriv[i, j] - rhs[i, j]) for j in range(window[0], window[1] + 1)))
    if tolerance is None:
        tolerance = 10 * (grid[1] - grid[0]) ** 4
    return ResidualReport(f"lax-{flow}", rows, residuals, tolerance,
                          {"window": f"[{window[0]}, {window[1]}]"})


def lax_check(spec: WeightSpec, N: int, center, digits: int | None = None, points: int = 5,
              spacing=None) -> ResidualReport:
    """Sample the operator over a parameter grid around ``center`` and report
    the Lax residual with tolerance max(10 h^4, 10^(-certified/2))."""
    digits = digits or default_digits()
    h = grid_step(digits) if spacing is None else to_mpf(spacing)
    with mp.workdps(digits + 20):
        grid = uniform_grid(center, h, points)
    kind = FLOW_OF[spec.family]
    if kind is FlowKind.AL:
        data = verblunsky_on_grid(spec, N, grid, digits)
    else:
        data = recurrence_on_grid(spec, N, grid, digits)
    cert = min(d.certified_digits for d in data)
    with mp.workdps(max(d.precision for d in data)):
        if kind is FlowKind.AL:
            mats = [build_cmv(v, N) for v in data]
            flow = "ablowitz-ladik"
        else:
            mats = [JacobiMatrix.from_coefficients(r.a_sq, r.b, N) for r in data]
            flow = "toda" if kind is FlowKind.TODA else "toda-2"
        tol = max(10 * h ** 4, mpf(10) ** (-mpf(cert) / 2))
        rate = param_rate(spec, to_mpf(center))
        report = lax_residual(flow, mats, grid, rate=rate, tolerance=tol)
    report.notes.update({"family": spec.family.value, "certified_digits": cert, "h": decimal(h, 3)})
    return report


# -- polynomial-level lemmas ------------------------------------------------

def polynomial_flow_check(spec: WeightSpec, n: int, points, center, digits: int | None = None,
                          grid_points: int = 5, spacing=None) -> ResidualReport:
    """d/dt of the monic polynomial against its flow equation.

    Toda families: dP_n/dt = -a_n^2 P_{n-1}.  Freud (k = 2 hierarchy):
    dP_n/dt = -sum_{j=1,2} (J^2)_{n,n-j} gamma_{n-j}/gamma_n P_{n-j}.
    Circle: dPhi_n/dt = -(kappa_{n-1}^2 / 2 kappa_n^2)(Phi_{n-1} + conj(alpha_n) Phi^*_{n-1}).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    digits = digits or default_digits()
    h = grid_step(digits) if spacing is None else to_mpf(spacing)
    with mp.workdps(digits + 20):
        grid = uniform_grid(center, h, grid_points)
    c = grid_points // 2
    kind = FLOW_OF[spec.family]
    size = n + 3
    residuals = []
    if kind is FlowKind.AL:
        data = verblunsky_on_grid(spec, size, grid, digits)
        identity = "dPhi/dt"
        with mp.workdps(max(d.precision for d in data)):
            for z in points:
                z = mpmath.mpmathify(z) + 0j
                vals = [opuc_values(v, n, z)[n][0] for v in data]
                re = central_derivative(GridFunction(tuple(grid), tuple(mpmath.re(x) for x in vals)), 1, c)
                im = central_derivative(GridFunction(tuple(grid), tuple(mpmath.im(x) for x in vals)), 1, c)
                v = data[c]
                phi_prev, star_prev = opuc_values(v, n - 1, z)[n - 1]
                ratio = v.kappa[n - 1] ** 2 / v.kappa[n] ** 2
                rhs = -ratio / 2 * (phi_prev + mpmath.conj(v.alpha[n]) * star_prev)
                residuals.append(abs(mpmath.mpc(re, im) - rhs))
    else:
        data = recurrence_on_grid(spec, size, grid, digits)
        with mp.workdps(max(d.precision for d in data)):
            rate = param_rate(spec, to_mpf(center))
            rec = data[c]
            if kind is FlowKind.KVM:
                identity = "dP/dt-k2"
                J2 = jacobi_power(JacobiMatrix.from_coefficients(rec.a_sq, rec.b, size), 2)
            else:
                identity = "dP/dt"
            for x in points:
                x = to_mpf(x)
                vals = [monic_values(r, n, x)[n] for r in data]
                lhs = rate * central_derivative(GridFunction(tuple(grid), tuple(vals)), 1, c)
                P = monic_values(rec, n, x)
                if kind is FlowKind.KVM:
                    rhs = -mpmath.fsum(J2[n, n - j] * rec.gamma[n - j] / rec.gamma[n] * P[n - j]
                                       for j in (1, 2) if n - j >= 0)
                else:
                    rhs = -rec.a_sq[n] * P[n - 1]
                residuals.append(abs(lhs - rhs))
    cert = min(d.certified_digits for d in data)
    report = ResidualReport(identity, [str(p) for p in points], residuals, 10 * h ** 4,
                            {"family": spec.family.value, "n": n, "center": str(center),
                             "certified_digits": cert})
    return report


# -- finite Toda conservation laws ------------------------------------------

def isospectral_check(rec, sites: int = 8, t_end="1", step="0.05", method: str = "taylor",
                      eig_tol="1e-20", trace_tol="1e-25"):
    """Finite Toda system on ``sites`` sites (a_sites^2 = 0): eigenvalues of the
    Jacobi matrix and the trace sum b_k at t = 0 and t = t_end.

    Returns (eigenvalue report, trace report, final state).
    """
    from .operators import eigenvalues

    with mp.workdps(rec.precision):
        state = toda_state(rec, sites)
        end = integrate(state, to_mpf(t_end), step, method=method, tol=to_mpf(trace_tol) / 100)
        ev0 = eigenvalues(JacobiMatrix.from_coefficients(state.a_sq, state.b))
        ev1 = eigenvalues(JacobiMatrix.from_coefficients(end.a_sq, end.b))
        eig = ResidualReport("isospectral", list(range(sites)), [abs(x - y) for x, y in zip(ev0, ev1)],
                             to_mpf(eig_tol), {"sites": sites, "t_end": str(t_end), "method": method})
        drift = abs(mpmath.fsum(end.b) - mpmath.fsum(state.b))
        trace = ResidualReport("trace", [0], [drift], to_mpf(trace_tol), {"sites": sites, "t_end": str(t_end)})
    return eig, trace, end
