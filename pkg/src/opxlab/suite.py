"""The acceptance battery as nine named checks.

Each check runs at fixed default parameter points (overridable per family)
and returns a :class:`CheckResult` holding residual reports, any reading or
branch resolutions taken, and the certified digits of the data it used.
"""
from __future__ import annotations

import functools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import mpmath
from mpmath import mp, mpf

from . import weights as W
from .direct import recurrence_coefficients, verblunsky_coefficients
from .flows import FLOW_OF, flow_consistency, isospectral_check, lax_check, polynomial_flow_check
from .numerics import default_digits
from .operators import build_cmv
from .oracles import gram_schmidt_recurrence, gram_schmidt_verblunsky, relative_disagreement
from .painleve import (
    CP_FAMILIES,
    cp_residual,
    dp_check,
    hypergeometric_params,
    pvi_self_consistency,
    structure_residual,
)
from .report import ResidualReport
from .weights import Family, WeightSpec

CHECKS = ("oracle", "dp", "flow", "lax", "isospectral", "poly", "structure", "cp", "invariants")
TITLES = {
    "oracle": "direct-problem oracle equivalence",
    "dp": "discrete Painleve residual suite",
    "flow": "Toda/lattice flow consistency",
    "lax": "Lax residuals",
    "isospectral": "isospectrality of finite Toda",
    "poly": "polynomial-level flow lemmas",
    "structure": "structure relations",
    "cp": "continuous Painleve suite",
    "invariants": "invariant regression",
}
CRITERION = {name: i + 1 for i, name in enumerate(CHECKS)}

DEFAULT_POINTS = {
    Family.FREUD: W.freud("0.3"),
    Family.MODIFIED_LAGUERRE: W.modified_laguerre("0.5", "0.7"),
    Family.CHEN_ITS: W.chen_its("0.5", "1.5"),
    Family.JACOBI_TODA: W.jacobi_toda("0.5", "1.5", "0.8"),
    Family.CHARLIER: W.charlier("0.8", "1.2"),
    Family.MEIXNER: W.meixner("1", "2", "3"),
    Family.HYPERGEOMETRIC: W.hypergeometric("1.5", "2.5", "3.2", "0.4"),
    Family.CIRCLE: W.circle("1.5"),
}

# degree used by the continuous checks
CP_DEGREE = {
    Family.FREUD: 2, Family.CIRCLE: 3, Family.CHEN_ITS: 2, Family.JACOBI_TODA: 2,
    Family.MODIFIED_LAGUERRE: 2, Family.CHARLIER: 3, Family.MEIXNER: 3,
}
# (degree, sample points) for the polynomial lemmas
POLY_SAMPLES = {
    Family.MODIFIED_LAGUERRE: (4, ("-0.5", "0.3", "1.7")),
    Family.FREUD: (4, ("-0.8", "0.1", "1.1")),
    Family.CIRCLE: (3, ("0.3+0.4j", "-0.6+0.1j", "0.2-0.9j")),
}
STRUCTURE_FAMILIES = (Family.FREUD, Family.CHARLIER)
FLOW_FAMILIES = (Family.MODIFIED_LAGUERRE, Family.FREUD, Family.CIRCLE)


@dataclass(frozen=True)
class SuiteSettings:
    """Knobs shared by every check; ``specs`` override default parameter
    points and ``families`` restricts which families are exercised."""

    digits: int = 0
    N: int = 15
    points: int = 5
    spacing: str | None = None
    specs: tuple = ()
    families: tuple = ()
    flow_start: str = "0.2"
    flow_end: str = "0.7"
    flow_target: int = 8
    flow_step: str = "0.05"
    flow_buffer: int = 10
    flow_method: str = "taylor"
    isospectral_sites: int = 8
    isospectral_end: str = "1"

    def __post_init__(self):
        if not self.digits:
            object.__setattr__(self, "digits", default_digits())

    def spec_for(self, family: Family) -> WeightSpec:
        for spec in self.specs:
            if spec.family is family:
                return spec
        return DEFAULT_POINTS[family]

    def targets(self, defaults, allowed=None) -> list:
        """Families to run: the explicit selection (within ``allowed``) or the defaults."""
        if not self.families:
            return list(defaults)
        allowed = defaults if allowed is None else allowed
        return [f for f in self.families if f in allowed]


@dataclass
class CheckResult:
    name: str
    reports: list = field(default_factory=list)
    resolutions: dict = field(default_factory=dict)
    certified: dict = field(default_factory=dict)

    @property
    def criterion(self) -> int:
        return CRITERION[self.name]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        return {
            "check": self.name,
            "criterion": self.criterion,
            "verdict": self.verdict,
            "certified_digits": dict(sorted(self.certified.items())),
            "resolutions": {k: self.resolutions[k] for k in sorted(self.resolutions)},
            "reports": [r.to_dict() for r in self.reports],
        }


@functools.lru_cache(maxsize=None)
def _recurrence(spec: WeightSpec, N: int, digits: int):
    return recurrence_coefficients(spec, N, digits)


@functools.lru_cache(maxsize=None)
def _verblunsky(spec: WeightSpec, N: int, digits: int):
    return verblunsky_coefficients(spec, N, digits)


def _label(spec: WeightSpec) -> str:
    return spec.family.value


def _coefficients(spec, N, digits):
    if spec.family is Family.CIRCLE:
        return _verblunsky(spec, N, digits)
    return _recurrence(spec, N, digits)


# -- the nine checks ----------------------------------------------------------

def check_oracle(s: SuiteSettings, upto: int = 10, required_digits: int = 30) -> CheckResult:
    """Factorization path against exact Gram-Schmidt for n <= ``upto``.

    The residual is the larger of the relative disagreement and
    10^(-certified), so it also fails when fewer than ``required_digits``
    digits are certified.
    """
    out = CheckResult("oracle")
    tol = mpf(10) ** -required_digits
    for family in s.targets(list(Family)):
        spec = s.spec_for(family)
        data = _coefficients(spec, max(s.N, upto), s.digits)
        out.certified[_label(spec)] = data.certified_digits
        table = W.moment_table(spec, upto, data.precision)
        with mp.workdps(data.precision):
            floor = mpf(10) ** -data.certified_digits
            if family is Family.CIRCLE:
                exact = gram_schmidt_verblunsky(table.entries, upto)
                rows = [("alpha", relative_disagreement(exact, data.alpha[:upto]))]
            else:
                a_sq, b = gram_schmidt_recurrence(table.entries, upto)
                rows = [("a_sq", relative_disagreement(a_sq, data.a_sq[:upto + 1], skip=1)),
                        ("b", relative_disagreement(b, data.b[:upto]))]
            out.reports.append(ResidualReport(
                f"oracle-{family.value}", [r[0] for r in rows], [max(r[1], floor) for r in rows], tol,
                {"family": family.value, "params": spec.params, "upto": upto,
                 "certified_digits": data.certified_digits}))
    return out


def check_dp(s: SuiteSettings) -> CheckResult:
    out = CheckResult("dp")
    n_max = min(12, s.N - 2)
    for family in s.targets(list(Family)):
        spec = s.spec_for(family)
        reports, resolutions = dp_check(spec, s.N, s.digits, n_max=n_max)
        out.reports.extend(reports)
        out.resolutions.update(resolutions)
        out.certified[_label(spec)] = _coefficients(spec, s.N, s.digits).certified_digits
    return out


def check_flow(s: SuiteSettings) -> CheckResult:
    out = CheckResult("flow")
    for family in s.targets(FLOW_FAMILIES, list(FLOW_OF)):
        spec = s.spec_for(family)
        start = spec.with_param(spec.deformation, s.flow_start)
        report = flow_consistency(start, s.flow_target, s.flow_end, s.digits, step=s.flow_step,
                                  method=s.flow_method, buffer=s.flow_buffer)
        out.reports.append(report)
    return out


def check_lax(s: SuiteSettings) -> CheckResult:
    out = CheckResult("lax")
    for family in s.targets(FLOW_FAMILIES, list(FLOW_OF)):
        spec = s.spec_for(family)
        size = min(s.N, 10 if family is Family.CIRCLE else 12)
        if family is Family.CIRCLE:
            size -= size % 2
        report = lax_check(spec, size, spec.params[spec.deformation], s.digits, s.points, spacing=s.spacing)
        out.certified[_label(spec)] = report.notes["certified_digits"]
        out.reports.append(report)
    return out


def check_isospectral(s: SuiteSettings) -> CheckResult:
    out = CheckResult("isospectral")
    hankel = [f for f in Family if f is not Family.CIRCLE]
    for family in s.targets([Family.MODIFIED_LAGUERRE], hankel):
        # flow time starts at 0 from the data at the family's parameter point
        spec = s.spec_for(family)
        rec = _recurrence(spec, max(s.N, s.isospectral_sites), s.digits)
        eig, trace, _ = isospectral_check(rec, s.isospectral_sites, s.isospectral_end, s.flow_step,
                                          s.flow_method)
        for rep in (eig, trace):
            rep.notes["family"] = family.value
        out.reports += [eig, trace]
        out.certified[_label(spec)] = rec.certified_digits
    return out


def check_poly(s: SuiteSettings) -> CheckResult:
    out = CheckResult("poly")
    for family in s.targets(list(POLY_SAMPLES), list(FLOW_OF)):
        spec = s.spec_for(family)
        n, samples = POLY_SAMPLES.get(family, (4, ("-0.5", "0.3", "1.7")))
        report = polynomial_flow_check(spec, n, samples, spec.params[spec.deformation], s.digits,
                                       s.points, spacing=s.spacing)
        out.certified[_label(spec)] = report.notes["certified_digits"]
        out.reports.append(report)
    return out


def check_structure(s: SuiteSettings, degrees=range(4, 9)) -> CheckResult:
    out = CheckResult("structure")
    for family in s.targets(STRUCTURE_FAMILIES):
        spec = s.spec_for(family)
        rec = _recurrence(spec, s.N, s.digits)
        out.certified[_label(spec)] = rec.certified_digits
        # small N caps the degrees the data can support
        for n in (d for d in degrees if d <= rec.N - 1):
            out.reports.append(structure_residual(spec, rec, n))
    return out


def check_cp(s: SuiteSettings) -> CheckResult:
    out = CheckResult("cp")
    for family in s.targets(CP_FAMILIES):
        spec = s.spec_for(family)
        reports, resolutions = cp_residual(spec, CP_DEGREE[family], spec.params[spec.deformation], s.digits,
                                           s.points, spacing=s.spacing)
        out.reports.extend(reports)
        out.resolutions.update(resolutions)
        out.certified[_label(spec)] = min(int(r.notes.get("certified_digits", s.digits)) for r in reports)
    if not s.families or Family.HYPERGEOMETRIC in s.families:
        spec = s.spec_for(Family.HYPERGEOMETRIC)
        with mp.workdps(s.digits + 20):
            prm = hypergeometric_params(spec["alpha"], spec["beta"], spec["gamma"], 2)
        out.reports.append(pvi_self_consistency(prm, digits=s.digits, points=s.points, spacing=s.spacing))
    return out


def check_invariants(s: SuiteSettings) -> CheckResult:
    """Positivity, |alpha_n| < 1, a_n gamma_n = gamma_{n-1}, the kappa-alpha
    relation, Theta orthogonality and interior CMV unitarity."""
    out = CheckResult("invariants")
    for family in s.targets(list(Family)):
        spec = s.spec_for(family)
        data = _coefficients(spec, s.N, s.digits)
        out.certified[_label(spec)] = data.certified_digits
        with mp.workdps(data.precision):
            tol = mpf(10) ** (-mpf(data.certified_digits) / 2)
            notes = {"family": family.value, "certified_digits": data.certified_digits}
            if family is Family.CIRCLE:
                worst = max(abs(a) for a in data.alpha)
                out.reports.append(ResidualReport("modulus", ["max|alpha|"], [0 if worst < 1 else 1], mpf("0.5"),
                                                  {**notes, "max_abs_alpha": mpmath.nstr(worst, 10)}))
                out.reports.append(ResidualReport("kappa-alpha", [family.value], [data.kappa_alpha_residual()],
                                                  tol, notes))
                cmv = build_cmv(data, data.N - data.N % 2)
                out.reports.append(ResidualReport("theta-orthogonality", [family.value], [cmv.theta_defect()],
                                                  tol, notes))
                out.reports.append(ResidualReport("cmv-unitarity", [family.value],
                                                  [cmv.interior_unitarity_defect()], tol, notes))
            else:
                smallest = min(data.a_sq[1:])
                out.reports.append(ResidualReport("positivity", ["min a_sq"], [0 if smallest > 0 else 1],
                                                  mpf("0.5"), {**notes, "min_a_sq": mpmath.nstr(smallest, 10)}))
                out.reports.append(ResidualReport("a-gamma", [family.value], [data.a_gamma_residual()], tol, notes))
    return out


RUNNERS = {
    "oracle": check_oracle,
    "dp": check_dp,
    "flow": check_flow,
    "lax": check_lax,
    "isospectral": check_isospectral,
    "poly": check_poly,
    "structure": check_structure,
    "cp": check_cp,
    "invariants": check_invariants,
}


def run_check(name: str, settings: SuiteSettings) -> CheckResult:
    if name not in RUNNERS:
        raise KeyError(f"unknown check {name!r}; choose from {', '.join(CHECKS)}")
    return RUNNERS[name](settings)


def _run_named(args):
    name, settings = args
    return run_check(name, settings)


def run_checks(names, settings: SuiteSettings, jobs: int = 1) -> list:
    """Run checks in the given order; with jobs > 1 they run in separate
    processes and are reassembled in the same order."""
    names = list(names)
    for name in names:
        if name not in RUNNERS:
            raise KeyError(f"unknown check {name!r}; choose from {', '.join(CHECKS)}")
    if jobs <= 1 or len(names) <= 1:
        return [run_check(name, settings) for name in names]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_named, [(name, settings) for name in names]))
