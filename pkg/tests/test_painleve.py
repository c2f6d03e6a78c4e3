from dataclasses import replace
from types import SimpleNamespace

import pytest
from hypothesis import given
from hypothesis import strategies as st
from mpmath import mp, mpf

from opxlab import weights as W
from opxlab.direct import recurrence_coefficients
from opxlab.errors import IndexOutOfStencil, SingularDenominator
from opxlab.numerics import GridFunction
from opxlab.painleve import (
    CLASSIFICATION,
    PainleveParams,
    aux_extract,
    cp_residual,
    dp_check,
    dp_residual,
    freud_p4,
    hypergeometric_params,
    meixner_shooting,
    p6,
    propagate_dpi,
    pvi_residual,
    pvi_self_consistency,
    structure_residual,
    substitute_back,
)
from opxlab.weights import Family

DIGITS = 100
ZERO = PainleveParams(mpf(0), mpf(0), mpf(0), mpf(0))


def rel(x, y):
    return max(abs(a - b) / max(abs(a), 1) for a, b in zip(x, y))


# -- structural substitutions -----------------------------------------------

def test_dpi_constant_input():
    s = mpf(3) / 7
    data = SimpleNamespace(a_sq=(s,) * 10, N=9, certified_digits=40)
    with mp.workdps(40):
        (report,) = dp_residual(W.freud("0"), data)
        for n, r in zip(report.indices, report.residuals):
            assert abs(r - abs(12 * s ** 2 - n)) < mpf(10) ** -35


def test_dpii_free_case():
    # alpha = 0 is the t = 0 solution; for t > 0 only the n = 0 equation sees alpha_{-1} = -1
    data = SimpleNamespace(alpha=(mpf(0),) * 8, N=8, certified_digits=40)
    (report,) = dp_residual(W.circle("0"), data)
    assert all(r == 0 for r in report.residuals)
    (report,) = dp_residual(W.circle("0.7"), data)
    assert report.residuals[0] == mpf("0.35") and all(r == 0 for r in report.residuals[1:])


@given(st.lists(st.integers(-9, 9), min_size=6, max_size=6), st.integers(1, 30))
def test_dpii_odd_symmetry(values, t10):
    # alpha -> -alpha maps the equation to its negative away from the fixed alpha_{-1} = -1
    with mp.workdps(30):
        alpha = tuple(mpf(v) / 10 for v in values)
        spec = W.circle(str(mpf(t10) / 10))
        r1 = dp_residual(spec, SimpleNamespace(alpha=alpha, N=6, certified_digits=30))[0].residuals
        r2 = dp_residual(spec, SimpleNamespace(alpha=tuple(-a for a in alpha), N=6, certified_digits=30))[0].residuals
        assert r1[1:] == r2[1:]


def test_continuous_substitutions():
    s = mpf(5) / 3
    assert freud_p4(s, 0, 0, 0) == 3 * s ** 3 / 2
    with pytest.raises(SingularDenominator):
        p6(mpf("0.4"), mpf(1), mpf("0.4"), hypergeometric_params(mpf(1), mpf(2), mpf(3), 1))
    with mp.workdps(30):
        grid = tuple(mpf("0.4") + k * mpf(10) ** -5 for k in range(-2, 3))
        assert pvi_residual(GridFunction(grid, (mpf("0.3"),) * 5), ZERO) == 0


def test_classification_covers_every_family():
    assert set(CLASSIFICATION) == set(Family)


# -- discrete systems on pipeline data --------------------------------------

@pytest.mark.parametrize("spec", [W.freud("0.3"), W.chen_its("0.5", "1"), W.modified_laguerre("0.5", "0.7"),
                                  W.charlier("0.8", "1.2"), W.meixner("1", "2", "3")])
def test_dp_systems(spec):
    reports, _ = dp_check(spec, N=12, digits=DIGITS)
    assert reports and all(r.passed for r in reports)


def test_dpii_circle():
    reports, _ = dp_check(W.circle("1.5"), N=12, digits=DIGITS)
    assert reports[0].passed and len(reports[0].residuals) == 11


def test_readings_resolve_uniquely():
    _, res = dp_check(W.jacobi_toda("0.5", "1.5", "0.8"), N=12, digits=DIGITS)
    assert res["bce_sum"]["reading"] == "corrected" and res["bce_sum"]["resolution"] == "unique"
    reports, res = dp_check(W.hypergeometric("1.5", "2.5", "3.2", "0.4"), N=12, digits=DIGITS)
    assert all(r.passed for r in reports)
    assert res["hypergeometric_t"]["reading"] == "1/c" and res["hypergeometric_t"]["resolution"] == "unique"
    assert res["hypergeometric_constant"]["resolution"] == "equivalent"


@pytest.mark.parametrize("spec", [W.chen_its("0.5", "1"), W.modified_laguerre("0.5", "0.7"),
                                  W.charlier("0.8", "1.2"), W.meixner("1", "2", "3"),
                                  W.jacobi_toda("0.5", "1.5", "0.8"),
                                  W.hypergeometric("1.5", "2.5", "3.2", "0.4")])
def test_aux_round_trip(spec):
    rec = recurrence_coefficients(spec, 10, DIGITS)
    with mp.workdps(rec.precision):
        a_sq, b = substitute_back(aux_extract(spec, rec))
        bound = mpf(10) ** -(rec.certified_digits - 10)
        if a_sq is not None:
            assert rel(rec.a_sq[1:len(a_sq)], a_sq[1:]) < bound
        assert rel(rec.b, b) < bound


def test_dpi_forward_propagation():
    rec = recurrence_coefficients(W.freud("1"), 10, DIGITS)
    with mp.workdps(rec.precision):
        run = propagate_dpi(rec.a_sq[1], rec.a_sq[2], mpf(1), 8)
        assert rel(rec.a_sq[1:9], run[1:9]) < mpf(10) ** -(rec.certified_digits // 4)


def test_perturbed_data_fails():
    rec = recurrence_coefficients(W.freud("0.3"), 10, DIGITS)
    bent = replace(rec, a_sq=rec.a_sq[:4] + (rec.a_sq[4] * (1 + mpf(10) ** -30),) + rec.a_sq[5:])
    with mp.workdps(rec.precision):
        (report,) = dp_residual(W.freud("0.3"), bent)
    assert not report.passed


# -- structure relations ----------------------------------------------------

@pytest.mark.parametrize("spec", [W.freud("0"), W.charlier("0.8", "1.2")])
def test_structure_relations(spec):
    rec = recurrence_coefficients(spec, 10, DIGITS)
    for n in range(3, 9):
        assert structure_residual(spec, rec, n).passed


def test_structure_negative_control():
    rec = recurrence_coefficients(W.freud("0"), 10, DIGITS)
    bent = replace(rec, b=rec.b[:2] + (mpf(10) ** -20,) + rec.b[3:])
    report = structure_residual(W.freud("0"), bent, 6)
    assert not report.passed


def test_structure_errors():
    rec = recurrence_coefficients(W.freud("0"), 6, 50)
    with pytest.raises(IndexOutOfStencil):
        structure_residual(W.freud("0"), rec, 2)
    with pytest.raises(ValueError):
        structure_residual(W.circle("1"), rec, 4)


# -- continuous equations ---------------------------------------------------

@pytest.mark.parametrize("spec, n, center", [
    (W.freud("0.2"), 2, "0.2"),
    (W.circle("1.2"), 3, "1.2"),
    (W.chen_its("0.5", "1.5"), 2, "1.5"),
    (W.modified_laguerre("0.5", "0.7"), 2, "0.7"),
    (W.charlier("0.8", "1.2"), 3, "0.8"),
])
def test_continuous_painleve(spec, n, center):
    reports, _ = cp_residual(spec, n, center, digits=DIGITS)
    assert reports and all(r.passed for r in reports)


def test_continuous_readings():
    _, res = cp_residual(W.chen_its("0.5", "1.5"), 2, "1.5", digits=DIGITS)
    assert res["chen_its_ode"]["reading"] == "corrected"
    _, res = cp_residual(W.jacobi_toda("0.5", "1.5", "0.8"), 2, "0.8", digits=DIGITS)
    assert res["bce_p5"]["reading"] == "corrected"


@pytest.mark.slow
def test_meixner_shooting_finds_one_branch():
    reports, res = meixner_shooting(W.meixner("1", "2", "3"), 3, "1", digits=80)
    assert reports[0].passed
    assert res["meixner_branch"]["resolution"] == "unique"


def test_pvi_self_consistency():
    prm = hypergeometric_params(mpf("1.5"), mpf("2.5"), mpf("3.2"), 2)
    report = pvi_self_consistency(prm, digits=80)
    assert report.passed
    assert mpf(report.notes["control_residual"]) > mpf(10) ** -3


def test_pvi_stencil_error_scales_as_h4():
    prm = hypergeometric_params(mpf("1.5"), mpf("2.5"), mpf("3.2"), 2)
    coarse = pvi_self_consistency(prm, digits=60, spacing="2e-5")
    fine = pvi_self_consistency(prm, digits=60, spacing="1e-5")
    # at 60 digits the stencil truncation dominates, so halving h divides it by 16
    ratio = coarse.residuals[0] / fine.residuals[0]
    assert 15 < ratio < 17
    assert mpf(coarse.notes["control_residual"]) > 10 ** 10 * coarse.residuals[0]
