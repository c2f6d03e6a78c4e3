import json

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st
from mpmath import mp, mpf

from opxlab import weights as W
from opxlab.direct import VerblunskyData, recurrence_coefficients, verblunsky_coefficients
from opxlab.errors import PositivityViolation, SizeMismatch
from opxlab.operators import (
    Banded,
    JacobiMatrix,
    alpha_from_cmv,
    build_cmv,
    build_jacobi,
    commutator,
    eigenvalues,
    jacobi_power,
    lax_A,
    lax_B,
    lax_B_from_split,
    sturm_count,
)

DIGITS = 100


def dense_product(x, y):
    n = len(x)
    return [[mpmath.fsum(x[i][k] * y[k][j] for k in range(n)) for j in range(n)] for i in range(n)]


def max_dense_diff(x, y, lo=0, hi=None):
    hi = len(x) - 1 if hi is None else hi
    return max(abs(x[i][j] - y[i][j]) for i in range(lo, hi + 1) for j in range(lo, hi + 1))


small_jacobi = st.integers(3, 8).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(-20, 20), min_size=n, max_size=n),
        st.lists(st.integers(1, 20), min_size=n - 1, max_size=n - 1),
    )
)


def jacobi_from_ints(data):
    b, a = data
    return JacobiMatrix([mpf(x) / 7 for x in b], [mpf(x) / 5 for x in a])


def jacobi_at_precision(rec, N):
    with mp.workdps(rec.precision):
        return build_jacobi(rec, N)


@pytest.fixture(scope="module")
def freud_rec():
    return recurrence_coefficients(W.freud("0"), 14, DIGITS)


@pytest.fixture(scope="module")
def circle_cmv():
    v = verblunsky_coefficients(W.circle("1"), 12, DIGITS)
    with mp.workdps(v.precision):
        return build_cmv(v, 10)


# -- Jacobi -----------------------------------------------------------------

def test_freud_diagonal_zero(freud_rec):
    J = jacobi_at_precision(freud_rec, 10)
    assert all(J[i, i] == 0 for i in range(10))


def test_two_by_two_layout(freud_rec):
    rec = recurrence_coefficients(W.charlier("1", "1"), 4, 50)
    J = jacobi_at_precision(rec, 2)
    with mp.workdps(rec.precision):
        a1 = mpmath.sqrt(rec.a_sq[1])
        assert J.to_dense() == [[rec.b[0], a1], [a1, rec.b[1]]]


def test_build_size_mismatch(freud_rec):
    with pytest.raises(SizeMismatch):
        build_jacobi(freud_rec, 20)


def test_positive_off_diagonal():
    with pytest.raises(PositivityViolation):
        JacobiMatrix([mpf(0), mpf(0)], [mpf(0)])


def test_jacobi_toda_spectrum_inside_interval():
    rec = recurrence_coefficients(W.jacobi_toda("0", "0", "0"), 12, 60)
    J = jacobi_at_precision(rec, 12)
    with mp.workdps(rec.precision):
        assert sturm_count(J, mpf(-1)) == 0
        assert sturm_count(J, mpf(1)) == 12
        eig = eigenvalues(J)
        assert all(-1 < e < 1 for e in eig)
        # Legendre: zeros of P_12 are the eigenvalues
        assert max(abs(mpmath.legendre(12, e)) for e in eig) < mpf(10) ** -40


@given(small_jacobi)
def test_eigenvalues_simple_and_complete(data):
    J = jacobi_from_ints(data)
    with mp.workdps(40):
        eig = eigenvalues(J)
        assert len(eig) == J.size
        assert all(x < y for x, y in zip(eig, eig[1:]))
        dense = mpmath.matrix(J.to_dense())
        for e in eig:
            assert abs(mpmath.det(dense - e * mpmath.eye(J.size))) < mpf(10) ** -25


def test_square_symmetric_case(freud_rec):
    J = jacobi_at_precision(freud_rec, 10)
    a_sq = freud_rec.a_sq
    with mp.workdps(freud_rec.precision):
        J2 = jacobi_power(J, 2)
        for n in range(1, 9):
            assert abs(J2[n, n] - (a_sq[n] + a_sq[n + 1])) < mpf(10) ** -90
            assert J2[n, n + 1] == 0
    assert J2.bandwidth == 2


@given(small_jacobi, st.integers(1, 3))
def test_power_matches_dense_product(data, k):
    J = jacobi_from_ints(data)
    if 2 * k + 1 > J.size:
        with pytest.raises(SizeMismatch):
            jacobi_power(J, k)
        return
    with mp.workdps(40):
        dense = J.to_dense()
        expected = dense
        for _ in range(k - 1):
            expected = dense_product(expected, dense)
        assert max_dense_diff(jacobi_power(J, k).to_dense(), expected) < mpf(10) ** -35


def test_lax_A_examples(freud_rec):
    D = Banded(4, {0: [mpf(1), mpf(2), mpf(3), mpf(4)]})
    assert lax_A(D).companion.max_abs() == 0
    J = jacobi_at_precision(freud_rec, 8)
    A = lax_A(J).companion
    for n in range(7):
        assert A[n + 1, n] == J.a[n] / 2
        assert A[n, n + 1] == -J.a[n] / 2
    with mp.workdps(freud_rec.precision):
        assert lax_A(J).antisymmetry_defect() == 0
        # J^3 is symmetric only up to rounding of the banded products
        assert lax_A(jacobi_power(J, 3)).antisymmetry_defect() < mpf(10) ** -(DIGITS - 5)


def test_commutator_trivial(freud_rec):
    J = jacobi_at_precision(freud_rec, 6)
    assert commutator(J, Banded.identity(6)).max_abs() == 0
    assert commutator(J, J).max_abs() == 0
    with pytest.raises(SizeMismatch):
        commutator(J, Banded.identity(5))


def test_toda_commutator_structure(freud_rec):
    J = jacobi_at_precision(freud_rec, 6)
    with mp.workdps(freud_rec.precision):
        dense = dense_product(J.to_dense(), lax_A(J).companion.to_dense())
        other = dense_product(lax_A(J).companion.to_dense(), J.to_dense())
        comm = [[x - y for x, y in zip(r, s)] for r, s in zip(dense, other)]
        assert max_dense_diff(comm, commutator(J, lax_A(J).companion).to_dense()) < mpf(10) ** -90
        # interior: tridiagonal and symmetric
        for i in range(1, 5):
            for j in range(1, 5):
                if abs(i - j) > 1:
                    assert abs(comm[i][j]) < mpf(10) ** -90
                assert abs(comm[i][j] - comm[j][i]) < mpf(10) ** -90


def test_banded_json_round_trip(freud_rec):
    J = jacobi_at_precision(freud_rec, 5)
    with mp.workdps(40):
        back = Banded.from_json(J.to_json(digits=40))
        assert (back - J).max_abs() < mpf(10) ** -38
    assert json.loads(J.to_json())
    assert J.to_csv().splitlines()[0]


# -- CMV --------------------------------------------------------------------

def test_free_cmv_is_permutation():
    v = VerblunskyData((mpf(0),) * 8, (mpf(1),) * 9)
    cmv = build_cmv(v, 8)
    dense = cmv.C.to_dense()
    for row in dense[:-2]:
        assert sorted(abs(x) for x in row)[-1] == 1 and sum(abs(x) for x in row) == 1
    assert cmv.interior_unitarity_defect() == 0


def test_free_lax_B_corner():
    v = VerblunskyData((mpf(0),) * 6, (mpf(1),) * 7)
    B = lax_B(build_cmv(v, 6)).companion
    assert B[0, 1] == mpf(1) / 2


def test_cmv_unitarity_and_theta(circle_cmv):
    with mp.workdps(DIGITS):
        assert circle_cmv.theta_defect() < mpf(10) ** -90
        assert circle_cmv.interior_unitarity_defect() < mpf(10) ** -90
        dense = circle_cmv.C.to_dense()
        gram = dense_product([list(r) for r in zip(*dense)], dense)
        ident = [[mpf(i == j) for j in range(10)] for i in range(10)]
        assert max_dense_diff(gram, ident, 0, 7) < mpf(10) ** -90
        product = dense_product(circle_cmv.L.to_dense(), circle_cmv.M.to_dense())
        assert max_dense_diff(product, dense) < mpf(10) ** -90
    assert circle_cmv.C.bandwidth == 2


def test_cmv_odd_size_rejected():
    v = VerblunskyData((mpf(0),) * 8, (mpf(1),) * 9)
    with pytest.raises(SizeMismatch):
        build_cmv(v, 7)
    with pytest.raises(SizeMismatch):
        build_cmv(v, 10)


@given(st.lists(st.integers(-9, 9), min_size=6, max_size=6))
def test_cmv_round_trip(values):
    alpha = tuple(mpf(x) / 10 for x in values)
    v = VerblunskyData(alpha, (mpf(1),) * 7)
    with mp.workdps(50):
        recovered = alpha_from_cmv(build_cmv(v, 6).C)
        assert max(abs(x - y) for x, y in zip(recovered, alpha)) < mpf(10) ** -45


def test_lax_B_against_split(circle_cmv):
    with mp.workdps(DIGITS):
        lax = lax_B(circle_cmv)
        assert lax.antisymmetry_defect() == 0
        split = lax_B_from_split(circle_cmv.C)
        assert (lax.companion - split).max_abs((0, circle_cmv.size - 3)) < mpf(10) ** -90
