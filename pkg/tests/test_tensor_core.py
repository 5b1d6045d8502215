import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nematic_plates.tensor_core import (
    QuadForm2,
    Sym2,
    gamma_from_moduli,
    inv_sqrtm_spd,
    q2,
    q2_matrix,
    q2_via_relaxation,
    q3,
    sqrtm_spd,
)

finite = st.floats(-10, 10, allow_nan=False)
sym2s = st.builds(Sym2, finite, finite, finite)
moduli = st.floats(0.05, 20.0)


def test_q3_examples():
    assert q3(np.zeros((3, 3)), 1.0, 2.0) == 0.0
    assert q3(np.eye(3), 1.0, 2.0) == pytest.approx(24.0)
    skew = np.zeros((3, 3))
    skew[0, 1], skew[1, 0] = 1.0, -1.0
    assert q3(skew, 1.0, 2.0) == 0.0


def test_q2_examples():
    assert q2(Sym2.zero(), 1.0, 0.5) == 0.0
    assert q2(Sym2.identity(), 1.0, 0.5) == pytest.approx(8.0)
    for g in (0.1, 0.5, 0.9):
        assert q2(Sym2.diag(1.0, -1.0), 1.0, g) == pytest.approx(4.0)


def test_relaxation_examples():
    assert q2_via_relaxation(Sym2.zero(), 1.0, 2.0) == pytest.approx(0.0, abs=1e-15)
    assert q2_via_relaxation(Sym2.identity(), 1.0, 2.0) == pytest.approx(8.0, rel=1e-12)
    assert q2_via_relaxation(Sym2.diag(2.0, 0.0), 1.0, 2.0) == pytest.approx(12.0, rel=1e-12)


def test_gamma_from_moduli():
    assert gamma_from_moduli(1.0, 2.0) == 0.5


def test_relaxation_against_scipy_minimiser():
    # independent route: numerically minimise q3 over the padded entries
    from scipy.optimize import minimize

    g = np.array([[0.3, -0.7], [-0.7, 1.1]])
    mu, kappa = 1.3, 0.4

    def padded(v):
        m = np.zeros((3, 3))
        m[:2, :2] = g
        m[:2, 2] = v[:2]
        m[2, 2] = v[2]
        return q3(m, mu, kappa)

    best = minimize(padded, np.zeros(3), method="BFGS", options={"gtol": 1e-12}).fun
    assert q2_via_relaxation(Sym2.from_matrix(g), mu, kappa) == pytest.approx(best, rel=1e-9)


@given(sym2s, moduli, moduli)
def test_relaxation_matches_closed_form(g, mu, kappa):
    closed = q2(g, mu, gamma_from_moduli(mu, kappa))
    assert q2_via_relaxation(g, mu, kappa) == pytest.approx(closed, rel=1e-9, abs=1e-12)


@given(sym2s, st.floats(0, 2 * np.pi), moduli, st.floats(0.01, 0.99))
def test_q2_rotation_invariant(g, angle, mu, gamma):
    c, s = np.cos(angle), np.sin(angle)
    r = np.array([[c, -s], [s, c]])
    assert q2(g.rotated(r), mu, gamma) == pytest.approx(q2(g, mu, gamma), rel=1e-12, abs=1e-12)


@given(sym2s, st.floats(0.01, 0.99))
def test_q2_positive_definite(g, gamma):
    value = q2(g, 1.0, gamma)
    assert value >= 0.0
    if g.norm > 1e-6:
        assert value > 0.0


@given(sym2s)
def test_q2_matrix_represents_q2(g):
    x = g.to_vector()
    assert x @ q2_matrix(1.7, 0.3) @ x == pytest.approx(q2(g, 1.7, 0.3), rel=1e-12, abs=1e-12)


@given(st.integers(0, 2**32 - 1), st.floats(0.0, 6.0))
def test_sqrtm_roundtrip(seed, log_cond):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    eig = 10.0 ** rng.uniform(0.0, log_cond, size=3)
    x = q @ np.diag(eig) @ q.T
    root = sqrtm_spd(x)
    assert np.allclose(root, root.T)
    np.testing.assert_allclose(root @ root, x, rtol=1e-10, atol=1e-10 * np.abs(x).max())
    np.testing.assert_allclose(inv_sqrtm_spd(x) @ root, np.eye(3), atol=1e-8)


def test_sqrtm_rejects_indefinite():
    with pytest.raises(ValueError):
        sqrtm_spd(np.diag([1.0, -1.0, 2.0]))


def test_sym2_algebra_exact_on_diagonal():
    a = Sym2.diag(3.0, -2.0)
    assert a.trace == 1.0 and a.det == -6.0
    assert a.norm == pytest.approx(np.sqrt(13.0))
    vals, vecs = a.eigh()
    np.testing.assert_array_equal(vals, [-2.0, 3.0])
    np.testing.assert_array_equal(np.abs(vecs), [[0.0, 1.0], [1.0, 0.0]])


@given(sym2s)
def test_sym2_vector_roundtrip(g):
    assert Sym2.from_vector(g.to_vector()).isclose(g, atol=1e-12)
    assert Sym2.from_matrix(g.to_matrix()) == g
    # the sqrt(2) basis makes the Frobenius product Euclidean
    assert g.to_vector() @ g.to_vector() == pytest.approx(g.norm**2, rel=1e-12, abs=1e-12)


def test_sym2_from_matrix_takes_symmetric_part():
    assert Sym2.from_matrix([[1.0, 2.0], [0.0, 1.0]]) == Sym2(1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        Sym2.from_matrix(np.eye(3))


@given(st.lists(finite, min_size=10, max_size=10))
def test_quadform_fit_recovers_quadratics(c):
    quad = np.array([[c[0], c[1], c[2]], [c[1], c[3], c[4]], [c[2], c[4], c[5]]])
    form = QuadForm2(quad, c[6:9], c[9])
    fitted = QuadForm2.fit(form)
    np.testing.assert_allclose(fitted.quad, form.quad, atol=1e-9)
    np.testing.assert_allclose(fitted.lin, form.lin, atol=1e-9)
    assert fitted.const == pytest.approx(form.const, abs=1e-9)


def test_quadform_evaluation_is_sum_of_parts():
    form = QuadForm2(np.diag([1.0, 2.0, 3.0]), [1.0, 0.0, -1.0], 4.0)
    g = Sym2(1.0, 1.0 / np.sqrt(2.0), 2.0)
    x = g.to_vector()
    assert form(g) == pytest.approx(x @ np.diag([1.0, 2.0, 3.0]) @ x + x[0] - x[2] + 4.0)
