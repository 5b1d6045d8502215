import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nematic_plates.material_model import MaterialParams
from nematic_plates.plate_energy import (
    CurvatureField,
    Multiplicity,
    brute_force_developable_min,
    developable_energy,
    family_rotation,
    limit_energy,
    minimise_over_developable,
    physical_prefactor,
    zero_stiffness_family,
)
from nematic_plates.reduction import ReducedModel, reduce_texture
from nematic_plates.tensor_core import Sym2

PI2, PI4 = np.pi**2, np.pi**4
UNIT = MaterialParams(1.0, 2.0, alpha0=2.0)  # delta0 = 1, gamma = 1/2
TWISTED_MIN = (12 * 2 / 1.5 + (PI4 - 4 * PI2 - 48) / 2) / PI4


@pytest.fixture(scope="module")
def models():
    return {t: reduce_texture(t, UNIT) for t in ("splay-bend", "twisted")} | {
        "constant-normal": reduce_texture("constant-normal", MaterialParams(1.0, 2.0))
    }


def test_limit_energy_examples(models):
    sb = models["splay-bend"]
    assert limit_energy(CurvatureField.constant(sb.abar, 2.5), sb) == pytest.approx(sb.beta / 2 * 2.5, rel=1e-12)
    tw = models["twisted"]
    a = Sym2.diag(-12 / (PI2 * 1.5), 0.0)
    assert limit_energy(CurvatureField.constant(a), tw) == pytest.approx(TWISTED_MIN, rel=1e-9)
    cn = models["constant-normal"]
    assert abs(limit_energy(CurvatureField.constant(cn.abar), cn)) < 1e-16


def test_limit_energy_sampled_field(models):
    tw = models["twisted"]
    values = np.stack([Sym2.diag(k, 0.0).to_matrix() for k in (-1.0, 0.0, 1.0)])
    weights = np.array([0.25, 0.5, 0.25])
    expected = sum(w * tw.energy_density(v) for w, v in zip(weights, values))
    assert limit_energy(CurvatureField(values, 1.0, weights), tw) == pytest.approx(expected, rel=1e-13)


def test_curvature_field_validation():
    with pytest.raises(ValueError):
        CurvatureField(np.array([[np.nan, 0.0], [0.0, 1.0]]), 1.0)
    with pytest.raises(ValueError):
        CurvatureField(np.zeros((3, 2, 2)), 1.0)
    with pytest.raises(ValueError):
        CurvatureField(np.zeros((2, 2)), 0.0)


def test_physical_prefactor():
    assert physical_prefactor(2.0) == 8.0


def test_twisted_bistable(models):
    res = minimise_over_developable(models["twisted"])
    assert res.multiplicity is Multiplicity.BISTABLE
    k = 12 / (PI2 * 1.5)
    found = sorted(res.minimisers, key=lambda a: a.xx)
    assert found[0].isclose(Sym2.diag(-k, 0.0), atol=1e-9)
    assert found[1].isclose(Sym2.diag(0.0, k), atol=1e-9)
    assert k == pytest.approx(0.810570, abs=1e-6)
    assert res.energy == pytest.approx(TWISTED_MIN, rel=1e-9)
    assert res.energy == pytest.approx(0.215230, abs=1e-6)
    for a in res.minimisers:
        assert abs(a.det) < 1e-10
        assert limit_energy(CurvatureField.constant(a), models["twisted"]) == pytest.approx(res.energy, rel=1e-9)


def test_bistability_symmetry(models):
    tw = models["twisted"]
    a, b = minimise_over_developable(tw).minimisers
    swapped = Sym2(-a.yy, a.xy, -a.xx)
    assert swapped.isclose(b, atol=1e-12) or Sym2(-b.yy, b.xy, -b.xx).isclose(a, atol=1e-12)
    ea = limit_energy(CurvatureField.constant(a), tw)
    eb = limit_energy(CurvatureField.constant(b), tw)
    assert ea == pytest.approx(eb, rel=1e-12)


def test_splay_bend_unique(models):
    sb = models["splay-bend"]
    res = minimise_over_developable(sb)
    assert res.multiplicity is Multiplicity.UNIQUE
    assert res.minimisers[0].isclose(sb.abar, atol=1e-12)
    assert res.energy == pytest.approx(sb.beta / 2, rel=1e-12)


def test_constant_normal_family(models):
    res = minimise_over_developable(models["constant-normal"])
    assert res.multiplicity is Multiplicity.CONTINUOUS_FAMILY
    assert res.family_curvature == pytest.approx(-2 / 9, rel=1e-12)
    assert res.energy == pytest.approx(1 / 324, rel=1e-12)


def test_attainability_dichotomy(models):
    sb, tw = models["splay-bend"], models["twisted"]
    assert abs(sb.abar.det) < 1e-15
    assert minimise_over_developable(sb).energy == pytest.approx(sb.beta / 2, rel=1e-12)
    assert tw.abar.det < 0
    gap = minimise_over_developable(tw).energy - tw.beta / 2
    assert gap == pytest.approx((1 / 12) * (12 / PI2) ** 2 * 2 / 1.5, rel=1e-9)


def test_degenerate_model_rejected():
    with pytest.raises(ValueError):
        minimise_over_developable(ReducedModel(0.0, Sym2.zero(), 0.0, 1.0, 0.5))


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(0.01, 0.99), st.floats(0, np.pi), st.floats(-5, 5))
def test_minimum_is_below_any_developable_curvature(xx, xy, yy, gamma, angle, lam):
    model = ReducedModel(1 / 12, Sym2(xx, xy, yy), 0.3, 1.0, gamma)
    res = minimise_over_developable(model)
    u = np.array([np.cos(angle), np.sin(angle)])
    trial = lam * np.outer(u, u)
    assert res.energy <= developable_energy(model, trial[0, 0], trial[1, 1], trial[0, 1]) + 1e-12
    for a in res.minimisers:
        assert abs(a.det) <= 1e-10 * max(1.0, a.norm**2)
        assert model.energy_density(a) == pytest.approx(res.energy, rel=1e-9, abs=1e-12)


def test_brute_force_twisted(models):
    value, argmins = brute_force_developable_min(models["twisted"], step=1e-3)
    assert value == pytest.approx(TWISTED_MIN, abs=1e-4)
    assert len(argmins) == 2


def test_brute_force_zero_target():
    model = ReducedModel(1 / 12, Sym2.zero(), 0.4, 1.0, 0.5)
    value, argmins = brute_force_developable_min(model, step=1e-2)
    assert value == pytest.approx(0.2, abs=1e-15)
    assert argmins[0].norm < 1e-12


@pytest.mark.parametrize("texture", ["splay-bend", "twisted", "constant-normal"])
def test_brute_force_agrees_with_closed_form(models, texture):
    step = 2e-3
    model = models[texture]
    closed = minimise_over_developable(model)
    value, argmins = brute_force_developable_min(model, step=step)
    scale = max(abs(model.abar.xx), abs(model.abar.yy), abs(model.abar.xy))
    assert closed.energy <= value + 1e-15
    assert value - closed.energy <= 2 * step**2 * scale
    if texture == "splay-bend":
        assert (argmins[0] - model.abar).norm <= 2 * step


def test_zero_stiffness_endpoints(models):
    cn = models["constant-normal"]
    kbar = minimise_over_developable(cn).family_curvature
    plus, minus = zero_stiffness_family(cn, 0.0)
    assert plus.isclose(Sym2.diag(kbar, 0.0), atol=1e-15)
    assert minus.isclose(Sym2.diag(0.0, kbar), atol=1e-15)
    for s in (kbar / 2, -kbar / 2):
        plus, minus = zero_stiffness_family(cn, s)
        assert plus.isclose(minus, atol=1e-15)
    with pytest.raises(ValueError):
        zero_stiffness_family(cn, 0.2)
    with pytest.raises(ValueError):
        zero_stiffness_family(models["twisted"], 0.0)


def test_zero_stiffness_family_is_flat(models):
    cn = models["constant-normal"]
    kbar = -2 / 9
    reference = minimise_over_developable(cn).energy
    for s in np.linspace(kbar / 2, -kbar / 2, 41):
        for a in zero_stiffness_family(cn, s):
            assert a.trace == pytest.approx(kbar, abs=1e-15)
            assert abs(a.det) < 1e-16
            assert limit_energy(CurvatureField.constant(a), cn) == pytest.approx(reference, rel=1e-12)


def test_zero_stiffness_rotations(models):
    cn = models["constant-normal"]
    kbar = -2 / 9
    for s in np.linspace(kbar / 2, -kbar / 2, 11):
        plus, minus = zero_stiffness_family(cn, s)
        r_plus, r_minus = family_rotation(cn, s)
        for r in (r_plus, r_minus):
            np.testing.assert_allclose(r.T @ r, np.eye(2), atol=1e-14)
            assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-14)
        np.testing.assert_allclose(r_plus @ np.diag([kbar, 0]) @ r_plus.T, plus.to_matrix(), atol=1e-15)
        np.testing.assert_allclose(r_minus @ np.diag([0, kbar]) @ r_minus.T, minus.to_matrix(), atol=1e-15)
