import warnings

import numpy as np
import pytest

from nematic_plates.gamma_check import (
    AnsatzDeformation,
    InfiniteEnergyError,
    energy3d_rescaled,
    optimise_fiber_correction,
    scaling_study,
)
from nematic_plates.material_model import MaterialParams, StrainProfile
from nematic_plates.plate_energy import minimise_over_developable
from nematic_plates.reduction import reduce_texture
from nematic_plates.surface_gen import cylinder_x1, plane, rotated_cylinder

from conftest import random_rotation

UNIT = MaterialParams(1.0, 2.0, alpha0=2.0)
FLAT = MaterialParams(1.0, 2.0, alpha0=0.0)
K_SB = -12 / np.pi**2


@pytest.fixture(scope="module")
def sb_optimised():
    prof = StrainProfile.splay_bend(UNIT, 1e-2)
    start = AnsatzDeformation(cylinder_x1(K_SB), 1e-2)
    return prof, start, optimise_fiber_correction(start, prof)


def test_stress_free_plane_has_zero_energy():
    prof = StrainProfile.splay_bend(FLAT, 1e-2)
    assert energy3d_rescaled(AnsatzDeformation(plane(), 1e-2), prof) == 0.0


def test_stress_free_plane_needs_no_correction():
    prof = StrainProfile.twisted(FLAT, 1e-2)
    best = optimise_fiber_correction(AnsatzDeformation(plane(), 1e-2), prof, degree=3)
    assert energy3d_rescaled(best, prof) == 0.0
    assert best.fiber is None or np.max(np.abs(best.fiber)) < 1e-8


def test_zero_correction_is_kirchhoff_love():
    surf = rotated_cylinder(0.6, 1.7)
    ansatz = AnsatzDeformation(surf, 0.05)
    s = surf.evaluate(0.2, -0.1)
    np.testing.assert_allclose(ansatz.position(0.2, -0.1, 0.3), s.y + 0.05 * 0.3 * s.normal, atol=1e-15)


def test_gradient_third_column_is_normal_derivative():
    surf = cylinder_x1(0.9)
    fiber = np.zeros((3, 3))
    fiber[:, 1] = [0.1, -0.2, 0.3]
    ansatz = AnsatzDeformation(surf, 0.05, fiber=fiber)
    p = np.array([0.1, 0.2, 0.25])
    d = 1e-6
    expected = (ansatz.position(p[0], p[1], p[2] + d) - ansatz.position(p[0], p[1], p[2] - d)) / (2 * d) / 0.05
    f = ansatz.deformation_gradient(np.array([p[0]]), np.array([p[1]]), np.array([p[2]]))
    np.testing.assert_allclose(f.reshape(3, 3)[:, 2], expected, atol=1e-8)


def test_local_and_global_frames_agree(sb_optimised):
    prof, _, best = sb_optimised
    local = energy3d_rescaled(best, prof)
    assert energy3d_rescaled(best, prof, frame="global") == pytest.approx(local, rel=1e-8)


def test_thickness_quadrature_converged(sb_optimised):
    prof, _, best = sb_optimised
    e16 = energy3d_rescaled(best, prof, thickness_nodes=16)
    assert energy3d_rescaled(best, prof, thickness_nodes=32) == pytest.approx(e16, rel=1e-8)


def test_correction_lowers_energy(sb_optimised):
    prof, start, best = sb_optimised
    raw = energy3d_rescaled(start, prof)
    assert energy3d_rescaled(best, prof) < 0.99 * raw


def test_frame_indifference(sb_optimised, rng):
    prof, _, best = sb_optimised
    moved_surface = best.surface.rigidly_moved(random_rotation(rng), rng.normal(size=3))
    moved = AnsatzDeformation(moved_surface, best.h, best.inplane, best.fiber, best.plane_nodes)
    for frame in ("local", "global"):
        assert energy3d_rescaled(moved, prof, frame=frame) == pytest.approx(
            energy3d_rescaled(best, prof, frame=frame), rel=1e-10
        )


def test_energy_bounded_below_by_plate_limit(sb_optimised):
    prof, _, best = sb_optimised
    model = reduce_texture("splay-bend", UNIT)
    assert energy3d_rescaled(best, prof) >= 0.85 * minimise_over_developable(model).energy


def test_interpenetration_reported():
    prof = StrainProfile.splay_bend(UNIT, 0.1)
    with pytest.raises(InfiniteEnergyError, match="x3="):
        energy3d_rescaled(AnsatzDeformation(cylinder_x1(40.0), 0.1), prof)


def test_thickness_mismatch_rejected():
    prof = StrainProfile.splay_bend(UNIT, 0.1)
    with pytest.raises(ValueError):
        energy3d_rescaled(AnsatzDeformation(plane(), 0.2), prof)


def test_fiber_shape_validated():
    with pytest.raises(ValueError):
        AnsatzDeformation(plane(), 0.1, fiber=np.zeros((2, 3)))
    with pytest.raises(ValueError):
        AnsatzDeformation(plane(), 0.1, fiber=np.zeros((5, 3, 2)))


def test_scaling_study_flat_plane():
    prof = StrainProfile.splay_bend(FLAT, 1e-2)
    rep = scaling_study(prof, plane(), [1e-2, 5e-3, 2.5e-3], degree=2)
    assert rep.energies == (0.0, 0.0, 0.0)
    assert rep.gaps == (0.0, 0.0, 0.0)
    assert rep.reference == 0.0


def test_scaling_study_validates_thicknesses():
    prof = StrainProfile.splay_bend(UNIT, 1e-2)
    with pytest.raises(ValueError):
        scaling_study(prof, plane(), [1e-2, 5e-3])
    with pytest.raises(ValueError):
        scaling_study(prof, plane(), [1e-2, 5e-3, 5e-3])


def test_scaling_study_flags_non_monotone_gap():
    prof = StrainProfile.splay_bend(UNIT, 1e-2)
    with pytest.warns(RuntimeWarning, match="not monotone"):
        rep = scaling_study(prof, cylinder_x1(K_SB), [4e-2, 2e-2, 1e-2], degree=2, reference=0.0)
    assert not rep.monotone_gap


@pytest.mark.slow
def test_twisted_study_threads_match_serial(monkeypatch):
    prof = StrainProfile.twisted(UNIT, 1e-2)
    surf = cylinder_x1(-12 / (np.pi**2 * 1.5))
    hs = [2e-2, 1e-2, 5e-3]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        serial = scaling_study(prof, surf, hs, degree=4)
        threaded = scaling_study(prof, surf, hs, degree=4, max_workers=3)
    assert serial.energies == threaded.energies
    limit = minimise_over_developable(reduce_texture("twisted", UNIT)).energy
    assert serial.reference == pytest.approx(limit, rel=1e-12)
    assert all(e >= 0.85 * limit for e in serial.energies)
