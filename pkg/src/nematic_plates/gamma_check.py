"""Thin-sheet energy of explicit 3D deformations built on a bent mid-surface.

The deformation of the slab ``omega x (-1/2, 1/2)`` (thickness rescaled to 1) is

    y_h(x', x3) = Y(phi) + h x3 nu(phi) + h^2 R(phi) p(x3),    phi = (I + h D) x'

with ``Y`` an isometric surface, ``nu`` its normal, ``R = (d1 Y | d2 Y | nu)``
its frame, ``D`` a symmetric in-plane stretch and ``p`` a vector polynomial
through the thickness (one per quadrature column).  In the frame ``R`` the
rescaled gradient ``(d1 y, d2 y, d3 y / h)`` is ``I + H`` with

    H[:2, :2] = h D + (h x3 + h^2 p3) A Phi
    H[2, :2]  = -h^2 p[:2]^T A Phi
    H[:, 2]   = h p'(x3),

``A`` the second fundamental form and ``Phi = I + h D``.  Working with ``H``
keeps the energy accurate down to very small ``h``.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import legendre
from scipy.optimize import minimize

from .material_model import StrainProfile, w0_from_displacement_gradient, w0
from .plate_energy import CurvatureField, limit_energy
from .quadrature import gauss_legendre
from .reduction import reduce_profile
from .surface_gen import IsometrySurface
from .tensor_core import Sym2

DEFAULT_PLANE_NODES = 16
DEFAULT_THICKNESS_NODES = 16
DEFAULT_DEGREE = 8


class InfiniteEnergyError(ArithmeticError):
    """A quadrature point has a non-positive Jacobian."""


@dataclass(frozen=True, eq=False)
class AnsatzDeformation:
    """Bent-surface deformation with optional in-plane stretch and fiber correction.

    ``fiber`` holds Legendre coefficients of ``p(x3)`` in the variable
    ``2 x3``: shape ``(3, n)`` shared by all columns, or ``(columns, 3, n)``
    with one entry per Gauss point of the surface domain.
    """

    surface: IsometrySurface
    h: float
    inplane: Sym2 = field(default_factory=Sym2.zero)
    fiber: Optional[np.ndarray] = None
    plane_nodes: int = DEFAULT_PLANE_NODES

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("thickness h must be positive")
        if self.fiber is not None:
            fiber = np.asarray(self.fiber, dtype=float)
            if fiber.ndim not in (2, 3) or fiber.shape[-2] != 3:
                raise ValueError("fiber coefficients must have shape (3, n) or (columns, 3, n)")
            if fiber.ndim == 3 and fiber.shape[0] != self.plane_nodes**2:
                raise ValueError("per-column fiber coefficients need one entry per plane quadrature point")
            object.__setattr__(self, "fiber", fiber)

    def columns(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.surface.domain.gauss(self.plane_nodes)

    def stretch_matrix(self) -> np.ndarray:
        return np.eye(2) + self.h * self.inplane.to_matrix()

    def _fiber_values(self, x3: np.ndarray):
        """``p(x3)`` and ``p'(x3)`` with shapes ``(..., 3, len(x3))``."""
        if self.fiber is None:
            zero = np.zeros((3, x3.size))
            return zero, zero
        c = self.fiber
        s = 2.0 * x3
        p = legendre.legval(s, np.moveaxis(c, -1, 0))
        dp = 2.0 * legendre.legval(s, np.moveaxis(legendre.legder(c, axis=-1), -1, 0))
        return p, dp

    def mapped_points(self, x1, x2) -> tuple[np.ndarray, np.ndarray]:
        phi = self.stretch_matrix()
        x1, x2 = np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)
        return phi[0, 0] * x1 + phi[0, 1] * x2, phi[1, 0] * x1 + phi[1, 1] * x2

    def local_strain(self, curvature: np.ndarray, x3: np.ndarray, column: Optional[int] = None) -> np.ndarray:
        """``H`` for columns with second fundamental forms ``curvature`` (``(C, 2, 2)``).

        Returns shape ``(C, Q, 3, 3)`` for thickness nodes ``x3`` (``(Q,)``).
        """
        h = self.h
        curvature = np.asarray(curvature, dtype=float)
        phi = self.stretch_matrix()
        a_phi = curvature @ phi
        p, dp = self._fiber_values(x3)
        if p.ndim == 2:
            p = np.broadcast_to(p, (curvature.shape[0],) + p.shape)
            dp = np.broadcast_to(dp, (curvature.shape[0],) + dp.shape)
        elif column is not None:
            p, dp = p[column : column + 1], dp[column : column + 1]
        # p: (C, 3, Q) -> (C, Q, 3)
        p = np.swapaxes(p, -1, -2)
        dp = np.swapaxes(dp, -1, -2)
        ncol, nq = curvature.shape[0], x3.size
        hm = np.zeros((ncol, nq, 3, 3))
        lever = h * x3[None, :] + h * h * p[..., 2]
        hm[..., :2, :2] = h * self.inplane.to_matrix() + lever[..., None, None] * a_phi[:, None]
        hm[..., 2, :2] = -h * h * np.einsum("cqj,cji->cqi", p[..., :2], a_phi)
        hm[..., :, 2] = h * dp
        return hm

    def deformation_gradient(self, x1, x2, x3) -> np.ndarray:
        """Rescaled gradient ``(d1 y, d2 y, d3 y / h)`` in ambient coordinates.

        Points are the product of the flattened ``(x1, x2)`` columns and ``x3``;
        output shape ``(C, Q, 3, 3)``.  Needs a shared (2D) fiber.
        """
        self._require_shared_fiber()
        x1, x2 = np.atleast_1d(x1).astype(float), np.atleast_1d(x2).astype(float)
        x3 = np.atleast_1d(np.asarray(x3, dtype=float))
        u1, u2 = self.mapped_points(x1, x2)
        sample = self.surface.evaluate(u1, u2)
        frame = np.concatenate([sample.gradient, sample.normal[..., None]], axis=-1)
        hm = self.local_strain(sample.second_form, x3)
        return frame[:, None] @ (np.eye(3) + hm)

    def position(self, x1, x2, x3) -> np.ndarray:
        """``y_h`` at matching arrays of points (shared fiber only)."""
        self._require_shared_fiber()
        x1, x2, x3 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x1, x2, x3)))
        u1, u2 = self.mapped_points(x1, x2)
        sample = self.surface.evaluate(u1, u2)
        frame = np.concatenate([sample.gradient, sample.normal[..., None]], axis=-1)
        flat = x3.ravel()
        p, _ = self._fiber_values(flat)
        p = p.T.reshape(x3.shape + (3,))
        correction = np.einsum("...ij,...j->...i", frame, p)
        return sample.y + self.h * x3[..., None] * sample.normal + self.h**2 * correction

    def _require_shared_fiber(self):
        if self.fiber is not None and self.fiber.ndim == 3:
            raise ValueError("per-column fibers are only defined at the quadrature columns")


def _column_curvatures(ansatz: AnsatzDeformation):
    x1, x2, w = ansatz.columns()
    u1, u2 = ansatz.mapped_points(x1, x2)
    return ansatz.surface.second_fundamental_form(u1, u2), x1, x2, w


def _density(profile: StrainProfile, x3: np.ndarray, hm: np.ndarray) -> np.ndarray:
    k = profile.u_inv_minus_identity(x3)
    total = hm + k + hm @ k
    return w0_from_displacement_gradient(total, profile.params)


def energy3d_rescaled(
    ansatz: AnsatzDeformation,
    profile: StrainProfile,
    thickness_nodes: int = DEFAULT_THICKNESS_NODES,
    frame: str = "local",
) -> float:
    """``E^h(y_h) / h^2`` by tensor Gauss quadrature over the rescaled slab.

    ``frame="global"`` assembles the ambient gradient and evaluates the
    energy from it directly (slower, loses digits for tiny ``h``); the
    default works in the surface frame.
    """
    if not np.isclose(profile.h, ansatz.h, rtol=1e-12, atol=0.0):
        raise ValueError(f"profile thickness {profile.h} does not match ansatz thickness {ansatz.h}")
    x3, w3 = gauss_legendre(thickness_nodes)
    curvature, x1, x2, w = _column_curvatures(ansatz)
    if frame == "local":
        dens = _density(profile, x3, ansatz.local_strain(curvature, x3))
    elif frame == "global":
        f = ansatz.deformation_gradient(x1, x2, x3)
        dens = w0(f @ profile.u_inv(x3), profile.params)
    else:
        raise ValueError("frame must be 'local' or 'global'")
    if not np.all(np.isfinite(dens)):
        c, q = np.argwhere(~np.isfinite(dens))[0]
        raise InfiniteEnergyError(
            f"non-positive Jacobian at x1={x1[c]:.6g}, x2={x2[c]:.6g}, x3={x3[q]:.6g}"
        )
    return float(w @ (dens @ w3)) / ansatz.h**2


def _group_columns(curvature: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    scale = max(float(np.max(np.abs(curvature))), 1.0)
    keys = np.round(curvature.reshape(len(curvature), -1) / (1e-12 * scale))
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    return first, inverse.ravel()


def optimise_fiber_correction(
    ansatz: AnsatzDeformation,
    profile: StrainProfile,
    degree: int = DEFAULT_DEGREE,
    thickness_nodes: int = DEFAULT_THICKNESS_NODES,
    optimise_inplane: bool = True,
    sweeps: int = 3,
) -> AnsatzDeformation:
    """Lower the thin-sheet energy over the in-plane stretch and fiber polynomials.

    Columns sharing the same curvature share one polynomial.  With a single
    curvature (every cylinder) stretch and polynomial are optimised jointly;
    otherwise the columns and the stretch are updated in alternation.  The
    returned ansatz never has higher energy than the input.
    """
    x3, w3 = gauss_legendre(thickness_nodes)
    curvature, _, _, w = _column_curvatures(ansatz)
    first, inverse = _group_columns(curvature)
    ngroups = len(first)
    group_weight = np.bincount(inverse, weights=w, minlength=ngroups)
    ncoef = degree + 1
    h2 = ansatz.h**2
    base_energy = energy3d_rescaled(ansatz, profile, thickness_nodes)

    def start_coefficients():
        c = np.zeros((ngroups, 3, ncoef))
        if ansatz.fiber is not None:
            src = ansatz.fiber if ansatz.fiber.ndim == 3 else np.broadcast_to(ansatz.fiber, (len(w),) + ansatz.fiber.shape)
            n = min(ncoef, src.shape[-1])
            c[..., :n] = src[first][..., :n]
        return c

    coeffs = start_coefficients()
    stretch = ansatz.inplane.to_vector()

    def group_energy(stretch_vec, coeff, groups):
        trial = replace(ansatz, inplane=Sym2.from_vector(stretch_vec), fiber=coeff)
        hm = trial.local_strain(curvature[first[groups]], x3)
        dens = _density(profile, x3, hm)
        return (dens @ w3) / h2

    def total(stretch_vec, all_coeffs):
        values = np.concatenate(
            [group_energy(stretch_vec, all_coeffs[g], np.array([g])) for g in range(ngroups)]
        )
        return float(group_weight @ values)

    def solve(fun, x0):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = minimize(fun, x0, method="BFGS", options={"gtol": 1e-11, "maxiter": 2000})
        return res.x if np.isfinite(res.fun) else x0

    if ngroups == 1:
        def joint(v):
            value = group_energy(v[:3] if optimise_inplane else stretch, v[3:].reshape(3, ncoef), np.array([0]))[0]
            return value if np.isfinite(value) else 1e300

        x0 = np.concatenate([stretch, coeffs[0].ravel()])
        x = solve(joint, x0)
        if optimise_inplane:
            stretch = x[:3]
        coeffs[0] = x[3:].reshape(3, ncoef)
    else:
        for _ in range(sweeps):
            for g in range(ngroups):
                def column(v, g=g):
                    value = group_energy(stretch, v.reshape(3, ncoef), np.array([g]))[0]
                    return value if np.isfinite(value) else 1e300

                coeffs[g] = solve(column, coeffs[g].ravel()).reshape(3, ncoef)
            if optimise_inplane:
                def stretch_only(v):
                    value = total(v, coeffs)
                    return value if np.isfinite(value) else 1e300

                stretch = solve(stretch_only, stretch)

    fiber = coeffs[0] if ngroups == 1 else coeffs[inverse]
    result = replace(ansatz, inplane=Sym2.from_vector(stretch), fiber=fiber)
    try:
        improved = energy3d_rescaled(result, profile, thickness_nodes)
    except InfiniteEnergyError:
        return ansatz
    return result if improved <= base_energy else ansatz


@dataclass(frozen=True)
class ScalingReport:
    """Energies ``E^h / h^2`` along a decreasing thickness sweep."""

    h: tuple[float, ...]
    energies: tuple[float, ...]
    reference: float
    extrapolated: float
    raw_exponent: Optional[float]
    gap_exponent: Optional[float]
    monotone_gap: bool
    uncorrected: tuple[float, ...] = ()

    @property
    def gaps(self) -> tuple[float, ...]:
        return tuple(abs(e - self.reference) for e in self.energies)

    def to_dict(self) -> dict:
        return {
            "h": list(self.h),
            "energy_over_h2": list(self.energies),
            "uncorrected_energy_over_h2": list(self.uncorrected),
            "gap": list(self.gaps),
            "reference": self.reference,
            "extrapolated": self.extrapolated,
            "raw_exponent": self.raw_exponent,
            "gap_exponent": self.gap_exponent,
            "monotone_gap": self.monotone_gap,
        }


def _slope(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(x, y, 1)[0])


def scaling_study(
    profile: StrainProfile,
    surface: IsometrySurface,
    hs: Sequence[float],
    degree: int = DEFAULT_DEGREE,
    plane_nodes: int = DEFAULT_PLANE_NODES,
    thickness_nodes: int = DEFAULT_THICKNESS_NODES,
    reference: Optional[float] = None,
    max_workers: Optional[int] = None,
) -> ScalingReport:
    """Optimised ``E^h / h^2`` for each ``h`` and fits of its approach to the plate limit.

    ``reference`` defaults to the plate energy of ``surface`` under the
    reduced model of ``profile``.  The extrapolated limit is the constant of
    a least-squares fit ``L + c1 h + c2 h^2``.
    """
    hs = tuple(float(h) for h in hs)
    if len(hs) < 3:
        raise ValueError("need at least three thickness values")
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise ValueError("thickness values must be strictly decreasing")
    if reference is None:
        model = reduce_profile(profile)
        reference = limit_energy(CurvatureField.from_surface(surface, plane_nodes), model)

    def run(h: float):
        prof = profile.with_thickness(h)
        start = AnsatzDeformation(surface, h, plane_nodes=plane_nodes)
        raw = energy3d_rescaled(start, prof, thickness_nodes)
        best = optimise_fiber_correction(start, prof, degree, thickness_nodes)
        return raw, energy3d_rescaled(best, prof, thickness_nodes)

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(run, hs))
    else:
        results = [run(h) for h in hs]
    raw = tuple(r[0] for r in results)
    energies = tuple(r[1] for r in results)
    if not all(np.isfinite(energies)):
        raise ArithmeticError("non-finite energy in the thickness sweep")

    h_arr, e_arr = np.array(hs), np.array(energies)
    design = np.stack([np.ones_like(h_arr), h_arr, h_arr**2], axis=-1)
    extrapolated = float(np.linalg.lstsq(design, e_arr, rcond=None)[0][0])
    positive = e_arr > 0
    raw_exponent = (
        _slope(np.log(h_arr[positive]), np.log(e_arr[positive] * h_arr[positive] ** 2))
        if positive.sum() >= 2
        else None
    )
    gaps = np.abs(e_arr - reference)
    tiny = 1e-12 * max(abs(reference), 1.0)
    nonzero = gaps > tiny
    gap_exponent = _slope(np.log(h_arr[nonzero]), np.log(gaps[nonzero])) if nonzero.sum() >= 2 else None
    monotone = bool(np.all(np.diff(gaps) <= tiny))
    if not monotone:
        warnings.warn("energy gap to the plate limit is not monotone along the sweep", RuntimeWarning, stacklevel=2)
    return ScalingReport(hs, energies, float(reference), extrapolated, raw_exponent, gap_exponent, monotone, raw)
