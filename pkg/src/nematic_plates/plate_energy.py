"""Plate energies on curvature fields and their minimisation over developable shapes.

A surface made by isometrically bending a flat sheet has a second
fundamental form ``A`` with ``det A = 0``.  Every such ``A`` is ``lam u u^T``
for a unit vector ``u``, which turns the constrained problem into a scan over
directions with a closed-form optimal ``lam``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .reduction import ReducedModel
from .tensor_core import Sym2, as_sym2_array, q2

EIGEN_RTOL = 1e-10


class Multiplicity(str, Enum):
    UNIQUE = "Unique"
    BISTABLE = "Bistable"
    CONTINUOUS_FAMILY = "ContinuousFamily"


@dataclass(frozen=True)
class CurvatureField:
    """Second fundamental form over a domain of area ``area``.

    Either ``values`` holds a single constant tensor (shape ``(2, 2)``) or
    samples of shape ``(N, 2, 2)`` with quadrature ``weights`` summing to
    ``area``.
    """

    values: np.ndarray
    area: float
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape[-2:] != (2, 2) or values.ndim not in (2, 3):
            raise ValueError("curvature values must have shape (2, 2) or (N, 2, 2)")
        if not np.all(np.isfinite(values)):
            raise ValueError("curvature field contains non-finite entries")
        if not self.area > 0:
            raise ValueError("domain area must be positive")
        object.__setattr__(self, "values", values)
        if values.ndim == 3:
            if self.weights is None:
                raise ValueError("sampled fields need quadrature weights")
            weights = np.asarray(self.weights, dtype=float)
            if weights.shape != values.shape[:1]:
                raise ValueError("one weight per sample is required")
            object.__setattr__(self, "weights", weights)

    @classmethod
    def constant(cls, a, area: float = 1.0) -> "CurvatureField":
        return cls(as_sym2_array(a), area)

    @classmethod
    def from_surface(cls, surface, n: int = 16) -> "CurvatureField":
        """Sample a surface's second fundamental form at Gauss points of its domain."""
        x1, x2, w = surface.domain.gauss(n)
        return cls(surface.second_fundamental_form(x1, x2), surface.domain.area, w)

    @property
    def is_constant(self) -> bool:
        return self.values.ndim == 2

    def max_abs_det(self) -> float:
        return float(np.max(np.abs(np.linalg.det(self.values))))


def limit_energy(field: CurvatureField, model: ReducedModel) -> float:
    """Plate energy ``1/2 int alpha q2(A - Abar) dx + beta |omega| / 2`` (no load)."""
    if model.alpha <= 0:
        raise ValueError("degenerate model: alpha must be positive")
    shifted = field.values - model.abar.to_matrix()
    density = 0.5 * model.alpha * q2(shifted, model.mu, model.gamma)
    if field.is_constant:
        bending = field.area * density
    else:
        bending = float(field.weights @ density)
    return float(bending + 0.5 * model.beta * field.area)


def physical_prefactor(h0: float) -> float:
    """Length factor turning the per-``h0`` energy into physical units (``h0^3``)."""
    return float(h0) ** 3


@dataclass(frozen=True)
class MinimiserSet:
    """Minimal energy per unit area over developable curvatures and the minimisers.

    ``family_curvature`` is the nonzero principal curvature shared by all
    members of a continuous family (``None`` otherwise).
    """

    minimisers: tuple[Sym2, ...]
    energy: float
    multiplicity: Multiplicity
    family_curvature: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "multiplicity": self.multiplicity.value,
            "energy_per_area": self.energy,
            "minimisers": [[a.xx, a.xy, a.yy] for a in self.minimisers],
            "family_curvature": self.family_curvature,
        }


def _check_model(model: ReducedModel) -> None:
    if not model.alpha > 0:
        raise ValueError("degenerate model: alpha must be positive")


def _rank_one_optimum(model: ReducedModel, u: np.ndarray) -> tuple[float, float]:
    """Best ``lam`` for ``A = lam u u^T`` and the resulting energy per area.

    With ``Q(X) = |X|^2 + gamma tr^2 X``, ``Q(lam uu^T - Abar)`` is
    ``lam^2 (1 + gamma) - 2 lam p + Q(Abar)`` where ``p = u.Abar.u + gamma tr Abar``.
    """
    abar = model.abar.to_matrix()
    g = model.gamma
    p = float(u @ abar @ u + g * np.trace(abar))
    lam = p / (1.0 + g)
    q_target = float(np.sum(abar * abar) + g * np.trace(abar) ** 2)
    # the reduced value is nonnegative; clip rounding below zero
    q_min = max(q_target - p * p / (1.0 + g), 0.0)
    energy = 0.5 * model.alpha * 2.0 * model.mu * q_min + 0.5 * model.beta
    return lam, energy


def minimise_over_developable(model: ReducedModel) -> MinimiserSet:
    """Minimise ``(alpha q2(A - Abar) + beta) / 2`` over ``det A = 0``.

    The optimum direction is an eigenvector of ``Abar`` maximising
    ``|u.Abar.u + gamma tr Abar|``.  Equal eigenvalues give a rotation-invariant
    family, equal scores for distinct eigenvalues give two minimisers.
    """
    _check_model(model)
    vals, vecs = model.abar.eigh()
    scale = max(float(np.max(np.abs(vals))), np.finfo(float).tiny)
    if vals[1] - vals[0] <= EIGEN_RTOL * scale:
        u = np.array([1.0, 0.0])
        lam, energy = _rank_one_optimum(model, u)
        if abs(lam) <= EIGEN_RTOL * scale:
            return MinimiserSet((Sym2.zero(),), energy, Multiplicity.UNIQUE)
        members = (Sym2.diag(lam, 0.0), Sym2.diag(0.0, lam))
        return MinimiserSet(members, energy, Multiplicity.CONTINUOUS_FAMILY, family_curvature=lam)
    options = [_rank_one_optimum(model, vecs[:, i]) + (vecs[:, i],) for i in range(2)]
    scores = [abs(lam) for lam, _, _ in options]
    if abs(scores[0] - scores[1]) <= EIGEN_RTOL * scale:
        members = tuple(Sym2.from_matrix(lam * np.outer(u, u)) for lam, _, u in options)
        return MinimiserSet(members, min(e for _, e, _ in options), Multiplicity.BISTABLE)
    lam, energy, u = options[int(np.argmax(scores))]
    return MinimiserSet((Sym2.from_matrix(lam * np.outer(u, u)),), energy, Multiplicity.UNIQUE)


def developable_energy(model: ReducedModel, xi, eta, zeta) -> np.ndarray:
    """Energy per area at ``A = [[xi, zeta], [zeta, eta]]`` (vectorised)."""
    a = model.abar
    g = model.gamma
    d11, d22, d12 = xi - a.xx, eta - a.yy, zeta - a.xy
    q = d11 * d11 + d22 * d22 + 2.0 * d12 * d12 + g * (d11 + d22) ** 2
    return 0.5 * model.alpha * 2.0 * model.mu * q + 0.5 * model.beta


def brute_force_developable_min(
    model: ReducedModel, step: float = 1e-3, extent: Optional[float] = None, chunk: int = 512
) -> tuple[float, list[Sym2]]:
    """Grid-search oracle for :func:`minimise_over_developable`.

    Scans ``xi, zeta`` on a uniform grid with ``eta = zeta^2 / xi``, the line
    ``xi = 0`` (where ``zeta = 0``), and for diagonal trace-free targets the
    closed-form branches ``xi(zeta), eta(zeta)`` of the Lagrange conditions.
    Returns the smallest energy per area and one grid argmin per basin
    (points within a grid-resolution energy band of the minimum, clustered).
    """
    _check_model(model)
    a = model.abar
    curvature_scale = max(abs(a.xx), abs(a.yy), abs(a.xy), step)
    if extent is None:
        extent = 1.5 * curvature_scale + 10 * step
    # symmetric grid that contains 0
    half_count = int(np.ceil(extent / step))
    axis = step * np.arange(-half_count, half_count + 1)
    band = 2.0 * model.alpha * model.mu * (1.0 + model.gamma) * step**2
    candidates: list[tuple[float, float, float, float]] = []

    def consider(xi, eta, zeta):
        e = developable_energy(model, xi, eta, zeta)
        local = float(np.min(e))
        keep = np.flatnonzero((e <= local + band).ravel())
        for j in keep[np.argsort(e.ravel()[keep])][:256]:
            candidates.append((float(e.flat[j]), float(xi.flat[j]), float(eta.flat[j]), float(zeta.flat[j])))

    # xi = 0 forces zeta = 0
    consider(np.zeros_like(axis), axis, np.zeros_like(axis))
    xi_axis = axis[axis != 0.0]
    for start in range(0, xi_axis.size, chunk):
        xi = xi_axis[start : start + chunk, None]
        xi_b, zeta_b = np.broadcast_arrays(xi, axis[None, :])
        consider(xi_b, zeta_b**2 / xi_b, zeta_b)

    if a.xy == 0.0 and abs(a.xx + a.yy) <= EIGEN_RTOL * curvature_scale:
        c = a.xx / (1.0 + model.gamma)
        root = np.sqrt(c * c + 4.0 * axis * axis)
        for sign in (1.0, -1.0):
            xi = 0.5 * c + sign * 0.5 * root
            consider(xi, xi - c, axis)

    candidates.sort()
    best = candidates[0][0]
    radius = max(10 * step, 0.05 * curvature_scale)
    argmins: list[Sym2] = []
    for e, xi, eta, zeta in candidates:
        if e > best + band:
            break
        point = Sym2(xi, zeta, eta)
        if all((point - q).norm > radius for q in argmins):
            argmins.append(point)
    return best, argmins


def zero_stiffness_family(model: ReducedModel, s: float) -> tuple[Sym2, Sym2]:
    """Members ``(A_plus(s), A_minus(s))`` of the equal-energy family of an isotropic target.

    Both have eigenvalues ``{kbar, 0}`` and off-diagonal entry ``s``, which
    must satisfy ``|s| <= |kbar| / 2``.  At ``s = 0`` they are ``diag(kbar, 0)``
    and ``diag(0, kbar)``.
    """
    result = minimise_over_developable(model)
    if result.multiplicity is not Multiplicity.CONTINUOUS_FAMILY:
        raise ValueError("model has no continuous family of minimisers (target is not isotropic)")
    kbar = result.family_curvature
    half = 0.5 * abs(kbar)
    if abs(s) > half * (1.0 + 1e-12):
        raise ValueError(f"|s| must not exceed |kbar|/2 = {half:.6g}")
    s = float(np.clip(s, -half, half))
    # signed root keeps A_plus(0) = diag(kbar, 0) for either sign of kbar
    # factored form is exact at the endpoints s = +-kbar/2
    root = np.sign(kbar) * np.sqrt(max((abs(kbar) - 2.0 * abs(s)) * (abs(kbar) + 2.0 * abs(s)), 0.0))
    plus = Sym2(0.5 * (kbar + root), s, 0.5 * (kbar - root))
    minus = Sym2(0.5 * (kbar - root), s, 0.5 * (kbar + root))
    return plus, minus


def family_rotation(model: ReducedModel, s: float) -> tuple[np.ndarray, np.ndarray]:
    """Rotations with ``A_plus(s) = R_plus diag(kbar, 0) R_plus^T`` and ``A_minus(s) = R_minus diag(0, kbar) R_minus^T``."""
    plus, _ = zero_stiffness_family(model, s)
    kbar = plus.trace
    root = plus.xx - plus.yy
    c = np.sqrt((kbar + root) / (2.0 * kbar))
    off = 2.0 * plus.xy / (kbar + root)
    r_plus = c * np.array([[1.0, -off], [off, 1.0]])
    r_minus = c * np.array([[1.0, off], [-off, 1.0]])
    return r_plus, r_minus
