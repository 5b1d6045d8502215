"""Thickness averaging of the limit strain field into a plate energy.

For an in-plane strain field ``b(t)`` on ``(-1/2, 1/2)`` the reduced plate
form is

    Qbar(G) = min_D  int q2(D + t G + b(t)) dt,

a quadratic polynomial in the curvature ``G``.  It always takes the shape
``alpha q2(G - Abar) + beta``; :func:`extract_reduced_model` recovers the
three numbers by probing ``Qbar`` on a basis.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .material_model import DirectorProfile, MaterialParams, StrainProfile, Texture, limit_b_field
from .quadrature import gauss_legendre
from .tensor_core import (
    QuadForm2,
    Sym2,
    Sym2Like,
    as_sym2_array,
    q2,
    q2_matrix,
    sym2_to_vectors,
    vectors_to_sym2,
)

QUAD_NODES = 64
STRUCTURE_TOL = 1e-8
STRUCTURE_WARN_TOL = 1e-5

BField = Callable[[np.ndarray], np.ndarray]


class ReductionError(ValueError):
    """The averaged form is not of target-curvature type."""


class ReductionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ReducedModel:
    """Plate energy density ``alpha q2(G - Abar) + beta`` with its moduli."""

    alpha: float
    abar: Sym2
    beta: float
    mu: float
    gamma: float
    texture: Optional[str] = None
    delta0: Optional[float] = None

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and np.isfinite(self.beta)):
            raise ValueError("alpha and beta must be finite")

    def qbar(self, g: Sym2Like):
        """Reconstructed averaged form at curvature ``g``."""
        return self.alpha * q2(as_sym2_array(g) - self.abar.to_matrix(), self.mu, self.gamma) + self.beta

    def energy_density(self, a: Sym2Like):
        """Plate energy per unit area, ``(alpha q2(A - Abar) + beta) / 2``."""
        return 0.5 * self.qbar(a)

    def to_dict(self) -> dict:
        return {
            "texture": self.texture,
            "alpha": self.alpha,
            "Abar": [self.abar.xx, self.abar.xy, self.abar.yy],
            "beta": self.beta,
            "mu": self.mu,
            "gamma": self.gamma,
            "delta0": self.delta0,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReducedModel":
        xx, xy, yy = data["Abar"]
        return cls(
            float(data["alpha"]),
            Sym2(float(xx), float(xy), float(yy)),
            float(data["beta"]),
            float(data["mu"]),
            float(data["gamma"]),
            data.get("texture"),
            data.get("delta0"),
        )


def _sample(bcheck: BField, t: np.ndarray) -> np.ndarray:
    """Evaluate a user field on all nodes, vectorised when it allows."""
    try:
        out = np.asarray(bcheck(t), dtype=float)
        if out.shape == t.shape + (2, 2):
            return out
    except (TypeError, ValueError):
        pass
    return np.stack([as_sym2_array(bcheck(float(ti))) for ti in t])


def _prepared(bcheck: BField, nodes: int):
    t, w = gauss_legendre(nodes)
    b = _sample(bcheck, t)
    if not np.all(np.isfinite(b)):
        raise ArithmeticError("limit strain field is not finite at a quadrature node")
    return t, w, sym2_to_vectors(b)


def _inner(g_vec: np.ndarray, t, w, b_vec, mu: float, gamma: float):
    """Optimal ``D`` coordinates and the minimum value for one curvature."""
    mq = q2_matrix(mu, gamma)
    shifted = t[:, None] * g_vec[None, :] + b_vec
    lhs = w.sum() * mq
    rhs = -mq @ (w @ shifted)
    d = np.linalg.solve(lhs, rhs)
    x = d[None, :] + shifted
    value = float(w @ np.einsum("qi,ij,qj->q", x, mq, x))
    return d, value


def qbar2(g: Sym2Like, bcheck: BField, params: MaterialParams, nodes: int = QUAD_NODES) -> float:
    """Averaged plate form at curvature ``g`` for the in-plane field ``bcheck``."""
    t, w, b_vec = _prepared(bcheck, nodes)
    g_vec = sym2_to_vectors(as_sym2_array(g))
    return _inner(g_vec, t, w, b_vec, params.mu, params.gamma)[1]


def inner_minimiser_d(g: Sym2Like, bcheck: BField, params: MaterialParams, nodes: int = QUAD_NODES) -> Sym2:
    """In-plane stretch ``D`` attaining the minimum in :func:`qbar2`."""
    t, w, b_vec = _prepared(bcheck, nodes)
    g_vec = sym2_to_vectors(as_sym2_array(g))
    d, _ = _inner(g_vec, t, w, b_vec, params.mu, params.gamma)
    return Sym2.from_matrix(vectors_to_sym2(d))


def extract_reduced_model(
    bcheck: BField,
    params: MaterialParams,
    texture: Optional[str] = None,
    nodes: int = QUAD_NODES,
) -> ReducedModel:
    """Fit ``alpha q2(G - Abar) + beta`` to the averaged form of ``bcheck``.

    Raises :class:`ReductionError` if the quadratic part is not a positive
    multiple of ``q2``.  Small departures (relative misfit between ``1e-8``
    and ``1e-5``) only warn and use the least-squares multiple.
    """
    t, w, b_vec = _prepared(bcheck, nodes)
    mu, gamma = params.mu, params.gamma

    def averaged(g: Sym2) -> float:
        return _inner(g.to_vector(), t, w, b_vec, mu, gamma)[1]

    form = QuadForm2.fit(averaged)
    mq = q2_matrix(mu, gamma)
    alpha = float(np.sum(form.quad * mq) / np.sum(mq * mq))
    misfit = float(np.linalg.norm(form.quad - alpha * mq) / max(np.linalg.norm(form.quad), 1e-300))
    if not alpha > 0 or misfit > STRUCTURE_WARN_TOL:
        raise ReductionError(
            f"not reducible to target-curvature form (alpha={alpha:.3g}, relative misfit={misfit:.3g})"
        )
    if misfit > STRUCTURE_TOL:
        warnings.warn(
            f"averaged form is only approximately isotropic (relative misfit {misfit:.2e}); "
            "using the least-squares multiple of q2",
            ReductionWarning,
            stacklevel=2,
        )
    # stationarity of alpha (x - a).M.(x - a): linear part equals -2 alpha M a
    abar_vec = np.linalg.solve(2.0 * alpha * mq, -form.lin)
    abar = Sym2.from_vector(abar_vec)
    beta = averaged(abar)
    label = texture.value if isinstance(texture, Texture) else texture
    return ReducedModel(alpha, abar, beta, mu, gamma, label, params.delta0)


def reduce_profile(profile: StrainProfile, nodes: int = QUAD_NODES) -> ReducedModel:
    """Reduced plate model of a strain profile (its thickness does not enter)."""
    _, bcheck = limit_b_field(profile)
    model = extract_reduced_model(bcheck, profile.params, profile.texture, nodes)
    if profile.texture is Texture.QUADRATIC:
        # delta0 is a nematic notion; keep the field honest for this texture
        model = ReducedModel(model.alpha, model.abar, model.beta, model.mu, model.gamma, model.texture, None)
    return model


def reduce_texture(texture, params: MaterialParams, **kwargs) -> ReducedModel:
    """Reduced model for a named texture; the limit field does not depend on ``h``."""
    h = kwargs.pop("h", 1e-3 * params.h0)
    return reduce_profile(StrainProfile.build(texture, params, h, **kwargs))


@dataclass(frozen=True)
class MomentTable:
    """Thickness moments of the in-plane nematic tensor."""

    mean: np.ndarray
    first_moment: np.ndarray
    mean_square_norm: float
    first_moment_trace: float

    def to_rows(self) -> list[tuple[str, float]]:
        rows = []
        for name, mat in (("int_M", self.mean), ("int_tM", self.first_moment)):
            for (i, j), value in np.ndenumerate(mat):
                rows.append((f"{name}_{i + 1}{j + 1}", float(value)))
        rows.append(("int_M_norm_sq", self.mean_square_norm))
        rows.append(("int_t_trM", self.first_moment_trace))
        return rows


def moment_integrals(texture, nodes: int = QUAD_NODES) -> MomentTable:
    """Integrals of ``M``, ``t M``, ``|M|^2`` and ``t tr M`` over ``(-1/2, 1/2)``."""
    texture = Texture(texture)
    if texture not in (Texture.SPLAY_BEND, Texture.TWISTED):
        raise ValueError("moment integrals are tabulated for splay-bend and twisted textures")
    t, w = gauss_legendre(nodes)
    n = DirectorProfile(texture)(t)[:, :2]
    m = n[:, :, None] * n[:, None, :]
    return MomentTable(
        mean=np.einsum("q,qij->ij", w, m),
        first_moment=np.einsum("q,qij->ij", w * t, m),
        mean_square_norm=float(w @ np.sum(m * m, axis=(1, 2))),
        first_moment_trace=float((w * t) @ np.trace(m, axis1=1, axis2=2)),
    )


def elementary_integrals(nodes: int = QUAD_NODES) -> dict[str, float]:
    """Scalar director integrals behind the moment tables."""
    t, w = gauss_legendre(nodes)
    f = np.pi / 4.0 + np.pi * t / 2.0
    return {
        "cos^4": float(w @ np.cos(f) ** 4),
        "cos^2": float(w @ np.cos(f) ** 2),
        "sin^2": float(w @ np.sin(f) ** 2),
        "sin(2f)": float(w @ np.sin(2.0 * f)),
        "t cos^2": float(w @ (t * np.cos(f) ** 2)),
        "t sin^2": float(w @ (t * np.sin(f) ** 2)),
        "t sin(2f)": float(w @ (t * np.sin(2.0 * f))),
    }
