"""Curvature of thickness-dependent metrics and the compatible quadratic cases.

A metric here is a field ``G(t)`` of SPD 3x3 matrices depending only on the
thickness coordinate ``t`` (the third coordinate, index 2), on the slab
``-h/2 <= t <= h/2``.  Index layout for Christoffel symbols is
``gamma[..., i, j, k] = Gamma_ij^k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .material_model import QuadraticStrainSpec, StrainProfile, Texture

MatrixField = Callable[[np.ndarray], np.ndarray]

THICKNESS_INDEX = 2
DEFAULT_GRID = 41
COMPAT_RTOL = 1e-7


class Verdict(str, Enum):
    COMPATIBLE = "Compatible"
    INCOMPATIBLE = "Incompatible"


class QuadraticCase(str, Enum):
    CASE_I = "CaseI"
    CASE_II = "CaseII"
    CASE_III = "CaseIII"
    CASE_IV = "CaseIV"
    INCOMPATIBLE = "Incompatible"

    @property
    def compatible(self) -> bool:
        return self is not QuadraticCase.INCOMPATIBLE


@dataclass(frozen=True)
class MetricProfile:
    """Metric depending on thickness only, with optional analytic derivatives.

    Evaluators take an array of ``t`` values and return ``(..., 3, 3)``.
    Missing derivatives fall back to central differences with step
    ``fd_step`` (default ``1e-5 h``) for the first derivative and a coarser
    step for the second.
    """

    g: MatrixField
    h: float
    g_dot: Optional[MatrixField] = None
    g_ddot: Optional[MatrixField] = None
    fd_step: Optional[float] = None
    label: str = "custom"

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("thickness h must be positive")

    @property
    def step(self) -> float:
        return self.fd_step if self.fd_step is not None else 1e-5 * self.h

    def metric(self, t) -> np.ndarray:
        return np.asarray(self.g(np.asarray(t, dtype=float)), dtype=float)

    def metric_dot(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.g_dot is not None:
            return np.asarray(self.g_dot(t), dtype=float)
        d = self.step
        return (self.metric(t + d) - self.metric(t - d)) / (2.0 * d)

    def metric_ddot(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.g_ddot is not None:
            return np.asarray(self.g_ddot(t), dtype=float)
        if self.g_dot is not None:
            d = self.step
            return (self.g_dot(t + d) - self.g_dot(t - d)) / (2.0 * d)
        # second differences lose more digits; widen the step
        d = 100.0 * self.step
        return (self.metric(t + d) - 2.0 * self.metric(t) + self.metric(t - d)) / (d * d)

    def grid(self, n: int = DEFAULT_GRID) -> np.ndarray:
        return np.linspace(-self.h / 2.0, self.h / 2.0, n)

    def check_spd(self, t) -> np.ndarray:
        g = self.metric(t)
        eig = np.linalg.eigvalsh(0.5 * (g + np.swapaxes(g, -1, -2)))
        if np.any(eig <= 0.0) or not np.all(np.isfinite(eig)):
            raise ValueError(f"metric '{self.label}' is not positive definite on the sample grid")
        return eig

    # constructors -----------------------------------------------------------

    @classmethod
    def nematic(cls, texture, a: float, h: float) -> "MetricProfile":
        """``G = I + (a - 1) N N`` for the splay-bend or twisted director.

        This equals the spontaneous metric up to the constant factor
        ``a^(-1/3)``, which changes neither Christoffel symbols nor Ricci.
        """
        texture = Texture(texture)
        if texture not in (Texture.SPLAY_BEND, Texture.TWISTED):
            raise ValueError("nematic metric needs the splay-bend or twisted texture")
        if not a > 0:
            raise ValueError("a must be positive")
        rate = np.pi / (2.0 * h)
        second = 2 if texture is Texture.SPLAY_BEND else 1

        def director(t):
            f = np.pi / 4.0 + rate * t
            n = np.zeros(np.shape(t) + (3,))
            n[..., 0] = np.cos(f)
            n[..., second] = np.sin(f)
            perp = np.zeros_like(n)
            perp[..., 0] = -np.sin(f)
            perp[..., second] = np.cos(f)
            return n, perp

        def outer(u, v):
            return u[..., :, None] * v[..., None, :]

        def g(t):
            n, _ = director(t)
            return np.eye(3) + (a - 1.0) * outer(n, n)

        def g_dot(t):
            n, perp = director(t)
            return (a - 1.0) * rate * (outer(perp, n) + outer(n, perp))

        def g_ddot(t):
            n, perp = director(t)
            return 2.0 * (a - 1.0) * rate**2 * (outer(perp, perp) - outer(n, n))

        return cls(g, h, g_dot, g_ddot, label=f"{texture.value} a={a:g}")

    @classmethod
    def quadratic(cls, spec: QuadraticStrainSpec, h: float) -> "MetricProfile":
        a = np.asarray(spec.a_diag)
        b = np.asarray(spec.b_diag)
        spec.check_spd(h)

        def diag(d):
            return d[..., :, None] * np.eye(3)

        def g(t):
            return spec(t)

        def g_dot(t):
            return diag(a + 2.0 * np.asarray(t)[..., None] * b)

        def g_ddot(t):
            return diag(np.broadcast_to(2.0 * b, np.shape(t) + (3,)))

        return cls(g, h, g_dot, g_ddot, label="quadratic")

    @classmethod
    def from_strain_profile(cls, profile: StrainProfile) -> "MetricProfile":
        """Exact spontaneous metric of a profile in physical thickness."""
        if profile.texture is Texture.QUADRATIC:
            return cls.quadratic(profile.quadratic, profile.h)
        if profile.texture in (Texture.SPLAY_BEND, Texture.TWISTED):
            a = profile.params.a_h(profile.h)
            base = cls.nematic(profile.texture, a, profile.h)
            c = a ** (-1.0 / 3.0)
            return cls(
                lambda t: c * base.g(t),
                profile.h,
                lambda t: c * base.g_dot(t),
                lambda t: c * base.g_ddot(t),
                label=base.label,
            )
        # constant director, order linear in t
        n = np.asarray(profile.normal, dtype=float)
        nn = np.outer(n, n)
        rate = profile.params.alpha0 / profile.params.h0

        def coeffs(t, order):
            a = 1.0 + rate * np.asarray(t)[..., None, None]
            p_along = [2.0 / 3.0, -1.0 / 3.0, -4.0 / 3.0][order]
            p_across = [-1.0 / 3.0, -4.0 / 3.0, -7.0 / 3.0][order]
            f_along = [1.0, 2.0 / 3.0, -2.0 / 9.0][order]
            f_across = [1.0, -1.0 / 3.0, 4.0 / 9.0][order]
            scale = rate**order
            return scale * (f_along * a**p_along * nn + f_across * a**p_across * (np.eye(3) - nn))

        return cls(
            lambda t: coeffs(t, 0),
            profile.h,
            lambda t: coeffs(t, 1),
            lambda t: coeffs(t, 2),
            label="constant-normal",
        )


# ---------------------------------------------------------------------------
# Christoffel symbols and curvature


def _lower_symbols(gdot: np.ndarray) -> np.ndarray:
    """``Gamma_ijl`` when only the thickness derivative is nonzero."""
    lower = np.zeros(gdot.shape[:-2] + (3, 3, 3))
    t = THICKNESS_INDEX
    lower[..., t, :, :] += 0.5 * gdot
    lower[..., :, t, :] += 0.5 * gdot
    lower[..., :, :, t] -= 0.5 * gdot
    return lower


def _symbols_and_derivative(metric: MetricProfile, t: np.ndarray):
    g = metric.metric(t)
    gdot = metric.metric_dot(t)
    gddot = metric.metric_ddot(t)
    ginv = np.linalg.inv(g)
    ginv_dot = -ginv @ gdot @ ginv
    lower = _lower_symbols(gdot)
    lower_dot = _lower_symbols(gddot)
    gamma = np.einsum("...kl,...ijl->...ijk", ginv, lower)
    gamma_dot = np.einsum("...kl,...ijl->...ijk", ginv_dot, lower) + np.einsum(
        "...kl,...ijl->...ijk", ginv, lower_dot
    )
    return g, gdot, gamma, gamma_dot


def christoffel(metric: MetricProfile, t) -> np.ndarray:
    """Christoffel symbols of the second kind, ``out[..., i, j, k] = Gamma_ij^k``."""
    t = np.asarray(t, dtype=float)
    metric.check_spd(np.atleast_1d(t))
    return _symbols_and_derivative(metric, t)[2]


def ricci_tensor(metric: MetricProfile, t) -> np.ndarray:
    """Ricci tensor ``R_ij`` at the given thickness values."""
    t = np.asarray(t, dtype=float)
    metric.check_spd(np.atleast_1d(t))
    _, _, gamma, gamma_dot = _symbols_and_derivative(metric, t)
    return _ricci_from_symbols(gamma, gamma_dot)


def _ricci_from_symbols(gamma: np.ndarray, gamma_dot: np.ndarray) -> np.ndarray:
    ts = THICKNESS_INDEX
    # d_l Gamma_ij^l: only l = t contributes
    term1 = gamma_dot[..., :, :, ts]
    # d_j Gamma_il^l: only j = t contributes
    contracted_dot = np.einsum("...ill->...i", gamma_dot)
    term2 = np.zeros_like(term1)
    term2[..., :, ts] = contracted_dot
    trace_gamma = np.einsum("...lkl->...k", gamma)
    term3 = np.einsum("...k,...ijk->...ij", trace_gamma, gamma)
    term4 = np.einsum("...jkl,...ilk->...ij", gamma, gamma)
    return term1 - term2 + term3 - term4


def riemann_tensor(metric: MetricProfile, t) -> np.ndarray:
    """Fully covariant curvature tensor ``R_lijk = G_lm R^m_ijk``.

    ``R^l_ijk = d_j Gamma_ik^l - d_k Gamma_ij^l + Gamma_js^l Gamma_ik^s - Gamma_ks^l Gamma_ij^s``;
    contracting ``l`` with ``j`` gives the Ricci tensor used by :func:`ricci`.
    """
    t = np.asarray(t, dtype=float)
    metric.check_spd(np.atleast_1d(t))
    g, _, gamma, gamma_dot = _symbols_and_derivative(metric, t)
    ts = THICKNESS_INDEX
    # derivative of Gamma_ik^l in direction j, laid out [..., j, i, k, l]
    dgamma = np.zeros(gamma.shape[:-3] + (3, 3, 3, 3))
    dgamma[..., ts, :, :, :] = gamma_dot
    upper = (
        np.einsum("...jikl->...lijk", dgamma)
        - np.einsum("...kijl->...lijk", dgamma)
        + np.einsum("...jsl,...iks->...lijk", gamma, gamma)
        - np.einsum("...ksl,...ijs->...lijk", gamma, gamma)
    )
    return np.einsum("...lm,...mijk->...lijk", g, upper)


@dataclass(frozen=True)
class RicciReport:
    t: np.ndarray
    christoffel: np.ndarray
    ricci: np.ndarray
    max_abs: float
    scale: float
    tolerance: float
    verdict: Verdict
    symmetry_defect: float

    def component(self, i: int, j: int) -> np.ndarray:
        return self.ricci[:, i, j]


def ricci(metric: MetricProfile, n: int = DEFAULT_GRID, rtol: float = COMPAT_RTOL) -> RicciReport:
    """Ricci tensor on an equispaced thickness grid and the compatibility verdict.

    The metric is declared compatible when ``max |R_ij| <= rtol * scale`` with
    ``scale = max |G'|^2 / min eig G`` over the grid.
    """
    t = metric.grid(n)
    eig = metric.check_spd(t)
    g, gdot, gamma, gamma_dot = _symbols_and_derivative(metric, t)
    r = _ricci_from_symbols(gamma, gamma_dot)
    max_abs = float(np.max(np.abs(r)))
    scale = float(np.max(np.sum(gdot * gdot, axis=(-2, -1))) / np.min(eig))
    tol = rtol * scale
    verdict = Verdict.COMPATIBLE if max_abs <= tol else Verdict.INCOMPATIBLE
    defect = float(np.max(np.abs(r - np.swapaxes(r, -1, -2))))
    return RicciReport(t, gamma, r, max_abs, scale, tol, verdict, defect)


def classify_quadratic(spec: QuadraticStrainSpec, tol: float = 1e-12) -> QuadraticCase:
    """Match ``G = I + t A + t^2 Bq`` against the four compatible diagonal families."""
    a11, a22, att = spec.a_diag
    b11, b22, btt = spec.b_diag

    def zero(*values):
        return all(abs(v) <= tol for v in values)

    if zero(a11, a22, att, b11, b22, btt):
        return QuadraticCase.CASE_I
    if zero(a22, att, b22, btt) and abs(b11 - a11 * a11 / 4.0) <= tol and not zero(b11):
        return QuadraticCase.CASE_II
    if zero(a11, att, b11, btt) and abs(b22 - a22 * a22 / 4.0) <= tol and not zero(b22):
        return QuadraticCase.CASE_III
    if zero(a11, a22, b11, b22) and not zero(att * att + btt * btt):
        return QuadraticCase.CASE_IV
    return QuadraticCase.INCOMPATIBLE


# ---------------------------------------------------------------------------
# explicit realisation of the bent-fiber case


@dataclass(frozen=True)
class TubeDeformation:
    """``v(s, z2, t) = c(s) + t n(s) + z2 e2`` around a planar circle of curvature ``k``.

    Its pulled-back metric is ``diag((1 - k t)^2, 1, 1)``.
    """

    k: float
    h: float
    s_range: tuple[float, float] = (-1.0, 1.0)
    z2_range: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self):
        if self.k == 0:
            raise ValueError("k = 0 gives the identity map; use it directly")
        if not abs(self.k) * self.h / 2.0 < 1.0:
            raise ValueError("need |k| h / 2 < 1 for a positive-definite metric")

    def _frame(self, s):
        ks = self.k * np.asarray(s, dtype=float)
        zero = np.zeros_like(ks)
        tangent = np.stack([np.cos(ks), zero, -np.sin(ks)], axis=-1)
        normal = np.stack([-np.sin(ks), zero, -np.cos(ks)], axis=-1)
        return ks, tangent, normal

    def __call__(self, s, z2, t) -> np.ndarray:
        s, z2, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (s, z2, t)))
        ks, _, normal = self._frame(s)
        curve = np.stack([np.sin(ks) / self.k, np.zeros_like(ks), (np.cos(ks) - 1.0) / self.k], axis=-1)
        return curve + t[..., None] * normal + z2[..., None] * np.array([0.0, 1.0, 0.0])

    def gradient(self, s, z2, t) -> np.ndarray:
        """Columns ``(dv/ds, dv/dz2, dv/dt)``."""
        s, z2, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (s, z2, t)))
        _, tangent, normal = self._frame(s)
        e2 = np.broadcast_to(np.array([0.0, 1.0, 0.0]), tangent.shape)
        return np.stack([(1.0 - self.k * t)[..., None] * tangent, e2, normal], axis=-1)

    def target_metric(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        d = np.stack([(1.0 - self.k * t) ** 2, np.ones_like(t), np.ones_like(t)], axis=-1)
        return d[..., :, None] * np.eye(3)

    def quadratic_spec(self) -> QuadraticStrainSpec:
        return QuadraticStrainSpec((-2.0 * self.k, 0.0, 0.0), (self.k**2, 0.0, 0.0))

    def residual(self, n: int = 21) -> float:
        s = np.linspace(*self.s_range, n)
        z2 = np.linspace(*self.z2_range, n)
        t = np.linspace(-self.h / 2.0, self.h / 2.0, n)
        s, z2, t = np.meshgrid(s, z2, t, indexing="ij")
        grad = self.gradient(s, z2, t)
        pulled = np.swapaxes(grad, -1, -2) @ grad
        return float(np.max(np.abs(pulled - self.target_metric(t))))


def tube_deformation(
    k: float,
    h: float,
    s_range: tuple[float, float] = (-1.0, 1.0),
    z2_range: tuple[float, float] = (-1.0, 1.0),
    n: int = 21,
) -> tuple[TubeDeformation, float]:
    """Build the tube map and its metric residual on an ``n^3`` grid."""
    tube = TubeDeformation(k, h, tuple(s_range), tuple(z2_range))
    return tube, tube.residual(n)
