"""Constitutive ingredients for nematic elastomer sheets.

Lengths are physical (``z3``, ``h``, ``h0``) unless a function says it takes
the rescaled thickness coordinate ``x3 = z3 / h`` in ``(-1/2, 1/2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .tensor_core import Sym2, gamma_from_moduli, inv_sqrtm_spd, sqrtm_spd

VolumetricEnergy = Callable[[np.ndarray], np.ndarray]

E1, E2, E3 = np.eye(3)
_SPD_SAMPLES = 101


class Texture(str, Enum):
    SPLAY_BEND = "splay-bend"
    TWISTED = "twisted"
    CONSTANT_NORMAL = "constant-normal"
    QUADRATIC = "quadratic"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class MaterialParams:
    """Elastic moduli and the nematic order-change magnitude.

    ``alpha0 / h0`` sets how strongly the order parameter grows with sheet
    thickness: a sheet of thickness ``h`` has ``a_h = 1 + alpha0 h / h0``.
    """

    mu: float
    kappa: float
    alpha0: float = 1.0
    h0: float = 1.0

    def __post_init__(self):
        for name in ("mu", "kappa", "h0"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be positive and finite, got {value}")
        if not np.isfinite(self.alpha0) or self.alpha0 < 0:
            raise ValueError(f"alpha0 must be non-negative and finite, got {self.alpha0}")

    @property
    def gamma(self) -> float:
        return gamma_from_moduli(self.mu, self.kappa)

    @property
    def delta0(self) -> float:
        return self.alpha0 / (2.0 * self.h0)

    def a_h(self, h: float) -> float:
        return 1.0 + self.alpha0 * h / self.h0


# ---------------------------------------------------------------------------
# energy densities


def _psi(e: np.ndarray) -> np.ndarray:
    """``e - log(1 + e)`` without cancellation; ``inf`` for ``e <= -1``."""
    e = np.asarray(e, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = e - np.log1p(np.where(e > -1.0, e, 0.0))
    series = e * e * (0.5 - e * (1.0 / 3.0 - e * (0.25 - e * (0.2 - e / 6.0))))
    out = np.where(np.abs(e) < 1e-3, series, direct)
    return np.where(e > -1.0, out, np.inf)


def w_vol(t, kappa: float):
    """Default volumetric energy ``kappa (t - 1 - log t)``; ``inf`` for ``t <= 0``."""
    t = np.asarray(t, dtype=float)
    near = kappa * _psi(t - 1.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        # log t directly keeps full precision for t close to 0
        far = kappa * (t - 1.0 - np.log(np.where(t > 0, t, 1.0)))
    out = np.where(np.abs(t - 1.0) < 1e-3, near, np.where(t > 0, far, np.inf))
    return float(out) if np.ndim(out) == 0 else out


def w_vol_dd1(kappa: float) -> float:
    """Second derivative of :func:`w_vol` at ``t = 1``."""
    return float(kappa)


def w0_from_displacement_gradient(
    hmat: np.ndarray, params: MaterialParams, vol: Optional[VolumetricEnergy] = None
) -> np.ndarray | float:
    """Isotropic energy ``W0(I + H)`` evaluated without cancellation for small ``H``.

    Uses the exact identities ``|I+H|^2 - 3 = 2 tr H + |H|^2`` and
    ``det(I+H) = 1 + tr H + i2(H) + det H`` so every term is formed at its
    natural order in ``H``.
    """
    hm = np.asarray(hmat, dtype=float)
    tr = np.trace(hm, axis1=-2, axis2=-1)
    frob2 = np.sum(hm * hm, axis=(-2, -1))
    tr_sq = np.sum(hm * np.swapaxes(hm, -1, -2), axis=(-2, -1))
    i2 = 0.5 * (tr * tr - tr_sq)
    det = np.linalg.det(hm)
    e = tr + i2 + det
    psi = _psi(e)
    dev = frob2 - 2.0 * i2 - 2.0 * det + 2.0 * psi
    vol_part = params.kappa * psi if vol is None else np.asarray(vol(1.0 + e), dtype=float)
    out = np.where(e > -1.0, 0.5 * params.mu * dev + vol_part, np.inf)
    return float(out) if np.ndim(out) == 0 else out


def w0(f: np.ndarray, params: MaterialParams, vol: Optional[VolumetricEnergy] = None):
    """Compressible neo-Hookean energy ``mu/2 (|F|^2 - 3 - 2 log det F) + W_vol(det F)``.

    Returns ``inf`` where ``det F <= 0``.  ``vol`` replaces the default
    volumetric term; it receives ``det F``.
    """
    f = np.asarray(f, dtype=float)
    return w0_from_displacement_gradient(f - np.eye(3), params, vol)


def nematic_step_tensor(n, a: float) -> np.ndarray:
    """Volume-preserving spontaneous strain ``a^(2/3) n n + a^(-1/3) (I - n n)``."""
    n = np.asarray(n, dtype=float)
    if n.shape != (3,) or abs(np.linalg.norm(n) - 1.0) > 1e-10:
        raise ValueError("n must be a unit 3-vector")
    if not a > 0:
        raise ValueError(f"order parameter a must be positive, got {a}")
    nn = np.outer(n, n)
    return a ** (2.0 / 3.0) * nn + a ** (-1.0 / 3.0) * (np.eye(3) - nn)


# ---------------------------------------------------------------------------
# director fields


@dataclass(frozen=True)
class DirectorProfile:
    """Director as a function of the rescaled thickness coordinate ``t``."""

    texture: Texture
    normal: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def angle(self, t):
        return np.pi / 4.0 + np.pi * np.asarray(t, dtype=float) / 2.0

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.texture is Texture.CONSTANT_NORMAL:
            return np.broadcast_to(np.asarray(self.normal, dtype=float), t.shape + (3,)).copy()
        f = self.angle(t)
        c, s, z = np.cos(f), np.sin(f), np.zeros_like(f)
        if self.texture is Texture.SPLAY_BEND:
            return np.stack([c, z, s], axis=-1)
        if self.texture is Texture.TWISTED:
            return np.stack([c, s, z], axis=-1)
        raise ValueError(f"texture {self.texture} has no director field")


# ---------------------------------------------------------------------------
# spontaneous strain profiles


@dataclass(frozen=True)
class QuadraticStrainSpec:
    """Diagonal metric ``G(z3) = I + z3 A + z3^2 Bq`` through the thickness."""

    a_diag: tuple[float, float, float]
    b_diag: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        a = tuple(float(v) for v in self.a_diag)
        b = tuple(float(v) for v in self.b_diag)
        if len(a) != 3 or len(b) != 3:
            raise ValueError("A and Bq need three diagonal entries each")
        object.__setattr__(self, "a_diag", a)
        object.__setattr__(self, "b_diag", b)

    def diagonal(self, z3) -> np.ndarray:
        z = np.asarray(z3, dtype=float)[..., None]
        return 1.0 + z * np.asarray(self.a_diag) + z * z * np.asarray(self.b_diag)

    def __call__(self, z3) -> np.ndarray:
        d = self.diagonal(z3)
        return d[..., :, None] * np.eye(3)

    def check_spd(self, h: float) -> None:
        z = np.linspace(-h / 2, h / 2, _SPD_SAMPLES)
        if np.any(self.diagonal(z) <= 0.0):
            raise ValueError("quadratic metric is not positive definite on the slab")


def _outer(n: np.ndarray) -> np.ndarray:
    return n[..., :, None] * n[..., None, :]


@dataclass(frozen=True)
class StrainProfile:
    """Spontaneous right Cauchy-Green field of a sheet of thickness ``h``.

    Construct with :meth:`build` or the texture-specific class methods.
    """

    texture: Texture
    params: MaterialParams
    h: float
    normal: tuple[float, float, float] = (0.0, 0.0, 1.0)
    quadratic: Optional[QuadraticStrainSpec] = None
    director: DirectorProfile = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "texture", Texture(self.texture))
        if not np.isfinite(self.h) or self.h <= 0:
            raise ValueError(f"thickness h must be positive, got {self.h}")
        n = np.asarray(self.normal, dtype=float)
        if n.shape != (3,) or abs(np.linalg.norm(n) - 1.0) > 1e-10:
            raise ValueError("normal must be a unit 3-vector")
        if self.texture is Texture.QUADRATIC:
            if self.quadratic is None:
                raise ValueError("the quadratic texture needs a QuadraticStrainSpec")
            self.quadratic.check_spd(self.h)
        else:
            object.__setattr__(self, "director", DirectorProfile(self.texture, tuple(n)))
        z = np.linspace(-0.5, 0.5, _SPD_SAMPLES)
        if self.texture is not Texture.QUADRATIC and np.any(self.order(z) <= 0.0):
            raise ValueError("order parameter is not positive on the slab; reduce h or alpha0")

    # constructors -----------------------------------------------------------

    @classmethod
    def build(cls, texture, params: MaterialParams, h: float, **kwargs) -> "StrainProfile":
        return cls(Texture(texture), params, h, **kwargs)

    @classmethod
    def splay_bend(cls, params: MaterialParams, h: float) -> "StrainProfile":
        return cls(Texture.SPLAY_BEND, params, h)

    @classmethod
    def twisted(cls, params: MaterialParams, h: float) -> "StrainProfile":
        return cls(Texture.TWISTED, params, h)

    @classmethod
    def constant_normal(cls, params: MaterialParams, h: float, normal=(0.0, 0.0, 1.0)) -> "StrainProfile":
        return cls(Texture.CONSTANT_NORMAL, params, h, normal=tuple(normal))

    @classmethod
    def from_quadratic(cls, spec: QuadraticStrainSpec, params: MaterialParams, h: float) -> "StrainProfile":
        return cls(Texture.QUADRATIC, params, h, quadratic=spec)

    def with_thickness(self, h: float) -> "StrainProfile":
        return replace(self, h=h)

    # pointwise fields -------------------------------------------------------

    def order_increment(self, x3) -> np.ndarray:
        """``a - 1`` at rescaled thickness ``x3`` (nematic textures)."""
        x3 = np.asarray(x3, dtype=float)
        p = self.params
        if self.texture is Texture.CONSTANT_NORMAL:
            return p.alpha0 * self.h * x3 / p.h0
        if self.texture is Texture.QUADRATIC:
            raise ValueError("the quadratic texture has no order parameter")
        return np.full_like(x3, p.alpha0 * self.h / p.h0)

    def order(self, x3) -> np.ndarray:
        return 1.0 + self.order_increment(x3)

    def nematic_tensor(self, x3) -> np.ndarray:
        """``N (x) N`` at rescaled thickness (``M`` in the limit field)."""
        if self.texture is Texture.QUADRATIC:
            raise ValueError("the quadratic texture has no director")
        return _outer(self.director(x3))

    def nematic_tensor_2d(self, x3) -> np.ndarray:
        return self.nematic_tensor(x3)[..., :2, :2]

    def rescaled_metric(self, x3) -> np.ndarray:
        """Spontaneous metric at rescaled thickness ``x3``."""
        x3 = np.asarray(x3, dtype=float)
        if self.texture is Texture.QUADRATIC:
            return self.quadratic(self.h * x3)
        a = self.order(x3)[..., None, None]
        nn = self.nematic_tensor(x3)
        return a ** (-1.0 / 3.0) * np.eye(3) + (a ** (2.0 / 3.0) - a ** (-1.0 / 3.0)) * nn

    def metric(self, z3) -> np.ndarray:
        """Spontaneous metric at physical thickness ``z3``."""
        return self.rescaled_metric(np.asarray(z3, dtype=float) / self.h)

    def u_inv_minus_identity(self, x3) -> np.ndarray:
        """``metric^(-1/2) - I`` at rescaled thickness, accurate for small strains."""
        x3 = np.asarray(x3, dtype=float)
        if self.texture is Texture.QUADRATIC:
            c = self.quadratic.diagonal(self.h * x3)
            d = np.expm1(-0.5 * np.log(c))
            return d[..., :, None] * np.eye(3)
        log_a = np.log1p(self.order_increment(x3))[..., None, None]
        nn = self.nematic_tensor(x3)
        along = np.expm1(-log_a / 3.0)
        across = np.expm1(log_a / 6.0)
        return along * nn + across * (np.eye(3) - nn)

    def u_inv(self, x3) -> np.ndarray:
        return np.eye(3) + self.u_inv_minus_identity(x3)

    def limit_field(self, x3) -> np.ndarray:
        """First-order coefficient ``B`` of ``metric^(-1/2) = I + h B + o(h)``."""
        x3 = np.asarray(x3, dtype=float)
        p = self.params
        if self.texture is Texture.QUADRATIC:
            a = np.asarray(self.quadratic.a_diag)
            return (-0.5 * x3[..., None] * a)[..., :, None] * np.eye(3)
        nn = self.nematic_tensor(x3)
        if self.texture is Texture.CONSTANT_NORMAL:
            scale = 0.5 * x3[..., None, None] * p.alpha0 / p.h0
            return scale * (np.eye(3) / 3.0 - nn)
        return -p.delta0 * (nn - np.eye(3) / 3.0)

    def limit_field_2d(self, x3) -> np.ndarray:
        return self.limit_field(x3)[..., :2, :2]

    def first_order_remainder(self, x3) -> np.ndarray:
        """``metric - (I - 2 h B)``; ``o(h)`` uniformly in ``x3``."""
        return self.rescaled_metric(x3) - (np.eye(3) - 2.0 * self.h * self.limit_field(x3))

    # energies ---------------------------------------------------------------

    def energy_density(self, z3, f: np.ndarray, vol: Optional[VolumetricEnergy] = None):
        """Trace-formula energy at physical thickness ``z3``; see :func:`w_h`."""
        return w_h(z3, f, self, vol)

    def rescaled_energy_density(self, x3, f: np.ndarray) -> np.ndarray | float:
        """``W0(F metric^(-1/2))`` at rescaled thickness, evaluated stably near the well."""
        f = np.asarray(f, dtype=float)
        k = self.u_inv_minus_identity(x3)
        hf = f - np.eye(3)
        return w0_from_displacement_gradient(hf + k + hf @ k, self.params)


def w_h(z3, f: np.ndarray, profile: StrainProfile, vol: Optional[VolumetricEnergy] = None):
    """Nematic trace formula ``mu/2 (F^T F : c^-1 - 3 - 2 log det F) + W_vol(det F)``.

    ``c`` is the profile's spontaneous metric at physical thickness ``z3``.
    """
    f = np.asarray(f, dtype=float)
    c_inv = np.linalg.inv(profile.metric(z3))
    det = np.linalg.det(f)
    cauchy_green = np.swapaxes(f, -1, -2) @ f
    with np.errstate(invalid="ignore", divide="ignore"):
        log_det = np.log(np.where(det > 0, det, 1.0))
    kappa = profile.params.kappa
    vol_part = w_vol(np.where(det > 0, det, 1.0), kappa) if vol is None else vol(det)
    out = 0.5 * profile.params.mu * (np.sum(cauchy_green * c_inv, axis=(-2, -1)) - 3.0 - 2.0 * log_det) + vol_part
    out = np.where(det > 0, out, np.inf)
    return float(out) if np.ndim(out) == 0 else out


def spontaneous_stretch(profile: StrainProfile, z3) -> np.ndarray:
    """Symmetric square root of the spontaneous metric at physical ``z3``."""
    return sqrtm_spd(profile.metric(z3))


def inverse_spontaneous_stretch(profile: StrainProfile, z3) -> np.ndarray:
    return inv_sqrtm_spd(profile.metric(z3))


def limit_b_field(profile: StrainProfile):
    """Return ``(B, Bcheck)``: the limit strain field and its in-plane block.

    ``Bcheck`` returns :class:`~nematic_plates.tensor_core.Sym2` for scalar
    input and a ``(..., 2, 2)`` array otherwise.
    """

    def bcheck(x3):
        out = profile.limit_field_2d(x3)
        return Sym2.from_matrix(out) if np.ndim(x3) == 0 else out

    return profile.limit_field, bcheck
