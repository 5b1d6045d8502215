"""Small dense tensor algebra and the elastic quadratic forms.

Two-by-two symmetric tensors are carried by :class:`Sym2`; general 3x3
matrices are plain ``numpy`` arrays of shape ``(3, 3)`` (or stacks of them
with shape ``(..., 3, 3)``).  Quadratic forms on ``Sym(2)`` are written in the
orthonormal coordinates ``(xx, sqrt(2) xy, yy)`` so that the Frobenius inner
product becomes the Euclidean dot product.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

SQRT2 = np.sqrt(2.0)

# trace functional in (xx, sqrt2*xy, yy) coordinates
TRACE_VECTOR = np.array([1.0, 0.0, 1.0])


@dataclass(frozen=True)
class Sym2:
    """Symmetric 2x2 tensor stored by its three independent entries."""

    xx: float
    xy: float
    yy: float

    @classmethod
    def from_matrix(cls, m) -> "Sym2":
        """Build from a 2x2 array, taking its symmetric part."""
        m = np.asarray(m, dtype=float)
        if m.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
        return cls(float(m[0, 0]), float(0.5 * (m[0, 1] + m[1, 0])), float(m[1, 1]))

    @classmethod
    def from_vector(cls, v) -> "Sym2":
        """Inverse of :meth:`to_vector`."""
        v = np.asarray(v, dtype=float)
        return cls(float(v[0]), float(v[1] / SQRT2), float(v[2]))

    @classmethod
    def diag(cls, a: float, b: float) -> "Sym2":
        return cls(float(a), 0.0, float(b))

    @classmethod
    def zero(cls) -> "Sym2":
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def identity(cls) -> "Sym2":
        return cls(1.0, 0.0, 1.0)

    def to_matrix(self) -> np.ndarray:
        return np.array([[self.xx, self.xy], [self.xy, self.yy]])

    def __array__(self, dtype=None, copy=None):
        m = self.to_matrix()
        return m if dtype is None else m.astype(dtype)

    def to_vector(self) -> np.ndarray:
        """Coordinates in the orthonormal basis ``(xx, sqrt(2) xy, yy)``."""
        return np.array([self.xx, SQRT2 * self.xy, self.yy])

    @property
    def trace(self) -> float:
        return self.xx + self.yy

    @property
    def det(self) -> float:
        return self.xx * self.yy - self.xy * self.xy

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.xx**2 + 2.0 * self.xy**2 + self.yy**2))

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues (ascending) and orthonormal eigenvectors as columns."""
        if self.xy == 0.0:
            # keep diagonal inputs exact
            if self.xx <= self.yy:
                return np.array([self.xx, self.yy]), np.eye(2)
            return np.array([self.yy, self.xx]), np.array([[0.0, 1.0], [1.0, 0.0]])
        return np.linalg.eigh(self.to_matrix())

    def rotated(self, rot) -> "Sym2":
        """Return ``rot @ self @ rot.T``."""
        rot = np.asarray(rot, dtype=float)
        return Sym2.from_matrix(rot @ self.to_matrix() @ rot.T)

    def __add__(self, other: "Sym2") -> "Sym2":
        return Sym2(self.xx + other.xx, self.xy + other.xy, self.yy + other.yy)

    def __sub__(self, other: "Sym2") -> "Sym2":
        return Sym2(self.xx - other.xx, self.xy - other.xy, self.yy - other.yy)

    def __neg__(self) -> "Sym2":
        return Sym2(-self.xx, -self.xy, -self.yy)

    def __mul__(self, scalar: float) -> "Sym2":
        return Sym2(scalar * self.xx, scalar * self.xy, scalar * self.yy)

    __rmul__ = __mul__

    def isclose(self, other: "Sym2", atol: float = 1e-12) -> bool:
        return (self - other).norm <= atol


Sym2Like = Union[Sym2, np.ndarray]


def as_sym2_array(g: Sym2Like) -> np.ndarray:
    """Return a ``(..., 2, 2)`` array for a :class:`Sym2` or array input."""
    if isinstance(g, Sym2):
        return g.to_matrix()
    g = np.asarray(g, dtype=float)
    if g.shape[-2:] != (2, 2):
        raise ValueError(f"expected trailing shape (2, 2), got {g.shape}")
    return g


def sym2_to_vectors(g: np.ndarray) -> np.ndarray:
    """Map a stack ``(..., 2, 2)`` to orthonormal coordinates ``(..., 3)``."""
    g = np.asarray(g, dtype=float)
    off = 0.5 * (g[..., 0, 1] + g[..., 1, 0])
    return np.stack([g[..., 0, 0], SQRT2 * off, g[..., 1, 1]], axis=-1)


def vectors_to_sym2(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`sym2_to_vectors`."""
    v = np.asarray(v, dtype=float)
    off = v[..., 1] / SQRT2
    row0 = np.stack([v[..., 0], off], axis=-1)
    row1 = np.stack([off, v[..., 2]], axis=-1)
    return np.stack([row0, row1], axis=-2)


def sym(m: np.ndarray) -> np.ndarray:
    """Symmetric part of a (stack of) square matrices."""
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def trace(m: np.ndarray) -> np.ndarray:
    return np.trace(np.asarray(m, dtype=float), axis1=-2, axis2=-1)


def sqrtm_spd(x: np.ndarray) -> np.ndarray:
    """Principal square root of a symmetric positive-definite matrix (stack)."""
    vals, vecs = _checked_eigh(x)
    return (vecs * np.sqrt(vals)[..., None, :]) @ np.swapaxes(vecs, -1, -2)


def inv_sqrtm_spd(x: np.ndarray) -> np.ndarray:
    """Inverse principal square root of an SPD matrix (stack)."""
    vals, vecs = _checked_eigh(x)
    return (vecs / np.sqrt(vals)[..., None, :]) @ np.swapaxes(vecs, -1, -2)


def _checked_eigh(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    if not np.allclose(x, np.swapaxes(x, -1, -2), rtol=1e-12, atol=1e-14 * max(1.0, np.abs(x).max(initial=0.0))):
        raise ValueError("matrix is not symmetric")
    vals, vecs = np.linalg.eigh(sym(x))
    if np.any(vals <= 0.0) or not np.all(np.isfinite(vals)):
        raise ValueError("matrix is not positive definite")
    return vals, vecs


# ---------------------------------------------------------------------------
# quadratic forms


def q3(m: np.ndarray, mu: float, kappa: float) -> np.ndarray | float:
    """Linearised 3D elastic energy ``2 mu |sym M|^2 + kappa tr(M)^2``."""
    m = np.asarray(m, dtype=float)
    s = sym(m)
    out = 2.0 * mu * np.sum(s * s, axis=(-2, -1)) + kappa * trace(m) ** 2
    return float(out) if np.ndim(out) == 0 else out


def q2_matrix(mu: float, gamma: float) -> np.ndarray:
    """Coefficient matrix of :func:`q2` in ``(xx, sqrt2 xy, yy)`` coordinates."""
    return 2.0 * mu * (np.eye(3) + gamma * np.outer(TRACE_VECTOR, TRACE_VECTOR))


def q2(g: Sym2Like, mu: float, gamma: float) -> np.ndarray | float:
    """Relaxed plate form ``2 mu (|G|^2 + gamma tr(G)^2)`` on symmetric 2x2 inputs."""
    g = as_sym2_array(g)
    s = sym(g)
    out = 2.0 * mu * (np.sum(s * s, axis=(-2, -1)) + gamma * trace(g) ** 2)
    return float(out) if np.ndim(out) == 0 else out


def gamma_from_moduli(mu: float, kappa: float) -> float:
    return kappa / (2.0 * mu + kappa)


def _q3_bilinear(x: np.ndarray, y: np.ndarray, mu: float, kappa: float) -> float:
    return float(2.0 * mu * np.sum(sym(x) * sym(y)) + kappa * np.trace(x) * np.trace(y))


def q2_via_relaxation(g: Sym2Like, mu: float, kappa: float) -> float:
    """Minimise ``q3`` over the third row/column completions of ``G``.

    The padded matrix is ``[[G, b], [0, a]]``; the minimisation over
    ``(a, b1, b2)`` is a strictly convex quadratic whose 3x3 normal equations
    are assembled from the bilinear form of :func:`q3` and solved directly.
    """
    if mu <= 0 or kappa <= 0:
        raise ValueError("mu and kappa must be positive")
    g = as_sym2_array(g)
    base = np.zeros((3, 3))
    base[:2, :2] = g
    directions = []
    for i, j in ((2, 2), (0, 2), (1, 2)):
        e = np.zeros((3, 3))
        e[i, j] = 1.0
        directions.append(e)
    hess = np.array([[_q3_bilinear(a, b, mu, kappa) for b in directions] for a in directions])
    rhs = -np.array([_q3_bilinear(base, d, mu, kappa) for d in directions])
    z = np.linalg.solve(hess, rhs)
    if not np.all(np.isfinite(z)):
        raise ArithmeticError("relaxation normal equations did not produce a finite solution")
    m = base + sum(zi * d for zi, d in zip(z, directions))
    return float(q3(m, mu, kappa))


@dataclass(frozen=True)
class QuadForm2:
    """Quadratic polynomial on ``Sym(2)``: ``x.Q.x + l.x + c`` with ``x`` the coordinates of ``G``."""

    quad: np.ndarray
    lin: np.ndarray
    const: float

    def __post_init__(self):
        quad = np.asarray(self.quad, dtype=float)
        if quad.shape != (3, 3):
            raise ValueError("quadratic part must be 3x3")
        object.__setattr__(self, "quad", 0.5 * (quad + quad.T))
        object.__setattr__(self, "lin", np.asarray(self.lin, dtype=float).reshape(3))
        object.__setattr__(self, "const", float(self.const))

    def __call__(self, g: Sym2Like) -> np.ndarray | float:
        x = sym2_to_vectors(as_sym2_array(g))
        out = np.einsum("...i,ij,...j->...", x, self.quad, x) + x @ self.lin + self.const
        return float(out) if np.ndim(out) == 0 else out

    @classmethod
    def fit(cls, func, scale: float = 1.0) -> "QuadForm2":
        """Recover a quadratic polynomial from 10 evaluations of ``func``.

        ``func`` is evaluated at 0, at ``+-scale`` times each coordinate
        direction and at ``scale (e_i + e_j)``.  The result is exact (up to
        rounding) when ``func`` is itself quadratic.
        """
        basis = np.eye(3) * scale

        def at(v):
            return float(func(Sym2.from_vector(v)))

        f0 = at(np.zeros(3))
        plus = [at(basis[i]) for i in range(3)]
        minus = [at(-basis[i]) for i in range(3)]
        quad = np.zeros((3, 3))
        lin = np.zeros(3)
        for i in range(3):
            quad[i, i] = (plus[i] + minus[i] - 2.0 * f0) / (2.0 * scale**2)
            lin[i] = (plus[i] - minus[i]) / (2.0 * scale)
        for i in range(3):
            for j in range(i + 1, 3):
                fij = at(basis[i] + basis[j])
                # f(e_i + e_j) = Qii + Qjj + 2 Qij + li + lj + f0 (in units of scale)
                cross = fij - f0 - scale * (lin[i] + lin[j]) - scale**2 * (quad[i, i] + quad[j, j])
                quad[i, j] = quad[j, i] = cross / (2.0 * scale**2)
        return cls(quad, lin, f0)
