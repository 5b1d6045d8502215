"""Explicit isometric bendings of a flat sheet and their meshes.

Every surface carries its parameterisation ``y``, the tangent map
``grad y`` (3x2), the unit normal ``nu = d1 y x d2 y`` and the second
fundamental form ``A = (grad y)^T grad nu``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .plate_energy import CurvatureField, limit_energy
from .quadrature import Rect
from .reduction import ReducedModel
from .tensor_core import Sym2


class SurfaceKind(str, Enum):
    PLANE = "plane"
    CYLINDER_X1 = "cylinder-x1"
    CYLINDER_X2 = "cylinder-x2"
    ROTATED_CYLINDER = "rotated-cylinder"
    CUSTOM = "custom"


@dataclass(frozen=True)
class SurfaceSample:
    y: np.ndarray
    gradient: np.ndarray
    normal: np.ndarray
    second_form: np.ndarray


def _rotation_2d(angle: float) -> np.ndarray:
    """``[[sin a, -cos a], [cos a, sin a]]``: takes ``(cos a, sin a)`` to ``e2``."""
    s, c = np.sin(angle), np.cos(angle)
    return np.array([[s, -c], [c, s]])


def _bent_along_x1(x1, x2, k: float, lift: float) -> SurfaceSample:
    """Cylinder bending the ``x1`` lines with curvature ``k``; axis height shifted by ``lift``."""
    x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
    kx = k * x1
    s, c = np.sin(kx), np.cos(kx)
    zero, one = np.zeros_like(kx), np.ones_like(kx)
    y = np.stack([s / k, x2, (c - 1.0) / k + lift], axis=-1)
    d1 = np.stack([c, zero, -s], axis=-1)
    d2 = np.stack([zero, one, zero], axis=-1)
    nu = np.stack([s, zero, c], axis=-1)
    a = np.zeros(kx.shape + (2, 2))
    a[..., 0, 0] = k
    return SurfaceSample(y, np.stack([d1, d2], axis=-1), nu, a)


@dataclass(frozen=True, eq=False)
class IsometrySurface:
    """Closed-form isometric immersion of a rectangle.

    ``curvature`` is the nonzero principal curvature (``k`` for the axis
    cylinders, ``1 / rho`` for the rotated family); ``angle`` selects the
    rotated family member.  ``rotation`` and ``translation`` apply a rigid
    motion after the canonical construction.
    """

    kind: SurfaceKind
    domain: Rect = field(default_factory=Rect)
    curvature: float = 0.0
    angle: float = 0.0
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    evaluator: Optional[Callable[[np.ndarray, np.ndarray], SurfaceSample]] = None

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=float)
        if rot.shape != (3, 3) or not np.allclose(rot.T @ rot, np.eye(3), atol=1e-12) or np.linalg.det(rot) < 0:
            raise ValueError("rotation must be a proper 3x3 rotation")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float).reshape(3))
        if self.kind is SurfaceKind.CUSTOM and self.evaluator is None:
            raise ValueError("custom surfaces need an evaluator")

    @property
    def descriptor(self) -> dict:
        out = {"kind": self.kind.value, "domain": list(self.domain.as_tuple())}
        if self.kind in (SurfaceKind.CYLINDER_X1, SurfaceKind.CYLINDER_X2):
            out["k"] = self.curvature
        elif self.kind is SurfaceKind.ROTATED_CYLINDER:
            out["alpha"] = self.angle
            out["rho"] = 1.0 / self.curvature
        return out

    def rigidly_moved(self, rotation, translation=(0.0, 0.0, 0.0)) -> "IsometrySurface":
        """Same surface after ``y -> rotation @ y + translation`` (composed with any earlier motion)."""
        rotation = np.asarray(rotation, dtype=float)
        return IsometrySurface(
            self.kind,
            self.domain,
            self.curvature,
            self.angle,
            rotation @ self.rotation,
            rotation @ self.translation + np.asarray(translation, dtype=float),
            self.evaluator,
        )

    def _canonical(self, x1, x2) -> SurfaceSample:
        x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        if self.kind is SurfaceKind.PLANE:
            zero = np.zeros_like(x1)
            grad = np.broadcast_to(np.eye(3)[:, :2], x1.shape + (3, 2)).copy()
            nu = np.broadcast_to(np.array([0.0, 0.0, 1.0]), x1.shape + (3,)).copy()
            return SurfaceSample(np.stack([x1, x2, zero], axis=-1), grad, nu, np.zeros(x1.shape + (2, 2)))
        if self.kind is SurfaceKind.CYLINDER_X1:
            return _bent_along_x1(x1, x2, self.curvature, 0.0)
        if self.kind is SurfaceKind.CYLINDER_X2:
            kx = self.curvature * x2
            sn, cs = np.sin(kx), np.cos(kx)
            zero, one = np.zeros_like(kx), np.ones_like(kx)
            y = np.stack([x1, sn / self.curvature, (cs - 1.0) / self.curvature], axis=-1)
            d1 = np.stack([one, zero, zero], axis=-1)
            d2 = np.stack([zero, cs, -sn], axis=-1)
            nu = np.stack([zero, sn, cs], axis=-1)
            a = np.zeros(kx.shape + (2, 2))
            a[..., 1, 1] = self.curvature
            return SurfaceSample(y, np.stack([d1, d2], axis=-1), nu, a)
        if self.kind is SurfaceKind.ROTATED_CYLINDER:
            rot2 = _rotation_2d(self.angle)
            rot3 = np.eye(3)
            rot3[:2, :2] = rot2
            xr = np.stack([x1, x2], axis=-1) @ rot2.T
            base = _bent_along_x1(xr[..., 0], xr[..., 1], self.curvature, 1.0 / self.curvature)
            y = base.y @ rot3
            grad = rot3.T @ base.gradient @ rot2
            nu = base.normal @ rot3
            a = rot2.T @ base.second_form @ rot2
            return SurfaceSample(y, grad, nu, a)
        return self.evaluator(x1, x2)

    def evaluate(self, x1, x2) -> SurfaceSample:
        s = self._canonical(x1, x2)
        q, b = self.rotation, self.translation
        return SurfaceSample(s.y @ q.T + b, q @ s.gradient, s.normal @ q.T, s.second_form)

    def y(self, x1, x2) -> np.ndarray:
        return self.evaluate(x1, x2).y

    def second_fundamental_form(self, x1, x2) -> np.ndarray:
        return self.evaluate(x1, x2).second_form

    def frame(self, x1, x2) -> np.ndarray:
        """Rotation ``(d1 y | d2 y | nu)`` at each point."""
        s = self.evaluate(x1, x2)
        return np.concatenate([s.gradient, s.normal[..., None]], axis=-1)


def plane(domain: Rect = Rect()) -> IsometrySurface:
    return IsometrySurface(SurfaceKind.PLANE, domain)


def cylinder_x1(k: float, domain: Rect = Rect()) -> IsometrySurface:
    """``y = (sin(k x1)/k, x2, (cos(k x1) - 1)/k)`` with ``A = diag(k, 0)``; a plane if ``k = 0``."""
    if k == 0:
        return plane(domain)
    return IsometrySurface(SurfaceKind.CYLINDER_X1, domain, float(k))


def cylinder_x2(k: float, domain: Rect = Rect()) -> IsometrySurface:
    """``y = (x1, sin(k x2)/k, (cos(k x2) - 1)/k)`` with ``A = diag(0, k)``; a plane if ``k = 0``."""
    if k == 0:
        return plane(domain)
    return IsometrySurface(SurfaceKind.CYLINDER_X2, domain, float(k))


def rotated_cylinder(alpha: float, rho: float, domain: Rect = Rect()) -> IsometrySurface:
    """Cylinder of signed radius ``rho`` whose straight lines run along ``(cos a, sin a)``.

    Normalised so ``y(0, 0) = (0, 0, rho)`` and ``grad y(0, 0) = (e1 | e2)``;
    ``A = Rc^T diag(1/rho, 0) Rc`` with ``Rc = [[sin a, -cos a], [cos a, sin a]]``.
    """
    if rho == 0 or not np.isfinite(rho):
        raise ValueError("rho must be finite and nonzero")
    return IsometrySurface(SurfaceKind.ROTATED_CYLINDER, domain, 1.0 / float(rho), float(alpha))


def surface_for_curvature(a: Sym2, domain: Rect = Rect(), atol: float = 1e-12) -> IsometrySurface:
    """Constant-curvature isometry realising a rank-one ``a`` (plane for ``a = 0``)."""
    if abs(a.det) > atol * max(a.norm, 1.0) ** 2:
        raise ValueError("curvature tensor is not developable (det != 0)")
    if a.norm <= atol:
        return plane(domain)
    if abs(a.xy) <= atol and abs(a.yy) <= atol:
        return cylinder_x1(a.xx, domain)
    if abs(a.xy) <= atol and abs(a.xx) <= atol:
        return cylinder_x2(a.yy, domain)
    vals, vecs = a.eigh()
    i = int(np.argmax(np.abs(vals)))
    u = vecs[:, i]
    return rotated_cylinder(float(np.arctan2(u[0], -u[1])), 1.0 / vals[i], domain)


def custom_surface(evaluator: Callable, domain: Rect = Rect()) -> IsometrySurface:
    """Wrap ``evaluator(x1, x2) -> SurfaceSample``."""
    return IsometrySurface(SurfaceKind.CUSTOM, domain, evaluator=evaluator)


def energy_of_surface(
    surface: IsometrySurface, model: ReducedModel, load=None, n: int = 16
) -> float:
    """Plate energy of a surface, minus ``int load . y`` when a load is given.

    ``load`` is a constant 3-vector or a callable ``(x1, x2) -> (..., 3)``.
    """
    energy = limit_energy(CurvatureField.from_surface(surface, n), model)
    if load is None:
        return energy
    x1, x2, w = surface.domain.gauss(n)
    y = surface.y(x1, x2)
    f = load(x1, x2) if callable(load) else np.broadcast_to(np.asarray(load, dtype=float), y.shape)
    return float(energy - w @ np.sum(f * y, axis=-1))


# ---------------------------------------------------------------------------
# finite-difference fundamental forms


@dataclass(frozen=True)
class FormsSample:
    x1: np.ndarray
    x2: np.ndarray
    first: np.ndarray
    second: np.ndarray
    one_sided: np.ndarray


def _derivative(func, x1, x2, axis: int, step: float, domain: Rect):
    """Second-order difference along ``axis``; one-sided where the stencil leaves the domain."""
    lo, hi = (domain.x1_min, domain.x1_max) if axis == 0 else (domain.x2_min, domain.x2_max)
    x = x1 if axis == 0 else x2

    def at(offset):
        return func(x1 + offset, x2) if axis == 0 else func(x1, x2 + offset)

    f0, fp, fm, fp2, fm2 = at(0.0), at(step), at(-step), at(2 * step), at(-2 * step)
    central = (fp - fm) / (2 * step)
    forward = (-3 * f0 + 4 * fp - fp2) / (2 * step)
    backward = (3 * f0 - 4 * fm + fm2) / (2 * step)
    use_forward = (x - step < lo)[..., None]
    use_backward = (x + step > hi)[..., None]
    out = np.where(use_forward, forward, np.where(use_backward, backward, central))
    return out, (use_forward | use_backward)[..., 0]


def fundamental_forms_numeric(
    surface: IsometrySurface, n1: int = 21, n2: Optional[int] = None, step: float = 1e-4
) -> FormsSample:
    """First and second fundamental forms from finite differences of ``y`` alone."""
    domain = surface.domain
    x1, x2 = domain.grid(n1, n2)

    def tangents(a, b):
        d1, s1 = _derivative(surface.y, a, b, 0, step, domain)
        d2, s2 = _derivative(surface.y, a, b, 1, step, domain)
        return d1, d2, s1 | s2

    def normal(a, b):
        d1, d2, _ = tangents(a, b)
        n = np.cross(d1, d2)
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    d1, d2, flagged = tangents(x1, x2)
    dn1, f1 = _derivative(normal, x1, x2, 0, step, domain)
    dn2, f2 = _derivative(normal, x1, x2, 1, step, domain)
    grad = np.stack([d1, d2], axis=-1)
    grad_nu = np.stack([dn1, dn2], axis=-1)
    first = np.swapaxes(grad, -1, -2) @ grad
    second = np.swapaxes(grad, -1, -2) @ grad_nu
    return FormsSample(x1, x2, first, second, flagged | f1 | f2)


# ---------------------------------------------------------------------------
# meshes


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    vertices: np.ndarray
    normals: np.ndarray
    faces: np.ndarray
    shape: tuple[int, int]

    def __post_init__(self):
        if not (np.all(np.isfinite(self.vertices)) and np.all(np.isfinite(self.normals))):
            raise ValueError("mesh has non-finite vertices or normals")
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise ValueError("face index out of range")

    def face_areas(self) -> np.ndarray:
        v = self.vertices[self.faces]
        # split each quad into two triangles
        t1 = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
        t2 = np.cross(v[:, 2] - v[:, 0], v[:, 3] - v[:, 0])
        return 0.5 * (np.linalg.norm(t1, axis=-1) + np.linalg.norm(t2, axis=-1))

    def to_obj(self) -> bytes:
        """OBJ text with ``v``, ``vn`` and 1-based ``f i//i ...`` quad records."""
        buf = io.StringIO()
        buf.write(f"# structured quad mesh {self.shape[0]}x{self.shape[1]}\n")
        for x, y, z in self.vertices:
            buf.write(f"v {x:.9g} {y:.9g} {z:.9g}\n")
        for x, y, z in self.normals:
            buf.write(f"vn {x:.9g} {y:.9g} {z:.9g}\n")
        for face in self.faces + 1:
            buf.write("f " + " ".join(f"{i}//{i}" for i in face) + "\n")
        return buf.getvalue().encode("ascii")


def export_mesh(surface: IsometrySurface, resolution: tuple[int, int] = (32, 32)) -> tuple[SurfaceMesh, bytes]:
    """Structured quad mesh of the surface over its parameter grid, plus OBJ bytes."""
    n1, n2 = resolution
    if n1 < 2 or n2 < 2:
        raise ValueError("resolution must be at least 2x2")
    x1, x2 = surface.domain.grid(n1, n2)
    sample = surface.evaluate(x1, x2)
    vertices = sample.y.reshape(-1, 3)
    normals = sample.normal.reshape(-1, 3)
    idx = np.arange(n1 * n2).reshape(n1, n2)
    faces = np.stack(
        [idx[:-1, :-1].ravel(), idx[1:, :-1].ravel(), idx[1:, 1:].ravel(), idx[:-1, 1:].ravel()], axis=-1
    )
    mesh = SurfaceMesh(vertices, normals, faces, (n1, n2))
    areas = mesh.face_areas()
    if np.any(areas <= 1e-14 * areas.mean()):
        raise ValueError("mesh contains degenerate faces")
    return mesh, mesh.to_obj()
