"""Command-line front end: ``npk <command> [options]``.

Every option can also be given in a TOML file passed with ``--config``;
flags on the command line win.  Exit status is 0 on success, 1 for an
invalid configuration and 2 when a numerical stage fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from .compatibility import MetricProfile, classify_quadratic, ricci
from .gamma_check import scaling_study
from .material_model import MaterialParams, QuadraticStrainSpec, StrainProfile, Texture
from .plate_energy import (
    CurvatureField,
    Multiplicity,
    limit_energy,
    minimise_over_developable,
    physical_prefactor,
    zero_stiffness_family,
)
from .quadrature import Rect
from .reduction import ReducedModel, moment_integrals, reduce_profile
from .surface_gen import (
    cylinder_x1,
    cylinder_x2,
    energy_of_surface,
    export_mesh,
    plane,
    rotated_cylinder,
    surface_for_curvature,
)
from .tensor_core import Sym2

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

UNITS_NOTE = """\
units: lengths are measured in units of h0 and energies in units of mu, so the
reported constants depend only on gamma = kappa/(2 mu + kappa), delta0 =
alpha0/(2 h0) and h.  Physical plate energies carry an extra factor h0^3
(reported as 'physical_prefactor')."""

DEFAULTS: dict[str, Any] = {
    "texture": "splay-bend",
    "mu": 1.0,
    "kappa": 2.0,
    "alpha0": 1.0,
    "h0": 1.0,
    "h": 0.1,
    "h_list": [1e-2, 5e-3, 2.5e-3, 1e-3],
    "domain": [-0.5, 0.5, -0.5, 0.5],
    "grid": [33, 33],
    "quad_a": [0.0, 0.0, 0.0],
    "quad_b": [0.0, 0.0, 0.0],
    "normal": [0.0, 0.0, 1.0],
    "format": "json",
    "out": None,
    "seed": 0,
    "kind": "minimiser",
    "index": 0,
    "k": None,
    "alpha": None,
    "rho": None,
    "samples": 41,
    "k_range": None,
    "what": None,
    "degree": 8,
    "model": None,
    "with_gamma": False,
}


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"invalid config: field '{field_name}': {message}")
        self.field = field_name


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"numerical failure in stage '{stage}': {cause}")
        self.stage = stage


@dataclass
class RunConfig:
    texture: Texture
    params: MaterialParams
    h: float
    h_list: tuple[float, ...]
    domain: Rect
    grid: tuple[int, int]
    out: Optional[Path]
    fmt: str
    quadratic: QuadraticStrainSpec
    normal: tuple[float, float, float]
    seed: int
    options: dict[str, Any] = field(default_factory=dict)

    def profile(self, h: Optional[float] = None) -> StrainProfile:
        h = self.h if h is None else h
        if self.texture is Texture.QUADRATIC:
            return StrainProfile.from_quadratic(self.quadratic, self.params, h)
        if self.texture is Texture.CONSTANT_NORMAL:
            return StrainProfile.constant_normal(self.params, h, self.normal)
        return StrainProfile.build(self.texture, self.params, h)


def _floats(name: str, value, count: Optional[int] = None) -> tuple[float, ...]:
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    try:
        out = tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected a list of numbers, got {value!r}") from None
    if count is not None and len(out) != count:
        raise ConfigError(name, f"expected {count} numbers, got {len(out)}")
    if not all(math.isfinite(v) for v in out):
        raise ConfigError(name, "values must be finite")
    return out


def _positive(name: str, value) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected a number, got {value!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise ConfigError(name, f"must be strictly positive, got {value!r}")
    return v


def build_config(raw: dict[str, Any]) -> RunConfig:
    """Validate merged settings into a :class:`RunConfig`."""
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown setting")
    merged = {**DEFAULTS, **{k: v for k, v in raw.items() if v is not None}}
    try:
        texture = Texture(merged["texture"])
    except ValueError:
        choices = ", ".join(t.value for t in Texture)
        raise ConfigError("texture", f"must be one of {choices}") from None
    mu = _positive("mu", merged["mu"])
    kappa = _positive("kappa", merged["kappa"])
    alpha0 = _positive("alpha0", merged["alpha0"])
    h0 = _positive("h0", merged["h0"])
    h = _positive("h", merged["h"])
    h_list = tuple(_positive("h_list", v) for v in _floats("h_list", merged["h_list"]))
    try:
        domain = Rect(*_floats("domain", merged["domain"], 4))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("domain", str(exc)) from None
    grid = _floats("grid", merged["grid"], 2)
    if any(g < 2 or g != int(g) for g in grid):
        raise ConfigError("grid", "resolutions must be integers >= 2")
    fmt = merged["format"]
    if fmt not in ("json", "csv"):
        raise ConfigError("format", "must be json or csv")
    normal = _floats("normal", merged["normal"], 3)
    norm = math.sqrt(sum(v * v for v in normal))
    if norm == 0:
        raise ConfigError("normal", "must be nonzero")
    normal = tuple(v / norm for v in normal)
    quadratic = QuadraticStrainSpec(_floats("quad_a", merged["quad_a"], 3), _floats("quad_b", merged["quad_b"], 3))
    out = Path(merged["out"]) if merged["out"] else None
    config = RunConfig(
        texture,
        MaterialParams(mu, kappa, alpha0, h0),
        h,
        h_list,
        domain,
        (int(grid[0]), int(grid[1])),
        out,
        fmt,
        quadratic,
        normal,
        int(merged["seed"]),
        {k: merged[k] for k in ("kind", "index", "k", "alpha", "rho", "samples", "k_range", "what", "degree", "model", "with_gamma")},
    )
    try:
        config.profile()
    except ValueError as exc:
        raise ConfigError("h", str(exc)) from None
    return config


# ---------------------------------------------------------------------------
# serialisation


def _clean(value):
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, Sym2):
        return [value.xx, value.xy, value.yy]
    return value


def to_json(data) -> str:
    return json.dumps(_clean(data), indent=2) + "\n"


def to_csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([f"{v:.9g}" if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


@dataclass
class Artifacts:
    summary: dict
    tables: dict[str, tuple[Sequence[str], list]] = field(default_factory=dict)
    files: dict[str, bytes] = field(default_factory=dict)


def _emit(command: str, artifacts: Artifacts, config: RunConfig, stdout) -> None:
    if config.out is not None:
        config.out.mkdir(parents=True, exist_ok=True)
        (config.out / f"{command}.json").write_text(to_json(artifacts.summary))
        for name, (header, rows) in artifacts.tables.items():
            (config.out / f"{name}.csv").write_text(to_csv(header, rows))
        for name, payload in artifacts.files.items():
            (config.out / name).write_bytes(payload)
    if config.fmt == "csv" and artifacts.tables:
        for i, (header, rows) in enumerate(artifacts.tables.values()):
            if i:
                stdout.write("\n")
            stdout.write(to_csv(header, rows))
    else:
        stdout.write(to_json(artifacts.summary))


# ---------------------------------------------------------------------------
# commands


def _params_dict(config: RunConfig) -> dict:
    p = config.params
    return {"mu": p.mu, "kappa": p.kappa, "alpha0": p.alpha0, "h0": p.h0, "gamma": p.gamma, "delta0": p.delta0}


def _model(config: RunConfig) -> ReducedModel:
    path = config.options.get("model")
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("model", str(exc)) from None
        return ReducedModel.from_dict(data.get("model", data))
    return reduce_profile(config.profile())


def cmd_compat(config: RunConfig) -> Artifacts:
    profile = config.profile()
    report = ricci(MetricProfile.from_strain_profile(profile))
    summary = {
        "texture": config.texture.value,
        "h": config.h,
        "verdict": report.verdict.value,
        "max_abs_ricci": report.max_abs,
        "tolerance": report.tolerance,
        "scale": report.scale,
        "symmetry_defect": report.symmetry_defect,
        "t": report.t,
        "ricci": report.ricci,
    }
    if config.texture is Texture.QUADRATIC:
        summary["quadratic_case"] = classify_quadratic(config.quadratic).value
    else:
        summary["a_h"] = config.params.a_h(config.h)
    pairs = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
    rows = [[t] + [float(r[i, j]) for i, j in pairs] for t, r in zip(report.t, report.ricci)]
    header = ["t"] + [f"R{'12t'[i]}{'12t'[j]}" for i, j in pairs]
    return Artifacts(summary, {"compat_ricci": (header, rows)})


def cmd_reduce(config: RunConfig) -> Artifacts:
    model = reduce_profile(config.profile())
    summary = {"model": model.to_dict(), "params": _params_dict(config)}
    tables = {}
    if config.texture in (Texture.SPLAY_BEND, Texture.TWISTED):
        rows = [[name, value] for name, value in moment_integrals(config.texture).to_rows()]
        tables["moments"] = (["integral", "value"], rows)
    return Artifacts(summary, tables)


def cmd_minimise(config: RunConfig) -> Artifacts:
    model = _model(config)
    result = minimise_over_developable(model)
    area = config.domain.area
    summary = {
        "model": model.to_dict(),
        **result.to_dict(),
        "energy_total": result.energy * area,
        "physical_prefactor": physical_prefactor(config.params.h0),
    }
    return Artifacts(summary)


def _chosen_surface(config: RunConfig, model: Optional[ReducedModel] = None):
    opts = config.options
    kind = opts["kind"]
    domain = config.domain
    if kind == "minimiser":
        model = model or _model(config)
        result = minimise_over_developable(model)
        index = int(opts["index"])
        if not 0 <= index < len(result.minimisers):
            raise ConfigError("index", f"minimiser index out of range (0..{len(result.minimisers) - 1})")
        return surface_for_curvature(result.minimisers[index], domain)
    if kind == "plane":
        return plane(domain)
    if kind in ("cylinder-x1", "cylinder-x2"):
        if opts["k"] is None:
            raise ConfigError("k", f"required for {kind}")
        k = float(opts["k"])
        return cylinder_x1(k, domain) if kind == "cylinder-x1" else cylinder_x2(k, domain)
    if kind == "rotated-cylinder":
        if opts["alpha"] is None or opts["rho"] is None:
            raise ConfigError("rho", "rotated-cylinder needs alpha and rho")
        if float(opts["rho"]) == 0:
            raise ConfigError("rho", "must be nonzero")
        return rotated_cylinder(float(opts["alpha"]), float(opts["rho"]), domain)
    raise ConfigError("kind", "must be minimiser, plane, cylinder-x1, cylinder-x2 or rotated-cylinder")


def cmd_surface(config: RunConfig) -> Artifacts:
    model = _model(config)
    surface = _chosen_surface(config, model)
    mesh, obj = export_mesh(surface, config.grid)
    x1, x2 = config.domain.grid(*config.grid)
    sample = surface.evaluate(x1, x2)
    grad = sample.gradient
    iso = float(np.max(np.abs(np.swapaxes(grad, -1, -2) @ grad - np.eye(2))))
    summary = {
        "surface": surface.descriptor,
        "A_y_center": Sym2.from_matrix(surface.second_fundamental_form(0.0, 0.0)),
        "max_abs_det_A": float(np.max(np.abs(np.linalg.det(sample.second_form)))),
        "isometry_residual": iso,
        "energy": energy_of_surface(surface, model),
        "model": model.to_dict(),
        "vertices": len(mesh.vertices),
        "faces": len(mesh.faces),
    }
    return Artifacts(summary, files={"surface.obj": obj})


def cmd_sweep(config: RunConfig) -> Artifacts:
    model = _model(config)
    result = minimise_over_developable(model)
    n = int(config.options["samples"])
    if n < 2:
        raise ConfigError("samples", "need at least two samples")
    what = config.options["what"] or (
        "family" if result.multiplicity is Multiplicity.CONTINUOUS_FAMILY else "cylinders"
    )
    area = config.domain.area
    tables = {}
    if what in ("family", "both"):
        if result.multiplicity is not Multiplicity.CONTINUOUS_FAMILY:
            raise ConfigError("what", "the family sweep needs an isotropic target (constant-normal texture)")
        half = 0.5 * abs(result.family_curvature)
        rows = []
        for s in np.linspace(-half, half, n):
            plus, minus = zero_stiffness_family(model, s)
            rows.append(
                [float(s), plus.xx, plus.xy, plus.yy, limit_energy(CurvatureField.constant(plus, area), model),
                 minus.xx, minus.xy, minus.yy, limit_energy(CurvatureField.constant(minus, area), model)]
            )
        header = ["s", "plus_11", "plus_12", "plus_22", "energy_plus", "minus_11", "minus_12", "minus_22", "energy_minus"]
        tables["sweep_family"] = (header, rows)
    if what in ("cylinders", "both"):
        span = config.options["k_range"]
        if span is None:
            bound = 2.0 * max(abs(model.abar.xx), abs(model.abar.yy), abs(model.abar.xy), 1e-3)
            lo, hi = -bound, bound
        else:
            lo, hi = _floats("k_range", span, 2)
        rows = []
        for k in np.linspace(lo, hi, n):
            e1 = limit_energy(CurvatureField.constant(Sym2.diag(k, 0.0), area), model)
            e2 = limit_energy(CurvatureField.constant(Sym2.diag(0.0, k), area), model)
            rows.append([float(k), e1, e2])
        tables["sweep_cylinders"] = (["k", "energy_cylinder_x1", "energy_cylinder_x2"], rows)
    if not tables:
        raise ConfigError("what", "must be family, cylinders or both")
    summary = {"model": model.to_dict(), "multiplicity": result.multiplicity.value, "tables": sorted(tables)}
    return Artifacts(summary, tables)


def _threads() -> Optional[int]:
    value = os.environ.get("NPK_THREADS")
    if not value:
        return None
    try:
        n = int(value)
    except ValueError:
        raise ConfigError("NPK_THREADS", f"expected an integer, got {value!r}") from None
    if n < 1:
        raise ConfigError("NPK_THREADS", "must be at least 1")
    return n


def cmd_gamma_check(config: RunConfig) -> Artifacts:
    if config.texture is Texture.QUADRATIC:
        raise ConfigError("texture", "gamma-check supports the nematic textures")
    hs = tuple(sorted(config.h_list, reverse=True))
    if len(set(hs)) < 3:
        raise ConfigError("h_list", "need at least three distinct thickness values")
    model = reduce_profile(config.profile(hs[0]))
    surface = _chosen_surface(config, model)
    report = scaling_study(
        config.profile(hs[0]), surface, hs, degree=int(config.options["degree"]), max_workers=_threads()
    )
    summary = {"texture": config.texture.value, "surface": surface.descriptor, **report.to_dict()}
    rows = [[h, e, g] for h, e, g in zip(report.h, report.energies, report.gaps)]
    return Artifacts(summary, {"gamma_check": (["h", "energy_over_h2", "gap"], rows)})


def cmd_report(config: RunConfig) -> Artifacts:
    model = reduce_profile(config.profile())
    result = minimise_over_developable(model)
    area = config.domain.area
    surfaces = []
    for a in result.minimisers:
        surface = surface_for_curvature(a, config.domain)
        energy = energy_of_surface(surface, model)
        expected = result.energy * area
        surfaces.append(
            {
                "surface": surface.descriptor,
                "energy": energy,
                "relative_mismatch": abs(energy - expected) / max(abs(expected), 1e-300),
            }
        )
    summary = {
        "texture": config.texture.value,
        "params": _params_dict(config),
        "model": model.to_dict(),
        "minimisers": result.to_dict(),
        "surfaces": surfaces,
        "consistent": all(s["relative_mismatch"] <= 1e-9 for s in surfaces),
    }
    if config.texture in (Texture.SPLAY_BEND, Texture.TWISTED):
        summary["moments"] = dict(moment_integrals(config.texture).to_rows())
    summary["compat"] = {k: v for k, v in cmd_compat(config).summary.items() if k not in ("t", "ricci")}
    tables = {}
    if config.options.get("with_gamma"):
        gamma = cmd_gamma_check(config)
        summary["gamma_check"] = gamma.summary
        tables.update(gamma.tables)
    return Artifacts(summary, tables)


COMMANDS = {
    "compat": (cmd_compat, "Ricci curvature of the spontaneous metric and a compatibility verdict"),
    "reduce": (cmd_reduce, "plate model (alpha, Abar, beta) of a texture"),
    "minimise": (cmd_minimise, "minimal-energy developable curvatures"),
    "surface": (cmd_surface, "OBJ mesh and summary of an isometric surface"),
    "sweep": (cmd_sweep, "energy landscapes along the equal-energy family or cylinder curvatures"),
    "gamma-check": (cmd_gamma_check, "thin-sheet energies along a thickness sweep"),
    "report": (cmd_report, "headline constants and cross-checks for one texture"),
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("material and geometry")
    g.add_argument("--config", type=Path, help="TOML file with any of the settings below")
    g.add_argument("--texture", choices=[t.value for t in Texture])
    g.add_argument("--mu", type=float, help="shear modulus (energy unit)")
    g.add_argument("--kappa", type=float, help="volumetric stiffness W''_vol(1)")
    g.add_argument("--alpha0", type=float, help="order-parameter growth magnitude")
    g.add_argument("--h0", type=float, help="reference thickness (length unit)")
    g.add_argument("--h", type=float, help="sheet thickness")
    g.add_argument("--h-list", dest="h_list", help="comma-separated thicknesses for gamma-check")
    g.add_argument("--domain", help="parameter rectangle a1,b1,a2,b2")
    g.add_argument("--grid", help="mesh resolution n1,n2")
    g.add_argument("--quad-a", dest="quad_a", help="diagonal of A for the quadratic texture (a11,a22,att)")
    g.add_argument("--quad-b", dest="quad_b", help="diagonal of Bq for the quadratic texture (b11,b22,btt)")
    g.add_argument("--normal", help="director for the constant-normal texture (n1,n2,n3)")
    g.add_argument("--seed", type=int)
    o = common.add_argument_group("output")
    o.add_argument("--out", help="directory for JSON/CSV/OBJ artifacts")
    o.add_argument("--format", choices=["json", "csv"], help="what to print on stdout")
    s = common.add_argument_group("surfaces and sweeps")
    s.add_argument("--kind", help="minimiser | plane | cylinder-x1 | cylinder-x2 | rotated-cylinder")
    s.add_argument("--index", type=int, help="which minimiser to use when several exist")
    s.add_argument("--k", type=float, help="cylinder curvature")
    s.add_argument("--alpha", type=float, help="rotation angle of the rotated cylinder")
    s.add_argument("--rho", type=float, help="signed radius of the rotated cylinder")
    s.add_argument("--samples", type=int, help="points in a sweep")
    s.add_argument("--k-range", dest="k_range", help="curvature range lo,hi for the cylinder sweep")
    s.add_argument("--what", choices=["family", "cylinders", "both"], help="sweep type")
    s.add_argument("--degree", type=int, help="fiber polynomial degree for gamma-check")
    s.add_argument("--model", help="reduced-model JSON to use instead of reducing the texture")
    s.add_argument("--with-gamma", dest="with_gamma", action="store_true", default=None,
                   help="include the thickness sweep in report")

    parser = argparse.ArgumentParser(
        prog="npk",
        description="Plate models of thin nematic elastomer sheets.",
        epilog=UNITS_NOTE + "\n\nenvironment: NPK_THREADS caps worker threads.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(
            name, parents=[common], help=help_text, description=help_text, epilog=UNITS_NOTE,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
    return parser


def load_settings(args: argparse.Namespace) -> dict[str, Any]:
    settings: dict[str, Any] = {}
    if args.config is not None:
        try:
            with open(args.config, "rb") as fh:
                settings.update(tomllib.load(fh))
        except OSError as exc:
            raise ConfigError("config", str(exc)) from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("config", f"not valid TOML: {exc}") from None
        settings = {k.replace("-", "_"): v for k, v in settings.items()}
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        settings[key] = value
    return settings


def run(command: str, config: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    func = COMMANDS[command][0]
    try:
        with np.errstate(all="ignore"):
            artifacts = func(config)
    except ConfigError:
        raise
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        raise StageError(command, exc) from exc
    _emit(command, artifacts, config, stdout)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = build_config(load_settings(args))
        return run(args.command, config)
    except ConfigError as exc:
        print(f"npk: {exc}", file=sys.stderr)
        return 1
    except StageError as exc:
        print(f"npk: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
