"""Command-line front end: ``mlnf-verify run | list-checks | version``.

A run reads a JSON config, evaluates the requested identity checks, and
writes ``manifest.json`` plus one ``<check>.csv`` convergence sweep per check
into the output directory.  Exit codes: 0 when every check passes, 1 when any
check fails, 2 on a configuration error.

Config sketch (schema_version 1)::

    {
      "schema_version": 1,
      "geometry": {"kind": "sphere", "reference_length": 1e-7},
      "material": {"model": "matched", "eps": [2.0, 1.0], "mu": [1.0, 0.0]},
      "ka": [1.0],
      "point_pairs": [[[0.3, 2.6, 0.9], [-1.1, 0.4, 2.5]]],
      "interior_points": [[0.2, 0.1, -0.3]],
      "checks": ["reciprocity", "fundamental_relation"],
      "tolerances": {"reciprocity": 1e-10},
      "output_dir": "mlnf-output",
      "jobs": 1
    }

Lengths are in units of ``reference_length`` (the sphere radius for a
sphere) and frequencies are given as ``ka = omega a / c``.  Pole materials use
``{"model": "poles", "eps_poles": [[w0, wp, gamma], ...], "mu_poles": [...]}``
with all three numbers in units of ``c / reference_length``.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .dispersion import DispersionModel, LorentzPole, Material, VACUUM
from .errors import ConfigError, MlnfError
from .green import Homogeneous, SphereInVacuum, Vacuum
from .identities import CHECKS, CheckConfig, check_names, run_check
from .numerics import CONSTANTS
from .reports import IdentityReport

__all__ = ["RunConfig", "RunManifest", "parse_config", "config_from_dict", "run_suite", "main"]

SCHEMA_VERSION = 1
ZERO_TIMESTAMP = "1970-01-01T00:00:00Z"
_GEOMETRIES = ("vacuum", "homogeneous", "sphere")
_KEYS = {"schema_version", "geometry", "material", "ka", "point_pairs", "interior_points", "checks",
         "tolerances", "output_dir", "jobs", "levels", "lmax", "jones_xi", "delta_schedule"}


@dataclass(frozen=True)
class RunConfig:
    """Validated run description (dimensionless inputs plus one length)."""

    geometry: str
    reference_length: float
    material: dict[str, Any]
    ka: tuple[float, ...]
    checks: tuple[str, ...]
    point_pairs: tuple = ()
    interior_points: tuple = ()
    tolerances: dict[str, float] = field(default_factory=dict)
    output_dir: str = "mlnf-output"
    jobs: int = 1
    levels: int = 3
    lmax: int | None = None
    jones_xi: float = 50.0
    delta_schedule: tuple[float, ...] = (0.08, 0.04, 0.02, 0.01)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict[str, Any]:
        out = {
            "schema_version": self.schema_version,
            "geometry": {"kind": self.geometry, "reference_length": self.reference_length},
            "material": self.material,
            "ka": list(self.ka),
            "point_pairs": [[list(a), list(b)] for a, b in self.point_pairs],
            "interior_points": [list(p) for p in self.interior_points],
            "checks": list(self.checks),
            "tolerances": dict(self.tolerances),
            "output_dir": self.output_dir,
            "jobs": self.jobs,
            "levels": self.levels,
            "jones_xi": self.jones_xi,
            "delta_schedule": list(self.delta_schedule),
        }
        if self.lmax is not None:
            out["lmax"] = self.lmax
        return out

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form (output location and jobs excluded)."""
        d = self.to_dict()
        d.pop("output_dir")
        d.pop("jobs")
        text = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def omegas(self) -> tuple[float, ...]:
        return tuple(k * CONSTANTS.c / self.reference_length for k in self.ka)

    def build_material(self) -> Material:
        m = self.material
        if self.geometry == "vacuum" or m.get("model") == "vacuum":
            return VACUUM
        if m["model"] == "matched":
            eps = complex(*m.get("eps", [1.0, 0.0]))
            mu = complex(*m.get("mu", [1.0, 0.0]))
            if eps == 1 and mu == 1:
                return VACUUM
            return Material(DispersionModel.matched(self.omegas()[0], eps, mu))
        scale = CONSTANTS.c / self.reference_length

        def poles(key):
            return tuple(LorentzPole(w0 * scale, wp * scale, g * scale) for w0, wp, g in m.get(key, []))

        return Material(DispersionModel(poles("eps_poles"), poles("mu_poles")))

    def check_config(self) -> CheckConfig:
        a = self.reference_length
        material = self.build_material()
        if self.geometry == "vacuum":
            geometry = Vacuum()
        elif self.geometry == "homogeneous":
            geometry = Homogeneous(material)
        else:
            geometry = SphereInVacuum(a, material)

        def scale(p):
            return tuple(a * x for x in p)

        return CheckConfig(
            geometry=geometry,
            omegas=self.omegas(),
            point_pairs=tuple((scale(r), scale(rp)) for r, rp in self.point_pairs),
            interior_points=tuple(scale(p) for p in self.interior_points),
            levels=self.levels,
            lmax=self.lmax,
            delta_schedule=self.delta_schedule,
            jones_xi=self.jones_xi,
            tolerances=dict(self.tolerances),
        )


@dataclass(frozen=True)
class RunManifest:
    """Outcome of a run."""

    config_hash: str
    version: str
    started: str
    finished: str
    reports: tuple[IdentityReport, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def to_dict(self) -> dict[str, Any]:
        return {
            "tool": "mlnf-verify",
            "version": self.version,
            "config_hash": self.config_hash,
            "started": self.started,
            "finished": self.finished,
            "passed": self.passed,
            "checks": [r.to_dict() for r in self.reports],
        }


# ---------------------------------------------------------------------------
# parsing


def _number(value, name: str, *, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number", name)
    x = float(value)
    if not math.isfinite(x):
        raise ConfigError(f"{name} must be finite", name)
    if positive and x <= 0:
        raise ConfigError(f"{name} must be positive", name)
    return x


def _integer(value, name: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}", name)
    return value


def _point(value, name: str) -> tuple[float, float, float]:
    if not isinstance(value, list) or len(value) != 3:
        raise ConfigError(f"{name} must be a list of three numbers", name)
    return tuple(_number(x, f"{name}[{i}]") for i, x in enumerate(value))


def _complex(value, name: str) -> list[float]:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [_number(value, name), 0.0]
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError(f"{name} must be a number or a [re, im] pair", name)
    return [_number(value[0], name + "[0]"), _number(value[1], name + "[1]")]


def _material(raw, kind: str) -> dict[str, Any]:
    if raw is None:
        if kind == "vacuum":
            return {"model": "vacuum"}
        raise ConfigError("material is required for this geometry", "material")
    if not isinstance(raw, dict):
        raise ConfigError("material must be an object", "material")
    model = raw.get("model")
    if model == "vacuum":
        return {"model": "vacuum"}
    if model == "matched":
        extra = set(raw) - {"model", "eps", "mu"}
        if extra:
            raise ConfigError(f"unknown material field {sorted(extra)[0]!r}", f"material.{sorted(extra)[0]}")
        out = {"model": "matched", "eps": _complex(raw.get("eps", 1.0), "material.eps"),
               "mu": _complex(raw.get("mu", 1.0), "material.mu")}
        for key in ("eps", "mu"):
            if out[key][1] < 0:
                raise ConfigError(f"material.{key} must have a non-negative imaginary part",
                                  f"material.{key}")
        return out
    if model == "poles":
        out: dict[str, Any] = {"model": "poles"}
        for key in ("eps_poles", "mu_poles"):
            poles = raw.get(key, [])
            if not isinstance(poles, list):
                raise ConfigError(f"material.{key} must be a list", f"material.{key}")
            rows = []
            for i, p in enumerate(poles):
                name = f"material.{key}[{i}]"
                if not isinstance(p, list) or len(p) != 3:
                    raise ConfigError(f"{name} must be [omega0, omegap, gamma]", name)
                w0 = _number(p[0], name + "[0]")
                if w0 < 0:
                    raise ConfigError(f"{name}[0] must be >= 0", name + "[0]")
                rows.append([w0, _number(p[1], name + "[1]", positive=True),
                             _number(p[2], name + "[2]", positive=True)])
            out[key] = rows
        return out
    raise ConfigError(f"unknown material model {model!r}", "material.model")


def config_from_dict(raw: Any) -> RunConfig:
    """Validate a decoded JSON config."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", "")
    unknown = set(raw) - _KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown config field {key!r}", key)
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}", "schema_version")
    geo = raw.get("geometry")
    if not isinstance(geo, dict) or geo.get("kind") not in _GEOMETRIES:
        raise ConfigError(f"geometry.kind must be one of {list(_GEOMETRIES)}", "geometry.kind")
    kind = geo["kind"]
    length = _number(geo.get("reference_length"), "geometry.reference_length", positive=True)
    material = _material(raw.get("material"), kind)
    ka = raw.get("ka")
    if not isinstance(ka, list) or not ka:
        raise ConfigError("ka must be a non-empty list", "ka")
    ka = tuple(_number(x, f"ka[{i}]", positive=True) for i, x in enumerate(ka))
    checks = raw.get("checks")
    if not isinstance(checks, list) or not checks:
        raise ConfigError("checks must be a non-empty list", "checks")
    for i, name in enumerate(checks):
        if name not in CHECKS:
            raise ConfigError(f"unknown check {name!r}", f"checks[{i}]")
    if len(set(checks)) != len(checks):
        raise ConfigError("checks must not repeat", "checks")
    pairs_raw = raw.get("point_pairs", [])
    if not isinstance(pairs_raw, list):
        raise ConfigError("point_pairs must be a list", "point_pairs")
    pairs = []
    for i, pr in enumerate(pairs_raw):
        if not isinstance(pr, list) or len(pr) != 2:
            raise ConfigError("each point pair must hold two points", f"point_pairs[{i}]")
        pairs.append((_point(pr[0], f"point_pairs[{i}][0]"), _point(pr[1], f"point_pairs[{i}][1]")))
    inner_raw = raw.get("interior_points", [])
    if not isinstance(inner_raw, list):
        raise ConfigError("interior_points must be a list", "interior_points")
    inner = tuple(_point(p, f"interior_points[{i}]") for i, p in enumerate(inner_raw))
    tolerances = raw.get("tolerances", {})
    if not isinstance(tolerances, dict):
        raise ConfigError("tolerances must be an object", "tolerances")
    for name, tol in tolerances.items():
        if name not in CHECKS:
            raise ConfigError(f"unknown check {name!r}", f"tolerances.{name}")
        _number(tol, f"tolerances.{name}", positive=True)
    output_dir = raw.get("output_dir", "mlnf-output")
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("output_dir must be a non-empty string", "output_dir")
    lmax = raw.get("lmax")
    if lmax is not None:
        lmax = _integer(lmax, "lmax", 1)
    deltas = raw.get("delta_schedule", [0.08, 0.04, 0.02, 0.01])
    if not isinstance(deltas, list) or len(deltas) < 3:
        raise ConfigError("delta_schedule must list at least three values", "delta_schedule")
    deltas = [_number(d, f"delta_schedule[{i}]", positive=True) for i, d in enumerate(deltas)]
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ConfigError("delta_schedule must be strictly decreasing", "delta_schedule")
    cfg = RunConfig(
        geometry=kind,
        reference_length=length,
        material=material,
        ka=ka,
        checks=tuple(checks),
        point_pairs=tuple(pairs),
        interior_points=inner,
        tolerances={k: float(v) for k, v in tolerances.items()},
        output_dir=output_dir,
        jobs=_integer(raw.get("jobs", 1), "jobs", 1),
        levels=_integer(raw.get("levels", 3), "levels", 1),
        lmax=lmax,
        jones_xi=_number(raw.get("jones_xi", 50.0), "jones_xi", positive=True),
        delta_schedule=tuple(deltas),
    )
    try:
        cfg.check_config()
    except MlnfError as exc:
        raise ConfigError(str(exc), "point_pairs") from exc
    return cfg


def parse_config(path: str | os.PathLike) -> RunConfig:
    """Read and validate a JSON config file.

    Raises
    ------
    OSError
        If the file cannot be read.
    ConfigError
        If the content violates the schema; ``field`` names the culprit.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", "") from exc
    return config_from_dict(raw)


# ---------------------------------------------------------------------------
# running


def _now(reproducible: bool) -> str:
    if reproducible:
        return ZERO_TIMESTAMP
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _run_one(args: tuple[str, RunConfig]) -> IdentityReport:
    name, cfg = args
    return run_check(name, cfg.check_config())


def sweep_csv(report: IdentityReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["level", "residual"])
    for level, res in report.sweep:
        writer.writerow([level, f"{res:.16e}" if math.isfinite(res) else str(res)])
    return buf.getvalue()


def run_suite(config: RunConfig, *, out_dir: str | os.PathLike | None = None, jobs: int | None = None,
              reproducible: bool = False) -> RunManifest:
    """Run every requested check and write the manifest and sweep CSVs."""
    jobs = jobs or config.jobs
    started = _now(reproducible)
    names = sorted(config.checks)
    tasks = [(name, config) for name in names]
    if jobs > 1 and len(tasks) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_run_one, tasks))
    else:
        reports = [_run_one(t) for t in tasks]
    manifest = RunManifest(config.config_hash(), __version__, started, _now(reproducible), tuple(reports))
    out = Path(out_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    text = json.dumps(manifest.to_dict(), sort_keys=True, indent=2) + "\n"
    (out / "manifest.json").write_bytes(text.encode("utf-8"))
    for name, rep in zip(names, reports):
        (out / f"{name}.csv").write_bytes(sweep_csv(rep).encode("utf-8"))
    return manifest


def _jobs_from_env() -> int | None:
    raw = os.environ.get("MLNF_VERIFY_THREADS")
    if raw is None or raw == "":
        return None
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError("MLNF_VERIFY_THREADS must be a positive integer", "MLNF_VERIFY_THREADS")
    if value < 1:
        raise ConfigError("MLNF_VERIFY_THREADS must be a positive integer", "MLNF_VERIFY_THREADS")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlnf-verify",
                                     description="Numerical verification of Green's-function identities.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the checks listed in a config file")
    run.add_argument("config", help="path to a JSON config")
    run.add_argument("--out", help="output directory (overrides the config)")
    run.add_argument("--jobs", type=int, help="parallel worker processes")
    run.add_argument("--reproducible", action="store_true", help="zero timestamps in the manifest")
    sub.add_parser("list-checks", help="list available checks")
    sub.add_parser("version", help="print the tool version")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "version":
        print(f"mlnf-verify {__version__}")
        return 0
    if args.command == "list-checks":
        for name in check_names():
            print(f"{name}\t{CHECKS[name][1]}")
        return 0
    try:
        if args.jobs is not None and args.jobs < 1:
            raise ConfigError("--jobs must be >= 1", "--jobs")
        config = parse_config(args.config)
        jobs = args.jobs or _jobs_from_env()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        where = f" (field: {exc.field})" if exc.field else ""
        print(f"error: invalid config{where}: {exc}", file=sys.stderr)
        return 2
    manifest = run_suite(config, out_dir=args.out, jobs=jobs, reproducible=args.reproducible)
    for rep in manifest.reports:
        status = "PASS" if rep.passed else "FAIL"
        print(f"{status} {rep.name} residual={rep.residual:.3e} tolerance={rep.tolerance:.1e}")
    return 0 if manifest.passed else 1


if __name__ == "__main__":
    sys.exit(main())
