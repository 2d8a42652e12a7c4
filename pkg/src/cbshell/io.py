"""Scenario files, probe CSVs, mesh snapshots and run manifests.

Scenario files are YAML documents whose keys carry their units
(``thickness_m``, ``density_kg_m3``).  Unknown keys are rejected with the
dotted path of the offending entry.
"""

import csv
import dataclasses
import hashlib
import json
import os
import typing
from pathlib import Path

import numpy as np
import yaml

from .oracles import pressure_band
from .scenarios import (GEOMETRY_TYPES, PROBES, LoadCase, MaterialSpec, Scenario, SolverSpec)


class ConfigError(ValueError):
    """Schema violation: wrong key, missing key or wrong type."""


class DomainError(ValueError):
    """A value outside its physical range."""


# ---------------------------------------------------------------------------
# parsing

def _type_ok(value, tp):
    origin = typing.get_origin(tp)
    if origin is typing.Union:
        return any(_type_ok(value, a) for a in typing.get_args(tp))
    if tp is type(None):
        return value is None
    if tp is float:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if tp is int:
        return isinstance(value, int) and not isinstance(value, bool)
    if origin in (list, typing.List):
        return isinstance(value, list)
    return isinstance(value, tp)


def _type_name(tp):
    if typing.get_origin(tp) is typing.Union:
        return " or ".join(_type_name(a) for a in typing.get_args(tp))
    return getattr(tp, "__name__", str(tp)).replace("NoneType", "null")


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(data).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    hints = typing.get_type_hints(cls)
    for key in data:
        if key not in fields:
            raise ConfigError(f"{path}.{key}: unknown key (allowed: {', '.join(fields)})")
    kwargs = {}
    for name, f in fields.items():
        if name not in data:
            if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
                raise ConfigError(f"{path}.{name}: required key missing")
            continue
        value = data[name]
        if not _type_ok(value, hints[name]):
            raise ConfigError(f"{path}.{name}: expected {_type_name(hints[name])}, "
                              f"got {type(value).__name__}")
        if hints[name] is float:
            value = float(value)
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise DomainError(f"{path}: {exc}") from None


def scenario_from_dict(data):
    if not isinstance(data, dict):
        raise ConfigError("<root>: expected a mapping")
    top = ("schema_version", "name", "experiment", "technique", "geometry", "material",
           "load_cases", "solver")
    for key in data:
        if key not in top:
            raise ConfigError(f"<root>.{key}: unknown key (allowed: {', '.join(top)})")
    for key in ("schema_version", "name", "experiment", "technique", "geometry", "material", "load_cases"):
        if key not in data:
            raise ConfigError(f"<root>.{key}: required key missing")
    for key, tp in (("schema_version", int), ("experiment", int), ("technique", int), ("name", str)):
        if not _type_ok(data[key], tp):
            raise ConfigError(f"<root>.{key}: expected {tp.__name__}, got {type(data[key]).__name__}")
    exp = data["experiment"]
    if exp not in GEOMETRY_TYPES:
        raise DomainError(f"<root>.experiment: must be one of {sorted(GEOMETRY_TYPES)}, got {exp}")
    geometry = _build(GEOMETRY_TYPES[exp], data["geometry"], "geometry")
    material = _build(MaterialSpec, data["material"], "material")
    if not isinstance(data["load_cases"], list):
        raise ConfigError("load_cases: expected a list")
    cases = [_build(LoadCase, lc, f"load_cases[{i}]") for i, lc in enumerate(data["load_cases"])]
    solver = _build(SolverSpec, data.get("solver", {}), "solver")
    try:
        return Scenario(name=data["name"], experiment=exp, technique=data["technique"],
                        geometry=geometry, material=material, load_cases=cases, solver=solver,
                        schema_version=data["schema_version"])
    except ValueError as exc:
        raise DomainError(f"<root>: {exc}") from None


def parse_scenario(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read scenario file {path}: {exc.strerror}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not well-formed: {exc}") from None
    return scenario_from_dict(data)


# ---------------------------------------------------------------------------
# serializing

def scenario_to_dict(sc: Scenario):
    return {
        "schema_version": sc.schema_version,
        "name": sc.name,
        "experiment": sc.experiment,
        "technique": sc.technique,
        "geometry": dataclasses.asdict(sc.geometry),
        "material": sc.material.to_dict(),
        "load_cases": [dataclasses.asdict(lc) for lc in sc.load_cases],
        "solver": dataclasses.asdict(sc.solver),
    }


def dump_scenario(sc: Scenario):
    return yaml.safe_dump(scenario_to_dict(sc), sort_keys=False, default_flow_style=False)


def write_scenario(sc: Scenario, path):
    Path(path).write_text(dump_scenario(sc))


def config_hash(sc: Scenario):
    """SHA-256 of the canonical JSON form; independent of file formatting."""
    canon = json.dumps(scenario_to_dict(sc), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# ---------------------------------------------------------------------------
# outputs

def _fmt(v):
    return repr(float(v))


def write_probes(columns, experiment, out_dir, prefix=""):
    """One CSV per probe group; returns the written paths.

    ``columns`` maps names to equal-length arrays and must contain ``time_s``.
    Missing columns (a run that never recorded) give header-only files.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for group, names in PROBES[experiment].items():
        header = ("time_s",) + tuple(names)
        path = out_dir / f"{prefix}{group}.csv"
        n = len(columns.get("time_s", ()))
        try:
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                for i in range(n):
                    w.writerow([_fmt(columns[h][i]) for h in header])
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror}") from exc
        paths.append(path)
    return paths


def write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in r])
    return Path(path)


def write_mesh_snapshot(solver, path):
    """Legacy-VTK ASCII snapshot of the mid-surface.

    Points are the current nodal positions, cells are 9-node biquadratic
    quads.  Point data: director and thickness.  Cell data: pressure band and
    Green-Lagrange strain averaged over the element Gauss points.
    """
    m, s = solver.model, solver.state
    conn = m.conn
    E, G = conn.shape[0], m.n_gauss
    p = pressure_band(s.gp.sigma).reshape(E, G).mean(axis=1)
    strain = s.gp.strain.reshape(E, G, 6).mean(axis=1)
    lines = ["# vtk DataFile Version 3.0", "shell snapshot t=%r" % float(s.t), "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {len(s.x)} double"]
    lines += [" ".join(_fmt(v) for v in row) for row in s.x]
    lines.append(f"CELLS {E} {E * 10}")
    lines += ["9 " + " ".join(str(int(a)) for a in row) for row in conn]
    lines.append(f"CELL_TYPES {E}")
    lines += ["28"] * E
    lines += [f"POINT_DATA {len(s.x)}", "VECTORS director double"]
    lines += [" ".join(_fmt(v) for v in row) for row in s.Y]
    lines += ["SCALARS thickness_m double 1", "LOOKUP_TABLE default"]
    lines += [_fmt(v) for v in s.h]
    lines += [f"CELL_DATA {E}", "SCALARS pressure_band_Pa double 1", "LOOKUP_TABLE default"]
    lines += [_fmt(v) for v in p]
    names = ("E11", "E22", "E33", "gamma12", "gamma23", "gamma13")
    for k, name in enumerate(names):
        lines += [f"SCALARS green_lagrange_{name} double 1", "LOOKUP_TABLE default"]
        lines += [_fmt(v) for v in strain[:, k]]
    path = Path(path)
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return path


@dataclasses.dataclass
class RunManifest:
    scenario: str
    config_hash: str
    solver: dict
    technique: int
    threads: int
    wall_time_s: float = 0.0
    steps: int = 0
    exit_status: str = "not started"
    message: str = ""

    def write(self, out_dir):
        path = Path(out_dir) / "manifest.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n")
        return path


def default_output_dir():
    return Path(os.environ.get("CBSHELL_OUTPUT_DIR", "results"))


def as_floats(d):
    """JSON-friendly copy of a dict of numpy scalars."""
    return {k: (float(v) if isinstance(v, (np.floating, np.integer)) else v) for k, v in d.items()}
