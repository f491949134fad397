"""Scenario and demonstration files, CSV emission, run manifests.

Scenario files are JSON with a fixed schema; unknown keys anywhere in the
document are rejected so typos fail loudly instead of silently changing a
run. All CSV numbers are serialized with 17 significant digits, which
round-trips doubles exactly, so re-running a seeded command reproduces
its outputs byte for byte.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, fields as dc_fields
from typing import Optional, Sequence

from . import __version__
from .autodiff import wrap_angle
from .formulas import Formula, FormulaError, Trajectory, parse
from .geometry import ConvexPolygon, PolygonTemplate
from .mining import DemonstrationSet, LearnedMargin, Phase, RetainedFormula
from .optimize import Movable, OptimizerConfig, PoseTriple, Problem, TraceRow
from .predicates import AxisAlignedBox3, Scene, SceneObject


class ScenarioFileError(ValueError):
    """Schema violation; message names the offending key or object."""


def fmt(x: float) -> str:
    """17 significant digits: enough to reproduce any double exactly."""
    return format(float(x), ".17g")


def _require_keys(mapping: dict, required: Sequence[str], optional: Sequence[str],
                  where: str) -> None:
    for k in required:
        if k not in mapping:
            raise ScenarioFileError(f"{where}: missing key {k!r}")
    allowed = set(required) | set(optional)
    for k in mapping:
        if k not in allowed:
            raise ScenarioFileError(f"{where}: unknown key {k!r}")


def _as_pose(raw, where: str) -> PoseTriple:
    if (not isinstance(raw, (list, tuple)) or len(raw) != 3
            or not all(isinstance(c, (int, float)) for c in raw)):
        raise ScenarioFileError(f"{where}: pose must be [x, y, theta]")
    return (float(raw[0]), float(raw[1]), float(raw[2]))


def _interpolated_poses(start: PoseTriple, end: PoseTriple, n: int) -> list[PoseTriple]:
    """Linear sweep with the heading taking the short way around."""
    dth = wrap_angle(end[2] - start[2])
    out = []
    for t in range(n):
        f = t / (n - 1) if n > 1 else 0.0
        out.append((start[0] + f * (end[0] - start[0]),
                    start[1] + f * (end[1] - start[1]),
                    start[2] + f * dth))
    return out


def _parse_shape(raw: dict, where: str):
    _require_keys(raw, ["kind"], ["vertices", "lo", "hi"], where)
    kind = raw["kind"]
    if kind == "polygon":
        if "vertices" not in raw:
            raise ScenarioFileError(f"{where}: polygon needs vertices")
        if "lo" in raw or "hi" in raw:
            raise ScenarioFileError(f"{where}: polygon does not take box corners")
        verts = [(float(x), float(y)) for x, y in raw["vertices"]]
        return ("polygon", verts)
    if kind == "box":
        if "lo" not in raw or "hi" not in raw:
            raise ScenarioFileError(f"{where}: box needs lo and hi corners")
        if "vertices" in raw:
            raise ScenarioFileError(f"{where}: box does not take vertices")
        lo = tuple(float(c) for c in raw["lo"])
        hi = tuple(float(c) for c in raw["hi"])
        return ("box", (lo, hi))
    raise ScenarioFileError(f"{where}: unknown shape kind {kind!r}")


@dataclass
class Scenario:
    name: str
    horizon: int
    formula_text: str
    formula: Formula
    problem: Problem
    seed: int
    optimizer: OptimizerConfig
    goal_names: frozenset[str]  # enclosure containers, styled specially in renders


def _optimizer_from_overrides(raw: dict, where: str) -> OptimizerConfig:
    valid = {f.name for f in dc_fields(OptimizerConfig)}
    for k in raw:
        if k not in valid:
            raise ScenarioFileError(f"{where}: unknown optimizer key {k!r}")
    return OptimizerConfig(**raw)


def load_scenario(path: str) -> Scenario:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioFileError(f"{path}: not valid JSON ({exc})") from None
    return scenario_from_dict(doc, where=os.path.basename(path))


def scenario_from_dict(doc: dict, where: str = "scenario") -> Scenario:
    _require_keys(doc, ["name", "horizon", "formula", "objects"],
                  ["seed", "optimizer"], where)
    horizon = doc["horizon"]
    if not isinstance(horizon, int) or horizon < 1:
        raise ScenarioFileError(f"{where}: horizon must be a positive integer")
    try:
        formula = parse(doc["formula"])
    except FormulaError as exc:
        raise ScenarioFileError(f"{where}: formula does not parse: {exc}") from None
    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        raise ScenarioFileError(f"{where}: seed must be an integer")

    statics: list[SceneObject] = []
    movables: list[Movable] = []
    for i, raw in enumerate(doc["objects"]):
        oid = f"{where}: objects[{i}]"
        _require_keys(raw, ["name", "role", "shape"],
                      ["heading", "start", "end", "poses"], oid)
        name = raw["name"]
        kind, data = _parse_shape(raw["shape"], f"{oid} ({name})")
        if raw["role"] == "static":
            for k in ("start", "end", "poses"):
                if k in raw:
                    raise ScenarioFileError(f"{oid}: static object does not take {k!r}")
            if kind == "polygon":
                shape = ConvexPolygon(data)
            else:
                shape = AxisAlignedBox3(*data)
            heading = None
            if "heading" in raw:
                heading = tuple(float(c) for c in raw["heading"])
            statics.append(SceneObject(name, shape, heading))
        elif raw["role"] == "movable":
            if kind != "polygon":
                raise ScenarioFileError(
                    f"{oid}: movables are planar polygon templates, not boxes")
            if "heading" in raw:
                raise ScenarioFileError(
                    f"{oid}: movable heading comes from its pose, drop the key")
            template = PolygonTemplate(data)
            if "poses" in raw:
                if "start" in raw or "end" in raw:
                    raise ScenarioFileError(f"{oid}: give poses or start/end, not both")
                poses = [_as_pose(p, oid) for p in raw["poses"]]
                if len(poses) != horizon + 1:
                    raise ScenarioFileError(
                        f"{oid}: poses must list horizon+1 = {horizon + 1} entries, "
                        f"got {len(poses)}")
            else:
                if "start" not in raw or "end" not in raw:
                    raise ScenarioFileError(f"{oid}: movable needs poses or start+end")
                poses = _interpolated_poses(_as_pose(raw["start"], oid),
                                            _as_pose(raw["end"], oid), horizon + 1)
            movables.append(Movable(name, template, poses))
        else:
            raise ScenarioFileError(f"{oid}: role must be 'static' or 'movable'")

    opt = _optimizer_from_overrides(doc.get("optimizer", {}), where)
    try:
        problem = Problem(formula, statics, movables)
    except Exception as exc:
        raise ScenarioFileError(f"{where}: {exc}") from None
    if problem.horizon != horizon:
        raise ScenarioFileError(
            f"{where}: horizon {horizon} but movable poses span {problem.horizon}")

    goal_names = frozenset(
        atom.objects[1] for atom in _enclosure_atoms(formula))
    return Scenario(doc["name"], horizon, doc["formula"], formula, problem,
                    seed, opt, goal_names)


def _enclosure_atoms(formula: Formula):
    from .formulas import atoms_of
    from .predicates import PredicateKind
    return [a for a in atoms_of(formula) if a.kind is PredicateKind.ENCL_IN]


# -- trajectory CSV ---------------------------------------------------------------

TRAJECTORY_HEADER = ["t", "object", "x", "y", "theta"]


def write_trajectory_csv(path: str, poses: dict[str, list[PoseTriple]]) -> None:
    """Rows ordered by step then by object name; fixed column order."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_HEADER)
        horizon = max(len(ps) for ps in poses.values()) - 1
        for t in range(horizon + 1):
            for name in sorted(poses):
                x, y, th = poses[name][t]
                w.writerow([t, name, fmt(x), fmt(y), fmt(th)])


def read_trajectory_csv(path: str, expected_objects: Sequence[str],
                        horizon: int) -> dict[str, list[PoseTriple]]:
    """Inverse of write_trajectory_csv; every object must cover 0..horizon."""
    rows: dict[str, dict[int, PoseTriple]] = {name: {} for name in expected_objects}
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header != TRAJECTORY_HEADER:
            raise ScenarioFileError(f"{path}: expected header {TRAJECTORY_HEADER}")
        for lineno, row in enumerate(r, start=2):
            if len(row) != 5:
                raise ScenarioFileError(f"{path}:{lineno}: expected 5 columns")
            t = int(row[0])
            name = row[1]
            if name not in rows:
                raise ScenarioFileError(f"{path}:{lineno}: unknown object {name!r}")
            if t in rows[name]:
                raise ScenarioFileError(f"{path}:{lineno}: duplicate step {t} for {name!r}")
            rows[name][t] = (float(row[2]), float(row[3]), float(row[4]))
    out = {}
    for name, by_t in rows.items():
        missing = [t for t in range(horizon + 1) if t not in by_t]
        if missing:
            raise ScenarioFileError(
                f"{path}: object {name!r} missing steps {missing[:5]}"
                + ("..." if len(missing) > 5 else ""))
        out[name] = [by_t[t] for t in range(horizon + 1)]
    return out


# -- optimization trace CSV ---------------------------------------------------------

TRACE_HEADER = ["iteration", "loss", "rho_smooth", "rho_exact", "grad_norm"]


def write_trace_csv(path: str, trace: Sequence[TraceRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for row in trace:
            w.writerow([row.iteration, fmt(row.loss), fmt(row.robustness_smooth),
                        fmt(row.robustness_exact), fmt(row.gradient_norm)])


# -- accuracy CSV -------------------------------------------------------------------

ACCURACY_HEADER = ["pair", "tau", "samples", "quantity", "exact", "smooth", "abs_error"]
ACCURACY_SUMMARY_HEADER = ["quantity", "tau", "samples", "max_abs_error",
                           "mean_abs_error"]


def write_accuracy_csv(path: str, rows: Sequence[tuple]) -> None:
    """rows: (pair, tau, samples, quantity, exact, smooth)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ACCURACY_HEADER)
        for pair, tau, samples, quantity, exact, smooth in rows:
            w.writerow([pair, fmt(tau), samples, quantity, fmt(exact), fmt(smooth),
                        fmt(abs(smooth - exact))])


def accuracy_summary(rows: Sequence[tuple]) -> list[tuple]:
    """(quantity, tau, samples, max_abs_error, mean_abs_error), sorted."""
    groups: dict[tuple, list[float]] = {}
    for pair, tau, samples, quantity, exact, smooth in rows:
        groups.setdefault((quantity, tau, samples), []).append(abs(smooth - exact))
    out = []
    for (quantity, tau, samples), errs in sorted(groups.items()):
        out.append((quantity, tau, samples, max(errs), math.fsum(errs) / len(errs)))
    return out


def write_accuracy_summary_csv(path: str, rows: Sequence[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ACCURACY_SUMMARY_HEADER)
        for quantity, tau, samples, mx, mean in rows:
            w.writerow([quantity, fmt(tau), samples, fmt(mx), fmt(mean)])


# -- mining report CSV ---------------------------------------------------------------

MINING_HEADER = ["phase", "obstacle", "temporal", "relation", "window_lo", "window_hi",
                 "worst_robustness", "margin", "margin_estimate"]


def write_mining_csv(path: str, retained: Sequence[RetainedFormula],
                     margins: Sequence[LearnedMargin]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(MINING_HEADER)
        for r, m in zip(retained, margins):
            c = r.candidate
            w.writerow([c.phase.name, c.obstacle, c.temporal, c.kind.value,
                        c.phase.lo, c.phase.hi, fmt(r.worst), fmt(m.margin),
                        fmt(m.margin_estimate)])


# -- demonstration files --------------------------------------------------------------

DEMO_HEADER = ["t", "object", "x", "y", "z"]
DEMO_META_NAME = "meta.json"


def write_demo_dir(path: str, demos: DemonstrationSet) -> list[str]:
    """meta.json plus one CSV of subject box centers per demonstration."""
    os.makedirs(path, exist_ok=True)
    first = demos.trajectories[0].scene(0)
    subject_box = first.get(demos.subject).shape
    half = tuple((h - l) / 2.0 for l, h in zip(subject_box.lo, subject_box.hi))
    meta = {
        "subject": demos.subject,
        "subject_half": list(half),
        "obstacles": [{"name": n,
                       "lo": list(first.get(n).shape.lo),
                       "hi": list(first.get(n).shape.hi)}
                      for n in demos.obstacles],
        "phases": [{"name": p.name, "lo": p.lo, "hi": p.hi} for p in demos.phases],
    }
    meta_path = os.path.join(path, DEMO_META_NAME)
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written = [meta_path]
    for i, traj in enumerate(demos.trajectories):
        fpath = os.path.join(path, f"demo_{i:03d}.csv")
        with open(fpath, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(DEMO_HEADER)
            for t in range(traj.horizon + 1):
                box = traj.scene(t).get(demos.subject).shape
                cx, cy, cz = ((l + h) / 2.0 for l, h in zip(box.lo, box.hi))
                w.writerow([t, demos.subject, fmt(cx), fmt(cy), fmt(cz)])
        written.append(fpath)
    return written


def read_demo_dir(path: str) -> DemonstrationSet:
    meta_path = os.path.join(path, DEMO_META_NAME)
    if not os.path.exists(meta_path):
        raise ScenarioFileError(f"{path}: no {DEMO_META_NAME}")
    with open(meta_path) as fh:
        meta = json.load(fh)
    _require_keys(meta, ["subject", "subject_half", "obstacles", "phases"], [],
                  meta_path)
    half = tuple(float(c) for c in meta["subject_half"])
    statics = []
    for raw in meta["obstacles"]:
        _require_keys(raw, ["name", "lo", "hi"], [], f"{meta_path} obstacle")
        statics.append(SceneObject(raw["name"],
                                   AxisAlignedBox3(tuple(map(float, raw["lo"])),
                                                   tuple(map(float, raw["hi"])))))
    phases = []
    for raw in meta["phases"]:
        _require_keys(raw, ["name", "lo", "hi"], [], f"{meta_path} phase")
        phases.append(Phase(raw["name"], int(raw["lo"]), int(raw["hi"])))

    demo_files = sorted(f for f in os.listdir(path)
                        if f.startswith("demo_") and f.endswith(".csv"))
    if not demo_files:
        raise ScenarioFileError(f"{path}: no demo_*.csv files")
    subject = meta["subject"]
    trajectories = []
    for fname in demo_files:
        fpath = os.path.join(path, fname)
        centers: dict[int, tuple[float, float, float]] = {}
        with open(fpath, newline="") as fh:
            r = csv.reader(fh)
            header = next(r, None)
            if header != DEMO_HEADER:
                raise ScenarioFileError(f"{fpath}: expected header {DEMO_HEADER}")
            for lineno, row in enumerate(r, start=2):
                if len(row) != 5 or row[1] != subject:
                    raise ScenarioFileError(
                        f"{fpath}:{lineno}: rows must name the subject {subject!r}")
                t = int(row[0])
                if t in centers:
                    raise ScenarioFileError(f"{fpath}:{lineno}: duplicate step {t}")
                centers[t] = (float(row[2]), float(row[3]), float(row[4]))
        horizon = max(centers)
        if sorted(centers) != list(range(horizon + 1)):
            raise ScenarioFileError(f"{fpath}: steps must cover 0..{horizon} without gaps")
        scenes = []
        for t in range(horizon + 1):
            arm = AxisAlignedBox3.from_center(*centers[t], half)
            scenes.append(Scene([SceneObject(subject, arm)] + statics))
        trajectories.append(Trajectory(scenes))
    return DemonstrationSet(subject, [s.name for s in statics], phases, trajectories)


# -- run manifest ---------------------------------------------------------------------


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path: str, command: str, seed: int, config: dict,
                   inputs: Sequence[str], outputs: Sequence[str],
                   timestamp: Optional[str] = None) -> None:
    """Inputs and outputs are hashed; the manifest pins everything needed
    to reproduce the run (the timestamp is informational only)."""
    doc = {
        "tool_version": __version__,
        "command": command,
        "seed": seed,
        "config": config,
        "inputs": {os.path.basename(p): sha256_file(p) for p in sorted(inputs)},
        "outputs": {os.path.basename(p): sha256_file(p) for p in sorted(outputs)},
        "timestamp": timestamp,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
