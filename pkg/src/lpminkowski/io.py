"""Problem files, run reports and OBJ export.

Problem and report files are JSON.  Floats are written with ``repr`` (the
shortest string that parses back to the same double), so every numeric field
round-trips bit for bit.

Problem file::

    {"format": "lp-minkowski-problem", "version": 1,
     "dim": 2, "p": 0.5,
     "items": [{"u": [1.0, 0.0], "alpha": 1.0}, ...],
     "options": {"tol": 1e-08, "max_iterations": 10000}}
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DimensionError, ParseError, ReportIOError
from .measure import DiscreteMeasure, residual, sp_measure
from .outer import SolveReport, SolverOptions
from .polytope import DirectionSet, PolytopeMesh, facet_from_vertices, triangles

PROBLEM_FORMAT = "lp-minkowski-problem"
REPORT_FORMAT = "lp-minkowski-report"
UNIT_NORM_TOL = 1e-6

_OPTION_KEYS = {f.name for f in fields(SolverOptions)} - {"h0"}


@dataclass
class ProblemFile:
    dim: int
    p: float
    dirs: list
    alpha: list
    options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "format": PROBLEM_FORMAT,
            "version": 1,
            "dim": self.dim,
            "p": self.p,
            "items": [{"u": list(u), "alpha": a} for u, a in zip(self.dirs, self.alpha)],
            "options": dict(self.options),
        }

    @classmethod
    def from_dict(cls, data) -> "ProblemFile":
        try:
            dim = int(data["dim"])
            p = float(data["p"])
            items = data["items"]
            dirs = [[float(c) for c in it["u"]] for it in items]
            alpha = [float(it["alpha"]) for it in items]
            options = dict(data.get("options") or {})
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed problem: {exc!r}") from exc
        if dim not in (2, 3):
            raise DimensionError(f"dimension {dim} is not supported (only 2 and 3)")
        for k, u in enumerate(dirs):
            if len(u) != dim:
                raise ParseError(f"item {k}: direction has {len(u)} components, expected {dim}")
            norm = math.sqrt(sum(c * c for c in u))
            if abs(norm - 1.0) > UNIT_NORM_TOL:
                raise ParseError(f"item {k}: direction norm {norm!r} is not within {UNIT_NORM_TOL} of 1")
        unknown = set(options) - _OPTION_KEYS
        if unknown:
            raise ParseError(f"unknown solver options {sorted(unknown)}")
        return cls(dim, p, dirs, alpha, options)

    def direction_set(self) -> DirectionSet:
        return DirectionSet.from_vectors(self.dirs, normalize=True)

    def to_measure(self) -> DiscreteMeasure:
        return DiscreteMeasure(self.direction_set(), np.array(self.alpha), self.p)

    def solver_options(self, **overrides) -> SolverOptions:
        opts = dict(self.options)
        opts.update({k: v for k, v in overrides.items() if v is not None})
        return SolverOptions(**opts)


def _load_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ReportIOError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc


def _dump_json(data, path):
    try:
        text = json.dumps(data, indent=1, allow_nan=False)
    except ValueError as exc:
        raise ValueError(f"refusing to write non-finite values: {exc}") from exc
    try:
        Path(path).write_text(text + "\n")
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc}") from exc


def read_problem(path) -> ProblemFile:
    return ProblemFile.from_dict(_load_json(path))


def write_problem(problem: ProblemFile, path):
    _dump_json(problem.to_dict(), path)


def parse_problem(path):
    """Load and admit a problem file; returns ``(DiscreteMeasure, SolverOptions)``.

    Admission failures surface as ``AdmissionError`` carrying the offending
    direction indices.
    """
    problem = read_problem(path)
    return problem.to_measure(), problem.solver_options()


@dataclass
class RunReport:
    """Everything needed to audit a solve after the fact.

    ``rows`` holds one record per input direction with the offset ``h``, the
    facet area ``a``, the L_p measure atom ``sp`` and its relative residual.
    """

    instance: dict
    dim: int
    p: float
    vertices: list
    rows: list
    scale: float
    max_relative_residual: float
    center_residual: float
    objective_trace: list
    iterations: int
    regime: str
    termination: str
    tool_version: str = __version__
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {"format": REPORT_FORMAT, "version": 1, **asdict(self)}

    @classmethod
    def from_dict(cls, data) -> "RunReport":
        if data.get("format") != REPORT_FORMAT:
            raise ParseError("not a report file")
        names = {f.name for f in fields(cls)}
        try:
            return cls(**{k: v for k, v in data.items() if k in names})
        except TypeError as exc:
            raise ParseError(f"malformed report: {exc}") from exc

    @classmethod
    def from_solve(cls, problem: ProblemFile, report: SolveReport) -> "RunReport":
        mesh = report.solution
        p = problem.p
        sp = sp_measure(mesh, p)
        rel = report.residual.relative
        rows = [
            {"h": float(mesh.h[k]), "a": float(mesh.areas[k]), "sp": float(sp[k]), "residual": float(rel[k])}
            for k in range(mesh.N)
        ]
        return cls(
            instance=problem.to_dict(),
            dim=mesh.dim,
            p=p,
            vertices=mesh.vertices.tolist(),
            rows=rows,
            scale=float(report.scale),
            max_relative_residual=float(report.residual.max_relative),
            center_residual=float(report.residual.center_residual),
            objective_trace=[float(v) for v in report.objective_trace],
            iterations=int(report.iterations),
            regime=report.regime,
            termination=report.termination,
            wall_time=float(report.wall_time),
        )

    def problem(self) -> ProblemFile:
        return ProblemFile.from_dict(self.instance)

    def mesh(self) -> PolytopeMesh:
        """Rebuild the solution polytope from the stored offsets."""
        from .polytope import intersect_halfspaces

        return intersect_halfspaces(self.problem().direction_set(), [r["h"] for r in self.rows])


def write_report(report: RunReport, path):
    """Write a report, refusing NaN or infinite numeric fields."""
    _check_finite(report.to_dict(), "report")
    _dump_json(report.to_dict(), path)


def read_report(path) -> RunReport:
    return RunReport.from_dict(_load_json(path))


def _check_finite(obj, where):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite value at {where}")
    elif isinstance(obj, dict):
        for k, v in obj.items():
            _check_finite(v, f"{where}.{k}")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _check_finite(v, f"{where}[{i}]")


def recheck_report(report: RunReport) -> np.ndarray:
    """Recompute per-direction relative residuals from the stored vertices alone."""
    problem = report.problem()
    dirs = problem.direction_set()
    verts = np.array(report.vertices)
    alpha = np.array(problem.alpha)
    p = problem.p
    out = np.empty(dirs.N)
    for k, u in enumerate(dirs.dirs):
        s = float(np.max(verts @ u))
        face = facet_from_vertices(u, verts)
        a = 0.0 if face is None else face.area
        out[k] = abs(s ** (1.0 - p) * a - alpha[k]) / alpha[k]
    return out


def report_residual(report: RunReport):
    """Residual of the rebuilt mesh against the stored instance."""
    return residual(report.mesh(), report.problem().to_measure())


def export_obj(mesh: PolytopeMesh, path):
    """Write a 3-d polytope as a triangulated, outward-oriented OBJ file."""
    if mesh.dim != 3:
        raise DimensionError("OBJ export needs a 3-d mesh")
    tris = triangles(mesh)
    used = np.unique(tris)
    remap = {int(v): i + 1 for i, v in enumerate(used)}
    lines = [f"# {len(used)} vertices, {len(tris)} triangles"]
    lines += ["v " + " ".join(repr(float(c)) for c in mesh.vertices[v]) for v in used]
    lines += ["f " + " ".join(str(remap[int(v)]) for v in tri) for tri in tris]
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc}") from exc


def read_obj(path):
    """Minimal OBJ reader: returns ``(vertices, faces)`` with 0-based faces."""
    verts, faces = [], []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(c) for c in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(c.split("/")[0]) - 1 for c in parts[1:]])
    return np.array(verts), np.array(faces, dtype=int)


def obj_volume(vertices, faces) -> float:
    """Signed volume enclosed by a closed, outward-oriented triangle mesh."""
    a, b, c = (vertices[faces[:, i]] for i in range(3))
    return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)
