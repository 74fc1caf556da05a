"""Scenario files: parsing, validation and construction of run inputs.

A scenario is a TOML document with the sections ``[problem]``,
``[geometry]``, ``[time]``, ``[data]``, ``[initial]``, ``[source]``,
``[quadrature]``, ``[solver]`` and ``[output]``.  Only ``[problem]``,
``[geometry]`` and ``[data]`` are required.  Unknown keys are rejected so
that typos do not silently fall back to defaults.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import tomli

from .bie_solver import BVP_KINDS, SolverConfig, default_time_step
from .errors import ValidationError
from .geometry import BoundaryMesh, build_circle, build_interval, build_sphere, load_mesh
from .oracle import (
    DAlembert1D,
    PlaneWave,
    PointSourcePulse3D,
    Profile,
    RadialBump,
    SphericalPulse3D,
    StandingWave1D,
)
from .quadrature import QuadratureConfig, TimeGrid
from .representation import InitialData, SourceTerm

__all__ = ["Scenario", "load_scenario", "parse_scenario", "ORACLE_KINDS", "read_trace_csv", "TRACE_CSV_HEADER"]

ORACLE_KINDS = ("plane_wave", "point_source_3d", "standing_wave_1d", "dalembert_1d", "spherical_pulse_3d", "zero")
TRACE_CSV_HEADER = "# wavebem trace v1"

_SECTIONS = {
    "problem": {"name", "dim", "c", "bvp"},
    "geometry": {"kind", "center", "radius", "n_elements", "refinement", "a1", "a2", "path"},
    "time": {"dt", "n_steps", "t_end", "allow_cfl_override"},
    "data": {"oracle", "direction", "offset", "source", "amplitude", "center", "half_width", "height",
             "profile", "velocity", "displacement", "trace_file", "known"},
    "initial": {"kind"},
    "source": {"kind", "center", "width", "amplitude", "duration"},
    "quadrature": {"gauss_order", "sing_order", "pv_radius_factor"},
    "solver": {"smoothing", "check_reassembly", "cond_limit"},
    "output": {"probes", "field_every"},
}
_REQUIRED = ("problem", "geometry", "data")


def _fail(path: str, msg: str) -> ValidationError:
    return ValidationError(f"scenario {path}: {msg}")


def _num(tab: dict, key: str, path: str, default=None, positive: bool = False, integer: bool = False):
    if key not in tab:
        if default is None:
            raise _fail(f"{path}.{key}", "missing required value")
        return default
    v = tab[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise _fail(f"{path}.{key}", f"expected a number, got {v!r}")
    if integer and int(v) != v:
        raise _fail(f"{path}.{key}", f"expected an integer, got {v!r}")
    v = int(v) if integer else float(v)
    if not math.isfinite(v):
        raise _fail(f"{path}.{key}", "must be finite")
    if positive and v <= 0:
        raise _fail(f"{path}.{key}", f"must be positive, got {v!r}")
    return v


def _vec(tab: dict, key: str, path: str, dim: int, default=None) -> tuple:
    if key not in tab:
        if default is None:
            raise _fail(f"{path}.{key}", "missing required value")
        return tuple(float(x) for x in default)
    v = tab[key]
    if not isinstance(v, list) or len(v) != dim or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        raise _fail(f"{path}.{key}", f"expected a list of {dim} numbers, got {v!r}")
    return tuple(float(x) for x in v)


def _str(tab: dict, key: str, path: str, choices, default=None) -> str:
    if key not in tab:
        if default is None:
            raise _fail(f"{path}.{key}", "missing required value")
        return default
    v = tab[key]
    if not isinstance(v, str) or v not in choices:
        raise _fail(f"{path}.{key}", f"expected one of {sorted(choices)}, got {v!r}")
    return v


def _bool(tab: dict, key: str, path: str, default: bool) -> bool:
    v = tab.get(key, default)
    if not isinstance(v, bool):
        raise _fail(f"{path}.{key}", f"expected true or false, got {v!r}")
    return v


@dataclass(frozen=True)
class Scenario:
    """Validated scenario.  Build run inputs with the ``build_*`` methods."""

    raw: dict
    digest: str
    base_dir: Path
    name: str
    dim: int
    c: float
    bvp: str
    quad: QuadratureConfig
    solver: SolverConfig
    probes: np.ndarray
    field_every: int = 1
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    # --- geometry and time ------------------------------------------------
    def build_mesh(self) -> BoundaryMesh:
        if "mesh" not in self._cache:
            g = self.raw["geometry"]
            kinds = {1: ("interval",), 2: ("circle", "file"), 3: ("sphere", "file")}[self.dim]
            kind = _str(g, "kind", "[geometry]", kinds)
            if kind == "interval":
                a1 = _num(g, "a1", "[geometry]", 0.0)
                a2 = _num(g, "a2", "[geometry]", 1.0)
                if not a1 < a2:
                    raise _fail("[geometry]", "need a1 < a2")
                mesh = build_interval(a1, a2)
            elif kind == "circle":
                mesh = build_circle(_vec(g, "center", "[geometry]", 2, (0.0, 0.0)),
                                    _num(g, "radius", "[geometry]", 1.0, positive=True),
                                    _num(g, "n_elements", "[geometry]", 64, integer=True, positive=True))
            elif kind == "sphere":
                mesh = build_sphere(_vec(g, "center", "[geometry]", 3, (0.0, 0.0, 0.0)),
                                    _num(g, "radius", "[geometry]", 1.0, positive=True),
                                    _num(g, "refinement", "[geometry]", 2, integer=True))
            else:
                p = g.get("path")
                if not isinstance(p, str):
                    raise _fail("[geometry].path", "expected a mesh file path")
                mesh = load_mesh(self.base_dir / p)
                if mesh.dim != self.dim:
                    raise _fail("[geometry].path", f"mesh dimension {mesh.dim} differs from problem dim {self.dim}")
            self._cache["mesh"] = mesh
        return self._cache["mesh"]

    def build_grid(self) -> TimeGrid:
        mesh = self.build_mesh()
        t = self.raw.get("time", {})
        if self.dim == 1:
            guide = (mesh.nodes[:, 0].max() - mesh.nodes[:, 0].min()) / self.c
            dt_default = guide / 100.0
        else:
            guide = default_time_step(mesh, self.c)
            dt_default = guide
        dt = _num(t, "dt", "[time]", dt_default, positive=True)
        if "n_steps" in t and "t_end" in t:
            raise _fail("[time]", "give n_steps or t_end, not both")
        if "t_end" in t:
            n = int(round(_num(t, "t_end", "[time]", positive=True) / dt))
        else:
            n = _num(t, "n_steps", "[time]", 100, positive=True, integer=True)
        override = _bool(t, "allow_cfl_override", "[time]", False)
        if dt > guide * (1 + 1e-9) and not override:
            what = "crossing time d/c" if self.dim == 1 else "h_min/(2c)"
            raise _fail("[time].dt", f"dt={dt:g} exceeds the {what}={guide:g}; set allow_cfl_override = true to force")
        return TimeGrid(dt, max(n, 1))

    # --- data -----------------------------------------------------------------
    def _profile(self, d: dict) -> Profile:
        p = d.get("profile", {})
        if not isinstance(p, dict):
            raise _fail("[data.profile]", "expected a table")
        unknown = set(p) - {"kind", "width", "power", "amplitude"}
        if unknown:
            raise _fail("[data.profile]", f"unknown keys {sorted(unknown)}")
        return Profile(kind=_str(p, "kind", "[data.profile]", ("pulse", "power"), "pulse"),
                       width=_num(p, "width", "[data.profile]", 1.0, positive=True),
                       power=_num(p, "power", "[data.profile]", 2.0),
                       amplitude=_num(p, "amplitude", "[data.profile]", 1.0))

    def _bump(self, d: dict, key: str) -> RadialBump | None:
        b = d.get(key)
        if b is None:
            return None
        if not isinstance(b, dict):
            raise _fail(f"[data.{key}]", "expected a table")
        return RadialBump(center=_vec(b, "center", f"[data.{key}]", 3, (0.0, 0.0, 0.0)),
                          radius=_num(b, "radius", f"[data.{key}]", 0.5, positive=True),
                          power=_num(b, "power", f"[data.{key}]", 4, integer=True),
                          amplitude=_num(b, "amplitude", f"[data.{key}]", 1.0))

    def build_oracle(self):
        """Exact solution named in ``[data]`` or ``None`` for tabulated data."""
        if "oracle" in self._cache:
            return self._cache["oracle"]
        d = self.raw["data"]
        if "trace_file" in d:
            self._cache["oracle"] = None
            return None
        kind = _str(d, "oracle", "[data]", ORACLE_KINDS)
        dims = {"plane_wave": (1, 2, 3), "point_source_3d": (3,), "standing_wave_1d": (1,),
                "dalembert_1d": (1,), "spherical_pulse_3d": (3,), "zero": (1, 2, 3)}
        if self.dim not in dims[kind]:
            raise _fail("[data].oracle", f"{kind} is not available in dimension {self.dim}")
        c = self.c
        if kind == "plane_wave":
            default_dir = (1.0,) + (0.0,) * (self.dim - 1)
            direction = np.asarray(_vec(d, "direction", "[data]", self.dim, default_dir))
            nrm = np.linalg.norm(direction)
            if nrm == 0:
                raise _fail("[data].direction", "must be non-zero")
            oracle = PlaneWave(tuple(direction / nrm), c, self._profile(d), _num(d, "offset", "[data]", 0.0))
        elif kind == "point_source_3d":
            oracle = PointSourcePulse3D(_vec(d, "source", "[data]", 3), c, self._profile(d),
                                        _num(d, "offset", "[data]", 0.0))
        elif kind == "standing_wave_1d":
            mesh = self.build_mesh()
            a1, a2 = float(mesh.nodes[:, 0].min()), float(mesh.nodes[:, 0].max())
            oracle = StandingWave1D(a1, a2 - a1, c, _num(d, "amplitude", "[data]", 1.0))
        elif kind == "dalembert_1d":
            oracle = DAlembert1D.hat(_num(d, "center", "[data]", 0.5), _num(d, "half_width", "[data]", 0.2, positive=True),
                                     _num(d, "height", "[data]", 1.0), c)
        elif kind == "spherical_pulse_3d":
            vel, disp = self._bump(d, "velocity"), self._bump(d, "displacement")
            if vel is None and disp is None:
                raise _fail("[data]", "spherical_pulse_3d needs a velocity or displacement bump")
            oracle = SphericalPulse3D(vel, disp, c)
        else:
            oracle = _ZeroOracle(self.dim, c)
        self._cache["oracle"] = oracle
        return oracle

    def build_initial(self) -> InitialData:
        kind = _str(self.raw.get("initial", {}), "kind", "[initial]", ("zero", "oracle"), "zero")
        if kind == "zero":
            return InitialData()
        oracle = self.build_oracle()
        if oracle is None:
            raise _fail("[initial].kind", "'oracle' needs an oracle in [data]")
        return InitialData(u0=lambda p: oracle.eval(p, 0.0)[0], u0_dot=lambda p: oracle.eval(p, 0.0)[1])

    def build_source(self) -> SourceTerm:
        s = self.raw.get("source", {})
        kind = _str(s, "kind", "[source]", ("none", "gaussian_pulse"), "none")
        if kind == "none":
            return SourceTerm()
        if self.dim == 1:
            raise _fail("[source].kind", "sources are supported in dimensions 2 and 3")
        x0 = np.asarray(_vec(s, "center", "[source]", self.dim))
        w = _num(s, "width", "[source]", 0.2, positive=True)
        A = _num(s, "amplitude", "[source]", 1.0)
        T = _num(s, "duration", "[source]", 1.0, positive=True)

        def G(p, tt):
            p = np.asarray(p, dtype=float).reshape(-1, self.dim)
            tt = np.asarray(tt, dtype=float)
            env = np.where((tt > 0) & (tt < T), np.sin(np.pi * tt / T) ** 2, 0.0)
            return A * np.exp(-np.sum((p - x0) ** 2, axis=1) / w**2) * env

        return SourceTerm(G=G, active=True)

    def known_ends(self) -> tuple[str, str]:
        """Prescribed quantity at each end of a 1-D interval: ``"u"`` or ``"ux"``."""
        d = self.raw["data"]
        default = {"dirichlet": ["u", "u"], "neumann": ["ux", "ux"], "mixed-1d": ["u", "ux"]}[self.bvp]
        k = d.get("known", default)
        if not isinstance(k, list) or len(k) != 2 or any(v not in ("u", "ux") for v in k):
            raise _fail("[data].known", f"expected two entries from ['u', 'ux'], got {k!r}")
        n_u = sum(v == "u" for v in k)
        if {"dirichlet": 2, "neumann": 0, "mixed-1d": 1}[self.bvp] != n_u:
            raise _fail("[data].known", f"{k!r} does not match bvp = {self.bvp!r}")
        return tuple(k)

    def trace_file(self) -> Path | None:
        p = self.raw["data"].get("trace_file")
        if p is None:
            return None
        if not isinstance(p, str):
            raise _fail("[data].trace_file", "expected a path")
        return self.base_dir / p


@dataclass(frozen=True)
class _ZeroOracle:
    dim: int
    c: float = 1.0
    kind: str = "zero"

    def eval(self, x, t):
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        z = np.zeros(len(x))
        return z, z.copy(), np.zeros_like(x)


def parse_scenario(text: str, base_dir: Path | str = ".") -> Scenario:
    """Validate scenario text.

    Raises
    ------
    ValidationError
        With the TOML line/column for syntax errors or the section and key
        for semantic errors.
    """
    if not text.strip():
        raise ValidationError("scenario is empty")
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ValidationError(f"scenario syntax error: {exc}") from exc
    for sec in raw:
        if sec == "schema":
            continue
        if sec not in _SECTIONS:
            raise _fail(f"[{sec}]", f"unknown section; expected one of {sorted(_SECTIONS)}")
        if not isinstance(raw[sec], dict):
            raise _fail(f"[{sec}]", "expected a table")
        allowed = _SECTIONS[sec] | ({"profile", "velocity", "displacement"} if sec == "data" else set())
        unknown = set(raw[sec]) - allowed
        if unknown:
            raise _fail(f"[{sec}]", f"unknown keys {sorted(unknown)}")
    schema = raw.get("schema", 1)
    if schema != 1:
        raise _fail("schema", f"unsupported schema version {schema!r}")
    for sec in _REQUIRED:
        if sec not in raw:
            raise _fail(f"[{sec}]", "missing required section")
    p = raw["problem"]
    dim = _num(p, "dim", "[problem]", integer=True)
    if dim not in (1, 2, 3):
        raise _fail("[problem].dim", f"must be 1, 2 or 3, got {dim}")
    c = _num(p, "c", "[problem]", 1.0, positive=True)
    bvp = _str(p, "bvp", "[problem]", BVP_KINDS, "dirichlet")
    if bvp == "mixed-1d" and dim != 1:
        raise _fail("[problem].bvp", "mixed problems are only available in dimension 1")
    name = p.get("name", "scenario")
    if not isinstance(name, str):
        raise _fail("[problem].name", "expected a string")
    q = raw.get("quadrature", {})
    quad = QuadratureConfig(gauss_order=_num(q, "gauss_order", "[quadrature]", 8, positive=True, integer=True),
                            sing_order=_num(q, "sing_order", "[quadrature]", 8, positive=True, integer=True),
                            pv_radius_factor=_num(q, "pv_radius_factor", "[quadrature]", 1e-6, positive=True))
    s = raw.get("solver", {})
    solver = SolverConfig(quad=quad, smoothing=_bool(s, "smoothing", "[solver]", False),
                          check_reassembly=_bool(s, "check_reassembly", "[solver]", True),
                          cond_limit=_num(s, "cond_limit", "[solver]", 1e12, positive=True), c=c)
    o = raw.get("output", {})
    probes_raw = o.get("probes", [])
    if not isinstance(probes_raw, list):
        raise _fail("[output].probes", "expected a list of points")
    probes = np.array([_vec({"p": pt}, "p", f"[output].probes[{i}]", dim) for i, pt in enumerate(probes_raw)],
                      dtype=float).reshape(-1, dim)
    every = _num(o, "field_every", "[output]", 1, positive=True, integer=True)
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    sc = Scenario(raw=raw, digest=digest, base_dir=Path(base_dir), name=name, dim=dim, c=c, bvp=bvp,
                  quad=quad, solver=solver, probes=probes, field_every=every)
    # resolve everything once so errors surface before any work starts
    sc.build_mesh()
    sc.build_grid()
    sc.build_oracle()
    sc.build_initial()
    sc.build_source()
    if dim == 1:
        sc.known_ends()
    return sc


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read scenario {path}: {exc}") from exc
    return parse_scenario(text, path.parent)


def read_trace_csv(path, n_steps: int, n_elems: int) -> dict[str, np.ndarray]:
    """Read a trace CSV written by ``wavebem solve`` into (n_steps+1, n_elems) arrays."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ValidationError(f"cannot read trace file {path}: {exc}") from exc
    if not lines or lines[0].strip() != TRACE_CSV_HEADER:
        raise ValidationError(f"{path}: not a trace CSV (first line must be {TRACE_CSV_HEADER!r})")
    rows = list(csv.DictReader(lines[1:]))
    need = {"step", "element", "u", "u_dot", "du_dn"}
    if not rows or not need <= set(rows[0]):
        raise ValidationError(f"{path}: trace CSV needs columns {sorted(need)}")
    out = {k: np.full((n_steps + 1, n_elems), np.nan) for k in ("u", "u_dot", "du_dn")}
    for i, r in enumerate(rows, start=3):
        try:
            k, e = int(r["step"]), int(r["element"])
            vals = {key: float(r[key]) for key in out}
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{path}:{i}: malformed row") from exc
        if not (0 <= k <= n_steps and 0 <= e < n_elems):
            raise ValidationError(f"{path}:{i}: step or element out of range for this scenario")
        for key, v in vals.items():
            out[key][k, e] = v
    for key, arr in out.items():
        if np.isnan(arr).any():
            raise ValidationError(f"{path}: column {key} does not cover every step and element")
    return out
