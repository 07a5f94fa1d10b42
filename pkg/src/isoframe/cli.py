"""Command-line driver: derive, solve, verify, observables.

Exit codes: 0 success, 1 usage or parse error, 2 degenerate frame,
3 solver non-convergence, 4 verification failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import subprocess
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import jets as J
from .ansatz import (ProfileSet, build_plane_wave, build_spherical, build_spherical_wave)
from .bundle import (DegenerateFrameError, FrameEvaluation, ResidualReport, bianchi_residual,
                     field_equation_residual, structure_residual, yang_mills_residual)
from .expressions import ExpressionError
from .forms import COMBOS
from .integrator import IntegrationError, IntegratorConfig
from .odes import (SYSTEMS, ShootingConfig, ShootingError, SolutionTable, shoot_point_charge,
                   solution_profiles, solve_plane_wave, solve_spherical_wave, spin_total,
                   table_profiles)

EXIT_OK, EXIT_USAGE, EXIT_DEGENERATE, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3, 4

ANSATZ_OF_SYSTEM = {"point-charge": "spherical", "plane-wave": "plane-wave",
                    "spherical-wave": "spherical-wave"}
ANSATZ_ALIASES = {"spherical": "spherical", "point-charge": "spherical", "plane-wave": "plane-wave",
                  "plane_wave": "plane-wave", "spherical-wave": "spherical-wave",
                  "spherical_wave": "spherical-wave"}
REDUCED_VARIABLE = {"spherical": "r", "plane-wave": "T", "spherical-wave": "zeta"}


class UsageError(Exception):
    pass


class VerificationFailed(Exception):
    def __init__(self, report):
        super().__init__("verification failed")
        self.report = report


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---- configuration -------------------------------------------------------------

@dataclass
class RunConfig:
    command: str
    ansatz: str | None = None
    m: float | None = None          # None: taken from the input file, else 1
    psi: float | None = None
    c1: float = 2.0
    c2: float = 0.0
    grid: int = 32
    tol: float = 1e-6
    out: str | None = None
    fmt: str = "csv"
    profiles: str | None = None
    solution: str | None = None
    params: dict = field(default_factory=dict)

    def validate(self):
        if not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.grid < 2:
            raise UsageError("--grid must be at least 2")
        if self.m is not None and not self.m > 0:
            raise UsageError("--m must be positive")
        if self.fmt not in ("csv", "json"):
            raise UsageError("--format is csv or json")
        if self.out:
            parent = Path(self.out).resolve().parent
            if not parent.is_dir() or not os.access(parent, os.W_OK):
                raise UsageError(f"output directory {parent} is not writable")


def git_describe() -> str:
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                             capture_output=True, text=True, timeout=5)
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() if out.returncode == 0 and out.stdout.strip() else "unknown"


# ---- file formats -----------------------------------------------------------------

def format_csv(names, data, meta) -> str:
    buf = io.StringIO()
    buf.write(f"# isoframe {meta.get('kind', '')}\n")
    buf.write("# " + json.dumps(meta.get("parameters", {}), sort_keys=True) + "\n")
    buf.write("# " + ",".join(names) + "\n")
    for row in np.atleast_2d(data) + 0.0:       # no "-0" entries
        buf.write(",".join("%.17g" % v for v in row) + "\n")
    return buf.getvalue()


def read_table(path):
    """(kind, parameters, columns) from a CSV or JSON table written by this tool."""
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {path}")
    text = p.read_text()
    try:
        if p.suffix == ".json":
            doc = json.loads(text)
            cols = {k: np.asarray(v, dtype=float) for k, v in doc["columns"].items()}
            return doc.get("kind", ""), doc.get("parameters", {}), cols
        header = [ln[1:].strip() for ln in text.splitlines() if ln.startswith("#")]
        if len(header) < 3 or not header[0].startswith("isoframe"):
            raise ValueError("missing isoframe header")
        kind = header[0][len("isoframe"):].strip()
        params = json.loads(header[1])
        names = header[2].split(",")
        data = np.loadtxt(io.StringIO(text), delimiter=",", comments="#", ndmin=2)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot parse {path}: {exc}") from exc
    if data.shape[1] != len(names):
        raise UsageError(f"{path}: {data.shape[1]} columns but {len(names)} names")
    if not np.all(np.isfinite(data)):
        raise UsageError(f"{path}: non-finite entries")
    return kind, params, {n: data[:, i] for i, n in enumerate(names)}


def write_outputs(cfg: RunConfig, kind, names, data, manifest):
    """Write the table (csv or json) and the JSON manifest next to it."""
    out = Path(cfg.out or f"isoframe-{cfg.command}.{cfg.fmt}")
    meta = {"kind": kind, "parameters": manifest.get("parameters", {})}
    if cfg.fmt == "csv":
        out.write_text(format_csv(names, data, meta))
    else:
        doc = dict(meta, columns={n: np.asarray(data)[:, i].tolist() for i, n in enumerate(names)})
        out.write_text(json.dumps(doc, indent=1))
    manifest_path = out.with_name(out.stem + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_jsonable))
    return out, manifest_path


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


# ---- profile sources -----------------------------------------------------------

@dataclass
class Source:
    ansatz: str
    profiles: ProfileSet
    params: dict
    kind: str
    # relative gap between the file's profile columns and the profiles rebuilt from its state
    column_gap: float | None = None


def load_expression_profiles(path, ansatz) -> Source:
    """JSON: {"ansatz": ..., "variable": "r", "domain": [a, b], "profiles": {...}, "constants": {...}}."""
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such profile file: {path}")
    try:
        doc = json.loads(p.read_text())
        ansatz = ansatz or doc.get("ansatz")
        if ansatz is None:
            raise UsageError("the ansatz is neither given by --ansatz nor in the profile file")
        ansatz = _ansatz(ansatz)
        variable = doc.get("variable", REDUCED_VARIABLE[ansatz])
        domain = tuple(float(v) for v in doc["domain"])
        profiles = ProfileSet.from_expressions(doc["profiles"], variable, domain, doc.get("constants"))
    except (KeyError, TypeError, ValueError, json.JSONDecodeError, ExpressionError) as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"cannot read profiles from {path}: {exc}") from exc
    if ansatz == "spherical-wave":
        profiles.require("p", "q")
        profiles.profiles.setdefault("P", profiles["p"])
        profiles.profiles.setdefault("Q", profiles["q"])
    else:
        required = ("P", "Q", "p", "q")
        missing = [n for n in required if n not in profiles]
        if missing:
            raise UsageError(f"profile file lacks {missing}")
    return Source(ansatz, profiles, dict(doc.get("parameters", {})), "expressions")


def _state_profiles(system, cols, path):
    """Profiles from the state columns, with derivatives from the ODE itself."""
    missing = [n for n in system.state_names if n not in cols]
    if missing:
        raise UsageError(f"{path} lacks state columns {missing}; use a spline --interp")
    t = cols[system.variable]
    steps = np.diff(t)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise UsageError(f"{path}: the {system.variable} column is not monotone")
    y = np.column_stack([cols[n] for n in system.state_names])
    dy = np.asarray(system.rhs(t, y.T), dtype=float).T
    table = SolutionTable(system, t, y, dy, {}, {})
    mapped = system.profile_map(t, y.T)
    gap = 0.0
    for n in system.csv_profiles:
        if n in cols:
            ref = np.asarray(mapped[n], dtype=float)
            scale = max(1.0, float(np.max(np.abs(ref))))
            gap = max(gap, float(np.max(np.abs(cols[n] - ref))) / scale)
    return solution_profiles(table), gap


def load_solution_profiles(path, ansatz, interp="ode") -> Source:
    kind, params, cols = read_table(path)
    if kind not in SYSTEMS:
        raise UsageError(f"{path} is not a solution table (kind {kind!r})")
    system = SYSTEMS[kind](params.get("m", 1.0))
    expected = ANSATZ_OF_SYSTEM[kind]
    if ansatz and _ansatz(ansatz) != expected:
        raise UsageError(f"a {kind} solution belongs to the {expected} ansatz")
    if system.variable not in cols:
        raise UsageError(f"{path} lacks the {system.variable} column")
    if interp == "ode":
        profiles, gap = _state_profiles(system, cols, path)
        return Source(expected, profiles, dict(params), kind, gap)
    names = [n for n in system.csv_profiles] + ["g"]
    missing = [n for n in system.csv_profiles if n not in cols]
    if missing:
        raise UsageError(f"{path} lacks columns {missing}")
    try:
        if system.chart_variable == system.variable:
            profiles = table_profiles(cols[system.variable], cols, names, interp, system.chart_variable)
        else:
            profiles = table_profiles(cols[system.variable], cols, names, interp,
                                      system.chart_variable, system.to_ode, system.from_ode)
    except ValueError as exc:
        raise UsageError(f"cannot interpolate {path}: {exc}") from exc
    if kind == "spherical-wave":
        profiles.profiles["P"], profiles.profiles["Q"] = profiles["p"], profiles["q"]
    return Source(expected, profiles, dict(params), kind)


def _ansatz(name):
    try:
        return ANSATZ_ALIASES[name]
    except KeyError:
        raise UsageError(f"unknown ansatz {name!r}") from None


def load_source(cfg: RunConfig, interp="ode") -> Source:
    if cfg.profiles and cfg.solution:
        raise UsageError("give either --profiles or --solution, not both")
    if cfg.profiles:
        return load_expression_profiles(cfg.profiles, cfg.ansatz)
    if cfg.solution:
        return load_solution_profiles(cfg.solution, cfg.ansatz, interp)
    raise UsageError("a profile source is required (--profiles FILE or --solution FILE)")


def build_frame(source: Source, cfg: RunConfig, closed_connection=False):
    m = cfg.m if cfg.m is not None else float(source.params.get("m", 1.0))
    psi = cfg.psi if cfg.psi is not None else float(source.params.get("psi", 0.0))
    if source.ansatz == "spherical":
        return build_spherical(source.profiles, m)
    if source.ansatz == "plane-wave":
        return build_plane_wave(source.profiles, psi, m, closed_connection=closed_connection)
    return build_spherical_wave(source.profiles, m)


def sample_grid(frame, n, domain):
    """n chart points: the reduced variable on a midpoint grid, and each other
    coordinate on its own n-point grid under a fixed permutation."""
    lo, hi = domain
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise UsageError("the profile domain must be finite")
    u = lo + (hi - lo) * (np.arange(n) + 0.5) / n
    rng = np.random.default_rng(12345)
    ranges = {"spherical": [(-1.0, 1.0), None, (0.3, math.pi - 0.3), (0.0, 2 * math.pi)],
              "plane_wave": [None, (-1.0, 1.0), (0.2, 2.0), (0.0, 2 * math.pi)],
              "spherical_wave": [None, (0.2, 2.0), (0.3, math.pi - 0.3), (0.0, 2 * math.pi)]}[frame.kind]
    cols = []
    for rg in ranges:
        if rg is None:
            cols.append(u)
        else:
            a, b = rg
            cols.append(rng.permutation(a + (b - a) * (np.arange(n) + 0.5) / n))
    return np.stack(cols)


# ---- commands ----------------------------------------------------------------------

def cmd_derive(cfg: RunConfig):
    source = load_source(cfg, cfg.params.get("interp", "ode"))
    frame = build_frame(source, cfg)
    pts = sample_grid(frame, cfg.grid, source.profiles.domain)
    ev = FrameEvaluation(frame, pts, order=2)
    if not np.all(ev.valid):
        bad = np.flatnonzero(~ev.valid)
        raise DegenerateFrameError(
            f"structure matrix degenerate at {bad.size} of {pts.shape[1]} grid points",
            float(np.max(ev.cond)), pts[:, bad[0]].tolist())
    coords = frame.chart.coords
    A = ev.A.value.reshape(3, 4, -1)
    K = np.stack([np.asarray(J.value(k.comps)) for k in ev.curvature])
    names = list(coords)
    cols = [pts[i] for i in range(4)]
    for a in range(3):
        for i in range(4):
            names.append(f"alpha{a + 1}_{coords[i]}")
            cols.append(A[a, i])
    for a in range(3):
        for s, (i, j) in enumerate(COMBOS[2]):
            names.append(f"K{a + 1}_{coords[i]}{coords[j]}")
            cols.append(K[a, s])
    names.append("cond")
    cols.append(ev.cond)
    # reduced connection functions read off the solved components
    if frame.kind == "spherical":
        extra = {"Phi": A[0, 0], "A": A[2, 2]}
    elif frame.kind == "plane_wave":
        extra = {"f": A[0, 1], "g": A[2, 2]}
    else:
        extra = {"A": A[0, 1]}
    for k, v in extra.items():
        names.append(k)
        cols.append(v)
    manifest = {"command": "derive", "ansatz": source.ansatz, "source": source.kind,
                "parameters": {"m": frame.mass, **frame.params}, "grid": cfg.grid,
                "max_condition": float(np.max(ev.cond)), "build": git_describe()}
    return write_outputs(cfg, "derive", names, np.column_stack(cols), manifest), EXIT_OK


def cmd_solve(cfg: RunConfig):
    p = cfg.params
    cfg.m = 1.0 if cfg.m is None else cfg.m
    cfg.psi = 0.0 if cfg.psi is None else cfg.psi
    integ = IntegratorConfig(rtol=p["rtol"], atol=p["atol"], method=p["method"])
    system = cfg.ansatz
    if system == "point-charge":
        sc = ShootingConfig(r_min=p["r_min"], r_max=p["r_max"], A0=p["A0"], dPhi0=p["dphi0"], m=cfg.m,
                            samples=p["samples"] or 4001,
                            integrator=IntegratorConfig(rtol=min(p["rtol"], 1e-12),
                                                        atol=min(p["atol"], 1e-14),
                                                        method=p["method"]))
        table = shoot_point_charge(sc).table
        params = {"m": cfg.m}
    elif system == "plane-wave":
        T_range = tuple(p["T_range"]) if p["T_range"] else (0.0, None)
        table = solve_plane_wave(cfg.m, p["g0"], p["dg0"], p["h0"], p["dh0"], T_range,
                                 p["samples"], integ)
        params = {"m": cfg.m, "psi": cfg.psi}
    elif system == "spherical-wave":
        table = solve_spherical_wave(cfg.c1, cfg.c2, tuple(p["s_range"]), cfg.m, p["samples"],
                                     config=integ)
        params = {"m": cfg.m, "c1": cfg.c1, "c2": cfg.c2}
    else:
        raise UsageError(f"unknown system {system!r}")
    names, data = table.columns()
    manifest = dict(table.manifest(), command="solve", parameters=params, build=git_describe())
    return write_outputs(cfg, table.system.name, names, data, manifest), EXIT_OK


def _residual_reports(frame, pts):
    return [structure_residual(frame, pts), field_equation_residual(frame, pts),
            bianchi_residual(frame, pts), yang_mills_residual(frame, pts)]


def cmd_verify(cfg: RunConfig):
    source = load_source(cfg, cfg.params.get("interp", "ode"))
    frame = build_frame(source, cfg)
    pts = sample_grid(frame, cfg.grid, source.profiles.domain)
    connection = "solved"
    ev = FrameEvaluation(frame, pts, order=1)
    if (frame.kind == "plane_wave" and not np.all(ev.valid)
            and "f" in source.profiles and "g" in source.profiles):
        # rank-deficient plane waves: the connection family is fixed by f and g
        frame = build_frame(source, cfg, closed_connection=True)
        connection = "closed-form"
    reports = _residual_reports(frame, pts)
    if source.column_gap is not None:
        # profile columns must be the ones the state implies
        reports.append(ResidualReport("columns", {"source": "table"},
                                      source.column_gap, None, 0, 1.0, 0))
    passed = all(r.passed(cfg.tol) and r.skipped_points == 0 for r in reports)
    doc = {"command": "verify", "ansatz": source.ansatz, "source": source.kind,
           "connection": connection, "tol": cfg.tol, "grid": cfg.grid,
           "parameters": {"m": frame.mass, **frame.params}, "passed": passed,
           "reports": [r.to_dict() for r in reports], "build": git_describe()}
    out = Path(cfg.out or "isoframe-verify.json")
    out.write_text(json.dumps(doc, indent=2, default=_jsonable))
    if any(r.n_points and r.skipped_points == r.n_points for r in reports):
        raise DegenerateFrameError("frame degenerate on every grid point",
                                   float(np.max(ev.cond)), None)
    if not passed:
        raise VerificationFailed(doc)
    return (out,), EXIT_OK


def cmd_observables(cfg: RunConfig):
    source = load_source(cfg, cfg.params.get("interp", "ode"))
    if source.column_gap is not None and source.column_gap > cfg.tol:
        raise UsageError(f"profile columns disagree with the state columns "
                         f"(relative gap {source.column_gap:.3g})")
    if cfg.params.get("spin") and source.ansatz != "plane-wave":
        raise UsageError("the spin density is defined for plane-wave solutions only")
    frame = build_frame(source, cfg)
    pts = sample_grid(frame, cfg.grid, source.profiles.domain)
    ev = FrameEvaluation(frame, pts, order=2)
    if not np.all(ev.valid) and frame.kind == "plane_wave" and "f" in source.profiles \
            and "g" in source.profiles:
        frame = build_frame(source, cfg, closed_connection=True)
        ev = FrameEvaluation(frame, pts, order=2)
    if not np.all(ev.valid):
        raise DegenerateFrameError("structure matrix degenerate on the observable grid",
                                   float(np.max(ev.cond)), None)
    coords = frame.chart.coords
    T, trace = ev.stress_energy()
    pipi = ev.pi_dot_pi()
    names = list(coords)
    cols = [pts[i] for i in range(4)]
    for i in range(4):
        for j in range(4):
            names.append(f"T_{coords[i]}_{coords[j]}")
            cols.append(T[i, j])
    names += ["trace", "minus_m2_pipi", "lagrangian"]
    cols += [trace, -ev.m2 * pipi, ev.lagrangian()]
    manifest = {"command": "observables", "ansatz": source.ansatz,
                "parameters": {"m": frame.mass, **frame.params}, "grid": cfg.grid,
                "trace_gap": float(np.max(np.abs(trace + ev.m2 * pipi))),
                "trace_scale": float(np.max(np.abs(ev.m2 * pipi))), "build": git_describe()}
    if frame.kind == "plane_wave":
        S = ev.spin_density()
        names += ["S_Z_phi", "minus_df_m2"]
        cols += [S[1, 3], source_minus_df(source, pts[0], frame.mass)]
        manifest["spin"] = spin_total(source.profiles, m=frame.mass)
    return write_outputs(cfg, "observables", names, np.column_stack(cols), manifest), EXIT_OK


def source_minus_df(source, T, m):
    if "f" in source.profiles:
        return -source.profiles["f"].derivatives(T, 1)[1] / (m * m)
    return -np.asarray(source.profiles["P"](T), dtype=float)


# ---- argument parsing ----------------------------------------------------------

def _add_common(p):
    p.add_argument("--ansatz", help="spherical | plane-wave | spherical-wave")
    p.add_argument("--m", type=float, default=None, help="mass parameter (default 1)")
    p.add_argument("--psi", type=float, default=None, help="plane-wave boost rapidity (default 0)")
    p.add_argument("--c1", type=float, default=2.0)
    p.add_argument("--c2", type=float, default=0.0)
    p.add_argument("--grid", type=int, default=32, help="samples per coordinate")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out", help="output path")
    p.add_argument("--format", dest="fmt", default="csv", choices=("csv", "json"))
    p.add_argument("--profiles", help="JSON file of profile expressions")
    p.add_argument("--solution", help="solution table written by 'solve'")


def _add_interp(p):
    p.add_argument("--interp", default="ode", choices=("ode", "quintic", "pchip"),
                   help="how profiles are rebuilt from a solution table: from the state "
                        "columns through the ODE (default), or by splines of the profile columns")


def make_parser():
    parser = _Parser(prog="isoframe", description="Isotopic-frame gauge field toolkit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("derive", help="connection and curvature of a frame on a grid")
    _add_common(p)
    _add_interp(p)

    p = sub.add_parser("solve", help="integrate a reduced system")
    _add_common(p)
    p.add_argument("system", choices=("point-charge", "plane-wave", "spherical-wave"))
    p.add_argument("--r-min", dest="r_min", type=float, default=1.0)
    p.add_argument("--r-max", dest="r_max", type=float, default=1000.0)
    p.add_argument("--A0", dest="A0", type=float, default=1.2, help="A(r_min)")
    p.add_argument("--dphi0", dest="dphi0", type=float, default=0.5, help="Phi'(r_min)")
    p.add_argument("--T-range", dest="T_range", type=float, nargs=2)
    p.add_argument("--s-range", dest="s_range", type=float, nargs=2, default=(0.0, 10.0))
    p.add_argument("--g0", type=float, default=0.0)
    p.add_argument("--dg0", type=float, default=None)
    p.add_argument("--h0", type=float, default=0.0)
    p.add_argument("--dh0", type=float, default=0.0)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--atol", type=float, default=1e-12)
    p.add_argument("--method", default="dopri5", choices=("dopri5", "verner65"))

    p = sub.add_parser("verify", help="residual report for a frame")
    _add_common(p)
    _add_interp(p)

    p = sub.add_parser("observables", help="stress-energy and spin density")
    _add_common(p)
    _add_interp(p)
    p.add_argument("--spin", action="store_true", help="require the spin density")
    return parser


def _config(ns) -> RunConfig:
    d = vars(ns).copy()
    base = {k: d.pop(k) for k in ("command", "ansatz", "m", "psi", "c1", "c2", "grid", "tol", "out",
                                  "fmt", "profiles", "solution")}
    if base["command"] == "solve":
        base["ansatz"] = d.pop("system")
    cfg = RunConfig(**base, params=d)
    cfg.validate()
    return cfg


COMMANDS = {"derive": cmd_derive, "solve": cmd_solve, "verify": cmd_verify,
            "observables": cmd_observables}


def _fail(code, payload):
    print(json.dumps(payload, default=_jsonable), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = make_parser()
    try:
        cfg = _config(parser.parse_args(argv))
        _, code = COMMANDS[cfg.command](cfg)
        return code
    except UsageError as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        return _fail(EXIT_USAGE, {"error": "usage", "message": str(exc)})
    except DegenerateFrameError as exc:
        return _fail(EXIT_DEGENERATE, {"error": "degenerate frame", "message": str(exc),
                                       "condition": exc.condition, "point": exc.point})
    except ShootingError as exc:
        return _fail(EXIT_SOLVER, {"error": "no convergence", "message": str(exc),
                                   "history": exc.history})
    except IntegrationError as exc:
        return _fail(EXIT_SOLVER, {"error": "integration failed", "message": str(exc), "t": exc.t})
    except VerificationFailed as exc:
        worst = {r["equation"]: r["max_residual"] for r in exc.report["reports"]}
        return _fail(EXIT_VERIFY, {"error": "verification failed", "tol": exc.report["tol"],
                                   "max_residual": worst})
    except SystemExit as exc:   # --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
