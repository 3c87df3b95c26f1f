"""Config parsing, result serialization, and the command-line surface.

Config files are line-oriented `key = value` under `[section]` headers with
`#` comments.  Sections: [grid] (x_min, x_max, m), [layers] (n plus per-layer
function specs), [fuel] (mode and per-layer families), [run] (T plus solver
settings and phi_i), [experiment] (oracle and dependence options).  Spatial
profiles are function specs

    constant(v)
    bump(base, amplitude, center, width)      base + amplitude*exp(-((x-c)/w)^2)
    tanh_step(left, right, center, width)     left + (right-left)*(1+tanh((x-c)/w))/2

and fuel families are constant(v), logistic_front(center, speed, width), or
gaussian_decay(center, width, rate).  Unknown keys and duplicate keys are
rejected with line numbers; positivity/nonnegativity requirements are checked
at build time so a config either yields an admissible problem or a located
error.

Exit codes are a stable contract: 0 success, 1 usage or config error,
2 admissibility audit failure, 3 solver divergence or blow-up, 4 I/O failure.
Every run writes a JSON manifest (config echo, package version, resolved
solver settings) next to its outputs; CSV numbers carry 17 significant digits
so files round-trip bit-exactly.  Set LAYERBURN_OUTDIR to redirect relative
output paths.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import re
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .dependence import PerturbationSpec, dependence_study
from .grid import Grid, SolutionTrajectory, TemperatureField, layer_l2, make_grid
from .hypothesis import HypothesisReport, PowerIterationError, audit_problem
from .mild_solver import (
    AuditError,
    SolveResult,
    SolverConfig,
    SolverError,
    solve_coupled,
    solve_global,
)
from .model import (
    ConstantFuel,
    GaussianDecayFuel,
    LogisticFrontFuel,
    LayerParams,
    PrescribedFuel,
    Problem,
    central_gradient,
)
from .oracle import (
    NewtonError,
    OracleConfig,
    StabilityError,
    mol_solve,
    refinement_orders,
    relative_gap,
)


class ConfigError(ValueError):
    """Config syntax or semantic error with line/field location in the message."""


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


# ---------------------------------------------------------------------------
# function specs


@dataclass(frozen=True)
class FunctionSpec:
    kind: str
    args: tuple

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full_like(x, self.args[0])
        if self.kind == "bump":
            base, amp, center, width = self.args
            return base + amp * np.exp(-(((x - center) / width) ** 2))
        left, right, center, width = self.args
        return left + (right - left) * 0.5 * (1.0 + np.tanh((x - center) / width))

    def render(self) -> str:
        return f"{self.kind}({', '.join(_fmt(a) for a in self.args)})"


_SPEC_ARITY = {"constant": 1, "bump": 4, "tanh_step": 4}
_FUEL_ARITY = {"constant": 1, "logistic_front": 3, "gaussian_decay": 3}
_CALL_RE = re.compile(r"^([a-z_]+)\s*\(\s*([^()]*)\s*\)$")


def _parse_call(text: str, where: str, arity: dict) -> tuple[str, tuple]:
    m = _CALL_RE.match(text.strip())
    if not m:
        raise ConfigError(f"{where}: expected name(arg, ...), got {text!r}")
    kind, body = m.group(1), m.group(2)
    if kind not in arity:
        raise ConfigError(
            f"{where}: unknown function {kind!r} (choices: {', '.join(sorted(arity))})"
        )
    parts = [p.strip() for p in body.split(",")] if body.strip() else []
    if len(parts) != arity[kind]:
        raise ConfigError(f"{where}: {kind} takes {arity[kind]} arguments, got {len(parts)}")
    try:
        args = tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"{where}: non-numeric argument in {text!r}") from None
    return kind, args


def parse_function_spec(text: str, where: str) -> FunctionSpec:
    kind, args = _parse_call(text, where, _SPEC_ARITY)
    if kind in ("bump", "tanh_step") and args[3] <= 0:
        raise ConfigError(f"{where}: width must be positive")
    return FunctionSpec(kind, args)


def _parse_fuel_family(text: str, where: str):
    kind, args = _parse_call(text, where, _FUEL_ARITY)
    if kind == "constant":
        if not 0.0 <= args[0] <= 1.0:
            raise ConfigError(f"{where}: fuel level must lie in [0, 1]")
        return ConstantFuel(args[0])
    if kind == "logistic_front":
        center, speed, width = args
        if width <= 0:
            raise ConfigError(f"{where}: width must be positive")
        return LogisticFrontFuel(center, speed, width)
    center, width, rate = args
    if width <= 0:
        raise ConfigError(f"{where}: width must be positive")
    if rate < 0:
        raise ConfigError(f"{where}: decay rate must be nonnegative")
    return GaussianDecayFuel(center, width, rate)


# ---------------------------------------------------------------------------
# config tokenizing


_SECTIONS = ("grid", "layers", "fuel", "run", "experiment")


def _tokenize(text: str) -> dict:
    """Split config text into {section: {key: (value, line_no)}}."""
    sections: dict = {name: {} for name in _SECTIONS}
    current: str | None = None
    seen: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _SECTIONS:
                raise ConfigError(
                    f"line {lineno}: unknown section [{name}] "
                    f"(choices: {', '.join(_SECTIONS)})"
                )
            current = name
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw.strip()!r}")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        if (current, key) in seen:
            raise ConfigError(
                f"line {lineno}: duplicate key {key!r} in [{current}] "
                f"(first set on line {seen[(current, key)]})"
            )
        seen[(current, key)] = lineno
        sections[current][key] = (value, lineno)
    return sections


class _Section:
    """One section's keys with typed take-or-default access; tracks leftovers."""

    def __init__(self, name: str, entries: dict, defaults_filled: list):
        self.name = name
        self.entries = dict(entries)
        self.defaults_filled = defaults_filled

    def _where(self, key: str, lineno: int | None = None) -> str:
        loc = f"line {lineno}: " if lineno else ""
        return f"{loc}[{self.name}] {key}"

    def take(self, key: str, default=None, required: bool = False):
        if key in self.entries:
            value, lineno = self.entries.pop(key)
            return value, lineno
        if required:
            raise ConfigError(f"[{self.name}] is missing required key {key!r}")
        self.defaults_filled.append(f"[{self.name}] {key} = {default}")
        return None, None

    def take_float(self, key: str, default=None, required=False) -> float | None:
        value, lineno = self.take(key, default, required)
        if value is None:
            return default
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"{self._where(key, lineno)}: not a number: {value!r}") from None

    def take_int(self, key: str, default=None, required=False) -> int | None:
        value, lineno = self.take(key, default, required)
        if value is None:
            return default
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"{self._where(key, lineno)}: not an integer: {value!r}") from None

    def take_choice(self, key: str, choices, default=None) -> str | None:
        value, lineno = self.take(key, default)
        if value is None:
            return default
        if value not in choices:
            raise ConfigError(
                f"{self._where(key, lineno)}: must be one of {', '.join(choices)}"
            )
        return value

    def take_spec(self, key: str, default: str | None = None) -> FunctionSpec | None:
        value, lineno = self.take(key, default)
        if value is None:
            value = default
            if value is None:
                return None
        return parse_function_spec(value, self._where(key, lineno))

    def reject_leftovers(self):
        if self.entries:
            key, (_, lineno) = next(iter(self.entries.items()))
            raise ConfigError(f"line {lineno}: unknown key {key!r} in [{self.name}]")


# ---------------------------------------------------------------------------
# problem building


@dataclass
class ProblemConfig:
    """Fully validated configuration: problem data plus run/experiment settings."""

    grid: Grid
    n: int
    params: LayerParams
    fuel: PrescribedFuel
    fuel_mode: str
    phi: TemperatureField
    T: float
    solver: SolverConfig
    experiment: dict
    defaults_filled: list[str]
    text: str

    def problem(self) -> Problem:
        return Problem(self.grid, self.params, self.fuel, self.phi)


def _check_sign(name: str, values: np.ndarray, positive: bool):
    if positive and values.min() <= 0.0:
        raise ConfigError(
            f"{name} must be strictly positive on the grid (H1 positivity), "
            f"min {values.min():.6g}"
        )
    if not positive and values.min() < 0.0:
        raise ConfigError(
            f"{name} must be nonnegative on the grid, min {values.min():.6g}"
        )


def parse_config(text: str) -> ProblemConfig:
    """Parse and validate config text into an admissible problem setup."""
    tokens = _tokenize(text)
    defaults: list[str] = []

    grid_sec = _Section("grid", tokens["grid"], defaults)
    x_min = grid_sec.take_float("x_min", required=True)
    x_max = grid_sec.take_float("x_max", required=True)
    m = grid_sec.take_int("m", required=True)
    grid_sec.reject_leftovers()
    try:
        grid = make_grid(x_min, x_max, m)
    except ValueError as err:
        raise ConfigError(f"[grid]: {err}") from None
    x = grid.x

    layers = _Section("layers", tokens["layers"], defaults)
    n = layers.take_int("n", required=True)
    if n < 2:
        raise ConfigError("[layers] n: need at least 2 layers")

    layer_defaults = {"a": "constant(1)", "b": "constant(0)", "c": "constant(0)",
                      "d": "constant(0)", "lam": "constant(1)", "K": "constant(0)",
                      "A": "constant(0)"}
    fields = {}
    for name, dflt in layer_defaults.items():
        rows = [layers.take_spec(f"{name}_{i}", dflt)(x) for i in range(1, n + 1)]
        fields[name] = np.stack(rows)
    q_rows = [layers.take_spec(f"q_{i}", "constant(0)")(x) for i in range(1, n)]
    qhat1 = layers.take_spec("qhat_1", "constant(0)")(x)
    qhat2 = layers.take_spec("qhat_2", "constant(0)")(x)
    u_e = layers.take_float("u_e", default=0.0)
    E = layers.take_float("E", default=1.0)
    layers.reject_leftovers()

    for i in range(n):
        _check_sign(f"a_{i + 1}", fields["a"][i], positive=True)
        _check_sign(f"lam_{i + 1}", fields["lam"][i], positive=True)
        for name in ("b", "c", "d", "K", "A"):
            _check_sign(f"{name}_{i + 1}", fields[name][i], positive=False)
    for i, row in enumerate(q_rows, start=1):
        _check_sign(f"q_{i}", row, positive=False)
    _check_sign("qhat_1", qhat1, positive=False)
    _check_sign("qhat_2", qhat2, positive=False)
    if u_e < 0:
        raise ConfigError("[layers] u_e must be nonnegative")
    if E <= 0:
        raise ConfigError("[layers] E must be positive")

    params = LayerParams(
        a=fields["a"], b=fields["b"], c=fields["c"],
        c_x=central_gradient(fields["c"], grid.dx),
        d=fields["d"], lam=fields["lam"], K=fields["K"], A=fields["A"],
        q=np.stack(q_rows), qhat1=qhat1, qhat2=qhat2, u_e=u_e, E=E,
    )

    fuel_sec = _Section("fuel", tokens["fuel"], defaults)
    fuel_mode = fuel_sec.take_choice("mode", ("prescribed", "coupled"), "prescribed")
    families = []
    for i in range(1, n + 1):
        value, lineno = fuel_sec.take(f"y_{i}", "constant(1)")
        if value is None:
            families.append(ConstantFuel(1.0))
        else:
            families.append(_parse_fuel_family(value, fuel_sec._where(f"y_{i}", lineno)))
    fuel_sec.reject_leftovers()
    fuel = PrescribedFuel(families)

    run = _Section("run", tokens["run"], defaults)
    T = run.take_float("T", required=True)
    if T <= 0:
        raise ConfigError("[run] T must be positive")
    dt = run.take_float("dt", default=None)
    phi_rows = [run.take_spec(f"phi_{i}", "constant(0)")(x) for i in range(1, n + 1)]
    phi = TemperatureField(np.stack(phi_rows), grid)
    solver_kwargs = dict(
        theta=run.take_float("theta", default=0.5),
        scheme=run.take_choice("scheme", ("auto", "central", "upwind"), "auto"),
        dt=dt,
        time_steps_per_window=run.take_int("time_steps_per_window", default=16),
        picard_tol=run.take_float("picard_tol", default=1e-10),
        picard_max_iters=run.take_int("picard_max_iters", default=15),
        window_mode=run.take_choice(
            "window_mode", ("continuation", "contraction", "adaptive"),
            "continuation"),
        max_window=run.take_float("max_window", default=None),
        seed_mode=run.take_choice("seed_mode", ("homogeneous", "initial"),
                                  "homogeneous"),
        blowup_ceiling=run.take_float("blowup_ceiling", default=1e12),
        coupled_outer_tol=run.take_float("coupled_outer_tol", default=1e-8),
        coupled_outer_max=run.take_int("coupled_outer_max", default=12),
    )
    run.reject_leftovers()
    try:
        solver = SolverConfig(**solver_kwargs)
    except ValueError as err:
        raise ConfigError(f"[run]: {err}") from None
    if fuel_mode == "coupled" and solver.dt is None:
        raise ConfigError("[run] dt is required when fuel mode is coupled")

    exp = _Section("experiment", tokens["experiment"], defaults)
    experiment = {
        "oracle_integrator": exp.take_choice(
            "oracle_integrator", ("implicit-trapezoid", "explicit-rk4"),
            "implicit-trapezoid"),
        "oracle_dt": exp.take_float("oracle_dt", default=None),
        "oracle_newton_tol": exp.take_float("oracle_newton_tol", default=1e-10),
        "levels": exp.take_int("levels", default=9),
        "front_threshold": exp.take_float("front_threshold", default=None),
    }
    perturb: dict = {}
    for key in list(exp.entries):
        if not key.startswith("perturb_"):
            continue
        value, lineno = exp.entries.pop(key)
        target = key[len("perturb_"):]
        where = f"line {lineno}: [experiment] {key}"
        if target == "u_e":
            try:
                perturb["u_e"] = float(value)
            except ValueError:
                raise ConfigError(f"{where}: not a number: {value!r}") from None
            continue
        mt = re.match(r"^(phi|fuel|a|b|c|d|lam|K|A|q|qhat)_(\d+)$", target)
        if not mt:
            raise ConfigError(f"{where}: unknown perturbation target {target!r}")
        base, idx = mt.group(1), int(mt.group(2))
        spec = parse_function_spec(value, where)
        if base == "qhat":
            if idx not in (1, 2):
                raise ConfigError(f"{where}: qhat index must be 1 or 2")
            perturb[f"qhat{idx}"] = spec(x)
            continue
        rows = n - 1 if base == "q" else n
        if not 1 <= idx <= rows:
            raise ConfigError(f"{where}: layer index {idx} out of range 1..{rows}")
        arr = perturb.setdefault(base, np.zeros((rows, grid.m)))
        arr[idx - 1] += spec(x)
    exp.reject_leftovers()
    experiment["perturb"] = perturb
    if experiment["levels"] < 2:
        raise ConfigError("[experiment] levels must be at least 2")

    return ProblemConfig(grid, n, params, fuel, fuel_mode, phi, T, solver,
                         experiment, defaults, text)


# ---------------------------------------------------------------------------
# trajectory serialization


def write_trajectory(traj: SolutionTrajectory, prefix, fuel_table=None) -> list[str]:
    """One snapshot CSV per stored time plus an index CSV; returns paths written."""
    prefix = Path(prefix)
    n = traj.n if traj.times.size else 0
    if fuel_table is not None:
        fuel_table = np.asarray(fuel_table, dtype=float)
        if fuel_table.shape != traj.values.shape:
            raise ValueError("fuel table must align with the trajectory values")
    paths = []
    index_rows = []
    for k, t in enumerate(traj.times):
        name = f"{prefix.name}_snap_{k:05d}.csv"
        path = prefix.parent / name
        cols = [traj.grid.x] + [traj.values[k, i] for i in range(n)]
        header = ["x"] + [f"u_{i + 1}" for i in range(n)]
        if fuel_table is not None:
            cols += [fuel_table[k, i] for i in range(n)]
            header += [f"y_{i + 1}" for i in range(n)]
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for j in range(traj.grid.m):
                fh.write(",".join(_fmt(col[j]) for col in cols) + "\n")
        norms = layer_l2(traj.values[k], traj.grid.dx)
        index_rows.append((t, name, norms))
        paths.append(str(path))

    index_path = prefix.parent / f"{prefix.name}_index.csv"
    with open(index_path, "w") as fh:
        head = ["time", "filename"] + [f"norm_{i + 1}" for i in range(n)]
        fh.write(",".join(head) + "\n")
        for t, name, norms in index_rows:
            fh.write(",".join([_fmt(t), name] + [_fmt(v) for v in norms]) + "\n")
    paths.append(str(index_path))
    return paths


def read_trajectory(prefix) -> tuple[SolutionTrajectory, np.ndarray | None]:
    """Load what write_trajectory wrote; returns (trajectory, fuel table or None)."""
    prefix = Path(prefix)
    index_path = prefix.parent / f"{prefix.name}_index.csv"
    with open(index_path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    times = []
    filenames = []
    for row in lines[1:]:
        parts = row.split(",")
        times.append(float(parts[0]))
        filenames.append(parts[1])

    values = []
    fuels = []
    grid = None
    has_fuel = False
    for name in filenames:
        with open(prefix.parent / name) as fh:
            rows = [ln.strip() for ln in fh if ln.strip()]
        header = rows[0].split(",")
        n = sum(1 for h in header if h.startswith("u_"))
        has_fuel = any(h.startswith("y_") for h in header)
        data = np.array([[float(v) for v in ln.split(",")] for ln in rows[1:]])
        if grid is None:
            grid = make_grid(data[0, 0], data[-1, 0], data.shape[0])
        values.append(data[:, 1 : 1 + n].T)
        if has_fuel:
            fuels.append(data[:, 1 + n : 1 + 2 * n].T)
    if grid is None:
        raise ValueError(f"{index_path}: empty trajectory with no snapshots")
    traj = SolutionTrajectory(np.array(times), np.stack(values), grid)
    return traj, (np.stack(fuels) if has_fuel else None)


def write_report(report: HypothesisReport, path) -> str:
    path = Path(path)
    path.write_text(report.to_text())
    return str(path)


# ---------------------------------------------------------------------------
# front tracking


def front_threshold_default(traj: SolutionTrajectory, u_e: float) -> float:
    """u_e + half the initial excess over ambient (threshold-crossing front)."""
    sup0 = float(np.max(traj.values[0])) if traj.times.size else u_e
    return u_e + 0.5 * (sup0 - u_e)


def front_track(traj: SolutionTrajectory, u_e: float,
                threshold: float | None = None) -> tuple[float, np.ndarray]:
    """Leftmost crossing x per layer and time; NaN where nothing crosses."""
    thr = front_threshold_default(traj, u_e) if threshold is None else float(threshold)
    k, n = traj.times.size, traj.n
    pos = np.full((k, n), math.nan)
    for kk in range(k):
        for i in range(n):
            hits = np.nonzero(traj.values[kk, i] >= thr)[0]
            if hits.size:
                pos[kk, i] = traj.grid.x[hits[0]]
    return thr, pos


# ---------------------------------------------------------------------------
# manifests and reports


def _resolve_prefix(out_arg: str | None, config_path: str, subcommand: str) -> Path:
    stem = Path(config_path).stem or "run"
    prefix = Path(out_arg) if out_arg else Path(f"{stem}_{subcommand.replace('-', '_')}")
    outdir = os.environ.get("LAYERBURN_OUTDIR")
    if outdir and not prefix.is_absolute():
        prefix = Path(outdir) / prefix
    if prefix.parent and not prefix.parent.exists():
        prefix.parent.mkdir(parents=True, exist_ok=True)
    return prefix


def write_manifest(prefix: Path, subcommand: str, config_path: str,
                   config: ProblemConfig, outputs: list[str]) -> str:
    manifest = {
        "package": "layerburn",
        "version": __version__,
        "subcommand": subcommand,
        "config_file": str(config_path),
        "config_sha256": hashlib.sha256(config.text.encode()).hexdigest(),
        "config_echo": config.text,
        "defaults_filled": config.defaults_filled,
        "resolved_solver": asdict(config.solver),
        "T": config.T,
        "fuel_mode": config.fuel_mode,
        "experiment": {
            key: val for key, val in config.experiment.items() if key != "perturb"
        },
        "perturb_targets": sorted(config.experiment["perturb"]),
        "outputs": [Path(p).name for p in outputs],
    }
    path = prefix.parent / f"{prefix.name}_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return str(path)


def _summary_text(result: SolveResult) -> str:
    lines = ["[run summary]"]
    lines.append(f"windows: {len(result.windows)}")
    lines.append(f"max_picard_iterations: {result.max_iterations}")
    lines.append(f"total_picard_iterations: {result.total_iterations}")
    worst = max((r for w in result.windows for r in w.ratios), default=0.0)
    lines.append(f"worst_gap_ratio: {_fmt(worst)}")
    for key in ("observed", "bound", "kappa", "mu", "beta"):
        lines.append(f"apriori_{key}: {_fmt(result.apriori[key])}")
    lines.append(f"apriori_ok: {str(result.apriori['ok']).lower()}")
    for key in ("kappa", "mu", "beta", "T_prime"):
        val = getattr(result.report, key)
        lines.append(f"audit_{key}: {'n/a' if val is None else _fmt(val)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_simulate(args, config: ProblemConfig, config_path: str) -> int:
    prefix = _resolve_prefix(args.out, config_path, "simulate")
    problem = config.problem()
    fuel_table = None
    if config.fuel_mode == "coupled":
        coupled = solve_coupled(problem, config.T, config.solver)
        traj, result = coupled.trajectory, coupled.last_solve
        fuel_table = coupled.fuel.table
    else:
        result = solve_global(problem, config.T, config.solver)
        traj = result.trajectory
    outputs = write_trajectory(traj, prefix, fuel_table)
    summary_path = prefix.parent / f"{prefix.name}_summary.txt"
    summary_path.write_text(_summary_text(result))
    outputs.append(str(summary_path))
    outputs.append(write_manifest(prefix, "simulate", config_path, config, outputs))
    print(f"simulate: {traj.times.size} snapshots, "
          f"max picard iterations {result.max_iterations}, "
          f"sup norm {_fmt(traj.sup_norm())} -> {prefix}_*")
    return 0


def _cmd_check_hypotheses(args, config: ProblemConfig, config_path: str) -> int:
    prefix = _resolve_prefix(args.out, config_path, "check_hypotheses")
    report = audit_problem(config.problem(), config.T, theta=config.solver.theta,
                           scheme=config.solver.scheme)
    report_path = write_report(report, prefix.parent / f"{prefix.name}_hypotheses.txt")
    write_manifest(prefix, "check-hypotheses", config_path, config, [report_path])
    for key in ("kappa", "mu", "beta", "T_prime"):
        val = getattr(report, key)
        print(f"{key}: {'n/a' if val is None else _fmt(val)}")
    print(f"hypotheses: {'pass' if report.ok else 'FAIL'} -> {report_path}")
    return 0 if report.ok else 2


def _cmd_oracle_compare(args, config: ProblemConfig, config_path: str) -> int:
    h = config.experiment["oracle_dt"] or config.solver.dt
    if h is None:
        raise ConfigError("[experiment] oracle_dt (or [run] dt) is required")
    prefix = _resolve_prefix(args.out, config_path, "oracle_compare")
    problem = config.problem()
    ladder = [4.0 * h, 2.0 * h, h]
    gaps = []
    for dt in ladder:
        mild_cfg = replace(config.solver, dt=dt)
        mild = solve_global(problem, config.T, mild_cfg)
        oracle_cfg = OracleConfig(
            integrator=config.experiment["oracle_integrator"], dt=dt,
            scheme=config.solver.scheme,
            newton_tol=config.experiment["oracle_newton_tol"],
        )
        reference = mol_solve(problem, config.T, oracle_cfg)
        gaps.append(relative_gap(mild.trajectory, reference))
    orders = refinement_orders(gaps)

    csv_path = prefix.parent / f"{prefix.name}_oracle.csv"
    with open(csv_path, "w") as fh:
        fh.write("dt,relative_gap,observed_order\n")
        for j, (dt, gap) in enumerate(zip(ladder, gaps)):
            order = _fmt(orders[j - 1]) if j > 0 else ""
            fh.write(f"{_fmt(dt)},{_fmt(gap)},{order}\n")
    write_manifest(prefix, "oracle-compare", config_path, config, [str(csv_path)])
    print(f"oracle-compare: finest relative gap {_fmt(gaps[-1])}, "
          f"orders {', '.join(_fmt(o) for o in orders)} -> {csv_path}")
    return 0


def _cmd_dependence_study(args, config: ProblemConfig, config_path: str) -> int:
    perturb = config.experiment["perturb"]
    if not perturb:
        raise ConfigError("[experiment] needs at least one perturb_* direction")
    if config.solver.dt is None:
        raise ConfigError("[run] dt is required for dependence studies")
    prefix = _resolve_prefix(args.out, config_path, "dependence_study")
    levels = 2.0 ** -np.arange(config.experiment["levels"], dtype=float)
    spec = PerturbationSpec(perturb, levels)
    study = dependence_study(config.problem(), config.T, spec, config.solver)

    csv_path = prefix.parent / f"{prefix.name}_dependence.csv"
    with open(csv_path, "w") as fh:
        fh.write("level,s,delta,ratio,bound,within_bound,above_floor,skipped\n")
        prev = None
        for j, lv in enumerate(study.levels):
            ratio = ""
            if lv.skipped is None and prev is not None and prev > 0:
                ratio = _fmt(lv.delta / prev)
            prev = lv.delta if lv.skipped is None else None
            fh.write(",".join([
                str(j), _fmt(lv.level),
                "" if lv.skipped else _fmt(lv.delta),
                ratio,
                "" if lv.skipped else _fmt(lv.bound),
                str(lv.within_bound).lower(),
                str(lv.above_floor).lower(),
                (lv.skipped or "").replace(",", ";"),
            ]) + "\n")
    write_manifest(prefix, "dependence-study", config_path, config, [str(csv_path)])
    n_ok = sum(1 for lv in study.levels if lv.skipped is None)
    print(f"dependence-study: {n_ok}/{len(study.levels)} levels solved, "
          f"decreasing={str(study.decreasing).lower()}, "
          f"within_bound={str(study.all_within_bound).lower()} -> {csv_path}")
    return 0


def _cmd_front_track(args, config: ProblemConfig, config_path: str) -> int:
    prefix = _resolve_prefix(args.out, config_path, "front_track")
    problem = config.problem()
    if config.fuel_mode == "coupled":
        traj = solve_coupled(problem, config.T, config.solver).trajectory
    else:
        traj = solve_global(problem, config.T, config.solver).trajectory
    thr, pos = front_track(traj, config.params.u_e,
                           config.experiment["front_threshold"])
    csv_path = prefix.parent / f"{prefix.name}_front.csv"
    with open(csv_path, "w") as fh:
        fh.write("time," + ",".join(f"front_{i + 1}" for i in range(traj.n)) + "\n")
        for k, t in enumerate(traj.times):
            fh.write(",".join([_fmt(t)] + [_fmt(v) for v in pos[k]]) + "\n")
    write_manifest(prefix, "front-track", config_path, config, [str(csv_path)])
    print(f"front-track: threshold {_fmt(thr)} -> {csv_path}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing and dispatch


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


_HANDLERS = {
    "simulate": _cmd_simulate,
    "check-hypotheses": _cmd_check_hypotheses,
    "oracle-compare": _cmd_oracle_compare,
    "dependence-study": _cmd_dependence_study,
    "front-track": _cmd_front_track,
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="layerburn",
                     description="layered porous-medium combustion toolbox")
    sub = parser.add_subparsers(dest="command")
    for name, help_text in (
        ("simulate", "solve the configured problem and write trajectory CSVs"),
        ("check-hypotheses", "run the admissibility audit and report constants"),
        ("oracle-compare", "compare the solver against the method-of-lines oracle"),
        ("dependence-study", "sweep perturbation levels and check the response bound"),
        ("front-track", "solve and tabulate per-layer front positions"),
    ):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("config", help="path to a config file")
        sp.add_argument("--out", default=None,
                        help="output path prefix (default: derived from config name)")
    return parser


def cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1

    try:
        text = Path(args.config).read_text()
    except OSError as err:
        print(f"error: cannot read config: {err}", file=sys.stderr)
        return 4
    try:
        config = parse_config(text)
        return _HANDLERS[args.command](args, config, args.config)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except AuditError as err:
        print(f"audit failure:\n{err.report.to_text()}", file=sys.stderr)
        return 2
    except (SolverError, NewtonError, StabilityError, PowerIterationError) as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return 3
    except ValueError as err:
        # Late validation errors (lattice mismatch, bad experiment values).
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"i/o failure: {err}", file=sys.stderr)
        return 4


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
