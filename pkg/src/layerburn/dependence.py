"""Continuous-dependence studies: response of the solution to data changes.

A perturbation direction is applied to chosen data fields (coefficients,
exchange profiles, fuel, initial state) at a ladder of scales s_j = 2^{-j}.
For each scale the study measures the solution displacement

    delta_j = sup_t || u_j(t) - u(t) ||

and the four data-difference terms that drive it,

    d0 = sup_t || U_j(t,0) (phi_j - phi) ||
    d1 = sup_t || (U_j(t,0) - U(t,0)) phi ||
    d3 = sup_t || int_0^t U_j(t,s) [f_j(s, u(s)) - f(s, u(s))] ds ||
    d4 = sup_t || int_0^t (U_j(t,s) - U(t,s)) f(s, u(s)) ds ||

all evaluated along the unperturbed solution, so they are data terms, not
solutions of the perturbed problem.  The displacement obeys the Gronwall
closure delta_j <= (d0+d1+d3+d4) * (1 + T*c*e^{cT}) with c = 1 + e^{beta T};
halving s halves the data terms, so successive deltas should halve too until
they sink below the solver-noise floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .evolution import GriddedFuel, assemble_generator, build_propagator, generator_apply
from .grid import SolutionTrajectory, TemperatureField, layer_l2, sup_metric
from .mild_solver import (
    AuditError,
    BlowUpError,
    PicardDivergenceError,
    SolveResult,
    SolverConfig,
    solve_global,
)
from .model import PerturbedFuel, Problem, central_gradient, source_f

_FIELD_TARGETS = ("a", "b", "c", "d", "lam", "K", "A", "q", "qhat1", "qhat2")


@dataclass
class PerturbationSpec:
    """Named perturbation directions and the scale ladder to sweep.

    Directions are full-shape arrays for parameter fields ("a", "b", "c", "d",
    "lam", "K", "A", "q", "qhat1", "qhat2"), an (n, m) array for "fuel" or
    "phi", and a plain float for "u_e".  "c_x" is not a target: it is
    recomputed from the perturbed c so the pair stays consistent.
    """

    directions: dict
    levels: np.ndarray = field(default_factory=lambda: 2.0 ** -np.arange(9, dtype=float))

    def __post_init__(self):
        self.levels = np.asarray(self.levels, dtype=float)
        if self.levels.size < 2 or np.any(self.levels <= 0):
            raise ValueError("need at least two positive perturbation levels")
        if not self.directions:
            raise ValueError("at least one perturbation direction is required")
        for name in self.directions:
            if name == "c_x":
                raise ValueError("perturb c, not c_x; the gradient is recomputed")
            if name not in _FIELD_TARGETS + ("fuel", "phi", "u_e"):
                raise ValueError(f"unknown perturbation target {name!r}")


def build_perturbed(problem: Problem, directions: dict, s: float) -> Problem:
    """Problem with each targeted field shifted by s times its direction."""
    p = problem.params
    fuel = problem.fuel
    phi = problem.phi
    updates = {}
    for name, dirn in directions.items():
        if name == "fuel":
            fuel = PerturbedFuel(problem.fuel, np.asarray(dirn, dtype=float), s)
        elif name == "phi":
            phi = TemperatureField(
                problem.phi.values + s * np.asarray(dirn, dtype=float), problem.grid
            )
        elif name == "u_e":
            updates["u_e"] = p.u_e + s * float(dirn)
        elif name == "c":
            c_new = p.c + s * np.asarray(dirn, dtype=float)
            updates["c"] = c_new
            updates["c_x"] = central_gradient(c_new, problem.grid.dx)
        elif name in _FIELD_TARGETS:
            updates[name] = getattr(p, name) + s * np.asarray(dirn, dtype=float)
        else:
            raise ValueError(f"unknown perturbation target {name!r}")
    params = replace(p, **updates) if updates else p
    return Problem(problem.grid, params, fuel, phi)


# ---------------------------------------------------------------------------
# data-difference terms along the base solution


def _difference_terms(base_problem: Problem, pert_problem: Problem,
                      base_traj: SolutionTrajectory, cfg: SolverConfig) -> dict:
    """d0, d1, d3, d4 accumulated on the base trajectory's time lattice."""
    grid = base_problem.grid
    dx = grid.dx
    pb, pj = base_problem.params, pert_problem.params
    fb = GriddedFuel(base_problem.fuel, grid)
    fj = GriddedFuel(pert_problem.fuel, grid)
    times = base_traj.times
    K = times.size - 1

    dphi = pert_problem.phi.values - base_problem.phi.values
    e0 = dphi.copy()
    hb = base_problem.phi.values.copy()
    hp = hb.copy()
    acc3 = np.zeros_like(hb)
    acc_p = np.zeros_like(hb)
    acc_b = np.zeros_like(hb)

    u0 = base_traj.values[0]
    f_prev = source_f(pb, fb.sample(grid, float(times[0])), u0)
    fj_prev = source_f(pj, fj.sample(grid, float(times[0])), u0)

    d0 = float(np.max(layer_l2(e0, dx)))
    d1 = 0.0
    d3 = 0.0
    d4 = 0.0
    for k in range(K):
        t0, t1 = float(times[k]), float(times[k + 1])
        half = 0.5 * (t1 - t0)
        prop_b = build_propagator(pb, fb, t0, t1, cfg.theta, cfg.scheme)
        prop_j = build_propagator(pj, fj, t0, t1, cfg.theta, cfg.scheme)
        u_next = base_traj.values[k + 1]
        f_next = source_f(pb, fb.sample(grid, t1), u_next)
        fj_next = source_f(pj, fj.sample(grid, t1), u_next)

        e0 = prop_j.apply_values(e0)
        hb = prop_b.apply_values(hb)
        hp = prop_j.apply_values(hp)
        acc3 = prop_j.apply_values(acc3 + half * (fj_prev - f_prev)) \
            + half * (fj_next - f_next)
        acc_p = prop_j.apply_values(acc_p + half * f_prev) + half * f_next
        acc_b = prop_b.apply_values(acc_b + half * f_prev) + half * f_next

        d0 = max(d0, float(np.max(layer_l2(e0, dx))))
        d1 = max(d1, float(np.max(layer_l2(hp - hb, dx))))
        d3 = max(d3, float(np.max(layer_l2(acc3, dx))))
        d4 = max(d4, float(np.max(layer_l2(acc_p - acc_b, dx))))
        f_prev, fj_prev = f_next, fj_next
    total = d0 + d1 + d3 + d4
    return {"d0": d0, "d1": d1, "d3": d3, "d4": d4, "total": total}


def gronwall_factor(beta: float, T: float) -> float:
    """Closure constant (1 + T*c*e^{cT}) with c = 1 + e^{beta T}."""
    c = 1.0 + math.exp(beta * T)
    return 1.0 + T * c * math.exp(c * T)


# ---------------------------------------------------------------------------
# the study


@dataclass
class LevelResult:
    level: float
    delta: float
    terms: dict
    bound: float
    within_bound: bool
    above_floor: bool
    skipped: str | None = None


@dataclass
class DependenceStudy:
    base: SolveResult
    levels: list[LevelResult]
    ratios: list[float]
    crossover: int | None
    noise_floor: float

    @property
    def deltas(self) -> list[float]:
        return [lv.delta for lv in self.levels if lv.skipped is None]

    @property
    def decreasing(self) -> bool:
        ds = [lv.delta for lv in self.levels if lv.skipped is None and lv.above_floor]
        return all(b < a for a, b in zip(ds, ds[1:]))

    @property
    def all_within_bound(self) -> bool:
        return all(lv.within_bound for lv in self.levels
                   if lv.skipped is None and lv.above_floor)


def dependence_study(problem: Problem, T: float, spec: PerturbationSpec,
                     cfg: SolverConfig | None = None) -> DependenceStudy:
    """Sweep the perturbation ladder and compare responses against the bound.

    cfg.dt must be set: base and perturbed runs share one time lattice so the
    displacement sup runs over identical nodes.  Levels whose perturbed
    problem fails its audit (or whose solve diverges) are recorded as skipped
    rather than aborting the sweep.
    """
    cfg = cfg or SolverConfig()
    if cfg.dt is None:
        raise ValueError("dependence studies need cfg.dt for a shared lattice")
    base = solve_global(problem, T, cfg)
    beta = base.report.beta
    factor = gronwall_factor(beta, T)
    noise_floor = 100.0 * cfg.picard_tol * (1.0 + base.trajectory.sup_norm())

    out: list[LevelResult] = []
    for s in spec.levels:
        pert = build_perturbed(problem, spec.directions, float(s))
        try:
            res = solve_global(pert, T, cfg)
        except (AuditError, BlowUpError, PicardDivergenceError) as err:
            out.append(LevelResult(float(s), math.nan, {}, math.nan, False, False,
                                   skipped=f"{type(err).__name__}: {err}"))
            continue
        delta = sup_metric(res.trajectory, base.trajectory)
        terms = _difference_terms(problem, pert, base.trajectory, cfg)
        bound = terms["total"] * factor
        out.append(LevelResult(
            float(s), delta, terms, bound,
            within_bound=bool(delta <= bound),
            above_floor=bool(delta >= noise_floor),
        ))

    ratios: list[float] = []
    clean = [lv for lv in out if lv.skipped is None]
    for a, b in zip(clean, clean[1:]):
        if a.above_floor and b.above_floor and a.delta > 0:
            ratios.append(b.delta / a.delta)
    crossover = next((i for i, lv in enumerate(out)
                      if lv.skipped is None and not lv.above_floor), None)
    return DependenceStudy(base, out, ratios, crossover, noise_floor)


def symmetric_response(problem: Problem, T: float, spec: PerturbationSpec,
                       s: float, cfg: SolverConfig | None = None) -> dict:
    """Antithetic probe at +s and -s; near-linear response makes them cancel."""
    cfg = cfg or SolverConfig()
    if cfg.dt is None:
        raise ValueError("symmetric probes need cfg.dt for a shared lattice")
    base = solve_global(problem, T, cfg)
    up = solve_global(build_perturbed(problem, spec.directions, s), T, cfg)
    dn = solve_global(build_perturbed(problem, spec.directions, -s), T, cfg)
    dx = problem.grid.dx
    dev_up = up.trajectory.values - base.trajectory.values
    dev_dn = dn.trajectory.values - base.trajectory.values
    odd = float(np.max(layer_l2(0.5 * (dev_up - dev_dn), dx)))
    even = float(np.max(layer_l2(0.5 * (dev_up + dev_dn), dx)))
    delta_plus = float(np.max(layer_l2(dev_up, dx)))
    delta_minus = float(np.max(layer_l2(dev_dn, dx)))
    return {
        "delta_plus": delta_plus,
        "delta_minus": delta_minus,
        "ratio": delta_plus / delta_minus if delta_minus > 0 else math.inf,
        "odd_part": odd,
        "even_part": even,
        "asymmetry": even / odd if odd > 0 else math.inf,
    }


def operator_convergence_probe(problem: Problem, T: float, spec: PerturbationSpec,
                               cfg: SolverConfig | None = None, *, fields=None,
                               n_fields: int = 3, seed: int = 0) -> dict:
    """Generator and propagator differences on probe fields, per level.

    Returns {"generator": [...], "propagator": [...]}: per level,
    sup ||(L_j - L) psi|| over probe times and sup_t ||(U_j - U)(t, 0) psi||
    over the lattice.  Both must fall linearly with s; this isolates the
    operator-convergence half of the dependence story from the source terms.
    """
    cfg = cfg or SolverConfig()
    if cfg.dt is None:
        raise ValueError("operator probes need cfg.dt for a shared lattice")
    grid = problem.grid
    p = problem.params
    n = p.n
    if fields is None:
        rng = np.random.default_rng(seed)
        fields = [rng.standard_normal((n, grid.m)) for _ in range(n_fields)]
    total = int(round(T / cfg.dt))
    times = cfg.dt * np.arange(total + 1)
    probe_times = (0.0, 0.5 * T, T)
    fb = GriddedFuel(problem.fuel, grid)

    gen_sups: list[float] = []
    prop_sups: list[float] = []
    for s in spec.levels:
        pert = build_perturbed(problem, spec.directions, float(s))
        fj = GriddedFuel(pert.fuel, grid)
        worst_gen = 0.0
        for t in probe_times:
            tri_b = assemble_generator(p, fb, float(t), cfg.scheme)
            tri_j = assemble_generator(pert.params, fj, float(t), cfg.scheme)
            for psi in fields:
                diff = generator_apply(tri_j, psi) - generator_apply(tri_b, psi)
                worst_gen = max(worst_gen, float(np.max(layer_l2(diff, grid.dx))))
        worst_prop = 0.0
        for psi in fields:
            vb = psi.copy()
            vj = psi.copy()
            for k in range(total):
                t0, t1 = float(times[k]), float(times[k + 1])
                vb = build_propagator(p, fb, t0, t1, cfg.theta, cfg.scheme).apply_values(vb)
                vj = build_propagator(pert.params, fj, t0, t1, cfg.theta,
                                      cfg.scheme).apply_values(vj)
                worst_prop = max(worst_prop, float(np.max(layer_l2(vj - vb, grid.dx))))
        gen_sups.append(worst_gen)
        prop_sups.append(worst_prop)
    return {"generator": gen_sups, "propagator": prop_sups}
