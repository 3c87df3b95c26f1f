"""Config grammar, CSV round-trips, front tracking, and the CLI exit-code
contract, exercised end to end through cli()."""

import json
import math
from textwrap import dedent

import numpy as np
import pytest

from layerburn.grid import SolutionTrajectory, make_grid
from layerburn.hypothesis import audit_problem
from layerburn.io_cli import (
    ConfigError,
    FunctionSpec,
    cli,
    front_threshold_default,
    front_track,
    parse_config,
    parse_function_spec,
    read_trajectory,
    write_report,
    write_trajectory,
)

BASE_CFG = dedent("""\
    [grid]
    x_min = -6
    x_max = 6
    m = 81

    [layers]
    n = 2
    b_1 = constant(0.3)
    b_2 = constant(0.3)
    d_1 = bump(0, 0.4, 0, 2)
    K_1 = constant(0.2)
    K_2 = constant(0.2)
    A_1 = constant(1)
    A_2 = constant(1)
    q_1 = constant(0.15)
    E = 1

    [fuel]
    y_1 = constant(0.8)
    y_2 = logistic_front(0, 1, 1)

    [run]
    T = 0.2
    dt = 0.01
    phi_1 = bump(0, 1.2, 0, 1)
    """)


def _write(tmp_path, text, name="case.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# ---------------------------------------------------------------------------
# function specs


def test_function_spec_shapes():
    x = np.linspace(-3.0, 3.0, 7)
    const = parse_function_spec("constant(2.5)", "here")
    np.testing.assert_array_equal(const(x), 2.5)
    bump = parse_function_spec("bump(1, 2, 0.5, 1.5)", "here")
    np.testing.assert_allclose(bump(x), 1.0 + 2.0 * np.exp(-(((x - 0.5) / 1.5) ** 2)))
    step = parse_function_spec("tanh_step(-1, 3, 0, 2)", "here")
    assert step(np.array([0.0]))[0] == pytest.approx(1.0)  # midpoint
    assert step(np.array([-50.0]))[0] == pytest.approx(-1.0)
    assert step(np.array([50.0]))[0] == pytest.approx(3.0)


def test_function_spec_render_round_trip():
    spec = FunctionSpec("bump", (0.0, 1.2, 0.0, 0.28284271247461906))
    again = parse_function_spec(spec.render(), "here")
    assert again == spec


@pytest.mark.parametrize("text,msg", [
    ("gaussian(1)", "unknown function"),
    ("bump(1, 2)", "takes 4 arguments"),
    ("bump(1, 2, 3, 0)", "width must be positive"),
    ("constant(x)", "non-numeric"),
    ("constant 1", "expected name"),
])
def test_function_spec_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_function_spec(text, "here")


# ---------------------------------------------------------------------------
# config parsing


def test_minimal_config_fills_defaults():
    cfg = parse_config(BASE_CFG)
    assert cfg.n == 2
    assert cfg.T == 0.2
    assert cfg.solver.dt == 0.01
    assert cfg.solver.window_mode == "continuation"
    assert cfg.solver.blowup_ceiling == 1e12
    # unset fields fall back and the fallback is recorded
    assert np.all(cfg.params.a == 1.0)
    assert np.all(cfg.params.lam == 1.0)
    assert any("[layers] a_1" in line for line in cfg.defaults_filled)
    assert any("[run] phi_2" in line for line in cfg.defaults_filled)
    prob = cfg.problem()
    assert prob.phi.values[1].max() == 0.0
    assert prob.phi.values[0].max() == pytest.approx(1.2)
    # advection gradient is derived, not configurable
    np.testing.assert_array_equal(cfg.params.c_x, 0.0)


def test_config_accepts_all_solver_knobs():
    text = BASE_CFG + dedent("""\
        theta = 1
        scheme = upwind
        window_mode = adaptive
        seed_mode = initial
        picard_tol = 1e-8
        picard_max_iters = 30
        blowup_ceiling = 1e6
        max_window = 0.05
        time_steps_per_window = 8
    """)
    cfg = parse_config(text)
    s = cfg.solver
    assert (s.theta, s.scheme, s.window_mode, s.seed_mode) == \
        (1.0, "upwind", "adaptive", "initial")
    assert s.picard_tol == 1e-8 and s.picard_max_iters == 30
    assert s.blowup_ceiling == 1e6 and s.max_window == 0.05
    assert s.time_steps_per_window == 8


def test_experiment_perturbations_are_assembled():
    text = BASE_CFG + dedent("""\
        [experiment]
        levels = 4
        perturb_phi_1 = bump(0, 0.1, 0, 2)
        perturb_a_2 = constant(0.05)
        perturb_qhat_1 = bump(0, 0.02, 0, 1)
        perturb_u_e = 0.3
    """)
    cfg = parse_config(text)
    pert = cfg.experiment["perturb"]
    assert set(pert) == {"phi", "a", "qhat1", "u_e"}
    assert pert["phi"].shape == (2, 81)
    assert np.all(pert["phi"][1] == 0.0) and pert["phi"][0].max() > 0
    assert np.all(pert["a"][0] == 0.0) and np.all(pert["a"][1] == 0.05)
    assert pert["qhat1"].shape == (81,)
    assert pert["u_e"] == 0.3
    assert cfg.experiment["levels"] == 4


@pytest.mark.parametrize("mangle,msg", [
    (lambda t: t.replace("[grid]", "[mesh]"), "unknown section"),
    (lambda t: t.replace("m = 81", "m = 81\nm = 91"), "duplicate key"),
    (lambda t: t.replace("m = 81", "nodes = 81"), "missing required key"),
    (lambda t: t + "typo_key = 1\n", "unknown key"),
    (lambda t: "stray = 1\n" + t, "outside any"),
    (lambda t: t.replace("n = 2", "n = 1"), "at least 2 layers"),
    (lambda t: t.replace("T = 0.2", "T = -1"), "T must be positive"),
    (lambda t: t + "lam_1 = constant(0)\n".replace("lam_1", "phi_9"), "unknown key"),
    (lambda t: t.replace("y_1 = constant(0.8)", "y_1 = constant(1.5)"),
     r"fuel level must lie in \[0, 1\]"),
    (lambda t: t.replace("E = 1", "E = -2"), "E must be positive"),
    (lambda t: t.replace("q_1 = constant(0.15)", "q_1 = constant(-0.1)"),
     "nonnegative"),
    (lambda t: t.replace("[run]", "[run]\nbogus\n"), "expected key = value"),
])
def test_config_errors_are_located(mangle, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(mangle(BASE_CFG))


def test_positivity_failures_name_the_field():
    bad = BASE_CFG.replace("E = 1", "E = 1\nlam_1 = constant(0)")
    with pytest.raises(ConfigError, match="lam_1 must be strictly positive"):
        parse_config(bad)
    bad = BASE_CFG.replace("E = 1", "E = 1\na_2 = tanh_step(-1, 1, 0, 1)")
    with pytest.raises(ConfigError, match="a_2 must be strictly positive"):
        parse_config(bad)


def test_coupled_mode_requires_dt():
    text = BASE_CFG.replace("[fuel]", "[fuel]\nmode = coupled")
    text = text.replace("dt = 0.01\n", "")
    with pytest.raises(ConfigError, match="dt is required"):
        parse_config(text)


# ---------------------------------------------------------------------------
# serialization round-trips


def _toy_trajectory():
    grid = make_grid(0.0, 1.0, 11)
    times = np.array([0.0, 0.05, 0.1])
    rng = np.random.default_rng(7)
    values = rng.standard_normal((3, 2, 11))
    return SolutionTrajectory(times, values, grid)


def test_trajectory_round_trip(tmp_path):
    traj = _toy_trajectory()
    paths = write_trajectory(traj, tmp_path / "toy")
    assert len(paths) == 4  # three snapshots plus the index
    back, fuel = read_trajectory(tmp_path / "toy")
    assert fuel is None
    np.testing.assert_array_equal(back.times, traj.times)
    np.testing.assert_array_equal(back.values, traj.values)
    assert back.grid == traj.grid


def test_trajectory_round_trip_with_fuel(tmp_path):
    traj = _toy_trajectory()
    table = np.random.default_rng(8).uniform(0.0, 1.0, traj.values.shape)
    write_trajectory(traj, tmp_path / "toy", table)
    back, fuel = read_trajectory(tmp_path / "toy")
    np.testing.assert_array_equal(fuel, table)
    np.testing.assert_array_equal(back.values, traj.values)
    with pytest.raises(ValueError, match="align"):
        write_trajectory(traj, tmp_path / "bad", table[:, :, :5])


def test_report_file_contains_the_audit(tmp_path):
    prob = parse_config(BASE_CFG).problem()
    report = audit_problem(prob, 0.2)
    path = write_report(report, tmp_path / "report.txt")
    text = (tmp_path / "report.txt").read_text()
    assert "[H1]" in text and "T_prime" in text
    assert path.endswith("report.txt")


# ---------------------------------------------------------------------------
# front tracking


def test_front_track_finds_leftmost_crossing():
    grid = make_grid(0.0, 1.0, 11)
    vals = np.zeros((2, 2, 11))
    vals[0, 0, 7:] = 1.0          # front at x = 0.7
    vals[1, 0, 4:] = 1.0          # moved left to x = 0.4
    vals[:, 1, :] = 0.1           # never crosses
    traj = SolutionTrajectory(np.array([0.0, 1.0]), vals, grid)
    thr, pos = front_track(traj, u_e=0.0, threshold=0.5)
    assert thr == 0.5
    assert pos[0, 0] == pytest.approx(0.7)
    assert pos[1, 0] == pytest.approx(0.4)
    assert math.isnan(pos[0, 1]) and math.isnan(pos[1, 1])


def test_front_threshold_default_is_half_excess():
    grid = make_grid(0.0, 1.0, 11)
    vals = np.full((1, 2, 11), 0.2)
    vals[0, 0, 5] = 1.0
    traj = SolutionTrajectory(np.array([0.0]), vals, grid)
    assert front_threshold_default(traj, 0.2) == pytest.approx(0.6)
    thr, _ = front_track(traj, 0.2)
    assert thr == pytest.approx(0.6)


# ---------------------------------------------------------------------------
# CLI: exit codes and artifacts


def test_cli_simulate_writes_everything(tmp_path, capsys):
    cfg = _write(tmp_path, BASE_CFG)
    code = cli(["simulate", cfg, "--out", str(tmp_path / "run")])
    assert code == 0
    assert (tmp_path / "run_index.csv").exists()
    assert (tmp_path / "run_snap_00000.csv").exists()
    assert (tmp_path / "run_snap_00020.csv").exists()
    summary = (tmp_path / "run_summary.txt").read_text()
    assert "apriori_ok: true" in summary
    assert "worst_gap_ratio:" in summary
    manifest = json.loads((tmp_path / "run_manifest.json").read_text())
    assert manifest["package"] == "layerburn"
    assert manifest["subcommand"] == "simulate"
    assert manifest["resolved_solver"]["dt"] == 0.01
    assert "run_summary.txt" in manifest["outputs"]
    out = capsys.readouterr().out
    assert "simulate: 21 snapshots" in out

    back, fuel = read_trajectory(tmp_path / "run")
    assert fuel is None
    assert back.times.size == 21


def test_cli_simulate_coupled_writes_fuel(tmp_path):
    text = BASE_CFG.replace("[fuel]", "[fuel]\nmode = coupled")
    cfg = _write(tmp_path, text)
    assert cli(["simulate", cfg, "--out", str(tmp_path / "coup")]) == 0
    back, fuel = read_trajectory(tmp_path / "coup")
    assert fuel is not None and fuel.shape == back.values.shape
    assert fuel.min() >= 0.0 and fuel.max() <= 1.0


def test_cli_check_hypotheses_pass_and_fail(tmp_path, capsys):
    good = _write(tmp_path, BASE_CFG, "good.cfg")
    assert cli(["check-hypotheses", good, "--out", str(tmp_path / "ok")]) == 0
    assert "pass" in capsys.readouterr().out
    assert (tmp_path / "ok_hypotheses.txt").exists()

    bad_text = BASE_CFG.replace("q_1 = constant(0.15)",
                                "q_1 = constant(0.15)\nqhat_1 = constant(0.2)")
    bad = _write(tmp_path, bad_text, "bad.cfg")
    assert cli(["check-hypotheses", bad, "--out", str(tmp_path / "no")]) == 2
    assert "FAIL" in capsys.readouterr().out


def test_cli_oracle_compare(tmp_path, capsys):
    cfg = _write(tmp_path, BASE_CFG)
    assert cli(["oracle-compare", cfg, "--out", str(tmp_path / "orc")]) == 0
    rows = (tmp_path / "orc_oracle.csv").read_text().strip().splitlines()
    assert rows[0] == "dt,relative_gap,observed_order"
    assert len(rows) == 4
    assert "oracle-compare: finest relative gap" in capsys.readouterr().out


def test_cli_dependence_study(tmp_path, capsys):
    text = BASE_CFG + dedent("""\
        [experiment]
        levels = 3
        perturb_phi_1 = bump(0, 0.1, 0, 2)
    """)
    cfg = _write(tmp_path, text)
    assert cli(["dependence-study", cfg, "--out", str(tmp_path / "dep")]) == 0
    rows = (tmp_path / "dep_dependence.csv").read_text().strip().splitlines()
    assert len(rows) == 4
    assert "decreasing=true" in capsys.readouterr().out

    plain = _write(tmp_path, BASE_CFG, "plain.cfg")
    assert cli(["dependence-study", plain]) == 1  # no perturb directions


def test_cli_front_track(tmp_path):
    cfg = _write(tmp_path, BASE_CFG)
    assert cli(["front-track", cfg, "--out", str(tmp_path / "ft")]) == 0
    rows = (tmp_path / "ft_front.csv").read_text().strip().splitlines()
    assert rows[0] == "time,front_1,front_2"
    assert len(rows) == 22


def test_cli_exit_codes(tmp_path, capsys):
    assert cli([]) == 1
    assert cli(["simulate"]) == 1  # missing config argument
    assert cli(["simulate", str(tmp_path / "missing.cfg")]) == 4
    bad = _write(tmp_path, BASE_CFG.replace("[grid]", "[mesh]"), "bad.cfg")
    assert cli(["simulate", bad]) == 1

    audit_fail = _write(tmp_path, BASE_CFG.replace(
        "q_1 = constant(0.15)", "q_1 = constant(0.15)\nqhat_1 = constant(0.2)"),
        "audit.cfg")
    assert cli(["simulate", audit_fail, "--out", str(tmp_path / "a")]) == 2

    blow = _write(tmp_path, BASE_CFG + "blowup_ceiling = 0.5\n", "blow.cfg")
    assert cli(["simulate", blow, "--out", str(tmp_path / "b")]) == 3

    lattice = _write(tmp_path, BASE_CFG.replace("dt = 0.01", "dt = 0.03"),
                     "lat.cfg")
    assert cli(["simulate", lattice, "--out", str(tmp_path / "c")]) == 1
    capsys.readouterr()


def test_cli_outdir_redirects_relative_prefixes(tmp_path, monkeypatch):
    cfg = _write(tmp_path, BASE_CFG)
    monkeypatch.setenv("LAYERBURN_OUTDIR", str(tmp_path / "nested"))
    assert cli(["simulate", cfg, "--out", "redir"]) == 0
    assert (tmp_path / "nested" / "redir_index.csv").exists()
    assert (tmp_path / "nested" / "redir_manifest.json").exists()
