"""Arrhenius nonlinearity, coefficient fields, the source term, fuel models,
and the dimensional reduction pipeline."""

import numpy as np
import pytest

from layerburn.grid import TemperatureField, l2_norm, layer_l2, make_grid
from layerburn.model import (
    ConstantFuel,
    FuelField,
    GaussianDecayFuel,
    LayerParams,
    LogisticFrontFuel,
    PrescribedFuel,
    TabulatedFuel,
    arrhenius_g,
    arrhenius_g_prime,
    central_gradient,
    coefficient_fields,
    fuel_prescribed,
    fuel_step,
    g_prime_sup,
    nondimensionalize,
    raw_params,
    smooth_bump,
    source_f,
)

# ---------------------------------------------------------------------------
# Arrhenius factor


def test_g_vanishes_for_nonpositive_temperature():
    assert arrhenius_g(-5.0, 1.0) == 0.0
    assert arrhenius_g(0.0, 1.0) == 0.0
    out = arrhenius_g(np.array([-2.0, 0.0, 1.0]), 1.0)
    np.testing.assert_allclose(out, [0.0, 0.0, np.exp(-1.0)])


def test_g_at_activation_temperature():
    for E in (1.0, 0.5, 7.3):
        np.testing.assert_allclose(arrhenius_g(E, E), np.exp(-1.0), rtol=1e-15)


def test_g_saturates_toward_one():
    for E in (1.0, 3.0):
        v = arrhenius_g(1e6 * E, E)
        assert v >= 0.999999
        assert v < 1.0  # supremum 1 is never attained at finite theta


def test_g_monotone_bounded_and_continuous_at_zero():
    E = 1.0
    theta = np.concatenate([np.linspace(-5.0, 0.0, 201),
                            np.geomspace(1e-6, 100.0 * E, 5000)])
    vals = arrhenius_g(theta, E)
    assert np.all(np.diff(vals) >= 0.0)
    assert vals.min() == 0.0 and vals.max() < 1.0
    # right limit at 0 is 0: essentially-singular decay kills the exponential
    assert arrhenius_g(1e-6, E) < 1e-300


def test_g_prime_zero_for_nonpositive_temperature():
    assert arrhenius_g_prime(-1.0, 2.0) == 0.0
    assert arrhenius_g_prime(0.0, 2.0) == 0.0


def test_g_prime_peak_location_and_value():
    # maximize (E/theta^2) e^{-E/theta}: stationary at theta = E/2
    for E in (1.0, 2.5):
        peak = arrhenius_g_prime(E / 2.0, E)
        np.testing.assert_allclose(peak, 4.0 * np.exp(-2.0) / E, rtol=1e-14)
        np.testing.assert_allclose(g_prime_sup(E), peak, rtol=1e-14)
    np.testing.assert_allclose(arrhenius_g_prime(0.5, 1.0), 0.541341, atol=1e-6)


def test_g_prime_sup_matches_dense_scan():
    E = 1.0
    theta = np.geomspace(1e-3, 100.0 * E, 200001)
    scan = arrhenius_g_prime(theta, E).max()
    assert abs(scan - g_prime_sup(E)) <= 1e-6


def test_theta_times_g_lipschitz_constant():
    # |d/dtheta (theta g)| = |g + theta g'| stays below 1/e + 1 everywhere
    E = 1.0
    theta = np.geomspace(1e-3, 1e4, 100000)
    vals = np.abs(arrhenius_g(theta, E) + theta * arrhenius_g_prime(theta, E))
    assert vals.max() <= np.exp(-1.0) + 1.0


def test_g_prime_near_singular_temperatures_stay_finite():
    out = arrhenius_g_prime(np.array([1e-300, 1e-10, 1e300]), 1.0)
    assert np.all(np.isfinite(out))
    assert out[0] == 0.0 and out[1] == 0.0


# ---------------------------------------------------------------------------
# coefficient fields


def _fuel_ones(n, m):
    return FuelField(np.ones((n, m)))


def test_coefficients_without_fuel_capacity():
    g = make_grid(0.0, 1.0, 11)
    p = LayerParams.constants(g, 2, a=2.0, b=0.0, c=3.0, lam=4.0)
    alpha, beta = coefficient_fields(p, _fuel_ones(2, 11))
    np.testing.assert_allclose(alpha, 2.0)
    np.testing.assert_allclose(beta, 1.5)


def test_coefficients_hand_case():
    g = make_grid(0.0, 1.0, 11)
    p = LayerParams.constants(g, 2, a=1.0, b=1.0, c=3.0, lam=2.0)
    alpha, beta = coefficient_fields(p, _fuel_ones(2, 11))
    np.testing.assert_allclose(alpha, 1.0)
    np.testing.assert_allclose(beta, 1.5)


def test_diffusion_decreases_with_fuel():
    g = make_grid(0.0, 1.0, 21)
    p = LayerParams.constants(g, 2, a=1.0, b=0.7, lam=1.3)
    rng = np.random.default_rng(2)
    y1 = FuelField(rng.uniform(0.0, 0.5, (2, 21)))
    y2 = FuelField(y1.values + rng.uniform(0.0, 0.5, (2, 21)))
    a1, _ = coefficient_fields(p, y1)
    a2, _ = coefficient_fields(p, y2)
    assert np.all(a2 <= a1)


def test_uniform_parabolicity_bounds():
    g = make_grid(0.0, 1.0, 31)
    rng = np.random.default_rng(4)
    k1, k2 = 0.5, 2.0
    for _ in range(20):
        p = LayerParams(
            a=rng.uniform(k1, k2, (2, 31)), b=rng.uniform(0.0, k2, (2, 31)),
            c=rng.uniform(0.0, k2, (2, 31)), c_x=np.zeros((2, 31)),
            d=np.zeros((2, 31)), lam=rng.uniform(k1, k2, (2, 31)),
            K=np.zeros((2, 31)), A=np.zeros((2, 31)), q=np.zeros((1, 31)),
            qhat1=np.zeros(31), qhat2=np.zeros(31), u_e=0.0, E=1.0,
        )
        y = FuelField(rng.uniform(0.0, 1.0, (2, 31)))
        alpha, _ = coefficient_fields(p, y)
        assert alpha.min() >= k1 / (k2 + k2 * 1.0) - 1e-15
        assert alpha.max() <= k2 / k1 + 1e-15


def test_coefficients_reject_vanishing_capacity():
    g = make_grid(0.0, 1.0, 11)
    p = LayerParams.constants(g, 2, a=0.5, b=0.0)
    y = FuelField(np.ones((2, 11)))
    p.a[...] = 0.0
    with pytest.raises(ValueError):
        coefficient_fields(p, y)


# ---------------------------------------------------------------------------
# source term


def test_source_vanishes_without_data():
    g = make_grid(-1.0, 1.0, 21)
    p = LayerParams.constants(g, 3, a=1.0, d=2.0, K=1.0)
    y = FuelField(np.zeros((3, 21)))
    rng = np.random.default_rng(6)
    u = TemperatureField(rng.standard_normal((3, 21)), g)
    np.testing.assert_array_equal(source_f(p, y, u), np.zeros((3, 21)))


def test_source_vanishes_at_equilibrium():
    g = make_grid(-1.0, 1.0, 21)
    p = LayerParams.constants(g, 3, a=1.0, q=0.4, qhat1=0.2, qhat2=0.1, u_e=0.7)
    y = FuelField(np.zeros((3, 21)))
    u = TemperatureField(np.full((3, 21), p.u_e), g)
    np.testing.assert_array_equal(source_f(p, y, u), np.zeros((3, 21)))


def test_source_two_layer_hand_case():
    # exchange pulls layer 1 down by 2E and pushes layer 2 up by 2E;
    # only the hot layer reacts, at g(2E) = e^{-1/2}
    for E in (1.0, 0.7):
        g = make_grid(0.0, 1.0, 11)
        p = LayerParams.constants(g, 2, a=1.0, b=0.0, d=1.0, K=0.0, q=1.0, E=E)
        y = FuelField(np.ones((2, 11)))
        u = TemperatureField(np.stack([np.full(11, 2.0 * E), np.zeros(11)]), g)
        f = source_f(p, y, u)
        np.testing.assert_allclose(f[0], np.exp(-0.5) - 2.0 * E, rtol=1e-14)
        np.testing.assert_allclose(f[1], 2.0 * E, rtol=1e-14)


def test_source_interior_layer_two_sided_coupling():
    # three constant layers: middle layer sees q1*(u1-u2) + q2*(u3-u2)
    g = make_grid(0.0, 1.0, 5)
    p = LayerParams.constants(g, 3, a=1.0, q=0.5)
    y = FuelField(np.zeros((3, 5)))
    u = TemperatureField(np.stack([np.full(5, 1.0), np.full(5, 4.0), np.full(5, 2.0)]), g)
    f = source_f(p, y, u)
    np.testing.assert_allclose(f[1], 0.5 * (1.0 - 4.0) + 0.5 * (2.0 - 4.0))


def test_source_lipschitz_on_ball():
    # property backing the fixed-point argument: f is kappa-Lipschitz on the
    # ball, with kappa computed from coefficient sups and the g bounds
    from layerburn.evolution import GriddedFuel
    from layerburn.fixtures import reactive_two_layer
    from layerburn.hypothesis import lipschitz_kappa

    problem, T = reactive_two_layer(m=101)
    p, grid = problem.params, problem.grid
    fuel = GriddedFuel(problem.fuel, grid)
    rho = 2.0
    kap = lipschitz_kappa(p, fuel, rho, (0.0, T))
    y = FuelField(fuel.sample(grid, 0.0))
    rng = np.random.default_rng(8)
    for _ in range(200):
        v = rng.standard_normal((2, grid.m))
        w = rng.standard_normal((2, grid.m))
        v *= rho * rng.uniform() / max(l2_norm(TemperatureField(v, grid)), 1e-30)
        w *= rho * rng.uniform() / max(l2_norm(TemperatureField(w, grid)), 1e-30)
        fv = source_f(p, y, v)
        fw = source_f(p, y, w)
        lhs = float(np.max(layer_l2(fv - fw, grid.dx)))
        rhs = kap * float(np.max(layer_l2(v - w, grid.dx)))
        assert lhs <= rhs * (1.0 + 1e-12)


# ---------------------------------------------------------------------------
# fuel families and the coupled-fuel step


def test_constant_fuel_is_all_ones():
    g = make_grid(-2.0, 2.0, 17)
    spec = PrescribedFuel([ConstantFuel(1.0), ConstantFuel(1.0)])
    for t in (0.0, 0.3, 12.0):
        np.testing.assert_array_equal(fuel_prescribed(spec, g, t).values, 1.0)


def test_logistic_front_midpoint():
    g = make_grid(-5.0, 5.0, 101)
    fam = LogisticFrontFuel(0.0, 1.0, 1.0)
    spec = PrescribedFuel([fam, fam])
    y0 = fuel_prescribed(spec, g, 0.0)
    mid = np.argmin(np.abs(g.x))
    np.testing.assert_allclose(y0.values[:, mid], 0.5, rtol=1e-14)
    # the half-level point travels with the front speed
    y1 = spec.sample(g, 1.0)
    at_front = np.argmin(np.abs(g.x - 1.0))
    np.testing.assert_allclose(y1[:, at_front], 0.5, rtol=1e-12)


def test_gaussian_decay_peak_factor():
    g = make_grid(-5.0, 5.0, 101)
    fam = GaussianDecayFuel(0.0, 1.5, 0.8)
    spec = PrescribedFuel([fam])
    y0 = spec.sample(g, 0.0)
    yt = spec.sample(g, 2.0)
    np.testing.assert_allclose(yt, np.exp(-0.8 * 2.0) * y0, rtol=1e-14)


def test_prescribed_fuel_rejects_out_of_range():
    g = make_grid(-1.0, 1.0, 11)
    with pytest.raises(ValueError):
        fuel_prescribed(PrescribedFuel([ConstantFuel(1.5)]), g, 0.0)
    with pytest.raises(ValueError):
        fuel_prescribed(PrescribedFuel([ConstantFuel(-0.1)]), g, 0.0)


def test_time_envelopes_bracket_samples():
    g = make_grid(-5.0, 5.0, 101)
    spec = PrescribedFuel([
        LogisticFrontFuel(0.5, -0.7, 1.3),
        GaussianDecayFuel(-1.0, 2.0, 0.4),
        ConstantFuel(0.6),
    ])
    t0, t1 = 0.2, 1.7
    lo, hi = spec.envelope(g, t0, t1)
    for t in np.linspace(t0, t1, 23):
        y = spec.sample(g, t)
        assert np.all(y >= lo - 1e-14) and np.all(y <= hi + 1e-14)


def test_fuel_step_inert_below_ignition():
    g = make_grid(-1.0, 1.0, 11)
    p = LayerParams.constants(g, 2, A=3.0)
    y = FuelField(np.full((2, 11), 0.8))
    u = TemperatureField(-np.ones((2, 11)), g)
    out = fuel_step(y, u, p, 0.5)
    np.testing.assert_array_equal(out.values, y.values)


def test_fuel_step_halving_time():
    # A*g(u)*dt = ln 2 halves the fuel: u = E gives g = 1/e, so dt = e*ln 2
    g = make_grid(-1.0, 1.0, 11)
    p = LayerParams.constants(g, 2, A=1.0, E=1.0)
    y = FuelField(np.full((2, 11), 0.9))
    u = TemperatureField(np.ones((2, 11)), g)
    out = fuel_step(y, u, p, np.e * np.log(2.0))
    np.testing.assert_allclose(out.values, 0.45, rtol=1e-14)


def test_fuel_step_monotone_and_fixed_at_zero():
    g = make_grid(-1.0, 1.0, 31)
    p = LayerParams.constants(g, 2, A=2.0)
    rng = np.random.default_rng(10)
    y = FuelField(rng.uniform(0.0, 1.0, (2, 31)))
    y.values[0, :5] = 0.0
    u = TemperatureField(rng.standard_normal((2, 31)), g)
    out = fuel_step(y, u, p, 0.3)
    assert np.all(out.values <= y.values)
    assert np.all(out.values >= 0.0)
    np.testing.assert_array_equal(out.values[0, :5], 0.0)


def test_tabulated_fuel_interpolates_and_clamps():
    g = make_grid(0.0, 1.0, 5)
    table = np.stack([np.full((2, 5), 1.0), np.full((2, 5), 0.5)])
    fuel = TabulatedFuel(np.array([0.0, 1.0]), table)
    np.testing.assert_allclose(fuel.sample(g, 0.5), 0.75)
    np.testing.assert_allclose(fuel.sample(g, -1.0), 1.0)
    np.testing.assert_allclose(fuel.sample(g, 2.0), 0.5)
    lo, hi = fuel.envelope(g, 0.0, 1.0)
    np.testing.assert_allclose(lo, 0.5)
    np.testing.assert_allclose(hi, 1.0)


# ---------------------------------------------------------------------------
# helpers


def test_smooth_bump_support_and_peak():
    x = np.linspace(-3.0, 3.0, 301)
    b = smooth_bump(x, 0.5, 1.0)
    assert b[np.argmin(np.abs(x - 0.5))] == 1.0
    assert np.all(b[np.abs(x - 0.5) >= 1.0] == 0.0)
    assert np.all(b >= 0.0) and np.all(b <= 1.0)


def test_central_gradient_exact_on_linear():
    g = make_grid(0.0, 2.0, 21)
    vals = np.stack([3.0 * g.x + 1.0, -0.5 * g.x])
    grad = central_gradient(vals, g.dx)
    np.testing.assert_allclose(grad[0], 3.0, rtol=1e-12)
    np.testing.assert_allclose(grad[1], -0.5, rtol=1e-12)


# ---------------------------------------------------------------------------
# dimensional reduction


def _raw_kwargs(n, m, **over):
    base = dict(
        porosity=0.4, rho_r=1.0, c_r=1.0, c_g=1.0, c_c=1.0, rho_g=1.0,
        eta0=0.5, Q_h=2.0, A_c=3.0, lam_r=1.0, lam_c=2.0, lam_g=0.5,
        l_frac=0.0, K_s=1.0, m_o=0.0, Q=0.1, Qhat1=0.0, Qhat2=0.0, v=1.0,
        T_e=300.0, x_star=2.0, t_star=4.0, T_star=600.0, p_star=1.0,
        rho_g_star=1.0, alpha_order=1.0, E_hat=100.0, R_gas=8.314,
        frozen_Yp=1.0,
    )
    base.update(over)
    return base


def test_reduction_identical_layers_are_symmetric():
    g = make_grid(0.0, 1.0, 9)
    raw = raw_params(g, 3, **_raw_kwargs(3, 9))
    p = nondimensionalize(raw, g)
    np.testing.assert_array_equal(p.a[0], p.a[1])
    np.testing.assert_array_equal(p.a[1], p.a[2])
    # capacity fraction scales linearly with the initial fuel mass
    raw2 = raw_params(g, 3, **_raw_kwargs(3, 9, eta0=1.0))
    p2 = nondimensionalize(raw2, g)
    np.testing.assert_allclose(p2.b, 2.0 * p.b, rtol=1e-14)


def test_reduction_capacity_mean_normalization():
    g = make_grid(0.0, 1.0, 9)
    # layer capacities 1 and 3 average to 2, halving b against the
    # all-capacity-1 normalization
    raw_mixed = raw_params(g, 2, **_raw_kwargs(2, 9, rho_r=np.array([[1.0], [3.0]])))
    raw_unit = raw_params(g, 2, **_raw_kwargs(2, 9))
    pm = nondimensionalize(raw_mixed, g)
    pu = nondimensionalize(raw_unit, g)
    np.testing.assert_allclose(pm.b, 0.5 * pu.b, rtol=1e-14)


def test_reduction_conductivity_without_char():
    g = make_grid(0.0, 1.0, 9)
    kw = _raw_kwargs(2, 9)
    raw = raw_params(g, 2, **kw)
    p = nondimensionalize(raw, g)
    lam_s = (1.0 - 0.4) * 1.0 + 0.4 * 0.5  # (1-phi)*lam_r + phi*lam_g, l = 0
    np.testing.assert_allclose(p.lam, 4.0 * lam_s / (2.0**2 * 1.0), rtol=1e-14)


def test_reduction_scalar_outputs():
    g = make_grid(0.0, 1.0, 9)
    p = nondimensionalize(raw_params(g, 2, **_raw_kwargs(2, 9)), g)
    np.testing.assert_allclose(p.u_e, 300.0 / 600.0)
    np.testing.assert_allclose(p.E, 100.0 / (8.314 * 600.0))
    np.testing.assert_allclose(p.c, 1.0 * (4.0 * 1.0 / 2.0), rtol=1e-14)
    np.testing.assert_allclose(p.K, 4.0 * 1.0 * 1.0 / 2.0**2, rtol=1e-14)


def test_reduction_rejects_bad_scales():
    g = make_grid(0.0, 1.0, 9)
    with pytest.raises(ValueError):
        nondimensionalize(raw_params(g, 2, **_raw_kwargs(2, 9, t_star=-1.0)), g)
    with pytest.raises(ValueError):
        nondimensionalize(raw_params(g, 2, **_raw_kwargs(2, 9, porosity=1.2)), g)
    with pytest.raises(ValueError):
        nondimensionalize(raw_params(g, 2, **_raw_kwargs(2, 9, l_frac=1.5)), g)
