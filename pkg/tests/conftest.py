"""Shared builders for small constant-coefficient test problems."""

import numpy as np

from layerburn import (
    ConstantFuel,
    LayerParams,
    PrescribedFuel,
    Problem,
    TemperatureField,
    make_grid,
)


def constant_problem(m=201, n=2, span=(-10.0, 10.0), phi_amp=1.0,
                     fuel_val=1.0, **params):
    """n identical layers with constant coefficients and a Gaussian hot spot."""
    grid = make_grid(span[0], span[1], m)
    p = LayerParams.constants(grid, n, **params)
    row = phi_amp * np.exp(-grid.x ** 2)
    phi = TemperatureField(np.tile(row, (n, 1)), grid)
    fuel = PrescribedFuel([ConstantFuel(fuel_val)] * n)
    return Problem(grid, p, fuel, phi)


def random_field(grid, n, rng, scale=1.0):
    return scale * rng.standard_normal((n, grid.m))
