import numpy as np
import pytest
from unittest.mock import patch
import sys
import os

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from euler_boltzmann.coefficients import CoefficientModel, PhysicalConstants, absorption_ka
from euler_boltzmann.errors import InvalidArgument, StepRejected
from euler_boltzmann.grid import Grid
from euler_boltzmann.quadrature import build_frequency_grid, build_ordinates, build_rod_ordinates
from euler_boltzmann.symhyp import SymmetrizedState
from euler_boltzmann.transport import (PhotonPath, RadiationField, integrate_along_ray, radiation_moments,
                                       relaxation_residual, sweep_time_step, transport_step)


def _fluid(w, grid):
    w = np.broadcast_to(np.asarray(w, dtype=float), grid.cells).copy()
    return SymmetrizedState(w, np.zeros((3,) + grid.cells))


def _sine_field(grid, frequency, quadrature, model, amplitude=0.5):
    bbar = model.planck_profile(frequency.nodes)[:, None, None]
    x = grid.positions()[0]
    shape = (len(frequency), len(quadrature)) + grid.cells
    return RadiationField(bbar * (1.0 + amplitude * np.sin(2 * np.pi * x)) * np.ones(shape),
                          frequency, quadrature, grid)


def test_characteristic_matches_closed_form(periodic_line, rod, frequency, model, constants):
    """Test the characteristic backend against the constant-coefficient solution"""
    field = _sine_field(periodic_line, frequency, rod, model)
    dt = periodic_line.h / constants.c
    w = 0.8
    result = transport_step(field, _fluid(w, periodic_line), model, dt, constants)
    bbar = model.planck_profile(frequency.nodes)[:, None]
    ka = absorption_ka(frequency.nodes, np.full(len(frequency), w), constants, model)[:, None]
    decay = np.exp(-constants.c * ka * dt)
    excess = field.intensities - bbar[:, None]
    expected_right = bbar + np.roll(excess[:, 0], 1, axis=-1) * decay
    expected_left = bbar + np.roll(excess[:, 1], -1, axis=-1) * decay
    assert np.allclose(result.intensities[:, 0], expected_right, rtol=0, atol=1e-12)
    assert np.allclose(result.intensities[:, 1], expected_left, rtol=0, atol=1e-12)


def test_transport_does_not_modify_input(periodic_line, rod, frequency, model, constants):
    """Test transport returns a new field"""
    field = _sine_field(periodic_line, frequency, rod, model)
    before = field.intensities.copy()
    transport_step(field, _fluid(0.5, periodic_line), model, 0.01, constants)
    assert np.array_equal(field.intensities, before)


def test_sweep_first_order_convergence(frequency, rod, constants):
    """Test the upwind sweep converges at first order for free streaming"""
    model = CoefficientModel(kbar_law='zero')
    errors = []
    for cells in (64, 128, 256):
        grid = Grid.line(cells, 0.0, 1.0, periodic=True)
        field = _sine_field(grid, frequency, rod, model, amplitude=1.0)
        dt = 0.5 * grid.h / constants.c
        steps = int(round(0.25 / dt))
        for _ in range(steps):
            field = transport_step(field, _fluid(0.0, grid), model, dt, constants, backend='sweep')
        x = grid.positions()[0]
        bbar = model.planck_profile(frequency.nodes)[:, None]
        exact = bbar * (1.0 + np.sin(2 * np.pi * (x - 0.25)))
        errors.append(np.abs(field.intensities[:, 0] - exact).max())
    rates = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all((rates >= 0.8) & (rates <= 1.2)), rates


def test_sweep_rejects_cfl_violation(periodic_line, rod, frequency, model, constants):
    """Test the sweep backend reports the admissible step"""
    field = _sine_field(periodic_line, frequency, rod, model)
    limit = sweep_time_step(rod, periodic_line, constants.c)
    assert limit == pytest.approx(periodic_line.h)
    with pytest.raises(StepRejected) as info:
        transport_step(field, _fluid(0.5, periodic_line), model, 2.0 * limit, constants, backend='sweep')
    assert info.value.required_dt == pytest.approx(limit)


def test_sweep_time_step_in_three_dimensions():
    """Test the 3D CFL uses the sum of direction cosines"""
    grid = Grid.cube(8, 0.0, 1.0)
    quadrature = build_ordinates(2)
    expected = 1.0 / (2.0 * np.max(np.abs(quadrature.ordinates).sum(axis=1)) / grid.h)
    assert sweep_time_step(quadrature, grid, 2.0) == pytest.approx(expected)


def test_equilibrium_is_stationary(slab, rod, frequency, model, constants):
    """Test I = Bbar with inflow Bbar stays Bbar under both backends"""
    field = RadiationField.equilibrium(model, frequency, rod, slab)
    fluid = _fluid(np.linspace(0.0, 1.0, slab.cells[0]), slab)
    for backend in ('characteristic', 'sweep'):
        result = transport_step(field, fluid, model, 0.5 * slab.h, constants, backend=backend)
        assert relaxation_residual(result, model) == pytest.approx(0.0, abs=1e-15)


def test_vacuum_is_free_streaming(periodic_line, rod, frequency, model, constants):
    """Test intensities only move where w = 0"""
    field = _sine_field(periodic_line, frequency, rod, model)
    result = transport_step(field, _fluid(0.0, periodic_line), model, periodic_line.h, constants)
    assert np.allclose(result.intensities[:, 0], np.roll(field.intensities[:, 0], 1, axis=-1), atol=1e-12)


def test_threaded_update_matches_serial(periodic_line, frequency, model, constants):
    """Test the worker pool gives the same field as the serial loop"""
    quadrature = build_ordinates(2)
    field = _sine_field(periodic_line, frequency, quadrature, model)
    fluid = _fluid(0.7, periodic_line)
    serial = transport_step(field, fluid, model, 0.01, constants)
    with patch('euler_boltzmann.transport.config.NUM_THREADS', 3):
        threaded = transport_step(field, fluid, model, 0.01, constants)
    assert np.array_equal(serial.intensities, threaded.intensities)


def test_integrate_along_ray_constant_opacity():
    """Test the ray integral with constant absorption"""
    result = integrate_along_ray(2.0, 1.0, lambda tau: 0.5, t=2.0, c=3.0)
    assert result == pytest.approx(1.0 + np.exp(-3.0))
    assert integrate_along_ray(2.0, 1.0, lambda tau: 0.5, t=0.0, c=3.0) == 2.0
    with pytest.raises(InvalidArgument):
        integrate_along_ray(2.0, 1.0, lambda tau: 0.5, t=-1.0, c=3.0)


def test_isotropic_moments(frequency):
    """Test flux vanishes and pressure is isotropic for uniform intensity"""
    grid = Grid.line(4, 0.0, 1.0)
    quadrature = build_ordinates(4)
    field = RadiationField(np.full((2, len(quadrature), 4), 3.0), frequency, quadrature, grid)
    flux, pressure = radiation_moments(field, quadrature, grid, c=2.0)
    assert np.allclose(flux, 0.0, atol=1e-12)
    expected = 4.0 * np.pi / 3.0 * 3.0 * frequency.weights.sum() / 2.0
    assert np.allclose(pressure[0, 0], expected)
    assert np.allclose(pressure[0, 1], 0.0, atol=1e-12)


def test_relaxation_residual_mask(slab, rod, frequency, model):
    """Test the residual is taken over the mask only"""
    field = RadiationField.equilibrium(model, frequency, rod, slab)
    intensities = field.intensities.copy()
    intensities[0, 0, 0] += 0.25
    perturbed = field.with_intensities(intensities)
    assert relaxation_residual(perturbed, model) == pytest.approx(0.25)
    mask = np.ones(slab.cells, dtype=bool)
    mask[0] = False
    assert relaxation_residual(perturbed, model, mask) == 0.0
    assert relaxation_residual(perturbed, model, np.zeros(slab.cells, dtype=bool)) == 0.0


def test_rod_ordinates_use_one_dimension():
    """Test 1D transport with rod ordinates conserves a periodic total"""
    grid = Grid.line(32, 0.0, 1.0, periodic=True)
    model = CoefficientModel(kbar_law='zero')
    field = _sine_field(grid, build_frequency_grid(1, 2.0), build_rod_ordinates(), model)
    result = transport_step(field, _fluid(0.0, grid), model, 0.3 * grid.h,
                            PhysicalConstants(), backend='sweep')
    assert result.intensities.sum() == pytest.approx(field.intensities.sum(), rel=1e-12)


def test_sweep_maximum_principle(frequency, constants):
    """Test every sweep step keeps I between min(I0, Bbar) and max(I0, Bbar) per group"""
    model = CoefficientModel(D1=1.0, D2=1.0, v0=2.0)
    rng = np.random.default_rng(12)
    for grid, quadrature in ((Grid.line(48, -1.0, 1.0), build_rod_ordinates()),
                             (Grid.cube(6, -1.0, 1.0), build_ordinates(2))):
        bbar = model.planck_profile(frequency.nodes).reshape((-1, 1) + (1,) * grid.ndim)
        shape = (len(frequency), len(quadrature)) + grid.cells
        field = RadiationField(bbar * rng.uniform(0.2, 2.0, shape), frequency, quadrature, grid)
        axes = tuple(range(1, 2 + grid.ndim))
        lower = np.minimum(field.intensities.min(axis=axes, keepdims=True), bbar)
        upper = np.maximum(field.intensities.max(axis=axes, keepdims=True), bbar)
        fluid = _fluid(rng.uniform(0.0, 1.5, grid.cells), grid)
        dt = sweep_time_step(quadrature, grid, constants.c)
        for _ in range(10):
            field = transport_step(field, fluid, model, dt, constants, backend='sweep')
            assert np.all(field.intensities >= lower - 1e-12)
            assert np.all(field.intensities <= upper + 1e-12)


def test_uniform_medium_decay(frequency, rod, model, constants):
    """Test a uniform excess decays like exp(-c K_a t) over 100 steps at CFL 0.5"""
    grid = Grid.line(32, 0.0, 1.0, periodic=True)
    w = 0.8
    bbar = model.planck_profile(frequency.nodes)[:, None, None]
    field = RadiationField(bbar * np.full((len(frequency), len(rod)) + grid.cells, 1.5), frequency, rod, grid)
    dt = 0.5 * sweep_time_step(rod, grid, constants.c)
    ka = absorption_ka(frequency.nodes, np.full(len(frequency), w), constants, model)[:, None, None]
    decay = np.exp(-constants.c * ka * 100 * dt)
    excess = {}
    for backend in ('characteristic', 'sweep'):
        result = field
        for _ in range(100):
            result = transport_step(result, _fluid(w, grid), model, dt, constants, backend=backend)
        assert np.allclose(result.intensities, result.intensities[..., :1])
        assert np.all(result.intensities > bbar)
        excess[backend] = (result.intensities - bbar) / (0.5 * bbar)
    assert np.allclose(excess['characteristic'], decay, rtol=1e-3)
    # implicit absorption is first order in c K_a dt
    assert np.allclose(excess['sweep'], (1.0 + constants.c * ka * dt) ** -100, rtol=1e-10)
    assert np.allclose(excess['sweep'], decay, rtol=5e-3)


def test_pressure_trace_is_energy_density(frequency):
    """Test trace(P_r) = (1/c) sum w_g w_k I and P_r is symmetric"""
    grid = Grid.line(5, 0.0, 1.0)
    quadrature = build_ordinates(3)
    rng = np.random.default_rng(13)
    field = RadiationField(rng.uniform(0.0, 2.0, (len(frequency), len(quadrature), 5)), frequency, quadrature,
                           grid)
    c = 3.0
    _, pressure = radiation_moments(field, quadrature, grid, c)
    assert np.allclose(np.trace(pressure), field.weighted() / c, rtol=1e-12)
    assert np.allclose(pressure, np.swapaxes(pressure, 0, 1))


def test_beam_flux_points_along_its_ordinate(frequency):
    """Test a single-ordinate beam gives F_r = w_g w_k I Omega_k"""
    grid = Grid.line(3, 0.0, 1.0)
    quadrature = build_ordinates(4)
    k = int(np.argmax(quadrature.ordinates[:, 0]))
    intensities = np.zeros((len(frequency), len(quadrature), 3))
    intensities[1, k] = 2.5
    flux, _ = radiation_moments(RadiationField(intensities, frequency, quadrature, grid), quadrature, grid, c=1.0)
    expected = frequency.weights[1] * quadrature.weights[k] * 2.5 * quadrature.ordinates[k][:, None]
    assert np.allclose(flux, expected, rtol=1e-12, atol=0)


def test_photon_path_ends_at_target():
    """Test a path built backwards ends where requested, for one point and for a grid of points"""
    path = PhotonPath.ending_at([0.5, 0.0, 0.0], [1.0, 0.0, 0.0], c=2.0, t=1.5)
    assert np.allclose(path.origin, [-2.5, 0.0, 0.0])
    assert np.allclose(path.position(1.5), [0.5, 0.0, 0.0])
    grid = Grid.cube(3, 0.0, 1.0)
    direction = np.array([0.6, 0.0, 0.8])
    x = grid.positions()
    cells = PhotonPath.ending_at(x, direction, c=1.0, t=0.25)
    assert np.allclose(cells.position(0.25), x)
    assert np.allclose(cells.origin[2], x[2] - 0.2)
