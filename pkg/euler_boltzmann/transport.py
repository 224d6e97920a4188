"""
Radiative transfer (1/c) dI/dt + Omega . grad I = A_r on discrete ordinates.

Two interchangeable backends advance every (group, ordinate) family:

* ``characteristic`` traces each ray back to its foot y0 = x - c Omega dt,
  interpolates the intensity there and integrates the absorption exactly
  along the photon path;
* ``sweep`` is a first-order upwind scheme with implicit absorption.

Scattering is split off and applied explicitly after streaming.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from euler_boltzmann import config
from euler_boltzmann.coefficients import absorption_ka, absorption_bar, density_factor, emission_bar
from euler_boltzmann.errors import DimensionError, InvalidArgument, StepRejected
from euler_boltzmann.grid import Grid
from euler_boltzmann.symhyp import scattering_exchange

logger = logging.getLogger(__name__)

BACKENDS = ('characteristic', 'sweep')
PATH_NODES = 4
PATH_PANELS = 2


@dataclass(eq=False)
class RadiationField:
    intensities: np.ndarray  # (G, K, *cells)
    frequency: object
    quadrature: object
    grid: Optional[Grid] = None

    def __post_init__(self):
        self.intensities = np.asarray(self.intensities, dtype=float)
        if self.intensities.shape[:2] != (len(self.frequency), len(self.quadrature)):
            raise DimensionError(
                f'intensities {self.intensities.shape[:2]} do not match '
                f'({len(self.frequency)} groups, {len(self.quadrature)} ordinates)')
        if self.grid is not None:
            self.grid.check_field(self.intensities, leading=2)

    @classmethod
    def equilibrium(cls, model, frequency, quadrature, grid):
        bbar = model.planck_profile(frequency.nodes)
        shape = (len(frequency), len(quadrature)) + grid.cells
        values = np.broadcast_to(bbar.reshape((-1, 1) + (1,) * grid.ndim), shape).copy()
        return cls(values, frequency, quadrature, grid)

    def with_intensities(self, intensities):
        return RadiationField(intensities, self.frequency, self.quadrature, self.grid)

    def copy(self):
        return self.with_intensities(self.intensities.copy())

    def weighted(self, values=None):
        values = self.intensities if values is None else values
        weights = np.outer(self.frequency.weights, self.quadrature.weights)
        return np.tensordot(weights, values, axes=([0, 1], [0, 1]))

    def l2_norm(self):
        """(sum_g sum_k w_g w_k ||I_gk||_0^2)^(1/2) with cell-volume weighting."""
        volume = self.grid.cell_volume if self.grid is not None else 1.0
        return float(np.sqrt(np.sum(self.weighted(self.intensities ** 2)) * volume))


@dataclass(eq=False)
class PhotonPath:
    """Straight photon path y(t) = origin + c Omega t; ``origin`` may hold one point per cell."""

    origin: np.ndarray  # (ndim, *P)
    direction: np.ndarray  # (ndim,)
    c: float

    def _velocity(self):
        origin = np.asarray(self.origin, dtype=float)
        return self.c * np.asarray(self.direction, dtype=float).reshape((-1,) + (1,) * (origin.ndim - 1))

    def position(self, t):
        return np.asarray(self.origin, dtype=float) + self._velocity() * t

    @classmethod
    def ending_at(cls, x, direction, c, t):
        """Path whose position at time ``t`` is ``x``; its origin is the foot x - c Omega t."""
        path = cls(np.asarray(x, dtype=float), np.asarray(direction, dtype=float), float(c))
        path.origin = path.origin - path._velocity() * t
        return path


def _gauss_rule(t, nodes=PATH_NODES, panels=PATH_PANELS):
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(0.0, t, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    taus = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return taus, weights


def integrate_along_ray(i0, bbar, ka_along_path, t, c, nodes=8, panels=4):
    """
    Exact solution of the absorption-emission equation along one photon path:
    Bbar + (I0 - Bbar) exp(-int_0^t c K_a(tau) dtau), with the path integral
    by a composite Gauss rule.
    """
    if t < 0.0:
        raise InvalidArgument(f'duration must be non-negative, got {t}')
    i0 = np.asarray(i0, dtype=float)
    if t == 0.0:
        return i0.copy()
    taus, weights = _gauss_rule(t, nodes, panels)
    samples = np.asarray([np.asarray(ka_along_path(tau), dtype=float) for tau in taus])
    optical_depth = c * np.tensordot(weights, samples, axes=(0, 0))
    return bbar + (i0 - bbar) * np.exp(-optical_depth)


def _resolve_boundary(grid, boundary):
    if boundary is None:
        return 'periodic' if grid.periodic else 'inflow'
    if boundary not in ('inflow', 'periodic'):
        raise InvalidArgument(f'unknown boundary condition {boundary!r}')
    if boundary == 'periodic' and not grid.periodic:
        raise InvalidArgument('periodic boundaries need a periodic grid')
    if boundary == 'inflow' and grid.periodic:
        raise InvalidArgument('inflow boundaries need a non-periodic grid')
    return boundary


def sweep_time_step(quadrature, grid, c):
    """Largest dt with c dt sum_d |Omega_kd| / h_d <= 1 for every ordinate."""
    ordinates = np.abs(quadrature.ordinates[:, :grid.ndim])
    rate = np.max(ordinates @ (1.0 / np.asarray(grid.spacing)))
    return 1.0 / (c * rate)


def _frozen_rates(frequency, w, model, constants, grid):
    """Per-group absorption rate and emission density at every cell."""
    v = frequency.nodes.reshape((-1,) + (1,) * grid.ndim)
    if model.is_lte:
        rate = absorption_ka(v, w, constants, model)
        return rate, rate * model.planck_profile(v)
    rho = density_factor(w, constants)
    rate = rho * absorption_bar(v, w, constants, model)
    emission = rho * emission_bar(v, w, model.planck_profile(v), constants, model)
    return rate, emission


def _phi(tau):
    # (1 - exp(-tau)) / tau with its limit 1 at tau = 0
    small = tau < 1e-8
    safe = np.where(small, 1.0, tau)
    return np.where(small, 1.0 - 0.5 * tau, -np.expm1(-safe) / safe)


def _characteristic_ordinate(k, excess, w, field, model, constants, dt, boundary):
    grid = field.grid
    omega = field.quadrature.ordinates[k, :grid.ndim]
    path = PhotonPath.ending_at(grid.positions(), omega, constants.c, dt)
    foot = path.origin
    outside = 'extrapolate' if boundary == 'periodic' else 'constant'
    moved = grid.interpolate(excess[:, k], foot, outside=outside, cval=0.0)
    v = field.frequency.nodes.reshape((-1,) + (1,) * grid.ndim)
    bbar = model.planck_profile(v)
    if model.is_lte:
        taus, weights = _gauss_rule(dt)
        depth = np.zeros_like(moved)
        for tau, weight in zip(taus, weights):
            point = path.position(tau)
            w_path = np.clip(grid.interpolate(w, point, outside=outside, cval=0.0), 0.0, None)
            depth += weight * absorption_ka(v, w_path, constants, model)
        return bbar + moved * np.exp(-constants.c * depth)
    rate, emission = _frozen_rates(field.frequency, w, model, constants, grid)
    tau = constants.c * dt * rate
    return (moved + bbar) * np.exp(-tau) + constants.c * dt * emission * _phi(tau)


def advect(field, dt, c, model, boundary=None):
    """Free streaming over ``dt``: each ordinate's intensity read at its foot, Bbar at inflow."""
    grid = field.grid
    boundary = _resolve_boundary(grid, boundary)
    outside = 'extrapolate' if boundary == 'periodic' else 'constant'
    bbar = model.planck_profile(field.frequency.nodes).reshape((-1,) + (1,) * grid.ndim)
    x = grid.positions()
    columns = []
    for k in range(len(field.quadrature)):
        foot = PhotonPath.ending_at(x, field.quadrature.ordinates[k, :grid.ndim], c, dt).origin
        excess = field.intensities[:, k] - bbar
        columns.append(bbar + grid.interpolate(excess, foot, outside=outside, cval=0.0))
    return np.stack(columns, axis=1)


def _upwind_difference(values, axis, direction, grid, boundary):
    # values has leading group axis; ghost excess is 0 for inflow
    ax = 1 + axis
    step = 1 if direction > 0 else -1
    if boundary == 'periodic':
        upstream = np.roll(values, step, axis=ax)
    else:
        pad = [(0, 0)] * values.ndim
        pad[ax] = (1, 0) if step > 0 else (0, 1)
        padded = np.pad(values, pad, mode='constant', constant_values=0.0)
        index = [slice(None)] * values.ndim
        index[ax] = slice(0, -1) if step > 0 else slice(1, None)
        upstream = padded[tuple(index)]
    return (values - upstream) / grid.spacing[axis]


def _sweep_ordinate(k, excess, w, field, model, constants, dt, boundary):
    grid = field.grid
    omega = field.quadrature.ordinates[k, :grid.ndim]
    values = excess[:, k]
    streamed = values.copy()
    for axis in range(grid.ndim):
        if omega[axis] != 0.0:
            streamed -= constants.c * dt * abs(omega[axis]) * _upwind_difference(
                values, axis, omega[axis], grid, boundary)
    v = field.frequency.nodes.reshape((-1,) + (1,) * grid.ndim)
    bbar = model.planck_profile(v)
    rate, emission = _frozen_rates(field.frequency, w, model, constants, grid)
    if model.is_lte:
        return bbar + streamed / (1.0 + constants.c * dt * rate)
    return (streamed + bbar + constants.c * dt * emission) / (1.0 + constants.c * dt * rate)


def transport_step(field, fluid, model, dt, constants, backend='characteristic', boundary=None):
    """
    Advance every (group, ordinate) intensity by ``dt`` with the fluid frozen.

    Returns a new field; the input is not modified. The sweep backend rejects
    steps beyond its CFL limit.
    """
    if backend not in BACKENDS:
        raise InvalidArgument(f'unknown transport backend {backend!r}')
    if dt < 0.0:
        raise InvalidArgument(f'time step must be non-negative, got {dt}')
    grid = field.grid
    if grid is None:
        raise DimensionError('transport needs a field attached to a spatial grid')
    boundary = _resolve_boundary(grid, boundary)
    w = grid.check_field(np.asarray(fluid.w, dtype=float))
    if dt == 0.0:
        return field.copy()
    if backend == 'sweep':
        limit = sweep_time_step(field.quadrature, grid, constants.c)
        if dt > limit * (1.0 + 1e-12):
            raise StepRejected(f'sweep CFL violated: dt={dt:g} exceeds {limit:g}', required_dt=limit)

    bbar = model.planck_profile(field.frequency.nodes).reshape((-1, 1) + (1,) * grid.ndim)
    excess = field.intensities - bbar
    update = _characteristic_ordinate if backend == 'characteristic' else _sweep_ordinate
    ordinates = range(len(field.quadrature))
    if config.NUM_THREADS > 1:
        with ThreadPoolExecutor(max_workers=config.NUM_THREADS) as executor:
            columns = list(executor.map(
                lambda k: update(k, excess, w, field, model, constants, dt, boundary), ordinates))
    else:
        columns = [update(k, excess, w, field, model, constants, dt, boundary) for k in ordinates]
    intensities = np.stack(columns, axis=1)

    if model.scattering is not None and model.scattering.sigma0 > 0.0:
        rho = density_factor(w, constants)
        intensities = intensities + constants.c * dt * scattering_exchange(
            intensities, rho, model.scattering, field.frequency, field.quadrature)

    negative = float(-intensities.min(initial=0.0))
    if negative > 0.0:
        logger.debug('clipping negative intensity of magnitude %g', negative)
    return field.with_intensities(np.clip(intensities, 0.0, None))


def radiation_moments(field, quadrature, grid, c):
    """Radiation flux F_r (3, *cells) and pressure tensor P_r (3, 3, *cells)."""
    intensities = np.asarray(field.intensities, dtype=float)
    if intensities.shape[1] != len(quadrature) or intensities.shape[0] != len(field.frequency):
        raise DimensionError('intensity field does not match the quadrature')
    grid.check_field(intensities, leading=2)
    weights = np.outer(field.frequency.weights, quadrature.weights)
    omega = quadrature.ordinates
    flux = np.einsum('gk,kd,gk...->d...', weights, omega, intensities)
    pressure = np.einsum('gk,kd,ke,gk...->de...', weights, omega, omega, intensities) / c
    return flux, pressure


def relaxation_residual(field, model, mask=None):
    """sup over ``mask`` (all cells when omitted) of |I - Bbar|."""
    grid = field.grid
    bbar = model.planck_profile(field.frequency.nodes).reshape((-1, 1) + (1,) * grid.ndim)
    deviation = np.abs(field.intensities - bbar)
    if mask is None:
        return float(deviation.max())
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return 0.0
    return float(deviation[..., mask].max())
