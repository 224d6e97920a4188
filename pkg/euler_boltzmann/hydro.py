"""
Fluid part of the coupled system.

``hydro_step`` advances (w, u) with a local Lax-Friedrichs scheme on the
symmetric quasilinear form; the continuity row is updated conservatively in
rho by default. Vacuum cells follow the pressureless Burgers dynamics
dt u + u . grad u = -alpha u, solved semi-Lagrangian along particle paths.
Tracers for the flow map and the Lagrangian density live here as well.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.integrate import trapezoid

from euler_boltzmann.errors import InvalidArgument, NearSingularity, SolverDiverged, StepRejected
from euler_boltzmann.symhyp import kappa, rho_from_w, sound_speed, w_from_rho

logger = logging.getLogger(__name__)

BURGERS_MAX_ITERATIONS = 50
BURGERS_TOLERANCE = 1e-13
CONTINUITY_FORMS = ('conservative', 'symmetric')


@dataclass(eq=False)
class FluidState:
    rho: np.ndarray
    u: np.ndarray  # (3, *cells)
    gamma: float

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        if self.u.shape != (3,) + self.rho.shape:
            raise InvalidArgument(f'velocity must have shape (3, *cells), got {self.u.shape}')
        if np.any(self.rho < 0.0):
            raise InvalidArgument('density must be non-negative')

    @property
    def w(self):
        return w_from_rho(self.rho, self.gamma)

    @property
    def p_m(self):
        return self.rho ** self.gamma

    def copy(self):
        return FluidState(self.rho.copy(), self.u.copy(), self.gamma)


@dataclass
class HydroDiagnostics:
    max_speed: float = 0.0
    clipped: float = 0.0
    vacuum_cells: int = 0
    burgers_iterations: int = 0


def vacuum_mask(rho, grid, threshold):
    """Cells at or below ``threshold`` whose face neighbours are too."""
    below = np.asarray(rho) <= threshold
    mask = below.copy()
    for axis in range(grid.ndim):
        for step in (1, -1):
            mask &= _neighbour(below, grid, axis, step, fill=True)
    return mask


def _neighbour(values, grid, axis, step, fill=None):
    """Index i holds values[i + step] along spatial ``axis``; walls copy the edge cell or ``fill``."""
    ax = values.ndim - grid.ndim + axis
    if grid.periodic:
        return np.roll(values, -step, axis=ax)
    pad = [(0, 0)] * values.ndim
    pad[ax] = (0, 1) if step > 0 else (1, 0)
    if fill is None:
        padded = np.pad(values, pad, mode='edge')
    else:
        padded = np.pad(values, pad, mode='constant', constant_values=fill)
    index = [slice(None)] * values.ndim
    index[ax] = slice(1, None) if step > 0 else slice(0, -1)
    return padded[tuple(index)]


def _llf_derivative_terms(U, speed, grid, axis):
    """Centred difference and Rusanov dissipation along ``axis`` for every row of U."""
    plus = _neighbour(U, grid, axis, 1)
    minus = _neighbour(U, grid, axis, -1)
    s_plus = np.maximum(speed, _neighbour(speed, grid, axis, 1))
    s_minus = np.maximum(speed, _neighbour(speed, grid, axis, -1))
    h = grid.spacing[axis]
    central = (plus - minus) / (2.0 * h)
    dissipation = (s_plus * (plus - U) - s_minus * (U - minus)) / (2.0 * h)
    return central, dissipation


def _face_flux(rho, u, speed, grid, axis):
    # LLF mass flux through the face i + 1/2
    flux = rho * u[axis]
    s_face = np.maximum(speed, _neighbour(speed, grid, axis, 1))
    return (0.5 * (flux + _neighbour(flux, grid, axis, 1))
            - 0.5 * s_face * (_neighbour(rho, grid, axis, 1) - rho))


def _conservative_density(rho, u, speed, grid, axis, dt):
    face = _face_flux(rho, u, speed, grid, axis)
    if grid.periodic:
        face_minus = np.roll(face, 1, axis=axis)
    else:
        # a ghost cell copying the wall cell gives the wall face its own flux
        wall = np.take(rho * u[axis], [0], axis=axis)
        face_minus = np.concatenate([wall, np.take(face, range(rho.shape[axis] - 1), axis=axis)],
                                    axis=axis)
    return -dt * (face - face_minus) / grid.spacing[axis]


def symmetric_increment(U, w_frozen, u_frozen, gamma, grid, dt):
    """
    -dt sum_j A0^-1 A_j(w_frozen, u_frozen) dU/dx_j plus Rusanov dissipation,
    for the 4-row array U. Passing U's own (w, u) gives the quasilinear step;
    other frozen values give the linearised one.
    """
    beta = 0.5 * (gamma - 1.0)
    k = kappa(gamma)
    dU = np.zeros_like(U)
    for axis in range(grid.ndim):
        speed = np.abs(u_frozen[axis]) + sound_speed(w_frozen, gamma)
        central, dissipation = _llf_derivative_terms(U, speed, grid, axis)
        dU[0] -= dt * (u_frozen[axis] * central[0] + beta * w_frozen * central[1 + axis])
        dU[1:] -= dt * u_frozen[axis] * central[1:]
        dU[1 + axis] -= dt * (beta / k) * w_frozen * central[0]
        dU += dt * dissipation
    return dU


def max_signal_speed(state, grid):
    w = state.w
    return float(np.max(np.abs(state.u[:grid.ndim]).max(axis=0) + sound_speed(w, state.gamma), initial=0.0))


def stable_time_step(state, grid, cfl):
    speed = max_signal_speed(state, grid)
    return np.inf if speed == 0.0 else cfl * grid.h / speed


def hydro_step(state, source, dt, grid, cfl=1.0, alpha=0.0, continuity='conservative',
               rho_vac=0.0):
    """
    One explicit local Lax-Friedrichs step of A0 dU/dt + sum A_j dU/dx_j = source.

    ``source`` is the 4-row G (or F) field or None. Velocity rows get exact
    damping exp(-alpha dt). Vacuum cells (``rho <= rho_vac`` with all face
    neighbours) instead follow ``vacuum_burgers_step``. Returns the new state
    and a ``HydroDiagnostics`` record.
    """
    if continuity not in CONTINUITY_FORMS:
        raise InvalidArgument(f'unknown continuity form {continuity!r}')
    gamma = state.gamma
    speed_limit = stable_time_step(state, grid, cfl)
    if dt > speed_limit * (1.0 + 1e-12):
        raise StepRejected(f'hydro CFL violated: dt={dt:g} exceeds {speed_limit:g}',
                           required_dt=speed_limit)
    w = state.w
    u = state.u
    mask = vacuum_mask(state.rho, grid, rho_vac)
    diagnostics = HydroDiagnostics(max_speed=max_signal_speed(state, grid),
                                   vacuum_cells=int(mask.sum()))

    k = kappa(gamma)
    dU = symmetric_increment(np.concatenate([w[None], u]), w, u, gamma, grid, dt)

    if source is not None:
        source = np.asarray(source, dtype=float)
        dU[0] += dt * source[0]
        dU[1:] += dt * source[1:] / k

    if continuity == 'conservative':
        rho = state.rho.copy()
        for axis in range(grid.ndim):
            speed = np.abs(u[axis]) + sound_speed(w, gamma)
            rho += _conservative_density(state.rho, u, speed, grid, axis, dt)
        diagnostics.clipped = float(-rho.min(initial=0.0))
        rho = np.clip(rho, 0.0, None)
    else:
        w_new = w + dU[0]
        diagnostics.clipped = float(-w_new.min(initial=0.0))
        rho = rho_from_w(np.clip(w_new, 0.0, None), gamma)
    u_new = (u + dU[1:]) * np.exp(-alpha * dt)

    if mask.any():
        burgers, iterations = _burgers_fixed_point(u, mask, dt, grid, alpha)
        u_new[:, mask] = burgers
        diagnostics.burgers_iterations = iterations

    if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(u_new))):
        raise SolverDiverged('non-finite values after hydro step', dt=dt)
    if diagnostics.clipped > 0.0:
        logger.warning('clipped negative %s of magnitude %g',
                       'density' if continuity == 'conservative' else 'w', diagnostics.clipped)
    return FluidState(rho, u_new, gamma), diagnostics


def _burgers_fixed_point(u, mask, dt, grid, alpha):
    points = grid.positions()[:, mask]
    if alpha > 0.0:
        reach = np.expm1(alpha * dt) / alpha
    else:
        reach = dt
    decay = np.exp(-alpha * dt)
    guess = u[:, mask]
    scale = 1.0 + float(np.abs(guess).max(initial=0.0))
    residual = np.inf
    for iteration in range(1, BURGERS_MAX_ITERATIONS + 1):
        foot = points - reach * guess[:grid.ndim]
        updated = decay * grid.interpolate(u, foot)
        residual = float(np.abs(updated - guess).max(initial=0.0))
        guess = updated
        if residual <= BURGERS_TOLERANCE * scale:
            return guess, iteration
    raise NearSingularity(f'vacuum Burgers fixed point did not converge in {BURGERS_MAX_ITERATIONS} iterations',
                          residual=residual)


def vacuum_burgers_step(u, mask, dt, grid, alpha=0.0):
    """
    Pressureless update u(t+dt, x) = exp(-alpha dt) u(t, x - u(t+dt, x) reach)
    on the masked cells, with reach = dt (alpha = 0) or (exp(alpha dt) - 1) / alpha.
    Unmasked cells are returned untouched.
    """
    u = np.asarray(u, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    result = u.copy()
    if mask.any():
        result[:, mask], _ = _burgers_fixed_point(u, mask, dt, grid, alpha)
    return result


@dataclass(eq=False)
class FlowMap:
    """Tracer positions X(t; 0, x0), shape (ndim, N), with per-tracer labels."""

    seeds: np.ndarray
    labels: List[str]
    positions: Optional[np.ndarray] = None
    frozen: Optional[np.ndarray] = None
    time: float = 0.0
    times: List[float] = field(default_factory=list)
    divergence: List[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        self.seeds = np.array(self.seeds, dtype=float, ndmin=2)
        if len(self.labels) != self.seeds.shape[1]:
            raise InvalidArgument('one label per tracer is required')
        if self.positions is None:
            self.positions = self.seeds.copy()
        if self.frozen is None:
            self.frozen = np.zeros(self.seeds.shape[1], dtype=bool)

    def displacement(self, label=None):
        moved = np.sqrt(np.sum((self.positions - self.seeds) ** 2, axis=0))
        if label is None:
            return moved
        return moved[[lab == label for lab in self.labels]]

    def lagrangian_density(self, rho0, grid):
        """rho along each tracer from its recorded divergence history."""
        rho_seed = grid.interpolate(rho0, self.seeds)
        if not self.divergence:
            return rho_seed
        return lagrangian_density(rho_seed, np.asarray(self.divergence), self.times)


def _velocity_at(u, points, grid):
    return grid.interpolate(np.asarray(u)[:grid.ndim], points)


def advance_flow_map(flow_map, u, dt, grid, divergence=None):
    """
    Midpoint Runge-Kutta step of dX/dt = u(X). Tracers that would leave a
    non-periodic domain stay where they are and are flagged as frozen.
    When ``divergence`` is given, div u is sampled along the tracers.
    """
    active = ~flow_map.frozen
    positions = flow_map.positions.copy()
    if divergence is not None and not flow_map.times:
        flow_map.times.append(flow_map.time)
        flow_map.divergence.append(grid.interpolate(divergence, positions))
    if active.any():
        start = positions[:, active]
        k1 = _velocity_at(u, start, grid)
        k2 = _velocity_at(u, start + 0.5 * dt * k1, grid)
        moved = start + dt * k2
        if grid.periodic:
            lower = np.asarray(grid.lower)[:, None]
            extent = (np.asarray(grid.upper) - np.asarray(grid.lower))[:, None]
            moved = lower + np.mod(moved - lower, extent)
            leaving = np.zeros(moved.shape[1], dtype=bool)
        else:
            leaving = ~grid.contains(moved)
        moved[:, leaving] = start[:, leaving]
        positions[:, active] = moved
        if leaving.any():
            indices = np.flatnonzero(active)[leaving]
            flow_map.frozen[indices] = True
            logger.warning('froze %d tracers leaving the domain', leaving.sum())
    flow_map.positions = positions
    flow_map.time += dt
    if divergence is not None:
        flow_map.times.append(flow_map.time)
        flow_map.divergence.append(grid.interpolate(divergence, positions))
    return flow_map


def lagrangian_density(rho0_at_foot, divu_history, t, dt=1e-3):
    """
    rho(t) = rho0(X(0; t, x)) exp(-int_0^t div u ds) with the trapezoid rule.

    ``divu_history`` is either a callable tau -> div u along the path, sampled
    every ``dt``, or samples at the times ``t`` (a sequence).
    """
    if callable(divu_history):
        steps = max(1, int(np.ceil(t / dt - 1e-9)))
        times = np.linspace(0.0, t, steps + 1)
        samples = np.asarray([divu_history(tau) for tau in times], dtype=float)
    else:
        samples = np.asarray(divu_history, dtype=float)
        times = np.asarray(t, dtype=float)
    if samples.shape[0] < 2:
        return np.asarray(rho0_at_foot, dtype=float)
    return np.asarray(rho0_at_foot, dtype=float) * np.exp(-trapezoid(samples, times, axis=0))


@dataclass(eq=False)
class VacuumGeometry:
    """Local vacuum data: rho0 supported in A0 (radius a) inside B0 (radius b) inside B_R0."""

    a_radius: float
    b_radius: float
    R0: float
    a_mask: np.ndarray
    b_mask: np.ndarray
    m0: float

    @classmethod
    def from_grid(cls, grid, a_radius, b_radius, R0, rho0):
        radius = grid.radius()
        a_mask = radius < a_radius
        b_mask = radius < b_radius
        m0 = float(np.sum(np.asarray(rho0)[a_mask]) * grid.cell_volume)
        return cls(float(a_radius), float(b_radius), float(R0), a_mask, b_mask, m0)

    def annulus(self):
        return self.b_mask & ~self.a_mask

    def containment_ok(self):
        return 0.0 < self.a_radius < self.b_radius <= self.R0

    def boundary_seeds(self, ndim):
        """Tracers on the boundaries of A0 and B0, labelled 'A0' and 'B0'."""
        points, labels = [], []
        for label, r in (('A0', self.a_radius), ('B0', self.b_radius)):
            for axis in range(ndim):
                for sign in (1.0, -1.0):
                    point = np.zeros(ndim)
                    point[axis] = sign * r
                    points.append(point)
                    labels.append(label)
        return np.array(points).T, labels

    def flow_map(self, ndim, extra_seeds=None):
        seeds, labels = self.boundary_seeds(ndim)
        if extra_seeds is not None:
            extra = np.array(extra_seeds, dtype=float, ndmin=2)
            seeds = np.concatenate([seeds, extra], axis=1)
            labels = labels + ['seed'] * extra.shape[1]
        return FlowMap(seeds, labels)


@dataclass
class StationarityReport:
    passed: bool
    drift_a: float
    drift_b: float
    cell_width: float
    t: float

    def to_dict(self):
        return {'passed': self.passed, 'drift_a': self.drift_a, 'drift_b': self.drift_b,
                'cell_width': self.cell_width, 't': self.t}


def vacuum_stationarity_check(geometry, flow_map, t, grid):
    """Boundary tracers of A0 and B0 may drift at most one cell width."""
    drift_a = float(flow_map.displacement('A0').max(initial=0.0))
    drift_b = float(flow_map.displacement('B0').max(initial=0.0))
    passed = max(drift_a, drift_b) <= grid.h
    if not passed:
        logger.warning('vacuum boundary drifted by %g (cell width %g) at t=%g',
                       max(drift_a, drift_b), grid.h, t)
    return StationarityReport(bool(passed), drift_a, drift_b, grid.h, float(t))
