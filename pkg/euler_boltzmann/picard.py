"""
Runnable analogue of the existence construction: mollified initial data,
linearised problems with coefficients frozen at the previous iterate, and
measured contraction of the successive differences.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import fft, ndimage

from euler_boltzmann.coefficients import absorption_bar, density_factor, emission_bar, scattering_matrices
from euler_boltzmann.errors import InvalidArgument, InvalidInput, StepRejected, UnsupportedOrder
from euler_boltzmann.hydro import symmetric_increment
from euler_boltzmann.symhyp import (SymmetrizedState, collision_source_f, kappa, radiation_source_g,
                                    sound_speed)
from euler_boltzmann.transport import advect, transport_step

logger = logging.getLogger(__name__)

PROFILES = ('bump', 'offset')
MODES = ('lte', 'scattering')
DEFAULT_K_MAX = 8
RATIO_FLOOR = 1e-13
GROWTH_LIMIT = 3


def _bump(y):
    r2 = np.sum(y ** 2, axis=0)
    inside = r2 < 1.0
    out = np.zeros(r2.shape)
    out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return out


def _offset_bump(y):
    centre = np.zeros((y.shape[0],) + (1,) * (y.ndim - 1))
    centre[0] = 0.5
    return _bump((y - centre) / 0.5)


_PROFILE_FUNCTIONS = {'bump': _bump, 'offset': _offset_bump}


@dataclass(frozen=True)
class MollifierConfig:
    """Mollifier of width eps_k = 2**-k eps0 with a profile supported in the unit ball."""

    epsilon0: float
    profile: str = 'bump'

    def __post_init__(self):
        if not self.epsilon0 > 0.0:
            raise InvalidArgument(f'mollifier width must be positive, got {self.epsilon0}')
        if self.profile not in PROFILES:
            raise InvalidArgument(f'unknown mollifier profile {self.profile!r}')

    def epsilon(self, k):
        return self.epsilon0 * 2.0 ** (-k)

    def kernel(self, epsilon, grid):
        """Normalised discrete kernel: full-grid (periodic) or a centred stencil."""
        profile = _PROFILE_FUNCTIONS[self.profile]
        axes = []
        for a in range(grid.ndim):
            h = grid.spacing[a]
            if grid.periodic:
                length = grid.upper[a] - grid.lower[a]
                d = np.arange(grid.cells[a]) * h
                axes.append(np.where(d >= 0.5 * length, d - length, d))
            else:
                m = int(np.ceil(epsilon / h))
                axes.append(np.arange(-m, m + 1) * h)
        offsets = np.stack(np.meshgrid(*axes, indexing='ij'))
        values = profile(offsets / epsilon)
        return values / values.sum()


@dataclass(eq=False)
class MollifiedField:
    values: np.ndarray
    applied: bool


def mollify(values, epsilon, config, grid):
    """
    Convolve the trailing spatial axes with the scaled profile. Widths below
    two cells leave the field unchanged and are reported as not applied.
    """
    values = np.asarray(values, dtype=float)
    if epsilon < 2.0 * grid.h * (1.0 - 1e-12):
        logger.debug('mollifier width %g below two cells; no-op', epsilon)
        return MollifiedField(values.copy(), False)
    kernel = config.kernel(epsilon, grid)
    lead = values.shape[:values.ndim - grid.ndim]
    flat = values.reshape((-1,) + grid.cells)
    if grid.periodic:
        spectrum = fft.rfftn(kernel)
        axes = tuple(range(1, grid.ndim + 1))
        result = fft.irfftn(fft.rfftn(flat, axes=axes) * spectrum, s=grid.cells, axes=axes)
    else:
        result = np.stack([ndimage.convolve(f, kernel, mode='nearest') for f in flat])
    return MollifiedField(result.reshape(lead + grid.cells), True)


def sobolev_norm(values, s, grid):
    """(sum_{|alpha| <= s} ||D^alpha f||_0^2)^(1/2) with centred differences."""
    if int(s) != s or s < 0:
        raise InvalidArgument(f'Sobolev order must be a non-negative integer, got {s}')
    if s > 3:
        raise UnsupportedOrder(f'Sobolev norms are available up to order 3, got {s}', order=int(s))
    values = np.asarray(values, dtype=float)
    total = 0.0
    for order in range(int(s) + 1):
        for alpha in grid.multi_indices(order):
            derivative = values
            for axis, count in enumerate(alpha):
                for _ in range(count):
                    derivative = grid.derivative(derivative, axis)
            total += float(np.sum(derivative ** 2))
    return float(np.sqrt(total * grid.cell_volume))


def l2_norm(values, grid):
    return sobolev_norm(values, 0, grid)


@dataclass(eq=False)
class Trajectory:
    """Uniform time samples of U = (w, u) (n+1, 4, *cells) and I (n+1, G, K, *cells)."""

    times: np.ndarray
    U: np.ndarray
    I: np.ndarray

    @classmethod
    def constant(cls, times, U, I):
        n = len(times)
        return cls(np.asarray(times, dtype=float),
                   np.broadcast_to(U, (n,) + U.shape).copy(),
                   np.broadcast_to(I, (n,) + I.shape).copy())

    def __len__(self):
        return len(self.times)

    def midpoint(self, n):
        """Frozen coefficients for step n: the average of both ends."""
        return 0.5 * (self.U[n] + self.U[n + 1]), 0.5 * (self.I[n] + self.I[n + 1])


@dataclass
class IterationRecord:
    k: int
    diff_U: float
    diff_I: float
    ratio: Optional[float]
    norm_s: float
    epsilon: float
    mollified: bool

    def to_dict(self):
        return {'k': self.k, 'diff_U': self.diff_U, 'diff_I': self.diff_I, 'r_k': self.ratio,
                'norm_s': self.norm_s, 'epsilon': self.epsilon, 'mollified': self.mollified}


@dataclass
class IterationTrace:
    horizon: float
    records: List[IterationRecord] = field(default_factory=list)

    def append(self, record):
        if self.records and record.k <= self.records[-1].k:
            raise InvalidArgument('iteration records are append-only in k')
        self.records.append(record)

    @property
    def differences(self):
        return [r.diff_U + r.diff_I for r in self.records]

    @property
    def ratios(self):
        return [r.ratio for r in self.records if r.ratio is not None]

    def max_ratio(self):
        """Largest measured ratio over the last half of the iterations."""
        tail = self.records[len(self.records) // 2:]
        ratios = [r.ratio for r in tail if r.ratio is not None]
        return max(ratios) if ratios else None


@dataclass
class PicardResult:
    status: str
    trace: IterationTrace
    trajectory: Trajectory

    @property
    def contracted(self):
        ratio = self.trace.max_ratio()
        return self.status == 'converged' and (ratio is None or ratio < 1.0)


def _intensity_field(template, intensities):
    return template.with_intensities(intensities)


def linearized_solve(previous, w0, u0, I0, template, model, constants, dt, mode='lte', cfl=1.0):
    """
    Solve the linear problems with coefficients frozen at ``previous``:
    transport of I with frozen absorption, and the symmetric system for U with
    frozen A_j and frozen source. Returns the new trajectory on the same times.
    """
    if mode not in MODES:
        raise InvalidArgument(f'unknown linearisation mode {mode!r}')
    grid = template.grid
    gamma = constants.gamma
    k = kappa(gamma)
    U = np.concatenate([np.asarray(w0, dtype=float)[None], np.asarray(u0, dtype=float)])
    I = np.asarray(I0, dtype=float)
    U_out = [U]
    I_out = [I]
    if mode == 'scattering':
        if model.scattering is None:
            raise InvalidArgument('scattering mode needs a scattering kernel')
        gain, loss = scattering_matrices(model.scattering, template.frequency, template.quadrature)
    for n in range(len(previous) - 1):
        U_frozen, I_frozen = previous.midpoint(n)
        if not (np.all(np.isfinite(U_frozen)) and np.all(np.isfinite(I_frozen))):
            raise InvalidInput('non-finite frozen coefficients', step=n)
        w_f = np.clip(U_frozen[0], 0.0, None)
        u_f = U_frozen[1:]
        speed = float(np.max(np.abs(u_f[:grid.ndim]).max(axis=0) + sound_speed(w_f, gamma), initial=0.0))
        if speed > 0.0 and dt * speed > cfl * grid.h * (1.0 + 1e-12):
            raise StepRejected('linearised CFL violated', required_dt=cfl * grid.h / speed)
        frozen_field = _intensity_field(template, I_frozen)
        if mode == 'lte':
            source = radiation_source_g(frozen_field, w_f, model, template.quadrature, constants)
        else:
            source = collision_source_f(frozen_field, w_f, model, template.quadrature, constants)
        step = dt * np.concatenate([source[:1], source[1:] / k])
        U = U + symmetric_increment(U, w_f, u_f, gamma, grid, dt) + step

        current = _intensity_field(template, I)
        if mode == 'lte':
            I = transport_step(current, SymmetrizedState(w_f, u_f), model, dt, constants,
                               backend='characteristic').intensities
        else:
            moved = advect(current, dt, constants.c, model)
            shape = (-1, 1) + (1,) * grid.ndim
            v = template.frequency.nodes.reshape(shape)
            rho = density_factor(w_f, constants)
            inflow = np.einsum('gkhl,hl...->gk...', gain, I_frozen)
            emission = emission_bar(v, w_f, I_frozen, constants, model)
            absorption = absorption_bar(v, w_f, constants, model) + loss.reshape(loss.shape + (1,) * grid.ndim)
            scale = constants.c * dt * rho
            I = np.clip((moved + scale * (emission + inflow)) / (1.0 + scale * absorption), 0.0, None)
        U_out.append(U)
        I_out.append(I)
    return Trajectory(previous.times.copy(), np.stack(U_out), np.stack(I_out))


def _differences(new, old, template):
    grid = template.grid
    du = new.U - old.U
    diff_U = max(l2_norm(du[n], grid) for n in range(len(new)))
    di = new.I - old.I
    axes = tuple(range(3, di.ndim))
    # time-max inside the (v, Omega) quadrature
    per_ray = np.max(np.sum(di ** 2, axis=axes), axis=0) * grid.cell_volume
    weights = np.outer(template.frequency.weights, template.quadrature.weights)
    diff_I = float(np.sqrt(np.sum(weights * per_ray)))
    return float(diff_U), diff_I


def picard_iterate(w0, u0, field0, model, constants, mollifier, horizon, dt, k_max=DEFAULT_K_MAX,
                   mode='lte', s=3, cfl=1.0):
    """
    Iterate ``linearized_solve`` for k = 0..k_max with the initial data
    mollified at width eps_{k+1}. Growth of the differences for three
    consecutive iterations stops the run with status 'contraction-failure'.
    """
    if not horizon > 0.0 or not dt > 0.0:
        raise InvalidArgument('horizon and time step must be positive')
    grid = field0.grid
    steps = max(1, int(np.ceil(horizon / dt - 1e-9)))
    dt = horizon / steps
    times = np.linspace(0.0, horizon, steps + 1)
    u0 = np.asarray(u0, dtype=float)

    def data(level):
        w = mollify(w0, mollifier.epsilon(level), mollifier, grid)
        u = mollify(u0, mollifier.epsilon(level), mollifier, grid)
        I = mollify(field0.intensities, mollifier.epsilon(level), mollifier, grid)
        return np.clip(w.values, 0.0, None), u.values, np.clip(I.values, 0.0, None), w.applied

    w_start, u_start, I_start, _ = data(0)
    current = Trajectory.constant(times, np.concatenate([w_start[None], u_start]), I_start)
    trace = IterationTrace(horizon=float(horizon))
    status = 'converged'
    growth = 0
    floor = None
    logger.info('Picard iteration: horizon=%g, dt=%g, k_max=%d, mode=%s', horizon, dt, k_max, mode)
    for k in range(k_max + 1):
        w_k, u_k, I_k, applied = data(k + 1)
        following = linearized_solve(current, w_k, u_k, I_k, field0, model, constants, dt, mode, cfl)
        diff_U, diff_I = _differences(following, current, field0)
        total = diff_U + diff_I
        previous_total = trace.differences[-1] if trace.records else None
        if floor is None and total > 0.0:
            floor = max(RATIO_FLOOR, 1e-10 * total)
        ratio = None
        if previous_total is not None and floor is not None and previous_total > floor:
            ratio = total / previous_total
        norm_s = max(sobolev_norm(following.U[n], s, grid) for n in range(len(following)))
        trace.append(IterationRecord(k, diff_U, diff_I, ratio, norm_s, mollifier.epsilon(k + 1), applied))
        logger.debug('k=%d diff_U=%.3e diff_I=%.3e r=%s norm_s=%.3e', k, diff_U, diff_I, ratio, norm_s)
        current = following
        growth = growth + 1 if ratio is not None and ratio > 1.0 else 0
        if growth >= GROWTH_LIMIT:
            status = 'contraction-failure'
            logger.warning('differences grew for %d consecutive iterations at k=%d', growth, k)
            break
    return PicardResult(status, trace, current)


@dataclass
class HorizonSweep:
    horizons: List[float]
    ratios: List[Optional[float]]
    first_failing: Optional[float]

    def to_dict(self):
        return {'horizons': self.horizons, 'ratios': self.ratios, 'first_failing': self.first_failing}


def horizon_sweep(w0, u0, field0, model, constants, mollifier, horizon, dt, doublings=4, **kwargs):
    """Repeat the iteration with the horizon doubled each time; report the first ratio >= 1."""
    horizons, ratios = [], []
    first_failing = None
    for i in range(doublings + 1):
        T = horizon * 2.0 ** i
        result = picard_iterate(w0, u0, field0, model, constants, mollifier, T, dt, **kwargs)
        ratio = result.trace.max_ratio()
        horizons.append(T)
        ratios.append(ratio)
        failing = result.status != 'converged' or (ratio is not None and ratio >= 1.0)
        if failing and first_failing is None:
            first_failing = T
            break
    return HorizonSweep(horizons, ratios, first_failing)


def mollifier_telescoping(values, config, grid, levels=DEFAULT_K_MAX):
    """
    ||J_{k+1} u - J_k u||_0 for the levels where both widths are resolved,
    and the ratios of successive differences.
    """
    mollified = [mollify(values, config.epsilon(k), config, grid) for k in range(levels + 1)]
    differences = []
    for k in range(levels):
        if mollified[k].applied and mollified[k + 1].applied:
            differences.append(l2_norm(mollified[k + 1].values - mollified[k].values, grid))
    ratios = [b / a for a, b in zip(differences, differences[1:]) if a > 0.0]
    return differences, ratios
