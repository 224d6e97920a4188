"""
Blow-up certificates and run-time singularity monitors.

Certificates are analytic times computed from the initial data: the
radiation relaxation time T_c = 2 R0 / c, the second-moment bound, the
Burgers time -1/lambda_min of the vacuum Jacobian and its damped variant.
The monitor decides at run time whether a simulation has become singular.
"""
import logging
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np
from scipy.optimize import brentq

from euler_boltzmann.errors import InconsistentData, InvalidArgument, NoVacuumRegion
from euler_boltzmann.grid import UNIT_BALL_VOLUME

logger = logging.getLogger(__name__)

HEALTHY = 'healthy'
NEAR_SINGULAR = 'near-singular'
BLOWN_UP = 'blown-up'


def critical_time(R0, c):
    if not (R0 > 0.0 and c > 0.0):
        raise InvalidArgument(f'R0 and c must be positive, got R0={R0}, c={c}')
    return 2.0 * R0 / c


@dataclass
class MomentDiagnostics:
    t: float
    m: float
    M: float
    dM_dt: float


def moment_diagnostics(state, geometry, grid, t=0.0, region=None):
    """Mass, second moment and its rate 2 int x . rho u over ``region`` (B0 by default)."""
    mask = geometry.b_mask if region is None else np.asarray(region, dtype=bool)
    x = grid.positions()
    rho = state.rho
    volume = grid.cell_volume
    m = float(np.sum(rho[mask]) * volume)
    M = float(np.sum((rho * np.sum(x ** 2, axis=0))[mask]) * volume)
    flux = np.sum(x * state.u[:grid.ndim], axis=0) * rho
    dM_dt = float(2.0 * np.sum(flux[mask]) * volume)
    return MomentDiagnostics(float(t), m, M, dM_dt)


def virial_coefficient(m0, R0, gamma, dimension=3):
    """n m0^gamma R0^(n(1-gamma)) |B1|^(1-gamma): half the lower bound on M''."""
    if dimension not in UNIT_BALL_VOLUME:
        raise InvalidArgument(f'dimension must be 1, 2 or 3, got {dimension}')
    ball = UNIT_BALL_VOLUME[dimension]
    return dimension * m0 ** gamma * R0 ** (dimension * (1.0 - gamma)) * ball ** (1.0 - gamma)


def _check_moment_inputs(m0, R0, gamma, M0):
    if not m0 > 0.0:
        raise InvalidArgument(f'initial mass must be positive, got {m0}')
    if not R0 > 0.0:
        raise InvalidArgument(f'R0 must be positive, got {R0}')
    if not 1.0 < gamma <= 3.0:
        raise InvalidArgument(f'adiabatic exponent must lie in (1, 3], got {gamma}')
    if M0 > m0 * R0 ** 2 * (1.0 + 1e-14):
        raise InconsistentData(f'second moment {M0} exceeds m0 R0^2 = {m0 * R0 ** 2}')


def moment_blowup_bound(m0, R0, gamma, M0, M0prime, dimension=3):
    """
    Largest T with a T^2 + M'(0) T + M(0) - m0 R0^2 <= 0, a the virial
    coefficient: the lifespan bound of a solution that keeps its support in B_R0.
    """
    _check_moment_inputs(m0, R0, gamma, M0)
    a = virial_coefficient(m0, R0, gamma, dimension)
    gap = max(m0 * R0 ** 2 - M0, 0.0)
    root = np.sqrt(M0prime ** 2 + 4.0 * a * gap)
    if M0prime > 0.0:
        return 2.0 * gap / (M0prime + root)
    return (-M0prime + root) / (2.0 * a)


def moment_blowup_root(m0, R0, gamma, M0, M0prime, dimension=3):
    """The same bound by bracketing the quadratic and calling brentq."""
    _check_moment_inputs(m0, R0, gamma, M0)
    a = virial_coefficient(m0, R0, gamma, dimension)
    gap = m0 * R0 ** 2 - M0

    def quadratic(t):
        return a * t * t + M0prime * t - gap

    if quadratic(0.0) >= 0.0:
        return 0.0
    upper = 1.0
    while quadratic(upper) <= 0.0:
        upper *= 2.0
    return brentq(quadratic, 0.0, upper, xtol=1e-15, rtol=4 * np.finfo(float).eps)


@dataclass
class SingularityScan:
    lambda_min: Optional[float]
    t_burgers: Optional[float]
    complex_cells: int = 0
    min_real_part: Optional[float] = None
    location: Optional[List[float]] = None


def hyperbolic_singularity_scan(u0, mask, grid):
    """
    Most negative real eigenvalue of grad u0 over the vacuum ``mask`` and the
    Burgers blow-up time -1/lambda_min. Complex pairs are counted separately.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise NoVacuumRegion('the vacuum mask is empty')
    u0 = np.asarray(u0, dtype=float)
    n = grid.ndim
    jacobian = np.empty((n, n) + grid.cells)
    for a in range(n):
        for b in range(n):
            jacobian[a, b] = grid.derivative(u0[a], b)
    cells = np.moveaxis(jacobian[..., mask], -1, 0)
    eigenvalues = np.linalg.eigvals(cells)
    scale = max(1.0, float(np.abs(cells).max(initial=0.0)))
    real = np.abs(eigenvalues.imag) <= 1e-12 * scale
    complex_cells = int(np.sum(~real.all(axis=1)))
    if not real.any():
        return SingularityScan(None, None, complex_cells, float(eigenvalues.real.min()))
    values = np.where(real, eigenvalues.real, np.inf)
    per_cell = values.min(axis=1)
    worst = int(np.argmin(per_cell))
    lambda_min = float(per_cell[worst])
    if abs(lambda_min) <= 1e-12 * scale:
        lambda_min = 0.0
    location = [float(p) for p in grid.positions()[:, mask][:, worst]]
    t_burgers = -1.0 / lambda_min if lambda_min < 0.0 else None
    if complex_cells:
        logger.info('%d vacuum cells carry complex Jacobian eigenvalues', complex_cells)
    return SingularityScan(lambda_min, t_burgers, complex_cells, float(eigenvalues.real.min()), location)


def max_velocity_gradient(u, grid):
    """max_{a,b} |d_b u_a| over the grid."""
    u = np.asarray(u, dtype=float)
    largest = 0.0
    for a in range(u.shape[0]):
        for b in range(grid.ndim):
            largest = max(largest, float(np.abs(grid.derivative(u[a], b)).max(initial=0.0)))
    return largest


def damped_blowup_time(lam, alpha):
    """Root of 1 - (1/alpha)(exp(-alpha t) - 1) lambda when lambda < -alpha, else None."""
    if not alpha > 0.0:
        raise InvalidArgument(f'damping rate must be positive, got {alpha}')
    if lam >= -alpha:
        return None
    return -np.log1p(alpha / lam) / alpha


@dataclass
class BlowupCertificate:
    T_c: Optional[float] = None
    T_moment: Optional[float] = None
    T_moment_root: Optional[float] = None
    lambda_min: Optional[float] = None
    t_burgers: Optional[float] = None
    t_damped: Optional[float] = None
    monitor_threshold: Optional[float] = None
    complex_cells: int = 0
    inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.t_burgers is not None) != (self.lambda_min is not None and self.lambda_min < 0.0):
            raise InconsistentData('t_burgers is defined exactly when lambda_min < 0')

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class MonitorThresholds:
    gradient: float = 1e3
    dt_floor: float = 0.0
    moment_limit: Optional[float] = None
    clip_limit: float = 1e-10

    @classmethod
    def from_initial(cls, max_grad_u0, dt0, moment_limit=None, gradient=None):
        if gradient is None:
            gradient = max(1e3 * max_grad_u0, 1e3)
        return cls(gradient=gradient, dt_floor=1e-6 * dt0, moment_limit=moment_limit)


@dataclass(frozen=True)
class MonitorSnapshot:
    t: float
    max_grad_u: float
    min_rho: float
    dt: float
    clipped: float = 0.0
    burgers_failed: bool = False
    moment: Optional[float] = None


@dataclass
class MonitorStatus:
    status: str
    triggers: List[str]
    t: float

    @property
    def blown_up(self):
        return self.status == BLOWN_UP


def singularity_monitor(snapshot, certificate, thresholds):
    """Classify one snapshot; every trigger that fires is reported."""
    triggers = []
    if snapshot.max_grad_u >= thresholds.gradient or not np.isfinite(snapshot.max_grad_u):
        triggers.append('gradient')
    if snapshot.dt < thresholds.dt_floor:
        triggers.append('dt-collapse')
    if snapshot.clipped > thresholds.clip_limit:
        triggers.append('w-clipping')
    if snapshot.burgers_failed:
        triggers.append('burgers-failure')
    if thresholds.moment_limit is not None and snapshot.moment is not None:
        if snapshot.moment > thresholds.moment_limit * (1.0 + 1e-3):
            triggers.append('moment-bound')
    if triggers:
        status = BLOWN_UP
    elif snapshot.max_grad_u >= 0.1 * thresholds.gradient or snapshot.dt < 1e3 * thresholds.dt_floor:
        status = NEAR_SINGULAR
    else:
        status = HEALTHY
    return MonitorStatus(status, triggers, snapshot.t)


@dataclass
class HolderReport:
    passed: bool
    pressure_integral: float
    bound: float


def holder_check(state, geometry, grid, dimension=None):
    """int_B0 p_m >= m^gamma |B_R0|^(1-gamma) with m the mass over B0."""
    dimension = grid.ndim if dimension is None else dimension
    mask = geometry.b_mask
    volume = grid.cell_volume
    m = float(np.sum(state.rho[mask]) * volume)
    pressure = float(np.sum(state.p_m[mask]) * volume)
    region = max(UNIT_BALL_VOLUME[dimension] * geometry.R0 ** dimension, mask.sum() * volume)
    bound = m ** state.gamma * region ** (1.0 - state.gamma)
    return HolderReport(bool(m <= 0.0 or pressure >= bound * (1.0 - 1e-6)), pressure, bound)


@dataclass
class MomentInequalityReport:
    passed: bool
    min_second_derivative: Optional[float]
    bound: float
    samples: int


def moment_inequality_check(times, moments, m0, R0, gamma, t_start, dimension=3, tol=0.2):
    """
    Discrete second derivative of M(t) on samples with t >= t_start against
    the virial lower bound 2 a (1 - tol).
    """
    times = np.asarray(times, dtype=float)
    moments = np.asarray(moments, dtype=float)
    bound = 2.0 * virial_coefficient(m0, R0, gamma, dimension)
    if len(times) < 3:
        return MomentInequalityReport(False, None, bound, 0)
    left = np.diff(moments[:-1]) / np.diff(times[:-1])
    right = np.diff(moments[1:]) / np.diff(times[1:])
    second = 2.0 * (right - left) / (times[2:] - times[:-2])
    usable = times[:-2] >= t_start
    if not usable.any():
        return MomentInequalityReport(False, None, bound, 0)
    lowest = float(second[usable].min())
    return MomentInequalityReport(bool(lowest >= bound * (1.0 - tol)), lowest, bound, int(usable.sum()))
