"""
Radiation coefficient models.

The LTE absorption law is K_a = rho * Kbar_a with the Gaussian-in-frequency
opacity

    Kbar_a(v, w) = D1 sqrt(R) / w * exp(-(D2 sqrt(R) / w) ((v - v0) / v0)**2),

written in the symmetrising variable w = rho**((gamma-1)/2) = sqrt(R theta).
Emission and effective absorption follow the induced-process form, so that
S - sigma_a I = -K_a (I - Bbar). Every coefficient carrying a density factor
is exactly zero at w = 0.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from euler_boltzmann.errors import InvalidArgument, InvalidModel

logger = logging.getLogger(__name__)

# Lower end of the geometric ladder w = 2**-n used for the o(rho) check
VACUUM_LADDER = 40
OH_RHO_TOLERANCE = 1e-8


@dataclass(frozen=True)
class PhysicalConstants:
    c: float = 1.0
    h: float = 1.0
    gamma: float = 2.0
    R: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        if not (self.c > 0.0 and self.h > 0.0 and self.R > 0.0):
            raise InvalidModel('c, h and R must be positive')
        if self.alpha < 0.0:
            raise InvalidModel(f'damping rate must be non-negative, got {self.alpha}')
        if not 1.0 < self.gamma <= 3.0:
            raise InvalidModel(f'adiabatic exponent must lie in (1, 3], got {self.gamma}')

    @property
    def kappa(self):
        """Velocity block of A0: (gamma-1)**2 / (4 gamma)."""
        return (self.gamma - 1.0) ** 2 / (4.0 * self.gamma)

    def to_dict(self):
        return {'c': self.c, 'h': self.h, 'gamma': self.gamma, 'R': self.R, 'alpha': self.alpha}


def _compact_profile(v, center, width):
    s = (np.asarray(v, dtype=float) - center) / width
    return np.where(np.abs(s) < 1.0, (1.0 - s ** 2) ** 2, 0.0)


@dataclass(frozen=True)
class ScatteringKernel:
    """
    Differential scattering kernels per unit density.

    The default is the isotropic separable kernel
    sigma_bar(v' -> v, mu) = sigma0 g(v') g(v) with g compactly supported,
    which is symmetric: sigma_bar(v' -> v) = sigma_bar_prime(v -> v').
    """

    sigma0: float = 0.0
    v_center: float = 1.0
    v_width: float = 1.0
    lambda1: float = 1.0
    lambda2: float = 1.0
    gain: Optional[Callable] = None  # (v_prime, v, mu) -> sigma_bar
    loss: Optional[Callable] = None  # (v, v_prime, mu) -> sigma_bar_prime

    def __post_init__(self):
        if self.sigma0 < 0.0:
            raise InvalidModel('scattering strength must be non-negative')
        if self.v_width <= 0.0:
            raise InvalidModel('scattering width must be positive')
        if self.lambda1 not in (1.0, 0.5):
            raise InvalidModel(f'lambda1 must be 1 or 1/2, got {self.lambda1}')
        if self.lambda2 not in (1.0, 2.0):
            raise InvalidModel(f'lambda2 must be 1 or 2, got {self.lambda2}')

    @classmethod
    def isotropic(cls, sigma0, v_center, v_width):
        return cls(sigma0=float(sigma0), v_center=float(v_center), v_width=float(v_width))

    @classmethod
    def zero(cls):
        return cls(sigma0=0.0)

    def sigma_bar(self, v_prime, v, mu):
        if self.gain is not None:
            return np.asarray(self.gain(v_prime, v, mu), dtype=float)
        g = _compact_profile(v_prime, self.v_center, self.v_width) * _compact_profile(
            v, self.v_center, self.v_width)
        return self.sigma0 * g * np.ones_like(np.asarray(mu, dtype=float))

    def sigma_bar_prime(self, v, v_prime, mu):
        if self.loss is not None:
            return np.asarray(self.loss(v, v_prime, mu), dtype=float)
        g = _compact_profile(v, self.v_center, self.v_width) * _compact_profile(
            v_prime, self.v_center, self.v_width)
        return self.sigma0 * g * np.ones_like(np.asarray(mu, dtype=float))

    def to_dict(self):
        return {'sigma0': self.sigma0, 'v_center': self.v_center, 'v_width': self.v_width,
                'lambda1': self.lambda1, 'lambda2': self.lambda2}


def _gaussian_kbar(v, w, constants, model):
    v, w = np.broadcast_arrays(np.asarray(v, dtype=float), np.asarray(w, dtype=float))
    out = np.zeros(v.shape)
    positive = w > 0.0
    sqrt_r = np.sqrt(constants.R)
    detuning = ((v[positive] - model.v0) / model.v0) ** 2
    wp = w[positive]
    out[positive] = model.D1 * sqrt_r / wp * np.exp(-(model.D2 * sqrt_r / wp) * detuning)
    return out


def _unit_kbar(v, w, constants, model):
    v, w = np.broadcast_arrays(np.asarray(v, dtype=float), np.asarray(w, dtype=float))
    return np.ones(v.shape)


def _zero_kbar(v, w, constants, model):
    v, w = np.broadcast_arrays(np.asarray(v, dtype=float), np.asarray(w, dtype=float))
    return np.zeros(v.shape)


KBAR_LAWS = {
    'gaussian': _gaussian_kbar,
    'unit': _unit_kbar,
    'zero': _zero_kbar,
}


@dataclass(frozen=True)
class CoefficientModel:
    D1: float = 1.0
    D2: float = 1.0
    v0: float = 1.0
    kbar_law: str = 'gaussian'
    profile: str = 'planck'
    b: float = 1.0
    v_ref: float = 1.0
    scattering: Optional[ScatteringKernel] = None
    emission_bar: Optional[Callable] = field(default=None, compare=False)
    absorption_bar: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if not (self.D1 > 0.0 and self.D2 > 0.0 and self.v0 > 0.0):
            raise InvalidModel('D1, D2 and v0 must be positive')
        if self.kbar_law not in KBAR_LAWS:
            raise InvalidModel(f'unknown opacity law {self.kbar_law!r}')
        if self.profile not in ('planck', 'constant', 'zero'):
            raise InvalidModel(f'unknown Planck profile {self.profile!r}')
        if self.b < 0.0 or self.v_ref <= 0.0:
            raise InvalidModel('profile scale must be non-negative and v_ref positive')

    @classmethod
    def zero(cls):
        return cls(kbar_law='zero')

    @property
    def is_lte(self):
        return self.emission_bar is None and self.absorption_bar is None

    def planck_profile(self, v):
        """Bbar(v) >= 0; the default is b v**3 / (exp(v / v_ref) - 1)."""
        v = np.asarray(v, dtype=float)
        if self.profile == 'zero':
            return np.zeros(v.shape)
        if self.profile == 'constant':
            return np.full(v.shape, self.b)
        return self.b * v ** 3 / np.expm1(v / self.v_ref)

    def to_dict(self):
        data = {'D1': self.D1, 'D2': self.D2, 'v0': self.v0, 'kbar_law': self.kbar_law,
                'profile': self.profile, 'b': self.b, 'v_ref': self.v_ref}
        if self.scattering is not None:
            data['scattering'] = self.scattering.to_dict()
        return data


def _check_inputs(v, w):
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.any(v <= 0.0):
        raise InvalidArgument('frequencies must be positive')
    if np.any(w < 0.0):
        raise InvalidArgument('the symmetrising variable w must be non-negative')
    return v, w


def density_factor(w, constants):
    """rho = w**(2/(gamma-1)), extended by 0 at w = 0."""
    w = np.asarray(w, dtype=float)
    return np.where(w > 0.0, np.abs(w) ** (2.0 / (constants.gamma - 1.0)), 0.0)


def kbar_a(v, w, constants, model):
    v, w = _check_inputs(v, w)
    return KBAR_LAWS[model.kbar_law](v, w, constants, model)


def absorption_ka(v, w, constants, model):
    """K_a = w**(2/(gamma-1)) Kbar_a; exactly 0 at w = 0."""
    v, w = _check_inputs(v, w)
    return density_factor(w, constants) * KBAR_LAWS[model.kbar_law](v, w, constants, model)


def _induced_factor(v, intensity, constants):
    return 1.0 + constants.c ** 2 * intensity / (2.0 * constants.h * v ** 3)


def emission_s(v, w, intensity, constants, model):
    v, w = _check_inputs(v, w)
    bbar = model.planck_profile(v)
    return absorption_ka(v, w, constants, model) * bbar * _induced_factor(v, intensity, constants)


def sigma_a_effective(v, w, constants, model):
    v, w = _check_inputs(v, w)
    bbar = model.planck_profile(v)
    return absorption_ka(v, w, constants, model) * _induced_factor(v, bbar, constants)


def emission_bar(v, w, intensity, constants, model):
    """Sbar = S / rho. Pluggable; the LTE form is Kbar_a Bbar (1 + c^2 I / (2 h v^3))."""
    v, w = _check_inputs(v, w)
    if model.emission_bar is not None:
        return np.broadcast_to(np.asarray(model.emission_bar(v, w), dtype=float),
                               np.broadcast(v, w, intensity).shape)
    bbar = model.planck_profile(v)
    return kbar_a(v, w, constants, model) * bbar * _induced_factor(v, intensity, constants)


def absorption_bar(v, w, constants, model):
    """sigma_bar_a = sigma_a / rho. Pluggable; the LTE form is Kbar_a (1 + c^2 Bbar / (2 h v^3))."""
    v, w = _check_inputs(v, w)
    if model.absorption_bar is not None:
        return np.broadcast_to(np.asarray(model.absorption_bar(v, w), dtype=float),
                               np.broadcast(v, w).shape)
    bbar = model.planck_profile(v)
    return kbar_a(v, w, constants, model) * _induced_factor(v, bbar, constants)


def scattering_matrices(kernel, frequency, quadrature):
    """
    Scattering operator sampled on the (v, Omega) quadrature.

    Returns ``gain`` of shape (G, K, G, K) with the weights and the v/v' factor
    folded in, so that in-scattering at (g, k) is sum(gain[g, k] * I), and
    ``loss`` of shape (G, K), the out-scattering rate per unit density.
    """
    v = frequency.nodes
    mu = quadrature.cosines()
    weight = np.outer(frequency.weights, quadrature.weights)
    v_to = v[:, None, None, None]
    v_from = v[None, None, :, None]
    mu_pairs = mu[None, :, None, :]
    sigma = kernel.sigma_bar(v_from, v_to, mu_pairs)
    gain = sigma * (v_to / v_from) * weight[None, None, :, :]
    sigma_prime = kernel.sigma_bar_prime(v_to, v_from, mu_pairs)
    loss = np.sum(sigma_prime * weight[None, None, :, :], axis=(2, 3))
    return gain, loss


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    detail: str = ''

    def to_dict(self):
        return {'name': self.name, 'passed': bool(self.passed),
                'measured': float(self.measured), 'detail': self.detail}


def ladder_rise(values, rtol=1e-12):
    """
    Largest relative increase along the last axis after each row's maximum.
    0 when every row decays monotonically once it has peaked.
    """
    values = np.atleast_2d(np.asarray(values, dtype=float))
    worst = 0.0
    for row in values:
        tail = row[int(np.argmax(row)):]
        if tail.size < 2:
            continue
        growth = np.diff(tail) - rtol * tail[:-1]
        scale = max(float(tail[0]), np.finfo(float).tiny)
        worst = max(worst, float(growth.max()) / scale)
    return worst


@dataclass
class StructuralReport:
    checks: List[CheckResult] = field(default_factory=list)
    limits: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(check.passed for check in self.checks)

    def __getitem__(self, name):
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def add(self, name, measured, passed=None, detail=''):
        measured = float(measured)
        if passed is None:
            passed = bool(np.isfinite(measured))
            limit = self.limits.get(name)
            if limit is not None:
                passed = passed and measured <= limit
                detail = f'{detail} (limit {limit:g})'
        self.checks.append(CheckResult(name, bool(passed), measured, detail))

    def to_dict(self):
        return {'passed': self.passed, 'checks': [c.to_dict() for c in self.checks]}


def _random_w_fields(grid, norm_bound, s, samples, rng):
    from euler_boltzmann.picard import sobolev_norm

    x = grid.positions()
    extent = np.array(grid.upper) - np.array(grid.lower)
    fields = []
    for _ in range(samples):
        w = np.zeros(grid.cells)
        for _ in range(3):
            center = np.array(grid.lower) + rng.uniform(0.25, 0.75, grid.ndim) * extent
            radius = rng.uniform(0.15, 0.3) * extent.min()
            r2 = sum((x[a] - center[a]) ** 2 for a in range(grid.ndim)) / radius ** 2
            w += rng.uniform(0.5, 1.0) * np.where(r2 < 1.0, (1.0 - r2) ** 4, 0.0)
        norm = sobolev_norm(w, s, grid)
        fields.append(w * (norm_bound * rng.uniform(0.2, 1.0) / norm))
    return fields


def check_structural_assumptions(model, constants, frequency, quadrature, grid,
                                 norm_bound, s=3, samples=6, pairs=400, seed=0, limits=None):
    """
    Sample the structural assumptions on the coefficients and report the
    measured constants. A failing model yields a failing report, never an
    exception.

    ``limits`` maps a check name to the largest constant it may measure;
    checks without a limit only need a finite constant.
    """
    from euler_boltzmann.picard import sobolev_norm

    rng = np.random.default_rng(seed)
    report = StructuralReport(limits=dict(limits or {}))
    v = frequency.nodes
    w_fields = _random_w_fields(grid, norm_bound, s, samples, rng)

    ka_ratio = 0.0
    kbar_ratio = 0.0
    negative = 0.0
    for w in w_fields:
        w_norm = sobolev_norm(w, s, grid)
        ka = absorption_ka(v.reshape((-1,) + (1,) * grid.ndim), w, constants, model)
        kb = kbar_a(v.reshape((-1,) + (1,) * grid.ndim), w, constants, model)
        intensity = model.planck_profile(v).reshape((-1,) + (1,) * grid.ndim)
        s_values = emission_s(v.reshape((-1,) + (1,) * grid.ndim), w, intensity, constants, model)
        negative = min(negative, ka.min(), kb.min(), s_values.min())
        ka_norms = np.array([sobolev_norm(k, s, grid) for k in ka])
        kb_norms = np.array([sobolev_norm(k, s, grid) for k in kb])
        ka_ratio = max(ka_ratio, ka_norms.max() / w_norm)
        kb_mixed = np.sqrt(np.sum(frequency.weights * kb_norms ** 2)) + kb_norms.max()
        kbar_ratio = max(kbar_ratio, kb_mixed / w_norm)
    report.add('ka-sobolev-bound', ka_ratio,
               detail=f'sup_v ||K_a||_{s} / ||w||_{s} over {samples} fields')
    report.add('kbar-sobolev-bound', kbar_ratio,
               detail=f'||Kbar_a||_(L2 cap Linf)(H^{s}) / ||w||_{s}')
    report.add('non-negativity', -negative, passed=negative >= 0.0,
               detail='most negative sampled K_a, Kbar_a or S (0 when none)')

    w_sup = max(float(w.max()) for w in w_fields)
    w1 = rng.uniform(0.0, w_sup, pairs)
    w2 = rng.uniform(0.0, w_sup, pairs)
    keep = np.abs(w1 - w2) > 1e-9 * w_sup
    w1, w2 = w1[keep], w2[keep]
    diff = np.abs(kbar_a(v[:, None], w1[None, :], constants, model)
                  - kbar_a(v[:, None], w2[None, :], constants, model))
    lipschitz = np.max(diff / np.abs(w1 - w2)[None, :], axis=1)
    lip_norm = lipschitz.max() + np.sqrt(np.sum(frequency.weights * lipschitz ** 2))
    report.add('kbar-lipschitz', lip_norm,
               detail='||K(v)||_(Linf cap L2) from divided differences in w')

    ladder = 2.0 ** -np.arange(1, VACUUM_LADDER + 1)
    off_peak = np.abs(v - model.v0) > 1e-9 * model.v0
    along_ladder = np.abs(kbar_a(v[off_peak, None], ladder[None, :], constants, model))
    vacuum_limit = float(np.max(along_ladder[:, -1], initial=0.0))
    report.add('o-rho', vacuum_limit, passed=vacuum_limit <= OH_RHO_TOLERANCE,
               detail=f'max_v Kbar_a(v, 2^-{VACUUM_LADDER}); must vanish as rho -> 0')
    rise = ladder_rise(along_ladder)
    report.add('o-rho-monotone', rise, passed=rise <= 0.0,
               detail='largest relative growth of Kbar_a between ladder steps past its peak')

    zero_w = np.zeros_like(v)
    at_vacuum = max(np.abs(absorption_ka(v, zero_w, constants, model)).max(),
                    np.abs(emission_s(v, zero_w, model.planck_profile(v), constants, model)).max(),
                    np.abs(sigma_a_effective(v, zero_w, constants, model)).max())
    report.add('vacuum-degeneracy', at_vacuum, passed=at_vacuum == 0.0,
               detail='K_a, S and sigma_a at w = 0')

    section4 = _section4_bounds(model, constants, frequency, w_fields, grid, s, w_sup, rng)
    report.add('section4-bounds', section4,
               detail='Sbar, sigma_bar_a norm ratios and d/dw bounds')

    if model.scattering is None:
        report.add('scattering-integrals', 0.0, detail='no scattering kernel')
    else:
        report.add('scattering-integrals', _scattering_integrals(model.scattering, frequency, quadrature),
                   detail=f'lambda1={model.scattering.lambda1}, lambda2={model.scattering.lambda2}')

    for check in report.checks:
        logger.debug('structural check %s: measured=%g passed=%s', check.name, check.measured, check.passed)
    if not report.passed:
        logger.warning('structural assumptions failed: %s',
                       ', '.join(c.name for c in report.checks if not c.passed))
    return report


def _section4_bounds(model, constants, frequency, w_fields, grid, s, w_sup, rng):
    from euler_boltzmann.picard import sobolev_norm

    v = frequency.nodes
    shape = (-1,) + (1,) * grid.ndim
    bbar = model.planck_profile(v).reshape(shape)
    worst = 0.0
    for w in w_fields:
        w_norm = sobolev_norm(w, s, grid)
        rho = density_factor(w, constants)
        s_bar = emission_bar(v.reshape(shape), w, bbar, constants, model)
        a_bar = absorption_bar(v.reshape(shape), w, constants, model)
        s_l1 = np.sum(frequency.weights * np.array([sobolev_norm(f, s, grid) for f in s_bar]))
        s_l2 = np.sqrt(np.sum(frequency.weights * np.array(
            [sobolev_norm(rho * f, s, grid) for f in s_bar]) ** 2))
        a_linf = max(sobolev_norm(rho * f, s, grid) for f in a_bar)
        a_l2 = np.sqrt(np.sum(frequency.weights * np.array(
            [sobolev_norm(f, s, grid) for f in a_bar]) ** 2))
        worst = max(worst, (s_l1 + s_l2 + a_linf + a_l2) / w_norm)
    w1 = rng.uniform(0.0, w_sup, 64)
    w2 = w1 + 1e-6 * max(w_sup, 1e-12)
    bb = model.planck_profile(v)[:, None]
    d_s = np.abs(emission_bar(v[:, None], w2[None, :], bb, constants, model)
                 - emission_bar(v[:, None], w1[None, :], bb, constants, model))
    d_a = np.abs(absorption_bar(v[:, None], w2[None, :], constants, model)
                 - absorption_bar(v[:, None], w1[None, :], constants, model))
    derivative = np.max((d_s + d_a) / (w2 - w1)[None, :], axis=1)
    return worst + derivative.max() + np.sum(frequency.weights * derivative)


def _scattering_integrals(kernel, frequency, quadrature):
    gain, loss = scattering_matrices(kernel, frequency, quadrature)
    weight = np.outer(frequency.weights, quadrature.weights)
    # gain already carries w' and v/v'; rebuild the squared kernel integral
    v = frequency.nodes
    mu = quadrature.cosines()
    sigma = kernel.sigma_bar(v[None, None, :, None], v[:, None, None, None], mu[None, :, None, :])
    ratio = (v[:, None, None, None] / v[None, None, :, None]) ** 2
    inner = np.sum(ratio * sigma ** 2 * weight[None, None, :, :], axis=(2, 3))
    first = np.sum(weight * inner ** kernel.lambda1)
    second = np.sum(weight * loss ** kernel.lambda2) + loss.max()
    return first + second
