"""
Experiment definitions: grid, constants, coefficient model, initial data
generators, vacuum geometry and the certificate values each one should
reproduce.

Scenarios are plain frozen dataclasses and round-trip through INI files
(``configparser``), so every built-in can be exported, edited and loaded back.
"""
import configparser
import logging
import math
import os
from dataclasses import dataclass, field, fields, replace
from typing import Optional, Tuple

import numpy as np

from euler_boltzmann import config
from euler_boltzmann.blowup import (BlowupCertificate, critical_time, damped_blowup_time,
                                    hyperbolic_singularity_scan, max_velocity_gradient, moment_blowup_bound,
                                    moment_blowup_root, moment_diagnostics)
from euler_boltzmann.coefficients import CheckResult, CoefficientModel, PhysicalConstants, ScatteringKernel
from euler_boltzmann.errors import EulerBoltzmannError, InvalidConfig, InvalidInput, NotFound
from euler_boltzmann.grid import Grid
from euler_boltzmann.hydro import FluidState, VacuumGeometry, vacuum_mask
from euler_boltzmann.picard import MollifierConfig, sobolev_norm
from euler_boltzmann.quadrature import build_frequency_grid, build_ordinates, build_rod_ordinates
from euler_boltzmann.transport import RadiationField

logger = logging.getLogger(__name__)

CLAIMS = ('local-vacuum', 'hyperbolic-set', 'damped')
MAX_CELLS_3D = 64
MAX_ORDINATE_ORDER_3D = 8
MAX_GROUPS_3D = 4
VACUUM_RELATIVE_THRESHOLD = 1e-12


@dataclass(frozen=True)
class ProfileSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def get(self, name, default=None):
        return float(self.params.get(name, default))


@dataclass(frozen=True)
class GeometrySpec:
    a_radius: float
    b_radius: float
    R0: float


@dataclass(frozen=True)
class RunSettings:
    horizon: float = 1.0
    cadence: int = 10
    dt: Optional[float] = None
    cfl: float = 0.5
    backend: str = 'characteristic'
    split: str = 'strang'
    seed: Optional[int] = None
    couple_fluid: bool = True
    continuity: str = 'conservative'
    k_max: int = 8
    picard_horizon: float = 0.1
    picard_dt: Optional[float] = None
    gradient_threshold: Optional[float] = None


@dataclass
class InitialData:
    grid: Grid
    quadrature: object
    frequency: object
    rho: np.ndarray
    u: np.ndarray
    field: RadiationField
    geometry: Optional[VacuumGeometry] = None


# -- profile generators ------------------------------------------------------

def _radius(grid, spec):
    x = grid.positions()
    shift = np.zeros((grid.ndim,) + (1,) * grid.ndim)
    shift[0] = spec.get('center', 0.0)
    return np.sqrt(np.sum((x - shift) ** 2, axis=0))


def _bump(grid, spec):
    radius = spec.get('radius', 1.0)
    r2 = (_radius(grid, spec) / radius) ** 2
    return np.where(r2 < 1.0, (1.0 - r2) ** 4, 0.0)


def _rho_bump(grid, spec, rng):
    return spec.get('amplitude', 1.0) * _bump(grid, spec)


def _rho_uniform(grid, spec, rng):
    return np.full(grid.cells, spec.get('value', 1.0))


def _rho_zero(grid, spec, rng):
    return np.zeros(grid.cells)


def _rho_sine(grid, spec, rng):
    x = grid.positions()[0]
    return spec.get('mean', 1.0) + spec.get('amplitude', 0.0) * np.sin(spec.get('wavenumber', 1.0) * x)


RHO_PROFILES = {'bump': _rho_bump, 'uniform': _rho_uniform, 'zero': _rho_zero, 'sine': _rho_sine}


def _u_zero(grid, spec, rng):
    return np.zeros((3,) + grid.cells)


def _u_linear(grid, spec, rng):
    u = np.zeros((3,) + grid.cells)
    u[:grid.ndim] = spec.get('slope', -1.0) * grid.positions()
    return u


def _u_rotation(grid, spec, rng):
    if grid.ndim != 3:
        raise InvalidInput('rotation velocity profiles need a three-dimensional grid')
    x = grid.positions()
    omega = spec.get('omega', 1.0)
    u = np.zeros((3,) + grid.cells)
    u[0], u[1] = -omega * x[1], omega * x[0]
    return u


def _u_uniform(grid, spec, rng):
    u = np.zeros((3,) + grid.cells)
    u[0] = spec.get('value', 0.0)
    return u


def _u_annulus(grid, spec, rng):
    r = _radius(grid, spec)
    u = np.zeros((3,) + grid.cells)
    inside = (r >= spec.get('inner', 0.0)) & (r < spec.get('outer', 1.0))
    u[0][inside] = spec.get('value', 0.1)
    return u


def _u_sine(grid, spec, rng):
    u = np.zeros((3,) + grid.cells)
    u[0] = spec.get('amplitude', 0.0) * np.sin(spec.get('wavenumber', 1.0) * grid.positions()[0])
    return u


U_PROFILES = {'zero': _u_zero, 'linear': _u_linear, 'rotation': _u_rotation, 'uniform': _u_uniform,
              'annulus': _u_annulus, 'sine': _u_sine}


def _i_equilibrium(grid, spec, rng, bbar, quadrature):
    return np.broadcast_to(bbar, bbar.shape[:1] + (len(quadrature),) + grid.cells).copy()


def _i_bump_excess(grid, spec, rng, bbar, quadrature):
    factor = 1.0 + spec.get('amplitude', 0.1) * _bump(grid, spec)
    return np.broadcast_to(bbar * factor, bbar.shape[:1] + (len(quadrature),) + grid.cells).copy()


def _i_noise_excess(grid, spec, rng, bbar, quadrature):
    shape = bbar.shape[:1] + (len(quadrature),) + grid.cells
    noise = rng.uniform(0.0, 1.0, shape)
    return bbar * (1.0 + spec.get('amplitude', 0.1) * noise * _bump(grid, spec))


def _i_uniform_excess(grid, spec, rng, bbar, quadrature):
    shape = bbar.shape[:1] + (len(quadrature),) + grid.cells
    return np.broadcast_to(bbar * (1.0 + spec.get('amplitude', 0.1)), shape).copy()


INTENSITY_PROFILES = {'equilibrium': _i_equilibrium, 'bump-excess': _i_bump_excess,
                      'noise-excess': _i_noise_excess, 'uniform-excess': _i_uniform_excess}


# -- scenario ----------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    name: str
    dimension: int
    cells: int
    lower: float
    upper: float
    description: str = ''
    periodic: bool = False
    ordinates: int = 0  # 0 selects the two-stream rod set
    groups: int = 2
    v_max: float = 4.0
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    model: CoefficientModel = field(default_factory=CoefficientModel)
    rho0: ProfileSpec = field(default_factory=lambda: ProfileSpec('zero'))
    u0: ProfileSpec = field(default_factory=lambda: ProfileSpec('zero'))
    intensity0: ProfileSpec = field(default_factory=lambda: ProfileSpec('equilibrium'))
    geometry: Optional[GeometrySpec] = None
    mollifier: Optional[MollifierConfig] = None
    claims: Tuple[str, ...] = ()
    expected: dict = field(default_factory=dict)
    run: RunSettings = field(default_factory=RunSettings)

    def __post_init__(self):
        if self.dimension not in (1, 3):
            raise InvalidConfig(f'scenarios are one- or three-dimensional, got {self.dimension}')
        if self.cells < 4:
            raise InvalidConfig(f'at least 4 cells per axis are required, got {self.cells}')
        if self.ordinates == 0 and self.dimension == 3:
            raise InvalidConfig('three-dimensional scenarios need a product ordinate set')
        if self.dimension == 3 and (self.cells > MAX_CELLS_3D or self.ordinates > MAX_ORDINATE_ORDER_3D
                                    or self.groups > MAX_GROUPS_3D):
            raise InvalidConfig(f'three-dimensional runs are capped at {MAX_CELLS_3D}^3 cells, '
                                f'ordinate order {MAX_ORDINATE_ORDER_3D} and {MAX_GROUPS_3D} groups')
        for claim in self.claims:
            if claim not in CLAIMS:
                raise InvalidConfig(f'unknown precondition {claim!r}')
        for spec, registry in ((self.rho0, RHO_PROFILES), (self.u0, U_PROFILES),
                               (self.intensity0, INTENSITY_PROFILES)):
            if spec.kind not in registry:
                raise InvalidConfig(f'unknown profile {spec.kind!r}')

    def grid(self):
        if self.dimension == 1:
            return Grid.line(self.cells, self.lower, self.upper, self.periodic)
        return Grid.cube(self.cells, self.lower, self.upper, self.periodic)

    def quadrature(self):
        return build_rod_ordinates() if self.ordinates == 0 else build_ordinates(self.ordinates)

    def frequency(self):
        return build_frequency_grid(self.groups, self.v_max)

    def seed(self):
        return config.DEFAULT_SEED if self.run.seed is None else self.run.seed

    def initial_data(self, seed=None):
        """Generate (rho0, u0, I0); identical seeds give bit-identical fields."""
        rng = np.random.default_rng(self.seed() if seed is None else seed)
        grid = self.grid()
        quadrature = self.quadrature()
        frequency = self.frequency()
        rho = RHO_PROFILES[self.rho0.kind](grid, self.rho0, rng)
        u = U_PROFILES[self.u0.kind](grid, self.u0, rng)
        bbar = self.model.planck_profile(frequency.nodes).reshape((-1, 1) + (1,) * grid.ndim)
        intensities = INTENSITY_PROFILES[self.intensity0.kind](grid, self.intensity0, rng, bbar, quadrature)
        field_ = RadiationField(intensities, frequency, quadrature, grid)
        geometry = None
        if self.geometry is not None:
            geometry = VacuumGeometry.from_grid(grid, self.geometry.a_radius, self.geometry.b_radius,
                                                self.geometry.R0, rho)
        return InitialData(grid, quadrature, frequency, rho, u, field_, geometry)

    def with_overrides(self, overrides):
        """Apply RunConfig overrides: grid sizes to the scenario, the rest to its run settings."""
        scenario_keys = {k: overrides[k] for k in ('cells', 'ordinates', 'groups') if k in overrides}
        run_keys = {k: v for k, v in overrides.items() if k not in scenario_keys}
        return replace(self, run=replace(self.run, **run_keys), **scenario_keys)


def fluid_state(data, constants):
    return FluidState(data.rho, data.u, constants.gamma)


def vacuum_threshold(rho):
    return VACUUM_RELATIVE_THRESHOLD * float(np.max(rho, initial=0.0))


def build_certificate(scenario, data=None):
    """Certificate times computed from the generated fields."""
    data = scenario.initial_data() if data is None else data
    grid = data.grid
    constants = scenario.constants
    certificate = BlowupCertificate()
    inputs = {}
    if data.geometry is not None:
        geometry = data.geometry
        certificate.T_c = critical_time(geometry.R0, constants.c)
        moments = moment_diagnostics(fluid_state(data, constants), geometry, grid)
        inputs.update(m0=moments.m, M0=moments.M, M0prime=moments.dM_dt, R0=geometry.R0)
        if moments.m > 0.0:
            M0 = min(moments.M, moments.m * geometry.R0 ** 2)
            certificate.T_moment = float(moment_blowup_bound(moments.m, geometry.R0, constants.gamma, M0,
                                                             moments.dM_dt, dimension=grid.ndim))
            certificate.T_moment_root = float(moment_blowup_root(moments.m, geometry.R0, constants.gamma, M0,
                                                                 moments.dM_dt, dimension=grid.ndim))
    mask = vacuum_mask(data.rho, grid, vacuum_threshold(data.rho))
    if mask.any():
        scan = hyperbolic_singularity_scan(data.u, mask, grid)
        certificate.lambda_min = scan.lambda_min
        certificate.t_burgers = scan.t_burgers
        certificate.complex_cells = scan.complex_cells
        if constants.alpha > 0.0 and scan.lambda_min is not None:
            certificate.t_damped = damped_blowup_time(scan.lambda_min, constants.alpha)
    if scenario.run.gradient_threshold is not None:
        certificate.monitor_threshold = scenario.run.gradient_threshold
    else:
        certificate.monitor_threshold = max(1e3 * max_velocity_gradient(data.u, grid), 1e3)
    inputs['alpha'] = constants.alpha
    certificate.inputs = inputs
    return certificate


# -- validation --------------------------------------------------------------

@dataclass
class ScenarioReport:
    name: str
    checks: list = field(default_factory=list)
    m0: float = 0.0
    norms: dict = field(default_factory=dict)
    far_field_deviation: float = 0.0

    @property
    def passed(self):
        return all(check.passed for check in self.checks)

    @property
    def failures(self):
        return [check for check in self.checks if not check.passed]

    def add(self, name, passed, measured=0.0, detail=''):
        self.checks.append(CheckResult(name, bool(passed), float(measured), detail))

    def to_dict(self):
        return {'name': self.name, 'passed': self.passed, 'm0': self.m0, 'norms': self.norms,
                'far_field_deviation': self.far_field_deviation,
                'checks': [check.to_dict() for check in self.checks]}


def _located(grid, mask, limit=5):
    points = grid.positions()[:, mask].T[:limit]
    return '; '.join('(' + ', '.join(f'{c:.4g}' for c in p) + ')' for p in points)


def _expected_tolerance(key):
    # integrals on the grid carry quadrature error, closed-form times do not
    return 1e-3 if key in ('m0', 'M0', 'T_moment') else 1e-9


def validate_scenario(scenario, seed=None):
    """Check every declared precondition against the generated fields; never raises on failure."""
    report = ScenarioReport(scenario.name)
    try:
        data = scenario.initial_data(seed)
    except EulerBoltzmannError as e:
        report.add('initial-data', False, detail=e.message)
        return report
    grid = data.grid
    report.add('density-nonnegative', data.rho.min() >= 0.0, data.rho.min())
    report.add('intensity-nonnegative', data.field.intensities.min() >= 0.0, data.field.intensities.min())
    if data.rho.min() < 0.0:
        return report
    w0 = FluidState(data.rho, data.u, scenario.constants.gamma).w
    report.norms = {'w0_h3': sobolev_norm(w0, 3, grid), 'u0_h3': sobolev_norm(data.u, 3, grid)}

    if 'local-vacuum' in scenario.claims:
        geometry = data.geometry
        if geometry is None:
            report.add('geometry', False, detail='local vacuum data needs a [geometry] section')
        else:
            report.m0 = geometry.m0
            report.add('containment', geometry.containment_ok(), geometry.b_radius,
                       detail=f'A0 radius {geometry.a_radius}, B0 radius {geometry.b_radius}, R0 {geometry.R0}')
            annulus = geometry.annulus()
            tolerance = vacuum_threshold(data.rho)
            offending = annulus & ((data.rho > tolerance) | np.any(np.abs(data.u) > 1e-12, axis=0))
            detail = f'non-vacuum cells at x = {_located(grid, offending)}' if offending.any() else ''
            report.add('annulus-vacuum', not offending.any(), offending.sum(), detail)
            report.add('positive-mass', geometry.m0 > 0.0, geometry.m0)
            bbar = scenario.model.planck_profile(data.frequency.nodes).reshape((-1, 1) + (1,) * grid.ndim)
            far = grid.radius() >= geometry.R0
            deviation = float(np.abs(data.field.intensities - bbar)[..., far].max(initial=0.0))
            report.far_field_deviation = deviation
            report.add('far-field-equilibrium', deviation <= 1e-12 * max(1.0, float(bbar.max())), deviation)

    certificate = build_certificate(scenario, data)
    if 'hyperbolic-set' in scenario.claims:
        ok = certificate.lambda_min is not None and certificate.lambda_min < 0.0
        report.add('hyperbolic-set', ok, certificate.lambda_min if certificate.lambda_min is not None else 0.0,
                   detail='' if ok else 'no vacuum cell with a negative real Jacobian eigenvalue')
    if 'damped' in scenario.claims:
        alpha = scenario.constants.alpha
        ok = alpha > 0.0 and certificate.lambda_min is not None and certificate.lambda_min < -alpha
        report.add('damped-condition', ok, certificate.lambda_min or 0.0,
                   detail=f'lambda_min must be below -alpha = {-alpha}')

    if scenario.expected:
        computed = dict(certificate.inputs)
        computed.update({k: getattr(certificate, k) for k in ('T_c', 'T_moment', 'lambda_min',
                                                               't_burgers', 't_damped')})
        worst, mismatched = 0.0, []
        for key, value in scenario.expected.items():
            actual = computed.get(key)
            if actual is None:
                mismatched.append(f'{key} not computed')
                continue
            error = abs(actual - value) / max(abs(value), 1e-300)
            worst = max(worst, error)
            if error > _expected_tolerance(key):
                mismatched.append(f'{key}: expected {value:.12g}, computed {actual:.12g}')
        report.add('expected-certificate', not mismatched, worst, '; '.join(mismatched))

    for check in report.failures:
        logger.warning('scenario %s failed %s: %s', scenario.name, check.name, check.detail)
    return report


# -- built-ins ---------------------------------------------------------------

BUMP_MASS_1D = 256.0 / 315.0       # int_{-1}^{1} (1 - x^2)^4 dx
BUMP_MOMENT_1D = 256.0 / 3465.0    # int_{-1}^{1} x^2 (1 - x^2)^4 dx


def _bump_certificate_1d(amplitude, radius, R0, gamma, c):
    m0 = amplitude * radius * BUMP_MASS_1D
    M0 = amplitude * radius ** 3 * BUMP_MOMENT_1D
    return {'T_c': 2.0 * R0 / c, 'm0': m0, 'M0': M0,
            'T_moment': float(moment_blowup_bound(m0, R0, gamma, M0, 0.0, dimension=1))}


def builtin_scenarios():
    model = CoefficientModel(D1=1.0, D2=1.0, v0=2.0)
    return [
        Scenario(
            name='lemma31-relaxation',
            description='Radiation-only relaxation to Bbar inside B0 by the critical time 2 R0 / c',
            dimension=1, cells=512, lower=-3.0, upper=3.0,
            constants=PhysicalConstants(c=1.0, gamma=2.0),
            model=model,
            rho0=ProfileSpec('bump', {'amplitude': 1.0, 'radius': 0.5}),
            intensity0=ProfileSpec('bump-excess', {'amplitude': 1.0, 'radius': 1.0}),
            geometry=GeometrySpec(0.5, 0.8, 1.0),
            claims=('local-vacuum',),
            expected={'T_c': 2.0},
            run=RunSettings(horizon=2.0, cadence=50, cfl=1.0, couple_fluid=False),
        ),
        Scenario(
            name='theorem34-moment',
            description='Coupled run with local vacuum data; second moment against the virial bound',
            dimension=1, cells=256, lower=-4.0, upper=4.0,
            constants=PhysicalConstants(c=4.0, gamma=3.0),
            model=model,
            rho0=ProfileSpec('bump', {'amplitude': 0.25, 'radius': 1.0}),
            intensity0=ProfileSpec('bump-excess', {'amplitude': 0.1, 'radius': 1.0}),
            geometry=GeometrySpec(1.0, 1.2, 1.2),
            claims=('local-vacuum',),
            expected=_bump_certificate_1d(0.25, 1.0, 1.2, 3.0, 4.0),
            run=RunSettings(horizon=1.1, cadence=20, cfl=0.5),
        ),
        Scenario(
            name='theorem36-burgers-1d',
            description='Vacuum region with compressive velocity u0 = -x',
            dimension=1, cells=400, lower=-1.0, upper=1.0,
            constants=PhysicalConstants(c=1.0, gamma=2.0),
            model=model,
            u0=ProfileSpec('linear', {'slope': -1.0}),
            claims=('hyperbolic-set',),
            expected={'lambda_min': -1.0, 't_burgers': 1.0},
            run=RunSettings(horizon=1.2, cadence=500, cfl=0.5),
        ),
        Scenario(
            name='corollary38-damped',
            description='Damped pressureless vacuum dynamics with lambda < -alpha',
            dimension=1, cells=400, lower=-1.0, upper=1.0,
            constants=PhysicalConstants(c=1.0, gamma=2.0, alpha=1.0),
            model=model,
            u0=ProfileSpec('linear', {'slope': -2.0}),
            claims=('hyperbolic-set', 'damped'),
            expected={'lambda_min': -2.0, 't_burgers': 0.5, 't_damped': math.log(2.0)},
            run=RunSettings(horizon=1.0, cadence=500, cfl=0.5),
        ),
        Scenario(
            name='picard-contraction',
            description='Successive linearised solves on small smooth periodic data',
            dimension=1, cells=2048, lower=0.0, upper=1.0, periodic=True,
            constants=PhysicalConstants(c=1.0, gamma=2.0),
            model=model,
            rho0=ProfileSpec('sine', {'mean': 0.01, 'amplitude': 0.005, 'wavenumber': 2.0 * math.pi}),
            u0=ProfileSpec('sine', {'amplitude': 0.01, 'wavenumber': 2.0 * math.pi}),
            intensity0=ProfileSpec('bump-excess', {'amplitude': 0.1, 'radius': 0.25, 'center': 0.5}),
            mollifier=MollifierConfig(epsilon0=0.5, profile='offset'),
            run=RunSettings(horizon=0.1, cadence=10, cfl=1.0, picard_horizon=0.1, picard_dt=0.002),
        ),
        Scenario(
            name='section4-scattering',
            description='Coupled run with the isotropic scattering kernel switched on',
            dimension=1, cells=128, lower=-2.0, upper=2.0,
            constants=PhysicalConstants(c=1.0, gamma=2.0),
            model=replace(model, scattering=ScatteringKernel.isotropic(0.5, 2.0, 2.5)),
            rho0=ProfileSpec('bump', {'amplitude': 0.5, 'radius': 1.0}),
            intensity0=ProfileSpec('bump-excess', {'amplitude': 0.5, 'radius': 1.0}),
            geometry=GeometrySpec(1.0, 1.5, 1.5),
            claims=('local-vacuum',),
            expected={'T_c': 3.0},
            run=RunSettings(horizon=0.5, cadence=10, cfl=0.5),
        ),
        Scenario(
            name='lemma31-annulus',
            description='Vacuum annulus stays put: boundary tracers of A0 and B0 do not drift',
            dimension=1, cells=256, lower=-2.0, upper=2.0,
            constants=PhysicalConstants(c=1.0, gamma=3.0),
            model=model,
            rho0=ProfileSpec('bump', {'amplitude': 1e-4, 'radius': 0.4}),
            intensity0=ProfileSpec('bump-excess', {'amplitude': 0.5, 'radius': 0.8}),
            geometry=GeometrySpec(0.4, 0.7, 0.8),
            claims=('local-vacuum',),
            expected={'T_c': 1.6},
            run=RunSettings(horizon=3.2, cadence=50, cfl=0.5),
        ),
    ]


def get_scenario(name):
    for scenario in builtin_scenarios():
        if scenario.name == name:
            return scenario
    raise NotFound(f'Unknown scenario {name!r}', scenario=name)


def resolve_scenario(name_or_path, validate=True):
    """A scenario file path when one exists, otherwise a built-in name."""
    if os.path.isfile(name_or_path):
        return load_scenario(name_or_path, validate=validate)
    return get_scenario(name_or_path)


# -- INI persistence ---------------------------------------------------------

def _format(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _profile_section(spec):
    section = {'kind': spec.kind}
    section.update({k: _format(float(v)) for k, v in sorted(spec.params.items())})
    return section


def scenario_to_ini(scenario):
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser['scenario'] = {'name': scenario.name, 'description': scenario.description,
                          'dimension': str(scenario.dimension), 'claims': ', '.join(scenario.claims)}
    parser['grid'] = {'cells': str(scenario.cells), 'lower': _format(scenario.lower),
                      'upper': _format(scenario.upper), 'periodic': _format(scenario.periodic),
                      'ordinates': str(scenario.ordinates), 'groups': str(scenario.groups),
                      'v_max': _format(scenario.v_max)}
    parser['constants'] = {k: _format(v) for k, v in scenario.constants.to_dict().items()}
    model = scenario.model.to_dict()
    model.pop('scattering', None)
    parser['model'] = {k: _format(v) for k, v in model.items()}
    if scenario.model.scattering is not None:
        parser['scattering'] = {k: _format(float(v)) for k, v in scenario.model.scattering.to_dict().items()}
    parser['rho0'] = _profile_section(scenario.rho0)
    parser['u0'] = _profile_section(scenario.u0)
    parser['intensity0'] = _profile_section(scenario.intensity0)
    if scenario.geometry is not None:
        parser['geometry'] = {k.name: _format(getattr(scenario.geometry, k.name))
                              for k in fields(GeometrySpec)}
    if scenario.mollifier is not None:
        parser['mollifier'] = {'epsilon0': _format(scenario.mollifier.epsilon0),
                               'profile': scenario.mollifier.profile}
    if scenario.expected:
        parser['expected'] = {k: _format(float(v)) for k, v in scenario.expected.items()}
    parser['run'] = {f.name: _format(getattr(scenario.run, f.name)) for f in fields(RunSettings)
                     if getattr(scenario.run, f.name) is not None}
    return parser


def write_scenario(scenario, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w') as handle:
        scenario_to_ini(scenario).write(handle)
    return path


def _profile_from(section):
    params = {k: float(v) for k, v in section.items() if k != 'kind'}
    return ProfileSpec(section['kind'], params)


_RUN_TYPES = {'horizon': float, 'cadence': int, 'dt': float, 'cfl': float, 'backend': str, 'split': str,
              'seed': int, 'couple_fluid': 'bool', 'continuity': str, 'k_max': int,
              'picard_horizon': float, 'picard_dt': float, 'gradient_threshold': float}


def scenario_from_ini(parser):
    try:
        head = parser['scenario']
        grid = parser['grid']
        constants = PhysicalConstants(**{k: float(v) for k, v in parser['constants'].items()})
        model_section = dict(parser['model'])
        scattering = None
        if parser.has_section('scattering'):
            scattering = ScatteringKernel(**{k: float(v) for k, v in parser['scattering'].items()})
        model = CoefficientModel(
            D1=float(model_section['D1']), D2=float(model_section['D2']), v0=float(model_section['v0']),
            kbar_law=model_section.get('kbar_law', 'gaussian'), profile=model_section.get('profile', 'planck'),
            b=float(model_section.get('b', 1.0)), v_ref=float(model_section.get('v_ref', 1.0)),
            scattering=scattering)
        geometry = None
        if parser.has_section('geometry'):
            geometry = GeometrySpec(**{k: float(v) for k, v in parser['geometry'].items()})
        mollifier = None
        if parser.has_section('mollifier'):
            mollifier = MollifierConfig(float(parser['mollifier']['epsilon0']),
                                        parser['mollifier'].get('profile', 'bump'))
        expected = {}
        if parser.has_section('expected'):
            expected = {k: float(v) for k, v in parser['expected'].items()}
        run = {}
        if parser.has_section('run'):
            section = parser['run']
            for key in section:
                kind = _RUN_TYPES.get(key)
                if kind is None:
                    raise InvalidInput(f'unknown run setting {key!r}')
                run[key] = section.getboolean(key) if kind == 'bool' else kind(section[key])
        claims = tuple(c.strip() for c in head.get('claims', '').split(',') if c.strip())
        return Scenario(
            name=head['name'], description=head.get('description', ''),
            dimension=int(head['dimension']), cells=int(grid['cells']),
            lower=float(grid['lower']), upper=float(grid['upper']),
            periodic=grid.getboolean('periodic', False), ordinates=int(grid.get('ordinates', '0')),
            groups=int(grid.get('groups', '2')), v_max=float(grid.get('v_max', '4.0')),
            constants=constants, model=model,
            rho0=_profile_from(parser['rho0']), u0=_profile_from(parser['u0']),
            intensity0=_profile_from(parser['intensity0']),
            geometry=geometry, mollifier=mollifier, claims=claims, expected=expected,
            run=RunSettings(**run))
    except (KeyError, ValueError, TypeError) as e:
        raise InvalidInput(f'Malformed scenario file: {e}')


def load_scenario(path, validate=True):
    """Read a scenario file; with ``validate`` a failing precondition is a load-time error."""
    if not os.path.isfile(path):
        raise NotFound(f'Scenario file not found: {path}', path=path)
    # keys are case-sensitive (D1, R0, T_c)
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read(path)
    except configparser.Error as e:
        raise InvalidInput(f'Malformed scenario file: {e}', path=path)
    scenario = scenario_from_ini(parser)
    if validate:
        report = validate_scenario(scenario)
        if not report.passed:
            raise InvalidInput(f'Scenario {scenario.name!r} violates its preconditions',
                               failures=[c.to_dict() for c in report.failures])
    return scenario
