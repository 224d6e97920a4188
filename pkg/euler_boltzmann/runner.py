"""
Run orchestration for the four modes.

``run`` resolves the scenario, applies the RunConfig overrides and dispatches:
simulate (operator-split transport/hydro loop with monitors), certify
(analytic blow-up times only), picard (iteration experiment) and validate
(scenario preconditions plus the coefficient structural checks).
"""
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from euler_boltzmann.blowup import (BLOWN_UP, HEALTHY, MonitorSnapshot, MonitorStatus, MonitorThresholds,
                                    holder_check, max_velocity_gradient, moment_diagnostics,
                                    moment_inequality_check, singularity_monitor)
from euler_boltzmann.coefficients import check_structural_assumptions
from euler_boltzmann.errors import (InvalidConfig, InvalidInput, NearSingularity, SolverDiverged,
                                    StepRejected)
from euler_boltzmann.hydro import (FluidState, advance_flow_map, hydro_step, max_signal_speed,
                                   vacuum_stationarity_check)
from euler_boltzmann.picard import horizon_sweep, mollifier_telescoping, picard_iterate
from euler_boltzmann.plots import decay_slope, emit_plots
from euler_boltzmann.scenarios import (build_certificate, resolve_scenario, validate_scenario,
                                       vacuum_threshold)
from euler_boltzmann.snapshots import (Snapshot, snapshot_header, write_csv, write_json, write_manifest,
                                       write_ray_lineout, write_snapshot, write_timeseries)
from euler_boltzmann.symhyp import collision_source_f, radiation_source_g
from euler_boltzmann.transport import relaxation_residual, sweep_time_step, transport_step

logger = logging.getLogger(__name__)

EXIT_COMPLETED = 0
EXIT_ERROR = 1
EXIT_BLOWN_UP = 2

PICARD_COLUMNS = ('k', 'diff_U', 'diff_I', 'r_k', 'norm_s', 'epsilon', 'mollified')


@dataclass
class RunArtifacts:
    output_dir: str
    mode: str
    status: str
    exit_code: int
    timeseries: Optional[str] = None
    snapshots: List[str] = field(default_factory=list)
    certificate: Optional[str] = None
    summary: Optional[str] = None
    plots: List[str] = field(default_factory=list)
    manifest: Optional[str] = None
    files: List[str] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def emit(self, path):
        self.files.append(path)
        return path

    def to_dict(self):
        data = asdict(self)
        data.pop('files')
        return data


def run(config):
    """Execute one RunConfig and return its artifacts; errors propagate as EulerBoltzmannError."""
    scenario = resolve_scenario(config.scenario, validate=False)
    scenario = scenario.with_overrides(config.overrides())
    output_dir = os.path.join(config.output_dir, scenario.name, config.mode)
    os.makedirs(output_dir, exist_ok=True)
    logger.info('Running %s on scenario %s into %s', config.mode, scenario.name, output_dir)

    if config.mode == 'validate':
        artifacts = _validate(scenario, output_dir)
    else:
        report = validate_scenario(scenario)
        if not report.passed:
            raise InvalidInput(f'Scenario {scenario.name!r} violates its preconditions',
                               failures=[c.to_dict() for c in report.failures])
        if config.mode == 'certify':
            artifacts = _certify(scenario, output_dir)
        elif config.mode == 'picard':
            artifacts = _picard(scenario, output_dir)
        else:
            artifacts = simulate(scenario, output_dir)

    if config.plots and config.mode in ('simulate', 'picard'):
        artifacts.plots = emit_plots(output_dir)
        artifacts.files.extend(artifacts.plots)
    artifacts.summary = artifacts.emit(write_json(os.path.join(output_dir, 'summary.json'),
                                                  _summary(scenario, config, artifacts)))
    artifacts.manifest = write_manifest(output_dir, artifacts.files)
    logger.info('Finished %s with status %s', config.mode, artifacts.status)
    return artifacts


def _summary(scenario, config, artifacts):
    return {'scenario': scenario.name, 'mode': config.mode, 'status': artifacts.status,
            'exit_code': artifacts.exit_code, 'details': artifacts.details}


# -- certify / validate ------------------------------------------------------

def _certify(scenario, output_dir):
    certificate = build_certificate(scenario)
    artifacts = RunArtifacts(output_dir, 'certify', 'certified', EXIT_COMPLETED)
    artifacts.certificate = artifacts.emit(write_json(os.path.join(output_dir, 'certificate.json'),
                                                      certificate.to_dict()))
    artifacts.details = {'certificate': certificate.to_dict()}
    return artifacts


def _validate(scenario, output_dir):
    report = validate_scenario(scenario)
    data = scenario.initial_data()
    norm_bound = max(report.norms.get('w0_h3', 0.0), 1.0)
    structural = check_structural_assumptions(scenario.model, scenario.constants, data.frequency,
                                              data.quadrature, data.grid, norm_bound)
    passed = report.passed and structural.passed
    artifacts = RunArtifacts(output_dir, 'validate', 'valid' if passed else 'invalid',
                             EXIT_COMPLETED if passed else EXIT_ERROR)
    artifacts.details = {'scenario': report.to_dict(), 'structural': structural.to_dict()}
    artifacts.emit(write_json(os.path.join(output_dir, 'validation.json'), artifacts.details))
    if not passed:
        names = [c.name for c in report.failures] + [c.name for c in structural.checks if not c.passed]
        logger.warning('validation of %s failed: %s', scenario.name, ', '.join(names))
    return artifacts


# -- picard ------------------------------------------------------------------

def _picard(scenario, output_dir):
    if scenario.mollifier is None:
        raise InvalidConfig(f'scenario {scenario.name!r} has no [mollifier] section')
    settings = scenario.run
    data = scenario.initial_data()
    fluid = FluidState(data.rho, data.u, scenario.constants.gamma)
    horizon = settings.picard_horizon
    dt = settings.picard_dt or settings.dt or horizon / 50.0
    mode = 'scattering' if scenario.model.scattering is not None else 'lte'
    options = dict(k_max=settings.k_max, mode=mode, cfl=settings.cfl)
    result = picard_iterate(fluid.w, data.u, data.field, scenario.model, scenario.constants,
                            scenario.mollifier, horizon, dt, **options)
    sweep = horizon_sweep(fluid.w, data.u, data.field, scenario.model, scenario.constants,
                          scenario.mollifier, horizon, dt, doublings=2, **options)
    differences, ratios = mollifier_telescoping(fluid.w, scenario.mollifier, data.grid)

    contracted = result.contracted
    artifacts = RunArtifacts(output_dir, 'picard', 'contracted' if contracted else 'contraction-failure',
                             EXIT_COMPLETED if contracted else EXIT_ERROR)
    rows = [record.to_dict() for record in result.trace.records]
    artifacts.emit(write_csv(os.path.join(output_dir, 'picard_trace.csv'), rows, PICARD_COLUMNS))
    artifacts.details = {
        'iteration_status': result.status,
        'max_ratio': result.trace.max_ratio(),
        'ratios': result.trace.ratios,
        'horizon_sweep': sweep.to_dict(),
        'telescoping': {'differences': differences, 'ratios': ratios,
                        'decay_ratio': float(np.exp(decay_slope(range(len(differences)), differences)))},
    }
    return artifacts


# -- simulate ----------------------------------------------------------------

def _time_step(fluid, grid, settings, constants, quadrature):
    speed = max_signal_speed(fluid, grid) if settings.couple_fluid else 0.0
    dt = settings.cfl * grid.h / max(constants.c, speed)
    if settings.backend == 'sweep':
        dt = min(dt, settings.cfl * sweep_time_step(quadrature, grid, constants.c))
    if settings.dt is not None:
        dt = min(dt, settings.dt)
    return dt


def _source(field, fluid, model, constants):
    if model.scattering is not None:
        return collision_source_f(field, fluid.w, model, field.quadrature, constants)
    return radiation_source_g(field, fluid.w, model, field.quadrature, constants)


def split_step(fluid, field, dt, scenario, rho_vac):
    """
    One operator-split step. Strang: transport dt/2, hydro dt, transport dt/2.
    Lie: transport dt, hydro dt. Returns (fluid, field, hydro diagnostics or None).
    """
    settings, model, constants = scenario.run, scenario.model, scenario.constants
    grid = field.grid

    def transport(current, state, tau):
        return transport_step(current, state, model, tau, constants, backend=settings.backend)

    if not settings.couple_fluid:
        return fluid, transport(field, fluid, dt), None
    first = 0.5 * dt if settings.split == 'strang' else dt
    field = transport(field, fluid, first)
    fluid, diagnostics = hydro_step(fluid, _source(field, fluid, model, constants), dt, grid,
                                    cfl=settings.cfl, alpha=constants.alpha,
                                    continuity=settings.continuity, rho_vac=rho_vac)
    if settings.split == 'strang':
        field = transport(field, fluid, 0.5 * dt)
    return fluid, field, diagnostics


def step_velocity(u_before, u_after):
    """Velocity seen by the tracers over one step: the mean of its two ends."""
    return 0.5 * (np.asarray(u_before) + np.asarray(u_after))


def _row(t, dt, fluid, field, scenario, data, status):
    grid = data.grid
    volume = grid.cell_volume
    x = grid.positions()
    geometry = data.geometry
    momentum = np.sum(fluid.rho * fluid.u, axis=tuple(range(1, fluid.u.ndim))) * volume
    row = {
        't': t, 'dt': dt,
        'mass': float(np.sum(fluid.rho) * volume),
        'momentum': float(np.linalg.norm(momentum)),
        'moment_domain': float(np.sum(fluid.rho * np.sum(x ** 2, axis=0)) * volume),
        'max_u': float(np.abs(fluid.u).max()),
        'max_grad_u': max_velocity_gradient(fluid.u, grid),
        'min_rho': float(fluid.rho.min()),
        'relaxation_residual': relaxation_residual(field, scenario.model,
                                                   None if geometry is None else geometry.b_mask),
        'clipped': 0.0,
        'status': status.status,
        'triggers': '|'.join(status.triggers),
    }
    if geometry is not None:
        moments = moment_diagnostics(fluid, geometry, grid, t)
        row.update(m_b0=moments.m, moment=moments.M, dmoment_dt=moments.dM_dt)
    return row


def _write_snapshot(output_dir, step, t, fluid, field, scenario, grid):
    header = snapshot_header(grid, scenario.constants, step=step, scenario=scenario.name)
    fields = {'rho': fluid.rho, 'u': fluid.u, 'I': field.intensities,
              'ordinates': field.quadrature.ordinates, 'ordinate_weights': field.quadrature.weights,
              'frequency_nodes': field.frequency.nodes, 'frequency_weights': field.frequency.weights}
    path = os.path.join(output_dir, 'snapshots', f'step_{step:06d}.ebs')
    return write_snapshot(path, Snapshot(t, header, fields))


def simulate(scenario, output_dir):
    """Split-step loop to the horizon or to the first blown-up verdict."""
    settings, constants = scenario.run, scenario.constants
    data = scenario.initial_data()
    grid = data.grid
    fluid = FluidState(data.rho, data.u, constants.gamma)
    field = data.field
    geometry = data.geometry
    certificate = build_certificate(scenario, data)
    rho_vac = vacuum_threshold(data.rho)

    moment_limit = None
    if geometry is not None and settings.couple_fluid:
        moment_limit = geometry.m0 * geometry.R0 ** 2
    dt0 = _time_step(fluid, grid, settings, constants, data.quadrature)
    thresholds = MonitorThresholds.from_initial(max_velocity_gradient(fluid.u, grid), dt0,
                                                moment_limit, gradient=certificate.monitor_threshold)
    flow_map = geometry.flow_map(grid.ndim) if geometry is not None else None

    artifacts = RunArtifacts(output_dir, 'simulate', 'completed', EXIT_COMPLETED)
    artifacts.certificate = artifacts.emit(write_json(os.path.join(output_dir, 'certificate.json'),
                                                      certificate.to_dict()))
    status = MonitorStatus(HEALTHY, [], 0.0)
    rows = [_row(0.0, 0.0, fluid, field, scenario, data, status)]
    artifacts.snapshots.append(artifacts.emit(_write_snapshot(output_dir, 0, 0.0, fluid, field, scenario, grid)))
    times, moments = [0.0], [rows[0].get('moment')]

    t, step = 0.0, 0
    horizon = settings.horizon
    logger.info('simulate %s: horizon=%g dt0=%g split=%s backend=%s', scenario.name, horizon, dt0,
                settings.split, settings.backend)
    while t < horizon * (1.0 - 1e-12) and not status.blown_up:
        dt = min(_time_step(fluid, grid, settings, constants, data.quadrature), horizon - t)
        burgers_failed = False
        diagnostics = None
        try:
            try:
                new_fluid, new_field, diagnostics = split_step(fluid, field, dt, scenario, rho_vac)
            except StepRejected as e:
                dt = 0.9 * e.required_dt
                logger.info('step rejected at t=%g, retrying with dt=%g', t, dt)
                new_fluid, new_field, diagnostics = split_step(fluid, field, dt, scenario, rho_vac)
        except NearSingularity as e:
            logger.warning('vacuum fixed point failed at t=%g: %s', t, e.message)
            burgers_failed = True
            new_fluid, new_field = fluid, field
        except SolverDiverged as e:
            logger.warning('solver diverged at t=%g: %s', t, e.message)
            status = MonitorStatus(BLOWN_UP, ['solver-divergence'], t)
            break

        if not burgers_failed:
            if flow_map is not None:
                advance_flow_map(flow_map, step_velocity(fluid.u, new_fluid.u), dt, grid)
            fluid, field = new_fluid, new_field
            t += dt
            step += 1
        clipped = diagnostics.clipped if diagnostics is not None else 0.0
        moment_domain = float(np.sum(fluid.rho * np.sum(grid.positions() ** 2, axis=0)) * grid.cell_volume)
        snapshot = MonitorSnapshot(t, max_velocity_gradient(fluid.u, grid), float(fluid.rho.min()), dt,
                                   clipped, burgers_failed, moment_domain)
        status = singularity_monitor(snapshot, certificate, thresholds)
        logger.debug('step %d t=%.6g dt=%.3e status=%s', step, t, dt, status.status)

        if geometry is not None:
            times.append(t)
            moments.append(moment_diagnostics(fluid, geometry, grid, t).M)
        finished = status.blown_up or t >= horizon * (1.0 - 1e-12)
        if step % settings.cadence == 0 or finished:
            row = _row(t, dt, fluid, field, scenario, data, status)
            row['clipped'] = clipped
            rows.append(row)
            artifacts.snapshots.append(artifacts.emit(
                _write_snapshot(output_dir, step, t, fluid, field, scenario, grid)))

    if status.blown_up:
        artifacts.status, artifacts.exit_code = BLOWN_UP, EXIT_BLOWN_UP
        logger.info('blow-up detected at t=%g by %s', status.t, ', '.join(status.triggers))

    artifacts.timeseries = artifacts.emit(write_timeseries(os.path.join(output_dir, 'timeseries.csv'), rows))
    artifacts.emit(write_ray_lineout(os.path.join(output_dir, 'ray_lineout.csv'), grid, field, scenario.model))
    details = {'t_final': t, 'steps': step, 'triggers': status.triggers,
               'trigger_time': status.t if status.blown_up else None,
               'relaxation_residual': rows[-1]['relaxation_residual']}
    if geometry is not None:
        details['stationarity'] = vacuum_stationarity_check(geometry, flow_map, t, grid).to_dict()
        details['holder'] = asdict(holder_check(fluid, geometry, grid))
        if settings.couple_fluid and geometry.m0 > 0.0:
            details['moment_inequality'] = asdict(moment_inequality_check(
                times, moments, geometry.m0, geometry.R0, constants.gamma, certificate.T_c,
                dimension=grid.ndim))
    artifacts.details = details
    return artifacts
