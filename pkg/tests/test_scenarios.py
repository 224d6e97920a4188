import math
import numpy as np
import pytest
from dataclasses import replace
import sys
import os

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from euler_boltzmann.errors import InvalidConfig, InvalidInput, NotFound
from euler_boltzmann.scenarios import (GeometrySpec, ProfileSpec, RunSettings, Scenario, build_certificate,
                                       builtin_scenarios, get_scenario, load_scenario, resolve_scenario,
                                       validate_scenario, vacuum_threshold, write_scenario)

BUILTIN_NAMES = [scenario.name for scenario in builtin_scenarios()]


def test_builtin_names():
    """Test the built-in catalogue"""
    assert BUILTIN_NAMES == ['lemma31-relaxation', 'theorem34-moment', 'theorem36-burgers-1d',
                             'corollary38-damped', 'picard-contraction', 'section4-scattering',
                             'lemma31-annulus']


def test_unknown_scenario():
    """Test unknown names raise NotFound"""
    with pytest.raises(NotFound) as info:
        get_scenario('does-not-exist')
    assert info.value.to_dict()['code'] == 'not-found'


@pytest.mark.parametrize('name', BUILTIN_NAMES)
def test_builtins_validate(name):
    """Test every built-in meets its declared preconditions and expected certificate"""
    report = validate_scenario(get_scenario(name))
    assert report.passed, report.to_dict()


def test_seeded_data_is_reproducible():
    """Test equal seeds give bit-identical noisy intensities"""
    scenario = replace(get_scenario('lemma31-relaxation'),
                       intensity0=ProfileSpec('noise-excess', {'amplitude': 0.5, 'radius': 1.0}))
    first = scenario.initial_data(seed=7)
    second = scenario.initial_data(seed=7)
    other = scenario.initial_data(seed=8)
    assert np.array_equal(first.field.intensities, second.field.intensities)
    assert not np.array_equal(first.field.intensities, other.field.intensities)
    assert validate_scenario(scenario, seed=7).passed


@pytest.mark.parametrize('kwargs', [
    {'dimension': 2},
    {'cells': 2},
    {'dimension': 3, 'cells': 8, 'ordinates': 0},
    {'dimension': 3, 'cells': 65, 'ordinates': 2},
    {'dimension': 3, 'cells': 8, 'ordinates': 2, 'groups': 5},
    {'claims': ('blow-up',)},
    {'rho0': ProfileSpec('gaussian')},
])
def test_invalid_scenarios(kwargs):
    """Test construction-time validation"""
    base = {'name': 'bad', 'dimension': 1, 'cells': 16, 'lower': -1.0, 'upper': 1.0}
    base.update(kwargs)
    with pytest.raises(InvalidConfig):
        Scenario(**base)


def test_overrides_split_between_grid_and_run():
    """Test grid sizes go to the scenario and the rest to its run settings"""
    scenario = get_scenario('theorem36-burgers-1d').with_overrides({'cells': 200, 'horizon': 0.5, 'cfl': 0.4})
    assert scenario.cells == 200
    assert scenario.run.horizon == 0.5
    assert scenario.run.cfl == 0.4
    assert scenario.grid().cells == (200,)


def test_burgers_certificate():
    """Test lambda_min = -1 and t = 1 for u0 = -x in vacuum"""
    certificate = build_certificate(get_scenario('theorem36-burgers-1d'))
    assert certificate.lambda_min == pytest.approx(-1.0)
    assert certificate.t_burgers == pytest.approx(1.0)
    assert certificate.T_c is None
    assert certificate.t_damped is None
    assert certificate.monitor_threshold == pytest.approx(1e3)


def test_damped_certificate():
    """Test the damped time ln 2 for lambda = -2 and alpha = 1"""
    certificate = build_certificate(get_scenario('corollary38-damped'))
    assert certificate.t_burgers == pytest.approx(0.5)
    assert certificate.t_damped == pytest.approx(math.log(2.0))
    assert certificate.inputs['alpha'] == 1.0


def test_moment_certificate():
    """Test the closed-form and bracketed moment times agree on the bump data"""
    certificate = build_certificate(get_scenario('theorem34-moment'))
    assert certificate.T_c == pytest.approx(0.6)
    assert certificate.T_moment == pytest.approx(certificate.T_moment_root, rel=1e-9)
    assert set(certificate.inputs) == {'m0', 'M0', 'M0prime', 'R0', 'alpha'}
    assert certificate.inputs['M0prime'] == 0.0
    # u0 = 0 in the vacuum cells
    assert certificate.lambda_min == 0.0
    assert certificate.t_burgers is None


def test_annulus_violation_is_located():
    """Test mass inside the annulus fails with the offending positions"""
    scenario = replace(get_scenario('lemma31-relaxation'), geometry=GeometrySpec(0.3, 0.8, 1.0))
    report = validate_scenario(scenario)
    assert not report.passed
    failure = {check.name: check for check in report.failures}
    assert set(failure) == {'annulus-vacuum'}
    assert 'x = (' in failure['annulus-vacuum'].detail
    assert failure['annulus-vacuum'].measured > 0


def test_missing_geometry_and_expansive_velocity():
    """Test local vacuum without geometry and a non-compressive vacuum velocity"""
    scenario = replace(get_scenario('theorem36-burgers-1d'), claims=('local-vacuum', 'hyperbolic-set'),
                       u0=ProfileSpec('linear', {'slope': 1.0}), expected={})
    names = [check.name for check in validate_scenario(scenario).failures]
    assert names == ['geometry', 'hyperbolic-set']


def test_expected_mismatch():
    """Test a wrong expected value fails the certificate check"""
    scenario = replace(get_scenario('lemma31-relaxation'), expected={'T_c': 2.5, 't_damped': 1.0})
    report = validate_scenario(scenario)
    failure = report.failures[0]
    assert failure.name == 'expected-certificate'
    assert 'T_c' in failure.detail
    assert 't_damped not computed' in failure.detail


def test_initial_data_errors_are_reported():
    """Test a rotation profile on a line is a validation failure, not an exception"""
    scenario = replace(get_scenario('theorem36-burgers-1d'), u0=ProfileSpec('rotation'))
    report = validate_scenario(scenario)
    assert [check.name for check in report.checks] == ['initial-data']
    assert not report.passed


def test_rotation_in_three_dimensions():
    """Test a rigid rotation in vacuum has no real compressive direction"""
    scenario = Scenario(name='rotation', dimension=3, cells=6, lower=-1.0, upper=1.0, ordinates=2,
                        u0=ProfileSpec('rotation', {'omega': 2.0}), claims=('hyperbolic-set',))
    certificate = build_certificate(scenario)
    assert certificate.complex_cells == 6 ** 3
    assert certificate.t_burgers is None
    assert not validate_scenario(scenario).passed


@pytest.mark.parametrize('name', BUILTIN_NAMES)
def test_ini_round_trip(name, tmp_path):
    """Test a written scenario loads back equal"""
    scenario = get_scenario(name)
    path = write_scenario(scenario, str(tmp_path / f'{name}.ini'))
    assert load_scenario(path, validate=False) == scenario


def test_load_errors(tmp_path):
    """Test missing files, malformed files and failing preconditions"""
    with pytest.raises(NotFound):
        load_scenario(str(tmp_path / 'missing.ini'))
    broken = tmp_path / 'broken.ini'
    broken.write_text('[scenario]\nname = broken\ndimension = 1\n')
    with pytest.raises(InvalidInput):
        load_scenario(str(broken))
    bad = replace(get_scenario('lemma31-relaxation'), geometry=GeometrySpec(0.3, 0.8, 1.0))
    path = write_scenario(bad, str(tmp_path / 'bad.ini'))
    with pytest.raises(InvalidInput) as info:
        load_scenario(path)
    assert info.value.to_dict()['failures'][0]['name'] == 'annulus-vacuum'
    assert load_scenario(path, validate=False).geometry.a_radius == 0.3


def test_unknown_run_setting(tmp_path):
    """Test unknown keys in [run] are rejected"""
    path = write_scenario(get_scenario('theorem36-burgers-1d'), str(tmp_path / 'run.ini'))
    text = open(path).read().replace('cadence = 500', 'cadence = 500\nwarp = 9')
    with open(path, 'w') as handle:
        handle.write(text)
    with pytest.raises(InvalidInput):
        load_scenario(path)


def test_resolve_scenario(tmp_path):
    """Test a path wins over a built-in name"""
    custom = replace(get_scenario('theorem36-burgers-1d'), name='custom', run=RunSettings(horizon=0.25))
    path = write_scenario(custom, str(tmp_path / 'custom.ini'))
    assert resolve_scenario(path).name == 'custom'
    assert resolve_scenario('theorem36-burgers-1d').run.horizon == 1.2


def test_vacuum_threshold():
    """Test the threshold is relative to the peak density"""
    assert vacuum_threshold(np.array([0.0, 2.0])) == pytest.approx(2e-12)
    assert vacuum_threshold(np.zeros(3)) == 0.0
