import numpy as np
import pytest
import sys
import os

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from euler_boltzmann.blowup import (BLOWN_UP, HEALTHY, NEAR_SINGULAR, BlowupCertificate, MonitorSnapshot,
                                    MonitorThresholds, critical_time, damped_blowup_time, holder_check,
                                    hyperbolic_singularity_scan, max_velocity_gradient, moment_blowup_bound,
                                    moment_blowup_root, moment_diagnostics, moment_inequality_check,
                                    singularity_monitor, virial_coefficient)
from euler_boltzmann.errors import InconsistentData, InvalidArgument, NoVacuumRegion
from euler_boltzmann.grid import Grid
from euler_boltzmann.hydro import FluidState, VacuumGeometry


@pytest.fixture
def thresholds():
    return MonitorThresholds(gradient=100.0, dt_floor=1e-8, moment_limit=2.0)


def test_critical_time():
    """Test T_c = 2 R0 / c and its argument checks"""
    assert critical_time(1.5, 1.0) == pytest.approx(3.0)
    assert critical_time(2.0, 4.0) == pytest.approx(1.0)
    with pytest.raises(InvalidArgument):
        critical_time(0.0, 1.0)


def test_virial_coefficient_in_one_dimension():
    """Test the coefficient with |B1| = 2 on a line"""
    expected = 1.0 * 0.5 ** 2 * 1.2 ** (1 - 2) * 2.0 ** (1 - 2)
    assert virial_coefficient(0.5, 1.2, 2.0, dimension=1) == pytest.approx(expected)
    with pytest.raises(InvalidArgument):
        virial_coefficient(0.5, 1.2, 2.0, dimension=4)


def test_moment_bound_matches_root():
    """Test the closed form and the brentq root agree and solve the quadratic"""
    rng = np.random.default_rng(11)
    for _ in range(100):
        m0 = float(rng.uniform(0.5, 2.0))
        R0 = float(rng.uniform(0.5, 2.0))
        gamma = float(rng.uniform(1.2, 3.0))
        M0 = float(rng.uniform(0.0, 0.9)) * m0 * R0 ** 2
        M0prime = 0.5 * float(rng.normal())
        dimension = int(rng.choice([1, 3]))
        T = moment_blowup_bound(m0, R0, gamma, M0, M0prime, dimension)
        root = moment_blowup_root(m0, R0, gamma, M0, M0prime, dimension)
        assert T == pytest.approx(root, rel=1e-9)
        a = virial_coefficient(m0, R0, gamma, dimension)
        scale = max(m0 * R0 ** 2, abs(M0prime) * T)
        assert a * T ** 2 + M0prime * T + M0 - m0 * R0 ** 2 == pytest.approx(0.0, abs=1e-9 * scale)


def test_moment_bound_inputs():
    """Test a full moment gives zero and inconsistent data is refused"""
    assert moment_blowup_bound(1.0, 1.0, 2.0, 1.0, 0.0) == 0.0
    assert moment_blowup_root(1.0, 1.0, 2.0, 1.0, 0.0) == 0.0
    with pytest.raises(InconsistentData):
        moment_blowup_bound(1.0, 1.0, 2.0, 1.5, 0.0)
    with pytest.raises(InvalidArgument):
        moment_blowup_root(0.0, 1.0, 2.0, 0.0, 0.0)
    with pytest.raises(InvalidArgument):
        moment_blowup_bound(1.0, 1.0, 3.5, 0.5, 0.0)


def test_scan_linear_compression():
    """Test u0 = -x gives lambda_min = -1 and t = 1"""
    grid = Grid.line(64, -1.0, 1.0)
    u = np.zeros((3, 64))
    u[0] = -grid.positions()[0]
    scan = hyperbolic_singularity_scan(u, np.ones(64, dtype=bool), grid)
    assert scan.lambda_min == pytest.approx(-1.0)
    assert scan.t_burgers == pytest.approx(1.0)
    assert scan.complex_cells == 0
    u[0] = -u[0]
    assert hyperbolic_singularity_scan(u, np.ones(64, dtype=bool), grid).t_burgers is None


def test_scan_needs_vacuum():
    """Test an empty mask is an error"""
    grid = Grid.line(8, 0.0, 1.0)
    with pytest.raises(NoVacuumRegion):
        hyperbolic_singularity_scan(np.zeros((3, 8)), np.zeros(8, dtype=bool), grid)


def test_scan_counts_rotation_as_complex():
    """Test a rigid rotation has complex eigenvalues and no Burgers time"""
    grid = Grid.cube(6, -1.0, 1.0)
    x = grid.positions()
    u = np.zeros((3,) + grid.cells)
    u[0] = -x[1]
    u[1] = x[0]
    scan = hyperbolic_singularity_scan(u, np.ones(grid.cells, dtype=bool), grid)
    assert scan.complex_cells == 6 ** 3
    assert scan.lambda_min == 0.0
    assert scan.t_burgers is None


def test_max_velocity_gradient():
    """Test the largest velocity derivative"""
    grid = Grid.line(32, -1.0, 1.0)
    u = np.zeros((3, 32))
    u[0] = -3.0 * grid.positions()[0]
    assert max_velocity_gradient(u, grid) == pytest.approx(3.0)


def test_damped_blowup_time():
    """Test the damped time and the threshold lambda < -alpha"""
    assert damped_blowup_time(-2.0, 1.0) == pytest.approx(np.log(2.0))
    assert damped_blowup_time(-1.0, 1.0) is None
    assert damped_blowup_time(-0.5, 1.0) is None
    with pytest.raises(InvalidArgument):
        damped_blowup_time(-2.0, 0.0)
    # the damped time exceeds the undamped one
    assert damped_blowup_time(-4.0, 1.0) > 0.25


def test_damped_time_tends_to_undamped_time():
    """Test t0 -> -1/lambda as alpha -> 0, with excess close to alpha / (2 lambda^2)"""
    lam = -2.0
    times = [damped_blowup_time(lam, alpha) for alpha in (1e-2, 1e-4, 1e-6)]
    for alpha, t0 in zip((1e-2, 1e-4, 1e-6), times):
        assert 0.0 < t0 - (-1.0 / lam) <= alpha / 4.0
        assert t0 - 0.5 == pytest.approx(alpha / (2.0 * lam ** 2), rel=1e-2)
    assert times == sorted(times, reverse=True)
    assert times[-1] == pytest.approx(0.5, abs=1e-6)


def test_moment_bound_hand_value():
    """Test m0 = R0 = 1, gamma = 2, M0 = M0' = 0 gives T = (2/3) sqrt(pi) in three dimensions"""
    assert virial_coefficient(1.0, 1.0, 2.0) == pytest.approx(9.0 / (4.0 * np.pi), rel=1e-14)
    T = moment_blowup_bound(1.0, 1.0, 2.0, 0.0, 0.0)
    assert abs(T - 2.0 / 3.0 * np.sqrt(np.pi)) <= 1e-10
    assert abs(T - 1.18164) <= 1e-5
    assert moment_blowup_bound(1.0, 1.0, 2.0, 1.0, 0.0) == 0.0
    assert moment_blowup_bound(1.0, 1.0, 2.0, 0.0, 0.3) < T


def test_certificate_consistency():
    """Test t_burgers must come with a negative lambda_min"""
    certificate = BlowupCertificate(T_c=2.0, lambda_min=-1.0, t_burgers=1.0)
    assert certificate.to_dict()['t_burgers'] == 1.0
    with pytest.raises(InconsistentData):
        BlowupCertificate(lambda_min=1.0, t_burgers=1.0)
    with pytest.raises(InconsistentData):
        BlowupCertificate(lambda_min=-1.0)


def test_thresholds_from_initial():
    """Test default thresholds scale with the initial data"""
    thresholds = MonitorThresholds.from_initial(2.0, 0.01)
    assert thresholds.gradient == pytest.approx(2000.0)
    assert thresholds.dt_floor == pytest.approx(1e-8)
    assert MonitorThresholds.from_initial(0.0, 0.01).gradient == pytest.approx(1e3)
    assert MonitorThresholds.from_initial(2.0, 0.01, gradient=50.0).gradient == 50.0


def test_monitor_healthy(thresholds):
    """Test quiet snapshots are healthy"""
    status = singularity_monitor(MonitorSnapshot(t=0.1, max_grad_u=1.0, min_rho=0.0, dt=0.01),
                                 BlowupCertificate(), thresholds)
    assert status.status == HEALTHY
    assert status.triggers == []
    assert not status.blown_up


def test_monitor_near_singular(thresholds):
    """Test gradients within a decade of the threshold are near-singular"""
    status = singularity_monitor(MonitorSnapshot(t=0.5, max_grad_u=20.0, min_rho=0.0, dt=0.01),
                                 BlowupCertificate(), thresholds)
    assert status.status == NEAR_SINGULAR


def test_monitor_reports_every_trigger(thresholds):
    """Test all firing triggers are listed"""
    snapshot = MonitorSnapshot(t=0.9, max_grad_u=np.inf, min_rho=0.0, dt=1e-9, clipped=1e-6,
                               burgers_failed=True, moment=2.5)
    status = singularity_monitor(snapshot, BlowupCertificate(), thresholds)
    assert status.status == BLOWN_UP
    assert status.blown_up
    assert status.triggers == ['gradient', 'dt-collapse', 'w-clipping', 'burgers-failure', 'moment-bound']
    assert status.t == 0.9


def test_monitor_moment_tolerance(thresholds):
    """Test the moment bound allows a relative slack of 1e-3"""
    snapshot = MonitorSnapshot(t=0.1, max_grad_u=1.0, min_rho=0.0, dt=0.01, moment=2.001)
    assert singularity_monitor(snapshot, BlowupCertificate(), thresholds).status == HEALTHY


def test_moment_diagnostics(slab):
    """Test mass, second moment and its rate for rho = 1, u = x on B0"""
    x = slab.positions()[0]
    u = np.zeros((3,) + slab.cells)
    u[0] = x
    state = FluidState(np.ones(slab.cells), u, 2.0)
    geometry = VacuumGeometry.from_grid(slab, 0.5, 1.0, 1.5, state.rho)
    inside = np.abs(x) < 1.0
    moments = moment_diagnostics(state, geometry, slab, t=0.3)
    assert moments.m == pytest.approx(inside.sum() * slab.h)
    assert moments.M == pytest.approx(np.sum(x[inside] ** 2) * slab.h)
    assert moments.dM_dt == pytest.approx(2.0 * moments.M)
    assert moments.t == 0.3


def test_holder_check(slab):
    """Test the pressure integral dominates the Jensen bound"""
    x = slab.positions()[0]
    rho = np.where(np.abs(x) < 0.5, 1.0 - 4.0 * x ** 2, 0.0)
    geometry = VacuumGeometry.from_grid(slab, 0.5, 1.0, 1.5, rho)
    report = holder_check(FluidState(rho, np.zeros((3,) + slab.cells), 2.0), geometry, slab)
    assert report.passed
    assert report.pressure_integral >= report.bound


def test_moment_inequality_check():
    """Test M = a t^2 meets the virial bound and a linear M does not"""
    m0, R0, gamma = 0.8, 1.0, 2.0
    a = virial_coefficient(m0, R0, gamma, dimension=1)
    times = np.linspace(0.0, 1.0, 21)
    passed = moment_inequality_check(times, a * times ** 2 + 0.1, m0, R0, gamma, t_start=0.19, dimension=1)
    assert passed.passed
    assert passed.min_second_derivative == pytest.approx(2.0 * a)
    assert passed.samples == 15
    failed = moment_inequality_check(times, 0.1 + times, m0, R0, gamma, t_start=0.0, dimension=1)
    assert not failed.passed
    assert moment_inequality_check(times[:2], times[:2], m0, R0, gamma, 0.0).samples == 0
