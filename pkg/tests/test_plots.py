import numpy as np
import pytest
import sys
import os

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from euler_boltzmann.errors import InvalidArgument, NoData
from euler_boltzmann.plots import decay_slope, emit_plots
from euler_boltzmann.snapshots import write_csv, write_json, write_timeseries


@pytest.fixture
def run_directory(tmp_path):
    t = np.linspace(0.0, 0.9, 10)
    rows = [{'t': float(ti), 'max_grad_u': float(1.0 / (1.0 - ti)), 'relaxation_residual': float(np.exp(-ti)),
             'status': 'healthy', 'triggers': ''} for ti in t]
    write_timeseries(str(tmp_path / 'timeseries.csv'), rows)
    write_json(str(tmp_path / 'certificate.json'), {'T_c': 0.5, 't_burgers': 1.0, 't_damped': None})
    return tmp_path


def test_emit_all_skips_missing_data(run_directory):
    """Test 'all' writes the plots that have data and skips the rest"""
    written = emit_plots(str(run_directory))
    assert [os.path.basename(path) for path in written] == ['gradient.svg', 'relaxation.svg']


def test_markers_are_tagged(run_directory):
    """Test certificate times appear as tagged vertical lines"""
    emit_plots(str(run_directory), 'gradient')
    emit_plots(str(run_directory), 'relaxation')
    assert 'certificate-marker' in (run_directory / 'gradient.svg').read_text()
    assert 't-c-marker' in (run_directory / 'relaxation.svg').read_text()


def test_plots_are_deterministic(run_directory):
    """Test the same inputs give byte-identical SVG files"""
    first = (run_directory / 'gradient.svg')
    emit_plots(str(run_directory), 'gradient')
    before = first.read_bytes()
    emit_plots(str(run_directory), 'gradient')
    assert first.read_bytes() == before


def test_named_plot_without_data(run_directory):
    """Test a requested plot without data raises NoData"""
    with pytest.raises(NoData):
        emit_plots(str(run_directory), 'moment')
    with pytest.raises(NoData):
        emit_plots(str(run_directory), 'picard')


def test_unknown_plot_and_empty_directory(tmp_path):
    """Test the selector is validated and empty directories raise NoData"""
    with pytest.raises(InvalidArgument):
        emit_plots(str(tmp_path), 'density')
    with pytest.raises(NoData):
        emit_plots(str(tmp_path))


def test_picard_plot(tmp_path):
    """Test the iteration trace plot"""
    rows = [{'k': k, 'diff_U': 0.5 ** k, 'diff_I': 0.25 ** k, 'r_k': None} for k in range(5)]
    write_csv(str(tmp_path / 'picard_trace.csv'), rows, ['k', 'diff_U', 'diff_I', 'r_k'])
    written = emit_plots(str(tmp_path), 'picard')
    assert os.path.basename(written[0]) == 'picard.svg'


def test_decay_slope():
    """Test the log-linear fit recovers the contraction rate"""
    ks = np.arange(6)
    assert decay_slope(ks, 3.0 * 0.5 ** ks) == pytest.approx(np.log(0.5))
    with pytest.raises(NoData):
        decay_slope([0, 1], [1.0, 0.0])
