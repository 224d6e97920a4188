"""
Static SVG plots of run artifacts.

Figures are built on ``matplotlib.figure.Figure`` directly (no pyplot state),
with a fixed SVG hash salt and no date stamp so that the same input always
produces byte-identical files.
"""
import logging
import os

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from euler_boltzmann.errors import InvalidArgument, NoData
from euler_boltzmann.snapshots import read_csv, read_json

logger = logging.getLogger(__name__)

PLOTS = ('moment', 'gradient', 'relaxation', 'picard')
SVG_SALT = 'euler-boltzmann'
TIMESERIES = 'timeseries.csv'
CERTIFICATE = 'certificate.json'
PICARD_TRACE = 'picard_trace.csv'


def _save(figure, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with matplotlib.rc_context({'svg.hashsalt': SVG_SALT, 'svg.fonttype': 'path'}):
        figure.savefig(path, format='svg', metadata={'Date': None})
    logger.info('wrote %s', path)
    return path


def _series(table, column):
    if column not in table:
        raise NoData(f'time series has no {column!r} column')
    t = np.asarray(table['t'], dtype=float)
    values = np.asarray(table[column], dtype=float)
    keep = np.isfinite(values)
    if not keep.any():
        raise NoData(f'time series column {column!r} is empty')
    return t[keep], values[keep]


def _marker(ax, value, label, gid, style='--'):
    if value is None:
        return
    line = ax.axvline(value, color='black', linestyle=style, linewidth=1.0, label=label)
    line.set_gid(gid)


def plot_moment(table, certificate, path):
    """M(t) over B0 with the moment bound marked."""
    t, moment = _series(table, 'moment')
    figure = Figure(figsize=(6, 4))
    ax = figure.add_subplot()
    ax.plot(t, moment, color='tab:blue', label='M(t) over B0')
    _marker(ax, certificate.get('T_moment'), 'T_moment', 't-moment-marker')
    _marker(ax, certificate.get('T_c'), 'T_c', 't-c-marker', style=':')
    ax.set_xlabel('t')
    ax.set_ylabel('second moment')
    ax.grid(visible=True)
    ax.legend(loc='best')
    return _save(figure, path)


def plot_gradient(table, certificate, path):
    """max |grad u| on a log axis with the certificate time marked."""
    t, gradient = _series(table, 'max_grad_u')
    figure = Figure(figsize=(6, 4))
    ax = figure.add_subplot()
    ax.semilogy(t, np.maximum(gradient, np.finfo(float).tiny), color='tab:red', label='max |grad u|')
    marked = certificate.get('t_damped')
    if marked is None:
        marked = certificate.get('t_burgers')
    _marker(ax, marked, 'certificate time', 'certificate-marker')
    ax.set_xlabel('t')
    ax.set_ylabel('max |grad u|')
    ax.grid(visible=True)
    ax.legend(loc='best')
    return _save(figure, path)


def plot_relaxation(table, certificate, path):
    """sup over B0 of |I - Bbar| with T_c marked."""
    t, residual = _series(table, 'relaxation_residual')
    figure = Figure(figsize=(6, 4))
    ax = figure.add_subplot()
    ax.semilogy(t, np.maximum(residual, 1e-300), color='tab:green', label='sup |I - Bbar|')
    _marker(ax, certificate.get('T_c'), 'T_c', 't-c-marker')
    ax.set_xlabel('t')
    ax.set_ylabel('relaxation residual')
    ax.grid(visible=True)
    ax.legend(loc='best')
    return _save(figure, path)


def decay_slope(ks, differences):
    """Least-squares slope of log(difference) against k."""
    ks = np.asarray(ks, dtype=float)
    differences = np.asarray(differences, dtype=float)
    keep = differences > 0.0
    if keep.sum() < 2:
        raise NoData('at least two positive differences are needed for a slope')
    slope, _ = np.polyfit(ks[keep], np.log(differences[keep]), 1)
    return float(slope)


def plot_picard(trace, path):
    """Iterate differences on a log axis."""
    if 'k' not in trace or len(trace['k']) == 0:
        raise NoData('Picard trace is empty')
    ks = np.asarray(trace['k'], dtype=float)
    total = np.asarray(trace['diff_U'], dtype=float) + np.asarray(trace['diff_I'], dtype=float)
    figure = Figure(figsize=(6, 4))
    ax = figure.add_subplot()
    ax.semilogy(ks, np.maximum(total, 1e-300), 'o-', color='tab:purple', label='diff_U + diff_I')
    ax.set_xlabel('k')
    ax.set_ylabel('iterate difference')
    ax.grid(visible=True)
    ax.legend(loc='best')
    return _save(figure, path)


def emit_plots(directory, which='all'):
    """
    Plot the artifacts found in a run directory. ``which`` is 'all' or one of
    PLOTS; a named plot without data raises NoData, 'all' skips what is absent.
    """
    if which != 'all' and which not in PLOTS:
        raise InvalidArgument(f'unknown plot {which!r}; expected all or one of {", ".join(PLOTS)}')
    selected = PLOTS if which == 'all' else (which,)
    certificate_path = os.path.join(directory, CERTIFICATE)
    certificate = read_json(certificate_path) if os.path.isfile(certificate_path) else {}
    timeseries_path = os.path.join(directory, TIMESERIES)
    trace_path = os.path.join(directory, PICARD_TRACE)
    table = read_csv(timeseries_path) if os.path.isfile(timeseries_path) else None
    trace = read_csv(trace_path) if os.path.isfile(trace_path) else None

    writers = {
        'moment': lambda path: plot_moment(table, certificate, path),
        'gradient': lambda path: plot_gradient(table, certificate, path),
        'relaxation': lambda path: plot_relaxation(table, certificate, path),
        'picard': lambda path: plot_picard(trace, path),
    }
    written = []
    for name in selected:
        source = trace if name == 'picard' else table
        path = os.path.join(directory, f'{name}.svg')
        if source is None:
            if which != 'all':
                raise NoData(f'no data for the {name} plot in {directory}')
            continue
        try:
            written.append(writers[name](path))
        except NoData:
            if which != 'all':
                raise
            logger.info('skipping %s plot: no data', name)
    if not written:
        raise NoData(f'nothing to plot in {directory}')
    return written
