import numpy as np
import pytest
import sys
import os

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from euler_boltzmann.errors import InvalidInput, NoData, NotFound
from euler_boltzmann.snapshots import (Snapshot, read_csv, read_json, read_snapshot, snapshot_header,
                                       verify_manifest, write_csv, write_json, write_manifest,
                                       write_ray_lineout, write_snapshot, write_timeseries)
from euler_boltzmann.transport import RadiationField


def test_snapshot_round_trip(tmp_path, slab, constants):
    """Test fields, time and header survive a write and read"""
    rng = np.random.default_rng(0)
    fields = {'rho': rng.uniform(size=64), 'u': rng.normal(size=(3, 64)), 'I': rng.uniform(size=(2, 2, 64))}
    header = snapshot_header(slab, constants, step=12, scenario='demo')
    path = write_snapshot(str(tmp_path / 'snap' / 'step.ebs'), Snapshot(0.1 + 0.2, header, fields))
    loaded = read_snapshot(path)
    assert loaded.t == 0.1 + 0.2
    assert loaded.header['step'] == '12'
    assert loaded.header['grid.cells'] == '64'
    assert loaded.header['grid.periodic'] == 'false'
    assert loaded.header['gamma'] == '2.0'
    assert list(loaded.fields) == ['rho', 'u', 'I']
    for name, values in fields.items():
        assert np.array_equal(loaded.fields[name], values)


def test_snapshot_errors(tmp_path):
    """Test missing, foreign and truncated files and bad field names"""
    with pytest.raises(NotFound):
        read_snapshot(str(tmp_path / 'missing.ebs'))
    foreign = tmp_path / 'foreign.ebs'
    foreign.write_bytes(b'PNG\nEND\n')
    with pytest.raises(InvalidInput):
        read_snapshot(str(foreign))
    path = write_snapshot(str(tmp_path / 'full.ebs'), Snapshot(0.0, {}, {'rho': np.ones(8)}))
    with open(path, 'rb') as handle:
        data = handle.read()
    truncated = tmp_path / 'truncated.ebs'
    truncated.write_bytes(data[:-8])
    with pytest.raises(InvalidInput):
        read_snapshot(str(truncated))
    with pytest.raises(InvalidInput):
        write_snapshot(str(tmp_path / 'bad.ebs'), Snapshot(0.0, {}, {'my rho': np.ones(2)}))


def test_csv_tables(tmp_path):
    """Test numeric columns parse as floats, blanks as NaN and text columns stay strings"""
    rows = [{'t': 0.0, 'moment': None, 'status': 'healthy', 'triggers': ''},
            {'t': 0.5, 'moment': 1.25, 'status': 'blown-up', 'triggers': 'gradient|dt-collapse'}]
    path = write_timeseries(str(tmp_path / 'timeseries.csv'), rows)
    table = read_csv(path)
    assert np.array_equal(table['t'], [0.0, 0.5])
    assert np.isnan(table['moment'][0]) and table['moment'][1] == 1.25
    assert table['status'] == ['healthy', 'blown-up']
    assert table['triggers'][1].split('|') == ['gradient', 'dt-collapse']
    assert np.all(np.isnan(table['mass']))


def test_csv_floats_are_exact(tmp_path):
    """Test floats are written with full precision"""
    value = 1.0 / 3.0
    path = write_csv(str(tmp_path / 'exact.csv'), [{'a': value}], ['a'])
    assert read_csv(path)['a'][0] == value


def test_empty_or_missing_table(tmp_path):
    """Test header-only tables raise NoData and missing ones NotFound"""
    path = write_csv(str(tmp_path / 'empty.csv'), [], ['t'])
    with pytest.raises(NoData):
        read_csv(path)
    with pytest.raises(NotFound):
        read_csv(str(tmp_path / 'nothing.csv'))


def test_json_converts_numpy(tmp_path):
    """Test numpy scalars and arrays are written as plain JSON"""
    path = write_json(str(tmp_path / 'report.json'), {'b': np.float64(0.5), 'a': np.arange(3), 'n': None})
    assert read_json(path) == {'a': [0, 1, 2], 'b': 0.5, 'n': None}
    with pytest.raises(NotFound):
        read_json(str(tmp_path / 'absent.json'))


def test_ray_lineout(tmp_path, slab, rod, frequency, model):
    """Test one column of I - Bbar per group and ordinate along x"""
    field = RadiationField.equilibrium(model, frequency, rod, slab)
    intensities = field.intensities.copy()
    intensities[1, 0, 5] += 0.5
    path = write_ray_lineout(str(tmp_path / 'ray.csv'), slab, field.with_intensities(intensities), model)
    table = read_csv(path)
    assert list(table) == ['x', 'I_g0_k0', 'I_g0_k1', 'I_g1_k0', 'I_g1_k1']
    assert np.allclose(table['x'], slab.axis_centers(0))
    assert table['I_g1_k0'][5] == pytest.approx(0.5)
    assert np.all(table['I_g0_k1'] == 0.0)


def test_manifest_detects_changes(tmp_path):
    """Test every file is hashed and later edits are reported"""
    first = write_json(str(tmp_path / 'a.json'), {'x': 1})
    second = write_csv(str(tmp_path / 'sub' / 'b.csv'), [{'t': 0.0}], ['t'])
    manifest = write_manifest(str(tmp_path), [first, second, first])
    entries = read_json(manifest)['files']
    assert [entry['path'] for entry in entries] == ['a.json', 'sub/b.csv']
    assert all(len(entry['sha256']) == 64 for entry in entries)
    assert verify_manifest(manifest) == []
    with open(second, 'a') as handle:
        handle.write('1.0\n')
    os.remove(first)
    assert verify_manifest(manifest) == ['a.json', 'sub/b.csv']
