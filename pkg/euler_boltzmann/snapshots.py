"""
Run artifact persistence: binary field snapshots, RFC-4180 CSV tables,
JSON reports and the content-hash manifest.

A snapshot is a text header followed by little-endian float64 arrays:

    EBSNAP 1
    t = 0.5
    grid.cells = 512
    ...
    field rho float64 512
    field u float64 3 512
    END
    <raw bytes of every field in declared order>
"""
import csv
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from euler_boltzmann.errors import InvalidInput, NoData, NotFound

logger = logging.getLogger(__name__)

SNAPSHOT_MAGIC = 'EBSNAP 1'
SNAPSHOT_DTYPE = np.dtype('<f8')
MANIFEST_NAME = 'manifest.json'

TIMESERIES_COLUMNS = (
    't', 'dt', 'mass', 'momentum', 'm_b0', 'moment', 'dmoment_dt', 'moment_domain',
    'max_u', 'max_grad_u', 'min_rho', 'relaxation_residual', 'clipped', 'status', 'triggers',
)
TEXT_COLUMNS = ('status', 'triggers')


@dataclass(eq=False)
class Snapshot:
    t: float
    header: Dict[str, str] = field(default_factory=dict)
    fields: Dict[str, np.ndarray] = field(default_factory=dict)


def _header_value(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (list, tuple)):
        return ' '.join(_header_value(v) for v in value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def snapshot_header(grid, constants, step=None, scenario=None):
    header = {
        'grid.cells': _header_value(grid.cells),
        'grid.lower': _header_value(grid.lower),
        'grid.upper': _header_value(grid.upper),
        'grid.periodic': _header_value(grid.periodic),
    }
    header.update({k: _header_value(v) for k, v in constants.to_dict().items()})
    if step is not None:
        header['step'] = str(step)
    if scenario is not None:
        header['scenario'] = scenario
    return header


def write_snapshot(path, snapshot):
    lines = [SNAPSHOT_MAGIC, f't = {float(snapshot.t)!r}']
    lines += [f'{key} = {value}' for key, value in snapshot.header.items()]
    arrays = []
    for name, values in snapshot.fields.items():
        if not name or any(ch.isspace() for ch in name):
            raise InvalidInput(f'field names cannot contain whitespace: {name!r}')
        values = np.ascontiguousarray(values, dtype=SNAPSHOT_DTYPE)
        dims = ' '.join(str(d) for d in values.shape)
        lines.append(f'field {name} float64 {dims}'.rstrip())
        arrays.append(values)
    lines.append('END')
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'wb') as handle:
        handle.write(('\n'.join(lines) + '\n').encode('ascii'))
        for values in arrays:
            handle.write(values.tobytes(order='C'))
    return path


def read_snapshot(path):
    if not os.path.isfile(path):
        raise NotFound(f'Snapshot not found: {path}', path=path)
    with open(path, 'rb') as handle:
        data = handle.read()
    end = data.find(b'\nEND\n')
    if not data.startswith(SNAPSHOT_MAGIC.encode('ascii') + b'\n') or end < 0:
        raise InvalidInput(f'{path} is not a snapshot file', path=path)
    lines = data[:end].decode('ascii').split('\n')[1:]
    offset = end + len(b'\nEND\n')
    snapshot = Snapshot(t=0.0)
    layout = []
    for line in lines:
        if line.startswith('field '):
            parts = line.split()
            if len(parts) < 3 or parts[2] != 'float64':
                raise InvalidInput(f'bad field declaration {line!r}', path=path)
            layout.append((parts[1], tuple(int(d) for d in parts[3:])))
            continue
        key, _, value = line.partition(' = ')
        if key == 't':
            snapshot.t = float(value)
        else:
            snapshot.header[key] = value
    for name, shape in layout:
        count = int(np.prod(shape, dtype=np.int64))
        size = count * SNAPSHOT_DTYPE.itemsize
        if offset + size > len(data):
            raise InvalidInput(f'snapshot {path} is truncated in field {name!r}', path=path)
        snapshot.fields[name] = np.frombuffer(data, dtype=SNAPSHOT_DTYPE, count=count,
                                              offset=offset).reshape(shape).copy()
        offset += size
    return snapshot


# -- tables ------------------------------------------------------------------

def write_csv(path, rows, columns):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w', newline='') as handle:
        writer = csv.DictWriter(handle, fieldnames=list(columns), extrasaction='ignore')
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(row.get(k)) for k in columns})
    return path


def _cell(value):
    if value is None:
        return ''
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def read_csv(path):
    """Columns as float arrays; text columns and unparsable cells stay strings."""
    if not os.path.isfile(path):
        raise NotFound(f'Table not found: {path}', path=path)
    with open(path, newline='') as handle:
        rows = list(csv.DictReader(handle))
    if not rows:
        raise NoData(f'{path} holds no rows', path=path)
    table = {}
    for column in rows[0].keys():
        values = [row[column] for row in rows]
        if column in TEXT_COLUMNS:
            table[column] = values
            continue
        try:
            table[column] = np.array([float(v) if v != '' else np.nan for v in values])
        except ValueError:
            table[column] = values
    return table


def write_timeseries(path, rows):
    return write_csv(path, rows, TIMESERIES_COLUMNS)


def write_ray_lineout(path, grid, field, model):
    """I - Bbar per (group, ordinate) along the x axis through the grid centre."""
    bbar = model.planck_profile(field.frequency.nodes).reshape((-1, 1) + (1,) * grid.ndim)
    excess = field.intensities - bbar
    index = (slice(None), slice(None), slice(None)) + tuple(n // 2 for n in grid.cells[1:])
    line = excess[index]
    columns = ['x'] + [f'I_g{g}_k{k}' for g in range(line.shape[0]) for k in range(line.shape[1])]
    rows = []
    for i, x in enumerate(grid.axis_centers(0)):
        row = {'x': float(x)}
        row.update({f'I_g{g}_k{k}': float(line[g, k, i])
                    for g in range(line.shape[0]) for k in range(line.shape[1])})
        rows.append(row)
    return write_csv(path, rows, columns)


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f'{type(value).__name__} is not JSON serialisable')


def write_json(path, data):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w') as handle:
        json.dump(data, handle, indent=2, sort_keys=True, default=_jsonable)
        handle.write('\n')
    return path


def read_json(path):
    if not os.path.isfile(path):
        raise NotFound(f'Report not found: {path}', path=path)
    with open(path) as handle:
        return json.load(handle)


# -- manifest ----------------------------------------------------------------

def file_sha256(path):
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(directory, paths):
    """List every emitted file (relative to ``directory``) with its size and hash."""
    entries = []
    for path in sorted({os.path.abspath(p) for p in paths}):
        entries.append({'path': os.path.relpath(path, os.path.abspath(directory)).replace(os.sep, '/'),
                        'bytes': os.path.getsize(path), 'sha256': file_sha256(path)})
    manifest = os.path.join(directory, MANIFEST_NAME)
    write_json(manifest, {'files': entries})
    logger.info('wrote manifest with %d files to %s', len(entries), manifest)
    return manifest


def update_manifest(directory, paths):
    """Add ``paths`` to the manifest of ``directory``, rehashing every entry."""
    manifest = os.path.join(directory, MANIFEST_NAME)
    existing = []
    if os.path.isfile(manifest):
        existing = [os.path.join(directory, entry['path']) for entry in read_json(manifest)['files']]
    kept = [path for path in existing if os.path.isfile(path)]
    return write_manifest(directory, kept + list(paths))


def verify_manifest(path):
    """Entries whose file is missing or whose hash no longer matches."""
    directory = os.path.dirname(os.path.abspath(path))
    mismatched: List[str] = []
    for entry in read_json(path)['files']:
        target = os.path.join(directory, entry['path'])
        if not os.path.isfile(target) or file_sha256(target) != entry['sha256']:
            mismatched.append(entry['path'])
    return mismatched
