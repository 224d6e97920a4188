"""
Uniform cell-centred spatial grids in one or three dimensions.

Field arrays keep the spatial axes last: a scalar field has shape ``cells``,
a vector field ``(3, *cells)``, an intensity field ``(G, K, *cells)``.
One-dimensional grids describe slabs that are uniform in y and z, so vector
fields still carry three components.
"""
import itertools
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import ndimage
from scipy.interpolate import RegularGridInterpolator

from euler_boltzmann.errors import DimensionError, InvalidArgument

# Volume of the unit ball per space dimension
UNIT_BALL_VOLUME = {1: 2.0, 2: np.pi, 3: 4.0 * np.pi / 3.0}


@dataclass(frozen=True)
class Grid:
    cells: Tuple[int, ...]
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    periodic: bool = False

    def __post_init__(self):
        if len(self.cells) not in (1, 3):
            raise InvalidArgument(f'Grids are one- or three-dimensional, got {len(self.cells)} axes')
        if not len(self.cells) == len(self.lower) == len(self.upper):
            raise DimensionError('cells, lower and upper must have the same length')
        if any(n < 2 for n in self.cells):
            raise InvalidArgument('Every axis needs at least two cells')
        if any(hi <= lo for lo, hi in zip(self.lower, self.upper)):
            raise InvalidArgument('Upper bounds must exceed lower bounds')

    @classmethod
    def line(cls, cells, lower, upper, periodic=False):
        return cls((int(cells),), (float(lower),), (float(upper),), periodic)

    @classmethod
    def cube(cls, cells, lower, upper, periodic=False):
        n = int(cells)
        return cls((n, n, n), (float(lower),) * 3, (float(upper),) * 3, periodic)

    @property
    def ndim(self):
        return len(self.cells)

    @property
    def spacing(self):
        return tuple((hi - lo) / n for lo, hi, n in zip(self.lower, self.upper, self.cells))

    @property
    def h(self):
        return min(self.spacing)

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    def axis_centers(self, axis):
        lo, dx = self.lower[axis], self.spacing[axis]
        return lo + (np.arange(self.cells[axis]) + 0.5) * dx

    def positions(self):
        """Cell centres as an array of shape ``(ndim, *cells)``."""
        axes = [self.axis_centers(a) for a in range(self.ndim)]
        return np.stack(np.meshgrid(*axes, indexing='ij'))

    def radius(self):
        return np.sqrt(np.sum(self.positions() ** 2, axis=0))

    def check_field(self, values, leading=0):
        values = np.asarray(values)
        if values.shape[leading:] != self.cells:
            raise DimensionError(
                f'Field shape {values.shape} does not end with grid cells {self.cells}')
        return values

    # -- discrete derivatives ------------------------------------------------

    def derivative(self, values, axis):
        """Centred first difference along spatial ``axis``; one-sided at walls."""
        values = np.asarray(values, dtype=float)
        ax = values.ndim - self.ndim + axis
        dx = self.spacing[axis]
        if self.periodic:
            return (np.roll(values, -1, axis=ax) - np.roll(values, 1, axis=ax)) / (2.0 * dx)
        return np.gradient(values, dx, axis=ax, edge_order=2)

    def gradient(self, values):
        """Gradient of the trailing spatial axes, stacked on a new leading axis."""
        return np.stack([self.derivative(values, a) for a in range(self.ndim)])

    def divergence(self, vector):
        """Divergence of a ``(3, *cells)`` field; absent axes contribute nothing."""
        vector = np.asarray(vector, dtype=float)
        return sum(self.derivative(vector[a], a) for a in range(self.ndim))

    def multi_indices(self, order):
        """All derivative multi-indices of total order ``order``."""
        return [alpha for alpha in itertools.product(range(order + 1), repeat=self.ndim)
                if sum(alpha) == order]

    # -- interpolation -------------------------------------------------------

    def to_index(self, points):
        """Map physical points ``(ndim, ...)`` to fractional cell indices."""
        points = np.asarray(points, dtype=float)
        return np.stack([(points[a] - self.lower[a]) / self.spacing[a] - 0.5
                         for a in range(self.ndim)])

    def interpolate(self, values, points, outside='extrapolate', cval=0.0):
        """
        Multilinear interpolation of a field at physical ``points``.

        ``values`` has shape ``(*lead, *cells)`` and ``points`` ``(ndim, *P)``;
        the result has shape ``(*lead, *P)``. Periodic grids wrap. Otherwise
        ``outside='extrapolate'`` continues the edge cells linearly and
        ``outside='constant'`` fills ghost cells with ``cval``.
        """
        values = np.asarray(values, dtype=float)
        points = np.asarray(points, dtype=float)
        lead = values.shape[:values.ndim - self.ndim]
        flat = values.reshape((-1,) + self.cells)
        out_shape = points.shape[1:]
        if self.periodic or outside == 'constant':
            coords = self.to_index(points)
            mode = 'grid-wrap' if self.periodic else 'grid-constant'
            result = [ndimage.map_coordinates(f, coords, order=1, mode=mode, cval=cval)
                      for f in flat]
        else:
            axes = tuple(self.axis_centers(a) for a in range(self.ndim))
            query = np.moveaxis(points.reshape(self.ndim, -1), 0, -1)
            result = []
            for f in flat:
                interpolator = RegularGridInterpolator(axes, f, method='linear',
                                                       bounds_error=False, fill_value=None)
                result.append(interpolator(query).reshape(out_shape))
        return np.asarray(result).reshape(lead + out_shape)

    def contains(self, points):
        points = np.asarray(points, dtype=float)
        inside = np.ones(points.shape[1:], dtype=bool)
        for a in range(self.ndim):
            inside &= (points[a] >= self.lower[a]) & (points[a] <= self.upper[a])
        return inside

    def to_dict(self):
        return {'cells': list(self.cells), 'lower': list(self.lower),
                'upper': list(self.upper), 'periodic': self.periodic}
