"""
Discretisation of photon directions (the unit sphere) and frequencies.

Weights are kept in steradians and frequency units and are never
normalised, so the moment sums match the unnormalised integrals
over dOmega dv.
"""
from dataclasses import dataclass

import numpy as np

from euler_boltzmann.errors import InvalidArgument

FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True, eq=False)
class AngularQuadrature:
    ordinates: np.ndarray  # (K, 3) unit vectors
    weights: np.ndarray    # (K,) steradians
    kind: str = 'product'
    order: int = 0

    def __post_init__(self):
        ordinates = np.array(self.ordinates, dtype=float, copy=True)
        weights = np.array(self.weights, dtype=float, copy=True)
        if ordinates.ndim != 2 or ordinates.shape[1] != 3 or len(weights) != len(ordinates):
            raise InvalidArgument('ordinates must be (K, 3) with one weight per ordinate')
        if np.any(np.abs(np.linalg.norm(ordinates, axis=1) - 1.0) > 1e-12):
            raise InvalidArgument('every ordinate must be a unit vector')
        if np.any(weights <= 0.0):
            raise InvalidArgument('angular weights must be positive')
        if abs(weights.sum() - FOUR_PI) > 1e-10:
            raise InvalidArgument(f'angular weights sum to {weights.sum()}, expected 4*pi')
        if np.any(np.abs(weights @ ordinates) > 1e-10):
            raise InvalidArgument('angular quadrature must integrate Omega to zero')
        ordinates.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, 'ordinates', ordinates)
        object.__setattr__(self, 'weights', weights)

    def __len__(self):
        return len(self.weights)

    def closest(self, direction):
        """Index of the ordinate closest to ``direction``."""
        direction = np.asarray(direction, dtype=float)
        return int(np.argmax(self.ordinates @ (direction / np.linalg.norm(direction))))

    def second_moment(self):
        return np.einsum('k,ki,kj->ij', self.weights, self.ordinates, self.ordinates)

    def cosines(self):
        """Matrix of Omega_k . Omega_l between all ordinate pairs."""
        return np.clip(self.ordinates @ self.ordinates.T, -1.0, 1.0)


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    nodes: np.ndarray
    weights: np.ndarray
    v_max: float
    degree: int

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float, copy=True)
        weights = np.array(self.weights, dtype=float, copy=True)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise InvalidArgument('frequency nodes and weights must be matching 1-D arrays')
        if np.any(nodes <= 0.0) or np.any(np.diff(nodes) <= 0.0):
            raise InvalidArgument('frequency nodes must be positive and strictly increasing')
        if np.any(weights <= 0.0):
            raise InvalidArgument('frequency weights must be positive')
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, 'nodes', nodes)
        object.__setattr__(self, 'weights', weights)

    def __len__(self):
        return len(self.nodes)

    def integrate(self, values):
        """Quadrature of samples taken at the nodes (leading axis = groups)."""
        return np.tensordot(self.weights, np.asarray(values, dtype=float), axes=(0, 0))


def build_ordinates(order):
    """
    Product rule on S^2: Gauss-Legendre in the polar cosine times a uniform
    trapezoid rule with ``2*order`` azimuths. Returns ``2*order**2`` ordinates.
    """
    if int(order) != order or order < 2:
        raise InvalidArgument(f'ordinate order must be an integer >= 2, got {order}')
    order = int(order)
    mu, mu_weights = np.polynomial.legendre.leggauss(order)
    n_phi = 2 * order
    phi = (np.arange(n_phi) + 0.5) * (2.0 * np.pi / n_phi)
    mu_grid, phi_grid = np.meshgrid(mu, phi, indexing='ij')
    sin_theta = np.sqrt(1.0 - mu_grid ** 2)
    ordinates = np.stack([sin_theta * np.cos(phi_grid),
                          sin_theta * np.sin(phi_grid),
                          mu_grid], axis=-1).reshape(-1, 3)
    ordinates /= np.linalg.norm(ordinates, axis=1, keepdims=True)
    weights = np.outer(mu_weights, np.full(n_phi, 2.0 * np.pi / n_phi)).ravel()
    return AngularQuadrature(ordinates, weights, kind='product', order=order)


def build_rod_ordinates():
    """Two-stream set for one-dimensional runs: +e1 and -e1, 2*pi each."""
    ordinates = np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    weights = np.full(2, 2.0 * np.pi)
    return AngularQuadrature(ordinates, weights, kind='rod', order=1)


def build_frequency_grid(groups, v_max):
    """Gauss-Legendre rule on (0, v_max]; exact for polynomials of degree 2*groups-1."""
    if int(groups) != groups or groups < 1:
        raise InvalidArgument(f'frequency groups must be a positive integer, got {groups}')
    if not v_max > 0.0:
        raise InvalidArgument(f'v_max must be positive, got {v_max}')
    x, w = np.polynomial.legendre.leggauss(int(groups))
    nodes = 0.5 * (x + 1.0) * v_max
    weights = 0.5 * w * v_max
    return FrequencyGrid(nodes, weights, float(v_max), degree=2 * int(groups) - 1)
