"""
Symmetric hyperbolic form of the isentropic Euler part.

With w = rho**((gamma-1)/2) and U = (w, u) the fluid equations read

    A0 dU/dt + sum_j A_j(U) dU/dx_j = G(I, U),

where A0 = diag(1, kappa, kappa, kappa), kappa = (gamma-1)**2 / (4 gamma).
The radiation enters only through G (LTE form) or F (scattering form).
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from euler_boltzmann.coefficients import (absorption_ka, absorption_bar, density_factor, emission_bar,
                                          kbar_a, scattering_matrices)
from euler_boltzmann.errors import DimensionError, InvalidArgument, InvalidModel

logger = logging.getLogger(__name__)


def _check_gamma(gamma):
    if not 1.0 < gamma <= 3.0:
        raise InvalidArgument(f'adiabatic exponent must lie in (1, 3], got {gamma}')


def kappa(gamma):
    _check_gamma(gamma)
    return (gamma - 1.0) ** 2 / (4.0 * gamma)


def w_from_rho(rho, gamma):
    _check_gamma(gamma)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0.0):
        raise InvalidArgument('density must be non-negative')
    return rho ** ((gamma - 1.0) / 2.0)


def rho_from_w(w, gamma):
    _check_gamma(gamma)
    w = np.asarray(w, dtype=float)
    if np.any(w < 0.0):
        raise InvalidArgument('w must be non-negative')
    return w ** (2.0 / (gamma - 1.0))


@dataclass(eq=False)
class SymmetrizedState:
    """U = (w, u) per cell; ``u`` carries three components."""

    w: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        if self.u.shape != (3,) + self.w.shape:
            raise DimensionError(f'u must have shape (3, *cells), got {self.u.shape}')

    def stacked(self):
        """The 4-component array (w, u1, u2, u3)."""
        return np.concatenate([self.w[None], self.u])


def assemble_a0(gamma):
    k = kappa(gamma)
    return np.diag([1.0, k, k, k])


def assemble_aj(U_cell, gamma, j):
    """A_j(U) for one cell; ``j`` counts axes from 1."""
    if j not in (1, 2, 3):
        raise InvalidArgument(f'axis index must be 1, 2 or 3, got {j}')
    k = kappa(gamma)
    w, u = float(U_cell[0]), np.asarray(U_cell[1:4], dtype=float)
    matrix = np.zeros((4, 4))
    matrix[0, 0] = u[j - 1]
    matrix[0, j] = matrix[j, 0] = 0.5 * (gamma - 1.0) * w
    matrix[1:, 1:] = k * u[j - 1] * np.eye(3)
    return matrix


def characteristic_speeds(U_cell, gamma, j):
    """Eigenvalues of A0^-1 A_j(U), from the symmetric-definite pencil."""
    return linalg.eigh(assemble_aj(U_cell, gamma, j), assemble_a0(gamma), eigvals_only=True)


def sound_speed(w, gamma):
    return np.sqrt(gamma) * np.asarray(w, dtype=float)


def _check_field(field, quadrature):
    intensities = np.asarray(field.intensities, dtype=float)
    expected = (len(field.frequency), len(quadrature))
    if intensities.shape[:2] != expected:
        raise DimensionError(
            f'intensity grid {intensities.shape[:2]} does not match (groups, ordinates) {expected}')
    return intensities


def _expand(values, ndim):
    return np.reshape(values, np.shape(values) + (1,) * ndim)


def angular_moment(values, frequency, quadrature):
    """sum_g sum_k w_g w_k values[g, k] Omega_k, shape (3, *cells)."""
    weights = np.outer(frequency.weights, quadrature.weights)
    return np.einsum('gk,kd,gk...->d...', weights, quadrature.ordinates, values)


def radiation_source_g(field, w, model, quadrature, constants):
    """
    G(I, U): zero in the continuity row and
    kappa/c * sum sum Kbar_a (I - Bbar) Omega_j in the velocity rows.
    Cells with w = 0 get G = 0.
    """
    intensities = _check_field(field, quadrature)
    cells = intensities.shape[2:]
    w = np.broadcast_to(np.asarray(w, dtype=float), cells)
    v = _expand(field.frequency.nodes, len(cells))
    kbar = kbar_a(v, w, constants, model)
    bbar = _expand(model.planck_profile(field.frequency.nodes), len(cells))
    excess = kbar[:, None] * (intensities - bbar[:, None])
    source = np.zeros((4,) + cells)
    source[1:] = constants.kappa / constants.c * angular_moment(excess, field.frequency, quadrature)
    source[1:, w == 0.0] = 0.0
    return source


def radiation_momentum_source(field, w, model, quadrature, constants):
    """(1/c) sum sum K_a (I - Bbar) Omega: the radiation force per unit volume."""
    intensities = _check_field(field, quadrature)
    cells = intensities.shape[2:]
    w = np.broadcast_to(np.asarray(w, dtype=float), cells)
    v = _expand(field.frequency.nodes, len(cells))
    ka = absorption_ka(v, w, constants, model)
    bbar = _expand(model.planck_profile(field.frequency.nodes), len(cells))
    excess = ka[:, None] * (intensities - bbar[:, None])
    return angular_moment(excess, field.frequency, quadrature) / constants.c


def scattering_exchange(intensities, rho, kernel, frequency, quadrature):
    """rho * (in-scattering - out-scattering) at every (v_g, Omega_k)."""
    gain, loss = scattering_matrices(kernel, frequency, quadrature)
    cells = intensities.shape[2:]
    inflow = np.einsum('gkhl,hl...->gk...', gain, intensities)
    outflow = _expand(loss, len(cells)) * intensities
    return np.asarray(rho) * (inflow - outflow)


def _reduced_collision(intensities, w, frequency, quadrature, model, constants):
    # A_r / rho, the collision term per unit density
    cells = intensities.shape[2:]
    v = _expand(frequency.nodes, len(cells))[:, None]
    w_b = np.asarray(w, dtype=float)
    s_bar = emission_bar(v, w_b, intensities, constants, model)
    a_bar = absorption_bar(v, w_b, constants, model)
    reduced = s_bar - a_bar * intensities
    if model.scattering is not None:
        reduced = reduced + scattering_exchange(intensities, 1.0, model.scattering, frequency, quadrature)
    return reduced


def collision_ar(field, rho, model, quadrature, constants):
    """A_r = S - sigma_a I + scattering exchange, at every (v_g, Omega_k, cell)."""
    intensities = _check_field(field, quadrature)
    cells = intensities.shape[2:]
    rho = np.broadcast_to(np.asarray(rho, dtype=float), cells)
    w = w_from_rho(rho, constants.gamma)
    reduced = _reduced_collision(intensities, w, field.frequency, quadrature, model, constants)
    return density_factor(w, constants) * reduced


def collision_source_f(field, w, model, quadrature, constants):
    """
    Scattering-form source: zero continuity row and
    -kappa/c * sum sum (A_r / rho) Omega_j in the velocity rows; F = 0 where w = 0.
    """
    if model.scattering is None:
        raise InvalidModel('the scattering-form source needs a scattering kernel')
    intensities = _check_field(field, quadrature)
    cells = intensities.shape[2:]
    w = np.broadcast_to(np.asarray(w, dtype=float), cells)
    reduced = _reduced_collision(intensities, w, field.frequency, quadrature, model, constants)
    source = np.zeros((4,) + cells)
    source[1:] = -constants.kappa / constants.c * angular_moment(reduced, field.frequency, quadrature)
    source[1:, w == 0.0] = 0.0
    return source
