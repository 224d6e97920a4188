import numpy as np
import pytest
import sys
import os

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from euler_boltzmann.errors import InvalidArgument
from euler_boltzmann.quadrature import (FOUR_PI, AngularQuadrature, build_frequency_grid, build_ordinates,
                                        build_rod_ordinates)


@pytest.mark.parametrize('order', [2, 4, 8])
def test_product_rule_invariants(order):
    """Test unit ordinates, 4 pi total weight and isotropic second moment"""
    q = build_ordinates(order)
    assert len(q) == 2 * order ** 2
    assert np.allclose(np.linalg.norm(q.ordinates, axis=1), 1.0)
    assert q.weights.sum() == pytest.approx(FOUR_PI, abs=1e-12)
    assert np.allclose(q.weights @ q.ordinates, 0.0, atol=1e-12)
    assert np.allclose(q.second_moment(), FOUR_PI / 3.0 * np.eye(3), atol=1e-12)


def test_rod_ordinates():
    """Test the two-stream rod set"""
    q = build_rod_ordinates()
    assert len(q) == 2
    assert np.allclose(q.weights, 2.0 * np.pi)
    assert q.closest([1.0, 0.0, 0.0]) == 0
    assert q.closest([-2.0, 0.1, 0.0]) == 1


def test_quadrature_is_read_only():
    """Test ordinates and weights cannot be modified"""
    q = build_ordinates(2)
    with pytest.raises(ValueError):
        q.weights[0] = 1.0


def test_invalid_quadratures_rejected():
    """Test invariant violations are rejected"""
    with pytest.raises(InvalidArgument):
        build_ordinates(1)
    with pytest.raises(InvalidArgument):
        AngularQuadrature(np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]), np.full(2, 2 * np.pi))
    with pytest.raises(InvalidArgument):
        AngularQuadrature(np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]), np.full(2, np.pi))


def test_frequency_rule_exact_for_polynomials():
    """Test Gauss-Legendre frequency rule integrates degree 2G-1 exactly"""
    grid = build_frequency_grid(3, 2.0)
    assert grid.degree == 5
    assert grid.integrate(grid.nodes ** 5) == pytest.approx(2.0 ** 6 / 6.0, rel=1e-13)
    assert np.all(grid.nodes > 0.0) and grid.nodes.max() < 2.0


def test_frequency_integrate_keeps_trailing_axes():
    """Test frequency quadrature contracts only the group axis"""
    grid = build_frequency_grid(2, 4.0)
    values = np.ones((2, 5, 7))
    assert np.allclose(grid.integrate(values), 4.0)


def test_invalid_frequency_grid_rejected():
    """Test non-positive inputs are rejected"""
    with pytest.raises(InvalidArgument):
        build_frequency_grid(0, 1.0)
    with pytest.raises(InvalidArgument):
        build_frequency_grid(2, 0.0)
