"""
Pytest configuration and shared fixtures for the Euler-Boltzmann tests.
"""
import os
import sys
import tempfile

import pytest

# Environment defaults must be in place before euler_boltzmann.config is imported
os.environ.setdefault('EB_OUTPUT_DIR', os.path.join(tempfile.gettempdir(), 'euler-boltzmann-tests'))
os.environ.setdefault('EB_NUM_THREADS', '1')
os.environ.setdefault('EB_LOG_LEVEL', 'WARNING')
os.environ.setdefault('EB_DEFAULT_SEED', '0')

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from euler_boltzmann.coefficients import CoefficientModel, PhysicalConstants
from euler_boltzmann.grid import Grid
from euler_boltzmann.quadrature import build_frequency_grid, build_ordinates, build_rod_ordinates


@pytest.fixture
def periodic_line():
    return Grid.line(64, 0.0, 1.0, periodic=True)


@pytest.fixture
def slab():
    return Grid.line(64, -2.0, 2.0)


@pytest.fixture
def rod():
    return build_rod_ordinates()


@pytest.fixture
def product_ordinates():
    return build_ordinates(4)


@pytest.fixture
def frequency():
    return build_frequency_grid(2, 4.0)


@pytest.fixture
def constants():
    return PhysicalConstants(c=1.0, gamma=2.0)


@pytest.fixture
def model():
    return CoefficientModel(D1=1.0, D2=1.0, v0=2.0)
