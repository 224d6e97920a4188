"""Desk-scale laboratory for the isentropic Euler-Boltzmann equations with vacuum."""

__version__ = '0.1.0'
