"""Independent oracles shared by the test modules."""

import numpy as np


def central_difference(f, x, h):
    """Second-order central difference of a scalar function."""
    return (f(x + h) - f(x - h)) / (2 * h)


def richardson_derivative(f, x, h):
    """Fourth-order central difference (two step sizes, Richardson-combined)."""
    d1 = central_difference(f, x, h)
    d2 = central_difference(f, x, h / 2)
    return (4 * d2 - d1) / 3


def rel_err(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.abs(a - b) / np.maximum(np.abs(b), np.finfo(float).tiny)


def random_point(rng, depth=(50.0, 3000.0), width=5000.0):
    return np.array([rng.uniform(-width, width), rng.uniform(*depth)])


def parabola_vertex_by_hand(alphas, energies):
    """Vertex of the interpolating parabola from the 3x3 Vandermonde system."""
    A = np.array([[a * a, a, 1.0] for a in alphas])
    a, b, c = np.linalg.solve(A, np.asarray(energies, dtype=float))
    return a, b, c
