"""Closed-form Born sensitivity of the Laplace-domain field to a cell velocity.

The kernel is the product of the source-to-cell and cell-to-receiver Green's
functions times the virtual source 2 s^2 / c^3. Expanding the two mirrored
legs gives four paths with traveltimes ``tau`` and signed distance products
``rho``; the damping-constant derivatives follow by Leibniz on s^2 e^{-s tau}.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .greens import ray_pair

EIGHT_PI2 = 8.0 * np.pi ** 2


@dataclass(frozen=True)
class PathTerms:
    tau: np.ndarray  # (4, ...) seconds
    rho: np.ndarray  # (4, ...) square metres, signs + - - +


def path_terms(src, cell, rcv, c) -> PathTerms:
    """Four-path traveltimes and signed distance products for one scattering cell.

    The source-to-cell leg supplies (r3, t3) direct and (r4, t4) mirrored; the
    cell-to-receiver leg supplies (r1, t1) and (r2, t2).
    """
    cell_leg = ray_pair(src, cell, c)
    rcv_leg = ray_pair(cell, rcv, c)
    r1, r2, t1, t2 = rcv_leg.r1, rcv_leg.r2, rcv_leg.t1, rcv_leg.t2
    r3, r4, t3, t4 = cell_leg.r1, cell_leg.r2, cell_leg.t1, cell_leg.t2
    tau = np.stack(np.broadcast_arrays(t1 + t3, t2 + t3, t1 + t4, t2 + t4))
    rho = np.stack(np.broadcast_arrays(r1 * r3, -r2 * r3, -r1 * r4, r2 * r4))
    return PathTerms(tau, rho)


def born_kernel(f_m, src, cell, rcv, c, s):
    """d(field)/d(cell velocity) for a point scatterer."""
    return born_kernel_s_derivative(f_m, src, cell, rcv, c, s, 0)


def born_kernel_s_derivative(f_m, src, cell, rcv, c, s, n: int):
    """n-th s-derivative of the Born kernel."""
    pt = path_terms(src, cell, rcv, c)
    return kernel_derivatives(pt, f_m, c, s, [n])[n]


def kernel_derivatives(pt: PathTerms, f_m, c, s, orders: Iterable[int]):
    """Mixed derivatives for several gain powers sharing one exponential.

    Returns ``{n: array}``; Leibniz terms with a negative power of tau vanish.
    """
    damped = np.exp(-s * pt.tau) / pt.rho
    neg_tau = -pt.tau
    scale = f_m / (EIGHT_PI2 * c ** 3)
    out = {}
    for n in orders:
        if n < 0:
            raise ValueError("derivative order must be non-negative")
        poly = s * s * neg_tau ** n
        if n >= 1:
            poly = poly + 2 * n * s * neg_tau ** (n - 1)
        if n >= 2:
            poly = poly + n * (n - 1) * neg_tau ** (n - 2)
        out[n] = scale * np.sum(poly * damped, axis=0)
    return out
