"""Analytic Laplace-domain Green's function of a homogeneous half-space.

The free surface is honoured with an image source of opposite polarity
(Lloyd mirror). All functions broadcast over leading axes of the coordinate
arrays, so a whole receiver line or cell grid is one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularityError

FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True)
class RayPair:
    r1: np.ndarray
    r2: np.ndarray
    t1: np.ndarray
    t2: np.ndarray


def _distances(src, rcv):
    src = np.asarray(src, dtype=float)
    rcv = np.asarray(rcv, dtype=float)
    dx = rcv[..., 0] - src[..., 0]
    r1 = np.hypot(dx, rcv[..., 1] - src[..., 1])
    r2 = np.hypot(dx, rcv[..., 1] + src[..., 1])
    if np.any(r1 == 0):
        raise SingularityError("coincident points: a ray has zero length (source, receiver or scattering cell centre)")
    return r1, r2


def ray_pair(src, rcv, c) -> RayPair:
    """Direct and free-surface-image distances and traveltimes."""
    if np.any(np.asarray(c) <= 0):
        raise ValueError("velocity must be positive")
    r1, r2 = _distances(src, rcv)
    return RayPair(r1, r2, r1 / c, r2 / c)


def greens(src, rcv, c, s):
    """(1/4pi) (exp(-s t1)/r1 - exp(-s t2)/r2)."""
    return field_s_derivative(1.0, src, rcv, c, s, 0)


def modeled_field(f_m, src, rcv, c, s):
    return field_s_derivative(f_m, src, rcv, c, s, 0)


def field_s_derivative(f_m, src, rcv, c, s, n: int):
    """n-th derivative in s of the modelled field f_m * G.

    Differentiating exp(-s t) n times brings down (-t)^n.
    """
    if n < 0:
        raise ValueError("derivative order must be non-negative")
    rp = ray_pair(src, rcv, c)
    return _leg_derivative(f_m, rp, s, n)


def _leg_derivative(f_m, rp: RayPair, s, n):
    direct = np.exp(-s * rp.t1) / rp.r1
    image = np.exp(-s * rp.t2) / rp.r2
    if n:
        direct = direct * (-rp.t1) ** n
        image = image * (-rp.t2) ** n
    return f_m / FOUR_PI * (direct - image)


def cancellation_ratio(src, rcv, c, s, n: int):
    """How much of the ungained field's relative amplitude survives gaining.

    ``(|u_n| / |direct_n|) / (|u_0| / |direct_0|)`` where ``direct`` is the
    direct-path term alone. It is 1 for n = 0, close to 1 far from the offset
    where the gained direct and image terms cancel, and 0 at that crossing.
    """
    rp = ray_pair(src, rcv, c)
    rel0 = np.abs(1.0 - (rp.r1 / rp.r2) * np.exp(-s * (rp.t2 - rp.t1)))
    rel_n = np.abs(1.0 - (rp.t2 / rp.t1) ** n * (rp.r1 / rp.r2) * np.exp(-s * (rp.t2 - rp.t1)))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(rel0 > 0, rel_n / rel0, 0.0)
