"""Velocity grids, acquisition geometry and grid resampling.

Coordinates live in the (x, z) plane with the free surface at z = 0 and z
positive downward. Velocities sit at cell centres; cell (iz, ix) has its
centre at ``(origin_x + (ix + 0.5) dx, origin_z + (iz + 0.5) dz)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np


def mirror_point(p):
    """Image of ``p`` across the free surface."""
    x, z = p
    return (x, -z)


def _mirror_array(points: np.ndarray) -> np.ndarray:
    out = np.array(points, dtype=float, copy=True)
    out[..., 1] *= -1.0
    return out


@dataclass(frozen=True, eq=False)
class VelocityModel:
    nx: int
    nz: int
    dx: float
    dz: float
    velocities: np.ndarray
    origin_x: float = 0.0
    origin_z: float = 0.0
    water_mask: Optional[np.ndarray] = None

    def __post_init__(self):
        if int(self.nx) < 1 or int(self.nz) < 1:
            raise ValueError(f"grid needs at least one cell, got nx={self.nx}, nz={self.nz}")
        if not (self.dx > 0 and self.dz > 0):
            raise ValueError(f"cell spacing must be positive, got dx={self.dx}, dz={self.dz}")
        v = np.array(self.velocities, dtype=np.float64).reshape(self.nz, self.nx)
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ValueError("velocities must be finite and positive")
        v.flags.writeable = False
        object.__setattr__(self, "velocities", v)
        if self.water_mask is not None:
            m = np.asarray(self.water_mask, dtype=bool)
            if m.size != self.nx * self.nz:
                raise ValueError(f"water_mask has {m.size} entries, expected {self.nx * self.nz}")
            m = m.reshape(self.nz, self.nx).copy()
            m.flags.writeable = False
            object.__setattr__(self, "water_mask", m)

    @classmethod
    def constant(cls, nx, nz, dx, dz, velocity, origin_x=0.0, origin_z=0.0):
        return cls(nx, nz, dx, dz, np.full((nz, nx), float(velocity)), origin_x, origin_z)

    @property
    def shape(self):
        return (self.nz, self.nx)

    @property
    def x_centers(self) -> np.ndarray:
        return self.origin_x + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def z_centers(self) -> np.ndarray:
        return self.origin_z + (np.arange(self.nz) + 0.5) * self.dz

    @property
    def cell_volume(self) -> float:
        """Scattering volume of one cell, taken as a prism dx thick out of plane."""
        return self.dx * self.dz * self.dx

    def cell_centers(self) -> np.ndarray:
        """All cell centres as an ``(nz * nx, 2)`` array in row-major order."""
        zz, xx = np.meshgrid(self.z_centers, self.x_centers, indexing="ij")
        return np.stack([xx.ravel(), zz.ravel()], axis=1)

    def mask(self) -> np.ndarray:
        if self.water_mask is None:
            return np.zeros(self.shape, dtype=bool)
        return self.water_mask

    def cell_of(self, x: float, z: float):
        """(iz, ix) of the cell containing point (x, z); raises if outside."""
        ix = int(np.floor((x - self.origin_x) / self.dx))
        iz = int(np.floor((z - self.origin_z) / self.dz))
        if not (0 <= ix < self.nx and 0 <= iz < self.nz):
            raise ValueError(f"point ({x}, {z}) lies outside the model")
        return iz, ix

    def with_velocities(self, velocities) -> "VelocityModel":
        return replace(self, velocities=np.asarray(velocities, dtype=float))

    def same_grid(self, other) -> bool:
        return (self.nx, self.nz, self.dx, self.dz, self.origin_x, self.origin_z) == (
            other.nx, other.nz, other.dx, other.dz, other.origin_x, other.origin_z)


@dataclass(frozen=True, eq=False)
class AcquisitionGeometry:
    """Shot positions and, per shot, the receiver positions (metres)."""

    shots: np.ndarray
    receivers: Sequence[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        shots = np.array(self.shots, dtype=float).reshape(-1, 2)
        if len(self.receivers) != len(shots):
            raise ValueError(f"{len(shots)} shots but {len(self.receivers)} receiver lists")
        rcvs = []
        for i, r in enumerate(self.receivers):
            r = np.array(r, dtype=float).reshape(-1, 2)
            if len(r) == 0:
                raise ValueError(f"shot {i} has no receivers")
            if not np.all(np.isfinite(r)) or np.any(r[:, 1] <= 0):
                raise ValueError(f"shot {i}: receiver coordinates must be finite with depth > 0")
            r.flags.writeable = False
            rcvs.append(r)
        if not np.all(np.isfinite(shots)) or np.any(shots[:, 1] <= 0):
            raise ValueError("shot coordinates must be finite with depth > 0")
        shots.flags.writeable = False
        object.__setattr__(self, "shots", shots)
        object.__setattr__(self, "receivers", tuple(rcvs))

    @property
    def n_shots(self) -> int:
        return len(self.shots)

    def receiver_counts(self):
        return [len(r) for r in self.receivers]

    def subset(self, shot_indices) -> "AcquisitionGeometry":
        idx = list(shot_indices)
        return AcquisitionGeometry(self.shots[idx], [self.receivers[i] for i in idx])

    @classmethod
    def streamer(cls, shot_x, offsets, source_depth=10.0, receiver_depth=10.0):
        """Marine-style layout: every shot tows the same receiver offsets."""
        shot_x = np.asarray(shot_x, dtype=float)
        offsets = np.asarray(offsets, dtype=float)
        shots = np.stack([shot_x, np.full_like(shot_x, source_depth)], axis=1)
        rcvs = [np.stack([sx + offsets, np.full_like(offsets, receiver_depth)], axis=1) for sx in shot_x]
        return cls(shots, rcvs)

    @classmethod
    def fixed_spread(cls, shot_x, receiver_x, source_depth=10.0, receiver_depth=10.0):
        """Every shot records on one fixed receiver line."""
        shot_x = np.asarray(shot_x, dtype=float)
        receiver_x = np.asarray(receiver_x, dtype=float)
        shots = np.stack([shot_x, np.full_like(shot_x, source_depth)], axis=1)
        line = np.stack([receiver_x, np.full_like(receiver_x, receiver_depth)], axis=1)
        return cls(shots, [line] * len(shot_x))


def interpolate_at(model: VelocityModel, x, z) -> np.ndarray:
    """Bilinear interpolation between cell centres, clamped to the edge values."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    fx = (x - model.origin_x) / model.dx - 0.5
    fz = (z - model.origin_z) / model.dz - 0.5
    v = model.velocities

    def split(f, n):
        f = np.clip(f, 0.0, n - 1)
        i0 = np.minimum(np.floor(f).astype(int), max(n - 2, 0))
        return i0, np.minimum(i0 + 1, n - 1), f - i0

    ix0, ix1, wx = split(fx, model.nx)
    iz0, iz1, wz = split(fz, model.nz)
    top = v[iz0, ix0] * (1 - wx) + v[iz0, ix1] * wx
    bottom = v[iz1, ix0] * (1 - wx) + v[iz1, ix1] * wx
    return top * (1 - wz) + bottom * wz


def bilinear_resample(model: VelocityModel, new_dx: float, new_dz: float) -> VelocityModel:
    """Resample onto a new spacing covering the same extent.

    The water mask, when present, is carried over by nearest cell.
    """
    if not (new_dx > 0 and new_dz > 0):
        raise ValueError(f"spacing must be positive, got ({new_dx}, {new_dz})")
    if new_dx == model.dx and new_dz == model.dz:
        return model
    nx = max(1, int(round(model.nx * model.dx / new_dx)))
    nz = max(1, int(round(model.nz * model.dz / new_dz)))
    xc = model.origin_x + (np.arange(nx) + 0.5) * new_dx
    zc = model.origin_z + (np.arange(nz) + 0.5) * new_dz
    zz, xx = np.meshgrid(zc, xc, indexing="ij")
    v = interpolate_at(model, xx, zz)
    mask = None
    if model.water_mask is not None:
        ix = np.clip(np.floor((xc - model.origin_x) / model.dx).astype(int), 0, model.nx - 1)
        iz = np.clip(np.floor((zc - model.origin_z) / model.dz).astype(int), 0, model.nz - 1)
        mask = model.water_mask[np.ix_(iz, ix)]
    return VelocityModel(nx, nz, new_dx, new_dz, v, model.origin_x, model.origin_z, mask)


def water_mask_from_bathymetry(model: VelocityModel, seafloor_depth) -> VelocityModel:
    """Mask every cell whose centre lies strictly above the column's seafloor."""
    depth = np.asarray(seafloor_depth, dtype=float).ravel()
    if depth.size != model.nx:
        raise ValueError(f"seafloor profile has {depth.size} entries, expected nx={model.nx}")
    if not np.all(np.isfinite(depth)) or np.any(depth < 0):
        raise ValueError("seafloor depths must be finite and non-negative")
    mask = model.z_centers[:, None] < depth[None, :]
    return replace(model, water_mask=mask)
