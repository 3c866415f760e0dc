"""Binary survey (SRV) and grid (GRD) files, plus CSV / PGM grid exports.

Both binary formats are little-endian throughout.

SRV: b"LSRV", u32 version=1, u32 shot_count, u32 nt, f64 dt,
     u32 description_len, UTF-8 description, then per shot:
     f64 shot_x, f64 shot_z, u32 receiver_count,
     receiver_count x (f64 rx, f64 rz),
     receiver_count x nt f32 samples (receiver-major).

GRD: b"LGRD", u32 version=1, u32 nx, u32 nz, f64 dx, f64 dz,
     f64 origin_x, f64 origin_z, u8 has_mask, nx*nz f64 values
     (row-major, shallowest row first), optional nx*nz u8 mask.
"""

from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np

from .data import ShotGather, SurveyDataset
from .errors import CorruptionError, DataError, FormatError
from .geometry import AcquisitionGeometry, VelocityModel

SRV_MAGIC = b"LSRV"
GRD_MAGIC = b"LGRD"
VERSION = 1


class _Reader:
    def __init__(self, buf: bytes, what: str):
        self.buf = buf
        self.pos = 0
        self.what = what

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CorruptionError(f"truncated {self.what}: wanted {n} bytes at offset {self.pos}, "
                                  f"file has {len(self.buf)}")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack("<" + fmt, self.take(struct.calcsize("<" + fmt)))

    def array(self, dtype: str, count: int) -> np.ndarray:
        dt = np.dtype(dtype).newbyteorder("<")
        return np.frombuffer(self.take(dt.itemsize * count), dtype=dt, count=count)


def _read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc


def _write_bytes(path, payload: bytes):
    # OSError propagates: the caller decides how an unwritable path is reported
    Path(path).write_bytes(payload)


def write_survey(dataset: SurveyDataset, path):
    """Samples are stored as f32, so round trips are exact for f32-representable data."""
    out = io.BytesIO()
    desc = dataset.description.encode("utf-8")
    out.write(SRV_MAGIC)
    out.write(struct.pack("<IIIdI", VERSION, dataset.geometry.n_shots, dataset.nt, dataset.dt, len(desc)))
    out.write(desc)
    for (sx, sz), rcv, g in zip(dataset.geometry.shots, dataset.geometry.receivers, dataset.gathers):
        out.write(struct.pack("<ddI", sx, sz, len(rcv)))
        out.write(np.ascontiguousarray(rcv, dtype="<f8").tobytes())
        out.write(np.ascontiguousarray(g.traces, dtype="<f4").tobytes())
    _write_bytes(path, out.getvalue())


def read_survey(path) -> SurveyDataset:
    r = _Reader(_read_bytes(path), "survey")
    if len(r.buf) < 4 or r.take(4) != SRV_MAGIC:
        raise FormatError(f"{path}: not an SRV file (bad magic)")
    version, n_shots, nt, dt, desc_len = r.unpack("IIIdI")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported SRV version {version}")
    try:
        description = r.take(desc_len).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: description is not UTF-8") from exc
    shots, receivers, gathers = [], [], []
    for i in range(n_shots):
        sx, sz, n_rcv = r.unpack("ddI")
        rcv = r.array("f8", 2 * n_rcv).reshape(n_rcv, 2)
        samples = r.array("f4", n_rcv * nt).reshape(n_rcv, nt)
        bad = np.argwhere(~np.isfinite(samples))
        if len(bad):
            j, k = bad[0]
            raise DataError(f"{path}: non-finite sample at shot {i}, receiver {j}, sample {k}")
        shots.append((sx, sz))
        receivers.append(rcv)
        gathers.append(ShotGather(i, dt, samples))
    if r.pos != len(r.buf):
        raise CorruptionError(f"{path}: {len(r.buf) - r.pos} trailing bytes after the last shot")
    return SurveyDataset(AcquisitionGeometry(np.array(shots).reshape(-1, 2), receivers), gathers, description)


def write_grid(model: VelocityModel, path):
    out = io.BytesIO()
    out.write(GRD_MAGIC)
    has_mask = model.water_mask is not None
    out.write(struct.pack("<IIIddddB", VERSION, model.nx, model.nz, model.dx, model.dz,
                          model.origin_x, model.origin_z, int(has_mask)))
    out.write(np.ascontiguousarray(model.velocities, dtype="<f8").tobytes())
    if has_mask:
        out.write(np.ascontiguousarray(model.water_mask, dtype=np.uint8).tobytes())
    _write_bytes(path, out.getvalue())


def read_grid(path) -> VelocityModel:
    r = _Reader(_read_bytes(path), "grid")
    if len(r.buf) < 4 or r.take(4) != GRD_MAGIC:
        raise FormatError(f"{path}: not a GRD file (bad magic)")
    version, nx, nz, dx, dz, ox, oz, has_mask = r.unpack("IIIddddB")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported GRD version {version}")
    values = r.array("f8", nx * nz).reshape(nz, nx)
    mask = r.array("u1", nx * nz).reshape(nz, nx).astype(bool) if has_mask else None
    if r.pos != len(r.buf):
        raise CorruptionError(f"{path}: {len(r.buf) - r.pos} trailing bytes")
    return VelocityModel(nx, nz, dx, dz, values.copy(), ox, oz, mask)


def _grid_values(grid, which=None) -> np.ndarray:
    if which is not None:
        return np.asarray(getattr(grid, which), dtype=float)
    if isinstance(grid, VelocityModel):
        return grid.velocities
    if getattr(grid, "direction", None) is not None:
        return grid.direction
    return grid.values


def format_csv(values) -> str:
    values = np.atleast_2d(np.asarray(values, dtype=float))
    return "".join(",".join(f"{v:.17g}" for v in row) + "\n" for row in values)


def export_grid(grid, path, format: str = "csv", which: str = None):
    """Write a model or gradient grid as CSV (17 significant digits) or 16-bit PGM.

    For a gradient field the preconditioned direction is exported when present,
    otherwise the raw gradient; ``which`` picks an attribute explicitly.
    """
    values = _grid_values(grid, which)
    if format == "csv":
        Path(path).write_text(format_csv(values))
    elif format == "pgm":
        Path(path).write_bytes(pgm_bytes(values))
    else:
        raise ValueError(f"unknown export format {format!r}")


def pgm_pixels(values) -> np.ndarray:
    """Affine map min -> 0, max -> 65535 with round-half-up; a constant grid maps to 32768."""
    v = np.atleast_2d(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ValueError("cannot export an empty grid")
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        return np.full(v.shape, 32768, dtype=np.uint16)
    scaled = (v - lo) / (hi - lo) * 65535.0
    return np.clip(np.floor(scaled + 0.5), 0, 65535).astype(np.uint16)


def pgm_bytes(values) -> bytes:
    px = pgm_pixels(values)
    header = f"P5\n{px.shape[1]} {px.shape[0]}\n65535\n".encode("ascii")
    # PGM stores 16-bit samples most significant byte first
    return header + px.astype(">u2").tobytes()


def write_laplace_csv(field, geometry, path):
    """Long-format CSV: shot, receiver, s, n, value."""
    lines = ["shot,receiver,s,n,value\n"]
    for i, block in enumerate(field.values):
        for j in range(block.shape[0]):
            for a, s in enumerate(field.damping_constants):
                for k, n in enumerate(field.gain_powers):
                    lines.append(f"{i},{j},{s:.17g},{n},{block[j, a, k]:.17g}\n")
    Path(path).write_text("".join(lines))
