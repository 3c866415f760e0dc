"""Flat ``key = value`` configuration files with ``[section]`` headers.

``[pipeline]`` (alias ``[transform]``) holds PipelineConfig fields by name;
``[synthetic]`` describes a synthetic survey. Lists are comma separated,
scatterers are ``x:z:delta_v`` triples separated by semicolons.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .errors import ConfigError, FormatError
from .geometry import AcquisitionGeometry
from .pipeline import PipelineConfig


def _floats(text: str) -> Tuple[float, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    return tuple(float(p) for p in parts)


def _ints(text: str) -> Tuple[int, ...]:
    out = []
    for p in (p.strip() for p in text.split(",")):
        if not p:
            continue
        v = float(p)
        if v != int(v):
            raise ValueError(f"{p} is not an integer")
        out.append(int(v))
    return tuple(out)


def _optional_float(text: str) -> Optional[float]:
    return None if text.strip().lower() in ("", "none", "estimate") else float(text)


_PIPELINE_PARSERS = {
    "background_velocity": float, "damping_constants": _floats, "gain_powers": _ints,
    "shot_decimation": int, "gradient_grid": float, "output_grid": float, "velocity_bounds": _floats,
    "step_fraction": float, "lambda_rel": float, "hessian_power": float, "crossing_guard": float,
    "weight_norm": str.strip, "amplitude_floor": float, "stability_threshold": float,
    "water_depth": _floats, "water_velocity": float, "grid_origin_x": _optional_float,
    "grid_width": _optional_float, "grid_depth": float, "source_amplitude": _optional_float,
    "step_shrink": float, "max_step_trials": int,
}


@dataclass(frozen=True)
class SyntheticConfig:
    layout: str = "streamer"  # or "fixed"
    shot_first: float = 0.0
    shot_spacing: float = 250.0
    shot_count: int = 16
    offset_min: float = 150.0  # streamer: offsets from the shot; fixed: receiver x range
    offset_max: float = 4000.0
    receiver_count: int = 32
    source_depth: float = 10.0
    receiver_depth: float = 10.0
    nt: int = 12001
    dt: float = 1e-3
    wavelet_width: float = 0.004
    scatterers: Tuple[Tuple[float, float, float], ...] = ()
    scatterer_size: Optional[float] = None  # cube edge; defaults to the gradient grid spacing
    source_amplitude: float = 1.0
    noise_std: float = 0.0
    seed: int = 0
    description: str = "synthetic"

    def __post_init__(self):
        if self.layout not in ("streamer", "fixed"):
            raise ConfigError(f"layout must be 'streamer' or 'fixed', got {self.layout!r}")
        if self.shot_count < 1 or self.receiver_count < 1:
            raise ConfigError("shot_count and receiver_count must be >= 1")
        if not (self.nt > 1 and self.dt > 0 and self.wavelet_width > 0):
            raise ConfigError("need nt > 1, dt > 0 and wavelet_width > 0")

    def geometry(self) -> AcquisitionGeometry:
        shots = self.shot_first + self.shot_spacing * np.arange(self.shot_count)
        rx = np.linspace(self.offset_min, self.offset_max, self.receiver_count)
        if self.layout == "streamer":
            return AcquisitionGeometry.streamer(shots, rx, self.source_depth, self.receiver_depth)
        return AcquisitionGeometry.fixed_spread(shots, rx, self.source_depth, self.receiver_depth)


def _scatterers(text: str):
    out = []
    for item in (p.strip() for p in text.split(";")):
        if not item:
            continue
        x, z, dv = (float(v) for v in item.split(":"))
        out.append((x, z, dv))
    return tuple(out)


_SYNTHETIC_PARSERS = {
    "layout": str.strip, "shot_first": float, "shot_spacing": float, "shot_count": int,
    "offset_min": float, "offset_max": float, "receiver_count": int, "source_depth": float,
    "receiver_depth": float, "nt": int, "dt": float, "wavelet_width": float, "scatterers": _scatterers,
    "scatterer_size": _optional_float, "source_amplitude": float, "noise_std": float, "seed": int,
    "description": str,
}


def _parse_section(section, parsers, name):
    values = {}
    for key, raw in section.items():
        if key not in parsers:
            raise ConfigError(f"[{name}] unknown key {key!r}")
        try:
            values[key] = parsers[key](raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"[{name}] {key} = {raw!r}: {exc}") from exc
    return values


def parse_config(text: str):
    """(PipelineConfig, SyntheticConfig or None) from config text."""
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__",
                                   inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    unknown = set(cp.sections()) - {"pipeline", "transform", "synthetic"}
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    values = {}
    for name in ("pipeline", "transform"):
        if cp.has_section(name):
            values.update(_parse_section(cp[name], _PIPELINE_PARSERS, name))
    try:
        pipeline = PipelineConfig(**values)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    synthetic = None
    if cp.has_section("synthetic"):
        synthetic = SyntheticConfig(**_parse_section(cp["synthetic"], _SYNTHETIC_PARSERS, "synthetic"))
    return pipeline, synthetic


def load_config(path):
    if path is None:
        return PipelineConfig(), None
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def format_value(v) -> str:
    if isinstance(v, (tuple, list)):
        return ", ".join(format_value(x) for x in v)
    if isinstance(v, float):
        return f"{v:g}"
    return str(v)


def config_lines(config) -> list:
    """``config.<field>: value`` lines for a manifest."""
    return [f"config.{f.name}: {format_value(getattr(config, f.name))}" for f in fields(config)]
