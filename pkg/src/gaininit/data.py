"""Containers for time-domain surveys and Laplace-domain fields."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DataError
from .geometry import AcquisitionGeometry


@dataclass(frozen=True, eq=False)
class ShotGather:
    shot_index: int
    dt: float
    traces: np.ndarray  # (n_receivers, nt)

    def __post_init__(self):
        tr = np.array(self.traces, dtype=np.float64, ndmin=2)
        if tr.shape[1] < 1:
            raise ValueError("a gather needs at least one sample per trace")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        bad = np.argwhere(~np.isfinite(tr))
        if len(bad):
            j, k = bad[0]
            raise DataError(f"non-finite sample: shot {self.shot_index}, receiver {j}, sample {k}")
        tr.flags.writeable = False
        object.__setattr__(self, "traces", tr)

    @property
    def nt(self) -> int:
        return self.traces.shape[1]

    @property
    def record_length(self) -> float:
        return (self.nt - 1) * self.dt


@dataclass(frozen=True, eq=False)
class SurveyDataset:
    geometry: AcquisitionGeometry
    gathers: Sequence[ShotGather]
    description: str = ""

    def __post_init__(self):
        gathers = tuple(self.gathers)
        if len(gathers) != self.geometry.n_shots:
            raise ValueError(f"{len(gathers)} gathers for {self.geometry.n_shots} shots")
        if gathers:
            dt, nt = gathers[0].dt, gathers[0].nt
            for i, g in enumerate(gathers):
                if g.dt != dt or g.nt != nt:
                    raise ValueError(f"gather {i} sampling differs from gather 0")
                if len(g.traces) != len(self.geometry.receivers[i]):
                    raise ValueError(f"gather {i} has {len(g.traces)} traces for "
                                     f"{len(self.geometry.receivers[i])} receivers")
        object.__setattr__(self, "gathers", gathers)

    @property
    def dt(self) -> float:
        return self.gathers[0].dt

    @property
    def nt(self) -> int:
        return self.gathers[0].nt

    @property
    def record_length(self) -> float:
        return self.gathers[0].record_length

    def decimate(self, every: int) -> "SurveyDataset":
        """Keep every ``every``-th shot, starting with the first."""
        if every < 1:
            raise ValueError("decimation must be >= 1")
        keep = list(range(0, self.geometry.n_shots, every))
        gathers = [ShotGather(k, self.gathers[i].dt, self.gathers[i].traces)
                   for k, i in enumerate(keep)]
        return SurveyDataset(self.geometry.subset(keep), gathers, self.description)


PROVENANCES = ("observed", "modeled", "derivative")


@dataclass(frozen=True, eq=False)
class LaplaceField:
    """Real Laplace-domain values per (shot, receiver, damping constant, gain power).

    ``values[i]`` is the ``(n_receivers_i, n_s, n_n)`` block of shot ``i``;
    receiver counts may differ between shots.
    """

    damping_constants: Sequence[float]
    gain_powers: Sequence[int]
    values: Sequence[np.ndarray]
    provenance: str = "derivative"
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        s = tuple(float(v) for v in self.damping_constants)
        n = tuple(int(v) for v in self.gain_powers)
        if any(v <= 0 for v in s) or len(set(s)) != len(s):
            raise ValueError("damping constants must be positive and distinct")
        if any(v < 0 for v in n) or len(set(n)) != len(n) or any(
                float(a) != float(b) for a, b in zip(n, self.gain_powers)):
            raise ValueError("gain powers must be distinct non-negative integers")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        vals = []
        for i, v in enumerate(self.values):
            v = np.array(v, dtype=np.float64)
            if v.ndim != 3 or v.shape[1:] != (len(s), len(n)):
                raise ValueError(f"shot {i} block has shape {v.shape}, expected (R, {len(s)}, {len(n)})")
            v.flags.writeable = False
            vals.append(v)
        object.__setattr__(self, "damping_constants", s)
        object.__setattr__(self, "gain_powers", n)
        object.__setattr__(self, "values", tuple(vals))

    @property
    def n_shots(self) -> int:
        return len(self.values)

    def receiver_counts(self):
        return [len(v) for v in self.values]

    def index(self, s: float, n: int):
        try:
            return self.damping_constants.index(float(s)), self.gain_powers.index(int(n))
        except ValueError:
            raise KeyError(f"field holds no entry for s={s}, n={n}") from None

    def at(self, s: float, n: int):
        """Per-shot receiver arrays for one (s, n)."""
        a, b = self.index(s, n)
        return [v[:, a, b] for v in self.values]

    def value(self, shot: int, receiver: int, s: float, n: int) -> float:
        a, b = self.index(s, n)
        return float(self.values[shot][receiver, a, b])

    def dense(self) -> np.ndarray:
        """(shot, receiver, s, n) array, NaN-padded where a shot has fewer receivers."""
        rmax = max(self.receiver_counts(), default=0)
        out = np.full((self.n_shots, rmax, len(self.damping_constants), len(self.gain_powers)), np.nan)
        for i, v in enumerate(self.values):
            out[i, :len(v)] = v
        return out

    def matches(self, geometry: AcquisitionGeometry) -> bool:
        return self.receiver_counts() == geometry.receiver_counts()
