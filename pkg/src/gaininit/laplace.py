"""Laplace transform of sampled traces, power-of-time gain and its stability limit.

Multiplying a trace by t^n before damping is the same as taking the n-th
derivative of its transform with respect to the damping constant, up to the
sign (-1)^n. The quadrature runs on the native sampling grid; the integral is
truncated at the last sample, which is harmless exactly when the damped gain
envelope has decayed there (see ``stability_check``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Tuple

import numpy as np

from .data import LaplaceField, SurveyDataset
from .errors import DataError, DomainError, StabilityError


@dataclass(frozen=True)
class TransformSpec:
    damping_constants: Tuple[float, ...] = tuple(float(s) for s in range(2, 13))
    gain_powers: Tuple[int, ...] = (0, 1, 2, 3, 4)
    amplitude_floor: float = 1e-28
    stability_threshold: float = 1e-5

    def __post_init__(self):
        s = tuple(float(v) for v in self.damping_constants)
        n = tuple(int(v) for v in self.gain_powers)
        if not s or not n:
            raise ValueError("need at least one damping constant and one gain power")
        if any(v <= 0 for v in s) or len(set(s)) != len(s):
            raise ValueError("damping constants must be positive and distinct")
        if any(v < 0 for v in n) or len(set(n)) != len(n) or any(
                float(a) != float(b) for a, b in zip(n, self.gain_powers)):
            raise ValueError("gain powers must be distinct non-negative integers")
        for name in ("amplitude_floor", "stability_threshold"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        object.__setattr__(self, "damping_constants", s)
        object.__setattr__(self, "gain_powers", n)


@dataclass(frozen=True)
class StabilityResult:
    passed: bool
    ratio: float
    n: int = 0
    s: float = 0.0


@lru_cache(maxsize=64)
def _weights(nt: int, dt: float) -> np.ndarray:
    """Composite Simpson weights; a 3/8 panel closes an odd interval count."""
    w = np.zeros(nt)
    intervals = nt - 1
    if intervals == 0:
        return w
    if intervals == 1:
        w[:] = dt / 2
        return w
    simpson_end = intervals if intervals % 2 == 0 else intervals - 3
    if simpson_end > 0:
        w[0:simpson_end + 1:2] += 2 * dt / 3
        w[1:simpson_end:2] += 4 * dt / 3
        w[0] -= dt / 3
        w[simpson_end] -= dt / 3
    if simpson_end < intervals:
        k = simpson_end
        w[k:k + 4] += 3 * dt / 8 * np.array([1.0, 3.0, 3.0, 1.0])
    w.flags.writeable = False
    return w


def _check_samples(trace) -> np.ndarray:
    trace = np.asarray(trace, dtype=float)
    if not np.all(np.isfinite(trace)):
        bad = np.argwhere(~np.isfinite(trace))[0]
        raise DataError(f"non-finite sample at index {tuple(int(i) for i in bad)}")
    return trace


def _kernel(nt, dt, s, n=0, r=0.0):
    t = np.arange(nt) * dt
    k = _weights(nt, float(dt)) * np.exp(-s * t)
    if r:
        k = k * np.exp(r * t)
    if n:
        k = k * t ** n
    return k


def laplace_transform_trace(trace, dt: float, s: float) -> float:
    """Integral of d(t) exp(-s t) over the record."""
    if not dt > 0 or not s > 0:
        raise DomainError("dt and s must be positive")
    trace = _check_samples(trace)
    return float(np.sum(trace * _kernel(trace.shape[-1], dt, s), axis=-1))


def stability_check(n: int, s: float, T: float, threshold: float = 1e-5) -> StabilityResult:
    """Envelope t^n exp(-s t) at the record end relative to its peak on (0, T]."""
    if n < 0 or not s > 0 or not T > 0 or not 0 < threshold < 1:
        raise DomainError("need n >= 0, s > 0, T > 0 and threshold in (0, 1)")
    if n == 0:
        log_ratio = -s * T
    else:
        t_peak = n / s
        if t_peak >= T:
            return StabilityResult(False, 1.0, n, s)
        log_ratio = n * math.log(T / t_peak) - s * (T - t_peak)
    ratio = math.exp(log_ratio)
    return StabilityResult(ratio <= threshold, ratio, n, s)


def _require_stable(n, s, nt, dt, threshold, force):
    if force:
        return
    res = stability_check(n, s, (nt - 1) * dt, threshold)
    if not res.passed:
        raise StabilityError(f"gain power {n} at s={s} is unstable for a {(nt - 1) * dt:g} s record "
                             f"(end/peak ratio {res.ratio:.3g} > {threshold:g})", [(n, s, res.ratio)])


def gained_transform(trace, dt: float, s: float, n: int, threshold: float = 1e-5, force: bool = False) -> float:
    """Transform of the t^n-gained trace."""
    if n < 0 or int(n) != n:
        raise DomainError("gain power must be a non-negative integer")
    if not dt > 0 or not s > 0:
        raise DomainError("dt and s must be positive")
    trace = _check_samples(trace)
    nt = trace.shape[-1]
    if nt > 1:
        _require_stable(n, s, nt, dt, threshold, force)
    return float(np.sum(trace * _kernel(nt, dt, s, int(n)), axis=-1))


def observed_derivative(trace, dt: float, s: float, n: int, threshold: float = 1e-5, force: bool = False) -> float:
    """n-th s-derivative of the trace's transform, via the gain identity."""
    return (-1) ** int(n) * gained_transform(trace, dt, s, n, threshold, force)


def exponential_gain_transform(trace, dt: float, s: float, r: float) -> float:
    """Transform of the exp(r t)-gained trace; equals the plain transform at s - r."""
    if not 0 <= r < s:
        raise DomainError(f"exponential gain r={r} must satisfy 0 <= r < s={s}")
    if not dt > 0:
        raise DomainError("dt must be positive")
    trace = _check_samples(trace)
    return float(np.sum(trace * _kernel(trace.shape[-1], dt, s, 0, r), axis=-1))


def stability_table(spec: TransformSpec, T: float) -> List[StabilityResult]:
    return [stability_check(n, s, T, spec.stability_threshold)
            for n in spec.gain_powers for s in spec.damping_constants]


def transform_survey(dataset: SurveyDataset, spec: TransformSpec, force: bool = False) -> LaplaceField:
    """Observed s-derivatives for every (shot, receiver, s, n)."""
    T = dataset.record_length
    failures = [(r.n, r.s, r.ratio) for r in stability_table(spec, T) if not r.passed]
    if failures and not force:
        listing = ", ".join(f"(n={n}, s={s:g}, ratio={q:.3g})" for n, s, q in failures)
        raise StabilityError(f"unstable gain/damping pairs for a {T:g} s record: {listing}", failures)
    nt, dt = dataset.nt, dataset.dt
    kernels = np.stack([[(-1) ** n * _kernel(nt, dt, s, n) for n in spec.gain_powers]
                        for s in spec.damping_constants])  # (S, N, nt)
    blocks = []
    for g in dataset.gathers:
        b = np.empty((len(g.traces), len(spec.damping_constants), len(spec.gain_powers)))
        for a in range(len(spec.damping_constants)):
            for k in range(len(spec.gain_powers)):
                b[:, a, k] = np.sum(g.traces * kernels[a, k], axis=1)
        blocks.append(b)
    return LaplaceField(spec.damping_constants, spec.gain_powers, blocks, provenance="derivative",
                        extras={"record_length": T, "forced": bool(failures)})
