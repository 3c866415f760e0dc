"""Synthetic data with known answers.

Time-domain traces use a Gaussian wavelet, whose Laplace transform is the
closed-form factor exp(s^2 sigma^2 / 2) times the impulse response, so every
synthetic has an exact oracle. Born data in the Laplace domain come straight
from the sensitivity kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .data import LaplaceField, ShotGather, SurveyDataset
from .errors import DomainError
from .geometry import AcquisitionGeometry, VelocityModel
from .greens import FOUR_PI, field_s_derivative, ray_pair
from .laplace import TransformSpec
from .sensitivity import EIGHT_PI2, born_kernel_s_derivative, path_terms


@dataclass(frozen=True)
class Scatterer:
    """Point velocity perturbation. ``volume`` turns the per-(m/s) kernel into a cell response."""

    x: float
    z: float
    delta_v: float
    volume: float = 1.0

    def __post_init__(self):
        if not self.z > 0:
            raise DomainError(f"scatterer depth must be positive, got {self.z}")
        if not self.volume > 0:
            raise DomainError("scatterer volume must be positive")

    @classmethod
    def at_cell(cls, model: VelocityModel, iz: int, ix: int, delta_v: float) -> "Scatterer":
        """A scatterer filling one model cell."""
        if not (0 <= iz < model.nz and 0 <= ix < model.nx):
            raise DomainError(f"cell ({iz}, {ix}) outside a {model.nz}x{model.nx} model")
        return cls(float(model.x_centers[ix]), float(model.z_centers[iz]), delta_v, model.cell_volume)


def gaussian_factor(s, sigma):
    """Laplace transform of a unit-area Gaussian centred on t = 0."""
    return np.exp(0.5 * (np.asarray(s) * sigma) ** 2)


def exp_trace(a: float, nt: int, dt: float) -> np.ndarray:
    """exp(-a t) on the sampling grid; its gained transform is n! / (s + a)^(n + 1)."""
    if not a > 0:
        raise DomainError("decay rate must be positive")
    return np.exp(-a * np.arange(nt) * dt)


def exp_trace_oracle(a: float, s: float, n: int) -> float:
    return math.factorial(n) / (s + a) ** (n + 1)


def _check_inside(model: Optional[VelocityModel], sc: Scatterer):
    if model is None:
        return
    x0, z0 = model.origin_x, model.origin_z
    if not (x0 <= sc.x <= x0 + model.nx * model.dx and z0 <= sc.z <= z0 + model.nz * model.dz):
        raise DomainError(f"scatterer at ({sc.x}, {sc.z}) lies outside the model")


def _gauss(t, sigma):
    return np.exp(-0.5 * (t / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))


def _gauss_dd(t, sigma):
    # second time derivative of the unit-area Gaussian
    return (t * t / sigma ** 4 - 1 / sigma ** 2) * _gauss(t, sigma)


def synth_time_traces(geometry: AcquisitionGeometry, c0: float, wavelet_width: float, nt: int, dt: float,
                      scatterers: Sequence[Scatterer] = (), f_true: float = 1.0, model: VelocityModel = None,
                      noise_std: float = 0.0, seed: int = 0, description: str = "") -> SurveyDataset:
    """Gaussian-wavelet traces of the half-space response, optionally with Born scatterers.

    A scatterer's time-domain response is the second time derivative of the
    wavelet delayed along each of the four mirrored paths, the time-domain
    image of the s^2 virtual source. Samples are rounded to f32 so the
    dataset survives an SRV round trip unchanged.
    """
    if not (c0 > 0 and wavelet_width > 0 and dt > 0 and nt > 1):
        raise DomainError("need c0, wavelet_width, dt > 0 and nt > 1")
    for sc in scatterers:
        _check_inside(model, sc)
    T = (nt - 1) * dt
    latest = T - 5 * wavelet_width
    t = np.arange(nt) * dt
    rng = np.random.default_rng(seed)
    gathers = []
    for i in range(geometry.n_shots):
        src, rcv = geometry.shots[i], geometry.receivers[i]
        rp = ray_pair(src, rcv, c0)
        arrivals = [rp.t2]
        traces = f_true / FOUR_PI * (_gauss(t - rp.t1[:, None], wavelet_width) / rp.r1[:, None]
                                     - _gauss(t - rp.t2[:, None], wavelet_width) / rp.r2[:, None])
        for sc in scatterers:
            pt = path_terms(src, np.array([sc.x, sc.z]), rcv, c0)
            arrivals.append(pt.tau.max(axis=0))
            amp = f_true * sc.delta_v * sc.volume / (EIGHT_PI2 * c0 ** 3)
            for tau, rho in zip(pt.tau, pt.rho):
                traces = traces + amp * _gauss_dd(t - tau[:, None], wavelet_width) / rho[:, None]
        late = max(float(np.max(a)) for a in arrivals)
        if late > latest:
            raise DomainError(f"shot {i}: arrival at {late:.3f} s is too close to the record end "
                              f"({T:.3f} s, wavelet width {wavelet_width} s)")
        if noise_std > 0:
            traces = traces + rng.normal(0.0, noise_std, traces.shape)
        gathers.append(ShotGather(i, dt, traces.astype(np.float32).astype(np.float64)))
    return SurveyDataset(geometry, gathers, description)


def synth_born_observed(geometry: AcquisitionGeometry, c0: float, scatterers: Sequence[Scatterer],
                        f_true: float = 1.0, spec: TransformSpec = TransformSpec(),
                        model: VelocityModel = None) -> LaplaceField:
    """Background field plus the linear Born response of each scatterer, for every (s, n)."""
    if not f_true > 0:
        raise DomainError("source amplitude must be positive")
    for sc in scatterers:
        _check_inside(model, sc)
    S, N = spec.damping_constants, spec.gain_powers
    blocks = []
    for i in range(geometry.n_shots):
        src, rcv = geometry.shots[i], geometry.receivers[i]
        b = np.empty((len(rcv), len(S), len(N)))
        for a, s in enumerate(S):
            for k, n in enumerate(N):
                v = field_s_derivative(f_true, src, rcv, c0, s, n)
                for sc in scatterers:
                    v = v + born_kernel_s_derivative(f_true, src, np.array([sc.x, sc.z]), rcv, c0, s, n) \
                        * (sc.delta_v * sc.volume)
                b[:, a, k] = v
        blocks.append(b)
    return LaplaceField(S, N, blocks, provenance="observed")
