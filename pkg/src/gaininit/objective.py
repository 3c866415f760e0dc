"""Gained logarithmic objective, its gradient and a diagonal pseudo-Hessian.

All modelled quantities come from the analytic half-space Green's function
around one constant background velocity. Logarithms act on magnitudes; a data
pair whose modelled or observed value is below the amplitude floor, or whose
signs disagree, is skipped and counted rather than raised.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .data import LaplaceField
from .errors import DegenerateError
from .geometry import AcquisitionGeometry, VelocityModel
from .greens import cancellation_ratio, field_s_derivative, greens
from .sensitivity import kernel_derivatives, path_terms

# cells x receivers x 4 paths per block; bounds peak memory, fixed so results
# never depend on the worker count
_BLOCK_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class ResidualPolicy:
    """Guards for the logarithm. The floor is relative to max |observed| per (s, n)."""

    amplitude_floor: float = 1e-28
    sign_mismatch_policy: str = "skip-and-count"
    crossing_guard: float = 0.0

    def __post_init__(self):
        if not self.amplitude_floor > 0:
            raise ValueError("amplitude floor must be positive")
        if not 0 <= self.crossing_guard < 1:
            raise ValueError("crossing guard must lie in [0, 1)")
        if self.sign_mismatch_policy != "skip-and-count":
            raise ValueError(f"unsupported sign policy {self.sign_mismatch_policy!r}")

    def absolute_floor(self, observed_blocks) -> float:
        peak = max((float(np.max(np.abs(b))) for b in observed_blocks if len(b)), default=0.0)
        return self.amplitude_floor * peak


@dataclass
class SkipCounter:
    below_floor: int = 0
    sign_mismatch: int = 0
    near_crossing: int = 0

    @property
    def total(self) -> int:
        return self.below_floor + self.sign_mismatch + self.near_crossing

    def add(self, other: "SkipCounter"):
        self.below_floor += other.below_floor
        self.sign_mismatch += other.sign_mismatch
        self.near_crossing += other.near_crossing


@dataclass(frozen=True, eq=False)
class GradientField:
    """Per-cell gradient with optional pseudo-Hessian diagonal and update direction."""

    grid: VelocityModel
    values: np.ndarray
    hessian: Optional[np.ndarray] = None
    direction: Optional[np.ndarray] = None
    label: Optional[Tuple[float, int]] = None
    skipped: SkipCounter = field(default_factory=SkipCounter)

    def __post_init__(self):
        for name in ("values", "hessian", "direction"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=float).reshape(self.grid.shape)
            if not np.all(np.isfinite(arr)):
                raise DegenerateError(f"non-finite {name} in gradient field {self.label}")
            object.__setattr__(self, name, arr)
        if self.hessian is not None and np.any(self.hessian < 0):
            raise ValueError("pseudo-Hessian diagonal must be non-negative")

    # export_grid and the pipeline treat a gradient like a model grid
    @property
    def nx(self):
        return self.grid.nx

    @property
    def nz(self):
        return self.grid.nz


def log_residual(u, d, floor: float, counter: Optional[SkipCounter] = None):
    """ln(|u| / |d|), or None when the pair is inadmissible."""
    if abs(u) <= floor or abs(d) <= floor:
        if counter is not None:
            counter.below_floor += 1
        return None
    if (u > 0) != (d > 0):
        if counter is not None:
            counter.sign_mismatch += 1
        return None
    return math.log(abs(u) / abs(d))


def log_residuals(u, d, floor: float):
    """Vectorised ``log_residual``: (residuals, admissible mask, SkipCounter).

    Inadmissible entries carry a residual of exactly 0.
    """
    u = np.asarray(u, dtype=float)
    d = np.asarray(d, dtype=float)
    big = (np.abs(u) > floor) & (np.abs(d) > floor)
    same = np.sign(u) == np.sign(d)
    ok = big & same
    res = np.zeros(np.broadcast(u, d).shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        res[ok] = np.log(np.abs(u[ok]) / np.abs(d[ok]))
    return res, ok, SkipCounter(int(np.count_nonzero(~big)), int(np.count_nonzero(big & ~same)))


def estimate_source(observed: LaplaceField, geometry: AcquisitionGeometry, c: float, s: float,
                    policy: ResidualPolicy = ResidualPolicy()) -> np.ndarray:
    """Per-shot source amplitude from the ungained data: geometric mean of d / G.

    This is the closed-form minimiser of the n = 0 log objective in ln f.
    """
    d_all = observed.at(s, 0)
    g_all = [greens(geometry.shots[i], geometry.receivers[i], c, s) for i in range(geometry.n_shots)]
    floor_d = policy.absolute_floor(d_all)
    floor_g = policy.absolute_floor(g_all)
    out = np.empty(geometry.n_shots)
    for i, (d, g) in enumerate(zip(d_all, g_all)):
        ok = (np.abs(d) > floor_d) & (np.abs(g) > floor_g) & (np.sign(d) == np.sign(g))
        if not np.any(ok):
            raise DegenerateError(f"shot {i}: no admissible receivers for source estimation at s={s}")
        out[i] = math.exp(float(np.mean(np.log(d[ok] / g[ok]))))
    return out


def modeled_derivatives(geometry: AcquisitionGeometry, c: float, f_m: Dict[float, np.ndarray],
                        damping_constants: Sequence[float], gain_powers: Sequence[int]) -> LaplaceField:
    """Analytic s-derivatives of the modelled field for every (shot, receiver, s, n)."""
    blocks = []
    for i in range(geometry.n_shots):
        rcv = geometry.receivers[i]
        b = np.empty((len(rcv), len(damping_constants), len(gain_powers)))
        for a, s in enumerate(damping_constants):
            for k, n in enumerate(gain_powers):
                b[:, a, k] = field_s_derivative(f_m[s][i], geometry.shots[i], rcv, c, s, n)
        blocks.append(b)
    return LaplaceField(damping_constants, gain_powers, blocks, provenance="modeled")


def _guard_crossings(res, ok, skipped, src, rcv, c, s, n, guard):
    """Drop pairs whose gained background sits near its zero crossing."""
    if guard > 0 and n > 0:
        near = ok & (cancellation_ratio(src, rcv, c, s, n) < guard)
        ok &= ~near
        res[near] = 0.0
        skipped.near_crossing += int(np.count_nonzero(near))
    return res, ok, skipped


def objective(modeled: LaplaceField, observed: LaplaceField, s: float, n: int,
              policy: ResidualPolicy = ResidualPolicy(), counter: Optional[SkipCounter] = None,
              geometry: Optional[AcquisitionGeometry] = None, c: Optional[float] = None) -> float:
    """Half the summed squared log ratio over admissible pairs.

    A crossing guard in ``policy`` needs ``geometry`` and the background ``c``.
    """
    u_all, d_all = modeled.at(s, n), observed.at(s, n)
    if [len(u) for u in u_all] != [len(d) for d in d_all]:
        raise ValueError("modeled and observed fields cover different receivers")
    guarded = policy.crossing_guard > 0 and n > 0
    if guarded and (geometry is None or c is None):
        raise ValueError("the crossing guard needs the geometry and background velocity")
    floor = policy.absolute_floor(d_all)
    total, used = 0.0, 0
    for i, (u, d) in enumerate(zip(u_all, d_all)):
        res, ok, skipped = log_residuals(u, d, floor)
        if guarded:
            _guard_crossings(res, ok, skipped, geometry.shots[i], geometry.receivers[i], c, s, n,
                             policy.crossing_guard)
        total += 0.5 * float(np.sum(res * res))
        used += int(np.count_nonzero(ok))
        if counter is not None:
            counter.add(skipped)
    if used == 0:
        raise DegenerateError(f"every data pair was skipped at s={s}, n={n}")
    return total


def _shot_partials(i, observed, geometry, c, f_m, cells, volume, pairs, floors, guard=0.0):
    """Gradient and Hessian contributions of one shot for every (s, n) pair."""
    src = geometry.shots[i]
    rcv = geometry.receivers[i]
    by_s: Dict[float, List[int]] = {}
    for s, n in pairs:
        by_s.setdefault(s, []).append(n)
    out = {}
    prep = {}
    for s, orders in by_s.items():
        for n in orders:
            u = field_s_derivative(f_m[s][i], src, rcv, c, s, n)
            d = observed.at(s, n)[i]
            res, ok, skipped = _guard_crossings(*log_residuals(u, d, floors[(s, n)]), src, rcv, c, s, n, guard)
            inv_u = np.zeros_like(u)
            inv_u[ok] = 1.0 / u[ok]
            prep[(s, n)] = (res, inv_u, skipped)
            out[(s, n)] = [np.zeros(len(cells)), np.zeros(len(cells)), skipped]
    block = max(1, _BLOCK_ELEMENTS // (4 * len(rcv)))
    for start in range(0, len(cells), block):
        sl = slice(start, start + block)
        pt = path_terms(src[None, None, :], cells[sl, None, :], rcv[None, :, :], c)
        for s, orders in by_s.items():
            kernels = kernel_derivatives(pt, f_m[s][i] * volume, c, s, orders)
            for n in orders:
                res, inv_u, _ = prep[(s, n)]
                ratio = kernels[n] * inv_u
                out[(s, n)][0][sl] = np.sum(ratio * res, axis=1)
                out[(s, n)][1][sl] = np.sum(ratio * ratio, axis=1)
    return out


def assemble(observed: LaplaceField, geometry: AcquisitionGeometry, c: float,
             f_m: Dict[float, np.ndarray], grid: VelocityModel, pairs: Iterable[Tuple[float, int]],
             policy: ResidualPolicy = ResidualPolicy(), threads: int = 1) -> Dict[Tuple[float, int], GradientField]:
    """Gradient and pseudo-Hessian for several (s, n) pairs in one sweep over shots.

    Shots run on a worker pool; their partial grids are summed in shot order,
    so the result is bit-identical for any ``threads``.
    """
    if not observed.matches(geometry):
        raise ValueError("observed field does not match the acquisition geometry")
    pairs = [(float(s), int(n)) for s, n in pairs]
    floors = {p: policy.absolute_floor(observed.at(*p)) for p in pairs}
    cells = grid.cell_centers()
    volume = grid.cell_volume

    def work(i):
        return _shot_partials(i, observed, geometry, c, f_m, cells, volume, pairs, floors, policy.crossing_guard)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(work, range(geometry.n_shots)))
    else:
        partials = [work(i) for i in range(geometry.n_shots)]

    result = {}
    for p in pairs:
        g = np.zeros(len(cells))
        h = np.zeros(len(cells))
        skipped = SkipCounter()
        for part in partials:
            g += part[p][0]
            h += part[p][1]
            skipped.add(part[p][2])
        result[p] = GradientField(grid, g, h, label=p, skipped=skipped)
    return result


def gradient(observed: LaplaceField, geometry: AcquisitionGeometry, c: float, f_m, grid: VelocityModel,
             s: float, n: int, policy: ResidualPolicy = ResidualPolicy(), threads: int = 1) -> GradientField:
    """dE(s, n)/d(cell velocity) on ``grid``; the pseudo-Hessian rides along."""
    return assemble(observed, geometry, c, {float(s): np.asarray(f_m)}, grid, [(s, n)], policy, threads)[(float(s), int(n))]


def pseudo_hessian_diag(observed: LaplaceField, geometry: AcquisitionGeometry, c: float, f_m,
                        grid: VelocityModel, s: float, n: int,
                        policy: ResidualPolicy = ResidualPolicy(), threads: int = 1) -> np.ndarray:
    """Gauss-Newton diagonal: summed squared kernel-to-field ratios over admissible pairs."""
    return gradient(observed, geometry, c, f_m, grid, s, n, policy, threads).hessian


def precondition(grad: GradientField, hessian_diag=None, lambda_rel: float = 1e-3,
                 hessian_power: float = 1.0) -> GradientField:
    """Descent direction -g / (H^p + lambda_rel * max H^p); water cells forced to zero.

    p = 1 is the plain Gauss-Newton scaling; p = 0.5 divides by the kernel's
    root-mean-square sensitivity instead, which over-corrects deep cells less.
    """
    if not lambda_rel > 0:
        raise ValueError("lambda_rel must be positive")
    if not 0 < hessian_power <= 1:
        raise ValueError("hessian_power must lie in (0, 1]")
    h = grad.hessian if hessian_diag is None else np.asarray(hessian_diag, dtype=float).reshape(grad.grid.shape)
    if h is None:
        raise ValueError("no Hessian diagonal supplied")
    mask = grad.grid.mask()
    scale = h ** hessian_power
    live = scale[~mask]
    hmax = float(live.max()) if live.size else 0.0
    if hmax <= 0:
        raise DegenerateError(f"pseudo-Hessian diagonal is identically zero for {grad.label}")
    direction = -grad.values / (scale + lambda_rel * hmax)
    direction[mask] = 0.0
    return GradientField(grad.grid, grad.values, h, direction, grad.label, grad.skipped)
