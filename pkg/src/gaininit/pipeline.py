"""One-shot starting-model update from a constant background.

Per (s, n): gradient and pseudo-Hessian on a coarse grid, preconditioned
direction. The directions are pooled with equal-contribution weights, a step
is fitted by a parabola through Born-predicted objectives, and the single
update is clamped, masked and resampled to the output grid.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, fields
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .data import LaplaceField, SurveyDataset
from .errors import ConfigError, DegenerateError, GainInitError
from .geometry import AcquisitionGeometry, VelocityModel, bilinear_resample, water_mask_from_bathymetry
from .laplace import TransformSpec, transform_survey
from .objective import (GradientField, ResidualPolicy, SkipCounter, assemble, estimate_source,
                        modeled_derivatives, objective, precondition)
from .sensitivity import kernel_derivatives, path_terms

Pair = Tuple[float, int]


@dataclass(frozen=True)
class PipelineConfig:
    background_velocity: float = 3500.0
    damping_constants: Tuple[float, ...] = tuple(float(s) for s in range(2, 13))
    gain_powers: Tuple[int, ...] = (0, 1, 2, 3, 4)
    shot_decimation: int = 4
    gradient_grid: float = 200.0
    output_grid: float = 25.0
    velocity_bounds: Tuple[float, float] = (1400.0, 8000.0)
    step_fraction: float = 0.05  # first trial moves the largest cell by this share of the background
    lambda_rel: float = 1e-9  # only guards zero division; the square-root scaling needs no damping
    hessian_power: float = 0.5
    crossing_guard: float = 0.3
    weight_norm: str = "max"
    amplitude_floor: float = 1e-28
    stability_threshold: float = 1e-5
    water_depth: Tuple[float, ...] = ()  # one value: flat seafloor; several: profile across the grid
    water_velocity: float = 1500.0
    grid_origin_x: Optional[float] = None
    grid_width: Optional[float] = None
    grid_depth: float = 4000.0
    source_amplitude: Optional[float] = None  # None estimates it per shot and s
    step_shrink: float = 0.1
    max_step_trials: int = 12

    def __post_init__(self):
        object.__setattr__(self, "damping_constants", tuple(float(v) for v in self.damping_constants))
        object.__setattr__(self, "gain_powers", tuple(int(v) for v in self.gain_powers))
        object.__setattr__(self, "velocity_bounds", tuple(float(v) for v in self.velocity_bounds))
        object.__setattr__(self, "water_depth", tuple(float(v) for v in self.water_depth))
        lo, hi = self.velocity_bounds if len(self.velocity_bounds) == 2 else (0, 0)
        checks = [
            (len(self.velocity_bounds) == 2 and 0 < lo < hi, "velocity_bounds must be two ordered positive values"),
            (self.background_velocity > 0, "background_velocity must be positive"),
            (self.shot_decimation >= 1, "shot_decimation must be >= 1"),
            (self.gradient_grid > 0 and self.output_grid > 0, "grid spacings must be positive"),
            (self.grid_depth > 0, "grid_depth must be positive"),
            (self.grid_width is None or self.grid_width > 0, "grid_width must be positive"),
            (0 < self.step_fraction < 1, "step_fraction must lie in (0, 1)"),
            (0 < self.step_shrink < 1, "step_shrink must lie in (0, 1)"),
            (self.max_step_trials >= 1, "max_step_trials must be >= 1"),
            (self.lambda_rel > 0, "lambda_rel must be positive"),
            (0 < self.hessian_power <= 1, "hessian_power must lie in (0, 1]"),
            (0 <= self.crossing_guard < 1, "crossing_guard must lie in [0, 1)"),
            (self.weight_norm in ("max", "l2"), "weight_norm must be 'max' or 'l2'"),
            (self.water_velocity > 0, "water_velocity must be positive"),
            (all(d >= 0 for d in self.water_depth), "water_depth must be non-negative"),
            (self.source_amplitude is None or self.source_amplitude > 0, "source_amplitude must be positive"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        try:
            self.transform_spec()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def transform_spec(self) -> TransformSpec:
        return TransformSpec(self.damping_constants, self.gain_powers, self.amplitude_floor,
                             self.stability_threshold)

    def policy(self) -> ResidualPolicy:
        return ResidualPolicy(self.amplitude_floor, crossing_guard=self.crossing_guard)

    def pairs(self) -> List[Pair]:
        return [(s, n) for s in self.damping_constants for n in self.gain_powers]

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class RunReport:
    objective_before: float = math.nan
    objective_after: float = math.nan
    alpha: float = 0.0
    trial_alphas: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    trial_objectives: Tuple[float, float, float] = (math.nan, math.nan, math.nan)
    weights: Dict[Pair, float] = field(default_factory=dict)
    zero_directions: List[Pair] = field(default_factory=list)
    skipped: Dict[Pair, SkipCounter] = field(default_factory=dict)
    source_amplitudes: Dict[float, np.ndarray] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)
    directions: Dict[Pair, GradientField] = field(default_factory=dict)
    final_direction: Optional[GradientField] = None
    coarse_model: Optional[VelocityModel] = None
    step_shrinks: int = 0
    n_shots_used: int = 0
    step_evaluation: str = "first-order Born prediction around the background"


@contextmanager
def _stage(name: str, timings: Dict[str, float]):
    """Time a stage and prefix any library error with its name."""
    t0 = time.perf_counter()
    try:
        yield
    except GainInitError as exc:
        exc.stage = name
        if exc.args:
            exc.args = (f"[{name}] {exc.args[0]}",) + exc.args[1:]
        raise
    finally:
        timings[name] = timings.get(name, 0.0) + time.perf_counter() - t0


# ---------------------------------------------------------------- grids

def gradient_model(config: PipelineConfig, geometry: AcquisitionGeometry) -> VelocityModel:
    """Coarse constant-velocity grid covering the acquisition, water cells masked."""
    xs = np.concatenate([geometry.shots[:, 0]] + [r[:, 0] for r in geometry.receivers])
    x0 = float(xs.min()) if config.grid_origin_x is None else config.grid_origin_x
    width = float(xs.max()) - x0 if config.grid_width is None else config.grid_width
    d = config.gradient_grid
    nx = max(1, int(math.ceil(width / d - 1e-9)))
    nz = max(1, int(math.ceil(config.grid_depth / d - 1e-9)))
    model = VelocityModel.constant(nx, nz, d, d, config.background_velocity, x0, 0.0)
    return _apply_water(model, config)


def _apply_water(model: VelocityModel, config: PipelineConfig) -> VelocityModel:
    if not config.water_depth:
        return model
    depth = np.asarray(config.water_depth)
    if depth.size == 1:
        profile = np.full(model.nx, depth[0])
    else:
        knots = np.linspace(model.origin_x, model.origin_x + model.nx * model.dx, depth.size)
        profile = np.interp(model.x_centers, knots, depth)
    model = water_mask_from_bathymetry(model, profile)
    v = np.where(model.mask(), config.water_velocity, model.velocities)
    return model.with_velocities(v)


# ---------------------------------------------------------------- combination

def contribution_weights(directions: Sequence[GradientField], norm: str = "max") -> List[float]:
    out = []
    for g in directions:
        d = g.direction if g.direction is not None else g.values
        size = float(np.max(np.abs(d))) if norm == "max" else float(np.sqrt(np.sum(d * d)))
        if size == 0:
            raise DegenerateError(f"direction for (s, n) = {g.label} is identically zero; cannot weight it")
        out.append(1.0 / size)
    return out


def weighted_sum(directions: Sequence[GradientField], norm: str = "max") -> GradientField:
    """Equal-contribution sum of directions, rescaled to unit max magnitude."""
    if not directions:
        raise ValueError("need at least one direction")
    grid = directions[0].grid
    if any(not g.grid.same_grid(grid) for g in directions):
        raise ValueError("directions live on different grids")
    weights = contribution_weights(directions, norm)
    # summing in sorted label order makes the result independent of input order
    order = sorted(range(len(directions)), key=lambda k: (directions[k].label is None, directions[k].label or (0, 0)))
    total = np.zeros(grid.shape)
    for k in order:
        g = directions[k]
        total += weights[k] * (g.direction if g.direction is not None else g.values)
    peak = float(np.max(np.abs(total)))
    if peak == 0:
        raise DegenerateError("weighted directions cancel exactly")
    total = total / peak
    return GradientField(grid, total, direction=total, label=None)


# ---------------------------------------------------------------- step length

@dataclass(frozen=True)
class BornContext:
    """What the linear forward map needs besides the direction."""

    geometry: AcquisitionGeometry
    c: float
    f_m: Dict[float, np.ndarray]
    damping_constants: Tuple[float, ...]
    gain_powers: Tuple[int, ...]
    threads: int = 1


def _shot_increment(i, ctx: BornContext, cells, weights, volume):
    src, rcv = ctx.geometry.shots[i], ctx.geometry.receivers[i]
    out = np.zeros((len(rcv), len(ctx.damping_constants), len(ctx.gain_powers)))
    if len(cells) == 0:
        return out
    pt = path_terms(src[None, :], cells[:, None, :], rcv[None, :, :], ctx.c)
    for a, s in enumerate(ctx.damping_constants):
        ker = kernel_derivatives(pt, ctx.f_m[s][i] * volume, ctx.c, s, ctx.gain_powers)
        for k, n in enumerate(ctx.gain_powers):
            out[:, a, k] = np.sum(ker[n] * weights[:, None], axis=0)
    return out


def born_increment(direction: GradientField, ctx: BornContext) -> LaplaceField:
    """Sum over cells of kernel times the direction: the field change per unit step."""
    d = direction.direction if direction.direction is not None else direction.values
    flat = d.ravel()
    live = np.flatnonzero(flat)
    cells = direction.grid.cell_centers()[live]
    weights = flat[live]
    volume = direction.grid.cell_volume

    def work(i):
        return _shot_increment(i, ctx, cells, weights, volume)

    if ctx.threads > 1:
        with ThreadPoolExecutor(max_workers=ctx.threads) as pool:
            blocks = list(pool.map(work, range(ctx.geometry.n_shots)))
    else:
        blocks = [work(i) for i in range(ctx.geometry.n_shots)]
    return LaplaceField(ctx.damping_constants, ctx.gain_powers, blocks, provenance="modeled")


def born_predict_field(direction: GradientField, alpha: float, base: LaplaceField, ctx: BornContext,
                       increment: Optional[LaplaceField] = None) -> LaplaceField:
    """Field after a step ``alpha`` along ``direction``, to first order."""
    if not math.isfinite(alpha):
        raise ValueError("alpha must be finite")
    if alpha == 0:
        return base
    inc = born_increment(direction, ctx) if increment is None else increment
    blocks = [b + alpha * db for b, db in zip(base.values, inc.values)]
    return LaplaceField(base.damping_constants, base.gain_powers, blocks, provenance="modeled")


def parabolic_step(e0: float, e1: float, e2: float, a1: float, a2: float) -> float:
    """Vertex of the parabola through (0, e0), (a1, e1), (a2, e2), or the best sample when it opens downward."""
    if a1 == a2 or a1 == 0 or a2 == 0:
        raise ValueError("trial steps must be distinct and non-zero")
    if not all(math.isfinite(e) for e in (e0, e1, e2)):
        raise ValueError("objective values must be finite")
    # divided differences of the three samples
    d1 = (e1 - e0) / a1
    d2 = (e2 - e0) / a2
    a = (d2 - d1) / (a2 - a1)
    b = d1 - a * a1
    if a > 0:
        return float(min(max(-b / (2 * a), 0.0), 2 * max(a1, a2)))
    best = min(((e0, 0.0), (e1, a1), (e2, a2)), key=lambda p: p[0])
    return float(best[1])


def apply_update(model: VelocityModel, direction: GradientField, alpha: float,
                 bounds: Tuple[float, float]) -> VelocityModel:
    if not model.same_grid(direction.grid):
        raise ValueError("direction and model grids differ")
    if not alpha >= 0:
        raise ValueError("alpha must be non-negative")
    d = direction.direction if direction.direction is not None else direction.values
    v = np.clip(model.velocities + alpha * d, bounds[0], bounds[1])
    mask = model.mask()
    v[mask] = model.velocities[mask]
    return model.with_velocities(v)


def born_objective(field: LaplaceField, observed: LaplaceField, pairs, policy, geometry, c) -> float:
    return sum(objective(field, observed, s, n, policy, geometry=geometry, c=c) for s, n in pairs)


# ---------------------------------------------------------------- driver

def directions_from_observed(observed: LaplaceField, geometry: AcquisitionGeometry, config: PipelineConfig,
                             grid: VelocityModel, threads: int = 1, report: Optional[RunReport] = None):
    """Source estimates and preconditioned per-(s, n) directions for Laplace-domain data."""
    report = RunReport() if report is None else report
    c = config.background_velocity
    policy = config.policy()
    with _stage("source", report.timings):
        if config.source_amplitude is None:
            f_m = {s: estimate_source(observed, geometry, c, s, policy) for s in config.damping_constants}
        else:
            f_m = {s: np.full(geometry.n_shots, config.source_amplitude) for s in config.damping_constants}
    report.source_amplitudes = f_m
    with _stage("gradient", report.timings):
        grads = assemble(observed, geometry, c, f_m, grid, config.pairs(), policy, threads)
    with _stage("precondition", report.timings):
        dirs = {p: precondition(g, lambda_rel=config.lambda_rel, hessian_power=config.hessian_power)
                for p, g in grads.items()}
    report.skipped = {p: g.skipped for p, g in grads.items()}
    report.directions = dirs
    return f_m, dirs, report


def update_from_observed(observed: LaplaceField, geometry: AcquisitionGeometry, config: PipelineConfig,
                         threads: int = 1, grid: VelocityModel = None) -> Tuple[VelocityModel, RunReport]:
    """Everything after the transform: directions, step, update and resampling."""
    report = RunReport(n_shots_used=geometry.n_shots)
    grid = gradient_model(config, geometry) if grid is None else grid
    c = config.background_velocity
    policy = config.policy()
    pairs = config.pairs()
    f_m, dirs, _ = directions_from_observed(observed, geometry, config, grid, threads, report)

    with _stage("combine", report.timings):
        live = [d for p, d in dirs.items() if np.any(d.direction != 0)]
        report.zero_directions = [p for p, d in dirs.items() if not np.any(d.direction != 0)]
        if live:
            final = weighted_sum(live, config.weight_norm)
            report.weights = dict(zip([d.label for d in live], contribution_weights(live, config.weight_norm)))
        else:
            final = GradientField(grid, np.zeros(grid.shape), direction=np.zeros(grid.shape))
    report.final_direction = final

    with _stage("step", report.timings):
        ctx = BornContext(geometry, c, f_m, config.damping_constants, config.gain_powers, threads)
        base = modeled_derivatives(geometry, c, f_m, config.damping_constants, config.gain_powers)
        e0 = born_objective(base, observed, pairs, policy, geometry, c)
        report.objective_before = e0
        alpha, after = 0.0, e0
        if live:
            inc = born_increment(final, ctx)

            def predicted(a):
                return born_objective(born_predict_field(final, a, base, ctx, inc), observed, pairs, policy,
                                      geometry, c)

            a1 = config.step_fraction * c / float(np.max(np.abs(final.direction)))
            for attempt in range(config.max_step_trials):
                e1, e2 = predicted(a1), predicted(2 * a1)
                report.trial_alphas, report.trial_objectives = (0.0, a1, 2 * a1), (e0, e1, e2)
                report.step_shrinks = attempt
                trial = parabolic_step(e0, e1, e2, a1, 2 * a1)
                e_trial = predicted(trial) if trial > 0 else e0
                if e_trial < e0:
                    alpha, after = trial, e_trial
                    break
                # both trials overshoot the minimum: bracket it with smaller steps
                a1 *= config.step_shrink
        report.alpha, report.objective_after = alpha, after

    with _stage("update", report.timings):
        coarse = apply_update(grid, final, alpha, config.velocity_bounds)
        report.coarse_model = coarse
        fine = bilinear_resample(coarse, config.output_grid, config.output_grid)
        # re-derive the mask at output resolution rather than inheriting coarse cells
        fine = _apply_water(fine, config)
    return fine, report


def _has_pair(field: LaplaceField, pair: Pair) -> bool:
    try:
        field.index(*pair)
    except KeyError:
        return False
    return True


def _decimate_field(field: LaplaceField, geometry: AcquisitionGeometry, every: int):
    if geometry.n_shots != len(field.values):
        raise ValueError("geometry and Laplace field disagree on the number of shots")
    keep = list(range(0, geometry.n_shots, every))
    sub = LaplaceField(field.damping_constants, field.gain_powers, [field.values[i] for i in keep],
                       provenance=field.provenance)
    return sub, geometry.subset(keep)


def build_initial_model(dataset: Union[SurveyDataset, LaplaceField], config: PipelineConfig = PipelineConfig(),
                        threads: int = 1, force: bool = False,
                        geometry: Optional[AcquisitionGeometry] = None) -> Tuple[VelocityModel, RunReport]:
    """Decimate, transform, and run the single preconditioned update.

    ``dataset`` is either time-domain traces or an already transformed
    Laplace-domain field; the latter needs its ``geometry`` and must hold
    every configured (s, n).
    """
    timings: Dict[str, float] = {}
    if isinstance(dataset, LaplaceField):
        if geometry is None:
            raise ValueError("a Laplace-domain field needs its acquisition geometry")
        with _stage("decimate", timings):
            observed, geo = _decimate_field(dataset, geometry, config.shot_decimation)
        with _stage("transform", timings):
            # nothing to transform; just check the field carries every configured pair
            missing = [p for p in config.pairs() if not _has_pair(observed, p)]
            if missing:
                raise ConfigError(f"Laplace field lacks configured (s, n) pairs: {missing}")
    else:
        with _stage("decimate", timings):
            data = dataset.decimate(config.shot_decimation)
        with _stage("transform", timings):
            observed = transform_survey(data, config.transform_spec(), force=force)
        geo = data.geometry
    model, report = update_from_observed(observed, geo, config, threads)
    report.timings = {**timings, **report.timings}
    return model, report
