import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaininit.errors import ConfigError, DegenerateError, GainInitError
from gaininit.geometry import AcquisitionGeometry, VelocityModel
from gaininit.laplace import TransformSpec
from gaininit.objective import GradientField, modeled_derivatives
from gaininit.pipeline import (BornContext, PipelineConfig, _stage, apply_update, born_increment,
                               born_predict_field, build_initial_model, gradient_model, parabolic_step, update_from_observed,
                               weighted_sum)
from gaininit.sensitivity import born_kernel_s_derivative
from gaininit.synthetics import Scatterer, synth_born_observed

from helpers import parabola_vertex_by_hand

C = 3000.0
GRID = VelocityModel.constant(6, 4, 200.0, 200.0, C)


def _dir(arr, label):
    arr = np.asarray(arr, dtype=float).reshape(GRID.shape)
    return GradientField(GRID, arr, direction=arr, label=label)


def test_weighted_sum_equalises_contributions():
    a = np.zeros(GRID.shape)
    a[0, 0] = 2.0
    b = np.zeros(GRID.shape)
    b[1, 1] = -4.0
    out = weighted_sum([_dir(a, (2.0, 0)), _dir(b, (2.0, 1))])
    assert out.direction[0, 0] == 1.0 and out.direction[1, 1] == -1.0
    assert np.max(np.abs(out.direction)) == 1.0


def test_weighted_sum_scales_out():
    a = np.zeros(GRID.shape)
    a[0, 0], a[0, 1] = 2.0, 1.0
    b = np.zeros(GRID.shape)
    b[0, 0], b[0, 2] = 4.0, 1.0
    out = weighted_sum([_dir(a, (2.0, 0)), _dir(b, (3.0, 0))])
    # unit-max terms: (1, 0.5, 0) + (1, 0, 0.25), then divided by the peak 2
    np.testing.assert_allclose(out.direction[0, :3], [1.0, 0.25, 0.125])


@given(st.permutations(range(4)), st.integers(0, 2 ** 32 - 1))
def test_weighted_sum_is_order_independent(perm, seed):
    rng = np.random.default_rng(seed)
    dirs = [_dir(rng.normal(size=GRID.shape) * 10.0 ** k, (2.0 + k, k)) for k in range(4)]
    a = weighted_sum(dirs)
    b = weighted_sum([dirs[k] for k in perm])
    assert a.direction.tobytes() == b.direction.tobytes()


def test_zero_direction_is_named():
    with pytest.raises(DegenerateError, match=r"\(7\.0, 3\)"):
        weighted_sum([_dir(np.ones(GRID.shape), (2.0, 0)), _dir(np.zeros(GRID.shape), (7.0, 3))])


def test_parabolic_step_examples():
    assert parabolic_step(1.0, 0.5, 1.0, 1.0, 2.0) == pytest.approx(1.0)
    a, b, _ = parabola_vertex_by_hand((0.0, 1.0, 2.0), (1.0, 0.5, 0.9))
    assert (a, b) == (pytest.approx(0.45), pytest.approx(-0.95))
    assert parabolic_step(1.0, 0.5, 0.9, 1.0, 2.0) == pytest.approx(0.95 / 0.9, rel=1e-12)
    assert parabolic_step(1.0, 1.5, 3.0, 1.0, 2.0) == 0.0
    # concave: take the best sample
    assert parabolic_step(1.0, 0.9, 0.5, 1.0, 2.0) == 2.0


@given(st.floats(0.1, 10.0), st.floats(-5.0, 5.0), st.floats(-5.0, 5.0), st.floats(0.1, 3.0))
def test_parabolic_step_recovers_vertex(a, b, c, h):
    e = [a * x * x + b * x + c for x in (0.0, h, 2 * h)]
    vertex = -b / (2 * a)
    expected = min(max(vertex, 0.0), 4 * h)
    assert parabolic_step(e[0], e[1], e[2], h, 2 * h) == pytest.approx(expected, rel=1e-6, abs=1e-6)


def test_parabolic_step_rejects_bad_trials():
    with pytest.raises(ValueError):
        parabolic_step(1.0, 1.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        parabolic_step(1.0, float("nan"), 1.0, 1.0, 2.0)


def test_apply_update_clamps_and_keeps_mask():
    grid = VelocityModel(3, 1, 10.0, 10.0, np.full((1, 3), 3000.0), water_mask=np.array([[True, False, False]]))
    d = GradientField(grid, np.array([1.0, 1.0, -1.0]), direction=np.array([1.0, 1.0, -1.0]))
    out = apply_update(grid, d, 6000.0, (1400.0, 8000.0))
    np.testing.assert_array_equal(out.velocities, [[3000.0, 8000.0, 1400.0]])
    assert np.array_equal(out.water_mask, grid.water_mask)
    assert np.array_equal(apply_update(grid, d, 0.0, (1400.0, 8000.0)).velocities, grid.velocities)
    with pytest.raises(ValueError):
        apply_update(grid, d, -1.0, (1400.0, 8000.0))


GEO = AcquisitionGeometry.fixed_spread([200.0, 1000.0], np.linspace(100.0, 1100.0, 6))
SPEC = TransformSpec((3.0, 6.0), (0, 2))


def _ctx(f=1.0):
    return BornContext(GEO, C, {s: np.full(2, f) for s in SPEC.damping_constants}, SPEC.damping_constants,
                       SPEC.gain_powers)


def test_born_prediction_is_linear_and_matches_single_kernel():
    ctx = _ctx(2.0)
    base = modeled_derivatives(GEO, C, ctx.f_m, SPEC.damping_constants, SPEC.gain_powers)
    d = np.zeros(GRID.shape)
    d[2, 3] = 1.0
    g = _dir(d, None)
    assert born_predict_field(g, 0.0, base, ctx) is base
    one = born_predict_field(g, 5.0, base, ctx)
    two = born_predict_field(g, 10.0, base, ctx)
    cell = GRID.cell_centers()[2 * GRID.nx + 3]
    for i in range(2):
        np.testing.assert_allclose(two.values[i] - base.values[i], 2 * (one.values[i] - base.values[i]),
                                   rtol=1e-9, atol=1e-15 * np.abs(base.values[i]).max())
        k = born_kernel_s_derivative(2.0, GEO.shots[i], cell, GEO.receivers[i], C, 6.0, 2)
        inc = born_increment(g, ctx)
        np.testing.assert_allclose(inc.at(6.0, 2)[i], k * GRID.cell_volume, rtol=1e-12)


def test_born_increment_matches_synthetic_scatterer():
    ctx = _ctx()
    sc = Scatterer.at_cell(GRID, 1, 4, 40.0)
    d = np.zeros(GRID.shape)
    d[1, 4] = 40.0
    inc = born_increment(_dir(d, None), ctx)
    obs = synth_born_observed(GEO, C, [sc], 1.0, SPEC, GRID)
    base = synth_born_observed(GEO, C, [], 1.0, SPEC, GRID)
    for i in range(2):
        np.testing.assert_allclose(inc.values[i], obs.values[i] - base.values[i], rtol=1e-6,
                                   atol=1e-14 * np.abs(base.values[i]).max())


def test_config_validation():
    for bad in (dict(velocity_bounds=(8000.0, 1400.0)), dict(hessian_power=0.0), dict(shot_decimation=0),
                dict(step_fraction=1.5), dict(damping_constants=()), dict(gain_powers=(-1,)),
                dict(weight_norm="l1"), dict(source_amplitude=0.0)):
        with pytest.raises(ConfigError):
            PipelineConfig(**bad)
    cfg = PipelineConfig(damping_constants=[2, 4], gain_powers=[0, 1])
    assert cfg.pairs() == [(2.0, 0), (2.0, 1), (4.0, 0), (4.0, 1)]


def test_gradient_grid_covers_acquisition():
    geo = AcquisitionGeometry.streamer([0.0, 500.0], [100.0, 1050.0])
    m = gradient_model(PipelineConfig(gradient_grid=200.0, grid_depth=1000.0), geo)
    assert (m.nx, m.nz, m.origin_x) == (8, 5, 0.0)


def test_water_layer_is_masked_and_set():
    geo = AcquisitionGeometry.streamer([0.0], [1000.0])
    m = gradient_model(PipelineConfig(gradient_grid=100.0, grid_depth=500.0, water_depth=(260.0,)), geo)
    assert m.mask()[:3].all() and not m.mask()[3:].any()
    assert np.all(m.velocities[:3] == 1500.0) and np.all(m.velocities[3:] == 3500.0)
    sloped = gradient_model(PipelineConfig(gradient_grid=100.0, grid_depth=500.0, water_depth=(0.0, 500.0)), geo)
    assert sloped.mask().sum(axis=0)[0] == 0 and sloped.mask().sum(axis=0)[-1] == 5


def test_stage_prefixes_errors():
    timings = {}
    with pytest.raises(GainInitError) as info:
        with _stage("gradient", timings):
            raise DegenerateError("boom")
    assert str(info.value).startswith("[gradient] boom")
    assert info.value.stage == "gradient" and "gradient" in timings


def test_update_reduces_the_predicted_objective():
    grid = VelocityModel.constant(6, 5, 200.0, 200.0, C)
    cfg = PipelineConfig(background_velocity=C, damping_constants=(3.0, 6.0), gain_powers=(0, 1),
                         gradient_grid=200.0, output_grid=100.0, grid_depth=1000.0)
    obs = synth_born_observed(GEO, C, [Scatterer.at_cell(grid, 2, 3, 150.0)], 1.0, cfg.transform_spec(), grid)
    model, report = update_from_observed(obs, GEO, cfg, grid=grid)
    assert report.alpha > 0
    assert report.objective_after < report.objective_before
    assert (model.dx, model.dz) == (100.0, 100.0)
    assert np.all((model.velocities >= 1400.0) & (model.velocities <= 8000.0))


def test_zero_perturbation_returns_background():
    cfg = PipelineConfig(background_velocity=C, damping_constants=(3.0,), gain_powers=(0, 2),
                         gradient_grid=200.0, output_grid=100.0, grid_depth=800.0)
    obs = synth_born_observed(GEO, C, [], 1.7, cfg.transform_spec())
    model, report = update_from_observed(obs, GEO, cfg)
    assert report.alpha == 0.0 and report.objective_before == 0.0
    assert sorted(report.zero_directions) == cfg.pairs()
    np.testing.assert_allclose(model.velocities, C, rtol=1e-10)


def test_build_accepts_laplace_field_and_decimates():
    geo = AcquisitionGeometry.fixed_spread([200.0, 550.0, 1000.0], np.linspace(100.0, 1100.0, 6))
    cfg = PipelineConfig(background_velocity=C, damping_constants=(3.0,), gain_powers=(0, 1), shot_decimation=2,
                         gradient_grid=200.0, output_grid=100.0, grid_depth=800.0, grid_origin_x=0.0,
                         grid_width=1200.0)
    obs = synth_born_observed(geo, C, [Scatterer(700.0, 500.0, 80.0, 200.0 ** 3)], 1.0, cfg.transform_spec())
    model, report = build_initial_model(obs, cfg, geometry=geo)
    assert report.n_shots_used == 2
    assert report.objective_after < report.objective_before
    with pytest.raises(ValueError):
        build_initial_model(obs, cfg)
    with pytest.raises(ConfigError, match="lacks"):
        build_initial_model(obs, PipelineConfig(damping_constants=(4.0,)), geometry=geo)
