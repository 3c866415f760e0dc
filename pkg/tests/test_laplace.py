import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaininit.data import ShotGather, SurveyDataset
from gaininit.errors import DataError, DomainError, StabilityError
from gaininit.geometry import AcquisitionGeometry
from gaininit.laplace import (TransformSpec, exponential_gain_transform, gained_transform,
                              laplace_transform_trace, observed_derivative, stability_check, stability_table,
                              transform_survey)
from gaininit.synthetics import exp_trace

DT, NT = 1e-3, 12001


@pytest.mark.parametrize("n,s,expected", [(0, 2.0, 1 / 3), (1, 2.0, 1 / 9), (2, 2.0, 2 / 27)])
def test_exponential_trace_closed_forms(n, s, expected):
    assert gained_transform(exp_trace(1.0, NT, DT), DT, s, n) == pytest.approx(expected, abs=1e-9)


def test_observed_derivative_sign():
    d = exp_trace(1.0, NT, DT)
    assert observed_derivative(d, DT, 2.0, 1) == pytest.approx(-1 / 9, abs=1e-9)
    assert observed_derivative(d, DT, 2.0, 2) == pytest.approx(2 / 27, abs=1e-9)


def test_simpson_is_exact_for_cubics():
    t = np.arange(11) * 0.1
    from gaininit.laplace import _weights
    for nt in (7, 8, 11):
        w = _weights(nt, 0.1)
        assert float(np.sum(w * t[:nt] ** 3)) == pytest.approx(((nt - 1) * 0.1) ** 4 / 4, rel=1e-13)


def test_constant_trace_transform():
    # integral of exp(-s t) over [0, T]
    T = (NT - 1) * DT
    val = laplace_transform_trace(np.ones(NT), DT, 3.0)
    assert val == pytest.approx((1 - math.exp(-3.0 * T)) / 3.0, rel=1e-10)


def test_zero_trace_transforms_to_zero():
    assert gained_transform(np.zeros(NT), DT, 4.0, 3) == 0.0


def test_non_finite_trace_rejected():
    d = np.ones(100)
    d[17] = np.nan
    with pytest.raises(DataError, match="17"):
        laplace_transform_trace(d, DT, 2.0)


def test_bad_arguments():
    with pytest.raises(DomainError):
        laplace_transform_trace(np.ones(10), 0.0, 2.0)
    with pytest.raises(DomainError):
        gained_transform(np.ones(10), DT, 2.0, -1)
    with pytest.raises(DomainError):
        exponential_gain_transform(np.ones(10), DT, 2.0, 2.0)


def test_unstable_pair_fails_fast_unless_forced():
    d = exp_trace(1.0, NT, DT)
    with pytest.raises(StabilityError) as info:
        gained_transform(d, DT, 2.0, 8)
    assert info.value.failures[0][:2] == (8, 2.0)
    assert math.isfinite(gained_transform(d, DT, 2.0, 8, force=True))


def test_stability_ratio_closed_forms():
    assert stability_check(0, 2.0, 12.0).ratio == pytest.approx(math.exp(-24.0), rel=1e-12)
    r4 = stability_check(4, 2.0, 12.0)
    assert r4.passed and r4.ratio == pytest.approx(6.0 ** 4 * math.exp(-20.0), rel=1e-12)
    r8 = stability_check(8, 2.0, 12.0)
    assert not r8.passed and r8.ratio == pytest.approx(3.0 ** 8 * math.exp(-16.0), rel=1e-12)


def test_peak_beyond_record_fails():
    res = stability_check(30, 2.0, 12.0)
    assert not res.passed and res.ratio == 1.0


@given(st.floats(1.0, 12.0), st.floats(4.0, 20.0), st.integers(0, 6))
def test_stability_ratio_increases_with_n(s, T, n):
    if (n + 1) / s >= T:
        return
    assert stability_check(n + 1, s, T).ratio >= stability_check(n, s, T).ratio


def test_transform_spec_validation():
    with pytest.raises(ValueError):
        TransformSpec(damping_constants=())
    with pytest.raises(ValueError):
        TransformSpec(gain_powers=(0, 1.5))
    with pytest.raises(ValueError):
        TransformSpec(damping_constants=(2.0, 2.0))


def _survey(traces_per_shot=2, nt=NT):
    geo = AcquisitionGeometry.streamer([0.0, 500.0], [100.0 * (k + 1) for k in range(traces_per_shot)])
    a = [0.5, 1.0, 2.0]
    gathers = [ShotGather(i, DT, np.stack([exp_trace(a[(i + j) % 3], nt, DT) for j in range(traces_per_shot)]))
               for i in range(2)]
    return SurveyDataset(geo, gathers), a


def test_transform_survey_matches_single_trace_calls():
    ds, _ = _survey()
    spec = TransformSpec((2.0, 5.0), (0, 2, 4))
    field = transform_survey(ds, spec)
    assert field.provenance == "derivative"
    for i, g in enumerate(ds.gathers):
        for j, tr in enumerate(g.traces):
            for s in spec.damping_constants:
                for n in spec.gain_powers:
                    assert field.value(i, j, s, n) == pytest.approx(observed_derivative(tr, DT, s, n), rel=1e-14)


def test_transform_survey_lists_unstable_pairs():
    ds, _ = _survey()
    with pytest.raises(StabilityError) as info:
        transform_survey(ds, TransformSpec((2.0,), (4, 8)))
    assert [f[0] for f in info.value.failures] == [8]
    forced = transform_survey(ds, TransformSpec((2.0,), (4, 8)), force=True)
    assert forced.extras["forced"]


def test_stability_table_covers_every_pair():
    rows = stability_table(TransformSpec(), 12.0)
    assert len(rows) == 55
    assert all(r.passed for r in rows)
