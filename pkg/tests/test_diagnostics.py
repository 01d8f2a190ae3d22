import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from radixrope import FrequencySchedule, RopeParams, build_frequencies
from radixrope.diagnostics import (
    DiagnosticSeries,
    biased_estimate,
    bound_function,
    cumulative_scale_curve,
    default_scan,
    find_bound_root,
    fmt,
    linearity_score,
    mean_crossings,
    middle_attention_sim,
    middle_band_bound,
    oscillation_amplitude,
    plan_bound_root,
    r_squared,
    series_to_long_csv,
)
from radixrope.extensions import (
    DegeneratePartitionError,
    compile_plan,
    plan_mrrope_uni,
    plan_none,
    plan_yarn,
)
from radixrope.radix import rope_radix_of


# -- biased estimate -------------------------------------------------------------

def estimate_oracle(thetas, beta, m):
    terms = [beta**j * math.fmod(m * t, 2 * math.pi) for j, t in enumerate(thetas)]
    return math.fsum(reversed(terms))


def test_estimate_at_zero(llama2):
    assert biased_estimate(build_frequencies(llama2), 1.15, 0) == 0.0


def test_estimate_single_digit():
    sched = build_frequencies(RopeParams(7.0, 2, 64))
    for m in (0, 1, 5, 7, 100):
        assert biased_estimate(sched, 7.0, m) == pytest.approx(math.fmod(m, 2 * math.pi), abs=1e-15)


def test_estimate_matches_oracle():
    params = RopeParams(10000, 128, 4096)
    sched = build_frequencies(params)
    beta = rope_radix_of(params).beta
    ms = np.arange(1, 4097)
    got = biased_estimate(sched, beta, ms)
    expect = np.array([estimate_oracle(sched.thetas, beta, int(m)) for m in ms])
    assert_allclose(got, expect, rtol=1e-6)


def test_r_squared_cases():
    xs = np.arange(50.0)
    assert r_squared(xs, 3 * xs - 2) == pytest.approx(1.0, abs=1e-12)
    assert r_squared(xs, np.full(50, 4.0)) == 0.0
    noisy = xs + np.random.default_rng(0).normal(0, 5, 50)
    assert 0 < r_squared(xs, noisy) < 1


def test_linearity_ordering():
    scores = []
    for b in (1e2, 1e4, 1e6):
        p = RopeParams(b, 128, 8192)
        scores.append(linearity_score(build_frequencies(p), rope_radix_of(p).beta, 8192))
    assert scores[0] < scores[1] < scores[2]


def test_linearity_needs_length():
    with pytest.raises(ValueError):
        linearity_score(build_frequencies(RopeParams(100, 8, 16)), 2.0, 10)


# -- bound function and roots -----------------------------------------------------

def test_bound_at_zero_and_even(llama2):
    sched = build_frequencies(llama2)
    assert bound_function(sched, 0) == 64.0
    ms = np.linspace(0, 1e5, 301)
    assert_array_equal(bound_function(sched, ms), bound_function(sched, -ms))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1e-6, 3.0), min_size=1, max_size=64), st.floats(0, 1e5))
def test_bound_matches_fsum(thetas, m):
    sched = FrequencySchedule(np.array(thetas))
    expect = math.fsum(math.cos(m * t) for t in thetas)
    assert bound_function(sched, m) == pytest.approx(expect, abs=1e-9)


def test_single_cosine_root():
    prof = find_bound_root(FrequencySchedule([1.0]), 10.0, 0.01)
    assert prof.root == pytest.approx(math.pi / 2, abs=1e-6)


def test_no_root():
    prof = find_bound_root(FrequencySchedule([1e-6, 2e-6]), 100.0, 1.0)
    assert prof.root is None
    assert len(prof.series) == 101


def test_grid_step_limit():
    with pytest.raises(ValueError):
        find_bound_root(FrequencySchedule([1.0]), 10.0, 0.2)
    with pytest.raises(ValueError):
        find_bound_root(FrequencySchedule([1.0]), 10.0, 0.0)


@pytest.mark.parametrize("method", ["none", "yarn", "mrrope-uni", "mrrope-pro", "ntk", "pi"])
def test_root_is_bracketed(llama2, method):
    plan = compile_plan(llama2, method, 16.0)
    prof = plan_bound_root(llama2, plan)
    assert prof.root is not None
    sched_fn = prof.series
    r = prof.root
    from radixrope.extensions import effective_frequencies
    sched = effective_frequencies(llama2, plan)
    # theta_1 = 1 rad/token makes B flip sign within a few tokens, so the
    # bracket is checked just around the refined root, not one grid step out
    eps = 0.05
    assert bound_function(sched, r - eps) * bound_function(sched, r + eps) <= 0
    # every grid sample before the root scans positive
    assert np.all(sched_fn.ys[sched_fn.xs < r] > 0)


def test_default_scan(llama2):
    assert default_scan(llama2, 16.0) == (16 * 16 * 4096, 64.0)


def test_pi_bound_is_position_scaled(llama2):
    plan = compile_plan(llama2, "pi", 16.0)
    base = build_frequencies(llama2)
    from radixrope.extensions import effective_frequencies
    eff = effective_frequencies(llama2, plan)
    for m in (0.0, 123.0, 9999.0):
        assert bound_function(eff, m) == pytest.approx(bound_function(base, m / 16), abs=1e-12)


def test_band_only_root_uses_band(llama2):
    plan = plan_yarn(llama2, 16.0)
    prof = plan_bound_root(llama2, plan, m_max=70000, grid_step=64, band_only=True)
    assert prof.series.ys[0] == plan.band_size


# -- cumulative curves and middle band --------------------------------------------

def test_cumulative_curve(llama2):
    flat = cumulative_scale_curve(plan_none(llama2))
    assert_array_equal(flat.ys, 1.0)
    for method in ("yarn", "mrrope-uni", "mrrope-pro"):
        c = cumulative_scale_curve(compile_plan(llama2, method, 16.0))
        assert c.ys[0] == 1.0
        assert c.ys[-1] == pytest.approx(16.0, rel=1e-9)
        assert_array_equal(c.xs, np.arange(1, 65))


def test_middle_band_at_zero(llama2):
    plan = plan_yarn(llama2, 16.0)
    assert middle_band_bound(plan, llama2, 0) == plan.d_high - plan.d_low


def test_middle_band_slice_vs_mask(llama2):
    from radixrope.extensions import effective_frequencies
    plan = compile_plan(llama2, "mrrope-pro", 16.0)
    thetas = effective_frequencies(llama2, plan).thetas
    idx = np.arange(1, 65)
    mask = (idx >= plan.d_low) & (idx < plan.d_high)
    ms = np.linspace(0, 65536, 513)
    expect = np.cos(np.outer(ms, thetas))[:, mask].sum(axis=1)
    assert_allclose(middle_band_bound(plan, llama2, ms), expect, atol=1e-9)


def test_middle_band_degenerate(llama2):
    with pytest.raises(DegeneratePartitionError):
        middle_band_bound(plan_none(llama2), llama2, 1.0)


def test_amplitude_and_crossings():
    assert oscillation_amplitude([1.0, -2.0, 3.5]) == 5.5
    xs = np.arange(8.0)
    ys = np.array([1, -1, 1, -1, 1, 1, 1, 1], dtype=float)
    # reference mean over x <= 3 is 0
    assert mean_crossings(xs, ys, 3) == 4


# -- attention simulation --------------------------------------------------------

def test_sim_identity_rotation(llama2):
    plan = plan_yarn(llama2, 16.0)
    s = middle_attention_sim(plan, llama2, 20, [0.0, 10.0], seed=3)
    rng = np.random.default_rng([3, 0])
    u = rng.standard_normal((20, 64, 2))
    v = rng.standard_normal((20, 64, 2))
    dots = (u[:, plan.band] * v[:, plan.band]).sum(axis=(1, 2))
    assert s.ys[0] == pytest.approx(dots.mean(), abs=1e-12)
    assert s.spread[0] == pytest.approx(dots.std(ddof=1), abs=1e-12)


def test_sim_deterministic(llama2):
    plan = compile_plan(llama2, "mrrope-pro", 16.0)
    pos = np.arange(0, 8192, 512.0)
    a = middle_attention_sim(plan, llama2, 50, pos, seed=7)
    b = middle_attention_sim(plan, llama2, 50, pos, seed=7)
    c = middle_attention_sim(plan, llama2, 50, pos, seed=8)
    assert a.to_csv() == b.to_csv()
    assert a.to_csv() != c.to_csv()


def test_sim_errors(llama2):
    plan = plan_yarn(llama2, 16.0)
    with pytest.raises(ValueError):
        middle_attention_sim(plan, llama2, 0, [0.0], 0)
    with pytest.raises(ValueError):
        middle_attention_sim(plan, llama2, 5, [], 0)
    with pytest.raises(DegeneratePartitionError):
        middle_attention_sim(plan_none(llama2), llama2, 5, [0.0], 0)


def test_sim_unbiased_at_full_turns(llama2):
    # S = 1 leaves the unscaled frequencies; m = 0 makes every angle a full turn
    plan = plan_mrrope_uni(llama2, 1.0)
    s = middle_attention_sim(plan, llama2, 2000, [0.0], seed=1)
    se = s.spread[0] / math.sqrt(2000)
    assert abs(s.ys[0]) < 3 * se


# -- series output ---------------------------------------------------------------

def test_series_csv_and_json():
    s = DiagnosticSeries("x", [0, 1, 2], [0.5, 1 / 3, 2e-12], [1, 2, 3])
    text = s.to_csv()
    assert "\r" not in text
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["x", "y", "spread"]
    assert rows[2] == ["1", "0.333333333", "2"]
    assert rows[3][1] == "2e-12"
    back = DiagnosticSeries.from_dict(json.loads(s.to_json()))
    assert_array_equal(back.ys, s.ys)
    assert_array_equal(back.spread, s.spread)


def test_series_invariants():
    with pytest.raises(ValueError):
        DiagnosticSeries("x", [0, 0], [1, 2])
    with pytest.raises(ValueError):
        DiagnosticSeries("x", [0, 1], [1])
    with pytest.raises(ValueError):
        DiagnosticSeries("x", [0, 1], [1, 2], [1])


def test_long_csv_and_fmt():
    a = DiagnosticSeries("a", [0], [1])
    b = DiagnosticSeries("b", [0, 1], [2, 3])
    lines = series_to_long_csv([a, b]).splitlines()
    assert lines == ["label,x,y,spread", "a,0,1,", "b,0,2,", "b,1,3,"]
    assert fmt(None) == "" and fmt(float("nan")) == ""
    assert fmt(1234567.0 / 7) == "176366.714"
