import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radixrope.rope_core import (
    TWO_PI,
    FrequencySchedule,
    InvalidParamsError,
    RopeParams,
    apply_rotation,
    build_frequencies,
    is_incomplete_cycle,
    rotation_angles,
    rotation_progress,
    wavelength,
)

mpmath.mp.dps = 50


def test_first_frequency_is_one(llama2):
    assert build_frequencies(llama2).theta(1) == 1.0


def test_last_frequency(llama2):
    assert build_frequencies(llama2).theta(64) == pytest.approx(10000 ** (-63 / 64), rel=1e-15)


def test_frequencies_match_high_precision(llama2):
    sched = build_frequencies(llama2)
    for j in range(1, 65):
        exact = mpmath.power(10000, -mpmath.mpf(j - 1) / 64)
        assert sched.theta(j) == pytest.approx(float(exact), rel=1e-14)


@pytest.mark.parametrize(
    "kwargs, fragment",
    [
        (dict(base=10000, head_dim=127, trained_len=4096), "even"),
        (dict(base=10000, head_dim=0, trained_len=4096), "even"),
        (dict(base=1.0, head_dim=128, trained_len=4096), "must not equal 1"),
        (dict(base=-3.0, head_dim=128, trained_len=4096), "positive"),
        (dict(base=10000, head_dim=128, trained_len=0), "trained_len"),
    ],
)
def test_invalid_params(kwargs, fragment):
    with pytest.raises(InvalidParamsError, match=fragment):
        RopeParams(**kwargs)


def test_frequencies_strictly_decreasing(llama2):
    assert np.all(np.diff(build_frequencies(llama2).thetas) < 0)


def test_angles_at_zero(llama2):
    assert np.all(rotation_angles(build_frequencies(llama2), 0) == 0.0)


def test_angle_identity_frequency(llama2):
    assert rotation_angles(build_frequencies(llama2), 1)[0] == 1.0


def test_angles_match_extended_precision(llama2):
    sched = build_frequencies(llama2)
    got = rotation_angles(sched, 10)
    for j, theta in enumerate(sched.thetas):
        exact = mpmath.fmod(10 * mpmath.mpf(float(theta)), 2 * mpmath.pi)
        assert got[j] == pytest.approx(float(exact), abs=1e-13)


@given(st.integers(0, 2**40))
def test_angles_in_range(m):
    ang = rotation_angles(build_frequencies(RopeParams(10000, 16, 512)), m)
    assert np.all((ang >= 0) & (ang < TWO_PI))


def test_position_cap():
    sched = build_frequencies(RopeParams(10000, 16, 512))
    with pytest.raises(ValueError):
        rotation_angles(sched, 2**41)
    with pytest.raises(ValueError):
        rotation_angles(sched, -1)


def test_rotation_zero_is_identity(llama2):
    v = np.random.default_rng(0).standard_normal((64, 2))
    assert np.array_equal(apply_rotation(v, build_frequencies(llama2), 0), v)


def test_quarter_turn():
    sched = FrequencySchedule([math.pi / 2])
    out = apply_rotation(np.array([[1.0, 0.0]]), sched, 1)
    np.testing.assert_allclose(out, [[0.0, 1.0]], atol=1e-12)


def test_rotation_dimension_mismatch(llama2):
    with pytest.raises(ValueError):
        apply_rotation(np.zeros((10, 2)), build_frequencies(llama2), 3)


def test_norm_and_composition_at_37(llama2):
    sched = build_frequencies(llama2)
    v = np.random.default_rng(7).standard_normal((64, 2))
    out = apply_rotation(v, sched, 37)
    np.testing.assert_allclose(np.linalg.norm(out, axis=1), np.linalg.norm(v, axis=1), atol=1e-12)
    np.testing.assert_allclose(apply_rotation(apply_rotation(v, sched, 12), sched, 25), out, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**20), st.integers(0, 2**20), st.integers(0, 2**16))
def test_composition_and_norm(m1, m2, seed):
    sched = build_frequencies(RopeParams(10000, 32, 2048))
    v = np.random.default_rng(seed).standard_normal((16, 2))
    once = apply_rotation(v, sched, m1 + m2)
    twice = apply_rotation(apply_rotation(v, sched, m1), sched, m2)
    np.testing.assert_allclose(twice, once, atol=1e-9)
    np.testing.assert_allclose(np.linalg.norm(once, axis=1), np.linalg.norm(v, axis=1), atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**20), st.integers(0, 2**20), st.integers(0, 2**20), st.integers(0, 2**16))
def test_relative_position_property(m, n, delta, seed):
    sched = build_frequencies(RopeParams(10000, 64, 4096))
    rng = np.random.default_rng(seed)
    u, v = rng.standard_normal((2, 32, 2))
    a = np.sum(apply_rotation(u, sched, m) * apply_rotation(v, sched, n))
    b = np.sum(apply_rotation(u, sched, m + delta) * apply_rotation(v, sched, n + delta))
    assert abs(a - b) < 1e-6


def test_wavelengths(llama2):
    sched = build_frequencies(llama2)
    assert wavelength(sched, 1) == TWO_PI
    assert wavelength(sched, 64) == pytest.approx(TWO_PI * 10000 ** (63 / 64), rel=1e-14)
    ws = [wavelength(sched, j) for j in range(1, 65)]
    assert all(a < b for a, b in zip(ws, ws[1:]))
    with pytest.raises(IndexError):
        wavelength(sched, 0)
    with pytest.raises(IndexError):
        wavelength(sched, 65)


def test_progress(llama2):
    sched = build_frequencies(llama2)
    assert rotation_progress(sched, 1, TWO_PI) == 1.0
    assert rotation_progress(sched, 30, wavelength(sched, 30)) == pytest.approx(1.0, rel=1e-15)
    assert rotation_progress(sched, 1, 4096) == pytest.approx(4096 / (2 * math.pi), rel=1e-15)
    assert round(rotation_progress(sched, 1, 4096), 1) == 651.9
    with pytest.raises(IndexError):
        rotation_progress(sched, 65, 10)


def test_progress_below_one_iff_incomplete(llama2):
    sched = build_frequencies(llama2)
    for L in (1, 100, 4096, 60000):
        for j in range(1, 65):
            assert (rotation_progress(sched, j, L) < 1) == is_incomplete_cycle(sched, j, L)
