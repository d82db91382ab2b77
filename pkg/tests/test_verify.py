from __future__ import annotations

import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hclab import verify as V
from hclab.exceptions import CalibrationError, DegenerateInputError, FitError, ParameterError, TailWarning
from hclab.grid import LogGrid
from hclab.params import make_params
from hclab.riesz import RieszOperator

# 9^{1/8}: amplitude of the unit-scale bubble solving the theta = 0 equation at N=3, alpha=2
C_BUBBLE_N3A2 = 9.0 ** 0.125
# Gamma-function value of S(3, 2), evaluated with mpmath at 30 digits
S_HLS_N3A2 = 2.294010703541599


def test_bubble_rejects_theta(p16, grid):
    with pytest.raises(ParameterError):
        V.bubble(p16, 1.0, grid)


def test_bubble_bad_scale(p0, grid):
    with pytest.raises(ParameterError):
        V.bubble(p0, 0.0, grid)


def test_bubble_values(p0, grid):
    b = V.bubble(p0, 2.0, grid)
    r = grid.r
    np.testing.assert_allclose(b.values, (2.0 / (4.0 + r * r)) ** 0.5, rtol=1e-13)


def test_calibrate_bubble(p0, op, grid):
    const, spread = V.calibrate_amplitude(p0, op, V.bubble(p0, 1.0, grid))
    assert spread < 1e-4
    assert const == pytest.approx(C_BUBBLE_N3A2, rel=1e-5)


def test_calibrate_scaling(p0, op, grid):
    # C w solves the equation, so calibrating 2 w returns C / 2
    b = V.bubble(p0, 1.0, grid)
    c1, _ = V.calibrate_amplitude(p0, op, b)
    c2, _ = V.calibrate_amplitude(p0, op, b.with_values(2.0 * b.values))
    assert c2 == pytest.approx(c1 / 2.0, rel=1e-12)


def test_calibrate_non_solution(p0, op, grid):
    with pytest.raises(CalibrationError) as info:
        V.calibrate_amplitude(p0, op, V.gaussian_bump(grid, 0.0, 2.0))
    assert info.value.spread > 1e-3


def test_calibrate_requires_theta_zero(p16, op, grid):
    with pytest.raises(ParameterError):
        V.calibrate_amplitude(p16, op, V.gaussian_bump(grid))


def test_weighted_round_trip(p16, grid):
    u = V.gaussian_bump(grid, 0.5, 1.2)
    back = V.from_weighted(p16, V.to_weighted(p16, u))
    np.testing.assert_allclose(back.values, u.values, rtol=1e-14)


def test_weighted_identity_at_theta_zero(p0, grid):
    u = V.gaussian_bump(grid)
    assert V.to_weighted(p0, u) is u


@pytest.mark.parametrize("theta", [0.04, 0.09, 0.16, 0.22])
def test_transform_identity(theta, grid, rng):
    p = make_params(3, 2.0, theta)
    for _ in range(5):
        u = V.gaussian_bump(grid, rng.uniform(-3, 3), rng.uniform(0.7, 2.0))
        assert V.transform_identity_check(p, u) < 1e-5


def test_transform_identity_theta_zero(p0, grid):
    assert V.transform_identity_check(p0, V.gaussian_bump(grid)) == 0.0


def test_transform_identity_zero_field(p16, grid):
    with pytest.raises(DegenerateInputError):
        V.transform_identity_check(p16, grid.field(np.zeros(grid.n)))


@settings(max_examples=25, deadline=None)
@given(centre=st.floats(-3, 3), width=st.floats(0.6, 2.0), amp=st.floats(0.1, 5.0))
def test_divergence_identity_bumps(centre, width, amp):
    g = LogGrid.symmetric(12.0, 2048, 3)
    p = make_params(3, 2.0, 0.0)
    assert V.divergence_identity_check(p, V.gaussian_bump(g, centre, width, amp)) < 1e-8


def test_divergence_identity_bubble(p0, grid):
    # u^2 r^{N-2} is even in ln r for the bubble, so the end fluxes cancel
    b = V.bubble(p0, 1.0, grid)
    assert V.divergence_identity_check(p0, b) < 1e-6
    assert V.divergence_identity_check(p0, b, tail_correction=False) < 1e-6


def test_divergence_identity_slow_tail(p0, grid):
    u = grid.field(np.exp(-0.45 * grid.t - 0.1 * np.logaddexp(0.0, 2.0 * grid.t)))
    assert V.divergence_identity_check(p0, u) < 1e-8
    assert V.divergence_identity_check(p0, u, tail_correction=False) > 1e-3


def test_hardy_plain_bound(p0, grid, rng):
    bound = V.hardy_bound(p0)
    assert bound == pytest.approx(4.0)
    for _ in range(20):
        u = V.gaussian_bump(grid, rng.uniform(-3, 3), rng.uniform(0.5, 2.0), rng.choice([-1.0, 1.0]))
        assert V.hardy_check(p0, u) <= bound


def test_hardy_weighted_bound(grid, rng):
    p = make_params(3, 2.0, 0.16)
    assert p.beta == pytest.approx(0.2, rel=1e-14)
    bound = V.hardy_bound(p, weighted=True)
    assert bound == pytest.approx(100.0 / 9.0)
    for _ in range(20):
        v = V.gaussian_bump(grid, rng.uniform(-3, 3), rng.uniform(0.5, 2.0))
        assert V.weighted_hardy_check(p, v) <= bound


def test_hardy_extremal_trend(p0, grid):
    vals = [V.hardy_check(p0, V.hardy_extremal_family(p0, grid, e)) for e in (1e-1, 1e-2, 1e-3)]
    assert vals[0] < vals[1] < vals[2] < 4.0
    assert vals[2] > 3.0


def test_hardy_extremal_eps_range(p0, grid):
    with pytest.raises(ParameterError):
        V.hardy_extremal_family(p0, grid, 1.5)


def test_hls_extremal(p0, op):
    ratio, s = V.hls_extremal_check(p0, 1.0, op=op)
    assert s == pytest.approx(S_HLS_N3A2, rel=1e-12)
    assert abs(ratio - S_HLS_N3A2) / S_HLS_N3A2 < 1e-3


@pytest.mark.parametrize("k", [3, 11])
def test_hls_scale_invariance(p0, op, grid, k):
    r1, _ = V.hls_extremal_check(p0, 1.0, op=op)
    rk, _ = V.hls_extremal_check(p0, math.exp(k * grid.h), op=op)
    assert abs(rk - r1) / r1 < 1e-6


def test_hls_gaussian_strictly_below(p0, op, grid):
    ratio, s = V.hls_extremal_check(p0, op=op, f=V.gaussian_bump(grid, 0.0, 1.0))
    assert ratio <= 0.99 * s


def test_hls_tail_warning(p0):
    g = LogGrid.symmetric(3.0, 256, 3)
    with pytest.warns(TailWarning):
        V.hls_extremal_check(p0, 1.0, grid=g)


def test_hls_no_warning_default(p0, op):
    with warnings.catch_warnings():
        warnings.simplefilter("error", TailWarning)
        V.hls_extremal_check(p0, 1.0, op=op)


def test_kelvin_involution(p16, grid, rng):
    u = V.gaussian_bump(grid, rng.uniform(-2, 2), 1.3)
    kk = V.kelvin(p16, V.kelvin(p16, u))
    np.testing.assert_allclose(kk.values, u.values, rtol=1e-13, atol=0)


def test_kelvin_bubble_fixed_point(p0, grid):
    b = V.bubble(p0, 1.0, grid)
    assert np.max(np.abs(V.kelvin(p0, b).values - b.values)) < 1e-12


def test_decay_fit_pure_power(grid):
    u = grid.field(np.exp(-0.7 * grid.t))
    fit = V.decay_fit(u)
    assert fit.inner_exponent == pytest.approx(-0.7, abs=1e-10)
    assert fit.outer_exponent == pytest.approx(-0.7, abs=1e-10)
    assert fit.inner_r2 == pytest.approx(1.0, abs=1e-12)
    assert fit.valid


def test_decay_fit_model(p16, grid):
    fit = V.decay_fit(V.model_profile(p16, grid))
    assert fit.inner_exponent == pytest.approx(-0.2, rel=1e-3)
    assert fit.outer_exponent == pytest.approx(-0.8, rel=1e-3)
    assert fit.as_dict()["valid"] is True


def test_decay_fit_errors(grid):
    u = grid.field(np.exp(-grid.t))
    with pytest.raises(ParameterError):
        V.decay_fit(u, inner_window=(10, 11))
    with pytest.raises(FitError):
        V.decay_fit(grid.field(np.zeros(grid.n)))


def test_bound_check_model(p16, grid):
    cert = V.bound_check(p16, V.model_profile(p16, grid))
    assert cert.c_low == pytest.approx(1.0) and cert.c_high == pytest.approx(1.0)
    assert cert.valid


def test_bound_check_modulated(p16, grid):
    m = V.model_profile(p16, grid)
    mod = 2.0 + np.tanh(grid.t)
    cert = V.bound_check(p16, m.with_values(m.values * mod))
    assert cert.ratio == pytest.approx(3.0, rel=1e-3)
    assert cert.valid


def test_bound_check_violations(p16, grid):
    m = V.model_profile(p16, grid)
    vals = m.values.copy()
    vals[grid.n // 2] = -1.0
    cert = V.bound_check(p16, m.with_values(vals))
    assert cert.violations == 1 and not cert.valid


def test_bound_check_wrong_rate(p16, grid):
    cert = V.bound_check(p16, grid.field(np.exp(-0.5 * grid.t)))
    assert not cert.valid


def test_weighted_sup_ratio_model(p16, grid):
    ratio, argmax = V.weighted_sup_ratio(p16, V.model_profile(p16, grid))
    assert 1.0 <= ratio < 10.0


def test_check_record_json():
    rec = V.CheckRecord("x", {"a": 1}, 0.5, 1.0, True)
    d = json.loads(rec.to_json())
    assert d == {"name": "x", "inputs": {"a": 1}, "value": 0.5, "tolerance": 1.0, "pass": True}
