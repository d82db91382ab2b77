from __future__ import annotations

import math
import warnings

import mpmath as mp
import pytest
from hypothesis import given, settings, strategies as st

from hclab.exceptions import InputError, ParameterError
from hclab.params import make_params, riesz_normalization, sharp_hls_constant, sphere_area

mp.mp.dps = 30


def _hls_oracle(N, a):
    a = mp.mpf(a)
    return float(
        mp.pi ** ((N - a) / 2) * mp.gamma(a / 2) / mp.gamma((N + a) / 2)
        * (mp.gamma(mp.mpf(N) / 2) / mp.gamma(N)) ** (-a / N)
    )


def _riesz_oracle(N, a):
    a = mp.mpf(a)
    return float(mp.gamma((N - a) / 2) / (mp.gamma(a / 2) * mp.pi ** (mp.mpf(N) / 2) * 2**a))


def test_theta_016_constants():
    p = make_params(3, 2.0, 0.16)
    assert p.pbar == 5.0
    assert p.beta == pytest.approx(0.2, rel=1e-14)
    assert p.outer_exponent == pytest.approx(0.8, rel=1e-14)
    assert p.kappa == pytest.approx(0.3, rel=1e-14)


def test_theta_zero_gives_beta_zero():
    assert make_params(3, 2.0, 0.0).beta == 0.0


@pytest.mark.parametrize("theta", [0.25, 0.3, -0.01])
def test_theta_out_of_range_names_bound(theta):
    with pytest.raises(ParameterError, match="theta"):
        make_params(3, 2.0, theta)


def test_threshold_message_mentions_bound():
    with pytest.raises(ParameterError, match=r"\(N-2\)\^2/4"):
        make_params(3, 2.0, 0.25)


@pytest.mark.parametrize("N,alpha", [(3, 0.0), (3, 3.0), (5, 1.0), (6, 2.0), (3, -1.0)])
def test_alpha_out_of_range(N, alpha):
    with pytest.raises(ParameterError, match="alpha"):
        make_params(N, alpha, 0.0)


def test_dimension_below_three():
    with pytest.raises(ParameterError, match="N >= 3"):
        make_params(2, 1.0, 0.0)


@pytest.mark.parametrize("bad", [math.nan, math.inf])
def test_non_finite_input(bad):
    with pytest.raises(InputError):
        make_params(3, bad, 0.0)
    with pytest.raises(InputError):
        make_params(3, 2.0, bad)


def test_non_integer_dimension():
    with pytest.raises(InputError):
        make_params(3.5, 2.0, 0.0)


def test_small_alpha_warns_not_raises():
    with pytest.warns(RuntimeWarning, match="reduced-accuracy"):
        p = make_params(3, 0.3, 0.0)
    assert p.alpha == 0.3


def test_hls_constant_3_2():
    # independent high-precision Gamma evaluation: 2.294010703541599...
    assert sharp_hls_constant(3, 2.0) == pytest.approx(2.294010703541599, rel=1e-13)
    assert sharp_hls_constant(3, 2.0) == pytest.approx(2.29399, rel=1e-4)


@pytest.mark.parametrize("N,alpha", [(4, 2.0), (3, 1.0), (5, 2.5), (7, 4.5), (3, 0.7)])
def test_hls_constant_against_oracle(N, alpha):
    assert sharp_hls_constant(N, alpha) == pytest.approx(_hls_oracle(N, alpha), rel=1e-12)


def test_riesz_normalization_newtonian():
    assert riesz_normalization(3, 2.0) * 4 * math.pi == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("N,alpha", [(5, 3.0), (4, 1.5), (3, 0.7), (8, 6.1)])
def test_riesz_normalization_against_oracle(N, alpha):
    assert riesz_normalization(N, alpha) == pytest.approx(_riesz_oracle(N, alpha), rel=1e-12)


def test_sphere_area():
    assert sphere_area(3) == pytest.approx(4 * math.pi, rel=1e-15)
    assert sphere_area(4) == pytest.approx(2 * math.pi**2, rel=1e-15)


@st.composite
def admissible(draw):
    N = draw(st.integers(3, 9))
    lo = max(N - 4, 0.5)
    alpha = draw(st.floats(lo + 1e-6, N - 1e-6))
    frac = draw(st.floats(0.0, 0.999))
    return N, alpha, frac * 0.25 * (N - 2) ** 2


@settings(max_examples=200, deadline=None)
@given(admissible())
def test_beta_solves_quadratic(args):
    N, alpha, theta = args
    p = make_params(N, alpha, theta)
    assert abs((N - 2) * p.beta - p.beta**2 - theta) <= 1e-13 * max(1.0, theta)
    assert 0.0 <= p.beta < 0.5 * (N - 2)
    assert p.pbar > 2.0
    assert p.c_riesz > 0


@settings(max_examples=100, deadline=None)
@given(st.integers(3, 12), st.floats(0.5, 0.999))
def test_hls_positive_finite(N, frac):
    s = sharp_hls_constant(N, frac * N)
    assert 0 < s < math.inf


def test_with_theta_and_dict():
    p = make_params(4, 1.5, 0.0).with_theta(0.5)
    assert p.theta == 0.5 and p.N == 4
    d = p.as_dict()
    assert set(d) == {"N", "alpha", "theta", "pbar", "beta", "omega", "c_riesz", "s_hls"}


def test_params_frozen():
    p = make_params(3, 2.0, 0.0)
    with pytest.raises(Exception):
        p.theta = 0.1
