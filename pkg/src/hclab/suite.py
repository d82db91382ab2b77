"""Named groups of verification checks producing :class:`CheckRecord` lists."""

from __future__ import annotations

import math
from typing import Callable, Dict, List

import numpy as np

from .exceptions import CalibrationError, ConvergenceError, HclabError
from .functionals import dterm, el_residual, rayleigh, rescale_to_solution
from .grid import LogGrid, interpolate
from .params import ProblemParams
from .riesz import RieszOperator
from .solver import SolveOptions, continuation, minimize
from . import verify as V

__all__ = ["SUITES", "run_suite", "asymptotic_theta"]


def asymptotic_theta(params: ProblemParams) -> float:
    """Hardy strength used by the asymptotic checks: the configured one, else 0.64 of the threshold."""
    return params.theta if params.theta > 0 else 0.64 * params.hardy_threshold


def _rec(name, inputs, value, tol, passed=None) -> V.CheckRecord:
    value = float(value)
    ok = (value <= tol) if passed is None else bool(passed)
    return V.CheckRecord(name, inputs, value, float(tol), ok and math.isfinite(value))


def _random_bumps(grid: LogGrid, rng: np.random.Generator, count: int, signed: bool = False):
    out = []
    for _ in range(count):
        vals = np.zeros(grid.n)
        for _ in range(rng.integers(1, 4)):
            amp = rng.uniform(0.2, 1.0) * (rng.choice([-1.0, 1.0]) if signed else 1.0)
            vals += V.gaussian_bump(grid, rng.uniform(-3, 3), rng.uniform(0.7, 2.0), amp).values
        out.append(grid.field(vals))
    return out


def identities(params: ProblemParams, grid: LogGrid, opts: SolveOptions) -> List[V.CheckRecord]:
    recs = []
    rng = np.random.default_rng(opts.seed)
    bumps = _random_bumps(grid, rng, 20)
    for frac in (0.16, 0.36, 0.64, 0.88):
        q = params.with_theta(frac * params.hardy_threshold)
        gap = max(V.transform_identity_check(q, u) for u in bumps)
        recs.append(_rec("transform_identity", {"theta": q.theta, "fields": len(bumps)}, gap, 1e-5))
    gap = max(V.divergence_identity_check(params, u) for u in bumps)
    recs.append(_rec("divergence_identity_bumps", {"fields": len(bumps)}, gap, 1e-8))
    p0 = params.with_theta(0.0)
    b = V.bubble(p0, 1.0, grid)
    recs.append(_rec("divergence_identity_bubble", {"tail_correction": True},
                     V.divergence_identity_check(p0, b), 1e-6))
    if grid.is_symmetric:
        u = bumps[0]
        kk = V.kelvin(params, V.kelvin(params, u))
        recs.append(_rec("kelvin_involution", {},
                         np.max(np.abs(kk.values - u.values)) / np.max(np.abs(u.values)), 1e-13))
        recs.append(_rec("kelvin_bubble_fixed_point", {},
                         np.max(np.abs(V.kelvin(p0, b).values - b.values)), 1e-12))
        op = RieszOperator(params, grid)
        d0 = dterm(params, op, u)
        recs.append(_rec("kelvin_dterm_isometry", {},
                         abs(dterm(params, op, V.kelvin(params, u)) - d0) / d0, 1e-7))
    return recs


def oracles(params: ProblemParams, grid: LogGrid, opts: SolveOptions) -> List[V.CheckRecord]:
    recs = []
    p0 = params.with_theta(0.0)
    op = RieszOperator(p0, grid)
    ratio, s = V.hls_extremal_check(p0, 1.0, op=op)
    recs.append(_rec("hls_sharp_constant", {"scale": 1.0, "S": s}, abs(ratio - s) / s, 1e-3))
    k = 7
    ratio_k, _ = V.hls_extremal_check(p0, math.exp(k * grid.h), op=op)
    recs.append(_rec("hls_scale_invariance", {"shift_nodes": k}, abs(ratio_k - ratio) / ratio, 1e-6))
    ratio_g, _ = V.hls_extremal_check(p0, op=op, f=V.gaussian_bump(grid, 0.0, 1.0))
    margin = 1.0 - ratio_g / s
    recs.append(_rec("hls_strict_below_gaussian", {"margin_required": 0.01}, margin, 0.01,
                     passed=margin >= 0.01))
    b = V.bubble(p0, 1.0, grid)
    try:
        const, spread = V.calibrate_amplitude(p0, op, b)
    except CalibrationError as exc:
        const, spread = exc.constant, exc.spread
    recs.append(_rec("bubble_calibration_spread", {"amplitude": const}, spread, 1e-4))
    _, rel = el_residual(p0, op, b, interior=0.05)
    recs.append(_rec("bubble_residual", {}, rel, 1e-5))
    ref = rayleigh(p0, op, b).rayleigh
    try:
        res = minimize(p0, op, None, opts)
        gap, conv = abs(res.s_theta - ref) / ref, True
    except ConvergenceError as exc:
        gap, conv = math.inf, False
    recs.append(_rec("theta0_minimizer_matches_bubble", {"converged": conv, "reference": ref},
                     gap, 1e-4))
    psi = b.values ** p0.pbar
    f = b.with_values(psi)
    dense = op.apply_dense(f).values
    fast = op.apply_fft(f).values
    recs.append(_rec("riesz_dense_fft_agreement", {"n": grid.n},
                     np.max(np.abs(dense - fast)) / np.max(np.abs(dense)), 1e-7))
    g2 = V.gaussian_bump(grid, 1.0, 0.8)
    a, c = op.pairing(f, g2), op.pairing(g2, f)
    recs.append(_rec("riesz_self_adjoint", {}, abs(a - c) / abs(a), 1e-10))
    if p0.N == 3 and p0.alpha == 2.0:
        from scipy.special import erfc

        delta = 0.015
        ball = grid.field(0.5 * erfc(grid.t / delta))
        pot = op.apply(ball)
        near = float(pot.values[0])
        far = float(interpolate(pot, 2.0))
        recs.append(_rec("ball_potential_centre", {"delta": delta}, abs(near - 0.5) / 0.5, 1e-3))
        recs.append(_rec("ball_potential_r2", {"delta": delta}, abs(far - 1.0 / 6.0) * 6.0, 1e-3))
    return recs


def _solve_asym(params: ProblemParams, grid: LogGrid, opts: SolveOptions):
    q = params.with_theta(asymptotic_theta(params))
    op = RieszOperator(q, grid)
    res = minimize(q, op, None, opts)
    return q, op, res


def asymptotics(params: ProblemParams, grid: LogGrid, opts: SolveOptions) -> List[V.CheckRecord]:
    recs = []
    try:
        q, op, res = _solve_asym(params, grid, opts)
    except HclabError as exc:
        return [_rec("asymptotic_solve", {"error": str(exc)}, math.inf, opts.tol)]
    inputs = {"theta": q.theta, "beta": q.beta}
    recs.append(_rec("asymptotic_solve", inputs, res.residual, opts.tol))
    fit = V.decay_fit(res.field)
    for side, got, want, r2 in (
        ("inner", fit.inner_exponent, -q.beta, fit.inner_r2),
        ("outer", fit.outer_exponent, -q.outer_exponent, fit.outer_r2),
    ):
        err = abs(got - want) / max(abs(want), 0.2)
        recs.append(_rec(f"decay_{side}_exponent", {**inputs, "slope": got, "expected": want, "r2": r2},
                         err, 0.05, passed=err <= 0.05 and r2 >= 0.999))
    cert = V.bound_check(q, res.field)
    recs.append(_rec("two_sided_bound", cert.as_dict(), cert.ratio, 10.0, passed=cert.valid))
    w = rescale_to_solution(q, res.field, res.s_theta, op)
    if grid.is_symmetric:
        _, rel = el_residual(q, op, V.kelvin(q, w), multiplier=1.0, interior=0.05)
        recs.append(_rec("kelvin_covariance", inputs, rel, 5e-5))
    ratio, argmax = V.weighted_sup_ratio(q, res.field)
    recs.append(_rec("weighted_profile_bounded", {**inputs, "argmax_node": argmax}, ratio, 10.0,
                     passed=ratio < 10.0))
    v = V.to_weighted(q, res.field).values
    k = int(0.05 * grid.n)
    rises = float(np.max(np.diff(v[k:]), initial=0.0)) / float(np.max(v))
    recs.append(_rec("weighted_profile_monotone", inputs, rises, 1e-12))
    return recs


def inequalities(params: ProblemParams, grid: LogGrid, opts: SolveOptions) -> List[V.CheckRecord]:
    recs = []
    rng = np.random.default_rng(opts.seed + 1)
    fields = _random_bumps(grid, rng, 200, signed=True)
    bound = V.hardy_bound(params)
    worst = max(V.hardy_check(params, u) for u in fields)
    recs.append(_rec("hardy_plain", {"fields": 200, "bound": bound}, worst, bound, passed=worst <= bound))
    q = params.with_theta(asymptotic_theta(params))
    wbound = V.hardy_bound(q, weighted=True)
    worst_w = max(V.weighted_hardy_check(q, u) for u in fields)
    recs.append(_rec("hardy_weighted", {"fields": 200, "beta": q.beta, "bound": wbound},
                     worst_w, wbound, passed=worst_w <= wbound))
    trend = [V.hardy_check(params, V.hardy_extremal_family(params, grid, e)) for e in (1e-1, 1e-2, 1e-3)]
    mono = all(a < b for a, b in zip(trend, trend[1:])) and trend[-1] < bound
    recs.append(_rec("hardy_extremal_trend", {"ratios": trend, "bound": bound}, bound - trend[-1], bound,
                     passed=mono))
    ramp = SolveOptions(**{**opts.__dict__, "continuation_steps": 4})
    try:
        results = continuation(q, lambda p: RieszOperator(p, grid), ramp)
        vals = [r.s_theta for r in results]
        ok = all(a > b for a, b in zip(vals, vals[1:]))
    except HclabError:
        vals, ok = [], False
    recs.append(_rec("s_theta_monotone", {"s_theta": vals}, len(vals), 5, passed=ok and len(vals) == 5))
    return recs


SUITES: Dict[str, Callable] = {
    "identities": identities,
    "oracles": oracles,
    "asymptotics": asymptotics,
    "inequalities": inequalities,
}


def run_suite(selector: str, params: ProblemParams, grid: LogGrid, opts: SolveOptions) -> List[V.CheckRecord]:
    """Run one named group, or all of them in a fixed order for ``"all"``."""
    if selector == "all":
        names = list(SUITES)
    elif selector in SUITES:
        names = [selector]
    else:
        raise KeyError(f"unknown suite {selector!r}; choose from all, {', '.join(SUITES)}")
    out: List[V.CheckRecord] = []
    for name in names:
        try:
            out.extend(SUITES[name](params, grid, opts))
        except (HclabError, ArithmeticError, ValueError) as exc:
            out.append(_rec(f"{name}_error", {"error": str(exc)}, math.inf, 0.0, passed=False))
    return out
