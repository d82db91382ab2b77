"""Minimization of the dilation-invariant quotient Phi(u) / D(u)^{1/pbar}.

The iteration works on phi = r^{(N-2)/2} u.  Each step moves along the
Sobolev-preconditioned descent direction

    d = -phi + (Q/D) K^{-1} N(phi),

which is -K^{-1} times the gradient (up to a positive factor), then clips to
nonnegative values, normalizes to D = 1 and recenters the peak at t = 0.
Armijo backtracking on the clipped point keeps the quotient non-increasing.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field as dc_field, replace
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import (
    ConcentrationAlarm,
    ConfigurationError,
    ContinuationError,
    ConvergenceError,
    DegenerateInputError,
    ParameterError,
)
from .functionals import ReducedProblem, from_phi, hardy_form, to_phi
from .grid import LogGrid, RadialField, log_derivative
from .params import ProblemParams
from .riesz import RieszOperator

__all__ = [
    "SolveOptions",
    "CompactnessDiag",
    "SolveResult",
    "default_init",
    "random_init",
    "minimize",
    "continuation",
    "monitor",
    "recenter",
]

EDGE_FRACTION = 0.1


@dataclass(frozen=True)
class SolveOptions:
    """Knobs of :func:`minimize` and :func:`continuation`.

    ``alarm_fraction`` is the share of Hardy energy in the outer 10% of
    nodes at either end that counts as concentration or vanishing.
    """

    step: float = 1.0
    max_iter: int = 400
    tol: float = 1e-6
    gauge: bool = True
    continuation_steps: int = 4
    seed: int = 0
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 40
    alarm_fraction: float = 0.2

    def __post_init__(self):
        if not self.step > 0:
            raise ParameterError(f"step must be > 0, got {self.step}")
        if not self.tol > 0:
            raise ParameterError(f"tol must be > 0, got {self.tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 0:
            raise ParameterError(f"max_iter must be a nonnegative integer, got {self.max_iter}")
        if int(self.continuation_steps) != self.continuation_steps or self.continuation_steps < 0:
            raise ParameterError(
                f"continuation_steps must be a nonnegative integer, got {self.continuation_steps}"
            )
        if not 0.0 < self.backtrack < 1.0:
            raise ParameterError("backtrack factor must lie in (0, 1)")
        if not 0.0 < self.alarm_fraction <= 1.0:
            raise ParameterError("alarm_fraction must lie in (0, 1]")


@dataclass(frozen=True)
class CompactnessDiag:
    """Tail shares of the Hardy-energy and nonlocal-term densities."""

    inner_energy_frac: float
    outer_energy_frac: float
    inner_nu_frac: float
    outer_nu_frac: float

    def as_dict(self) -> dict:
        return asdict(self)

    def max_energy_frac(self) -> float:
        return max(self.inner_energy_frac, self.outer_energy_frac)


@dataclass
class SolveResult:
    params: ProblemParams
    field: RadialField
    s_theta: float
    iterations: int
    residual: float
    converged: bool
    diag: CompactnessDiag
    trace: List[Tuple[int, float, float]] = dc_field(default_factory=list)
    gauge_shift: int = 0

    @property
    def grid(self) -> LogGrid:
        return self.field.grid

    def as_dict(self) -> dict:
        g = self.field.grid
        return {
            "params": self.params.as_dict(),
            "grid": {"t_min": g.t_min, "t_max": g.t_max, "n": g.n},
            "s_theta": self.s_theta,
            "iterations": self.iterations,
            "residual": self.residual,
            "converged": self.converged,
            "gauge_shift": self.gauge_shift,
            "diag": self.diag.as_dict(),
        }

    def to_json(self, path: Union[str, Path, None] = None) -> str:
        text = json.dumps(self.as_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text)
        return text

    def write_trace_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "rayleigh", "residual"])
            for it, rq, res in self.trace:
                w.writerow([it, f"{rq:.17g}", f"{res:.17g}"])


def _init_phi(params: ProblemParams, grid: LogGrid) -> np.ndarray:
    c = params.half_dim
    # r^{(N-2)/2} r^{-beta} (1 + r^{2 kappa/c})^{-c}, written stably in t
    return np.exp(-c * np.logaddexp(-params.kappa * grid.t / c, params.kappa * grid.t / c))


def default_init(params: ProblemParams, grid: LogGrid) -> RadialField:
    """r^{-beta} (1 + r^{2 - 4 beta/(N-2)})^{-(N-2)/2}, peaked (in r^{(N-2)/2} u) at r = 1."""
    if grid.dim != params.N:
        raise ConfigurationError(f"grid dimension {grid.dim} != N={params.N}")
    return grid.field(from_phi(params, grid, _init_phi(params, grid)))


def random_init(params: ProblemParams, grid: LogGrid, seed: int = 0) -> RadialField:
    """Default profile times a smooth positive random modulation."""
    rng = np.random.default_rng(seed)
    t = grid.t
    mod = np.ones_like(t)
    for k in range(1, 5):
        a, ph = rng.uniform(-0.15, 0.15), rng.uniform(0, 2 * np.pi)
        mod += a * np.sin(k * t / 3.0 + ph) / k
    return grid.field(default_init(params, grid).values * mod)


def _edge_fractions(density: np.ndarray) -> Tuple[float, float]:
    total = float(np.sum(density))
    if not total > 0:
        return 0.0, 0.0
    m = max(1, int(round(EDGE_FRACTION * density.shape[0])))
    inner = float(np.sum(density[:m])) / total
    outer = float(np.sum(density[-m:])) / total
    return min(max(inner, 0.0), 1.0), min(max(outer, 0.0), 1.0)


def _diag_from_phi(prob: ReducedProblem, x: np.ndarray) -> CompactnessDiag:
    p, g = prob.params, prob.grid
    if not np.any(x):
        return CompactnessDiag(0.0, 0.0, 0.0, 0.0)
    mass = p.half_dim**2 - p.theta
    dens = log_derivative(x, g.h) ** 2 + mass * x * x
    psi = np.abs(x) ** p.pbar
    nu = psi * prob.op.correlate(psi)
    ie, oe = _edge_fractions(dens)
    inu, onu = _edge_fractions(nu)
    return CompactnessDiag(ie, oe, inu, onu)


def monitor(params: ProblemParams, op: RieszOperator, u: RadialField) -> CompactnessDiag:
    """Shares of the Hardy-energy and nonlocal densities in the outer 10% of nodes at each end.

    Large inner shares signal concentration at the origin, large outer shares
    spreading to infinity.  A zero field gives all zeros.
    """
    prob = ReducedProblem(params, op)
    return _diag_from_phi(prob, to_phi(params, u.grid, u.values))


def _peak_offset(x: np.ndarray) -> float:
    """Index of the maximum of x refined by a parabola through three nodes."""
    i = int(np.argmax(x))
    if 0 < i < x.shape[0] - 1:
        a, b, c = x[i - 1], x[i], x[i + 1]
        den = a - 2.0 * b + c
        if den < 0:
            return i + 0.5 * (a - c) / den
    return float(i)


def _shift_phi(x: np.ndarray, k: int, lam: float) -> np.ndarray:
    """new[i] = x[i-k]; vacated nodes continue the boundary geometrically with ratio lam."""
    if k == 0:
        return x
    out = np.empty_like(x)
    if k > 0:
        out[k:] = x[:-k]
        out[:k] = x[0] * lam ** np.arange(k, 0, -1)
    else:
        m = -k
        out[:-m] = x[m:]
        out[-m:] = x[-1] * lam ** np.arange(1, m + 1)
    return out


def _gauge_shift(x: np.ndarray, grid: LogGrid) -> int:
    """Index shift that moves the peak to the node nearest t = 0 (0 if within one cell)."""
    centre = (grid.n - 1) / 2.0 if grid.is_symmetric else -grid.t_min / grid.h
    off = _peak_offset(x) - centre
    if abs(off) <= 1.0:
        return 0
    k = -int(round(off))
    limit = grid.n // 4 - 1
    return max(-limit, min(limit, k))


def recenter(params: ProblemParams, u: RadialField) -> RadialField:
    """Dilate u so that r^{(N-2)/2} u peaks within one cell of r = 1; idempotent."""
    g = u.grid
    x = to_phi(params, g, u.values)
    k = _gauge_shift(x, g)
    if k == 0:
        return u
    lam = hardy_form(params, g).tail_factor
    return g.field(from_phi(params, g, _shift_phi(x, k, lam)))


def _normalize(prob: ReducedProblem, x: np.ndarray) -> Tuple[np.ndarray, dict]:
    st = prob.evaluate(x)
    s = st["d"] ** (-0.5 / prob.params.pbar)
    x = x * s
    return x, prob.evaluate(x)


def _quotient(prob: ReducedProblem, st: dict) -> float:
    return prob.params.omega * st["q"] / st["d"] ** (1.0 / prob.params.pbar)


def minimize(
    params: ProblemParams,
    op: RieszOperator,
    init: Optional[RadialField] = None,
    opts: Optional[SolveOptions] = None,
) -> SolveResult:
    """Minimize the quotient from ``init`` (default profile if None).

    Returns a :class:`SolveResult` with D(field) = 1.  Raises
    :class:`ConvergenceError` (result attached) when ``max_iter`` steps do not
    reach ``tol`` and :class:`ConcentrationAlarm` when an iterate piles more
    than ``alarm_fraction`` of its energy into either edge region.
    """
    opts = opts or SolveOptions()
    grid = op.grid
    if op.params.N != params.N or op.params.alpha != params.alpha:
        raise ConfigurationError("operator was built for different (N, alpha)")
    if init is None:
        init = default_init(params, grid)
    if init.grid != grid:
        raise ConfigurationError("init lives on a different grid than the operator")
    if np.any(init.values < 0):
        raise ParameterError("init must be nonnegative")
    prob = ReducedProblem(params, op)
    form = prob.form
    lam_tail = form.tail_factor
    x = to_phi(params, grid, init.values)
    if not np.any(x):
        raise DegenerateInputError("init is identically zero")
    st0 = prob.evaluate(x)
    if not st0["d"] > 0:
        raise DegenerateInputError("D(init) = 0")
    x, st = _normalize(prob, x)
    rq = _quotient(prob, st)
    _, res = prob.residual(st)
    trace: List[Tuple[int, float, float]] = []
    total_shift = 0
    it = 0
    converged = res <= opts.tol

    def _result(conv: bool) -> SolveResult:
        diag = _diag_from_phi(prob, x)
        field = grid.field(from_phi(params, grid, x))
        return SolveResult(params, field, prob.params.omega * st["q"], it, res, conv, diag,
                           trace, total_shift)

    while not converged and it < opts.max_iter:
        lam = st["q"] / st["d"]
        d = -x + lam * form.solve(st["nvec"])
        kd = form.matvec(d)
        # directional derivative of the quotient along d (negative unless d = 0)
        slope = -2.0 * params.omega * st["d"] ** (-1.0 / params.pbar) * float(np.dot(d, kd))
        if not slope < 0:
            break
        s = opts.step
        accepted = None
        for _ in range(opts.max_backtracks):
            y = np.maximum(x + s * d, 0.0)
            if np.any(y):
                try:
                    sty = prob.evaluate(y)
                    # change of the quotient, formed from differences (see ReducedProblem.log_ratio)
                    delta = rq * math.expm1(prob.log_ratio(sty, st))
                except DegenerateInputError:
                    delta = math.inf
                if delta <= opts.armijo_c * s * slope:
                    accepted = y
                    break
            s *= opts.backtrack
        it += 1
        if accepted is None:
            break
        rq += delta
        x, st = _normalize(prob, accepted)
        if opts.gauge:
            k = _gauge_shift(x, grid)
            if k:
                xs, sts = _normalize(prob, _shift_phi(x, k, lam_tail))
                delta = rq * math.expm1(prob.log_ratio(sts, st))
                # keep the dilation only if it does not raise the quotient
                if delta <= 0:
                    x, st, rq = xs, sts, rq + delta
                    total_shift += k
        _, res = prob.residual(st)
        trace.append((it, rq, res))
        diag = _diag_from_phi(prob, x)
        if diag.max_energy_frac() > opts.alarm_fraction:
            raise ConcentrationAlarm(
                f"energy fraction {diag.max_energy_frac():.3f} at the window edge exceeds "
                f"{opts.alarm_fraction} after {it} iterations; widen the window",
                _result(False),
            )
        converged = res <= opts.tol

    result = _result(converged)
    if not converged:
        raise ConvergenceError(
            f"relative residual {res:.3e} > tol {opts.tol:g} after {it} iterations", result
        )
    return result


def continuation(
    params_target: ProblemParams,
    op_factory: Callable[[ProblemParams], RieszOperator],
    opts: Optional[SolveOptions] = None,
    init: Optional[RadialField] = None,
) -> List[SolveResult]:
    """Solve along theta = 0, target/k, ..., target with warm starts.

    ``opts.continuation_steps = 0`` solves directly at the target.  A failing
    leg raises :class:`ContinuationError` carrying the legs solved so far.
    """
    opts = opts or SolveOptions()
    k = int(opts.continuation_steps)
    thetas = [params_target.theta] if k == 0 else list(np.linspace(0.0, params_target.theta, k + 1))
    results: List[SolveResult] = []
    current = init
    for th in thetas:
        p = params_target.with_theta(float(th))
        op = op_factory(p)
        try:
            res = minimize(p, op, current, opts)
        except ConvergenceError as exc:
            raise ContinuationError(
                f"continuation leg theta={th:g} failed: {exc}", results, exc
            ) from exc
        results.append(res)
        current = res.field
    return results
