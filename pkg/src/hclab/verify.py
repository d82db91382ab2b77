"""Oracle profiles and numerical checks of identities, inequalities and asymptotics.

Checks that compare two integrals use plain trapezoid quadrature in t with
fourth-order finite differences, independent of the variational
discretization in :mod:`hclab.functionals`.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import stats
from scipy.special import expit

from .exceptions import (
    CalibrationError,
    DegenerateInputError,
    FitError,
    ParameterError,
    TailWarning,
)
from .functionals import hardy_operator
from .grid import LogGrid, RadialField, log_derivative, reflect
from .params import ProblemParams, sphere_area
from .riesz import RieszOperator

__all__ = [
    "CheckRecord",
    "DecayFit",
    "BoundCertificate",
    "bubble",
    "calibrate_amplitude",
    "to_weighted",
    "from_weighted",
    "transform_identity_check",
    "divergence_identity_check",
    "hardy_check",
    "weighted_hardy_check",
    "hardy_extremal_family",
    "hls_extremal_check",
    "kelvin",
    "model_profile",
    "decay_fit",
    "bound_check",
    "gaussian_bump",
]

CALIBRATION_MAX_SPREAD = 1e-3
EDGE_SKIP = 0.05
# log-amplitude variation below which a window counts as flat in decay fits
R2_FLOOR = 1e-3


@dataclass(frozen=True)
class CheckRecord:
    name: str
    inputs: dict
    value: float
    tolerance: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "inputs": self.inputs,
            "value": self.value,
            "tolerance": self.tolerance,
            "pass": bool(self.passed),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict())


def _trap(values: np.ndarray, h: float) -> float:
    return h * (float(np.sum(values)) - 0.5 * (values[0] + values[-1]))


def _radial_integral(grid: LogGrid, integrand_r: np.ndarray) -> float:
    """int f dx for radial f given at the nodes (trapezoid in t)."""
    return sphere_area(grid.dim) * _trap(integrand_r * np.exp(grid.dim * grid.t), grid.h)


def _du_dr(u: RadialField) -> np.ndarray:
    g = u.grid
    return np.exp(-g.t) * log_derivative(u.values, g.h, order=6)


# -- oracle profiles -------------------------------------------------------------


def bubble(params: ProblemParams, scale: float = 1.0, grid: Optional[LogGrid] = None) -> RadialField:
    """(scale / (scale^2 + r^2))^{(N-2)/2}, the theta = 0 extremal shape with unit amplitude."""
    if params.theta != 0.0:
        raise ParameterError(f"bubble is the theta = 0 profile, got theta={params.theta}")
    if not scale > 0:
        raise ParameterError(f"scale must be positive, got {scale}")
    grid = grid or LogGrid.symmetric(dim=params.N)
    c = params.half_dim
    t = grid.t
    ls = math.log(scale)
    # scale / (scale^2 + r^2) = exp(-ln(e^{ls} + e^{2t - ls})), stable over the window
    return grid.field(np.exp(-c * np.logaddexp(ls, 2.0 * t - ls)))


def gaussian_bump(grid: LogGrid, centre: float = 0.0, width: float = 1.0, amplitude: float = 1.0) -> RadialField:
    """amplitude * exp(-(ln r - centre)^2 / (2 width^2))."""
    return grid.field(amplitude * np.exp(-0.5 * ((grid.t - centre) / width) ** 2))


def model_profile(params: ProblemParams, grid: LogGrid) -> RadialField:
    """m(r) = r^{-beta} (1 + r^{2 - 4 beta/(N-2)})^{-(N-2)/2}."""
    c, b = params.half_dim, params.beta
    t = grid.t
    gamma = 2.0 - 4.0 * b / (params.N - 2)
    return grid.field(np.exp(-b * t - c * np.logaddexp(0.0, gamma * t)))


def calibrate_amplitude(
    params: ProblemParams, op: RieszOperator, w: RadialField, max_spread: float = CALIBRATION_MAX_SPREAD
) -> Tuple[float, float]:
    """Amplitude C making C*w solve the theta = 0 equation, and the ratio spread.

    rho = (-Delta w) / ((I_alpha * w^pbar) w^{pbar-1}) is evaluated on the
    central 60% of nodes; C = median(rho)^{1/(2 pbar - 2)}.
    """
    if params.theta != 0.0:
        raise ParameterError("amplitude calibration is defined for theta = 0")
    n = w.grid.n
    lo, hi = int(0.2 * n), n - int(0.2 * n)
    core = w.values[lo:hi]
    if np.any(core <= 0):
        raise DegenerateInputError("w must be positive on the interior")
    lap = hardy_operator(params, w).values[lo:hi]
    pot = op.apply(w.with_values(np.abs(w.values) ** params.pbar)).values[lo:hi]
    rho = lap / (pot * core ** (params.pbar - 1.0))
    med = float(np.median(rho))
    if not med > 0:
        raise CalibrationError("ratio is not positive; w is not a solution shape", math.nan, math.inf)
    spread = float((rho.max() - rho.min()) / med)
    const = med ** (1.0 / (2.0 * params.pbar - 2.0))
    if spread > max_spread:
        raise CalibrationError(
            f"amplitude ratio varies by {spread:.3e} > {max_spread:g}; profile is not a solution shape",
            const,
            spread,
        )
    return const, spread


# -- weighted variable -------------------------------------------------------------


def to_weighted(params: ProblemParams, u: RadialField) -> RadialField:
    """v = r^beta u."""
    if params.beta == 0.0:
        return u
    return u.with_values(u.values * np.exp(params.beta * u.grid.t))


def from_weighted(params: ProblemParams, v: RadialField) -> RadialField:
    """u = r^{-beta} v, the inverse of :func:`to_weighted`."""
    if params.beta == 0.0:
        return v
    return v.with_values(v.values / np.exp(params.beta * v.grid.t))


def plain_hardy_energy(params: ProblemParams, u: RadialField) -> float:
    du = _du_dr(u)
    r2 = np.exp(-2.0 * u.grid.t)
    return _radial_integral(u.grid, du * du - params.theta * u.values**2 * r2)


def weighted_dirichlet(params: ProblemParams, v: RadialField) -> float:
    """int |v'|^2 r^{-2 beta} dx."""
    dv = _du_dr(v)
    return _radial_integral(v.grid, dv * dv * np.exp(-2.0 * params.beta * v.grid.t))


def transform_identity_check(params: ProblemParams, u: RadialField) -> float:
    """Relative gap between the Hardy energy of u and the weighted Dirichlet energy of r^beta u."""
    lhs = plain_hardy_energy(params, u)
    if not lhs > 0:
        raise DegenerateInputError(f"Hardy energy must be positive, got {lhs}")
    if params.beta == 0.0:
        return 0.0
    rhs = weighted_dirichlet(params, to_weighted(params, u))
    return abs(lhs - rhs) / lhs


def divergence_identity_check(params: ProblemParams, u: RadialField, tail_correction: bool = True) -> float:
    """|(N-2) int u^2/r^2 dx + 2 int (u/r^2) x.grad u dx| / int u^2/r^2 dx.

    On a finite window the two terms add up to the flux
    omega [u^2 r^{N-2}] across the window ends; with ``tail_correction`` that
    flux is subtracted, which matters for slowly decaying fields.
    """
    g = u.grid
    x = u.values
    if not np.any(x):
        return 0.0
    w = np.exp((g.dim - 2) * g.t)
    base = sphere_area(g.dim) * _trap(x * x * w, g.h)
    cross = sphere_area(g.dim) * _trap(x * log_derivative(x, g.h, order=6) * w, g.h)
    total = (g.dim - 2) * base + 2.0 * cross
    if tail_correction:
        total -= sphere_area(g.dim) * (x[-1] ** 2 * w[-1] - x[0] ** 2 * w[0])
    return abs(total) / base


def hardy_check(params: ProblemParams, u: RadialField) -> float:
    """int u^2/r^2 dx / int |u'|^2 dx; at most (2/(N-2))^2."""
    g = u.grid
    num = _radial_integral(g, u.values**2 * np.exp(-2.0 * g.t))
    du = _du_dr(u)
    den = _radial_integral(g, du * du)
    if not den > 0:
        raise DegenerateInputError("int |u'|^2 dx vanishes")
    return num / den


def weighted_hardy_check(params: ProblemParams, v: RadialField) -> float:
    """int v^2 r^{-2beta-2} dx / int |v'|^2 r^{-2beta} dx; at most (2/(N-2beta-2))^2."""
    g = v.grid
    num = _radial_integral(g, v.values**2 * np.exp(-(2.0 * params.beta + 2.0) * g.t))
    den = weighted_dirichlet(params, v)
    if not den > 0:
        raise DegenerateInputError("weighted Dirichlet energy vanishes")
    return num / den


def hardy_bound(params: ProblemParams, weighted: bool = False) -> float:
    b = params.beta if weighted else 0.0
    return (2.0 / (params.N - 2.0 * b - 2.0)) ** 2


def hardy_extremal_family(params: ProblemParams, grid: LogGrid, eps: float, width: float = 0.5) -> RadialField:
    """r^{-(N-2)/2} on [eps, 1/eps] with smooth cutoffs of the given log-width."""
    if not 0 < eps < 1:
        raise ParameterError("eps must lie in (0, 1)")
    t = grid.t
    edge = -math.log(eps)
    cut = expit((t + edge) / width) * expit((edge - t) / width)
    return grid.field(np.exp(-params.half_dim * t) * cut)


def hls_extremal_check(
    params: ProblemParams,
    scale: float = 1.0,
    grid: Optional[LogGrid] = None,
    op: Optional[RieszOperator] = None,
    f: Optional[RadialField] = None,
) -> Tuple[float, float]:
    """Raw pairing ratio of f with itself over ||f||_p^2, p = 2N/(N+alpha), and S(N, alpha).

    Uses the extremal f = (scale^2 + r^2)^{-(N+alpha)/2} unless ``f`` is given.
    """
    if op is None:
        grid = grid or LogGrid.symmetric(dim=params.N)
        op = RieszOperator(params, grid)
    grid = op.grid
    N, a = params.N, params.alpha
    p = 2.0 * N / (N + a)
    if f is None:
        if not scale > 0:
            raise ParameterError("scale must be positive")
        f = grid.field(np.exp(-0.5 * (N + a) * np.logaddexp(2.0 * math.log(scale), 2.0 * grid.t)))
    fp = np.abs(f.values) ** p
    dens = fp * np.exp(N * grid.t)
    mass = sphere_area(grid.dim) * grid.h * float(np.sum(dens))
    # power-law tails beyond the window ends, integrated in closed form
    outside = sphere_area(grid.dim) * (dens[0] / N + dens[-1] / N)
    if mass > 0 and outside / mass > 1e-8:
        warnings.warn(f"{outside / mass:.2e} of the L^p mass lies outside the window", TailWarning, stacklevel=2)
    norm = mass ** (1.0 / p)
    ratio = op.pairing(f, f, normalized=False) / norm**2
    return ratio, params.s_hls


# -- Kelvin transform and asymptotics -----------------------------------------------


def kelvin(params: ProblemParams, u: RadialField) -> RadialField:
    """|x|^{2-N} u(x/|x|^2) on a symmetric grid."""
    g = u.grid
    rv = reflect(u)
    return rv.with_values(np.exp((2 - params.N) * g.t) * rv.values)


@dataclass(frozen=True)
class DecayFit:
    inner_exponent: float
    outer_exponent: float
    inner_window: Tuple[int, int]
    outer_window: Tuple[int, int]
    inner_r2: float
    outer_r2: float

    @property
    def valid(self) -> bool:
        return self.inner_r2 >= 0.999 and self.outer_r2 >= 0.999

    def as_dict(self) -> dict:
        d = asdict(self)
        d["valid"] = self.valid
        return d


def _fit_window(t: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    fit = stats.linregress(t, y)
    resid = y - (fit.intercept + fit.slope * t)
    ss_res = float(np.sum(resid**2))
    # variance floor: log-flat data (slope ~ 0) would otherwise have undefined r^2
    ss_tot = max(float(np.sum((y - y.mean()) ** 2)), y.size * R2_FLOOR**2)
    return float(fit.slope), 1.0 - ss_res / ss_tot


def decay_fit(
    u: RadialField,
    inner_window: Optional[Tuple[int, int]] = None,
    outer_window: Optional[Tuple[int, int]] = None,
) -> DecayFit:
    """Slopes of ln u against ln r on an inner and an outer node window.

    Defaults: nodes in [5%, 25%) and [75%, 95%) of the grid.
    """
    n = u.grid.n
    inner_window = inner_window or (int(EDGE_SKIP * n), int(0.25 * n))
    outer_window = outer_window or (n - int(0.25 * n), n - int(EDGE_SKIP * n))
    out = []
    for lo, hi in (inner_window, outer_window):
        if not 0 <= lo < hi <= n or hi - lo < 3:
            raise ParameterError(f"bad window ({lo}, {hi}) for n={n}")
        seg = u.values[lo:hi]
        if np.any(seg <= 0):
            raise FitError(f"field is not positive on window ({lo}, {hi})")
        out.append(_fit_window(u.grid.t[lo:hi], np.log(seg)))
    (si, ri), (so, ro) = out
    return DecayFit(si, so, tuple(inner_window), tuple(outer_window), ri, ro)


@dataclass(frozen=True)
class BoundCertificate:
    c_low: float
    c_high: float
    violations: int
    max_ratio: float = 10.0

    @property
    def ratio(self) -> float:
        return self.c_high / self.c_low if self.c_low > 0 else math.inf

    @property
    def valid(self) -> bool:
        return self.violations == 0 and self.c_low > 0 and self.ratio < self.max_ratio

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(ratio=self.ratio, valid=self.valid)
        return d


def bound_check(params: ProblemParams, u: RadialField, max_ratio: float = 10.0) -> BoundCertificate:
    """Two-sided comparison c m(r) <= u <= C m(r) with the model profile m, boundary 5% excluded."""
    n = u.grid.n
    k = int(EDGE_SKIP * n)
    sl = slice(k, n - k)
    m = model_profile(params, u.grid).values[sl]
    seg = u.values[sl]
    q = seg / m
    bad = int(np.sum(seg <= 0))
    c_low = float(q.min())
    return BoundCertificate(max(c_low, 0.0), float(q.max()), bad, max_ratio)


def weighted_sup_ratio(params: ProblemParams, u: RadialField) -> Tuple[float, int]:
    """max(v) / median(v over the inner half) for v = r^beta u, and the argmax node."""
    v = to_weighted(params, u).values
    inner = v[: u.grid.n // 2]
    med = float(np.median(inner))
    if not med > 0:
        return math.inf, int(np.argmax(v))
    return float(v.max()) / med, int(np.argmax(v))
