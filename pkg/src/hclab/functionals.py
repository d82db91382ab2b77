"""Hardy energy, nonlocal term, Rayleigh quotient and Euler-Lagrange residual.

Everything is evaluated in the variable phi = r^{(N-2)/2} u, in which the
Hardy energy becomes

    Phi(u) = omega * int (phi_t^2 + kappa^2 phi^2) dt,   kappa^2 = ((N-2)/2)^2 - theta,

and the nonlocal term D(u) = omega^2 h^2 psi.B psi with psi = |phi|^pbar
(see :mod:`hclab.riesz`).  Both are dilation invariant (translation invariant
in t), so the discrete quotient inherits the critical scaling exactly.

The window is closed by letting phi continue outside it as the decaying
lattice exponential that solves the discrete linear equation, i.e. the power
laws r^{-beta} and r^{-(N-2-beta)} of solutions.  The resulting quadratic form
is symmetric positive definite and its gradient *is* the discrete operator
-Delta - theta/r^2, so minimizers have zero discrete residual.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import solveh_banded

from .exceptions import (
    ConfigurationError,
    DegenerateInputError,
    NumericError,
    PreconditionError,
    TailWarning,
)
from .grid import LogGrid, RadialField
from .params import ProblemParams
from .riesz import RieszOperator

__all__ = [
    "HardyForm",
    "hardy_form",
    "EnergyReport",
    "phi",
    "inverse_square_integral",
    "hardy_operator",
    "dterm",
    "rayleigh",
    "rayleigh_gradient",
    "el_residual",
    "rescale_to_solution",
    "ReducedProblem",
    "to_phi",
    "from_phi",
]

TAIL_WARN_FRACTION = 1e-4


def to_phi(params: ProblemParams, grid: LogGrid, u: np.ndarray) -> np.ndarray:
    return np.exp(params.half_dim * grid.t) * u


def from_phi(params: ProblemParams, grid: LogGrid, phi_values: np.ndarray) -> np.ndarray:
    return np.exp(-params.half_dim * grid.t) * phi_values


def _tail_ratio(h: float, rate: float) -> float:
    """Half-log of the decay factor per node for the five-point stencil.

    Solves (y-1)(7-y) = 3 h^2 rate^2 with y = cosh(x); the tail is phi ~ exp(-x k).
    """
    s = 3.0 * (h * rate) ** 2
    y_minus_1 = s / (3.0 + math.sqrt(9.0 - s))
    return math.log1p(y_minus_1 + math.sqrt(y_minus_1 * (y_minus_1 + 2.0)))


class HardyForm:
    """Pentadiagonal SPD matrix K with Phi(u) = omega * phi.K phi.

    ``tail_rate`` sets the exponential decay (in t) of the implied continuation
    of phi outside the window; it defaults to ``params.kappa``.  The mass
    coefficient is always ((N-2)/2)^2 - theta, so for a fixed ``tail_rate`` the
    form is affine in theta.
    """

    def __init__(self, params: ProblemParams, grid: LogGrid, tail_rate: Optional[float] = None):
        if grid.dim != params.N:
            raise ConfigurationError(f"grid dimension {grid.dim} != N={params.N}")
        self.params = params
        self.grid = grid
        n, h = grid.n, grid.h
        rate = params.kappa if tail_rate is None else float(tail_rate)
        self.tail_rate = rate
        mass = params.half_dim**2 - params.theta
        x = _tail_ratio(h, rate)
        lam = math.exp(-x)
        self.tail_factor = lam
        # exterior sums of phi^2 per unit boundary value squared
        self._tail_sq = 1.0 / math.expm1(2.0 * x) if x > 0 else math.inf
        inv = 1.0 / (12.0 * h)

        diag = np.full(n, 30.0 * inv + h * mass)
        diag[0] = diag[-1] = 15.0 * inv + h * mass
        diag[1] = diag[-2] = 31.0 * inv + h * mass
        off1 = np.full(n - 1, -16.0 * inv)
        off2 = np.full(n - 2, 1.0 * inv)
        # closed-form exterior contributions
        edge = (16.0 * math.tanh(0.5 * x) - 1.0) * inv + h * mass * self._tail_sq
        diag[0] += edge
        diag[-1] += edge
        diag[1] -= inv
        diag[-2] -= inv
        off1[0] += lam * inv
        off1[-1] += lam * inv
        self.diag, self.off1, self.off2 = diag, off1, off2
        ab = np.zeros((3, n))
        ab[2] = diag
        ab[1, 1:] = off1
        ab[0, 2:] = off2
        self._banded = ab

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[:-1] += self.off1 * x[1:]
        y[1:] += self.off1 * x[:-1]
        y[:-2] += self.off2 * x[2:]
        y[2:] += self.off2 * x[:-2]
        return y

    def solve(self, b: np.ndarray) -> np.ndarray:
        return solveh_banded(self._banded, b, check_finite=False)

    def quadratic(self, x: np.ndarray) -> float:
        return float(np.dot(x, self.matvec(x)))

    def tail_fraction(self, x: np.ndarray) -> float:
        """Share of phi.K phi carried by the boundary cells and the analytic tails."""
        kx = self.matvec(x)
        total = float(np.dot(x, kx))
        if total <= 0:
            return 0.0
        edge = x[:2] @ kx[:2] + x[-2:] @ kx[-2:]
        return float(abs(edge) / total) if math.isfinite(edge) else 1.0

    def exterior_square_sum(self, x: np.ndarray) -> float:
        """h * sum of phi^2 over the implied exterior nodes."""
        return self.grid.h * self._tail_sq * (x[0] ** 2 + x[-1] ** 2)

    def full_matrix(self) -> np.ndarray:
        n = self.grid.n
        m = np.diag(self.diag)
        m += np.diag(self.off1, 1) + np.diag(self.off1, -1)
        m += np.diag(self.off2, 2) + np.diag(self.off2, -2)
        return m


@lru_cache(maxsize=32)
def hardy_form(params: ProblemParams, grid: LogGrid, tail_rate: Optional[float] = None) -> HardyForm:
    return HardyForm(params, grid, tail_rate)


def _check_grid(params: ProblemParams, u: RadialField) -> None:
    if u.grid.dim != params.N:
        raise ConfigurationError(f"field lives in dimension {u.grid.dim}, params have N={params.N}")


def phi(params: ProblemParams, u: RadialField, tail_rate: Optional[float] = None) -> float:
    """Hardy energy int (|grad u|^2 - theta u^2/|x|^2) dx.

    Warns with :class:`TailWarning` when more than 1e-4 of the energy sits in
    the boundary cells, where the result depends on the tail continuation.
    """
    _check_grid(params, u)
    form = hardy_form(params, u.grid, tail_rate)
    x = to_phi(params, u.grid, u.values)
    frac = form.tail_fraction(x)
    if frac > TAIL_WARN_FRACTION:
        warnings.warn(
            f"{frac:.2e} of the Hardy energy sits in the boundary cells; widen the window",
            TailWarning,
            stacklevel=2,
        )
    return params.omega * form.quadratic(x)


def inverse_square_integral(
    params: ProblemParams, u: RadialField, tail_rate: Optional[float] = None
) -> float:
    """int u^2/|x|^2 dx with the same exterior continuation as :func:`phi`."""
    _check_grid(params, u)
    form = hardy_form(params, u.grid, tail_rate)
    x = to_phi(params, u.grid, u.values)
    return params.omega * (u.grid.h * float(np.dot(x, x)) + form.exterior_square_sum(x))


def hardy_operator(params: ProblemParams, u: RadialField) -> RadialField:
    """Discrete -Delta u - theta u / r^2, the L^2(dx) gradient of :func:`phi` halved."""
    _check_grid(params, u)
    g = u.grid
    form = hardy_form(params, g)
    kx = form.matvec(to_phi(params, g, u.values))
    return u.with_values(np.exp(-(params.half_dim + 2.0) * g.t) * kx / g.h)


def _psi(params: ProblemParams, x: np.ndarray) -> np.ndarray:
    with np.errstate(over="raise", invalid="raise"):
        try:
            return np.abs(x) ** params.pbar
        except FloatingPointError as exc:
            raise NumericError(
                "overflow in |u|^pbar; rescale the field (the quotient is scale invariant)"
            ) from exc


def dterm(params: ProblemParams, op: RieszOperator, u: RadialField) -> float:
    """D(u) = int (I_alpha * |u|^pbar) |u|^pbar dx."""
    _check_grid(params, u)
    x = to_phi(params, u.grid, u.values)
    psi = _psi(params, x)
    val = (params.omega * u.grid.h) ** 2 * float(np.dot(psi, op.correlate(psi)))
    if not math.isfinite(val):
        raise NumericError("D(u) overflowed; rescale the field")
    return max(val, 0.0)


@dataclass(frozen=True)
class EnergyReport:
    phi: float
    dterm: float
    rayleigh: float
    el_residual_norm: float

    def as_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.as_dict())


class ReducedProblem:
    """The discrete quotient in phi-coordinates, shared by the functionals and the solver."""

    def __init__(self, params: ProblemParams, op: RieszOperator, form: Optional[HardyForm] = None):
        if op.grid.dim != params.N or op.params.alpha != params.alpha:
            raise ConfigurationError("operator was built for different parameters")
        self.params = params
        self.op = op
        self.grid = op.grid
        self.form = form if form is not None else hardy_form(params, op.grid)
        self._d_scale = (params.omega * op.grid.h) ** 2
        t = self.grid.t
        self._res_weight = np.exp(-2.0 * t)

    def evaluate(self, x: np.ndarray) -> dict:
        p = self.params
        kx = self.form.matvec(x)
        q = float(np.dot(x, kx))
        psi = _psi(p, x)
        bpsi = self.op.correlate(psi)
        d = self._d_scale * float(np.dot(psi, bpsi))
        if not d > 0:
            raise DegenerateInputError("D(u) = 0: the quotient is undefined")
        ax = np.abs(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            sgn_pow = np.where(ax > 0, np.sign(x) * ax ** (p.pbar - 1.0), 0.0)
        nvec = self._d_scale * bpsi * sgn_pow
        return {"kx": kx, "q": q, "d": d, "nvec": nvec, "psi": psi, "bpsi": bpsi, "x": x}

    def log_ratio(self, st_new: dict, st_old: dict) -> float:
        """ln R(new) - ln R(old) from differences, free of the cancellation in Q itself.

        Q and D are each summed from terms much larger than their value, so
        subtracting two evaluated quotients loses ~1e-11 relative accuracy;
        differences of the quadratic forms are formed directly instead.
        """
        dx = st_new["x"] - st_old["x"]
        dq = float(np.dot(dx, st_new["kx"] + st_old["kx"]))
        dpsi = st_new["psi"] - st_old["psi"]
        dd = self._d_scale * float(np.dot(dpsi, st_new["bpsi"] + st_old["bpsi"]))
        return math.log1p(dq / st_old["q"]) - math.log1p(dd / st_old["d"]) / self.params.pbar

    def quotient(self, x: np.ndarray) -> float:
        st = self.evaluate(x)
        return self.params.omega * st["q"] / st["d"] ** (1.0 / self.params.pbar)

    def residual(self, st: dict, multiplier: Optional[float] = None, interior: float = 0.0):
        """Residual vector in phi units and its relative L^2(dx) norm.

        ``multiplier`` is the coefficient in front of (I * |u|^pbar)|u|^{pbar-2}u
        in the equation; the default Phi/D makes the residual orthogonal to u.
        """
        lam = st["q"] / st["d"] if multiplier is None else multiplier / self.params.omega
        res = st["kx"] - lam * st["nvec"]
        sl = _interior_slice(self.grid.n, interior)
        w = self._res_weight[sl]
        num = float(np.dot(w, res[sl] ** 2))
        den = float(np.dot(w, st["kx"][sl] ** 2))
        rel = math.sqrt(num / den) if den > 0 else math.inf
        return res, rel


def _interior_slice(n: int, interior: float) -> slice:
    k = int(math.floor(interior * n))
    return slice(k, n - k) if k > 0 else slice(None)


def rayleigh(params: ProblemParams, op: RieszOperator, u: RadialField) -> EnergyReport:
    """Phi(u) / D(u)^{1/pbar} together with its ingredients and the residual norm."""
    _check_grid(params, u)
    prob = ReducedProblem(params, op)
    x = to_phi(params, u.grid, u.values)
    if not np.any(x):
        raise DegenerateInputError("u = 0: the quotient is undefined")
    st = prob.evaluate(x)
    _, rel = prob.residual(st)
    ph = params.omega * st["q"]
    return EnergyReport(
        phi=ph,
        dterm=st["d"],
        rayleigh=ph / st["d"] ** (1.0 / params.pbar),
        el_residual_norm=rel,
    )


def rayleigh_gradient(params: ProblemParams, op: RieszOperator, u: RadialField) -> np.ndarray:
    """Gradient of the discrete quotient with respect to the nodal values of u."""
    prob = ReducedProblem(params, op)
    g = u.grid
    x = to_phi(params, g, u.values)
    st = prob.evaluate(x)
    grad_x = (
        2.0 * params.omega * st["d"] ** (-1.0 / params.pbar)
        * (st["kx"] - (st["q"] / st["d"]) * st["nvec"])
    )
    return np.exp(params.half_dim * g.t) * grad_x


def el_residual(
    params: ProblemParams,
    op: RieszOperator,
    u: RadialField,
    multiplier: Optional[float] = None,
    interior: float = 0.0,
) -> Tuple[RadialField, float]:
    """Euler-Lagrange residual of the quotient.

    R = -Delta u - theta u/r^2 - m (I_alpha * |u|^pbar)|u|^{pbar-2} u with
    m = Phi/D unless ``multiplier`` is given (m = 1 for the unnormalized
    equation).  Returns R and ||R|| / ||-Delta u - theta u/r^2|| in L^2(dx),
    the norms taken over the nodes left after dropping a fraction
    ``interior`` of the grid at each end.
    """
    _check_grid(params, u)
    if not np.any(u.values):
        raise DegenerateInputError("u = 0 has no residual")
    prob = ReducedProblem(params, op)
    g = u.grid
    st = prob.evaluate(to_phi(params, g, u.values))
    res, rel = prob.residual(st, multiplier, interior)
    field = u.with_values(np.exp(-(params.half_dim + 2.0) * g.t) * res / g.h)
    return field, rel


def rescale_to_solution(
    params: ProblemParams,
    u: RadialField,
    s_theta: float,
    op: Optional[RieszOperator] = None,
) -> RadialField:
    """Turn a minimizer with D(u) = 1 and Phi(u) = s_theta into a solution.

    w = s_theta^{1/(2 pbar - 2)} u solves -Delta w - theta w/r^2 = (I_alpha * w^pbar) w^{pbar-1}.
    """
    if op is not None:
        d = dterm(params, op, u)
        if abs(d - 1.0) > 1e-8:
            raise PreconditionError(f"rescale needs D(u) = 1, got D(u) = {d:.12g}")
    if not s_theta > 0:
        raise PreconditionError(f"s_theta must be positive, got {s_theta}")
    c = s_theta ** (1.0 / (2.0 * params.pbar - 2.0))
    return u * c
