"""Uniform grid in t = ln r and radial fields sampled on it.

A dilation x -> lambda x with lambda = exp(k h) is an exact index shift on this
grid and the inversion r -> 1/r is a reflection t -> -t, which is why the whole
package works in logarithmic coordinates.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import ConfigurationError, InputError, NumericError, ParameterError
from .params import sphere_area

__all__ = [
    "LogGrid",
    "RadialField",
    "integrate",
    "radial_derivative",
    "log_derivative",
    "shift",
    "reflect",
    "interpolate",
    "write_field_csv",
    "read_field_csv",
]

MIN_NODES = 16


@dataclass(frozen=True)
class LogGrid:
    """Uniform grid t_0 < ... < t_{n-1} in t = ln r for radial functions on R^dim.

    Quadrature weights are those of the trapezoid rule on the infinite lattice
    truncated to the window, ``omega_{dim-1} r_i^dim h``; integrands are assumed
    to decay at both window edges.
    """

    t_min: float
    t_max: float
    n: int
    dim: int = 3

    def __post_init__(self):
        if int(self.n) != self.n or self.n < MIN_NODES:
            raise ParameterError(f"grid needs n >= {MIN_NODES} nodes, got {self.n}")
        if not (math.isfinite(self.t_min) and math.isfinite(self.t_max)):
            raise InputError("grid bounds must be finite")
        if not self.t_max > self.t_min:
            raise ParameterError(f"need t_max > t_min, got [{self.t_min}, {self.t_max}]")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ParameterError(f"dim must be a positive integer, got {self.dim}")

    @classmethod
    def symmetric(cls, t_max: float = 12.0, n: int = 2048, dim: int = 3) -> "LogGrid":
        return cls(-float(t_max), float(t_max), int(n), int(dim))

    @property
    def is_symmetric(self) -> bool:
        return self.t_min == -self.t_max

    @property
    def h(self) -> float:
        return (self.t_max - self.t_min) / (self.n - 1)

    @cached_property
    def t(self) -> np.ndarray:
        i = np.arange(self.n, dtype=float)
        if self.is_symmetric:
            # exact reflection symmetry t[n-1-i] == -t[i] in floating point
            t = (2.0 * i - (self.n - 1)) * (self.t_max / (self.n - 1))
        else:
            t = self.t_min + i * self.h
            t[-1] = self.t_max
        t.flags.writeable = False
        return t

    @cached_property
    def r(self) -> np.ndarray:
        r = np.exp(self.t)
        r.flags.writeable = False
        return r

    @cached_property
    def weights(self) -> np.ndarray:
        """Quadrature weights for the integral over R^dim of a radial function."""
        w = sphere_area(self.dim) * self.h * np.exp(self.dim * self.t)
        w.flags.writeable = False
        return w

    def field(self, values) -> "RadialField":
        return RadialField(self, values)

    def sample(self, func) -> "RadialField":
        """Sample ``func(r)`` on the nodes."""
        return RadialField(self, func(self.r))


@dataclass(frozen=True, eq=False)
class RadialField:
    """Values of a radial function at the nodes of a :class:`LogGrid`."""

    grid: LogGrid
    values: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.shape[0] != self.grid.n:
            raise ConfigurationError(
                f"field length {v.shape} does not match grid with n={self.grid.n}"
            )
        if not np.all(np.isfinite(v)):
            raise NumericError("field contains non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def t(self) -> np.ndarray:
        return self.grid.t

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    def __len__(self) -> int:
        return self.grid.n

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def with_values(self, values) -> "RadialField":
        return RadialField(self.grid, values)

    def __mul__(self, other) -> "RadialField":
        if isinstance(other, RadialField):
            _same_grid(self, other)
            return self.with_values(self.values * other.values)
        return self.with_values(self.values * other)

    __rmul__ = __mul__

    def __add__(self, other) -> "RadialField":
        _same_grid(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other) -> "RadialField":
        _same_grid(self, other)
        return self.with_values(self.values - other.values)

    def __neg__(self) -> "RadialField":
        return self.with_values(-self.values)

    def __abs__(self) -> "RadialField":
        return self.with_values(np.abs(self.values))


def _same_grid(a: RadialField, b: RadialField) -> None:
    if a.grid != b.grid:
        raise ConfigurationError("fields live on different grids")


def integrate(field: RadialField) -> float:
    """Integral over R^N of the radial function represented by ``field``."""
    return float(np.dot(field.grid.weights, field.values))


def log_derivative(values: np.ndarray, h: float, order: int = 4) -> np.ndarray:
    """d/dt by central differences of the given order (4 or 6).

    The outermost nodes use one-sided fourth-order stencils.
    """
    if order not in (4, 6):
        raise ParameterError(f"order must be 4 or 6, got {order}")
    u = np.asarray(values, dtype=float)
    n = u.shape[0]
    if n < 7:
        raise ParameterError("need at least 7 nodes for the derivative stencil")
    d = np.empty_like(u)
    d[2:-2] = (u[:-4] - 8.0 * u[1:-3] + 8.0 * u[3:-1] - u[4:]) / (12.0 * h)
    if order == 6:
        d[3:-3] = (
            -u[:-6] + 9.0 * u[1:-5] - 45.0 * u[2:-4] + 45.0 * u[4:-2] - 9.0 * u[5:-1] + u[6:]
        ) / (60.0 * h)
    d[0] = (-25.0 * u[0] + 48.0 * u[1] - 36.0 * u[2] + 16.0 * u[3] - 3.0 * u[4]) / (12.0 * h)
    d[1] = (-3.0 * u[0] - 10.0 * u[1] + 18.0 * u[2] - 6.0 * u[3] + u[4]) / (12.0 * h)
    d[-1] = (25.0 * u[-1] - 48.0 * u[-2] + 36.0 * u[-3] - 16.0 * u[-4] + 3.0 * u[-5]) / (12.0 * h)
    d[-2] = (3.0 * u[-1] + 10.0 * u[-2] - 18.0 * u[-3] + 6.0 * u[-4] - u[-5]) / (12.0 * h)
    return d


def radial_derivative(field: RadialField) -> RadialField:
    """du/dr = exp(-t) du/dt."""
    g = field.grid
    return field.with_values(np.exp(-g.t) * log_derivative(field.values, g.h))


def _boundary_slope(values: np.ndarray, h: float, side: str, m: int = 4) -> Optional[float]:
    """Least-squares slope of ln|u| against t over the ``m`` outermost nodes.

    Returns None when the boundary values change sign or vanish.
    """
    seg = values[:m] if side == "inner" else values[-m:]
    if np.all(seg > 0) or np.all(seg < 0):
        x = np.arange(m) * h
        return float(np.polyfit(x, np.log(np.abs(seg)), 1)[0])
    return None


def shift(
    field: RadialField,
    k: int,
    exponents: Optional[Tuple[float, float]] = None,
) -> RadialField:
    """Translate the samples by ``k`` indices, i.e. ``u(x) -> u(exp(-k h) x)``.

    Vacated nodes are filled by extending the boundary value with a power law
    ``r**p``.  ``p`` is fitted to the outermost nodes unless ``exponents``
    gives ``(inner_power, outer_power)`` explicitly.  A boundary that vanishes
    or changes sign is filled with a constant.
    """
    k = int(k)
    g = field.grid
    if abs(k) >= g.n / 4:
        raise ParameterError(f"|k| must be < n/4 = {g.n / 4:g}, got {k}")
    if k == 0:
        return field
    u = field.values
    out = np.empty_like(u)
    h = g.h
    if k > 0:
        out[k:] = u[:-k]
        if exponents is not None:
            p = exponents[0]
        else:
            p = _boundary_slope(u, h, "inner")
        steps = np.arange(k, 0, -1) * h  # distance below the old first node
        out[:k] = u[0] * (np.exp(-p * steps) if p is not None else 1.0)
    else:
        m = -k
        out[:-m] = u[m:]
        if exponents is not None:
            p = exponents[1]
        else:
            p = _boundary_slope(u, h, "outer")
        steps = np.arange(1, m + 1) * h
        out[-m:] = u[-1] * (np.exp(p * steps) if p is not None else 1.0)
    return field.with_values(out)


def reflect(field: RadialField) -> RadialField:
    """t -> -t on a symmetric grid (r -> 1/r)."""
    if not field.grid.is_symmetric:
        raise ConfigurationError("reflection needs a grid with t_min == -t_max")
    return field.with_values(field.values[::-1])


def interpolate(field: RadialField, r) -> np.ndarray:
    """Evaluate the field at arbitrary radii inside the window.

    Positive fields are interpolated linearly in (ln r, ln u), which is exact
    for power laws; otherwise linearly in (ln r, u).
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or not np.all(np.isfinite(r)):
        raise InputError("radii must be positive and finite")
    t = np.log(r)
    g = field.grid
    if np.any(t < g.t_min - 1e-12) or np.any(t > g.t_max + 1e-12):
        raise ParameterError(
            f"radii outside the grid window [{g.r[0]:.3g}, {g.r[-1]:.3g}]"
        )
    u = field.values
    if np.all(u > 0):
        return np.exp(np.interp(t, g.t, np.log(u)))
    return np.interp(t, g.t, u)


def write_field_csv(field: RadialField, path: Union[str, Path]) -> None:
    """Two-column ``r,value`` CSV with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "value"])
        for r, v in zip(field.grid.r, field.values):
            writer.writerow([f"{r:.17g}", f"{v:.17g}"])


def read_field_csv(path: Union[str, Path], dim: int = 3) -> RadialField:
    """Inverse of :func:`write_field_csv`; the grid is rebuilt from the radii."""
    rs: list = []
    vs: list = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [c.strip() for c in header] != ["r", "value"]:
            raise InputError(f"{path}: expected header 'r,value', got {header}")
        for row in reader:
            if not row:
                continue
            rs.append(float(row[0]))
            vs.append(float(row[1]))
    t = np.log(np.array(rs))
    if t.size < MIN_NODES:
        raise InputError(f"{path}: too few rows ({t.size})")
    t_min, t_max = float(t[0]), float(t[-1])
    if abs(t_min + t_max) < 1e-12 * max(1.0, abs(t_max)):
        grid = LogGrid.symmetric(t_max, t.size, dim)
    else:
        grid = LogGrid(t_min, t_max, t.size, dim)
    if np.max(np.abs(grid.t - t)) > 1e-9 * max(1.0, abs(t_max)):
        raise InputError(f"{path}: radii are not uniformly spaced in ln r")
    return RadialField(grid, np.array(vs))


