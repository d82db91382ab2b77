"""Radial Riesz potential f -> I_alpha * f on a logarithmic grid.

For radial f the potential only depends on r = |x| and the kernel is
homogeneous, K(lambda r, lambda s) = lambda^{alpha-N} K(r, s).  Writing
psi(t) = exp((N+alpha) t / 2) f(exp t), the potential becomes

    (I_alpha * f)(e^t) = omega * exp(-(N-alpha) t / 2) * int G(t' - t) psi(t') dt'

with an even profile G(w) = A(e^w) exp((N-alpha) w / 2), where A is the
sphere-averaged kernel.  On the uniform t-grid this is a symmetric Toeplitz
matrix (dense path) or a correlation computed by FFT (fast path).

G has an integrable |w|^{alpha-1} type singularity at w = 0.  The trapezoid
rule is kept off the diagonal and the diagonal weight is calibrated so the
rule is exact on G(w) exp(-w^2/sigma^2); the resulting scheme converges like
h^{alpha+2}.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import fft as sp_fft
from scipy.integrate import quad
from scipy.linalg import toeplitz
from scipy.special import hyp2f1

from .exceptions import ConfigurationError, ParameterError
from .grid import LogGrid, RadialField
from .params import ProblemParams

__all__ = [
    "angular_profile",
    "profile_even",
    "RieszOperator",
    "apply_dense",
    "apply_fft",
    "hls_pairing",
    "DENSE_FALLBACK_N",
]

# below this size the dense product is both exact and cheaper than FFT setup
DENSE_FALLBACK_N = 256
_DENSE_CACHE_MAX_N = 4096


def _hyp_params(N: int, alpha: float):
    return 0.5 * (N - alpha), 1.0 - 0.5 * alpha, 0.5 * N


def _sphere_average_at_one(N: int, alpha: float) -> float:
    if alpha <= 1.0:
        return math.inf
    return math.exp(
        math.lgamma(0.5 * N)
        + math.lgamma(alpha - 1.0)
        - math.lgamma(0.5 * alpha)
        - math.lgamma(0.5 * (N + alpha - 2.0))
    )


def angular_profile(params: ProblemParams, rho):
    """Sphere-averaged Riesz kernel A(rho), with K(r, s) = r^{alpha-N} A(s/r).

    A(rho) = c_riesz * mean over the unit sphere of |e - rho w|^{alpha-N}, so
    the potential of a radial f is ``int K(r, s) f(s) omega s^{N-1} ds``.
    Satisfies A(1/rho) = rho^{N-alpha} A(rho); diverges at rho = 1 for alpha <= 1.
    """
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(~np.isfinite(rho_arr)) or np.any(rho_arr <= 0):
        raise ParameterError("rho must be positive and finite")
    N, alpha = params.N, params.alpha
    a, b, c = _hyp_params(N, alpha)
    inner = np.minimum(rho_arr, 1.0 / rho_arr)
    with np.errstate(divide="ignore"):
        avg = np.where(inner < 1.0, hyp2f1(a, b, c, inner * inner), _sphere_average_at_one(N, alpha))
    # reciprocity: A(rho) = rho^{alpha-N} A(1/rho) for rho > 1
    scale = np.where(rho_arr > 1.0, rho_arr ** (alpha - N), 1.0)
    out = params.c_riesz * avg * scale
    return float(out) if np.ndim(out) == 0 else out


def _profile(N: int, alpha: float, c_riesz: float, w):
    w = np.abs(np.asarray(w, dtype=float))
    a, b, c = _hyp_params(N, alpha)
    with np.errstate(divide="ignore"):
        avg = np.where(w > 0, hyp2f1(a, b, c, np.exp(-2.0 * w)), _sphere_average_at_one(N, alpha))
    return c_riesz * avg * np.exp(-0.5 * (N - alpha) * w)


def profile_even(params: ProblemParams, w):
    """G(w) = A(e^w) exp((N-alpha) w/2); even in w."""
    return _profile(params.N, params.alpha, params.c_riesz, w)


@lru_cache(maxsize=64)
def _diagonal_weight(N: int, alpha: float, c_riesz: float, h: float) -> float:
    """Diagonal entry making the lattice rule exact on G(w) exp(-w^2/sigma^2)."""
    sigma = max(0.5, 6.0 * h)
    cutoff = 10.0 * sigma
    exact, _ = quad(
        lambda w: float(_profile(N, alpha, c_riesz, w)) * math.exp(-(w / sigma) ** 2),
        0.0,
        cutoff,
        limit=500,
        epsabs=0.0,
        epsrel=1e-13,
    )
    k = np.arange(1, int(cutoff / h) + 2)
    w = k * h
    lattice = h * np.sum(_profile(N, alpha, c_riesz, w) * np.exp(-(w / sigma) ** 2))
    return 2.0 * (exact - lattice) / h


class RieszOperator:
    """Discrete I_alpha * (.) for radial fields on a fixed grid.

    The kernel table is built once at construction; afterwards the object is
    read-only and every apply method is pure.

    Parameters
    ----------
    params : ProblemParams
    grid : LogGrid
        must have ``grid.dim == params.N``.
    method : {"auto", "fft", "dense"}
        path used by :meth:`apply`; ``auto`` picks dense below
        ``DENSE_FALLBACK_N`` nodes and FFT otherwise.
    """

    def __init__(self, params: ProblemParams, grid: LogGrid, method: str = "auto"):
        if grid.dim != params.N:
            raise ConfigurationError(f"grid dimension {grid.dim} != N={params.N}")
        if method not in ("auto", "fft", "dense"):
            raise ParameterError(f"unknown method {method!r}")
        self.params = params
        self.grid = grid
        self.method = method
        n, h = grid.n, grid.h
        table = np.empty(n)
        table[1:] = profile_even(params, np.arange(1, n) * h)
        table[0] = _diagonal_weight(params.N, params.alpha, params.c_riesz, h)
        table.flags.writeable = False
        self.table = table
        t = grid.t
        self._psi_scale = np.exp(0.5 * (params.N + params.alpha) * t)
        self._out_scale = params.omega * h * np.exp(-0.5 * (params.N - params.alpha) * t)
        self._fft_len = sp_fft.next_fast_len(2 * n - 1, real=True)
        circ = np.zeros(self._fft_len)
        circ[:n] = table
        circ[self._fft_len - n + 1:] = table[:0:-1]
        self._kernel_hat = sp_fft.rfft(circ)
        self._dense: Optional[np.ndarray] = None

    @property
    def reduced_accuracy(self) -> bool:
        """True when the kernel is singular on the diagonal (alpha <= 1)."""
        return self.params.alpha <= 1.0

    # -- Toeplitz products in psi-coordinates ---------------------------------

    def dense_matrix(self) -> np.ndarray:
        if self._dense is None:
            m = toeplitz(self.table)
            if self.grid.n <= _DENSE_CACHE_MAX_N:
                self._dense = m
            return m
        return self._dense

    def correlate_dense(self, psi: np.ndarray, block: int = 512) -> np.ndarray:
        n = self.grid.n
        if n <= _DENSE_CACHE_MAX_N:
            return self.dense_matrix() @ psi
        # row blocks keep memory at O(block * n)
        out = np.empty(n)
        j = np.arange(n)
        for i0 in range(0, n, block):
            i = np.arange(i0, min(i0 + block, n))
            out[i] = self.table[np.abs(i[:, None] - j[None, :])] @ psi
        return out

    def correlate_fft(self, psi: np.ndarray) -> np.ndarray:
        n = self.grid.n
        spectrum = sp_fft.rfft(psi, n=self._fft_len)
        return sp_fft.irfft(spectrum * self._kernel_hat, n=self._fft_len)[:n]

    def correlate(self, psi: np.ndarray) -> np.ndarray:
        """Symmetric Toeplitz product B psi with the kernel table."""
        if self.method == "dense" or (self.method == "auto" and self.grid.n < DENSE_FALLBACK_N):
            return self.correlate_dense(psi)
        return self.correlate_fft(psi)

    # -- field-level API -------------------------------------------------------

    def _check(self, f: RadialField) -> None:
        if f.grid != self.grid:
            raise ConfigurationError("field grid does not match the operator grid")

    def to_psi(self, values: np.ndarray) -> np.ndarray:
        return self._psi_scale * values

    def from_correlation(self, corr: np.ndarray) -> np.ndarray:
        return self._out_scale * corr

    def apply(self, f: RadialField) -> RadialField:
        self._check(f)
        return f.with_values(self.from_correlation(self.correlate(self.to_psi(f.values))))

    def apply_dense(self, f: RadialField) -> RadialField:
        self._check(f)
        return f.with_values(self.from_correlation(self.correlate_dense(self.to_psi(f.values))))

    def apply_fft(self, f: RadialField) -> RadialField:
        self._check(f)
        return f.with_values(self.from_correlation(self.correlate_fft(self.to_psi(f.values))))

    def pairing(self, f: RadialField, g: RadialField, normalized: bool = True) -> float:
        """int (I_alpha * f) g dx, or the raw double integral if not normalized."""
        self._check(f)
        self._check(g)
        h = self.grid.h
        psi_f = self.to_psi(f.values)
        psi_g = self.to_psi(g.values)
        val = (self.params.omega * h) ** 2 * float(np.dot(psi_g, self.correlate(psi_f)))
        if not normalized:
            val /= self.params.c_riesz
        return val


def apply_dense(op: RieszOperator, f: RadialField) -> RadialField:
    return op.apply_dense(f)


def apply_fft(op: RieszOperator, f: RadialField) -> RadialField:
    return op.apply_fft(f)


def hls_pairing(op: RieszOperator, f: RadialField, g: RadialField, normalized: bool = True) -> float:
    """Pairing of f and g through the Riesz kernel.

    With ``normalized`` the kernel carries the Riesz constant, giving
    ``int (I_alpha * f) g dx``; without it the raw double integral
    ``int int f(x) g(y) |x-y|^{alpha-N} dx dy`` bounded by S(N, alpha).
    """
    return op.pairing(f, g, normalized)
