"""Problem parameters and the analytic constants derived from them."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .exceptions import InputError, ParameterError

__all__ = [
    "ProblemParams",
    "make_params",
    "sharp_hls_constant",
    "riesz_normalization",
    "sphere_area",
    "ALPHA_STABLE_MIN",
]

# Below this Riesz order the kernel quadrature loses accuracy; enforced softly.
ALPHA_STABLE_MIN = 0.5


def _check_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise InputError(f"{name} must be finite, got {value!r}")


def _check_dimension(N) -> int:
    if isinstance(N, bool) or int(N) != N:
        raise InputError(f"N must be an integer, got {N!r}")
    N = int(N)
    if N < 3:
        raise ParameterError(f"N must satisfy N >= 3, got N={N}")
    return N


def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere in R^N, 2 pi^{N/2} / Gamma(N/2)."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


def riesz_normalization(N: int, alpha: float) -> float:
    """Constant in front of |x|^{alpha-N} in the Riesz potential I_alpha."""
    _check_finite(alpha=alpha)
    N = _check_dimension(N)
    if not 0.0 < alpha < N:
        raise ParameterError(f"alpha must satisfy 0 < alpha < N={N}, got {alpha}")
    return math.gamma((N - alpha) / 2.0) / (
        math.gamma(alpha / 2.0) * math.pi ** (N / 2.0) * 2.0**alpha
    )


def sharp_hls_constant(N: int, alpha: float) -> float:
    """Sharp Hardy-Littlewood-Sobolev constant S(N, alpha) for p = r = 2N/(N+alpha).

    It bounds the raw double integral of f(x) g(y) |x-y|^{alpha-N}, i.e. the
    pairing *without* the Riesz normalization.
    """
    _check_finite(alpha=alpha)
    N = _check_dimension(N)
    if not 0.0 < alpha < N:
        raise ParameterError(f"alpha must satisfy 0 < alpha < N={N}, got {alpha}")
    log_s = (
        0.5 * (N - alpha) * math.log(math.pi)
        + math.lgamma(alpha / 2.0)
        - math.lgamma((N + alpha) / 2.0)
        - (alpha / N) * (math.lgamma(N / 2.0) - math.lgamma(float(N)))
    )
    return math.exp(log_s)


@dataclass(frozen=True)
class ProblemParams:
    """Dimension, Riesz order, Hardy strength and derived constants.

    ``beta`` is the blow-up exponent at the origin; solutions behave like
    ``r**-beta`` near 0 and ``r**-(N-2-beta)`` at infinity.
    """

    N: int
    alpha: float
    theta: float
    pbar: float
    beta: float
    omega: float
    c_riesz: float
    s_hls: float

    @property
    def half_dim(self) -> float:
        """(N-2)/2, the exponent of the critical dilation u -> lambda^{(N-2)/2} u(lambda x)."""
        return 0.5 * (self.N - 2)

    @property
    def kappa(self) -> float:
        """Decay rate in t = ln r of r^{(N-2)/2} u at both ends, equal to sqrt(((N-2)/2)^2 - theta)."""
        return self.half_dim - self.beta

    @property
    def outer_exponent(self) -> float:
        return self.N - 2 - self.beta

    @property
    def hardy_threshold(self) -> float:
        return 0.25 * (self.N - 2) ** 2

    def with_theta(self, theta: float) -> "ProblemParams":
        return make_params(self.N, self.alpha, theta)

    def as_dict(self) -> dict:
        return {
            "N": self.N,
            "alpha": self.alpha,
            "theta": self.theta,
            "pbar": self.pbar,
            "beta": self.beta,
            "omega": self.omega,
            "c_riesz": self.c_riesz,
            "s_hls": self.s_hls,
        }


def make_params(N: int, alpha: float, theta: float) -> ProblemParams:
    """Validate ``(N, alpha, theta)`` and compute every derived constant.

    Raises
    ------
    InputError
        non-finite or non-integer input.
    ParameterError
        ``N < 3``, ``alpha`` outside ``((N-4)_+, N)`` or ``theta`` outside
        ``[0, (N-2)^2/4)``; the message names the violated bound.
    """
    _check_finite(alpha=float(alpha), theta=float(theta))
    N = _check_dimension(N)
    alpha = float(alpha)
    theta = float(theta)
    lower = max(N - 4, 0)
    if not lower < alpha:
        raise ParameterError(f"alpha must satisfy alpha > (N-4)_+ = {lower}, got {alpha}")
    if not alpha < N:
        raise ParameterError(f"alpha must satisfy alpha < N = {N}, got {alpha}")
    threshold = 0.25 * (N - 2) ** 2
    if theta < 0.0:
        raise ParameterError(f"theta must satisfy theta >= 0, got {theta}")
    if not theta < threshold:
        raise ParameterError(
            f"theta must satisfy theta < (N-2)^2/4 = {threshold:g}, got {theta}"
        )
    if alpha < ALPHA_STABLE_MIN:
        warnings.warn(
            f"alpha={alpha} < {ALPHA_STABLE_MIN}: Riesz kernel quadrature runs in reduced-accuracy mode",
            RuntimeWarning,
            stacklevel=2,
        )

    disc = math.sqrt((N - 2) ** 2 - 4.0 * theta)
    # (N-2-disc)/2 rewritten to avoid cancellation for small theta
    beta = 2.0 * theta / (N - 2 + disc)
    return ProblemParams(
        N=N,
        alpha=alpha,
        theta=theta,
        pbar=(N + alpha) / (N - 2),
        beta=beta,
        omega=sphere_area(N),
        c_riesz=riesz_normalization(N, alpha),
        s_hls=sharp_hls_constant(N, alpha),
    )
