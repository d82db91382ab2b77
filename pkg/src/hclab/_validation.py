"""Input checks shared by the estimator and the command-line front end."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array, check_is_fitted as _sk_check_is_fitted
from sklearn.exceptions import NotFittedError as _SkNotFitted

from .exceptions import ConfigurationError, InputError, NotFittedError

__all__ = ["check_radii", "check_profile", "check_is_fitted"]


def check_radii(X) -> np.ndarray:
    """Flatten a 1-D array or single-column 2-D array of radii; all must be positive and finite."""
    try:
        arr = check_array(X, ensure_2d=False, dtype=float)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise InputError(f"expected radii as a single column, got shape {arr.shape}")
        arr = arr[:, 0]
    if np.any(arr <= 0):
        raise InputError("radii must be positive")
    return arr


def check_profile(X, n: int) -> np.ndarray:
    """Initial profile given as nodal values; must have length ``n`` and be nonnegative."""
    try:
        arr = check_array(X, ensure_2d=False, dtype=float)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    arr = arr.ravel()
    if arr.shape[0] != n:
        raise ConfigurationError(f"initial profile has {arr.shape[0]} values, grid has {n} nodes")
    if np.any(arr < 0):
        raise InputError("initial profile must be nonnegative")
    return arr


def check_is_fitted(estimator, attributes=("field_",)) -> None:
    try:
        _sk_check_is_fitted(estimator, list(attributes))
    except _SkNotFitted as exc:
        raise NotFittedError(str(exc)) from exc
