"""Radial solver and numerical checks for the Choquard equation with an inverse-square potential.

    -Delta u - theta u/|x|^2 = (I_alpha * |u|^pbar) |u|^{pbar-2} u,   pbar = (N+alpha)/(N-2)
"""

from __future__ import annotations

from .exceptions import *  # noqa: F401,F403
from .params import ProblemParams, make_params, sharp_hls_constant, riesz_normalization, sphere_area
from .grid import LogGrid, RadialField, integrate, shift, reflect, interpolate, read_field_csv, write_field_csv
from .riesz import RieszOperator, angular_profile, hls_pairing
from .functionals import EnergyReport, dterm, el_residual, phi, rayleigh, rescale_to_solution
from .solver import CompactnessDiag, SolveOptions, SolveResult, continuation, default_init, minimize, monitor
from .estimator import ChoquardHardySolver

__version__ = "0.1.0"
