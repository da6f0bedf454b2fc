"""Entropy of a density relative to a normalised trace.

``H_tau(rho) = -int_0^1 mu_t(rho) log mu_t(rho) dt`` with natural logarithm and
``0 log 0 = 0``. For ``tau(1) = tau(rho) = 1`` this is never positive and
vanishes only at ``rho = 1``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.special import entr

from ._linalg import TOL_EQ
from .algebra import Algebra, AlgElement, StdVector, densities, trace
from .convert import decide_convertible
from .exceptions import ValidationError
from .spectral import StepFunction, singular_value_function

__all__ = [
    "EntropyReport",
    "MonotonicityReport",
    "entropy_relative_to_trace",
    "check_monotonicity",
]


class EntropyReport(NamedTuple):
    value: float
    density: StepFunction


class MonotonicityReport(NamedTuple):
    convertible: bool
    source_entropy: float
    target_entropy: float
    holds: bool


def entropy_relative_to_trace(A: Algebra, rho: AlgElement, tol: float = TOL_EQ) -> EntropyReport:
    """``H_tau(rho)`` as an exact integral over the singular value function.

    Raises:
        ValidationError: ``tau(1) != 1`` or ``tau(rho) != 1`` beyond ``tol``.
    """
    if abs(A.unit_trace - 1.0) > tol:
        raise ValidationError(f"trace must be normalised, got tau(1) = {A.unit_trace:.12g}")
    t = trace(A, rho)
    if abs(t - 1.0) > tol:
        raise ValidationError(f"density must have unit trace, got tau(rho) = {t.real:.12g}")
    mu = singular_value_function(A, rho)
    # entr(v) = -v log v, with entr(0) = 0
    value = float(np.dot(mu.widths, entr(mu.values))) + 0.0
    return EntropyReport(value, mu)


def check_monotonicity(A: Algebra, psi: StdVector, phi: StdVector, tol: float = TOL_EQ) -> MonotonicityReport:
    """Compare ``H_tau(rho_psi)`` and ``H_tau(rho_phi)`` when ``psi`` converts to ``phi``."""
    ok = decide_convertible(A, psi, phi, tol)
    h_psi = entropy_relative_to_trace(A, densities(psi)[0], tol).value
    h_phi = entropy_relative_to_trace(A, densities(phi)[0], tol).value
    holds = (not ok) or h_psi >= h_phi - tol
    return MonotonicityReport(bool(ok), h_psi, h_phi, bool(holds))
