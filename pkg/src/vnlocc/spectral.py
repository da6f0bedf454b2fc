"""Singular value functions and majorisation relative to a weighted trace.

For a positive element ``x`` of ``A = (+) M_{n_k}`` the singular value function
``mu_t(x)`` is a non-increasing step function on ``(0, tau(1)]``: all block
eigenvalues are pooled, sorted in descending order, and an eigenvalue from
block ``k`` occupies an interval of length ``w_k``.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from ._linalg import TOL_EQ, TOL_PSD, psd_eigvalsh
from .algebra import Algebra, AlgElement
from .exceptions import ValidationError

__all__ = [
    "StepFunction",
    "MajorisationReport",
    "singular_value_function",
    "integral_to",
    "majorises",
    "majorisation_report",
    "sup_distance",
    "weighted_spectrum",
]

PositiveLike = Union[AlgElement, np.ndarray]


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous non-increasing step function on ``[0, t_m)``.

    ``values[j]`` is taken on ``[breakpoints[j], breakpoints[j+1])``.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or v.ndim != 1 or t.size != v.size + 1 or v.size == 0:
            raise ValidationError("need m + 1 breakpoints for m >= 1 values")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValidationError("breakpoints must start at 0 and increase strictly")
        if np.any(np.diff(v) > 0) or v[-1] < 0:
            raise ValidationError("values must be non-increasing and non-negative")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "breakpoints", t)
        object.__setattr__(self, "values", v)

    @property
    def length(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def total(self) -> float:
        return float(np.dot(self.widths, self.values))

    def __call__(self, t: float) -> float:
        if not 0 <= t < self.length:
            raise ValidationError(f"t = {t} outside [0, {self.length})")
        j = bisect.bisect_right(self.breakpoints, t) - 1
        return float(self.values[j])

    def __eq__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        return np.array_equal(self.breakpoints, other.breakpoints) and np.array_equal(
            self.values, other.values
        )

    def __hash__(self):
        return hash((self.breakpoints.tobytes(), self.values.tobytes()))

    def to_csv(self) -> str:
        """``t,value`` rows: each step start, then a terminator at ``t_m``."""
        rows = ["t,value"]
        for t, v in zip(self.breakpoints[:-1], self.values):
            rows.append(f"{t:.17g},{v:.17g}")
        rows.append(f"{self.breakpoints[-1]:.17g},{self.values[-1]:.17g}")
        return "\n".join(rows) + "\n"

    @classmethod
    def from_steps(cls, values, widths) -> "StepFunction":
        """Build from descending values and positive widths, merging equal neighbours."""
        values = np.asarray(values, dtype=float)
        widths = np.asarray(widths, dtype=float)
        merged_v, merged_w = [], []
        for v, w in zip(values, widths):
            if merged_v and merged_v[-1] == v:
                merged_w[-1] += w
            else:
                merged_v.append(float(v))
                merged_w.append(float(w))
        t = np.concatenate([[0.0], np.cumsum(merged_w)])
        return cls(t, np.array(merged_v))


def _blocks_of(A: Algebra, x: PositiveLike) -> list[np.ndarray]:
    if isinstance(x, AlgElement):
        if x.parent != A:
            raise ValidationError("element does not belong to this algebra")
        return list(x.data)
    arr = np.asarray(x, dtype=complex)
    if not A.is_factor:
        raise ValidationError("raw matrices are only accepted for factors")
    return [arr]


def weighted_spectrum(A: Algebra, x: PositiveLike, tol_psd: float = TOL_PSD):
    """Descending pooled eigenvalues with their widths (stable: block, then position)."""
    blocks = _blocks_of(A, x)
    vals, widths, keys = [], [], []
    for k, (b, w) in enumerate(zip(blocks, A.weights)):
        ev = psd_eigvalsh(b, tol_psd)[::-1]
        for i, e in enumerate(ev):
            vals.append(float(e))
            widths.append(w)
            keys.append((k, i))
    order = sorted(range(len(vals)), key=lambda j: (-vals[j], keys[j]))
    return np.array([vals[j] for j in order]), np.array([widths[j] for j in order])


def singular_value_function(A: Algebra, x: PositiveLike, tol_psd: float = TOL_PSD) -> StepFunction:
    """``t -> mu_t(x)`` for a positive element ``x`` of ``A``.

    Args:
        A: The algebra.
        x: A positive element (an :class:`AlgElement`, a :class:`Density`, or
            a raw matrix when ``A`` is a factor).
        tol_psd: Eigenvalues in ``[-tol_psd, 0)`` are clipped to zero.

    Raises:
        ValidationError: ``x`` has an eigenvalue below ``-tol_psd``.
    """
    vals, widths = weighted_spectrum(A, x, tol_psd)
    f = StepFunction.from_steps(vals, widths)
    # pin the domain to tau(1) exactly, independent of summation order
    t = f.breakpoints.copy()
    t[-1] = A.unit_trace
    return StepFunction(t, f.values)


def integral_to(f: StepFunction, s: float) -> float:
    """``int_0^s f(t) dt`` for ``0 <= s <= t_m``."""
    if not (0 <= s <= f.length * (1 + 1e-15)):
        raise ValidationError(f"s = {s} outside [0, {f.length}]")
    s = min(s, f.length)
    t, v = f.breakpoints, f.values
    j = bisect.bisect_right(t, s) - 1
    full = float(np.dot(np.diff(t[: j + 1]), v[:j])) if j > 0 else 0.0
    if j < v.size:
        full += (s - t[j]) * v[j]
    return full


@dataclass(frozen=True)
class MajorisationReport:
    holds: bool
    trace_gap: float
    max_violation: float
    breakpoints: np.ndarray = field(repr=False)

    def __bool__(self):
        return self.holds


def majorisation_report(
    A: Algebra, x: PositiveLike, y: PositiveLike, tol: float = TOL_EQ
) -> MajorisationReport:
    """Check ``x < y`` and report the trace gap and the worst partial-integral excess."""
    fx = singular_value_function(A, x)
    fy = singular_value_function(A, y)
    grid = np.union1d(fx.breakpoints, fy.breakpoints)
    grid = grid[grid <= A.unit_trace]
    excess = max(integral_to(fx, s) - integral_to(fy, s) for s in grid)
    gap = abs(fx.total() - fy.total())
    holds = gap <= tol and excess <= tol
    return MajorisationReport(bool(holds), float(gap), float(max(excess, 0.0)), grid)


def majorises(A: Algebra, x: PositiveLike, y: PositiveLike, tol: float = TOL_EQ) -> bool:
    """True iff ``x`` is majorised by ``y`` (``x < y``) within ``tol``."""
    return majorisation_report(A, x, y, tol).holds


def sup_distance(f: StepFunction, g: StepFunction) -> float:
    """``sup_t |f(t) - g(t)|`` over the common domain."""
    if abs(f.length - g.length) > 1e-12 * max(1.0, f.length):
        raise ValidationError("step functions have different domains")
    grid = np.union1d(f.breakpoints, g.breakpoints)
    grid = grid[grid < min(f.length, g.length)]
    return max(abs(f(t) - g(t)) for t in grid)
