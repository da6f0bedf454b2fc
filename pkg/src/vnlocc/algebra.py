"""Finite-dimensional von Neumann algebras with a weighted trace, in standard form.

An algebra here is a direct sum of full matrix blocks ``M_{n_k}`` carrying the
faithful trace ``tau(x) = sum_k w_k Tr(x_k)``. Its standard form
``L^2(A, tau)`` is stored blockwise: a vector is one ``n_k x n_k`` matrix per
block with inner product ``<a, b> = tau(b^* a)``.

* ``A`` acts by left multiplication.
* The commutant ``A'`` acts by right multiplication. An element of ``A'`` is
  stored through its ``J``-conjugate: the matrix ``c`` represents ``JcJ``,
  which sends ``xi`` to ``xi c^*``. This map ``c -> JcJ`` is multiplicative and
  adjoint-preserving, so products and functional calculus of commutant
  elements act directly on their representatives.
* The modular conjugation ``J`` is the blockwise adjoint.

For operators on the whole of ``L^2`` we use coordinates in the orthonormal
basis ``{e_ij / sqrt(w_k)}``: :func:`vec` flattens a vector row-major per block
scaled by ``sqrt(w_k)``, and :func:`left_matrix`, :func:`right_matrix`,
:func:`commutant_matrix` give the matching ``N x N`` matrices with
``N = sum_k n_k^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np
import scipy.linalg

from ._linalg import RCOND, TOL_EQ, TOL_PSD, svd_rank
from .exceptions import ValidationError

Side = Literal["left", "right"]

__all__ = [
    "TOL_EQ",
    "TOL_PSD",
    "Algebra",
    "AlgElement",
    "StdVector",
    "Density",
    "make_algebra",
    "trace",
    "inner",
    "modular_conjugation",
    "act",
    "commutant_act",
    "densities",
    "polar_vector",
    "trace_norm",
    "vec",
    "unvec",
    "left_matrix",
    "right_matrix",
    "commutant_matrix",
    "conjugation_matrix",
    "apply_conjugation",
    "ensure_state",
]


@dataclass(frozen=True)
class Algebra:
    """``A = (+)_k M_{n_k}`` with trace weights ``w_k``."""

    blocks: tuple[tuple[int, float], ...]

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise ValidationError("an algebra needs at least one block")
        clean = []
        for entry in blocks:
            try:
                dim, weight = entry
            except (TypeError, ValueError):
                raise ValidationError(f"block must be a (dim, weight) pair, got {entry!r}") from None
            if isinstance(dim, bool) or int(dim) != dim or int(dim) < 1:
                raise ValidationError(f"block dimension must be a positive integer, got {dim!r}")
            weight = float(weight)
            if not (math.isfinite(weight) and weight > 0):
                raise ValidationError(f"block weight must be positive and finite, got {weight!r}")
            clean.append((int(dim), weight))
        object.__setattr__(self, "blocks", tuple(clean))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for d, _ in self.blocks)

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(w for _, w in self.blocks)

    @property
    def is_factor(self) -> bool:
        return len(self.blocks) == 1

    @property
    def unit_trace(self) -> float:
        """``tau(1) = sum_k w_k n_k``."""
        return float(sum(w * d for d, w in self.blocks))

    @property
    def std_dim(self) -> int:
        """Dimension of ``L^2(A, tau)`` as a Hilbert space."""
        return sum(d * d for d in self.dims)

    def __repr__(self):
        inner_ = ", ".join(f"({d}, {w:g})" for d, w in self.blocks)
        return f"Algebra([{inner_}])"


def make_algebra(blocks: Iterable) -> Algebra:
    """Build and validate an :class:`Algebra`.

    Args:
        blocks: ``(dim, weight)`` pairs, or mappings with ``dim``/``weight`` keys.

    Raises:
        ValidationError: empty list, non-positive dimension or weight.
    """
    pairs = []
    for b in blocks:
        if isinstance(b, dict):
            pairs.append((b.get("dim"), b.get("weight")))
        else:
            pairs.append(tuple(b))
    return Algebra(tuple(pairs))


class _Blockwise:
    """Immutable tuple of per-block square matrices tied to a parent algebra."""

    __slots__ = ("parent", "data")

    def __init__(self, parent: Algebra, data: Sequence):
        if not isinstance(parent, Algebra):
            raise ValidationError("parent must be an Algebra")
        data = tuple(data)
        if len(data) != len(parent.blocks):
            raise ValidationError(f"expected {len(parent.blocks)} blocks, got {len(data)}")
        arrays = []
        for k, (blk, n) in enumerate(zip(data, parent.dims)):
            arr = np.array(blk, dtype=complex)
            if arr.ndim == 0 and n == 1:
                arr = arr.reshape(1, 1)
            if arr.shape != (n, n):
                raise ValidationError(f"block {k} has shape {arr.shape}, expected {(n, n)}")
            arr.setflags(write=False)
            arrays.append(arr)
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "data", tuple(arrays))

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def _check(self, other: "_Blockwise"):
        if other.parent != self.parent:
            raise ValidationError("operands belong to different algebras")

    def _new(self, data):
        return type(self)(self.parent, data)

    def __add__(self, other):
        self._check(other)
        return self._new([a + b for a, b in zip(self.data, other.data)])

    def __sub__(self, other):
        self._check(other)
        return self._new([a - b for a, b in zip(self.data, other.data)])

    def __neg__(self):
        return self._new([-a for a in self.data])

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return self._new([scalar * a for a in self.data])

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __repr__(self):
        return f"{type(self).__name__}({self.parent!r}, blocks={len(self.data)})"


class AlgElement(_Blockwise):
    """An element ``a = (a_k)_k`` of the algebra."""

    __slots__ = ()

    @classmethod
    def identity(cls, parent: Algebra) -> "AlgElement":
        return cls(parent, [np.eye(n) for n in parent.dims])

    @classmethod
    def zeros(cls, parent: Algebra) -> "AlgElement":
        return cls(parent, [np.zeros((n, n)) for n in parent.dims])

    def __matmul__(self, other):
        if not isinstance(other, AlgElement):
            return NotImplemented
        self._check(other)
        return AlgElement(self.parent, [a @ b for a, b in zip(self.data, other.data)])

    def adjoint(self) -> "AlgElement":
        return AlgElement(self.parent, [a.conj().T for a in self.data])

    @property
    def H(self) -> "AlgElement":
        return self.adjoint()

    def norm(self) -> float:
        """Operator norm (largest singular value over blocks)."""
        return max(float(np.linalg.norm(a, 2)) for a in self.data)


class StdVector(_Blockwise):
    """A vector in ``L^2(A, tau)``, stored blockwise."""

    __slots__ = ()

    def norm(self) -> float:
        return math.sqrt(max(inner(self, self).real, 0.0))

    def normalized(self) -> "StdVector":
        nrm = self.norm()
        if nrm == 0:
            raise ValidationError("cannot normalise the zero vector")
        return self / nrm


class Density(AlgElement):
    """Density of a vector state restricted to ``A`` (``left``) or ``A'`` (``right``).

    A right density ``rho'`` is stored as the ``A``-matrix ``x`` with ``rho' = JxJ``;
    since ``x`` is self-adjoint this is also the right multiplication by ``x``.
    """

    __slots__ = ("side",)

    def __init__(self, parent: Algebra, data: Sequence, side: Side = "left"):
        super().__init__(parent, data)
        if side not in ("left", "right"):
            raise ValidationError(f"density side must be 'left' or 'right', got {side!r}")
        object.__setattr__(self, "side", side)

    def _new(self, data):
        return Density(self.parent, data, self.side)

    def operator(self) -> np.ndarray:
        """The density as an ``N x N`` operator on ``L^2``."""
        if self.side == "left":
            return left_matrix(self)
        return right_matrix(self)


def trace(A: Algebra, x: AlgElement) -> complex:
    """``tau(x) = sum_k w_k Tr(x_k)``."""
    if x.parent != A:
        raise ValidationError("element does not belong to this algebra")
    return complex(sum(w * np.trace(b) for w, b in zip(A.weights, x.data)))


def inner(xi: StdVector, eta: StdVector) -> complex:
    """``<xi, eta> = tau(eta^* xi)``, linear in the first argument."""
    if xi.parent != eta.parent:
        raise ValidationError("vectors belong to different algebras")
    return complex(sum(w * np.vdot(b, a) for w, a, b in zip(xi.parent.weights, xi.data, eta.data)))


def modular_conjugation(xi: StdVector) -> StdVector:
    """``J xi = xi^*`` blockwise. Conjugate-linear and involutive."""
    return StdVector(xi.parent, [b.conj().T for b in xi.data])


def act(side: Side, a: AlgElement, xi: StdVector) -> StdVector:
    """Left action ``a xi`` or right action ``xi a`` (the latter is ``J a^* J xi``)."""
    if a.parent != xi.parent:
        raise ValidationError("operator and vector belong to different algebras")
    if side == "left":
        return StdVector(xi.parent, [a_k @ x_k for a_k, x_k in zip(a.data, xi.data)])
    if side == "right":
        return StdVector(xi.parent, [x_k @ a_k for a_k, x_k in zip(a.data, xi.data)])
    raise ValidationError(f"side must be 'left' or 'right', got {side!r}")


def commutant_act(c: AlgElement, xi: StdVector) -> StdVector:
    """Apply the commutant element ``JcJ``: ``xi -> xi c^*``."""
    if c.parent != xi.parent:
        raise ValidationError("operator and vector belong to different algebras")
    return StdVector(xi.parent, [x_k @ c_k.conj().T for c_k, x_k in zip(c.data, xi.data)])


def densities(psi: StdVector) -> tuple[Density, Density]:
    """Densities of ``omega_psi`` on ``A`` and on ``A'``.

    The left density has blocks ``psi_k psi_k^*`` and satisfies
    ``<a psi, psi> = tau(rho a)``; the right density has blocks
    ``psi_k^* psi_k`` and satisfies ``<psi a, psi> = tau(rho' a)``.
    """
    left = Density(psi.parent, [p @ p.conj().T for p in psi.data], "left")
    right = Density(psi.parent, [p.conj().T @ p for p in psi.data], "right")
    return left, right


def polar_vector(psi: StdVector) -> tuple[AlgElement, StdVector]:
    """Polar data ``(v, |psi|)`` with ``psi = v^* |psi|`` and ``v psi = |psi|``.

    ``v`` is the partial isometry from the polar decomposition of ``psi^*``;
    ``v^* v`` is the left support of ``psi``.
    """
    vs, absvals = [], []
    for p in psi.data:
        w, s, vh = np.linalg.svd(p)
        r = svd_rank(s, RCOND)
        vs.append(vh[:r].conj().T @ w[:, :r].conj().T)
        absvals.append((vh.conj().T * s) @ vh)
    return AlgElement(psi.parent, vs), StdVector(psi.parent, absvals)


def trace_norm(A: Algebra, x: AlgElement) -> float:
    """``||x||_1 = tau(|x|)``."""
    if x.parent != A:
        raise ValidationError("element does not belong to this algebra")
    return float(sum(w * np.linalg.svd(b, compute_uv=False).sum() for w, b in zip(A.weights, x.data)))


def ensure_state(psi: StdVector, tol: float = TOL_EQ) -> StdVector:
    """Reject zero and non-unit vectors where a state is required."""
    nrm = psi.norm()
    if nrm == 0:
        raise ValidationError("zero vector is not a state")
    if abs(nrm - 1.0) > tol:
        raise ValidationError(f"state must be a unit vector, got norm {nrm:.12g}")
    return psi


# --- coordinates on the whole of L^2 ------------------------------------------------


def vec(xi: _Blockwise) -> np.ndarray:
    """Orthonormal coordinates of a blockwise vector (length ``sum n_k^2``)."""
    return np.concatenate([math.sqrt(w) * b.ravel() for w, b in zip(xi.parent.weights, xi.data)])


def unvec(A: Algebra, v: np.ndarray) -> StdVector:
    v = np.asarray(v, dtype=complex).ravel()
    if v.size != A.std_dim:
        raise ValidationError(f"coordinate vector has length {v.size}, expected {A.std_dim}")
    out, pos = [], 0
    for n, w in A.blocks:
        out.append(v[pos : pos + n * n].reshape(n, n) / math.sqrt(w))
        pos += n * n
    return StdVector(A, out)


def left_matrix(a: AlgElement) -> np.ndarray:
    """Matrix of ``xi -> a xi`` on ``L^2``."""
    return scipy.linalg.block_diag(*[np.kron(b, np.eye(b.shape[0])) for b in a.data])


def right_matrix(a: AlgElement) -> np.ndarray:
    """Matrix of ``xi -> xi a`` on ``L^2``."""
    return scipy.linalg.block_diag(*[np.kron(np.eye(b.shape[0]), b.T) for b in a.data])


def commutant_matrix(c: AlgElement) -> np.ndarray:
    """Matrix of the commutant element ``JcJ`` (``xi -> xi c^*``)."""
    return scipy.linalg.block_diag(*[np.kron(np.eye(b.shape[0]), b.conj()) for b in c.data])


def conjugation_matrix(A: Algebra) -> np.ndarray:
    """Real permutation ``P`` with ``vec(J xi) = P conj(vec(xi))``."""
    perm, pos = [], 0
    for n in A.dims:
        idx = np.arange(n * n).reshape(n, n).T.ravel() + pos
        perm.append(idx)
        pos += n * n
    perm = np.concatenate(perm)
    p = np.zeros((A.std_dim, A.std_dim))
    p[np.arange(A.std_dim), perm] = 1.0
    return p


def apply_conjugation(A: Algebra, x: np.ndarray) -> np.ndarray:
    """``J x J`` for an ``N x N`` operator ``x`` on ``L^2``."""
    p = conjugation_matrix(A)
    return p @ np.conj(x) @ p
