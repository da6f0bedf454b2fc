"""Completely positive maps with side-constrained Kraus operators and one-way LOCC.

Operators on ``L^2`` are ``N x N`` matrices in the coordinates of
:func:`vnlocc.algebra.vec`. Alice's operations are left multiplications by
elements of ``A``. Bob's are commutant elements ``JcJ`` stored through ``c``
(see :mod:`vnlocc.algebra`). A Kraus family ``{K_i}`` acts in the Heisenberg
picture as ``x -> sum K_i^* x K_i`` and on density operators as
``rho -> sum K_i rho K_i^*``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal, NamedTuple, Sequence, Union

import numpy as np

from ._linalg import TOL_EQ, operator_norm, psd_sqrt, trace_norm_hermitian
from .algebra import (
    Algebra,
    AlgElement,
    Density,
    StdVector,
    act,
    commutant_act,
    commutant_matrix,
    left_matrix,
    polar_vector,
    vec,
)
from .exceptions import SideError, UnsupportedError, ValidationError

KrausSide = Literal["alice", "bob"]
Direction = Literal["right", "left"]

__all__ = [
    "KrausMap",
    "CPMap",
    "Instrument",
    "InstrumentReport",
    "Branch",
    "OneWayProtocol",
    "LoPopescu",
    "PinchDefect",
    "identity_protocol",
    "protocol_from_measurement",
    "apply_heisenberg",
    "apply_schrodinger",
    "bimodule_commutation_defect",
    "compose_one_way_right",
    "mirror_protocol",
    "coarse_grain",
    "link",
    "validate_instrument",
    "lo_popescu_transfer",
    "pinch_defect",
    "vector_state",
    "completion",
]


def vector_state(psi: StdVector) -> np.ndarray:
    """``|psi><psi|`` in full coordinates."""
    v = vec(psi)
    return np.outer(v, v.conj())


def _side_matrix(side: KrausSide, k: AlgElement) -> np.ndarray:
    return left_matrix(k) if side == "alice" else commutant_matrix(k)


@dataclass(frozen=True)
class KrausMap:
    """``x -> sum k_i^* x k_i`` with every ``k_i`` on one side of the cut.

    ``side="alice"`` means each ``k_i`` is the left multiplication by an element
    of ``A``; the map is then an ``A'``-bimodule map. ``side="bob"`` means each
    ``k_i`` is the commutant element ``J k_i J``; the map is an ``A``-bimodule map.
    """

    parent: Algebra
    side: KrausSide
    kraus: tuple[AlgElement, ...]

    def __post_init__(self):
        if self.side not in ("alice", "bob"):
            raise ValidationError(f"side must be 'alice' or 'bob', got {self.side!r}")
        kraus = tuple(self.kraus)
        if not kraus:
            raise ValidationError("a Kraus map needs at least one operator")
        for k in kraus:
            if not isinstance(k, AlgElement) or k.parent != self.parent:
                raise ValidationError("Kraus operators must be elements of the parent algebra")
        object.__setattr__(self, "kraus", kraus)

    def gram(self) -> AlgElement:
        """``sum k_i^* k_i`` as an algebra element (for Bob, the representative of ``Phi(1)``)."""
        total = AlgElement.zeros(self.parent)
        for k in self.kraus:
            total = total + k.adjoint() @ k
        return total

    def unital_defect(self) -> float:
        return (self.gram() - AlgElement.identity(self.parent)).norm()

    @property
    def is_unital(self) -> bool:
        return self.unital_defect() <= TOL_EQ

    @property
    def is_subunital(self) -> bool:
        g = self.gram()
        return all(np.linalg.eigvalsh(b).max() <= 1 + TOL_EQ for b in g.data)

    def matrices(self) -> list[np.ndarray]:
        return [_side_matrix(self.side, k) for k in self.kraus]


@dataclass(frozen=True)
class CPMap:
    """A CP map on ``B(L^2)`` given by full Kraus matrices."""

    kraus: tuple[np.ndarray, ...]
    label: object = None
    kind: str | None = None

    def __post_init__(self):
        mats = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        if not mats:
            raise ValidationError("a CP map needs at least one Kraus operator")
        n = mats[0].shape
        if len(n) != 2 or n[0] != n[1] or any(m.shape != n for m in mats):
            raise ValidationError("Kraus matrices must be square and share a shape")
        object.__setattr__(self, "kraus", mats)

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    def heisenberg(self, x: np.ndarray) -> np.ndarray:
        return sum(k.conj().T @ x @ k for k in self.kraus)

    def schrodinger(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ k.conj().T for k in self.kraus)


@dataclass(frozen=True)
class Instrument:
    """Finitely many CP branches whose sum is (meant to be) unital."""

    branches: tuple[CPMap, ...]

    def __post_init__(self):
        branches = tuple(self.branches)
        if not branches:
            raise ValidationError("an instrument needs at least one branch")
        if len({b.dim for b in branches}) != 1:
            raise ValidationError("branches act on different spaces")
        object.__setattr__(self, "branches", branches)

    @property
    def dim(self) -> int:
        return self.branches[0].dim

    @property
    def labels(self) -> tuple:
        return tuple(b.label for b in self.branches)

    def kraus(self) -> list[np.ndarray]:
        return [k for b in self.branches for k in b.kraus]

    @classmethod
    def from_kraus_maps(cls, maps: Sequence[KrausMap], labels: Sequence | None = None) -> "Instrument":
        labels = list(range(len(maps))) if labels is None else list(labels)
        return cls(tuple(CPMap(tuple(m.matrices()), lab, m.side) for m, lab in zip(maps, labels)))


@dataclass(frozen=True)
class Branch:
    """One outcome of a one-way protocol.

    ``measure`` is the measuring party's Kraus operator. ``correct`` is the
    receiving party's unital channel, given by its Kraus representatives.
    """

    measure: AlgElement
    correct: tuple[AlgElement, ...]

    def __post_init__(self):
        correct = tuple(self.correct)
        if not correct:
            raise ValidationError("a branch needs at least one correction operator")
        object.__setattr__(self, "correct", correct)


@dataclass(frozen=True)
class OneWayProtocol:
    """``Theta = sum_i Phi_i o Psi_i`` with classical communication in one direction.

    ``direction="right"``: Alice measures with ``measure`` (left multiplication)
    and Bob applies the commutant channel ``correct``. ``direction="left"``:
    Bob measures with the commutant element ``J measure J`` and Alice applies
    ``correct`` by left multiplication.
    """

    parent: Algebra
    direction: Direction
    branches: tuple[Branch, ...]
    labels: tuple = field(default=None)

    def __post_init__(self):
        if self.direction not in ("right", "left"):
            raise ValidationError(f"direction must be 'right' or 'left', got {self.direction!r}")
        branches = tuple(self.branches)
        if not branches:
            raise ValidationError("a protocol needs at least one branch")
        for br in branches:
            for op in (br.measure, *br.correct):
                if op.parent != self.parent:
                    raise ValidationError("protocol operators must belong to the parent algebra")
        object.__setattr__(self, "branches", branches)
        labels = tuple(range(len(branches))) if self.labels is None else tuple(self.labels)
        if len(labels) != len(branches):
            raise ValidationError("one label per branch required")
        object.__setattr__(self, "labels", labels)

    @property
    def measuring_side(self) -> KrausSide:
        return "alice" if self.direction == "right" else "bob"

    @property
    def correcting_side(self) -> KrausSide:
        return "bob" if self.direction == "right" else "alice"

    def measurement_defect(self) -> float:
        """``|| sum m_i^* m_i - 1 ||``."""
        g = AlgElement.zeros(self.parent)
        for br in self.branches:
            g = g + br.measure.adjoint() @ br.measure
        return (g - AlgElement.identity(self.parent)).norm()

    def correction_defects(self) -> list[float]:
        return [KrausMap(self.parent, self.correcting_side, br.correct).unital_defect() for br in self.branches]

    def branch_kraus(self, i: int) -> list[np.ndarray]:
        br = self.branches[i]
        m = _side_matrix(self.measuring_side, br.measure)
        return [_side_matrix(self.correcting_side, c) @ m for c in br.correct]

    def kraus(self) -> list[np.ndarray]:
        return [k for i in range(len(self.branches)) for k in self.branch_kraus(i)]

    def branch_vectors(self, psi: StdVector) -> list[list[StdVector]]:
        """Unnormalised output vectors ``K psi`` grouped by branch."""
        out = []
        for br in self.branches:
            if self.direction == "right":
                xi = act("left", br.measure, psi)
                out.append([commutant_act(c, xi) for c in br.correct])
            else:
                xi = commutant_act(br.measure, psi)
                out.append([act("left", c, xi) for c in br.correct])
        return out

    def to_instrument(self) -> Instrument:
        kind = f"one-way-{self.direction}"
        return Instrument(
            tuple(CPMap(tuple(self.branch_kraus(i)), lab, kind) for i, lab in enumerate(self.labels))
        )


def identity_protocol(A: Algebra, direction: Direction = "right") -> OneWayProtocol:
    one = AlgElement.identity(A)
    return OneWayProtocol(A, direction, (Branch(one, (one,)),))


def protocol_from_measurement(measurements: Sequence[AlgElement], direction: Direction = "right") -> OneWayProtocol:
    """A measurement system ``{a_k}`` with trivial corrections."""
    if not measurements:
        raise ValidationError("need at least one measurement operator")
    A = measurements[0].parent
    one = AlgElement.identity(A)
    return OneWayProtocol(A, direction, tuple(Branch(a, (one,)) for a in measurements))


Channel = Union[KrausMap, CPMap, Instrument, OneWayProtocol]


def _kraus_of(m: Channel) -> list[np.ndarray]:
    if isinstance(m, KrausMap):
        return m.matrices()
    if isinstance(m, CPMap):
        return list(m.kraus)
    if isinstance(m, (Instrument, OneWayProtocol)):
        return m.kraus()
    raise ValidationError(f"not a channel: {type(m).__name__}")


def _check_shape(kraus: list[np.ndarray], x: np.ndarray):
    n = kraus[0].shape[0]
    if x.shape != (n, n):
        raise ValidationError(f"operator has shape {x.shape}, map acts on dimension {n}")


def apply_heisenberg(m: Channel, x: np.ndarray) -> np.ndarray:
    """``x -> sum K^* x K`` over every Kraus operator of ``m``."""
    kraus = _kraus_of(m)
    x = np.asarray(x, dtype=complex)
    _check_shape(kraus, x)
    return sum(k.conj().T @ x @ k for k in kraus)


def apply_schrodinger(m: Channel, omega):
    """Predual action on a state.

    Args:
        m: Any channel-like object.
        omega: An ``N x N`` density operator on ``L^2``, a :class:`StdVector`
            (read as the vector state), or a left :class:`Density` when ``m``
            is an Alice :class:`KrausMap` (returns ``sum k rho k^*``).
    """
    if isinstance(omega, Density):
        if not (isinstance(m, KrausMap) and m.side == "alice" and omega.side == "left"):
            raise ValidationError("densities on A are only transported by Alice Kraus maps")
        out = [np.zeros_like(b) for b in omega.data]
        for k in m.kraus:
            out = [o + kb @ rb @ kb.conj().T for o, kb, rb in zip(out, k.data, omega.data)]
        return Density(omega.parent, out, "left")
    if isinstance(omega, StdVector):
        omega = vector_state(omega)
    kraus = _kraus_of(m)
    omega = np.asarray(omega, dtype=complex)
    _check_shape(kraus, omega)
    return sum(k @ omega @ k.conj().T for k in kraus)


def _superop(kraus: list[np.ndarray]) -> np.ndarray:
    # row-major vec(K^* X K) = (K^* kron K^T) vec(X)
    return sum(np.kron(k.conj().T, k.T) for k in kraus)


def bimodule_commutation_defect(phi: KrausMap, psi: KrausMap) -> float:
    """``max_x ||Phi(Psi(x)) - Psi(Phi(x))||`` over matrix units ``x`` of ``B(L^2)``.

    Raises:
        SideError: both maps live on the same side.
    """
    if phi.parent != psi.parent:
        raise ValidationError("maps belong to different algebras")
    if phi.side == psi.side:
        raise SideError(f"both maps act on the {phi.side} side; commutation needs opposite sides")
    sp, sq = _superop(phi.matrices()), _superop(psi.matrices())
    comm = sp @ sq - sq @ sp
    n = phi.parent.std_dim
    return max(operator_norm(comm[:, j].reshape(n, n)) for j in range(n * n))


def compose_one_way_right(theta1: OneWayProtocol, theta2: OneWayProtocol) -> OneWayProtocol:
    """Protocol for ``theta2`` followed by ``theta1`` (Schrodinger order).

    Branch ``(k, l)`` measures with ``a1_k a2_l`` and corrects with the products
    ``c1 c2``; the Bob parts can be moved past the Alice parts because they
    commute.
    """
    if theta1.direction != "right" or theta2.direction != "right":
        raise ValidationError("compose_one_way_right needs two right-direction protocols")
    if theta1.parent != theta2.parent:
        raise ValidationError("protocols belong to different algebras")
    branches, labels = [], []
    for lk, b1 in zip(theta1.labels, theta1.branches):
        for ll, b2 in zip(theta2.labels, theta2.branches):
            branches.append(Branch(b1.measure @ b2.measure, tuple(c1 @ c2 for c1 in b1.correct for c2 in b2.correct)))
            labels.append((lk, ll))
    return OneWayProtocol(theta1.parent, "right", tuple(branches), tuple(labels))


def mirror_protocol(theta: OneWayProtocol) -> OneWayProtocol:
    """``J Theta J``: the same representatives with the roles of the parties swapped."""
    flipped = "left" if theta.direction == "right" else "right"
    return OneWayProtocol(theta.parent, flipped, theta.branches, theta.labels)


def coarse_grain(inst: Instrument, partition: Sequence[Iterable[int]]) -> Instrument:
    """Merge branches along ``partition`` (disjoint index sets covering all branches)."""
    parts = [sorted(set(p)) for p in partition]
    flat = [i for p in parts for i in p]
    n = len(inst.branches)
    if any(not p for p in parts) or sorted(flat) != list(range(n)):
        raise ValidationError(f"partition must split {{0..{n - 1}}} into disjoint non-empty sets")
    out = []
    for p in parts:
        kraus = tuple(k for i in p for k in inst.branches[i].kraus)
        kinds = {inst.branches[i].kind for i in p}
        out.append(CPMap(kraus, tuple(inst.branches[i].label for i in p), kinds.pop() if len(kinds) == 1 else None))
    return Instrument(tuple(out))


def link(inst: Instrument, continuations: Sequence[Union[Instrument, OneWayProtocol]]) -> Instrument:
    """Follow branch ``k`` of ``inst`` with the instrument ``continuations[k]``.

    Branch ``(k, j)`` has Kraus operators ``K' K`` with ``K`` from branch ``k``
    (applied first) and ``K'`` from branch ``j`` of the continuation.
    """
    if len(continuations) != len(inst.branches):
        raise ValidationError("need one continuation per branch")
    out = []
    for br, cont in zip(inst.branches, continuations):
        cont = cont.to_instrument() if isinstance(cont, OneWayProtocol) else cont
        if cont.dim != inst.dim:
            raise ValidationError("continuation acts on a different space")
        for nxt in cont.branches:
            kraus = tuple(k2 @ k1 for k1 in br.kraus for k2 in nxt.kraus)
            out.append(CPMap(kraus, (br.label, nxt.label), None))
    return Instrument(tuple(out))


class InstrumentReport(NamedTuple):
    unital: bool
    defect: float
    sides: tuple
    side_violations: tuple


def _commutes_with(k: np.ndarray, gens: list[np.ndarray], tol: float) -> bool:
    scale = max(1.0, operator_norm(k))
    return all(operator_norm(k @ g - g @ k) <= tol * scale for g in gens)


def _matrix_units(A: Algebra) -> list[AlgElement]:
    units = []
    for b, n in enumerate(A.dims):
        for i in range(n):
            for j in range(n):
                data = [np.zeros((m, m)) for m in A.dims]
                data[b][i, j] = 1.0
                units.append(AlgElement(A, data))
    return units


def validate_instrument(inst: Union[Instrument, OneWayProtocol], A: Algebra | None = None, tol: float = TOL_EQ) -> InstrumentReport:
    """Check that the branches sum to a unital map and that sided branches stay on their side.

    The defect is ``|| sum_branches branch(1) - 1 ||`` in operator norm. When
    ``A`` is given, branches of kind ``alice`` must commute with ``A'`` and
    branches of kind ``bob`` with ``A``.
    """
    if isinstance(inst, OneWayProtocol):
        A = A or inst.parent
        inst = inst.to_instrument()
    n = inst.dim
    total = sum(b.heisenberg(np.eye(n)) for b in inst.branches)
    defect = operator_norm(total - np.eye(n))
    sides = tuple(b.kind for b in inst.branches)
    violations = []
    if A is not None:
        units = _matrix_units(A)
        lefts = [left_matrix(u) for u in units]
        rights = [commutant_matrix(u) for u in units]
        for i, b in enumerate(inst.branches):
            if b.kind == "alice" and not all(_commutes_with(k, rights, tol) for k in b.kraus):
                violations.append(i)
            elif b.kind == "bob" and not all(_commutes_with(k, lefts, tol) for k in b.kraus):
                violations.append(i)
    return InstrumentReport(bool(defect <= tol), float(defect), sides, tuple(violations))


class LoPopescu(NamedTuple):
    """``b psi = u w z psi`` with ``u`` in ``A'`` (stored as ``J u J``), ``w`` and ``z`` in ``A``."""

    u: AlgElement
    w: AlgElement
    z: AlgElement


def lo_popescu_transfer(psi: StdVector, b: AlgElement) -> LoPopescu:
    """Trade a Bob operation on ``psi`` for an Alice operation plus unitaries.

    Args:
        psi: A vector in the standard form of a factor.
        b: Representative ``c`` of the commutant element ``JcJ``.

    Returns:
        ``(u, w, z)`` with ``z = c v`` where ``psi = v^* |psi|``, so that
        ``||b psi|| = ||z psi||``, and with ``w`` unitary in ``A`` and ``u``
        a commutant unitary (stored through its representative) such that
        ``b psi = u w z psi``.

    Raises:
        UnsupportedError: ``psi`` lives over a non-factor.
    """
    A = psi.parent
    if not A.is_factor:
        raise UnsupportedError("lo_popescu_transfer is implemented for factors only")
    if b.parent != A:
        raise ValidationError("operator and vector belong to different algebras")
    v, _ = polar_vector(psi)
    z = b @ v
    x = (z @ AlgElement(A, psi.data)).data[0]       # z psi, an element of A
    y = commutant_act(b, psi).data[0]                # b psi = psi c^*
    # x and y share singular values: x x^* = c psi^* psi c^* = y^* y
    px, sx, qxh = np.linalg.svd(x)
    py, sy, qyh = np.linalg.svd(y)
    w = py @ px.conj().T
    u_rep = qyh.conj().T @ qxh
    return LoPopescu(AlgElement(A, [u_rep]), AlgElement(A, [w]), z)


@dataclass(frozen=True)
class PinchDefect:
    """Unpacks as ``(lhs, bound)``; ``epsilon`` and ``alphas`` are kept for inspection."""

    lhs: float
    bound: float
    epsilon: float
    alphas: tuple[float, ...]

    def __iter__(self):
        return iter((self.lhs, self.bound))

    @property
    def holds(self) -> bool:
        return self.lhs <= self.bound + 1e-12


def pinch_defect(phi, omegas: Sequence[np.ndarray], tol: float = TOL_EQ) -> PinchDefect:
    """Distance of a decomposition of (nearly) ``omega_phi`` from multiples of ``omega_phi``.

    Args:
        phi: Unit vector (a :class:`StdVector` or coordinate array).
        omegas: Positive functionals, as density operators on the same space.
        tol: Slack on the trace of ``sum omegas``.

    Returns:
        ``lhs = sum ||omega_k - alpha_k omega_phi||_1`` with
        ``alpha_k = <omega_k, phi phi^*>``, and ``bound = 2 sqrt(eps) + eps`` where
        ``eps = ||omega_phi - sum omega_k||_1``.
    """
    f = vec(phi) if isinstance(phi, StdVector) else np.asarray(phi, dtype=complex).ravel()
    nrm = np.linalg.norm(f)
    if nrm == 0 or abs(nrm - 1) > tol:
        raise ValidationError("phi must be a unit vector")
    proj = np.outer(f, f.conj())
    omegas = [np.asarray(w, dtype=complex) for w in omegas]
    for w in omegas:
        if w.shape != proj.shape:
            raise ValidationError("functional has the wrong dimension")
    total = sum(omegas) if omegas else np.zeros_like(proj)
    mass = float(np.trace(total).real)
    if mass > 1 + tol:
        raise ValidationError(f"functionals have total mass {mass:.12g} > 1")
    eps = trace_norm_hermitian(proj - total)
    alphas = tuple(float(np.vdot(f, w @ f).real) for w in omegas)
    lhs = sum(trace_norm_hermitian(w - a * proj) for w, a in zip(omegas, alphas))
    return PinchDefect(float(lhs), float(2 * np.sqrt(eps) + eps), float(eps), alphas)


def completion(c: AlgElement) -> AlgElement:
    """``(1 - c^* c)^{1/2}`` for a contraction ``c``."""
    return AlgElement(c.parent, [psd_sqrt(np.eye(b.shape[0]) - b.conj().T @ b) for b in c.data])
