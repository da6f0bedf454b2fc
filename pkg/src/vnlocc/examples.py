"""Trace-vector scenarios at desk scale, and a numerical trace-vector test.

* Spin chain: ``n`` maximally entangled qubit pairs. The left half is
  ``M_{2^n}`` with ``tau = Tr / 2^n`` and the pair state is the identity
  matrix in the standard form.
* Weyl pair: clock and shift on ``C^q`` with ``UV = e^{2 pi i p/q} VU``,
  a rational truncation of the irrational rotation.
* CAR: the real-wave fields ``B(e_j) = a^*(e_j) + a(e_j)`` on the Fock space
  over ``C^d``, the vacuum and fermionic Gaussian vectors.
"""

from __future__ import annotations

import math
from functools import reduce
from itertools import combinations
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .algebra import Algebra, AlgElement, StdVector, make_algebra, unvec
from .exceptions import ValidationError

__all__ = [
    "SPIN_CHAIN_CAP",
    "CAR_CAP",
    "spin_chain_state",
    "bell_pairs_vector",
    "WeylPair",
    "weyl_pair",
    "FockSpace",
    "car_fock",
    "gaussian_vector",
    "CliffordStandardForm",
    "car_standard_form",
    "TraceVectorReport",
    "is_trace_vector",
]

SPIN_CHAIN_CAP = 6
CAR_CAP = 10

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.diag([1.0, -1.0]).astype(complex)
_I2 = np.eye(2, dtype=complex)
# lowers |1> (occupied) to |0> (empty)
_LOWER = np.array([[0, 1], [0, 0]], dtype=complex)


def _kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


def spin_chain_state(pairs: int, cap: int = SPIN_CHAIN_CAP) -> tuple[Algebra, StdVector]:
    """Left half-chain ``M_{2^n}`` and the state of ``n`` entangled pairs.

    In coordinates the vector is ``2^{-n/2} sum_i e_i (x) e_i``; as an element
    of ``L^2(M_{2^n}, Tr/2^n)`` it is the identity matrix.
    """
    if isinstance(pairs, bool) or int(pairs) != pairs or not 1 <= pairs <= cap:
        raise ValidationError(f"pairs must be an integer in [1, {cap}], got {pairs!r}")
    q = 2 ** int(pairs)
    A = make_algebra([(q, 1.0 / q)])
    return A, StdVector(A, [np.eye(q)])


def bell_pairs_vector(pairs: int) -> np.ndarray:
    """``(|00> + |11>)/sqrt 2`` on each pair, reordered as (all Alice) (x) (all Bob)."""
    bell = np.array([[1, 0], [0, 1]], dtype=complex) / math.sqrt(2)  # bell[a, b]
    t = reduce(np.multiply.outer, [bell] * pairs) if pairs > 1 else bell
    # axes are (a1, b1, a2, b2, ...); bring Alice's indices first
    order = list(range(0, 2 * pairs, 2)) + list(range(1, 2 * pairs, 2))
    return np.transpose(t, order).reshape(-1)


class WeylPair(NamedTuple):
    algebra: Algebra
    U: AlgElement
    V: AlgElement
    psi: StdVector
    omega: complex


def weyl_pair(q: int, p: int = 1) -> WeylPair:
    """Clock ``U = diag(1, w, ..., w^{q-1})`` and shift ``V e_j = e_{j+1}`` with ``w = e^{2 pi i p/q}``.

    The algebra is ``M_q`` with ``tau = Tr / q``, generated by ``U`` and ``V``,
    and ``psi`` is its trace vector.
    """
    if int(q) != q or q < 2:
        raise ValidationError(f"q must be an integer >= 2, got {q!r}")
    if int(p) != p or math.gcd(int(p), int(q)) != 1:
        raise ValidationError(f"p = {p!r} must be an integer coprime to q = {q}")
    q, p = int(q), int(p)
    w = np.exp(2j * np.pi * p / q)
    diag = np.empty(q, dtype=complex)
    diag[0] = 1.0
    # u_{j+1} = w u_j keeps U V = w V U exact off the wrap-around entry
    for j in range(1, q):
        diag[j] = w * diag[j - 1]
    shift = np.roll(np.eye(q), 1, axis=0)
    A = make_algebra([(q, 1.0 / q)])
    return WeylPair(A, AlgElement(A, [np.diag(diag)]), AlgElement(A, [shift]), StdVector(A, [np.eye(q)]), w)


class FockSpace:
    """Antisymmetric Fock space over ``C^d`` via the Jordan-Wigner map.

    Basis vectors are occupation strings; bit ``j`` (most significant first)
    records whether mode ``j`` is filled. ``a_j = Z (x) ... (x) Z (x) s (x) 1 ...``
    with ``s`` the lowering matrix.
    """

    def __init__(self, modes: int, cap: int = CAR_CAP):
        if isinstance(modes, bool) or int(modes) != modes or not 1 <= modes <= cap:
            raise ValidationError(f"modes must be an integer in [1, {cap}], got {modes!r}")
        self.modes = int(modes)
        self.dim = 2 ** self.modes
        d = self.modes
        self.annihilators = tuple(
            _kron_all([_Z] * j + [_LOWER] + [_I2] * (d - j - 1)) for j in range(d)
        )
        self.parity = _kron_all([_Z] * d)
        vac = np.zeros(self.dim, dtype=complex)
        vac[0] = 1.0
        self.vacuum = vac

    def _coeffs(self, psi) -> np.ndarray:
        psi = np.asarray(psi, dtype=complex).ravel()
        if psi.size != self.modes:
            raise ValidationError(f"one-particle vector needs {self.modes} entries, got {psi.size}")
        return psi

    def a(self, psi) -> np.ndarray:
        """Annihilation ``a(psi)``, conjugate-linear in ``psi``."""
        psi = self._coeffs(psi)
        return sum(np.conj(c) * aj for c, aj in zip(psi, self.annihilators))

    def adag(self, psi) -> np.ndarray:
        """Creation ``a^*(psi) = a(psi)^*``."""
        return self.a(psi).conj().T

    def field(self, psi) -> np.ndarray:
        """``B(psi) = a^*(psi) + a(psi)``; self-adjoint."""
        return self.adag(psi) + self.a(psi)

    def real_fields(self) -> list[np.ndarray]:
        """``B(e_j)`` for the real basis vectors ``e_j``."""
        return [self.field(np.eye(self.modes)[j]) for j in range(self.modes)]

    def commutant_fields(self) -> list[np.ndarray]:
        """``S B(i e_j)``, which commute with every real field."""
        return [self.parity @ self.field(1j * np.eye(self.modes)[j]) for j in range(self.modes)]

    def pair_creation(self, c: np.ndarray) -> np.ndarray:
        """``a^*(c) = sum_ij c_ij a_i^* a_j^*``."""
        c = np.asarray(c, dtype=complex)
        ad = [a.conj().T for a in self.annihilators]
        return sum(c[i, j] * ad[i] @ ad[j] for i in range(self.modes) for j in range(self.modes))


def car_fock(d: int) -> FockSpace:
    return FockSpace(d)


def gaussian_vector(F: FockSpace, c, tol: float = 1e-12) -> np.ndarray:
    """``det(1 + c^* c)^{-1/4} exp(-a^*(c)/2) Omega`` for antisymmetric ``c``.

    Raises:
        ValidationError: ``c`` is not a ``d x d`` antisymmetric matrix.
    """
    c = np.asarray(c, dtype=complex)
    if c.shape != (F.modes, F.modes):
        raise ValidationError(f"c must be {F.modes} x {F.modes}, got {c.shape}")
    if np.abs(c + c.T).max() > tol:
        raise ValidationError("c must be antisymmetric")
    norm = np.linalg.det(np.eye(F.modes) + c.conj().T @ c).real ** -0.25
    return norm * (scipy.linalg.expm(-0.5 * F.pair_creation(c)) @ F.vacuum)


class CliffordStandardForm(NamedTuple):
    """The real-wave algebra for even ``d`` as ``M_{2^{d/2}}`` in standard form."""

    algebra: Algebra
    gammas: tuple[np.ndarray, ...]
    isometry: np.ndarray       # Fock coordinates -> vec coordinates of L^2

    def to_standard(self, xi) -> StdVector:
        return unvec(self.algebra, self.isometry @ np.asarray(xi, dtype=complex))


def _pauli_gammas(m: int) -> list[np.ndarray]:
    out = []
    for k in range(m):
        pre, post = [_Z] * k, [_I2] * (m - k - 1)
        out.append(_kron_all(pre + [_X] + post))
        out.append(_kron_all(pre + [_Y] + post))
    return out


def car_standard_form(F: FockSpace) -> CliffordStandardForm:
    """Identify the Fock space with ``L^2(M_{2^{d/2}}, Tr/2^{d/2})`` for even ``d``.

    The word ``B(e_{s_1}) ... B(e_{s_k}) Omega`` maps to the matching product of
    Clifford generators; both families are orthonormal, so this is unitary,
    carries ``Omega`` to the identity, and intertwines ``B(e_j)`` with left
    multiplication by the ``j``-th generator.
    """
    d = F.modes
    if d % 2:
        raise ValidationError("the real-wave algebra is a factor only for an even number of modes")
    m = d // 2
    q = 2**m
    gammas = _pauli_gammas(m)
    fields = F.real_fields()
    A = make_algebra([(q, 1.0 / q)])
    scale = math.sqrt(1.0 / q)
    cols_fock, cols_std = [], []
    for k in range(d + 1):
        for s in combinations(range(d), k):
            w_f = reduce(lambda acc, j: acc @ fields[j], s, np.eye(F.dim, dtype=complex))
            w_c = reduce(lambda acc, j: acc @ gammas[j], s, np.eye(q, dtype=complex))
            cols_fock.append(w_f @ F.vacuum)
            cols_std.append(scale * w_c.ravel())
    iso = np.stack(cols_std, axis=1) @ np.stack(cols_fock, axis=1).conj().T
    return CliffordStandardForm(A, tuple(gammas), iso)


class TraceVectorReport(NamedTuple):
    verdict: bool | None
    defect: float
    saturated: bool
    span_dim: int

    @property
    def inconclusive(self) -> bool:
        return self.verdict is None


def is_trace_vector(
    generators: Sequence[np.ndarray], omega, depth: int = 16, tol: float = 1e-8
) -> TraceVectorReport:
    """Test ``<xy Omega, Omega> = <yx Omega, Omega>`` on the algebra generated by ``generators``.

    Words in the generators (and their adjoints) are grown level by level up
    to ``depth``, keeping those that enlarge the linear span. The span is
    saturated once a level adds nothing; then it is the generated algebra and
    checking the trace property on the kept words is exact by bilinearity.

    Returns:
        ``verdict`` is ``None`` when the span has not saturated within ``depth``.
    """
    omega = np.asarray(omega, dtype=complex).ravel()
    if abs(np.linalg.norm(omega) - 1) > 1e-9:
        raise ValidationError("omega must be a unit vector")
    gens = [np.asarray(g, dtype=complex) for g in generators]
    if not gens:
        raise ValidationError("need at least one generator")
    n = omega.size
    if any(g.shape != (n, n) for g in gens):
        raise ValidationError("generators must act on the space of omega")
    letters = []
    for g in gens:
        letters.append(g)
        if np.abs(g - g.conj().T).max() > 1e-12:
            letters.append(g.conj().T)

    basis_q = np.zeros((n * n, 0), dtype=complex)
    words: list[np.ndarray] = []

    def _offer(w: np.ndarray) -> bool:
        nonlocal basis_q
        v = w.ravel()
        r = v - basis_q @ (basis_q.conj().T @ v)
        r = r - basis_q @ (basis_q.conj().T @ r)
        nr = np.linalg.norm(r)
        if nr <= 1e-10 * max(1.0, np.linalg.norm(v)):
            return False
        basis_q = np.hstack([basis_q, (r / nr)[:, None]])
        words.append(w)
        return True

    _offer(np.eye(n, dtype=complex))
    frontier = list(words)
    saturated = False
    for _ in range(depth):
        new = []
        for w in frontier:
            for g in letters:
                cand = w @ g
                if _offer(cand):
                    new.append(cand)
        if not new:
            saturated = True
            break
        frontier = new

    vecs = [w @ omega for w in words]
    # <x y Omega, Omega> = <y Omega, x^* Omega>
    adj = [w.conj().T @ omega for w in words]
    gram = np.array([[np.vdot(a, v) for v in vecs] for a in adj])   # gram[x, y] = <xy O, O>
    defect = float(np.abs(gram - gram.T).max()) if words else 0.0
    verdict = None if not saturated else bool(defect <= tol)
    return TraceVectorReport(verdict, defect, saturated, len(words))
