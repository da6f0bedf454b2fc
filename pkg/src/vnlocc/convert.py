"""Deciding and constructing LOCC conversions between pure states.

For a factor ``A`` the vector ``psi`` converts to ``phi`` by one-way LOCC
exactly when ``rho_psi`` is majorised by ``rho_phi``. The constructive route:

1. eigendecompose both densities and find a doubly stochastic ``D`` with
   ``lambda_psi = D lambda_phi`` (:func:`transfer_matrix`);
2. split ``D`` into permutations (:func:`birkhoff`), which gives
   ``rho_psi = sum p_i u_i rho_phi u_i^*`` (:func:`mixing_decomposition`);
3. Alice measures with ``M_i = rho_i^{1/2} rho_psi^{-1/2}`` and rotates by
   ``u_i^*`` (:func:`measurement_operators`);
4. Bob maps each post-measurement vector onto ``sqrt(p_i) phi`` with a
   commutant partial isometry (:func:`correction_operators`).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from ._linalg import (
    TOL_EQ,
    left_polar_isometry,
    low_rank_trace_norm,
    psd_eigh,
    psd_pinv_sqrt,
    psd_sqrt,
    trace_norm_hermitian,
)
from .algebra import (
    Algebra,
    AlgElement,
    Density,
    StdVector,
    act,
    densities,
    ensure_state,
    make_algebra,
    modular_conjugation,
    unvec,
    vec,
)
from .channels import (
    Branch,
    Instrument,
    OneWayProtocol,
    apply_schrodinger,
    completion,
    mirror_protocol,
    vector_state,
)
from .exceptions import (
    ContractViolation,
    MatchingError,
    NotConvertibleError,
    UnsupportedError,
    ValidationError,
)
from .spectral import majorises

__all__ = [
    "DoublyStochastic",
    "MixingDecomposition",
    "decide_convertible",
    "decide_convertible_abelian",
    "abelian_protocol",
    "transfer_matrix",
    "birkhoff",
    "mixing_decomposition",
    "measurement_operators",
    "correction_operators",
    "synthesize_protocol",
    "verify_protocol",
    "output_state",
    "reduce_to_one_way",
]

# numerical bug threshold; healthy runs sit many orders of magnitude below
_BUG_LEVEL = 1e-6


def _require_factor(A: Algebra, what: str):
    if not A.is_factor:
        raise UnsupportedError(
            f"{what} is only defined for factors; for {A!r} use spectral.majorises on the densities"
        )


def decide_convertible(A: Algebra, psi: StdVector, phi: StdVector, tol: float = TOL_EQ) -> bool:
    """True iff ``psi`` converts to ``phi`` by LOCC, i.e. ``rho_psi`` is majorised by ``rho_phi``.

    Raises:
        UnsupportedError: ``A`` has more than one block.
        ValidationError: a vector is not a unit vector of ``A``'s standard form.
    """
    _require_factor(A, "decide_convertible")
    for x in (psi, phi):
        if x.parent != A:
            raise ValidationError("vector does not belong to this algebra")
        ensure_state(x, tol)
    return majorises(A, densities(psi)[0], densities(phi)[0], tol)


def decide_convertible_abelian(weights: Sequence[float], psi, phi, tol: float = TOL_EQ) -> bool:
    """Convertibility over a finite discrete measure: ``|psi| = |phi|`` pointwise.

    Args:
        weights: Point masses ``m_i > 0``.
        psi, phi: Complex arrays with ``sum m_i |x_i|^2 = 1``.
    """
    w = np.asarray(weights, dtype=float)
    a = np.asarray(psi, dtype=complex).ravel()
    b = np.asarray(phi, dtype=complex).ravel()
    if not (w.size == a.size == b.size):
        raise ValidationError(f"length mismatch: {w.size} weights, {a.size} and {b.size} entries")
    if np.any(w <= 0):
        raise ValidationError("weights must be positive")
    for x in (a, b):
        nrm = float(np.sqrt(np.dot(w, np.abs(x) ** 2)))
        if abs(nrm - 1) > tol:
            raise ValidationError(f"vector must have unit norm, got {nrm:.12g}")
    return bool(np.all(np.abs(np.abs(a) - np.abs(b)) <= tol))


def abelian_protocol(weights: Sequence[float], psi, phi, tol: float = TOL_EQ) -> OneWayProtocol:
    """Single-branch protocol multiplying by the phase ``theta`` with ``theta psi = phi``."""
    if not decide_convertible_abelian(weights, psi, phi, tol):
        raise NotConvertibleError("|psi| and |phi| differ; no LOCC conversion over an abelian algebra")
    a = np.asarray(psi, dtype=complex).ravel()
    b = np.asarray(phi, dtype=complex).ravel()
    theta = np.ones_like(a)
    nz = np.abs(a) > 0
    theta[nz] = b[nz] / a[nz]
    theta[nz] /= np.abs(theta[nz])
    A = make_algebra([(1, m) for m in weights])
    one = AlgElement.identity(A)
    return OneWayProtocol(A, "right", (Branch(AlgElement(A, [[[t]] for t in theta]), (one,)),))


@dataclass(frozen=True)
class DoublyStochastic:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError("doubly stochastic matrix must be square")
        if np.any(m < -1e-12):
            raise ValidationError("doubly stochastic matrix has negative entries")
        if np.abs(m.sum(0) - 1).max() > 1e-10 or np.abs(m.sum(1) - 1).max() > 1e-10:
            raise ValidationError("row and column sums must equal 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def _check_majorised(src: np.ndarray, tgt: np.ndarray, tol: float):
    if src.shape != tgt.shape or src.ndim != 1:
        raise ValidationError("spectra must be vectors of equal length")
    if np.any(np.diff(src) > tol) or np.any(np.diff(tgt) > tol):
        raise ValidationError("spectra must be sorted in descending order")
    gap = np.cumsum(src) - np.cumsum(tgt)
    if abs(gap[-1]) > tol or gap.max() > tol:
        raise NotConvertibleError(f"source is not majorised by target (excess {max(gap.max(), abs(gap[-1])):.3e})")


def transfer_matrix(src, tgt, tol: float = TOL_EQ) -> DoublyStochastic:
    """Doubly stochastic ``D`` with ``src = D tgt`` as a product of T-transforms.

    Each step averages two coordinates of the current vector (one transposition
    mixed with the identity) and fixes at least one more coordinate, so at most
    ``n - 1`` steps are used.

    Args:
        src: Descending vector majorised by ``tgt``.
        tgt: Descending vector with the same total.

    Raises:
        NotConvertibleError: ``src`` is not majorised by ``tgt``.
    """
    x = np.asarray(src, dtype=float).ravel()
    y = np.asarray(tgt, dtype=float).ravel().copy()
    _check_majorised(x, y, tol)
    n = x.size
    d = np.eye(n)
    atol = 1e-14 * max(1.0, float(np.abs(y).max()) if n else 1.0)
    for _ in range(max(n - 1, 0)):
        diff = y - x
        above = np.nonzero(diff > atol)[0]
        if above.size == 0:
            break
        # largest j with y_j > x_j that still has a later k with y_k < x_k
        j = k = None
        for jj in above[::-1]:
            later = np.nonzero(diff[jj + 1 :] < -atol)[0]
            if later.size:
                j, k = int(jj), int(jj + 1 + later[0])
                break
        if k is None:
            break
        delta = min(diff[j], -diff[k])
        lam = 1.0 - delta / (y[j] - y[k])
        t = np.eye(n)
        t[[j, k], [j, k]] = lam
        t[j, k] = t[k, j] = 1.0 - lam
        y = t @ y
        if diff[j] <= -diff[k]:
            y[j] = x[j]
        else:
            y[k] = x[k]
        d = t @ d
    return DoublyStochastic(d)


def _caratheodory(weights: list[float], perms: list[np.ndarray], bound: int):
    w = np.array(weights, dtype=float)
    while w.size > bound:
        m = np.stack([p.ravel() for p in perms], axis=1)
        _, s, vh = np.linalg.svd(m)
        c = vh[-1].conj().real
        if not np.any(c > 0):
            c = -c
        pos = c > 1e-15
        t = np.min(w[pos] / c[pos])
        w = w - t * c
        keep = w > 1e-15
        w, perms = w[keep], [p for p, k in zip(perms, keep) if k]
    return list(w / w.sum()), perms


def birkhoff(D: Union[DoublyStochastic, np.ndarray], threshold: float = 1e-13) -> list[tuple[float, np.ndarray]]:
    """Birkhoff decomposition ``D = sum p_i P_i`` into permutation matrices.

    Greedy: repeatedly take a perfect matching on the positive entries
    (maximising the product of matched entries) and subtract the smallest
    matched entry. A Caratheodory reduction keeps at most ``(n-1)^2 + 1``
    terms.

    Raises:
        MatchingError: no perfect matching on the support of the remainder.
    """
    D = D if isinstance(D, DoublyStochastic) else DoublyStochastic(D)
    n = D.n
    r = np.array(D.matrix, dtype=float)
    r[r < threshold] = 0.0
    weights, perms = [], []
    big = 1e6
    for _ in range(n * n + 1):
        mass = r.sum() / n
        if mass <= 1e-10:
            break
        with np.errstate(divide="ignore"):
            cost = np.where(r > 0, -np.log(np.where(r > 0, r, 1.0)), big)
        rows, cols = linear_sum_assignment(cost)
        picked = r[rows, cols]
        if np.any(picked <= 0):
            raise MatchingError(f"no perfect matching on the support (remaining mass {mass:.3e})")
        p = float(picked.min())
        perm = np.zeros((n, n))
        perm[rows, cols] = 1.0
        weights.append(p)
        perms.append(perm)
        r = r - p * perm
        r[r < threshold] = 0.0
    else:
        raise MatchingError("decomposition did not terminate")
    total = sum(weights)
    weights = [w / total for w in weights]
    bound = (n - 1) ** 2 + 1
    if len(weights) > bound:
        weights, perms = _caratheodory(weights, perms, bound)
    return list(zip(weights, perms))


@dataclass(frozen=True)
class MixingDecomposition:
    """``rho_psi = sum p_i u_i rho_phi u_i^*``."""

    weights: tuple[float, ...]
    unitaries: tuple[AlgElement, ...]
    target: Density
    source: Density

    def reconstruct(self) -> AlgElement:
        A = self.target.parent
        out = AlgElement.zeros(A)
        for p, u in zip(self.weights, self.unitaries):
            out = out + p * (u @ self.target @ u.adjoint())
        return out

    def residual(self) -> float:
        """``|| rho_psi - sum p_i u_i rho_phi u_i^* ||_1`` with respect to ``tau``."""
        A = self.target.parent
        diff = self.source - self.reconstruct()
        return float(sum(w * trace_norm_hermitian(b) for w, b in zip(A.weights, diff.data)))


def _desc_eigh(m: np.ndarray):
    vals, vecs = psd_eigh(m)
    return vals[::-1], vecs[:, ::-1]


def mixing_decomposition(A: Algebra, rho_psi: AlgElement, rho_phi: AlgElement, tol: float = TOL_EQ) -> MixingDecomposition:
    """Unitary mixture of ``rho_phi`` equal to ``rho_psi``.

    Raises:
        NotConvertibleError: ``rho_psi`` is not majorised by ``rho_phi``.
        UnsupportedError: ``A`` is not a factor.
    """
    _require_factor(A, "mixing_decomposition")
    lp, up = _desc_eigh(rho_psi.data[0])
    lf, uf = _desc_eigh(rho_phi.data[0])
    d = transfer_matrix(lp, lf, tol)
    terms = birkhoff(d)
    unitaries = tuple(AlgElement(A, [up @ perm @ uf.conj().T]) for _, perm in terms)
    src = rho_psi if isinstance(rho_psi, Density) else Density(A, rho_psi.data, "left")
    tgt = rho_phi if isinstance(rho_phi, Density) else Density(A, rho_phi.data, "left")
    return MixingDecomposition(tuple(p for p, _ in terms), unitaries, tgt, src)


def measurement_operators(rho_psi: AlgElement, mix: MixingDecomposition) -> tuple[list[AlgElement], AlgElement]:
    """Alice's measurement ``M_i = rho_i^{1/2} pinv(rho_psi^{1/2})`` and the complement ``M_0``.

    Here ``rho_i = p_i u_i rho_phi u_i^*``, so ``M_i rho_psi M_i^* = rho_i``
    and ``sum M_i^* M_i + M_0^* M_0 = 1`` with ``M_0 = 1 - supp(rho_psi)``.

    Raises:
        ContractViolation: some ``rho_i`` leaks out of the support of ``rho_psi``.
    """
    A = rho_psi.parent
    _require_factor(A, "measurement_operators")
    r = rho_psi.data[0]
    n = r.shape[0]
    pinv, supp = psd_pinv_sqrt(r)
    root_phi = psd_sqrt(mix.target.data[0])
    scale = max(float(np.abs(r).max()), 1e-300)
    ops = []
    for p, u in zip(mix.weights, mix.unitaries):
        ub = u.data[0]
        root_i = np.sqrt(p) * ub @ root_phi @ ub.conj().T
        leak = np.abs((np.eye(n) - supp) @ root_i @ root_i).max()
        if leak > _BUG_LEVEL * scale:
            raise ContractViolation(f"branch density leaves supp(rho_psi) by {leak:.3e}")
        ops.append(AlgElement(A, [root_i @ pinv]))
    return ops, AlgElement(A, [np.eye(n) - supp])


def correction_operators(
    psi: StdVector, phi: StdVector, ops: Sequence[AlgElement], mix: MixingDecomposition
) -> list[tuple[AlgElement, AlgElement]]:
    """Per-branch ``(a_i, c_i)``: Alice's operator ``a_i = u_i^* M_i`` and Bob's ``c_i``.

    ``c_i`` is the representative of a commutant partial isometry with
    ``(a_i psi) c_i^* = sqrt(p_i) phi``. Both sides have left density
    ``p_i rho_phi``, so writing ``x = |x^*| V_x`` for each, ``c_i^* = V_eta^* V_Y``.

    Raises:
        ContractViolation: a branch misses its target beyond numerical noise.
    """
    A = psi.parent
    out = []
    for m, p, u in zip(ops, mix.weights, mix.unitaries):
        a = u.adjoint() @ m
        eta = act("left", a, psi).data[0]
        target = np.sqrt(p) * phi.data[0]
        r = left_polar_isometry(eta).conj().T @ left_polar_isometry(target)
        c = AlgElement(A, [r.conj().T])
        miss = np.linalg.norm(eta @ r - target) * np.sqrt(A.weights[0])
        if miss > _BUG_LEVEL:
            raise ContractViolation(f"correction misses its target by {miss:.3e}")
        out.append((a, c))
    return out


def synthesize_protocol(
    A: Algebra, psi: StdVector, phi: StdVector, direction: str = "right", tol: float = TOL_EQ
) -> OneWayProtocol:
    """One-way LOCC protocol mapping ``omega_psi`` to ``omega_phi`` exactly.

    Args:
        A: A factor.
        psi, phi: Unit vectors with ``rho_psi`` majorised by ``rho_phi``.
        direction: ``"right"`` (Alice measures, Bob corrects) or ``"left"``.

    Raises:
        NotConvertibleError: the majorisation condition fails.
        ContractViolation: the assembled protocol misses ``phi`` beyond 1e-6.
    """
    if direction == "left":
        theta = synthesize_protocol(A, modular_conjugation(psi), modular_conjugation(phi), "right", tol)
        return mirror_protocol(theta)
    if direction != "right":
        raise ValidationError(f"direction must be 'right' or 'left', got {direction!r}")
    if not decide_convertible(A, psi, phi, tol):
        raise NotConvertibleError("rho_psi is not majorised by rho_phi")
    rho_psi, _ = densities(psi)
    rho_phi, _ = densities(phi)
    mix = mixing_decomposition(A, rho_psi, rho_phi, tol)
    ops, m0 = measurement_operators(rho_psi, mix)
    pairs = correction_operators(psi, phi, ops, mix)
    branches = [Branch(a, (c, completion(c))) for a, c in pairs]
    one = AlgElement.identity(A)
    branches.append(Branch(m0, (one,)))
    labels = tuple(range(1, len(pairs) + 1)) + (0,)
    theta = OneWayProtocol(A, "right", tuple(branches), labels)
    res = verify_protocol(theta, psi, phi)
    if res > _BUG_LEVEL:
        raise ContractViolation(f"synthesised protocol residual {res:.3e}")
    return theta


def output_state(theta: Union[OneWayProtocol, Instrument], psi: StdVector) -> np.ndarray:
    """``Theta_*(omega_psi)`` as an ``N x N`` density operator."""
    return apply_schrodinger(theta, vector_state(psi))


def verify_protocol(theta: OneWayProtocol, psi: StdVector, phi: StdVector, method: str = "full") -> float:
    """``|| Theta_*(omega_psi) - omega_phi ||_1`` on ``L^2``.

    ``method="full"`` builds the difference as an ``N x N`` matrix;
    ``method="lowrank"`` works in the span of the output vectors.
    """
    if theta.parent != psi.parent or psi.parent != phi.parent:
        raise ValidationError("protocol and vectors belong to different algebras")
    if method == "full":
        diff = output_state(theta, psi) - vector_state(phi)
        return trace_norm_hermitian(diff)
    if method == "lowrank":
        outs = [vec(x) for group in theta.branch_vectors(psi) for x in group]
        return low_rank_trace_norm(outs, [vec(phi)])
    raise ValidationError(f"unknown method {method!r}")


Round = Union[OneWayProtocol, Instrument]


class _Pure(NamedTuple):
    vector: StdVector
    ratio: float


def _pure_part(A: Algebra, omega: np.ndarray, tol: float) -> _Pure:
    vals, vecs = np.linalg.eigh(0.5 * (omega + omega.conj().T))
    vals = vals[::-1]
    top = vals[0]
    if top <= 0:
        raise ValidationError("output state vanishes")
    ratio = float(max(abs(vals[1]), abs(vals[-1])) / top) if vals.size > 1 else 0.0
    if ratio > tol:
        raise ValidationError(f"output is not a pure vector state (second eigenvalue ratio {ratio:.3e})")
    return _Pure(unvec(A, np.sqrt(top) * vecs[:, -1]), ratio)


def reduce_to_one_way(rounds: Sequence[Round], psi: StdVector, tol: float = TOL_EQ) -> OneWayProtocol:
    """Replace a multi-round LOCC map by a one-way right protocol with the same effect on ``psi``.

    ``rounds`` are applied in order (first element first); any round may be a
    linked :class:`Instrument`. The output on ``omega_psi`` must be a pure
    vector state ``omega_phi``; the result is synthesised afresh for
    ``psi -> phi``.

    Raises:
        ValidationError: the output is mixed, or ``rounds`` is empty.
        UnsupportedError: not a factor.
    """
    A = psi.parent
    _require_factor(A, "reduce_to_one_way")
    if isinstance(rounds, (OneWayProtocol, Instrument)):
        rounds = [rounds]
    if not rounds:
        raise ValidationError("need at least one round")
    omega = vector_state(psi)
    for r in rounds:
        omega = apply_schrodinger(r, omega)
    phi = _pure_part(A, omega, tol).vector
    return synthesize_protocol(A, psi, phi.normalized(), "right", tol)
