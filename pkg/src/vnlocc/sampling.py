"""Seeded random generators for algebra elements, states and majorised pairs."""

from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from .algebra import Algebra, AlgElement, Density, StdVector, densities, make_algebra
from ._linalg import hermitize, psd_sqrt

__all__ = [
    "random_unitary",
    "random_matrix",
    "random_element",
    "random_unitary_element",
    "random_vector",
    "random_state",
    "random_positive",
    "random_contraction",
    "random_factor",
    "random_mixture",
    "state_with_density",
    "random_majorised_pair",
]


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def random_unitary(n: int, rng=None) -> np.ndarray:
    """Haar-random ``n x n`` unitary."""
    rng = _rng(rng)
    if n == 1:
        return np.exp(2j * np.pi * rng.random()).reshape(1, 1)
    return unitary_group.rvs(n, random_state=rng)


def random_matrix(n: int, rng=None, m: int | None = None) -> np.ndarray:
    rng = _rng(rng)
    m = n if m is None else m
    return rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))


def random_element(A: Algebra, rng=None) -> AlgElement:
    rng = _rng(rng)
    return AlgElement(A, [random_matrix(n, rng) for n in A.dims])


def random_unitary_element(A: Algebra, rng=None) -> AlgElement:
    rng = _rng(rng)
    return AlgElement(A, [random_unitary(n, rng) for n in A.dims])


def random_vector(A: Algebra, rng=None) -> StdVector:
    rng = _rng(rng)
    return StdVector(A, [random_matrix(n, rng) for n in A.dims])


def random_state(A: Algebra, rng=None) -> StdVector:
    """Unit vector in ``L^2(A, tau)`` with Gaussian blocks."""
    return random_vector(A, rng).normalized()


def random_positive(A: Algebra, rng=None, rank: int | None = None) -> AlgElement:
    """``g g^*`` with Gaussian ``g``, exactly Hermitian; strictly positive unless ``rank`` is smaller."""
    rng = _rng(rng)
    blocks = []
    for n in A.dims:
        g = random_matrix(n, rng, n if rank is None else min(rank, n))
        blocks.append(hermitize(g @ g.conj().T))
    return AlgElement(A, blocks)


def random_contraction(A: Algebra, rng=None) -> AlgElement:
    """Random element rescaled to operator norm ``U(0.2, 1)``."""
    rng = _rng(rng)
    x = random_element(A, rng)
    return x * (rng.uniform(0.2, 1.0) / x.norm())


def random_factor(n: int, normalised: bool = True) -> Algebra:
    """``M_n`` with ``tau = Tr / n`` (or ``Tr`` when not normalised)."""
    return make_algebra([(n, 1.0 / n if normalised else 1.0)])


def random_mixture(rho: Density, rng=None, terms: int = 3) -> Density:
    """``sum p_i u_i rho u_i^*`` with Dirichlet weights and Haar unitaries."""
    rng = _rng(rng)
    A = rho.parent
    p = rng.dirichlet(np.ones(terms))
    out = [np.zeros_like(b) for b in rho.data]
    for pi in p:
        u = random_unitary_element(A, rng)
        out = [o + pi * ub @ rb @ ub.conj().T for o, ub, rb in zip(out, u.data, rho.data)]
    return Density(A, out, "left")


def state_with_density(rho: AlgElement, rng=None) -> StdVector:
    """A vector ``rho^{1/2} u`` whose left density is ``rho``; ``u`` Haar-random."""
    rng = _rng(rng)
    u = random_unitary_element(rho.parent, rng)
    return StdVector(rho.parent, [psd_sqrt(b) @ ub for b, ub in zip(rho.data, u.data)])


def random_majorised_pair(A: Algebra, rng=None, terms: int = 3) -> tuple[StdVector, StdVector]:
    """``(psi, phi)`` with ``rho_psi`` a random unitary mixture of ``rho_phi``."""
    rng = _rng(rng)
    phi = random_state(A, rng)
    rho_phi, _ = densities(phi)
    rho_psi = random_mixture(rho_phi, rng, terms)
    psi = state_with_density(rho_psi, rng)
    return psi, phi


def random_measurement(A: Algebra, outcomes: int, rng=None) -> list[AlgElement]:
    """``{a_k}`` with ``sum a_k^* a_k = 1``, cut from a Haar isometry per block."""
    rng = _rng(rng)
    per_block = []
    for n in A.dims:
        iso = random_unitary(outcomes * n, rng)[:, :n]
        per_block.append([iso[k * n : (k + 1) * n] for k in range(outcomes)])
    return [AlgElement(A, [blocks[k] for blocks in per_block]) for k in range(outcomes)]


def random_one_way(A: Algebra, rng=None, branches: int = 2, kraus: int = 2, direction: str = "right"):
    """Random one-way protocol: a measurement and a unital correcting channel per branch."""
    from .channels import Branch, OneWayProtocol

    rng = _rng(rng)
    meas = random_measurement(A, branches, rng)
    return OneWayProtocol(
        A, direction, tuple(Branch(m, tuple(random_measurement(A, kraus, rng))) for m in meas)
    )
