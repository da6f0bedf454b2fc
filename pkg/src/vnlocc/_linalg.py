"""Small dense kernels used across modules (Hermitian spectra, roots, polar parts)."""

from __future__ import annotations

import numpy as np

from .exceptions import ValidationError

TOL_EQ = 1e-9
TOL_PSD = 1e-10
# relative cutoff for singular values treated as zero
RCOND = 1e-12


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def psd_eigh(m: np.ndarray, tol_psd: float = TOL_PSD) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a positive semidefinite matrix.

    Eigenvalues in ``[-tol_psd, 0)`` are clipped to zero; anything more negative
    raises.
    """
    vals, vecs = np.linalg.eigh(hermitize(m))
    if vals.size and vals[0] < -tol_psd:
        raise ValidationError(f"matrix is not positive semidefinite (eigenvalue {vals[0]:.3e})")
    return np.clip(vals, 0.0, None), vecs


def psd_eigvalsh(m: np.ndarray, tol_psd: float = TOL_PSD) -> np.ndarray:
    vals = np.linalg.eigvalsh(hermitize(m))
    if vals.size and vals[0] < -tol_psd:
        raise ValidationError(f"matrix is not positive semidefinite (eigenvalue {vals[0]:.3e})")
    return np.clip(vals, 0.0, None)


def psd_sqrt(m: np.ndarray, tol_psd: float = TOL_PSD) -> np.ndarray:
    vals, vecs = psd_eigh(m, tol_psd)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def psd_pinv_sqrt(m: np.ndarray, rcond: float = TOL_PSD) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(pinv(m^{1/2}), supp(m))``.

    The support keeps eigenvalues above ``rcond`` times the largest one. The cut
    is on ``m`` rather than ``m^{1/2}``: roundoff eigenvalues near ``eps |m|``
    have square roots near ``1e-8``, which a cut on the roots would keep.
    """
    vals, vecs = psd_eigh(m)
    roots = np.sqrt(vals)
    keep = vals > rcond * vals.max() if vals.size and vals.max() > 0 else np.zeros_like(vals, bool)
    inv = np.zeros_like(roots)
    inv[keep] = 1.0 / roots[keep]
    pinv = (vecs * inv) @ vecs.conj().T
    support = (vecs[:, keep]) @ vecs[:, keep].conj().T
    return pinv, support


def svd_rank(s: np.ndarray, rcond: float = RCOND) -> int:
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s > rcond * s[0]))


def left_polar_isometry(x: np.ndarray, rcond: float = RCOND) -> np.ndarray:
    """Partial isometry ``v`` with ``x = |x^*| v`` (support-restricted)."""
    u, s, vh = np.linalg.svd(x)
    r = svd_rank(s, rcond)
    return u[:, :r] @ vh[:r, :]


def trace_norm_hermitian(m: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvalsh(hermitize(m))).sum())


def low_rank_trace_norm(plus: list[np.ndarray], minus: list[np.ndarray]) -> float:
    """Trace norm of ``sum v v^* - sum w w^*`` for column vectors ``v``, ``w``.

    Works in the span of the vectors, so the ambient dimension never gets
    materialised as a square matrix.
    """
    cols = list(plus) + list(minus)
    if not cols:
        return 0.0
    v = np.stack([np.ravel(c) for c in cols], axis=1)
    signs = np.concatenate([np.ones(len(plus)), -np.ones(len(minus))])
    q, r = np.linalg.qr(v)
    small = (r * signs) @ r.conj().T
    return trace_norm_hermitian(small)


def operator_norm(m: np.ndarray) -> float:
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))
