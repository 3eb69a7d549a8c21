"""Dense complex linear algebra for the 2-6 dimensional spin spaces used here.

Operators are plain ``numpy`` arrays of dtype ``complex128``. Hamiltonians are
in angular frequency (rad/us) and times in microseconds, so ``exp(-i H t)`` is
dimensionless without any further 2*pi bookkeeping.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "CONSTRUCTION_TOL",
    "SPECTRAL_TOL",
    "NotHermitianError",
    "dagger",
    "kron",
    "is_hermitian",
    "eig_hermitian",
    "expm_unitary",
    "ket",
    "projector",
    "partial_trace_electron",
    "purity",
    "state_fidelity",
    "check_density_matrix",
]

CONSTRUCTION_TOL = 1e-12
SPECTRAL_TOL = 1e-10


class NotHermitianError(ValueError):
    """Raised when an operation that requires a Hermitian operator gets something else."""

    def __init__(self, deviation: float, tol: float):
        self.deviation = deviation
        super().__init__(
            f"operator is not Hermitian: max|A - A^dagger| = {deviation:.3e} > {tol:.1e}"
        )


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(a))


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product with row-major blocks: ``out[i*nb + k, j*nb + l] = a[i, j] * b[k, l]``."""
    a = np.atleast_2d(np.asarray(a))
    b = np.atleast_2d(np.asarray(b))
    return np.kron(a, b)


def _hermitian_deviation(h: np.ndarray) -> float:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ValueError("operator has non-finite entries")
    return float(np.max(np.abs(h - dagger(h)), initial=0.0))


def is_hermitian(h: np.ndarray, tol: float = SPECTRAL_TOL) -> bool:
    return _hermitian_deviation(h) <= tol


def _require_hermitian(h: np.ndarray, tol: float) -> np.ndarray:
    dev = _hermitian_deviation(h)
    if dev > tol:
        raise NotHermitianError(dev, tol)
    h = np.asarray(h, dtype=complex)
    return 0.5 * (h + dagger(h))


def _canonical_basis(vecs: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis for the column span of ``vecs``.

    The standard basis vectors are projected onto the subspace and
    Gram-Schmidt orthonormalized, always taking the candidate with the largest
    remaining component next (ties broken by index). The result depends only
    on the subspace, not on which basis LAPACK happened to return.
    """
    n, k = vecs.shape
    if k == 1:
        basis = vecs.copy()
    else:
        proj = vecs @ dagger(vecs)
        candidates = [proj[:, j] for j in range(n)]
        basis_cols: list[np.ndarray] = []
        for _ in range(k):
            best, best_norm = None, -1.0
            for c in candidates:
                r = c.copy()
                for q in basis_cols:
                    r = r - q * np.vdot(q, r)
                nrm = np.linalg.norm(r)
                if nrm > best_norm + 1e-12:
                    best, best_norm = r, nrm
            basis_cols.append(best / best_norm)
        basis = np.column_stack(basis_cols)
    # fix the phase: largest-magnitude entry (first one on ties) real and positive
    for j in range(basis.shape[1]):
        col = basis[:, j]
        mags = np.abs(col)
        idx = int(np.argmax(mags > mags.max() - 1e-12))
        basis[:, j] = col * (np.conj(col[idx]) / abs(col[idx]))
    return basis


def eig_hermitian(h: np.ndarray, tol: float = SPECTRAL_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Returns
    -------
    eigenvalues : ndarray of float, ascending
    eigenvectors : ndarray, columns are the eigenvectors

    Degenerate eigenspaces (eigenvalues within ``tol`` of each other) are given a
    canonical, reproducible orthonormal basis.
    """
    h = _require_hermitian(h, tol)
    w, v = np.linalg.eigh(h)
    scale = max(1.0, float(np.max(np.abs(w), initial=0.0)))
    start = 0
    n = len(w)
    while start < n:
        stop = start + 1
        while stop < n and w[stop] - w[stop - 1] <= tol * scale:
            stop += 1
        v[:, start:stop] = _canonical_basis(v[:, start:stop])
        if stop - start > 1:
            w[start:stop] = np.mean(w[start:stop])
        start = stop
    return w, v


def expm_unitary(h: np.ndarray, t: float, tol: float = SPECTRAL_TOL) -> np.ndarray:
    """``exp(-i h t)`` for Hermitian ``h`` (rad/us) and time ``t`` (us)."""
    w, v = eig_hermitian(h, tol)
    return (v * np.exp(-1j * w * t)) @ dagger(v)


def ket(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > CONSTRUCTION_TOL:
        raise ValueError(f"state vector is not normalized (norm {norm:.15g})")
    return np.outer(psi, np.conj(psi))


def partial_trace_electron(rho: np.ndarray, electron_dim: int) -> np.ndarray:
    """Trace out the first (electron) tensor factor."""
    rho = np.asarray(rho)
    dim = rho.shape[0]
    if electron_dim <= 0 or dim % electron_dim:
        raise ValueError(f"dimension {dim} is not divisible by electron_dim={electron_dim}")
    n = dim // electron_dim
    return np.einsum("ajak->jk", rho.reshape(electron_dim, n, electron_dim, n))


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


def state_fidelity(rho: np.ndarray, rho_t: np.ndarray) -> float:
    """Normalized overlap ``Tr(rho rho_t) / sqrt(Tr(rho^2) Tr(rho_t^2))``.

    Symmetric in its arguments and equal to 1 for identical states; for a pure
    target it reduces to the usual overlap divided by the square root of the
    purity of ``rho``.
    """
    rho = np.asarray(rho)
    rho_t = np.asarray(rho_t)
    if rho.shape != rho_t.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {rho_t.shape}")
    p1, p2 = purity(rho), purity(rho_t)
    if p1 <= 0.0 or p2 <= 0.0:
        raise ValueError("state fidelity is undefined for a zero-purity operator")
    f = float(np.real(np.trace(rho @ rho_t))) / np.sqrt(p1 * p2)
    return min(max(f, 0.0), 1.0)


def check_density_matrix(rho: np.ndarray, trace_tol: float = CONSTRUCTION_TOL,
                         psd_tol: float = SPECTRAL_TOL) -> None:
    """Raise ``ValueError`` unless ``rho`` is Hermitian, unit trace and PSD."""
    dev = _hermitian_deviation(rho)
    if dev > CONSTRUCTION_TOL:
        raise NotHermitianError(dev, CONSTRUCTION_TOL)
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"trace {tr.real:.15g} differs from 1 by more than {trace_tol:.1e}")
    lam = float(np.min(np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))))
    if lam < -psd_tol:
        raise ValueError(f"smallest eigenvalue {lam:.3e} is below -{psd_tol:.1e}")
