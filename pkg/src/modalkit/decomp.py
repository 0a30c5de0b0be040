"""Delta, DFT, POD and DMD decompositions, all completed from their temporal basis."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .basis import BasisMatrix, delta_basis, fourier_basis, vandermonde_basis
from .datamatrix import as_data_matrix, as_matrix
from .exceptions import DomainError, NonUniquenessWarning
from .factorize import Decomposition, _finish, _fix_phase, _normalize_columns, complete_from_psi

POD_RANK_RTOL = 1e-12
TIE_RTOL = 1e-10
UNIT_CIRCLE_TOL = 1e-9


def delta_decomposition(D) -> Decomposition:
    """Impulse temporal basis: spatial structures are the normalised snapshots."""
    A = as_matrix(D)
    return complete_from_psi(A, delta_basis(A.shape[1]), kind="delta")


def dft_decomposition(D, f_s: Optional[float] = None, use_fft: bool = True) -> Decomposition:
    """Fourier temporal basis, bins kept in FFT order (bin 0 first).

    ``frequencies`` labels bin ``r`` with ``r f_s / n_t``, the upper half
    carrying negative (aliased) frequencies.
    """
    data = as_data_matrix(D)
    f_s = data.f_s if f_s is None else f_s
    A = data.values
    n_t = A.shape[1]
    if use_fft:
        D_hat = np.fft.fft(A, axis=1, norm="ortho")
        phi, sigma, degenerate = _normalize_columns(D_hat)
        phi, psi = _fix_phase(phi, fourier_basis(n_t).columns, degenerate)
        dec = _finish(phi, sigma, psi, degenerate, "dft", False, n_t, float(np.linalg.norm(A)))
    else:
        dec = complete_from_psi(A, fourier_basis(n_t), kind="dft", sort=False)
    dec.frequencies = np.fft.fftfreq(n_t, d=1.0 / f_s)
    return dec


@dataclass
class PodEigenSystem:
    """Eigen-decomposition of the temporal correlation ``K = D^T D``."""

    K: np.ndarray
    lambdas: np.ndarray
    psis: np.ndarray

    def residual(self) -> float:
        approx = (self.psis * self.lambdas) @ self.psis.T
        return float(np.linalg.norm(self.K - approx) / np.linalg.norm(self.K))


def _order_eigenvectors(lam: np.ndarray, vecs: np.ndarray):
    """Descending eigenvalues; exact ties broken by the sign/index of the
    first significant component so the order does not depend on the solver."""
    order = np.argsort(-lam, kind="stable")
    lam, vecs = lam[order], vecs[:, order]
    scale = lam[0] if lam.size and lam[0] > 0 else 1.0
    # only ties among retained (non-null) eigenvalues make the modes ambiguous
    live = lam[1:] > POD_RANK_RTOL * scale
    ties = np.flatnonzero((np.abs(np.diff(lam)) <= TIE_RTOL * scale) & live)
    if ties.size:
        warnings.warn(
            f"{ties.size} repeated eigenvalue(s) in the temporal correlation; "
            "the POD is not unique", NonUniquenessWarning, stacklevel=3)
        keys = []
        for j in range(vecs.shape[1]):
            v = vecs[:, j]
            first = int(np.flatnonzero(np.abs(v) > 1e-8 * np.abs(v).max())[0])
            keys.append((first, -np.sign(v[first])))
        # group indices of (near-)equal eigenvalues and reorder within groups
        start = 0
        order = np.arange(lam.size)
        while start < lam.size:
            stop = start + 1
            while stop < lam.size and abs(lam[stop - 1] - lam[stop]) <= TIE_RTOL * scale:
                stop += 1
            block = list(range(start, stop))
            order[start:stop] = sorted(block, key=lambda j: keys[j])
            start = stop
        lam, vecs = lam[order], vecs[:, order]
    return lam, vecs


def pod_eigensystem(D) -> PodEigenSystem:
    A = as_matrix(D)
    K = A.T @ A
    lam, vecs = np.linalg.eigh(K)
    lam = lam[::-1]
    vecs = vecs[:, ::-1]
    lam_max = max(lam[0], 0.0) if lam.size else 0.0
    lam = np.where((lam < 0) & (lam >= -1e-10 * lam_max), 0.0, lam)
    lam, vecs = _order_eigenvectors(lam, vecs)
    return PodEigenSystem(K, lam, vecs)


def pod(D) -> Decomposition:
    """Proper Orthogonal Decomposition via the temporal correlation matrix.

    Eigenvalues below ``1e-12`` of the largest are treated as zero rank and
    dropped. Amplitudes are completed from the eigenvectors with the
    orthonormal shortcut ``D Psi``.
    """
    A = as_matrix(D)
    system = pod_eigensystem(A)
    lam_max = system.lambdas[0] if system.lambdas.size else 0.0
    keep = system.lambdas > POD_RANK_RTOL * lam_max if lam_max > 0 else np.zeros(0, bool)
    if not np.any(keep):
        keep = np.zeros_like(system.lambdas, dtype=bool)
        keep[:1] = True
    psi = BasisMatrix(system.psis[:, keep], kind="custom", orthonormal=True)
    dec = complete_from_psi(A, psi, kind="pod", sort=True, mode="orthonormal_shortcut")
    dec.extras["eigensystem"] = system
    return dec


@dataclass
class DmdEigenSystem:
    """Discrete-time DMD eigenvalues with growth/decay diagnostics."""

    lambdas: np.ndarray
    rank: int

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.lambdas)

    @property
    def e_folding(self) -> np.ndarray:
        """Samples over which a mode grows or decays by ``e``; ``inf`` on the unit circle."""
        mod = self.modulus
        with np.errstate(divide="ignore"):
            out = -1.0 / np.log(mod)
        out[np.abs(mod - 1.0) <= UNIT_CIRCLE_TOL] = np.inf
        return out

    def frequencies(self, f_s: float = 1.0) -> np.ndarray:
        return np.angle(self.lambdas) * f_s / (2 * np.pi)


def _natural_order(lambdas: np.ndarray) -> np.ndarray:
    """Ascending |frequency|, positive before negative, then decreasing modulus.

    Conjugate pairs end up adjacent.
    """
    angle = np.round(np.angle(lambdas), 12)
    return np.lexsort((-np.abs(lambdas), angle < 0, np.abs(angle)))


def dmd_eigenvalues(D, rank: Optional[int] = None) -> DmdEigenSystem:
    """Exact-DMD eigenvalues of the best-fit propagator between shifted snapshots."""
    A = as_matrix(D)
    if A.shape[1] < 2:
        raise DomainError("DMD needs at least two snapshots")
    X, Y = A[:, :-1], A[:, 1:]
    U, s, Vh = np.linalg.svd(X, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        raise DomainError("DMD of an all-zero data matrix")
    r = int(np.sum(s > 1e-10 * s[0]))
    if rank is not None:
        if rank < 1:
            raise DomainError("rank must be positive")
        r = min(r, int(rank))
    U, s, V = U[:, :r], s[:r], Vh[:r].conj().T
    A_tilde = U.conj().T @ Y @ V / s
    lambdas = np.linalg.eigvals(A_tilde)
    return DmdEigenSystem(lambdas[_natural_order(lambdas)], r)


def dmd(D, rank: Optional[int] = None, f_s: Optional[float] = None) -> Decomposition:
    """DMD completed through the normalised Vandermonde temporal basis.

    Modes stay in natural frequency order; use ``.sorted()`` for an amplitude
    ranking.
    """
    data = as_data_matrix(D)
    f_s = data.f_s if f_s is None else f_s
    system = dmd_eigenvalues(data.values, rank)
    basis = vandermonde_basis(system.lambdas, data.n_t)
    dec = complete_from_psi(data.values, basis, kind="dmd", sort=False, mode="least_squares")
    dec.frequencies = system.frequencies(f_s)
    dec.extras["eigensystem"] = system
    return dec
