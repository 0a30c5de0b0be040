"""FIR design, circulant convolution and frequency-constrained correlations.

Filtering is periodic throughout: kernels act by circular convolution, which
the Fourier basis diagonalises. Kernels are zero-phase aligned (centre tap at
index 0), so symmetric taps give real frequency responses.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .datamatrix import DataMatrix, as_matrix
from .exceptions import DomainError, NumericalConsistencyError

WINDOWS = {
    "hamming": np.hamming,
    "hann": np.hanning,
    "rect": np.ones,
}


@dataclass(frozen=True)
class FirKernel:
    """Odd-length, zero-phase FIR kernel.

    ``cutoffs`` are normalised frequencies in cycles per sample, in (0, 0.5).
    """

    taps: np.ndarray
    cutoffs: tuple
    window: str = "hamming"
    kind: str = "lowpass"

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64).copy()
        if taps.ndim != 1 or taps.size % 2 == 0:
            raise DomainError("FIR kernels must have an odd number of taps")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def order(self) -> int:
        return self.taps.size

    @property
    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.taps, self.taps[::-1]))

    def response(self, n_t: int) -> np.ndarray:
        """Frequency response on the ``n_t``-bin DFT grid (FFT bin order)."""
        return circulant(self, n_t).eigenvalues()

    def __sub__(self, other: "FirKernel") -> "FirKernel":
        return FirKernel(self.taps - other.taps, self.cutoffs + other.cutoffs,
                         self.window, "custom")


def _lowpass_taps(cutoff: float, order: int, window: str) -> np.ndarray:
    m = np.arange(order) - (order - 1) / 2
    taps = 2 * cutoff * np.sinc(2 * cutoff * m) * WINDOWS[window](order)
    return taps / taps.sum()


def design_fir(kind: str, cutoffs: Union[float, Sequence[float]], order: int,
               window: str = "hamming") -> FirKernel:
    """Windowed-sinc FIR design.

    Lowpass kernels have unit DC gain. Highpass is the spectral inversion of
    the lowpass at the same cutoff, bandpass the difference of two lowpasses,
    so a bank built from the same lowpasses sums to an impulse.
    """
    if order < 1 or order % 2 == 0:
        raise DomainError(f"filter order must be odd and positive, got {order}")
    if window not in WINDOWS:
        raise DomainError(f"unknown window {window!r}")
    cutoffs = tuple(float(c) for c in np.atleast_1d(cutoffs))
    if any(not 0 < c < 0.5 for c in cutoffs):
        raise DomainError(f"cutoffs must lie in (0, 0.5), got {cutoffs}")
    impulse = np.zeros(order)
    impulse[order // 2] = 1.0
    if kind == "lowpass":
        taps = _lowpass_taps(cutoffs[0], order, window)
    elif kind == "highpass":
        taps = impulse - _lowpass_taps(cutoffs[0], order, window)
    elif kind == "bandpass":
        if len(cutoffs) != 2 or not cutoffs[0] < cutoffs[1]:
            raise DomainError(f"bandpass needs increasing (low, high) cutoffs, got {cutoffs}")
        taps = _lowpass_taps(cutoffs[1], order, window) - _lowpass_taps(cutoffs[0], order, window)
    else:
        raise DomainError(f"unknown filter kind {kind!r}")
    return FirKernel(taps, cutoffs, window, kind)


def allpass(order: int = 1) -> FirKernel:
    taps = np.zeros(order)
    taps[order // 2] = 1.0
    return FirKernel(taps, (), "rect", "allpass")


@dataclass(frozen=True)
class CirculantOperator:
    """Periodic convolution ``y[i] = sum_j c[(i - j) mod n] u[j]``."""

    first_column: np.ndarray

    @property
    def n(self) -> int:
        return self.first_column.size

    def matrix(self) -> np.ndarray:
        i = np.arange(self.n)
        return self.first_column[(i[:, None] - i[None, :]) % self.n]

    def eigenvalues(self) -> np.ndarray:
        return np.fft.fft(self.first_column)

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Convolve along axis 0 through the FFT."""
        u = np.asarray(u)
        lam = self.eigenvalues().reshape((-1,) + (1,) * (u.ndim - 1))
        out = np.fft.ifft(lam * np.fft.fft(u, axis=0), axis=0)
        return np.ascontiguousarray(out.real) if np.isrealobj(u) else out

    def __matmul__(self, u):
        return self.apply(u)


def circulant(h: FirKernel, n_t: int) -> CirculantOperator:
    """Place the kernel on an ``n_t`` periodic grid with its centre at index 0."""
    N = h.order
    if N > n_t:
        raise DomainError(f"kernel of {N} taps does not fit in {n_t} samples")
    col = np.zeros(n_t)
    idx = (np.arange(N) - N // 2) % n_t
    np.add.at(col, idx, h.taps)
    return CirculantOperator(col)


def fourier_matrix(n: int) -> np.ndarray:
    k = np.arange(n)
    return np.exp(2j * np.pi * (np.outer(k, k) % n) / n) / np.sqrt(n)


def diagonalize_circulant(C: CirculantOperator, verify: Optional[bool] = None,
                          symmetric: Optional[bool] = None) -> np.ndarray:
    """Eigenvalues of a circulant operator; the Fourier columns are its eigenvectors.

    With ``verify`` (default for ``n <= 2048``) the dense identity
    ``C = Psi diag(H) conj(Psi)`` is checked to 1e-10. For symmetric kernels
    the eigenvalues must be real to 1e-10.
    """
    lam = C.eigenvalues()
    n = C.n
    scale = max(np.abs(lam).max(), np.finfo(float).tiny)
    if symmetric is None:
        c = C.first_column
        symmetric = bool(np.allclose(c, c[(-np.arange(n)) % n], rtol=0, atol=1e-15 * scale))
    if symmetric and np.abs(lam.imag).max() > 1e-10 * scale:
        raise NumericalConsistencyError("symmetric kernel produced complex eigenvalues")
    if verify is None:
        verify = n <= 2048
    if verify:
        F = fourier_matrix(n)
        dense = C.matrix()
        rebuilt = (F * lam) @ F.conj()
        err = np.linalg.norm(dense - rebuilt) / max(np.linalg.norm(dense), np.finfo(float).tiny)
        if err > 1e-10:
            raise NumericalConsistencyError(
                f"circulant eigen-identity failed, relative error {err:.2e}")
    return lam


def filter_rows(D, h: Union[FirKernel, np.ndarray]):
    """Filter every row of ``D`` (each time series) by periodic convolution.

    ``h`` may be a kernel or an ``n_t``-point frequency response. Equivalent
    to ``D @ C_h.T`` which equals ``D @ C_h`` for symmetric kernels.
    """
    A = as_matrix(D)
    response = h.response(A.shape[1]) if isinstance(h, FirKernel) else np.asarray(h)
    out = np.fft.ifft(np.fft.fft(A, axis=1) * response[None, :], axis=1)
    out = np.ascontiguousarray(out.real) if np.isrealobj(A) else out
    if isinstance(D, DataMatrix):
        return DataMatrix(out, D.meta, D.mean_removed)
    return out


def _fft2_sym(K: np.ndarray) -> np.ndarray:
    """``Psi K conj(Psi)`` with the orthonormal Fourier matrix ``Psi``."""
    return np.fft.fft(np.fft.ifft(K, axis=0), axis=1)


def _ifft2_sym(KF: np.ndarray) -> np.ndarray:
    """``conj(Psi) K_F Psi``, the inverse of :func:`_fft2_sym`."""
    return np.fft.ifft(np.fft.fft(KF, axis=0), axis=1)


def _check_symmetric(K: np.ndarray):
    K = np.asarray(K)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise DomainError("correlation matrix must be square")
    scale = max(np.abs(K).max(), np.finfo(float).tiny)
    if np.abs(K - K.conj().T).max() > 1e-10 * scale:
        raise DomainError("correlation matrix must be symmetric")
    return K


def cross_spectral_density(K) -> np.ndarray:
    """Frequency-domain counterpart ``Psi K conj(Psi)`` of a temporal correlation."""
    return _fft2_sym(_check_symmetric(K))


def filter_correlation(K, h: Union[FirKernel, np.ndarray],
                       verify_permutation: bool = False) -> np.ndarray:
    """Temporal correlation of the filtered data, computed from ``K`` alone.

    ``K_H = conj(Psi) [K_F * conj(H) H^T] Psi`` with ``K_F`` the cross-spectral
    density and ``H`` the frequency response. With ``verify_permutation`` the
    2D Fourier transform of ``K_H`` is checked against the index-reversed
    ``K_FH``.
    """
    K = _check_symmetric(K)
    n = K.shape[0]
    response = h.response(n) if isinstance(h, FirKernel) else np.asarray(h)
    K_FH = _fft2_sym(K) * np.outer(response.conj(), response)
    K_H = _ifft2_sym(K_FH)
    scale = max(np.abs(K_H).max(), np.finfo(float).tiny)
    if np.isrealobj(K) and np.abs(K_H.imag).max() > 1e-10 * scale:
        raise NumericalConsistencyError("filtered correlation of real data is not real")
    if verify_permutation:
        K_hat = np.fft.fft(np.fft.fft(K_H, axis=0), axis=1) / n
        if not np.allclose(K_hat, K_FH[fourier_permutation(n)], atol=1e-10 * scale * n):
            raise NumericalConsistencyError("permutation identity of the 2D transform failed")
    K_H = np.ascontiguousarray(K_H.real) if np.isrealobj(K) else K_H
    return (K_H + K_H.conj().T) / 2


def fourier_permutation(n: int) -> np.ndarray:
    """Index map of ``Psi Psi``: row ``k`` selects entry ``(-k) mod n``."""
    if n < 1:
        raise DomainError("n must be positive")
    return (-np.arange(n)) % n


def permutation_matrix(perm: np.ndarray) -> np.ndarray:
    n = perm.size
    P = np.zeros((n, n))
    P[np.arange(n), perm] = 1.0
    return P


def band_energy_fraction(psi: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Fraction of each column's spectral energy falling in ``mask`` (FFT bin order)."""
    spectrum = np.abs(np.fft.fft(psi, axis=0)) ** 2
    total = spectrum.sum(axis=0)
    return spectrum[mask].sum(axis=0) / np.where(total == 0, 1.0, total)
