"""Completion of ``D = Phi Sigma Psi^T`` from one given basis.

Given spatial structures, projecting the data onto them leaves rows equal to
``sigma_r psi_r^T``; given temporal structures, the projection leaves columns
equal to ``sigma_r phi_r``. Either way the amplitudes are the norms of those
rows or columns and the missing factor is the normalised row or column.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .basis import BasisMatrix, project_columns, project_rows
from .datamatrix import as_matrix
from .exceptions import ConjugatePairingError, ShapeError

DEGENERATE_RTOL = 1e-14
IMAG_RTOL = 1e-10


@dataclass
class Decomposition:
    """Triple ``(phi, sigma, psi)`` with ``D = phi @ diag(sigma) @ psi.T``.

    ``degenerate`` marks modes whose amplitude vanished; their computed factor
    is kept as a zero vector. ``frequencies`` (Hz) is filled for decompositions
    whose modes carry a natural frequency label.
    """

    phi: np.ndarray
    sigma: np.ndarray
    psi: np.ndarray
    kind: str = "custom"
    degenerate: Optional[np.ndarray] = None
    frequencies: Optional[np.ndarray] = None
    effective_rank: Optional[int] = None
    data_norm: float = 0.0
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.sigma = np.asarray(self.sigma, dtype=np.float64)
        R = self.sigma.shape[0]
        if self.phi.shape[1] != R or self.psi.shape[1] != R:
            raise ShapeError(
                f"inconsistent mode counts: phi {self.phi.shape[1]}, sigma {R}, "
                f"psi {self.psi.shape[1]}")
        if np.any(self.sigma < 0):
            raise ValueError("amplitudes must be non-negative")
        if self.degenerate is None:
            self.degenerate = np.zeros(R, dtype=bool)

    @property
    def n_modes(self) -> int:
        return self.sigma.shape[0]

    @property
    def n_s(self) -> int:
        return self.phi.shape[0]

    @property
    def n_t(self) -> int:
        return self.psi.shape[0]

    def normalized_energies(self) -> np.ndarray:
        """Per-mode energy ``sigma_r^2 / (n_s n_t)``."""
        return self.sigma ** 2 / (self.n_s * self.n_t)

    def select(self, index) -> "Decomposition":
        index = np.asarray(index)
        freqs = None if self.frequencies is None else self.frequencies[index]
        return replace(
            self, phi=self.phi[:, index], sigma=self.sigma[index], psi=self.psi[:, index],
            degenerate=self.degenerate[index], frequencies=freqs, extras=dict(self.extras))

    def sorted(self) -> "Decomposition":
        """View with modes ordered by descending amplitude (stable ties)."""
        return self.select(np.argsort(-self.sigma, kind="stable"))

    def truncate(self, r: int) -> "Decomposition":
        return self.select(np.arange(min(r, self.n_modes)))

    def reconstruct(self, r: Optional[int] = None, real: bool = True) -> np.ndarray:
        return reconstruct(self, self.n_modes if r is None else r, real=real)


def _fix_phase(computed: np.ndarray, given: np.ndarray, degenerate: np.ndarray):
    """Rotate each computed column so its largest entry is real and >= 0.

    The matching column of the given basis is counter-rotated, leaving every
    mode ``sigma phi psi^T`` unchanged.
    """
    complex_out = np.iscomplexobj(computed) or np.iscomplexobj(given)
    dtype = np.complex128 if complex_out else np.float64
    computed = computed.astype(dtype, copy=True)
    given = given.astype(dtype, copy=True)
    for r in np.flatnonzero(~degenerate):
        col = computed[:, r]
        pivot = col[int(np.argmax(np.abs(col)))]
        rot = np.conj(pivot) / abs(pivot)
        computed[:, r] = col * rot
        given[:, r] = given[:, r] / rot
    return computed, given


def _normalize_columns(M: np.ndarray):
    sigma = np.linalg.norm(M, axis=0)
    smax = sigma.max() if sigma.size else 0.0
    degenerate = sigma <= DEGENERATE_RTOL * smax if smax > 0 else np.ones_like(sigma, bool)
    safe = np.where(degenerate, 1.0, sigma)
    normed = M / safe
    normed[:, degenerate] = 0.0
    sigma = np.where(degenerate, 0.0, sigma)
    return normed, sigma, degenerate


def _finish(phi, sigma, psi, degenerate, kind, sort, rank, data_norm, **kw):
    if np.iscomplexobj(phi) != np.iscomplexobj(psi):
        phi = phi.astype(np.complex128)
        psi = psi.astype(np.complex128)
    dec = Decomposition(phi, sigma, psi, kind=kind, degenerate=degenerate,
                        effective_rank=rank, data_norm=data_norm, **kw)
    return dec.sorted() if sort else dec


def complete_from_phi(D, phi: BasisMatrix, kind: str = "custom", sort: bool = True,
                      mode: Optional[str] = None) -> Decomposition:
    """Complete a decomposition from given spatial structures.

    ``mode`` defaults to the orthonormal shortcut when ``phi`` is flagged
    orthonormal and to the full least-squares projection otherwise.
    """
    A = as_matrix(D)
    if phi.n != A.shape[0]:
        raise ShapeError(f"spatial basis has {phi.n} rows, data has {A.shape[0]}")
    mode = mode or ("orthonormal_shortcut" if phi.orthonormal else "least_squares")
    D_phi, rank = project_columns(A, phi, mode)
    # rows of D_phi are sigma_r psi_r^T
    psi, sigma, degenerate = _normalize_columns(D_phi.T)
    given = np.array(phi.columns)
    if phi.kind == "delta":
        given = given * np.sqrt(phi.n)
    psi, given = _fix_phase(psi, given, degenerate)
    if phi.kind == "delta":
        given = given / np.sqrt(phi.n)
    return _finish(given, sigma, psi, degenerate, kind, sort, rank, float(np.linalg.norm(A)))


def complete_from_psi(D, psi: BasisMatrix, kind: str = "custom", sort: bool = True,
                      mode: Optional[str] = None) -> Decomposition:
    """Complete a decomposition from given temporal structures.

    The projection solves ``D = D_psi Psi^T`` row by row in the least-squares
    sense; ``sigma_r`` and ``phi_r`` are the norm and direction of column ``r``
    of ``D_psi``.
    """
    A = as_matrix(D)
    if psi.n != A.shape[1]:
        raise ShapeError(f"temporal basis has {psi.n} rows, data has {A.shape[1]} columns")
    mode = mode or ("orthonormal_shortcut" if psi.orthonormal else "least_squares")
    D_psi, rank = project_rows(A, psi, mode)
    phi, sigma, degenerate = _normalize_columns(D_psi)
    given = np.array(psi.columns)
    phi, given = _fix_phase(phi, given, degenerate)
    return _finish(phi, sigma, given, degenerate, kind, sort, rank, float(np.linalg.norm(A)))


def reconstruct(dec: Decomposition, r: int, real: bool = True) -> np.ndarray:
    """Sum of the first ``r`` modes.

    With ``real=True`` the imaginary residue must be below ``1e-10`` of the
    data norm recorded at completion; it is then dropped.
    """
    if not 0 <= r <= dec.n_modes:
        raise ValueError(f"cannot reconstruct {r} modes out of {dec.n_modes}")
    out = (dec.phi[:, :r] * dec.sigma[:r]) @ dec.psi[:, :r].T
    if not np.iscomplexobj(out) or not real:
        return out
    scale = dec.data_norm or np.linalg.norm(out)
    residue = np.linalg.norm(out.imag)
    if residue > IMAG_RTOL * max(scale, np.finfo(float).tiny):
        raise ConjugatePairingError(
            f"imaginary residue {residue:.3e} exceeds tolerance for data norm {scale:.3e}; "
            "complex modes are not conjugate-paired")
    return np.ascontiguousarray(out.real)
