"""Basis matrices and projections onto them.

All bases store their elements along columns. Projection conventions:

* space (columns of D):  ``coeffs = (B^H B)^-1 B^H D``
* time (rows of D):      ``coeffs = D conj(B) conj(B^H B)^-1``, i.e. the row-wise
  least-squares solution of ``D = coeffs B^T``.

The Fourier basis follows ``B[m, n] = exp(+2j pi m n / n) / sqrt(n)``, so the
forward (analysis) transform applies its conjugate, which is what
``numpy.fft.fft(..., norm="ortho")`` computes.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .exceptions import DomainError, RankDeficiencyWarning, ShapeError

BasisKind = Literal["fourier", "delta", "vandermonde", "eigenfunction", "custom"]
ProjectionMode = Literal["least_squares", "least_norm", "orthonormal_shortcut"]

UNIT_NORM_TOL = 1e-10
GRAM_COND_LIMIT = 1e12


@dataclass(frozen=True)
class BasisMatrix:
    """Column collection of basis vectors.

    Columns are rescaled to unit norm at construction unless ``normalize`` is
    False (the delta basis keeps its ``I / sqrt(n)`` form).
    """

    columns: np.ndarray
    kind: str = "custom"
    orthonormal: bool = False

    def __post_init__(self):
        cols = np.array(self.columns, copy=True)
        if cols.ndim == 1:
            cols = cols[:, None]
        if cols.ndim != 2:
            raise ShapeError(f"basis must be a 2D array, got shape {cols.shape}")
        if not np.iscomplexobj(cols):
            cols = cols.astype(np.float64)
        cols.setflags(write=False)
        object.__setattr__(self, "columns", cols)

    @classmethod
    def from_columns(cls, columns, kind: str = "custom", orthonormal: bool = False):
        cols = np.array(columns, copy=True)
        if cols.ndim == 1:
            cols = cols[:, None]
        norms = np.linalg.norm(cols, axis=0)
        if np.any(norms == 0):
            raise DomainError("basis vectors must be non-zero")
        return cls(cols / norms, kind=kind, orthonormal=orthonormal)

    @property
    def shape(self):
        return self.columns.shape

    @property
    def n(self) -> int:
        return self.columns.shape[0]

    @property
    def n_b(self) -> int:
        return self.columns.shape[1]

    def gram(self) -> np.ndarray:
        return self.columns.conj().T @ self.columns

    def check(self, tol: float = UNIT_NORM_TOL) -> None:
        """Raise if the unit-norm or orthonormality invariants are violated."""
        if self.kind != "delta":
            norms = np.linalg.norm(self.columns, axis=0)
            if np.max(np.abs(norms - 1.0)) > tol:
                raise DomainError("basis columns are not unit norm")
        if self.orthonormal:
            G = self.gram()
            scale = np.abs(np.diag(G)).max()
            if np.abs(G - scale * np.eye(self.n_b)).max() > tol * max(scale, 1.0):
                raise DomainError("basis flagged orthonormal is not orthogonal")


def fourier_basis(n: int) -> BasisMatrix:
    """Square orthonormal, symmetric Fourier matrix of size ``n``."""
    if n < 1:
        raise DomainError("Fourier basis needs n >= 1")
    k = np.arange(n)
    # reduce m*k modulo n before scaling keeps the phases exact for large n
    phase = 2j * np.pi * (np.outer(k, k) % n) / n
    return BasisMatrix(np.exp(phase) / np.sqrt(n), kind="fourier", orthonormal=True)


def delta_basis(n: int) -> BasisMatrix:
    """Impulse basis ``I / sqrt(n)``.

    Columns have norm ``1/sqrt(n)``; amplitudes computed against it carry a
    compensating ``sqrt(n)``. ``orthonormal`` here means mutually orthogonal.
    """
    if n < 1:
        raise DomainError("delta basis needs n >= 1")
    return BasisMatrix(np.eye(n) / np.sqrt(n), kind="delta", orthonormal=True)


def vandermonde_basis(lambdas, n_t: int) -> BasisMatrix:
    """Columns ``[1, l, l^2, ..., l^(n_t-1)]`` normalised to unit length."""
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=np.complex128))
    if not np.all(np.isfinite(lambdas)):
        raise DomainError("eigenvalues must be finite")
    if n_t < 1:
        raise DomainError("n_t must be positive")
    k = np.arange(n_t)[:, None]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        V = np.where(k == 0, 1.0 + 0j, lambdas[None, :] ** k)
        norms = np.linalg.norm(V, axis=0)
    if not np.all(np.isfinite(norms)):
        raise DomainError("eigenvalue powers overflow; |lambda| too large for n_t")
    return BasisMatrix(V / norms, kind="vandermonde", orthonormal=False)


@dataclass(frozen=True)
class Projector:
    basis: BasisMatrix
    mode: str = "least_squares"

    def __post_init__(self):
        if self.mode not in ("least_squares", "least_norm", "orthonormal_shortcut"):
            raise ValueError(f"unknown projection mode {self.mode!r}")
        if self.mode == "orthonormal_shortcut" and not self.basis.orthonormal:
            raise DomainError("orthonormal shortcut requested for a non-orthonormal basis")


def _pinv(A: np.ndarray):
    """Truncated pseudo-inverse and its effective rank."""
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros(A.T.shape, dtype=A.dtype), 0
    keep = s > max(A.shape) * np.finfo(np.float64).eps * s[0]
    inv = (Vh[keep].conj().T / s[keep]) @ U[:, keep].conj().T
    return inv, int(keep.sum())


def _solve_gram(G: np.ndarray, rhs: np.ndarray):
    """Solve ``G x = rhs`` with a pseudo-inverse fallback for singular ``G``.

    Returns the solution and the effective rank of ``G``.
    """
    n = G.shape[0]
    if n and np.linalg.cond(G) < GRAM_COND_LIMIT:
        return np.linalg.solve(G, rhs), n
    inv, rank = _pinv(G)
    warnings.warn(
        f"Gram matrix is numerically singular; effective rank {rank} of {n}",
        RankDeficiencyWarning, stacklevel=3)
    return inv @ rhs, rank


def project(P: Projector, M) -> np.ndarray:
    """Coefficients of the columns of ``M`` with respect to ``P.basis``."""
    B = P.basis.columns
    M = np.asarray(M)
    if M.ndim == 1:
        M = M[:, None]
    if M.shape[0] != B.shape[0]:
        raise ShapeError(f"basis has {B.shape[0]} rows, matrix has {M.shape[0]}")
    BH = B.conj().T
    if P.mode == "orthonormal_shortcut":
        coeffs = BH @ M
        if P.basis.kind == "delta":
            coeffs = coeffs * B.shape[0]
        return coeffs
    if P.mode == "least_squares":
        coeffs, _ = _solve_gram(BH @ B, BH @ M)
        return coeffs
    y, _ = _solve_gram(B @ BH, M)
    return BH @ y


def effective_rank(B: BasisMatrix) -> int:
    _, rank = _pinv(B.columns)
    return rank


def project_rows(D, basis: BasisMatrix, mode: str = "least_squares"):
    """Row-wise (time) projection: coefficients ``C`` with ``D ~= C B^T``.

    Returns ``(C, effective_rank)``.
    """
    D = np.asarray(D)
    B = basis.columns
    if D.shape[1] != B.shape[0]:
        raise ShapeError(f"basis has {B.shape[0]} rows, data has {D.shape[1]} columns")
    if mode == "orthonormal_shortcut":
        scale = B.shape[0] if basis.kind == "delta" else 1.0
        return (D @ B.conj()) * scale, B.shape[1]
    BH = B.conj().T
    coeffs_t, rank = _solve_gram(BH @ B, BH @ D.T)
    return coeffs_t.T, rank


def project_columns(D, basis: BasisMatrix, mode: str = "least_squares"):
    """Column-wise (space) projection: coefficients ``C`` with ``D ~= B C``.

    Returns ``(C, effective_rank)``.
    """
    D = np.asarray(D)
    B = basis.columns
    if D.shape[0] != B.shape[0]:
        raise ShapeError(f"basis has {B.shape[0]} rows, data has {D.shape[0]}")
    if mode == "orthonormal_shortcut":
        scale = B.shape[0] if basis.kind == "delta" else 1.0
        return (B.conj().T @ D) * scale, B.shape[1]
    BH = B.conj().T
    return _solve_gram(BH @ B, BH @ D)


def autoencoder(B: BasisMatrix) -> np.ndarray:
    """Projector ``B (B^H B)^-1 B^H`` onto the column space of ``B``."""
    cols = B.columns
    coeffs, _ = _solve_gram(cols.conj().T @ cols, cols.conj().T)
    return cols @ coeffs


def transform_2d(D, phi: BasisMatrix, psi: BasisMatrix) -> np.ndarray:
    """Generic 2D transform: coefficients ``C`` with ``D ~= Phi C Psi^T``."""
    D = np.asarray(D)
    if phi.n != D.shape[0] or psi.n != D.shape[1]:
        raise ShapeError(
            f"bases ({phi.n}, {psi.n}) do not match data shape {D.shape}")
    left, _ = project_columns(D, phi)
    coeffs, _ = project_rows(left, psi)
    return coeffs


def inverse_transform_2d(C, phi: BasisMatrix, psi: BasisMatrix) -> np.ndarray:
    return phi.columns @ np.asarray(C) @ psi.columns.T
