import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modalkit.basis import (BasisMatrix, Projector, autoencoder, delta_basis, effective_rank,
                            fourier_basis, inverse_transform_2d, project, project_columns,
                            project_rows, transform_2d, vandermonde_basis)
from modalkit.exceptions import DomainError, RankDeficiencyWarning, ShapeError

from conftest import random_orthonormal


def test_fourier_small_cases():
    assert np.allclose(fourier_basis(1).columns, [[1]])
    assert np.allclose(fourier_basis(2).columns, np.array([[1, 1], [1, -1]]) / np.sqrt(2))
    with pytest.raises(DomainError):
        fourier_basis(0)


@given(st.integers(1, 40))
def test_fourier_orthonormal_symmetric(n):
    F = fourier_basis(n).columns
    I = np.eye(n)
    assert np.abs(F.conj().T @ F - I).max() < 1e-12
    assert np.abs(F.conj() @ F - I).max() < 1e-12
    assert np.array_equal(F, F.T)
    assert np.abs(np.linalg.matrix_power(F, 4) - I).max() < 1e-10


def test_fourier_matches_fft_convention(rng):
    u = rng.standard_normal(16)
    F = fourier_basis(16).columns
    assert np.allclose(F.conj() @ u, np.fft.fft(u, norm="ortho"), atol=1e-12)


def test_delta_basis():
    assert np.allclose(delta_basis(1).columns, [[1]])
    assert np.allclose(delta_basis(4).columns, np.eye(4) / 2)


def test_vandermonde_examples():
    assert np.allclose(vandermonde_basis([1.0], 4).columns[:, 0], 0.5)
    w = np.exp(2j * np.pi / 8)
    assert np.allclose(vandermonde_basis([w], 8).columns[:, 0], fourier_basis(8).columns[:, 1])
    col = vandermonde_basis([0.5], 6).columns[:, 0]
    assert np.allclose(col[1:] / col[:-1], 0.5)
    assert np.allclose(vandermonde_basis([0.0], 1).columns, [[1]])
    assert not vandermonde_basis([0.5, 0.7], 5).orthonormal


def test_vandermonde_overflow():
    with pytest.raises(DomainError):
        vandermonde_basis([1e200], 10)


def test_basis_check_and_from_columns(rng):
    B = BasisMatrix.from_columns(rng.standard_normal((5, 3)))
    B.check()
    with pytest.raises(DomainError):
        BasisMatrix(rng.standard_normal((5, 3)), orthonormal=True).check()
    with pytest.raises(DomainError):
        BasisMatrix.from_columns(np.zeros((3, 1)))
    with pytest.raises(ShapeError):
        BasisMatrix(np.zeros((2, 2, 2)))


def test_projector_validates_mode():
    with pytest.raises(ValueError):
        Projector(fourier_basis(3), "nope")
    with pytest.raises(DomainError):
        Projector(BasisMatrix.from_columns(np.ones((3, 2)) + np.eye(3)[:, :2]),
                  "orthonormal_shortcut")


def test_project_orthonormal_identity(rng):
    B = BasisMatrix(random_orthonormal(rng, 6, 3), orthonormal=True)
    for mode in ("least_squares", "orthonormal_shortcut"):
        assert np.allclose(project(Projector(B, mode), B.columns), np.eye(3), atol=1e-12)


def test_project_square_lossless(rng):
    B = BasisMatrix.from_columns(rng.standard_normal((6, 6)))
    M = rng.standard_normal((6, 4))
    coeffs = project(Projector(B), M)
    assert np.allclose(B.columns @ coeffs, M, atol=1e-10)


def test_project_residual_orthogonal(rng):
    B = BasisMatrix.from_columns(rng.standard_normal((10, 3)))
    M = rng.standard_normal((10, 4))
    coeffs = project(Projector(B), M)
    assert np.abs(B.columns.conj().T @ (M - B.columns @ coeffs)).max() < 1e-10


def test_least_norm_wide_basis(rng):
    B = BasisMatrix.from_columns(rng.standard_normal((3, 6)))
    M = rng.standard_normal((3, 2))
    coeffs = project(Projector(B, "least_norm"), M)
    assert np.allclose(B.columns @ coeffs, M, atol=1e-10)
    assert np.allclose(coeffs, np.linalg.pinv(B.columns) @ M, atol=1e-10)


def test_shortcut_equals_least_squares(rng):
    B = BasisMatrix(fourier_basis(8).columns[:, :5], orthonormal=True)
    M = rng.standard_normal((8, 3))
    a = project(Projector(B, "orthonormal_shortcut"), M)
    b = project(Projector(B, "least_squares"), M)
    assert np.abs(a - b).max() < 1e-10


def test_rank_deficient_falls_back(rng):
    v = rng.standard_normal(5)
    B = BasisMatrix.from_columns(np.column_stack([v, v, rng.standard_normal(5)]))
    with pytest.warns(RankDeficiencyWarning):
        coeffs = project(Projector(B), v[:, None])
    assert np.allclose(B.columns @ coeffs, v[:, None], atol=1e-10)
    assert effective_rank(B) == 2


def test_autoencoder_properties(rng):
    assert np.allclose(autoencoder(BasisMatrix.from_columns(rng.standard_normal((4, 4)))),
                       np.eye(4), atol=1e-10)
    B = BasisMatrix.from_columns(rng.standard_normal((7, 3)) + 1j * rng.standard_normal((7, 3)))
    P = autoencoder(B)
    assert np.allclose(P @ P, P, atol=1e-10)
    assert np.allclose(P, P.conj().T, atol=1e-10)
    ev = np.linalg.eigvalsh(P)
    assert np.all(np.minimum(np.abs(ev), np.abs(ev - 1)) < 1e-8)
    b = rng.standard_normal(5)
    assert np.allclose(autoencoder(BasisMatrix(b)), np.outer(b, b) / (b @ b), atol=1e-12)


def test_project_rows_solves_time_system(rng):
    # complex, non-orthogonal basis with a complex Gram matrix
    lam = np.array([0.9 * np.exp(0.3j), 0.8 * np.exp(-1.1j), 0.95])
    B = vandermonde_basis(lam, 12)
    C_true = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
    D = C_true @ B.columns.T
    C, rank = project_rows(D, B)
    assert rank == 3 and np.allclose(C, C_true, atol=1e-10)
    C2, _ = project_columns(D.T, BasisMatrix(B.columns))
    assert np.allclose(C2.T, C_true, atol=1e-10)


def test_transform_2d_delta_and_fourier(rng):
    D = rng.standard_normal((4, 6))
    C = transform_2d(D, delta_basis(4), delta_basis(6))
    assert np.allclose(C, D * np.sqrt(4) * np.sqrt(6))
    k = np.arange(8)
    m = np.arange(6)
    D = np.outer(np.cos(2 * np.pi * 2 * m / 6), np.cos(2 * np.pi * 3 * k / 8))
    C = transform_2d(D, fourier_basis(6), fourier_basis(8))
    oracle = np.fft.fft(np.fft.fft(D, axis=1, norm="ortho"), axis=0, norm="ortho")
    assert np.allclose(C, oracle, atol=1e-12)
    big = np.argwhere(np.abs(C) > 1e-8)
    assert {tuple(x) for x in big} == {(2, 3), (2, 5), (4, 3), (4, 5)}
    Fs, Ft = fourier_basis(6), fourier_basis(8)
    assert np.allclose(inverse_transform_2d(C, Fs, Ft), D, atol=1e-10)
    with pytest.raises(ShapeError):
        transform_2d(D, Fs, fourier_basis(7))
