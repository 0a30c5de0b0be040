import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from modalkit import BasisMatrix, complete_from_phi, complete_from_psi, pod
from modalkit.basis import delta_basis, fourier_basis
from modalkit.exceptions import ConjugatePairingError, ShapeError
from modalkit.factorize import Decomposition, reconstruct

from conftest import random_orthonormal

finite = st.floats(-100, 100, allow_nan=False, allow_infinity=False)


def _largest_entry_real_nonnegative(M):
    for col in M.T:
        if not col.any():
            continue
        pivot = col[np.argmax(np.abs(col))]
        assert abs(np.imag(pivot)) < 1e-12 and np.real(pivot) >= 0


def test_from_phi_rank_one(rng):
    u, v = rng.standard_normal(5), rng.standard_normal(4)
    D = np.outer(u, v)
    dec = complete_from_phi(D, BasisMatrix.from_columns(u))
    assert dec.sigma[0] == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v))
    assert abs(abs(dec.psi[:, 0] @ v) / np.linalg.norm(v) - 1) < 1e-12
    assert np.allclose(dec.reconstruct(), D)


def test_from_phi_pod_structures(rng):
    D = rng.standard_normal((12, 7))
    P = pod(D)
    fast = complete_from_phi(D, BasisMatrix(P.phi, orthonormal=True))
    slow = complete_from_phi(D, BasisMatrix(P.phi), mode="least_squares")
    assert np.allclose(fast.sigma, slow.sigma, rtol=1e-10)
    assert np.allclose(fast.psi, slow.psi, atol=1e-10)
    assert np.allclose(np.abs(np.sum(fast.psi * P.psi, axis=0)), 1, atol=1e-10)


def test_from_phi_fourier_rows(rng):
    D = rng.standard_normal((8, 5))
    dec = complete_from_phi(D, fourier_basis(8), sort=False)
    rows = np.fft.fft(D, axis=0, norm="ortho")  # conj(Psi_F) D
    assert np.allclose(dec.sigma, np.linalg.norm(rows, axis=1))
    scaled = dec.sigma[:, None] * dec.psi.T
    assert np.allclose(np.abs(scaled), np.abs(rows), atol=1e-12)
    assert np.allclose(dec.reconstruct(), D, atol=1e-12)


def test_from_psi_delta(rng):
    D = rng.standard_normal((4, 6))
    dec = complete_from_psi(D, delta_basis(6), sort=False)
    norms = np.linalg.norm(D, axis=0)
    assert np.allclose(dec.sigma, norms * np.sqrt(6))
    assert np.allclose(dec.phi, D / norms * np.sign(D[np.argmax(np.abs(D), axis=0), range(6)]))
    assert np.allclose(dec.reconstruct(), D)


def test_from_psi_fourier_pure_cosine():
    n_t = 32
    k = np.arange(n_t)
    D = np.outer([1.0, 2.0, -1.0], np.cos(2 * np.pi * 5 * k / n_t))
    dec = complete_from_psi(D, fourier_basis(n_t), sort=False)
    assert set(np.flatnonzero(dec.sigma > 1e-10 * dec.sigma.max())) == {5, n_t - 5}
    assert dec.degenerate.sum() == n_t - 2


def test_from_psi_pod_basis_gives_singular_values(rng):
    D = rng.standard_normal((9, 6))
    P = pod(D)
    dec = complete_from_psi(D, BasisMatrix(P.psi, orthonormal=True))
    assert np.allclose(dec.sigma, np.linalg.svd(D, compute_uv=False), rtol=1e-10)


def test_dimension_errors(rng):
    D = rng.standard_normal((4, 5))
    with pytest.raises(ShapeError):
        complete_from_phi(D, fourier_basis(5))
    with pytest.raises(ShapeError):
        complete_from_psi(D, fourier_basis(4))


def test_all_zero_data():
    dec = complete_from_psi(np.zeros((3, 4)), fourier_basis(4))
    assert not dec.sigma.any() and dec.degenerate.all() and not dec.phi.any()


def test_phase_convention_and_sorting(rng):
    D = rng.standard_normal((6, 10))
    dec = complete_from_psi(D, fourier_basis(10))
    _largest_entry_real_nonnegative(dec.phi)
    assert np.all(np.diff(dec.sigma) <= 0)
    dec = complete_from_phi(D, fourier_basis(6))
    _largest_entry_real_nonnegative(dec.psi)


def test_stable_tie_order():
    # two columns with identical norms keep their original order
    D = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]])
    dec = complete_from_psi(D, delta_basis(3))
    assert np.allclose(dec.sigma, np.sqrt(3) * np.array([2, 1, 1]))
    assert np.argmax(np.abs(dec.phi[:, 1])) == 0 and np.argmax(np.abs(dec.phi[:, 2])) == 1


def test_reconstruct_cases(rng):
    D = rng.standard_normal((7, 5))
    P = pod(D)
    assert not reconstruct(P, 0).any()
    assert np.allclose(reconstruct(P, P.n_modes), D, atol=1e-10)
    err = np.linalg.norm(D - reconstruct(P, 1), 2)
    assert err == pytest.approx(P.sigma[1], rel=1e-10)
    with pytest.raises(ValueError):
        reconstruct(P, P.n_modes + 1)


def test_conjugate_pairing_error(rng):
    D = rng.standard_normal((4, 8))
    dec = complete_from_psi(D, fourier_basis(8), sort=False)
    assert np.isrealobj(dec.reconstruct())
    broken = dec.select(np.arange(1, 8))  # drops bin 0 only; still paired
    broken = broken.select(np.arange(0, 6))  # now bin 7 (pair of bin 1) is gone
    with pytest.raises(ConjugatePairingError):
        broken.reconstruct()
    assert np.iscomplexobj(broken.reconstruct(real=False))


def test_decomposition_validation():
    with pytest.raises(ShapeError):
        Decomposition(np.zeros((3, 2)), np.zeros(1), np.zeros((4, 2)))
    with pytest.raises(ValueError):
        Decomposition(np.zeros((3, 1)), -np.ones(1), np.zeros((4, 1)))


@given(arrays(np.float64, (5, 4), elements=finite))
def test_algorithms_agree_for_square_orthonormal_bases(D):
    dec2 = complete_from_psi(D, fourier_basis(4))
    live = ~dec2.degenerate
    if not live.any():
        return
    phi = BasisMatrix(dec2.phi[:, live])
    dec1 = complete_from_phi(D, phi, sort=False, mode="least_squares")
    inner = np.abs(np.sum(dec1.psi.conj() * dec2.psi[:, live], axis=0))
    # columns can only be recovered when dec2's phi are well conditioned
    if np.linalg.cond(dec2.phi[:, live]) < 1e4:
        assert np.all(inner > 1 - 1e-8)


@given(arrays(np.float64, (6, 5), elements=finite),
       arrays(np.float64, 5, elements=st.floats(0, 2 * np.pi)))
def test_amplitudes_invariant_under_phase_changes(D, phases):
    F = fourier_basis(5).columns
    a = complete_from_psi(D, BasisMatrix(F, orthonormal=True), sort=False)
    b = complete_from_psi(D, BasisMatrix(F * np.exp(1j * phases), orthonormal=True), sort=False)
    assert np.allclose(a.sigma, b.sigma, atol=1e-9 * max(1.0, a.sigma.max()))


@given(arrays(np.float64, (4, 6), elements=finite))
def test_real_reconstruction_from_conjugate_basis(D):
    dec = complete_from_psi(D, fourier_basis(6))
    assert np.allclose(dec.reconstruct(), D, atol=1e-9 * max(1.0, np.abs(D).max()))
