"""End-to-end reproductions of the four worked exercises.

Each ``exerciseN`` function runs its pipeline and returns a list of
:class:`Check` results; the CLI prints them and turns any failure into a
non-zero exit code. Optional ``out_dir`` arguments export CSV artifacts.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from ..basis import fourier_basis
from ..decomp import dft_decomposition, dmd, dmd_eigenvalues, pod
from ..filtering import (band_energy_fraction, circulant, design_fir, diagonalize_circulant,
                         filter_correlation, filter_rows)
from ..mpod import FrequencySplitting, mpod
from ..synthdata import (PlantedMode, PoiseuilleParams, orthonormal_shapes, planted_modes,
                         poiseuille_dataset, two_forcing_dataset)
from .io import save_decomposition


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool
    relation: str = "<"

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.value:.7g} {self.relation} {self.threshold:g}"


def below(name: str, value: float, threshold: float) -> Check:
    value = float(value)
    return Check(name, value, threshold, bool(value < threshold), "<")


def above(name: str, value: float, threshold: float) -> Check:
    value = float(value)
    return Check(name, value, threshold, bool(value > threshold), ">")


def _rel(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b))


def exercise1_signal(n_t: int = 1024, seed: int = 0) -> np.ndarray:
    """Two tones, one inside and one outside the pass band, plus white noise."""
    k = np.arange(n_t)
    rng = np.random.default_rng(seed)
    return (np.sin(2 * np.pi * 0.02 * k) + 0.5 * np.sin(2 * np.pi * 0.3 * k)
            + 0.1 * rng.standard_normal(n_t))


def exercise1(out_dir: Optional[Path] = None, n_t: int = 1024, order: int = 211,
              cutoff: float = 0.1) -> List[Check]:
    """DFT by matrix product, convolution by circulant matrix, and its diagonalisation."""
    u = exercise1_signal(n_t)
    F = fourier_basis(n_t).columns
    checks = [below("matrix DFT vs FFT", _rel(F.conj() @ u, np.fft.fft(u, norm="ortho")), 1e-10)]

    h = design_fir("lowpass", cutoff, order, "hamming")
    C = circulant(h, n_t)
    dense = C.matrix()
    y_time = dense @ u
    H = diagonalize_circulant(C, verify=False)
    y_freq = F @ (H * (F.conj() @ u))
    checks.append(below("circulant product vs frequency masking", _rel(y_freq.real, y_time),
                        1e-10))
    # periodic convolution written out with numpy's linear convolution
    wrapped = np.concatenate([u[-(order // 2):], u, u[: order // 2]])
    y_conv = np.convolve(wrapped, h.taps, mode="valid")
    checks.append(below("circulant product vs direct periodic convolution",
                        _rel(y_conv, y_time), 1e-10))
    rebuilt = (F * H) @ F.conj()
    checks.append(below("circulant eigen-decomposition residual",
                        np.linalg.norm(dense - rebuilt) / np.linalg.norm(dense), 1e-10))
    checks.append(below("imaginary part of eigenvalues", np.abs(H.imag).max(), 1e-10))
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        f = np.fft.fftfreq(n_t)
        np.savetxt(Path(out_dir) / "filter_response.csv", np.column_stack([f, H.real]),
                   delimiter=",", header="f_normalized,H", comments="", fmt="%.17g")
        np.savetxt(Path(out_dir) / "filtered_signal.csv", np.column_stack([u, y_time]),
                   delimiter=",", header="u,y", comments="", fmt="%.17g")
    return checks


def _export(dec, out_dir: Optional[Path], name: str, data=None, f_s: float = 1.0,
            n_modes: int = 3):
    if out_dir is not None:
        save_decomposition(dec, Path(out_dir) / name, data=data, n_modes=n_modes, f_s=f_s)


def exercise2(out_dir: Optional[Path] = None, params: PoiseuilleParams = PoiseuilleParams()
              ) -> List[Check]:
    """Poiseuille eigenfunction dataset decomposed by POD, DFT and DMD."""
    D = poiseuille_dataset(params)
    A = D.values
    s = np.linalg.svd(A, compute_uv=False)
    rank = int(np.sum(s > 1e-10 * s[0]))
    checks = [Check("dataset numerical rank", rank, params.n_modes, rank <= params.n_modes, "<=")]
    P = pod(A)
    checks.append(below("POD 10-mode reconstruction", _rel(P.reconstruct(min(10, P.n_modes)), A), 1e-8))
    Fd = dft_decomposition(D).sorted()
    M = dmd(D)
    _export(P, out_dir, "pod", D, params.f_s_hat)
    _export(Fd, out_dir, "dft", None, params.f_s_hat)
    _export(M.sorted(), out_dir, "dmd", None, params.f_s_hat)
    system = dmd_eigenvalues(A)
    driving = 1.0 / (2 * np.pi)
    checks.append(below("DMD eigenvalue modulus deviation",
                        np.abs(system.modulus - 1).max(), 1e-6))
    checks.append(below("DMD frequency deviation from forcing",
                        np.abs(np.abs(system.frequencies(params.f_s_hat)) - driving).max(), 1e-6))
    return checks


@dataclass
class Exercise3Setup:
    n_t: int = 1000
    n_y: int = 2000
    cutoff: float = 1.0  # in units of the dimensionless sampling frequency
    fir_order: int = 201
    guard: float = 4.0  # transition half-width in units of f_s / fir_order

    def params(self) -> PoiseuilleParams:
        return PoiseuilleParams(n_t=self.n_t, n_y=self.n_y)


def filtered_pod_checks(setup: Exercise3Setup = Exercise3Setup(),
                        out_dir: Optional[Path] = None) -> List[Check]:
    p = setup.params()
    D, _, F2 = two_forcing_dataset(p=p)
    A = D.values
    f_s = p.f_s_hat
    freqs = np.abs(np.fft.fftfreq(p.n_t, d=1.0 / f_s))
    high = freqs >= setup.cutoff
    checks = []

    P = pod(A)
    frac_high = band_energy_fraction(P.psi[:, :1], high)[0]
    checks.append(above("POD mode 1 energy fraction in low band", 1 - frac_high, 0.1))
    checks.append(above("POD mode 1 energy fraction in high band", frac_high, 0.1))

    h = design_fir("highpass", setup.cutoff / f_s, setup.fir_order, "hamming")
    DH = filter_rows(A, h)
    PH = pod(DH)
    lam, vecs = np.linalg.eigh(filter_correlation(A.T @ A, h))
    lam, vecs = lam[::-1][: PH.n_modes], vecs[:, ::-1][:, : PH.n_modes]
    sig_corr = np.sqrt(np.clip(lam, 0, None))
    checks.append(below("filtered data vs filtered correlation: amplitudes",
                        np.abs(sig_corr - PH.sigma).max() / PH.sigma[0], 1e-6))
    inner = np.abs(np.sum(vecs * PH.psi, axis=0))
    checks.append(above("filtered data vs filtered correlation: min modal inner product",
                        inner.min(), 0.999))
    ref = pod(F2.values)
    checks.append(above("filtered POD mode 1 vs F2-only POD mode 1",
                        abs(PH.psi[:, 0] @ ref.psi[:, 0]), 0.99))

    stop = freqs < setup.cutoff - setup.guard * f_s / setup.fir_order
    rho = float(np.max(np.abs(h.response(p.n_t)[stop]) ** 2))
    frac = band_energy_fraction(PH.psi, stop)
    e_stop = np.sum(np.abs(np.fft.fft(A, axis=1)[:, stop]) ** 2) / p.n_t
    checks.append(below("stop-band energy per filtered mode minus bound",
                        np.max(PH.sigma ** 2 * frac - rho * e_stop), 1e-8))
    checks.append(below("stop-band fraction of filtered modes 1-2 minus power ratio",
                        np.max(frac[:2]) - rho, 1e-8))
    _export(P, out_dir, "pod", D, f_s)
    _export(PH, out_dir, "pod_filtered", None, f_s)
    return checks


def exercise3(out_dir: Optional[Path] = None,
              setup: Exercise3Setup = Exercise3Setup()) -> List[Check]:
    """POD of the two-forcing Poiseuille data before and after high-pass filtering."""
    return filtered_pod_checks(setup, out_dir)


def well_determined(sigma: np.ndarray, n_t: int, rtol: float = 1e-8) -> np.ndarray:
    """Modes whose eigenvector is fixed by the data to better than ``rtol`` rad.

    A symmetric eigenvector moves by about ``eps * lambda_max / gap`` under
    round-off, where ``gap`` is the distance to the nearest other eigenvalue
    of the ``n_t x n_t`` correlation, including its null eigenvalues.
    """
    lam = np.asarray(sigma, dtype=np.float64) ** 2
    others = lam if lam.size == n_t else np.append(lam, 0.0)
    gaps = np.abs(lam[:, None] - others[None, :])
    gaps[np.arange(lam.size), np.arange(lam.size)] = np.inf
    return np.finfo(float).eps * lam.max() / gaps.min(axis=1) < rtol


def mode_pair_angles(a, b) -> np.ndarray:
    """Angle between matching temporal modes of two decompositions, for the
    modes that are numerically well determined in both."""
    r = min(a.n_modes, b.n_modes)
    keep = well_determined(a.sigma, a.n_t)[:r] & well_determined(b.sigma, b.n_t)[:r]
    cosines = np.abs(np.sum(a.psi[:, :r].conj() * b.psi[:, :r], axis=0))[keep]
    return np.arccos(np.clip(cosines, -1.0, 1.0))


def dft_limit_dataset(n_s: int = 200, n_t: int = 256, seed: int = 0):
    """Periodic, stationary planted harmonics on exact DFT bins plus weak noise."""
    rng = np.random.default_rng(seed)
    bins = [3, 7, 12, 20, 33, 50, 81, 120]
    sigmas = [5.0, 4.0, 3.0, 2.5, 2.0, 1.5, 1.0, 0.5]
    shapes = orthonormal_shapes(n_s, len(bins), seed=seed + 1)
    modes = [PlantedMode(s, shapes[:, j], frequency=k / n_t, phase=rng.uniform(0, 2 * np.pi))
             for j, (s, k) in enumerate(zip(sigmas, bins))]
    D, _ = planted_modes(n_s, n_t, modes)
    return D.values + 1e-3 * rng.standard_normal((n_s, n_t))


def single_bin_pair_fraction(psi: np.ndarray) -> np.ndarray:
    """Largest share of each column's spectral energy held by one ``(k, -k)`` bin pair."""
    n = psi.shape[0]
    spec = np.abs(np.fft.fft(psi, axis=0)) ** 2
    k = np.arange(n // 2 + 1)
    pair = spec[k] + np.where(((k == 0) | (2 * k == n))[:, None], 0.0, spec[(-k) % n])
    return pair.max(axis=0) / spec.sum(axis=0)


def exercise4(out_dir: Optional[Path] = None, n_t: int = 512, fir_order: int = 101
              ) -> List[Check]:
    """mPOD on the two-forcing data, its POD and DFT limits."""
    p = PoiseuilleParams(n_t=n_t, n_y=500)
    D, _, _ = two_forcing_dataset(p=p)
    A = D.values
    f_s = p.f_s_hat
    split = FrequencySplitting.from_edges([0.5, 1.0, 2.0], f_s)
    res = mpod(D, split, fir_order=fir_order, mode="fir")
    Psi = res.decomposition.psi
    checks = [below("mPOD temporal basis orthonormality",
                    np.abs(Psi.T @ Psi - np.eye(Psi.shape[1])).max(), 1e-10)]

    P = pod(A)
    single = mpod(D, FrequencySplitting(((0.0, f_s / 2),)), fir_order=fir_order).decomposition
    r = min(single.n_modes, P.n_modes)
    checks.append(below("single-scale mPOD vs POD amplitudes",
                        np.abs(single.sigma[:r] - P.sigma[:r]).max() / P.sigma[0], 1e-8))
    angles = mode_pair_angles(single, P)
    checks.append(below("single-scale mPOD vs POD largest mode-pair angle", angles.max(), 1e-6))

    full = mpod(D, split, mode="ideal", keep_rtol=0).decomposition
    checks.append(below("ideal-bank full-rank mPOD reconstruction",
                        _rel(full.reconstruct(), A), 1e-8))

    cum_m = np.cumsum(res.decomposition.sigma ** 2)
    cum_p = np.cumsum(P.sigma ** 2)
    r = min(cum_m.size, cum_p.size)
    excess = np.max(cum_m[:r] - cum_p[:r]) / cum_p[-1]
    checks.append(below("mPOD partial energy sums minus POD partial sums", excess, 1e-12))

    Dl = dft_limit_dataset()
    n_l = Dl.shape[1]
    edges = [(k + 0.5) / n_l for k in range(n_l // 2)]
    lim = mpod(Dl, FrequencySplitting.from_edges(edges, 1.0), mode="ideal").decomposition
    checks.append(above("DFT limit: min single bin-pair energy fraction",
                        single_bin_pair_fraction(lim.psi).min(), 0.99))
    _export(res, out_dir, "mpod", D, f_s, n_modes=2)
    _export(P, out_dir, "pod", D, f_s, n_modes=2)
    return checks


EXERCISES = {1: exercise1, 2: exercise2, 3: exercise3, 4: exercise4}
