"""Multiscale POD: scale-wise POD of a filtered temporal correlation.

The temporal correlation is split into one term per frequency band, each term
is diagonalised on its own, and the pooled eigenvectors are orthonormalised
into a single temporal basis from which amplitudes and spatial structures are
completed. Cross-scale correlations are discarded.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .basis import BasisMatrix
from .datamatrix import as_data_matrix
from .decomp import pod
from .exceptions import DomainError, RankDeficiencyWarning, ValidityWarning
from .factorize import Decomposition, complete_from_psi
from .filtering import FirKernel, allpass, design_fir, filter_correlation

KEEP_RTOL = 1e-10
QR_DROP_RTOL = 1e-6
EDGE_TOL = 1e-9


@dataclass(frozen=True)
class FrequencySplitting:
    """Ordered, non-overlapping frequency bands in Hz."""

    bands: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        bands = tuple((float(lo), float(hi)) for lo, hi in self.bands)
        for lo, hi in bands:
            if not 0 <= lo < hi:
                raise DomainError(f"invalid band ({lo}, {hi})")
        for (_, hi), (lo, _) in zip(bands, bands[1:]):
            if lo < hi - EDGE_TOL * max(hi, 1.0):
                raise DomainError("bands must be ordered and non-overlapping")
        object.__setattr__(self, "bands", bands)

    @classmethod
    def from_edges(cls, edges: Sequence[float], f_s: float) -> "FrequencySplitting":
        """Contiguous split ``[0, f1], [f1, f2], ..., [f_last, f_s/2]``."""
        cuts = [0.0] + sorted(float(e) for e in edges) + [f_s / 2]
        return cls(tuple(zip(cuts[:-1], cuts[1:])))

    @classmethod
    def parse(cls, text: str) -> "FrequencySplitting":
        """Parse ``"lo:hi,lo:hi,..."``."""
        bands = []
        for item in text.split(","):
            item = item.strip()
            if not item:
                continue
            try:
                lo, hi = item.split(":")
                bands.append((float(lo), float(hi)))
            except ValueError as exc:
                raise DomainError(f"cannot parse band {item!r}; expected lo:hi") from exc
        return cls(tuple(bands))

    def __len__(self):
        return len(self.bands)

    def is_contiguous(self, f_s: float) -> bool:
        if not self.bands:
            return False
        tol = EDGE_TOL * f_s
        if self.bands[0][0] > tol or abs(self.bands[-1][1] - f_s / 2) > tol:
            return False
        return all(abs(a[1] - b[0]) <= tol for a, b in zip(self.bands, self.bands[1:]))

    def validate(self, f_s: float) -> None:
        if self.bands and self.bands[-1][1] > f_s / 2 * (1 + EDGE_TOL):
            raise DomainError(f"band edge {self.bands[-1][1]} exceeds Nyquist {f_s / 2}")


@dataclass
class ScaleBank:
    """One frequency response per band on the ``n_t``-point DFT grid."""

    responses: np.ndarray  # (n_scales, n_t), FFT bin order
    mode: str
    split: FrequencySplitting
    f_s: float
    kernels: List[FirKernel] = field(default_factory=list)
    contiguous: bool = False

    @property
    def n_scales(self) -> int:
        return self.responses.shape[0]

    @property
    def n_t(self) -> int:
        return self.responses.shape[1]

    def frequencies(self) -> np.ndarray:
        return np.fft.fftfreq(self.n_t, d=1.0 / self.f_s)

    def bins_per_scale(self) -> np.ndarray:
        """Number of DFT bins where each scale has the largest gain."""
        mag = np.abs(self.responses)
        owner = np.argmax(mag, axis=0)
        live = mag.max(axis=0) > 0.5
        return np.bincount(owner[live], minlength=self.n_scales)

    def complementarity(self, guard_bins: float = 0.0) -> dict:
        """Deviation of the summed response from one and the largest cross-band product.

        ``guard_bins`` excludes a margin (in units of ``n_t / fir_order`` bins,
        i.e. the FIR transition width) around every interior band edge,
        where finite-length kernels overlap by construction.
        """
        total = self.responses.sum(axis=0)
        freqs = np.abs(self.frequencies())
        mask = np.ones(self.n_t, dtype=bool)
        if guard_bins and self.kernels:
            width = guard_bins * self.f_s / max(k.order for k in self.kernels)
            for lo, hi in self.split.bands:
                for edge in (lo, hi):
                    if 0 < edge < self.f_s / 2:
                        mask &= np.abs(freqs - edge) > width
        cross = 0.0
        mag = np.abs(self.responses)
        for i in range(self.n_scales):
            for j in range(i + 1, self.n_scales):
                cross = max(cross, float((mag[i] * mag[j])[mask].max(initial=0.0)))
        return {
            "sum_deviation": float(np.abs(total - 1.0)[mask].max(initial=0.0))
            if self.contiguous else float("nan"),
            "max_cross_product": cross,
        }


def _ideal_masks(split: FrequencySplitting, f_s: float, n_t: int) -> np.ndarray:
    freqs = np.abs(np.fft.fftfreq(n_t, d=1.0 / f_s))
    nyq = f_s / 2
    masks = []
    for lo, hi in split.bands:
        tol = EDGE_TOL * f_s
        if hi >= nyq - tol:
            m = freqs >= lo - tol
        else:
            m = (freqs >= lo - tol) & (freqs < hi - tol)
        masks.append(m.astype(np.float64))
    return np.array(masks)


def build_scale_bank(split: FrequencySplitting, f_s: float, n_t: int,
                     fir_order: int = 211, mode: str = "fir",
                     window: str = "hamming") -> ScaleBank:
    """Filter bank for a frequency splitting.

    In ``fir`` mode contiguous bands are built as lowpass / lowpass
    differences / highpass from the same lowpass kernels, so the taps sum to an
    impulse. In ``ideal`` mode each band is a binary DFT mask.
    """
    split.validate(f_s)
    if not split.bands:
        raise DomainError("empty frequency splitting")
    bin_width = f_s / n_t
    nyq = f_s / 2
    for lo, hi in split.bands:
        # bands touching 0 or Nyquist extend to both signs of frequency
        width = (hi - lo) * (1 + (lo <= EDGE_TOL * f_s) + (hi >= nyq * (1 - EDGE_TOL)))
        if width < bin_width * (1 - EDGE_TOL):
            raise DomainError(
                f"band ({lo}, {hi}) Hz is narrower than one DFT bin ({bin_width:.6g} Hz)")
    contiguous = split.is_contiguous(f_s)
    if len(split) == 1 and contiguous:
        responses = np.ones((1, n_t))
        kernels = [allpass()] if mode == "fir" else []
        return ScaleBank(responses, mode, split, f_s, kernels, True)
    if mode == "ideal":
        return ScaleBank(_ideal_masks(split, f_s, n_t), mode, split, f_s, [], contiguous)
    if mode != "fir":
        raise DomainError(f"unknown bank mode {mode!r}")
    if fir_order % 2 == 0 or fir_order >= n_t:
        raise DomainError(f"fir_order must be odd and below n_t={n_t}, got {fir_order}")
    kernels = []
    for lo, hi in split.bands:
        has_lo, has_hi = lo > EDGE_TOL * f_s, hi < nyq * (1 - EDGE_TOL)
        if has_lo and has_hi:
            kernels.append(design_fir("bandpass", (lo / f_s, hi / f_s), fir_order, window))
        elif has_hi:
            kernels.append(design_fir("lowpass", hi / f_s, fir_order, window))
        elif has_lo:
            kernels.append(design_fir("highpass", lo / f_s, fir_order, window))
        else:
            kernels.append(allpass(fir_order))
    responses = np.array([k.response(n_t).real for k in kernels])
    return ScaleBank(responses, mode, split, f_s, kernels, contiguous)


def _real_band_basis(mask: np.ndarray) -> np.ndarray:
    """Orthonormal real basis (cosines and sines) of the signals whose spectrum
    lies in ``mask``; ``mask`` must be symmetric under ``k -> -k``."""
    n = mask.size
    t = np.arange(n)
    cols = []
    for k in np.flatnonzero(mask[: n // 2 + 1] > 0.5):
        if k == 0:
            cols.append(np.full(n, 1 / np.sqrt(n)))
        elif 2 * k == n:
            cols.append(np.cos(np.pi * t) / np.sqrt(n))
        else:
            arg = 2 * np.pi * k * t / n
            cols.append(np.cos(arg) * np.sqrt(2 / n))
            cols.append(np.sin(arg) * np.sqrt(2 / n))
    return np.array(cols).T if cols else np.zeros((n, 0))


def _scale_eigensystem(K: np.ndarray, response: np.ndarray, ideal: bool):
    if ideal:
        B = _real_band_basis(response)
        if B.shape[1] == 0:
            return np.zeros(0), np.zeros((K.shape[0], 0))
        lam, vecs = np.linalg.eigh(B.T @ K @ B)
        return lam[::-1], B @ vecs[:, ::-1]
    lam, vecs = np.linalg.eigh(filter_correlation(K, response))
    return lam[::-1], vecs[:, ::-1]


@dataclass
class MpodResult:
    decomposition: Decomposition
    scale_of_mode: np.ndarray
    per_scale_lambdas: List[np.ndarray]
    bank: Optional[ScaleBank] = None
    dropped: int = 0
    total_energy: float = 0.0

    @property
    def n_scales(self) -> int:
        return len(self.per_scale_lambdas)


def _max_workers() -> int:
    from .clio.config import thread_limit
    return thread_limit()


def mpod(D, split: FrequencySplitting, fir_order: int = 211, mode: str = "fir",
         f_s: Optional[float] = None, window: str = "hamming",
         keep_rtol: float = KEEP_RTOL) -> MpodResult:
    """Multiscale POD of ``D`` for the given frequency splitting.

    Each scale keeps at most as many modes as it owns DFT bins, and only
    eigenvalues above ``1e-10`` of the largest across scales. Pooled
    eigenvectors are sorted by eigenvalue, orthonormalised by a reduced QR
    with positive diagonal, and completed by projecting the data.

    ``keep_rtol=0`` keeps every eigenvector a scale is entitled to (full
    rank), which makes a contiguous ideal bank lossless.
    """
    data = as_data_matrix(D, 1.0 if f_s is None else f_s)
    A = data.values
    f_s = data.f_s if f_s is None else f_s
    n_t = A.shape[1]
    total = float(np.vdot(A, A).real)
    if len(split) == 0:
        warnings.warn("empty frequency splitting; computing a plain POD", ValidityWarning,
                      stacklevel=2)
        dec = pod(A)
        dec.kind = "mpod"
        return MpodResult(dec, np.zeros(dec.n_modes, int), [dec.sigma ** 2],
                          total_energy=total)
    bank = build_scale_bank(split, f_s, n_t, fir_order, mode, window)
    trivial = bank.n_scales == 1 and bank.contiguous
    if bank.mode == "fir" and not trivial and n_t < 4 * fir_order:
        warnings.warn(
            f"n_t={n_t} is short compared with the filter order {fir_order}; "
            "periodic filtering of the correlation may distort the scales",
            ValidityWarning, stacklevel=2)
    K = A.T @ A
    ideal = bank.mode == "ideal" or trivial
    with ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        systems = list(pool.map(lambda h: _scale_eigensystem(K, h, ideal), bank.responses))
    caps = bank.bins_per_scale()
    lam_max = max((s[0][0] for s in systems if s[0].size), default=0.0)
    lams, vecs, labels, per_scale = [], [], [], []
    for m, (lam, vec) in enumerate(systems):
        per_scale.append(lam)
        keep = np.arange(lam.size) if keep_rtol <= 0 else np.flatnonzero(lam > keep_rtol * lam_max)
        keep = keep[: caps[m]]
        lams.append(lam[keep])
        vecs.append(vec[:, keep])
        labels.append(np.full(keep.size, m))
    lam0 = np.concatenate(lams)
    psi0 = np.concatenate(vecs, axis=1)
    scale = np.concatenate(labels)
    order = np.argsort(-lam0, kind="stable")
    psi0, scale = psi0[:, order], scale[order]
    if psi0.shape[1] == 0:
        raise DomainError("no scale carries energy; all bands are empty")
    Q, R = np.linalg.qr(psi0)
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    Q = Q * signs
    diag = np.abs(np.diag(R))
    keep = diag > QR_DROP_RTOL
    dropped = int((~keep).sum())
    if dropped:
        warnings.warn(
            f"{dropped} mPOD mode(s) dropped: nearly parallel to modes of other scales",
            RankDeficiencyWarning, stacklevel=2)
    Q, scale = Q[:, keep], scale[keep]
    dec = complete_from_psi(A, BasisMatrix(Q, kind="custom", orthonormal=True), kind="mpod",
                            sort=False, mode="orthonormal_shortcut")
    order = np.argsort(-dec.sigma, kind="stable")
    dec = dec.select(order)
    dec.extras["bank"] = bank
    return MpodResult(dec, scale[order], per_scale, bank, dropped, total)


def scale_energies(res: MpodResult) -> np.ndarray:
    """Fraction of the data energy carried by the modes of each scale."""
    energy = res.decomposition.sigma ** 2
    out = np.zeros(res.n_scales)
    np.add.at(out, res.scale_of_mode, energy)
    return out / res.total_energy if res.total_energy > 0 else out
