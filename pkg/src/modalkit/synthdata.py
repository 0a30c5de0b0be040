"""Analytic datasets: the pulsating Poiseuille flow and planted-mode signals.

The Poiseuille profile between two plates driven by an oscillating pressure
gradient has a closed-form eigenfunction expansion. All quantities are
dimensionless: ``y`` in plate half-widths, ``t`` in units of ``1/omega``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.signal.windows import tukey

from .datamatrix import DataMatrix, GridMeta
from .exceptions import DomainError, ShapeError
from .factorize import Decomposition


@dataclass(frozen=True)
class PoiseuilleParams:
    """Discretisation and forcing of the pulsating Poiseuille problem.

    The wall-normal grid ``y = linspace(-1, 1, n_y)`` includes both walls;
    snapshots are sampled at ``t_k = k / f_s_hat``.
    """

    W: float = 10.0
    p_hat_A: float = 60.0
    n_y: int = 2000
    n_t: int = 200
    f_s_hat: float = 10.0
    n_modes: int = 10

    def __post_init__(self):
        if not self.W > 0:
            raise DomainError(f"Womersley number must be positive, got {self.W}")
        if self.n_modes < 1 or self.n_y < 2 or self.n_t < 1:
            raise DomainError("n_modes, n_y and n_t must be positive (n_y >= 2)")
        if not self.f_s_hat > 0:
            raise DomainError("f_s_hat must be positive")

    @property
    def y(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.n_y)

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n_t) / self.f_s_hat

    def meta(self) -> GridMeta:
        return GridMeta(n_x=self.n_y, dx=2.0 / (self.n_y - 1), dt=1.0 / self.f_s_hat)


def poiseuille_amplitude(n, W: float, p_hat_A: float) -> np.ndarray:
    """Continuous amplitude of eigenfunction ``n`` (1-based)."""
    k = (2 * np.asarray(n, dtype=np.float64) - 1) * np.pi
    return 16 * p_hat_A / (k * np.sqrt(16 * W ** 4 + k ** 4))


def poiseuille_phase(n, W: float) -> np.ndarray:
    """Phase lag of eigenfunction ``n``: ``arctan((W / ((2n-1) pi))^2)``."""
    k = (2 * np.asarray(n, dtype=np.float64) - 1) * np.pi
    return np.arctan((W / k) ** 2)


def _poiseuille_factors(p: PoiseuilleParams, t: np.ndarray, omega: float = 1.0):
    n = np.arange(1, p.n_modes + 1)
    phi = np.cos(np.outer(p.y, (2 * n - 1) * np.pi / 2))
    psi = (-1.0) ** n * np.cos(omega * t[:, None] - poiseuille_phase(n, p.W)[None, :])
    return phi, poiseuille_amplitude(n, p.W, p.p_hat_A), psi


def poiseuille_modes(p: PoiseuilleParams) -> Decomposition:
    """Sampled eigenfunction expansion as a unit-norm factorisation.

    Sampled spatial and temporal structures are rescaled to unit length and
    the scale factors are absorbed into the amplitudes, so
    ``phi diag(sigma) psi^T`` is the sampled velocity field.
    """
    phi, sigma, psi = _poiseuille_factors(p, p.t)
    nphi = np.linalg.norm(phi, axis=0)
    npsi = np.linalg.norm(psi, axis=0)
    return Decomposition(phi / nphi, sigma * nphi * npsi, psi / npsi, kind="eigenfunction",
                         data_norm=0.0)


def poiseuille_dataset(p: PoiseuilleParams = PoiseuilleParams()) -> DataMatrix:
    """Velocity field ``u(y_i, t_k)`` as an ``n_y x n_t`` data matrix."""
    dec = poiseuille_modes(p)
    return DataMatrix((dec.phi * dec.sigma) @ dec.psi.T, p.meta())


WindowSpec = Union[None, np.ndarray, Tuple[float, float]]


def raised_cosine_window(n_t: int, start: int, stop: int, taper: float = 0.1) -> np.ndarray:
    """Envelope that is one on ``[start, stop)`` apart from cosine ramps.

    ``taper`` is the fraction of the support ramped at each end.
    """
    if not 0 <= start < stop <= n_t:
        raise DomainError(f"window support [{start}, {stop}) outside [0, {n_t})")
    if not 0 <= taper <= 0.5:
        raise DomainError("taper must lie in [0, 0.5]")
    w = np.zeros(n_t)
    w[start:stop] = tukey(stop - start, alpha=2 * taper)
    return w


def _resolve_window(spec: WindowSpec, n_t: int) -> np.ndarray:
    if spec is None:
        return np.zeros(n_t)
    if isinstance(spec, tuple) and len(spec) == 2:
        start, stop = (int(round(f * n_t)) for f in spec)
        return raised_cosine_window(n_t, start, stop)
    w = np.asarray(spec, dtype=np.float64)
    if w.shape != (n_t,):
        raise ShapeError(f"window must have {n_t} samples, got {w.shape}")
    return w


def balanced_amplitude(W1: float, W2: float, p_hat_A: float) -> float:
    """Forcing amplitude at ``W2`` whose leading response matches the one at ``W1``."""
    return p_hat_A * poiseuille_amplitude(1, W1, 1.0) / poiseuille_amplitude(1, W2, 1.0)


def two_forcing_dataset(W1: float = 1.0, W2: float = 4.0,
                        windows: Sequence[WindowSpec] = ((0.0, 0.5), (0.5, 1.0)),
                        p: Optional[PoiseuilleParams] = None,
                        p_hat_A2: Optional[float] = None):
    """Response to two windowed sinusoidal forcings, and each on its own.

    Both forcings act on the same channel and fluid, so their pulsation
    frequencies scale with ``W**2``; time is made dimensionless with the
    first forcing. Each windowed response is the periodic response
    multiplied by its envelope. ``windows`` entries are either ``(start,
    stop)`` fractions of the record (raised cosine with 10% ramps), explicit
    ``n_t`` envelopes, or ``None`` for an inactive forcing. ``p_hat_A2``
    defaults to :func:`balanced_amplitude`.

    Returns ``(combined, F1_only, F2_only)``.
    """
    p = p or PoiseuilleParams(n_t=1000)
    if p_hat_A2 is None:
        p_hat_A2 = balanced_amplitude(W1, W2, p.p_hat_A)
    meta = p.meta()
    parts = []
    for W, amp, spec in ((W1, p.p_hat_A, windows[0]), (W2, p_hat_A2, windows[1])):
        q = replace(p, W=W, p_hat_A=amp)
        phi, sigma, psi = _poiseuille_factors(q, p.t, omega=(W / W1) ** 2)
        w = _resolve_window(spec, p.n_t)
        parts.append((phi * sigma) @ (psi * w[:, None]).T)
    F1, F2 = parts
    return DataMatrix(F1 + F2, meta), DataMatrix(F1, meta), DataMatrix(F2, meta)


def forcing_frequency(W: float, W_ref: float) -> float:
    """Frequency (per unit dimensionless time) of the forcing at ``W`` when time
    is scaled with the forcing at ``W_ref``."""
    return (W / W_ref) ** 2 / (2 * np.pi)


@dataclass(frozen=True)
class PlantedMode:
    """One rank-one term ``sigma * shape * temporal^T``.

    The temporal part is either ``cos(2 pi f k + phase)`` (``frequency`` in
    cycles per sample), ``Re(pole**k * exp(1j * phase))`` or an explicit
    ``temporal`` vector. Shapes and temporal parts are normalised to unit
    length before scaling by ``sigma``.
    """

    sigma: float
    shape: np.ndarray
    frequency: Optional[float] = None
    pole: Optional[complex] = None
    phase: float = 0.0
    temporal: Optional[np.ndarray] = None

    def time_series(self, n_t: int) -> np.ndarray:
        k = np.arange(n_t)
        if self.temporal is not None:
            out = np.asarray(self.temporal, dtype=np.float64)
            if out.shape != (n_t,):
                raise ShapeError(f"temporal part must have {n_t} samples")
            return out
        if self.pole is not None:
            return np.real(complex(self.pole) ** k * np.exp(1j * self.phase))
        if self.frequency is not None:
            return np.cos(2 * np.pi * self.frequency * k + self.phase)
        raise DomainError("planted mode needs a frequency, a pole or a temporal vector")


def planted_modes(n_s: int, n_t: int, modes: Sequence[PlantedMode], f_s: float = 1.0):
    """Sum of planted rank-one terms; returns ``(data, truth)``."""
    if not modes:
        raise DomainError("at least one planted mode is required")
    phis, psis, sigmas = [], [], []
    for m in modes:
        shape = np.asarray(m.shape, dtype=np.float64)
        if shape.shape != (n_s,):
            raise ShapeError(f"shape must have {n_s} entries, got {shape.shape}")
        series = m.time_series(n_t)
        ns, nt = np.linalg.norm(shape), np.linalg.norm(series)
        if ns == 0 or nt == 0:
            raise DomainError("planted shapes and time series must be non-zero")
        phis.append(shape / ns)
        psis.append(series / nt)
        sigmas.append(float(m.sigma))
    truth = Decomposition(np.array(phis).T, np.array(sigmas), np.array(psis).T, kind="planted")
    data = DataMatrix.from_array((truth.phi * truth.sigma) @ truth.psi.T, f_s=f_s)
    truth.data_norm = float(np.linalg.norm(data.values))
    return data, truth


def orthonormal_shapes(n_s: int, count: int, seed: int = 0) -> np.ndarray:
    """``count`` random orthonormal columns of length ``n_s``."""
    if count > n_s:
        raise DomainError("cannot draw more orthonormal shapes than entries")
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n_s, count)))
    return Q
