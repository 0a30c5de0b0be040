"""scikit-learn style wrappers around the decompositions.

Estimators follow the scikit-learn sample convention: ``X`` has one row per
snapshot and one column per grid point, i.e. ``X = D.T``. After ``fit`` the
spatial structures, amplitudes and temporal structures are available as
``spatial_modes_`` (``n_features x n_modes``), ``amplitudes_`` and
``temporal_modes_`` (``n_snapshots x n_modes``).
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .basis import BasisMatrix, project_columns
from .datamatrix import DataMatrix, GridMeta
from .decomp import delta_decomposition, dft_decomposition, dmd, pod
from .exceptions import DomainError
from .mpod import FrequencySplitting, mpod


class _ModalBase(TransformerMixin, BaseEstimator):
    """Shared fit/transform plumbing; subclasses implement ``_decompose``."""

    def _decompose(self, D: DataMatrix):
        raise NotImplementedError

    def _validate(self, X, reset: bool):
        X = check_array(X, dtype=np.float64, ensure_min_samples=2 if reset else 1)
        if reset:
            self.n_features_in_ = X.shape[1]
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, estimator was fitted with {self.n_features_in_}")
        return X

    def fit(self, X, y=None):
        X = self._validate(X, reset=True)
        f_s = getattr(self, "f_s", 1.0)
        D = DataMatrix(X.T, GridMeta.for_points(X.shape[1], f_s=f_s))
        dec = self._decompose(D)
        n = getattr(self, "n_modes", None)
        if n is not None:
            if n < 1:
                raise DomainError("n_modes must be positive")
            dec = dec.truncate(n)
        self.decomposition_ = dec
        self.spatial_modes_ = dec.phi
        self.amplitudes_ = dec.sigma
        self.temporal_modes_ = dec.psi
        self.n_modes_ = dec.n_modes
        return self

    def transform(self, X):
        """Least-squares coefficients of each snapshot on the spatial modes."""
        check_is_fitted(self, "decomposition_")
        X = self._validate(X, reset=False)
        basis = BasisMatrix(self.spatial_modes_, orthonormal=False)
        coeffs, _ = project_columns(X.T, basis, "least_squares")
        return coeffs.T

    def inverse_transform(self, C):
        """Snapshots rebuilt from mode coefficients; real part for real data."""
        check_is_fitted(self, "decomposition_")
        C = np.asarray(C)
        X = (self.spatial_modes_ @ C.T).T
        return np.ascontiguousarray(X.real) if np.iscomplexobj(X) else X

    def reconstruct(self, n_modes=None):
        """Training data rebuilt from the leading modes, in ``X`` layout."""
        check_is_fitted(self, "decomposition_")
        return self.decomposition_.reconstruct(n_modes).T


class POD(_ModalBase):
    """Proper Orthogonal Decomposition.

    Parameters
    ----------
    n_modes : int, optional
        Keep only the leading modes.
    """

    def __init__(self, n_modes=None):
        self.n_modes = n_modes

    def _decompose(self, D):
        return pod(D)

    def transform(self, X):
        # orthonormal spatial modes: projection is a plain product
        check_is_fitted(self, "decomposition_")
        X = self._validate(X, reset=False)
        return X @ self.spatial_modes_


class DFT(_ModalBase):
    """Discrete Fourier decomposition; modes stay in FFT bin order.

    Parameters
    ----------
    f_s : float
        Sampling frequency used to label ``frequencies_``.
    """

    def __init__(self, f_s=1.0, n_modes=None):
        self.f_s = f_s
        self.n_modes = n_modes

    def _decompose(self, D):
        dec = dft_decomposition(D, f_s=self.f_s)
        self.frequencies_ = dec.frequencies
        return dec


class DMD(_ModalBase):
    """Exact Dynamic Mode Decomposition completed on its Vandermonde basis.

    Parameters
    ----------
    rank : int, optional
        Truncation rank of the snapshot SVD.
    f_s : float
        Sampling frequency used to label ``frequencies_``.
    """

    def __init__(self, rank=None, f_s=1.0, n_modes=None):
        self.rank = rank
        self.f_s = f_s
        self.n_modes = n_modes

    def _decompose(self, D):
        dec = dmd(D, rank=self.rank, f_s=self.f_s)
        self.eigenvalues_ = dec.extras["eigensystem"].lambdas
        self.frequencies_ = dec.frequencies
        return dec


class Delta(_ModalBase):
    """Trivial decomposition on the impulse temporal basis."""

    def __init__(self, n_modes=None):
        self.n_modes = n_modes

    def _decompose(self, D):
        return delta_decomposition(D)


class MPOD(_ModalBase):
    """Multiscale POD.

    Parameters
    ----------
    bands : str or sequence of (lo, hi)
        Frequency bands in Hz, e.g. ``"0:10,290:320"``.
    f_s : float
        Sampling frequency in Hz.
    fir_order : int
        Odd FIR kernel length used in ``"fir"`` mode.
    mode : {"fir", "ideal"}
        Filter bank type.
    """

    def __init__(self, bands=None, f_s=1.0, fir_order=211, mode="fir", n_modes=None):
        self.bands = bands
        self.f_s = f_s
        self.fir_order = fir_order
        self.mode = mode
        self.n_modes = n_modes

    def _splitting(self) -> FrequencySplitting:
        if self.bands is None:
            return FrequencySplitting(((0.0, self.f_s / 2),))
        if isinstance(self.bands, str):
            return FrequencySplitting.parse(self.bands)
        return FrequencySplitting(tuple(tuple(b) for b in self.bands))

    def _decompose(self, D):
        res = mpod(D, self._splitting(), fir_order=self.fir_order, mode=self.mode,
                   f_s=self.f_s)
        self.result_ = res
        self.scale_of_mode_ = res.scale_of_mode
        return res.decomposition

    def fit(self, X, y=None):
        super().fit(X, y)
        self.scale_of_mode_ = self.scale_of_mode_[: self.n_modes_]
        return self
