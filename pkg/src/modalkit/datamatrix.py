"""Snapshot matrices, column-wise flattening and energy diagnostics."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np
from scipy.sparse.linalg import svds

from .exceptions import DegenerateInputError, ShapeError

DENSE_NORM_LIMIT = 1000

if TYPE_CHECKING:
    from .factorize import Decomposition


@dataclass(frozen=True)
class GridMeta:
    """Grid and sampling metadata attached to a snapshot matrix.

    ``n_components`` is the number of stacked field components (2 for a
    planar ``(u, v)`` velocity field).
    """

    n_x: int
    n_y: int = 1
    n_components: int = 1
    dx: float = 1.0
    dt: float = 1.0

    def __post_init__(self):
        if min(self.n_x, self.n_y, self.n_components) < 1:
            raise ShapeError(
                f"grid dimensions must be positive, got "
                f"({self.n_x}, {self.n_y}, {self.n_components})")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")

    @property
    def n_s(self) -> int:
        return self.n_components * self.n_x * self.n_y

    @property
    def f_s(self) -> float:
        return 1.0 / self.dt

    @classmethod
    def for_points(cls, n_s: int, f_s: float = 1.0) -> "GridMeta":
        """Metadata for a bare ``n_s``-point signal with no grid structure."""
        return cls(n_x=n_s, dt=1.0 / f_s)


@dataclass(frozen=True)
class DataMatrix:
    """Immutable ``n_s x n_t`` snapshot matrix.

    Column ``k`` is the flattened snapshot at time ``t_k``; row ``i`` is the
    time series at grid point ``i``.
    """

    values: np.ndarray
    meta: GridMeta
    mean_removed: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise ShapeError(f"expected a 2D matrix, got shape {values.shape}")
        if values.shape[0] != self.meta.n_s:
            raise ShapeError(
                f"matrix has {values.shape[0]} rows but grid metadata "
                f"implies n_s={self.meta.n_s}")
        if values.shape[1] < 1:
            raise ShapeError("n_t must be positive")
        if not np.all(np.isfinite(values)):
            raise ValueError("data matrix contains non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return self.values.shape

    @property
    def n_s(self) -> int:
        return self.values.shape[0]

    @property
    def n_t(self) -> int:
        return self.values.shape[1]

    @property
    def f_s(self) -> float:
        return self.meta.f_s

    @property
    def time(self) -> np.ndarray:
        return np.arange(self.n_t) * self.meta.dt

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values
        return self.values.astype(dtype)

    @classmethod
    def from_array(cls, values, f_s: float = 1.0, meta: Optional[GridMeta] = None):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise ShapeError(f"expected a 2D matrix, got shape {values.shape}")
        if meta is None:
            meta = GridMeta.for_points(values.shape[0], f_s=f_s)
        return cls(values, meta)

    @classmethod
    def from_snapshots(cls, fields: Sequence[np.ndarray], meta: GridMeta):
        """Stack gridded ``n_x x n_y x n_C`` fields as columns."""
        columns = [flatten(f, meta) for f in fields]
        return cls(np.column_stack(columns), meta)

    def snapshot(self, k: int) -> np.ndarray:
        """Column ``k`` reshaped back to its ``n_x x n_y x n_C`` grid."""
        return unflatten(self.values[:, k], self.meta)


def as_matrix(D) -> np.ndarray:
    """Plain 2D array view of a :class:`DataMatrix` or array-like."""
    if isinstance(D, DataMatrix):
        return D.values
    arr = np.asarray(D)
    if arr.ndim != 2:
        raise ShapeError(f"expected a 2D matrix, got shape {arr.shape}")
    # strided views (e.g. ``.real`` of a complex array) miss the BLAS fast path
    return np.ascontiguousarray(arr)


def as_data_matrix(D, f_s: float = 1.0) -> DataMatrix:
    if isinstance(D, DataMatrix):
        return D
    return DataMatrix.from_array(D, f_s=f_s)


def flatten(field: np.ndarray, meta: GridMeta) -> np.ndarray:
    """Column-major flattening of each component, components stacked in order.

    A 2D array is accepted for single-component grids.
    """
    field = np.asarray(field, dtype=np.float64)
    if field.ndim == 2:
        field = field[:, :, np.newaxis]
    expected = (meta.n_x, meta.n_y, meta.n_components)
    if field.shape != expected:
        raise ShapeError(f"field shape {field.shape} does not match grid {expected}")
    return np.concatenate(
        [field[:, :, c].ravel(order="F") for c in range(meta.n_components)])


def unflatten(v: np.ndarray, meta: GridMeta) -> np.ndarray:
    """Inverse of :func:`flatten`; always returns an ``n_x x n_y x n_C`` array."""
    v = np.asarray(v)
    if v.shape != (meta.n_s,):
        raise ShapeError(f"vector of shape {v.shape} cannot be unflattened to n_s={meta.n_s}")
    block = meta.n_x * meta.n_y
    out = np.empty((meta.n_x, meta.n_y, meta.n_components), dtype=v.dtype)
    for c in range(meta.n_components):
        out[:, :, c] = v[c * block:(c + 1) * block].reshape(
            (meta.n_x, meta.n_y), order="F")
    return out


def remove_mean(D: DataMatrix):
    """Subtract the temporal mean of every row.

    Returns
    -------
    centered : DataMatrix
        Copy of ``D`` with zero-mean rows and ``mean_removed`` set.
    mean : ndarray, shape (n_s,)
        The removed row-wise temporal average.
    """
    D = as_data_matrix(D)
    mean = D.values.mean(axis=1)
    centered = DataMatrix(D.values - mean[:, None], D.meta, mean_removed=True)
    return centered, mean


def total_energy(D) -> float:
    """Mesh-independent energy ``||D||_F^2 / (n_s n_t)``."""
    A = as_matrix(D)
    return float(np.vdot(A, A).real / A.size)


def spectral_norm(A: np.ndarray) -> float:
    """Largest singular value; a dense SVD for moderate sizes, Lanczos beyond."""
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    if min(A.shape) <= DENSE_NORM_LIMIT:
        return float(np.linalg.norm(A, 2))
    v0 = np.ones(min(A.shape), dtype=A.dtype)
    s = svds(A, k=1, tol=1e-14, v0=v0, return_singular_vectors=False)
    return float(s[0])


def pod_convergence(sigma: np.ndarray, norm: str = "fro") -> np.ndarray:
    """Closed-form relative residual of a POD truncated at ``0..R`` modes.

    ``norm="fro"`` gives ``sqrt(sum_{r>=rt} s_r^2 / sum_r s_r^2)``;
    ``norm="spectral"`` gives ``s_rt / s_0`` (zero once all modes are used).
    """
    s = np.sort(np.asarray(sigma, dtype=np.float64))[::-1]
    if s.size == 0 or s[0] == 0:
        raise DegenerateInputError("all amplitudes are zero")
    if norm == "spectral":
        return np.concatenate([s, [0.0]]) / s[0]
    if norm != "fro":
        raise ValueError(f"unknown norm {norm!r}")
    s2 = s ** 2
    tail = np.concatenate([np.cumsum(s2[::-1])[::-1], [0.0]])
    return np.sqrt(np.clip(tail / s2.sum(), 0.0, None))


def _norm(A: np.ndarray, norm: str) -> float:
    if norm == "spectral":
        return spectral_norm(A)
    if norm == "fro":
        return float(np.linalg.norm(A))
    raise ValueError(f"unknown norm {norm!r}")


def convergence_curve(D, dec: "Decomposition", ranks: Optional[Sequence[int]] = None,
                      norm: str = "spectral", check_pod: bool = True) -> np.ndarray:
    """Relative residual ``||D - D~(r)|| / ||D||`` for truncations ``r``.

    Modes are accumulated in the order stored in ``dec``. ``ranks`` selects
    which truncations to evaluate (default ``0..R``). The spectral norm is
    computed by :func:`spectral_norm`. For a POD the closed form of
    :func:`pod_convergence` is evaluated as well and must agree to 1e-8.
    """
    A = as_matrix(D)
    if dec.phi.shape[0] != A.shape[0] or dec.psi.shape[0] != A.shape[1]:
        raise ShapeError("decomposition does not match the data dimensions")
    data_norm = _norm(A, norm)
    if data_norm == 0.0:
        raise DegenerateInputError("cannot measure convergence of an all-zero matrix")
    R = dec.n_modes
    ranks = list(range(R + 1)) if ranks is None else [int(r) for r in ranks]
    out = np.empty(len(ranks))
    weighted = dec.phi * dec.sigma
    for i, r in enumerate(ranks):
        if not 0 <= r <= R:
            raise ValueError(f"rank {r} outside 0..{R}")
        residual = A - weighted[:, :r] @ dec.psi[:, :r].T
        out[i] = _norm(residual, norm) / data_norm
    if check_pod and dec.kind == "pod" and R > 0:
        expected = pod_convergence(dec.sigma, norm)[ranks]
        # energy below the POD rank threshold is not in dec.sigma
        dropped = np.sqrt(max(np.vdot(A, A).real - np.sum(dec.sigma ** 2), 0.0))
        if not np.allclose(out, expected, rtol=1e-8, atol=1e-8 + dropped / data_norm):
            raise ArithmeticError(
                "direct residual disagrees with the closed-form POD convergence")
    return out


@dataclass
class EnergyReport:
    total_energy: float
    per_mode: np.ndarray
    convergence: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def captured_fraction(self) -> float:
        return float(self.per_mode.sum() / self.total_energy) if self.total_energy else 0.0


def energy_report(D, dec: "Decomposition", ranks=None, norm: str = "spectral") -> EnergyReport:
    A = as_matrix(D)
    per_mode = dec.sigma ** 2 / A.size
    return EnergyReport(total_energy(A), per_mode,
                        convergence_curve(A, dec, ranks, norm=norm))
