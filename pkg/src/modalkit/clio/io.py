"""Dataset and result files.

Datasets live in a directory holding ``manifest.json`` plus either one packed
binary file or one CSV file per snapshot. Decomposition results are exported
as plain CSV tables.

Packed binary layout: a 32-byte header (``b"MDK1"``, little-endian ``u32``
``n_s``, ``u32`` ``n_t``, ``u32`` flags with bit 0 = mean removed, 16 reserved
zero bytes) followed by ``n_s * n_t`` little-endian float64 values in
column-major (snapshot after snapshot) order.
"""
from __future__ import annotations

import csv
import json
import logging
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from ..datamatrix import DataMatrix, GridMeta, convergence_curve
from ..exceptions import DomainError, ShapeError
from ..factorize import Decomposition
from .config import thread_limit

log = logging.getLogger(__name__)

MAGIC = b"MDK1"
HEADER = struct.Struct("<4sIII16x")
FLAG_MEAN_REMOVED = 1
MANIFEST = "manifest.json"
PACKED_FILE = "data.mdk"
SNAPSHOT_PATTERN = "snapshot_{:05d}.csv"
FLOAT_FMT = ".17g"


class DatasetError(OSError):
    """A dataset file is missing, unreadable or inconsistent with its manifest."""


@dataclass
class DatasetManifest:
    """Description of a dataset directory."""

    path: Path
    layout: str
    n_t: int
    f_s: float
    n_x: int
    n_y: int = 1
    n_components: int = 1
    dx: float = 1.0
    mesh_file: Optional[str] = None
    files: List[str] = field(default_factory=list)
    mean_removed: bool = False
    nan_policy: str = "reject"

    def __post_init__(self):
        self.path = Path(self.path)
        if self.layout not in ("per_snapshot_csv", "packed_binary"):
            raise DomainError(f"unknown dataset layout {self.layout!r}")
        if self.nan_policy not in ("reject", "zero_fill"):
            raise DomainError(f"unknown NaN policy {self.nan_policy!r}")
        if self.n_t < 1 or not self.f_s > 0:
            raise DomainError("n_t and f_s must be positive")

    @property
    def meta(self) -> GridMeta:
        return GridMeta(self.n_x, self.n_y, self.n_components, self.dx, 1.0 / self.f_s)

    def to_json(self) -> dict:
        out = asdict(self)
        out.pop("path")
        return out

    def write(self) -> Path:
        self.path.mkdir(parents=True, exist_ok=True)
        target = self.path / MANIFEST
        target.write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")
        return target

    @classmethod
    def read(cls, path) -> "DatasetManifest":
        path = Path(path)
        target = path / MANIFEST if path.is_dir() else path
        try:
            raw = json.loads(target.read_text(encoding="utf-8"))
        except OSError as exc:
            raise DatasetError(f"cannot read manifest {target}: {exc}") from exc
        return cls(path=target.parent, **raw)


def write_packed(path, D: DataMatrix) -> None:
    path = Path(path)
    flags = FLAG_MEAN_REMOVED if D.mean_removed else 0
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, D.n_s, D.n_t, flags))
        fh.write(np.asarray(D.values, dtype="<f8").tobytes(order="F"))


def read_packed(path):
    """Return ``(values, mean_removed)`` from a packed binary file."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    if len(raw) < HEADER.size:
        raise DatasetError(f"{path}: truncated header")
    magic, n_s, n_t, flags = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise DatasetError(f"{path}: bad magic {magic!r}")
    expected = HEADER.size + 8 * n_s * n_t
    if len(raw) != expected:
        raise DatasetError(f"{path}: expected {expected} bytes, found {len(raw)}")
    values = np.frombuffer(raw, dtype="<f8", offset=HEADER.size).reshape((n_s, n_t), order="F")
    return values.astype(np.float64), bool(flags & FLAG_MEAN_REMOVED)


def save_dataset(D: DataMatrix, out_dir, layout: str = "packed_binary") -> DatasetManifest:
    """Write ``D`` and its manifest into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    m = D.meta
    manifest = DatasetManifest(out_dir, layout, D.n_t, m.f_s, m.n_x, m.n_y, m.n_components,
                               m.dx, mean_removed=D.mean_removed)
    if layout == "packed_binary":
        write_packed(out_dir / PACKED_FILE, D)
        manifest.files = [PACKED_FILE]
    else:
        for k in range(D.n_t):
            name = SNAPSHOT_PATTERN.format(k)
            _write_csv(out_dir / name, ["value"], ([v] for v in D.values[:, k]))
            manifest.files.append(name)
    manifest.write()
    return manifest


def _read_snapshot_csv(path: Path, index: int, n_s: int) -> np.ndarray:
    if not path.exists():
        raise DatasetError(f"snapshot {index} missing: {path}")
    try:
        values = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=1)
    except ValueError as exc:
        raise DatasetError(f"snapshot {index} ({path}) does not parse: {exc}") from exc
    if values.shape != (n_s,):
        raise DatasetError(f"snapshot {index} ({path}) has {values.size} values, expected {n_s}")
    return values


def _apply_nan_policy(values: np.ndarray, policy: str, source) -> np.ndarray:
    bad = ~np.isfinite(values)
    if not bad.any():
        return values
    if policy == "reject":
        raise DatasetError(f"{source}: {int(bad.sum())} non-finite cells (nan_policy=reject)")
    log.warning("%s: zero-filled %d non-finite cells", source, int(bad.sum()))
    values = values.copy()
    values[bad] = 0.0
    return values


def load_dataset(manifest: Union[DatasetManifest, str, Path]) -> DataMatrix:
    """Load a dataset directory (or its manifest) into a :class:`DataMatrix`."""
    if not isinstance(manifest, DatasetManifest):
        manifest = DatasetManifest.read(manifest)
    meta = manifest.meta
    if manifest.layout == "packed_binary":
        name = manifest.files[0] if manifest.files else PACKED_FILE
        values, mean_removed = read_packed(manifest.path / name)
        if values.shape != (meta.n_s, manifest.n_t):
            raise DatasetError(
                f"{manifest.path}: file holds {values.shape}, manifest declares "
                f"({meta.n_s}, {manifest.n_t})")
    else:
        files = manifest.files or [SNAPSHOT_PATTERN.format(k) for k in range(manifest.n_t)]
        if len(files) != manifest.n_t:
            raise DatasetError(
                f"{manifest.path}: manifest lists {len(files)} snapshots, n_t={manifest.n_t}")
        paths = [manifest.path / f for f in files]
        with ThreadPoolExecutor(max_workers=thread_limit()) as pool:
            cols = list(pool.map(lambda a: _read_snapshot_csv(a[1], a[0], meta.n_s),
                                 enumerate(paths)))
        values = np.column_stack(cols)
        mean_removed = manifest.mean_removed
    values = _apply_nan_policy(values, manifest.nan_policy, manifest.path)
    return DataMatrix(values, meta, mean_removed)


def _write_csv(path: Path, header, rows) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format(v, FLOAT_FMT) if isinstance(v, (float, np.floating))
                                 else v for v in row])
    except OSError as exc:
        raise DatasetError(f"cannot write {path}: {exc}") from exc


def save_decomposition(result, out_dir, data: Optional[DataMatrix] = None,
                       n_modes: Optional[int] = None, f_s: float = 1.0,
                       norm: str = "fro") -> List[Path]:
    """Export a decomposition (or an mPOD result) as CSV tables.

    Writes ``sigmas.csv`` and, for the first ``n_modes`` modes,
    ``psi_###.csv``, ``phi_###.csv`` and ``psi_spectrum_###.csv``. With
    ``data`` the convergence curve goes to ``convergence.csv``; an mPOD result
    also yields ``scale_of_mode.csv``. Returns the written paths.
    """
    scale_of_mode = getattr(result, "scale_of_mode", None)
    dec: Decomposition = getattr(result, "decomposition", result)
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DatasetError(f"cannot create {out}: {exc}") from exc
    written = []
    energy = dec.normalized_energies()
    sq = dec.sigma ** 2
    cumulative = np.cumsum(sq) / sq.sum() if sq.sum() > 0 else np.zeros_like(sq)
    path = out / "sigmas.csv"
    _write_csv(path, ["index", "sigma", "sigma_hat_sq", "cumulative_energy"],
               ((r, float(dec.sigma[r]), float(energy[r]), float(cumulative[r]))
                for r in range(dec.n_modes)))
    written.append(path)
    count = dec.n_modes if n_modes is None else min(n_modes, dec.n_modes)
    t = np.arange(dec.n_t) / f_s
    freqs = np.fft.fftfreq(dec.n_t, d=1.0 / f_s)
    for r in range(count):
        psi = dec.psi[:, r].astype(np.complex128)
        phi = dec.phi[:, r].astype(np.complex128)
        spec = np.abs(np.fft.fft(psi))
        tables = {
            f"psi_{r:03d}.csv": (["t", "re", "im"],
                                 zip(t, psi.real, psi.imag)),
            f"phi_{r:03d}.csv": (["index", "re", "im"],
                                 ((i, float(a), float(b)) for i, (a, b)
                                  in enumerate(zip(phi.real, phi.imag)))),
            f"psi_spectrum_{r:03d}.csv": (["f_Hz", "abs"], zip(freqs, spec)),
        }
        for name, (header, rows) in tables.items():
            _write_csv(out / name, header, ((float(v) if isinstance(v, np.floating) else v
                                             for v in row) for row in rows))
            written.append(out / name)
    if data is not None:
        curve = convergence_curve(data, dec, norm=norm, check_pod=dec.kind == "pod")
        path = out / "convergence.csv"
        _write_csv(path, ["r", "E"], ((r, float(e)) for r, e in enumerate(curve)))
        written.append(path)
    if scale_of_mode is not None:
        path = out / "scale_of_mode.csv"
        _write_csv(path, ["index", "scale"], enumerate(int(s) for s in scale_of_mode))
        written.append(path)
    return written


def load_sigmas(path) -> np.ndarray:
    path = Path(path)
    if path.is_dir():
        path = path / "sigmas.csv"
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return table[:, 1]


def convert_tutorial(files, out_dir, f_s: float, columns=(0, 1, 2, 3), delimiter=None,
                     skiprows: int = 0, mesh_file=None, nan_policy: str = "reject",
                     dx: Optional[float] = None) -> DatasetManifest:
    """Convert per-snapshot ``x, y, u, v`` text files into a packed dataset.

    ``columns`` picks the x, y, u, v columns. When ``mesh_file`` is given, the
    snapshot files hold only ``u, v`` (``columns[2:]``) and the coordinates
    come from the mesh file's ``columns[:2]``. Grid indices come from the
    sorted unique coordinates; the flattened snapshot stacks the u block then
    the v block, each in x-fastest order.
    """
    files = [Path(f) for f in files]
    if not files:
        raise DomainError("no snapshot files given")
    kw = dict(delimiter=delimiter, skiprows=skiprows, ndmin=2)
    if mesh_file is not None:
        mesh = np.loadtxt(mesh_file, usecols=columns[:2], **kw)
        uv_cols = columns[2:]
    else:
        mesh = np.loadtxt(files[0], usecols=columns[:2], **kw)
        uv_cols = columns[2:]
    xs, ix = np.unique(mesh[:, 0], return_inverse=True)
    ys, iy = np.unique(mesh[:, 1], return_inverse=True)
    n_x, n_y = xs.size, ys.size
    if n_x * n_y != mesh.shape[0]:
        raise ShapeError(f"{mesh.shape[0]} points do not form a {n_x} x {n_y} grid")
    flat = ix + n_x * iy
    meta = GridMeta(n_x, n_y, 2, dx if dx is not None else float(np.diff(xs).mean())
                    if n_x > 1 else 1.0, 1.0 / f_s)

    def read(item):
        k, path = item
        if not path.exists():
            raise DatasetError(f"snapshot {k} missing: {path}")
        uv = np.loadtxt(path, usecols=uv_cols, **kw)
        if uv.shape[0] != flat.size:
            raise DatasetError(f"snapshot {k} ({path}) has {uv.shape[0]} rows, "
                               f"expected {flat.size}")
        col = np.empty(meta.n_s)
        col[flat] = uv[:, 0]
        col[meta.n_x * meta.n_y + flat] = uv[:, 1]
        return col

    with ThreadPoolExecutor(max_workers=thread_limit()) as pool:
        cols = list(pool.map(read, enumerate(files)))
    values = _apply_nan_policy(np.column_stack(cols), nan_policy, out_dir)
    manifest = save_dataset(DataMatrix(values, meta), out_dir)
    manifest.mesh_file = None if mesh_file is None else str(mesh_file)
    manifest.write()
    return manifest
