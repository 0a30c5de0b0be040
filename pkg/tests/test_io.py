import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from modalkit import DataMatrix, FrequencySplitting, GridMeta, mpod, pod
from modalkit.clio.io import (PACKED_FILE, DatasetError, DatasetManifest, convert_tutorial,
                              load_dataset, load_sigmas, read_packed, save_dataset,
                              save_decomposition)


def _data(rng, n_s=12, n_t=7, f_s=4.0):
    return DataMatrix(rng.standard_normal((n_s, n_t)), GridMeta.for_points(n_s, f_s=f_s))


def test_packed_round_trip_is_bit_exact(tmp_path, rng):
    D = _data(rng)
    save_dataset(D, tmp_path)
    back = load_dataset(tmp_path)
    assert np.array_equal(back.values, D.values)
    assert back.f_s == 4.0 and not back.mean_removed


@settings(max_examples=15)
@given(arrays(np.float64, (5, 3), elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_packed_round_trip_property(tmp_path_factory, A):
    out = tmp_path_factory.mktemp("packed")
    save_dataset(DataMatrix.from_array(A), out)
    assert np.array_equal(load_dataset(out).values, A)


def test_csv_round_trip(tmp_path, rng):
    D = _data(rng)
    m = save_dataset(D, tmp_path, layout="per_snapshot_csv")
    assert len(m.files) == D.n_t
    assert np.array_equal(load_dataset(tmp_path / "manifest.json").values, D.values)


def test_missing_snapshot_reports_index(tmp_path, rng):
    save_dataset(_data(rng), tmp_path, layout="per_snapshot_csv")
    (tmp_path / "snapshot_00003.csv").unlink()
    with pytest.raises(DatasetError, match="snapshot 3"):
        load_dataset(tmp_path)


def test_corrupt_packed_file(tmp_path, rng):
    save_dataset(_data(rng), tmp_path)
    raw = (tmp_path / PACKED_FILE).read_bytes()
    (tmp_path / PACKED_FILE).write_bytes(raw[:-8])
    with pytest.raises(DatasetError, match="expected"):
        read_packed(tmp_path / PACKED_FILE)
    (tmp_path / PACKED_FILE).write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(DatasetError, match="magic"):
        load_dataset(tmp_path)


def test_missing_manifest(tmp_path):
    with pytest.raises(DatasetError):
        load_dataset(tmp_path)


def test_nan_policies(tmp_path):
    save_dataset(DataMatrix.from_array(np.ones((3, 4))), tmp_path, layout="per_snapshot_csv")
    (tmp_path / "snapshot_00002.csv").write_text("value\n1\nnan\n1\n")
    with pytest.raises(DatasetError, match="non-finite"):
        load_dataset(tmp_path)
    raw = json.loads((tmp_path / "manifest.json").read_text())
    raw["nan_policy"] = "zero_fill"
    (tmp_path / "manifest.json").write_text(json.dumps(raw))
    back = load_dataset(tmp_path)
    assert back.values[1, 2] == 0 and back.values.sum() == 11


def test_manifest_validation(tmp_path):
    with pytest.raises(Exception):
        DatasetManifest(tmp_path, "hdf5", 3, 1.0, 2)


def test_save_decomposition_rank_one(tmp_path):
    D = np.outer([1.0, 2.0, 3.0], [1.0, -1.0, 0.5, 2.0])
    dec = pod(D)
    files = save_decomposition(dec, tmp_path, data=DataMatrix.from_array(D))
    names = sorted(p.name for p in files)
    assert names == ["convergence.csv", "phi_000.csv", "psi_000.csv", "psi_spectrum_000.csv",
                     "sigmas.csv"]
    assert load_sigmas(tmp_path)[0] == dec.sigma[0]  # 17 significant digits survive
    curve = np.loadtxt(tmp_path / "convergence.csv", delimiter=",", skiprows=1)
    assert curve[-1, 1] < 1e-12


def test_save_decomposition_limits_modes(tmp_path, rng):
    dec = pod(rng.standard_normal((10, 6)))
    files = save_decomposition(dec, tmp_path, n_modes=2)
    assert sum(p.name.startswith("psi_0") for p in files) == 2
    assert load_sigmas(tmp_path / "sigmas.csv").size == 6


def test_mpod_export_has_scale_map(tmp_path, rng):
    res = mpod(rng.standard_normal((20, 32)), FrequencySplitting.from_edges([0.2], 1.0),
               mode="ideal")
    save_decomposition(res, tmp_path, n_modes=1)
    table = np.loadtxt(tmp_path / "scale_of_mode.csv", delimiter=",", skiprows=1, ndmin=2)
    assert np.array_equal(table[:, 1].astype(int), res.scale_of_mode)


def _write_field(path, x, y, u, v, with_coords=True):
    rows = np.column_stack([x, y, u, v] if with_coords else [u, v])
    np.savetxt(path, rows)


def test_convert_tutorial(tmp_path, rng):
    gx, gy = np.meshgrid(np.arange(3) * 0.5, np.arange(2) * 0.5, indexing="xy")
    x, y = gx.ravel(), gy.ravel()
    perm = rng.permutation(x.size)  # rows in arbitrary order
    u_true = rng.standard_normal((2, 3, 4))
    v_true = rng.standard_normal((2, 3, 4))
    files = []
    for k in range(4):
        p = tmp_path / f"raw_{k}.dat"
        _write_field(p, x[perm], y[perm], u_true[..., k].ravel()[perm],
                     v_true[..., k].ravel()[perm])
        files.append(p)
    m = convert_tutorial(files, tmp_path / "out", f_s=100.0)
    D = load_dataset(m.path)
    assert D.shape == (12, 4) and D.f_s == 100.0
    assert np.allclose(D.values[:6], u_true.reshape(6, 4))
    assert np.allclose(D.values[6:], v_true.reshape(6, 4))
    assert m.meta.dx == pytest.approx(0.5)


def test_convert_tutorial_with_mesh_file(tmp_path, rng):
    x, y = np.array([0.0, 1.0, 0.0, 1.0]), np.array([0.0, 0.0, 1.0, 1.0])
    mesh = tmp_path / "mesh.dat"
    np.savetxt(mesh, np.column_stack([x, y]))
    files = []
    for k in range(3):
        p = tmp_path / f"uv_{k}.dat"
        np.savetxt(p, np.column_stack([np.full(4, k), -np.full(4, k)]))
        files.append(p)
    m = convert_tutorial(files, tmp_path / "out", f_s=1.0, columns=(0, 1, 0, 1),
                         mesh_file=mesh)
    D = load_dataset(tmp_path / "out")
    assert m.mesh_file == str(mesh)
    assert np.allclose(D.values[:4], [[0, 1, 2]] * 4)
    assert np.allclose(D.values[4:], [[0, -1, -2]] * 4)


def test_convert_tutorial_errors(tmp_path):
    p = tmp_path / "a.dat"
    np.savetxt(p, np.array([[0, 0, 1, 1], [1, 0, 1, 1], [0, 1, 1, 1]]))
    with pytest.raises(Exception, match="grid"):
        convert_tutorial([p], tmp_path / "o", f_s=1.0)
    with pytest.raises(Exception):
        convert_tutorial([], tmp_path / "o", f_s=1.0)
