import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modalkit import (FrequencySplitting, PlantedMode, build_scale_bank, mpod, planted_modes, pod,
                      scale_energies)
from modalkit.exceptions import DomainError, RankDeficiencyWarning, ValidityWarning
from modalkit.synthdata import orthonormal_shapes


def _harmonics(n_s=40, n_t=256, f_s=10.0, bins=(13, 77), sigmas=(3.0, 1.0), seed=0):
    """Cosine/sine pairs planted exactly on DFT bins (no leakage)."""
    shapes = orthonormal_shapes(n_s, 2 * len(bins), seed)
    modes = []
    for i, (b, s) in enumerate(zip(bins, sigmas)):
        modes.append(PlantedMode(s, shapes[:, 2 * i], frequency=b / n_t))
        modes.append(PlantedMode(s, shapes[:, 2 * i + 1], frequency=b / n_t, phase=np.pi / 2))
    return planted_modes(n_s, n_t, modes, f_s=f_s)


def test_splitting_parse_and_edges():
    s = FrequencySplitting.parse("0:10, 290:320,430:470")
    assert s.bands == ((0, 10), (290, 320), (430, 470)) and len(s) == 3
    e = FrequencySplitting.from_edges([1.0, 2.0], f_s=10.0)
    assert e.bands == ((0, 1), (1, 2), (2, 5)) and e.is_contiguous(10.0)
    with pytest.raises(DomainError):
        FrequencySplitting.parse("0-10")
    with pytest.raises(DomainError):
        FrequencySplitting(((0, 10), (5, 20)))
    with pytest.raises(DomainError):
        FrequencySplitting(((3, 1),))


def test_single_band_is_allpass():
    bank = build_scale_bank(FrequencySplitting(((0, 5),)), 10.0, 64)
    assert bank.n_scales == 1 and bank.contiguous
    assert np.allclose(bank.responses, 1.0)


def test_three_scale_fir_bank_is_complementary():
    split = FrequencySplitting.from_edges([0.5, 1.0, 2.0], f_s=10.0)
    bank = build_scale_bank(split, 10.0, 1024, fir_order=101)
    assert bank.n_scales == 4 and len(bank.kernels) == 4
    taps = sum(k.taps for k in bank.kernels)
    assert np.allclose(taps, np.eye(101)[50], atol=1e-15)
    c = bank.complementarity(guard_bins=4)
    assert c["sum_deviation"] < 0.05 and c["max_cross_product"] < 0.05


def test_ideal_bank_is_exactly_complementary():
    split = FrequencySplitting.from_edges([0.5, 1.0, 2.0], f_s=10.0)
    bank = build_scale_bank(split, 10.0, 512, mode="ideal")
    c = bank.complementarity()
    assert c["sum_deviation"] < 1e-12 and c["max_cross_product"] < 1e-12
    assert bank.bins_per_scale().sum() == 512


def test_non_contiguous_bank_flag():
    split = FrequencySplitting.parse("0:10,290:320,430:470")
    bank = build_scale_bank(split, 3000.0, 13200 // 10, fir_order=201)
    assert not bank.contiguous and bank.n_scales == 3
    assert np.isnan(bank.complementarity()["sum_deviation"])


def test_band_errors():
    with pytest.raises(DomainError):
        build_scale_bank(FrequencySplitting(((1.0, 1.01), (1.01, 5.0))), 10.0, 64)
    with pytest.raises(DomainError):
        build_scale_bank(FrequencySplitting(((0.0, 6.0),)), 10.0, 64)
    with pytest.raises(DomainError):
        build_scale_bank(FrequencySplitting.from_edges([2.0], 10.0), 10.0, 64, fir_order=64)


def test_single_scale_equals_pod(rng):
    D = rng.standard_normal((30, 64))
    res = mpod(D, FrequencySplitting(((0, 0.5),)))
    P = pod(D)
    assert np.allclose(res.decomposition.sigma, P.sigma, rtol=1e-8)
    assert np.allclose(scale_energies(res), [1.0])


def test_two_harmonics_energy_ratio():
    D, truth = _harmonics()
    split = FrequencySplitting.from_edges([1.5], f_s=10.0)
    with warnings.catch_warnings():
        # FIR leakage makes a few low-energy modes of the two scales parallel
        warnings.simplefilter("ignore", (ValidityWarning, RankDeficiencyWarning))
        res = mpod(D, split, fir_order=51)
    e = scale_energies(res)
    assert e[0] / e[1] == pytest.approx(9.0, rel=0.01)
    assert e.sum() == pytest.approx(1.0, rel=1e-6)


def test_non_contiguous_bands_lose_energy():
    D, _ = _harmonics(bins=(13, 77, 102), sigmas=(3.0, 1.0, 1.0), seed=1)
    split = FrequencySplitting.parse("0:1,2.5:3.5")
    res = mpod(D, split, mode="ideal")
    e = scale_energies(res)
    assert e.sum() < 0.99
    assert e.sum() == pytest.approx((9 + 1) / 11, rel=1e-6)


@pytest.mark.parametrize("mode", ["fir", "ideal"])
def test_orthonormal_temporal_basis(rng, mode):
    D = rng.standard_normal((20, 128))
    split = FrequencySplitting.from_edges([0.1, 0.25], f_s=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", (ValidityWarning, RankDeficiencyWarning))
        res = mpod(D, split, fir_order=31, mode=mode)
    psi = res.decomposition.psi
    assert np.abs(psi.T @ psi - np.eye(psi.shape[1])).max() < 1e-10


def test_ideal_scales_are_mutually_orthogonal(rng):
    from modalkit.mpod import _scale_eigensystem
    D = rng.standard_normal((12, 64))
    K = D.T @ D
    bank = build_scale_bank(FrequencySplitting.from_edges([0.2], 1.0), 1.0, 64, mode="ideal")
    (_, a), (_, b) = (_scale_eigensystem(K, r, True) for r in bank.responses)
    assert np.abs(a.T @ b).max() < 1e-8


def test_scale_rank_bound(rng):
    D = rng.standard_normal((80, 64))
    split = FrequencySplitting.from_edges([0.05, 0.2], f_s=1.0)
    res = mpod(D, split, mode="ideal", keep_rtol=0)
    counts = np.bincount(res.scale_of_mode, minlength=3)
    assert np.all(counts <= res.bank.bins_per_scale())


def test_full_rank_ideal_is_lossless(rng):
    D = rng.standard_normal((80, 64))
    res = mpod(D, FrequencySplitting.from_edges([0.1, 0.3], 1.0), mode="ideal", keep_rtol=0)
    err = np.linalg.norm(D - res.decomposition.reconstruct()) / np.linalg.norm(D)
    assert err < 1e-8


@settings(max_examples=10)
@given(st.integers(0, 1000))
def test_partial_sums_never_beat_pod(seed):
    rng = np.random.default_rng(seed)
    D = rng.standard_normal((25, 96))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", (ValidityWarning, RankDeficiencyWarning))
        res = mpod(D, FrequencySplitting.from_edges([0.15, 0.3], 1.0), fir_order=21)
    sm = np.cumsum(res.decomposition.sigma ** 2)
    sp = np.cumsum(pod(D).sigma ** 2)
    r = min(sm.size, sp.size)
    assert np.all(sm[:r] <= sp[:r] * (1 + 1e-10))


def test_empty_split_falls_back_to_pod(rng):
    D = rng.standard_normal((10, 20))
    with pytest.warns(ValidityWarning):
        res = mpod(D, FrequencySplitting(()))
    assert np.allclose(res.decomposition.sigma, pod(D).sigma)


def test_short_record_warns(rng):
    D = rng.standard_normal((10, 100))
    with pytest.warns(ValidityWarning):
        mpod(D, FrequencySplitting.from_edges([0.2], 1.0), fir_order=31)


def test_deterministic(rng):
    D = rng.standard_normal((15, 128))
    split = FrequencySplitting.from_edges([0.1], 1.0)
    a = mpod(D, split, fir_order=31)
    b = mpod(D, split, fir_order=31)
    assert np.array_equal(a.decomposition.psi, b.decomposition.psi)
    assert np.array_equal(a.scale_of_mode, b.scale_of_mode)
