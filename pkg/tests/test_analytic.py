import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gfdmpa.analytic import (AutocorrTable, LagMoments, PaSpectrumModel, avg_autocorr_pa, dirichlet,
                             gfdm_power, instantaneous_autocorr, psd_gfdm, psd_pa_output)
from gfdmpa.errors import NumericalGuardError
from gfdmpa.metrics import default_bands
from gfdmpa.moments import moment_weights
from gfdmpa.pa import IDENTITY_PA, FITTED_PA, PaModel, compute_Aj, from_dbm, symbol_power
from gfdmpa.spectrum import integrate_band, oob_ratio
from gfdmpa.waveform import GfdmConfig, build_prototype_filter, concatenate_frames


@pytest.mark.parametrize("K,N", [(1, 4), (2, 8), (3, 8), (64, 320), (5, 5)])
def test_dirichlet_matches_explicit_sum(K, N):
    lags = np.arange(-3 * N, 3 * N + 1)
    k = np.arange(K) - (K - 1) / 2
    direct = np.exp(2j * np.pi * np.outer(lags, k) / N).sum(axis=1)
    np.testing.assert_allclose(dirichlet(lags, K, N), direct.real, atol=1e-9 * K)
    np.testing.assert_allclose(direct.imag, 0, atol=1e-9 * K)


def test_instantaneous_autocorr_matches_ensemble(small):
    cfg, filt = small
    frames = 20000
    y = concatenate_frames(cfg, filt, frames, 4).samples.reshape(frames, -1)
    for n, l in [(5, 0), (17, 3), (30, 9), (3, -4)]:
        emp = np.mean(y[:, n] * np.conj(y[:, n - l]))
        ref = instantaneous_autocorr(cfg, filt, n, l)
        assert abs(emp - ref) < 0.03 * instantaneous_autocorr(cfg, filt, n, 0)


def test_cyclostationarity(ref_setup):
    cfg, filt = ref_setup
    n = np.arange(0, cfg.block_len, 37)
    lags = np.arange(-200, 200, 13)[:, None]
    np.testing.assert_array_equal(
        instantaneous_autocorr(cfg, filt, n, lags),
        instantaneous_autocorr(cfg, filt, n + cfg.block_len, lags),
    )


def test_no_correlation_across_blocks(small):
    cfg, filt = small
    assert instantaneous_autocorr(cfg, filt, cfg.block_len, 1) == 0.0


def test_lag_tables_match_time_domain_average(small):
    cfg, filt = small
    MN = cfg.block_len
    lm = LagMoments(cfg, filt)
    n = np.arange(MN)[:, None]
    lags = np.arange(MN)[None, :]
    scale = cfg.alpha * symbol_power(cfg)
    rho = instantaneous_autocorr(cfg, filt, n, lags) / (scale * dirichlet(lags, cfg.K, cfg.N))
    h = instantaneous_autocorr(cfg, filt, n, 0) / (scale * cfg.K)
    h_lag = instantaneous_autocorr(cfg, filt, n - lags, 0) / (scale * cfg.K)
    valid = n >= lags
    for s, q1, q2 in [(1, 0, 0), (1, 1, 0), (3, 0, 2), (3, 1, 1), (1, 2, 2)]:
        ref = np.where(valid, rho**s * h**q1 * h_lag**q2, 0.0).sum(axis=0) / MN
        np.testing.assert_allclose(lm.table(s, q1, q2), ref, rtol=1e-12, atol=1e-14 * np.abs(ref).max())


def test_third_order_phi_structure():
    w = moment_weights(1, 1)
    r, r0 = 0.3 - 0.2j, 1.1
    assert w.evaluate(r, r0) == pytest.approx(4 * r * r0**2 + 2 * r**2 * np.conj(r))


def test_single_carrier_psd_is_filter_spectrum():
    cfg = GfdmConfig(K=1, M=3, N=16, Ts=1e-3, alpha=0.2)
    filt = build_prototype_filter(cfg)
    spec = psd_gfdm(cfg, filt, 1024)
    G = np.fft.fft(filt.gm, 1024, axis=1) / cfg.fs
    expected = cfg.alpha * symbol_power(cfg) / (cfg.M * cfg.N) * np.sum(np.abs(G) ** 2, axis=0)
    np.testing.assert_allclose(spec.psd, np.fft.fftshift(expected), rtol=0, atol=1e-12 * expected.max())
    assert spec.meta == "analytic-yy"


@pytest.mark.parametrize("nfft", [4096, 8192, 65536])
def test_gfdm_parseval(ref_setup, nfft):
    cfg, filt = ref_setup
    spec = psd_gfdm(cfg.replace(alpha=1e-3), filt, nfft)
    assert spec.total_power() == pytest.approx(gfdm_power(cfg.replace(alpha=1e-3)), rel=1e-3)
    assert np.all(spec.psd >= 0)


def test_gfdm_psd_symmetry(ref_setup):
    cfg, filt = ref_setup
    s = psd_gfdm(cfg, filt, 8192).psd
    np.testing.assert_allclose(s[1:], s[1:][::-1], atol=1e-9 * s.max())


def test_gfdm_psd_grid(ref_setup):
    cfg, filt = ref_setup
    spec = psd_gfdm(cfg, filt, 4096)
    assert spec.f[0] == pytest.approx(-cfg.fs / 2)
    assert spec.df == pytest.approx(cfg.fs / 4096)
    assert spec.f[-1] < cfg.fs / 2


def test_identity_pa_reproduces_gfdm_psd(ref_setup):
    cfg, filt = ref_setup
    a = psd_pa_output(cfg, filt, IDENTITY_PA, 8192)
    b = psd_gfdm(cfg, filt, 8192)
    np.testing.assert_allclose(a.psd, b.psd, rtol=1e-9, atol=1e-12 * b.psd.max())
    r = avg_autocorr_pa(cfg, filt, IDENTITY_PA, 4096)
    assert r.r[0].real == pytest.approx(gfdm_power(cfg), rel=1e-12)


def test_autocorr_properties(ref_setup):
    cfg, filt = ref_setup
    r = avg_autocorr_pa(cfg, filt, FITTED_PA, 4096)
    assert r.r[0].imag == pytest.approx(0, abs=1e-12 * abs(r.r[0])) and r.r[0].real > 0
    full = r.hermitian()
    lags = np.arange(1, cfg.block_len)
    np.testing.assert_array_equal(full[-lags], np.conj(full[lags]))
    assert not np.any(r.r[cfg.block_len:])
    np.testing.assert_allclose(r.tau, np.arange(4096) / cfg.fs)


def test_autocorr_rejects_short_transform(ref_setup):
    cfg, filt = ref_setup
    with pytest.raises(ValueError):
        avg_autocorr_pa(cfg, filt, FITTED_PA, 2 * cfg.block_len - 2)


@pytest.mark.parametrize("dbm", [0.0, 5.0, 13.11, 17.07, 20.07])
def test_pa_output_parseval_and_sign(ref_setup, dbm):
    cfg, filt = ref_setup
    a = float(from_dbm(dbm))
    model = PaSpectrumModel(cfg, filt, FITTED_PA)
    raw = model.autocorr(a, 8192).transform()
    assert raw.min() >= 0
    spec = model.psd(a, 8192)
    assert spec.meta == "analytic-zz"
    assert spec.total_power() == pytest.approx(compute_Aj(cfg, filt, FITTED_PA)(a), rel=1e-3)


@pytest.mark.parametrize("envelope", ["joint", "common"])
def test_envelope_forms_coincide_at_zero_lag(ref_setup, envelope):
    cfg, filt = ref_setup
    a = float(from_dbm(15.0))
    r = PaSpectrumModel(cfg, filt, FITTED_PA, envelope).autocorr(a, 4096).r
    assert r[0].real == pytest.approx(compute_Aj(cfg, filt, FITTED_PA)(a), rel=1e-12)


def test_envelope_forms_agree_closely_for_fitted_pa(ref_setup):
    cfg, filt = ref_setup
    a = float(from_dbm(17.07))
    main, adj = default_bands(cfg)
    ratios = [oob_ratio(PaSpectrumModel(cfg, filt, FITTED_PA, e).psd(a, 8192), main, adj) for e in ("joint", "common")]
    assert abs(ratios[0] - ratios[1]) < 0.01


def test_unknown_envelope(ref_setup):
    cfg, filt = ref_setup
    with pytest.raises(ValueError):
        PaSpectrumModel(cfg, filt, FITTED_PA, "stationary")


def test_locally_stationary_form_can_go_negative():
    # pure cubic PA on a single carrier and slot: the common-envelope form is
    # not a valid spectrum, while the joint form is
    cfg = GfdmConfig(K=1, M=1, N=16, Ts=1e-3, alpha=0.02)
    filt = build_prototype_filter(cfg)
    pa = PaModel((0.0, 1.0))
    assert PaSpectrumModel(cfg, filt, pa, "common").autocorr(cfg.alpha, 512).transform().min() < 0
    with pytest.raises(NumericalGuardError):
        PaSpectrumModel(cfg, filt, pa, "common").psd(cfg.alpha, 512)
    joint = PaSpectrumModel(cfg, filt, pa, "joint").autocorr(cfg.alpha, 512).transform()
    assert joint.min() >= -1e-12 * joint.max()


@settings(max_examples=20, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), min_size=1, max_size=3),
       st.integers(1, 3), st.integers(1, 3))
def test_joint_form_is_nonnegative(coeffs, K, M):
    if not any(coeffs):
        return
    cfg = GfdmConfig(K=K, M=M, N=8, Ts=1e-3, alpha=0.05)
    filt = build_prototype_filter(cfg)
    s = PaSpectrumModel(cfg, filt, PaModel(tuple(coeffs))).autocorr(cfg.alpha, 256).transform()
    assert s.min() >= -1e-9 * np.abs(s).max()


def test_clipping_policy(caplog):
    fs = 1.0
    r = np.zeros(16, complex)
    r[0], r[1] = 1.0, 0.5 + 1e-7
    tab = AutocorrTable(np.arange(16.0), r, fs)
    with caplog.at_level(logging.WARNING):
        spec = tab.to_psd("analytic-zz")
    assert spec.psd.min() == 0.0
    assert "clipping" in caplog.text
    r[1] = 0.6
    with pytest.raises(NumericalGuardError):
        AutocorrTable(np.arange(16.0), r, fs).to_psd("analytic-zz")


def test_regrowth_is_monotone(ref_setup):
    cfg, filt = ref_setup
    _, adj = default_bands(cfg)
    model = PaSpectrumModel(cfg, filt, FITTED_PA)
    levels = from_dbm(np.arange(-10.0, 17.5, 1.0))
    p = [integrate_band(model.psd(float(a), 8192), adj) for a in levels]
    assert np.all(np.diff(p) > 0)


def test_regrowth_at_saturation_drive(ref_setup):
    cfg, filt = ref_setup
    _, adj = default_bands(cfg)
    model = PaSpectrumModel(cfg, filt, FITTED_PA)
    low = integrate_band(model.psd(float(from_dbm(5.0)), 8192), adj)
    high = integrate_band(model.psd(float(from_dbm(17.07)), 8192), adj)
    assert 10 * np.log10(high / low) > 10


@pytest.mark.parametrize("K,M,N,nfft", [(64, 5, 320, 4096), (3, 2, 8, 64), (4, 3, 10, 128)])
def test_gfdm_psd_lag_domain_path_matches_direct_copies(K, M, N, nfft):
    from gfdmpa.analytic import filter_spectra
    cfg = GfdmConfig(K=K, M=M, N=N, Ts=1e-3)
    filt = build_prototype_filter(cfg)
    total = np.zeros(nfft)
    for k in range(K):
        G = filter_spectra(filt, (k - cfg.center) / N, nfft)
        total += np.sum(np.abs(G) ** 2, axis=0)
    ref = np.fft.fftshift(total * cfg.alpha * symbol_power(cfg) / (M * N))
    np.testing.assert_allclose(psd_gfdm(cfg, filt, nfft).psd, ref, rtol=0, atol=1e-12 * ref.max())


def test_gfdm_psd_short_grid_uses_direct_copies(ref_setup):
    cfg, filt = ref_setup
    spec = psd_gfdm(cfg, filt, 1024)   # shorter than the filter autocorrelation
    # a grid of nfft samples integrates to the lag-aliased sum of R(j * nfft)
    r = PaSpectrumModel(cfg, filt, IDENTITY_PA).autocorr(cfg.alpha, 4096).hermitian()
    aliased = r[0].real + 2 * r[1024].real
    assert spec.total_power() == pytest.approx(aliased, rel=1e-9)
