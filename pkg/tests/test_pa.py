import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gfdmpa.analytic import PaSpectrumModel
from gfdmpa.errors import NoCompressionPoint, NoSaturationPoint, NumericalGuardError
from gfdmpa.moments import moment_weights
from gfdmpa.pa import (IDENTITY_PA, ONE_DB, FITTED_PA, CompressionReport, Level, PaModel, PowerCurve,
                       apply_pa, compression_report, compute_Aj, find_p1db, find_saturation, from_dbm,
                       output_power, pair_weight_sums, symbol_power, to_dbm)
from gfdmpa.waveform import BasebandSignal, GfdmConfig, build_prototype_filter, concatenate_frames

QUADRATIC = PowerCurve(A=np.array([0.0, 1.0, -0.25]))
CUBIC = PowerCurve(A=np.array([0.0, 1.0, -0.5, 0.05]))   # rises, peaks, dips, rises


def sig(samples, fs=1.0):
    samples = np.asarray(samples, dtype=complex)
    return BasebandSignal(samples, fs, 1, samples.size)


def test_dbm_round_trip():
    assert to_dbm(1e-3) == pytest.approx(0.0)
    assert from_dbm(30.0) == pytest.approx(1.0)
    assert to_dbm(from_dbm(13.3)) == pytest.approx(13.3)


def test_pa_model_validation():
    with pytest.raises(ValueError):
        PaModel(())
    with pytest.raises(ValueError):
        PaModel((0, 0))
    assert FITTED_PA.L == 2 and FITTED_PA.order == 5
    assert IDENTITY_PA.L == 0


def test_identity_pa(rng):
    y = rng.normal(size=100) + 1j * rng.normal(size=100)
    np.testing.assert_array_equal(apply_pa(sig(y), IDENTITY_PA).samples, y)


def test_constant_input():
    z = apply_pa(sig(np.ones(4)), PaModel((1.0, -0.1))).samples
    np.testing.assert_allclose(z, 0.9)


def test_fitted_pa_unit_tone():
    n = np.arange(64)
    y = np.exp(2j * np.pi * 3 * n / 64)
    z = apply_pa(sig(y), FITTED_PA).samples
    expected = abs(14.9740 + 0.0519j + (-23.0954 + 4.9680j) + (21.3936 + 0.4305j))
    np.testing.assert_allclose(np.abs(z), expected, rtol=1e-12)


def test_aliasing_warning():
    y = sig(np.ones(8), fs=4.0)
    with pytest.warns(RuntimeWarning):
        apply_pa(y, FITTED_PA, bandwidth=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        apply_pa(y, FITTED_PA, bandwidth=0.5)


@settings(max_examples=30, deadline=None)
@given(st.floats(-np.pi, np.pi), st.integers(0, 2**32 - 1))
def test_phase_covariance_and_permutation(theta, seed):
    rng = np.random.default_rng(seed)
    y = rng.normal(size=50) + 1j * rng.normal(size=50)
    z = apply_pa(sig(y), FITTED_PA).samples
    rot = apply_pa(sig(np.exp(1j * theta) * y), FITTED_PA).samples
    np.testing.assert_allclose(rot, np.exp(1j * theta) * z, rtol=1e-10, atol=1e-10)
    perm = rng.permutation(50)
    np.testing.assert_array_equal(apply_pa(sig(y[perm]), FITTED_PA).samples, z[perm])


def test_chunking_is_bitwise_identical(rng):
    y = rng.normal(size=1000) + 1j * rng.normal(size=1000)
    whole = apply_pa(sig(y), FITTED_PA).samples
    parts = np.concatenate([apply_pa(sig(c), FITTED_PA).samples for c in np.array_split(y, 7)])
    np.testing.assert_array_equal(whole, parts)


def test_linear_only_coefficients(ref_setup):
    cfg, filt = ref_setup
    a1 = 2.0 - 1.0j
    c = compute_Aj(cfg, filt, PaModel((a1,)))
    # sum_m of unit-energy pulses averages to fs/N per sample
    assert c.A[1] == pytest.approx(abs(a1) ** 2 * cfg.K * symbol_power(cfg) / cfg.N, rel=1e-12)
    assert c.A[0] == 0 and c.A.size == 2


def test_third_order_weight_sum():
    a1, a3 = 1.0 + 0.5j, -0.3 + 0.2j
    W = pair_weight_sums(PaModel((a1, a3)))
    assert W[3] == pytest.approx(sum(moment_weights(1, 1).weights) * abs(a3) ** 2)
    assert sum(moment_weights(1, 1).weights) == 6
    assert W[2] == pytest.approx(2 * (a1 * np.conj(a3) + a3 * np.conj(a1)))


def test_rectangular_single_slot_closed_form():
    cfg = GfdmConfig(K=4, M=1, N=16, Ts=1e-3, filter_kind="rectangular")
    filt = build_prototype_filter(cfg)
    pa = PaModel((1.0, -0.2, 0.05))
    c = compute_Aj(cfg, filt, pa)
    scale = cfg.K * symbol_power(cfg) / cfg.N   # constant envelope fs/N times K px / fs
    W = pair_weight_sums(pa).real
    np.testing.assert_allclose(c.A[1:], scale ** np.arange(1, 6) * W[1:], rtol=1e-9)


def test_imaginary_residue_guard(ref_setup, monkeypatch):
    cfg, filt = ref_setup
    import gfdmpa.pa as pa_mod
    monkeypatch.setattr(pa_mod, "pair_weight_sums", lambda pa: np.array([0, 1 + 1e-3j]))
    with pytest.raises(NumericalGuardError):
        compute_Aj(cfg, filt, IDENTITY_PA)


def test_power_curve_matches_zero_lag_autocorrelation(ref_setup):
    cfg, filt = ref_setup
    curve = compute_Aj(cfg, filt, FITTED_PA)
    model = PaSpectrumModel(cfg, filt, FITTED_PA)
    for dbm in (0.0, 10.0, 17.07, 20.0):
        a = float(from_dbm(dbm))
        r0 = model.autocorr(a, 4096).r[0]
        assert abs(r0.imag) <= 1e-12 * abs(r0)
        assert curve(a) == pytest.approx(r0.real, rel=1e-6)
        assert curve(a) == pytest.approx(model.power(a), rel=1e-12)


def test_power_curve_matches_simulation(ref_setup):
    cfg, filt = ref_setup
    curve = compute_Aj(cfg, filt, FITTED_PA)
    for i, dbm in enumerate((0.0, 13.0, 17.07 + 10 * np.log10(1.5))):
        a = float(from_dbm(dbm))
        z = apply_pa(concatenate_frames(cfg.replace(alpha=a), filt, 1000, (99, i)), FITTED_PA)
        assert z.mean_power() == pytest.approx(curve(a), rel=0.01)


def test_output_power():
    assert output_power(QUADRATIC, 1e-9) == pytest.approx(1e-9, rel=1e-8)
    with pytest.raises(ValueError):
        output_power(QUADRATIC, 0.0)


def test_tabulate():
    t = QUADRATIC.tabulate([1.0, 2.0])
    np.testing.assert_allclose(t.pz, [0.75, 1.0])


def test_saturation_quadratic():
    lvl = find_saturation(QUADRATIC)
    assert lvl.alpha == pytest.approx(2.0, rel=1e-10)
    assert lvl.dbm == pytest.approx(10 * np.log10(2.0) + 30)


def test_p1db_quadratic():
    assert find_p1db(QUADRATIC).alpha == pytest.approx(4 * (1 - 10 ** -0.1), rel=1e-10)
    assert 4 * (1 - ONE_DB) == pytest.approx(0.822687061, abs=1e-9)


def test_cubic_smallest_stationary_point():
    A = CUBIC.A
    roots = np.sort(np.roots([3 * A[3], 2 * A[2], A[1]]).real)
    assert find_saturation(CUBIC).alpha == pytest.approx(roots[0], rel=1e-10)


def test_identity_has_no_critical_points(ref_setup):
    cfg, filt = ref_setup
    c = compute_Aj(cfg, filt, IDENTITY_PA)
    with pytest.raises(NoSaturationPoint):
        find_saturation(c)
    with pytest.raises(NoCompressionPoint):
        find_p1db(c)
    rep = compression_report(c)
    assert rep.p1db is None and rep.psat is None and rep.spread_db is None
    text = "\n".join(rep.lines())
    assert "no compression point" in text and "no saturation point" in text


def test_p1db_requires_positive_linear_gain():
    with pytest.raises(NoCompressionPoint):
        find_p1db(PowerCurve(A=np.array([0.0, -1.0, 1.0])))


def test_compression_after_saturation_is_rejected():
    # gain 1 + a - a^2 stays >= 1 up to the stationary point at alpha = 1
    c = PowerCurve(A=np.array([0.0, 1.0, 1.0, -1.0]))
    assert find_saturation(c).alpha == pytest.approx(1.0, rel=1e-10)
    with pytest.raises(NoCompressionPoint):
        find_p1db(c)


@pytest.mark.parametrize("n_grid", [2001, 20001, 200001])
def test_regridding_invariance(n_grid):
    for curve in (QUADRATIC, CUBIC):
        assert find_saturation(curve, n_grid).alpha == pytest.approx(find_saturation(curve).alpha, rel=1e-8)
        assert find_p1db(curve, n_grid).alpha == pytest.approx(find_p1db(curve).alpha, rel=1e-8)


def test_report_ordering_and_spread():
    rep = compression_report(QUADRATIC)
    assert 0 < rep.p1db.alpha < rep.psat.alpha
    assert rep.spread_db == pytest.approx(rep.psat.dbm - rep.p1db.dbm)
    assert len(rep.lines()) == 3


@pytest.mark.parametrize("c", [0.5, 2.0, 10.0])
def test_scaling_equivariance(c):
    base = compression_report(CUBIC)
    scaled = compression_report(PowerCurve(A=CUBIC.A * c ** np.arange(CUBIC.A.size)))
    shift = -10 * np.log10(c)
    assert scaled.p1db.dbm - base.p1db.dbm == pytest.approx(shift, abs=1e-9)
    assert scaled.psat.dbm - base.psat.dbm == pytest.approx(shift, abs=1e-9)
    assert scaled.spread_db == pytest.approx(base.spread_db, abs=1e-9)


def test_scaling_equivariance_through_subcarrier_count(ref_setup):
    cfg, filt = ref_setup
    full = find_p1db(compute_Aj(cfg, filt, FITTED_PA)).dbm
    half = find_p1db(compute_Aj(cfg.replace(K=32), filt, FITTED_PA)).dbm
    assert full - half == pytest.approx(-10 * np.log10(2), abs=1e-8)


def test_fitted_pa_compression_point(ref_setup):
    cfg, filt = ref_setup
    p1 = find_p1db(compute_Aj(cfg, filt, FITTED_PA))
    assert p1.dbm == pytest.approx(13.1126870964, abs=1e-6)


def test_fitted_pa_has_no_stationary_point(ref_setup):
    cfg, filt = ref_setup
    curve = compute_Aj(cfg, filt, FITTED_PA)
    a = np.geomspace(1e-6, 1e3, 100001)
    assert np.all(curve.derivative(a) > 0)
    with pytest.raises(NoSaturationPoint):
        find_saturation(curve)


def test_level_tuple():
    lvl = Level(1e-3, 0.0)
    assert lvl.alpha == 1e-3 and lvl.dbm == 0.0
    assert CompressionReport(lvl, None).spread_db is None
