"""Closed-form PSDs of the GFDM signal and of the PA output.

All quantities use sample-power units (see :mod:`gfdmpa.waveform`): the
autocorrelation of ``y[n]`` at lag ``l`` and block position ``n`` is

    R(n, l) = (alpha px / fs) * rho(n, l) * D(l),
    rho(n, l) = sum_m g_m[n] g_m[n - l]            (0 <= n - l, same block)
    D(l) = sum_k exp(j 2pi (k - (K-1)/2) l / N)     (Dirichlet kernel)

and the PSD is ``S(f) = (1/fs) sum_l Rbar(l) exp(-j 2pi f l / fs)``, so that
``df * sum(S)`` is the mean sample power.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import NumericalGuardError
from .moments import moment_weights
from .pa import PaModel, symbol_power
from .spectrum import SpectrumGrid
from .waveform import GfdmConfig, PrototypeFilter

log = logging.getLogger(__name__)

NEGATIVE_CLIP_RTOL = 1e-6


def dirichlet(lags, K: int, N: int) -> np.ndarray:
    """``sum_k exp(j2pi (k-(K-1)/2) l/N)`` in closed form (real-valued)."""
    lags = np.asarray(lags, dtype=float)
    x = np.pi * lags / N
    den = np.sin(x)
    whole = np.isclose(np.mod(lags, N), 0.0) | np.isclose(np.mod(lags, N), N)
    safe = np.where(whole, 1.0, den)
    out = np.sin(K * x) / safe
    # at l = r*N the sum is K * exp(-j pi (K-1) r) = K * (-1)^((K-1) r)
    r = np.rint(lags / N)
    return np.where(whole, K * np.where(np.mod((K - 1) * r, 2) == 0, 1.0, -1.0), out)


def instantaneous_autocorr(cfg: GfdmConfig, filt: PrototypeFilter, n, lags) -> np.ndarray:
    """``R(n, l) = E[y[n] conj(y[n-l])]`` of the concatenated stream.

    Blocks are independent, so the value is zero unless ``n`` and ``n - l``
    fall in the same block; within a block it depends on ``n mod MN`` only.
    """
    n = np.asarray(n)
    lags = np.asarray(lags)
    MN = cfg.block_len
    n, lags = np.broadcast_arrays(n, lags)
    same = np.floor_divide(n, MN) == np.floor_divide(n - lags, MN)
    a, b = np.mod(n, MN), np.mod(n - lags, MN)
    rho = np.einsum("m...,m...->...", filt.gm[:, a], filt.gm[:, b]) / filt.fs
    return np.where(same, cfg.alpha * symbol_power(cfg) * rho * dirichlet(lags, cfg.K, cfg.N), 0.0)


@dataclass
class AutocorrTable:
    """Time-averaged autocorrelation on lags ``0 .. nfft-1`` (in samples).

    Lags at and beyond the block length are exactly zero because blocks are
    independent and every ``g_m`` is confined to one block.
    """

    tau: np.ndarray
    r: np.ndarray
    fs: float

    def hermitian(self) -> np.ndarray:
        """Two-sided sequence in DFT order: ``r[l]`` at ``l``, ``conj(r[l])`` at ``-l``."""
        nfft = self.r.size
        full = self.r.astype(complex).copy()
        pos = np.flatnonzero(self.r[1:]) + 1
        if pos.size and pos[-1] >= nfft - pos[-1]:
            raise ValueError(f"nfft={nfft} too short for lag support {pos[-1] + 1}; need >= 2*MN-1")
        full[nfft - pos] = np.conj(self.r[pos])
        return full

    def transform(self) -> np.ndarray:
        """Raw real spectrum in DFT order, before any clipping."""
        s = np.fft.fft(self.hermitian()) / self.fs
        if np.max(np.abs(s.imag)) > 1e-6 * np.max(np.abs(s)):
            raise NumericalGuardError("PSD transform has a non-negligible imaginary part")
        return s.real

    def to_psd(self, meta: str, info=None) -> SpectrumGrid:
        psd = self.transform()
        peak = np.max(np.abs(psd))
        most_negative = psd.min()
        if most_negative < 0:
            if most_negative < -NEGATIVE_CLIP_RTOL * peak:
                raise NumericalGuardError(
                    f"PSD dips to {most_negative:.3e} (peak {peak:.3e}); beyond the clipping tolerance"
                )
            if most_negative < -1e-12 * peak:
                log.warning("clipping PSD values down to %.3e (peak %.3e) to zero", most_negative, peak)
            psd = np.maximum(psd, 0.0)
        return SpectrumGrid.from_fft_order(psd, self.fs, meta, info)


ENVELOPE_MODES = ("joint", "common")


class LagMoments:
    """Block-averaged envelope moments of the filter bank.

    ``table(s, q1, q2)[l] = (1/MN) sum_{n=l}^{MN-1} rho(n,l)^s h(n)^q1 h(n-l)^q2``
    with ``h(n) = rho(n, 0)`` and ``rho`` already divided by ``fs``.
    ``rho(n, l)`` and ``h(n)`` depend on ``n`` only through ``n mod N``, which
    reduces the sum over block positions to a weighted sum over N residues.
    """

    def __init__(self, cfg: GfdmConfig, filt: PrototypeFilter):
        self.cfg = cfg
        self.filt = filt
        self._cache = {}

    @cached_property
    def _residue_corr(self):
        cfg, gm = self.cfg, self.filt.gm
        MN, N = cfg.block_len, cfg.N
        lags = np.arange(MN)
        rho = np.empty((N, MN))
        for r in range(N):
            rho[r] = gm[:, r] @ gm[:, (r - lags) % MN]
        rho /= self.filt.fs
        res = np.arange(N)[:, None]
        # number of block positions n in [l, MN) with n = r (mod N)
        counts = (cfg.M - np.ceil(np.maximum(lags[None, :] - res, 0) / N)).clip(0, cfg.M)
        h = rho[:, 0]
        h_lagged = h[(res - lags[None, :]) % N]
        return rho, counts, h[:, None], h_lagged

    def table(self, s: int, q1: int = 0, q2: int = 0) -> np.ndarray:
        key = (s, q1, q2)
        if key not in self._cache:
            rho, counts, h, h_lagged = self._residue_corr
            acc = counts * rho**s
            if q1:
                acc = acc * h**q1
            if q2:
                acc = acc * h_lagged**q2
            self._cache[key] = acc.sum(axis=0) / self.cfg.block_len
        return self._cache[key]


class PaSpectrumModel:
    """Analytic PA-output autocorrelation for one (config, filter, PA) triple.

    ``envelope="joint"`` evaluates the Gaussian moment with the instantaneous
    power taken at both instants, ``R(t,0)^(i1-p) R(t-tau,0)^(i2-p)``, which
    is exact for a jointly Gaussian cyclostationary input.  ``envelope="common"``
    uses ``R(t,0)^(i1+i2-2p)`` for both, the form that treats the envelope as
    locally stationary; its lag sequence is not Hermitian, so the Hermitian
    part is kept (the real part of its transform).

    The envelope tables do not depend on ``alpha``, so sweeping the drive
    level only re-weights them.
    """

    def __init__(self, cfg: GfdmConfig, filt: PrototypeFilter, pa: PaModel,
                 envelope: str = "joint", moments: LagMoments = None):
        if envelope not in ENVELOPE_MODES:
            raise ValueError(f"envelope must be one of {ENVELOPE_MODES}")
        self.cfg = cfg
        self.filt = filt
        self.pa = pa
        self.envelope = envelope
        self.moments = moments or LagMoments(cfg, filt)
        self.px = symbol_power(cfg)
        # (p, envelope power at t, envelope power at t - tau) -> sum a a* w_p
        terms = {}
        for i1, a1 in enumerate(pa.coeffs):
            for i2, a2 in enumerate(pa.coeffs):
                for p, w in enumerate(moment_weights(i1, i2).weights):
                    key = (p, i1 - p, i2 - p) if envelope == "joint" else (p, i1 + i2 - 2 * p, 0)
                    terms[key] = terms.get(key, 0j) + a1 * np.conj(a2) * w
        self.terms = {k: v for k, v in terms.items() if v != 0}

    def _lag_sum(self, alpha, D, swap):
        K = float(self.cfg.K)
        base = alpha * self.px
        r = np.zeros(D.size, dtype=complex)
        for (p, q1, q2), coef in self.terms.items():
            if swap:
                q1, q2 = q2, q1
            s = 2 * p + 1
            kern = D ** (p + 1) * np.conj(D) ** p
            r += coef * base ** (s + q1 + q2) * K ** (q1 + q2) * kern * self.moments.table(s, q1, q2)[: D.size]
        return r

    def autocorr(self, alpha: float, nfft: int) -> AutocorrTable:
        cfg = self.cfg
        MN = cfg.block_len
        if nfft < 2 * MN - 1:
            raise ValueError(f"nfft={nfft} must be at least 2*M*N-1={2 * MN - 1}")
        D = dirichlet(np.arange(MN), cfg.K, cfg.N)
        r = self._lag_sum(alpha, D, swap=False)
        if self.envelope == "common":
            # value at -l: the envelope factor moves to t - tau, D(-l) = conj(D(l))
            r_neg = self._lag_sum(alpha, np.conj(D), swap=True)
            r = 0.5 * (r + np.conj(r_neg))
        if not np.all(np.isfinite(r)):
            raise NumericalGuardError("PA-output autocorrelation overflowed")
        full = np.zeros(nfft, dtype=complex)
        full[:MN] = r
        return AutocorrTable(tau=np.arange(nfft) / cfg.fs, r=full, fs=cfg.fs)

    def power(self, alpha: float) -> float:
        """Mean output power, the zero-lag autocorrelation."""
        D0 = dirichlet(np.zeros(1), self.cfg.K, self.cfg.N)
        return float(self._lag_sum(alpha, D0, swap=False)[0].real)

    def psd(self, alpha: float, nfft: int) -> SpectrumGrid:
        return self.autocorr(alpha, nfft).to_psd("analytic-zz", {"alpha": alpha, "envelope": self.envelope})


def avg_autocorr_pa(cfg: GfdmConfig, filt: PrototypeFilter, pa: PaModel, nfft: int,
                    envelope: str = "joint") -> AutocorrTable:
    """Block-averaged PA-output autocorrelation at ``cfg.alpha``."""
    return PaSpectrumModel(cfg, filt, pa, envelope).autocorr(cfg.alpha, nfft)


def psd_pa_output(cfg: GfdmConfig, filt: PrototypeFilter, pa: PaModel, nfft: int,
                  envelope: str = "joint") -> SpectrumGrid:
    """PA-output PSD as the transform of the block-averaged autocorrelation."""
    return PaSpectrumModel(cfg, filt, pa, envelope).psd(cfg.alpha, nfft)


def filter_spectra(filt: PrototypeFilter, freqs_over_fs, nfft: int) -> np.ndarray:
    """``G_m(f_q - f0) = (1/fs) sum_n g_m[n] exp(-j2pi (f_q - f0) n/fs)`` on the
    nfft-point grid, for the frequency offset ``f0 = freqs_over_fs * fs``.

    Pulses longer than ``nfft`` are folded modulo ``nfft`` first, which samples
    the same transform exactly.
    """
    MN = filt.gm.shape[1]
    n = np.arange(MN)
    shifted = filt.gm * np.exp(2j * np.pi * freqs_over_fs * n)
    if MN > nfft:
        pad = -MN % nfft
        shifted = np.pad(shifted, ((0, 0), (0, pad))).reshape(shifted.shape[0], -1, nfft).sum(axis=1)
    return np.fft.fft(shifted, n=nfft, axis=1) / filt.fs


def psd_gfdm(cfg: GfdmConfig, filt: PrototypeFilter, nfft: int = 65536) -> SpectrumGrid:
    """``S_yy(f) = alpha px / (M N) * sum_k S_GG(f - f_k)``, ``S_GG = sum_m |G_m|^2``.

    The subcarrier copies sit at possibly half-bin offsets
    ``f_k = (k - (K-1)/2)/Ts``.  When ``nfft >= 2MN - 1`` the autocorrelation
    of the filter bank fits the transform without wrap-around, and the sum of
    shifted copies is applied exactly as multiplication by the subcarrier
    Dirichlet kernel in the lag domain.  Shorter grids evaluate each
    modulated copy directly.  Neither path ties ``nfft`` to ``N``.
    """
    if nfft < 2:
        raise ValueError("nfft must be >= 2")
    scale = cfg.alpha * symbol_power(cfg) / (cfg.M * cfg.N)
    if nfft >= 2 * cfg.block_len - 1:
        G = np.fft.fft(filt.gm, n=nfft, axis=1) / filt.fs
        sgg = np.sum(G.real**2 + G.imag**2, axis=0)
        lags = np.fft.fftfreq(nfft, 1.0 / nfft)
        r = np.fft.ifft(sgg) * dirichlet(lags, cfg.K, cfg.N)
        total = np.fft.fft(r).real
    else:
        total = np.zeros(nfft)
        for k in range(cfg.K):
            G = filter_spectra(filt, (k - cfg.center) / cfg.N, nfft)
            total += np.sum(G.real**2 + G.imag**2, axis=0)
    psd = np.maximum(scale * total, 0.0)
    return SpectrumGrid.from_fft_order(psd, cfg.fs, "analytic-yy", {"alpha": cfg.alpha})


def gfdm_power(cfg: GfdmConfig) -> float:
    """Mean sample power ``alpha px K / N`` of the GFDM signal."""
    return cfg.alpha * symbol_power(cfg) * cfg.K / cfg.N
