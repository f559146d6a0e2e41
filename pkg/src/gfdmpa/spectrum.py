"""Frequency-grid containers and band integration shared by the analytic and
estimated spectra."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

PROVENANCE_TAGS = ("analytic-yy", "analytic-zz", "estimated")


@dataclass(frozen=True)
class Band:
    """Closed frequency interval ``[f_lo, f_hi]`` in Hz."""

    f_lo: float
    f_hi: float

    def __post_init__(self):
        if not self.f_lo < self.f_hi:
            raise ValueError(f"empty or inverted band [{self.f_lo}, {self.f_hi}]")

    @property
    def width(self) -> float:
        return self.f_hi - self.f_lo

    def overlaps(self, other: "Band") -> bool:
        return self.f_lo < other.f_hi and other.f_lo < self.f_hi


@dataclass
class SpectrumGrid:
    """Two-sided PSD sampled on the centered grid ``f = (q - nfft/2) * fs/nfft``.

    ``psd`` is in power per Hz, with power measured as the mean squared
    magnitude of the complex baseband samples, so that ``df * psd.sum()`` is
    the average sample power.
    """

    f: np.ndarray
    psd: np.ndarray
    meta: str
    fs: float
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.meta not in PROVENANCE_TAGS:
            raise ValueError(f"unknown provenance tag {self.meta!r}")
        if self.f.shape != self.psd.shape:
            raise ValueError("frequency and psd arrays differ in shape")

    @classmethod
    def from_fft_order(cls, values, fs, meta, info=None):
        """Build a grid from DFT-ordered bins (bin 0 at DC)."""
        values = np.asarray(values, dtype=float)
        nfft = values.size
        f = (np.arange(nfft) - nfft // 2) * (fs / nfft)
        return cls(f=f, psd=np.fft.fftshift(values), meta=meta, fs=fs, info=dict(info or {}))

    @property
    def nfft(self) -> int:
        return self.f.size

    @property
    def df(self) -> float:
        return self.fs / self.nfft

    def total_power(self) -> float:
        return float(self.df * self.psd.sum())

    def db(self, floor: float = 1e-300) -> np.ndarray:
        return 10.0 * np.log10(np.maximum(self.psd, floor))


def integrate_band(spec: SpectrumGrid, band: Band) -> float:
    """Trapezoidal integral of ``spec.psd`` over ``band``.

    The grid is treated as one period of a periodic spectrum, so a band may
    reach up to ``+fs/2`` (the bin at ``-fs/2`` closes the period).
    """
    half = spec.fs / 2
    if band.f_lo < -half - 1e-9 * spec.fs or band.f_hi > half + 1e-9 * spec.fs:
        raise ValueError(f"band [{band.f_lo}, {band.f_hi}] outside grid span [-{half}, {half}]")
    f = np.append(spec.f, spec.f[0] + spec.fs)
    s = np.append(spec.psd, spec.psd[0])
    lo = max(band.f_lo, f[0])
    hi = min(band.f_hi, f[-1])
    inner = (f > lo) & (f < hi)
    xs = np.concatenate(([lo], f[inner], [hi]))
    ys = np.concatenate(([np.interp(lo, f, s)], s[inner], [np.interp(hi, f, s)]))
    return float(np.trapezoid(ys, xs))


def oob_ratio(spec: SpectrumGrid, in_band: Band, out_band: Band) -> float:
    """Width-normalized out-of-band to in-band energy ratio in dB.

    Returns ``-inf`` when the out-of-band energy is exactly zero.
    """
    if in_band.overlaps(out_band):
        raise ValueError("in-band and out-of-band intervals overlap")
    p_in = integrate_band(spec, in_band)
    p_out = integrate_band(spec, out_band)
    if p_in <= 0:
        raise ValueError("zero in-band energy")
    if p_out <= 0:
        return -math.inf
    return 10.0 * math.log10(in_band.width / out_band.width * p_out / p_in)
