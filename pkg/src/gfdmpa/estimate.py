"""Welch PSD estimation of simulated baseband streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import get_window, welch

from .spectrum import SpectrumGrid
from .waveform import BasebandSignal

WINDOWS = {"hann": "hann", "rectangular": "boxcar"}


@dataclass(frozen=True)
class WelchConfig:
    nfft: int = 65536
    overlap: float = 0.5
    window: str = "hann"

    def __post_init__(self):
        if self.nfft < 64 or self.nfft & (self.nfft - 1):
            raise ValueError(f"nfft must be a power of two >= 64, got {self.nfft}")
        if not 0.0 <= self.overlap < 1.0:
            raise ValueError(f"overlap must lie in [0, 1), got {self.overlap}")
        if abs(self.overlap * self.nfft - round(self.overlap * self.nfft)) > 1e-9:
            raise ValueError(f"overlap*nfft must be an integer, got {self.overlap * self.nfft}")
        if self.window not in WINDOWS:
            raise ValueError(f"window must be one of {tuple(WINDOWS)}, got {self.window!r}")

    @property
    def hop(self) -> int:
        return self.nfft - int(round(self.overlap * self.nfft))


def segment_count(n_samples: int, wc: WelchConfig) -> int:
    if n_samples < wc.nfft:
        return 0
    return (n_samples - wc.nfft) // wc.hop + 1


def estimate_psd(signal: BasebandSignal, wc: WelchConfig = WelchConfig(), chunk_segments: int = 256) -> SpectrumGrid:
    """Two-sided Welch density estimate in power per Hz.

    Long streams are processed in runs of ``chunk_segments`` segments whose
    boundaries fall on the hop grid, so the result equals a single Welch call
    over the whole stream while memory stays bounded.
    """
    x = np.asarray(signal.samples)
    total = segment_count(x.size, wc)
    if total == 0:
        raise ValueError(f"signal of {x.size} samples is shorter than nfft={wc.nfft}")
    win = get_window(WINDOWS[wc.window], wc.nfft)
    noverlap = wc.nfft - wc.hop
    acc = np.zeros(wc.nfft)
    for first in range(0, total, chunk_segments):
        n_seg = min(chunk_segments, total - first)
        start = first * wc.hop
        stop = start + (n_seg - 1) * wc.hop + wc.nfft
        _, p = welch(
            x[start:stop], fs=signal.fs, window=win, nperseg=wc.nfft, noverlap=noverlap,
            nfft=wc.nfft, detrend=False, return_onesided=False, scaling="density",
        )
        acc += n_seg * p
    psd = acc / total
    return SpectrumGrid.from_fft_order(
        psd, signal.fs, "estimated", {"segments": total, "window": wc.window, "overlap": wc.overlap}
    )
