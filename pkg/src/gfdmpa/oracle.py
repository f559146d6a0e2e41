"""Small-instance PA-output PSD built literally in the frequency domain.

For each ``(i1, i2, p)`` term the spectrum is a product of two nested
convolutions of filter spectra, summed over all filter-index tuples, then
convolved with the comb of subcarrier combination frequencies.  It shares no
code path with :mod:`gfdmpa.analytic` beyond the moment weights and is only
feasible for a handful of subcarriers and subsymbols.
"""

from __future__ import annotations

import itertools
from collections import Counter

import numpy as np

from .moments import moment_weights
from .pa import PaModel, symbol_power
from .spectrum import SpectrumGrid
from .waveform import GfdmConfig, PrototypeFilter

MAX_K, MAX_M, MAX_L, MAX_NFFT = 3, 2, 1, 4096


def _circular_convolve(x, y, df):
    """``df * sum_r x[r] y[q - r]`` on the periodic frequency grid."""
    n = x.size
    lin = np.convolve(x, y)
    out = lin[:n].copy()
    out[: n - 1] += lin[n:]
    return df * out


def comb_offsets(K: int, p: int) -> Counter:
    """Multiplicities of ``sum_{p+1} k - sum_p k' - (K-1)/2`` (units of 1/Ts)."""
    offsets = Counter()
    for ks in itertools.product(range(K), repeat=p + 1):
        for kps in itertools.product(range(K), repeat=p):
            offsets[sum(ks) - sum(kps) - (K - 1) / 2] += 1
    return offsets


def psd_pa_output_convolution_oracle(
    cfg: GfdmConfig, filt: PrototypeFilter, pa: PaModel, nfft: int, envelope: str = "joint"
) -> SpectrumGrid:
    """Same quantity as :func:`gfdmpa.analytic.psd_pa_output`.

    With ``envelope="joint"`` the ``i1-p`` envelope factors ``|g_m(t)|^2`` enter
    the first convolution and the ``i2-p`` factors ``|g_m(t-tau)|^2`` the second.
    With ``envelope="common"`` all ``i1+i2-2p`` enter the first and the real
    part of the (then non-Hermitian) result is kept.
    """
    if envelope not in ("joint", "common"):
        raise ValueError("envelope must be 'joint' or 'common'")
    if cfg.K > MAX_K or cfg.M > MAX_M or pa.L > MAX_L or nfft > MAX_NFFT:
        raise ValueError(
            f"instance too large for the convolution oracle "
            f"(K<={MAX_K}, M<={MAX_M}, L<={MAX_L}, nfft<={MAX_NFFT})"
        )
    MN = cfg.block_len
    if nfft < 2 * MN:
        raise ValueError("nfft must be at least 2*M*N")
    # comb lines sit at half-integer multiples of 1/Ts when K is even
    line_step = cfg.N * (2 if cfg.K % 2 == 0 else 1)
    if nfft % line_step:
        raise ValueError(f"nfft must be a multiple of {line_step} so every comb line lands on a bin")
    bins_per_carrier = nfft // cfg.N

    fs = cfg.fs
    df = fs / nfft
    alpha = cfg.alpha / fs  # continuous-time drive level equivalent to the sample calibration
    px = symbol_power(cfg)
    G = np.fft.fft(filt.gm, n=nfft, axis=1) / fs            # G_m(f)
    Gc = np.conj(G)                                         # G*_m(f)
    neg = (-np.arange(nfft)) % nfft
    Gr = G[:, neg]                                          # G_m(-f)
    Gcr = Gc[:, neg]                                        # G*_m(-f)

    def conv_all(factors):
        acc = factors[0]
        for fac in factors[1:]:
            acc = _circular_convolve(acc, fac, df)
        return acc

    M = cfg.M
    total = np.zeros(nfft, dtype=complex)
    for i1, a1 in enumerate(pa.coeffs):
        for i2, a2 in enumerate(pa.coeffs):
            for p, w in enumerate(moment_weights(i1, i2).weights):
                q1, q2 = (i1 - p, i2 - p) if envelope == "joint" else (i1 + i2 - 2 * p, 0)
                T = w * (alpha * px) ** (i1 + i2 + 1) * float(cfg.K) ** (q1 + q2) / (M * cfg.Ts)
                P = np.zeros(nfft, dtype=complex)
                for ms in itertools.product(range(M), repeat=p + 1):
                    for mps in itertools.product(range(M), repeat=p):
                        for m_lag in itertools.product(range(M), repeat=q2):
                            second = conv_all(
                                [Gc[m] for m in ms] + [Gr[m] for m in mps]
                                + [Gr[m] for m in m_lag] + [Gc[m] for m in m_lag]
                            )
                            for m_lead in itertools.product(range(M), repeat=q1):
                                first = conv_all(
                                    [G[m] for m in ms]
                                    + [Gcr[m] for m in mps]
                                    + [Gcr[m] for m in m_lead]
                                    + [G[m] for m in m_lead]
                                )
                                P += first * second
                for offset, count in comb_offsets(cfg.K, p).items():
                    total += a1 * np.conj(a2) * T * count * np.roll(P, int(round(offset * bins_per_carrier)))
    return SpectrumGrid.from_fft_order(total.real, fs, "analytic-zz", {"alpha": cfg.alpha, "route": "convolution", "envelope": envelope})
