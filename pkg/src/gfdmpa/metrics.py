"""Adjacent-channel and out-of-band metrics and their sweeps over drive level."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .analytic import PaSpectrumModel, psd_gfdm
from .estimate import WelchConfig, estimate_psd
from .pa import PaModel, apply_pa, compute_Aj, to_dbm
from .spectrum import Band, SpectrumGrid, integrate_band, oob_ratio
from .waveform import (GfdmConfig, PrototypeFilter, build_prototype_filter,
                       concatenate_frames, ofdm_config)

METRIC_KINDS = ("acp", "acpr", "pz", "oob")
ROUTES = ("analytic", "simulated")


def default_bands(cfg: GfdmConfig):
    """Main band ``[-B1, B1]`` with ``B1 = K/(2 Ts)`` and upper adjacent band ``[B1, 5 B1]``."""
    b1 = cfg.K / (2.0 * cfg.Ts)
    return Band(-b1, b1), Band(b1, 5.0 * b1)


def analytic_nfft(cfg: GfdmConfig, minimum: int = 65536) -> int:
    """Smallest power of two that is at least ``minimum`` and holds every lag."""
    need = max(minimum, 2 * cfg.block_len)
    return 1 << (need - 1).bit_length()


@dataclass(frozen=True)
class AcpValue:
    linear: float

    @property
    def dbm(self) -> float:
        return float(to_dbm(self.linear)) if self.linear > 0 else -math.inf


def acp(spec: SpectrumGrid, adj: Band) -> AcpValue:
    """Power in the adjacent band."""
    return AcpValue(integrate_band(spec, adj))


def acpr(spec: SpectrumGrid, main: Band, adj: Band) -> float:
    """Adjacent-to-main band power ratio in dB."""
    if main.overlaps(adj):
        raise ValueError("main and adjacent bands overlap")
    p_main = integrate_band(spec, main)
    if p_main <= 0:
        raise ValueError("zero main-band power")
    p_adj = integrate_band(spec, adj)
    return 10.0 * math.log10(p_adj / p_main) if p_adj > 0 else -math.inf


@dataclass
class SweepResult:
    alpha_dbm: np.ndarray
    values: np.ndarray
    metric_kind: str
    label: str
    spectra: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.alpha_dbm = np.asarray(self.alpha_dbm, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.metric_kind not in METRIC_KINDS:
            raise ValueError(f"metric_kind must be one of {METRIC_KINDS}")
        if np.any(np.diff(self.alpha_dbm) <= 0):
            raise ValueError("alpha levels must be strictly increasing")


def _metric(kind, spec, main, adj):
    if kind == "acp":
        return acp(spec, adj).dbm
    if kind == "acpr":
        return acpr(spec, main, adj)
    if kind == "oob":
        return oob_ratio(spec, main, adj)
    raise ValueError(kind)


def sweep(
    metric_kind: str,
    cfg: GfdmConfig,
    filt: Optional[PrototypeFilter],
    pa: PaModel,
    alpha_list: Sequence[float],
    route: str = "analytic",
    *,
    bands=None,
    n_frames: int = 1000,
    welch: WelchConfig = WelchConfig(),
    base_seed: int = 0,
    nfft: Optional[int] = None,
    label: Optional[str] = None,
    keep_spectra: bool = False,
) -> SweepResult:
    """Evaluate a metric at each drive level ``alpha`` (watts, ascending).

    ``pz`` gives the mean PA output power in dBm; ``acp`` the adjacent-band
    power in dBm; ``acpr`` and ``oob`` are ratios in dB.  The simulated route
    draws a fresh stream per level with seed ``(base_seed, index)``.
    """
    if metric_kind not in METRIC_KINDS:
        raise ValueError(f"metric_kind must be one of {METRIC_KINDS}")
    if route not in ROUTES:
        raise ValueError(f"route must be one of {ROUTES}")
    alphas = np.asarray(alpha_list, dtype=float)
    if np.any(alphas <= 0) or np.any(np.diff(alphas) <= 0):
        raise ValueError("alpha_list must be positive and strictly increasing")
    filt = filt if filt is not None else build_prototype_filter(cfg)
    main, adj = bands if bands is not None else default_bands(cfg)
    label = label or f"{'OFDM' if cfg.M == 1 and cfg.filter_kind == 'rectangular' else 'GFDM'} M={cfg.M} {route}"

    values, spectra = [], []
    if route == "analytic":
        if metric_kind == "pz":
            curve = compute_Aj(cfg, filt, pa)
            values = list(to_dbm(curve(alphas)))
        else:
            model = PaSpectrumModel(cfg, filt, pa)
            n = nfft or analytic_nfft(cfg)
            for a in alphas:
                spec = model.psd(a, n)
                values.append(_metric(metric_kind, spec, main, adj))
                if keep_spectra:
                    spectra.append(spec)
    else:
        for i, a in enumerate(alphas):
            c = cfg.replace(alpha=float(a))
            z = apply_pa(concatenate_frames(c, filt, n_frames, (base_seed, i)), pa)
            if metric_kind == "pz":
                values.append(float(to_dbm(z.mean_power())))
                continue
            spec = estimate_psd(z, welch)
            values.append(_metric(metric_kind, spec, main, adj))
            if keep_spectra:
                spectra.append(spec)
    return SweepResult(to_dbm(alphas), values, metric_kind, label, spectra)


def ofdm_sweep(metric_kind: str, cfg: GfdmConfig, pa: PaModel, alpha_list, route: str = "analytic",
               **kwargs) -> SweepResult:
    """The same sweep for CP-free OFDM sharing ``K, N, Ts, mu`` with ``cfg``.

    The simulated stream keeps the sample count of ``n_frames`` GFDM blocks.
    """
    ocfg = ofdm_config(cfg)
    kwargs["n_frames"] = kwargs.get("n_frames", 1000) * cfg.M
    kwargs.setdefault("label", f"OFDM {route}")
    return sweep(metric_kind, ocfg, build_prototype_filter(ocfg), pa, alpha_list, route, **kwargs)


def oob_vs_subsymbols(
    cfg: GfdmConfig,
    m_list: Sequence[int],
    route: str = "analytic",
    *,
    bands=None,
    n_frames: int = 1000,
    welch: WelchConfig = WelchConfig(),
    base_seed: int = 0,
    nfft: int = 65536,
) -> np.ndarray:
    """OOB ratio (dB) of the undistorted GFDM signal for each subsymbol count."""
    if route not in ROUTES:
        raise ValueError(f"route must be one of {ROUTES}")
    out = []
    for i, M in enumerate(m_list):
        c = cfg.replace(M=int(M))
        filt = build_prototype_filter(c)
        main, adj = bands if bands is not None else default_bands(c)
        if route == "analytic":
            spec = psd_gfdm(c, filt, nfft)
        else:
            spec = estimate_psd(concatenate_frames(c, filt, n_frames, (base_seed, i)), welch)
        out.append(oob_ratio(spec, main, adj))
    return np.asarray(out)

