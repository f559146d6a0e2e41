"""GFDM (and degenerate-OFDM) baseband waveform generation.

Sample amplitudes follow one calibration throughout the package: the
prototype pulse ``g`` has unit energy in continuous time,
``(1/fs) * sum(g**2) == 1``, and the modulator scales it by ``1/sqrt(fs)``.
The resulting sample power is ``mean|y|^2 = alpha * px_bar * K / N`` with
``alpha`` expressed in watts, so input levels in dBm are
``10*log10(alpha) + 30``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError

FILTER_KINDS = ("raised-cosine", "rectangular")


@dataclass(frozen=True)
class GfdmConfig:
    """Modulation parameters.  Defaults reproduce the reference setup
    (16-QAM, K=64, M=5, N=320, 30 kHz spacing, roll-off 0.3)."""

    K: int = 64
    M: int = 5
    N: int = 320
    Ts: float = 1.0 / 30e3
    mu: int = 4
    alpha: float = 1.0
    rolloff: float = 0.3
    filter_kind: str = "raised-cosine"

    def __post_init__(self):
        for name in ("K", "M", "N", "mu"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if not self.Ts > 0:
            raise ConfigError(f"Ts must be positive, got {self.Ts!r}")
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha!r}")
        if not 0.0 <= self.rolloff <= 1.0:
            raise ConfigError(f"rolloff must lie in [0, 1], got {self.rolloff!r}")
        if self.filter_kind not in FILTER_KINDS:
            raise ConfigError(f"filter_kind must be one of {FILTER_KINDS}, got {self.filter_kind!r}")
        if self.K > self.N:
            raise ConfigError(f"signal bandwidth K/Ts exceeds fs=N/Ts (K={self.K}, N={self.N})")

    @property
    def fs(self) -> float:
        return self.N / self.Ts

    @property
    def block_len(self) -> int:
        return self.M * self.N

    @property
    def block_duration(self) -> float:
        return self.M * self.Ts

    @property
    def bandwidth(self) -> float:
        return self.K / self.Ts

    @property
    def center(self) -> float:
        """Subcarrier index offset (K-1)/2 that centers the band on DC."""
        return (self.K - 1) / 2

    def replace(self, **changes) -> "GfdmConfig":
        return dataclasses.replace(self, **changes)


def ofdm_config(cfg: GfdmConfig) -> GfdmConfig:
    """Degenerate GFDM equal to CP-free OFDM: one subsymbol, rectangular pulse."""
    return cfg.replace(M=1, filter_kind="rectangular")


@dataclass(frozen=True)
class PrototypeFilter:
    g: np.ndarray
    gm: np.ndarray
    fs: float

    @property
    def M(self) -> int:
        return self.gm.shape[0]

    def energy(self) -> np.ndarray:
        """Continuous-time energy of every circular shift."""
        return np.sum(self.gm**2, axis=1) / self.fs

    def envelope(self) -> np.ndarray:
        """``sum_m g_m[n]**2``, the instantaneous power profile of a block."""
        return np.sum(self.gm**2, axis=0)


def raised_cosine(t, Ts, rolloff):
    """Infinite raised-cosine impulse response with unit peak."""
    t = np.asarray(t, dtype=float)
    x = t / Ts
    if rolloff == 0:
        return np.sinc(x)
    denom = 1.0 - (2.0 * rolloff * x) ** 2
    singular = np.isclose(denom, 0.0, atol=1e-12)
    safe = np.where(singular, 1.0, denom)
    out = np.sinc(x) * np.cos(np.pi * rolloff * x) / safe
    return np.where(singular, np.pi / 4 * np.sinc(1.0 / (2.0 * rolloff)), out)


def build_prototype_filter(cfg: GfdmConfig) -> PrototypeFilter:
    """Causal length-MN pulse and its M circular shifts by N samples.

    The raised-cosine pulse is truncated to ``[-M*Ts/2, M*Ts/2)`` and delayed
    by ``M*Ts/2``; the rectangular pulse spans one symbol centered in the block.
    """
    MN = cfg.block_len
    if MN < 2:
        raise ConfigError("block length M*N must be at least 2")
    if not 0.0 <= cfg.rolloff <= 1.0:
        raise ConfigError(f"rolloff must lie in [0, 1], got {cfg.rolloff!r}")
    fs = cfg.fs
    n = np.arange(MN)
    if cfg.filter_kind == "raised-cosine":
        g = raised_cosine(n / fs - cfg.block_duration / 2, cfg.Ts, cfg.rolloff)
    else:
        start = (MN - cfg.N) // 2
        g = ((n >= start) & (n < start + cfg.N)).astype(float)
    g = g / np.sqrt(np.sum(g**2) / fs)
    gm = np.stack([np.roll(g, m * cfg.N) for m in range(cfg.M)])
    g.setflags(write=False)
    gm.setflags(write=False)
    return PrototypeFilter(g=g, gm=gm, fs=fs)


def square_qam_power(mu: int) -> float:
    """Closed-form mean power of a square QAM alphabet with odd-integer levels."""
    return 2.0 * (2**mu - 1) / 3.0


def qam_constellation(mu: int) -> np.ndarray:
    """QAM alphabet of ``2**mu`` points on the odd-integer lattice.

    Even ``mu`` gives the square constellation.  Odd ``mu`` gives BPSK (1),
    rectangular 8-QAM (3) or the standard cross constellations (>=5).
    """
    if mu < 1:
        raise ConfigError("mu must be >= 1")
    if mu % 2 == 0:
        side = 2 ** (mu // 2)
        levels = np.arange(-side + 1, side, 2)
        pts = levels[:, None] + 1j * levels[None, :]
    elif mu == 1:
        return np.array([-1.0 + 0j, 1.0 + 0j])
    elif mu == 3:
        pts = np.arange(-3, 4, 2)[:, None] + 1j * np.array([-1, 1])[None, :]
    else:
        side = 3 * 2 ** ((mu - 3) // 2)
        corner = 2 ** ((mu - 5) // 2)
        levels = np.arange(-side + 1, side, 2)
        idx = np.arange(side)
        in_corner = (np.minimum(idx, side - 1 - idx) < corner)
        keep = ~(in_corner[:, None] & in_corner[None, :])
        pts = (levels[:, None] + 1j * levels[None, :])[keep]
    return np.sort_complex(pts.ravel())


def constellation_power(mu: int) -> float:
    """Mean power of :func:`qam_constellation` (exact for integer lattices)."""
    c = qam_constellation(mu)
    return float(np.mean(c.real**2 + c.imag**2))


@dataclass(frozen=True)
class SymbolBlock:
    x: np.ndarray
    px_bar: float


def draw_symbol_block(cfg: GfdmConfig, rng_seed) -> SymbolBlock:
    """K x M i.i.d. symbols drawn uniformly from the QAM alphabet."""
    const = qam_constellation(cfg.mu)
    rng = np.random.default_rng(rng_seed)
    x = const[rng.integers(0, const.size, size=(cfg.K, cfg.M))]
    return SymbolBlock(x=x, px_bar=constellation_power(cfg.mu))


@dataclass
class BasebandSignal:
    samples: np.ndarray
    fs: float
    frames: int
    block_len: int

    def __post_init__(self):
        if self.samples.size != self.frames * self.block_len:
            raise ValueError("sample count does not equal frames * block_len")

    def mean_power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))

    def to_file(self, path) -> None:
        """Interleaved little-endian float64 I/Q after a one-line text header."""
        header = f"fs={self.fs!r} frames={self.frames} block_len={self.block_len}\n"
        iq = np.empty(2 * self.samples.size, dtype="<f8")
        iq[0::2] = self.samples.real
        iq[1::2] = self.samples.imag
        with open(path, "wb") as fh:
            fh.write(header.encode("ascii"))
            fh.write(iq.tobytes())

    @classmethod
    def from_file(cls, path) -> "BasebandSignal":
        raw = Path(path).read_bytes()
        head, _, body = raw.partition(b"\n")
        fields = dict(item.split("=", 1) for item in head.decode("ascii").split())
        iq = np.frombuffer(body, dtype="<f8")
        return cls(
            samples=iq[0::2] + 1j * iq[1::2],
            fs=float(fields["fs"]),
            frames=int(fields["frames"]),
            block_len=int(fields["block_len"]),
        )


def _modulate_frames(x: np.ndarray, filt: PrototypeFilter, cfg: GfdmConfig) -> np.ndarray:
    """Modulate a stack of symbol blocks, ``x`` shaped (F, K, M) -> (F, MN)."""
    F, K, M = x.shape
    N = cfg.N
    if K != cfg.K or M != cfg.M or filt.gm.shape != (cfg.M, cfg.block_len):
        raise ValueError(
            f"dimension mismatch: symbols {x.shape[1:]}, filter {filt.gm.shape}, "
            f"config K={cfg.K} M={cfg.M} MN={cfg.block_len}"
        )
    # sum_k x[k, m] exp(j2pi k n/N) is N-periodic in n; evaluate one period per m.
    carriers = np.fft.ifft(x, n=N, axis=1) * N  # (F, N, M)
    shaped = np.zeros((F, M, N), dtype=complex)
    for m in range(M):
        shaped += filt.gm[m].reshape(M, N)[None, :, :] * carriers[:, None, :, m]
    n = np.arange(cfg.block_len)
    offset = np.exp(-2j * np.pi * cfg.center * n / N)
    return np.sqrt(cfg.alpha / cfg.fs) * shaped.reshape(F, -1) * offset


def modulate_gfdm_block(block: SymbolBlock, filt: PrototypeFilter, cfg: GfdmConfig) -> BasebandSignal:
    """One GFDM block:
    ``y[n] = sqrt(alpha/fs) sum_k sum_m x[k,m] g_m[n] exp(j2pi (k-(K-1)/2) n/N)``.
    """
    x = np.asarray(block.x)
    if x.shape != (cfg.K, cfg.M):
        raise ValueError(f"symbol block shape {x.shape} does not match (K, M)=({cfg.K}, {cfg.M})")
    y = _modulate_frames(x[None], filt, cfg)[0]
    return BasebandSignal(samples=y, fs=cfg.fs, frames=1, block_len=cfg.block_len)


def _seed_tuple(rng_seed) -> tuple:
    return tuple(int(s) for s in np.atleast_1d(rng_seed))


def concatenate_frames(
    cfg: GfdmConfig, filt: PrototypeFilter, n_frames: int, rng_seed, batch: int = 128
) -> BasebandSignal:
    """Back-to-back independent blocks without cyclic prefix.

    Frame ``i`` draws its symbols from the seed ``(*rng_seed, i)``, so any
    partition of the frame range reproduces the same stream.  ``rng_seed`` is
    a nonnegative integer or a tuple of them.
    """
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    seed = _seed_tuple(rng_seed)
    out = np.empty((n_frames, cfg.block_len), dtype=complex)
    for start in range(0, n_frames, batch):
        stop = min(start + batch, n_frames)
        x = np.stack([draw_symbol_block(cfg, seed + (i,)).x for i in range(start, stop)])
        out[start:stop] = _modulate_frames(x, filt, cfg)
    return BasebandSignal(samples=out.ravel(), fs=cfg.fs, frames=n_frames, block_len=cfg.block_len)


def modulate_ofdm(cfg: GfdmConfig, n_frames: int, rng_seed) -> BasebandSignal:
    """CP-free OFDM with the same K, N, Ts, mu and alpha as ``cfg``."""
    ocfg = ofdm_config(cfg)
    return concatenate_frames(ocfg, build_prototype_filter(ocfg), n_frames, rng_seed)
