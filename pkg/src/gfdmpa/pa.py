"""Memoryless odd-order polynomial PA: sample-domain model, analytic output
power curve and its critical points (1 dB compression, saturation)."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import bisect

from .errors import NoCompressionPoint, NoSaturationPoint, NumericalGuardError
from .moments import moment_weights
from .waveform import BasebandSignal, GfdmConfig, PrototypeFilter, constellation_power

ONE_DB = 10.0 ** (-0.1)


def to_dbm(watts):
    return 10.0 * np.log10(watts) + 30.0


def from_dbm(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


@dataclass(frozen=True)
class PaModel:
    """Coefficients ``(a1, a3, a5, ...)`` of ``z = sum_i a_{2i+1} |y|^{2i} y``."""

    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coeffs)
        if not coeffs or not any(coeffs):
            raise ValueError("PA model needs at least one nonzero coefficient")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def L(self) -> int:
        return len(self.coeffs) - 1

    @property
    def order(self) -> int:
        return 2 * self.L + 1


FITTED_PA = PaModel((14.9740 + 0.0519j, -23.0954 + 4.9680j, 21.3936 + 0.4305j))
IDENTITY_PA = PaModel((1.0,))


def apply_pa(signal: BasebandSignal, pa: PaModel, bandwidth: Optional[float] = None) -> BasebandSignal:
    """Pointwise ``z[n] = sum_i a_{2i+1} |y[n]|^{2i} y[n]``.

    If ``bandwidth`` (occupied input bandwidth, Hz) is given, warns when the
    sample rate cannot hold the regrown spectrum without aliasing.
    """
    if bandwidth is not None and signal.fs < pa.order * bandwidth:
        warnings.warn(
            f"fs={signal.fs:g} Hz is below (2L+1)*B={pa.order * bandwidth:g} Hz; "
            "the regrown spectrum aliases",
            RuntimeWarning,
            stacklevel=2,
        )
    y = signal.samples
    mag2 = y.real**2 + y.imag**2
    gain = np.full(y.shape, pa.coeffs[-1], dtype=complex)
    for a in reversed(pa.coeffs[:-1]):
        gain *= mag2
        gain += a
    return BasebandSignal(samples=gain * y, fs=signal.fs, frames=signal.frames, block_len=signal.block_len)


class Level(NamedTuple):
    alpha: float
    dbm: float


@dataclass
class PowerCurve:
    """``P_z(alpha) = sum_j A[j] alpha**j`` (``A[0] == 0``), alpha in watts."""

    A: np.ndarray
    alpha_grid: np.ndarray = field(default_factory=lambda: np.empty(0))
    pz: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __call__(self, alpha):
        return np.polynomial.polynomial.polyval(alpha, self.A)

    def derivative(self, alpha):
        return np.polynomial.polynomial.polyval(alpha, np.polynomial.polynomial.polyder(self.A))

    def tabulate(self, alpha_grid) -> "PowerCurve":
        alpha_grid = np.asarray(alpha_grid, dtype=float)
        return PowerCurve(A=self.A, alpha_grid=alpha_grid, pz=self(alpha_grid))


def symbol_power(cfg: GfdmConfig) -> float:
    return constellation_power(cfg.mu)


def pair_weight_sums(pa: PaModel) -> np.ndarray:
    """``W[j] = sum_{i1+i2+1=j} a_{2i1+1} conj(a_{2i2+1}) sum_p w_p`` (complex)."""
    W = np.zeros(2 * pa.L + 2, dtype=complex)
    for i1, a1 in enumerate(pa.coeffs):
        for i2, a2 in enumerate(pa.coeffs):
            W[i1 + i2 + 1] += a1 * np.conj(a2) * sum(moment_weights(i1, i2).weights)
    return W


def compute_Aj(cfg: GfdmConfig, filt: PrototypeFilter, pa: PaModel, rtol: float = 1e-6) -> PowerCurve:
    """Output-power polynomial coefficients in sample-power units.

    ``A_j = (K px/fs)^j * mean_n(h[n]^j) * W_j`` where ``h = sum_m g_m^2`` and
    the block mean is the Riemann sum of the time average over one block.
    """
    h = filt.envelope()
    scale = cfg.K * symbol_power(cfg) / cfg.fs
    W = pair_weight_sums(pa)
    j = np.arange(W.size)
    A = scale**j * np.array([np.mean(h**k) for k in j]) * W
    A[0] = 0.0
    bad = np.abs(A.imag) > rtol * np.abs(A)
    if np.any(bad):
        raise NumericalGuardError(f"A_j imaginary residue too large at j={np.flatnonzero(bad).tolist()}")
    return PowerCurve(A=A.real.copy())


def output_power(curve: PowerCurve, alpha):
    if np.any(np.asarray(alpha) <= 0):
        raise ValueError("alpha must be positive")
    return curve(alpha)


def _root_bounds(coeffs: np.ndarray):
    """Cauchy bounds enclosing the magnitudes of all nonzero roots."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    nz = np.flatnonzero(c)
    lead, low = c[-1], c[nz[0]]
    upper = 1.0 + np.max(np.abs(c[:-1] / lead)) if c.size > 1 else 1.0
    lower = abs(low) / (abs(low) + np.max(np.abs(c[nz[0] + 1:]))) if c.size > nz[0] + 1 else 1.0
    return lower, upper


def _smallest_positive_root(coeffs, n_grid, rtol):
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if c.size < 2 or not np.any(c[1:]):
        return None
    lower, upper = _root_bounds(c)
    grid = np.geomspace(lower / 10.0, 10.0 * upper, n_grid)
    vals = np.polynomial.polynomial.polyval(grid, c)
    hits = np.flatnonzero(vals == 0)
    flips = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)
    candidates = []
    if hits.size:
        candidates.append(grid[hits[0]])
    if flips.size:
        i = flips[0]
        f = lambda a: np.polynomial.polynomial.polyval(a, c)
        candidates.append(bisect(f, grid[i], grid[i + 1], xtol=1e-300, rtol=rtol, maxiter=2000))
    return min(candidates) if candidates else None


def find_saturation(curve: PowerCurve, n_grid: int = 20001, rtol: float = 1e-12) -> Level:
    """Smallest positive root of ``dP_z/dalpha``."""
    root = _smallest_positive_root(np.polynomial.polynomial.polyder(curve.A), n_grid, rtol)
    if root is None:
        raise NoSaturationPoint("no saturation point: dP_z/dalpha has no positive root")
    return Level(float(root), float(to_dbm(root)))


def find_p1db(curve: PowerCurve, n_grid: int = 20001, rtol: float = 1e-12) -> Level:
    """Smallest positive root of ``P_z(alpha) = 10^(-1/10) A_1 alpha``."""
    A = curve.A
    if A.size < 2 or not A[1] > 0:
        raise NoCompressionPoint("no compression point: A_1 must be positive")
    # (P_z - 10^-0.1 A1 alpha) / alpha
    reduced = A[1:].copy()
    reduced[0] *= 1.0 - ONE_DB
    root = _smallest_positive_root(reduced, n_grid, rtol)
    if root is None:
        raise NoCompressionPoint("no compression point: output never falls 1 dB below linear")
    try:
        sat = find_saturation(curve, n_grid, rtol)
    except NoSaturationPoint:
        sat = None
    if sat is not None and root > sat.alpha:
        raise NoCompressionPoint("no compression point before saturation")
    return Level(float(root), float(to_dbm(root)))


@dataclass(frozen=True)
class CompressionReport:
    p1db: Optional[Level]
    psat: Optional[Level]

    @property
    def spread_db(self) -> Optional[float]:
        if self.p1db is None or self.psat is None:
            return None
        return self.psat.dbm - self.p1db.dbm

    def lines(self) -> list:
        out = []
        out.append(
            f"p1db_dBm = {self.p1db.dbm:.12g}" if self.p1db else "p1db_dBm = none (no compression point)"
        )
        out.append(f"psat_dBm = {self.psat.dbm:.12g}" if self.psat else "psat_dBm = none (no saturation point)")
        spread = self.spread_db
        out.append(f"spread_dB = {spread:.12g}" if spread is not None else "spread_dB = none")
        return out


def compression_report(curve: PowerCurve) -> CompressionReport:
    try:
        p1 = find_p1db(curve)
    except NoCompressionPoint:
        p1 = None
    try:
        ps = find_saturation(curve)
    except NoSaturationPoint:
        ps = None
    return CompressionReport(p1db=p1, psat=ps)
