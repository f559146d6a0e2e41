"""Run configuration: a line-oriented ``section.key = value`` text format.

Every key has a default reproducing the reference setup, unknown keys are
errors, and ``GFDMPA_<SECTION>_<KEY>`` environment variables override the
file.  The resolved configuration has a canonical text form whose hash is
stamped into every output file.
"""

from __future__ import annotations

import hashlib
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Mapping, Optional, Tuple

import numpy as np

from .errors import ConfigError
from .estimate import WINDOWS, WelchConfig
from .pa import FITTED_PA, PaModel, from_dbm
from .waveform import FILTER_KINDS, GfdmConfig

ENV_PREFIX = "GFDMPA_"


def parse_number_list(text: str, kind: Callable = float) -> Tuple:
    """``"5"``, ``"5, 9, 13"`` or an inclusive range ``"1..40"`` / ``"0..20:0.5"``."""
    text = text.strip()
    m = re.fullmatch(r"([-+0-9.eE]+)\s*\.\.\s*([-+0-9.eE]+)(?:\s*:\s*([-+0-9.eE]+))?", text)
    try:
        if m:
            lo, hi = float(m.group(1)), float(m.group(2))
            step = float(m.group(3)) if m.group(3) else 1.0
            if step <= 0 or hi < lo:
                raise ValueError
            count = int(np.floor((hi - lo) / step + 1e-9)) + 1
            values = [lo + i * step for i in range(count)]
        else:
            values = [float(v) for v in text.split(",") if v.strip()]
        if not values:
            raise ValueError
        if kind is int:
            if any(v != int(v) for v in values):
                raise ValueError
            return tuple(int(v) for v in values)
        return tuple(round(v, 12) for v in values)
    except ValueError:
        raise ConfigError(f"cannot parse number list {text!r}") from None


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise ValueError
    return v


def _choice(options):
    def parse(text):
        if text not in options:
            raise ValueError
        return text
    return parse


def _bool(text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError


# key -> (parser, default)
_FIELDS: Dict[str, Tuple[Callable, object]] = {
    "modulation.K": (_positive_int, 64),
    "modulation.M": (_positive_int, 5),
    "modulation.N": (_positive_int, 320),
    "modulation.Ts": (float, 1.0 / 30e3),
    "modulation.mu": (_positive_int, 4),
    "modulation.rolloff": (float, 0.3),
    "modulation.filter": (_choice(FILTER_KINDS), "raised-cosine"),
    "modulation.alpha_dbm": (float, 5.0),
    "pa.a1": (complex, FITTED_PA.coeffs[0]),
    "pa.a3": (complex, FITTED_PA.coeffs[1]),
    "pa.a5": (complex, FITTED_PA.coeffs[2]),
    "estimator.nfft": (_positive_int, 65536),
    "estimator.overlap": (float, 0.5),
    "estimator.window": (_choice(tuple(WINDOWS)), "hann"),
    "estimator.frames": (_positive_int, 1000),
    "analytic.nfft": (_positive_int, 65536),
    "analytic.envelope": (_choice(("joint", "common")), "joint"),
    "sweep.alpha_dbm": (parse_number_list, parse_number_list("0..22:0.5")),
    "sweep.subsymbols": (lambda t: parse_number_list(t, int), (5, 10, 15, 25, 35)),
    "sweep.metrics": (lambda t: tuple(s.strip() for s in t.split(",") if s.strip()), ("acp", "acpr")),
    "sweep.b1_hz": (float, 0.0),
    "sweep.adj_factor": (float, 5.0),
    "io.out": (str, "out"),
    "io.seed": (int, 0),
    "io.compare_ofdm": (_bool, False),
}
_PA_KEY = re.compile(r"pa\.a(\d+)$")


def _format(value) -> str:
    if isinstance(value, tuple):
        return ",".join(_format(v) for v in value)
    if isinstance(value, complex):
        sign = "-" if np.signbit(value.imag) else "+"
        return f"{value.real!r}{sign}{abs(value.imag)!r}j"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class RunConfig:
    values: Mapping[str, object]

    def __getitem__(self, key):
        return self.values[key]

    @property
    def modulation(self) -> GfdmConfig:
        v = self.values
        return GfdmConfig(
            K=v["modulation.K"], M=v["modulation.M"], N=v["modulation.N"], Ts=v["modulation.Ts"],
            mu=v["modulation.mu"], alpha=float(from_dbm(v["modulation.alpha_dbm"])),
            rolloff=v["modulation.rolloff"], filter_kind=v["modulation.filter"],
        )

    @property
    def pa(self) -> PaModel:
        orders = sorted(int(_PA_KEY.match(k).group(1)) for k in self.values if _PA_KEY.match(k))
        coeffs = [0j] * ((orders[-1] + 1) // 2)
        for o in orders:
            coeffs[(o - 1) // 2] = self.values[f"pa.a{o}"]
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        return PaModel(tuple(coeffs))

    @property
    def welch(self) -> WelchConfig:
        v = self.values
        return WelchConfig(nfft=v["estimator.nfft"], overlap=v["estimator.overlap"], window=v["estimator.window"])

    def canonical(self) -> str:
        """Sorted ``key = value`` lines; the output location is not part of it."""
        return "".join(f"{k} = {_format(self.values[k])}\n" for k in sorted(self.values) if k != "io.out")

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def with_overrides(self, **changes) -> "RunConfig":
        merged = dict(self.values)
        for key, value in changes.items():
            if key not in merged:
                raise ConfigError(f"unknown key {key!r}")
            merged[key] = value
        return _validated(merged)


def _parse_value(key: str, text: str, where: str):
    if key in _FIELDS:
        parser = _FIELDS[key][0]
    elif _PA_KEY.match(key):
        order = int(_PA_KEY.match(key).group(1))
        if order % 2 == 0:
            raise ConfigError(f"{where}: PA coefficient {key} must have odd order")
        parser = complex
    else:
        raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        return parser(text.strip().replace(" ", "") if parser is complex else text.strip())
    except ConfigError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    except (ValueError, TypeError):
        raise ConfigError(f"{where}: invalid value {text.strip()!r} for {key}") from None


def _validated(values: dict) -> RunConfig:
    cfg = RunConfig(dict(values))
    for name, build in (("modulation", lambda: cfg.modulation), ("pa", lambda: cfg.pa),
                        ("estimator", lambda: cfg.welch)):
        try:
            build()
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"invalid {name} section: {exc}") from None
    unknown = [m for m in cfg["sweep.metrics"] if m not in ("acp", "acpr", "oob", "pz")]
    if unknown:
        raise ConfigError(f"unknown metric(s) {unknown}")
    return cfg


def default_config() -> RunConfig:
    return _validated({k: d for k, (_, d) in _FIELDS.items()})


def parse_config_text(text: str, source: str = "<config>", env: Optional[Mapping[str, str]] = None) -> RunConfig:
    values = {k: d for k, (_, d) in _FIELDS.items()}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not re.fullmatch(r"[A-Za-z_]+\.[A-Za-z0-9_]+", key) or not value.strip():
            raise ConfigError(f"{where}: expected 'section.key = value', got {raw.strip()!r}")
        values[key] = _parse_value(key, value, where)
    if env is not None:
        lookup = {k.upper().replace(".", "_"): k for k in values}
        for name, value in sorted(env.items()):
            if not name.startswith(ENV_PREFIX):
                continue
            key = lookup.get(name[len(ENV_PREFIX):])
            if key is None:
                raise ConfigError(f"environment variable {name} names no configuration key")
            values[key] = _parse_value(key, value, name)
    return _validated(values)


def parse_config(path=None, env: Optional[Mapping[str, str]] = None) -> RunConfig:
    """Read a configuration file (``None`` means all defaults), then apply the
    ``GFDMPA_*`` overrides from ``env`` (the process environment by default)."""
    env = os.environ if env is None else env
    if path is None:
        return parse_config_text("", env=env)
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"configuration file {path} does not exist")
    return parse_config_text(p.read_text(), source=str(p), env=env)
