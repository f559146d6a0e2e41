"""Command-line front end: ``gfdmpa {psd,pa-sweep,acp}``.

All outputs are CSV or plain text with a ``#`` comment header carrying the
config hash and the resolved configuration; reruns with the same config and
seed are byte-identical.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .analytic import PaSpectrumModel, gfdm_power, psd_gfdm
from .config import RunConfig, parse_config, parse_number_list
from .errors import ConfigError, NumericalGuardError
from .estimate import estimate_psd
from .metrics import default_bands, oob_vs_subsymbols, sweep
from .pa import apply_pa, compression_report, compute_Aj, from_dbm, to_dbm
from .spectrum import Band, SpectrumGrid, integrate_band
from .waveform import build_prototype_filter, concatenate_frames, ofdm_config

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("gfdmpa")


def fmt(x) -> str:
    x = float(x)
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


class Writer:
    def __init__(self, rc: RunConfig, out: Path, command: str):
        self.rc = rc
        self.out = out
        self.command = command
        self.written = []
        out.mkdir(parents=True, exist_ok=True)

    def header(self, extra=()):
        lines = [f"# gfdmpa {self.command}", f"# config_hash: {self.rc.hash}"]
        lines += [f"# {k}: {v}" for k, v in extra]
        lines += [f"# config: {line}" for line in self.rc.canonical().splitlines()]
        return "\n".join(lines) + "\n"

    def csv(self, name, columns, rows, extra=()):
        body = [",".join(columns)]
        body += [",".join(c if isinstance(c, str) else fmt(c) for c in row) for row in rows]
        self._write(name, self.header(extra) + "\n".join(body) + "\n")

    def text(self, name, lines, extra=()):
        self._write(name, self.header(extra) + "\n".join(lines) + "\n")

    def spectrum(self, name, spec: SpectrumGrid, extra=()):
        meta = [("provenance", spec.meta)] + list(extra)
        meta += [(k, fmt(v) if isinstance(v, float) else v) for k, v in sorted(spec.info.items())]
        self.csv(name, ("frequency_Hz", "psd_dB_per_Hz"), zip(spec.f, spec.db()), meta)

    def _write(self, name, content):
        path = self.out / name
        path.write_text(content)
        self.written.append(path)


def _bands(rc: RunConfig, cfg):
    b1 = rc["sweep.b1_hz"]
    if b1 <= 0:
        return default_bands(cfg)
    return Band(-b1, b1), Band(b1, rc["sweep.adj_factor"] * b1)


def _m_list(args, rc: RunConfig):
    """``--subsymbols`` when given, otherwise the configured ``modulation.M``."""
    return rc["sweep.subsymbols"] if args.subsymbols is not None else (rc["modulation.M"],)


def _routes(route):
    return ("analytic", "simulated") if route == "both" else (route,)


def _mean_db_gap(a: SpectrumGrid, b: SpectrumGrid, band: Band) -> float:
    sel = (a.f >= band.f_lo) & (a.f <= band.f_hi)
    return float(np.mean(np.abs(a.db()[sel] - b.db()[sel])))


def cmd_psd(args, rc: RunConfig, w: Writer) -> None:
    base = rc.modulation
    pa = rc.pa
    summary = []
    for M in _m_list(args, rc):
        cfg = base.replace(M=M)
        filt = build_prototype_filter(cfg)
        main, adj = _bands(rc, cfg)
        alphas = rc["sweep.alpha_dbm"] if args.mode == "pa-output" else (rc["modulation.alpha_dbm"],)
        model = PaSpectrumModel(cfg, filt, pa, rc["analytic.envelope"]) if args.mode == "pa-output" else None
        for i, dbm in enumerate(alphas):
            c = cfg.replace(alpha=float(from_dbm(dbm)))
            tag = f"{args.mode}_M{M}_a{fmt(dbm)}dBm"
            specs = {}
            for route in _routes(args.route):
                if route == "analytic":
                    if model is None:
                        spec, expected = psd_gfdm(c, filt, rc["analytic.nfft"]), gfdm_power(c)
                    else:
                        spec = model.psd(c.alpha, rc["analytic.nfft"])
                        expected = float(compute_Aj(c, filt, pa)(c.alpha))
                else:
                    sig = concatenate_frames(c, filt, rc["estimator.frames"], (rc["io.seed"], M, i))
                    if model is not None:
                        sig = apply_pa(sig, pa, bandwidth=c.bandwidth)
                    spec, expected = estimate_psd(sig, rc.welch), sig.mean_power()
                specs[route] = spec
                w.spectrum(f"psd_{tag}_{route}.csv", spec, [("alpha_dBm", fmt(dbm)), ("M", M)])
                summary.append(
                    f"{tag} {route}: integrated_power={fmt(spec.total_power())} "
                    f"reference_power={fmt(expected)} "
                    f"rel_error={fmt(spec.total_power() / expected - 1.0)}"
                )
            if len(specs) == 2:
                a, s = specs["analytic"], specs["simulated"]
                if a.nfft == s.nfft:
                    summary.append(
                        f"{tag} agreement: mean_abs_dB_in_band={fmt(_mean_db_gap(a, s, main))} "
                        f"mean_abs_dB_adjacent={fmt(_mean_db_gap(a, s, adj))}"
                    )
                else:
                    summary.append(f"{tag} agreement: skipped (analytic and estimator grids differ)")
    w.text(f"psd_{args.mode}_summary.txt", summary)


def cmd_pa_sweep(args, rc: RunConfig, w: Writer) -> None:
    cfg = rc.modulation
    filt = build_prototype_filter(cfg)
    pa = rc.pa
    curve = compute_Aj(cfg, filt, pa)
    dbm = np.asarray(rc["sweep.alpha_dbm"])
    alphas = from_dbm(dbm)
    rows = [(d, to_dbm(curve(a)), to_dbm(curve.A[1] * a) if curve.A[1] > 0 else float("nan"))
            for d, a in zip(dbm, alphas)]
    w.csv("pa_sweep.csv", ("alpha_dBm", "Pz_dBm", "linear_ref_dBm"), rows)
    report = compression_report(curve)
    w.text("compression_report.txt", report.lines())
    w.csv("compression_report.csv", ("quantity", "alpha_W", "dBm"), [
        ("p1db",) + ((report.p1db.alpha, report.p1db.dbm) if report.p1db else ("none", "none")),
        ("psat",) + ((report.psat.alpha, report.psat.dbm) if report.psat else ("none", "none")),
        ("spread_dB", "", fmt(report.spread_db) if report.spread_db is not None else "none"),
    ])
    if args.route in ("simulated", "both"):
        res = sweep("pz", cfg, filt, pa, alphas, "simulated", n_frames=rc["estimator.frames"],
                    base_seed=rc["io.seed"])
        _write_sweeps(w, "pa_sweep_simulated.csv", [res])
    for line in report.lines():
        print(line)


def _write_sweeps(w: Writer, name, results):
    rows = []
    for r in results:
        rows += [(a, v, r.metric_kind, r.label) for a, v in zip(r.alpha_dbm, r.values)]
    w.csv(name, ("alpha_dBm", "value", "metric", "label"), rows)


def cmd_acp(args, rc: RunConfig, w: Writer) -> None:
    base = rc.modulation
    pa = rc.pa
    metrics = rc["sweep.metrics"]
    routes = _routes(args.route)
    kw = dict(n_frames=rc["estimator.frames"], welch=rc.welch, base_seed=rc["io.seed"])
    if "oob" in metrics:
        ms = rc["sweep.subsymbols"]
        table = {r: oob_vs_subsymbols(base, ms, r, nfft=rc["analytic.nfft"], bands=None if rc["sweep.b1_hz"] <= 0
                                      else _bands(rc, base), **kw) for r in routes}
        w.csv("oob_vs_subsymbols.csv", ("M", "oob_dB", "route"),
              [(float(m), table[r][j], r) for r in routes for j, m in enumerate(ms)])
    alphas = from_dbm(np.asarray(rc["sweep.alpha_dbm"]))
    for metric in (m for m in metrics if m != "oob"):
        results, vs_output = [], []
        configs = [(base.replace(M=M), None) for M in _m_list(args, rc)]
        if rc["io.compare_ofdm"]:
            configs.append((ofdm_config(base), "OFDM"))
        for cfg, name in configs:
            filt = build_prototype_filter(cfg)
            for route in routes:
                label = f"{name or 'GFDM M=' + str(cfg.M)} {route}"
                # OFDM streams keep the sample count of the configured GFDM blocks
                kw["n_frames"] = rc["estimator.frames"] * base.M // cfg.M if name else rc["estimator.frames"]
                res = sweep(metric, cfg, filt, pa, alphas, route, bands=_bands(rc, cfg),
                            nfft=rc["analytic.nfft"], label=label, **kw)
                results.append(res)
                if metric == "acpr":
                    pz = sweep("pz", cfg, filt, pa, alphas, route, label=label, **kw)
                    vs_output += [(o, v, label) for o, v in zip(pz.values, res.values)]
        _write_sweeps(w, f"{metric}_vs_input.csv", results)
        if vs_output:
            w.csv("acpr_vs_output.csv", ("output_dBm", "acpr_dB", "label"), vs_output)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gfdmpa", description="GFDM spectra through a polynomial PA")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="configuration file (section.key = value lines)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="base random seed")
    common.add_argument("--subsymbols", help="M values, e.g. '5', '5,35' or '1..40'")
    common.add_argument("--alpha-dbm", help="input levels in dBm, e.g. '17.07' or '0..20:0.5'")
    common.add_argument("--route", choices=("analytic", "simulated", "both"), default="analytic")
    common.add_argument("--nfft", type=int, help="transform length for analytic and estimated spectra")
    common.add_argument("--frames", type=int, help="GFDM blocks per simulated stream")
    common.add_argument("--envelope", choices=("joint", "common"), help="analytic PA-output envelope form")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("psd", parents=[common], help="GFDM or PA-output PSDs")
    p.add_argument("--mode", choices=("gfdm", "pa-output"), default="gfdm")
    p.set_defaults(func=cmd_psd)
    p = sub.add_parser("pa-sweep", parents=[common], help="output power curve and compression points")
    p.set_defaults(func=cmd_pa_sweep)
    p = sub.add_parser("acp", parents=[common], help="ACP/ACPR sweeps and OOB versus M")
    p.add_argument("--metric", help="comma list from acp, acpr, oob")
    p.add_argument("--compare-ofdm", action="store_true", help="add the OFDM series")
    p.set_defaults(func=cmd_acp)
    return parser


def _apply_flags(args, rc: RunConfig) -> RunConfig:
    changes = {}
    if args.out is not None:
        changes["io.out"] = args.out
    if args.seed is not None:
        changes["io.seed"] = args.seed
    if args.subsymbols is not None:
        changes["sweep.subsymbols"] = parse_number_list(args.subsymbols, int)
    if args.alpha_dbm is not None:
        levels = parse_number_list(args.alpha_dbm)
        changes["sweep.alpha_dbm"] = levels
        if len(levels) == 1:
            changes["modulation.alpha_dbm"] = levels[0]
    if args.nfft is not None:
        changes["analytic.nfft"] = args.nfft
        changes["estimator.nfft"] = args.nfft
    if args.frames is not None:
        changes["estimator.frames"] = args.frames
    if args.envelope is not None:
        changes["analytic.envelope"] = args.envelope
    if getattr(args, "metric", None):
        changes["sweep.metrics"] = tuple(m.strip() for m in args.metric.split(",") if m.strip())
    if getattr(args, "compare_ofdm", False):
        changes["io.compare_ofdm"] = True
    return rc.with_overrides(**changes)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        rc = _apply_flags(args, parse_config(args.config))
        w = Writer(rc, Path(rc["io.out"]), args.command)
        args.func(args, rc, w)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalGuardError as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for path in w.written:
        print(f"wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
