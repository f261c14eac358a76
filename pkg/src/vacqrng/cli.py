"""Command-line front end.

Exit codes: 0 success, 1 validation or usage error, 2 stage/runtime error,
3 extraction refused.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import config, entropy, extract, pipeline, signal, stattests
from .errors import (CalibrationError, ConfigError, DomainError, ExtractionRefused,
                     InsufficientEntropyError, NoBalanceError)

log = logging.getLogger("vacqrng")

EXIT_OK, EXIT_VALIDATION, EXIT_STAGE, EXIT_REFUSED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_config_args(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override a config value (repeatable)")


def _load_config(args, extra: Optional[List[str]] = None) -> config.RunConfig:
    return config.load(args.config, list(args.overrides) + list(extra or []))


def _code_ext(adc: signal.AdcConfig) -> str:
    return "u8" if adc.n_bits <= 8 else "u16"


def cmd_simulate(args) -> int:
    extra = []
    if args.count is not None:
        extra.append(f"run.sample_count={args.count}")
    if args.seed is not None:
        extra.append(f"run.seed={args.seed}")
    cfg = _load_config(args, extra)
    sim = pipeline.simulate(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ext = _code_ext(cfg.adc)
    signal.write_trace(out / "lo_on.f64", sim.lo_on)
    signal.write_trace(out / f"lo_on.{ext}", sim.lo_on_codes)
    signal.write_trace(out / "lo_off.f64", sim.lo_off)
    signal.write_trace(out / f"lo_off.{ext}", sim.lo_off_codes)
    extract.write_seed(out / "toeplitz.seed", sim.seed)
    solved = dataclasses.replace(cfg, modulator=dataclasses.replace(cfg.modulator, m=sim.balance.m))
    (out / "run.cfg").write_text(config.serialize(solved))
    summary = (f"modulation_index: {sim.balance.m!r}\n"
               f"balance_residual: {sim.balance.residual:.3e}\n"
               f"quadrature_mean: {sim.balance.x0:.3e}\n"
               f"samples: {cfg.sample_count}\n"
               f"clip_low: {sim.clip_on.low}\nclip_high: {sim.clip_on.high}\n")
    (out / "simulate.txt").write_text(summary)
    print(summary, end="")
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = _load_config(args)
    on = signal.read_trace(args.lo_on)
    off = signal.read_trace(args.lo_off)
    power = on.metadata.get("lo_power_mw", cfg.run.lo_power_mw)
    rep = pipeline.analyze(on, off, cfg.adc, float(power), cfg.run.e_bound_multiplier)
    text = rep.to_text()
    text += (f"h_min_quoted: {entropy.H_MIN_QUOTED}\n"
             f"delta_tolerance_quoted_V: {entropy.DELTA_TOLERANCE_QUOTED}\n")
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return EXIT_OK


def _read_h_min(path: Path) -> float:
    for line in path.read_text().splitlines():
        key, _, value = line.partition(":")
        if key.strip() == "h_min_bits_per_sample":
            return float(value)
    raise ValueError(f"{path}: no h_min_bits_per_sample entry")


def cmd_extract(args) -> int:
    extra = [f"extractor.{name}={getattr(args, name)}"
             for name in ("k", "l", "epsilon") if getattr(args, name) is not None]
    cfg = _load_config(args, extra)
    params = cfg.extractor

    if args.benchmark:
        seed = pipeline.toeplitz_seed(cfg) if args.seed_file is None else extract.read_seed(args.seed_file)
        rate = extract.measure_throughput(extract.ToeplitzExtractor(seed), n_blocks=args.blocks)
        target = cfg.adc.sample_rate * cfg.adc.n_bits * params.l / params.k
        print(f"throughput_bit_per_s: {rate:.6g}\ntarget_bit_per_s: {target:.6g}\n"
              f"meets_target: {rate >= target}")
        return EXIT_OK

    if args.trace is None or args.seed_file is None:
        raise UsageError("extract needs --trace and --seed-file (or --benchmark)")
    trace = signal.read_trace(args.trace)
    if trace.kind == "voltage":
        trace, _ = signal.quantize(trace, cfg.adc)
    seed = extract.read_seed(args.seed_file)
    h_min = args.h_min
    if h_min is None and args.entropy_report is not None:
        h_min = _read_h_min(args.entropy_report)
    res = pipeline.run_extraction(trace.samples, seed, params, h_min, args.override)
    Path(args.out).write_bytes(res.data.tobytes())
    if h_min is not None:
        print(entropy.inequality_text(params, h_min))
    print(f"certified: {res.certified}\noutput_bits: {res.nbits}\n"
          f"throughput_bit_per_s: {res.throughput:.6g}")
    return EXIT_OK


def cmd_rebalance(args) -> int:
    cfg = _load_config(args)
    try:
        rlog = pipeline.rebalance(cfg, feedback=not args.no_feedback)
    except pipeline.RebalanceError as exc:
        if args.out:
            Path(args.out).write_text(exc.log.to_text() + f"error: {exc}\n")
        raise
    text = rlog.to_text()
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return EXIT_OK


def cmd_test(args) -> int:
    bits = stattests.bits_from_bytes(Path(args.bits).read_bytes())
    rep = stattests.run_battery(bits)
    prefix = Path(args.out) if args.out else Path(args.bits).with_suffix("")
    Path(f"{prefix}.report.txt").write_text(rep.to_text())
    Path(f"{prefix}.report.csv").write_text(rep.to_table())
    print(rep.to_text(), end="")
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = _load_config(args)
    rep = pipeline.run_pipeline(cfg, run_battery=not args.no_battery)
    text = rep.to_text()
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vacqrng", description="Vacuum-fluctuation QRNG simulator and extractor")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="balance arms and write LO-on/LO-off traces")
    _add_config_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--count", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="noise calibration, QCNR and min-entropy audit")
    _add_config_args(p)
    p.add_argument("--lo-on", required=True, type=Path)
    p.add_argument("--lo-off", required=True, type=Path)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("extract", help="Toeplitz extraction of an ADC trace")
    _add_config_args(p)
    p.add_argument("--trace", type=Path)
    p.add_argument("--seed-file", type=Path)
    p.add_argument("--out", type=Path, default=Path("extracted.bin"))
    p.add_argument("--k", type=int)
    p.add_argument("--l", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--h-min", type=float, help="certified min-entropy per sample")
    p.add_argument("--entropy-report", type=Path, help="analyze output to read h_min from")
    p.add_argument("--override", action="store_true", help="extract even if uncertified")
    p.add_argument("--benchmark", action="store_true", help="in-memory throughput benchmark")
    p.add_argument("--blocks", type=int, default=1 << 16)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("rebalance", help="closed-loop modulation-index feedback under drift")
    _add_config_args(p)
    p.add_argument("--out", type=Path)
    p.add_argument("--no-feedback", action="store_true")
    p.set_defaults(func=cmd_rebalance)

    p = sub.add_parser("test", help="statistical test battery on a packed bitstream")
    p.add_argument("--bits", required=True, type=Path)
    p.add_argument("--out", help="output prefix for .report.txt and .report.csv")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("report", help="full simulate/analyze/extract/test run")
    _add_config_args(p)
    p.add_argument("--out", type=Path)
    p.add_argument("--no-battery", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ExtractionRefused as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except (CalibrationError, DomainError, NoBalanceError, InsufficientEntropyError,
            pipeline.RebalanceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
