"""Command line front end.

Exit codes: 0 success, 1 protocol failure or abort, 2 bad input/config.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from . import app
from .ot import OtError
from .protocol import (ConfigError, InputError, ProtocolError, SessionAbort,
                       parse_config)


def _session_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="session config file")
    p.add_argument("--party", type=int, required=True, help="own party id")
    p.add_argument("--input", required=True, help="newline-delimited tokens")
    p.add_argument("--sigma", type=int, help="override element bit width")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mpsi",
        description="Multi-party private set intersection over garbled "
                    "sort-compare-shuffle circuits")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one party of a session")
    _session_args(p_run)
    p_run.add_argument("--mode", choices=("intersection", "cardinality", "both"),
                       help="override the configured output mode")

    p_an = sub.add_parser("anomaly", help="pairwise Jaccard anomaly check")
    _session_args(p_an)
    p_an.add_argument("--threshold", default="0.5",
                      help="similarity threshold t; anomalous means J > t")

    p_bench = sub.add_parser("bench", help="circuit size / traffic bench")
    p_bench.add_argument("--bench-m", default="3",
                         help="comma list of party counts")
    p_bench.add_argument("--bench-n", default="4096",
                         help="comma list of set sizes")
    p_bench.add_argument("--bench-sigma", default="32",
                         help="comma list of element widths")
    p_bench.add_argument("--mode", default="intersection",
                         choices=("intersection", "cardinality", "both"))
    p_bench.add_argument("--live", action="store_true",
                         help="also run a loopback session per row")
    p_bench.add_argument("--csv", help="write rows as CSV to this path")
    return ap


def _cmd_run(args) -> int:
    cfg = parse_config(args.config, args.party, mode=args.mode,
                       sigma=args.sigma)
    tokens = app.read_token_file(args.input)
    result, toks = app.run_psi(cfg, tokens)
    if result.intersection is not None:
        print(f"intersection ({len(result.intersection)} elements):")
        for tok in toks:
            print(f"  {tok}")
    if result.cardinality is not None:
        print(f"cardinality: {result.cardinality}")
    return 0


def _cmd_anomaly(args) -> int:
    cfg = parse_config(args.config, args.party, sigma=args.sigma)
    try:
        threshold = Fraction(args.threshold)
    except (ValueError, ZeroDivisionError):
        raise InputError(f"bad threshold {args.threshold!r}") from None
    if not 0 <= threshold <= 1:
        raise InputError("threshold must be in [0, 1]")
    tokens = app.read_token_file(args.input)
    verdicts = app.run_anomaly(cfg, tokens, threshold)
    for v in verdicts:
        print(f"peer {v.peer_id}: overlap={v.cardinality} "
              f"jaccard={float(v.jaccard):.4f} threshold={float(v.threshold):.4f} "
              f"-> {v.label}")
    return 0


def _parse_list(text: str, flag: str) -> list:
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"bad {flag} list {text!r}") from None
    if not vals:
        raise InputError(f"empty {flag} list")
    return vals


def _cmd_bench(args) -> int:
    ms = _parse_list(args.bench_m, "--bench-m")
    ns = _parse_list(args.bench_n, "--bench-n")
    sigmas = _parse_list(args.bench_sigma, "--bench-sigma")
    rows = []
    for m in ms:
        for n in ns:
            for sigma in sigmas:
                if args.live:
                    rows.append(app.bench_live(m, n, sigma, args.mode))
                else:
                    rows.append(app.bench_counts(m, n, sigma, args.mode))
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(app.BenchRow.CSV_HEADER + "\n")
            for row in rows:
                fh.write(row.csv() + "\n")
        print(f"wrote {len(rows)} rows to {args.csv}")
    else:
        hdr = (f"{'m':>3} {'n':>7} {'sigma':>5} {'mode':>12} {'AND gates':>12} "
               f"{'AND/elem':>10} {'table MB':>9}")
        extra = f" {'P1>P2 MB':>9} {'seconds':>8}" if args.live else ""
        print(hdr + extra)
        for r in rows:
            line = (f"{r.m:>3} {r.n:>7} {r.sigma:>5} {r.mode:>12} "
                    f"{r.and_count:>12} {r.per_element:>10.1f} "
                    f"{r.table_mb:>9.3f}")
            if args.live:
                line += f" {r.p1_to_p2_mb:>9.2f} {r.seconds:>8.2f}"
            print(line)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "anomaly":
            return _cmd_anomaly(args)
        return _cmd_bench(args)
    except (InputError, ConfigError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except (SessionAbort, ProtocolError, OtError, OSError) as exc:
        print(f"session failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
