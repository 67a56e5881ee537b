"""Command-line entry point: ``multibeam {simulate,validate,info}``."""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys

import yaml

from .config import ConfigError, load_config, to_tree
from .montecarlo import BerRecord, sweep

CSV_HEADER = ["ebno_db", "stage", "decoder", "combining", "frames", "bits", "bit_errors", "ber",
              "low_confidence"]

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("multibeam")


def _fmt_bool(b: bool) -> str:
    return "true" if b else "false"


def record_row(r: BerRecord) -> list[str]:
    return [f"{r.ebno_db:g}", str(r.stage), r.decoder, _fmt_bool(r.combining), str(r.frames), str(r.bits),
            str(r.bit_errors), f"{r.ber:.5e}", _fmt_bool(r.low_confidence)]


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(record_row(r))
    return buf.getvalue()


def summary_line(r: BerRecord) -> str:
    flag = "  (low confidence)" if r.low_confidence else ""
    return (f"Eb/N0 {r.ebno_db:g} dB  stage {r.stage}  {r.decoder:<7s} combining={_fmt_bool(r.combining):<5s} "
            f"BER {r.ber:.5e}  ({r.bit_errors}/{r.bits} over {r.frames} frames){flag}")


def cmd_simulate(config_path, overrides=(), workers: int = 1, out=None) -> int:
    out = out or sys.stdout
    try:
        cfg = load_config(config_path, overrides)
    except ConfigError as exc:
        print(f"config error in '{exc.key}': {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        fh = open(cfg.csv_path, "w", newline="")
    except OSError as exc:
        print(f"cannot write {cfg.csv_path}: {exc}", file=sys.stderr)
        return EXIT_IO

    def progress(recs):
        for r in recs:
            print(summary_line(r), file=out, flush=True)

    with fh:
        records = sweep(cfg.scenario, cfg.ebno_db, cfg.stop, workers=workers, progress=progress)
        try:
            fh.write(records_to_csv(records))
        except OSError as exc:
            print(f"cannot write {cfg.csv_path}: {exc}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


def cmd_validate(out=None) -> int:
    out = out or sys.stdout
    from .validation import run_checks

    results = run_checks()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}" + ("" if ok else f": {detail}"), file=out)
    failed = [name for name, ok, _ in results if not ok]
    if failed:
        print(f"{len(failed)} check(s) failed: {', '.join(failed)}", file=out)
        return EXIT_FAIL
    return EXIT_OK


def cmd_info(config_path, overrides=(), out=None) -> int:
    out = out or sys.stdout
    try:
        cfg = load_config(config_path, overrides)
    except ConfigError as exc:
        print(f"config error in '{exc.key}': {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    print(yaml.safe_dump(to_tree(cfg), sort_keys=False), end="", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="multibeam", description="Multibeam uplink SIC receiver simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("simulate", "run an Eb/N0 sweep and write CSV"), ("info", "print the resolved config")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("-c", "--config", help="YAML config file (defaults give the 5-user reference scenario)")
        sp.add_argument("overrides", nargs="*", metavar="KEY=VALUE", help="dotted-key overrides")
        if name == "simulate":
            sp.add_argument("--workers", type=int, default=1, help="worker processes for frame batches")
    sub.add_parser("validate", help="run the fast self-check suite")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "simulate":
        if args.workers < 1:
            print("--workers must be >= 1", file=sys.stderr)
            return EXIT_CONFIG
        return cmd_simulate(args.config, args.overrides, args.workers)
    if args.command == "info":
        return cmd_info(args.config, args.overrides)
    return cmd_validate()


if __name__ == "__main__":
    sys.exit(main())
