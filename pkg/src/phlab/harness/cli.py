"""Command-line entry point: ``phlab <kind> [options]`` and ``phlab report``."""

from __future__ import annotations

import argparse
import csv
import sys

from .config import KINDS, ConfigError, load_config
from .run import _fmt, report, report_tables, run


def _parse_sets(items):
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="phlab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind, help=f"run a {kind} experiment")
        sp.add_argument("--config", help="TOML config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--out", help="output directory (relative paths go under $PHLAB_OUT or ./runs)")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override any config key; VALUE is parsed as TOML")
    rp = sub.add_parser("report", help="summarize finished runs")
    rp.add_argument("manifests", nargs="+", help="manifest.json files or run directories")
    rp.add_argument("--csv", help="also write the grouped table(s) as CSV to this path prefix")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            print(report(args.manifests))
            if args.csv:
                for kind, t in report_tables(args.manifests).items():
                    with open(f"{args.csv}{kind}.csv", "w", newline="", encoding="utf-8") as fh:
                        w = csv.writer(fh, lineterminator="\n")
                        w.writerow(t.columns)
                        w.writerows([[_fmt(v) for v in r] for r in t.rows])
            return 0
        overrides = _parse_sets(args.set)
        overrides["kind"] = args.command
        for key in ("seed", "workers", "out"):
            if getattr(args, key) is not None:
                overrides[key] = getattr(args, key)
        cfg = load_config(args.config, overrides)
        manifest = run(cfg)
    except ConfigError as exc:
        print(f"phlab: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"phlab: I/O error: {exc}", file=sys.stderr)
        return 3
    status = "PASS" if manifest["passed"] else "FAIL"
    print(f"{manifest['kind']}: {status}  ({cfg.output_dir()})")
    for name, ok in sorted(manifest["assertions"].items()):
        print(f"  [{'ok' if ok else 'FAIL'}] {name}")
    return 0 if manifest["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
