"""Command-line entry point: ``omilab run <config.json>`` and ``omilab suite <manifest.json>``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, ManifestError
from .experiments import (default_manifest_path, default_out_dir, load_manifest, rows_to_csv, run, suite,
                          summary_rows, write_report)

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="omilab", description="Run maximal-inequality verification experiments.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the configured seed")
    common.add_argument("--out-dir", type=Path, default=None,
                        help="output directory (default: $OMILAB_OUT_DIR or ./omilab-out)")
    common.add_argument("--workers", type=int, default=1, help="parallel workers")
    common.add_argument("--format", choices=("csv", "json", "both"), default="both")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="run one experiment config")
    r.add_argument("config", type=Path)
    s = sub.add_parser("suite", parents=[common], help="run every experiment of a manifest")
    s.add_argument("manifest", type=Path, nargs="?", default=None,
                   help="manifest file (default: the shipped acceptance manifest)")
    return p


def _load_config(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError("<file>", str(exc)) from None
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", str(exc)) from None


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    out_dir = args.out_dir or default_out_dir()
    try:
        if args.command == "run":
            report = run(_load_config(args.config), args.workers, args.seed)
            write_report(report, out_dir, args.format)
            for line in report.lines():
                print(line)
            if report.error:
                print(f"error: {report.error}", file=sys.stderr)
            print(f"{report.name}: {'pass' if report.verdict else 'fail'} ({report.wall_clock:.2f}s)")
            return EXIT_PASS if report.verdict else EXIT_FAIL
        configs = load_manifest(args.manifest or default_manifest_path())
        reports = suite(configs, args.workers, args.seed)
        for rep in reports:
            write_report(rep, out_dir, args.format)
        rows = summary_rows(reports)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.format in ("csv", "both"):
            (out_dir / "summary.csv").write_text(rows_to_csv(rows))
        if args.format in ("json", "both"):
            (out_dir / "summary.json").write_text(json.dumps(rows, sort_keys=True, indent=2) + "\n")
        for row in rows:
            print(f"[{row['verdict'].upper()}] {row['name']}: {row['checks'] - row['failed']}/{row['checks']} checks")
        return EXIT_PASS if all(r.verdict for r in reports) else EXIT_FAIL
    except (ConfigError, ManifestError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
