"""Command line: ``sigscan {check,scan,bench,gen}``.

Exit status: 0 success, 2 usage or parse error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from sigscan import bench
from sigscan.counters import CostCounters
from sigscan.engine import compile_rules, format_alert, inspect
from sigscan.packet import CaptureError, DecodeError, GenSpec, decode, gen_capture, read_capture
from sigscan.rules import PROTOCOLS, RuleSet, RuleSetError, parse_ruleset

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3

logger = logging.getLogger("sigscan")


class UsageError(Exception):
    pass


@dataclass
class Config:
    rules_path: Path | None = None
    capture_path: Path | None = None
    out_path: Path | None = None
    variables: dict[str, str] = field(default_factory=dict)
    sample_interval: int = 1000
    algo: str = "engine"

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> Config:
        variables = {}
        for item in getattr(args, "var", None) or ():
            name, sep, value = item.partition("=")
            name = name.strip().lstrip("$")
            if not sep or not name:
                raise UsageError(f"--var expects NAME=VALUE, got {item!r}")
            variables[name] = value.strip()
        path = lambda v: Path(v) if v else None  # noqa: E731
        return cls(path(getattr(args, "rules", None)), path(getattr(args, "pcap", None)),
                   path(getattr(args, "out", None)), variables,
                   getattr(args, "interval", 1000), getattr(args, "algo", "engine"))

    def validate(self, *, rules: bool = False, capture: bool = False, out: bool = False) -> None:
        checks = [(rules, self.rules_path, "--rules"), (capture, self.capture_path, "--pcap")]
        for needed, p, flag in checks:
            if not needed:
                continue
            if p is None:
                raise UsageError(f"{flag} is required")
            if not p.is_file() or not os.access(p, os.R_OK):
                raise UsageError(f"{flag}: cannot read {p}")
        if out:
            if self.out_path is None:
                raise UsageError("--out is required")
            parent = self.out_path.parent
            if not parent.is_dir():
                raise UsageError(f"--out: directory {parent} does not exist")
        if self.sample_interval < 1:
            raise UsageError("--interval must be >= 1")


def load_rules(cfg: Config) -> RuleSet:
    text = cfg.rules_path.read_text(encoding="latin-1")
    return parse_ruleset(text, cfg.variables)


def cmd_check(cfg: Config, out=None) -> int:
    out = out or sys.stdout
    cfg.validate(rules=True)
    rs = load_rules(cfg)
    sizes = rs.partition_sizes()
    print(f"parsed={len(rs.rules)} skipped={len(rs.skipped)} "
          + " ".join(f"{p}={sizes[p]}" for p in PROTOCOLS), file=out)
    for reason, n in sorted(Counter(r for _, r in rs.skipped).items()):
        print(f"skip[{reason}]={n}", file=out)
    if rs.errors:
        print(f"errors={len(rs.errors)}", file=out)
        for line, msg in rs.errors:
            print(f"error line {line}: {msg}", file=sys.stderr)
    return EXIT_OK if rs.rules and not rs.errors else EXIT_USAGE


def cmd_scan(cfg: Config, out=None) -> int:
    out = out or sys.stdout
    cfg.validate(rules=True, capture=True, out=True)
    detector = compile_rules(load_rules(cfg))
    counters = CostCounters()
    lines = []
    packets = decode_errors = 0
    with open(cfg.capture_path, "rb") as f:
        _, records = read_capture(f)
        for i, rec in enumerate(records):
            packets += 1
            try:
                packet = decode(rec, i)
            except DecodeError as e:
                decode_errors += 1
                logger.debug("packet %d: %s", i, e)
                continue
            lines.extend(format_alert(a) for a in inspect(detector, packet, counters))
    cfg.out_path.write_bytes("".join(line + "\n" for line in lines).encode("ascii"))
    print(f"packets={packets} decode_errors={decode_errors} alerts={len(lines)}", file=out)
    return EXIT_OK


def cmd_bench(cfg: Config, out=None) -> int:
    out = out or sys.stdout
    cfg.validate(rules=True, capture=True, out=True)
    rs = load_rules(cfg)
    capture = cfg.capture_path.read_bytes()
    if cfg.algo == "engine":
        reports = [bench.run_engine_bench(compile_rules(rs), capture, cfg.sample_interval)]
    else:
        patterns = list(dict.fromkeys(c.data for r in rs.rules for c in r.contents))
        if not patterns:
            raise UsageError("rules carry no contents to compare")
        reports = bench.run_algo_compare(patterns, capture, cfg.sample_interval)
    cfg.out_path.write_bytes(bench.emit_csv(reports))
    for r in reports:
        print(f"{r.algo}: packets={r.final.packets} total={r.final.counters.total} "
              f"build={r.build_cost.total} alerts={r.final.alerts}", file=out)
    return EXIT_OK


def cmd_gen(spec_path: Path, seed: int, out_path: Path, out=None) -> int:
    out = out or sys.stdout
    if not spec_path.is_file():
        raise UsageError(f"--spec: cannot read {spec_path}")
    if not out_path.parent.is_dir():
        raise UsageError(f"--out: directory {out_path.parent} does not exist")
    try:
        spec = GenSpec.from_dict(json.loads(spec_path.read_text()))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise UsageError(f"bad generator spec: {e}") from None
    data = gen_capture(spec, seed)
    out_path.write_bytes(data)
    print(f"packets={spec.packets} bytes={len(data)}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sigscan", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def rules_args(p):
        p.add_argument("--rules", required=True, metavar="PATH")
        p.add_argument("--var", action="append", metavar="NAME=VALUE", default=[])

    p = sub.add_parser("check", help="parse a rules file and report counts")
    rules_args(p)

    p = sub.add_parser("scan", help="inspect a capture and write alerts")
    rules_args(p)
    p.add_argument("--pcap", required=True, metavar="PATH")
    p.add_argument("--out", required=True, metavar="PATH")

    p = sub.add_parser("bench", help="write cumulative cost counters as CSV")
    rules_args(p)
    p.add_argument("--pcap", required=True, metavar="PATH")
    p.add_argument("--out", required=True, metavar="PATH")
    p.add_argument("--interval", type=int, default=1000)
    p.add_argument("--algo", choices=("engine", "compare"), default="engine")

    p = sub.add_parser("gen", help="write a synthetic capture from a JSON spec")
    p.add_argument("--spec", required=True, metavar="PATH")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, metavar="PATH")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "gen":
            return cmd_gen(Path(args.spec), args.seed, Path(args.out))
        cfg = Config.from_args(args)
        command = {"check": cmd_check, "scan": cmd_scan, "bench": cmd_bench}[args.command]
        return command(cfg)
    except (UsageError, RuleSetError, CaptureError) as e:
        print(f"sigscan: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"sigscan: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
