"""Command-line entry point: ``lrquench run CONFIG`` and ``lrquench verify``.

Exit codes: 0 success, 1 numerical failure or failed criteria, 2 invalid
configuration or usage.
"""
from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from pathlib import Path

from .errors import ConfigError, LrquenchError

log = logging.getLogger("lrquench")


def _line_of(text, field):
    """1-based line of the first occurrence of the last key in a dotted field path."""
    key = re.sub(r"\[\d+\]$", "", field.split(".")[-1])
    for i, line in enumerate(text.splitlines(), 1):
        if f'"{key}"' in line:
            return i
    return None


def _cmd_run(args):
    from .experiments import load_config, run_experiment, write_artifacts

    path = Path(args.config)
    try:
        text = path.read_text()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc.strerror}", file=sys.stderr)
        return 2
    try:
        cfg = load_config(path)
    except ConfigError as exc:
        m = re.match(r"line (\d+): (.*)", str(exc))
        if m:
            print(f"{path}:{m.group(1)}: {m.group(2)}", file=sys.stderr)
        else:
            line = _line_of(text, exc.field) if exc.field else None
            loc = f"{path}:{line}" if line else str(path)
            print(f"{loc}: field {exc.field}: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg.seed = args.seed
    try:
        result = run_experiment(cfg, jobs=args.jobs)
    except ConfigError as exc:
        print(f"{path}: field {exc.field}: {exc}", file=sys.stderr)
        return 2
    except LrquenchError as exc:
        print(f"error: {type(exc).__module__}.{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    paths = write_artifacts(cfg, result, args.out)
    for kind, p in paths.items():
        print(f"{kind}: {p}")
    return 0


def _cmd_verify(args):
    from .verify import run_suite

    results = run_suite(args.suite, seed=args.seed or 0, jobs=args.jobs)
    report = {"suite": args.suite, "passed": all(c.passed for c in results),
              "criteria": [c.to_dict() for c in results]}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"verify_{args.suite}.json").write_text(json.dumps(report, indent=2, default=str) + "\n")
    failed = [c.key for c in results if not c.passed]
    if failed:
        print(f"FAILED: {', '.join(failed)}")
        return 1
    print(f"all {len(results)} criteria passed")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="lrquench", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--jobs", type=int, default=1, help="worker processes for grid sweeps")
    common.add_argument("--out", default=None, help="output directory (overrides the config)")
    common.add_argument("--seed", type=int, default=None, help="seed for randomized batteries")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="run one experiment config")
    r.add_argument("config", help="experiment config (JSON)")
    r.set_defaults(func=_cmd_run)
    v = sub.add_parser("verify", parents=[common], help="run the acceptance battery")
    v.add_argument("--suite", choices=("fast", "full"), default="fast")
    v.set_defaults(func=_cmd_verify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
