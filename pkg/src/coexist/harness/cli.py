"""Command line entry point.

Exit codes: 0 all checks pass, 1 a check failed, 2 bad usage or config,
3 the problem exceeds an enumeration cap.
"""

from __future__ import annotations

import argparse
import json
import sys

from ..errors import CapacityError, ContractError, CoexistError
from .acceptance import CRITERIA, run_criterion
from .config import KINDS, load, resolve
from .experiments import run

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coexist", description="Disordered Ising dynamics experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        k = sub.add_parser(kind, help=f"run a {kind} experiment")
        k.add_argument("--config", help="JSON config file; omitted keys take defaults")
        k.add_argument("--seed", type=int)
        k.add_argument("--out", help="output directory")
        k.add_argument("--workers", type=int, default=1)
    v = sub.add_parser("validate-config", help="check a config file against the schema")
    v.add_argument("file")
    r = sub.add_parser("repro", help="run one acceptance criterion end to end")
    r.add_argument("id", type=int, choices=sorted(CRITERIA))
    r.add_argument("--seed", type=int, default=0)
    return p


def _run_kind(args) -> int:
    config = load(args.config) if args.config else {"kind": args.command}
    if config.get("kind", args.command) != args.command:
        raise ContractError(f"config kind {config['kind']!r} does not match command {args.command!r}")
    config["kind"] = args.command
    if args.workers < 1:
        raise ContractError("--workers must be at least 1")
    res = run(config, args.out, seed=args.seed, workers=args.workers)
    r = res.result
    print(json.dumps({"pass": r["pass"], "summary": r["summary"], "directory": str(res.directory)}, indent=2))
    return EXIT_PASS if r["pass"] else EXIT_FAIL


def main(argv: list[str] | None = None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_PASS if exc.code == 0 else EXIT_USAGE
    try:
        if args.command == "validate-config":
            cfg = resolve(load(args.file))
            print(f"ok: {cfg['kind']}")
            return EXIT_PASS
        if args.command == "repro":
            crit = run_criterion(args.id, args.seed)
            print(crit.report())
            return EXIT_PASS if crit.passed else EXIT_FAIL
        return _run_kind(args)
    except (ContractError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"capacity: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except CoexistError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
