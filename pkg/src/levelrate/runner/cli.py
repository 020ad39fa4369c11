"""Command-line entry point.

    levelrate optimize  --config run.json [--steps N] [--seed S] [--out DIR]
    levelrate topology  --config topo.json
    levelrate gradcheck [--config cfg.json]
    levelrate report    RUN_DIR [RUN_DIR ...] [--out summary.json]

Several ``--config`` files run as a sweep; ``--jobs N`` runs them in parallel,
each in ``<output_dir>/<config stem>``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ..errors import ConfigError
from .config import load_config
from .experiments import (
    COMMANDS,
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_RUNTIME,
    aggregate_reports,
    dump_json,
    run_command,
    write_atomic,
)

logger = logging.getLogger("levelrate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="levelrate", description=__doc__.split("\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--config", action="append", default=[], help="JSON config (repeat for a sweep)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--steps", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--objective", help="objective name")
        p.add_argument("--method", help="fixed | exp_decay | adaptive | tuner")
        p.add_argument("--alpha0", type=float)
        p.add_argument("--jobs", type=int, default=1)
    rep = sub.add_parser("report", parents=[common])
    rep.add_argument("roots", nargs="+")
    rep.add_argument("--out", help="summary JSON path (default: stdout)")
    return parser


def _overrides(args) -> dict:
    o: dict = {}
    if args.out is not None:
        o["output_dir"] = args.out
    if args.steps is not None:
        o["steps"] = args.steps
    if args.seed is not None:
        o["seed"] = args.seed
    if args.objective is not None:
        o["objective"] = {"name": args.objective}
    method = {}
    if args.method is not None:
        method["kind"] = args.method
    if args.alpha0 is not None:
        method["alpha0"] = args.alpha0
    if method:
        o["method"] = method
    return o


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    if args.command == "report":
        summary = dump_json(aggregate_reports(args.roots))
        if args.out:
            out = Path(args.out)
            out.parent.mkdir(parents=True, exist_ok=True)
            write_atomic(out, summary)
        else:
            sys.stdout.write(summary)
        return EXIT_OK

    paths = args.config or [None]
    try:
        configs = [load_config(p, _overrides(args)) for p in paths]
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if len(configs) > 1:
        configs = [
            c.model_copy(update={"output_dir": str(Path(c.output_dir) / Path(p).stem)})
            for c, p in zip(configs, paths)
        ]
    payloads = [c.model_dump(mode="json") for c in configs]

    try:
        if args.jobs > 1 and len(payloads) > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                codes = list(pool.map(run_command, [args.command] * len(payloads), payloads))
        else:
            codes = [run_command(args.command, p) for p in payloads]
    except Exception as exc:  # noqa: BLE001
        logger.exception("runtime failure: %s", exc)
        return EXIT_RUNTIME
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
