"""Command line entry point.

    sumspec run CONFIG [--out-dir DIR] [--workers N]
    sumspec scree CONFIG [--out-dir DIR]

Exit status: 0 on success, 2 if some runs failed, 1 on config or I/O errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiment
from .errors import ConfigError, SumSpecError

log = logging.getLogger("sumspec")

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


def _scree(cfg, base, out_dir: Path) -> int:
    values = experiment.scree_table(cfg, base)
    out_dir.mkdir(parents=True, exist_ok=True)
    experiment.write_scree(out_dir / "scree.csv", values)
    return 0


def cmd_run(args) -> int:
    cfg, base = experiment.load_config(args.config)
    out_dir = Path(args.out_dir)
    if cfg.mode == "simulate":
        failed = experiment.run_simulation(cfg, out_dir, args.workers)
    elif cfg.mode == "detect":
        failed = experiment.run_detect(cfg, base, out_dir)
    else:
        failed = _scree(cfg, base, out_dir)
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_scree(args) -> int:
    cfg, base = experiment.load_config(args.config)
    if cfg.kmax is None:
        raise ConfigError("scree needs 'kmax' in the config")
    return _scree(cfg, base, Path(args.out_dir))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sumspec",
        description="Spectral community detection on summed multi-layer networks.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiment described by a JSON config")
    run.add_argument("config")
    run.add_argument("--out-dir", default="out")
    run.add_argument("--workers", type=int, default=None,
                     help="parallel grid cells (overrides the config)")
    run.set_defaults(func=cmd_run)

    scree = sub.add_parser("scree", help="write absolute eigenvalues for choosing K")
    scree.add_argument("config")
    scree.add_argument("--out-dir", default="out")
    scree.set_defaults(func=cmd_scree)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "workers", None) is not None and args.workers < 1:
        log.error("--workers must be >= 1")
        return EXIT_FATAL
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_FATAL
    except (OSError, ValueError) as exc:
        log.error("I/O or input error: %s", exc)
        return EXIT_FATAL
    except SumSpecError as exc:
        log.error("%s", exc)
        return EXIT_FATAL if args.command == "scree" else EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
