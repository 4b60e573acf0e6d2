"""``wexch`` command line: ``wexch <experiment> --config PATH [--seed-offset N] [--out DIR]``."""
from __future__ import annotations

import argparse
import os
import sys

from .errors import WexchError
from .experiments import EXIT_FAIL, EXPERIMENTS, load_config, run


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wexch", description=__doc__)
    ap.add_argument("command", choices=EXPERIMENTS)
    ap.add_argument("--config", required=True, help="JSON experiment config")
    ap.add_argument("--seed-offset", type=int, default=0, help="added to every configured seed")
    ap.add_argument("--out", help="directory for result.json and CSV traces")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.seed_offset)
        if cfg.experiment != args.command:
            raise WexchError(f"config is for {cfg.experiment!r}, not {args.command!r}")
        result = run(cfg)
    except WexchError as e:
        print(f"wexch: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL
    text = result.to_json()
    sys.stdout.write(text)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "result.json"), "w") as f:
            f.write(text)
        for name, body in result.csv.items():
            with open(os.path.join(args.out, name), "w") as f:
                f.write(body)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
