"""Run every config in configs/ and write results under results/<name>/.

    python3 scripts/run_all.py [--out results]
"""
import argparse
import json
import sys
from pathlib import Path

from wexch.cli import main

ROOT = Path(__file__).resolve().parents[1]
# negative controls: an Unknown verdict and a perturbed joint
EXPECTED_EXIT = {"custom_unknown": 2, "verify_perturbed": 1}


def run(out: Path) -> int:
    mismatches = 0
    for cfg in sorted((ROOT / "configs").glob("*.json")):
        exp = json.loads(cfg.read_text())["experiment"]
        target = out / cfg.stem
        with open(out / f"{cfg.stem}.stdout.json", "w") as f:
            saved, sys.stdout = sys.stdout, f
            try:
                code = main([exp, "--config", str(cfg), "--out", str(target)])
            finally:
                sys.stdout = saved
        want = EXPECTED_EXIT.get(cfg.stem, 0)
        print(f"{cfg.stem:28s} {exp:17s} exit {code} (expected {want})")
        mismatches += code != want
    return int(mismatches > 0)


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(ROOT / "results"))
    out = Path(ap.parse_args().out)
    out.mkdir(parents=True, exist_ok=True)
    sys.exit(run(out))
