"""Run every config in configs/ through the CLI, one output directory each."""
import argparse
import json
import sys
from pathlib import Path

from interplab.cli import main as cli_main


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--configs", default=str(Path(__file__).resolve().parent.parent / "configs"))
    ap.add_argument("--out-dir", default="runs")
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()
    worst = 0
    for path in sorted(Path(args.configs).glob("*.json")):
        command = json.loads(path.read_text())["command"]
        argv = [command, "--config", str(path), "--out-dir", str(Path(args.out_dir) / path.stem)]
        if args.seed is not None:
            argv += ["--seed", str(args.seed)]
        code = cli_main(argv)
        print(f"{path.name}: {command} exit {code}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
