"""Complex/real equivalence band over a random couple suite, written as JSON."""
import argparse
import json
from pathlib import Path

from interplab.suites import equivalence_band, random_couples


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--couples", type=int, default=50)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--out", default="equivalence_band.json")
    args = ap.parse_args()
    bands = equivalence_band(random_couples(args.couples, args.seed))
    payload = {"couples": args.couples, "seed": args.seed, "bands": [b.to_dict() for b in bands]}
    Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    for b in bands:
        print(f"theta={b.theta:.2f} spread={b.spread:.4f} scale_dev={b.scale_deviation:.2e}")


if __name__ == "__main__":
    main()
