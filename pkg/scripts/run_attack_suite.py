#!/usr/bin/env python3
"""Run the canonical attack scenarios and print one line per scenario.

    python3 scripts/run_attack_suite.py [--variant lpm|kdc|both] [--seed N] [--jsonl DIR]

Exit status 1 if any attack scenario reached relyingPartyAccepts or any
check failed.
"""

import argparse
import sys
from pathlib import Path

from apcr.harness import attack_suite, canonical_scenarios


def main() -> int:
    p = argparse.ArgumentParser()
    p.add_argument("--variant", choices=("lpm", "kdc", "both"), default="both")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jsonl", type=Path, help="write one RunReport per scenario as JSON lines")
    args = p.parse_args()
    ok = True
    for variant in ("lpm", "kdc") if args.variant == "both" else (args.variant,):
        summary = attack_suite(variant, args.seed)
        print(f"== {variant}: attack accepts {summary.attack_accepts}, honest accepts {summary.honest_accepts}")
        for line in summary.lines():
            print("  " + line)
        ok = ok and summary.ok
        if args.jsonl:
            args.jsonl.mkdir(parents=True, exist_ok=True)
            for scenario in canonical_scenarios(variant):
                with open(args.jsonl / f"{variant}-{scenario.name}.jsonl", "w") as fh:
                    scenario.run(variant, args.seed).write_jsonl(fh)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
