"""Run every verification suite and write reports, tables and plots to one directory.

    python3 scripts/run_all_suites.py --out hbv-out/all
"""
import argparse
import sys
import time

from hbv.cli import main as cli_main
from hbv.suites import SUITES


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="hbv-out/all")
    ap.add_argument("--alpha", default="2")
    ap.add_argument("--seed", default="0")
    args = ap.parse_args(argv)
    status = {}
    for name in SUITES:
        t0 = time.perf_counter()
        code = cli_main(["suite", name, "--alpha", args.alpha, "--seed", args.seed, "--out", args.out])
        status[name] = (code, time.perf_counter() - t0)
    print()
    for name, (code, dt) in status.items():
        print(f"{name:22s} {'ok' if code == 0 else 'FAILED':6s} {dt:6.1f}s")
    return max(code for code, _ in status.values())


if __name__ == "__main__":
    sys.exit(main())
