"""Calibrate SP+(I; 8) on the laminate paths and print the calibration/test losses.

    python scripts/laminate_table.py --restarts 3 --seed 0 --history lam.history.csv
"""

import argparse
import time

from polyconvex_ee import studies
from polyconvex_ee.constitutive import save_model
from polyconvex_ee.training import LAMINATE_PROTOCOL


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--restarts", type=int, default=3)
    ap.add_argument("--steps", type=int, default=100)
    ap.add_argument("--history")
    ap.add_argument("--model-out")
    args = ap.parse_args()

    t = time.perf_counter()
    r = studies.run_laminate(args.seed, args.restarts, LAMINATE_PROTOCOL, studies.laminate_sets(args.steps))
    print("restart log10 MSE: " + " ".join(f"{v:.3f}" for v in r["restarts"]))
    print(f"calibration log10 MSE {r['cal']:.3f}")
    print(f"test        log10 MSE {r['test']:.3f}")
    print(f"{time.perf_counter() - t:.0f} s")
    if args.history:
        with open(args.history, "w", newline="\n") as fh:
            fh.write(r["history"].to_csv())
    if args.model_out:
        save_model(r["model"], args.model_out)


if __name__ == "__main__":
    main()
