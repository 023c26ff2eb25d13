"""Sweep sub-dataset counts for Models A and B on the TI benchmark.

Prints one CSV row per run: model, n_sub, seed, epochs, per-path-mean log10
losses on calibration and held-out data, wall time.

    python scripts/ti_study.py --models A --sizes 4 32 256 --seeds 0 1 2
"""

import argparse
import time

from polyconvex_ee import studies
from polyconvex_ee.training import TI_PROTOCOL


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--models", nargs="+", default=["A", "B"], choices=["A", "B"])
    ap.add_argument("--sizes", nargs="+", type=int, default=[4, 16, 32, 128, 512, 2048])
    ap.add_argument("--seeds", nargs="+", type=int, default=[0, 1, 2])
    ap.add_argument("--epochs", type=int, default=TI_PROTOCOL.epochs)
    args = ap.parse_args()

    held = studies.ti_held_out()
    print("model,n_sub,seed,epochs,log10_cal,log10_held,seconds")
    for kind in args.models:
        for n in args.sizes:
            for s in args.seeds:
                t = time.perf_counter()
                r = studies.run_ti(kind, n, s, args.epochs, held)
                print(f"{kind},{n},{s},{args.epochs},{r['cal']:.4f},{r['held']:.4f},"
                      f"{time.perf_counter() - t:.1f}", flush=True)


if __name__ == "__main__":
    main()
