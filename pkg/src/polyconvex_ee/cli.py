"""Command-line driver: data generation, training, evaluation, verification.

Exit codes: 0 success, 1 verification failure, 2 usage or input error,
3 numerical failure (laminate non-convergence, training divergence).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import laminate, sampling, training, verify
from .constitutive import SELECTORS, ConstitutiveModel, DirectModel, load_model, response, save_model
from .data import read_dataset, write_dataset

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _arch(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad architecture {text!r}") from exc
    if any(s < 1 for s in sizes):
        raise argparse.ArgumentTypeError("layer widths must be positive")
    return sizes


def _batch(text: str) -> int | None:
    if text == "full":
        return None
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("batch size must be positive or 'full'")
    return n


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polyconvex-ee", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-ti", help="sample the transversely isotropic benchmark potential")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--full-grid", action="store_true")
    g.add_argument("--dirs", type=int, default=30, help="deviatoric directions")
    g.add_argument("--amps", type=int, default=50, help="amplitudes per path (stretch and d0)")
    g.add_argument("--d0-amps", type=int, default=None, help="d0 amplitudes (full grid only)")
    g.add_argument("--sphere", type=int, default=20, help="d0 directions on the unit sphere")
    g.add_argument("--dev-range", type=float, nargs=2, default=(0.1, 1.0), metavar=("LO", "HI"))
    g.add_argument("--d0-range", type=float, nargs=2, default=(0.0, 4.0), metavar=("LO", "HI"))
    g.add_argument("--J", type=float, nargs="+", default=[1.0], help="volume ratios")

    g = sub.add_parser("gen-laminate", help="homogenize the rank-one laminate along load paths")
    g.add_argument("--out", required=True)
    g.add_argument("--paths", default="calib", choices=["calib", "test"])
    g.add_argument("--steps", type=int, default=100)
    g.add_argument("--fm", type=float, default=20.0)
    g.add_argument("--fe", type=float, default=2.0)
    g.add_argument("--ca", type=float, default=0.5)
    g.add_argument("--mu2", type=float, default=0.1)
    g.add_argument("--lam", type=float, default=50.0)
    g.add_argument("--cold-start", action="store_true", help="solve every step from zero amplitudes")

    g = sub.add_parser("train", help="calibrate a model with ADAM")
    g.add_argument("--data", required=True)
    g.add_argument("--model-out", required=True)
    g.add_argument("--history", default=None, help="history CSV (default: next to the checkpoint)")
    g.add_argument("--arch", type=_arch, default=(8,))
    g.add_argument("--selector", default="ti", choices=[*SELECTORS, "direct"])
    g.add_argument("--epochs", type=int, default=2500)
    g.add_argument("--lr", type=float, default=0.001)
    g.add_argument("--batch-size", type=_batch, default=32)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--restarts", type=int, default=1)
    g.add_argument("--no-project", action="store_true", help="skip the non-negativity projection")

    g = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    g.add_argument("--model", required=True)
    g.add_argument("--data", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--per-path-mean", action="store_true", help="divide the MSE by the number of paths")

    g = sub.add_parser("verify", help="run a property suite")
    g.add_argument("--suite", required=True, choices=[*verify.SUITES, "all"])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--mutate", choices=verify.MUTATIONS, default=None,
                   help="break the models on purpose (convexity suite only)")
    return ap


def cmd_gen_ti(a) -> int:
    n_d0 = a.amps if a.d0_amps is None else a.d0_amps
    if a.d0_amps is not None and not a.full_grid:
        raise UsageError("--d0-amps needs --full-grid")
    if min(a.dirs, a.amps, n_d0, a.sphere) < 1:
        raise UsageError("counts must be positive")
    try:
        plan = sampling.SamplingPlan(
            n_dev_directions=a.dirs, dev_amplitudes=np.linspace(*a.dev_range, a.amps),
            J_values=tuple(a.J), n_sphere_dirs=a.sphere, d0_amplitudes=np.linspace(*a.d0_range, n_d0),
            seed=a.seed, full_grid=a.full_grid)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    ds = sampling.build_ti_dataset(plan)
    write_dataset(ds, a.out)
    print(f"rows {len(ds)} paths {len(ds.paths)} seed {a.seed}")
    return EXIT_OK


def cmd_gen_laminate(a) -> int:
    try:
        cfg = laminate.LaminateConfig(mu2=a.mu2, lam=a.lam, f_m=a.fm, f_e=a.fe, c_a=a.ca)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    ds = laminate.laminate_dataset(cfg, a.paths, a.steps, warm_start=not a.cold_start)
    write_dataset(ds, a.out)
    print(f"rows {len(ds)} paths {len(ds.paths)}")
    return EXIT_OK


def _history_path(a) -> Path:
    if a.history:
        return Path(a.history)
    out = Path(a.model_out)
    return out.with_name(out.stem + ".history.csv")


def cmd_train(a) -> int:
    if a.epochs < 1 or a.restarts < 1 or a.lr < 0.0:
        raise UsageError("need epochs >= 1, restarts >= 1 and lr >= 0")
    ds = read_dataset(a.data)
    if a.selector == "direct":
        make = lambda s: DirectModel.create(hidden=a.arch, seed=s)  # noqa: E731
    else:
        make = lambda s: ConstitutiveModel.create(a.selector, hidden=a.arch, seed=s)  # noqa: E731
    cfg = training.TrainConfig(lr=a.lr, epochs=a.epochs, batch_size=a.batch_size, seed=a.seed,
                               project=not a.no_project)
    model, hist, finals = training.calibrate(make, ds, cfg, restarts=a.restarts, seed=a.seed)
    save_model(model, a.model_out)
    _history_path(a).write_text(hist.to_csv(), encoding="utf-8", newline="")
    if len(finals) > 1:
        print("restart log10 MSE " + " ".join(f"{math.log10(v):.4f}" for v in finals))
    print(f"final log10 MSE {math.log10(hist.final):.6f}")
    return EXIT_OK


def eval_rows(model, ds):
    header = (["path_id", "step"] + [f"P{i}{j}" for i in range(1, 4) for j in range(1, 4)]
              + ["e1", "e2", "e3"] + [f"Pm{i}{j}" for i in range(1, 4) for j in range(1, 4)]
              + ["em1", "em2", "em3"])
    rows = [header]
    for p in ds.paths:
        P, e0 = response(model, p.F, p.d0)
        for k in range(len(p)):
            vals = np.concatenate([p.P[k].ravel(), p.e0[k], P[k].ravel(), e0[k]])
            rows.append([p.path_id, k] + ["%.17g" % v for v in vals])
    return rows


def cmd_eval(a) -> int:
    model = load_model(a.model)
    ds = read_dataset(a.data)
    mse = training.mse_loss(model, ds, per_path_mean=a.per_path_mean)
    with open(a.out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerows(eval_rows(model, ds))
        lg = math.log10(mse) if mse > 0.0 else float("-inf")
        fh.write(f"# mse={mse:.17g} log10_mse={lg:.17g}\n")
    print(f"rows {len(ds)} log10 MSE {lg:.6f}")
    return EXIT_OK


def read_eval_summary(path) -> float:
    """The MSE stored on the trailing comment line of an ``eval`` CSV."""
    last = Path(path).read_text(encoding="utf-8").rstrip("\n").splitlines()[-1]
    if not last.startswith("# mse="):
        raise ValueError(f"{path}: no summary line")
    return float(last.split()[1].split("=")[1])


def cmd_verify(a) -> int:
    suites = verify.SUITES if a.suite == "all" else (a.suite,)
    if a.mutate and suites != ("convexity",):
        raise UsageError("--mutate only applies to --suite convexity")
    ok = True
    for name in suites:
        res = verify.run_suite(name, seed=a.seed, mutation=a.mutate)
        print(f"[{name}]")
        for c in res.checks:
            print("  " + c.line())
        if not res.passed:
            ok = False
            bad = res.first_failure
            print(f"first failing case: {bad.name}")
            print(json.dumps(bad.failing_case))
    return EXIT_OK if ok else EXIT_VERIFY


COMMANDS = {"gen-ti": cmd_gen_ti, "gen-laminate": cmd_gen_laminate, "train": cmd_train,
            "eval": cmd_eval, "verify": cmd_verify}


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    try:
        return COMMANDS[a.command](a)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (laminate.LaminateError, training.TrainingDiverged) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
