"""Dataset layouts of the two calibration studies, shared by scripts and tests."""

from __future__ import annotations

import math

import numpy as np

from . import laminate, sampling, training
from .constitutive import ConstitutiveModel, DirectModel
from .data import Dataset

HELD_OUT_SEED = 99
POOL_SEED = 1


def ti_calibration_set(n_sub: int, seed: int) -> Dataset:
    """``n_sub`` sub-datasets drawn without replacement from a pool of paired paths."""
    plan = sampling.SamplingPlan(n_dev_directions=max(30, n_sub // 20 + 1), seed=POOL_SEED)
    pool = sampling.build_ti_dataset(plan)
    rng = np.random.default_rng(seed)
    return pool.subset(sorted(rng.choice(len(pool.paths), n_sub, replace=False)))


def ti_held_out() -> Dataset:
    """200 fresh paths of 50 points (10,000 rows) from an unrelated seed."""
    return sampling.build_ti_dataset(sampling.SamplingPlan(n_dev_directions=10, seed=HELD_OUT_SEED))


def make_ti_model(kind: str, seed: int):
    if kind == "A":
        return ConstitutiveModel.create("ti_model_a", hidden=(8,), seed=seed)
    if kind == "B":
        return DirectModel.create(hidden=(64, 64, 64, 64), seed=seed)
    raise ValueError(f"unknown model kind {kind!r}")


def run_ti(kind: str, n_sub: int, seed: int, epochs: int, held: Dataset | None = None) -> dict:
    """Train one TI-study model; losses are per-path means (log10)."""
    cal = ti_calibration_set(n_sub, seed)
    held = held if held is not None else ti_held_out()
    cfg = training.TrainConfig(lr=training.TI_PROTOCOL.lr, epochs=epochs,
                               batch_size=training.TI_PROTOCOL.batch_size, seed=seed)
    model, hist = training.train(make_ti_model(kind, seed), cal, cfg)
    return {
        "kind": kind, "n_sub": n_sub, "seed": seed, "epochs": epochs,
        "cal": math.log10(hist.final / len(cal.paths)),
        "held": math.log10(training.mse_loss(model, held, per_path_mean=True)),
    }


def laminate_sets(steps: int = 100) -> tuple[Dataset, Dataset]:
    cfg = laminate.LaminateConfig()
    return laminate.laminate_dataset(cfg, "calib", steps), laminate.laminate_dataset(cfg, "test", steps)


def run_laminate(seed: int = 0, restarts: int = 3, cfg: training.TrainConfig = training.LAMINATE_PROTOCOL,
                 data: tuple[Dataset, Dataset] | None = None) -> dict:
    """SP+(I; 8) on the laminate calibration paths; losses are plain sums (log10)."""
    cal, test = data or laminate_sets()
    make = lambda s: ConstitutiveModel.create("ti", hidden=(8,), seed=s)  # noqa: E731
    model, hist, finals = training.calibrate(make, cal, cfg, restarts=restarts, seed=seed)
    return {
        "model": model, "history": hist,
        "restarts": [math.log10(v) for v in finals],
        "cal": math.log10(hist.final),
        "test": math.log10(training.mse_loss(model, test)),
    }
