"""Weighted MSE calibration with ADAM.

Energy models are fitted through their gradients (stress and field), which
means every optimizer step differentiates ``grad_x ICNN`` with respect to the
network parameters.  Invariants and their F/d0-derivatives do not depend on the
parameters, so they are computed once per dataset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import icnn
from .constitutive import ConstitutiveModel, DirectModel, direct_features, pvol, response
from .data import Dataset, LoadPath
from .tensors import cofactor, det

WEIGHT_FLOOR = 1e-8


class TrainingDiverged(FloatingPointError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"loss became {loss!r} at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.005
    epochs: int = 5000
    batch_size: int | None = 400
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-7
    seed: int = 0
    project: bool = True

    def __post_init__(self):
        if self.lr < 0.0:
            raise ValueError("learning rate must be non-negative")
        if self.epochs < 1:
            raise ValueError("need at least one epoch")


# protocols of the two studies; the laminate one reads "framework defaults" as lr 1e-3, batch 32
TI_PROTOCOL = TrainConfig(lr=0.005, epochs=5000, batch_size=400)
LAMINATE_PROTOCOL = TrainConfig(lr=0.001, epochs=2500, batch_size=32)


def path_weight(path: LoadPath) -> float:
    """Mean Frobenius norm of the stresses of one path, floored at ``1e-8``."""
    if len(path) == 0:
        raise ValueError(f"path {path.path_id} is empty")
    w = float(np.mean(np.sqrt(np.einsum("nij,nij->n", path.P, path.P))))
    return max(w, WEIGHT_FLOOR)


def row_weights(ds: Dataset) -> np.ndarray:
    """``1 / (#D_i w_i)`` for every row, in stacked order."""
    return np.concatenate([np.full(len(p), 1.0 / (len(p) * path_weight(p))) for p in ds.paths])


def mse_loss(model, ds: Dataset, per_path_mean: bool = False) -> float:
    """``sum_i 1/(#D_i w_i) sum_j (|P_ij - P(F_ij, d0_ij)|^2 + |e0_ij - e0(...)|^2)``.

    ``per_path_mean`` divides by the number of paths.
    """
    total = 0.0
    for p in ds.paths:
        P, e0 = response(model, p.F, p.d0)
        if P.shape != p.P.shape or e0.shape != p.e0.shape:
            raise ValueError("model output shape does not match the dataset")
        sq = np.sum((p.P - P) ** 2, axis=(1, 2)) + np.sum((p.e0 - e0) ** 2, axis=1)
        total += float(np.sum(sq)) / (len(p) * path_weight(p))
    return total / len(ds.paths) if per_path_mean else total


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros(cls, params: icnn.NetworkParams) -> AdamState:
        arrs = params.arrays()
        return cls([np.zeros_like(a) for a in arrs], [np.zeros_like(a) for a in arrs], 0)


def adam_step(params: icnn.NetworkParams, grads, state: AdamState, cfg: TrainConfig):
    """Bias-corrected ADAM update followed by the non-negativity projection."""
    arrs = params.arrays()
    if len(grads) != len(arrs) or any(g.shape != a.shape for g, a in zip(grads, arrs)):
        raise ValueError("gradient shapes do not match the parameters")
    t = state.t + 1
    b1, b2 = cfg.beta1, cfg.beta2
    new, ms, vs = [], [], []
    for a, g, m, v in zip(arrs, grads, state.m, state.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        new.append(a - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps))
        ms.append(m)
        vs.append(v)
    out = params.with_arrays(new)
    if cfg.project:
        out = icnn.project_nonneg(out)
    return out, AdamState(ms, vs, t)


class FitProblem:
    """Dataset-specific precomputation for one model kind."""

    def __init__(self, model, ds: Dataset):
        F, d0, P, e0, _ = ds.stacked()
        self.n = len(F)
        self.c = row_weights(ds)
        self.target = np.concatenate([P.reshape(-1, 9), e0], axis=1)
        self.energy = isinstance(model, ConstitutiveModel)
        if self.energy:
            b = model.invariants(F, d0)
            self.X = b.values
            # chain-rule maps: width-k invariant gradient -> 12 outputs
            self.D = np.concatenate([b.dF.reshape(self.n, -1, 9), b.dd0], axis=2)
            vol = pvol(det(F), model.vol_tag, model.alpha)[1][:, None, None] * cofactor(F)
            self.offset = np.concatenate([vol.reshape(-1, 9), np.zeros((self.n, 3))], axis=1)
        elif isinstance(model, DirectModel):
            self.X = direct_features(F, d0)
        else:
            raise TypeError(f"cannot fit {type(model).__name__}")

    def predict(self, params, idx=slice(None)) -> np.ndarray:
        if self.energy:
            g = icnn.grad_input(params, self.X[idx])
            return np.einsum("nk,nko->no", g, self.D[idx]) + self.offset[idx]
        return icnn.forward(params, self.X[idx])

    def residual(self, params, idx=slice(None)) -> np.ndarray:
        return self.predict(params, idx) - self.target[idx]

    def loss(self, params, idx=slice(None), factor: float = 1.0) -> float:
        r = self.residual(params, idx)
        return factor * float(np.sum(self.c[idx] * np.sum(r * r, axis=1)))

    def loss_and_grad(self, params, idx=slice(None), factor: float = 1.0):
        r = self.residual(params, idx)
        c = self.c[idx]
        loss = factor * float(np.sum(c * np.sum(r * r, axis=1)))
        sens = 2.0 * factor * c[:, None] * r
        if self.energy:
            v = np.einsum("no,nko->nk", sens, self.D[idx])
            grads = icnn.grad_params(params, self.X[idx], None, v)
        else:
            grads = icnn.grad_params(params, self.X[idx], sens)
        return loss, grads


@dataclass
class History:
    epochs: list[int] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)

    def append(self, epoch: int, loss: float):
        self.epochs.append(epoch)
        self.losses.append(loss)

    @property
    def final(self) -> float:
        return self.losses[-1]

    def to_csv(self) -> str:
        lines = ["epoch,loss,log10_loss"]
        for e, l in zip(self.epochs, self.losses):
            lg = math.log10(l) if l > 0.0 else float("-inf")
            lines.append(f"{e},{l:.17g},{lg:.17g}")
        return "\n".join(lines) + "\n"


def train(model, ds: Dataset, cfg: TrainConfig, callback=None):
    """Calibrate ``model`` on ``ds``; returns ``(model, history)``.

    The history holds the full-batch loss before training (epoch 0) and after
    every epoch.  ``callback(epoch, loss, params)`` runs after each epoch.
    """
    prob = FitProblem(model, ds)
    params = model.params.copy()
    rng = np.random.default_rng(cfg.seed)
    state = AdamState.zeros(params)
    hist = History()
    hist.append(0, prob.loss(params))
    n = prob.n
    bs = n if cfg.batch_size is None else min(cfg.batch_size, n)
    for epoch in range(1, cfg.epochs + 1):
        if bs >= n:
            batches = [slice(None)]
        else:
            order = rng.permutation(n)
            batches = [order[k:k + bs] for k in range(0, n, bs)]
        for idx in batches:
            m = n if isinstance(idx, slice) else len(idx)
            _, grads = prob.loss_and_grad(params, idx, factor=n / m)
            params, state = adam_step(params, grads, state, cfg)
        loss = prob.loss(params)
        if not math.isfinite(loss):
            raise TrainingDiverged(epoch, loss)
        hist.append(epoch, loss)
        if callback is not None:
            callback(epoch, loss, params)
    return model.with_params(params), hist


def calibrate(make_model, ds: Dataset, cfg: TrainConfig, restarts: int = 3, seed: int = 0):
    """Train ``restarts`` fresh initializations, keep the lowest final loss.

    ``make_model(seed)`` builds an initialized model.  Returns
    ``(best_model, best_history, all_final_losses)``.
    """
    best, finals = None, []
    for r in range(restarts):
        model = make_model(seed + r)
        trained, hist = train(model, ds, replace(cfg, seed=cfg.seed + r))
        finals.append(hist.final)
        if best is None or hist.final < best[1].final:
            best = (trained, hist)
    return best[0], best[1], finals
