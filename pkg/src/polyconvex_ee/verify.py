"""Property suites behind ``polyconvex-ee verify``.

Every check reports the largest deviation it saw and passes when that value is
at or below its tolerance.  The first offending case is kept in a JSON-friendly
form so a failing run can be reproduced by hand.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import icnn, laminate
from .constitutive import (FULL_F_SELECTORS, SELECTORS, ConstitutiveModel, energy, energy_on_V,
                           stress_and_field)
from .invariants import cubic_group, i6, ti_group_samples
from .tensors import cofactor, random_deformation, random_rotation

SUITES = ("gradients", "objectivity", "symmetry", "convexity", "laminate")
MUTATIONS = ("negate-weight", "skip-projection")
TI_SELECTORS = ("ti", "ti_model_a")


@dataclass
class Check:
    name: str
    max_deviation: float
    tolerance: float
    failing_case: dict | None = None

    @property
    def passed(self) -> bool:
        return bool(self.max_deviation <= self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<44s} max={self.max_deviation:.3e}  tol={self.tolerance:.1e}"


@dataclass
class SuiteResult:
    suite: str
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def first_failure(self) -> Check | None:
        return next((c for c in self.checks if not c.passed), None)


def _case(**arrays) -> dict:
    return {k: np.asarray(v).tolist() for k, v in arrays.items()}


def _check(name, deviations, tol, cases) -> Check:
    """Reduce per-case deviations; ``cases(i)`` serializes case ``i`` on failure."""
    dev = np.asarray(deviations, dtype=float)
    worst = int(np.argmax(dev))
    bad = np.flatnonzero(~(dev <= tol))
    return Check(name, float(dev[worst]), tol, cases(int(bad[0])) if bad.size else None)


def default_models(seed: int = 0, hidden=(16, 16)) -> dict[str, ConstitutiveModel]:
    return {sel: ConstitutiveModel.create(sel, hidden=hidden, seed=seed + k)
            for k, sel in enumerate(SELECTORS)}


def random_states(rng: np.random.Generator, n: int):
    return random_deformation(rng, n, 0.3), rng.standard_normal((n, 3))


# --- gradients ---------------------------------------------------------------------------

def fd_gradient_error(m: ConstitutiveModel, F, d0, rel_step: float = 1e-6) -> np.ndarray:
    """Per state: ``max|FD - analytic| / max(1, max|analytic|)`` over all 12 components."""
    P, e0 = stress_and_field(m, F, d0)
    an = np.concatenate([P.reshape(-1, 9), e0], axis=1)
    fd = np.empty_like(an)
    for k in range(12):
        Fp, Fm, dp, dm = F.copy(), F.copy(), d0.copy(), d0.copy()
        if k < 9:
            i, j = divmod(k, 3)
            h = rel_step * np.maximum(1.0, np.abs(F[:, i, j]))
            Fp[:, i, j] += h
            Fm[:, i, j] -= h
        else:
            h = rel_step * np.maximum(1.0, np.abs(d0[:, k - 9]))
            dp[:, k - 9] += h
            dm[:, k - 9] -= h
        fd[:, k] = (energy(m, Fp, dp) - energy(m, Fm, dm)) / (2.0 * h)
    return np.max(np.abs(fd - an), axis=1) / np.maximum(1.0, np.max(np.abs(an), axis=1))


def loss_gradient_error(m: ConstitutiveModel, F, d0, P, e0, h: float = 1e-6) -> float:
    """Relative FD error of the training-loss gradient over every network parameter."""
    from .data import Dataset, LoadPath
    from .training import FitProblem

    prob = FitProblem(m, Dataset([LoadPath("fd", F, d0, P, e0)]))
    _, grads = prob.loss_and_grad(m.params)
    g = np.concatenate([a.ravel() for a in grads])
    v0 = m.params.to_vector()
    fd = np.empty_like(v0)
    for k in range(v0.size):
        vp, vm = v0.copy(), v0.copy()
        vp[k] += h
        vm[k] -= h
        fd[k] = (prob.loss(m.params.from_vector(vp)) - prob.loss(m.params.from_vector(vm))) / (2.0 * h)
    return float(np.max(np.abs(fd - g)) / max(1.0, float(np.max(np.abs(g)))))


def gradients_suite(seed: int = 0, n_states: int = 500) -> SuiteResult:
    res = SuiteResult("gradients")
    rng = np.random.default_rng(seed)
    for sel, m in default_models(seed).items():
        F, d0 = random_states(rng, n_states)
        err = fd_gradient_error(m, F, d0)
        res.checks.append(_check(f"{sel}: P, e0 vs FD of energy", err, 1e-6,
                                 lambda i: _case(selector=sel, F=F[i], d0=d0[i])))
    # small model, few rows: FD over every parameter stays cheap
    m = ConstitutiveModel.create("ti", hidden=(4, 4), seed=seed)
    F, d0 = random_states(rng, 6)
    P, e0 = rng.standard_normal((6, 3, 3)), rng.standard_normal((6, 3))
    err = loss_gradient_error(m, F, d0, P, e0)
    res.checks.append(Check("ti(4,4): loss gradient vs FD over parameters", err, 1e-5))
    return res


# --- objectivity / symmetry --------------------------------------------------------------

def _rel_diff(a, b):
    return np.abs(a - b) / np.maximum(1.0, np.abs(b))


def objectivity_suite(seed: int = 0, n_rot: int = 100) -> SuiteResult:
    res = SuiteResult("objectivity")
    rng = np.random.default_rng(seed)
    for sel, m in default_models(seed).items():
        F, d0 = random_states(rng, n_rot)
        Q = random_rotation(rng, n_rot)
        dev = _rel_diff(energy(m, Q @ F, d0), energy(m, F, d0))
        res.checks.append(_check(f"{sel}: e(QF, d0) = e(F, d0)", dev, 1e-12,
                                 lambda i: _case(selector=sel, F=F[i], d0=d0[i], Q=Q[i])))
    return res


def group_deviation(m: ConstitutiveModel, Qs, F, d0) -> np.ndarray:
    """Per group element: max over states of the relative change of ``e(FQ, Q^T d0)``.

    Both groups contain ``-I``; an improper element acts through ``-Q`` so that
    ``det(FQ) > 0`` (every invariant is even in Q).
    """
    ref = energy(m, F, d0)
    out = []
    for Q in Qs:
        Q = Q if np.linalg.det(Q) > 0.0 else -Q
        out.append(np.max(_rel_diff(energy(m, F @ Q, d0 @ Q), ref)))
    return np.array(out)


def symmetry_suite(seed: int = 0, n_states: int = 50) -> SuiteResult:
    res = SuiteResult("symmetry")
    rng = np.random.default_rng(seed)
    models = default_models(seed)
    for sel in TI_SELECTORS:
        m = models[sel]
        Qs = ti_group_samples(m.ti.n, rng.uniform(0.0, 2.0 * np.pi, 24))
        F, d0 = random_states(rng, n_states)
        res.checks.append(_check(f"{sel}: rotations/reflection about n", group_deviation(m, Qs, F, d0),
                                 1e-12, lambda i: _case(selector=sel, Q=Qs[i])))
    m = models["cubic"]
    Qs = cubic_group()
    F, d0 = random_states(rng, n_states)
    res.checks.append(_check("cubic: all 48 group elements", group_deviation(m, Qs, F, d0), 1e-12,
                             lambda i: _case(selector="cubic", Q=Qs[i])))
    return res


# --- convexity ---------------------------------------------------------------------------

def random_V(rng: np.random.Generator, n: int):
    """Independent blocks ``(F, H, J, d0, d)``; J stays positive along segments."""
    return (np.eye(3) + 0.5 * rng.standard_normal((n, 3, 3)), np.eye(3) + 0.5 * rng.standard_normal((n, 3, 3)),
            rng.uniform(0.3, 2.0, n), rng.standard_normal((n, 3)), rng.standard_normal((n, 3)))


def midpoint_violation(m: ConstitutiveModel, V1, V2) -> np.ndarray:
    """``(e(mid) - (e1 + e2)/2) / max(1, |(e1 + e2)/2|)``; positive means non-convex."""
    mid = [0.5 * (a + b) for a, b in zip(V1, V2)]
    avg = 0.5 * (energy_on_V(m, *V1) + energy_on_V(m, *V2))
    return (energy_on_V(m, *mid) - avg) / np.maximum(1.0, np.abs(avg))


def i6_second_derivative(H, d0, h: float = 1e-3) -> np.ndarray:
    """Central second difference of I6 along ``(dH, dd0) = (H, -d0)``."""
    f = lambda t: i6(H * (1.0 + t), d0 * (1.0 - t))[0]  # noqa: E731
    return (f(h) - 2.0 * f(0.0) + f(-h)) / h ** 2


def mutate(m: ConstitutiveModel, kind: str, seed: int = 0) -> ConstitutiveModel:
    """Deliberately broken copies for exercising the convexity suite."""
    if kind == "negate-weight":
        p = m.params.copy()
        W = p.weights[-1]
        W[0, int(np.argmax(W[0]))] = -10.0
        return m.with_params(p)
    if kind == "skip-projection":
        rng = np.random.default_rng(seed)
        return m.with_params(icnn.init_network(m.params.layer_sizes, rng, convex=False))
    raise ValueError(f"unknown mutation {kind!r}")


def convexity_suite(seed: int = 0, n_pairs: int = 1000, mutation: str | None = None) -> SuiteResult:
    res = SuiteResult("convexity")
    rng = np.random.default_rng(seed)
    models = default_models(seed)
    for sel in FULL_F_SELECTORS:
        m = models[sel] if mutation is None else mutate(models[sel], mutation, seed)
        worst = icnn.constraint_violation(m.params)
        res.checks.append(Check(f"{sel}: constrained weights >= 0", -worst, 0.0,
                                {"selector": sel, "min_weight": worst} if worst < 0.0 else None))
        V1, V2 = random_V(rng, n_pairs), random_V(rng, n_pairs)
        viol = midpoint_violation(m, V1, V2)
        res.checks.append(_check(f"{sel}: midpoint convexity on V", viol, 1e-12,
                                 lambda i: {"selector": sel, "V1": [np.asarray(b[i]).tolist() for b in V1],
                                            "V2": [np.asarray(b[i]).tolist() for b in V2]}))
    F = random_deformation(rng, 200, 0.3)
    d0 = rng.standard_normal((200, 3))
    H = cofactor(F)
    keep = np.linalg.norm(np.einsum("nij,nj->ni", H, d0), axis=1) >= 0.1
    d2 = i6_second_derivative(H[keep], d0[keep])
    res.checks.append(_check("I6 along (H, -d0): second derivative", d2, -1e-6,
                             lambda i: _case(H=H[keep][i], d0=d0[keep][i])))
    return res


# --- laminate ----------------------------------------------------------------------------

def envelope_error(F, d0, cfg: laminate.LaminateConfig, h: float = 1e-6) -> float:
    """Relative mismatch of ``(P, e0)`` and central FD of the re-solved effective energy."""
    _, P, e0, st = laminate.effective_response(F, d0, cfg)
    an = np.concatenate([P.ravel(), e0])
    fd = np.empty(12)
    for k in range(12):
        Fp, Fm, dp, dm = F.copy(), F.copy(), d0.copy(), d0.copy()
        if k < 9:
            Fp.flat[k] += h
            Fm.flat[k] -= h
        else:
            dp[k - 9] += h
            dm[k - 9] -= h
        fd[k] = (laminate.effective_response(Fp, dp, cfg, st)[0]
                 - laminate.effective_response(Fm, dm, cfg, st)[0]) / (2.0 * h)
    return float(np.max(np.abs(fd - an)) / max(1.0, float(np.max(np.abs(an)))))


def laminate_suite(seed: int = 0, steps: int = 100) -> SuiteResult:
    res = SuiteResult("laminate")
    rng = np.random.default_rng(seed)
    flat = laminate.LaminateConfig(f_m=1.0, f_e=1.0)
    F, d0 = random_states(rng, 20)
    amp = [np.linalg.norm(laminate.solve_amplitudes(F[i], d0[i], flat).vector()) for i in range(20)]
    res.checks.append(_check("f_m = f_e = 1: |alpha|, |beta|", amp, 1e-12,
                             lambda i: _case(F=F[i], d0=d0[i])))

    cfg = laminate.LaminateConfig()
    resid, iters, asym, chol, where = [], [], [], [], []
    for name, Fs, ds in laminate.load_paths("calib", steps):
        _, _, _, states = laminate.homogenize_path(Fs, ds, cfg, name=name)
        for k, st in enumerate(states):
            K = laminate.jump_hessian(Fs[k], ds[k], st.vector(), cfg)
            resid.append(st.residual)
            iters.append(st.iterations)
            asym.append(np.max(np.abs(K - K.T)) / np.max(np.abs(K)))
            try:
                np.linalg.cholesky(0.5 * (K + K.T))
                chol.append(0.0)
            except np.linalg.LinAlgError:
                chol.append(1.0)
            where.append({"path": name, "step": k, "F": Fs[k].tolist(), "d0": ds[k].tolist()})
    res.checks.append(_check("calib paths: converged jump residual", resid, 1e-10, where.__getitem__))
    res.checks.append(_check("calib paths: Newton iterations (warm start)", iters, 15, where.__getitem__))
    res.checks.append(_check("calib paths: Hessian asymmetry (relative)", asym, 1e-9, where.__getitem__))
    res.checks.append(_check("calib paths: Hessian not positive definite", chol, 0.0, where.__getitem__))

    probes = [(np.eye(3) + np.diag([0.2, 0.0, 0.0]), np.array([0.0, 0.0, 1.0]))]
    probes += list(zip(random_deformation(rng, 4, 0.15), 0.8 * rng.standard_normal((4, 3))))
    env = [envelope_error(Fp, dp, cfg) for Fp, dp in probes]
    res.checks.append(_check("Hill-Mandel: FD of effective energy", env, 1e-5,
                             lambda i: _case(F=probes[i][0], d0=probes[i][1])))
    return res


def run_suite(name: str, seed: int = 0, mutation: str | None = None) -> SuiteResult:
    if mutation is not None and name != "convexity":
        raise ValueError("mutations only apply to the convexity suite")
    if name == "gradients":
        return gradients_suite(seed)
    if name == "objectivity":
        return objectivity_suite(seed)
    if name == "symmetry":
        return symmetry_suite(seed)
    if name == "convexity":
        return convexity_suite(seed, mutation=mutation)
    if name == "laminate":
        return laminate_suite(seed)
    raise ValueError(f"unknown suite {name!r}")
