"""Analytical homogenization of a two-phase rank-one laminate.

The phases share the macroscopic fields up to the compatible jumps
``[[F]] = alpha (x) l0`` and ``[[d0]] = T beta``.  The amplitudes follow from
the stationarity conditions ``[[P]] l0 = 0`` and ``T^T [[e0]] = 0``, solved
here by Newton-Raphson with a backtracking line search.  All quantities are in
scaled units of phase ``a``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, LoadPath
from .tensors import NonPositiveDeterminant, cofactor, cross, det


class LaminateError(RuntimeError):
    """Newton-Raphson failure; carries the last amplitude state."""

    def __init__(self, message: str, state: AmplitudeState | None = None):
        super().__init__(message)
        self.state = state


class SingularHessian(LaminateError):
    pass


def tangent_frame(l0: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unit ``t1, t2`` with ``(t1, t2, l0)`` right-handed orthonormal."""
    l0 = np.asarray(l0, dtype=float)
    helper = np.eye(3)[np.argmin(np.abs(l0))]
    t1 = helper - (helper @ l0) * l0
    t1 /= np.linalg.norm(t1)
    return t1, np.cross(l0, t1)


@dataclass(frozen=True)
class LaminateConfig:
    mu2: float = 0.1
    lam: float = 50.0
    f_m: float = 20.0
    f_e: float = 2.0
    c_a: float = 0.5
    l0: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        l0 = np.asarray(self.l0, dtype=float)
        if abs(np.linalg.norm(l0) - 1.0) > 1e-12:
            raise ValueError("lamination normal must be a unit vector")
        if not 0.0 < self.c_a < 1.0:
            raise ValueError("volume fraction must lie in (0, 1)")
        object.__setattr__(self, "l0", l0)

    @property
    def c_b(self) -> float:
        return 1.0 - self.c_a

    @property
    def T(self) -> np.ndarray:
        """The 3x2 map from tangential amplitudes to vectors."""
        return np.stack(tangent_frame(self.l0), axis=1)


@dataclass
class AmplitudeState:
    alpha: np.ndarray = field(default_factory=lambda: np.zeros(3))
    beta: np.ndarray = field(default_factory=lambda: np.zeros(2))
    iterations: int = 0
    residual: float = np.inf

    def vector(self) -> np.ndarray:
        return np.concatenate([self.alpha, self.beta])


def phase_energy(which: str, F, d0, cfg: LaminateConfig):
    """Scaled phase energy with its analytic gradients ``(e, dF, dd0)``."""
    if which == "a":
        km, ke = 1.0, 1.0
    elif which == "b":
        km, ke = cfg.f_m, cfg.f_e
    else:
        raise ValueError(f"unknown phase {which!r}")
    F = np.asarray(F, dtype=float)
    d0 = np.asarray(d0, dtype=float)
    J = det(F)
    if np.any(~(J > 0.0)):
        raise NonPositiveDeterminant("phase deformation left GL+(3)")
    H = cofactor(F)
    d = F @ d0
    I1, I2, I5 = np.sum(F * F), np.sum(H * H), d @ d
    e = km * (0.5 * I1 + 0.5 * cfg.mu2 * I2 + 0.5 * cfg.lam * (J - 1.0) ** 2) + I5 / (2.0 * ke * J)
    dF = km * (F + cfg.mu2 * cross(H, F) + cfg.lam * (J - 1.0) * H) \
        + (2.0 * np.outer(d, d0) / J - I5 * H / J ** 2) / (2.0 * ke)
    dd0 = F.T @ d / (ke * J)
    return e, dF, dd0


def micro_fields(F, d0, alpha, beta, cfg: LaminateConfig):
    """``(F_a, d0_a, F_b, d0_b)`` from macroscopic fields and jump amplitudes."""
    F = np.asarray(F, dtype=float)
    d0 = np.asarray(d0, dtype=float)
    jF = np.outer(alpha, cfg.l0)
    jd = cfg.T @ np.asarray(beta, dtype=float)
    return F + cfg.c_b * jF, d0 + cfg.c_b * jd, F - cfg.c_a * jF, d0 - cfg.c_a * jd


def _phase_states(F, d0, amp, cfg):
    Fa, da, Fb, db = micro_fields(F, d0, amp[:3], amp[3:], cfg)
    return phase_energy("a", Fa, da, cfg), phase_energy("b", Fb, db, cfg), (Fa, da, Fb, db)


def jump_residual(F, d0, amp, cfg: LaminateConfig) -> np.ndarray:
    (_, Pa, ea), (_, Pb, eb), _ = _phase_states(F, d0, amp, cfg)
    return np.concatenate([(Pa - Pb) @ cfg.l0, cfg.T.T @ (ea - eb)])


def _phase_block(which, Fp, dp, cfg, h):
    """5x5 Hessian of ``e(F + a (x) l0, d0 + T b)`` w.r.t. ``(a, b)`` by central differences."""
    T, l0 = cfg.T, cfg.l0
    K = np.empty((5, 5))
    for k in range(5):
        if k < 3:
            dF, dd = np.outer(np.eye(3)[k], l0), np.zeros(3)
        else:
            dF, dd = np.zeros((3, 3)), T[:, k - 3]
        _, Pp, ep = phase_energy(which, Fp + h * dF, dp + h * dd, cfg)
        _, Pm, em = phase_energy(which, Fp - h * dF, dp - h * dd, cfg)
        K[:, k] = np.concatenate([(Pp - Pm) @ l0, T.T @ (ep - em)]) / (2.0 * h)
    return K


def jump_hessian(F, d0, amp, cfg: LaminateConfig, h: float = 1e-6) -> np.ndarray:
    """``c_b K^a + c_a K^b``; the electric block uses the d0-d0 second derivative."""
    Fa, da, Fb, db = micro_fields(F, d0, amp[:3], amp[3:], cfg)
    return cfg.c_b * _phase_block("a", Fa, da, cfg, h) + cfg.c_a * _phase_block("b", Fb, db, cfg, h)


def solve_amplitudes(F, d0, cfg: LaminateConfig, init: AmplitudeState | None = None,
                     tol: float = 1e-10, max_iter: int = 50, max_halvings: int = 20) -> AmplitudeState:
    """Newton-Raphson on the jump conditions.

    A supplied ``init`` competes with the zero guess; whichever has the smaller
    residual starts the iteration.  Near states where zero amplitudes are almost
    exact, the previous step's amplitudes would otherwise cost an extra iteration.
    """
    F = np.asarray(F, dtype=float)
    d0 = np.asarray(d0, dtype=float)

    def evaluate(x):
        try:
            (_, Pa, ea), (_, Pb, eb), _ = _phase_states(F, d0, x, cfg)
        except NonPositiveDeterminant:
            return None, np.inf
        r = np.concatenate([(Pa - Pb) @ cfg.l0, cfg.T.T @ (ea - eb)])
        return r, max(1.0, np.linalg.norm(Pa), np.linalg.norm(Pb))

    amp = np.zeros(5)
    r, scale = evaluate(amp)
    if init is not None:
        guess = init.vector().astype(float)
        rg, sg = evaluate(guess)
        if rg is not None and (r is None or np.linalg.norm(rg) < np.linalg.norm(r)):
            amp, r, scale = guess, rg, sg
    if r is None:
        raise LaminateError("initial guess leaves GL+(3) in a phase")
    norm = np.linalg.norm(r)
    for it in range(max_iter + 1):
        if norm <= tol:
            return AmplitudeState(amp[:3].copy(), amp[3:].copy(), it, norm)
        if it == max_iter:
            break
        K = jump_hessian(F, d0, amp, cfg)
        try:
            step = -np.linalg.solve(K, r)
        except np.linalg.LinAlgError as exc:
            raise SingularHessian(f"singular jump Hessian at iteration {it}",
                                  AmplitudeState(amp[:3], amp[3:], it, norm)) from exc
        t = 1.0
        for _ in range(max_halvings + 1):
            r_new, scale_new = evaluate(amp + t * step)
            if r_new is not None and np.linalg.norm(r_new) < norm:
                break
            t *= 0.5
        else:
            # round-off floor of large stresses: accept the scaled tolerance
            if norm <= tol * scale:
                return AmplitudeState(amp[:3].copy(), amp[3:].copy(), it, norm)
            raise LaminateError(f"line search failed at iteration {it} (|r| = {norm:.3e})",
                                AmplitudeState(amp[:3], amp[3:], it, norm))
        amp = amp + t * step
        r, scale, norm = r_new, scale_new, np.linalg.norm(r_new)
    raise LaminateError(f"no convergence after {max_iter} iterations (|r| = {norm:.3e})",
                        AmplitudeState(amp[:3], amp[3:], max_iter, norm))


def effective_response(F, d0, cfg: LaminateConfig, init: AmplitudeState | None = None, **solver_kw):
    """Effective ``(e, P, e0, state)`` at the converged amplitudes."""
    state = solve_amplitudes(F, d0, cfg, init, **solver_kw)
    (ea_, Pa, ea), (eb_, Pb, eb), _ = _phase_states(F, d0, state.vector(), cfg)
    ca, cb = cfg.c_a, cfg.c_b
    return ca * ea_ + cb * eb_, ca * Pa + cb * Pb, ca * ea + cb * eb, state


# --- load paths ----------------------------------------------------------------------

E = np.eye(3)
UNIAXIAL = (-0.3, 0.5)
SHEAR = (-0.5, 0.5)
D0_MAX = 2.0


def _uniaxial(g):
    return E + g * np.outer(E[0], E[0])


def _shear(g):
    return E + g * np.outer(E[0], E[2])


def _sweep(F_of, lo, hi, steps):
    g = np.linspace(lo, hi, steps)
    return np.array([F_of(x) for x in g]), np.zeros((steps, 3))


def _electric(F_fixed, axis, steps):
    s = np.linspace(0.0, D0_MAX, steps)
    return np.repeat(F_fixed[None], steps, axis=0), s[:, None] * E[axis]


def _biaxial(steps):
    t = np.linspace(0.0, 1.0, steps)
    g = UNIAXIAL[0] + t * (UNIAXIAL[1] - UNIAXIAL[0])
    F = np.array([E + x * (np.outer(E[0], E[0]) + np.outer(E[1], E[1])) for x in g])
    return F, D0_MAX * t[:, None] * E[2]


def _shear_tension(steps):
    s = np.linspace(0.0, 1.0, steps)
    F = np.array([E + 0.3 * x * np.outer(E[0], E[0]) + 0.4 * x * np.outer(E[0], E[2]) for x in s])
    return F, D0_MAX * s[:, None] * (E[0] + E[2]) / np.sqrt(2.0)


PATHS = {
    "uniaxial": lambda n: _sweep(_uniaxial, *UNIAXIAL, n),
    "shear": lambda n: _sweep(_shear, *SHEAR, n),
    "uniaxial_min_dX1": lambda n: _electric(_uniaxial(UNIAXIAL[0]), 0, n),
    "uniaxial_min_dX3": lambda n: _electric(_uniaxial(UNIAXIAL[0]), 2, n),
    "uniaxial_max_dX1": lambda n: _electric(_uniaxial(UNIAXIAL[1]), 0, n),
    "uniaxial_max_dX3": lambda n: _electric(_uniaxial(UNIAXIAL[1]), 2, n),
    "shear_min_dX1": lambda n: _electric(_shear(SHEAR[0]), 0, n),
    "shear_min_dX3": lambda n: _electric(_shear(SHEAR[0]), 2, n),
    "shear_max_dX1": lambda n: _electric(_shear(SHEAR[1]), 0, n),
    "shear_max_dX3": lambda n: _electric(_shear(SHEAR[1]), 2, n),
    "biaxial": _biaxial,
    "shear_tension": _shear_tension,
}
CALIBRATION_PATHS = tuple(list(PATHS)[:10])
TEST_PATHS = ("biaxial", "shear_tension")


def load_paths(kind: str, steps: int = 100) -> list[tuple[str, np.ndarray, np.ndarray]]:
    """``(name, F, d0)`` triples for ``calib``, ``test`` or a single path name."""
    if steps < 2:
        raise ValueError("a load path needs at least two steps")
    if kind == "calib":
        names = CALIBRATION_PATHS
    elif kind == "test":
        names = TEST_PATHS
    elif kind in PATHS:
        names = (kind,)
    else:
        raise ValueError(f"unknown load path kind {kind!r}")
    return [(name, *PATHS[name](steps)) for name in names]


def homogenize_path(F, d0, cfg: LaminateConfig, warm_start: bool = True, name: str = "path"):
    """Effective response along one path; returns ``(e, P, e0, states)``."""
    n = len(F)
    e, P, e0 = np.empty(n), np.empty((n, 3, 3)), np.empty((n, 3))
    states, prev = [], None
    for k in range(n):
        try:
            e[k], P[k], e0[k], st = effective_response(F[k], d0[k], cfg, prev if warm_start else None)
        except LaminateError as exc:
            raise LaminateError(f"path {name}, step {k}: {exc}", exc.state) from exc
        states.append(st)
        prev = st
    return e, P, e0, states


def laminate_dataset(cfg: LaminateConfig | None = None, kind: str = "calib", steps: int = 100,
                     warm_start: bool = True) -> Dataset:
    cfg = cfg or LaminateConfig()
    paths = []
    for name, F, d0 in load_paths(kind, steps):
        _, P, e0, _ = homogenize_path(F, d0, cfg, warm_start, name)
        paths.append(LoadPath(name, F, d0, P, e0))
    return Dataset(paths)
