"""Concentric sampling of stretch tensors and scaled electric displacements."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analytic import TiPotentialParams, ti_response
from .data import Dataset, LoadPath
from .tensors import sym_funm

_S2, _S6 = np.sqrt(2.0), np.sqrt(6.0)


def dev_basis() -> np.ndarray:
    """Five symmetric, traceless, Frobenius-orthonormal 3x3 tensors, shape ``(5, 3, 3)``."""
    B = np.zeros((5, 3, 3))
    B[0] = np.diag([1.0, -1.0, 0.0]) / _S2
    B[1] = np.diag([1.0, 1.0, -2.0]) / _S6
    for k, (i, j) in enumerate([(0, 1), (0, 2), (1, 2)], start=2):
        B[k, i, j] = B[k, j, i] = 1.0 / _S2
    return B


def dev_coordinates(M: np.ndarray) -> np.ndarray:
    return np.einsum("kij,...ij->...k", dev_basis(), M)


def random_dev_directions(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points on the unit sphere in R^5."""
    c = rng.standard_normal((n, 5))
    return c / np.linalg.norm(c, axis=1, keepdims=True)


def sample_stretch(direction, amplitude: float, J: float = 1.0) -> np.ndarray:
    """``U = J**(1/3) expm(amplitude * sum_i c_i B_i)``."""
    if amplitude < 0.0 or J <= 0.0:
        raise ValueError("amplitude must be >= 0 and J > 0")
    D = np.einsum("k,kij->ij", np.asarray(direction, dtype=float), dev_basis())
    return J ** (1.0 / 3.0) * sym_funm(amplitude * D, np.exp)


def sphere_points(n: int) -> np.ndarray:
    """Fibonacci lattice on the unit sphere, shape ``(n, 3)``."""
    if n < 1:
        raise ValueError("need at least one point")
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = np.pi * (3.0 - np.sqrt(5.0)) * np.arange(n)
    pts = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


@dataclass
class SamplingPlan:
    n_dev_directions: int = 30
    dev_amplitudes: np.ndarray = field(default_factory=lambda: np.linspace(0.1, 1.0, 50))
    J_values: tuple[float, ...] = (1.0,)
    n_sphere_dirs: int = 20
    d0_amplitudes: np.ndarray = field(default_factory=lambda: np.linspace(0.0, 4.0, 50))
    seed: int = 0
    full_grid: bool = False

    def __post_init__(self):
        self.dev_amplitudes = np.sort(np.asarray(self.dev_amplitudes, dtype=float))
        self.d0_amplitudes = np.sort(np.asarray(self.d0_amplitudes, dtype=float))
        if self.n_dev_directions < 1 or self.n_sphere_dirs < 1:
            raise ValueError("need at least one direction of each kind")
        if np.any(self.dev_amplitudes < 0.0) or any(J <= 0.0 for J in self.J_values):
            raise ValueError("amplitudes must be >= 0 and J > 0")
        if not self.full_grid and len(self.dev_amplitudes) != len(self.d0_amplitudes):
            raise ValueError("paired sampling needs equally many stretch and d0 amplitudes")

    def n_paths(self) -> int:
        n = self.n_dev_directions * self.n_sphere_dirs * len(self.J_values)
        return n * len(self.d0_amplitudes) if self.full_grid else n


def build_ti_dataset(plan: SamplingPlan, potential: TiPotentialParams | None = None,
                     prefix: str = "ti") -> Dataset:
    """Sub-datasets of fixed deviatoric and electric directions.

    Paired mode walks stretch amplitude ``k`` together with d0 amplitude ``k``;
    full-grid mode emits one path over the stretch amplitudes per d0 amplitude.
    """
    potential = potential or TiPotentialParams()
    rng = np.random.default_rng(plan.seed)
    dirs = random_dev_directions(plan.n_dev_directions, rng)
    sph = sphere_points(plan.n_sphere_dirs)
    multi_J = len(plan.J_values) > 1
    paths = []
    for i, c in enumerate(dirs):
        for jj, J in enumerate(plan.J_values):
            U = np.array([sample_stretch(c, a, J) for a in plan.dev_amplitudes])
            for s, n in enumerate(sph):
                base = f"{prefix}-d{i:03d}" + (f"-j{jj}" if multi_J else "") + f"-s{s:02d}"
                if plan.full_grid:
                    for m, amp in enumerate(plan.d0_amplitudes):
                        d0 = np.broadcast_to(amp * n, (len(U), 3)).copy()
                        P, e0 = ti_response(U, d0, potential)
                        paths.append(LoadPath(f"{base}-a{m:02d}", U, d0, P, e0))
                else:
                    d0 = plan.d0_amplitudes[:, None] * n
                    P, e0 = ti_response(U, d0, potential)
                    paths.append(LoadPath(base, U, d0, P, e0))
    return Dataset(paths)
