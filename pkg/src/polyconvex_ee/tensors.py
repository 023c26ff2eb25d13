"""3x3 tensor kinematics.

Every routine accepts arrays of shape ``(..., 3, 3)`` (tensors) or ``(..., 3)``
(vectors) and broadcasts over the leading axes.  Index convention is row-major,
``F[..., i, I]`` with ``i`` spatial and ``I`` material.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Levi-Civita symbol
LEVI_CIVITA = np.zeros((3, 3, 3))
LEVI_CIVITA[0, 1, 2] = LEVI_CIVITA[1, 2, 0] = LEVI_CIVITA[2, 0, 1] = 1.0
LEVI_CIVITA[0, 2, 1] = LEVI_CIVITA[2, 1, 0] = LEVI_CIVITA[1, 0, 2] = -1.0

IDENTITY = np.eye(3)


class NonPositiveDeterminant(ValueError):
    """Raised when a deformation gradient leaves GL+(3)."""


def cross(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    r"""Tensor cross product :math:`(A \times B)_{iI} = \epsilon_{ijk}\epsilon_{IJK} A_{jJ} B_{kK}`."""
    return np.einsum("ijk,IJK,...jJ,...kK->...iI", LEVI_CIVITA, LEVI_CIVITA, A, B)


def cofactor(F: np.ndarray) -> np.ndarray:
    """Cofactor ``H = 1/2 F x F`` from signed 2x2 minors (valid for singular F too)."""
    F = np.asarray(F, dtype=float)
    H = np.empty_like(F)
    for i in range(3):
        i1, i2 = (i + 1) % 3, (i + 2) % 3
        for j in range(3):
            j1, j2 = (j + 1) % 3, (j + 2) % 3
            H[..., i, j] = F[..., i1, j1] * F[..., i2, j2] - F[..., i1, j2] * F[..., i2, j1]
    return H


def det(F: np.ndarray) -> np.ndarray:
    """Determinant by cofactor expansion along the first row."""
    F = np.asarray(F, dtype=float)
    return (
        F[..., 0, 0] * (F[..., 1, 1] * F[..., 2, 2] - F[..., 1, 2] * F[..., 2, 1])
        - F[..., 0, 1] * (F[..., 1, 0] * F[..., 2, 2] - F[..., 1, 2] * F[..., 2, 0])
        + F[..., 0, 2] * (F[..., 1, 0] * F[..., 2, 1] - F[..., 1, 1] * F[..., 2, 0])
    )


def frob2(A: np.ndarray) -> np.ndarray:
    """Squared Frobenius norm over the last two axes."""
    return np.einsum("...ij,...ij->...", A, A)


def outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...j->...ij", a, b)


def matvec(A: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...j->...i", A, x)


def tmatvec(A: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``A^T x``."""
    return np.einsum("...ji,...j->...i", A, x)


def check_gl_plus(F: np.ndarray) -> np.ndarray:
    """Return ``det F`` or raise if any determinant is non-positive."""
    J = det(F)
    if np.any(~(J > 0.0)):
        raise NonPositiveDeterminant(f"det F must be positive, got min {np.min(J)!r}")
    return J


@dataclass(frozen=True)
class Stretch:
    """Right stretch ``U`` with its split ``U = J**(1/3) * U_bar``."""

    U: np.ndarray
    J: float
    U_bar: np.ndarray
    R: np.ndarray


def sym_eig(S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a symmetric 3x3 matrix (ascending eigenvalues)."""
    return np.linalg.eigh(0.5 * (S + np.swapaxes(S, -1, -2)))


def sym_funm(S: np.ndarray, fun) -> np.ndarray:
    """Apply a scalar function to a symmetric matrix through its eigenvalues."""
    w, V = sym_eig(S)
    return np.einsum("...ik,...k,...jk->...ij", V, fun(w), V)


def polar_stretch(F: np.ndarray) -> Stretch:
    """Polar decomposition ``F = R U`` of a single tensor, with the isochoric split of ``U``."""
    F = np.asarray(F, dtype=float)
    J = float(check_gl_plus(F))
    U = sym_funm(F.T @ F, np.sqrt)
    U = 0.5 * (U + U.T)
    R = F @ np.linalg.inv(U)
    return Stretch(U=U, J=J, U_bar=U * J ** (-1.0 / 3.0), R=R)


def random_rotation(rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar-distributed proper rotations from normalized random quaternions."""
    q = rng.standard_normal((1 if size is None else size, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    w, x, y, z = q.T
    Q = np.stack(
        [
            np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)], -1),
            np.stack([2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)], -1),
            np.stack([2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)], -1),
        ],
        axis=-2,
    )
    return Q[0] if size is None else Q


def axis_rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation by ``angle`` about the unit vector ``axis``."""
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    K = np.array([[0.0, -n[2], n[1]], [n[2], 0.0, -n[0]], [-n[1], n[0], 0.0]])
    return IDENTITY + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def random_deformation(rng: np.random.Generator, size: int, scale: float = 0.3) -> np.ndarray:
    """Random deformation gradients ``I + scale * N(0, 1)`` restricted to det >= 0.2."""
    out = np.empty((size, 3, 3))
    filled = 0
    while filled < size:
        F = IDENTITY + scale * rng.standard_normal((size, 3, 3))
        F = F[det(F) >= 0.2]
        take = min(len(F), size - filled)
        out[filled:filled + take] = F[:take]
        filled += take
    return out
