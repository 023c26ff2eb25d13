"""Closed-form transversely isotropic electro-elastic benchmark potential.

Evaluated in scaled form, so only parameter ratios to ``mu1`` and ``eps1`` enter
and the electric argument is the scaled displacement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .invariants import TiStructuralTensor, iso_invariants, isochoric_invariants, ti_invariants
from .tensors import cofactor


@dataclass(frozen=True)
class TiPotentialParams:
    mu1: float = 1.0
    mu2: float = 1.0
    mu3: float = 3.0
    lam: float = 1000.0
    eps1: float = 1.0
    eps2: float = 2.0
    a1: float = 2.0
    a2: float = 2.0
    n: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        if min(self.mu1, self.mu2, self.mu3, self.lam, self.eps1, self.eps2) <= 0.0:
            raise ValueError("all moduli must be positive")


def _parts(F, d0, p: TiPotentialParams):
    iso = iso_invariants(F, d0)
    isoc = isochoric_invariants(np.broadcast_to(F, iso.values.shape[:-1] + (3, 3)))
    ti = ti_invariants(F, d0, TiStructuralTensor(p.n, 0.0))
    return iso, isoc, ti


def ti_energy(F, d0, p: TiPotentialParams | None = None) -> np.ndarray:
    p = p or TiPotentialParams()
    iso, isoc, ti = _parts(F, d0, p)
    J = iso["J"]
    return (
        0.5 * isoc["Ib1"]
        + p.mu2 / (2 * p.mu1) * isoc["Ib2s"]
        - p.mu3 / p.mu1 * np.log(J)
        + iso["I5h"] / (2 * J)
        + p.mu3 / (2 * p.mu1) * (ti["Jti1"] ** p.a1 / p.a1 + ti["Jti2"] ** p.a2 / p.a2)
        + p.eps1 / (2 * p.eps2) * ti["Jti3h"]
        + p.lam / (2 * p.mu1) * (J - 1.0) ** 2
    )


def ti_response(F, d0, p: TiPotentialParams | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Scaled stress and electric field of :func:`ti_energy`."""
    p = p or TiPotentialParams()
    F = np.asarray(F, dtype=float)
    iso, isoc, ti = _parts(F, d0, p)
    k = lambda b, name: b.names.index(name)  # noqa: E731
    J = iso["J"]
    Je = J[..., None, None]
    H = cofactor(np.broadcast_to(F, iso.values.shape[:-1] + (3, 3)))
    I5 = iso["I5h"][..., None, None]
    dI5 = iso.dF[..., k(iso, "I5h"), :, :]
    J1 = ti["Jti1"][..., None, None]
    J2 = ti["Jti2"][..., None, None]
    P = (
        0.5 * isoc.dF[..., k(isoc, "Ib1"), :, :]
        + p.mu2 / (2 * p.mu1) * isoc.dF[..., k(isoc, "Ib2s"), :, :]
        - p.mu3 / p.mu1 * H / Je
        + dI5 / (2 * Je) - I5 / (2 * Je ** 2) * H
        + p.mu3 / (2 * p.mu1) * (J1 ** (p.a1 - 1) * ti.dF[..., k(ti, "Jti1"), :, :]
                                 + J2 ** (p.a2 - 1) * ti.dF[..., k(ti, "Jti2"), :, :])
        + p.lam / p.mu1 * (Je - 1.0) * H
    )
    e0 = iso.dd0[..., k(iso, "I5h"), :] / (2 * J[..., None]) + p.eps1 / (2 * p.eps2) * ti.dd0[..., k(ti, "Jti3h"), :]
    return P, e0
