"""Electro-mechanical invariants with analytic first derivatives.

All evaluators broadcast over leading axes of ``F`` (``(..., 3, 3)``) and ``d0``
(``(..., 3)``).  Electric inputs are expected in scaled units, which is why the
electric invariants carry an ``h`` suffix in their identifiers.

Identifiers
-----------
``I1`` ``I2`` ``J`` ``negJ`` ``I4h`` ``I5h``
    isotropic set, ``negJ = -J`` feeds the unconstrained direction of ``J``
``Ib1`` ``Ib2`` ``Ib2s``
    isochoric set, ``Ib2 = Ib2s**1.5`` (``Ib2s`` is not polyconvex)
``Jti1`` ``Jti2`` ``Jti3h`` ``Jti1s`` ``Jti2s``
    transversely isotropic set and the mixed forms ``Jti1 + c_mix * I1``
``Jcub1`` ``Jcub2`` ``Jcub3h``
    cubic set
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations, product

import numpy as np

from .tensors import (IDENTITY, axis_rotation, check_gl_plus, cofactor, cross, frob2, matvec,
                      outer, tmatvec)


@dataclass(frozen=True)
class TiStructuralTensor:
    n: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    c_mix: float = 0.35

    def __post_init__(self):
        n = np.asarray(self.n, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise ValueError("preferred direction must be a unit vector")
        object.__setattr__(self, "n", n)

    @property
    def G(self) -> np.ndarray:
        return np.outer(self.n, self.n)


@dataclass(frozen=True)
class CubStructuralTensor:
    axes: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        a = np.asarray(self.axes, dtype=float)
        if a.shape != (3, 3) or np.max(np.abs(a @ a.T - IDENTITY)) > 1e-12:
            raise ValueError("cubic axes must be three orthonormal vectors (rows)")
        object.__setattr__(self, "axes", a)

    def fourth_order(self) -> np.ndarray:
        """``sum_i a_i (x) a_i (x) a_i (x) a_i``."""
        return np.einsum("ai,aj,ak,al->ijkl", self.axes, self.axes, self.axes, self.axes)


@dataclass
class InvariantBundle:
    """Invariant values and their derivatives, stacked along the invariant axis.

    ``values`` has shape ``(..., k)``, ``dF`` ``(..., k, 3, 3)`` and ``dd0``
    ``(..., k, 3)``.
    """

    names: list[str]
    values: np.ndarray
    dF: np.ndarray
    dd0: np.ndarray

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[..., self.names.index(name)]

    def select(self, names) -> InvariantBundle:
        idx = [self.names.index(n) for n in names]
        return InvariantBundle(list(names), self.values[..., idx], self.dF[..., idx, :, :],
                               self.dd0[..., idx, :])


def _bundle(entries: dict[str, tuple], shape) -> InvariantBundle:
    names = list(entries)
    zF = np.zeros(shape + (3, 3))
    zd = np.zeros(shape + (3,))
    vals = np.stack([np.broadcast_to(entries[n][0], shape) for n in names], axis=-1)
    dF = np.stack([zF if entries[n][1] is None else np.broadcast_to(entries[n][1], shape + (3, 3))
                   for n in names], axis=-3)
    dd0 = np.stack([zd if entries[n][2] is None else np.broadcast_to(entries[n][2], shape + (3,))
                    for n in names], axis=-2)
    return InvariantBundle(names, vals, dF, dd0)


def _prep(F, d0):
    F = np.asarray(F, dtype=float)
    d0 = np.asarray(d0, dtype=float)
    shape = np.broadcast_shapes(F.shape[:-2], d0.shape[:-1])
    F = np.broadcast_to(F, shape + (3, 3))
    d0 = np.broadcast_to(d0, shape + (3,))
    J = check_gl_plus(F)
    return F, d0, J, shape


def iso_invariants(F, d0) -> InvariantBundle:
    F, d0, J, shape = _prep(F, d0)
    H = cofactor(F)
    d = matvec(F, d0)
    return _bundle(
        {
            "I1": (frob2(F), 2.0 * F, None),
            "I2": (frob2(H), 2.0 * cross(H, F), None),
            "J": (J, H, None),
            "negJ": (-J, -H, None),
            "I4h": (np.einsum("...i,...i->...", d0, d0), None, 2.0 * d0),
            # d0-derivative goes through d = F d0
            "I5h": (np.einsum("...i,...i->...", d, d), 2.0 * outer(d, d0), 2.0 * tmatvec(F, d)),
        },
        shape,
    )


def isochoric_invariants(F) -> InvariantBundle:
    F = np.asarray(F, dtype=float)
    shape = F.shape[:-2]
    J = check_gl_plus(F)
    H = cofactor(F)
    I1, I2 = frob2(F), frob2(H)
    dI1, dI2 = 2.0 * F, 2.0 * cross(H, F)
    Je = J[..., None, None]
    I1e, I2e = I1[..., None, None], I2[..., None, None]
    return _bundle(
        {
            "Ib1": (J ** (-2 / 3) * I1, Je ** (-2 / 3) * dI1 - (2 / 3) * Je ** (-5 / 3) * I1e * H, None),
            "Ib2": (J ** -2 * I2 ** 1.5,
                    1.5 * Je ** -2 * np.sqrt(I2e) * dI2 - 2.0 * Je ** -3 * I2e ** 1.5 * H, None),
            "Ib2s": (J ** (-4 / 3) * I2, Je ** (-4 / 3) * dI2 - (4 / 3) * Je ** (-7 / 3) * I2e * H, None),
        },
        shape,
    )


def ti_invariants(F, d0, st: TiStructuralTensor | None = None) -> InvariantBundle:
    st = st or TiStructuralTensor()
    F, d0, _, shape = _prep(F, d0)
    G = st.G
    H = cofactor(F)
    FG, HG = F @ G, H @ G
    J1, J2 = frob2(FG), frob2(HG)
    dJ1 = 2.0 * FG @ G.T
    dJ2 = cross(2.0 * HG @ G.T, F)
    I1, I2 = frob2(F), frob2(H)
    c = st.c_mix
    return _bundle(
        {
            "Jti1": (J1, dJ1, None),
            "Jti2": (J2, dJ2, None),
            "Jti3h": (np.einsum("...i,ij,...j->...", d0, G, d0), None, matvec(G + G.T, d0)),
            "Jti1s": (J1 + c * I1, dJ1 + 2.0 * c * F, None),
            "Jti2s": (J2 + c * I2, dJ2 + 2.0 * c * cross(H, F), None),
        },
        shape,
    )


def cub_invariants(F, d0, st: CubStructuralTensor | None = None) -> InvariantBundle:
    st = st or CubStructuralTensor()
    F, d0, _, shape = _prep(F, d0)
    H = cofactor(F)
    J1 = np.zeros(shape)
    J2 = np.zeros(shape)
    J3 = np.zeros(shape)
    dJ1 = np.zeros(shape + (3, 3))
    dJH = np.zeros(shape + (3, 3))
    dJ3 = np.zeros(shape + (3,))
    for a in st.axes:
        Fa, Ha = F @ a, H @ a
        cF = np.einsum("...i,...i->...", Fa, Fa)
        cH = np.einsum("...i,...i->...", Ha, Ha)
        da = d0 @ a
        J1 += cF ** 2
        J2 += cH ** 2
        J3 += da ** 2
        dJ1 += 4.0 * cF[..., None, None] * outer(Fa, np.broadcast_to(a, Fa.shape))
        dJH += 4.0 * cH[..., None, None] * outer(Ha, np.broadcast_to(a, Ha.shape))
        dJ3 += 2.0 * da[..., None] * a
    return _bundle(
        {"Jcub1": (J1, dJ1, None), "Jcub2": (J2, cross(dJH, F), None), "Jcub3h": (J3, None, dJ3)},
        shape,
    )


def i6(H, d0):
    """``I6 = |H d0|^2`` with H and d0 as independent arguments.

    Returns ``(value, dH, dd0)``.  Not polyconvex; kept as a negative test.
    """
    H = np.asarray(H, dtype=float)
    d0 = np.asarray(d0, dtype=float)
    Hd = matvec(H, d0)
    return np.einsum("...i,...i->...", Hd, Hd), 2.0 * outer(Hd, d0), 2.0 * tmatvec(H, Hd)


ISO_NAMES = ("I1", "I2", "J", "negJ", "I4h", "I5h")
ISOCHORIC_NAMES = ("Ib1", "Ib2", "Ib2s")
TI_NAMES = ("Jti1", "Jti2", "Jti3h", "Jti1s", "Jti2s")
CUB_NAMES = ("Jcub1", "Jcub2", "Jcub3h")
ALL_NAMES = ISO_NAMES + ISOCHORIC_NAMES + TI_NAMES + CUB_NAMES


def evaluate(names, F, d0, ti: TiStructuralTensor | None = None,
             cub: CubStructuralTensor | None = None) -> InvariantBundle:
    """Evaluate the named invariants, in the given order."""
    names = list(names)
    unknown = set(names) - set(ALL_NAMES)
    if unknown:
        raise KeyError(f"unknown invariants: {sorted(unknown)}")
    parts = [iso_invariants(F, d0)]
    if set(names) & set(ISOCHORIC_NAMES):
        parts.append(isochoric_invariants(np.broadcast_to(F, parts[0].values.shape[:-1] + (3, 3))))
    if set(names) & set(TI_NAMES):
        parts.append(ti_invariants(F, d0, ti))
    if set(names) & set(CUB_NAMES):
        parts.append(cub_invariants(F, d0, cub))
    full = InvariantBundle(
        sum((p.names for p in parts), []),
        np.concatenate([p.values for p in parts], axis=-1),
        np.concatenate([p.dF for p in parts], axis=-3),
        np.concatenate([p.dd0 for p in parts], axis=-2),
    )
    return full.select(names)


def evaluate_on_V(names, F, H, J, d0, d, ti: TiStructuralTensor | None = None,
                  cub: CubStructuralTensor | None = None) -> np.ndarray:
    """Invariant values with ``(F, H, J, d0, d)`` treated as independent arguments."""
    ti = ti or TiStructuralTensor()
    cub = cub or CubStructuralTensor()
    G = ti.G
    J = np.asarray(J, dtype=float)
    if np.any(J <= 0.0):
        raise ValueError("J must be positive")
    I1, I2 = frob2(F), frob2(H)
    dot = lambda x, y: np.einsum("...i,...i->...", x, y)  # noqa: E731
    table = {
        "I1": lambda: I1,
        "I2": lambda: I2,
        "J": lambda: J,
        "negJ": lambda: -J,
        "I4h": lambda: dot(d0, d0),
        "I5h": lambda: dot(d, d),
        "Ib1": lambda: J ** (-2 / 3) * I1,
        "Ib2": lambda: J ** -2 * I2 ** 1.5,
        "Ib2s": lambda: J ** (-4 / 3) * I2,
        "Jti1": lambda: frob2(F @ G),
        "Jti2": lambda: frob2(H @ G),
        "Jti3h": lambda: np.einsum("...i,ij,...j->...", d0, G, d0),
        "Jti1s": lambda: frob2(F @ G) + ti.c_mix * I1,
        "Jti2s": lambda: frob2(H @ G) + ti.c_mix * I2,
        "Jcub1": lambda: sum(dot(F @ a, F @ a) ** 2 for a in cub.axes),
        "Jcub2": lambda: sum(dot(H @ a, H @ a) ** 2 for a in cub.axes),
        "Jcub3h": lambda: sum((d0 @ a) ** 2 for a in cub.axes),
    }
    return np.stack([table[n]() for n in names], axis=-1)


def cubic_group() -> np.ndarray:
    """The 48 signed permutation matrices (full octahedral group)."""
    mats = []
    for perm in permutations(range(3)):
        for signs in product((1.0, -1.0), repeat=3):
            Q = np.zeros((3, 3))
            for row, (col, s) in enumerate(zip(perm, signs)):
                Q[row, col] = s
            mats.append(Q)
    return np.array(mats)


def ti_group_samples(n: np.ndarray, angles) -> np.ndarray:
    """Rotations about ``n`` by the given angles, each also composed with the reflection ``n -> -n``."""
    n = np.asarray(n, dtype=float)
    reflect = IDENTITY - 2.0 * np.outer(n, n)
    out = []
    for t in angles:
        R = axis_rotation(n, t)
        out.extend([R, R @ reflect])
    return np.array(out)
