"""Physics-augmented energy ``e = ICNN(invariants) + P_vol(J)`` and its gradients.

Everything here works in scaled units: ``F`` is dimensionless, ``d0`` means the
scaled electric displacement, and the outputs are the scaled stress and
electric field.  :func:`scale` / :func:`unscale` convert from and to raw units.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import icnn
from .invariants import CubStructuralTensor, TiStructuralTensor, evaluate, evaluate_on_V
from .tensors import check_gl_plus, cofactor, det

COMPRESSIBLE = "compressible"
INCOMPRESSIBLE = "incompressible"

# name -> (invariant identifiers, volumetric tag, default penalty)
SELECTORS: dict[str, tuple[tuple[str, ...], str, float]] = {
    "iso_compressible": (("I1", "I2", "J", "negJ", "I4h", "I5h"), COMPRESSIBLE, 1.0),
    "iso_incompressible": (("Ib1", "Ib2", "J", "negJ", "I4h", "I5h"), INCOMPRESSIBLE, 500.0),
    "ti": (("I1", "I2", "J", "negJ", "I4h", "I5h", "Jti1", "Jti2", "Jti3h"), COMPRESSIBLE, 25.0),
    "ti_model_a": (("Ib1", "Ib2", "J", "negJ", "I5h", "Jti1s", "Jti2s"), INCOMPRESSIBLE, 500.0),
    "cubic": (("I1", "I2", "J", "negJ", "I4h", "I5h", "Jcub1", "Jcub2", "Jcub3h"), COMPRESSIBLE, 1.0),
}

# selectors whose invariants are built from the full F (no isochoric split)
FULL_F_SELECTORS = ("iso_compressible", "ti", "cubic")


def pvol(J, tag: str, alpha: float):
    """Volumetric penalty and its first two J-derivatives."""
    J = np.asarray(J, dtype=float)
    if np.any(~(J > 0.0)):
        raise ValueError("J must be positive")
    if alpha <= 0.0:
        raise ValueError("penalty must be positive")
    if tag == COMPRESSIBLE:
        g = J + 1.0 / J - 2.0
        dg = 1.0 - 1.0 / J ** 2
        return alpha * g ** 2, 2.0 * alpha * g * dg, 2.0 * alpha * (dg ** 2 + g * 2.0 / J ** 3)
    if tag == INCOMPRESSIBLE:
        return alpha * (J - 1.0) ** 2, 2.0 * alpha * (J - 1.0), np.full_like(J, 2.0 * alpha)
    raise ValueError(f"unknown volumetric tag {tag!r}")


@dataclass
class ConstitutiveModel:
    selector: str
    params: icnn.NetworkParams
    invariant_names: tuple[str, ...] = ()
    vol_tag: str = COMPRESSIBLE
    alpha: float = 1.0
    mu1: float = 1.0
    eps1: float = 1.0
    ti: TiStructuralTensor = field(default_factory=TiStructuralTensor)
    cub: CubStructuralTensor = field(default_factory=CubStructuralTensor)

    def __post_init__(self):
        if not self.invariant_names:
            self.invariant_names = SELECTORS[self.selector][0]
        self.invariant_names = tuple(self.invariant_names)
        if self.params.layer_sizes[0] != len(self.invariant_names):
            raise ValueError("network input width does not match the invariant list")
        if self.params.layer_sizes[-1] != 1:
            raise ValueError("energy network must have a scalar output")
        if self.alpha <= 0.0:
            raise ValueError("penalty must be positive")

    @classmethod
    def create(cls, selector: str, hidden=(8,), seed: int = 0, **kw) -> ConstitutiveModel:
        names, tag, alpha = SELECTORS[selector]
        names = kw.pop("invariant_names", names)
        rng = np.random.default_rng(seed)
        params = icnn.init_icnn([len(names), *hidden, 1], rng)
        kw.setdefault("vol_tag", tag)
        kw.setdefault("alpha", alpha)
        return cls(selector=selector, params=params, invariant_names=tuple(names), **kw)

    def with_params(self, params: icnn.NetworkParams) -> ConstitutiveModel:
        return replace(self, params=params)

    def invariants(self, F, d0):
        return evaluate(self.invariant_names, F, d0, self.ti, self.cub)

    def to_dict(self) -> dict:
        d = {"schema_version": 1, "kind": "energy", "selector": self.selector}
        d.update(self.params.to_dict())
        d.update({
            "invariant_names": list(self.invariant_names),
            "scaling": {"mu1": self.mu1, "eps1": self.eps1},
            "volumetric": {"tag": self.vol_tag, "alpha": self.alpha},
            "structural": {"ti_n": self.ti.n.tolist(), "ti_c_mix": self.ti.c_mix,
                           "cub_axes": self.cub.axes.tolist()},
        })
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ConstitutiveModel:
        st = d.get("structural", {})
        return cls(
            selector=d["selector"],
            params=icnn.NetworkParams.from_dict(d),
            invariant_names=tuple(d["invariant_names"]),
            vol_tag=d["volumetric"]["tag"],
            alpha=float(d["volumetric"]["alpha"]),
            mu1=float(d["scaling"]["mu1"]),
            eps1=float(d["scaling"]["eps1"]),
            ti=TiStructuralTensor(np.array(st.get("ti_n", [0.0, 0.0, 1.0])), float(st.get("ti_c_mix", 0.35))),
            cub=CubStructuralTensor(np.array(st.get("cub_axes", np.eye(3).tolist()))),
        )


def _nn_input(values: np.ndarray) -> tuple[np.ndarray, tuple]:
    shape = values.shape[:-1]
    return values.reshape(-1, values.shape[-1]), shape


def energy(m: ConstitutiveModel, F, d0_hat) -> np.ndarray:
    b = m.invariants(F, d0_hat)
    x, shape = _nn_input(b.values)
    psi = icnn.forward(m.params, x)[:, 0].reshape(shape)
    return psi + pvol(det(F), m.vol_tag, m.alpha)[0]


def stress_and_field(m: ConstitutiveModel, F, d0_hat) -> tuple[np.ndarray, np.ndarray]:
    """Scaled first Piola-Kirchhoff stress and material electric field by the chain rule."""
    F = np.asarray(F, dtype=float)
    b = m.invariants(F, d0_hat)
    x, shape = _nn_input(b.values)
    g = icnn.grad_input(m.params, x).reshape(shape + (-1,))
    J = check_gl_plus(F)
    P = np.einsum("...k,...kij->...ij", g, b.dF) + pvol(J, m.vol_tag, m.alpha)[1][..., None, None] * cofactor(F)
    e0 = np.einsum("...k,...ki->...i", g, b.dd0)
    return P, e0


def energy_on_V(m: ConstitutiveModel, F, H, J, d0, d) -> np.ndarray:
    """Energy as a function of the independent arguments ``(F, H, J, d0, d)``."""
    vals = evaluate_on_V(m.invariant_names, F, H, J, d0, d, m.ti, m.cub)
    x, shape = _nn_input(vals)
    return icnn.forward(m.params, x)[:, 0].reshape(shape) + pvol(J, m.vol_tag, m.alpha)[0]


def consistent_V(F, d0):
    """The argument set ``(F, H, J, d0, F d0)`` generated by one deformation state."""
    F = np.asarray(F, dtype=float)
    d0 = np.asarray(d0, dtype=float)
    return F, cofactor(F), det(F), d0, np.einsum("...ij,...j->...i", F, d0)


@dataclass
class DirectModel:
    """Uninformed model: an FFNN mapping ``(C, d0)`` straight to ``(P, e0)``."""

    params: icnn.NetworkParams
    mu1: float = 1.0
    eps1: float = 1.0
    selector: str = "direct"

    @classmethod
    def create(cls, hidden=(16, 16), seed: int = 0, **kw) -> DirectModel:
        rng = np.random.default_rng(seed)
        return cls(params=icnn.init_ffnn([12, *hidden, 12], rng), **kw)

    def with_params(self, params: icnn.NetworkParams) -> DirectModel:
        return replace(self, params=params)

    def to_dict(self) -> dict:
        d = {"schema_version": 1, "kind": "direct", "selector": self.selector}
        d.update(self.params.to_dict())
        d.update({"invariant_names": [], "scaling": {"mu1": self.mu1, "eps1": self.eps1}})
        return d

    @classmethod
    def from_dict(cls, d: dict) -> DirectModel:
        return cls(params=icnn.NetworkParams.from_dict(d), mu1=float(d["scaling"]["mu1"]),
                   eps1=float(d["scaling"]["eps1"]))


def direct_features(F, d0_hat) -> np.ndarray:
    F = np.asarray(F, dtype=float)
    C = np.einsum("...ki,...kj->...ij", F, F)
    return np.concatenate([C.reshape(C.shape[:-2] + (9,)), np.asarray(d0_hat, dtype=float)], axis=-1)


def direct_response(m: DirectModel, F, d0_hat) -> tuple[np.ndarray, np.ndarray]:
    x = direct_features(F, d0_hat)
    shape = x.shape[:-1]
    out = icnn.forward(m.params, x.reshape(-1, 12)).reshape(shape + (12,))
    return out[..., :9].reshape(shape + (3, 3)), out[..., 9:]


def response(m, F, d0_hat) -> tuple[np.ndarray, np.ndarray]:
    """``(P_hat, e0_hat)`` for either model kind."""
    if isinstance(m, DirectModel):
        return direct_response(m, F, d0_hat)
    return stress_and_field(m, F, d0_hat)


def model_from_dict(d: dict):
    if d.get("schema_version") != 1:
        raise ValueError(f"unsupported checkpoint schema {d.get('schema_version')!r}")
    return DirectModel.from_dict(d) if d.get("kind") == "direct" else ConstitutiveModel.from_dict(d)


def save_model(m, path) -> None:
    # json writes floats with repr, which round-trips doubles exactly
    Path(path).write_text(json.dumps(m.to_dict(), indent=1) + "\n", encoding="utf-8")


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# --- scaling -------------------------------------------------------------------------

@dataclass(frozen=True)
class ScaledState:
    """A state in either raw or scaled units; ``P`` and ``e0`` are optional."""

    F: np.ndarray
    d0: np.ndarray
    P: np.ndarray | None = None
    e0: np.ndarray | None = None


def _check_scales(mu1, eps1):
    if not (mu1 > 0.0 and eps1 > 0.0):
        raise ValueError("scaling constants must be positive")


def scale(state: ScaledState, mu1: float, eps1: float) -> ScaledState:
    """Raw -> scaled: ``d0/sqrt(mu1 eps1)``, ``P/mu1``, ``sqrt(mu1/eps1) e0``."""
    _check_scales(mu1, eps1)
    return ScaledState(
        F=np.asarray(state.F, dtype=float),
        d0=np.asarray(state.d0, dtype=float) / np.sqrt(mu1 * eps1),
        P=None if state.P is None else np.asarray(state.P, dtype=float) / mu1,
        e0=None if state.e0 is None else np.sqrt(mu1 / eps1) * np.asarray(state.e0, dtype=float),
    )


def unscale(state: ScaledState, mu1: float, eps1: float) -> ScaledState:
    _check_scales(mu1, eps1)
    return ScaledState(
        F=np.asarray(state.F, dtype=float),
        d0=np.asarray(state.d0, dtype=float) * np.sqrt(mu1 * eps1),
        P=None if state.P is None else np.asarray(state.P, dtype=float) * mu1,
        e0=None if state.e0 is None else np.asarray(state.e0, dtype=float) / np.sqrt(mu1 / eps1),
    )
