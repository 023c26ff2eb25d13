"""Softplus feed-forward networks, convex (ICNN) and unconstrained (FFNN).

Inputs are batched as ``(N, n0)``.  Hidden layers use Softplus, the output layer
is linear.  Besides the usual gradients this module provides the parameter
gradient of ``v . grad_x f(x)``, which is what a loss on energy *derivatives*
needs: it is obtained by pushing the tangent ``v`` forward through the network
and back-propagating through both the primal and the tangent recursion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def softplus(x):
    x = np.asarray(x, dtype=float)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))


@dataclass
class NetworkParams:
    """Weights ``W[h]`` of shape ``(n[h+1], n[h])``, biases ``b[h]`` and non-negativity flags."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    nonneg: list[bool]

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [W.shape[0] for W in self.weights]

    @property
    def n_params(self) -> int:
        return sum(W.size + b.size for W, b in zip(self.weights, self.biases))

    def copy(self) -> NetworkParams:
        return NetworkParams([W.copy() for W in self.weights], [b.copy() for b in self.biases],
                             list(self.nonneg))

    def arrays(self) -> list[np.ndarray]:
        """Flat list ``[W0, b0, W1, b1, ...]`` (views, not copies)."""
        return [a for pair in zip(self.weights, self.biases) for a in pair]

    def with_arrays(self, arrays) -> NetworkParams:
        return NetworkParams(list(arrays[0::2]), list(arrays[1::2]), list(self.nonneg))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    def from_vector(self, vec: np.ndarray) -> NetworkParams:
        out, pos = [], 0
        for a in self.arrays():
            out.append(np.asarray(vec[pos:pos + a.size], dtype=float).reshape(a.shape).copy())
            pos += a.size
        return self.with_arrays(out)

    def to_dict(self) -> dict:
        return {
            "layer_sizes": self.layer_sizes,
            "nonneg_flags": list(self.nonneg),
            "activation": ["softplus"] * (len(self.weights) - 1) + ["linear"],
            "weights": [W.tolist() for W in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> NetworkParams:
        weights = [np.array(W, dtype=float).reshape(m, n) for W, n, m in
                   zip(d["weights"], d["layer_sizes"][:-1], d["layer_sizes"][1:])]
        biases = [np.array(b, dtype=float) for b in d["biases"]]
        return cls(weights, biases, [bool(f) for f in d["nonneg_flags"]])


# IcnnParams / FfnnParams differ only in their flags
IcnnParams = FfnnParams = NetworkParams


def glorot_uniform(rng: np.random.Generator, n_out: int, n_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-limit, limit, size=(n_out, n_in))


def init_network(sizes, rng: np.random.Generator, convex: bool) -> NetworkParams:
    """Glorot-uniform weights, zero biases; convex nets are projected once."""
    sizes = list(sizes)
    weights = [glorot_uniform(rng, m, n) for n, m in zip(sizes[:-1], sizes[1:])]
    biases = [np.zeros(m) for m in sizes[1:]]
    p = NetworkParams(weights, biases, [convex] * len(weights))
    return project_nonneg(p) if convex else p


def init_icnn(sizes, rng: np.random.Generator) -> NetworkParams:
    if sizes[-1] != 1:
        raise ValueError("energy networks have a scalar output")
    return init_network(sizes, rng, convex=True)


def init_ffnn(sizes, rng: np.random.Generator) -> NetworkParams:
    return init_network(sizes, rng, convex=False)


def project_nonneg(p: NetworkParams) -> NetworkParams:
    """Clamp every constrained weight at zero; biases untouched."""
    return NetworkParams([np.maximum(W, 0.0) if flag else W.copy() for W, flag in zip(p.weights, p.nonneg)],
                         [b.copy() for b in p.biases], list(p.nonneg))


def _as_batch(p: NetworkParams, x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[-1] != p.weights[0].shape[1]:
        raise ValueError(f"input width {x.shape[-1]} != {p.weights[0].shape[1]}")
    return x, single


def _primal(p: NetworkParams, x):
    """Pre-activations ``z[h]`` and activations ``a[h]`` (``a[0] = x``)."""
    a, zs = [x], []
    last = len(p.weights) - 1
    for h, (W, b) in enumerate(zip(p.weights, p.biases)):
        z = a[-1] @ W.T + b
        zs.append(z)
        a.append(z if h == last else softplus(z))
    return zs, a


def forward(p: NetworkParams, x) -> np.ndarray:
    """Network output, ``(N, n_out)`` for batched input or ``(n_out,)`` for a single input."""
    x, single = _as_batch(p, x)
    out = _primal(p, x)[1][-1]
    return out[0] if single else out


def grad_input(p: NetworkParams, x) -> np.ndarray:
    """``df/dx`` of a scalar-output network."""
    if p.weights[-1].shape[0] != 1:
        raise ValueError("grad_input needs a scalar-output network")
    x, single = _as_batch(p, x)
    zs, _ = _primal(p, x)
    g = np.ones((x.shape[0], 1))
    for h in range(len(p.weights) - 1, -1, -1):
        if h != len(p.weights) - 1:
            g = g * sigmoid(zs[h])
        g = g @ p.weights[h]
    return g[0] if single else g


def grad_params(p: NetworkParams, x, out_sens=None, input_grad_sens=None) -> list[np.ndarray]:
    """Gradient of ``sum(out_sens * f(x)) + sum(input_grad_sens * df/dx)`` w.r.t. parameters.

    Returns arrays ordered like :meth:`NetworkParams.arrays`.  ``input_grad_sens``
    is only meaningful for scalar-output networks.
    """
    x, _ = _as_batch(p, x)
    N = x.shape[0]
    L = len(p.weights)
    n_out = p.weights[-1].shape[0]
    zs, acts = _primal(p, x)

    use_tangent = input_grad_sens is not None
    if use_tangent:
        if n_out != 1:
            raise ValueError("input-gradient sensitivities need a scalar-output network")
        v = np.asarray(input_grad_sens, dtype=float).reshape(N, x.shape[1])
        zd, ad = [], [v]
        for h, W in enumerate(p.weights):
            z_dot = ad[-1] @ W.T
            zd.append(z_dot)
            ad.append(z_dot if h == L - 1 else sigmoid(zs[h]) * z_dot)

    abar = np.zeros((N, n_out)) if out_sens is None else np.asarray(out_sens, dtype=float).reshape(N, n_out)
    adbar = np.ones((N, 1)) if use_tangent else None

    grads: list[np.ndarray] = [None] * (2 * L)
    for h in range(L - 1, -1, -1):
        W = p.weights[h]
        if h == L - 1:
            zbar = abar
            zdbar = adbar
        else:
            s = sigmoid(zs[h])
            zbar = abar * s
            if use_tangent:
                zbar = zbar + adbar * zd[h] * s * (1.0 - s)
                zdbar = adbar * s
        gW = zbar.T @ acts[h]
        if use_tangent:
            gW = gW + zdbar.T @ ad[h]
        grads[2 * h] = gW
        grads[2 * h + 1] = zbar.sum(axis=0)
        if h > 0:
            abar = zbar @ W
            if use_tangent:
                adbar = zdbar @ W
    return grads


def constraint_violation(p: NetworkParams) -> float:
    """Most negative constrained weight (0 when all constraints hold)."""
    worst = 0.0
    for W, flag in zip(p.weights, p.nonneg):
        if flag and W.size:
            worst = min(worst, float(W.min()))
    return worst
