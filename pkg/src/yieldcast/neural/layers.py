"""LSTM cell and dense layer: forward steps, sequence passes and their gradients.

Gates are stacked in the order forget, input, candidate, output, so for a
cell with ``U`` units the input weights ``wx`` have shape ``(4U, F)``, the
recurrent weights ``wh`` have shape ``(4U, U)`` and ``b`` has length ``4U``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

GATES = ("f", "i", "c", "o")


def glorot_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


@dataclass
class LstmCell:
    wx: np.ndarray
    wh: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        u = self.wh.shape[1]
        if self.wh.shape != (4 * u, u) or self.wx.shape[0] != 4 * u or self.b.shape != (4 * u,):
            raise ValueError("inconsistent LSTM weight shapes")

    @property
    def units(self) -> int:
        return self.wh.shape[1]

    @property
    def n_features(self) -> int:
        return self.wx.shape[1]

    def gate_weights(self, gate: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(w_gx, w_gh, b_g) for gate in f, i, c, o; views into the stacked arrays."""
        u = self.units
        s = slice(GATES.index(gate) * u, (GATES.index(gate) + 1) * u)
        return self.wx[s], self.wh[s], self.b[s]

    @classmethod
    def initialize(cls, n_features: int, units: int, rng: np.random.Generator,
                   forget_bias: float = 1.0) -> "LstmCell":
        b = np.zeros(4 * units)
        b[:units] = forget_bias
        return cls(glorot_uniform(rng, 4 * units, n_features),
                   glorot_uniform(rng, 4 * units, units), b)


def lstm_gates(cell: LstmCell, x, h_prev):
    """Forget, input, candidate and output activations for one step."""
    x = np.asarray(x, dtype=float)
    h_prev = np.asarray(h_prev, dtype=float)
    if x.shape[-1] != cell.n_features or h_prev.shape[-1] != cell.units:
        raise ValueError(f"expected {cell.n_features} features and {cell.units} units, "
                         f"got {x.shape[-1]} and {h_prev.shape[-1]}")
    z = x @ cell.wx.T + h_prev @ cell.wh.T + cell.b
    u = cell.units
    return (expit(z[..., :u]), expit(z[..., u:2 * u]),
            np.tanh(z[..., 2 * u:3 * u]), expit(z[..., 3 * u:]))


def lstm_step(cell: LstmCell, x_t, h_prev, c_prev):
    """One step: ``C = f C_prev + i C'`` and ``h = o tanh(C)``."""
    f, i, g, o = lstm_gates(cell, x_t, h_prev)
    c = f * np.asarray(c_prev, dtype=float) + i * g
    return o * np.tanh(c), c


def lstm_forward(cell: LstmCell, X, h0, c0, x_mask=None, h_mask=None):
    """Run a (B, T, F) batch through the cell.

    ``x_mask`` (B, F) and ``h_mask`` (B, U) are fixed-over-time dropout
    masks, already scaled.  Returns the hidden sequence (B, T, U), the final
    state and a cache for :func:`lstm_backward`.
    """
    B, T, _ = X.shape
    u = cell.units
    H = np.empty((B, T, u))
    h, c = h0, c0
    cache = []
    for t in range(T):
        xt = X[:, t] if x_mask is None else X[:, t] * x_mask
        hp = h if h_mask is None else h * h_mask
        z = xt @ cell.wx.T + hp @ cell.wh.T + cell.b
        f, i, o = expit(z[:, :u]), expit(z[:, u:2 * u]), expit(z[:, 3 * u:])
        g = np.tanh(z[:, 2 * u:3 * u])
        c_prev = c
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        H[:, t] = h
        cache.append((xt, hp, c_prev, f, i, g, o, tc))
    return H, (h, c), (cache, x_mask, h_mask)


def lstm_backward(cell: LstmCell, dH, cache):
    """Gradients of a truncated sequence pass; no gradient enters from beyond T."""
    steps, x_mask, h_mask = cache
    B, T, u = dH.shape
    dwx, dwh, db = np.zeros_like(cell.wx), np.zeros_like(cell.wh), np.zeros_like(cell.b)
    dX = np.empty((B, T, cell.n_features))
    dh_next = np.zeros((B, u))
    dc_next = np.zeros((B, u))
    for t in range(T - 1, -1, -1):
        xt, hp, c_prev, f, i, g, o, tc = steps[t]
        dh = dH[:, t] + dh_next
        dc = dc_next + dh * o * (1 - tc * tc)
        dz = np.concatenate([dc * c_prev * f * (1 - f), dc * g * i * (1 - i),
                             dc * i * (1 - g * g), dh * tc * o * (1 - o)], axis=1)
        dwx += dz.T @ xt
        dwh += dz.T @ hp
        db += dz.sum(axis=0)
        dxt = dz @ cell.wx
        dX[:, t] = dxt if x_mask is None else dxt * x_mask
        dhp = dz @ cell.wh
        dh_next = dhp if h_mask is None else dhp * h_mask
        dc_next = dc * f
    return {"wx": dwx, "wh": dwh, "b": db}, dX


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray
    activation: str = "linear"

    def __post_init__(self):
        if self.activation not in ("relu", "linear"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weights.shape[0] != self.bias.shape[0]:
            raise ValueError("weights and bias disagree on the output size")

    @classmethod
    def initialize(cls, n_in: int, n_out: int, rng: np.random.Generator,
                   activation: str = "linear") -> "DenseLayer":
        return cls(glorot_uniform(rng, n_out, n_in), np.zeros(n_out), activation)

    def forward(self, x):
        a = x @ self.weights.T + self.bias
        out = np.maximum(a, 0.0) if self.activation == "relu" else a
        return out, (x, a)

    def backward(self, dout, cache):
        x, a = cache
        if self.activation == "relu":
            dout = dout * (a > 0)
        flat_x = x.reshape(-1, x.shape[-1])
        flat_d = dout.reshape(-1, dout.shape[-1])
        grads = {"weights": flat_d.T @ flat_x, "bias": flat_d.sum(axis=0)}
        return grads, dout @ self.weights
