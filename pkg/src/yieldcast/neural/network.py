"""Trainable networks built from :mod:`.layers` with a flat parameter dictionary.

Both networks keep every tensor in ``params`` (insertion-ordered), so the
optimizer, the gradient check and the JSON manifest all see the same list.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .layers import DenseLayer, LstmCell, lstm_backward, lstm_forward

MANIFEST_FORMAT = "yieldcast-nn/1"


class Mlp:
    """Dense hidden layer(s) and a linear output unit."""

    kind = "mlp"

    def __init__(self, n_inputs: int, hidden: tuple = (1,), activation: str = "relu",
                 seed: int = 0):
        self.config = {"n_inputs": int(n_inputs), "hidden": [int(h) for h in hidden],
                       "activation": activation, "seed": int(seed)}
        rng = np.random.default_rng(seed)
        self.params = {}
        sizes = [n_inputs, *hidden, 1]
        for j, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
            act = activation if j < len(hidden) else "linear"
            layer = DenseLayer.initialize(a, b, rng, act)
            self.params[f"dense{j}.weights"] = layer.weights
            self.params[f"dense{j}.bias"] = layer.bias
        self._acts = [activation] * len(hidden) + ["linear"]

    def _layers(self):
        return [DenseLayer(self.params[f"dense{j}.weights"], self.params[f"dense{j}.bias"], a)
                for j, a in enumerate(self._acts)]

    def forward(self, X, train: bool = False, rng=None):
        caches = []
        a = np.asarray(X, dtype=float)
        for layer in self._layers():
            a, cache = layer.forward(a)
            caches.append(cache)
        return a[:, 0], caches

    def backward(self, dy, caches):
        grads = {}
        d = dy[:, None]
        for j in range(len(self._acts) - 1, -1, -1):
            g, d = self._layers()[j].backward(d, caches[j])
            grads[f"dense{j}.weights"] = g["weights"]
            grads[f"dense{j}.bias"] = g["bias"]
        return {k: grads[k] for k in self.params}

    def predict(self, X) -> np.ndarray:
        return self.forward(X)[0]


class LstmNetwork:
    """Stacked LSTM layers with a linear head applied at every time step.

    ``states`` holds the per-layer ``(h, C)`` carried between calls when the
    network is used statefully; :meth:`reset_states` zeroes it.
    """

    kind = "lstm"

    def __init__(self, n_features: int, units: tuple = (50,), dropout: float = 0.0,
                 seed: int = 0, forget_bias: float = 1.0):
        if not 0.0 <= dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        self.config = {"n_features": int(n_features), "units": [int(u) for u in units],
                       "dropout": float(dropout), "seed": int(seed),
                       "forget_bias": float(forget_bias)}
        self.dropout = float(dropout)
        rng = np.random.default_rng(seed)
        self.params = {}
        n_in = n_features
        for j, u in enumerate(units):
            cell = LstmCell.initialize(n_in, u, rng, forget_bias)
            self.params[f"lstm{j}.wx"] = cell.wx
            self.params[f"lstm{j}.wh"] = cell.wh
            self.params[f"lstm{j}.b"] = cell.b
            n_in = u
        head = DenseLayer.initialize(n_in, 1, rng)
        self.params["head.weights"] = head.weights
        self.params["head.bias"] = head.bias
        self.states = None

    @property
    def units(self) -> list:
        return self.config["units"]

    def cell(self, j: int) -> LstmCell:
        return LstmCell(self.params[f"lstm{j}.wx"], self.params[f"lstm{j}.wh"],
                        self.params[f"lstm{j}.b"])

    def zero_states(self, batch: int = 1):
        return [(np.zeros((batch, u)), np.zeros((batch, u))) for u in self.units]

    def reset_states(self):
        self.states = None

    def _masks(self, rng, batch):
        if not self.dropout or rng is None:
            return [(None, None)] * len(self.units)
        keep = 1.0 - self.dropout
        masks, n_in = [], self.config["n_features"]
        for u in self.units:
            mx = (rng.random((batch, n_in)) < keep) / keep
            mh = (rng.random((batch, u)) < keep) / keep
            masks.append((mx, mh))
            n_in = u
        return masks

    def forward(self, X, states=None, train: bool = False, rng=None):
        """(B, T, F) -> predictions (B, T); returns (yhat, cache, final_states)."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 3 or X.shape[2] != self.config["n_features"]:
            raise ValueError(f"expected (B, T, {self.config['n_features']}) input, got {X.shape}")
        B = X.shape[0]
        states = self.zero_states(B) if states is None else states
        masks = self._masks(rng, B) if train else [(None, None)] * len(self.units)
        caches, finals, a = [], [], X
        for j, (h0, c0) in enumerate(states):
            a, final, cache = lstm_forward(self.cell(j), a, h0, c0, *masks[j])
            caches.append(cache)
            finals.append(final)
        head = DenseLayer(self.params["head.weights"], self.params["head.bias"])
        out, head_cache = head.forward(a)
        return out[..., 0], (caches, head_cache), finals

    def backward(self, dY, cache):
        caches, head_cache = cache
        head = DenseLayer(self.params["head.weights"], self.params["head.bias"])
        g, d = head.backward(dY[..., None], head_cache)
        grads = {"head.weights": g["weights"], "head.bias": g["bias"]}
        for j in range(len(self.units) - 1, -1, -1):
            gj, d = lstm_backward(self.cell(j), d, caches[j])
            for name, val in gj.items():
                grads[f"lstm{j}.{name}"] = val
        return {k: grads[k] for k in self.params}

    def predict(self, X, states=None):
        yhat, _, finals = self.forward(X, states)
        return yhat, finals


def save_weights(model, path) -> Path:
    """Flat JSON manifest: model kind, constructor config and shape-tagged arrays."""
    doc = {
        "format": MANIFEST_FORMAT,
        "kind": model.kind,
        "config": model.config,
        "arrays": [{"name": k, "shape": list(v.shape), "data": v.ravel().tolist()}
                   for k, v in model.params.items()],
    }
    path = Path(path)
    path.write_text(json.dumps(doc))
    return path


def load_weights(path):
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != MANIFEST_FORMAT:
        raise ValueError(f"{path}: not a {MANIFEST_FORMAT} weight manifest")
    cfg = doc["config"]
    if doc["kind"] == "mlp":
        model = Mlp(cfg["n_inputs"], tuple(cfg["hidden"]), cfg["activation"], cfg["seed"])
    elif doc["kind"] == "lstm":
        model = LstmNetwork(cfg["n_features"], tuple(cfg["units"]), cfg["dropout"],
                            cfg["seed"], cfg["forget_bias"])
    else:
        raise ValueError(f"unknown model kind {doc['kind']!r}")
    for entry in doc["arrays"]:
        target = model.params[entry["name"]]
        arr = np.asarray(entry["data"], dtype=float).reshape(entry["shape"])
        if arr.shape != target.shape:
            raise ValueError(f"shape mismatch for {entry['name']}: {arr.shape} vs {target.shape}")
        target[...] = arr
    return model
