"""Mini-batch training with RMSprop, early stopping and chronological batches."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import LstmNetwork, Mlp


class TrainingDivergedError(FloatingPointError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"training diverged at epoch {epoch} (loss {loss})")
        self.epoch = epoch


def mse(yhat, y):
    e = yhat - y
    return float(np.mean(e * e)), 2.0 * e / e.size


def mae(yhat, y):
    e = yhat - y
    return float(np.mean(np.abs(e))), np.sign(e) / e.size


LOSSES = {"mse": mse, "mae": mae}


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 2
    learning_rate: float = 1e-3
    rho: float = 0.9
    epsilon: float = 1e-8
    dropout_rate: float = 0.0
    early_stopping_patience: int | None = None
    loss: str = "mse"
    stateful: bool = False
    seed: int = 0
    restore_best: bool = True

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be at least 1")
        if self.early_stopping_patience is not None and self.early_stopping_patience < 1:
            raise ValueError("patience must be at least 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {sorted(LOSSES)}")


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    stopped_epoch: int = 0
    best_epoch: int = 0

    @property
    def epochs_run(self) -> int:
        return len(self.train_loss)


class RMSprop:
    """``acc <- rho acc + (1 - rho) g^2``; ``w <- w - lr g / (sqrt(acc) + eps)``."""

    def __init__(self, lr: float = 1e-3, rho: float = 0.9, eps: float = 1e-8):
        self.lr, self.rho, self.eps = lr, rho, eps
        self.acc = {}

    def step(self, params: dict, grads: dict):
        for name, w in params.items():
            g = grads[name]
            acc = self.acc.setdefault(name, np.zeros_like(w))
            acc *= self.rho
            acc += (1 - self.rho) * g * g
            w -= self.lr * g / (np.sqrt(acc) + self.eps)


class EarlyStopping:
    """Stop once ``patience`` consecutive epochs fail to improve on the best loss.

    Epochs are counted from 1; if the best loss came at epoch ``b`` the stop
    happens at epoch ``b + patience``.
    """

    def __init__(self, patience: int):
        self.patience = patience
        self.best = np.inf
        self.best_epoch = 0
        self.wait = 0

    def update(self, loss: float, epoch: int) -> bool:
        if loss < self.best:
            self.best, self.best_epoch, self.wait = loss, epoch, 0
            return False
        self.wait += 1
        return self.wait >= self.patience


def _chunks(n: int, size: int):
    return [slice(s, min(s + size, n)) for s in range(0, n, size)]


def predict_stream(model: LstmNetwork, X, batch_size: int, stateful: bool, states=None):
    """Predictions for a chronological stream of rows.

    Stateful networks run the whole stream from ``states``; stateless ones
    restart from zero state at every ``batch_size`` chunk, as in training.
    """
    X = np.asarray(X, dtype=float)[None]
    if stateful:
        yhat, finals = model.predict(X, states)
        return yhat[0], finals
    out = np.empty(X.shape[1])
    finals = None
    for sl in _chunks(X.shape[1], batch_size):
        yh, finals = model.predict(X[:, sl])
        out[sl] = yh[0]
    return out, finals


def _predict(model, X, config):
    if isinstance(model, Mlp):
        return model.predict(X)
    return predict_stream(model, X, config.batch_size, config.stateful)[0]


def _epoch_mlp(model, X, y, config, opt, loss_fn):
    losses, sizes = [], []
    for sl in _chunks(len(y), config.batch_size):
        yhat, cache = model.forward(X[sl])
        val, d = loss_fn(yhat, y[sl])
        opt.step(model.params, model.backward(d, cache))
        losses.append(val)
        sizes.append(sl.stop - sl.start)
    return float(np.average(losses, weights=sizes))


def _epoch_lstm(model, X, y, config, opt, loss_fn, rng):
    losses, sizes = [], []
    states = None
    Xs = X[None]
    for sl in _chunks(len(y), config.batch_size):
        yhat, cache, finals = model.forward(Xs[:, sl], states if config.stateful else None,
                                            train=True, rng=rng)
        val, d = loss_fn(yhat[0], y[sl])
        opt.step(model.params, model.backward(d[None], cache))
        # truncated BPTT: the carried state is treated as a constant input
        states = [(h.copy(), c.copy()) for h, c in finals]
        losses.append(val)
        sizes.append(sl.stop - sl.start)
    model.states = states if config.stateful else None
    return float(np.average(losses, weights=sizes))


def train_network(model, train, validation=None, config: TrainConfig = TrainConfig()):
    """Fit ``model`` on a chronological :class:`SupervisedSet`.

    An MLP sees rows in consecutive mini-batches.  An LSTM treats the rows as
    one stream cut into chunks of ``batch_size`` steps; ``config.stateful``
    decides whether the state survives from one chunk to the next.  The
    training loss per epoch is the size-weighted mean of the batch losses.
    Early stopping monitors the validation loss (the training loss when no
    validation set is given).
    """
    X, y = np.asarray(train.inputs, float), np.asarray(train.targets, float)
    if len(y) == 0:
        raise ValueError("empty training set")
    if validation is not None and len(validation.targets) == 0:
        raise ValueError("empty validation set")
    loss_fn = LOSSES[config.loss]
    opt = RMSprop(config.learning_rate, config.rho, config.epsilon)
    rng = np.random.default_rng([config.seed, 1])
    is_lstm = isinstance(model, LstmNetwork)
    if is_lstm:
        model.dropout = config.dropout_rate
    stopper = EarlyStopping(config.early_stopping_patience) if config.early_stopping_patience else None
    hist = TrainHistory()
    best_params = None

    for epoch in range(1, config.epochs + 1):
        if is_lstm:
            tr = _epoch_lstm(model, X, y, config, opt, loss_fn, rng)
        else:
            tr = _epoch_mlp(model, X, y, config, opt, loss_fn)
        hist.train_loss.append(tr)
        if validation is not None:
            vx, vy = np.asarray(validation.inputs, float), np.asarray(validation.targets, float)
            if is_lstm and config.stateful:
                _, warm = predict_stream(model, X, config.batch_size, True)
                vhat = predict_stream(model, vx, config.batch_size, True, warm)[0]
            else:
                vhat = _predict(model, vx, config)
            monitored = loss_fn(vhat, vy)[0]
            hist.val_loss.append(monitored)
        else:
            monitored = tr
        if not np.isfinite(tr) or not np.isfinite(monitored):
            raise TrainingDivergedError(epoch, monitored if np.isfinite(tr) else tr)
        hist.stopped_epoch = epoch
        if stopper is not None:
            stop = stopper.update(monitored, epoch)
            if stopper.best_epoch == epoch and config.restore_best:
                best_params = {k: v.copy() for k, v in model.params.items()}
            if stop:
                break
    if stopper is not None:
        hist.best_epoch = stopper.best_epoch
        if best_params is not None:
            for k, v in best_params.items():
                model.params[k][...] = v
    else:
        hist.best_epoch = hist.stopped_epoch
    return model, hist
