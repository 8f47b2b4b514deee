"""Supervised framing of a series and the MLP / LSTM experiment drivers."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..data import DataError, Panel, ScalerParams, TimeSeries, apply_scaler, as_array, fit_scaler, invert_scaler
from ..diagnostics import descriptive_stats
from ..metrics import rmse
from .network import LstmNetwork, Mlp
from .training import TrainConfig, TrainHistory, predict_stream, train_network


@dataclass
class SupervisedSet:
    inputs: np.ndarray  # (n_samples, n_features)
    targets: np.ndarray
    feature_names: tuple
    target_index: np.ndarray = field(default=None, repr=False)  # position of each target in the source

    def __len__(self):
        return len(self.targets)

    def rows(self, mask) -> "SupervisedSet":
        return SupervisedSet(self.inputs[mask], self.targets[mask], self.feature_names,
                             self.target_index[mask])


def to_supervised(series, n_lags: int = 1, covariates=None) -> SupervisedSet:
    """Row for target ``y[t]``: ``y[t-1], ..., y[t-n_lags]`` then covariates at ``t-1``."""
    y = as_array(series)
    if n_lags < 1:
        raise ValueError("n_lags must be at least 1")
    if len(y) <= n_lags:
        raise DataError(f"series of length {len(y)} is too short for {n_lags} lags")
    n = len(y)
    cols = [y[n_lags - j:n - j] for j in range(1, n_lags + 1)]
    name = getattr(series, "name", "y")
    names = [f"{name}_lag{j}" for j in range(1, n_lags + 1)]
    if covariates is not None:
        cx = as_array(covariates)
        cx = cx[:, None] if cx.ndim == 1 else cx
        if len(cx) != n:
            raise DataError("covariates must share the series calendar")
        cols += list(cx[n_lags - 1:n - 1].T)
        cov_names = getattr(covariates, "names", None) or [f"x{k}" for k in range(cx.shape[1])]
        names += [f"{c}_lag1" for c in cov_names]
    return SupervisedSet(np.column_stack(cols), y[n_lags:].copy(), tuple(names),
                         np.arange(n_lags, n))


def _split_point(n: int, split) -> int:
    cut = int(round(split * n)) if isinstance(split, float) else int(split)
    if not 0 < cut < n:
        raise DataError(f"split leaves an empty train or test segment (cut {cut} of {n})")
    return cut


@dataclass
class MlpExperimentResult:
    rmse: dict  # neurons -> (repeats,) test RMSE in original units
    table: dict  # neurons -> descriptive stats of the repeat RMSEs
    histories: dict  # neurons -> list of TrainHistory
    baseline_rmse: float  # train-mean forecast on the test segment
    predictions: dict = field(default_factory=dict)  # neurons -> list of test forecasts
    test_index: np.ndarray = None  # positions of the test targets in the series


def run_mlp_experiment(series, neurons=(1, 3, 5), split=0.8, batch_size: int = 2,
                       epochs: int = 20, repeats: int = 8, seed: int = 0,
                       learning_rate: float = 1e-3) -> MlpExperimentResult:
    """One-hidden-layer ReLU MLP, ``n_lags`` equal to the hidden width.

    The series is scaled to (-1, 1) with train-segment extremes; test RMSE is
    in original units from one-step forecasts fed with actual lags.
    """
    y = as_array(series)
    cut = _split_point(len(y), split)
    scaler = fit_scaler(y[:cut], "minmax", (-1.0, 1.0))
    ys = apply_scaler(y, scaler)
    out_rmse, hists, preds = {}, {}, {}
    for width in neurons:
        sup = to_supervised(ys, width)
        tr, te = sup.rows(sup.target_index < cut), sup.rows(sup.target_index >= cut)
        actual = y[te.target_index]
        scores, runs, fc = [], [], []
        for r in range(repeats):
            cfg = TrainConfig(epochs=epochs, batch_size=batch_size, learning_rate=learning_rate,
                              seed=seed * 1000 + width * 100 + r)
            model = Mlp(width, (width,), "relu", seed=cfg.seed)
            model, hist = train_network(model, tr, te, cfg)
            pred = invert_scaler(model.predict(te.inputs), scaler)
            scores.append(rmse(actual, pred))
            runs.append(hist)
            fc.append(pred)
        out_rmse[width] = np.array(scores)
        hists[width] = runs
        preds[width] = fc
    table = {w: descriptive_stats(v) for w, v in out_rmse.items()}
    baseline = rmse(y[cut:], np.full(len(y) - cut, y[:cut].mean()))
    return MlpExperimentResult(out_rmse, table, hists, baseline, preds, np.arange(cut, len(y)))


REGIMES = {
    "stateless": dict(units=(50,), config=TrainConfig(
        epochs=1000, batch_size=100, dropout_rate=0.2, early_stopping_patience=10, loss="mse")),
    "stateful_stacked": dict(units=(50, 50), config=TrainConfig(
        epochs=1000, batch_size=100, dropout_rate=0.2, early_stopping_patience=10, loss="mse",
        stateful=True)),
    "multivariate": dict(units=(25,), config=TrainConfig(
        epochs=500, batch_size=50, loss="mae")),
}


@dataclass
class RegimeResult:
    regime: str
    train_pred: TimeSeries
    test_pred: TimeSeries
    train_rmse: float
    test_rmse: float
    history: TrainHistory
    model: LstmNetwork
    scaler: ScalerParams
    raw_test_output: np.ndarray  # network outputs on the scaled axis
    manifest: dict


def run_lstm_regime(regime: str, series: TimeSeries, covariates: Panel | None = None,
                    split=0.8, n_lags: int = 1, units: tuple | None = None,
                    config: TrainConfig | None = None, **overrides) -> RegimeResult:
    """Train one of the three LSTM set-ups and score it in original units.

    Inputs are min-max scaled to (0, 1) on the training segment.  The test
    segment doubles as the validation set that early stopping monitors.
    ``overrides`` replace individual :class:`TrainConfig` fields.
    """
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {sorted(REGIMES)}")
    if regime == "multivariate" and covariates is None:
        raise DataError("the multivariate regime needs a covariate panel")
    spec = REGIMES[regime]
    units = tuple(units or spec["units"])
    cfg = replace(config or spec["config"], **overrides)
    y = as_array(series)
    cut = _split_point(len(y), split)
    y_scaler = fit_scaler(y[:cut], "minmax", (0.0, 1.0))
    ys = apply_scaler(y, y_scaler)
    cov_s = None
    if regime == "multivariate":
        cx = as_array(covariates)
        cov_s = apply_scaler(cx, fit_scaler(cx[:cut], "minmax", (0.0, 1.0)))
    sup = to_supervised(ys, n_lags, cov_s)
    tr, te = sup.rows(sup.target_index < cut), sup.rows(sup.target_index >= cut)

    model = LstmNetwork(sup.inputs.shape[1], units, cfg.dropout_rate, seed=cfg.seed)
    model, hist = train_network(model, tr, te, cfg)

    train_raw, state = predict_stream(model, tr.inputs, cfg.batch_size, cfg.stateful)
    test_raw, _ = predict_stream(model, te.inputs, cfg.batch_size, cfg.stateful,
                                 state if cfg.stateful else None)
    dates = getattr(series, "dates", np.datetime64("2000-01-03") + np.arange(len(y)))
    train_pred = invert_scaler(train_raw, y_scaler)
    test_pred = invert_scaler(test_raw, y_scaler)
    manifest = {"regime": regime, "units": list(units), "n_lags": n_lags, "split": cut,
                "features": list(sup.feature_names),
                **{k: getattr(cfg, k) for k in TrainConfig.__dataclass_fields__}}
    return RegimeResult(
        regime,
        TimeSeries(f"{regime}_train", dates[tr.target_index], train_pred),
        TimeSeries(f"{regime}_test", dates[te.target_index], test_pred),
        rmse(y[tr.target_index], train_pred), rmse(y[te.target_index], test_pred),
        hist, model, y_scaler, test_raw, manifest)
