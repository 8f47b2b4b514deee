"""Config-driven experiment suite: data assembly, model runs and the RMSE table.

Config files are YAML with a mandatory integer ``version``.  Minimal form::

    version: 1
    seed: 7
    output_dir: results
    data:
      files: {yieldsp: data/T10Y3M.csv}   # FRED CSVs, paths relative to the config
      panel: data/panel.csv               # or a ready panel (DATE + columns)
      missing_policy: drop
      derived: {d_yieldsp: {diff: yieldsp}}
      target: yieldsp
    window: {start: 1982-01-04, end: 2020-08-21}
    split: 0.8                            # fraction, row count or first test date
    granger: {effect: d_yieldsp, causes: [ted, vix], max_lag: 40}
    models:
      - {name: naive, kind: naive}
      - {name: arima_103, kind: arima, order: [1, 0, 3], refit: fixed_params}

Model kinds: ``naive``, ``arima``, ``sarimax`` (``exog``), ``var``
(``variables``, ``lags`` or ``max_lags``, ``target``), ``mlp`` (``neurons``,
``epochs``, ``repeats``, ``batch_size``) and ``lstm`` (``regime``,
``covariates`` and any training field).  Every model is scored on one-step
forecasts of the target level over the test segment.
"""

from __future__ import annotations

import json
import os
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import arima, var
from .data import (DataError, Panel, TimeSeries, align_panel, load_fred_csv, read_panel_csv,
                   write_table_csv)
from .diagnostics import granger_causality
from .metrics import rmse
from .neural import TrainConfig, run_lstm_regime, run_mlp_experiment

CONFIG_VERSION = 1
OUTPUT_ENV = "YIELDCAST_OUTPUT_DIR"
MODEL_KINDS = ("naive", "arima", "sarimax", "var", "mlp", "lstm")
_MASK64 = (1 << 64) - 1


class ConfigError(ValueError):
    pass


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def model_seed(master: int, name: str) -> int:
    """32-bit seed from the master seed and an FNV-1a hash of the model name.

    Each model's seed depends only on its own name, so adding or reordering
    models never changes another model's draws.
    """
    h = 0xCBF29CE484222325
    for byte in name.encode():
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return splitmix64((int(master) & _MASK64) ^ h) & 0xFFFFFFFF


@dataclass
class ExperimentConfig:
    data: dict
    models: list
    seed: int = 0
    split: object = 0.8
    window: dict = field(default_factory=dict)
    output_dir: Path = Path("results")
    granger: dict | None = None
    base_dir: Path = Path(".")
    version: int = CONFIG_VERSION

    @classmethod
    def from_dict(cls, doc: dict, base_dir=".") -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a mapping")
        version = doc.get("version")
        if version != CONFIG_VERSION:
            raise ConfigError(f"unsupported config version {version!r} (expected {CONFIG_VERSION})")
        base = Path(base_dir)
        data = dict(doc.get("data") or {})
        if "files" not in data and "panel" not in data:
            raise ConfigError("data needs 'files' or 'panel'")
        for p in [*(data.get("files") or {}).values(), *([data["panel"]] if "panel" in data else [])]:
            if not (base / p).exists():
                raise ConfigError(f"data file not found: {base / p}")
        models = list(doc.get("models") or [])
        names = [m.get("name") for m in models]
        if any(not n for n in names):
            raise ConfigError("every model needs a name")
        if len(set(names)) != len(names):
            raise ConfigError("model names must be unique")
        for m in models:
            if m.get("kind") not in MODEL_KINDS:
                raise ConfigError(f"model {m['name']}: kind must be one of {MODEL_KINDS}")
        split = doc.get("split", 0.8)
        if isinstance(split, float) and not 0 < split < 1:
            raise ConfigError("a fractional split must lie in (0, 1)")
        out = os.environ.get(OUTPUT_ENV) or doc.get("output_dir", "results")
        window = {k: str(v) for k, v in (doc.get("window") or {}).items()}
        return cls(data, models, int(doc.get("seed", 0)), split, window,
                   base / out if not Path(out).is_absolute() else Path(out),
                   doc.get("granger"), base, version)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        return cls.from_dict(yaml.safe_load(path.read_text()), path.parent)


@dataclass
class ModelOutcome:
    name: str
    kind: str
    status: str  # "ok" or "failed"
    test_rmse: float = np.nan
    runtime: float = 0.0
    n_test: int = 0
    error: str = ""
    artifacts: dict = field(default_factory=dict)
    predictions: dict = field(default_factory=dict, repr=False)


@dataclass
class ExperimentReport:
    outcomes: list
    warnings: list = field(default_factory=list)
    granger: dict = field(default_factory=dict)

    @property
    def all_ok(self) -> bool:
        return all(o.status == "ok" for o in self.outcomes)

    def ranked(self) -> list:
        ok = sorted((o for o in self.outcomes if o.status == "ok"), key=lambda o: o.test_rmse)
        return ok + [o for o in self.outcomes if o.status != "ok"]

    def table(self) -> dict:
        rows = self.ranked()
        return {
            "rank": [i + 1 for i in range(len(rows))],
            "model": [o.name for o in rows],
            "kind": [o.kind for o in rows],
            "status": [o.status for o in rows],
            "test_rmse": [float(o.test_rmse) for o in rows],
            "n_test": [o.n_test for o in rows],
        }

    def to_json(self) -> dict:
        return {
            "models": [{"name": o.name, "kind": o.kind, "status": o.status,
                        "test_rmse": None if np.isnan(o.test_rmse) else o.test_rmse,
                        "runtime_seconds": o.runtime, "n_test": o.n_test, "error": o.error,
                        "artifacts": o.artifacts} for o in self.ranked()],
            "warnings": self.warnings,
            "granger": self.granger,
        }


def load_data(config: ExperimentConfig) -> Panel:
    """Aligned, windowed panel with derived (differenced) columns appended."""
    d = config.data
    policy = d.get("missing_policy", "drop")
    parts = []
    if "panel" in d:
        parts.extend(read_panel_csv(config.base_dir / d["panel"], policy).columns)
    for name, p in (d.get("files") or {}).items():
        parts.append(load_fred_csv(config.base_dir / p, policy, name=name))
    panel = align_panel(parts)
    if config.window:
        panel = panel.window(config.window.get("start"), config.window.get("end"))
    derived = d.get("derived") or {}
    if derived:
        base = panel.rows(slice(1, None))
        extra = []
        for name, rule in derived.items():
            src = rule.get("diff") if isinstance(rule, dict) else None
            if src not in panel.names:
                raise ConfigError(f"derived column {name}: unknown source {src!r}")
            extra.append(TimeSeries(name, base.dates, np.diff(panel[src].values)))
        panel = Panel.from_series([*base.columns, *extra])
    if len(panel) < 20:
        raise DataError(f"only {len(panel)} aligned rows inside the window")
    return panel


def split_index(panel: Panel, split) -> int:
    n = len(panel)
    if isinstance(split, float):
        cut = int(round(split * n))
    elif isinstance(split, int):
        cut = split
    else:
        cut = int(np.searchsorted(panel.dates, np.datetime64(str(split), "D")))
    if not 0 < cut < n:
        raise ConfigError(f"split {split!r} leaves an empty train or test segment")
    return cut


def _run_naive(spec, panel, target, cut, seed):
    y = panel[target].values
    return y[cut:], y[cut - 1:-1], {}


def _run_arima(spec, panel, target, cut, seed):
    p, d, q = spec.get("order", (1, 0, 0))
    exog_names = tuple(spec.get("exog", ()))
    exog = panel.select(exog_names) if exog_names else None
    aspec = arima.ArimaSpec(p, d, q, spec.get("intercept", not exog_names), exog_names)
    wf = arima.walk_forward(panel[target], aspec, cut, exog, spec.get("refit", "fixed_params"))
    return wf.actual, wf.predicted, {"fit": wf.fit.summary()}


def _run_var(spec, panel, target, cut, seed):
    names = list(spec["variables"])
    sub = panel.select(names)
    train = sub.rows(slice(0, cut))
    info = {}
    if "lags" in spec:
        lag = int(spec["lags"])
    else:
        sel = var.select_lag_order(train, int(spec.get("max_lags", 10)))
        lag = sel.lag
        info["lag_selection"] = {"lag": lag, "weak_evidence": sel.weak_evidence,
                                 "aic_trace": sel.aic_trace.tolist()}
    fit = var.fit_var(train, lag)
    fc = var.forecast_var(fit, train, len(sub) - cut, "rolling_with_actuals",
                          actuals=sub.rows(slice(cut, None)))
    var_target = spec.get("target", names[0])
    pred = fc[var_target].values
    if var_target != target:
        # forecasts of a differenced column are added to the previous level
        y = panel[target].values
        pred = y[cut - 1:-1] + pred
    info["fit"] = fit.summary()
    return panel[target].values[cut:], pred, info


def _run_mlp(spec, panel, target, cut, seed):
    width = int(spec.get("neurons", 1))
    res = run_mlp_experiment(panel[target], (width,), cut, int(spec.get("batch_size", 2)),
                             int(spec.get("epochs", 20)), int(spec.get("repeats", 8)), seed)
    scores = res.rmse[width]
    best = int(np.argmin(np.abs(scores - scores.mean())))
    info = {"repeat_rmse": scores.tolist(), "table": res.table[width]}
    return panel[target].values[cut:], res.predictions[width][best], info


_TRAIN_FIELDS = set(TrainConfig.__dataclass_fields__) - {"seed"}


def _run_lstm(spec, panel, target, cut, seed):
    cov_names = spec.get("covariates")
    covs = panel.select(cov_names) if cov_names else None
    overrides = {k: v for k, v in spec.items() if k in _TRAIN_FIELDS}
    res = run_lstm_regime(spec.get("regime", "stateless"), panel[target], covs, cut,
                          int(spec.get("n_lags", 1)), tuple(spec["units"]) if "units" in spec else None,
                          seed=seed, **overrides)
    info = {"train_rmse": res.train_rmse, "stopped_epoch": res.history.stopped_epoch,
            "manifest": res.manifest}
    return panel[target].values[cut:], res.test_pred.values, info


RUNNERS = {"naive": _run_naive, "arima": _run_arima, "sarimax": _run_arima,
           "var": _run_var, "mlp": _run_mlp, "lstm": _run_lstm}


def _granger_stage(cfg: dict, panel: Panel, models: list) -> tuple[dict, list]:
    effect = cfg["effect"]
    max_lag = int(cfg.get("max_lag", 40))
    alpha = float(cfg.get("alpha", 0.05))
    results, notes = {}, []
    for cause in cfg.get("causes", []):
        g = granger_causality(panel[effect], panel[cause], max_lag, trace=True)
        results[cause] = {"f_statistic": g.f_statistic, "p_value": g.p_value, "max_lag": max_lag,
                          "trace": {str(k): list(map(float, v)) for k, v in g.trace.items()}}
    for m in models:
        if m.get("kind") != "var":
            continue
        used = set(m.get("variables", []))
        for cause, r in results.items():
            significant = r["p_value"] < alpha
            if significant and cause not in used:
                notes.append(f"Granger screening discrepancy: {cause} has p={r['p_value']:.4g} "
                             f"< {alpha} but is excluded from VAR model {m['name']}")
            elif not significant and cause in used:
                notes.append(f"Granger screening discrepancy: {cause} has p={r['p_value']:.4g} "
                             f">= {alpha} but is included in VAR model {m['name']}")
    return results, notes


def run_suite(config: ExperimentConfig, write: bool = True) -> ExperimentReport:
    """Run every configured model, isolating failures, and write the report files."""
    panel = load_data(config)
    target = config.data.get("target", panel.names[0])
    cut = split_index(panel, config.split)
    report = ExperimentReport([])
    if not config.models:
        msg = "model list is empty; the report has no rows"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        report.warnings.append(msg)
    if config.granger:
        report.granger, notes = _granger_stage(config.granger, panel, config.models)
        report.warnings.extend(notes)
    out = Path(config.output_dir)
    for spec in config.models:
        name, kind = spec["name"], spec["kind"]
        seed = model_seed(config.seed, name)
        t0 = time.perf_counter()
        try:
            actual, pred, info = RUNNERS[kind](spec, panel, target, cut, seed)
            outcome = ModelOutcome(name, kind, "ok", rmse(actual, pred), n_test=len(actual),
                                   predictions={"date": panel.dates[cut:], "actual": actual,
                                                "predicted": pred})
            outcome.artifacts["info"] = info
        except Exception as exc:  # isolate any model failure from the rest of the suite
            outcome = ModelOutcome(name, kind, "failed", error=f"{type(exc).__name__}: {exc}")
        outcome.runtime = time.perf_counter() - t0
        report.outcomes.append(outcome)
    if write:
        write_report(report, out)
    return report


def write_report(report: ExperimentReport, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"table": write_table_csv(report.table(), out / "rmse_table.csv")}
    for o in report.outcomes:
        if o.status == "ok":
            p = write_table_csv(o.predictions, out / "predictions" / f"{o.name}.csv")
            o.artifacts["predictions"] = str(p)
    doc = report.to_json()
    paths["json"] = out / "report.json"
    paths["json"].write_text(json.dumps(doc, indent=2, default=_json_default))
    return paths


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


PLOT_STAGES = ("vasicek", "irf", "fevd", "history", "correlogram", "predictions", "pca")


def emit_plot_data(stage: str, artifacts, out_dir, prefix: str | None = None) -> list[Path]:
    """Long-format CSVs for one figure family.

    Schemas: vasicek (step, path_id, value) per ensemble; irf (horizon,
    shock, variable, response); fevd (horizon, shock, variable, share);
    history (epoch, split, loss); correlogram (lag, acf, pacf, band);
    predictions (date, actual, predicted); pca (date, PC1, ...).
    """
    if stage not in PLOT_STAGES:
        raise ValueError(f"unknown plot stage {stage!r}; expected one of {PLOT_STAGES}")
    out = Path(out_dir)
    prefix = prefix or stage
    if stage == "vasicek":
        ensembles = artifacts if isinstance(artifacts, dict) else {prefix: artifacts}
        paths = []
        for label, ens in ensembles.items():
            n_paths, n_cols = ens.paths.shape
            paths.append(write_table_csv({
                "step": np.tile(np.arange(n_cols), n_paths),
                "path_id": np.repeat(np.arange(n_paths), n_cols),
                "value": ens.paths.ravel(),
            }, out / f"{prefix}_{label}.csv" if label != prefix else out / f"{prefix}.csv"))
        return paths
    if stage in ("irf", "fevd"):
        arr = artifacts.responses if stage == "irf" else artifacts.shares
        H, k, _ = arr.shape
        h, i, j = np.meshgrid(np.arange(H), np.arange(k), np.arange(k), indexing="ij")
        names = np.array(artifacts.ordering)
        col = "response" if stage == "irf" else "share"
        return [write_table_csv({"horizon": h.ravel(), "shock": names[j.ravel()],
                                 "variable": names[i.ravel()], col: arr.ravel()},
                                out / f"{prefix}.csv")]
    if stage == "history":
        tr, va = artifacts.train_loss, artifacts.val_loss
        epochs = list(range(1, len(tr) + 1)) + list(range(1, len(va) + 1))
        return [write_table_csv({"epoch": epochs, "split": ["train"] * len(tr) + ["validation"] * len(va),
                                 "loss": np.r_[tr, va]}, out / f"{prefix}.csv")]
    if stage == "correlogram":
        cg = artifacts
        pacf = np.r_[1.0, cg.pacf] if len(cg.pacf) == len(cg.lags) - 1 else cg.pacf
        return [write_table_csv({"lag": cg.lags, "acf": cg.acf, "pacf": pacf,
                                 "band": np.full(len(cg.lags), cg.conf_band)}, out / f"{prefix}.csv")]
    if stage == "predictions":
        return [write_table_csv({"date": artifacts["date"], "actual": artifacts["actual"],
                                 "predicted": artifacts["predicted"]}, out / f"{prefix}.csv")]
    # pca
    scores = artifacts.scores
    return [write_table_csv({"date": scores.dates, **{n: scores[n].values for n in scores.names}},
                            out / f"{prefix}.csv")]
