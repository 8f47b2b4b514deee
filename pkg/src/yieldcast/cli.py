"""Command-line entry point: ``yieldcast run <config>`` and per-module subcommands.

Fit reports go to stdout as JSON; series and plot tables are written as CSV
under ``--out`` (default: ``$YIELDCAST_OUTPUT_DIR`` or the current directory).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import arima, diagnostics, garch, harness, pca, var, vasicek
from .data import (DataError, Panel, TimeSeries, load_fred_csv, read_panel_csv,
                   write_panel_csv, write_table_csv)


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(harness.OUTPUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _n_columns(path) -> int:
    with open(path, newline="") as fh:
        return len(next(csv.reader(fh)))


def read_series(path, column: str | None = None, missing_policy: str = "drop") -> TimeSeries:
    """A two-column FRED file, or one column of a panel CSV (the first by default)."""
    if _n_columns(path) <= 2 and column is None:
        return load_fred_csv(path, missing_policy)
    panel = read_panel_csv(path, missing_policy)
    return panel[column or panel.names[0]]


def read_panel(paths, missing_policy: str = "drop") -> Panel:
    if len(paths) == 1 and _n_columns(paths[0]) > 2:
        return read_panel_csv(paths[0], missing_policy)
    from .data import align_panel
    return align_panel([load_fred_csv(p, missing_policy) for p in paths])


def parse_split(text):
    """Row count, train fraction or first test date, from a command-line string."""
    if text is None:
        return 0.8
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _emit(doc):
    print(json.dumps(doc, indent=2, default=harness._json_default))


def _order(text: str, n: int):
    parts = tuple(int(v) for v in text.split(","))
    if len(parts) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated integers, got {text!r}")
    return parts


def cmd_run(args) -> int:
    if args.out:
        os.environ[harness.OUTPUT_ENV] = args.out
    cfg = harness.ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    report = harness.run_suite(cfg)
    for row in report.ranked():
        rm = "-" if row.status != "ok" else f"{row.test_rmse:.6f}"
        print(f"{row.name:<24} {row.kind:<8} {row.status:<7} {rm}"
              + (f"  {row.error}" if row.error else ""))
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"report written to {cfg.output_dir}")
    return 0 if report.all_ok else 1


def cmd_diagnose(args) -> int:
    panel = read_panel(args.inputs, args.missing)
    rows = []
    for s in panel.columns:
        adf = diagnostics.adf_test(s, args.max_lags)
        k2 = diagnostics.dagostino_k2(s)
        rows.append({"series": s.name, "test": "adf", "statistic": adf.statistic,
                     "p_value": adf.p_value, "lags": adf.lags_used})
        rows.append({"series": s.name, "test": "dagostino_k2", "statistic": k2.k2_statistic,
                     "p_value": k2.p_value})
    if args.granger_effect:
        eff = panel[args.granger_effect]
        for s in panel.columns:
            if s.name != args.granger_effect:
                g = diagnostics.granger_causality(eff, s, args.granger_lags)
                rows.append({"series": f"{s.name}->{eff.name}", "test": "granger",
                             "statistic": g.f_statistic, "p_value": g.p_value})
    print(f"{'series':<28}{'test':<14}{'statistic':>14}{'p_value':>12}")
    for r in rows:
        print(f"{r['series']:<28}{r['test']:<14}{r['statistic']:>14.4f}{r['p_value']:>12.4g}")
    if args.json:
        Path(args.json).write_text(json.dumps(rows, indent=2, default=harness._json_default))
    return 0


def cmd_pca(args) -> int:
    panel = read_panel(args.inputs, args.missing)
    res = pca.pca(panel, args.components)
    out = _out_dir(args)
    harness.emit_plot_data("pca", res, out, "pca_scores")
    _emit({"eigenvalues": res.decomposition.eigenvalues, "explained_ratio": res.explained_ratio,
           "explained_ratio_total": res.explained_ratio_total,
           "loadings": {n: dict(zip(res.loadings_names, res.decomposition.eigenvectors[:, i]))
                        for i, n in enumerate(res.scores.names)}})
    return 0


def cmd_vasicek(args) -> int:
    if args.action == "calibrate":
        fit = vasicek.calibrate_mle(read_series(args.input, args.column), args.dt)
        _emit({"k": fit.params.k, "theta": fit.params.theta, "sigma": fit.params.sigma,
               "std_errors": fit.std_errors, "loglik": fit.loglik, "n_obs": fit.n_obs})
        return 0
    params = vasicek.VasicekParams(args.k, args.theta, args.sigma)
    spec = vasicek.SimulationSpec(args.r0, args.dt, args.steps, args.paths, args.seed)
    ens = vasicek.simulate_paths(params, spec)
    path = harness.emit_plot_data("vasicek", ens, _out_dir(args), "vasicek_paths")[0]
    mean_end = float(ens.paths[:, -1].mean())
    _emit({"paths_csv": path, "terminal_mean": mean_end,
           "theoretical_mean": float(vasicek.conditional_mean(args.r0, args.steps * args.dt, params))})
    return 0


def cmd_arima(args) -> int:
    y = read_series(args.input, args.column, args.missing)
    p, d, q = args.order
    spec = arima.ArimaSpec(p, d, q, not args.no_intercept)
    out = _out_dir(args)
    if args.action == "fit":
        f = arima.fit(y, spec)
        write_table_csv({"date": f.residuals.dates, "residual": f.residuals.values},
                        out / "arima_residuals.csv")
        _emit(f.summary())
    elif args.action == "forecast":
        f = arima.fit(y, spec)
        fc = arima.forecast(f, args.horizon, level=args.level)
        write_table_csv({"horizon": np.arange(1, args.horizon + 1), "mean": fc.mean,
                         "lower": fc.lower, "upper": fc.upper}, out / "arima_forecast.csv")
        _emit({"fit": f.summary(), "forecast": {"mean": fc.mean, "lower": fc.lower, "upper": fc.upper}})
    else:
        wf = arima.walk_forward(y, spec, parse_split(args.split), refit=args.refit)
        harness.emit_plot_data("predictions", {"date": wf.dates, "actual": wf.actual,
                                               "predicted": wf.predicted}, out, "arima_walkforward")
        _emit({"rmse": wf.rmse, "n_test": len(wf.actual), "refit": wf.refit, "fit": wf.fit.summary()})
    return 0


def cmd_garch(args) -> int:
    eps = read_series(args.input, args.column, args.missing)
    if args.demean:
        eps = TimeSeries(eps.name, eps.dates, eps.values - eps.values.mean())
    fit = garch.fit_garch(eps, garch.GarchSpec(*args.order))
    out = _out_dir(args)
    write_table_csv({"date": fit.cond_variance.dates, "cond_variance": fit.cond_variance.values},
                    out / "garch_cond_variance.csv")
    diag = garch.arch_effect_diagnostic(fit.standardized_residuals(), args.diag_lags)
    _emit({**fit.summary(), "squared_std_resid_exceed_fraction": diag.exceed_fraction,
           "remaining_arch_effect": diag.arch_effect})
    return 0


def cmd_var(args) -> int:
    panel = read_panel(args.inputs, args.missing)
    if args.variables:
        panel = panel.select(args.variables.split(","))
    out = _out_dir(args)
    doc = {}
    if args.lags is None:
        sel = var.select_lag_order(panel, args.max_lags)
        lag = sel.lag
        doc["lag_selection"] = {"lag": lag, "weak_evidence": sel.weak_evidence,
                                "aic_trace": sel.aic_trace}
    else:
        lag = args.lags
    fit = var.fit_var(panel, lag)
    doc["fit"] = fit.summary()
    ordering = args.ordering.split(",") if args.ordering else None
    if args.action == "forecast":
        fc = var.forecast_var(fit, panel, args.horizon, "iterative")
        write_panel_csv(fc, out / "var_forecast.csv")
        doc["forecast_csv"] = str(out / "var_forecast.csv")
    elif args.action == "irf":
        res = var.irf(fit, args.horizon, ordering, force=args.force)
        doc["irf_csv"] = harness.emit_plot_data("irf", res, out, "var_irf")[0]
    elif args.action == "fevd":
        res = var.fevd(fit, args.horizon, ordering, force=args.force)
        doc["fevd_csv"] = harness.emit_plot_data("fevd", res, out, "var_fevd")[0]
    _emit(doc)
    return 0


def cmd_nn(args) -> int:
    from . import neural

    y = read_series(args.input, args.column, args.missing)
    out = _out_dir(args)
    split = parse_split(args.split)
    if args.model == "mlp":
        res = neural.run_mlp_experiment(y, (args.neurons,), split, args.batch or 2,
                                        args.epochs or 20, args.repeats, args.seed)
        hist = res.histories[args.neurons][0]
        harness.emit_plot_data("history", hist, out, "mlp_history")
        _emit({"rmse": res.rmse[args.neurons], "table": res.table[args.neurons],
               "baseline_rmse": res.baseline_rmse})
        return 0
    covs = read_panel([args.covariates], args.missing) if args.covariates else None
    if covs is not None:
        from .data import align_panel
        joined = align_panel([y, *covs.columns])
        y, covs = joined[y.name], joined.select(covs.names)
    overrides = {k: v for k, v in {"epochs": args.epochs, "batch_size": args.batch,
                                   "dropout_rate": args.dropout,
                                   "early_stopping_patience": args.patience}.items() if v is not None}
    res = neural.run_lstm_regime(args.regime, y, covs, split, args.lags,
                                 tuple(args.units) if args.units else None, seed=args.seed, **overrides)
    harness.emit_plot_data("history", res.history, out, f"{args.regime}_history")
    harness.emit_plot_data("predictions", {"date": res.test_pred.dates,
                                           "actual": y.values[-len(res.test_pred):],
                                           "predicted": res.test_pred.values}, out,
                           f"{args.regime}_predictions")
    neural.save_weights(res.model, out / f"{args.regime}_weights.json")
    _emit({"train_rmse": res.train_rmse, "test_rmse": res.test_rmse,
           "stopped_epoch": res.history.stopped_epoch, "manifest": res.manifest})
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="yieldcast", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, series=True):
        p.add_argument("--out", help="output directory for CSV artifacts")
        p.add_argument("--missing", choices=("drop", "forward_fill"), default="drop")
        if series:
            p.add_argument("--column", help="column to use when the input is a panel CSV")

    p = sub.add_parser("run", help="run an experiment suite from a YAML config")
    p.add_argument("config")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--out", help="override the output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("diagnose", help="ADF, normality and Granger tests per column")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--max-lags", type=int)
    p.add_argument("--granger-effect")
    p.add_argument("--granger-lags", type=int, default=40)
    p.add_argument("--json")
    common(p, series=False)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("pca", help="principal components of a standardized panel")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--components", type=int, default=5)
    common(p, series=False)
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("vasicek", help="simulate or calibrate the Vasicek model")
    p.add_argument("action", choices=("simulate", "calibrate"))
    p.add_argument("input", nargs="?")
    p.add_argument("--k", type=float, default=0.5)
    p.add_argument("--theta", type=float, default=1.75)
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--r0", type=float, default=-1.0)
    p.add_argument("--dt", type=float, default=1.0 / vasicek.TRADING_DAYS)
    p.add_argument("--steps", type=int, default=vasicek.TRADING_DAYS)
    p.add_argument("--paths", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_vasicek)

    p = sub.add_parser("arima", help="fit, forecast or walk-forward an ARIMA model")
    p.add_argument("action", choices=("fit", "forecast", "walkforward"))
    p.add_argument("input")
    p.add_argument("--order", type=lambda s: _order(s, 3), default=(1, 0, 0))
    p.add_argument("--no-intercept", action="store_true")
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--split", help="train fraction, row count or first test date")
    p.add_argument("--refit", choices=("every_step", "fixed_params"), default="fixed_params")
    common(p)
    p.set_defaults(func=cmd_arima)

    p = sub.add_parser("garch", help="fit a GARCH model to residuals")
    p.add_argument("action", choices=("fit",))
    p.add_argument("input")
    p.add_argument("--order", type=lambda s: _order(s, 2), default=(1, 1),
                   help="p,q: p variance lags, q squared-residual lags")
    p.add_argument("--diag-lags", type=int, default=20)
    p.add_argument("--demean", action="store_true", help="subtract the sample mean first")
    common(p)
    p.set_defaults(func=cmd_garch)

    p = sub.add_parser("var", help="VAR estimation and analytics")
    p.add_argument("action", choices=("fit", "forecast", "irf", "fevd"))
    p.add_argument("inputs", nargs="+")
    p.add_argument("--lags", type=int)
    p.add_argument("--max-lags", type=int, default=10)
    p.add_argument("--variables", help="comma-separated subset, in order")
    p.add_argument("--ordering", help="comma-separated Cholesky ordering")
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--force", action="store_true", help="allow IRF/FEVD for an explosive fit")
    common(p, series=False)
    p.set_defaults(func=cmd_var)

    nn = sub.add_parser("nn", help="neural network experiments")
    nsub = nn.add_subparsers(dest="action", required=True)
    p = nsub.add_parser("train")
    p.add_argument("input")
    p.add_argument("--model", choices=("mlp", "lstm"), default="mlp")
    p.add_argument("--regime", choices=("stateless", "stateful_stacked", "multivariate"),
                   default="stateless")
    p.add_argument("--covariates", help="panel CSV of covariates (multivariate regime)")
    p.add_argument("--lags", type=int, default=1)
    p.add_argument("--neurons", type=int, default=5)
    p.add_argument("--units", type=int, nargs="+")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--patience", type=int)
    p.add_argument("--repeats", type=int, default=8)
    p.add_argument("--split", help="train fraction or row count (default 0.8)")
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_nn)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "command", None) == "vasicek" and args.action == "calibrate" and not args.input:
        print("error: vasicek calibrate needs an input CSV", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (DataError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
