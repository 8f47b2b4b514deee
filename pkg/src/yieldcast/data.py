"""Series containers, FRED CSV loading, calendar alignment and transforms.

Every downstream model consumes either a :class:`TimeSeries` or a
:class:`Panel`.  Both are light, immutable-by-convention wrappers around
numpy arrays; dates are ``datetime64[D]``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MISSING_MARKERS = {"", ".", "NA", "NaN", "nan", "#N/A"}


class DataError(ValueError):
    """Raised for unreadable, malformed or insufficient input data."""


@dataclass(frozen=True)
class TimeSeries:
    name: str
    dates: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        values = np.asarray(self.values, dtype=float)
        if dates.ndim != 1 or values.ndim != 1:
            raise DataError("dates and values must be one-dimensional")
        if len(dates) != len(values):
            raise DataError(f"{self.name}: {len(dates)} dates but {len(values)} values")
        if len(dates) > 1 and not np.all(dates[1:] > dates[:-1]):
            raise DataError(f"{self.name}: dates must be strictly increasing")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    @classmethod
    def from_values(cls, values, name="series", start="2000-01-03"):
        """Wrap a bare array with a consecutive daily calendar."""
        values = np.asarray(values, dtype=float)
        dates = np.datetime64(start, "D") + np.arange(len(values))
        return cls(name, dates, values)

    def window(self, start=None, end=None) -> "TimeSeries":
        """Inclusive date window."""
        mask = np.ones(len(self), dtype=bool)
        if start is not None:
            mask &= self.dates >= np.datetime64(start, "D")
        if end is not None:
            mask &= self.dates <= np.datetime64(end, "D")
        return TimeSeries(self.name, self.dates[mask], self.values[mask], dict(self.metadata))

    def rename(self, name: str) -> "TimeSeries":
        return TimeSeries(name, self.dates, self.values, dict(self.metadata))


@dataclass(frozen=True)
class Panel:
    """Columns sharing one calendar; ``values`` has shape (n_dates, n_columns)."""

    names: tuple
    dates: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        names = tuple(self.names)
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if len(set(names)) != len(names):
            raise DataError(f"duplicate column names in {names}")
        if values.shape != (len(dates), len(names)):
            raise DataError(f"values shape {values.shape} does not match "
                            f"{len(dates)} dates x {len(names)} columns")
        if len(dates) > 1 and not np.all(dates[1:] > dates[:-1]):
            raise DataError("panel calendar must be strictly increasing")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.dates)

    @property
    def columns(self) -> list[TimeSeries]:
        return [self[name] for name in self.names]

    def _index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DataError(f"no column {name!r}; panel has {list(self.names)}") from None

    def __getitem__(self, name: str) -> TimeSeries:
        return TimeSeries(name, self.dates, self.values[:, self._index(name)])

    def select(self, names: Sequence[str]) -> "Panel":
        idx = [self._index(n) for n in names]
        return Panel(tuple(names), self.dates, self.values[:, idx])

    def rows(self, sl) -> "Panel":
        return Panel(self.names, self.dates[sl], self.values[sl])

    def window(self, start=None, end=None) -> "Panel":
        mask = np.ones(len(self), dtype=bool)
        if start is not None:
            mask &= self.dates >= np.datetime64(start, "D")
        if end is not None:
            mask &= self.dates <= np.datetime64(end, "D")
        return Panel(self.names, self.dates[mask], self.values[mask])

    @classmethod
    def from_series(cls, series: Iterable[TimeSeries]) -> "Panel":
        """Stack series that already share a calendar."""
        series = list(series)
        dates = series[0].dates
        for s in series[1:]:
            if not np.array_equal(s.dates, dates):
                raise DataError(f"{s.name} does not share the calendar; use align_panel")
        return cls(tuple(s.name for s in series), dates,
                   np.column_stack([s.values for s in series]))


@dataclass(frozen=True)
class ScalerParams:
    kind: str
    offset: np.ndarray
    scale: np.ndarray
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if np.any(~(np.asarray(self.scale) > 0)):
            raise DataError("scaler scale must be strictly positive")


def as_array(x) -> np.ndarray:
    """Values of a TimeSeries/Panel, or the array itself."""
    return np.asarray(getattr(x, "values", x), dtype=float)


def _parse_date(text: str, path, lineno: int) -> np.datetime64:
    try:
        return np.datetime64(text.strip()[:10], "D")
    except ValueError as exc:
        raise DataError(f"{path}:{lineno}: unparseable date {text!r}") from exc


def load_fred_csv(path, missing_policy: str = "drop", name: str | None = None) -> TimeSeries:
    """Read a two-column FRED download (``DATE,VALUE`` or ``observation_date,ID``).

    Missing observations (``.`` or blank) are dropped or forward-filled; the
    count is stored in ``metadata``.  Rows are sorted by date.
    """
    if missing_policy not in ("drop", "forward_fill"):
        raise ValueError(f"unknown missing_policy {missing_policy!r}")
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    if len(header) < 2:
        raise DataError(f"{path}: expected two columns, got header {header}")
    name = name or header[1].strip() or path.stem

    parsed = []
    for lineno, row in enumerate(body, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        date = _parse_date(row[0], path, lineno)
        raw = row[1].strip() if len(row) > 1 else ""
        if raw in MISSING_MARKERS:
            value = np.nan
        else:
            try:
                value = float(raw)
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: bad value {raw!r}") from exc
        parsed.append((date, value))

    if not parsed:
        raise DataError(f"{path}: no data rows")
    parsed.sort(key=lambda r: r[0])
    dates = np.array([d for d, _ in parsed], dtype="datetime64[D]")
    values = np.array([v for _, v in parsed], dtype=float)
    if len(dates) > 1 and np.any(dates[1:] == dates[:-1]):
        raise DataError(f"{path}: duplicate dates")

    missing = np.isnan(values)
    n_missing = int(missing.sum())
    if missing_policy == "drop":
        dates, values = dates[~missing], values[~missing]
    else:
        idx = np.where(~missing, np.arange(len(values)), 0)
        np.maximum.accumulate(idx, out=idx)
        values = values[idx]
        # leading gaps have nothing to fill from
        keep = ~np.isnan(values)
        dates, values = dates[keep], values[keep]
    if len(values) == 0:
        raise DataError(f"{path}: zero usable rows")
    meta = {"source": str(path), "missing_policy": missing_policy,
            "n_missing": n_missing,
            "dropped" if missing_policy == "drop" else "filled": n_missing}
    return TimeSeries(name, dates, values, meta)


def align_panel(series: Sequence[TimeSeries], join: str = "inner") -> Panel:
    """Inner-join series onto the intersection of their calendars."""
    if join != "inner":
        raise ValueError("only inner joins are supported")
    if not series:
        raise DataError("align_panel needs at least one series")
    calendar = series[0].dates
    for s in series[1:]:
        calendar = np.intersect1d(calendar, s.dates, assume_unique=True)
    if len(calendar) == 0:
        raise DataError("calendars do not overlap")
    cols = []
    for s in series:
        pos = np.searchsorted(s.dates, calendar)
        cols.append(s.values[pos])
    return Panel(tuple(s.name for s in series), calendar, np.column_stack(cols))


def difference(series, order: int = 1):
    """Repeated first difference; dates are the trailing ``len - order`` dates."""
    if order < 1:
        raise ValueError("order must be a positive integer")
    if isinstance(series, TimeSeries):
        if len(series) <= order:
            raise DataError(f"{series.name}: length {len(series)} too short for order {order}")
        vals = np.diff(series.values, n=order)
        return TimeSeries(series.name, series.dates[order:], vals, dict(series.metadata))
    if isinstance(series, Panel):
        if len(series) <= order:
            raise DataError("panel too short for differencing")
        return Panel(series.names, series.dates[order:], np.diff(series.values, n=order, axis=0))
    x = np.asarray(series, dtype=float)
    if len(x) <= order:
        raise DataError(f"length {len(x)} too short for order {order}")
    return np.diff(x, n=order, axis=0)


def invert_difference(diff, initial, dates=None, order: int | None = None):
    """Undo ``difference(x, d)`` given the first ``d`` values of ``x``.

    ``initial`` holds the leading values consumed by differencing, oldest
    first; its length is the differencing order unless ``order`` is given,
    in which case the two must agree.  The result is the full series,
    ``initial`` included.
    """
    initial = np.atleast_1d(np.asarray(initial, dtype=float))
    if order is not None and len(initial) != order:
        raise DataError(f"order {order} needs {order} initial values, got {len(initial)}")
    order = len(initial)
    if order < 1:
        raise DataError("need at least one initial value")
    level = as_array(diff)
    # D^k x = first element of D^k(initial) followed by its running sum of D^{k+1} x
    for k in range(order - 1, -1, -1):
        first = np.diff(initial, n=k)[0] if k else initial[0]
        level = first + np.concatenate([[0.0], np.cumsum(level)])
    out = level
    if isinstance(diff, TimeSeries):
        if dates is None:
            dates = np.concatenate([diff.dates[0] - np.arange(order, 0, -1), diff.dates])
        return TimeSeries(diff.name, dates, out, dict(diff.metadata))
    return out


def fit_scaler(panel, kind: str = "minmax", range: tuple = (0.0, 1.0)) -> ScalerParams:
    """Per-column min-max or standardization parameters.

    Standardization uses the population standard deviation (ddof=0).
    """
    x = as_array(panel)
    if x.ndim == 1:
        x = x[:, None]
    if kind == "minmax":
        lo, hi = map(float, range)
        if not hi > lo:
            raise ValueError("range must satisfy lo < hi")
        mn, mx = x.min(axis=0), x.max(axis=0)
        span = mx - mn
        if np.any(span <= 0):
            raise DataError("constant column cannot be min-max scaled")
        return ScalerParams("minmax", mn, span / (hi - lo), lo, hi)
    if kind == "standardize":
        mean, sd = x.mean(axis=0), x.std(axis=0)
        if np.any(sd <= 0):
            raise DataError("zero-variance column cannot be standardized")
        return ScalerParams("standardize", mean, sd)
    raise ValueError(f"unknown scaler kind {kind!r}")


def _rewrap(template, values):
    if isinstance(template, Panel):
        return Panel(template.names, template.dates, values)
    if isinstance(template, TimeSeries):
        return TimeSeries(template.name, template.dates, values, dict(template.metadata))
    return values


def apply_scaler(panel, params: ScalerParams):
    x = as_array(panel)
    shift = params.lo if params.kind == "minmax" else 0.0
    flat = x.ndim == 1
    y = (np.atleast_2d(x.T).T - params.offset) / params.scale + shift
    return _rewrap(panel, y[:, 0] if flat else y)


def invert_scaler(panel, params: ScalerParams):
    x = as_array(panel)
    shift = params.lo if params.kind == "minmax" else 0.0
    flat = x.ndim == 1
    y = (np.atleast_2d(x.T).T - shift) * params.scale + params.offset
    return _rewrap(panel, y[:, 0] if flat else y)


def write_panel_csv(panel: Panel, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["DATE", *panel.names])
        for d, row in zip(panel.dates, panel.values):
            w.writerow([str(d), *(repr(float(v)) for v in row)])
    return path


def read_panel_csv(path, missing_policy: str = "drop") -> Panel:
    """Read a multi-column CSV (first column dates) written by ``write_panel_csv``."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise DataError(f"{path}: no data rows")
    names = [h.strip() for h in rows[0][1:]]
    dates, vals = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        dates.append(_parse_date(row[0], path, lineno))
        vals.append([np.nan if c.strip() in MISSING_MARKERS else float(c) for c in row[1:]])
    dates = np.array(dates, dtype="datetime64[D]")
    vals = np.array(vals, dtype=float)
    order = np.argsort(dates, kind="stable")
    dates, vals = dates[order], vals[order]
    if missing_policy == "drop":
        keep = ~np.isnan(vals).any(axis=1)
        dates, vals = dates[keep], vals[keep]
    return Panel(tuple(names), dates, vals)


def write_table_csv(columns: dict, path) -> Path:
    """Long-format table: one CSV column per dict entry, floats at full precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    cols = [np.asarray(columns[k]) for k in names]
    n = len(cols[0]) if cols else 0
    if any(len(c) != n for c in cols):
        raise DataError("table columns differ in length")

    def fmt(v):
        return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)

    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for i in range(n):
            w.writerow([fmt(c[i]) for c in cols])
    return path


def read_table_csv(path) -> dict:
    """Inverse of :func:`write_table_csv`; numeric columns come back as float arrays."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    names, body = rows[0], [r for r in rows[1:] if r]
    out = {}
    for j, name in enumerate(names):
        raw = [r[j] for r in body]
        try:
            out[name] = np.array([float(v) for v in raw])
        except ValueError:
            out[name] = np.array(raw)
    return out
