"""Historical index levels: loading, conversion to returns, calibration."""

import csv
import datetime as _dt
from dataclasses import dataclass

import numpy as np

from .exceptions import DataFormatError, ValidationError
from .types import AssetModel
from .validation import check_returns_matrix, frozen_array


@dataclass(frozen=True)
class PriceHistory:
    """Index levels observed on strictly increasing dates."""

    dates: tuple
    names: tuple
    levels: np.ndarray

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float)
        if levels.ndim != 2 or levels.shape != (len(self.dates), len(self.names)):
            raise ValidationError("levels must have shape (n_dates, n_assets)")
        for k in range(1, len(self.dates)):
            if self.dates[k] <= self.dates[k - 1]:
                raise DataFormatError("non-increasing dates", row=k + 1)
        bad = np.argwhere(~(levels > 0))
        if bad.size:
            raise DataFormatError("non-positive level", row=int(bad[0, 0]) + 1)
        object.__setattr__(self, "levels", frozen_array(levels))
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "dates", tuple(self.dates))

    def __len__(self):
        return len(self.dates)


def load_history(path):
    """Read a ``date,<name1>,...,<nameN>`` CSV of index levels.

    Dates are ISO ``YYYY-MM-DD``. Row numbers in error messages count data
    rows from 1 (the header is not counted).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("empty file") from None
        header = [h.strip() for h in header]
        if len(header) < 2 or header[0] != "date":
            raise DataFormatError("header must be 'date,<name1>,...,<nameN>'")
        names = tuple(header[1:])
        if any(not n for n in names) or len(set(names)) != len(names):
            raise DataFormatError("asset names in header must be non-empty and unique")

        dates, rows = [], []
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(
                    f"malformed row (expected {len(header)} fields, got {len(row)})", row=row_no
                )
            try:
                date = _dt.date.fromisoformat(row[0].strip())
            except ValueError:
                raise DataFormatError(f"malformed date {row[0]!r}", row=row_no) from None
            values = []
            for cell in row[1:]:
                cell = cell.strip()
                if not cell:
                    raise DataFormatError("missing cell", row=row_no)
                try:
                    values.append(float(cell))
                except ValueError:
                    raise DataFormatError(f"malformed number {cell!r}", row=row_no) from None
            if dates and date <= dates[-1]:
                raise DataFormatError("non-increasing dates", row=row_no)
            if any(not (v > 0) or not np.isfinite(v) for v in values):
                raise DataFormatError("non-positive level", row=row_no)
            dates.append(date)
            rows.append(values)

    levels = np.array(rows, dtype=float).reshape(len(rows), len(names))
    return PriceHistory(tuple(dates), names, levels)


def to_returns(history):
    """Arithmetic period returns, shape ``(p - 1, n)``."""
    levels = history.levels if isinstance(history, PriceHistory) else np.asarray(history, dtype=float)
    if levels.ndim == 1:
        levels = levels[:, None]
    if levels.shape[0] < 2:
        raise ValidationError("at least 2 dates are needed to compute returns")
    return levels[1:] / levels[:-1] - 1.0


def calibrate(returns, periods_per_year=12, names=None):
    """Estimate an annualized :class:`AssetModel` from period returns.

    ``mu`` is the sample mean times ``periods_per_year``; ``sigma`` is the
    sample standard deviation (ddof=1) times its square root.

    Raises
    ------
    ValidationError
        If fewer than 2 rows are given or a column has zero variance.
    """
    X = check_returns_matrix(returns, min_rows=2)
    n = X.shape[1]
    if names is None:
        names = tuple(f"asset{i + 1}" for i in range(n))
    if len(names) != n:
        raise ValidationError(f"{len(names)} names given for {n} return columns")
    if periods_per_year <= 0:
        raise ValidationError("periods_per_year must be positive")

    mean = X.mean(axis=0)
    std = X.std(axis=0, ddof=1)
    for i in range(n):
        if not std[i] > 0:
            raise ValidationError(f"asset {names[i]!r} has zero variance; its correlations are undefined")
    centered = (X - mean) / std
    corr = centered.T @ centered / (X.shape[0] - 1)
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    corr = np.clip(corr, -1.0, 1.0)
    return AssetModel(
        names=tuple(names),
        mu=periods_per_year * mean,
        sigma=np.sqrt(periods_per_year) * std,
        corr=corr,
    )
