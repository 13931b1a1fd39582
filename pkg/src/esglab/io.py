"""Configuration parsing and file output.

Configs are strict JSON: unknown keys are rejected and every error names
the offending field path. Numbers are written with Python's shortest
round-trip ``repr``, so CSV files are byte-stable and lossless.
"""

import csv
import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

from .calibration import calibrate, load_history, to_returns
from .exceptions import ConfigError, ValidationError
from .stability import (
    DEFAULT_REFERENCE_SIZE,
    DEFAULT_REPLICATIONS,
    DEFAULT_SIZES,
    METHODS,
    ExperimentConfig,
)
from .types import AssetModel, ObjectiveSpec, ScenarioSet

CONFIG_KEYS = {
    "assets",
    "model",
    "m0",
    "step",
    "sizes",
    "replications",
    "master_seed",
    "reference_size",
    "dt",
    "n_periods",
    "method",
    "antithetic",
    "moment_match",
    "pca_components",
}
INLINE_MODEL_KEYS = {"mu", "sigma", "corr"}
CALIBRATE_MODEL_KEYS = {"calibrate", "periods_per_year"}


def fmt(x):
    """Shortest round-trip text for a CSV cell."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def write_csv(path, header, rows):
    """Write ``rows`` under ``header``; ``path`` may also be an open text stream."""
    if hasattr(path, "write"):
        _write_rows(path, header, rows)
        return None
    with open(path, "w", newline="", encoding="utf-8") as fh:
        _write_rows(fh, header, rows)
    return Path(path)


def _write_rows(fh, header, rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])


def _number(raw, path, integer=False):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(path, f"expected a number, got {raw!r}")
    if integer and not (isinstance(raw, int) or float(raw).is_integer()):
        raise ConfigError(path, f"expected an integer, got {raw!r}")
    if not math.isfinite(raw):
        raise ConfigError(path, "must be finite")
    return int(raw) if integer else float(raw)


def _number_list(raw, path, integer=False):
    if not isinstance(raw, list):
        raise ConfigError(path, "expected a list")
    return [_number(v, f"{path}[{i}]", integer) for i, v in enumerate(raw)]


def _bool(raw, path):
    if not isinstance(raw, bool):
        raise ConfigError(path, f"expected true or false, got {raw!r}")
    return raw


def _parse_model(raw, names, base_dir):
    """Return ``(model, history, periods_per_year, source)``."""
    if not isinstance(raw, dict):
        raise ConfigError("model", "expected an object")
    keys = set(raw)
    if "calibrate" in keys:
        unknown = keys - CALIBRATE_MODEL_KEYS
        if unknown:
            raise ConfigError(f"model.{sorted(unknown)[0]}", "unknown key")
        if not isinstance(raw["calibrate"], str):
            raise ConfigError("model.calibrate", "expected a file path")
        ppy = _number(raw.get("periods_per_year", 12), "model.periods_per_year", integer=True)
        if ppy < 1:
            raise ConfigError("model.periods_per_year", "must be positive")
        path = Path(raw["calibrate"])
        if not path.is_absolute() and base_dir is not None:
            path = Path(base_dir) / path
        try:
            hist = load_history(path)
        except OSError as exc:
            raise ConfigError("model.calibrate", f"cannot read {path}: {exc.strerror}") from None
        except ValidationError as exc:
            raise ConfigError("model.calibrate", f"{path}: {exc}") from None
        if names is not None and tuple(names) != hist.names:
            raise ConfigError("assets", f"{list(names)} do not match the history header {list(hist.names)}")
        returns = to_returns(hist)
        try:
            model = calibrate(returns, ppy, names=hist.names)
        except ValidationError as exc:
            raise ConfigError("model.calibrate", str(exc)) from None
        return model, returns, ppy, f"calibrate:{raw['calibrate']}"

    unknown = keys - INLINE_MODEL_KEYS
    if unknown:
        raise ConfigError(f"model.{sorted(unknown)[0]}", "unknown key")
    for k in sorted(INLINE_MODEL_KEYS - keys):
        raise ConfigError(f"model.{k}", "missing")
    mu = _number_list(raw["mu"], "model.mu")
    sigma = _number_list(raw["sigma"], "model.sigma")
    corr_raw = raw["corr"]
    if not isinstance(corr_raw, list):
        raise ConfigError("model.corr", "expected a list of rows")
    corr = [_number_list(row, f"model.corr[{i}]") for i, row in enumerate(corr_raw)]
    n = len(mu)
    if len(sigma) != n:
        raise ConfigError("model.sigma", f"expected {n} entries, got {len(sigma)}")
    if len(corr) != n or any(len(row) != n for row in corr):
        raise ConfigError("model.corr", f"expected a {n}x{n} matrix")
    if names is None:
        names = [f"asset{i + 1}" for i in range(n)]
    if len(names) != n:
        raise ConfigError("assets", f"expected {n} names, got {len(names)}")
    for i in range(n):
        for j in range(i + 1, n):
            if abs(corr[i][j] - corr[j][i]) > 1e-10:
                raise ConfigError(
                    f"model.corr[{i}][{j}]",
                    f"corr is not symmetric ({corr[i][j]!r} vs model.corr[{j}][{i}]={corr[j][i]!r})",
                )
    try:
        model = AssetModel(tuple(names), mu, sigma, corr)
    except ValidationError as exc:
        raise ConfigError("model", str(exc)) from None
    return model, None, 12, "inline"


def parse_config(source, base_dir=None):
    """Parse a config file path or an already-loaded dict.

    Returns
    -------
    config : ExperimentConfig
    model_source : str
        ``"inline"`` or ``"calibrate:<path>"``.
    """
    if isinstance(source, dict):
        raw = source
    else:
        path = Path(source)
        base_dir = path.parent if base_dir is None else base_dir
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a JSON object")
    unknown = sorted(set(raw) - CONFIG_KEYS)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    if "model" not in raw:
        raise ConfigError("model", "missing")

    names = raw.get("assets")
    if names is not None:
        if not isinstance(names, list) or not all(isinstance(x, str) for x in names):
            raise ConfigError("assets", "expected a list of strings")
    model, history, ppy, model_source = _parse_model(raw["model"], names, base_dir)

    method = raw.get("method", "gaussian")
    if method not in METHODS:
        raise ConfigError("method", f"must be one of {list(METHODS)}, got {method!r}")
    try:
        spec = ObjectiveSpec(_number(raw.get("m0", 0.04), "m0"), _number(raw.get("step", 0.05), "step"))
    except ConfigError:
        raise
    except ValidationError as exc:
        raise ConfigError("step", str(exc)) from None
    pca_k = raw.get("pca_components")
    config = ExperimentConfig(
        model=model,
        spec=spec,
        sizes=tuple(_number_list(raw.get("sizes", list(DEFAULT_SIZES)), "sizes", integer=True)),
        replications=_number(raw.get("replications", DEFAULT_REPLICATIONS), "replications", integer=True),
        master_seed=_number(raw.get("master_seed", 0), "master_seed", integer=True),
        reference_size=_number(raw.get("reference_size", DEFAULT_REFERENCE_SIZE), "reference_size", integer=True),
        dt=_number(raw.get("dt", 1.0), "dt"),
        n_periods=_number(raw.get("n_periods", 1), "n_periods", integer=True),
        method=method,
        antithetic=_bool(raw.get("antithetic", False), "antithetic"),
        moment_match=_bool(raw.get("moment_match", False), "moment_match"),
        history=history,
        periods_per_year=ppy,
        pca_components=None if pca_k is None else _number(pca_k, "pca_components", integer=True),
    )
    if config.master_seed < 0:
        raise ConfigError("master_seed", "must be non-negative")
    return config, model_source


def bundled_config_dict():
    text = resources.files("esglab").joinpath("data/bundled_config.json").read_text(encoding="utf-8")
    return json.loads(text)


def bundled_config():
    """The synthetic three-asset experiment shipped with the package."""
    return parse_config(bundled_config_dict())[0]


def config_to_dict(config, model_source="inline"):
    """JSON-ready echo of a config (inverse of :func:`parse_config` for inline models)."""
    out = config.model.to_dict()
    if model_source != "inline":
        out["model_source"] = model_source
    out.update(
        m0=config.spec.m0,
        step=config.spec.step,
        sizes=list(config.sizes),
        replications=config.replications,
        master_seed=config.master_seed,
        reference_size=config.reference_size,
        dt=config.dt,
        n_periods=config.n_periods,
        method=config.method,
        antithetic=config.antithetic,
        moment_match=config.moment_match,
    )
    if config.pca_components is not None:
        out["pca_components"] = config.pca_components
    return out


def write_scenarios(scenarios, path):
    """CSV with columns ``path,period,<asset names>`` (0-based indices)."""
    N, T, _ = scenarios.returns.shape
    rows = (
        [s, t, *scenarios.returns[s, t].tolist()] for s in range(N) for t in range(T)
    )
    return write_csv(path, ["path", "period", *scenarios.names], rows)


def read_scenarios(path, dt=1.0):
    """Inverse of :func:`write_scenarios`."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["path", "period"] or len(header) < 3:
            raise ValidationError("scenario CSV header must be 'path,period,<names>'")
        cells = {}
        for row_no, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise ValidationError(f"malformed scenario row {row_no}")
            try:
                cells[(int(row[0]), int(row[1]))] = [float(x) for x in row[2:]]
            except ValueError:
                raise ValidationError(f"malformed scenario row {row_no}") from None
    if not cells:
        raise ValidationError("scenario CSV has no rows")
    N = max(k[0] for k in cells) + 1
    T = max(k[1] for k in cells) + 1
    if len(cells) != N * T:
        raise ValidationError("scenario CSV does not cover every (path, period) pair")
    r = np.empty((N, T, len(header) - 2))
    for (s, t), v in cells.items():
        r[s, t] = v
    return ScenarioSet(r, dt=dt, method="file", names=tuple(header[2:]))


def write_tree(tree, path):
    rows = (
        [i, int(tree.parent[i]), int(tree.depth[i]), float(tree.prob[i]), *tree.values[i].tolist()]
        for i in range(tree.n_nodes)
    )
    return write_csv(path, ["node", "parent", "depth", "prob", *tree.names], rows)


_STAT_FIELDS = ("mean", "std", "min", "q25", "q50", "q75", "max")


def write_report(report, out_dir):
    """Write every CSV of a :class:`StabilityReport`; return the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sizes, K, names = report.sizes, report.replications, report.names
    files = []

    files.append(write_csv(
        out / "objectives.csv",
        ["size", "replication", "objective", "expected", "feasible"],
        ([z, r, report.objectives[i, r], report.expected[i, r], report.feasible[i, r]]
         for i, z in enumerate(sizes) for r in range(K)),
    ))
    files.append(write_csv(
        out / "weights.csv",
        ["size", "replication", "asset", "weight"],
        ([z, r, a, report.weights[i, r, j]]
         for i, z in enumerate(sizes) for r in range(K) for j, a in enumerate(names)),
    ))
    files.append(write_csv(
        out / "internal_stats.csv",
        ["size", *_STAT_FIELDS],
        ([z, *(getattr(report.internal[z], f) for f in _STAT_FIELDS)] for z in sizes),
    ))
    files.append(write_csv(
        out / "weight_stats.csv",
        ["size", "asset", "mean", "std", "min", "max", "range"],
        ([z, a, ws.mean, ws.std, ws.min, ws.max, ws.range]
         for z in sizes for a, ws in report.weight_stats[z].items()),
    ))
    files.append(write_csv(
        out / "external.csv",
        ["size", "replication", "reference_objective", "reference_expected"],
        ([z, r, report.reference_objectives[i, r], report.reference_expected[i, r]]
         for i, z in enumerate(sizes) for r in range(K)),
    ))
    files.append(write_csv(
        out / "external_stats.csv",
        ["size", *_STAT_FIELDS, "dispersion", "reference_infeasible"],
        ([z, *(getattr(report.external[z], f) for f in _STAT_FIELDS),
          report.external_dispersion[z], report.reference_infeasible[z]] for z in sizes),
    ))
    files.append(write_csv(
        out / "bias.csv",
        ["size", "replication", "e_f"],
        ([z, r, report.bias[i, r]] for i, z in enumerate(sizes) for r in range(K)),
    ))
    files.append(write_csv(
        out / "bias_stats.csv",
        ["size", "mean_e_f", "mean_e_f_feasible", "reference_infeasible", "reference_min"],
        ([z, report.mean_bias[z], report.mean_bias_feasible[z], report.reference_infeasible[z],
          report.reference_min] for z in sizes),
    ))
    return files


def write_quadratic_report(report, path):
    rows = (
        [name, z, r, v.x_star[i, r], v.f_star[i, r], v.e_f[i, r]]
        for name, v in report.variants.items()
        for i, z in enumerate(report.sizes)
        for r in range(report.replications)
    )
    return write_csv(path, ["variant", "size", "replication", "x_star", "f_star", "e_f"], rows)
