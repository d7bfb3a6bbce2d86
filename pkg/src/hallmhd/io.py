"""Run configuration, field snapshots and metrics streams."""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .constraints import InfeasibleParameters, ParamSet, feasibility
from .generators import make_initial
from .grid import GridSpec, SpectralField, from_samples

__all__ = [
    "ConfigError",
    "SnapshotError",
    "PartialMetrics",
    "RunConfig",
    "load_config",
    "parse_config",
    "save_snapshot",
    "load_snapshot",
    "read_snapshot_header",
    "MetricsWriter",
    "read_metrics",
    "write_decay_csv",
    "write_probe_csv",
    "DECAY_COLUMNS",
    "PROBE_COLUMNS",
]

MODELS = ("hall-mhd", "emhd")
PHYSICAL = {
    "hall-mhd": ("alpha1", "alpha2", "beta", "gamma", "nu", "mu", "eta"),
    "emhd": ("alpha2", "mu", "eta"),
}
TOP_KEYS = ("model", "params", "grid", "run", "initial_data")
GRID_KEYS = ("n",)
RUN_DEFAULTS = {
    "hall-mhd": {"T": 0.5, "M": 64, "tol": 1e-10, "max_iter": 50, "seed": 0},
    "emhd": {"T": 100.0, "M": 200, "tol": 1e-10, "max_iter": 50, "seed": 0},
}
GENERATOR_KEYS = ("kind", "amplitude", "k", "direction", "band", "slope")
SNAPSHOT_KEYS = ("snapshot",)
FIELD_NAMES = {"hall-mhd": ("u", "b"), "emhd": ("b",)}

SNAPSHOT_FORMAT = "hallmhd-field"
SNAPSHOT_VERSION = 1
METRICS_FORMAT = "hallmhd-metrics"
METRICS_VERSION = 1

DECAY_COLUMNS = ("t", "sup_norm", "weighted", "running_sup")
PROBE_COLUMNS = ("alpha", "s0", "s1", "corpus_size", "besov_constant", "gradient_constant",
                 "projected_gradient_constant")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)
        self.line = line


class SnapshotError(ValueError):
    pass


class PartialMetrics(ValueError):
    """A metrics file without its closing summary record."""

    def __init__(self, message: str, records: list):
        super().__init__(message)
        self.records = records


@dataclass
class RunConfig:
    model: str
    params: ParamSet | dict
    grid: GridSpec
    horizon: float
    node_count: int
    tolerance: float
    max_iter: int
    seed: int
    initial_data: dict = field(default_factory=dict)
    base_dir: Path = field(default=Path("."))

    def with_seed(self, seed: int | None) -> "RunConfig":
        if seed is None:
            return self
        return RunConfig(self.model, self.params, self.grid, self.horizon, self.node_count,
                         self.tolerance, self.max_iter, int(seed), self.initial_data,
                         self.base_dir)

    def initial_fields(self) -> dict:
        """Initial fields by name, generated from ``seed`` or read from snapshots."""
        rng = np.random.default_rng(self.seed)
        out = {}
        for name in FIELD_NAMES[self.model]:
            desc = self.initial_data.get(name, {"kind": "zero"})
            if "snapshot" in desc:
                out[name] = load_snapshot(self.base_dir / desc["snapshot"], self.grid)
            else:
                out[name] = make_initial(desc, self.grid, rng)
        return out


def _key_line(text: str, key: str) -> int | None:
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


def _reject_unknown(section: dict, allowed, where: str, text: str, path):
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where}", _key_line(text, key), path)


def _number(value, name, text, path, integer=False):
    ok = isinstance(value, int) if integer else isinstance(value, (int, float))
    if isinstance(value, bool) or not ok or (not integer and not math.isfinite(value)):
        kind = "an integer" if integer else "a finite number"
        raise ConfigError(f"{name} must be {kind}, got {value!r}", _key_line(text, name), path)
    return value


def parse_config(text: str, path: str | None = None, base_dir: Path | None = None) -> RunConfig:
    """Parse and validate the JSON text of a run configuration.

    Physical parameters have no defaults; run controls default per model.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno,
                          path) from None
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a JSON object", 1, path)
    _reject_unknown(raw, TOP_KEYS, "config", text, path)
    model = raw.get("model", "hall-mhd")
    if model not in MODELS:
        raise ConfigError(f"model must be one of {MODELS}, got {model!r}",
                          _key_line(text, "model"), path)

    params_raw = raw.get("params")
    if not isinstance(params_raw, dict):
        raise ConfigError("missing 'params' object", None, path)
    required = PHYSICAL[model]
    _reject_unknown(params_raw, required, "params", text, path)
    missing = [k for k in required if k not in params_raw]
    if missing:
        raise ConfigError(f"missing physical parameters: {', '.join(missing)}",
                          _key_line(text, "params"), path)
    values = {k: float(_number(params_raw[k], k, text, path)) for k in required}
    if model == "hall-mhd":
        try:
            params = ParamSet(**values)
        except ValueError as exc:
            raise ConfigError(str(exc), None, path) from None
        report = feasibility(params)
        if not report.feasible:
            raise InfeasibleParameters(report)
    else:
        if not 1 < values["alpha2"] < 2:
            raise ConfigError(f"emhd needs 1 < alpha2 < 2, got {values['alpha2']}",
                              _key_line(text, "alpha2"), path)
        if values["mu"] <= 0 or values["eta"] < 0:
            raise ConfigError("emhd needs mu > 0 and eta >= 0", None, path)
        params = values

    grid_raw = raw.get("grid", {})
    if not isinstance(grid_raw, dict):
        raise ConfigError("'grid' must be an object", _key_line(text, "grid"), path)
    _reject_unknown(grid_raw, GRID_KEYS, "grid", text, path)
    try:
        grid = GridSpec(int(_number(grid_raw.get("n", 32), "n", text, path, integer=True)))
    except ValueError as exc:
        raise ConfigError(str(exc), _key_line(text, "n"), path) from None

    run_raw = raw.get("run", {})
    if not isinstance(run_raw, dict):
        raise ConfigError("'run' must be an object", _key_line(text, "run"), path)
    defaults = RUN_DEFAULTS[model]
    _reject_unknown(run_raw, tuple(defaults), "run", text, path)
    run = dict(defaults)
    for key, val in run_raw.items():
        run[key] = _number(val, key, text, path, integer=key in ("M", "max_iter", "seed"))
    if run["T"] <= 0 or run["M"] < 8 or run["tol"] <= 0 or run["max_iter"] < 1:
        raise ConfigError("run controls need T > 0, M >= 8, tol > 0, max_iter >= 1",
                          _key_line(text, "run"), path)

    init = raw.get("initial_data", {})
    if not isinstance(init, dict):
        raise ConfigError("'initial_data' must be an object", _key_line(text, "initial_data"),
                          path)
    _reject_unknown(init, FIELD_NAMES[model], "initial_data", text, path)
    for name, desc in init.items():
        if not isinstance(desc, dict):
            raise ConfigError(f"initial_data.{name} must be an object", _key_line(text, name),
                              path)
        allowed = SNAPSHOT_KEYS if "snapshot" in desc else GENERATOR_KEYS
        _reject_unknown(desc, allowed, f"initial_data.{name}", text, path)
        if "snapshot" not in desc and "kind" not in desc:
            raise ConfigError(f"initial_data.{name} needs 'kind' or 'snapshot'",
                              _key_line(text, name), path)

    return RunConfig(model, params, grid, float(run["T"]), int(run["M"]), float(run["tol"]),
                     int(run["max_iter"]), int(run["seed"]), init,
                     base_dir if base_dir is not None else Path("."))


def load_config(path) -> RunConfig:
    path = Path(path)
    text = path.read_text()
    return parse_config(text, str(path), path.parent)


def save_snapshot(f: SpectralField, path, time: float = 0.0) -> None:
    """Header line (JSON) then little-endian float64 samples.

    Samples are component-major, and within a component ``x1`` varies fastest.
    """
    n = f.grid.n
    header = {"format": SNAPSHOT_FORMAT, "version": SNAPSHOT_VERSION, "n": n,
              "time": float(time), "solenoidal": bool(f.solenoidal), "dtype": "<f8",
              "count": 3 * n**3}
    payload = np.ascontiguousarray(f.values.transpose(0, 3, 2, 1), dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(payload)


def _read_snapshot(path):
    with open(path, "rb") as fh:
        line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError):
        raise SnapshotError(f"{path}: unreadable snapshot header") from None
    if not isinstance(header, dict) or header.get("format") != SNAPSHOT_FORMAT:
        raise SnapshotError(f"{path}: not a field snapshot")
    if header.get("version") != SNAPSHOT_VERSION:
        raise SnapshotError(f"{path}: snapshot version {header.get('version')!r}, "
                            f"expected {SNAPSHOT_VERSION}")
    return header, payload


def read_snapshot_header(path) -> dict:
    return _read_snapshot(path)[0]


def load_snapshot(path, grid: GridSpec | None = None) -> SpectralField:
    """Inverse of :func:`save_snapshot`; refuses to resample onto another grid."""
    header, payload = _read_snapshot(path)
    n = int(header["n"])
    if grid is not None and grid.n != n:
        raise SnapshotError(f"{path}: snapshot grid n={n} does not match run grid n={grid.n}")
    expected = 3 * n**3 * 8
    if len(payload) != expected:
        raise SnapshotError(f"{path}: payload has {len(payload)} bytes, header implies "
                            f"{expected}")
    vals = np.frombuffer(payload, dtype="<f8").reshape(3, n, n, n).transpose(0, 3, 2, 1)
    return from_samples(vals.astype(float), GridSpec(n) if grid is None else grid,
                        bool(header.get("solenoidal", False)))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


class MetricsWriter:
    """NDJSON metrics stream: a header, event records, and a closing summary.

    The wall-clock timestamp lives only in the header's ``timestamp`` field so
    that reruns with the same inputs differ nowhere else.  A stream closed
    without :meth:`summary` has no terminator and is reported as partial by
    :func:`read_metrics`.
    """

    def __init__(self, path, meta: dict | None = None):
        self.path = Path(path)
        self._fh = open(self.path, "w")
        self._closed = False
        self.count = 0
        header = {"record": "header", "format": METRICS_FORMAT, "version": METRICS_VERSION,
                  "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                  "meta": _jsonable(meta or {})}
        self._emit(header)

    def _emit(self, record: dict):
        if self._closed:
            raise ValueError("metrics stream already closed")
        self._fh.write(json.dumps(_jsonable(record), sort_keys=True) + "\n")
        self._fh.flush()

    def write(self, record: dict):
        if record.get("record") in ("header", "summary"):
            raise ValueError("header and summary records are written by the stream itself")
        self._emit(record)
        self.count += 1

    __call__ = write

    def summary(self, record: dict | None = None):
        out = dict(record or {})
        out["record"] = "summary"
        out["event_count"] = self.count
        self._emit(out)
        self.close()

    def close(self):
        if not self._closed:
            self._closed = True
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def read_metrics(path, allow_partial: bool = False) -> list:
    records = []
    with open(path) as fh:
        for i, line in enumerate(fh, 1):
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError:
                raise PartialMetrics(f"{path}:{i}: truncated record", records) from None
    if not records or records[0].get("record") != "header":
        raise PartialMetrics(f"{path}: missing header record", records)
    if records[-1].get("record") != "summary" and not allow_partial:
        raise PartialMetrics(f"{path}: missing summary record (run did not finish)", records)
    return records


def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(v)) if not isinstance(v, int) else v for v in row])


def write_decay_csv(report, path) -> None:
    """Columns ``t, sup_norm, weighted, running_sup`` from a decay report."""
    _write_csv(path, DECAY_COLUMNS, report.rows())


def write_probe_csv(reports, path) -> None:
    _write_csv(path, PROBE_COLUMNS,
               ((r.alpha, r.s0, r.s1, int(r.corpus_size), r.besov_constant, r.gradient_constant,
                 r.projected_gradient_constant) for r in reports))
