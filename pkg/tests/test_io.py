import csv
import json
from pathlib import Path

import numpy as np
import pytest

from hallmhd.constraints import InfeasibleParameters
from hallmhd.emhd import decay_monitor
from hallmhd.duhamel import Trajectory
from hallmhd.generators import random_band_limited, single_mode
from hallmhd.grid import GridSpec
from hallmhd.io import (
    DECAY_COLUMNS,
    ConfigError,
    MetricsWriter,
    PartialMetrics,
    SnapshotError,
    load_config,
    load_snapshot,
    parse_config,
    read_metrics,
    read_snapshot_header,
    save_snapshot,
    write_decay_csv,
    write_probe_csv,
)
from hallmhd.picard import picard_solve
from hallmhd.semigroup import smoothing_probe

PARAMS = {"alpha1": 0.9, "alpha2": 1.5, "beta": 2.2, "gamma": 1.2, "nu": 1, "mu": 1, "eta": 1}


def config_text(**over):
    cfg = {"params": dict(PARAMS)}
    cfg.update(over)
    return json.dumps(cfg, indent=1)


class TestConfig:
    def test_minimal_loads_with_defaults(self):
        cfg = parse_config(config_text())
        assert cfg.model == "hall-mhd" and cfg.grid.n == 32
        assert (cfg.horizon, cfg.node_count, cfg.tolerance, cfg.max_iter, cfg.seed) == (
            0.5, 64, 1e-10, 50, 0)

    def test_equal_orders_rejected(self):
        p = dict(PARAMS, alpha1=1.0, alpha2=1.0)
        with pytest.raises(InfeasibleParameters) as exc:
            parse_config(json.dumps({"params": p}))
        assert 4 in [line.index for line in exc.value.report.violated]

    def test_unknown_key_named_with_line(self):
        p = dict(PARAMS, alpha3=2.0)
        text = json.dumps({"params": p}, indent=1)
        with pytest.raises(ConfigError, match="alpha3") as exc:
            parse_config(text)
        assert exc.value.line == text.splitlines().index('  "alpha3": 2.0') + 1

    def test_parse_error_line(self):
        with pytest.raises(ConfigError) as exc:
            parse_config('{\n "params": {\n  "alpha1": ,\n }\n}')
        assert exc.value.line == 3

    def test_missing_physical_parameter(self):
        p = dict(PARAMS)
        del p["nu"]
        with pytest.raises(ConfigError, match="nu"):
            parse_config(json.dumps({"params": p}))

    def test_emhd_model(self):
        text = json.dumps({"model": "emhd", "params": {"alpha2": 1.5, "mu": 1, "eta": 1}})
        cfg = parse_config(text)
        assert cfg.horizon == 100.0 and cfg.params["alpha2"] == 1.5
        with pytest.raises(ConfigError, match="alpha2"):
            parse_config(text.replace("1.5", "2.5"))

    @pytest.mark.parametrize("section,value", [
        ("run", {"M": 4}),
        ("run", {"T": "long"}),
        ("grid", {"n": 7}),
        ("model", "mhd"),
        ("initial_data", {"u": {"amplitude": 1}}),
        ("initial_data", {"w": {"kind": "zero"}}),
    ])
    def test_invalid_sections(self, section, value):
        with pytest.raises(ConfigError):
            parse_config(config_text(**{section: value}))

    def test_seed_determines_data(self):
        text = config_text(grid={"n": 16},
                           initial_data={"u": {"kind": "random-band-limited", "amplitude": 0.1}})
        a = parse_config(text).initial_fields()["u"]
        b = parse_config(text).initial_fields()["u"]
        c = parse_config(text).with_seed(5).initial_fields()["u"]
        assert np.array_equal(a.coeffs, b.coeffs) and not np.array_equal(a.coeffs, c.coeffs)

    def test_snapshot_initial_data(self, tmp_path):
        grid = GridSpec(16)
        f = single_mode(grid, (1, 0, 0), (0, 1, 0), 0.1)
        save_snapshot(f, tmp_path / "u.fld")
        path = tmp_path / "run.json"
        path.write_text(config_text(grid={"n": 16}, initial_data={"u": {"snapshot": "u.fld"}}))
        u = load_config(path).initial_fields()["u"]
        assert np.array_equal(u.values, f.values)


class TestSnapshot:
    def test_round_trip_bit_exact(self, tmp_path, grid16, rng):
        f = random_band_limited(grid16, rng)
        save_snapshot(f, tmp_path / "f.fld", time=0.25)
        g = load_snapshot(tmp_path / "f.fld")
        assert np.array_equal(g.values, f.values)
        h = read_snapshot_header(tmp_path / "f.fld")
        assert h["n"] == 16 and h["time"] == 0.25 and h["solenoidal"] is True

    def test_layout_x1_fastest(self, tmp_path, grid16):
        f = single_mode(grid16, (1, 0, 0), (0, 1, 0))
        save_snapshot(f, tmp_path / "f.fld")
        raw = (tmp_path / "f.fld").read_bytes().split(b"\n", 1)[1]
        data = np.frombuffer(raw, dtype="<f8")
        np.testing.assert_array_equal(data[16**3:16**3 + 16], f.values[1, :, 0, 0])

    def test_truncated(self, tmp_path, grid16):
        save_snapshot(single_mode(grid16), tmp_path / "f.fld")
        raw = (tmp_path / "f.fld").read_bytes()
        (tmp_path / "f.fld").write_bytes(raw[:-8])
        with pytest.raises(SnapshotError, match="bytes"):
            load_snapshot(tmp_path / "f.fld")

    def test_grid_mismatch(self, tmp_path, grid32):
        save_snapshot(single_mode(grid32), tmp_path / "f.fld")
        with pytest.raises(SnapshotError, match="n=32.*n=64"):
            load_snapshot(tmp_path / "f.fld", GridSpec(64))

    def test_version_mismatch(self, tmp_path, grid16):
        save_snapshot(single_mode(grid16), tmp_path / "f.fld")
        raw = (tmp_path / "f.fld").read_bytes().replace(b'"version": 1', b'"version": 9')
        (tmp_path / "f.fld").write_bytes(raw)
        with pytest.raises(SnapshotError, match="version"):
            load_snapshot(tmp_path / "f.fld")


class TestMetrics:
    def test_empty_run(self, tmp_path):
        with MetricsWriter(tmp_path / "m.ndjson") as w:
            w.summary()
        recs = read_metrics(tmp_path / "m.ndjson")
        assert [r["record"] for r in recs] == ["header", "summary"]

    def test_picard_iterations_counted(self, tmp_path, grid16):
        u0 = single_mode(grid16, (1, 0, 0), (0, 1, 0), 0.01)
        b0 = single_mode(grid16, (0, 1, 0), (0, 0, 1), 0.01)
        from hallmhd.constraints import ParamSet
        p = ParamSet(**PARAMS)
        w = MetricsWriter(tmp_path / "m.ndjson")
        rep = picard_solve(u0, b0, p, 0.5, 16, tol=1e-30, max_iter=7, on_iteration=w)
        w.summary(rep.summary())
        recs = read_metrics(tmp_path / "m.ndjson")
        kinds = [r["record"] for r in recs]
        assert kinds.count("iteration") == 7 and kinds[-1] == "summary"
        assert recs[-1]["event_count"] == 7

    def test_partial_flagged(self, tmp_path):
        w = MetricsWriter(tmp_path / "m.ndjson")
        w.write({"record": "iteration", "iteration": 1})
        w.close()
        with pytest.raises(PartialMetrics, match="summary") as exc:
            read_metrics(tmp_path / "m.ndjson")
        assert len(exc.value.records) == 2
        assert len(read_metrics(tmp_path / "m.ndjson", allow_partial=True)) == 2

    def test_deterministic_apart_from_timestamp(self, tmp_path):
        outs = []
        for name in ("a", "b"):
            w = MetricsWriter(tmp_path / name, {"seed": 1})
            w.write({"record": "iteration", "increment": 0.1})
            w.summary({"ok": True})
            lines = (tmp_path / name).read_text().splitlines()
            head = json.loads(lines[0])
            head.pop("timestamp")
            outs.append((head, lines[1:]))
        assert outs[0] == outs[1]

    def test_reserved_records(self, tmp_path):
        with MetricsWriter(tmp_path / "m") as w:
            with pytest.raises(ValueError):
                w.write({"record": "summary"})


class TestCsv:
    def test_decay_columns(self, tmp_path, grid16):
        b = Trajectory.caloric(single_mode(grid16), 1.0, 8, 1.5, 1.0)
        write_decay_csv(decay_monitor(b, 1.5), tmp_path / "d.csv")
        rows = list(csv.reader(open(tmp_path / "d.csv")))
        assert tuple(rows[0]) == DECAY_COLUMNS == ("t", "sup_norm", "weighted", "running_sup")
        assert len(rows) == 10

    def test_probe_table(self, tmp_path, grid16):
        r = smoothing_probe(1.0, -1.0, 0.0, fields=[single_mode(grid16)], grid=grid16)
        write_probe_csv([r], tmp_path / "p.csv")
        rows = list(csv.reader(open(tmp_path / "p.csv")))
        assert rows[0][:3] == ["alpha", "s0", "s1"] and rows[1][3] == "1"


CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


@pytest.mark.parametrize("name, model", [("reference.json", "hall-mhd"), ("emhd.json", "emhd")])
def test_shipped_configs_parse(name, model):
    cfg = load_config(CONFIG_DIR / name)
    assert cfg.model == model
    fields = cfg.initial_fields()
    assert all(f.check_solenoidal() for f in fields.values())
