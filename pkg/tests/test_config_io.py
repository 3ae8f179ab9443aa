import json

import numpy as np
import pytest

from conftest import TWO_PI, random_divfree_field
from nsrw.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from nsrw.cli import build_parser, main
from nsrw.config import (
    ConfigError,
    ExperimentConfig,
    config_from_dict,
    parse_config,
    serialize_config,
)


def write_config(tmp_path, **fields):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(fields))
    return path


class TestConfigParsing:
    def test_minimal_2d_config(self, tmp_path):
        path = write_config(
            tmp_path, experiment="solve", d=2, N=64, L=6.2832, T=1.0, s=0.25
        )
        cfg = parse_config(path)
        assert cfg.d == 2 and cfg.N == 64 and cfg.s == 0.25
        assert cfg.family == "gaussian"  # defaults filled

    def test_round_trip_identity(self, tmp_path):
        path = write_config(
            tmp_path, experiment="tails", d=2, N=32, monte_carlo_M=256, gamma=0.1
        )
        cfg = parse_config(path)
        path2 = tmp_path / "round.json"
        path2.write_text(serialize_config(cfg))
        assert parse_config(path2) == cfg

    def test_unknown_key_fails_closed(self, tmp_path):
        path = write_config(tmp_path, experiment="solve", nu=0.1)
        with pytest.raises(ConfigError, match="unknown config keys: nu"):
            parse_config(path)

    def test_d3_s_range_cites_quarter(self):
        with pytest.raises(ConfigError, match="1/4"):
            config_from_dict({"experiment": "solve", "d": 3, "s": 0.3, "N": 16})
        cfg = config_from_dict({"experiment": "solve", "d": 3, "s": 0.2, "N": 16})
        assert cfg.s == 0.2

    def test_q_below_two_rejected(self):
        with pytest.raises(ConfigError, match="q"):
            config_from_dict({"experiment": "tails", "q": 1})

    def test_tails_admissibility_eager(self):
        # (sigma + s - 2*gamma) * q must be < 2 at parse time
        with pytest.raises(ConfigError, match="inadmissible"):
            config_from_dict({"experiment": "tails", "sigma": 0.5, "s": 0.25, "q": 4})
        cfg = config_from_dict(
            {"experiment": "tails", "sigma": 0.5, "s": 0.25, "gamma": 0.2, "q": 4}
        )
        assert cfg.gamma == 0.2

    def test_report_needs_negative_gamma(self):
        with pytest.raises(ConfigError, match="gamma < 0"):
            config_from_dict({"experiment": "report"})
        with pytest.raises(ConfigError, match="inadmissible"):
            config_from_dict({"experiment": "report", "gamma": -0.2, "s": 0.25})
        cfg = config_from_dict({"experiment": "report", "gamma": -0.1, "s": 0.25})
        assert cfg.gamma == -0.1

    def test_type_checks(self):
        with pytest.raises(ConfigError, match="N"):
            config_from_dict({"N": 64.0})
        with pytest.raises(ConfigError, match="normalize_data"):
            config_from_dict({"normalize_data": 1})

    def test_field_constraints(self):
        for bad in (
            {"d": 4},
            {"N": 63},
            {"N": 4},
            {"L": -1.0},
            {"T": 0.0},
            {"dt": -0.1},
            {"family": "poisson"},
            {"integrator": "ab2"},
            {"data": "vortex"},
            {"data": "taylor_green", "d": 3, "s": 0.2},
            {"cutoff": 1e9},
            {"workers": 0},
            {"k_orders": [5]},
            {"master_seed": -3},
            {"experiment": "simulate"},
        ):
            with pytest.raises(ConfigError):
                config_from_dict(bad)

    def test_effective_cutoff_default(self):
        cfg = ExperimentConfig(N=64, L=TWO_PI)
        assert cfg.effective_cutoff() == pytest.approx(16.0)
        cfg2 = ExperimentConfig(N=64, L=TWO_PI, cutoff=10.0)
        assert cfg2.effective_cutoff() == 10.0


class TestCheckpoint:
    def test_bitwise_round_trip(self, tmp_path, grid2):
        f = random_divfree_field(grid2, seed=1)
        path = tmp_path / "state.nsrw"
        save_checkpoint(f, 0.375, 4.0, path)
        g, t, cutoff = load_checkpoint(path)
        assert t == 0.375 and cutoff == 4.0
        assert g.grid == f.grid
        assert np.array_equal(g.data, f.data)
        # and the file itself is stable: saving again is byte-identical
        path2 = tmp_path / "again.nsrw"
        save_checkpoint(f, 0.375, 4.0, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_corrupt_magic(self, tmp_path, grid2):
        f = random_divfree_field(grid2, seed=2)
        path = tmp_path / "state.nsrw"
        save_checkpoint(f, 0.0, 4.0, path)
        blob = bytearray(path.read_bytes())
        blob[:4] = b"XXXX"
        path.write_bytes(bytes(blob))
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(path)

    def test_version_mismatch(self, tmp_path, grid2):
        f = random_divfree_field(grid2, seed=3)
        path = tmp_path / "state.nsrw"
        save_checkpoint(f, 0.0, 4.0, path)
        blob = bytearray(path.read_bytes())
        blob[4] = 99
        path.write_bytes(bytes(blob))
        with pytest.raises(CheckpointError, match="version"):
            load_checkpoint(path)

    def test_truncated_payload(self, tmp_path, grid2):
        f = random_divfree_field(grid2, seed=4)
        path = tmp_path / "state.nsrw"
        save_checkpoint(f, 0.0, 4.0, path)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) - 16])
        with pytest.raises(CheckpointError, match="truncated"):
            load_checkpoint(path)

    def test_header_layout(self, tmp_path, grid2):
        # magic, version u32, d u32, N u32, L f64, t f64, cutoff f64, LE
        import struct

        f = random_divfree_field(grid2, seed=5)
        path = tmp_path / "state.nsrw"
        save_checkpoint(f, 1.5, 4.0, path)
        blob = path.read_bytes()
        magic, version, d, N, L, t, n = struct.unpack_from("<4sIIIddd", blob)
        assert magic == b"NSRW" and version == 1
        assert (d, N) == (2, 16) and L == pytest.approx(TWO_PI)
        assert (t, n) == (1.5, 4.0)
        assert len(blob) == 40 + d * N**d * 16


class TestCli:
    def test_parser_verbs(self):
        parser = build_parser()
        args = parser.parse_args(["tails", "--config", "c.json", "--M", "100"])
        assert args.verb == "tails" and args.M == 100

    def test_verb_and_overrides(self, tmp_path):
        cfgfile = write_config(
            tmp_path, d=2, N=16, monte_carlo_M=10, T=0.25, dt=0.015625,
            data="smooth_random", randomize_data=False, substep_near_zero=False,
        )
        out = tmp_path / "out"
        status = main(
            ["solve", "--config", str(cfgfile), "--seed", "5", "--out", str(out)]
        )
        assert status == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["experiment"] == "solve"
        assert summary["config"]["master_seed"] == 5
        assert (out / "series.csv").exists() and (out / "meta.json").exists()

    def test_invalid_config_exit_code(self, tmp_path):
        cfgfile = write_config(tmp_path, d=3, s=0.3)
        assert main(["solve", "--config", str(cfgfile)]) == 2
