import json
import os
import subprocess
import sys

import numpy as np
import pytest

from shotvqe import output
from shotvqe.config import (ConfigError, default_config, load_config,
                            parse_config)
from shotvqe.scenarios import run_scenario, scenario_config


def run_cli(*args, env_extra=None):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run([sys.executable, "-m", "shotvqe.cli", *args],
                          capture_output=True, text=True, env=env)


class TestConfigParsing:
    def test_minimal_config_fully_defaulted(self):
        cfg = parse_config("[lattice]\ngeometry = square\n[hamiltonian]\nj2 = 0.2\n")
        assert cfg["hamiltonian"]["j2"] == 0.2
        assert cfg["optimizer"]["eta"] == 0.1
        assert cfg["shots"]["ns"] == 16

    def test_round_trip(self):
        cfg = parse_config("[optimizer]\neta = 0.25\n[sweep]\nns_grid = 1,2,4\n")
        again = parse_config(cfg.to_ini())
        assert again == cfg

    def test_nonpositive_eta_rejected(self):
        with pytest.raises(ConfigError, match="optimizer.eta"):
            parse_config("[optimizer]\neta = -0.5\n")

    def test_unknown_key_suggestion(self):
        with pytest.raises(ConfigError, match="learning_rte"):
            parse_config("[optimizer]\nlearning_rte = 0.1\n")

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="unknown config section"):
            parse_config("[optimzer]\neta = 0.1\n")

    def test_colon_range_grid(self):
        cfg = parse_config("[sweep]\nns_grid = 2:64\n")
        grid = cfg["sweep"]["ns_grid"]
        assert grid[0] == 2 and grid[-1] <= 64
        assert all(b > a for a, b in zip(grid, grid[1:]))

    def test_override_replace(self):
        cfg = default_config().replace("optimizer", "eta", "0.33")
        assert cfg["optimizer"]["eta"] == 0.33
        with pytest.raises(ConfigError, match="unknown config key"):
            default_config().replace("optimizer", "etaa", "0.1")


class TestOutputFormats:
    def test_csv_header_and_roundtrip(self, tmp_path):
        path = tmp_path / "t.csv"
        rows = [{"a": 1, "b": 0.5}, {"a": 2, "b": 1.5}]
        output.write_csv(path, ["a", "b"], rows, {"scenario": "t", "config": {}})
        snap, back = output.read_csv(path)
        assert snap["scenario"] == "t"
        assert back[0]["a"] == "1"
        assert float(back[1]["b"]) == 1.5

    def test_eigenvector_cache_roundtrip(self, tmp_path, rng):
        states = rng.normal(size=(3, 16)) + 1j * rng.normal(size=(3, 16))
        path = tmp_path / "vec.bin"
        output.eigenvector_cache_write(path, 4, states)
        n, back = output.eigenvector_cache_read(path)
        assert n == 4
        np.testing.assert_allclose(back, states, atol=1e-15)

    def test_reproducible_modulo_meta(self, tmp_path):
        cfg = scenario_config("ed", "[lattice]\nl1 = 2\nl2 = 2\n"
                                    "[hamiltonian]\nj2 = 0.0\n")
        run_scenario("ed", cfg, tmp_path / "a")
        run_scenario("ed", cfg, tmp_path / "b")
        for name in ("spectrum.csv", "gaps.csv"):
            a = (tmp_path / "a" / "ed" / name).read_text().splitlines()
            b = (tmp_path / "b" / "ed" / name).read_text().splitlines()
            assert a[0] == b[0]
            assert a[2:] == b[2:]
            assert a[1].startswith("# meta: ")


class TestCliCommands:
    def test_scenarios_listing(self):
        r = run_cli("scenarios")
        assert r.returncode == 0
        assert "fig1a" in r.stdout

    def test_validate_echoes_normalized(self, tmp_path):
        p = tmp_path / "c.ini"
        p.write_text("[hamiltonian]\nj2 = 0.3\n")
        r = run_cli("validate", "--config", str(p))
        assert r.returncode == 0
        assert "j2 = 0.3" in r.stdout
        assert "eta = 0.1" in r.stdout

    def test_validate_bad_key_exit_2(self, tmp_path):
        p = tmp_path / "c.ini"
        p.write_text("[optimizer]\nlearning_rte = 0.1\n")
        r = run_cli("validate", "--config", str(p))
        assert r.returncode == 2
        assert "learning_rte" in r.stderr

    def test_run_ed_and_outputs(self, tmp_path):
        r = run_cli("run", "--scenario", "ed", "--lattice", "2x2",
                    "--j2", "0.0", "--boundary", "periodic,periodic",
                    "--out-dir", str(tmp_path))
        assert r.returncode == 0
        snap, rows = output.read_csv(tmp_path / "ed" / "spectrum.csv")
        assert len(rows) == 4
        assert abs(float(rows[0]["energy"]) - (-2.0)) < 1e-8

    def test_resource_guard_exit_3(self, tmp_path):
        r = run_cli("run", "--scenario", "ed", "--lattice", "5x4",
                    "--out-dir", str(tmp_path))
        assert r.returncode == 3

    def test_env_var_out_dir(self, tmp_path):
        r = run_cli("run", "--scenario", "lattice", "--lattice", "2x2",
                    env_extra={"SHOTVQE_OUT_DIR": str(tmp_path)})
        assert r.returncode == 0
        assert (tmp_path / "lattice" / "bonds.csv").exists()

    def test_bad_override_exit_2(self, tmp_path):
        r = run_cli("run", "--scenario", "ed", "--set", "optimizer.eta=-1",
                    "--out-dir", str(tmp_path))
        assert r.returncode == 2
