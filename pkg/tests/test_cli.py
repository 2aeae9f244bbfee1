import json

import numpy as np
import pytest

from riccati_place.cli import (
    build_model,
    load_matrix,
    main,
    parse_config,
    resolve_weight,
    save_matrix,
)
from riccati_place.errors import ConfigError


def base_config(**overrides):
    raw = {
        "model": {"kind": "heat1d", "n": 8, "diffusivity": 1.0, "domain_length": 1.0},
        "device": {"kind": "gaussian_actuator", "sigma": 0.15},
        "problem": {"variant": 1, "beta": 10.0, "W": "identity", "Q": "identity"},
        "solver": {"tol": 1e-8, "max_iter": 200, "seed": 1, "damping": 1.0},
    }
    for section, fields in overrides.items():
        raw.setdefault(section, {}).update(fields)
    return raw


class TestBuildModel:
    def test_two_node_stencil(self):
        cfg = parse_config(base_config(model={"n": 2, "domain_length": 3.0}))
        A, grid = build_model(cfg)
        np.testing.assert_allclose(A, [[-2.0, 1.0], [1.0, -2.0]])
        np.testing.assert_allclose(grid, [1.0, 2.0])

    def test_single_interior_node(self):
        cfg = parse_config(base_config(model={"n": 1, "domain_length": 2.0}))
        A, grid = build_model(cfg)
        np.testing.assert_allclose(A, [[-2.0]])
        np.testing.assert_allclose(grid, [1.0])

    def test_spectrum_closed_form(self):
        n, nu, length = 12, 0.7, 2.0
        cfg = parse_config(base_config(model={"n": n, "diffusivity": nu,
                                              "domain_length": length}))
        A, _ = build_model(cfg)
        h = length / (n + 1)
        expected = sorted(-(2 * nu / h**2) * (1 - np.cos(k * np.pi / (n + 1)))
                          for k in range(1, n + 1))
        np.testing.assert_allclose(sorted(np.linalg.eigvalsh(A)), expected,
                                   rtol=1e-10, atol=1e-10)

    def test_matrix_file_model(self, tmp_path):
        A = np.array([[-3.0, 0.5], [0.5, -2.0]])
        path = tmp_path / "A.txt"
        save_matrix(path, A)
        raw = base_config(model={"kind": "matrix_file", "file_path": str(path)},
                          device={"grid": [0.0, 1.0]})
        del raw["model"]["n"], raw["model"]["diffusivity"], raw["model"]["domain_length"]
        cfg = parse_config(raw)
        A2, grid = build_model(cfg)
        np.testing.assert_array_equal(A2, A)
        np.testing.assert_array_equal(grid, [0.0, 1.0])


class TestConfigValidation:
    def test_unknown_key_has_field_path(self):
        raw = base_config()
        raw["solver"]["typo_field"] = 1
        with pytest.raises(ConfigError) as exc:
            parse_config(raw)
        assert "typo_field" in str(exc.value) and "solver" in str(exc.value)

    def test_variant_2_requires_gamma(self):
        raw = base_config(problem={"variant": 2})
        with pytest.raises(ConfigError) as exc:
            parse_config(raw)
        assert "gamma" in str(exc.value)

    def test_bad_types_rejected(self):
        with pytest.raises(ConfigError):
            parse_config(base_config(model={"n": "eight"}))
        with pytest.raises(ConfigError):
            parse_config(base_config(problem={"beta": -1.0}))
        with pytest.raises(ConfigError):
            parse_config(base_config(solver={"damping": 1.5}))

    def test_rank1_weight(self):
        W = resolve_weight("rank1:3", 8, "problem.W")
        assert W[2, 2] == 1.0 and W.sum() == 1.0
        with pytest.raises(ConfigError):
            resolve_weight("rank1:9", 8, "problem.W")
        with pytest.raises(ConfigError):
            resolve_weight("rank1:x", 8, "problem.W")


class TestMatrixFiles:
    def test_round_trip_is_exact(self, tmp_path, rng):
        T = rng.standard_normal((5, 5)) * np.exp(rng.uniform(-20, 20, (5, 5)))
        path = tmp_path / "m.txt"
        save_matrix(path, T)
        back = load_matrix(path, "test")
        assert np.array_equal(back, T)  # 17 significant digits round-trip doubles

    def test_dimension_line_enforced(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("3\n1 2 3 4\n")
        with pytest.raises(ConfigError):
            load_matrix(path, "test")


class TestCommands:
    def write_cfg(self, tmp_path, raw):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(raw))
        return str(path)

    def test_certify(self, tmp_path):
        cfg = self.write_cfg(tmp_path, base_config())
        code = main(["certify", "--config", cfg, "--out", str(tmp_path / "out")])
        assert code == 0
        payload = json.loads((tmp_path / "out" / "certificate.json").read_text())
        assert payload["alpha"] > 0 and payload["M"] >= 1.0

    def test_solve_are_report(self, tmp_path):
        cfg = self.write_cfg(tmp_path, base_config())
        code = main(["solve-are", "--config", cfg, "--out", str(tmp_path / "out")])
        assert code == 0
        payload = json.loads((tmp_path / "out" / "report.json").read_text())
        assert payload["trace_bound_holds"] and payload["X_psd"]
        assert payload["strong_residual"] <= 1e-9

    def test_optimize_w_zero_gives_origin(self, tmp_path):
        Wpath = tmp_path / "Wzero.txt"
        save_matrix(Wpath, np.zeros((8, 8)))
        raw = base_config(problem={"W": str(Wpath)})
        cfg = self.write_cfg(tmp_path, raw)
        code = main(["optimize", "--config", cfg, "--out", str(tmp_path / "out")])
        assert code == 0
        payload = json.loads((tmp_path / "out" / "report.json").read_text())
        assert payload["converged"]
        assert abs(payload["p"][0]) <= 1e-8

    def test_sweep_beta_csv(self, tmp_path):
        raw = base_config(problem={"variant": 2, "gamma": 1.9, "W": "rank1:2"},
                          solver={"tol": 1e-6})
        cfg = self.write_cfg(tmp_path, raw)
        code = main(["sweep-beta", "--config", cfg, "--out", str(tmp_path / "out"),
                     "--betas", "10,100,1000"])
        lines = (tmp_path / "out" / "sweep.csv").read_text().strip().splitlines()
        assert lines[0].startswith("beta,trace_gap,cost,k,converged,iters,p_0")
        assert len(lines) == 4
        gaps = [float(line.split(",")[1]) for line in lines[1:]]
        assert gaps[0] > gaps[1] > gaps[2]
        assert code in (0, 2)

    def test_determinism_byte_identical(self, tmp_path):
        raw = base_config(problem={"variant": 2, "gamma": 1.9, "W": "rank1:2"},
                          solver={"tol": 1e-6, "seed": 42})
        cfg = self.write_cfg(tmp_path, raw)
        for out in ("r1", "r2"):
            assert main(["optimize", "--config", cfg,
                         "--out", str(tmp_path / out)]) in (0, 2)
        b1 = (tmp_path / "r1" / "report.json").read_bytes()
        b2 = (tmp_path / "r2" / "report.json").read_bytes()
        assert b1 == b2

    def test_verify_bounds(self, tmp_path):
        cfg = self.write_cfg(tmp_path, base_config())
        code = main(["verify-bounds", "--config", cfg, "--out", str(tmp_path / "out")])
        assert code == 0
        payload = json.loads((tmp_path / "out" / "report.json").read_text())
        assert payload["are_trace_bound_pass"] and payload["dual_norm_bound_pass"]
        assert payload["x_passing_readings"] and payload["lambda_passing_readings"]

    def test_config_error_exit_code(self, tmp_path, capsys):
        raw = base_config()
        raw["problem"]["variant"] = 3
        cfg = self.write_cfg(tmp_path, raw)
        assert main(["certify", "--config", cfg, "--out", str(tmp_path / "out")]) == 1
        assert "config error" in capsys.readouterr().err

    def test_nonconvergence_exit_code_still_writes_report(self, tmp_path):
        raw = base_config(solver={"max_iter": 1, "tol": 1e-14})
        cfg = self.write_cfg(tmp_path, raw)
        code = main(["optimize", "--config", cfg, "--out", str(tmp_path / "out")])
        assert code == 2
        assert (tmp_path / "out" / "report.json").exists()
