import json
import subprocess
import sys

import numpy as np
import pytest

from csdnls.cli import main, run_verify
from csdnls.hardy import HardyState
from csdnls.io import (ConfigError, initial_state, load_config, read_trajectory,
                       resolve_config, resolved_lambda_shift, sample_times, write_trajectory)
from csdnls.propagator import TrajectoryRecord

SMALL_VERIFY = {"n_random": 10, "gap_pairs": 50, "spectral_states": 10, "lipschitz_directions": 2}


def write_cfg(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def run(args):
    return main([str(a) for a in args])


class TestConfig:
    def test_defaults_filled(self):
        cfg = resolve_config({"equation": {"sign": "focusing", "N": 8},
                              "initial": {"single_mode": {"n": 1, "amplitude": 0.5}}})
        assert cfg["method"] == "both" and cfg["time"]["dt"] == 1e-4
        assert sample_times(cfg)[-1] == 1.0 and len(sample_times(cfg)) == 11

    def test_missing_N_named(self):
        with pytest.raises(ConfigError, match="N"):
            resolve_config({"equation": {"sign": "focusing"}, "initial": {"coeffs": [1]}})

    @pytest.mark.parametrize("bad", [
        {"initial": {"coeffs": [1], "single_mode": {"n": 0, "amplitude": 1}}},
        {"initial": {"coeffs": [1] * 20}},
        {"initial": {"rational": {"q_re": 1.0, "q_im": 0.0}}},
        {"time": {"samples": [0.5, 0.1]}},
        {"method": "magic"},
    ])
    def test_rejections(self, bad):
        raw = {"equation": {"sign": "focusing", "N": 8}, "initial": {"coeffs": [1]}}
        raw.update(bad)
        with pytest.raises(ConfigError):
            resolve_config(raw)

    def test_complex_and_auto_shift(self):
        cfg = resolve_config({"equation": {"sign": "defocusing", "N": 4},
                              "initial": {"coeffs": [{"re": 0.6, "im": 0}, {"re": 0, "im": 0.8}]}})
        u = initial_state(cfg)
        assert np.array_equal(u.coeffs, [0.6, 0.8j, 0, 0, 0])
        assert resolved_lambda_shift(cfg, u) == pytest.approx(3.0)

    def test_load_errors(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.json")
        (tmp_path / "bad.json").write_text("{")
        with pytest.raises(ConfigError):
            load_config(tmp_path / "bad.json")


class TestTrajectoryFormat:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        states = [HardyState(rng.standard_normal(6) + 1j * rng.standard_normal(6)) for _ in range(3)]
        tr = TrajectoryRecord([0.0, 0.1, 1 / 3], states, "direct")
        write_trajectory(tmp_path / "t.tsv", tr, {"a": 1})
        back, cfg = read_trajectory(tmp_path / "t.tsv")
        assert cfg == {"a": 1} and back.method == "direct"
        assert np.array_equal(back.times, tr.times)
        for a, b in zip(back.states, states):
            assert np.array_equal(a.coeffs, b.coeffs)


class TestEvolve:
    def test_single_mode_both(self, tmp_path):
        cfg = write_cfg(tmp_path / "c.json", {
            "equation": {"sign": "focusing", "N": 16},
            "initial": {"single_mode": {"n": 1, "amplitude": 0.5}},
            "time": {"t_final": 1.0, "dt": 1e-3, "samples": 5}})
        assert run(["evolve", "--config", cfg, "--out", tmp_path / "o"]) == 0
        doc = json.loads((tmp_path / "o" / "report.json").read_text())
        assert max(doc["method_disagreement"]) <= 1e-10
        assert doc["primary_method"] == "direct"
        assert (tmp_path / "o" / "trajectory_explicit.tsv").exists()

    def test_missing_N_exit_1(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path / "c.json", {"equation": {"sign": "focusing"},
                                              "initial": {"coeffs": [1]}})
        assert run(["evolve", "--config", cfg, "--out", tmp_path / "o"]) == 1
        assert "'N'" in capsys.readouterr().err

    def test_blowup_exit_2(self, tmp_path):
        cfg = write_cfg(tmp_path / "c.json", {
            "equation": {"sign": "focusing", "N": 8}, "initial": {"coeffs": [3.0] * 9},
            "time": {"t_final": 1.0, "dt": 0.1, "samples": 2}, "method": "direct"})
        with pytest.warns(RuntimeWarning):
            assert run(["evolve", "--config", cfg, "--out", tmp_path / "o"]) == 2

    def test_small_shift_exit_1(self, tmp_path):
        cfg = write_cfg(tmp_path / "c.json", {
            "equation": {"sign": "focusing", "N": 8}, "initial": {"coeffs": [0.9]},
            "time": {"t_final": 0.1, "dt": 1e-3, "samples": 2}, "lambda_shift": 0.1})
        assert run(["evolve", "--config", cfg, "--out", tmp_path / "o"]) == 1

    def test_outside_theorem_auto_shift(self, tmp_path):
        cfg = write_cfg(tmp_path / "c.json", {
            "equation": {"sign": "focusing", "N": 8}, "initial": {"coeffs": [1.2, 0.3]},
            "time": {"t_final": 0.05, "dt": 1e-3, "samples": 2}, "diagnostics": {"birkhoff": False}})
        assert run(["evolve", "--config", cfg, "--out", tmp_path / "o"]) == 0
        doc = json.loads((tmp_path / "o" / "report.json").read_text())
        assert "outside-theorem" in doc["report"]["tags"]


class TestSpectrum:
    def _spec(self, tmp_path, sign, initial, **extra):
        cfg = write_cfg(tmp_path / "c.json", {"equation": {"sign": sign, "N": 6},
                                              "initial": initial, **extra})
        assert run(["spectrum", "--config", cfg, "--out", tmp_path / "o"]) == 0
        return json.loads((tmp_path / "o" / "spectrum.json").read_text())

    def test_zero(self, tmp_path):
        doc = self._spec(tmp_path, "focusing", {"coeffs": [0]})
        assert doc["eigenvalues"] == list(range(7))

    def test_constant(self, tmp_path):
        doc = self._spec(tmp_path, "focusing", {"coeffs": [0.5]}, output={"eigenvectors": True})
        assert np.allclose(doc["eigenvalues"], np.arange(7) - 0.25)
        assert len(doc["eigenvectors"]) == 7

    def test_defocusing_random(self, tmp_path, rng):
        c = [{"re": float(x), "im": float(y)} for x, y in rng.standard_normal((7, 2))]
        doc = self._spec(tmp_path, "defocusing", {"coeffs": c})
        assert np.all(np.array(doc["eigenvalues"]) >= np.arange(7) - 1e-10)


class TestVerify:
    def _cfg(self, tmp_path, name="v.json", **extra):
        doc = {"equation": {"sign": "focusing", "N": 24},
               "initial": {"coeffs": [0.2, 0.3]}, "verify": SMALL_VERIFY, **extra}
        return write_cfg(tmp_path / name, doc)

    def test_pass(self, tmp_path):
        assert run(["verify", "--config", self._cfg(tmp_path), "--out", tmp_path / "o"]) == 0
        doc = json.loads((tmp_path / "o" / "verify.json").read_text())
        assert doc["all_pass"] and set(doc["checks"]) >= {"commutator_L", "commutator_B",
                                                          "lax_residual", "sharp_gap_min"}

    def test_corrupt_hook(self, tmp_path):
        cfg = self._cfg(tmp_path, test_hooks={"corrupt_b_sign": True})
        assert run(["verify", "--config", cfg, "--out", tmp_path / "o"]) == 3
        doc = json.loads((tmp_path / "o" / "verify.json").read_text())
        assert not doc["checks"]["commutator_B"]["pass"]

    def test_outside_theorem_tag(self, tmp_path):
        cfg = resolve_config({"equation": {"sign": "focusing", "N": 12},
                              "initial": {"coeffs": [1.1, 0.2]}, "verify": SMALL_VERIFY})
        assert "outside-theorem" in run_verify(cfg)["tags"]

    def test_seed_override_changes_nothing_structural(self, tmp_path):
        cfg = self._cfg(tmp_path)
        run(["verify", "--config", cfg, "--out", tmp_path / "a", "--seed", "5"])
        doc = json.loads((tmp_path / "a" / "verify.json").read_text())
        assert doc["config"]["seed"] == 5

    def test_jobs_and_duplicate_stems(self, tmp_path):
        a = self._cfg(tmp_path, "a.json")
        b = self._cfg(tmp_path, "b.json")
        assert run(["verify", "--config", a, "--config", b, "--jobs", 2, "--out", tmp_path / "o"]) == 0
        assert (tmp_path / "o" / "a" / "verify.json").exists()
        (tmp_path / "d").mkdir()
        dup = self._cfg(tmp_path / "d", "a.json")
        assert run(["verify", "--config", a, "--config", dup, "--out", tmp_path / "p"]) == 1


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "csdnls.cli", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "csdnls" in out.stdout
