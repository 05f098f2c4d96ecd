import os

import pytest

from uniflux.cli import main

CONFIG = """
epsilon = 1.0
gamma = 1000
dt = 1.0
n_bins = 50
n_trajectories = 300
seed = 3
source_lo.concentration = 1.0
"""


@pytest.fixture
def config_path(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(CONFIG)
    return str(p)


class TestRunCommand:
    def test_success_writes_profile_and_figure(self, config_path, tmp_path, capsys):
        out = str(tmp_path / "out")
        assert main(["run", "--config", config_path, "--out", out]) == 0
        assert os.path.exists(os.path.join(out, "profile.csv"))
        assert os.path.exists(os.path.join(out, "profile.png"))
        assert "net_flux" in capsys.readouterr().out

    def test_seed_override_changes_bytes(self, config_path, tmp_path):
        out_a, out_b, out_c = (str(tmp_path / d) for d in ("a", "b", "c"))
        main(["run", "--config", config_path, "--out", out_a])
        main(["run", "--config", config_path, "--out", out_b, "--seed", "99"])
        main(["run", "--config", config_path, "--out", out_c, "--seed", "3"])
        read = lambda d: open(os.path.join(d, "profile.csv"), "rb").read()
        assert read(out_a) != read(out_b)
        assert read(out_a) == read(out_c)

    def test_probes_emit_flux_csv(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text(CONFIG + "probes = 0.5\n")
        out = str(tmp_path / "out")
        assert main(["run", "--config", str(p), "--out", out]) == 0
        assert os.path.exists(os.path.join(out, "flux.csv"))

    def test_unknown_key_is_config_error(self, tmp_path, capsys):
        p = tmp_path / "bad.cfg"
        p.write_text(CONFIG + "volume = 3\n")
        assert main(["run", "--config", str(p)]) == 1
        assert "unknown config key" in capsys.readouterr().err

    def test_missing_file_is_config_error(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nope.cfg")]) == 1

    def test_invalid_physical_value_is_config_error(self, tmp_path, capsys):
        p = tmp_path / "bad.cfg"
        p.write_text("gamma = -1\nn_trajectories = 10\nsource_lo.concentration = 1\n")
        assert main(["run", "--config", str(p)]) == 1
        assert "gamma" in capsys.readouterr().err

    def test_unwritable_output_is_runtime_error(self, config_path, tmp_path, capsys):
        target = tmp_path / "blocked"
        target.write_text("a file, not a directory")
        assert main(["run", "--config", config_path, "--out", str(target)]) == 2


class TestPresetCommand:
    def test_match_check_preset(self, tmp_path, capsys):
        out = str(tmp_path / "mc")
        assert main(["preset", "match-check", "--out", out]) == 0
        path = os.path.join(out, "match_check.csv")
        assert os.path.exists(path)
        lines = open(path).read().splitlines()
        assert lines[0] == "n_probes,max_rel_difference"
        assert float(lines[1].split(",")[1]) < 1e-12

    def test_unknown_preset_rejected_by_argparse(self, capsys):
        with pytest.raises(SystemExit):
            main(["preset", "fig9"])

    def test_preset_key_in_config_dispatches(self, tmp_path, capsys):
        cfg = tmp_path / "p.cfg"
        cfg.write_text("preset = match-check\nseed = 5\n")
        out = str(tmp_path / "out")
        assert main(["run", "--config", str(cfg), "--out", out]) == 0
        assert os.path.exists(os.path.join(out, "match_check.csv"))

    def test_unknown_preset_in_config_is_config_error(self, tmp_path, capsys):
        cfg = tmp_path / "p.cfg"
        cfg.write_text("preset = fig9\n")
        assert main(["run", "--config", str(cfg)]) == 1


class TestCalibrateCommand:
    def test_trivial_targets(self, config_path, tmp_path, capsys):
        cfg = tmp_path / "cal.cfg"
        cfg.write_text(CONFIG.replace("n_trajectories = 300", "duration = 500"))
        out = str(tmp_path / "cal")
        code = main(["calibrate", "--config", str(cfg), "--cl", "0", "--cr", "0",
                     "--tol", "0.05", "--out", out])
        assert code == 0
        assert "converged: True" in capsys.readouterr().out
        assert os.path.exists(os.path.join(out, "calibrated_profile.csv"))
        assert os.path.exists(os.path.join(out, "calibrated_profile.png"))

    def test_nonconvergence_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "cal.cfg"
        # a one-step window cannot reach any boundary concentration
        cfg.write_text(CONFIG.replace("n_trajectories = 300", "duration = 5"))
        code = main(["calibrate", "--config", str(cfg), "--cl", "1", "--cr", "0", "--tol", "0.01"])
        assert code == 3
        assert "did not converge" in capsys.readouterr().err
