"""Command line behavior: template and config merging, grid flag rules per
verb, exit codes, and the files each verb leaves behind."""

import os

import numpy as np
import pytest

from a2gradkit.backend import ENV_VAR
from a2gradkit.cli import _config_data, _parse_axis_values, main
from a2gradkit.errors import ConfigError
from a2gradkit.harness import ExperimentConfig, to_yaml


def write_config(tmp_path, name="exp", **kw):
    data = dict(
        name=name,
        problem={"kind": "quadratic", "dim": 4, "condition": 10.0,
                 "noise": {"kind": "gaussian", "level": 0.5}},
        method={"kind": "a2grad", "scheme": "uniform", "beta": 25.0},
        iters=40,
    )
    data.update(kw)
    path = tmp_path / f"{name}.yaml"
    path.write_text(to_yaml(ExperimentConfig(**data)))
    return path


class TestRunVerb:
    def test_template_run_writes_files(self, tmp_path, capsys):
        code = main(["run", "--iters", "50", "--repeats", "2", "--seed", "5",
                     "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "run_a2grad-uni_quadratic_5.csv").exists()
        assert (tmp_path / "run_a2grad-uni_quadratic_6.csv").exists()
        assert (tmp_path / "summary_a2grad-uni_quadratic.csv").exists()
        out = capsys.readouterr().out
        assert "seed 5: rows=51" in out
        assert "subopt=" in out
        assert "wrote" in out

    def test_optimizer_and_problem_selection(self, tmp_path):
        code = main(["run", "--optimizer", "sgd", "--problem", "quadratic",
                     "--lr", "0.001", "--iters", "30", "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "run_sgd_quadratic_0.csv").exists()

    def test_config_file_with_flag_overrides(self, tmp_path, capsys):
        path = write_config(tmp_path)
        out_dir = tmp_path / "results"
        code = main(["run", "--config", str(path), "--iters", "25",
                     "--out", str(out_dir)])
        assert code == 0
        assert "rows=26" in capsys.readouterr().out
        assert (out_dir / "run_exp_0.csv").exists()

    def test_grid_flag_must_be_scalar(self, tmp_path, capsys):
        code = main(["run", "--beta", "1,10", "--iters", "20",
                     "--out", str(tmp_path)])
        assert code == 2
        assert "config error" in capsys.readouterr().err

    def test_aborting_run_exits_three(self, tmp_path, capsys):
        path = write_config(tmp_path, name="diverge", iters=300,
                            method={"kind": "sgd", "learning_rate": 10.0})
        with np.errstate(over="ignore", invalid="ignore"):
            code = main(["run", "--config", str(path), "--out", str(tmp_path)])
        assert code == 3
        assert "ABORTED at iteration" in capsys.readouterr().out
        assert (tmp_path / "run_diverge_0.err").exists()

    def test_unknown_flag_exits_via_argparse(self):
        with pytest.raises(SystemExit):
            main(["run", "--momentum", "0.9"])

    def test_verb_is_required(self):
        with pytest.raises(SystemExit):
            main([])


class TestConfigMerging:
    class Args:
        """Bare argparse.Namespace stand-in for _config_data."""

        def __init__(self, **kw):
            defaults = dict(config=None, out=None, seed=None, iters=None,
                            repeats=None, parallel=None, objective_every=None,
                            optimizer=None, problem=None)
            defaults.update(kw)
            self.__dict__.update(defaults)

    def test_template_defaults(self):
        data = _config_data(self.Args())
        assert data["name"] == "a2grad-uni_quadratic"
        assert data["method"] == {"kind": "a2grad", "scheme": "uniform"}
        assert data["iters"] == 1000
        assert data["out"] == "."

    def test_same_kind_override_merges_method_keys(self, tmp_path):
        path = write_config(tmp_path)
        data = _config_data(self.Args(config=str(path), optimizer="a2grad-exp"))
        # The config's beta survives; the scheme comes from the flag.
        assert data["method"]["beta"] == 25.0
        assert data["method"]["scheme"] == "exponential"

    def test_kind_switch_resets_method_keys(self, tmp_path):
        path = write_config(tmp_path)
        data = _config_data(self.Args(config=str(path), optimizer="adam"))
        assert data["method"] == {"kind": "adam"}

    def test_scalar_flags_override_config(self, tmp_path):
        path = write_config(tmp_path)
        data = _config_data(self.Args(config=str(path), seed=9, repeats=4))
        assert data["seed"] == 9
        assert data["repeats"] == 4

    def test_axis_value_parsing(self):
        assert _parse_axis_values("beta", "1, 10,100") == [1.0, 10.0, 100.0]
        assert _parse_axis_values("lip", "auto") == ["auto"]
        with pytest.raises(ConfigError, match="not a number"):
            _parse_axis_values("rho", "0.9,fast")
        with pytest.raises(ConfigError, match="empty"):
            _parse_axis_values("q", " , ")


class TestSweepVerb:
    def test_beta_grid(self, tmp_path, capsys):
        code = main(["sweep", "--iters", "30", "--beta", "5,50",
                     "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "[a2grad-uni_quadratic_beta5]" in out
        assert "[a2grad-uni_quadratic_beta50]" in out
        assert (tmp_path / "summary_a2grad-uni_quadratic_beta5.csv").exists()
        assert (tmp_path / "summary_a2grad-uni_quadratic_beta50.csv").exists()

    def test_scalar_flags_ride_along(self, tmp_path):
        code = main(["sweep", "--iters", "30", "--beta", "5,50",
                     "--lip", "100", "--out", str(tmp_path)])
        assert code == 0

    def test_needs_exactly_one_grid(self, tmp_path, capsys):
        assert main(["sweep", "--iters", "30", "--out", str(tmp_path)]) == 2
        assert main(["sweep", "--iters", "30", "--beta", "1,2",
                     "--rho", "0.5,0.9", "--out", str(tmp_path)]) == 2
        err = capsys.readouterr().err
        assert "exactly one" in err


class TestFitVerb:
    def make_run_csv(self, tmp_path):
        main(["run", "--iters", "300", "--seed", "0", "--out", str(tmp_path)])
        return tmp_path / "run_a2grad-uni_quadratic_0.csv"

    def test_fit_prints_slope(self, tmp_path, capsys):
        csv = self.make_run_csv(tmp_path)
        capsys.readouterr()
        code = main(["fit", "--csv", str(csv), "--k-lo", "20", "--k-hi", "300"])
        assert code == 0
        out = capsys.readouterr().out
        assert out.startswith("slope=")
        assert "window=[20,300]" in out
        slope = float(out.split()[0].split("=")[1])
        assert slope < -1.9

    def test_bad_window_is_config_error(self, tmp_path, capsys):
        csv = self.make_run_csv(tmp_path)
        assert main(["fit", "--csv", str(csv), "--k-lo", "100",
                     "--k-hi", "50"]) == 2

    def test_missing_csv_is_io_error(self, tmp_path, capsys):
        code = main(["fit", "--csv", str(tmp_path / "absent.csv"),
                     "--k-lo", "10", "--k-hi", "20"])
        assert code == 4
        assert "i/o error" in capsys.readouterr().err


class TestCompareVerb:
    def test_table_and_output_file(self, tmp_path, capsys):
        prob = {"kind": "quadratic", "dim": 4, "condition": 10.0,
                "noise": {"kind": "gaussian", "level": 0.5}}
        a = write_config(tmp_path, name="acc", problem=prob,
                         method={"kind": "a2grad", "beta": 10.0}, iters=60)
        b = write_config(tmp_path, name="plain", problem=prob,
                         method={"kind": "sgd", "learning_rate": 0.05},
                         iters=60)
        code = main(["compare", "--config", str(a), "--config", str(b),
                     "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "acc" in out and "plain" in out
        text = (tmp_path / "comparison.txt").read_text()
        assert text.splitlines()[0].split()[0] == "method"

    def test_mismatched_horizons_rejected(self, tmp_path, capsys):
        a = write_config(tmp_path, name="short", iters=30)
        b = write_config(tmp_path, name="long", iters=31)
        assert main(["compare", "--config", str(a), "--config", str(b)]) == 2
        assert "config error" in capsys.readouterr().err


class TestSelftestVerb:
    def test_all_ok(self, tmp_path, capsys):
        code = main(["selftest", "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert out.count("ok  ") == 5
        assert "FAIL" not in out
        assert "backend:" in out


class TestBackendFlag:
    def test_backend_flag_sets_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv(ENV_VAR, "auto")
        code = main(["--backend", "numpy", "run", "--iters", "20",
                     "--out", str(tmp_path)])
        assert code == 0
        assert os.environ[ENV_VAR] == "numpy"

    def test_backend_choices_are_validated(self):
        with pytest.raises(SystemExit):
            main(["--backend", "cuda", "selftest"])
