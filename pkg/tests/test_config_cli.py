import json
import math

import numpy as np
import pytest

from levyrmt import cli, config
from levyrmt.config import EnsembleConfig, RunManifest
from levyrmt.errors import ConfigError, ConvergenceError
from levyrmt.grid import read_csv


def run(tmp_path, *argv):
    return cli.run([*argv, "--out", str(tmp_path)])


def manifest(tmp_path, stem):
    return json.loads((tmp_path / f"{stem}.manifest.json").read_text())


class TestConfig:
    def test_minimal(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"kind": "wigner-levy", "alpha": 1.5}))
        cfg = config.load_config(p)
        assert cfg.N == 200 and cfg.exponent() == pytest.approx(1 / 1.5)

    @pytest.mark.parametrize(
        "d,key",
        [
            ({"kind": "wigner-levy", "alpha": 2.5}, "alpha"),
            ({"kind": "wigner-levy"}, "alpha"),
            ({"kind": "bogus"}, "kind"),
            ({"kind": "goe", "N": 0}, "N"),
            ({"kind": "goe", "trials": 2.5}, "trials"),
            ({"kind": "goe", "beta": 3.0}, "beta"),
            ({"kind": "wishart-student", "alpha": 3.0, "N": 20}, "T"),
            ({"kind": "wishart-student", "alpha": 3.0, "N": 20, "T": 10}, "T"),
            ({"kind": "wishart-student", "alpha": 3.0, "N": 20, "T": 40, "scale_model": "x"}, "scale_model"),
            ({"kind": "goe", "lambda_min": 1.0, "lambda_max": 0.0}, "lambda_max"),
            ({"kind": "free-sum-diag", "alpha": 2.0, "diag_law": "uniform"}, "diag_law"),
            ({"kind": "goe", "colour": "red"}, "colour"),
            ({"N": 10}, "kind"),
        ],
    )
    def test_errors_name_key(self, tmp_path, d, key):
        p = tmp_path / "c.json"
        p.write_text(json.dumps(d))
        with pytest.raises(ConfigError, match=f"^{key}:"):
            config.load_config(p)

    def test_bad_json(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("{kind")
        with pytest.raises(ConfigError):
            config.load_config(p)

    def test_round_trip(self, tmp_path):
        cfg = EnsembleConfig(kind="wishart-student", N=20, T=80, alpha=3.0, a=1.2, trials=7)
        config.save_config(cfg, tmp_path / "c.json")
        assert config.load_config(tmp_path / "c.json") == cfg

    def test_exponents(self):
        assert EnsembleConfig(kind="goe").exponent() == 0.5
        assert EnsembleConfig(kind="deformed-wigner", alpha=3.0).exponent() == 0.0
        assert EnsembleConfig(kind="goe", scaling_exponent=0.25).exponent() == 0.25

    def test_manifest_round_trip(self, tmp_path):
        f = tmp_path / "x.csv"
        f.write_text("a\n1\n")
        m = RunManifest(command="x", config={"a": 1}, seed=3)
        m.add_output(f)
        m.write(tmp_path / "m.json")
        back = RunManifest.read(tmp_path / "m.json")
        assert back == m
        assert back.outputs[0]["sha256"] == config.sha256_file(f)


class TestCli:
    def test_stable_pdf(self, tmp_path):
        rc = run(tmp_path, "stable-pdf", "--alpha", "1", "--beta", "0", "--range", "1",
                 "--xmin", "-5", "--xmax", "5", "--points", "101")
        assert rc == 0
        cols = read_csv(tmp_path / "stable-pdf.csv")
        i = int(np.argmin(np.abs(cols["x"])))
        assert cols["x"][i] == 0.0
        assert cols["pdf"][i] == pytest.approx(1 / math.pi, abs=1e-15)
        text = (tmp_path / "stable-pdf.csv").read_text().splitlines()
        assert text[0] == "x,pdf"
        m = manifest(tmp_path, "stable-pdf")
        assert m["config"] == {"alpha": 1.0, "beta": 0.0, "range": 1.0}
        assert m["outputs"][0]["sha256"] == config.sha256_file(tmp_path / "stable-pdf.csv")
        assert "SeedSequence" in m["seed_derivation"]

    def test_csv_is_lossless(self, tmp_path):
        run(tmp_path, "free-density", "--alpha", "1.5", "--points", "7")
        cols = read_csv(tmp_path / "free-density.csv")
        from levyrmt import free

        np.testing.assert_array_equal(cols["density"], free.density(cols["lambda"], free.FreeStableParams(1.5)))

    @pytest.mark.parametrize(
        "argv",
        [
            ["stable-pdf", "--alpha", "2.5"],
            ["stable-pdf", "--alpha", "1.5", "--points", "1"],
            ["stable-pdf", "--alpha", "1.5", "--bogus"],
            ["stable-pdf"],
            ["nonsense"],
            ["mc-spacing", "--kind", "goe", "--N", "4", "--trials", "2"],
            ["mc-spectrum", "--kind", "wigner-levy", "--alpha", "3"],
            ["free-add"],
            ["free-add", "--law", "cauchy"],
            ["deformed-density", "--kind", "wishart", "--xmin", "-1"],
        ],
    )
    def test_config_errors_exit_1(self, tmp_path, argv, capsys):
        assert run(tmp_path, *argv) == 1
        assert capsys.readouterr().err

    def test_env_workers(self, tmp_path, monkeypatch):
        monkeypatch.setenv("LEVYRMT_WORKERS", "none")
        assert run(tmp_path, "stable-pdf", "--alpha", "1.5", "--points", "3") == 1
        monkeypatch.setenv("LEVYRMT_WORKERS", "2")
        assert run(tmp_path, "stable-pdf", "--alpha", "1.5", "--points", "3") == 0
        assert manifest(tmp_path, "stable-pdf")["workers"] == 2

    def test_numerical_failure_exit_2(self, tmp_path, monkeypatch):
        def boom(*a, **k):
            raise ConvergenceError("no convergence", residuals=[1.0, 0.5])

        monkeypatch.setattr(cli.stable, "pdf", boom)
        assert run(tmp_path, "stable-pdf", "--alpha", "1.5", "--stem", "bad") == 2
        diag = json.loads((tmp_path / "bad.diagnostics.json").read_text())
        assert diag["error"] == "ConvergenceError" and diag["residuals"] == [1.0, 0.5]
        assert not (tmp_path / "bad.csv").exists()

    def test_deformed_density_kinds(self, tmp_path):
        for kind in ("student", "wigner", "wishart", "marchenko-pastur"):
            assert run(tmp_path, "deformed-density", "--kind", kind, "--xmin", "0.5", "--xmax", "3",
                       "--points", "4", "--stem", kind) == 0
        cols = read_csv(tmp_path / "marchenko-pastur.csv")
        assert np.all(cols["density"] >= 0)

    def test_free_potential(self, tmp_path):
        assert run(tmp_path, "free-potential", "--alpha", "2", "--xmin", "-1", "--xmax", "1", "--points", "3") == 0
        cols = read_csv(tmp_path / "free-potential.csv")
        np.testing.assert_allclose(cols["potential"], [0.5, 0.0, 0.5], atol=1e-8)

    def test_free_add_stable(self, tmp_path):
        rc = run(tmp_path, "free-add", "--law", "free-stable:1,0,1", "--law", "free-stable:1,0,1",
                 "--xmin", "0", "--xmax", "1", "--points", "2")
        assert rc == 0
        cols = read_csv(tmp_path / "free-add.csv")
        np.testing.assert_allclose(cols["density"], 2 / (math.pi * (4 + cols["lambda"] ** 2)), atol=1e-9)

    def test_free_add_csv_law(self, tmp_path):
        run(tmp_path, "free-density", "--alpha", "2", "--xmin", "-2", "--xmax", "2", "--points", "2001")
        law = f"csv:{tmp_path / 'free-density.csv'}"
        rc = run(tmp_path, "free-add", "--law", law, "--law", law, "--xmin", "0", "--xmax", "0.5", "--points", "2")
        assert rc == 0
        cols = read_csv(tmp_path / "free-add.csv")
        np.testing.assert_allclose(cols["density"], np.sqrt(8 - cols["lambda"] ** 2) / (4 * math.pi), atol=1e-4)

    @pytest.mark.parametrize(
        "extra",
        [
            ["--kind", "goe"],
            ["--kind", "wigner-levy", "--alpha", "1.5"],
            ["--kind", "deformed-wigner", "--alpha", "3"],
            ["--kind", "wishart-student", "--alpha", "3", "--T", "80"],
            ["--kind", "free-sum-diag", "--alpha", "2", "--K", "2"],
            ["--kind", "free-sum-wl", "--alpha", "1.5", "--K", "2"],
        ],
    )
    def test_mc_spectrum_kinds(self, tmp_path, extra):
        assert run(tmp_path, "mc-spectrum", "--N", "20", "--trials", "4", *extra) == 0
        cols = read_csv(tmp_path / "mc-spectrum.csv")
        assert {"lambda", "mc_density", "mc_stderr"} <= set(cols)
        # the Wigner-Levy model column needs solved running parameters (--params)
        assert ("model" in cols) == ("wigner-levy" not in extra)
        assert np.all(cols["mc_density"] >= 0)

    def test_mc_spectrum_config_file_and_dump(self, tmp_path):
        p = tmp_path / "c.json"
        config.save_config(EnsembleConfig(kind="goe", N=30, trials=3), p)
        assert run(tmp_path, "mc-spectrum", "--config", str(p), "--dump-eigenvalues") == 0
        m = manifest(tmp_path, "mc-spectrum")
        names = [o["path"] for o in m["outputs"]]
        assert names[0] == "mc-spectrum.csv" and len(names) == 4
        for o in m["outputs"]:
            assert o["sha256"] == config.sha256_file(tmp_path / o["path"])
        ev = read_csv(tmp_path / "mc-spectrum.eigenvalues.00002.csv")["eigenvalue"]
        assert ev.size == 30

    def test_mc_ipr(self, tmp_path):
        assert run(tmp_path, "mc-ipr", "--alpha", "0.5", "--N", "50", "--trials", "3") == 0
        assert run(tmp_path, "mc-ipr", "--alpha", "1.5", "--N", "50", "--trials", "3", "--mode", "eigenvectors",
                   "--stem", "loc") == 0
        assert "y2_top_decile" in manifest(tmp_path, "loc")["summary"]

    def test_wl_density_params_cache(self, tmp_path):
        params = tmp_path / "rp.json"
        from levyrmt import wigner_levy

        from conftest import running_params

        params.write_text(json.dumps(running_params(1.5)[0].to_json()))
        assert run(tmp_path, "wl-density", "--alpha", "1.5", "--params", str(params),
                   "--xmin", "0", "--xmax", "1", "--points", "2") == 0
        cols = read_csv(tmp_path / "wl-density.csv")
        assert cols["density"][0] == pytest.approx(wigner_levy.rho_zero(1.5), abs=1e-3)
        assert [o["path"] for o in manifest(tmp_path, "wl-density")["outputs"]] == ["wl-density.csv", "rp.json"]


class TestDeterminism:
    def test_fig2_twice(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            assert cli.run(["fig2", "--K", "1", "--N", "200", "--trials", "100", "--seed", "7", "--out", str(d)]) == 0
        assert (a / "fig2.csv").read_bytes() == (b / "fig2.csv").read_bytes()
        assert (a / "fig2.manifest.json").read_bytes() == (b / "fig2.manifest.json").read_bytes()

    def test_worker_count_invariance(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        argv = ["mc-spectrum", "--kind", "wigner-levy", "--alpha", "1.2", "--N", "40", "--trials", "6", "--seed", "5"]
        assert cli.run([*argv, "--out", str(a), "--workers", "1"]) == 0
        assert cli.run([*argv, "--out", str(b), "--workers", "2"]) == 0
        assert (a / "mc-spectrum.csv").read_bytes() == (b / "mc-spectrum.csv").read_bytes()

    def test_seed_matters(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        argv = ["mc-spectrum", "--kind", "goe", "--N", "20", "--trials", "3"]
        cli.run([*argv, "--out", str(a), "--seed", "1"])
        cli.run([*argv, "--out", str(b), "--seed", "2"])
        assert (a / "mc-spectrum.csv").read_bytes() != (b / "mc-spectrum.csv").read_bytes()
