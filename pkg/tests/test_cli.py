import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from jacobi_spectra import ConfigError
from jacobi_spectra.cli import format_number, main, parse_config, run

FREE = {"model": {"kind": "constant", "a": 0, "b": 0.5}, "interval": [-0.9, 0.9]}


def write(tmp_path, doc, name="run.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc), encoding="utf-8")
    return p


def read_csv(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[1].startswith("# config_sha256=")
    rows = list(csv.reader([lines[0]] + lines[2:]))
    return rows[0], np.array(rows[1:], dtype=float), lines[1].split("=")[1]


class TestParseConfig:
    def test_defaults_materialized(self):
        cfg = parse_config(json.dumps(FREE))
        d = cfg.to_dict()
        assert d["grid_step"] == 1e-2
        assert d["n_schedule"] == [50, 100, 200, 400, 800]
        assert d["tol"] == 1e-6
        assert d["eps_schedule"] == [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
        assert math.isinf(d["p"])
        assert cfg.interval == (-0.9, 0.9)

    def test_power_model(self):
        cfg = parse_config('{"model":{"kind":"power","c":1,"alpha":1}}')
        assert cfg.model.at(4) == (0.0, 5.0)
        # default interval [a_{n0} - b_{n0}, a_{n0} + b_{n0}]
        assert cfg.interval == (-51.0, 51.0)

    def test_negative_b(self):
        with pytest.raises(ConfigError, match="b must be positive") as info:
            parse_config('{"model":{"kind":"constant","a":0,"b":-1}}')
        assert info.value.field == "model.b"

    @pytest.mark.parametrize(
        "doc, field",
        [
            ({**FREE, "colour": 1}, "colour"),
            ({"model": {"kind": "constant", "a": 0, "b": 1, "c": 2}}, "model.c"),
            ({"model": {"kind": "spline"}}, "model.kind"),
            ({"model": {"kind": "constant", "a": 0}}, "model.b"),
            ({**FREE, "interval": [1, -1]}, "interval"),
            ({**FREE, "grid_step": 0}, "grid_step"),
            ({**FREE, "n_schedule": [100, 50]}, "n_schedule"),
            ({**FREE, "p": 0.5}, "p"),
            ({**FREE, "eps_schedule": [1e-3, 1e-2]}, "eps_schedule"),
            ({**FREE, "checks": ["nope"]}, "checks[0]"),
            ({"model": {"kind": "table", "table": [[0, 1], [0]], "tail": None}}, "model.table[1]"),
            ({"model": {"kind": "table", "table": [[0, 1], [0, -2]], "tail": None}}, "model.table[1]"),
            ({"model": {"kind": "table", "table": [[0, 1]]}}, "model.tail"),
            ({"model": {"kind": "table", "table": [[0, 1]], "tail": "wrap"}}, "model.tail"),
            ({"model": {"kind": "affine", "a0": 0, "a1": 0, "b0": 1, "b1": -1}}, "model"),
        ],
    )
    def test_errors_name_field(self, doc, field):
        with pytest.raises(ConfigError) as info:
            parse_config(json.dumps(doc))
        assert info.value.field == field

    def test_bad_json(self):
        with pytest.raises(ConfigError):
            parse_config("{not json")

    def test_table_inline_and_tail_model(self):
        cfg = parse_config(
            json.dumps(
                {
                    "model": {
                        "kind": "table",
                        "table": [[0, 1], [0.5, 2]],
                        "tail": {"kind": "affine", "a0": 0, "a1": 0, "b0": 1, "b1": 1},
                    },
                    "interval": [-0.5, 0.5],
                }
            )
        )
        assert cfg.model.at(9) == (0.0, 10.0)

    def test_table_path(self, tmp_path):
        (tmp_path / "coef.csv").write_text("a,b\n0,1\n0.25,2\n", encoding="utf-8")
        cfg = parse_config(
            json.dumps({"model": {"kind": "table", "path": "coef.csv", "tail": "repeat-last"}, "interval": [-1, 1]}),
            base_dir=tmp_path,
        )
        assert cfg.model.at(5) == (0.25, 2.0)

    def test_table_path_malformed(self, tmp_path):
        (tmp_path / "coef.csv").write_text("x,y\n0,1\n", encoding="utf-8")
        with pytest.raises(ConfigError) as info:
            parse_config(json.dumps({"model": {"kind": "table", "path": "coef.csv", "tail": None}}), base_dir=tmp_path)
        assert info.value.field == "model.path"

    def test_hash_stable(self):
        a = parse_config(json.dumps(FREE))
        b = parse_config(json.dumps({"interval": [-0.9, 0.9], "model": {"b": 0.5, "a": 0.0, "kind": "constant"}}))
        assert a.sha256 == b.sha256


class TestFormat:
    @pytest.mark.parametrize("v", [0.1, 1 / 3, 2.0**-1074, 1e300, -0.0])
    def test_round_trip(self, v):
        assert float(format_number(v)) == v

    def test_non_finite(self):
        assert [format_number(v) for v in (math.inf, -math.inf, math.nan)] == ["inf", "-inf", "nan"]


class TestRun:
    def test_check_free(self, tmp_path, capsys):
        assert main(["check", "--config", str(write(tmp_path, FREE))]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["report"]["q_hat"] == 0.9
        assert doc["config_sha256"] == parse_config(json.dumps(FREE)).sha256

    def test_check_failure(self, tmp_path, capsys):
        doc = {"model": {"kind": "affine", "a0": 0, "a1": 3, "b0": 1, "b1": 1}, "checks": ["monotone_dominance"]}
        assert main(["check", "--config", str(write(tmp_path, doc))]) == 2
        captured = capsys.readouterr()
        err = captured.err.strip()
        assert "\n" not in err
        assert json.loads(err)["failed"]["monotone_dominance"]["n"] == 1
        report = json.loads(captured.out)["report"]
        assert report["checks"]["monotone_dominance"]["witness"]["n"] == 1

    def test_config_error_exit(self, tmp_path, capsys):
        p = write(tmp_path, {"model": {"kind": "constant", "a": 0, "b": -1}})
        assert main(["check", "--config", str(p)]) == 1
        err = json.loads(capsys.readouterr().err)
        assert err["message"] == "b must be positive" and err["field"] == "model.b"

    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["check", "--config", str(tmp_path / "nope.json")]) == 1
        assert json.loads(capsys.readouterr().err)["error"] == "ConfigError"

    def test_gate_refusal_exit(self, tmp_path, capsys):
        p = write(tmp_path, {**FREE, "interval": [-3, 3]})
        assert main(["density", "--config", str(p)]) == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "CertificationError" and err["check"]["witness"]["n"] == 50

    def test_numeric_failure_exit(self, tmp_path, capsys, monkeypatch):
        import jacobi_spectra.cli as cli
        from jacobi_spectra import NonConvergenceError

        def boom(cfg):
            raise NonConvergenceError("not converged", index=4096)

        monkeypatch.setitem(cli._RUNNERS, "oracle", boom)
        assert main(["oracle", "--config", str(write(tmp_path, FREE))]) == 1
        err = json.loads(capsys.readouterr().err)
        assert err == {"error": "NonConvergenceError", "index": 4096, "message": "not converged"}

    def test_model_error_exit(self, tmp_path, capsys):
        doc = {**FREE, "oracle_points": 3}
        doc["model"] = {"kind": "table", "table": [[0, 0.5]] * 10, "tail": None}
        p = write(tmp_path, doc)
        assert main(["oracle", "--config", str(p)]) == 1
        assert json.loads(capsys.readouterr().err)["error"] == "ModelError"

    def test_density_semicircle(self, tmp_path):
        out = tmp_path / "out"
        assert main(["density", "--config", str(write(tmp_path, FREE)), "--out", str(out)]) == 0
        header, data, h = read_csv(out / "density.csv")
        assert header == ["x", "f_50", "f_100", "f_200", "f_400", "f_800", "f_final"]
        assert np.abs(data[:, -1] - (2 / np.pi) * np.sqrt(1 - data[:, 0] ** 2)).max() <= 1e-12
        assert h == parse_config(json.dumps(FREE)).sha256
        assert data[0, 0] == -0.9 and data[-1, 0] <= 0.9 and data.shape[0] == 181

    def test_deterministic_bytes(self, tmp_path):
        p = write(tmp_path, FREE)
        for sub in ("density", "cdf", "check"):
            main([sub, "--config", str(p), "--out", str(tmp_path / "a")])
            main([sub, "--config", str(p), "--out", str(tmp_path / "b")])
        for name in ("density.csv", "cdf.csv", "check.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_cdf(self, tmp_path):
        out = tmp_path / "out"
        assert main(["cdf", "--config", str(write(tmp_path, FREE)), "--out", str(out)]) == 0
        header, data, _ = read_csv(out / "cdf.csv")
        assert header == ["lambda", "sigma"]
        assert data[0, 1] == 0.0 and np.all(np.diff(data[:, 1]) >= 0)
        t = data[-1, 0]
        exact = (np.arcsin(t) + t * np.sqrt(1 - t * t) - np.arcsin(-0.9) + 0.9 * np.sqrt(0.19)) / np.pi
        assert_allclose(data[-1, 1], exact, atol=1e-6)

    def test_oracle(self, tmp_path):
        cfg = parse_config(json.dumps({**FREE, "quadrature_N": 40, "oracle_points": 5}))
        status, files = run("oracle", cfg)
        assert status == 0 and set(files) == {"quadrature.csv", "stieltjes.csv"}
        assert files["quadrature.csv"].startswith("node,weight\n# config_sha256=")
        rows = [r.split(",") for r in files["stieltjes.csv"].splitlines()[2:]]
        x = np.array([float(r[0]) for r in rows])
        assert_allclose([float(r[1]) for r in rows], (2 / np.pi) * np.sqrt(1 - x**2), atol=1e-6)

    def test_compare(self, tmp_path, capsys):
        doc = {**FREE, "quadrature_N": 500}
        assert main(["compare", "--config", str(write(tmp_path, doc))]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["density_vs_stieltjes"] <= 1e-6
        assert out["cdf_vs_quadrature"] <= 1e-2

    def test_console_script(self, tmp_path):
        p = write(tmp_path, FREE)
        res = subprocess.run(
            [sys.executable, "-m", "jacobi_spectra.cli", "check", "--config", str(p)],
            capture_output=True,
            text=True,
        )
        assert res.returncode == 0 and '"q_hat":0.9' in res.stdout

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit):
            main(["plot", "--config", "x.json"])
