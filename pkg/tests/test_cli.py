import json
import subprocess
import sys

import numpy as np
import pytest

from ellqg.cli import ConfigError, config_from_dict, main, parse_complex


def run(tmp_path, command, config=None, *extra):
    args = [command, "--out", str(tmp_path / "report.json")]
    if config is not None:
        path = tmp_path / "config.json"
        path.write_text(config if isinstance(config, str) else json.dumps(config))
        args += ["--config", str(path)]
    status = main(args + list(extra))
    out = tmp_path / "report.json"
    return status, (json.loads(out.read_text()) if out.exists() else None)


class TestConfig:
    @pytest.mark.parametrize("text, value", [([0.3, -1], 0.3 - 1j), ("0.31+0.17i", 0.31 + 0.17j), (2, 2),
                                             ("0.8i", 0.8j)])
    def test_complex(self, text, value):
        assert parse_complex(text) == value

    @pytest.mark.parametrize("bad", [[1, 2, 3], "abc", True, None])
    def test_bad_complex(self, bad):
        with pytest.raises(ConfigError):
            parse_complex(bad)

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown"):
            config_from_dict({"taus": 1})

    def test_nested_params(self):
        cfg = config_from_dict({"kind": "sl3", "params": {"tau": "0.9i", "trunc": 35}})
        assert cfg.tau == 0.9j and cfg.trunc == 35 and cfg.kind == "sl3"


class TestMain:
    def test_theta_only(self, tmp_path):
        status, rep = run(tmp_path, "theta")
        assert status == 0 and rep["schema_version"] == 1
        assert set(rep["suites"]) == {"theta"}
        names = {r["relation"] for r in rep["suites"]["theta"]["relations"]}
        assert {"fay", "splitting"} <= names

    def test_full_sl2(self, tmp_path):
        status, rep = run(tmp_path, "all")
        assert status == 0 and rep["pass"]
        for name, body in rep["suites"].items():
            assert body["pass"], name
        assert rep["suites"]["eqg"]["max_residual"] < 1e-7

    def test_bad_tau(self, tmp_path, capsys):
        status, rep = run(tmp_path, "theta", {"tau": [0, -0.5]})
        assert status == 2 and rep is None
        assert "Im(tau)" in capsys.readouterr().err

    def test_bad_json(self, tmp_path):
        assert run(tmp_path, "theta", "{not json")[0] == 2

    def test_missing_config(self, tmp_path):
        assert main(["theta", "--config", str(tmp_path / "nope.json")]) == 2

    def test_bad_command(self):
        assert main(["frobnicate"]) == 2

    def test_numeric_failure(self, tmp_path):
        status, rep = run(tmp_path, "theta", None, "--tol", "1e-30")
        assert status == 1 and rep is not None and not rep["pass"]

    def test_congruent_sum_is_numeric_failure(self, tmp_path):
        p = np.exp(-1.6 * np.pi)  # p = e^{2 pi i tau} at the default tau = 0.8i
        mods = [{"a": [0.2, 0.1]}, {"a": [0.2 * p, 0.1 * p]}]
        status, rep = run(tmp_path, "functor", {"modules": mods})
        assert status == 1 and rep["suites"]["functor"]["error"] == "FunctorUndefined"

    def test_sl3_serre_and_build(self, tmp_path):
        status, rep = run(tmp_path, "serre", {"kind": "sl3"})
        assert status == 0 and "0,1" in rep["suites"]["serre"]
        status, rep = run(tmp_path, "build", {"kind": "sl2xsl2"})
        assert status == 0 and rep["representation"]["dim"] == 4

    def test_deterministic(self, tmp_path):
        texts = []
        for k in range(2):
            out = tmp_path / f"r{k}.json"
            assert main(["all", "--out", str(out), "--seed", "3"]) == 0
            rep = json.loads(out.read_text())
            rep.pop("timestamp")
            texts.append(json.dumps(rep, sort_keys=True))
        assert texts[0] == texts[1]

    def test_module_entry_point(self, tmp_path):
        out = tmp_path / "r.json"
        proc = subprocess.run([sys.executable, "-m", "ellqg", "theta", "--out", str(out)], capture_output=True)
        assert proc.returncode == 0 and out.exists()
