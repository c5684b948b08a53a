import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from chdissip import __version__
from chdissip.cli import main
from chdissip.io import read_csv

from conftest import peakon_state

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def write_config(path, **sections):
    doc = {"initial": {"preset": "zero"},
           "solver": {"dt": 0.01, "t_end": 1.0, "N": 128, "xi_domain": [-10.0, 10.0]},
           "output": {"times": [0.0, 0.5, 1.0]}}
    for k, v in sections.items():
        doc[k] = {**doc.get(k, {}), **v} if isinstance(v, dict) else v
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture(scope="module")
def pap_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("pap")
    assert main(["run", "--config", str(CONFIGS / "pap_D1.json"), "--out", str(out)]) == 0
    return out


class TestRun:
    def test_zero(self, tmp_path):
        cfg = write_config(tmp_path / "zero.json")
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        _, header, data = read_csv(tmp_path / "o" / "fields.csv")
        assert header == ["t", "x", "u", "F", "p", "p_x"]
        assert np.all(data[:, 2:] == 0)
        assert sorted(set(data[:, 0])) == [0.0, 0.5, 1.0]
        assert len(list((tmp_path / "o" / "snapshots").glob("snap_*.json"))) == 3

    def test_bundled_pap(self, pap_dir):
        _, _, hist = read_csv(pap_dir / "history.csv")
        assert hist[-1, 1] <= 0.05 * 4.0
        report = json.loads((pap_dir / "report.json").read_text())
        assert all(c["passed"] for c in report["checks"])

    @pytest.mark.parametrize("dt", [0.0, -0.01])
    def test_dt_must_be_positive(self, tmp_path, capsys, dt):
        cfg = write_config(tmp_path / "bad.json", solver={"dt": dt})
        assert main(["run", "--config", str(cfg)]) == 1
        assert "dt must be positive" in capsys.readouterr().err

    def test_missing_config(self, tmp_path, capsys):
        assert main(["run", "--config", str(tmp_path / "nope.json")]) == 1
        assert "not found" in capsys.readouterr().err

    def test_schema_violation(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "bad.json", initial={"preset": "soliton"})
        assert main(["run", "--config", str(cfg)]) == 1
        assert "initial.preset" in capsys.readouterr().err

    def test_unknown_key(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"solvr": {}}))
        assert main(["run", "--config", str(cfg)]) == 1
        assert "unknown top-level keys" in capsys.readouterr().err

    def test_format_flag(self, tmp_path):
        cfg = write_config(tmp_path / "z.json")
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "j"), "--format", "json"]) == 0
        assert not (tmp_path / "j" / "fields.csv").exists()
        assert (tmp_path / "j" / "snapshots").is_dir()
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "c"), "--format", "csv"]) == 0
        assert (tmp_path / "c" / "fields.csv").exists()
        assert (tmp_path / "c" / "plot_fields.py").exists()
        assert not (tmp_path / "c" / "snapshots").exists()

    def test_deterministic(self, tmp_path):
        cfg = write_config(tmp_path / "p.json", initial={"preset": "peakon"}, solver={"N": 2048, "xi_domain": [-25.0, 25.0]})
        for d in ("a", "b"):
            assert main(["run", "--config", str(cfg), "--out", str(tmp_path / d)]) == 0
        files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
        assert files
        for f in files:
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes(), f

    def test_meta_line_everywhere(self, tmp_path):
        cfg = write_config(tmp_path / "z.json")
        out = tmp_path / "o"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        for f in out.rglob("*"):
            if f.suffix == ".csv":
                assert f.read_text().startswith(f"# chdissip {__version__} config_sha256=")
            elif f.suffix == ".json" and f.name != "config.json":
                assert json.loads(f.read_text())["meta"].startswith(f"# chdissip {__version__}")

    def test_resume(self, tmp_path):
        cfg = write_config(tmp_path / "p.json", initial={"preset": "peakon"}, solver={"N": 2048, "xi_domain": [-25.0, 25.0]})
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
        cfg2 = write_config(tmp_path / "p2.json", initial={"preset": "peakon"},
                            solver={"N": 2048, "xi_domain": [-25.0, 25.0], "t_end": 1.2}, output={"times": [1.0, 1.2]})
        assert main(["run", "--config", str(cfg2), "--out", str(tmp_path / "b"),
                     "--resume", str(tmp_path / "a" / "checkpoint.json")]) == 0
        _, _, data = read_csv(tmp_path / "b" / "fields.csv")
        assert sorted(set(data[:, 0])) == [1.0, 1.2]


class TestOracle:
    def test_rows_and_zero_branch(self, tmp_path):
        assert main(["oracle", "--D", "1", "--t-star", "1", "--times", "0", "0.5", "0.99", "1.5",
                     "--nx", "101", "--out", str(tmp_path)]) == 0
        meta, header, data = read_csv(tmp_path / "oracle.csv")
        assert meta.startswith("# chdissip")
        assert header == ["t", "x", "u", "F", "p", "p_x"]
        assert data.shape == (4 * 101, 6)
        assert np.all(data[data[:, 0] == 1.5, 2:] == 0)
        for t in (0.0, 0.5, 0.99):
            u = data[data[:, 0] == t, 2]
            np.testing.assert_allclose(u, -u[::-1], atol=1e-14)

    def test_p0_q0_and_json(self, tmp_path):
        assert main(["oracle", "--p0", "1.3130352854993315", "--q0", "-0.4337808304830272",
                     "--times", "0", "--out", str(tmp_path), "--format", "json"]) == 0
        doc = json.loads((tmp_path / "oracle.json").read_text())
        assert doc["params"]["t_star"] == pytest.approx(1.0, rel=1e-12)

    def test_invalid_params(self, tmp_path, capsys):
        assert main(["oracle", "--D", "-1", "--out", str(tmp_path)]) == 1
        assert main(["oracle", "--p0", "1.0", "--out", str(tmp_path)]) == 1
        assert "error" in capsys.readouterr().err

    def test_from_config(self, tmp_path):
        assert main(["oracle", "--config", str(CONFIGS / "pap_D1.json"), "--out", str(tmp_path)]) == 0
        _, _, data = read_csv(tmp_path / "oracle.csv")
        assert len(set(data[:, 0])) == 10


class TestVerify:
    def test_zero_run(self, tmp_path):
        cfg = write_config(tmp_path / "z.json")
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        assert main(["verify", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "verify_report.json").exists()

    def test_pap_run(self, pap_dir):
        assert main(["verify", str(pap_dir)]) == 0

    def test_tampered_snapshot(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "p.json", initial={"preset": "peakon"}, solver={"N": 2048, "xi_domain": [-25.0, 25.0]})
        out = tmp_path / "o"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        snap = out / "snapshots" / "snap_0001.json"
        doc = json.loads(snap.read_text())
        doc["lagrangian"]["U_xi"][100] += 0.1
        snap.write_text(json.dumps(doc))
        capsys.readouterr()
        assert main(["verify", str(out)]) == 2
        assert "c2_identity" in capsys.readouterr().err

    def test_corrupt_snapshot(self, tmp_path):
        cfg = write_config(tmp_path / "z.json")
        out = tmp_path / "o"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        (out / "snapshots" / "snap_0000.json").write_text('{"t": 0.0}')
        assert main(["verify", str(out)]) == 1

    def test_empty_dir(self, tmp_path):
        assert main(["verify", str(tmp_path)]) == 1


class TestTransform:
    def test_peakon_round_trip(self, tmp_path):
        src = tmp_path / "peakon.json"
        e = peakon_state(1024)
        src.write_text(json.dumps(e.to_dict()))
        lag = tmp_path / "peakon.lag.json"
        back = tmp_path / "peakon.back.json"
        assert main(["transform", "to-lagrangian", str(src), "--out", str(lag)]) == 0
        assert main(["transform", "to-eulerian", str(lag), "--out", str(back),
                     "--x-grid", str(src)]) == 0
        u = np.array(json.loads(back.read_text())["u"])
        assert np.max(np.abs(u - e.u)) <= 1e-8

    def test_delta_atom(self, tmp_path):
        src = tmp_path / "delta.json"
        src.write_text(json.dumps({"x": np.linspace(-5, 5, 11).tolist(), "u": [0.0] * 11,
                                   "atoms": [[0.0, 1.0]]}))
        out = tmp_path / "delta.lag.json"
        assert main(["transform", "to-lagrangian", str(src), "--out", str(out)]) == 0
        d = json.loads(out.read_text())
        xi, y, H = (np.array(d[k]) for k in ("xi", "y", "H"))
        plateau = (xi >= 0) & (xi <= 1)
        assert np.all(y[plateau] == 0)
        assert H[xi == 1.0][0] - H[xi == 0.0][0] == pytest.approx(1.0)

    def test_malformed_json(self, tmp_path, capsys):
        src = tmp_path / "bad.json"
        src.write_text("{not json")
        assert main(["transform", "to-lagrangian", str(src)]) == 1
        assert "malformed JSON" in capsys.readouterr().err

    def test_wrong_document(self, tmp_path):
        src = tmp_path / "e.json"
        src.write_text(json.dumps({"x": [0, 1], "u": [0, 0]}))
        assert main(["transform", "to-eulerian", str(src)]) == 1


def test_module_entry_point_and_log_level(tmp_path):
    cfg = write_config(tmp_path / "z.json")
    env = {**os.environ, "CH_LOG": "INFO"}
    proc = subprocess.run([sys.executable, "-m", "chdissip", "run", "--config", str(cfg),
                           "--out", str(tmp_path / "o")], capture_output=True, text=True, env=env)
    assert proc.returncode == 0, proc.stderr
    assert "INFO chdissip" in proc.stderr
    env["CH_LOG"] = "ERROR"
    proc = subprocess.run([sys.executable, "-m", "chdissip", "run", "--config", str(cfg),
                           "--out", str(tmp_path / "q")], capture_output=True, text=True, env=env)
    assert proc.returncode == 0 and "INFO" not in proc.stderr
