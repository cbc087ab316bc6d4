"""Exit-code contract, artifact determinism, and malformed-config handling."""
import json

import numpy as np

from engel_lab.cli import main
from engel_lab.serialize import dumps_canonical


def run(args):
    return main(args)


class TestVerifyCommand:
    def test_darboux_passes(self, tmp_path, capsys):
        code = run(["verify", "--preset", "darboux", "--samples", "50",
                    "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "PASS darboux" in out
        doc = json.loads((tmp_path / "verify_darboux.json").read_text())
        assert doc["passed"] is True

    def test_magnetic_with_kappa(self, tmp_path):
        code = run(["verify", "--preset", "lorentz-magnetic", "--kappa", "-0.5",
                    "--samples", "100", "--out", str(tmp_path)])
        assert code == 0

    def test_counterexample_fails_exit_1(self, tmp_path):
        code = run(["verify", "--preset", "integrable-counterexample",
                    "--samples", "20", "--out", str(tmp_path)])
        assert code == 1

    def test_unknown_preset_exit_2(self, capsys):
        code = run(["verify", "--config", "/nonexistent/manifest.json"])
        assert code == 2
        assert "config error" in capsys.readouterr().err

    def test_kappa_on_wrong_preset_exit_2(self):
        assert run(["verify", "--preset", "darboux", "--kappa", "1.0"]) == 2

    def test_determinism_byte_identical(self, tmp_path):
        a_dir = tmp_path / "a"
        b_dir = tmp_path / "b"
        for d in (a_dir, b_dir):
            assert run(["verify", "--preset", "long-darboux", "--samples", "64",
                        "--seed", "3", "--out", str(d)]) == 0
        a = (a_dir / "verify_long-darboux.json").read_bytes()
        b = (b_dir / "verify_long-darboux.json").read_bytes()
        assert a == b

    def test_config_manifest(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"preset": "darboux", "samples": 30,
                                   "out": str(tmp_path)}))
        assert run(["verify", "--config", str(cfg)]) == 0

    def test_malformed_config_exit_2(self, tmp_path, capsys):
        cfg = tmp_path / "broken.json"
        cfg.write_text("{not valid json")
        assert run(["verify", "--config", str(cfg)]) == 2
        cfg.write_text('["a", "list"]')
        assert run(["verify", "--config", str(cfg)]) == 2


class TestClassifyCommand:
    def test_magnetic_elliptic(self, tmp_path, capsys):
        code = run(["classify", "--preset", "lorentz-magnetic-lie",
                    "--kappa", "1.0", "--out", str(tmp_path)])
        assert code == 0
        assert "Elliptic" in capsys.readouterr().out

    def test_magnetic_parabolic_genuine(self, tmp_path, capsys):
        code = run(["classify", "--preset", "lorentz-magnetic-lie",
                    "--kappa", "-1.0", "--out", str(tmp_path)])
        assert code == 0
        assert "Parabolic (genuine)" in capsys.readouterr().out

    def test_propellor_cat_hyperbolic(self, tmp_path, capsys):
        code = run(["classify", "--preset", "propellor-cat", "-T", "12",
                    "--out", str(tmp_path)])
        assert code == 0
        assert "Hyperbolic" in capsys.readouterr().out
        doc = json.loads((tmp_path / "classify_propellor-cat.json").read_text())
        assert doc["type"] == "hyperbolic"


class TestOrbitCommand:
    def test_csv_artifact(self, tmp_path, capsys):
        code = run(["orbit", "--preset", "lorentz-product-lie", "--kappa", "-1.0",
                    "-T", "10", "--dt", "0.01", "--format", "csv",
                    "--out", str(tmp_path)])
        assert code == 0
        assert "monotone" in capsys.readouterr().out
        lines = (tmp_path / "orbit_lorentz-product-lie.csv").read_text().splitlines()
        assert lines[0].startswith("t,p0,p1,p2,p3,M11")
        assert len(lines) == 1002


class TestRigidityCommand:
    def test_small_run(self, tmp_path, capsys):
        code = run(["rigidity", "--trials", "60", "--out", str(tmp_path)])
        assert code == 0
        doc = json.loads((tmp_path / "rigidity.json").read_text())
        assert doc["probe"]["n_outside_accessible"] == 0
        assert doc["inaba_max_residual"] < 1e-5

    def test_thread_sharding(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ENGEL_LAB_THREADS", "3")
        code = run(["rigidity", "--trials", "60", "--out", str(tmp_path)])
        assert code == 0
        doc = json.loads((tmp_path / "rigidity.json").read_text())
        assert doc["probe"]["n_trials"] == 60
        assert doc["probe"]["n_outside_accessible"] == 0

    def test_manifest_control_family(self, tmp_path):
        cfg = tmp_path / "rig.json"
        cfg.write_text(json.dumps({"trials": 30, "modes": 2, "amplitude": 0.5,
                                   "out": str(tmp_path)}))
        assert run(["rigidity", "--config", str(cfg)]) == 0


def test_numba_fallback_path_agrees(tmp_path):
    # the pure-numpy path (env flag) must reproduce the jitted results
    import subprocess
    import sys
    script = (
        "import numpy as np\n"
        "from engel_lab.rigidity_lab import sample_d_curve\n"
        "ONES = lambda t: np.ones_like(np.atleast_1d(t), dtype=float)\n"
        "c = sample_d_curve((lambda t: np.sin(np.atleast_1d(t)), ONES), 1.0, 1e-3)\n"
        "np.save(r'%s', c.points)\n"
    )
    for flag, name in (("0", "jit.npy"), ("1", "numpy.npy")):
        env = {"ENGEL_LAB_NO_NUMBA": flag, "PATH": "/usr/bin:/bin:/usr/local/bin"}
        out = subprocess.run([sys.executable, "-c", script % (tmp_path / name)],
                             env=env, capture_output=True, text=True)
        assert out.returncode == 0, out.stderr
    a = np.load(tmp_path / "jit.npy")
    b = np.load(tmp_path / "numpy.npy")
    assert np.abs(a - b).max() < 1e-13


class TestReportCommand:
    def test_kappa_sweep(self, tmp_path, capsys):
        code = run(["report", "--preset", "kappa-sweep", "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "sign law reproduced" in out
        doc = json.loads((tmp_path / "kappa_sweep.json").read_text())
        assert all(r["agrees"] for r in doc["rows"])


class TestSerializer:
    def test_seventeen_digit_floats(self):
        s = dumps_canonical({"x": 1.0 / 3.0, "arr": np.array([0.1])})
        assert "0.33333333333333331" in s
        assert "0.10000000000000001" in s

    def test_round_trip(self):
        doc = {"a": [1, 2.5, None, True], "b": {"c": "text"}}
        assert json.loads(dumps_canonical(doc)) == doc
