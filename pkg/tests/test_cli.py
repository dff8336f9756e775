import json

import numpy as np
import pytest

from cpdilate import cli
from cpdilate.cpmaps import haar_unitary, random_instance
from cpdilate.dilation import dilate
from cpdilate.equivalence import rotate_dilation
from cpdilate.serialize import emit_dilation, emit_instance, parse_dilation, parse_instance


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    monkeypatch.delenv("CPDILATE_TOL", raising=False)


def write_instance(tmp_path, seed=7, **kw):
    kw.setdefault("n", 2)
    kw.setdefault("block_dims", [2])
    kw.setdefault("mults", [1])
    kw.setdefault("h1", 2)
    kw.setdefault("h2", 3)
    inst = random_instance(seed, **kw)
    path = tmp_path / "inst.json"
    path.write_text(emit_instance(inst), encoding="utf-8")
    return inst, path


class TestGenerate:
    def test_writes_valid_file(self, tmp_path, capsys):
        out = tmp_path / "inst.json"
        rc = cli.main([
            "generate", "--seed", "1", "--n", "1", "--blocks", "1",
            "--mults", "1", "--h1", "1", "--h2", "1", "-o", str(out),
        ])
        assert rc == 0
        assert "wrote" in capsys.readouterr().out
        inst = parse_instance(out.read_text(encoding="utf-8"))
        assert inst.n == 1 and inst.h1 == 1

    def test_deterministic_bytes(self, tmp_path):
        args = ["generate", "--seed", "7", "--n", "2", "--blocks", "2",
                "--mults", "1", "--h1", "2", "--h2", "3"]
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        assert cli.main(args + ["-o", str(out1)]) == 0
        assert cli.main(args + ["-o", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_dimension_guardrail(self, tmp_path, capsys):
        rc = cli.main([
            "generate", "--seed", "1", "--n", "4", "--blocks", "10",
            "--mults", "1", "--h1", "30", "--h2", "30", "-o", str(tmp_path / "x.json"),
        ])
        assert rc == 2
        assert "guardrail" in capsys.readouterr().err


class TestDilate:
    def test_pass_and_write(self, tmp_path, capsys):
        _, inst_path = write_instance(tmp_path)
        out = tmp_path / "dil.json"
        rc = cli.main(["dilate", str(inst_path), "-o", str(out)])
        assert rc == 0
        assert "overall: PASS" in capsys.readouterr().out
        data, _ = parse_dilation(out.read_text(encoding="utf-8"))
        assert data.r1 >= 1

    def test_json_report(self, tmp_path, capsys):
        _, inst_path = write_instance(tmp_path)
        rc = cli.main(["dilate", str(inst_path), "--json"])
        assert rc == 0
        report = json.loads(capsys.readouterr().out)
        assert report["format"] == "cpdilate/report"
        assert report["passed"] is True
        assert report["phi_reconstruction"] <= 1e-9

    def test_sign_flip_gives_validity_exit(self, tmp_path, capsys):
        inst, inst_path = write_instance(tmp_path)
        flipped = parse_instance(inst_path.read_text(encoding="utf-8"))
        flipped.cp.action *= -1.0
        inst_path.write_text(emit_instance(flipped), encoding="utf-8")
        rc = cli.main(["dilate", str(inst_path)])
        assert rc == 3
        assert "not completely n-positive" in capsys.readouterr().err

    def test_identity_instance_file(self, tmp_path, capsys):
        from cpdilate.cpmaps import identity_instance

        path = tmp_path / "ident.json"
        path.write_text(emit_instance(identity_instance(2)), encoding="utf-8")
        rc = cli.main(["dilate", str(path)])
        out = capsys.readouterr().out
        assert rc == 0
        assert "r1=2 r2=2" in out

    def test_parse_error_exit(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{", encoding="utf-8")
        assert cli.main(["dilate", str(bad)]) == 2

    def test_missing_file_exit(self, tmp_path):
        assert cli.main(["dilate", str(tmp_path / "nope.json")]) == 2


class TestVerify:
    def test_roundtrip_pass(self, tmp_path):
        inst, inst_path = write_instance(tmp_path)
        dil_path = tmp_path / "dil.json"
        dil_path.write_text(emit_dilation(inst, dilate(inst)), encoding="utf-8")
        assert cli.main(["verify", str(inst_path), str(dil_path)]) == 0

    def test_sabotaged_dilation_fails(self, tmp_path, capsys):
        inst, inst_path = write_instance(tmp_path)
        data = dilate(inst)
        data.pi_action = np.zeros_like(data.pi_action)
        dil_path = tmp_path / "dil.json"
        dil_path.write_text(emit_dilation(inst, data), encoding="utf-8")
        rc = cli.main(["verify", str(inst_path), str(dil_path), "--json"])
        assert rc == 3
        report = json.loads(capsys.readouterr().out)
        assert report["passed"] is False
        assert report["phi_reconstruction"] >= 0.1

    def test_mismatched_files(self, tmp_path):
        inst, inst_path = write_instance(tmp_path)
        other = random_instance(11, n=2, block_dims=[2], mults=[1], h1=3, h2=3)
        dil_path = tmp_path / "dil.json"
        dil_path.write_text(emit_dilation(other, dilate(other)), encoding="utf-8")
        assert cli.main(["verify", str(inst_path), str(dil_path)]) == 3


class TestEquiv:
    def test_same_dilation_twice(self, tmp_path, capsys):
        inst, inst_path = write_instance(tmp_path)
        dil_path = tmp_path / "dil.json"
        dil_path.write_text(emit_dilation(inst, dilate(inst)), encoding="utf-8")
        rc = cli.main(["equiv", str(inst_path), str(dil_path), str(dil_path)])
        assert rc == 0
        assert "diagram commutes: yes" in capsys.readouterr().out

    def test_rotated_copy(self, tmp_path):
        inst, inst_path = write_instance(tmp_path)
        data = dilate(inst)
        rng = np.random.default_rng(3)
        twin = rotate_dilation(
            data,
            haar_unitary(rng, data.r1),
            haar_unitary(rng, data.r2),
            [haar_unitary(rng, k) for k in data.k2i_dims],
        )
        a_path, b_path = tmp_path / "a.json", tmp_path / "b.json"
        a_path.write_text(emit_dilation(inst, data), encoding="utf-8")
        b_path.write_text(emit_dilation(inst, twin), encoding="utf-8")
        assert cli.main(["equiv", str(inst_path), str(a_path), str(b_path)]) == 0

    def test_different_instances_rejected(self, tmp_path, capsys):
        inst_a, path_a = write_instance(tmp_path, seed=7)
        inst_b = random_instance(8, n=2, block_dims=[2], mults=[1], h1=2, h2=3)
        dil_a, dil_b = tmp_path / "da.json", tmp_path / "db.json"
        dil_a.write_text(emit_dilation(inst_a, dilate(inst_a)), encoding="utf-8")
        dil_b.write_text(emit_dilation(inst_b, dilate(inst_b)), encoding="utf-8")
        rc = cli.main(["equiv", str(path_a), str(dil_a), str(dil_b)])
        assert rc == 5
        assert "InconsistentSpans" in capsys.readouterr().err


class TestFuzz:
    def test_single_trial(self, capsys):
        rc = cli.main(["fuzz", "--trials", "1", "--seed", "1",
                       "--max-n", "1", "--max-block", "1", "--max-h", "1"])
        assert rc == 0
        assert "overall: PASS" in capsys.readouterr().out

    def test_deterministic_json(self, capsys):
        args = ["fuzz", "--trials", "3", "--seed", "5", "--json"]
        assert cli.main(args) == 0
        first = capsys.readouterr().out
        assert cli.main(args) == 0
        second = capsys.readouterr().out
        assert first == second
        report = json.loads(first)
        assert report["all_passed"] is True
        assert report["trials"] == 3
        assert len(report["results"]) == 3

    def test_histogram_and_worst(self, capsys):
        assert cli.main(["fuzz", "--trials", "2", "--seed", "9", "--json"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["dimension_histogram"]
        assert all(v <= 1e-9 for v in report["worst_residuals"].values())

    def test_hundred_trials_all_pass(self, capsys):
        rc = cli.main(["fuzz", "--trials", "100", "--seed", "42",
                       "--max-n", "3", "--max-block", "3", "--max-h", "4", "--json"])
        assert rc == 0
        report = json.loads(capsys.readouterr().out)
        assert report["all_passed"] is True
        assert sum(1 for r in report["results"] if r["passed"]) == 100


class TestEnvOverride:
    def test_tolerance_from_environment(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("CPDILATE_TOL", "0.5")
        _, inst_path = write_instance(tmp_path)
        rc = cli.main(["dilate", str(inst_path), "--json"])
        assert rc == 0
        report = json.loads(capsys.readouterr().out)
        assert report["tolerance"] == 0.5

    def test_bad_env_value(self, monkeypatch, capsys):
        monkeypatch.setenv("CPDILATE_TOL", "abc")
        assert cli.main(["fuzz", "--trials", "1"]) == 2
