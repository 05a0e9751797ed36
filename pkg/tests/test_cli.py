import json

import pytest

from spectral_cascade.cli import main


def run(args):
    return main([str(a) for a in args])


@pytest.fixture
def instance_file(tmp_path):
    path = tmp_path / "inst.json"
    assert run(["gen", "--structure", "1,2", "--seed", "5", "--out", path]) == 0
    return path


def test_gen_and_check(instance_file):
    assert run(["check", "--instance", instance_file]) == 0


def test_check_reports_failure(tmp_path, instance_file, capsys):
    obj = json.loads(instance_file.read_text())
    obj["L"]["data"] = [[0.0] * 3 for _ in range(3)]
    bad = tmp_path / "bad_inst.json"
    bad.write_text(json.dumps(obj))
    assert run(["check", "--instance", bad]) == 1


def test_cascade_and_verify(tmp_path, instance_file):
    out = tmp_path / "casc.json"
    assert run(["cascade", "--instance", instance_file, "--k", "20",
                "--n", "60", "--out", out]) == 0
    assert run(["verify", "--artifact", out]) == 0


def test_split_certificate_roundtrip(tmp_path, instance_file):
    out = tmp_path / "cert.json"
    assert run(["split", "--instance", instance_file, "--level", "1",
                "--k", "20", "--n", "60", "--out", out]) == 0
    assert run(["verify", "--artifact", out]) == 0


def test_find_n_writes_csv(tmp_path, instance_file):
    csv_path = tmp_path / "scan.csv"
    out = tmp_path / "hits.json"
    assert run(["find-n", "--instance", instance_file, "--count", "2",
                "--csv", csv_path, "--out", out]) == 0
    assert csv_path.read_text().startswith("n,")
    assert json.loads(out.read_text())["kind"] == "prove-report"


def test_prove_then_verify(tmp_path, instance_file):
    out = tmp_path / "prove.json"
    assert run(["prove", "--instance", instance_file, "--count", "2",
                "--out", out]) == 0
    assert run(["verify", "--artifact", out]) == 0


def test_verify_corrupted_exits_1(tmp_path, instance_file):
    out = tmp_path / "casc.json"
    run(["cascade", "--instance", instance_file, "--k", "20", "--n", "60",
         "--out", out])
    obj = json.loads(out.read_text())
    obj["levels"][0]["X"]["data"][0][0] += 1e-3
    out.write_text(json.dumps(obj))
    assert run(["verify", "--artifact", out]) == 1


def test_verify_unreadable_exits_1(tmp_path):
    p = tmp_path / "garbage.json"
    p.write_text("{]")
    assert run(["verify", "--artifact", p]) == 1


def test_search_exhausted_exits_3(tmp_path, instance_file):
    assert run(["find-n", "--instance", instance_file, "--count", "3",
                "--n-max", "40"]) == 3


def test_usage_errors_exit_64(tmp_path):
    assert run(["bogus"]) == 64
    assert run(["cascade", "--instance", "missing.json"]) == 64  # missing --n/--out
    assert run(["gen", "--structure", "1,x", "--out", tmp_path / "i.json"]) == 64
