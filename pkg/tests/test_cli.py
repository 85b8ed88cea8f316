from __future__ import annotations

import json
from pathlib import Path

import pytest

from ferriq.cli import main

FIXTURE = Path(__file__).parent / "fixtures" / "fswap.json"


def test_compile_perm_verify_and_determinism(tmp_path):
    out1, out2, rep = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "r.json"
    args = ["compile-perm", "--perm", "3,1,0,2", "--verify", "--report", str(rep)]
    assert main([*args, "--out", str(out1)]) == 0
    assert main([*args, "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    report = json.loads(rep.read_text())
    assert report["verification"]["pass"]
    assert set(report["run"]) >= {"version", "seed", "config_hash"}
    assert main(["verify", "--circuit", str(out1), "--report", str(tmp_path / "v.json")]) == 0


def test_bad_permutation_exit_code(tmp_path):
    assert main(["compile-perm", "--perm", "0,0,1", "--out", str(tmp_path / "x.json")]) == 2
    assert main(["compile-perm", "--perm-file", str(tmp_path / "missing.txt")]) == 2


def test_verify_fixture(tmp_path):
    rep = str(tmp_path / "v.json")
    assert main(["verify", "--circuit", str(FIXTURE), "--m1", "1,0", "--report", rep]) == 0
    assert main(["verify", "--circuit", str(FIXTURE), "--m1", "0,1", "--report", rep]) == 3


def test_dump_parity(tmp_path):
    par = tmp_path / "p.json"
    assert main(["compile-perm", "--perm", "2,0,1", "--out", str(tmp_path / "c.json"), "--dump-parity", str(par)]) == 0
    assert json.loads(par.read_text())["cz_pairs"]["rows"] == 3


def test_compile_mperm_and_ffft(tmp_path):
    assert main(["compile-mperm", "--perm", "1,0,3,2", "--verify", "--out", str(tmp_path / "m.json")]) == 0
    assert main(["compile-mperm", "--perm", "1,0,2", "--out", str(tmp_path / "m.json")]) == 2
    rep = tmp_path / "f.json"
    assert main(["compile-ffft", "--n", "2", "--verify", "--out", str(tmp_path / "f.c.json"), "--report", str(rep)]) == 0
    assert json.loads(rep.read_text())["transfer_max_error"] < 1e-10


@pytest.mark.parametrize("which,first", [("s1", "N,ccz_rz,ccz_rz_per_mode"), ("s2-interleave", "N,fswap_over_3,djw_over_3")])
def test_tables(tmp_path, which, first):
    out, png = tmp_path / "t.csv", tmp_path / "t.png"
    assert main(["tables", "--which", which, "--out", str(out), "--plot", str(png)]) == 0
    assert out.read_text().splitlines()[0] == first
    assert png.stat().st_size > 0


def test_syk_commands(tmp_path):
    inst = tmp_path / "i.json"
    assert main(["syk", "sample", "--n", "12", "--d", "2", "--out", str(inst)]) == 0
    rep = tmp_path / "r.json"
    assert main(["syk", "compile", "--instance", str(inst), "--out", str(tmp_path / "c.json"), "--report", str(rep)]) == 0
    assert json.loads(rep.read_text())["clifford_per_majorana"] > 0
    csv, png = tmp_path / "s.csv", tmp_path / "s.png"
    args = ["syk", "sff", "--n", "8", "--instances", "3", "--points", "10", "--out", str(csv), "--plot", str(png)]
    assert main(args) == 0
    lines = csv.read_text().splitlines()
    assert lines[0].startswith("# ferriq") and lines[1] == "t,mean,stderr" and len(lines) == 12
    assert png.stat().st_size > 0


def test_syk_cap(tmp_path, monkeypatch):
    args = ["syk", "sff", "--n", "20", "--kind", "sparse", "--d", "1", "--instances", "1", "--out", str(tmp_path / "s.csv")]
    assert main(args) == 2
