import csv
import io
import json
from fractions import Fraction

import pytest

from rqclab import cli, f2walk
from rqclab.bits import BitString
from rqclab.bounds import THM1_DELTA_MAX
from rqclab.records import RunRecord, table_csv, to_json
from rqclab.schema import TABLES


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_moments_d0_and_columns(capsys):
    code, out, _ = run(capsys, "moments", "--n", "2", "--d", "0,5", "--t", "1", "--trials", "50")
    assert code == 0
    got = rows(out)
    assert tuple(got[0]) == TABLES["moments"]
    assert float(got[0]["estimate"]) == 1.0 and got[0]["provenance"] == "monte-carlo"


def test_byte_identical_across_runs_and_workers(capsys):
    argv = ["moments", "--n", "3", "--d", "0:20:10", "--t", "1,2", "--trials", "300", "--seed", "7"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    _, c, _ = run(capsys, *argv, "--workers", "3")
    assert a == b == c
    _, j1, _ = run(capsys, *argv, "--format", "json")
    _, j2, _ = run(capsys, *argv, "--format", "json", "--workers", "2")
    assert j1 == j2 and json.loads(j1)["command"] == "moments"


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("n: 1\nt: 1\nm: [0, 1, 2]\ntrials: 100\nseed: 3\n")
    code, out, _ = run(capsys, "ideal-walk", "--config", str(cfg), "--m", "4")
    assert code == 0
    got = rows(out)
    assert [r["m"] for r in got] == ["4"] and got[0]["seed"] == "3"
    assert Fraction(got[0]["exact_fraction"]) == Fraction(1, 2) + Fraction(1, 32)


def test_ideal_walk_exact_column(capsys):
    code, out, _ = run(capsys, "ideal-walk", "--n", "1", "--t", "1", "--m", "0:10", "--trials", "2000")
    assert code == 0
    got = rows(out)
    for r in got:
        m = int(r["m"])
        assert Fraction(r["exact_fraction"]) == Fraction(1, 2) + Fraction(1, 2 ** (m + 1))
        assert r["within_3sigma"] == "true"


def test_unknown_key_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 2, "bogus": 1}))
    assert run(capsys, "spectrum", "--config", str(cfg))[0] == 2
    assert run(capsys, "spectrum", "--frobnicate", "1")[0] == 2
    assert run(capsys, "spectrum", "--trials", "10")[0] == 2
    assert run(capsys, "moments", "--format", "xml")[0] == 2


def test_capacity_error_exit(capsys):
    code, _, err = run(capsys, "moments", "--n", "13", "--d", "1", "--trials", "2")
    assert code == 3 and "capacity" in err


def test_spectrum_command(capsys):
    code, out, _ = run(capsys, "spectrum", "--n", "2", "--t", "2")
    second = [r for r in rows(out) if r["is_second"] == "true"]
    assert code == 0 and second[0]["eigenvalue_fraction"] == "3/4"
    assert second[0]["achieved_by_parity"] == "true"


def test_bounds_threshold_vacuous(capsys):
    code, out, _ = run(capsys, "bounds", "--formula", "thm1_unitary", "--n", "16", "--d", "10,100",
                       "--delta", repr(THM1_DELTA_MAX), "--format", "json")
    assert code == 0
    recs = json.loads(out)["tables"]["bounds"]
    assert len(recs) == 2 and all(r["vacuous"] for r in recs)
    assert recs[0]["inputs"]["n"] == 16 and recs[1]["inputs"]["d"] == 100


def test_fourier_and_conjecture(capsys):
    code, out, _ = run(capsys, "fourier", "--n", "2", "--t", "2", "--task", "parseval")
    assert code == 0 and rows(out)[0]["violations"] == "0"
    code, out, _ = run(capsys, "conjecture", "--n", "2", "--t", "1", "--trials", "4000")
    r = rows(out)[0]
    assert code == 0 and float(r["ci_low"]) <= 0.25 <= float(r["ci_high"])


def test_f2mix_tables(tmp_path, capsys):
    out_path = tmp_path / "mix.csv"
    code, _, _ = run(capsys, "f2mix", "--n", "3", "--k", "0,4,64", "--output", str(out_path))
    assert code == 0
    mix = rows((tmp_path / "mix.f2mix.csv").read_text())
    assert all(r["holds"] == "true" for r in mix)
    gap = rows((tmp_path / "mix.f2gap.csv").read_text())[0]
    assert float(gap["gap"]) >= 1 / (500 * 3 ** 5)
    code, out, _ = run(capsys, "f2mix", "--n", "2", "--k", "1")
    assert code == 0


def test_verify_subset_passes(capsys):
    code, out, err = run(capsys, "verify", "--only", "8,10,P1")
    assert code == 0
    assert [r["id"] for r in rows(out)] == ["8", "10", "P1"]
    assert err.count("[PASS]") == 3


def test_verify_catches_transposed_conjugation(monkeypatch, capsys):
    def wrong(m, y):
        y = f2walk.as_bitstring(y, m.n)
        return BitString(m.transpose().apply(y.value), m.n)

    monkeypatch.setattr(f2walk, "conjugate_zstring", wrong)
    code, out, err = run(capsys, "verify", "--only", "P1")
    assert code == 1
    assert rows(out)[0]["passed"] == "false" and "[FAIL]" in err


def test_records_reject_wrong_columns():
    rec = RunRecord("x", {})
    with pytest.raises(KeyError):
        rec.add("verify", [{"id": "1"}])
    rec.add("verify", [{"id": "1", "name": "a", "passed": True, "measured": 0.1, "required": "b"}])
    assert table_csv("verify", rec.tables["verify"]).splitlines()[1] == "1,a,true,0.1,b"
    assert json.loads(to_json(rec))["tables"]["verify"][0]["passed"] is True


def test_int_list():
    assert cli.int_list("0:10:5") == [0, 5, 10]
    assert cli.int_list("1,3") == [1, 3]
    with pytest.raises(cli.UsageError):
        cli.int_list("1:5:0")
