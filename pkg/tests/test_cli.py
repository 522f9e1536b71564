import json
import math
import subprocess
import sys

import numpy as np
import pytest

from specgeo import __version__
from specgeo.cli import main
from specgeo.nctorus import golden_theta, random_one_form
from specgeo.parallel import ENV_VAR, ordered_map, thread_count
from specgeo.report import ReportError, fmt_float, metadata, plain, read_csv_table, to_csv, to_json

SUBCOMMANDS = ["shells", "zeta", "dioph", "heat", "wres", "dixmier", "action", "nctorus", "moyal"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def one_form_file(tmp_path):
    A = random_one_form(4, golden_theta(4), np.random.default_rng(8))
    path = tmp_path / "a.json"
    path.write_text(json.dumps(A.to_json()))
    return str(path)


def test_zeta_epstein_at_zero(capsys):
    code, out, _ = run(capsys, "zeta", "--epstein", "2", "0")
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["finite_part"] == pytest.approx(-1.0, abs=1e-12)
    assert doc["result"]["pole_order"] == 0
    meta = doc["meta"]
    assert meta["toolkit"] == "specgeo" and meta["version"] == __version__ and meta["command"] == "zeta"
    assert meta["config"]["n"] == 2


def test_zeta_pole_reported(capsys):
    code, out, _ = run(capsys, "zeta", "--epstein", "2", "2")
    assert code == 0
    res = json.loads(out)["result"]
    assert res["pole_order"] == 1 and res["residue"] == pytest.approx(2 * math.pi, rel=1e-12)


def test_dixmier_slow_convergence_exits_2(capsys):
    code, out, _ = run(capsys, "dixmier", "--dim", "2", "--N", "1000")
    assert code == 2
    comments, header, rows = read_csv_table(out)
    assert header == ["N", "sigma_N", "sigma_over_log_N"] and rows


def test_nctorus_check(capsys, one_form_file):
    code, out, _ = run(capsys, "nctorus", "check", "--input", one_form_file)
    assert code == 0
    res = json.loads(out)["result"]
    assert res["within_tolerance"] is True and res["scaled_residual"] <= 1e-10


def test_nctorus_action_csv(capsys, one_form_file):
    code, out, _ = run(capsys, "nctorus", "action", "--input", one_form_file, "--lambda", "2")
    assert code == 0
    _, header, rows = read_csv_table(out)
    assert header == ["power", "coefficient", "value", "label"] and [r[0] for r in rows] == ["4", "0"]


def test_unknown_flag_is_named(capsys):
    code, _, err = run(capsys, "zeta", "--epstein", "2", "0", "--bogus")
    assert code == 1 and "--bogus" in err
    code, _, err = run(capsys, "dixmier", "--frobnicate", "3")
    assert code == 1 and "--frobnicate" in err


def test_usage_errors(capsys, tmp_path):
    assert run(capsys)[0] == 1
    assert run(capsys, "nosuch")[0] == 1
    assert run(capsys, "zeta")[0] == 1
    assert run(capsys, "nctorus", "check", "--input", str(tmp_path / "missing.json"))[0] == 1
    assert run(capsys, "zeta", "--epstein", "2", "0", "--format", "csv")[0] == 1


def test_help_lists_subcommands(capsys):
    code, out, _ = run(capsys, "--help")
    assert code == 0
    for name in SUBCOMMANDS:
        assert f"  {name} " in out
    assert ENV_VAR in out and "exit codes" in out


def test_byte_identical_runs(tmp_path, capsys):
    paths = []
    for i in range(2):
        p = tmp_path / f"out{i}.csv"
        assert main(["action", "--dim", "2", "--cutoff", "exp", "--lambda-ladder", "5,10", "--output", str(p)]) == 0
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert b"\r" not in paths[0].read_bytes()


def test_json_round_trip(capsys):
    code, out, _ = run(capsys, "dioph", "--value", "phi")
    assert code == 0
    doc = json.loads(out)
    again = to_json(doc["meta"], doc["result"])
    assert again == out


def test_shells_counts(capsys):
    code, out, _ = run(capsys, "shells", "--dim", "2", "--max", "5", "--dirac")
    _, header, rows = read_csv_table(out)
    assert header == ["norm_sq", "count"]
    assert [tuple(map(int, r)) for r in rows] == [(0, 2), (1, 8), (2, 8), (4, 8), (5, 16)]


@pytest.mark.filterwarnings("ignore::specgeo.moyal.TruncationDefectWarning")
def test_moyal_commands(capsys, tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"N": 1, "f": [[1, 0], [0, 0]], "g": {"entries": [{"m": 0, "n": 1, "re": 2.0}]}}))
    code, out, _ = run(capsys, "moyal", "star", "--theta", "2", "--cutoff", "1", "--input", str(p))
    assert code == 0 and json.loads(out)["result"]["product"] == [[0.0, 2.0], [0.0, 0.0]]
    code, out, _ = run(capsys, "moyal", "dixmier", "--theta", "2", "--cutoff", "1", "--input", str(p))
    res = json.loads(out)["result"]
    assert code == 0 and res["integral_formula"] == pytest.approx(2.0)
    code, out, _ = run(capsys, "moyal", "norms", "--theta", "2", "--cutoff", "1", "--input", str(p))
    assert code == 0 and json.loads(out)["result"]["bound_holds"] is True


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "specgeo.cli", "zeta", "--twisted", "0.2", "0"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["finite_part"] == pytest.approx(-1.0, abs=1e-12)


# report layer


def test_float_format():
    assert fmt_float(1.0) == "1.0"
    assert fmt_float(0.1) == "0.10000000000000001"
    assert float(fmt_float(math.pi)) == math.pi
    assert fmt_float(1e300) == "1.0000000000000001e+300"
    for bad in (math.nan, math.inf, -math.inf):
        with pytest.raises(ReportError):
            fmt_float(bad)


def test_nan_rejected():
    meta = metadata("x", {}, {})
    with pytest.raises(ReportError):
        to_json(meta, {"v": float("nan")})
    with pytest.raises(ReportError):
        to_csv(meta, ["a"], [[np.inf]])
    with pytest.raises(ReportError):
        plain(object())


def test_plain_conversions():
    from fractions import Fraction

    assert plain({"z": 1 + 2j, "a": np.arange(2), "f": Fraction(1, 4), "t": (np.int64(3),)}) == {
        "z": {"re": 1.0, "im": 2.0},
        "a": [0, 1],
        "f": 0.25,
        "t": [3],
    }


def test_csv_round_trip():
    meta = metadata("demo", {"n": 2, "ladder": [1, 2]}, {"rel": 1e-8})
    text = to_csv(meta, ["x", "label"], [[0.5, "a,b"], [2, 'q"t']], summary={"total": 2.5})
    comments, header, rows = read_csv_table(text)
    assert comments["meta.command"] == "demo"
    assert comments["meta.config.ladder"] == "[1, 2]"
    assert comments["summary.total"] == "2.5"
    assert header == ["x", "label"]
    assert rows == [["0.5", "a,b"], ["2", 'q"t']]
    with pytest.raises(ReportError):
        to_csv(meta, ["x"], [[1, 2]])


# thread pool


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv(ENV_VAR, "3")
    assert thread_count() == 3
    monkeypatch.setenv(ENV_VAR, "0")
    with pytest.raises(ValueError):
        thread_count()
    monkeypatch.setenv(ENV_VAR, "x")
    with pytest.raises(ValueError):
        thread_count()


@pytest.mark.parametrize("threads", ["1", "4"])
def test_ordered_map_deterministic(monkeypatch, threads):
    monkeypatch.setenv(ENV_VAR, threads)
    assert ordered_map(lambda x: x * x, range(20)) == [x * x for x in range(20)]
