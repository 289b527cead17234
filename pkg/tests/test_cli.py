import json
import math
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from amenlab import cli
from amenlab import groups as G
from amenlab.randmat import SeededRng, haar_unitary


def run(args, capsys):
    code = cli.main(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_char_dist_d2(capsys):
    code, out, _ = run(["char-dist", "--group", "hyperoct:2"], capsys)
    assert code == 0
    doc = json.loads(out)
    rows = {r["value"]: r["prob_float"] for r in doc["rows"]}
    assert rows == {-2: 0.125, 0: 0.75, 2: 0.125}
    assert doc["header"]["config"]["group"] == "hyperoct:2"
    assert set(doc["header"]) == {"version", "config", "seed"}


def test_char_dist_tail_column(capsys):
    _, out, _ = run(["char-dist", "--group", "hyperoct:5", "--tail", "1"], capsys)
    doc = json.loads(out)
    for r in doc["rows"]:
        cdf, tail = (Fraction(r[k]) for k in ("cdf", "tail"))
        assert cdf + tail == 1
    assert doc["summary"]["tail"] == [r["tail"] for r in doc["rows"] if r["value"] == 1][0]


def test_char_dist_fast(capsys):
    start = time.perf_counter()
    code, _, _ = run(["char-dist", "--group", "hyperoct:12"], capsys)
    assert code == 0 and time.perf_counter() - start < 1.0


def test_char_dist_rejects_complex_characters(capsys):
    code, out, err = run(["char-dist", "--group", "diag-roots:3:3"], capsys)
    assert code == 2 and out == ""
    assert json.loads(err)["error"] == "UnsupportedSpecError"


def test_ez_deterministic_across_threads(capsys):
    args = ["ez", "--group", "diag-sign:64", "--samples", "400", "--seed", "7"]
    _, first, _ = run(args, capsys)
    _, second, _ = run(args, capsys)
    _, threaded, _ = run(args + ["--threads", "2"], capsys)
    assert first == second == threaded
    assert json.loads(first)["summary"]["n"] == 400


def test_csv_and_json_agree(capsys):
    base = ["entropy", "--group", "hyperoct:3", "--eps-points", "12"]
    _, js, _ = run(base, capsys)
    _, cs, _ = run(base + ["--format", "csv"], capsys)
    doc = json.loads(js)
    header, summary, rows = cli.parse_csv_document(cs)
    assert header["config"] == {**doc["header"]["config"], "format": "csv"}
    assert summary == doc["summary"]
    assert len(rows) == len(doc["rows"])
    for a, b in zip(rows, doc["rows"]):
        assert float(a["eps"]) == b["eps"]
        assert int(a["n_lower"]) == b["n_lower"] and int(a["n_upper"]) == b["n_upper"]
        assert a["method"] == b["method"]


def test_psi2(capsys):
    code, out, _ = run(["psi2", "--group", "q8", "--samples", "2000", "--seed", "1"], capsys)
    doc = json.loads(out)
    methods = {r["method"]: r["value"] for r in doc["rows"]}
    assert code == 0 and set(methods) == {"exact", "moment-ratio", "empirical"}
    assert abs(methods["empirical"] / methods["exact"] - 1) < 0.1


def test_sup_against_exhaustive(tmp_path, capsys):
    path = tmp_path / "u.json"
    G.save_matrix(path, np.asarray(haar_unitary(5, SeededRng(44))))
    code, out, _ = run(["sup", "--group", "hyperoct:5", "--angles", "4096", "--matrix", str(path), "--exhaustive"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["summary"]["agree"] is True
    sweep, exhaustive = (r["value"] for r in doc["rows"])
    assert abs(sweep - exhaustive) <= doc["summary"]["sup"]["rigorous_error"] + 1e-9


def test_verify_core_passes(capsys):
    code, out, _ = run(["verify", "--suite", "hyperoct-core"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["summary"]["all_pass"] is True
    assert all(r["pass"] for r in doc["rows"])


def test_verify_failure_exit_code(tmp_path, capsys):
    suite = {"name": "strict", "checks": ["solvable-band"], "groups": ["diag-sign:8"], "samples": 20, "angles": 32,
             "constants": {"solvable_lo": 5.0, "solvable_hi": 6.0}}
    path = tmp_path / "s.json"
    path.write_text(json.dumps(suite))
    code, out, _ = run(["verify", "--suite", str(path), "--format", "csv"], capsys)
    assert code == 1
    assert "false" in out


def test_jordan_from_generators(tmp_path, capsys):
    path = tmp_path / "q8.json"
    G.save_generators(path, G.quaternion_generators())
    code, out, _ = run(["jordan", "--matrix", str(path)], capsys)
    summary = json.loads(out)["summary"]
    assert code == 0
    assert summary["order"] == 8 and summary["abelian_index_upper"] == 2 and summary["irreducible"] is True
    assert summary["jordan_bound"] == 6 and summary["jordan_asserted"] is False


def test_numeric_error_exit_code(tmp_path, capsys):
    t = 1.0
    rot = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
    path = tmp_path / "rot.json"
    G.save_generators(path, [rot])
    code, out, err = run(["jordan", "--group", f"enum:{path}"], capsys)
    assert code == 3 and out == ""
    assert json.loads(err)["error"] == "CapExceededError"


@pytest.mark.parametrize(
    "args",
    [["char-dist", "--group", "cube:3"], ["sup", "--group", "hyperoct:3", "--matrix", "/nonexistent.json"], ["verify", "--suite", "nope"]],
)
def test_usage_errors(args, capsys):
    code, out, err = run(args, capsys)
    assert code == 2 and out == ""
    assert "error" in json.loads(err)


def test_argparse_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["ez"])
    assert info.value.code == 2


def test_out_file_and_timing(tmp_path, capsys):
    path = tmp_path / "o.json"
    code, out, err = run(["char-dist", "--group", "hyperoct:3", "--out", str(path), "--timing"], capsys)
    assert code == 0 and out == ""
    assert "wall_time_s" in json.loads(err)
    assert json.loads(path.read_text())["summary"]["order"] == 48


def test_console_entry_point_bytes():
    cmd = [sys.executable, "-m", "amenlab", "ez", "--group", "hyperoct:4", "--samples", "8", "--angles", "32", "--format", "csv"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd + ["--threads", "3"], capture_output=True, check=True).stdout
    assert a == b and a.startswith(b"# header: ")
