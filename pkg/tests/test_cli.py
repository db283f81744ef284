import json
import subprocess
import sys

import pytest

from outerlp.cli import main


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        path = tmp_path / name
        path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
        return str(path)

    return write


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_norm_first_family_single_iterated(capsys, files):
    ce = files("ce.json", {"kind": "ce1", "m": 4})
    code, out, _ = run(capsys, "norm", "--setting", ce, "--p", "1", "--r", "2")
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(2.0)


def test_norm_zero_function(capsys, files):
    ce = files("ce.json", {"kind": "ce1", "m": 3})
    zero = files("f.json", [0, 0, 0])
    code, out, _ = run(capsys, "norm", "--setting", ce, "--function", zero, "--p", "2", "--q", "3", "--r", "2")
    assert code == 0
    assert json.loads(out)["value"] == 0.0


def test_norm_matches_library_call(capsys, files):
    from outerlp.norms import NormEngine, Outer
    from outerlp.space import random_space

    rnd = files("rnd.json", {"kind": "random", "n": 5, "seed": 7})
    f = [1.0, 0.5, 2.0, 0.0, 3.0]
    fn = files("f.json", f)
    code, out, _ = run(capsys, "norm", "--setting", rnd, "--function", fn, "--p", "2", "--q", "3", "--r", "2")
    assert code == 0
    assert json.loads(out)["value"] == NormEngine(random_space(5, 7), f).norm(2.0, Outer(3.0, 2.0))


def test_raw_space_and_tile_map(capsys, files):
    space = files("sp.json", {
        "points": 2,
        "omega": ["1", "1/2"],
        "muGen": [{"mask": "0x3", "sigma": "1"}],
        "nuGen": [{"mask": "0x1", "tau": "1"}, {"mask": [1], "tau": "2"}],
    })
    code, out, _ = run(capsys, "norm", "--setting", space, "--p", "2", "--q", "2", "--r", "1")
    assert code == 0
    dy = files("dy.json", {"kind": "dyadic", "J": 1})
    tiles = files("t.json", {"0,0,0": 1.0, "0,1,0": 2.0})
    code, out, _ = run(capsys, "norm", "--setting", dy, "--function", tiles, "--p", "2", "--q", "2", "--r", "2")
    assert code == 0 and json.loads(out)["value"] > 0


def test_counterexample_table(capsys):
    code, out, _ = run(capsys, "counterexample", "--family", "first", "--m-range", "1-8", "--r", "2", "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 9
    header = lines[0].split(",")
    first = dict(zip(header, lines[1].split(",")))
    assert float(first["ratio"]) == 1.0
    last = dict(zip(header, lines[-1].split(",")))
    assert float(last["ratio"]) == pytest.approx(8**0.5)


def test_counterexample_rejects_bad_r(capsys):
    code, _, err = run(capsys, "counterexample", "--family", "second", "--r", "2")
    assert code == 2 and "second family" in err


def test_malformed_json_reports_position(capsys, files):
    bad = files("bad.json", '{"kind": ')
    code, _, err = run(capsys, "norm", "--setting", bad, "--p", "1", "--r", "1")
    assert code == 2
    assert "line 1 column" in err


def test_missing_exponent_is_an_input_error(capsys, files):
    ce = files("ce.json", {"kind": "ce1", "m": 2})
    code, _, err = run(capsys, "norm", "--setting", ce, "--p", "1")
    assert code == 2 and "--r" in err


def test_function_length_mismatch(capsys, files):
    ce = files("ce.json", {"kind": "ce1", "m": 3})
    fn = files("f.json", [1, 2])
    code, _, _ = run(capsys, "norm", "--setting", ce, "--function", fn, "--p", "1", "--r", "1")
    assert code == 2


def test_non_positive_budget(capsys):
    code, _, err = run(capsys, "verify", "collapse", "--budget", "0")
    assert code == 2 and "budget" in err


def test_verify_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["verify", "collapse", "--seeds", "6", "--format", "csv", "--out", str(a)]) == 0
    assert main(["verify", "collapse", "--seeds", "6", "--format", "csv", "--out", str(b)]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()


def test_decompose_and_conditions(capsys, files):
    cart = files("c.json", {"kind": "cartesian", "sizes": [2, 2, 2], "seed": 3})
    fn = files("f.json", [1, 2, 0, 3, 1, 1, 2, 5])
    for variant in ("interior", "canopy", "qGeqR", "psi"):
        code, out, _ = run(capsys, "decompose", "--setting", cart, "--function", fn, "--p", "2", "--q", "3", "--r", "2",
                           "--variant", variant)
        assert code == 0 and json.loads(out)["ok"]
    code, out, _ = run(capsys, "conditions", "--setting", cart)
    assert code == 0
    assert [v["status"] for v in json.loads(out)["verdicts"]] == ["holds"] * 3


def test_conditions_failure_exits_one(capsys, files):
    ce = files("ce.json", {"kind": "ce1", "m": 2})
    code, out, _ = run(capsys, "conditions", "--setting", ce, "--K", "1")
    verdicts = {v["condition"]: v for v in json.loads(out)["verdicts"]}
    assert verdicts["parent"]["status"] == "holds"
    assert code == (0 if all(v["status"] == "holds" for v in verdicts.values()) else 1)


def test_dual_report(capsys, files):
    cart = files("c.json", {"kind": "cartesian", "sizes": [2, 2, 2], "seed": 3})
    fn = files("f.json", [1, 2, 0, 3, 1, 1, 2, 5])
    code, out, _ = run(capsys, "dual", "--setting", cart, "--function", fn, "--p", "2", "--q", "2", "--r", "4")
    assert code == 0
    rep = json.loads(out)["report"]
    assert rep["holdsWithinEnvelope"] and all(l["ok"] for l in rep["links"])


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "outerlp", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "counterexample" in res.stdout
