import copy
import json
import re

import jsonschema
import pytest
from click.testing import CliRunner

from tsbvp import report as rep
from tsbvp.cli import cli
from tsbvp.errors import ConfigError
from tsbvp.problemfile import example_text, from_dict, load_example, loads

EXAMPLE = json.loads(example_text())


def write(tmp_path, raw, name="problem.json"):
    path = tmp_path / name
    path.write_text(raw if isinstance(raw, str) else json.dumps(raw), encoding="utf-8")
    return str(path)


def zero_file():
    raw = copy.deepcopy(EXAMPLE)
    raw.update(
        name="zero",
        f="0",
        g=["0"],
        envelope={"B": 1, "f_terms": {"b0": 0, "terms": [{"b": 0, "k": 1}, {"b": 0, "k": 1}]}, "g_terms": [{"a0": 0}]},
    )
    return raw


def run(args):
    return CliRunner().invoke(cli, args)


# --- problem files ---


def test_example_file_roundtrip():
    pf = load_example()
    again = loads(pf.canonical())
    assert again.canonical() == pf.canonical()
    assert again.sha256() == pf.sha256()
    assert re.fullmatch(r"[0-9a-f]{64}", pf.sha256())
    assert pf.problem.A() == 0.025


def test_key_order_does_not_change_hash():
    shuffled = dict(reversed(list(EXAMPLE.items())))
    assert from_dict(shuffled).sha256() == load_example().sha256()


def test_malformed_json_reports_position():
    with pytest.raises(ConfigError) as info:
        loads('{"n": 2,\n  "f": }')
    msg = str(info.value)
    assert "line 2" in msg and "offset" in msg


@pytest.mark.parametrize(
    "mutate,needle",
    [
        (lambda r: r.pop("f"), "f"),
        (lambda r: r.update(n=0), "n must"),
        (lambda r: r.update(g=[]), "g must"),
        (lambda r: r.update(f="1 + y"), "f"),
        (lambda r: r["params"].pop("R"), "R"),
        (lambda r: r.update(solver={"bogus": 1}), "bogus"),
        (lambda r: r.update(timescale={"kind": "explicit", "points": [0, 0.5]}), "timescale"),
        (lambda r: r.update(check={"box": [1, -1]}), "box"),
    ],
)
def test_config_errors(mutate, needle):
    raw = copy.deepcopy(EXAMPLE)
    mutate(raw)
    with pytest.raises(ConfigError) as info:
        from_dict(raw)
    assert needle in str(info.value)


# --- CLI ---


def test_verify_example_passes(tmp_path):
    res = run(["verify", "--problem", write(tmp_path, EXAMPLE), "--format", "machine"])
    assert res.exit_code == 0, res.output
    doc = json.loads(res.output)
    assert doc["status"] == "pass"
    assert doc["B1"]["exact"] == "4"
    assert doc["bounds"]["numbers"]["eta"]["exact"] == "1/21000"


def test_verify_r_equal_L_exits_1(tmp_path):
    raw = copy.deepcopy(EXAMPLE)
    raw["params"]["r"] = 5
    res = run(["verify", "--problem", write(tmp_path, raw), "--format", "machine"])
    assert res.exit_code == 1
    doc = json.loads(res.output)
    assert doc["violated"] == ["A2: r < L < R"]


def test_malformed_file_exits_2(tmp_path):
    res = run(["verify", "--problem", write(tmp_path, '{"n": 2,\n  "f": }')])
    assert res.exit_code == 2
    assert "line 2" in res.output


def test_missing_file_exits_2(tmp_path):
    res = run(["solve", "--problem", str(tmp_path / "nope.json")])
    assert res.exit_code == 2


def test_solve_zero_problem(tmp_path):
    res = run(["solve", "--problem", write(tmp_path, zero_file()), "--starts", "10", "--format", "machine"])
    assert res.exit_code == 0, res.output
    doc = json.loads(res.output)
    assert len(doc["records"]) == 1
    rec = doc["records"][0]
    assert max(abs(v) for v in rec["values"]) < 1e-9
    assert rec["shell"] == "U1"
    assert doc["shell_counts"]["U1"] == 1


def test_bad_solver_flag_exits_2(tmp_path):
    res = run(["solve", "--problem", write(tmp_path, EXAMPLE), "--starts", "0"])
    assert res.exit_code == 2


def test_solve_output_is_byte_identical(tmp_path):
    path = write(tmp_path, EXAMPLE)
    outs = []
    for i, workers in enumerate(("1", "3")):
        out = tmp_path / f"out{i}.json"
        res = run(["solve", "--problem", path, "--starts", "12", "--workers", workers, "--format", "machine", "--out", str(out)])
        assert res.exit_code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_iterate_example_does_not_claim_solution(tmp_path):
    res = run(["iterate", "--problem", write(tmp_path, EXAMPLE), "--max-iter", "50", "--format", "machine"])
    doc = json.loads(res.output)
    assert res.exit_code == 3
    assert doc["status"] in ("max_iter", "stalled", "diverged")
    assert len(doc["result"]["trace"]) >= 1


def test_iterate_zero_problem_solves(tmp_path):
    res = run(["iterate", "--problem", write(tmp_path, zero_file()), "--format", "machine"])
    assert res.exit_code == 0
    assert json.loads(res.output)["status"] == "solved"


def test_iterate_bad_eta_exits_2(tmp_path):
    res = run(["iterate", "--problem", write(tmp_path, EXAMPLE), "--eta", "-1"])
    assert res.exit_code == 2


def test_show_example_prints_builtin_file():
    res = run(["show-example"])
    assert res.exit_code == 0
    assert json.loads(res.output) == EXAMPLE


def test_example_seed_subset():
    small = json.loads(run(["example", "--starts", "1", "--seed", "7", "--format", "machine"]).output)
    full = json.loads(run(["example", "--format", "machine"]).output)
    full_values = [r["values"] for r in full["solve"]["records"]]
    for rec in small["solve"]["records"]:
        assert any(max(abs(a - b) for a, b in zip(rec["values"], v)) < 1e-6 for v in full_values)


@pytest.fixture(scope="module")
def example_machine():
    res = run(["example", "--starts", "20", "--format", "machine"])
    assert res.exit_code == 0
    return res.output


def test_reports_validate_against_schema(tmp_path, example_machine):
    schema = rep.schema()
    jsonschema.validate(json.loads(example_machine), schema)
    for args in (
        ["verify", "--problem", write(tmp_path, EXAMPLE)],
        ["solve", "--problem", write(tmp_path, EXAMPLE), "--starts", "5"],
        ["iterate", "--problem", write(tmp_path, EXAMPLE), "--max-iter", "20"],
    ):
        res = run(args + ["--format", "machine"])
        jsonschema.validate(json.loads(res.output), schema)


def _numbers(obj):
    if isinstance(obj, bool) or obj is None:
        return
    if isinstance(obj, (int, float)):
        yield obj
    elif isinstance(obj, dict):
        for v in obj.values():
            yield from _numbers(v)
    elif isinstance(obj, list):
        for v in obj:
            yield from _numbers(v)


def test_human_report_carries_every_number(example_machine):
    doc = json.loads(example_machine)
    human = run(["example", "--starts", "20"]).output
    for value in _numbers(doc):
        assert repr(value) in human or str(value) in human, value
    assert "U2-U1" in human and "nonnegative" in human
