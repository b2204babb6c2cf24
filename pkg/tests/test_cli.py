import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from conftest import PROGRAMS, canonical
from tracerw.cli import main


def schema(name):
    return json.loads(resources.files("tracerw").joinpath(f"schemas/{name}.json").read_text())


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def prog(name):
    return str(PROGRAMS / f"{name}.elv")


def test_check_prints_simplified_type(capsys):
    code, out, _ = run(capsys, "check", prog("e1"))
    assert code == 0
    assert canonical(out.strip()) == canonical("{d,e}: d0*1 | e0*2 → d0 | e0+e0")


def test_check_formal(capsys):
    code, out, _ = run(capsys, "check", "--formal", prog("e2"))
    assert code == 0
    assert out.startswith("▶{a} ⟨") and "10: ()_{a}" in out


def test_warning_is_underlined(capsys, monkeypatch):
    monkeypatch.setenv("ELV_COLOR", "0")
    code, out, err = run(capsys, "check", prog("e5"))
    assert code == 0
    lines = err.splitlines()
    assert lines[0].startswith("1 | let e5 = (rule")
    caret = lines[1].index("^")
    assert lines[0][caret] == "("
    assert set(lines[1].strip()) == {"^", "~"}
    assert "warning[W001]: this strategy is guaranteed to fail at runtime," in lines[2]
    assert "\x1b[" not in err


def test_deny_warnings(capsys):
    assert run(capsys, "check", "--deny-warnings", prog("e5"))[0] == 2
    assert run(capsys, "check", "--deny-warnings", prog("e1"))[0] == 0


@pytest.mark.parametrize("name", ["e6", "e7"])
def test_type_errors_exit_1(capsys, name):
    code, _, err = run(capsys, "check", prog(name))
    assert code == 1
    assert "error[E001]" in err and "There is no trace for the composed strategy type" in err


def test_parse_error_exit_3(capsys, tmp_path):
    bad = tmp_path / "bad.elv"
    bad.write_text("rule 1 -> \n")
    code, _, err = run(capsys, "check", str(bad))
    assert code == 3
    assert "parse error" in err


def test_missing_file_exit_4(capsys, tmp_path):
    assert run(capsys, "check", str(tmp_path / "nope.elv"))[0] == 4
    assert run(capsys, "eval", str(tmp_path / "nope.elv"))[0] == 4


def test_eval_all_and_sample(capsys):
    code, out, _ = run(capsys, "eval", "--all", prog("e2"))
    assert (code, out.strip()) == (0, "succ 10")
    code, out, _ = run(capsys, "eval", "--sample", "5", prog("e8_eval"))
    assert code == 0 and out.strip() in {"fail", "succ (4+3)"}


def test_eval_rejects_ill_typed_and_non_results(capsys):
    assert run(capsys, "eval", prog("e6"))[0] == 1
    assert run(capsys, "eval", prog("e1"))[0] == 1


@pytest.mark.parametrize("name", ["e1", "e2", "e3", "e4", "e5", "e6", "e7", "e8"])
def test_check_json_matches_schema(capsys, name):
    code, out, _ = run(capsys, "check", "--json", prog(name))
    doc = json.loads(out)
    jsonschema.validate(doc, schema("check"))
    assert doc["exit"] == code


def test_parse_error_json_matches_schema(capsys, tmp_path):
    bad = tmp_path / "bad.elv"
    bad.write_text("(rule x -> x")
    code, out, _ = run(capsys, "check", "--json", str(bad))
    assert code == 3
    jsonschema.validate(json.loads(out), schema("check"))


def test_eval_json_matches_schema(capsys):
    code, out, _ = run(capsys, "eval", "--json", prog("e8_eval"))
    assert code == 0
    jsonschema.validate(json.loads(out), schema("eval"))


def test_harness_report(capsys, tmp_path):
    target = tmp_path / "out" / "report.json"
    code, out, _ = run(capsys, "harness", "--seeds", "5", "--workers", "1",
                       "--report", str(target))
    assert code == 0
    jsonschema.validate(json.loads(target.read_text()), schema("harness"))
    assert target.with_suffix(".png").exists()
    assert "subject_reduction" in out


def test_console_script_entry_point():
    done = subprocess.run([sys.executable, "-m", "tracerw.cli", "check", prog("e2")],
                          capture_output=True, text=True)
    assert done.returncode == 0
    assert done.stdout.strip() == "▶{a} 10"
