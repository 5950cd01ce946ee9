"""File schemas, report serialization, and the command-line front end."""

from fractions import Fraction

import pytest

from riskcal import validate
from riskcal.cli import build_parser, main
from riskcal.io import (
    SchemaError,
    emit_report_csv,
    emit_report_text,
    load_space_file,
    packaged_data_path,
    parse_report,
    parse_report_csv,
    parse_space,
    parse_utility,
)

SPACE_FILES = ["space_4.json", "space_8.json", "space_12.json", "space_product_64.json"]
UTILITY_FILES = [
    "utility_expectation.json",
    "utility_es_quarter.json",
    "utility_es_half.json",
    "utility_power_half.json",
    "utility_scenario.json",
    "utility_product_8x8.json",
]


def data(name: str) -> str:
    return str(packaged_data_path(name))


# ------------------------------------------------------------- space schema

def test_parse_space_golden():
    space, filt = parse_space(
        '{"masses": [[1, 4], [1, 4], [1, 4], [1, 4]], "f1_blocks": [[0, 1], [2, 3]]}'
    )
    assert space.mass == (Fraction(1, 4),) * 4
    assert filt.f1.blocks == ((0, 1), (2, 3))
    assert filt.f0.blocks == ((0, 1, 2, 3),)


def test_parse_space_integer_masses_and_labels():
    space, _ = parse_space(
        '{"masses": [1], "f1_blocks": [[0]], "labels": ["only"]}'
    )
    assert space.mass == (Fraction(1),)
    assert space.outcomes == ("only",)


def test_parse_space_rejects_unknown_keys():
    with pytest.raises(SchemaError, match="unknown keys") as ei:
        parse_space('{"masses": [[1, 1]], "f1_blocks": [[0]], "extra": 1}')
    assert ei.value.field == "extra"


def test_parse_space_missing_keys_name_the_field():
    with pytest.raises(SchemaError) as ei:
        parse_space('{"f1_blocks": [[0]]}')
    assert ei.value.field == "masses"
    with pytest.raises(SchemaError) as ei:
        parse_space('{"masses": [[1, 1]]}')
    assert ei.value.field == "f1_blocks"


def test_parse_space_bad_rational_entries():
    with pytest.raises(SchemaError) as ei:
        parse_space('{"masses": [[1, 0]], "f1_blocks": [[0]]}')
    assert "zero denominator" in str(ei.value)
    assert ei.value.field == "masses[0]"
    with pytest.raises(SchemaError) as ei:
        parse_space('{"masses": ["x"], "f1_blocks": [[0]]}')
    assert ei.value.field == "masses[0]"


def test_parse_space_bad_labels():
    with pytest.raises(SchemaError) as ei:
        parse_space('{"masses": [[1, 1]], "f1_blocks": [[0]], "labels": ["a", "b"]}')
    assert ei.value.field == "labels"


def test_json_syntax_error_carries_line():
    with pytest.raises(SchemaError) as ei:
        parse_space('{\n  "masses": oops\n}')
    assert ei.value.line == 2
    assert "not valid JSON" in str(ei.value)


# ----------------------------------------------------------- utility schema

def test_parse_utility_all_kinds():
    assert parse_utility('{"utility": {"kind": "expectation"}}').describe() == "expectation"
    assert parse_utility('{"utility": {"kind": "es", "alpha": [1, 2]}}').describe() == "es(1/2)"
    assert parse_utility('{"utility": {"kind": "power", "alpha": 0.5}}').describe() == "power(0.5)"
    pw = parse_utility(
        '{"utility": {"kind": "piecewise", "knots": [[0, 0], [0.5, 0.25], [1, 1]]}}'
    )
    assert pw.describe() == "piecewise[3 knots]"
    sc = parse_utility(
        '{"utility": {"kind": "scenario", "measures": [[[1, 2], [1, 2]], [0.25, 0.75]]}}'
    )
    assert sc.describe() == "scenario[2]"
    assert sc.scenarios.measures[0] == (Fraction(1, 2), Fraction(1, 2))
    pr = parse_utility('{"utility": {"kind": "product", "k_alpha": 2, "k_x": 4}}')
    assert pr.describe() == "product(2x4)"


def test_parse_utility_unknown_kind():
    with pytest.raises(SchemaError) as ei:
        parse_utility('{"utility": {"kind": "entropic"}}')
    assert ei.value.field == "utility.kind"
    assert "entropic" in str(ei.value)


def test_parse_utility_missing_pieces():
    with pytest.raises(SchemaError) as ei:
        parse_utility('{"nope": 1}')
    assert ei.value.field == "utility"
    with pytest.raises(SchemaError) as ei:
        parse_utility('{"utility": {"kind": "es"}}')
    assert ei.value.field == "utility.alpha"
    with pytest.raises(SchemaError) as ei:
        parse_utility('{"utility": {"kind": "power", "alpha": "big"}}')
    assert ei.value.field == "utility.alpha"
    with pytest.raises(SchemaError) as ei:
        parse_utility('{"utility": {"kind": "product", "k_alpha": 2.5, "k_x": 4}}')
    assert ei.value.field == "utility.k_alpha"


def test_parse_utility_wraps_construction_errors():
    # slopes 1.5 then 0.5: not convex, rejected by the distortion constructor
    with pytest.raises(SchemaError, match="convex") as ei:
        parse_utility('{"utility": {"kind": "piecewise", "knots": [[0, 0], [0.5, 0.75], [1, 1]]}}')
    assert ei.value.field == "utility"
    with pytest.raises(SchemaError) as ei:
        parse_utility('{"utility": {"kind": "scenario", "measures": [[[1, 2], [1, 4]]]}}')
    assert ei.value.field == "utility"


# --------------------------------------------------------- packaged examples

@pytest.mark.parametrize("name", SPACE_FILES)
def test_shipped_spaces_validate(name):
    space, filt = load_space_file(data(name))
    assert validate(space, filt).ok


@pytest.mark.parametrize("name", UTILITY_FILES)
def test_shipped_utilities_parse(name):
    with open(data(name), "r", encoding="utf-8") as fh:
        parse_utility(fh.read())


# ------------------------------------------------------------ report formats

def test_emit_report_text_is_canonical():
    doc = {"b": 1, "a": [1.5, True], "nested": {"z": 0.1, "y": "s"}}
    text = emit_report_text(doc)
    assert text == '{\n  "a": [\n    1.5,\n    true\n  ],\n  "b": 1,\n  "nested": {\n    "y": "s",\n    "z": 0.1\n  }\n}\n'
    assert emit_report_text(doc) == text


def test_emit_report_csv_cells():
    rows = [{"a": 0.1, "b": True, "c": "word"}, {"a": 2.0, "b": False, "c": 3}]
    text = emit_report_csv(rows, ["a", "b", "c"])
    assert text == "a,b,c\n0.1,true,word\n2.0,false,3\n"


def test_parse_report_round_trip():
    doc = {"command": "eval", "seed": 1729, "tolerance": 1e-9, "values": [0.25, -1.0]}
    text = emit_report_text(doc)
    parsed = parse_report(text)
    assert parsed == doc
    assert emit_report_text(parsed) == text


def test_parse_report_requires_header_keys():
    for missing in ("command", "seed", "tolerance"):
        doc = {"command": "eval", "seed": 1, "tolerance": 0.1}
        del doc[missing]
        with pytest.raises(SchemaError) as ei:
            parse_report(emit_report_text(doc))
        assert ei.value.field == missing


def test_parse_report_csv_round_trip():
    text = emit_report_csv([{"probe_id": 0, "gap": 0.5}], ["probe_id", "gap"])
    rows = parse_report_csv(text)
    assert rows == [{"probe_id": "0", "gap": "0.5"}]
    assert float(rows[0]["gap"]) == 0.5
    with pytest.raises(SchemaError):
        parse_report_csv("")


# -------------------------------------------------------------- CLI plumbing

def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_cli_validate_ok(capsys):
    code, out, err = run_cli(["validate", "--space", data("space_8.json")], capsys)
    assert code == 0 and err == ""
    doc = parse_report(out)
    assert doc["ok"] is True
    assert doc["outcomes"] == 8
    assert doc["conditional_resolution"] == 4
    assert doc["f1_blocks"] == [[0, 1, 2, 3], [4, 5, 6, 7]]


def test_cli_validate_reports_violations(tmp_path, capsys):
    bad = tmp_path / "bad_space.json"
    bad.write_text('{"masses": [[1, 2], [1, 2], [1, 2]], "f1_blocks": [[0, 1], [2]]}')
    code, out, _ = run_cli(["validate", "--space", str(bad)], capsys)
    assert code == 2
    doc = parse_report(out)
    assert doc["ok"] is False
    assert any("mass sum 3/2" in v for v in doc["violations"])


def test_cli_validate_names_utility(capsys):
    code, out, _ = run_cli(
        ["validate", "--space", data("space_4.json"), "--utility", data("utility_es_half.json")],
        capsys,
    )
    assert code == 0
    assert parse_report(out)["utility"] == "es(1/2)"


def test_cli_eval_text_and_counts(capsys):
    code, out, _ = run_cli(
        ["eval", "--space", data("space_4.json"), "--utility", data("utility_es_half.json"),
         "--probes", "10"],
        capsys,
    )
    assert code == 0
    doc = parse_report(out)
    assert doc["command"] == "eval" and doc["seed"] == 1729 and doc["probes"] == 10
    assert doc["variant"] == "es(1/2)"
    assert len(doc["values"]) == 11  # ladder probe plus the seeded draws
    assert doc["min"] == min(doc["values"]) and doc["max"] == max(doc["values"])


def test_cli_eval_csv_shape(capsys):
    code, out, _ = run_cli(
        ["eval", "--space", data("space_4.json"), "--utility", data("utility_expectation.json"),
         "--probes", "5", "--format", "csv"],
        capsys,
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "input_id,variant,value"
    assert len(lines) == 7
    assert lines[1].startswith("0,expectation,")


def test_cli_eval_rejects_mismatched_scenario(capsys):
    code, out, err = run_cli(
        ["eval", "--space", data("space_4.json"), "--utility", data("utility_scenario.json")],
        capsys,
    )
    assert code == 2 and out == ""
    assert err.startswith("input error:")
    assert "8 entries for 4 outcomes" in err


def test_cli_eval_rejects_invalid_space(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"masses": [[1, 2], [1, 2], [1, 2]], "f1_blocks": [[0, 1], [2]]}')
    code, _, err = run_cli(
        ["eval", "--space", str(bad), "--utility", data("utility_expectation.json")], capsys
    )
    assert code == 2
    assert "invalid space" in err and "mass sum 3/2" in err


def test_cli_tc_check_exit_codes(capsys):
    code, out, _ = run_cli(
        ["tc-check", "--space", data("space_4.json"), "--utility", data("utility_es_half.json"),
         "--probes", "20"],
        capsys,
    )
    assert code == 1
    doc = parse_report(out)
    assert doc["consistent"] is False
    assert doc["max_gap"] >= 0.5 - 1e-12
    assert doc["witness"] == [0.0, 1.0, 2.0, 4.0] or doc["max_gap"] > 0.5

    code, out, _ = run_cli(
        ["tc-check", "--space", data("space_4.json"), "--utility", data("utility_expectation.json"),
         "--probes", "20"],
        capsys,
    )
    assert code == 0
    assert parse_report(out)["consistent"] is True


def test_cli_tc_check_csv(capsys):
    code, out, _ = run_cli(
        ["tc-check", "--space", data("space_4.json"), "--utility", data("utility_es_half.json"),
         "--probes", "3", "--format", "csv"],
        capsys,
    )
    assert code == 1
    lines = out.splitlines()
    assert lines[0] == "probe_id,direct,recomposed,gap"
    assert len(lines) == 5
    assert lines[1].split(",")[:1] == ["0"]


def test_cli_cone_check(capsys):
    code, out, _ = run_cli(
        ["cone-check", "--space", data("space_4.json"), "--utility", data("utility_es_half.json"),
         "--probes", "15"],
        capsys,
    )
    assert code == 0
    doc = parse_report(out)
    assert doc["acceptable_probes"] >= 1
    assert 0 <= doc["feasible_count"] <= doc["acceptable_probes"]
    assert doc["verdicts"][0]["probe_id"] == 0 and doc["verdicts"][0]["feasible"] is True


def test_cli_lift_text(capsys):
    code, out, _ = run_cli(
        ["lift", "--space", data("space_8.json"), "--utility", data("utility_es_half.json"),
         "--f", "1,1,1,1,0,0,0,0", "--g", "0,0,0,0,-1,-1,-1,-1"],
        capsys,
    )
    assert code == 0
    doc = parse_report(out)
    assert doc["m"] == 1.0
    assert doc["grid_n"] == 4
    assert len(doc["xi"]) == 8 and len(doc["eta"]) == 8
    assert len(doc["geometry"]) == 2
    assert doc["diagnostics"]["snap_error"] <= 0.5
    assert max(doc["diagnostics"]["err_f"]) <= 1e-9


def test_cli_lift_csv_columns(capsys):
    code, out, _ = run_cli(
        ["lift", "--space", data("space_8.json"), "--utility", data("utility_es_half.json"),
         "--f", "1,1,1,1,0,0,0,0", "--g", "0,0,0,0,-1,-1,-1,-1", "--format", "csv"],
        capsys,
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "block,f,g,x_x,x_y,y_x,y_y,lambda_target,lambda_achieved"
    assert len(lines) == 3


def test_cli_lift_rejects_unmeasurable_payoff(capsys):
    code, _, err = run_cli(
        ["lift", "--space", data("space_8.json"), "--utility", data("utility_es_half.json"),
         "--f", "1,0,1,0,1,0,1,0", "--g", "0,0,0,0,0,0,0,0"],
        capsys,
    )
    assert code == 2
    assert "constant on every F1 block" in err


def test_cli_lift_rejects_wrong_length(capsys):
    code, _, err = run_cli(
        ["lift", "--space", data("space_8.json"), "--utility", data("utility_es_half.json"),
         "--f", "1,2,3", "--g", "0,0,0,0,0,0,0,0"],
        capsys,
    )
    assert code == 2
    assert "3 entries for 8 outcomes" in err


def test_cli_demo_incompatibility_values(capsys):
    code, out, _ = run_cli(["demo", "incompatibility", "--probes", "5"], capsys)
    assert code == 0
    doc = parse_report(out)
    assert doc["tc_gap_exhibit"]["crafted_gap"] == pytest.approx(0.5, abs=1e-9)
    assert doc["tc_gap_exhibit"]["max_gap"] >= 0.5 - 1e-12
    assert doc["additivity_exhibit"]["a_value"] == pytest.approx(1.0, abs=1e-9)
    assert doc["additivity_exhibit"]["snap_error"] == 0.0
    assert doc["product_linearity"]["flat_max_error"] <= doc["product_linearity"]["flat_tolerance"]
    assert doc["product_linearity"]["nonflat_gap"] > doc["product_linearity"]["flat_tolerance"]


def test_cli_demo_multiperiod_values(capsys):
    code, out, _ = run_cli(["demo", "multiperiod"], capsys)
    assert code == 0
    doc = parse_report(out)
    stages = {lvl["stage"]: lvl["value"] for lvl in doc["levels"]}
    assert stages["direct"] == pytest.approx(1.75, abs=1e-12)
    assert stages["collapse_level2"] == pytest.approx(1.0, abs=1e-12)
    assert stages["collapse_level1"] == pytest.approx(0.0, abs=1e-12)
    assert doc["total_gap"] == pytest.approx(1.75, abs=1e-12)


def test_cli_demo_csv(capsys):
    code, out, _ = run_cli(["demo", "multiperiod", "--format", "csv"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "stage,value,gap_from_previous"
    assert len(lines) == 4


def test_cli_reports_are_deterministic(tmp_path, capsys):
    argv = ["eval", "--space", data("space_8.json"), "--utility", data("utility_power_half.json"),
            "--probes", "25"]
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    assert main(argv + ["--out", str(first)]) == 0
    assert main(argv + ["--out", str(second)]) == 0
    capsys.readouterr()
    assert first.read_bytes() == second.read_bytes()
    parse_report(first.read_text())


def test_cli_out_writes_file_only(tmp_path, capsys):
    target = tmp_path / "report.json"
    code, out, _ = run_cli(
        ["validate", "--space", data("space_4.json"), "--out", str(target)], capsys
    )
    assert code == 0 and out == ""
    assert parse_report(target.read_text())["ok"] is True


def test_cli_bad_json_file_exits_two(tmp_path, capsys):
    broken = tmp_path / "broken.json"
    broken.write_text("{ not json")
    code, _, err = run_cli(
        ["eval", "--space", str(broken), "--utility", data("utility_expectation.json")], capsys
    )
    assert code == 2
    assert err.startswith("input error:") and "not valid JSON" in err


def test_parser_defaults():
    args = build_parser().parse_args(
        ["tc-check", "--space", "s.json", "--utility", "u.json"]
    )
    assert args.probes == 200 and args.seed == 1729 and args.fmt == "text"
    assert args.tol == 1e-9
    args = build_parser().parse_args(["demo", "incompatibility"])
    assert args.probes == 50
