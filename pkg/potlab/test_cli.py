import json
import typing

import pytest

from potlab import cli

DEMOS = ["disc-capacity", "half-line-removable", "martio-reflection", "parabolicity-table", "unweighted-dichotomy"]


def _scenario(tmp_path, body, name="case"):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(body))
    return path


def test_decide1d_scenario(tmp_path):
    path = _scenario(tmp_path, {"kind": "decide1d", "omega": [[0, 2]], "E": [[1, 2]], "sup_norm": 1.0})
    payload = cli.run(path, tmp_path / "out")
    assert payload["removable"] is True
    assert payload["C"] == 2.0
    assert payload["extension_bound"] == 2.0
    written = json.loads((tmp_path / "out" / "case.json").read_text())
    assert written["clause"] == "ratio-bounded"
    header = (tmp_path / "out" / "case.csv").read_text().splitlines()[0]
    assert header == "component,length,kept_length,nu,kept_nu"


def test_unbounded_endpoints_as_strings(tmp_path):
    path = _scenario(tmp_path, {"kind": "decide1d", "omega": [["-inf", "inf"]], "E": [[0, "inf"]]})
    payload = cli.run(path, tmp_path / "out")
    assert payload["C"] == 1.0


def test_parabolic_scenario(tmp_path):
    path = _scenario(tmp_path, {"kind": "parabolic", "ps": [2.0, 3.0], "growths": [{"kind": "power", "d": 3}]})
    table = cli.run(path, tmp_path / "out")["table"]
    assert [row["parabolic"] for row in table] == [False, True]


def test_fq_scenario(tmp_path):
    path = _scenario(tmp_path, {"kind": "fq", "Q": 2.0, "p": 2.0, "xs": [3.0]})
    payload = cli.run(path, tmp_path / "out")
    assert payload["bounds"][0] == pytest.approx(-3.0 + 18.0 ** 0.5, abs=1e-6)


def test_verdict_scenario(tmp_path):
    body = {"kind": "verdict", "cases": [
        {"n": 2, "p": 3.0, "E": {"kind": "points", "points": [[0, 0]]}},
        {"n": 2, "p": 3.0, "omega": {"kind": "ball", "center": [0, 0], "radius": 1.0},
         "E": {"kind": "points", "points": [[0, 0]]}},
    ]}
    payload = cli.run(_scenario(tmp_path, body), tmp_path / "out")
    assert [v["removable"] for v in payload["verdicts"]] == ["YesDegenerate", "No"]


def test_validate_accepts_a_good_file(tmp_path):
    path = _scenario(tmp_path, {"kind": "decide1d", "omega": [[0, 2]], "E": [[1, 2]]})
    assert cli.validate(path) == []


def test_validate_reports_piece_outside_omega(tmp_path):
    path = _scenario(tmp_path, {"kind": "decide1d", "omega": [[0, 2]], "E": [[3, 4]]})
    diagnostics = cli.validate(path)
    assert len(diagnostics) == 1
    assert "does not meet Omega" in diagnostics[0]


def test_validate_reports_missing_table(tmp_path):
    missing = tmp_path / "nowhere.csv"
    path = _scenario(tmp_path, {"kind": "decide1d", "omega": [[0, 2]], "weight": f"table {missing}"})
    diagnostics = cli.validate(path)
    assert any(str(missing) in d for d in diagnostics)


def test_validate_reports_schema_errors(tmp_path):
    assert cli.validate(_scenario(tmp_path, {"kind": "nonsense"}))
    assert cli.validate(_scenario(tmp_path, {"kind": "fq", "xs": [2.0], "extra": 1}))
    assert cli.validate(tmp_path / "absent.json")


def test_exit_codes(tmp_path, capsys):
    good = _scenario(tmp_path, {"kind": "fq", "xs": [2.0]}, "good")
    assert cli.main(["run", str(good), "--out", str(tmp_path / "out")]) == 0
    bad_weight = _scenario(tmp_path, {"kind": "decide1d", "omega": [[0, 2]], "weight": "cubic 3"}, "bad")
    assert cli.main(["run", str(bad_weight), "--out", str(tmp_path / "out")]) == 1
    disconnected = _scenario(tmp_path, {"kind": "extend1d", "omega": [[-1, 1]], "E": [[-0.5, 0]],
                                        "a": 1.0, "b": 0.0}, "split")
    assert cli.main(["run", str(disconnected), "--out", str(tmp_path / "out")]) == 2
    out = capsys.readouterr().out
    assert "✅" in out and "❌" in out


def test_non_removable_is_a_verdict_not_an_error(tmp_path):
    path = _scenario(tmp_path, {"kind": "decide1d", "omega": [[-1, 1]], "E": [[-0.5, 0]]})
    assert cli.main(["run", str(path), "--out", str(tmp_path / "out")]) == 0
    assert json.loads((tmp_path / "out" / "case.json").read_text())["removable"] is False


def test_dispatch_covers_every_scenario_kind():
    union = typing.get_args(cli.Scenario)[0]
    kinds = {typing.get_args(cls.model_fields["kind"].annotation)[0] for cls in typing.get_args(union)}
    assert kinds == set(cli.DISPATCH)


def test_outputs_are_deterministic(tmp_path):
    path = _scenario(tmp_path, {"kind": "parabolic", "ps": [1.5, 2.0, 3.0],
                                "growths": [{"kind": "closed", "expr": "r**2 + r"}], "power_weights": [[2, 1.0]]})
    cli.run(path, tmp_path / "a")
    cli.run(path, tmp_path / "b")
    assert (tmp_path / "a" / "case.csv").read_bytes() == (tmp_path / "b" / "case.csv").read_bytes()
    assert (tmp_path / "a" / "case.json").read_bytes() == (tmp_path / "b" / "case.json").read_bytes()


def test_demo_list(capsys):
    assert cli.main(["demo", "--list"]) == 0
    assert capsys.readouterr().out.split() == DEMOS


@pytest.mark.parametrize("name", DEMOS)
def test_demos_validate(name):
    assert cli.validate(cli.SCENARIO_DIR / f"{name}.json") == []


def test_unknown_demo(capsys):
    assert cli.main(["demo", "no-such-demo"]) == 1
    assert "Unknown demo" in capsys.readouterr().out


def test_quick_demos_run(tmp_path):
    payload = cli.run(cli.SCENARIO_DIR / "half-line-removable.json", tmp_path)
    assert payload["removable"] is True
    payload = cli.run(cli.SCENARIO_DIR / "martio-reflection.json", tmp_path)
    assert payload["Qprime"] == 4.0
    payload = cli.run(cli.SCENARIO_DIR / "unweighted-dichotomy.json", tmp_path)
    assert "YesDegenerate" in [v["removable"] for v in payload["verdicts"]]


def test_report_scenarios_write_the_report_csv(tmp_path):
    path = _scenario(tmp_path, {"kind": "liouville", "p": 2.0}, "liouville")
    payload = cli.run(path, tmp_path / "out")
    assert payload["verdict"] == "ConstantInLimit"
    rows = (tmp_path / "out" / "liouville.csv").read_text().splitlines()
    assert rows[0] == "h,value,oscillation,verdict"
    assert len(rows) == 5
    assert all(row.endswith(",ConstantInLimit") for row in rows[1:])
