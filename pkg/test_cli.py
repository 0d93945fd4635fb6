#!/usr/bin/env python3
"""Tests for the valkit command line and the shared execute_command dispatcher"""

import sys
import json
sys.path.append('.')

import pytest

from main import execute_command, main


@pytest.fixture(autouse=True)
def report_db(tmp_path, monkeypatch):
    path = tmp_path / "reports.db"
    monkeypatch.setenv("VALKIT_DB_PATH", str(path))
    return path


def run_json(capsys, *argv):
    code = main([*argv, "--json"])
    out = capsys.readouterr().out
    assert code == 0, out
    return json.loads(out)


def test_oag_info(capsys):
    result = run_json(capsys, "oag", "info", "--group", "lex(Z)", "--prime", "3")
    assert result["success"]
    assert result["index"] == 3 and result["r_p"] == 1
    assert result["chain"] == ["Δ_0", "Δ_1"]
    assert result["non_singular"] is True


def test_oag_info_omega_has_no_sp(capsys):
    result = run_json(capsys, "oag", "info", "--group", "lex(Z,Zomega)", "--prime", "5", "--depth", "2")
    assert result["index"] == "INFINITE"
    assert result["S_p"] is None
    assert len(result["chain"]) == 5


def test_oag_info_rank_two(capsys):
    result = run_json(capsys, "oag", "info", "--group", "lex(Z,Z)", "--prime", "2")
    assert result["index"] == 4 and result["r_p"] == 2
    assert result["chain"] == ["Δ_0", "Δ_1", "Δ_2"]
    assert [row["subgroup"] for row in result["S_p"]] == ["Δ_1", "Δ_2", None]


def test_oag_scalar_keeps_zero_multiplier(capsys):
    result = run_json(capsys, "oag", "arith", "--group", "lex(Z)", "--op", "scalar", "--x", "(3)", "--k", "0")
    assert result["result"] == "(0)"


def test_qe_text_first_line_is_formula(capsys):
    code = main(["qe", "--group", "lex(Z)", "--formula", "exists x. 2*x = y"])
    assert code == 0
    assert capsys.readouterr().out.splitlines()[0] == "cong(y,2,0)"


def test_qe_decide(capsys):
    result = run_json(capsys, "qe", "--group", "lex(Q)", "--formula", "forall y. exists x. x + x = y", "--decide")
    assert result["action"] == "decide" and result["decision"] is True
    result = run_json(capsys, "qe", "decide", "--group", "lex(Z)", "--formula", "forall y. exists x. x + x = y")
    assert result["decision"] is False


def test_hensel_lift_series(capsys):
    code = main(["hensel", "lift", "--field", "Q((t^lex(Z)))", "--poly", "X^2 - (1+t)", "--start", "1",
                 "--prec", "3"])
    assert code == 0
    assert capsys.readouterr().out.splitlines()[0] == "1 + 1/2*t - 1/8*t^2 + O(t^3)"


def test_hensel_lift_five_adic(capsys):
    result = run_json(capsys, "hensel", "lift", "--field", "Q_5", "--poly", "X^2 - 6", "--start", "1",
                      "--prec", "4")
    assert result["approximation"] == "73/28"
    assert result["certificate"]["iterates"] == ["1", "7/2", "73/28"]


def test_hensel_conjugate_form(capsys):
    result = run_json(capsys, "hensel", "conj", "--alpha", "sqrt(2)", "--point", "0,1")
    assert result["degree"] == 2 and result["verified"]
    assert result["jacobian_point"] == [0, 1]
    assert result["jacobian_value"] == "-8"
    assert result["no_rational_root"] is True


def test_galois_shape(capsys):
    code = main(["galois", "--group", "lex(Q)"])
    assert code == 0
    assert capsys.readouterr().out.splitlines()[0] == "ℤ/2ℤ"


def test_valfield_canonical(capsys):
    result = run_json(capsys, "valfield", "canonical", "--field", "C((t^lex(Z,Q)))")
    assert result["valuation"]["tail_index"] == 1
    assert result["valuation"]["residue_field"] == "C((t^lex(Q)))"


def test_cut_gap(capsys):
    code = main(["cut", "gap", "--field", "Q((t^lex(Z)))", "--alpha", "1 + t + t^(3/2)"])
    assert code == 0
    assert capsys.readouterr().out.splitlines()[0] == "(3/2)"


def test_cut_density_eps_list(capsys):
    result = run_json(capsys, "cut", "density", "--field", "Q((t^lex(Z)))", "--alpha", "t^(1/2)",
                      "--eps", "t; 1")
    assert [r["status"] for r in result["results"]] == ["GAP_WITNESS", "DENSE_EVIDENCE"]


def test_perfect_pth(capsys):
    result = run_json(capsys, "perfect", "pth", "--x", "(s^2+1)/(s^4)")
    assert result["is_pth_power"] and result["root"] == "(s + 1)/s^2"


def test_domain_error_exits_one(capsys):
    code = main(["oag", "info", "--group", "lex(Z)", "--prime", "4"])
    assert code == 1
    assert "❌" in capsys.readouterr().err


def test_missing_argument_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["hensel", "lift", "--field", "Q_5"])
    assert exc.value.code == 2
    assert "--poly" in capsys.readouterr().err


def test_execute_command_failures():
    result = execute_command("nope", {})
    assert not result["success"] and result["usage"]
    result = execute_command("cut", {"action": "gap", "field": "Q((t^lex(Z)))"})
    assert not result["success"] and "--alpha" in result["error"]
    result = execute_command("cut", {"action": "gap", "field": "Q((t^lex(Z)))", "alpha": "1 + t"})
    assert not result["success"] and not result["usage"]


def test_record_and_history(capsys):
    assert main(["galois", "--group", "lex(Z)", "--record"]) == 0
    assert main(["cut", "gap", "--field", "Q((t^lex(Z)))", "--alpha", "t^(1/2)", "--record"]) == 0
    capsys.readouterr()
    history = run_json(capsys, "history", "--command", "galois")
    assert history["count"] == 1
    assert history["reports"][0]["result"]["descriptor"] == "(∏_p ℤ_p) ⋊ ℤ/2ℤ"
    assert run_json(capsys, "history")["count"] == 2


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
