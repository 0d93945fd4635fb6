#!/usr/bin/env python3
"""Tests for cuts by real-closure elements: gap, D/A/O membership, density and the cut valuation"""

import sys
import random
from fractions import Fraction
sys.path.append('.')

import pytest

from errors import CutError
from hahn import parse_field, parse_series
from ordcut import (A_SET, D_SET, DENSE_EVIDENCE, GAP_WITNESS, O_SET, a_witness, cut_membership, density_check,
                    exponent_grid, gap_value, parse_pair, sample_elements, valuation_report)

F = "Q((t^lex(Z)))"
QT = parse_field(F)
ALPHAS = ["t^(1/2)", "1 + t^(3/2)", "2*t^(1/2) + t"]


def s(text):
    return parse_series(text, QT)


@pytest.mark.parametrize("alpha,gap,trunc,sign", [
    ("t^(1/2)", "(1/2)", "0", 1),
    ("1 + t + t^(3/2)", "(3/2)", "1 + t", 1),
    ("2*t^(1/2) + t", "(1/2)", "0", 1),
    ("1 - t^(1/2)", "(1/2)", "1", -1),
])
def test_gap_value(alpha, gap, trunc, sign):
    cut = gap_value(parse_pair(F, alpha))
    assert str(cut.gap) == gap
    assert str(cut.trunc) == trunc
    assert cut.excess_sign == sign


def test_pair_rejects():
    with pytest.raises(CutError):
        parse_pair(F, "1 + t")
    with pytest.raises(CutError):
        parse_pair(F, "-t^(1/2)")
    with pytest.raises(CutError):
        parse_pair(F, "t", "lex(Quad(2))")
    with pytest.raises(CutError):
        parse_pair("Fp(5)((t^lex(Z)))", "t^(1/2)")


def test_pair_with_explicit_extension():
    pair = parse_pair(F, "t^(1/2)", "lex(Zloc(2))")
    assert str(gap_value(pair).gap) == "(1/2)"
    pair = parse_pair("Q((t^lex(Z,Z)))", "t^(0,1/2)", "lex(Z,Q)")
    assert str(gap_value(pair).gap) == "(0,1/2)"


def test_membership_examples():
    pair = parse_pair(F, "t^(1/2)")
    assert cut_membership(D_SET, s("0"), pair)
    assert not cut_membership(D_SET, s("1"), pair)
    assert cut_membership(D_SET, s("t"), pair)
    assert cut_membership(A_SET, s("t"), pair)
    assert not cut_membership(A_SET, s("1"), pair)
    assert not cut_membership(A_SET, s("-t"), pair)
    assert cut_membership(A_SET, s("0"), pair)
    assert cut_membership(O_SET, s("5"), pair)
    assert not cut_membership(O_SET, s("t^-1"), pair)
    with pytest.raises(CutError):
        cut_membership("B", s("1"), pair)
    with pytest.raises(CutError):
        cut_membership(A_SET, s("1 + O(t)"), pair)
    with pytest.raises(CutError):
        cut_membership(A_SET, parse_series("1", parse_field("Q((t^lex(Q)))")), pair)


def test_a_witness_for_non_members():
    pair = parse_pair(F, "t^(1/2)")
    cut = gap_value(pair)
    # b = 0 witnesses alpha - 1 <= 0 < alpha
    assert str(a_witness(pair, cut, s("1"))) == "0"
    below = parse_pair(F, "1 - t^(1/2)")
    b = a_witness(below, gap_value(below), s("1"))
    assert str(b) == "1/2" and cut_membership(D_SET, b, below)


def test_o_stabilizer_violation_pair():
    pair = parse_pair(F, "t^(1/2)")
    # t^-1 * t = 1 is not in A
    assert cut_membership(A_SET, s("t"), pair)
    assert not cut_membership(A_SET, s("t^-1") * s("t"), pair)


@pytest.mark.parametrize("alpha", ALPHAS + ["1 - t^(1/2)"])
def test_valuation_report_passes(alpha):
    report = valuation_report(parse_pair(F, alpha), rng=random.Random(0))
    assert report["samples"] == 200
    assert report["violations"] == []
    assert report["passed"] and report["O_equals_natural_ring"]
    assert report["A_rule"] == "v(y) > gap"


def test_valuation_report_properness_samples():
    pair = parse_pair(F, "t^(1/2)")
    report = valuation_report(pair, samples=[s("t"), s("t^2"), s("t + t^2"), s("1"), s("t^-1"), s("0")])
    assert report["passed"]
    assert report["A_members"] == 3


def test_valuation_report_rank_two():
    pair = parse_pair("Q((t^lex(Z,Z)))", "t^(0,1/2)", "lex(Z,Q)")
    report = valuation_report(pair, rng=random.Random(1))
    assert report["passed"]


def test_density_examples():
    pair = parse_pair(F, "t^(1/2)")
    report = density_check(pair, [s("t"), s("1")])
    assert [r["status"] for r in report["results"]] == [GAP_WITNESS, DENSE_EVIDENCE]
    assert report["results"][1]["b"] == "0"
    assert report["verdict"] == GAP_WITNESS
    assert report["violations"] == []

    report = density_check(parse_pair(F, "1 + t^(3/2)"), [s("t^2")])
    assert report["results"][0]["status"] == GAP_WITNESS
    with pytest.raises(CutError):
        density_check(pair, [s("-t")])


@pytest.mark.parametrize("alpha", ALPHAS)
def test_density_witness_iff_past_gap(alpha):
    pair = parse_pair(F, alpha)
    cut = gap_value(pair)
    eps_list = [QT.monomial(e, Fraction(1, 3)) for e in exponent_grid(QT.group)]
    report = density_check(pair, eps_list)
    assert report["violations"] == []
    for e, result in zip(exponent_grid(QT.group), report["results"]):
        past = cut.gap < pair.embed_exponent(e)
        assert (result["status"] == GAP_WITNESS) is past


def test_sample_elements_size():
    samples = sample_elements(QT, random.Random(2))
    assert len(samples) == 200
    assert len(exponent_grid(QT.group)) == 7


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
