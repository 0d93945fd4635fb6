#!/usr/bin/env python3
"""Tests for the formula language: parsing, printing, evaluation, QE and the one-variable normal form"""

import sys
import json
import random
from fractions import Fraction
from itertools import product
from pathlib import Path
sys.path.append('.')

import pytest
from hypothesis import given, settings, strategies as st

from errors import FormulaError, ResourceLimitError, UnsupportedError, ValkitError
from oag import parse_group, sample_element
from oag_logic import (And, Cong, Exists, Forall, InH, Not, Or, QuotientAtom, Rel, Term, decide,
                       evaluate, evaluate_quotient_atom, format_formula, free_variables, normal_form_one_var,
                       parse_formula, qe, rewrite_quotient_atom, substitute)

Z1 = parse_group("lex(Z)")
ZZ = parse_group("lex(Z,Z)")


def var(name, g, k=1):
    return Term.variable(name, g, k)


# -- parsing and printing ------------------------------------------------------

def test_parse_examples():
    assert parse_formula("exists x. x+x = y", Z1) == Exists("x", Rel("=", var("x", Z1, 2), var("y", Z1)))
    assert parse_formula("cong(y,2,0) /\\ y >= 0", Z1) == And((
        Cong(var("y", Z1), 2, Z1.zero()), Rel("<=", Term.zero(Z1), var("y", Z1))))
    assert parse_formula("in_H(x - c, 1)", ZZ) == InH(Term.build({"x": 1, "c": -1}, ZZ.zero()), 1)


def test_parse_normalizes_relations():
    f = parse_formula("x > y \\/ x != (1,2)", ZZ)
    assert f == Or((Rel("<", var("y", ZZ), var("x", ZZ)),
                    Not(Rel("=", var("x", ZZ), Term.constant(ZZ.element([1, 2]))))))


@pytest.mark.parametrize("text", [
    "exists x. 1/2*x = y",       # non-integer coefficient
    "in_H(x, 5)",                # unknown subgroup index
    "x <",                       # syntax
    "x = 3",                     # bare number in a rank-2 group
    "exists x. exists x. x = 0",
    "x = 0 /\\ exists x. x = 0",  # quantifier inside a connective needs parentheses
    "cong(x,0,(0,0))",
])
def test_parse_rejects(text):
    with pytest.raises(ValkitError):
        parse_formula(text, ZZ)


def test_variable_free_and_bound_rejected():
    with pytest.raises(FormulaError):
        parse_formula("x = 0 /\\ (exists x. x < 0)", Z1)


def test_printer_output():
    f = parse_formula("cong(y,2,0) /\\ ~(x < y \\/ 2*x - y + 3 <= 0)", Z1)
    assert format_formula(f) == "cong(y,2,0) /\\ ~(x < y \\/ 2*x - y + 3 <= 0)"
    g = parse_formula("exists x. in_H(x - (1,-2), 1)", ZZ)
    assert format_formula(g) == "exists x. in_H(x + (-1,2),1)"


coords = st.integers(min_value=-3, max_value=3)
consts = st.tuples(coords, coords).map(lambda t: ZZ.element(list(t)))
terms = st.builds(lambda a, b, c: Term.build({"x": a, "y": b}, c), coords, coords, consts)
atoms = st.one_of(
    st.builds(Rel, st.sampled_from(["<", "<=", "="]), terms, terms),
    st.builds(Cong, terms, st.integers(min_value=1, max_value=4), consts),
    st.builds(InH, terms, st.integers(min_value=0, max_value=2)),
)
qf_formulas = st.recursive(atoms, lambda inner: st.one_of(
    st.builds(Not, inner),
    st.lists(inner, min_size=2, max_size=3).map(lambda ps: And(tuple(ps))),
    st.lists(inner, min_size=2, max_size=3).map(lambda ps: Or(tuple(ps))),
), max_leaves=8)
formulas = st.one_of(qf_formulas, qf_formulas.map(lambda f: Exists("x", f)),
                     qf_formulas.map(lambda f: Forall("x", f)))


@settings(max_examples=500, deadline=None)
@given(formulas)
def test_round_trip(f):
    assert parse_formula(format_formula(f), ZZ) == f


# -- evaluation ------------------------------------------------------------------

def test_evaluate_examples():
    assert evaluate(parse_formula("cong(y,2,0)", Z1), {"y": Z1.element([4])}, Z1)
    in_h = parse_formula("in_H(x,1)", ZZ)
    assert evaluate(in_h, {"x": ZZ.element([0, 5])}, ZZ)
    assert not evaluate(in_h, {"x": ZZ.element([1, 0])}, ZZ)
    zloc = parse_group("lex(Zloc(3))")
    assert evaluate(parse_formula("cong(x,3,(1))", zloc), {"x": zloc.element([Fraction(1, 3)])}, zloc)


def test_evaluate_errors():
    with pytest.raises(FormulaError):
        evaluate(parse_formula("x < y", Z1), {"x": Z1.zero()}, Z1)
    with pytest.raises(FormulaError):
        evaluate(parse_formula("exists x. x < y", Z1), {"y": Z1.zero()}, Z1)


# -- quantifier elimination --------------------------------------------------------

def test_qe_examples():
    assert format_formula(qe(parse_formula("exists x. 2*x = y", Z1), Z1)) == "cong(y,2,0)"
    q = parse_group("lex(Q)")
    assert format_formula(qe(parse_formula("exists x. y < x /\\ x < z", q), q)) == "y < z"
    assert format_formula(qe(parse_formula("exists x. y < x /\\ x < z", Z1), Z1)) == "y + 1 < z"


def test_qe_discrete_interval_extensional():
    reduced = qe(parse_formula("exists x. y < x /\\ x < z", Z1), Z1)
    for y, z in product(range(-10, 11), repeat=2):
        sigma = {"y": Z1.element([y]), "z": Z1.element([z])}
        assert evaluate(reduced, sigma, Z1) == (y + 1 < z)


def test_decide_examples():
    assert decide(parse_formula("forall y. exists x. x + x = y", Z1), Z1) is False
    q = parse_group("lex(Q)")
    assert decide(parse_formula("forall y. exists x. x + x = y", q), q) is True
    assert decide(parse_formula("exists x. 0 < x /\\ x + x <= (1,0)", ZZ), ZZ) is True
    assert decide(parse_formula("exists x. 0 < x /\\ x + x <= (0,1)", ZZ), ZZ) is False


def test_decide_needs_sentence():
    with pytest.raises(FormulaError):
        decide(parse_formula("exists x. x < y", Z1), Z1)


def test_qe_rejects_omega():
    g = parse_group("lex(Z,Zomega)")
    with pytest.raises(UnsupportedError):
        qe(parse_formula("exists x. x < y", g), g)


def test_qe_quad_budget():
    g = parse_group("lex(Quad(2))")
    with pytest.raises(UnsupportedError):
        qe(parse_formula("exists x. cong(x,40,0) /\\ y < x", g), g)


def test_qe_dnf_cap():
    with pytest.raises(ResourceLimitError):
        qe(parse_formula("exists x. x != y /\\ x != z", ZZ), ZZ, dnf_cap=2)


def test_dnf_cap_from_environment(monkeypatch):
    monkeypatch.setenv("VALKIT_DNF_CAP", "2")
    with pytest.raises(ResourceLimitError):
        qe(parse_formula("exists x. x != y /\\ x != z", ZZ), ZZ)


def _values(text):
    if text == "lex(Z)":
        return [[v] for v in range(-6, 7)]
    if text == "lex(Q)":
        return [[Fraction(v, 2)] for v in range(-6, 7)]
    if text == "lex(Zloc(2))":
        return [[Fraction(v, 2 ** e)] for v in range(-4, 5) for e in (0, 1) if e == 0 or v % 2]
    if text == "lex(Z,Z)":
        return [[a, b] for a in range(-2, 3) for b in range(-2, 3)]
    if text == "lex(Z,Q)":
        return [[a, Fraction(b, 2)] for a in range(-2, 3) for b in range(-3, 4)]
    return [[(a, b)] for a in range(-3, 4) for b in range(-2, 3)]


SOUNDNESS_CASES = [
    ("lex(Z)", "exists x. y < x /\\ x < z"),
    ("lex(Z)", "exists x. 2*x = y"),
    ("lex(Z)", "exists x. 3*x = y + 1 /\\ 0 <= x"),
    ("lex(Z)", "forall x. x < y \\/ z <= x + x"),
    ("lex(Z)", "exists x. cong(x,3,1) /\\ y <= x /\\ x <= z"),
    ("lex(Z)", "exists x. exists w. x + w = y /\\ x - w = z"),
    ("lex(Z)", "exists x. 2*x <= y /\\ z < 3*x"),
    ("lex(Q)", "exists x. y < x /\\ x < z"),
    ("lex(Q)", "exists x. 2*x = y /\\ z < x"),
    ("lex(Q)", "forall x. y < x \\/ x <= z"),
    ("lex(Zloc(2))", "exists x. cong(x + y,3,1) /\\ y < x /\\ x < z"),
    ("lex(Zloc(2))", "exists x. 3*x = y"),
    ("lex(Z,Z)", "exists x. y < x /\\ x < z"),
    ("lex(Z,Z)", "exists x. in_H(x - y, 1) /\\ z < x"),
    ("lex(Z,Z)", "exists x. x + x = y + z"),
    ("lex(Z,Z)", "forall x. ~in_H(x,1) \\/ x < y"),
    ("lex(Z,Q)", "exists x. y < x /\\ x < z /\\ in_H(x - y, 1)"),
    ("lex(Z,Q)", "exists x. 2*x = y"),
    ("lex(Quad(2))", "exists x. y < x /\\ x + x < z"),
    ("lex(Quad(2))", "exists x. cong(x,2,1) /\\ y < x"),
]


@pytest.mark.parametrize("group_text,text", SOUNDNESS_CASES)
def test_qe_soundness(group_text, text):
    g = parse_group(group_text)
    phi = parse_formula(text, g)
    reduced = qe(phi, g)
    free = sorted(free_variables(phi))
    points = list(product(_values(group_text), repeat=len(free)))
    random.Random(0).shuffle(points)
    for point in points[:200]:
        sigma = {v: g.element(c) for v, c in zip(free, point)}
        assert evaluate(reduced, sigma, g) == decide(substitute(phi, sigma), g), (text, point)


def z_term(kx, ky, c=0):
    return Term.build({"x": kx, "y": ky}, Z1.element([c]))


z_atoms = st.one_of(
    st.builds(lambda op, kx, ky, c: Rel(op, z_term(kx, ky), z_term(0, 0, c)),
              st.sampled_from(["<", "<=", "="]), st.integers(-3, 3), st.integers(-2, 2), st.integers(-6, 6)),
    st.builds(lambda kx, ky, n, r: Cong(z_term(kx, ky), n, Z1.element([r])),
              st.integers(-3, 3), st.integers(-2, 2), st.integers(2, 3), st.integers(0, 2)),
)
z_formulas = st.recursive(z_atoms, lambda inner: st.one_of(
    st.builds(Not, inner),
    st.lists(inner, min_size=2, max_size=2).map(lambda ps: And(tuple(ps))),
    st.lists(inner, min_size=2, max_size=2).map(lambda ps: Or(tuple(ps))),
), max_leaves=4)


@settings(max_examples=200, deadline=None)
@given(z_formulas)
def test_cooper_matches_enumeration(phi):
    # coefficients <= 3, constants <= 18 and moduli <= 3 keep every witness inside [-60, 60]
    reduced = qe(Exists("x", phi), Z1)
    for y in range(-6, 7):
        sigma = {"y": Z1.element([y])}
        brute = any(evaluate(phi, {**sigma, "x": Z1.element([v])}, Z1) for v in range(-60, 61))
        assert evaluate(reduced, sigma, Z1) == brute


# -- the lex(Z,Z) corpus ------------------------------------------------------------

CORPUS = json.loads(Path(__file__).with_name("qe_corpus.json").read_text())
CORPUS_GROUP = parse_group(CORPUS["group"])
BOX = [CORPUS_GROUP.element([a, b])
       for a in range(-CORPUS["box"], CORPUS["box"] + 1)
       for b in range(-CORPUS["box"], CORPUS["box"] + 1)]


def bounded_truth(f, sigma, g, values):
    """Truth with every quantifier ranging over `values` only."""
    if isinstance(f, Exists):
        return any(bounded_truth(f.body, {**sigma, f.var: v}, g, values) for v in values)
    if isinstance(f, Forall):
        return all(bounded_truth(f.body, {**sigma, f.var: v}, g, values) for v in values)
    if isinstance(f, Not):
        return not bounded_truth(f.body, sigma, g, values)
    if isinstance(f, And):
        return all(bounded_truth(p, sigma, g, values) for p in f.parts)
    if isinstance(f, Or):
        return any(bounded_truth(p, sigma, g, values) for p in f.parts)
    return evaluate(f, sigma, g)


def test_corpus_size():
    assert len(CORPUS["sentences"]) == 30


@pytest.mark.parametrize("entry", CORPUS["sentences"], ids=lambda e: e["text"])
def test_corpus_decide(entry):
    sentence = parse_formula(entry["text"], CORPUS_GROUP)
    assert decide(sentence, CORPUS_GROUP) is entry["expected"]


@pytest.mark.parametrize("entry", [e for e in CORPUS["sentences"] if e["box"]], ids=lambda e: e["text"])
def test_corpus_box_enumeration(entry):
    sentence = parse_formula(entry["text"], CORPUS_GROUP)
    assert bounded_truth(sentence, {}, CORPUS_GROUP, BOX) is entry["expected"]


# -- quotient relations ----------------------------------------------------------------

def test_rewrite_quotient_examples():
    x, y = var("x", ZZ), var("y", ZZ)
    assert rewrite_quotient_atom(QuotientAtom("=", 1, x, y), ZZ) == parse_formula("in_H(y - x, 1)", ZZ)
    assert rewrite_quotient_atom(QuotientAtom("<", 1, x, y), ZZ) == parse_formula("x < y /\\ ~in_H(y - x, 1)", ZZ)
    assert rewrite_quotient_atom(QuotientAtom("=", 1, x, y, shift=3), ZZ) == \
        parse_formula("in_H(y - x + (3,0), 1)", ZZ)


def test_rewrite_quotient_rejects_bad_index():
    with pytest.raises(FormulaError):
        rewrite_quotient_atom(QuotientAtom("=", 3, var("x", ZZ), var("y", ZZ)), ZZ)


@pytest.mark.parametrize("group_text", ["lex(Z,Z)", "lex(Z,Q)", "lex(Z,Z,Z)", "lex(Quad(2),Z)"])
def test_rewrite_quotient_matches_quotient_arithmetic(group_text):
    g = parse_group(group_text)
    rng = random.Random(11)
    x, y = var("x", g), var("y", g)
    atoms = [QuotientAtom(rel, k, x, y, shift=s)
             for rel in ("=", "<", "<=") for k in range(g.rank + 1) for s in (0, 1, -2)]
    atoms += [QuotientAtom("cong", k, x, y, shift=s, modulus=m)
              for k in range(g.rank + 1) for s in (0, 1) for m in (2, 3)]
    rewritten = [(qa, rewrite_quotient_atom(qa, g)) for qa in atoms]
    for _ in range(50):
        a = sample_element(g, rng)
        b = a + sample_element(g, rng, bound=1) if rng.random() < 0.5 else sample_element(g, rng)
        sigma = {"x": a, "y": b}
        for qa, f in rewritten:
            assert evaluate(f, sigma, g) == evaluate_quotient_atom(qa, sigma, g), (qa, a, b)


# -- one-variable normal form ------------------------------------------------------------

def test_normal_form_congruence_and_ray():
    nf = normal_form_one_var(parse_formula("cong(x,2,0) /\\ 5 <= x", Z1), Z1)
    assert [leaf.shape for leaf in nf.convex_leaves] == ["ray_up"]
    assert nf.convex_leaves[0].anchor == Z1.element([5])
    assert nf.congruence_leaves == [Cong(var("x", Z1), 2, Z1.zero())]
    for v in range(-20, 21):
        assert nf.contains(Z1.element([v])) == (v >= 5 and v % 2 == 0)


def test_normal_form_after_elimination():
    nf = normal_form_one_var(parse_formula("exists y. y + y = x /\\ 0 <= y", Z1), Z1)
    assert nf.congruence_leaves == [Cong(var("x", Z1), 2, Z1.zero())]
    for v in range(-20, 21):
        assert nf.contains(Z1.element([v])) == (v >= 0 and v % 2 == 0)


def test_normal_form_coset():
    nf = normal_form_one_var(parse_formula("in_H(x - (1,2), 1)", ZZ), ZZ)
    assert len(nf.convex_leaves) == 1
    leaf = nf.convex_leaves[0]
    assert leaf.shape == "coset" and leaf.anchor == ZZ.element([1, 2])
    assert nf.contains(ZZ.element([1, -40])) and not nf.contains(ZZ.element([2, 0]))


def test_normal_form_needs_one_variable():
    with pytest.raises(FormulaError):
        normal_form_one_var(parse_formula("x < y", Z1), Z1)


NORMAL_FORM_CASES = [
    ("lex(Z)", "exists y. y + y = x /\\ 0 <= y"),
    ("lex(Z)", "cong(x,3,1) /\\ -7 < x /\\ x <= 9 \\/ x = 12"),
    ("lex(Z,Z)", "in_H(x - (1,2), 1) \\/ (2,0) < x"),
    ("lex(Z,Z)", "exists y. y < x /\\ in_H(y - x, 1) /\\ cong(y,2,(0,1))"),
    ("lex(Z,Z)", "~in_H(x,1) /\\ x != (3,3)"),
]


def _sample_points(g):
    if g.rank == 1:
        return [g.element([v]) for v in range(-50, 50)]
    return sorted(g.element([a, b]) for a in range(-3, 4) for b in range(-7, 8))


@pytest.mark.parametrize("group_text,text", NORMAL_FORM_CASES)
def test_normal_form_leaves_are_convex_and_faithful(group_text, text):
    g = parse_group(group_text)
    f = parse_formula(text, g)
    nf = normal_form_one_var(f, g)
    points = _sample_points(g)
    for leaf in nf.convex_leaves:
        inside = [i for i, p in enumerate(points) if evaluate(leaf.formula, {"x": p}, g)]
        if inside:
            assert inside == list(range(inside[0], inside[-1] + 1)), leaf
    for p in points[::5]:
        assert nf.contains(p) == decide(substitute(f, {"x": p}), g)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
