#!/usr/bin/env python3
"""Tests for coarsening chains, closure classification, canonical valuations and Galois shapes"""

import sys
sys.path.append('.')

import pytest

from errors import ValuationError
from oag import INFINITE, mod_p_index, parse_group
from valstruct import (FieldFlags, apply_flags, canonical_henselian, canonical_p_henselian, classify_field,
                       classify_parts, coarsening_chain, descriptor_from_json, dp_minimality_verdict,
                       galois_descriptor, parse_valued_field, trichotomy)

CORPUS_GROUPS = ["lex(Z)", "lex(Q)", "lex(Z,Z)", "lex(Z,Q)", "lex(Zloc(2),Z)", "lex(Z,Zloc(3))",
                 "lex(Quad(2))", "lex(Q,Z,Z)", "lex(Zloc(6),Quad(3),Q)"]


def field(text, *flags):
    return parse_valued_field(text, flags)


def test_parse_and_json():
    K = field("R((t^lex(Z,Q)))")
    assert str(K) == "R((t^lex(Z,Q)))"
    data = K.to_json()
    assert data["group"] == "lex(Z,Q)"
    assert "real_closed" in data["coeff"]["flags"]
    assert descriptor_from_json(data) == K
    with pytest.raises(ValuationError):
        parse_valued_field("R(t)")
    with pytest.raises(ValuationError):
        field("k((t^lex(Z)))", "quasi_finite")
    with pytest.raises(ValuationError):
        FieldFlags(alg_closed=True, real_closed=True, euclidean=True)


def test_chain_rank_two():
    chain = coarsening_chain(field("Q((t^lex(Z,Z)))"))
    assert len(chain) == 3 and not chain.truncated
    assert chain[0].trivial and str(chain[0].residue_field) == "Q((t^lex(Z,Z)))"
    assert str(chain[1].value_group) == "lex(Z)"
    assert str(chain[1].residue_field) == "Q((t^lex(Z)))"
    assert str(chain[2].value_group) == "lex(Z,Z)"
    assert str(chain[2].residue_field) == "Q"
    assert all(v.henselian for v in chain)


def test_chain_rank_one():
    chain = coarsening_chain(field("Q((t^lex(Z)))"))
    assert [v.trivial for v in chain] == [True, False]
    assert str(chain[1].residue_field) == "Q"


def test_chain_middle_coarsening():
    chain = coarsening_chain(field("Q((t^lex(Z,Q)))"))
    assert str(chain[1].value_group) == "lex(Z)"
    assert str(chain[1].residue_field) == "Q((t^lex(Q)))"


def test_chain_omega_truncated():
    chain = coarsening_chain(field("Q((t^lex(Z,Zomega)))"))
    assert chain.truncated and len(chain) == 8
    assert chain[2].subgroup.label == "Δ_1^(1)"
    assert str(chain[2].value_group) == "lex(Z,Z)"
    assert str(chain[2].residue_field) == "Q((t^lex(Zomega)))"


@pytest.mark.parametrize("text", CORPUS_GROUPS)
def test_rank_additivity(text):
    K = field(f"Q((t^{text}))")
    n = K.group.rank
    for v in coarsening_chain(K):
        value_rank = 0 if v.value_group is None else v.value_group.rank
        residue_rank = 0 if v.residue_field.group is None else v.residue_field.group.rank
        assert value_rank == v.tail_index
        assert value_rank + residue_rank == n


def test_classify_examples():
    assert classify_field(field("R((t^lex(Q)))")).real_closed
    flags = classify_field(field("R((t^lex(Z)))"))
    assert not flags.real_closed and not flags.euclidean
    flags = classify_field(field("Q((t^lex(Q)))"))
    assert not (flags.alg_closed or flags.real_closed or flags.euclidean or flags.p_closed)
    assert classify_field(field("C((t^lex(Q,Q)))")).alg_closed
    with pytest.raises(ValuationError):
        classify_field(field("Fp(5)((t^lex(Z)))"))


def test_classify_p_closed():
    flags = classify_field(field("k((t^lex(Zloc(3))))", "p_closed(3)"))
    assert flags.is_p_closed(3) and not flags.is_p_closed(2)
    assert not classify_field(field("k((t^lex(Z)))", "p_closed(3)")).is_p_closed(3)
    # real closed residue: odd p-closedness survives a non-divisible value group
    flags = classify_field(field("R((t^lex(Z)))"))
    assert flags.is_p_closed(3) and not flags.is_p_closed(2)
    assert flags.is_p_closed(101) and "odd_p_closed" in flags.names()


@pytest.mark.parametrize("p", [17, 19, 23])
def test_classify_p_closed_large_primes(p):
    flags = classify_field(field(f"k((t^lex(Zloc({p}))))", f"p_closed({p})"))
    assert flags.is_p_closed(p) and p in flags.p_closed
    assert not classify_field(field("k((t^lex(Z)))", f"p_closed({p})")).is_p_closed(p)
    assert classify_field(field(f"C((t^lex(Zloc({3 * p}))))")).is_p_closed(p)
    assert not classify_field(field(f"C((t^lex(Zloc({3 * p}))))")).is_p_closed(5)
    assert classify_field(field("R((t^lex(Z)))")).is_p_closed(p)


def test_odd_p_closed_flag():
    flags = apply_flags(FieldFlags(), ["odd_p_closed"])
    assert flags.is_p_closed(31) and not flags.is_p_closed(2)
    assert classify_field(field("k((t^lex(Q)))", "odd_p_closed")).is_p_closed(31)
    flags = classify_field(field("k((t^lex(Zloc(31))))", "odd_p_closed"))
    assert flags.is_p_closed(31) and not flags.is_p_closed(37)


@pytest.mark.parametrize("text", CORPUS_GROUPS)
def test_residue_closure_depends_on_tail_only(text):
    K = field(f"C((t^{text}))")
    for v in coarsening_chain(K):
        tail = v.residue_field.group
        expected = tail is None or all(c.kind == "Q" for c in tail.components)
        assert v.residue_flags().alg_closed is expected
        assert classify_parts(K.flags, tail).alg_closed is expected


def test_canonical_henselian_examples():
    v = canonical_henselian(field("C((t^lex(Z,Q)))"))
    assert v.tail_index == 1 and str(v.value_group) == "lex(Z)"
    assert str(v.residue_field) == "C((t^lex(Q)))"

    v = canonical_henselian(field("Q((t^lex(Z,Z)))"))
    assert v.tail_index == 2 and str(v.residue_field) == "Q"

    with pytest.raises(ValuationError):
        canonical_henselian(field("C((t^lex(Q)))"))
    with pytest.raises(ValuationError):
        canonical_henselian(field("Qp(5)((t^lex(Z)))"))


@pytest.mark.parametrize("text", CORPUS_GROUPS)
def test_canonical_is_finest_iff_no_residue_alg_closed(text):
    for coeff in ("Q", "C"):
        K = field(f"{coeff}((t^{text}))")
        if classify_field(K).alg_closed:
            continue
        chain = coarsening_chain(K)
        any_closed = any(v.residue_flags().alg_closed for v in chain if 0 < v.tail_index < K.group.rank)
        assert (canonical_henselian(K).tail_index == K.group.rank) is (not any_closed)


def test_canonical_p_henselian_examples():
    v = canonical_p_henselian(field("k((t^lex(Z,Zloc(3))))", "p_closed(3)"), 3)
    assert v.tail_index == 1 and str(v.residue_field) == "k((t^lex(Zloc(3))))"

    assert canonical_p_henselian(field("Q((t^lex(Z)))"), 3).tail_index == 1

    with pytest.raises(ValuationError):
        canonical_p_henselian(field("k((t^lex(Zloc(3))))", "p_closed(3)"), 3)
    with pytest.raises(ValuationError):
        canonical_p_henselian(field("Q((t^lex(Z)))"), 4)


@pytest.mark.parametrize("p", [17, 19])
def test_canonical_p_henselian_large_primes(p):
    v = canonical_p_henselian(field(f"k((t^lex(Z,Zloc({p}))))", f"p_closed({p})"), p)
    assert v.tail_index == 1 and str(v.residue_field) == f"k((t^lex(Zloc({p}))))"
    with pytest.raises(ValuationError):
        canonical_p_henselian(field(f"k((t^lex(Zloc({p}))))", f"p_closed({p})"), p)


def test_euclidean_guard():
    # k((t^Z)) is not euclidean even when k is: t has no square root up to sign
    v = canonical_p_henselian(field("k((t^lex(Z)))", "euclidean"), 2)
    assert v.tail_index == 1
    with pytest.raises(ValuationError):
        canonical_p_henselian(field("k((t^lex(Q)))", "euclidean"), 2)
    with pytest.raises(ValuationError):
        canonical_p_henselian(field("R((t^lex(Q)))"), 2)


def test_galois_examples():
    shape = galois_descriptor(parse_group("lex(Z)"))
    assert set(shape.r_p.values()) == {1} and shape.generic == 1
    assert shape.descriptor == "(∏_p ℤ_p) ⋊ ℤ/2ℤ"

    shape = galois_descriptor(parse_group("lex(Q)"))
    assert set(shape.r_p.values()) == {0}
    assert shape.descriptor == "ℤ/2ℤ"

    shape = galois_descriptor(parse_group("lex(Zloc(2),Z)"))
    assert shape.r_p[2] == 1 and shape.r_p[3] == 2 and shape.r_p[5] == 2 and shape.generic == 2
    assert shape.descriptor == "(ℤ_2 × ∏_{p≠2} ℤ_p^2) ⋊ ℤ/2ℤ"


def test_galois_large_prime_exception():
    shape = galois_descriptor(parse_group("lex(Zloc(17))"))
    assert shape.descriptor == "(∏_{p≠17} ℤ_p) ⋊ ℤ/2ℤ"


@pytest.mark.parametrize("q", [17, 19])
def test_galois_generic_rank_matches_large_primes(q):
    g = parse_group(f"lex(Zloc({q}),Z)")
    shape = galois_descriptor(g)
    assert shape.generic == 2
    assert set(shape.r_p.values()) == {2}
    assert mod_p_index(g, q)[1] == 1
    for p in (23, 29, 101):
        assert mod_p_index(g, p)[1] == shape.generic
    assert shape.descriptor == f"(ℤ_{q} × ∏_{{p≠{q}}} ℤ_p^2) ⋊ ℤ/2ℤ"


def test_galois_omega():
    shape = galois_descriptor(parse_group("lex(Zomega)"))
    assert shape.generic == INFINITE
    assert shape.descriptor == "(∏_p ℤ_p^ω) ⋊ ℤ/2ℤ"


@pytest.mark.parametrize("text", CORPUS_GROUPS + ["lex(Z,Zomega)"])
def test_galois_matches_mod_p_index(text):
    g = parse_group(text)
    shape = galois_descriptor(g)
    for p, r in shape.r_p.items():
        assert r == mod_p_index(g, p)[1]


def test_dp_minimality_verdict():
    report = dp_minimality_verdict(field("R((t^lex(Z,Q)))"))
    assert report["dp_minimal"] and report["ordered_case"]
    report = dp_minimality_verdict(field("R((t^lex(Zomega)))"))
    assert not report["dp_minimal"] and report["witness_prime"] == 2
    report = dp_minimality_verdict(field("Q((t^lex(Z)))"))
    assert not report["dp_minimal"] and not report["residue_dp_minimal"]
    assert dp_minimality_verdict(field("k((t^lex(Z)))", "dp_minimal"))["dp_minimal"]
    with pytest.raises(ValuationError):
        dp_minimality_verdict(field("Fp(3)((t^lex(Z)))"))


def test_trichotomy():
    assert trichotomy(field("C((t^lex(Q)))"))["kind"] == "algebraically_closed"
    assert trichotomy(field("R((t^lex(Q,Q)))"))["kind"] == "real_closed"
    report = trichotomy(field("C((t^lex(Z,Q)))"))
    assert report["kind"] == "henselian"
    assert report["canonical"]["tail_index"] == 1
    assert report["canonical_p"]["p"] == 2


def test_trichotomy_searches_past_explicit_primes():
    # 30030 = 2*3*5*7*11*13, so K is p-closed for every prime through 13
    report = trichotomy(field("k((t^lex(Zloc(30030))))", "p_closed(2,3,5,7,11,13)"))
    assert report["kind"] == "henselian"
    assert report["canonical_p"]["p"] == 17


def test_apply_flags_accumulates():
    flags = apply_flags(FieldFlags(), ["p_closed(3,5)", "henselian_residue", "real_closed"])
    assert flags.p_closed == frozenset({3, 5})
    assert not flags.residue_hens_free
    assert flags.euclidean


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
