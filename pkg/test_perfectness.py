#!/usr/bin/env python3
"""Tests for rational functions over F_p, p-th power detection and injectivity of tau"""

import sys
import random
sys.path.append('.')

import pytest
from hypothesis import given, settings, strategies as st

from errors import PerfectnessError
from perfectness import (RationalFunction, frobenius_check, injectivity_scan, is_pth_power,
                         parse_rational_function, random_rational_function, tau_eval)


def rf(text, p=2):
    return parse_rational_function(text, p)


def test_parse_and_format():
    assert str(rf("(s^2+1)/(s^4)")) == "(s^2 + 1)/s^4"
    assert str(rf("s^2 + 3*s", 3)) == "s^2"
    assert str(rf("(s^2 - 1)/(s - 1)", 5)) == "s + 1"
    assert str(rf("2*s/(2*s^2 + 2)", 3)) == "s/(s^2 + 1)"
    with pytest.raises(PerfectnessError):
        rf("1/(2*s)", 2)
    with pytest.raises(PerfectnessError):
        rf("s + u")
    with pytest.raises(PerfectnessError):
        rf("s", 7)


@pytest.mark.parametrize("text,expected,root", [
    ("s", False, None),
    ("s^2 + s", False, None),
    ("s^2", True, "s"),
    ("(s^2+1)/(s^4)", True, "(s + 1)/s^2"),
    ("0", True, "0"),
    ("1", True, "1"),
])
def test_is_pth_power_char_two(text, expected, root):
    ok, witness = is_pth_power(rf(text), 2)
    assert ok is expected
    assert (None if witness is None else str(witness)) == root


def test_is_pth_power_char_three():
    ok, witness = is_pth_power(rf("s^3 + 2", 3), 3)
    assert ok and str(witness) == "s + 2"
    assert not is_pth_power(rf("s^3 + s", 3), 3)[0]


def test_is_pth_power_characteristic_mismatch():
    with pytest.raises(PerfectnessError):
        is_pth_power(rf("s"), 3)


@pytest.mark.parametrize("x,y,z,expected", [
    ("1", "1", "s", "s + 1"),
    ("s", "1", "s", "s^2 + s"),
    ("0", "1/s", "s", "1/s"),
])
def test_tau_examples(x, y, z, expected):
    assert str(tau_eval(rf(x), rf(y), rf(z), 2)) == expected


def test_tau_collapses_for_pth_power():
    z = rf("s^2")
    assert tau_eval(rf("s"), rf("0"), z, 2) == tau_eval(rf("0"), rf("1"), z, 2)


def test_scan_no_collisions_for_s():
    report = injectivity_scan(rf("s"), 2, 10000, random.Random(0))
    assert report["collisions"] == []
    assert not report["z_is_pth_power"]
    assert report["samples"] == 10000


@pytest.mark.parametrize("p", [3, 5])
def test_scan_no_collisions_other_characteristics(p):
    assert injectivity_scan(rf("s", p), p, 1000, random.Random(p))["collisions"] == []


def test_scan_constructed_collision_s_squared():
    report = injectivity_scan(rf("s^2"), 2, 200, random.Random(1))
    assert report["z_is_pth_power"] and report["root"] == "s"
    assert report["collisions"][0]["inputs"] == [["s", "0"], ["0", "1"]]
    assert report["collisions"][0]["value"] == "s^2"


def test_scan_constructed_collision_perfect_case():
    report = injectivity_scan(rf("1"), 2, 200, random.Random(1))
    assert report["collisions"][0]["inputs"] == [["1", "0"], ["0", "1"]]
    assert report["collisions"][0]["value"] == "1"


def test_frobenius_check():
    for p in (2, 3, 5):
        assert frobenius_check(p, 200, random.Random(p))["passed"]


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32), st.sampled_from([2, 3, 5]))
def test_pth_power_root_recovered(seed, p):
    f = random_rational_function(random.Random(seed), p)
    ok, root = is_pth_power(f ** p, p)
    assert ok and root == f


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_field_identities(seed):
    rng = random.Random(seed)
    f, g = random_rational_function(rng, 2), random_rational_function(rng, 2)
    assert f * g == g * f
    assert (f + g) - g == f
    if not g.is_zero():
        assert (f / g) * g == f


def test_characteristic_mismatch_in_arithmetic():
    with pytest.raises(PerfectnessError):
        rf("s", 2) + rf("s", 3)
    with pytest.raises(PerfectnessError):
        rf("s") / RationalFunction.constant(0, 2)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
