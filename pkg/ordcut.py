"""Cuts of an ordered Hahn field F = k((t^G)) by an element alpha of its real closure.

alpha is handed over directly as a series with exponents in a wider group
G' (for example t^(1/2) over Q((t^lex(Z))) lives in Q((t^lex(Q)))).  The
first exponent of alpha outside G is the *gap*; everything about the cut is
read off it:

    D = {a in F : a < alpha}
    A = {y >= 0 : y + D inside D}   = {0} u {y > 0 : v(y) > gap}
    O = {a : |a| A inside A}        = {a : v(a) >= 0}

For y > 0 with v(y) < gap, b = trunc (or trunc - y/2 when alpha lies below
trunc) is a point of F in [alpha - y, alpha), so y is not in A.  For
v(y) > gap every b in F has v(alpha - b) <= gap < v(y), so [alpha - y, alpha)
misses F.  Both directions are spot-checked against the definitions.
"""
import itertools
import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

from sympy import primefactors

from errors import CutError
from hahn import HahnField, HahnSeries, compare, parse_field, parse_series, sample_series
from oag import INT, INT_LOC, RAT, Component, GroupDescriptor, GroupElement, Ordering, parse_group

logger = logging.getLogger(__name__)

D_SET = "D"
A_SET = "A"
O_SET = "O"
DENSE_EVIDENCE = "DENSE_EVIDENCE"
GAP_WITNESS = "GAP_WITNESS"

GRID_COEFFICIENTS = (Fraction(1), Fraction(-1), Fraction(2), Fraction(-2), Fraction(1, 2), Fraction(-1, 2))
DEFAULT_SAMPLES = 200
PAIR_LIMIT = 30


def _component_contains(outer: Component, inner: Component) -> bool:
    if outer.kind == inner.kind:
        if outer.kind == INT_LOC:
            return set(primefactors(inner.param)) <= set(primefactors(outer.param))
        return outer.param == inner.param
    if inner.kind == INT:
        return outer.kind in (INT_LOC, RAT)
    return inner.kind == INT_LOC and outer.kind == RAT


def default_extension(group: GroupDescriptor) -> GroupDescriptor:
    """Replace every Z / Zloc component by Q."""
    return GroupDescriptor(tuple(Component(RAT) if c.kind in (INT, INT_LOC) else c for c in group.components))


@dataclass(frozen=True)
class AmbientPair:
    base: HahnField
    extended: HahnField
    alpha: HahnSeries

    def __post_init__(self):
        if not self.base.coeffs.ordered:
            raise CutError(f"{self.base.coeffs} is not ordered; cuts need an ordered field")
        if self.extended.coeffs != self.base.coeffs:
            raise CutError("alpha must have the same coefficient field as F")
        g, h = self.base.group, self.extended.group
        if g.rank != h.rank or not all(_component_contains(o, i) for o, i in zip(h.components, g.components)):
            raise CutError(f"{h} does not contain {g} componentwise")
        if self.alpha.field != self.extended:
            raise CutError(f"alpha must be a series over {self.extended}")
        if not self.alpha.exact:
            raise CutError("alpha must be given exactly")
        if compare(self.alpha, self.extended.zero()) is not Ordering.GREATER:
            raise CutError(f"alpha = {self.alpha} is not positive")
        if all(self.in_base(e) for e, _ in self.alpha.terms):
            raise CutError(f"alpha = {self.alpha} lies in F; it defines no cut")

    def in_base(self, e: GroupElement) -> bool:
        return self.base.group.accepts(e.coords)

    def embed_exponent(self, e: GroupElement) -> GroupElement:
        return self.extended.group.element(e.coords)

    def restrict_exponent(self, e: GroupElement) -> GroupElement:
        return self.base.group.element(e.coords)

    def embed(self, x: HahnSeries) -> HahnSeries:
        precision = None if x.precision is None else self.embed_exponent(x.precision)
        return self.extended.series([(self.embed_exponent(e), c) for e, c in x.terms], precision)

    def to_json(self) -> Dict[str, Any]:
        return {"field": str(self.base), "extension": str(self.extended.group), "alpha": str(self.alpha)}


def parse_pair(field_text: str, alpha_text: str, extension: Optional[str] = None) -> AmbientPair:
    base = parse_field(field_text)
    ext_group = parse_group(extension) if extension else default_extension(base.group)
    extended = HahnField(base.coeffs, ext_group)
    return AmbientPair(base, extended, parse_series(alpha_text, extended))


@dataclass(frozen=True)
class CutData:
    gap: GroupElement
    trunc: HahnSeries
    excess_sign: int

    def to_json(self) -> Dict[str, Any]:
        return {"gap": str(self.gap), "trunc": str(self.trunc), "excess_sign": "+" if self.excess_sign > 0 else "-"}


def gap_value(pair: AmbientPair) -> CutData:
    prefix = []
    for e, c in pair.alpha.terms:
        if not pair.in_base(e):
            trunc = pair.base.series([(pair.restrict_exponent(x), cx) for x, cx in prefix])
            return CutData(e, trunc, pair.base.coeffs.sign(c))
        prefix.append((e, c))
    raise CutError(f"alpha = {pair.alpha} lies in F; it defines no cut")


# -- membership -------------------------------------------------------------------

def _check_element(pair: AmbientPair, x: HahnSeries):
    if x.field != pair.base:
        raise CutError(f"{x} is not an element of {pair.base}")
    if not x.exact:
        raise CutError(f"{x} is not exact; membership needs an exact element")


def _below_alpha(pair: AmbientPair, x: HahnSeries) -> bool:
    return compare(pair.embed(x), pair.alpha) is Ordering.LESS


def _is_negative(x: HahnSeries) -> bool:
    return compare(x, x.field.zero()) is Ordering.LESS


def _abs(x: HahnSeries) -> HahnSeries:
    return x.neg() if _is_negative(x) else x


def _beyond_gap(pair: AmbientPair, cut: CutData, x: HahnSeries) -> bool:
    return cut.gap < pair.embed_exponent(x.valuation())


def cut_membership(kind: str, x: HahnSeries, pair: AmbientPair, cut: Optional[CutData] = None) -> bool:
    _check_element(pair, x)
    cut = cut or gap_value(pair)
    if kind == D_SET:
        return _below_alpha(pair, x)
    if kind == A_SET:
        if x.is_exact_zero():
            return True
        return not _is_negative(x) and _beyond_gap(pair, cut, x)
    if kind == O_SET:
        return x.is_exact_zero() or not x.valuation() < pair.base.group.zero()
    raise CutError(f"unknown set {kind!r}; use D, A or O")


def a_witness(pair: AmbientPair, cut: CutData, y: HahnSeries,
              extra: Sequence[HahnSeries] = ()) -> Optional[HahnSeries]:
    """Some b in F with alpha - y <= b < alpha, searched over a candidate list."""
    candidates = [cut.trunc, cut.trunc.sub(y.scale(Fraction(1, 2))), cut.trunc.sub(y), *extra]
    floor = pair.alpha.sub(pair.embed(y))
    for b in candidates:
        eb = pair.embed(b)
        if compare(eb, pair.alpha) is Ordering.LESS and compare(eb, floor) is not Ordering.LESS:
            return b
    return None


# -- samples ------------------------------------------------------------------------

def exponent_grid(group: GroupDescriptor) -> List[GroupElement]:
    """Exponents in [-3, 3] (halves where the group allows) for rank 1; unit steps otherwise."""
    if group.rank == 1 and group.components[0].kind in (INT, INT_LOC, RAT):
        return [group.element([Fraction(k, 2)]) for k in range(-6, 7) if group.accepts([Fraction(k, 2)])]
    steps = [[c.unit(j) for j in (-1, 0, 1)] for c in group.components]
    return sorted(group.element(list(coords)) for coords in itertools.product(*steps))


def sample_elements(field: HahnField, rng: random.Random, total: int = DEFAULT_SAMPLES) -> List[HahnSeries]:
    """Monomial grid first, then random two-term series up to `total`."""
    out = [field.monomial(e, q) for e in exponent_grid(field.group) for q in GRID_COEFFICIENTS]
    while len(out) < total:
        out.append(sample_series(field, rng, n_terms=2, bound=3))
    return out


def _near_cut(pair: AmbientPair, cut: CutData, samples: Sequence[HahnSeries], limit: int = 50) -> List[HahnSeries]:
    """Elements of D close to alpha: trunc plus small perturbations."""
    out = []
    for s in [pair.base.zero(), *samples]:
        d = cut.trunc.add(s)
        if not d.is_exact_zero() and _below_alpha(pair, d):
            out.append(d)
        if len(out) >= limit:
            break
    return out


# -- density -------------------------------------------------------------------------

def density_check(pair: AmbientPair, eps_list: Sequence[HahnSeries],
                  candidates: Optional[Sequence[HahnSeries]] = None) -> Dict[str, Any]:
    """For each eps > 0: an approximant b with |alpha - b| < eps, or a proof there is none."""
    cut = gap_value(pair)
    grid = list(candidates) if candidates is not None else sample_elements(pair.base, random.Random(0), 0)
    results, violations = [], []
    for eps in eps_list:
        _check_element(pair, eps)
        if eps.is_exact_zero() or _is_negative(eps):
            raise CutError(f"eps = {eps} is not positive")
        target = pair.embed(eps)

        def close(b: HahnSeries) -> bool:
            return compare(_abs(pair.alpha.sub(pair.embed(b))), target) is Ordering.LESS

        if _beyond_gap(pair, cut, eps):
            found = [b for b in [cut.trunc] + [cut.trunc.add(g) for g in grid] if close(b)]
            if found:
                violations.append(f"{found[0]} approximates alpha within {eps} past the gap")
            results.append({"eps": str(eps), "status": GAP_WITNESS, "b": None, "candidates_checked": len(grid) + 1})
        else:
            if not close(cut.trunc):
                violations.append(f"trunc = {cut.trunc} misses alpha by at least {eps}")
            results.append({"eps": str(eps), "status": DENSE_EVIDENCE, "b": str(cut.trunc)})
    verdict = GAP_WITNESS if any(r["status"] == GAP_WITNESS for r in results) else DENSE_EVIDENCE
    logger.info(f"🔍 Density of {pair.base} at {pair.alpha}: {verdict}")
    return {"alpha": str(pair.alpha), "gap": str(cut.gap), "verdict": verdict, "results": results,
            "violations": violations}


# -- valuation report ------------------------------------------------------------------

def _stabilizes(pair: AmbientPair, cut: CutData, a: HahnSeries, a_members: Sequence[HahnSeries]) -> bool:
    scale = _abs(a)
    return all(cut_membership(A_SET, scale.mul(y), pair, cut) for y in a_members)


def valuation_report(pair: AmbientPair, samples: Optional[Sequence[HahnSeries]] = None,
                     rng: Optional[random.Random] = None) -> Dict[str, Any]:
    """Checks D, A and O against their definitions and the natural valuation on samples."""
    cut = gap_value(pair)
    rng = rng or random.Random(0)
    samples = list(samples) if samples is not None else sample_elements(pair.base, rng)
    for x in samples:
        _check_element(pair, x)
    violations: List[Dict[str, str]] = []

    def flag(check: str, detail: str):
        violations.append({"check": check, "detail": detail})

    def in_a(x):
        return cut_membership(A_SET, x, pair, cut)

    def in_o(x):
        return cut_membership(O_SET, x, pair, cut)

    nonneg = [x for x in samples if not _is_negative(x)]
    a_members = [x for x in nonneg if not x.is_exact_zero() and in_a(x)]
    d_near = _near_cut(pair, cut, samples)

    for y in nonneg:
        if in_a(y):
            for d in d_near:
                if not _below_alpha(pair, y.add(d)):
                    flag("A_necessary", f"{y} + {d} is not below alpha")
                    break
        elif a_witness(pair, cut, y, samples) is None:
            flag("A_sufficient", f"no b in [alpha - {y}, alpha) found for {y}")

    head = a_members[:PAIR_LIMIT]
    for x, y in itertools.product(head, repeat=2):
        if not in_a(x.add(y)):
            flag("A_semigroup", f"{x} + {y} left A")
    for y in head:
        for z in nonneg[:PAIR_LIMIT * 2]:
            if compare(z, y) is Ordering.LESS and not in_a(z):
                flag("A_convex", f"{z} lies between 0 and {y} but not in A")
    if not a_members:
        flag("A_nontrivial", "no nonzero sample in A")
    if all(in_a(x) for x in nonneg):
        flag("A_proper", "every nonnegative sample lies in A")

    o_members = [x for x in samples if in_o(x)]
    if not in_o(pair.base.one()):
        flag("O_ring", "1 is not in O")
    for x, y in itertools.product(o_members[:PAIR_LIMIT], repeat=2):
        if not (in_o(x.add(y)) and in_o(x.mul(y))):
            flag("O_ring", f"O not closed on ({x}, {y})")
    for x in o_members[:PAIR_LIMIT]:
        for z in samples[:PAIR_LIMIT * 2]:
            if compare(_abs(z), _abs(x)) is Ordering.LESS and not in_o(z):
                flag("O_convex", f"|{z}| <= |{x}| but {z} not in O")
    if all(in_o(x) for x in samples):
        flag("O_proper", "every sample lies in O")

    natural = True
    for x in samples:
        by_definition = x.is_exact_zero() or _stabilizes(pair, cut, x, a_members)
        by_valuation = x.is_exact_zero() or not x.valuation() < pair.base.group.zero()
        if by_definition != by_valuation:
            natural = False
            flag("O_natural", f"{x}: stabilizer says {by_definition}, valuation says {by_valuation}")

    for x in samples:
        if len(x.terms) != 1:
            continue
        unit = in_o(x) and in_o(x.invert(pair.base.group.zero()))
        if unit != x.valuation().is_zero():
            flag("units", f"{x} unit={unit} disagrees with v = {x.valuation()}")

    passed = not violations
    if passed:
        logger.info(f"✅ Cut at {pair.alpha}: A, O and the natural valuation agree on {len(samples)} samples")
    else:
        logger.warning(f"⚠️ Cut at {pair.alpha}: {len(violations)} violations")
    return {
        **pair.to_json(),
        **cut.to_json(),
        "A_rule": "v(y) > gap",
        "O_rule": "v(x) >= 0",
        "samples": len(samples),
        "A_members": len(a_members),
        "O_members": len(o_members),
        "O_equals_natural_ring": natural,
        "value_group": str(pair.base.group),
        "residue_field": str(pair.base.coeffs),
        "violations": violations,
        "passed": passed,
    }
