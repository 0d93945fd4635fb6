"""Valued-field descriptors for K = k((t^Gamma)).

Nothing here computes in K: a descriptor is the coefficient field's closure
flags plus the value group, and every verdict is read off a rule table.
"""
import logging
import re
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, List, Optional

from sympy import isprime, nextprime, primefactors, primerange

from errors import ValuationError
from oag import (INFINITE, INT, INT_LOC, OMEGA_INT, QUAD, RAT, Component, ConvexSubgroup, GroupDescriptor,
                 convex_chain, is_nonsingular, mod_p_index, parse_group)

logger = logging.getLogger(__name__)

PRIME_BOUND = 13
CHAIN_LIMIT = 8


@dataclass(frozen=True)
class FieldFlags:
    alg_closed: bool = False
    real_closed: bool = False
    euclidean: bool = False
    p_closed: FrozenSet[int] = frozenset()
    char: int = 0
    residue_hens_free: bool = True
    dp_minimal: bool = False
    odd_p_closed: bool = False

    def __post_init__(self):
        if self.alg_closed and self.real_closed:
            raise ValuationError("a field cannot be both algebraically closed and real closed")
        if self.real_closed and not self.euclidean:
            raise ValuationError("real closed fields are euclidean")
        if self.char and (self.real_closed or self.euclidean):
            raise ValuationError(f"characteristic {self.char} fields are not orderable")
        bad = [p for p in self.p_closed if not isprime(p)]
        if bad:
            raise ValuationError(f"p_closed lists non-primes {bad}")

    def is_p_closed(self, p: int) -> bool:
        return (self.alg_closed or ((self.real_closed or self.odd_p_closed) and p % 2 == 1)
                or p in self.p_closed)

    @property
    def is_dp_minimal(self) -> bool:
        return self.dp_minimal or self.alg_closed or self.real_closed

    def names(self) -> List[str]:
        out = [name for name in ("alg_closed", "real_closed", "euclidean") if getattr(self, name)]
        if self.odd_p_closed and not self.real_closed:
            out.append("odd_p_closed")
        if self.p_closed:
            out.append("p_closed(" + ",".join(map(str, sorted(self.p_closed))) + ")")
        if self.dp_minimal:
            out.append("dp_minimal")
        if not self.residue_hens_free:
            out.append("henselian_residue")
        return out


PRESETS: Dict[str, FieldFlags] = {
    "Q": FieldFlags(),
    "R": FieldFlags(real_closed=True, euclidean=True, dp_minimal=True),
    "C": FieldFlags(alg_closed=True, dp_minimal=True),
    "k": FieldFlags(),
}

FLAG_PATTERN = re.compile(r"^(alg_closed|real_closed|euclidean|dp_minimal|odd_p_closed|henselian_residue|p_closed\(([\d,\s]+)\))$")


def coefficient_flags(name: str) -> FieldFlags:
    if name in PRESETS:
        return PRESETS[name]
    m = re.match(r"^(Fp|Qp)\((\d+)\)$", name)
    if not m or not isprime(int(m.group(2))):
        raise ValuationError(f"unknown coefficient field {name!r}; use Q, R, C, k, Fp(p) or Qp(p)")
    p = int(m.group(2))
    if m.group(1) == "Fp":
        return FieldFlags(char=p, dp_minimal=True)
    return FieldFlags(residue_hens_free=False, dp_minimal=True)


def apply_flags(base: FieldFlags, flags: Iterable[str]) -> FieldFlags:
    """Add named flags (alg_closed, real_closed, euclidean, dp_minimal, odd_p_closed, henselian_residue,
    p_closed(3,5))."""
    values = dict(alg_closed=base.alg_closed, real_closed=base.real_closed, euclidean=base.euclidean,
                  p_closed=set(base.p_closed), char=base.char, residue_hens_free=base.residue_hens_free,
                  dp_minimal=base.dp_minimal, odd_p_closed=base.odd_p_closed)
    for raw in flags:
        name = raw.strip()
        if not name:
            continue
        m = FLAG_PATTERN.match(name)
        if not m:
            raise ValuationError(f"unknown flag {name!r}")
        if m.group(2):
            values["p_closed"].update(int(x) for x in m.group(2).split(",") if x.strip())
        elif name == "henselian_residue":
            values["residue_hens_free"] = False
        elif name == "real_closed":
            values["real_closed"] = values["euclidean"] = True
        else:
            values[name] = True
    values["p_closed"] = frozenset(values["p_closed"])
    return FieldFlags(**values)


@dataclass(frozen=True)
class ValuedFieldDescriptor:
    """k((t^Gamma)); group None stands for k itself."""
    coeff: str
    flags: FieldFlags
    group: Optional[GroupDescriptor]

    def __str__(self):
        return self.coeff if self.group is None else f"{self.coeff}((t^{self.group}))"

    def to_json(self) -> Dict[str, Any]:
        return {"coeff": {"kind": self.coeff, "flags": self.flags.names()},
                "group": None if self.group is None else str(self.group)}


FIELD_PATTERN = re.compile(r"^\s*(\w+(?:\(\d+\))?)\s*\(\(\s*t\s*\^\s*(.+?)\s*\)\)\s*$")


def parse_valued_field(text: str, flags: Iterable[str] = ()) -> ValuedFieldDescriptor:
    m = FIELD_PATTERN.match(text)
    if not m:
        raise ValuationError(f"field descriptor {text!r} is not of the form k((t^lex(...)))")
    coeff = m.group(1)
    return ValuedFieldDescriptor(coeff, apply_flags(coefficient_flags(coeff), flags), parse_group(m.group(2)))


def descriptor_from_json(data: Dict[str, Any]) -> ValuedFieldDescriptor:
    try:
        coeff = data["coeff"]["kind"]
        flags = data["coeff"].get("flags", [])
        group = data["group"]
    except (KeyError, TypeError) as e:
        raise ValuationError(f"descriptor JSON needs coeff.kind and group: {e}") from e
    return ValuedFieldDescriptor(coeff, apply_flags(coefficient_flags(coeff), flags),
                                 None if group is None else parse_group(group))


# -- rule table ---------------------------------------------------------------------

def _p_divisible(g: Optional[GroupDescriptor], p: int) -> bool:
    return g is None or all(c.p_divisible(p) for c in g.components)


def _zloc_primes(g: Optional[GroupDescriptor]) -> set:
    if g is None:
        return set()
    return {q for c in g.components if c.kind == INT_LOC for q in primefactors(c.param)}


def _divisible(g: Optional[GroupDescriptor]) -> bool:
    return g is None or all(c.kind == RAT for c in g.components)


def classify_parts(coeff: FieldFlags, delta: Optional[GroupDescriptor]) -> FieldFlags:
    """Closure flags of k((t^Delta)) from the flags of k and the component kinds of Delta."""
    if coeff.char:
        raise ValuationError(f"closure rules are for characteristic 0, got {coeff.char}")
    divisible = _divisible(delta)
    real_closed = coeff.real_closed and divisible
    # beyond the explicit primes and the Zloc factors every component is p-indivisible
    candidates = set(coeff.p_closed) | _zloc_primes(delta)
    closed = frozenset(p for p in candidates
                       if coeff.is_p_closed(p) and (_p_divisible(delta, p) or (coeff.real_closed and p % 2)))
    return FieldFlags(
        alg_closed=coeff.alg_closed and divisible,
        real_closed=real_closed,
        euclidean=coeff.euclidean and _p_divisible(delta, 2),
        p_closed=closed,
        odd_p_closed=coeff.real_closed or (coeff.odd_p_closed and divisible),
        residue_hens_free=coeff.residue_hens_free,
        dp_minimal=coeff.is_dp_minimal and (delta is None or is_nonsingular(delta)[0]),
    )


def classify_field(K: ValuedFieldDescriptor) -> FieldFlags:
    return classify_parts(K.flags, K.group)


# -- coarsenings ----------------------------------------------------------------------

@dataclass(frozen=True)
class ValuationDescriptor:
    subgroup: ConvexSubgroup
    value_group: Optional[GroupDescriptor]
    residue_field: ValuedFieldDescriptor
    henselian: bool = True

    @property
    def tail_index(self) -> int:
        return self.subgroup.tail_index

    @property
    def trivial(self) -> bool:
        return self.value_group is None

    def residue_flags(self) -> FieldFlags:
        return classify_parts(self.residue_field.flags, self.residue_field.group)

    def to_json(self) -> Dict[str, Any]:
        return {
            "tail_index": self.tail_index,
            "label": self.subgroup.label,
            "value_group": "0" if self.value_group is None else str(self.value_group),
            "residue_field": str(self.residue_field),
            "residue_flags": self.residue_flags().names(),
            "henselian": self.henselian,
        }


@dataclass
class CoarseningChain:
    field: ValuedFieldDescriptor
    valuations: List[ValuationDescriptor] = field(default_factory=list)
    truncated: bool = False

    def __iter__(self):
        return iter(self.valuations)

    def __len__(self):
        return len(self.valuations)

    def __getitem__(self, i):
        return self.valuations[i]

    def to_json(self) -> Dict[str, Any]:
        return {"field": str(self.field), "chain": [v.to_json() for v in self.valuations],
                "truncated": self.truncated}


def _coarsening(K: ValuedFieldDescriptor, h: ConvexSubgroup) -> ValuationDescriptor:
    g = K.group
    k = h.tail_index
    if h.omega_start:
        value_group = GroupDescriptor(g.components[:k] + (Component(INT),) * h.omega_start)
        residue_group = GroupDescriptor((Component(OMEGA_INT),))
    else:
        value_group = g.sub_descriptor(0, k)
        residue_group = g.sub_descriptor(k, g.rank)
    return ValuationDescriptor(h, value_group, ValuedFieldDescriptor(K.coeff, K.flags, residue_group))


def coarsening_chain(K: ValuedFieldDescriptor) -> CoarseningChain:
    """One valuation per convex subgroup, coarsest (trivial) first."""
    chain = convex_chain(K.group, depth=CHAIN_LIMIT)
    truncated = K.group.has_omega
    if truncated:
        chain = chain[:CHAIN_LIMIT]
        logger.warning(f"⚠️ {K.group} has an infinite chain; keeping the first {CHAIN_LIMIT} coarsenings")
    return CoarseningChain(K, [_coarsening(K, h) for h in chain], truncated)


def full_valuation(K: ValuedFieldDescriptor) -> ValuationDescriptor:
    return _coarsening(K, ConvexSubgroup(K.group, K.group.rank))


def _require_chain_selection(K: ValuedFieldDescriptor):
    if not K.flags.residue_hens_free:
        raise ValuationError(f"{K.coeff} carries its own henselian valuation; selection along the natural "
                             f"chain would miss henselian valuations not comparable to it")


def _select(K: ValuedFieldDescriptor, good) -> ValuationDescriptor:
    """Coarsest nontrivial chain member whose residue field is good, else the finest."""
    for v in coarsening_chain(K):
        if not v.trivial and good(v.residue_flags()):
            return v
    return full_valuation(K)


def canonical_henselian(K: ValuedFieldDescriptor) -> ValuationDescriptor:
    _require_chain_selection(K)
    if classify_field(K).alg_closed:
        raise ValuationError(f"{K} is separably closed; the canonical henselian valuation is undefined")
    v = _select(K, lambda flags: flags.alg_closed)
    logger.info(f"✅ Canonical henselian valuation of {K}: {v.subgroup.label}")
    return v


def canonical_p_henselian(K: ValuedFieldDescriptor, p: int) -> ValuationDescriptor:
    if not isprime(p):
        raise ValuationError(f"{p} is not prime")
    _require_chain_selection(K)
    flags = classify_field(K)
    if flags.is_p_closed(p):
        raise ValuationError(f"{K} is {p}-closed; the canonical {p}-henselian valuation is undefined")
    if p == 2 and flags.euclidean:
        raise ValuationError(f"{K} is euclidean; the canonical 2-henselian valuation needs a degree-4 extension")
    return _select(K, lambda fl: fl.is_p_closed(p))


# -- Galois group shape -----------------------------------------------------------------

@dataclass(frozen=True)
class GaloisShape:
    group: GroupDescriptor
    r_p: Dict[int, Any]
    generic: Any
    descriptor: str

    def to_json(self) -> Dict[str, Any]:
        return {"group": str(self.group), "r_p": {str(p): r for p, r in self.r_p.items()},
                "generic_r_p": self.generic, "descriptor": self.descriptor}


def _generic_rank(g: GroupDescriptor):
    """r_p for primes outside the bound that divide no Zloc parameter."""
    total = 0
    for c in g.components:
        if c.kind == OMEGA_INT:
            return INFINITE
        total += {INT: 1, INT_LOC: 1, RAT: 0, QUAD: 2}[c.kind]
    return total


def _power(base: str, r) -> str:
    if r == INFINITE:
        return f"{base}^ω"
    return base if r == 1 else f"{base}^{r}"


def _render(exceptions: Dict[int, Any], generic) -> str:
    factors = [_power(f"ℤ_{p}", r) for p, r in sorted(exceptions.items()) if r != 0]
    if generic != 0:
        if exceptions:
            skip = ",".join(map(str, sorted(exceptions)))
            factors.append(_power(f"∏_{{p≠{skip}}} ℤ_p", generic))
        else:
            factors.append(_power("∏_p ℤ_p", generic))
    if not factors:
        return "ℤ/2ℤ"
    return f"({' × '.join(factors)}) ⋊ ℤ/2ℤ"


def galois_descriptor(g: GroupDescriptor, prime_bound: int = PRIME_BOUND) -> GaloisShape:
    generic = _generic_rank(g)
    r_p = {p: mod_p_index(g, p)[1] for p in primerange(2, prime_bound + 1)}
    large = sorted(q for q in _zloc_primes(g) if q > prime_bound)
    exceptions = {p: r for p, r in r_p.items() if r != generic}
    for q in large:
        exceptions[q] = mod_p_index(g, q)[1]
    return GaloisShape(g, r_p, generic, _render(exceptions, generic))


# -- dp-minimality and the trichotomy ------------------------------------------------------

def dp_minimality_verdict(K: ValuedFieldDescriptor) -> Dict[str, Any]:
    """Henselian, equicharacteristic 0: dp-minimal iff the residue field and the value group are."""
    if K.flags.char:
        raise ValuationError("the transfer rule needs residue characteristic 0")
    nonsingular, witness = is_nonsingular(K.group)
    residue_ok = K.flags.is_dp_minimal
    ordered = K.flags.real_closed
    if ordered:
        reason = "real closed residue field: dp-minimal iff the value group is non-singular"
    elif not residue_ok:
        reason = f"residue field {K.coeff} is not flagged dp-minimal"
    elif not nonsingular:
        reason = f"value group is singular (|Γ/{witness}Γ| infinite)"
    else:
        reason = "residue field and value group are both dp-minimal"
    return {
        "field": str(K),
        "residue_dp_minimal": residue_ok,
        "value_group_nonsingular": nonsingular,
        "witness_prime": witness,
        "ordered_case": ordered,
        "dp_minimal": residue_ok and nonsingular,
        "reason": reason,
    }


def trichotomy(K: ValuedFieldDescriptor, prime_bound: int = PRIME_BOUND) -> Dict[str, Any]:
    """Algebraically closed, real closed, or carrying a definable henselian valuation."""
    flags = classify_field(K)
    if flags.alg_closed:
        return {"field": str(K), "kind": "algebraically_closed"}
    if flags.real_closed:
        return {"field": str(K), "kind": "real_closed"}
    out: Dict[str, Any] = {"field": str(K), "kind": "henselian",
                           "canonical": canonical_henselian(K).to_json()}
    # past every explicit prime and Zloc factor at most one more prime needs a look
    limit = max({prime_bound, *K.flags.p_closed, *_zloc_primes(K.group)})
    for p in primerange(2, nextprime(limit) + 1):
        try:
            out["canonical_p"] = {"p": p, "valuation": canonical_p_henselian(K, p).to_json()}
            break
        except ValuationError as e:
            logger.debug(f"🔍 p = {p} skipped: {e}")
    return out
