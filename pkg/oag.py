"""Ordered abelian groups as finite lexicographic products.

A group is written ``lex(C1,...,Cn)`` where each component is one of

    Z          the integers
    Zloc(m)    Z[1/m], m >= 2
    Q          the rationals
    Quad(d)    Z + sqrt(d)*Z inside the reals, d >= 2 not a square
    Zomega     finitely supported integer sequences, ordered by least index

Elements compare lexicographically, first component most significant.  The
convex subgroups of such a product are the lex tails Delta_k (first k
coordinates zero), plus an omega-chain inside a trailing Zomega component.
"""
import functools
import itertools
import logging
import math
import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

from lark import Lark, Transformer
from lark.exceptions import LarkError, VisitError
from sympy import isprime, primefactors, primerange

from errors import GroupError, ValkitError

logger = logging.getLogger(__name__)

INT = "Z"
INT_LOC = "Zloc"
RAT = "Q"
QUAD = "Quad"
OMEGA_INT = "Zomega"

INFINITE = "INFINITE"

DEFAULT_OMEGA_DEPTH = 8


class Ordering(Enum):
    LESS = -1
    EQUAL = 0
    GREATER = 1

    @classmethod
    def from_sign(cls, s: int) -> "Ordering":
        return cls(0 if s == 0 else (1 if s > 0 else -1))


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def _coprime_part(n: int, m: int) -> int:
    """Strip from n every prime that divides m."""
    for q in primefactors(m):
        while n % q == 0:
            n //= q
    return n


class SurdLiteral(NamedTuple):
    rational: Fraction
    coefficient: int
    radicand: int


class OmegaLiteral(NamedTuple):
    entries: Tuple[Tuple[int, Fraction], ...]


@dataclass(frozen=True)
class Component:
    kind: str
    param: Optional[int] = None

    def __post_init__(self):
        if self.kind not in (INT, INT_LOC, RAT, QUAD, OMEGA_INT):
            raise GroupError(f"unknown component kind {self.kind!r}")
        if self.kind == INT_LOC and (self.param is None or self.param < 2):
            raise GroupError("Zloc(m) needs m >= 2")
        if self.kind == QUAD:
            if self.param is None or self.param < 2:
                raise GroupError("Quad(d) needs d >= 2")
            if math.isqrt(self.param) ** 2 == self.param:
                raise GroupError(f"Quad({self.param}): d must not be a perfect square")

    def __str__(self):
        if self.param is None:
            return self.kind
        return f"{self.kind}({self.param})"

    @property
    def archimedean(self) -> bool:
        return self.kind != OMEGA_INT

    @property
    def discrete(self) -> bool:
        return self.kind == INT

    def zero(self):
        if self.kind == QUAD:
            return (0, 0)
        if self.kind == OMEGA_INT:
            return ()
        return Fraction(0)

    def coerce(self, value):
        """Canonical coordinate for this component, or GroupError."""
        if self.kind in (INT, INT_LOC, RAT):
            if isinstance(value, (SurdLiteral, OmegaLiteral, tuple, dict)):
                raise GroupError(f"coordinate {value!r} does not fit component {self}")
            q = Fraction(value)
            if self.kind == INT and q.denominator != 1:
                raise GroupError(f"{q} is not an integer (component Z)")
            if self.kind == INT_LOC:
                bad = [r for r in primefactors(q.denominator) if self.param % r]
                if bad:
                    raise GroupError(f"{q} is not in Z[1/{self.param}]")
            return q
        if self.kind == QUAD:
            if isinstance(value, SurdLiteral):
                if value.radicand != self.param:
                    raise GroupError(f"sqrt({value.radicand}) used in component {self}")
                if Fraction(value.rational).denominator != 1:
                    raise GroupError("Quad coordinates need integer parts")
                return (int(value.rational), int(value.coefficient))
            if isinstance(value, tuple) and len(value) == 2:
                a, b = (Fraction(v) for v in value)
                if a.denominator != 1 or b.denominator != 1:
                    raise GroupError("Quad coordinates need integer parts")
                return (int(a), int(b))
            if isinstance(value, (int, Fraction)) and Fraction(value).denominator == 1:
                return (int(value), 0)
            raise GroupError(f"coordinate {value!r} does not fit component {self}")
        # Zomega
        if isinstance(value, OmegaLiteral):
            items = value.entries
        elif isinstance(value, dict):
            items = tuple(value.items())
        elif isinstance(value, tuple):
            items = value
        elif isinstance(value, (int, Fraction)) and value == 0:
            items = ()
        else:
            raise GroupError(f"coordinate {value!r} does not fit component {self}")
        support: Dict[int, int] = {}
        for idx, v in items:
            v = Fraction(v)
            if v.denominator != 1 or int(idx) < 0:
                raise GroupError("Zomega entries are integers at nonnegative indices")
            support[int(idx)] = support.get(int(idx), 0) + int(v)
        return tuple(sorted((i, v) for i, v in support.items() if v != 0))

    def add(self, a, b):
        if self.kind == QUAD:
            return (a[0] + b[0], a[1] + b[1])
        if self.kind == OMEGA_INT:
            merged = dict(a)
            for i, v in b:
                merged[i] = merged.get(i, 0) + v
            return tuple(sorted((i, v) for i, v in merged.items() if v != 0))
        return a + b

    def scale(self, a, k: int):
        if self.kind == QUAD:
            return (a[0] * k, a[1] * k)
        if self.kind == OMEGA_INT:
            return tuple((i, v * k) for i, v in a) if k else ()
        return a * k

    def neg(self, a):
        return self.scale(a, -1)

    def is_zero(self, a) -> bool:
        return a == self.zero()

    def sign(self, a) -> int:
        if self.kind == QUAD:
            x, y = a
            d = self.param
            if y == 0:
                return _sign(x)
            if x == 0 or _sign(x) == _sign(y):
                return _sign(y) if x == 0 else _sign(x)
            diff = x * x - d * y * y
            # x and y have opposite signs; diff is never 0 for non-square d
            return _sign(diff) if x > 0 else -_sign(diff)
        if self.kind == OMEGA_INT:
            return _sign(a[0][1]) if a else 0
        return _sign(a)

    def divisible(self, a, n: int) -> bool:
        """a in n*G for this component."""
        if n == 1:
            return True
        if self.kind == INT:
            return (a / n).denominator == 1
        if self.kind == INT_LOC:
            return all(self.param % r == 0 for r in primefactors((a / n).denominator))
        if self.kind == RAT:
            return True
        if self.kind == QUAD:
            return a[0] % n == 0 and a[1] % n == 0
        return all(v % n == 0 for _, v in a)

    def index(self, n: int):
        """|G/nG| as an int, or INFINITE."""
        if self.kind == INT:
            return n
        if self.kind == INT_LOC:
            return _coprime_part(n, self.param)
        if self.kind == RAT:
            return 1
        if self.kind == QUAD:
            return n * n
        return 1 if n == 1 else INFINITE

    def p_divisible(self, p: int) -> bool:
        return self.index(p) == 1

    def representatives(self, n: int) -> List[Any]:
        if self.kind == INT:
            return [Fraction(j) for j in range(n)]
        if self.kind == INT_LOC:
            return [Fraction(j) for j in range(_coprime_part(n, self.param))]
        if self.kind == RAT:
            return [Fraction(0)]
        if self.kind == QUAD:
            return [(a, b) for a in range(n) for b in range(n)]
        if n == 1:
            return [()]
        raise GroupError("Zomega has infinitely many residue classes")

    def unit(self, j: int = 1):
        """The coordinate j*1 (integer multiple of the component's one)."""
        if self.kind == QUAD:
            return (j, 0)
        if self.kind == OMEGA_INT:
            return ((0, j),) if j else ()
        return Fraction(j)

    def format(self, a) -> str:
        if self.kind == QUAD:
            x, y = a
            if y == 0:
                return str(x)
            mag = "" if abs(y) == 1 else f"{abs(y)}*"
            surd = f"{mag}sqrt({self.param})"
            if x == 0:
                return surd if y > 0 else f"-{surd}"
            return f"{x}{'+' if y > 0 else '-'}{surd}"
        if self.kind == OMEGA_INT:
            return "{" + ",".join(f"{i}:{v}" for i, v in a) + "}"
        return str(a)

    def to_json(self, a):
        if self.kind == QUAD:
            return [a[0], a[1]]
        if self.kind == OMEGA_INT:
            return {str(i): v for i, v in a}
        return str(a)


@dataclass(frozen=True)
class GroupDescriptor:
    components: Tuple[Component, ...]

    def __post_init__(self):
        if not self.components:
            raise GroupError("a group needs at least one component")
        omega = [i for i, c in enumerate(self.components) if c.kind == OMEGA_INT]
        if len(omega) > 1 or (omega and omega[0] != len(self.components) - 1):
            raise GroupError("Zomega must be the last component (and appear at most once)")

    def __str__(self):
        return "lex(" + ",".join(str(c) for c in self.components) + ")"

    @property
    def rank(self) -> int:
        return len(self.components)

    @property
    def has_omega(self) -> bool:
        return self.components[-1].kind == OMEGA_INT

    def zero(self) -> "GroupElement":
        return GroupElement(self, tuple(c.zero() for c in self.components))

    def element(self, coords: Sequence[Any]) -> "GroupElement":
        coords = list(coords)
        if len(coords) != self.rank:
            raise GroupError(f"{len(coords)} coordinates given for {self}")
        return GroupElement(self, tuple(c.coerce(v) for c, v in zip(self.components, coords)))

    def unit(self, index: int, value: Any = 1) -> "GroupElement":
        """Element with `value` in coordinate `index` and zeros elsewhere."""
        coords = [c.zero() for c in self.components]
        comp = self.components[index]
        coords[index] = comp.unit(value) if isinstance(value, int) else comp.coerce(value)
        return GroupElement(self, tuple(coords))

    def accepts(self, coords: Sequence[Any]) -> bool:
        """Whether coordinates taken from a wider group describe an element of this one."""
        try:
            self.element(coords)
        except GroupError:
            return False
        return True

    def sub_descriptor(self, start: int, stop: int) -> Optional["GroupDescriptor"]:
        comps = self.components[start:stop]
        return GroupDescriptor(comps) if comps else None


@functools.total_ordering
@dataclass(frozen=True)
class GroupElement:
    group: GroupDescriptor
    coords: Tuple[Any, ...]

    def _same(self, other: "GroupElement"):
        if not isinstance(other, GroupElement) or other.group != self.group:
            raise GroupError(f"shape mismatch: {other} is not an element of {self.group}")

    def __add__(self, other: "GroupElement") -> "GroupElement":
        self._same(other)
        comps = self.group.components
        return GroupElement(self.group, tuple(c.add(a, b) for c, a, b in zip(comps, self.coords, other.coords)))

    def __neg__(self) -> "GroupElement":
        return self.scale(-1)

    def __sub__(self, other: "GroupElement") -> "GroupElement":
        return self + (-other)

    def scale(self, k: int) -> "GroupElement":
        comps = self.group.components
        return GroupElement(self.group, tuple(c.scale(a, k) for c, a in zip(comps, self.coords)))

    def __mul__(self, k: int) -> "GroupElement":
        return self.scale(k)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return all(c.is_zero(a) for c, a in zip(self.group.components, self.coords))

    def sign(self) -> int:
        for c, a in zip(self.group.components, self.coords):
            s = c.sign(a)
            if s:
                return s
        return 0

    def leading_index(self) -> int:
        """Index of the first nonzero coordinate (rank for zero)."""
        for i, (c, a) in enumerate(zip(self.group.components, self.coords)):
            if not c.is_zero(a):
                return i
        return self.group.rank

    def cmp(self, other: "GroupElement") -> Ordering:
        self._same(other)
        return Ordering.from_sign((self - other).sign())

    def __lt__(self, other: "GroupElement") -> bool:
        return self.cmp(other) is Ordering.LESS

    def in_multiple(self, n: int) -> bool:
        """self in n*Gamma, coordinatewise."""
        return all(c.divisible(a, n) for c, a in zip(self.group.components, self.coords))

    def __str__(self):
        return format_element(self)

    def to_json(self):
        return [c.to_json(a) for c, a in zip(self.group.components, self.coords)]


@dataclass(frozen=True)
class ConvexSubgroup:
    group: GroupDescriptor
    tail_index: int
    omega_start: int = 0

    def __post_init__(self):
        if not 0 <= self.tail_index <= self.group.rank:
            raise GroupError(f"tail index {self.tail_index} out of range for {self.group}")
        if self.omega_start and (self.tail_index != self.group.rank - 1 or not self.group.has_omega):
            raise GroupError("omega_start only applies inside a trailing Zomega component")

    @property
    def label(self) -> str:
        if self.omega_start:
            return f"Δ_{self.tail_index}^({self.omega_start})"
        return f"Δ_{self.tail_index}"

    def __str__(self):
        return self.label

    def contains(self, a: GroupElement) -> bool:
        if any(not c.is_zero(x) for c, x in zip(self.group.components[:self.tail_index], a.coords)):
            return False
        if self.omega_start:
            return all(i >= self.omega_start for i, _ in a.coords[self.tail_index])
        return True

    def contains_mod(self, a: GroupElement, p: int) -> bool:
        """a in H + p*Gamma."""
        comps = self.group.components
        if not all(c.divisible(x, p) for c, x in zip(comps[:self.tail_index], a.coords)):
            return False
        if self.omega_start:
            return all(v % p == 0 for i, v in a.coords[self.tail_index] if i < self.omega_start)
        return True

    def to_json(self):
        out = {"tail_index": self.tail_index, "label": self.label}
        if self.omega_start:
            out["omega_start"] = self.omega_start
        return out


@dataclass(frozen=True)
class QuotientDescriptor:
    source: GroupDescriptor
    tail_index: int
    discrete: bool
    min_positive: Optional[GroupElement]

    @property
    def group(self) -> Optional[GroupDescriptor]:
        """The surviving components, None for the trivial quotient."""
        return self.source.sub_descriptor(0, self.tail_index)

    def project(self, a: GroupElement) -> Tuple[Any, ...]:
        return a.coords[:self.tail_index]

    def compare(self, a: GroupElement, b: GroupElement) -> Ordering:
        d = a - b
        for c, x in zip(self.source.components[:self.tail_index], d.coords):
            s = c.sign(x)
            if s:
                return Ordering.from_sign(s)
        return Ordering.EQUAL

    def congruent(self, a: GroupElement, b: GroupElement, m: int) -> bool:
        d = a - b
        return all(c.divisible(x, m) for c, x in zip(self.source.components[:self.tail_index], d.coords))


# -- parsing -----------------------------------------------------------------

ELEMENT_RULES = r"""
element: "(" coord ("," coord)* ")"
?coord: rat | surd | omega
rat: NEG? INT (SLASH INT)?
surd: [rat] [PM] [coef] "sqrt" "(" INT ")"
coef: INT "*"
omega: "{" "}" | "{" pair ("," pair)* "}"
pair: INT ":" rat
NEG: /-/
SLASH: /\//
PM: /[+-]/
%import common.INT
%import common.WS
%ignore WS
"""

GROUP_GRAMMAR = r"""
start: "lex" "(" kind ("," kind)* ")"
?kind: "Zloc" "(" INT ")" -> loc_kind
     | "Quad" "(" INT ")" -> quad_kind
     | "Zomega" -> omega_kind
     | "Z" -> int_kind
     | "Q" -> rat_kind
%import common.INT
%import common.WS
%ignore WS
"""


class ElementTransformer(Transformer):
    """Turns element-literal subtrees into raw coordinate values."""

    def rat(self, children):
        return Fraction("".join(str(c) for c in children))

    def surd(self, children):
        base, sign, coefficient, radicand = children
        b = int(coefficient) if coefficient is not None else 1
        if sign is not None and str(sign) == "-":
            b = -b
        return SurdLiteral(base if base is not None else Fraction(0), b, int(radicand))

    def coef(self, children):
        return int(children[0])

    def pair(self, children):
        return (int(children[0]), children[1])

    def omega(self, children):
        return OmegaLiteral(tuple(children))

    def element(self, children):
        return list(children)


class GroupTransformer(Transformer):
    def start(self, children):
        return GroupDescriptor(tuple(children))

    def loc_kind(self, children):
        return Component(INT_LOC, int(children[0]))

    def quad_kind(self, children):
        return Component(QUAD, int(children[0]))

    def omega_kind(self, children):
        return Component(OMEGA_INT)

    def int_kind(self, children):
        return Component(INT)

    def rat_kind(self, children):
        return Component(RAT)


group_parser = Lark(GROUP_GRAMMAR, start="start", parser="earley")
element_parser = Lark(ELEMENT_RULES, start="element", parser="earley")


def run_transformer(parser: Lark, transformer: Transformer, text: str, error_cls):
    """Parse and transform, surfacing domain errors raised inside callbacks."""
    try:
        tree = parser.parse(text)
    except LarkError as e:
        raise error_cls(f"syntax error in {text!r}: {e}") from e
    try:
        return transformer.transform(tree)
    except VisitError as e:
        if isinstance(e.orig_exc, ValkitError):
            raise e.orig_exc
        raise error_cls(str(e.orig_exc)) from e


def parse_group(text: str) -> GroupDescriptor:
    return run_transformer(group_parser, GroupTransformer(), text, GroupError)


def parse_element(text: str, group: GroupDescriptor) -> GroupElement:
    raw = run_transformer(element_parser, ElementTransformer(), text, GroupError)
    return group.element(raw)


def format_element(a: GroupElement) -> str:
    return "(" + ",".join(c.format(x) for c, x in zip(a.group.components, a.coords)) + ")"


# -- group-level operations ---------------------------------------------------

def group_arith(op: str, a: GroupElement, b: Optional[GroupElement] = None, k: Optional[int] = None):
    if op == "add":
        return a + b
    if op == "neg":
        return -a
    if op == "sub":
        return a - b
    if op == "scalar":
        if k is None:
            raise GroupError("scalar needs an integer multiplier")
        return a.scale(k)
    if op == "cmp":
        return a.cmp(b)
    raise GroupError(f"unknown group operation {op!r}")


def convex_chain(g: GroupDescriptor, depth: int = DEFAULT_OMEGA_DEPTH) -> List[ConvexSubgroup]:
    """Delta_0 ⊋ Delta_1 ⊋ ... ⊋ Delta_n, with up to `depth` omega steps spliced in."""
    chain = []
    for k in range(g.rank + 1):
        chain.append(ConvexSubgroup(g, k))
        if g.has_omega and k == g.rank - 1:
            chain.extend(ConvexSubgroup(g, k, j) for j in range(1, depth + 1))
    return chain


def _check_prime(p: int):
    if not isprime(p):
        raise GroupError(f"{p} is not prime")


def mod_p_index(g: GroupDescriptor, p: int):
    """(|Gamma/p Gamma|, r_p), either possibly INFINITE."""
    _check_prime(p)
    r_p = 0
    for c in g.components:
        idx = c.index(p)
        if idx == INFINITE:
            return INFINITE, INFINITE
        while idx > 1:
            idx //= p
            r_p += 1
    return p ** r_p, r_p


def residue_representatives(g: GroupDescriptor, n: int) -> List[GroupElement]:
    """One element per class of Gamma/n Gamma (finite-rank groups only)."""
    if n < 1:
        raise GroupError("modulus must be positive")
    per_component = [c.representatives(n) for c in g.components]
    return [GroupElement(g, coords) for coords in itertools.product(*per_component)]


def is_nonsingular(g: GroupDescriptor) -> Tuple[bool, Optional[int]]:
    if g.has_omega:
        return False, 2
    return True, None


def h_subgroup(a: GroupElement, p: int) -> Optional[ConvexSubgroup]:
    """Largest convex H with a not in H + p*Gamma; None when a in p*Gamma."""
    _check_prime(p)
    g = a.group
    for i, (c, x) in enumerate(zip(g.components, a.coords)):
        if c.divisible(x, p):
            continue
        if c.kind == OMEGA_INT:
            first = min(idx for idx, v in x if v % p)
            return ConvexSubgroup(g, i, first + 1)
        return ConvexSubgroup(g, i + 1)
    return None


def aux_sort_Sp(g: GroupDescriptor, p: int) -> List[Tuple[Optional[ConvexSubgroup], GroupElement]]:
    """Image of a -> H_{a,p} over Gamma/p Gamma, one representative per value."""
    if g.has_omega:
        raise GroupError("S_p needs a finite-rank group")
    _check_prime(p)
    seen: Dict[Optional[ConvexSubgroup], GroupElement] = {}
    for rep in residue_representatives(g, p):
        h = h_subgroup(rep, p)
        if h not in seen:
            seen[h] = rep
    logger.debug(f"🔍 S_{p} of {g}: {len(seen)} classes")
    return sorted(seen.items(), key=lambda item: (item[0] is None, item[0].tail_index if item[0] else 0))


def quotient(g: GroupDescriptor, k: int) -> QuotientDescriptor:
    if not 0 <= k <= g.rank:
        raise GroupError(f"tail index {k} out of range for {g}")
    if k == 0:
        return QuotientDescriptor(g, 0, False, None)
    discrete = g.components[k - 1].discrete
    return QuotientDescriptor(g, k, discrete, g.unit(k - 1) if discrete else None)


def k_alpha(q: QuotientDescriptor, k: int) -> GroupElement:
    if q.discrete:
        return q.min_positive.scale(k)
    return q.source.zero()


def dp_profile(g: GroupDescriptor, prime_bound: int = 13) -> Dict[str, Any]:
    """Index table plus the equivalent verdicts non-singular / dp-minimal / weakly quasi-o-minimal."""
    nonsingular, witness = is_nonsingular(g)
    table = {}
    for p in primerange(2, prime_bound + 1):
        index, r_p = mod_p_index(g, p)
        table[str(p)] = {"index": index, "r_p": r_p}
    return {
        "group": str(g),
        "indices": table,
        "non_singular": nonsingular,
        "dp_minimal": nonsingular,
        "weakly_quasi_o_minimal": nonsingular,
        "witness_prime": witness,
    }


def sample_element(g: GroupDescriptor, rng: random.Random, bound: int = 5) -> GroupElement:
    """A random element with small coordinates; used by scans and reports."""
    coords = []
    for c in g.components:
        if c.kind == INT:
            coords.append(rng.randint(-bound, bound))
        elif c.kind == INT_LOC:
            coords.append(Fraction(rng.randint(-bound, bound), c.param ** rng.randint(0, 2)))
        elif c.kind == RAT:
            coords.append(Fraction(rng.randint(-bound, bound), rng.randint(1, 4)))
        elif c.kind == QUAD:
            coords.append((rng.randint(-bound, bound), rng.randint(-bound, bound)))
        else:
            coords.append({i: rng.randint(-bound, bound) for i in range(rng.randint(0, 3))})
    return g.element(coords)
