"""Truncated Hahn series k((t^G)) over exact coefficient fields.

A series is a finite list of (exponent, coefficient) terms plus an optional
precision: ``1 + t + O(t^2)`` stands for every series that agrees with
``1 + t`` below exponent 2.  Exact series carry no precision.

Coefficient fields are Q, Q(sqrt d) (as a subfield of R) and F_p.  The order
on k((t^G)) for an ordered k is the usual one: a series is positive when its
leading coefficient is.
"""
import itertools
import logging
import math
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from lark import Lark, Token
from sympy import isprime

from errors import SeriesError
from oag import (ELEMENT_RULES, INT, INT_LOC, RAT, ElementTransformer, GroupDescriptor, GroupElement,
                 Ordering, format_element, parse_element, parse_group, run_transformer, sample_element)

logger = logging.getLogger(__name__)

RATIONAL = "Q"
REAL_QUAD = "Qsqrt"
PRIME_FIELD = "Fp"

INF = "INF"
UNDEFINED = "UNDEFINED"

MAX_INVERSION_STEPS = 4096


def _sign(x) -> int:
    return (x > 0) - (x < 0)


class QuadraticNumber:
    """a + b*sqrt(d) with rational a, b."""

    __slots__ = ("a", "b", "d")

    def __init__(self, a, b, d: int):
        self.a = Fraction(a)
        self.b = Fraction(b)
        self.d = d

    def _lift(self, other) -> "QuadraticNumber":
        if isinstance(other, QuadraticNumber):
            if other.d != self.d:
                raise SeriesError(f"sqrt({other.d}) mixed with sqrt({self.d})")
            return other
        if isinstance(other, (int, Fraction)):
            return QuadraticNumber(other, 0, self.d)
        return NotImplemented

    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return QuadraticNumber(self.a + o.a, self.b + o.b, self.d)

    __radd__ = __add__

    def __neg__(self):
        return QuadraticNumber(-self.a, -self.b, self.d)

    def __sub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return QuadraticNumber(self.a * o.a + self.d * self.b * o.b, self.a * o.b + self.b * o.a, self.d)

    __rmul__ = __mul__

    def norm(self) -> Fraction:
        return self.a * self.a - self.d * self.b * self.b

    def inverse(self) -> "QuadraticNumber":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero in Q(sqrt d)")
        return QuadraticNumber(self.a / n, -self.b / n, self.d)

    def __truediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def sign(self) -> int:
        a, b = self.a, self.b
        if b == 0:
            return _sign(a)
        if a == 0:
            return _sign(b)
        if _sign(a) == _sign(b):
            return _sign(a)
        return _sign(self.norm()) if a > 0 else -_sign(self.norm())

    def __lt__(self, other):
        return (self - other).sign() < 0

    def __bool__(self):
        return bool(self.a) or bool(self.b)

    def __eq__(self, other):
        o = self._lift(other) if isinstance(other, (int, Fraction, QuadraticNumber)) else None
        if o is None:
            return NotImplemented
        return self.a == o.a and self.b == o.b and self.d == o.d

    def __hash__(self):
        return hash(self.a) if self.b == 0 else hash((self.a, self.b, self.d))

    def __repr__(self):
        return f"QuadraticNumber({self.a}, {self.b}, {self.d})"

    def __str__(self):
        if self.b == 0:
            return str(self.a)
        mag = "" if abs(self.b) == 1 else f"{abs(self.b)}*"
        surd = f"{mag}sqrt({self.d})"
        if self.a == 0:
            return surd if self.b > 0 else f"-{surd}"
        return f"{self.a}{'+' if self.b > 0 else '-'}{surd}"


class PrimeFieldElement:
    __slots__ = ("value", "p")

    def __init__(self, value: int, p: int):
        self.value = value % p
        self.p = p

    def _lift(self, other):
        if isinstance(other, PrimeFieldElement):
            if other.p != self.p:
                raise SeriesError(f"F_{other.p} mixed with F_{self.p}")
            return other
        if isinstance(other, int):
            return PrimeFieldElement(other, self.p)
        if isinstance(other, Fraction):
            return PrimeFieldElement(other.numerator * pow(other.denominator, -1, self.p), self.p)
        return NotImplemented

    def __add__(self, other):
        o = self._lift(other)
        return o if o is NotImplemented else PrimeFieldElement(self.value + o.value, self.p)

    __radd__ = __add__

    def __neg__(self):
        return PrimeFieldElement(-self.value, self.p)

    def __sub__(self, other):
        o = self._lift(other)
        return o if o is NotImplemented else PrimeFieldElement(self.value - o.value, self.p)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        return o if o is NotImplemented else PrimeFieldElement(self.value * o.value, self.p)

    __rmul__ = __mul__

    def inverse(self) -> "PrimeFieldElement":
        if not self.value:
            raise ZeroDivisionError(f"inverse of zero in F_{self.p}")
        return PrimeFieldElement(pow(self.value, -1, self.p), self.p)

    def __truediv__(self, other):
        o = self._lift(other)
        return o if o is NotImplemented else self * o.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k: int):
        return PrimeFieldElement(pow(self.value, k, self.p), self.p)

    def __bool__(self):
        return bool(self.value)

    def __eq__(self, other):
        if isinstance(other, (int, PrimeFieldElement)):
            return self.value == self._lift(other).value
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.p))

    def __repr__(self):
        return f"PrimeFieldElement({self.value}, {self.p})"

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class CoefficientField:
    kind: str
    param: Optional[int] = None

    def __post_init__(self):
        if self.kind == REAL_QUAD:
            if self.param is None or self.param < 2 or math.isqrt(self.param) ** 2 == self.param:
                raise SeriesError("Qsqrt(d) needs a non-square d >= 2")
        elif self.kind == PRIME_FIELD:
            if self.param is None or not isprime(self.param):
                raise SeriesError("Fp(p) needs a prime p")
        elif self.kind != RATIONAL:
            raise SeriesError(f"unknown coefficient field {self.kind!r}")

    def __str__(self):
        return self.kind if self.param is None else f"{self.kind}({self.param})"

    @property
    def ordered(self) -> bool:
        return self.kind != PRIME_FIELD

    @property
    def characteristic(self) -> int:
        return self.param if self.kind == PRIME_FIELD else 0

    def coerce(self, value):
        if self.kind == RATIONAL:
            if isinstance(value, (QuadraticNumber, PrimeFieldElement)):
                raise SeriesError(f"{value} is not rational")
            return Fraction(value)
        if self.kind == REAL_QUAD:
            if isinstance(value, QuadraticNumber):
                if value.d != self.param:
                    raise SeriesError(f"sqrt({value.d}) is not in {self}")
                return value
            if isinstance(value, PrimeFieldElement):
                raise SeriesError(f"{value} mod {value.p} is not in {self}")
            return QuadraticNumber(value, 0, self.param)
        if isinstance(value, PrimeFieldElement):
            if value.p != self.param:
                raise SeriesError(f"{value} mod {value.p} is not in {self}")
            return value
        if isinstance(value, QuadraticNumber):
            raise SeriesError(f"{value} is not in {self}")
        q = Fraction(value)
        if q.denominator % self.param == 0:
            raise SeriesError(f"{q} has no image in {self}")
        return PrimeFieldElement(0, self.param)._lift(q)

    def zero(self):
        return self.coerce(0)

    def one(self):
        return self.coerce(1)

    def sign(self, c) -> int:
        if not self.ordered:
            raise SeriesError(f"{self} is not an ordered field")
        return c.sign() if isinstance(c, QuadraticNumber) else _sign(c)

    def format_signed(self, c) -> Tuple[str, str]:
        if self.kind == RATIONAL:
            return ("-" if c < 0 else "+"), str(abs(c))
        if self.kind == REAL_QUAD:
            if c.b == 0:
                return ("-" if c.a < 0 else "+"), str(abs(c.a))
            if c.a == 0 and c.b < 0:
                return "-", f"({-c})"
            return "+", f"({c})"
        return "+", str(c)

    def random(self, rng: random.Random, bound: int = 3):
        """A random nonzero element with small numerators."""
        while True:
            if self.kind == RATIONAL:
                c = self.coerce(Fraction(rng.randint(-bound, bound), rng.randint(1, bound)))
            elif self.kind == REAL_QUAD:
                c = QuadraticNumber(rng.randint(-bound, bound), rng.randint(-bound, bound), self.param)
            else:
                c = PrimeFieldElement(rng.randint(1, self.param - 1), self.param)
            if c:
                return c


def _min_precision(*precisions: Optional[GroupElement]) -> Optional[GroupElement]:
    finite = [p for p in precisions if p is not None]
    return min(finite) if finite else None


@dataclass(frozen=True)
class HahnField:
    """The carrier k((t^G))."""
    coeffs: CoefficientField
    group: GroupDescriptor

    def __str__(self):
        return f"{self.coeffs}((t^{self.group}))"

    def series(self, terms: Iterable[Tuple[GroupElement, Any]] = (), precision: Optional[GroupElement] = None):
        return HahnSeries.build(self, terms, precision)

    def zero(self) -> "HahnSeries":
        return self.series()

    def one(self) -> "HahnSeries":
        return self.constant(1)

    def constant(self, c) -> "HahnSeries":
        return self.series([(self.group.zero(), c)])

    def monomial(self, exponent: GroupElement, c=1) -> "HahnSeries":
        return self.series([(exponent, c)])

    def exponent(self, value) -> GroupElement:
        """Group element from a GroupElement, a coordinate list, or a bare rank-1 number."""
        if isinstance(value, GroupElement):
            return value
        if isinstance(value, (list, tuple)):
            return self.group.element(list(value))
        if self.group.rank != 1:
            raise SeriesError(f"bare exponent {value} needs an element literal in {self.group}")
        return self.group.element([value])


@dataclass(frozen=True)
class HahnSeries:
    field: HahnField
    terms: Tuple[Tuple[GroupElement, Any], ...]
    precision: Optional[GroupElement] = None

    @classmethod
    def build(cls, field: HahnField, terms: Iterable[Tuple[GroupElement, Any]],
              precision: Optional[GroupElement] = None) -> "HahnSeries":
        collected: Dict[GroupElement, Any] = {}
        for e, c in terms:
            e = field.exponent(e)
            if e.group != field.group:
                raise SeriesError(f"exponent {e} is not in {field.group}")
            collected[e] = collected.get(e, field.coeffs.zero()) + field.coeffs.coerce(c)
        if precision is not None:
            precision = field.exponent(precision)
        kept = sorted(((e, c) for e, c in collected.items()
                       if c and (precision is None or e < precision)), key=lambda item: item[0])
        return cls(field, tuple(kept), precision)

    @property
    def group(self) -> GroupDescriptor:
        return self.field.group

    @property
    def coeffs(self) -> CoefficientField:
        return self.field.coeffs

    @property
    def exact(self) -> bool:
        return self.precision is None

    def is_exact_zero(self) -> bool:
        return not self.terms and self.exact

    def _same(self, other: "HahnSeries"):
        if not isinstance(other, HahnSeries) or other.field != self.field:
            raise SeriesError(f"carrier mismatch: {getattr(other, 'field', other)} vs {self.field}")

    def valuation(self):
        """Least exponent, INF for exact zero; zero-to-precision raises."""
        if self.terms:
            return self.terms[0][0]
        if self.exact:
            return INF
        raise SeriesError(f"{self} is zero to precision; valuation undetermined")

    def lowest_known(self) -> Optional[GroupElement]:
        """v(a) when terms exist, else the precision (None for exact zero)."""
        return self.terms[0][0] if self.terms else self.precision

    def leading(self):
        self.valuation()
        return self.terms[0][1] if self.terms else self.coeffs.zero()

    def coefficient(self, exponent) -> Any:
        e = self.field.exponent(exponent)
        if self.precision is not None and not e < self.precision:
            raise SeriesError(f"coefficient at {e} lies beyond precision {self.precision}")
        return dict(self.terms).get(e, self.coeffs.zero())

    def truncate(self, precision: GroupElement) -> "HahnSeries":
        return HahnSeries.build(self.field, self.terms, _min_precision(self.precision, precision))

    def add(self, other: "HahnSeries") -> "HahnSeries":
        self._same(other)
        return HahnSeries.build(self.field, self.terms + other.terms,
                                _min_precision(self.precision, other.precision))

    def neg(self) -> "HahnSeries":
        return HahnSeries(self.field, tuple((e, -c) for e, c in self.terms), self.precision)

    def sub(self, other: "HahnSeries") -> "HahnSeries":
        return self.add(other.neg())

    def mul(self, other: "HahnSeries") -> "HahnSeries":
        self._same(other)
        if self.is_exact_zero() or other.is_exact_zero():
            return self.field.zero()
        candidates = []
        if self.precision is not None:
            candidates.append(self.precision + other.lowest_known())
        if other.precision is not None:
            candidates.append(other.precision + self.lowest_known())
        precision = _min_precision(*candidates)
        products = ((e1 + e2, c1 * c2) for (e1, c1), (e2, c2) in itertools.product(self.terms, other.terms))
        return HahnSeries.build(self.field, products, precision)

    def scale(self, c) -> "HahnSeries":
        return self.mul(self.field.constant(c))

    def shift(self, exponent: GroupElement) -> "HahnSeries":
        """Multiply by t^exponent."""
        precision = None if self.precision is None else self.precision + exponent
        return HahnSeries(self.field, tuple((e + exponent, c) for e, c in self.terms), precision)

    __add__ = add
    __sub__ = sub
    __mul__ = mul
    __neg__ = neg

    def invert(self, precision) -> "HahnSeries":
        """b with a*b = 1 + O(t^precision); exact for monomials."""
        precision = self.field.exponent(precision)
        if not self.terms:
            if self.exact:
                raise SeriesError("cannot invert zero")
            raise SeriesError(f"{self} is zero to precision; leading term unknown")
        gamma, lead = self.terms[0]
        lead_inv = self.field.constant(self.coeffs.one() / lead)
        if self.exact and len(self.terms) == 1:
            return self.field.monomial(-gamma, self.coeffs.one() / lead)
        if self.precision is not None and self.precision - gamma < precision:
            raise SeriesError(f"input known to {self.precision} cannot give an inverse to {precision}")
        # a = lead * t^gamma * (1 + u) with v(u) > 0
        u = self.shift(-gamma).mul(lead_inv).sub(self.field.one()).truncate(precision)
        step = u.neg()
        total = self.field.one().truncate(precision)
        power = self.field.one()
        for n in range(1, MAX_INVERSION_STEPS + 1):
            power = power.mul(step).truncate(precision)
            if not power.terms:
                logger.debug(f"🔍 Inversion converged after {n} steps")
                break
            total = total.add(power)
        else:
            raise SeriesError(f"precision {precision} unreachable from v(u) = {u.valuation()} "
                              f"within {MAX_INVERSION_STEPS} steps")
        return total.mul(lead_inv).shift(-gamma)

    def divide(self, other: "HahnSeries", precision) -> "HahnSeries":
        """self / other, correct below `precision`."""
        precision = self.field.exponent(precision)
        if self.is_exact_zero():
            return self.field.zero()
        shift = precision - self.valuation() + other.valuation()
        return self.mul(other.invert(shift)).truncate(precision)

    def power(self, k: int) -> "HahnSeries":
        if k < 0:
            raise SeriesError("negative powers need invert")
        out = self.field.one()
        for _ in range(k):
            out = out.mul(self)
        return out

    def __str__(self):
        return format_series(self)


def series_arith(op: str, a: HahnSeries, b: HahnSeries) -> HahnSeries:
    if op == "add":
        return a.add(b)
    if op == "sub":
        return a.sub(b)
    if op == "mul":
        return a.mul(b)
    raise SeriesError(f"unknown series operation {op!r}")


class ValData(NamedTuple):
    valuation: Any
    leading: Any
    residue: Any


def val_data(a: HahnSeries) -> ValData:
    v = a.valuation()
    if v == INF:
        return ValData(INF, a.coeffs.zero(), a.coeffs.zero())
    sign = v.sign()
    if sign < 0:
        return ValData(v, a.leading(), UNDEFINED)
    return ValData(v, a.leading(), a.leading() if sign == 0 else a.coeffs.zero())


def residue(a: HahnSeries):
    r = val_data(a).residue
    if r == UNDEFINED:
        raise SeriesError(f"{a} is outside the valuation ring")
    return r


def compare(a: HahnSeries, b: HahnSeries) -> Ordering:
    a._same(b)
    if not a.coeffs.ordered:
        raise SeriesError(f"{a.coeffs} is not ordered")
    d = a.sub(b)
    if d.terms:
        return Ordering.from_sign(a.coeffs.sign(d.leading()))
    if d.exact:
        return Ordering.EQUAL
    raise SeriesError(f"difference is 0 + O(t^{format_exponent(d.precision)}); undecidable at this precision")


# -- literals ------------------------------------------------------------------

FIELD_PATTERN = re.compile(r"^\s*(Q|Qsqrt\((\d+)\)|Fp\((\d+)\))\s*\(\(\s*t\s*\^\s*(.+?)\s*\)\)\s*$")

SERIES_GRAMMAR = r"""
start: [ADDOP] sterm (ADDOP sterm)* (ADDOP bigo)?
     | bigo
?sterm: coefficient "*" monomial -> scaled_term
      | monomial -> unit_term
      | coefficient -> constant_term
bigo: "O" "(" monomial ")"
monomial: "t" ("^" exponent)?
?exponent: element | signed
signed: NEG? INT (SLASH INT)?
?coefficient: number | qnum | modp
number: INT (SLASH INT)?
qnum: "(" [signed] [PM] [qcoef] "sqrt" "(" INT ")" ")"
qcoef: number "*"
modp: INT "mod" INT
ADDOP: /[+-]/
""" + ELEMENT_RULES


class SeriesBuilder(ElementTransformer):
    def __init__(self, field: HahnField):
        super().__init__()
        self.field = field

    def number(self, children):
        return Fraction("".join(str(c) for c in children))

    signed = number

    def qcoef(self, children):
        return children[0]

    def qnum(self, children):
        rational, sign, coefficient, radicand = children
        b = coefficient if coefficient is not None else Fraction(1)
        if sign is not None and str(sign) == "-":
            b = -b
        return QuadraticNumber(rational or 0, b, int(radicand))

    def modp(self, children):
        value, modulus = int(children[0]), int(children[1])
        if not isprime(modulus):
            raise SeriesError(f"{modulus} is not prime")
        return PrimeFieldElement(value, modulus)

    def monomial(self, children):
        if not children:
            if self.field.group.rank != 1:
                raise SeriesError(f"bare t needs an exponent in {self.field.group}")
            return self.field.group.unit(0)
        return self.field.exponent(children[0])

    def scaled_term(self, children):
        return ("term", children[1], self.field.coeffs.coerce(children[0]))

    def unit_term(self, children):
        return ("term", children[0], self.field.coeffs.one())

    def constant_term(self, children):
        return ("term", self.field.group.zero(), self.field.coeffs.coerce(children[0]))

    def bigo(self, children):
        return ("big_o", children[0])

    def start(self, children):
        terms, precision, sign = [], None, "+"
        for child in children:
            if child is None:
                continue
            if isinstance(child, Token):
                sign = str(child)
                continue
            if child[0] == "big_o":
                if sign != "+":
                    raise SeriesError("write the precision marker as + O(t^e)")
                precision = child[1]
            else:
                c = child[2] if sign == "+" else -child[2]
                terms.append((child[1], c))
            sign = "+"
        return HahnSeries.build(self.field, terms, precision)


series_parser = Lark(SERIES_GRAMMAR, start="start", parser="earley")


def parse_field(text: str) -> HahnField:
    m = FIELD_PATTERN.match(text)
    if not m:
        raise SeriesError(f"field descriptor {text!r} is not Q((t^G)), Qsqrt(d)((t^G)) or Fp(p)((t^G))")
    head, d, p = m.group(1), m.group(2), m.group(3)
    if d is not None:
        coeffs = CoefficientField(REAL_QUAD, int(d))
    elif p is not None:
        coeffs = CoefficientField(PRIME_FIELD, int(p))
    else:
        coeffs = CoefficientField(RATIONAL)
    return HahnField(coeffs, parse_group(m.group(4)))


def parse_series(text: str, field: HahnField) -> HahnSeries:
    return run_transformer(series_parser, SeriesBuilder(field), text, SeriesError)


def format_exponent(e: GroupElement) -> str:
    g = e.group
    if g.rank == 1 and g.components[0].kind in (INT, INT_LOC, RAT):
        q = e.coords[0]
        return str(q) if q.denominator == 1 else f"({q})"
    return format_element(e)


def format_series(a: HahnSeries) -> str:
    pieces: List[Tuple[str, str]] = []
    one = a.coeffs.one()
    for e, c in a.terms:
        sign, text = a.coeffs.format_signed(c)
        if e.is_zero():
            pieces.append((sign, text))
            continue
        mono = "t" if a.group.rank == 1 and e == a.group.unit(0) else f"t^{format_exponent(e)}"
        pieces.append((sign, mono if text == str(one) else f"{text}*{mono}"))
    if a.precision is not None:
        mono = "t" if a.group.rank == 1 and a.precision == a.group.unit(0) else f"t^{format_exponent(a.precision)}"
        pieces.append(("+", f"O({mono})"))
    if not pieces:
        return "0"
    out = ""
    for i, (sign, text) in enumerate(pieces):
        if i == 0:
            out = text if sign == "+" else f"-{text}"
        else:
            out += f" {sign} {text}"
    return out


def sample_series(field: HahnField, rng: random.Random, n_terms: int = 3, bound: int = 2,
                  precision: Optional[GroupElement] = None) -> HahnSeries:
    """A random series with up to `n_terms` terms and small exponents."""
    terms = [(sample_element(field.group, rng, bound), field.coeffs.random(rng))
             for _ in range(rng.randint(1, n_terms))]
    return HahnSeries.build(field, terms, precision)


# -- uniform structure -------------------------------------------------------------

@dataclass(frozen=True)
class BallFamily:
    """U_gamma = {(x, y) : v(x - y) > gamma}."""
    group: GroupDescriptor

    def contains(self, radius: GroupElement, x: HahnSeries, y: HahnSeries) -> bool:
        d = x.sub(y)
        if d.terms:
            return radius < d.terms[0][0]
        if d.exact:
            return True
        if radius < d.precision:
            return True
        raise SeriesError(f"v(x - y) >= {d.precision} does not decide membership in U_{radius}")


def uniformity_check(bf: BallFamily, pairs: Sequence[Tuple[HahnSeries, HahnSeries]],
                     radii: Sequence[GroupElement]) -> Dict[str, Any]:
    """The four basis axioms checked on sample pairs; violations are listed, never raised."""
    violations: Dict[str, List[str]] = {"separation": [], "symmetry": [], "intersection": [], "composition": []}
    membership = []
    for x, y in pairs:
        for r in radii:
            membership.append({"pair": [str(x), str(y)], "radius": str(r), "member": bf.contains(r, x, y)})
        if x.sub(y).terms and all(bf.contains(r, x, y) for r in radii):
            violations["separation"].append(f"{x} and {y} not separated by any radius")
        for r in radii:
            if bf.contains(r, x, y) != bf.contains(r, y, x):
                violations["symmetry"].append(f"U_{r} not symmetric on ({x}, {y})")
        for r1, r2 in itertools.product(radii, repeat=2):
            if bf.contains(max(r1, r2), x, y) and not (bf.contains(r1, x, y) and bf.contains(r2, x, y)):
                violations["intersection"].append(f"U_max({r1},{r2}) not inside U_{r1} ∩ U_{r2}")
    points = list(dict.fromkeys(p for pair in pairs for p in pair))
    triples = 0
    for x, y, z in itertools.product(points, repeat=3):
        triples += 1
        for r in radii:
            if bf.contains(r, x, y) and bf.contains(r, y, z) and not bf.contains(r, x, z):
                violations["composition"].append(f"U_{r}∘U_{r} fails on ({x}, {y}, {z})")
    passed = not any(violations.values())
    if passed:
        logger.info(f"✅ Ball family over {bf.group}: all axioms hold on {len(pairs)} pairs")
    else:
        logger.warning(f"⚠️ Ball family over {bf.group}: {sum(map(len, violations.values()))} violations")
    return {"passed": passed, "violations": violations, "membership": membership,
            "checked": {"pairs": len(pairs), "radii": len(radii), "triples": triples}}


# -- type-V boundedness --------------------------------------------------------------

BALL = "BALL"
CO_BALL = "CO_BALL"
ANNULUS = "ANNULUS"


@dataclass(frozen=True)
class ValuationInterval:
    """{x != 0 : v(x) in I}; a missing bound is infinite."""
    lower: Optional[GroupElement]
    lower_closed: bool
    upper: Optional[GroupElement]
    upper_closed: bool

    def contains(self, v: GroupElement) -> bool:
        if self.lower is not None and (v < self.lower or (v == self.lower and not self.lower_closed)):
            return False
        if self.upper is not None and (self.upper < v or (v == self.upper and not self.upper_closed)):
            return False
        return True

    def negate(self) -> "ValuationInterval":
        return ValuationInterval(None if self.upper is None else -self.upper, self.upper_closed,
                                 None if self.lower is None else -self.lower, self.lower_closed)

    def __str__(self):
        lo = "-inf" if self.lower is None else str(self.lower)
        hi = "inf" if self.upper is None else str(self.upper)
        return f"{'[' if self.lower_closed else '('}{lo}, {hi}{']' if self.upper_closed else ')'}"


@dataclass(frozen=True)
class SetDescriptor:
    kind: str
    low: GroupElement
    high: Optional[GroupElement] = None
    contains_zero: bool = False

    def interval(self) -> ValuationInterval:
        if self.kind == BALL:
            return ValuationInterval(self.low, False, None, False)
        if self.kind == CO_BALL:
            return ValuationInterval(None, False, self.low, True)
        if self.kind == ANNULUS:
            if self.high is None or not self.low < self.high:
                raise SeriesError("ANNULUS(g1, g2) needs g1 < g2")
            return ValuationInterval(self.low, False, self.high, True)
        raise SeriesError(f"unknown set descriptor {self.kind!r}")

    def __str__(self):
        inner = f"{self.low}" if self.high is None else f"{self.low},{self.high}"
        return f"{self.kind}({inner})"


def parse_set_descriptor(text: str, group: GroupDescriptor) -> SetDescriptor:
    """BALL(g), BALL0(g) (containing 0), CO_BALL(g) or ANNULUS(g1,g2) with rank-1 numbers or element literals."""
    m = re.match(r"^\s*(BALL0|BALL|CO_BALL|ANNULUS)\s*\((.*)\)\s*$", text)
    if not m:
        raise SeriesError(f"set descriptor {text!r} not understood")
    kind, body = m.group(1), m.group(2)
    args = _split_arguments(body)
    field = HahnField(CoefficientField(RATIONAL), group)
    values = [field.exponent(_parse_exponent_text(arg, group)) for arg in args]
    expected = 2 if kind == ANNULUS else 1
    if len(values) != expected:
        raise SeriesError(f"{kind} takes {expected} argument(s)")
    if kind == "BALL0":
        return SetDescriptor(BALL, values[0], contains_zero=True)
    return SetDescriptor(kind, values[0], values[1] if kind == ANNULUS else None)


def _split_arguments(body: str) -> List[str]:
    args, depth, current = [], 0, ""
    for ch in body:
        if ch == "," and depth == 0:
            args.append(current.strip())
            current = ""
            continue
        depth += ch == "("
        depth -= ch == ")"
        current += ch
    args.append(current.strip())
    return [a for a in args if a]


def _parse_exponent_text(text: str, group: GroupDescriptor):
    if text.startswith("("):
        return parse_element(text, group)
    try:
        return Fraction(text)
    except ValueError as e:
        raise SeriesError(f"exponent {text!r} not understood") from e


def _interval_samples(interval: ValuationInterval, g: GroupDescriptor) -> List[GroupElement]:
    bases = [b for b in (interval.lower, interval.upper) if b is not None] or [g.zero()]
    candidates = [b + g.unit(i, k) for b in bases for i in range(g.rank) for k in range(-3, 4)]
    candidates += [g.unit(0, k) for k in range(-5, 6)]
    return sorted({c for c in candidates if interval.contains(c)})


def typeV_check(desc: SetDescriptor, rng: Optional[random.Random] = None, samples: int = 20) -> Dict[str, Any]:
    """Bounded vs. inverse bounded away from zero, read off actual inverses of members."""
    interval = desc.interval()
    if desc.contains_zero:
        raise SeriesError(f"{desc} contains 0; the inverse set is undefined")
    group = desc.low.group
    field = HahnField(CoefficientField(RATIONAL), group)
    rng = rng or random.Random(0)
    inverse = interval.negate()
    bounded = interval.lower is not None

    valuations = _interval_samples(interval, group)
    if not valuations:
        raise SeriesError(f"no sample valuations found in {interval}")
    members = [field.monomial(v) for v in valuations]
    members += [_sample_in(field, valuations, rng) for _ in range(samples)]
    witnesses, inverse_values = [], []
    for x in members:
        v = x.valuation()
        y = x.invert(group.unit(0, 2) - v)
        w = y.valuation()
        if not inverse.contains(w):
            raise SeriesError(f"inverse of {x} has valuation {w} outside {inverse}")
        inverse_values.append(w)
        if len(x.terms) == 1:
            witnesses.append({"v": str(v), "v_inverse": str(w)})

    # a member below -gap would have an inverse closer to 0 than every sampled one
    gap = max(inverse_values)
    below = -gap - group.unit(0, 1)
    bounded_away = True
    if interval.contains(below):
        escaped = field.monomial(below).invert(group.unit(0, 2) - below).valuation()
        if not gap < escaped:
            raise SeriesError(f"inverse of t^{below} has valuation {escaped}, not above {gap}")
        bounded_away = False
        witnesses.append({"v": str(below), "v_inverse": str(escaped)})

    if bounded != bounded_away:
        logger.error(f"❌ Duality broken for {desc}: bounded {bounded}, inverse bounded away {bounded_away}")
    return {
        "descriptor": str(desc),
        "valuations": str(interval),
        "inverse_valuations": str(inverse),
        "bounded": bounded,
        "inverse_bounded_away": bounded_away,
        "bound": None if interval.lower is None else str(interval.lower),
        "gap": str(gap) if bounded_away else None,
        "duality": bounded == bounded_away,
        "witnesses": witnesses,
    }


def _sum_bound(ia: ValuationInterval, ib: ValuationInterval) -> ValuationInterval:
    if ia.lower == ib.lower:
        return ValuationInterval(ia.lower, ia.lower_closed or ib.lower_closed, None, False)
    low = ia if ia.lower < ib.lower else ib
    return ValuationInterval(low.lower, low.lower_closed, None, False)


def bounded_closure_check(a: SetDescriptor, b: SetDescriptor, rng: Optional[random.Random] = None,
                          samples: int = 50) -> Dict[str, Any]:
    """Valuation lower bounds for A+B and A*B, checked on sampled two-term elements."""
    ia, ib = a.interval(), b.interval()
    if ia.lower is None or ib.lower is None:
        raise SeriesError("bounded_closure_check needs bounded descriptors")
    group = a.low.group
    rng = rng or random.Random(0)
    sum_bound = _sum_bound(ia, ib)
    product_bound = ValuationInterval(ia.lower + ib.lower, ia.lower_closed and ib.lower_closed, None, False)
    field = HahnField(CoefficientField(RATIONAL), group)
    va, vb = _interval_samples(ia, group), _interval_samples(ib, group)
    failures = []
    for _ in range(samples):
        x = _sample_in(field, va, rng)
        y = _sample_in(field, vb, rng)
        s, p = x.add(y), x.mul(y)
        if s.terms and not sum_bound.contains(s.valuation()):
            failures.append(f"v({x} + {y}) = {s.valuation()}")
        if not product_bound.contains(p.valuation()):
            failures.append(f"v(({x})*({y})) = {p.valuation()}")
    return {"sum_bound": str(sum_bound), "product_bound": str(product_bound),
            "samples": samples, "failures": failures, "closed": not failures}


def _sample_in(field: HahnField, valuations: List[GroupElement], rng: random.Random) -> HahnSeries:
    lead = rng.choice(valuations)
    higher = [w for w in valuations if lead < w]
    terms = [(lead, field.coeffs.random(rng))]
    if higher:
        terms.append((rng.choice(higher), field.coeffs.random(rng)))
    return HahnSeries.build(field, terms)
