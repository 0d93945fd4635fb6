"""Rational functions over F_p and the map tau(x, y) = x^p + z*y^p.

K = F_p(s) is not perfect: s has no p-th root.  For z outside K^p the map
tau is injective (two equal values would put z in K^p); for z inside K^p it
collapses (g*y, 0) and (0, y) whenever g^p = z.
"""
import logging
import random
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import sympy
from sympy import GF, Poly, Symbol
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from errors import PerfectnessError

logger = logging.getLogger(__name__)

S = Symbol("s")
SUPPORTED_CHARACTERISTICS = (2, 3, 5)
DEGREE_BOUND = 12


def _check_characteristic(p: int):
    if p not in SUPPORTED_CHARACTERISTICS:
        raise PerfectnessError(f"characteristic {p} not supported; use one of {SUPPORTED_CHARACTERISTICS}")


def _poly(expr, p: int) -> Poly:
    return Poly(expr, S, domain=GF(p))


def _coeffs(f: Poly, p: int) -> Tuple[int, ...]:
    return tuple(int(c) % p for c in f.all_coeffs())


def format_poly(f: Poly, p: int) -> str:
    if f.is_zero:
        return "0"
    pieces = []
    for (e,), c in sorted(f.as_dict().items(), reverse=True):
        c = int(c) % p
        if e == 0:
            pieces.append(str(c))
            continue
        mono = "s" if e == 1 else f"s^{e}"
        pieces.append(mono if c == 1 else f"{c}*{mono}")
    return " + ".join(pieces)


@dataclass(frozen=True, eq=False)
class RationalFunction:
    """num/den over F_p with gcd 1 and monic den."""
    num: Poly
    den: Poly
    p: int

    @classmethod
    def build(cls, num, den, p: int) -> "RationalFunction":
        num = num if isinstance(num, Poly) else _poly(num, p)
        den = den if isinstance(den, Poly) else _poly(den, p)
        if den.is_zero:
            raise PerfectnessError(f"denominator vanishes in F_{p}")
        if num.is_zero:
            return cls(_poly(0, p), _poly(1, p), p)
        g = num.gcd(den)
        num, den = num.exquo(g), den.exquo(g)
        lead = den.LC()
        return cls(num.quo_ground(lead), den.quo_ground(lead), p)

    @classmethod
    def constant(cls, c: int, p: int) -> "RationalFunction":
        return cls.build(c, 1, p)

    def key(self) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        return _coeffs(self.num, self.p), _coeffs(self.den, self.p)

    def __eq__(self, other):
        return isinstance(other, RationalFunction) and self.p == other.p and self.key() == other.key()

    def __hash__(self):
        return hash((self.p, self.key()))

    def _same(self, other: "RationalFunction"):
        if not isinstance(other, RationalFunction) or other.p != self.p:
            raise PerfectnessError(f"characteristic mismatch: {getattr(other, 'p', other)} vs {self.p}")

    def is_zero(self) -> bool:
        return self.num.is_zero

    def __add__(self, other):
        self._same(other)
        return RationalFunction.build(self.num * other.den + other.num * self.den, self.den * other.den, self.p)

    def __neg__(self):
        return RationalFunction(-self.num, self.den, self.p)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        self._same(other)
        return RationalFunction.build(self.num * other.num, self.den * other.den, self.p)

    def __truediv__(self, other):
        self._same(other)
        if other.is_zero():
            raise PerfectnessError("division by zero")
        return RationalFunction.build(self.num * other.den, self.den * other.num, self.p)

    def __pow__(self, k: int):
        if k < 0:
            return RationalFunction.constant(1, self.p) / self ** (-k)
        return RationalFunction.build(self.num ** k, self.den ** k, self.p)

    def frobenius(self) -> "RationalFunction":
        return self ** self.p

    @property
    def degree(self) -> int:
        return max(self.num.degree(), self.den.degree(), 0)

    def __str__(self):
        num = format_poly(self.num, self.p)
        if self.den.degree() == 0:
            return num
        den = format_poly(self.den, self.p)
        if len(self.num.terms()) > 1:
            num = f"({num})"
        if len(self.den.terms()) > 1:
            den = f"({den})"
        return f"{num}/{den}"

    __repr__ = __str__


def parse_rational_function(text: str, p: int) -> RationalFunction:
    """Literals like ``(s^2+1)/(s^4)``; integer coefficients are read mod p."""
    _check_characteristic(p)
    try:
        expr = parse_expr(text.replace("^", "**"), local_dict={"s": S}, transformations=standard_transformations)
        num, den = sympy.fraction(sympy.together(expr))
        if expr.free_symbols - {S}:
            raise PerfectnessError(f"{text!r} uses variables other than s")
        return RationalFunction.build(_poly(num, p), _poly(den, p), p)
    except (SyntaxError, TypeError, sympy.PolynomialError, sympy.SympifyError) as e:
        raise PerfectnessError(f"rational function {text!r} not understood over F_{p}(s): {e}") from e


def _pth_root_poly(f: Poly, p: int) -> Optional[Poly]:
    """g with g^p = f when every exponent of f is divisible by p (c^p = c on F_p)."""
    terms = f.as_dict()
    if any(e % p for (e,) in terms):
        return None
    return Poly.from_dict({(e // p,): c for (e,), c in terms.items()}, S, domain=GF(p))


def is_pth_power(f: RationalFunction, p: int) -> Tuple[bool, Optional[RationalFunction]]:
    """Whether f lies in K^p, with the root when it does."""
    _check_characteristic(p)
    if f.p != p:
        raise PerfectnessError(f"{f} lives in characteristic {f.p}, not {p}")
    if f.is_zero():
        return True, f
    num, den = _pth_root_poly(f.num, p), _pth_root_poly(f.den, p)
    if num is None or den is None:
        return False, None
    return True, RationalFunction.build(num, den, p)


def tau_eval(x: RationalFunction, y: RationalFunction, z: RationalFunction, p: int) -> RationalFunction:
    _check_characteristic(p)
    for f in (x, y, z):
        if f.p != p:
            raise PerfectnessError(f"{f} lives in characteristic {f.p}, not {p}")
    if is_pth_power(z, p)[0]:
        logger.warning(f"⚠️ z = {z} is a p-th power; collisions expected")
    return x ** p + z * y ** p


def random_rational_function(rng: random.Random, p: int, max_degree: int = 3) -> RationalFunction:
    num = [rng.randrange(p) for _ in range(rng.randint(0, max_degree) + 1)]
    den = [rng.randrange(p) for _ in range(rng.randint(0, max_degree // 2))] + [1]
    return RationalFunction.build(Poly(num, S, domain=GF(p)), Poly(den, S, domain=GF(p)), p)


def _pair_json(pair: Tuple[RationalFunction, RationalFunction]) -> List[str]:
    return [str(pair[0]), str(pair[1])]


def injectivity_scan(z: RationalFunction, p: int, n_samples: int, rng: Optional[random.Random] = None,
                     degree_bound: int = DEGREE_BOUND) -> Dict[str, Any]:
    """Evaluate tau on random pairs and list every collision between distinct inputs."""
    _check_characteristic(p)
    rng = rng or random.Random(0)
    is_power, root = is_pth_power(z, p)
    max_degree = max(1, (degree_bound - z.degree) // p)
    seen: Dict[RationalFunction, Tuple[RationalFunction, RationalFunction]] = {}
    collisions: List[Dict[str, Any]] = []
    for _ in range(n_samples):
        pair = (random_rational_function(rng, p, max_degree), random_rational_function(rng, p, max_degree))
        value = pair[0] ** p + z * pair[1] ** p
        earlier = seen.setdefault(value, pair)
        if earlier != pair:
            collisions.append({"inputs": [_pair_json(earlier), _pair_json(pair)], "value": str(value)})

    constructed = []
    if is_power:
        one = RationalFunction.constant(1, p)
        zero = RationalFunction.constant(0, p)
        first, second = (root, zero), (zero, one)
        value = tau_eval(*first, z, p)
        if value != tau_eval(*second, z, p):
            raise PerfectnessError(f"constructed pair does not collide for z = {z}")
        constructed.append({"inputs": [_pair_json(first), _pair_json(second)], "value": str(value)})
    else:
        if collisions:
            logger.error(f"❌ {len(collisions)} collisions for z = {z}, which is not a p-th power")
        else:
            logger.info(f"✅ tau injective on {n_samples} samples for z = {z}")

    return {
        "z": str(z),
        "p": p,
        "z_is_pth_power": is_power,
        "root": None if root is None else str(root),
        "samples": n_samples,
        "distinct_inputs": len(seen),
        "collisions": constructed + collisions,
        "constructed": len(constructed),
    }


def frobenius_check(p: int, n_samples: int, rng: Optional[random.Random] = None) -> Dict[str, Any]:
    """(f+g)^p = f^p + g^p and (fg)^p = f^p g^p on random pairs."""
    _check_characteristic(p)
    rng = rng or random.Random(0)
    failures = []
    for _ in range(n_samples):
        f, g = random_rational_function(rng, p), random_rational_function(rng, p)
        if (f + g).frobenius() != f.frobenius() + g.frobenius() or (f * g).frobenius() != f.frobenius() * g.frobenius():
            failures.append([str(f), str(g)])
    return {"p": p, "samples": n_samples, "failures": failures, "passed": not failures}
