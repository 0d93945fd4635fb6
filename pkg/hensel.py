"""Polynomials, Newton/Hensel lifting and the conjugate-polynomial construction.

Univariate polynomials live over a coefficient domain: Hahn series
k((t^G)) (``SeriesDomain``) or the rationals with a p-adic valuation
(``PAdicDomain``, exact arithmetic, no completion).  Multivariate polynomials
over Q are thin wrappers around sympy ``Poly``.
"""
import itertools
import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Sequence, Tuple

import sympy
from lark import Lark, Token, Transformer
from sympy import QQ, Matrix, Poly, Rational, isprime, multiplicity, symbols
from sympy.polys.polyerrors import CoercionFailed
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from errors import HenselError
from hahn import INF, HahnField, HahnSeries, parse_field, parse_series, residue
from oag import run_transformer

logger = logging.getLogger(__name__)

MAX_NEWTON_STEPS = 64
SPIRAL_RADIUS = 6

ALPHA_ALIASES = {
    "sqrt(2)": "Z^2 - 2",
    "sqrt(3)": "Z^2 - 3",
    "i": "Z^2 + 1",
    "cbrt(2)": "Z^3 - 2",
}


# -- coefficient domains ---------------------------------------------------------

@dataclass(frozen=True)
class SeriesDomain:
    field: HahnField
    truncating = True

    def __str__(self):
        return str(self.field)

    def zero(self):
        return self.field.zero()

    def one(self):
        return self.field.one()

    def coerce(self, c) -> HahnSeries:
        if isinstance(c, HahnSeries):
            if c.field != self.field:
                raise HenselError(f"coefficient {c} is not in {self.field}")
            return c
        if isinstance(c, str):
            return parse_series(c, self.field)
        return self.field.constant(c)

    def is_zero(self, c) -> bool:
        return c.is_exact_zero()

    def valuation(self, c):
        return c.valuation()

    def residual(self, c):
        """v(c), or the precision marker when c is zero to precision."""
        if c.terms or c.exact:
            return c.valuation()
        return c.precision

    def zero_valuation(self):
        return self.field.group.zero()

    def times_int(self, c, k: int):
        return c.scale(k)

    def precision(self, value):
        return self.field.exponent(value)

    def exact_part(self, c: HahnSeries) -> HahnSeries:
        return HahnSeries.build(self.field, c.terms)

    def truncate(self, c: HahnSeries, precision) -> HahnSeries:
        return c.truncate(precision)

    def residue_start(self, a: HahnSeries) -> HahnSeries:
        return self.field.constant(-residue(a))

    def format(self, c) -> str:
        return str(c)


@dataclass(frozen=True)
class PAdicDomain:
    """Q with the p-adic valuation; elements are Fractions."""
    p: int
    truncating = False

    def __post_init__(self):
        if not isprime(self.p):
            raise HenselError(f"{self.p} is not prime")

    def __str__(self):
        return f"Q_{self.p}"

    def zero(self):
        return Fraction(0)

    def one(self):
        return Fraction(1)

    def coerce(self, c) -> Fraction:
        try:
            return Fraction(c)
        except (TypeError, ValueError) as e:
            raise HenselError(f"{c!r} is not a rational number") from e

    def is_zero(self, c) -> bool:
        return c == 0

    def valuation(self, c):
        if c == 0:
            return INF
        return multiplicity(self.p, c.numerator) - multiplicity(self.p, c.denominator)

    def residual(self, c):
        return self.valuation(c)

    def zero_valuation(self):
        return 0

    def times_int(self, c, k: int):
        return c * k

    def precision(self, value):
        return int(value)

    def exact_part(self, c):
        return c

    def truncate(self, c, precision):
        return c

    def residue_start(self, a: Fraction) -> Fraction:
        return -a

    def format(self, c) -> str:
        return str(c)


PADIC_PATTERN = re.compile(r"^\s*(?:Q_(\d+)|Qp\((\d+)\))\s*$")


def parse_domain(text: str):
    """``Q_5`` / ``Qp(5)`` for p-adic rationals, otherwise a Hahn field descriptor."""
    m = PADIC_PATTERN.match(text)
    if m:
        return PAdicDomain(int(m.group(1) or m.group(2)))
    return SeriesDomain(parse_field(text))


# -- univariate polynomials --------------------------------------------------------

@dataclass(frozen=True)
class UniPoly:
    domain: Any
    coeffs: Tuple[Any, ...]
    variable: str = "X"

    @classmethod
    def build(cls, domain, coeffs: Sequence[Any], variable: str = "X") -> "UniPoly":
        cs = [domain.coerce(c) for c in coeffs]
        while cs and domain.is_zero(cs[-1]):
            cs.pop()
        return cls(domain, tuple(cs), variable)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self):
        if not self.coeffs:
            raise HenselError("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def is_monic(self) -> bool:
        return bool(self.coeffs) and self.leading == self.domain.one()

    def coefficient(self, i: int):
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else self.domain.zero()

    def evaluate(self, x):
        x = self.domain.coerce(x)
        out = self.domain.zero()
        for c in reversed(self.coeffs):
            out = out * x + c
        return out

    def derivative(self) -> "UniPoly":
        return UniPoly.build(self.domain, [self.domain.times_int(c, i) for i, c in enumerate(self.coeffs)][1:],
                             self.variable)

    def _same(self, other: "UniPoly"):
        if not isinstance(other, UniPoly) or other.domain != self.domain:
            raise HenselError(f"carrier mismatch: {getattr(other, 'domain', other)} vs {self.domain}")

    def add(self, other: "UniPoly") -> "UniPoly":
        self._same(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return UniPoly.build(self.domain, [self.coefficient(i) + other.coefficient(i) for i in range(n)],
                             self.variable)

    def mul(self, other: "UniPoly") -> "UniPoly":
        self._same(other)
        if not self.coeffs or not other.coeffs:
            return UniPoly.build(self.domain, [], self.variable)
        out = [self.domain.zero()] * (len(self.coeffs) + len(other.coeffs) - 1)
        for (i, a), (j, b) in itertools.product(enumerate(self.coeffs), enumerate(other.coeffs)):
            out[i + j] = out[i + j] + a * b
        return UniPoly.build(self.domain, out, self.variable)

    def __str__(self):
        return format_poly(self)


BARE_COEFFICIENT = re.compile(r"\d+(\/\d+)?|t(\^(-?\d+|\([^()]*\)))?")


def _coefficient_text(domain, c) -> Tuple[str, str, bool]:
    """(sign, text, is_one) for a coefficient printed in front of X^k."""
    text = domain.format(c)
    if isinstance(c, HahnSeries):
        if len(c.terms) == 1 and c.exact:
            sign = "-" if text.startswith("-") else "+"
            body = text[1:] if sign == "-" else text
            if BARE_COEFFICIENT.fullmatch(body):
                return sign, body, body == "1"
        return "+", f"({text})", False
    sign = "-" if c < 0 else "+"
    body = str(abs(c))
    return sign, body, body == "1"


def format_poly(f: UniPoly) -> str:
    if not f.coeffs:
        return "0"
    pieces = []
    for k in range(f.degree, -1, -1):
        c = f.coeffs[k]
        if f.domain.is_zero(c):
            continue
        sign, body, is_one = _coefficient_text(f.domain, c)
        power = "" if k == 0 else (f.variable if k == 1 else f"{f.variable}^{k}")
        if not power:
            text = body
        elif is_one:
            text = power
        else:
            text = f"{body}*{power}"
        pieces.append((sign, text))
    out = pieces[0][1] if pieces[0][0] == "+" else f"-{pieces[0][1]}"
    for sign, text in pieces[1:]:
        out += f" {sign} {text}"
    return out


POLY_GRAMMAR = r"""
start: [ADDOP] pterm (ADDOP pterm)*
?pterm: coeff "*" xpow -> scaled
      | xpow -> bare
      | coeff -> const
coeff: SERIES | NUMBER | TMONO
xpow: "X" ("^" INT)?
SERIES: /\((?:[^()]|\((?:[^()]|\([^()]*\))*\))*\)/
NUMBER: /\d+(\/\d+)?/
TMONO: /t(\^(-?\d+|\([^()]*\)))?/
ADDOP: /[+-]/
%import common.INT
%import common.WS
%ignore WS
"""


class PolyBuilder(Transformer):
    def __init__(self, domain):
        super().__init__()
        self.domain = domain

    def coeff(self, children):
        text = str(children[0])
        if text.startswith("("):
            text = text[1:-1]
        return self.domain.coerce(text) if isinstance(self.domain, SeriesDomain) else self.domain.coerce(Fraction(text))

    def xpow(self, children):
        return int(children[0]) if children else 1

    def scaled(self, children):
        return (children[1], children[0])

    def bare(self, children):
        return (children[0], self.domain.one())

    def const(self, children):
        return (0, children[0])

    def start(self, children):
        coeffs: Dict[int, Any] = {}
        sign = "+"
        for child in children:
            if child is None:
                continue
            if isinstance(child, Token):
                sign = str(child)
                continue
            k, c = child
            coeffs[k] = coeffs.get(k, self.domain.zero()) + (c if sign == "+" else -c)
            sign = "+"
        degree = max(coeffs, default=0)
        return UniPoly.build(self.domain, [coeffs.get(i, self.domain.zero()) for i in range(degree + 1)])


poly_parser = Lark(POLY_GRAMMAR, start="start", parser="earley")


def parse_poly(text: str, domain) -> UniPoly:
    return run_transformer(poly_parser, PolyBuilder(domain), text, HenselError)


# -- multivariate polynomials over Q --------------------------------------------------

@dataclass(frozen=True)
class MultiPoly:
    poly: Poly

    @classmethod
    def from_expr(cls, expr, gens: Sequence[sympy.Symbol]) -> "MultiPoly":
        return cls(Poly(expr, *gens, domain=QQ))

    @property
    def gens(self) -> Tuple[sympy.Symbol, ...]:
        return self.poly.gens

    def terms(self) -> Dict[Tuple[int, ...], Rational]:
        return dict(self.poly.terms())

    def is_zero(self) -> bool:
        return self.poly.is_zero

    def evaluate(self, point: Mapping[sympy.Symbol, Any]):
        value = self.poly.as_expr().subs({k: Rational(str(v)) for k, v in point.items()})
        return sympy.expand(value)

    def derivative(self, var: sympy.Symbol) -> "MultiPoly":
        return MultiPoly(self.poly.diff(var))

    def _same(self, other: "MultiPoly"):
        if not isinstance(other, MultiPoly) or other.gens != self.gens:
            raise HenselError("carrier mismatch between multivariate polynomials")

    def add(self, other: "MultiPoly") -> "MultiPoly":
        self._same(other)
        return MultiPoly(self.poly + other.poly)

    def mul(self, other: "MultiPoly") -> "MultiPoly":
        self._same(other)
        return MultiPoly(self.poly * other.poly)

    def __str__(self):
        return str(self.poly.as_expr()).replace("**", "^")


def parse_multipoly(text: str, variables: Sequence[str]) -> MultiPoly:
    """Polynomial over Q; algebraic constants enter as a variable tied down by its minimal polynomial."""
    gens = symbols(list(variables))
    local = {str(s): s for s in gens}
    try:
        expr = parse_expr(text.replace("^", "**"), local_dict=local, transformations=standard_transformations)
        return MultiPoly.from_expr(expr, gens)
    except CoercionFailed as e:
        raise HenselError(f"polynomial {text!r} has a non-rational coefficient; coefficients must lie in Q, "
                          f"so write an algebraic constant as a variable with its minimal polynomial") from e
    except (SyntaxError, TypeError, sympy.PolynomialError, sympy.SympifyError) as e:
        raise HenselError(f"polynomial {text!r} not understood over {', '.join(variables)}: {e}") from e


def jacobian_matrix(G: Sequence[MultiPoly]) -> Matrix:
    gens = G[0].gens
    n = len(G)
    if any(g.gens != gens for g in G) or len(gens) != n:
        raise HenselError(f"a Jacobian needs {n} polynomials in {n} shared variables")
    return Matrix(n, n, lambda i, j: G[i].poly.diff(gens[j]).as_expr())


def jacobian_determinant(G: Sequence[MultiPoly]):
    return sympy.expand(jacobian_matrix(G).det())


def jacobian(G: Sequence[MultiPoly], point: Sequence[Any]):
    gens = G[0].gens
    if len(point) != len(gens):
        raise HenselError(f"point has {len(point)} coordinates, expected {len(gens)}")
    subs = {g: Rational(str(v)) for g, v in zip(gens, point)}
    return jacobian_matrix(G).subs(subs).det()


def resultant(p: MultiPoly, q: MultiPoly, var: sympy.Symbol) -> MultiPoly:
    if p.poly.is_ground and q.poly.is_ground:
        raise HenselError("resultant of two constants")
    res = sympy.resultant(p.poly.as_expr(), q.poly.as_expr(), var)
    gens = tuple(g for g in p.gens if g != var)
    if not gens:
        return res
    return MultiPoly.from_expr(res, gens)


def poly_ops(op: str, *args):
    """add, mul, eval, derivative, resultant or jacobian on uni- or multivariate polynomials."""
    if op == "add":
        return args[0].add(args[1])
    if op == "mul":
        return args[0].mul(args[1])
    if op == "eval":
        target, point = args
        if isinstance(target, UniPoly):
            return target.evaluate(point)
        return target.evaluate(dict(zip(target.gens, point)))
    if op == "derivative":
        target = args[0]
        if isinstance(target, UniPoly):
            return target.derivative()
        return target.derivative(args[1])
    if op == "resultant":
        return resultant(*args)
    if op == "jacobian":
        return jacobian(*args)
    raise HenselError(f"unknown polynomial operation {op!r}")


# -- Newton lifting -------------------------------------------------------------------

@dataclass
class LiftCertificate:
    iterations: int
    initial_residual: Any
    derivative_valuation: Any
    final_residual: Any
    approximation: Any
    residuals: List[Any] = field(default_factory=list)
    deltas: List[Any] = field(default_factory=list)
    iterates: List[str] = field(default_factory=list)
    doubling_holds: bool = True

    def to_json(self) -> Dict[str, Any]:
        return {
            "iterations": self.iterations,
            "initial_residual": str(self.initial_residual),
            "derivative_valuation": str(self.derivative_valuation),
            "final_residual": str(self.final_residual),
            "approximation": str(self.approximation),
            "residuals": [str(r) for r in self.residuals],
            "deltas": [str(d) for d in self.deltas],
            "iterates": self.iterates,
            "doubling_holds": self.doubling_holds,
        }


def _check_input_precision(f: UniPoly, prec):
    if not isinstance(f.domain, SeriesDomain):
        return
    for c in f.coeffs:
        if not c.exact and c.precision < prec:
            raise HenselError(f"coefficient {c} is only known to t^{c.precision}, below the requested {prec}")


def _residual(dom, fa, prec):
    r = dom.residual(fa)
    if dom.truncating and not fa.terms and not fa.exact and r < prec:
        raise HenselError(f"f(a) = {fa} is only known to t^{r}, below the requested {prec}")
    return r


def _doubling(residuals, deltas, prec) -> bool:
    for n in range(1, len(deltas)):
        if residuals[n] == INF or not residuals[n] < prec:
            continue
        if deltas[n] < 2 * deltas[n - 1]:
            return False
    return True


def newton_lift(f: UniPoly, a0, prec, max_iterations: int = MAX_NEWTON_STEPS) -> Tuple[Any, LiftCertificate]:
    """Iterate a <- a - f(a)/f'(a) until v(f(a)) >= prec.

    Over Hahn fields the quotient is computed to 2v(f(a)) - 3v(f'(a)) (capped
    by prec - v(f'(a0))) and its known part is subtracted, so iterates stay
    exact series; the answer is returned to precision prec - v(f'(a0)).
    """
    dom = f.domain
    prec = dom.precision(prec)
    _check_input_precision(f, prec)
    df = f.derivative()
    a = dom.coerce(a0)
    fa, dfa = f.evaluate(a), df.evaluate(a)
    r0, d0 = _residual(dom, fa, prec), dom.valuation(dfa)
    if d0 == INF:
        raise HenselError(f"f'(a0) = 0 at a0 = {dom.format(a)}")
    if r0 != INF and not 2 * d0 < r0:
        raise HenselError(f"Hensel hypothesis fails: v(f(a0)) = {r0} is not above 2*v(f'(a0)) = {2 * d0}")
    residuals, deltas, iterates = [r0], [], [dom.format(a)]
    r, d = r0, d0
    steps = 0
    logger.debug(f"🔍 Lifting {f} from {dom.format(a)}: v(f) = {r0}, v(f') = {d0}")
    while r != INF and r < prec:
        if steps >= max_iterations:
            raise HenselError(f"no precision {prec} after {max_iterations} Newton steps")
        deltas.append(r - 2 * d)
        if dom.truncating:
            target = min(2 * r - 3 * d, prec - d0)
            q = dom.exact_part(fa.divide(dfa, target))
        else:
            q = fa / dfa
        a = a - q
        fa, dfa = f.evaluate(a), df.evaluate(a)
        r, d = _residual(dom, fa, prec), dom.valuation(dfa)
        if d == INF:
            raise HenselError(f"f' vanishes at iterate {dom.format(a)}")
        steps += 1
        residuals.append(r)
        iterates.append(dom.format(a))
    deltas.append(INF if r == INF else r - 2 * d)
    approx = dom.truncate(a, prec - d0) if dom.truncating else a
    cert = LiftCertificate(steps, r0, d0, r, approx, residuals, deltas, iterates,
                           _doubling(residuals, deltas, prec))
    if not cert.doubling_holds:
        logger.error(f"❌ Residual gap stopped doubling while lifting {f}")
    logger.info(f"✅ Lift reached precision {prec} after {steps} steps")
    return approx, cert


def hensel_form_check(f: UniPoly) -> bool:
    """f = X^n + aX^(n-1) + sum c_i X^i with v(a) = 0 and every v(c_i) > 0."""
    if not f.is_monic():
        raise HenselError(f"{f} is not monic")
    dom = f.domain
    n = f.degree
    if n < 1:
        return False
    zero = dom.zero_valuation()
    if dom.valuation(f.coeffs[n - 1]) != zero:
        return False
    for c in f.coeffs[:n - 1]:
        v = dom.residual(c)
        if v != INF and not zero < v:
            return False
    return True


def residue_start(f: UniPoly):
    """The simple residue root -res(a) of a polynomial in Hensel form."""
    if not hensel_form_check(f):
        raise HenselError(f"{f} is not in Hensel form")
    return f.domain.residue_start(f.coeffs[f.degree - 1])


# -- conjugate polynomial ----------------------------------------------------------------

@dataclass(frozen=True)
class ConjugateForm:
    minpoly: MultiPoly
    g: MultiPoly
    G: Tuple[MultiPoly, ...]
    verified: bool

    @property
    def degree(self) -> int:
        return len(self.G)

    def to_json(self) -> Dict[str, Any]:
        return {"minpoly": str(self.minpoly), "g": str(self.g), "G": [str(p) for p in self.G],
                "verified": self.verified}


def parse_minpoly(text: str) -> MultiPoly:
    return parse_multipoly(ALPHA_ALIASES.get(text.strip(), text), ["Z"])


def conjugate_form(minpoly: MultiPoly, assert_irreducible: bool = False) -> ConjugateForm:
    """g = prod_i (Y - sum_j alpha_i^j X_j) as resultant_Z(minpoly, Y - sum_j Z^j X_j)."""
    m = minpoly.poly
    if len(m.gens) != 1:
        raise HenselError("the minimal polynomial must be univariate")
    n = m.degree()
    if n < 2:
        raise HenselError(f"degree {n} < 2: alpha would be rational")
    if m.LC() != 1:
        raise HenselError(f"{minpoly} is not monic")
    if n <= 3:
        roots = m.ground_roots()
        if roots:
            raise HenselError(f"{minpoly} is reducible over Q (rational root {next(iter(roots))})")
    elif not assert_irreducible:
        raise HenselError(f"irreducibility of a degree-{n} polynomial is not checked; pass --assert-irreducible")
    z = m.gens[0]
    xs = symbols(f"X0:{n}")
    y = sympy.Symbol("Y")
    linear = y - sum(z ** j * xs[j] for j in range(n))
    res = sympy.expand(sympy.resultant(m.as_expr(), linear, z))
    g_poly = Poly(res, y)
    g_expr = sympy.expand(res / g_poly.LC())
    g = MultiPoly.from_expr(g_expr, (*xs, y))
    in_y = Poly(g_expr, y)
    G = tuple(MultiPoly.from_expr(in_y.coeff_monomial(y ** j), xs) for j in range(n))
    # g vanishes at every conjugate iff minpoly divides g(X, sum Z^j X_j) in Q[X][Z]
    defect = sympy.rem(sympy.expand(g_expr.subs(y, sum(z ** j * xs[j] for j in range(n)))), m.as_expr(), z)
    verified = sympy.expand(defect) == 0
    if not verified:
        logger.error(f"❌ Conjugate form for {minpoly} failed the divisibility check")
    return ConjugateForm(minpoly, g, G, verified)


def no_root_check(form: ConjugateForm, c: Sequence[Any]) -> bool:
    """True iff g(c, Y) has no rational root."""
    n = form.degree
    if len(c) != n:
        raise HenselError(f"c needs {n} coordinates")
    if all(Fraction(str(v)) == 0 for v in c[1:]):
        logger.warning(f"⚠️ c = {tuple(c)} has no nonzero coordinate beyond X0; g(c, Y) = (Y - c0)^{n}")
    xs, y = form.g.gens[:-1], form.g.gens[-1]
    specialized = form.g.poly.as_expr().subs({x: Rational(str(v)) for x, v in zip(xs, c)})
    return not Poly(specialized, y, domain=QQ).ground_roots()


def _spiral_key(point: Tuple[int, ...]):
    return (max(map(abs, point)), sum(map(abs, point)), tuple(-abs(x) for x in point), tuple(x < 0 for x in point))


def spiral_points(n: int, radius: int) -> List[Tuple[int, ...]]:
    """Z^n points with |coords| <= radius: (0,..), (1,0,..), (-1,0,..), (0,1,0,..), ..."""
    return sorted(itertools.product(range(-radius, radius + 1), repeat=n), key=_spiral_key)


def find_nonvanishing_point(G: Sequence[MultiPoly], radius: int = SPIRAL_RADIUS) -> Tuple[int, ...]:
    det = jacobian_determinant(G)
    if det == 0:
        raise HenselError("Jacobian determinant vanishes identically")
    gens = G[0].gens
    for point in spiral_points(len(gens), radius):
        if not any(point[1:]):
            continue
        if det.subs(dict(zip(gens, point))) != 0:
            logger.debug(f"🔍 J_G({point}) != 0")
            return point
    raise HenselError(f"no point with nonzero Jacobian within radius {radius}")
