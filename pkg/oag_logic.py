"""The short language for lexicographic groups: parsing, evaluation, QE.

Atoms are ``t <= t'``, ``t < t'``, ``t = t'``, ``cong(t, n, rep)`` (t is
congruent to rep modulo n*Gamma) and ``in_H(t, k)`` (t lies in Delta_k), where
terms are Z-linear forms with a group-element constant.

Quantifier elimination works one quantifier at a time, innermost first.  A
lex atom splits into coordinate atoms (``u_i > 0``, ``u_i = 0``, ``u_i in
m*G_i``), each living in a single archimedean component; the quantified
variable is eliminated per component (Cooper for Z, dense-order elimination
with finitely many residue classes for Zloc, Q and Quad), and the surviving
coordinate atoms are folded back into group atoms.  A coordinate order atom
on u always travels with the atoms ``u_j = 0`` for j < i, so folding it back
as ``in_H(u, i) /\\ ~in_H(u, i+1) /\\ 0 < u`` is exact inside its clause.
"""
import itertools
import logging
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from lark import Lark, Token

from errors import FormulaError, ResourceLimitError, UnsupportedError
from oag import (ELEMENT_RULES, INT, INT_LOC, QUAD, RAT, ConvexSubgroup, ElementTransformer,
                 GroupDescriptor, GroupElement, Ordering, format_element, k_alpha, quotient,
                 residue_representatives, run_transformer)

logger = logging.getLogger(__name__)

DEFAULT_DNF_CAP = 100_000
QUAD_RESIDUE_BUDGET = 1024


def default_dnf_cap() -> int:
    return int(os.getenv("VALKIT_DNF_CAP", str(DEFAULT_DNF_CAP)))


# -- terms -------------------------------------------------------------------

@dataclass(frozen=True)
class Term:
    coeffs: Tuple[Tuple[str, int], ...]
    const: GroupElement

    @classmethod
    def build(cls, coeffs: Dict[str, int], const: GroupElement) -> "Term":
        return cls(tuple(sorted((v, k) for v, k in coeffs.items() if k)), const)

    @classmethod
    def variable(cls, name: str, group: GroupDescriptor, k: int = 1) -> "Term":
        return cls.build({name: k}, group.zero())

    @classmethod
    def constant(cls, element: GroupElement) -> "Term":
        return cls((), element)

    @classmethod
    def zero(cls, group: GroupDescriptor) -> "Term":
        return cls((), group.zero())

    @property
    def group(self) -> GroupDescriptor:
        return self.const.group

    @property
    def variables(self) -> FrozenSet[str]:
        return frozenset(v for v, _ in self.coeffs)

    @property
    def is_constant(self) -> bool:
        return not self.coeffs

    def coeff(self, var: str) -> int:
        return dict(self.coeffs).get(var, 0)

    def __add__(self, other: "Term") -> "Term":
        merged = dict(self.coeffs)
        for v, k in other.coeffs:
            merged[v] = merged.get(v, 0) + k
        return Term.build(merged, self.const + other.const)

    def scale(self, k: int) -> "Term":
        return Term.build({v: c * k for v, c in self.coeffs}, self.const.scale(k))

    def __neg__(self) -> "Term":
        return self.scale(-1)

    def __sub__(self, other: "Term") -> "Term":
        return self + (-other)

    def shift(self, element: GroupElement) -> "Term":
        return Term(self.coeffs, self.const + element)

    def drop(self, var: str) -> "Term":
        return Term(tuple((v, k) for v, k in self.coeffs if v != var), self.const)

    def substitute(self, var: str, term: "Term") -> "Term":
        k = self.coeff(var)
        if not k:
            return self
        return self.drop(var) + term.scale(k)

    def evaluate(self, sigma: Dict[str, GroupElement]) -> GroupElement:
        value = self.const
        for v, k in self.coeffs:
            if v not in sigma:
                raise FormulaError(f"unassigned variable {v}")
            value = value + sigma[v].scale(k)
        return value

    def __str__(self):
        return format_term(self)


# -- formulas ----------------------------------------------------------------

@dataclass(frozen=True)
class Rel:
    op: str          # "<", "<=", "="
    left: Term
    right: Term


@dataclass(frozen=True)
class Cong:
    term: Term
    modulus: int
    rep: GroupElement


@dataclass(frozen=True)
class InH:
    term: Term
    index: int


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    parts: Tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    parts: Tuple["Formula", ...]


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"


Formula = Union[Rel, Cong, InH, Const, Not, And, Or, Exists, Forall]
ATOMS = (Rel, Cong, InH)
TRUE = Const(True)
FALSE = Const(False)


def conj(parts: Iterable[Formula]) -> Formula:
    parts = tuple(parts)
    return parts[0] if len(parts) == 1 else (And(parts) if parts else TRUE)


def disj(parts: Iterable[Formula]) -> Formula:
    parts = tuple(parts)
    return parts[0] if len(parts) == 1 else (Or(parts) if parts else FALSE)


def atom_terms(atom) -> Tuple[Term, ...]:
    if isinstance(atom, Rel):
        return (atom.left, atom.right)
    return (atom.term,)


def formula_variables(f: Formula) -> FrozenSet[str]:
    """Variables occurring in terms (free or bound)."""
    if isinstance(f, ATOMS):
        return frozenset().union(*(t.variables for t in atom_terms(f)))
    if isinstance(f, Not):
        return formula_variables(f.body)
    if isinstance(f, (And, Or)):
        return frozenset().union(*(formula_variables(p) for p in f.parts)) if f.parts else frozenset()
    if isinstance(f, (Exists, Forall)):
        return formula_variables(f.body) | {f.var}
    return frozenset()


def free_variables(f: Formula) -> FrozenSet[str]:
    if isinstance(f, ATOMS):
        return formula_variables(f)
    if isinstance(f, Not):
        return free_variables(f.body)
    if isinstance(f, (And, Or)):
        return frozenset().union(*(free_variables(p) for p in f.parts)) if f.parts else frozenset()
    if isinstance(f, (Exists, Forall)):
        return free_variables(f.body) - {f.var}
    return frozenset()


def is_quantifier_free(f: Formula) -> bool:
    if isinstance(f, (Exists, Forall)):
        return False
    if isinstance(f, Not):
        return is_quantifier_free(f.body)
    if isinstance(f, (And, Or)):
        return all(is_quantifier_free(p) for p in f.parts)
    return True


def check_formula(f: Formula, g: GroupDescriptor):
    """Bound-once discipline, subgroup indices and carriers."""
    bound: List[str] = []

    def walk(node):
        if isinstance(node, (Exists, Forall)):
            if node.var in bound:
                raise FormulaError(f"variable {node.var} bound twice")
            bound.append(node.var)
            walk(node.body)
        elif isinstance(node, Not):
            walk(node.body)
        elif isinstance(node, (And, Or)):
            for p in node.parts:
                walk(p)
        elif isinstance(node, ATOMS):
            for t in atom_terms(node):
                if t.group != g:
                    raise FormulaError(f"term {t} is not over {g}")
            if isinstance(node, InH) and not 0 <= node.index <= g.rank:
                raise FormulaError(f"unknown subgroup index {node.index} for {g}")
            if isinstance(node, Cong) and node.modulus < 1:
                raise FormulaError("congruence modulus must be positive")

    walk(f)
    clash = free_variables(f) & set(bound)
    if clash:
        raise FormulaError(f"variables both free and bound: {sorted(clash)}")


# -- printing ----------------------------------------------------------------

def _simple_scalar_group(g: GroupDescriptor) -> bool:
    return g.rank == 1 and g.components[0].kind in (INT, INT_LOC, RAT)


def _format_constant(c: GroupElement) -> Tuple[str, str]:
    if _simple_scalar_group(c.group):
        q = c.coords[0]
        return ("-" if q < 0 else "+"), str(abs(q))
    return "+", format_element(c)


def format_term(t: Term) -> str:
    pieces = []
    for var, k in t.coeffs:
        mag = "" if abs(k) == 1 else f"{abs(k)}*"
        pieces.append(("-" if k < 0 else "+", f"{mag}{var}"))
    if not t.const.is_zero() or not pieces:
        pieces.append(_format_constant(t.const))
    out = ""
    for i, (sign, text) in enumerate(pieces):
        if i == 0:
            out = text if sign == "+" else f"-{text}"
        else:
            out += f" {sign} {text}"
    return out


def _format_rep(rep: GroupElement) -> str:
    if _simple_scalar_group(rep.group) and rep.coords[0] >= 0:
        return str(rep.coords[0])
    return format_element(rep)


def format_formula(f: Formula) -> str:
    if isinstance(f, Rel):
        return f"{format_term(f.left)} {f.op} {format_term(f.right)}"
    if isinstance(f, Cong):
        return f"cong({format_term(f.term)},{f.modulus},{_format_rep(f.rep)})"
    if isinstance(f, InH):
        return f"in_H({format_term(f.term)},{f.index})"
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Not):
        return "~" + _wrapped(f.body)
    if isinstance(f, And):
        return " /\\ ".join(_wrapped(p) for p in f.parts) if f.parts else "true"
    if isinstance(f, Or):
        return " \\/ ".join(_wrapped(p) for p in f.parts) if f.parts else "false"
    kw = "exists" if isinstance(f, Exists) else "forall"
    return f"{kw} {f.var}. {format_formula(f.body)}"


def _wrapped(f: Formula) -> str:
    text = format_formula(f)
    if isinstance(f, (And, Or, Exists, Forall)) and not (isinstance(f, (And, Or)) and not f.parts):
        return f"({text})"
    return text


# -- parsing -----------------------------------------------------------------

FORMULA_GRAMMAR = r"""
start: formula
?formula: quantified | disj
quantified: QUANT NAME "." formula
?disj: conj (_OR conj)*
?conj: unary (_AND unary)*
?unary: _NOT unary -> negation
      | "(" formula ")"
      | atom
?atom: term REL term -> relation
     | "cong" "(" term "," INT "," constant ")" -> congruence
     | "in_H" "(" term "," INT ")" -> in_h
     | "true" -> true_const
     | "false" -> false_const
term: [ADDOP] item (ADDOP item)*
?item: INT "*" NAME -> scaled
     | NAME -> var
     | constant
?constant: element | number
number: INT (SLASH INT)?
QUANT: "exists" | "forall"
NAME: /(?!(?:exists|forall|cong|true|false|sqrt)\b)[a-z][a-z0-9]*/
REL: /<=|>=|!=|<|>|=/
ADDOP: /[+-]/
_AND: "/\\"
_OR: "\\/"
_NOT: "~"
""" + ELEMENT_RULES


class FormulaBuilder(ElementTransformer):
    def __init__(self, group: GroupDescriptor):
        super().__init__()
        self.group = group

    def to_constant(self, raw) -> GroupElement:
        if isinstance(raw, list):
            return self.group.element(raw)
        if raw == 0:
            return self.group.zero()
        if self.group.rank == 1:
            return self.group.element([raw])
        raise FormulaError(f"bare number {raw} needs an element literal in {self.group}")

    def number(self, children):
        return Fraction("".join(str(c) for c in children))

    def scaled(self, children):
        return ("var", str(children[1]), int(children[0]))

    def var(self, children):
        return ("var", str(children[0]), 1)

    def term(self, children):
        coeffs: Dict[str, int] = {}
        const = self.group.zero()
        sign = 1
        for child in children:
            if child is None:
                continue
            if isinstance(child, Token) and child.type == "ADDOP":
                sign = -1 if str(child) == "-" else 1
                continue
            if isinstance(child, tuple) and child[0] == "var":
                coeffs[child[1]] = coeffs.get(child[1], 0) + sign * child[2]
            else:
                const = const + self.to_constant(child).scale(sign)
            sign = 1
        return Term.build(coeffs, const)

    def relation(self, children):
        left, op, right = children
        op = str(op)
        if op == ">=":
            return Rel("<=", right, left)
        if op == ">":
            return Rel("<", right, left)
        if op == "!=":
            return Not(Rel("=", left, right))
        return Rel(op, left, right)

    def congruence(self, children):
        term, modulus, rep = children
        if int(modulus) < 1:
            raise FormulaError("congruence modulus must be positive")
        return Cong(term, int(modulus), self.to_constant(rep))

    def in_h(self, children):
        term, index = children
        if int(index) > self.group.rank:
            raise FormulaError(f"unknown subgroup index {index} for {self.group}")
        return InH(term, int(index))

    def true_const(self, children):
        return TRUE

    def false_const(self, children):
        return FALSE

    def negation(self, children):
        return Not(children[0])

    def conj(self, children):
        return And(tuple(children))

    def disj(self, children):
        return Or(tuple(children))

    def quantified(self, children):
        kw, name, body = children
        return (Exists if str(kw) == "exists" else Forall)(str(name), body)

    def start(self, children):
        return children[0]


formula_parser = Lark(FORMULA_GRAMMAR, start="start", parser="earley")


def parse_formula(text: str, group: GroupDescriptor) -> Formula:
    f = run_transformer(formula_parser, FormulaBuilder(group), text, FormulaError)
    check_formula(f, group)
    return f


# -- semantics ---------------------------------------------------------------

def evaluate(f: Formula, sigma: Dict[str, GroupElement], g: GroupDescriptor) -> bool:
    if isinstance(f, Rel):
        order = f.left.evaluate(sigma).cmp(f.right.evaluate(sigma))
        if f.op == "<":
            return order is Ordering.LESS
        if f.op == "<=":
            return order is not Ordering.GREATER
        return order is Ordering.EQUAL
    if isinstance(f, Cong):
        return (f.term.evaluate(sigma) - f.rep).in_multiple(f.modulus)
    if isinstance(f, InH):
        return ConvexSubgroup(g, f.index).contains(f.term.evaluate(sigma))
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Not):
        return not evaluate(f.body, sigma, g)
    if isinstance(f, And):
        return all(evaluate(p, sigma, g) for p in f.parts)
    if isinstance(f, Or):
        return any(evaluate(p, sigma, g) for p in f.parts)
    raise FormulaError("evaluate needs a quantifier-free formula")


def substitute(f: Formula, sigma: Dict[str, GroupElement]) -> Formula:
    """Replace free variables by constants."""
    if isinstance(f, (Exists, Forall)):
        inner = {v: e for v, e in sigma.items() if v != f.var}
        return type(f)(f.var, substitute(f.body, inner))
    if isinstance(f, Not):
        return Not(substitute(f.body, sigma))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(substitute(p, sigma) for p in f.parts))
    if isinstance(f, Const):
        return f

    def sub(t: Term) -> Term:
        for v, e in sigma.items():
            t = t.substitute(v, Term.constant(e))
        return t

    if isinstance(f, Rel):
        return Rel(f.op, sub(f.left), sub(f.right))
    if isinstance(f, Cong):
        return Cong(sub(f.term), f.modulus, f.rep)
    return InH(sub(f.term), f.index)


def _ground_truth(f, g: GroupDescriptor) -> Optional[bool]:
    if isinstance(f, ATOMS) and all(t.is_constant for t in atom_terms(f)):
        return evaluate(f, {}, g)
    return None


def simplify(f: Formula, g: GroupDescriptor) -> Formula:
    """Flatten connectives, fold constants, evaluate ground atoms."""
    if isinstance(f, ATOMS):
        truth = _ground_truth(f, g)
        return f if truth is None else Const(truth)
    if isinstance(f, Not):
        body = simplify(f.body, g)
        if isinstance(body, Const):
            return Const(not body.value)
        if isinstance(body, Not):
            return body.body
        return Not(body)
    if isinstance(f, (And, Or)):
        absorbing = isinstance(f, Or)
        parts: List[Formula] = []
        for p in f.parts:
            p = simplify(p, g)
            if isinstance(p, Const):
                if p.value == absorbing:
                    return Const(absorbing)
                continue
            for q in (p.parts if type(p) is type(f) else (p,)):
                if q not in parts:
                    parts.append(q)
        return disj(parts) if absorbing else conj(parts)
    if isinstance(f, (Exists, Forall)):
        body = simplify(f.body, g)
        if isinstance(body, Const) or f.var not in free_variables(body):
            return body
        return type(f)(f.var, body)
    return f


def nnf(f: Formula, negate: bool = False) -> Formula:
    """Push negations onto atoms (quantifier-free input)."""
    if isinstance(f, Const):
        return Const(f.value != negate)
    if isinstance(f, ATOMS):
        return Not(f) if negate else f
    if isinstance(f, Not):
        return nnf(f.body, not negate)
    if isinstance(f, (And, Or)):
        flip = (isinstance(f, And) == negate)
        parts = tuple(nnf(p, negate) for p in f.parts)
        return Or(parts) if flip else And(parts)
    raise FormulaError("nnf expects a quantifier-free formula")


def to_dnf(f: Formula, cap: int) -> List[Tuple[Formula, ...]]:
    """Clauses of literals for an NNF formula; raises once `cap` is exceeded."""
    if isinstance(f, Const):
        return [()] if f.value else []
    if isinstance(f, Or):
        out: List[Tuple[Formula, ...]] = []
        for p in f.parts:
            out.extend(to_dnf(p, cap))
            _check_cap(len(out), cap)
        return out
    if isinstance(f, And):
        out = [()]
        for p in f.parts:
            sub = to_dnf(p, cap)
            _check_cap(len(out) * len(sub), cap)
            out = [tuple(dict.fromkeys(a + b)) for a in out for b in sub]
        return out
    return [(f,)]


def _check_cap(cells: int, cap: int):
    if cells > cap:
        raise ResourceLimitError(f"DNF grew past {cap} cells (raise VALKIT_DNF_CAP or --dnf-cap)")


# -- coordinate atoms ----------------------------------------------------------

POS, ZERO, DIV = "pos", "zero", "div"


@dataclass(frozen=True)
class CoordAtom:
    """u_i > 0, u_i = 0 or u_i in m*G_i for the i-th coordinate of a term u."""
    kind: str
    index: int
    term: Term
    modulus: int = 0

    def truth(self) -> Optional[bool]:
        comp = self.term.group.components[self.index]
        if self.kind == DIV and comp.index(self.modulus) == 1:
            return True
        if not self.term.is_constant:
            return None
        x = self.term.const.coords[self.index]
        if self.kind == POS:
            return comp.sign(x) > 0
        if self.kind == ZERO:
            return comp.is_zero(x)
        return comp.divisible(x, self.modulus)

    def sort_key(self):
        return (self.index, self.kind, format_term(self.term), self.modulus)


Clause = Tuple[CoordAtom, ...]


def _clean(options: Iterable[Iterable[CoordAtom]]) -> List[Clause]:
    """Drop false options and true atoms; sort atoms; dedupe options in order."""
    out: List[Clause] = []
    seen = set()
    for atoms in options:
        kept = set()
        for a in atoms:
            truth = a.truth()
            if truth is False:
                break
            if truth is None:
                kept.add(a)
        else:
            clause = tuple(sorted(kept, key=CoordAtom.sort_key))
            if clause not in seen:
                seen.add(clause)
                out.append(clause)
    return out


def _product(left: List[Clause], right: List[Clause], cap: int) -> List[Clause]:
    _check_cap(len(left) * len(right), cap)
    return _clean(a + b for a in left for b in right)


def _lex_positive(u: Term, strict: bool) -> List[Clause]:
    n = u.group.rank
    options = [[CoordAtom(ZERO, j, u) for j in range(i)] + [CoordAtom(POS, i, u)] for i in range(n)]
    if not strict:
        options.append([CoordAtom(ZERO, j, u) for j in range(n)])
    return _clean(options)


def _nonzero_coordinate(u: Term, j: int) -> List[Clause]:
    prefix = [CoordAtom(ZERO, l, u) for l in range(j)]
    return _clean([prefix + [CoordAtom(POS, j, u)], prefix + [CoordAtom(POS, j, -u)]])


def decompose_literal(lit: Formula, g: GroupDescriptor) -> List[Clause]:
    """Coordinate-level DNF of a group literal."""
    negated = isinstance(lit, Not)
    atom = lit.body if negated else lit
    if isinstance(atom, Rel):
        u = atom.right - atom.left
        if atom.op == "=":
            if negated:
                return _lex_positive(u, True) + _lex_positive(-u, True)
            return _clean([[CoordAtom(ZERO, j, u) for j in range(g.rank)]])
        strict = atom.op == "<"
        if negated:
            return _lex_positive(-u, not strict)
        return _lex_positive(u, strict)
    if isinstance(atom, Cong):
        u = atom.term.shift(-atom.rep)
        n = atom.modulus
        if not negated:
            return _clean([[CoordAtom(DIV, j, u, n) for j in range(g.rank)]])
        options = []
        for j, comp in enumerate(g.components):
            for r in comp.representatives(n)[1:]:
                options.append([CoordAtom(DIV, j, u.shift(-g.unit(j, r)), n)])
        return _clean(options)
    if isinstance(atom, InH):
        if not negated:
            return _clean([[CoordAtom(ZERO, j, atom.term) for j in range(atom.index)]])
        out: List[Clause] = []
        for j in range(atom.index):
            out.extend(_nonzero_coordinate(atom.term, j))
        return _clean(out)
    raise FormulaError(f"not a literal: {lit}")


def _lcm(values: Iterable[int]) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


def _eliminate_component(x: str, i: int, atoms: Sequence[CoordAtom], g: GroupDescriptor) -> List[Clause]:
    """Exists x_i over the conjunction of coordinate-i atoms that mention x."""
    comp = g.components[i]
    big_l = _lcm(abs(a.term.coeff(x)) for a in atoms)
    lowers: List[Term] = []
    uppers: List[Term] = []
    eqs: List[Term] = []
    congs: List[Tuple[Term, int]] = []
    # Work with X = L*x, so every atom has coefficient +-1 on X.
    for a in atoms:
        k = a.term.coeff(x)
        c = big_l // abs(k)
        s = 1 if k > 0 else -1
        rest = a.term.drop(x).scale(c)
        if a.kind == POS:
            if s > 0:
                lowers.append(-rest)
            else:
                uppers.append(rest)
        elif a.kind == ZERO:
            eqs.append(rest.scale(-s))
        else:
            congs.append((rest.scale(s), a.modulus * c))
    if big_l > 1:
        congs.append((Term.zero(g), big_l))

    if eqs:
        e = eqs[0]
        found = [CoordAtom(ZERO, i, other - e) for other in eqs[1:]]
        found += [CoordAtom(POS, i, e - a) for a in lowers]
        found += [CoordAtom(POS, i, b - e) for b in uppers]
        found += [CoordAtom(DIV, i, e + r, m) for r, m in congs]
        return _clean([found])

    if comp.kind == INT:
        period = _lcm(m for _, m in congs)
        if lowers:
            options = []
            for a in lowers:
                for j in range(1, period + 1):
                    cand = a.shift(g.unit(i, j))
                    found = [CoordAtom(POS, i, cand - other) for other in lowers]
                    found += [CoordAtom(POS, i, b - cand) for b in uppers]
                    found += [CoordAtom(DIV, i, cand + r, m) for r, m in congs]
                    options.append(found)
            return _clean(options)
        return _clean([[CoordAtom(DIV, i, r.shift(g.unit(i, j)), m) for r, m in congs]
                       for j in range(1, period + 1)])

    # Zloc, Q and Quad are dense and every coset of D*G_i is dense in G_i.
    order_atoms = [CoordAtom(POS, i, b - a) for a in lowers for b in uppers]
    if not congs or comp.kind == RAT:
        return _clean([order_atoms])
    period = _lcm(m for _, m in congs)
    reps = comp.representatives(period)
    if comp.kind == QUAD and len(reps) > QUAD_RESIDUE_BUDGET:
        raise UnsupportedError(
            f"Quad congruence elimination needs {len(reps)} residue classes (budget {QUAD_RESIDUE_BUDGET})")
    return _clean([order_atoms + [CoordAtom(DIV, i, r.shift(g.unit(i, rho)), m) for r, m in congs]
                   for rho in reps])


def _eliminate_clause(x: str, clause: Clause, g: GroupDescriptor, cap: int) -> List[Clause]:
    result: List[Clause] = [tuple(a for a in clause if not a.term.coeff(x))]
    by_component: Dict[int, List[CoordAtom]] = {}
    for a in clause:
        if a.term.coeff(x):
            by_component.setdefault(a.index, []).append(a)
    for i in sorted(by_component):
        result = _product(result, _eliminate_component(x, i, by_component[i], g), cap)
        if not result:
            break
    return result


def _split(u: Term) -> Tuple[Term, Term]:
    """(lhs, rhs) with rhs - lhs = u and no negative coefficients on either side."""
    g = u.group
    pos = {v: k for v, k in u.coeffs if k > 0}
    neg = {v: -k for v, k in u.coeffs if k < 0}
    if u.const.sign() < 0:
        return Term.build(neg, -u.const), Term.build(pos, g.zero())
    return Term.build(neg, g.zero()), Term.build(pos, u.const)


def _recompose(atom: CoordAtom, g: GroupDescriptor) -> Formula:
    u, i, n = atom.term, atom.index, g.rank
    if atom.kind == POS:
        parts: List[Formula] = []
        if i > 0:
            parts.append(InH(u, i))
        if i + 1 < n:
            parts.append(Not(InH(u, i + 1)))
        parts.append(Rel("<", *_split(u)))
        return conj(parts)
    if atom.kind == ZERO:
        if i + 1 == n:
            return Rel("=", *_split(u))
        return InH(u, i + 1)
    per_component = [[c.zero()] if j == i else c.representatives(atom.modulus)
                     for j, c in enumerate(g.components)]
    return disj(Cong(u, atom.modulus, GroupElement(g, coords)) for coords in itertools.product(*per_component))


def _eliminate(x: str, phi: Formula, g: GroupDescriptor, cap: int) -> Formula:
    logger.debug(f"🔍 Eliminating {x} over {g}")
    clauses = to_dnf(nnf(simplify(phi, g)), cap)
    decomposed: Dict[Formula, List[Clause]] = {}
    out: List[Formula] = []
    for clause in clauses:
        free = [lit for lit in clause if x not in formula_variables(lit)]
        bound = [lit for lit in clause if x in formula_variables(lit)]
        if not bound:
            out.append(conj(free))
            continue
        coord: List[Clause] = [()]
        for lit in bound:
            if lit not in decomposed:
                decomposed[lit] = decompose_literal(lit, g)
            coord = _product(coord, decomposed[lit], cap)
            if not coord:
                break
        eliminated: List[Clause] = []
        for cc in coord:
            for option in _eliminate_clause(x, cc, g, cap):
                if option not in eliminated:
                    eliminated.append(option)
        _check_cap(len(eliminated), cap)
        folded = disj(conj(_recompose(a, g) for a in option) for option in eliminated)
        out.append(conj(free + [folded]))
    return simplify(disj(out), g)


def _require_decidable(g: GroupDescriptor):
    if g.has_omega:
        raise UnsupportedError(f"quantifier elimination is not available for {g} (Zomega component)")


def qe(f: Formula, g: GroupDescriptor, dnf_cap: Optional[int] = None) -> Formula:
    """Quantifier-free formula equivalent to f over g."""
    _require_decidable(g)
    check_formula(f, g)
    cap = dnf_cap or default_dnf_cap()

    def walk(node: Formula) -> Formula:
        if isinstance(node, Exists):
            return _eliminate(node.var, walk(node.body), g, cap)
        if isinstance(node, Forall):
            inner = _eliminate(node.var, Not(walk(node.body)), g, cap)
            return simplify(Not(inner), g)
        if isinstance(node, Not):
            return Not(walk(node.body))
        if isinstance(node, (And, Or)):
            return type(node)(tuple(walk(p) for p in node.parts))
        return node

    result = simplify(walk(f), g)
    logger.info(f"✅ QE over {g} produced {len(format_formula(result))} characters")
    return result


def decide(sentence: Formula, g: GroupDescriptor, dnf_cap: Optional[int] = None) -> bool:
    free = free_variables(sentence)
    if free:
        raise FormulaError(f"decide needs a sentence; free variables {sorted(free)}")
    return evaluate(qe(sentence, g, dnf_cap), {}, g)


# -- quotient relations ----------------------------------------------------------

@dataclass(frozen=True)
class QuotientAtom:
    """left ⋄ right + k_alpha, read in Gamma/Delta_k."""
    relation: str            # "=", "<", "<=", "cong"
    tail_index: int
    left: Term
    right: Term
    shift: int = 0
    modulus: int = 0


def _quotient_shift(qa: QuotientAtom, g: GroupDescriptor):
    if not 0 <= qa.tail_index <= g.rank:
        raise FormulaError(f"invalid tail index {qa.tail_index} for {g}")
    q = quotient(g, qa.tail_index)
    return q, k_alpha(q, qa.shift)


def rewrite_quotient_atom(qa: QuotientAtom, g: GroupDescriptor) -> Formula:
    q, c = _quotient_shift(qa, g)
    k = qa.tail_index
    rhs = qa.right.shift(c)
    diff = rhs - qa.left
    if qa.relation == "=":
        return InH(diff, k)
    if qa.relation == "<":
        return conj([Rel("<", qa.left, rhs), Not(InH(diff, k))])
    if qa.relation == "<=":
        return disj([InH(diff, k), conj([Rel("<", qa.left, rhs), Not(InH(diff, k))])])
    if qa.relation == "cong":
        m = qa.modulus
        if m < 1:
            raise FormulaError("quotient congruence needs a positive modulus")
        reps = residue_representatives(g, m)
        return disj(conj([Cong(qa.left, m, c1), Cong(qa.right, m, c2)])
                    for c1 in reps for c2 in reps if q.congruent(c1, c2 + c, m))
    raise FormulaError(f"unknown quotient relation {qa.relation!r}")


def evaluate_quotient_atom(qa: QuotientAtom, sigma: Dict[str, GroupElement], g: GroupDescriptor) -> bool:
    """Direct quotient arithmetic; the oracle for rewrite_quotient_atom."""
    q, c = _quotient_shift(qa, g)
    a = qa.left.evaluate(sigma)
    b = qa.right.evaluate(sigma) + c
    if qa.relation == "cong":
        return q.congruent(a, b, qa.modulus)
    order = q.compare(a, b)
    if qa.relation == "=":
        return order is Ordering.EQUAL
    if qa.relation == "<":
        return order is Ordering.LESS
    if qa.relation == "<=":
        return order is not Ordering.GREATER
    raise FormulaError(f"unknown quotient relation {qa.relation!r}")


# -- one-variable normal form ------------------------------------------------------

@dataclass(frozen=True)
class ConvexLeaf:
    formula: Formula
    shape: str                      # ray_up, ray_down, point, coset, below_coset, above_coset
    anchor: Optional[GroupElement] = None


@dataclass
class OneVarNormalForm:
    variable: str
    group: GroupDescriptor
    tree: Formula
    convex_leaves: List[ConvexLeaf]
    congruence_leaves: List[Cong]

    def contains(self, value: GroupElement) -> bool:
        return evaluate(self.tree, {self.variable: value}, self.group)


def normal_form_one_var(f: Formula, g: GroupDescriptor, dnf_cap: Optional[int] = None) -> OneVarNormalForm:
    """qe(f) rebuilt from convex leaves and parameter-free congruence leaves."""
    free = free_variables(f)
    if len(free) != 1:
        raise FormulaError(f"expected exactly one free variable, found {sorted(free)}")
    (x,) = free
    cap = dnf_cap or default_dnf_cap()
    reduced = qe(f, g, cap)
    convex: List[ConvexLeaf] = []
    congruences: List[Cong] = []

    def add_convex(formula: Formula, shape: str, anchor=None) -> Formula:
        leaf = ConvexLeaf(formula, shape, anchor)
        if leaf not in convex:
            convex.append(leaf)
        return formula

    def relation_leaf(rel: Rel) -> Formula:
        u = rel.right - rel.left
        k = u.coeff(x)
        anchor = None
        if abs(k) == 1:
            anchor = -u.const if k == 1 else u.const
        if rel.op == "=":
            return add_convex(rel, "point", anchor)
        return add_convex(rel, "ray_up" if k > 0 else "ray_down", anchor)

    def congruence_leaf(atom: Cong, negated: bool) -> Formula:
        k = atom.term.coeff(x)
        parts = []
        for r in residue_representatives(g, atom.modulus):
            value = atom.term.evaluate({x: r}) - atom.rep
            if value.in_multiple(atom.modulus) != negated:
                leaf = Cong(Term.variable(x, g), atom.modulus, r)
                if leaf not in congruences:
                    congruences.append(leaf)
                parts.append(leaf)
        return disj(parts)

    def leaf(lit: Formula) -> Formula:
        negated = isinstance(lit, Not)
        atom = lit.body if negated else lit
        if isinstance(atom, Rel):
            if not negated:
                return relation_leaf(atom)
            if atom.op == "<":
                return relation_leaf(Rel("<=", atom.right, atom.left))
            if atom.op == "<=":
                return relation_leaf(Rel("<", atom.right, atom.left))
            return disj([relation_leaf(Rel("<", atom.left, atom.right)),
                         relation_leaf(Rel("<", atom.right, atom.left))])
        if isinstance(atom, InH):
            k = atom.term.coeff(x)
            if not negated:
                anchor = None
                if abs(k) == 1:
                    anchor = -atom.term.const if k == 1 else atom.term.const
                return add_convex(atom, "coset", anchor)
            zero = Term.zero(g)
            below = conj([Rel("<", atom.term, zero), lit])
            above = conj([Rel("<", zero, atom.term), lit])
            return disj([add_convex(below, "below_coset" if k > 0 else "above_coset"),
                         add_convex(above, "above_coset" if k > 0 else "below_coset")])
        if isinstance(atom, Cong):
            return congruence_leaf(atom, negated)
        return lit

    clauses = to_dnf(nnf(reduced), cap)
    tree = disj(conj(leaf(lit) for lit in clause) for clause in clauses)
    return OneVarNormalForm(x, g, tree, convex, congruences)
