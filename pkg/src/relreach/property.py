"""Relational reachability properties: parsing, printing and normalization.

Grammar::

    query   := ("exists" | "forall") id ("," id)* "." expr comp expr ["eps" rational]
    expr    := ["+" | "-"] term (("+" | "-") term)*
    term    := rational ["*" prob] | prob
    prob    := "P" "(" id "," stateref "," "F" target ")"
    comp    := ">" | ">=" | "<" | "<=" | "=" | "!=" | "~" | "!~"
    stateref:= label | index
    target  := label | "{" [index ("," index)*] "}"

Probability terms and constants may appear on both sides; everything is
moved to the left, constants to the threshold on the right.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import List, Optional, Tuple

from .model import Mdp

COMPARISONS = (">", ">=", "<", "<=", "=", "!=", "~", "!~")
APPROX = ("~", "!~")
CANONICAL = (">", ">=", "~", "!~")

_COMPLEMENT = {
    ">": "<=",
    ">=": "<",
    "<": ">=",
    "<=": ">",
    "=": "!=",
    "!=": "=",
    "~": "!~",
    "!~": "~",
}


class PropertyError(ValueError):
    def __init__(self, message: str, pos: Optional[int] = None):
        self.pos = pos
        if pos is not None:
            message = f"{message} (at offset {pos})"
        super().__init__(message)


@dataclass(frozen=True)
class Term:
    coeff: Fraction
    sched: int  # 0-based index into the quantified variables
    state: int
    target: frozenset


@dataclass(frozen=True)
class RelReachQuery:
    quantifier: str
    variables: Tuple[str, ...]
    terms: Tuple[Term, ...]
    comp: str
    threshold: Fraction
    eps: Optional[Fraction] = None

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def m(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class NormalizedQuery:
    """Existential query with ``comp`` in ``> >= ~ !~``.

    ``negated`` records that the answer to the source query is the
    complement of this query's answer.
    """

    variables: Tuple[str, ...]
    terms: Tuple[Term, ...]
    comp: str
    threshold: Fraction
    eps: Optional[Fraction]
    negated: bool = False

    quantifier = "exists"

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def m(self) -> int:
        return len(self.terms)


# --- lexer ------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?(?:/\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>>=|<=|!=|!~|[><=~(),.*+\-{}])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> List[Tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if mt is None:
            raise PropertyError(f"unexpected character {text[pos]!r}", pos)
        kind = mt.lastgroup
        if kind != "ws":
            tokens.append((kind, mt.group(), pos))
        pos = mt.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, model: Mdp):
        self.toks = _tokenize(text)
        self.i = 0
        self.model = model

    def peek(self):
        return self.toks[self.i]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.next()
        if text != value or kind == "end":
            shown = text or "end of input"
            raise PropertyError(f"expected {value!r}, found {shown!r}", pos)
        return pos

    def name(self, what: str) -> Tuple[str, int]:
        kind, text, pos = self.next()
        if kind != "name":
            raise PropertyError(f"expected {what}, found {text or 'end of input'!r}", pos)
        return text, pos

    def rational(self) -> Fraction:
        kind, text, pos = self.next()
        if kind != "num":
            raise PropertyError(f"expected a number, found {text or 'end of input'!r}", pos)
        try:
            return Fraction(text)
        except ZeroDivisionError:
            raise PropertyError("division by zero in rational literal", pos)

    def parse(self) -> RelReachQuery:
        quant, pos = self.name("'exists' or 'forall'")
        if quant not in ("exists", "forall"):
            raise PropertyError(f"expected 'exists' or 'forall', found {quant!r}", pos)
        variables: List[str] = []
        while True:
            var, vpos = self.name("a scheduler variable")
            if var in variables:
                raise PropertyError(f"scheduler variable {var!r} declared twice", vpos)
            variables.append(var)
            if self.peek()[1] == ",":
                self.next()
                continue
            break
        self.expect(".")
        self.variables = variables
        lhs_terms, lhs_const = self.expr()
        kind, comp, cpos = self.next()
        if comp not in COMPARISONS or kind != "op":
            raise PropertyError(f"expected a comparison, found {comp or 'end of input'!r}", cpos)
        rhs_terms, rhs_const = self.expr()
        eps = None
        if self.peek()[1] == "eps" and self.peek()[0] == "name":
            _, _, epos = self.next()
            eps = self.rational()
            if comp not in APPROX:
                raise PropertyError(f"'eps' is only allowed with '~' or '!~', not {comp!r}", epos)
        elif comp in APPROX:
            raise PropertyError(f"comparison {comp!r} requires 'eps <rational>'", self.peek()[2])
        kind, text, pos = self.next()
        if kind != "end":
            raise PropertyError(f"unexpected trailing input {text!r}", pos)
        terms = tuple(lhs_terms) + tuple(replace(t, coeff=-t.coeff) for t in rhs_terms)
        if not terms:
            raise PropertyError("property contains no probability terms", 0)
        used = {t.sched for t in terms}
        for k, var in enumerate(variables):
            if k not in used:
                raise PropertyError(f"scheduler variable {var!r} declared but unused", 0)
        return RelReachQuery(
            quantifier=quant,
            variables=tuple(variables),
            terms=terms,
            comp=comp,
            threshold=rhs_const - lhs_const,
            eps=eps,
        )

    def expr(self) -> Tuple[List[Term], Fraction]:
        terms: List[Term] = []
        const = Fraction(0)
        sign = 1
        if self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            sign = -1 if self.next()[1] == "-" else 1
        while True:
            term, value = self.term()
            if term is not None:
                terms.append(replace(term, coeff=sign * term.coeff))
            else:
                const += sign * value
            if self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
                sign = -1 if self.next()[1] == "-" else 1
                continue
            return terms, const

    def term(self):
        kind, text, pos = self.peek()
        if kind == "num":
            coeff = self.rational()
            if self.peek()[1] == "*":
                self.next()
                return self.prob(coeff), None
            return None, coeff
        if kind == "name" and text == "P":
            return self.prob(Fraction(1)), None
        raise PropertyError(f"expected a term, found {text or 'end of input'!r}", pos)

    def prob(self, coeff: Fraction) -> Term:
        name, pos = self.name("'P'")
        if name != "P":
            raise PropertyError(f"expected 'P', found {name!r}", pos)
        self.expect("(")
        var, vpos = self.name("a scheduler variable")
        if var not in self.variables:
            raise PropertyError(f"undeclared scheduler variable {var!r}", vpos)
        self.expect(",")
        state = self.stateref()
        self.expect(",")
        f, fpos = self.name("'F'")
        if f != "F":
            raise PropertyError(f"expected 'F', found {f!r}", fpos)
        target = self.target()
        self.expect(")")
        return Term(coeff=coeff, sched=self.variables.index(var), state=state, target=target)

    def stateref(self) -> int:
        kind, text, pos = self.next()
        n = self.model.num_states
        if kind == "num":
            if not text.isdigit() or int(text) >= n:
                raise PropertyError(f"state index {text} out of range", pos)
            return int(text)
        if kind == "name":
            states = self.model.labels.get(text)
            if states is None:
                raise PropertyError(f"unknown label {text!r}", pos)
            if len(states) != 1:
                raise PropertyError(
                    f"label {text!r} must denote exactly one state, has {len(states)}", pos
                )
            return next(iter(states))
        raise PropertyError(f"expected a state, found {text or 'end of input'!r}", pos)

    def target(self) -> frozenset:
        kind, text, pos = self.next()
        if kind == "name":
            states = self.model.labels.get(text)
            if states is None:
                raise PropertyError(f"unknown label {text!r}", pos)
            return frozenset(states)
        if text == "{":
            out = set()
            if self.peek()[1] == "}":
                self.next()
                return frozenset()
            while True:
                k, t, p = self.next()
                if k != "num" or not t.isdigit() or int(t) >= self.model.num_states:
                    raise PropertyError(f"bad state index {t!r} in target set", p)
                out.add(int(t))
                sep = self.next()
                if sep[1] == "}":
                    return frozenset(out)
                if sep[1] != ",":
                    raise PropertyError(f"expected ',' or '}}', found {sep[1]!r}", sep[2])
        raise PropertyError(f"expected a target label or set, found {text or 'end of input'!r}", pos)


def parse_property(text: str, model: Mdp) -> RelReachQuery:
    """Parse ``text`` and resolve its state and label references against ``model``."""
    return _Parser(text, model).parse()


def _fmt_rational(x: Fraction) -> str:
    return str(Fraction(x))


def format_query(q: RelReachQuery | NormalizedQuery) -> str:
    """Render a query in the concrete syntax, using indices and set literals.

    ``parse_property(format_query(q), model) == q`` for queries without the
    ``negated`` flag.
    """
    parts = []
    for i, t in enumerate(q.terms):
        coeff = t.coeff
        if i == 0:
            sign = "-" if coeff < 0 else ""
        else:
            sign = " - " if coeff < 0 else " + "
        target = "{" + ", ".join(str(s) for s in sorted(t.target)) + "}"
        parts.append(
            f"{sign}{_fmt_rational(abs(coeff))}*P({q.variables[t.sched]}, {t.state}, F {target})"
        )
    head = f"{q.quantifier} {', '.join(q.variables)} . "
    tail = f" {q.comp} {_fmt_rational(q.threshold)}"
    if q.eps is not None:
        tail += f" eps {_fmt_rational(q.eps)}"
    return head + "".join(parts) + tail


def normalize(q: RelReachQuery | NormalizedQuery) -> NormalizedQuery:
    """Bring ``q`` into existential form with ``comp`` in ``> >= ~ !~``."""
    if isinstance(q, NormalizedQuery):
        return q
    comp = q.comp
    terms = q.terms
    threshold = q.threshold
    eps = q.eps
    negated = False
    if q.quantifier == "forall":
        comp = _COMPLEMENT[comp]
        negated = True
    if comp in ("<", "<="):
        terms = tuple(replace(t, coeff=-t.coeff) for t in terms)
        threshold = -threshold
        comp = ">" if comp == "<" else ">="
    elif comp == "=":
        comp, eps = "~", Fraction(0)
    elif comp == "!=":
        comp, eps = "!~", Fraction(0)
    return NormalizedQuery(
        variables=q.variables,
        terms=terms,
        comp=comp,
        threshold=threshold,
        eps=eps if comp in APPROX else None,
        negated=negated,
    )


def holds_for_value(value: Fraction, comp: str, threshold: Fraction, eps: Optional[Fraction]) -> bool:
    """Evaluate ``value comp threshold`` for any supported comparison."""
    if comp == ">":
        return value > threshold
    if comp == ">=":
        return value >= threshold
    if comp == "<":
        return value < threshold
    if comp == "<=":
        return value <= threshold
    if comp == "=":
        return value == threshold
    if comp == "!=":
        return value != threshold
    if comp == "~":
        return abs(value - threshold) <= eps
    if comp == "!~":
        return abs(value - threshold) > eps
    raise ValueError(f"unknown comparison {comp!r}")
