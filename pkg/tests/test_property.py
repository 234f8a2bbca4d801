import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _support import FIG2_QUERY, fig2, random_mdp, random_query
from relreach.generators import gen_von_neumann
from relreach.property import (
    NormalizedQuery,
    PropertyError,
    Term,
    format_query,
    holds_for_value,
    normalize,
    parse_property,
)


def test_parse_running_example():
    q = parse_property(FIG2_QUERY, fig2())
    assert q.quantifier == "exists"
    assert q.variables == ("s",)
    assert q.comp == "~" and q.eps == 0 and q.threshold == 0
    assert [t.coeff for t in q.terms] == [1, Fraction(-1, 2), Fraction(-1, 2)]
    assert [t.state for t in q.terms] == [0, 0, 1]
    assert [t.target for t in q.terms] == [frozenset({2}), frozenset({3}), frozenset({3})]


def test_parse_fig1_universal_property():
    m = gen_von_neumann(1).mdp
    q = parse_property("forall s . 1*P(s, s0, F ret0) - 1*P(s, s0, F ret1) ~ 0 eps 1/20", m)
    assert q.quantifier == "forall" and q.eps == Fraction(1, 20)
    assert q.n == 1 and q.m == 2


def test_two_sided_comparison_is_desugared():
    m = fig2()
    q = parse_property("exists a, b . P(a, s1, F T1) >= P(b, s1, F T1)", m)
    assert [(t.coeff, t.sched) for t in q.terms] == [(1, 0), (-1, 1)]
    assert q.threshold == 0 and q.n == 2 and q.m == 2


def test_constants_move_to_the_threshold():
    q = parse_property("exists a . 0.5 + P(a, 0, F {2, 3}) > 1/4 + 0.1", fig2())
    assert q.threshold == Fraction(1, 4) + Fraction(1, 10) - Fraction(1, 2)
    assert q.terms[0].target == frozenset({2, 3})


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("exists s . P(s, s1, F T1) ~ 0", "requires 'eps"),
        ("exists s . P(s, s1, F T1) > 0 eps 1", "only allowed"),
        ("exists s . P(t, s1, F T1) > 0", "undeclared"),
        ("exists s, t . P(s, s1, F T1) > 0", "declared but unused"),
        ("exists s, s . P(s, s1, F T1) > 0", "declared twice"),
        ("exists s . P(s, nowhere, F T1) > 0", "unknown label"),
        ("exists s . P(s, s1, F T1) >", "expected a term"),
        ("exists s . P(s, s1, G T1) > 0", "expected 'F'"),
        ("exists s . P(s, 9, F T1) > 0", "out of range"),
        ("exists s . P(s, s1, F T1) > 0 junk", "unexpected trailing"),
        ("exists s . P(s, s1, F T1) # 0", "unexpected character"),
    ],
)
def test_parse_errors(text, fragment):
    with pytest.raises(PropertyError) as info:
        parse_property(text, fig2())
    assert fragment in str(info.value)


def test_parse_error_has_position():
    with pytest.raises(PropertyError) as info:
        parse_property("exists s . P(s, s1, F T1) > 0 eps 1", fig2())
    assert info.value.pos == 30


def test_label_with_several_states_is_not_a_state_reference():
    m = fig2()
    m2 = type(m)(m.actions, m.transitions, {**m.labels, "both": frozenset({0, 1})})
    with pytest.raises(PropertyError, match="exactly one state"):
        parse_property("exists s . P(s, both, F T1) > 0", m2)
    # but it is a fine target
    parse_property("exists s . P(s, s1, F both) > 0", m2)


def test_normalize_universal_approx():
    m = gen_von_neumann(1).mdp
    q = parse_property("forall s . 1*P(s, s0, F ret0) - 1*P(s, s0, F ret1) ~ 0 eps 0.05", m)
    nq = normalize(q)
    assert nq.quantifier == "exists" and nq.comp == "!~" and nq.eps == Fraction(1, 20)
    assert nq.negated
    assert nq.terms == q.terms


def test_normalize_less_equal_flips_signs():
    q = parse_property("exists s . 2*P(s, s1, F T1) - P(s, s2, F T2) <= 1/3", fig2())
    nq = normalize(q)
    assert nq.comp == ">=" and nq.threshold == Fraction(-1, 3) and not nq.negated
    assert [t.coeff for t in nq.terms] == [-2, 1]


def test_normalize_equality_forms():
    m = fig2()
    eq = normalize(parse_property("exists s . P(s, s1, F T1) = 1/2", m))
    assert (eq.comp, eq.eps) == ("~", 0)
    ne = normalize(parse_property("exists s . P(s, s1, F T1) != 1/2", m))
    assert (ne.comp, ne.eps) == ("!~", 0)


def test_normalize_forall_strict():
    nq = normalize(parse_property("forall s . P(s, s1, F T1) > 1/2", fig2()))
    # not(x > 1/2)  ==  -x >= -1/2
    assert nq.comp == ">=" and nq.threshold == Fraction(-1, 2) and nq.negated
    assert nq.terms[0].coeff == -1


@given(st.integers(0, 10**6))
@settings(max_examples=100, deadline=None)
def test_normalize_is_idempotent_and_print_parse_round_trips(seed):
    rng = random.Random(seed)
    m = random_mdp(rng, absorbing=1)
    q = random_query(rng, m, rng.choice(["independent", "absorbing"]))
    assert normalize(normalize(q)) == normalize(q)
    assert isinstance(normalize(q), NormalizedQuery)
    assert parse_property(format_query(q), m) == q


def test_normalized_comparison_semantics_agree_with_source():
    # For every value, the source comparison equals the normalized one
    # (after the sign flip and the optional complement).
    m = fig2()
    values = [Fraction(k, 4) for k in range(-6, 7)]
    for quant in ("exists", "forall"):
        for comp in (">", ">=", "<", "<=", "=", "!=", "~", "!~"):
            eps = " eps 1/4" if comp in ("~", "!~") else ""
            q = parse_property(f"{quant} s . 1*P(s, s1, F T1) {comp} 1/2{eps}", m)
            nq = normalize(q)
            sign = nq.terms[0].coeff
            for v in values:
                src = holds_for_value(v, q.comp, q.threshold, q.eps)
                dst = holds_for_value(sign * v, nq.comp, nq.threshold, nq.eps)
                assert src == (dst != nq.negated)


def test_empty_target_literal_is_allowed():
    q = parse_property("exists s . P(s, s1, F {}) >= 0", fig2())
    assert q.terms[0] == Term(Fraction(1), 0, 0, frozenset())
