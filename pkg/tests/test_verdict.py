import random
from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _support import FIG2_QUERY, fig2
from relreach.checker import check
from relreach.generators import gen_paper_figures, gen_von_neumann
from relreach.solver import Bounds, CombinationResult, SolverConfig
from relreach.model import MdScheduler
from relreach.verdict import (
    AggregateResult,
    Answer,
    Witness,
    WitnessError,
    aggregate,
    decide,
    synthesize_witness,
    validate_witness,
)

EXACT = SolverConfig.exact_mode()
P = Bounds.point


def _res(hi, lo=None):
    s = MdScheduler((0,))
    return CombinationResult(hi, s, lo, s if lo is not None else None)


def test_aggregate_sums_componentwise():
    agg = aggregate([_res(P(Fraction(1, 4)), P(Fraction(-1, 2))), _res(P(0), P(Fraction(-1, 2)))])
    assert agg == AggregateResult(P(Fraction(1, 4)), P(-1))
    single = aggregate([_res(Bounds(Fraction(1), Fraction(2)), P(0))])
    assert single.v_max == Bounds(Fraction(1), Fraction(2))
    assert aggregate([_res(P(1))], need_min=False).v_min is None


def test_running_example_verdict():
    res = check(fig2(), FIG2_QUERY, EXACT)
    assert res.answer is Answer.HOLDS
    assert res.aggregate == AggregateResult(P(Fraction(1, 4)), P(-1))


def test_boundary_semantics_of_strict_and_non_strict():
    agg = AggregateResult(P(Fraction(1, 2)))
    assert decide(agg, ">=", Fraction(1, 2)) is Answer.HOLDS
    assert decide(agg, ">", Fraction(1, 2)) is Answer.VIOLATED


def test_straddling_bounds_are_inconclusive():
    q = Fraction(1, 3)
    agg = AggregateResult(
        Bounds(q - Fraction(1, 20), q + Fraction(1, 20)),
        Bounds(q - Fraction(1, 20), q + Fraction(1, 20)),
    )
    assert decide(agg, "~", q, Fraction(0)) is Answer.INCONCLUSIVE
    assert decide(agg, ">=", q) is Answer.INCONCLUSIVE
    assert decide(agg, "!~", q, Fraction(0)) is Answer.INCONCLUSIVE


def test_coarse_tolerance_gives_inconclusive_on_a_real_instance():
    # A single coin whose value 1/3 is approached geometrically: the first
    # sweeps of interval iteration straddle the threshold.
    from relreach.model import build_mdp

    m = build_mdp(
        [
            [("a", [(0, "1/2"), (1, "1/6"), (2, "1/3")])],
            [("a", [(1, 1)])],
            [("a", [(2, 1)])],
        ],
        labels={"s": [0], "t": [1]},
    )
    text = "exists x . P(x, s, F t) ~ 1/3 eps 0"
    exact = check(m, text, EXACT)
    assert exact.answer is Answer.HOLDS
    coarse = check(m, text, SolverConfig(tolerance=Fraction(1, 10)))
    assert coarse.answer is Answer.INCONCLUSIVE
    assert coarse.aggregate.v_max.lower < Fraction(1, 3) < coarse.aggregate.v_max.upper


def test_disequality_with_empty_violation_interval():
    # ub v_max - eps > lb v_min + eps: cannot be violated
    agg = AggregateResult(Bounds(Fraction(0), Fraction(2)), Bounds(Fraction(-2), Fraction(0)))
    assert decide(agg, "!~", Fraction(0), Fraction(0)) is Answer.INCONCLUSIVE
    # exact and degenerate: v_max = v_min = q  ->  violated
    agg = AggregateResult(P(0), P(0))
    assert decide(agg, "!~", Fraction(0), Fraction(0)) is Answer.VIOLATED


def test_negated_flag_complements():
    agg = AggregateResult(P(1))
    assert decide(agg, ">=", Fraction(0), negated=True) is Answer.VIOLATED
    assert Answer.INCONCLUSIVE.complement() is Answer.INCONCLUSIVE


@given(
    st.fractions(-2, 2, max_denominator=8),
    st.fractions(-2, 2, max_denominator=8),
    st.fractions(-2, 2, max_denominator=8),
    st.fractions(0, 1, max_denominator=8),
    st.fractions(0, 1, max_denominator=8),
)
def test_eps_monotonicity(a, b, q, e1, e2):
    lo, hi = min(a, b), max(a, b)
    agg = AggregateResult(P(hi), P(lo))
    small, large = min(e1, e2), max(e1, e2)
    if decide(agg, "~", q, small) is Answer.HOLDS:
        assert decide(agg, "~", q, large) is Answer.HOLDS
    if decide(agg, "!~", q, large) is Answer.HOLDS:
        assert decide(agg, "!~", q, small) is Answer.HOLDS
    # exact bounds never give an inconclusive answer
    assert decide(agg, "~", q, small) is not Answer.INCONCLUSIVE
    assert decide(agg, "!~", q, small) is not Answer.INCONCLUSIVE
    assert decide(agg, ">", q) is not Answer.INCONCLUSIVE


def test_running_example_mixing_witness():
    res = check(fig2(), FIG2_QUERY, EXACT)
    w = res.witness
    assert w.kind == "mix" and w.lam == Fraction(1, 5) and w.value == 0
    nq = res.normalized
    check_ = validate_witness(w, res.unfoldings, nq.comp, nq.threshold, nq.eps)
    assert check_.passed and check_.value == 0


def test_tampered_lambda_fails_validation():
    res = check(fig2(), FIG2_QUERY, EXACT)
    w = replace(res.witness, lam=res.witness.lam + Fraction(1, 10))
    nq = res.normalized
    check_ = validate_witness(w, res.unfoldings, nq.comp, nq.threshold, nq.eps)
    assert not check_.passed
    assert check_.value == Fraction(-1, 8)


def test_pure_witness_when_max_is_close_enough():
    res = check(fig2(), FIG2_QUERY.replace("~ 0 eps 0", "~ 1/5 eps 1/10"), EXACT)
    assert res.witness.kind == "max" and res.witness.lam is None
    assert res.witness.value == Fraction(1, 4)


def test_pure_witness_for_greater_equal():
    m = fig2()
    for q, ok in ((Fraction(1, 4), True), (Fraction(1, 5), True)):
        text = f"exists s . 1*P(s, s1, F T1) - 1/2*P(s, s1, F T2) >= {q}"
        res = check(m, text, EXACT)
        assert res.answer is Answer.HOLDS
        v = validate_witness(res.witness, res.unfoldings, ">=", q, None)
        assert v.passed == ok and v.value == Fraction(1, 4)
        assert not validate_witness(res.witness, res.unfoldings, ">=", Fraction(1, 3), None).passed


def test_mixing_refused_in_approximate_mode():
    res = check(fig2(), FIG2_QUERY, SolverConfig())
    assert res.answer is Answer.HOLDS
    assert res.witness is None
    assert res.witness_error == "exact mode required for mixing witness"


def test_synthesize_rejects_unsatisfiable_request():
    agg = AggregateResult(P(0), P(0))
    results = [_res(P(0), P(0))]
    with pytest.raises(WitnessError):
        synthesize_witness(agg, results, "~", Fraction(1), Fraction(0))


def test_witness_kind_validation():
    with pytest.raises(ValueError):
        Witness("mix", None, None, None, Fraction(0))


@pytest.mark.parametrize("inst", gen_paper_figures(), ids=lambda i: i.name)
def test_every_figure_witness_validates(inst):
    res = check(inst.mdp, inst.property_text, EXACT)
    nq = res.normalized
    assert res.witness is not None
    v = validate_witness(res.witness, res.unfoldings, nq.comp, nq.threshold, nq.eps)
    assert v.passed and v.value == res.witness.value


@given(st.integers(0, 10**6))
@settings(max_examples=25, deadline=None)
def test_exact_and_approximate_verdicts_never_contradict(seed):
    from _support import random_mdp, random_query

    rng = random.Random(seed)
    m = random_mdp(rng, max_states=5, absorbing=1)
    q = random_query(rng, m, rng.choice(["independent", "absorbing"]), [m.num_states - 1])
    exact = check(m, q, EXACT)
    approx = check(m, q, SolverConfig(tolerance=Fraction(1, 1000)))
    assert exact.answer is not Answer.INCONCLUSIVE
    if approx.answer is not Answer.INCONCLUSIVE:
        assert approx.answer is exact.answer


def test_universal_violation_reports_a_counterexample():
    inst = gen_von_neumann(1, eps="0")
    res = check(inst.mdp, inst.property_text, EXACT)
    assert res.answer is Answer.VIOLATED
    assert res.normalized_answer is Answer.HOLDS
    nq = res.normalized
    v = validate_witness(res.witness, res.unfoldings, nq.comp, nq.threshold, nq.eps)
    assert v.passed and v.value != 0
