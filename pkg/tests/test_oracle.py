import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _support import all_md_schedulers, brute_md_value, fig2, random_mdp, random_query
from relreach.checker import check
from relreach.generators import gen_paper_figures
from relreach.model import build_mdp
from relreach.oracle import (
    BudgetExceeded,
    OracleBudget,
    md_extremes,
    md_verdict,
    _reached,
    scheduler_classes,
    scheduler_space,
)
from relreach.property import holds_for_value, normalize, parse_property
from relreach.solver import SolverConfig
from relreach.verdict import Answer

FIGS = {i.name: i for i in gen_paper_figures()}


def _query(inst, text=None):
    return parse_property(text or inst.property_text, inst.mdp)


def test_memory_example_is_violated_over_md():
    inst = FIGS["fig3b"]
    assert md_verdict(inst.mdp, _query(inst)).answer is Answer.VIOLATED


def test_md_gap_example_is_violated_over_md():
    inst = FIGS["ex6"]
    assert md_verdict(inst.mdp, _query(inst)).answer is Answer.VIOLATED
    q = _query(inst, "exists sigma . P(sigma, s2, F t) < P(sigma, s1, F t)")
    assert md_verdict(inst.mdp, q).answer is Answer.VIOLATED
    assert check(inst.mdp, q, SolverConfig.exact_mode()).answer is Answer.HOLDS


def test_randomization_example_needs_eps_one_half():
    inst = FIGS["fig3a"]
    for eps, expected in ((Fraction(0), Answer.VIOLATED), (Fraction(49, 100), Answer.VIOLATED), (Fraction(1, 2), Answer.HOLDS)):
        q = _query(inst, f"exists sigma . 1*P(sigma, s, F t) ~ 1/2 eps {eps}")
        assert md_verdict(inst.mdp, q).answer is expected


def test_dtmc_input_equals_direct_evaluation():
    m = build_mdp(
        [[("a", [(1, "1/3"), (2, "2/3")])], [("a", [(1, 1)])], [("a", [(2, 1)])]],
        labels={"s": [0], "t": [1]},
    )
    for thr, expected in (("1/3", Answer.HOLDS), ("1/2", Answer.VIOLATED)):
        q = parse_property(f"exists x . P(x, s, F t) >= {thr}", m)
        res = md_verdict(m, q)
        assert res.answer is expected
        assert res.classes == (1,)


def test_budget():
    m = fig2()
    q = parse_property("exists s . P(s, s1, F T1) > 0", m)
    assert scheduler_space(m, q) == 4
    with pytest.raises(BudgetExceeded):
        md_verdict(m, q, OracleBudget(3))
    md_verdict(m, q, OracleBudget(4))
    with pytest.raises(ValueError):
        OracleBudget(0)


def test_every_md_scheduler_falls_into_exactly_one_class():
    rng = random.Random(11)
    for _ in range(20):
        m = random_mdp(rng, max_states=5, max_actions=3)
        classes = list(scheduler_classes(m, [0]))
        assert len(set(classes)) == len(classes)
        for sched in all_md_schedulers(m):
            matches = []
            for c in classes:
                reached = _reached(m, [0], dict(enumerate(c)))
                if all(sched.choice[s] == c[s] for s in reached):
                    matches.append(c)
            assert len(matches) == 1
            # the canonical member plays action 0 off the reached states
            reached = set(_reached(m, [0], dict(enumerate(matches[0]))))
            assert all(matches[0][s] == 0 for s in range(m.num_states) if s not in reached)


@given(st.integers(0, 10**6))
@settings(max_examples=60, deadline=None)
def test_oracle_matches_plain_tuple_enumeration(seed):
    rng = random.Random(seed)
    m = random_mdp(rng, max_states=4, max_actions=2, absorbing=1)
    q = random_query(rng, m, rng.choice(["independent", "absorbing"]))
    if q.n > 2:
        return
    nq = normalize(q)
    scheds = list(all_md_schedulers(m))
    found = None
    for tup in itertools.product(scheds, repeat=nq.n):
        if holds_for_value(brute_md_value(m, nq, tup), nq.comp, nq.threshold, nq.eps):
            found = tup
            break
    res = md_verdict(m, q)
    assert (res.normalized_answer is Answer.HOLDS) == (found is not None)
    if found is not None:
        # lexicographically least witness
        assert res.witness == found
        assert res.value == brute_md_value(m, nq, found)
    values = [brute_md_value(m, nq, tup) for tup in itertools.product(scheds, repeat=nq.n)]
    assert md_extremes(m, q) == (min(values), max(values))
