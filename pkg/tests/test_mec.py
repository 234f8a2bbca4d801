import itertools
import random
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from _support import FIG2_QUERY, all_md_schedulers, fig2, random_mdp
from relreach.mec import (
    STAY,
    build_quotient,
    mec_decompose,
    only_sink_is_end_component,
    strongly_connected_components,
)
from relreach.model import build_mdp, dtmc_expected_reward, induce_dtmc
from relreach.pipeline import Combination, build_rewards, collect_combinations, goal_unfold
from relreach.property import normalize, parse_property
from relreach.solver import SolverConfig, max_expected_reward


def _brute_force_mecs(m):
    """Maximal end components by enumerating every set of state-action pairs."""
    pairs = [(s, a) for s in range(m.num_states) for a in range(len(m.transitions[s]))]
    ecs = []
    for r in range(1, len(pairs) + 1):
        for subset in itertools.combinations(pairs, r):
            states = {s for s, _ in subset}
            if any(t not in states for s, a in subset for t, _ in m.transitions[s][a]):
                continue
            succ = {s: set() for s in states}
            for s, a in subset:
                succ[s] |= {t for t, _ in m.transitions[s][a]}
            sccs = strongly_connected_components(sorted(states), lambda v: succ[v])
            if len(sccs) == 1:
                ecs.append(frozenset(subset))
    maximal = [e for e in ecs if not any(e < f for f in ecs)]
    return sorted(maximal, key=lambda e: min(e))


def _as_pairs(mec):
    return frozenset((s, a) for s, acts in mec.actions.items() for a in acts)


def test_fig2_mecs():
    mecs = mec_decompose(fig2())
    assert [(sorted(e.states), e.actions) for e in mecs] == [([1], {1: (1,)}), ([3], {3: (0,)})]
    assert [_as_pairs(e) for e in mecs] == _brute_force_mecs(fig2())


def test_absorbing_state_is_singleton_mec():
    (e,) = mec_decompose(build_mdp([[("a", [(0, 1)])]]))
    assert e.states == frozenset({0})


def test_strongly_connected_dtmc_is_one_mec():
    m = build_mdp([[("a", [(1, 1)])], [("a", [(2, "1/2"), (0, "1/2")])], [("a", [(0, 1)])]])
    (e,) = mec_decompose(m)
    assert e.states == frozenset({0, 1, 2})


@given(st.integers(0, 10**6))
@settings(max_examples=60, deadline=None)
def test_mec_decomposition_matches_brute_force(seed):
    m = random_mdp(random.Random(seed), max_states=4, max_actions=2)
    got = [_as_pairs(e) for e in mec_decompose(m)]
    assert got == _brute_force_mecs(m)


def _fig2_quotient():
    m = fig2()
    q = normalize(parse_property(FIG2_QUERY, m))
    c1 = collect_combinations(q)[0]
    u = build_rewards(goal_unfold(m, c1), c1)
    return u, build_quotient(u)


def test_fig2_quotient_shape():
    u, qt = _fig2_quotient()
    assert only_sink_is_end_component(qt)
    assert qt.mdp.actions[qt.bot] == ("bot",)
    for q, e in enumerate(qt.mec_of):
        if e is not None:
            assert qt.rewards[q] == 0
            assert qt.provenance[q][-1] is STAY
            assert qt.mdp.transitions[q][-1] == ((qt.bot, Fraction(1)),)
    kept = [r for r in qt.rewards if r != 0]
    assert sorted(kept) == [Fraction(-1, 2), Fraction(-1, 2), 1]


def test_one_big_mec_has_value_zero():
    m = build_mdp([[("a", [(1, 1)])], [("a", [(0, 1)]), ("b", [(1, 1)])]])
    c = Combination(0, 0, (0,), (frozenset(),), (Fraction(1),))
    u = build_rewards(goal_unfold(m, c), c)
    qt = build_quotient(u)
    assert qt.num_states == 2
    bounds, _ = max_expected_reward(qt, SolverConfig.exact_mode())
    assert bounds.lower == bounds.upper == 0


def test_mec_free_dag_only_terminal_singletons_reach_the_sink():
    m = build_mdp([[("a", [(1, "1/2"), (2, "1/2")])], [("a", [(2, 1)])], [("a", [(2, 1)])]])
    c = Combination(0, 0, (0,), (frozenset({1}),), (Fraction(1),))
    u = build_rewards(goal_unfold(m, c), c)
    qt = build_quotient(u)
    into_bot = {q for q in range(qt.num_states) for d in qt.mdp.transitions[q] for t, _ in d
                if t == qt.bot and q != qt.bot}
    assert all(qt.mec_of[q] is not None for q in into_bot)
    assert only_sink_is_end_component(qt)


@given(st.integers(0, 10**6))
@settings(max_examples=50, deadline=None)
def test_quotient_preserves_the_optimal_total_reward(seed):
    rng = random.Random(seed)
    m = random_mdp(rng, max_states=4, max_actions=2, absorbing=1)
    n = m.num_states
    targets = tuple(frozenset(rng.sample(range(n), rng.randint(1, min(2, n)))) for _ in range(2))
    if targets[0] == targets[1]:
        targets = targets[:1]
    coeffs = tuple(Fraction(rng.randint(-3, 3), rng.randint(1, 3)) for _ in targets)
    c = Combination(0, 0, tuple(range(len(targets))), targets, coeffs)
    u = build_rewards(goal_unfold(m, c), c)
    qt = build_quotient(u)
    assert only_sink_is_end_component(qt)
    if u.num_states > 12:
        return
    best = max(
        dtmc_expected_reward(induce_dtmc(u.mdp, s), dict(enumerate(u.rewards)), u.initial)
        for s in all_md_schedulers(u.mdp)
    )
    bounds, _ = max_expected_reward(qt, SolverConfig.exact_mode())
    assert bounds.lower == best
