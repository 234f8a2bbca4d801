"""Brute-force decision over memoryless deterministic schedulers.

Schedulers that agree on every state reachable from a variable's initial
states give the same probabilities, so the search enumerates those
equivalence classes instead of full choice vectors. The canonical member
of a class plays action 0 on unreached states, which makes it the
lexicographically least scheduler of its class.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .model import Dtmc, MdScheduler, Mdp, dtmc_reach_probs, reachable_states
from .property import NormalizedQuery, RelReachQuery, holds_for_value, normalize
from .verdict import Answer


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleBudget:
    max_tuples: int = 10**9

    def __post_init__(self):
        if self.max_tuples < 1:
            raise ValueError("oracle budget must be positive")


@dataclass(frozen=True)
class OracleResult:
    answer: Answer  # for the query as given (complemented if it was universal)
    normalized_answer: Answer
    witness: Optional[Tuple[MdScheduler, ...]]  # lex-least, for the normalized query
    value: Optional[Fraction]
    classes: Tuple[int, ...]  # scheduler classes enumerated per variable


def scheduler_space(m: Mdp, q: RelReachQuery | NormalizedQuery) -> int:
    """Number of MD scheduler tuples on the states the query can reach."""
    starts = sorted({t.state for t in q.terms})
    size = 1
    for s in reachable_states(m, starts):
        size *= len(m.transitions[s])
    return size ** len(q.variables)


def _reached(m: Mdp, starts: Sequence[int], choice: Dict[int, int]) -> List[int]:
    seen = set(starts)
    stack = list(starts)
    while stack:
        s = stack.pop()
        a = choice.get(s)
        if a is None:
            continue
        for t, _ in m.transitions[s][a]:
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return sorted(seen)


def scheduler_classes(m: Mdp, starts: Sequence[int]):
    """Yield the canonical MD choice vector of every class (depth-first order)."""
    n = m.num_states

    def rec(choice: Dict[int, int]):
        while True:
            pending = [s for s in _reached(m, starts, choice) if s not in choice]
            if not pending:
                yield tuple(choice.get(s, 0) for s in range(n))
                return
            s = pending[0]
            if len(m.transitions[s]) == 1:
                choice[s] = 0
                continue
            for a in range(len(m.transitions[s])):
                yield from rec({**choice, s: a})
            return

    yield from rec({})


def _variable_value(m: Mdp, terms, choice: Tuple[int, ...]) -> Fraction:
    d = Dtmc(tuple(m.transitions[s][a] for s, a in enumerate(choice)))
    by_target: Dict[frozenset, List] = {}
    for t in terms:
        by_target.setdefault(t.target, []).append(t)
    total = Fraction(0)
    for target, ts in by_target.items():
        probs = dtmc_reach_probs(d, target, sorted({t.state for t in ts}))
        for t in ts:
            total += t.coeff * probs[t.state]
    return total


def _variable_values(m: Mdp, nq: NormalizedQuery) -> List[List[Tuple[Tuple[int, ...], Fraction]]]:
    """Per variable: distinct achievable values, each with its lex-least scheduler."""
    out = []
    for k in range(nq.n):
        terms = [t for t in nq.terms if t.sched == k]
        starts = sorted({t.state for t in terms})
        best: Dict[Fraction, Tuple[int, ...]] = {}
        for choice in scheduler_classes(m, starts):
            v = _variable_value(m, terms, choice)
            if v not in best or choice < best[v]:
                best[v] = choice
        out.append(sorted(((c, v) for v, c in best.items())))
    return out


def _check_budget(m: Mdp, q, budget: OracleBudget) -> None:
    size = scheduler_space(m, q)
    if size > budget.max_tuples:
        raise BudgetExceeded(
            f"MD scheduler space has {size} tuples, budget is {budget.max_tuples}"
        )


def _can_satisfy(lo: Fraction, hi: Fraction, comp: str, q: Fraction, eps) -> bool:
    """Can some value in [lo, hi] satisfy the comparison? (Used for pruning.)"""
    if comp == ">":
        return hi > q
    if comp == ">=":
        return hi >= q
    if comp == "~":
        return hi >= q - eps and lo <= q + eps
    if comp == "!~":
        return hi > q + eps or lo < q - eps
    raise ValueError(f"comparison {comp!r} is not normalized")


def md_verdict(
    m: Mdp, q: RelReachQuery | NormalizedQuery, budget: Optional[OracleBudget] = None
) -> OracleResult:
    """Decide ``q`` with every scheduler variable restricted to MD schedulers."""
    budget = budget or OracleBudget()
    _check_budget(m, q, budget)
    nq = normalize(q)
    values = _variable_values(m, nq)
    mins = [min(v for _, v in vs) for vs in values]
    maxs = [max(v for _, v in vs) for vs in values]
    # suffix sums of the per-variable extremes, for branch and bound
    suf_lo = [Fraction(0)] * (nq.n + 1)
    suf_hi = [Fraction(0)] * (nq.n + 1)
    for k in range(nq.n - 1, -1, -1):
        suf_lo[k] = suf_lo[k + 1] + mins[k]
        suf_hi[k] = suf_hi[k + 1] + maxs[k]

    def search(k: int, acc: Fraction, picked: list):
        if k == nq.n:
            if holds_for_value(acc, nq.comp, nq.threshold, nq.eps):
                return list(picked), acc
            return None
        if not _can_satisfy(acc + suf_lo[k], acc + suf_hi[k], nq.comp, nq.threshold, nq.eps):
            return None
        for choice, v in values[k]:
            picked.append(choice)
            found = search(k + 1, acc + v, picked)
            picked.pop()
            if found is not None:
                return found
        return None

    found = search(0, Fraction(0), [])
    classes = tuple(len(vs) for vs in values)
    if found is None:
        norm = Answer.VIOLATED
        witness, value = None, None
    else:
        norm = Answer.HOLDS
        witness = tuple(MdScheduler(c) for c in found[0])
        value = found[1]
    answer = norm.complement() if nq.negated else norm
    return OracleResult(answer, norm, witness, value, classes)


def md_extremes(
    m: Mdp, q: RelReachQuery | NormalizedQuery, budget: Optional[OracleBudget] = None
) -> Tuple[Fraction, Fraction]:
    """(min, max) of the weighted sum over MD scheduler tuples (normalized signs)."""
    budget = budget or OracleBudget()
    _check_budget(m, q, budget)
    values = _variable_values(m, normalize(q))
    lo = sum((min(v for _, v in vs) for vs in values), Fraction(0))
    hi = sum((max(v for _, v in vs) for vs in values), Fraction(0))
    return lo, hi
