"""State-scheduler combinations, goal unfoldings and first-visit rewards."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .model import Mdp
from .property import NormalizedQuery, RelReachQuery

MAX_TARGETS = 20


class UnfoldingError(ValueError):
    pass


@dataclass(frozen=True)
class Combination:
    """A distinct (scheduler variable, initial state) pair of the query.

    ``indices`` are the 0-based term positions grouped here; ``targets`` the
    distinct target sets among them (first occurrence order) and
    ``coeffs[i]`` the summed coefficient of ``targets[i]``.
    """

    sched: int
    state: int
    indices: Tuple[int, ...]
    targets: Tuple[frozenset, ...]
    coeffs: Tuple[Fraction, ...]


def collect_combinations(q: NormalizedQuery | RelReachQuery) -> List[Combination]:
    groups: Dict[Tuple[int, int], List[int]] = {}
    for i, t in enumerate(q.terms):
        groups.setdefault((t.sched, t.state), []).append(i)
    combos = []
    for (sched, state), idx in groups.items():
        targets: List[frozenset] = []
        coeffs: List[Fraction] = []
        for i in idx:
            t = q.terms[i]
            if t.target in targets:
                coeffs[targets.index(t.target)] += t.coeff
            else:
                targets.append(t.target)
                coeffs.append(Fraction(t.coeff))
        combos.append(
            Combination(
                sched=sched,
                state=state,
                indices=tuple(idx),
                targets=tuple(targets),
                coeffs=tuple(coeffs),
            )
        )
    return combos


@dataclass(frozen=True)
class GoalUnfolding:
    """Reachable part of the product of an MDP with visited-target masks.

    Product state ``u`` stands for ``back_map[u] = (s, mask)`` where bit ``i``
    of ``mask`` is set iff ``targets[i]`` was visited strictly before ``s``.
    """

    mdp: Mdp
    initial: int
    back_map: Tuple[Tuple[int, int], ...]
    targets: Tuple[frozenset, ...]
    coeffs: Tuple[Fraction, ...]
    rewards: Optional[Tuple[Fraction, ...]] = None

    @property
    def num_states(self) -> int:
        return self.mdp.num_states

    def index(self) -> Dict[Tuple[int, int], int]:
        return {pair: u for u, pair in enumerate(self.back_map)}

    def lifted_target(self, target: frozenset) -> frozenset:
        """Product states whose original state lies in ``target``."""
        return frozenset(u for u, (s, _) in enumerate(self.back_map) if s in target)

    def remaining_reward_bounds(self) -> Tuple[Tuple[Fraction, Fraction], ...]:
        """Per-state bounds on the total reward any run can still collect.

        Every target not yet in the mask pays its coefficient at most once.
        """
        out = []
        for _, mask in self.back_map:
            lo = hi = Fraction(0)
            for i, c in enumerate(self.coeffs):
                if not mask >> i & 1:
                    if c > 0:
                        hi += c
                    else:
                        lo += c
            out.append((lo, hi))
        return tuple(out)


def goal_unfold(m: Mdp, c: Combination) -> GoalUnfolding:
    """Build the goal unfolding of ``m`` for ``c``, reachable states only."""
    k = len(c.targets)
    if k == 0:
        raise UnfoldingError("combination has no target sets")
    if k > MAX_TARGETS:
        raise UnfoldingError(
            f"combination has {k} distinct target sets; at most {MAX_TARGETS} are supported"
        )
    hit = [0] * m.num_states
    for i, target in enumerate(c.targets):
        for s in target:
            hit[s] |= 1 << i

    start = (c.state, 0)
    index = {start: 0}
    back_map = [start]
    queue = deque([start])
    transitions: List[Tuple] = []
    while queue:
        s, mask = queue.popleft()
        succ_mask = mask | hit[s]
        acts = []
        for dist in m.transitions[s]:
            row = []
            for t, p in dist:
                key = (t, succ_mask)
                u = index.get(key)
                if u is None:
                    u = index[key] = len(back_map)
                    back_map.append(key)
                    queue.append(key)
                row.append((u, p))
            acts.append(tuple(row))
        transitions.append(tuple(acts))

    labels = {}
    for name, states in m.labels.items():
        labels[name] = frozenset(u for u, (s, _) in enumerate(back_map) if s in states)
    product = Mdp(
        actions=tuple(m.actions[s] for s, _ in back_map),
        transitions=tuple(transitions),
        labels=labels,
    )
    return GoalUnfolding(
        mdp=product,
        initial=0,
        back_map=tuple(back_map),
        targets=c.targets,
        coeffs=c.coeffs,
    )


def build_rewards(u: GoalUnfolding, c: Combination, q=None) -> GoalUnfolding:
    """Attach the first-visit reward: ``q_T`` on states in ``T`` whose mask lacks ``T``.

    ``q`` is accepted for symmetry with the query-driven call sites; the
    summed coefficients are already part of ``c``.
    """
    if u.targets != c.targets:
        raise ValueError("unfolding was built for a different combination")
    coeffs = c.coeffs
    if q is not None:
        coeffs = collect_coefficients(q, c)
    rewards = []
    for s, mask in u.back_map:
        r = Fraction(0)
        for i, target in enumerate(c.targets):
            if s in target and not mask >> i & 1:
                r += coeffs[i]
        rewards.append(r)
    return replace(u, rewards=tuple(rewards), coeffs=tuple(coeffs))


def collect_coefficients(q, c: Combination) -> Tuple[Fraction, ...]:
    coeffs = [Fraction(0)] * len(c.targets)
    for i in c.indices:
        t = q.terms[i]
        coeffs[c.targets.index(t.target)] += t.coeff
    return tuple(coeffs)


def unfold_all(m: Mdp, q: NormalizedQuery, combos: Sequence[Combination]) -> List[GoalUnfolding]:
    return [build_rewards(goal_unfold(m, c), c, q) for c in combos]
