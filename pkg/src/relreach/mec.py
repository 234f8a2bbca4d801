"""Maximal end components and the MEC quotient with an absorbing sink."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .model import Mdp
from .pipeline import GoalUnfolding

STAY = None  # provenance tag of the "stay inside the MEC forever" action


def strongly_connected_components(
    nodes: Sequence[int], successors: Callable[[int], Iterable[int]]
) -> List[List[int]]:
    """Tarjan's algorithm without recursion. Edges leaving ``nodes`` are ignored."""
    allowed = set(nodes)
    index: Dict[int, int] = {}
    low: Dict[int, int] = {}
    on_stack = set()
    stack: List[int] = []
    sccs: List[List[int]] = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(successors(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in allowed:
                    continue
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(successors(w))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                sccs.append(sorted(comp))
    return sccs


@dataclass(frozen=True)
class Mec:
    states: frozenset
    # state -> indices of the actions that stay inside the component
    actions: Dict[int, Tuple[int, ...]]


def mec_decompose(m: Mdp) -> List[Mec]:
    """Maximal end components, sorted by their smallest state."""
    enabled = {s: set(range(len(m.transitions[s]))) for s in range(m.num_states)}
    alive = set(enabled)
    while True:
        nodes = sorted(alive)

        def succ(v):
            for a in enabled[v]:
                for t, _ in m.transitions[v][a]:
                    yield t

        comp_of = {}
        for i, comp in enumerate(strongly_connected_components(nodes, succ)):
            for v in comp:
                comp_of[v] = i
        changed = False
        for v in nodes:
            keep = {
                a
                for a in enabled[v]
                if all(comp_of.get(t) == comp_of[v] for t, _ in m.transitions[v][a])
            }
            if keep != enabled[v]:
                enabled[v] = keep
                changed = True
            if not keep:
                alive.discard(v)
        if not changed:
            break
    groups: Dict[int, List[int]] = {}
    for v in sorted(alive):
        groups.setdefault(comp_of[v], []).append(v)
    mecs = [
        Mec(states=frozenset(vs), actions={v: tuple(sorted(enabled[v])) for v in vs})
        for vs in groups.values()
    ]
    mecs.sort(key=lambda e: min(e.states))
    return mecs


@dataclass(frozen=True)
class MecQuotient:
    """Quotient of an unfolding: each MEC collapsed, plus a sink ``bot``.

    ``provenance[q][a]`` is ``(product_state, action)`` for actions copied
    from the unfolding and ``STAY`` for the action of a collapsed MEC that
    moves to ``bot``.
    """

    mdp: Mdp
    initial: int
    bot: int
    state_map: Tuple[int, ...]
    provenance: Tuple[Tuple[Optional[Tuple[int, int]], ...], ...]
    rewards: Tuple[Fraction, ...]
    bounds: Tuple[Tuple[Fraction, Fraction], ...]
    mecs: Tuple[Mec, ...]
    mec_of: Tuple[Optional[int], ...]  # quotient state -> index into mecs

    @property
    def num_states(self) -> int:
        return self.mdp.num_states

    def negated(self) -> "MecQuotient":
        return MecQuotient(
            mdp=self.mdp,
            initial=self.initial,
            bot=self.bot,
            state_map=self.state_map,
            provenance=self.provenance,
            rewards=tuple(-r for r in self.rewards),
            bounds=tuple((-hi, -lo) for lo, hi in self.bounds),
            mecs=self.mecs,
            mec_of=self.mec_of,
        )


def _merge(dist) -> Tuple[Tuple[int, Fraction], ...]:
    acc: Dict[int, Fraction] = {}
    for t, p in dist:
        acc[t] = acc.get(t, Fraction(0)) + p
    return tuple(sorted(acc.items()))


def build_quotient(u: GoalUnfolding, mecs: Optional[Sequence[Mec]] = None) -> MecQuotient:
    if u.rewards is None:
        raise ValueError("unfolding has no rewards attached")
    if mecs is None:
        mecs = mec_decompose(u.mdp)
    m = u.mdp
    member: Dict[int, int] = {}
    for i, e in enumerate(mecs):
        for v in e.states:
            member[v] = i

    state_map = [-1] * m.num_states
    mec_index: Dict[int, int] = {}
    count = 0
    for v in range(m.num_states):
        e = member.get(v)
        if e is None:
            state_map[v] = count
            count += 1
        elif e in mec_index:
            state_map[v] = mec_index[e]
        else:
            mec_index[e] = state_map[v] = count
            count += 1
    bot = count

    bounds_u = u.remaining_reward_bounds()
    actions: List[Tuple[str, ...]] = [()] * (count + 1)
    transitions: List[Tuple] = [()] * (count + 1)
    provenance: List[Tuple] = [()] * (count + 1)
    rewards = [Fraction(0)] * (count + 1)
    bounds = [(Fraction(0), Fraction(0))] * (count + 1)
    mec_of: List[Optional[int]] = [None] * (count + 1)

    for v in range(m.num_states):
        q = state_map[v]
        e = member.get(v)
        if e is None:
            actions[q] = m.actions[v]
            transitions[q] = tuple(
                _merge((state_map[t], p) for t, p in dist) for dist in m.transitions[v]
            )
            provenance[q] = tuple((v, a) for a in range(len(m.transitions[v])))
            rewards[q] = u.rewards[v]
            bounds[q] = bounds_u[v]
        elif v == min(mecs[e].states):
            names, dists, prov = [], [], []
            for w in sorted(mecs[e].states):
                if u.rewards[w] != 0:
                    raise AssertionError(f"nonzero reward inside end component at state {w}")
                stay = set(mecs[e].actions[w])
                for a, dist in enumerate(m.transitions[w]):
                    if a in stay:
                        continue
                    names.append(f"{w}:{m.actions[w][a]}")
                    dists.append(_merge((state_map[t], p) for t, p in dist))
                    prov.append((w, a))
            names.append("stay")
            dists.append(((bot, Fraction(1)),))
            prov.append(STAY)
            actions[q] = tuple(names)
            transitions[q] = tuple(dists)
            provenance[q] = tuple(prov)
            bounds[q] = bounds_u[v]
            mec_of[q] = e
    actions[bot] = ("bot",)
    transitions[bot] = (((bot, Fraction(1)),),)
    provenance[bot] = (STAY,)

    labels = {"bot": frozenset([bot])}
    qmdp = Mdp(actions=tuple(actions), transitions=tuple(transitions), labels=labels)
    return MecQuotient(
        mdp=qmdp,
        initial=state_map[u.initial],
        bot=bot,
        state_map=tuple(state_map),
        provenance=tuple(provenance),
        rewards=tuple(rewards),
        bounds=tuple(bounds),
        mecs=tuple(mecs),
        mec_of=tuple(mec_of),
    )


def only_sink_is_end_component(qt: MecQuotient) -> bool:
    """True iff the quotient's sole end component is the sink itself."""
    mecs = mec_decompose(qt.mdp)
    return len(mecs) == 1 and mecs[0].states == frozenset([qt.bot])
