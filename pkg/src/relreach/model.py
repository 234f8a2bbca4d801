"""MDPs, DTMCs and memoryless deterministic schedulers, all over exact rationals."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

from .linalg import bfs_order, solve_sparse

Transition = Tuple[int, Fraction]
Distribution = Tuple[Transition, ...]


class ModelError(ValueError):
    """Raised when a model file or an in-memory model is malformed."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def parse_probability(value) -> Fraction:
    """Exact rational from ``"p/q"``, a decimal literal, or an int.

    Floats are rejected: their binary expansion is not the number the
    author wrote. Read JSON with ``parse_float=str`` instead.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError(f"not a probability: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {value!r}") from exc
    raise ValueError(f"not a probability: {value!r}")


def format_fraction(x: Fraction) -> str:
    return str(Fraction(x))


@dataclass(frozen=True)
class Mdp:
    """A finite MDP.

    ``actions[s]`` lists the names of the actions enabled in ``s`` in file
    order; ``transitions[s][a]`` is the distribution of the ``a``-th of them.
    """

    actions: Tuple[Tuple[str, ...], ...]
    transitions: Tuple[Tuple[Distribution, ...], ...]
    labels: Mapping[str, frozenset] = field(default_factory=dict)

    @property
    def num_states(self) -> int:
        return len(self.transitions)

    @property
    def num_choices(self) -> int:
        return sum(len(a) for a in self.transitions)

    @property
    def num_transitions(self) -> int:
        return sum(len(d) for acts in self.transitions for d in acts)

    def successors(self, s: int) -> List[int]:
        out = []
        for dist in self.transitions[s]:
            for t, _ in dist:
                out.append(t)
        return out

    def label_of(self, s: int) -> List[str]:
        return sorted(name for name, states in self.labels.items() if s in states)

    def state_name(self, s: int) -> str:
        """A singleton label naming ``s`` if there is one, else its index."""
        for name in sorted(self.labels):
            if self.labels[name] == frozenset([s]):
                return name
        return str(s)

    def is_absorbing(self, s: int) -> bool:
        return all(d == ((s, Fraction(1)),) for d in self.transitions[s])


@dataclass(frozen=True)
class MdScheduler:
    """Memoryless deterministic scheduler: one action index per state."""

    choice: Tuple[int, ...]

    def action_names(self, m: Mdp) -> Dict[int, str]:
        return {s: m.actions[s][a] for s, a in enumerate(self.choice)}


@dataclass(frozen=True)
class Dtmc:
    rows: Tuple[Distribution, ...]

    @property
    def num_states(self) -> int:
        return len(self.rows)


def build_mdp(
    states: Sequence[Sequence[Tuple[str, Iterable[Tuple[int, object]]]]],
    labels: Mapping[str, Iterable[int]] | None = None,
    validate: bool = True,
) -> Mdp:
    """Convenience constructor from nested python lists.

    ``states[s]`` is a list of ``(action_name, [(succ, prob), ...])``.
    """
    actions = []
    transitions = []
    for acts in states:
        actions.append(tuple(name for name, _ in acts))
        transitions.append(
            tuple(
                tuple((int(t), parse_probability(p)) for t, p in dist)
                for _, dist in acts
            )
        )
    m = Mdp(
        actions=tuple(actions),
        transitions=tuple(transitions),
        labels={k: frozenset(v) for k, v in (labels or {}).items()},
    )
    if validate:
        errors = validate_mdp(m)
        if errors:
            raise ModelError(errors)
    return m


def validate_mdp(m: Mdp) -> List[str]:
    """Return a list of human readable problems; empty means valid."""
    errors: List[str] = []
    n = m.num_states
    if n == 0:
        errors.append("model has no states")
    if len(m.actions) != n:
        errors.append("action names and transitions disagree on the number of states")
        return errors
    for s in range(n):
        if not m.transitions[s]:
            errors.append(f"state {s}: no enabled actions")
            continue
        if len(m.actions[s]) != len(m.transitions[s]):
            errors.append(f"state {s}: action names and distributions disagree")
            continue
        if len(set(m.actions[s])) != len(m.actions[s]):
            errors.append(f"state {s}: duplicate action names")
        for name, dist in zip(m.actions[s], m.transitions[s]):
            seen = set()
            total = Fraction(0)
            for t, p in dist:
                if not 0 <= t < n:
                    errors.append(f"state {s}, action {name}: successor {t} out of range")
                if t in seen:
                    errors.append(f"state {s}, action {name}: duplicate successor {t}")
                seen.add(t)
                if not 0 < p <= 1:
                    errors.append(
                        f"state {s}, action {name}: probability {p} out of range (0,1]"
                    )
                total += p
            if total != 1:
                errors.append(f"state {s}, action {name}: row sum {total} != 1")
    for label, states in m.labels.items():
        for t in states:
            if not 0 <= t < n:
                errors.append(f"label {label}: state {t} out of range")
    return errors


def reachable_states(m: Mdp, init: Iterable[int]) -> List[int]:
    """States reachable from ``init`` under some action sequence, in BFS order."""
    seen = set()
    order = []
    queue = deque()
    for s in init:
        if s not in seen:
            seen.add(s)
            queue.append(s)
    while queue:
        s = queue.popleft()
        order.append(s)
        for t in m.successors(s):
            if t not in seen:
                seen.add(t)
                queue.append(t)
    return order


def reachable_restriction(m: Mdp, init: Iterable[int]) -> Tuple[Mdp, Dict[int, int]]:
    """Sub-MDP of states reachable from ``init``; returns it with old->new indices.

    New indices preserve the relative order of the old ones.
    """
    keep = sorted(reachable_states(m, init))
    remap = {old: new for new, old in enumerate(keep)}
    transitions = tuple(
        tuple(tuple((remap[t], p) for t, p in dist) for dist in m.transitions[s])
        for s in keep
    )
    actions = tuple(m.actions[s] for s in keep)
    labels = {
        name: frozenset(remap[s] for s in states if s in remap)
        for name, states in m.labels.items()
    }
    return Mdp(actions=actions, transitions=transitions, labels=labels), remap


def induce_dtmc(m: Mdp, sched: MdScheduler) -> Dtmc:
    if len(sched.choice) != m.num_states:
        raise ValueError("scheduler does not cover every state")
    rows = []
    for s, a in enumerate(sched.choice):
        if not 0 <= a < len(m.transitions[s]):
            raise ValueError(f"scheduler picks disabled action {a} in state {s}")
        rows.append(m.transitions[s][a])
    return Dtmc(tuple(rows))


def _can_reach(rows: Sequence[Distribution], target: Iterable[int]) -> set:
    pred: Dict[int, List[int]] = {}
    for s, dist in enumerate(rows):
        for t, _ in dist:
            pred.setdefault(t, []).append(s)
    seen = set(target)
    queue = deque(seen)
    while queue:
        t = queue.popleft()
        for s in pred.get(t, ()):
            if s not in seen:
                seen.add(s)
                queue.append(s)
    return seen


def _forward(rows: Sequence[Distribution], init: Iterable[int], stop: set) -> set:
    seen = set(init)
    queue = deque(seen)
    while queue:
        s = queue.popleft()
        if s in stop:
            continue
        for t, _ in rows[s]:
            if t not in seen:
                seen.add(t)
                queue.append(t)
    return seen


def dtmc_reach_probs(d: Dtmc, target: Iterable[int], sources: Iterable[int]) -> Dict[int, Fraction]:
    """Exact ``Pr_s(F target)`` for every ``s`` in ``sources``."""
    target = set(target)
    sources = list(sources)
    forward = _forward(d.rows, sources, target)
    positive = _can_reach(d.rows, target) & forward
    unknown = [s for s in positive if s not in target]
    rows: Dict[int, Dict[int, Fraction]] = {}
    rhs: Dict[int, Fraction] = {}
    for s in unknown:
        row = {s: Fraction(1)}
        b = Fraction(0)
        for t, p in d.rows[s]:
            if t in target:
                b += p
            elif t in positive:
                row[t] = row.get(t, Fraction(0)) - p
        rows[s] = row
        rhs[s] = b
    order = bfs_order(lambda v: (t for t, _ in d.rows[v]), sources, unknown)
    x = solve_sparse(rows, rhs, order)
    out = {}
    for s in sources:
        if s in target:
            out[s] = Fraction(1)
        else:
            out[s] = x.get(s, Fraction(0))
    return out


def dtmc_reach_prob_exact(d: Dtmc, start: int, target: Iterable[int]) -> Fraction:
    """Exact probability of eventually reaching ``target`` from ``start``."""
    return dtmc_reach_probs(d, target, [start])[start]


def dtmc_expected_reward(d: Dtmc, reward: Mapping[int, Fraction], start: int) -> Fraction:
    """Expected total reward from ``start``, counting the reward of every visited state.

    Rewards inside bottom SCCs would make the total diverge; they are
    rejected.
    """
    nonzero = {s for s, r in reward.items() if r != 0}
    if not nonzero:
        return Fraction(0)
    forward = _forward(d.rows, [start], set())
    # States that can still collect reward; each must be transient.
    live = _can_reach(d.rows, nonzero) & forward
    rows: Dict[int, Dict[int, Fraction]] = {}
    rhs: Dict[int, Fraction] = {}
    for s in live:
        row = {s: Fraction(1)}
        for t, p in d.rows[s]:
            if t in live:
                row[t] = row.get(t, Fraction(0)) - p
        rows[s] = row
        rhs[s] = Fraction(reward.get(s, 0))
    order = bfs_order(lambda v: (t for t, _ in d.rows[v]), [start], list(live))
    try:
        x = solve_sparse(rows, rhs, order)
    except ArithmeticError as exc:
        raise ValueError("expected total reward diverges (reward inside a bottom SCC)") from exc
    return x.get(start, Fraction(0))


# --- JSON model format ------------------------------------------------------


def mdp_to_dict(m: Mdp) -> dict:
    states = []
    for s in range(m.num_states):
        acts = []
        for name, dist in zip(m.actions[s], m.transitions[s]):
            acts.append(
                {"name": name, "transitions": [[t, format_fraction(p)] for t, p in dist]}
            )
        states.append({"actions": acts})
    labels = {name: sorted(m.labels[name]) for name in sorted(m.labels)}
    return {"num_states": m.num_states, "states": states, "labels": labels}


def mdp_from_dict(data: dict) -> Mdp:
    errors = []
    try:
        n = data["num_states"]
        raw_states = data["states"]
    except (KeyError, TypeError):
        raise ModelError(["model must have 'num_states' and 'states'"])
    if not isinstance(n, int) or n != len(raw_states):
        raise ModelError([f"num_states={n!r} but {len(raw_states)} states listed"])
    actions = []
    transitions = []
    for s, st in enumerate(raw_states):
        names = []
        dists = []
        for act in st.get("actions", []):
            name = str(act.get("name", ""))
            dist = []
            for entry in act.get("transitions", []):
                try:
                    t, p = entry
                    dist.append((int(t), parse_probability(p)))
                except (TypeError, ValueError) as exc:
                    errors.append(f"state {s}, action {name}: bad transition {entry!r} ({exc})")
            names.append(name)
            dists.append(tuple(dist))
        actions.append(tuple(names))
        transitions.append(tuple(dists))
    labels = {}
    for name, states in (data.get("labels") or {}).items():
        try:
            labels[str(name)] = frozenset(int(s) for s in states)
        except (TypeError, ValueError):
            errors.append(f"label {name}: states must be integers")
    if errors:
        raise ModelError(errors)
    m = Mdp(actions=tuple(actions), transitions=tuple(transitions), labels=labels)
    errors = validate_mdp(m)
    if errors:
        raise ModelError(errors)
    return m


def dumps_mdp(m: Mdp, extra: dict | None = None) -> str:
    data = mdp_to_dict(m)
    if extra:
        data.update(extra)
    return json.dumps(data, indent=1)


def loads_mdp(text: str) -> Mdp:
    try:
        data = json.loads(text, parse_float=str)
    except json.JSONDecodeError as exc:
        raise ModelError([f"invalid JSON: {exc}"]) from exc
    return mdp_from_dict(data)


def load_mdp(path) -> Mdp:
    with open(path, encoding="utf-8") as fh:
        return loads_mdp(fh.read())
