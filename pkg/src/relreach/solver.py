"""Optimal expected rewards on MEC quotients.

Exact mode runs policy iteration with exact rational policy evaluation.
Approximate mode runs interval iteration on integers scaled by ``2**64``,
rounding lower bounds down and upper bounds up, so every reported bound is
sound regardless of how far the iteration got.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .linalg import bfs_order, solve_sparse
from .mec import STAY, MecQuotient
from .model import MdScheduler
from .pipeline import GoalUnfolding

SCALE_BITS = 64
SCALE = 1 << SCALE_BITS


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    mode: str = "approx"
    tolerance: Fraction = Fraction(1, 10**6)
    max_iterations: int = 1_000_000

    def __post_init__(self):
        if self.mode not in ("exact", "approx"):
            raise ValueError(f"unknown solver mode {self.mode!r}")
        tol = Fraction(self.tolerance)
        if tol < 0:
            raise ValueError("tolerance must be nonnegative")
        if self.mode == "exact":
            tol = Fraction(0)
        elif tol == 0:
            raise ValueError("approximate mode needs a positive tolerance")
        object.__setattr__(self, "tolerance", tol)
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")

    @property
    def exact(self) -> bool:
        return self.mode == "exact"

    @classmethod
    def exact_mode(cls) -> "SolverConfig":
        return cls(mode="exact", tolerance=Fraction(0))


@dataclass(frozen=True)
class Bounds:
    lower: Fraction
    upper: Fraction

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"invalid bounds [{self.lower}, {self.upper}]")

    @classmethod
    def point(cls, x) -> "Bounds":
        return cls(Fraction(x), Fraction(x))

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    @property
    def is_exact(self) -> bool:
        return self.lower == self.upper

    def __add__(self, other: "Bounds") -> "Bounds":
        return Bounds(self.lower + other.lower, self.upper + other.upper)

    def __neg__(self) -> "Bounds":
        return Bounds(-self.upper, -self.lower)

    def __contains__(self, x) -> bool:
        return self.lower <= x <= self.upper


def _q_value(dist, values) -> Fraction:
    return sum((p * values[t] for t, p in dist), Fraction(0))


def evaluate_policy(qt: MecQuotient, choice: Sequence[int]) -> List[Fraction]:
    """Exact expected reward collected before reaching ``bot`` under an MD policy."""
    m = qt.mdp
    rows: Dict[int, Dict[int, Fraction]] = {}
    rhs: Dict[int, Fraction] = {}
    for s in range(m.num_states):
        if s == qt.bot:
            continue
        row = {s: Fraction(1)}
        for t, p in m.transitions[s][choice[s]]:
            if t != qt.bot:
                row[t] = row.get(t, Fraction(0)) - p
        rows[s] = row
        rhs[s] = qt.rewards[s]
    order = bfs_order(
        lambda v: (t for t, _ in m.transitions[v][choice[v]]),
        [qt.initial],
        [s for s in range(m.num_states) if s != qt.bot],
    )
    x = solve_sparse(rows, rhs, order)
    x[qt.bot] = Fraction(0)
    return [x[s] for s in range(m.num_states)]


def greedy_choice(qt: MecQuotient, values: Sequence) -> List[int]:
    """Lowest-index maximizer of the one-step lookahead in every state."""
    out = []
    for s, dists in enumerate(qt.mdp.transitions):
        best_a, best_v = 0, None
        for a, dist in enumerate(dists):
            v = sum(p * values[t] for t, p in dist)
            if best_v is None or v > best_v:
                best_a, best_v = a, v
        out.append(best_a)
    return out


def bellman_residual(qt: MecQuotient, values: Sequence[Fraction]) -> Fraction:
    """max over states of |best one-step value - current value|."""
    worst = Fraction(0)
    for s, dists in enumerate(qt.mdp.transitions):
        if s == qt.bot:
            continue
        best = max(_q_value(d, values) for d in dists) + qt.rewards[s]
        worst = max(worst, abs(best - values[s]))
    return worst


def policy_iteration(qt: MecQuotient) -> Tuple[List[Fraction], List[int], int]:
    """Returns (optimal values, optimal choice, number of improvement steps)."""
    m = qt.mdp
    choice = [0] * m.num_states
    steps = 0
    while True:
        values = evaluate_policy(qt, choice)
        improved = False
        for s in range(m.num_states):
            if s == qt.bot:
                continue
            dists = m.transitions[s]
            current = _q_value(dists[choice[s]], values)
            best_a, best_v = choice[s], current
            for a, dist in enumerate(dists):
                v = _q_value(dist, values)
                if v > best_v:
                    best_a, best_v = a, v
            if best_a != choice[s]:
                choice[s] = best_a
                improved = True
        if not improved:
            break
        steps += 1
    # Every policy is proper here, so any greedy policy for the optimal
    # values is optimal; pick the canonical one.
    return values, greedy_choice(qt, values), steps


def _scaled_rows(qt: MecQuotient):
    rows = []
    for dists in qt.mdp.transitions:
        rows.append(
            [[(t, p.numerator, p.denominator) for t, p in dist] for dist in dists]
        )
    return rows


def interval_iteration(
    qt: MecQuotient, tolerance: Fraction, max_iterations: int
) -> Tuple[Bounds, List[int], int]:
    m = qt.mdp
    rows = _scaled_rows(qt)
    n = m.num_states
    lo = [0] * n
    hi = [0] * n
    r_lo = [0] * n
    r_hi = [0] * n
    for s in range(n):
        b_lo, b_hi = qt.bounds[s]
        lo[s] = (b_lo.numerator * SCALE) // b_lo.denominator
        hi[s] = -((-b_hi.numerator * SCALE) // b_hi.denominator)
        r = qt.rewards[s]
        r_lo[s] = (r.numerator * SCALE) // r.denominator
        r_hi[s] = -((-r.numerator * SCALE) // r.denominator)
    lo[qt.bot] = hi[qt.bot] = 0
    order = bfs_order(m.successors, [qt.initial], [s for s in range(n) if s != qt.bot])
    limit = (tolerance.numerator * SCALE) // tolerance.denominator
    init = qt.initial
    sweeps = 0
    while hi[init] - lo[init] > limit:
        if sweeps >= max_iterations:
            raise SolverError(
                f"interval iteration did not reach tolerance {tolerance} in {max_iterations} sweeps"
            )
        sweeps += 1
        changed = False
        for s in order:
            best_lo = best_hi = None
            for dist in rows[s]:
                acc_lo = acc_hi = 0
                for t, a, b in dist:
                    acc_lo += (a * lo[t]) // b
                    acc_hi -= (-a * hi[t]) // b
                if best_lo is None or acc_lo > best_lo:
                    best_lo = acc_lo
                if best_hi is None or acc_hi > best_hi:
                    best_hi = acc_hi
            new_lo = r_lo[s] + best_lo
            new_hi = r_hi[s] + best_hi
            if new_lo > lo[s]:
                lo[s] = new_lo
                changed = True
            if new_hi < hi[s]:
                hi[s] = new_hi
                changed = True
        if not changed:
            raise SolverError(
                "interval iteration stalled above the tolerance (rounding floor reached)"
            )
    bounds = Bounds(Fraction(lo[init], SCALE), Fraction(hi[init], SCALE))
    return bounds, greedy_choice(qt, lo), sweeps


def max_expected_reward(qt: MecQuotient, cfg: SolverConfig) -> Tuple[Bounds, MdScheduler]:
    """Bounds on the maximal expected reward before ``bot``, plus an MD scheduler."""
    if qt.initial == qt.bot:
        return Bounds.point(0), MdScheduler(tuple([0] * qt.num_states))
    if cfg.exact:
        values, choice, _ = policy_iteration(qt)
        return Bounds.point(values[qt.initial]), MdScheduler(tuple(choice))
    bounds, choice, _ = interval_iteration(qt, cfg.tolerance, cfg.max_iterations)
    return bounds, MdScheduler(tuple(choice))


def min_expected_reward(qt: MecQuotient, cfg: SolverConfig) -> Tuple[Bounds, MdScheduler]:
    bounds, sched = max_expected_reward(qt.negated(), cfg)
    return -bounds, sched


def lift_scheduler(sched: MdScheduler, qt: MecQuotient, u: GoalUnfolding) -> MdScheduler:
    """Turn a quotient scheduler into an MD scheduler on the unfolding.

    Inside a MEC whose quotient choice leaves through ``(x, a)``, every other
    member steers towards ``x`` along retained actions, so ``x`` is reached
    almost surely; for the stay action each member plays its first retained
    action and the run never leaves.
    """
    m = u.mdp
    choice: List[Optional[int]] = [None] * m.num_states
    for v in range(m.num_states):
        q = qt.state_map[v]
        if qt.mec_of[q] is None:
            prov = qt.provenance[q][sched.choice[q]]
            choice[v] = prov[1]
    for q, e in enumerate(qt.mec_of):
        if e is None:
            continue
        mec = qt.mecs[e]
        prov = qt.provenance[q][sched.choice[q]]
        if prov is STAY:
            for v in mec.states:
                choice[v] = mec.actions[v][0]
            continue
        exit_state, exit_action = prov
        choice[exit_state] = exit_action
        assigned = {exit_state}
        pending = set(mec.states) - assigned
        while pending:
            layer = {}
            for v in sorted(pending):
                for a in mec.actions[v]:
                    if any(t in assigned for t, _ in m.transitions[v][a]):
                        layer[v] = a
                        break
            if not layer:
                raise AssertionError("end component is not strongly connected")
            for v, a in layer.items():
                choice[v] = a
            assigned |= set(layer)
            pending -= set(layer)
    return MdScheduler(tuple(choice))


@dataclass(frozen=True)
class CombinationResult:
    max_bounds: Bounds
    max_scheduler: MdScheduler  # on the unfolding
    min_bounds: Optional[Bounds] = None
    min_scheduler: Optional[MdScheduler] = None
