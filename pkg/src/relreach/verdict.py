"""Aggregation, the three-valued decision table, and witness schedulers."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from .model import MdScheduler, dtmc_reach_probs, induce_dtmc
from .pipeline import Combination, GoalUnfolding
from .property import holds_for_value
from .solver import Bounds, CombinationResult


class Answer(enum.Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"

    def complement(self) -> "Answer":
        if self is Answer.HOLDS:
            return Answer.VIOLATED
        if self is Answer.VIOLATED:
            return Answer.HOLDS
        return self


class WitnessError(RuntimeError):
    pass


@dataclass(frozen=True)
class AggregateResult:
    v_max: Bounds
    v_min: Optional[Bounds] = None


def aggregate(results: Sequence[CombinationResult], need_min: bool = True) -> AggregateResult:
    if not results:
        raise ValueError("nothing to aggregate")
    v_max = Bounds.point(0)
    for r in results:
        v_max = v_max + r.max_bounds
    if not need_min:
        return AggregateResult(v_max=v_max)
    v_min = Bounds.point(0)
    for r in results:
        if r.min_bounds is None:
            raise ValueError("min bounds missing for an approximate comparison")
        v_min = v_min + r.min_bounds
    return AggregateResult(v_max=v_max, v_min=v_min)


def decide(
    agg: AggregateResult,
    comp: str,
    q: Fraction,
    eps: Optional[Fraction] = None,
    negated: bool = False,
) -> Answer:
    """Three-valued answer for ``exists . sum comp q`` given sound bounds.

    ``comp`` must be one of the normalized comparisons ``> >= ~ !~``.
    """
    hi = agg.v_max
    if comp in (">", ">="):
        if holds_for_value(hi.lower, comp, q, None):
            ans = Answer.HOLDS
        elif not holds_for_value(hi.upper, comp, q, None):
            ans = Answer.VIOLATED
        else:
            ans = Answer.INCONCLUSIVE
    elif comp in ("~", "!~"):
        lo = agg.v_min
        if lo is None:
            raise ValueError(f"comparison {comp!r} needs min bounds")
        if comp == "~":
            if lo.upper - eps <= q <= hi.lower + eps:
                ans = Answer.HOLDS
            elif not (lo.lower - eps <= q <= hi.upper + eps):
                ans = Answer.VIOLATED
            else:
                ans = Answer.INCONCLUSIVE
        else:
            if not (hi.lower - eps <= q <= lo.upper + eps):
                ans = Answer.HOLDS
            elif hi.upper - eps <= q <= lo.lower + eps:
                ans = Answer.VIOLATED
            else:
                ans = Answer.INCONCLUSIVE
    else:
        raise ValueError(f"comparison {comp!r} is not normalized")
    return ans.complement() if negated else ans


# --- witnesses --------------------------------------------------------------


@dataclass(frozen=True)
class Witness:
    """Finite representation of a witness for a normalized existential query.

    ``high[i]`` and ``low[i]`` are MD schedulers on the unfolding of
    combination ``i``. ``kind`` is ``"max"`` (follow ``high``), ``"min"``
    (follow ``low``) or ``"mix"``: flip one coin at the start and follow
    ``low`` with probability ``lam``, ``high`` otherwise.
    """

    kind: str
    high: Optional[Tuple[MdScheduler, ...]]
    low: Optional[Tuple[MdScheduler, ...]]
    lam: Optional[Fraction]
    value: Fraction

    def __post_init__(self):
        if self.kind not in ("max", "min", "mix"):
            raise ValueError(f"unknown witness kind {self.kind!r}")
        if self.kind == "mix" and not (self.lam is not None and 0 <= self.lam <= 1):
            raise ValueError("mixing witness needs lam in [0, 1]")

    @property
    def weight_low(self) -> Fraction:
        if self.kind == "max":
            return Fraction(0)
        if self.kind == "min":
            return Fraction(1)
        return self.lam


def scheduler_value(u: GoalUnfolding, sched: MdScheduler) -> Fraction:
    """Exact ``sum_T q_T * Pr(F T)`` under an MD scheduler on the unfolding.

    Evaluated through target reachability on the induced DTMC, not through
    the reward structure, so it is an independent check of the reduction.
    """
    d = induce_dtmc(u.mdp, sched)
    total = Fraction(0)
    for target, coeff in zip(u.targets, u.coeffs):
        if coeff == 0:
            continue
        lifted = u.lifted_target(target)
        total += coeff * dtmc_reach_probs(d, lifted, [u.initial])[u.initial]
    return total


def _sum_values(unfoldings: Sequence[GoalUnfolding], scheds) -> Fraction:
    return sum((scheduler_value(u, s) for u, s in zip(unfoldings, scheds)), Fraction(0))


def synthesize_witness(
    agg: AggregateResult,
    results: Sequence[CombinationResult],
    comp: str,
    q: Fraction,
    eps: Optional[Fraction],
    exact: bool = True,
    unfoldings: Optional[Sequence[GoalUnfolding]] = None,
) -> Witness:
    """Witness for a normalized existential query that holds.

    With exact values the case split uses the aggregate directly. In
    approximate mode only pure witnesses are possible and ``unfoldings``
    must be supplied: the extracted schedulers are re-evaluated exactly and
    accepted only if they satisfy the comparison.
    """
    high = tuple(r.max_scheduler for r in results)
    low = None
    if comp in ("~", "!~"):
        low = tuple(r.min_scheduler for r in results)
    if exact:
        v_hi = agg.v_max.lower
        v_lo = agg.v_min.lower if agg.v_min is not None else None
    else:
        if unfoldings is None:
            raise WitnessError("approximate witnesses need the unfoldings for an exact check")
        v_hi = _sum_values(unfoldings, high)
        v_lo = _sum_values(unfoldings, low) if low is not None else None

    if comp in (">", ">="):
        if holds_for_value(v_hi, comp, q, None):
            return Witness("max", high, None, None, v_hi)
        raise WitnessError("maximizing scheduler does not satisfy the comparison")
    if comp == "!~":
        if v_hi > q + eps:
            return Witness("max", high, None, None, v_hi)
        if v_lo < q - eps:
            return Witness("min", None, low, None, v_lo)
        raise WitnessError("neither extreme scheduler leaves the eps-band")
    if comp != "~":
        raise ValueError(f"comparison {comp!r} is not normalized")
    if q - eps <= v_hi <= q + eps:
        return Witness("max", high, None, None, v_hi)
    if q - eps <= v_lo <= q + eps:
        return Witness("min", None, low, None, v_lo)
    if not v_lo < q < v_hi:
        raise WitnessError("threshold lies outside the achievable range")
    if not exact:
        raise WitnessError("exact mode required for mixing witness")
    lam = (v_hi - q) / (v_hi - v_lo)
    value = lam * v_lo + (1 - lam) * v_hi
    return Witness("mix", high, low, lam, value)


@dataclass(frozen=True)
class WitnessCheck:
    passed: bool
    value: Fraction


def validate_witness(
    w: Witness,
    unfoldings: Sequence[GoalUnfolding],
    comp: str,
    q: Fraction,
    eps: Optional[Fraction],
) -> WitnessCheck:
    """Recompute the value a witness achieves and test the comparison."""
    lam = w.weight_low
    value = Fraction(0)
    if lam != 1:
        value += (1 - lam) * _sum_values(unfoldings, w.high)
    if lam != 0:
        value += lam * _sum_values(unfoldings, w.low)
    return WitnessCheck(holds_for_value(value, comp, q, eps), value)


def witness_schedulers_by_variable(
    w: Witness, combos: Sequence[Combination], unfoldings: Sequence[GoalUnfolding]
):
    """Group a witness's per-combination schedulers by scheduler variable.

    Returns ``{var: [(combination index, side, {(state, mask): action index})]}``
    with ``side`` in ``"high"``/``"low"``.
    """
    out = {}
    for i, (c, u) in enumerate(zip(combos, unfoldings)):
        for side, scheds in (("high", w.high), ("low", w.low)):
            if scheds is None:
                continue
            table = {u.back_map[v]: a for v, a in enumerate(scheds[i].choice)}
            out.setdefault(c.sched, []).append((i, side, table))
    return out
