"""End-to-end check of a RelReach property and its JSON report."""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .mec import MecQuotient, build_quotient, mec_decompose
from .model import Mdp, format_fraction
from .pipeline import Combination, GoalUnfolding, build_rewards, collect_combinations, goal_unfold
from .property import NormalizedQuery, RelReachQuery, normalize, parse_property
from .solver import (
    Bounds,
    CombinationResult,
    SolverConfig,
    lift_scheduler,
    max_expected_reward,
    min_expected_reward,
)
from .verdict import (
    AggregateResult,
    Answer,
    Witness,
    WitnessError,
    aggregate,
    decide,
    synthesize_witness,
)

STEPS = ("parse", "unfold", "mec", "solve", "aggregate")


@dataclass(frozen=True)
class SolvedCombination:
    combination: Combination
    unfolding: GoalUnfolding
    quotient: MecQuotient
    result: CombinationResult
    timings: Dict[str, float]


def solve_combination(
    m: Mdp, c: Combination, cfg: SolverConfig, need_min: bool
) -> SolvedCombination:
    t0 = time.perf_counter()
    u = build_rewards(goal_unfold(m, c), c)
    t1 = time.perf_counter()
    qt = build_quotient(u, mec_decompose(u.mdp))
    t2 = time.perf_counter()
    hi, hi_q = max_expected_reward(qt, cfg)
    res = CombinationResult(max_bounds=hi, max_scheduler=lift_scheduler(hi_q, qt, u))
    if need_min:
        lo, lo_q = min_expected_reward(qt, cfg)
        res = CombinationResult(
            max_bounds=hi,
            max_scheduler=res.max_scheduler,
            min_bounds=lo,
            min_scheduler=lift_scheduler(lo_q, qt, u),
        )
    t3 = time.perf_counter()
    return SolvedCombination(
        combination=c,
        unfolding=u,
        quotient=qt,
        result=res,
        timings={"unfold": t1 - t0, "mec": t2 - t1, "solve": t3 - t2},
    )


def _solve_star(args):
    return solve_combination(*args)


@dataclass
class CheckResult:
    query: RelReachQuery | NormalizedQuery
    normalized: NormalizedQuery
    solved: List[SolvedCombination]
    aggregate: AggregateResult
    answer: Answer
    normalized_answer: Answer
    config: SolverConfig
    witness: Optional[Witness] = None
    witness_error: Optional[str] = None
    timings: Dict[str, float] = field(default_factory=dict)
    model_states: int = 0
    model_transitions: int = 0

    @property
    def combinations(self) -> List[Combination]:
        return [s.combination for s in self.solved]

    @property
    def unfoldings(self) -> List[GoalUnfolding]:
        return [s.unfolding for s in self.solved]

    @property
    def results(self) -> List[CombinationResult]:
        return [s.result for s in self.solved]


def check(
    m: Mdp,
    query: str | RelReachQuery | NormalizedQuery,
    config: Optional[SolverConfig] = None,
    jobs: int = 1,
    witness: bool = True,
) -> CheckResult:
    """Decide ``query`` on ``m``.

    The witness, when one exists, demonstrates the normalized existential
    query; for a universal query that is a counterexample.
    """
    cfg = config or SolverConfig()
    timings = {k: 0.0 for k in STEPS}
    t0 = time.perf_counter()
    if isinstance(query, str):
        query = parse_property(query, m)
    nq = normalize(query)
    combos = collect_combinations(nq)
    timings["parse"] = time.perf_counter() - t0

    need_min = nq.comp in ("~", "!~")
    work = [(m, c, cfg, need_min) for c in combos]
    if jobs > 1 and len(combos) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(combos))) as pool:
            solved = list(pool.map(_solve_star, work))
    else:
        solved = [solve_combination(*w) for w in work]
    for s in solved:
        for k, v in s.timings.items():
            timings[k] += v

    t0 = time.perf_counter()
    agg = aggregate([s.result for s in solved], need_min=need_min)
    norm_answer = decide(agg, nq.comp, nq.threshold, nq.eps)
    answer = norm_answer.complement() if nq.negated else norm_answer
    wit, wit_err = None, None
    if witness and norm_answer is Answer.HOLDS:
        try:
            wit = synthesize_witness(
                agg,
                [s.result for s in solved],
                nq.comp,
                nq.threshold,
                nq.eps,
                exact=cfg.exact,
                unfoldings=[s.unfolding for s in solved],
            )
        except WitnessError as exc:
            wit_err = str(exc)
    timings["aggregate"] = time.perf_counter() - t0

    return CheckResult(
        query=query,
        normalized=nq,
        solved=solved,
        aggregate=agg,
        answer=answer,
        normalized_answer=norm_answer,
        config=cfg,
        witness=wit,
        witness_error=wit_err,
        timings=timings,
        model_states=m.num_states,
        model_transitions=m.num_transitions,
    )


# --- report -----------------------------------------------------------------


def _bounds_dict(b: Optional[Bounds]):
    if b is None:
        return None
    return {"lb": format_fraction(b.lower), "ub": format_fraction(b.upper)}


def witness_to_dict(w: Witness, res: CheckResult) -> dict:
    m_names = res.normalized.variables
    schedulers: Dict[str, list] = {}
    for i, s in enumerate(res.solved):
        u = s.unfolding
        c = s.combination
        entry = {"combination": i, "state": c.state}
        for side, scheds in (("high", w.high), ("low", w.low)):
            if scheds is None:
                continue
            entry[side] = [
                [orig, mask, u.mdp.actions[v][a]]
                for v, ((orig, mask), a) in enumerate(zip(u.back_map, scheds[i].choice))
            ]
        schedulers.setdefault(m_names[c.sched], []).append(entry)
    return {
        "kind": w.kind,
        "lambda": None if w.lam is None else format_fraction(w.lam),
        "value": format_fraction(w.value),
        "schedulers": schedulers,
    }


def report_dict(res: CheckResult, include_witness: bool = True, timings: bool = False) -> dict:
    per = []
    for s in res.solved:
        c = s.combination
        per.append(
            {
                "scheduler": res.normalized.variables[c.sched],
                "state": c.state,
                "terms": list(c.indices),
                "unfolding_states": s.unfolding.num_states,
                "quotient_states": s.quotient.num_states,
                "v_max": _bounds_dict(s.result.max_bounds),
                "v_min": _bounds_dict(s.result.min_bounds),
            }
        )
    out = {
        "verdict": res.answer.value,
        "v_max": _bounds_dict(res.aggregate.v_max),
        "v_min": _bounds_dict(res.aggregate.v_min),
        "per_combination": per,
        "mode": res.config.mode,
        "tolerance": format_fraction(res.config.tolerance),
        "model": {"states": res.model_states, "transitions": res.model_transitions},
    }
    if include_witness and res.witness is not None:
        out["witness"] = witness_to_dict(res.witness, res)
    if res.witness_error is not None:
        out["witness_error"] = res.witness_error
    if timings:
        out["timings"] = {k: res.timings.get(k, 0.0) for k in STEPS}
    return out


def render_report(res: CheckResult, **kw) -> str:
    return json.dumps(report_dict(res, **kw), indent=1)


class ReportError(ValueError):
    pass


def _parse_bounds(d, key) -> Optional[Tuple[Fraction, Fraction]]:
    if d is None:
        return None
    try:
        lb, ub = Fraction(d["lb"]), Fraction(d["ub"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ReportError(f"{key}: malformed bounds {d!r}") from exc
    if lb > ub:
        raise ReportError(f"{key}: lb > ub")
    return lb, ub


def parse_report(text: str) -> dict:
    """Validate a JSON report and convert its rationals to ``Fraction``."""
    data = json.loads(text)
    if data.get("verdict") not in {a.value for a in Answer}:
        raise ReportError(f"bad verdict {data.get('verdict')!r}")
    out = dict(data)
    out["v_max"] = _parse_bounds(data.get("v_max"), "v_max")
    if out["v_max"] is None:
        raise ReportError("v_max missing")
    out["v_min"] = _parse_bounds(data.get("v_min"), "v_min")
    per = []
    for i, p in enumerate(data.get("per_combination", [])):
        p = dict(p)
        p["v_max"] = _parse_bounds(p.get("v_max"), f"per_combination[{i}].v_max")
        p["v_min"] = _parse_bounds(p.get("v_min"), f"per_combination[{i}].v_min")
        per.append(p)
    out["per_combination"] = per
    w = data.get("witness")
    if w is not None:
        w = dict(w)
        if w.get("kind") not in ("max", "min", "mix"):
            raise ReportError(f"bad witness kind {w.get('kind')!r}")
        w["value"] = Fraction(w["value"])
        w["lambda"] = None if w.get("lambda") is None else Fraction(w["lambda"])
        out["witness"] = w
    return out


def dump_unfoldings(res: CheckResult) -> str:
    """Debug dump: every unfolding in the model format plus rewards."""
    from .model import mdp_to_dict

    items = []
    for s in res.solved:
        u = s.unfolding
        d = mdp_to_dict(u.mdp)
        d["initial"] = u.initial
        d["back_map"] = [list(p) for p in u.back_map]
        d["rewards"] = {
            str(v): format_fraction(r) for v, r in enumerate(u.rewards) if r != 0
        }
        items.append(d)
    return json.dumps({"unfoldings": items}, indent=1)
