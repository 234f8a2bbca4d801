"""Benchmark and counterexample models, each paired with its property."""

from __future__ import annotations

import json
import os
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .model import Mdp, build_mdp, dumps_mdp, format_fraction, parse_probability


@dataclass(frozen=True)
class GeneratedInstance:
    name: str
    mdp: Mdp
    property_text: str
    expected: Optional[str] = None  # "holds" | "violated" for the pipeline verdict
    provenance: Optional[str] = None  # "published" | "derived" | "trivial"
    expected_md: Optional[str] = None  # verdict over MD schedulers, when known
    notes: str = ""
    values: Dict[str, Fraction] = field(default_factory=dict)

    def expected_dict(self) -> dict:
        out = {"name": self.name, "verdict": self.expected, "provenance": self.provenance}
        if self.expected_md is not None:
            out["md_verdict"] = self.expected_md
        if self.values:
            out["values"] = {k: format_fraction(v) for k, v in sorted(self.values.items())}
        if self.notes:
            out["notes"] = self.notes
        return out


def write_instance(inst: GeneratedInstance, directory: str, expected: bool = True) -> List[str]:
    os.makedirs(directory, exist_ok=True)
    written = []
    path = os.path.join(directory, "model.json")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_mdp(inst.mdp) + "\n")
    written.append(path)
    path = os.path.join(directory, "property.txt")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(inst.property_text + "\n")
    written.append(path)
    if expected and inst.expected is not None:
        path = os.path.join(directory, "expected.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(inst.expected_dict(), indent=1) + "\n")
        written.append(path)
    return written


class _Builder:
    """Assigns dense indices to hashable state keys in creation order."""

    def __init__(self):
        self.index: Dict[object, int] = {}
        self.keys: List[object] = []
        self.actions: List[List[Tuple[str, List[Tuple[int, Fraction]]]]] = []

    def state(self, key) -> int:
        s = self.index.get(key)
        if s is None:
            s = self.index[key] = len(self.keys)
            self.keys.append(key)
            self.actions.append([])
        return s

    def action(self, key, name: str, dist: Iterable[Tuple[object, Fraction]]):
        acc: Dict[int, Fraction] = {}
        for k, p in dist:
            if p == 0:
                continue
            t = self.state(k)
            acc[t] = acc.get(t, Fraction(0)) + p
        self.actions[self.state(key)].append((name, sorted(acc.items())))

    def build(self, labels: Dict[str, Iterable[object]]) -> Mdp:
        lab = {name: [self.index[k] for k in keys] for name, keys in labels.items()}
        return build_mdp(self.actions, lab)


def _rat(x) -> Fraction:
    return parse_probability(x) if isinstance(x, str) else Fraction(x)


# --- von Neumann trick --------------------------------------------------------


def gen_von_neumann(N: int, p_lo="59/100", p_hi="61/100", eps="0") -> GeneratedInstance:
    """Extract a fair bit from a coin of unknown bias in ``[p_lo, p_hi]``.

    Draw ``2N`` bits; if zeros and ones are balanced return the first bit,
    otherwise start over. ``p`` is the probability of drawing a zero and the
    adversary picks the bias afresh at every draw. States are
    ``(draws, zeros, first bit)`` plus the start state and ``ret0``/``ret1``.
    """
    p_lo, p_hi, eps = _rat(p_lo), _rat(p_hi), _rat(eps)
    if N < 1:
        raise ValueError("N must be at least 1")
    if not 0 < p_lo <= p_hi < 1:
        raise ValueError("need 0 < p_lo <= p_hi < 1")
    biases = [("lo", p_lo), ("hi", p_hi)] if p_lo != p_hi else [("p", p_lo)]
    draws = 2 * N
    b = _Builder()
    start, ret0, ret1 = "start", "ret0", "ret1"
    b.state(start)

    def after(k, z, f):
        if k < draws:
            return (k, z, f)
        if z == N:
            return ret0 if f == 0 else ret1
        return start

    for name, p in biases:
        b.action(start, name, [(after(1, 1, 0), p), (after(1, 0, 1), 1 - p)])
    for k in range(1, draws):
        for f in (0, 1):
            zs = range(1, k + 1) if f == 0 else range(0, k)
            for z in zs:
                for name, p in biases:
                    b.action((k, z, f), name, [(after(k + 1, z + 1, f), p), (after(k + 1, z, f), 1 - p)])
    for r in (ret0, ret1):
        b.action(r, "done", [(r, Fraction(1))])
    m = b.build({"s0": [start], "ret0": [ret0], "ret1": [ret1]})
    prop = f"forall s . 1*P(s, s0, F ret0) - 1*P(s, s0, F ret1) ~ 0 eps {format_fraction(eps)}"
    expected, prov = None, None
    if (N, p_lo, p_hi) == (1, Fraction(59, 100), Fraction(61, 100)):
        expected = "violated" if eps < Fraction(1, 20) else "holds"
        prov = "published" if eps in (0, Fraction(1, 20), Fraction(1, 10)) else "derived"
    elif N == 10 and (p_lo, p_hi) == (Fraction(59, 100), Fraction(61, 100)) and eps in (0, Fraction(1, 10)):
        expected, prov = "violated", "published"
    elif p_lo == p_hi:
        expected, prov = "holds", "trivial"
    return GeneratedInstance(
        name=f"vn-N{N}",
        mdp=m,
        property_text=prop,
        expected=expected,
        provenance=prov,
        notes=f"{m.num_states} states",
    )


# --- robot and janitor ------------------------------------------------------


@dataclass(frozen=True)
class RobotTagConfig:
    move_success: Fraction = Fraction(9, 10)
    no_janitor: bool = False
    eps: Fraction = Fraction(1, 100000)


def robot_path(N: int) -> List[Tuple[int, int]]:
    """Cells (column, row), 1-based: right along row 1, then up column N."""
    return [(x, 1) for x in range(1, N + 1)] + [(N, y) for y in range(2, N + 1)]


def gen_robot_tag(
    N: int, janitor_start: Optional[Tuple[int, int]] = None, cfg: Optional[RobotTagConfig] = None
) -> GeneratedInstance:
    """Turn-based grid: the robot walks a fixed path, the janitor moves freely.

    The robot moves first. A move succeeds with probability
    ``cfg.move_success`` and otherwise leaves the robot in place; it is
    blocked while the janitor occupies the next cell. The janitor stays or
    steps to an adjacent free cell. Reaching the goal corner is absorbing.
    """
    cfg = cfg or RobotTagConfig()
    if N < 2:
        raise ValueError("grid must be at least 2x2")
    ps = _rat(cfg.move_success)
    if not 0 < ps <= 1:
        raise ValueError("move_success must lie in (0, 1]")
    path = robot_path(N)
    goal_idx = len(path) - 1
    b = _Builder()
    goal = "goal"
    if cfg.no_janitor:
        init = (0,)
        b.state(init)
        for i in range(goal_idx):
            nxt = (i + 1,) if i + 1 < goal_idx else goal
            b.action((i,), "move", [(nxt, ps), ((i,), 1 - ps)])
        b.action(goal, "done", [(goal, Fraction(1))])
        m = b.build({"init": [init], "goal": [goal]})
    else:
        if janitor_start is None:
            janitor_start = (N, N - 1)
        jx, jy = janitor_start
        if not (1 <= jx <= N and 1 <= jy <= N):
            raise ValueError("janitor must start inside the grid")
        if janitor_start == path[0]:
            raise ValueError("janitor cannot start on the robot")
        init = (0, janitor_start, "robot")
        b.state(init)
        queue = deque([init])
        seen = {init}

        def push(key):
            if key != goal and key not in seen:
                seen.add(key)
                queue.append(key)

        while queue:
            key = queue.popleft()
            i, jan, turn = key
            if turn == "robot":
                nxt_cell = path[i + 1]
                if nxt_cell == jan:
                    dist = [((i, jan, "janitor"), Fraction(1))]
                else:
                    moved = goal if i + 1 == goal_idx else (i + 1, jan, "janitor")
                    dist = [(moved, ps), ((i, jan, "janitor"), 1 - ps)]
                b.action(key, "move", dist)
                for k, _ in dist:
                    push(k)
            else:
                robot = path[i]
                x, y = jan
                moves = [("stay", jan)]
                for name, (dx, dy) in (("left", (-1, 0)), ("right", (1, 0)), ("down", (0, -1)), ("up", (0, 1))):
                    cell = (x + dx, y + dy)
                    if 1 <= cell[0] <= N and 1 <= cell[1] <= N and cell != robot:
                        moves.append((name, cell))
                for name, cell in moves:
                    k = (i, cell, "robot")
                    b.action(key, name, [(k, Fraction(1))])
                    push(k)
        b.action(goal, "done", [(goal, Fraction(1))])
        m = b.build({"init": [init], "goal": [goal]})
    eps = format_fraction(_rat(cfg.eps))
    prop = f"forall s1, s2 . 1*P(s1, init, F goal) - 1*P(s2, init, F goal) ~ 0 eps {eps}"
    expected, prov = None, None
    if cfg.no_janitor:
        expected, prov = "holds", "trivial"
    elif janitor_start == (N, N - 1):
        expected, prov = "violated", "derived"
    return GeneratedInstance(
        name=f"rt-N{N}",
        mdp=m,
        property_text=prop,
        expected=expected,
        provenance=prov,
        notes=f"{m.num_states} states",
    )


# --- thread scheduling --------------------------------------------------------


def gen_thread_scheduling(h1: int, h2: int) -> GeneratedInstance:
    """Two threads sharing ``l``: ``while h > 0: h -= 1; l = 2`` and ``l = 1``.

    The scheduler picks which unfinished thread steps next (actions ``th``
    and ``thp``). Terminal states are absorbing and labeled ``l1``/``l2`` by
    the final value of ``l``.
    """
    if h1 == h2:
        raise ValueError("the two initial values of h must differ")
    if h1 < 0 or h2 < 0:
        raise ValueError("h must be nonnegative")
    b = _Builder()
    # state: (h, pc of th in loop|assign|done, pc of th' in assign|done, l)
    inits = [(h1, "loop", "assign", 0), (h2, "loop", "assign", 0)]
    for k in inits:
        b.state(k)
    queue = deque(inits)
    seen = set(inits)
    terminal: Dict[int, List] = {1: [], 2: [], 0: []}
    while queue:
        key = queue.popleft()
        h, pc, pcp, l = key
        succ = []
        if pc == "loop":
            succ.append(("th", (h - 1, "loop", pcp, l) if h > 0 else (h, "assign", pcp, l)))
        elif pc == "assign":
            succ.append(("th", (h, "done", pcp, 2)))
        if pcp == "assign":
            succ.append(("thp", (h, pc, "done", 1)))
        if not succ:
            terminal[l].append(key)
            b.action(key, "end", [(key, Fraction(1))])
            continue
        for name, nxt in succ:
            b.action(key, name, [(nxt, Fraction(1))])
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    m = b.build({"init1": [inits[0]], "init2": [inits[1]], "l1": terminal[1], "l2": terminal[2]})
    prop = "forall s . 1*P(s, init1, F l1) - 1*P(s, init2, F l1) ~ 0 eps 0"
    prov = "published" if (h1, h2) == (10, 20) else "derived"
    return GeneratedInstance(
        name=f"ts-h{h1}-{h2}",
        mdp=m,
        property_text=prop,
        expected="violated",
        provenance=prov,
        notes="a scheduler that tells the two initial states apart decides the final l",
    )


# --- Hamiltonian path reduction -----------------------------------------------


def has_hamiltonian_path(num_vertices: int, edges: Iterable[Tuple[int, int]], start: int) -> bool:
    """Exhaustive DFS for a simple path from ``start`` through every vertex."""
    succ: Dict[int, set] = {v: set() for v in range(num_vertices)}
    for u, v in edges:
        if u != v:
            succ[u].add(v)

    def dfs(v, visited):
        if len(visited) == num_vertices:
            return True
        return any(dfs(w, visited | {w}) for w in succ[v] if w not in visited)

    return dfs(start, {start})


def gen_hampath_reduction(
    vertices: Sequence[str], edges: Iterable[Tuple[str, str]], v_init: str
) -> GeneratedInstance:
    """MDP whose MD schedulers balance ``F a`` against ``F b`` iff a Hamiltonian path exists.

    Each vertex offers one action per out-edge (half to the successor, half
    to the sink) and ``tau`` to ``a``. A chain of ``|V| - 1`` halvings leads
    to ``b``. Over MD schedulers the two probabilities differ by at least
    ``2^-(|V|+1)`` unless the vertex walk is a Hamiltonian path from
    ``v_init``, so ``eps`` is half that gap.
    """
    vertices = list(vertices)
    if len(set(vertices)) != len(vertices) or not vertices:
        raise ValueError("vertices must be distinct and nonempty")
    if v_init not in vertices:
        raise ValueError(f"initial vertex {v_init!r} is not a vertex")
    n = len(vertices)
    edges = list(edges)
    half = Fraction(1, 2)
    b = _Builder()
    for v in vertices:
        b.state(("v", v))
    s0, bot, sa, sb = "s0", "bot", "a", "b"
    for k in (s0, bot, sa, sb):
        b.state(k)
    chain = [("chain", i) for i in range(1, n)]
    for k in chain:
        b.state(k)
    out: Dict[str, List[str]] = {v: [] for v in vertices}
    for u, v in edges:
        if u not in out or v not in out:
            raise ValueError(f"edge ({u}, {v}) uses an unknown vertex")
        if v not in out[u]:
            out[u].append(v)
    for v in vertices:
        for w in out[v]:
            b.action(("v", v), w, [(("v", w), half), (bot, half)])
        b.action(("v", v), "tau", [(sa, Fraction(1))])
    b.action(s0, "go", [(("v", v_init), half), (chain[0] if chain else sb, half)])
    for i, k in enumerate(chain):
        nxt = chain[i + 1] if i + 1 < len(chain) else sb
        b.action(k, "go", [(nxt, half), (bot, half)])
    for k in (bot, sa, sb):
        b.action(k, "stay", [(k, Fraction(1))])
    labels = {"s0": [s0], "a": [sa], "b": [sb], "bot": [bot]}
    m = b.build(labels)
    eps = Fraction(1, 2 ** (n + 2))
    prop = f"exists s . 1*P(s, s0, F a) - 1*P(s, s0, F b) ~ 0 eps {format_fraction(eps)}"
    idx = {v: i for i, v in enumerate(vertices)}
    ham = has_hamiltonian_path(n, [(idx[u], idx[v]) for u, v in edges], idx[v_init])
    return GeneratedInstance(
        name=f"hampath-{n}",
        mdp=m,
        property_text=prop,
        expected=None,
        provenance="derived",
        expected_md="holds" if ham else "violated",
        notes="MD-restricted reading: the oracle verdict matches Hamiltonian path existence",
    )


# --- small models from the examples -----------------------------------------


def running_example() -> GeneratedInstance:
    m = build_mdp(
        [
            [("alpha", [(0, "1/3"), (2, "1/3"), (3, "1/3")]), ("beta", [(1, 1)])],
            [("alpha", [(3, 1)]), ("beta", [(1, 1)])],
            [("tau", [(0, 1)])],
            [("tau", [(3, 1)])],
        ],
        labels={"s1": [0], "s2": [1], "T1": [2], "T2": [3]},
    )
    prop = "exists s . 1*P(s, s1, F T1) - 1/2*P(s, s1, F T2) - 1/2*P(s, s2, F T2) ~ 0 eps 0"
    return GeneratedInstance(
        name="fig2",
        mdp=m,
        property_text=prop,
        expected="holds",
        provenance="published",
        values={"v_min": Fraction(-1), "v_max": Fraction(1, 4)},
        notes="T1 is visited with probability close to the mean of the T2 probabilities",
    )


def randomization_example() -> GeneratedInstance:
    """Randomization is needed: hitting 1/2 exactly requires a coin."""
    m = build_mdp(
        [
            [("alpha", [(1, 1)]), ("beta", [(2, 1)])],
            [("stay", [(1, 1)])],
            [("stay", [(2, 1)])],
        ],
        labels={"s": [0], "t": [1], "sbot": [2]},
    )
    return GeneratedInstance(
        name="fig3a",
        mdp=m,
        property_text="exists sigma . 1*P(sigma, s, F t) ~ 1/2 eps 0",
        expected="holds",
        provenance="published",
        expected_md="violated",
        notes="MD schedulers reach t with probability 0 or 1, so they satisfy the query only for eps >= 1/2",
    )


def memory_example() -> GeneratedInstance:
    """Memory is needed: visit t1 once, then move to t2."""
    m = build_mdp(
        [
            [("alpha", [(1, 1)]), ("beta", [(2, 1)])],
            [("gamma", [(0, 1)])],
            [("stay", [(2, 1)])],
        ],
        labels={"s": [0], "t1": [1], "t2": [2]},
    )
    return GeneratedInstance(
        name="fig3b",
        mdp=m,
        property_text="exists sigma . P(sigma, s, F t1) = P(sigma, s, F t2)",
        expected="holds",
        provenance="published",
        expected_md="violated",
        notes="a memoryless scheduler playing alpha with probability p gives p against 1",
    )


def md_gap_example() -> GeneratedInstance:
    """The same scheduler must act differently depending on where it started."""
    m = build_mdp(
        [
            [("alpha", [(2, 1)]), ("beta", [(2, "1/2"), (3, "1/2")])],
            [("go", [(0, 1)])],
            [("stay", [(2, 1)])],
            [("stay", [(3, 1)])],
        ],
        labels={"s1": [0], "s2": [1], "t": [2], "sbot": [3]},
    )
    return GeneratedInstance(
        name="ex6",
        mdp=m,
        property_text="exists sigma . P(sigma, s1, F t) != P(sigma, s2, F t)",
        expected="holds",
        provenance="published",
        expected_md="violated",
        values={"v_min": Fraction(-1, 2), "v_max": Fraction(1, 2)},
    )


def gen_paper_figures() -> List[GeneratedInstance]:
    return [running_example(), randomization_example(), memory_example(), md_gap_example()]
