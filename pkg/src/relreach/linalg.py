"""Exact sparse linear solves over the rationals.

Systems arising here are of the form ``(I - P) x = b`` restricted to states
that leave the restricted set with positive probability, i.e. nonsingular
M-matrices. Gaussian elimination under any symmetric ordering keeps the
pivots positive for such matrices, so no pivot search is needed.
"""

from __future__ import annotations

from collections import deque
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Sequence

Row = Dict[int, Fraction]


class SingularSystemError(ArithmeticError):
    pass


def solve_sparse(
    rows: Mapping[int, Row],
    rhs: Mapping[int, Fraction],
    order: Sequence[int] | None = None,
) -> Dict[int, Fraction]:
    """Solve ``sum_j rows[i][j] * x[j] = rhs[i]`` for every variable ``i``.

    ``rows`` must contain one row per variable and only reference variables
    that have a row. ``order`` is the elimination order; a good order keeps
    fill-in small (deepest states first for chain-like models).
    """
    work: Dict[int, Row] = {v: dict(r) for v, r in rows.items()}
    b: Dict[int, Fraction] = {v: Fraction(rhs.get(v, 0)) for v in rows}
    if order is None:
        order = sorted(work)
    occurs: Dict[int, set] = {v: set() for v in work}
    for v, r in work.items():
        for w in r:
            occurs[w].add(v)

    eliminated: List[int] = []
    for v in order:
        row = work[v]
        pivot = row.pop(v, Fraction(0))
        occurs[v].discard(v)
        if pivot == 0:
            raise SingularSystemError(f"zero pivot at variable {v}")
        if pivot != 1:
            inv = 1 / pivot
            for w in row:
                row[w] *= inv
            b[v] *= inv
        for u in occurs[v]:
            other = work[u]
            c = other.pop(v)
            for w, a in row.items():
                nv = other.get(w, Fraction(0)) - c * a
                if nv:
                    other[w] = nv
                    occurs[w].add(u)
                else:
                    other.pop(w, None)
                    occurs[w].discard(u)
            b[u] -= c * b[v]
        occurs[v] = set()
        for w in row:
            occurs[w].discard(v)
        eliminated.append(v)

    x: Dict[int, Fraction] = {}
    for v in reversed(eliminated):
        acc = b[v]
        for w, a in work[v].items():
            acc -= a * x[w]
        x[v] = acc
    return x


def bfs_order(successors, sources: Iterable[int], universe: Iterable[int]) -> List[int]:
    """Elimination order: states farthest from ``sources`` first.

    ``successors(v)`` yields neighbour indices. States of ``universe`` not
    reached from ``sources`` are appended at the front.
    """
    universe = list(universe)
    allowed = set(universe)
    seen = set()
    queue = deque()
    for s in sources:
        if s in allowed and s not in seen:
            seen.add(s)
            queue.append(s)
    found: List[int] = []
    while queue:
        v = queue.popleft()
        found.append(v)
        for w in successors(v):
            if w in allowed and w not in seen:
                seen.add(w)
                queue.append(w)
    rest = [v for v in universe if v not in seen]
    return rest + found[::-1]
