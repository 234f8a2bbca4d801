"""Von Neumann coin rows: verdicts for several N and eps, approximate mode."""

import argparse
import time
from fractions import Fraction

from relreach.checker import check
from relreach.generators import gen_von_neumann
from relreach.solver import SolverConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[1, 2, 5, 10, 20])
    ap.add_argument("--eps", nargs="+", default=["0", "1/10"])
    ap.add_argument("--tolerance", default="1/1000000")
    args = ap.parse_args()
    cfg = SolverConfig(tolerance=Fraction(args.tolerance))
    print(f"{'N':>4} {'states':>7} {'eps':>6} {'verdict':>9} {'v_max (ub)':>12} {'time':>7}")
    for n in args.n:
        for eps in args.eps:
            t0 = time.perf_counter()
            inst = gen_von_neumann(n, eps=eps)
            res = check(inst.mdp, inst.property_text, cfg, witness=False)
            dt = time.perf_counter() - t0
            ub = float(res.aggregate.v_max.upper)
            print(f"{n:>4} {inst.mdp.num_states:>7} {eps:>6} {res.answer.value:>9} {ub:>12.6f} {dt:>6.2f}s")


if __name__ == "__main__":
    main()
