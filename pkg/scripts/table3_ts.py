"""Thread scheduling rows: exact verdict for pairs of loop lengths."""

import argparse
import time

from relreach.checker import check
from relreach.generators import gen_thread_scheduling
from relreach.solver import SolverConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pairs", nargs="+", default=["0,1", "10,20", "50,100", "100,200"])
    args = ap.parse_args()
    print(f"{'h':>10} {'states':>7} {'verdict':>9} {'v_max':>8} {'v_min':>8} {'time':>7}")
    for pair in args.pairs:
        h1, h2 = (int(x) for x in pair.split(","))
        t0 = time.perf_counter()
        inst = gen_thread_scheduling(h1, h2)
        res = check(inst.mdp, inst.property_text, SolverConfig.exact_mode(), witness=False)
        dt = time.perf_counter() - t0
        agg = res.aggregate
        print(f"{pair:>10} {inst.mdp.num_states:>7} {res.answer.value:>9} "
              f"{str(agg.v_max.lower):>8} {str(agg.v_min.lower):>8} {dt:>6.2f}s")


if __name__ == "__main__":
    main()
