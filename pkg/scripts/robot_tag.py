"""Robot tag sweep: exact verdicts and reach values for growing grids."""

import argparse
import time

from relreach.checker import check
from relreach.generators import RobotTagConfig, gen_robot_tag
from relreach.solver import SolverConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[3, 4, 5, 6])
    ap.add_argument("--no-janitor", action="store_true")
    args = ap.parse_args()
    cfg = RobotTagConfig(no_janitor=args.no_janitor)
    print(f"{'N':>3} {'states':>7} {'verdict':>9} {'v_max':>10} {'time':>7}")
    for n in args.n:
        t0 = time.perf_counter()
        inst = gen_robot_tag(n, cfg=cfg)
        res = check(inst.mdp, inst.property_text, SolverConfig.exact_mode(), witness=False)
        dt = time.perf_counter() - t0
        print(f"{n:>3} {inst.mdp.num_states:>7} {res.answer.value:>9} "
              f"{float(res.aggregate.v_max.lower):>10.6f} {dt:>6.2f}s")


if __name__ == "__main__":
    main()
