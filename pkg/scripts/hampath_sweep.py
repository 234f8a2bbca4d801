"""Compare md-oracle verdicts on the Hamiltonian path reduction with DFS."""

import argparse
import random
import time

from relreach.generators import gen_hampath_reduction, has_hamiltonian_path
from relreach.oracle import md_verdict
from relreach.property import parse_property
from relreach.verdict import Answer


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--vertices", type=int, default=5)
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--density", type=float, default=0.4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    vs = [f"v{i}" for i in range(args.vertices)]
    pairs = [(u, v) for u in vs for v in vs if u != v]
    agree = positives = 0
    t0 = time.perf_counter()
    for _ in range(args.samples):
        edges = [p for p in pairs if rng.random() < args.density]
        inst = gen_hampath_reduction(vs, edges, vs[0])
        idx = {v: i for i, v in enumerate(vs)}
        truth = has_hamiltonian_path(len(vs), [(idx[u], idx[v]) for u, v in edges], 0)
        got = md_verdict(inst.mdp, parse_property(inst.property_text, inst.mdp)).answer is Answer.HOLDS
        agree += got == truth
        positives += truth
    dt = time.perf_counter() - t0
    print(f"{agree}/{args.samples} agree ({positives} with a path), {dt:.2f}s")


if __name__ == "__main__":
    main()
