"""Command line front end: ``check``, ``generate`` and ``oracle``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from typing import List, Optional

from . import generators as gen
from .checker import check, dump_unfoldings, render_report, witness_to_dict
from .model import ModelError, format_fraction, load_mdp
from .oracle import BudgetExceeded, OracleBudget, md_verdict
from .pipeline import UnfoldingError
from .property import PropertyError, parse_property
from .solver import SolverConfig, SolverError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_BUDGET = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


def _load(args):
    m = load_mdp(args.model)
    with open(args.property, encoding="utf-8") as fh:
        text = fh.read().strip()
    return m, parse_property(text, m)


def _jobs(value: Optional[int]) -> int:
    if value is not None:
        return value
    env = os.environ.get("RELREACH_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def cmd_check(args) -> int:
    m, q = _load(args)
    if args.mode == "exact":
        cfg = SolverConfig.exact_mode()
    else:
        if args.tolerance <= 0:
            raise _UsageError("approximate mode needs a positive --tolerance")
        cfg = SolverConfig(mode="approx", tolerance=args.tolerance)
    res = check(m, q, cfg, jobs=_jobs(args.jobs), witness=True)
    if args.dump_unfolding:
        with open(args.dump_unfolding, "w", encoding="utf-8") as fh:
            fh.write(dump_unfoldings(res) + "\n")
    if args.witness and res.witness is not None:
        with open(args.witness, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(witness_to_dict(res.witness, res), indent=1) + "\n")
    if args.json:
        print(render_report(res, include_witness=bool(args.witness), timings=args.timings))
    else:
        print(res.answer.value)
        agg = res.aggregate
        print(f"v_max in [{format_fraction(agg.v_max.lower)}, {format_fraction(agg.v_max.upper)}]")
        if agg.v_min is not None:
            print(f"v_min in [{format_fraction(agg.v_min.lower)}, {format_fraction(agg.v_min.upper)}]")
        if res.witness is not None:
            w = res.witness
            line = f"witness: {w.kind}, value {format_fraction(w.value)}"
            if w.lam is not None:
                line += f", lambda {format_fraction(w.lam)}"
            print(line)
        elif res.witness_error:
            print(f"witness: unavailable ({res.witness_error})")
        if args.timings:
            for k, v in res.timings.items():
                print(f"time {k}: {v:.6f}s")
    return EXIT_OK


def cmd_oracle(args) -> int:
    m, q = _load(args)
    res = md_verdict(m, q, OracleBudget(args.budget))
    witness = None
    if res.witness is not None:
        witness = {
            q.variables[k]: [m.actions[s][a] for s, a in enumerate(sched.choice)]
            for k, sched in enumerate(res.witness)
        }
    if args.json:
        out = {
            "verdict": res.answer.value,
            "normalized_verdict": res.normalized_answer.value,
            "value": None if res.value is None else format_fraction(res.value),
            "classes": list(res.classes),
            "witness": witness,
        }
        print(json.dumps(out, indent=1))
    else:
        print(res.answer.value)
        if witness is not None:
            for var, acts in witness.items():
                print(f"{var}: " + " ".join(f"{s}:{a}" for s, a in enumerate(acts)))
    return EXIT_OK


def _cell(text: str):
    try:
        x, y = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'x,y', got {text!r}")
    return x, y


def _read_graph(path: str):
    vertices: List[str] = []
    edges = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (1, 2):
                raise ModelError([f"{path}:{lineno}: expected 'u v' or a lone vertex"])
            for v in parts:
                if v not in vertices:
                    vertices.append(v)
            if len(parts) == 2:
                edges.append((parts[0], parts[1]))
    return vertices, edges


def cmd_generate(args) -> int:
    fam = args.family
    if fam == "vn":
        insts = [gen.gen_von_neumann(args.n, args.plo, args.phi, args.eps)]
    elif fam == "rt":
        cfg = gen.RobotTagConfig(
            move_success=args.move_success, no_janitor=args.no_janitor, eps=args.eps
        )
        insts = [gen.gen_robot_tag(args.n, args.janitor, cfg)]
    elif fam == "ts":
        insts = [gen.gen_thread_scheduling(args.h1, args.h2)]
    elif fam == "hampath":
        vertices, edges = _read_graph(args.graph)
        if args.init is not None and args.init not in vertices:
            vertices.append(args.init)
        insts = [gen.gen_hampath_reduction(vertices, edges, args.init or vertices[0])]
    else:
        insts = gen.gen_paper_figures()
    for inst in insts:
        out = args.output if len(insts) == 1 else os.path.join(args.output, inst.name)
        for path in gen.write_instance(inst, out, expected=args.expected):
            print(path)
    return EXIT_OK


class _UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="relreach", description="Relational reachability checking for MDPs.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="decide a property")
    c.add_argument("--model", required=True)
    c.add_argument("--property", required=True)
    c.add_argument("--mode", choices=("exact", "approx"), default="approx")
    c.add_argument("--tolerance", type=_rational, default=Fraction(1, 10**6))
    c.add_argument("--witness", metavar="FILE")
    c.add_argument("--json", action="store_true")
    c.add_argument("--jobs", type=int)
    c.add_argument("--dump-unfolding", metavar="FILE")
    c.add_argument("--timings", action="store_true", help="report wall-clock time per step")
    c.set_defaults(func=cmd_check)

    o = sub.add_parser("oracle", help="decide a property over MD schedulers by enumeration")
    o.add_argument("--model", required=True)
    o.add_argument("--property", required=True)
    o.add_argument("--budget", type=int, default=OracleBudget().max_tuples)
    o.add_argument("--json", action="store_true")
    o.set_defaults(func=cmd_oracle)

    g = sub.add_parser("generate", help="write benchmark model and property files")
    gs = g.add_subparsers(dest="family", required=True, parser_class=_Parser)
    common = _Parser(add_help=False)
    common.add_argument("-o", "--output", required=True)
    common.add_argument("--expected", action="store_true", help="also write expected.json")
    vn = gs.add_parser("vn", parents=[common])
    vn.add_argument("--n", type=int, default=1)
    vn.add_argument("--plo", type=_rational, default=Fraction(59, 100))
    vn.add_argument("--phi", type=_rational, default=Fraction(61, 100))
    vn.add_argument("--eps", type=_rational, default=Fraction(0))
    rt = gs.add_parser("rt", parents=[common])
    rt.add_argument("--n", type=int, default=3)
    rt.add_argument("--janitor", type=_cell)
    rt.add_argument("--move-success", type=_rational, default=Fraction(9, 10))
    rt.add_argument("--no-janitor", action="store_true")
    rt.add_argument("--eps", type=_rational, default=Fraction(1, 100000))
    ts = gs.add_parser("ts", parents=[common])
    ts.add_argument("--h1", type=int, default=10)
    ts.add_argument("--h2", type=int, default=20)
    hp = gs.add_parser("hampath", parents=[common])
    hp.add_argument("--graph", required=True, help="edge list, one 'u v' per line")
    hp.add_argument("--init")
    gs.add_parser("figures", parents=[common])
    g.set_defaults(func=cmd_generate)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"relreach: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as exc:
        print(f"relreach: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ModelError as exc:
        print("relreach: invalid model:", file=sys.stderr)
        for e in exc.errors:
            print(f"  {e}", file=sys.stderr)
        return EXIT_INVALID
    except (PropertyError, UnfoldingError, ValueError) as exc:
        print(f"relreach: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"relreach: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SolverError as exc:
        print(f"relreach: solver failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
