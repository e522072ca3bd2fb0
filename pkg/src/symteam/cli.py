"""Command-line interface: ``symteam <subcommand> --model FILE|SCENARIO ...``.

Exit status is 0 on success, 1 when a verification row fails and 2 on bad
input (unreadable or invalid model file, missing strategy, bad flags).
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from collections import Counter
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

from . import __version__
from .analysis import format_common, reduce_to_current_state
from .belief import FactoredBelief, check_conditional_independence
from .errors import SymTeamError
from .evaluation import evaluate_exact, evaluate_mc
from .model import InfoStructure, TeamModel, describe, load_model, parse_document
from .prescriptions import PrescriptionGridSpec
from .probability import format_scalar, scalar_str
from .scenarios import format_table, scenario_names, scenario_text, to_csv, verify_all
from .solver import solve
from .strategies import load_strategy_pair

OUTPUT_ENV = "SYMTEAM_OUTPUT_DIR"

log = logging.getLogger("symteam")


class InputError(Exception):
    """Bad command-line input; reported with exit status 2."""


# -- loading -----------------------------------------------------------------

def _read_model_text(ref: str) -> str:
    path = Path(ref)
    if path.is_file():
        return path.read_text()
    if ref in scenario_names():
        return scenario_text(ref)
    raise InputError(f"no model file or built-in scenario named {ref!r} "
                     f"(scenarios: {', '.join(scenario_names())})")


def _load(args):
    doc = parse_document(_read_model_text(args.model))
    model, info = load_model(doc, numeric=args.numeric)
    if args.info:
        info = InfoStructure.parse(args.info)
        if info is InfoStructure.P1D and model.aggregate is None:
            raise InputError("--info p1d needs a model with an aggregate map")
    return doc, model, info


def _pair(doc, model, info):
    pair = load_strategy_pair(doc, model, info)
    if pair is None:
        raise InputError("model file has no 'strategy' or 'strategy_pair' section")
    return pair


def _output_dir(args) -> Optional[Path]:
    out = args.output or os.environ.get(OUTPUT_ENV)
    if not out:
        return None
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _emit(args, filename: str, text: str, always_stdout: bool = False) -> None:
    out = _output_dir(args)
    if out is not None:
        (out / filename).write_text(text)
        print(f"wrote {out / filename}")
    elif always_stdout:
        sys.stdout.write(text)


def _parse_refine(text: Optional[str]):
    if text is None:
        return None
    try:
        steps, shrink = text.split(",")
        return int(steps), Fraction(shrink)
    except ValueError:
        raise InputError(f"--refine expects 'steps,shrink' such as '3,1/2', got {text!r}") from None


def _private_label(model: TeamModel, info: InfoStructure, p) -> str:
    if info is InfoStructure.P1B:
        return "-".join(str(model.local_space[x]) for x in p)
    return str(model.local_space[p])


# -- subcommands ---------------------------------------------------------------

def cmd_solve(args) -> int:
    _, model, info = _load(args)
    spec = PrescriptionGridSpec(K=args.grid, refinement=_parse_refine(args.refine),
                                deterministic_only=args.deterministic_only)
    report = solve(model, info, spec)
    print(describe(model, info))
    print(f"J* = {format_scalar(report.value)}")
    if len(report.values_by_x0) > 1:
        for x0, v in report.values_by_x0.items():
            print(f"  V_1(x0={model.shared_space[x0]}) = {format_scalar(v)}")
    grid = "deterministic only" if spec.deterministic_only else f"K={spec.K}"
    print(f"candidate set: {grid}" + (f", refine {args.refine}" if args.refine else ""))
    per_t = Counter(node.t for node, _ in report.on_policy(model))
    print(f"belief tree: {report.node_count} nodes searched, {report.memo_hits} memo hits, "
          f"{report.prescriptions_evaluated} prescriptions evaluated")
    print("on-policy nodes: " + ", ".join(f"t={t}: {n}" for t, n in sorted(per_t.items())))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "node", "x0", "private"] + [str(u) for u in model.action_space])
    for node_id, (node, gamma) in enumerate(report.on_policy(model)):
        for p, row in zip(gamma.domain, gamma.rows):
            writer.writerow([node.t, node_id, model.shared_space[node.x0], _private_label(model, info, p)]
                            + [scalar_str(w) for w in row])
    _emit(args, "prescriptions.csv", buf.getvalue(), always_stdout=args.csv)
    return 0


def cmd_evaluate(args) -> int:
    doc, model, info = _load(args)
    pair = _pair(doc, model, info)
    print(describe(model, info))
    print(f"J = {format_scalar(evaluate_exact(model, pair, info))}")
    return 0


def cmd_mc(args) -> int:
    doc, model, info = _load(args)
    if args.seed is None:
        raise InputError("mc requires --seed")
    pair = _pair(doc, model, info)
    estimate, stderr = evaluate_mc(model, pair, info, seed=args.seed, n=args.n, n_jobs=args.threads)
    print(describe(model, info))
    print(f"J ~ {estimate:.10g} (stderr {stderr:.3g}, n={args.n}, seed={args.seed})")
    return 0


def cmd_belief(args) -> int:
    _, model, info = _load(args)
    report = solve(model, info, PrescriptionGridSpec(K=args.grid, deterministic_only=args.deterministic_only))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if info is InfoStructure.P1D:
        writer.writerow(["t", "node", "x0", "pair", "pi12"])
    else:
        writer.writerow(["t", "node", "x0", "private", "pi1", "pi2"])
    for node_id, (node, _) in enumerate(report.on_policy(model)):
        b = node.belief
        x0 = model.shared_space[b.x0]
        if isinstance(b, FactoredBelief):
            for p, w1 in b.pi1.items():
                writer.writerow([node.t, node_id, x0, _private_label(model, info, p), scalar_str(w1),
                                 scalar_str(b.pi2[p])])
        else:
            for (x, y), w in b.pi12.items():
                writer.writerow([node.t, node_id, x0, f"{model.local_space[x]}|{model.local_space[y]}", scalar_str(w)])
    _emit(args, "beliefs.csv", buf.getvalue(), always_stdout=True)
    return 0


def cmd_reduce(args) -> int:
    doc, model, info = _load(args)
    pair = _pair(doc, model, info)
    report = reduce_to_current_state(model, pair, info)
    print(describe(model, info))
    print(f"J before = {format_scalar(report.cost_before)}")
    print(f"J after  = {format_scalar(report.cost_after)}")
    print(f"symmetry gap = {format_scalar(report.symmetry_gap)}")
    if report.witness is not None:
        t, x, c = report.witness
        print(f"witness: t={t} x={model.local_space[x]} c={format_common(model, c)}")
    _emit(args, "reduction.csv", report.to_csv(model), always_stdout=args.csv)
    return 0


def cmd_independence(args) -> int:
    doc, model, info = _load(args)
    pair = _pair(doc, model, info)
    times = [args.t] if args.t else range(1, model.horizon + 1)
    print(describe(model, info))
    for t in times:
        r = check_conditional_independence(model, pair, info, t)
        line = f"t={t}: {'holds' if r.holds else 'fails'}, max deviation {format_scalar(r.max_deviation)}"
        if not r.holds:
            c, p1, p2 = r.witness
            line += (f" at c={format_common(model, c)} p=({_private_label(model, info, p1)},"
                     f"{_private_label(model, info, p2)}): joint {format_scalar(r.joint)}"
                     f" vs product {format_scalar(r.product)}")
        print(line)
    return 0


def cmd_verify(args) -> int:
    rows = verify_all(args.scenario or None)
    print(format_table(rows))
    failed = sum(not r.passed for r in rows)
    print(f"{len(rows) - failed}/{len(rows)} checks passed")
    if args.csv:
        Path(args.csv).write_text(to_csv(rows))
    _emit(args, "verify.csv", to_csv(rows))
    return 1 if failed else 0


# -- argument parsing ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="symteam", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_model=True):
        if needs_model:
            p.add_argument("--model", required=True, help="model file path or built-in scenario name")
            p.add_argument("--info", choices=[i.value for i in InfoStructure], help="override info_structure")
            p.add_argument("--numeric", choices=["rational", "float"], help="override the numeric mode")
        p.add_argument("--output", help=f"directory for CSV artifacts (default ${OUTPUT_ENV})")
        p.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")

    p = sub.add_parser("solve", help="solve the coordinator dynamic program")
    common(p)
    p.add_argument("--grid", type=int, default=20, help="grid resolution K (rows are multiples of 1/K)")
    p.add_argument("--refine", help="coordinate-descent refinement 'steps,shrink', e.g. '3,1/2'")
    p.add_argument("--deterministic-only", action="store_true", help="search point-mass prescriptions only")
    p.add_argument("--csv", action="store_true", help="print the prescription CSV to stdout")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("evaluate", help="exact cost of the strategy in the model file")
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("mc", help="Monte Carlo cost estimate of the strategy in the model file")
    common(p)
    p.add_argument("--seed", type=int, help="random seed (required)")
    p.add_argument("--n", type=int, default=100_000, help="number of trajectories")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("belief", help="CSV trace of the beliefs on the solved tree")
    common(p)
    p.add_argument("--grid", type=int, default=20)
    p.add_argument("--deterministic-only", action="store_true")
    p.set_defaults(func=cmd_belief)

    p = sub.add_parser("reduce", help="reduce the file's strategy pair to current-state strategies")
    common(p)
    p.add_argument("--csv", action="store_true", help="print the reduction CSV to stdout")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("independence", help="check conditional independence of private information")
    common(p)
    p.add_argument("--t", type=int, help="time step (default: every step)")
    p.set_defaults(func=cmd_independence)

    p = sub.add_parser("verify", help="recompute every built-in scenario's reference numbers")
    common(p, needs_model=False)
    p.add_argument("--scenario", action="append", help="restrict to this scenario (repeatable)")
    p.add_argument("--csv", help="also write the table as CSV to this path")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (InputError, SymTeamError, OSError, KeyError, ValueError) as exc:
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {message}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
