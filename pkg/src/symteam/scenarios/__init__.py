"""Built-in scenario files and the one-shot verifier.

Each scenario is a committed model file plus a pipeline that recomputes its
reference quantities. ``verify_all`` runs the pipelines in rational mode and
compares exactly.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

from ..analysis import reduce_to_current_state
from ..belief import check_conditional_independence
from ..evaluation import evaluate_exact
from ..model import InfoStructure, TeamModel, load_model, parse_document
from ..prescriptions import PrescriptionGridSpec
from ..probability import format_scalar, is_exact, scalar_str
from ..solver import certified_solution, solve, specialized_cost_certificate
from ..strategies import StrategyPair, load_strategy_pair

P1A, P1B, P1C, P1D = InfoStructure.P1A, InfoStructure.P1B, InfoStructure.P1C, InfoStructure.P1D


def scenario_names() -> List[str]:
    return sorted(p.name[:-5] for p in resources.files(__name__).iterdir() if p.name.endswith(".yaml"))


def scenario_text(name: str) -> str:
    path = resources.files(__name__).joinpath(f"{name}.yaml")
    if not path.is_file():
        raise KeyError(f"unknown scenario {name!r}; available: {', '.join(scenario_names())}")
    return path.read_text()


def load_scenario(name: str, numeric: Optional[str] = None) -> Tuple[TeamModel, InfoStructure, Optional[StrategyPair]]:
    doc = parse_document(scenario_text(name))
    model, info = load_model(doc, numeric=numeric)
    return model, info, load_strategy_pair(doc, model, info)


@dataclass
class Check:
    scenario: str
    quantity: str
    expected: Any
    computed: Any
    relation: str = "eq"  # "eq" or "ge"
    source: str = "reference"  # "reference", "derived" or "claim"

    @property
    def passed(self) -> bool:
        if is_exact(self.expected) and is_exact(self.computed):
            diff = Fraction(self.computed) - Fraction(self.expected)
            return diff >= 0 if self.relation == "ge" else diff == 0
        diff = float(self.computed) - float(self.expected)
        return diff >= -1e-9 if self.relation == "ge" else abs(diff) <= 1e-9


def _grid(K: int, **kw) -> PrescriptionGridSpec:
    return PrescriptionGridSpec(K=K, **kw)


def _example1(name):
    model, info, pair = load_scenario(name)
    return [
        Check(name, "J*_sym (K=2)", Fraction(1, 2), solve(model, info, _grid(2)).value),
        Check(name, "J*_det", Fraction(1), solve(model, info, _grid(1, deterministic_only=True)).value),
        Check(name, "J(coin flip)", Fraction(1, 2), evaluate_exact(model, pair, info)),
    ]


def _example2(name):
    model, info, pair = load_scenario(name)
    report = reduce_to_current_state(model, pair, info)
    a = model.action_space.index("a")
    key = (2, 0, ((0,), (0, a, model.action_space.index("b"))))
    return [
        Check(name, "gbar1_2(a | x=0, c=(a,b))", Fraction(5, 12), report.tables[0][key][a]),
        Check(name, "gbar2_2(a | x=0, c=(a,b))", Fraction(7, 20), report.tables[1][key][a]),
        Check(name, "symmetry gap", Fraction(1, 15), report.symmetry_gap, relation="ge", source="derived"),
        Check(name, "J(reduced) = J(original)", report.cost_before, report.cost_after, source="derived"),
    ]


def _example3(name):
    model, _, pair = load_scenario(name)
    return [
        Check(name, "J*_P1a (K=4)", Fraction(0), solve(model, P1A, _grid(4)).value),
        Check(name, "J*_P1c (K=4)", Fraction(3, 4), solve(model, P1C, _grid(4)).value),
        Check(name, "J_P1c(stated strategy)", Fraction(3, 4), evaluate_exact(model, pair, P1C)),
    ]


def _p1d_independence(name):
    model, info, pair = load_scenario(name)
    report = check_conditional_independence(model, pair, info, 2)
    control = check_conditional_independence(model, pair, P1C, 2)
    return [
        Check(name, "joint P(0,0 | a=1)", Fraction(1, 10), report.joint),
        Check(name, "marginal product", Fraction(1, 4), report.product),
        Check(name, "deviation", Fraction(3, 20), report.max_deviation),
        Check(name, "deviation under p1c", Fraction(0), control.max_deviation, source="derived"),
    ]


def _specialized_cost(name):
    model, _, _ = load_scenario(name)
    identity = tuple(range(model.n_local))
    cert = specialized_cost_certificate(model, identity)
    return [
        Check(name, "certified", 1, int(cert.certified)),
        Check(name, "J*_P1b (K=2)", Fraction(0), solve(model, P1B, _grid(2)).value),
        Check(name, "J*_P1c (K=4)", Fraction(0), solve(model, P1C, _grid(4)).value),
        Check(name, "J_P1b(always m)", Fraction(0), certified_solution(model, P1B, identity).value),
        Check(name, "J_P1c(always m)", Fraction(0), certified_solution(model, P1C, identity).value),
    ]


def _history_advantage(name):
    model, _, pair = load_scenario(name)
    jc = solve(model, P1C, _grid(4)).value
    return [
        Check(name, "J*_P1b = J*_P1c (K=2 vs K=4)", jc, solve(model, P1B, _grid(2)).value, source="claim"),
        Check(name, "J_P1b(history strategy)", Fraction(1, 4), evaluate_exact(model, pair, P1B), source="derived"),
    ]


def _state_blind_dynamics(name):
    model, _, _ = load_scenario(name)
    jc = solve(model, P1C, _grid(4)).value
    return [Check(name, "J*_P1a = J*_P1c (K=4)", jc, solve(model, P1A, _grid(4)).value, source="claim")]


PIPELINES: Dict[str, Callable[[str], List[Check]]] = {
    "example1": _example1,
    "example2": _example2,
    "example3": _example3,
    "history_advantage": _history_advantage,
    "state_blind_dynamics": _state_blind_dynamics,
    "p1d_independence": _p1d_independence,
    "specialized_cost": _specialized_cost,
}


def verify_all(selection: Optional[Iterable[str]] = None) -> List[Check]:
    """Run the selected scenario pipelines (all by default), ordered by scenario name."""
    names = sorted(PIPELINES) if selection is None else sorted(set(selection))
    rows: List[Check] = []
    for name in names:
        if name not in PIPELINES:
            raise KeyError(f"unknown scenario {name!r}; available: {', '.join(sorted(PIPELINES))}")
        rows.extend(PIPELINES[name](name))
    return rows


def format_table(rows: List[Check]) -> str:
    header = ("scenario", "quantity", "expected", "computed", "result")
    body = [(r.scenario, r.quantity, ("≥ " if r.relation == "ge" else "") + format_scalar(r.expected),
             format_scalar(r.computed), "PASS" if r.passed else "FAIL") for r in rows]
    widths = [max(len(str(x)) for x in col) for col in zip(header, *body)]
    lines = ["  ".join(str(x).ljust(w) for x, w in zip(line, widths)).rstrip() for line in (header, *body)]
    return "\n".join(lines)


def to_csv(rows: List[Check]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["scenario", "quantity", "relation", "expected", "computed", "source", "pass"])
    for r in rows:
        writer.writerow([r.scenario, r.quantity, r.relation, scalar_str(r.expected), scalar_str(r.computed),
                         r.source, int(r.passed)])
    return buf.getvalue()
