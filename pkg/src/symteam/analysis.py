"""Reduction of history-based strategy pairs to current-state strategies, and symmetry diagnostics."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Any, Dict, Iterable, Optional, Tuple, Union

from .evaluation import DEFAULT_NODE_BUDGET, _as_pair, _walk, evaluate_exact
from .model import InfoStructure, TeamModel
from .probability import scalar_str
from .strategies import Strategy, StrategyPair, TableStrategy, uniform_row


@dataclass
class ReductionReport:
    reduced: StrategyPair
    cost_before: Any
    cost_after: Any
    symmetry_gap: Any
    witness: Optional[tuple]  # (t, x, c_t)
    tables: Tuple[Dict[tuple, tuple], Dict[tuple, tuple]]
    shared: Tuple[tuple, ...]  # realizations (t, x, c) reachable for both agents

    def to_csv(self, model: TeamModel) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "x", "c", "agent", "action", "probability"])
        for agent, table in enumerate(self.tables, start=1):
            for (t, x, c), row in sorted(table.items()):
                for u, w in enumerate(row):
                    writer.writerow([t, model.local_space[x], format_common(model, c), agent,
                                     model.action_space[u], scalar_str(w)])
        witness = "" if self.witness is None else \
            f"t={self.witness[0]} x={model.local_space[self.witness[1]]} c={format_common(model, self.witness[2])}"
        writer.writerow(["summary", "gap", scalar_str(self.symmetry_gap), "witness", witness,
                         f"cost {scalar_str(self.cost_before)} -> {scalar_str(self.cost_after)}"])
        return buf.getvalue()


def format_common(model: TeamModel, c: tuple) -> str:
    """Human-readable common information using model labels."""
    parts = [str(model.shared_space[c[0][0]])]
    for z in c[1:]:
        parts.append("(" + ",".join(str(v) for v in z) + ")")
    return "|".join(parts)


def _reduced_tables(model: TeamModel, pair: StrategyPair, info: InfoStructure, budget: int):
    """Joint mass of (agent, t, x, c_t, u) from the trajectory oracle."""
    mass = ({}, {})
    for steps, prob, _ in _walk(model, pair, info, budget):
        for t in range(1, model.horizon + 1):
            c = info.common_info(model, steps, t)
            step = steps[t - 1]
            for agent in (1, 2):
                key = (t, step[agent], c)
                row = mass[agent - 1].setdefault(key, [model.zero] * model.n_actions)
                row[step[2 + agent]] += prob
    tables = []
    for agent_mass in mass:
        table = {}
        for key, row in agent_mass.items():
            total = sum(row, model.zero)
            table[key] = tuple(w / total for w in row)
        tables.append(table)
    return tables


def reduce_to_current_state(model: TeamModel, pair: Union[Strategy, StrategyPair],
                            info: InfoStructure = InfoStructure.P1B,
                            budget: int = DEFAULT_NODE_BUDGET) -> ReductionReport:
    """Replace each agent's strategy by P(U_t | own current state, common info).

    The reduced pair uses current-state private information with the same
    common information and is evaluated as an asymmetric pair. Realizations
    with zero probability get a uniform row.
    """
    pair = _as_pair(pair)
    info = InfoStructure.parse(info)
    if info is InfoStructure.P1A:
        raise ValueError("reduction applies to structures whose common information excludes local states")
    target = InfoStructure.P1D if info is InfoStructure.P1D else InfoStructure.P1C
    t1, t2 = _reduced_tables(model, pair, info, budget)
    uniform = uniform_row(model)
    reduced = StrategyPair(TableStrategy(t1, default=uniform), TableStrategy(t2, default=uniform))
    shared = tuple(sorted(set(t1) & set(t2)))
    gap, witness = symmetry_gap(reduced, shared)
    return ReductionReport(
        reduced=reduced,
        cost_before=evaluate_exact(model, pair, info, budget),
        cost_after=evaluate_exact(model, reduced, target, budget),
        symmetry_gap=gap,
        witness=witness,
        tables=(t1, t2),
        shared=shared,
    )


def symmetry_gap(pair: StrategyPair, realizations: Iterable[tuple]) -> Tuple[Any, Optional[tuple]]:
    """Largest total-variation distance between the two agents' rows over ``realizations``.

    Each realization is ``(t, p, c)``; the witness is the first one attaining the maximum.
    """
    gap, witness = 0, None
    for t, p, c in realizations:
        r1 = pair.first.action_dist(t, p, c)
        r2 = pair.second.action_dist(t, p, c)
        tv = sum(abs(a - b) for a, b in zip(r1, r2)) / 2
        if witness is None or tv > gap:
            gap, witness = tv, (t, p, c)
    return gap, witness


def reachable_realizations(model: TeamModel, pair: Union[Strategy, StrategyPair], info: InfoStructure,
                           budget: int = DEFAULT_NODE_BUDGET) -> Tuple[tuple, ...]:
    """``(t, p, c)`` triples with positive probability for both agents."""
    pair = _as_pair(pair)
    seen = (set(), set())
    for steps, _, _ in _walk(model, pair, info, budget):
        for t in range(1, model.horizon + 1):
            c = info.common_info(model, steps, t)
            for agent in (1, 2):
                seen[agent - 1].add((t, info.private_info(steps, agent, t), c))
    return tuple(sorted(seen[0] & seen[1]))
