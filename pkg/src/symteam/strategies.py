"""Agent strategies: maps from (time, private info, common info) to action distributions.

Private and common information use the internal index encoding produced by
:class:`~symteam.model.InfoStructure`. Action distributions are plain tuples
aligned with the model's action space.
"""
from __future__ import annotations

import random
from fractions import Fraction
from typing import Any, Callable, Dict, Hashable, NamedTuple, Optional, Sequence

from .errors import SchemaError, UnreachableInfoRealization
from .model import InfoStructure, TeamModel, WILDCARD, _label_index, _parse_row, _rows, _select_times
from .probability import parse_scalar


class Strategy:
    """Base class. Subclasses implement :meth:`action_dist`."""

    def action_dist(self, t: int, p: Hashable, c: tuple) -> tuple:
        raise NotImplementedError

    def __call__(self, t, p, c):
        return self.action_dist(t, p, c)


class FunctionStrategy(Strategy):
    def __init__(self, fn: Callable[[int, Hashable, tuple], Sequence]):
        self.fn = fn

    def action_dist(self, t, p, c):
        return tuple(self.fn(t, p, c))


class TableStrategy(Strategy):
    """Explicit table keyed by ``(t, p, c)``.

    Lookups outside the table fall back to ``default`` (a row) when given,
    otherwise raise :class:`UnreachableInfoRealization`.
    """

    def __init__(self, table: Dict[tuple, tuple], default: Optional[tuple] = None):
        self.table = dict(table)
        self.default = default

    def action_dist(self, t, p, c):
        try:
            return self.table[(t, p, c)]
        except KeyError:
            if self.default is None:
                raise UnreachableInfoRealization((t, p, c)) from None
            return self.default


class RuleStrategy(Strategy):
    """Ordered wildcard rules; the last matching rule wins.

    Each rule is ``(times, private, common, row)`` where ``private`` and
    ``common`` are either a concrete value or ``None`` for "any".
    """

    def __init__(self, rules: Sequence[tuple]):
        self.rules = list(rules)

    def action_dist(self, t, p, c):
        for times, private, common, row in reversed(self.rules):
            if t in times and (private is None or private == p) and (common is None or common == c):
                return row
        raise UnreachableInfoRealization((t, p, c))


class RandomStrategy(Strategy):
    """Arbitrary strategy drawn lazily and memoized per information realization.

    Rows are random rationals with denominators up to ``resolution`` (or
    floats when the model is in float mode); with ``p_deterministic`` a row is
    a point mass instead. Deterministic for a given seed and query order.
    """

    def __init__(self, model: TeamModel, seed: int, resolution: int = 4, p_deterministic: float = 0.25,
                 depends_on_common: bool = True):
        self.rng = random.Random(seed)
        self.n = model.n_actions
        self.rational = model.rational
        self.resolution = resolution
        self.p_deterministic = p_deterministic
        self.depends_on_common = depends_on_common
        self.memo: Dict[tuple, tuple] = {}

    def action_dist(self, t, p, c):
        key = (t, p, c if self.depends_on_common else None)
        row = self.memo.get(key)
        if row is None:
            row = random_row(self.rng, self.n, self.resolution, self.p_deterministic, self.rational)
            self.memo[key] = row
        return row


def random_row(rng: random.Random, n: int, resolution: int, p_deterministic: float, rational: bool) -> tuple:
    if rng.random() < p_deterministic:
        hot = rng.randrange(n)
        weights = [1 if i == hot else 0 for i in range(n)]
    else:
        weights = [rng.randint(0, resolution) for _ in range(n)]
        if sum(weights) == 0:
            weights[rng.randrange(n)] = 1
    total = sum(weights)
    row = tuple(Fraction(w, total) for w in weights)
    return row if rational else tuple(float(w) for w in row)


class StrategyPair(NamedTuple):
    first: Strategy
    second: Strategy

    def agent(self, i: int) -> Strategy:
        return self.first if i == 1 else self.second

    def swapped(self) -> "StrategyPair":
        return StrategyPair(self.second, self.first)


def symmetric(g: Strategy) -> StrategyPair:
    return StrategyPair(g, g)


def prescription_strategy(fn: Callable[[int, tuple], Any]) -> Strategy:
    """Symmetric strategy induced by a coordinator rule ``fn(t, c) -> Prescription``."""
    return FunctionStrategy(lambda t, p, c: fn(t, c).row(p))


# -- strategies in model files -----------------------------------------------

def _private_key(model: TeamModel, info: InfoStructure, t: int, value: Any):
    if value is None or value == WILDCARD:
        return None
    if info is InfoStructure.P1B:
        values = value if isinstance(value, list) else [value]
        if len(values) != t:
            raise SchemaError(f"strategy row at t={t}: history must have length {t}")
        return tuple(_label_index(model.local_space, v, "local state") for v in values)
    return _label_index(model.local_space, value, "local state")


def _common_key(model: TeamModel, info: InfoStructure, value: Any):
    """Common info in files: list of increments, first one ``[x0_1]``, labels throughout."""
    if value is None or value == WILDCARD:
        return None
    if not isinstance(value, list) or not value:
        raise SchemaError("strategy 'c' must be '*' or a list of increments")
    out = []
    for s, z in enumerate(value):
        z = z if isinstance(z, list) else [z]
        if s == 0:
            out.append((_label_index(model.shared_space, z[0], "shared state"),))
            continue
        x0 = _label_index(model.shared_space, z[0], "shared state")
        if info is InfoStructure.P1D:
            out.append((x0, _label_index(model.aggregate_space, z[1], "aggregate")))
            continue
        rest = [_label_index(model.action_space, z[1], "action"), _label_index(model.action_space, z[2], "action")]
        if info is InfoStructure.P1A:
            rest += [_label_index(model.local_space, z[3], "local state"),
                     _label_index(model.local_space, z[4], "local state")]
        out.append((x0, *rest))
    return tuple(out)


def strategy_from_rows(rows: Any, model: TeamModel, info: InfoStructure) -> RuleStrategy:
    rules = []
    for row in _rows(rows, "strategy"):
        dist = _parse_row(row.get("dist"), model.action_space, model.rational, "strategy dist")
        total = sum(dist)
        if any(w < 0 for w in dist) or (total != 1 if model.rational else abs(total - 1) > 1e-12):
            raise SchemaError(f"strategy row {row} is not a distribution")
        for t in _select_times(row.get("t"), model.horizon):
            rules.append(((t,), _private_key(model, info, t, row.get("p")), _common_key(model, info, row.get("c")),
                          dist))
    return RuleStrategy(rules)


def load_strategy_pair(doc: dict, model: TeamModel, info: InfoStructure) -> Optional[StrategyPair]:
    """Strategy pair declared in a parsed model document, if any."""
    if "strategy" in doc and "strategy_pair" in doc:
        raise SchemaError("give either 'strategy' or 'strategy_pair', not both")
    if "strategy" in doc:
        return symmetric(strategy_from_rows(doc["strategy"], model, info))
    if "strategy_pair" in doc:
        spec = doc["strategy_pair"]
        if not isinstance(spec, dict) or set(spec) != {"agent1", "agent2"}:
            raise SchemaError("strategy_pair must have exactly 'agent1' and 'agent2'")
        return StrategyPair(strategy_from_rows(spec["agent1"], model, info),
                            strategy_from_rows(spec["agent2"], model, info))
    return None


def uniform_row(model: TeamModel) -> tuple:
    n = model.n_actions
    return tuple(parse_scalar(Fraction(1, n), model.rational) for _ in range(n))
