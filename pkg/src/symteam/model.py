"""Team model, information structures, and the model-file loader.

Internally every space is indexed ``0..n-1``; user labels are only used at
the file and CSV boundaries. Time is 1-based throughout the public API.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Any, Callable, Dict, Hashable, Optional, Sequence, Tuple

import yaml

from .errors import FlagViolation, InconsistentFlag, KernelRowNotNormalized, SchemaError
from .probability import Dist, FLOAT_TOL, has_fraction_syntax, is_exact, parse_scalar

logger = logging.getLogger(__name__)

Row = Tuple  # tuple of scalars aligned with an output space


class InfoStructure(str, enum.Enum):
    """The four named information structures.

    ``P1A``  one-step delayed sharing: private = current state, common adds past states.
    ``P1B``  full local history: private = own state history.
    ``P1C``  reduced local history: private = current state.
    ``P1D``  aggregate actions: private = current state, common sees only a(u1, u2).
    """

    P1A = "p1a"
    P1B = "p1b"
    P1C = "p1c"
    P1D = "p1d"

    @classmethod
    def parse(cls, value: Any) -> "InfoStructure":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise SchemaError(f"unknown info_structure {value!r}; expected p1a, p1b, p1c or p1d") from None

    @property
    def factored(self) -> bool:
        return self is not InfoStructure.P1D

    def private_space(self, model: "TeamModel", t: int) -> tuple:
        if self is InfoStructure.P1B:
            return tuple(product(range(model.n_local), repeat=t))
        return tuple(range(model.n_local))

    def current_state(self, p) -> int:
        return p[-1] if self is InfoStructure.P1B else p

    def private_info(self, steps: Sequence[tuple], agent: int, t: int):
        """Agent ``agent``'s private information at time ``t`` along ``steps``.

        Each step is ``(x0, x1, x2, u1, u2)``.
        """
        if self is InfoStructure.P1B:
            return tuple(steps[s][agent] for s in range(t))
        return steps[t - 1][agent]

    def increment(self, model: "TeamModel", step: tuple, next_x0: int) -> tuple:
        """Common-information increment produced by ``step`` and the next shared state."""
        x0, x1, x2, u1, u2 = step
        if self is InfoStructure.P1A:
            return (next_x0, u1, u2, x1, x2)
        if self is InfoStructure.P1D:
            return (next_x0, model.aggregate_of(u1, u2))
        return (next_x0, u1, u2)

    def common_info(self, model: "TeamModel", steps: Sequence[tuple], t: int) -> tuple:
        """Common information ``c_t``: ``((x0_1,), z_2, ..., z_t)``."""
        c = [(steps[0][0],)]
        for s in range(1, t):
            c.append(self.increment(model, steps[s - 1], steps[s][0]))
        return tuple(c)


@dataclass(eq=False)
class TeamModel:
    """Finite two-agent team with shared dynamics for both local states.

    Kernels are the disturbance-marginalized transition laws:
    ``shared_kernel[(t, x0, u1, u2)]`` is a row over the shared space and
    ``local_kernels[i][(t, x, x0, u1, u2)]`` a row over the local space for
    agent ``i + 1``. Both local kernels are the same object unless the model
    was built with an agent-2 override.
    """

    horizon: int
    shared_space: tuple
    local_space: tuple
    action_space: tuple
    alpha0: Row
    alpha: Row
    shared_kernel: Dict[tuple, Row]
    local_kernels: Tuple[Dict[tuple, Row], Dict[tuple, Row]]
    cost: Dict[tuple, Any]
    rational: bool = True
    aggregate: Optional[Dict[tuple, int]] = None
    aggregate_space: Optional[tuple] = None
    name: str = "model"
    _flags: dict = field(default_factory=dict, repr=False)

    @property
    def n_shared(self) -> int:
        return len(self.shared_space)

    @property
    def n_local(self) -> int:
        return len(self.local_space)

    @property
    def n_actions(self) -> int:
        return len(self.action_space)

    @property
    def one(self):
        return Fraction(1) if self.rational else 1.0

    @property
    def zero(self):
        return Fraction(0) if self.rational else 0.0

    def F0(self, t: int, x0: int, u1: int, u2: int) -> Row:
        return self.shared_kernel[(t, x0, u1, u2)]

    def F(self, t: int, x: int, x0: int, u1: int, u2: int, agent: int = 1) -> Row:
        return self.local_kernels[agent - 1][(t, x, x0, u1, u2)]

    def k(self, t: int, x0: int, x1: int, x2: int, u1: int, u2: int):
        return self.cost[(t, x0, x1, x2, u1, u2)]

    def aggregate_of(self, u1: int, u2: int) -> int:
        if self.aggregate is None:
            raise SchemaError("model has no aggregate map")
        return self.aggregate[(u1, u2)]

    def action_pairs(self):
        return product(range(self.n_actions), repeat=2)

    @property
    def symmetric_dynamics(self) -> bool:
        return self.local_kernels[0] is self.local_kernels[1] or self.local_kernels[0] == self.local_kernels[1]

    def _flag(self, name: str, fn: Callable[[], bool]) -> bool:
        if name not in self._flags:
            self._flags[name] = fn()
        return self._flags[name]

    @property
    def local_ignores_own_state(self) -> bool:
        """F_t(x, x0, u) does not depend on x, for both agents."""

        def check():
            for kernel in self.local_kernels:
                for t, x0, u1, u2 in product(range(1, self.horizon), range(self.n_shared),
                                             range(self.n_actions), range(self.n_actions)):
                    first = kernel[(t, 0, x0, u1, u2)]
                    if any(kernel[(t, x, x0, u1, u2)] != first for x in range(1, self.n_local)):
                        return False
            return True

        return self._flag("local_ignores_own_state", check)

    @property
    def iid_uncontrolled_local(self) -> bool:
        """No shared state and every local kernel row equals alpha."""

        def check():
            if self.n_shared != 1:
                return False
            alpha = tuple(self.alpha)
            return all(tuple(row) == alpha for kernel in self.local_kernels for row in kernel.values())

        return self._flag("iid_uncontrolled_local", check)

    @property
    def cost_exchangeable(self) -> bool:
        def check():
            return all(
                self.cost[(t, x0, x1, x2, u1, u2)] == self.cost[(t, x0, x2, x1, u2, u1)]
                for (t, x0, x1, x2, u1, u2) in self.cost
            )

        return self._flag("cost_exchangeable", check)

    def require(self, flag: str) -> None:
        if not getattr(self, flag):
            raise FlagViolation(f"model {self.name!r} does not satisfy {flag}")

    # -- construction -----------------------------------------------------

    @classmethod
    def from_functions(
        cls,
        horizon: int,
        n_shared: int,
        n_local: int,
        n_actions: int,
        alpha0: Sequence,
        alpha: Sequence,
        shared_kernel: Optional[Callable] = None,
        local_kernel: Optional[Callable] = None,
        cost: Optional[Callable] = None,
        *,
        local_kernel_agent2: Optional[Callable] = None,
        aggregate: Optional[Callable] = None,
        n_aggregate: Optional[int] = None,
        rational: bool = True,
        name: str = "model",
        labels: Optional[dict] = None,
    ) -> "TeamModel":
        """Tabulate a model from index-level callables.

        ``shared_kernel(t, x0, u1, u2)`` and ``local_kernel(t, x, x0, u1, u2)``
        return rows; ``cost(t, x0, x1, x2, u1, u2)`` returns a scalar. Missing
        shared kernel means the shared state stays put; missing cost means zero.
        """
        conv = (lambda v: parse_scalar(v, rational))
        labels = labels or {}
        acts = range(n_actions)
        times = range(1, horizon)

        def tab_local(fn):
            table = {}
            for t, x, x0, u1, u2 in product(times, range(n_local), range(n_shared), acts, acts):
                table[(t, x, x0, u1, u2)] = tuple(conv(w) for w in fn(t, x, x0, u1, u2))
            return table

        shared = {}
        for t, x0, u1, u2 in product(times, range(n_shared), acts, acts):
            if shared_kernel is None:
                row = [1 if y == x0 else 0 for y in range(n_shared)]
            else:
                row = shared_kernel(t, x0, u1, u2)
            shared[(t, x0, u1, u2)] = tuple(conv(w) for w in row)
        if local_kernel is None:
            local_kernel = lambda t, x, x0, u1, u2: [1 if y == x else 0 for y in range(n_local)]
        k1 = tab_local(local_kernel)
        k2 = k1 if local_kernel_agent2 is None else tab_local(local_kernel_agent2)
        costs = {}
        for t, x0, x1, x2, u1, u2 in product(range(1, horizon + 1), range(n_shared), range(n_local),
                                             range(n_local), acts, acts):
            costs[(t, x0, x1, x2, u1, u2)] = conv(0 if cost is None else cost(t, x0, x1, x2, u1, u2))
        agg = agg_space = None
        if aggregate is not None:
            agg = {(u1, u2): int(aggregate(u1, u2)) for u1, u2 in product(acts, acts)}
            n_aggregate = n_aggregate or (max(agg.values()) + 1)
            agg_space = tuple(labels.get("aggregate", range(n_aggregate)))
        model = cls(
            horizon=horizon,
            shared_space=tuple(labels.get("shared", range(n_shared))),
            local_space=tuple(labels.get("local", range(n_local))),
            action_space=tuple(labels.get("action", range(n_actions))),
            alpha0=tuple(conv(w) for w in alpha0),
            alpha=tuple(conv(w) for w in alpha),
            shared_kernel=shared,
            local_kernels=(k1, k2),
            cost=costs,
            rational=rational,
            aggregate=agg,
            aggregate_space=agg_space,
            name=name,
        )
        check_model(model)
        return model


def _row_ok(row: Sequence, rational: bool) -> bool:
    if any(w < 0 for w in row):
        return False
    total = sum(row)
    return total == 1 if rational else abs(total - 1.0) <= FLOAT_TOL


def check_model(model: TeamModel) -> TeamModel:
    """Validate spaces, initial distributions and every kernel row."""
    if not isinstance(model.horizon, int) or model.horizon < 1:
        raise SchemaError("horizon must be a positive integer")
    for name, space in (("shared_space", model.shared_space), ("local_space", model.local_space),
                        ("action_space", model.action_space)):
        if not space:
            raise SchemaError(f"{name} is empty")
        if len(set(space)) != len(space):
            raise SchemaError(f"{name} has duplicate labels")
    if len(model.alpha0) != model.n_shared or not _row_ok(model.alpha0, model.rational):
        raise KernelRowNotNormalized("alpha0 is not a distribution over the shared space")
    if len(model.alpha) != model.n_local or not _row_ok(model.alpha, model.rational):
        raise KernelRowNotNormalized("alpha is not a distribution over the local space")
    for key, row in model.shared_kernel.items():
        if len(row) != model.n_shared or not _row_ok(row, model.rational):
            raise KernelRowNotNormalized(f"shared kernel row {key} is not normalized: {row}")
    for agent, kernel in enumerate(model.local_kernels, start=1):
        for key, row in kernel.items():
            if len(row) != model.n_local or not _row_ok(row, model.rational):
                raise KernelRowNotNormalized(f"local kernel (agent {agent}) row {key} is not normalized: {row}")
    for key, value in model.cost.items():
        if model.rational and not is_exact(value):
            raise SchemaError(f"cost {key} is not exact in rational mode")
        if not model.rational and value != value:  # NaN
            raise SchemaError(f"cost {key} is not finite")
    if model.aggregate is not None:
        n = len(model.aggregate_space)
        if any(not 0 <= a < n for a in model.aggregate.values()):
            raise SchemaError("aggregate map leaves the aggregate space")
        for kernel in (model.shared_kernel,) + tuple(model.local_kernels):
            for key, row in kernel.items():
                t, *state, u1, u2 = key
                for v1, v2 in model.action_pairs():
                    if model.aggregate[(v1, v2)] == model.aggregate[(u1, u2)]:
                        if kernel[(t, *state, v1, v2)] != row:
                            raise SchemaError("kernels must depend on actions only through the aggregate map")
    return model


# -- model files ------------------------------------------------------------

WILDCARD = "*"


def _label_index(space: Sequence[Hashable], value: Any, what: str) -> int:
    for i, lab in enumerate(space):
        if lab == value:
            return i
    for i, lab in enumerate(space):
        if str(lab) == str(value):
            return i
    raise SchemaError(f"unknown {what} label {value!r}; expected one of {list(space)}")


def _select(space: Sequence[Hashable], value: Any, what: str) -> list:
    """Indices matched by a row key: wildcard, single label, or list of labels."""
    if value is None or value == WILDCARD:
        return list(range(len(space)))
    if isinstance(value, list):
        return [_label_index(space, v, what) for v in value]
    return [_label_index(space, value, what)]


def _select_times(value: Any, horizon: int) -> list:
    if value is None or value == WILDCARD:
        return list(range(1, horizon + 1))
    values = value if isinstance(value, list) else [value]
    out = []
    for v in values:
        try:
            t = int(v)
        except (TypeError, ValueError):
            raise SchemaError(f"bad time {v!r}") from None
        if not 1 <= t <= horizon:
            raise SchemaError(f"time {t} outside 1..{horizon}")
        out.append(t)
    return out


def _pair(value: Any, what: str) -> tuple:
    if value is None or value == WILDCARD:
        return (WILDCARD, WILDCARD)
    if not isinstance(value, list) or len(value) != 2:
        raise SchemaError(f"{what} must be a two-element list [agent1, agent2]")
    return tuple(value)


def _parse_row(value: Any, space: Sequence[Hashable], rational: bool, what: str) -> tuple:
    if isinstance(value, dict):
        row = [parse_scalar(0, rational)] * len(space)
        for lab, w in value.items():
            row[_label_index(space, lab, what)] = parse_scalar(w, rational)
        return tuple(row)
    if not isinstance(value, list):
        raise SchemaError(f"{what}: expected a list or mapping of weights")
    if len(value) != len(space):
        raise SchemaError(f"{what}: {len(value)} weights for a space of size {len(space)}")
    return tuple(parse_scalar(w, rational) for w in value)


def _scan_fraction_syntax(node: Any) -> bool:
    if isinstance(node, dict):
        return any(_scan_fraction_syntax(v) for v in node.values())
    if isinstance(node, list):
        return any(_scan_fraction_syntax(v) for v in node)
    return has_fraction_syntax(node)


REQUIRED_FIELDS = ("horizon", "local_space", "action_space", "alpha", "info_structure")
KNOWN_FIELDS = set(REQUIRED_FIELDS) | {
    "name", "numeric", "shared_space", "alpha0", "shared_kernel", "local_kernel", "local_kernel_agent2",
    "cost", "aggregate", "flags", "strategy", "strategy_pair", "description",
}


def parse_document(text: str) -> dict:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError(f"model file is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("model file must be a mapping")
    return doc


def load_model(text: str, numeric: Optional[str] = None) -> Tuple[TeamModel, InfoStructure]:
    """Parse a model file and return the validated model and its information structure.

    ``numeric`` overrides the file's ``numeric`` field (``"rational"`` or ``"float"``).
    """
    doc = parse_document(text) if isinstance(text, str) else text
    return model_from_document(doc, numeric=numeric)


def model_from_document(doc: dict, numeric: Optional[str] = None) -> Tuple[TeamModel, InfoStructure]:
    missing = [f for f in REQUIRED_FIELDS if f not in doc]
    if missing:
        raise SchemaError(f"missing required field(s): {', '.join(missing)}")
    unknown = sorted(set(doc) - KNOWN_FIELDS)
    if unknown:
        raise SchemaError(f"unknown field(s): {', '.join(unknown)}")
    info = InfoStructure.parse(doc["info_structure"])

    mode = numeric or doc.get("numeric")
    if mode is None:
        mode = "rational" if _scan_fraction_syntax(doc) else "float"
    if mode not in ("rational", "float"):
        raise SchemaError(f"numeric must be 'rational' or 'float', got {mode!r}")
    rational = mode == "rational"

    try:
        horizon = int(doc["horizon"])
    except (TypeError, ValueError):
        raise SchemaError("horizon must be an integer") from None
    if horizon < 1:
        raise SchemaError("horizon must be positive")
    X = tuple(doc["local_space"])
    U = tuple(doc["action_space"])
    X0 = tuple(doc.get("shared_space", [0]))
    one = parse_scalar(1, rational)
    zero = parse_scalar(0, rational)

    alpha = _parse_row(doc["alpha"], X, rational, "alpha")
    if "alpha0" in doc:
        alpha0 = _parse_row(doc["alpha0"], X0, rational, "alpha0")
    elif len(X0) == 1:
        alpha0 = (one,)
    else:
        raise SchemaError("alpha0 is required when the shared space has more than one element")

    aggregate = agg_space = None
    if "aggregate" in doc:
        aggregate, agg_space = _parse_aggregate(doc["aggregate"], U)
    if info is InfoStructure.P1D and aggregate is None:
        raise SchemaError("info_structure p1d requires an aggregate map")

    def action_keys(row: dict, what: str):
        """Expand a row's action selector into concrete (u1, u2) pairs."""
        if "a" in row:
            if aggregate is None:
                raise SchemaError(f"{what}: row keyed by aggregate 'a' but model has no aggregate map")
            targets = set(_select(agg_space, row["a"], "aggregate"))
            return [(u1, u2) for (u1, u2), a in aggregate.items() if a in targets]
        u1, u2 = _pair(row.get("u"), f"{what} u")
        return list(product(_select(U, u1, "action"), _select(U, u2, "action")))

    times = range(1, horizon)

    shared = {}
    if "shared_kernel" in doc:
        for row in _rows(doc["shared_kernel"], "shared_kernel"):
            dist = _parse_row(row.get("dist"), X0, rational, "shared_kernel dist")
            for t in _select_times(row.get("t"), horizon):
                for x0 in _select(X0, row.get("x0"), "shared state"):
                    for u1, u2 in action_keys(row, "shared_kernel"):
                        shared[(t, x0, u1, u2)] = dist
    elif len(X0) == 1:
        for t, u1, u2 in product(times, range(len(U)), range(len(U))):
            shared[(t, 0, u1, u2)] = (one,)
    for key in product(times, range(len(X0)), range(len(U)), range(len(U))):
        if key not in shared:
            raise SchemaError(f"shared_kernel has no row for (t, x0, u1, u2) = {_labels_of(key, (None, X0, U, U))}")

    def local(field_name: str):
        kernel = {}
        for row in _rows(doc.get(field_name, []), field_name):
            dist = _parse_row(row.get("dist"), X, rational, f"{field_name} dist")
            for t in _select_times(row.get("t"), horizon):
                for x in _select(X, row.get("x"), "local state"):
                    for x0 in _select(X0, row.get("x0"), "shared state"):
                        for u1, u2 in action_keys(row, field_name):
                            kernel[(t, x, x0, u1, u2)] = dist
        return {key: v for key, v in kernel.items() if key[0] < horizon}

    k1 = local("local_kernel")
    if horizon > 1 and "local_kernel" not in doc:
        raise SchemaError("local_kernel is required when horizon > 1")
    for key in product(times, range(len(X)), range(len(X0)), range(len(U)), range(len(U))):
        if key not in k1:
            raise SchemaError(f"local_kernel has no row for (t, x, x0, u1, u2) = {_labels_of(key, (None, X, X0, U, U))}")
    k2 = k1
    if "local_kernel_agent2" in doc:
        k2 = dict(k1)
        k2.update(local("local_kernel_agent2"))

    cost = {key: zero for key in product(range(1, horizon + 1), range(len(X0)), range(len(X)), range(len(X)),
                                         range(len(U)), range(len(U)))}
    for row in _rows(doc.get("cost", []), "cost"):
        if "value" not in row:
            raise SchemaError("cost row without 'value'")
        value = parse_scalar(row["value"], rational)
        x1s, x2s = _pair(row.get("x"), "cost x")
        for t in _select_times(row.get("t"), horizon):
            for x0 in _select(X0, row.get("x0"), "shared state"):
                for x1 in _select(X, x1s, "local state"):
                    for x2 in _select(X, x2s, "local state"):
                        for u1, u2 in action_keys(row, "cost"):
                            cost[(t, x0, x1, x2, u1, u2)] = value

    model = TeamModel(
        horizon=horizon, shared_space=X0, local_space=X, action_space=U, alpha0=alpha0, alpha=alpha,
        shared_kernel=shared, local_kernels=(k1, k2), cost=cost, rational=rational,
        aggregate=aggregate, aggregate_space=agg_space, name=str(doc.get("name", "model")),
    )
    check_model(model)

    flags = doc.get("flags") or {}
    for flag, declared in flags.items():
        if flag not in ("iid_uncontrolled_local", "local_ignores_own_state"):
            raise SchemaError(f"unknown flag {flag!r}")
        actual = getattr(model, flag)
        if bool(declared) != actual:
            raise InconsistentFlag(f"flag {flag} declared {bool(declared)} but kernels say {actual}")
    if not model.cost_exchangeable:
        logger.warning("model %r: cost is not exchangeable between agents; symmetric strategies may be a poor fit",
                       model.name)
    return model, info


def _rows(value: Any, what: str) -> list:
    if value is None:
        return []
    if not isinstance(value, list) or not all(isinstance(r, dict) for r in value):
        raise SchemaError(f"{what} must be a list of mappings")
    return value


def _labels_of(key: tuple, spaces: tuple) -> tuple:
    return tuple(k if space is None else space[k] for k, space in zip(key, spaces))


def _parse_aggregate(spec: Any, U: tuple):
    if spec in ("sum", "max", "min"):
        fn = {"sum": lambda a, b: a + b, "max": max, "min": min}[spec]
        try:
            values = {(i, j): fn(U[i], U[j]) for i, j in product(range(len(U)), repeat=2)}
        except TypeError:
            raise SchemaError(f"aggregate {spec!r} needs numeric action labels") from None
        space = tuple(sorted(set(values.values())))
        return {key: space.index(v) for key, v in values.items()}, space
    if not isinstance(spec, dict) or "space" not in spec or "table" not in spec:
        raise SchemaError("aggregate must be 'sum', 'max', 'min' or a mapping with 'space' and 'table'")
    space = tuple(spec["space"])
    table = {}
    for row in _rows(spec["table"], "aggregate table"):
        u1, u2 = _pair(row.get("u"), "aggregate u")
        a = _label_index(space, row.get("a"), "aggregate")
        for i in _select(U, u1, "action"):
            for j in _select(U, u2, "action"):
                table[(i, j)] = a
    for key in product(range(len(U)), repeat=2):
        if key not in table:
            raise SchemaError(f"aggregate table has no entry for action pair {(U[key[0]], U[key[1]])}")
    return table, space


def describe(model: TeamModel, info: InfoStructure) -> str:
    parts = [
        f"{model.name}: T={model.horizon}",
        f"|X0|={model.n_shared} |X|={model.n_local} |U|={model.n_actions}",
        f"info={info.value}",
        "rational" if model.rational else "float",
    ]
    return ", ".join(parts)


def initial_dist(model: TeamModel) -> Dist:
    return Dist(range(model.n_local), model.alpha, check=False)
