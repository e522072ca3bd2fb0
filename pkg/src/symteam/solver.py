"""Coordinator dynamic program with identical prescriptions for both agents.

The value recursion runs top-down from the prior belief and memoizes on
``(t, belief)``, so only beliefs reachable under some candidate prescription
are ever visited. The minimization over prescriptions is approximated on a
finite candidate set (a grid plus point masses, with optional coordinate
descent); the reported value is optimal over that set only.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .belief import (Belief, FactoredBelief, JointBelief, initial_belief, replay, update_p1a, update_p1d,
                     _bayes_current, _bayes_histories)
from .errors import BudgetExceeded, EvidenceImpossible, UnreachableInfoRealization
from .model import InfoStructure, TeamModel
from .prescriptions import Prescription, PrescriptionGridSpec, grid_rows
from .strategies import Strategy

logger = logging.getLogger(__name__)

P1B_HORIZON_CAP = 4
Continuation = Callable[[int, Belief], Any]


@dataclass(frozen=True)
class BeliefNode:
    t: int
    belief: Belief

    @property
    def x0(self) -> int:
        return self.belief.x0


def _node_key(t: int, belief: Belief, exact: bool) -> tuple:
    return (t,) + belief.key(exact)


# -- one-stage expectation -------------------------------------------------------

def _agent_marginals(model: TeamModel, info: InfoStructure, pi, gamma: Prescription):
    """``m[x][u] = sum over p with current state x of pi(p) * gamma(p; u)``."""
    nu = model.n_actions
    m = [[model.zero] * nu for _ in range(model.n_local)]
    for p, w in pi.items():
        if w == 0:
            continue
        x = info.current_state(p)
        row = gamma.row(p)
        mx = m[x]
        for u in range(nu):
            if row[u]:
                mx[u] += w * row[u]
    return m


def _stage_cost_factored(model, t, x0, m1, m2):
    total = model.zero
    nx, nu = model.n_local, model.n_actions
    for x1, u1 in product(range(nx), range(nu)):
        a = m1[x1][u1]
        if a == 0:
            continue
        for x2, u2 in product(range(nx), range(nu)):
            b = m2[x2][u2]
            if b:
                total += a * b * model.k(t, x0, x1, x2, u1, u2)
    return total


def _next_shared(model, t, x0, u1, u2):
    return [(y, w) for y, w in enumerate(model.F0(t, x0, u1, u2)) if w != 0]


def q_value(model: TeamModel, info: InfoStructure, node: BeliefNode, gamma: Prescription,
            continuation: Optional[Continuation] = None) -> Any:
    """Expected stage cost plus continuation at the updated belief, under prescription ``gamma``.

    Zero-probability branches are skipped, so ``continuation`` is only called
    on beliefs that can actually occur. At ``t = T`` it is never called.
    """
    value = stage_cost(model, info, node, gamma)
    if node.t >= model.horizon or continuation is None:
        return value
    for prob, nxt in successors(model, info, node, gamma):
        value += prob * continuation(node.t + 1, nxt)
    return value


def stage_cost(model: TeamModel, info: InfoStructure, node: BeliefNode, gamma: Prescription) -> Any:
    belief = node.belief
    if isinstance(belief, JointBelief):
        value = model.zero
        for (x, y), w in belief.pi12.items():
            if w == 0:
                continue
            r1, r2 = gamma.row(x), gamma.row(y)
            for u1, u2 in product(range(model.n_actions), repeat=2):
                p = w * r1[u1] * r2[u2]
                if p:
                    value += p * model.k(node.t, belief.x0, x, y, u1, u2)
        return value
    m1 = _agent_marginals(model, info, belief.pi1, gamma)
    m2 = _agent_marginals(model, info, belief.pi2, gamma)
    return _stage_cost_factored(model, node.t, belief.x0, m1, m2)


def successors(model: TeamModel, info: InfoStructure, node: BeliefNode, gamma: Prescription):
    """Positive-probability ``(probability, next belief)`` branches out of ``node`` under ``gamma``.

    Branches are indexed by the common-information increment, so distinct
    increments may lead to equal beliefs.
    """
    t, belief = node.t, node.belief
    x0 = belief.x0
    nx, nu = model.n_local, model.n_actions
    if isinstance(belief, JointBelief):
        branch: Dict[tuple, Any] = {}
        for (x, y), w in belief.pi12.items():
            if w == 0:
                continue
            r1, r2 = gamma.row(x), gamma.row(y)
            for u1, u2 in product(range(nu), repeat=2):
                p = w * r1[u1] * r2[u2]
                if p == 0:
                    continue
                a = model.aggregate_of(u1, u2)
                for y0, w0 in _next_shared(model, t, x0, u1, u2):
                    branch[(y0, a)] = branch.get((y0, a), model.zero) + p * w0
        for (y0, a), p in sorted(branch.items()):
            yield p, update_p1d(model, t, belief, gamma, a, y0)
        return
    m1 = _agent_marginals(model, info, belief.pi1, gamma)
    m2 = _agent_marginals(model, info, belief.pi2, gamma)
    if info is InfoStructure.P1A:
        for x1, u1 in product(range(nx), range(nu)):
            a = m1[x1][u1]
            if a == 0:
                continue
            for x2, u2 in product(range(nx), range(nu)):
                b = m2[x2][u2]
                if b == 0:
                    continue
                for y0, w0 in _next_shared(model, t, x0, u1, u2):
                    yield a * b * w0, update_p1a(model, t, x0, (y0, u1, u2, x1, x2))
        return
    w1 = [sum((m1[x][u] for x in range(nx)), model.zero) for u in range(nu)]
    w2 = [sum((m2[x][u] for x in range(nx)), model.zero) for u in range(nu)]
    bayes = _bayes_histories if info is InfoStructure.P1B else _bayes_current
    for u1, u2 in product(range(nu), range(nu)):
        if w1[u1] == 0 or w2[u2] == 0:
            continue
        pi1 = bayes(model, t, 1, belief.pi1, gamma, x0, u1, u2)
        pi2 = bayes(model, t, 2, belief.pi2, gamma, x0, u1, u2)
        for y0, w0 in _next_shared(model, t, x0, u1, u2):
            yield w1[u1] * w2[u2] * w0, FactoredBelief(y0, pi1, pi2)


# -- minimization over prescriptions ---------------------------------------------

def _support(belief: Belief) -> list:
    if isinstance(belief, JointBelief):
        labels = set()
        for (x, y), w in belief.pi12.items():
            if w != 0:
                labels.update((x, y))
        return sorted(labels)
    return sorted(set(belief.pi1.support) | set(belief.pi2.support))


def _domain(model: TeamModel, info: InfoStructure, t: int) -> tuple:
    return info.private_space(model, t)


def candidate_prescriptions(model: TeamModel, info: InfoStructure, node: BeliefNode, spec: PrescriptionGridSpec):
    """Candidates in lexicographic order, varying only rows the belief can reach.

    Rows for private information outside the belief's support never affect the
    value, so they are pinned to the first candidate row.
    """
    domain = _domain(model, info, node.t)
    rows = grid_rows(model.n_actions, spec, model.rational)
    support = _support(node.belief)
    count = len(rows) ** len(support)
    if count > spec.budget:
        raise BudgetExceeded(f"{count} candidate prescriptions at t={node.t} exceed budget {spec.budget}")
    position = {p: i for i, p in enumerate(domain)}
    base = [rows[0]] * len(domain)
    for choice in product(rows, repeat=len(support)):
        table = list(base)
        for p, r in zip(support, choice):
            table[position[p]] = r
        yield Prescription(domain, table, check=False)


def _refine(model, info, node, gamma, value, continuation, spec, stats):
    steps, shrink = spec.refinement
    shrink = Fraction(shrink) if model.rational else float(shrink)
    h = (Fraction(1, spec.K) if model.rational else 1.0 / spec.K)
    nu = model.n_actions
    support = _support(node.belief)
    for _ in range(steps):
        h = h * shrink
        for p in support:
            idx = gamma.domain.index(p)
            best = None
            for i, j in product(range(nu), range(nu)):
                row = list(gamma.rows[idx])
                if i == j or row[j] < h:
                    continue
                row[i] += h
                row[j] -= h
                rows = list(gamma.rows)
                rows[idx] = tuple(row)
                cand = Prescription(gamma.domain, rows, check=False)
                q = q_value(model, info, node, cand, continuation)
                stats["prescriptions_evaluated"] += 1
                if q < value and (best is None or q < best[1]):
                    best = (cand, q)
            if best is not None:
                gamma, value = best
    return gamma, value


def optimize_prescription(model: TeamModel, info: InfoStructure, node: BeliefNode,
                          continuation: Optional[Continuation], spec: PrescriptionGridSpec,
                          stats: Optional[dict] = None) -> Tuple[Prescription, Any]:
    """Best candidate by q-value; the first minimizer in candidate order wins ties."""
    stats = stats if stats is not None else {"prescriptions_evaluated": 0}
    best_gamma, best_value = None, None
    for gamma in candidate_prescriptions(model, info, node, spec):
        q = q_value(model, info, node, gamma, continuation)
        stats["prescriptions_evaluated"] += 1
        if best_value is None or q < best_value:
            best_gamma, best_value = gamma, q
    if spec.refinement is not None and not spec.deterministic_only:
        best_gamma, best_value = _refine(model, info, node, best_gamma, best_value, continuation, spec, stats)
        best_value = q_value(model, info, node, best_gamma, continuation)
    return best_gamma, best_value


# -- full recursion ---------------------------------------------------------------

@dataclass
class SolveReport:
    value: Any
    values_by_x0: Dict[int, Any]
    policy: Dict[tuple, Tuple[BeliefNode, Prescription]]
    values: Dict[tuple, Any]
    node_count: int
    memo_hits: int
    prescriptions_evaluated: int
    config: dict = field(default_factory=dict)
    info: Optional[InfoStructure] = None
    exact: bool = True
    seconds: float = 0.0

    def prescription(self, t: int, belief: Belief) -> Prescription:
        try:
            return self.policy[_node_key(t, belief, self.exact)][1]
        except KeyError:
            raise UnreachableInfoRealization(f"no prescription recorded for the belief at t={t}") from None

    def nodes(self):
        """Every recorded node (including ones only visited by losing candidates), in time order."""
        return sorted(self.policy.values(), key=lambda item: item[0].t)

    def on_policy(self, model: TeamModel) -> list:
        """``(node, prescription)`` pairs reachable under the reported policy, breadth first."""
        frontier = [initial_belief(model, self.info, x0) for x0, w in enumerate(model.alpha0) if w != 0]
        out, seen = [], set()
        for t in range(1, model.horizon + 1):
            nxt = []
            for belief in frontier:
                key = _node_key(t, belief, self.exact)
                if key in seen:
                    continue
                seen.add(key)
                node, gamma = self.policy[key]
                out.append((node, gamma))
                if t < model.horizon:
                    nxt.extend(b for _, b in successors(model, self.info, node, gamma))
            frontier = nxt
        return out


class _Recursion:
    def __init__(self, model, info, choose):
        self.model, self.info, self.choose = model, info, choose
        self.exact = model.rational
        self.values: Dict[tuple, Any] = {}
        self.policy: Dict[tuple, Tuple[BeliefNode, Prescription]] = {}
        self.stats = {"prescriptions_evaluated": 0, "memo_hits": 0}

    def __call__(self, t: int, belief: Belief):
        if t > self.model.horizon:
            return self.model.zero
        key = _node_key(t, belief, self.exact)
        if key in self.values:
            self.stats["memo_hits"] += 1
            return self.values[key]
        node = BeliefNode(t, belief)
        gamma, value = self.choose(node, self, self.stats)
        self.values[key] = value
        self.policy[key] = (node, gamma)
        return value

    def report(self, config, start) -> SolveReport:
        per_x0 = {}
        total = self.model.zero
        for x0, w in enumerate(self.model.alpha0):
            if w == 0:
                continue
            per_x0[x0] = self(1, initial_belief(self.model, self.info, x0))
            total += w * per_x0[x0]
        return SolveReport(
            value=total, values_by_x0=per_x0, policy=self.policy, values=self.values,
            node_count=len(self.values), memo_hits=self.stats["memo_hits"],
            prescriptions_evaluated=self.stats["prescriptions_evaluated"], config=config, info=self.info,
            exact=self.exact, seconds=time.perf_counter() - start,
        )


def _check_p1b(model: TeamModel, info: InfoStructure, cap: int) -> None:
    if info is InfoStructure.P1B and model.horizon > cap:
        raise BudgetExceeded(f"P1b solving is capped at T={cap}; model has T={model.horizon}")


def solve(model: TeamModel, info: InfoStructure, spec: Optional[PrescriptionGridSpec] = None,
          p1b_horizon_cap: int = P1B_HORIZON_CAP) -> SolveReport:
    """Optimal coordinator value over the candidate set, with the minimizing prescription at every node."""
    spec = spec or PrescriptionGridSpec()
    info = InfoStructure.parse(info)
    if info is InfoStructure.P1D:
        model.aggregate_of(0, 0)
    _check_p1b(model, info, p1b_horizon_cap)
    start = time.perf_counter()

    def choose(node, rec, stats):
        return optimize_prescription(model, info, node, rec, spec, stats)

    rec = _Recursion(model, info, choose)
    config = {"grid": spec.K, "include_deterministic": spec.include_deterministic,
              "deterministic_only": spec.deterministic_only, "refinement": spec.refinement,
              "info_structure": info.value}
    report = rec.report(config, start)
    logger.info("solved %s under %s: %d nodes, %d memo hits, %d prescriptions", model.name, info.value,
                report.node_count, report.memo_hits, report.prescriptions_evaluated)
    return report


def solve_fixed(model: TeamModel, info: InfoStructure, rule: Callable[[int, Belief], Prescription],
                p1b_horizon_cap: int = P1B_HORIZON_CAP) -> SolveReport:
    """Value of a given coordinator rule ``rule(t, belief) -> Prescription`` (no minimization)."""
    info = InfoStructure.parse(info)
    _check_p1b(model, info, p1b_horizon_cap)
    start = time.perf_counter()

    def choose(node, rec, stats):
        gamma = rule(node.t, node.belief)
        stats["prescriptions_evaluated"] += 1
        return gamma, q_value(model, info, node, gamma, rec)

    rec = _Recursion(model, info, choose)
    return rec.report({"rule": "fixed", "info_structure": info.value}, start)


# -- strategy extraction -----------------------------------------------------------

class CoordinatorStrategy(Strategy):
    """Symmetric agent strategy induced by a solved coordinator policy.

    ``c_t`` is replayed through the belief updates using the recorded
    prescriptions; the prescription at the resulting node is then applied to
    the agent's private information.
    """

    def __init__(self, model: TeamModel, info: InfoStructure, report: SolveReport):
        self.model, self.info, self.report = model, info, report
        self._cache: Dict[tuple, Prescription] = {}

    def prescription_for(self, c: tuple) -> Prescription:
        gamma = self._cache.get(c)
        if gamma is None:
            try:
                belief = replay(self.model, self.info, c, self.report.prescription)
            except (EvidenceImpossible, KeyError, IndexError, ValueError) as exc:
                raise UnreachableInfoRealization(f"common information {c} is off the solved tree") from exc
            gamma = self.report.prescription(len(c), belief)
            self._cache[c] = gamma
        return gamma

    def action_dist(self, t, p, c):
        if len(c) != t:
            raise UnreachableInfoRealization(f"common information of length {len(c)} at t={t}")
        gamma = self.prescription_for(c)
        try:
            return gamma.row(p)
        except KeyError:
            raise UnreachableInfoRealization(f"private information {p!r} outside the domain at t={t}") from None


def extract_symmetric_strategy(model: TeamModel, info: InfoStructure, report: SolveReport) -> CoordinatorStrategy:
    return CoordinatorStrategy(model, InfoStructure.parse(info), report)


# -- specialized cost ---------------------------------------------------------------

@dataclass
class CostCertificate:
    certified: bool
    witness: Optional[tuple] = None
    reason: str = ""
    m: tuple = ()


def specialized_cost_certificate(model: TeamModel, m: Sequence[int]) -> CostCertificate:
    """Check that the cost is non-negative and vanishes whenever both agents play ``m(own state)``.

    The witness is the first offending ``(t, x0, x1, x2, u1, u2)`` key.
    """
    m = tuple(m)
    if len(m) != model.n_local or any(not 0 <= u < model.n_actions for u in m):
        raise ValueError("m must map every local state to an action index")
    for key in sorted(model.cost):
        if model.cost[key] < 0:
            return CostCertificate(False, key, "negative cost", m)
    for t, x0, x1, x2 in product(range(1, model.horizon + 1), range(model.n_shared), range(model.n_local),
                                 range(model.n_local)):
        key = (t, x0, x1, x2, m[x1], m[x2])
        if model.cost[key] != 0:
            return CostCertificate(False, key, "nonzero cost on the map", m)
    return CostCertificate(True, None, "", m)


def map_prescription(model: TeamModel, info: InfoStructure, t: int, m: Sequence[int]) -> Prescription:
    """The point-mass prescription ``p -> m(current state of p)``."""
    one, zero = model.one, model.zero
    domain = _domain(model, info, t)
    rows = [tuple(one if u == m[info.current_state(p)] else zero for u in range(model.n_actions)) for p in domain]
    return Prescription(domain, rows, check=False)


def certified_solution(model: TeamModel, info: InfoStructure, m: Sequence[int]) -> SolveReport:
    """Report for the coordinator rule "always m", valued exactly without any search."""
    info = InfoStructure.parse(info)
    return solve_fixed(model, info, lambda t, belief: map_prescription(model, info, t, m))


# -- estimator wrapper ---------------------------------------------------------------

class SymmetricTeamSolver(BaseEstimator):
    """Estimator-style front end: ``fit(model)`` solves, ``predict_proba`` queries the strategy.

    Queries are ``(t, p, c)`` triples in index encoding.
    """

    def __init__(self, info_structure: str = "p1c", grid: int = 20, include_deterministic: bool = True,
                 refine: Optional[tuple] = None, deterministic_only: bool = False, budget: int = 200_000,
                 p1b_horizon_cap: int = P1B_HORIZON_CAP):
        self.info_structure = info_structure
        self.grid = grid
        self.include_deterministic = include_deterministic
        self.refine = refine
        self.deterministic_only = deterministic_only
        self.budget = budget
        self.p1b_horizon_cap = p1b_horizon_cap

    def _spec(self) -> PrescriptionGridSpec:
        return PrescriptionGridSpec(K=self.grid, include_deterministic=self.include_deterministic,
                                    refinement=self.refine, deterministic_only=self.deterministic_only,
                                    budget=self.budget)

    def fit(self, X: TeamModel, y=None):
        if not isinstance(X, TeamModel):
            raise TypeError("fit expects a TeamModel")
        info = InfoStructure.parse(self.info_structure)
        self.report_ = solve(X, info, self._spec(), self.p1b_horizon_cap)
        self.value_ = self.report_.value
        self.model_ = X
        self.strategy_ = extract_symmetric_strategy(X, info, self.report_)
        return self

    def predict_proba(self, queries) -> np.ndarray:
        check_is_fitted(self, "report_")
        return np.array([[float(w) for w in self.strategy_.action_dist(t, p, c)] for t, p, c in queries])

    def predict(self, queries) -> np.ndarray:
        """Most likely action index per query (first one on ties)."""
        return np.argmax(self.predict_proba(queries), axis=1)

    def score(self, X: TeamModel, y=None) -> float:
        """Negative optimal cost, so that larger is better."""
        check_is_fitted(self, "report_")
        return -float(self.value_)
