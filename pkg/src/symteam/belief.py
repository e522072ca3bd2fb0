"""Coordinator beliefs over private information and their exact update maps.

Under P1a, P1b and P1c the belief factors into one distribution per agent
(the shared state is known to the coordinator, so it is carried as a label).
Under P1d the two agents' states become correlated through the aggregate and
a joint distribution is kept instead.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Any, Dict, Optional, Union

from .errors import EvidenceImpossible, FlagViolation
from .evaluation import DEFAULT_NODE_BUDGET, private_posteriors
from .model import InfoStructure, TeamModel
from .prescriptions import Prescription
from .probability import Dist, normalize

QUANTUM = 1e9


def _weights_key(dist: Dist, exact: bool) -> tuple:
    if exact:
        return dist.weights
    return tuple(round(float(w) * QUANTUM) for w in dist.weights)


@dataclass(frozen=True)
class FactoredBelief:
    x0: int
    pi1: Dist
    pi2: Dist

    def marginal(self, agent: int) -> Dist:
        return self.pi1 if agent == 1 else self.pi2

    def key(self, exact: bool = True) -> tuple:
        """Memo key: exact weights in rational mode, 1e-9 quantized in float mode."""
        return (self.x0, self.pi1.labels, _weights_key(self.pi1, exact), _weights_key(self.pi2, exact))


@dataclass(frozen=True)
class JointBelief:
    x0: int
    pi12: Dist

    def marginal(self, agent: int) -> Dist:
        labels = sorted({pair[agent - 1] for pair in self.pi12.labels})
        return self.pi12.marginal(lambda pair: pair[agent - 1], labels)

    def key(self, exact: bool = True) -> tuple:
        return (self.x0, self.pi12.labels, _weights_key(self.pi12, exact))


Belief = Union[FactoredBelief, JointBelief]


def initial_belief(model: TeamModel, info: InfoStructure, x0: int = 0) -> Belief:
    """Prior belief for a realization ``x0`` of the initial shared state."""
    if info is InfoStructure.P1D:
        pairs = list(product(range(model.n_local), repeat=2))
        return JointBelief(x0, Dist(pairs, [model.alpha[x] * model.alpha[y] for x, y in pairs], check=False))
    labels = [(x,) for x in range(model.n_local)] if info is InfoStructure.P1B else list(range(model.n_local))
    pi = Dist(labels, model.alpha, check=False)
    return FactoredBelief(x0, pi, pi)


def update_p1a(model: TeamModel, t: int, x0: int, z: tuple) -> FactoredBelief:
    """Next belief once current states and actions are shared: the kernel rows themselves.

    No prescription is involved; the observed states make it irrelevant.
    """
    x0_next, u1, u2, x1, x2 = z
    labels = range(model.n_local)
    return FactoredBelief(
        x0_next,
        Dist(labels, model.F(t, x1, x0, u1, u2, 1), check=False),
        Dist(labels, model.F(t, x2, x0, u1, u2, 2), check=False),
    )


def _bayes_histories(model, t, agent, prior: Dist, gamma: Prescription, x0, u1, u2) -> Dist:
    u = u1 if agent == 1 else u2
    labels, weights = [], []
    zero = model.zero
    for h, w in prior.items():
        lik = gamma.prob(h, u) * w
        row = model.F(t, h[-1], x0, u1, u2, agent)
        for y in range(model.n_local):
            labels.append(h + (y,))
            weights.append(lik * row[y] if lik != 0 else zero)
    try:
        return normalize(labels, weights)
    except EvidenceImpossible:
        raise EvidenceImpossible(f"agent {agent} action {u} has zero probability at t={t}") from None


def update_p1b(model: TeamModel, t: int, belief: FactoredBelief, gamma: Prescription, z: tuple) -> FactoredBelief:
    """Per-agent Bayes update over local-state histories (oldest first)."""
    x0_next, u1, u2 = z
    x0 = belief.x0
    return FactoredBelief(
        x0_next,
        _bayes_histories(model, t, 1, belief.pi1, gamma, x0, u1, u2),
        _bayes_histories(model, t, 2, belief.pi2, gamma, x0, u1, u2),
    )


def _bayes_current(model, t, agent, prior: Dist, gamma: Prescription, x0, u1, u2) -> Dist:
    u = u1 if agent == 1 else u2
    acc = [model.zero] * model.n_local
    for x, w in prior.items():
        lik = gamma.prob(x, u) * w
        if lik == 0:
            continue
        row = model.F(t, x, x0, u1, u2, agent)
        for y in range(model.n_local):
            acc[y] += lik * row[y]
    try:
        return normalize(range(model.n_local), acc)
    except EvidenceImpossible:
        raise EvidenceImpossible(f"agent {agent} action {u} has zero probability at t={t}") from None


def update_p1c(model: TeamModel, t: int, belief: FactoredBelief, gamma: Prescription, z: tuple) -> FactoredBelief:
    """Per-agent Bayes update on the current local state, then one kernel step."""
    x0_next, u1, u2 = z
    x0 = belief.x0
    return FactoredBelief(
        x0_next,
        _bayes_current(model, t, 1, belief.pi1, gamma, x0, u1, u2),
        _bayes_current(model, t, 2, belief.pi2, gamma, x0, u1, u2),
    )


def update_p1d(model: TeamModel, t: int, belief: JointBelief, gamma: Prescription, a: int,
               x0_next: int) -> JointBelief:
    """Joint update when only the aggregate of the two actions is observed."""
    n = model.n_local
    x0 = belief.x0
    acc: Dict[tuple, Any] = {pair: model.zero for pair in product(range(n), repeat=2)}
    pairs = [(u1, u2) for u1, u2 in model.action_pairs() if model.aggregate_of(u1, u2) == a]
    for (x, y), w in belief.pi12.items():
        if w == 0:
            continue
        for u1, u2 in pairs:
            lik = w * gamma.prob(x, u1) * gamma.prob(y, u2)
            if lik == 0:
                continue
            lik *= model.F0(t, x0, u1, u2)[x0_next]
            if lik == 0:
                continue
            r1 = model.F(t, x, x0, u1, u2, 1)
            r2 = model.F(t, y, x0, u1, u2, 2)
            for x_, y_ in acc:
                acc[(x_, y_)] += lik * r1[x_] * r2[y_]
    labels = list(acc)
    try:
        return JointBelief(x0_next, normalize(labels, [acc[k] for k in labels]))
    except EvidenceImpossible:
        raise EvidenceImpossible(f"aggregate {a} has zero probability at t={t}") from None


def update_specialized_dynamics(model: TeamModel, t: int, x0: int, u: tuple, agent: int = 1) -> Dist:
    """Next-state law when the local kernel ignores the agent's own state."""
    if not model.local_ignores_own_state:
        raise FlagViolation("local kernel depends on the agent's own state")
    u1, u2 = u
    return Dist(range(model.n_local), model.F(t, 0, x0, u1, u2, agent), check=False)


def update(model: TeamModel, info: InfoStructure, t: int, belief: Belief, gamma: Optional[Prescription],
           z: tuple) -> Belief:
    """Dispatch to the update map of ``info``; ``z`` is the common-information increment."""
    if info is InfoStructure.P1A:
        return update_p1a(model, t, belief.x0, z)
    if info is InfoStructure.P1B:
        return update_p1b(model, t, belief, gamma, z)
    if info is InfoStructure.P1C:
        return update_p1c(model, t, belief, gamma, z)
    x0_next, a = z
    return update_p1d(model, t, belief, gamma, a, x0_next)


def replay(model: TeamModel, info: InfoStructure, c: tuple, prescriptions) -> Belief:
    """Belief at time ``len(c)`` after replaying the increments of ``c``.

    ``prescriptions(t, belief)`` supplies the prescription used at each step.
    """
    belief = initial_belief(model, info, c[0][0])
    for s in range(1, len(c)):
        gamma = None if info is InfoStructure.P1A else prescriptions(s, belief)
        belief = update(model, info, s, belief, gamma, c[s])
    return belief


# -- conditional independence -------------------------------------------------

@dataclass
class IndependenceReport:
    holds: bool
    max_deviation: Any
    witness: Optional[tuple] = None  # (c_t, p1, p2)
    joint: Any = None
    product: Any = None
    marginals: tuple = field(default=(None, None))


def check_conditional_independence(model: TeamModel, pair, info: InfoStructure, t: int,
                                   budget: int = DEFAULT_NODE_BUDGET) -> IndependenceReport:
    """Compare P(p1, p2 | c_t) with the product of its marginals on every reachable c_t.

    The witness is the first realization (in sorted order) with the largest deviation.
    """
    posteriors = private_posteriors(model, pair, info, t, budget)
    best = IndependenceReport(True, model.zero)
    for c in sorted(posteriors):
        joint = posteriors[c]
        m1: Dict[Any, Any] = {}
        m2: Dict[Any, Any] = {}
        for (p1, p2), w in joint.items():
            m1[p1] = m1.get(p1, model.zero) + w
            m2[p2] = m2.get(p2, model.zero) + w
        for p1 in sorted(m1):
            for p2 in sorted(m2):
                j = joint.get((p1, p2), model.zero)
                prod = m1[p1] * m2[p2]
                dev = abs(j - prod)
                if best.witness is None or dev > best.max_deviation:
                    best = IndependenceReport(True, dev, (c, p1, p2), j, prod, (m1[p1], m2[p2]))
    tol = 0 if model.rational else 1e-12
    best.holds = best.max_deviation <= tol
    return best
