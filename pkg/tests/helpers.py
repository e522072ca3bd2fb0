"""Shared fixtures-by-function for the test modules."""
from fractions import Fraction as F
from itertools import product

from symteam.model import InfoStructure, TeamModel
from symteam.prescriptions import Prescription
from symteam.strategies import FunctionStrategy, RandomStrategy, StrategyPair, random_row
from symteam.evaluation import private_posteriors


def example1(rational=True):
    return TeamModel.from_functions(1, 1, 1, 2, [1], [1], cost=lambda t, x0, x1, x2, u1, u2: int(u1 == u2),
                                    rational=rational, name="example1")


def coin(p):
    """Symmetric strategy playing action 1 with probability ``p``."""
    return FunctionStrategy(lambda t, x, c: (1 - p, p))


class RandomCoordinator:
    """Symmetric strategy whose rows depend on (t, c) only through a random prescription per c."""

    def __init__(self, model, info, seed, resolution=3):
        import random
        self.model, self.info = model, info
        self.rng = random.Random(seed)
        self.resolution = resolution
        self.memo = {}

    def prescription(self, t, c):
        if c not in self.memo:
            domain = self.info.private_space(self.model, t)
            rows = [random_row(self.rng, self.model.n_actions, self.resolution, 0.2, self.model.rational)
                    for _ in domain]
            self.memo[c] = Prescription(domain, rows, check=False)
        return self.memo[c]

    def strategy(self):
        return FunctionStrategy(lambda t, p, c: self.prescription(t, c).row(p))


def random_pair(model, seed):
    return StrategyPair(RandomStrategy(model, seed), RandomStrategy(model, seed + 7919))


def belief_mismatches(model, info, coordinator):
    """Compare the recursive beliefs along every reachable c_t with the trajectory oracle.

    Returns a list of ``(t, c)`` realizations where they differ.
    """
    from symteam.belief import FactoredBelief, initial_belief, update

    strategy = coordinator.strategy()
    bad = []
    for t in range(1, model.horizon + 1):
        for c, joint in private_posteriors(model, strategy, info, t).items():
            belief = initial_belief(model, info, c[0][0])
            for s in range(1, t):
                gamma = coordinator.prescription(s, c[:s])
                belief = update(model, info, s, belief, gamma, c[s])
            if belief.x0 != c[-1][0]:
                bad.append((t, c))
                continue
            if isinstance(belief, FactoredBelief):
                for agent, pi in ((1, belief.pi1), (2, belief.pi2)):
                    marg = {}
                    for pair, w in joint.items():
                        marg[pair[agent - 1]] = marg.get(pair[agent - 1], 0) + w
                    if any(pi.get(p, 0) != marg.get(p, 0) for p in set(pi.labels) | set(marg)):
                        bad.append((t, c))
                        break
            elif any(belief.pi12.get(k, 0) != joint.get(k, 0) for k in set(belief.pi12.labels) | set(joint)):
                bad.append((t, c))
    return bad
