"""Seeded generators of small random models for property checks."""
from __future__ import annotations

import random
from fractions import Fraction
from typing import Optional

from .model import TeamModel


def random_dist(rng: random.Random, n: int, resolution: int = 4, allow_zero: bool = True) -> list:
    lo = 0 if allow_zero else 1
    weights = [rng.randint(lo, resolution) for _ in range(n)]
    if sum(weights) == 0:
        weights[rng.randrange(n)] = 1
    total = sum(weights)
    return [Fraction(w, total) for w in weights]


def random_model(seed: int, horizon: int = 2, n_shared: int = 1, n_local: int = 2, n_actions: int = 2,
                 kind: str = "general", cost_range: int = 3, exchangeable: bool = False,
                 aggregate: Optional[str] = None, rational: bool = True, full_support_alpha: bool = False,
                 name: Optional[str] = None) -> TeamModel:
    """Random finite model with rational entries.

    ``kind`` selects the local dynamics: ``"general"``, ``"iid"`` (rows equal
    to alpha, no shared state) or ``"ignores_own"`` (rows independent of the
    agent's own state). With ``aggregate="sum"`` every kernel depends on the
    actions only through ``u1 + u2``.
    """
    rng = random.Random(seed)
    if kind == "iid":
        n_shared = 1
    alpha0 = random_dist(rng, n_shared, allow_zero=False)
    alpha = random_dist(rng, n_local, allow_zero=not full_support_alpha)
    memo = {}

    def act_key(u1, u2):
        return (u1 + u2,) if aggregate == "sum" else (u1, u2)

    def table(tag, *key):
        k = (tag,) + key
        if k not in memo:
            size = n_shared if tag == "shared" else n_local
            memo[k] = random_dist(rng, size)
        return memo[k]

    def shared(t, x0, u1, u2):
        return table("shared", t, x0, *act_key(u1, u2))

    def local(t, x, x0, u1, u2):
        if kind == "iid":
            return alpha
        if kind == "ignores_own":
            return table("local", t, x0, *act_key(u1, u2))
        return table("local", t, x, x0, *act_key(u1, u2))

    def cost(t, x0, x1, x2, u1, u2):
        if exchangeable:
            key = ("cost", t, x0) + min((x1, u1, x2, u2), (x2, u2, x1, u1))
        else:
            key = ("cost", t, x0, x1, x2, u1, u2)
        if key not in memo:
            memo[key] = rng.randint(0, cost_range)
        return memo[key]

    return TeamModel.from_functions(
        horizon, n_shared, n_local, n_actions, alpha0, alpha, shared, local, cost,
        aggregate=(lambda u1, u2: u1 + u2) if aggregate == "sum" else None,
        rational=rational, name=name or f"random-{kind}-{seed}",
    )
