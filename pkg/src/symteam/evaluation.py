"""Exact (trajectory enumeration) and Monte Carlo evaluation of strategy pairs."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterator, Tuple, Union

import numpy as np

from .errors import BudgetExceeded
from .model import InfoStructure, TeamModel
from .probability import Dist
from .strategies import Strategy, StrategyPair, symmetric

DEFAULT_NODE_BUDGET = 10**7
MC_CHUNK = 1 << 16


def _as_pair(strategy: Union[Strategy, StrategyPair]) -> StrategyPair:
    return strategy if isinstance(strategy, StrategyPair) else symmetric(strategy)


def _walk(model: TeamModel, pair: StrategyPair, info: InfoStructure, budget: int, until: int = None):
    """Depth-first enumeration of positive-probability trajectories.

    Yields ``(steps, prob, cost)`` where ``steps`` is a tuple of
    ``(x0, x1, x2, u1, u2)``. With ``until=t`` the walk stops once the states
    at time ``t`` are drawn and yields ``(steps, prob, None)`` with the last
    step's actions set to ``None``.
    """
    T = model.horizon
    nodes = [0]
    zero = model.zero

    def tick():
        nodes[0] += 1
        if nodes[0] > budget:
            raise BudgetExceeded(f"trajectory tree exceeds node budget {budget}")

    def states_at(t, prefix, prob, acc):
        step_open = prefix[-1]
        if until is not None and t == until:
            yield prefix, prob, None
            return
        steps = prefix
        c = info.common_info(model, steps, t)
        g1 = pair.first.action_dist(t, info.private_info(steps, 1, t), c)
        g2 = pair.second.action_dist(t, info.private_info(steps, 2, t), c)
        x0, x1, x2 = step_open[:3]
        for u1, w1 in enumerate(g1):
            if w1 == 0:
                continue
            for u2, w2 in enumerate(g2):
                if w2 == 0:
                    continue
                tick()
                p = prob * w1 * w2
                done = prefix[:-1] + ((x0, x1, x2, u1, u2),)
                cost = acc + model.k(t, x0, x1, x2, u1, u2)
                if t == T:
                    yield done, p, cost
                    continue
                yield from transitions(t, done, p, cost)

    def transitions(t, done, prob, acc):
        x0, x1, x2, u1, u2 = done[-1]
        r0 = model.F0(t, x0, u1, u2)
        r1 = model.F(t, x1, x0, u1, u2, 1)
        r2 = model.F(t, x2, x0, u1, u2, 2)
        for y0, w0 in enumerate(r0):
            if w0 == 0:
                continue
            for y1, w1 in enumerate(r1):
                if w1 == 0:
                    continue
                for y2, w2 in enumerate(r2):
                    if w2 == 0:
                        continue
                    tick()
                    yield from states_at(t + 1, done + ((y0, y1, y2, None, None),), prob * w0 * w1 * w2, acc)

    for x0, w0 in enumerate(model.alpha0):
        if w0 == 0:
            continue
        for x1, w1 in enumerate(model.alpha):
            if w1 == 0:
                continue
            for x2, w2 in enumerate(model.alpha):
                if w2 == 0:
                    continue
                tick()
                yield from states_at(1, ((x0, x1, x2, None, None),), w0 * w1 * w2, zero)


def joint_trajectory_distribution(model: TeamModel, pair: Union[Strategy, StrategyPair], info: InfoStructure,
                                  budget: int = DEFAULT_NODE_BUDGET) -> Dist:
    """Exact law of ``(x0, x1, x2, u1, u2)_{1:T}`` by forward enumeration."""
    pair = _as_pair(pair)
    labels, weights = [], []
    for steps, prob, _ in _walk(model, pair, info, budget):
        labels.append(steps)
        weights.append(prob)
    return Dist(labels, weights, check=model.rational)


def evaluate_exact(model: TeamModel, pair: Union[Strategy, StrategyPair], info: InfoStructure,
                   budget: int = DEFAULT_NODE_BUDGET):
    """Total expected cost J(g1, g2), exact in rational mode."""
    pair = _as_pair(pair)
    total = model.zero
    for _, prob, cost in _walk(model, pair, info, budget):
        total += prob * cost
    return total


def state_prefixes(model: TeamModel, pair: Union[Strategy, StrategyPair], info: InfoStructure, t: int,
                   budget: int = DEFAULT_NODE_BUDGET) -> Iterator[Tuple[tuple, object]]:
    """Positive-probability histories up to the states at time ``t`` (actions at ``t`` undrawn)."""
    for steps, prob, _ in _walk(model, _as_pair(pair), info, budget, until=t):
        yield steps, prob


def private_posteriors(model: TeamModel, pair: Union[Strategy, StrategyPair], info: InfoStructure, t: int,
                       budget: int = DEFAULT_NODE_BUDGET) -> Dict[tuple, Dict[tuple, object]]:
    """Brute-force conditional law of ``(p1_t, p2_t)`` given each reachable ``c_t``.

    Returns ``{c_t: {(p1, p2): probability}}``, with probabilities conditioned
    on ``c_t`` and the shared state ``x0_t`` folded into ``c_t``.
    """
    joint: Dict[tuple, Dict[tuple, object]] = {}
    for steps, prob in state_prefixes(model, pair, info, t, budget):
        c = info.common_info(model, steps, t)
        key = (info.private_info(steps, 1, t), info.private_info(steps, 2, t))
        bucket = joint.setdefault(c, {})
        bucket[key] = bucket.get(key, model.zero) + prob
    for c, bucket in joint.items():
        total = sum(bucket.values(), model.zero)
        for key in bucket:
            bucket[key] = bucket[key] / total
    return joint


# -- Monte Carlo ---------------------------------------------------------------

def _float_tables(model: TeamModel):
    T, n0, nx, nu = model.horizon, model.n_shared, model.n_local, model.n_actions
    shared = np.zeros((max(T - 1, 1), n0, nu, nu, n0))
    local = np.zeros((2, max(T - 1, 1), nx, n0, nu, nu, nx))
    for (t, x0, u1, u2), row in model.shared_kernel.items():
        shared[t - 1, x0, u1, u2] = [float(w) for w in row]
    for a, kernel in enumerate(model.local_kernels):
        for (t, x, x0, u1, u2), row in kernel.items():
            local[a, t - 1, x, x0, u1, u2] = [float(w) for w in row]
    cost = np.zeros((T, n0, nx, nx, nu, nu))
    for (t, x0, x1, x2, u1, u2), value in model.cost.items():
        cost[t - 1, x0, x1, x2, u1, u2] = float(value)
    return shared, local, cost


def _cumulative(probs: np.ndarray) -> np.ndarray:
    """Row-wise CDF whose entries from the last positive weight onward are +inf.

    Searching it with a variate in (0, 1] can never land on a zero-weight label,
    even when float round-off leaves the true total slightly below one.
    """
    probs = np.atleast_2d(probs)
    cum = np.cumsum(probs, axis=-1)
    positive = probs > 0
    last = probs.shape[-1] - 1 - np.argmax(positive[..., ::-1], axis=-1)
    cols = np.arange(probs.shape[-1])
    cum[cols[None, :] >= last[:, None]] = np.inf
    return cum


def _draw(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF sampling: first index whose cumulative weight reaches ``u``."""
    return np.argmax(cum >= u[:, None], axis=1)


def _mc_chunk(model: TeamModel, pair: StrategyPair, info: InfoStructure, seq: np.random.SeedSequence, size: int,
              tables) -> Tuple[float, float]:
    shared, local, cost = tables
    nature_seq, seq1, seq2 = seq.spawn(3)
    nature = np.random.default_rng(nature_seq)
    agents = (np.random.default_rng(seq1), np.random.default_rng(seq2))
    T = model.horizon

    def unit(rng):
        return 1.0 - rng.random(size)  # (0, 1]

    hist = np.zeros((size, T, 5), dtype=np.int64)
    radix = max(model.n_shared, model.n_local, model.n_actions)
    alpha0 = _cumulative(np.array([float(w) for w in model.alpha0]))
    alpha = _cumulative(np.array([float(w) for w in model.alpha]))
    hist[:, 0, 0] = _draw(np.repeat(alpha0, size, axis=0), unit(nature))
    hist[:, 0, 1] = _draw(np.repeat(alpha, size, axis=0), unit(nature))
    hist[:, 0, 2] = _draw(np.repeat(alpha, size, axis=0), unit(nature))
    total = np.zeros(size)
    for t in range(1, T + 1):
        # actions at time t are not yet drawn; leave them out of the key
        flat = hist[:, :t, :].reshape(size, -1)[:, : t * 5 - 2]
        uniq, inverse = _unique_rows(flat, radix)
        for agent in (1, 2):
            strategy = pair.agent(agent)
            rows = np.empty((len(uniq), model.n_actions))
            for j, key in enumerate(uniq):
                steps = _steps_from_key(key, t)
                c = info.common_info(model, steps, t)
                p = info.private_info(steps, agent, t)
                rows[j] = [float(w) for w in strategy.action_dist(t, p, c)]
            cum = _cumulative(rows)
            hist[:, t - 1, 2 + agent] = _draw(cum[inverse], unit(agents[agent - 1]))
        x0, x1, x2, u1, u2 = (hist[:, t - 1, j] for j in range(5))
        total += cost[t - 1, x0, x1, x2, u1, u2]
        if t == T:
            break
        hist[:, t, 0] = _draw(_cumulative(shared[t - 1, x0, u1, u2]), unit(nature))
        hist[:, t, 1] = _draw(_cumulative(local[0, t - 1, x1, x0, u1, u2]), unit(nature))
        hist[:, t, 2] = _draw(_cumulative(local[1, t - 1, x2, x0, u1, u2]), unit(nature))
    return float(total.sum()), float((total ** 2).sum())


def _unique_rows(rows: np.ndarray, radix: int):
    """``np.unique(rows, axis=0)`` via a scalar mixed-radix code when it fits in 63 bits."""
    width = rows.shape[1]
    if width * np.log2(max(radix, 2)) < 62:
        weights = radix ** np.arange(width - 1, -1, -1, dtype=np.int64)
        codes = rows @ weights
        _, first, inverse = np.unique(codes, return_index=True, return_inverse=True)
        return rows[first], inverse.reshape(-1)
    uniq, inverse = np.unique(rows, axis=0, return_inverse=True)
    return uniq, inverse.reshape(-1)


def _steps_from_key(key: np.ndarray, t: int) -> tuple:
    vals = [int(v) for v in key] + [-1, -1]
    steps = []
    for s in range(t):
        x0, x1, x2, u1, u2 = vals[5 * s: 5 * s + 5]
        steps.append((x0, x1, x2, u1, u2) if s < t - 1 else (x0, x1, x2, None, None))
    return tuple(steps)


def evaluate_mc(model: TeamModel, strategy: Union[Strategy, StrategyPair], info: InfoStructure, seed: int, n: int,
                n_jobs: int = 1) -> Tuple[float, float]:
    """Monte Carlo estimate of J and its standard error from ``n`` seeded trajectories.

    Nature and each agent draw from disjoint substreams of ``seed``; agents
    randomize by inverse-CDF on their own uniform variates. Work is split into
    fixed-size chunks with their own substreams and reduced in chunk order, so
    the result depends only on ``(seed, n)``, never on ``n_jobs``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    pair = _as_pair(strategy)
    tables = _float_tables(model)
    sizes = [MC_CHUNK] * (n // MC_CHUNK) + ([n % MC_CHUNK] if n % MC_CHUNK else [])
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))

    def run(args):
        seq, size = args
        return _mc_chunk(model, pair, info, seq, size, tables)

    if n_jobs > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(run, zip(seqs, sizes)))
    else:
        parts = [run(args) for args in zip(seqs, sizes)]
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    mean = s1 / n
    if n == 1:
        return mean, 0.0
    var = max(s2 - n * mean * mean, 0.0) / (n - 1)
    return mean, math.sqrt(var / n)
