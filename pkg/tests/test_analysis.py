from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from symteam.analysis import format_common, reachable_realizations, reduce_to_current_state, symmetry_gap
from symteam.evaluation import evaluate_exact
from symteam.model import InfoStructure
from symteam.random_models import random_model
from symteam.scenarios import load_scenario
from symteam.strategies import FunctionStrategy, StrategyPair, symmetric

from helpers import RandomCoordinator, random_pair

P1A, P1B, P1C, P1D = InfoStructure.P1A, InfoStructure.P1B, InfoStructure.P1C, InfoStructure.P1D


def test_example2_numbers():
    m, info, pair = load_scenario("example2")
    r = reduce_to_current_state(m, pair, info)
    a, b = m.action_space.index("a"), m.action_space.index("b")
    key = (2, 0, ((0,), (0, a, b)))
    assert r.tables[0][key][a] == F(5, 12)
    assert r.tables[1][key][a] == F(7, 20)
    assert r.symmetry_gap >= F(1, 15)
    assert r.cost_before == r.cost_after
    assert "gap" in r.to_csv(m)


@given(seed=st.integers(0, 10**6))
def test_reduction_preserves_cost(seed):
    m = random_model(seed, horizon=2, n_shared=1 + seed % 2)
    r = reduce_to_current_state(m, random_pair(m, seed), P1B)
    assert r.cost_before == r.cost_after


@given(seed=st.integers(0, 10**6))
def test_reduction_of_current_state_pair_is_identity(seed):
    m = random_model(seed, horizon=2)
    pair = random_pair(m, seed)
    r = reduce_to_current_state(m, pair, P1C)
    for agent, table in enumerate(r.tables, start=1):
        for (t, x, c), row in table.items():
            assert row == tuple(pair.agent(agent).action_dist(t, x, c))
    again = reduce_to_current_state(m, r.reduced, P1C)
    assert again.tables == r.tables


@given(seed=st.integers(0, 10**6))
def test_symmetric_current_state_strategy_has_no_gap(seed):
    m = random_model(seed, horizon=2)
    g = RandomCoordinator(m, P1C, seed).strategy()
    assert reduce_to_current_state(m, g, P1C).symmetry_gap == 0


def test_symmetry_gap_witness():
    g1 = FunctionStrategy(lambda t, p, c: (F(1), F(0)))
    g2 = FunctionStrategy(lambda t, p, c: (F(1, 2), F(1, 2)) if p == 1 else (F(1), F(0)))
    gap, witness = symmetry_gap(StrategyPair(g1, g2), [(1, 0, ((0,),)), (1, 1, ((0,),))])
    assert (gap, witness) == (F(1, 2), (1, 1, ((0,),)))
    assert symmetry_gap(StrategyPair(g1, g1), []) == (0, None)


def test_reduction_rejects_p1a():
    m = random_model(0)
    with pytest.raises(ValueError):
        reduce_to_current_state(m, random_pair(m, 0), P1A)


def test_reachable_and_format():
    m, info, pair = load_scenario("example2")
    reach = reachable_realizations(m, pair, info)
    assert all(len(c) == t for t, _, c in reach)
    assert format_common(m, ((0,), (0, 0, 1))) == "0|(0,0,1)"
