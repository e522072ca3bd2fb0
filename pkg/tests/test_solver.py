from fractions import Fraction as F
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from symteam.belief import FactoredBelief, initial_belief
from symteam.errors import BudgetExceeded
from symteam.evaluation import evaluate_exact
from symteam.model import InfoStructure
from symteam.prescriptions import Prescription, PrescriptionGridSpec, lift_c_to_b, project_b_to_c
from symteam.probability import Dist
from symteam.random_models import random_model
from symteam.scenarios import load_scenario
from symteam.solver import (BeliefNode, SymmetricTeamSolver, certified_solution, extract_symmetric_strategy,
                            optimize_prescription, q_value, solve, specialized_cost_certificate)
from symteam.strategies import FunctionStrategy

from helpers import example1

P1A, P1B, P1C, P1D = InfoStructure.P1A, InfoStructure.P1B, InfoStructure.P1C, InfoStructure.P1D
DET = PrescriptionGridSpec(K=1, deterministic_only=True)


def brute_force_deterministic_p1c(model):
    """Best symmetric deterministic P1c strategy for T=2 by enumerating every (t, x, c) table."""
    xs, us = range(model.n_local), range(model.n_actions)
    commons = [((x0,), (y0, u1, u2)) for x0 in range(model.n_shared) for y0 in range(model.n_shared)
               for u1 in us for u2 in us]
    keys1 = [(x0, x) for x0 in range(model.n_shared) for x in xs]
    keys2 = [(c, x) for c in commons for x in xs]
    one, zero = model.one, model.zero
    best = None
    for a1 in product(us, repeat=len(keys1)):
        t1 = dict(zip(keys1, a1))
        for a2 in product(us, repeat=len(keys2)):
            t2 = dict(zip(keys2, a2))

            def g(t, x, c, t1=t1, t2=t2):
                u = t1[(c[0][0], x)] if t == 1 else t2[(c, x)]
                return tuple(one if v == u else zero for v in us)

            j = evaluate_exact(model, FunctionStrategy(g), P1C)
            best = j if best is None else min(best, j)
    return best


def test_example1_values():
    m = example1()
    assert solve(m, P1C, PrescriptionGridSpec(K=2)).value == F(1, 2)
    assert solve(m, P1C, DET).value == 1
    assert solve(m, P1C, PrescriptionGridSpec(K=2), ).values_by_x0 == {0: F(1, 2)}


def test_example1_float_mode():
    assert solve(example1(rational=False), P1C, PrescriptionGridSpec(K=2)).value == pytest.approx(0.5)


def test_q_value_and_optimizer():
    m = example1()
    node = BeliefNode(1, initial_belief(m, P1C))
    coin = Prescription([0], [(F(1, 2), F(1, 2))])
    assert q_value(m, P1C, node, coin) == F(1, 2)
    gamma, value = optimize_prescription(m, P1C, node, None, PrescriptionGridSpec(K=4))
    assert (gamma, value) == (coin, F(1, 2))


@settings(max_examples=10)
@given(seed=st.integers(0, 10**6))
def test_deterministic_solve_matches_brute_force(seed):
    m = random_model(seed, horizon=2)
    assert solve(m, P1C, DET).value == brute_force_deterministic_p1c(m)


@pytest.mark.parametrize("info", [P1A, P1B, P1C, P1D])
@given(seed=st.integers(0, 10**6))
def test_extracted_strategy_achieves_value(info, seed):
    m = random_model(seed, horizon=2, n_shared=1 + seed % 2, aggregate="sum" if info is P1D else None)
    report = solve(m, info, PrescriptionGridSpec(K=2))
    assert evaluate_exact(m, extract_symmetric_strategy(m, info, report), info) == report.value


@given(seed=st.integers(0, 10**6))
def test_grid_monotone(seed):
    m = random_model(seed, horizon=2)
    det = solve(m, P1C, DET).value
    k2 = solve(m, P1C, PrescriptionGridSpec(K=2)).value
    k4 = solve(m, P1C, PrescriptionGridSpec(K=4)).value
    assert det >= k2 >= k4


@given(seed=st.integers(0, 10**6))
def test_refinement_never_hurts(seed):
    m = random_model(seed, horizon=2)
    plain = solve(m, P1C, PrescriptionGridSpec(K=2)).value
    assert solve(m, P1C, PrescriptionGridSpec(K=2, refinement=(2, F(1, 2)))).value <= plain


@given(seed=st.integers(0, 10**6))
def test_more_common_information_helps(seed):
    m = random_model(seed, horizon=2, aggregate="sum")
    spec = PrescriptionGridSpec(K=2)
    a, b, c, d = (solve(m, i, spec).value for i in (P1A, P1B, P1C, P1D))
    assert a <= c and b <= c and c <= d


@given(seed=st.integers(0, 10**6))
def test_state_independent_dynamics_p1a_equals_p1c(seed):
    m = random_model(seed, horizon=2, kind="ignores_own")
    spec = PrescriptionGridSpec(K=2)
    assert solve(m, P1A, spec).value == solve(m, P1C, spec).value


@given(seed=st.integers(0, 10**6), data=st.data())
def test_final_stage_q_lift_and_project(seed, data):
    m = random_model(seed, horizon=2, kind="iid")
    T = m.horizon
    weights = [F(w, 4) for w in data.draw(st.lists(st.integers(0, 4), min_size=2, max_size=2))]
    rows_c = [(w, 1 - w) for w in weights]
    gamma_c = Prescription([0, 1], rows_c)
    # P1c belief equal to alpha, P1b belief equal to the product of alpha over histories
    pi_c = Dist([0, 1], m.alpha)
    hist = P1B.private_space(m, T)
    pi_b = Dist(hist, [m.alpha[h[0]] * m.alpha[h[1]] for h in hist], check=False)
    node_c = BeliefNode(T, FactoredBelief(0, pi_c, pi_c))
    node_b = BeliefNode(T, FactoredBelief(0, pi_b, pi_b))
    assert q_value(m, P1B, node_b, lift_c_to_b(gamma_c, T)) == q_value(m, P1C, node_c, gamma_c)
    rows_b = [(w, 1 - w) for w in (F(data.draw(st.integers(0, 4)), 4) for _ in hist)]
    gamma_b = Prescription(hist, rows_b)
    assert q_value(m, P1C, node_c, project_b_to_c(gamma_b, m.alpha, T)) == q_value(m, P1B, node_b, gamma_b)


def test_specialized_cost_certificate():
    m, _, _ = load_scenario("specialized_cost")
    identity = tuple(range(m.n_local))
    cert = specialized_cost_certificate(m, identity)
    assert cert.certified and cert.witness is None
    assert not specialized_cost_certificate(m, tuple(reversed(identity))).certified
    for info in (P1B, P1C):
        assert certified_solution(m, info, identity).value == 0


def test_certificate_rejects_negative_cost():
    m = example1()
    cost = dict(m.cost)
    cost[(1, 0, 0, 0, 0, 1)] = -1
    from dataclasses import replace
    cert = specialized_cost_certificate(replace(m, cost=cost, _flags={}), (0,))
    assert not cert.certified and cert.reason == "negative cost"


def test_p1b_horizon_cap():
    with pytest.raises(BudgetExceeded):
        solve(random_model(0, horizon=5), P1B, DET)


def test_candidate_budget():
    with pytest.raises(BudgetExceeded):
        solve(random_model(0, horizon=1, n_local=4), P1C, PrescriptionGridSpec(K=40, budget=1000))


def test_estimator_api():
    est = SymmetricTeamSolver(grid=2)
    assert est.get_params()["grid"] == 2
    assert clone(est).get_params() == est.get_params()
    with pytest.raises(NotFittedError):
        est.predict_proba([(1, 0, ((0,),))])
    est.fit(example1())
    assert est.value_ == F(1, 2) and est.score(example1()) == -0.5
    assert est.predict_proba([(1, 0, ((0,),))]).tolist() == [[0.5, 0.5]]
    assert est.predict([(1, 0, ((0,),))]).tolist() == [0]
