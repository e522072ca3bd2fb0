"""Acceptance criteria, one test each.

Every criterion prints a single ``PASS``/``FAIL`` line with its runtime. Run
``pytest tests/test_acceptance.py -s`` to see them inline, or
``python tests/test_acceptance.py`` for just the summary lines.
"""
import sys
import time
from fractions import Fraction as F
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from symteam.analysis import reduce_to_current_state
from symteam.belief import (FactoredBelief, check_conditional_independence, update_p1a, update_p1c,
                            update_specialized_dynamics)
from symteam.errors import EvidenceImpossible
from symteam.evaluation import evaluate_exact, evaluate_mc
from symteam.model import InfoStructure
from symteam.prescriptions import Prescription, PrescriptionGridSpec, lift_c_to_b, project_b_to_c
from symteam.probability import Dist
from symteam.random_models import random_model
from symteam.scenarios import load_scenario
from symteam.solver import BeliefNode, certified_solution, q_value, solve, specialized_cost_certificate
from symteam.strategies import random_row

from helpers import RandomCoordinator, belief_mismatches, example1, random_pair

P1A, P1B, P1C, P1D = InfoStructure.P1A, InfoStructure.P1B, InfoStructure.P1C, InfoStructure.P1D


def grid(K, **kw):
    return PrescriptionGridSpec(K=K, **kw)


def check(number, title, limit, body):
    """Run ``body() -> (ok, detail)``, print the verdict line and return it."""
    start = time.perf_counter()
    ok, detail = body()
    elapsed = time.perf_counter() - start
    if elapsed > limit:
        ok, detail = False, f"{detail}; took {elapsed:.2f}s > {limit}s"
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2} {title}: {detail} ({elapsed:.2f}s)"
    print("\n" + line, flush=True)
    return ok, line


def c1():
    m = example1()
    sym = solve(m, P1C, grid(2)).value
    det = solve(m, P1C, grid(1, deterministic_only=True)).value
    return sym == F(1, 2) and det == 1, f"J*_sym={sym}, J*_det={det}"


def c2():
    m, info, pair = load_scenario("example2")
    r = reduce_to_current_state(m, pair, info)
    a, b = m.action_space.index("a"), m.action_space.index("b")
    key = (2, 0, ((0,), (0, a, b)))
    g1, g2 = r.tables[0][key][a], r.tables[1][key][a]
    ok = g1 == F(5, 12) and g2 == F(7, 20) and r.symmetry_gap >= F(1, 15)
    return ok, f"agent1 {g1}, agent2 {g2}, gap {r.symmetry_gap}"


def c3():
    m, _, _ = load_scenario("example3")
    ja = solve(m, P1A, grid(4)).value
    jc = solve(m, P1C, grid(4)).value
    return ja == 0 and jc == F(3, 4), f"J*_P1a={ja} (want 0), J*_P1c={jc} (want 3/4)"


def c4():
    m, info, pair = load_scenario("p1d_independence")
    r = check_conditional_independence(m, pair, info, 2)
    ctrl = check_conditional_independence(m, pair, P1C, 2)
    ok = (r.joint, r.product, r.max_deviation) == (F(1, 10), F(1, 4), F(3, 20)) and ctrl.holds \
        and ctrl.max_deviation == 0
    return ok, f"joint {r.joint}, product {r.product}, deviation {r.max_deviation}; p1c deviation {ctrl.max_deviation}"


def c5():
    m, _, _ = load_scenario("specialized_cost")
    identity = tuple(range(m.n_local))
    cert = specialized_cost_certificate(m, identity)
    values = [solve(m, P1B, grid(2)).value, solve(m, P1C, grid(4)).value,
              certified_solution(m, P1B, identity).value, certified_solution(m, P1C, identity).value]
    return cert.certified and all(v == 0 for v in values), f"certified={cert.certified}, values {', '.join(str(v) for v in values)}"


def final_stage_round_trip(m, rng):
    T = m.horizon
    pi_c = Dist(range(m.n_local), m.alpha)
    hist = P1B.private_space(m, T)
    weights = []
    for h in hist:
        w = m.one
        for x in h:
            w *= m.alpha[x]
        weights.append(w)
    pi_b = Dist(hist, weights, check=False)
    node_c = BeliefNode(T, FactoredBelief(0, pi_c, pi_c))
    node_b = BeliefNode(T, FactoredBelief(0, pi_b, pi_b))
    gamma_c = Prescription(range(m.n_local), [random_row(rng, m.n_actions, 4, 0.2, True) for _ in range(m.n_local)])
    gamma_b = Prescription(hist, [random_row(rng, m.n_actions, 4, 0.2, True) for _ in hist])
    return (q_value(m, P1B, node_b, lift_c_to_b(gamma_c, T)) == q_value(m, P1C, node_c, gamma_c)
            and q_value(m, P1C, node_c, project_b_to_c(gamma_b, m.alpha, T)) == q_value(m, P1B, node_b, gamma_b))


def c6():
    import random
    rng = random.Random(6)
    unequal, trips = [], 0
    for seed in range(50):
        m = random_model(1000 + seed, horizon=2, kind="iid")
        jb, jc = solve(m, P1B, grid(2)).value, solve(m, P1C, grid(2)).value
        if jb != jc:
            unequal.append((1000 + seed, jb, jc))
        trips += final_stage_round_trip(m, rng)
    detail = f"{50 - len(unequal)}/50 models with J*_P1b = J*_P1c, {trips}/50 round trips exact"
    if unequal:
        seed, jb, jc = unequal[0]
        detail += f"; first gap at seed {seed}: P1b {jb} < P1c {jc}"
    return not unequal and trips == 50, detail


def eta_hat_holds(m, info, report):
    for node, gamma in report.on_policy(m):
        if node.t == m.horizon:
            continue
        b = node.belief
        for u1 in range(m.n_actions):
            for u2 in range(m.n_actions):
                for y0 in range(m.n_shared):
                    z = (y0, u1, u2)
                    if info is P1C:
                        try:
                            nxt = update_p1c(m, node.t, b, gamma, z)
                        except EvidenceImpossible:
                            continue
                        pis = (nxt.pi1, nxt.pi2)
                        cases = [(nxt.pi1, nxt.pi2)]
                    else:
                        cases = []
                        for x1 in range(m.n_local):
                            for x2 in range(m.n_local):
                                nxt = update_p1a(m, node.t, b.x0, (y0, u1, u2, x1, x2))
                                cases.append((nxt.pi1, nxt.pi2))
                    for pis in cases:
                        for agent, pi in enumerate(pis, start=1):
                            if pi != update_specialized_dynamics(m, node.t, b.x0, (u1, u2), agent):
                                return False
    return True


def c7():
    equal = beliefs = 0
    for seed in range(50):
        m = random_model(2000 + seed, horizon=2, n_shared=2, kind="ignores_own")
        ra, rc = solve(m, P1A, grid(2)), solve(m, P1C, grid(2))
        equal += ra.value == rc.value
        beliefs += eta_hat_holds(m, P1A, ra) and eta_hat_holds(m, P1C, rc)
    return equal == 50 and beliefs == 50, f"{equal}/50 equal values, {beliefs}/50 belief sequences equal the law"


def c8():
    infos = [P1A, P1B, P1C, P1D]
    bad = []
    for i in range(200):
        info = infos[i % 4]
        m = random_model(3000 + i, horizon=1 + (i // 4) % 3, n_shared=1 + i % 2,
                         aggregate="sum" if info is P1D else None)
        if belief_mismatches(m, info, RandomCoordinator(m, info, i)):
            bad.append(i)
    return not bad, f"{200 - len(bad)}/200 models match the trajectory oracle"


def c9():
    failures = 0
    for i in range(100):
        info = P1B if i % 2 else P1C
        m = random_model(4000 + i, horizon=2, n_shared=1 + i % 3 // 2)
        pair = random_pair(m, i)
        for t in range(1, m.horizon + 1):
            r = check_conditional_independence(m, pair, info, t)
            if not (r.holds and r.max_deviation == 0):
                failures += 1
                break
    return failures == 0, f"{100 - failures}/100 models with deviation exactly 0"


def c10():
    preserved = 0
    for i in range(100):
        m = random_model(5000 + i, horizon=2, n_shared=1 + i % 2)
        r = reduce_to_current_state(m, random_pair(m, i), P1B)
        preserved += r.cost_before == r.cost_after
    return preserved == 100, f"{preserved}/100 reductions preserve cost exactly"


def c11():
    within = 0
    for i in range(200):
        if i < 100:
            m, pair = example1(), RandomCoordinator(example1(), P1C, i).strategy()
        else:
            m = random_model(6000 + i, horizon=2, n_shared=2)
            pair = random_pair(m, i)
        exact = float(evaluate_exact(m, pair, P1C))
        est, se = evaluate_mc(m, pair, P1C, seed=i, n=100_000)
        within += abs(est - exact) <= 4 * se + 1e-12
    return within >= 198, f"{within}/200 runs within 4 stderr"


CRITERIA = [
    (1, "Example 1 values", 1, c1),
    (2, "Example 2 reduction", 1, c2),
    (3, "Example 3 information gap", 10, c3),
    (4, "aggregate-action dependence", 1, c4),
    (5, "specialized cost", 5, c5),
    (6, "histories vs current states", 300, c6),
    (7, "state-blind dynamics", 300, c7),
    (8, "belief oracle", 300, c8),
    (9, "conditional independence", 300, c9),
    (10, "reduction preserves cost", 300, c10),
    (11, "Monte Carlo consistency", 120, c11),
]


PARAMS = [pytest.param(*spec, id=f"criterion_{spec[0]:02d}", marks=[pytest.mark.slow] if spec[2] >= 60 else [])
          for spec in CRITERIA]


@pytest.mark.parametrize("number,title,limit,body", PARAMS)
def test_criterion(number, title, limit, body, capsys):
    with capsys.disabled():
        ok, line = check(number, title, limit, body)
    assert ok, line


if __name__ == "__main__":
    results = [check(*spec)[0] for spec in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria passed")
    sys.exit(0 if all(results) else 1)
