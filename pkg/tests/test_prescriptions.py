from fractions import Fraction as F
from math import comb

import pytest
from hypothesis import given, strategies as st

from symteam.errors import BudgetExceeded
from symteam.model import InfoStructure
from symteam.prescriptions import (Prescription, PrescriptionGridSpec, compositions, deterministic_prescriptions,
                                   grid_rows, grid_size, lift_c_to_b, prescription_grid, project_b_to_c)


def test_row_validation():
    with pytest.raises(ValueError):
        Prescription([0, 1], [(F(1, 2), F(1, 3)), (1, 0)])
    gamma = Prescription([0, 1], [(F(1, 2), F(1, 2)), (1, 0)])
    assert gamma.prob(0, 1) == F(1, 2) and gamma.deterministic is False


def test_deterministic_count():
    assert len(list(deterministic_prescriptions([0, 1, 2], 2))) == 8
    assert len(list(deterministic_prescriptions([0, 1], 3))) == 9


def test_deterministic_budget():
    with pytest.raises(BudgetExceeded):
        list(deterministic_prescriptions(range(20), 2, budget=1000))


@given(st.integers(1, 6), st.integers(1, 4))
def test_compositions_count(K, parts):
    items = list(compositions(K, parts))
    assert len(items) == comb(K + parts - 1, parts - 1)
    assert all(sum(c) == K for c in items) and len(set(items)) == len(items)


@given(st.integers(1, 8), st.integers(2, 3))
def test_grid_rows_are_distributions(K, n):
    rows = grid_rows(n, PrescriptionGridSpec(K=K))
    assert len(rows) == comb(K + n - 1, n - 1)
    assert all(sum(r) == 1 and min(r) >= 0 for r in rows)
    assert rows == sorted(rows, reverse=True)


def test_grid_contains_units_and_coin():
    rows = grid_rows(2, PrescriptionGridSpec(K=2))
    assert rows == [(1, 0), (F(1, 2), F(1, 2)), (0, 1)]


def test_grid_size_matches_enumeration():
    spec = PrescriptionGridSpec(K=2)
    assert len(list(prescription_grid([0, 1], 2, spec))) == grid_size(2, 2, 2) == 9


def test_bad_spec():
    with pytest.raises(ValueError):
        PrescriptionGridSpec(K=0)


def test_csv():
    text = Prescription([0, 1], [(1, 0), (F(1, 4), F(3, 4))]).to_csv(["lo", "hi"], ["a", "b"])
    assert text.splitlines() == ["private,a,b", "lo,1,0", "hi,1/4,3/4"]


def test_project_example():
    # history rows (x1, x2): only (0, 0) plays action 1
    hist = [(0, 0), (0, 1), (1, 0), (1, 1)]
    gamma_b = Prescription(hist, [(0, 1), (1, 0), (1, 0), (1, 0)])
    gamma_c = project_b_to_c(gamma_b, [F(1, 4), F(3, 4)], 2)
    assert gamma_c.row(0) == (F(3, 4), F(1, 4))
    assert gamma_c.row(1) == (1, 0)


def test_project_uniform_on_null_state():
    gamma_b = Prescription([(0, 0), (0, 1), (1, 0), (1, 1)], [(0, 1)] * 4)
    assert project_b_to_c(gamma_b, [1, 0], 2).row(1) == (F(1, 2), F(1, 2))


@given(st.integers(1, 3), st.lists(st.integers(0, 4), min_size=2, max_size=2))
def test_lift_then_project_is_identity(t, weights):
    rows = [(F(w, 4), 1 - F(w, 4)) for w in weights]
    gamma = Prescription([0, 1], rows)
    lifted = lift_c_to_b(gamma, t)
    assert lifted.domain == InfoStructure.P1B.private_space(type("M", (), {"n_local": 2})(), t)
    assert project_b_to_c(lifted, [F(1, 3), F(2, 3)], t) == gamma
