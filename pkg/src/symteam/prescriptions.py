"""Prescriptions (maps from private information to action distributions) and candidate sets."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import comb
from typing import Hashable, Iterator, Optional, Sequence, Tuple

from .errors import BudgetExceeded, NotNormalized
from .probability import Dist, _is_one, scalar_str

DEFAULT_CANDIDATE_BUDGET = 200_000


class Prescription:
    """One action distribution per element of a private-information domain.

    Hashable and totally ordered by ``(domain, rows)`` so candidate sets have a
    deterministic order.
    """

    __slots__ = ("domain", "rows", "_index", "_hash")

    def __init__(self, domain: Sequence[Hashable], rows: Sequence[Sequence], *, check: bool = True):
        self.domain = tuple(domain)
        self.rows = tuple(tuple(r) for r in rows)
        if check:
            if len(self.domain) != len(self.rows):
                raise ValueError("one row per domain element required")
            for r in self.rows:
                if any(w < 0 for w in r) or not _is_one(sum(r[1:], r[0])):
                    raise NotNormalized(f"prescription row {r!r} is not a distribution")
        self._index = None
        self._hash = None

    def _lookup(self, p: Hashable) -> int:
        if self._index is None:
            self._index = {d: i for i, d in enumerate(self.domain)}
        return self._index[p]

    def row(self, p: Hashable) -> tuple:
        return self.rows[self._lookup(p)]

    def prob(self, p: Hashable, u: int):
        return self.rows[self._lookup(p)][u]

    def dist(self, p: Hashable) -> Dist:
        r = self.row(p)
        return Dist(range(len(r)), r, check=False)

    @property
    def deterministic(self) -> bool:
        return all(sum(1 for w in r if w != 0) == 1 for r in self.rows)

    def _key(self):
        return self.domain, self.rows

    def __eq__(self, other):
        return isinstance(other, Prescription) and self._key() == other._key()

    def __lt__(self, other):
        return self._key() < other._key()

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._key())
        return self._hash

    def __repr__(self):
        body = ", ".join(f"{d!r}: ({', '.join(scalar_str(w) for w in r)})" for d, r in zip(self.domain, self.rows))
        return f"Prescription({{{body}}})"

    def to_csv(self, private_labels=None, action_labels=None) -> str:
        """CSV with one row per private-information element and one column per action.

        ``private_labels`` is either a callable on domain elements or a sequence
        aligned with the domain.
        """
        n = len(self.rows[0]) if self.rows else 0
        actions = list(action_labels) if action_labels is not None else list(range(n))
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["private"] + [str(a) for a in actions])
        if private_labels is None:
            labels = list(self.domain)
        elif callable(private_labels):
            labels = [private_labels(d) for d in self.domain]
        else:
            labels = list(private_labels)
        for label, r in zip(labels, self.rows):
            writer.writerow([label] + [scalar_str(w) for w in r])
        return buf.getvalue()


@dataclass(frozen=True)
class PrescriptionGridSpec:
    """Candidate set for the per-node minimization.

    Rows are multiples of ``1/K``; ``refinement`` is ``None`` or
    ``(steps, shrink)`` for coordinate descent around the best grid point.
    """

    K: int = 20
    include_deterministic: bool = True
    refinement: Optional[Tuple[int, Fraction]] = None
    deterministic_only: bool = False
    budget: int = DEFAULT_CANDIDATE_BUDGET

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("grid resolution K must be at least 1")
        if self.refinement is not None:
            steps, shrink = self.refinement
            if steps < 0 or not 0 < shrink < 1:
                raise ValueError("refinement needs steps >= 0 and 0 < shrink < 1")


def _one(rational: bool):
    return Fraction(1) if rational else 1.0


def unit_rows(n_actions: int, rational: bool = True) -> list:
    one = _one(rational)
    zero = one - one
    return [tuple(one if j == i else zero for j in range(n_actions)) for i in range(n_actions)]


def compositions(K: int, parts: int) -> Iterator[tuple]:
    """All tuples of ``parts`` non-negative integers summing to ``K``, largest first entry first."""
    if parts == 1:
        yield (K,)
        return
    for head in range(K, -1, -1):
        for tail in compositions(K - head, parts - 1):
            yield (head,) + tail


def grid_rows(n_actions: int, spec: PrescriptionGridSpec, rational: bool = True) -> list:
    """Candidate action distributions for one domain element, in descending weight-vector order."""
    if spec.deterministic_only:
        rows = set(unit_rows(n_actions, rational))
    else:
        K = spec.K
        rows = {tuple(Fraction(c, K) if rational else c / K for c in comp) for comp in compositions(K, n_actions)}
        if spec.include_deterministic:
            rows |= set(unit_rows(n_actions, rational))
    return sorted(rows, reverse=True)


def _check_budget(count: int, budget: int, what: str) -> None:
    if count > budget:
        raise BudgetExceeded(f"{what}: {count} candidates exceed budget {budget}")


def deterministic_prescriptions(domain: Sequence[Hashable], n_actions: int, rational: bool = True,
                                budget: int = DEFAULT_CANDIDATE_BUDGET) -> Iterator[Prescription]:
    """All point-mass tables, lexicographic in the chosen action indices."""
    domain = tuple(domain)
    _check_budget(n_actions ** len(domain), budget, "deterministic prescriptions")
    units = unit_rows(n_actions, rational)
    for choice in product(range(n_actions), repeat=len(domain)):
        yield Prescription(domain, [units[u] for u in choice], check=False)


def prescription_grid(domain: Sequence[Hashable], n_actions: int, spec: PrescriptionGridSpec,
                      rational: bool = True) -> Iterator[Prescription]:
    """Product over the domain of grid rows (plus point masses when requested)."""
    domain = tuple(domain)
    rows = grid_rows(n_actions, spec, rational)
    _check_budget(len(rows) ** len(domain), spec.budget, "prescription grid")
    for choice in product(rows, repeat=len(domain)):
        yield Prescription(domain, choice, check=False)


def grid_size(n_actions: int, K: int, domain_size: int) -> int:
    return comb(K + n_actions - 1, n_actions - 1) ** domain_size


def project_b_to_c(gamma_b: Prescription, alpha: Sequence, t: int, n_local: Optional[int] = None) -> Prescription:
    """Average a history prescription over iid past states to get a current-state one.

    ``gamma_c(x; u) = sum over x_{1:t-1} of gamma_b((x_{1:t-1}, x); u) * prod alpha(x_s)``.
    States with zero prior mass get a uniform row.
    """
    alpha = tuple(alpha)
    n_local = n_local or len(alpha)
    n_actions = len(gamma_b.rows[0])
    one = alpha[0] - alpha[0] + 1
    rows = []
    for x in range(n_local):
        if alpha[x] == 0:
            rows.append(tuple(one / n_actions for _ in range(n_actions)))
            continue
        acc = [one - one] * n_actions
        for past in product(range(n_local), repeat=t - 1):
            weight = one
            for s in past:
                weight *= alpha[s]
            if weight == 0:
                continue
            r = gamma_b.row(past + (x,))
            for u in range(n_actions):
                acc[u] += weight * r[u]
        rows.append(tuple(acc))
    return Prescription(range(n_local), rows, check=False)


def lift_c_to_b(gamma_c: Prescription, t: int) -> Prescription:
    """History-blind lift: ``gamma_b(x_{1:t}) = gamma_c(x_t)``."""
    histories = tuple(product(gamma_c.domain, repeat=t))
    return Prescription(histories, [gamma_c.row(h[-1]) for h in histories], check=False)
