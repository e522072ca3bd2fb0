"""Finite distributions, kernels and Bayes updates over exact or float scalars.

A scalar is either a :class:`fractions.Fraction` (rational mode) or a ``float``.
The two never mix inside one model: the loader picks the mode once.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Any, Callable, Hashable, Iterable, Mapping, Sequence, Union

from .errors import EvidenceImpossible, NegativeWeight, NotNormalized

Scalar = Union[Fraction, float]

FLOAT_TOL = 1e-12


def is_exact(value) -> bool:
    return isinstance(value, (Fraction, int)) and not isinstance(value, bool)


def parse_scalar(text: Any, rational: bool) -> Scalar:
    """Parse ``"1/4"``, ``"0.25"``, ``0.25`` or ``1`` into the requested mode.

    Floats coming out of a YAML parser are converted through their shortest
    ``repr`` so that ``0.8`` becomes exactly ``4/5`` in rational mode.
    """
    if isinstance(text, bool):
        raise ValueError(f"not a number: {text!r}")
    if isinstance(text, Fraction):
        return text if rational else float(text)
    if isinstance(text, int):
        return Fraction(text) if rational else float(text)
    if isinstance(text, float):
        return Fraction(repr(text)) if rational else text
    s = str(text).strip()
    try:
        value = Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a number: {text!r}") from exc
    if rational:
        return value
    if "/" in s:
        return float(value)
    return float(s)


def has_fraction_syntax(text: Any) -> bool:
    return isinstance(text, str) and "/" in text


def to_float(value: Scalar) -> float:
    return float(value)


def format_scalar(value: Scalar) -> str:
    """Render a scalar as ``"1/2 (0.5)"`` in rational mode, plain decimal otherwise."""
    if is_exact(value):
        frac = Fraction(value)
        exact = str(frac.numerator) if frac.denominator == 1 else f"{frac.numerator}/{frac.denominator}"
        return f"{exact} ({float(frac):.12g})"
    return f"{float(value):.12g}"


def scalar_str(value: Scalar) -> str:
    if is_exact(value):
        frac = Fraction(value)
        return str(frac.numerator) if frac.denominator == 1 else f"{frac.numerator}/{frac.denominator}"
    return repr(float(value))


def _total(weights: Sequence[Scalar]) -> Scalar:
    total = sum(weights[1:], weights[0]) if weights else 0
    return total


def _is_one(total: Scalar) -> bool:
    if is_exact(total):
        return total == 1
    return abs(total - 1.0) <= FLOAT_TOL


class Dist:
    """Probability distribution over an ordered, finite label set.

    The label order is part of the contract: sampling walks the cumulative
    weights in this order. Weights are never renormalized on construction.
    """

    __slots__ = ("labels", "weights", "_index")

    def __init__(self, labels: Iterable[Hashable], weights: Iterable[Scalar], *, check: bool = True):
        labels = tuple(labels)
        weights = tuple(weights)
        if check:
            if len(labels) != len(weights):
                raise ValueError(f"{len(labels)} labels but {len(weights)} weights")
            if len(set(labels)) != len(labels):
                raise ValueError("duplicate labels")
            for w in weights:
                if w < 0:
                    raise NegativeWeight(f"negative weight {w!r}")
            if not labels:
                raise NotNormalized("empty distribution")
            total = _total(weights)
            if not _is_one(total):
                raise NotNormalized(f"weights sum to {total!r}, not 1")
        self.labels = labels
        self.weights = weights
        self._index = None

    @classmethod
    def point(cls, labels: Sequence[Hashable], at: Hashable, one: Scalar = Fraction(1)) -> "Dist":
        zero = one - one
        return cls(labels, [one if lab == at else zero for lab in labels], check=False)

    def index(self, label: Hashable) -> int:
        if self._index is None:
            self._index = {lab: i for i, lab in enumerate(self.labels)}
        return self._index[label]

    def __getitem__(self, label: Hashable) -> Scalar:
        return self.weights[self.index(label)]

    def get(self, label: Hashable, default: Scalar = 0) -> Scalar:
        try:
            return self[label]
        except KeyError:
            return default

    def items(self):
        return zip(self.labels, self.weights)

    @property
    def support(self) -> tuple:
        return tuple(lab for lab, w in self.items() if w > 0)

    @property
    def exact(self) -> bool:
        return all(is_exact(w) for w in self.weights)

    def __len__(self) -> int:
        return len(self.labels)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dist):
            return NotImplemented
        return self.labels == other.labels and self.weights == other.weights

    def __hash__(self) -> int:
        return hash((self.labels, self.weights))

    def __repr__(self) -> str:
        body = ", ".join(f"{lab!r}: {scalar_str(w)}" for lab, w in self.items())
        return f"Dist({{{body}}})"

    def marginal(self, fn: Callable[[Hashable], Hashable], labels: Sequence[Hashable]) -> "Dist":
        """Push the distribution forward through ``fn`` onto ``labels``."""
        acc = {lab: None for lab in labels}
        for lab, w in self.items():
            key = fn(lab)
            acc[key] = w if acc[key] is None else acc[key] + w
        zero = self.weights[0] - self.weights[0]
        return Dist(labels, [zero if acc[lab] is None else acc[lab] for lab in labels], check=False)


def make_dist(labels: Sequence[Hashable], weights: Sequence[Scalar]) -> Dist:
    """Validated constructor; raises instead of normalizing."""
    return Dist(labels, weights)


def normalize(labels: Sequence[Hashable], weights: Sequence[Scalar]) -> Dist:
    total = _total(list(weights))
    if total == 0:
        raise EvidenceImpossible("normalizer is zero")
    return Dist(labels, [w / total for w in weights], check=False)


def bayes_posterior(prior: Dist, likelihood: Union[Mapping, Sequence, Callable]) -> Dist:
    """posterior(x) = prior(x) * lik(x) / sum_x' prior(x') * lik(x')."""
    if callable(likelihood):
        lik = [likelihood(lab) for lab in prior.labels]
    elif isinstance(likelihood, Mapping):
        lik = [likelihood[lab] for lab in prior.labels]
    else:
        lik = list(likelihood)
        if len(lik) != len(prior):
            raise ValueError("likelihood length does not match prior support")
    for value in lik:
        if value < 0:
            raise NegativeWeight(f"negative likelihood {value!r}")
    unnorm = [p * lv for p, lv in zip(prior.weights, lik)]
    total = _total(unnorm)
    if total == 0:
        raise EvidenceImpossible("evidence has zero probability under the prior")
    return Dist(prior.labels, [w / total for w in unnorm], check=False)


def sample(dist: Dist, u: float) -> Hashable:
    """Inverse-CDF draw: first label whose cumulative weight reaches ``u``.

    ``u`` must lie in (0, 1]. Labels with zero weight are never returned.
    """
    if not 0 < u <= 1:
        raise ValueError(f"uniform variate must lie in (0, 1], got {u!r}")
    cum = 0
    last = None
    for lab, w in dist.items():
        if w <= 0:
            continue
        cum += w
        last = lab
        if cum >= u:
            return lab
    # float round-off can leave the final cumulative weight a hair below u
    return last


class Kernel:
    """Total map from an input tuple to a :class:`Dist` over an output space."""

    def __init__(self, inputs: Sequence[Sequence[Hashable]], rows: Mapping[tuple, Dist]):
        self.inputs = tuple(tuple(space) for space in inputs)
        self.rows = dict(rows)
        from itertools import product

        for key in product(*self.inputs):
            if key not in self.rows:
                raise KeyError(f"kernel row missing for input {key!r}")

    def __call__(self, *args: Hashable) -> Dist:
        return self.rows[tuple(args)]
