"""Exact probability machinery on finite outcome spaces.

Distributions carry natural-log masses; every reduction over masses goes
through a max-shifted log-sum-exp so results are permutation invariant up
to ~1e-12. All objects are immutable after construction.
"""
from __future__ import annotations

import itertools
import json
import math
from decimal import Decimal
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

MASS_ATOL = 1e-12
LOADER_NORMALIZE_ATOL = 1e-9

# Systems with more joint atoms than this are refused (exact enumeration only).
ENUMERATION_BUDGET = 5_000_000

NEG_INF = float("-inf")


class InvalidDistributionError(ValueError):
    """Masses are negative, non-normalized, or structurally malformed."""


class AbsoluteContinuityViolation(ValueError):
    """Some atom of the numerator measure has zero mass under the base measure."""


class BudgetExceededError(RuntimeError):
    """The requested system exceeds the exact-enumeration atom budget."""


def _to_log_mass(probs: Sequence[Any]) -> np.ndarray:
    p = np.asarray([float(x) for x in probs], dtype=float)
    if np.any(p < 0.0):
        raise InvalidDistributionError("negative probability mass")
    with np.errstate(divide="ignore"):
        return np.log(p)


class FiniteDistribution:
    """A labeled finite probability distribution with log-space masses."""

    __slots__ = ("outcomes", "log_mass", "_index")

    def __init__(self, outcomes: Sequence[Any], log_mass: Sequence[float]):
        self.outcomes = tuple(outcomes)
        lm = np.asarray(log_mass, dtype=float)
        if lm.shape != (len(self.outcomes),):
            raise InvalidDistributionError("outcomes and log_mass length mismatch")
        if len(set(self.outcomes)) != len(self.outcomes):
            raise InvalidDistributionError("duplicate outcome labels")
        total = math.exp(logsumexp(lm)) if lm.size else 0.0
        if abs(total - 1.0) > MASS_ATOL:
            raise InvalidDistributionError(f"masses sum to {total!r}, not 1")
        lm.flags.writeable = False
        self.log_mass = lm
        self._index = {o: i for i, o in enumerate(self.outcomes)}

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_probs(cls, outcomes: Sequence[Any], probs: Sequence[Any]) -> "FiniteDistribution":
        return cls(outcomes, _to_log_mass(probs))

    @classmethod
    def uniform(cls, outcomes: Sequence[Any]) -> "FiniteDistribution":
        n = len(outcomes)
        return cls(outcomes, np.full(n, -math.log(n)))

    @classmethod
    def point_mass(cls, outcomes: Sequence[Any], at: Any) -> "FiniteDistribution":
        lm = np.full(len(outcomes), NEG_INF)
        lm[list(outcomes).index(at)] = 0.0
        return cls(outcomes, lm)

    @classmethod
    def bernoulli(cls, p: float) -> "FiniteDistribution":
        return cls.from_probs((0, 1), (1.0 - p, p))

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "FiniteDistribution":
        """Load from ``{"outcomes": [...], "probs": [...]}``.

        Probabilities may be floats or decimal strings. Sums deviating from 1
        by less than 1e-9 are renormalized; larger deviations are an error.
        """
        outcomes = [_canonical_label(o) for o in doc["outcomes"]]
        probs = [float(Decimal(x)) if isinstance(x, str) else float(x) for x in doc["probs"]]
        total = sum(probs)
        if abs(total - 1.0) >= LOADER_NORMALIZE_ATOL:
            raise InvalidDistributionError(f"probabilities sum to {total!r}")
        probs = [p / total for p in probs]
        return cls.from_probs(outcomes, probs)

    # -- accessors ----------------------------------------------------------

    @property
    def mass(self) -> np.ndarray:
        return np.exp(self.log_mass)

    def mass_of(self, label: Any) -> float:
        return float(math.exp(self.log_mass[self._index[label]]))

    def log_mass_of(self, label: Any) -> float:
        return float(self.log_mass[self._index[label]])

    def index_of(self, label: Any) -> int:
        return self._index[label]

    @property
    def support(self) -> tuple:
        return tuple(o for o, lm in zip(self.outcomes, self.log_mass) if lm > NEG_INF)

    def __len__(self) -> int:
        return len(self.outcomes)

    def __repr__(self) -> str:
        return f"FiniteDistribution({len(self)} outcomes)"

    def allclose(self, other: "FiniteDistribution", atol: float = MASS_ATOL) -> bool:
        if set(self.outcomes) != set(other.outcomes):
            return False
        return all(
            abs(self.mass_of(o) - other.mass_of(o)) <= atol for o in self.outcomes
        )


class JointTable(FiniteDistribution):
    """A FiniteDistribution whose outcomes are fixed-arity tuples."""

    __slots__ = ()

    def __init__(self, outcomes: Sequence[tuple], log_mass: Sequence[float]):
        outcomes = tuple(outcomes)
        if outcomes:
            arities = {len(o) for o in outcomes}
            if len(arities) != 1:
                raise InvalidDistributionError("mixed tuple arities in joint table")
        super().__init__(outcomes, log_mass)

    @property
    def arity(self) -> int:
        return len(self.outcomes[0]) if self.outcomes else 0


class Kernel:
    """A conditional distribution: input label -> FiniteDistribution.

    All rows must share the same output outcome labels.
    """

    __slots__ = ("rows", "output_outcomes")

    def __init__(self, rows: Mapping[Any, FiniteDistribution]):
        rows = dict(rows)
        if not rows:
            raise InvalidDistributionError("empty kernel")
        outputs = {d.outcomes for d in rows.values()}
        if len(outputs) != 1:
            raise InvalidDistributionError("kernel rows disagree on output labels")
        self.rows = rows
        self.output_outcomes = next(iter(outputs))

    def __getitem__(self, label: Any) -> FiniteDistribution:
        return self.rows[label]

    def __contains__(self, label: Any) -> bool:
        return label in self.rows

    @property
    def input_labels(self) -> tuple:
        return tuple(self.rows)

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "Kernel":
        """Load from ``{"rows": {label: {"outcomes": [...], "probs": [...]}}}``."""
        return cls({
            _canonical_label(k): FiniteDistribution.from_json(v)
            for k, v in doc["rows"].items()
        })


def _canonical_label(label: Any) -> Any:
    if isinstance(label, list):
        return tuple(_canonical_label(x) for x in label)
    return label


# -- operations -------------------------------------------------------------


def product(p: FiniteDistribution, q: FiniteDistribution) -> JointTable:
    """Independent product measure with pair-labeled outcomes."""
    outcomes = [(x, y) for x in p.outcomes for y in q.outcomes]
    lm = (p.log_mass[:, None] + q.log_mass[None, :]).ravel()
    return JointTable(outcomes, lm)


def iid_power(p: FiniteDistribution, n: int) -> FiniteDistribution:
    """Distribution of n iid draws, over length-n label tuples."""
    if n < 1:
        raise ValueError("iid_power requires n >= 1")
    outcomes = list(itertools.product(p.outcomes, repeat=n))
    lm = np.array([sum(p.log_mass_of(x) for x in vec) for vec in outcomes])
    return FiniteDistribution(outcomes, lm)


def marginalize(j: JointTable, keep: Sequence[int]) -> FiniteDistribution:
    """Sum out all coordinates not in ``keep`` (log-sum-exp aggregation).

    A single kept coordinate yields bare labels; several yield tuples.
    """
    keep = tuple(keep)
    if not keep:
        raise ValueError("empty keep-set")
    if any(k < 0 or k >= j.arity for k in keep):
        raise ValueError(f"coordinate out of range for arity {j.arity}")
    groups: dict[Any, list[float]] = {}
    for outcome, lm in zip(j.outcomes, j.log_mass):
        key = outcome[keep[0]] if len(keep) == 1 else tuple(outcome[k] for k in keep)
        groups.setdefault(key, []).append(lm)
    labels = list(groups)
    agg = np.array([logsumexp(np.asarray(groups[k])) for k in labels])
    return FiniteDistribution(labels, agg)


def ess_sup(values: Mapping[Any, float] | Sequence[float], dist: FiniteDistribution) -> float:
    """Essential supremum: max of ``values`` over positive-mass outcomes."""
    if isinstance(values, Mapping):
        vals = [values[o] for o in dist.outcomes]
    else:
        vals = list(values)
        if len(vals) != len(dist.outcomes):
            raise ValueError("values and outcomes length mismatch")
    support_vals = [v for v, lm in zip(vals, dist.log_mass) if lm > NEG_INF]
    if not support_vals:
        raise ValueError("distribution has empty support")
    return max(support_vals)


def check_budget(n_atoms: int) -> None:
    if n_atoms > ENUMERATION_BUDGET:
        raise BudgetExceededError(
            f"{n_atoms} joint atoms exceed the enumeration budget of {ENUMERATION_BUDGET}"
        )


def load_distribution(path_or_doc: Any) -> FiniteDistribution:
    if isinstance(path_or_doc, Mapping):
        return FiniteDistribution.from_json(path_or_doc)
    with open(path_or_doc) as fh:
        return FiniteDistribution.from_json(json.load(fh))
