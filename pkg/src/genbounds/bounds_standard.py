"""Generalization-error bounds in the standard setting: average,
PAC-Bayesian, and single-draw flavors, all in closed discriminant form.

Every bound evaluates to sqrt(2 sigma^2 / n * (information term)); the
variants differ only in the information term and the probability flavor.
Infeasibility (a negative radicand, or a tail level delta that cannot be
met) is a first-class result carried on the flag, never an exception.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .measures import (
    T_INF,
    DensityTable,
    central_moment,
    information_density,
    max_information,
    maximal_leakage,
    mutual_information,
    normalize_order,
    posterior_kls_standard,
    system_renyi,
)
from .models import StandardSystem
from .prob import FiniteDistribution

GAMMA_STEP = 1e-9  # offset placing tail candidates just above each attained value


@dataclass(frozen=True)
class BoundResult:
    """A single evaluated bound: epsilon, flavor, scope, parameters."""

    epsilon: float
    flavor: str  # average | pac-bayes | single-draw
    scope: str  # data-dependent | data-independent
    params: Mapping[str, Any] = field(default_factory=dict)
    feasible: bool = True
    reason: str = ""

    def __post_init__(self):
        if self.feasible and not math.isfinite(self.epsilon):
            raise ValueError("feasible bound must have finite epsilon")


def _check_delta(delta: float) -> float:
    delta = float(delta)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    return delta


def _rate(sys: StandardSystem) -> float:
    """The common prefactor 2 sigma^2 / n."""
    return 2.0 * sys.sigma ** 2 / sys.n


def _sqrt_bound(sys: StandardSystem, info_term: float, flavor: str, scope: str,
                params: Mapping[str, Any]) -> BoundResult:
    radicand = _rate(sys) * info_term
    if radicand < 0.0:
        return BoundResult(math.inf, flavor, scope, params, feasible=False,
                           reason="negative radicand")
    return BoundResult(math.sqrt(radicand), flavor, scope, params)


def avg_mi_bound(sys: StandardSystem,
                 q_w: FiniteDistribution | None = None) -> BoundResult:
    """|E[gen]| <= sqrt(2 sigma^2/n * I(W;Z))."""
    info = mutual_information(sys, q_w)
    return _sqrt_bound(sys, info, "average", "data-independent",
                       {"sigma": sys.sigma, "n": sys.n})


def pacb_bound(sys: StandardSystem, zvec: tuple, delta: float,
               q_w: FiniteDistribution | None = None) -> BoundResult:
    """Data-dependent PAC-Bayesian bound at one training set."""
    delta = _check_delta(delta)
    zi = sys.zvecs.index(zvec)
    kl_term = float(posterior_kls_standard(sys, q_w)[zi])
    return _sqrt_bound(sys, kl_term + math.log(1.0 / delta),
                       "pac-bayes", "data-dependent",
                       {"delta": delta, "sigma": sys.sigma, "n": sys.n})


def pacb_moment_bound(sys: StandardSystem, delta: float, t: Any,
                      q_w: FiniteDistribution | None = None) -> BoundResult:
    """Data-independent PAC-Bayesian bound from moments of the posterior KL."""
    delta = _check_delta(delta)
    t = normalize_order(t)
    kls = posterior_kls_standard(sys, q_w)
    mass = sys.pzn_mass
    if t is T_INF:
        moment_term = float(kls[mass > 0].max())
    else:
        moment_term = float(np.sum(mass * kls ** t)) ** (1.0 / t) / (delta / 2.0) ** (1.0 / t)
    return _sqrt_bound(sys, moment_term + math.log(2.0 / delta),
                       "pac-bayes", "data-independent",
                       {"delta": delta, "t": t, "sigma": sys.sigma, "n": sys.n})


def sd_density_bound(sys: StandardSystem, w: Any, zvec: tuple, delta: float,
                     q_w: FiniteDistribution | None = None) -> BoundResult:
    """Single-draw bound at one (hypothesis, training set) atom."""
    delta = _check_delta(delta)
    tbl = information_density(sys, q_w)
    try:
        pos = tbl.outcomes.index((w, zvec))
    except ValueError:
        raise KeyError(f"atom ({w!r}, {zvec!r}) not in the joint support")
    iota = float(tbl.iota[pos])
    return _sqrt_bound(sys, iota + math.log(1.0 / delta),
                       "single-draw", "data-dependent",
                       {"delta": delta, "sigma": sys.sigma, "n": sys.n})


def sd_moment_bound(sys: StandardSystem, delta: float, t: Any,
                    q_w: FiniteDistribution | None = None) -> BoundResult:
    """Single-draw bound from central moments of the information density."""
    delta = _check_delta(delta)
    t = normalize_order(t)
    tbl = information_density(sys, q_w)
    if t is T_INF:
        moment_term = central_moment(tbl, T_INF)
    else:
        moment_term = central_moment(tbl, t) / (delta / 2.0) ** (1.0 / t)
    info = tbl.mean + moment_term + math.log(2.0 / delta)
    return _sqrt_bound(sys, info, "single-draw", "data-independent",
                       {"delta": delta, "t": t, "sigma": sys.sigma, "n": sys.n})


def sd_leakage_bound(sys: StandardSystem, delta: float) -> BoundResult:
    """Single-draw bound from the maximal leakage."""
    delta = _check_delta(delta)
    info = maximal_leakage(sys) + 2.0 * math.log(2.0 / delta)
    return _sqrt_bound(sys, info, "single-draw", "data-independent",
                       {"delta": delta, "sigma": sys.sigma, "n": sys.n})


def sd_renyi_bound(sys: StandardSystem, delta: float, alpha: float,
                   q_w: FiniteDistribution | None = None) -> BoundResult:
    """Single-draw bound from the conjugate pair of Renyi divergences."""
    delta = _check_delta(delta)
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    gamma = alpha / (alpha - 1.0)
    info = ((alpha - 1.0) / alpha * system_renyi(sys, alpha, q_w)
            + (gamma - 1.0) / gamma * system_renyi(sys, gamma, q_w)
            + 2.0 * math.log(2.0 / delta))
    return _sqrt_bound(sys, info, "single-draw", "data-independent",
                       {"delta": delta, "alpha": alpha, "gamma": gamma,
                        "sigma": sys.sigma, "n": sys.n})


def _tail_bound_from_table(tbl: DensityTable, rate: float, delta: float,
                           gamma: Any, extra_params: Mapping[str, Any]) -> BoundResult:
    """Shared tail-bound core: epsilon^2 = rate * (gamma + log(2/(delta - P[iota >= gamma]))).

    Auto mode scans the step edges of the exact tail function: each attained
    density value and a point just above it (where the tail drops to the
    strict-inequality mass).
    """
    def evaluate(g: float) -> BoundResult:
        tail = tbl.tail_probability(g)
        params = dict(extra_params, delta=delta, gamma=g, tail_prob=tail)
        if tail >= delta:
            return BoundResult(math.inf, "single-draw", "data-independent",
                               params, feasible=False,
                               reason="tail mass at or above delta")
        radicand = rate * (g + math.log(2.0 / (delta - tail)))
        if radicand < 0.0:
            return BoundResult(math.inf, "single-draw", "data-independent",
                               params, feasible=False, reason="negative radicand")
        return BoundResult(math.sqrt(radicand), "single-draw",
                           "data-independent", params)

    if gamma != "auto":
        return evaluate(float(gamma))
    best = None
    for v in tbl.distinct_values():
        for g in (float(v), float(v) + GAMMA_STEP):
            cand = evaluate(g)
            if cand.feasible and (best is None or cand.epsilon < best.epsilon):
                best = cand
    if best is None:
        return BoundResult(math.inf, "single-draw", "data-independent",
                           dict(extra_params, delta=delta, gamma="auto"),
                           feasible=False,
                           reason="no gamma meets the tail level delta")
    return best


def sd_tail_bound(sys: StandardSystem, delta: float, gamma: Any = "auto",
                  q_w: FiniteDistribution | None = None) -> BoundResult:
    """Single-draw bound from the exact tail of the information density."""
    delta = _check_delta(delta)
    tbl = information_density(sys, q_w)
    return _tail_bound_from_table(tbl, _rate(sys), delta, gamma,
                                  {"sigma": sys.sigma, "n": sys.n})


def tail_relaxations(sys: StandardSystem, delta: float, t: Any,
                     q_w: FiniteDistribution | None = None) -> tuple[BoundResult, BoundResult]:
    """Moment and leakage bounds rederived through the tail route.

    Each exceeds its direct counterpart by exactly (2 sigma^2/n) ln 2 inside
    the square.
    """
    delta = _check_delta(delta)
    t = normalize_order(t)
    tbl = information_density(sys, q_w)
    if t is T_INF:
        moment_term = central_moment(tbl, T_INF)
    else:
        moment_term = central_moment(tbl, t) / (delta / 2.0) ** (1.0 / t)
    eps_m = _sqrt_bound(sys, tbl.mean + moment_term + math.log(4.0 / delta),
                        "single-draw", "data-independent",
                        {"delta": delta, "t": t, "sigma": sys.sigma, "n": sys.n,
                         "route": "tail-moment"})
    eps_l = _sqrt_bound(sys,
                        maximal_leakage(sys) + math.log(2.0)
                        + 2.0 * math.log(2.0 / delta),
                        "single-draw", "data-independent",
                        {"delta": delta, "sigma": sys.sigma, "n": sys.n,
                         "route": "tail-leakage"})
    return eps_m, eps_l


def chain_report(sys: StandardSystem, delta: float) -> dict:
    """The leakage <= max-information <= I + M_inf chain, plus the regime
    test for when the leakage bound is the tighter single-draw choice."""
    delta = _check_delta(delta)
    tbl = information_density(sys)
    leakage = maximal_leakage(sys)
    i_max = max_information(sys)
    mi_plus_dev = tbl.mean + central_moment(tbl, T_INF)
    return {
        "maximal_leakage": leakage,
        "max_information": i_max,
        "mi_plus_max_deviation": mi_plus_dev,
        "leakage_preferable": leakage <= i_max + math.log(2.0 / delta),
    }
