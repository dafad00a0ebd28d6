"""Generalization-error bounds in the random-subset setting.

These mirror the standard-setting bounds with the conditional information
density in place of the unconditional one and the range constant
C = (b - a)^2 (or an expected squared dominating difference, for unbounded
losses) in place of sigma^2. Most results bound the test-minus-train gap;
``genhat_to_gen`` converts such a bound into one on the ordinary
generalization error at the price of a delta-dependent penalty.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Mapping

import numpy as np
from scipy.special import logsumexp

from .bounds_standard import BoundResult, _check_delta, _tail_bound_from_table
from .measures import (
    T_INF,
    central_moment,
    cond_alpha_mi,
    cond_maximal_leakage,
    cond_mutual_information,
    cond_renyi_divergence,
    conditional_density,
    maximal_leakage,
    normalize_order,
    posterior_kls_subset,
    _subset_log_arrays,
)
from .models import LossTable, SubsetSystem
from .prob import NEG_INF, FiniteDistribution


@dataclass(frozen=True)
class RangeConstant:
    """The squared-range constant of the concentration step."""

    value: float
    mode: str  # bounded-range | delta-expectation

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("range constant must be nonnegative")


def range_constant(loss: LossTable) -> RangeConstant:
    """(b - a)^2 for a loss bounded on [a, b]."""
    return RangeConstant((loss.b - loss.a) ** 2, "bounded-range")


def delta_constant(delta_fn: Callable[[Any, Any], float], pz: FiniteDistribution,
                   loss: LossTable | None = None) -> RangeConstant:
    """E[Delta(Z1, Z2)^2] for a dominating difference function Delta.

    Delta must satisfy Delta(z1, z2) >= |l(w, z1) - l(w, z2)| for every
    hypothesis; when a loss table is supplied this is verified exhaustively.
    """
    if loss is not None:
        for z1 in pz.outcomes:
            for z2 in pz.outcomes:
                gap = max(abs(loss.loss(w, z1) - loss.loss(w, z2))
                          for w in loss.hypotheses)
                if delta_fn(z1, z2) < gap - 1e-12:
                    raise ValueError(
                        f"Delta({z1!r}, {z2!r}) does not dominate the loss differences")
    value = sum(pz.mass_of(z1) * pz.mass_of(z2) * delta_fn(z1, z2) ** 2
                for z1 in pz.outcomes for z2 in pz.outcomes)
    return RangeConstant(float(value), "delta-expectation")


def _const(sys: SubsetSystem, c: RangeConstant | None) -> float:
    return (c or range_constant(sys.loss)).value


def _rate(sys: SubsetSystem, c: RangeConstant | None) -> float:
    return 2.0 * _const(sys, c) / sys.n


def _sqrt_bound(sys: SubsetSystem, c: RangeConstant | None, info_term: float,
                flavor: str, scope: str, params: Mapping[str, Any]) -> BoundResult:
    radicand = _rate(sys, c) * info_term
    if radicand < 0.0:
        return BoundResult(math.inf, flavor, scope, params, feasible=False,
                           reason="negative radicand")
    return BoundResult(math.sqrt(radicand), flavor, scope, params)


def _base_params(sys: SubsetSystem, c: RangeConstant | None, **extra) -> dict:
    return {"C": _const(sys, c), "n": sys.n, **extra}


def cmi_avg_bound(sys: SubsetSystem, c: RangeConstant | None = None) -> BoundResult:
    """|E[gen(W, Z(S))]| <= sqrt(2 C/n * I(W; S | Z-tilde))."""
    return _sqrt_bound(sys, c, cond_mutual_information(sys),
                       "average", "data-independent", _base_params(sys, c))


def cond_pacb_bound(sys: SubsetSystem, ztilde: tuple, s: tuple, delta: float,
                    c: RangeConstant | None = None, q_kernel=None) -> BoundResult:
    """Conditional PAC-Bayesian bound at one (supersample, selector) atom."""
    delta = _check_delta(delta)
    zi = sys.ztildes.index(ztilde)
    si = sys.s_vecs.index(s)
    kl_term = float(posterior_kls_subset(sys, q_kernel)[zi, si])
    return _sqrt_bound(sys, c, kl_term + math.log(1.0 / delta),
                       "pac-bayes", "data-dependent",
                       _base_params(sys, c, delta=delta))


def cond_pacb_moment_bound(sys: SubsetSystem, delta: float, t: Any,
                           c: RangeConstant | None = None,
                           q_kernel=None) -> BoundResult:
    """Data-independent conditional PAC-Bayesian bound from KL moments."""
    delta = _check_delta(delta)
    t = normalize_order(t)
    kls = posterior_kls_subset(sys, q_kernel)
    mass = sys.p_ztilde[:, None] * sys.p_s[None, :]
    if t is T_INF:
        moment_term = float(kls[mass > 0].max())
    else:
        moment_term = float(np.sum(mass * kls ** t)) ** (1.0 / t) / (delta / 2.0) ** (1.0 / t)
    return _sqrt_bound(sys, c, moment_term + math.log(2.0 / delta),
                       "pac-bayes", "data-independent",
                       _base_params(sys, c, delta=delta, t=t))


def cond_sd_density_bound(sys: SubsetSystem, w: Any, ztilde: tuple, s: tuple,
                          delta: float, c: RangeConstant | None = None,
                          q_kernel=None) -> BoundResult:
    """Conditional single-draw bound at one (w, z-tilde, s) atom."""
    delta = _check_delta(delta)
    _, iota = _subset_log_arrays(sys, q_kernel)
    zi = sys.ztildes.index(ztilde)
    si = sys.s_vecs.index(s)
    wi = sys.w_labels.index(w)
    value = float(iota[zi, si, wi])
    if value == NEG_INF:
        raise KeyError(f"atom ({w!r}, {ztilde!r}, {s!r}) not in the joint support")
    return _sqrt_bound(sys, c, value + math.log(1.0 / delta),
                       "single-draw", "data-dependent",
                       _base_params(sys, c, delta=delta))


def cond_sd_moment_bound(sys: SubsetSystem, delta: float, t: Any,
                         c: RangeConstant | None = None,
                         q_kernel=None) -> BoundResult:
    """Conditional single-draw bound from central moments of the density."""
    delta = _check_delta(delta)
    t = normalize_order(t)
    tbl = conditional_density(sys, q_kernel)
    if t is T_INF:
        moment_term = central_moment(tbl, T_INF)
    else:
        moment_term = central_moment(tbl, t) / (delta / 2.0) ** (1.0 / t)
    return _sqrt_bound(sys, c, tbl.mean + moment_term + math.log(2.0 / delta),
                       "single-draw", "data-independent",
                       _base_params(sys, c, delta=delta, t=t))


def cond_sd_leakage_bound(sys: SubsetSystem, delta: float,
                          c: RangeConstant | None = None) -> BoundResult:
    """Conditional single-draw bound from the conditional maximal leakage."""
    delta = _check_delta(delta)
    info = cond_maximal_leakage(sys) + 2.0 * math.log(2.0 / delta)
    return _sqrt_bound(sys, c, info, "single-draw", "data-independent",
                       _base_params(sys, c, delta=delta))


def cond_sd_renyi_pair_bound(sys: SubsetSystem, delta: float, alpha: float,
                             c: RangeConstant | None = None,
                             q_kernel=None) -> BoundResult:
    """Conditional single-draw bound from the conjugate Renyi pair."""
    delta = _check_delta(delta)
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    gamma = alpha / (alpha - 1.0)
    info = ((alpha - 1.0) / alpha * cond_renyi_divergence(sys, alpha, q_kernel)
            + (gamma - 1.0) / gamma * cond_renyi_divergence(sys, gamma, q_kernel)
            + 2.0 * math.log(2.0 / delta))
    return _sqrt_bound(sys, c, info, "single-draw", "data-independent",
                       _base_params(sys, c, delta=delta, alpha=alpha, gamma=gamma))


def cond_tail_bound(sys: SubsetSystem, delta: float, gamma: Any = "auto",
                    c: RangeConstant | None = None, q_kernel=None) -> BoundResult:
    """Conditional single-draw bound from the exact density tail."""
    delta = _check_delta(delta)
    tbl = conditional_density(sys, q_kernel)
    return _tail_bound_from_table(tbl, _rate(sys, c), delta, gamma,
                                  _base_params(sys, c))


def cond_tail_relaxations(sys: SubsetSystem, delta: float, t: Any,
                          c: RangeConstant | None = None,
                          q_kernel=None) -> tuple[BoundResult, BoundResult]:
    """Moment and leakage bounds rederived through the conditional tail;
    each exceeds its direct counterpart by exactly (2 C/n) ln 2 inside the
    square."""
    delta = _check_delta(delta)
    t = normalize_order(t)
    tbl = conditional_density(sys, q_kernel)
    if t is T_INF:
        moment_term = central_moment(tbl, T_INF)
    else:
        moment_term = central_moment(tbl, t) / (delta / 2.0) ** (1.0 / t)
    eps_m = _sqrt_bound(sys, c, tbl.mean + moment_term + math.log(4.0 / delta),
                        "single-draw", "data-independent",
                        _base_params(sys, c, delta=delta, t=t, route="tail-moment"))
    eps_l = _sqrt_bound(sys, c,
                        cond_maximal_leakage(sys) + math.log(2.0)
                        + 2.0 * math.log(2.0 / delta),
                        "single-draw", "data-independent",
                        _base_params(sys, c, delta=delta, route="tail-leakage"))
    return eps_m, eps_l


def holder_event_bound(sys: SubsetSystem, event: Callable[[Any, tuple, tuple], bool],
                       alpha: float, alpha_prime: float,
                       tilde_alpha: float) -> float:
    """Exact evaluation of the two-factor Holder bound on P[E].

    ``event`` is a predicate over (w, z-tilde, s) atoms. The three exponents
    must exceed 1; their conjugates are derived internally.
    """
    for name, val in (("alpha", alpha), ("alpha_prime", alpha_prime),
                      ("tilde_alpha", tilde_alpha)):
        if val <= 1:
            raise ValueError(f"{name} must exceed 1")
    gamma = alpha / (alpha - 1.0)
    gamma_prime = alpha_prime / (alpha_prime - 1.0)
    tilde_gamma = tilde_alpha / (tilde_alpha - 1.0)
    _, iota = _subset_log_arrays(sys)
    with np.errstate(divide="ignore"):
        log_pzt = np.log(sys.p_ztilde)
        log_ps = np.log(sys.p_s)
        log_wg = np.log(sys.pw_given)
    ind = np.array([[[event(w, zt, s) for w in sys.w_labels]
                     for s in sys.s_vecs]
                    for zt in sys.ztildes], dtype=bool)
    # event factor: E_Zt^{1/tg}[ E_{W|Zt}^{tg/g'}[ P_S^{g'/g}[E_{w,zt}] ] ]
    log_ind = np.where(ind, 0.0, NEG_INF)
    log_p_event = logsumexp(log_ps[None, :, None] + log_ind, axis=1)
    mid_e = logsumexp(log_wg + (gamma_prime / gamma) * log_p_event, axis=1)
    log_factor_event = logsumexp(log_pzt + (tilde_gamma / gamma_prime) * mid_e) / tilde_gamma
    # density factor: E_Zt^{1/ta}[ E_{W|Zt}^{ta/a'}[ E_S^{a'/a}[e^{a iota}] ] ]
    inner_d = logsumexp(log_ps[None, :, None] + alpha * iota, axis=1)
    mid_d = logsumexp(log_wg + (alpha_prime / alpha) * inner_d, axis=1)
    log_factor_dens = logsumexp(log_pzt + (tilde_alpha / alpha_prime) * mid_d) / tilde_alpha
    return float(math.exp(log_factor_event + log_factor_dens))


def cond_alpha_mi_bound(sys: SubsetSystem, delta: float, alpha: float,
                        c: RangeConstant | None = None) -> BoundResult:
    """Conditional single-draw bound from the conditional alpha-mutual
    information; alpha = inf uses the conditional maximal leakage limit."""
    delta = _check_delta(delta)
    if isinstance(alpha, float) and math.isinf(alpha):
        info = cond_maximal_leakage(sys) + math.log(2.0) + math.log(1.0 / delta)
        return _sqrt_bound(sys, c, info, "single-draw", "data-independent",
                           _base_params(sys, c, delta=delta, alpha=math.inf))
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    info = (cond_alpha_mi(sys, alpha) + math.log(2.0)
            + alpha / (alpha - 1.0) * math.log(1.0 / delta))
    return _sqrt_bound(sys, c, info, "single-draw", "data-independent",
                       _base_params(sys, c, delta=delta, alpha=alpha))


def genhat_to_gen(eps_fn: Callable[[float], float], loss: LossTable, n: int,
                  delta: float) -> BoundResult:
    """Convert a bound on the test-minus-train gap into one on the ordinary
    generalization error via the delta-dependent penalty term."""
    delta = _check_delta(delta)
    penalty = math.sqrt((loss.b - loss.a) ** 2 / (2.0 * n) * math.log(4.0 / delta))
    base = float(eps_fn(delta / 2.0))
    if not math.isfinite(base):
        return BoundResult(math.inf, "single-draw", "data-independent",
                           {"delta": delta, "n": n}, feasible=False,
                           reason="underlying gap bound infeasible")
    return BoundResult(base + penalty, "single-draw", "data-independent",
                       {"delta": delta, "n": n, "penalty": penalty})


def leakage_ordering_check(sys: SubsetSystem) -> dict:
    """Conditional leakage vs the leakage of the induced standard system."""
    cond_leak = cond_maximal_leakage(sys)
    std_leak = maximal_leakage(sys.induced_standard())
    return {
        "cond_maximal_leakage": cond_leak,
        "induced_maximal_leakage": std_leak,
        "holds": cond_leak <= std_leak + 1e-12,
    }
