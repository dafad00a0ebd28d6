"""Information quantities on finite systems: densities, divergences,
alpha-families, leakages, and central moments of the information density.

All quantities are in nats. Orders within 1e-6 of 1 dispatch to the
KL/mutual-information limit, where the closed forms are numerically 0/0.
Moment order t = infinity is a distinguished sentinel (``T_INF``), not a
float smuggled through arithmetic.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from .models import StandardSystem, SubsetSystem
from .prob import NEG_INF, AbsoluteContinuityViolation, FiniteDistribution

ALPHA_ONE_TOL = 1e-6


class MomentOrder(enum.Enum):
    INF = "inf"


T_INF = MomentOrder.INF


def normalize_order(t: Any) -> float | MomentOrder:
    """Accept a positive real, math.inf, or the string 'inf' for t."""
    if t is T_INF or t == "inf" or (isinstance(t, float) and math.isinf(t)):
        return T_INF
    t = float(t)
    if t <= 0:
        raise ValueError("moment order must be positive")
    return t


@dataclass(frozen=True)
class DensityTable:
    """Log-ratio values over the support of a reference joint.

    ``log_p`` are the natural-log masses of the reference measure at the
    support atoms; ``iota`` the log ratio against the base measure there.
    """

    outcomes: tuple
    log_p: np.ndarray
    iota: np.ndarray

    def __post_init__(self):
        for arr in (self.log_p, self.iota):
            arr.flags.writeable = False
        if self.log_p.shape != self.iota.shape:
            raise ValueError("log_p and iota shape mismatch")

    @property
    def mean(self) -> float:
        """E_P[iota] (the mutual/conditional mutual information when the
        base measure is the matching product)."""
        return float(np.sum(np.exp(self.log_p) * self.iota))

    def tail_probability(self, gamma: float) -> float:
        """P[iota >= gamma] under the reference measure."""
        mask = self.iota >= gamma
        if not np.any(mask):
            return 0.0
        return float(math.exp(logsumexp(self.log_p[mask])))

    def distinct_values(self) -> np.ndarray:
        return np.unique(self.iota)


# -- densities --------------------------------------------------------------


def density(p: FiniteDistribution, q: FiniteDistribution) -> DensityTable:
    """Pointwise log(P/Q) on the support of P; P must be absolutely
    continuous with respect to Q."""
    outcomes, log_p, iota = [], [], []
    for o, lm in zip(p.outcomes, p.log_mass):
        if lm == NEG_INF:
            continue
        if o not in q._index or q.log_mass_of(o) == NEG_INF:
            raise AbsoluteContinuityViolation(f"P-atom {o!r} has zero Q-mass")
        outcomes.append(o)
        log_p.append(lm)
        iota.append(lm - q.log_mass_of(o))
    return DensityTable(tuple(outcomes), np.asarray(log_p), np.asarray(iota))


def _standard_log_arrays(sys: StandardSystem,
                         q_w: FiniteDistribution | None = None):
    """(log_joint, log_base, iota) over the (zvec, w) grid; iota is -inf off
    the joint support."""
    with np.errstate(divide="ignore"):
        log_joint = np.log(sys.joint)
        log_pzn = np.log(sys.pzn_mass)
        if q_w is None:
            log_w = np.log(sys.pw_mass)
        else:
            log_w = np.array([q_w.log_mass_of(w) for w in sys.w_labels])
    log_base = log_pzn[:, None] + log_w[None, :]
    sup = log_joint > NEG_INF
    if np.any(sup & (log_base == NEG_INF)):
        raise AbsoluteContinuityViolation(
            "joint atom outside the support of the base measure")
    iota = np.full_like(log_joint, NEG_INF)
    iota[sup] = log_joint[sup] - log_base[sup]
    return log_joint, log_base, iota


def information_density(sys: StandardSystem,
                        q_w: FiniteDistribution | None = None) -> DensityTable:
    """Information density of (W, Z) under the system joint, optionally
    against an auxiliary hypothesis marginal Q_W."""
    log_joint, _, iota = _standard_log_arrays(sys, q_w)
    sup = log_joint > NEG_INF
    outcomes = tuple(
        (w, zvec)
        for zi, zvec in enumerate(sys.zvecs)
        for wi, w in enumerate(sys.w_labels)
        if sup[zi, wi]
    )
    return DensityTable(outcomes, log_joint[sup], iota[sup])


def _subset_log_arrays(sys: SubsetSystem, q_kernel=None):
    """(log_joint, iota) over the (ztilde, s, w) grid for the conditional
    information density; iota is -inf off the joint support."""
    with np.errstate(divide="ignore"):
        log_joint = np.log(sys.joint)
        log_cond = np.log(sys.cond)
        if q_kernel is None:
            log_w_given = np.log(sys.pw_given)
        else:
            log_w_given = np.array(
                [[_q_row_log(q_kernel, zt, w) for w in sys.w_labels]
                 for zt in sys.ztildes])
    sup = log_cond > NEG_INF
    if np.any(sup & (log_w_given[:, None, :] == NEG_INF)):
        raise AbsoluteContinuityViolation(
            "conditional joint atom outside the auxiliary conditional support")
    # log(P(w,zt,s) / (P(w|zt) P(zt) P(s))) reduces to log(P(w|z(s)) / P(w|zt))
    base = np.broadcast_to(log_w_given[:, None, :], log_cond.shape)
    iota = np.full_like(log_cond, NEG_INF)
    iota[sup] = log_cond[sup] - base[sup]
    return log_joint, iota


def _q_row_log(q_kernel, ztilde, w) -> float:
    row = q_kernel[ztilde]
    return row.log_mass_of(w)


def conditional_density(sys: SubsetSystem, q_kernel=None) -> DensityTable:
    """Conditional information density of (W, S) given the supersample."""
    log_joint, iota = _subset_log_arrays(sys, q_kernel)
    sup = log_joint > NEG_INF
    outcomes = tuple(
        (w, zt, s)
        for zi, zt in enumerate(sys.ztildes)
        for si, s in enumerate(sys.s_vecs)
        for wi, w in enumerate(sys.w_labels)
        if sup[zi, si, wi]
    )
    return DensityTable(outcomes, log_joint[sup], iota[sup])


# -- divergences ------------------------------------------------------------


def kl(p: FiniteDistribution, q: FiniteDistribution) -> float:
    """Relative entropy D(P || Q) in nats; 0*log(0/q) is 0."""
    tbl = density(p, q)
    return tbl.mean


def renyi_divergence(p: FiniteDistribution, q: FiniteDistribution,
                     alpha: float) -> float:
    """Renyi divergence of order alpha; dispatches to KL near alpha = 1."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if abs(alpha - 1.0) <= ALPHA_ONE_TOL:
        return kl(p, q)
    terms = []
    for o, lm in zip(p.outcomes, p.log_mass):
        if lm == NEG_INF:
            continue
        lq = q.log_mass_of(o) if o in q._index else NEG_INF
        if lq == NEG_INF:
            if alpha > 1:
                raise AbsoluteContinuityViolation(f"P-atom {o!r} has zero Q-mass")
            continue
        terms.append(alpha * lm + (1.0 - alpha) * lq)
    return float(logsumexp(np.asarray(terms)) / (alpha - 1.0))


# -- standard-setting quantities -------------------------------------------


def mutual_information(sys: StandardSystem,
                       q_w: FiniteDistribution | None = None) -> float:
    """I(W; Z) = E[information density]; with an auxiliary Q_W it is the
    relative entropy against Q_W x P_Z instead."""
    return information_density(sys, q_w).mean


def system_renyi(sys: StandardSystem, alpha: float,
                 q_w: FiniteDistribution | None = None) -> float:
    """Renyi divergence of the joint against the (auxiliary) product."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if abs(alpha - 1.0) <= ALPHA_ONE_TOL:
        return mutual_information(sys, q_w)
    log_joint, log_base, _ = _standard_log_arrays(sys, q_w)
    sup = log_joint > NEG_INF
    terms = alpha * log_joint[sup] + (1.0 - alpha) * log_base[sup]
    return float(logsumexp(terms) / (alpha - 1.0))


def alpha_mi(sys: StandardSystem, alpha: float) -> float:
    """alpha-mutual information I_alpha(Z; W); near alpha = 1 this is I(W; Z)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if abs(alpha - 1.0) <= ALPHA_ONE_TOL:
        return mutual_information(sys)
    log_joint, _, iota = _standard_log_arrays(sys)
    with np.errstate(divide="ignore"):
        log_pzn = np.log(sys.pzn_mass)
        log_pw = np.log(sys.pw_mass)
    # inner(w) = (1/alpha) log E_{P_Z}[exp(alpha * iota)]
    inner = logsumexp(log_pzn[:, None] + alpha * iota, axis=0) / alpha
    outer = logsumexp(log_pw + inner)
    return float(alpha / (alpha - 1.0) * outer)


def maximal_leakage(sys: StandardSystem) -> float:
    """log sum_w max_{z in supp} P(w | z-vector)."""
    mask = sys.pzn_mass > 0
    return float(math.log(np.sum(sys.cond[mask].max(axis=0))))


def max_information(sys: StandardSystem) -> float:
    """Essential supremum of the information density under the joint."""
    return float(information_density(sys).iota.max())


def central_moment(tbl: DensityTable, t: Any) -> float:
    """t-th root of the t-th absolute central moment of iota; T_INF gives the
    essential supremum of the deviation."""
    t = normalize_order(t)
    dev = np.abs(tbl.iota - tbl.mean)
    if t is T_INF:
        return float(dev.max())
    # accumulate in log space so atoms with tiny mass cannot underflow
    with np.errstate(divide="ignore"):
        log_dev = np.where(dev > 0, np.log(np.where(dev > 0, dev, 1.0)), NEG_INF)
    terms = tbl.log_p + t * log_dev
    if np.all(terms == NEG_INF):
        return 0.0
    return float(math.exp(logsumexp(terms) / t))


# -- random-subset quantities ----------------------------------------------


def cond_mutual_information(sys: SubsetSystem, q_kernel=None) -> float:
    """I(W; S | Z-tilde) as the mean conditional information density."""
    return conditional_density(sys, q_kernel).mean


def cond_renyi_divergence(sys: SubsetSystem, alpha: float, q_kernel=None) -> float:
    """Conditional Renyi divergence of order alpha, with the outer
    expectation under P_Ztilde P_{W|Ztilde} P_S."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if abs(alpha - 1.0) <= ALPHA_ONE_TOL:
        return cond_mutual_information(sys, q_kernel)
    _, iota = _subset_log_arrays(sys, q_kernel)
    with np.errstate(divide="ignore"):
        log_pzt = np.log(sys.p_ztilde)
        log_ps = np.log(sys.p_s)
        log_wg = np.log(sys.pw_given) if q_kernel is None else np.array(
            [[_q_row_log(q_kernel, zt, w) for w in sys.w_labels]
             for zt in sys.ztildes])
    terms = (log_pzt[:, None, None] + log_ps[None, :, None]
             + log_wg[:, None, :] + alpha * iota)
    return float(logsumexp(terms) / (alpha - 1.0))


def cond_alpha_mi(sys: SubsetSystem, alpha: float) -> float:
    """Conditional alpha-mutual information I_alpha(W; S | Z-tilde)."""
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    _, iota = _subset_log_arrays(sys)
    with np.errstate(divide="ignore"):
        log_pzt = np.log(sys.p_ztilde)
        log_ps = np.log(sys.p_s)
        log_wg = np.log(sys.pw_given)
    # innermost: log E_{P_S}^{1/alpha}[exp(alpha iota)], per (ztilde, w)
    inner = logsumexp(log_ps[None, :, None] + alpha * iota, axis=1) / alpha
    mid = logsumexp(log_wg + inner, axis=1)  # log E_{P_{W|zt}}[...]
    outer = logsumexp(log_pzt + alpha * mid)
    return float(outer / (alpha - 1.0))


def cond_maximal_leakage(sys: SubsetSystem) -> float:
    """log max_{ztilde in supp} sum_w max_s P(w | ztilde, s)."""
    mask = sys.p_ztilde > 0
    per_zt = sys.cond[mask].max(axis=1).sum(axis=1)
    return float(math.log(per_zt.max()))


# -- posterior relative entropies (inputs to the PAC-Bayesian bounds) -------


def posterior_kls_standard(sys: StandardSystem,
                           q_w: FiniteDistribution | None = None) -> np.ndarray:
    """KL(P_{W|z} || P_W) (or against Q_W) for every z-vector, in z order."""
    with np.errstate(divide="ignore"):
        if q_w is None:
            log_w = np.log(sys.pw_mass)
        else:
            log_w = np.array([q_w.log_mass_of(w) for w in sys.w_labels])
        log_cond = np.log(sys.cond)
    sup = log_cond > NEG_INF
    if np.any(sup & (log_w[None, :] == NEG_INF) & (sys.pzn_mass > 0)[:, None]):
        raise AbsoluteContinuityViolation("posterior atom with zero marginal mass")
    ratio = np.where(sup, log_cond - log_w[None, :], 0.0)
    return np.sum(np.where(sup, sys.cond * ratio, 0.0), axis=1)


def posterior_kls_subset(sys: SubsetSystem, q_kernel=None) -> np.ndarray:
    """KL(P_{W|ztilde,s} || P_{W|ztilde}), shape (|Ztilde|, |S|)."""
    _, iota = _subset_log_arrays(sys, q_kernel)
    terms = np.zeros_like(iota)
    sup = iota > NEG_INF
    terms[sup] = sys.cond[sup] * iota[sup]
    return np.sum(terms, axis=2)
