"""Ground-truth engine: exact gen/gap distributions, exact coverage of every
probabilistic bound, exponential-inequality checks, a strong-converse check,
the Hoeffding tail helper, and a Gaussian closed-form validation of the
information-density machinery.

Everything except the Gaussian Monte Carlo run is computed by exact
summation over the finite joint.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from . import bounds_standard as bstd
from . import bounds_subset as bsub
from .measures import (
    T_INF,
    central_moment,
    cond_maximal_leakage,
    conditional_density,
    information_density,
    max_information,
    maximal_leakage,
    posterior_kls_subset,
    _standard_log_arrays,
    _subset_log_arrays,
)
from .models import (
    LossTable,
    StandardSystem,
    SubsetSystem,
    assemble_standard,
    assemble_subset,
    gibbs_kernel,
)
from .prob import NEG_INF, FiniteDistribution, check_budget

COVERAGE_TOL = 1e-12
EXP_INEQ_TOL = 1e-9

DEFAULT_LAMBDA_SCALES = (0.0, 0.1, -0.1, 1.0, -1.0, 10.0, -10.0, 100.0, -100.0)


@dataclass(frozen=True)
class CoverageReport:
    """Exact failure probability of a probabilistic bound at level delta."""

    bound_id: str
    delta: float
    exact_violation_prob: float
    holds: bool

    def __post_init__(self):
        expected = self.exact_violation_prob <= self.delta + COVERAGE_TOL
        if self.holds != expected:
            raise ValueError("holds flag inconsistent with violation probability")


# -- exponential inequalities ----------------------------------------------


def _lambda_grid(scale: float, grid: Sequence[float] | None) -> np.ndarray:
    if grid is not None:
        return np.asarray(grid, dtype=float)
    return np.asarray(DEFAULT_LAMBDA_SCALES) * scale


def check_exp_inequality_standard(sys: StandardSystem,
                                  lambda_grid: Sequence[float] | None = None,
                                  sigma: float | None = None) -> float:
    """max over lambda of E[exp(lambda gen - lambda^2 sigma^2/(2n) - iota)].

    Must be <= 1 for every lambda; returns the worst grid value. Passing an
    understated sigma exposes the inequality's sensitivity to the
    sub-Gaussian assumption.
    """
    sigma = sys.sigma if sigma is None else float(sigma)
    grid = _lambda_grid(sys.n / sigma ** 2, lambda_grid)
    log_joint, log_base, _ = _standard_log_arrays(sys)
    sup = log_joint > NEG_INF
    base = log_base[sup]
    gen = sys.gen_table.T[sup]
    worst = -math.inf
    for lam in grid:
        terms = base + lam * gen - lam ** 2 * sigma ** 2 / (2.0 * sys.n)
        worst = max(worst, float(math.exp(logsumexp(terms))))
    return worst


def check_exp_inequality_subset(sys: SubsetSystem,
                                lambda_grid: Sequence[float] | None = None,
                                c: float | None = None) -> float:
    """Subset analog with the test-minus-train gap and the range constant."""
    c = bsub.range_constant(sys.loss).value if c is None else float(c)
    grid = _lambda_grid(sys.n / c, lambda_grid)
    _, iota = _subset_log_arrays(sys)
    sup = iota > NEG_INF
    with np.errstate(divide="ignore"):
        log_base = (np.log(sys.p_ztilde)[:, None, None]
                    + np.log(sys.p_s)[None, :, None]
                    + np.log(sys.pw_given)[:, None, :])
    base = log_base[sup]
    gap = sys.genhat[sup]
    worst = -math.inf
    for lam in grid:
        terms = base + lam * gap - lam ** 2 * c / (2.0 * sys.n)
        worst = max(worst, float(math.exp(logsumexp(terms))))
    return worst


# -- exact pushforward distributions ---------------------------------------


def _pushforward(values: np.ndarray, masses: np.ndarray) -> FiniteDistribution:
    groups: dict[float, float] = {}
    for v, m in zip(values.ravel(), masses.ravel()):
        if m <= 0.0:
            continue
        key = round(float(v), 12)
        groups[key] = groups.get(key, 0.0) + float(m)
    labels = sorted(groups)
    with np.errstate(divide="ignore"):
        lm = np.log(np.array([groups[k] for k in labels]))
    return FiniteDistribution(labels, lm)


def exact_gen_distribution(sys: StandardSystem) -> FiniteDistribution:
    """Exact pushforward of the joint through the generalization error."""
    check_budget(sys.joint.size)
    return _pushforward(sys.gen_table.T, sys.joint)


def exact_gen_hat_distribution(sys: SubsetSystem) -> FiniteDistribution:
    """Exact pushforward of the joint through the test-minus-train gap."""
    check_budget(sys.joint.size)
    return _pushforward(sys.genhat, sys.joint)


def quantile(dist: FiniteDistribution, q: float) -> float:
    """Smallest value v with P[X <= v] >= q (values sorted ascending)."""
    pairs = sorted((float(o), m) for o, m in zip(dist.outcomes, dist.mass))
    acc = 0.0
    for v, m in pairs:
        acc += m
        if acc >= q - 1e-12:
            return v
    return pairs[-1][0]


def abs_quantile(dist: FiniteDistribution, q: float) -> float:
    """Quantile of |X| for a pushforward distribution."""
    groups: dict[float, float] = {}
    for o, m in zip(dist.outcomes, dist.mass):
        key = round(abs(float(o)), 12)
        groups[key] = groups.get(key, 0.0) + float(m)
    acc = 0.0
    for v in sorted(groups):
        acc += groups[v]
        if acc >= q - 1e-12:
            return v
    return max(groups)


# -- exact coverage ---------------------------------------------------------


def _posterior_mean_gen(sys: StandardSystem) -> np.ndarray:
    """E_{P_W|z}[gen] per z-vector."""
    return np.sum(sys.cond * sys.gen_table.T, axis=1)


def _posterior_mean_gap(sys: SubsetSystem) -> np.ndarray:
    """E_{P_W|zt,s}[gen-hat] per (z-tilde, s)."""
    return np.sum(sys.cond * sys.genhat, axis=2)


def _violation_constant_standard(sys: StandardSystem, result) -> float:
    """P[|gen| > eps] for a data-independent single-draw bound."""
    if not result.feasible:
        return 1.0
    mask = np.abs(sys.gen_table.T) > result.epsilon + COVERAGE_TOL
    return float(np.sum(sys.joint[mask]))


def _violation_constant_subset(sys: SubsetSystem, result,
                               values: np.ndarray | None = None) -> float:
    if not result.feasible:
        return 1.0
    values = sys.genhat if values is None else values
    mask = np.abs(values) > result.epsilon + COVERAGE_TOL
    return float(np.sum(sys.joint[mask]))


def coverage(sys: StandardSystem | SubsetSystem, bound_id: str, delta: float,
             params: Mapping[str, Any] | None = None) -> CoverageReport:
    """Exact probability that the named bound fails at level delta.

    Infeasible outcomes of data-dependent bounds count as violations; a
    data-independent bound that is infeasible outright has violation
    probability 1.
    """
    params = dict(params or {})
    t = params.get("t", 2)
    alpha = params.get("alpha", 2.0)
    gamma = params.get("gamma", "auto")
    if isinstance(sys, StandardSystem):
        viol = _coverage_standard(sys, bound_id, delta, t, alpha, gamma)
    else:
        viol = _coverage_subset(sys, bound_id, delta, t, alpha, gamma)
    return CoverageReport(bound_id, delta, viol, viol <= delta + COVERAGE_TOL)


def _coverage_standard(sys: StandardSystem, bound_id: str, delta: float,
                       t: Any, alpha: float, gamma: Any) -> float:
    if bound_id == "pacb":
        pg = _posterior_mean_gen(sys)
        viol = 0.0
        for zi, zvec in enumerate(sys.zvecs):
            if sys.pzn_mass[zi] <= 0.0:
                continue
            res = bstd.pacb_bound(sys, zvec, delta)
            if not res.feasible or abs(pg[zi]) > res.epsilon + COVERAGE_TOL:
                viol += float(sys.pzn_mass[zi])
        return viol
    if bound_id == "pacb_moment":
        res = bstd.pacb_moment_bound(sys, delta, t)
        if not res.feasible:
            return 1.0
        pg = _posterior_mean_gen(sys)
        mask = np.abs(pg) > res.epsilon + COVERAGE_TOL
        return float(np.sum(sys.pzn_mass[mask]))
    if bound_id == "sd_density":
        tbl = information_density(sys)
        rate = 2.0 * sys.sigma ** 2 / sys.n
        viol = 0.0
        for (w, zvec), lp, iota in zip(tbl.outcomes, tbl.log_p, tbl.iota):
            radicand = rate * (iota + math.log(1.0 / delta))
            atom_gen = sys.gen_table[sys.w_labels.index(w), sys.zvecs.index(zvec)]
            if radicand < 0.0 or abs(atom_gen) > math.sqrt(radicand) + COVERAGE_TOL:
                viol += math.exp(lp)
        return viol
    makers = {
        "sd_moment": lambda: bstd.sd_moment_bound(sys, delta, t),
        "sd_leakage": lambda: bstd.sd_leakage_bound(sys, delta),
        "sd_renyi": lambda: bstd.sd_renyi_bound(sys, delta, alpha),
        "sd_tail": lambda: bstd.sd_tail_bound(sys, delta, gamma),
        "tail_relax_moment": lambda: bstd.tail_relaxations(sys, delta, t)[0],
        "tail_relax_leakage": lambda: bstd.tail_relaxations(sys, delta, t)[1],
    }
    if bound_id not in makers:
        raise KeyError(f"unknown bound id {bound_id!r} for a standard system")
    return _violation_constant_standard(sys, makers[bound_id]())


def _coverage_subset(sys: SubsetSystem, bound_id: str, delta: float,
                     t: Any, alpha: float, gamma: Any) -> float:
    mass_zs = sys.p_ztilde[:, None] * sys.p_s[None, :]
    if bound_id == "cond_pacb":
        pg = _posterior_mean_gap(sys)
        kls = posterior_kls_subset(sys)
        rate = 2.0 * bsub.range_constant(sys.loss).value / sys.n
        eps = np.sqrt(rate * (kls + math.log(1.0 / delta)))
        mask = np.abs(pg) > eps + COVERAGE_TOL
        return float(np.sum(mass_zs[mask]))
    if bound_id == "cond_pacb_moment":
        res = bsub.cond_pacb_moment_bound(sys, delta, t)
        if not res.feasible:
            return 1.0
        pg = _posterior_mean_gap(sys)
        mask = np.abs(pg) > res.epsilon + COVERAGE_TOL
        return float(np.sum(mass_zs[mask]))
    if bound_id == "cond_sd_density":
        _, iota = _subset_log_arrays(sys)
        rate = 2.0 * bsub.range_constant(sys.loss).value / sys.n
        radicand = rate * (iota + math.log(1.0 / delta))
        joint = sys.joint
        sup = joint > 0.0
        eps = np.sqrt(np.where(radicand >= 0.0, radicand, 0.0))
        bad = (radicand < 0.0) | (np.abs(sys.genhat) > eps + COVERAGE_TOL)
        return float(np.sum(joint[sup & bad]))
    if bound_id == "genhat_to_gen":
        res = bsub.genhat_to_gen(
            lambda d: bsub.cond_sd_moment_bound(sys, d, t).epsilon,
            sys.loss, sys.n, delta)
        return _violation_constant_subset(sys, res, values=sys.gen_sel)
    makers = {
        "cond_sd_moment": lambda: bsub.cond_sd_moment_bound(sys, delta, t),
        "cond_sd_leakage": lambda: bsub.cond_sd_leakage_bound(sys, delta),
        "cond_sd_renyi": lambda: bsub.cond_sd_renyi_pair_bound(sys, delta, alpha),
        "cond_tail": lambda: bsub.cond_tail_bound(sys, delta, gamma),
        "cond_tail_relax_moment": lambda: bsub.cond_tail_relaxations(sys, delta, t)[0],
        "cond_tail_relax_leakage": lambda: bsub.cond_tail_relaxations(sys, delta, t)[1],
        "cond_alpha_mi": lambda: bsub.cond_alpha_mi_bound(sys, delta, alpha),
    }
    if bound_id not in makers:
        raise KeyError(f"unknown bound id {bound_id!r} for a subset system")
    return _violation_constant_subset(sys, makers[bound_id]())


STANDARD_COVERAGE_IDS = ("pacb", "pacb_moment", "sd_density", "sd_moment",
                         "sd_leakage", "sd_renyi", "sd_tail",
                         "tail_relax_moment", "tail_relax_leakage")
SUBSET_COVERAGE_IDS = ("cond_pacb", "cond_pacb_moment", "cond_sd_density",
                       "cond_sd_moment", "cond_sd_leakage", "cond_sd_renyi",
                       "cond_tail", "cond_tail_relax_moment",
                       "cond_tail_relax_leakage", "cond_alpha_mi",
                       "genhat_to_gen")


# -- classical helpers ------------------------------------------------------


def strong_converse_check(p: FiniteDistribution, q: FiniteDistribution,
                          event: Iterable[Any] | Callable[[Any], bool],
                          gamma: float) -> dict:
    """P[E] <= P[log(dP/dQ) > gamma] + e^gamma Q[E], evaluated exactly."""
    member = event if callable(event) else set(event).__contains__
    p_event = sum(math.exp(lm) for o, lm in zip(p.outcomes, p.log_mass)
                  if lm > NEG_INF and member(o))
    q_event = sum(math.exp(lm) for o, lm in zip(q.outcomes, q.log_mass)
                  if lm > NEG_INF and member(o))
    tail = 0.0
    for o, lm in zip(p.outcomes, p.log_mass):
        if lm == NEG_INF:
            continue
        lq = q.log_mass_of(o) if o in q._index else NEG_INF
        if lq == NEG_INF:
            from .prob import AbsoluteContinuityViolation
            raise AbsoluteContinuityViolation(f"P-atom {o!r} has zero Q-mass")
        if lm - lq > gamma:
            tail += math.exp(lm)
    rhs = tail + math.exp(gamma) * q_event
    return {"p_event": p_event, "density_tail": tail, "q_event": q_event,
            "rhs": rhs, "holds": p_event <= rhs + COVERAGE_TOL}


def hoeffding_tail(sigma: float, n: int, eps: float) -> float:
    """Two-sided Hoeffding tail 2 exp(-n eps^2 / (2 sigma^2))."""
    if sigma <= 0 or n < 1 or eps < 0:
        raise ValueError("require sigma > 0, n >= 1, eps >= 0")
    return 2.0 * math.exp(-n * eps ** 2 / (2.0 * sigma ** 2))


def gaussian_mi_validation(n: int, noise_var: float, prior_var: float,
                           samples: int = 100_000, seed: int = 0) -> dict:
    """Monte Carlo check of the density machinery against a Gaussian closed
    form: W = mean of n iid N(0, prior_var) draws plus N(0, noise_var) noise,
    for which I(W; Z) = (1/2) log(1 + prior_var / (n noise_var))."""
    if noise_var <= 0 or prior_var <= 0:
        raise ValueError("variances must be positive")
    closed = 0.5 * math.log(1.0 + prior_var / (n * noise_var))
    rng = np.random.default_rng(seed)
    z = rng.normal(0.0, math.sqrt(prior_var), size=(samples, n))
    w = z.mean(axis=1) + rng.normal(0.0, math.sqrt(noise_var), size=samples)
    marg_var = prior_var / n + noise_var
    # iota = log N(w; mean(z), noise_var) - log N(w; 0, marg_var)
    iota = (-0.5 * math.log(noise_var) - (w - z.mean(axis=1)) ** 2 / (2 * noise_var)
            + 0.5 * math.log(marg_var) + w ** 2 / (2 * marg_var))
    estimate = float(iota.mean())
    std_error = float(iota.std(ddof=1) / math.sqrt(samples))
    return {
        "closed_form": closed,
        "mc_estimate": estimate,
        "std_error": std_error,
        "within_3se": abs(estimate - closed) <= 3.0 * std_error,
    }


# -- randomized instances ---------------------------------------------------


def _random_loss_and_learner(rng: np.random.Generator, n: int):
    n_z = int(rng.integers(2, 4))
    n_w = int(rng.integers(2, 5))
    values = rng.uniform(0.0, 1.0, size=(n_w, n_z))
    loss = LossTable(tuple(range(n_w)), tuple(range(n_z)), values, 0.0, 1.0)
    pz = FiniteDistribution.from_probs(loss.instances,
                                       rng.dirichlet(np.ones(n_z)))
    beta = float(rng.uniform(0.0, 8.0))
    return pz, loss, gibbs_kernel(loss, n, beta)


def random_standard_system(rng: np.random.Generator) -> StandardSystem:
    """A small Gibbs-learner instance: |Z| in {2,3}, |W| in {2,3,4}, n in {1,2,3}."""
    n = int(rng.integers(1, 4))
    pz, loss, learner = _random_loss_and_learner(rng, n)
    return assemble_standard(pz, n, learner, loss)


def random_subset_system(rng: np.random.Generator) -> SubsetSystem:
    """Subset analog of random_standard_system."""
    n = int(rng.integers(1, 4))
    pz, loss, learner = _random_loss_and_learner(rng, n)
    return assemble_subset(pz, n, learner, loss)


# -- suite runner -----------------------------------------------------------


def run_verification_suite(seed: int = 0, n_instances: int = 50,
                           deltas: Sequence[float] = (0.3, 0.1, 0.05),
                           sigma_scale: float = 1.0) -> dict:
    """Run the exponential-inequality, coverage, chain, ordering, and
    gap-identity suites; returns pass/fail with a failure list.

    ``sigma_scale`` rescales the sub-Gaussian parameter in the exponential
    checks (values below 1 inject a deliberate fault).
    """
    from .models import load_fixture

    failures: list[str] = []
    checks = 0
    rng = np.random.default_rng(seed)
    standard = [load_fixture("inst_a")[1], load_fixture("inst_c")[1]]
    subset = [load_fixture("inst_b")[1]]
    for _ in range(n_instances):
        standard.append(random_standard_system(rng))
        subset.append(random_subset_system(rng))

    for i, sys in enumerate(standard):
        checks += 1
        worst = check_exp_inequality_standard(sys, sigma=sys.sigma * sigma_scale)
        if worst > 1.0 + EXP_INEQ_TOL:
            failures.append(f"exp-inequality standard[{i}]: worst={worst:.6g}")
        tbl = information_density(sys)
        leak, imax = maximal_leakage(sys), max_information(sys)
        checks += 1
        if not (leak <= imax + 1e-9
                and imax <= tbl.mean + central_moment(tbl, T_INF) + 1e-9):
            failures.append(f"chain violated on standard[{i}]")
        for delta in deltas:
            eps_m, _ = bstd.tail_relaxations(sys, delta, 2)
            direct = bstd.sd_moment_bound(sys, delta, 2)
            gap = eps_m.epsilon ** 2 - direct.epsilon ** 2
            checks += 1
            if abs(gap - 2.0 * sys.sigma ** 2 / sys.n * math.log(2.0)) > 1e-12:
                failures.append(f"gap identity violated on standard[{i}] delta={delta}")
            for bound_id in STANDARD_COVERAGE_IDS:
                checks += 1
                rep = coverage(sys, bound_id, delta)
                if not rep.holds:
                    failures.append(
                        f"coverage {bound_id} standard[{i}] delta={delta}: "
                        f"viol={rep.exact_violation_prob:.6g}")

    for i, sys in enumerate(subset):
        checks += 1
        c_val = bsub.range_constant(sys.loss).value
        worst = check_exp_inequality_subset(sys, c=c_val * sigma_scale ** 2)
        if worst > 1.0 + EXP_INEQ_TOL:
            failures.append(f"exp-inequality subset[{i}]: worst={worst:.6g}")
        checks += 1
        if not bsub.leakage_ordering_check(sys)["holds"]:
            failures.append(f"leakage ordering violated on subset[{i}]")
        for delta in deltas:
            eps_m, _ = bsub.cond_tail_relaxations(sys, delta, 2)
            direct = bsub.cond_sd_moment_bound(sys, delta, 2)
            gap = eps_m.epsilon ** 2 - direct.epsilon ** 2
            checks += 1
            if abs(gap - 2.0 * c_val / sys.n * math.log(2.0)) > 1e-12:
                failures.append(f"gap identity violated on subset[{i}] delta={delta}")
            for bound_id in SUBSET_COVERAGE_IDS:
                checks += 1
                rep = coverage(sys, bound_id, delta)
                if not rep.holds:
                    failures.append(
                        f"coverage {bound_id} subset[{i}] delta={delta}: "
                        f"viol={rep.exact_violation_prob:.6g}")

    return {"passed": not failures, "checks": checks, "failures": failures,
            "seed": seed}
