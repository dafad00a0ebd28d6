"""Exact information-theoretic generalization bounds on finite spaces."""

from .prob import (
    AbsoluteContinuityViolation,
    BudgetExceededError,
    FiniteDistribution,
    InvalidDistributionError,
    JointTable,
    Kernel,
    ess_sup,
    iid_power,
    load_distribution,
    marginalize,
    product,
)
from .models import (
    LossTable,
    StandardSystem,
    SubsetSystem,
    assemble_standard,
    assemble_subset,
    constant_kernel,
    erm_kernel,
    expected_gen,
    expected_gen_hat,
    expected_gen_subset,
    gen,
    gen_hat,
    gibbs_kernel,
    identity_kernel,
    load_fixture,
    load_problem,
    zero_one_loss,
)
from .measures import (
    T_INF,
    DensityTable,
    alpha_mi,
    central_moment,
    cond_alpha_mi,
    cond_maximal_leakage,
    cond_mutual_information,
    cond_renyi_divergence,
    conditional_density,
    density,
    information_density,
    kl,
    max_information,
    maximal_leakage,
    mutual_information,
    renyi_divergence,
    system_renyi,
)
from .bounds_standard import (
    BoundResult,
    avg_mi_bound,
    chain_report,
    pacb_bound,
    pacb_moment_bound,
    sd_density_bound,
    sd_leakage_bound,
    sd_moment_bound,
    sd_renyi_bound,
    sd_tail_bound,
    tail_relaxations,
)
from .bounds_subset import (
    RangeConstant,
    cmi_avg_bound,
    cond_alpha_mi_bound,
    cond_pacb_bound,
    cond_pacb_moment_bound,
    cond_sd_density_bound,
    cond_sd_leakage_bound,
    cond_sd_moment_bound,
    cond_sd_renyi_pair_bound,
    cond_tail_bound,
    cond_tail_relaxations,
    delta_constant,
    genhat_to_gen,
    holder_event_bound,
    leakage_ordering_check,
    range_constant,
)
from .verify import (
    CoverageReport,
    check_exp_inequality_standard,
    check_exp_inequality_subset,
    coverage,
    exact_gen_distribution,
    exact_gen_hat_distribution,
    gaussian_mi_validation,
    hoeffding_tail,
    random_standard_system,
    random_subset_system,
    run_verification_suite,
    strong_converse_check,
)

__version__ = "0.1.0"
