import math

import numpy as np
import pytest

import oracles
from genbounds import (
    FiniteDistribution,
    LossTable,
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
    load_problem,
    zero_one_loss,
)
from genbounds.prob import BudgetExceededError


class TestLossTable:
    def test_values_must_lie_in_range(self):
        with pytest.raises(ValueError):
            LossTable((0,), (0, 1), np.array([[0.0, 1.5]]), 0.0, 1.0)

    def test_default_sigma_is_half_range(self):
        loss = zero_one_loss([0, 1])
        assert loss.sigma == 0.5

    def test_sigma_below_half_range_rejected(self):
        with pytest.raises(ValueError):
            LossTable((0,), (0, 1), np.array([[0.0, 1.0]]), 0.0, 1.0, sigma=0.25)

    def test_population_and_empirical_loss(self):
        loss = zero_one_loss([0, 1])
        pz = FiniteDistribution.from_probs([0, 1], [0.25, 0.75])
        assert loss.population_loss(0, pz) == pytest.approx(0.75)
        assert loss.empirical_loss(0, (0, 1)) == pytest.approx(0.5)


class TestLearnerKernels:
    def test_gibbs_beta_zero_is_uniform(self):
        k = gibbs_kernel(zero_one_loss([0, 1, 2]), 2, 0.0)
        for zvec in k.input_labels:
            assert all(abs(m - 1 / 3) < 1e-15 for m in k[zvec].mass)

    def test_gibbs_large_beta_approaches_tied_argmin(self):
        loss = zero_one_loss([0, 1])
        k = gibbs_kernel(loss, 2, 500.0)
        # unique minimizer: all mass there
        assert k[(0, 0)].mass_of(0) == pytest.approx(1.0, abs=1e-12)
        # two-way tie: uniform split
        assert k[(0, 1)].mass_of(0) == pytest.approx(0.5, abs=1e-12)

    def test_gibbs_rows_normalized(self, rng):
        values = rng.uniform(size=(3, 2))
        loss = LossTable((0, 1, 2), (0, 1), values, 0.0, 1.0)
        k = gibbs_kernel(loss, 2, 3.0)
        for zvec in k.input_labels:
            assert abs(sum(k[zvec].mass) - 1.0) < 1e-12

    def test_erm_tie_rules(self):
        loss = zero_one_loss([0, 1])
        lowest = erm_kernel(loss, 2, tie="lowest-index")
        assert lowest[(0, 1)].mass_of(0) == 1.0
        split = erm_kernel(loss, 2, tie="uniform-over-argmin")
        assert split[(0, 1)].mass_of(0) == pytest.approx(0.5, abs=1e-15)
        with pytest.raises(ValueError):
            erm_kernel(loss, 2, tie="coin-flip")

    def test_erm_unique_minimizer(self):
        loss = zero_one_loss([0, 1])
        k = erm_kernel(loss, 2)
        assert k[(1, 1)].mass_of(1) == 1.0

    def test_identity_kernel_requires_matching_labels(self):
        loss = LossTable(("a",), (0, 1), np.array([[0.0, 1.0]]), 0.0, 1.0)
        with pytest.raises(ValueError):
            identity_kernel(loss)


class TestStandardAssembly:
    def test_inst_a_hypothesis_marginal(self, inst_a):
        assert inst_a.pw_mass == pytest.approx([0.75, 0.25], abs=1e-12)

    def test_constant_learner_joint_is_product(self, inst_c):
        outer = inst_c.pzn_mass[:, None] * inst_c.pw_mass[None, :]
        assert inst_c.joint == pytest.approx(outer, abs=1e-15)

    def test_atom_count(self, inst_a):
        assert inst_a.joint.size == 2 * 2 ** 2

    def test_marginals_reproduce_inputs(self, rng):
        pz = FiniteDistribution.from_probs([0, 1], rng.dirichlet([1, 1]))
        loss = zero_one_loss([0, 1])
        sys = assemble_standard(pz, 2, gibbs_kernel(loss, 2, 1.5), loss)
        from genbounds import iid_power
        pzn = iid_power(pz, 2)
        assert sys.joint.sum(axis=1) == pytest.approx(pzn.mass, abs=1e-15)
        assert abs(sys.pw_mass.sum() - 1.0) < 1e-12

    def test_budget_refusal_before_enumeration(self):
        pz = FiniteDistribution.uniform(range(4))
        loss = LossTable((0, 1), tuple(range(4)),
                         np.zeros((2, 4)), 0.0, 1.0)
        kernel = constant_kernel(loss, 1)
        with pytest.raises(BudgetExceededError):
            assemble_standard(pz, 12, kernel, loss)


class TestSubsetAssembly:
    def test_inst_b_posterior_given_distinct_supersample(self, inst_b):
        zi = inst_b.ztildes.index((0, 1))
        assert inst_b.pw_given[zi] == pytest.approx([0.5, 0.5], abs=1e-15)

    def test_s_ignoring_learner_posterior_constant_in_s(self):
        loss = zero_one_loss([0, 1])
        sys = assemble_subset(FiniteDistribution.bernoulli(0.5), 2,
                              constant_kernel(loss, 2), loss)
        for zi in range(len(sys.ztildes)):
            for si in range(len(sys.s_vecs)):
                assert sys.cond[zi, si] == pytest.approx(sys.pw_given[zi],
                                                         abs=1e-15)

    def test_atom_count(self, inst_b):
        assert inst_b.joint.size == 2 * 2 ** 2 * 2

    def test_selector_convention(self, inst_b):
        assert inst_b.select((0, 1), (0,)) == (0,)
        assert inst_b.select((0, 1), (1,)) == (1,)


class TestGenEvaluation:
    def test_inst_c_expected_gen_zero(self, inst_c):
        assert expected_gen(inst_c) == pytest.approx(0.0, abs=1e-12)

    def test_inst_a_expected_gen(self, inst_a):
        assert expected_gen(inst_a) == pytest.approx(0.25, abs=1e-12)

    def test_inst_a_atom_value(self, inst_a):
        assert gen(inst_a, 0, (0, 0)) == pytest.approx(0.5, abs=1e-15)


class TestGenHat:
    def test_equal_halves_give_zero(self, inst_b):
        for s in inst_b.s_vecs:
            for w in inst_b.w_labels:
                assert gen_hat(inst_b, w, (1, 1), s) == 0.0

    def test_inst_b_atom_value(self, inst_b):
        assert gen_hat(inst_b, 0, (0, 1), (0,)) == pytest.approx(1.0)

    def test_antisymmetry_under_selector_flip(self, inst_b, rng):
        loss = zero_one_loss([0, 1])
        sys = assemble_subset(FiniteDistribution.bernoulli(0.3), 2,
                              gibbs_kernel(loss, 2, 2.0), loss)
        for zt in sys.ztildes:
            for s in sys.s_vecs:
                sbar = tuple(1 - b for b in s)
                for w in sys.w_labels:
                    assert gen_hat(sys, w, zt, s) == pytest.approx(
                        -gen_hat(sys, w, zt, sbar), abs=1e-15)

    def test_selector_mean_is_zero_pointwise(self, inst_b):
        # E_S[gen_hat(w, zt, S)] = 0 for every fixed (w, zt)
        avg = np.tensordot(inst_b.genhat, inst_b.p_s, axes=([1], [0]))
        assert avg == pytest.approx(np.zeros_like(avg), abs=1e-12)

    def test_expected_gen_matches_expected_gen_hat(self, inst_b, rng):
        assert expected_gen_subset(inst_b) == pytest.approx(
            expected_gen_hat(inst_b), abs=1e-12)
        for _ in range(10):
            from genbounds import random_subset_system
            sys = random_subset_system(rng)
            assert expected_gen_subset(sys) == pytest.approx(
                expected_gen_hat(sys), abs=1e-12)

    def test_inst_b_expected_gen_is_half(self, inst_b):
        # learned hypothesis always fits its single training sample exactly,
        # so gen = population loss = 1/2 at every atom
        assert expected_gen_subset(inst_b) == pytest.approx(0.5, abs=1e-12)


class TestProblemFiles:
    def test_unknown_setting_rejected(self):
        with pytest.raises(ValueError):
            load_problem({"setting": "online", "instances": [0, 1], "n": 1,
                          "loss": {"hypotheses": [0], "matrix": [[0, 0]],
                                   "range": [0, 1]},
                          "learner": {"kind": "constant"}})

    def test_custom_kernel_learner(self):
        doc = {
            "setting": "standard",
            "instances": [0, 1],
            "n": 1,
            "loss": {"hypotheses": [0, 1], "matrix": [[0, 1], [1, 0]],
                     "range": [0, 1]},
            "learner": {"kind": "custom-kernel", "rows": {
                "0": {"outcomes": [0, 1], "probs": [0.9, 0.1]},
                "1": {"outcomes": [0, 1], "probs": [0.2, 0.8]},
            }},
        }
        setting, sys = load_problem(doc)
        assert setting == "standard"
        assert sys.cond[sys.zvecs.index((1,))][1] == pytest.approx(0.8)

    def test_oracle_agreement_on_fixture_joint(self, inst_a):
        joint = oracles.standard_joint({0: 0.5, 1: 0.5}, 2,
                                       oracles.erm_learner_01([0, 1]))
        for (w, zvec), p in joint.items():
            zi = inst_a.zvecs.index(zvec)
            wi = inst_a.w_labels.index(w)
            assert inst_a.joint[zi, wi] == pytest.approx(p, abs=1e-15)
