import math

import numpy as np
import pytest

import poolal as pl
from poolal.optimal import (
    IdentificationError,
    SizeCapError,
    c_avg,
    f_avg,
    f_worst,
    opt_avg,
    opt_avg_batch,
    opt_avg_naive,
    opt_min_cost,
    opt_min_cost_naive,
    opt_worst,
    opt_worst_naive,
)
from poolal.policies import PolicyNode, PolicyTree, build_batch_policy, build_policy
from poolal.utilities import PruningCount, VersionSpaceReduction


def single_query_tree(inst, example):
    return PolicyTree(inst, PolicyNode(example, (None,) * inst.n_labels))


@pytest.fixture
def pruning_priors():
    p_true = pl.Prior([0.5, 0.5, 0.0, 0.0])
    p_shifted = pl.Prior([0.4, 0.4, 0.1, 0.1])
    return p_true, p_shifted


class TestFAvg:
    def test_uniform_version_space_single_query(self, square):
        tree = single_query_tree(square, "x0")
        got = f_avg(pl.uniform_prior(square), VersionSpaceReduction(), tree)
        assert got == pytest.approx(0.5)

    def test_pruning_shifted_prior_on_x1(self, square, pruning_priors):
        _, p_shifted = pruning_priors
        got = f_avg(p_shifted, PruningCount(0.0), single_query_tree(square, "x1"))
        assert got == pytest.approx(2.0, abs=1e-9)

    def test_pruning_true_prior_on_x0(self, square, pruning_priors):
        p_true, _ = pruning_priors
        got = f_avg(p_true, PruningCount(0.0), single_query_tree(square, "x0"))
        assert got == pytest.approx(1.0, abs=1e-9)


class TestFWorst:
    def test_uniform_version_space(self, square):
        tree = single_query_tree(square, "x0")
        got = f_worst(pl.uniform_prior(square), VersionSpaceReduction(), tree)
        assert got == pytest.approx(0.5)

    def test_pruning_values(self, square):
        mu = 0.01
        p_true = pl.Prior([0.5 - mu, 0.5 - mu, mu, mu])
        p_shifted = pl.Prior([0.5 - mu - 0.1, 0.5 - mu - 0.1, mu + 0.1, mu + 0.1])
        pi1 = single_query_tree(square, "x1")
        assert f_worst(p_shifted, PruningCount(mu), pi1) == pytest.approx(2.0, abs=1e-9)
        assert f_worst(p_true, PruningCount(mu), pi1) == pytest.approx(0.0, abs=1e-9)

    def test_min_covers_zero_mass_hypotheses(self, square):
        # a point mass still gets min'd over every labeling
        p = pl.point_mass(square, 0)
        tree = single_query_tree(square, "x0")
        vals = [
            pl.eval_utility(VersionSpaceReduction(), p, square, ("x0",), h)
            for h in square.hypotheses
        ]
        assert f_worst(p, VersionSpaceReduction(), tree) == pytest.approx(min(vals))


class TestCAvg:
    def test_uniform_full_tree(self, square):
        tree = build_policy("gbs", pl.uniform_prior(square), square, 2, stop_when_identified=True)
        assert c_avg(pl.uniform_prior(square), tree) == pytest.approx(2.0)

    def test_point_mass_weights_single_path(self, square):
        tree = build_policy("gbs", pl.uniform_prior(square), square, 2, stop_when_identified=True)
        assert c_avg(pl.point_mass(square, 0), tree) == pytest.approx(2.0)

    def test_chain_optimal_cost(self, chain):
        p = pl.Prior([0.5, 0.25, 0.25])
        tree = build_policy("gbs", p, chain, 2, stop_when_identified=True)
        assert c_avg(p, tree) == pytest.approx(1.5)

    def test_non_identifying_policy_names_pair(self, square):
        tree = single_query_tree(square, "x0")  # h1 and h3 agree on x0
        with pytest.raises(IdentificationError, match="h1.*h3"):
            c_avg(pl.uniform_prior(square), tree)


class TestOptAvg:
    def test_budget_one_uniform(self, square):
        r = opt_avg(pl.uniform_prior(square), VersionSpaceReduction(), square, 1)
        assert r.value == pytest.approx(0.5)

    def test_full_budget_equals_gibbs_error_of_prior(self, random_cases):
        u = VersionSpaceReduction()
        for inst, p in random_cases(10, seed=31, max_examples=3):
            r = opt_avg(p, u, inst, inst.n_examples, budget_cap=4)
            assert r.value == pytest.approx(1.0 - float((p.probs**2).sum()), abs=1e-9)

    def test_pruning_tie_breaks_to_x0(self, square, pruning_priors):
        _, p_shifted = pruning_priors
        r = opt_avg(p_shifted, PruningCount(0.0), square, 1)
        assert r.value == pytest.approx(2.0, abs=1e-9)
        assert r.policy.root.example == "x0"  # both queries tie at 2

    def test_value_matches_policy_score(self, random_cases):
        u = VersionSpaceReduction()
        for inst, p in random_cases(10, seed=32):
            b = min(2, inst.n_examples)
            r = opt_avg(p, u, inst, b)
            assert f_avg(p, u, r.policy) == pytest.approx(r.value, abs=1e-9)

    def test_caps_enforced(self):
        inst = pl.random_instance(4, 8, 2, rng=0)
        p = pl.uniform_prior(inst)
        with pytest.raises(SizeCapError, match="hypotheses"):
            opt_avg(p, VersionSpaceReduction(), inst, 2, hypothesis_cap=4)
        with pytest.raises(SizeCapError, match="budget"):
            opt_avg(p, VersionSpaceReduction(), inst, 4, budget_cap=3)


class TestOptWorst:
    def test_budget_one_uniform(self, square):
        r = opt_worst(pl.uniform_prior(square), VersionSpaceReduction(), square, 1)
        assert r.value == pytest.approx(0.5)

    def test_pruning_true_prior_prefers_x0(self, square):
        mu = 0.01
        p_true = pl.Prior([0.5 - mu, 0.5 - mu, mu, mu])
        r = opt_worst(p_true, PruningCount(mu), square, 1)
        assert r.value == pytest.approx(1.0, abs=1e-9)
        assert r.policy.root.example == "x0"

    def test_value_matches_policy_score(self, random_cases):
        u = VersionSpaceReduction()
        for inst, p in random_cases(10, seed=33):
            b = min(2, inst.n_examples)
            r = opt_worst(p, u, inst, b)
            assert f_worst(p, u, r.policy) == pytest.approx(r.value, abs=1e-9)

    def test_single_support_prior_agrees_with_naive(self, square):
        p = pl.point_mass(square, 2)
        u = VersionSpaceReduction()
        r = opt_worst(p, u, square, 1)
        assert r.value == pytest.approx(opt_worst_naive(p, u, square, 1), abs=1e-12)


class TestOptMinCost:
    def test_uniform_square_needs_two(self, square):
        r = opt_min_cost(pl.uniform_prior(square), square)
        assert r.value == pytest.approx(2.0)

    def test_point_mass_costs_nothing(self, square):
        r = opt_min_cost(pl.point_mass(square, 1), square)
        assert r.value == 0.0
        assert r.policy.root is None

    def test_chain(self, chain):
        r = opt_min_cost(pl.Prior([0.5, 0.25, 0.25]), chain)
        assert r.value == pytest.approx(1.5)
        assert r.policy.root.example == "x0"

    def test_value_matches_policy_score(self, random_cases):
        for inst, p in random_cases(10, seed=34):
            r = opt_min_cost(p, inst)
            assert c_avg(p, r.policy) == pytest.approx(r.value, abs=1e-9)


class TestOracleDominance:
    def test_greedy_never_beats_oracle(self, random_cases):
        u = VersionSpaceReduction()
        for inst, p in random_cases(30, seed=35):
            b = min(2, inst.n_examples)
            tree = build_policy("max_gibbs", p, inst, b)
            assert f_avg(p, u, tree) <= opt_avg(p, u, inst, b).value + 1e-9
            tree = build_policy("least_confidence", p, inst, b)
            assert f_worst(p, u, tree) <= opt_worst(p, u, inst, b).value + 1e-9
            tree = build_policy("gbs", p, inst, inst.n_examples, stop_when_identified=True)
            assert c_avg(p, tree) >= opt_min_cost(p, inst).value - 1e-9

    def test_approximation_ratios_hold(self, random_cases):
        u = VersionSpaceReduction()
        alpha = 1.0 - 1.0 / math.e
        for inst, p in random_cases(40, seed=36):
            b = min(2, inst.n_examples)
            tree = build_policy("max_gibbs", p, inst, b)
            assert f_avg(p, u, tree) >= alpha * opt_avg(p, u, inst, b).value - 1e-9
            tree = build_policy("least_confidence", p, inst, b)
            assert f_worst(p, u, tree) >= alpha * opt_worst(p, u, inst, b).value - 1e-9
            tree = build_policy("gbs", p, inst, inst.n_examples, stop_when_identified=True)
            assert c_avg(p, tree) <= pl.gbs_alpha(p) * opt_min_cost(p, inst).value + 1e-9


class TestNaiveAgreement:
    def test_memoized_matches_enumeration(self, square, chain, random_cases):
        u = VersionSpaceReduction()
        cases = [(square, pl.uniform_prior(square)), (chain, pl.Prior([0.5, 0.25, 0.25]))]
        cases += random_cases(10, seed=37, max_examples=3)
        for inst, p in cases:
            b = min(2, inst.n_examples)
            assert opt_avg(p, u, inst, b).value == pytest.approx(
                opt_avg_naive(p, u, inst, b), abs=1e-12
            )
            assert opt_worst(p, u, inst, b).value == pytest.approx(
                opt_worst_naive(p, u, inst, b), abs=1e-12
            )
            assert opt_min_cost(p, inst).value == pytest.approx(
                opt_min_cost_naive(p, inst), abs=1e-12
            )


class TestBatchOracle:
    def test_batch_greedy_never_beats_batch_oracle(self, random_cases):
        u = VersionSpaceReduction()
        for inst, p in random_cases(10, seed=38, max_examples=4):
            if inst.n_examples < 4:
                continue
            tree = build_batch_policy(p, inst, n_rounds=1, batch_size=2)
            r = opt_avg_batch(p, u, inst, n_rounds=1, batch_size=2)
            assert f_avg(p, u, tree) <= r.value + 1e-9

    def test_batch_oracle_below_adaptive_oracle(self, square):
        u = VersionSpaceReduction()
        p = pl.random_prior(square, rng=8)
        batch = opt_avg_batch(p, u, square, n_rounds=1, batch_size=2)
        adaptive = opt_avg(p, u, square, 2)
        assert batch.value <= adaptive.value + 1e-12


def test_opt_result_serialization(square):
    r = opt_min_cost(pl.uniform_prior(square), square)
    text = r.to_text()
    assert text.splitlines()[0] == "value=2.0"
    assert text.splitlines()[1] == "0,x0,"
