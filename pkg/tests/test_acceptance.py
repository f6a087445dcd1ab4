"""Acceptance suite: one test per shipping criterion.

Each test prints a single PASS line when its criterion holds at the
stated tolerance (a failed assert is the fail line).  Run with
``pytest tests/test_acceptance.py -s`` to see the lines.
"""

import math
import time

import numpy as np
import pytest

import poolal as pl
from poolal.cli import main, mixture_trajectories
from poolal.robustness import ALPHA_GREEDY

TOL = 1e-9


def _announce(n: int, name: str) -> None:
    print(f"ACCEPTANCE {n} ({name}): PASS")


def _cli_counterexample_values(capsys, *argv):
    code = main(["counterexample", *argv])
    out = capsys.readouterr().out
    assert code == 0
    return dict(line.split("=", 1) for line in out.splitlines())


def test_criterion_1_counterexample_golden_values(capsys):
    start = time.perf_counter()

    v = _cli_counterexample_values(capsys, "--mode", "avg", "--delta", "0.1")
    assert abs(float(v["f_avg_p1_pi0"]) - 2.0) <= TOL
    assert abs(float(v["f_avg_p1_pi1"]) - 2.0) <= TOL
    assert abs(float(v["f_avg_p0_pi1"]) - 0.0) <= TOL
    assert abs(float(v["f_avg_p0_pi0"]) - 1.0) <= TOL
    assert abs(float(v["l1"]) - 0.4) <= TOL
    assert v["violation"] == "true"

    v = _cli_counterexample_values(capsys, "--mode", "worst", "--delta", "0.1", "--mu", "0.01")
    assert abs(float(v["f_worst_p1_pi0"]) - 2.0) <= TOL
    assert abs(float(v["f_worst_p1_pi1"]) - 2.0) <= TOL
    assert abs(float(v["f_worst_p0_pi1"]) - 0.0) <= TOL
    assert abs(float(v["f_worst_p0_pi0"]) - 1.0) <= TOL
    assert abs(float(v["l1"]) - 0.4) <= TOL
    assert v["violation"] == "true"

    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"counterexample command took {elapsed:.2f}s"
    _announce(1, "counterexample golden values")


def test_criterion_2_approximation_ratio_suite():
    start = time.perf_counter()
    u = pl.VersionSpaceReduction()
    rng = np.random.default_rng(2024)
    for trial in range(200):
        n_x = int(rng.integers(2, 5))
        n_h = min(int(rng.integers(3, 9)), 2**n_x)
        inst = pl.random_instance(n_x, n_h, 2, rng=rng)
        p = pl.random_prior(inst, rng)
        budget = min(2, n_x)

        tree = pl.build_policy("max_gibbs", p, inst, budget)
        lhs = pl.f_avg(p, u, tree)
        opt = pl.opt_avg(p, u, inst, budget).value
        assert lhs >= ALPHA_GREEDY * opt - TOL, f"trial {trial}: {lhs} < {ALPHA_GREEDY * opt}"

        tree = pl.build_policy("least_confidence", p, inst, budget)
        lhs = pl.f_worst(p, u, tree)
        opt = pl.opt_worst(p, u, inst, budget).value
        assert lhs >= ALPHA_GREEDY * opt - TOL, f"trial {trial}: {lhs} < {ALPHA_GREEDY * opt}"

    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, f"ratio suite took {elapsed:.1f}s"
    _announce(2, "greedy approximation ratios on 200 instances")


def test_criterion_3_robustness_sweeps():
    start = time.perf_counter()
    radii = (0.05, 0.1, 0.3, 0.5)
    reports = pl.sweep_reports(
        n_instances=125, radii=radii, seed=0, budget=2, include_mixture=False
    )
    per_bound: dict[str, list] = {}
    for r in reports:
        per_bound.setdefault(r.bound, []).append(r)

    pairs = len(per_bound["avg_vsr_max_gibbs"])
    assert pairs >= 500

    for r in per_bound["avg_vsr_max_gibbs"]:
        assert r.slack >= -TOL, r
        constant = (r.params["alpha"] + 1.0) * (r.params["L"] + r.params["M"])
        assert abs(constant - (4.0 - 2.0 / math.e)) < 1e-12
    for r in per_bound["worst_vsr_least_confidence"]:
        assert r.slack >= -TOL, r
        constant = (r.params["alpha"] + 1.0) * r.params["L"]
        assert abs(constant - (2.0 - 1.0 / math.e)) < 1e-12
    for r in per_bound["worst_gen_gibbs_01"]:
        assert r.slack >= -TOL, r
        constant = (r.params["alpha"] + 1.0) * r.params["L"]
        assert abs(constant - (4.0 - 2.0 / math.e)) < 1e-12
    for r in per_bound["mincost_gbs"]:
        assert r.slack >= -TOL, r

    elapsed = time.perf_counter() - start
    assert elapsed < 180.0, f"sweep took {elapsed:.1f}s"
    _announce(3, f"robustness bounds over {pairs} perturbation pairs")


def test_criterion_4_lipschitz_invariants(square):
    start = time.perf_counter()
    inst = pl.random_instance(4, 8, 2, rng=1)

    ratio = pl.lipschitz_probe(pl.VersionSpaceReduction(), inst, 10_000, seed=11)
    assert ratio <= 1.0 + TOL

    u_gen = pl.GeneralizedReduction(pl.zero_one_loss(inst))
    ratio = pl.lipschitz_probe(u_gen, inst, 10_000, seed=12)
    assert ratio <= 2.0 * u_gen.loss.bound + TOL

    pair = pl.threshold_straddle_pair(square, 0.25, gap=0.004)
    ratio = pl.lipschitz_probe(
        pl.PruningCount(0.25), square, 500, seed=13, pair_sampler=lambda rng: pair
    )
    assert ratio > 100.0

    elapsed = time.perf_counter() - start
    assert elapsed < 30.0, f"probes took {elapsed:.1f}s"
    _announce(4, "Lipschitz envelopes and the unbounded pruning ratio")


def test_criterion_5_mixture_bounds():
    start = time.perf_counter()
    rng = np.random.default_rng(55)
    degenerate_checked = False
    for trial in range(200):
        n_x = int(rng.integers(2, 5))
        n_h = min(int(rng.integers(3, 9)), 2**n_x)
        inst = pl.random_instance(n_x, n_h, 2, rng=rng)
        k = int(rng.integers(1, 5))
        components = [pl.random_prior(inst, rng) for _ in range(k)]
        true_index = int(rng.integers(k))
        r_mix, r_true = pl.check_mixture_bounds(inst, components, true_index)
        assert r_mix.slack >= -TOL, (trial, r_mix)
        assert r_true.slack >= -TOL, (trial, r_true)
        assert r_mix.params["specialized_holds"], (trial, r_mix)
        assert r_true.params["specialized_holds"], (trial, r_true)
        if k == 1:
            plain = pl.check_mincost_bound(inst, components[0], components[0])
            assert abs(r_mix.lhs - plain.lhs) <= 1e-12
            assert abs(r_mix.rhs - plain.rhs) <= 1e-12
            degenerate_checked = True
    assert degenerate_checked

    elapsed = time.perf_counter() - start
    assert elapsed < 120.0, f"mixture sweep took {elapsed:.1f}s"
    _announce(5, "uniform-mixture cost bounds over 200 component sets")


def test_criterion_6_mixture_step_invariants():
    outer = np.random.default_rng(66)
    for run in range(100):
        n_x = int(outer.integers(2, 5))
        n_h = min(int(outer.integers(3, 9)), 2**n_x)
        inst = pl.random_instance(n_x, n_h, 2, rng=outer)
        k = int(outer.integers(1, 4))
        components = [pl.random_prior(inst, outer) for _ in range(k)]
        truth = inst.hypotheses[int(outer.integers(n_h))]
        state = pl.initial_state(inst, components)
        for _ in range(min(3, n_x)):
            state = pl.mixture_step(state, "max_gibbs", truth.label_of)
            assert abs(float(state.weights.sum()) - 1.0) <= 1e-9
            for w, comp in state.components:
                if w > 0:
                    assert abs(float(comp.probs.sum()) - 1.0) <= 1e-9

    # single-component runs reproduce the plain greedy transcript bit for bit
    rng = np.random.default_rng(67)
    for run in range(20):
        inst = pl.random_instance(4, 8, 2, rng=rng)
        p = pl.random_prior(inst, rng)
        truth = inst.hypotheses[int(rng.integers(8))]
        state = pl.run_mixture(inst, [p], None, "max_gibbs", 3, truth.label_of)
        t = pl.greedy_transcript("max_gibbs", p, inst, 3, truth)
        assert state.transcript.pairs == t.pairs
        assert np.array_equal(state.posteriors[0].probs, t.final_posterior.probs)

    _announce(6, "mixture normalization and single-prior reduction")


def test_criterion_7_adaptive_beats_passive():
    start = time.perf_counter()
    inst, components = pl.grid_task(16, 4)
    _, means = mixture_trajectories(
        inst, components, budget=8, n_seeds=100, criterion="max_gibbs",
        with_passive=True, seed=0,
    )
    assert means["al"] >= means["passive"], means

    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, f"grid task took {elapsed:.1f}s"
    _announce(
        7,
        f"adaptive {means['al']:.4f} >= passive {means['passive']:.4f} on the grid task",
    )


def test_criterion_8_oracle_self_consistency(square, chain):
    u = pl.VersionSpaceReduction()
    rng = np.random.default_rng(88)
    cases = [(square, pl.uniform_prior(square)), (chain, pl.Prior([0.5, 0.25, 0.25]))]
    for _ in range(25):
        n_x = int(rng.integers(2, 4))
        n_h = min(int(rng.integers(3, 9)), 2**n_x)
        inst = pl.random_instance(n_x, n_h, 2, rng=rng)
        cases.append((inst, pl.random_prior(inst, rng)))

    for inst, p in cases:
        budget = min(2, inst.n_examples)
        assert abs(
            pl.opt_avg(p, u, inst, budget).value - pl.opt_avg_naive(p, u, inst, budget)
        ) <= 1e-12
        assert abs(
            pl.opt_worst(p, u, inst, budget).value - pl.opt_worst_naive(p, u, inst, budget)
        ) <= 1e-12
        assert abs(
            pl.opt_min_cost(p, inst).value - pl.opt_min_cost_naive(p, inst)
        ) <= 1e-12

    assert pl.opt_min_cost(pl.uniform_prior(square), square).value == pytest.approx(
        2.0, abs=1e-12
    )
    _announce(8, "memoized and enumerated oracles agree")
