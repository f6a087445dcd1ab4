"""Why the robustness bounds insist on prior-Lipschitz utilities.

The pruning-count utility scores a query by how many above-threshold
hypotheses it rules out.  Because the threshold comparison is a hard
cutoff, an arbitrarily small prior shift can change the count by whole
units, and no bound of the form

    achieved >= alpha * optimal - C * l1(p0, p1)

can survive.  This script builds the two-example, four-hypothesis
instance where that failure is exact and prints every number involved.
"""

import poolal as pl

for mode in ("avg", "worst"):
    inst, p0, p1, report = pl.counterexample_instance(delta=0.1, mu=0.01, mode=mode)
    v = report.params
    print(f"--- {mode} case (threshold mu = {v['mu']}) ---")
    print(f"true prior     p0 = {list(p0.probs)}")
    print(f"perturbed      p1 = {list(p1.probs)}  (l1 distance {v['l1']:.3f})")
    print("policy pi0 queries x0, policy pi1 queries x1")
    print(f"  under p1: pi0 scores {v['f_p1_pi0']}, pi1 scores {v['f_p1_pi1']}"
          "  -> pi1 is exactly optimal for the perturbed prior")
    print(f"  under p0: pi1 scores {v['f_p0_pi1']}, pi0 scores {v['f_p0_pi0']}"
          "  -> the exact perturbed-prior policy is worthless under the truth")
    print(f"  bound with C = {v['C']}, alpha = {v['alpha']}: "
          f"achieved {report.lhs} < floor {report.rhs:.3f}"
          f"  -> violated: {not report.holds}")
    print()

print("shrinking delta makes the violation arbitrarily sharp:")
for delta in (0.1, 0.01, 0.001):
    _, _, _, report = pl.counterexample_instance(delta=delta, mode="avg")
    print(f"  delta = {delta:<6}: l1 = {report.params['l1']:.4f}, "
          f"floor - achieved = {report.rhs - report.lhs:.4f}")

print()
print("the same hard threshold shows up as an unbounded empirical Lipschitz ratio:")
square = pl.full_hypothesis_space(("x0", "x1"), ("0", "1"))
pair = pl.threshold_straddle_pair(square, mu=0.25, gap=0.004)
ratio = pl.lipschitz_probe(
    pl.PruningCount(0.25), square, trials=500, seed=13, pair_sampler=lambda rng: pair
)
print(f"  probed ratio {ratio:.1f} (a 1-Lipschitz utility would stay at 1)")
