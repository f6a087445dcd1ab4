"""Greedy query selection against the exact oracle, on instances small
enough to solve by brute force.

Walks through: building an instance, materializing greedy policy trees
for three criteria, and comparing their scores with the exhaustive
optimum.  The greedy expected version-space reduction is guaranteed to
land within a factor 1 - 1/e of optimal; here you can watch how close
it actually gets.
"""

import numpy as np

import poolal as pl

rng = np.random.default_rng(7)

# A five-example binary pool with ten candidate labelings and a random prior.
inst = pl.random_instance(n_examples=5, n_hypotheses=10, n_labels=2, rng=rng)
prior = pl.random_prior(inst, rng)
u = pl.VersionSpaceReduction()
budget = 3

print(f"instance: {inst}")
print(f"prior: {np.round(prior.probs, 3)}")
print()

exact = pl.opt_avg(prior, u, inst, budget)
print(f"exact optimum (expected utility, budget {budget}): {exact.value:.6f}")
print(f"  search explored {exact.nodes_explored} states")
print()

for criterion in ("max_gibbs", "least_confidence", "max_entropy"):
    tree = pl.build_policy(criterion, prior, inst, budget)
    score = pl.f_avg(prior, u, tree)
    print(f"{criterion:18s} expected utility {score:.6f}  "
          f"({score / exact.value:.1%} of optimal)")

print()
print("the greedy max-Gibbs tree:")
print(pl.policy_to_text(pl.build_policy("max_gibbs", prior, inst, 2)))

# The worst-case objective tells the same story with a min over labelings.
exact_w = pl.opt_worst(prior, u, inst, budget)
tree = pl.build_policy("least_confidence", prior, inst, budget)
print(f"worst-case: greedy {pl.f_worst(prior, u, tree):.6f} "
      f"vs optimal {exact_w.value:.6f}")

# Identification: expected number of queries to pin down the truth.
exact_c = pl.opt_min_cost(prior, inst)
gbs_tree = pl.build_policy("gbs", prior, inst, inst.n_examples, stop_when_identified=True)
print(f"identification: greedy splitting {pl.c_avg(prior, gbs_tree):.6f} "
      f"vs optimal {exact_c.value:.6f} "
      f"(guarantee factor {pl.gbs_alpha(prior):.2f})")
