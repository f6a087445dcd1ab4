"""Exact optimal policies by exhaustive search on small instances.

Three oracles: maximum expected utility, maximum worst-case utility,
and minimum expected identification cost.  They exist to verify
approximation ratios and robustness bounds at desk scale, so instance
sizes are capped.  The memoized recursions key on the pair
(consistent-hypothesis set, available-example set); the queried set is
recoverable from the key, so no float ever enters a cache key.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .core import Instance, Prior, _check_prior
from .policies import PolicyNode, PolicyTree, policy_to_text, run_policy
from .utilities import Utility, eval_utility

EXAMPLE_CAP = 6
HYPOTHESIS_CAP = 16
BUDGET_CAP = 4


class SizeCapError(ValueError):
    """Instance exceeds the exhaustive-search size caps."""


class IdentificationError(ValueError):
    """A policy (or the pool itself) cannot separate two positive-mass hypotheses."""


@dataclass(frozen=True, eq=False)
class OptResult:
    """An optimal value, a policy attaining it, and the search effort."""

    value: float
    policy: PolicyTree
    nodes_explored: int

    def to_text(self) -> str:
        return f"value={self.value!r}\n" + policy_to_text(self.policy)


def f_avg(p: Prior, u: Utility, tree: PolicyTree) -> float:
    """Expected utility of a policy: E_{h~p}[ f_p(queried-on-h, h) ].

    The utility's internal prior is the same ``p`` the expectation is
    taken under.
    """
    inst = tree.instance
    _check_prior(p, inst)
    total = 0.0
    for h, prob in zip(inst.hypotheses, p.probs):
        queried, _, _ = run_policy(tree, h)
        total += float(prob) * eval_utility(u, p, inst, queried, h)
    return total


def f_worst(p: Prior, u: Utility, tree: PolicyTree) -> float:
    """Worst-case utility of a policy: the min over every hypothesis.

    The min ranges over all hypotheses in the instance, including
    zero-probability ones.
    """
    inst = tree.instance
    _check_prior(p, inst)
    return min(
        eval_utility(u, p, inst, run_policy(tree, h)[0], h) for h in inst.hypotheses
    )


def c_avg(p: Prior, tree: PolicyTree) -> float:
    """Expected identification cost of a policy under ``p``.

    Every positive-mass hypothesis must end its path as the unique
    consistent member of the support, else the policy does not identify
    and an :class:`IdentificationError` names an unresolved pair.
    """
    inst = tree.instance
    _check_prior(p, inst)
    support = set(int(i) for i in p.support)
    total = 0.0
    for hi in sorted(support):
        h = inst.hypotheses[hi]
        queried, labels, cost = run_policy(tree, h)
        row = inst.label_matrix[hi]
        q_idx = [inst.example_index[x] for x in queried]
        for other in sorted(support - {hi}):
            if all(inst.label_matrix[other, xi] == row[xi] for xi in q_idx):
                raise IdentificationError(
                    f"policy does not separate {h.id!r} from "
                    f"{inst.hypotheses[other].id!r}"
                )
        total += float(p.probs[hi]) * cost
    return total


def _check_caps(inst: Instance, example_cap: int, hypothesis_cap: int) -> None:
    if inst.n_examples > example_cap:
        raise SizeCapError(
            f"{inst.n_examples} examples exceeds the exhaustive-search cap {example_cap}"
        )
    if inst.n_hypotheses > hypothesis_cap:
        raise SizeCapError(
            f"{inst.n_hypotheses} hypotheses exceeds the exhaustive-search cap {hypothesis_cap}"
        )


def _queried_names(inst: Instance, avail: frozenset[int]) -> tuple[str, ...]:
    return tuple(inst.examples[i] for i in range(inst.n_examples) if i not in avail)


def _opt_coverage(
    p: Prior,
    u: Utility,
    inst: Instance,
    budget: int,
    worst_case: bool,
    example_cap: int,
    hypothesis_cap: int,
    budget_cap: int,
) -> OptResult:
    _check_prior(p, inst)
    _check_caps(inst, example_cap, hypothesis_cap)
    if budget > budget_cap:
        raise SizeCapError(f"budget {budget} exceeds the exhaustive-search cap {budget_cap}")
    if not 1 <= budget <= inst.n_examples:
        raise ValueError(f"budget must lie in [1, {inst.n_examples}], got {budget}")

    memo: dict[tuple[frozenset[int], frozenset[int]], tuple[float, PolicyNode | None]] = {}
    explored = 0

    def leaf_value(V: frozenset[int], avail: frozenset[int]) -> float:
        S = _queried_names(inst, avail)
        members = sorted(V)
        vals = [eval_utility(u, p, inst, S, inst.hypotheses[hi]) for hi in members]
        if worst_case:
            return min(vals)
        return sum(float(p.probs[hi]) * v for hi, v in zip(members, vals))

    def search(V: frozenset[int], avail: frozenset[int]) -> tuple[float, PolicyNode | None]:
        key = (V, avail)
        if key in memo:
            return memo[key]
        nonlocal explored
        explored += 1
        depth_used = inst.n_examples - len(avail)
        if depth_used == budget or not avail:
            result = (leaf_value(V, avail), None)
            memo[key] = result
            return result
        best_val, best_node = -math.inf, None
        for xi in sorted(avail):
            col = inst.label_matrix[:, xi]
            agg = math.inf if worst_case else 0.0
            children: list[PolicyNode | None] = []
            for yi in range(inst.n_labels):
                Vy = frozenset(hi for hi in V if col[hi] == yi)
                if not Vy:
                    children.append(None)
                    continue
                val, node = search(Vy, avail - {xi})
                children.append(node)
                agg = min(agg, val) if worst_case else agg + val
            if agg > best_val:
                best_val = agg
                best_node = PolicyNode(inst.examples[xi], tuple(children))
        memo[key] = (best_val, best_node)
        return memo[key]

    value, root = search(
        frozenset(range(inst.n_hypotheses)), frozenset(range(inst.n_examples))
    )
    return OptResult(value, PolicyTree(inst, root), explored)


def opt_avg(
    p: Prior,
    u: Utility,
    inst: Instance,
    budget: int,
    example_cap: int = EXAMPLE_CAP,
    hypothesis_cap: int = HYPOTHESIS_CAP,
    budget_cap: int = BUDGET_CAP,
) -> OptResult:
    """Exact maximizer of the expected utility over depth-``budget`` policies."""
    return _opt_coverage(p, u, inst, budget, False, example_cap, hypothesis_cap, budget_cap)


def opt_worst(
    p: Prior,
    u: Utility,
    inst: Instance,
    budget: int,
    example_cap: int = EXAMPLE_CAP,
    hypothesis_cap: int = HYPOTHESIS_CAP,
    budget_cap: int = BUDGET_CAP,
) -> OptResult:
    """Exact maximizer of the worst-case utility over depth-``budget`` policies."""
    return _opt_coverage(p, u, inst, budget, True, example_cap, hypothesis_cap, budget_cap)


def opt_min_cost(
    p: Prior,
    inst: Instance,
    example_cap: int = EXAMPLE_CAP,
    hypothesis_cap: int = HYPOTHESIS_CAP,
) -> OptResult:
    """Exact minimum expected number of queries to identify the truth.

    Dynamic program over version-space subsets of the support; a path
    stops as soon as the positive-mass version space is a singleton
    (zero-probability hypotheses do not extend paths).
    """
    _check_prior(p, inst)
    _check_caps(inst, example_cap, hypothesis_cap)

    memo: dict[frozenset[int], tuple[float, PolicyNode | None]] = {}
    explored = 0

    def search(V: frozenset[int]) -> tuple[float, PolicyNode | None]:
        # returns the support-mass-weighted remaining cost (unnormalized)
        if V in memo:
            return memo[V]
        nonlocal explored
        explored += 1
        if len(V) <= 1:
            memo[V] = (0.0, None)
            return memo[V]
        mass = float(p.probs[sorted(V)].sum())
        best_val, best_node = math.inf, None
        for xi in range(inst.n_examples):
            col = inst.label_matrix[:, xi]
            if len({int(col[hi]) for hi in V}) < 2:
                continue  # xi does not split V
            val = mass
            children: list[PolicyNode | None] = []
            for yi in range(inst.n_labels):
                Vy = frozenset(hi for hi in V if col[hi] == yi)
                if not Vy:
                    children.append(None)
                    continue
                sub_val, sub_node = search(Vy)
                val += sub_val
                children.append(sub_node)
            if val < best_val:
                best_val = val
                best_node = PolicyNode(inst.examples[xi], tuple(children))
        if best_node is None:
            pair = sorted(V)[:2]
            raise IdentificationError(
                f"no example separates {inst.hypotheses[pair[0]].id!r} from "
                f"{inst.hypotheses[pair[1]].id!r}"
            )
        memo[V] = (best_val, best_node)
        return memo[V]

    support = frozenset(int(i) for i in p.support)
    value, root = search(support)
    return OptResult(value, PolicyTree(inst, root), explored)


# ---------------------------------------------------------------------------
# Naive reference oracles: explicit policy enumeration evaluated through the
# policy-level evaluators.  Exponential; meant for |X| <= 3 cross-checks.


def _all_coverage_nodes(inst: Instance, avail: tuple[int, ...], depth_left: int):
    if depth_left == 0 or not avail:
        yield None
        return
    for xi in avail:
        rest = tuple(i for i in avail if i != xi)
        child_choices = [list(_all_coverage_nodes(inst, rest, depth_left - 1))] * inst.n_labels
        for kids in itertools.product(*child_choices):
            yield PolicyNode(inst.examples[xi], tuple(kids))


def opt_avg_naive(p: Prior, u: Utility, inst: Instance, budget: int) -> float:
    """Enumerate every depth-``budget`` policy and take the best expected utility."""
    best = -math.inf
    for root in _all_coverage_nodes(inst, tuple(range(inst.n_examples)), budget):
        best = max(best, f_avg(p, u, PolicyTree(inst, root)))
    return best


def opt_worst_naive(p: Prior, u: Utility, inst: Instance, budget: int) -> float:
    """Enumerate every depth-``budget`` policy and take the best worst-case utility."""
    best = -math.inf
    for root in _all_coverage_nodes(inst, tuple(range(inst.n_examples)), budget):
        best = max(best, f_worst(p, u, PolicyTree(inst, root)))
    return best


def _all_identification_nodes(inst: Instance, V: frozenset[int], avail: tuple[int, ...]):
    if len(V) <= 1:
        yield None
        return
    for xi in avail:
        col = inst.label_matrix[:, xi]
        if len({int(col[hi]) for hi in V}) < 2:
            continue
        rest = tuple(i for i in avail if i != xi)
        per_label = []
        for yi in range(inst.n_labels):
            Vy = frozenset(hi for hi in V if col[hi] == yi)
            if not Vy:
                per_label.append([None])
            else:
                per_label.append(list(_all_identification_nodes(inst, Vy, rest)))
        for kids in itertools.product(*per_label):
            yield PolicyNode(inst.examples[xi], tuple(kids))


def opt_min_cost_naive(p: Prior, inst: Instance) -> float:
    """Enumerate every identification tree over the support and take the cheapest."""
    support = frozenset(int(i) for i in p.support)
    best = math.inf
    found = False
    for root in _all_identification_nodes(inst, support, tuple(range(inst.n_examples))):
        found = True
        best = min(best, c_avg(p, PolicyTree(inst, root)))
    if not found:
        if len(support) <= 1:
            return 0.0
        pair = sorted(support)[:2]
        raise IdentificationError(
            f"no example separates {inst.hypotheses[pair[0]].id!r} from "
            f"{inst.hypotheses[pair[1]].id!r}"
        )
    return best


# ---------------------------------------------------------------------------
# Batch-restricted oracle: per round the policy commits to a fixed example
# set and only adapts between rounds.


def opt_avg_batch(
    p: Prior,
    u: Utility,
    inst: Instance,
    n_rounds: int,
    batch_size: int,
    example_cap: int = EXAMPLE_CAP,
    hypothesis_cap: int = HYPOTHESIS_CAP,
) -> OptResult:
    """Exact maximizer of expected utility over batch policies."""
    _check_prior(p, inst)
    _check_caps(inst, example_cap, hypothesis_cap)
    if n_rounds < 1 or batch_size < 1:
        raise ValueError("need at least one round and a positive batch size")
    if n_rounds * batch_size > inst.n_examples:
        raise SizeCapError("batch rounds exceed the pool size")

    memo: dict[tuple[frozenset[int], frozenset[int]], tuple[float, PolicyNode | None]] = {}
    explored = 0

    def leaf_value(V: frozenset[int], avail: frozenset[int]) -> float:
        S = _queried_names(inst, avail)
        return sum(
            float(p.probs[hi]) * eval_utility(u, p, inst, S, inst.hypotheses[hi])
            for hi in sorted(V)
        )

    def search(V: frozenset[int], avail: frozenset[int]) -> tuple[float, PolicyNode | None]:
        key = (V, avail)
        if key in memo:
            return memo[key]
        nonlocal explored
        explored += 1
        rounds_done = (inst.n_examples - len(avail)) // batch_size
        if rounds_done == n_rounds:
            memo[key] = (leaf_value(V, avail), None)
            return memo[key]
        best_val, best_node = -math.inf, None
        for batch in itertools.combinations(sorted(avail), batch_size):
            rest = avail - set(batch)

            def expand(V2: frozenset[int], pos: int) -> tuple[float, PolicyNode | None]:
                if pos == len(batch):
                    return search(V2, rest)
                xi = batch[pos]
                col = inst.label_matrix[:, xi]
                total = 0.0
                children: list[PolicyNode | None] = []
                for yi in range(inst.n_labels):
                    Vy = frozenset(hi for hi in V2 if col[hi] == yi)
                    if not Vy:
                        children.append(None)
                        continue
                    val, node = expand(Vy, pos + 1)
                    total += val
                    children.append(node)
                return total, PolicyNode(inst.examples[xi], tuple(children))

            val, node = expand(V, 0)
            if val > best_val:
                best_val, best_node = val, node
        memo[key] = (best_val, best_node)
        return memo[key]

    value, root = search(
        frozenset(range(inst.n_hypotheses)), frozenset(range(inst.n_examples))
    )
    return OptResult(value, PolicyTree(inst, root), explored)
