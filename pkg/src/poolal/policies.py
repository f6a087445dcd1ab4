"""Adaptive query policies: greedy selection rules and policy trees.

A policy tree queries one example per internal node and branches on the
observed label.  Trees built here are total over label outcomes; label
branches that no hypothesis can produce are marked unreachable (no
child).  Every tie anywhere breaks toward the lowest pool index, so
identical inputs always yield identical trees and transcripts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import (
    Hypothesis,
    Instance,
    Prior,
    _check_prior,
    label_marginals,
    posterior,
)
from .utilities import LossMatrix, zero_one_loss

CRITERIA = ("max_gibbs", "least_confidence", "max_entropy", "gbs", "worst_gen_gibbs")


@dataclass(frozen=True)
class PolicyNode:
    """Internal tree node: the example to query and one child slot per label."""

    example: str
    children: tuple["PolicyNode | None", ...]


@dataclass(frozen=True, eq=False)
class PolicyTree:
    """An adaptive querying strategy over a fixed instance.

    ``root is None`` is the empty policy (query nothing), the recursion
    base for zero budgets and already-identified version spaces.
    """

    instance: Instance
    root: PolicyNode | None


@dataclass(frozen=True, eq=False)
class Transcript:
    """The (example, label) sequence a run observed, plus the final posterior."""

    pairs: tuple[tuple[str, str], ...]
    final_posterior: Prior


def _entropy(row: np.ndarray) -> float:
    nz = row[row > 0]
    return float(-(nz * np.log(nz)).sum())


def select_from_marginals(
    criterion: str,
    marginals: np.ndarray,
    candidates: Sequence[int],
) -> int:
    """Pick a pool index from per-example label distributions.

    Supports the marginal-computable criteria; ``gbs`` uses the
    most-even-split rule on binary labels and falls back to least
    confidence on the version-space marginals otherwise.  First
    candidate wins ties (candidates must be in ascending pool order).
    """
    if len(candidates) == 0:
        raise ValueError("no examples available to select from")

    if criterion == "max_gibbs":
        score = lambda xi: 1.0 - float((marginals[xi] ** 2).sum())
        maximize = True
    elif criterion == "least_confidence":
        score = lambda xi: float(marginals[xi].max())
        maximize = False
    elif criterion == "max_entropy":
        score = lambda xi: _entropy(marginals[xi])
        maximize = True
    elif criterion == "gbs":
        if marginals.shape[1] == 2:
            score = lambda xi: abs(float(marginals[xi, 1] - marginals[xi, 0]))
        else:
            score = lambda xi: float(marginals[xi].max())
        maximize = False
    else:
        raise ValueError(f"criterion {criterion!r} is not marginal-computable")

    best_xi = None
    best = -math.inf if maximize else math.inf
    for xi in candidates:
        s = score(xi)
        if (maximize and s > best) or (not maximize and s < best):
            best, best_xi = s, xi
    return best_xi


def _worst_gen_gibbs_index(
    p: Prior, inst: Instance, candidates: Sequence[int], loss: LossMatrix
) -> int:
    """argmax over x of the worst-case one-query generalized reduction.

    For each candidate the gain under an observable label y is the
    loss-weighted pair mass broken by that observation; the score is
    the minimum over labels with positive marginal probability.
    """
    L = loss.values
    q = p.probs
    total = float(q @ L @ q)
    best_xi, best = None, -math.inf
    for xi in candidates:
        worst_gain = math.inf
        col = inst.label_matrix[:, xi]
        for yi in range(inst.n_labels):
            consistent = col == yi
            mass = float(q[consistent].sum())
            if mass <= 0.0:
                continue
            q_in = np.where(consistent, q, 0.0)
            gain = total - float(q_in @ L @ q_in)
            worst_gain = min(worst_gain, gain)
        if worst_gain > best:
            best, best_xi = worst_gain, xi
    return best_xi


def select(
    criterion: str,
    p: Prior,
    inst: Instance,
    available: Iterable[str],
    loss: LossMatrix | None = None,
) -> str:
    """Choose the next example to query from ``available``.

    Criteria: ``max_gibbs`` (greedy expected version-space reduction),
    ``least_confidence`` (its worst-case sibling), ``max_entropy``,
    ``gbs`` (most-even split), and ``worst_gen_gibbs`` (worst-case
    generalized reduction; ``loss`` defaults to 0-1).
    """
    _check_prior(p, inst)
    try:
        candidates = sorted(inst.example_index[x] for x in set(available))
    except KeyError as exc:
        raise ValueError(f"unknown example {exc.args[0]!r}") from None
    if not candidates:
        raise ValueError("no examples available to select from")

    if criterion == "worst_gen_gibbs":
        xi = _worst_gen_gibbs_index(p, inst, candidates, loss or zero_one_loss(inst))
    elif criterion in CRITERIA:
        xi = select_from_marginals(criterion, label_marginals(p, inst), candidates)
    else:
        raise ValueError(f"unknown criterion {criterion!r}; expected one of {CRITERIA}")
    return inst.examples[xi]


def _joint_gibbs_error(p: Prior, inst: Instance, batch_idx: Sequence[int]) -> float:
    """Gibbs error of the joint label sequence of a batch: 1 - sum_y p[y;B]^2."""
    rows = inst.label_matrix[:, tuple(batch_idx)]
    _, inverse = np.unique(rows, axis=0, return_inverse=True)
    masses = np.bincount(inverse, weights=p.probs)
    return 1.0 - float((masses**2).sum())


def select_batch_max_gibbs(
    p: Prior, inst: Instance, available: Iterable[str], batch_size: int
) -> tuple[str, ...]:
    """Greedily grow a batch maximizing the joint-label Gibbs error."""
    _check_prior(p, inst)
    remaining = sorted(inst.example_index[x] for x in set(available))
    if not 1 <= batch_size <= len(remaining):
        raise ValueError(
            f"batch size {batch_size} out of range for {len(remaining)} available examples"
        )
    batch: list[int] = []
    for _ in range(batch_size):
        best_xi, best = None, -math.inf
        for xi in remaining:
            s = _joint_gibbs_error(p, inst, batch + [xi])
            if s > best:
                best, best_xi = s, xi
        batch.append(best_xi)
        remaining.remove(best_xi)
    return tuple(inst.examples[i] for i in batch)


def _branch_posterior(
    q: Prior, inst: Instance, consistent: np.ndarray, mask_xy: np.ndarray
) -> Prior:
    """Posterior handed down a label branch.

    Positive-mass branches get the renormalized Bayes restriction of
    the parent posterior; zero-mass branches (reachable only by
    zero-probability hypotheses) fall back to the uniform distribution
    over the branch-consistent set so worst-case traversals still have
    a well-defined selection rule below them.
    """
    mass = float(q.probs[mask_xy].sum())
    if mass > 0.0:
        return Prior(np.where(mask_xy, q.probs, 0.0) / mass)
    fallback = np.where(consistent, 1.0, 0.0)
    return Prior(fallback / fallback.sum())


def build_policy(
    criterion: str,
    p: Prior,
    inst: Instance,
    budget: int,
    loss: LossMatrix | None = None,
    stop_when_identified: bool = False,
) -> PolicyTree:
    """Materialize the greedy adaptive policy as a tree of depth ``budget``.

    Paths have uniform length ``budget`` except when
    ``stop_when_identified`` is set (the identification mode used by
    ``gbs``), where a path ends as soon as the positive-mass version
    space is a singleton.
    """
    _check_prior(p, inst)
    if not 1 <= budget <= inst.n_examples:
        raise ValueError(f"budget must lie in [1, {inst.n_examples}], got {budget}")

    def grow(q: Prior, consistent: np.ndarray, avail: tuple[int, ...], depth_left: int):
        if depth_left == 0 or not avail:
            return None
        if stop_when_identified and len(q.support) <= 1:
            return None
        x = select(criterion, q, inst, (inst.examples[i] for i in avail), loss)
        xi = inst.example_index[x]
        rest = tuple(i for i in avail if i != xi)
        children = []
        for yi in range(inst.n_labels):
            on_branch = consistent & (inst.label_matrix[:, xi] == yi)
            if not on_branch.any():
                children.append(None)
                continue
            q_child = _branch_posterior(q, inst, on_branch, inst.label_matrix[:, xi] == yi)
            # the child's posterior zeroes everything off the branch, so
            # restrict explicitly only for the consistency bookkeeping
            children.append(grow(q_child, on_branch, rest, depth_left - 1))
        return PolicyNode(x, tuple(children))

    all_consistent = np.ones(inst.n_hypotheses, dtype=bool)
    root = grow(p, all_consistent, tuple(range(inst.n_examples)), budget)
    return PolicyTree(inst, root)


def build_batch_policy(
    p: Prior, inst: Instance, n_rounds: int, batch_size: int
) -> PolicyTree:
    """Greedy batch policy: per round, a jointly-chosen batch queried blind.

    Within a round the batch members are queried in selection order
    regardless of the labels seen; adaptation happens only between
    rounds.  Total depth is ``n_rounds * batch_size``.
    """
    _check_prior(p, inst)
    if n_rounds < 1 or batch_size < 1:
        raise ValueError("need at least one round and a positive batch size")
    if n_rounds * batch_size > inst.n_examples:
        raise ValueError("batch rounds exceed the pool size")

    def grow_round(q: Prior, consistent: np.ndarray, avail: tuple[int, ...], rounds_left: int):
        if rounds_left == 0 or len(avail) < batch_size:
            return None
        batch = select_batch_max_gibbs(
            q, inst, (inst.examples[i] for i in avail), batch_size
        )
        batch_idx = tuple(inst.example_index[x] for x in batch)
        rest = tuple(i for i in avail if i not in batch_idx)

        def grow_within(q2: Prior, cons2: np.ndarray, pos: int):
            if pos == len(batch_idx):
                return grow_round(q2, cons2, rest, rounds_left - 1)
            xi = batch_idx[pos]
            children = []
            for yi in range(inst.n_labels):
                on_branch = cons2 & (inst.label_matrix[:, xi] == yi)
                if not on_branch.any():
                    children.append(None)
                    continue
                q_child = _branch_posterior(q2, inst, on_branch, inst.label_matrix[:, xi] == yi)
                children.append(grow_within(q_child, on_branch, pos + 1))
            return PolicyNode(inst.examples[xi], tuple(children))

        return grow_within(q, consistent, 0)

    all_consistent = np.ones(inst.n_hypotheses, dtype=bool)
    root = grow_round(p, all_consistent, tuple(range(inst.n_examples)), n_rounds)
    return PolicyTree(inst, root)


def run_policy(
    tree: PolicyTree, h: Hypothesis
) -> tuple[tuple[str, ...], tuple[str, ...], int]:
    """Follow ``h``'s labels down the tree: (queried, labels, cost)."""
    inst = tree.instance
    labeling = h.labeling
    queried: list[str] = []
    labels: list[str] = []
    node = tree.root
    while node is not None:
        x = node.example
        try:
            y = labeling[x]
        except KeyError:
            raise ValueError(f"hypothesis {h.id!r} does not label example {x!r}") from None
        queried.append(x)
        labels.append(y)
        node = node.children[inst.label_index[y]]
    return tuple(queried), tuple(labels), len(queried)


def greedy_transcript(
    criterion: str,
    p: Prior,
    inst: Instance,
    budget: int,
    truth: Hypothesis,
    loss: LossMatrix | None = None,
) -> Transcript:
    """Run the greedy criterion live against a ground-truth labeling.

    Equivalent to materializing the policy tree and following
    ``truth``'s path, but without building the unvisited branches.
    """
    _check_prior(p, inst)
    if not 0 <= budget <= inst.n_examples:
        raise ValueError(f"budget must lie in [0, {inst.n_examples}], got {budget}")
    q = p
    pairs: list[tuple[str, str]] = []
    avail = set(inst.examples)
    labeling = truth.labeling
    for _ in range(budget):
        if not avail:
            break
        x = select(criterion, q, inst, avail, loss)
        y = labeling[x]
        q = posterior(q, inst, [(x, y)])
        pairs.append((x, y))
        avail.discard(x)
    return Transcript(tuple(pairs), q)


def policy_to_text(tree: PolicyTree) -> str:
    """Serialize a tree as one '<depth>,<example>,<edge-label>' line per node."""
    inst = tree.instance
    lines: list[str] = []

    def walk(node: PolicyNode, depth: int, edge: str) -> None:
        lines.append(f"{depth},{node.example},{edge}")
        for yi, child in enumerate(node.children):
            if child is not None:
                walk(child, depth + 1, inst.labels[yi])

    if tree.root is not None:
        walk(tree.root, 0, "")
    return "\n".join(lines) + ("\n" if lines else "")
