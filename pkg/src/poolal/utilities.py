"""Utility functions over (queried set, hypothesis) pairs.

Three families: version-space reduction (the prior mass ruled out by
the observed labels), its loss-weighted generalization over hypothesis
pairs, and a pruning count with a hard probability threshold.  The
first two are Lipschitz continuous in the prior; the pruning count is
not, which is exactly what makes it useful as a counterexample.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Union

import numpy as np

from .core import (
    Hypothesis,
    Instance,
    Prior,
    _check_prior,
    random_prior,
)


@dataclass(frozen=True, eq=False)
class LossMatrix:
    """Symmetric nonnegative loss between labelings, zero on the diagonal.

    ``bound`` is the constant m that caps every entry; it feeds the
    Lipschitz constant 2m of the generalized reduction.
    """

    values: np.ndarray
    bound: float = 0.0

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("loss matrix must be square")
        if np.any(arr < 0):
            raise ValueError("losses must be nonnegative")
        if np.any(np.abs(arr - arr.T) > 1e-9):
            raise ValueError("loss matrix must be symmetric (tolerance 1e-9)")
        if np.any(np.diag(arr) != 0):
            raise ValueError("self-loss must be exactly 0")
        bound = float(self.bound) if self.bound else float(arr.max(initial=0.0))
        if np.any(arr > bound):
            raise ValueError(f"entries exceed the stated bound {bound}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "bound", bound)


def zero_one_loss(inst: Instance) -> LossMatrix:
    """1 whenever two labelings differ anywhere, else 0 (m = 1)."""
    n = inst.n_hypotheses
    return LossMatrix(np.ones((n, n)) - np.eye(n), bound=1.0)


def hamming_loss(inst: Instance) -> LossMatrix:
    """Fraction of the pool on which two labelings disagree (m = 1)."""
    lm = inst.label_matrix
    diff = (lm[:, None, :] != lm[None, :, :]).mean(axis=2)
    return LossMatrix(diff, bound=1.0)


def load_loss_matrix(path, inst: Instance | None = None) -> LossMatrix:
    """Read a comma-separated loss matrix in hypothesis order."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append([float(v) for v in line.strip().split(",")])
    arr = np.array(rows, dtype=float)
    if inst is not None and arr.shape != (inst.n_hypotheses, inst.n_hypotheses):
        raise ValueError(
            f"loss matrix is {arr.shape}, instance has {inst.n_hypotheses} hypotheses"
        )
    return LossMatrix(arr)


@dataclass(frozen=True)
class VersionSpaceReduction:
    """f_p(S, h) = 1 - p[h(S); S]: prior mass eliminated by h's labels on S."""


@dataclass(frozen=True, eq=False)
class GeneralizedReduction:
    """Loss-weighted mass over hypothesis pairs not both consistent with S."""

    loss: LossMatrix


@dataclass(frozen=True)
class PruningCount:
    """Number of above-threshold hypotheses that disagree with h on S.

    The threshold comparison is a strict ``>`` on the stored doubles
    with no tolerance: hypotheses sitting exactly at ``mu`` are
    excluded, which is what breaks Lipschitz continuity.
    """

    mu: float = 0.01

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("threshold must be nonnegative")


Utility = Union[VersionSpaceReduction, GeneralizedReduction, PruningCount]


def _agreement_mask(inst: Instance, S_idx: tuple[int, ...], h_idx: int) -> np.ndarray:
    """Hypotheses whose labels match hypothesis ``h_idx`` on the queried set."""
    if not S_idx:
        return np.ones(inst.n_hypotheses, dtype=bool)
    cols = inst.label_matrix[:, S_idx]
    return (cols == cols[h_idx]).all(axis=1)


def _resolve_set(inst: Instance, S: Iterable[str]) -> tuple[int, ...]:
    idx = set()
    for x in S:
        try:
            idx.add(inst.example_index[x])
        except KeyError:
            raise ValueError(f"unknown example {x!r}") from None
    return tuple(sorted(idx))


def eval_utility(
    u: Utility, p: Prior, inst: Instance, S: Iterable[str], h: Hypothesis
) -> float:
    """Evaluate a utility at (queried set ``S``, true labeling ``h``) under ``p``."""
    _check_prior(p, inst)
    h_idx = inst.hypothesis_index(h)
    S_idx = _resolve_set(inst, S)
    agree = _agreement_mask(inst, S_idx, h_idx)

    if isinstance(u, VersionSpaceReduction):
        return 1.0 - float(p.probs[agree].sum())

    if isinstance(u, GeneralizedReduction):
        L = u.loss.values
        if L.shape[0] != inst.n_hypotheses:
            raise ValueError("loss matrix does not match the instance")
        q = p.probs
        total = float(q @ L @ q)
        q_in = np.where(agree, q, 0.0)
        inside = float(q_in @ L @ q_in)
        return total - inside

    if isinstance(u, PruningCount):
        return float(np.count_nonzero((p.probs > u.mu) & ~agree))

    raise TypeError(f"unknown utility {u!r}")


def lipschitz_constant(u: Utility) -> tuple[float | None, float | None]:
    """(L, M): prior-Lipschitz constant and value bound, or (None, None).

    Version-space reduction is 1-Lipschitz and bounded by 1; the
    generalized form with loss bound m is 2m-Lipschitz and bounded by m.
    The pruning count has no finite Lipschitz constant.
    """
    if isinstance(u, VersionSpaceReduction):
        return 1.0, 1.0
    if isinstance(u, GeneralizedReduction):
        return 2.0 * u.loss.bound, u.loss.bound
    if isinstance(u, PruningCount):
        return None, None
    raise TypeError(f"unknown utility {u!r}")


def threshold_straddle_pair(
    inst: Instance, mu: float, gap: float = 0.004
) -> tuple[Prior, Prior]:
    """Two priors at l1 distance 2*gap whose second entry crosses ``mu``.

    One prior parks a hypothesis exactly at the threshold (excluded by
    the strict inequality), the other nudges it just above; the pruning
    count then jumps by a whole unit across an arbitrarily small l1
    step.
    """
    n = inst.n_hypotheses
    if n < 2:
        raise ValueError("need at least two hypotheses")
    if not 0.0 < mu < 0.5:
        raise ValueError("threshold must lie in (0, 0.5)")
    if not 0.0 < gap < (1.0 - 2.0 * mu) / 2.0:
        raise ValueError("gap too large for this threshold")
    low = np.zeros(n)
    low[0] = 1.0 - mu
    low[1] = mu
    high = np.zeros(n)
    high[0] = 1.0 - mu - gap
    high[1] = mu + gap
    return Prior(low), Prior(high)


def lipschitz_probe(
    u: Utility,
    inst: Instance,
    trials: int,
    seed: int,
    pair_sampler: Callable[[np.random.Generator], tuple[Prior, Prior]] | None = None,
) -> float:
    """Empirical lower bound on the prior-Lipschitz constant of ``u``.

    Samples (p, p', S, h) tuples and returns the largest observed
    ratio |f_p - f_p'| / l1(p, p'), skipping pairs closer than 1e-6.
    Deterministic given the seed.  ``pair_sampler`` overrides the
    default independent flat-simplex draws; use
    :func:`threshold_straddle_pair` to expose the pruning count's
    unbounded ratio.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        if pair_sampler is None:
            p, q = random_prior(inst, rng), random_prior(inst, rng)
        else:
            p, q = pair_sampler(rng)
        dist = float(np.abs(p.probs - q.probs).sum())
        if dist <= 1e-6:
            continue
        size = int(rng.integers(0, inst.n_examples + 1))
        S = tuple(
            inst.examples[i]
            for i in rng.choice(inst.n_examples, size=size, replace=False)
        )
        h = inst.hypotheses[int(rng.integers(inst.n_hypotheses))]
        diff = abs(eval_utility(u, p, inst, S, h) - eval_utility(u, q, inst, S, h))
        worst = max(worst, diff / dist)
    return worst
