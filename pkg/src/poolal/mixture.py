"""Active learning with a mixture of priors, updated sequentially.

The state keeps one posterior per component plus a normalized weight
vector.  After each query the weights are reweighted by the components'
predictive probabilities for the observed label and each posterior does
its own Bayes update, so the state is an incremental factorization of
the posterior under the flattened mixture prior.  Components may be
deterministic (a prior over labelings) or probabilistic (a weighted
ensemble of per-example predictors).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .core import (
    EmptyVersionSpaceError,
    Instance,
    LabeledSet,
    ModelEnsemble,
    NORM_TOL,
    Prior,
    full_hypothesis_space,
    induce_prior,
    label_marginals,
    posterior,
)
from .policies import select_from_marginals

# Probabilistic components reuse the ensemble type: the member weights are
# the posterior over predictors and update by Bayes' rule like everything
# else here.
ProbabilisticEnsemble = ModelEnsemble

Component = Union[Prior, ModelEnsemble]


class ImpossibleObservationError(ValueError):
    """The oracle returned a label with zero probability under the mixture."""


@dataclass(frozen=True, eq=False)
class MixtureState:
    """Immutable snapshot of a mixture run: weights, posteriors, transcript."""

    instance: Instance
    weights: np.ndarray
    posteriors: tuple[Component, ...]
    step: int
    transcript: LabeledSet

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size != len(self.posteriors) or w.size == 0:
            raise ValueError("need one weight per component")
        if np.any(w < 0) or abs(float(w.sum()) - 1.0) > NORM_TOL:
            raise ValueError("component weights must be nonnegative and sum to 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def components(self) -> tuple[tuple[float, Component], ...]:
        return tuple(zip(self.weights.tolist(), self.posteriors))

    @property
    def n_components(self) -> int:
        return len(self.posteriors)


def initial_state(
    inst: Instance,
    components: Sequence[Component],
    weights: Sequence[float] | None = None,
) -> MixtureState:
    """Step-0 state; weights default to the uniform mixture."""
    comps = tuple(components)
    if not comps:
        raise ValueError("need at least one component")
    for c in comps:
        if isinstance(c, Prior):
            if len(c) != inst.n_hypotheses:
                raise ValueError("component prior does not match the instance")
        elif isinstance(c, ModelEnsemble):
            if c.instance.examples != inst.examples or c.instance.labels != inst.labels:
                raise ValueError("component ensemble is bound to a different pool")
        else:
            raise TypeError(f"unsupported component {c!r}")
    if weights is None:
        weights = np.full(len(comps), 1.0 / len(comps))
    return MixtureState(inst, np.asarray(weights, float), comps, 0, LabeledSet(()))


def _component_marginals(comp: Component, inst: Instance) -> np.ndarray:
    """Per-example label distribution of one component, shape (X, Y)."""
    if isinstance(comp, Prior):
        return label_marginals(comp, inst)
    return np.tensordot(comp.weights, comp.probs, axes=1)


def _component_update(comp: Component, inst: Instance, x: str, y: str) -> Component:
    if isinstance(comp, Prior):
        return posterior(comp, inst, [(x, y)])
    xi = inst.example_index[x]
    yi = inst.label_index[y]
    new_w = comp.weights * comp.probs[:, xi, yi]
    total = float(new_w.sum())
    if total <= 0.0:
        raise EmptyVersionSpaceError(f"ensemble assigns zero probability to {(x, y)}")
    return comp.reweighted(new_w / total)


def mixture_marginals(state: MixtureState, use_map: bool = False) -> np.ndarray:
    """Weighted per-example label distributions of the mixture, shape (X, Y)."""
    out = np.zeros((state.instance.n_examples, state.instance.n_labels))
    for i, (w, comp) in enumerate(state.components):
        if w == 0.0:
            continue
        table = (
            _map_component_marginals(state, i)
            if use_map
            else _component_marginals(comp, state.instance)
        )
        out += w * table
    return out


def mixture_marginal(state: MixtureState, x: str, y: str) -> float:
    """Mixture probability that ``x`` carries label ``y``."""
    inst = state.instance
    try:
        xi = inst.example_index[x]
        yi = inst.label_index[y]
    except KeyError as exc:
        raise ValueError(f"unknown example or label {exc.args[0]!r}") from None
    total = 0.0
    for w, comp in state.components:
        if w == 0.0:
            continue
        if isinstance(comp, Prior):
            mask = inst.label_matrix[:, xi] == yi
            total += w * float(comp.probs[mask].sum())
        else:
            total += w * float(comp.weights @ comp.probs[:, xi, yi])
    return total


def _map_component_marginals(state: MixtureState, i: int) -> np.ndarray:
    """Component i's marginals with the posterior replaced by its mode."""
    inst = state.instance
    comp = state.posteriors[i]
    if isinstance(comp, Prior):
        h_map = int(np.argmax(comp.probs))  # first index wins ties
        table = np.zeros((inst.n_examples, inst.n_labels))
        table[np.arange(inst.n_examples), inst.label_matrix[h_map]] = 1.0
        return table
    m_map = int(np.argmax(comp.weights))
    return np.array(comp.probs[m_map])


def map_approx_marginal(state: MixtureState, i: int, x: str, y: str) -> float:
    """Component i's predictive probability at (x, y) under its mode.

    Cheap stand-in for the exact posterior marginal: exact when the
    posterior is a point mass, an indicator otherwise.
    """
    if not 0 <= i < state.n_components:
        raise ValueError(f"component index {i} out of range")
    inst = state.instance
    xi = inst.example_index[x]
    yi = inst.label_index[y]
    return float(_map_component_marginals(state, i)[xi, yi])


def mixture_observe(state: MixtureState, x: str, y: str) -> MixtureState:
    """Fold one labeled observation into the weights and every posterior.

    Weights pick up the components' predictive probabilities for the
    observed label and renormalize; components that gave it probability
    zero keep their old posterior at weight zero.
    """
    inst = state.instance
    if x not in inst.example_index:
        raise ValueError(f"unknown example {x!r}")
    if y not in inst.label_index:
        raise ValueError(f"unknown label {y!r}")
    if x in state.transcript.examples:
        raise ValueError(f"example {x!r} was already queried")

    xi = inst.example_index[x]
    yi = inst.label_index[y]
    mask = inst.label_matrix[:, xi] == yi
    likelihoods = np.array(
        [
            float(comp.probs[mask].sum())
            if isinstance(comp, Prior)
            else float(comp.weights @ comp.probs[:, xi, yi])
            for comp in state.posteriors
        ]
    )
    new_weights = state.weights * likelihoods
    total = float(new_weights.sum())
    if total <= 0.0:
        raise ImpossibleObservationError(
            f"label {y!r} for example {x!r} has zero probability under the mixture"
        )
    new_weights = new_weights / total

    new_posteriors = []
    for comp, like, w in zip(state.posteriors, likelihoods, new_weights):
        if like > 0.0:
            new_posteriors.append(_component_update(comp, inst, x, y))
        else:
            new_posteriors.append(comp)  # dead component, weight is 0

    return MixtureState(
        inst,
        new_weights,
        tuple(new_posteriors),
        state.step + 1,
        LabeledSet(state.transcript.pairs + ((x, y),)),
    )


def mixture_step(
    state: MixtureState,
    criterion: str,
    oracle: Callable[[str], str],
    use_map: bool = False,
) -> MixtureState:
    """Select one example by ``criterion`` on the mixture marginals and observe it.

    ``use_map`` applies the mode approximation to the selection
    criterion only; the weight and posterior updates always use the
    exact predictive probabilities.
    """
    inst = state.instance
    queried = set(state.transcript.examples)
    candidates = [i for i, x in enumerate(inst.examples) if x not in queried]
    if not candidates:
        raise ValueError("no unqueried examples remain")
    marg = mixture_marginals(state, use_map=use_map)
    xi = select_from_marginals(criterion, marg, candidates)
    x = inst.examples[xi]
    return mixture_observe(state, x, oracle(x))


def mixture_predict(state: MixtureState, x: str, use_map: bool = False) -> str:
    """Label with the highest mixture marginal at ``x`` (lowest index on ties)."""
    inst = state.instance
    if x not in inst.example_index:
        raise ValueError(f"unknown example {x!r}")
    marg = mixture_marginals(state, use_map=use_map)[inst.example_index[x]]
    return inst.labels[int(np.argmax(marg))]


def run_mixture(
    inst: Instance,
    components: Sequence[Component],
    weights: Sequence[float] | None,
    criterion: str,
    budget: int,
    oracle: Callable[[str], str],
    use_map: bool = False,
) -> MixtureState:
    """Run ``budget`` sequential mixture steps and return the final state."""
    if not 0 <= budget <= inst.n_examples:
        raise ValueError(f"budget must lie in [0, {inst.n_examples}], got {budget}")
    state = initial_state(inst, components, weights)
    for _ in range(budget):
        state = mixture_step(state, criterion, oracle, use_map=use_map)
    return state


def flattened_prior(state: MixtureState) -> Prior:
    """The weighted sum of deterministic component posteriors as one prior."""
    if not all(isinstance(c, Prior) for c in state.posteriors):
        raise TypeError("flattening requires deterministic (prior) components")
    mix = np.zeros(state.instance.n_hypotheses)
    for w, comp in state.components:
        mix += w * comp.probs
    return Prior(mix)


# ---------------------------------------------------------------------------
# Synthetic parameter-grid task: one near-deterministic step predictor per
# grid point, differing in where the step sits.  The induced priors over
# the full labeling space serve as mixture components; marginal
# uncertainty then coincides with component disagreement, which is what
# gives adaptive querying its edge over passive selection.


def step_predictor_ensemble(
    inst: Instance, offset: float, noise: float = 0.02, sharpness: float = 4.0
) -> ModelEnsemble:
    """Single-member ensemble: P(label '1' at position i) steps up at ``offset``."""
    if inst.n_labels != 2:
        raise ValueError("step predictors are defined for binary labels")
    table = np.empty((1, inst.n_examples, 2))
    for i in range(inst.n_examples):
        p1 = noise + (1.0 - 2.0 * noise) / (1.0 + math.exp(-sharpness * (i - offset)))
        table[0, i, 1] = p1
        table[0, i, 0] = 1.0 - p1
    return ModelEnsemble(inst, [1.0], table)


@functools.lru_cache(maxsize=4)
def grid_task(
    n_examples: int = 16, n_components: int = 4
) -> tuple[Instance, tuple[Prior, ...]]:
    """A pool plus induced priors from an evenly spaced offset grid."""
    if n_examples < 2 or n_components < 1:
        raise ValueError("need at least two examples and one component")
    inst = full_hypothesis_space(
        tuple(f"x{i}" for i in range(n_examples)), ("0", "1")
    )
    spacing = n_examples / n_components
    offsets = [spacing * (j + 0.5) for j in range(n_components)]
    components = tuple(
        induce_prior(step_predictor_ensemble(inst, offset), inst) for offset in offsets
    )
    return inst, components


def sample_truth(
    inst: Instance,
    components: Sequence[Prior],
    rng: np.random.Generator,
    weights: Sequence[float] | None = None,
):
    """Draw a ground-truth labeling: pick a component, then a hypothesis from it."""
    k = len(components)
    w = np.full(k, 1.0 / k) if weights is None else np.asarray(weights, float)
    ci = int(rng.choice(k, p=w))
    hi = int(rng.choice(inst.n_hypotheses, p=components[ci].probs))
    return inst.hypotheses[hi]
