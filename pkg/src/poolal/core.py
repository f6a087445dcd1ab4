"""Finite pools, labelings, and priors for Bayesian active learning.

The data model is deliberately explicit: a finite pool of examples, a
finite label set, and a concrete list of candidate labelings with a
probability vector over them.  Everything is immutable after
construction and all operations are pure functions; randomness always
flows through an explicit seed or :class:`numpy.random.Generator`, so
values are safe to share across threads.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

# Normalization tolerance for probability vectors produced anywhere in
# the package.  The instance file loader is looser (1e-6) and
# renormalizes exactly on read.
NORM_TOL = 1e-9
FILE_NORM_TOL = 1e-6

Pair = tuple[str, str]


class EmptyVersionSpaceError(ValueError):
    """An observation left no consistent hypothesis with positive mass."""


class InstanceFormatError(ValueError):
    """Malformed instance file; carries the offending line number."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Hypothesis:
    """A total labeling of the pool, stored in pool order."""

    id: str
    examples: tuple[str, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.examples) != len(self.labels):
            raise ValueError(
                f"hypothesis {self.id!r} must assign exactly one label per example"
            )

    @classmethod
    def from_mapping(
        cls,
        id: str,
        labeling: Mapping[str, str],
        examples: Sequence[str] | None = None,
    ) -> "Hypothesis":
        order = tuple(examples) if examples is not None else tuple(labeling)
        missing = [x for x in order if x not in labeling]
        if missing:
            raise ValueError(f"hypothesis {id!r} misses labels for {missing}")
        return cls(id, order, tuple(labeling[x] for x in order))

    @property
    def labeling(self) -> dict[str, str]:
        return dict(zip(self.examples, self.labels))

    def label_of(self, example: str) -> str:
        try:
            return self.labels[self.examples.index(example)]
        except ValueError:
            raise ValueError(f"unknown example {example!r}") from None


class Instance:
    """A pool, its label set, and an explicit hypothesis list.

    Hypotheses keep their declaration order; every probability vector in
    this package is index-parallel to ``hypotheses``.  Zero-probability
    hypotheses stay in the list: worst-case objectives and the
    pruning-count utility are sensitive to them.
    """

    def __init__(
        self,
        examples: Sequence[str],
        labels: Sequence[str],
        hypotheses: Sequence[Hypothesis],
    ):
        self.examples = tuple(str(x) for x in examples)
        self.labels = tuple(str(y) for y in labels)
        if len(self.examples) < 1:
            raise ValueError("an instance needs at least one example")
        if len(set(self.examples)) != len(self.examples):
            raise ValueError("duplicate example identifiers")
        if len(self.labels) < 2:
            raise ValueError("an instance needs at least two labels")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate label identifiers")
        if len(hypotheses) < 1:
            raise ValueError("an instance needs at least one hypothesis")

        self.example_index = {x: i for i, x in enumerate(self.examples)}
        self.label_index = {y: j for j, y in enumerate(self.labels)}

        aligned: list[Hypothesis] = []
        rows = np.empty((len(hypotheses), len(self.examples)), dtype=np.int16)
        seen_rows: dict[tuple[int, ...], str] = {}
        seen_ids: set[str] = set()
        for i, h in enumerate(hypotheses):
            if h.id in seen_ids:
                raise ValueError(f"duplicate hypothesis id {h.id!r}")
            seen_ids.add(h.id)
            if h.examples != self.examples:
                h = Hypothesis.from_mapping(h.id, h.labeling, self.examples)
            try:
                row = tuple(self.label_index[y] for y in h.labels)
            except KeyError as exc:
                raise ValueError(
                    f"hypothesis {h.id!r} uses unknown label {exc.args[0]!r}"
                ) from None
            if row in seen_rows:
                raise ValueError(
                    f"hypotheses {seen_rows[row]!r} and {h.id!r} are the same labeling"
                )
            seen_rows[row] = h.id
            rows[i] = row
            aligned.append(h)

        self.hypotheses = tuple(aligned)
        rows.setflags(write=False)
        self.label_matrix = rows
        self._row_index = {r: i for i, r in enumerate(seen_rows)}
        self._onehot: np.ndarray | None = None

    @property
    def label_onehot(self) -> np.ndarray:
        """Indicator matrix of shape (n_examples * n_labels, n_hypotheses).

        Row ``xi * n_labels + yi`` flags the hypotheses labeling example
        ``xi`` with label ``yi``; built lazily, it turns per-example
        marginals into a single matrix-vector product.
        """
        if self._onehot is None:
            n_h, n_x = self.label_matrix.shape
            flat = np.arange(n_x) * self.n_labels + self.label_matrix  # (H, X)
            onehot = np.zeros((n_x * self.n_labels, n_h))
            onehot[flat.ravel(), np.repeat(np.arange(n_h), n_x)] = 1.0
            onehot.setflags(write=False)
            self._onehot = onehot
        return self._onehot

    @property
    def n_examples(self) -> int:
        return len(self.examples)

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    @property
    def n_hypotheses(self) -> int:
        return len(self.hypotheses)

    def hypothesis_index(self, h: Hypothesis) -> int:
        """Index of ``h`` in this instance, matched by labeling."""
        if h.examples != self.examples:
            h = Hypothesis.from_mapping(h.id, h.labeling, self.examples)
        try:
            row = tuple(self.label_index[y] for y in h.labels)
            return self._row_index[row]
        except KeyError:
            raise ValueError(f"hypothesis {h.id!r} is not part of this instance") from None

    def __repr__(self) -> str:
        return (
            f"Instance({self.n_examples} examples, {self.n_labels} labels, "
            f"{self.n_hypotheses} hypotheses)"
        )


def full_hypothesis_space(
    examples: Sequence[str],
    labels: Sequence[str],
    ids: Sequence[str] | None = None,
) -> Instance:
    """All |Y|^|X| labelings of the pool, first example varying fastest."""
    examples = tuple(examples)
    labels = tuple(labels)
    total = len(labels) ** len(examples)
    if ids is not None and len(ids) != total:
        raise ValueError(f"need {total} ids, got {len(ids)}")
    hyps = []
    for i, combo in enumerate(itertools.product(labels, repeat=len(examples))):
        hid = ids[i] if ids is not None else f"h{i}"
        hyps.append(Hypothesis(hid, examples, combo[::-1]))
    return Instance(examples, labels, hyps)


def random_instance(
    n_examples: int,
    n_hypotheses: int,
    n_labels: int = 2,
    rng: np.random.Generator | int | None = None,
) -> Instance:
    """Hypotheses drawn uniformly without replacement from the full labeling space."""
    rng = np.random.default_rng(rng)
    total = n_labels**n_examples
    if not 1 <= n_hypotheses <= total:
        raise ValueError(f"n_hypotheses must be in [1, {total}]")
    examples = tuple(f"x{i}" for i in range(n_examples))
    labels = tuple(str(j) for j in range(n_labels))
    codes = rng.choice(total, size=n_hypotheses, replace=False)
    hyps = []
    for k, code in enumerate(codes):
        row = []
        c = int(code)
        for _ in range(n_examples):
            row.append(labels[c % n_labels])
            c //= n_labels
        hyps.append(Hypothesis(f"h{k}", examples, tuple(row)))
    return Instance(examples, labels, hyps)


@dataclass(frozen=True, eq=False)
class Prior:
    """Probability vector over an instance's hypotheses (used for posteriors too)."""

    probs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.probs, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("a prior is a non-empty 1-d probability vector")
        if np.any(arr < 0):
            raise ValueError("prior entries must be nonnegative")
        if abs(float(arr.sum()) - 1.0) > NORM_TOL:
            raise ValueError(f"prior must sum to 1 within {NORM_TOL}, got {arr.sum()!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    def __len__(self) -> int:
        return int(self.probs.size)

    @property
    def support(self) -> np.ndarray:
        """Indices of hypotheses with strictly positive mass."""
        return np.flatnonzero(self.probs > 0)


def uniform_prior(inst: Instance) -> Prior:
    n = inst.n_hypotheses
    return Prior(np.full(n, 1.0 / n))


def point_mass(inst: Instance, index: int) -> Prior:
    probs = np.zeros(inst.n_hypotheses)
    probs[index] = 1.0
    return Prior(probs)


def random_prior(inst: Instance, rng: np.random.Generator | int | None = None) -> Prior:
    """Flat (Dirichlet-1) random point on the probability simplex."""
    rng = np.random.default_rng(rng)
    return Prior(rng.dirichlet(np.ones(inst.n_hypotheses)))


@dataclass(frozen=True)
class LabeledSet:
    """Ordered (example, label) observations with distinct examples."""

    pairs: tuple[Pair, ...]

    def __post_init__(self):
        pairs = tuple((str(x), str(y)) for x, y in self.pairs)
        xs = [x for x, _ in pairs]
        if len(set(xs)) != len(xs):
            raise ValueError("labeled set repeats an example")
        object.__setattr__(self, "pairs", pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def examples(self) -> tuple[str, ...]:
        return tuple(x for x, _ in self.pairs)


def _as_pairs(observed: LabeledSet | Iterable[Pair]) -> tuple[Pair, ...]:
    if isinstance(observed, LabeledSet):
        return observed.pairs
    return LabeledSet(tuple(observed)).pairs


def _check_prior(p: Prior, inst: Instance) -> None:
    if len(p) != inst.n_hypotheses:
        raise ValueError(
            f"prior has {len(p)} entries for {inst.n_hypotheses} hypotheses"
        )


def _consistent_mask(inst: Instance, pairs: Iterable[Pair]) -> np.ndarray:
    mask = np.ones(inst.n_hypotheses, dtype=bool)
    for x, y in pairs:
        try:
            xi = inst.example_index[x]
        except KeyError:
            raise ValueError(f"unknown example {x!r}") from None
        try:
            yi = inst.label_index[y]
        except KeyError:
            raise ValueError(f"unknown label {y!r}") from None
        mask &= inst.label_matrix[:, xi] == yi
    return mask


def label_seq_prob(
    p: Prior, inst: Instance, S: Sequence[str], y: Sequence[str]
) -> float:
    """Probability that the example sequence ``S`` carries label sequence ``y``.

    Sums the prior mass of hypotheses whose labeling matches ``y`` on
    ``S``.  For a fixed ``S`` this is a distribution over label
    sequences; the empty sequence has probability 1.
    """
    S = tuple(S)
    y = tuple(y)
    if len(S) != len(y):
        raise ValueError(f"got {len(S)} examples but {len(y)} labels")
    _check_prior(p, inst)
    if not S:
        return 1.0
    mask = _consistent_mask(inst, zip(S, y))
    return float(p.probs[mask].sum())


def posterior(p: Prior, inst: Instance, observed: LabeledSet | Iterable[Pair]) -> Prior:
    """Bayes update: restrict ``p`` to hypotheses consistent with ``observed``.

    Raises :class:`EmptyVersionSpaceError` when no consistent hypothesis
    carries positive mass.  An empty observation set returns ``p``.
    """
    _check_prior(p, inst)
    pairs = _as_pairs(observed)
    if not pairs:
        return p
    mask = _consistent_mask(inst, pairs)
    mass = float(p.probs[mask].sum())
    if mass <= 0.0:
        raise EmptyVersionSpaceError(
            f"no positive-probability hypothesis is consistent with {pairs}"
        )
    return Prior(np.where(mask, p.probs, 0.0) / mass)


def l1_distance(p: Prior, q: Prior) -> float:
    """Total-variation-style l1 distance between two priors (at most 2)."""
    if len(p) != len(q):
        raise ValueError(f"dimension mismatch: {len(p)} vs {len(q)}")
    return float(np.abs(p.probs - q.probs).sum())


def label_marginals(p: Prior, inst: Instance) -> np.ndarray:
    """Per-example label distribution under ``p``, shape (n_examples, n_labels)."""
    _check_prior(p, inst)
    return (inst.label_onehot @ p.probs).reshape(inst.n_examples, inst.n_labels)


class ModelEnsemble:
    """Weighted finite set of probabilistic label predictors over a pool.

    ``probs[m, x, y]`` is member m's probability that example ``x``
    carries label ``y``; each member's per-example distribution must
    normalize.  Serves both as the source prior that induces a prior on
    labelings and as a probabilistic mixture component.
    """

    def __init__(self, instance: Instance, weights: Sequence[float], probs: np.ndarray):
        self.instance = instance
        w = np.array(weights, dtype=float)
        t = np.array(probs, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("need at least one member")
        if np.any(w < 0) or abs(float(w.sum()) - 1.0) > NORM_TOL:
            raise ValueError("member weights must be nonnegative and sum to 1")
        if t.shape != (w.size, instance.n_examples, instance.n_labels):
            raise ValueError(
                f"predictor table must have shape {(w.size, instance.n_examples, instance.n_labels)}"
            )
        if np.any(t < 0) or np.any(t > 1):
            raise ValueError("predictor probabilities must lie in [0, 1]")
        if np.any(np.abs(t.sum(axis=2) - 1.0) > NORM_TOL):
            raise ValueError("each predictor's label distribution must sum to 1")
        w.setflags(write=False)
        t.setflags(write=False)
        self.weights = w
        self.probs = t

    @classmethod
    def from_predictors(
        cls,
        instance: Instance,
        members: Iterable[tuple[float, Callable[[str, str], float]]],
    ) -> "ModelEnsemble":
        members = list(members)
        weights = [w for w, _ in members]
        table = np.empty((len(members), instance.n_examples, instance.n_labels))
        for m, (_, predictor) in enumerate(members):
            for xi, x in enumerate(instance.examples):
                for yi, y in enumerate(instance.labels):
                    table[m, xi, yi] = predictor(x, y)
        return cls(instance, weights, table)

    @property
    def n_members(self) -> int:
        return int(self.weights.size)

    def label_prob(self, x: str, y: str) -> float:
        """Ensemble-averaged probability that ``x`` carries label ``y``."""
        xi = self.instance.example_index[x]
        yi = self.instance.label_index[y]
        return float(self.weights @ self.probs[:, xi, yi])

    def reweighted(self, weights: np.ndarray) -> "ModelEnsemble":
        return ModelEnsemble(self.instance, weights, self.probs)


def induce_prior(ens: ModelEnsemble, inst: Instance) -> Prior:
    """Prior on labelings induced by a prior over probabilistic predictors.

    Each hypothesis gets the ensemble-averaged product probability of
    its labels.  On a full labeling space the masses already sum to 1;
    on a restricted hypothesis list the result is renormalized, i.e.
    conditioned on the truth lying in the list.
    """
    if ens.instance is not inst and (
        ens.instance.examples != inst.examples or ens.instance.labels != inst.labels
    ):
        raise ValueError("ensemble is bound to a different pool")
    cols = np.arange(inst.n_examples)
    mass = np.zeros(inst.n_hypotheses)
    for m in range(ens.n_members):
        per_example = ens.probs[m][cols[None, :], inst.label_matrix]
        mass += ens.weights[m] * per_example.prod(axis=1)
    total = float(mass.sum())
    if total <= 0.0:
        raise ValueError("ensemble assigns zero mass to every hypothesis")
    return Prior(mass / total)


def perturb(p: Prior, eps: float, seed: int) -> Prior:
    """A valid prior within l1 distance ``eps`` of ``p``, deterministic in ``seed``.

    Draws a signed direction in the simplex tangent space, scales it to
    a uniform radius in [0, eps], clips at zero and renormalizes, then
    verifies the l1 constraint (support may grow or shrink).  Retries up
    to 100 times before giving up.
    """
    if not 0.0 <= eps <= 2.0:
        raise ValueError(f"perturbation radius must lie in [0, 2], got {eps}")
    if eps == 0.0:
        return p
    rng = np.random.default_rng(seed)
    n = len(p)
    for _ in range(100):
        direction = rng.standard_normal(n)
        direction -= direction.mean()
        scale = float(np.abs(direction).sum())
        if scale < 1e-12:
            continue
        direction /= scale
        radius = rng.uniform(0.0, eps)
        moved = np.clip(p.probs + radius * direction, 0.0, None)
        total = float(moved.sum())
        if total <= 0.0:
            continue
        moved /= total
        if float(np.abs(moved - p.probs).sum()) <= eps:
            return Prior(moved)
    raise RuntimeError(f"could not sample a perturbation within radius {eps}")


def save_instance(path, inst: Instance, prior: Prior) -> None:
    """Write the comma-separated instance file (pool, labels, weighted labelings)."""
    _check_prior(prior, inst)
    for token in (*inst.examples, *inst.labels, *(h.id for h in inst.hypotheses)):
        if "," in token:
            raise ValueError(f"identifier {token!r} may not contain a comma")
    lines = [
        "examples," + ",".join(inst.examples),
        "labels," + ",".join(inst.labels),
    ]
    for h, prob in zip(inst.hypotheses, prior.probs):
        lines.append(f"h,{h.id},{float(prob)!r}," + ",".join(h.labels))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_instance(path) -> tuple[Instance, Prior]:
    """Read an instance file; hypothesis probabilities must sum to 1 within 1e-6."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read().splitlines()

    rows = [(i + 1, line) for i, line in enumerate(raw) if line.strip()]
    if len(rows) < 3:
        raise InstanceFormatError("expected an examples line, a labels line, and hypotheses")

    line_no, line = rows[0]
    fields = line.split(",")
    if fields[0] != "examples" or len(fields) < 2:
        raise InstanceFormatError("first line must be 'examples,<id>,...'", line_no)
    examples = tuple(fields[1:])

    line_no, line = rows[1]
    fields = line.split(",")
    if fields[0] != "labels" or len(fields) < 3:
        raise InstanceFormatError("second line must be 'labels,<id>,<id>,...'", line_no)
    labels = tuple(fields[1:])

    hyps: list[Hypothesis] = []
    probs: list[float] = []
    for line_no, line in rows[2:]:
        fields = line.split(",")
        if fields[0] != "h":
            raise InstanceFormatError(f"expected an 'h,...' line, got {fields[0]!r}", line_no)
        if len(fields) != 3 + len(examples):
            raise InstanceFormatError(
                f"expected {3 + len(examples)} fields, got {len(fields)}", line_no
            )
        try:
            prob = float(fields[2])
        except ValueError:
            raise InstanceFormatError(f"bad probability {fields[2]!r}", line_no) from None
        if prob < 0:
            raise InstanceFormatError(f"negative probability {prob!r}", line_no)
        probs.append(prob)
        hyps.append(Hypothesis(fields[1], examples, tuple(fields[3:])))

    total = sum(probs)
    if abs(total - 1.0) > FILE_NORM_TOL:
        raise InstanceFormatError(
            f"hypothesis probabilities sum to {total!r}, expected 1 within {FILE_NORM_TOL}"
        )
    try:
        inst = Instance(examples, labels, hyps)
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from None
    return inst, Prior(np.array(probs) / total)
