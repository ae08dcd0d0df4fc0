"""Domain types: instance spaces, datasets, hypotheses, distributions, sampling.

Every instance space is finite; a point is an integer index into it.
Hypotheses are materialized label vectors so that behavioural dedup and
shattering checks reduce to array operations.

Randomness: all draws go through :class:`RngStream`, a thin wrapper around
numpy's PCG64 bit generator seeded with ``SeedSequence(seed, spawn_key=stream)``.
Two streams with the same ``(seed, stream)`` pair produce identical draws, and
child streams are derived by extending the ``stream`` tuple.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .errors import CapacityError, DomainMismatchError, InvalidInputError

PROB_TOL = 1e-9

# Largest behaviour count any exhaustive search will materialize.
MAX_ENUMERATION = 1 << 20


@dataclass(frozen=True)
class InstanceSpace:
    """A finite instance space of ``size`` points indexed ``0..size-1``.

    ``payload`` optionally maps a point index to structured data, e.g. the
    ``(i, j)`` coordinate pair of the threshold class.
    """

    size: int
    payload: Optional[Callable[[int], object]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.size < 1:
            raise InvalidInputError("instance space must contain at least one point")

    def __len__(self):
        return self.size

    def __iter__(self):
        return iter(range(self.size))

    def describe(self, point: int):
        if self.payload is None:
            return point
        return self.payload(point)


class LabeledExample(NamedTuple):
    point: int
    label: int


class Dataset:
    """A multiset of labeled examples stored as two parallel arrays."""

    __slots__ = ("points", "labels")

    def __init__(self, points=(), labels=()):
        self.points = np.asarray(points, dtype=np.int64).reshape(-1)
        self.labels = np.asarray(labels, dtype=np.uint8).reshape(-1)
        if self.points.shape != self.labels.shape:
            raise InvalidInputError("points and labels differ in length")
        if self.labels.size and self.labels.max() > 1:
            raise InvalidInputError("labels must be 0 or 1")
        if self.points.size and self.points.min() < 0:
            raise DomainMismatchError("negative point index")

    @classmethod
    def _trusted(cls, points: np.ndarray, labels: np.ndarray) -> "Dataset":
        """Wrap already-validated int64 / uint8 arrays without copying or checks."""
        obj = object.__new__(cls)
        obj.points, obj.labels = points, labels
        return obj

    @classmethod
    def from_examples(cls, examples: Iterable[Sequence[int]]) -> "Dataset":
        examples = list(examples)
        if not examples:
            return cls()
        pts, labs = zip(*examples)
        return cls(pts, labs)

    @classmethod
    def concat(cls, datasets: Iterable["Dataset"]) -> "Dataset":
        datasets = list(datasets)
        if not datasets:
            return cls()
        return cls(
            np.concatenate([s.points for s in datasets]),
            np.concatenate([s.labels for s in datasets]),
        )

    def __len__(self):
        return int(self.points.size)

    def __iter__(self) -> Iterator[LabeledExample]:
        for p, y in zip(self.points.tolist(), self.labels.tolist()):
            yield LabeledExample(p, y)

    def __add__(self, other: "Dataset") -> "Dataset":
        return Dataset.concat([self, other])

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return np.array_equal(self.points, other.points) and np.array_equal(self.labels, other.labels)

    def __repr__(self):
        return f"Dataset({list(self)!r})"

    def distinct(self) -> "Dataset":
        """The underlying set (duplicates dropped, sorted by (point, label))."""
        if not len(self):
            return Dataset()
        pairs = np.unique(np.stack([self.points, self.labels.astype(np.int64)], axis=1), axis=0)
        return Dataset(pairs[:, 0], pairs[:, 1])

    def label_counts(self, size: int):
        """Per-point counts ``(zeros, ones)`` as float arrays of length ``size``."""
        if len(self) and self.points.max() >= size:
            raise DomainMismatchError(f"point {int(self.points.max())} outside space of size {size}")
        ones = np.bincount(self.points, weights=self.labels, minlength=size)
        total = np.bincount(self.points, minlength=size).astype(float)
        return total - ones, ones


@dataclass(frozen=True, eq=False)
class Hypothesis:
    """A total labeling of an instance space, stored as a uint8 vector.

    ``params`` is an optional human-readable parameterization (e.g. the
    threshold vector of the budgeted threshold class); it does not take part
    in equality.
    """

    labels: np.ndarray
    params: Optional[tuple] = None

    def __post_init__(self):
        arr = np.ascontiguousarray(self.labels, dtype=np.uint8)
        arr.setflags(write=False)
        object.__setattr__(self, "labels", arr)

    @property
    def size(self):
        return int(self.labels.size)

    def __call__(self, point: int) -> int:
        return int(self.labels[point])

    def key(self) -> bytes:
        return self.labels.tobytes()

    def __eq__(self, other):
        if not isinstance(other, Hypothesis):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        if self.params is not None:
            return f"Hypothesis(params={self.params})"
        if self.size <= 64:
            return f"Hypothesis({''.join(map(str, self.labels.tolist()))})"
        return f"Hypothesis(<{self.size} labels>)"

    def __xor__(self, other: "Hypothesis") -> "Hypothesis":
        return Hypothesis(self.labels ^ other.labels)


class DataDistribution:
    """Finite-support distribution over (point, label) pairs."""

    def __init__(self, points, labels, probs):
        self.points = np.asarray(points, dtype=np.int64).reshape(-1)
        self.labels = np.asarray(labels, dtype=np.uint8).reshape(-1)
        self.probs = np.asarray(probs, dtype=float).reshape(-1)
        if not (self.points.size == self.labels.size == self.probs.size):
            raise InvalidInputError("support arrays differ in length")
        if self.points.size == 0:
            raise InvalidInputError("distribution support is empty")
        if np.any(self.probs < 0) or np.any(self.probs > 1):
            raise InvalidInputError("probabilities must lie in [0, 1]")
        if abs(self.probs.sum() - 1.0) > PROB_TOL:
            raise InvalidInputError(f"probabilities sum to {self.probs.sum()!r}, not 1")
        keys = self.points * 2 + self.labels
        if np.unique(keys).size != keys.size:
            raise InvalidInputError("duplicate (point, label) entries in support")
        if np.any(self.labels > 1):
            raise InvalidInputError("labels must be 0 or 1")
        self._cdf = np.cumsum(self.probs)

    @classmethod
    def from_support(cls, support: Iterable[tuple]) -> "DataDistribution":
        """Build from ``(point, label, probability)`` triples."""
        pts, labs, ps = zip(*support)
        return cls(pts, labs, ps)

    @classmethod
    def uniform(cls, dataset: Dataset) -> "DataDistribution":
        """Uniform distribution over the distinct examples of ``dataset``."""
        s = dataset.distinct()
        return cls(s.points, s.labels, np.full(len(s), 1.0 / len(s)))

    @classmethod
    def labeled_by(cls, f: Hypothesis, marginal: dict, noise: float = 0.0) -> "DataDistribution":
        """Marginal ``{point: prob}`` labeled by ``f`` with flip probability ``noise``."""
        support = []
        for p, w in sorted(marginal.items()):
            if w <= 0:
                continue
            y = f(p)
            support.append((p, y, w * (1 - noise)))
            if noise > 0:
                support.append((p, 1 - y, w * noise))
        return cls.from_support(support)

    def __len__(self):
        return int(self.points.size)

    def __repr__(self):
        return f"DataDistribution(support={len(self)})"

    def marginal(self) -> dict:
        out: dict = {}
        for p, w in zip(self.points.tolist(), self.probs.tolist()):
            out[p] = out.get(p, 0.0) + w
        return out

    def is_deterministic(self) -> bool:
        return np.unique(self.points).size == self.points.size

    def draw(self, m: int, gen: np.random.Generator) -> Dataset:
        if m < 0:
            raise InvalidInputError("sample size must be non-negative")
        if m == 0:
            return Dataset()
        idx = np.searchsorted(self._cdf, gen.random(m), side="right")
        np.minimum(idx, self.points.size - 1, out=idx)
        return Dataset(self.points[idx], self.labels[idx])


@dataclass(frozen=True)
class RngStream:
    """Named, splittable random stream: PCG64 seeded by ``SeedSequence(seed, spawn_key=stream)``."""

    seed: int
    stream: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "stream", tuple(int(s) for s in self.stream))

    def child(self, *ids: int) -> "RngStream":
        return RngStream(self.seed, self.stream + tuple(ids))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed & ((1 << 64) - 1), spawn_key=self.stream)
        return np.random.Generator(np.random.PCG64(ss))


class SampleLedger:
    """Per-distribution draw counters with optional round bookkeeping."""

    def __init__(self, n: int):
        self.counts = [0] * n
        self.round_draws: list[int] = [0]

    @property
    def total(self) -> int:
        return sum(self.counts)

    def record(self, index: int, m: int):
        if m < 0:
            raise InvalidInputError("cannot record a negative number of draws")
        self.counts[index] += m
        self.round_draws[-1] += m

    def start_round(self):
        if self.round_draws[-1]:
            self.round_draws.append(0)

    def snapshot(self) -> dict:
        return {"counts": list(self.counts), "total": self.total, "round_draws": list(self.round_draws)}


def population_error(f: Hypothesis, dist: DataDistribution) -> float:
    if dist.points.max() >= f.size:
        raise DomainMismatchError("distribution support lies outside the hypothesis domain")
    wrong = f.labels[dist.points] != dist.labels
    return float(min(1.0, max(0.0, dist.probs[wrong].sum())))


def training_error(f: Hypothesis, data: Dataset) -> float:
    if not len(data):
        raise InvalidInputError("training error of an empty dataset is undefined")
    if data.points.max() >= f.size:
        raise DomainMismatchError("dataset lies outside the hypothesis domain")
    return float(np.count_nonzero(f.labels[data.points] != data.labels)) / len(data)


def sample(dist: DataDistribution, m: int, rng, ledger: Optional[SampleLedger] = None, source: int = 0) -> Dataset:
    """Draw ``m`` i.i.d. examples by inverse CDF over the support order.

    ``rng`` may be an :class:`RngStream` (a fresh generator is created, so the
    call is reproducible in isolation) or a live ``numpy`` generator.
    """
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    data = dist.draw(m, gen)
    if ledger is not None:
        ledger.record(source, m)
    return data


class SamplingOracle:
    """Adaptive sample access to ``n`` distributions with one stream each.

    Every draw is charged to the ledger. ``mixture_stream`` drives the choice
    of source index when sampling from a uniform mixture.
    """

    def __init__(self, distributions: Sequence[DataDistribution], rng: RngStream, ledger: Optional[SampleLedger] = None):
        self.distributions = list(distributions)
        self.ledger = ledger if ledger is not None else SampleLedger(len(self.distributions))
        self._gens = [rng.child(i).generator() for i in range(len(self.distributions))]
        self._mix = rng.child(len(self.distributions), 0).generator()
        self.max_samples: Optional[int] = None

    def __len__(self):
        return len(self.distributions)

    def draw(self, i: int, m: int) -> Dataset:
        m = int(m)
        if self.max_samples is not None and self.ledger.total + m > self.max_samples:
            raise SampleCapExceeded(self.ledger.total + m)
        data = self.distributions[i].draw(m, self._gens[i])
        self.ledger.record(i, m)
        return data

    def draw_mixture(self, active: Sequence[int], m: int) -> dict:
        """Sample ``m`` tagged examples from the uniform mixture over ``active``.

        Each draw picks a source uniformly from ``active`` and then an example
        from that source. Returns ``{index: Dataset}`` for every active index.
        """
        active = list(active)
        picks = self._mix.integers(0, len(active), size=int(m))
        counts = np.bincount(picks, minlength=len(active))
        return {i: self.draw(i, int(c)) for i, c in zip(active, counts.tolist())}


class SampleCapExceeded(Exception):
    """Raised inside learners when a hard sample cap would be exceeded."""


def realizability_check(distributions: Sequence[DataDistribution], F, k: int, eps: float):
    """Exhaustively decide (k, eps)-realizability of ``distributions`` w.r.t. ``F``.

    Returns ``(True, (hypotheses, assignment))`` or ``(False, None)``.
    ``assignment[i]`` is the 0-based index into ``hypotheses`` serving
    distribution ``i``.
    """
    if k < 1:
        raise InvalidInputError("k must be at least 1")
    table = F.behaviors()
    n = len(distributions)
    errs = np.empty((n, table.shape[0]))
    for i, dist in enumerate(distributions):
        if dist.points.max() >= table.shape[1]:
            raise DomainMismatchError("distribution support lies outside the class's space")
        wrong = table[:, dist.points] != dist.labels[None, :]
        errs[i] = wrong.astype(float) @ dist.probs
    ok = errs <= eps + 1e-12
    # Distinct coverage patterns (as bitmasks over distributions), first behaviour wins.
    uniq, first = np.unique(ok.T, axis=0, return_index=True)
    patterns = {}
    for row, h in sorted(zip(uniq.tolist(), first.tolist()), key=lambda t: t[1]):
        mask = sum(1 << i for i, c in enumerate(row) if c)
        if mask:
            patterns.setdefault(mask, h)
    full = (1 << n) - 1
    masks = sorted(patterns, key=lambda m: -bin(m).count("1"))

    def search(covered, depth, chosen):
        if covered == full:
            return chosen
        if depth == k:
            return None
        low = (~covered) & (covered + 1)
        for m in masks:
            if m & low:
                res = search(covered | m, depth + 1, chosen + [m])
                if res is not None:
                    return res
        return None

    chosen = search(0, 0, [])
    if chosen is None:
        return False, None
    hyps = [Hypothesis(table[patterns[m]]) for m in chosen]
    assignment = []
    for i in range(n):
        assignment.append(next(j for j, m in enumerate(chosen) if (m >> i) & 1))
    while len(hyps) < k:
        hyps.append(hyps[0])
    return True, (hyps, assignment)


def ceil_count(x: float) -> int:
    """Sample counts from real-valued formulas: rounded up, never negative."""
    if not math.isfinite(x):
        raise InvalidInputError(f"non-finite sample size {x!r}")
    return max(0, math.ceil(x - 1e-9))
