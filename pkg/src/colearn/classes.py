"""Concrete hypothesis classes.

Each class answers three kinds of query:

* ``behaviors()`` -- the behaviourally distinct hypotheses as a 0/1 matrix,
  in a fixed enumeration order (only for classes small enough to list);
* ``evidence(S)`` / ``evidence_feasible(E)`` -- a fixed-length integer
  summary of a dataset such that the summary of a union is the elementwise
  maximum of the parts' summaries, and realizability of the union can be
  read off the merged summary. This is what lets the augmented ERM solver
  memoize realizability over thousands of dataset groupings cheaply;
* ``consistent_hypothesis(S)`` and ``erm(S)``.

Closed-form structure is used where a class has it (all labelings, the
budgeted thresholds) so that large instances never get enumerated.
"""

from __future__ import annotations

from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .core import MAX_ENUMERATION, Dataset, Hypothesis, InstanceSpace
from .errors import CapacityError, DomainMismatchError, InvalidInputError, NotTwoRefutable

ALL_FUNCTIONS_ENUM_CAP = 20


def _dedup_rows(table: np.ndarray) -> np.ndarray:
    """Drop duplicate rows, keeping first occurrences in their original order."""
    _, first = np.unique(table, axis=0, return_index=True)
    return table[np.sort(first)]


class HypothesisClass:
    """Base class; subclasses backed by an explicit behaviour table need only
    implement ``_build_behaviors``."""

    kind = "abstract"
    two_refutable = False
    witness: Optional[tuple] = None

    def __init__(self, space: InstanceSpace):
        self.space = space

    # -- enumeration -----------------------------------------------------
    @property
    def enumerable(self) -> bool:
        try:
            n = self.behavior_count_hint()
        except CapacityError:
            return False
        return n is not None and n <= MAX_ENUMERATION

    def behavior_count_hint(self) -> Optional[int]:
        return None

    @cached_property
    def _table(self) -> np.ndarray:
        table = np.ascontiguousarray(self._build_behaviors(), dtype=np.uint8)
        table.setflags(write=False)
        return table

    def behaviors(self) -> np.ndarray:
        return self._table

    def _build_behaviors(self) -> np.ndarray:
        raise CapacityError(f"{self.kind} class cannot be enumerated")

    def hypotheses(self):
        return [Hypothesis(row) for row in self.behaviors()]

    @cached_property
    def _table_f(self) -> np.ndarray:
        return self.behaviors().astype(np.float64)

    def _mistakes(self, data: Dataset) -> np.ndarray:
        zeros, ones = data.label_counts(self.space.size)
        t = self._table_f
        return t @ zeros + (1.0 - t) @ ones

    # -- dataset queries -------------------------------------------------
    @property
    def evidence_length(self) -> int:
        return self.behaviors().shape[0]

    def evidence(self, data: Dataset) -> np.ndarray:
        """Indicator of behaviours inconsistent with ``data``."""
        return (self._mistakes(data) > 0).astype(np.int64)

    def evidence_feasible(self, ev: np.ndarray) -> np.ndarray:
        ev = np.atleast_2d(ev)
        return (ev == 0).any(axis=1)

    def evidence_matrix(self, datasets: Sequence[Dataset]) -> np.ndarray:
        """One evidence row per dataset."""
        return np.stack([self.evidence(s) for s in datasets])

    def empty_evidence(self) -> np.ndarray:
        return self._empty_evidence

    @cached_property
    def _empty_evidence(self) -> np.ndarray:
        ev = self.evidence(Dataset())
        ev.setflags(write=False)
        return ev

    def realizable(self, data: Dataset) -> bool:
        return bool(self.evidence_feasible(self.evidence(data))[0])

    def consistent_hypothesis(self, data: Dataset) -> Optional[Hypothesis]:
        mistakes = self._mistakes(data)
        hits = np.flatnonzero(mistakes == 0)
        if hits.size == 0:
            return None
        return Hypothesis(self.behaviors()[hits[0]])

    def erm(self, data: Dataset) -> Hypothesis:
        """Training-error minimizer; ties go to the earliest behaviour."""
        return Hypothesis(self.behaviors()[int(np.argmin(self._mistakes(data)))])

    def random_behaviors(self, k: int, gen: np.random.Generator) -> list:
        table = self.behaviors()
        if k > table.shape[0]:
            raise CapacityError(f"class has only {table.shape[0]} behaviours, cannot plant {k}")
        rows = gen.choice(table.shape[0], size=k, replace=False)
        return [Hypothesis(table[r]) for r in rows]

    # -- metadata --------------------------------------------------------
    @cached_property
    def vc_dim(self) -> int:
        from .vcdim import vc_dimension

        return vc_dimension(self, cap=16)

    def descriptor(self) -> dict:
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.descriptor()}>"


class ExplicitClass(HypothesisClass):
    """A class given by a list of hypotheses (deduplicated)."""

    kind = "explicit"

    def __init__(self, hypotheses, space: Optional[InstanceSpace] = None, two_refutable: bool = False):
        rows = [h.labels if isinstance(h, Hypothesis) else np.asarray(h, dtype=np.uint8) for h in hypotheses]
        if not rows:
            raise InvalidInputError("explicit class needs at least one hypothesis")
        table = np.stack(rows).astype(np.uint8)
        if space is None:
            space = InstanceSpace(table.shape[1])
        if table.shape[1] != space.size:
            raise DomainMismatchError("hypotheses do not match the instance space")
        super().__init__(space)
        self._rows = _dedup_rows(table)
        self.two_refutable = two_refutable

    def behavior_count_hint(self):
        return self._rows.shape[0]

    def _build_behaviors(self):
        return self._rows

    def descriptor(self):
        return {"kind": self.kind, "points": self.space.size, "hypotheses": self._rows.tolist()}


class AllFunctions(HypothesisClass):
    """Every labeling of a ``d``-point space.

    Enumeration order: behaviour ``b`` labels point ``p`` with bit ``p`` of ``b``.
    Queries use closed forms, so ``d`` may exceed the enumeration cap.
    """

    kind = "all_functions"
    two_refutable = True

    def __init__(self, d: int):
        if d < 1:
            raise InvalidInputError("d must be at least 1")
        super().__init__(InstanceSpace(d))
        self.d = d
        self.witness = tuple(range(d))

    def behavior_count_hint(self):
        if self.d > ALL_FUNCTIONS_ENUM_CAP:
            raise CapacityError(f"all_functions({self.d}) has 2^{self.d} behaviours (cap 2^{ALL_FUNCTIONS_ENUM_CAP})")
        return 1 << self.d

    def _build_behaviors(self):
        self.behavior_count_hint()
        b = np.arange(1 << self.d, dtype=np.int64)[:, None]
        return ((b >> np.arange(self.d)[None, :]) & 1).astype(np.uint8)

    @property
    def vc_dim(self):
        return self.d

    @property
    def evidence_length(self):
        return 2 * self.d

    def evidence(self, data):
        zeros, ones = data.label_counts(self.d)
        return np.concatenate([ones > 0, zeros > 0]).astype(np.int64)

    def evidence_feasible(self, ev):
        ev = np.atleast_2d(ev)
        return ~np.any((ev[:, : self.d] > 0) & (ev[:, self.d :] > 0), axis=1)

    def consistent_hypothesis(self, data):
        zeros, ones = data.label_counts(self.d)
        if np.any((ones > 0) & (zeros > 0)):
            return None
        return Hypothesis((ones > 0).astype(np.uint8))

    def erm(self, data):
        zeros, ones = data.label_counts(self.d)
        return Hypothesis((ones > zeros).astype(np.uint8))

    def random_behaviors(self, k, gen):
        if self.d < 63 and k > (1 << self.d):
            raise CapacityError(f"all_functions({self.d}) has fewer than {k} behaviours")
        seen, out = set(), []
        while len(out) < k:
            h = Hypothesis(gen.integers(0, 2, size=self.d))
            if h.key() not in seen:
                seen.add(h.key())
                out.append(h)
        return out

    def descriptor(self):
        return {"kind": self.kind, "d": self.d}


class AtMostOnePositive(HypothesisClass):
    """Labelings with at most one positive point: all-zeros first, then e_0..e_{d-1}."""

    kind = "at_most_one_positive"
    two_refutable = True

    def __init__(self, d: int):
        if d < 1:
            raise InvalidInputError("d must be at least 1")
        super().__init__(InstanceSpace(d))
        self.d = d
        self.witness = (0,)

    def behavior_count_hint(self):
        return self.d + 1

    def _build_behaviors(self):
        return np.vstack([np.zeros((1, self.d), np.uint8), np.eye(self.d, dtype=np.uint8)])

    @property
    def vc_dim(self):
        return 1

    @property
    def evidence_length(self):
        return 2 * self.d

    def evidence(self, data):
        zeros, ones = data.label_counts(self.d)
        return np.concatenate([ones > 0, zeros > 0]).astype(np.int64)

    def evidence_feasible(self, ev):
        ev = np.atleast_2d(ev)
        pos, neg = ev[:, : self.d] > 0, ev[:, self.d :] > 0
        return ~np.any(pos & neg, axis=1) & (pos.sum(axis=1) <= 1)

    def consistent_hypothesis(self, data):
        zeros, ones = data.label_counts(self.d)
        pos = np.flatnonzero(ones > 0)
        if pos.size > 1 or np.any((ones > 0) & (zeros > 0)):
            return None
        labels = np.zeros(self.d, np.uint8)
        labels[pos] = 1
        return Hypothesis(labels)

    def descriptor(self):
        return {"kind": self.kind, "d": self.d}


class ThresholdBudgetClass(HypothesisClass):
    """Products of ``d`` thresholds ``f_theta(i, j) = 1{j <= theta_i}`` with sum(theta) <= 2^d.

    Points are pairs ``(i, j)`` with ``i`` in ``1..d`` and ``j`` in ``0..2^d``;
    point index ``(i - 1) * (2^d + 1) + j``. Never enumerated.
    """

    kind = "threshold_budget"
    two_refutable = False
    MAX_D = 16

    def __init__(self, d: int):
        if not 1 <= d <= self.MAX_D:
            raise CapacityError(f"threshold_budget d must lie in 1..{self.MAX_D}")
        self.d = d
        self.budget = 1 << d
        self.width = self.budget + 1
        super().__init__(InstanceSpace(d * self.width, payload=self.coords))
        self.witness = tuple(self.index(i, 1) for i in range(1, d + 1))

    def index(self, i: int, j: int) -> int:
        if not (1 <= i <= self.d and 0 <= j <= self.budget):
            raise DomainMismatchError(f"point ({i}, {j}) outside [{self.d}] x {{0..{self.budget}}}")
        return (i - 1) * self.width + j

    def coords(self, p: int) -> tuple:
        return (p // self.width + 1, p % self.width)

    def dataset(self, examples) -> Dataset:
        """Dataset from ``((i, j), y)`` pairs."""
        return Dataset.from_examples((self.index(i, j), y) for (i, j), y in examples)

    def behavior_count_hint(self):
        raise CapacityError("threshold_budget is never enumerated explicitly")

    @property
    def vc_dim(self):
        return self.d

    def hypothesis(self, theta: Sequence[int]) -> Hypothesis:
        theta = tuple(int(t) for t in theta)
        if len(theta) != self.d or min(theta) < 0 or max(theta) > self.budget:
            raise InvalidInputError(f"theta {theta} is not in {{0..{self.budget}}}^{self.d}")
        if sum(theta) > self.budget:
            raise InvalidInputError(f"theta {theta} exceeds the budget {self.budget}")
        j = np.arange(self.width)
        labels = (j[None, :] <= np.asarray(theta)[:, None]).astype(np.uint8).reshape(-1)
        return Hypothesis(labels, params=theta)

    def random_behaviors(self, k: int, gen: np.random.Generator) -> list:
        # theta uniform on the budget simplex via stars and bars, rejecting repeats
        seen, out = set(), []
        for _ in range(1000 * k):
            bars = np.sort(gen.choice(self.budget + self.d, size=self.d, replace=False))
            theta = tuple(int(t) for t in np.diff(np.concatenate([[-1], bars])) - 1)
            if theta not in seen:
                seen.add(theta)
                out.append(self.hypothesis(theta))
                if len(out) == k:
                    return out
        raise CapacityError(f"could not draw {k} distinct thresholds")

    # Evidence: per coordinate, the largest positive j and minus the smallest
    # negative j (or -(2^d + 1)); both merge by maximum. (i, 0) is positive
    # under every hypothesis, so the positive part starts at 0.
    @property
    def evidence_length(self):
        return 2 * self.d

    def evidence(self, data):
        return self.evidence_matrix([data])[0]

    def evidence_matrix(self, datasets):
        n = len(datasets)
        if n == 0:
            return np.zeros((0, 2 * self.d), np.int32)
        pts = np.concatenate([s.points for s in datasets])
        if pts.size and pts.max() >= self.space.size:
            raise DomainMismatchError("point outside the threshold instance space")
        labs = np.concatenate([s.labels for s in datasets])
        owner = np.repeat(np.arange(n), [len(s) for s in datasets])
        i, j = np.divmod(pts, self.width)
        pos = labs == 1
        ev = np.empty((n, 2 * self.d), np.int32)
        ev[:, : self.d] = 0
        ev[:, self.d :] = -self.width
        np.maximum.at(ev, (owner[pos], i[pos]), j[pos])
        np.maximum.at(ev, (owner[~pos], self.d + i[~pos]), -j[~pos])
        return ev

    def evidence_feasible(self, ev):
        ev = np.atleast_2d(ev)
        max1 = ev[:, : self.d]
        # a negative at or below the largest positive (min0 <= max1) is a clash
        ok = np.all(max1 + ev[:, self.d :] < 0, axis=1)
        return ok & (max1.sum(axis=1) <= self.budget)

    def consistent_hypothesis(self, data):
        from .erm import threshold_consistency

        return threshold_consistency(self, data)

    def erm(self, data):
        """Exact minimizer by dynamic programming over the threshold budget.

        Each coordinate only needs candidate thresholds at 0 and at the
        observed ``j`` values; ties prefer the lexicographically smallest theta.
        """
        if self.d > 10:
            raise CapacityError("threshold_budget ERM is capped at d <= 10")
        i_idx, j_idx = np.divmod(data.points, self.width)
        B = self.budget
        # cost[i][t] for candidate thresholds t
        cands, costs = [], []
        for i in range(self.d):
            sel = i_idx == i
            js, ys = j_idx[sel], data.labels[sel]
            ts = np.unique(np.concatenate([[0], js]))
            # f(i, j) = 1 iff j <= t; mistakes: positives with j > t, negatives with j <= t
            pos_j, neg_j = np.sort(js[ys == 1]), np.sort(js[ys == 0])
            c = (pos_j.size - np.searchsorted(pos_j, ts, side="right")) + np.searchsorted(neg_j, ts, side="right")
            cands.append(ts.tolist())
            costs.append(c.tolist())
        INF = float("inf")
        # best[b] = min cost of coordinates i.. with budget b remaining
        best = [0.0] * (B + 1)
        choice = []
        for i in reversed(range(self.d)):
            nxt = [INF] * (B + 1)
            ch = [0] * (B + 1)
            for b in range(B + 1):
                for t, c in zip(cands[i], costs[i]):
                    if t > b:
                        break
                    v = c + best[b - t]
                    if v < nxt[b]:
                        nxt[b], ch[b] = v, t
            best = nxt
            choice.append(ch)
        choice.reverse()
        theta, b = [], B
        for i in range(self.d):
            t = choice[i][b]
            theta.append(t)
            b -= t
        return self.hypothesis(theta)

    def descriptor(self):
        return {"kind": self.kind, "d": self.d}


class ComposedClass(HypothesisClass):
    """``{f' o g : f' in inner}`` for a fixed point map ``g`` into the inner space."""

    kind = "compose"

    def __init__(self, inner: HypothesisClass, g: Sequence[int]):
        g = np.asarray(g, dtype=np.int64).reshape(-1)
        if g.size == 0 or g.min() < 0 or g.max() >= inner.space.size:
            raise DomainMismatchError("point map must be total into the inner space")
        super().__init__(InstanceSpace(int(g.size)))
        self.inner, self.g = inner, g
        self.two_refutable = inner.two_refutable

    def _map(self, data: Dataset) -> Dataset:
        if len(data) and data.points.max() >= self.space.size:
            raise DomainMismatchError("point outside composed space")
        return Dataset(self.g[data.points], data.labels)

    def _lift(self, h: Optional[Hypothesis]) -> Optional[Hypothesis]:
        return None if h is None else Hypothesis(h.labels[self.g])

    def behavior_count_hint(self):
        return self.inner.behavior_count_hint()

    def _build_behaviors(self):
        return _dedup_rows(self.inner.behaviors()[:, self.g])

    @property
    def evidence_length(self):
        return self.inner.evidence_length

    def evidence(self, data):
        return self.inner.evidence(self._map(data))

    def evidence_feasible(self, ev):
        return self.inner.evidence_feasible(ev)

    def consistent_hypothesis(self, data):
        return self._lift(self.inner.consistent_hypothesis(self._map(data)))

    def erm(self, data):
        return self._lift(self.inner.erm(self._map(data)))

    def random_behaviors(self, k, gen):
        if self.enumerable:
            return super().random_behaviors(k, gen)
        seen, out = set(), []
        for _ in range(1000 * k):
            (h,) = self.inner.random_behaviors(1, gen)
            h = self._lift(h)
            if h.key() not in seen:
                seen.add(h.key())
                out.append(h)
                if len(out) == k:
                    return out
        raise CapacityError(f"could not find {k} distinct composed behaviours")

    @cached_property
    def vc_dim(self):
        if self.enumerable:
            return super().vc_dim
        return self.inner.vc_dim

    def descriptor(self):
        return {"kind": self.kind, "inner": self.inner.descriptor(), "map": self.g.tolist()}


class XorClass(HypothesisClass):
    """``{f' xor g : f' in inner}`` for a fixed labeling ``g``."""

    kind = "xor"

    def __init__(self, inner: HypothesisClass, g):
        g = g if isinstance(g, Hypothesis) else Hypothesis(np.asarray(g))
        if g.size != inner.space.size:
            raise DomainMismatchError("xor mask must be defined on the inner space")
        super().__init__(inner.space)
        self.inner, self.g = inner, g
        self.two_refutable = inner.two_refutable
        self.witness = inner.witness

    def _flip(self, data: Dataset) -> Dataset:
        if len(data) and data.points.max() >= self.space.size:
            raise DomainMismatchError("point outside xor space")
        return Dataset(data.points, data.labels ^ self.g.labels[data.points])

    def behavior_count_hint(self):
        return self.inner.behavior_count_hint()

    def _build_behaviors(self):
        return self.inner.behaviors() ^ self.g.labels[None, :]

    @property
    def vc_dim(self):
        return self.inner.vc_dim

    @property
    def evidence_length(self):
        return self.inner.evidence_length

    def evidence(self, data):
        return self.inner.evidence(self._flip(data))

    def evidence_feasible(self, ev):
        return self.inner.evidence_feasible(ev)

    def consistent_hypothesis(self, data):
        h = self.inner.consistent_hypothesis(self._flip(data))
        return None if h is None else h ^ self.g

    def erm(self, data):
        return self.inner.erm(self._flip(data)) ^ self.g

    def random_behaviors(self, k, gen):
        return [h ^ self.g for h in self.inner.random_behaviors(k, gen)]

    def descriptor(self):
        return {"kind": self.kind, "inner": self.inner.descriptor(), "g": self.g.labels.tolist()}


# -- constructors ------------------------------------------------------------

def make_all_functions(d: int) -> AllFunctions:
    return AllFunctions(d)


def make_at_most_one_positive(d: int) -> AtMostOnePositive:
    return AtMostOnePositive(d)


def make_threshold_budget(d: int) -> ThresholdBudgetClass:
    return ThresholdBudgetClass(d)


def compose(inner: HypothesisClass, g: Sequence[int]) -> ComposedClass:
    return ComposedClass(inner, g)


def xor(inner: HypothesisClass, g) -> XorClass:
    return XorClass(inner, g)


def from_descriptor(desc: dict) -> HypothesisClass:
    """Inverse of ``HypothesisClass.descriptor``."""
    try:
        kind = desc["kind"]
        if kind == "all_functions":
            return AllFunctions(int(desc["d"]))
        if kind == "at_most_one_positive":
            return AtMostOnePositive(int(desc["d"]))
        if kind == "threshold_budget":
            return ThresholdBudgetClass(int(desc["d"]))
        if kind == "compose":
            return ComposedClass(from_descriptor(desc["inner"]), desc["map"])
        if kind == "xor":
            return XorClass(from_descriptor(desc["inner"]), desc["g"])
        if kind == "explicit":
            return ExplicitClass(desc["hypotheses"], InstanceSpace(int(desc["points"])),
                                 two_refutable=bool(desc.get("two_refutable", False)))
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"malformed class descriptor {desc!r}") from exc
    raise InvalidInputError(f"unknown class kind {kind!r}")


def parse_class_spec(text: str) -> HypothesisClass:
    """Parse ``kind:d`` shorthand (e.g. ``all_functions:3``) or a JSON descriptor."""
    import json

    text = text.strip()
    if text.startswith("{"):
        return from_descriptor(json.loads(text))
    kind, _, d = text.partition(":")
    if not d:
        raise InvalidInputError(f"class spec {text!r} must look like kind:d")
    return from_descriptor({"kind": kind, "d": int(d)})


def is_2_refutable_on(F: HypothesisClass, data: Dataset):
    """Return an unrealizable pair of examples from ``data``, or ``None`` if ``data`` is realizable.

    Raises :class:`NotTwoRefutable` when ``data`` is unrealizable but every
    2-subset of it is realizable.
    """
    if F.realizable(data):
        return None
    ex = data.distinct()
    evs = np.stack([F.evidence(Dataset([p], [y])) for p, y in ex])
    single = F.evidence_feasible(evs)
    for a in np.flatnonzero(~single):
        b = 0 if a != 0 or len(ex) == 1 else 1
        pa, pb = ex.points[a], ex.points[b]
        return ((int(pa), int(ex.labels[a])), (int(pb), int(ex.labels[b])))
    for a in range(len(ex) - 1):
        merged = np.maximum(evs[a][None, :], evs[a + 1 :])
        bad = np.flatnonzero(~F.evidence_feasible(merged))
        if bad.size:
            b = a + 1 + int(bad[0])
            return ((int(ex.points[a]), int(ex.labels[a])), (int(ex.points[b]), int(ex.labels[b])))
    raise NotTwoRefutable(data)
