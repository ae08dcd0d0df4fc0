"""Shattering, the augmented class over index/point pairs, and the explicit
growth-function threshold that bounds its VC dimension."""

from __future__ import annotations

import math
from itertools import combinations, product

import numpy as np

from .classes import ExplicitClass, HypothesisClass
from .core import InstanceSpace
from .errors import CapacityError, InvalidInputError

MAX_VC_CAP = 16
MAX_AUGMENTED = 10**7


def _point_order(table: np.ndarray) -> np.ndarray:
    # points whose labels split the class most evenly are tried first
    ones = table.sum(axis=0, dtype=np.int64)
    balance = np.minimum(ones, table.shape[0] - ones)
    return np.argsort(-balance, kind="stable")


def shattered(F: HypothesisClass, points) -> bool:
    """Does ``F`` realize all ``2^|points|`` labelings of ``points``?"""
    pts = list(points)
    if not pts:
        return True
    sub = F.behaviors()[:, pts].astype(np.int64)
    codes = sub @ (1 << np.arange(len(pts), dtype=np.int64))
    return np.unique(codes).size == 1 << len(pts)


def vc_dimension(F: HypothesisClass, cap: int = MAX_VC_CAP) -> int:
    """Largest ``t <= cap`` such that some ``t`` points are shattered.

    A return value equal to ``cap`` means "at least ``cap``". Shattered sets
    are closed under subsets, so the search only extends shattered sets.
    """
    if not 0 <= cap <= MAX_VC_CAP:
        raise CapacityError(f"cap must be in [0, {MAX_VC_CAP}]")
    if not F.enumerable:
        raise CapacityError(f"{F.kind} class is too large to enumerate")
    table = F.behaviors().astype(np.int64)
    H, N = table.shape
    limit = min(cap, N, int(math.floor(math.log2(H))) if H else 0)
    order = _point_order(table)
    best = 0

    def dfs(codes, size, start):
        nonlocal best
        if size > best:
            best = size
        if best >= limit:
            return
        for pos in range(start, N):
            if size + (N - pos) <= best:
                return
            nxt = codes * 2 + table[:, order[pos]]
            if np.unique(nxt).size == 1 << (size + 1):
                dfs(nxt, size + 1, pos + 1)
                if best >= limit:
                    return

    dfs(np.zeros(H, dtype=np.int64), 0, 0)
    return best


def augment_class(F: HypothesisClass, n: int, k: int) -> ExplicitClass:
    """Explicit class over ``[n] x X`` routing index ``i`` to ``f_{c_i}``.

    Point ``(i, x)`` is encoded as ``i * |X| + x``.
    """
    if n < 1 or k < 1:
        raise InvalidInputError("n and k must be positive")
    table = F.behaviors()
    H, size = table.shape
    if H ** k * k ** n > MAX_AUGMENTED:
        raise CapacityError(f"|F|^k * k^n = {H ** k * k ** n} exceeds {MAX_AUGMENTED}")
    kk = min(k, H)
    seen = {}
    for chosen in combinations(range(H), kk):
        for c in product(range(kk), repeat=n):
            key = tuple(chosen[j] for j in c)
            if key not in seen:
                seen[key] = None
    rows = np.array([np.concatenate([table[h] for h in key]) for key in seen], dtype=np.uint8)
    space = InstanceSpace(n * size, payload=lambda p, s=size: divmod(p, s))
    return ExplicitClass(rows, space=space)


def vc_bound_threshold(d: int, n: int, k: int) -> int:
    """Smallest ``m >= kd`` with ``n ln k + kd ln(e m / kd) < m ln 2``.

    At such ``m`` the number of labelings the augmented class can produce on
    ``m`` points is below ``2^m``, so its VC dimension is at most ``m - 1``.
    """
    if d < 1 or k < 1 or n < k:
        raise InvalidInputError("need d >= 1 and n >= k >= 1")
    kd = k * d
    lhs_const = n * math.log(k)
    m = kd
    while not lhs_const + kd * (1.0 + math.log(m / kd)) < m * math.log(2):
        m += 1
    return m


def log_sauer_bound(m: float, d: float) -> float:
    """log of the growth-function bound: ``m`` if ``m <= d`` else ``d ln(e m / d)``."""
    if m < 0 or d < 0:
        raise InvalidInputError("m and d must be non-negative")
    if m <= d:
        return float(m)
    if d == 0:
        return 0.0
    return d * (1.0 + math.log(m / d))


def sauer_bound(m: float, d: float) -> float:
    return math.exp(log_sauer_bound(m, d))
