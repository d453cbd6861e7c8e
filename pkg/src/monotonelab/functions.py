"""Reference pseudo-Boolean fitness functions and a monotonicity checker.

A fitness function here is any object with an ``n`` attribute and a pure
``fitness(x: BitString)`` method returning a totally ordered value (int,
float, or a richer key type).  BINVAL is deliberately exposed only as a
comparison: at interesting sizes its numeric value overflows machine words,
and the EA needs nothing but the ordering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bits import BitString, random_bitstring

__all__ = [
    "OneMax",
    "LinearFunction",
    "binval_compare",
    "check_monotone",
    "MonotoneReport",
    "bitstring_from_index",
]

EXHAUSTIVE_LIMIT = 20


class OneMax:
    """Counts 1-bits."""

    def __init__(self, n: int):
        self.n = int(n)
        self.name = "onemax"

    def fitness(self, x: BitString) -> int:
        return x.count_ones()


class LinearFunction:
    """Weighted sum of bits, f(x) = sum_i a_i x_i."""

    def __init__(self, weights):
        self.weights = np.asarray(weights, dtype=float)
        if self.weights.ndim != 1 or self.weights.size == 0:
            raise ValueError("weights must be a non-empty vector")
        self.n = int(self.weights.size)
        self.name = "linear"

    def fitness(self, x: BitString) -> float:
        if x.n != self.n:
            raise ValueError(f"length mismatch: function n={self.n}, x has {x.n}")
        return float(self.weights @ x.to_array())


def binval_compare(x: BitString, y: BitString, order=None) -> int:
    """Order x and y under BINVAL weights 2^(n-k) assigned along ``order``.

    ``order[k]`` (1-based positions, k = 0 heaviest) says which position
    carries weight 2^(n-1-k); default is the identity, which makes the
    comparison plain lexicographic.  Scans in descending weight order and
    decides at the first differing position, so the (astronomical) numeric
    values are never materialized.  Returns -1, 0, or 1.
    """
    if x.n != y.n:
        raise ValueError(f"length mismatch: {x.n} vs {y.n}")
    n = x.n
    if order is None:
        order = range(1, n + 1)
    order = np.asarray(order, dtype=np.int64)
    if order.size != n or np.unique(order).size != n or order.min() < 1 or order.max() > n:
        raise ValueError("order must be a permutation of 1..n")
    ax = x.to_array()
    ay = y.to_array()
    for pos in order:
        bx = ax[pos - 1]
        by = ay[pos - 1]
        if bx != by:
            return 1 if bx > by else -1
    return 0


@dataclass(frozen=True)
class MonotoneReport:
    """Outcome of a monotonicity check."""

    passed: bool
    checked_pairs: int
    counterexample: tuple | None  # (x, j) with x_j = 0 and f(x) >= f(flip_j(x))

    def __bool__(self) -> bool:
        return self.passed


def bitstring_from_index(v: int, n: int) -> BitString:
    """Enumeration order used by exhaustive checks: bit i of x = bit i-1 of v."""
    arr = ((v >> np.arange(n, dtype=np.uint64)) & 1).astype(np.uint8)
    return BitString.from_array(arr)


def check_monotone(
    f,
    n: int | None = None,
    mode: str = "exhaustive",
    samples: int = 10_000,
    gen: np.random.Generator | None = None,
) -> MonotoneReport:
    """Check strict monotonicity: every single 0->1 flip strictly increases f.

    Exhaustive mode walks all 2^n points (x ascending in the enumeration
    order of :func:`bitstring_from_index`, flip position j ascending) and is
    rejected for n > 20.  Sampled mode draws ``samples`` random (x, j) pairs
    with x_j = 0.  The first violation found is returned as a witness.
    """
    if n is None:
        n = f.n
    if mode == "exhaustive":
        if n > EXHAUSTIVE_LIMIT:
            raise ValueError(f"exhaustive mode needs n <= {EXHAUSTIVE_LIMIT} (cost 2^n * n), got n={n}")
        total = 1 << n
        values = [None] * total
        for v in range(total):
            values[v] = f.fitness(bitstring_from_index(v, n))
        checked = 0
        for v in range(total):
            fv = values[v]
            for j in range(1, n + 1):
                bit = 1 << (j - 1)
                if v & bit:
                    continue
                checked += 1
                if not fv < values[v | bit]:
                    return MonotoneReport(False, checked, (bitstring_from_index(v, n), j))
        return MonotoneReport(True, checked, None)
    if mode == "sampled":
        if gen is None:
            raise ValueError("sampled mode requires a generator")
        checked = 0
        for _ in range(samples):
            x = random_bitstring(n, gen)
            zeros = x.zero_positions()
            if zeros.size == 0:
                continue
            j = int(zeros[int(gen.integers(0, zeros.size))])
            checked += 1
            if not f.fitness(x) < f.fitness(x.with_flips([j])):
                return MonotoneReport(False, checked, (x, j))
        return MonotoneReport(True, checked, None)
    raise ValueError(f"unknown mode {mode!r}: expected 'exhaustive' or 'sampled'")
