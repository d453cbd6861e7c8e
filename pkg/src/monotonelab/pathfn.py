"""The hard-to-optimize monotone window-path function.

Built on a window sequence (see :mod:`monotonelab.windows`), the function
value of a point x falls into one of three tiers:

* pre-path (no window qualifies): value rewards 1-bits outside the first
  window, with a permuted BINVAL on the first window's bits as tiebreak;
* on-path: value rewards the level — the largest window index i whose
  outside contains at most ``floor(alpha*n)`` 0-bits — with a permuted
  BINVAL on that window's bits as tiebreak;
* past-path (the level has reached the end): plain ONEMAX finish.

The numeric values scale like L * 2^(3n) and are never materialized during
search.  Instead :class:`FitnessKey` carries (tier, major, window word) and
compares lexicographically; :meth:`WindowPathFunction.exact_value` is the
arbitrary-precision oracle used to certify that the key order and the
numeric order coincide.

Each window (and each pre-path count of outside ones) gets its own weight
permutation, derived deterministically from the instance seed, so fitness
is a pure function of (instance descriptor, x).
"""

from __future__ import annotations

import os
import threading
from collections import OrderedDict
from dataclasses import dataclass
from functools import cached_property
from math import floor

import numpy as np

from .bits import BitString
from .rng import stream
from .windows import (
    WindowSequence,
    build_window_sequence,
    load_window_sequence,
    save_window_sequence,
    surrogate_parameters,
)

__all__ = [
    "TIER_PRE",
    "TIER_PATH",
    "TIER_FINISH",
    "FitnessKey",
    "LevelView",
    "OutsideZeroCheck",
    "PermutationSupply",
    "WindowPathFunction",
]

TIER_PRE = 0
TIER_PATH = 1
TIER_FINISH = 2

_CTX_TAGS = ("pre", "on")


class PermutationSupply:
    """Deterministic per-window weight permutations with a bounded cache.

    ``ranks(ctx, k)[s]`` is the weight rank (0 = heaviest) of window slot s
    under permutation k of context ``ctx`` ("pre" for pre-path counts, "on"
    for path levels).  Identical across calls and across engines; safe for
    concurrent readers.
    """

    def __init__(self, master_seed: int, ell: int, max_cache: int = 4096):
        self._seed = int(master_seed)
        self._ell = int(ell)
        self._max = int(max_cache)
        self._cache: OrderedDict = OrderedDict()
        self._lock = threading.Lock()

    def ranks(self, ctx: str, k: int) -> np.ndarray:
        if ctx not in _CTX_TAGS:
            raise ValueError(f"unknown permutation context {ctx!r}")
        key = (ctx, int(k))
        with self._lock:
            arr = self._cache.get(key)
            if arr is not None:
                self._cache.move_to_end(key)
                return arr
        arr = stream(self._seed, "permutation", ctx, int(k)).permutation(self._ell)
        arr = arr.astype(np.int32)
        arr.setflags(write=False)
        with self._lock:
            self._cache[key] = arr
            self._cache.move_to_end(key)
            while len(self._cache) > self._max:
                self._cache.popitem(last=False)
        return arr


@dataclass(frozen=True, order=True)
class FitnessKey:
    """Three-part surrogate for the numeric fitness; compares like it.

    ``word`` holds the active window's bits arranged in descending weight
    order (index 0 heaviest), so lexicographic byte comparison reproduces
    the BINVAL ordering.  Past-path keys carry an empty word.
    """

    tier: int
    major: int
    word: bytes


@dataclass(frozen=True)
class LevelView:
    """Where x sits relative to the window path.

    When no window qualifies (``b_x_empty``), the zero counts refer to the
    first window, which is the active one in the pre-path tier.
    """

    b_x_empty: bool
    i_star: int | None
    zeros_outside: int
    zeros_inside: int


@dataclass(frozen=True)
class OutsideZeroCheck:
    """Result of the on-path outside-zero invariant check.

    On-path points (below the path end) must have exactly ``floor(alpha*n)``
    0-bits outside the active window; a violation indicates an
    implementation bug, never a property of the input.
    """

    status: str  # "ok" | "not_applicable" | "violation"
    i_star: int | None
    zeros_outside: int | None
    expected: int


class WindowPathFunction:
    """A concrete instance: window sequence + alpha + permutation seed."""

    def __init__(
        self,
        seq: WindowSequence,
        alpha: float,
        master_seed: int,
        beta: float,
        gamma: float | None = None,
        end_margin: int = 0,
    ):
        if not 0.0 < alpha < beta:
            raise ValueError(f"need 0 < alpha < beta, got alpha={alpha}, beta={beta}")
        if end_margin < 0:
            raise ValueError("end_margin must be >= 0")
        self.seq = seq
        self.n = seq.n
        self.ell = seq.ell
        self.length = seq.length
        self.Lprime = seq.Lprime
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.gamma = None if gamma is None else float(gamma)
        self.end_margin = int(end_margin)
        self.master_seed = int(master_seed)
        self.alpha_threshold = floor(self.alpha * self.n)
        # With threshold 0 the path is only reachable with all-ones outside
        # the window; legal, but worth surfacing to experiment code.
        self.degenerate_threshold = self.alpha_threshold == 0
        self.perms = PermutationSupply(self.master_seed, self.ell)
        self.name = "window_path"

    @classmethod
    def build(
        cls,
        n: int,
        alpha: float,
        beta: float,
        gamma: float,
        length: int,
        master_seed: int,
        end_margin: int = 0,
    ) -> "WindowPathFunction":
        """Construct the window sequence and wrap it as an instance."""
        params = surrogate_parameters(n, beta, gamma)
        gen = stream(master_seed, "construction")
        seq = build_window_sequence(params, L_override=length, gen=gen)
        return cls(seq, alpha=alpha, master_seed=master_seed, beta=beta,
                   gamma=gamma, end_margin=end_margin)

    # ---------------------------------------------------------------- layout

    @cached_property
    def seq0(self) -> np.ndarray:
        """Sequence entries as 0-based position indices."""
        arr = (self.seq.b.astype(np.int32) - 1).copy()
        arr.setflags(write=False)
        return arr

    @cached_property
    def occurrences(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR of sequence positions per bit position.

        ``(ptr, pos)``: for 0-based bit index j, ``pos[ptr[j]:ptr[j+1]]`` are
        the ascending 0-based sequence positions p with seq0[p] == j.
        """
        order = np.argsort(self.seq0, kind="stable").astype(np.int32)
        counts = np.bincount(self.seq0, minlength=self.n)
        ptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        order.setflags(write=False)
        ptr.setflags(write=False)
        return ptr, order

    # ------------------------------------------------------------ evaluation

    def _zero_window_counts(self, zarr: np.ndarray) -> np.ndarray:
        """Zeros inside every window: length L' vector (sliding cumsum)."""
        zw = zarr[self.seq0]
        csum = np.empty(self.length + 1, dtype=np.int64)
        csum[0] = 0
        np.cumsum(zw, out=csum[1:])
        return csum[self.ell :] - csum[: self.Lprime]

    def _level_state(self, zarr: np.ndarray) -> tuple[int, np.ndarray, int]:
        """(i_star or 0, per-window zero counts, total zeros)."""
        zin = self._zero_window_counts(zarr)
        zc = int(zarr.sum())
        qual = np.flatnonzero(zin >= zc - self.alpha_threshold)
        i_star = int(qual[-1]) + 1 if qual.size else 0
        return i_star, zin, zc

    def level_view(self, x: BitString) -> LevelView:
        """Scan all windows and report the level of x (the reference path)."""
        self._check_point(x)
        zarr = (x.to_array() == 0).astype(np.int64)
        i_star, zin, zc = self._level_state(zarr)
        if i_star == 0:
            inside = int(zin[0])
            return LevelView(True, None, zc - inside, inside)
        inside = int(zin[i_star - 1])
        return LevelView(False, i_star, zc - inside, inside)

    def tier_of(self, i_star: int) -> int:
        if i_star == 0:
            return TIER_PRE
        if i_star + self.end_margin < self.Lprime:
            return TIER_PATH
        return TIER_FINISH

    def _word(self, bits: np.ndarray, window_index: int, ranks: np.ndarray) -> bytes:
        slots = self.seq0[window_index - 1 : window_index - 1 + self.ell]
        word = np.empty(self.ell, dtype=np.uint8)
        word[ranks] = bits[slots]
        return word.tobytes()

    def fitness(self, x: BitString) -> FitnessKey:
        self._check_point(x)
        bits = x.to_array()
        i_star, zin, zc = self._level_state((bits == 0).astype(np.int64))
        tier = self.tier_of(i_star)
        if tier == TIER_PRE:
            outside_ones = (self.n - self.ell) - (zc - int(zin[0]))
            ranks = self.perms.ranks("pre", outside_ones)
            return FitnessKey(TIER_PRE, outside_ones, self._word(bits, 1, ranks))
        if tier == TIER_PATH:
            ranks = self.perms.ranks("on", i_star)
            return FitnessKey(TIER_PATH, i_star, self._word(bits, i_star, ranks))
        return FitnessKey(TIER_FINISH, x.count_ones(), b"")

    def exact_value(self, x: BitString) -> int:
        """Literal arbitrary-precision fitness value.

        Values reach length * 2^(3n); meant for desk-scale n (the EA itself
        never calls this).
        """
        key = self.fitness(x)
        word_int = 0
        for b in key.word:
            word_int = (word_int << 1) | b
        if key.tier == TIER_PRE:
            return key.major * (1 << self.n) + word_int
        if key.tier == TIER_PATH:
            return key.major * (1 << (2 * self.n)) + word_int
        return self.length * (1 << (3 * self.n)) + key.major

    def scale_bounds_ok(self, x: BitString) -> bool:
        """Numeric inequalities that make the key a faithful surrogate:
        tier-0 values < 2^(2n) <= tier-1 values < L*2^(3n) <= tier-2 values,
        and within tiers 0/1 the window term stays below one major step."""
        key = self.fitness(x)
        value = self.exact_value(x)
        word_int = 0
        for b in key.word:
            word_int = (word_int << 1) | b
        n = self.n
        if key.tier == TIER_PRE:
            return value < (1 << (2 * n)) and word_int < (1 << n)
        if key.tier == TIER_PATH:
            return (1 << (2 * n)) <= value < self.length * (1 << (3 * n)) and word_int < (1 << (2 * n))
        return value >= self.length * (1 << (3 * n))

    def check_outside_zeros(self, x: BitString) -> OutsideZeroCheck:
        """On-path points must carry exactly ``alpha_threshold`` zeros
        outside the active window (the window-sliding argument depends on
        it); past-path and pre-path points are not applicable."""
        lv = self.level_view(x)
        if lv.b_x_empty or self.tier_of(lv.i_star) != TIER_PATH:
            return OutsideZeroCheck("not_applicable", lv.i_star, None, self.alpha_threshold)
        if lv.zeros_outside == self.alpha_threshold:
            return OutsideZeroCheck("ok", lv.i_star, lv.zeros_outside, self.alpha_threshold)
        return OutsideZeroCheck("violation", lv.i_star, lv.zeros_outside, self.alpha_threshold)

    def _check_point(self, x: BitString) -> None:
        if x.n != self.n:
            raise ValueError(f"instance n={self.n}, point has n={x.n}")

    # ------------------------------------------------------------ persistence

    def descriptor(self, window_file: str) -> str:
        lines = [
            "format=monotonelab-instance-v1",
            f"n={self.n}",
            f"alpha={self.alpha!r}",
            f"beta={self.beta!r}",
            f"gamma={'' if self.gamma is None else repr(self.gamma)}",
            f"length={self.length}",
            f"end_margin={self.end_margin}",
            f"master_seed={self.master_seed}",
            f"window_file={window_file}",
        ]
        return "\n".join(lines) + "\n"

    def save(self, path: str, window_path: str | None = None) -> None:
        """Write descriptor plus the window-sequence file next to it."""
        if window_path is None:
            window_path = os.fspath(path) + ".wseq"
        save_window_sequence(self.seq, window_path)
        rel = os.path.relpath(window_path, os.path.dirname(os.path.abspath(path)) or ".")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.descriptor(rel))

    @classmethod
    def load(cls, path: str) -> "WindowPathFunction":
        fields: dict[str, str] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                k, _, v = line.partition("=")
                fields[k.strip()] = v.strip()
        if fields.get("format") != "monotonelab-instance-v1":
            raise ValueError(f"{path}: unknown instance format")
        wf = fields["window_file"]
        if not os.path.isabs(wf):
            wf = os.path.join(os.path.dirname(os.path.abspath(path)), wf)
        seq = load_window_sequence(wf)
        gamma = fields.get("gamma", "")
        return cls(
            seq,
            alpha=float(fields["alpha"]),
            master_seed=int(fields["master_seed"]),
            beta=float(fields["beta"]),
            gamma=float(gamma) if gamma else None,
            end_margin=int(fields.get("end_margin", "0")),
        )


def key_table(inst: WindowPathFunction) -> list[FitnessKey]:
    """Fitness keys of all 2^n points, indexed by the integer encoding of
    :func:`monotonelab.functions.bitstring_from_index`.  Test utility;
    guarded to n <= 20."""
    from .functions import bitstring_from_index

    if inst.n > 20:
        raise ValueError("key_table is limited to n <= 20")
    return [inst.fitness(bitstring_from_index(v, inst.n)) for v in range(1 << inst.n)]
