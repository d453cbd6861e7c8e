"""Packed bit strings and the independent per-bit mutation operator.

Bit positions are 1-based in every public interface.  Storage is packed
(8 bits per byte via ``numpy.packbits``); values are immutable once
constructed and safe to share across threads.

The mutation operator samples flip positions by geometric skipping, so its
cost is proportional to the number of flips rather than to the string
length.  The exact draw protocol is fixed (see :func:`flip_positions`): the
compiled EA engine reimplements it instruction-for-instruction so that both
engines consume identical random streams.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "BitString",
    "random_bitstring",
    "mutate",
    "flip_positions",
    "hamming_distance",
]


class BitString:
    """Immutable fixed-length bit vector with positions 1..n."""

    __slots__ = ("_n", "_packed", "_ones")

    def __init__(self, packed: np.ndarray, n: int, ones: int):
        # Internal constructor; use the from_* classmethods.
        self._packed = packed
        self._n = n
        self._ones = ones

    @classmethod
    def from_array(cls, arr) -> "BitString":
        """Build from a 0/1 array; entry ``i`` becomes bit ``i + 1``."""
        arr = np.ascontiguousarray(arr, dtype=np.uint8)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("bit array must be one-dimensional and non-empty")
        if arr.max(initial=0) > 1:
            raise ValueError("bit array entries must be 0 or 1")
        packed = np.packbits(arr)
        packed.setflags(write=False)
        return cls(packed, int(arr.size), int(arr.sum()))

    @classmethod
    def from01(cls, text: str) -> "BitString":
        return cls.from_array(np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0"))

    @classmethod
    def zeros(cls, n: int) -> "BitString":
        return cls.from_array(np.zeros(_checked_length(n), dtype=np.uint8))

    @classmethod
    def ones(cls, n: int) -> "BitString":
        return cls.from_array(np.ones(_checked_length(n), dtype=np.uint8))

    @property
    def n(self) -> int:
        return self._n

    def __len__(self) -> int:
        return self._n

    def to_array(self) -> np.ndarray:
        """Unpacked copy: uint8 array of length n, entry i = bit i+1."""
        return np.unpackbits(self._packed, count=self._n)

    def to01(self) -> str:
        return "".join("1" if b else "0" for b in self.to_array())

    def get(self, i: int) -> int:
        """Value of bit ``i`` (1-based)."""
        if not 1 <= i <= self._n:
            raise IndexError(f"bit index {i} out of range 1..{self._n}")
        j = i - 1
        return (int(self._packed[j >> 3]) >> (7 - (j & 7))) & 1

    def count_ones(self) -> int:
        return self._ones

    def count_zeros(self) -> int:
        return self._n - self._ones

    def zero_positions(self) -> np.ndarray:
        """Sorted 1-based positions of all 0-bits."""
        return np.flatnonzero(self.to_array() == 0) + 1

    def with_flips(self, positions) -> "BitString":
        """Copy with the given 1-based positions flipped."""
        pos = np.asarray(positions, dtype=np.int64)
        if pos.size == 0:
            return self
        if pos.min() < 1 or pos.max() > self._n:
            raise IndexError("flip position out of range")
        arr = self.to_array()
        arr[pos - 1] ^= 1
        return BitString.from_array(arr)

    def complement(self) -> "BitString":
        return BitString.from_array(1 - self.to_array())

    def restrict(self, positions) -> "BitString":
        """Sub-string selected by the given 1-based positions, in order."""
        pos = np.asarray(positions, dtype=np.int64)
        if pos.size == 0:
            raise ValueError("cannot restrict to an empty index set")
        if pos.min() < 1 or pos.max() > self._n:
            raise IndexError("restriction position out of range")
        return BitString.from_array(self.to_array()[pos - 1])

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return self._n == other._n and self._packed.tobytes() == other._packed.tobytes()

    def __hash__(self) -> int:
        return hash((self._n, self._packed.tobytes()))

    def __repr__(self) -> str:
        if self._n <= 64:
            return f"BitString({self.to01()!r})"
        return f"BitString(n={self._n}, ones={self._ones})"


def _checked_length(n: int) -> int:
    if n < 1:
        raise ValueError(f"bit string length must be >= 1, got {n}")
    return int(n)


def random_bitstring(n: int, gen: np.random.Generator) -> BitString:
    """Uniformly random bit string: each bit independently 1 with prob 1/2.

    Consumes exactly ``n`` doubles from ``gen``; bit i is 1 iff draw i < 0.5.
    """
    _checked_length(n)
    return BitString.from_array((gen.random(n) < 0.5).astype(np.uint8))


def flip_positions(gen: np.random.Generator, n: int, p: float) -> np.ndarray:
    """Sample the 1-based positions flipped by one mutation at rate ``p``.

    Geometric skipping: each draw u yields ``skip = floor(log(u)/log1p(-p))``
    unflipped bits before the next flip.  Draw protocol (shared verbatim with
    the compiled engine):

    * p <= 0: no draws, no flips;  p >= 1: no draws, all positions flip;
    * otherwise one double per flip plus one terminating draw;
      u == 0.0 terminates the scan (treated as an infinite skip).
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"flip probability must be in [0, 1], got {p}")
    if p == 0.0:
        return np.empty(0, dtype=np.int64)
    if p == 1.0:
        return np.arange(1, n + 1, dtype=np.int64)
    lam = math.log1p(-p)
    out = []
    pos = 0
    while pos < n:
        u = gen.random()
        if u <= 0.0:
            break
        du = math.log(u) / lam
        if du >= n - pos:
            break
        pos += int(du)
        out.append(pos + 1)
        pos += 1
    return np.array(out, dtype=np.int64)


def mutate(x: BitString, p: float, gen: np.random.Generator) -> BitString:
    """Flip each bit of ``x`` independently with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"mutation probability must be in [0, 1], got {p}")
    if p == 0.0:
        return x
    if p == 1.0:
        return x.complement()
    pos = flip_positions(gen, x.n, p)
    return x.with_flips(pos) if pos.size else x


def hamming_distance(x: BitString, y: BitString) -> int:
    if x.n != y.n:
        raise ValueError(f"length mismatch: {x.n} vs {y.n}")
    return int(np.count_nonzero(x.to_array() != y.to_array()))
