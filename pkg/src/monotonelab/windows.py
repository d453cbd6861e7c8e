"""Randomized construction and verification of the window index sequence.

The sequence b_1..b_L over positions [n] defines sliding windows
B_i = {b_i, ..., b_{i+ell-1}} for i in [L'], L' = L - ell + 1.  Entries are
drawn uniformly subject to the previous ell-1 entries being excluded, which
guarantees property (i): all ell entries of any window are pairwise
distinct.  Property (ii) - windows at index distance >= ell overlap in at
most gamma*ell positions - holds with positive probability when
gamma > rho = beta/(1-2*beta); the Chernoff/union-bound calculator below
quantifies the failure probability, and the verifier checks a concrete
sequence either exactly or on sampled pairs.

The theoretical path length L = floor(exp((gamma-rho)^2 (1-2 beta) n / 6))
collapses to 1 at desk-scale n, so builds take an explicit length override
while keeping the sampling procedure itself verbatim.
"""

from __future__ import annotations

import math
import struct
from bisect import bisect_right, insort
from dataclasses import dataclass
from decimal import Decimal, localcontext

import numpy as np

__all__ = [
    "ConstructionParams",
    "theoretical_parameters",
    "surrogate_parameters",
    "WindowSequence",
    "build_window_sequence",
    "sample_index_sequence",
    "verify_window_properties",
    "WindowVerification",
    "collision_failure_bound",
    "save_window_sequence",
    "load_window_sequence",
]

EXACT_PAIRS_LIMIT = 10_000
_MAGIC = b"WSEQ1"


@dataclass(frozen=True)
class ConstructionParams:
    """Parameters of the construction, with derived quantities.

    ``L`` and ``Lprime`` are the theoretical values when the overlap
    guarantee applies (``overlap_guarantee``); surrogate parameter sets leave them
    ``None`` and rely on explicit length overrides.
    """

    n: int
    beta: float
    gamma: float
    rho: float
    ell: int
    L: int | None
    Lprime: int | None
    overlap_guarantee: bool


def _common_validate(n: int, beta: float, gamma: float) -> tuple[float, int]:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 < beta < 0.5:
        raise ValueError(f"beta must lie in (0, 1/2), got {beta}")
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    rho = beta / (1.0 - 2.0 * beta)
    ell = int(math.floor(beta * n))
    return rho, ell


def theoretical_parameters(n: int, beta: float, gamma: float) -> ConstructionParams:
    """Derived parameters with the theoretical path length.

    Requires rho = beta/(1-2*beta) < gamma < 1.  The returned ``Lprime`` can
    be non-positive at small n (the theoretical L degenerates to 1); builds
    validate their effective length separately.
    """
    rho, ell = _common_validate(n, beta, gamma)
    if gamma <= rho:
        raise ValueError(
            f"need rho < gamma < 1 for the overlap guarantee: rho={rho!r}, gamma={gamma!r}"
        )
    if ell < 1:
        raise ValueError(f"window width floor(beta*n) = {ell} must be >= 1")
    exponent = (gamma - rho) ** 2 * (1.0 - 2.0 * beta) * n / 6.0
    L = _floor_exp(exponent)
    return ConstructionParams(
        n=int(n), beta=float(beta), gamma=float(gamma), rho=rho, ell=ell,
        L=L, Lprime=L - ell + 1, overlap_guarantee=True,
    )


def surrogate_parameters(n: int, beta: float, gamma: float) -> ConstructionParams:
    """Parameters without the overlap guarantee (gamma <= rho allowed).

    Used by surrogate experiment regimes whose beta is too large for the
    guarantee to apply; the construction procedure is unchanged but carries
    no theoretical L.
    """
    rho, ell = _common_validate(n, beta, gamma)
    if ell < 1:
        raise ValueError(f"window width floor(beta*n) = {ell} must be >= 1")
    return ConstructionParams(
        n=int(n), beta=float(beta), gamma=float(gamma), rho=rho, ell=ell,
        L=None, Lprime=None, overlap_guarantee=gamma > rho,
    )


def _floor_exp(exponent: float) -> int:
    """floor(exp(exponent)) as an exact integer, valid for huge exponents."""
    if exponent < 700.0:
        return int(math.floor(math.exp(exponent)))
    with localcontext() as ctx:
        ctx.prec = int(exponent / math.log(10)) + 30
        return int(Decimal(exponent).exp().to_integral_value(rounding="ROUND_FLOOR"))


class WindowSequence:
    """The built index sequence plus window geometry."""

    def __init__(self, n: int, ell: int, b: np.ndarray):
        b = np.ascontiguousarray(b, dtype=np.int32)
        if b.ndim != 1:
            raise ValueError("index sequence must be one-dimensional")
        if len(b) < ell:
            raise ValueError(f"sequence length {len(b)} shorter than window width {ell}")
        if ell < 1:
            raise ValueError("window width must be >= 1")
        if b.min() < 1 or b.max() > n:
            raise ValueError("sequence entries must lie in 1..n")
        self.n = int(n)
        self.ell = int(ell)
        self.b = b
        self.b.setflags(write=False)
        dup = self._first_window_duplicate()
        if dup is not None:
            raise ValueError(f"window distinctness violated at sequence positions {dup}")

    @property
    def length(self) -> int:
        return len(self.b)

    @property
    def Lprime(self) -> int:
        return len(self.b) - self.ell + 1

    def window(self, i: int) -> np.ndarray:
        """Entries b_i..b_{i+ell-1} of window i (1-based, i in [L'])."""
        if not 1 <= i <= self.Lprime:
            raise IndexError(f"window index {i} out of range 1..{self.Lprime}")
        return self.b[i - 1 : i - 1 + self.ell]

    def _first_window_duplicate(self):
        """Positions (p, q), q - p < ell, with b_p == b_q, or None."""
        if self.ell == 1:
            return None
        order = np.lexsort((np.arange(len(self.b)), self.b))
        sb = self.b[order]
        same = sb[1:] == sb[:-1]
        gaps = order[1:] - order[:-1]
        bad = same & (np.abs(gaps) < self.ell)
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            return int(order[k]) + 1, int(order[k + 1]) + 1
        return None


def sample_index_sequence(n: int, ell: int, length: int, gen: np.random.Generator) -> np.ndarray:
    """Draw b_1..b_length: each entry uniform on [n] minus the previous
    min(i-1, ell-1) entries (rejection-free, sampled from the explicit
    allowed set so the distribution matches the probabilistic argument)."""
    if ell < 1:
        raise ValueError("window width must be >= 1")
    if n - 2 * ell < 1:
        raise ValueError(f"need n > 2*ell (n={n}, ell={ell}); the overlap argument divides by n - 2*ell")
    if length < ell:
        raise ValueError(f"sequence length {length} must be >= window width {ell} (L' would be < 1)")
    b = np.empty(length, dtype=np.int32)
    excluded: list[int] = []  # sorted values of the last ell-1 entries
    for i in range(length):
        r = int(gen.integers(0, n - len(excluded)))
        # v = (r+1)-th smallest value of [1..n] \ excluded, by fixed point of
        # v = r + 1 + #{excluded <= v}
        v = r + 1
        while True:
            shifted = r + 1 + bisect_right(excluded, v)
            if shifted == v:
                break
            v = shifted
        b[i] = v
        if ell > 1:
            insort(excluded, v)
            if i >= ell - 1:
                old = int(b[i - (ell - 1)])
                excluded.pop(bisect_right(excluded, old) - 1)
    return b


def build_window_sequence(
    params: ConstructionParams,
    L_override: int | None = None,
    gen: np.random.Generator | None = None,
) -> WindowSequence:
    """Build a sequence for ``params``; length is ``L_override`` if given,
    else the theoretical L.  Verification is the caller's business: a build
    that fails property (ii) is returned as-is, never silently retried."""
    if gen is None:
        raise ValueError("build requires a generator")
    length = L_override if L_override is not None else params.L
    if length is None:
        raise ValueError("params carry no theoretical L; pass L_override")
    b = sample_index_sequence(params.n, params.ell, int(length), gen)
    return WindowSequence(params.n, params.ell, b)


@dataclass(frozen=True)
class WindowVerification:
    property_i: bool
    property_ii: bool
    max_overlap: int
    overlap_limit: float  # gamma * ell
    worst_pair: tuple | None
    pairs_checked: int

    @property
    def passed(self) -> bool:
        return self.property_i and self.property_ii


def verify_window_properties(
    seq: WindowSequence,
    gamma: float,
    mode: str = "exact",
    sample_pairs: int = 0,
    gen: np.random.Generator | None = None,
) -> WindowVerification:
    """Check property (i) and property (ii) at threshold gamma*ell.

    Exact mode scans every window pair (i, j) with |i - j| >= ell and is
    guarded to L' <= 10^4; sampled mode checks ``sample_pairs`` uniformly
    random qualifying pairs.  Reports the worst overlap found.
    """
    ell = seq.ell
    Lp = seq.Lprime
    limit = gamma * ell
    prop_i = seq._first_window_duplicate() is None

    b0 = seq.b.astype(np.int64) - 1
    max_ov = 0
    worst = None
    checked = 0
    if mode == "exact":
        if Lp > EXACT_PAIRS_LIMIT:
            raise ValueError(f"exact mode guarded to L' <= {EXACT_PAIRS_LIMIT}, got L' = {Lp}")
        if Lp > ell:
            member = np.zeros(seq.n, dtype=np.int8)
            csum = np.empty(len(b0) + 1, dtype=np.int32)
            for i0 in range(Lp - ell):  # window i = i0 + 1, partners j >= i + ell
                w = b0[i0 : i0 + ell]
                member[w] = 1
                csum[0] = 0
                np.cumsum(member[b0], out=csum[1:])
                ov = csum[ell:][i0 + ell : Lp] - csum[:-ell][i0 + ell : Lp]
                checked += ov.size
                if ov.size:
                    k = int(np.argmax(ov))
                    if int(ov[k]) > max_ov:
                        max_ov = int(ov[k])
                        worst = (i0 + 1, i0 + 1 + ell + k)
                member[w] = 0
    elif mode == "sampled":
        if gen is None:
            raise ValueError("sampled mode requires a generator")
        if Lp > ell:
            for _ in range(sample_pairs):
                while True:
                    i = int(gen.integers(1, Lp + 1))
                    j = int(gen.integers(1, Lp + 1))
                    if abs(i - j) >= ell:
                        break
                ov = len(np.intersect1d(seq.window(i), seq.window(j)))
                checked += 1
                if ov > max_ov:
                    max_ov = ov
                    worst = (min(i, j), max(i, j))
    else:
        raise ValueError(f"unknown mode {mode!r}: expected 'exact' or 'sampled'")

    return WindowVerification(
        property_i=prop_i,
        property_ii=max_ov <= limit,
        max_overlap=max_ov,
        overlap_limit=limit,
        worst_pair=worst,
        pairs_checked=checked,
    )


def collision_failure_bound(ell: int, rho: float, gamma: float, L: int) -> float:
    """Union-bound on the probability that some qualifying window pair
    overlaps in more than gamma*ell entries: L^2 exp(-((gamma-rho)/rho)^2 rho ell / 3).

    A value >= 1 is vacuous; below 1 it bounds the chance one sampled build
    needs retrying, and far below 1 makes a single attempt reliable.
    """
    if not 0.0 < rho < gamma < 1.0:
        raise ValueError(f"need 0 < rho < gamma < 1, got rho={rho!r}, gamma={gamma!r}")
    if ell < 1 or L < 1:
        raise ValueError("ell and L must be >= 1")
    exponent = -(((gamma - rho) / rho) ** 2) * rho * ell / 3.0
    return float(L) * float(L) * math.exp(exponent)


def save_window_sequence(seq: WindowSequence, path) -> None:
    """Versioned binary layout: magic 'WSEQ1'; n, ell, L little-endian u64;
    then L little-endian u32 entries (1-based values)."""
    payload = (
        _MAGIC
        + struct.pack("<QQQ", seq.n, seq.ell, seq.length)
        + seq.b.astype("<u4").tobytes()
    )
    with open(path, "wb") as fh:
        fh.write(payload)


def load_window_sequence(path) -> WindowSequence:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:5] != _MAGIC:
        raise ValueError(f"{path}: bad magic, not a window-sequence file")
    n, ell, length = struct.unpack("<QQQ", raw[5:29])
    body = raw[29:]
    if len(body) != 4 * length:
        raise ValueError(f"{path}: truncated sequence body")
    b = np.frombuffer(body, dtype="<u4").astype(np.int32)
    return WindowSequence(int(n), int(ell), b)
