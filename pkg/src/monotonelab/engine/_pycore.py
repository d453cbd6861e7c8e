"""Pure-Python reference EA engine.

One full window scan per offspring, no shortcuts: this is the readable
statement of the run semantics.  The compiled engine must reproduce its
outputs exactly (same RNG draw protocol, same acceptance decisions, same
monitor values); tests/test_engine.py enforces the equivalence.  Use it
directly for small instances or when the extension is not built.
"""

from __future__ import annotations

import math

import numpy as np

from ..bits import BitString
from ..pathfn import TIER_PATH, TIER_PRE

BACKEND_NAME = "python"


def _sample_flips(gen, n: int, p: float, lam: float) -> list[int]:
    """0-based flip positions; the shared geometric-skipping protocol."""
    if p <= 0.0:
        return []
    if p >= 1.0:
        return list(range(n))
    flips: list[int] = []
    pos = 0
    while pos < n:
        u = gen.random()
        if u <= 0.0:
            break
        du = math.log(u) / lam
        if du >= n - pos:
            break
        pos += int(du)
        flips.append(pos)
        pos += 1
    return flips


class _Recorder:
    """Trace rows and stagnation counters, shared across run modes."""

    def __init__(self, stride, record_trace, jump_threshold, zin_ok_threshold):
        self.stride = max(1, int(stride))
        self.record_trace = bool(record_trace)
        self.jump_threshold = jump_threshold
        self.zin_ok_threshold = zin_ok_threshold
        self.trace: list[tuple] = []
        self.entry_gen = -1
        self.entry_level = -1
        self.max_level = 0
        self.big_jumps = 0
        self.strides_total = 0
        self.strides_ok = 0
        self.violations = 0

    def snapshot(self, gen, ones, tier, level, zin, zout):
        if self.record_trace:
            self.trace.append((gen, ones, tier, level, zin, zout))

    def note_state(self, gen, tier, level):
        if tier >= TIER_PATH:
            if self.entry_gen < 0:
                self.entry_gen = gen
                self.entry_level = level
            if level > self.max_level:
                self.max_level = level

    def note_transition(self, old_tier, old_level, new_tier, new_level):
        if (
            old_tier == TIER_PATH
            and new_tier >= TIER_PATH
            and (new_level - old_level) > self.jump_threshold
        ):
            self.big_jumps += 1

    def note_stride(self, tier, zin_star):
        if tier == TIER_PATH:
            self.strides_total += 1
            if zin_star >= self.zin_ok_threshold:
                self.strides_ok += 1

    def counters(self) -> dict:
        return {
            "trace": self.trace,
            "entry_gen": self.entry_gen,
            "entry_level": self.entry_level,
            "max_level": self.max_level,
            "big_jumps": self.big_jumps,
            "strides_total": self.strides_total,
            "strides_ok": self.strides_ok,
            "violations": self.violations,
        }


class PathEngineRef:
    """Reference (1+1) EA on a WindowPathFunction under fitness acceptance."""

    def __init__(self, inst):
        self.inst = inst
        self.n = inst.n
        self.ell = inst.ell
        self.Lp = inst.Lprime
        self.A = inst.alpha_threshold
        self.margin = inst.end_margin
        self._gen = None

    def attach_rng(self, gen) -> None:
        self._gen = gen

    def state(self):
        """(tier, level, zeros-in-active-window) of the incumbent."""
        return self.tier, self.level, self.zin_star

    # state: bits, Zc, tier, level, major, zin_star, word
    def reset(self, bits) -> None:
        self.bits = np.array(bits, dtype=np.uint8).copy()
        if self.bits.shape != (self.n,):
            raise ValueError("state must be a length-n bit array")
        i_star, zin, zc = self._scan()
        self.Zc = zc
        self._adopt(i_star, zin, zc)

    def _scan(self):
        zarr = (self.bits == 0).astype(np.int64)
        return self.inst._level_state(zarr)

    def _adopt(self, i_star, zin, zc):
        inst = self.inst
        tier = inst.tier_of(i_star)
        if tier == TIER_PRE:
            level = 0
            zin_star = int(zin[0])
            major = (self.n - self.ell) - (zc - zin_star)
            word = inst._word(self.bits, 1, inst.perms.ranks("pre", major))
        elif tier == TIER_PATH:
            level = i_star
            zin_star = int(zin[i_star - 1])
            major = i_star
            word = inst._word(self.bits, i_star, inst.perms.ranks("on", i_star))
        else:
            level = i_star
            zin_star = -1
            major = self.n - zc
            word = b""
        self.tier, self.level, self.major, self.zin_star, self.word = (
            tier, level, major, zin_star, word,
        )

    def _offspring_key_parts(self, i_star, zin, zc):
        inst = self.inst
        tier = inst.tier_of(i_star)
        if tier == TIER_PRE:
            major = (self.n - self.ell) - (zc - int(zin[0]))
        elif tier == TIER_PATH:
            major = i_star
        else:
            major = self.n - zc
        return tier, major

    def _offspring_word(self, tier, major, i_star):
        inst = self.inst
        if tier == TIER_PRE:
            return inst._word(self.bits, 1, inst.perms.ranks("pre", major))
        if tier == TIER_PATH:
            return inst._word(self.bits, i_star, inst.perms.ranks("on", i_star))
        return b""

    def _check_outside_zeros(self, rec):
        if self.tier == TIER_PATH and (self.Zc - self.zin_star) != self.A:
            rec.violations += 1

    def _zout(self):
        return -1 if self.zin_star < 0 else self.Zc - self.zin_star

    def run(
        self,
        budget: int,
        p: float,
        stride: int = 1000,
        record_trace: bool = True,
        jump_threshold: int | None = None,
        zin_ok_threshold: float = 0.0,
    ) -> dict:
        if self._gen is None:
            raise RuntimeError("attach_rng before run")
        gen_rng = self._gen
        rec = _Recorder(
            stride, record_trace,
            self.Lp if jump_threshold is None else jump_threshold,
            zin_ok_threshold,
        )
        rec.note_state(0, self.tier, self.level)
        self._check_outside_zeros(rec)
        rec.snapshot(0, self.n - self.Zc, self.tier, self.level, self.zin_star, self._zout())
        accepted = 0
        hit = self.Zc == 0
        g = 0
        lam = math.log1p(-p) if 0.0 < p < 1.0 else 0.0
        while not hit and g < budget:
            g += 1
            flips = _sample_flips(gen_rng, self.n, p, lam)
            changed = False
            if not flips:
                accepted += 1
            else:
                fl = np.array(flips, dtype=np.int64)
                self.bits[fl] ^= 1
                i_y, zin_y, zc_y = self._scan()
                tier_y, major_y = self._offspring_key_parts(i_y, zin_y, zc_y)
                if (tier_y, major_y) > (self.tier, self.major):
                    accept = True
                elif (tier_y, major_y) < (self.tier, self.major):
                    accept = False
                else:
                    accept = self._offspring_word(tier_y, major_y, i_y) >= self.word
                if accept:
                    accepted += 1
                    old_tier, old_level = self.tier, self.level
                    self.Zc = zc_y
                    self._adopt(i_y, zin_y, zc_y)
                    changed = (self.tier, self.level) != (old_tier, old_level)
                    rec.note_transition(old_tier, old_level, self.tier, self.level)
                    rec.note_state(g, self.tier, self.level)
                    self._check_outside_zeros(rec)
                    if self.Zc == 0:
                        hit = True
                else:
                    self.bits[fl] ^= 1
            if g % rec.stride == 0:
                rec.note_stride(self.tier, self.zin_star)
            if hit or g == budget or g % rec.stride == 0 or changed:
                rec.snapshot(g, self.n - self.Zc, self.tier, self.level, self.zin_star, self._zout())
        out = {
            "backend": BACKEND_NAME,
            "hit": hit,
            "generations": g,
            "accepted": accepted,
            "bits": self.bits.copy(),
            "tier": self.tier,
            "level": self.level,
            "zin_star": self.zin_star,
            "zeros": self.Zc,
        }
        out.update(rec.counters())
        return out


def _structural_run(bits0, gen_rng, p, budget, stride, record_trace, accept_rule) -> dict:
    """Shared loop for fitness-free acceptance rules (ONEMAX, dominance)."""
    bits = np.array(bits0, dtype=np.uint8).copy()
    n = bits.size
    zc = int(np.count_nonzero(bits == 0))
    rec = _Recorder(stride, record_trace, 0, 0.0)
    rec.snapshot(0, n - zc, -1, -1, -1, -1)
    accepted = 0
    hit = zc == 0
    g = 0
    lam = math.log1p(-p) if 0.0 < p < 1.0 else 0.0
    while not hit and g < budget:
        g += 1
        flips = _sample_flips(gen_rng, n, p, lam)
        if not flips:
            accepted += 1
        else:
            fl = np.array(flips, dtype=np.int64)
            h10 = int(bits[fl].sum())
            h01 = len(flips) - h10
            if accept_rule(h01, h10):
                accepted += 1
                bits[fl] ^= 1
                zc += h10 - h01
                if zc == 0:
                    hit = True
        if hit or g == budget or g % rec.stride == 0:
            rec.snapshot(g, n - zc, -1, -1, -1, -1)
    out = {
        "backend": BACKEND_NAME,
        "hit": hit,
        "generations": g,
        "accepted": accepted,
        "bits": bits,
        "tier": -1,
        "level": -1,
        "zin_star": -1,
        "zeros": zc,
    }
    out.update(rec.counters())
    return out


def run_onemax(bits0, gen_rng, p, budget, stride=1000, record_trace=True) -> dict:
    return _structural_run(
        bits0, gen_rng, p, budget, stride, record_trace,
        lambda h01, h10: h01 >= h10,
    )


def run_dominance(bits0, gen_rng, p, budget, stride=1000, record_trace=True) -> dict:
    """Worst-case dominance acceptance: take y iff x <= y bitwise, or x and
    y are incomparable and y has strictly fewer ones."""
    return _structural_run(
        bits0, gen_rng, p, budget, stride, record_trace,
        lambda h01, h10: h10 == 0 or (h01 >= 1 and h01 < h10),
    )


def run_generic(f, bits0, gen_rng, p, budget, stride=1000, record_trace=True) -> dict:
    """EA under fitness acceptance for an arbitrary fitness object."""
    bits = np.array(bits0, dtype=np.uint8).copy()
    n = bits.size
    zc = int(np.count_nonzero(bits == 0))
    fx = f.fitness(BitString.from_array(bits))
    rec = _Recorder(stride, record_trace, 0, 0.0)
    rec.snapshot(0, n - zc, -1, -1, -1, -1)
    accepted = 0
    hit = zc == 0
    g = 0
    lam = math.log1p(-p) if 0.0 < p < 1.0 else 0.0
    while not hit and g < budget:
        g += 1
        flips = _sample_flips(gen_rng, n, p, lam)
        if not flips:
            accepted += 1
        else:
            fl = np.array(flips, dtype=np.int64)
            bits[fl] ^= 1
            fy = f.fitness(BitString.from_array(bits))
            if fy >= fx:
                accepted += 1
                fx = fy
                zc = int(np.count_nonzero(bits == 0))
                if zc == 0:
                    hit = True
            else:
                bits[fl] ^= 1
        if hit or g == budget or g % rec.stride == 0:
            rec.snapshot(g, n - zc, -1, -1, -1, -1)
    out = {
        "backend": BACKEND_NAME,
        "hit": hit,
        "generations": g,
        "accepted": accepted,
        "bits": bits,
        "tier": -1,
        "level": -1,
        "zin_star": -1,
        "zeros": zc,
    }
    out.update(rec.counters())
    return out
