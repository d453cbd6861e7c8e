# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled EA engine: incremental window-path evaluation.

Semantically identical to engine._pycore (same RNG draw protocol, same
acceptance decisions, same counters); the per-generation work is O(flips)
plus rare window rescans instead of a full window scan per offspring.

The level query is answered incrementally.  A mutation can only make a
window above the current level qualify by turning a 0-bit into a 1, so
generations without such flips skip the search outright.  Otherwise a
cached list of near-qualifying windows (rebuilt lazily after accepted
steps) is tested exactly through per-position occurrence lists; when the
cache cannot certify an answer (too many candidates, too many 0->1 flips)
a full overlay scan of all windows decides exactly.
"""

import numpy as np

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport log, log1p
from numpy.random cimport bitgen_t

BACKEND_NAME = "compiled"

cdef const char *CAPSULE_NAME = "BitGenerator"

DEF CAND_CAP = 4096
DEF CAND_SLACK = 8

cdef enum:
    TIER_PRE = 0
    TIER_PATH = 1
    TIER_FINISH = 2


cdef bitgen_t *_acquire_bitgen(object bit_generator) except NULL:
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, CAPSULE_NAME):
        raise ValueError("expected a numpy BitGenerator capsule")
    return <bitgen_t *> PyCapsule_GetPointer(capsule, CAPSULE_NAME)


cdef class PathEngine:
    """(1+1) EA on a WindowPathFunction under fitness acceptance."""

    cdef object inst, supply
    cdef Py_ssize_t n, ell, L, Lp
    cdef long A, margin
    cdef const int[::1] seq0
    cdef const long long[::1] occ_ptr
    cdef const int[::1] occ_pos
    # incumbent state
    cdef unsigned char[::1] bits
    cdef object bits_obj
    cdef long Zc
    cdef int tier
    cdef long level, major, zin_star, win_start
    cdef const int[::1] ranks
    cdef object ranks_obj
    cdef unsigned char[::1] inwin
    cdef int[::1] slot_of
    # candidate cache for the level query
    cdef long[::1] cand_i
    cdef long[::1] cand_v
    cdef Py_ssize_t n_cand
    cdef bint cand_valid, cand_overflow
    cdef long Mbound
    # per-generation scratch
    cdef long[::1] flips
    cdef unsigned char[::1] fdir
    cdef unsigned char[::1] flip_mark
    # rng
    cdef bitgen_t *rng
    cdef object rng_holder

    def __init__(self, inst):
        self.inst = inst
        self.supply = inst.perms
        self.n = inst.n
        self.ell = inst.ell
        self.L = inst.length
        self.Lp = inst.Lprime
        self.A = inst.alpha_threshold
        self.margin = inst.end_margin
        self.seq0 = inst.seq0
        ptr, pos = inst.occurrences
        self.occ_ptr = ptr
        self.occ_pos = pos
        self.bits_obj = np.zeros(self.n, dtype=np.uint8)
        self.bits = self.bits_obj
        self.inwin = np.zeros(self.n, dtype=np.uint8)
        self.slot_of = np.full(self.n, -1, dtype=np.int32)
        self.cand_i = np.zeros(CAND_CAP, dtype=np.int64)
        self.cand_v = np.zeros(CAND_CAP, dtype=np.int64)
        self.flips = np.zeros(self.n, dtype=np.int64)
        self.fdir = np.zeros(self.n, dtype=np.uint8)
        self.flip_mark = np.zeros(self.n, dtype=np.uint8)
        self.win_start = -1
        self.ranks_obj = np.zeros(1, dtype=np.int32)
        self.ranks = self.ranks_obj
        self.rng = NULL

    def attach_rng(self, bit_generator):
        self.rng_holder = bit_generator
        self.rng = _acquire_bitgen(bit_generator)

    def state(self):
        """(tier, level, zeros-in-active-window) of the incumbent."""
        return self.tier, self.level, self.zin_star

    # ------------------------------------------------------------ state mgmt

    cdef void _set_window(self, long w0):
        cdef Py_ssize_t s
        cdef long v
        if self.win_start >= 0:
            for s in range(self.ell):
                v = self.seq0[self.win_start + s]
                self.inwin[v] = 0
                self.slot_of[v] = -1
        self.win_start = w0
        if w0 >= 0:
            for s in range(self.ell):
                v = self.seq0[w0 + s]
                self.inwin[v] = 1
                self.slot_of[v] = <int> s

    cdef void _fetch_ranks(self, str ctx, long k):
        self.ranks_obj = self.supply.ranks(ctx, k)
        self.ranks = self.ranks_obj

    def reset(self, bits0):
        arr = np.ascontiguousarray(bits0, dtype=np.uint8)
        if arr.shape != (self.n,):
            raise ValueError("state must be a length-n bit array")
        self.bits_obj = arr.copy()
        self.bits = self.bits_obj
        cdef Py_ssize_t p, w
        cdef long cur = 0, zin1 = 0, best = 0, bz = 0, zc = 0
        for p in range(self.n):
            if self.bits[p] == 0:
                zc += 1
        self.Zc = zc
        cdef long T = zc - self.A
        for p in range(self.ell):
            cur += 1 - self.bits[self.seq0[p]]
        zin1 = cur
        for w in range(self.Lp):
            if cur >= T:
                best = w + 1
                bz = cur
            if w + 1 < self.Lp:
                cur += self.bits[self.seq0[w]] - self.bits[self.seq0[w + self.ell]]
        self._set_window(-1)  # also clears the previous window on re-reset
        if best == 0:
            self.tier = TIER_PRE
            self.level = 0
            self.zin_star = zin1
            self.major = (self.n - self.ell) - (zc - zin1)
            self._set_window(0)
            self._fetch_ranks("pre", self.major)
        elif best + self.margin < self.Lp:
            self.tier = TIER_PATH
            self.level = best
            self.zin_star = bz
            self.major = best
            self._set_window(best - 1)
            self._fetch_ranks("on", best)
        else:
            self.tier = TIER_FINISH
            self.level = best
            self.zin_star = -1
            self.major = self.n - zc
        self.cand_valid = False
        self.cand_overflow = False
        self.n_cand = 0
        self.Mbound = self.ell  # trivially safe until the first rescan

    # ------------------------------------------------------------- primitives

    cdef Py_ssize_t _sample_flips(self, double p, double lam):
        cdef Py_ssize_t n = self.n, h = 0
        cdef long pos = 0
        cdef double u, du
        if p <= 0.0:
            return 0
        if p >= 1.0:
            for pos in range(n):
                self.flips[pos] = pos
            return n
        while pos < n:
            u = self.rng.next_double(self.rng.state)
            if u <= 0.0:
                break
            du = log(u) / lam
            if du >= <double> (n - pos):
                break
            pos += <long> du
            self.flips[h] = pos
            h += 1
            pos += 1
        return h

    cdef inline bint _in_window(self, long j, long w0):
        """Is bit position j inside the window with 0-based start w0?"""
        cdef long lo = <long> self.occ_ptr[j]
        cdef long hi = <long> self.occ_ptr[j + 1]
        cdef long mid
        cdef long end = hi
        while lo < hi:
            mid = (lo + hi) >> 1
            if self.occ_pos[mid] < w0:
                lo = mid + 1
            else:
                hi = mid
        return lo < end and self.occ_pos[lo] <= w0 + self.ell - 1

    cdef inline long _zero_y(self, long v):
        return 1 - (self.bits[v] ^ self.flip_mark[v])

    cdef long _overlay_best(self, long Ty, long lo_w0, long *zin_out):
        """Largest 1-based window index >= lo_w0+1 whose offspring zero
        count reaches Ty; 0 if none.  Exact; O(windows scanned)."""
        cdef long cur = 0, best = 0, bz = 0
        cdef Py_ssize_t p, w
        if lo_w0 < 0:
            lo_w0 = 0
        if lo_w0 >= self.Lp:
            zin_out[0] = 0
            return 0
        for p in range(lo_w0, lo_w0 + self.ell):
            cur += self._zero_y(self.seq0[p])
        for w in range(lo_w0, self.Lp):
            if cur >= Ty:
                best = w + 1
                bz = cur
            if w + 1 < self.Lp:
                cur += self._zero_y(self.seq0[w + self.ell]) - self._zero_y(self.seq0[w])
        zin_out[0] = bz
        return best

    cdef void _rescan(self):
        """Rebuild candidate cache and Mbound over windows above the level."""
        cdef long scope = self.level  # 0-based start of the strictly-above range
        cdef long thr = self.Zc - self.A - CAND_SLACK
        cdef long cur = 0, m = 0
        cdef Py_ssize_t p, w
        self.n_cand = 0
        self.cand_overflow = False
        if scope >= self.Lp:
            self.Mbound = 0
            self.cand_valid = True
            return
        for p in range(scope, scope + self.ell):
            cur += 1 - self.bits[self.seq0[p]]
        for w in range(scope, self.Lp):
            if cur > m:
                m = cur
            if cur >= thr:
                if self.n_cand < CAND_CAP:
                    self.cand_i[self.n_cand] = w + 1
                    self.cand_v[self.n_cand] = cur
                    self.n_cand += 1
                else:
                    self.cand_overflow = True
            if w + 1 < self.Lp:
                cur += self.bits[self.seq0[w]] - self.bits[self.seq0[w + self.ell]]
        self.Mbound = m
        self.cand_valid = True

    # ------------------------------------------------------------------- run

    def run(self, long budget, double p, long stride=1000, bint record_trace=True,
            long jump_threshold=-1, double zin_ok_threshold=0.0):
        if self.rng is NULL:
            raise RuntimeError("attach_rng before run")
        if jump_threshold < 0:
            jump_threshold = self.Lp
        if stride < 1:
            stride = 1
        cdef double lam = 0.0
        if 0.0 < p < 1.0:
            lam = log1p(-p)

        trace = []
        cdef long entry_gen = -1, entry_level = -1, max_level = 0
        cdef long big_jumps = 0, strides_total = 0, strides_ok = 0, violations = 0
        cdef long accepted = 0
        cdef long g = 0
        cdef bint hit = self.Zc == 0

        # initial state bookkeeping (mirrors _pycore._Recorder usage)
        if self.tier >= TIER_PATH:
            entry_gen = 0
            entry_level = self.level
            max_level = self.level
        if self.tier == TIER_PATH and self.Zc - self.zin_star != self.A:
            violations += 1
        if record_trace:
            trace.append((0, self.n - self.Zc, self.tier, self.level, self.zin_star,
                          -1 if self.zin_star < 0 else self.Zc - self.zin_star))

        cdef Py_ssize_t h, t, k
        cdef long h10, h01, Zc_y, Ty
        cdef long w01, w10, top_rank, j, s, r
        cdef bint top_is01, accept, changed
        cdef long q1, q1z, delta, i_c, v_c, m_y, zin_y_star
        cdef long old_tier, old_level, new_tier
        cdef long region_best, region_zin

        while (not hit) and g < budget:
            g += 1
            h = self._sample_flips(p, lam)
            changed = False
            if h == 0:
                accepted += 1
            else:
                h10 = 0
                w01 = 0
                w10 = 0
                top_rank = <long> self.n + <long> self.Lp + 7
                top_is01 = False
                for t in range(h):
                    j = self.flips[t]
                    self.flip_mark[j] = 1
                    if self.bits[j]:
                        self.fdir[t] = 1
                        h10 += 1
                    else:
                        self.fdir[t] = 0
                    if self.inwin[j]:
                        s = self.slot_of[j]
                        r = self.ranks[s]
                        if self.fdir[t]:
                            w10 += 1
                        else:
                            w01 += 1
                        if r < top_rank:
                            top_rank = r
                            top_is01 = self.fdir[t] == 0
                h01 = <long> h - h10
                Zc_y = self.Zc + h10 - h01
                Ty = Zc_y - self.A
                accept = False
                q1 = 0
                q1z = 0

                if self.tier == TIER_FINISH:
                    # decide acceptance and the offspring's level before any
                    # bit is applied (the overlay reads flips as an overlay)
                    region_best = self.level
                    if h10 == 0:
                        accept = True
                        if self.margin > 0:
                            if Ty <= 0:
                                region_best = self.Lp
                            else:
                                region_best = self._overlay_best(
                                    Ty, self.Lp - 1 - self.margin, &region_zin)
                        else:
                            region_best = self.Lp
                    elif h01 == 0 or h01 < h10:
                        accept = False
                    else:
                        if Ty <= 0:
                            accept = True
                            region_best = self.Lp
                        else:
                            region_best = self._overlay_best(
                                Ty, self.Lp - 1 - self.margin, &region_zin)
                            accept = region_best > 0
                    if accept:
                        accepted += 1
                        for t in range(h):
                            self.bits[self.flips[t]] ^= 1
                        self.Zc = Zc_y
                        self.major = self.n - self.Zc
                        changed = region_best != self.level
                        self.level = region_best
                        if self.level > max_level:
                            max_level = self.level
                        if self.Zc == 0:
                            hit = True
                else:
                    # shared level query for tiers PRE and PATH
                    if h01 > 0 and Ty <= self.ell and Ty <= self.Mbound + h10:
                        if not self.cand_valid:
                            self._rescan()
                        if Ty <= self.Mbound + h10:
                            if h01 > CAND_SLACK or self.cand_overflow:
                                q1 = self._overlay_best(Ty, self.level, &q1z)
                                if q1 <= self.level:
                                    q1 = 0
                            else:
                                k = self.n_cand - 1
                                while k >= 0:
                                    v_c = self.cand_v[k]
                                    if v_c + h10 >= Ty:
                                        i_c = self.cand_i[k]
                                        delta = 0
                                        for t in range(h):
                                            if self._in_window(self.flips[t], i_c - 1):
                                                if self.fdir[t]:
                                                    delta += 1
                                                else:
                                                    delta -= 1
                                        if v_c + delta >= Ty:
                                            q1 = i_c
                                            q1z = v_c + delta
                                            break
                                    k -= 1

                    if q1 > 0:
                        # a window above the current level qualifies: accept
                        accepted += 1
                        old_tier = self.tier
                        old_level = self.level
                        for t in range(h):
                            self.bits[self.flips[t]] ^= 1
                        self.Zc = Zc_y
                        new_tier = TIER_PATH if q1 + self.margin < self.Lp else TIER_FINISH
                        if new_tier == TIER_PATH:
                            self._set_window(q1 - 1)
                            self._fetch_ranks("on", q1)
                            self.zin_star = q1z
                            self.major = q1
                            if self.Zc - self.zin_star != self.A:
                                violations += 1
                        else:
                            self._set_window(-1)
                            self.zin_star = -1
                            self.major = self.n - self.Zc
                        self.tier = <int> new_tier
                        self.level = q1
                        changed = True
                        if old_tier == TIER_PATH and (q1 - old_level) > jump_threshold:
                            big_jumps += 1
                        if entry_gen < 0:
                            entry_gen = g
                            entry_level = q1
                        if q1 > max_level:
                            max_level = q1
                        self.Mbound += h10
                        self.cand_valid = False
                        if self.Zc == 0:
                            hit = True
                    elif self.tier == TIER_PRE:
                        m_y = self.major + (h01 - w01) - (h10 - w10)
                        if m_y > self.major:
                            accept = True
                        elif m_y < self.major:
                            accept = False
                        elif w01 + w10 == 0:
                            accept = True
                        else:
                            accept = top_is01
                        if accept:
                            accepted += 1
                            for t in range(h):
                                self.bits[self.flips[t]] ^= 1
                            self.Zc = Zc_y
                            self.zin_star += w10 - w01
                            if m_y != self.major:
                                self.major = m_y
                                self._fetch_ranks("pre", m_y)
                            self.Mbound += h10
                            self.cand_valid = False
                    else:  # TIER_PATH, level retained or offspring is worse
                        zin_y_star = self.zin_star + w10 - w01
                        if zin_y_star >= Ty:
                            if w01 + w10 == 0:
                                accept = True
                            else:
                                accept = top_is01
                            if accept:
                                accepted += 1
                                for t in range(h):
                                    self.bits[self.flips[t]] ^= 1
                                self.Zc = Zc_y
                                self.zin_star = zin_y_star
                                if self.Zc - self.zin_star != self.A:
                                    violations += 1
                                self.Mbound += h10
                                self.cand_valid = False
                        # else reject: the level dropped, hence a smaller key

                for t in range(h):
                    self.flip_mark[self.flips[t]] = 0

            if g % stride == 0:
                if self.tier == TIER_PATH:
                    strides_total += 1
                    if self.zin_star >= zin_ok_threshold:
                        strides_ok += 1
            if record_trace and (hit or g == budget or g % stride == 0 or changed):
                trace.append((g, self.n - self.Zc, self.tier, self.level, self.zin_star,
                              -1 if self.zin_star < 0 else self.Zc - self.zin_star))

        return {
            "backend": BACKEND_NAME,
            "hit": hit,
            "generations": g,
            "accepted": accepted,
            "bits": np.asarray(self.bits_obj).copy(),
            "tier": self.tier,
            "level": self.level,
            "zin_star": self.zin_star,
            "zeros": self.Zc,
            "trace": trace,
            "entry_gen": entry_gen,
            "entry_level": entry_level,
            "max_level": max_level,
            "big_jumps": big_jumps,
            "strides_total": strides_total,
            "strides_ok": strides_ok,
            "violations": violations,
        }


def _structural_run(bits0, bit_generator, double p, long budget, long stride,
                    bint record_trace, bint dominance):
    cdef bitgen_t *rng = _acquire_bitgen(bit_generator)
    arr = np.ascontiguousarray(bits0, dtype=np.uint8).copy()
    cdef unsigned char[::1] bits = arr
    cdef Py_ssize_t n = arr.shape[0]
    flips_obj = np.zeros(n, dtype=np.int64)
    cdef long[::1] flips = flips_obj
    cdef long zc = 0
    cdef Py_ssize_t q
    for q in range(n):
        if bits[q] == 0:
            zc += 1
    if stride < 1:
        stride = 1
    cdef double lam = 0.0
    if 0.0 < p < 1.0:
        lam = log1p(-p)
    trace = []
    cdef long accepted = 0, g = 0
    cdef bint hit = zc == 0
    if record_trace:
        trace.append((0, <long> n - zc, -1, -1, -1, -1))
    cdef Py_ssize_t h, t
    cdef long pos, h10, h01, j
    cdef double u, du
    cdef bint accept
    while (not hit) and g < budget:
        g += 1
        h = 0
        if p >= 1.0:
            for pos in range(n):
                flips[h] = pos
                h += 1
        elif p > 0.0:
            pos = 0
            while pos < n:
                u = rng.next_double(rng.state)
                if u <= 0.0:
                    break
                du = log(u) / lam
                if du >= <double> (n - pos):
                    break
                pos += <long> du
                flips[h] = pos
                h += 1
                pos += 1
        if h == 0:
            accepted += 1
        else:
            h10 = 0
            for t in range(h):
                if bits[flips[t]]:
                    h10 += 1
            h01 = <long> h - h10
            if dominance:
                accept = h10 == 0 or (h01 >= 1 and h01 < h10)
            else:
                accept = h01 >= h10
            if accept:
                accepted += 1
                for t in range(h):
                    j = flips[t]
                    bits[j] ^= 1
                zc += h10 - h01
                if zc == 0:
                    hit = True
        if record_trace and (hit or g == budget or g % stride == 0):
            trace.append((g, <long> n - zc, -1, -1, -1, -1))
    return {
        "backend": BACKEND_NAME,
        "hit": hit,
        "generations": g,
        "accepted": accepted,
        "bits": arr,
        "tier": -1,
        "level": -1,
        "zin_star": -1,
        "zeros": zc,
        "trace": trace,
        "entry_gen": -1,
        "entry_level": -1,
        "max_level": 0,
        "big_jumps": 0,
        "strides_total": 0,
        "strides_ok": 0,
        "violations": 0,
    }


def run_onemax(bits0, bit_generator, double p, long budget, long stride=1000,
               bint record_trace=True):
    return _structural_run(bits0, bit_generator, p, budget, stride, record_trace, False)


def run_dominance(bits0, bit_generator, double p, long budget, long stride=1000,
                  bint record_trace=True):
    return _structural_run(bits0, bit_generator, p, budget, stride, record_trace, True)
