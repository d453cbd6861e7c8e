"""Closed-form drift/loss bounds and Monte Carlo estimators of the matching
quantities, plus an empirical hitting-time probe.

Every estimator reports its conditioning and the fraction of raw samples
meeting it, and refuses to fabricate a mean from zero conditioned samples
(an inconclusive estimate carries ``mean=None``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pathfn import TIER_PATH, WindowPathFunction
from .rng import stream

__all__ = [
    "DriftEstimate",
    "BinvalProcessConfig",
    "HittingTimeReport",
    "harmonic_drift_time_bound",
    "binval_drift_lower_bound",
    "estimate_binval_drift",
    "outside_loss_bound",
    "estimate_outside_loss",
    "estimate_sliding_drift",
    "sample_on_path_state",
    "hitting_time_probe",
    "biased_walk",
    "window_zeros_process",
]

_CHUNK = 1 << 15


@dataclass(frozen=True)
class DriftEstimate:
    """Monte Carlo estimate of a one-step drift quantity.

    ``samples`` counts the conditioned subsample the mean is taken over;
    ``std_error`` is its sample standard deviation / sqrt(samples).  An
    estimate with no conditioned samples is inconclusive: mean and
    std_error are None rather than zero.
    """

    mean: float | None
    std_error: float | None
    samples: int
    raw_samples: int
    acceptance_rate: float
    conditioning: str
    invalid_states: int = 0

    @property
    def conclusive(self) -> bool:
        return self.mean is not None


@dataclass(frozen=True)
class BinvalProcessConfig:
    """Random-BINVAL one-step model: a u-bit window inside an n-bit string,
    zeros0 initial 0-bits, per-bit flip probability c/n."""

    u: int
    zeros0: int
    c: float
    n: int

    def __post_init__(self):
        if not 0 <= self.zeros0 <= self.u <= self.n:
            raise ValueError(f"need 0 <= zeros0 <= u <= n, got {self}")
        if self.c < 0 or self.c > self.n:
            raise ValueError("mutation constant must satisfy 0 <= c <= n")


def harmonic_drift_time_bound(n: int, c: float) -> float:
    """Upper bound (ln n + 1) * n * e^c / (c (1 - c)) on the expected
    optimization time of the EA on any monotone function at rate c/n, valid
    for 0 < c < 1 (the harmonic-potential drift argument has a pole at 1)."""
    if not 0.0 < c < 1.0:
        raise ValueError(f"the bound requires 0 < c < 1, got c={c}")
    if n < 1:
        raise ValueError("n must be >= 1")
    return (math.log(n) + 1.0) * n * math.exp(c) / (c * (1.0 - c))


def binval_drift_lower_bound(beta: float, eps: float, c: float) -> float:
    """Closed-form lower bound (c*(4/5*beta - eps) - 2) / 11 on the window
    zero-drift of the random-BINVAL model; positive exactly in the regime
    c > 2 / (4/5*beta - eps)."""
    if not 0.0 <= eps < beta < 1.0:
        raise ValueError(f"need 0 <= eps < beta < 1, got beta={beta}, eps={eps}")
    return (c * (0.8 * beta - eps) - 2.0) / 11.0


def estimate_binval_drift(
    cfg: BinvalProcessConfig, samples: int, gen: np.random.Generator
) -> DriftEstimate:
    """One-step drift of the 0-bit count under a fresh random BINVAL.

    Per sample: flip each of the u bits independently with probability c/n,
    draw a fresh uniform weight order independent of the zero positions,
    accept iff no bit flipped or the heaviest flipped bit was a 0->1 flip,
    and record the accepted change in the number of 0-bits (0 when
    rejected).  Mean over all samples.

    Since the weight order is independent of the zeros, placing the zeros0
    zeros on fixed positions and ranking the bits by iid uniform scores
    realizes the same joint law as uniformly re-placing the zeros with a
    uniformly permuted weight vector.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    p = cfg.c / cfg.n
    total = 0
    s1 = 0.0
    s2 = 0.0
    accepted_events = 0
    while total < samples:
        m = min(_CHUNK, samples - total)
        flips = gen.random((m, cfg.u)) < p
        scores = gen.random((m, cfg.u))
        k = flips.sum(axis=1)
        z_fl = flips[:, : cfg.zeros0].sum(axis=1)
        top = np.argmax(np.where(flips, scores, -1.0), axis=1)
        accept = (k == 0) | ((k > 0) & (top < cfg.zeros0))
        delta = np.where(accept, (k - z_fl) - z_fl, 0).astype(float)
        s1 += float(delta.sum())
        s2 += float((delta * delta).sum())
        accepted_events += int(np.count_nonzero(accept & (k > 0)))
        total += m
    mean = s1 / total
    var = max(0.0, (s2 - total * mean * mean) / (total - 1)) if total > 1 else 0.0
    return DriftEstimate(
        mean=mean,
        std_error=math.sqrt(var / total),
        samples=total,
        raw_samples=total,
        acceptance_rate=accepted_events / total,
        conditioning="unconditional one-step drift (rejected mutations contribute 0)",
    )


def outside_loss_bound(alpha: float, c: float, n: int) -> float:
    """Upper bound 1 + (e/(1 - c/n))^(alpha*c) * c*alpha/(1 - c*alpha) on
    the conditional loss of 0-bits outside the window given a positive
    loss; requires c*alpha < 1 (else the geometric series diverges)."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if c * alpha >= 1.0:
        raise ValueError(f"bound requires c*alpha < 1, got c*alpha={c * alpha}")
    if not 0 <= c < n:
        raise ValueError("need 0 <= c < n")
    base = math.e / (1.0 - c / n)
    return 1.0 + base ** (alpha * c) * (c * alpha) / (1.0 - c * alpha)


def estimate_outside_loss(
    alpha: float,
    beta: float,
    c: float,
    n: int,
    samples: int,
    gen: np.random.Generator,
) -> DriftEstimate:
    """Conditional mean of Z0 - Z1 given Z0 > Z1, where Z0 counts 0->1
    flips among the floor(alpha*n) outside zeros and Z1 counts 1->0 flips
    among the (1-alpha-beta)*n outside ones, each bit flipping with
    probability c/n (exact binomial sampling, no normal approximation)."""
    zeros_out = math.floor(alpha * n)
    if zeros_out < 1:
        raise ValueError(f"floor(alpha*n) = {zeros_out}: conditioning on Z0 > Z1 is impossible")
    ones_out = round((1.0 - alpha - beta) * n)
    if ones_out < 0:
        raise ValueError("(1 - alpha - beta) * n must be >= 0")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    p = c / n
    total = 0
    kept = 0
    s1 = 0.0
    s2 = 0.0
    while total < samples:
        m = min(_CHUNK, samples - total)
        z0 = gen.binomial(zeros_out, p, size=m)
        z1 = gen.binomial(ones_out, p, size=m)
        diff = (z0 - z1)[z0 > z1].astype(float)
        kept += diff.size
        s1 += float(diff.sum())
        s2 += float((diff * diff).sum())
        total += m
    if kept == 0:
        return DriftEstimate(
            mean=None, std_error=None, samples=0, raw_samples=total,
            acceptance_rate=0.0,
            conditioning="Z0 > Z1 (no qualifying samples: inconclusive)",
        )
    mean = s1 / kept
    var = max(0.0, (s2 - kept * mean * mean) / (kept - 1)) if kept > 1 else 0.0
    return DriftEstimate(
        mean=mean,
        std_error=math.sqrt(var / kept),
        samples=kept,
        raw_samples=total,
        acceptance_rate=kept / total,
        conditioning="Z0 > Z1 (outside 0->1 flips exceed outside 1->0 flips)",
    )


def sample_on_path_state(
    inst: WindowPathFunction,
    gen: np.random.Generator,
    level: int,
    zeros_inside: int,
) -> np.ndarray:
    """Candidate on-path state with the given window-zero count.

    zeros_inside zeros go into window ``level`` and exactly the
    outside-zero budget goes elsewhere; all other bits are one.  Real
    on-path states always carry a zero on the window's leading slot (else
    the next window would qualify too and the level would be higher), so
    the leading slot is pinned to zero and the window's successor entry to
    one; this only removes the dominant rejection mode.  The caller must
    still validate that the chosen window really is the level of the
    result - a farther window can qualify by accident, and such states are
    rejected, never patched.
    """
    n, ell = inst.n, inst.ell
    if not 1 <= level <= inst.Lprime:
        raise ValueError("level out of range")
    if not 1 <= zeros_inside <= ell:
        raise ValueError("zeros_inside must be >= 1 (the leading slot is a zero)")
    bits = np.ones(n, dtype=np.uint8)
    window = inst.seq0[level - 1 : level - 1 + ell]
    bits[window[0]] = 0
    inside_pick = 1 + gen.permutation(ell - 1)[: zeros_inside - 1]
    bits[window[inside_pick]] = 0
    blocked = window
    if level - 1 + ell < inst.length:
        blocked = np.append(window, inst.seq0[level - 1 + ell])
    outside = np.setdiff1d(np.arange(n, dtype=np.int64), blocked, assume_unique=False)
    out_pick = gen.permutation(outside.size)[: inst.alpha_threshold]
    bits[outside[out_pick]] = 0
    return bits


def estimate_sliding_drift(
    inst: WindowPathFunction,
    c: float,
    samples: int,
    gen: np.random.Generator,
    zin_range: tuple[int, int] | None = None,
    level_range: tuple[int, int] | None = None,
    backend: str | None = None,
) -> DriftEstimate:
    """Window-zero change across level transitions, measured on real states.

    Per raw sample: draw an on-path state (level uniform in level_range,
    window zeros uniform in zin_range, outside zeros exactly the threshold),
    run one EA generation at rate c/n, and keep the sample iff the level
    strictly increased and the new level is still below the path end.  The
    recorded value is zeros(new window of x+) - zeros(old window of x).
    States whose realized level differs from the requested one are rejected
    and counted, never silently patched.
    """
    from . import engine as eng_mod

    n = inst.n
    beta_n = inst.beta * n
    if zin_range is None:
        zin_range = (math.ceil(beta_n / 11.0), math.floor(beta_n / 10.0))
    if level_range is None:
        level_range = (inst.ell, max(inst.ell + 1, inst.Lprime - 2 * inst.ell))
    z_lo, z_hi = zin_range
    l_lo, l_hi = level_range
    if not (0 <= z_lo <= z_hi <= inst.ell):
        raise ValueError(f"invalid zin_range {zin_range}")
    if not (1 <= l_lo <= l_hi <= inst.Lprime):
        raise ValueError(f"invalid level_range {level_range}")
    if samples < 1:
        raise ValueError("samples must be >= 1")

    name = backend or eng_mod.backend_name()
    if name == "compiled":
        engine = eng_mod._fastcore.PathEngine(inst)
    else:
        engine = eng_mod._pycore.PathEngineRef(inst)
    mut = stream(int(gen.integers(0, 2**63)), "sliding-drift-mutation")
    engine.attach_rng(mut if name == "python" else mut.bit_generator)

    p = c / n
    invalid = 0
    transitions = 0
    s1 = 0.0
    s2 = 0.0
    for _ in range(samples):
        level = int(gen.integers(l_lo, l_hi + 1))
        zin = int(gen.integers(z_lo, z_hi + 1))
        bits = sample_on_path_state(inst, gen, level, zin)
        engine.reset(bits)
        raw0_tier, raw0_level, raw0_zin = engine_state(engine)
        if raw0_tier != TIER_PATH or raw0_level != level or raw0_zin != zin:
            invalid += 1
            continue
        raw = engine.run(1, p, 10**9, False, inst.Lprime, 0.0)
        if raw["tier"] == TIER_PATH and raw["level"] > level and raw["level"] < inst.Lprime:
            d = float(raw["zin_star"] - zin)
            transitions += 1
            s1 += d
            s2 += d * d
    valid = samples - invalid
    if transitions == 0:
        return DriftEstimate(
            mean=None, std_error=None, samples=0, raw_samples=samples,
            acceptance_rate=0.0,
            conditioning="level strictly increased, new level below path end (inconclusive)",
            invalid_states=invalid,
        )
    mean = s1 / transitions
    var = (
        max(0.0, (s2 - transitions * mean * mean) / (transitions - 1))
        if transitions > 1
        else 0.0
    )
    return DriftEstimate(
        mean=mean,
        std_error=math.sqrt(var / transitions),
        samples=transitions,
        raw_samples=samples,
        acceptance_rate=transitions / valid if valid else 0.0,
        conditioning="level strictly increased, new level below path end",
        invalid_states=invalid,
    )


def engine_state(engine) -> tuple[int, int, int]:
    """(tier, level, zeros-in-active-window) of an engine's incumbent."""
    if hasattr(engine, "state"):
        return engine.state()
    return engine.tier, engine.level, engine.zin_star


@dataclass(frozen=True)
class HittingTimeReport:
    trials: int
    hits: int
    hit_fraction: float
    escaped: int
    time_quantiles: dict | None


def hitting_time_probe(
    process,
    a: int,
    b: int,
    start: int,
    budget: int,
    trials: int,
    gen: np.random.Generator,
    escape_margin: int | None = None,
) -> HittingTimeReport:
    """Fraction of trajectories from ``start`` (>= b) that reach states
    <= a within ``budget`` steps, plus quantiles of the first-hitting time.

    ``process(state, gen) -> state`` is one transition.  For processes with
    a steady upward drift an ``escape_margin`` may be given: trajectories
    reaching ``a + escape_margin`` are declared non-hitting without burning
    the rest of their budget (the neglected return probability decays
    geometrically in the margin; choose it accordingly).
    """
    if not a < b <= start:
        raise ValueError("need a < b <= start")
    if trials < 1 or budget < 1:
        raise ValueError("trials and budget must be >= 1")
    hits = []
    escaped = 0
    for _ in range(trials):
        s = start
        for t in range(1, budget + 1):
            s = process(s, gen)
            if s <= a:
                hits.append(t)
                break
            if escape_margin is not None and s >= a + escape_margin:
                escaped += 1
                break
    qs = None
    if hits:
        arr = np.array(hits, dtype=float)
        qs = {q: float(np.percentile(arr, q)) for q in (10, 25, 50, 75, 90)}
    return HittingTimeReport(
        trials=trials,
        hits=len(hits),
        hit_fraction=len(hits) / trials,
        escaped=escaped,
        time_quantiles=qs,
    )


def biased_walk(p_up: float):
    """+-1 random walk stepping up with probability p_up."""

    def step(state: int, gen: np.random.Generator) -> int:
        return state + 1 if gen.random() < p_up else state - 1

    return step


def window_zeros_process(
    inst: WindowPathFunction,
    c: float,
    gen_embed: np.random.Generator,
    backend: str | None = None,
    level_range: tuple[int, int] | None = None,
    max_embed_tries: int = 50,
):
    """Markov abstraction of the window-zero count on real instance states.

    Each step embeds the integer state as a fresh on-path configuration
    with that many window zeros (level drawn from level_range), runs one EA
    generation, and returns the new current-window zero count.  Embeddings
    that fail validation are redrawn up to ``max_embed_tries`` times.
    """
    from . import engine as eng_mod

    if level_range is None:
        level_range = (inst.ell, max(inst.ell + 1, inst.Lprime - 2 * inst.ell))
    name = backend or eng_mod.backend_name()
    if name == "compiled":
        engine = eng_mod._fastcore.PathEngine(inst)
    else:
        engine = eng_mod._pycore.PathEngineRef(inst)
    mut = stream(int(gen_embed.integers(0, 2**63)), "window-zeros-process")
    engine.attach_rng(mut if name == "python" else mut.bit_generator)
    p = c / inst.n
    l_lo, l_hi = level_range

    def step(state: int, gen: np.random.Generator) -> int:
        z = max(0, min(inst.ell, int(state)))
        for _ in range(max_embed_tries):
            level = int(gen.integers(l_lo, l_hi + 1))
            bits = sample_on_path_state(inst, gen, level, z)
            engine.reset(bits)
            tier0, level0, zin0 = engine_state(engine)
            if tier0 == TIER_PATH and level0 == level and zin0 == z:
                raw = engine.run(1, p, 10**9, False, inst.Lprime, 0.0)
                if raw["tier"] == TIER_PATH:
                    return int(raw["zin_star"])
                return z
        raise RuntimeError(f"could not embed window-zero state {state}")

    return step
