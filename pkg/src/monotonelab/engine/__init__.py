"""(1+1) EA runs: configuration, results, and backend selection.

Two interchangeable engines exist: a compiled extension
(:mod:`._fastcore`, built from Cython) and a pure-Python reference twin
(:mod:`._pycore`).  Both consume the same random draw protocol and produce
identical results; the compiled one is selected at import when available.
Set ``MONOTONELAB_BACKEND=python`` or ``=compiled`` to force a choice, or
pass ``backend=`` explicitly to :func:`ea_run`.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..bits import BitString, flip_positions, random_bitstring
from ..functions import OneMax
from ..pathfn import WindowPathFunction
from ..rng import stream
from . import _pycore

try:
    from . import _fastcore
except ImportError:  # extension not built: pure-Python fallback
    _fastcore = None

ACCEPT_FITNESS = "fitness"
ACCEPT_DOMINANCE = "dominance"

_forced = os.environ.get("MONOTONELAB_BACKEND", "")
if _forced == "python":
    _DEFAULT_BACKEND = "python"
elif _forced == "compiled":
    if _fastcore is None:
        raise ImportError("MONOTONELAB_BACKEND=compiled but the extension is not built")
    _DEFAULT_BACKEND = "compiled"
elif _forced:
    raise ValueError(f"MONOTONELAB_BACKEND must be 'python' or 'compiled', got {_forced!r}")
else:
    _DEFAULT_BACKEND = "compiled" if _fastcore is not None else "python"

__all__ = [
    "ACCEPT_DOMINANCE",
    "ACCEPT_FITNESS",
    "EaConfig",
    "RunResult",
    "RunSummary",
    "StagnationStats",
    "TraceRecord",
    "available_backends",
    "backend_name",
    "ea_run",
    "ea_step",
    "summarize_runs",
]


def backend_name() -> str:
    return _DEFAULT_BACKEND


def available_backends() -> tuple[str, ...]:
    return ("python", "compiled") if _fastcore is not None else ("python",)


@dataclass(frozen=True)
class EaConfig:
    """One EA run: mutation constant c (p = c/n), acceptance rule, budget."""

    mutation_c: float
    budget: int
    seed: int
    acceptance: str = ACCEPT_FITNESS
    trace_stride: int = 1000
    record_trace: bool = True
    # stagnation monitors; None disables the jump counter / zin threshold
    jump_threshold: int | None = None
    zin_ok_threshold: float = 0.0

    def __post_init__(self):
        if self.mutation_c <= 0:
            raise ValueError(f"mutation_c must be > 0, got {self.mutation_c}")
        if self.budget < 0:
            raise ValueError("budget must be >= 0")
        if self.acceptance not in (ACCEPT_FITNESS, ACCEPT_DOMINANCE):
            raise ValueError(f"unknown acceptance rule {self.acceptance!r}")
        if self.trace_stride < 1:
            raise ValueError("trace_stride must be >= 1")


class TraceRecord(NamedTuple):
    generation: int
    ones: int
    tier: int
    level: int
    zeros_in_window: int
    zeros_outside_window: int


@dataclass(frozen=True)
class StagnationStats:
    entry_generation: int  # -1 when the path was never entered
    entry_level: int
    max_level: int
    big_jumps: int
    strides_after_entry: int
    strides_zin_ok: int
    outside_zero_violations: int
    accepted_steps: int


@dataclass(frozen=True)
class RunResult:
    n: int
    hit_optimum: bool
    generations: int
    final: BitString
    trace: tuple
    stats: StagnationStats
    backend: str
    seed: int
    mutation_c: float


def _wrap(raw: dict, n: int, cfg: EaConfig) -> RunResult:
    stats = StagnationStats(
        entry_generation=raw["entry_gen"],
        entry_level=raw["entry_level"],
        max_level=raw["max_level"],
        big_jumps=raw["big_jumps"],
        strides_after_entry=raw["strides_total"],
        strides_zin_ok=raw["strides_ok"],
        outside_zero_violations=raw["violations"],
        accepted_steps=raw["accepted"],
    )
    return RunResult(
        n=n,
        hit_optimum=bool(raw["hit"]),
        generations=int(raw["generations"]),
        final=BitString.from_array(raw["bits"]),
        trace=tuple(TraceRecord(*row) for row in raw["trace"]),
        stats=stats,
        backend=raw["backend"],
        seed=cfg.seed,
        mutation_c=cfg.mutation_c,
    )


def _resolve_backend(backend: str | None) -> str:
    name = backend or _DEFAULT_BACKEND
    if name not in ("python", "compiled"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "compiled" and _fastcore is None:
        raise RuntimeError("compiled backend requested but the extension is not built")
    return name


def ea_run(
    f,
    cfg: EaConfig,
    initial: BitString | None = None,
    backend: str | None = None,
) -> RunResult:
    """Run the (1+1) EA on ``f`` until the all-ones optimum or the budget.

    Initialization is uniform from ``stream(seed, 'init')`` unless an
    explicit ``initial`` point is supplied (test hook); mutation draws come
    from ``stream(seed, 'mutation')``.  ``generations`` counts mutations
    performed, so a run whose start is already optimal reports 0.
    """
    n = f.n
    if cfg.mutation_c / n > 1.0:
        raise ValueError(f"mutation_c/n = {cfg.mutation_c / n} exceeds 1 for n={n}")
    if initial is None:
        x0 = random_bitstring(n, stream(cfg.seed, "init"))
    else:
        if initial.n != n:
            raise ValueError("initial point has the wrong length")
        x0 = initial
    bits0 = x0.to_array()
    p = cfg.mutation_c / n
    mut = stream(cfg.seed, "mutation")
    name = _resolve_backend(backend)

    if cfg.acceptance == ACCEPT_DOMINANCE:
        if name == "compiled":
            raw = _fastcore.run_dominance(
                bits0, mut.bit_generator, p, cfg.budget, cfg.trace_stride, cfg.record_trace
            )
        else:
            raw = _pycore.run_dominance(
                bits0, mut, p, cfg.budget, cfg.trace_stride, cfg.record_trace
            )
        return _wrap(raw, n, cfg)

    if isinstance(f, WindowPathFunction):
        jt = cfg.jump_threshold if cfg.jump_threshold is not None else f.Lprime
        if name == "compiled":
            eng = _fastcore.PathEngine(f)
            eng.attach_rng(mut.bit_generator)
            eng.reset(bits0)
            raw = eng.run(
                cfg.budget, p, cfg.trace_stride, cfg.record_trace, jt, cfg.zin_ok_threshold
            )
        else:
            eng = _pycore.PathEngineRef(f)
            eng.attach_rng(mut)
            eng.reset(bits0)
            raw = eng.run(
                cfg.budget, p, cfg.trace_stride, cfg.record_trace, jt, cfg.zin_ok_threshold
            )
        return _wrap(raw, n, cfg)

    if isinstance(f, OneMax):
        if name == "compiled":
            raw = _fastcore.run_onemax(
                bits0, mut.bit_generator, p, cfg.budget, cfg.trace_stride, cfg.record_trace
            )
        else:
            raw = _pycore.run_onemax(
                bits0, mut, p, cfg.budget, cfg.trace_stride, cfg.record_trace
            )
        return _wrap(raw, n, cfg)

    # arbitrary fitness objects always go through the reference engine
    raw = _pycore.run_generic(f, bits0, mut, p, cfg.budget, cfg.trace_stride, cfg.record_trace)
    return _wrap(raw, n, cfg)


def ea_step(x: BitString, f, cfg: EaConfig, gen: np.random.Generator):
    """One mutation + selection from ``x``; returns (x_plus, accepted)."""
    n = x.n
    p = cfg.mutation_c / n
    if p > 1.0:
        raise ValueError(f"mutation_c/n = {p} exceeds 1")
    pos = flip_positions(gen, n, p)
    y = x.with_flips(pos) if pos.size else x
    if cfg.acceptance == ACCEPT_DOMINANCE:
        if pos.size == 0:
            return y, True
        arr = x.to_array()
        h10 = int(arr[pos - 1].sum())
        h01 = int(pos.size) - h10
        accepted = h10 == 0 or (h01 >= 1 and h01 < h10)
    else:
        accepted = f.fitness(y) >= f.fitness(x)
    return (y, True) if accepted else (x, False)


@dataclass(frozen=True)
class RunSummary:
    runs: int
    successes: int
    success_fraction: float
    censored_fraction: float
    mean_generations: float | None
    median_generations: float | None
    std_error: float | None


def summarize_runs(results) -> RunSummary:
    """Aggregate run outcomes; statistics cover successful runs only, with
    the censoring fraction always reported alongside."""
    results = list(results)
    if not results:
        raise ValueError("no runs to summarize")
    total = len(results)
    times = np.array([r.generations for r in results if r.hit_optimum], dtype=float)
    k = times.size
    if k == 0:
        return RunSummary(total, 0, 0.0, 1.0, None, None, None)
    se = float(times.std(ddof=1) / np.sqrt(k)) if k >= 2 else 0.0
    return RunSummary(
        runs=total,
        successes=int(k),
        success_fraction=k / total,
        censored_fraction=(total - k) / total,
        mean_generations=float(times.mean()),
        median_generations=float(np.median(times)),
        std_error=se,
    )
