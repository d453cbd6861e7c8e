"""Reproducible batch experiments with deterministic CSV output.

Every study is driven by an :class:`ExperimentConfig`; its canonical
key=value serialization is echoed into trailing '#' comment rows of the
CSV, so a report can be re-run bit-for-bit from the report alone.  Row
order is deterministic (sorted by n, mutation constant, replicate, with
per-group aggregate rows last), replicate seeds are derived from the
master seed rather than drawn sequentially, and files are written
atomically.
"""

from __future__ import annotations

import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import ConfigError, Schema, parse_budget
from .drift import harmonic_drift_time_bound
from .engine import ACCEPT_DOMINANCE, ACCEPT_FITNESS, EaConfig, ea_run, summarize_runs
from .functions import OneMax
from .pathfn import WindowPathFunction
from .rng import derive_seed

__all__ = [
    "INSTANCE_PRESETS",
    "ExperimentConfig",
    "CsvReport",
    "emit_csv",
    "render_csv",
    "run_scaling_study",
    "run_stagnation_study",
    "single_run_trace",
    "build_instance",
]

# The surrogate preset makes the hard regime observable at desk scale; the
# strict preset keeps the theoretical constants (c >= 33, beta = 10/131,
# alpha = 1/(1000 c)) and is runnable but degenerate at feasible n: the
# theoretical path length collapses to 1, and floor(alpha*n) = 0 below
# n = 33000, so builds need an explicit length and the path can only be
# entered with an all-ones outside.  The small preset keeps exhaustive
# checks cheap.
INSTANCE_PRESETS: dict[str, dict] = {
    "surrogate_hard": {"beta": 0.4, "gamma": 0.45, "alpha": 0.01, "c": 10.0, "length": 10_000},
    "strict": {"beta": 10 / 131, "gamma": 20 / 221, "alpha": 1 / 33000, "c": 33.0, "length": None},
    "small": {"beta": 0.25, "gamma": 0.6, "alpha": 0.2, "c": 10.0, "length": 64},
}

_SCALING_HEADER = [
    "kind", "n", "c", "replicate", "T", "hit_optimum",
    "T_over_nlogn", "T_over_n15", "mean_T", "se_T", "censored_fraction", "bound_nlogn",
]
_STAGNATION_HEADER = [
    "kind", "n", "c", "replicate", "T", "hit_optimum",
    "entry_generation", "entry_level", "entry_le_betan", "max_level", "big_jumps",
    "strides_after_entry", "strides_zin_ok", "frac_zin_ok", "violations",
]
_TRACE_HEADER = [
    "generation", "ones", "tier", "level", "zeros_in_window", "zeros_outside_window",
]


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str                      # "scaling" | "stagnation"
    n_values: tuple
    c_values: tuple
    replicates: int
    budget: str
    seed: int
    function: str = "window_path"  # "onemax" | "window_path"
    preset: str = ""
    alpha: float | None = None
    beta: float | None = None
    gamma: float | None = None
    length: int | None = None
    end_margin: int = 0
    acceptance: str = ACCEPT_FITNESS
    stride: int = 1000
    workers: int = 1

    def __post_init__(self):
        if self.kind not in ("scaling", "stagnation"):
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.function not in ("onemax", "window_path"):
            raise ConfigError(f"unknown function family {self.function!r}")
        if self.preset and self.preset not in INSTANCE_PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}")
        if not self.n_values or not self.c_values:
            raise ConfigError("n_values and c_values must be non-empty")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.acceptance not in (ACCEPT_FITNESS, ACCEPT_DOMINANCE):
            raise ConfigError(f"unknown acceptance rule {self.acceptance!r}")
        self.resolved_instance_params()  # window_path configs must be complete

    def resolved_instance_params(self) -> dict:
        """alpha/beta/gamma/length with preset defaults applied."""
        base = dict(INSTANCE_PRESETS.get(self.preset, {}))
        base.pop("c", None)
        for key in ("alpha", "beta", "gamma", "length"):
            value = getattr(self, key)
            if value is not None:
                base[key] = value
        if self.function == "window_path":
            missing = [k for k in ("alpha", "beta", "gamma", "length") if base.get(k) is None]
            if missing:
                raise ConfigError(f"window_path needs {missing} (via keys or preset)")
        return base

    def to_kv(self) -> dict[str, str]:
        inst = self.resolved_instance_params() if self.function == "window_path" else {}
        kv = {
            "kind": self.kind,
            "function": self.function,
            "n_values": ",".join(str(v) for v in self.n_values),
            "c_values": ",".join(repr(float(v)) for v in self.c_values),
            "replicates": str(self.replicates),
            "budget": self.budget,
            "seed": str(self.seed),
            "acceptance": self.acceptance,
            "stride": str(self.stride),
            "workers": str(self.workers),
            "end_margin": str(self.end_margin),
        }
        for key in ("alpha", "beta", "gamma"):
            if inst.get(key) is not None:
                kv[key] = repr(float(inst[key]))
        if inst.get("length") is not None:
            kv["length"] = str(inst["length"])
        return kv

    @classmethod
    def from_kv(cls, raw: dict[str, str]) -> "ExperimentConfig":
        s = Schema(raw)
        cfg = cls(
            kind=s.str_("kind", required=True, choices={"scaling", "stagnation"}),
            function=s.str_("function", "window_path", choices={"onemax", "window_path"}),
            preset=s.str_("preset", "") or "",
            alpha=s.float_("alpha"),
            beta=s.float_("beta"),
            gamma=s.float_("gamma"),
            length=s.int_("length"),
            end_margin=s.int_("end_margin", 0),
            n_values=s.int_list("n_values", required=True),
            c_values=s.float_list("c_values", required=True),
            replicates=s.int_("replicates", required=True),
            budget=s.str_("budget", required=True),
            seed=s.int_("seed", required=True),
            acceptance=s.str_("acceptance", ACCEPT_FITNESS,
                              choices={ACCEPT_FITNESS, ACCEPT_DOMINANCE}),
            stride=s.int_("stride", 1000),
            workers=s.int_("workers", 1),
        )
        s.finish()
        return cfg


# ------------------------------------------------------------------ CSV layer

@dataclass
class CsvReport:
    header: list
    rows: list
    comments: list = field(default_factory=list)


def _cell(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def render_csv(report: CsvReport) -> str:
    width = len(report.header)
    lines = [",".join(str(h) for h in report.header)]
    for idx, row in enumerate(report.rows):
        if len(row) != width:
            raise ValueError(
                f"row {idx} has {len(row)} cells, header has {width}"
            )
        lines.append(",".join(_cell(v) for v in row))
    for comment in report.comments:
        lines.append(f"# {comment}")
    return "\n".join(lines) + "\n"


def emit_csv(report: CsvReport, path) -> None:
    """Validated atomic write: full render first, then temp file + rename."""
    payload = render_csv(report).encode("utf-8")
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(prefix=".csv-tmp-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _config_comments(cfg: ExperimentConfig, schema: str) -> list[str]:
    lines = [f"schema: {schema}", f"tool_version: {__version__}"]
    for key, value in sorted(cfg.to_kv().items()):
        lines.append(f"config: {key}={value}")
    return lines


def config_from_report_comments(comments) -> ExperimentConfig:
    kv: dict[str, str] = {}
    for line in comments:
        line = line.strip().lstrip("#").strip()
        if line.startswith("config: "):
            key, _, value = line[len("config: "):].partition("=")
            kv[key.strip()] = value.strip()
    return ExperimentConfig.from_kv(kv)


# ------------------------------------------------------------ task execution

_WORKER_INSTANCES: dict = {}


def build_instance(cfg: ExperimentConfig, n: int) -> WindowPathFunction:
    """The per-n instance of a study; identical across c values and
    replicates by construction (seed derived from the master seed and n)."""
    params = cfg.resolved_instance_params()
    return WindowPathFunction.build(
        n=n,
        alpha=params["alpha"],
        beta=params["beta"],
        gamma=params["gamma"],
        length=params["length"],
        master_seed=derive_seed(cfg.seed, "instance", n),
        end_margin=cfg.end_margin,
    )


def _cached_instance(cfg: ExperimentConfig, n: int) -> WindowPathFunction:
    key = (cfg.to_kv().get("alpha"), cfg.to_kv().get("beta"), cfg.to_kv().get("gamma"),
           cfg.to_kv().get("length"), cfg.seed, cfg.end_margin, n)
    inst = _WORKER_INSTANCES.get(key)
    if inst is None:
        inst = build_instance(cfg, n)
        _WORKER_INSTANCES.clear()  # one instance per worker is enough
        _WORKER_INSTANCES[key] = inst
    return inst


def _execute_task(args):
    cfg, n, c, r = args
    run_seed = derive_seed(cfg.seed, "run", n, repr(float(c)), r)
    params = cfg.resolved_instance_params() if cfg.function == "window_path" else {}
    beta = params.get("beta", 0.0)
    ea_cfg = EaConfig(
        mutation_c=c,
        budget=parse_budget(cfg.budget, n, c),
        seed=run_seed,
        acceptance=cfg.acceptance,
        trace_stride=cfg.stride,
        record_trace=False,
        jump_threshold=math.floor(beta * n) if beta else None,
        zin_ok_threshold=beta * n / 11.0,
    )
    f = _cached_instance(cfg, n) if cfg.function == "window_path" else OneMax(n)
    res = ea_run(f, ea_cfg)
    s = res.stats
    return (
        n, float(c), r, res.generations, res.hit_optimum,
        s.entry_generation, s.entry_level, s.max_level, s.big_jumps,
        s.strides_after_entry, s.strides_zin_ok, s.outside_zero_violations,
    )


def _run_all(cfg: ExperimentConfig) -> dict:
    tasks = [
        (cfg, n, c, r)
        for n in cfg.n_values
        for c in cfg.c_values
        for r in range(cfg.replicates)
    ]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            raw = list(pool.map(_execute_task, tasks, chunksize=8))
    else:
        raw = [_execute_task(t) for t in tasks]
    return {(row[0], row[1], row[2]): row for row in raw}


@dataclass(frozen=True)
class _Lite:
    generations: int
    hit_optimum: bool


def _group(results: dict, n: int, c: float, replicates: int):
    return [results[(n, float(c), r)] for r in range(replicates)]


# ------------------------------------------------------------------- studies

def run_scaling_study(cfg: ExperimentConfig) -> CsvReport:
    """Optimization-time scaling: per-replicate rows plus per-(n, c)
    aggregates with the analytic harmonic-drift bound where it applies."""
    if cfg.kind != "scaling":
        raise ConfigError(f"config kind is {cfg.kind!r}, expected 'scaling'")
    results = _run_all(cfg)
    rows = []
    warnings = []
    for n in sorted(cfg.n_values):
        nlogn = n * math.log(n)
        n15 = n**1.5
        for c in sorted(cfg.c_values):
            budget = parse_budget(cfg.budget, n, c)
            target = nlogn if c < 1.0 else n15
            if budget < 10 * target:
                warnings.append(
                    f"warning: budget {budget} below 10x the target bound "
                    f"({10 * target:.0f}) for n={n}, c={float(c)!r}; run proceeds"
                )
            group = _group(results, n, c, cfg.replicates)
            for (_, _, r, T, hit, *_rest) in group:
                rows.append([
                    "rep", n, float(c), r, T, hit,
                    T / nlogn, T / n15, "", "", "", "",
                ])
            summary = summarize_runs([_Lite(row[3], row[4]) for row in group])
            bound = harmonic_drift_time_bound(n, c) if 0.0 < c < 1.0 else ""
            rows.append([
                "agg", n, float(c), "", "", "",
                "", "", summary.mean_generations, summary.std_error,
                summary.censored_fraction, bound,
            ])
    return CsvReport(_SCALING_HEADER, rows,
                     warnings + _config_comments(cfg, "scaling-v1"))


def run_stagnation_study(cfg: ExperimentConfig) -> CsvReport:
    """Path-following behavior per replicate: entry generation/level, max
    level reached, oversized level jumps, and the fraction of trace strides
    that kept the window zero count above the invariant threshold."""
    if cfg.kind != "stagnation":
        raise ConfigError(f"config kind is {cfg.kind!r}, expected 'stagnation'")
    if cfg.function != "window_path":
        raise ConfigError("stagnation studies run on the window_path function")
    params = cfg.resolved_instance_params()
    results = _run_all(cfg)
    rows = []
    for n in sorted(cfg.n_values):
        beta_n = math.floor(params["beta"] * n)
        for c in sorted(cfg.c_values):
            group = _group(results, n, c, cfg.replicates)
            entered = [g for g in group if g[5] >= 0]
            for (_, _, r, T, hit, e_gen, e_lvl, max_lvl, jumps, st_tot, st_ok, viol) in group:
                frac = st_ok / st_tot if st_tot else ""
                entry_ok = 1 if (e_gen >= 0 and e_lvl <= beta_n) else 0
                rows.append([
                    "rep", n, float(c), r, T, hit, e_gen, e_lvl, entry_ok,
                    max_lvl, jumps, st_tot, st_ok, frac, viol,
                ])
            summary = summarize_runs([_Lite(g[3], g[4]) for g in group])
            st_tot = sum(g[9] for g in group)
            st_ok = sum(g[10] for g in group)
            rows.append([
                "agg", n, float(c), "",
                summary.mean_generations if summary.successes else "",
                summary.success_fraction,
                float(np.median([g[5] for g in entered])) if entered else "",
                float(np.median([g[6] for g in entered])) if entered else "",
                sum(1 for g in group if g[5] >= 0 and g[6] <= beta_n) / len(group),
                float(np.median([g[7] for g in group])),
                sum(g[8] for g in group),
                st_tot, st_ok,
                st_ok / st_tot if st_tot else "",
                sum(g[11] for g in group),
            ])
    return CsvReport(_STAGNATION_HEADER, rows, _config_comments(cfg, "stagnation-v1"))


def single_run_trace(f, ea_cfg: EaConfig, kv_echo: dict | None = None) -> CsvReport:
    """One EA run exported as trace rows (sentinel fields left empty for
    functions without window structure)."""
    res = ea_run(f, ea_cfg)
    rows = []
    for t in res.trace:
        rows.append([
            t.generation, t.ones,
            "" if t.tier < 0 else t.tier,
            "" if t.level < 0 else t.level,
            "" if t.zeros_in_window < 0 else t.zeros_in_window,
            "" if t.zeros_outside_window < 0 else t.zeros_outside_window,
        ])
    comments = [f"schema: trace-v1", f"tool_version: {__version__}"]
    for key, value in sorted((kv_echo or {}).items()):
        comments.append(f"config: {key}={value}")
    comments.append(f"result: hit_optimum={1 if res.hit_optimum else 0}")
    comments.append(f"result: generations={res.generations}")
    return CsvReport(_TRACE_HEADER, rows, comments)
