"""Batch-oriented command line interface.

Subcommands: ``construct`` (build + serialize a window sequence),
``verify`` (window overlap properties), ``check-monotone``, ``run`` (single
EA run with trace CSV), ``scaling``, ``stagnation``, and ``drift``
(bound calculators and Monte Carlo estimators).  Configuration comes from
one key=value text file plus ``--set key=value`` overrides; outputs land in
``--out`` or, for relative paths, in ``$MONOTONELAB_OUT_DIR`` (default:
current directory).

Exit codes: 0 success, 1 a checked invariant failed (monotonicity
counterexample, window property violation, EA invariant violation),
2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from . import __version__
from .config import ConfigError, Schema, parse_assignment, parse_budget, parse_kv_text
from .drift import (
    BinvalProcessConfig,
    binval_drift_lower_bound,
    biased_walk,
    estimate_binval_drift,
    estimate_outside_loss,
    estimate_sliding_drift,
    harmonic_drift_time_bound,
    hitting_time_probe,
    outside_loss_bound,
)
from .engine import EaConfig, backend_name
from .experiments import (
    INSTANCE_PRESETS,
    CsvReport,
    ExperimentConfig,
    emit_csv,
    run_scaling_study,
    run_stagnation_study,
    single_run_trace,
)
from .functions import LinearFunction, OneMax, check_monotone
from .pathfn import WindowPathFunction
from .rng import stream
from .windows import (
    build_window_sequence,
    collision_failure_bound,
    load_window_sequence,
    save_window_sequence,
    surrogate_parameters,
    theoretical_parameters,
    verify_window_properties,
)

_DRIFT_HEADER = [
    "quantity", "parameters", "mean", "std_error", "samples",
    "acceptance_rate", "bound_value", "bound_relation",
]


def _out_path(arg_out: str | None, default_name: str) -> str:
    base = os.environ.get("MONOTONELAB_OUT_DIR", ".")
    if arg_out is None:
        return os.path.join(base, default_name)
    if os.path.isabs(arg_out):
        return arg_out
    return os.path.join(base, arg_out)


def _load_raw(args) -> dict[str, str]:
    raw: dict[str, str] = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                raw.update(parse_kv_text(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
    for item in args.set or []:
        key, value = parse_assignment(item)
        raw[key] = value
    return raw


def _instance_from_schema(s: Schema) -> WindowPathFunction:
    descriptor = s.str_("instance")
    if descriptor:
        # consume keys that would otherwise be flagged unknown
        s.str_("preset"), s.float_("alpha"), s.float_("beta"), s.float_("gamma")
        s.int_("length"), s.int_("end_margin", 0), s.int_("instance_seed")
        s.int_("n")
        return WindowPathFunction.load(descriptor)
    preset = s.str_("preset", "") or ""
    base = dict(INSTANCE_PRESETS.get(preset, {}))
    if preset and preset not in INSTANCE_PRESETS:
        raise ConfigError(f"unknown preset {preset!r}")
    n = s.int_("n", required=True)
    alpha = s.float_("alpha", base.get("alpha"))
    beta = s.float_("beta", base.get("beta"))
    gamma = s.float_("gamma", base.get("gamma"))
    length = s.int_("length", base.get("length"))
    margin = s.int_("end_margin", 0)
    seed = s.int_("instance_seed", 0)
    missing = [k for k, v in (("alpha", alpha), ("beta", beta), ("gamma", gamma),
                              ("length", length)) if v is None]
    if missing:
        raise ConfigError(f"window_path instance needs {missing} (directly or via preset)")
    return WindowPathFunction.build(
        n=n, alpha=alpha, beta=beta, gamma=gamma, length=length,
        master_seed=seed, end_margin=margin,
    )


# ------------------------------------------------------------- subcommands

def _cmd_construct(args) -> int:
    s = Schema(_load_raw(args))
    n = s.int_("n", required=True)
    beta = s.float_("beta")
    ell = s.int_("ell")
    gamma = s.float_("gamma", required=True)
    length = s.int_("length")
    seed = s.int_("seed", 0)
    s.finish()
    if (beta is None) == (ell is None):
        raise ConfigError("give exactly one of beta= or ell=")
    if beta is None:
        beta = ell / n
    rho = beta / (1.0 - 2.0 * beta) if beta < 0.5 else math.inf
    if rho < gamma < 1.0:
        params = theoretical_parameters(n, beta, gamma)
    else:
        params = surrogate_parameters(n, beta, gamma)
    eff_length = length if length is not None else params.L
    if eff_length is None:
        raise ConfigError("no usable theoretical length; give length= explicitly")
    seq = build_window_sequence(params, L_override=eff_length, gen=stream(seed, "construction"))
    path = _out_path(args.out, "windows.wseq")
    save_window_sequence(seq, path)
    print(f"n={params.n} ell={params.ell} rho={params.rho!r} gamma={params.gamma!r}")
    print(f"theoretical_length={params.L} effective_length={seq.length} Lprime={seq.Lprime}")
    if params.overlap_guarantee:
        bound = collision_failure_bound(params.ell, params.rho, params.gamma, seq.length)
        print(f"overlap_failure_bound={bound!r}")
    else:
        print("overlap_failure_bound=n/a (gamma <= rho: no guarantee)")
    print(f"wrote {path}")
    return 0


def _cmd_verify(args) -> int:
    s = Schema(_load_raw(args))
    path = s.str_("sequence", required=True)
    gamma = s.float_("gamma", required=True)
    mode = s.str_("mode", "exact", choices={"exact", "sampled"})
    sample_pairs = s.int_("sample_pairs", 10_000)
    seed = s.int_("seed", 0)
    s.finish()
    seq = load_window_sequence(path)
    rep = verify_window_properties(
        seq, gamma, mode=mode, sample_pairs=sample_pairs,
        gen=stream(seed, "verify"),
    )
    print(f"property_i={'pass' if rep.property_i else 'FAIL'}")
    print(
        f"property_ii={'pass' if rep.property_ii else 'FAIL'} "
        f"max_overlap={rep.max_overlap} limit={rep.overlap_limit!r} "
        f"worst_pair={rep.worst_pair} pairs_checked={rep.pairs_checked}"
    )
    return 0 if rep.passed else 1


def _cmd_check_monotone(args) -> int:
    s = Schema(_load_raw(args))
    family = s.str_("function", "onemax", choices={"onemax", "linear", "window_path"})
    mode = s.str_("mode", "exhaustive", choices={"exhaustive", "sampled"})
    samples = s.int_("samples", 10_000)
    seed = s.int_("seed", 0)
    if family == "window_path":
        f = _instance_from_schema(s)
        n = f.n
    elif family == "linear":
        n = s.int_("n", required=True)
        weights = s.float_list("weights", tuple([1.0] * n))
        f = LinearFunction(weights)
        n = f.n
    else:
        n = s.int_("n", required=True)
        f = OneMax(n)
    s.finish()
    rep = check_monotone(f, n, mode=mode, samples=samples, gen=stream(seed, "monotone"))
    if rep.passed:
        print(f"monotone=pass checked_pairs={rep.checked_pairs}")
        return 0
    x, j = rep.counterexample
    print(f"monotone=FAIL witness_x={x.to01()} flip_position={j}")
    return 1


def _cmd_run(args) -> int:
    s = Schema(_load_raw(args))
    family = s.str_("function", "window_path", choices={"onemax", "window_path"})
    c = s.float_("c", required=True)
    budget_rule = s.str_("budget", required=True)
    seed = s.int_("seed", 0)
    acceptance = s.str_("acceptance", "fitness", choices={"fitness", "dominance"})
    stride = s.int_("stride", 1000)
    if family == "window_path":
        f = _instance_from_schema(s)
    else:
        f = OneMax(s.int_("n", required=True))
    s.finish()
    cfg = EaConfig(
        mutation_c=c,
        budget=parse_budget(budget_rule, f.n, c),
        seed=seed,
        acceptance=acceptance,
        trace_stride=stride,
    )
    echo = {"function": family, "n": str(f.n), "c": repr(float(c)),
            "budget": budget_rule, "seed": str(seed), "acceptance": acceptance,
            "stride": str(stride)}
    report = single_run_trace(f, cfg, echo)
    path = _out_path(args.out, "run_trace.csv")
    emit_csv(report, path)
    print(f"wrote {path} ({len(report.rows)} trace rows, backend={backend_name()})")
    return 0


def _study(args, kind: str) -> int:
    raw = _load_raw(args)
    raw.setdefault("kind", kind)
    if raw.get("kind") != kind:
        raise ConfigError(f"config kind={raw.get('kind')!r} does not match subcommand {kind!r}")
    preset = raw.get("preset", "")
    if preset and "c_values" not in raw and preset in INSTANCE_PRESETS:
        raw.setdefault("c_values", repr(float(INSTANCE_PRESETS[preset]["c"])))
    cfg = ExperimentConfig.from_kv(raw)
    report = run_scaling_study(cfg) if kind == "scaling" else run_stagnation_study(cfg)
    path = _out_path(args.out, f"{kind}.csv")
    emit_csv(report, path)
    violations = 0
    if kind == "stagnation":
        vcol = report.header.index("violations")
        kcol = report.header.index("kind")
        violations = sum(int(r[vcol]) for r in report.rows if r[kcol] == "rep")
    print(f"wrote {path} ({len(report.rows)} rows)")
    if violations:
        print(f"outside-zero invariant violations detected: {violations}")
        return 1
    return 0


def _cmd_drift(args) -> int:
    s = Schema(_load_raw(args))
    quantity = s.str_(
        "quantity", required=True,
        choices={"harmonic_bound", "binval_drift", "outside_loss", "sliding_drift",
                 "hitting_probe"},
    )
    seed = s.int_("seed", 0)
    row: list
    if quantity == "harmonic_bound":
        n = s.int_("n", required=True)
        c = s.float_("c", required=True)
        s.finish()
        bound = harmonic_drift_time_bound(n, c)
        row = [quantity, f"n={n};c={c!r}", "", "", "", "", bound, "upper"]
    elif quantity == "binval_drift":
        cfg = BinvalProcessConfig(
            u=s.int_("u", required=True), zeros0=s.int_("zeros0", required=True),
            c=s.float_("c", required=True), n=s.int_("n", required=True),
        )
        samples = s.int_("samples", 100_000)
        s.finish()
        est = estimate_binval_drift(cfg, samples, stream(seed, "binval-drift"))
        bound = binval_drift_lower_bound(cfg.u / cfg.n, 0.0, cfg.c)
        row = [quantity, f"u={cfg.u};zeros0={cfg.zeros0};c={cfg.c!r};n={cfg.n}",
               est.mean, est.std_error, est.samples, est.acceptance_rate, bound, "lower"]
    elif quantity == "outside_loss":
        alpha = s.float_("alpha", required=True)
        beta = s.float_("beta", required=True)
        c = s.float_("c", required=True)
        n = s.int_("n", required=True)
        samples = s.int_("samples", 1_000_000)
        s.finish()
        est = estimate_outside_loss(alpha, beta, c, n, samples, stream(seed, "outside-loss"))
        bound = outside_loss_bound(alpha, c, n)
        row = [quantity, f"alpha={alpha!r};beta={beta!r};c={c!r};n={n}",
               est.mean, est.std_error, est.samples, est.acceptance_rate, bound, "upper"]
    elif quantity == "sliding_drift":
        c = s.float_("c", required=True)
        samples = s.int_("samples", 100_000)
        inst = _instance_from_schema(s)
        s.finish()
        est = estimate_sliding_drift(inst, c, samples, stream(seed, "sliding-drift"))
        row = [quantity, f"n={inst.n};alpha={inst.alpha!r};beta={inst.beta!r};c={c!r}",
               est.mean, est.std_error, est.samples, est.acceptance_rate, "", "none"]
    else:  # hitting_probe
        p_up = s.float_("p_up", required=True)
        a = s.int_("a", required=True)
        b = s.int_("b", required=True)
        start = s.int_("start", None)
        budget = s.int_("budget", required=True)
        trials = s.int_("trials", required=True)
        escape = s.int_("escape_margin")
        s.finish()
        start = b if start is None else start
        rep = hitting_time_probe(
            biased_walk(p_up), a, b, start, budget, trials,
            stream(seed, "hitting-probe"), escape_margin=escape,
        )
        ruin = ((1 - p_up) / p_up) ** (start - a) if p_up > 0.5 else ""
        row = [quantity, f"p_up={p_up!r};a={a};b={b};start={start};budget={budget}",
               rep.hit_fraction, "", rep.trials, "", ruin, "reference"]
    report = CsvReport(_DRIFT_HEADER, [row],
                       [f"schema: drift-v1", f"tool_version: {__version__}",
                        f"config: seed={seed}"])
    path = _out_path(args.out, "drift.csv")
    emit_csv(report, path)
    print(f"wrote {path}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="monotonelab",
        description="(1+1) EA laboratory for monotone pseudo-Boolean functions",
    )
    parser.add_argument("--version", action="version", version=f"monotonelab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    subcommands = {
        "construct": "build and serialize a window index sequence",
        "verify": "check window distinctness and pairwise overlap properties",
        "check-monotone": "exhaustive or sampled single-flip monotonicity check",
        "run": "single EA run with a CSV trace",
        "scaling": "optimization-time scaling study",
        "stagnation": "path-following stagnation study",
        "drift": "drift bound calculators and Monte Carlo estimators",
    }
    for name, help_text in subcommands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key=value configuration file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one configuration key")
        p.add_argument("--out", help="output path (relative paths land in "
                                     "$MONOTONELAB_OUT_DIR)")
    return parser


_HANDLERS = {
    "construct": _cmd_construct,
    "verify": _cmd_verify,
    "check-monotone": _cmd_check_monotone,
    "run": _cmd_run,
    "scaling": lambda a: _study(a, "scaling"),
    "stagnation": lambda a: _study(a, "stagnation"),
    "drift": _cmd_drift,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
