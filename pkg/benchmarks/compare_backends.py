"""Benchmark the compiled EA engine against its pure-Python twin.

Both engines consume the identical random stream and produce identical
results; this script measures the speed gap on the two hot workloads
(ONEMAX climbing and window-path runs in easy and hard regimes) and
verifies result equality on each case while it is at it.

Usage: python benchmarks/compare_backends.py [--quick]
"""

import argparse
import time

from monotonelab.engine import EaConfig, available_backends, ea_run
from monotonelab.functions import OneMax
from monotonelab.pathfn import WindowPathFunction


def time_run(f, cfg, backend):
    t0 = time.perf_counter()
    res = ea_run(f, cfg, backend=backend)
    return time.perf_counter() - t0, res


def bench(name, f, cfg):
    py_t, py_res = time_run(f, cfg, "python")
    c_t, c_res = time_run(f, cfg, "compiled")
    assert py_res.final == c_res.final and py_res.trace == c_res.trace, name
    gens = max(py_res.generations, 1)
    print(
        f"{name:34s} gens={gens:>9,}  python {py_t:8.3f}s "
        f"({py_t / gens * 1e6:8.2f} us/gen)  compiled {c_t:8.3f}s "
        f"({c_t / gens * 1e6:8.2f} us/gen)  speedup {py_t / c_t:7.1f}x"
    )


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    args = parser.parse_args()
    if "compiled" not in available_backends():
        raise SystemExit("compiled backend not built; nothing to compare")

    scale = 0.2 if args.quick else 1.0
    budget = lambda b: max(200, int(b * scale))

    onemax = OneMax(1000)
    bench("onemax n=1000 c=1", onemax,
          EaConfig(mutation_c=1.0, budget=budget(60_000), seed=1, record_trace=False))

    easy_inst = WindowPathFunction.build(n=256, alpha=0.01, beta=0.4, gamma=0.45,
                                         length=2000, master_seed=2)
    bench("window-path n=256 c=0.5 (easy)", easy_inst,
          EaConfig(mutation_c=0.5, budget=budget(40_000), seed=3, record_trace=False))

    hard_inst = WindowPathFunction.build(n=256, alpha=0.02, beta=0.4, gamma=0.45,
                                         length=2000, master_seed=4)
    bench("window-path n=256 c=10 (hard)", hard_inst,
          EaConfig(mutation_c=10.0, budget=budget(40_000), seed=5, record_trace=False))


if __name__ == "__main__":
    main()
