"""monotonelab: a laboratory for (1+1) EA runs on monotone pseudo-Boolean
functions, built around a randomized window-path construction that turns
hard once the mutation rate is a large constant over n.

Core pieces: packed bit strings with labeled deterministic randomness
(:mod:`.bits`, :mod:`.rng`), reference fitness functions and a
monotonicity checker (:mod:`.functions`), the window-sequence construction
with overlap verification (:mod:`.windows`), the three-tier window-path
fitness (:mod:`.pathfn`), compiled + pure-Python EA engines
(:mod:`.engine`), drift bound calculators and Monte Carlo estimators
(:mod:`.drift`), and reproducible CSV experiments (:mod:`.experiments`,
CLI in :mod:`.cli`).
"""

__version__ = "0.1.0"

from .bits import BitString, hamming_distance, mutate, random_bitstring
from .engine import EaConfig, RunResult, ea_run, ea_step, summarize_runs
from .functions import LinearFunction, OneMax, binval_compare, check_monotone
from .pathfn import FitnessKey, LevelView, PermutationSupply, WindowPathFunction
from .rng import stream
from .windows import (
    ConstructionParams,
    WindowSequence,
    build_window_sequence,
    collision_failure_bound,
    theoretical_parameters,
    verify_window_properties,
)

__all__ = [
    "BitString",
    "ConstructionParams",
    "EaConfig",
    "FitnessKey",
    "LevelView",
    "LinearFunction",
    "OneMax",
    "PermutationSupply",
    "RunResult",
    "WindowPathFunction",
    "WindowSequence",
    "__version__",
    "binval_compare",
    "build_window_sequence",
    "check_monotone",
    "collision_failure_bound",
    "ea_run",
    "ea_step",
    "hamming_distance",
    "mutate",
    "random_bitstring",
    "stream",
    "summarize_runs",
    "theoretical_parameters",
    "verify_window_properties",
]
