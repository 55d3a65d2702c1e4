"""bandsplit: split one packet stream across heterogeneous wireless bands.

Library surface:

* model        per-band delay formula, aggregate objective, feasibility
* optimizer    closed-form / numeric / grid solvers for the optimal split
* schedulers   per-packet band selection policies (token bucket and rivals)
* engine       deterministic discrete-event simulator
* runner       schemes x seeds orchestration, CSV/JSONL records, compare
* cli          `bandsplit run` / `bandsplit compare`
"""

from .config import BandConfig, FlowConfig, ScenarioConfig
from .distributions import DistributionSpec
from .engine import Packet, SimState, run, run_scenario, run_scenario_detailed
from .errors import (
    AllBandsUnavailable,
    BandsplitError,
    BracketFailure,
    BranchInvalid,
    ConfigInvalid,
    DimensionTooLarge,
    DuplicateSeq,
    Infeasible,
    InsufficientSamples,
    InvalidStats,
    LengthMismatch,
    MismatchedSeeds,
    NoAvailableBand,
    NoFeasibleBranch,
    OptimizerError,
    OptimizerFailure,
    Overload,
    OverloadDetected,
)
from .estimators import MomentEstimator, band_stats_from_windows
from .metrics import MetricsReport
from .model import (
    BandStats,
    DelayBreakdown,
    FlowKey,
    RateAllocation,
    TrafficSpec,
    aggregate_delay,
    band_delay,
    feasible,
    objective,
)
from .optimizer import (
    LagrangeSolution,
    OptimizerConfig,
    gamma_approx,
    lambda_star_given_gamma,
    optimize,
    solve_closed_form,
    solve_grid,
    solve_numeric,
)
from .reorder import ReorderBuffer
from .runner import compare, read_records, run_suite, write_records
from .schedulers import AvailabilityMask, SchedulerSpec, TokenState, make_scheduler

__version__ = "0.1.0"
