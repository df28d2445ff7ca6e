"""Strategic sharing of a unit resource between network operators.

Players bid on how much of the resource each subset of them should share;
an LP resolution rule merges the bids, and sequential games repeat the
process with the outcome as the next default.
"""

from .allocation import (
    MRG,
    RPG,
    AllocationPattern,
    Bid,
    BidBox,
    ConfigurationError,
    bid_box,
    default_pattern,
    is_feasible,
    random_bid,
    reciprocity_shares,
    subset_label,
    subset_of,
    subsets_containing,
)
from .centralized import centralized_lr, centralized_sr, solve_centralized
from .dynamics import (
    GameConfig,
    GameTrace,
    choose_subset_by_vote,
    is_epsilon_nash,
    play,
    run_mdsg,
    run_sdsg,
    verify_nash,
)
from .experiment import ExperimentConfig, emit_outputs, run_experiment
from .lp import InfeasibleError, SolverError
from .resolution import ResolutionError, ResolutionOutcome, box_bounds, resolve, sign_coefficients
from .scenario import (
    Layout,
    Scenario,
    ScenarioConfig,
    channel_gain,
    generate_scenario,
    generate_users,
    load_scenario,
    path_loss,
    save_scenario,
)
from .scheduler import (
    SpectralEfficiencyTable,
    UndefinedGradientError,
    build_tables,
    evaluate_utility,
    evaluate_utility_comp,
    mu_table,
    sinr,
    utility_supergradient,
    utility_value,
)
from .strategy import (
    StrategyProblem,
    best_response,
    best_response_gain,
    greedy_bid,
    restricted_greedy_bid,
)

__version__ = "0.1.0"
