"""Power control for downlink multi-cell NOMA.

Two problems over the same system model: minimizing total transmit power
subject to per-user rate demands, and maximizing the sum rate subject to
the same demands and per-BS budgets.  Both exploit the closed-form
per-group power splits; the network coupling is handled by a standard
interference-function fixed point (power minimization) and a distributed
difference-of-convex loop (rate maximization).
"""

from .network import (NetworkTopology, PowerAllocation, RateDemands,
                      achievable_rate, check_rate_constraints,
                      effective_interference)
from .power_min import (FixedPointReport, assemble_full_solution, demand_weights,
                        dpc_spm, interference_map, min_power_user_allocation)
from .rate_max_cell import (InfeasiblePowerError, optimal_single_cell_allocation,
                            optimal_single_cell_rate, single_cell_feasible)
from .rate_max_network import (DcIterate, SrmReport, dc_objective_parts,
                               dpc_srm, power_cap, random_feasible_start,
                               solve_convex_subproblem)
from .scenario import (RunArtifacts, ScenarioConfig, build_demands,
                       generate_channels, load_config, pair_users,
                       run_scenario, write_outputs)

__all__ = [
    "NetworkTopology", "PowerAllocation", "RateDemands",
    "achievable_rate", "check_rate_constraints", "effective_interference",
    "FixedPointReport", "assemble_full_solution", "demand_weights",
    "dpc_spm", "interference_map", "min_power_user_allocation",
    "InfeasiblePowerError", "optimal_single_cell_allocation",
    "optimal_single_cell_rate", "single_cell_feasible",
    "DcIterate", "SrmReport", "dc_objective_parts", "dpc_srm", "power_cap",
    "random_feasible_start", "solve_convex_subproblem",
    "RunArtifacts", "ScenarioConfig", "build_demands", "generate_channels",
    "load_config", "pair_users", "run_scenario", "write_outputs",
]

__version__ = "0.1.0"
