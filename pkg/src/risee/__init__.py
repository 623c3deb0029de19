"""Energy-efficiency maximization for amplifying-RIS multi-user uplinks."""

from .errors import (ConfigError, DegenerateConfigError,
                     InfeasibleSubproblemError, InvalidInputError, RiseeError,
                     SolverError, SurrogateDegenerateError)
from .model import (Allocation, ChannelSet, GeeBreakdown, ScenarioConfig, gee,
                    gee_mmse, mmse_filters, noise_covariance, rf_power,
                    ris_power_weights, sinr, sinr_all, sum_rate_mmse,
                    total_power)
from .scenario import (ChannelRealization, Geometry, build_scenario,
                       load_config, make_rng, noise_power, pathloss_gain,
                       place_nodes, rician_matrix)
from .solvers import (SolveReport, SolverOptions, dinkelbach, method1_solve,
                      method2_solve, passive_solve, project_box,
                      project_gamma_feasible, project_psd_trace_band,
                      projected_concave_ascent, rank_one_extract,
                      sum_rate_mode)

__version__ = "0.1.0"
