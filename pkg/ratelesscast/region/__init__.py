from .oracles import (
    StateSpaceOverflowError,
    lbar_oracle_exact,
    eta_oracle_exact,
    lbar_monte_carlo,
    eta_monte_carlo,
    simulate_code_lengths,
    mi_sampler,
)
from .problem import (
    AlphabetTooLargeError,
    RegionSolverError,
    RegionProblem,
    RegionSolution,
    build_region,
    genie_problem,
    solve_boundary,
    default_lbar,
    default_eta,
    write_report,
    DEFAULT_E_CAP,
)
from .search import empirical_boundary_search, simulated_stability
