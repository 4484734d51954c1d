from .actions import (
    PowerSet,
    PowerSetError,
    ActionSpace,
    ControlAction,
    SchedulerSnapshot,
    KIND_UNICAST,
    KIND_MULTICAST,
    KIND_REPAIR,
    KIND_IDLE,
)
from .policies import (
    POLICY_NC_RC,
    POLICY_FIXED_RATE,
    POLICY_UNICAST_ONLY,
    POLICY_NC_RC_COMBINED,
    POLICIES,
    rate_loss_factor,
    unicast_metric,
    multicast_rate,
    multicast_rates,
    multicast_metric,
    nc_rc_decide,
    fixed_rate_decide,
    NcRcPolicy,
    FixedRatePolicy,
    get_policy,
)


def genie_region_rate(sim_config, direction=None, table=None):
    """
    Outer bound of infinite block-length codes: the region boundary scale
    with the rate-loss factor set to 1 and every multicast group served at
    its weakest member's ergodic rate at P_av. A reference line, not a policy.
    :type sim_config: ratelesscast.simcore.SimConfig
    :return: lambda_star of the genie region along ``direction``
    """
    from ratelesscast.region import genie_problem, solve_boundary

    problem = genie_problem(sim_config, direction=direction, table=table)
    return solve_boundary(problem).lambda_star
