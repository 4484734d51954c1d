from ratelesscast.sim_logger import sim_logger

_logger = sim_logger("ratelesscast.region.search")

DEFAULT_REL_WIDTH = 0.05
DEFAULT_BUDGET = 16


def empirical_boundary_search(evaluate, upper, lower=0.0, rel_width=DEFAULT_REL_WIDTH, budget=DEFAULT_BUDGET):
    """
    Bisects the load scale between ``lower`` (taken as stable) and ``upper``
    until the bracket is narrower than ``rel_width`` of its upper end.
    An inconclusive verdict counts as unstable. When ``upper`` itself is
    stable the bracket grows by doubling.
    :param evaluate: callable(scale) -> True when the load ``scale * direction`` is stable
    :param budget: number of ``evaluate`` calls, the bracket reached so far is returned when spent
    :return: (lo, hi)
    """
    lo, hi = float(lower), float(upper)
    calls = 0
    while calls < budget:
        calls += 1
        if not evaluate(hi):
            break
        _logger.debug("Load %.4f stable, doubling the bracket", hi)
        lo, hi = hi, 2.0 * hi
    while hi - lo > rel_width * hi and calls < budget:
        mid = 0.5 * (lo + hi)
        stable = evaluate(mid)
        calls += 1
        _logger.debug("Load %.4f %s", mid, "stable" if stable else "not stable")
        if stable:
            lo = mid
        else:
            hi = mid
    if hi - lo > rel_width * hi:
        _logger.warning("Boundary search budget of %s runs spent, bracket [%.4f, %.4f]", budget, lo, hi)
    else:
        _logger.info("Boundary bracket [%.4f, %.4f] after %s runs", lo, hi, calls)
    return lo, hi


def simulated_stability(sim_config, direction=None, replications=1, vote=None):
    """
    ``evaluate`` for ``empirical_boundary_search`` that runs the engine at
    ``scale * direction`` and calls the load stable when at least ``vote`` of
    ``replications`` runs (all of them by default) are classified stable.
    Replication r uses seed ``sim_config.seed + r``.
    """
    from ratelesscast.simcore import run, VERDICT_STABLE

    need = replications if vote is None else vote

    def evaluate(scale):
        stable = 0
        for r in range(replications):
            cfg = sim_config.with_load(scale, direction).replace(seed=sim_config.seed + r)
            if run(cfg).verdict == VERDICT_STABLE:
                stable += 1
        return stable >= need

    return evaluate
