# Default scenario of the downlink simulator

__all__ = ["scenario"]

scenario = {
    "id": "_default",
    "name": "default",
    # lambda: every flow's arrival rate, rho: CSI accuracy, cover: l(g) of every group
    # series: optional {"variable", "grid"} repeating the sweep per value, one result table each
    "sweep": {"variable": "lambda", "grid": [0.2], "series": None},
    "replications": 1,
    "master_seed": 0,
    "policies": ["nc_rc"],
    "workers": 1,
    "sim": {
        "slots": 200000,
        # None: slots // 10
        "warmup": None,
        # reception overhead of the rateless decoder
        "epsilon": 0.0,
        "arrival_mode": "poisson",
        "check_invariants": False,
        "lyapunov_every": 100,
        # multicast sessions before the partition of combined delivery is estimated
        "partition_warmup_sessions": 200,
        "cover": None,
    },
    "channel": {
        "mode": "iid_rayleigh",
        "rho": 0.8,
        "i_max": 5.0,
        "symbols_per_slot": 1,
        "ar_coeff": 0.1,
        "quant_bins": 4,
        "gain_levels": None,
        "gain_probs": None,
    },
    "power": {"levels": [0.5, 1.0, 2.0], "p_av": 1.0, "includes_zero": True},
    "unicast": [{"snr_db": 10.0, "lambda": 0.2, "message_bits": 40} for _ in range(5)],
    "multicast": [{"snr_db": [10.0] * 4, "lambda": 0.2, "message_bits": 40} for _ in range(2)],
    "region": {
        "e_cap": 4096,
        # rate per flow (unicast then groups), None: all ones
        "direction": None,
        # genie and rateless LP boundaries in the sidecar report
        "reference": False,
        # simulated boundary bracket of the first policy in the sidecar report
        "search": False,
        "search_upper": 1.0,
        "search_budget": 10,
    },
}
