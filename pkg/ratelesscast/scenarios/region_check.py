# Small lattice config whose LP boundary is checked against simulation

scenario = {
    "id": "region_check",
    "name": "region_check",
    "sweep": {"variable": "lambda", "grid": [0.5, 0.75, 1.0, 1.25]},
    "replications": 3,
    "policies": ["nc_rc"],
    "channel": {
        "mode": "discrete",
        "rho": 0.8,
        "quant_bins": 2,
        # I(h, P_av) in {2, 5} bits
        "gain_levels": [3.0, 31.0],
        "gain_probs": [0.5, 0.5],
    },
    "power": {"levels": [1.0], "p_av": 1.0, "includes_zero": True},
    "unicast": [{"snr_db": 0.0, "lambda": 0.5, "message_bits": 40} for _ in range(2)],
    "multicast": [{"snr_db": [0.0, 0.0], "lambda": 0.5, "message_bits": 40}],
    "region": {"reference": True, "search": True, "search_upper": 2.0, "search_budget": 8},
}
