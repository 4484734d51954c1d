# Combined multicast and file repair with heterogeneous users

scenario = {
    "id": "fig3",
    "name": "fig3",
    "sweep": {
        "variable": "lambda",
        "grid": [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4],
        "series": {"variable": "rho", "grid": [0.2, 0.9]},
    },
    "replications": 5,
    "policies": ["nc_rc", "nc_rc_combined"],
    "sim": {"cover": 3},
    "unicast": [{"snr_db": s, "lambda": 0.2, "message_bits": 40} for s in (12.0, 10.0, 8.0, 6.0, 4.0)],
    "multicast": [{"snr_db": [12.0, 9.0, 6.0, 3.0], "lambda": 0.2, "message_bits": 40} for _ in range(2)],
    "region": {"reference": True},
}
