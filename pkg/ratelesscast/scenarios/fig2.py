# Queue length versus load with good CSI

scenario = {
    "id": "fig2",
    "name": "fig2",
    "sweep": {"variable": "lambda", "grid": [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4]},
    "replications": 5,
    "policies": ["nc_rc", "fixed_rate", "unicast_only"],
    "channel": {"rho": 0.8},
    "region": {"reference": True},
}
