"""Theorem-level experiments on the shipped configurations, as the CLI runs them.

Run: python3 demos/06_experiments.py   (equivalent: lmax verify --config <file> --out <dir>)
"""
from localmax.verification import SHIPPED_CONFIGS, verify_self_improvement, verify_theorem2, verify_theorem3_and_4

for name, cfg in sorted(SHIPPED_CONFIGS.items()):
    r2 = verify_theorem2(cfg)
    r3 = verify_theorem3_and_4(cfg)
    si = verify_self_improvement(cfg)
    print(f"{name}: testing {r2['status']}, necessity {r3['status']}, self-improvement {si['status']}")
