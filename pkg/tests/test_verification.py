from fractions import Fraction as F

import numpy as np
import pytest

from localmax.verification import (
    EXPERIMENTS,
    SHIPPED_CONFIGS,
    ExperimentConfig,
    build_bank,
    build_setup,
    candidate_sample,
    estimate_operator_norm,
    sweep,
    sweep_configs,
    verify_beta_independence,
    verify_prop45,
    verify_self_improvement,
    verify_theorem2,
    verify_theorem3_and_4,
)
from localmax.weights import ExponentPair, sawyer_testing_constant

POWER = {"u": {"kind": "power", "alpha": "1/2"}, "v": {"kind": "power", "alpha": "1/2"}}


def cfg(**kw):
    base = {"domain": {"preset": "punctured-square", "cells": 16}}
    base.update(kw)
    return ExperimentConfig.from_json(base)


def test_config_roundtrip_and_hash():
    c = cfg(p="2", q="3", beta="0.25")
    assert c.beta == "1/4" and c.exps == ExponentPair(2, 3)
    again = ExperimentConfig.from_json(c.to_json())
    assert again.hash == c.hash
    assert cfg(seed=1).hash != c.hash
    with pytest.raises(ValueError):
        ExperimentConfig.from_json({"bogus": 1})


def test_setup_cellwise_duality():
    s = build_setup(cfg(weights=POWER, p="3", q="3"))
    np.testing.assert_allclose(s.sigma.values ** 3 * s.v.values, s.sigma.values, rtol=1e-13)


def test_norm_trivial_weights_at_least_one():
    s = build_setup(cfg())
    est = estimate_operator_norm(s)
    assert est.ratio >= 1.0 and est.bank_size > 0
    assert est.ratio == max(est.ratios.values())


def test_norm_dominates_testing_constant():
    s = build_setup(cfg(weights=POWER, q="3"))
    tests = candidate_sample(s.domain, s.beta, stride=3, limit=12)
    saw = sawyer_testing_constant(s.u, s.sigma, s.exps, s.beta, tests)
    est = estimate_operator_norm(s, tests=tests)
    assert saw.constant <= est.ratio * (1 + 1e-12)


def test_bank_growth_monotone_and_stable():
    s = build_setup(cfg(weights=POWER, domain={"preset": "punctured-square", "cells": 32}))
    small = estimate_operator_norm(s).ratio
    big = ExperimentConfig.from_json(dict(s.cfg.to_json(), bank={"whitney": 8, "bumps": 12, "powers": [-0.5, 0.5]},
                                          sample={"stride": 3, "limit": 24}))
    large = estimate_operator_norm(build_setup(big)).ratio
    assert large >= small and large <= 1.05 * small


@pytest.mark.parametrize("name", sorted(SHIPPED_CONFIGS))
def test_shipped_theorem2(name):
    rep = verify_theorem2(SHIPPED_CONFIGS[name])
    assert rep["status"] == "pass" and rep["config_hash"] == SHIPPED_CONFIGS[name].hash


def test_checkerboard_sigma_flags_hypothesis():
    weights = {"u": {"kind": "constant"}, "v": {"kind": "constant"},
               "sigma": {"kind": "checkerboard", "block": 2, "high": 1.0, "low": 1e-6}}
    rep = verify_theorem2(cfg(weights=weights))
    assert rep["status"] == "hypothesis-not-met"
    assert not rep["hypotheses"]["sigma_doubling"]["met"]
    # necessity is still asserted
    assert rep["assertions"][0]["status"] == "pass"


def test_theorem3_trivial_and_power():
    rep = verify_theorem3_and_4(cfg())
    assert rep["status"] == "pass" and rep["measurements"]["apq_beta"] == 1.0
    rep = verify_theorem3_and_4(cfg(weights=POWER, q="3"))
    assert rep["status"] == "pass"
    names = [e["name"] for e in rep["assertions"]]
    assert "operator chain M <= 2^n M^c_gamma + M_trunc" in names


def test_prop45():
    rep = verify_prop45(cfg())
    m = rep["measurements"]
    assert rep["status"] == "pass" and m["truncated_norm"] <= m["uncentered_norm"]


def test_beta_independence():
    rep = verify_beta_independence(cfg(domain={"preset": "punctured-square", "cells": 32}))
    m = rep["measurements"]
    assert rep["status"] == "pass" and m["apq_alpha"] == m["apq_beta"] == 1.0 and m["k"] == 1
    rep = verify_beta_independence(cfg(weights=POWER, domain={"preset": "punctured-square", "cells": 32}),
                                   alpha=F(3, 16), beta=F(1, 2))
    assert rep["measurements"]["k"] == 2 and rep["status"] == "pass"
    with pytest.raises(ValueError):
        verify_beta_independence(cfg(), alpha=F(1, 2), beta=F(1, 4))


def test_self_improvement():
    rep = verify_self_improvement(cfg(weights=POWER, q="3"))
    assert rep["status"] == "pass"
    m = rep["measurements"]
    assert F(m["p_tilde"]) / F(m["q_tilde"]) == F(2, 3)


def test_experiments_are_deterministic():
    c = cfg(weights=POWER)
    for fn in EXPERIMENTS.values():
        assert fn(c) == fn(c)


def test_sweep_configs_and_worker_independence():
    spec = {"presets": ["punctured-square", "open-box"], "betas": ["1/2"], "exponents": [["2", "3"]],
            "cells": [16], "weights": {"u": {"kind": "power", "alpha": "1/2"}, "v": {"kind": "power-pair"}}}
    configs = sweep_configs(spec)
    assert len(configs) == 2 and configs[0].weights["v"]["alpha"] == str(F(5, 2) * F(2, 3) - 2)
    assert sweep(configs, 1) == sweep(configs, 2)
    assert all(r["necessity"] == "pass" for r in sweep(configs))


def test_bank_contents():
    s = build_setup(cfg())
    tests = candidate_sample(s.domain, s.beta, stride=4, limit=5)
    names = [n for n, _ in build_bank(s, tests)]
    assert sum(n.startswith("sigma-chi-Q") for n in names) == len(tests)
    assert any(n.startswith("whitney-") for n in names) and any(n.startswith("bump-") for n in names)
    assert any(n.startswith("power-") for n in names)
