"""Theorem-level experiments: operator-norm estimates and necessity/sufficiency checks.

Hypotheses (doubling, A_infinity) are measured against configured caps and
reported, never assumed.  Necessity directions are asserted; sufficiency
directions are reported as finite ratios.  Each report carries the status
``pass``, ``fail`` or ``hypothesis-not-met`` per entry and overall.
"""
from dataclasses import dataclass, field as dc_field, asdict
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
import hashlib
import itertools
import logging
import math
import os

import numpy as np

from .dyadic import parse_ratio
from .fields import ScalarField, constant_field, dual_weight, power_weight
from .io import domain_from_json, dump_json
from .maximal import candidate_mask, candidate_radii, maximal, lp_norm
from .weights import (
    CubeSample,
    ExponentPair,
    ainfty_estimate,
    apq_values,
    doubling_constant,
    doubling_sample,
    family_sample,
    reverse_holder_exponent,
    sawyer_testing_constant,
    self_improved_exponents,
)

__all__ = [
    "ExperimentConfig",
    "Setup",
    "NormEstimate",
    "build_setup",
    "candidate_sample",
    "build_bank",
    "estimate_operator_norm",
    "verify_theorem2",
    "verify_theorem3_and_4",
    "verify_prop45",
    "verify_beta_independence",
    "verify_self_improvement",
    "EXPERIMENTS",
    "SHIPPED_CONFIGS",
    "sweep",
    "sweep_configs",
]

log = logging.getLogger(__name__)

PASS, FAIL, HNM = "pass", "fail", "hypothesis-not-met"
REL_SLACK = 1e-12


@dataclass
class ExperimentConfig:
    """Everything an experiment depends on; ``hash`` identifies it in reports."""

    domain: dict = dc_field(default_factory=lambda: {"preset": "punctured-square", "cells": 32})
    weights: dict = dc_field(default_factory=lambda: {"u": {"kind": "constant"}, "v": {"kind": "constant"}})
    p: str = "2"
    q: str = "2"
    beta: str = "1/2"
    lattice: str = "dyadic"
    bank: dict = dc_field(default_factory=lambda: {"whitney": 4, "bumps": 6, "powers": [-0.5, 0.5]})
    sample: dict = dc_field(default_factory=lambda: {"stride": 3, "limit": 12})
    caps: dict = dc_field(default_factory=lambda: {"doubling": 64.0, "ainfty": 10.0, "rhi": 4.0, "apq": 1e6})
    seed: int = 0

    @classmethod
    def from_json(cls, obj):
        known = {k: obj[k] for k in cls.__dataclass_fields__ if k in obj}
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        cfg = cls(**known)
        for key in ("p", "q", "beta"):
            setattr(cfg, key, str(parse_ratio(getattr(cfg, key))))
        base = cls()
        for key in ("bank", "sample", "caps"):
            merged = dict(getattr(base, key))
            merged.update(getattr(cfg, key))
            setattr(cfg, key, merged)
        return cfg

    def to_json(self):
        return asdict(self)

    @property
    def hash(self):
        return hashlib.sha256(dump_json(self.to_json()).encode()).hexdigest()[:16]

    @property
    def exps(self):
        return ExponentPair(self.p, self.q)


@dataclass
class Setup:
    cfg: ExperimentConfig
    domain: object
    u: ScalarField
    v: ScalarField
    sigma: ScalarField
    exps: ExponentPair
    beta: Fraction
    floored: bool


def _weight(domain, spec, name):
    kind = spec.get("kind", "constant")
    if kind == "constant":
        return constant_field(domain, spec.get("value", 1.0), name=name)
    if kind == "power":
        return power_weight(domain, parse_ratio(spec["alpha"]), spec.get("center"))
    if kind == "checkerboard":
        block = int(spec.get("block", 2))
        parity = (np.indices(domain.shape) // block).sum(axis=0) % 2
        vals = np.where(parity == 0, float(spec.get("high", 1.0)), float(spec.get("low", 1e-6)))
        return ScalarField(domain, vals, name=name)
    raise ValueError(f"unknown weight kind {kind!r}")


def build_setup(cfg):
    """Domain, ``u``, ``v`` and ``sigma``; the discrete pair satisfies ``sigma = v**(1-p')`` cellwise.

    When ``v`` is a power weight, ``sigma`` is the exact cell average of the
    dual power and ``v`` is then replaced by ``sigma**(1-p)``: cell averages
    of ``v`` and ``sigma`` are not dual to each other, and the testing
    functions need the cellwise identity ``sigma**p v = sigma``.
    """
    dom = domain_from_json(cfg.domain)
    exps = cfg.exps
    p = exps.p
    w = cfg.weights
    u = _weight(dom, w.get("u", {}), "u")
    floored = False
    if "sigma" in w:
        sigma = _weight(dom, w["sigma"], "sigma")
    elif w.get("v", {}).get("kind") == "power":
        gamma = parse_ratio(w["v"]["alpha"])
        sigma = power_weight(dom, -gamma / (p - 1), w["v"].get("center"))
    else:
        v0 = _weight(dom, w.get("v", {}), "v")
        sigma, floored = dual_weight(v0, p)
    if sigma.singular is not None:
        raise ValueError("sigma has divergent cells on this grid")
    v = ScalarField(dom, np.power(sigma.values, float(1 - p)), name="v")
    return Setup(cfg, dom, u, v, sigma, exps, parse_ratio(cfg.beta), floored)


# -- samples and banks -----------------------------------------------------------------

def candidate_sample(domain, beta, lattice="dyadic", stride=1, limit=None, rng=None, radii=None):
    """Node-centred lattice candidates (``2m+1`` cells) of F_beta as a :class:`CubeSample`."""
    radii = radii if radii is not None else candidate_radii(domain, beta, lattice)
    corners, sides = [], []
    for m in radii:
        ok = candidate_mask(domain, beta, m)
        sel = np.zeros_like(ok)
        sel[tuple(slice(None, None, stride) for _ in range(domain.n))] = True
        c = np.argwhere(ok & sel)
        corners.append(c - m)
        sides.append(np.full(len(c), 2 * m + 1))
    corners = np.concatenate(corners) if corners else np.zeros((0, domain.n), dtype=np.int64)
    sides = np.concatenate(sides) if sides else np.zeros(0, dtype=np.int64)
    if limit is not None and len(sides) > limit:
        rng = rng or np.random.default_rng(0)
        # keep every radius represented: largest cubes first, then a seeded draw
        order = np.lexsort((rng.random(len(sides)), -sides))
        by_side = {}
        for i in order:
            by_side.setdefault(int(sides[i]), []).append(i)
        pick = []
        for group in itertools.zip_longest(*by_side.values()):
            pick.extend(i for i in group if i is not None)
        keep = np.sort(np.array(pick[:limit]))
        corners, sides = corners[keep], sides[keep]
    return CubeSample(domain, corners, sides, f"lattice candidates of F_{parse_ratio(beta)} ({lattice}, stride {stride})")


def build_bank(setup, tests):
    """Bank of ``(id, values)``: ``sigma chi_Q`` for the testing cubes, Whitney-cell indicators,
    seeded sparse bumps and power profiles."""
    from .coverings import build_whitney, minimal_t

    dom = setup.domain
    cfg = setup.cfg
    rng = np.random.default_rng(cfg.seed)
    bank = []
    for i in range(len(tests)):
        m = np.zeros(dom.shape, dtype=bool)
        a, s = tests.corners[i], int(tests.sides[i])
        m[tuple(slice(int(x), int(x) + s) for x in a)] = True
        bank.append((f"sigma-chi-Q{i}", np.where(m, setup.sigma.values, 0.0)))
    nw = int(cfg.bank.get("whitney", 0))
    if nw:
        W = build_whitney(dom, setup.beta, minimal_t(setup.beta, 5))
        ids = rng.choice(len(W), size=min(nw, len(W)), replace=False)
        a, b = W.node_boxes()
        for j in sorted(int(x) for x in ids):
            m = np.zeros(dom.shape)
            # a sub-cell cube is represented by the cell holding it
            lo = np.minimum(a[j], np.array(dom.shape) - 1)
            hi = np.maximum(b[j], lo + 1)
            m[tuple(slice(int(x), int(y)) for x, y in zip(lo, hi))] = 1.0
            bank.append((f"whitney-{j}", m))
    for k in range(int(cfg.bank.get("bumps", 0))):
        vals = np.zeros(int(np.prod(dom.shape)))
        pick = rng.choice(vals.size, size=max(1, vals.size // 50), replace=False)
        vals[pick] = rng.random(len(pick))
        bank.append((f"bump-{k}", vals.reshape(dom.shape)))
    r = np.max(np.abs(dom.nodes), axis=-1)
    for s in cfg.bank.get("powers", []):
        with np.errstate(divide="ignore"):
            prof = np.where(dom.interior & (r > 0), r ** float(s), 0.0)
        bank.append((f"power-{s}", prof))
    return bank


@dataclass
class NormEstimate:
    ratio: float
    witness: str
    bank_size: int
    ratios: dict = dc_field(repr=False, default_factory=dict)
    skipped: int = 0


def _ratio(setup, g, mode, beta=None, lattice=None):
    cfg = setup.cfg
    fv = ScalarField(setup.domain, g)
    den = lp_norm(fv, setup.v, float(setup.exps.p))
    if not den > 0 or not math.isfinite(den):
        return None
    M = maximal(fv, beta if beta is not None else setup.beta, mode, lattice=lattice or cfg.lattice).values
    return lp_norm(M, setup.u, float(setup.exps.q), domain=setup.domain) / den


def estimate_operator_norm(setup, mode="uncentered", bank=None, tests=None, beta=None):
    """Largest ``|M f|_{L^q(u)} / |f|_{L^p(v)}`` over the bank (a lower bound for the norm)."""
    if bank is None:
        tests = tests if tests is not None else _tests(setup)
        bank = build_bank(setup, tests)
    if not bank:
        raise ValueError("empty test-function bank")
    ratios = {}
    skipped = 0
    for name, g in bank:
        r = _ratio(setup, g, mode, beta)
        if r is None:
            log.warning("bank member %s has zero norm; skipped", name)
            skipped += 1
            continue
        ratios[name] = r
    best = max(ratios, key=ratios.get)
    return NormEstimate(ratios[best], best, len(bank), ratios, skipped)


def _tests(setup, beta=None):
    cfg = setup.cfg
    return candidate_sample(setup.domain, beta or setup.beta, cfg.lattice,
                            stride=int(cfg.sample.get("stride", 1)),
                            limit=cfg.sample.get("limit"), rng=np.random.default_rng(cfg.seed))


# -- hypotheses ------------------------------------------------------------------------

def _hypotheses(setup, need=("sigma_doubling",)):
    cfg = setup.cfg
    out = {}
    dsamp = doubling_sample(setup.domain, setup.beta, stride=2)
    if "sigma_doubling" in need:
        r = doubling_constant(setup.sigma, setup.beta, dsamp)
        out["sigma_doubling"] = {"constant": r.constant, "cap": cfg.caps["doubling"],
                                 "met": bool(r.constant <= cfg.caps["doubling"])}
    if "u_doubling" in need:
        r = doubling_constant(setup.u, setup.beta, dsamp)
        out["u_doubling"] = {"constant": r.constant, "cap": cfg.caps["doubling"],
                             "met": bool(r.constant <= cfg.caps["doubling"])}
    if "sigma_ainfty" in need:
        r = ainfty_estimate(setup.sigma, setup.beta, cap=cfg.caps["ainfty"], seed=cfg.seed)
        out["sigma_ainfty"] = {"delta": r.aux["delta"], "c": r.aux["c"], "cap": cfg.caps["ainfty"],
                               "met": bool(r.aux["delta"] > 0)}
    return out


def _entry(name, ok, lhs=None, rhs=None, gated=False, **detail):
    status = HNM if gated else (PASS if ok else FAIL)
    e = {"name": name, "status": status}
    if lhs is not None:
        e["lhs"] = _num(lhs)
    if rhs is not None:
        e["rhs"] = _num(rhs)
    e.update({k: _num(v) for k, v in detail.items()})
    return e


def _num(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return x


def _report(name, setup, hyps, entries, measurements):
    statuses = [e["status"] for e in entries]
    overall = FAIL if FAIL in statuses else (HNM if HNM in statuses else PASS)
    return {
        "experiment": name,
        "config_hash": setup.cfg.hash,
        "config": setup.cfg.to_json(),
        "hypotheses": hyps,
        "assertions": entries,
        "measurements": {k: _num(v) for k, v in measurements.items()},
        "status": overall,
    }


def _le(a, b):
    return a <= b * (1 + REL_SLACK)


# -- experiments ------------------------------------------------------------------------

def verify_theorem2(cfg):
    """Testing constant vs operator norm for the uncentred operator."""
    setup = cfg if isinstance(cfg, Setup) else build_setup(cfg)
    hyps = _hypotheses(setup, ("sigma_doubling",))
    tests = _tests(setup)
    saw = sawyer_testing_constant(setup.u, setup.sigma, setup.exps, setup.beta, tests, lattice=setup.cfg.lattice)
    norm = estimate_operator_norm(setup, "uncentered", tests=tests)
    entries = [
        _entry("testing <= norm", _le(saw.constant, norm.ratio), saw.constant, norm.ratio),
        _entry("converse gap finite", math.isfinite(norm.ratio / saw.constant), norm.ratio / saw.constant,
               gated=not hyps["sigma_doubling"]["met"]),
    ]
    return _report("theorem2", setup, hyps, entries,
                   {"testing_constant": saw.constant, "norm_estimate": norm.ratio,
                    "gap": norm.ratio / saw.constant, "bank_size": norm.bank_size, "norm_witness": norm.witness})


def _necessity_violations(setup, tests, mode):
    """Per-cube check of ``A_Q <= C N_Q**p |Q|**(1 - p/q)`` with ``f = sigma chi_Q``.

    ``N_Q`` is the bank ratio of ``sigma chi_Q``; ``C = 1`` for the uncentred
    operator and ``2**(n p)`` for the centred one (whose cubes of radius
    ``2m`` around each node of ``Q`` contain ``Q``).
    """
    dom = setup.domain
    p, q = float(setup.exps.p), float(setup.exps.q)
    n = dom.n
    A = apq_values(setup.u, setup.sigma, setup.exps, tests)
    C = 1.0 if mode == "uncentered" else 2.0 ** (n * p)
    radii = set(candidate_radii(dom, setup.beta, setup.cfg.lattice))
    worst, viol, used = 0.0, 0, 0
    for i in range(len(tests)):
        a, s = tests.corners[i], int(tests.sides[i])
        m = (s - 1) // 2
        box = tuple(slice(int(x), int(x) + s) for x in a)
        if mode == "centered":
            if 2 * m not in radii or not candidate_mask(dom, setup.beta, 2 * m)[box].all():
                continue
        g = np.zeros(dom.shape)
        g[box] = setup.sigma.values[box]
        N = _ratio(setup, g, mode)
        if N is None:
            continue
        used += 1
        vol = float(tests.volumes()[i])
        bound = C * N**p * vol ** (1 - p / q)
        worst = max(worst, A[i] / bound)
        if not _le(A[i], bound):
            viol += 1
    return viol, worst, used


def verify_theorem3_and_4(cfg):
    """A_{p,q}^beta necessity (uncentred and centred) plus the sufficiency ratios and the operator chain."""
    setup = cfg if isinstance(cfg, Setup) else build_setup(cfg)
    hyps = _hypotheses(setup, ("u_doubling", "sigma_ainfty"))
    tests = _tests(setup)
    A = apq_values(setup.u, setup.sigma, setup.exps, tests)
    apq = float(A.max())
    p = float(setup.exps.p)
    entries = []
    meas = {"apq_beta": apq}
    gate4 = not (hyps["u_doubling"]["met"] and hyps["sigma_ainfty"]["met"])
    gate5 = not hyps["sigma_ainfty"]["met"]
    for mode, gated, label in (("uncentered", gate4, "thm1.4"), ("centered", gate5, "thm1.5")):
        viol, worst, used = _necessity_violations(setup, tests, mode)
        entries.append(_entry(f"{label} necessity", viol == 0 and used > 0, worst, 1.0, violations=viol, cubes=used))
        norm = estimate_operator_norm(setup, mode, tests=tests)
        ratio = norm.ratio / apq ** (1 / p)
        entries.append(_entry(f"{label} sufficiency ratio finite", math.isfinite(ratio), ratio, gated=gated))
        meas[f"{mode}_norm"] = norm.ratio
        meas[f"{mode}_ratio"] = ratio
    ok, worst = _chain_check(setup)
    entries.append(_entry("operator chain M <= 2^n M^c_gamma + M_trunc", ok, worst, 1.0))
    return _report("theorem3_and_4", setup, hyps, entries, meas)


def _chain_check(setup):
    """Per bank member: ``|M_beta f| <= 2^n |M^c_gamma f| + |M_trunc f|`` on the dense lattice.

    ``gamma = 2 (beta/4) / (1 - beta/4)``; norms are taken over the nodes
    where the ``gamma``-cubes are not clipped by the box.
    """
    dom = setup.domain
    beta = setup.beta
    gamma = 2 * (beta / 4) / (1 - beta / 4)
    region = dom.unclipped_nodes(gamma)
    q = float(setup.exps.q)
    bank = build_bank(setup, _tests(setup))
    worst = 0.0
    ok = True
    for _, g in bank:
        f = ScalarField(dom, g)
        full = lp_norm(maximal(f, beta, lattice="dense").values, setup.u, q, domain=dom, region=region)
        cen = lp_norm(maximal(f, gamma, "centered", lattice="dense").values, setup.u, q, domain=dom, region=region)
        tr = lp_norm(maximal(f, beta, "truncated", lattice="dense").values, setup.u, q, domain=dom, region=region)
        rhs = 2**dom.n * cen + tr
        if rhs > 0:
            worst = max(worst, full / rhs)
        ok &= _le(full, rhs)
    return ok, worst


def verify_prop45(cfg):
    """Truncated-operator norm: finite, below the uncentred one, compared with A_{p,q}^beta."""
    setup = cfg if isinstance(cfg, Setup) else build_setup(cfg)
    hyps = _hypotheses(setup, ("sigma_doubling",))
    tests = _tests(setup)
    apq = float(apq_values(setup.u, setup.sigma, setup.exps, tests).max())
    bank = build_bank(setup, tests)
    tr = estimate_operator_norm(setup, "truncated", bank=bank)
    un = estimate_operator_norm(setup, "uncentered", bank=bank)
    per = all(_le(tr.ratios[k], un.ratios[k]) for k in tr.ratios)
    comp = tr.ratio / apq ** (1 / float(setup.exps.p))
    entries = [
        _entry("truncated norm finite", math.isfinite(tr.ratio), tr.ratio),
        _entry("truncated <= uncentered (per bank member)", per, tr.ratio, un.ratio),
        _entry("truncated family misses F_beta/4", _truncated_disjoint(setup)),
        _entry("comparison constant finite", math.isfinite(comp), comp, gated=not hyps["sigma_doubling"]["met"]),
    ]
    return _report("prop45", setup, hyps, entries,
                   {"truncated_norm": tr.ratio, "uncentered_norm": un.ratio, "apq_beta": apq, "comparison": comp})


def _truncated_disjoint(setup):
    dom = setup.domain
    for m in candidate_radii(dom, setup.beta, setup.cfg.lattice):
        tr = candidate_mask(dom, setup.beta, m, truncated=True)
        if np.any(tr & candidate_mask(dom, setup.beta / 4, m)):
            return False
    return True


def verify_beta_independence(cfg, alpha=None, beta=None):
    """Compare A_{p,q} constants over F_alpha and F_beta against the doubling-chain prediction.

    With ``2**(k-1) < beta/alpha <= 2**k`` and each sampled ``Q`` in F_beta
    shrunk to the concentric ``Q~`` of side ``side(Q)/2**k`` (which lies in
    F_alpha), ``u(Q) <= C_u**k u(Q~)`` and likewise for ``sigma``.
    """
    setup = cfg if isinstance(cfg, Setup) else build_setup(cfg)
    beta = parse_ratio(beta) if beta is not None else setup.beta
    alpha = parse_ratio(alpha) if alpha is not None else beta / 2
    if not 0 < alpha < beta:
        raise ValueError("need 0 < alpha < beta")
    dom = setup.domain
    k = 0
    while 2**k < beta / alpha:
        k += 1
    exps = setup.exps
    p, q = float(exps.p), float(exps.q)
    step = 2 ** (k + 1)
    sides = [s for s in (2**j for j in range(k + 1, int(math.log2(min(dom.shape))) + 1)) if s % step == 0]
    big = family_sample(dom, beta, sides=sides, stride=2)
    small_sides = sorted({s // 2**k for s in sides} | set(sides))
    base = family_sample(dom, beta, sides=[1] + small_sides, stride=1)
    small = base.where(base.in_family(alpha))
    dsamp = doubling_sample(dom, beta, stride=1)
    cu = doubling_constant(setup.u, beta, dsamp).constant
    cs = doubling_constant(setup.sigma, beta, dsamp).constant
    hyps = {"u_doubling": {"constant": cu, "cap": setup.cfg.caps["doubling"], "met": bool(cu <= setup.cfg.caps["doubling"])},
            "sigma_doubling": {"constant": cs, "cap": setup.cfg.caps["doubling"], "met": bool(cs <= setup.cfg.caps["doubling"])}}
    gated = not (hyps["u_doubling"]["met"] and hyps["sigma_doubling"]["met"])
    a_beta = float(apq_values(setup.u, setup.sigma, exps, big).max())
    a_alpha = float(apq_values(setup.u, setup.sigma, exps, small).max())
    a_beta_all = float(apq_values(setup.u, setup.sigma, exps, base).max())
    factor = (cu ** (p / q) * cs ** (p - 1)) ** k
    entries = [
        _entry("A^alpha <= A^beta (nested samples)", _le(a_alpha, a_beta_all), a_alpha, a_beta_all),
        _entry("A^beta <= factor * A^alpha", _le(a_beta, factor * a_alpha), a_beta, factor * a_alpha, gated=gated),
    ]
    return _report("beta_independence", setup, hyps, entries,
                   {"alpha": str(alpha), "beta": str(beta), "k": k, "factor": factor,
                    "apq_alpha": a_alpha, "apq_beta": a_beta})


def verify_self_improvement(cfg):
    """Reverse Hoelder for sigma, the improved exponents and the finiteness of A_{p~,q~}^beta."""
    setup = cfg if isinstance(cfg, Setup) else build_setup(cfg)
    rhi = reverse_holder_exponent(setup.sigma, setup.beta, cap=setup.cfg.caps["rhi"])
    eps = rhi.aux["epsilon"]
    hyps = {"sigma_rhi": {"epsilon": eps, "constant": rhi.constant, "cap": setup.cfg.caps["rhi"],
                          "met": eps is not None}}
    if eps is None:
        return _report("self_improvement", setup, hyps, [_entry("RHI found", False, gated=True)], {})
    delta, pt, qt = self_improved_exponents(setup.exps, Fraction(eps))
    p, q = setup.exps.p, setup.exps.q
    ratio_err = abs(float(pt) / float(qt) - float(p) / float(q))
    sig_t = setup.sigma.values ** (1 + eps)
    v_t = setup.v.values ** (-1.0 / float(pt - 1))
    ident = float(np.max(np.abs(sig_t - v_t) / np.maximum(sig_t, 1e-300)))
    tests = family_sample(setup.domain, setup.beta, sides=[2**j for j in range(0, 5)], stride=2)
    improved = ExponentPair(pt, qt)
    A = float(apq_values(setup.u, setup.sigma.with_values(sig_t), improved, tests).max())
    cap = setup.cfg.caps["apq"]
    entries = [
        _entry("p~/q~ = p/q", pt / qt == p / q and ratio_err <= 1e-12, ratio_err),
        _entry("sigma^(1+eps) = v^(-1/(p~-1))", ident <= 1e-12, ident),
        _entry("A_{p~,q~}^beta finite", math.isfinite(A) and A < cap, A, cap),
    ]
    return _report("self_improvement", setup, hyps, entries,
                   {"epsilon": eps, "delta": float(delta), "p_tilde": str(pt), "q_tilde": str(qt), "apq_tilde": A})


EXPERIMENTS = {
    "theorem2": verify_theorem2,
    "theorem3": verify_theorem3_and_4,
    "prop45": verify_prop45,
    "beta": verify_beta_independence,
    "self-improvement": verify_self_improvement,
}


def _shipped():
    out = {}
    for preset in ("punctured-square", "box-annulus", "half-space-clip"):
        for wname, weights in (
            ("constant", {"u": {"kind": "constant"}, "v": {"kind": "constant"}}),
            ("power", {"u": {"kind": "power", "alpha": "1/2"}, "v": {"kind": "power", "alpha": "1/2"}}),
        ):
            out[f"{preset}/{wname}"] = ExperimentConfig(domain={"preset": preset, "cells": 32}, weights=weights)
    return out


SHIPPED_CONFIGS = _shipped()


# -- sweeps ----------------------------------------------------------------------------

def sweep_configs(spec):
    """Cartesian product over ``presets``, ``betas``, ``exponents`` and ``cells``."""
    presets = spec.get("presets", ["punctured-square", "box-annulus", "half-space-clip"])
    betas = spec.get("betas", ["1/4", "1/2"])
    exponents = spec.get("exponents", [["2", "2"], ["2", "3"], ["3", "3"]])
    cells = spec.get("cells", [64, 128, 256])
    weights = spec.get("weights", {"u": {"kind": "power", "alpha": "1/2"}, "v": {"kind": "power", "alpha": "1/2"}})
    base = {k: spec[k] for k in ("bank", "sample", "caps", "lattice", "seed") if k in spec}
    out = []
    for preset, beta, (p, q), c in itertools.product(presets, betas, exponents, cells):
        w = _pair_weights(weights, p, q)
        cfg = ExperimentConfig.from_json(dict(base, domain={"preset": preset, "cells": int(c)},
                                              weights=w, p=p, q=q, beta=beta))
        out.append(cfg)
    return out


def _pair_weights(weights, p, q):
    """Power pairs follow ``gamma = (alpha + n) p / q - n`` when ``v`` is ``{"kind": "power-pair"}``."""
    if weights.get("v", {}).get("kind") != "power-pair":
        return weights
    alpha = parse_ratio(weights["u"]["alpha"])
    gamma = (alpha + 2) * parse_ratio(p) / parse_ratio(q) - 2
    return {"u": weights["u"], "v": {"kind": "power", "alpha": str(gamma)}}


def _sweep_row(cfg):
    setup = build_setup(cfg)
    tests = _tests(setup)
    A = float(apq_values(setup.u, setup.sigma, setup.exps, tests).max())
    saw = sawyer_testing_constant(setup.u, setup.sigma, setup.exps, setup.beta, tests, lattice=cfg.lattice)
    norm = estimate_operator_norm(setup, "uncentered", tests=tests)
    dsamp = doubling_sample(setup.domain, setup.beta, stride=2)
    dbl = doubling_constant(setup.sigma, setup.beta, dsamp).constant if len(dsamp) else None
    return {
        "config_hash": cfg.hash,
        "domain": cfg.domain["preset"],
        "cells": cfg.domain["cells"],
        "beta": cfg.beta,
        "p": cfg.p,
        "q": cfg.q,
        "apq_beta": A,
        "sigma_doubling": dbl,
        "testing": saw.constant,
        "norm": norm.ratio,
        "gap": norm.ratio / saw.constant,
        "necessity": "pass" if _le(saw.constant, norm.ratio) else "fail",
    }


def sweep(configs, workers=1):
    """One row per config, in input order, regardless of ``workers``."""
    if workers <= 1 or len(configs) <= 1:
        return [_sweep_row(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_sweep_row, configs))


def default_workers():
    env = os.environ.get("LMAX_WORKERS")
    return int(env) if env else 1
