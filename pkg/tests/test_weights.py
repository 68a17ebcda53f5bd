from fractions import Fraction as F
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from localmax.fields import ScalarField, constant_field, power_weight
from localmax.geometry import Domain, box_annulus, open_box, punctured_square
from localmax.maximal import candidate_radii
from localmax.weights import (
    RHI_GRID,
    CubeSample,
    ExponentPair,
    _rhi_ratio,
    ainfty_estimate,
    apq_constant,
    apq_values,
    box_sample,
    doubling_constant,
    doubling_sample,
    family_sample,
    finite_union_testing_constant,
    power_weight_pair,
    reverse_holder_exponent,
    sawyer_testing_constant,
    self_improved_exponents,
)


def test_exponent_pair():
    e = ExponentPair(3, 4)
    assert e.pprime == F(3, 2) and 1 / e.p + 1 / e.pprime == 1
    assert ExponentPair(2).q == 2
    with pytest.raises(ValueError):
        ExponentPair(3, 2)
    with pytest.raises(ValueError):
        ExponentPair(1)


def test_doubling_of_constant_is_two_to_n():
    dom = punctured_square(32)
    rep = doubling_constant(constant_field(dom), F(1, 2))
    assert rep.constant == 4.0
    assert rep.constant >= rep.values.max()


def test_doubling_1d_abs_matches_closed_form():
    dom = Domain(1, "punctured-space", (-1,), F(1, 64), (128,))
    w = power_weight(dom, 1)
    sample = doubling_sample(dom, F(1, 2), sides=[2, 4, 8])
    rep = doubling_constant(w, F(1, 2), sample)

    def mass(a, b):
        # int_a^b |x| dx
        g = lambda x: math.copysign(x * x / 2, x)  # noqa: E731
        return g(b) - g(a)

    ref = []
    for i in range(len(sample)):
        Q = sample.cube(i)
        a, b = float(Q.lo[0]), float(Q.hi[0])
        c, h = (a + b) / 2, (b - a)
        ref.append(mass(c - h, c + h) / mass(a, b))
    np.testing.assert_allclose(rep.values, ref, rtol=1e-12)
    assert rep.constant == pytest.approx(max(ref), rel=1e-12)


@given(st.floats(1e-3, 1e3))
def test_doubling_scale_invariant(c):
    dom = box_annulus(32)
    w = power_weight(dom, F(1, 2))
    a = doubling_constant(w, F(1, 2)).constant
    b = doubling_constant(c * w, F(1, 2)).constant
    assert b == pytest.approx(a, rel=1e-12)


def test_doubling_reports_unbounded():
    dom = open_box(16)
    vals = np.ones(dom.shape)
    vals[6:10, 6:10] = 0
    rep = doubling_constant(ScalarField(dom, vals), F(3, 4), doubling_sample(dom, F(3, 4), sides=[2]))
    assert not rep.bounded and rep.witness is not None


def test_apq_trivial_weights():
    dom = punctured_square(32)
    one = constant_field(dom)
    for p, q in [(2, 2), (2, 3), (3, 3)]:
        rep = apq_constant(one, ExponentPair(p, q), box_sample(dom, stride=4), v=one)
        assert rep.constant == 1.0
        assert apq_constant(one, ExponentPair(p, q), box_sample(dom), v=one, beta=F(1, 2)).constant == 1.0


def test_apq_power_values_match_quadrature():
    dom = punctured_square(32)
    exps = ExponentPair(2, 2)
    u, v, sigma, gamma = power_weight_pair(dom, F(1, 2), exps)
    assert gamma == F(1, 2)
    sample = box_sample(dom, sides=[1, 3, 6], stride=7)
    vals = apq_values(u, sigma, exps, sample)
    for i in range(0, len(sample), 5):
        Q = sample.cube(i)
        lo, hi = [float(x) for x in Q.lo], [float(x) for x in Q.hi]
        assert vals[i] == pytest.approx(oracles.apq_quad(lo, hi, 0.5, -0.5), rel=1e-8)


def test_power_global_vs_local_dichotomy():
    exps = ExponentPair(2, 2)
    dom = punctured_square(128)
    sample = box_sample(dom, sides=[1, 2, 4, 8, 16])
    gap = sample.gap_from([0.0, 0.0])
    series = {}
    for alpha in (F(1, 2), F(3)):
        u, _, sigma, _ = power_weight_pair(dom, alpha, exps)
        series[alpha] = [apq_constant(u, exps, sample.where(gap >= k * dom.hf), sigma=sigma).constant
                         for k in (16, 8, 4, 2, 1)]
        local = apq_constant(u, exps, sample, sigma=sigma, beta=F(1, 2))
        assert local.bounded and local.constant < 3
    # alpha = 1/2 lies in (-2, 2): the constant barely moves as cubes approach the puncture
    assert series[F(1, 2)][-1] < 1.1
    # alpha = 3 lies outside: each halving of the gap multiplies the constant
    assert all(b > 1.5 * a for a, b in zip(series[F(3)], series[F(3)][1:]))
    # sigma = |x|**-3 is not integrable at the puncture: no finite global constant at all
    u, _, sigma, _ = power_weight_pair(dom, F(3), exps)
    assert not apq_constant(u, exps, sample, sigma=sigma).bounded


def test_ainfty_constant_weight():
    dom = open_box(32)
    rep = ainfty_estimate(constant_field(dom), F(1, 2))
    assert rep.aux["delta"] == 1.0 and rep.aux["c"] == pytest.approx(1.0, rel=1e-12)


def test_ainfty_spike_has_small_delta_and_spike_witness():
    dom = open_box(32)
    vals = np.ones(dom.shape)
    vals[17, 17] = 1e6
    rep = ainfty_estimate(ScalarField(dom, vals), F(1, 2))
    assert rep.aux["delta"] < 0.6
    cells = np.array(rep.witness["E_cells"])
    sides = np.array(rep.witness["E_sides"])
    assert any(np.all(a <= 17) and np.all(17 < a + s) for a, s in zip(cells, sides))


@given(st.integers(0, 10**6))
def test_ainfty_envelope_holds_at_every_pair(seed):
    dom = box_annulus(32)
    rng = np.random.default_rng(seed)
    w = ScalarField(dom, rng.random(dom.shape) ** 3 + 1e-3)
    rep = ainfty_estimate(w, F(1, 2), seed=seed)
    xs, ys = rep.values.T
    assert np.all(ys <= math.log(rep.aux["c"]) + rep.aux["delta"] * xs + 1e-12)


def test_rhi_constant_weight():
    rep = reverse_holder_exponent(constant_field(open_box(16)), F(1, 2))
    assert rep.aux["epsilon"] == 0.5 and rep.constant == pytest.approx(1.0, rel=1e-14)


def test_rhi_power_weight_matches_direct_averages():
    dom = punctured_square(32)
    w = power_weight(dom, F(1, 2))
    rep = reverse_holder_exponent(w, F(1, 2))
    eps = rep.aux["epsilon"]
    assert eps is not None and eps >= 2.0**-10
    Q = rep.witness
    sample = family_sample(dom, F(1, 2), sides=[2**k for k in range(0, 5)], stride=2)
    # direct two-sided averages over the witness cells
    a = np.array([(float(Q.lo[i]) - dom.lof[i]) / dom.hf for i in range(2)]).round().astype(int)
    s = int(round(float(Q.side) / dom.hf))
    block = w.values[a[0]:a[0] + s, a[1]:a[1] + s]
    direct = np.mean(block ** (1 + eps)) ** (1 / (1 + eps)) / np.mean(block)
    assert rep.constant == pytest.approx(direct, rel=1e-12)
    assert rep.constant <= 2.0 and len(sample) > 0


def test_rhi_monotone_in_eps():
    dom = box_annulus(32)
    rng = np.random.default_rng(0)
    w = ScalarField(dom, 0.1 + rng.random(dom.shape))
    sample = family_sample(dom, F(1, 2), sides=[1, 2, 4, 8], stride=2)
    worst = [float(_rhi_ratio(w, sample, e).max()) for e in sorted(RHI_GRID)]
    assert all(a <= b * (1 + 1e-14) for a, b in zip(worst, worst[1:]))


def test_rhi_rejects_zero_weight():
    dom = open_box(8)
    with pytest.raises(ValueError):
        reverse_holder_exponent(ScalarField(dom, np.zeros(dom.shape)), F(1, 2))


def test_self_improved_exponents():
    delta, pt, qt = self_improved_exponents(ExponentPair(2, 2), 1)
    assert (delta, pt, qt) == (F(1, 2), F(3, 2), F(3, 2))
    for p, q, eps in [(2, 3, F(1, 8)), (3, 3, F(1, 1024)), (F(5, 2), 4, F(1, 2))]:
        e = ExponentPair(p, q)
        delta, pt, qt = self_improved_exponents(e, eps)
        assert pt / qt == e.p / e.q and (e.p - 1) / (1 + eps) == pt - 1
        assert 1 < pt < e.p and qt < e.q


def test_sawyer_trivial_lower_bound():
    dom = punctured_square(16)
    one = constant_field(dom)
    sample = family_sample(dom, F(1, 2), sides=[1, 2], stride=3)
    rep = sawyer_testing_constant(one, one, ExponentPair(2), F(1, 2), sample)
    assert np.all(rep.values >= 1.0)


def test_sawyer_value_matches_bruteforce():
    dom = punctured_square(16)
    exps = ExponentPair(2, 3)
    u, _, sigma, _ = power_weight_pair(dom, F(1, 2), exps)
    sample = family_sample(dom, F(1, 2), sides=[1, 2, 3], stride=5)
    rep = sawyer_testing_constant(u, sigma, exps, F(1, 2), sample)
    radii = candidate_radii(dom, F(1, 2), "dyadic")
    ref = []
    for i in range(len(sample)):
        a, s = sample.corners[i], int(sample.sides[i])
        mask = np.zeros(dom.shape, bool)
        mask[a[0]:a[0] + s, a[1]:a[1] + s] = True
        f = np.where(mask, sigma.values, 0.0)
        M = oracles.maximal_bruteforce(f, dom.interior, dom.node_distance, dom.h, F(1, 2), radii)
        lhs = (np.sum(M[mask] ** 3 * u.values[mask]) * dom.cell_volume) ** (1 / 3)
        ref.append(lhs / (np.sum(sigma.values[mask]) * dom.cell_volume) ** 0.5)
    np.testing.assert_allclose(rep.values, ref, rtol=1e-12)


def test_finite_union_examples():
    dom = punctured_square(16)
    exps = ExponentPair(2)
    u, _, sigma, _ = power_weight_pair(dom, F(1, 2), exps)
    sample = family_sample(dom, F(1, 2), sides=[1, 2], stride=5)
    singles = [[i] for i in range(len(sample))]
    saw = sawyer_testing_constant(u, sigma, exps, F(1, 2), sample)
    one = finite_union_testing_constant(u, sigma, 2, F(1, 2), sample, singles, bank_size=2)
    np.testing.assert_allclose(one.values, saw.values**2, rtol=1e-12)
    unions = singles + [[0, 1, 2], [3, 4, 5]]
    many = finite_union_testing_constant(u, sigma, 2, F(1, 2), sample, unions, bank_size=2)
    assert many.constant >= one.constant and many.aux["sigma_operator_norm"] >= 1.0
    # 3-cube union against the brute-force operator
    mask = np.zeros(dom.shape, bool)
    for i in (0, 1, 2):
        a, s = sample.corners[i], int(sample.sides[i])
        mask[a[0]:a[0] + s, a[1]:a[1] + s] = True
    M = oracles.maximal_bruteforce(np.where(mask, sigma.values, 0.0), dom.interior, dom.node_distance,
                                   dom.h, F(1, 2), candidate_radii(dom, F(1, 2), "dyadic"))
    ref = np.sum(M[mask] ** 2 * u.values[mask]) / np.sum(sigma.values[mask])
    assert many.values[len(singles)] == pytest.approx(ref, rel=1e-12)


def test_report_json():
    dom = open_box(32)
    rep = doubling_constant(constant_field(dom), F(1, 2))
    obj = rep.to_json()
    assert obj["class"] == "D_beta" and obj["constant"] == 4.0


@given(st.sampled_from([F(1, 8), F(1, 4), F(1, 2)]), st.sampled_from([F(1, 4), F(1, 2), F(3, 4)]),
       st.sampled_from([F(-1, 2), F(1, 2), F(3, 2), F(3)]))
def test_local_apq_monotone_in_beta(a, b, alpha):
    small, big = min(a, b), max(a, b)
    dom = punctured_square(32)
    exps = ExponentPair(2, 3)
    u, _, sigma, _ = power_weight_pair(dom, alpha, exps)
    sample = box_sample(dom, sides=[1, 2, 4], stride=2)
    lo = apq_constant(u, exps, sample, sigma=sigma, beta=small).constant
    hi = apq_constant(u, exps, sample, sigma=sigma, beta=big).constant
    assert lo <= hi


def test_cube_sample_geometry():
    dom = open_box(16)
    s = CubeSample(dom, [[2, 4]], [4], "one")
    Q = s.cube(0)
    assert Q.lo == (F(1, 8), F(1, 4)) and Q.side == F(1, 4)
    assert s.dilated(2).cube(0).side == F(1, 2)
    with pytest.raises(ValueError):
        CubeSample(dom, [[2, 4]], [3], "odd").dilated(2)
    assert s.gap_from([0.0, 0.0])[0] == 0.25
