from fractions import Fraction as F
import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from localmax.geometry import (
    Cube,
    Domain,
    DomainError,
    FamilyParams,
    box_annulus,
    distance_to_complement,
    enumerate_family_cubes,
    family_mask,
    grid_cube,
    half_space_clip,
    in_family,
    mask_domain,
    open_box,
    punctured_square,
    rasterize,
)

SHIPPED = [punctured_square, box_annulus, half_space_clip, open_box]


def big_punctured():
    return Domain(2, "punctured-space", (-8, -8), F(1, 4), (64, 64))


def test_punctured_distance_is_max_gap():
    assert distance_to_complement(big_punctured(), (3, 4)) == 4


def test_half_space_distance():
    dom = Domain(2, "half-space", (0, 0), F(1, 4), (32, 32), params={"axis": 0, "offset": 0})
    assert distance_to_complement(dom, (2, 5)) == 2


def test_mask_square_centre():
    dom = mask_domain(np.ones((64, 64), bool), (0, 0), F(1, 64))
    assert distance_to_complement(dom, (F(1, 2), F(1, 2))) == F(1, 2)


def test_point_outside_box_rejected():
    with pytest.raises(DomainError):
        distance_to_complement(punctured_square(16), (2, 0))


def test_family_is_strict():
    dom, fam = big_punctured(), FamilyParams(F(1, 2))
    assert in_family(Cube((3, 4), F(19, 10)), fam, dom)
    assert not in_family(Cube((3, 4), 2), fam, dom)


def test_centre_in_complement_is_not_an_error():
    assert not in_family(Cube((0, 0), F(1, 8)), FamilyParams(F(1, 2)), punctured_square(16))


def test_eps_strict_margin():
    dom = big_punctured()
    assert not in_family(Cube((3, 4), F(19, 10)), FamilyParams(F(1, 2), F(1, 5)), dom)


@pytest.mark.parametrize("maker", SHIPPED)
def test_closed_form_distance_matches_oracle(maker):
    dom = maker(16)
    for idx in itertools.product(range(16), repeat=2):
        x = dom.node_point(idx)
        assert dom.distance_exact(x) == oracles.closed_form_distance(dom.kind, x, dom.params)
        assert float(dom.distance_exact(x)) == dom.node_distance[idx]


def test_mask_distance_matches_bruteforce():
    rng = np.random.default_rng(3)
    mask = rng.random((24, 24)) > 0.25
    dom = mask_domain(mask, (0, 0), F(1, 8))
    ref = oracles.chessboard_mask_distance(mask) * dom.hf
    np.testing.assert_array_equal(dom.node_distance, ref)
    # the vectorised point query agrees with the transform on nodes
    np.testing.assert_array_equal(np.where(mask, dom.distance(dom.nodes), 0.0), ref)


def test_rasterized_mask_within_one_cell():
    dom = punctured_square(32)
    ras = rasterize(dom)
    box = np.min(np.minimum(dom.nodes - dom.lof, dom.hif - dom.nodes), axis=-1)
    # the mask sees the box edge as complement; compare where the puncture is nearer
    near = ras.interior & (dom.node_distance + dom.hf <= box)
    assert near.sum() > 100
    assert np.abs(dom.node_distance - ras.node_distance)[near].max() <= dom.hf


def test_enumeration_single_scale_matches_predicate():
    dom = punctured_square(32)
    fam = FamilyParams(F(1, 2))
    got = {c.center for c in enumerate_family_cubes(dom, fam, [dom.h], inside_box=False)}
    want = {dom.node_point(i) for i in itertools.product(range(32), repeat=2)
            if dom.h < F(1, 2) * dom.distance_exact(dom.node_point(i))}
    assert got == want


def test_enumeration_on_mask_matches_node_scan():
    rng = np.random.default_rng(0)
    mask = rng.random((32, 32)) > 0.1
    dom = mask_domain(mask, (0, 0), F(1, 32))
    fam = FamilyParams(F(1, 2))
    scales = [dom.h / 2, dom.h, 2 * dom.h]
    count = sum(1 for _ in enumerate_family_cubes(dom, fam, scales))
    half = np.array(scales)[:, None, None] * 1.0
    d = dom.node_distance[None]
    pts = dom.nodes[None]
    inside = np.all((pts - half[..., None] >= dom.lof) & (pts + half[..., None] <= dom.hif), axis=-1)
    assert count == int(np.sum(family_mask(half, d, F(1, 2)) & inside))


def test_enumeration_order_is_scale_then_centre():
    dom = open_box(8)
    cubes = list(enumerate_family_cubes(dom, FamilyParams(F(1, 2)), [F(1, 16), F(1, 32)]))
    keys = [(c.half, c.center) for c in cubes]
    assert keys == sorted(keys)
    assert list(enumerate_family_cubes(dom, FamilyParams(F(1, 2)), [])) == []


def test_enumeration_monotone_in_beta():
    dom = box_annulus(16)
    scales = [dom.h * k / 2 for k in range(1, 6)]
    small = set(enumerate_family_cubes(dom, FamilyParams(F(1, 4)), scales))
    big = set(enumerate_family_cubes(dom, FamilyParams(F(1, 2)), scales))
    assert small <= big


def test_grid_cube_and_dyadic():
    dom = open_box(16)
    Q = grid_cube(dom, (4, 8), 4)
    assert Q.lo == (F(1, 4), F(1, 2)) and Q.side == F(1, 4)
    assert Q.is_dyadic_cube()
    assert not grid_cube(dom, (1, 0), 2).is_dyadic_cube()
    assert not Cube((0, 0), F(3, 2)).is_dyadic_cube()


def test_cube_set_logic():
    a, b = Cube((0, 0), 1), Cube((2, 0), 1)
    assert a.intersects(b) and not a.intersects(b, interior=True)
    assert a.dilate(3).contains(b)
    assert a.distance_to_point((3, 0)) == 2
    assert Cube.from_json(a.to_json()) == a


def test_domain_json_roundtrip_fields():
    obj = half_space_clip(16).to_json()
    assert obj["kind"] == "half-space" and obj["h"] == {"mantissa": 1, "scale": 3}


def test_bad_domains():
    with pytest.raises(DomainError):
        Domain(4, "open-box", (0,) * 4, 1, (2,) * 4)
    with pytest.raises(DomainError):
        Domain(1, "open-box", (0,), F(1, 3), (3,), params={"lower": (0,), "upper": (1,)})
    with pytest.raises(DomainError):
        mask_domain(np.zeros((4, 4), bool), (0, 0), 1)
    with pytest.raises(ValueError):
        FamilyParams(1)


@given(st.integers(0, 31), st.integers(0, 31), st.integers(0, 31), st.integers(0, 31),
       st.sampled_from(SHIPPED))
def test_distance_is_1_lipschitz(i, j, k, l, maker):
    dom = maker(32)
    x, y = dom.node_point((i, j)), dom.node_point((k, l))
    gap = max(abs(a - b) for a, b in zip(x, y))
    assert abs(dom.distance_exact(x) - dom.distance_exact(y)) <= gap


@given(st.integers(0, 31), st.integers(0, 31), st.integers(1, 12),
       st.sampled_from([F(1, 8), F(1, 4), F(1, 2), F(3, 4)]),
       st.sampled_from([F(1, 8), F(1, 4), F(1, 2), F(3, 4)]))
def test_family_monotone(i, j, m, a, b):
    alpha, beta = min(a, b), max(a, b)
    dom = box_annulus(32)
    Q = Cube(dom.node_point((i, j)), m * dom.h / 2)
    if in_family(Q, FamilyParams(alpha), dom):
        assert in_family(Q, FamilyParams(beta), dom)


@given(st.integers(0, 31), st.integers(0, 31), st.integers(1, 12), st.sampled_from([-1, 1]),
       st.sampled_from([-1, 1]))
def test_half_size_subcube_stays_in_family(i, j, m, s1, s2):
    dom = punctured_square(32)
    fam = FamilyParams(F(1, 2))
    Q = Cube(dom.node_point((i, j)), m * dom.h)
    if in_family(Q, fam, dom):
        sub = Cube(tuple(c + s * Q.half / 2 for c, s in zip(Q.center, (s1, s2))), Q.half / 2)
        assert Q.contains(sub) and in_family(sub, fam, dom)


@given(st.integers(0, 31), st.integers(0, 31), st.integers(1, 40), st.sampled_from(SHIPPED))
def test_family_cube_lies_in_domain(i, j, m, maker):
    dom = maker(32)
    Q = Cube(dom.node_point((i, j)), m * dom.h / 4)
    if in_family(Q, FamilyParams(F(3, 4)), dom):
        assert all(dom.distance_exact(v) > 0 for v in itertools.product(*zip(Q.lo, Q.hi)))
