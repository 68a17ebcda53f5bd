"""Weight-class diagnostics over explicit cube samples.

Every constant here is a maximum over a named, finite :class:`CubeSample` of
cell-aligned cubes; none of them is a supremum over the continuum.  Cubes
are stored as integer corners plus a side length in cells, so all integrals
are exact summed-area lookups.
"""
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
import math

import numpy as np

from .dyadic import parse_ratio
from .geometry import Cube, family_mask
from .fields import ScalarField, dual_weight, power_weight

__all__ = [
    "ExponentPair",
    "WeightClassReport",
    "CubeSample",
    "box_sample",
    "family_sample",
    "doubling_sample",
    "doubling_constant",
    "apq_constant",
    "apq_values",
    "ainfty_estimate",
    "reverse_holder_exponent",
    "sawyer_testing_constant",
    "finite_union_testing_constant",
    "power_weight_pair",
    "self_improved_exponents",
]

RHI_GRID = tuple(2.0**-k for k in range(1, 11))


@dataclass(frozen=True)
class ExponentPair:
    p: Fraction
    q: Fraction

    def __init__(self, p, q=None):
        p = parse_ratio(p)
        q = p if q is None else parse_ratio(q)
        if not 1 < p <= q:
            raise ValueError("need 1 < p <= q")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def pprime(self):
        return self.p / (self.p - 1)


@dataclass
class WeightClassReport:
    tag: str
    constant: float
    witness: object
    family: str
    aux: dict = dc_field(default_factory=dict)
    values: np.ndarray = dc_field(default=None, repr=False)

    @property
    def bounded(self):
        return bool(np.isfinite(self.constant))

    def to_json(self):
        w = self.witness
        if isinstance(w, Cube):
            w = w.to_json()
        elif isinstance(w, (list, tuple)):
            w = [x.to_json() if isinstance(x, Cube) else x for x in w]
        aux = {k: (float(v) if isinstance(v, (Fraction, np.floating)) else v) for k, v in self.aux.items()}
        return {"class": self.tag, "constant": _json_num(self.constant), "witness": w, "family": self.family, "aux": aux}


def _json_num(x):
    x = float(x)
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


# -- cube samples -------------------------------------------------------------------

@dataclass
class CubeSample:
    """Cell-aligned cubes ``[corner, corner + side)`` in cell indices."""

    domain: object
    corners: np.ndarray
    sides: np.ndarray
    description: str

    def __len__(self):
        return len(self.sides)

    def __post_init__(self):
        self.corners = np.asarray(self.corners, dtype=np.int64).reshape(-1, self.domain.n)
        self.sides = np.asarray(self.sides, dtype=np.int64).reshape(-1)

    @property
    def ends(self):
        return self.corners + self.sides[:, None]

    def centers(self):
        d = self.domain
        return d.lof + (self.corners + self.sides[:, None] / 2) * d.hf

    def halves(self):
        return self.sides * self.domain.hf / 2

    def volumes(self):
        return (self.sides * self.domain.hf) ** self.domain.n

    def cube(self, i):
        d = self.domain
        s = int(self.sides[i])
        c = tuple(lo + (int(a) + Fraction(s, 2)) * d.h for lo, a in zip(d.lo, self.corners[i]))
        return Cube(c, s * d.h / 2)

    def integrate(self, field):
        return field.box_sums(self.corners, self.ends) * self.domain.cell_volume

    def where(self, keep, note=None):
        keep = np.asarray(keep, dtype=bool)
        desc = self.description if note is None else f"{self.description}; {note}"
        return CubeSample(self.domain, self.corners[keep], self.sides[keep], desc)

    def in_family(self, beta, eps=0.0):
        beta = parse_ratio(beta)
        d = self.domain.distance(self.centers())
        return family_mask(self.halves(), d, beta, eps)

    def gap_from(self, point):
        """Sup-norm distance from ``point`` to each (closed) cube."""
        c = self.centers()
        p = np.asarray(point, dtype=float)
        return np.maximum(np.max(np.abs(c - p), axis=1) - self.halves(), 0.0)

    def dilated(self, factor=2):
        """Same-centre cubes with ``factor`` times the side (needs ``side*(factor-1)`` even)."""
        grow = self.sides * (factor - 1)
        if np.any(grow % 2):
            raise ValueError("dilation would leave the cell lattice")
        return CubeSample(self.domain, self.corners - grow[:, None] // 2, self.sides * factor,
                          f"{factor}x({self.description})")

    def inside_box(self):
        return np.all((self.corners >= 0) & (self.ends <= np.array(self.domain.shape)), axis=1)


def box_sample(domain, sides=None, stride=1):
    """Every cube in the box with the given sides (cells) and corners on a ``stride`` lattice."""
    if sides is None:
        sides = [2**k for k in range(int(math.log2(min(domain.shape))) + 1)]
    corners, ss = [], []
    for s in sides:
        axes = [np.arange(0, n - s + 1, stride) for n in domain.shape]
        if any(len(a) == 0 for a in axes):
            continue
        g = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, domain.n)
        corners.append(g)
        ss.append(np.full(len(g), s))
    if not corners:
        raise ValueError("empty cube sample")
    return CubeSample(domain, np.concatenate(corners), np.concatenate(ss),
                      f"box cubes sides={list(sides)} stride={stride}")


def family_sample(domain, beta, sides=None, stride=1, eps=0.0):
    """Box cubes that belong to F_beta."""
    s = box_sample(domain, sides, stride)
    return s.where(s.in_family(beta, eps), f"in F_{parse_ratio(beta)}")


def doubling_sample(domain, beta, sides=None, stride=1):
    """Cubes ``Q`` of even side whose double ``2Q`` stays in the box and in F_beta."""
    if sides is None:
        sides = [2**k for k in range(1, int(math.log2(min(domain.shape))))]
    sides = [s for s in sides if s % 2 == 0]
    base = box_sample(domain, sides, stride)
    big = base.dilated(2)
    keep = big.inside_box() & big.in_family(beta)
    return base.where(keep, f"2Q in F_{parse_ratio(beta)}")


# -- doubling ----------------------------------------------------------------------

def doubling_constant(w, beta, sample=None):
    """``max w(2Q) / w(Q)`` over a doubling sample (``inf`` with witness if some ``w(Q) = 0``)."""
    sample = sample if sample is not None else doubling_sample(w.domain, beta)
    if not len(sample):
        raise ValueError("empty doubling sample")
    small = sample.integrate(w)
    big = sample.dilated(2).integrate(w)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(small > 0, big / np.where(small > 0, small, 1.0), np.inf)
    i = int(np.argmax(ratio))
    return WeightClassReport("D_beta", float(ratio[i]), sample.cube(i), sample.description,
                             {"beta": str(parse_ratio(beta)), "samples": len(sample)}, ratio)


# -- A_{p,q} -------------------------------------------------------------------------

def apq_values(u, sigma, exps, sample):
    """Per-cube ``(u(Q)/|Q|)**(p/q) * (sigma(Q)/|Q|)**(p-1)``."""
    vol = sample.volumes()
    ua = sample.integrate(u) / vol
    sa = sample.integrate(sigma) / vol
    p, q = float(exps.p), float(exps.q)
    with np.errstate(invalid="ignore", over="ignore"):
        vals = ua ** (p / q) * sa ** (p - 1)
    # 0 * inf: a cube where u vanishes and sigma diverges carries no information
    return np.where(np.isnan(vals), 0.0, vals)


def apq_constant(u, exps, sample, v=None, sigma=None, beta=None):
    """A_{p,q} constant (``beta=None``) or A_{p,q}^beta constant over ``sample``.

    For the local constant the sample is filtered to F_beta; ``sigma`` may be
    given directly (exact cell integrals of a power weight) or derived from
    ``v`` by :func:`~localmax.fields.dual_weight`.
    """
    floored = False
    if sigma is None:
        if v is None:
            raise ValueError("need v or sigma")
        sigma, floored = dual_weight(v, exps.p)
    tag = "A_pq"
    if beta is not None:
        sample = sample.where(sample.in_family(beta), f"in F_{parse_ratio(beta)}")
        tag = "A_pq_beta"
    if not len(sample):
        raise ValueError("empty cube sample")
    vals = apq_values(u, sigma, exps, sample)
    i = int(np.argmax(vals))
    aux = {"p": str(exps.p), "q": str(exps.q), "floored": floored, "samples": len(sample)}
    if beta is not None:
        aux["beta"] = str(parse_ratio(beta))
    return WeightClassReport(tag, float(vals[i]), sample.cube(i), sample.description, aux, vals)


def power_weight_pair(domain, alpha, exps):
    """``u = |x|**alpha`` and ``v = |x|**gamma``, ``gamma = (alpha + n) p / q - n``, with exact ``sigma``.

    ``sigma = v**(-1/(p-1))`` is itself a power, so its cell integrals are
    computed directly rather than by inverting cell averages of ``v``.
    """
    n = domain.n
    p, q = exps.p, exps.q
    alpha = parse_ratio(alpha)
    gamma = (alpha + n) * p / q - n
    s_exp = -gamma / (p - 1)
    u = power_weight(domain, alpha)
    v = power_weight(domain, gamma)
    sigma = power_weight(domain, s_exp)
    return u, v, sigma, gamma


# -- A_infinity and reverse Hoelder ------------------------------------------------------

def _subsets(sample, rng, n_random, max_depth):
    """Sub-sets ``E`` of each sample cube as ``(cube index, corners, sides)`` unions of boxes."""
    dom = sample.domain
    pairs = []
    for i in range(len(sample)):
        a = sample.corners[i]
        s = int(sample.sides[i])
        # dyadic descendants down to single cells (or max_depth levels)
        sub = s
        depth = 0
        while sub % 2 == 0 and sub > 1 and depth < max_depth:
            sub //= 2
            depth += 1
            offs = np.stack(np.meshgrid(*[np.arange(0, s, sub)] * dom.n, indexing="ij"), -1).reshape(-1, dom.n)
            for o in offs:
                pairs.append((i, (a + o)[None, :], np.array([sub])))
        # random unions of cells
        cells = s**dom.n
        for _ in range(n_random if cells > 1 else 0):
            k = int(rng.integers(1, cells))
            pick = rng.choice(cells, size=k, replace=False)
            idx = np.stack(np.unravel_index(pick, (s,) * dom.n), -1)
            pairs.append((i, a + idx, np.ones(k, dtype=np.int64)))
    return pairs


def ainfty_estimate(w, beta, sample=None, cap=10.0, n_random=4, max_depth=3, seed=0):
    """Upper-envelope fit of ``w(E)/w(Q) <= c (|E|/|Q|)**delta``.

    Sub-sets ``E`` are dyadic descendants of each ``Q`` and seeded random
    unions of its cells.  With ``x = log(|E|/|Q|) <= 0`` and
    ``y = log(w(E)/w(Q)) <= 0``, ``delta`` is the largest value in ``[0, 1]``
    for which every sample satisfies ``y <= log(cap) + delta x``; ``c`` is
    the smallest intercept that works for that ``delta``.  ``delta = 0``
    means the sample gives no decay at the configured cap.
    """
    dom = w.domain
    if sample is None:
        sample = family_sample(dom, beta, sides=[2**k for k in range(1, 5)], stride=4)
    else:
        sample = sample.where(sample.in_family(beta))
    if not len(sample):
        raise ValueError("empty cube sample")
    rng = np.random.default_rng(seed)
    wq = sample.integrate(w)
    if np.any(wq <= 0):
        i = int(np.argmax(wq <= 0))
        return WeightClassReport("A_inf_beta", math.inf, sample.cube(i), sample.description,
                                 {"delta": 0.0, "c": math.inf, "reason": "w(Q) = 0"})
    xs, ys, who = [], [], []
    for qi, corners, sides in _subsets(sample, rng, n_random, max_depth):
        we = float(np.sum(w.box_sums(corners, corners + sides[:, None]))) * dom.cell_volume
        ve = float(np.sum(sides.astype(float) ** dom.n))
        xs.append(math.log(ve / float(sample.sides[qi]) ** dom.n))
        ys.append(math.log(we / wq[qi]) if we > 0 else -math.inf)
        who.append((qi, corners, sides))
    xs, ys = np.array(xs), np.array(ys)
    logc = math.log(cap)
    neg = xs < 0
    with np.errstate(divide="ignore", invalid="ignore"):
        slopes = np.where(neg & np.isfinite(ys), (logc - ys) / -xs, np.inf)
    j = int(np.argmin(slopes))
    delta = float(np.clip(slopes[j], 0.0, 1.0))
    resid = ys - delta * xs
    c = float(np.exp(np.max(resid[np.isfinite(resid)])))
    qi, corners, sides = who[j]
    witness = {"Q": sample.cube(qi).to_json(), "E_cells": corners.tolist(), "E_sides": sides.tolist()}
    return WeightClassReport("A_inf_beta", c, witness, sample.description,
                             {"delta": delta, "c": c, "cap": cap, "pairs": len(xs), "seed": seed},
                             np.stack([xs, ys], 1))


def _rhi_ratio(w, sample, eps):
    vol = sample.volumes()
    avg = sample.integrate(w) / vol
    wp = w.with_values(w.values ** (1 + eps))
    avgp = sample.integrate(wp) / vol
    return (avgp ** (1 / (1 + eps))) / avg


def reverse_holder_exponent(w, beta, sample=None, cap=2.0):
    """Largest ``eps`` in ``{1/2, ..., 1/1024}`` with ``C_RHI(eps) <= cap`` over the sample.

    The samples are cell averages, so ``w**(1+eps)`` is taken cellwise.
    """
    if np.any(w.values <= 0) or w.singular is not None:
        raise ValueError("reverse Hoelder needs a strictly positive, finite weight")
    if sample is None:
        sample = family_sample(w.domain, beta, sides=[2**k for k in range(0, 5)], stride=2)
    else:
        sample = sample.where(sample.in_family(beta))
    table = {}
    for eps in RHI_GRID:
        r = _rhi_ratio(w, sample, eps)
        i = int(np.argmax(r))
        table[eps] = (float(r[i]), i)
        if r[i] <= cap:
            return WeightClassReport("RHI", float(r[i]), sample.cube(i), sample.description,
                                     {"epsilon": eps, "cap": cap, "table": {str(k): v[0] for k, v in table.items()}})
    return WeightClassReport("RHI", math.inf, None, sample.description,
                             {"epsilon": None, "cap": cap, "table": {str(k): v[0] for k, v in table.items()},
                              "reason": "no epsilon on the grid meets the cap"})


def self_improved_exponents(exps, eps):
    """``(delta, p~, q~)`` with ``(p-1)/(1+eps) = p - delta - 1`` and ``q~ = (p - delta) q / p``."""
    p, q = exps.p, exps.q
    eps = parse_ratio(eps)
    delta = (p - 1) - (p - 1) / (1 + eps)
    pt = p - delta
    qt = pt * q / p
    return delta, pt, qt


# -- testing constants ------------------------------------------------------------------

def _cells_mask(domain, corners, sides):
    m = np.zeros(domain.shape, dtype=bool)
    for a, s in zip(corners, sides):
        m[tuple(slice(int(x), int(x) + int(s)) for x in a)] = True
    return m


def sawyer_testing_constant(u, sigma, exps, beta, sample, mode="uncentered", lattice="dyadic"):
    """``max (int_Q M(sigma chi_Q)**q u)**(1/q) / sigma(Q)**(1/p)`` over F_beta cubes of the sample."""
    from .maximal import maximal

    sample = sample.where(sample.in_family(beta))
    if not len(sample):
        raise ValueError("empty cube sample")
    p, q = float(exps.p), float(exps.q)
    dom = u.domain
    vals = np.zeros(len(sample))
    skipped = 0
    for i in range(len(sample)):
        mask = _cells_mask(dom, sample.corners[i : i + 1], sample.sides[i : i + 1])
        sq = float(np.sum(sigma.values[mask]) * dom.cell_volume)
        if not sq > 0 or not math.isfinite(sq):
            skipped += 1
            continue
        f = sigma.with_values(np.where(mask, sigma.values, 0.0))
        M = maximal(f, beta, mode, lattice=lattice).values
        lhs = float(np.sum((M[mask] ** q) * u.values[mask]) * dom.cell_volume) ** (1 / q)
        vals[i] = lhs / sq ** (1 / p)
    i = int(np.argmax(vals))
    return WeightClassReport("Sawyer", float(vals[i]), sample.cube(i), sample.description,
                             {"p": str(exps.p), "q": str(exps.q), "mode": mode, "skipped": skipped,
                              "beta": str(parse_ratio(beta))}, vals)


def finite_union_testing_constant(u, sigma, p, beta, sample, unions, lattice="dyadic", bank_size=8, seed=0):
    """``max int_F M(sigma chi_F)**p u / sigma(F)`` over unions of sample cubes.

    ``unions`` is a list of index lists into ``sample``.  Also estimates the
    norm of the sigma-weighted operator on ``L^p(sigma)`` over indicators of
    the unions plus a few seeded random fields.
    """
    from .maximal import maximal

    p = float(parse_ratio(p))
    dom = u.domain
    vals = np.zeros(len(unions))
    skipped = 0
    masks = []
    for j, idx in enumerate(unions):
        idx = list(idx)
        mask = _cells_mask(dom, sample.corners[idx], sample.sides[idx])
        masks.append(mask)
        sf = float(np.sum(sigma.values[mask]) * dom.cell_volume)
        if not sf > 0 or not math.isfinite(sf):
            skipped += 1
            continue
        f = sigma.with_values(np.where(mask, sigma.values, 0.0))
        M = maximal(f, beta, "uncentered", lattice=lattice).values
        vals[j] = float(np.sum((M[mask] ** p) * u.values[mask]) * dom.cell_volume) / sf
    rng = np.random.default_rng(seed)
    bank = [m.astype(float) for m in masks] + [rng.random(dom.shape) for _ in range(bank_size)]
    norm = 0.0
    for g in bank:
        fg = sigma.with_values(g)
        Mg = maximal(fg, beta, "weighted", sigma=sigma, lattice=lattice).values
        den = float(np.sum(g**p * sigma.values))
        if den > 0:
            norm = max(norm, (float(np.sum(Mg**p * sigma.values)) / den) ** (1 / p))
    j = int(np.argmax(vals))
    witness = [sample.cube(i) for i in unions[j]]
    return WeightClassReport("finite-union", float(vals[j]), witness, sample.description,
                             {"p": str(p), "skipped": skipped, "sigma_operator_norm": norm,
                              "unions": len(unions)}, vals)
