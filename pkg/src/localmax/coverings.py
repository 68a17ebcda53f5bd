"""Whitney-type coverings, clouds, Besicovitch selection and Calderon-Zygmund cubes.

Whitney cubes are dyadic cubes anchored at the origin.  A cube of *level*
``k`` has half side ``2**(k - t - 2)``; it is accepted when its sup-norm
distance to the complement is at least ``2**(k - 1)`` (it does not reach the
band below) and its parent was not.  That is the band construction with the
sub-division step applied recursively, so the result is a partition.
"""
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
import math

import numpy as np

from .dyadic import parse_ratio, to_fraction
from .geometry import Cube, FamilyParams, in_family, family_mask, DomainError

__all__ = [
    "CoveringError",
    "WhitneyCovering",
    "build_whitney",
    "whitney_cubes_near",
    "check_whitney",
    "minimal_t",
    "Cloud",
    "cloud",
    "band_index",
    "Neighbors",
    "whitney_neighbors",
    "neighbor_bounds",
    "besicovitch_select",
    "besicovitch_overlap",
    "BESICOVITCH_BOUND",
    "CZResult",
    "cz_select",
    "cz_constants",
    "cloud_overlap_check",
    "overlap_bound",
]


class CoveringError(ValueError):
    """Precondition failures of the covering constructions."""


def minimal_t(beta, ratio=20):
    """Smallest ``t >= 1`` with ``2**-t <= beta / ratio``."""
    beta = parse_ratio(beta)
    t = 1
    while Fraction(1, 2**t) > beta / ratio:
        t += 1
    return t


def band_index(d):
    """``k`` with ``2**(k-1) <= d < 2**k`` (vectorised, ``d > 0``)."""
    d = np.asarray(d, dtype=float)
    _, e = np.frexp(d)  # d = mant * 2**e, mant in [0.5, 1)
    return e


@dataclass
class WhitneyCovering:
    """Disjoint dyadic cubes with their band index and provenance.

    ``lo`` (K, n) and ``half`` (K,) are float copies of exact dyadic data.
    ``provenance`` is ``"kept-whole"`` for a cube of G_k kept in E_k and
    ``"subdivided-child"`` for a child pushed down from G_{k+1}; descendants
    of cubes cut by the bounding box are tagged ``"clipped"``.
    """

    domain: object
    beta: Fraction
    t: int
    lo: np.ndarray
    half: np.ndarray
    band: np.ndarray
    provenance: list
    three_band_checked: int = 0
    _owner: np.ndarray = dc_field(default=None, repr=False)

    def __len__(self):
        return len(self.half)

    def cube(self, i):
        h = Fraction(self.half[i])
        return Cube(tuple(Fraction(v) + h for v in self.lo[i]), h)

    def cubes(self):
        return [self.cube(i) for i in range(len(self))]

    @property
    def hi(self):
        return self.lo + 2 * self.half[:, None]

    def node_boxes(self):
        """Half-open node index boxes ``[a, b)`` of the nodes inside each cube (half-open cubes)."""
        return _node_range(self.domain, self.lo, self.hi)

    def node_counts(self):
        """How many cubes claim each node (half-open convention)."""
        dom = self.domain
        a, b = self.node_boxes()
        diff = np.zeros(tuple(s + 1 for s in dom.shape), dtype=np.int64)
        live = np.all(b > a, axis=1)
        for corner in np.ndindex(*(2,) * dom.n):
            idx = tuple(np.where(np.array(corner)[None, :] == 1, b, a)[live].T)
            np.add.at(diff, idx, (-1) ** sum(corner))
        for ax in range(dom.n):
            diff = np.cumsum(diff, axis=ax)
        return diff[tuple(slice(0, s) for s in dom.shape)]

    @property
    def owner(self):
        """Index of the cube holding each node (-1 if none)."""
        if self._owner is None:
            own = np.full(self.domain.shape, -1, dtype=np.int64)
            a, b = self.node_boxes()
            for i in range(len(self)):
                if np.all(b[i] > a[i]):
                    own[tuple(slice(x, y) for x, y in zip(a[i], b[i]))] = i
            self._owner = own
        return self._owner

    def to_json(self):
        from .dyadic import encode

        return {
            "beta": str(self.beta),
            "t": self.t,
            "cubes": [
                {
                    "center": [encode(Fraction(v) + Fraction(h)) for v in lo],
                    "half": encode(Fraction(h)),
                    "band": int(k),
                    "provenance": p,
                }
                for lo, h, k, p in zip(self.lo, self.half, self.band, self.provenance)
            ],
        }


def _node_range(domain, lo, hi):
    """Node index ranges ``[a, b)`` with ``lo <= node < hi`` per axis."""
    h = domain.hf
    a = np.ceil((lo - domain.lof) / h - 0.5).astype(np.int64)
    b = np.ceil((hi - domain.lof) / h - 0.5).astype(np.int64)
    shape = np.array(domain.shape)
    return np.clip(a, 0, shape), np.clip(b, 0, shape)


def _interior_table(domain):
    t = domain.interior.astype(np.int64)
    for ax in range(domain.n):
        t = np.cumsum(t, axis=ax)
    return np.pad(t, [(1, 0)] * domain.n)


def _box_count(table, a, b):
    n = a.shape[1]
    out = np.zeros(len(a), dtype=np.int64)
    for corner in np.ndindex(*(2,) * n):
        sel = np.array(corner)[None, :] == 1
        idx = tuple(np.where(sel, b, a).T)
        out += (-1) ** (n - sum(corner)) * table[idx]
    return out


def _whitney_cubes(domain, beta, t, keep, start_level=None, min_level=None):
    """Top-down band construction; ``keep(lo, hi)`` prunes cubes that are irrelevant."""
    beta = parse_ratio(beta)
    if Fraction(1, 2**t) > beta / 5:
        raise CoveringError(f"need 2^-t <= beta/5, got t={t}, beta={beta}")
    n = domain.n
    dmax = float(domain.node_distance.max()) + float(domain.hf)
    k = start_level if start_level is not None else int(math.ceil(math.log2(dmax))) + 2
    lowest = min_level if min_level is not None else int(math.floor(math.log2(domain.hf))) - 60
    side = 2.0 ** (k - t - 1)
    c0 = np.floor(domain.lof / side).astype(np.int64)
    c1 = np.ceil(domain.hif / side).astype(np.int64)
    corners = np.stack(np.meshgrid(*[np.arange(a, b) for a, b in zip(c0, c1)], indexing="ij"), -1).reshape(-1, n)
    clipped = np.zeros(len(corners), dtype=bool)
    out_lo, out_half, out_band, out_prov = [], [], [], []
    checked = 0
    offsets = np.array(list(np.ndindex(*(2,) * n)), dtype=np.int64)
    while len(corners):
        if k < lowest:
            raise CoveringError("Whitney recursion did not terminate; degenerate domain?")
        side = 2.0 ** (k - t - 1)
        lo = corners * side
        hi = lo + side
        live = keep(lo, hi)
        corners, clipped, lo, hi = corners[live], clipped[live], lo[live], hi[live]
        if not len(corners):
            break
        dmin = domain.cube_dmin(lo, hi)
        # a cube reaching below band k-1 cannot reach band k+1 (sup-norm diameter = side)
        lowband = dmin < 2.0 ** (k - 1)
        checked += int(lowband.sum())
        if np.any(lowband & (dmin + side >= 2.0**k)):
            raise CoveringError("a level-k cube meets three bands")
        inbox = np.all((lo >= domain.lof) & (hi <= domain.hif), axis=1)
        ok = ~lowband
        accept = ok & inbox
        if accept.any():
            out_lo.append(lo[accept])
            out_half.append(np.full(accept.sum(), side / 2))
            out_band.append(np.full(accept.sum(), k))
            prov = np.where(clipped[accept], "clipped", np.where(dmin[accept] < 2.0**k, "kept-whole", "subdivided-child"))
            out_prov.extend(prov.tolist())
        rest = ~accept
        clipped_next = clipped[rest] | (ok[rest] & ~inbox[rest])
        corners = (2 * corners[rest][:, None, :] + offsets[None, :, :]).reshape(-1, n)
        clipped = np.repeat(clipped_next, len(offsets))
        k -= 1
    if not out_lo:
        raise CoveringError("empty covering")
    lo = np.concatenate(out_lo)
    half = np.concatenate(out_half)
    band = np.concatenate(out_band)
    return lo, half, band, out_prov, checked


def build_whitney(domain, beta, t):
    """Whitney-type covering ``W_t`` restricted to the cubes that hold grid nodes.

    Near the boundary the continuum covering has infinitely many cubes; only
    those containing at least one interior node (half-open convention) are
    materialised, which is exactly what the node-level checks need.
    """
    beta = parse_ratio(beta)
    table = _interior_table(domain)

    def keep(lo, hi):
        a, b = _node_range(domain, lo, hi)
        nonempty = np.all(b > a, axis=1)
        cnt = np.zeros(len(lo), dtype=np.int64)
        cnt[nonempty] = _box_count(table, a[nonempty], b[nonempty])
        return cnt > 0

    lo, half, band, prov, checked = _whitney_cubes(domain, beta, t, keep)
    return WhitneyCovering(domain, beta, t, lo, half, band, prov, checked)


def whitney_cubes_near(domain, beta, t, window_lo, window_hi):
    """All cubes of ``W_t`` meeting the closed box ``[window_lo, window_hi]`` (no node pruning)."""
    wlo = np.asarray(window_lo, dtype=float)
    whi = np.asarray(window_hi, dtype=float)

    def keep(lo, hi):
        return np.all((lo <= whi) & (hi >= wlo), axis=1)

    lo, half, band, prov, checked = _whitney_cubes(domain, beta, t, keep)
    return WhitneyCovering(domain, parse_ratio(beta), t, lo, half, band, prov, checked)


def _certify_exact(scale, *arrays, headroom=16):
    """True when every entry is a multiple of ``2**-scale`` small enough that
    sums, differences, ``max``/``min``, power-of-two scalings and products by
    integers below ``2**headroom`` stay exact in float64."""
    for a in arrays:
        a = np.asarray(a, dtype=float)
        units = np.ldexp(a, scale)
        if not np.all(units == np.round(units)):
            return False
        if np.any(np.abs(units) >= 2.0 ** (52 - headroom)):
            return False
    return True


def check_whitney(W, method="dyadic"):
    """Exact checks of a covering; returns a dict of violation counts (all zero when sound).

    Per cube: ``10R`` in F_beta, the size ratio ``2^-t-3 <= l/d <= 2^-t-1``,
    the band sandwich ``2^(k-1) < d(x) <= 2^(k+1)``, the level/size relation,
    dyadicity and disjointness (no cube has an ancestor in the family).  Node
    coverage is an exhaustive scan of :meth:`WhitneyCovering.node_counts`.

    ``method="dyadic"`` runs vectorised on float64 after certifying that all
    data are dyadic with enough headroom for every operation to be exact;
    ``method="fraction"`` re-derives each cube in :class:`Fraction`.
    """
    if method == "fraction":
        return _check_whitney_fraction(W)
    if method != "dyadic":
        raise ValueError(f"unknown method {method!r}")
    dom = W.domain
    beta = W.beta
    t = W.t
    centers = W.lo + W.half[:, None]
    d = dom.distance(centers)
    scale = int(-math.log2(float(W.half.min()))) + 1
    if not _certify_exact(scale, W.lo, W.half, centers, d, dom.lof, dom.hif):
        return _check_whitney_fraction(W)
    num, den = beta.numerator, beta.denominator
    if max(num, 10 * den) >= 2**16:
        return _check_whitney_fraction(W)
    half, band = W.half, W.band.astype(float)
    bad = {}
    bad["family10"] = int(np.sum(~(den * 10 * half < num * d)))
    bad["ratio"] = int(np.sum(~((np.ldexp(d, -t - 3) <= half) & (half <= np.ldexp(d, -t - 1)))))
    bad["band"] = int(np.sum(~((np.exp2(band - 1) < d) & (d <= np.exp2(band + 1)))))
    bad["size"] = int(np.sum(half != np.exp2(band - t - 2)))
    side = 2 * half
    corner = W.lo / side[:, None]
    bad["dyadic"] = int(np.sum(np.any(corner != np.floor(corner), axis=1)))
    bad["clipped"] = sum(p == "clipped" for p in W.provenance)
    bad["overlap"] = _ancestor_hits(W.band, corner.astype(np.int64), dom)
    counts = W.node_counts()
    bad["coverage"] = int(np.sum(counts[dom.interior] != 1) + np.sum(counts[~dom.interior] != 0))
    return bad


def _ancestor_hits(band, corner, dom):
    keys = {(int(k),) + tuple(c) for k, c in zip(band, corner.tolist())}
    hits = len(band) - len(keys)
    top = int(band.max())
    for j in range(1, top - int(band.min()) + 1):
        sel = band + j <= top
        par = corner[sel] >> j
        lev = band[sel] + j
        hits += sum(((int(k),) + tuple(c)) in keys for k, c in zip(lev, par.tolist()))
    return int(hits)


def _check_whitney_fraction(W):
    dom = W.domain
    params = FamilyParams(W.beta)
    t = W.t
    lo_bound = Fraction(1, 2 ** (t + 3))
    hi_bound = Fraction(1, 2 ** (t + 1))
    bad = {"family10": 0, "ratio": 0, "band": 0, "size": 0, "dyadic": 0, "overlap": 0, "coverage": 0, "clipped": 0}
    keys = set()
    for i in range(len(W)):
        R = W.cube(i)
        k = int(W.band[i])
        d = dom.distance_exact(R.center)
        if not in_family(R.dilate(10), params, dom):
            bad["family10"] += 1
        if not (lo_bound * d <= R.half <= hi_bound * d):
            bad["ratio"] += 1
        if not (Fraction(2) ** (k - 1) < d <= Fraction(2) ** (k + 1)):
            bad["band"] += 1
        if R.half != Fraction(2) ** (k - t - 2):
            bad["size"] += 1
        if not R.is_dyadic_cube():
            bad["dyadic"] += 1
        if W.provenance[i] == "clipped":
            bad["clipped"] += 1
        keys.add((R.side, tuple(l / R.side for l in R.lo)))
    bad["overlap"] += len(W) - len(keys)
    top = 2 * max(abs(b - a) for a, b in zip(dom.lo, dom.hi))
    for side, corner in keys:
        s, c = side, corner
        while s < top:
            s = s * 2
            c = tuple(Fraction(math.floor(v / 2)) for v in c)
            if (s, c) in keys:
                bad["overlap"] += 1
                break
    counts = W.node_counts()
    bad["coverage"] = int(np.sum(counts[dom.interior] != 1) + np.sum(counts[~dom.interior] != 0))
    return bad


# -- clouds -----------------------------------------------------------------------

@dataclass
class Cloud:
    """Lattice under-approximation of the cloud ``N_beta(Q)`` on the node grid."""

    base: Cube
    beta: Fraction
    region: np.ndarray
    measure: float
    resolution: int
    stable: bool
    band_span: tuple  # (h1, h2)
    n_generators: int


def _paint(domain, centers, halves):
    """Boolean node mask of the union of closed cubes."""
    n = domain.n
    h = domain.hf
    a = np.ceil((centers - halves[:, None] - domain.lof) / h - 0.5).astype(np.int64)
    b = np.floor((centers + halves[:, None] - domain.lof) / h - 0.5).astype(np.int64) + 1
    shape = np.array(domain.shape)
    a = np.clip(a, 0, shape)
    b = np.clip(b, 0, shape)
    live = np.all(b > a, axis=1)
    a, b = a[live], b[live]
    diff = np.zeros(tuple(s + 1 for s in domain.shape), dtype=np.int64)
    for corner in np.ndindex(*(2,) * n):
        sel = np.array(corner)[None, :] == 1
        np.add.at(diff, tuple(np.where(sel, b, a).T), (-1) ** sum(corner))
    for ax in range(n):
        diff = np.cumsum(diff, axis=ax)
    return diff[tuple(slice(0, s) for s in domain.shape)] > 0


def _largest_below(d, beta, step):
    """Largest multiple of ``step`` strictly below ``beta * d`` (0 if none)."""
    num, den = beta.numerator, beta.denominator
    k = np.ceil(num * d / (den * step)) - 1
    k = np.maximum(k, 0)
    # fix possible rounding of the division in either direction
    over = ~family_mask(k * step, d, beta) & (k > 0)
    k = np.where(over, k - 1, k)
    under = family_mask((k + 1) * step, d, beta)
    return np.where(under, k + 1, k) * step


def _cloud_region(domain, Q, beta, r):
    step = domain.hf / 2**r
    xq = np.array([float(v) for v in Q.center])
    lq = float(Q.half)
    dq = float(domain.distance_exact(Q.center))
    rho = (lq + float(beta) * dq) / (1 - float(beta))
    lo = xq - rho
    hi = xq + rho
    j0 = np.floor((lo - domain.lof) / step).astype(np.int64)
    j1 = np.ceil((hi - domain.lof) / step).astype(np.int64)
    axes = [domain.lof[i] + np.arange(j0[i], j1[i] + 1) * step for i in range(domain.n)]
    z = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, domain.n)
    dz = domain.distance(z)
    lmax = _largest_below(dz, beta, step)
    gap = np.maximum(np.max(np.abs(z - xq), axis=1) - lq, 0.0)
    good = (lmax > 0) & (gap <= lmax)
    centers = np.vstack([z[good], xq[None, :]])
    halves = np.concatenate([lmax[good], [lq]])
    return _paint(domain, centers, halves), int(good.sum())


def cloud(domain, Q, beta, resolution=None, max_refine=5):
    """Cloud of ``Q``: nodes covered by some F_beta cube meeting ``Q``.

    Candidate centres live on the lattice of step ``h / 2**r`` and each takes
    the largest half side on that lattice allowed by F_beta (larger cubes
    only help).  Without an explicit ``resolution`` the lattice is refined
    until two successive levels give the same node set.
    """
    beta = parse_ratio(beta)
    if not in_family(Q, FamilyParams(beta), domain):
        raise CoveringError("cloud base cube must belong to F_beta")
    if resolution is not None:
        region, ng = _cloud_region(domain, Q, beta, resolution)
        r, stable = resolution, False
    else:
        prev, _ = _cloud_region(domain, Q, beta, 0)
        stable = False
        for r in range(1, max_refine + 1):
            region, ng = _cloud_region(domain, Q, beta, r)
            if np.array_equal(region, prev):
                stable = True
                break
            prev = region
    d = domain.node_distance[region]
    k0 = int(band_index(float(domain.distance_exact(Q.center))))
    bands = band_index(d[d > 0]) if np.any(d > 0) else np.array([k0])
    span = (int(k0 - bands.min()), int(bands.max() - k0))
    return Cloud(Q, beta, region, float(region.sum() * domain.cell_volume), r, stable, span, ng)


# -- neighbours -------------------------------------------------------------------

@dataclass
class Neighbors:
    ids: np.ndarray
    cardinal: int
    union_measure: Fraction
    ratio: float  # |W_{t,Q0}| / |Q0|
    cloud: Cloud


def neighbor_bounds(beta, t, n):
    """Uniform bounds ``(M, K)`` on ``card W_t(Q0)`` and ``|W_{t,Q0}| / |Q0|``.

    Valid for every ``Q0`` in F_beta with ``10 Q0`` outside it; derived from
    the size ratio of the covering and the reach of F_beta cubes (all in
    units of ``d(x_{Q0})``).
    """
    b = float(parse_ratio(beta))
    s1 = 2.0 ** (-t - 1)
    s3 = 2.0 ** (-t - 3)
    lam1 = s1 / (1 - s1)
    lam0 = s3 / (1 + s3)
    dminus = (1 - b) ** 2 / (1 + b)
    dplus = (1 + b) ** 2 / (1 - b)
    rho = b + 2 * b * (1 + b) / (1 - b)
    reach = rho + 2 * lam1 * dplus
    M = int(math.floor((reach / (lam0 * dminus)) ** n))
    K = (reach * 10 / b) ** n
    return M, K


def whitney_neighbors(W, Q0, beta=None, cloud_obj=None):
    """Cubes of ``W`` meeting the cloud of ``Q0`` (node-level test) and their union measure."""
    beta = parse_ratio(beta if beta is not None else W.beta)
    dom = W.domain
    params = FamilyParams(beta)
    if not in_family(Q0, params, dom):
        raise CoveringError("Q0 must belong to F_beta")
    if in_family(Q0.dilate(10), params, dom):
        raise CoveringError("10 Q0 belongs to F_beta; this is the other case of the CZ selection")
    cl = cloud_obj or cloud(dom, Q0, beta)
    ids = np.unique(W.owner[cl.region])
    ids = ids[ids >= 0]
    meas = sum((Fraction(2 * W.half[i]) ** dom.n for i in ids), Fraction(0))
    return Neighbors(ids, int(len(ids)), meas, float(meas / Q0.volume), cl)


# -- Besicovitch --------------------------------------------------------------------

BESICOVITCH_BOUND = {1: 2, 2: 4, 3: 8}
"""Overlap bound ``2**n`` of the greedy selection below.

Cubes are taken largest first and a cube is kept only if its centre is not
covered yet.  Around any point ``y`` two kept centres in a common closed
orthant would put the later centre inside the earlier (larger) cube, so at
most one kept cube per orthant contains ``y``.
"""


def besicovitch_select(points, radii, domain=None):
    """Greedy largest-first selection; returns the indices of the kept cubes."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    rad = np.asarray(radii, dtype=float)
    if len(pts) != len(rad):
        raise ValueError("points and radii must have the same length")
    if np.any(rad <= 0):
        raise ValueError("radii must be positive")
    if domain is not None and np.any(domain.distance(pts) <= 0):
        raise DomainError("all centres must lie in the domain")
    order = np.argsort(-rad, kind="stable")
    chosen = []
    sel_c = np.empty((0, pts.shape[1]))
    sel_r = np.empty(0)
    for i in order:
        if len(chosen) and np.any(np.max(np.abs(sel_c - pts[i]), axis=1) <= sel_r):
            continue
        chosen.append(int(i))
        sel_c = np.vstack([sel_c, pts[i]])
        sel_r = np.append(sel_r, rad[i])
    return np.array(chosen, dtype=np.int64)


def besicovitch_overlap(centers, radii, probes):
    """Per-probe count of closed cubes containing it."""
    c = np.asarray(centers, dtype=float)
    r = np.asarray(radii, dtype=float)
    p = np.atleast_2d(np.asarray(probes, dtype=float))
    out = np.zeros(len(p), dtype=np.int64)
    for start in range(0, len(p), 4096):
        blk = p[start : start + 4096]
        inside = np.max(np.abs(blk[:, None, :] - c[None, :, :]), axis=2) <= r[None, :]
        out[start : start + 4096] = inside.sum(axis=1)
    return out


# -- Calderon-Zygmund selection -------------------------------------------------------

@dataclass
class CZResult:
    case: str
    cube: Cube
    constant: float
    average: float
    threshold: float
    checks: dict
    kappa: float = float("nan")


def cz_constants(n, beta, t):
    """``(c1, c2)``: ``c1 = 5**n / 24**n`` and the covering-based ``c2``.

    ``c2`` comes from counting the Whitney cubes that meet ``Q`` (volume
    argument) and comparing their size with ``Q`` when ``10 Q`` is not in
    F_beta.
    """
    c1 = Fraction(5**n, 24**n)
    b = float(parse_ratio(beta))
    s1 = 2.0 ** (-t - 1)
    s3 = 2.0 ** (-t - 3)
    lam_max = s1 * (1 + b) / (1 - s1)
    lam_min = s3 * (1 - b) / (1 + s3)
    count = math.ceil(((b + 2 * lam_max) / lam_min) ** n)
    c2 = ((b / 10) / lam_max) ** n / count
    return c1, c2


def cz_select(f, Q, threshold, beta, t, W=None):
    """Selection of a dyadic cube carrying a fixed fraction of a large average.

    ``avg_Q f > threshold`` is required.  If ``10 Q`` is in F_beta a dyadic
    ``P`` with ``Q ⊂ 5P ⊂ 8Q``, ``5P`` in F_beta and ``avg_P f > c1 threshold``
    is returned (case ``"i"``); otherwise a Whitney cube ``R`` meeting ``Q``
    with ``avg_R f > c2 threshold`` (case ``"ii"``).  ``Q`` then sits inside
    the cloud of ``R`` because ``Q`` itself is an F_beta cube meeting ``R``.
    """
    dom = f.domain
    beta = parse_ratio(beta)
    params = FamilyParams(beta)
    threshold = float(threshold)
    if not in_family(Q, params, dom):
        raise CoveringError("Q must belong to F_beta")
    avg_q = f.integrate_exact(Q) / float(Q.volume)
    if not avg_q > threshold:
        raise CoveringError("the average over Q does not exceed the threshold")
    n = dom.n
    c1, c2 = cz_constants(n, beta, t)
    if in_family(Q.dilate(10), params, dom):
        s = Q.side
        k = math.ceil(math.log2(s))
        while Fraction(2) ** k < s:
            k += 1
        while Fraction(2) ** (k - 1) >= s:
            k -= 1
        ps = Fraction(2) ** (k - 1)
        ranges = []
        for lo, hi in zip(Q.lo, Q.hi):
            a = math.floor(lo / ps)
            b = math.ceil(hi / ps)
            ranges.append(range(a, b))
        best = None
        for corner in np.ndindex(*[len(r) for r in ranges]):
            cidx = [ranges[i][c] for i, c in enumerate(corner)]
            P = Cube(tuple(ps * c + ps / 2 for c in cidx), ps / 2)
            if not P.intersects(Q, interior=True):
                continue
            mass = f.integrate_exact(P)
            if best is None or mass > best[0]:
                best = (mass, P)
        mass, P = best
        avg_p = mass / float(P.volume)
        checks = {
            "Q_in_5P": P.dilate(5).contains(Q),
            "5P_in_8Q": Q.dilate(8).contains(P.dilate(5)),
            "5P_in_family": in_family(P.dilate(5), params, dom),
            "dyadic": P.is_dyadic_cube(),
            "average": avg_p > float(c1) * threshold,
        }
        return CZResult("i", P, float(c1), avg_p, threshold, checks)
    if W is None:
        W = whitney_cubes_near(dom, beta, t, [float(v) for v in Q.lo], [float(v) for v in Q.hi])
    qlo = np.array([float(v) for v in Q.lo])
    qhi = np.array([float(v) for v in Q.hi])
    meets = np.all((W.lo < qhi) & (W.hi > qlo), axis=1)
    ids = np.nonzero(meets)[0]
    if not len(ids):
        raise CoveringError("no Whitney cube meets Q")
    masses = [f.integrate_exact(W.cube(i)) for i in ids]
    j = int(np.argmax(masses))
    R = W.cube(int(ids[j]))
    avg_r = masses[j] / float(R.volume)
    covered = sum((_overlap_volume(W.cube(int(i)), Q) for i in ids), Fraction(0))
    checks = {
        "Q_covered": covered == Q.volume,
        "R_meets_Q": R.intersects(Q),
        "Q_in_cloud_of_R": in_family(Q, params, dom) and R.intersects(Q),
        "R_in_family": in_family(R, params, dom),
        "average": avg_r > c2 * threshold,
    }
    kappa = float(Q.volume) / (len(ids) * float(max(W.cube(int(i)).volume for i in ids)))
    return CZResult("ii", R, c2, avg_r, threshold, checks, kappa)


def _overlap_volume(A, B):
    v = Fraction(1)
    for alo, ahi, blo, bhi in zip(A.lo, A.hi, B.lo, B.hi):
        w = min(ahi, bhi) - max(alo, blo)
        if w <= 0:
            return Fraction(0)
        v *= w
    return v


# -- bounded overlap of clouds ----------------------------------------------------------

def overlap_bound(beta, c1, c2, n):
    """Bound on how many clouds of a disjoint Whitney-type family share a point."""
    b = float(parse_ratio(beta))
    c1, c2 = float(c1), float(c2)
    lmax = c2 * (1 + b) / ((1 - b) * (1 - c2))
    lmin = c1 * (1 - b) / ((1 + c1) * (1 + b))
    reach = 2 * lmax + 2 * b / (1 - b)
    return int(math.floor((reach / lmin) ** n))


def cloud_overlap_check(domain, cubes, beta, resolution=1):
    """Largest number of clouds (of a disjoint family) covering one node.

    Returns ``(max_count, bound, (c1, c2))`` with the Whitney-type constants
    measured from the family.
    """
    beta = parse_ratio(beta)
    for i in range(len(cubes)):
        for j in range(i + 1, len(cubes)):
            if cubes[i].intersects(cubes[j], interior=True):
                raise CoveringError(f"cubes {i} and {j} overlap")
    ratios = [float(Q.half / domain.distance_exact(Q.center)) for Q in cubes]
    c1, c2 = min(ratios), max(ratios)
    total = np.zeros(domain.shape, dtype=np.int64)
    for Q in cubes:
        total += cloud(domain, Q, beta, resolution=resolution).region
    return int(total.max()), overlap_bound(beta, c1, c2, domain.n), (c1, c2)
