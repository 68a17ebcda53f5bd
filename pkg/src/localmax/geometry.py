"""Domains, the sup-norm distance to the complement, cubes and the family F_beta.

A :class:`Domain` is a proper open set ``Omega`` in R^n (n = 1, 2, 3) together
with a uniform cell grid over a dyadic bounding box.  Grid *nodes* are cell
centres, so node ``i`` sits at ``lo + (i + 1/2) h``.  Cubes ``Q(x, l)`` are
given by centre and *half* side and are closed point sets.

Exact geometry goes through :class:`fractions.Fraction`; the vectorised
paths use float64, which is exact for the dyadic values produced here.
"""
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
import itertools

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .dyadic import to_fraction, parse_ratio, is_dyadic, exact_float, encode

__all__ = [
    "DomainError",
    "Domain",
    "Cube",
    "FamilyParams",
    "distance_to_complement",
    "in_family",
    "family_mask",
    "enumerate_family_cubes",
    "grid_cube",
    "punctured_square",
    "box_annulus",
    "half_space_clip",
    "open_box",
    "mask_domain",
    "rasterize",
    "ANALYTIC_KINDS",
]

ANALYTIC_KINDS = ("punctured-space", "half-space", "open-box", "box-annulus")


class DomainError(ValueError):
    """Raised for points or cubes outside the bounding box, or improper domains."""


def _is_array(*xs):
    return any(isinstance(x, np.ndarray) for x in xs)


def _max(a, b):
    return np.maximum(a, b) if _is_array(a, b) else max(a, b)


def _min(a, b):
    return np.minimum(a, b) if _is_array(a, b) else min(a, b)


def _abs(a):
    return np.abs(a) if _is_array(a) else abs(a)


@dataclass(frozen=True)
class Cube:
    """Closed axis-parallel cube ``{y : |y - center|_inf <= half}``."""

    center: tuple
    half: Fraction

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(to_fraction(c) for c in self.center))
        object.__setattr__(self, "half", to_fraction(self.half))
        if self.half <= 0:
            raise ValueError("half side must be positive")

    @property
    def n(self):
        return len(self.center)

    @property
    def lo(self):
        return tuple(c - self.half for c in self.center)

    @property
    def hi(self):
        return tuple(c + self.half for c in self.center)

    @property
    def side(self):
        return 2 * self.half

    @property
    def volume(self):
        return self.side**self.n

    def dilate(self, factor):
        return Cube(self.center, self.half * to_fraction(factor))

    def contains_point(self, y):
        return all(abs(to_fraction(a) - c) <= self.half for a, c in zip(y, self.center))

    def contains(self, other):
        return all(
            a_lo <= b_lo and b_hi <= a_hi
            for a_lo, a_hi, b_lo, b_hi in zip(self.lo, self.hi, other.lo, other.hi)
        )

    def intersects(self, other, interior=False):
        """Closed intersection, or interior overlap when ``interior`` is set."""
        for c1, c2 in zip(self.center, other.center):
            gap = abs(c1 - c2) - self.half - other.half
            if gap > 0 or (interior and gap == 0):
                return False
        return True

    def distance_to_point(self, y):
        """Sup-norm distance from ``y`` to the cube (0 inside)."""
        return max(max(abs(to_fraction(a) - c) - self.half, Fraction(0)) for a, c in zip(y, self.center))

    def is_dyadic_cube(self):
        """Side a power of two and corners on the matching dyadic lattice."""
        side = self.side
        if side.numerator & (side.numerator - 1) or side.denominator & (side.denominator - 1):
            return False
        if side.numerator != 1 and side.denominator != 1:
            return False
        return all((lo / side).denominator == 1 for lo in self.lo)

    def to_json(self):
        return {"center": [encode(c) for c in self.center], "half": encode(self.half)}

    @classmethod
    def from_json(cls, obj):
        return cls(tuple(to_fraction(c) for c in obj["center"]), to_fraction(obj["half"]))


@dataclass(frozen=True)
class FamilyParams:
    """Parameters of F_beta: ``beta`` in (0, 1) and an optional strictness margin."""

    beta: Fraction
    eps_strict: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "beta", parse_ratio(self.beta))
        object.__setattr__(self, "eps_strict", to_fraction(self.eps_strict))
        if not 0 < self.beta < 1:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if self.eps_strict < 0:
            raise ValueError("eps_strict must be nonnegative")


class Domain:
    """Proper open subset of R^n discretised on a dyadic cell grid.

    ``kind`` is one of ``ANALYTIC_KINDS`` or ``"mask"``.  Analytic shapes keep
    their closed-form distance everywhere (also outside the box, which only
    clips enumeration); mask domains treat everything outside the box as
    complement.
    """

    def __init__(self, n, kind, lo, h, shape, params=None, mask=None):
        if n not in (1, 2, 3):
            raise DomainError("dimension must be 1, 2 or 3")
        self.n = n
        self.kind = kind
        self.lo = tuple(to_fraction(v) for v in lo)
        self.h = to_fraction(h)
        self.shape = tuple(int(s) for s in shape)
        if len(self.lo) != n or len(self.shape) != n:
            raise DomainError("lo/shape do not match the dimension")
        if self.h <= 0 or not is_dyadic(self.h):
            raise DomainError("cell size h must be a positive dyadic rational")
        if not all(is_dyadic(v) for v in self.lo):
            raise DomainError("bounding box corner must be dyadic")
        self.params = dict(params or {})
        self.mask = None
        if kind == "mask":
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != self.shape:
                raise DomainError(f"mask shape {mask.shape} does not match grid {self.shape}")
            self.mask = mask
        elif kind not in ANALYTIC_KINDS:
            raise DomainError(f"unknown domain kind {kind!r}")
        self._normalise_params()
        # for masks the outside of the box is complement, so it is never empty
        if not self.interior.any():
            raise DomainError("domain has no interior node")

    def _normalise_params(self):
        p = self.params
        if self.kind == "punctured-space":
            p["center"] = tuple(to_fraction(v) for v in p.get("center", (0,) * self.n))
        elif self.kind == "half-space":
            p["axis"] = int(p.get("axis", self.n - 1))
            p["offset"] = to_fraction(p.get("offset", 0))
        elif self.kind == "open-box":
            p["lower"] = tuple(to_fraction(v) for v in p["lower"])
            p["upper"] = tuple(to_fraction(v) for v in p["upper"])
        elif self.kind == "box-annulus":
            for key in ("outer_lower", "outer_upper", "inner_lower", "inner_upper"):
                p[key] = tuple(to_fraction(v) for v in p[key])
            if not all(
                ol < il <= iu < ou
                for ol, il, iu, ou in zip(p["outer_lower"], p["inner_lower"], p["inner_upper"], p["outer_upper"])
            ):
                raise DomainError("inner box must sit strictly inside the outer box")

    # -- grid -----------------------------------------------------------
    @property
    def hi(self):
        return tuple(l + s * self.h for l, s in zip(self.lo, self.shape))

    @cached_property
    def hf(self):
        return exact_float(self.h)

    @cached_property
    def lof(self):
        return np.array([exact_float(v) for v in self.lo])

    @cached_property
    def hif(self):
        return np.array([exact_float(v) for v in self.hi])

    @cached_property
    def axes(self):
        """Node coordinates per axis (float)."""
        return tuple(self.lof[i] + (np.arange(s) + 0.5) * self.hf for i, s in enumerate(self.shape))

    @cached_property
    def nodes(self):
        """Array of shape ``(*shape, n)`` with all node coordinates."""
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)

    def node_point(self, idx):
        """Exact coordinates of node ``idx``."""
        return tuple(l + (i + Fraction(1, 2)) * self.h for l, i in zip(self.lo, idx))

    @property
    def cell_volume(self):
        return self.hf**self.n

    # -- distance -------------------------------------------------------
    def _analytic(self, x):
        """Closed-form d_inf(x, complement); ``x`` is a per-axis list (floats/arrays/Fractions)."""
        p = self.params
        zero = 0.0 if _is_array(*x) else Fraction(0)
        if self.kind == "punctured-space":
            d = zero
            for xi, ci in zip(x, p["center"]):
                d = _max(d, _abs(xi - _c(ci, xi)))
            return d
        if self.kind == "half-space":
            a = p["axis"]
            return _max(x[a] - _c(p["offset"], x[a]), zero)
        if self.kind == "open-box":
            return _max(_box_inner_gap(x, p["lower"], p["upper"]), zero)
        # box-annulus
        outer = _max(_box_inner_gap(x, p["outer_lower"], p["outer_upper"]), zero)
        inner = zero
        for xi, a, b in zip(x, p["inner_lower"], p["inner_upper"]):
            inner = _max(inner, _max(_c(a, xi) - xi, xi - _c(b, xi)))
        return _min(outer, inner)

    @cached_property
    def _complement_tree(self):
        padded = np.pad(self.mask, 1, constant_values=False)
        idx = np.argwhere(~padded)
        centers = self.lof + (idx - 1 + 0.5) * self.hf
        return cKDTree(centers)

    def distance(self, points):
        """Vectorised d_inf(x, complement) for ``points`` of shape ``(..., n)``."""
        pts = np.asarray(points, dtype=float)
        if self.kind != "mask":
            return self._analytic([pts[..., i] for i in range(self.n)])
        flat = pts.reshape(-1, self.n)
        dist, _ = self._complement_tree.query(flat, p=np.inf)
        d = np.maximum(dist - self.hf / 2, 0.0)
        box = np.min(np.minimum(flat - self.lof, self.hif - flat), axis=1)
        d = np.maximum(np.minimum(d, box), 0.0)
        return d.reshape(pts.shape[:-1])

    def distance_exact(self, x):
        x = [to_fraction(v) for v in x]
        if self.kind != "mask":
            return self._analytic(x)
        # float path is exact on dyadic input; re-check that claim
        for v in x:
            exact_float(v)
        return Fraction(float(self.distance(np.array([float(v) for v in x]))))

    @cached_property
    def node_distance(self):
        """Distance field at the nodes; Chebyshev transform for masks."""
        if self.kind != "mask":
            return self.distance(self.nodes)
        padded = np.pad(self.mask, 1, constant_values=False)
        k = ndimage.distance_transform_cdt(padded, metric="chessboard")[(slice(1, -1),) * self.n]
        return np.where(self.mask, (k - 0.5) * self.hf, 0.0)

    @cached_property
    def interior(self):
        if self.kind == "mask":
            return self.mask.copy()
        return self.node_distance > 0

    def cube_dmin(self, lo, hi):
        """Vectorised d_inf(closed box [lo, hi], complement); ``lo``/``hi`` shape ``(..., n)``."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        p = self.params
        if self.kind == "punctured-space":
            c = np.array([float(v) for v in p["center"]])
            return np.max(np.maximum(np.maximum(lo - c, c - hi), 0.0), axis=-1)
        if self.kind == "half-space":
            return np.maximum(lo[..., p["axis"]] - float(p["offset"]), 0.0)
        if self.kind == "open-box":
            L = np.array([float(v) for v in p["lower"]])
            U = np.array([float(v) for v in p["upper"]])
            return np.maximum(np.min(np.minimum(lo - L, U - hi), axis=-1), 0.0)
        if self.kind == "box-annulus":
            L = np.array([float(v) for v in p["outer_lower"]])
            U = np.array([float(v) for v in p["outer_upper"]])
            A = np.array([float(v) for v in p["inner_lower"]])
            B = np.array([float(v) for v in p["inner_upper"]])
            outer = np.maximum(np.min(np.minimum(lo - L, U - hi), axis=-1), 0.0)
            inner = np.max(np.maximum(np.maximum(A - hi, lo - B), 0.0), axis=-1)
            return np.minimum(outer, inner)
        center = (lo + hi) / 2
        half = np.max(hi - lo, axis=-1) / 2
        flat = center.reshape(-1, self.n)
        dist, _ = self._complement_tree.query(flat, p=np.inf)
        d = np.maximum(dist.reshape(center.shape[:-1]) - half - self.hf / 2, 0.0)
        box = np.min(np.minimum(lo - self.lof, self.hif - hi), axis=-1)
        return np.maximum(np.minimum(d, box), 0.0)

    def in_box(self, x):
        return all(l <= to_fraction(v) <= u for v, l, u in zip(x, self.lo, self.hi))

    def cube_in_box(self, cube):
        return all(l <= a and b <= u for a, b, l, u in zip(cube.lo, cube.hi, self.lo, self.hi))

    def unclipped_nodes(self, factor):
        """Nodes ``x`` whose cube of half side ``factor * d(x)`` stays in the box.

        For bounded shapes every F_beta cube already lies in the box; for the
        clipped unbounded shapes this marks where the box does not cut the
        operator's cubes.
        """
        r = float(factor) * self.node_distance
        pts = self.nodes
        ok = np.all((pts - r[..., None] >= self.lof) & (pts + r[..., None] <= self.hif), axis=-1)
        return ok & self.interior

    # -- serialisation ---------------------------------------------------
    def to_json(self, mask_path=None):
        obj = {
            "dimension": self.n,
            "kind": self.kind,
            "bbox": {"lo": [encode(v) for v in self.lo], "hi": [encode(v) for v in self.hi]},
            "h": encode(self.h),
        }
        if self.kind == "mask":
            obj["mask_path"] = mask_path
        else:
            obj["params"] = {k: _encode_param(v) for k, v in self.params.items()}
        return obj

    def __repr__(self):
        return f"Domain(n={self.n}, kind={self.kind!r}, shape={self.shape}, h={self.h})"


def _c(value, like):
    """Constant in the arithmetic of ``like`` (float for arrays, Fraction otherwise)."""
    return float(value) if isinstance(like, (np.ndarray, float)) else value


def _box_inner_gap(x, lower, upper):
    g = None
    for xi, a, b in zip(x, lower, upper):
        gi = _min(xi - _c(a, xi), _c(b, xi) - xi)
        g = gi if g is None else _min(g, gi)
    return g


def _encode_param(v):
    if isinstance(v, tuple):
        return [encode(x) for x in v]
    if isinstance(v, Fraction):
        return encode(v)
    return v


# -- family F_beta -------------------------------------------------------------

def distance_to_complement(domain, x):
    """Exact d_inf(x, complement of Omega) for a point of the bounding box."""
    if len(x) != domain.n:
        raise DomainError("point dimension mismatch")
    if not domain.in_box(x):
        raise DomainError(f"point {tuple(map(str, x))} lies outside the bounding box")
    return domain.distance_exact(x)


def in_family(Q, params, domain):
    """``True`` iff ``Q(x, l)`` belongs to F_beta, i.e. ``l + eps < beta d(x)``.

    A centre in the complement simply gives ``False``.
    """
    d = domain.distance_exact(Q.center)
    if d <= 0:
        return False
    return Q.half + params.eps_strict < params.beta * d


def family_mask(half, dist, beta, eps=0):
    """Vectorised strict F_beta test ``half + eps < beta * dist`` (float, exact on dyadics)."""
    beta = parse_ratio(beta)
    num, den = beta.numerator, beta.denominator
    half = np.asarray(half, dtype=float)
    return (half + float(eps)) * den < num * np.asarray(dist, dtype=float)


def grid_cube(domain, corner, side_cells):
    """Exact :class:`Cube` made of ``side_cells`` cells per axis starting at cell ``corner``."""
    h = domain.h
    half = Fraction(side_cells) * h / 2
    center = tuple(l + c * h + half for l, c in zip(domain.lo, corner))
    return Cube(center, half)


def enumerate_family_cubes(domain, params, scales, stride=1, inside_box=True):
    """Yield every lattice cube of F_beta, ordered by scale then centre.

    Centres run over the nodes taken every ``stride`` cells; ``scales`` are
    half sides.  With ``inside_box`` (the default) cubes poking out of the
    bounding box are skipped, which is how unbounded shapes get clipped.
    """
    scales = sorted({to_fraction(s) for s in scales})
    if not scales:
        return
    ranges = [range(0, s, stride) for s in domain.shape]
    for l in scales:
        for idx in itertools.product(*ranges):
            x = domain.node_point(idx)
            Q = Cube(x, l)
            if inside_box and not domain.cube_in_box(Q):
                continue
            if in_family(Q, params, domain):
                yield Q


# -- shipped shapes --------------------------------------------------------------

def _cells_h(extent, cells):
    h = Fraction(extent) / cells
    if not is_dyadic(h):
        raise DomainError("cells must make h a dyadic rational")
    return h


def punctured_square(cells=64, n=2, radius=1):
    """R^n minus the origin, clipped to the box ``[-radius, radius]^n``."""
    r = to_fraction(radius)
    return Domain(n, "punctured-space", (-r,) * n, _cells_h(2 * r, cells), (cells,) * n,
                  params={"center": (0,) * n})


def box_annulus(cells=64, n=2, outer=1, inner=Fraction(1, 4)):
    """Open box ``(-outer, outer)^n`` minus the closed box ``[-inner, inner]^n``."""
    o, i = to_fraction(outer), to_fraction(inner)
    return Domain(n, "box-annulus", (-o,) * n, _cells_h(2 * o, cells), (cells,) * n,
                  params={"outer_lower": (-o,) * n, "outer_upper": (o,) * n,
                          "inner_lower": (-i,) * n, "inner_upper": (i,) * n})


def half_space_clip(cells=64, n=2):
    """``{x_n > 0}`` clipped to ``[-1, 1]^(n-1) x [0, 2]``."""
    lo = (Fraction(-1),) * (n - 1) + (Fraction(0),)
    return Domain(n, "half-space", lo, _cells_h(2, cells), (cells,) * n,
                  params={"axis": n - 1, "offset": 0})


def open_box(cells=64, n=2):
    """Open unit cube ``(0, 1)^n`` with the box as bounding box."""
    return Domain(n, "open-box", (0,) * n, _cells_h(1, cells), (cells,) * n,
                  params={"lower": (0,) * n, "upper": (1,) * n})


def mask_domain(mask, lo, h):
    mask = np.asarray(mask, dtype=bool)
    return Domain(mask.ndim, "mask", lo, h, mask.shape, mask=mask)


def rasterize(domain):
    """Mask domain on the same grid whose cells are the closed cells inside Omega."""
    lo = domain.nodes - domain.hf / 2
    inside = domain.cube_dmin(lo, lo + domain.hf) > 0
    return Domain(domain.n, "mask", domain.lo, domain.h, domain.shape, mask=inside)
