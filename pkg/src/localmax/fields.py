"""Grid fields with summed-area tables.

A :class:`ScalarField` stores one nonnegative sample per cell (read as the
cell average) and an n-dimensional prefix-sum table, so the integral over any
union of whole cells costs ``2**n`` lookups.
"""
import itertools
import logging

import numpy as np

from .dyadic import to_fraction, parse_ratio
from .geometry import DomainError

__all__ = [
    "SingularWeightError",
    "ScalarField",
    "constant_field",
    "dual_weight",
    "power_weight",
    "power_cell_integrals",
    "snap_cube",
]

log = logging.getLogger(__name__)

DEFAULT_FLOOR = 1e-12


class SingularWeightError(ValueError):
    """A reciprocal power of a weight with zero samples and no floor."""


def snap_cube(domain, Q):
    """Index box ``[a, b)`` of the cells contained in the closed cube ``Q`` (shrink to fit)."""
    a, b = [], []
    for lo, hi, glo, s in zip(Q.lo, Q.hi, domain.lo, domain.shape):
        i0 = -((glo - lo) // domain.h)  # ceil((lo - glo) / h)
        i1 = (hi - glo) // domain.h
        a.append(max(int(i0), 0))
        b.append(min(int(i1), s))
    return np.array(a), np.array(b)


class ScalarField:
    """Nonnegative cell samples on a domain's grid plus their summed-area table.

    ``singular`` marks cells whose true mass is infinite (e.g. a power weight
    at its centre); their sample is stored as 0 and every integral touching
    them returns ``inf``.
    """

    def __init__(self, domain, values, floor=DEFAULT_FLOOR, singular=None, name=None):
        values = np.array(values, dtype=float)
        if values.shape != domain.shape:
            raise DomainError(f"field shape {values.shape} does not match grid {domain.shape}")
        self.singular = None
        if singular is not None:
            singular = np.asarray(singular, dtype=bool)
            if singular.any():
                self.singular = singular
                values = np.where(singular, 0.0, values)
        if not np.all(np.isfinite(values)):
            raise ValueError("field samples must be finite")
        if np.any(values < 0):
            raise ValueError("field samples must be nonnegative")
        self.domain = domain
        self.values = values
        self.floor = floor
        self.name = name
        self.values.setflags(write=False)

    @property
    def n(self):
        return self.domain.n

    def _table(self, arr):
        t = arr
        for ax in range(arr.ndim):
            t = np.cumsum(t, axis=ax)
        return np.pad(t, [(1, 0)] * arr.ndim)

    @property
    def sat(self):
        if not hasattr(self, "_sat"):
            self._sat = self._table(self.values)
            self._sing = None if self.singular is None else self._table(self.singular.astype(np.int64))
        return self._sat

    def box_sums(self, a, b):
        """Sum of samples over index boxes ``[a, b)``; ``a``, ``b`` int arrays of shape ``(..., n)``."""
        sat = self.sat
        out = _box(sat, a, b)
        if self._sing is not None:
            hits = _box(self._sing, a, b)
            out = np.where(hits > 0, np.inf, out)
        return out

    def integrate_box(self, a, b):
        return self.box_sums(a, b) * self.domain.cell_volume

    def integrate(self, Q):
        """Riemann sum over the cells contained in ``Q`` (clipped to the box)."""
        d = self.domain
        if any(hi <= glo or lo >= ghi for lo, hi, glo, ghi in zip(Q.lo, Q.hi, d.lo, d.hi)):
            raise DomainError("cube lies outside the bounding box")
        a, b = snap_cube(d, Q)
        if np.any(b <= a):
            return 0.0
        return float(self.integrate_box(a, b))

    def integrate_exact(self, Q):
        """Integral of the piecewise-constant field over ``Q`` (partial cells weighted).

        The cumulative integral of a cellwise constant function is the
        multilinear interpolant of the summed-area table, so arbitrary boxes
        (also sub-cell dyadic cubes) are handled exactly.
        """
        d = self.domain
        if any(lo < glo or hi > ghi for lo, hi, glo, ghi in zip(Q.lo, Q.hi, d.lo, d.hi)):
            raise DomainError("cube leaves the bounding box")
        lo = [float((v - g) / d.h) for v, g in zip(Q.lo, d.lo)]
        hi = [float((v - g) / d.h) for v, g in zip(Q.hi, d.lo)]
        sat = self.sat
        if self._sing is not None:
            a = np.floor(lo).astype(int)
            b = np.ceil(hi).astype(int)
            if _box(self._sing, a, b) > 0:
                return np.inf
        total = 0.0
        for corner in itertools.product((0, 1), repeat=self.n):
            pt = [hi[i] if c else lo[i] for i, c in enumerate(corner)]
            sign = (-1) ** (self.n - sum(corner))
            total += sign * _multilinear(sat, pt)
        return total * d.cell_volume

    def total(self):
        if self.singular is not None:
            return np.inf
        return float(self.values.sum() * self.domain.cell_volume)

    def with_values(self, values, name=None):
        return ScalarField(self.domain, values, floor=self.floor, name=name)

    def __mul__(self, other):
        if isinstance(other, ScalarField):
            return ScalarField(self.domain, self.values * other.values, floor=self.floor)
        return ScalarField(self.domain, self.values * float(other), floor=self.floor, singular=self.singular)

    __rmul__ = __mul__

    def __add__(self, other):
        return ScalarField(self.domain, self.values + other.values, floor=self.floor)

    def __repr__(self):
        return f"ScalarField({self.name or 'unnamed'}, shape={self.values.shape})"


def _box(table, a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    n = table.ndim
    out = 0
    for corner in itertools.product((0, 1), repeat=n):
        idx = tuple(b[..., i] if c else a[..., i] for i, c in enumerate(corner))
        sign = (-1) ** (n - sum(corner))
        out = out + sign * table[idx]
    return out


def _multilinear(table, pt):
    """Multilinear interpolation of a vertex table at fractional index ``pt``."""
    base = [min(int(np.floor(p)), table.shape[i] - 2) for i, p in enumerate(pt)]
    frac = [p - b for p, b in zip(pt, base)]
    total = 0.0
    for corner in itertools.product((0, 1), repeat=len(pt)):
        w = 1.0
        for f, c in zip(frac, corner):
            w *= f if c else 1.0 - f
        if w:
            total += w * table[tuple(b + c for b, c in zip(base, corner))]
    return total


def constant_field(domain, c=1.0, name=None):
    return ScalarField(domain, np.full(domain.shape, float(c)), name=name or f"const{c}")


def dual_weight(v, p):
    """``sigma = max(v, floor) ** (-1 / (p - 1))`` nodewise.

    Returns ``(sigma, floored)`` where ``floored`` tells whether any sample
    was raised to the floor.
    """
    p = parse_ratio(p)
    if p <= 1:
        raise ValueError("p must exceed 1")
    vals = v.values
    if v.singular is not None:
        raise SingularWeightError("dual of a weight with singular cells is not defined cellwise")
    floored = bool(np.any(vals < v.floor))
    if v.floor == 0 and np.any(vals == 0):
        raise SingularWeightError("v vanishes somewhere and no floor is set")
    expo = -1.0 / float(p - 1)
    sigma = np.maximum(vals, v.floor) ** expo
    if floored:
        log.info("dual_weight: floor %g applied to %d samples", v.floor, int(np.sum(vals < v.floor)))
    return ScalarField(v.domain, sigma, floor=v.floor, name=f"dual({v.name})"), floored


# -- power weights -------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def power_cell_integrals(lo, hi, alpha, center=None):
    """Exact-to-rounding integrals of ``|x - center|_inf ** alpha`` over boxes.

    ``lo``/``hi`` have shape ``(K, n)``.  The integrand only depends on
    ``r = |x - c|_inf``, so the integral is the Stieltjes integral of
    ``r**alpha`` against ``m(r) = |box ∩ {|x - c|_inf <= r}|``, a product of
    piecewise linear lengths.  Pieces starting at ``r = 0`` are integrated in
    closed form (that is where the singularity lives), the others with
    20-point Gauss-Legendre.  Returns ``inf`` where the integral diverges.
    """
    lo = np.atleast_2d(np.asarray(lo, dtype=float))
    hi = np.atleast_2d(np.asarray(hi, dtype=float))
    K, n = lo.shape
    if center is not None:
        c = np.asarray(center, dtype=float)
        lo, hi = lo - c, hi - c
    alpha = float(alpha)

    def lengths(r):
        # r: (K,) -> (K, n)
        r = r[:, None]
        return np.maximum(np.minimum(hi, r) - np.maximum(lo, -r), 0.0)

    bps = np.concatenate([np.abs(lo), np.abs(hi), np.zeros((K, 1))], axis=1)
    rmax = np.max(np.maximum(np.abs(lo), np.abs(hi)), axis=1)
    bps = np.sort(np.minimum(bps, rmax[:, None]), axis=1)
    out = np.zeros(K)
    for j in range(bps.shape[1] - 1):
        ra, rb = bps[:, j], bps[:, j + 1]
        live = rb > ra
        if not live.any():
            continue
        La, Lb = lengths(ra), lengths(rb)
        width = np.where(live, rb - ra, 1.0)
        slope = (Lb - La) / width[:, None]
        # m(r) = prod_i (La_i + slope_i t), t = r - ra; coefficients in t
        coef = np.zeros((K, n + 1))
        coef[:, 0] = 1.0
        for i in range(n):
            new = np.zeros_like(coef)
            new[:, :] += coef * La[:, i : i + 1]
            new[:, 1:] += coef[:, :-1] * slope[:, i : i + 1]
            coef = new
        dcoef = coef[:, 1:] * np.arange(1, n + 1)  # m'(r) in powers of t
        at_zero = live & (ra == 0)
        away = live & (ra > 0)
        if away.any():
            t = (_GL_X[None, :] + 1) / 2 * width[away, None]
            r = ra[away, None] + t
            poly = np.zeros_like(t)
            for k in range(n - 1, -1, -1):
                poly = poly * t + dcoef[away, k : k + 1]
            out[away] += np.sum(_GL_W[None, :] * r**alpha * poly, axis=1) * width[away] / 2
        if at_zero.any():
            # t == r here; integral of r**(alpha + k) * dcoef_k over [0, rb]
            rbz = rb[at_zero]
            acc = np.zeros(at_zero.sum())
            for k in range(n):
                ck = dcoef[at_zero, k]
                e = alpha + k + 1
                with np.errstate(divide="ignore", invalid="ignore"):
                    term = np.where(ck == 0, 0.0, np.where(e > 0, ck * rbz**e / np.where(e > 0, e, 1.0), np.inf))
                acc += term
            out[at_zero] += acc
    return out


def power_weight(domain, alpha, center=None, floor=DEFAULT_FLOOR):
    """Cell averages of ``|x - center|_inf ** alpha``; divergent cells become singular."""
    c = np.zeros(domain.n) if center is None else np.array([float(to_fraction(v)) for v in center])
    lo = (domain.nodes - domain.hf / 2).reshape(-1, domain.n)
    ints = power_cell_integrals(lo, lo + domain.hf, alpha, c).reshape(domain.shape)
    singular = ~np.isfinite(ints)
    vals = np.where(singular, 0.0, ints) / domain.cell_volume
    return ScalarField(domain, vals, floor=floor, singular=singular if singular.any() else None,
                       name=f"power({alpha})")
