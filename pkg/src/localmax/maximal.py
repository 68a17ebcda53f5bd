"""Local maximal operators on grid fields.

Candidate cubes are centred at grid nodes and made of ``2m + 1`` whole cells
per axis, i.e. ``Q(x_i, (m + 1/2) h)``, kept inside the bounding box.  Every
average is read off the summed-area table, so a candidate costs ``2**n``
lookups; the uncentred operator takes, for each ``m``, a separable sliding
window maximum (with argmax) of the per-centre averages.
"""
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .dyadic import parse_ratio
from .geometry import family_mask

__all__ = [
    "MODES",
    "MaximalRequest",
    "MaximalResult",
    "DegenerateDomainError",
    "candidate_radii",
    "candidate_mask",
    "cube_averages",
    "evaluate",
    "maximal",
    "pointwise_compare",
    "lp_norm",
]

MODES = ("uncentered", "centered", "truncated", "weighted", "fractional")


class DegenerateDomainError(ValueError):
    """No node admits a single candidate cube."""


@dataclass
class MaximalRequest:
    """What to evaluate.  ``lattice`` is ``"dyadic"``, ``"dense"`` or an explicit list of ``m``."""

    field: object
    beta: Fraction
    mode: str = "uncentered"
    sigma: object = None
    alpha_frac: float = 0.0
    lattice: object = "dyadic"
    eps_strict: float = 0.0
    points: object = None

    def __post_init__(self):
        self.beta = parse_ratio(self.beta)
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "weighted" and self.sigma is None:
            raise ValueError("weighted mode needs sigma")
        if self.mode == "fractional" and not 0 <= self.alpha_frac < self.field.n:
            raise ValueError("fractional order must satisfy 0 <= alpha < n")


@dataclass
class MaximalResult:
    values: np.ndarray
    witness_center: np.ndarray
    witness_m: np.ndarray
    flagged: np.ndarray
    n_candidates: int
    radii: tuple
    request: MaximalRequest = dc_field(repr=False, default=None)

    def at(self, points):
        idx = tuple(np.asarray(points).T)
        return self.values[idx]

    def witness_values(self):
        """Averages recomputed over the stored witnesses (0 at flagged nodes)."""
        req = self.request
        ok = ~self.flagged
        out = np.zeros_like(self.values)
        centers = self.witness_center[ok]
        m = self.witness_m[ok]
        out[ok] = _averages_at(req, centers, m)
        return out

    def summary(self):
        return {
            "mode": self.request.mode if self.request else None,
            "nodes": int(self.values.size),
            "flagged": int(self.flagged.sum()),
            "candidates": int(self.n_candidates),
            "radii": [int(m) for m in self.radii],
            "max": float(self.values.max()),
        }


def candidate_radii(domain, beta, lattice="dyadic"):
    """Cell radii ``m`` of the candidate lattice (half side ``(m + 1/2) h``)."""
    beta = parse_ratio(beta)
    dmax = float(domain.node_distance.max())
    span = (min(domain.shape) - 1) // 2
    m_cap = 0
    while m_cap + 1 <= span and family_mask((m_cap + 1.5) * domain.hf, dmax, beta):
        m_cap += 1
    if isinstance(lattice, str):
        if lattice == "dense":
            return tuple(range(m_cap + 1))
        if lattice == "dyadic":
            ms = [0]
            k = 1
            while k <= m_cap:
                ms.append(k)
                k *= 2
            return tuple(ms)
        raise ValueError(f"unknown lattice {lattice!r}")
    return tuple(sorted({int(m) for m in lattice}))


def candidate_mask(domain, beta, m, truncated=False, eps=0.0):
    """Nodes whose cube of ``2m + 1`` cells fits in the box and lies in F_beta.

    With ``truncated`` only cubes of F_beta outside F_{beta/4} are kept.
    """
    beta = parse_ratio(beta)
    half = (m + 0.5) * domain.hf
    d = domain.node_distance
    ok = domain.interior & family_mask(half, d, beta, eps)
    if truncated:
        ok &= ~family_mask(half, d, beta / 4, eps)
    for ax, s in enumerate(domain.shape):
        idx = np.arange(s)
        fit = (idx >= m) & (idx < s - m)
        shape = [1] * domain.n
        shape[ax] = s
        ok &= fit.reshape(shape)
    return ok


def _sums(fld, centers, m):
    a = centers - m
    b = centers + m + 1
    return fld.box_sums(a, b)


def _averages_at(req, centers, m):
    """Mode-specific cube averages for node centres ``(..., n)`` and radii ``(...)``."""
    m = np.asarray(m)
    mm = m[..., None]
    fld = req.field
    n = fld.n
    if req.mode == "weighted":
        num = _sums(req.field * req.sigma, centers, mm)
        den = _sums(req.sigma, centers, mm)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(den > 0, num / np.where(den > 0, den, 1.0), -np.inf)
    s = _sums(fld, centers, mm)
    count = (2 * m + 1.0) ** n
    if req.mode == "fractional":
        vol = count * fld.domain.cell_volume
        return vol ** (req.alpha_frac / n - 1.0) * s * fld.domain.cell_volume
    return s / count


def cube_averages(req, m):
    """Averages of every node-centred candidate of radius ``m`` (``-inf`` where inadmissible)."""
    dom = req.field.domain
    ok = candidate_mask(dom, req.beta, m, truncated=req.mode == "truncated", eps=req.eps_strict)
    centers = np.indices(dom.shape).reshape(dom.n, -1).T.reshape(*dom.shape, dom.n)
    safe = np.clip(centers, m, np.array(dom.shape) - m - 1)
    vals = _averages_at(req, safe, np.full(dom.shape, m))
    return np.where(ok, vals, -np.inf), ok


def _window_max(A, m):
    """Sliding max over the sup-norm ball of radius ``m`` with argmax offsets.

    Ties go to the first offset in lexicographic order.
    """
    n = A.ndim
    val = A
    offs = np.zeros(A.shape + (n,), dtype=np.int64)
    for ax in range(n):
        pad = [(0, 0)] * n
        pad[ax] = (m, m)
        vpad = np.pad(val, pad, constant_values=-np.inf)
        opad = np.pad(offs, pad + [(0, 0)])
        best = np.full(A.shape, -np.inf)
        boffs = np.zeros_like(offs)
        size = A.shape[ax]
        for o in range(-m, m + 1):
            sl = [slice(None)] * n
            sl[ax] = slice(m + o, m + o + size)
            cand = vpad[tuple(sl)]
            better = cand > best
            best = np.where(better, cand, best)
            co = opad[tuple(sl)].copy()
            co[..., ax] = o
            boffs = np.where(better[..., None], co, boffs)
        val, offs = best, boffs
    return val, offs


def evaluate(req):
    """Evaluate the requested local maximal operator at every node.

    Nodes without an admissible candidate get value 0 and are flagged.
    """
    f = req.field
    dom = f.domain
    if req.mode == "weighted" and req.sigma.domain is not dom:
        raise ValueError("sigma must live on the field's domain")
    radii = candidate_radii(dom, req.beta, req.lattice)
    best = np.full(dom.shape, -np.inf)
    wc = np.zeros(dom.shape + (dom.n,), dtype=np.int64)
    wm = np.zeros(dom.shape, dtype=np.int64)
    grid = np.indices(dom.shape).reshape(dom.n, -1).T.reshape(*dom.shape, dom.n)
    total = 0
    for m in radii:
        A, ok = cube_averages(req, m)
        total += int(ok.sum())
        if not ok.any():
            continue
        if req.mode == "centered":
            val, off = A, np.zeros(dom.shape + (dom.n,), dtype=np.int64)
        else:
            val, off = _window_max(A, m)
        better = val > best
        best = np.where(better, val, best)
        wc = np.where(better[..., None], grid + off, wc)
        wm = np.where(better, m, wm)
    if total == 0:
        raise DegenerateDomainError("no admissible candidate cube anywhere on the grid")
    flagged = ~np.isfinite(best)
    values = np.where(flagged, 0.0, best)
    res = MaximalResult(values, wc, wm, flagged, total, radii, req)
    return res


def maximal(field, beta, mode="uncentered", **kw):
    """Shorthand for ``evaluate(MaximalRequest(field, beta, mode, ...))``."""
    return evaluate(MaximalRequest(field, beta, mode, **kw))


def pointwise_compare(f, alpha, lattice="dense"):
    """Compare ``M_alpha f`` with ``2**n M^c_gamma f`` for ``gamma = 2 alpha / (1 - alpha)``.

    Returns ``(lhs, rhs, violation, gamma)`` where ``violation`` is the
    largest ``lhs - rhs`` over nodes with an admissible cube whose
    ``gamma``-neighbourhood is not clipped by the box.
    """
    alpha = parse_ratio(alpha)
    if not 0 < alpha < Fraction(1, 4):
        raise ValueError("alpha must lie in (0, 1/4)")
    gamma = 2 * alpha / (1 - alpha)
    lhs = maximal(f, alpha, "uncentered", lattice=lattice)
    rhs = maximal(f, gamma, "centered", lattice=lattice)
    scale = 2.0**f.n
    region = f.domain.unclipped_nodes(gamma) & ~lhs.flagged
    diff = lhs.values - scale * rhs.values
    violation = float(diff[region].max()) if region.any() else -np.inf
    return lhs, rhs, violation, gamma


def lp_norm(g, weight=None, r=1.0, domain=None, region=None):
    """``(sum g**r w h**n) ** (1/r)`` over the grid (optionally a node subset)."""
    if r < 1:
        raise ValueError("exponent must be >= 1")
    vals = g.values if hasattr(g, "values") else np.asarray(g, dtype=float)
    dom = domain or getattr(g, "domain", None) or getattr(weight, "domain", None)
    w = 1.0 if weight is None else (weight.values if hasattr(weight, "values") else np.asarray(weight))
    if np.shape(w) not in ((), vals.shape):
        raise ValueError("weight shape mismatch")
    terms = np.abs(vals) ** r * w
    if region is not None:
        terms = terms[region]
    return float((terms.sum() * dom.cell_volume) ** (1.0 / r))
