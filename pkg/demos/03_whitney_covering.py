"""Whitney-type covering, its invariant report, and the neighbours of a family cube.

Run: python3 demos/03_whitney_covering.py
"""
from fractions import Fraction as F

from localmax.coverings import build_whitney, check_whitney, minimal_t, neighbor_bounds, whitney_neighbors
from localmax.geometry import Cube, box_annulus

beta = F(1, 2)
t = minimal_t(beta)
dom = box_annulus(128)
W = build_whitney(dom, beta, t)
print(f"{len(W)} cubes at t = {t}")
print("violations (float route):   ", check_whitney(W, "dyadic"))
print("violations (fraction route):", check_whitney(W, "fraction"))

x = dom.node_point((10, 64))
Q0 = Cube(x, dom.distance_exact(x) / 8)
nb = whitney_neighbors(W, Q0)
M, K = neighbor_bounds(beta, t, dom.n)
print(f"Q0 half side {Q0.half}: {nb.cardinal} neighbours (bound {M}), size ratio {nb.ratio:.2f} (bound {K:.0f})")
