"""Local Calderon-Zygmund selection: one cube, one field, two heights.

Run: python3 demos/04_calderon_zygmund.py
"""
from fractions import Fraction as F

import numpy as np

from localmax.coverings import cz_constants, cz_select, minimal_t
from localmax.fields import ScalarField
from localmax.geometry import Cube, punctured_square

beta = F(1, 2)
t = minimal_t(beta)
dom = punctured_square(64)
f = ScalarField(dom, np.random.default_rng(2).integers(0, 256, dom.shape) / 256)
Q = Cube((F(23, 32), F(13, 32)), F(1, 32))
avg = f.integrate_exact(Q) / float(Q.volume)
c1, c2 = cz_constants(dom.n, beta, t)
print(f"average over Q = {avg:.4f}; c1 = {c1}, c2 = {c2:.3e}")
for frac in (0.5, 0.95):
    res = cz_select(f, Q, avg * frac, beta, t)
    print(f"height {frac:.2f} x avg -> case {res.case}, selected half side {res.cube.half}, checks {res.checks}")
