"""Local maximal operators in four modes, and the pointwise comparison between apertures.

Run: python3 demos/02_maximal_operators.py
"""
from fractions import Fraction as F

import numpy as np

from localmax.fields import ScalarField
from localmax.geometry import punctured_square
from localmax.maximal import maximal, pointwise_compare

dom = punctured_square(64)
rng = np.random.default_rng(0)
f = ScalarField(dom, rng.random(dom.shape))
sigma = ScalarField(dom, 0.5 + rng.random(dom.shape))

for mode in ("uncentered", "centered", "truncated", "weighted"):
    kw = {"sigma": sigma} if mode == "weighted" else {}
    res = maximal(f, F(1, 2), mode, **kw)
    print(mode.ljust(11), res.summary())

# A small aperture is controlled by a centred operator with a wider one.
_, _, violation, gamma = pointwise_compare(f, F(1, 5))
print(f"aperture 1/5 vs centred aperture {gamma}: max(lhs - 4 rhs) = {violation:.4f} (must be <= 0)")
