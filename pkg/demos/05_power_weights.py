"""Power weights: the global constant grows toward the puncture for large exponents,
the local one does not.

Run: python3 demos/05_power_weights.py
"""
from fractions import Fraction as F

from localmax.geometry import punctured_square
from localmax.weights import ExponentPair, apq_constant, box_sample, power_weight_pair

exps = ExponentPair(2, 2)
dom = punctured_square(128)
sample = box_sample(dom, sides=[1, 2, 4, 8, 16, 32, 64], stride=1)
gap = sample.gap_from([0.0, 0.0])
print("alpha  min gap  global   local")
for alpha in (1, 3):
    u, _, sigma, _ = power_weight_pair(dom, alpha, exps)
    for g in (16, 4, 1):
        sub = sample.where(gap >= g * dom.hf)
        glob = apq_constant(u, exps, sub, sigma=sigma).constant
        loc = apq_constant(u, exps, sub, sigma=sigma, beta=F(1, 2)).constant
        print(f"{alpha:5d}  {g:3d} h   {glob:8.3f} {loc:7.3f}")
