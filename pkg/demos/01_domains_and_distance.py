"""Shipped domains and their distance-to-complement fields.

Run: python3 demos/01_domains_and_distance.py
"""
from fractions import Fraction as F

from localmax.geometry import Cube, FamilyParams, box_annulus, half_space_clip, in_family, open_box, punctured_square

for make in (punctured_square, box_annulus, half_space_clip, open_box):
    dom = make(64)
    d = dom.node_distance
    print(f"{dom.kind:16s} grid {dom.shape}  h = {dom.h}  max d = {d.max():.4f}  interior nodes {int(dom.interior.sum())}")

# Membership in the local family is an exact comparison in Fraction arithmetic.
dom = punctured_square(64)
x = (F(3, 8), F(1, 4))
d = dom.distance_exact(x)
fam = FamilyParams(F(1, 2))
for side in (d / 2, d):
    Q = Cube(x, side / 2)
    print(f"cube at {x} with half side {Q.half}: d = {d}, in family: {in_family(Q, fam, dom)}")
