"""Exponential coordinates, wrapping and the abelian identities on SO(2) x R^2.

    python demos/lie_group_basics.py
"""
import math

import numpy as np

from manifold_kf import SO2, Product, RealN, compose, inverse, wrap_to_pi

G = Product(SO2(), RealN(2))
a = G.exp([math.radians(178), 0.5, -0.1])
b = G.exp([math.radians(-178), 0.7, 0.0])
d = G.log(compose(inverse(a), b))
print("a^-1 b in tangent coordinates:", np.round(d, 6))
print(f"azimuth difference: {math.degrees(d[0]):+.6f} deg (the short way across the seam)")

v = np.array([7.0, 1.0, 2.0])
print("hat(v) block matrix:\n", np.round(G.hat(v), 4))
print("log(exp(v)) wraps the angle only:", np.round(G.log(G.exp(v)), 6), "vs", wrap_to_pi(7.0))
print("Ad(exp(v)) == I:", np.array_equal(G.Ad(G.exp(v)), np.eye(3)))
print("ad(v) == 0:", not G.ad(v).any())
