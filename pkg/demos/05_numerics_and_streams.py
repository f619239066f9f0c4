"""
Reference distributions and random streams
==========================================

The tail functions are computed in-house from the regularized incomplete
gamma and beta functions.  Random streams are keyed by ``(seed, key...)`` so
any replicate can be regenerated on its own.
"""

# %%
import math

import numpy as np

from probkw import dist

for x in (1.0, 5.991464547107979, 20.0):
    print(f"chi2_sf({x:.3f}, 2) = {dist.chi2_sf(x, 2):.6e}   exp(-x/2) = {math.exp(-x / 2):.6e}")

# F(1, d) is the square of t(d)
print(dist.f_sf(2.5**2, 1, 12), dist.t_sf2(2.5, 12))

# %%
# replicate 17 of stream 2 under master seed 2013, with or without the others
a = dist.make_rng(2013, 2, 17).normal(size=3)
_ = [dist.make_rng(2013, 2, i).normal(size=3) for i in range(17)]
b = dist.make_rng(2013, 2, 17).normal(size=3)
print(np.array_equal(a, b))

# %%
# Dirichlet draws with a tiny concentration stay well defined
x = dist.sample_dirichlet([0.9, 0.05, 0.05], dist.make_rng(0), size=5)
print(np.round(x, 4))
