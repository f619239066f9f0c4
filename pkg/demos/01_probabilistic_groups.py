"""
Kruskal-Wallis with uncertain group labels
==========================================

Three subjects whose genotype is only known as a probability vector, then a
larger sample where the labels are certain and the generalized statistic
collapses to the ordinary H test.
"""

# %%
import numpy as np

from probkw import ProbMatrix, gkw_statistic, kruskal_wallis, run_methods

# genotype probabilities for (AA, AB, BB), one row per subject
p = ProbMatrix([
    [0.925, 0.045, 0.030],
    [0.156, 0.102, 0.742],
    [0.375, 0.410, 0.215],
])
y = np.array([3.1, 0.4, 2.2])

res = gkw_statistic(p, y)
print(f"H* = {res.statistic:.4f} on {res.df} df, p = {res.p_value:.4f}")
# every group's summed probability is far below five, so the chi-square
# reference is not trustworthy here and the result says so
for w in res.warnings:
    print("warning:", w, f"(effective size {w.effective_size:.3f})")

# %%
# With one-hot rows the weighted rank-sums are ordinary rank-sums.
rng = np.random.default_rng(0)
groups = rng.integers(0, 3, size=60)
y = rng.normal(size=60) + 0.3 * groups
one_hot = ProbMatrix.one_hot(groups, 3)

print("H* :", gkw_statistic(one_hot, y).statistic)
print("H  :", kruskal_wallis(groups, y).statistic)

# %%
# Blur the labels and compare all tests on the same data.
soft = 0.7 * one_hot.p + 0.3 * rng.dirichlet([1, 1, 1], size=60)
for method, r in run_methods(soft, y).items():
    if isinstance(r, Exception):
        print(f"{method.value:8s} not applicable: {r}")
    else:
        print(f"{method.value:8s} stat={r.statistic:8.4f}  p={r.p_value:.4g}")
