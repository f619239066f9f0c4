"""
Type 1 error, power and hard-call coverage
==========================================

A small version of the simulation study: genotypes under Hardy-Weinberg,
genotype probabilities from a Dirichlet model whose concentration ``a`` sits
on the true genotype, and normal responses.  Increase ``m_null``/``m_alt``
for tighter estimates.
"""

# %%
from probkw import simkit
from probkw.simkit import SimConfig

base = SimConfig(n=1000, m_null=1000, m_alt=500, seed=1)
cells = [base.with_(maf=0.1, a=a) for a in (1.0, 0.9, 0.8, 0.7)]

reports = [simkit.run_cell(c, power=True) for c in cells]
print(simkit.type1_table(reports))
print(simkit.power_table(reports))

# %%
# How often the most probable genotype is the true one.
cov = [simkit.SimReport(c, coverage=simkit.run_coverage(c.with_(maf=0.2))) for c in cells]
print(simkit.coverage_table(cov))

# %%
# Heavy-tailed responses: the rank test keeps its power, the linear model does not.
skewed = base.with_(maf=0.2, model="nonnormal")
rep = simkit.run_cell(skewed, power=True)
print(simkit.power_table([rep]))
