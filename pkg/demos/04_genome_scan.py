"""
A synthetic genome scan
=======================

Write a probability file with a few thousand records and a phenotype file,
scan them with the phenotype shuffled (so every null hypothesis is true),
and check that the p-values look uniform.  The same steps are available
from the command line::

    probkw scan probs.tsv pheno.tsv --permute 1 --workers 4 --out scan.tsv
    probkw qq scan.tsv
"""

# %%
import tempfile
from pathlib import Path

import numpy as np

from probkw import ks_uniform
from probkw.fileio import write_synthetic_scan
from probkw.scan import qq_points, read_scan_pvalues, scan, write_scan

work = Path(tempfile.mkdtemp())
write_synthetic_scan(work / "probs.tsv", work / "pheno.tsv", 3000, 500, seed=3)
print((work / "probs.tsv").read_text()[:200], "...")

# %%
with open(work / "scan.tsv", "w") as fh:
    counts = write_scan(scan(work / "probs.tsv", work / "pheno.tsv", permute=1, workers=2),
                        ["gkw"], fh)
print(counts)

# %%
p = read_scan_pvalues(work / "scan.tsv")
d, ks_p = ks_uniform(p)
print(f"KS against uniform: D = {d:.4f}, p = {ks_p:.3f}")

expected, observed = qq_points(p)
# largest few points of the QQ plot, -log10 scale
print(np.column_stack([expected, observed])[-5:])
