"""Kruskal-Wallis testing when group membership is only known as probabilities.

The main entry point is :func:`gkw_statistic`, which takes an N x k matrix of
membership probabilities and a response vector.  Classical comparators
(hard-call Kruskal-Wallis, linear model, ANOVA and dosage regression), an
exact permutation oracle for small N, a simulation kit, file formats and a
batch scan runner are provided alongside.
"""

from .classic import (
    bg_anova,
    bg_kruskal_wallis,
    bg_linear_model,
    dosage,
    dosage_test,
    hard_call,
    kruskal_wallis,
    one_way_anova,
    ols_slope_test,
)
from .dist import chi2_isf, chi2_sf, f_sf, ks_uniform, make_rng, t_sf2
from .errors import DataError, NumericalError, ProbKWError
from .fileio import parse_phenotype_file, parse_prob_file, read_prob_file, write_prob_file
from .gkw import (
    Method,
    ProbMatrix,
    SmallEffectiveGroup,
    TestResult,
    conditional_moments,
    gkw_statistic,
    gkw_statistics,
    weighted_rank_sums,
)
from .methods import run_methods
from .oracle import enumerate_null, verify_moment_identities
from .ranking import RankedResponse, rank_midrank
from .scan import scan, write_scan
from .simkit import SimConfig, run_cell, run_coverage, run_power, run_type1

__version__ = "0.1.0"

__all__ = [
    "bg_anova",
    "bg_kruskal_wallis",
    "bg_linear_model",
    "dosage",
    "dosage_test",
    "hard_call",
    "kruskal_wallis",
    "one_way_anova",
    "ols_slope_test",
    "Method",
    "ProbMatrix",
    "SmallEffectiveGroup",
    "TestResult",
    "conditional_moments",
    "gkw_statistic",
    "gkw_statistics",
    "weighted_rank_sums",
    "chi2_isf",
    "chi2_sf",
    "f_sf",
    "ks_uniform",
    "make_rng",
    "t_sf2",
    "DataError",
    "NumericalError",
    "ProbKWError",
    "parse_phenotype_file",
    "parse_prob_file",
    "read_prob_file",
    "write_prob_file",
    "run_methods",
    "enumerate_null",
    "verify_moment_identities",
    "RankedResponse",
    "rank_midrank",
    "scan",
    "write_scan",
    "SimConfig",
    "run_cell",
    "run_coverage",
    "run_power",
    "run_type1",
]
