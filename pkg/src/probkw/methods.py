"""Run any subset of the six tests on one dataset by name."""

from __future__ import annotations

from . import classic
from .errors import DataError, ProbKWError
from .gkw import Method, ProbMatrix, as_prob_matrix, as_ranked, gkw_statistic

ALL_METHODS = tuple(Method)


class NotOneHot(DataError):
    pass


def parse_methods(text: str) -> tuple[Method, ...]:
    """``"gkw,dosage"`` -> ``(Method.GKW, Method.DOSAGE)``; order is preserved."""
    out = []
    for name in text.split(","):
        name = name.strip().lower()
        if not name:
            continue
        try:
            m = Method(name)
        except ValueError:
            raise ValueError(f"unknown method {name!r}; choose from "
                             + ",".join(x.value for x in Method)) from None
        if m not in out:
            out.append(m)
    if not out:
        raise ValueError("no methods selected")
    return tuple(out)


def run_method(method: Method, pm: ProbMatrix, rr, tie_correct: bool = True):
    y = rr.values
    if method is Method.GKW:
        return gkw_statistic(pm, rr, tie_correct=tie_correct)
    if method is Method.KW:
        # plain KW needs known labels
        if not classic.is_one_hot(pm):
            raise NotOneHot("kw requires one-hot (known) group membership")
        return classic.kruskal_wallis(classic.hard_call(pm).calls, rr, k=pm.k,
                                      tie_correct=tie_correct)
    if method is Method.BG_KW:
        return classic.bg_kruskal_wallis(pm, rr, tie_correct=tie_correct)
    if method is Method.BG_LM:
        return classic.bg_linear_model(pm, y)
    if method is Method.BG_ANOVA:
        return classic.bg_anova(pm, y)
    if method is Method.DOSAGE:
        return classic.dosage_test(pm, y)
    raise ValueError(method)


def run_methods(pm, rr, methods=ALL_METHODS, tie_correct: bool = True) -> dict:
    """Map each method to its TestResult, or to the ProbKWError it raised."""
    pm, rr = as_prob_matrix(pm), as_ranked(rr)
    results = {}
    for m in methods:
        try:
            results[m] = run_method(Method(m), pm, rr, tie_correct)
        except ProbKWError as exc:
            results[m] = exc
    return results
