"""Joint ranking of a response vector with mid-ranks for ties."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, NonFiniteValue


@dataclass(frozen=True)
class RankedResponse:
    """Response values together with their mid-ranks.

    Attributes
    ----------
    values : ndarray
        The original responses, in input order.
    ranks : ndarray
        Mid-ranks (1-based); tied values share the mean of the ranks they occupy.
    tie_sum : float
        Sum of ``(t - 1) * t * (t + 1)`` over maximal blocks of ``t`` equal values.
    """

    values: np.ndarray
    ranks: np.ndarray
    tie_sum: float

    @property
    def n(self) -> int:
        return self.ranks.shape[0]

    @property
    def has_ties(self) -> bool:
        return self.tie_sum > 0


def _midranks(x: np.ndarray) -> tuple[np.ndarray, float]:
    n = x.shape[0]
    order = np.argsort(x, kind="stable")
    xs = x[order]
    # block boundaries on exact equality
    new_block = np.empty(n, dtype=bool)
    new_block[0] = True
    np.not_equal(xs[1:], xs[:-1], out=new_block[1:])
    starts = np.flatnonzero(new_block)
    ends = np.append(starts[1:], n)
    sizes = ends - starts
    block_rank = (starts + ends + 1) / 2.0
    ranks = np.empty(n, dtype=float)
    ranks[order] = np.repeat(block_rank, sizes)
    t = sizes[sizes > 1].astype(np.int64)
    tie_sum = float(np.sum((t - 1) * t * (t + 1)))
    return ranks, tie_sum


def rank_midrank(values) -> RankedResponse:
    """Rank all observations together, averaging ranks over ties.

    Ties are detected by exact floating-point equality.

    >>> rank_midrank([5.0, 5.0, 1.0]).ranks
    array([2.5, 2.5, 1. ])
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1:
        x = x.ravel()
    if x.size == 0:
        raise EmptyInput("cannot rank an empty vector")
    bad = ~np.isfinite(x)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise NonFiniteValue(i, x[i])
    ranks, tie_sum = _midranks(x)
    x = x.copy()
    x.flags.writeable = False
    ranks.flags.writeable = False
    return RankedResponse(values=x, ranks=ranks, tie_sum=tie_sum)
