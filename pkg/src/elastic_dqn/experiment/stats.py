"""Statistical analyses used when comparing algorithms across seeds."""

from __future__ import annotations

import numpy as np
from scipy.special import stdtr
from scipy.stats import rankdata

from ..errors import ContractViolationError


def overestimation_bound(gamma: float) -> float:
    """Largest |Q| realizable with rewards in [-1, 1]: 1 / (1 - gamma)."""
    if not 0.0 < gamma < 1.0:
        raise ContractViolationError(f"gamma must be in (0, 1), got {gamma}")
    return 1.0 / (1.0 - gamma)


def welch_t_test(a, b) -> tuple[float, float]:
    """Unequal-variance two-sample t statistic and two-sided p-value.

    Welch-Satterthwaite degrees of freedom; p from the Student-t CDF.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ContractViolationError("each sample needs at least 2 values")
    v1 = a.var(ddof=1)
    v2 = b.var(ddof=1)
    if v1 == 0.0 or v2 == 0.0:
        raise ContractViolationError("degenerate sample variance")
    n1, n2 = a.size, b.size
    se2 = v1 / n1 + v2 / n2
    t = (a.mean() - b.mean()) / np.sqrt(se2)
    df = se2**2 / ((v1 / n1) ** 2 / (n1 - 1) + (v2 / n2) ** 2 / (n2 - 1))
    p = 2.0 * stdtr(df, -abs(t))
    return float(t), float(p)


def spearman(x, y) -> float:
    """Rank correlation with average ranks on ties."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size or x.size < 3:
        raise ContractViolationError("need two equal-length samples of size >= 3")
    rx = rankdata(x)
    ry = rankdata(y)
    if rx.var() == 0.0 or ry.var() == 0.0:
        raise ContractViolationError("constant sample has no rank ordering")
    return float(np.corrcoef(rx, ry)[0, 1])
