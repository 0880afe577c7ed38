import math

import numpy as np
import pytest

from elastic_dqn.errors import ContractViolationError
from elastic_dqn.experiment import overestimation_bound, spearman, welch_t_test


# ------------------------------------------------------------ reference sides

def welch_oracle(a, b):
    """Textbook Welch statistic at high precision plus a two-sided p-value by
    numeric integration of the t density."""
    import mpmath as mp

    mp.mp.dps = 40
    a = [mp.mpf(repr(v)) for v in a]
    b = [mp.mpf(repr(v)) for v in b]
    n1, n2 = len(a), len(b)
    m1 = mp.fsum(a) / n1
    m2 = mp.fsum(b) / n2
    v1 = mp.fsum((x - m1) ** 2 for x in a) / (n1 - 1)
    v2 = mp.fsum((x - m2) ** 2 for x in b) / (n2 - 1)
    se2 = v1 / n1 + v2 / n2
    t = (m1 - m2) / mp.sqrt(se2)
    df = se2**2 / ((v1 / n1) ** 2 / (n1 - 1) + (v2 / n2) ** 2 / (n2 - 1))

    def pdf(x):
        return (
            mp.gamma((df + 1) / 2)
            / (mp.sqrt(df * mp.pi) * mp.gamma(df / 2))
            * (1 + x**2 / df) ** (-(df + 1) / 2)
        )

    tail = mp.quad(pdf, [abs(t), mp.inf])
    return float(t), float(2 * tail)


def spearman_oracle(x, y):
    """Explicit average-tie rank assignment plus the Pearson formula."""

    def ranks(values):
        order = sorted(range(len(values)), key=lambda i: values[i])
        out = [0.0] * len(values)
        i = 0
        while i < len(order):
            j = i
            while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
                j += 1
            avg = (i + j) / 2.0 + 1.0
            for idx in order[i : j + 1]:
                out[idx] = avg
            i = j + 1
        return out

    rx, ry = ranks(list(x)), ranks(list(y))
    n = len(rx)
    mx = sum(rx) / n
    my = sum(ry) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    return cov / math.sqrt(vx * vy)


# -------------------------------------------------------------------- welch t

def test_welch_identical_samples():
    a = [1.0, 2.0, 3.0, 4.0]
    t, p = welch_t_test(a, list(a))
    assert t == 0.0
    assert p == pytest.approx(1.0, abs=1e-12)


def test_welch_textbook_case():
    a = [1.0, 2.0, 3.0, 4.0, 5.0]
    b = [2.0, 3.0, 4.0, 5.0, 6.0]
    t, p = welch_t_test(a, b)
    t_ref, p_ref = welch_oracle(a, b)
    assert abs(t - t_ref) < 1e-10
    assert abs(p - p_ref) < 1e-6


def test_welch_sign_flip_symmetry():
    rng = np.random.default_rng(0)
    a = rng.normal(0, 1, size=12).tolist()
    b = rng.normal(0.7, 2, size=9).tolist()
    t1, p1 = welch_t_test(a, b)
    t2, p2 = welch_t_test(b, a)
    assert t1 == -t2
    assert p1 == p2


def test_welch_random_cases_match_oracle():
    rng = np.random.default_rng(123)
    for _ in range(100):
        n1 = int(rng.integers(2, 30))
        n2 = int(rng.integers(2, 30))
        a = rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 4), size=n1).tolist()
        b = rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 4), size=n2).tolist()
        t, p = welch_t_test(a, b)
        t_ref, p_ref = welch_oracle(a, b)
        assert abs(t - t_ref) < 1e-10
        assert abs(p - p_ref) < 1e-6


def test_welch_matches_scipy():
    from scipy import stats as sps

    rng = np.random.default_rng(5)
    a = rng.normal(size=10)
    b = rng.normal(1.0, 2.0, size=14)
    t, p = welch_t_test(a, b)
    ref = sps.ttest_ind(a, b, equal_var=False)
    assert t == pytest.approx(ref.statistic, abs=1e-12)
    assert p == pytest.approx(ref.pvalue, abs=1e-12)


def test_welch_degenerate_variance_rejected():
    with pytest.raises(ContractViolationError):
        welch_t_test([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(ContractViolationError):
        welch_t_test([1.0], [1.0, 2.0])


# ------------------------------------------------------------------- spearman

def test_spearman_monotone_limits():
    x = [1.0, 2.0, 3.0, 5.0, 9.0]
    assert spearman(x, [v**3 for v in x]) == pytest.approx(1.0, abs=1e-12)
    assert spearman(x, [-v for v in x]) == pytest.approx(-1.0, abs=1e-12)


def test_spearman_tied_data_matches_oracle():
    x = [1.0, 1.0, 2.0, 3.0, 3.0, 3.0, 4.0]
    y = [2.0, 1.0, 1.0, 5.0, 5.0, 4.0, 7.0]
    assert spearman(x, y) == pytest.approx(spearman_oracle(x, y), abs=1e-12)


def test_spearman_random_cases_match_oracle():
    rng = np.random.default_rng(321)
    for _ in range(100):
        n = int(rng.integers(3, 40))
        x = rng.integers(0, 8, size=n).astype(float).tolist()  # ties likely
        y = (rng.integers(0, 8, size=n).astype(float) + rng.normal(size=n) * 0.1).tolist()
        try:
            got = spearman(x, y)
        except ContractViolationError:
            assert len(set(x)) == 1 or len(set(y)) == 1
            continue
        assert got == pytest.approx(spearman_oracle(x, y), abs=1e-12)


def test_spearman_shape_validation():
    with pytest.raises(ContractViolationError):
        spearman([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(ContractViolationError):
        spearman([1.0, 2.0, 3.0], [1.0, 2.0])
    with pytest.raises(ContractViolationError):
        spearman([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


# ----------------------------------------------------------- q-value bound

def test_overestimation_bound_values():
    assert overestimation_bound(0.99) == pytest.approx(100.0, abs=1e-12)
    assert overestimation_bound(0.5) == 2.0
    assert overestimation_bound(0.9) == pytest.approx(10.0, abs=1e-12)
    with pytest.raises(ContractViolationError):
        overestimation_bound(1.0)
    with pytest.raises(ContractViolationError):
        overestimation_bound(0.0)
