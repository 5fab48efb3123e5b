import numpy as np
import pytest

from envspin import (
    IntervalStats,
    check_window_monotone,
    interior_run_histogram,
    interval_run_count,
    interval_stats,
)

from _support import (
    WORKED_LOWER,
    WORKED_MIDDLE,
    WORKED_UPPER,
    brute_interior_runs,
    brute_run_count,
    random_ordered_triple,
)


def worked():
    return (
        tuple(int(v) for v in WORKED_LOWER),
        tuple(int(v) for v in WORKED_MIDDLE),
        tuple(int(v) for v in WORKED_UPPER),
    )


def test_worked_example_values():
    lo, mid, up = worked()
    assert interval_run_count(lo, mid, up, 0, 10) == 4
    assert interior_run_histogram(lo, mid, up, 0, 10) == {2: 1, 3: 1}


def test_no_disagreement_gives_zero():
    bits = (0, 1, 1, 0, 1)
    assert interval_run_count(bits, bits, bits, 0, 4) == 0
    assert interior_run_histogram(bits, bits, bits, 0, 4) == {}


def test_few_disagreement_sites_no_interior_runs():
    lo = (0, 0, 0)
    up = (1, 1, 0)
    mid = (0, 1, 0)
    assert interior_run_histogram(lo, mid, up, 0, 2) == {}


def test_matches_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(3000):
        n = int(rng.integers(1, 13))
        lo, mid, up = random_ordered_triple(rng, n)
        m = int(rng.integers(0, n))
        k = int(rng.integers(m, n))
        assert interval_run_count(lo, mid, up, m, k) == brute_run_count(lo, mid, up, m, k)
        assert interior_run_histogram(lo, mid, up, m, k) == brute_interior_runs(lo, mid, up, m, k)


def test_unordered_input_rejected():
    with pytest.raises(ValueError):
        interval_run_count((0, 1), (1, 0), (1, 1), 0, 1)
    with pytest.raises(ValueError):
        interval_run_count((0, 0), (0, 0), (1, 1), 1, 0)


def test_window_monotone_examples():
    lo, mid, up = worked()
    assert check_window_monotone(lo, mid, up, 1, 9)
    # shrinking off the left disagreement sites loses runs
    assert interval_run_count(lo, mid, up, 5, 10) < interval_run_count(lo, mid, up, 0, 10)
    bits = (0, 1, 0, 1)
    assert check_window_monotone(bits, bits, bits, 1, 2)


def test_window_monotone_exhaustive_subwindows():
    rng = np.random.default_rng(4)
    for _ in range(300):
        n = int(rng.integers(3, 10))
        lo, mid, up = random_ordered_triple(rng, n)
        for m in range(1, n - 1):
            for k in range(m, n - 1):
                assert check_window_monotone(lo, mid, up, m, k)


def test_one_step_growth_bound():
    # extending the window by one site adds at most one run
    rng = np.random.default_rng(5)
    for _ in range(2000):
        n = int(rng.integers(3, 12))
        lo, mid, up = random_ordered_triple(rng, n)
        m = int(rng.integers(1, n - 1))
        k = int(rng.integers(m, n - 1))
        f = interval_run_count(lo, mid, up, m, k)
        assert interval_run_count(lo, mid, up, m - 1, k) <= f + 1
        assert interval_run_count(lo, mid, up, m, k + 1) <= f + 1


def test_interval_stats_bounds():
    lo, mid, up = worked()
    stats = interval_stats(lo, mid, up, 0, 10)
    assert stats.run_count <= 2 + sum(stats.interior_runs.values())
    assert sum(l * c for l, c in stats.interior_runs.items()) <= stats.n - stats.m + 1
    with pytest.raises(ValueError):
        IntervalStats(0, 3, run_count=9, interior_runs={1: 1})
    with pytest.raises(ValueError):
        IntervalStats(0, 3, run_count=2, interior_runs={5: 1})
