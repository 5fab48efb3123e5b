"""Run-count functionals of an ordered configuration triple over a window.

Given layers lower <= middle <= upper and an inclusive window [m, n], restrict
attention to the disagreement sites (lower 0, upper 1) inside the window and
read off the middle layer along that subsequence.  `interval_run_count` is the
number of maximal constant runs; `interior_run_histogram` counts runs of each
exact length that are flanked on both sides by further disagreement sites.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .lattice import Configuration


def _bits(layer):
    if isinstance(layer, Configuration):
        return layer.bits
    return tuple(int(v) for v in layer)


def _validated(lower, middle, upper, m, n):
    lo, mid, up = _bits(lower), _bits(middle), _bits(upper)
    if not (len(lo) == len(mid) == len(up)):
        raise ValueError("layers must have equal length")
    if any(a > b for a, b in zip(lo, mid)) or any(a > b for a, b in zip(mid, up)):
        raise ValueError("layers must be ordered lower <= middle <= upper")
    if m > n:
        raise ValueError("window endpoints must satisfy m <= n")
    if m < 0 or n >= len(lo):
        raise ValueError("window [%d, %d] outside the lattice" % (m, n))
    return lo, mid, up


def disagreement_values(lower, middle, upper, m, n):
    """Middle-layer values at the window sites where lower=0 and upper=1."""
    lo, mid, up = _validated(lower, middle, upper, m, n)
    return [mid[x] for x in range(m, n + 1) if lo[x] == 0 and up[x] == 1]


def interval_run_count(lower, middle, upper, m, n) -> int:
    """Number of maximal constant runs of the middle layer along the
    disagreement subsequence of [m, n] (0 when there is no disagreement)."""
    seq = disagreement_values(lower, middle, upper, m, n)
    if not seq:
        return 0
    return 1 + sum(1 for a, b in zip(seq, seq[1:]) if a != b)


def interior_run_histogram(lower, middle, upper, m, n) -> dict:
    """Map length -> number of constant runs of that exact length that have a
    differing disagreement site on both sides.  Runs touching either end of
    the subsequence are not counted."""
    seq = disagreement_values(lower, middle, upper, m, n)
    counts = {}
    k = len(seq)
    start = 0
    while start < k:
        end = start
        while end + 1 < k and seq[end + 1] == seq[start]:
            end += 1
        if start > 0 and end < k - 1:
            length = end - start + 1
            counts[length] = counts.get(length, 0) + 1
        start = end + 1
    return counts


def check_window_monotone(lower, middle, upper, m, n) -> bool:
    """True iff both functionals grow (weakly) when the window is extended one
    site on either side.  The window must be extendable within the lattice."""
    lo, _, _ = _validated(lower, middle, upper, m, n)
    if m - 1 < 0 or n + 1 >= len(lo):
        raise ValueError("window must be extendable by one site on both sides")
    f = interval_run_count(lower, middle, upper, m, n)
    g = interior_run_histogram(lower, middle, upper, m, n)
    for mm, nn in ((m - 1, n), (m, n + 1)):
        if interval_run_count(lower, middle, upper, mm, nn) < f:
            return False
        g_big = interior_run_histogram(lower, middle, upper, mm, nn)
        if any(g_big.get(l, 0) < cnt for l, cnt in g.items()):
            return False
    return True


@dataclass(frozen=True)
class IntervalStats:
    """Both functionals on one window, with their structural bounds enforced:
    run count <= 2 + interior runs, and total interior length <= window size."""

    m: int
    n: int
    run_count: int
    interior_runs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.m > self.n:
            raise ValueError("m must be <= n")
        if self.run_count < 0 or any(v < 0 for v in self.interior_runs.values()):
            raise ValueError("counts must be >= 0")
        if self.run_count > 2 + sum(self.interior_runs.values()):
            raise ValueError("run count exceeds 2 + interior run total")
        if sum(l * c for l, c in self.interior_runs.items()) > self.n - self.m + 1:
            raise ValueError("interior runs cover more sites than the window holds")


def interval_stats(lower, middle, upper, m, n) -> IntervalStats:
    return IntervalStats(
        m,
        n,
        interval_run_count(lower, middle, upper, m, n),
        interior_run_histogram(lower, middle, upper, m, n),
    )
