"""Monte Carlo estimators and exact-oracle scenario drivers.

Every estimator is a deterministic function of (spec, seed, parameters) and
reports its replica count, standard error, window size and horizon alongside
the point estimate, so any number in a report can be regenerated.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import functionals, graphical, oracle
from .rates import ModelSpec, dominating_rates, preset


@dataclass
class EstimateReport:
    scenario: str
    params: dict
    estimate: float
    stderr: float
    replicas: int
    seed: int
    window: object = None
    horizon: float = None
    runtime_ms: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "scenario": self.scenario,
            "params": self.params,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "replicas": self.replicas,
            "seed": self.seed,
            "window": self.window,
            "horizon": self.horizon,
            "runtime_ms": self.runtime_ms,
            "extra": self.extra,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _mean_se(values):
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return mean, se


def sample_ordered_triples(rng, replicas, n):
    """Per-site uniform draw over the four ordered columns (0,0,0) .. (1,1,1):
    returns (lower, middle, upper) bit arrays of shape (replicas, n)."""
    col = rng.integers(0, 4, size=(replicas, n))
    lower = (col == 3).astype(np.int8)
    middle = (col >= 2).astype(np.int8)
    upper = (col >= 1).astype(np.int8)
    return lower, middle, upper


def sample_ordered_quadruples(rng, replicas, n):
    """Random (lower, mid1, mid2, upper) with both middles wedged between the
    outer layers but mutually unordered."""
    p = rng.random((replicas, n))
    lower = (p < 0.25).astype(np.int8)
    upper = (p < 0.75).astype(np.int8)
    mid1 = lower | ((rng.random((replicas, n)) < 0.5) & (upper == 1))
    mid2 = lower | ((rng.random((replicas, n)) < 0.5) & (upper == 1))
    return lower, mid1.astype(np.int8), mid2.astype(np.int8), upper


def _window_sites(spec, k):
    """2k+1 contiguous sites recentred on the middle of the window."""
    n = spec.size
    if 2 * k + 1 > n:
        raise ValueError("window half-width %d does not fit in %d sites" % (k, n))
    center = n // 2
    return [(center + d) % n for d in range(-k, k + 1)]


def estimate_coalescence(spec: ModelSpec, beta0, k, t, replicas, seed) -> EstimateReport:
    """Probability that the all-zeros and all-ones spin starts, coupled through
    shared marks over the same background, agree on the recentred window
    [-k, k] at time t."""
    start = time.perf_counter()
    if isinstance(beta0, str):
        beta0 = spec.env_config(beta0)
    lo = spec.spin_config((0,) * spec.size)
    hi = spec.spin_config((1,) * spec.size)
    sites = _window_sites(spec, k)
    result = graphical.batch_evolve(spec, beta0, [lo, hi], [float(t)], replicas, seed)
    low_arr, high_arr = result.layers[-1]
    agree = (low_arr[:, sites] == high_arr[:, sites]).all(axis=1)
    mean, se = _mean_se(agree)
    extra = {}
    if spec.size <= 6:
        # at oracle scale, report the exact long-time gap between the extreme
        # starts next to the agreement estimate; the estimate itself never
        # claims anything about that gap
        limits = oracle.limit_distributions(oracle.build_generator(spec))
        extra["oracle_tv_lower_upper"] = limits.tv_distance
        extra["oracle_limits_converged"] = limits.converged
    return EstimateReport(
        scenario="coalescence",
        params={"beta0": beta0.to_literal(), "k": k, "t": t},
        estimate=mean,
        stderr=se,
        replicas=replicas,
        seed=int(seed),
        window=2 * k + 1,
        horizon=float(t),
        runtime_ms=(time.perf_counter() - start) * 1e3,
        extra=extra,
    )


def density_curves(spec: ModelSpec, t_grid, replicas, seed) -> EstimateReport:
    """Mean spin density along t_grid from the two extreme joint starts
    (background and spin all zeros vs all ones), monotonically coupled.  The
    lower pair is asserted to stay below the upper pair pathwise."""
    start = time.perf_counter()
    grid = [float(t) for t in t_grid]
    _, snaps, _ = graphical.batch_envelope(spec, grid, replicas, seed)
    dens0, dens1, se0, se1 = [], [], [], []
    for _, low_arr, _, high_arr in snaps:
        if (low_arr > high_arr).any():
            raise graphical.OrderViolationError("density layers crossed")
        m0, s0 = _mean_se(low_arr.mean(axis=1))
        m1, s1 = _mean_se(high_arr.mean(axis=1))
        dens0.append(m0)
        dens1.append(m1)
        se0.append(s0)
        se1.append(s1)
    gap = [b - a for a, b in zip(dens0, dens1)]
    return EstimateReport(
        scenario="density",
        params={"t_grid": grid},
        estimate=gap[-1] if gap else 1.0,
        stderr=max(se0[-1], se1[-1]) if se0 else 0.0,
        replicas=replicas,
        seed=int(seed),
        window=spec.size,
        horizon=grid[-1] if grid else 0.0,
        runtime_ms=(time.perf_counter() - start) * 1e3,
        extra={
            "t": grid,
            "density_from_zero": dens0,
            "density_from_one": dens1,
            "gap": gap,
            "se_from_zero": se0,
            "se_from_one": se1,
        },
    )


def density_csv_text(report: EstimateReport) -> str:
    rows = ["t,density_from_zero,density_from_one,gap"]
    e = report.extra
    for t, a, b, g in zip(e["t"], e["density_from_zero"], e["density_from_one"], e["gap"]):
        rows.append("%r,%r,%r,%r" % (t, a, b, g))
    return "\n".join(rows) + "\n"


def run_decay_csv_text(report: EstimateReport) -> str:
    """Per-window rows (m, n, mean run count, interior-run histogram) from a
    run-length decay report; histogram entries are "length:mean" pairs."""
    rows = ["m,n,f,g_histogram"]
    for row in report.extra["rows"]:
        hist = ";".join("%d:%r" % (l, v) for l, v in row["mean_interior_runs"].items())
        rows.append("%d,%d,%r,%s" % (row["m"], row["n"], row["mean_runs"], hist))
    return "\n".join(rows) + "\n"


def _random_coupled_run(spec, t_grid, replicas, seed, n_layers=3):
    """Coupled layers from per-replica random ordered starts over a random
    background; returns the batch result and the rng used."""
    rng = np.random.default_rng(seed)
    beta_bits = rng.integers(0, 2, size=(replicas, spec.size)).astype(np.int8)
    if n_layers == 3:
        layers = sample_ordered_triples(rng, replicas, spec.size)
    elif n_layers == 4:
        layers = sample_ordered_quadruples(rng, replicas, spec.size)
    else:
        raise ValueError("n_layers must be 3 or 4")
    sim_seed = int(rng.integers(0, 2**63 - 1))
    result = graphical.batch_evolve(
        spec,
        (beta_bits, spec.env_boundary),
        [(arr, spec.spin_boundary) for arr in layers],
        t_grid,
        replicas,
        sim_seed,
    )
    return result


def run_length_decay(spec: ModelSpec, windows, t, replicas, seed, initial=None) -> EstimateReport:
    """Normalized expected run count E[runs]/(n-m) over growing windows at a
    late time, from coupled three-layer samples."""
    start = time.perf_counter()
    if initial is None:
        result = _random_coupled_run(spec, [float(t)], replicas, seed)
    else:
        beta0, layers = initial
        result = graphical.batch_evolve(spec, beta0, list(layers), [float(t)], replicas, seed)
    low_arr, mid_arr, up_arr = result.layers[-1]
    rows = []
    for m, n in windows:
        vals = np.empty(replicas)
        hist_sums = {}
        for r in range(replicas):
            vals[r] = functionals.interval_run_count(low_arr[r], mid_arr[r], up_arr[r], m, n)
            for l, c in functionals.interior_run_histogram(
                low_arr[r], mid_arr[r], up_arr[r], m, n
            ).items():
                hist_sums[l] = hist_sums.get(l, 0) + c
        mean, se = _mean_se(vals)
        width = n - m if n > m else 1
        rows.append(
            {
                "m": m,
                "n": n,
                "mean_runs": mean,
                "se": se,
                "normalized": mean / width,
                "mean_interior_runs": {l: c / replicas for l, c in sorted(hist_sums.items())},
            }
        )
    return EstimateReport(
        scenario="run-decay",
        params={"windows": [list(w) for w in windows], "t": t},
        estimate=rows[-1]["normalized"] if rows else 0.0,
        stderr=rows[-1]["se"] / max(1, windows[-1][1] - windows[-1][0]) if rows else 0.0,
        replicas=replicas,
        seed=int(seed),
        window=spec.size,
        horizon=float(t),
        runtime_ms=(time.perf_counter() - start) * 1e3,
        extra={"rows": rows},
    )


def interval_inequality_check(spec: ModelSpec, t, replicas, seed, m, n, l=1) -> EstimateReport:
    """Estimate both sides of the stationary run-count inequalities from
    late-time coupled samples.

    With C and K the derived constants, near-stationary samples must satisfy
    C*E[interior runs of length 1 on [m,n]] <= K*E[runs(m-1,n) + runs(m,n+1)
    - 2*runs(m,n)] and C*E[runs of length l+1] <= 12*K*l*E[runs of length l].
    Each inequality is reported as held when the estimated slack is above
    -3 standard errors; a larger violation flags insufficient burn-in or an
    implementation bug."""
    start = time.perf_counter()
    if not (0 < m <= n < spec.size - 1):
        raise ValueError("need 0 < m <= n < size-1 so both window extensions exist")
    result = _random_coupled_run(spec, [float(t)], replicas, seed)
    low_arr, mid_arr, up_arr = result.layers[-1]
    consts = dominating_rates(spec)
    C, K = consts.C, consts.K

    slack_d = np.empty(replicas)
    slack_e = np.empty(replicas)
    g_first = np.empty(replicas)
    curvature = np.empty(replicas)
    for r in range(replicas):
        lo, mi, up = low_arr[r], mid_arr[r], up_arr[r]
        hist = functionals.interior_run_histogram(lo, mi, up, m, n)
        f_mn = functionals.interval_run_count(lo, mi, up, m, n)
        f_left = functionals.interval_run_count(lo, mi, up, m - 1, n)
        f_right = functionals.interval_run_count(lo, mi, up, m, n + 1)
        g1 = hist.get(1, 0)
        g_l = hist.get(l, 0)
        g_l1 = hist.get(l + 1, 0)
        g_first[r] = g1
        curvature[r] = f_left + f_right - 2 * f_mn
        slack_d[r] = K * (f_left + f_right - 2 * f_mn) - C * g1
        slack_e[r] = 12.0 * K * l * g_l - C * g_l1

    mean_d, se_d = _mean_se(slack_d)
    mean_e, se_e = _mean_se(slack_e)
    mean_g1, se_g1 = _mean_se(g_first)
    mean_curv, se_curv = _mean_se(curvature)
    holds_d = mean_d >= -3.0 * se_d
    holds_e = mean_e >= -3.0 * se_e
    return EstimateReport(
        scenario="interval-bounds",
        params={"t": t, "m": m, "n": n, "l": l, "C": C, "K": K},
        estimate=mean_d,
        stderr=se_d,
        replicas=replicas,
        seed=int(seed),
        window=n - m + 1,
        horizon=float(t),
        runtime_ms=(time.perf_counter() - start) * 1e3,
        extra={
            "lhs_d": C * mean_g1,
            "rhs_d": K * mean_curv,
            "slack_d_mean": mean_d,
            "slack_d_se": se_d,
            "holds_d_within_3sigma": bool(holds_d),
            "slack_e_mean": mean_e,
            "slack_e_se": se_e,
            "holds_e_within_3sigma": bool(holds_e),
            "mean_interior_singletons": mean_g1,
            "mean_curvature": mean_curv,
        },
    )


@dataclass
class BurnIn:
    t_calibrated: float
    t_burn: float
    cal_sites: int
    tv_tol: float


def calibrate_burn_in(spec: ModelSpec, cal_sites=4, tv_tol=1e-3, t0=1.0, max_doublings=24) -> BurnIn:
    """Pick a burn-in horizon from the exact oracle on a small window.

    The same tables are run on `cal_sites` periodic sites; the smallest time
    (doubling bracket, then two bisection steps) at which the all-ones start
    is within `tv_tol` of its limit is stretched by 1 + log(size/cal_sites)
    as a heuristic for the real window.  The heuristic is reported, never
    claimed exact.
    """
    small = ModelSpec(spec.spin, spec.env, cal_sites)
    G = oracle.build_generator(small)
    limits = oracle.limit_distributions(G)
    target = limits.upper
    start = G.point_mass(G.dim - 1)

    def mixed(t):
        res = oracle.semigroup_apply(G, start, t)
        return oracle.total_variation(res.dist, target) < tv_tol

    t = t0
    for _ in range(max_doublings):
        if mixed(t):
            break
        t *= 2.0
    lo, hi = t / 2.0, t
    for _ in range(2):
        mid = 0.5 * (lo + hi)
        if mixed(mid):
            hi = mid
        else:
            lo = mid
    stretch = 1.0 + max(0.0, math.log(spec.size / cal_sites))
    return BurnIn(t_calibrated=hi, t_burn=hi * stretch, cal_sites=cal_sites, tv_tol=tv_tol)


# ---------------------------------------------------------------------------
# remark scenarios (exact-oracle regime)


def scenario_remarks(name, sites=5, spec=None, **params):
    """Structural stationary-set reports for the two counterexample scenarios.

    "iv": background with absorbing all-zeros and all-ones words over contact
    spins; the report lists the closed classes of the joint chain (at least
    two, one per frozen background phase).  "vi": background driven to all
    ones with spin rates vanishing on every one-step profile; each staircase
    is checked to be exactly absorbing (zero generator row).  Finite-window
    caveats are attached to every report.  A prebuilt `spec` overrides the
    preset construction.
    """
    if name == "iv":
        if spec is None:
            spec = preset("remark_iv", sites=sites, **params)
        sites = spec.size
        G = oracle.build_generator(spec)
        S = oracle.stationary_set(G)
        width = 2 * spec.env.range + 1
        frozen_bg_words = [
            w
            for w in ("0" * width, "1" * width)
            if spec.env.rate_word(w) == 0.0
        ]
        classes = [[G.decode(s) for s in comp] for comp in S.closed_classes]
        return {
            "scenario": "remark-iv",
            "sites": sites,
            "frozen_background_words": frozen_bg_words,
            "n_closed_classes": S.dimension,
            "n_extreme_points": S.dimension,
            "closed_classes_decoded": [
                [[format(f, "0%db" % sites) for f in state] for state in comp[:4]]
                for comp in classes
            ],
            "flagged": S.flagged,
            "caveats": [
                "a finite window cannot carry a surviving infinite-volume phase;"
                " only the closed-class structure is checked",
            ],
        }
    if name == "vi":
        if spec is None:
            spec = preset("remark_vi", sites=sites, **params)
        sites = spec.size
        G = oracle.build_generator(spec)
        S = oracle.stationary_set(G)
        beta_all_one = (1 << sites) - 1
        staircases = []
        for a in range(sites + 1):
            bits = [0] * a + [1] * (sites - a)
            eta = G.bits_to_int(bits)
            s = G.encode([beta_all_one, eta])
            staircases.append(
                {
                    "profile": "".join(str(b) for b in bits),
                    "state_index": s,
                    "out_rate": G.out_rate(s),
                    "absorbing": G.out_rate(s) == 0.0,
                }
            )
        return {
            "scenario": "remark-vi",
            "sites": sites,
            "n_closed_classes": S.dimension,
            "n_extreme_points": S.dimension,
            "staircases": staircases,
            "all_staircases_absorbing": all(st["absorbing"] for st in staircases),
            "flagged": S.flagged,
            "caveats": [
                "frozen boundary words stand in for the infinite staircase tails",
            ],
        }
    raise ValueError("unknown scenario %r" % name)
