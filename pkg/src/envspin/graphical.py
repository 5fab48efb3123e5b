"""Trajectories built from pre-generated event clocks and uniform marks.

Every site carries two independent Poisson clocks: a background clock of rate
b_bar and a spin clock of rate c_bar (both dominating rates from the tables).
Each clock ring comes with uniform marks, and a deterministic acceptance rule
turns rings into flips:

* background, center 0: flip iff the mark lands in the top b(x, .) of [0, b_bar];
  center 1: flip iff it lands in the bottom b(x, .).
* spin, background bit i: use the mark drawn uniformly on [0, c_bar_i]; at
  center 0 flip iff it lands in the top (c_bar_i/c_bar)*c_i(x, .) of that
  interval, at center 1 iff it lands in the bottom (c_bar_i/c_bar)*c_i(x, .).

Top-anchored up-windows and bottom-anchored down-windows nest across ordered
configurations, so several spin layers evolved from one stream flip together
as much as possible and never cross: this is the maximal monotone coupling.
`window_rates` computes the induced joint flip rates by exact interval
arithmetic; `batch_evolve` runs many replicas of the same rules in lockstep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .lattice import (
    Configuration,
    FrozenWords,
    MutableWindow,
    Periodic,
    initially_ordered_pairs,
    layer_names,
)
from .rates import ModelSpec, SpinRatePair, _centered_sups, dominating_rates


class EventBudgetError(RuntimeError):
    pass


class OrderViolationError(AssertionError):
    pass


_KIND_BG, _KIND_SPIN = 0, 1


def _site_rng(seed, kind, site):
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(kind, site)))


def _clock_times(rng, rate, t_max):
    """Strictly increasing ring times in (0, t_max]; empty when rate is 0."""
    if rate <= 0.0 or t_max <= 0.0:
        return np.empty(0)
    chunk = max(16, int(rate * t_max + 6.0 * math.sqrt(rate * t_max)) + 16)
    pieces = []
    t = 0.0
    while t <= t_max:
        gaps = rng.exponential(1.0 / rate, chunk)
        cum = t + np.cumsum(gaps)
        pieces.append(cum)
        t = cum[-1]
    times = np.concatenate(pieces)
    return times[times <= t_max]


@dataclass
class SiteStream:
    bg_times: np.ndarray
    bg_marks: np.ndarray
    spin_times: np.ndarray
    spin_marks0: np.ndarray
    spin_marks1: np.ndarray


class EventStream:
    """All per-site randomness for one replica up to a horizon.

    Regeneration from the same seed is bit-identical, and each (site, kind)
    substream is derived independently from (seed, kind, site), so enlarging
    the lattice does not perturb existing sites.
    """

    def __init__(self, spec: ModelSpec, seed, t_max, max_events=10_000_000):
        if t_max < 0:
            raise ValueError("t_max must be >= 0")
        self.spec = spec
        self.seed = int(seed)
        self.t_max = float(t_max)
        self.max_events = int(max_events)
        self.consts = dominating_rates(spec)
        self._sites = {}
        self._events_used = 0

    def _charge(self, count):
        self._events_used += count
        if self._events_used > self.max_events:
            raise EventBudgetError(
                "event budget of %d exceeded; lower t_max or raise max_events"
                % self.max_events
            )

    def site(self, x) -> SiteStream:
        cached = self._sites.get(x)
        if cached is not None:
            return cached
        rng_bg = _site_rng(self.seed, _KIND_BG, x)
        bg_times = _clock_times(rng_bg, self.consts.b_bar, self.t_max)
        bg_marks = rng_bg.uniform(0.0, self.consts.b_bar, bg_times.size)
        rng_sp = _site_rng(self.seed, _KIND_SPIN, x)
        spin_times = _clock_times(rng_sp, self.consts.c_bar, self.t_max)
        u0 = rng_sp.uniform(0.0, self.consts.c_bar0, spin_times.size)
        u1 = rng_sp.uniform(0.0, self.consts.c_bar1, spin_times.size)
        self._charge(bg_times.size + spin_times.size)
        stream = SiteStream(bg_times, bg_marks, spin_times, u0, u1)
        self._sites[x] = stream
        return stream


def generate_streams(spec, seed, t_max, max_events=10_000_000) -> EventStream:
    return EventStream(spec, seed, t_max, max_events=max_events)


class Event(NamedTuple):
    time: float
    site: int
    layer: str
    old: int
    new: int


@dataclass
class Trajectory:
    """An initial state, the ordered log of flips, and the final state."""

    initial: dict
    events: list
    final: dict
    t_max: float

    def layer_events(self, layer):
        return [e for e in self.events if e.layer == layer]

    def verify_replay(self):
        """Re-apply the log to the initial state and compare with `final`."""
        work = {name: list(cfg.bits) for name, cfg in self.initial.items()}
        for e in self.events:
            if work[e.layer][e.site] != e.old:
                raise AssertionError("event %r does not match the replayed state" % (e,))
            work[e.layer][e.site] = e.new
        for name, cfg in self.final.items():
            if tuple(work[name]) != cfg.bits:
                raise AssertionError("replay of layer %s does not reach the final state" % name)
        return True

    def to_csv_text(self):
        lines = []
        for name, cfg in self.initial.items():
            lines.append("# initial %s=%s" % (name, cfg.to_literal()))
        for name, cfg in self.final.items():
            lines.append("# final %s=%s" % (name, cfg.to_literal()))
        lines.append("t,site,layer,from,to")
        for e in self.events:
            lines.append("%r,%d,%s,%d,%d" % (e.time, e.site, e.layer, e.old, e.new))
        return "\n".join(lines) + "\n"

    def to_records(self):
        return [
            {"t": e.time, "site": e.site, "layer": e.layer, "from": e.old, "to": e.new}
            for e in self.events
        ]


def _merge_site_events(parts):
    """parts: list of (times, site, payload columns...) -> rows sorted by
    (time, site, kind). Ties across kinds at one instant never occur for
    continuous clocks; an exact collision trips an assertion."""
    rows = []
    for times, site, kind, payload in parts:
        for k in range(times.size):
            rows.append((times[k], site, kind) + tuple(col[k] for col in payload))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    for a, b in zip(rows, rows[1:]):
        if a[0] == b[0] and a[2] != b[2]:
            raise AssertionError("background and spin clocks collided at t=%r" % a[0])
    return rows


def evolve_background(beta0: Configuration, stream: EventStream) -> Trajectory:
    """Apply the background acceptance rule at every background ring."""
    spec = stream.spec
    if len(beta0) != spec.size:
        raise ValueError("initial background has %d sites, spec wants %d" % (len(beta0), spec.size))
    b_bar = stream.consts.b_bar
    radius = spec.env.range
    table = spec.env.table
    window = MutableWindow(beta0)
    parts = []
    for x in range(spec.size):
        s = stream.site(x)
        parts.append((s.bg_times, x, _KIND_BG, (s.bg_marks,)))
    events = []
    for t, x, _, mark in _merge_site_events(parts):
        rate = table[window.word_index(x, radius)]
        old = window.bits[x]
        if old == 0:
            flip = mark >= b_bar - rate
        else:
            flip = mark < rate
        if flip:
            window.flip(x)
            events.append(Event(float(t), int(x), "beta", old, 1 - old))
    return Trajectory(
        initial={"beta": beta0},
        events=events,
        final={"beta": window.to_configuration()},
        t_max=stream.t_max,
    )


def evolve_spins(beta_traj: Trajectory, spin_layers, stream: EventStream, names=None) -> Trajectory:
    """Evolve one or more spin layers over a fixed background trajectory.

    All layers share the spin clocks and marks, and each applies the
    acceptance rule with its own neighborhood rate.  Any pair of layers that
    starts pointwise ordered is asserted to stay ordered after every event.
    """
    spec = stream.spec
    layers = [MutableWindow(cfg) for cfg in spin_layers]
    if names is None:
        names = layer_names(len(layers))
    if any(len(cfg) != spec.size for cfg in spin_layers):
        raise ValueError("spin layers must have %d sites" % spec.size)
    ordered = initially_ordered_pairs(list(spin_layers))

    consts = stream.consts
    cb = (consts.c_bar0, consts.c_bar1)
    scale = tuple(v / consts.c_bar if consts.c_bar else 0.0 for v in cb)
    tables = (spec.spin.c0, spec.spin.c1)

    beta = MutableWindow(beta_traj.initial["beta"])
    merged = []
    for x in range(spec.size):
        s = stream.site(x)
        for k in range(s.spin_times.size):
            merged.append((s.spin_times[k], x, _KIND_SPIN, s.spin_marks0[k], s.spin_marks1[k]))
    for e in beta_traj.events:
        merged.append((e.time, e.site, _KIND_BG, e.old, e.new))
    merged.sort(key=lambda r: (r[0], r[1], r[2]))
    for a, b in zip(merged, merged[1:]):
        if a[0] == b[0] and a[2] != b[2]:
            raise AssertionError("background and spin events collided at t=%r" % a[0])

    events = []
    for row in merged:
        t, x, kind = row[0], row[1], row[2]
        if kind == _KIND_BG:
            beta.bits[x] = row[4]
            continue
        i = beta.bits[x]
        cbar_i = cb[i]
        if cbar_i == 0.0:
            continue
        s_i = scale[i]
        u = row[3] if i == 0 else row[4]
        table = tables[i]
        for layer, name in zip(layers, names):
            c = table.rate_index(layer.word_index(x, 1))
            old = layer.bits[x]
            if old == 0:
                flip = u >= cbar_i - s_i * c
            else:
                flip = u < s_i * c
            if flip:
                layer.flip(x)
                events.append(Event(float(t), int(x), name, old, 1 - old))
        for a, b in ordered:
            if layers[a].bits[x] > layers[b].bits[x]:
                raise OrderViolationError(
                    "layers %s and %s crossed at site %d, t=%r" % (names[a], names[b], x, t)
                )

    initial = {"beta": beta_traj.initial["beta"]}
    initial.update(zip(names, spin_layers))
    final = {"beta": beta_traj.final["beta"]}
    final.update({name: layer.to_configuration() for name, layer in zip(names, layers)})
    events = sorted(
        events + list(beta_traj.events), key=lambda e: (e.time, e.site, e.layer != "beta")
    )
    return Trajectory(initial=initial, events=events, final=final, t_max=stream.t_max)


# ---------------------------------------------------------------------------
# exact joint flip rates induced by the shared marks


@lru_cache(maxsize=1024)
def exact_table(values):
    """Rate table as exact Fractions (cached; tables are value tuples)."""
    return tuple(Fraction(v) for v in values)


@lru_cache(maxsize=1024)
def exact_clock(values_own, values_other):
    """(own clock rate, total clock rate, scale) as exact Fractions."""
    s0, s1 = _centered_sups(values_own, 1)
    o0, o1 = _centered_sups(values_other, 1)
    cb_i = Fraction(s0) + Fraction(s1)
    cbar = cb_i + Fraction(o0) + Fraction(o1)
    return cb_i, cbar, (cb_i / cbar if cbar else Fraction(0))


def window_rates(pair: SpinRatePair, background_bit, windows):
    """Joint flip rates of layers sharing one spin clock, by interval arithmetic.

    `windows` holds one 3-bit neighborhood word per layer.  The result maps a
    target local state (background bit, new center per layer) to its rate, as
    an exact Fraction; targets with zero rate are omitted.  No randomness is
    involved: the mark interval of the given background state is partitioned
    into acceptance atoms, each atom's flip set read off, and its length
    scaled by the clock rate.  The arithmetic runs on the mark divided by the
    interval's scale factor, where the acceptance windows for rate c sit at
    [c_bar - c, c_bar] (up) and [0, c) (down) and an atom's rate equals its
    plain length.
    """
    ctab = pair.table(background_bit)
    cb_i, cbar, _ = exact_clock(ctab.values, pair.table(1 - background_bit).values)
    if cb_i == 0:
        return {}
    table = exact_table(ctab.values)
    n_layers = len(windows)
    centers = [int(w[1]) for w in windows]
    bit = int(background_bit)

    # sweep the normalized mark from 0 to c_bar: a down-window [0, c) closes
    # at its threshold, an up-window [c_bar - c, c_bar] opens at its
    # threshold, and each segment between consecutive points is one atom
    # whose rate is its length
    events = []
    for k, ctr in enumerate(centers):
        c = table[int(windows[k], 2)]
        events.append(((cbar - c) if ctr == 0 else c, ctr, k))
    events.sort(key=lambda e: e[0])
    active = {k for k, ctr in enumerate(centers) if ctr == 1}

    out = {}
    pos = Fraction(0)
    idx = 0
    while pos < cbar:
        while idx < len(events) and events[idx][0] == pos:
            _, ctr, k = events[idx]
            if ctr == 1:
                active.discard(k)
            else:
                active.add(k)
            idx += 1
        nxt = events[idx][0] if idx < len(events) else cbar
        if nxt > cbar:
            nxt = cbar
        if active and nxt > pos:
            kinds = {centers[k] for k in active}
            assert len(kinds) == 1, "up and down acceptance windows overlap"
            target = (bit,) + tuple(
                1 - centers[k] if k in active else centers[k] for k in range(n_layers)
            )
            out[target] = out.get(target, Fraction(0)) + (nxt - pos)
        pos = nxt
    return {k: v for k, v in out.items() if v != 0}


# ---------------------------------------------------------------------------
# vectorized lockstep replica engine (same flip rules, uniformized clocks)


@dataclass
class BatchResult:
    times: list
    background: list
    layers: list
    order_violations: int


class _BatchState:
    """Replica-stacked window with boundary-aware gathers; frozen boundaries
    become constant halo columns, periodic windows gather modularly.

    `init` is either one Configuration tiled across replicas, or a pair
    (bits array of shape (replicas, n), boundary) for per-replica starts.
    """

    def __init__(self, init, replicas, halo):
        if isinstance(init, Configuration):
            body = np.tile(init.as_array(), (replicas, 1))
            boundary = init.boundary
        else:
            bits, boundary = init
            body = np.array(bits, dtype=np.int8)
            if body.shape != (replicas, bits.shape[1]):
                raise ValueError("per-replica bits must have shape (replicas, n)")
        self.n = body.shape[1]
        self.halo = halo if isinstance(boundary, FrozenWords) else 0
        self.periodic = isinstance(boundary, Periodic)
        if self.periodic:
            self.arr = body
        else:
            words = boundary
            if len(words.left) < halo or len(words.right) < halo:
                raise ValueError("boundary words shorter than the needed halo %d" % halo)
            left = [int(ch) for ch in words.left[len(words.left) - halo:]]
            right = [int(ch) for ch in words.right[:halo]]
            self.arr = np.concatenate(
                [
                    np.tile(np.array(left, dtype=np.int8), (replicas, 1)),
                    body,
                    np.tile(np.array(right, dtype=np.int8), (replicas, 1)),
                ],
                axis=1,
            )
        self.boundary = boundary

    def cols(self, x, off):
        if self.periodic:
            return (x + off) % self.n
        return x + off + self.halo

    def col_block(self, x, radius):
        """Column indices for offsets -radius..radius, shape (2r+1, len(x))."""
        offs = np.arange(-radius, radius + 1)[:, None]
        if self.periodic:
            return (x[None, :] + offs) % self.n
        return x[None, :] + offs + self.halo

    def gather(self, rows, x, off):
        return self.arr[rows, self.cols(x, off)]

    def word_index(self, rows, x, radius):
        return self.word_index_cols(rows, self.col_block(x, radius))

    def word_index_cols(self, rows, cols):
        idx = self.arr[rows, cols[0]].astype(np.int64)
        for k in range(1, cols.shape[0]):
            idx = (idx << 1) | self.arr[rows, cols[k]]
        return idx

    def centers(self, rows, x):
        return self.arr[rows, self.cols(x, 0)]

    def flip(self, rows, x, mask):
        cols = self.cols(x, 0)
        self.arr[rows[mask], cols[mask]] ^= 1

    def flip_cols(self, rows, cols, mask):
        self.arr[rows[mask], cols[mask]] ^= 1

    def snapshot(self):
        if self.periodic:
            return self.arr.copy()
        return self.arr[:, self.halo:self.halo + self.n].copy()

    def to_configuration(self, r):
        body = self.arr[r] if self.periodic else self.arr[r, self.halo:self.halo + self.n]
        return Configuration(tuple(int(v) for v in body), self.boundary)


def batch_evolve(
    spec: ModelSpec,
    beta0: Configuration,
    spin_layers,
    t_grid,
    replicas,
    seed,
    check_order=True,
    on_violation="raise",
):
    """Run `replicas` independent copies of the graphical rules in lockstep.

    Events are the merged per-site clocks (total rate N*(b_bar+c_bar)); each
    replica receives its own Poisson number of events per grid interval and
    its own site choices and marks.  Returns in-window snapshots at each grid
    time.  With `check_order`, every pair of layers that starts ordered is
    checked after each event; violations either raise or are counted.
    """
    consts = dominating_rates(spec)
    n = spec.size
    lam_site = consts.b_bar + consts.c_bar
    p_bg = consts.b_bar / lam_site if lam_site > 0 else 0.0
    rng = np.random.default_rng(seed)
    halo = max(1, spec.env.range)

    bstate = _BatchState(beta0, replicas, halo)
    lstates = [_BatchState(cfg, replicas, halo) for cfg in spin_layers]
    pairs = ()
    if check_order:
        bodies = [s.snapshot() for s in lstates]
        pairs = tuple(
            (i, j)
            for i in range(len(bodies))
            for j in range(i + 1, len(bodies))
            if (bodies[i] <= bodies[j]).all()
        )

    btab = spec.env.as_array()
    ctab2 = np.stack([spec.spin.c0.as_array(), spec.spin.c1.as_array()])
    b_bar, cb0, cb1, cbar = consts.b_bar, consts.c_bar0, consts.c_bar1, consts.c_bar
    cb_of = np.array([cb0, cb1])

    times, bg_out, layers_out = [], [], []
    violations = 0
    t_prev = 0.0
    grid = [float(t) for t in t_grid]
    if any(b < a for a, b in zip(grid, grid[1:])) or (grid and grid[0] < 0):
        raise ValueError("t_grid must be nondecreasing and nonnegative")

    for t in grid:
        dt = t - t_prev
        t_prev = t
        counts = (
            rng.poisson(lam_site * n * dt, replicas)
            if lam_site > 0 and dt > 0
            else np.zeros(replicas, dtype=np.int64)
        )
        for j in range(int(counts.max()) if counts.size else 0):
            active = j < counts
            x = rng.integers(0, n, replicas)
            is_bg = rng.random(replicas) < p_bg

            rows = np.nonzero(active & is_bg)[0]
            if rows.size:
                xs = x[rows]
                rate = btab[bstate.word_index(rows, xs, spec.env.range)]
                ctr = bstate.centers(rows, xs)
                mark = rng.uniform(0.0, b_bar, rows.size)
                flip = np.where(ctr == 0, mark >= b_bar - rate, mark < rate)
                bstate.flip(rows, xs, flip)

            rows = np.nonzero(active & ~is_bg)[0]
            if rows.size and lstates:
                xs = x[rows]
                cols = lstates[0].col_block(xs, 1)
                i = bstate.centers(rows, xs)
                cb = cb_of[i]
                u = np.where(
                    i == 0,
                    rng.uniform(0.0, cb0, rows.size) if cb0 > 0 else 0.0,
                    rng.uniform(0.0, cb1, rows.size) if cb1 > 0 else 0.0,
                )
                s = cb / cbar
                live = cb > 0
                for state in lstates:
                    c = ctab2[i, state.word_index_cols(rows, cols)]
                    ctr = state.arr[rows, cols[1]]
                    flip = np.where(ctr == 0, u >= cb - s * c, u < s * c) & live
                    state.flip_cols(rows, cols[1], flip)
                for a, b in pairs:
                    bad = lstates[a].arr[rows, cols[1]] > lstates[b].arr[rows, cols[1]]
                    if bad.any():
                        if on_violation == "raise":
                            raise OrderViolationError(
                                "layers %d and %d crossed in batch step" % (a, b)
                            )
                        violations += int(bad.sum())
        times.append(t)
        bg_out.append(bstate.snapshot())
        layers_out.append([state.snapshot() for state in lstates])

    return BatchResult(times=times, background=bg_out, layers=layers_out, order_violations=violations)


def batch_envelope(spec: ModelSpec, t_grid, replicas, seed, on_violation="raise"):
    """Coupled replicas of the two extreme joint starts (all zeros, all ones).

    Each replica carries two full (background, spin) pairs.  Backgrounds share
    their clock and mark, spins share their clock and a single mark drawn
    uniformly on [0, c_bar]; a spin layer accepts a flip against its own
    background bit i with windows of length c_i(x, .) anchored at the top
    (up-flips) and bottom (down-flips).  Because compatibility nests those
    windows across the two tables, the pair order (background and spin alike)
    is preserved even while the backgrounds disagree, which the per-table
    mark scheme cannot guarantee.  Each pair alone still evolves with the
    exact model rates.
    """
    consts = dominating_rates(spec)
    n = spec.size
    lam_site = consts.b_bar + consts.c_bar
    p_bg = consts.b_bar / lam_site if lam_site > 0 else 0.0
    rng = np.random.default_rng(seed)
    halo = max(1, spec.env.range)

    b_lo = _BatchState(Configuration.all_zero(n, spec.env_boundary), replicas, halo)
    b_hi = _BatchState(Configuration.all_one(n, spec.env_boundary), replicas, halo)
    e_lo = _BatchState(Configuration.all_zero(n, spec.spin_boundary), replicas, halo)
    e_hi = _BatchState(Configuration.all_one(n, spec.spin_boundary), replicas, halo)

    btab = spec.env.as_array()
    ctabs = (spec.spin.c0.as_array(), spec.spin.c1.as_array())
    b_bar, cbar = consts.b_bar, consts.c_bar

    times, snaps = [], []
    violations = 0
    t_prev = 0.0
    for t in (float(v) for v in t_grid):
        dt = t - t_prev
        t_prev = t
        counts = (
            rng.poisson(lam_site * n * dt, replicas)
            if lam_site > 0 and dt > 0
            else np.zeros(replicas, dtype=np.int64)
        )
        for j in range(int(counts.max()) if counts.size else 0):
            active = j < counts
            x = rng.integers(0, n, replicas)
            is_bg = rng.random(replicas) < p_bg

            rows = np.nonzero(active & is_bg)[0]
            if rows.size:
                xs = x[rows]
                mark = rng.uniform(0.0, b_bar, rows.size)
                for bstate in (b_lo, b_hi):
                    rate = btab[bstate.word_index(rows, xs, spec.env.range)]
                    ctr = bstate.centers(rows, xs)
                    flip = np.where(ctr == 0, mark >= b_bar - rate, mark < rate)
                    bstate.flip(rows, xs, flip)

            rows = np.nonzero(active & ~is_bg)[0]
            if rows.size and cbar > 0:
                xs = x[rows]
                u = rng.uniform(0.0, cbar, rows.size)
                for bstate, estate in ((b_lo, e_lo), (b_hi, e_hi)):
                    i = bstate.centers(rows, xs)
                    widx = estate.word_index(rows, xs, 1)
                    c = np.where(i == 0, ctabs[0][widx], ctabs[1][widx])
                    ctr = estate.centers(rows, xs)
                    flip = np.where(ctr == 0, u >= cbar - c, u < c)
                    estate.flip(rows, xs, flip)
                bad = (b_lo.centers(rows, xs) > b_hi.centers(rows, xs)) | (
                    e_lo.centers(rows, xs) > e_hi.centers(rows, xs)
                )
                if bad.any():
                    if on_violation == "raise":
                        raise OrderViolationError("joint point-mass pairs crossed")
                    violations += int(bad.sum())
        times.append(t)
        snaps.append(
            (b_lo.snapshot(), e_lo.snapshot(), b_hi.snapshot(), e_hi.snapshot())
        )
    return times, snaps, violations
