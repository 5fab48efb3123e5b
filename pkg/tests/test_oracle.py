import itertools
import math

import numpy as np
import pytest

from envspin import (
    EnvRateSpec,
    LocalSpinRates,
    ModelSpec,
    SpinRatePair,
    build_coupled_generator,
    build_generator,
    limit_distributions,
    preset,
    semigroup_apply,
    spin_marginal,
    stationary_set,
    total_variation,
)
from envspin.rates import TRIPLES

from _support import random_compatible_pair, random_env, random_positive_spec


def single_site_spec(u, d, p01, p10):
    vals = {t: 0.0 for t in TRIPLES}
    vals[(0, 0, 0)] = p01
    vals[(1, 1, 1)] = p10
    c = LocalSpinRates.from_dict(vals)
    return ModelSpec(SpinRatePair(c, c), EnvRateSpec(0, (u, d)), 1)


def test_single_site_generator_transcription():
    u, d, p01, p10 = 0.7, 0.3, 1.1, 0.9
    G = build_generator(single_site_spec(u, d, p01, p10))
    Q = G.dense()
    # states: (background_bit << 1) | spin_bit
    expected = np.zeros((4, 4))
    expected[0b00, 0b10] = u
    expected[0b01, 0b11] = u
    expected[0b10, 0b00] = d
    expected[0b11, 0b01] = d
    expected[0b00, 0b01] = p01
    expected[0b10, 0b11] = p01
    expected[0b01, 0b00] = p10
    expected[0b11, 0b10] = p10
    for s in range(4):
        expected[s, s] = -expected[s].sum()
    assert np.allclose(Q, expected, atol=0)


def test_row_sums_vanish_for_random_specs():
    rng = np.random.default_rng(60)
    for _ in range(10):
        spec = ModelSpec(random_compatible_pair(rng), random_env(rng), int(rng.integers(1, 5)))
        G = build_generator(spec)
        assert G.max_row_sum_error() <= 1e-12


def test_all_zero_state_outflow():
    spec = preset("cpree", gamma=1.0, delta0=2.0, delta1=1.0, p=0.25, sites=4)
    G = build_generator(spec)
    expected = 4 * (spec.env.rate_word("0") + spec.spin.c0.rate(0, 0, 0))
    assert G.out_rate(0) == pytest.approx(expected)


def test_oracle_size_cap():
    spec = preset("cpree", gamma=1.0, delta0=2.0, delta1=1.0, p=0.5, sites=7)
    with pytest.raises(ValueError):
        build_generator(spec)


def test_unique_stationary_for_positive_rates():
    rng = np.random.default_rng(61)
    for _ in range(5):
        spec = random_positive_spec(rng)
        S = stationary_set(build_generator(spec))
        assert S.dimension == 1
        assert not S.flagged
        assert S.svd_null_dim == 1
        pi = S.distributions[0]
        assert pi.min() >= 0 and abs(pi.sum() - 1) < 1e-12


def test_stationary_residuals_small():
    rng = np.random.default_rng(62)
    spec = random_positive_spec(rng, sites=3)
    G = build_generator(spec)
    for pi in stationary_set(G).distributions:
        assert np.abs(G.matvec_left(pi)).max() <= 1e-10


def test_frozen_background_sector_product_structure():
    # a never-moving background freezes each sector; with strictly positive
    # spin tables every sector is irreducible, so one stationary law per
    # background word
    rng = np.random.default_rng(63)
    pair = random_compatible_pair(rng, positive=True)
    spec = ModelSpec(pair, EnvRateSpec(0, (0.0, 0.0)), 3)
    G = build_generator(spec)
    S = stationary_set(G)
    assert S.dimension == 2**3
    for comp in S.closed_classes:
        backgrounds = {G.decode(s)[0] for s in comp}
        assert len(backgrounds) == 1


def test_remark_vi_staircases_absorbing():
    spec = preset("remark_vi", sites=5)
    G = build_generator(spec)
    n = spec.size
    beta_ones = (1 << n) - 1
    for a in range(n + 1):
        eta = G.bits_to_int([0] * a + [1] * (n - a))
        assert G.out_rate(G.encode([beta_ones, eta])) == 0.0
    S = stationary_set(G)
    assert S.dimension >= 2


def test_remark_vi_perturbation_unfreezes_staircase():
    spec = preset("remark_vi", sites=5)
    vals = spec.spin.c1.as_dict()
    vals["001"] = 0.05
    vals["000"] = 0.0
    perturbed = LocalSpinRates.from_dict(vals)
    spec2 = ModelSpec(SpinRatePair(perturbed, perturbed), spec.env, spec.size, spec.boundary)
    G = build_generator(spec2)
    n = spec2.size
    eta = G.bits_to_int([0, 0, 0, 1, 1])
    assert G.out_rate(G.encode([(1 << n) - 1, eta])) > 0.0


def test_semigroup_identity_and_closed_form():
    spec = single_site_spec(0.7, 0.3, 0.0, 0.0)
    G = build_generator(spec)
    p0 = G.point_mass(0)
    res = semigroup_apply(G, p0, 0.0)
    assert np.array_equal(res.dist, p0)
    for t in (0.2, 1.0, 5.0):
        res = semigroup_apply(G, p0, t)
        assert res.truncation_error < 1e-10
        p_up = (0.7 / 1.0) * (1.0 - math.exp(-1.0 * t))
        assert res.dist[0b10] == pytest.approx(p_up, abs=1e-9)
        assert res.dist[0b00] == pytest.approx(1 - p_up, abs=1e-9)


def test_semigroup_converges_to_stationary():
    rng = np.random.default_rng(64)
    spec = random_positive_spec(rng)
    G = build_generator(spec)
    pi = stationary_set(G).distributions[0]
    res = semigroup_apply(G, G.point_mass(3), 200.0)
    assert total_variation(res.dist, pi) < 1e-6


def test_limits_match_unique_stationary():
    rng = np.random.default_rng(65)
    spec = random_positive_spec(rng)
    G = build_generator(spec)
    L = limit_distributions(G)
    assert L.converged
    assert L.tv_distance < 1e-6
    # the limits are themselves stationary
    for dist in (L.lower, L.upper):
        pushed = semigroup_apply(G, dist, 1.0).dist
        assert total_variation(pushed, dist) < 1e-8


def test_limits_stochastically_ordered_on_marginals():
    rng = np.random.default_rng(66)
    n = 3
    upsets = []
    for subset in range(1 << (1 << n)):
        members = [s for s in range(1 << n) if subset >> s & 1]
        mset = set(members)
        if all((s | t) in mset for s in members for t in range(1 << n) if (s | t) == t):
            upsets.append(members)
    assert len(upsets) == 20
    for _ in range(3):
        spec = random_positive_spec(rng, sites=n)
        G = build_generator(spec)
        L = limit_distributions(G)
        lo = spin_marginal(G, L.lower)
        hi = spin_marginal(G, L.upper)
        for up in upsets:
            assert lo[up].sum() <= hi[up].sum() + 1e-9


def test_remark_vi_limits_stay_apart():
    spec = preset("remark_vi", sites=4)
    G = build_generator(spec)
    L = limit_distributions(G)
    assert L.converged
    assert L.tv_distance > 0.9


def test_coupled_generator_marginals_match_pair_generator():
    # summing the two-layer coupled chain over either layer reproduces the
    # plain pair semigroup
    rng = np.random.default_rng(67)
    spec = random_positive_spec(rng, sites=2)
    G2 = build_coupled_generator(spec, 2)
    G1 = build_generator(spec)
    n = spec.size
    start = G2.encode([0b01, 0b00, 0b11])
    res2 = semigroup_apply(G2, G2.point_mass(start), 0.9)
    for layer_pos, eta0 in ((1, 0b00), (2, 0b11)):
        res1 = semigroup_apply(G1, G1.point_mass(G1.encode([0b01, eta0])), 0.9)
        marg = np.zeros(G1.dim)
        for s, p in enumerate(res2.dist):
            fields = G2.decode(s)
            marg[G1.encode([fields[0], fields[layer_pos]])] += p
        assert total_variation(marg, res1.dist) < 1e-9


def test_generator_csv_dump():
    spec = single_site_spec(0.5, 0.5, 1.0, 1.0)
    G = build_generator(spec)
    text = G.to_csv_text()
    lines = text.strip().splitlines()
    assert lines[0] == "from,to,rate"
    assert len(lines) == 1 + len(G.rows)
