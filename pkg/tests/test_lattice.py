import numpy as np
import pytest

from envspin import Configuration, FrozenWords, JointState, leq, neighborhood, point_mass_states, translate
from envspin.lattice import BoundaryError, initially_ordered_pairs

from _support import WORKED_LOWER, WORKED_MIDDLE, WORKED_UPPER, random_ordered_triple


def test_leq_examples():
    n = 5
    assert leq(Configuration.all_zero(n), Configuration.all_one(n))
    assert not leq(Configuration("010"), Configuration("001"))
    assert not leq(Configuration("001"), Configuration("010"))
    assert leq(Configuration(WORKED_LOWER), Configuration(WORKED_MIDDLE))
    assert leq(Configuration(WORKED_MIDDLE), Configuration(WORKED_UPPER))
    with pytest.raises(ValueError):
        leq(Configuration("01"), Configuration("011"))


def test_translate_examples():
    c = Configuration("100")
    assert translate(c, 0) == c
    assert translate(c, 3) == c
    assert translate(c, 1) == Configuration("010")
    frozen = Configuration("100", FrozenWords("0", "0"))
    with pytest.raises(BoundaryError):
        translate(frozen, 1)


def test_translate_bijection_preserves_order():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(2, 10))
        a, b, _ = random_ordered_triple(rng, n)
        k = int(rng.integers(-5, 10))
        ca, cb = Configuration(a), Configuration(b)
        assert leq(translate(ca, k), translate(cb, k)) == leq(ca, cb)
        assert translate(translate(ca, k), -k) == ca


def test_neighborhood_examples():
    assert neighborhood(Configuration("011"), 0, 1) == "101"
    frozen = Configuration("010", FrozenWords("1", "1"))
    assert neighborhood(frozen, 0, 1) == "101"
    assert neighborhood(Configuration.all_zero(6), 3, 1) == "000"
    assert neighborhood(Configuration("0110", FrozenWords("10", "01")), 3, 2) == "11001"


def test_neighborhood_reconstructs_configuration():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = int(rng.integers(1, 12))
        bits = tuple(int(v) for v in rng.integers(0, 2, n))
        c = Configuration(bits)
        centers = tuple(int(neighborhood(c, x, 1)[1]) for x in range(n))
        assert centers == bits


def test_partial_order_properties():
    rng = np.random.default_rng(2)
    configs = [Configuration(tuple(int(v) for v in rng.integers(0, 2, 6))) for _ in range(40)]
    for a in configs:
        assert leq(a, a)
        for b in configs:
            if leq(a, b) and leq(b, a):
                assert a.bits == b.bits
            for c in configs:
                if leq(a, b) and leq(b, c):
                    assert leq(a, c)


def test_point_mass_states():
    lo, hi = point_mass_states(3)
    assert lo.beta.bits == (0, 0, 0) and lo.layers[0].bits == (0, 0, 0)
    assert hi.beta.bits == (1, 1, 1) and hi.layers[0].bits == (1, 1, 1)
    assert leq(lo.beta, hi.beta) and leq(lo.layers[0], hi.layers[0])
    assert translate(lo.beta, 2) == lo.beta
    assert translate(hi.layers[0], 1) == hi.layers[0]


def test_joint_state_order_enforced():
    with pytest.raises(ValueError):
        JointState(
            Configuration("000"),
            (Configuration("010"), Configuration("001"), Configuration("111")),
        )
    JointState(
        Configuration("000"),
        (Configuration("000"), Configuration("010"), Configuration("110"), Configuration("111")),
    )


def test_literals_round_trip():
    c = Configuration("0110", FrozenWords("10", "01"))
    assert c.to_literal() == "10|0110|01"
    assert Configuration.from_literal("10|0110|01") == c
    assert Configuration.from_literal("0110") == Configuration("0110")


def test_initially_ordered_pairs():
    a = Configuration("000")
    b = Configuration("010")
    c = Configuration("101")
    assert initially_ordered_pairs([a, b, c]) == ((0, 1), (0, 2))
