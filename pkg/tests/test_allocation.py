import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sharegame.allocation import (
    MAX_PLAYERS,
    AllocationPattern,
    Bid,
    ConfigurationError,
    bid_box,
    contains,
    default_pattern,
    is_feasible,
    members,
    random_bid,
    reciprocity_shares,
    subset_label,
    subset_of,
    subsets_containing,
)
from sharegame.resolution import resolve

P1, P2, P12 = 0b01, 0b10, 0b11


def pattern2(b1, b2, b12):
    return AllocationPattern.from_dict(2, {P1: b1, P2: b2, P12: b12})


def test_subset_encoding_roundtrip():
    S = subset_of([0, 2, 3])
    assert S == 0b1101
    assert members(S) == (0, 2, 3)
    assert contains(S, 2) and not contains(S, 1)
    assert subset_label(S) == "{1,3,4}"
    assert subset_label(0) == "{}"


@pytest.mark.parametrize("kind,n,expected", [
    ("MRG", 2, {P1: 0.5, P2: 0.5}),
    ("RPG", 2, {P12: 1.0}),
    ("MRG", 4, {1: 0.25, 2: 0.25, 4: 0.25, 8: 0.25}),
])
def test_default_pattern_values(kind, n, expected):
    b = default_pattern(kind, n)
    want = np.zeros(1 << n)
    for s, v in expected.items():
        want[s] = v
    np.testing.assert_array_equal(b.values, want)
    assert is_feasible(b)


@pytest.mark.parametrize("n", range(2, MAX_PLAYERS + 1))
@pytest.mark.parametrize("kind", ["MRG", "RPG"])
def test_defaults_feasible_for_all_sizes(kind, n):
    b = default_pattern(kind, n)
    assert is_feasible(b)
    assert b.total == pytest.approx(1.0, abs=1e-12)


def test_player_count_limits():
    with pytest.raises(ConfigurationError):
        default_pattern("MRG", 1)
    with pytest.raises(ConfigurationError):
        default_pattern("MRG", MAX_PLAYERS + 1)
    with pytest.raises(ConfigurationError):
        default_pattern("XYZ", 2)


def test_pattern_validation():
    with pytest.raises(ConfigurationError):
        AllocationPattern(2, [0.1, 0.5, 0.5, 0.0])  # empty subset must be 0
    with pytest.raises(ConfigurationError):
        AllocationPattern(2, [0.0, 0.5, 0.5])
    b = pattern2(0.3, 0.3, 0.4)
    with pytest.raises(ValueError):
        b.values[1] = 0.0  # immutable


def test_feasibility_examples():
    assert is_feasible(pattern2(0.3, 0.3, 0.4))
    assert not is_feasible(pattern2(0.6, 0.4, 0.0))
    assert not is_feasible(pattern2(0.6, 0.6, -0.2))


def test_reciprocity_shares_examples():
    np.testing.assert_allclose(reciprocity_shares(default_pattern("RPG", 3)), [1 / 3] * 3)
    np.testing.assert_allclose(reciprocity_shares(pattern2(0.3, 0.3, 0.4)), [0.5, 0.5])
    np.testing.assert_array_equal(reciprocity_shares(AllocationPattern(3, np.zeros(8))), np.zeros(3))


def test_subsets_containing():
    assert subsets_containing(0, 2) == (P1, P12)
    s = subsets_containing(1, 3)
    assert len(s) == 4 and all(contains(x, 1) for x in s)
    assert len(subsets_containing(0, 4)) == 8
    with pytest.raises(ConfigurationError):
        subsets_containing(2, 2)


def test_bid_void_outside_own_subsets():
    bid = Bid.from_dict(0, 2, {P1: 0.3, P12: 0.4})
    assert np.isnan(bid.values[P2]) and np.isnan(bid.values[0])
    assert bid.share() == pytest.approx(0.5)
    assert bid.is_valid()
    with pytest.raises(ConfigurationError):
        Bid(0, [np.nan, 0.5, 0.0, np.nan])  # missing value on {1,2}


def test_bid_box_examples():
    b0 = default_pattern("MRG", 2)
    box = bid_box(Bid.from_dict(0, 2, {P1: 0.3, P12: 0.4}), b0)
    assert (box.lo[P1], box.hi[P1]) == (0.3, 0.5)
    assert (box.lo[P12], box.hi[P12]) == (0.0, 0.4)
    assert np.isinf(box.lo[P2]) and np.isinf(box.hi[P2])

    box = bid_box(Bid.from_dict(0, 2, {P1: 0.0, P12: 1.0}), b0)
    assert (box.lo[P12], box.hi[P12]) == (0.0, 1.0)

    box = bid_box(Bid.default(1, b0), b0)
    assert np.all(box.lo[[P2, P12]] == box.hi[[P2, P12]])


def _random_feasible(n, seed):
    rng = np.random.default_rng(seed)
    b0 = default_pattern("MRG" if seed % 2 else "RPG", n)
    return resolve([random_bid(p, n, rng) for p in range(n)], b0).pattern


@given(st.integers(2, 5), st.integers(0, 10**6))
def test_random_bids_are_valid(n, seed):
    rng = np.random.default_rng(seed)
    for p in range(n):
        bid = random_bid(p, n, rng)
        assert bid.is_valid()
        assert (bid.values[np.array(subsets_containing(p, n))] >= 0).all()


@given(st.integers(2, 4), st.integers(0, 10**6))
def test_feasible_patterns_have_unit_mass(n, seed):
    b = _random_feasible(n, seed)
    assert is_feasible(b)
    assert b.total == pytest.approx(1.0, abs=1e-9)


@given(st.integers(2, 4), st.integers(0, 10**6), st.integers(0, 10**6), st.floats(0, 1))
def test_feasible_set_is_convex(n, s1, s2, theta):
    b1, b2 = _random_feasible(n, s1), _random_feasible(n, s2)
    mix = AllocationPattern(n, theta * b1.values + (1 - theta) * b2.values)
    assert is_feasible(mix)


@given(st.integers(2, 4), st.integers(0, 10**6))
def test_bid_box_contains_bid_and_default(n, seed):
    rng = np.random.default_rng(seed)
    b0 = _random_feasible(n, seed + 1)
    for p in range(n):
        bid = random_bid(p, n, rng)
        box = bid_box(bid, b0)
        assert box.contains(b0)
        own = np.array(subsets_containing(p, n))
        assert np.all((box.lo[own] <= bid.values[own]) & (bid.values[own] <= box.hi[own]))
        assert np.all(box.lo[own] <= box.hi[own])
