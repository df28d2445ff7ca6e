import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_scenario
from oracles import central_difference, cvxpy_schedule
from sharegame.allocation import AllocationPattern, ConfigurationError, default_pattern, random_bid, subsets_containing
from sharegame.resolution import resolve
from sharegame.scenario import Scenario
from sharegame.scheduler import (
    SpectralEfficiencyTable,
    UndefinedGradientError,
    alpha_fair_value,
    build_tables,
    evaluate_utility,
    evaluate_utility_comp,
    mu_table,
    sinr,
    spectral_efficiency,
    user_rate,
    utility_supergradient,
    utility_value,
)

P1, P2, P12 = 0b01, 0b10, 0b11
ALPHAS = (0.0, 0.5, 1.0, 2.0)


def test_spectral_efficiency_examples():
    assert spectral_efficiency(0.0) == 0.0
    assert spectral_efficiency(1.0) == 1.0
    assert spectral_efficiency(3.0) == 2.0
    with pytest.raises(ValueError):
        spectral_efficiency(-0.1)


def test_alpha_fair_examples():
    assert alpha_fair_value(3.0, 0.0) == 3.0
    assert alpha_fair_value(1.0, 1.0) == 0.0
    assert alpha_fair_value(2.0, 2.0) == -0.5
    assert alpha_fair_value(0.0, 1.0) == -np.inf
    assert alpha_fair_value(0.0, 2.0) == -np.inf


def test_user_rate_examples():
    assert user_rate([0.5], [2.0]) == 1.0
    assert user_rate([0.0, 0.0], [1.0, 2.0]) == 0.0
    assert user_rate([0.3, 0.2], [1.0, 2.0]) == pytest.approx(0.7)


def _toy_scenario(gains, noise=0.5, power=1.0, owners=(0, 1), user_owner=(0,)):
    return Scenario(
        n_players=2,
        tx_positions=np.zeros((len(owners), 2)),
        tx_owner=np.array(owners),
        user_positions=np.zeros((len(user_owner), 2)),
        user_owner=np.array(user_owner),
        gains=np.array(gains, dtype=float),
        tx_power=power,
        noise=noise,
    )


def test_sinr_examples():
    sc = _toy_scenario([[1.0], [0.25]])
    assert sinr(sc, 0, P1) == pytest.approx(2.0)  # no interferers on the private subset
    assert sinr(sc, 0, P12) == pytest.approx(1.0 / 0.75)
    # symmetric co-located pairs with equal gains, negligible noise
    sym = _toy_scenario([[1.0, 1.0], [1.0, 1.0]], noise=1e-15, user_owner=(0, 1))
    assert sinr(sym, 0, P12) == pytest.approx(1.0, rel=1e-12)
    assert sinr(sym, 1, P12) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ConfigurationError):
        sinr(sc, 0, P1, serving_tx=1)
    with pytest.raises(ConfigurationError):
        sinr(sc, 0, P1, serving_tx=5)


def test_mu_identical_without_inter_operator_coupling():
    sc = _toy_scenario([[1.0], [1e-30]], noise=1e-3)
    t = mu_table(sc, 0)
    np.testing.assert_allclose(t.mu[0], t.mu[0, 0], rtol=1e-12)


@given(st.integers(0, 10**6), st.sampled_from(["two-player", "four-player"]))
def test_mu_monotone_in_subset(seed, preset):
    sc = make_scenario(preset, seed)
    for t in build_tables(sc):
        for i, S in enumerate(t.subsets):
            for j, T in enumerate(t.subsets):
                if S != T and S & T == S:  # S strictly inside T
                    assert (t.mu[:, i] >= t.mu[:, j]).all()


def test_empty_operator_table():
    sc = _toy_scenario([[1.0], [0.5]])
    t = mu_table(sc, 1)
    assert t.n_users == 0
    res = evaluate_utility(1, default_pattern("MRG", 2), t, 1.0)
    assert res.value == 0.0


def test_equal_split_closed_form():
    t = SpectralEfficiencyTable.from_arrays(0, 2, [[0.0, 2.0], [0.0, 4.0]])
    b = default_pattern("RPG", 2)
    res = evaluate_utility(0, b, t, 1.0)
    assert res.value == pytest.approx(np.log(2.0), abs=1e-9)
    np.testing.assert_allclose(res.allocation.w[:, 1], [0.5, 0.5], atol=1e-8)


def test_single_user_takes_everything():
    t = SpectralEfficiencyTable.from_arrays(0, 2, [[3.0, 1.5]])
    b = AllocationPattern.from_dict(2, {P1: 0.3, P2: 0.3, P12: 0.4})
    for alpha in ALPHAS:
        res = evaluate_utility(0, b, t, alpha)
        assert res.value == pytest.approx(alpha_fair_value(0.3 * 3 + 0.4 * 1.5, alpha), abs=1e-9)


def test_scaling_mu_at_alpha_one(two_player):
    t = mu_table(two_player, 0)
    b = AllocationPattern.from_dict(2, {P1: 0.3, P2: 0.3, P12: 0.4})
    r1 = evaluate_utility(0, b, t, 1.0)
    r2 = evaluate_utility(0, b, t.scaled(2.0), 1.0)
    assert r2.value - r1.value == pytest.approx(t.n_users * np.log(2.0), abs=1e-8)
    np.testing.assert_allclose(r1.rates * 2, r2.rates, rtol=1e-6)


def test_all_zero_pattern_gives_minus_inf(two_player):
    t = mu_table(two_player, 0)
    zero = AllocationPattern(2, np.zeros(4))
    assert evaluate_utility(0, zero, t, 1.0).value == -np.inf
    with pytest.raises(UndefinedGradientError):
        utility_supergradient(0, zero, t, 1.0)


def test_dimension_mismatch_rejected(two_player):
    t = mu_table(two_player, 0)
    with pytest.raises(ConfigurationError):
        evaluate_utility(0, default_pattern("MRG", 3), t, 1.0)
    with pytest.raises(ConfigurationError):
        evaluate_utility(1, default_pattern("MRG", 2), t, 1.0)


def _random_pattern(n, rng):
    b0 = default_pattern("MRG" if rng.random() < 0.5 else "RPG", n)
    return resolve([random_bid(p, n, rng) for p in range(n)], b0).pattern


@pytest.mark.parametrize("alpha", ALPHAS)
def test_matches_cvxpy(alpha):
    rng = np.random.default_rng(int(alpha * 10))
    for seed in range(4):
        sc = make_scenario("two-player", seed)
        b = _random_pattern(2, rng)
        for n, t in enumerate(build_tables(sc)):
            if t.n_users == 0:
                continue
            ours = evaluate_utility(n, b, t, alpha)
            ref = cvxpy_schedule(t.mu, b.values[list(t.subsets)], alpha, t.serving)
            assert ours.value == pytest.approx(ref, rel=1e-6, abs=1e-6)


@given(st.integers(0, 10**6), st.sampled_from(ALPHAS))
def test_allocation_validity(seed, alpha):
    rng = np.random.default_rng(seed)
    sc = make_scenario("four-player", seed % 50)
    b = _random_pattern(4, rng)
    for n, t in enumerate(build_tables(sc)):
        res = evaluate_utility(n, b, t, alpha)
        w = res.allocation.w
        assert (w >= -1e-10).all()
        for v in np.unique(t.serving):
            sums = w[t.serving == v].sum(axis=0)
            np.testing.assert_allclose(sums, b.values[list(t.subsets)], atol=1e-8)
        np.testing.assert_allclose(res.rates, (w * t.mu).sum(axis=1), atol=1e-10)


def test_supergradient_single_user_linear():
    t = SpectralEfficiencyTable.from_arrays(0, 3, [[3.0, 2.0, 1.5, 1.0]])
    b = default_pattern("RPG", 3)
    g = utility_supergradient(0, b, t, 0.0)
    want = np.zeros(8)
    want[list(t.subsets)] = [3.0, 2.0, 1.5, 1.0]
    np.testing.assert_allclose(g, want)


def test_supergradient_zero_off_own_subsets(four_player):
    rng = np.random.default_rng(1)
    b = _random_pattern(4, rng)
    for n, t in enumerate(build_tables(four_player)):
        if t.n_users == 0:
            continue
        g = utility_supergradient(n, b, t, 1.0)
        own = np.zeros(16, dtype=bool)
        own[list(subsets_containing(n, 4))] = True
        assert (g[~own] == 0).all()


@pytest.mark.parametrize("alpha", ALPHAS)
def test_supergradient_matches_finite_differences(alpha):
    rng = np.random.default_rng(3)
    sc = make_scenario("two-player", 11)
    checked = 0
    for _ in range(10):
        b = AllocationPattern(2, np.concatenate([[0.0], 0.2 + 0.6 * rng.random(3)]))
        for n, t in enumerate(build_tables(sc)):
            if t.n_users == 0:
                continue
            grad = utility_supergradient(n, b, t, alpha)
            for S in t.subsets:
                e = np.zeros(4)
                e[S] = 1.0
                fd = central_difference(lambda v: utility_value(n, AllocationPattern(2, v), t, alpha), b.values, e)
                assert grad[S] == pytest.approx(fd, rel=1e-4, abs=1e-6)
                checked += 1
    assert checked > 0


@given(st.integers(0, 10**6), st.sampled_from(ALPHAS), st.floats(0.05, 0.95))
def test_concavity(seed, alpha, theta):
    rng = np.random.default_rng(seed)
    sc = make_scenario("two-player", seed % 20)
    b1, b2 = _random_pattern(2, rng), _random_pattern(2, rng)
    mix = AllocationPattern(2, theta * b1.values + (1 - theta) * b2.values)
    for n, t in enumerate(build_tables(sc)):
        v1, v2 = utility_value(n, b1, t, alpha), utility_value(n, b2, t, alpha)
        if not (np.isfinite(v1) and np.isfinite(v2)):
            continue
        assert utility_value(n, mix, t, alpha) >= theta * v1 + (1 - theta) * v2 - 1e-6


@given(st.integers(0, 10**6))
def test_locality(seed):
    rng = np.random.default_rng(seed)
    sc = make_scenario("four-player", seed % 20)
    b = _random_pattern(4, rng)
    for n, t in enumerate(build_tables(sc)):
        v = b.values.copy()
        others = [S for S in range(1, 16) if not S >> n & 1]
        v[others] = rng.random(len(others))
        assert utility_value(n, AllocationPattern(4, v), t, 1.0) == utility_value(n, b, t, 1.0)


def test_comp_singleton_groups_reduce_to_plain(four_player):
    # one transmitter per operator: singleton groups use the serving TX
    for n in range(4):
        plain = mu_table(four_player, n)
        comp = mu_table(four_player, n, comp_mode=True)
        if plain.n_users == 0:
            continue
        assert all(len(g) == 1 for g in comp.groups)
        for c, (u,) in enumerate(comp.groups):
            np.testing.assert_array_equal(comp.mu_comp[u, c], plain.mu[u])
        b = default_pattern("RPG", 4)
        assert evaluate_utility_comp(n, b, comp, 1.0).value == pytest.approx(
            evaluate_utility(n, b, plain, 1.0).value, abs=1e-8)


def test_comp_single_group_closed_form():
    mu_comp = np.array([[[2.0, 1.0]], [[4.0, 3.0]]])  # (U, C, K)
    t = SpectralEfficiencyTable.from_arrays(0, 2, [[2.0, 1.0], [4.0, 3.0]], groups=[(0, 1)], mu_comp=mu_comp)
    b = default_pattern("RPG", 2)
    res = evaluate_utility_comp(0, b, t, 1.0)
    assert res.value == pytest.approx(np.log(1.0) + np.log(3.0), abs=1e-9)


def test_comp_extra_group_never_hurts(two_player):
    rng = np.random.default_rng(5)
    b = _random_pattern(2, rng)
    for n in range(2):
        full = mu_table(two_player, n, comp_mode=True)
        if full.n_users < 2:
            continue
        keep = [c for c, g in enumerate(full.groups) if len(g) == 1]
        reduced = SpectralEfficiencyTable(
            n, 2, full.subsets, full.mu, full.serving, users=full.users,
            groups=tuple(full.groups[c] for c in keep), mu_comp=full.mu_comp[:, keep],
        )
        assert evaluate_utility_comp(n, b, full, 1.0).value >= evaluate_utility_comp(n, b, reduced, 1.0).value - 1e-9


def _order_move(b, S, T, eps):
    v = b.values.copy()
    v[S] -= eps
    v[T] += eps
    return AllocationPattern(b.n_players, v)


@given(st.integers(0, 10**6), st.sampled_from(ALPHAS))
def test_order_relation(seed, alpha):
    rng = np.random.default_rng(seed)
    n_players = 2 if seed % 2 else 4
    sc = make_scenario("two-player" if n_players == 2 else "four-player", seed % 30)
    b = _random_pattern(n_players, rng)
    tables = build_tables(sc)
    n = int(rng.integers(n_players))
    t = tables[n]
    own = [S for S in t.subsets if b.values[S] >= 0.01 and S != 1 << n]
    if not own:
        return
    S = own[int(rng.integers(len(own)))]
    inner = [T for T in t.subsets if T != S and T & S == T]
    T = inner[int(rng.integers(len(inner)))]
    before = utility_value(n, b, t, alpha)
    after = utility_value(n, _order_move(b, S, T, 0.01), t, alpha)
    if np.isfinite(before):
        assert after >= before - 1e-9 * max(1.0, abs(before))
