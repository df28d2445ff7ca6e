import numpy as np
import pytest

from conftest import make_scenario
from oracles import cvxpy_centralized
from sharegame.allocation import is_feasible
from sharegame.centralized import centralized_lr, centralized_sr, solve_centralized
from sharegame.dynamics import GameConfig, run_mdsg
from sharegame.scheduler import SpectralEfficiencyTable, build_tables, utility_value


def symmetric_tables(mu_private=4.0, mu_shared=3.0, users=2):
    return [SpectralEfficiencyTable.from_arrays(p, 2, [[mu_private, mu_shared]] * users) for p in range(2)]


def test_full_sharing_without_interference():
    tables = [SpectralEfficiencyTable.from_arrays(p, 2, [[2.0, 2.0], [1.0, 1.0]]) for p in range(2)]
    res = solve_centralized(tables, (1.0, 1.0))
    assert res.pattern[3] == pytest.approx(1.0, abs=1e-7)
    # grid oracle on the reciprocity line
    grid = np.linspace(0, 1, 1001)
    from sharegame.allocation import AllocationPattern

    tot = [
        sum(utility_value(p, AllocationPattern(2, np.array([0, (1 - x) / 2, (1 - x) / 2, x])), tables[p], 1.0) for p in range(2))
        for x in grid
    ]
    assert grid[int(np.argmax(tot))] == pytest.approx(1.0)
    assert res.total == pytest.approx(max(tot), abs=1e-6)


def test_symmetric_optimum_is_symmetric():
    res = solve_centralized(symmetric_tables(), (1.0, 1.0))
    assert res.pattern[1] == pytest.approx(res.pattern[2], abs=1e-7)


@pytest.mark.parametrize("seed", [0, 3])
def test_lr_equals_sr_on_symmetric_load(seed):
    tables = symmetric_tables(4.0 + seed, 2.0)
    sr = solve_centralized(tables, (1.0, 1.0))
    lr = solve_centralized(tables, (1.0, 1.0), long_term=True)
    assert lr.total == pytest.approx(sr.total, abs=1e-4)


def test_lr_exceeds_sr_when_one_player_is_idle():
    tables = [
        SpectralEfficiencyTable.from_arrays(0, 2, [[4.0, 2.0], [3.0, 1.0]]),
        SpectralEfficiencyTable.from_arrays(1, 2, np.zeros((0, 2))),
    ]
    sr = solve_centralized(tables, (1.0, 1.0))
    lr = solve_centralized(tables, (1.0, 1.0), long_term=True)
    assert lr.total > sr.total + 1e-3
    assert lr.pattern.values.sum() == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("preset,seed", [("two-player", 2), ("four-player", 5), ("four-player", 9)])
@pytest.mark.parametrize("long_term", [False, True])
def test_matches_cvxpy(preset, seed, long_term):
    tables = build_tables(make_scenario(preset, seed))
    n = len(tables)
    res = solve_centralized(tables, (1.0,) * n, long_term=long_term)
    ref, _ = cvxpy_centralized(tables, (1.0,) * n, n, long_term=long_term)
    assert res.total == pytest.approx(ref, rel=1e-6, abs=1e-5)
    if long_term:
        assert res.pattern.values.sum() == pytest.approx(1.0, abs=1e-9)
    else:
        assert is_feasible(res.pattern)


@pytest.mark.parametrize("seed", [4, 7])
def test_ordering_against_game(seed):
    sc = make_scenario("four-player", seed)
    tables = build_tables(sc)
    alphas = (1.0,) * 4
    game = run_mdsg(GameConfig(kind="MRG"), tables).final
    game_total = sum(utility_value(n, game, tables[n], 1.0) for n in range(4))
    sr = solve_centralized(tables, alphas).total
    lr = solve_centralized(tables, alphas, long_term=True).total
    assert sr >= game_total - 1e-4
    assert lr >= sr - 1e-4


def test_scenario_entry_points(two_player):
    assert is_feasible(centralized_sr(two_player, (1.0, 1.0)))
    assert centralized_lr(two_player, (1.0, 1.0)).values.sum() == pytest.approx(1.0, abs=1e-9)
