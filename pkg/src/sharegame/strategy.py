"""Greedy bids and best responses.

A greedy player bids the pattern she likes best among those respecting her
own reciprocity constraint.  The bid is found by solving the joint concave
program over (bid, schedule).  Among equally good bids the one closest to the
default is preferred, through a small proximal term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._program import solve_program
from .allocation import (
    AllocationPattern,
    Bid,
    ConfigurationError,
    contains,
    membership,
    reciprocity_matrix,
    subset_sizes,
)
from .resolution import box_bounds, resolve
from .scheduler import SpectralEfficiencyTable, utility_value

TIE_BREAK_WEIGHT = 1e-8
SNAP = 1e-10


@dataclass(frozen=True, eq=False)
class StrategyProblem:
    player: int
    b0: AllocationPattern
    table: SpectralEfficiencyTable
    alpha: float
    restriction: int | None = None

    def __post_init__(self):
        if self.table.player != self.player:
            raise ConfigurationError("table belongs to another player")
        S = self.restriction
        if S is not None:
            if subset_sizes(self.b0.n_players)[S] < 2 or not contains(S, self.player):
                raise ConfigurationError("restriction must be a multi-player subset containing the player")


def _has_objective(table: SpectralEfficiencyTable) -> bool:
    if table.n_users == 0:
        return False
    eff = table._columns[2]
    return bool((eff > 0).any())


def _clean_bid(player: int, b0: AllocationPattern, values: np.ndarray, movable: np.ndarray) -> Bid:
    """Snap solver noise and restore the reciprocity equality exactly."""
    n = b0.n_players
    mask = membership(n)[player]
    a = np.where(mask, values, np.nan)
    near_zero = mask & (np.abs(a) <= SNAP)
    near_default = mask & (np.abs(a - b0.values) <= SNAP)
    a[near_zero] = 0.0
    a[near_default] = b0.values[near_default]
    a[mask] = np.maximum(a[mask], 0.0)
    sizes = subset_sizes(n)
    loose = movable & mask & ~near_zero & ~near_default
    resid = 1.0 / n - np.nansum(np.where(mask, a / np.maximum(sizes, 1), 0.0))
    if loose.any():
        k = np.flatnonzero(loose)[np.argmax(a[loose])]
        a[k] = max(a[k] + resid * sizes[k], 0.0)
    return Bid(player, a)


def solve_bid(problem: StrategyProblem) -> tuple[Bid, float]:
    """Greedy (or restricted greedy) bid together with its utility."""
    n_players = problem.b0.n_players
    player = problem.player
    b0 = problem.b0
    if not _has_objective(problem.table):
        bid = Bid.default(player, b0)
        return bid, utility_value(player, b0, problem.table, problem.alpha)
    mask = membership(n_players)[player]
    if problem.restriction is None:
        free = mask.copy()
    else:
        free = np.zeros(mask.size, dtype=bool)
        free[problem.restriction] = True
        free[1 << player] = True
    row = reciprocity_matrix(n_players)[player]
    sol = solve_program(
        n_players,
        [problem.table.block(problem.alpha)],
        np.where(mask, b0.values, 0.0),
        free,
        eq_rows=row[None, :],
        eq_rhs=[1.0 / n_players],
        rho=TIE_BREAK_WEIGHT * max(1, problem.table.n_users),
        ref=b0.values,
    )
    bid = _clean_bid(player, b0, sol.b, free)
    value = utility_value(player, AllocationPattern(n_players, np.where(mask, bid.values, 0.0)), problem.table, problem.alpha)
    return bid, value


def greedy_bid(problem: StrategyProblem) -> Bid:
    if problem.restriction is not None:
        raise ConfigurationError("greedy_bid takes an unrestricted problem; use restricted_greedy_bid")
    return solve_bid(problem)[0]


def restricted_greedy_bid(problem: StrategyProblem) -> Bid:
    """Best bid moving only the restriction subset and the player's singleton."""
    if problem.restriction is None:
        raise ConfigurationError("restricted_greedy_bid needs a restriction subset")
    return solve_bid(problem)[0]


@dataclass(frozen=True, eq=False)
class BestResponse:
    """``gain`` bounds every deviation from above; ``achieved`` is realized by ``deviation``."""

    gain: float
    current: float
    best: float
    target: AllocationPattern
    achieved: float = 0.0
    deviation: Bid | None = None


DEVIATION_STEPS = np.linspace(1.0, 0.05, 20)


def best_response(player: int, bids, b0: AllocationPattern, tables, alphas) -> BestResponse:
    """Best outcome ``player`` can reach given the other players' boxes.

    The other bids confine the outcome to their boxes intersected with the
    feasible set; the player's best point there bounds what any deviation can
    achieve.  ``gain`` is that bound minus the current payoff, floored at 0.
    """
    bids = list(bids)
    n_players = b0.n_players
    table = tables[player]
    alpha = alphas[player]
    current = utility_value(player, resolve(bids, b0).pattern, table, alpha)
    if not _has_objective(table):
        return BestResponse(0.0, current, current, b0)
    lo, hi = box_bounds(bids, b0, skip_player=player)
    free = np.ones(1 << n_players, dtype=bool)
    sol = solve_program(
        n_players,
        [table.block(alpha)],
        b0.values,
        free,
        lo=lo,
        hi=hi,
        eq_rows=reciprocity_matrix(n_players),
        eq_rhs=np.full(n_players, 1.0 / n_players),
    )
    best = float(sol.values[0])
    target = AllocationPattern(n_players, np.maximum(sol.b, 0.0))
    gain = max(best - current, 0.0)
    achieved, deviation = _realize(player, bids, b0, target, table, alpha, current, gain)
    return BestResponse(gain, current, best, target, achieved, deviation)


def _realize(player, bids, b0, target, table, alpha, current, gain, tol=1e-9):
    """Search bids on the segment from the default toward ``target``.

    With two players the target itself is always realized; with more, the
    resolution may stop short of it, so shorter steps are tried as well.
    """
    if gain <= tol:
        return 0.0, None
    mask = membership(b0.n_players)[player]
    achieved, deviation = 0.0, None
    for t in DEVIATION_STEPS:
        v = b0.values + t * (target.values - b0.values)
        dev = _clean_bid(player, b0, np.where(mask, v, np.nan), mask)
        profile = [dev if b.player == player else b for b in bids]
        value = utility_value(player, resolve(profile, b0).pattern, table, alpha) - current
        if value > achieved:
            achieved, deviation = value, dev
        if achieved >= gain - tol * max(1.0, abs(current)):
            break
    return achieved, deviation


def best_response_gain(player: int, bids, b0: AllocationPattern, tables, alphas) -> float:
    return best_response(player, bids, b0, tables, alphas).gain
