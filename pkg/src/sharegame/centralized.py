"""Centralized sum-utility schedulers used as upper-bound baselines.

``centralized_sr`` keeps every per-operator reciprocity row (the feasible
set of the game); ``centralized_lr`` only asks the pattern to use the unit
resource (long-term reciprocity), so it can favour the more loaded operator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._program import solve_program
from .allocation import AllocationPattern, reciprocity_matrix
from .scenario import Scenario
from .scheduler import build_tables


@dataclass(frozen=True, eq=False)
class CentralizedResult:
    pattern: AllocationPattern
    utilities: np.ndarray
    rates: list

    @property
    def total(self) -> float:
        return float(self.utilities.sum())


def solve_centralized(tables, alphas, long_term: bool = False, weights=None) -> CentralizedResult:
    tables = list(tables)
    n = tables[0].n_players
    weights = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    blocks = [t.block(a, w) for t, a, w in zip(tables, alphas, weights) if t.n_users]
    users = [p for p, t in enumerate(tables) if t.n_users]
    if long_term:
        rows = np.ones((1, 1 << n))
        rows[0, 0] = 0.0
        rhs = [1.0]
    else:
        rows = reciprocity_matrix(n)
        rhs = np.full(n, 1.0 / n)
    free = np.ones(1 << n, dtype=bool)
    sol = solve_program(n, blocks, np.zeros(1 << n), free, eq_rows=rows, eq_rhs=rhs)
    pattern = AllocationPattern(n, np.maximum(sol.b, 0.0))
    utilities = np.zeros(n)
    rates = [np.zeros(0) for _ in range(n)]
    for k, p in enumerate(users):
        utilities[p] = sol.values[k]
        rates[p] = sol.rates[k]
    return CentralizedResult(pattern, utilities, rates)


def _tables(scenario_or_tables, comp_mode=False):
    if isinstance(scenario_or_tables, Scenario):
        return build_tables(scenario_or_tables, comp_mode)
    return list(scenario_or_tables)


def centralized_sr(scenario, alphas) -> AllocationPattern:
    """Pattern maximizing the sum of utilities under per-player reciprocity."""
    return solve_centralized(_tables(scenario), alphas).pattern


def centralized_lr(scenario, alphas) -> AllocationPattern:
    """Pattern maximizing the sum of utilities with only the unit-mass constraint."""
    return solve_centralized(_tables(scenario), alphas, long_term=True).pattern
