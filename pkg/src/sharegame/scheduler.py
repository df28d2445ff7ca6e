"""Operator utility: alpha-fair scheduling of users over a sharing pattern.

For operator ``n`` the utility of a pattern ``b`` is

    g_n(b) = max_W  sum_u f(r_u),   r_u = sum_S w_uS mu_uS,
             sum_{u served by v} w_uS = b_S  for every own transmitter v,

with ``f`` the alpha-fair utility.  Every transmitter reuses the whole of
``b_S``; transmitters without users leave their share idle.  Users whose
spectral-efficiency row is entirely zero cannot be served and are left out of
the objective.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations, permutations

import numpy as np

from ._program import Block, fair_value, solve_program
from .allocation import AllocationPattern, ConfigurationError, subsets_containing, membership
from .scenario import Scenario

MAX_COMP_GROUPS = 4096
COMP_GROUP = -1  # budget id shared by all CoMP columns of an operator


class UndefinedGradientError(ValueError):
    """The utility is -inf at the requested pattern."""


def spectral_efficiency(gamma):
    """``log2(1 + gamma)`` in bits/s/Hz."""
    gamma = np.asarray(gamma, dtype=float)
    if (gamma < 0).any():
        raise ValueError("SINR must be non-negative")
    out = np.log2(1.0 + gamma)
    return float(out) if out.ndim == 0 else out


def alpha_fair_value(rate, alpha: float):
    """``ln r`` for alpha = 1, ``r**(1-alpha)/(1-alpha)`` otherwise.

    A zero rate with ``alpha >= 1`` gives ``-inf`` rather than raising.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if np.any(np.asarray(rate) < 0):
        raise ValueError("rate must be non-negative")
    out = fair_value(rate, float(alpha))
    return float(out) if np.ndim(out) == 0 else out


def user_rate(w_row, mu_row) -> float:
    w_row = np.asarray(w_row, dtype=float)
    mu_row = np.asarray(mu_row, dtype=float)
    if w_row.shape != mu_row.shape:
        raise ValueError("allocation and efficiency rows are not aligned")
    return float(w_row @ mu_row)


def _interference_by_player(scenario: Scenario) -> np.ndarray:
    """``(N, U)`` received power density from all transmitters of each player."""
    rx = scenario.received
    out = np.zeros((scenario.n_players, scenario.n_users))
    for v, owner in enumerate(scenario.tx_owner):
        out[owner] += rx[v]
    return out


def _sinr_matrix(scenario: Scenario, users, subsets, serving) -> np.ndarray:
    """SINR for the given users (all of one operator) on each subset."""
    rx = scenario.received
    by_player = _interference_by_player(scenario)
    users = np.asarray(users, dtype=np.int64)
    serving = np.asarray(serving, dtype=np.int64)
    if users.size == 0:
        return np.zeros((0, len(subsets)))
    n = int(scenario.user_owner[users[0]])
    signal = rx[serving, users]
    intra = by_player[n, users] - signal
    intra = np.maximum(intra, 0.0)
    base = intra + scenario.noise + scenario.background
    m = membership(scenario.n_players)[:, list(subsets)]  # (N, K)
    # add other players one at a time in a fixed order so that the
    # denominator is monotone in the subset, bit for bit
    inter = np.zeros((users.size, len(subsets)))
    for other in range(scenario.n_players):
        if other == n:
            continue
        inter = inter + np.where(m[other][None, :], by_player[other, users][:, None], 0.0)
    denom = base[:, None] + inter
    with np.errstate(divide="ignore"):
        return signal[:, None] / denom


def sinr(scenario: Scenario, user: int, subset: int, serving_tx: int | None = None) -> float:
    """Signal to interference plus noise of ``user`` on resource ``subset``.

    Interference comes from the operator's other transmitters and from every
    transmitter of the other players in ``subset``.
    """
    owner = int(scenario.user_owner[user])
    if serving_tx is None:
        serving_tx = int(scenario.serving[user])
    if not 0 <= serving_tx < scenario.tx_owner.size:
        raise ConfigurationError(f"transmitter {serving_tx} not in scenario")
    if scenario.tx_owner[serving_tx] != owner:
        raise ConfigurationError("serving transmitter belongs to another operator")
    return float(_sinr_matrix(scenario, [user], [subset], [serving_tx])[0, 0])


@dataclass(frozen=True, eq=False)
class SpectralEfficiencyTable:
    """Spectral efficiencies of one operator's users on the subsets containing it.

    ``mu[u, k]`` refers to local user ``u`` and subset ``subsets[k]``.  In CoMP
    mode ``mu_comp[u, c, k]`` is the efficiency of ``u`` when user group
    ``groups[c]`` is served jointly (zero if ``u`` is not in the group).
    """

    player: int
    n_players: int
    subsets: tuple
    mu: np.ndarray
    serving: np.ndarray
    users: np.ndarray | None = None
    groups: tuple | None = None
    mu_comp: np.ndarray | None = None

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).reshape(-1, len(self.subsets))
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "serving", np.asarray(self.serving, dtype=np.int64).reshape(mu.shape[0]))
        if self.users is None:
            object.__setattr__(self, "users", np.arange(mu.shape[0]))
        if (mu < 0).any():
            raise ConfigurationError("spectral efficiencies must be non-negative")

    @classmethod
    def from_arrays(cls, player, n_players, mu, serving=None, groups=None, mu_comp=None):
        """Table over the canonical subset order of ``player``."""
        subsets = subsets_containing(player, n_players)
        mu = np.asarray(mu, dtype=float).reshape(-1, len(subsets))
        serving = np.zeros(mu.shape[0], dtype=np.int64) if serving is None else serving
        if groups is not None:
            groups = tuple(tuple(int(u) for u in g) for g in groups)
            mu_comp = np.asarray(mu_comp, dtype=float)
        return cls(player, n_players, tuple(subsets), mu, serving, groups=groups, mu_comp=mu_comp)

    @property
    def n_users(self) -> int:
        return self.mu.shape[0]

    @property
    def comp_mode(self) -> bool:
        return self.groups is not None

    def index(self, subset: int) -> int:
        return self.subsets.index(int(subset))

    @cached_property
    def _columns(self):
        K = len(self.subsets)
        subs = np.asarray(self.subsets)
        if self.comp_mode:
            C = len(self.groups)
            eff = self.mu_comp.reshape(self.n_users, C * K)
            return np.tile(subs, C), np.full(C * K, COMP_GROUP), eff
        U = self.n_users
        eff = np.zeros((U, U * K))
        cols = np.arange(U)[:, None] * K + np.arange(K)[None, :]
        eff[np.arange(U)[:, None], cols] = self.mu
        return np.tile(subs, U), np.repeat(self.serving, K), eff

    def block(self, alpha: float, weight: float = 1.0) -> Block:
        subs, groups, eff = self._columns
        return Block(subsets=subs, groups=groups, eff=eff, alpha=float(alpha), weight=weight)

    def scaled(self, factor: float) -> "SpectralEfficiencyTable":
        comp = None if self.mu_comp is None else self.mu_comp * factor
        return SpectralEfficiencyTable(
            self.player, self.n_players, self.subsets, self.mu * factor, self.serving,
            users=self.users, groups=self.groups, mu_comp=comp,
        )


def _enumerate_groups(n_users: int, n_tx: int, cap: int):
    size = min(n_users, n_tx)
    count = sum(_ncr(n_users, k) for k in range(1, size + 1))
    if count > cap:
        raise ConfigurationError(f"{count} CoMP user groups exceed the cap of {cap}")
    return [g for k in range(1, size + 1) for g in combinations(range(n_users), k)]


def _ncr(n, k):
    from math import comb

    return comb(n, k)


def mu_table(scenario: Scenario, player: int, comp_mode: bool = False, max_groups: int = MAX_COMP_GROUPS):
    """Spectral-efficiency table of ``player`` for every subset containing it.

    In CoMP mode each user group is matched to distinct own transmitters by the
    assignment with the largest total efficiency (per subset); interference is
    the expected-value interference of the non-cooperative case.
    """
    subsets = subsets_containing(player, scenario.n_players)
    users = scenario.users_of(player)
    serving = scenario.serving[users]
    mu = spectral_efficiency(_sinr_matrix(scenario, users, subsets, serving)) if users.size else np.zeros((0, len(subsets)))
    table = SpectralEfficiencyTable(player, scenario.n_players, tuple(subsets), mu, serving, users=users)
    if not comp_mode:
        return table
    txs = scenario.transmitters_of(player)
    groups = _enumerate_groups(users.size, txs.size, max_groups)
    # efficiency of every user from every own transmitter: (V_n, U_n, K)
    per_tx = np.stack(
        [spectral_efficiency(_sinr_matrix(scenario, users, subsets, np.full(users.size, v))) for v in txs]
    ) if users.size else np.zeros((txs.size, 0, len(subsets)))
    K = len(subsets)
    mu_comp = np.zeros((users.size, len(groups), K))
    for c, group in enumerate(groups):
        g = list(group)
        for k in range(K):
            best, best_assign = -1.0, None
            for assign in permutations(range(txs.size), len(g)):
                total = per_tx[list(assign), g, k].sum()
                if total > best:
                    best, best_assign = total, assign
            mu_comp[g, c, k] = per_tx[list(best_assign), g, k]
    return SpectralEfficiencyTable(
        player, scenario.n_players, tuple(subsets), mu, serving, users=users,
        groups=tuple(tuple(g) for g in groups), mu_comp=mu_comp,
    )


@dataclass(frozen=True, eq=False)
class AllocationMatrix:
    """``w[row, k]``: resource of ``subsets[k]`` given to a user (or CoMP group)."""

    w: np.ndarray
    subsets: tuple
    rows: str = "users"


@dataclass(frozen=True, eq=False)
class UtilityResult:
    value: float
    allocation: AllocationMatrix
    rates: np.ndarray


def _check(player, b: AllocationPattern, table: SpectralEfficiencyTable):
    if table.player != player:
        raise ConfigurationError(f"table belongs to player {table.player}, not {player}")
    if b.n_players != table.n_players:
        raise ConfigurationError("pattern and table have different player counts")


def _utility(player, b, table, alpha, comp):
    _check(player, b, table)
    if comp and not table.comp_mode:
        raise ConfigurationError("table was not built in CoMP mode")
    if not comp and table.comp_mode:
        table = SpectralEfficiencyTable(player, table.n_players, table.subsets, table.mu, table.serving, users=table.users)
    K = len(table.subsets)
    rows = "groups" if comp else "users"
    if table.n_users == 0:
        return UtilityResult(0.0, AllocationMatrix(np.zeros((0, K)), table.subsets, rows), np.zeros(0))
    n_sub = 1 << b.n_players
    sol = solve_program(b.n_players, [table.block(alpha)], b.values, np.zeros(n_sub, dtype=bool))
    x = sol.x[0]
    w = x.reshape(-1, K)
    return UtilityResult(float(sol.values[0]), AllocationMatrix(w, table.subsets, rows), sol.rates[0])


def evaluate_utility(player: int, b: AllocationPattern, table: SpectralEfficiencyTable, alpha: float) -> UtilityResult:
    """Optimal alpha-fair schedule of ``player`` on pattern ``b``."""
    return _utility(player, b, table, alpha, comp=False)


def evaluate_utility_comp(player: int, b: AllocationPattern, table: SpectralEfficiencyTable, alpha: float) -> UtilityResult:
    """As :func:`evaluate_utility` with jointly served user groups.

    The operator splits each ``b_S`` over user groups, ``sum_c w_cS = b_S``.
    """
    return _utility(player, b, table, alpha, comp=True)


def marginal_values(table: SpectralEfficiencyTable, rates, alpha: float) -> np.ndarray:
    """Marginal utility of each pattern coordinate in ``table.subsets`` order.

    For each budget (transmitter or CoMP scheduler) the shadow price of
    ``b_S`` is the best column's ``sum_u f'(r_u) mu_u``; prices add up over
    budgets.
    """
    subs, groups, eff = table._columns
    served = (eff > 0).any(axis=1)
    rates = np.asarray(rates, dtype=float)
    with np.errstate(divide="ignore"):
        d1 = np.where(served, np.where(alpha == 0, 1.0, rates ** -float(alpha)), 0.0)
    col = d1 @ eff
    out = np.zeros(len(table.subsets))
    for k, s in enumerate(table.subsets):
        sel = subs == s
        for g in np.unique(groups[sel]):
            out[k] += col[sel & (groups == g)].max()
    return out


def utility_supergradient(player: int, b: AllocationPattern, table: SpectralEfficiencyTable, alpha: float) -> np.ndarray:
    """Supergradient of ``g_n`` at ``b`` as a dense vector over all subsets.

    Entries for subsets not containing the player are zero.
    """
    res = _utility(player, b, table, alpha, comp=table.comp_mode)
    if not np.isfinite(res.value):
        raise UndefinedGradientError("utility is -inf at this pattern")
    grad = marginal_values(table, res.rates, alpha)
    if not np.all(np.isfinite(grad)):
        raise UndefinedGradientError("a served user has zero rate")
    out = np.zeros(1 << b.n_players)
    out[list(table.subsets)] = grad
    return out


def utility_value(player, b, table, alpha) -> float:
    return _utility(player, b, table, alpha, comp=table.comp_mode).value


def build_tables(scenario: Scenario, comp_mode: bool = False):
    return [mu_table(scenario, n, comp_mode) for n in range(scenario.n_players)]
