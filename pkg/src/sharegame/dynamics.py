"""Sequential games: repeated greedy bidding with the outcome as the new default.

``run_mdsg`` plays the multi-dimensional game: every round each player bids
greedily over all subsets containing it, the bids are resolved, and the
outcome becomes the next default.  ``run_sdsg`` plays single-dimensional
rounds, one multi-player subset at a time, chosen by vote.

Convergence is declared when the resolved pattern moves less than
``epsilon`` (l1).  ``iterations_count`` is the number of rounds (or sweeps)
needed to reach the final pattern, at least one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .allocation import (
    MRG,
    RPG,
    AllocationPattern,
    Bid,
    ConfigurationError,
    contains,
    default_pattern,
    membership,
    multi_player_subsets,
    subset_sizes,
)
from .resolution import resolve
from .scenario import Scenario
from .scheduler import build_tables, utility_value
from .strategy import StrategyProblem, best_response_gain, solve_bid

MDSG = "MDSG"
SDSG = "SDSG"
MDSG_SDSG = "MDSG+SDSG"
MODES = (MDSG, SDSG, MDSG_SDSG)


@dataclass(frozen=True)
class GameConfig:
    kind: str = MRG
    mode: str = MDSG
    epsilon: float = 1e-6
    max_iterations: int = 100
    max_sweeps: int = 50
    alpha: float | tuple = 1.0
    comp_mode: bool = False
    seed: int = 0

    def __post_init__(self):
        if str(self.kind).upper() not in (MRG, RPG):
            raise ConfigurationError(f"unknown game kind {self.kind!r}")
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if not self.epsilon > 0:
            raise ConfigurationError("epsilon must be positive")
        if self.max_iterations < 1 or self.max_sweeps < 1:
            raise ConfigurationError("iteration caps must be at least 1")

    def alphas(self, n_players: int) -> tuple:
        if np.ndim(self.alpha) == 0:
            return (float(self.alpha),) * n_players
        if len(self.alpha) != n_players:
            raise ConfigurationError(f"need {n_players} alpha values, got {len(self.alpha)}")
        return tuple(float(a) for a in self.alpha)


@dataclass
class IterationRecord:
    bids: list
    pattern: AllocationPattern
    utilities: np.ndarray
    movement: float
    subset: int | None = None
    sweep: int | None = None


@dataclass
class GameTrace:
    mode: str
    initial: AllocationPattern
    iterations: list = field(default_factory=list)
    converged: bool = False
    iterations_count: int = 0

    @property
    def final(self) -> AllocationPattern:
        return self.iterations[-1].pattern if self.iterations else self.initial

    @property
    def movements(self) -> np.ndarray:
        return np.array([r.movement for r in self.iterations])

    def payoffs(self) -> np.ndarray:
        """``(rounds, N)`` utilities after every resolution."""
        return np.array([r.utilities for r in self.iterations])


def _as_tables(scenario_or_tables, comp_mode):
    if isinstance(scenario_or_tables, Scenario):
        return build_tables(scenario_or_tables, comp_mode)
    return list(scenario_or_tables)


def _utilities(b, tables, alphas, players=None, previous=None):
    out = np.array(previous, dtype=float) if previous is not None else np.zeros(len(tables))
    for n in range(len(tables)) if players is None else players:
        out[n] = utility_value(n, b, tables[n], alphas[n])
    return out


def run_mdsg(config: GameConfig, scenario, initial_b0: AllocationPattern | None = None) -> GameTrace:
    """Sequential multi-dimensional game.

    Greedy bids do not depend on the current default (only its tie-break
    does), so they are computed once against the initial default and
    re-submitted every round.
    """
    tables = _as_tables(scenario, config.comp_mode)
    n = len(tables)
    alphas = config.alphas(n)
    b = default_pattern(config.kind, n) if initial_b0 is None else initial_b0
    trace = GameTrace(MDSG, b)
    bids = [solve_bid(StrategyProblem(p, b, tables[p], alphas[p]))[0] for p in range(n)]
    last_moving = 0
    for i in range(1, config.max_iterations + 1):
        out = resolve(bids, b).pattern
        movement = out.distance(b)
        trace.iterations.append(IterationRecord(bids, out, _utilities(out, tables, alphas), movement))
        b = out
        if movement < config.epsilon:
            trace.converged = True
            break
        last_moving = i
    trace.iterations_count = max(1, last_moving) if trace.converged else last_moving
    return trace


def choose_subset_by_vote(preferences: dict, rng: np.random.Generator) -> int:
    """Draw a subset with probability proportional to its number of votes."""
    if not preferences:
        raise ConfigurationError("no votes to choose from")
    voted = sorted(set(int(s) for s in preferences.values()))
    counts = np.array([sum(1 for s in preferences.values() if int(s) == v) for v in voted], dtype=float)
    if len(voted) == 1:
        return voted[0]
    return voted[int(rng.choice(len(voted), p=counts / counts.sum()))]


class _RestrictedCache:
    """Restricted greedy bids keyed by the player's view of the default."""

    def __init__(self, tables, alphas):
        self.tables = tables
        self.alphas = alphas
        self._store = {}

    def get(self, player, subset, b):
        view = b.values[membership(b.n_players)[player]]
        key = (player, subset, view.tobytes())
        if key not in self._store:
            problem = StrategyProblem(player, b, self.tables[player], self.alphas[player], restriction=subset)
            self._store[key] = solve_bid(problem)
        return self._store[key]


def run_sdsg(
    config: GameConfig,
    scenario,
    initial_b0: AllocationPattern | None = None,
    rng: np.random.Generator | None = None,
) -> GameTrace:
    """Sequential single-dimensional subset game.

    Each sweep plays every multi-player subset once, in an order agreed by
    voting: every player proposes the remaining subset with the largest ideal
    single-dimensional improvement for it.
    """
    tables = _as_tables(scenario, config.comp_mode)
    n = len(tables)
    alphas = config.alphas(n)
    rng = np.random.default_rng(config.seed) if rng is None else rng
    b = default_pattern(config.kind, n) if initial_b0 is None else initial_b0
    trace = GameTrace(SDSG, b)
    cache = _RestrictedCache(tables, alphas)
    utils = _utilities(b, tables, alphas)
    last_moving = 0
    for sweep in range(1, config.max_sweeps + 1):
        start = b
        remaining = list(multi_player_subsets(n))
        while remaining:
            prefs = {}
            for p in range(n):
                best, best_gain = None, -np.inf
                for S in remaining:
                    if not contains(S, p):
                        continue
                    gain = cache.get(p, S, b)[1] - utils[p]
                    if gain > best_gain:
                        best, best_gain = S, gain
                if best is not None:
                    prefs[p] = best
            S = choose_subset_by_vote(prefs, rng)
            bids = [cache.get(p, S, b)[0] if contains(S, p) else Bid.default(p, b) for p in range(n)]
            out = resolve(bids, b).pattern
            movement = out.distance(b)
            members_ = [p for p in range(n) if contains(S, p)]
            utils = _utilities(out, tables, alphas, players=members_, previous=utils)
            trace.iterations.append(IterationRecord(bids, out, utils.copy(), movement, subset=S, sweep=sweep))
            b = out
            remaining.remove(S)
        if start.distance(b) < config.epsilon:
            trace.converged = True
            break
        last_moving = sweep
    trace.iterations_count = max(1, last_moving) if trace.converged else last_moving
    return trace


@dataclass
class GameOutcome:
    pattern: AllocationPattern
    traces: dict
    bids: list


def play(config: GameConfig, scenario, rng: np.random.Generator | None = None) -> GameOutcome:
    """Run the configured mode and return the final pattern with its traces."""
    traces = {}
    b = None
    if config.mode in (MDSG, MDSG_SDSG):
        traces[MDSG] = run_mdsg(config, scenario)
        b = traces[MDSG].final
    if config.mode in (SDSG, MDSG_SDSG):
        traces[SDSG] = run_sdsg(config, scenario, initial_b0=b, rng=rng)
        b = traces[SDSG].final
    last = traces[SDSG] if SDSG in traces else traces[MDSG]
    bids = last.iterations[-1].bids if last.iterations else []
    return GameOutcome(b, traces, bids)


def verify_nash(bids, b0: AllocationPattern, tables, alphas) -> dict:
    """Best-response gain of every player for the profile ``(bids, b0)``."""
    bids = list(bids)
    return {p: best_response_gain(p, bids, b0, tables, alphas) for p in range(len(tables))}


def is_epsilon_nash(gains: dict, eps: float) -> bool:
    return all(g <= eps for g in gains.values())


def mdsg_fixed_point_profile(trace: GameTrace):
    """Bids and default at the end of an MDSG run (the profile to check)."""
    return trace.iterations[-1].bids, trace.final
