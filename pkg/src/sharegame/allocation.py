"""Subset-indexed allocation algebra.

A pattern over ``N`` players is a dense vector of length ``2**N``.  Entry ``S``
is the fraction of the unit resource shared by the players whose bits are set
in ``S`` (bit ``n`` set means player ``n`` belongs to the subset).  Entry 0 is
the empty set and is always pinned to zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_PLAYERS = 10
FEASIBILITY_TOL = 1e-9

MRG = "MRG"
RPG = "RPG"


class ConfigurationError(ValueError):
    """Raised for invalid sizes, indices or option values."""


def _check_n(n_players: int) -> int:
    n_players = int(n_players)
    if n_players < 2:
        raise ConfigurationError(f"need at least 2 players, got {n_players}")
    if n_players > MAX_PLAYERS:
        raise ConfigurationError(f"{n_players} players exceeds the cap of {MAX_PLAYERS}")
    return n_players


def contains(subset: int, player: int) -> bool:
    return bool((int(subset) >> int(player)) & 1)


def members(subset: int) -> tuple[int, ...]:
    subset = int(subset)
    return tuple(n for n in range(subset.bit_length()) if (subset >> n) & 1)


def subset_of(players) -> int:
    """Integer id of the set of the given player indices."""
    out = 0
    for n in players:
        out |= 1 << int(n)
    return out


def subset_label(subset: int) -> str:
    """Human readable label, 1-based like ``{1,2}``."""
    return "{" + ",".join(str(n + 1) for n in members(subset)) + "}"


@lru_cache(maxsize=None)
def subset_sizes(n_players: int) -> np.ndarray:
    """``|S|`` for every subset id (read-only)."""
    sizes = np.array([bin(s).count("1") for s in range(1 << n_players)], dtype=np.int64)
    sizes.setflags(write=False)
    return sizes


@lru_cache(maxsize=None)
def membership(n_players: int) -> np.ndarray:
    """Boolean ``(N, 2**N)`` matrix, ``[n, S]`` true iff ``n in S``."""
    ids = np.arange(1 << n_players)
    m = ((ids[None, :] >> np.arange(n_players)[:, None]) & 1).astype(bool)
    m.setflags(write=False)
    return m


@lru_cache(maxsize=None)
def reciprocity_matrix(n_players: int) -> np.ndarray:
    """Rows give each player's share ``sum_{S ∋ n} b_S / |S|``."""
    sizes = subset_sizes(n_players).astype(float)
    sizes[0] = np.inf
    a = membership(n_players) / sizes[None, :]
    a.setflags(write=False)
    return a


@lru_cache(maxsize=None)
def _containing(player: int, n_players: int) -> tuple[int, ...]:
    # canonical order: by size, then by id
    sizes = subset_sizes(n_players)
    ids = [s for s in range(1 << n_players) if (s >> player) & 1]
    return tuple(sorted(ids, key=lambda s: (sizes[s], s)))


def subsets_containing(player: int, n_players: int) -> tuple[int, ...]:
    """The ``2**(N-1)`` subsets that contain ``player``, smallest first."""
    n_players = _check_n(n_players)
    if not 0 <= int(player) < n_players:
        raise ConfigurationError(f"player {player} out of range for N={n_players}")
    return _containing(int(player), n_players)


def multi_player_subsets(n_players: int) -> tuple[int, ...]:
    """All subsets with at least two members, smallest first."""
    sizes = subset_sizes(n_players)
    ids = [s for s in range(1 << n_players) if sizes[s] > 1]
    return tuple(sorted(ids, key=lambda s: (sizes[s], s)))


@dataclass(frozen=True, eq=False)
class AllocationPattern:
    """Fractions of the unit resource per subset, ``values[S] = b_S``."""

    n_players: int
    values: np.ndarray

    def __post_init__(self):
        n = _check_n(self.n_players)
        v = np.array(self.values, dtype=float)
        if v.shape != (1 << n,):
            raise ConfigurationError(f"pattern for N={n} needs {1 << n} entries, got {v.shape}")
        if v[0] != 0.0:
            raise ConfigurationError("the empty subset must carry zero resource")
        v.setflags(write=False)
        object.__setattr__(self, "n_players", n)
        object.__setattr__(self, "values", v)

    def __getitem__(self, subset: int) -> float:
        return float(self.values[subset])

    def __repr__(self):
        parts = [f"{subset_label(s)}={v:.6g}" for s, v in enumerate(self.values) if s and v != 0.0]
        return f"AllocationPattern(N={self.n_players}, " + ", ".join(parts) + ")"

    @classmethod
    def from_dict(cls, n_players: int, mapping) -> "AllocationPattern":
        """Build from ``{subset_id: value}``; missing subsets are zero."""
        v = np.zeros(1 << int(n_players))
        for s, x in mapping.items():
            v[int(s)] = x
        return cls(n_players, v)

    @property
    def total(self) -> float:
        return float(self.values.sum())

    def restricted(self, player: int) -> np.ndarray:
        """Copy of the values with subsets not containing ``player`` set to NaN."""
        out = np.where(membership(self.n_players)[player], self.values, np.nan)
        return out

    def distance(self, other: "AllocationPattern") -> float:
        """l1 distance between two patterns."""
        return float(np.abs(self.values - other.values).sum())


@dataclass(frozen=True, eq=False)
class Bid:
    """A player's preferred pattern on the subsets containing it.

    Entries for subsets that do not contain the player are NaN (the void value).
    """

    player: int
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        n = _check_n(int(v.size).bit_length() - 1)
        if v.size != 1 << n:
            raise ConfigurationError("bid length must be a power of two")
        p = int(self.player)
        if not 0 <= p < n:
            raise ConfigurationError(f"player {p} out of range for N={n}")
        mask = membership(n)[p]
        if np.isnan(v[mask]).any():
            raise ConfigurationError("bid must give a value for every subset containing the player")
        v[~mask] = np.nan
        v.setflags(write=False)
        object.__setattr__(self, "player", p)
        object.__setattr__(self, "values", v)

    @property
    def n_players(self) -> int:
        return int(self.values.size).bit_length() - 1

    def __getitem__(self, subset: int) -> float:
        return float(self.values[subset])

    def __repr__(self):
        parts = [f"{subset_label(s)}={v:.6g}" for s, v in enumerate(self.values) if not np.isnan(v)]
        return f"Bid(player={self.player + 1}, " + ", ".join(parts) + ")"

    @classmethod
    def from_dict(cls, player: int, n_players: int, mapping) -> "Bid":
        v = np.full(1 << int(n_players), np.nan)
        v[membership(int(n_players))[int(player)]] = 0.0
        for s, x in mapping.items():
            v[int(s)] = x
        return cls(player, v)

    @classmethod
    def default(cls, player: int, b0: AllocationPattern) -> "Bid":
        """Bid that simply repeats the default (abstention)."""
        return cls(player, b0.restricted(player))

    def share(self) -> float:
        """``sum_{S ∋ n} a_S / |S|``; equals ``1/N`` for a valid bid."""
        mask = membership(self.n_players)[self.player]
        sizes = subset_sizes(self.n_players)
        return float((self.values[mask] / sizes[mask]).sum())

    def is_valid(self, tol: float = FEASIBILITY_TOL) -> bool:
        mask = membership(self.n_players)[self.player]
        vals = self.values[mask]
        return bool((vals >= -tol).all() and abs(self.share() - 1.0 / self.n_players) <= tol)


@dataclass(frozen=True, eq=False)
class BidBox:
    """Per-subset closed intervals allowed by one player's bid.

    ``lo``/``hi`` are ``-inf``/``+inf`` on subsets not containing the player.
    """

    player: int
    lo: np.ndarray
    hi: np.ndarray

    def contains(self, b: AllocationPattern, tol: float = 0.0) -> bool:
        v = b.values
        return bool(((v >= self.lo - tol) & (v <= self.hi + tol)).all())


def default_pattern(kind: str, n_players: int) -> AllocationPattern:
    """Mutual renting (private singletons) or resource pool (all shared)."""
    n = _check_n(n_players)
    v = np.zeros(1 << n)
    kind = str(kind).upper()
    if kind == MRG:
        v[subset_sizes(n) == 1] = 1.0 / n
    elif kind == RPG:
        v[(1 << n) - 1] = 1.0
    else:
        raise ConfigurationError(f"unknown default pattern kind {kind!r}")
    return AllocationPattern(n, v)


def reciprocity_shares(b: AllocationPattern) -> np.ndarray:
    """Favor given/taken by each player, ``sum_{S ∋ n} b_S / |S|``."""
    return reciprocity_matrix(b.n_players) @ b.values


def is_feasible(b: AllocationPattern, tol: float = FEASIBILITY_TOL) -> bool:
    if (b.values < -tol).any():
        return False
    return bool(np.all(np.abs(reciprocity_shares(b) - 1.0 / b.n_players) <= tol))


def bid_box(bid: Bid, b0: AllocationPattern) -> BidBox:
    if bid.n_players != b0.n_players:
        raise ConfigurationError("bid and default pattern have different player counts")
    mask = membership(b0.n_players)[bid.player]
    lo = np.full(b0.values.size, -np.inf)
    hi = np.full(b0.values.size, np.inf)
    lo[mask] = np.minimum(bid.values[mask], b0.values[mask])
    hi[mask] = np.maximum(bid.values[mask], b0.values[mask])
    return BidBox(bid.player, lo, hi)


def random_bid(player: int, n_players: int, rng: np.random.Generator, concentration: float = 1.0) -> Bid:
    """Uniform-ish random point of the player's strategy set (testing helper)."""
    n = _check_n(n_players)
    subsets = np.array(subsets_containing(player, n))
    weights = rng.dirichlet(np.full(subsets.size, concentration))
    v = np.full(1 << n, np.nan)
    v[subsets] = weights * subset_sizes(n)[subsets] / n
    return Bid(player, v)
