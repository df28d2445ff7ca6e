"""The a-priori resolution rule merging joint bids into an agreed pattern.

The agreed pattern maximizes the total l1 movement away from the default
while staying feasible and inside every bidder's box.  On the feasible set the
absolute values are sign-definite per subset, so the rule is a linear program:

    maximize   sum_S alpha_S (b_S - b0_S)
    subject to sum_{S ∋ n} b_S / |S| = 1/N,  b >= 0,  b in every bid box

``alpha_S`` is +1 when every member of ``S`` bids above the default on ``S``,
-1 when every member bids below it, and 0 otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .allocation import (
    AllocationPattern,
    Bid,
    ConfigurationError,
    membership,
    reciprocity_matrix,
)
from .lp import InfeasibleError, project_box_affine, solve_bounded_lp

SNAP_TOL = 1e-12


class ResolutionError(RuntimeError):
    """The resolution program was infeasible although its inputs were valid."""


@dataclass(frozen=True, eq=False)
class SignCoefficients:
    alpha: np.ndarray  # int8, one entry per subset

    def __getitem__(self, subset: int) -> int:
        return int(self.alpha[subset])


@dataclass(frozen=True, eq=False)
class ResolutionOutcome:
    pattern: AllocationPattern
    objective: float
    unique: bool
    lo: np.ndarray
    hi: np.ndarray


def _bid_matrix(bids, b0: AllocationPattern) -> np.ndarray:
    """``(N, 2**N)`` array of bid values, NaN where void."""
    n = b0.n_players
    bids = list(bids)
    players = sorted(b.player for b in bids)
    if players != list(range(n)):
        raise ConfigurationError(f"expected exactly one bid per player 0..{n - 1}, got players {players}")
    out = np.empty((n, 1 << n))
    for b in bids:
        if b.n_players != n:
            raise ConfigurationError("bid and default pattern have different player counts")
        out[b.player] = b.values
    return out


def _snapped_diff(a: np.ndarray, b0: AllocationPattern) -> np.ndarray:
    diff = a - b0.values[None, :]
    diff[np.abs(diff) <= SNAP_TOL] = 0.0
    return diff


def sign_coefficients(bids, b0: AllocationPattern) -> SignCoefficients:
    a = _bid_matrix(bids, b0)
    return SignCoefficients(_signs(a, b0))


def _signs(a: np.ndarray, b0: AllocationPattern) -> np.ndarray:
    m = membership(b0.n_players)
    diff = _snapped_diff(a, b0)
    up = np.where(m, diff > 0, True).all(axis=0)
    down = np.where(m, diff < 0, True).all(axis=0)
    alpha = np.zeros(b0.values.size, dtype=np.int8)
    alpha[up] = 1
    alpha[down] = -1
    alpha[0] = 0
    return alpha


def box_bounds(bids, b0: AllocationPattern, skip_player: int | None = None):
    """Intersection of the bid boxes with ``b >= 0`` as per-subset bounds.

    ``skip_player`` leaves that player's box out (used for best responses).
    Bid values within ``SNAP_TOL`` of the default count as equal to it.
    """
    a = _bid_matrix(bids, b0)
    return _bounds(a, b0, skip_player)


def _bounds(a: np.ndarray, b0: AllocationPattern, skip_player=None):
    m = membership(b0.n_players).copy()
    if skip_player is not None:
        m[skip_player] = False
    a = b0.values[None, :] + _snapped_diff(a, b0)
    low = np.minimum(a, b0.values[None, :])
    high = np.maximum(a, b0.values[None, :])
    lo = np.where(m, low, -np.inf).max(axis=0)
    hi = np.where(m, high, np.inf).min(axis=0)
    lo = np.maximum(lo, 0.0)
    lo[0] = hi[0] = 0.0
    return lo, hi


def resolve(bids, b0: AllocationPattern) -> ResolutionOutcome:
    """Agreed pattern for a complete bid profile against default ``b0``.

    When the optimal face is not a single vertex the point closest (l2) to
    ``b0`` is returned and ``unique`` is False.
    """
    a = _bid_matrix(bids, b0)
    n = b0.n_players
    alpha = _signs(a, b0).astype(float)
    lo, hi = _bounds(a, b0)
    # mixed signs leave an empty interval only through rounding; pin to default
    bad = lo > hi
    lo[bad] = hi[bad] = b0.values[bad]
    hi = np.where(np.isfinite(hi), hi, 1.0 * n)
    A = reciprocity_matrix(n)
    rhs = np.full(n, 1.0 / n)
    try:
        # the default lies on a bound of every box and the singleton columns
        # form an identity basis, so it is a basic feasible starting point
        singletons = [1 << p for p in range(n)]
        res = solve_bounded_lp(alpha, A, rhs, lo, hi, start=(b0.values, singletons))
    except InfeasibleError as exc:
        raise ResolutionError(f"resolution program infeasible: {exc}") from exc
    x = res.x
    unique = not res.dual_degenerate
    if not unique:
        G = np.vstack([A, alpha])
        g = np.concatenate([rhs, [alpha @ x]])
        x = project_box_affine(b0.values, G, g, lo, hi, start=x)
    x = np.clip(x, lo, hi)
    x[0] = 0.0
    pattern = AllocationPattern(n, x)
    return ResolutionOutcome(
        pattern=pattern,
        objective=float(np.abs(x - b0.values).sum()),
        unique=unique,
        lo=lo,
        hi=hi,
    )
