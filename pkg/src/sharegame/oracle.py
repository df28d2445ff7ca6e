"""Brute-force reference solvers for small instances.

These are deliberately naive: vertex enumeration for the resolution program
and a general-purpose constrained optimizer for the per-operator schedule.
They serve as cross-checks, not as production code paths.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np
from scipy.optimize import minimize

from .allocation import AllocationPattern, reciprocity_matrix

MAX_ORACLE_PLAYERS = 3


def resolve_by_vertices(bids, b0: AllocationPattern, tol: float = 1e-9):
    """Best vertex of the resolution polytope; returns ``(values, objective)``.

    Every vertex is the unique solution of the equalities plus ``d - m``
    active bounds, ``d`` variables and ``m`` equalities.  All such systems are
    solved and the feasible ones compared.
    """
    n = b0.n_players
    if n > MAX_ORACLE_PLAYERS:
        raise ValueError(f"vertex enumeration is limited to N <= {MAX_ORACLE_PLAYERS}")
    alpha, lo, hi = _program_data(bids, b0)
    A = reciprocity_matrix(n)[:, 1:]
    rhs = np.full(n, 1.0 / n)
    lo, hi, c, x0 = lo[1:], hi[1:], alpha[1:], b0.values[1:]
    d = A.shape[1]
    bounds = [(j, lo[j]) for j in range(d)] + [(j, hi[j]) for j in range(d)]
    best, best_x = -np.inf, None
    for active in combinations(bounds, d - n):
        idx = [j for j, _ in active]
        if len(set(idx)) < len(idx):
            continue
        M = np.vstack([A, np.eye(d)[idx]])
        r = np.concatenate([rhs, [v for _, v in active]])
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, r)
        if (x < lo - tol).any() or (x > hi + tol).any():
            continue
        val = float(c @ (x - x0))
        if val > best:
            best, best_x = val, x
    if best_x is None:
        raise ValueError("resolution polytope has no vertex")
    return np.concatenate([[0.0], best_x]), best


def _program_data(bids, b0: AllocationPattern, snap: float = 1e-12):
    """Sign coefficients and box bounds, straight from their definitions."""
    n = b0.n_players
    by_player = {b.player: b for b in bids}
    size = 1 << n
    alpha = np.zeros(size)
    lo = np.zeros(size)
    hi = np.zeros(size)
    for S in range(1, size):
        d0 = b0.values[S]
        diffs, lows, highs = [], [], []
        for p in range(n):
            if not S >> p & 1:
                continue
            a = by_player[p].values[S]
            if abs(a - d0) <= snap:
                a = d0
            diffs.append(a - d0)
            lows.append(min(a, d0))
            highs.append(max(a, d0))
        if all(x > 0 for x in diffs):
            alpha[S] = 1.0
        elif all(x < 0 for x in diffs):
            alpha[S] = -1.0
        lo[S] = max(max(lows), 0.0)
        hi[S] = min(highs)
    return alpha, lo, hi


def schedule_by_slsqp(mu, b_sub, alpha: float, serving=None):
    """Schedule utility of one operator by a generic SLSQP solve.

    ``mu`` is ``(U, K)``, ``b_sub`` the ``K`` pattern values; every user may
    only draw from its serving transmitter's copy of each coordinate.
    Returns the utility value.
    """
    mu = np.asarray(mu, dtype=float)
    b_sub = np.asarray(b_sub, dtype=float)
    U, K = mu.shape
    serving = np.zeros(U, dtype=int) if serving is None else np.asarray(serving)
    served = (mu > 0).any(axis=1)
    if not served.any():
        return 0.0
    groups = np.unique(serving)

    # feasible interior start: equal split within each transmitter
    x0 = np.zeros((U, K))
    for g in groups:
        sel = serving == g
        x0[sel] = b_sub / sel.sum()

    def rates(x):
        return (x.reshape(U, K) * mu).sum(axis=1)

    def f(rate):
        rate = np.maximum(rate, 1e-300)
        return np.log(rate) if alpha == 1 else rate ** (1 - alpha) / (1 - alpha)

    def neg(x):
        return -float(f(rates(x)[served]).sum())

    cons = []
    for g in groups:
        sel = serving == g
        for k in range(K):
            row = np.zeros((U, K))
            row[sel, k] = 1.0
            cons.append({"type": "eq", "fun": lambda x, r=row.ravel(), k=k: r @ x - b_sub[k]})
    res = minimize(
        neg, x0.ravel(), method="SLSQP", bounds=[(0.0, None)] * (U * K),
        constraints=cons, options={"ftol": 1e-12, "maxiter": 500},
    )
    return -float(res.fun)


def run_oracle_checks(trials: int, seed: int):
    """Compare the production resolution rule with vertex enumeration.

    Returns a list of per-trial records ``(N, production, oracle, feasible)``.
    """
    from .allocation import is_feasible, random_bid
    from .resolution import resolve

    rng = np.random.default_rng(seed)
    out = []
    for t in range(trials):
        n = 2 + t % 2
        b0 = _random_pattern(n, rng)
        bids = [random_bid(p, n, rng) for p in range(n)]
        prod = resolve(bids, b0)
        _, obj = resolve_by_vertices(bids, b0)
        lo, hi = prod.lo, prod.hi
        inside = bool(((prod.pattern.values >= lo - 1e-9) & (prod.pattern.values <= hi + 1e-9)).all())
        out.append((n, prod.objective, obj, is_feasible(prod.pattern) and inside))
    return out


def _random_pattern(n, rng):
    """Random feasible pattern: a convex mix of the two defaults and a random bid profile outcome."""
    from .allocation import default_pattern, random_bid
    from .resolution import resolve

    base = default_pattern("MRG" if rng.random() < 0.5 else "RPG", n)
    if rng.random() < 0.3:
        return base
    bids = [random_bid(p, n, rng) for p in range(n)]
    return resolve(bids, base).pattern
