"""Small dense linear programs with finite variable bounds.

The resolution programs have at most ``2**N`` variables and ``N + 1`` equality
rows, so a textbook bounded-variable primal simplex with Bland's rule is both
fast and exact enough (basic values are recomputed from a fresh factorization
every pivot).  ``project_box_affine`` is the l2 tie-break used on degenerate
optimal faces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SolverError(RuntimeError):
    """A numerical routine failed to reach its termination criterion."""


class InfeasibleError(SolverError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    basis: np.ndarray
    reduced_costs: np.ndarray
    iterations: int
    dual_degenerate: bool


_PIVOT_TOL = 1e-11


def _simplex(A, c, lo, hi, x, basis, tol, max_iter):
    m, n = A.shape
    is_basic = np.zeros(n, dtype=bool)
    is_basic[basis] = True
    movable = hi - lo > 0
    rhs = A @ x  # invariant: A x = rhs throughout
    for it in range(max_iter):
        # m is tiny, so one explicit inverse per pivot beats three solves
        B_inv = np.linalg.inv(A[:, basis])
        nonbasic = ~is_basic
        x_n = np.where(nonbasic, x, 0.0)
        x[basis] = B_inv @ (rhs - A @ x_n)
        d = c - A.T @ (B_inv.T @ c[basis])
        at_upper = nonbasic & (x >= hi)
        improving = nonbasic & movable & (((d > tol) & ~at_upper) | ((d < -tol) & at_upper))
        candidates = np.flatnonzero(improving)
        if candidates.size == 0:
            return x, basis, d, it
        j = candidates[0]  # Bland
        s = -1.0 if at_upper[j] else 1.0
        col = (B_inv @ A[:, j]) * s
        # basic values change by -t * col
        t_best = hi[j] - lo[j]
        leave = -1
        leave_to_upper = False
        xb = x[basis]
        for i in np.argsort(basis, kind="stable"):
            a = col[i]
            if a > _PIVOT_TOL:
                t = (xb[i] - lo[basis[i]]) / a
                to_upper = False
            elif a < -_PIVOT_TOL:
                t = (hi[basis[i]] - xb[i]) / -a
                to_upper = True
            else:
                continue
            t = max(t, 0.0)
            if t < t_best - 1e-15:
                t_best, leave, leave_to_upper = t, i, to_upper
        if not np.isfinite(t_best):
            raise SolverError("linear program is unbounded")
        x[j] += s * t_best
        x[basis] -= t_best * col
        if leave < 0:
            x[j] = hi[j] if s > 0 else lo[j]
            continue
        r = basis[leave]
        x[r] = hi[r] if leave_to_upper else lo[r]
        is_basic[r] = False
        is_basic[j] = True
        basis[leave] = j
    raise SolverError(f"simplex did not terminate in {max_iter} pivots")


def _is_basic_feasible(A, b, lo, hi, x, basis, tol=1e-12):
    nonbasic = np.ones(x.size, dtype=bool)
    nonbasic[basis] = False
    at_bound = (x == lo) | (x == hi)
    return (
        bool(at_bound[nonbasic].all())
        and bool(((x >= lo - tol) & (x <= hi + tol)).all())
        and bool(np.abs(A @ x - b).max() <= tol)
        and abs(np.linalg.det(A[:, basis])) > _PIVOT_TOL
    )


def solve_bounded_lp(c, A_eq, b_eq, lo, hi, tol: float = 1e-11, start=None) -> LPResult:
    """Maximize ``c @ x`` subject to ``A_eq x = b_eq`` and ``lo <= x <= hi``.

    All bounds must be finite.  ``start = (x, basis)`` skips phase one when it
    is a basic feasible solution (nonbasic variables exactly at a bound).
    """
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A_eq, dtype=float))
    b = np.asarray(b_eq, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    m, n = A.shape
    if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
        raise ValueError("bounded simplex requires finite bounds")
    if (lo > hi).any():
        raise InfeasibleError("lower bound above upper bound")
    max_iter = 50 * (n + m) + 100

    if start is not None:
        x0, basis0 = np.array(start[0], dtype=float), np.array(start[1], dtype=np.intp)
        if basis0.size == m and _is_basic_feasible(A, b, lo, hi, x0, basis0):
            x, basis, d, it = _simplex(A, c, lo, hi, x0, basis0, tol, max_iter)
            return _result(c, lo, hi, x, basis, d, it, tol)

    x = lo.copy()
    resid = b - A @ x
    sign = np.where(resid >= 0, 1.0, -1.0)
    A1 = np.hstack([A, np.diag(sign)])
    lo1 = np.concatenate([lo, np.zeros(m)])
    hi1 = np.concatenate([hi, np.full(m, np.abs(resid).sum() + 1.0)])
    x1 = np.concatenate([x, np.abs(resid)])
    basis = np.arange(n, n + m)
    c1 = np.concatenate([np.zeros(n), -np.ones(m)])
    x1, basis, _, it1 = _simplex(A1, c1, lo1, hi1, x1, basis, tol, max_iter)
    infeas = x1[n:].sum()
    if infeas > 1e-9 * (1.0 + np.abs(b).sum()):
        raise InfeasibleError(f"equality system infeasible within bounds (residual {infeas:.3g})")

    # artificials are frozen at zero for phase two; any left basic stay degenerate
    hi1[n:] = 0.0
    x1[n:] = 0.0
    c2 = np.concatenate([c, np.zeros(m)])
    x1, basis, d, it2 = _simplex(A1, c2, lo1, hi1, x1, basis, tol, max_iter)
    return _result(c, lo1[:n], hi1[:n], x1[:n], basis, d[:n], it1 + it2, tol)


def _result(c, lo, hi, x, basis, d, iterations, tol):
    n = c.size
    x = np.clip(x, lo, hi)
    nonbasic = np.ones(n, dtype=bool)
    nonbasic[basis[basis < n]] = False
    movable = (hi - lo) > 0
    flat = nonbasic & movable & (np.abs(d) <= max(tol, 1e-10))
    return LPResult(
        x=x,
        objective=float(c @ x),
        basis=basis.copy(),
        reduced_costs=d,
        iterations=iterations,
        dual_degenerate=bool(flat.any()),
    )


def project_box_affine(x0, G, g, lo, hi, start, tol: float = 1e-12, max_iter: int | None = None) -> np.ndarray:
    """Euclidean projection of ``x0`` onto ``{lo <= x <= hi, G x = g}``.

    Primal active-set method started from the feasible point ``start``.  The
    equality-constrained subproblems are plain affine projections, solved by
    least squares so that redundant rows in ``G`` are harmless.
    """
    x0 = np.asarray(x0, dtype=float)
    G = np.atleast_2d(np.asarray(G, dtype=float))
    g = np.asarray(g, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    x = np.clip(np.asarray(start, dtype=float), lo, hi)
    n = x.size
    if np.abs(G @ x - g).max(initial=0.0) > 1e-8 * (1.0 + np.abs(g).max(initial=0.0)):
        raise SolverError("projection start point violates the equalities")
    max_iter = 20 * n + 50 if max_iter is None else max_iter
    # working set: +1 at upper bound, -1 at lower bound, 0 free
    at = np.zeros(n, dtype=np.int8)
    fixed = hi - lo <= tol
    at[fixed | (x <= lo + tol)] = -1
    at[~fixed & (x >= hi - tol)] = 1
    for _ in range(max_iter):
        F = at == 0
        target = x.copy()
        if F.any():
            GF = G[:, F]
            r = g - G[:, ~F] @ x[~F]
            mu = np.linalg.lstsq(GF @ GF.T, GF @ x0[F] - r, rcond=None)[0]
            target[F] = x0[F] - GF.T @ mu
        else:
            mu = np.zeros(G.shape[0])
        d = target - x
        if np.abs(d).max(initial=0.0) <= tol:
            # multipliers of the active bounds
            z = (x - x0) + G.T @ mu
            viol = np.where(fixed, 0.0, np.where(at == -1, -z, np.where(at == 1, z, 0.0)))
            k = int(np.argmax(viol))
            if viol[k] <= tol:
                return x
            at[k] = 0
            continue
        # longest step keeping the free variables inside their bounds
        step, block = 1.0, -1
        for i in np.flatnonzero(F & (np.abs(d) > 0)):
            lim = (hi[i] - x[i]) / d[i] if d[i] > 0 else (lo[i] - x[i]) / d[i]
            if lim < step:
                step, block = max(lim, 0.0), i
        x = x + step * d
        if block >= 0:
            x[block] = hi[block] if d[block] > 0 else lo[block]
            at[block] = 1 if d[block] > 0 else -1
    raise SolverError("projection onto box/affine set did not converge")
