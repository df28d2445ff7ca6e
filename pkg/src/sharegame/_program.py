"""Primal-dual interior point solver for alpha-fair sum-utility programs.

Every optimization in the package has the same shape: some pattern
coordinates ``b_S`` are decision variables (with bounds and linear equality
rows), and each operator splits every ``b_S`` among allocation columns::

    maximize   sum_blocks weight * sum_u f_alpha(r_u)  -  rho/2 ||b - ref||^2
    subject to sum_{columns j in (group, S)} x_j = b_S   for every group, S
               equality rows on b,  lo <= b <= hi,  x >= 0
               r = E x

Upper bounds become slack columns, lower bounds a shift, and the resulting
standard form ``min phi(z)  s.t.  A z = r, z >= 0`` is solved with a
Mehrotra predictor-corrector on the full (dense) KKT system.  Problem sizes
are a few hundred variables at most.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .lp import SolverError

# pattern coordinates fixed at or below this carry no resource
DROP_TOL = 1e-14


@dataclass
class Block:
    """One operator's allocation columns.

    ``subsets[j]`` is the pattern coordinate column ``j`` draws from,
    ``groups[j]`` the transmitter (or CoMP scheduler) whose budget it uses,
    ``eff[u, j]`` the spectral efficiency it gives user ``u``.
    """

    subsets: np.ndarray
    groups: np.ndarray
    eff: np.ndarray
    alpha: float
    weight: float = 1.0


@dataclass
class ProgramSolution:
    b: np.ndarray
    x: list
    rates: list
    values: np.ndarray
    iterations: int


def fair_value(rate, alpha):
    rate = np.asarray(rate, dtype=float)
    with np.errstate(divide="ignore"):
        if alpha == 1.0:
            return np.log(rate)
        return rate ** (1.0 - alpha) / (1.0 - alpha)


def block_value(block: Block, rates: np.ndarray) -> float:
    """Exact utility of a block; users with an all-zero efficiency row are skipped."""
    served = (block.eff > 0).any(axis=1)
    if not served.any():
        return 0.0
    return float(fair_value(rates[served], block.alpha).sum())


def solve_program(
    n_players: int,
    blocks,
    b_fixed,
    free,
    lo=None,
    hi=None,
    eq_rows=None,
    eq_rhs=None,
    rho: float = 0.0,
    ref=None,
    tol: float = 1e-12,
    max_iter: int = 300,
) -> ProgramSolution:
    n_sub = 1 << n_players
    b_fixed = np.asarray(b_fixed, dtype=float)
    free = np.asarray(free, dtype=bool).copy()
    free[0] = False
    lo = np.zeros(n_sub) if lo is None else np.maximum(np.asarray(lo, dtype=float), 0.0)
    hi = np.full(n_sub, np.inf) if hi is None else np.asarray(hi, dtype=float)
    # a free coordinate with a degenerate interval is really fixed
    pinned = free & (hi - lo <= 0)
    b_fixed = np.where(pinned, lo, b_fixed)
    free &= ~pinned

    free_ids = np.flatnonzero(free)
    nb = free_ids.size
    pos_b = -np.ones(n_sub, dtype=np.int64)
    pos_b[free_ids] = np.arange(nb)
    bounded = free_ids[np.isfinite(hi[free_ids])]
    ns = bounded.size

    # columns kept per block
    kept, offsets = [], []
    nx = 0
    for blk in blocks:
        sub = np.asarray(blk.subsets)
        keep = free[sub] | (b_fixed[sub] > DROP_TOL)
        kept.append(np.flatnonzero(keep))
        offsets.append(nb + ns + nx)
        nx += kept[-1].size
    n = nb + ns + nx

    rows, rhs = [], []
    # budget rows
    for blk, kk, off in zip(blocks, kept, offsets):
        if kk.size == 0:
            continue
        sub = np.asarray(blk.subsets)[kk]
        grp = np.asarray(blk.groups)[kk]
        keys = np.stack([grp, sub], axis=1)
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        inv = inv.ravel()
        block_rows = np.zeros((uniq.shape[0], n))
        block_rows[inv, off + np.arange(kk.size)] = 1.0
        r = np.zeros(uniq.shape[0])
        for i, (_, s) in enumerate(uniq):
            if free[s]:
                block_rows[i, pos_b[s]] = -1.0
                r[i] = lo[s]
            else:
                r[i] = b_fixed[s]
        rows.append(block_rows)
        rhs.append(r)
    # slack rows for finite upper bounds
    if ns:
        sr = np.zeros((ns, n))
        sr[np.arange(ns), pos_b[bounded]] = 1.0
        sr[np.arange(ns), nb + np.arange(ns)] = 1.0
        rows.append(sr)
        rhs.append(hi[bounded] - lo[bounded])
    # equality rows on b
    if eq_rows is not None:
        E = np.atleast_2d(np.asarray(eq_rows, dtype=float))
        e = np.asarray(eq_rhs, dtype=float) - E[:, ~free] @ b_fixed[~free] - E[:, free] @ lo[free]
        er = np.zeros((E.shape[0], n))
        er[:, :nb] = E[:, free_ids]
        empty = ~er.any(axis=1)
        if (np.abs(e[empty]) > 1e-9).any():
            raise SolverError("equality rows on fixed coordinates are violated")
        rows.append(er[~empty])
        rhs.append(e[~empty])
    A = np.vstack(rows) if rows else np.zeros((0, n))
    r = np.concatenate(rhs) if rhs else np.zeros(0)

    # objective data over users that can be served by kept columns
    R_parts, alpha_u, weight_u = [], [], []
    for blk, kk, off in zip(blocks, kept, offsets):
        eff = np.asarray(blk.eff, dtype=float)[:, kk]
        use = (eff > 0).any(axis=1)
        if not use.any():
            continue
        Rb = np.zeros((int(use.sum()), n))
        Rb[:, off:off + kk.size] = eff[use]
        R_parts.append(Rb)
        alpha_u.append(np.full(Rb.shape[0], float(blk.alpha)))
        weight_u.append(np.full(Rb.shape[0], float(blk.weight)))
    R = np.vstack(R_parts) if R_parts else np.zeros((0, n))
    au = np.concatenate(alpha_u) if alpha_u else np.zeros(0)
    wu = np.concatenate(weight_u) if weight_u else np.zeros(0)

    reg = np.zeros(n)
    target = np.zeros(n)
    if rho > 0 and nb:
        reg[:nb] = rho
        ref_full = b_fixed if ref is None else np.asarray(ref, dtype=float)
        target[:nb] = ref_full[free_ids] - lo[free_ids]

    z, iters = _ipm(A, r, R, au, wu, reg, target, tol, max_iter) if n else (np.zeros(0), 0)

    b = np.where(free, 0.0, b_fixed)
    b[free_ids] = z[:nb] + lo[free_ids]
    b[0] = 0.0
    xs, rates, values = [], [], []
    for blk, kk, off in zip(blocks, kept, offsets):
        x = np.zeros(len(blk.subsets))
        x[kk] = z[off:off + kk.size]
        rate = np.asarray(blk.eff, dtype=float) @ x
        xs.append(x)
        rates.append(rate)
        values.append(block_value(blk, rate))
    return ProgramSolution(b=b, x=xs, rates=rates, values=np.array(values), iterations=iters)


def _derivs(rate, alpha):
    """First and (negated) second derivative of f_alpha at positive rates."""
    d1 = np.where(alpha == 0, 1.0, rate ** -alpha)
    d2 = alpha * rate ** (-alpha - 1.0)
    return d1, d2


def _ipm(A, r, R, au, wu, reg, target, tol, max_iter):
    m, n = A.shape

    def grad_hess(z):
        rate = R @ z
        d1, d2 = _derivs(rate, au)
        g = -R.T @ (wu * d1) + reg * (z - target)
        H = (R.T * (wu * d2)) @ R
        H[np.diag_indices(n)] += reg
        return g, H

    # starting point: least-squares solution pushed into the interior
    if m:
        z = np.linalg.lstsq(A, r, rcond=None)[0]
    else:
        z = np.zeros(n)
    shift = max(-1.5 * z.min(initial=0.0), 0.0)
    z = z + shift + max(1e-2, 0.1 * (np.abs(z).mean() if n else 0.0))
    y = np.zeros(m)
    g, H = grad_hess(z)
    s = np.maximum(np.abs(g), 1.0)

    scale_r = 1.0 + np.abs(r).max(initial=0.0)
    for it in range(1, max_iter + 1):
        rd = g - A.T @ y - s
        rp = A @ z - r
        gap = z @ s
        scale_g = 1.0 + np.abs(g).max(initial=0.0)
        if (
            np.abs(rp).max(initial=0.0) <= tol * scale_r
            and np.abs(rd).max(initial=0.0) <= 10 * tol * scale_g
            and gap <= tol * max(1.0, np.abs(wu).sum())
        ):
            return z, it
        mu = gap / n
        K = np.zeros((n + m, n + m))
        K[:n, :n] = H
        K[np.arange(n), np.arange(n)] += s / z
        K[:n, n:] = A.T
        K[n:, :n] = A
        K[n:, n:] -= 1e-14 * np.eye(m)
        try:
            lu = scipy.linalg.lu_factor(K, check_finite=False)
        except (ValueError, np.linalg.LinAlgError) as exc:  # pragma: no cover
            raise SolverError(f"KKT factorization failed: {exc}") from exc

        def direction(target_mu, corr):
            rhs_top = -(g - A.T @ y) + (target_mu - corr) / z
            sol = scipy.linalg.lu_solve(lu, np.concatenate([rhs_top, -rp]), check_finite=False)
            dz = sol[:n]
            dy = -sol[n:]
            ds = (target_mu - z * s - corr - s * dz) / z
            return dz, dy, ds

        dz, dy, ds = direction(0.0, 0.0)
        ap = min(1.0, _max_step(z, dz))
        ad = min(1.0, _max_step(s, ds))
        mu_aff = (z + ap * dz) @ (s + ad * ds) / n
        sigma = min(1.0, (mu_aff / mu) ** 3) if mu > 0 else 0.0
        dz, dy, ds = direction(sigma * mu, dz * ds)
        step = min(1.0, 0.995 * _max_step(z, dz), 0.995 * _max_step(s, ds))
        if not np.all(np.isfinite(dz)):
            raise SolverError("interior point direction is not finite")
        z = z + step * dz
        y = y + step * dy
        s = s + step * ds
        g, H = grad_hess(z)
    raise SolverError(f"interior point method did not converge in {max_iter} iterations")


def _max_step(v, dv):
    neg = dv < 0
    if not neg.any():
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))
