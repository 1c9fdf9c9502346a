"""Chebyshev combination solver over the simplex, plus helpers.

solve_chebyshev finds the convex combination of columns of A closest to
b in the max norm:

    min_{alpha in simplex, t >= 0}  t   s.t.  -t <= A alpha - b <= t

via a dense two-phase simplex method with Bland's anti-cycling rule.
solve_simplex_least_squares is the LP-free fallback: projected gradient
on (1/2)||A alpha - b||^2 over the simplex, reporting the max-norm
residual of its minimiser.  project_simplex is the usual sort-and-
threshold Euclidean projection both of them rely on.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class ChebyshevSolution:
    alpha: np.ndarray     # simplex weights, length r
    t: float              # max-norm residual ||A alpha - b||_inf
    backend: str          # "exact" or "fallback"
    iterations: int
    converged: bool = True


class LpError(RuntimeError):
    pass


def project_simplex(y):
    """Euclidean projection of y onto the probability simplex.

    Sort-and-threshold: find the largest k with
    u_k + (1 - sum_{j<=k} u_j)/k > 0 for the descending sort u, then
    shift and clip.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("expected a nonempty 1-d vector")
    if not np.all(np.isfinite(y)):
        raise ValueError("vector contains NaN or Inf")
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, y.size + 1)
    cond = u - css / ks > 0
    k = ks[cond][-1]
    tau = css[k - 1] / k
    return np.maximum(y - tau, 0.0)


def _two_phase_simplex(c, A_ub, b_ub, A_eq, b_eq, max_pivots=20000, tol=1e-9):
    """min c^T x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.

    Dense tableau implementation.  Entering and leaving variables follow
    Bland's rule throughout, which rules out cycling.  Returns the
    primal solution; raises LpError when the pivot cap is hit or the
    final basis fails the optimality/feasibility checks.
    """
    n_ub = A_ub.shape[0]
    n_eq = A_eq.shape[0]
    n = c.size
    rows = n_ub + n_eq

    # equality form with slacks on the inequality rows
    T = np.zeros((rows, n + n_ub))
    T[:n_ub, :n] = A_ub
    T[:n_ub, n:n + n_ub] = np.eye(n_ub)
    T[n_ub:, :n] = A_eq
    rhs = np.concatenate([b_ub, b_eq])

    # flip rows to make the right-hand side nonnegative
    neg = rhs < 0
    T[neg] *= -1.0
    rhs = np.abs(rhs)

    # a slack column can seed the basis only on an unflipped inequality row
    basis = np.full(rows, -1, dtype=np.int64)
    needs_art = []
    for i in range(rows):
        if i < n_ub and not neg[i]:
            basis[i] = n + i
        else:
            needs_art.append(i)
    n_art = len(needs_art)
    total = n + n_ub + n_art
    tab = np.zeros((rows, total + 1))
    tab[:, :n + n_ub] = T
    tab[:, -1] = rhs
    for j, i in enumerate(needs_art):
        tab[i, n + n_ub + j] = 1.0
        basis[i] = n + n_ub + j

    def pivot(tab, basis, row, col):
        tab[row] /= tab[row, col]
        colvals = tab[:, col].copy()
        colvals[row] = 0.0
        tab -= np.outer(colvals, tab[row])
        # re-normalise the pivot column against accumulated roundoff
        tab[:, col] = 0.0
        tab[row, col] = 1.0
        basis[row] = col

    def run_phase(tab, basis, cost, allowed, cap):
        pivots = 0
        while True:
            z = cost[basis]
            reduced = cost - z @ tab[:, :-1]
            entering = -1
            for j in allowed:
                if basis_mask[j]:
                    continue
                if reduced[j] < -tol:
                    entering = j
                    break
            if entering < 0:
                return pivots
            colv = tab[:, entering]
            best_ratio = None
            leave = -1
            for i in range(rows):
                if colv[i] > tol:
                    ratio = tab[i, -1] / colv[i]
                    if best_ratio is None or ratio < best_ratio - 1e-12 or \
                            (abs(ratio - best_ratio) <= 1e-12 and basis[i] < basis[leave]):
                        best_ratio = ratio
                        leave = i
            if leave < 0:
                raise LpError("unbounded direction in simplex phase")
            basis_mask[basis[leave]] = False
            basis_mask[entering] = True
            pivot(tab, basis, leave, entering)
            pivots += 1
            if pivots > cap:
                raise LpError("pivot cap exceeded")

    basis_mask = np.zeros(total, dtype=bool)
    basis_mask[basis] = True

    total_pivots = 0
    if n_art:
        cost1 = np.zeros(total)
        cost1[n + n_ub:] = 1.0
        total_pivots += run_phase(tab, basis, cost1, range(total), max_pivots)
        w = cost1[basis] @ tab[:, -1]
        if w > 1e-7:
            raise LpError("phase 1 ended infeasible (w=%.3e)" % w)
        # drive surviving artificials out of the basis where possible
        for i in range(rows):
            if basis[i] >= n + n_ub:
                for j in range(n + n_ub):
                    if not basis_mask[j] and abs(tab[i, j]) > tol:
                        basis_mask[basis[i]] = False
                        basis_mask[j] = True
                        pivot(tab, basis, i, j)
                        break

    cost2 = np.zeros(total)
    cost2[:n] = c
    total_pivots += run_phase(tab, basis, cost2, range(n + n_ub), max_pivots)

    x = np.zeros(total)
    for i in range(rows):
        x[basis[i]] = tab[i, -1]
    if np.any(x[:n] < -1e-8):
        raise LpError("negative structural variable after optimisation")
    return x[:n], total_pivots


def solve_chebyshev(A, b, max_pivots=20000):
    """Best max-norm approximation of b by a convex combination of A's columns.

    A is (m, r) with columns the candidate directions after any
    sketching has been applied; b is length m.  Singleton and all-equal
    column sets short-circuit to closed forms.  On simplex failure the
    projected-gradient fallback is used and flagged in ``backend``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or b.shape != (A.shape[0],):
        raise ValueError("A must be (m, r) with b of length m")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise ValueError("LP data contains NaN or Inf")
    m, r = A.shape
    if r == 0:
        raise ValueError("need at least one column")
    if r == 1:
        alpha = np.ones(1)
        return ChebyshevSolution(alpha, float(np.max(np.abs(A[:, 0] - b), initial=0.0)),
                                 "exact", 0)
    if np.all(A == A[:, :1]):
        # degenerate: all candidate columns identical, any alpha is optimal
        alpha = np.full(r, 1.0 / r)
        return ChebyshevSolution(alpha, float(np.max(np.abs(A[:, 0] - b), initial=0.0)),
                                 "exact", 0)

    # variables z = (alpha, t); rows A alpha - t <= b and -A alpha - t <= -b
    c = np.zeros(r + 1)
    c[r] = 1.0
    A_ub = np.zeros((2 * m, r + 1))
    A_ub[:m, :r] = A
    A_ub[m:, :r] = -A
    A_ub[:, r] = -1.0
    b_ub = np.concatenate([b, -b])
    A_eq = np.zeros((1, r + 1))
    A_eq[0, :r] = 1.0
    b_eq = np.ones(1)

    try:
        z, pivots = _two_phase_simplex(c, A_ub, b_ub, A_eq, b_eq, max_pivots)
        alpha = np.maximum(z[:r], 0.0)
        ssum = alpha.sum()
        if abs(ssum - 1.0) > 1e-7:
            raise LpError("simplex weights sum to %.12f" % ssum)
        alpha /= ssum
        t = float(np.max(np.abs(A @ alpha - b), initial=0.0))
        if t > z[r] + 1e-7 * (1.0 + abs(z[r])):
            raise LpError("reported objective inconsistent with weights")
        return ChebyshevSolution(alpha, t, "exact", pivots)
    except LpError:
        fb = solve_simplex_least_squares(A, b)
        return ChebyshevSolution(fb.alpha, fb.t, "fallback", fb.iterations,
                                 fb.converged)


def solve_simplex_least_squares(A, b, tol=1e-10, max_iters=5000):
    """Projected gradient on (1/2)||A alpha - b||^2 over the simplex.

    Fixed step 1/sigma_max(A)^2; stops when the fixed-point residual
    ||alpha - P(alpha - step * grad)|| drops below tol.  The reported t
    is the max-norm residual of the least-squares minimiser, so it upper
    bounds the Chebyshev optimum; non-convergence is flagged rather than
    raised.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, r = A.shape
    if r == 1:
        return ChebyshevSolution(np.ones(1),
                                 float(np.max(np.abs(A[:, 0] - b), initial=0.0)),
                                 "fallback", 0)
    sigma = _sigma_max(A)
    step = 1.0 if sigma == 0.0 else 1.0 / sigma ** 2
    alpha = np.full(r, 1.0 / r)
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        grad = A.T @ (A @ alpha - b)
        nxt = project_simplex(alpha - step * grad)
        if np.linalg.norm(nxt - alpha) <= tol:
            alpha = nxt
            converged = True
            break
        alpha = nxt
    t = float(np.max(np.abs(A @ alpha - b), initial=0.0))
    return ChebyshevSolution(alpha, t, "fallback", it, converged)


def _sigma_max(A, iters=200, tol=1e-10):
    """Largest singular value by power iteration on A^T A."""
    r = A.shape[1]
    v = np.full(r, 1.0 / np.sqrt(r))
    lam = 0.0
    for _ in range(iters):
        w = A.T @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(nw - lam) <= tol * max(1.0, nw):
            lam = nw
            break
        lam = nw
    return float(np.sqrt(lam))
