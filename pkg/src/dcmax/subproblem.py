"""Strongly convex proximal subproblems and the per-iteration descent test.

Each outer iteration linearises the subtracted part at x through a
chosen subgradient v and solves

    min_y  g(y) - <v, y - x> + (sigma/2) ||y - x||^2     (over the box)

The solve is closed-form for isotropic quadratics, a linear system for
general quadratics and ridge terms without a box, and an accelerated
projected-gradient QP with an active-set polish when a box is present.
"""

from dataclasses import dataclass

import numpy as np

from .model import GeneralQuad, RidgeLeastSquares, ScaledIdentityQuad
from .numerics import SymmetricMatrix, power_iteration_extreme_eigs


@dataclass
class ProxConfig:
    sigma: float = None          # None: 0 for strongly convex g, else 1.0
    qp_tol: float = 1e-9         # KKT residual target for box QPs
    qp_max_iters: int = 10000
    polish: bool = True
    kappa: float = 0.1           # inexactness cap relative to the step norm


@dataclass
class ProxResult:
    x: np.ndarray
    residual: float              # stationarity residual of the subproblem
    converged: bool
    iterations: int


def resolve_sigma(g, sigma):
    """Default curvature: none when g is already strongly convex."""
    if sigma is not None:
        return float(sigma)
    return 0.0 if g.strong_convexity() > 0.0 else 1.0


def prox_step(p, x, v, cfg):
    """Minimise g(y) - <v, y - x> + (sigma/2)||y - x||^2 over the box."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    g = p.g
    sigma = resolve_sigma(g, cfg.sigma)
    box = p.box

    if isinstance(g, ScaledIdentityQuad):
        y = (v + sigma * x) / (g.c + sigma)
        if box is not None:
            y = np.clip(y, box[0], box[1])
        return ProxResult(y, 0.0, True, 0)

    if isinstance(g, GeneralQuad) and g.iso_scale is not None:
        # H = s*I: the subproblem is separable, so clipping is exact
        y = (v + sigma * x - g.f) / (g.iso_scale + sigma)
        if box is not None:
            y = np.clip(y, box[0], box[1])
        return ProxResult(y, 0.0, True, 0)

    if isinstance(g, GeneralQuad):
        H = g.H.full() + sigma * np.eye(p.dim)
        f = g.f - v - sigma * x
        if box is None:
            y = np.linalg.solve(H, -f)
            res = float(np.linalg.norm(H @ y + f))
            return ProxResult(y, res, True, 0)
        return solve_box_qp(H, f, box, cfg.qp_tol, cfg.qp_max_iters, cfg.polish,
                            x0=np.clip(x, box[0], box[1]))

    if isinstance(g, RidgeLeastSquares):
        if box is not None:
            raise ValueError("box-constrained ridge subproblems not supported")
        H = g.scale * g.gram() + (g.lam + sigma) * np.eye(p.dim)
        rhs = g.scale * g.X.rmatvec(g.y) + v + sigma * x
        y = np.linalg.solve(H, rhs)
        res = float(np.linalg.norm(H @ y - rhs))
        return ProxResult(y, res, True, 0)

    raise TypeError("unsupported convex part %r" % type(g).__name__)


def kkt_residual(H, f, lo, hi, x, bound_tol=1e-12):
    """Max componentwise violation of the box QP optimality conditions.

    Interior coordinates need |grad| small, coordinates at the lower
    bound need grad >= 0, at the upper bound grad <= 0.
    """
    grad = H @ x + f
    at_lo = x <= lo + bound_tol
    at_hi = x >= hi - bound_tol
    res = np.abs(grad).astype(float)
    res[at_lo] = np.maximum(-grad[at_lo], 0.0)
    res[at_hi] = np.maximum(grad[at_hi], 0.0)
    both = at_lo & at_hi   # pinched coordinates are always optimal
    res[both] = 0.0
    return float(np.max(res, initial=0.0))


def solve_box_qp(H, f, box, tol=1e-9, max_iters=10000, polish=True, x0=None):
    """min (1/2) y^T H y + f^T y  s.t.  lo <= y <= hi, H symmetric PSD.

    Accelerated projected gradient with objective-based restarts; when
    the KKT residual is small an active-set polish solves the free
    coordinates by conjugate gradient and keeps the result only if the
    objective does not increase.
    """
    if isinstance(H, SymmetricMatrix):
        H = H.full()
    H = np.asarray(H, dtype=float)
    f = np.asarray(f, dtype=float)
    lo, hi = box
    lam_max, _ = power_iteration_extreme_eigs(H)
    step = 1.0 / max(lam_max, 1e-12)

    def obj(y):
        return 0.5 * float(y @ (H @ y)) + float(f @ y)

    x = np.clip(x0 if x0 is not None else 0.5 * (lo + hi), lo, hi)
    z = x.copy()
    t = 1.0
    fx = obj(x)
    best_iter = 0
    stalls = 0
    for it in range(1, max_iters + 1):
        x_new = np.clip(z - step * (H @ z + f), lo, hi)
        f_new = obj(x_new)
        if f_new > fx + 1e-15 * (1.0 + abs(fx)):
            # momentum overshoot: restart from the best point
            z = x.copy()
            t = 1.0
            stalls += 1
            if stalls >= 2:
                step *= 0.5   # guards against an underestimated curvature
                stalls = 0
            continue
        stalls = 0
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = x_new + ((t - 1.0) / t_new) * (x_new - x)
        z = np.clip(z, lo, hi)
        x, fx, t = x_new, f_new, t_new
        best_iter = it
        if it % 10 == 0 or it == max_iters:
            res = kkt_residual(H, f, lo, hi, x)
            if res <= tol:
                break
    res = kkt_residual(H, f, lo, hi, x)
    if polish and res > 1e-15:
        xp = _polish(H, f, lo, hi, x)
        if xp is not None and obj(xp) <= fx + 1e-15 * (1.0 + abs(fx)):
            rp = kkt_residual(H, f, lo, hi, xp)
            if rp < res:
                x, res = xp, rp
    return ProxResult(x, res, res <= tol, best_iter)


def _polish(H, f, lo, hi, x, bound_tol=1e-12):
    """Fix confidently bound coordinates, CG-solve the free block, re-clip."""
    grad = H @ x + f
    at_lo = (x <= lo + bound_tol) & (grad > 0)
    at_hi = (x >= hi - bound_tol) & (grad < 0)
    free = ~(at_lo | at_hi)
    if not np.any(free):
        return x.copy()
    xb = x.copy()
    xb[at_lo] = lo[at_lo]
    xb[at_hi] = hi[at_hi]
    rhs = -(f[free] + H[np.ix_(free, ~free)] @ xb[~free]) if np.any(~free) \
        else -f[free]
    sol = _conjugate_gradient(H[np.ix_(free, free)], rhs, x[free])
    if sol is None:
        return None
    xb[free] = sol
    return np.clip(xb, lo, hi)


def _conjugate_gradient(A, b, x0, tol=1e-12, max_iters=None):
    n = b.size
    if max_iters is None:
        max_iters = 4 * n + 20
    x = x0.copy()
    r = b - A @ x
    p = r.copy()
    rs = float(r @ r)
    bnorm = max(np.linalg.norm(b), 1e-30)
    for _ in range(max_iters):
        if np.sqrt(rs) <= tol * bnorm:
            return x
        Ap = A @ p
        denom = float(p @ Ap)
        if denom <= 0:
            return x   # hit a flat/indefinite direction, stop where we are
        a = rs / denom
        x = x + a * p
        r = r - a * Ap
        rs_new = float(r @ r)
        p = r + (rs_new / rs) * p
        rs = rs_new
    return x


def descent_check(f_prev, f_next, step_norm, eps_k, mu):
    """Verify the per-iteration descent estimate within rounding slack.

    Accepts iff f_next <= f_prev + eps_k - (mu/2) step^2 + 1e-9 (1+|f_prev|).
    """
    slack = 1e-9 * (1.0 + abs(f_prev))
    return f_next <= f_prev + eps_k - 0.5 * mu * step_norm ** 2 + slack
