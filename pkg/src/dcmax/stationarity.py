"""Stationarity residuals for max-structured DC programs.

At a candidate point the subtracted part has one gradient per active
piece (or per combination of active pieces across blocks).  The
directional residual is the largest deviation of those gradients from
the gradient of the convex part:

    R(x) = max over active vertices v of || grad_g(x) - v ||.

R(x) = 0 exactly at directionally stationary points, while the distance
from grad_g(x) to the convex hull of the active gradients (the
criticality measure) can vanish strictly earlier.  Both are computed
here; the hull distance doubles as the membership oracle used by the
selection-rule tests.
"""

import math
from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from . import lp
from .model import active_gradient_matrix, active_set, grad_g, smooth_grad


@dataclass
class ResidualReport:
    r_d: float            # max gradient deviation over active vertices
    worst: tuple          # per-block piece indices attaining it
    eps: float            # activity tolerance the report was computed at
    n_vertices: int       # how many vertices were compared
    exact: bool = True    # False when the value is only a lower bound


def _effective_grad(p, x):
    return grad_g(p, x) - smooth_grad(p, x)


def directional_residual(p, x, eps=0.0):
    """Residual for single-block explicit programs.

    Scans the eps-active piece gradients of the unique block; ties in
    the maximum resolve to the smallest piece index.
    """
    if len(p.blocks) != 1 or not p.blocks[0].explicit:
        raise ValueError("directional_residual expects one explicit block")
    aset = active_set(p, x, eps)
    (G,) = active_gradient_matrix(p, x, aset)
    g = _effective_grad(p, x)
    norms = np.linalg.norm(G - g[:, None], axis=0)
    j = int(np.argmax(norms))
    return ResidualReport(r_d=float(norms[j]),
                          worst=(int(aset.indices[0][j]),),
                          eps=float(eps),
                          n_vertices=int(norms.size))


def iter_aggregate_vertices(p, x, eps, cap):
    """Yield (index_tuple, aggregate_gradient) over eps-active vertices.

    Explicit blocks contribute the product of their active pieces; a
    single ranked block contributes its admissible element subsets.
    Raises ValueError when the vertex count would exceed ``cap``.
    """
    if p.all_explicit():
        aset = active_set(p, x, eps)
        count = aset.product_size()
        if count > cap:
            raise ValueError("vertex product %d exceeds cap %d" % (count, cap))
        mats = active_gradient_matrix(p, x, aset)
        per_block = [list(range(m.shape[1])) for m in mats]
        for choice in product(*per_block):
            v = np.zeros(p.dim)
            ids = []
            for mat, idxs, c in zip(mats, aset.indices, choice):
                v += mat[:, c]
                ids.append(int(idxs[c]))
            yield tuple(ids), v
        return
    if len(p.blocks) != 1:
        raise ValueError("ranked blocks are only enumerable in isolation")
    block = p.blocks[0]
    cols, rows = block.candidate_pool(x, eps)
    uniq = []
    for r in rows:
        if r not in uniq:
            uniq.append(int(r))
    by_row = {r: [j for j in range(rows.size) if rows[j] == r] for r in uniq}
    k = block.slots
    # cheap lower bound first: the subset count alone can be astronomical
    if math.comb(len(uniq), k) > cap:
        raise ValueError("vertex count %d exceeds cap %d"
                         % (math.comb(len(uniq), k), cap))
    n_subsets = 0
    for subset in combinations(uniq, k):
        n_subsets += int(np.prod([len(by_row[r]) for r in subset]))
    if n_subsets > cap:
        raise ValueError("vertex count %d exceeds cap %d" % (n_subsets, cap))
    for subset in combinations(uniq, k):
        for cols_choice in product(*[by_row[r] for r in subset]):
            v = cols[:, list(cols_choice)].sum(axis=1)
            yield tuple(cols_choice), v


def block_residual(p, x, eps=0.0, cap=100_000):
    """Residual over all combinations of eps-active pieces across blocks.

    Enumerates the aggregate vertices (one active piece per block, or an
    admissible subset for a ranked block) and reports the farthest from
    the effective convex gradient.  Refuses products beyond ``cap``.
    """
    g = _effective_grad(p, x)
    best = -1.0
    worst = None
    count = 0
    for ids, v in iter_aggregate_vertices(p, x, eps, cap):
        d = float(np.linalg.norm(g - v))
        count += 1
        if d > best + 1e-15:
            best = d
            worst = ids
    return ResidualReport(r_d=best, worst=worst, eps=float(eps),
                          n_vertices=count)


def criticality_distance(p, x, eps=0.0, tol=1e-10, max_iters=20000):
    """Distance from grad_g(x) to the hull of the active gradients.

    Simplex-constrained least squares solved by projected gradient; for
    multi-block programs the hull is of the enumerated aggregate
    vertices (subject to the same cap as block_residual).
    """
    g = _effective_grad(p, x)
    if len(p.blocks) == 1 and p.blocks[0].explicit:
        aset = active_set(p, x, eps)
        (G,) = active_gradient_matrix(p, x, aset)
    else:
        cols = [v for _, v in iter_aggregate_vertices(p, x, eps, 100_000)]
        G = np.stack(cols, axis=1)
    sol = _simplex_least_squares_l2(G, g, tol, max_iters)
    return float(np.linalg.norm(G @ sol - g))


def _simplex_least_squares_l2(G, g, tol, max_iters):
    r = G.shape[1]
    alpha = np.full(r, 1.0 / r)
    sigma = lp._sigma_max(G)
    step = 1.0 if sigma == 0.0 else 1.0 / sigma ** 2
    for _ in range(max_iters):
        grad = G.T @ (G @ alpha - g)
        nxt = lp.project_simplex(alpha - step * grad)
        if np.linalg.norm(nxt - alpha) <= tol:
            return nxt
        alpha = nxt
    return alpha
