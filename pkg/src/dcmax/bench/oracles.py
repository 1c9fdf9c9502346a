"""Small exhaustive solvers used to cross-check the fast paths.

Everything here trades speed for independence: plain loops, simple
enumeration, no shared selection or LP code, and hard caps on problem
size so a typo never turns into an overnight job.
"""

import itertools
import math

import numpy as np

from ..model import (MaxBlock, TopKRankedBlock, TrimmedRankedBlock,
                     ScaledIdentityQuad, GeneralQuad, RidgeLeastSquares)

__all__ = [
    "QUBO_ENUM_CAP", "CHEBYSHEV_RANK_CAP", "AGGREGATE_CAP",
    "oracle_qubo_value", "oracle_enumerate_qubo",
    "oracle_enumerate_qubo_batch", "oracle_chebyshev",
    "oracle_best_aggregate", "oracle_objective",
]

QUBO_ENUM_CAP = 22
CHEBYSHEV_RANK_CAP = 4
AGGREGATE_CAP = 100_000


def _dense_square(Q):
    Qd = Q.full() if hasattr(Q, "full") else np.asarray(Q, dtype=float)
    if Qd.ndim != 2 or Qd.shape[0] != Qd.shape[1]:
        raise ValueError("Q must be square")
    return Qd


def oracle_qubo_value(Q, z):
    """z^T Q z for a single binary assignment."""
    Qd = _dense_square(Q)
    z = np.asarray(z, dtype=float)
    return float(z @ Qd @ z)


def oracle_enumerate_qubo(Q, cap=QUBO_ENUM_CAP):
    """Exact minimum of z^T Q z over binary z, by Gray-code enumeration.

    Walks all 2^n assignments flipping one bit at a time, updating the
    value and the running Q z in O(n) per flip.  Returns (value, z);
    ties keep the first assignment reached in flip order.
    """
    Qd = _dense_square(Q)
    n = Qd.shape[0]
    if n > cap:
        raise ValueError("refusing to enumerate %d bits (cap %d)" % (n, cap))
    z = np.zeros(n)
    s = np.zeros(n)                       # running Q z
    val = 0.0
    best_val = 0.0
    best_z = z.copy()
    for t in range(1, 1 << n):
        j = (t & -t).bit_length() - 1     # Gray code: flip the ruler bit
        d = 1.0 - 2.0 * z[j]
        val += 2.0 * d * s[j] + Qd[j, j]
        z[j] += d
        s += d * Qd[:, j]
        if val < best_val:
            best_val = val
            best_z = z.copy()
    return float(best_val), best_z


def oracle_enumerate_qubo_batch(Q, cap=16):
    """Same minimum by brute force on the full assignment table.

    Builds every assignment as a row and evaluates z^T Q z directly; a
    deliberate second route used to validate the incremental scan.  On
    ties the value agrees with the scan but the argmin may differ.
    """
    Qd = _dense_square(Q)
    n = Qd.shape[0]
    if n > cap:
        raise ValueError("refusing to tabulate %d bits (cap %d)" % (n, cap))
    Z = ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1).astype(float)
    vals = np.einsum("ij,ij->i", Z @ Qd, Z)
    best = int(np.argmin(vals))
    return float(vals[best]), Z[best].copy()


def _simplex_grid(r, levels):
    """Barycentric grid: compositions of `levels` into r parts, scaled."""
    pts = []
    for bars in itertools.combinations(range(levels + r - 1), r - 1):
        comp = []
        prev = -1
        for b in list(bars) + [levels + r - 1]:
            comp.append(b - prev - 1)
            prev = b
        pts.append(comp)
    return np.asarray(pts, dtype=float) / float(levels)


_GRID_LEVELS = {1: 1, 2: 2000, 3: 280, 4: 60}


def oracle_chebyshev(A, b, levels=None):
    """Best simplex combination of A's columns under the max norm.

    Solves min ||A w - b||_inf over the simplex exactly by enumerating
    every basic solution of the equivalent linear program in (w, t):
    the weights sum to 1, so a vertex pins down r further constraints
    from the 2m residual bounds and r sign bounds.  All C(2m+r, r)
    candidate systems are solved in one batched call and screened for
    feasibility.  A barycentric grid scan over the simplex double-checks
    the result: the grid value must sit within the Lipschitz mesh bound
    above the enumerated optimum.  Rank is capped at 4 columns.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or b.shape != (A.shape[0],):
        raise ValueError("A must be (m, r) with b of length m")
    m, r = A.shape
    if r > CHEBYSHEV_RANK_CAP:
        raise ValueError("refusing rank %d (cap %d)" % (r, CHEBYSHEV_RANK_CAP))
    if math.comb(2 * m + r, r) > 300_000:
        raise ValueError("refusing %d basic solutions" % math.comb(2 * m + r, r))
    # inequality rows C v <= d over v = (w, t)
    C = np.zeros((2 * m + r, r + 1))
    C[:m, :r] = A
    C[:m, r] = -1.0
    C[m:2 * m, :r] = -A
    C[m:2 * m, r] = -1.0
    C[2 * m:, :r] = -np.eye(r)
    d = np.concatenate([b, -b, np.zeros(r)])
    combos = np.asarray(list(itertools.combinations(range(2 * m + r), r)),
                        dtype=np.int64)
    K = combos.shape[0]
    M = np.empty((K, r + 1, r + 1))
    M[:, 0, :r] = 1.0                     # sum of weights = 1
    M[:, 0, r] = 0.0
    M[:, 1:, :] = C[combos]
    rhs = np.empty((K, r + 1))
    rhs[:, 0] = 1.0
    rhs[:, 1:] = d[combos]
    dets = np.linalg.det(M)
    scale = np.prod(np.maximum(np.linalg.norm(M, axis=2), 1e-30), axis=1)
    good = np.abs(dets) > 1e-10 * scale
    M[~good] = np.eye(r + 1)
    V = np.linalg.solve(M, rhs[:, :, None])[:, :, 0]   # candidate vertices (w, t)
    tol = 1e-7 * (1.0 + np.max(np.abs(A)) + np.max(np.abs(b)))
    feas = good & np.all(V @ C.T <= d + tol, axis=1)
    if not feas.any():
        raise RuntimeError("no feasible basic solution found")
    i = int(np.argmin(np.where(feas, V[:, r], np.inf)))
    alpha = np.clip(V[i, :r], 0.0, None)
    alpha /= alpha.sum()
    best_t = float(np.max(np.abs(A @ alpha - b)))
    # independent grid scan: feasible values never undercut the optimum,
    # and some grid point must land within the mesh Lipschitz bound
    if levels is None:
        levels = _GRID_LEVELS[r]
    W = _simplex_grid(r, levels)
    grid_t = float(np.min(np.max(np.abs(W @ A.T - b), axis=1)))
    lip = np.max(np.abs(A)) * 2.0 * max(r - 1, 1) / float(levels)
    if grid_t < best_t - 1e-8 * (1.0 + best_t):
        raise RuntimeError("grid found a better point than the enumeration")
    if grid_t > best_t + lip + 1e-9:
        raise RuntimeError("grid value exceeds the Lipschitz bound")
    return best_t, alpha


def oracle_best_aggregate(blocks, g, cap=AGGREGATE_CAP):
    """Farthest-from-g aggregate over explicit per-block vertex sets.

    blocks: list of (columns, row_ids, slots) triples.  columns stacks
    the candidate gradients (n, c), row_ids labels the source row of
    each column, and a block vertex picks `slots` distinct rows with one
    candidate per row (sign choices appear as two columns sharing a row
    id).  Nested loops on purpose: this is the slow second route the
    greedy search is checked against.  Returns (norm, aggregate).
    """
    g = np.asarray(g, dtype=float)
    per_block = []
    total = 1
    for columns, row_ids, slots in blocks:
        columns = np.asarray(columns, dtype=float)
        by_row = {}
        for col_idx, rid in enumerate(np.asarray(row_ids, dtype=np.int64)):
            by_row.setdefault(int(rid), []).append(col_idx)
        rows_sorted = sorted(by_row)
        slots = int(slots)
        if not (1 <= slots <= len(rows_sorted)):
            raise ValueError("slots out of range for the candidate rows")
        verts = []
        for subset in itertools.combinations(rows_sorted, slots):
            for picks in itertools.product(*[by_row[rid] for rid in subset]):
                if total * (len(verts) + 1) > cap:
                    raise ValueError("aggregate count exceeds cap %d" % cap)
                verts.append(columns[:, list(picks)].sum(axis=1))
        total *= len(verts)
        per_block.append(verts)
    best_norm = -1.0
    best_vec = None
    for combo in itertools.product(*per_block):
        v = combo[0].copy()
        for w in combo[1:]:
            v += w
        d = float(np.linalg.norm(v - g))
        if d > best_norm:
            best_norm = d
            best_vec = v
    return best_norm, best_vec


def _quad_value(term, x):
    if isinstance(term, ScaledIdentityQuad):
        return 0.5 * term.c * float(x @ x)
    if isinstance(term, GeneralQuad):
        H = term.H.full()
        return 0.5 * float(x @ (H @ x)) + float(term.f @ x) + term.const
    if isinstance(term, RidgeLeastSquares):
        Xd = term.X.to_dense()
        r = Xd @ x - term.y
        return 0.5 * term.scale * float(r @ r) + 0.5 * term.lam * float(x @ x)
    raise TypeError("unknown quadratic term %r" % type(term).__name__)


def oracle_objective(p, x):
    """Objective recomputed from raw model data with plain loops.

    Dense matrices, python-level maxima and sorts; shares nothing with
    the incremental paths in the model classes.
    """
    x = np.asarray(x, dtype=float)
    total = _quad_value(p.g, x) + p.additive_const
    if p.smooth is not None:
        total -= _quad_value(p.smooth, x)
    for blk in p.blocks:
        if isinstance(blk, MaxBlock):
            coeffs = blk.coeffs.to_dense() if hasattr(blk.coeffs, "to_dense") \
                else np.asarray(blk.coeffs, dtype=float)
            vals = [float(coeffs[i] @ x) + float(blk.offsets[i])
                    + 0.5 * float(blk.quad[i]) * float(x @ x)
                    for i in range(blk.n_pieces)]
            total -= blk.weight * max(vals)
        elif isinstance(blk, TopKRankedBlock):
            mags = sorted(abs(float(row @ x)) for row in blk.X.to_dense())
            total -= blk.weight * sum(mags[-blk.k:])
        elif isinstance(blk, TrimmedRankedBlock):
            Xd = blk.X.to_dense()
            sq = sorted((float(Xd[i] @ x) - float(blk.y[i])) ** 2
                        for i in range(Xd.shape[0]))
            total -= blk.weight * sum(sq[-blk.q:]) / (2.0 * Xd.shape[0])
        else:
            raise TypeError("unknown block %r" % type(blk).__name__)
    return float(total)
