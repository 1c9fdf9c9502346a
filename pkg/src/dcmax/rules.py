"""Subgradient selection rules.

Given the active piece gradients at the current point, a rule picks the
vector v that the next proximal subproblem linearises against.  For a
single max block the choices are the active-gradient mean (centered), a
uniformly random active gradient, the gradient farthest from grad_g
(full scan), or the sketched variant of the scan with a safeguarded
fallback to a Chebyshev-optimal convex combination.

Multi-block programs pick one active gradient per block (or a subset of
admissible elements for a ranked block) and sum the choices; the greedy
modes build that aggregate one block at a time, each step keeping the
candidate that moves the partial sum farthest from grad_g, measured in
full space or after sketching.
"""

from dataclasses import dataclass

import numpy as np

from .lp import solve_chebyshev
from .sketch import sampled_vertex_residual


@dataclass
class SelectionDecision:
    v: np.ndarray           # chosen subgradient of the subtracted part
    branch: str             # "vertex" or "combination"
    indices: object = None  # per-block labels of the chosen pieces
    alpha: np.ndarray = None
    r_hat: float = None     # residual the rule compared against its threshold
    lp_called: bool = False
    lp: object = None


@dataclass
class BlockPool:
    """Candidate columns a block offers the aggregate rules.

    columns are weight-scaled gradients (n, P); row_ids ties columns to
    underlying elements so a ranked block never uses the same element
    twice; slots is how many distinct elements the block contributes
    (1 for an explicit block).
    """

    columns: np.ndarray
    row_ids: np.ndarray
    slots: int
    labels: list


def select_centered(G):
    """Mean of the active gradients; the classical smoothing choice."""
    G = np.asarray(G, dtype=float)
    r = G.shape[1]
    alpha = np.full(r, 1.0 / r)
    return SelectionDecision(v=G @ alpha, branch="combination", alpha=alpha)


def select_random_vertex(G, rng):
    G = np.asarray(G, dtype=float)
    j = int(rng.integers(G.shape[1]))
    return SelectionDecision(v=G[:, j].copy(), branch="vertex", indices=(j,))


def select_full_vertex(G, g):
    """Active gradient farthest from g, smallest index on ties."""
    r_hat, j, _ = sampled_vertex_residual(None, G, g)
    G = np.asarray(G, dtype=float)
    return SelectionDecision(v=G[:, j].copy(), branch="vertex", indices=(j,),
                             r_hat=r_hat)


def select_ra(G, g, D, tau, force_vertex=False):
    """Sketched scan with safeguard.

    When the sketched residual exceeds tau the attaining gradient is
    kept as-is (vertex branch); otherwise the rule falls back to the
    convex combination whose sketched image is Chebyshev-closest to the
    sketched grad_g.  A singleton active set short-circuits without an
    LP solve.  ``force_vertex`` disables the fallback entirely (used by
    diagnostics).
    """
    G = np.asarray(G, dtype=float)
    g = np.asarray(g, dtype=float)
    r_hat, j, _ = sampled_vertex_residual(D, G, g)
    if force_vertex or r_hat > tau:
        return SelectionDecision(v=G[:, j].copy(), branch="vertex",
                                 indices=(j,), r_hat=r_hat)
    if G.shape[1] == 1:
        return SelectionDecision(v=G[:, 0].copy(), branch="combination",
                                 indices=(0,), alpha=np.ones(1), r_hat=r_hat)
    A = G if D is None else D.apply(G)
    b = g if D is None else D.apply(g)
    sol = solve_chebyshev(A, b)
    dec = SelectionDecision(v=G @ sol.alpha, branch="combination",
                            alpha=sol.alpha, r_hat=r_hat, lp_called=True)
    dec.lp = sol
    return dec


def _pool_centered(pool):
    P = pool.columns.shape[1]
    if pool.slots == 1:
        return pool.columns.mean(axis=1)
    # slots/P times the column sum averages the admissible subsets
    return (pool.slots / P) * pool.columns.sum(axis=1)


def _pool_random(pool, rng):
    uniq = []
    for r in pool.row_ids:
        if r not in uniq:
            uniq.append(int(r))
    rows = [uniq[i] for i in rng.choice(len(uniq), size=pool.slots,
                                        replace=False)]
    cols = []
    for r in rows:
        options = [j for j in range(pool.row_ids.size) if pool.row_ids[j] == r]
        cols.append(options[int(rng.integers(len(options)))]
                    if len(options) > 1 else options[0])
    return cols


def _pool_greedy(pool, carry, target, D):
    """Pick the pool's slots one at a time, maximising the carried norm."""
    carry_s = carry if D is None else D.apply(carry)
    target_s = target if D is None else D.apply(target)
    cols_s = pool.columns if D is None else D.apply(pool.columns)
    chosen = []
    available = np.ones(pool.columns.shape[1], dtype=bool)
    base = carry_s - target_s
    for _ in range(pool.slots):
        scores = np.linalg.norm(base[:, None] + cols_s, axis=0)
        scores[~available] = -np.inf
        j = int(np.argmax(scores))
        chosen.append(j)
        available &= pool.row_ids != pool.row_ids[j]
        base = base + cols_s[:, j]
    return chosen


def select_block_aggregate(pools, g, mode, rng=None, D=None):
    """Aggregate selection across blocks.

    mode "centered": per-block averaged choice, summed (combination).
    mode "random": uniform admissible choice per block (vertex).
    mode "greedy": blocks visited in ascending index, each step keeping
    the candidate that maximises || v_partial + candidate - g ||, in
    full space when D is None and after applying D otherwise (vertex).
    """
    g = np.asarray(g, dtype=float)
    n = g.size
    v = np.zeros(n)
    indices = []
    if mode == "centered":
        for pool in pools:
            v += _pool_centered(pool)
            indices.append(None)
        return SelectionDecision(v=v, branch="combination", indices=indices)
    if mode == "random":
        if rng is None:
            raise ValueError("random aggregate mode needs a generator")
        for pool in pools:
            cols = _pool_random(pool, rng)
            v += pool.columns[:, cols].sum(axis=1)
            indices.append(tuple(pool.labels[j] for j in cols))
        return SelectionDecision(v=v, branch="vertex", indices=indices)
    if mode == "greedy":
        for pool in pools:
            cols = _pool_greedy(pool, v, g, D)
            v += pool.columns[:, cols].sum(axis=1)
            indices.append(tuple(pool.labels[j] for j in cols))
        r_hat = float(np.linalg.norm((v - g) if D is None
                                     else D.apply(v - g)))
        return SelectionDecision(v=v, branch="vertex", indices=indices,
                                 r_hat=r_hat)
    raise ValueError("unknown aggregate mode %r" % (mode,))
