"""Random directional embeddings and their size budgets.

A sketch is a short-fat matrix D (m x n) applied to gradient differences
before norms are compared, so that residual screening costs O(m) per
piece instead of O(n).  Two row ensembles are provided: independent
Gaussian entries with variance 1/m, and uniform sphere rows scaled by
sqrt(n/m).  Both make ||D z|| concentrate around ||z||.

All draws run through counter-based generators keyed by the caller's
seed, so a (m, n, kind, seed) tuple always reproduces the same matrix
on any platform.
"""

import math
from dataclasses import dataclass

import numpy as np

from .numerics import sym_eigendecomp

KINDS = ("gaussian", "sphere")


def rng_from(seed, *path):
    """Deterministic generator derived from a base seed and an index path."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2 ** 64 - 1),
                                spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed, *path):
    """Collapse (seed, path) to a single 64-bit seed."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2 ** 64 - 1),
                                spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class SketchMatrix:
    m: int
    n: int
    values: np.ndarray   # (m, n)
    kind: str
    seed: int

    def apply(self, Z):
        """D @ Z for a vector or an (n, r) column stack."""
        return self.values @ np.asarray(Z, dtype=float)


def draw_sketch(m, n, kind, seed):
    """Draw an (m, n) sketch of the requested row ensemble."""
    if m < 1 or n < 1:
        raise ValueError("sketch dimensions must be positive")
    if kind not in KINDS:
        raise ValueError("unknown sketch kind %r" % (kind,))
    rng = rng_from(seed, 0)
    if kind == "gaussian":
        values = rng.standard_normal((m, n)) / math.sqrt(m)
    else:
        raw = rng.standard_normal((m, n))
        norms = np.linalg.norm(raw, axis=1, keepdims=True)
        values = raw / norms * math.sqrt(n / m)
    return SketchMatrix(m=m, n=n, values=values, kind=kind, seed=int(seed))


def embedding_budget(d, eta, delta, c=1.0):
    """Rows needed to preserve norms on a d-dimensional span.

    m = ceil(c * eta^-2 * (d + ln(1/delta))): distortion at most eta
    with probability at least 1 - delta on any fixed d-dimensional
    subspace.  Callers spread delta over their total number of draws.
    """
    if d < 1:
        raise ValueError("span dimension must be positive")
    if not (0.0 < eta < 1.0):
        raise ValueError("eta must lie in (0, 1)")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    if c <= 0:
        raise ValueError("the budget constant must be positive")
    return int(math.ceil(c * (d + math.log(1.0 / delta)) / (eta * eta)))


def sampled_vertex_residual(D, G, g):
    """Largest sketched gradient deviation and who attains it.

    Computes max_i ||D (G_i - g)|| over the columns of G; ties resolve
    to the smallest column index.  D may be None, meaning the identity
    (no sketching), in which case the residual is exact.
    """
    G = np.asarray(G, dtype=float)
    g = np.asarray(g, dtype=float)
    if G.ndim != 2 or g.shape != (G.shape[0],):
        raise ValueError("G must be (n, r) with g of length n")
    if G.shape[1] == 0:
        raise ValueError("need at least one gradient column")
    diff = G - g[:, None]
    Z = diff if D is None else D.apply(diff)
    norms = np.linalg.norm(Z, axis=0)
    best = int(np.argmax(norms))   # argmax returns the first maximiser
    return float(norms[best]), best, norms


def distortion_on_span(D, U):
    """Extreme singular values of D restricted to an orthonormal span U.

    Both within [1 - eta, 1 + eta] certifies an eta-embedding of the
    subspace.  Returns (sigma_min, sigma_max).
    """
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[0] != D.n:
        raise ValueError("span must be (n, d)")
    ortho = U.T @ U - np.eye(U.shape[1])
    if np.max(np.abs(ortho), initial=0.0) > 1e-8:
        raise ValueError("span columns are not orthonormal")
    Z = D.apply(U)
    w, _ = sym_eigendecomp(Z.T @ Z)
    w = np.clip(w, 0.0, None)
    return float(np.sqrt(w[0])), float(np.sqrt(w[-1]))
