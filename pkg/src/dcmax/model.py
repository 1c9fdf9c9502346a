"""Representations of max-structured difference-of-convex programs.

A program is

    F(x) = g(x) - s(x) - sum_l w_l * max_i psi_{l,i}(x) + const

with g convex quadratic-family, s an optional smooth convex term whose
gradient joins every subgradient of the subtracted part, and each max
block a finite collection of pieces.  Explicit blocks restrict pieces to
affine or affine-plus-isotropic-quadratic, which covers every concrete
experiment family; ranked blocks (sum of the k largest magnitudes, sum
of the q largest squared residuals) are carried implicitly and generate
their candidate piece gradients from the current point instead of
enumerating them.
"""

from dataclasses import dataclass

import numpy as np

from .numerics import CsrMatrix, SymmetricMatrix, as_vector, \
    power_iteration_extreme_eigs


# ---------------------------------------------------------------------------
# convex parts


class ScaledIdentityQuad:
    """g(x) = (c/2) ||x||^2 with c > 0."""

    def __init__(self, c):
        if not (np.isfinite(c) and c > 0):
            raise ValueError("curvature must be positive and finite")
        self.c = float(c)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * self.c * float(x @ x)

    def grad(self, x):
        return self.c * np.asarray(x, dtype=float)

    def strong_convexity(self):
        return self.c

    def lipschitz(self):
        return self.c


class GeneralQuad:
    """g(x) = (1/2) x^T H x + f^T x + const with H symmetric PSD.

    H with all off-diagonal entries zero and a constant diagonal is
    detected at construction; prox steps against such a term have a
    closed form (see subproblem.prox_step).
    """

    def __init__(self, H, f=None, const=0.0, psd_tol=1e-8):
        if not isinstance(H, SymmetricMatrix):
            H = SymmetricMatrix.from_dense(np.asarray(H, dtype=float))
        self.H = H
        self.f = as_vector(f, H.n) if f is not None else np.zeros(H.n)
        self.const = float(const)
        lam_max, lam_min = power_iteration_extreme_eigs(H.full())
        scale = max(abs(lam_max), abs(lam_min), 1.0)
        if lam_min < -psd_tol * scale:
            raise ValueError("quadratic term is not positive semidefinite "
                             "(lambda_min approx %.3e)" % lam_min)
        self._lam_max = max(lam_max, 0.0)
        self._lam_min = max(lam_min, 0.0)
        d = H.diag()
        dense = H.full()
        offdiag = dense - np.diag(d)
        self.iso_scale = None
        if np.all(offdiag == 0.0) and d.size and np.all(d == d[0]):
            self.iso_scale = float(d[0])

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * float(x @ self.H.matvec(x)) + float(self.f @ x) + self.const

    def grad(self, x):
        return self.H.matvec(x) + self.f

    def strong_convexity(self):
        # treat tiny estimates as zero curvature
        if self._lam_min <= 1e-6 * max(1.0, self._lam_max):
            return 0.0
        return self._lam_min

    def lipschitz(self):
        return self._lam_max


class RidgeLeastSquares:
    """g(w) = scale * (1/2) ||X w - y||^2 + (lam/2) ||w||^2."""

    def __init__(self, X, y, lam, scale=1.0):
        if not isinstance(X, CsrMatrix):
            X = CsrMatrix.from_dense(np.asarray(X, dtype=float))
        self.X = X
        self.y = as_vector(y, X.n_rows)
        if lam < 0 or scale <= 0:
            raise ValueError("need lam >= 0 and scale > 0")
        self.lam = float(lam)
        self.scale = float(scale)
        self._gram = None
        self._lam_max = None

    def gram(self):
        if self._gram is None:
            self._gram = self.X.gram()
        return self._gram

    def value(self, w):
        r = self.X.matvec(w) - self.y
        w = np.asarray(w, dtype=float)
        return 0.5 * self.scale * float(r @ r) + 0.5 * self.lam * float(w @ w)

    def grad(self, w):
        r = self.X.matvec(w) - self.y
        return self.scale * self.X.rmatvec(r) + self.lam * np.asarray(w, dtype=float)

    def strong_convexity(self):
        return self.lam

    def lipschitz(self):
        if self._lam_max is None:
            lam_max, _ = power_iteration_extreme_eigs(self.gram())
            self._lam_max = max(lam_max, 0.0)
        return self.scale * self._lam_max + self.lam


# ---------------------------------------------------------------------------
# max blocks


class MaxBlock:
    """weight * max_i [ a_i^T x + b_i + (gamma_i/2) ||x||^2 ].

    ``coeffs`` holds the piece rows a_i, dense (q, n) or CSR.  ``quad``
    is a scalar or per-piece array of nonnegative curvatures.
    """

    explicit = True

    def __init__(self, coeffs, offsets=None, quad=0.0, weight=1.0):
        if isinstance(coeffs, CsrMatrix):
            self.coeffs = coeffs
            q, n = coeffs.shape
        else:
            self.coeffs = np.asarray(coeffs, dtype=float)
            if self.coeffs.ndim != 2:
                raise ValueError("piece coefficients must be 2-d")
            if not np.all(np.isfinite(self.coeffs)):
                raise ValueError("piece coefficients contain NaN or Inf")
            q, n = self.coeffs.shape
        if q < 1:
            raise ValueError("a max block needs at least one piece")
        self.offsets = as_vector(offsets, q) if offsets is not None else np.zeros(q)
        quad = np.asarray(quad, dtype=float)
        if quad.ndim == 0:
            quad = np.full(q, float(quad))
        if quad.shape != (q,) or np.any(quad < 0) or not np.all(np.isfinite(quad)):
            raise ValueError("piece curvatures must be nonnegative, one per piece")
        self.quad = quad
        if not (np.isfinite(weight) and weight > 0):
            raise ValueError("block weight must be positive")
        self.weight = float(weight)
        self.n_pieces = q
        self.dim = n

    def piece_values(self, x):
        """Values psi_i(x) of all pieces, unweighted."""
        x = np.asarray(x, dtype=float)
        lin = self.coeffs.matvec(x) if isinstance(self.coeffs, CsrMatrix) \
            else self.coeffs @ x
        out = lin + self.offsets
        if np.any(self.quad != 0.0):
            out = out + 0.5 * self.quad * float(x @ x)
        return out

    def value(self, x):
        """weight * max_i psi_i(x)."""
        return self.weight * float(np.max(self.piece_values(x)))

    def gradient_columns(self, x, idx):
        """Weight-scaled piece gradients as columns of an (n, r) array."""
        idx = np.asarray(idx, dtype=np.int64)
        if isinstance(self.coeffs, CsrMatrix):
            cols = np.stack([self.coeffs.row(i) for i in idx], axis=1) \
                if idx.size else np.zeros((self.dim, 0))
        else:
            cols = self.coeffs[idx].T.copy()
        quad = self.quad[idx]
        if np.any(quad != 0.0):
            cols = cols + np.asarray(x, dtype=float)[:, None] * quad[None, :]
        return self.weight * cols

    def lipschitz_pieces(self):
        """Max curvature across pieces (gradient Lipschitz constant)."""
        return self.weight * float(np.max(self.quad))


class TopKRankedBlock:
    """weight * (sum of the k largest |a_i^T x| over the rows of X).

    Pieces are the signed k-row subsets; they are never enumerated.
    Candidate piece gradients at a point are generated on demand from
    the current responses.
    """

    explicit = False

    def __init__(self, X, k, weight=1.0):
        if not isinstance(X, CsrMatrix):
            X = CsrMatrix.from_dense(np.asarray(X, dtype=float))
        if not (1 <= k <= X.n_rows):
            raise ValueError("k must be between 1 and the number of rows")
        if weight <= 0:
            raise ValueError("block weight must be positive")
        self.X = X
        self.k = int(k)
        self.weight = float(weight)
        self.dim = X.n_cols
        self.slots = int(k)

    def responses(self, x):
        return self.X.matvec(x)

    def value(self, x):
        r = np.abs(self.responses(x))
        top = np.partition(r, r.size - self.k)[r.size - self.k:]
        return self.weight * float(np.sum(top))

    def candidate_pool(self, x, eps):
        """Admissible element gradients for k-subset selection at x.

        Rows whose |response| is within eps of the k-th largest may
        still enter a near-best subset; rows with |response| <= eps may
        enter with either sign.  Returns (columns, row_ids) where
        columns are weight-scaled gradients s * a_i.
        """
        r = self.responses(x)
        mag = np.abs(r)
        kth = np.partition(mag, mag.size - self.k)[mag.size - self.k]
        admissible = np.nonzero(mag >= kth - eps)[0]
        cols = []
        rows = []
        for i in admissible:
            a = self.X.row(i)
            if mag[i] <= eps:
                cols.append(a)
                rows.append(i)
                cols.append(-a)
                rows.append(i)
            else:
                cols.append(np.sign(r[i]) * a)
                rows.append(i)
        columns = self.weight * np.stack(cols, axis=1)
        return columns, np.asarray(rows, dtype=np.int64)


class TrimmedRankedBlock:
    """weight * (1/(2N)) * (sum of the q largest (a_i^T w - y_i)^2).

    The pieces are q-row subsets of squared residuals; candidate element
    gradients at w are (1/N) (a_i^T w - y_i) a_i.
    """

    explicit = False

    def __init__(self, X, y, q, weight=1.0):
        if not isinstance(X, CsrMatrix):
            X = CsrMatrix.from_dense(np.asarray(X, dtype=float))
        if not (1 <= q <= X.n_rows):
            raise ValueError("q must be between 1 and the number of rows")
        if weight <= 0:
            raise ValueError("block weight must be positive")
        self.X = X
        self.y = as_vector(y, X.n_rows)
        self.q = int(q)
        self.weight = float(weight)
        self.dim = X.n_cols
        self.slots = int(q)

    def residuals(self, w):
        return self.X.matvec(w) - self.y

    def value(self, w):
        sq = self.residuals(w) ** 2
        top = np.partition(sq, sq.size - self.q)[sq.size - self.q:]
        return self.weight * float(np.sum(top)) / (2.0 * self.X.n_rows)

    def candidate_pool(self, w, eps):
        sq = self.residuals(w) ** 2
        qth = np.partition(sq, sq.size - self.q)[sq.size - self.q]
        admissible = np.nonzero(sq >= qth - eps)[0]
        r = self.residuals(w)
        scale = self.weight / self.X.n_rows
        columns = np.stack(
            [scale * r[i] * self.X.row(i) for i in admissible], axis=1)
        return columns, admissible.astype(np.int64)


# ---------------------------------------------------------------------------
# programs


@dataclass
class DcProgram:
    """Container tying together the convex part, max blocks and box.

    box is None or a (lo, hi) pair of vectors; smooth is an optional
    convex term subtracted alongside the blocks; qubo optionally carries
    the binary quadratic a penalty program was built from, used by the
    rounding step.
    """

    g: object
    blocks: list
    box: tuple = None
    additive_const: float = 0.0
    smooth: object = None
    qubo: SymmetricMatrix = None

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("a program needs at least one max block")
        dims = {b.dim for b in self.blocks}
        if len(dims) != 1:
            raise ValueError("blocks disagree on dimension")
        (self.dim,) = dims
        if self.box is not None:
            lo = as_vector(self.box[0], self.dim)
            hi = as_vector(self.box[1], self.dim)
            if np.any(lo > hi):
                raise ValueError("box lower bound exceeds upper bound")
            self.box = (lo, hi)

    def clip(self, x):
        if self.box is None:
            return np.asarray(x, dtype=float)
        return np.clip(x, self.box[0], self.box[1])

    def all_explicit(self):
        return all(b.explicit for b in self.blocks)


@dataclass
class ActiveSet:
    """Per-block eps-active piece indices, with the eps they came from."""

    indices: list
    eps: float

    def sizes(self):
        return [idx.size for idx in self.indices]

    def product_size(self):
        out = 1
        for s in self.sizes():
            out *= int(s)
        return out


def eval_objective(p, x):
    """F(x) = g(x) - s(x) - sum_l value_l(x) + const."""
    x = as_vector(x, p.dim)
    total = p.g.value(x) + p.additive_const
    if p.smooth is not None:
        total -= p.smooth.value(x)
    for b in p.blocks:
        total -= b.value(x)
    return float(total)


def grad_g(p, x):
    """Gradient of the convex part g alone."""
    return p.g.grad(as_vector(x, p.dim))


def smooth_grad(p, x):
    """Gradient of the subtracted smooth term (zero vector if absent)."""
    if p.smooth is None:
        return np.zeros(p.dim)
    return p.smooth.grad(as_vector(x, p.dim))


def active_set(p, x, eps):
    """Indices of pieces within eps of each block's max, per block.

    Only defined for explicit blocks; ranked blocks generate candidates
    through their own pool interface.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    x = as_vector(x, p.dim)
    indices = []
    for b in p.blocks:
        if not b.explicit:
            raise TypeError("active_set is only defined for explicit blocks")
        vals = b.piece_values(x)
        gap = np.max(vals) - vals
        indices.append(np.nonzero(gap <= eps)[0])
    return ActiveSet(indices=indices, eps=float(eps))


def active_gradient_matrix(p, x, aset):
    """Weight-scaled gradient columns of the active pieces, per block.

    Re-checks the gaps at x and refuses a stale active set (one whose
    indices are no longer within its eps at this point).
    """
    x = as_vector(x, p.dim)
    out = []
    for b, idx in zip(p.blocks, aset.indices):
        vals = b.piece_values(x)
        gap = np.max(vals) - vals
        if idx.size == 0 or np.any(gap[idx] > aset.eps * (1 + 1e-12) + 1e-15):
            raise ValueError("stale active set: gap recheck failed")
        out.append(b.gradient_columns(x, idx))
    return out
