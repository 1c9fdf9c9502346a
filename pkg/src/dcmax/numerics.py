"""Small dense/sparse linear-algebra kernels the solver stack builds on.

Contents
--------
    as_vector                       -- validated 1-d float64 view
    CsrMatrix                       -- compressed sparse row matrix
    SymmetricMatrix                 -- packed lower-triangular symmetric matrix
    sym_eigendecomp                 -- cyclic Jacobi eigendecomposition
    power_iteration_extreme_eigs    -- largest and smallest eigenvalue

Everything here is deterministic.  Randomness used elsewhere in the
package flows through seeded counter-based generators; this module only
uses a fixed-seed start vector for power iteration.
"""

import numpy as np

# dense eigendecomposition refuses matrices above this order
DENSE_EIG_CAP = 512


def as_vector(x, dim=None):
    """Return ``x`` as a finite 1-d float64 array.

    Raises ValueError on wrong rank, NaN/Inf entries, or (when ``dim``
    is given) length mismatch.
    """
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError("expected a 1-d vector, got shape %s" % (v.shape,))
    if not np.all(np.isfinite(v)):
        raise ValueError("vector contains NaN or Inf entries")
    if dim is not None and v.size != dim:
        raise ValueError("expected a vector of length %d, got %d" % (dim, v.size))
    return v


class CsrMatrix:
    """Compressed sparse row matrix with strict structural validation.

    Row offsets must be nondecreasing and column indices strictly
    increasing within each row; both are checked at construction so a
    malformed structure can never reach the numeric kernels.  Matrix-
    vector products accumulate with ``np.bincount`` which is sequential,
    so repeated products on identical inputs are bit-identical.
    """

    __slots__ = ("n_rows", "n_cols", "indptr", "indices", "data")

    def __init__(self, n_rows, n_cols, indptr, indices, data):
        indptr = np.asarray(indptr, dtype=np.int64)
        indices = np.asarray(indices, dtype=np.int64)
        data = np.asarray(data, dtype=float)
        if n_rows < 0 or n_cols < 0:
            raise ValueError("negative matrix dimension")
        if indptr.ndim != 1 or indptr.size != n_rows + 1:
            raise ValueError("indptr must have length n_rows + 1")
        if indptr[0] != 0 or indptr[-1] != indices.size:
            raise ValueError("indptr endpoints inconsistent with index count")
        if np.any(np.diff(indptr) < 0):
            raise ValueError("row offsets must be nondecreasing")
        if indices.size != data.size:
            raise ValueError("indices and data length mismatch")
        if indices.size and (indices.min() < 0 or indices.max() >= n_cols):
            raise ValueError("column index out of range")
        if not np.all(np.isfinite(data)):
            raise ValueError("matrix values contain NaN or Inf")
        # strictly increasing column indices within each row
        for i in range(n_rows):
            lo, hi = indptr[i], indptr[i + 1]
            if hi - lo > 1 and np.any(np.diff(indices[lo:hi]) <= 0):
                raise ValueError("row %d has non-increasing column indices" % i)
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.indptr = indptr
        self.indices = indices
        self.data = data

    @property
    def nnz(self):
        return self.data.size

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @classmethod
    def from_dense(cls, M, keep_tol=0.0):
        M = np.asarray(M, dtype=float)
        if M.ndim != 2:
            raise ValueError("expected a 2-d array")
        indptr = [0]
        indices = []
        data = []
        for i in range(M.shape[0]):
            (cols,) = np.nonzero(np.abs(M[i]) > keep_tol)
            indices.append(cols)
            data.append(M[i, cols])
            indptr.append(indptr[-1] + cols.size)
        idx = np.concatenate(indices) if indices else np.zeros(0, dtype=np.int64)
        val = np.concatenate(data) if data else np.zeros(0)
        return cls(M.shape[0], M.shape[1], np.array(indptr), idx, val)

    @classmethod
    def from_rows(cls, rows, n_cols):
        """Build from a list of (column_indices, values) pairs, one per row."""
        indptr = [0]
        indices = []
        data = []
        for cols, vals in rows:
            cols = np.asarray(cols, dtype=np.int64)
            indices.append(cols)
            data.append(np.asarray(vals, dtype=float))
            indptr.append(indptr[-1] + cols.size)
        idx = np.concatenate(indices) if indices else np.zeros(0, dtype=np.int64)
        val = np.concatenate(data) if data else np.zeros(0)
        return cls(len(indptr) - 1, n_cols, np.array(indptr), idx, val)

    def _row_of_nnz(self):
        return np.repeat(np.arange(self.n_rows), np.diff(self.indptr))

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_cols,):
            raise ValueError("matvec dimension mismatch")
        prod = self.data * x[self.indices]
        return np.bincount(self._row_of_nnz(), weights=prod, minlength=self.n_rows)

    def rmatvec(self, y):
        """Transpose product A^T y."""
        y = np.asarray(y, dtype=float)
        if y.shape != (self.n_rows,):
            raise ValueError("rmatvec dimension mismatch")
        prod = self.data * y[self._row_of_nnz()]
        return np.bincount(self.indices, weights=prod, minlength=self.n_cols)

    def matmat(self, B):
        """Product A @ B for a dense (n_cols, k) array."""
        B = np.asarray(B, dtype=float)
        out = np.zeros((self.n_rows, B.shape[1]))
        for i in range(self.n_rows):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            if hi > lo:
                out[i] = self.data[lo:hi] @ B[self.indices[lo:hi]]
        return out

    def row(self, i):
        """Dense copy of row i."""
        out = np.zeros(self.n_cols)
        lo, hi = self.indptr[i], self.indptr[i + 1]
        out[self.indices[lo:hi]] = self.data[lo:hi]
        return out

    def row_norms(self):
        sq = np.bincount(self._row_of_nnz(), weights=self.data ** 2,
                         minlength=self.n_rows)
        return np.sqrt(sq)

    def gram(self):
        """Dense A^T A; intended for tall matrices with few columns."""
        G = np.zeros((self.n_cols, self.n_cols))
        for i in range(self.n_rows):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            cols = self.indices[lo:hi]
            vals = self.data[lo:hi]
            G[np.ix_(cols, cols)] += np.outer(vals, vals)
        return G

    def to_dense(self):
        M = np.zeros((self.n_rows, self.n_cols))
        for i in range(self.n_rows):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            M[i, self.indices[lo:hi]] = self.data[lo:hi]
        return M


def _packed_size(n):
    return n * (n + 1) // 2


class SymmetricMatrix:
    """Symmetric matrix stored as the packed lower triangle, row-major.

    Storing one triangle makes symmetry structural rather than a
    property to re-check.  ``full()`` materialises (and caches) the
    dense square form for matvec-heavy callers.
    """

    __slots__ = ("n", "packed", "_full")

    def __init__(self, n, packed):
        packed = np.asarray(packed, dtype=float)
        if packed.ndim != 1 or packed.size != _packed_size(n):
            raise ValueError("packed triangle has wrong length for order %d" % n)
        if not np.all(np.isfinite(packed)):
            raise ValueError("matrix values contain NaN or Inf")
        self.n = int(n)
        self.packed = packed
        self._full = None

    @classmethod
    def from_dense(cls, M, sym_tol=1e-8):
        M = np.asarray(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("expected a square matrix")
        scale = max(1.0, float(np.max(np.abs(M))) if M.size else 0.0)
        if np.max(np.abs(M - M.T), initial=0.0) > sym_tol * scale:
            raise ValueError("matrix is not symmetric within tolerance")
        S = 0.5 * (M + M.T)
        n = M.shape[0]
        rows, cols = np.tril_indices(n)
        return cls(n, S[rows, cols])

    @classmethod
    def zeros(cls, n):
        return cls(n, np.zeros(_packed_size(n)))

    @classmethod
    def diagonal(cls, d):
        d = as_vector(d)
        n = d.size
        packed = np.zeros(_packed_size(n))
        idx = np.arange(n) * (np.arange(n) + 1) // 2 + np.arange(n)
        packed[idx] = d
        return cls(n, packed)

    @classmethod
    def identity(cls, n):
        return cls.diagonal(np.ones(n))

    def full(self):
        if self._full is None:
            M = np.zeros((self.n, self.n))
            rows, cols = np.tril_indices(self.n)
            M[rows, cols] = self.packed
            M[cols, rows] = self.packed
            self._full = M
        return self._full

    def matvec(self, x):
        return self.full() @ np.asarray(x, dtype=float)

    def diag(self):
        idx = np.arange(self.n) * (np.arange(self.n) + 1) // 2 + np.arange(self.n)
        return self.packed[idx].copy()

    def add_diagonal(self, gamma):
        """Return a new matrix equal to self + gamma * I."""
        out = self.packed.copy()
        idx = np.arange(self.n) * (np.arange(self.n) + 1) // 2 + np.arange(self.n)
        out[idx] += gamma
        return SymmetricMatrix(self.n, out)

    def scaled(self, c):
        return SymmetricMatrix(self.n, c * self.packed)

    def max_abs(self):
        return float(np.max(np.abs(self.packed), initial=0.0))


def _as_square(A):
    if isinstance(A, SymmetricMatrix):
        return A.full()
    M = np.asarray(A, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expected a square matrix")
    return M


def sym_eigendecomp(A, max_sweeps=60, tol=1e-13):
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi.

    Returns (w, V) with eigenvalues ``w`` ascending and orthonormal
    eigenvector columns ``V`` so that A = V diag(w) V^T.  Refuses
    matrices of order above DENSE_EIG_CAP; callers with larger problems
    are expected to use power_iteration_extreme_eigs instead.
    """
    M = _as_square(A).copy()
    n = M.shape[0]
    if n > DENSE_EIG_CAP:
        raise ValueError("matrix order %d exceeds dense cap %d" % (n, DENSE_EIG_CAP))
    V = np.eye(n)
    if n <= 1:
        return M.diagonal().copy(), V
    norm = np.linalg.norm(M)
    if norm == 0.0:
        return np.zeros(n), V
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(M ** 2) - np.sum(np.diag(M) ** 2), 0.0))
        if off <= tol * norm:
            break
        thresh = off / n  # rotate only entries that matter this sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = M[p, q]
                if abs(apq) < thresh * 1e-6:
                    continue
                app, aqq = M[p, p], M[q, q]
                theta = 0.5 * (aqq - app) / apq
                t = np.sign(theta) / (abs(theta) + np.sqrt(1.0 + theta * theta))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # two-sided rotation on rows/columns p and q
                rp = M[p].copy()
                rq = M[q].copy()
                M[p] = c * rp - s * rq
                M[q] = s * rp + c * rq
                cp = M[:, p].copy()
                cq = M[:, q].copy()
                M[:, p] = c * cp - s * cq
                M[:, q] = s * cp + c * cq
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    w = np.diag(M).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def _rayleigh_dominant(M, iters, tol, v0):
    """Dominant eigenvalue (by magnitude) of symmetric PSD-shifted M."""
    v = v0 / np.linalg.norm(v0)
    lam = 0.0
    for _ in range(iters):
        w = M @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v_new = w / nw
        lam_new = float(v_new @ (M @ v_new))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        lam, v = lam_new, v_new
    return lam


def power_iteration_extreme_eigs(A, iters=500, tol=1e-12):
    """Estimate (lambda_max, lambda_min) of a symmetric matrix.

    Plain power iteration gives the spectral radius; the extremes are
    then recovered from power iteration on the nonnegative shifts
    A + rho*I and rho*I - A.  The start vector comes from a fixed-seed
    generator so results are reproducible functions of the input.
    """
    M = _as_square(A)
    n = M.shape[0]
    if n == 0:
        raise ValueError("empty matrix")
    if iters < 1:
        raise ValueError("iters must be positive")
    v0 = np.random.Generator(np.random.Philox(key=0x9E3779B97F4A7C15)).standard_normal(n)
    rho = abs(_rayleigh_dominant(M, iters, tol, v0))
    if rho == 0.0:
        return 0.0, 0.0
    eye = np.eye(n)
    lam_max = _rayleigh_dominant(M + rho * eye, iters, tol, v0) - rho
    lam_min = rho - _rayleigh_dominant(rho * eye - M, iters, tol, v0)
    return float(lam_max), float(lam_min)
