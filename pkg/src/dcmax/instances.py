"""Instance generators, file parsers, splits and model builders.

Covers the concrete program families the benchmarks run on: signed-pair
max-affine and max-quadratic programs, a one-dimensional two-piece trap,
a four-piece near-activity diagnostic, box-constrained complementarity
penalties, binary quadratic penalties built from parsed or generated
matrices, and data-driven ranked models (support, top-k, trimmed).
Generated programs serialize to a small versioned text format so a run
can be reproduced without the generator.
"""

import math
from dataclasses import dataclass

import numpy as np

from .model import DcProgram, GeneralQuad, MaxBlock, RidgeLeastSquares, \
    ScaledIdentityQuad, TopKRankedBlock, TrimmedRankedBlock
from .numerics import CsrMatrix, SymmetricMatrix, sym_eigendecomp, \
    power_iteration_extreme_eigs, DENSE_EIG_CAP
from .sketch import rng_from


class ParseError(ValueError):
    pass


# ---------------------------------------------------------------------------
# synthetic generators


def _unit_rows(rng, p, n):
    raw = rng.standard_normal((p, n))
    return raw / np.linalg.norm(raw, axis=1, keepdims=True)


def gen_signed_pair_affine(n, p, seed):
    """(1/2)||x||^2 minus a max over p random rows and their negations.

    Row i is r_i * u_i with r_i uniform on (0, 2] and u_i uniform on the
    unit sphere; rows p..2p-1 mirror rows 0..p-1 with flipped sign, so
    the subtracted max is symmetric and vanishes at the origin.
    """
    rng = rng_from(seed, 11)
    u = _unit_rows(rng, p, n)
    radii = 2.0 * (1.0 - rng.random(p))   # uniform on (0, 2]
    A = u * radii[:, None]
    block = MaxBlock(np.vstack([A, -A]))
    return DcProgram(g=ScaledIdentityQuad(1.0), blocks=[block])


def gen_signed_pair_quadratic(n, p, gamma, seed):
    """Same signed rows with a shared isotropic curvature on every piece."""
    if gamma < 0:
        raise ValueError("piece curvature must be nonnegative")
    rng = rng_from(seed, 11)
    u = _unit_rows(rng, p, n)
    radii = 2.0 * (1.0 - rng.random(p))
    A = u * radii[:, None]
    block = MaxBlock(np.vstack([A, -A]), quad=gamma)
    return DcProgram(g=ScaledIdentityQuad(1.0), blocks=[block])


def one_d_trap():
    """(1/2)x^2 - |x|: the origin is critical but not stationary in any
    direction, while both of x = +1, -1 are global minimisers."""
    block = MaxBlock(np.array([[1.0], [-1.0]]))
    return DcProgram(g=ScaledIdentityQuad(1.0), blocks=[block])


def near_active_diagnostic(slopes=(0.010, 0.015, 0.020), drop=3e-4):
    """Flat piece plus three shallow pieces tied within ``drop`` at zero.

    At x = 0 only the flat piece is exactly active, so zero is already
    stationary, but every activity tolerance above ``drop`` sees all
    four pieces and a vertex step walks away from the solution.
    """
    coeffs = np.array([[0.0]] + [[s] for s in slopes])
    offsets = np.array([0.0] + [-drop] * len(slopes))
    block = MaxBlock(coeffs, offsets)
    return DcProgram(g=ScaledIdentityQuad(1.0), blocks=[block])


@dataclass
class LcpInstance:
    program: DcProgram
    M: CsrMatrix
    c: np.ndarray
    rho: float

    def gaps(self, x):
        """min(x_i, (Mx)_i) per coordinate."""
        return np.minimum(x, self.M.matvec(x))


def gen_lcp(n, nnz_per_row, seed, rho=1.0):
    """Box-constrained complementarity penalty on [0, 1]^n.

    (1/2)||x - c||^2 + rho * sum_i min(x_i, (Mx)_i) with c = 1/2 and M
    row-stochastic, ``nnz_per_row`` entries per row.  The min rewrites
    as x_i + (Mx)_i - max(x_i, (Mx)_i), leaving a quadratic-plus-linear
    convex part and n two-piece max blocks.
    """
    if not (1 <= nnz_per_row <= n):
        raise ValueError("nnz_per_row out of range")
    rng = rng_from(seed, 13)
    rows = []
    for _ in range(n):
        cols = np.sort(rng.choice(n, size=nnz_per_row, replace=False))
        vals = 1.0 - rng.random(nnz_per_row)   # uniform on (0, 1]
        vals = vals / vals.sum()
        rows.append((cols, vals))
    M = CsrMatrix.from_rows(rows, n)
    c = np.full(n, 0.5)
    u = 1.0 + M.rmatvec(np.ones(n))
    g = GeneralQuad(SymmetricMatrix.identity(n), f=rho * u - c,
                    const=0.5 * float(c @ c))
    blocks = []
    eye_row = np.zeros(n)
    for i in range(n):
        eye_row[:] = 0.0
        eye_row[i] = 1.0
        blocks.append(MaxBlock(np.vstack([eye_row, M.row(i)]), weight=rho))
    program = DcProgram(g=g, blocks=blocks,
                        box=(np.zeros(n), np.ones(n)))
    return LcpInstance(program=program, M=M, c=c, rho=rho)


# ---------------------------------------------------------------------------
# binary quadratics


@dataclass
class QuboInstance:
    n: int
    Q: SymmetricMatrix        # minimisation convention: minimise z^T Q z
    name: str = ""
    sense_converted: bool = False   # True when parsed from a max-form file


def gen_qubo_random(n, density, scale, seed):
    """Random symmetric integer matrix in minimisation form.

    Diagonal entries always present; each off-diagonal pair appears with
    probability ``density``; values are uniform integers in
    [-scale, scale].
    """
    rng = rng_from(seed, 17)
    Q = np.zeros((n, n))
    for i in range(n):
        Q[i, i] = rng.integers(-scale, scale + 1)
        for j in range(i + 1, n):
            if rng.random() < density:
                v = float(rng.integers(-scale, scale + 1))
                Q[i, j] = v
                Q[j, i] = v
    return QuboInstance(n=n, Q=SymmetricMatrix.from_dense(Q),
                        name="random-n%d-s%d" % (n, seed))


def _tokens_with_lines(text):
    for lineno, line in enumerate(text.splitlines(), 1):
        for tok in line.split():
            yield tok, lineno


def parse_orlib_qubo(text, name_prefix="instance"):
    """Parse a concatenated binary-quadratic benchmark file.

    Layout: instance count; then per instance a header "n nnz" followed
    by nnz triplets "i j value" with 1-based indices.  Each value lands
    at both (i, j) and (j, i).  The files state a maximisation problem,
    so the returned matrices are negated into minimisation form.
    """
    stream = _tokens_with_lines(text)

    def next_tok(what):
        try:
            return next(stream)
        except StopIteration:
            raise ParseError("unexpected end of file while reading %s" % what)

    def next_int(what):
        tok, lineno = next_tok(what)
        try:
            return int(tok), lineno
        except ValueError:
            raise ParseError("line %d: expected integer %s, got %r"
                             % (lineno, what, tok))

    def next_float(what):
        tok, lineno = next_tok(what)
        try:
            return float(tok), lineno
        except ValueError:
            raise ParseError("line %d: expected number %s, got %r"
                             % (lineno, what, tok))

    count, _ = next_int("instance count")
    if count < 1:
        raise ParseError("instance count must be positive")
    out = []
    for idx in range(1, count + 1):
        n, _ = next_int("matrix order")
        nnz, _ = next_int("entry count")
        if n < 1 or nnz < 0:
            raise ParseError("instance %d: bad header (n=%d, nnz=%d)"
                             % (idx, n, nnz))
        Q = np.zeros((n, n))
        seen = set()
        for _ in range(nnz):
            i, lineno = next_int("row index")
            j, _ = next_int("column index")
            v, _ = next_float("entry value")
            if not (1 <= i <= n and 1 <= j <= n):
                raise ParseError("line %d: index (%d, %d) out of range"
                                 % (lineno, i, j))
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ParseError("line %d: duplicate entry (%d, %d)"
                                 % (lineno, i, j))
            seen.add(key)
            Q[i - 1, j - 1] = v
            Q[j - 1, i - 1] = v
        out.append(QuboInstance(n=n, Q=SymmetricMatrix.from_dense(-Q),
                                name="%s.%d" % (name_prefix, idx),
                                sense_converted=True))
    leftover = next(stream, None)
    if leftover is not None:
        raise ParseError("line %d: trailing token %r" % (leftover[1],
                                                         leftover[0]))
    return out


def serialize_orlib_qubo(instances):
    """Inverse of parse_orlib_qubo (maximisation-form files only)."""
    lines = ["%d" % len(instances)]
    for inst in instances:
        if not inst.sense_converted:
            raise ValueError("instance %r is not in converted max form"
                             % inst.name)
        Qmax = -inst.Q.full()
        entries = [(i + 1, j + 1, Qmax[i, j])
                   for i in range(inst.n) for j in range(i, inst.n)
                   if Qmax[i, j] != 0.0]
        lines.append("%d %d" % (inst.n, len(entries)))
        for i, j, v in entries:
            lines.append("%d %d %s" % (i, j, _fmt(v)))
    return "\n".join(lines) + "\n"


def dc_split_shift(Q):
    """Q = (Q + gamma I) - gamma I with gamma = max(0, -lambda_min) + 1."""
    if Q.n <= DENSE_EIG_CAP:
        w, _ = sym_eigendecomp(Q)
        lam_min = float(w[0])
    else:
        _, lam_min = power_iteration_extreme_eigs(Q.full())
    gamma = max(0.0, -lam_min) + 1.0
    return Q.add_diagonal(gamma), SymmetricMatrix.diagonal(np.full(Q.n, gamma)), gamma


def dc_split_spectral(Q):
    """Q = Q_+ - Q_- using the positive/negative eigenvalue parts."""
    w, V = sym_eigendecomp(Q)
    pos = V @ np.diag(np.maximum(w, 0.0)) @ V.T
    neg = V @ np.diag(np.maximum(-w, 0.0)) @ V.T
    return SymmetricMatrix.from_dense(pos, sym_tol=1e-6), \
        SymmetricMatrix.from_dense(neg, sym_tol=1e-6)


def build_qubo_penalty(inst, split="shift", rho=1.0):
    """Continuous penalty relaxation of min z^T Q z over binaries.

    x^T Q_+ x  -  [ x^T Q_- x + rho * sum_i max(x_i - 1/2, 1/2 - x_i) ]
    + rho n / 2   over [0, 1]^n.

    The smooth x^T Q_- x rides along as the program's smooth term; each
    coordinate contributes a two-piece block encoding the distance to
    the nearest binary value.
    """
    if rho <= 0:
        raise ValueError("penalty weight must be positive")
    if split == "shift":
        Qp, Qm, _ = dc_split_shift(inst.Q)
    elif split == "spectral":
        Qp, Qm = dc_split_spectral(inst.Q)
    else:
        raise ValueError("unknown split %r" % (split,))
    n = inst.n
    g = GeneralQuad(Qp.scaled(2.0))
    smooth = GeneralQuad(Qm.scaled(2.0))
    blocks = []
    for i in range(n):
        coeffs = np.zeros((2, n))
        coeffs[0, i] = 1.0
        coeffs[1, i] = -1.0
        blocks.append(MaxBlock(coeffs, offsets=np.array([-0.5, 0.5]),
                               weight=rho))
    return DcProgram(g=g, blocks=blocks, box=(np.zeros(n), np.ones(n)),
                     additive_const=rho * n / 2.0, smooth=smooth,
                     qubo=inst.Q)


def qubo_starts(n, count, seed):
    """First start at the all-half point, the rest uniform on the box."""
    starts = [np.full(n, 0.5)]
    for i in range(1, count):
        starts.append(rng_from(seed, 19, i).random(n))
    return starts


# ---------------------------------------------------------------------------
# sparse datasets


KNOWN_DIMS = {"a8a": 123, "phishing": 68, "w8a": 300}


@dataclass
class SparseDataset:
    X: CsrMatrix
    labels: np.ndarray
    dropped_rows: int = 0
    labels_mapped: bool = False
    name: str = ""


def parse_libsvm(text, n_features=None, name=None):
    """Parse sparse "label index:value" rows with 1-based ascending indices.

    Rows without a single nonzero feature are dropped (and counted);
    0/1 labels are mapped to -1/+1 with a flag.  The feature dimension
    comes from the known table for recognised dataset names, from
    ``n_features``, or from the largest index seen.
    """
    rows = []
    labels = []
    dropped = 0
    max_idx = 0
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        try:
            label = float(parts[0])
        except ValueError:
            raise ParseError("line %d: bad label %r" % (lineno, parts[0]))
        cols = []
        vals = []
        prev = 0
        for tok in parts[1:]:
            pieces = tok.split(":")
            if len(pieces) != 2:
                raise ParseError("line %d: bad feature token %r"
                                 % (lineno, tok))
            try:
                idx = int(pieces[0])
                val = float(pieces[1])
            except ValueError:
                raise ParseError("line %d: bad feature token %r"
                                 % (lineno, tok))
            if idx < 1:
                raise ParseError("line %d: index %d is not 1-based"
                                 % (lineno, idx))
            if idx <= prev:
                raise ParseError("line %d: feature indices must ascend "
                                 "(%d after %d)" % (lineno, idx, prev))
            prev = idx
            if val != 0.0:
                cols.append(idx - 1)
                vals.append(val)
                max_idx = max(max_idx, idx)
        if not cols:
            dropped += 1
            continue
        rows.append((np.asarray(cols), np.asarray(vals)))
        labels.append(label)
    if not rows:
        raise ParseError("no usable rows")
    labels = np.asarray(labels)
    mapped = False
    uniq = set(np.unique(labels).tolist())
    if uniq <= {-1.0, 1.0}:
        pass
    elif uniq <= {0.0, 1.0}:
        labels = np.where(labels == 0.0, -1.0, 1.0)
        mapped = True
    else:
        raise ParseError("labels are not binary: %s" % sorted(uniq))
    if name in KNOWN_DIMS:
        dim = KNOWN_DIMS[name]
    elif n_features is not None:
        dim = int(n_features)
    else:
        dim = max_idx
    if dim < max_idx:
        raise ParseError("declared dimension %d below max index %d"
                         % (dim, max_idx))
    X = CsrMatrix.from_rows(rows, dim)
    return SparseDataset(X=X, labels=labels, dropped_rows=dropped,
                         labels_mapped=mapped, name=name or "")


def serialize_libsvm(ds):
    lines = []
    for i in range(ds.X.n_rows):
        lo, hi = ds.X.indptr[i], ds.X.indptr[i + 1]
        feats = " ".join("%d:%s" % (ds.X.indices[j] + 1, _fmt(ds.X.data[j]))
                         for j in range(lo, hi))
        lines.append("%s %s" % (_fmt(ds.labels[i]), feats))
    return "\n".join(lines) + "\n"


def gen_sparse_rows(n_rows, n_cols, nnz_per_row, seed, scale=1.0):
    """Random sparse rows with fixed support size and Gaussian values."""
    rng = rng_from(seed, 23)
    rows = []
    for _ in range(n_rows):
        cols = np.sort(rng.choice(n_cols, size=nnz_per_row, replace=False))
        vals = scale * rng.standard_normal(nnz_per_row)
        rows.append((cols, vals))
    return CsrMatrix.from_rows(rows, n_cols)


# ---------------------------------------------------------------------------
# data-driven models


def _signed_row_stack(X):
    indptr = np.concatenate([X.indptr, X.indptr[1:] + X.nnz])
    indices = np.concatenate([X.indices, X.indices])
    data = np.concatenate([X.data, -X.data])
    return CsrMatrix(2 * X.n_rows, X.n_cols, indptr, indices, data)


def build_support_model(X):
    """(1/2)||w||^2 - max_i |a_i^T w| over the rows of X."""
    if not isinstance(X, CsrMatrix):
        X = CsrMatrix.from_dense(np.asarray(X, dtype=float))
    return DcProgram(g=ScaledIdentityQuad(1.0),
                     blocks=[MaxBlock(_signed_row_stack(X))])


def build_topk_model(X, k):
    """(1/2)||w||^2 minus the sum of the k largest |a_i^T w|."""
    return DcProgram(g=ScaledIdentityQuad(1.0),
                     blocks=[TopKRankedBlock(X, k)])


def build_trimmed_model(X, y, q, lam):
    """Least-squares keeping only the N - q best-fit rows.

    (1/(2N))||Xw - y||^2 + (lam/2)||w||^2 minus the top-q share of the
    squared residuals.
    """
    if not isinstance(X, CsrMatrix):
        X = CsrMatrix.from_dense(np.asarray(X, dtype=float))
    g = RidgeLeastSquares(X, y, lam, scale=1.0 / X.n_rows)
    return DcProgram(g=g, blocks=[TrimmedRankedBlock(X, y, q)])


# ---------------------------------------------------------------------------
# program serialization


def _fmt(x):
    if float(x) == int(x) and abs(x) < 1e15:
        return "%d" % int(x)
    return repr(float(x))


def _emit_matrix(lines, tag, M):
    if isinstance(M, CsrMatrix):
        dense_iter = ((i, M.indices[j], M.data[j])
                      for i in range(M.n_rows)
                      for j in range(M.indptr[i], M.indptr[i + 1]))
        shape = M.shape
    else:
        M = np.asarray(M, dtype=float)
        dense_iter = ((i, j, M[i, j]) for i in range(M.shape[0])
                      for j in range(M.shape[1]) if M[i, j] != 0.0)
        shape = M.shape
    entries = list(dense_iter)
    lines.append("%s %d %d %d" % (tag, shape[0], shape[1], len(entries)))
    for i, j, v in entries:
        lines.append("%d %d %s" % (i, j, _fmt(v)))


def _emit_vector(lines, tag, v):
    lines.append("%s %d %s" % (tag, len(v), " ".join(_fmt(x) for x in v)))


def serialize_program(p, kind="custom", params=None):
    """Versioned plain-text form of an explicit-block program."""
    if not p.all_explicit():
        raise ValueError("only explicit-block programs serialize")
    lines = ["dcmax-program 1"]
    lines.append("kind %s" % kind)
    for key, val in (params or {}).items():
        lines.append("param %s %s" % (key, val))
    lines.append("dim %d" % p.dim)
    lines.append("const %s" % _fmt(p.additive_const))
    for tag, part in (("g", p.g), ("smooth", p.smooth)):
        if part is None:
            continue
        if isinstance(part, ScaledIdentityQuad):
            lines.append("%s scaled_identity %s" % (tag, _fmt(part.c)))
        elif isinstance(part, GeneralQuad):
            lines.append("%s general_quad %s" % (tag, _fmt(part.const)))
            _emit_vector(lines, "f", part.f)
            _emit_matrix(lines, "H", part.H.full())
        else:
            raise ValueError("cannot serialize convex part %r"
                             % type(part).__name__)
    if p.box is not None:
        _emit_vector(lines, "box_lo", p.box[0])
        _emit_vector(lines, "box_hi", p.box[1])
    for b in p.blocks:
        lines.append("block %d %s" % (b.n_pieces, _fmt(b.weight)))
        _emit_vector(lines, "offsets", b.offsets)
        _emit_vector(lines, "quad", b.quad)
        _emit_matrix(lines, "coeffs", b.coeffs)
    lines.append("end")
    return "\n".join(lines) + "\n"


def parse_program(text):
    """Rebuild a program written by serialize_program."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(lines):
            raise ParseError("line %d: unexpected end of program text"
                             % (pos + 1))
        ln = lines[pos]
        pos += 1
        return ln

    def peek():
        return lines[pos] if pos < len(lines) else ""

    head = take().split()
    if head[:2] != ["dcmax-program", "1"]:
        raise ParseError("line 1: not a recognised program header")
    kind = None
    params = {}
    dim = None
    const = 0.0
    g = None
    smooth = None
    box_lo = box_hi = None
    blocks = []

    def read_vector(expect_tag):
        parts = take().split()
        if parts[0] != expect_tag:
            raise ParseError("line %d: expected %s" % (pos, expect_tag))
        cnt = int(parts[1])
        vals = np.array([float(v) for v in parts[2:]])
        if vals.size != cnt:
            raise ParseError("line %d: vector length mismatch" % pos)
        return vals

    def read_matrix(expect_tag):
        parts = take().split()
        if parts[0] != expect_tag:
            raise ParseError("line %d: expected %s" % (pos, expect_tag))
        rows, cols, nnz = int(parts[1]), int(parts[2]), int(parts[3])
        M = np.zeros((rows, cols))
        for _ in range(nnz):
            i, j, v = take().split()
            M[int(i), int(j)] = float(v)
        return M

    def read_convex(parts):
        if parts[1] == "scaled_identity":
            return ScaledIdentityQuad(float(parts[2]))
        if parts[1] == "general_quad":
            cst = float(parts[2])
            f = read_vector("f")
            H = read_matrix("H")
            return GeneralQuad(SymmetricMatrix.from_dense(H), f=f, const=cst)
        raise ParseError("line %d: unknown convex kind %r" % (pos, parts[1]))

    while True:
        parts = take().split()
        tag = parts[0]
        if tag == "end":
            break
        if tag == "kind":
            kind = parts[1]
        elif tag == "param":
            params[parts[1]] = parts[2]
        elif tag == "dim":
            dim = int(parts[1])
        elif tag == "const":
            const = float(parts[1])
        elif tag == "g":
            g = read_convex(parts)
        elif tag == "smooth":
            smooth = read_convex(parts)
        elif tag == "box_lo":
            pos -= 1
            box_lo = read_vector("box_lo")
            box_hi = read_vector("box_hi")
        elif tag == "block":
            q = int(parts[1])
            weight = float(parts[2])
            offsets = read_vector("offsets")
            quad = read_vector("quad")
            coeffs = read_matrix("coeffs")
            if coeffs.shape[0] != q:
                raise ParseError("line %d: block size mismatch" % pos)
            blocks.append(MaxBlock(coeffs, offsets=offsets, quad=quad,
                                   weight=weight))
        else:
            raise ParseError("line %d: unknown tag %r" % (pos, tag))
    if g is None or not blocks:
        raise ParseError("program text is missing g or blocks")
    box = (box_lo, box_hi) if box_lo is not None else None
    prog = DcProgram(g=g, blocks=blocks, box=box, additive_const=const,
                     smooth=smooth)
    if dim is not None and prog.dim != dim:
        raise ParseError("declared dimension %d does not match blocks" % dim)
    return prog, kind, params
