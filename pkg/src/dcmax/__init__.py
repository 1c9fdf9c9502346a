"""Solvers for max-structured difference-of-convex programs.

The objective family is

    F(x) = g(x) - s(x) - sum_l w_l * max_i psi_li(x) + const

with g convex quadratic, s an optional smooth convex quadratic and each
block a finite or ranked maximum of affine (or isotropically quadratic)
pieces, optionally over a box.  The driver iterates subgradient
selection plus a proximal step; the safeguarded rule screens active
gradients through a random sketch and falls back to a best convex
combination when no single gradient stands out.
"""

__version__ = "0.1.0"

from .numerics import CsrMatrix, SymmetricMatrix, sym_eigendecomp
from .model import (ScaledIdentityQuad, GeneralQuad, RidgeLeastSquares,
                    MaxBlock, TopKRankedBlock, TrimmedRankedBlock,
                    DcProgram, eval_objective, active_set,
                    active_gradient_matrix)
from .stationarity import (directional_residual, block_residual,
                           criticality_distance)
from .sketch import (rng_from, derive_seed, draw_sketch, embedding_budget,
                     sampled_vertex_residual, distortion_on_span)
from .lp import solve_chebyshev, solve_simplex_least_squares, project_simplex
from .rules import (select_centered, select_random_vertex, select_full_vertex,
                    select_ra, select_block_aggregate)
from .subproblem import ProxConfig, prox_step, solve_box_qp, descent_check
from .driver import (SolverConfig, RunHistory, run, multistart, round_binary,
                     worst_iterate_diagnostic)
from .instances import (gen_signed_pair_affine, gen_signed_pair_quadratic,
                        one_d_trap, near_active_diagnostic, gen_lcp,
                        gen_qubo_random, parse_orlib_qubo,
                        serialize_orlib_qubo, dc_split_shift,
                        dc_split_spectral, build_qubo_penalty, qubo_starts,
                        parse_libsvm, serialize_libsvm, gen_sparse_rows,
                        build_support_model, build_topk_model,
                        build_trimmed_model, serialize_program,
                        parse_program, ParseError)

__all__ = [
    "__version__",
    "CsrMatrix", "SymmetricMatrix", "sym_eigendecomp",
    "ScaledIdentityQuad", "GeneralQuad", "RidgeLeastSquares",
    "MaxBlock", "TopKRankedBlock", "TrimmedRankedBlock", "DcProgram",
    "eval_objective", "active_set", "active_gradient_matrix",
    "directional_residual", "block_residual", "criticality_distance",
    "rng_from", "derive_seed", "draw_sketch", "embedding_budget",
    "sampled_vertex_residual", "distortion_on_span",
    "solve_chebyshev", "solve_simplex_least_squares", "project_simplex",
    "select_centered", "select_random_vertex", "select_full_vertex",
    "select_ra", "select_block_aggregate",
    "ProxConfig", "prox_step", "solve_box_qp", "descent_check",
    "SolverConfig", "RunHistory", "run", "multistart", "round_binary",
    "worst_iterate_diagnostic",
    "gen_signed_pair_affine", "gen_signed_pair_quadratic", "one_d_trap",
    "near_active_diagnostic", "gen_lcp", "gen_qubo_random",
    "parse_orlib_qubo", "serialize_orlib_qubo", "dc_split_shift",
    "dc_split_spectral", "build_qubo_penalty", "qubo_starts",
    "parse_libsvm", "serialize_libsvm", "gen_sparse_rows",
    "build_support_model", "build_topk_model", "build_trimmed_model",
    "serialize_program", "parse_program", "ParseError",
]
