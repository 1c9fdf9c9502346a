"""Outer solver loop, multistart wrapper and convergence diagnostics.

One iteration: collect the eps_k-active pieces, pick a subgradient v of
the subtracted part by the configured rule, take a proximal step against
the linearisation, and record objective, step norm, branch and residual
information.  The run stops once both the step norm and the exact
stationarity residual (when it is enumerable) fall below their
tolerances, or at the iteration cap.
"""

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .model import active_set, active_gradient_matrix, eval_objective, \
    grad_g, smooth_grad
from .numerics import as_vector
from .rules import BlockPool, SelectionDecision, select_block_aggregate, \
    select_centered, select_full_vertex, select_random_vertex, select_ra
from .sketch import derive_seed, draw_sketch, embedding_budget, rng_from
from .stationarity import block_residual, directional_residual
from .subproblem import ProxConfig, descent_check, prox_step, resolve_sigma

SINGLE_RULES = ("centered", "random_vertex", "full_vertex", "ra")
BLOCK_RULES = ("block_centered", "block_random", "block_greedy_full",
               "block_greedy_sketched")
SAFEGUARDED_RULES = ("ra", "block_greedy_sketched")


@dataclass
class SolverConfig:
    rule: str = "ra"
    eps_schedule: tuple = ("fixed", 1e-10)      # ("fixed", v) | ("power", v0, beta)
    tau_schedule: tuple = ("fixed", 1e-10)      # ("fixed", v) | ("inverse_sqrt", v0)
    sketch_kind: str = "sphere"                 # sphere | gaussian | identity
    sketch_m: int = None                        # fixed row count; None -> budget
    budget_eta: float = 0.8
    budget_delta: float = 0.05
    budget_c: float = 1.0
    budget_horizon: int = None                  # total draws K; None -> max_iters
    budget_per_iteration: bool = False          # delta_k = delta/(k+1)^2 instead
    budget_adapt_dim: bool = False              # d_k = min(n, |A_k| + 1)
    seed: int = 0
    start_index: int = 0                        # multistart slot, keys derived seeds
    prox: ProxConfig = field(default_factory=ProxConfig)
    max_iters: int = 200
    stop_step_tol: float = 1e-10
    stop_residual_tol: float = 1e-8
    enumeration_cap: int = 100_000
    force_vertex: bool = False                  # diagnostics: never fall back


@dataclass
class RunHistory:
    """Per-iteration trace plus final state of one solver run.

    Row k describes iteration k: the objective and residuals are at the
    pre-step iterate x_k, step_norms[k] = ||x_{k+1} - x_k||.  Residual
    columns are None where the block structure made exact enumeration
    exceed the cap; r_lower then carries the greedy lower bound.
    """

    rule: str
    seed: int
    objectives: list = field(default_factory=list)
    step_norms: list = field(default_factory=list)
    r_hats: list = field(default_factory=list)
    r_exacts: list = field(default_factory=list)     # exact-active residual
    r_eps: list = field(default_factory=list)        # eps_k-active residual
    r_lowers: list = field(default_factory=list)
    branches: list = field(default_factory=list)
    lp_flags: list = field(default_factory=list)
    eps_ks: list = field(default_factory=list)
    tau_ks: list = field(default_factory=list)
    m_ks: list = field(default_factory=list)
    descent_ok: list = field(default_factory=list)
    prox_flagged: list = field(default_factory=list)
    eps_weight: float = 1.0      # sum of block weights, scales eps_k in bounds
    mu: float = 0.0
    sigma: float = 0.0
    x_final: np.ndarray = None
    f_final: float = 0.0
    final_r_exact: float = None
    final_r_eps: float = None
    status: str = "max_iters"
    wall_time: float = 0.0

    @property
    def niter(self):
        return len(self.objectives)

    @property
    def lp_call_count(self):
        return int(sum(self.lp_flags))


def schedule_value(spec, k):
    kind = spec[0]
    if kind == "fixed":
        return float(spec[1])
    if kind == "power":
        v0, beta = float(spec[1]), float(spec[2])
        return v0 / (k + 1) ** (1.0 + beta)
    if kind == "inverse_sqrt":
        return float(spec[1]) / math.sqrt(k + 1)
    raise ValueError("unknown schedule kind %r" % (kind,))


def _block_pools(p, x, eps):
    pools = []
    for b in p.blocks:
        if b.explicit:
            vals = b.piece_values(x)
            gap = np.max(vals) - vals
            idx = np.nonzero(gap <= eps)[0]
            pools.append(BlockPool(columns=b.gradient_columns(x, idx),
                                   row_ids=np.arange(idx.size),
                                   slots=1, labels=[int(i) for i in idx]))
        else:
            cols, rows = b.candidate_pool(x, eps)
            pools.append(BlockPool(columns=cols, row_ids=rows,
                                   slots=b.slots,
                                   labels=[int(r) for r in rows]))
    return pools


def _residuals_at(p, x, eps_k, cap):
    """(r_exact, r_eps, r_lower, available) at a point."""
    if len(p.blocks) == 1 and p.blocks[0].explicit:
        r0 = directional_residual(p, x, 0.0).r_d
        re = r0 if eps_k == 0.0 else directional_residual(p, x, eps_k).r_d
        return r0, re, None, True
    try:
        r0 = block_residual(p, x, 0.0, cap).r_d
        re = r0 if eps_k == 0.0 else block_residual(p, x, eps_k, cap).r_d
        return r0, re, None, True
    except ValueError:
        g_eff = grad_g(p, x) - smooth_grad(p, x)
        pools = _block_pools(p, x, 0.0)
        dec = select_block_aggregate(pools, g_eff, "greedy", D=None)
        return None, None, float(np.linalg.norm(dec.v - g_eff)), False


def _sketch_for_iteration(p, cfg, k):
    """(D_k, m_k) for the rules that sample directions."""
    if cfg.sketch_kind == "identity":
        return None, p.dim
    if cfg.sketch_m is not None:
        m_k = int(cfg.sketch_m)
    else:
        d = p.dim
        if cfg.budget_per_iteration:
            delta_k = cfg.budget_delta / (k + 1) ** 2
        else:
            horizon = cfg.budget_horizon or cfg.max_iters
            delta_k = cfg.budget_delta / max(horizon, 1)
        m_k = embedding_budget(d, cfg.budget_eta, delta_k, cfg.budget_c)
    seed_k = derive_seed(cfg.seed, cfg.start_index, k, 3)
    return draw_sketch(m_k, p.dim, cfg.sketch_kind, seed_k), m_k


def _select(p, x, cfg, k, eps_k, tau_k):
    """Dispatch to the configured rule; returns (decision, m_k)."""
    rule = cfg.rule
    g_eff = grad_g(p, x) - smooth_grad(p, x)
    if rule in SINGLE_RULES:
        if len(p.blocks) != 1 or not p.blocks[0].explicit:
            raise ValueError("rule %r needs a single explicit block; "
                             "use a block_* rule" % rule)
        aset = active_set(p, x, eps_k)
        (G,) = active_gradient_matrix(p, x, aset)
        if rule == "centered":
            dec = select_centered(G)
        elif rule == "random_vertex":
            dec = select_random_vertex(G, rng_from(cfg.seed, cfg.start_index, k, 1))
        elif rule == "full_vertex":
            dec = select_full_vertex(G, g_eff)
        else:
            D, m_k = _sketch_for_iteration(p, cfg, k)
            dec = select_ra(G, g_eff, D, tau_k, cfg.force_vertex)
            dec.indices = (int(aset.indices[0][dec.indices[0]]),) \
                if dec.indices is not None and dec.branch == "vertex" else dec.indices
            return dec, m_k
        if dec.branch == "vertex":
            dec.indices = (int(aset.indices[0][dec.indices[0]]),)
        return dec, p.dim
    if rule not in BLOCK_RULES:
        raise ValueError("unknown rule %r" % (rule,))
    pools = _block_pools(p, x, eps_k)
    if rule == "block_centered":
        return select_block_aggregate(pools, g_eff, "centered"), p.dim
    if rule == "block_random":
        rng = rng_from(cfg.seed, cfg.start_index, k, 1)
        return select_block_aggregate(pools, g_eff, "random", rng=rng), p.dim
    if rule == "block_greedy_full":
        return select_block_aggregate(pools, g_eff, "greedy", D=None), p.dim
    D, m_k = _sketch_for_iteration(p, cfg, k)
    dec = select_block_aggregate(pools, g_eff, "greedy", D=D)
    if not cfg.force_vertex and dec.r_hat is not None and dec.r_hat <= tau_k:
        fallback = select_block_aggregate(pools, g_eff, "centered")
        fallback.r_hat = dec.r_hat
        return fallback, m_k
    return dec, m_k


def run(p, x0, cfg):
    """Iterate the chosen rule from x0 until the stop test or the cap."""
    t0 = time.perf_counter()
    x = as_vector(x0, p.dim)
    if p.box is not None and (np.any(x < p.box[0] - 1e-12)
                              or np.any(x > p.box[1] + 1e-12)):
        raise ValueError("start point lies outside the box")
    sigma = resolve_sigma(p.g, cfg.prox.sigma)
    prox_cfg = replace(cfg.prox, sigma=sigma)
    mu = p.g.strong_convexity() + sigma
    h = RunHistory(rule=cfg.rule, seed=cfg.seed, sigma=sigma, mu=mu,
                   eps_weight=float(sum(b.weight for b in p.blocks)))
    F = eval_objective(p, x)
    prev_step = None
    r_ex = r_ep = r_lo = None
    for k in range(cfg.max_iters):
        eps_k = schedule_value(cfg.eps_schedule, k)
        tau_k = schedule_value(cfg.tau_schedule, k)
        r_ex, r_ep, r_lo, avail = _residuals_at(p, x, eps_k,
                                                cfg.enumeration_cap)
        if prev_step is not None and prev_step <= cfg.stop_step_tol and \
                (not avail or r_ep <= cfg.stop_residual_tol):
            h.status = "converged"
            break
        dec, m_k = _select(p, x, cfg, k, eps_k, tau_k)
        v_total = dec.v + smooth_grad(p, x)
        pr = prox_step(p, x, v_total, prox_cfg)
        x_new = pr.x
        step = float(np.linalg.norm(x_new - x))
        if pr.residual > prox_cfg.kappa * step + prox_cfg.qp_tol:
            tighter = replace(prox_cfg, qp_tol=prox_cfg.qp_tol * 1e-2)
            pr = prox_step(p, x, v_total, tighter)
            x_new = pr.x
            step = float(np.linalg.norm(x_new - x))
        F_new = eval_objective(p, x_new)
        h.objectives.append(F)
        h.step_norms.append(step)
        h.r_hats.append(dec.r_hat)
        h.r_exacts.append(r_ex)
        h.r_eps.append(r_ep)
        h.r_lowers.append(r_lo)
        h.branches.append(dec.branch)
        h.lp_flags.append(bool(dec.lp_called))
        h.eps_ks.append(eps_k)
        h.tau_ks.append(tau_k)
        h.m_ks.append(m_k)
        h.descent_ok.append(descent_check(F, F_new, step,
                                          eps_k * h.eps_weight, mu))
        h.prox_flagged.append(not pr.converged)
        x, F, prev_step = x_new, F_new, step
    else:
        eps_last = schedule_value(cfg.eps_schedule, cfg.max_iters - 1)
        r_ex, r_ep, r_lo, avail = _residuals_at(p, x, eps_last,
                                                cfg.enumeration_cap)
        if prev_step is not None and prev_step <= cfg.stop_step_tol and \
                (not avail or r_ep <= cfg.stop_residual_tol):
            h.status = "converged"
    h.x_final = x
    h.f_final = F
    h.final_r_exact = r_ex
    h.final_r_eps = r_ep
    if h.status != "converged":
        h.status = "max_iters"
    if any(h.prox_flagged):
        h.status = "flagged"
    h.wall_time = time.perf_counter() - t0
    return h


@dataclass
class MultistartResult:
    best_index: int
    best: RunHistory
    histories: list
    best_rounded: np.ndarray = None
    best_rounded_objective: float = None


def multistart(p, starts, cfg):
    """Run every start; pick the winner by rounded objective when the
    program carries a binary quadratic, by final objective otherwise."""
    histories = []
    scores = []
    rounded = []
    for i, x0 in enumerate(starts):
        cfg_i = replace(cfg, start_index=i)
        h = run(p, x0, cfg_i)
        histories.append(h)
        if p.qubo is not None:
            z, val = round_binary(p, h.x_final)
            rounded.append((z, val))
            scores.append(val)
        else:
            scores.append(h.f_final)
    best = int(np.argmin(scores))
    out = MultistartResult(best_index=best, best=histories[best],
                           histories=histories)
    if p.qubo is not None:
        out.best_rounded, out.best_rounded_objective = rounded[best]
    return out


def round_binary(p, x):
    """Threshold at one half and evaluate the attached binary quadratic."""
    if p.qubo is None:
        raise ValueError("program has no attached binary quadratic")
    z = (np.asarray(x, dtype=float) >= 0.5).astype(float)
    val = float(z @ p.qubo.matvec(z))
    return z, val


def worst_iterate_diagnostic(h, eta, L_g, sigma, mu):
    """Check the safeguard's residual-vs-step bounds on a finished run.

    Per iteration: R(x_k) <= max(tau_k / (1 - eta), C_eta * step_k) with
    C_eta = (1 + eta) (L_g + sigma) / (1 - eta).  Ergodically: the
    smallest step over the run obeys the sqrt(1/N) energy bound, and the
    smallest residual over the back half obeys the same bound scaled by
    C_eta.  Iterations without an enumerable residual are skipped.
    """
    if not (0.0 <= eta < 1.0):
        raise ValueError("eta must lie in [0, 1)")
    c_eta = (1.0 + eta) * (L_g + sigma) / (1.0 - eta)
    eq17 = []
    residuals = []
    for k in range(h.niter):
        r = h.r_eps[k] if h.r_eps[k] is not None else h.r_exacts[k]
        residuals.append(r)
        if r is None:
            eq17.append(True)
            continue
        bound = max(h.tau_ks[k] / (1.0 - eta), c_eta * h.step_norms[k])
        eq17.append(r <= bound + 1e-9 * (1.0 + r))
    n = h.niter
    report = {"c_eta": c_eta, "eq17_ok": eq17, "eq17_all": all(eq17),
              "eq18_ok": True, "eq19_ok": True}
    if n == 0:
        return report
    # accumulated active-set error, including the descent-check slack
    e_n = sum(e * h.eps_weight for e in h.eps_ks) \
        + sum(1e-9 * (1.0 + abs(f)) for f in h.objectives)
    gap = max(h.objectives[0] - h.f_final + e_n, 0.0)
    min_step = min(h.step_norms)
    bound18 = math.sqrt(2.0 * gap / (mu * n)) if mu > 0 else float("inf")
    report["eq18_ok"] = min_step <= bound18 + 1e-9 * (1.0 + bound18)
    half = (n - 1) // 2
    known = [residuals[k] for k in range(half, n) if residuals[k] is not None]
    if known and mu > 0:
        step_bound = math.sqrt(4.0 * gap / (mu * n))
        bound19 = max(h.tau_ks[half] / (1.0 - eta), c_eta * step_bound)
        report["eq19_ok"] = min(known) <= bound19 + 1e-9 * (1.0 + bound19)
    return report
