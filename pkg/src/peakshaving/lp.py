"""Linear and quadratic programming backends for sizing and MPC.

Two LP routes are kept deliberately separate: ``solve_dense`` delegates to
a mature pivoting solver and acts as the trusted oracle for small
instances, while ``solve_first_order`` is a self-contained primal-dual
hybrid gradient method with restarts that scales to the multi-month
prescient problems. Their agreement on shared instances is the
correctness check for both.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse as sp

from .battery import SimulationResult
from .economics import CostModel, TariffModel, rho_factor
from .errors import ConfigError, NumericalError
from .timeseries import PowerSeries

__all__ = [
    "LpProblem", "LpSolution", "solve_dense", "solve_first_order",
    "build_prescient_lp", "PrescientLayout", "trace_to_lp_point", "solve_qp",
]

DENSE_LIMIT_DEFAULT = 500


@dataclass(frozen=True)
class LpProblem:
    """min c'x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  lo <= x <= hi."""

    c: np.ndarray
    a_eq: sp.csr_matrix | None = None
    b_eq: np.ndarray | None = None
    a_ub: sp.csr_matrix | None = None
    b_ub: np.ndarray | None = None
    lo: np.ndarray | None = None      # default 0
    hi: np.ndarray | None = None      # default +inf
    offset: float = 0.0               # constant added to the objective

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.float64)
        object.__setattr__(self, "c", c)
        n = c.size
        lo = np.zeros(n) if self.lo is None else np.asarray(self.lo, dtype=np.float64)
        hi = np.full(n, np.inf) if self.hi is None else np.asarray(self.hi, dtype=np.float64)
        if lo.size != n or hi.size != n or np.any(lo > hi):
            raise ConfigError("inconsistent variable bounds")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        for name_a, name_b in (("a_eq", "b_eq"), ("a_ub", "b_ub")):
            a, b = getattr(self, name_a), getattr(self, name_b)
            if (a is None) != (b is None):
                raise ConfigError(f"{name_a} and {name_b} must be given together")
            if a is not None:
                a = sp.csr_matrix(a)
                b = np.asarray(b, dtype=np.float64)
                if a.shape != (b.size, n):
                    raise ConfigError(f"{name_a} shape {a.shape} inconsistent with {b.size}x{n}")
                object.__setattr__(self, name_a, a)
                object.__setattr__(self, name_b, b)

    @property
    def n(self) -> int:
        return self.c.size

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x) + self.offset


@dataclass
class LpSolution:
    x: np.ndarray
    objective: float
    status: str                    # optimal | infeasible | unbounded | iteration-limit
    primal_residual: float = 0.0
    dual_residual: float = 0.0
    gap: float = 0.0
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def solve_dense(problem: LpProblem, tol: float = 1e-9,
                dense_limit: int | None = DENSE_LIMIT_DEFAULT) -> LpSolution:
    """Pivoting-solver backend for small instances (the oracle route)."""
    if dense_limit is not None and problem.n > dense_limit:
        raise ConfigError(
            f"problem has {problem.n} variables, above the dense limit {dense_limit}"
        )
    res = scipy.optimize.linprog(
        problem.c,
        A_ub=problem.a_ub, b_ub=problem.b_ub,
        A_eq=problem.a_eq, b_eq=problem.b_eq,
        bounds=np.column_stack([problem.lo, problem.hi]),
        method="highs",
        options={"primal_feasibility_tolerance": tol,
                 "dual_feasibility_tolerance": tol},
    )
    status = {0: "optimal", 1: "iteration-limit", 2: "infeasible", 3: "unbounded"}.get(
        res.status, "iteration-limit")
    x = res.x if res.x is not None else np.full(problem.n, np.nan)
    obj = problem.objective(x) if res.x is not None else np.nan
    return LpSolution(x=x, objective=obj, status=status,
                      iterations=int(getattr(res, "nit", 0) or 0))


# ---------------------------------------------------------------------------
# first-order backend

def _stack_constraints(problem: LpProblem):
    blocks, rhs = [], []
    n_eq = 0
    if problem.a_eq is not None:
        blocks.append(problem.a_eq)
        rhs.append(problem.b_eq)
        n_eq = problem.b_eq.size
    if problem.a_ub is not None:
        blocks.append(problem.a_ub)
        rhs.append(problem.b_ub)
    if not blocks:
        k = sp.csr_matrix((0, problem.n))
        return k, np.zeros(0), 0
    return sp.vstack(blocks, format="csr"), np.concatenate(rhs), n_eq


def _kkt(problem: LpProblem, k: sp.csr_matrix, b: np.ndarray, n_eq: int,
         x: np.ndarray, y: np.ndarray):
    """Relative primal/dual residuals and duality gap of an iterate."""
    r = k @ x - b
    if r.size:
        r_ineq = np.maximum(r[n_eq:], 0.0)
        primal = max(np.abs(r[:n_eq]).max() if n_eq else 0.0,
                     r_ineq.max() if r_ineq.size else 0.0)
    else:
        primal = 0.0
    primal /= 1.0 + (np.abs(b).max() if b.size else 0.0)

    g = problem.c + (k.T @ y if y.size else 0.0)
    lo, hi = problem.lo, problem.hi
    dual_viol = np.where((g < 0) & np.isinf(hi), -g, 0.0)
    dual_viol += np.where((g > 0) & np.isinf(lo), g, 0.0)
    dual = float(dual_viol.max()) if dual_viol.size else 0.0
    dual /= 1.0 + float(np.abs(problem.c).max() or 0.0)

    bound_term = np.where(g > 0, g * np.where(np.isinf(lo), 0.0, lo),
                          g * np.where(np.isinf(hi), 0.0, hi))
    dual_obj = -float(b @ y) + float(bound_term.sum())
    primal_obj = float(problem.c @ x)
    gap = abs(primal_obj - dual_obj) / (1.0 + abs(primal_obj) + abs(dual_obj))
    return primal, dual, gap


def solve_first_order(problem: LpProblem, tol: float = 1e-8,
                      max_iters: int = 1_000_000) -> LpSolution:
    """Primal-dual hybrid gradient with scaling, averaging and restarts.

    The constraint matrix is equilibrated (alternating row/column rescaling)
    and the primal and dual step sizes are balanced by the ratio of the
    scaled right-hand-side and cost norms, which keeps the method stable on
    problems whose objective is orders of magnitude smaller than the
    constraints.  Progress is measured on the *original* problem; the run
    restarts from the in-cycle iterate average whenever that average
    sufficiently improves the KKT score.  Terminates when relative
    primal/dual residuals and the duality gap all drop below ``tol``; on the
    iteration limit the best iterate seen is returned with a diagnostic
    status.
    """
    n = problem.n
    lo, hi = problem.lo, problem.hi
    k, b, n_eq = _stack_constraints(problem)
    m = b.size

    if m == 0:
        # pure box problem: coordinate-wise descent of c over the box
        x = np.where(problem.c > 0, lo, np.where(problem.c < 0, hi, np.clip(0.0, lo, hi)))
        if np.any(np.isinf(x)):
            return LpSolution(x=x, objective=-np.inf, status="unbounded")
        return LpSolution(x=x, objective=problem.objective(x), status="optimal")

    # equilibrate: alternate sqrt row/column max-norm rescaling of K
    d_row = np.ones(m)
    d_col = np.ones(n)
    ks = k.copy().tocsr()
    for _ in range(10):
        r_max = np.sqrt(np.abs(ks).max(axis=1).toarray().ravel())
        c_max = np.sqrt(np.abs(ks).max(axis=0).toarray().ravel())
        r_max[r_max == 0] = 1.0
        c_max[c_max == 0] = 1.0
        ks = sp.diags(1.0 / r_max) @ ks @ sp.diags(1.0 / c_max)
        d_row /= r_max
        d_col /= c_max
    bs = d_row * b
    cs = d_col * problem.c
    lo_s = np.where(np.isfinite(lo), lo / d_col, lo)
    hi_s = np.where(np.isfinite(hi), hi / d_col, hi)
    ks_t = ks.T.tocsr()
    if m * n <= 100_000:
        ks = ks.toarray()
        ks_t = ks_t.toarray()

    # step sizes from a power-iteration estimate of ||K|| on the scaled
    # matrix, split between primal and dual by the rhs/cost norm ratio
    rng = np.random.default_rng(0)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v) or 1.0
    nv = 1.0
    for _ in range(80):
        w = ks_t @ (ks @ v)
        nv = np.linalg.norm(w)
        if nv == 0:
            break
        v = w / nv
    knorm = float(np.sqrt(nv)) or 1.0
    b_norm = float(np.linalg.norm(bs))
    c_norm = float(np.linalg.norm(cs))
    omega = np.sqrt(b_norm / c_norm) if b_norm > 0 and c_norm > 0 else 1.0
    tau = 0.9 * omega / knorm
    sigma = 0.9 / (omega * knorm)

    def kkt_score(xs_it, ys_it):
        x_orig = d_col * xs_it
        y_orig = d_row * ys_it
        p_r, d_r, gp = _kkt(problem, k, b, n_eq, x_orig, y_orig)
        return max(p_r, d_r, gp), x_orig, y_orig

    x = np.clip(np.zeros(n), lo_s, hi_s)
    y = np.zeros(m)
    x_sum = np.zeros(n)
    y_sum = np.zeros(m)
    n_avg = 0
    check_every = 200
    best = (np.inf, d_col * x, d_row * y)
    score_at_restart, _, _ = kkt_score(x, y)
    last_improve_iter = 0
    status = "iteration-limit"
    it = 0

    while it < max_iters:
        for _ in range(check_every):
            x_new = np.clip(x - tau * (cs + ks_t @ y), lo_s, hi_s)
            y = y + sigma * (ks @ (2.0 * x_new - x) - bs)
            if n_eq < m:
                y[n_eq:] = np.maximum(y[n_eq:], 0.0)
            x = x_new
            x_sum += x
            y_sum += y
            n_avg += 1
            it += 1

        x_avg, y_avg = x_sum / n_avg, y_sum / n_avg
        s_avg, x_avg_o, y_avg_o = kkt_score(x_avg, y_avg)
        s_last, x_o, y_o = kkt_score(x, y)
        score = min(s_avg, s_last)
        if score < best[0]:
            if score < 0.9 * best[0]:
                last_improve_iter = it
            best = (score, (x_avg_o if s_avg < s_last else x_o).copy(),
                    (y_avg_o if s_avg < s_last else y_o).copy())
        if score <= tol:
            status = "optimal"
            break
        if s_avg <= 0.5 * score_at_restart or s_avg > score_at_restart:
            # restart the averaging cycle from the better iterate
            if s_avg < s_last:
                x, y = x_avg.copy(), y_avg.copy()
            score_at_restart = min(s_avg, s_last)
            x_sum[:] = 0.0
            y_sum[:] = 0.0
            n_avg = 0
        if it - last_improve_iter > max(300_000, max_iters // 2):
            break  # stalled

    x_best, y_best = best[1], best[2]
    p_r, d_r, gp = _kkt(problem, k, b, n_eq, x_best, y_best)
    if status != "optimal":
        status = "infeasible" if p_r > 100 * tol else "iteration-limit"
    return LpSolution(x=x_best, objective=problem.objective(x_best), status=status,
                      primal_residual=p_r, dual_residual=d_r, gap=gp, iterations=it)


# ---------------------------------------------------------------------------
# prescient sizing LP

@dataclass(frozen=True)
class PrescientLayout:
    """Variable slices of the prescient LP and its economic constants."""

    n_steps: int
    months: np.ndarray
    s_ch: slice
    s_ds: slice
    s_e: slice
    s_plus: slice
    s_minus: slice
    s_peak: slice
    i_ebat: int
    i_pbat: int
    rho: float
    energy_kwh: float
    scale: float                      # 1 / (rho * E)
    fixed_term: float                 # crf * c_fixed * scale


def build_prescient_lp(series: PowerSeries, tariff: TariffModel, cost: CostModel,
                       fix_size: tuple[float, float] | None = None,
                       eta_ch: float = 0.95, eta_ds: float = 0.95,
                       ) -> tuple[LpProblem, PrescientLayout]:
    """Joint sizing-and-operation LP whose objective is the LCOE.

    The LCOE denominator uses the uncontrolled profile's energy, a data
    constant, so the objective stays linear. The fixed project cost enters
    as a constant offset; callers deciding between "install" and
    "don't install" compare the optimum against the no-battery baseline.
    """
    p = series.values
    t_n = p.size
    dt = series.step_hours
    months = series.month_labels()
    month_ids = np.unique(months)
    m_n = month_ids.size

    s_ch = slice(0, t_n)
    s_ds = slice(t_n, 2 * t_n)
    s_e = slice(2 * t_n, 3 * t_n + 1)
    s_plus = slice(3 * t_n + 1, 4 * t_n + 1)
    s_minus = slice(4 * t_n + 1, 5 * t_n + 1)
    s_peak = slice(5 * t_n + 1, 5 * t_n + 1 + m_n)
    i_ebat = 5 * t_n + 1 + m_n
    i_pbat = i_ebat + 1
    n = i_pbat + 1

    rho = rho_factor(series.n_days())
    energy = series.energy_kwh()
    scale = 1.0 / (rho * energy)
    crf = cost.crf

    c = np.zeros(n)
    c[s_plus] = rho * dt * tariff.lambda_imp * scale
    c[s_minus] = -rho * dt * tariff.lambda_exp * scale
    c[s_peak] = rho * tariff.lambda_peak * scale
    c[i_ebat] = crf * cost.c_energy * scale
    c[i_pbat] = crf * cost.c_power * scale

    eq_rows, eq_cols, eq_vals, b_eq = [], [], [], []

    def eq(r, cidx, v):
        eq_rows.append(r)
        eq_cols.append(cidx)
        eq_vals.append(v)

    r = 0
    # dynamics: e[t+1] - e[t] - eta_ch*dt*ch[t] + (dt/eta_ds)*ds[t] = 0
    for t in range(t_n):
        eq(r, s_e.start + t + 1, 1.0)
        eq(r, s_e.start + t, -1.0)
        eq(r, s_ch.start + t, -eta_ch * dt)
        eq(r, s_ds.start + t, dt / eta_ds)
        b_eq.append(0.0)
        r += 1
    # power balance: plus[t] - minus[t] - ch[t] + ds[t] = p[t]
    for t in range(t_n):
        eq(r, s_plus.start + t, 1.0)
        eq(r, s_minus.start + t, -1.0)
        eq(r, s_ch.start + t, -1.0)
        eq(r, s_ds.start + t, 1.0)
        b_eq.append(float(p[t]))
        r += 1
    a_eq = sp.csr_matrix((eq_vals, (eq_rows, eq_cols)), shape=(r, n))

    ub_rows, ub_cols, ub_vals, b_ub = [], [], [], []

    def ub(r2, cidx, v):
        ub_rows.append(r2)
        ub_cols.append(cidx)
        ub_vals.append(v)

    month_col = {int(mid): s_peak.start + j for j, mid in enumerate(month_ids)}
    r2 = 0
    for t in range(t_n):
        # ch[t] <= P_bat ; ds[t] <= P_bat
        ub(r2, s_ch.start + t, 1.0)
        ub(r2, i_pbat, -1.0)
        b_ub.append(0.0)
        r2 += 1
        ub(r2, s_ds.start + t, 1.0)
        ub(r2, i_pbat, -1.0)
        b_ub.append(0.0)
        r2 += 1
        # plus[t] <= peak of its month
        ub(r2, s_plus.start + t, 1.0)
        ub(r2, month_col[int(months[t])], -1.0)
        b_ub.append(0.0)
        r2 += 1
    for t in range(t_n + 1):
        # e[t] <= E_bat
        ub(r2, s_e.start + t, 1.0)
        ub(r2, i_ebat, -1.0)
        b_ub.append(0.0)
        r2 += 1
    a_ub = sp.csr_matrix((ub_vals, (ub_rows, ub_cols)), shape=(r2, n))

    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    if fix_size is not None:
        e_fix, p_fix = fix_size
        lo[i_ebat] = hi[i_ebat] = float(e_fix)
        lo[i_pbat] = hi[i_pbat] = float(p_fix)

    fixed_term = crf * cost.c_fixed * scale
    layout = PrescientLayout(
        n_steps=t_n, months=months, s_ch=s_ch, s_ds=s_ds, s_e=s_e,
        s_plus=s_plus, s_minus=s_minus, s_peak=s_peak,
        i_ebat=i_ebat, i_pbat=i_pbat, rho=rho, energy_kwh=energy,
        scale=scale, fixed_term=fixed_term,
    )
    problem = LpProblem(c=c, a_eq=a_eq, b_eq=np.array(b_eq),
                        a_ub=a_ub, b_ub=np.array(b_ub), lo=lo, hi=hi,
                        offset=fixed_term)
    return problem, layout


def trace_to_lp_point(layout: PrescientLayout, series: PowerSeries,
                      result: SimulationResult, e_bat: float, p_bat: float) -> np.ndarray:
    """Map a simulated operation into the prescient LP's variable space.

    Any feasible closed-loop trace becomes a feasible LP point, which is
    what makes the LP optimum a lower bound on every policy's cost.
    """
    t_n = layout.n_steps
    if result.p_b.size != t_n:
        raise ConfigError("trace length does not match the LP horizon")
    x = np.zeros(layout.i_pbat + 1)
    x[layout.s_ch] = np.maximum(result.p_b, 0.0)
    x[layout.s_ds] = np.maximum(-result.p_b, 0.0)
    x[layout.s_e] = result.soc
    x[layout.s_plus] = np.maximum(result.grid, 0.0)
    x[layout.s_minus] = np.maximum(-result.grid, 0.0)
    month_ids = np.unique(layout.months)
    for j, mid in enumerate(month_ids):
        sel = layout.months == mid
        x[layout.s_peak.start + j] = max(0.0, float(np.maximum(result.grid[sel], 0.0).max()))
    x[layout.i_ebat] = e_bat
    x[layout.i_pbat] = p_bat
    return x


# ---------------------------------------------------------------------------
# QP solver (ADMM, OSQP-style) for the MPC subproblem

def solve_qp(p_mat: np.ndarray, q: np.ndarray, a_mat: np.ndarray,
             l: np.ndarray, u: np.ndarray, tol: float = 1e-6,
             max_iters: int = 20_000, warm: tuple[np.ndarray, np.ndarray] | None = None,
             factor=None):
    """min 0.5 x'Px + q'x  s.t.  l <= Ax <= u, via ADMM with a cached factor.

    ``factor`` may carry a precomputed Cholesky factor of P + sigma*I +
    rho*A'A (from :func:`qp_factorize`) so receding-horizon callers pay
    the factorization once. Returns (x, y, iterations); raises
    NumericalError when the KKT residual fails to reach ``tol``.
    """
    sigma, rho, alpha = 1e-6, 1.0, 1.6
    n = q.size
    if factor is None:
        factor = qp_factorize(p_mat, a_mat, sigma=sigma, rho=rho)
    cho = factor
    x = np.zeros(n) if warm is None else warm[0].copy()
    y = np.zeros(l.size) if warm is None else warm[1].copy()
    z = np.clip(a_mat @ x, l, u)
    r_prim = r_dual = np.inf
    for it in range(1, max_iters + 1):
        rhs = sigma * x - q + a_mat.T @ (rho * z - y)
        x_t = scipy.linalg.cho_solve(cho, rhs)
        ax_t = a_mat @ x_t
        x = alpha * x_t + (1.0 - alpha) * x
        ax = alpha * ax_t + (1.0 - alpha) * z
        z_new = np.clip(ax + y / rho, l, u)
        y = y + rho * (ax - z_new)
        z = z_new
        if it % 25 == 0:
            ax_cur = a_mat @ x
            r_prim = np.abs(ax_cur - z).max() if z.size else 0.0
            r_dual = np.abs(p_mat @ x + q + a_mat.T @ y).max()
            if r_prim <= tol and r_dual <= tol:
                return x, y, it
            if it % 500 == 0 and min(r_prim, r_dual) > 0 and \
                    max(r_prim, r_dual) > 100.0 * min(r_prim, r_dual):
                # residual balancing: re-penalize and refactorize locally,
                # leaving any caller-cached factor untouched
                rho = float(np.clip(rho * np.sqrt(r_prim / r_dual),
                                    1e-6, 1e6))
                cho = qp_factorize(p_mat, a_mat, sigma=sigma, rho=rho)
    raise NumericalError(
        f"QP did not reach tolerance {tol} in {max_iters} iterations "
        f"(primal {r_prim:.2e}, dual {r_dual:.2e})"
    )


def qp_factorize(p_mat: np.ndarray, a_mat: np.ndarray,
                 sigma: float = 1e-6, rho: float = 1.0):
    """Cholesky factor of the ADMM normal matrix; reusable across solves."""
    m = p_mat + sigma * np.eye(p_mat.shape[0]) + rho * (a_mat.T @ a_mat)
    return scipy.linalg.cho_factor(m)
