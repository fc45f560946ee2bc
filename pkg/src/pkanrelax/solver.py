"""Lower bounds for the envelope relaxation by Kelley's cutting planes.

The master problem is a bounded-variable LP solved with a dense tableau
simplex.  ``lp_solve`` is the standalone two-phase primal method; the
cutting-plane loop keeps one tableau alive and re-optimizes with the dual
simplex after each batch of cuts, since adding rows preserves dual
feasibility of the previous optimal basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import Infeasible, PkanRelaxError
from .pkan import RelaxedProblem

LP_TOL = 1e-9
# degenerate pivots allowed, per row+column, before switching to Bland's rule
BLAND_AFTER = 10
DEFAULT_FEAS_TOL = 1e-6
DEFAULT_MAX_ITERS = 2000


class LPError(PkanRelaxError, ArithmeticError):
    """Internal simplex failure (unboundedness, numerical breakdown)."""


@dataclass
class LinearProgram:
    """``min c.x`` s.t. ``A x <= b`` and ``lb <= x <= ub`` (all bounds finite)."""

    c: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        self.lb = np.asarray(self.lb, dtype=float).reshape(n)
        self.ub = np.asarray(self.ub, dtype=float).reshape(n)
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float).reshape(self.A.shape[0])
        if not (np.all(np.isfinite(self.lb)) and np.all(np.isfinite(self.ub))):
            raise ValueError("variable bounds must be finite")
        if np.any(self.lb > self.ub):
            raise ValueError("lower bound above upper bound")


@dataclass
class LPResult:
    value: float
    x: np.ndarray
    pivots: int


class _Tableau:
    """Dense simplex tableau over variables with bounds ``0 <= v <= ub``.

    ``T`` holds ``B^-1 [A | rhs]``; the last column is the transformed
    right-hand side.  Nonbasic variables sit at 0 or at their upper bound.
    """

    def __init__(self, A, rhs, ub, cost, basis, at_upper):
        self.T = np.hstack([A, rhs[:, None]]).astype(float)
        self.ub = np.asarray(ub, dtype=float)
        self.cost = np.asarray(cost, dtype=float)
        self.basis = np.asarray(basis, dtype=int)
        self.at_upper = np.asarray(at_upper, dtype=bool)
        self.pivots = 0
        self.degenerate = 0
        self.bland = False

    @property
    def m(self):
        return self.T.shape[0]

    @property
    def n(self):
        return self.T.shape[1] - 1

    def nonbasic_mask(self):
        mask = np.ones(self.n, dtype=bool)
        mask[self.basis] = False
        return mask

    def basic_values(self):
        up = self.at_upper & self.nonbasic_mask()
        xb = self.T[:, -1].copy()
        if up.any():
            xb -= self.T[:, :-1][:, up] @ self.ub[up]
        return xb

    def solution(self):
        v = np.where(self.at_upper, self.ub, 0.0)
        v[self.basis] = self.basic_values()
        return v

    def reduced_costs(self):
        return self.cost - self.cost[self.basis] @ self.T[:, :-1]

    def pivot(self, p, j):
        T = self.T
        T[p] /= T[p, j]
        col = T[:, j].copy()
        col[p] = 0.0
        T -= col[:, None] * T[p]
        self.basis[p] = j
        self.at_upper[j] = False
        self.pivots += 1

    # -- primal ---------------------------------------------------------

    def primal(self, max_pivots):
        limit = BLAND_AFTER * (self.m + self.n)
        while True:
            if self.pivots > max_pivots:
                raise LPError("pivot limit reached")
            if self.degenerate >= limit:
                self.bland = True
            d = self.reduced_costs()
            nb = self.nonbasic_mask()
            can_up = nb & ~self.at_upper & (d < -LP_TOL) & (self.ub > 0)
            can_down = nb & self.at_upper & (d > LP_TOL)
            cand = np.flatnonzero(can_up | can_down)
            if cand.size == 0:
                return
            if self.bland:
                j = cand[0]
            else:
                j = cand[np.argmax(np.abs(d[cand]))]
            direction = -1.0 if self.at_upper[j] else 1.0
            xb = self.basic_values()
            rate = -direction * self.T[:, j]
            ubb = self.ub[self.basis]
            theta, p, to_upper = self.ub[j], -1, False
            with np.errstate(divide="ignore", invalid="ignore"):
                dec = rate < -LP_TOL
                lim_lo = np.where(dec, np.maximum(xb, 0.0) / -rate, np.inf)
                inc = (rate > LP_TOL) & np.isfinite(ubb)
                lim_hi = np.where(inc, np.maximum(ubb - xb, 0.0) / rate, np.inf)
            lim = np.minimum(lim_lo, lim_hi)
            if lim.size:
                best = lim.min()
                if best < theta:
                    ties = np.flatnonzero(lim <= best + 1e-12)
                    if self.bland:
                        p = ties[np.argmin(self.basis[ties])]
                    else:
                        p = ties[np.argmax(np.abs(rate[ties]))]
                    theta = lim[p]
                    to_upper = lim_hi[p] <= lim_lo[p]
            if not math.isfinite(theta):
                raise LPError("LP is unbounded, which finite bounds rule out")
            if theta <= 1e-12:
                self.degenerate += 1
            if p < 0:
                self.at_upper[j] = not self.at_upper[j]
                continue
            leaving = self.basis[p]
            self.pivot(p, j)
            self.at_upper[leaving] = bool(to_upper)

    # -- dual -------------------------------------------------------------

    def dual(self, max_pivots):
        """Dual simplex; requires dual feasibility on entry.

        Switches to the smallest-index rule for both the leaving row and the
        entering column once too many dual-degenerate pivots have been made.
        """
        bland = False
        stalled = 0
        limit = BLAND_AFTER * (self.m + self.n)
        while True:
            if self.pivots > max_pivots:
                raise LPError("pivot limit reached")
            if stalled >= limit:
                bland = True
            xb = self.basic_values()
            ubb = self.ub[self.basis]
            below = -xb
            above = xb - ubb
            infeas = np.maximum(below, above)
            if infeas.size == 0:
                return
            bad = infeas > LP_TOL * (1.0 + np.abs(xb))
            if not bad.any():
                return
            if bland:
                rows = np.flatnonzero(bad)
                p = int(rows[np.argmin(self.basis[rows])])
            else:
                p = int(np.argmax(np.where(bad, infeas, -np.inf)))
            go_upper = above[p] > below[p]
            alpha = self.T[p, :-1]
            nb = self.nonbasic_mask()
            lower_nb = nb & ~self.at_upper
            upper_nb = nb & self.at_upper
            if not go_upper:
                elig = (lower_nb & (alpha < -LP_TOL)) | (upper_nb & (alpha > LP_TOL))
            else:
                elig = (lower_nb & (alpha > LP_TOL)) | (upper_nb & (alpha < -LP_TOL))
            # fixed variables never enter
            elig &= self.ub > 0
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                raise Infeasible("master LP is infeasible")
            d = self.reduced_costs()
            ratios = np.abs(d[cand]) / np.abs(alpha[cand])
            best = ratios.min()
            ties = cand[ratios <= best + 1e-12]
            j = ties.min() if bland else ties[np.argmax(np.abs(alpha[ties]))]
            if best <= 1e-12:
                stalled += 1
            leaving = self.basis[p]
            self.pivot(p, j)
            self.at_upper[leaving] = bool(go_upper)


def lp_solve(lp: LinearProgram, max_pivots: int = 50000) -> LPResult:
    """Optimal basic solution of a bounded-variable LP (two-phase primal simplex).

    Raises :class:`Infeasible` when phase one cannot drive the artificials
    to zero.
    """
    A, b, lb, ub, c = lp.A, lp.b, lp.lb, lp.ub, lp.c
    m, n = A.shape
    u = ub - lb
    r = b - A @ lb
    neg = r < 0
    n_art = int(neg.sum())
    sign = np.where(neg, -1.0, 1.0)
    full = np.zeros((m, n + m + n_art))
    full[:, :n] = A * sign[:, None]
    full[:, n : n + m] = np.diag(sign)
    art_rows = np.flatnonzero(neg)
    full[art_rows, n + m + np.arange(n_art)] = 1.0
    rhs = r * sign
    basis = np.arange(n, n + m)
    basis[art_rows] = n + m + np.arange(n_art)
    ubs = np.concatenate([u, np.full(m, np.inf), np.full(n_art, np.inf)])
    cost1 = np.zeros(n + m + n_art)
    cost1[n + m :] = 1.0
    tab = _Tableau(full, rhs, ubs, cost1, basis, np.zeros(n + m + n_art, dtype=bool))
    if n_art:
        tab.primal(max_pivots)
        resid = tab.solution()[n + m :].sum()
        if resid > 1e-8 * (1.0 + np.abs(rhs).max()):
            raise Infeasible(f"phase one ended with infeasibility {resid:.3g}")
        tab.ub[n + m :] = 0.0
    tab.cost = np.concatenate([c, np.zeros(m + n_art)])
    tab.degenerate = 0
    tab.primal(max_pivots)
    y = tab.solution()[:n]
    x = np.clip(lb + y, lb, ub)
    return LPResult(float(c @ x), x, tab.pivots)


# --------------------------------------------------------------------------
# cutting planes


class _Master:
    """Warm-started master LP ``min c.x`` over box and accumulated cuts."""

    def __init__(self, c, lb, ub):
        self.c = np.asarray(c, dtype=float)
        self.lb = np.asarray(lb, dtype=float)
        self.ub = np.asarray(ub, dtype=float)
        n = self.c.size
        self.n = n
        u = self.ub - self.lb
        # dual feasible start: every structural at the bound its cost prefers
        at_upper = self.c < 0
        self.tab = _Tableau(np.zeros((0, n)), np.zeros(0), u, self.c.copy(), np.zeros(0, dtype=int), at_upper)
        self.slack_ids: list[int] = []  # column index of each row's slack, per cut age
        self.rows: list[tuple[np.ndarray, float]] = []

    def add(self, a: np.ndarray, b: float) -> None:
        """Append the row ``a.x <= b`` (in original coordinates)."""
        scale = np.abs(a).max()
        if scale > 0:
            a, b = a / scale, b / scale
        self.rows.append((a, b))
        tab = self.tab
        N = tab.n
        r = b - a @ self.lb
        row = np.zeros(N + 1)
        row[: self.n] = a
        row[-1] = r
        # eliminate the current basic columns from the new row
        if tab.m:
            coef = row[tab.basis]
            row -= coef @ tab.T
        T = np.zeros((tab.m + 1, N + 2))
        T[:-1, :N] = tab.T[:, :N]
        T[:-1, -1] = tab.T[:, -1]
        T[-1, :N] = row[:N]
        T[-1, N] = 1.0
        T[-1, -1] = row[-1]
        tab.T = T
        tab.ub = np.append(tab.ub, np.inf)
        tab.cost = np.append(tab.cost, 0.0)
        tab.at_upper = np.append(tab.at_upper, False)
        tab.basis = np.append(tab.basis, N)
        self.slack_ids.append(N)

    def drop_slack_cuts(self, keep: int) -> None:
        """Remove the oldest non-binding cuts until at most ``keep`` remain."""
        tab = self.tab
        excess = len(self.slack_ids) - keep
        if excess <= 0:
            return
        xb = tab.basic_values()
        where = {int(v): i for i, v in enumerate(tab.basis)}
        drop_rows, drop_cols, keep_ids = [], [], []
        for sid in self.slack_ids:
            p = where.get(sid)
            if excess > 0 and p is not None and xb[p] > LP_TOL:
                drop_rows.append(p)
                drop_cols.append(sid)
                excess -= 1
            else:
                keep_ids.append(sid)
        if not drop_cols:
            return
        keep_r = np.setdiff1d(np.arange(tab.m), drop_rows)
        keep_c = np.setdiff1d(np.arange(tab.n), drop_cols)
        remap = -np.ones(tab.n, dtype=int)
        remap[keep_c] = np.arange(keep_c.size)
        tab.T = tab.T[np.ix_(keep_r, np.append(keep_c, tab.n))]
        tab.ub = tab.ub[keep_c]
        tab.cost = tab.cost[keep_c]
        tab.at_upper = tab.at_upper[keep_c]
        tab.basis = remap[tab.basis[keep_r]]
        self.slack_ids = [int(remap[s]) for s in keep_ids]

    def solve(self):
        self.tab.dual(max_pivots=self.tab.pivots + 100000)
        self.tab.primal(max_pivots=self.tab.pivots + 100000)
        y = self.tab.solution()[: self.n]
        x = np.clip(self.lb + y, self.lb, self.ub)
        return float(self.c @ x), x


@dataclass
class SolveReport:
    lower_bound: float
    point: np.ndarray
    iterations: int
    max_violation: float
    status: str
    names: tuple[str, ...] = ()
    history: list[float] = field(default_factory=list)
    cuts: list[tuple[np.ndarray, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "lower_bound": self.lower_bound,
            "iterations": self.iterations,
            "max_violation": self.max_violation,
            "status": self.status,
            "point": {name: float(v) for name, v in zip(self.names, self.point)},
        }


def solve_relaxation(
    rp: RelaxedProblem,
    feas_tol: float = DEFAULT_FEAS_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    keep_cuts: bool = False,
) -> SolveReport:
    """Optimal value of the envelope relaxation by Kelley's method.

    Each round linearizes every violated constraint ``g <= 0`` at the
    current master point, using envelope slopes as gradients.  Cuts are
    valid for the convex ``g`` everywhere, so the master objective is a
    lower bound whatever the exit status.
    """
    if feas_tol <= 0 or max_iters < 1:
        raise ValueError("need feas_tol > 0 and max_iters >= 1")
    n = rp.n_vars
    c = np.zeros(n)
    c[0] = 1.0
    master = _Master(c, rp.lower, rp.upper)
    link = np.zeros(n)
    link[rp.output] = 1.0
    link[0] = -1.0
    master.add(link, 0.0)
    cap = 50 * n
    cuts: list[tuple[np.ndarray, float]] = []

    def add_cuts(v) -> float:
        worst = 0.0
        for con in rp.constraints:
            g = con.value(v)
            worst = max(worst, g)
            if g > feas_tol:
                a = np.zeros(n)
                for j, gj in con.gradient(v).items():
                    a[j] += gj
                rhs = float(a @ v - g)
                master.add(a, rhs)
                if keep_cuts:
                    cuts.append((a, rhs))
        return worst

    v = 0.5 * (rp.lower + rp.upper)
    add_cuts(v)
    history: list[float] = []
    status = "iteration_limit"
    worst = math.inf
    it = 0
    for it in range(1, max_iters + 1):
        try:
            obj, v = master.solve()
        except Infeasible:
            status = "infeasible_master"
            break
        history.append(obj)
        worst = max(add_cuts(v), max(0.0, v[rp.output] - v[0]))
        if worst <= feas_tol:
            status = "optimal"
            break
        if len(master.slack_ids) > cap:
            master.drop_slack_cuts(cap)
    lower = history[-1] if history else -math.inf
    return SolveReport(lower, v, it, worst, status, rp.names, history, cuts)


def relative_gap(f_relax: float, f_star: float, eps: float = 1e-12) -> float:
    """Percentage gap ``|f_relax - f_star| / (|f_star| + eps) * 100``."""
    return abs(f_relax - f_star) / (abs(f_star) + eps) * 100.0
