"""Self-contained revised simplex solver for bounded-variable linear programs.

Solves   min c.x   s.t.  rlo <= A x <= rhi,  lo <= x <= up
with a two-phase primal simplex.  Internally every row gets a logical
(slack) column,  A x - s = 0,  so the right-hand side is always zero and
scenario re-solves only touch bounds.  The basis inverse is kept as a
sparse LU factorization plus product-form eta updates, refactorized
periodically, which keeps dispatch-sized instances (roughly 10^4 rows)
tractable while remaining exact on toy problems.

No external LP solver is used anywhere; scipy supplies only the sparse LU.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

INF = float("inf")

AT_LOWER = 0
AT_UPPER = 1
BASIC = 2
FREE_NB = 3  # nonbasic free variable, held at zero


class LpError(Exception):
    """Numerical failure inside the solver (singular basis, lost feasibility)."""


@dataclass
class LinearProgram:
    """min objective.x subject to row and variable bounds.

    The constraint matrix is given in triplet form; duplicate entries are
    summed.  All bounds may be +-inf.
    """

    num_cols: int
    num_rows: int
    objective: np.ndarray
    row_idx: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray
    row_lower: np.ndarray
    row_upper: np.ndarray
    col_lower: np.ndarray
    col_upper: np.ndarray

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        self.row_idx = np.asarray(self.row_idx, dtype=np.int64)
        self.col_idx = np.asarray(self.col_idx, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=float)
        self.row_lower = np.asarray(self.row_lower, dtype=float)
        self.row_upper = np.asarray(self.row_upper, dtype=float)
        self.col_lower = np.asarray(self.col_lower, dtype=float)
        self.col_upper = np.asarray(self.col_upper, dtype=float)
        self.validate()

    def validate(self):
        n, m = self.num_cols, self.num_rows
        if self.objective.shape != (n,):
            raise ValueError("objective length does not match num_cols")
        for name, arr, size in (("row_lower", self.row_lower, m),
                                ("row_upper", self.row_upper, m),
                                ("col_lower", self.col_lower, n),
                                ("col_upper", self.col_upper, n)):
            if arr.shape != (size,):
                raise ValueError(f"{name} has wrong length")
        if not (self.row_idx.shape == self.col_idx.shape == self.values.shape):
            raise ValueError("triplet arrays must have equal length")
        if len(self.row_idx) and (self.row_idx.min() < 0 or self.row_idx.max() >= m):
            raise ValueError("row index out of range")
        if len(self.col_idx) and (self.col_idx.min() < 0 or self.col_idx.max() >= n):
            raise ValueError("column index out of range")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("matrix coefficients must be finite")
        if not np.all(np.isfinite(self.objective)):
            raise ValueError("objective coefficients must be finite")
        if np.any(self.row_lower > self.row_upper) or np.any(self.col_lower > self.col_upper):
            raise ValueError("lower bound exceeds upper bound")

    def matrix(self) -> sp.csc_matrix:
        return sp.csc_matrix(
            (self.values, (self.row_idx, self.col_idx)),
            shape=(self.num_rows, self.num_cols),
        )

    def to_text(self) -> str:
        """Debug dump in the documented LP text format (docs/file_formats.md)."""
        out = [f"LP rows={self.num_rows} cols={self.num_cols}", "OBJECTIVE"]
        out += [f"  {j} {float(self.objective[j])!r}" for j in range(self.num_cols)
                if self.objective[j] != 0.0]
        out.append("MATRIX")
        coo = self.matrix().tocoo()
        order = np.lexsort((coo.col, coo.row))
        out += [f"  {coo.row[k]} {coo.col[k]} {float(coo.data[k])!r}" for k in order]
        out.append("ROWBOUNDS")
        out += [f"  {i} {float(self.row_lower[i])!r} {float(self.row_upper[i])!r}"
                for i in range(self.num_rows)]
        out.append("COLBOUNDS")
        out += [f"  {j} {float(self.col_lower[j])!r} {float(self.col_upper[j])!r}"
                for j in range(self.num_cols)]
        return "\n".join(out) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "LinearProgram":
        """Parse the to_text dump back into an equivalent program."""
        header, *lines = [l for l in text.splitlines() if l.strip()]
        sizes = dict(kv.split("=") for kv in header.split()[1:])
        m, n = int(sizes["rows"]), int(sizes["cols"])
        section = None
        obj = np.zeros(n)
        rlo = np.full(m, -INF)
        rhi = np.full(m, INF)
        clo = np.full(n, -INF)
        cup = np.full(n, INF)
        rows, cols, vals = [], [], []
        for line in lines:
            token = line.strip()
            if token in ("OBJECTIVE", "MATRIX", "ROWBOUNDS", "COLBOUNDS"):
                section = token
                continue
            parts = token.split()
            if section == "OBJECTIVE":
                obj[int(parts[0])] = float(parts[1])
            elif section == "MATRIX":
                rows.append(int(parts[0]))
                cols.append(int(parts[1]))
                vals.append(float(parts[2]))
            elif section == "ROWBOUNDS":
                rlo[int(parts[0])] = float(parts[1])
                rhi[int(parts[0])] = float(parts[2])
            elif section == "COLBOUNDS":
                clo[int(parts[0])] = float(parts[1])
                cup[int(parts[0])] = float(parts[2])
            else:
                raise ValueError(f"unexpected line outside section: {line!r}")
        return cls(n, m, obj, rows, cols, vals, rlo, rhi, clo, cup)


@dataclass
class SolveOptions:
    feas_tol: float = 1e-7
    opt_tol: float = 1e-7
    pivot_tol: float = 1e-9
    max_iterations: int = 200_000
    refactor_every: int = 64
    stall_limit: int = 60  # degenerate pivots before switching to Bland's rule


@dataclass
class Basis:
    """Warm-start state: which column sits in each basis slot, plus statuses.

    Columns 0..n-1 are structural, n..n+m-1 are the row logicals.
    """

    basic: np.ndarray   # (m,) column indices
    status: np.ndarray  # (n+m,) AT_LOWER/AT_UPPER/BASIC/FREE_NB

    def copy(self) -> "Basis":
        return Basis(self.basic.copy(), self.status.copy())


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded | iteration_limit
    objective: float
    x: np.ndarray
    row_duals: np.ndarray
    reduced_costs: np.ndarray
    iterations: int
    basis: Basis | None = None
    max_bound_violation: float = 0.0

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"

    def dual_objective(self, lp: LinearProgram, drop_tol: float = 1e-9) -> float:
        """Dual bound from (row_duals, reduced_costs); equals the primal
        objective at an exact optimum.  Multipliers below drop_tol are
        treated as zero so that roundoff-level duals do not pair with
        infinite bounds."""
        total = 0.0
        for i in range(lp.num_rows):
            y = self.row_duals[i]
            if abs(y) <= drop_tol:
                continue
            total += y * (lp.row_lower[i] if y > 0 else lp.row_upper[i])
        for j in range(lp.num_cols):
            d = self.reduced_costs[j]
            if abs(d) <= drop_tol:
                continue
            total += d * (lp.col_lower[j] if d > 0 else lp.col_upper[j])
        return total


class _Factors:
    """B = LU * E1 * ... * Ek product-form representation."""

    def __init__(self, fmat: sp.csc_matrix, basic: np.ndarray):
        bmat = fmat[:, basic].tocsc()
        try:
            self.lu = splu(bmat)
        except RuntimeError as exc:  # singular factorization
            raise LpError(f"singular basis: {exc}") from exc
        self.etas: list[tuple[int, np.ndarray]] = []
        # splu tolerates some exactly singular matrices by inserting tiny
        # pivots; probe with a solve so we fail loudly instead.
        probe = self.lu.solve(np.ones(bmat.shape[0]))
        if not np.all(np.isfinite(probe)):
            raise LpError("singular basis (non-finite factor solve)")

    def ftran(self, rhs: np.ndarray) -> np.ndarray:
        v = self.lu.solve(rhs)
        for r, eta in self.etas:
            piv = v[r] / eta[r]
            if piv != 0.0:
                v -= piv * eta
            v[r] = piv
        return v

    def btran(self, rhs: np.ndarray) -> np.ndarray:
        v = rhs.copy()
        for r, eta in reversed(self.etas):
            vr = v[r]
            v[r] = 0.0
            v[r] = (vr - eta @ v) / eta[r]
        return self.lu.solve(v, trans="T")

    def update(self, row: int, eta: np.ndarray, pivot_tol: float) -> bool:
        if abs(eta[row]) < pivot_tol:
            return False
        self.etas.append((row, eta.copy()))
        return True


class _Simplex:
    def __init__(self, lp: LinearProgram, opts: SolveOptions):
        self.lp = lp
        self.opts = opts
        self.m = lp.num_rows
        self.n = lp.num_cols
        amat = lp.matrix()
        self.fmat = sp.hstack(
            [amat, -sp.identity(self.m, format="csc")], format="csc"
        )
        self.fmat.sum_duplicates()
        self.fmat_t = self.fmat.T.tocsr()  # cached for pricing
        self.lower = np.concatenate([lp.col_lower, lp.row_lower])
        self.upper = np.concatenate([lp.col_upper, lp.row_upper])
        self.cost = np.concatenate([lp.objective, np.zeros(self.m)])
        self.fixed = self.lower == self.upper
        self.iterations = 0
        self.factors: _Factors | None = None
        self.basic: np.ndarray | None = None
        self.status: np.ndarray | None = None
        self.x: np.ndarray | None = None
        self.stall = 0
        self.use_bland = False

    # -- basis management ---------------------------------------------------

    def start_cold(self):
        ncols = self.n + self.m
        self.status = np.full(ncols, AT_LOWER, dtype=np.int8)
        for j in range(ncols):
            lo, up = self.lower[j], self.upper[j]
            if lo == -INF and up == INF:
                self.status[j] = FREE_NB
            elif lo == -INF:
                self.status[j] = AT_UPPER
            elif up == INF:
                self.status[j] = AT_LOWER
            else:
                self.status[j] = AT_LOWER if abs(lo) <= abs(up) else AT_UPPER
        self.basic = np.arange(self.n, self.n + self.m, dtype=np.int64)
        self.status[self.basic] = BASIC
        self.factors = _Factors(self.fmat, self.basic)
        self._recompute_x()

    def start_warm(self, basis: Basis):
        if basis.basic.shape != (self.m,) or basis.status.shape != (self.n + self.m,):
            raise ValueError("warm-start basis has wrong dimensions")
        if np.count_nonzero(basis.status == BASIC) != self.m:
            raise ValueError("warm-start basis must have exactly one basic column per row")
        self.basic = basis.basic.copy()
        self.status = basis.status.copy()
        self.factors = _Factors(self.fmat, self.basic)  # raises LpError if singular
        self._recompute_x()

    def _nonbasic_value(self, j: int) -> float:
        st = self.status[j]
        if st == AT_LOWER:
            return self.lower[j]
        if st == AT_UPPER:
            return self.upper[j]
        return 0.0

    def _recompute_x(self):
        x = np.where(self.status == AT_UPPER, self.upper, self.lower)
        x[self.status == FREE_NB] = 0.0
        x[self.basic] = 0.0
        rhs = -(self.fmat @ x)
        x[self.basic] = self.factors.ftran(rhs)
        self.x = x

    def _refactorize(self):
        self.factors = _Factors(self.fmat, self.basic)
        self._recompute_x()

    # -- pricing ------------------------------------------------------------

    def _phase1_cost(self) -> np.ndarray:
        c = np.zeros(self.n + self.m)
        xb = self.x[self.basic]
        lo = self.lower[self.basic]
        up = self.upper[self.basic]
        tol = self.opts.feas_tol
        c[self.basic[xb < lo - tol]] = -1.0
        c[self.basic[xb > up + tol]] = 1.0
        return c

    def _infeasibility(self) -> float:
        xb = self.x[self.basic]
        lo = self.lower[self.basic]
        up = self.upper[self.basic]
        return float(np.sum(np.maximum(lo - xb, 0.0)) + np.sum(np.maximum(xb - up, 0.0)))

    def _reduced_costs(self, cost: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        y = self.factors.btran(cost[self.basic])
        d = cost - self.fmat_t @ y
        return d, y

    def _choose_entering(self, d: np.ndarray) -> int:
        tol = self.opts.opt_tol
        st = self.status
        viol = np.zeros_like(d)
        can_up = ((st == AT_LOWER) | (st == FREE_NB)) & ~self.fixed & (d < -tol)
        can_dn = ((st == AT_UPPER) | (st == FREE_NB)) & ~self.fixed & (d > tol)
        viol[can_up] = -d[can_up]
        viol[can_dn] = d[can_dn]
        if not viol.any():
            return -1
        if self.use_bland:
            return int(np.flatnonzero(viol > 0)[0])
        return int(np.argmax(viol))

    # -- pivoting -----------------------------------------------------------

    def _column(self, j: int) -> np.ndarray:
        col = np.zeros(self.m)
        start, end = self.fmat.indptr[j], self.fmat.indptr[j + 1]
        col[self.fmat.indices[start:end]] = self.fmat.data[start:end]
        return col

    def _ratio_test(self, q: int, sigma: float, delta: np.ndarray, phase1: bool):
        """Largest step t>=0 for entering column q moving with sign sigma.

        Returns (t, leaving_pos, leaving_bound) where leaving_pos is the basis
        slot of the blocking variable, or -1 for a bound flip of q itself,
        or -2 if the step is unbounded.
        """
        opts = self.opts
        best_t = INF
        best_pos = -2
        best_bound = 0.0
        best_piv = 0.0
        # entering variable hitting its own opposite bound
        span = self.upper[q] - self.lower[q]
        if np.isfinite(span):
            best_t = span
            best_pos = -1
        rate = -sigma * delta  # movement of basic vars per unit step
        xb = self.x[self.basic]
        lob = self.lower[self.basic]
        upb = self.upper[self.basic]
        ftol = opts.feas_tol
        idx = np.flatnonzero(np.abs(delta) > opts.pivot_tol)
        cand_t = np.full(len(idx), INF)
        cand_bound = np.zeros(len(idx))
        for k, i in enumerate(idx):
            r = rate[i]
            xi, lo, up = xb[i], lob[i], upb[i]
            # An infeasible basic moving away from its violated bound never
            # blocks (its phase-1 cost charges the move); one moving back
            # blocks at the bound it crosses first.
            if r > 0:
                if phase1 and xi > up + ftol:
                    continue
                if phase1 and xi < lo - ftol:
                    cand_t[k] = (lo - xi) / r
                    cand_bound[k] = lo
                elif up != INF:
                    cand_t[k] = max((up - xi) / r, 0.0)
                    cand_bound[k] = up
            else:
                if phase1 and xi < lo - ftol:
                    continue
                if phase1 and xi > up + ftol:
                    cand_t[k] = max((up - xi) / r, 0.0)
                    cand_bound[k] = up
                elif lo != -INF:
                    cand_t[k] = max((lo - xi) / r, 0.0)
                    cand_bound[k] = lo
        if len(idx):
            tmin = cand_t.min()
            if tmin < best_t:
                # among near-minimal ratios prefer the largest pivot magnitude
                close = np.flatnonzero(cand_t <= tmin + 1e-9)
                if self.use_bland:
                    order = np.argsort(self.basic[idx[close]])
                    k = close[order[0]]
                else:
                    k = close[np.argmax(np.abs(delta[idx[close]]))]
                best_t = cand_t[k]
                best_pos = int(idx[k])
                best_bound = cand_bound[k]
                best_piv = delta[idx[k]]
        return best_t, best_pos, best_bound, best_piv

    def _pivot(self, q: int, sigma: float, delta: np.ndarray, t: float,
               pos: int, leave_bound: float):
        entering_from = self._nonbasic_value(q)
        self.x[self.basic] -= sigma * t * delta
        if pos == -1:  # bound flip
            self.status[q] = AT_UPPER if self.status[q] == AT_LOWER else AT_LOWER
            self.x[q] = self._nonbasic_value(q)
            return True
        leaving = self.basic[pos]
        self.x[q] = entering_from + sigma * t
        self.x[leaving] = leave_bound
        self.status[leaving] = (
            AT_LOWER if leave_bound == self.lower[leaving] else AT_UPPER
        )
        if self.lower[leaving] == -INF and self.upper[leaving] == INF:
            self.status[leaving] = FREE_NB
        self.status[q] = BASIC
        self.basic[pos] = q
        if not self.factors.update(pos, delta, self.opts.pivot_tol):
            self._refactorize()
        elif len(self.factors.etas) >= self.opts.refactor_every:
            self._refactorize()
        return True

    # -- main loops ----------------------------------------------------------

    def run_phase(self, phase1: bool) -> str:
        opts = self.opts
        while True:
            if self.iterations >= opts.max_iterations:
                return "iteration_limit"
            if phase1 and self._infeasibility() <= opts.feas_tol:
                return "feasible"
            cost = self._phase1_cost() if phase1 else self.cost
            d, _ = self._reduced_costs(cost)
            q = self._choose_entering(d)
            if q < 0:
                if phase1:
                    return "feasible" if self._infeasibility() <= opts.feas_tol else "infeasible"
                return "optimal"
            sigma = 1.0 if (self.status[q] in (AT_LOWER, FREE_NB) and d[q] < 0) else -1.0
            delta = self.factors.ftran(self._column(q))
            t, pos, leave_bound, _piv = self._ratio_test(q, sigma, delta, phase1)
            if pos == -2:
                if phase1:
                    # cannot happen: infeasibility is bounded below by zero
                    raise LpError("phase-1 ratio test found no blocking bound")
                return "unbounded"
            self.iterations += 1
            if t <= 1e-12:
                self.stall += 1
                if self.stall > opts.stall_limit:
                    self.use_bland = True
            else:
                self.stall = 0
                self.use_bland = False
            self._pivot(q, sigma, delta, t, pos, leave_bound)

    def solve(self, warm: Basis | None) -> LpSolution:
        if warm is not None:
            self.start_warm(warm)
        else:
            self.start_cold()
        status = self.run_phase(phase1=True)
        if status == "infeasible":
            # certify on a fresh factorization before declaring infeasible
            self._refactorize()
            status = self.run_phase(phase1=True)
        if status == "feasible":
            status = self.run_phase(phase1=False)
        if status == "optimal":
            # guard against drift: refactorize and confirm, resuming if needed
            for _ in range(3):
                self._refactorize()
                viol = self._infeasibility()
                d, _ = self._reduced_costs(self.cost)
                q = self._choose_entering(d)
                if viol <= self.opts.feas_tol and q < 0:
                    break
                status = self.run_phase(phase1=viol > self.opts.feas_tol)
                if status == "feasible":
                    status = self.run_phase(phase1=False)
                if status != "optimal":
                    break
            else:
                raise LpError("could not certify optimality after repeated refactorization")
        return self._solution(status)

    def _solution(self, status: str) -> LpSolution:
        d, y = self._reduced_costs(self.cost)
        x = self.x[: self.n]
        obj = float(self.cost[: self.n] @ x)
        xb = self.x[self.basic]
        viol = float(
            max(
                np.max(np.maximum(self.lower[self.basic] - xb, 0.0), initial=0.0),
                np.max(np.maximum(xb - self.upper[self.basic], 0.0), initial=0.0),
            )
        )
        if status == "infeasible":
            obj = float("nan")
        return LpSolution(
            status=status,
            objective=obj,
            x=x.copy(),
            row_duals=y.copy(),
            reduced_costs=d[: self.n].copy(),
            iterations=self.iterations,
            basis=Basis(self.basic.copy(), self.status.copy()),
            max_bound_violation=viol,
        )


def solve_lp(lp: LinearProgram, opts: SolveOptions | None = None,
             warm_basis: Basis | None = None) -> LpSolution:
    """Solve an LP; deterministic for identical inputs and options.

    A warm-start basis (typically from a previous scenario that differs only
    in bound data) is validated and used as the starting point; a singular
    warm basis raises LpError rather than being silently repaired.
    """
    opts = opts or SolveOptions()
    lp.validate()
    return _Simplex(lp, opts).solve(warm_basis)


class RepeatSolver:
    """Re-solves one LP structure under changing bounds.

    Keeps the constraint matrix, basis, and LU factors alive between calls,
    so a scenario sweep pays for factorization once.  The matrix must not
    change; bounds may.  When the previous optimal basis is still feasible
    after a bound move it is also still optimal (bound moves leave reduced
    costs untouched), so such re-solves cost two triangular solves and a
    pricing pass, no pivots.
    """

    def __init__(self, lp: LinearProgram, opts: SolveOptions | None = None):
        self.lp = lp
        self.opts = opts or SolveOptions()
        lp.validate()
        self._sim = _Simplex(lp, self.opts)
        self._started = False

    def _run(self) -> str:
        sim = self._sim
        sim.lower = np.concatenate([self.lp.col_lower, self.lp.row_lower])
        sim.upper = np.concatenate([self.lp.col_upper, self.lp.row_upper])
        sim.fixed = sim.lower == sim.upper
        sim.iterations = 0
        sim.stall = 0
        sim.use_bland = False
        if not self._started:
            sim.start_cold()
            self._started = True
        else:
            # statuses survive; nonbasic variables snap to the moved bounds
            sim._recompute_x()
        try:
            status = sim.run_phase(phase1=True)
            if status == "infeasible":
                sim._refactorize()
                status = sim.run_phase(phase1=True)
            if status == "feasible":
                status = sim.run_phase(phase1=False)
            if status == "optimal":
                # phase 2 exits on a full pricing pass, so dual feasibility is
                # already certified with the live factors; re-verify the
                # primal side and resume if the incremental x drifted.
                for _ in range(3):
                    if sim._infeasibility() <= sim.opts.feas_tol:
                        break
                    sim._refactorize()
                    status = sim.run_phase(phase1=True)
                    if status == "feasible":
                        status = sim.run_phase(phase1=False)
                    if status != "optimal":
                        break
                else:
                    raise LpError("could not certify feasibility in repeat solve")
            return status
        except LpError:
            # rebuild from scratch once before giving up
            self._started = False
            sim.factors = None
            sim.start_cold()
            self._started = True
            status = sim.run_phase(phase1=True)
            if status == "feasible":
                status = sim.run_phase(phase1=False)
            return status

    def solve(self) -> LpSolution:
        """Solve against the LP's current bound arrays (mutate lp.row_lower
        etc. between calls)."""
        return self._sim._solution(self._run())

    def solve_value(self) -> float:
        """Optimal objective only; skips dual extraction and basis export."""
        status = self._run()
        if status != "optimal":
            raise LpError(f"repeat solve ended {status}")
        sim = self._sim
        return float(sim.cost[: sim.n] @ sim.x[: sim.n])
