"""Sparse bounded-variable dual simplex for the LP relaxations.

The model ``A x (sense) rhs, l <= x <= u`` is brought to the form
``[A, -I] (x, r) = 0`` with one logical ``r_i`` per row whose bounds encode
the row sense.  Every structural variable in the segmentation and
inpainting programs is boxed, so the all-logical basis with each
structural at the bound matching the sign of its cost is dual feasible
and the dual simplex can run from it directly.  Variables with an
infinite bound on the wrong side get a temporary artificial box; a final
solution resting on such a box is re-checked with a larger box and
reported unbounded if it keeps running away.

Basis inverses are kept as a sparse LU of a reference basis plus a
product-form eta file, refactorized periodically.  Pricing uses dual
Devex weights; the ratio test is a bound-flipping test with a Harris
tolerance window.  A small deterministic cost perturbation guards
against dual degeneracy, and a smallest-index rule takes over after a
long run without progress.
"""
from __future__ import annotations

import enum
import logging
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .model import EQ, LE, GE, LinearModel

log = logging.getLogger(__name__)

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-10
DEFAULT_ITER_CAP = 10 ** 7
ART_BOUND = 1e6

BASIC, AT_LOWER, AT_UPPER = 0, 1, 2


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


class SolverError(RuntimeError):
    pass


@dataclass
class Basis:
    head: np.ndarray
    status: np.ndarray
    num_rows: int
    num_vars: int


@dataclass
class LPSolution:
    primal: np.ndarray
    objective: float
    status: Status
    iterations: int
    max_bound_violation: float = 0.0
    max_row_violation: float = 0.0
    duals: np.ndarray = None
    reduced_costs: np.ndarray = None
    basis: Basis = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == Status.OPTIMAL


def iteration_cap() -> int:
    value = os.environ.get("CURVCOMPLEX_ITER_CAP")
    return int(value) if value else DEFAULT_ITER_CAP


class _Factor:
    """LU of a reference basis plus product-form eta updates."""

    def __init__(self, B: sp.csc_matrix):
        self.m = B.shape[0]
        try:
            self.lu = spla.splu(B.tocsc(), permc_spec="COLAMD",
                                options={"SymmetricMode": False})
        except RuntimeError as exc:
            raise np.linalg.LinAlgError(str(exc)) from exc
        self.etas = []

    def ftran(self, b: np.ndarray) -> np.ndarray:
        x = self.lu.solve(b)
        for r, idx, val, piv in self.etas:
            xr = x[r] / piv
            if xr != 0.0:
                x[idx] -= val * xr
            x[r] = xr
        return x

    def btran(self, b: np.ndarray) -> np.ndarray:
        y = b.astype(float, copy=True)
        for r, idx, val, piv in reversed(self.etas):
            y[r] = (y[r] - val @ y[idx]) / piv
        return self.lu.solve(y, trans="T")

    def update(self, r: int, alpha: np.ndarray) -> None:
        idx = np.flatnonzero(np.abs(alpha) > 1e-14)
        idx = idx[idx != r]
        self.etas.append((r, idx, alpha[idx].copy(), float(alpha[r])))


class DualSimplex:
    """Solver state for one model; reusable for warm re-solves."""

    def __init__(self, model: LinearModel, max_iter: int | None = None,
                 refactor_every: int = 100, perturb: bool = True, seed: int = 0):
        model.validate()
        self.model = model
        self.n = model.num_vars
        self.m = model.num_rows
        self.max_iter = iteration_cap() if max_iter is None else max_iter
        self.refactor_every = refactor_every
        self.perturb = perturb
        self.seed = seed
        self._setup()

    # problem data --------------------------------------------------------

    def _setup(self):
        model, n, m = self.model, self.n, self.m
        A = sp.csc_matrix(model.A, dtype=float)
        A.sort_indices()
        self.M = sp.hstack([A, -sp.identity(m, format="csc")], format="csc")
        self.MT = self.M.T.tocsr()
        lo = np.concatenate([model.lower.astype(float), np.full(m, -np.inf)])
        up = np.concatenate([model.upper.astype(float), np.full(m, np.inf)])
        rhs = model.rhs.astype(float)
        eq, le, ge = model.sense == EQ, model.sense == LE, model.sense == GE
        lo[n:][eq | ge] = rhs[eq | ge]
        up[n:][eq | le] = rhs[eq | le]
        self.lo_true, self.up_true = lo, up
        self.cost_true = np.concatenate([model.objective.astype(float), np.zeros(m)])
        self.N = n + m

    def _boxed_bounds(self, art):
        lo, up = self.lo_true.copy(), self.up_true.copy()
        self.art_lo = ~np.isfinite(lo)
        self.art_up = ~np.isfinite(up)
        lo[self.art_lo] = -art
        up[self.art_up] = art
        # free logicals of empty constraint sets stay harmless with the box
        self.lo, self.up = lo, up

    # linear algebra helpers ---------------------------------------------

    def _column(self, j):
        s, e = self.M.indptr[j], self.M.indptr[j + 1]
        return self.M.indices[s:e], self.M.data[s:e]

    def _dense_column(self, j):
        v = np.zeros(self.m)
        idx, val = self._column(j)
        v[idx] = val
        return v

    def _refactor(self):
        B = self.M[:, self.head]
        try:
            self.F = _Factor(B)
        except np.linalg.LinAlgError:
            self._repair_basis()
            self.F = _Factor(self.M[:, self.head])
            self._recompute()
            self._make_dual_feasible()
        self._recompute()

    def _repair_basis(self):
        """Fall back to the all-logical basis after a singular factorization."""
        was_basic = self.head[self.head < self.n]
        self.head = np.arange(self.n, self.N, dtype=np.int64)
        self.status[was_basic] = np.where(self.cost[was_basic] < 0, AT_UPPER, AT_LOWER)
        self.status[self.head] = BASIC
        log.warning("singular basis replaced by the logical basis")

    def _nonbasic_values(self):
        x = np.where(self.status == AT_UPPER, self.up, self.lo)
        x[self.head] = 0.0
        return x

    def _recompute(self):
        x = self._nonbasic_values()
        rhs = -(self.M @ x)
        self.x = x
        self.x[self.head] = self.F.ftran(rhs)
        y = self.F.btran(self.cost[self.head])
        self.y = y
        self.d = self.cost - self.MT @ y
        self.d[self.head] = 0.0

    # dual feasibility ----------------------------------------------------

    def _make_dual_feasible(self) -> bool:
        """Move nonbasic variables to the bound their reduced cost prefers."""
        nb = self.status != BASIC
        wrong_lo = nb & (self.status == AT_LOWER) & (self.d < -OPT_TOL)
        wrong_up = nb & (self.status == AT_UPPER) & (self.d > OPT_TOL)
        fixed = self.lo == self.up
        wrong_lo &= ~fixed
        wrong_up &= ~fixed
        if not (wrong_lo.any() or wrong_up.any()):
            return False
        self.status[wrong_lo] = AT_UPPER
        self.status[wrong_up] = AT_LOWER
        self._recompute()
        return True

    def _perturb_costs(self):
        rng = np.random.default_rng(self.seed)
        c = self.cost_true.copy()
        nb = self.status != BASIC
        mag = (0.5 + 0.5 * rng.random(self.N)) * 1e-7 * (1.0 + np.abs(c))
        sign = np.where(self.status == AT_UPPER, -1.0, 1.0)
        structural = np.zeros(self.N, dtype=bool)
        structural[: self.n] = True
        c = c + np.where(nb & structural & (self.lo < self.up), sign * mag, 0.0)
        return c

    # main loop -----------------------------------------------------------

    def initial_basis(self):
        self.head = np.arange(self.n, self.N, dtype=np.int64)
        self.status = np.full(self.N, AT_LOWER, dtype=np.int8)
        self.status[self.head] = BASIC
        c = self.cost_true
        fin_lo, fin_up = np.isfinite(self.lo_true), np.isfinite(self.up_true)
        prefer_up = (c < 0) & fin_up | ~fin_lo
        self.status[: self.n][prefer_up[: self.n]] = AT_UPPER

    def warm_basis(self, basis: Basis):
        n_old, m_old = basis.num_vars, basis.num_rows
        if n_old != self.n or m_old > self.m:
            raise ValueError("warm start basis does not fit the model")
        status = np.full(self.N, BASIC, dtype=np.int8)
        status[: self.n] = basis.status[: self.n]
        status[self.n: self.n + m_old] = basis.status[self.n:]
        head = basis.head.copy()
        # logical indices shift with the structural count unchanged
        extra = self.n + np.arange(m_old, self.m)
        self.head = np.concatenate([head, extra]).astype(np.int64)
        status[extra] = BASIC
        self.status = status

    def solve(self, basis: Basis | None = None) -> LPSolution:
        if basis is None:
            self.initial_basis()
        else:
            self.warm_basis(basis)
        art = ART_BOUND
        total = 0
        for _ in range(4):
            status, iters = self._run(art)
            total += iters
            if status != Status.OPTIMAL:
                return self._solution(status, total)
            runaway = self._at_artificial_bound()
            if not runaway:
                return self._solution(Status.OPTIMAL, total)
            art *= 1e3
        return self._solution(Status.UNBOUNDED, total)

    def _at_artificial_bound(self) -> bool:
        nb = self.status != BASIC
        at_lo = nb & (self.status == AT_LOWER) & self.art_lo
        at_up = nb & (self.status == AT_UPPER) & self.art_up
        return bool(np.any(at_lo & (np.abs(self.d) > OPT_TOL))
                    or np.any(at_up & (np.abs(self.d) > OPT_TOL)))

    def _run(self, art):
        self._boxed_bounds(art)
        # nonbasic variables must sit on a finite (possibly artificial) bound
        self.cost = self.cost_true.copy()
        self.F = None
        self._refactor()
        self._make_dual_feasible()
        if self.perturb:
            self.cost = self._perturb_costs()
            self._recompute()
        iters = 0
        perturbed = self.perturb
        while True:
            status, k = self._dual_phase(self.max_iter - iters)
            iters += k
            if status != Status.OPTIMAL:
                return status, iters
            if perturbed:
                self.cost = self.cost_true.copy()
                self._recompute()
                perturbed = False
                if self._make_dual_feasible() or self._primal_infeasible():
                    continue
            # final clean check with fresh factorization
            self._refactor()
            if self._make_dual_feasible() or self._primal_infeasible():
                continue
            return Status.OPTIMAL, iters

    def _primal_infeasible(self) -> bool:
        xb = self.x[self.head]
        return bool(np.any(xb < self.lo[self.head] - FEAS_TOL)
                    or np.any(xb > self.up[self.head] + FEAS_TOL))

    def _dual_phase(self, budget):
        m = self.m
        w = np.ones(m)
        stall, best_obj = 0, -np.inf
        bland = False
        it = 0
        since_refactor = 0
        fixed = self.lo == self.up
        while True:
            if since_refactor >= self.refactor_every:
                self._refactor()
                since_refactor = 0
            xb = self.x[self.head]
            lob, upb = self.lo[self.head], self.up[self.head]
            below = lob - xb
            above = xb - upb
            infeas = np.maximum(np.maximum(below, above), 0.0)
            infeas[infeas <= FEAS_TOL] = 0.0
            if not infeas.any():
                return Status.OPTIMAL, it
            if it >= budget:
                return Status.ITERATION_LIMIT, it
            if bland:
                cand = np.flatnonzero(infeas > 0)
                r = int(cand[np.argmin(self.head[cand])])
            else:
                r = int(np.argmax(infeas * infeas / w))
            leave = int(self.head[r])
            to_upper = above[r] > 0
            target = upb[r] if to_upper else lob[r]
            delta = abs(xb[r] - target)

            e_r = np.zeros(m)
            e_r[r] = 1.0
            rho = self.F.btran(e_r)
            alpha_row = self.MT @ rho
            sgn = 1.0 if to_upper else -1.0
            at = sgn * alpha_row
            st = self.status
            elig = (st != BASIC) & ~fixed & (
                ((st == AT_LOWER) & (at > PIVOT_TOL)) | ((st == AT_UPPER) & (at < -PIVOT_TOL)))
            cand = np.flatnonzero(elig)
            if len(cand) == 0:
                return Status.INFEASIBLE, it
            q, flips = self._ratio_test(cand, at, delta, bland)
            if q is None:
                return Status.INFEASIBLE, it

            if flips.size:
                dx = np.where(st[flips] == AT_LOWER, self.up[flips] - self.lo[flips],
                              self.lo[flips] - self.up[flips])
                st[flips] = np.where(st[flips] == AT_LOWER, AT_UPPER, AT_LOWER)
                self.x[flips] += dx
                rhs = -(self.M[:, flips] @ dx)
                self.x[self.head] += self.F.ftran(rhs)

            alpha_q = self.F.ftran(self._dense_column(q))
            arq = alpha_q[r]
            if abs(arq) < PIVOT_TOL or abs(arq - alpha_row[q]) > 1e-7 * (1 + abs(arq)):
                if since_refactor == 0:
                    raise SolverError("unstable pivot after refactorization")
                self._refactor()
                since_refactor = 0
                continue

            theta_d = self.d[q] / alpha_row[q]
            self.d -= theta_d * alpha_row
            self.d[self.head] = 0.0
            self.d[q] = 0.0
            self.d[leave] = -theta_d

            xr = self.x[leave]
            theta_p = (xr - target) / arq
            self.x[self.head] -= theta_p * alpha_q
            self.x[q] += theta_p
            self.x[leave] = target
            st[leave] = AT_UPPER if to_upper else AT_LOWER
            st[q] = BASIC

            ratio = alpha_q / arq
            wr = w[r]
            w = np.maximum(w, ratio * ratio * wr)
            w[r] = max(wr / (arq * arq), 1.0)

            self.head[r] = q
            self.F.update(r, alpha_q)
            since_refactor += 1
            it += 1

            obj = float(self.cost @ self.x)
            if obj > best_obj + 1e-12 * (1 + abs(obj)):
                best_obj, stall = obj, 0
                bland = False
            else:
                stall += 1
                if stall > 50:
                    bland = True

    def _ratio_test(self, cand, at, delta, bland):
        """Bound-flipping ratio test; returns (entering, flipped) or (None, None)."""
        d = self.d[cand]
        a = at[cand]
        ratios = np.maximum(d / a, 0.0)
        order = np.lexsort((cand, ratios)) if bland else np.argsort(ratios, kind="stable")
        span = self.up[cand] - self.lo[cand]
        boxed = (~self.art_lo[cand]) & (~self.art_up[cand])
        slope = delta
        k = len(order)
        for i, j in enumerate(order):
            if not boxed[j]:
                k = i
                break
            slope -= abs(a[j]) * span[j]
            if slope <= FEAS_TOL:
                k = i
                break
        if k == len(order):
            return None, None
        passed, rest = order[:k], order[k:]
        if bland:
            pick = rest[0]
        else:
            # Harris window among the remaining breakpoints
            tmax = np.min((np.abs(d[rest]) + OPT_TOL) / np.abs(a[rest]))
            window = rest[ratios[rest] <= tmax]
            pick = window[np.argmax(np.abs(a[window]))] if len(window) else rest[0]
        return int(cand[pick]), cand[passed]

    # results -------------------------------------------------------------

    def _solution(self, status: Status, iters: int) -> LPSolution:
        n = self.n
        x = self.x[:n].copy()
        if status == Status.OPTIMAL:
            # snap tiny bound excursions
            x = np.clip(x, self.lo_true[:n], self.up_true[:n])
        vb, vr = self.model.violations(x)
        obj = float(self.model.objective @ x)
        basis = Basis(self.head.copy(), self.status.copy(), self.m, n)
        return LPSolution(primal=x, objective=obj, status=status, iterations=iters,
                          max_bound_violation=vb, max_row_violation=vr,
                          duals=getattr(self, "y", None),
                          reduced_costs=None if getattr(self, "d", None) is None
                          else self.d[:n].copy(),
                          basis=basis)


def solve(model: LinearModel, max_iter: int | None = None, **kwargs) -> LPSolution:
    """Solve the LP relaxation of ``model`` (integrality flags are ignored)."""
    return DualSimplex(model, max_iter=max_iter, **kwargs).solve()


def resolve_with_bounds(model: LinearModel, previous: LPSolution, changed_bounds=None,
                        max_iter: int | None = None, **kwargs) -> LPSolution:
    """Re-solve after bound changes and/or appended rows, warm-started.

    ``changed_bounds`` is an optional iterable of ``(var, lower, upper)``
    applied to ``model`` before solving.
    """
    if changed_bounds:
        for j, lo, up in changed_bounds:
            model.lower[j] = lo
            model.upper[j] = up
    solver = DualSimplex(model, max_iter=max_iter, **kwargs)
    basis = previous.basis if previous is not None else None
    if basis is not None and (basis.num_vars != model.num_vars or basis.num_rows > model.num_rows):
        basis = None
    return solver.solve(basis)
