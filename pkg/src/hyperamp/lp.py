"""Dense linear programming and binary MILP solvers.

The LP solver is a bounded-variable primal simplex (full tableau) with a
phase-1 artificial start, Dantzig pricing, and Bland's anti-cycling rule after
a degeneracy streak.  The MILP solver is branch-and-bound over binary
variables with LP relaxation bounds, most-fractional branching, and best-bound
node selection.  Both are deterministic.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

_BLOCK_TOL = 1e-12
FEAS_TOL = 1e-7
INT_TOL = 1e-6
_DEGEN_STREAK = 50
_PIVOT_FLOOR = 1e-6
_PIVOT_HARD = 1e-8
_RATIO_TOL = 1e-9
_DUAL_TOL = 1e-7
_RELATIONS = ("<=", ">=", "=")


class SolverError(RuntimeError):
    """Base class for solver failures."""


class SimplexStallError(SolverError):
    """Pivoting exceeded the iteration cap — numerical instability."""


class NodeLimitError(SolverError):
    """Branch-and-bound exceeded its node limit before proving optimality."""


class NumericalError(SolverError):
    """A computed solution failed its own consistency checks."""


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class SolveResult:
    """Solver outcome: a status plus, when optimal, value and solution vector.

    ``bound`` is a proven bound on the optimum (an upper bound in max sense);
    it equals ``value`` for completed solves.
    """

    status: SolveStatus
    value: float | None = None
    x: np.ndarray | None = None
    bound: float | None = None

    @property
    def is_optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


@dataclass
class LinearProgram:
    """max (or min) ``objective @ x`` subject to rows and variable bounds.

    Rows are ``(coefficients, relation, rhs)`` triples with relation one of
    ``"<="``, ``">="``, ``"="``.  Bounds default to ``[0, +inf)`` per variable;
    every variable needs at least one finite bound.
    """

    objective: np.ndarray
    rows: list[tuple[np.ndarray, str, float]] = field(default_factory=list)
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    sense: str = "max"
    names: Sequence[str] | None = None

    @property
    def n_vars(self) -> int:
        return np.asarray(self.objective).size

    def add_row(self, coeffs: np.ndarray, relation: str, rhs: float) -> None:
        self.rows.append((coeffs, relation, rhs))

    def finished(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray,
                                np.ndarray, np.ndarray, list[str]]:
        """Validated dense arrays: (c, A, rhs, relations, lower, upper, names)."""
        c = np.asarray(self.objective, dtype=float).ravel()
        n = c.size
        if self.sense not in ("max", "min"):
            raise ValueError(f"sense must be 'max' or 'min', got {self.sense!r}")
        m = len(self.rows)
        a = np.zeros((m, n))
        rhs = np.zeros(m)
        rels: list[str] = []
        for i, (coeffs, rel, b) in enumerate(self.rows):
            row = np.asarray(coeffs, dtype=float).ravel()
            if row.size != n:
                raise ValueError(f"row {i} has {row.size} coefficients, expected {n}")
            if rel not in _RELATIONS:
                raise ValueError(f"row {i}: unknown relation {rel!r}")
            a[i] = row
            rhs[i] = float(b)
            rels.append(rel)
        lo = (np.zeros(n) if self.lower is None
              else np.asarray(self.lower, dtype=float).ravel())
        hi = (np.full(n, np.inf) if self.upper is None
              else np.asarray(self.upper, dtype=float).ravel())
        if lo.size != n or hi.size != n:
            raise ValueError("bound vectors must match the objective length")
        if (lo > hi).any():
            j = int(np.argmax(lo > hi))
            raise ValueError(f"variable {j}: lower bound exceeds upper bound")
        if (~np.isfinite(lo) & ~np.isfinite(hi)).any():
            raise ValueError("free variables (both bounds infinite) not supported")
        names = (list(self.names) if self.names is not None
                 else [f"x{j}" for j in range(n)])
        return c, a, rhs, np.array(rels), lo, hi, names


@dataclass
class MixedIntegerProgram(LinearProgram):
    """A LinearProgram whose ``binaries`` variables are restricted to {0, 1}."""

    binaries: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        self.binaries = frozenset(int(j) for j in self.binaries)


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def _terms(coeffs: np.ndarray, names: Sequence[str]) -> str:
    parts = []
    for j in np.flatnonzero(coeffs):
        v = coeffs[j]
        sign = "- " if v < 0 else ("+ " if parts else "")
        parts.append(f"{sign}{_fmt(abs(v))} {names[j]}")
    return " ".join(parts) if parts else "0 " + names[0]


def to_lp_text(p: LinearProgram) -> str:
    """Render a problem in LP text format for cross-checking with other solvers."""
    c, a, rhs, rels, lo, hi, names = p.finished()
    out = ["Maximize" if p.sense == "max" else "Minimize"]
    out.append(" obj: " + _terms(c, names))
    out.append("Subject To")
    for i in range(len(rhs)):
        out.append(f" c{i}: {_terms(a[i], names)} {rels[i]} {_fmt(rhs[i])}")
    out.append("Bounds")
    for j, name in enumerate(names):
        upper = "+inf" if np.isinf(hi[j]) else _fmt(hi[j])
        lower = "-inf" if np.isinf(lo[j]) else _fmt(lo[j])
        out.append(f" {lower} <= {name} <= {upper}")
    binaries = sorted(getattr(p, "binaries", ()))
    if binaries:
        out.append("Binaries")
        out.append(" " + " ".join(names[j] for j in binaries))
    out.append("End")
    return "\n".join(out) + "\n"


# --- bounded-variable primal simplex -----------------------------------------

_AT_LOWER, _AT_UPPER, _BASIC = 0, 1, 2


class _Tableau:
    """Working state for one solve over structural + slack + artificial columns.

    Revised simplex with a fresh factorization every iteration: pricing, the
    entering column, and the basic values are all solved directly from the
    original data, so no quantity carries drift accumulated over past pivots.
    At these problem sizes the extra dense solves are cheap, and in exchange
    every verdict (optimality, infeasibility, unboundedness) is certified
    against exact data.
    """

    def __init__(self, a: np.ndarray, rels: np.ndarray, rhs: np.ndarray,
                 lo: np.ndarray, hi: np.ndarray):
        m, n = a.shape
        slack_rows = np.flatnonzero(rels != "=")
        n_slack = slack_rows.size
        ncols = n + n_slack + m
        full = np.zeros((m, ncols))
        full[:, :n] = a
        for k, i in enumerate(slack_rows):
            full[i, n + k] = 1.0 if rels[i] == "<=" else -1.0
        self.m, self.n_struct, self.ncols = m, n, ncols
        self.art0 = n + n_slack
        self.lo = np.concatenate([lo, np.zeros(n_slack), np.zeros(m)])
        self.hi = np.concatenate([hi, np.full(n_slack, np.inf), np.full(m, np.inf)])
        # start every non-artificial variable at a finite bound
        start = np.where(np.isfinite(self.lo[:self.art0]),
                         self.lo[:self.art0], self.hi[:self.art0])
        resid = rhs - full[:, :self.art0] @ start
        sigma = np.where(resid >= 0, 1.0, -1.0)
        full[np.arange(m), self.art0 + np.arange(m)] = sigma
        self.state = np.full(ncols, _AT_LOWER, dtype=np.int8)
        self.state[:self.art0][~np.isfinite(self.lo[:self.art0])] = _AT_UPPER
        self.basis = np.arange(self.art0, ncols)
        # crash start: rows whose slack absorbs the residual with the right
        # sign begin with the slack basic, leaving artificials (and thus
        # phase-1 pivots) only on the violated rows
        fits = np.where(rels[slack_rows] == "<=", resid[slack_rows] >= 0.0,
                        resid[slack_rows] <= 0.0)
        self.basis[slack_rows[fits]] = n + np.flatnonzero(fits)
        self.state[self.basis] = _BASIC
        self.full0 = full
        self.rhs0 = np.asarray(rhs, dtype=float).copy()
        self.beta = np.abs(resid)
        self.cap = 50 * (m + ncols)

    def solution(self) -> np.ndarray:
        x = np.where(self.state == _AT_UPPER, self.hi, self.lo)
        x[~np.isfinite(x)] = 0.0
        x[self.basis] = self.beta
        return x

    def run(self, c: np.ndarray, *, allow_unbounded: bool) -> str:
        """Optimize ``c @ x`` (max sense); returns ``"optimal"`` or ``"unbounded"``."""
        streak = 0
        repairs = 0
        banned = np.zeros(self.ncols, dtype=bool)
        no_fix = np.zeros(self.m, dtype=bool)
        for _ in range(self.cap):
            basis_cols = self.full0[:, self.basis]
            xn = np.where(self.state == _AT_UPPER, self.hi, self.lo)
            xn[~np.isfinite(xn)] = 0.0
            xn[self.basis] = 0.0
            rhs_adj = self.rhs0 - self.full0 @ xn
            try:
                lam = np.linalg.solve(basis_cols.T, c[self.basis])
            except np.linalg.LinAlgError:
                raise NumericalError("singular working basis") from None
            z = c - lam @ self.full0
            raw = np.where(self.state == _AT_LOWER, z,
                           np.where(self.state == _AT_UPPER, -z, 0.0))
            viol = raw.copy()
            viol[banned] = 0.0
            if streak >= _DEGEN_STREAK:
                # Bland mode: lowest-index entering rule, immune to cycling
                cand = np.flatnonzero(viol > _DUAL_TOL)
                j = int(cand[0]) if cand.size else -1
            else:
                j = int(np.argmax(viol))
                if viol[j] <= _DUAL_TOL:
                    j = -1
            if j < 0:
                try:
                    self.beta = np.linalg.solve(basis_cols, rhs_adj)
                except np.linalg.LinAlgError:
                    raise NumericalError("singular working basis") from None
                lo_b = self.lo[self.basis]
                hi_b = self.hi[self.basis]
                under = np.where(np.isfinite(lo_b), lo_b - self.beta, -np.inf)
                over = np.where(np.isfinite(hi_b), self.beta - hi_b, -np.inf)
                drift = np.maximum(under, over)
                scale_b = 1.0 + np.abs(np.where(np.isfinite(lo_b), lo_b, 0.0)) \
                    + np.abs(np.where(np.isfinite(hi_b), hi_b, 0.0))
                bad = drift - 1e-9 * scale_b
                bad[no_fix] = -np.inf
                r = int(np.argmax(bad)) if self.m else 0
                if self.m and bad[r] > 0.0:
                    # Ratio-test windowing can leave a basic variable slightly
                    # outside its box, and primal pivots never pull it back in.
                    # Swap it out dual-simplex style: price the inverse row,
                    # pick the nonbasic column that moves this row the right
                    # way at the least reduced-cost damage, and let the next
                    # fresh solve land on the corrected vertex.
                    if repairs >= 2 * self.m + 10:
                        raise NumericalError(
                            "basic variable stuck outside its bounds")
                    repairs += 1
                    e_r = np.zeros(self.m)
                    e_r[r] = 1.0
                    try:
                        y_r = np.linalg.solve(basis_cols.T, e_r)
                    except np.linalg.LinAlgError:
                        raise NumericalError("singular working basis") from None
                    row = y_r @ self.full0
                    dirs = np.where(self.state == _AT_LOWER, 1.0, -1.0)
                    rate = -dirs * row
                    need_up = under[r] >= over[r]
                    movable = (self.hi - self.lo) > 1e-12
                    ok = ((self.state != _BASIC) & movable
                          & (np.abs(row) >= _PIVOT_HARD)
                          & ((rate > 0.0) == need_up) & (rate != 0.0))
                    cand = np.flatnonzero(ok)
                    if cand.size == 0:
                        # nothing in this basis can move the variable (e.g. a
                        # phase-one artificial residual); leave the drift for
                        # the post-solve checks to judge
                        no_fix[r] = True
                        continue
                    dual_slack = np.maximum(-raw[cand], 0.0)
                    score = (dual_slack + 1e-12) / np.abs(row[cand])
                    enter = int(cand[int(np.argmin(score))])
                    leave = int(self.basis[r])
                    self.basis[r] = enter
                    self.state[enter] = _BASIC
                    self.state[leave] = _AT_LOWER if need_up else _AT_UPPER
                    banned[:] = False
                    streak = 0
                    continue
                if banned.any() and (raw[banned] > _DUAL_TOL).any():
                    # a refused column still prices as improving: the basis
                    # is too ill-conditioned to certify this point
                    raise NumericalError(
                        "cannot certify optimality: improving columns "
                        "have no usable pivot")
                return "optimal"
            d = 1.0 if self.state[j] == _AT_LOWER else -1.0
            try:
                pair = np.linalg.solve(
                    basis_cols,
                    np.column_stack((rhs_adj, self.full0[:, j])))
            except np.linalg.LinAlgError:
                raise NumericalError("singular working basis") from None
            self.beta = beta = pair[:, 0]
            col = pair[:, 1]
            delta = d * col
            lo_b = self.lo[self.basis]
            hi_b = self.hi[self.basis]
            slack_lo = beta - lo_b
            slack_hi = hi_b - beta
            with np.errstate(divide="ignore", invalid="ignore"):
                t_true = np.where(delta > _BLOCK_TOL, slack_lo / delta, np.inf)
                t_true = np.where(delta < -_BLOCK_TOL,
                                  slack_hi / (-delta), t_true)
            t_clamped = np.maximum(t_true, 0.0)

            def soft_ratio(window: float) -> tuple[float, np.ndarray]:
                # largest step overrunning no bound by more than ``window``,
                # plus the rows blocking within that step
                with np.errstate(divide="ignore", invalid="ignore"):
                    ts = np.where(delta > _BLOCK_TOL,
                                  (slack_lo + window) / delta, np.inf)
                    ts = np.where(delta < -_BLOCK_TOL,
                                  (slack_hi + window) / (-delta), ts)
                tm = max(ts.min(initial=np.inf), 0.0)
                return tm, np.flatnonzero(t_clamped <= tm)

            bland = streak >= _DEGEN_STREAK
            if bland:
                # exact ratio test
                t_max = t_clamped.min(initial=np.inf)
                eligible = np.flatnonzero(t_clamped <= t_max + 1e-15)
            else:
                # two-pass (Harris) ratio test with the numerically best
                # pivot among the blocking rows
                t_max, eligible = soft_ratio(_RATIO_TOL)
                if (eligible.size and abs(
                        col[eligible[np.argmax(np.abs(delta[eligible]))]])
                        < _PIVOT_FLOOR):
                    # every pivot blocking within the tight window is noise;
                    # widen the allowed overrun once to reach a solid row
                    # (the next basic-value solve absorbs the excess)
                    t_max, eligible = soft_ratio(1e-6)
            t_bound = self.hi[j] - self.lo[j]
            if not np.isfinite(min(t_max, t_bound)):
                if not allow_unbounded:
                    raise NumericalError("unbounded ray in a bounded phase")
                return "unbounded"
            if t_bound <= t_max:
                # move to the opposite bound; no basis change
                self.state[j] = _AT_UPPER if d > 0 else _AT_LOWER
                streak = streak + 1 if t_bound <= 1e-9 else 0
                banned[:] = False
                continue
            if bland:
                r = int(eligible[np.argmin(self.basis[eligible])])
            else:
                r = int(eligible[np.argmax(np.abs(delta[eligible]))])
            if abs(col[r]) < _PIVOT_HARD:
                # refuse to pivot on a noise-scale element: the column is
                # (numerically) parallel to the basis; try another one.  The
                # ban only speaks for the current basis, so it is lifted at
                # the next basis or bound-state change.  (Small-but-real
                # pivots above this line are accepted: values are re-solved
                # from original data each iteration, so the conditioning
                # cost of one bad pivot does not compound.)
                banned[j] = True
                continue
            t_star = t_clamped[r]
            leave = self.basis[r]
            self.state[leave] = _AT_UPPER if delta[r] < 0 else _AT_LOWER
            self.basis[r] = j
            self.state[j] = _BASIC
            streak = streak + 1 if t_star <= 1e-9 else 0
            banned[:] = False
        raise SimplexStallError(
            f"simplex exceeded {self.cap} pivots ({self.m} rows, {self.ncols} columns)")


def _check_rows(a: np.ndarray, rhs: np.ndarray, rels: np.ndarray,
                x: np.ndarray, slack: float = 1.0) -> None:
    if not len(rhs):
        return
    ax = a @ x
    tol = slack * FEAS_TOL * (1 + np.abs(rhs))
    bad = (((rels == "<=") & (ax > rhs + tol))
           | ((rels == ">=") & (ax < rhs - tol))
           | ((rels == "=") & (np.abs(ax - rhs) > tol)))
    if bad.any():
        i = int(np.argmax(bad))
        raise NumericalError(f"row {i} violated: a@x={ax[i]!r} vs rhs {rhs[i]!r}")


def _equilibrate(a: np.ndarray, lo: np.ndarray,
                 hi: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row and column scaling by powers of two (exact divisions).

    Columns are first scaled so every finite variable range spans roughly one
    unit: mixed-magnitude formulations otherwise take simplex steps thousands
    of units long, which turn harmless per-step round-off into real bound
    violations.  Two coefficient-balancing sweeps follow, since big-M rows
    also mix coefficients spanning many orders of magnitude.
    """
    a = a.astype(float).copy()
    rscale = np.ones(a.shape[0])

    def pow2(span: np.ndarray) -> np.ndarray:
        return np.exp2(np.round(np.log2(np.where(span > 0, span, 1.0))))

    span = hi - lo
    usable = np.isfinite(span) & (span > 0)
    cscale = 1.0 / pow2(np.where(usable, span, 1.0))
    a /= cscale[None, :]
    for _ in range(2):
        rm = pow2(np.abs(a).max(axis=1, initial=0.0))
        a /= rm[:, None]
        rscale *= rm
        cm = pow2(np.abs(a).max(axis=0, initial=0.0))
        a /= cm[None, :]
        cscale *= cm
    return a, rscale, cscale


def _solve_arrays(c: np.ndarray, a: np.ndarray, rhs: np.ndarray,
                  rels: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                  maximize: bool, check_slack: float = 1.0) -> SolveResult:
    lo0, hi0 = lo, hi
    if len(rhs):
        a, rscale, cscale = _equilibrate(a, lo, hi)
        rhs = rhs / rscale
        lo = lo * cscale
        hi = hi * cscale
    else:
        cscale = np.ones(a.shape[1])
    last: Exception | None = None
    for attempt in range(3):
        try:
            return _solve_attempt(c, a, rhs, rels, lo, hi, maximize,
                                  check_slack, cscale, lo0, hi0, attempt)
        except (NumericalError, SimplexStallError) as err:
            last = err
    raise last


def _solve_attempt(c: np.ndarray, a: np.ndarray, rhs: np.ndarray,
                   rels: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                   maximize: bool, check_slack: float, cscale: np.ndarray,
                   lo0: np.ndarray, hi0: np.ndarray, seed: int) -> SolveResult:
    work = _Tableau(a, rels, rhs, lo, hi)
    ns = work.art0
    jittered = work.m > 0 and seed > 0
    if jittered:
        # retry attempts only: tiny outward bound perturbations make
        # ratio-test minimizers unique, so degenerate plateaus don't set off
        # long runs of basis swaps; the exact bounds are restored before a
        # final reoptimization.  The first attempt runs on exact bounds so
        # that borderline feasibility is decided honestly.
        rng = np.random.default_rng(9176 + seed)
        lo_x, hi_x = work.lo[:ns].copy(), work.hi[:ns].copy()
        fl, fh = np.isfinite(lo_x), np.isfinite(hi_x)
        jl = 1e-7 * (1 + np.abs(np.where(fl, lo_x, 0.0)))
        jh = 1e-7 * (1 + np.abs(np.where(fh, hi_x, 0.0)))
        work.lo[:ns] = np.where(fl, lo_x - jl * rng.uniform(0.5, 1.5, ns), lo_x)
        work.hi[:ns] = np.where(fh, hi_x + jh * rng.uniform(0.5, 1.5, ns), hi_x)
    if work.m:
        c1 = np.zeros(work.ncols)
        c1[work.art0:] = -1.0
        work.run(c1, allow_unbounded=False)
        art_rows = np.flatnonzero(work.basis >= work.art0)
        if art_rows.size:
            scale = 1 + np.abs(rhs[work.basis[art_rows] - work.art0])
            if (work.beta[art_rows] > FEAS_TOL * scale).any():
                return SolveResult(SolveStatus.INFEASIBLE)
        work.hi[work.art0:] = 0.0
    c2 = np.zeros(work.ncols)
    c2[:work.n_struct] = (c if maximize else -c) / cscale
    if work.run(c2, allow_unbounded=True) == "unbounded":
        return SolveResult(SolveStatus.UNBOUNDED)
    if jittered:
        work.lo[:ns], work.hi[:ns] = lo_x, hi_x
        if work.run(c2, allow_unbounded=True) == "unbounded":
            return SolveResult(SolveStatus.UNBOUNDED)
    if work.m:
        # accumulated ratio-test overruns can strand a basic variable outside
        # its bounds, which no primal pivot ever repairs; refuse such a
        # point (residuals on still-basic artificials are phase 1's business
        # and already held to its feasibility tolerance)
        keep = work.basis < work.art0
        lo_b, hi_b = work.lo[work.basis[keep]], work.hi[work.basis[keep]]
        beta_k = work.beta[keep]
        tol_b = check_slack * FEAS_TOL * (
            1 + np.abs(np.where(np.isfinite(lo_b), lo_b, 0.0))
            + np.abs(np.where(np.isfinite(hi_b), hi_b, 0.0)))
        if ((beta_k < lo_b - tol_b) | (beta_k > hi_b + tol_b)).any():
            worst = float(np.maximum(lo_b - beta_k, beta_k - hi_b).max())
            raise NumericalError(
                f"basic variable ended {worst!r} outside its bounds")
    full = work.solution()
    xs = full[:work.n_struct].copy()
    np.clip(xs, lo, hi, out=xs)
    _check_rows(a, rhs, rels, xs, check_slack)
    x = xs / cscale
    np.clip(x, lo0, hi0, out=x)
    value = float(c @ x)
    reported = float(c2 @ full) * (1.0 if maximize else -1.0)
    if check_slack == 1.0 and abs(reported - value) > 1e-7 * (1 + abs(reported)):
        raise NumericalError(
            f"objective mismatch: tableau {reported!r} vs recomputed {value!r}")
    # ``value`` matches the clipped point; ``bound`` keeps the more optimistic
    # of the two readings so branch-and-bound pruning stays safe when clipping
    # shaved a drifted basic variable (drift itself is policed in beta space
    # above, so a tolerant solve needs no objective cross-check)
    safe = max(reported, value) if maximize else min(reported, value)
    return SolveResult(SolveStatus.OPTIMAL, value, x, bound=safe)


def solve_lp(p: LinearProgram) -> SolveResult:
    """Solve a linear program to a vertex optimum.

    Returns a result with status ``OPTIMAL`` (value and solution set),
    ``INFEASIBLE``, or ``UNBOUNDED``.  Raises :class:`SimplexStallError` if
    pivoting exceeds the iteration cap and :class:`NumericalError` if the
    computed solution fails its feasibility/objective self-checks.
    """
    c, a, rhs, rels, lo, hi, _ = p.finished()
    return _solve_arrays(c, a, rhs, rels, lo, hi, p.sense == "max")


# --- branch and bound ---------------------------------------------------------


class _BoundPropagator:
    """Tightens variable bounds by single-row activity reasoning.

    Every row is read one-sidedly as ``sum g_j x_j <= g0`` (both readings for
    equalities).  The minimum activity attainable under the current bounds
    caps how much any one variable may contribute; binary variables
    additionally have fractional bounds rounded inward.  This matters for
    big-M rows ``x <= M * sum y``: once every ``y`` is fixed to zero the ``x``
    bound collapses to zero outright, instead of leaving the simplex to
    enforce a constraint whose coefficients differ by a factor of ``M`` (which
    it can only do to within roundoff amplified by ``M``).

    The row expansion is built once; :meth:`tighten` then runs whole-matrix
    sweeps, so per-call cost stays flat in the row count.
    """

    def __init__(self, a: np.ndarray, rhs: np.ndarray, rels: np.ndarray,
                 binaries: Sequence[int]):
        take_le = (rels == "<=") | (rels == "=")
        take_ge = (rels == ">=") | (rels == "=")
        g_mat = np.vstack([a[take_le], -a[take_ge]])
        self.g0 = np.concatenate([rhs[take_le], -rhs[take_ge]])
        self.pos = np.where(g_mat > 0, g_mat, 0.0)
        self.neg = np.where(g_mat < 0, g_mat, 0.0)
        self.pos_mask = self.pos > 0
        self.neg_mask = self.neg < 0
        self.pos_safe = np.where(self.pos_mask, g_mat, 1.0)
        self.neg_safe = np.where(self.neg_mask, g_mat, 1.0)
        self.binaries = np.asarray(binaries, dtype=int)

    def tighten(self, lo: np.ndarray, hi: np.ndarray,
                rounds: int = 4) -> tuple[np.ndarray, np.ndarray, bool]:
        """Tightened copies of ``(lo, hi)``, plus ``False`` on proven
        infeasibility."""
        lo, hi = lo.copy(), hi.copy()
        if not self.g0.size:
            return lo, hi, True
        for _ in range(rounds):
            changed = False
            inf_lo = ~np.isfinite(lo)
            inf_hi = ~np.isfinite(hi)
            lo_f = np.where(inf_lo, 0.0, lo)
            hi_f = np.where(inf_hi, 0.0, hi)
            minact = self.pos @ lo_f + self.neg @ hi_f
            # rows with any unbounded contribution cannot cap anything
            open_row = (self.pos_mask @ inf_lo) | (self.neg_mask @ inf_hi)
            slack = self.g0 - minact
            if (slack < -1e-9 * (1 + np.abs(self.g0)))[~open_row].any():
                return lo, hi, False
            usable = ~open_row[:, None]
            # largest contribution variable j may make with the others at
            # their cheapest: minact already counts c_j * (its cheap bound),
            # so the cap is slack / c_j away from that bound
            cap_hi = np.where(self.pos_mask & usable,
                              slack[:, None] / self.pos_safe + lo_f[None, :],
                              np.inf)
            cap_lo = np.where(self.neg_mask & usable,
                              slack[:, None] / self.neg_safe + hi_f[None, :],
                              -np.inf)
            new_hi = cap_hi.min(axis=0)
            new_lo = cap_lo.max(axis=0)
            margin = np.where(np.isfinite(hi), 1e-12 * (1 + np.abs(hi)), 0.0)
            tighter = new_hi < hi - margin
            if tighter.any():
                hi = np.where(tighter, new_hi, hi)
                changed = True
            margin = np.where(np.isfinite(lo), 1e-12 * (1 + np.abs(lo)), 0.0)
            tighter = new_lo > lo + margin
            if tighter.any():
                lo = np.where(tighter, new_lo, lo)
                changed = True
            if self.binaries.size:
                bins = self.binaries
                hb, lb = hi[bins], lo[bins]
                hi[bins] = np.where(hb < 1 - INT_TOL, np.floor(hb + INT_TOL),
                                    hb)
                lo[bins] = np.where(lb > INT_TOL, np.ceil(lb - INT_TOL), lb)
            if (lo > hi + 1e-7 * (1 + np.abs(hi))).any():
                return lo, hi, False
            if not changed:
                break
        np.minimum(lo, hi, out=lo)
        return lo, hi, True


def _propagate_bounds(a: np.ndarray, rhs: np.ndarray, rels: np.ndarray,
                      lo: np.ndarray, hi: np.ndarray, binaries: Sequence[int],
                      rounds: int = 4) -> tuple[np.ndarray, np.ndarray, bool]:
    """One-shot form of :class:`_BoundPropagator` for standalone callers."""
    return _BoundPropagator(a, rhs, rels, binaries).tighten(lo, hi, rounds)


def solve_milp(p: MixedIntegerProgram, *, node_limit: int = 1_000_000,
               warm_starts: Iterable[Mapping[int, int]] | None = None,
               bound_target: float | None = None,
               on_incumbent: Callable[[float], None] | None = None) -> SolveResult:
    """Solve a binary MILP to global optimality by branch and bound.

    Node selection is best-bound, branching is most-fractional (lowest index on
    ties).  Raises :class:`NodeLimitError` after ``node_limit`` LP relaxations
    rather than returning a possibly suboptimal answer.

    ``warm_starts`` seeds the incumbent from candidate binary assignments
    (mappings of binary index to 0/1), each checked by one LP solve.
    ``bound_target`` allows an early return once the proven global bound shows
    the optimum cannot beat the target (max sense: bound <= target); the
    returned ``bound`` is then conclusive but ``value``/``x`` may be a
    non-optimal incumbent or ``None``.  ``on_incumbent`` is called with each
    strictly improving incumbent objective value.
    """
    c, a, rhs, rels, lo0, hi0, _ = p.finished()
    binaries = sorted(p.binaries)
    if binaries and (binaries[0] < 0 or binaries[-1] >= c.size):
        raise ValueError("binary index out of range")
    for j in binaries:
        if lo0[j] < -INT_TOL or hi0[j] > 1 + INT_TOL:
            raise ValueError(f"binary variable {j} must be bounded within [0, 1]")
    maximize = p.sense == "max"
    sign = 1.0 if maximize else -1.0

    propagator = _BoundPropagator(a, rhs, rels, binaries)

    def node_lp(lo: np.ndarray, hi: np.ndarray, *,
                strict: bool = False) -> SolveResult:
        lo, hi, feasible = propagator.tighten(lo, hi)
        if not feasible:
            return SolveResult(SolveStatus.INFEASIBLE)
        # Relaxation vertices of big-M rows carry "trickle" error up to about
        # M * eps_machine * cond; they only steer the search, so tolerate it
        # there but insist on clean rows for reported solutions.
        return _solve_arrays(sign * c, a, rhs, rels, lo, hi, True,
                             check_slack=1.0 if strict else 1e4)

    best_val = -np.inf
    best_x: np.ndarray | None = None

    def try_incumbent(value: float, x: np.ndarray) -> None:
        nonlocal best_val, best_x
        if value > best_val:
            best_val, best_x = value, x
            if on_incumbent is not None:
                on_incumbent(sign * value)

    def solve_fixed(assignment: Mapping[int, int]) -> None:
        lo, hi = lo0.copy(), hi0.copy()
        for j, v in assignment.items():
            lo[j] = hi[j] = float(round(v))
        if (lo > hi).any():
            return
        res = node_lp(lo, hi, strict=True)
        if res.is_optimal:
            try_incumbent(res.value, res.x)

    for assignment in warm_starts or ():
        solve_fixed(assignment)

    root = node_lp(lo0, hi0)
    nodes = 1
    if root.status is SolveStatus.INFEASIBLE:
        return SolveResult(SolveStatus.INFEASIBLE)
    if root.status is SolveStatus.UNBOUNDED:
        return SolveResult(SolveStatus.UNBOUNDED)
    counter = 0
    # heap entries: (-bound, -counter, lower, upper, solved relaxation or None);
    # best bound first, newest node first among ties
    heap: list[tuple[float, int, np.ndarray, np.ndarray, SolveResult | None]] = []
    heapq.heappush(heap, (-root.bound, 0, lo0, hi0, root))
    while heap:
        neg_bound, _, lo, hi, solved = heapq.heappop(heap)
        upper = -neg_bound
        gap = 1e-9 * (1 + abs(best_val))
        if upper <= best_val + gap:
            break
        if bound_target is not None:
            external = sign * upper
            if (external <= bound_target) if maximize else (external >= bound_target):
                return SolveResult(
                    SolveStatus.OPTIMAL,
                    sign * best_val if best_x is not None else None,
                    best_x, bound=external)
        if solved is None:
            nodes += 1
            if nodes > node_limit:
                raise NodeLimitError(
                    f"branch and bound exceeded {node_limit} nodes")
            res = node_lp(lo, hi)
            if not res.is_optimal:
                continue
            if res.bound < upper - 1e-12 * (1 + abs(upper)):
                # bound tightened: re-queue to keep best-bound order valid
                counter += 1
                heapq.heappush(heap, (-res.bound, -counter, lo, hi, res))
                continue
        else:
            res = solved
        if res.bound <= best_val + gap:
            continue
        xb = res.x[binaries] if binaries else np.empty(0)
        frac = np.abs(xb - np.round(xb))
        if (frac <= INT_TOL).all():
            before = best_val
            solve_fixed({j: int(round(res.x[j])) for j in binaries})
            if best_val == before:
                # fixed re-solve did not improve; keep the near-integral point
                # if it holds up under the strict row check
                try:
                    _check_rows(a, rhs, rels, res.x)
                except NumericalError:
                    continue
                try_incumbent(res.value, res.x)
            continue
        j = binaries[int(np.argmax(np.minimum(frac, 1 - frac)))]
        for fix in (0.0, 1.0):
            lo2, hi2 = lo.copy(), hi.copy()
            if fix == 0.0:
                hi2[j] = 0.0
            else:
                lo2[j] = 1.0
            counter += 1
            heapq.heappush(heap, (-res.bound, -counter, lo2, hi2, None))
    if best_x is None:
        return SolveResult(SolveStatus.INFEASIBLE)
    return SolveResult(SolveStatus.OPTIMAL, sign * best_val, best_x,
                       bound=sign * best_val)
