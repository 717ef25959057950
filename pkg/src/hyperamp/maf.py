"""Maximal amplification factor (MAF) of a self-sufficient subhypergraph.

For a subhypergraph H' and node set M, the amplification factor of an
intensity vector x is ``min over v in M of (Tx)_v / (Sx)_v``; the MAF is its
maximum over all admissible x.  It is computed exactly by Dinkelbach
iteration: at the current value alpha, a linear program maximizes the worst
slack ``rho = min_v (Tx)_v - alpha (Sx)_v`` over normalized intensities, and
the procedure stops once that slack is nonpositive up to tolerance.  An
independent bisection solver is provided for cross-checking.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from hyperamp.hypergraph import (
    Hypergraph,
    IntensityVector,
    NodeSet,
    SelfSufficiencyReport,
    Subhypergraph,
    _as_sub,
    as_node_set,
    check_self_sufficiency,
)
from hyperamp.lp import LinearProgram, NumericalError, solve_lp

_STALL_LIMIT = 3


class ZeroDenominator(ZeroDivisionError):
    """Some node of M consumes nothing under the given intensity vector."""


class NotSelfSufficient(ValueError):
    """The (subhypergraph, M) pair fails the self-sufficiency precondition."""

    def __init__(self, report: SelfSufficiencyReport):
        super().__init__(f"subhypergraph is not self-sufficient for M: {report}")
        self.report = report


@dataclass(frozen=True)
class MafConfig:
    """Parameters of the Dinkelbach iteration.

    ``epsilon_rho`` is the termination tolerance on the master slack rho;
    ``delta`` caps each intensity entry; ``initial_intensity`` defaults to the
    all-ones vector.
    """

    epsilon_rho: float = 1e-8
    max_iterations: int = 1000
    initial_intensity: IntensityVector | None = None
    delta: float = 1e4


@dataclass(frozen=True)
class IterationRecord:
    """One accepted iterate: its index, alpha, master slack, and wall millis."""

    iteration: int
    alpha: float
    rho: float | None
    millis: float


@dataclass(frozen=True)
class MafResult:
    """Outcome of a MAF computation.

    ``alpha`` is the best amplification factor found and ``certificate`` an
    intensity vector attaining it.  ``gap`` is the last master slack: when the
    run converged, ``alpha`` is within ``gap`` of the true maximum.
    """

    alpha: float
    certificate: IntensityVector
    converged: bool
    iterations: int
    gap: float | None
    trace: tuple[IterationRecord, ...]


def amplification_factor(h: Hypergraph | Subhypergraph, m: Iterable[int],
                         x: IntensityVector) -> float:
    """``min over v in M of (Tx)_v / (Sx)_v`` for an intensity vector x.

    Raises :class:`ZeroDenominator` if some node of M has ``(Sx)_v == 0``.
    """
    sub = _as_sub(h)
    mrows = _m_rows(sub, m)
    x = np.asarray(x, dtype=float)
    if x.shape != (sub.n_arcs,):
        raise ValueError(f"intensity vector has {x.size} entries, "
                         f"expected {sub.n_arcs}")
    if (x < 0).any():
        raise ValueError("intensity entries must be nonnegative")
    sx = sub.input_columns[mrows] @ x
    tx = sub.output_columns[mrows] @ x
    zero = np.flatnonzero(sx == 0)
    if zero.size:
        label = sub.parent.nodes[int(mrows[zero[0]])]
        raise ZeroDenominator(f"node {label!r} consumes nothing under x")
    return float((tx / sx).min())


def _m_rows(sub: Subhypergraph, m: Iterable[int]) -> np.ndarray:
    mset = as_node_set(m)
    if not mset:
        raise ValueError("M must be nonempty")
    if not mset <= sub.node_indices:
        raise ValueError("M is not a subset of the subhypergraph's nodes")
    return np.fromiter(sorted(mset), dtype=np.intp, count=len(mset))


def _improvement_lp(sub: Subhypergraph, mrows: np.ndarray, alpha: float,
                    delta: float) -> LinearProgram:
    """max rho s.t. rho <= (Tx)_v - alpha (Sx)_v and (Sx)_v >= 1 for v in M."""
    s = sub.input_columns[mrows].astype(float)
    t = sub.output_columns[mrows].astype(float)
    a = sub.n_arcs
    c = np.zeros(a + 1)
    c[a] = 1.0
    p = LinearProgram(objective=c,
                      upper=np.concatenate([np.full(a, delta), [np.inf]]))
    for i in range(mrows.size):
        row = np.concatenate([alpha * s[i] - t[i], [1.0]])
        p.add_row(row, "<=", 0.0)
    for i in range(mrows.size):
        p.add_row(np.concatenate([s[i], [0.0]]), ">=", 1.0)
    return p


def compute_maf(h: Hypergraph | Subhypergraph, m: Iterable[int],
                config: MafConfig | None = None) -> MafResult:
    """Compute the MAF of a self-sufficient (subhypergraph, M) pair.

    Starts from ``config.initial_intensity`` (ones by default), then
    alternates solving the slack-maximizing linear program at the current
    alpha with re-evaluating alpha at the program's solution.  Stops with
    ``converged=True`` once the optimal slack drops to ``epsilon_rho`` or
    below; stops unconverged at the iteration limit or when floating-point
    round-off keeps alpha from improving.  The trace records every strictly
    improving iterate, so its alpha values are strictly increasing.
    """
    cfg = config or MafConfig()
    sub = _as_sub(h)
    mrows = _m_rows(sub, m)
    report = check_self_sufficiency(sub, frozenset(int(i) for i in mrows))
    if not report:
        raise NotSelfSufficient(report)
    if cfg.initial_intensity is None:
        x0 = np.ones(sub.n_arcs)
    else:
        x0 = np.asarray(cfg.initial_intensity, dtype=float)
    alpha = amplification_factor(sub, mrows, x0)
    best_x = x0
    trace = [IterationRecord(0, alpha, None, 0.0)]
    converged = False
    gap: float | None = None
    iterations = 0
    stalls = 0
    for it in range(1, cfg.max_iterations + 1):
        t0 = time.perf_counter()
        res = solve_lp(_improvement_lp(sub, mrows, alpha, cfg.delta))
        millis = (time.perf_counter() - t0) * 1000.0
        iterations = it
        if not res.is_optimal:
            raise NumericalError(
                f"slack program at alpha={alpha!r} returned {res.status}")
        rho = res.value
        gap = rho
        cand = amplification_factor(sub, mrows, res.x[:-1])
        if cand > alpha:
            alpha = cand
            best_x = res.x[:-1]
            trace.append(IterationRecord(it, alpha, rho, millis))
            stalls = 0
        else:
            stalls += 1
        if rho <= cfg.epsilon_rho:
            converged = True
            break
        if stalls >= _STALL_LIMIT:
            break
    return MafResult(alpha=alpha, certificate=best_x, converged=converged,
                     iterations=iterations, gap=gap, trace=tuple(trace))


def bisection_maf(h: Hypergraph | Subhypergraph, m: Iterable[int], *,
                  tol: float = 1e-9, delta: float = 1e4) -> float:
    """MAF by bisection on alpha — an independent cross-check for compute_maf.

    Each step probes feasibility of ``(Tx)_v >= alpha (Sx)_v`` with
    ``(Sx)_v >= 1`` and ``0 <= x <= delta`` by a phase-1 solve.  The initial
    upper bound is the largest per-arc ratio of M-restricted column sums,
    which no admissible intensity can exceed; if that bound itself is
    feasible it is returned exactly.  Otherwise the result is within ``tol``
    of the true maximum.
    """
    sub = _as_sub(h)
    mrows = _m_rows(sub, m)
    report = check_self_sufficiency(sub, frozenset(int(i) for i in mrows))
    if not report:
        raise NotSelfSufficient(report)
    s = sub.input_columns[mrows].astype(float)
    t = sub.output_columns[mrows].astype(float)

    def feasible(alpha: float) -> bool:
        # maximize the worst-row margin instead of bare phase-1 feasibility:
        # the margin crosses zero linearly in alpha, so its sign is robust
        # even when the feasible region is a sliver
        margin_cap = delta * float(t.sum())
        obj = np.zeros(sub.n_arcs + 1)
        obj[-1] = 1.0
        p = LinearProgram(
            objective=obj,
            lower=np.concatenate([np.zeros(sub.n_arcs), [-margin_cap]]),
            upper=np.concatenate([np.full(sub.n_arcs, delta), [margin_cap]]))
        for i in range(mrows.size):
            p.add_row(np.concatenate([alpha * s[i] - t[i], [1.0]]), "<=", 0.0)
            p.add_row(np.concatenate([s[i], [0.0]]), ">=", 1.0)
        res = solve_lp(p)
        return res.is_optimal and res.x[-1] >= 0.0

    hi = float((t.sum(axis=0) / s.sum(axis=0)).max())
    if feasible(hi):
        return hi
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class AmplificationClass(Enum):
    SELF_AMPLIFYING = "self-amplifying"
    SELF_SUSTAINING = "self-sustaining"
    CONTRACTING = "contracting"


def classify_amplification(alpha: float,
                           epsilon: float = 1e-8) -> AmplificationClass:
    """Classify a MAF value: above 1 + epsilon, within epsilon of 1, or below."""
    if alpha > 1.0 + epsilon:
        return AmplificationClass.SELF_AMPLIFYING
    if abs(alpha - 1.0) <= epsilon:
        return AmplificationClass.SELF_SUSTAINING
    return AmplificationClass.CONTRACTING


def write_trace(trace: Iterable[IterationRecord],
                file: str | Path | IO[str]) -> None:
    """Write a Dinkelbach trace as JSON lines (iteration, alpha, rho, millis)."""
    def dump(out: IO[str]) -> None:
        for rec in trace:
            out.write(json.dumps({"iteration": rec.iteration,
                                  "alpha": rec.alpha,
                                  "rho": rec.rho,
                                  "millis": rec.millis}) + "\n")

    if isinstance(file, (str, Path)):
        with open(file, "w", encoding="utf-8") as out:
            dump(out)
    else:
        dump(file)
