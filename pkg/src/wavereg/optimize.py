"""Maximize the Sobolev exponent over the locations of interior double roots.

The root parametrization turns the search into an unconstrained problem on
the ordered simplex of (pi/2, pi)^n_z; infeasible designs (|m0|^2 dipping
below zero) are handled by a linear penalty. The two-parameter v-space search
is the constrained variant in which the feasible set is min r_v >= 0.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .design import (
    COINCIDENT_TOL,
    FEASIBILITY_TOL,
    ROOT_HI,
    ROOT_LO,
    DesignError,
    DesignParams,
    SqMagnitude,
    extract_r,
    solve_by_roots,
    solve_by_v,
)
from .regularity import RegularityError, RegularityReport, regularity, sobolev_exponent
from .trigpoly import DivisibilityError, minimum_on_interval

PENALTY = 1e3
# fixed drop for leaving the root domain, so such points score below -100
DOMAIN_OFFSET = 0.2 * PENALTY
FAILED_VALUE = -10 * PENALTY
EDGE = 1e-6
# float evaluation of r loses about this fraction of its coefficient scale
NOISE_FACTOR = 1e-14
TIE_TOL = 1e-9

# local-search tolerances: a coarse pass for every start, a fine pass for the best basins
SCREEN_XATOL, SCREEN_FATOL = 1e-3, 1e-6
POLISH_XATOL, POLISH_FATOL = 1e-6, 1e-9
INITIAL_STEP = 0.05
POLISH_STEP = 1e-3
MAX_RESTARTS = 4
BASIN_SEPARATION = 1e-2
# evaluation cap of a screening search per root; screening is only triage
SCREEN_BUDGET_PER_ROOT = 250
COBYLA_RHOBEG = 0.1


class BudgetWarning(RuntimeWarning):
    """A local search stopped on its evaluation budget rather than on tolerance."""


def default_starts(n_z: int) -> int:
    return {1: 8, 2: 16}.get(n_z, 64)


@dataclass
class OptimizationResult:
    best_roots: tuple
    best_s0: float
    report: RegularityReport
    evaluations: int
    starts: int
    history: list = field(default_factory=list)
    best_v: tuple | None = None
    N: int | None = None
    n_z: int | None = None

    def to_dict(self) -> dict:
        out = {
            "N": self.N,
            "nz": self.n_z,
            "roots": list(self.best_roots),
            "s0": self.best_s0,
            "report": self.report.to_dict(),
            "evaluations": self.evaluations,
            "starts": self.starts,
            "history": [{"x": list(x), "s0": s} for x, s in self.history],
        }
        if self.best_v is not None:
            out["v"] = list(self.best_v)
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def design_report(N: int, n_z: int, roots, precision: int | None = None) -> tuple[RegularityReport, SqMagnitude]:
    """Solve a root design and compute its regularity report (no orthonormality re-check)."""
    sq = solve_by_roots(DesignParams(N, n_z, tuple(roots)), precision)
    return regularity(sq, check=False), sq


def _prepare_roots(roots):
    """Clip into the root interval and sort; returns (roots, domain violation)."""
    z = np.asarray(roots, dtype=float).ravel()
    lo, hi = ROOT_LO + EDGE, ROOT_HI - EDGE
    zc = np.clip(z, lo, hi)
    violation = float(np.sum(np.abs(z - zc)))
    if z.size > 1:
        violation += float(np.sum(np.maximum(z[:-1] - z[1:], 0.0)))
    zs = np.sort(zc)
    # separate coincident roots just enough for the linear system to be regular
    for i in range(1, zs.size):
        if zs[i] - zs[i - 1] < 10 * COINCIDENT_TOL:
            violation += 10 * COINCIDENT_TOL
            zs[i] = zs[i - 1] + 10 * COINCIDENT_TOL
    return tuple(float(t) for t in zs), violation


def r_violation(r) -> float:
    """Amount by which r goes negative on [0, pi], ignoring evaluation noise.

    The constraint is measured on r rather than on |m0|^2: near pi the factor
    ((1 + cos xi) / 2)^M shrinks a negative dip of r by many orders of
    magnitude, which would let the search settle in infeasible designs.
    """
    r_min = minimum_on_interval(r, 0.0, math.pi)[1]
    noise = max(FEASIBILITY_TOL, NOISE_FACTOR * r.scale())
    return -r_min if r_min < -noise else 0.0


def _penalized(N, n_z, roots, precision):
    zs, violation = _prepare_roots(roots)
    try:
        sq = solve_by_roots(DesignParams(N, n_z, zs), precision)
        M, r = extract_r(sq)
        _, s0 = sobolev_exponent(M, r)
    except (DesignError, RegularityError, DivisibilityError, ArithmeticError, np.linalg.LinAlgError):
        return FAILED_VALUE, zs
    value = s0 - PENALTY * (violation + r_violation(r))
    if violation > 0:
        value -= DOMAIN_OFFSET
    return value, zs


def objective(N: int, n_z: int, roots, precision: int | None = None) -> float:
    """s0 of the root design, minus a penalty outside the feasible ordered domain."""
    if len(roots) != n_z:
        raise ValueError(f"expected {n_z} roots, got {len(roots)}")
    return _penalized(N, n_z, roots, precision)[0]


def start_points(n_z: int, count: int, seed: int = 0) -> list[tuple]:
    """Deterministic low-discrepancy starts inside the ordered simplex of (pi/2, pi)^n_z."""
    width = ROOT_HI - ROOT_LO
    if n_z == 1:
        return [(ROOT_LO + width * (i + 0.5) / count,) for i in range(count)]
    pts = qmc.Sobol(n_z, scramble=True, seed=seed).random(count)
    out = []
    for p in pts:
        z = np.sort(ROOT_LO + width * (0.02 + 0.96 * p))
        for i in range(1, n_z):
            z[i] = max(z[i], z[i - 1] + 1e-3)
        out.append(tuple(float(v) for v in z))
    return out


class _Tracker:
    """Counts evaluations and records each improvement of the best value."""

    def __init__(self, fn):
        self.fn = fn
        self.evaluations = 0
        self.best = -math.inf
        self.history = []

    def __call__(self, x):
        self.evaluations += 1
        value, zs = self.fn(x)
        if value > self.best:
            self.best = value
            self.history.append((tuple(float(v) for v in zs), float(value)))
        return -value


def _nelder_mead(f, x0, step, xatol, fatol, maxfev):
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    simplex = np.vstack([x0] + [x0 + step * np.eye(n)[i] for i in range(n)])
    return minimize(
        f,
        x0,
        method="Nelder-Mead",
        options={"xatol": xatol, "fatol": fatol, "maxfev": maxfev, "initial_simplex": simplex},
    )


def _local_search(f, x0, budget, fine):
    """Nelder-Mead from x0; the fine pass restarts at the best point until it stops improving."""
    if not fine:
        res = _nelder_mead(f, x0, INITIAL_STEP, SCREEN_XATOL, SCREEN_FATOL, budget)
        return res.x, -res.fun, res.status == 1
    x, value, exhausted = np.asarray(x0, dtype=float), -f(x0), False
    step = INITIAL_STEP if fine == "full" else POLISH_STEP
    for _ in range(MAX_RESTARTS):
        res = _nelder_mead(f, x, step, POLISH_XATOL, POLISH_FATOL, budget)
        exhausted |= res.status == 1
        improved = -res.fun > value + TIE_TOL
        if -res.fun > value:
            x, value = res.x, -res.fun
        if not improved:
            break
        step = POLISH_STEP
    return x, value, exhausted


def _better(a, b):
    """True if candidate a = (value, roots) beats b, ties broken by smaller roots."""
    if b is None:
        return True
    if a[0] > b[0] + TIE_TOL:
        return True
    return abs(a[0] - b[0]) <= TIE_TOL and tuple(a[1]) < tuple(b[1])


def _screen_one(args):
    N, n_z, x0, budget, precision = args
    tracker = _Tracker(lambda x: _penalized(N, n_z, x, precision))
    x, value, exhausted = _local_search(tracker, x0, budget, fine=False)
    return x, value, exhausted, tracker.evaluations


def optimize_roots(
    N: int,
    n_z: int,
    starts=None,
    budget: int | None = None,
    precision: int | None = None,
    polish: int = 4,
    n_jobs: int = 1,
    seed: int = 0,
) -> OptimizationResult:
    """Multi-start Nelder-Mead maximization of s0 over the interior root locations.

    ``starts`` is a start count or an explicit list of root vectors (seeds).
    Every start first runs a short coarse search; the best ``polish`` distinct
    basins are then refined to a simplex diameter of 1e-6 and an objective
    spread of 1e-9, restarting at the best point until it stops improving.
    ``budget`` caps the evaluations of each refinement; a warning is issued
    when one stops on the cap.
    """
    if n_z < 1:
        raise ValueError("optimize_roots needs n_z >= 1")
    DesignParams(N, n_z, start_points(n_z, 1)[0])  # validates N, n_z
    if starts is None:
        starts = default_starts(n_z)
    seeded = not isinstance(starts, (int, np.integer))
    points = [tuple(float(z) for z in s) for s in starts] if seeded else start_points(n_z, int(starts), seed)
    if any(len(p) != n_z for p in points):
        raise ValueError(f"every start needs {n_z} roots")
    budget = budget or 1000 * n_z
    screen_budget = min(budget, SCREEN_BUDGET_PER_ROOT * n_z)
    jobs = [(N, n_z, p, screen_budget, precision) for p in points]
    if n_jobs != 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=None if n_jobs < 0 else n_jobs) as pool:
            screened = list(pool.map(_screen_one, jobs))
    else:
        screened = [_screen_one(j) for j in jobs]
    evaluations = sum(s[3] for s in screened)
    exhausted = False

    order = sorted(range(len(screened)), key=lambda i: -screened[i][1])
    basins = []
    for i in order:
        zs, _ = _prepare_roots(screened[i][0])
        if all(max(abs(a - b) for a, b in zip(zs, other)) > BASIN_SEPARATION for other in basins):
            basins.append(zs)
        if len(basins) >= polish:
            break

    tracker = _Tracker(lambda x: _penalized(N, n_z, x, precision))
    best = None
    for zs in basins:
        x, value, ex = _local_search(tracker, zs, budget, fine=True)
        exhausted |= ex
        cand = (value, _prepare_roots(x)[0])
        if _better(cand, best):
            best = cand
    evaluations += tracker.evaluations
    if exhausted:
        warnings.warn(f"evaluation budget {budget} exhausted in a local search", BudgetWarning, stacklevel=2)

    roots = best[1]
    report, _ = design_report(N, n_z, roots, precision)
    return OptimizationResult(
        best_roots=roots,
        best_s0=report.s0,
        report=report,
        evaluations=evaluations,
        starts=len(points),
        history=tracker.history,
        N=N,
        n_z=n_z,
    )


def _v_parts(N, v, precision):
    """(s0, min of r_v on [0, pi], r_v) or None when the pipeline fails."""
    try:
        sq = solve_by_v(N, v, precision)
        M, r = extract_r(sq)
        _, s0 = sobolev_exponent(M, r)
    except (DesignError, RegularityError, DivisibilityError, ArithmeticError, np.linalg.LinAlgError):
        return None
    return s0, minimum_on_interval(r, 0.0, math.pi)[1], r


def _v_evaluate(N, v, precision):
    """(s0, violation of r_v >= 0) or None when the pipeline fails."""
    out = _v_parts(N, v, precision)
    if out is None:
        return None
    return out[0], r_violation(out[2])


def _v_penalized(N, v, precision):
    out = _v_evaluate(N, v, precision)
    if out is None:
        return FAILED_VALUE, tuple(v)
    s0, violation = out
    return s0 - PENALTY * violation, tuple(float(x) for x in v)


class _ConstrainedTracker:
    """Objective and constraint of the v-problem from one cached pipeline run per point.

    The history records each feasible improvement of s0.
    """

    def __init__(self, N, precision):
        self.N, self.precision = N, precision
        self.cache = {}
        self.history = []
        self.best = -math.inf

    def _parts(self, v):
        key = tuple(float(t) for t in v)
        if key not in self.cache:
            out = _v_parts(self.N, key, self.precision)
            self.cache[key] = (FAILED_VALUE, -1.0) if out is None else out[:2]
            s0, r_min = self.cache[key]
            if r_min >= -FEASIBILITY_TOL and s0 > self.best:
                self.best = s0
                self.history.append((key, float(s0)))
        return self.cache[key]

    def objective(self, v):
        return -self._parts(v)[0]

    def constraint(self, v):
        return self._parts(v)[1]


def optimize_v_2dof(N: int, start=(1.0, 1.0), budget: int = 2000, precision: int | None = None) -> OptimizationResult:
    """Maximize s0 over the two free coefficients v subject to min r_v >= 0.

    The feasible set near the Daubechies start v = (1, 1) is a thin wedge, on
    whose edge a penalized simplex stalls, so the constrained problem is first
    solved with COBYLA; COBYLA tolerates small constraint violations, and a
    penalized Nelder-Mead polish moves the result back onto the feasible set.
    At the optimum r_v has a double root on (pi/2, pi), reported as ``best_roots``.
    """
    if N < 4:
        raise ValueError("the two-parameter v-space needs N >= 4")
    ct = _ConstrainedTracker(N, precision)
    res = minimize(
        ct.objective,
        np.asarray(start, dtype=float),
        method="COBYLA",
        constraints=[{"type": "ineq", "fun": ct.constraint}],
        options={"rhobeg": COBYLA_RHOBEG, "tol": POLISH_FATOL, "maxiter": budget},
    )
    exhausted = res.status == 2
    tracker = _Tracker(lambda v: _v_penalized(N, v, precision))
    tracker.best, tracker.history = ct.best, ct.history
    x, _, ex = _local_search(tracker, res.x, budget, fine=True)
    if exhausted or ex:
        warnings.warn(f"evaluation budget {budget} exhausted", BudgetWarning, stacklevel=2)
    v = tuple(float(t) for t in x)
    sq = solve_by_v(N, v, precision)
    report = regularity(sq, check=False)
    _, r = extract_r(sq)
    z, _ = minimum_on_interval(r, ROOT_LO, ROOT_HI)
    return OptimizationResult(
        best_roots=(z,),
        best_s0=report.s0,
        report=report,
        evaluations=len(ct.cache) + tracker.evaluations,
        starts=1,
        history=tracker.history,
        best_v=v,
        N=N,
        n_z=1,
    )


def interior_grid(G: int) -> np.ndarray:
    """G equally spaced points strictly inside (pi/2, pi)."""
    return ROOT_LO + (ROOT_HI - ROOT_LO) * (np.arange(G) + 0.5) / G


def scan(N: int, n_z: int, grids, precision: int | None = None) -> list[tuple]:
    """s0 on the Cartesian product of per-axis root grids, in lexicographic order.

    Rows are ``(z_1, ..., z_nz, s0, feasible)``. Points are evaluated with
    their roots sorted; coincident or infeasible points get s0 = 0.
    """
    if isinstance(grids, (int, np.integer)):
        grids = [interior_grid(int(grids))] * n_z
    grids = [np.asarray(g, dtype=float) for g in grids]
    if len(grids) != n_z:
        raise ValueError(f"need {n_z} grids")
    if any(np.any((g <= ROOT_LO) | (g >= ROOT_HI)) for g in grids):
        raise ValueError("grid points must lie inside (pi/2, pi)")
    mesh = np.meshgrid(*grids, indexing="ij")
    rows = []
    for point in zip(*(m.ravel() for m in mesh)):
        z = tuple(sorted(float(t) for t in point))
        s0, feasible = 0.0, False
        if all(b - a >= COINCIDENT_TOL for a, b in zip(z, z[1:])):
            try:
                report, _ = design_report(N, n_z, z, precision)
                if report.feasible:
                    s0, feasible = report.s0, True
            except (DesignError, RegularityError, DivisibilityError, ArithmeticError, np.linalg.LinAlgError):
                pass
        rows.append(tuple(float(t) for t in point) + (s0, feasible))
    return rows


def scan_v(N: int, grids, precision: int | None = None) -> list[tuple]:
    """s0 over a Cartesian grid of exploration parameters v; infeasible points get s0 = 0."""
    grids = [np.asarray(g, dtype=float) for g in grids]
    mesh = np.meshgrid(*grids, indexing="ij")
    rows = []
    for point in zip(*(m.ravel() for m in mesh)):
        v = tuple(float(t) for t in point)
        out = _v_evaluate(N, v, precision)
        if out is not None and out[1] == 0.0:
            rows.append(v + (out[0], True))
        else:
            rows.append(v + (0.0, False))
    return rows
