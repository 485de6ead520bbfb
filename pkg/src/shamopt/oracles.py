"""Desk-scale ground-truth machinery.

Everything here is independent of the stochastic solver: a brute-force grid
minimizer for tiny dimensions, a deterministic full-information reference
solver, a feasibility routine that upper-bounds distances to the feasible
set, and samplers for the regularity and subgradient-bound constants.  These
are the oracles the test suite measures the solver against.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSampleError,
    InfeasibleGridError,
    NumericalFailure,
    OracleFailure,
)
from .problem import max_violation
from .rng import seeded_rng

#: Feasibility level at which the reference solver accepts an iterate.
BASELINE_FEAS_TOL = 1e-6
#: Nominal accuracy claimed by the reference solver's report.
BASELINE_CERTIFIED_TOL = 1e-4

_MAX_FEASIBILITY_SWEEPS = 10**6


@dataclass
class OracleReport:
    """Best value/point found by an oracle, with its certified accuracy."""

    fstar_estimate: float
    xstar_estimate: np.ndarray
    method: str
    certified_tolerance: float


def _objective_values(objective, points):
    value_many = getattr(objective, "value_many", None)
    if value_many is not None:
        return value_many(points)
    return np.array([objective.value(p) for p in points])


def brute_force_min_grid(instance, bounds, points_per_axis):
    """Exhaustive minimization over a regular grid inside ``bounds``.

    Feasibility is exact (every h_j <= 0, and inside the instance's simple
    set); the best feasible node is returned together with a Lipschitz-cover
    tolerance assembled from the smoothness constant and the empirical
    subgradient bound.  Only dimensions up to 3 are supported.
    """
    n = instance.dimension
    if n > 3:
        raise ValueError("grid oracle supports dimensions up to 3")
    if points_per_axis < 11:
        raise ValueError("grid oracle needs at least 11 points per axis")
    lo = np.asarray(bounds.lo, dtype=float)
    hi = np.asarray(bounds.hi, dtype=float)
    axes = [np.linspace(lo[i], hi[i], points_per_axis) for i in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)

    in_box = np.all(points >= instance.box.lo, axis=1) & np.all(
        points <= instance.box.hi, axis=1
    )
    vals = instance.constraints.values_many(points)
    feasible = in_box & np.all(vals <= 0.0, axis=1)
    if not np.any(feasible):
        raise InfeasibleGridError("no feasible point on the grid")
    fvals = _objective_values(instance.objective, points[feasible])
    best = int(np.argmin(fvals))
    xstar = points[feasible][best]
    fstar = float(fvals[best])

    # Seed the empirical subgradient bound from the grid corners and center.
    probes = [lo, hi, 0.5 * (lo + hi)]
    if n >= 2:
        corners = np.stack(np.meshgrid(*[(lo[i], hi[i]) for i in range(n)], indexing="ij"), axis=-1)
        probes.extend(corners.reshape(-1, n))
    for p in probes:
        for j in range(instance.m):
            instance.constraints.subgradient(j, np.asarray(p, dtype=float))
    b_h = instance.constraints.max_subgradient_norm

    diameter = float(np.linalg.norm(hi - lo))
    spacing = float(np.max((hi - lo) / (points_per_axis - 1)))
    certified = (
        instance.objective.smoothness * (diameter / points_per_axis) * math.sqrt(n)
        + b_h * spacing
    )
    return OracleReport(fstar, xstar, "grid", float(certified))


def _feasibility_sweep(instance, y, vals=None):
    """One cyclic pass of exact halfspace (Polyak) steps over violated constraints.

    Violation is snapshotted at the start of the pass (``vals``, recomputed
    when not supplied); each visited constraint is re-evaluated at the current
    point, so one that became feasible mid-pass contributes a zero step.
    """
    if vals is None:
        vals = instance.constraints.values(y)
    for j in np.nonzero(vals > 0.0)[0]:
        hj, d = instance.constraints.value_and_subgradient(int(j), y)
        if hj <= 0.0:
            continue
        dsq = float(d @ d)
        if dsq > 0.0:
            y = y - (hj / dsq) * d
    return instance.box.project(y)


def baseline_solver(instance, iterations):
    """Deterministic full-information reference solver.

    Each iteration takes one projected gradient step (switching stepsize when
    the objective is strongly convex, 1/(L sqrt(k)) otherwise), then applies
    the exact halfspace step for every constraint violated at the start of the
    sweep, in ascending index order, and projects back onto the simple set.
    The report carries the lowest objective value among iterates that were
    feasible to within ``BASELINE_FEAS_TOL``.
    """
    if iterations < 10**4:
        raise ValueError("baseline solver needs at least 1e4 iterations")
    objective = instance.objective
    box = instance.box
    L = objective.smoothness
    mu = objective.strong_convexity
    alpha0 = 1.0 / L
    x = box.project(np.zeros(instance.dimension))
    best_f = math.inf
    best_x = None
    for k in range(iterations):
        if mu > 0:
            alpha = min(alpha0, 2.0 / (mu * (k + 1)))
        else:
            alpha = alpha0 if k == 0 else alpha0 / math.sqrt(k)
        x = box.project(x - alpha * objective.gradient(x))
        vals = instance.constraints.values(x)
        worst = float(np.max(vals))
        if worst > 0.0:
            x = _feasibility_sweep(instance, x)
            worst = float(np.max(instance.constraints.values(x)))
        if not math.isfinite(worst):
            raise NumericalFailure(
                f"non-finite constraint value at reference iteration {k}",
                iteration=k,
                quantity="max violation",
            )
        if worst <= BASELINE_FEAS_TOL:
            f = objective.value(x)
            if f < best_f:
                best_f = f
                best_x = x
    if best_x is None:
        # No iterate reached the feasibility filter; polish the last one.
        for _ in range(_MAX_FEASIBILITY_SWEEPS):
            if max_violation(instance, x) <= BASELINE_FEAS_TOL:
                break
            x = _feasibility_sweep(instance, x)
        else:
            raise OracleFailure("reference solver could not reach a feasible point")
        best_x = x
        best_f = objective.value(x)
    return OracleReport(float(best_f), best_x, "baseline", BASELINE_CERTIFIED_TOL)


def distance_to_feasible(instance, x, precision):
    """Upper bound on the distance from ``x`` to the feasible intersection.

    Runs cyclic exact halfspace steps (plus simple-set projections) from ``x``
    until the largest violation is below ``precision * 1e-2`` and returns the
    length of the hop to that nearly-feasible endpoint.  The construction is
    deterministic, so two calls bound distances with the same one-sided bias.
    """
    if precision <= 0:
        raise ValueError("precision must be positive")
    target = precision * 1e-2
    x = np.asarray(x, dtype=float)
    y = instance.box.project(x)
    for _ in range(_MAX_FEASIBILITY_SWEEPS):
        worst = float(np.max(instance.constraints.values(y)))
        if worst <= target:
            return float(np.linalg.norm(x - y))
        y = _feasibility_sweep(instance, y)
    raise OracleFailure(
        f"feasibility iteration did not reach violation {target} "
        f"within {_MAX_FEASIBILITY_SWEEPS} sweeps"
    )


def estimate_regularity_constant(instance, samples, seed):
    """Empirical lower bound on the best regularity constant.

    Samples points uniformly in the simple set, discards feasible ones, and
    returns the largest ratio of (distance to the feasible set) to (maximal
    positive violation).  More samples can only increase the estimate.
    """
    if samples < 100:
        raise ValueError("regularity estimation needs at least 100 samples")
    rng = seeded_rng(seed)
    best = 0.0
    saw_infeasible = False
    for _ in range(samples):
        point = instance.box.sample(rng)
        violation = max_violation(instance, point)
        if violation <= 0.0:
            continue
        saw_infeasible = True
        ratio = distance_to_feasible(instance, point, precision=1e-6) / violation
        if ratio > best:
            best = ratio
    if not saw_infeasible:
        raise DegenerateSampleError("all sampled points were feasible")
    return best


def estimate_subgradient_bound(instance, samples, seed):
    """Largest subgradient norm over sampled (point, constraint) pairs."""
    if samples < 100:
        raise ValueError("subgradient bound estimation needs at least 100 samples")
    rng = seeded_rng(seed)
    best = 0.0
    for _ in range(samples):
        point = instance.box.sample(rng)
        for j in range(instance.m):
            d = instance.constraints.subgradient(j, point)
            norm = math.sqrt(float(d @ d))
            if norm > best:
                best = norm
    return best


def distance_to_halfspace(a, b, x):
    """Exact distance from ``x`` to {y : a.y + b <= 0}."""
    a = np.asarray(a, dtype=float)
    residual = float(a @ x + b)
    if residual <= 0.0:
        return 0.0
    return residual / float(np.linalg.norm(a))


def distance_to_ball(center, radius, x):
    """Exact distance from ``x`` to the closed ball of given center and radius."""
    gap = float(np.linalg.norm(np.asarray(x, dtype=float) - center)) - radius
    return gap if gap > 0.0 else 0.0


def distance_to_box(lo, hi, x):
    """Exact distance from ``x`` to the box [lo, hi]."""
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x - np.clip(x, lo, hi)))
