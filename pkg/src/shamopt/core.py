"""The stochastic halfspace approximation iteration and its run driver.

One iteration, from the current point x_k:

    u_k = x_k - alpha_k * grad f(x_k)          objective gradient step
    v_k = project_Y(u_k)                       back into the simple set
    sample a constraint index j_k
    anchor = gamma * v_k + (1 - gamma) * x_k   linearization anchor
    z_k = relaxed halfspace step at v_k        Polyak-type feasibility step
    x_{k+1} = project_Y(z_k)

Two weighted iterate averages are maintained incrementally: an
alpha_t-weighted one (convex analysis) and a (t+1)^2-weighted one that starts
after the switching index (strongly convex analysis).  All constraint
sampling draws from the seeded generator owned by the run, so a fixed seed
reproduces the iterate stream exactly.
"""

import math
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import NotReadyError, NumericalFailure
from .linearization import linearize, relaxed_halfspace_step
from .metrics import Decision, RunRecord, feasibility_sq, stopping_check
from .problem import max_violation
from .rng import seeded_rng


def switching_index(smoothness, mu):
    """floor(2 L / mu - 1): last iteration of the constant-stepsize phase.

    Negative (-1) when mu >= 2L, in which case the constant phase is empty.
    """
    if mu <= 0:
        raise ValueError("switching index requires mu > 0")
    return math.floor(2.0 * smoothness / mu - 1.0)


class InvSqrtLogSchedule:
    """alpha_k = alpha0 / (sqrt(k + shift) * ln(k + shift)).

    ``shift=2`` is the classical decay; ``shift=1`` is the benchmark variant,
    whose formula is undefined at k = 0, so alpha0 is returned there.
    """

    def __init__(self, alpha0, smoothness, shift=2):
        if shift not in (1, 2):
            raise ValueError("shift must be 1 or 2")
        _check_alpha0(alpha0, smoothness)
        self.alpha0 = float(alpha0)
        self.smoothness = float(smoothness)
        self.shift = shift

    def alpha(self, k):
        t = k + self.shift
        if t < 2:
            return self.alpha0
        return self.alpha0 / (math.sqrt(t) * math.log(t))


class InvSqrtSchedule:
    """alpha_k = alpha0 / sqrt(k) for k >= 1; alpha0 at k = 0."""

    def __init__(self, alpha0, smoothness):
        _check_alpha0(alpha0, smoothness)
        self.alpha0 = float(alpha0)
        self.smoothness = float(smoothness)

    def alpha(self, k):
        if k == 0:
            return self.alpha0
        return self.alpha0 / math.sqrt(k)


class SwitchingSchedule:
    """min(1/L, 2/(mu (k+1))): constant up to the switching index, then decaying."""

    def __init__(self, smoothness, strong_convexity):
        if smoothness <= 0:
            raise ValueError("smoothness constant must be positive")
        if strong_convexity <= 0:
            raise ValueError("switching schedule requires a strongly convex objective")
        self.smoothness = float(smoothness)
        self.strong_convexity = float(strong_convexity)
        self.k0 = switching_index(self.smoothness, self.strong_convexity)

    def alpha(self, k):
        return min(1.0 / self.smoothness, 2.0 / (self.strong_convexity * (k + 1)))


def _check_alpha0(alpha0, smoothness):
    if smoothness <= 0:
        raise ValueError("smoothness constant must be positive")
    if not 0.0 < alpha0 <= 1.0 / smoothness:
        raise ValueError(f"alpha0 must lie in (0, 1/L] = (0, {1.0 / smoothness}]")


class Sampler:
    """Constraint index distribution.

    ``probabilities=None`` means uniform.  ``rho`` is m times the smallest
    sampling probability, the coverage constant of the convergence theory;
    uniform sampling gives exactly 1.
    """

    def __init__(self, m, probabilities=None):
        if m < 1:
            raise ValueError("sampler requires at least one constraint")
        self.m = int(m)
        if probabilities is None:
            self.probabilities = None
        else:
            p = np.asarray(probabilities, dtype=float)
            if p.size != m:
                raise ValueError("probability vector length disagrees with m")
            if np.any(p <= 0):
                raise ValueError("sampling probabilities must be strictly positive")
            if abs(p.sum() - 1.0) > 1e-9:
                raise ValueError("sampling probabilities must sum to 1")
            self.probabilities = p / p.sum()

    @property
    def rho(self):
        if self.probabilities is None:
            return 1.0
        return self.m * float(np.min(self.probabilities))

    def draw(self, rng):
        if self.probabilities is None:
            return int(rng.integers(0, self.m))
        return int(rng.choice(self.m, p=self.probabilities))

    def draw_many(self, rng, size):
        if self.probabilities is None:
            return rng.integers(0, self.m, size=size)
        return rng.choice(self.m, size=size, p=self.probabilities)


@dataclass
class SolverConfig:
    """Everything a run needs besides the instance and the start point.

    ``beta`` is the relaxation weight of the feasibility step: (0, 1) is the
    range of the rate theory, (0, 2) still contracts distances to the feasible
    set; configs outside (0, 1) are accepted and flagged via
    ``outside_theory``.  ``gamma`` places the linearization anchor on the
    segment between x_k (0) and v_k (1).
    """

    schedule: object
    sampler: Sampler
    beta: float = 0.96
    gamma: float = 1.0
    max_iterations: int = 1000
    seed: int = 0
    stopping: object = None
    record_every: int = 100

    def __post_init__(self):
        if not 0.0 < self.beta < 2.0:
            raise ValueError("beta must lie in (0, 2)")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")

    @property
    def outside_theory(self):
        return not 0.0 < self.beta < 1.0


@dataclass
class SolverState:
    """Mutable run state: iterate, intermediates, averages, and counters."""

    x: np.ndarray
    rng: object
    k: int = 0
    u: np.ndarray = None
    v: np.ndarray = None
    x_tilde: np.ndarray = None
    z: np.ndarray = None
    last_alpha: float = float("nan")
    last_index: int = -1
    avg_weight: float = 0.0
    avg_sum: np.ndarray = None
    sc_start: int = None
    sc_weight: float = 0.0
    sc_sum: np.ndarray = None
    grad_sq_max: float = 0.0
    stop_reason: str = None

    @property
    def grad_norm_max(self):
        """Largest gradient norm seen so far (empirical gradient bound)."""
        return math.sqrt(self.grad_sq_max)


def init_state(instance, config, x0=None):
    """Fresh state at ``x0`` (origin by default), projected into the simple set."""
    n = instance.dimension
    if x0 is None:
        x0 = np.zeros(n)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (n,):
        raise ValueError(f"x0 must have shape ({n},)")
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    sc_start = None
    if isinstance(config.schedule, SwitchingSchedule):
        sc_start = config.schedule.k0 + 1
    return SolverState(
        x=instance.box.project(x0),
        rng=seeded_rng(config.seed),
        avg_sum=np.zeros(n),
        sc_start=sc_start,
        sc_sum=np.zeros(n),
    )


def sham_step(instance, state, config, sampled_j=None):
    """Advance the state by one iteration; returns the mutated state.

    ``sampled_j`` overrides the constraint draw (the run driver presamples in
    chunks); left as None, one index is drawn from the state's generator.
    """
    k = state.k
    alpha = config.schedule.alpha(k)
    g = instance.objective.gradient(state.x)
    u = state.x - alpha * g
    v = instance.box.project(u)
    if not np.all(np.isfinite(v)):
        raise NumericalFailure(
            f"non-finite iterate after gradient step at iteration {k}",
            iteration=k,
            quantity="v",
        )
    j = config.sampler.draw(state.rng) if sampled_j is None else sampled_j
    gamma = config.gamma
    if gamma == 1.0:
        anchor = v
    elif gamma == 0.0:
        anchor = state.x
    else:
        anchor = gamma * v + (1.0 - gamma) * state.x
    lin = linearize(instance.constraints, j, anchor)
    if not math.isfinite(lin.value):
        raise NumericalFailure(
            f"non-finite value of constraint {j} at iteration {k}",
            iteration=k,
            quantity=f"h[{j}]",
        )
    z = relaxed_halfspace_step(lin, v, config.beta)
    x_new = instance.box.project(z)

    state.avg_weight += alpha
    state.avg_sum += alpha * x_new
    if state.sc_start is not None and k >= state.sc_start:
        w = float(k + 1) ** 2
        state.sc_weight += w
        state.sc_sum += w * x_new
    gsq = float(g @ g)
    if gsq > state.grad_sq_max:
        state.grad_sq_max = gsq
    state.u = u
    state.v = v
    state.x_tilde = anchor
    state.z = z
    state.last_alpha = alpha
    state.last_index = j
    state.x = x_new
    state.k = k + 1
    return state


def averaged_iterate(state, mode="convex"):
    """Current weighted iterate average.

    ``"convex"`` is the alpha_t-weighted average over all steps so far;
    ``"strongly_convex"`` is the (t+1)^2-weighted average accumulated after
    the switching index.  Raises :class:`NotReadyError` before the first term.
    """
    if mode == "convex":
        if state.avg_weight <= 0.0:
            raise NotReadyError("convex average has no accumulated terms yet")
        return state.avg_sum / state.avg_weight
    if mode == "strongly_convex":
        if state.sc_weight <= 0.0:
            raise NotReadyError(
                "strongly convex average has no accumulated terms yet "
                "(requires a switching schedule and k past the switching index)"
            )
        return state.sc_sum / state.sc_weight
    raise ValueError(f"unknown averaging mode: {mode!r}")


def _record_average(state):
    """Averaged iterate used for record metrics.

    The (t+1)^2-weighted average once it is active (switching schedule past
    its index), the alpha-weighted one otherwise.
    """
    if state.sc_weight > 0.0:
        return state.sc_sum / state.sc_weight
    return state.avg_sum / state.avg_weight


_CHUNK = 4096


def run(instance, config, x0=None):
    """Iterate until the stopping rule fires or the budget is exhausted.

    Returns ``(state, records)``.  Records are taken every
    ``config.record_every`` iterations plus a final one; stopping criteria
    are evaluated at record points (the stagnation window itself tracks every
    iteration).  ``state.stop_reason`` is one of ``"converged"``,
    ``"stagnated"`` or ``"budget"``.
    """
    state = init_state(instance, config, x0)
    records = []
    stopping = config.stopping
    window_m = stopping.window_m if stopping is not None else 1
    step_window = deque(maxlen=window_m)
    t0 = time.perf_counter_ns()
    record_every = config.record_every
    max_iterations = config.max_iterations
    draws = None
    drawn = 0

    def make_record(step_sq):
        x = state.x
        f_last = instance.objective.value(x)
        x_avg = _record_average(state)
        return RunRecord(
            k=state.k,
            f_last=f_last,
            f_avg=instance.objective.value(x_avg),
            feas_sq_last=feasibility_sq(instance, x),
            feas_sq_avg=feasibility_sq(instance, x_avg),
            max_viol_last=max_violation(instance, x),
            alpha_k=state.last_alpha,
            sampled_j=state.last_index,
            step_norm_sq=step_sq,
            wall_ns=time.perf_counter_ns() - t0,
        )

    while state.k < max_iterations:
        if drawn == 0:
            draws = config.sampler.draw_many(state.rng, _CHUNK)
            drawn = _CHUNK
        j = int(draws[_CHUNK - drawn])
        drawn -= 1
        x_prev = state.x
        sham_step(instance, state, config, sampled_j=j)
        diff = state.x - x_prev
        step_sq = float(diff @ diff)
        step_window.append(step_sq)
        if state.k % record_every == 0 or state.k == max_iterations:
            rec = make_record(step_sq)
            records.append(rec)
            if stopping is not None:
                decision = stopping_check(rec.feas_sq_last, rec.f_last, step_window, stopping)
                if decision is Decision.STOP_CONVERGED:
                    state.stop_reason = "converged"
                    return state, records
                if decision is Decision.STOP_STAGNATED:
                    state.stop_reason = "stagnated"
                    return state, records
    state.stop_reason = "budget"
    if not records or records[-1].k != state.k:
        records.append(make_record(float("nan")))
    return state, records
