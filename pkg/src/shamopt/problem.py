"""Problem data: objective/constraint oracles, the box set, and instance generation.

A problem is

    minimize f(x)  over x in Y,  subject to h_j(x) <= 0 for j = 0..m-1,

where f is smooth (gradient oracle plus curvature constants) and each h_j is
convex but possibly nonsmooth (value/subgradient oracle).  Y is a simple set
with cheap exact projection; the built-in choice is an axis-aligned box.

The benchmark family is a convex quadratic objective with second-order-cone
constraints ``||Q_i x + a_i|| <= q_i.x + b_i``; :func:`generate_instance`
draws such an instance reproducibly from a 64-bit seed.
"""

import json
import math
import os

import numpy as np

from .errors import NumericalFailure
from .rng import seeded_rng

INSTANCE_SCHEMA_VERSION = 1

#: Relative tolerance of the power-iteration eigenvalue used for smoothness
#: constants of generated instances.
POWER_ITERATION_TOL = 1e-8
POWER_ITERATION_MAX_ITER = 10**4


def _vector(v, name="vector"):
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


class QuadraticObjective:
    """f(x) = 0.5 x'Qx + q'x for a symmetric PSD matrix Q.

    ``smoothness`` is a Lipschitz constant of the gradient (the top eigenvalue
    of Q for the exact value) and ``strong_convexity`` a lower curvature bound
    (0 for merely convex objectives).
    """

    def __init__(self, Q, q, smoothness, strong_convexity=0.0):
        Q = np.asarray(Q, dtype=float)
        q = _vector(q, "q")
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError(f"Q must be square, got shape {Q.shape}")
        if Q.shape[0] != q.size:
            raise ValueError("Q and q dimensions disagree")
        if smoothness <= 0:
            raise ValueError("smoothness constant must be positive")
        if strong_convexity < 0:
            raise ValueError("strong convexity constant must be nonnegative")
        self.Q = Q
        self.q = q
        self.smoothness = float(smoothness)
        self.strong_convexity = float(strong_convexity)

    @property
    def dimension(self):
        return self.q.size

    def value(self, x):
        return 0.5 * float(x @ (self.Q @ x)) + float(self.q @ x)

    def gradient(self, x):
        return self.Q @ x + self.q

    def value_many(self, points):
        """Objective values for each row of ``points``."""
        P = np.asarray(points, dtype=float)
        return 0.5 * np.einsum("ij,ij->i", P, P @ self.Q.T) + P @ self.q


class SocConstraint:
    """Second-order-cone residual h(x) = ||Qx + a|| - q.x - b.

    The subgradient is Q'(Qx+a)/||Qx+a|| - q away from the cone point and -q
    at it (the zero element of the norm's subdifferential is selected there,
    which keeps the oracle deterministic).  With Q = 0 this reduces to the
    affine constraint -q.x - b.
    """

    __slots__ = ("Q", "a", "q", "b")

    def __init__(self, Q, a, q, b):
        Q = np.asarray(Q, dtype=float)
        if Q.ndim == 1:
            Q = Q.reshape(1, -1)
        a = _vector(a, "a")
        q = _vector(q, "q")
        if Q.shape[0] != a.size:
            raise ValueError("Q row count and a dimension disagree")
        if Q.shape[1] != q.size:
            raise ValueError("Q column count and q dimension disagree")
        self.Q = Q
        self.a = a
        self.q = q
        self.b = float(b)

    @property
    def dimension(self):
        return self.q.size

    def value(self, x):
        return float(np.linalg.norm(self.Q @ x + self.a) - self.q @ x - self.b)

    def subgradient(self, x):
        r = self.Q @ x + self.a
        nr = math.sqrt(float(r @ r))
        if nr == 0.0:
            return -self.q
        return self.Q.T @ (r / nr) - self.q

    def value_and_subgradient(self, x):
        r = self.Q @ x + self.a
        nr = math.sqrt(float(r @ r))
        lin = float(self.q @ x) + self.b
        if nr == 0.0:
            return -lin, -self.q
        return nr - lin, self.Q.T @ (r / nr) - self.q

    def value_many(self, points):
        P = np.asarray(points, dtype=float)
        R = P @ self.Q.T + self.a
        return np.sqrt(np.einsum("ij,ij->i", R, R)) - P @ self.q - self.b


class AffineConstraint:
    """Affine constraint h(x) = a.x + b with constant subgradient a."""

    __slots__ = ("a", "b")

    def __init__(self, a, b):
        self.a = _vector(a, "a")
        self.b = float(b)

    @property
    def dimension(self):
        return self.a.size

    def value(self, x):
        return float(self.a @ x + self.b)

    def subgradient(self, x):
        return self.a

    def value_and_subgradient(self, x):
        return float(self.a @ x + self.b), self.a

    def value_many(self, points):
        return np.asarray(points, dtype=float) @ self.a + self.b


class _SocBatch:
    """Stacked arrays for evaluating a pure-SOC family in a few BLAS calls."""

    def __init__(self, constraints):
        rows = [c.Q.shape[0] for c in constraints]
        self.starts = np.concatenate(([0], np.cumsum(rows)[:-1])).astype(np.intp)
        self.Qs = np.vstack([c.Q for c in constraints])
        self.a = np.concatenate([c.a for c in constraints])
        self.qmat = np.stack([c.q for c in constraints])
        self.b = np.array([c.b for c in constraints])

    def values(self, x):
        r = self.Qs @ x + self.a
        norms = np.sqrt(np.add.reduceat(r * r, self.starts))
        return norms - self.qmat @ x - self.b

    def values_many(self, points):
        R = points @ self.Qs.T + self.a
        sq = np.add.reduceat(R * R, self.starts, axis=1)
        return np.sqrt(sq) - points @ self.qmat.T - self.b


class ConstraintSet:
    """Indexed family of convex constraints with a shared subgradient-norm stat.

    Evaluation is read-only and safe to share between concurrent runs; the
    running ``max_subgradient_norm`` (an empirical bound on subgradient norms
    over all queries so far) is advisory and updated without locking.
    """

    def __init__(self, constraints):
        self._constraints = list(constraints)
        if not self._constraints:
            raise ValueError("constraint set must not be empty")
        self.max_subgradient_norm = 0.0
        if all(isinstance(c, SocConstraint) for c in self._constraints):
            self._batch = _SocBatch(self._constraints)
        else:
            self._batch = None

    @property
    def count(self):
        return len(self._constraints)

    def __len__(self):
        return len(self._constraints)

    def __getitem__(self, j):
        return self._constraints[j]

    def _check_index(self, j):
        if not 0 <= j < len(self._constraints):
            raise ValueError(f"constraint index {j} out of range [0, {len(self._constraints)})")

    def value(self, j, x):
        self._check_index(j)
        return self._constraints[j].value(x)

    def subgradient(self, j, x):
        self._check_index(j)
        d = self._constraints[j].subgradient(x)
        self._track(j, d)
        return d

    def value_and_subgradient(self, j, x):
        """One query pair (h_j(x), subgradient); shares intermediate work."""
        self._check_index(j)
        con = self._constraints[j]
        pair = getattr(con, "value_and_subgradient", None)
        if pair is not None:
            value, d = pair(x)
        else:
            value, d = con.value(x), con.subgradient(x)
        self._track(j, d)
        return value, d

    def _track(self, j, d):
        norm = math.sqrt(float(d @ d))
        if not math.isfinite(norm):
            raise NumericalFailure(
                f"non-finite subgradient for constraint {j}", quantity=f"subgradient[{j}]"
            )
        if norm > self.max_subgradient_norm:
            self.max_subgradient_norm = norm

    def values(self, x):
        """All constraint values at ``x`` as a length-m array."""
        if self._batch is not None:
            return self._batch.values(x)
        return np.array([c.value(x) for c in self._constraints])

    def values_many(self, points):
        """Constraint values for each row of ``points``; shape (npoints, m)."""
        P = np.asarray(points, dtype=float)
        if self._batch is not None:
            return self._batch.values_many(P)
        return np.column_stack([c.value_many(P) for c in self._constraints])


class Box:
    """Axis-aligned box [lo, hi] with exact componentwise projection."""

    def __init__(self, lo, hi):
        lo = _vector(lo, "lo")
        hi = _vector(hi, "hi")
        if lo.size != hi.size:
            raise ValueError("lo and hi dimensions disagree")
        if np.any(lo > hi):
            raise ValueError("box requires lo <= hi componentwise")
        self.lo = lo
        self.hi = hi

    @property
    def dimension(self):
        return self.lo.size

    def project(self, p):
        return np.clip(p, self.lo, self.hi)

    def contains(self, p, tol=1e-12):
        return bool(np.all(p >= self.lo - tol) and np.all(p <= self.hi + tol))

    def sample(self, rng):
        """One point drawn uniformly from the box."""
        return rng.uniform(self.lo, self.hi)


def project_box(lo, hi, p):
    """Componentwise clamp of ``p`` onto [lo, hi]; validates the bounds."""
    return Box(lo, hi).project(np.asarray(p, dtype=float))


def soc_value(constraint, x):
    """Residual of a second-order-cone constraint at ``x``."""
    return constraint.value(np.asarray(x, dtype=float))


def soc_subgradient(constraint, x):
    """A subgradient of a second-order-cone constraint at ``x``."""
    return constraint.subgradient(np.asarray(x, dtype=float))


class ProblemInstance:
    """A full problem: objective oracle, constraint family, simple set.

    ``known_fstar`` is optionally filled by verification oracles (never by the
    generator) and feeds gap-based stopping.  All oracles are immutable after
    construction; concurrent read-only use is safe.
    """

    def __init__(self, objective, constraints, box, dimension, known_fstar=None, seed=None):
        self.objective = objective
        self.constraints = constraints
        self.box = box
        self.dimension = int(dimension)
        self.known_fstar = known_fstar
        self.seed = seed
        if box.dimension != self.dimension:
            raise ValueError("box dimension disagrees with instance dimension")
        obj_dim = getattr(objective, "dimension", self.dimension)
        if obj_dim != self.dimension:
            raise ValueError("objective dimension disagrees with instance dimension")
        for j in range(constraints.count):
            con = constraints[j]
            con_dim = getattr(con, "dimension", self.dimension)
            if con_dim != self.dimension:
                raise ValueError(f"constraint {j} dimension disagrees with instance dimension")

    @property
    def m(self):
        return self.constraints.count


def max_violation(instance, x):
    """max_j max(h_j(x), 0): zero exactly on the feasible intersection."""
    vals = instance.constraints.values(np.asarray(x, dtype=float))
    worst = float(np.max(vals))
    return worst if worst > 0.0 else 0.0


def top_eigenvalue(S, start, tol=POWER_ITERATION_TOL, max_iter=POWER_ITERATION_MAX_ITER):
    """Largest eigenvalue of a symmetric PSD matrix by power iteration.

    Iterates until the Rayleigh quotient is stable to relative ``tol``; only
    the top eigenvalue is needed, so a full decomposition is avoided even for
    dimensions in the thousands.
    """
    v = np.asarray(start, dtype=float)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        raise ValueError("power iteration start vector must be nonzero")
    v = v / nv
    lam = float(v @ (S @ v))
    for _ in range(max_iter):
        w = S @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        lam_new = float(v @ (S @ v))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        lam = lam_new
    return lam


def generate_instance(n, m, mu=0.0, seed=0):
    """Random quadratic/SOC benchmark instance, bit-reproducible from the seed.

    The objective is 0.5 x'Q_f x + q_f'x with Q_f = A'A/n + mu*I (A standard
    normal), so the strong-convexity modulus is at least ``mu`` and the 1/n
    scaling keeps the smoothness constant O(1) across dimensions.  Each of the
    m cone constraints draws n_i uniformly from [1, n-1], standard-normal Q_i
    and q_i, b_i uniform in [1, 2], and rescales a_i so that ||a_i|| = 0.5 b_i,
    which leaves an open feasible neighbourhood around the origin.  The simple
    set is the box [-1e3, 1e3]^n.

    Draw order (A, q_f, then per constraint n_i, Q_i, q_i, b_i, a_i, then the
    power-iteration start vector) is part of the reproducibility contract.
    """
    if n < 2:
        raise ValueError("instance dimension must be at least 2")
    if m < 1:
        raise ValueError("instance requires at least one constraint")
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    rng = seeded_rng(seed)
    A = rng.standard_normal((n, n))
    Qf = A.T @ A / n
    if mu > 0:
        Qf = Qf + mu * np.eye(n)
    qf = rng.standard_normal(n)
    constraints = []
    for _ in range(m):
        ni = int(rng.integers(1, n))
        Qi = rng.standard_normal((ni, n))
        qi = rng.standard_normal(n)
        bi = float(rng.uniform(1.0, 2.0))
        a_raw = rng.standard_normal(ni)
        norm = np.linalg.norm(a_raw)
        while norm == 0.0:  # probability-zero guard, keeps the stream deterministic
            a_raw = rng.standard_normal(ni)
            norm = np.linalg.norm(a_raw)
        ai = a_raw * (0.5 * bi / norm)
        constraints.append(SocConstraint(Qi, ai, qi, bi))
    start = rng.standard_normal(n)
    smoothness = top_eigenvalue(Qf, start)
    objective = QuadraticObjective(Qf, qf, smoothness=smoothness, strong_convexity=mu)
    box = Box(np.full(n, -1e3), np.full(n, 1e3))
    return ProblemInstance(objective, ConstraintSet(constraints), box, n, seed=seed)


def save_instance(instance, path):
    """Write a quadratic/SOC instance as a versioned JSON document.

    Floats are emitted in shortest round-trip decimal form, so write-then-read
    reproduces every array bit for bit.  Only instances built from
    :class:`QuadraticObjective` and :class:`SocConstraint` are serializable.
    """
    obj = instance.objective
    if not isinstance(obj, QuadraticObjective):
        raise ValueError("only quadratic objectives are serializable")
    cons = []
    for j in range(instance.constraints.count):
        c = instance.constraints[j]
        if not isinstance(c, SocConstraint):
            raise ValueError("only second-order-cone constraints are serializable")
        cons.append({"Q": c.Q.tolist(), "a": c.a.tolist(), "q": c.q.tolist(), "b": c.b})
    doc = {
        "schema_version": INSTANCE_SCHEMA_VERSION,
        "dimension": instance.dimension,
        "m": instance.m,
        "mu": obj.strong_convexity,
        "L_f": obj.smoothness,
        "Q_f": obj.Q.tolist(),
        "q_f": obj.q.tolist(),
        "constraints": cons,
        "box_lo": instance.box.lo.tolist(),
        "box_hi": instance.box.hi.tolist(),
        "seed": instance.seed,
    }
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    os.replace(tmp, path)


def load_instance(path):
    """Read an instance written by :func:`save_instance`."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    version = doc.get("schema_version")
    if version != INSTANCE_SCHEMA_VERSION:
        raise ValueError(f"unsupported instance schema version: {version!r}")
    objective = QuadraticObjective(
        np.array(doc["Q_f"], dtype=float),
        np.array(doc["q_f"], dtype=float),
        smoothness=doc["L_f"],
        strong_convexity=doc["mu"],
    )
    constraints = ConstraintSet(
        [SocConstraint(c["Q"], c["a"], c["q"], c["b"]) for c in doc["constraints"]]
    )
    box = Box(np.array(doc["box_lo"], dtype=float), np.array(doc["box_hi"], dtype=float))
    return ProblemInstance(
        objective, constraints, box, doc["dimension"], seed=doc.get("seed")
    )
