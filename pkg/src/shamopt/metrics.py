"""Run metrics: per-iteration records, stopping rules, rate fits, constants.

The record schema is the observable surface of a run.  CSV and JSONL
emission use shortest round-trip float formatting, so files parse back to
exactly the values that were written.
"""

import enum
import json
import os
from dataclasses import dataclass, fields

import numpy as np


class Decision(enum.Enum):
    CONTINUE = "continue"
    STOP_CONVERGED = "stop_converged"
    STOP_STAGNATED = "stop_stagnated"


@dataclass
class StoppingCriteria:
    """Benchmark stopping thresholds.

    A run stops as converged when the squared feasibility violation is within
    ``feas_tol`` and, with a known optimal value, the objective gap is within
    ``gap_tol``.  Without a known optimal value the run instead stops once the
    largest of the last ``window_m`` squared step norms falls below
    ``stagnation_tol``.
    """

    feas_tol: float = 1e-2
    gap_tol: float = 1e-2
    stagnation_tol: float = 1e-3
    window_m: int = 10
    fstar: float = None

    def __post_init__(self):
        if self.feas_tol <= 0 or self.gap_tol <= 0 or self.stagnation_tol <= 0:
            raise ValueError("stopping tolerances must be positive")
        if self.window_m < 1:
            raise ValueError("stagnation window must hold at least one step")


@dataclass
class RunRecord:
    """One metric row; ``f_avg``/``feas_sq_avg`` refer to the averaged iterate."""

    k: int
    f_last: float
    f_avg: float
    feas_sq_last: float
    feas_sq_avg: float
    max_viol_last: float
    alpha_k: float
    sampled_j: int
    step_norm_sq: float
    wall_ns: int


RECORD_FIELDS = tuple(f.name for f in fields(RunRecord))
CSV_HEADER = ",".join(RECORD_FIELDS)
_INT_FIELDS = ("k", "sampled_j", "wall_ns")


def feasibility_sq(instance, x):
    """Sum over constraints of squared positive parts, ||max(0, h(x))||^2."""
    vals = instance.constraints.values(np.asarray(x, dtype=float))
    pos = np.clip(vals, 0.0, None)
    return float(pos @ pos)


def stopping_check(feas_sq, f_value, step_norms_sq, criteria):
    """Stopping decision from the current metrics and recent step history.

    ``step_norms_sq`` holds the most recent squared consecutive-step norms;
    the stagnation branch is consulted only when no optimal value is known
    and at least ``window_m`` steps have been observed.
    """
    if criteria.fstar is not None:
        if feas_sq <= criteria.feas_tol and abs(f_value - criteria.fstar) <= criteria.gap_tol:
            return Decision.STOP_CONVERGED
        return Decision.CONTINUE
    window = list(step_norms_sq)[-criteria.window_m:]
    if len(window) >= criteria.window_m and max(window) <= criteria.stagnation_tol:
        return Decision.STOP_STAGNATED
    return Decision.CONTINUE


def rate_fit(records, quantity, k_min, fstar=None):
    """Least-squares slope of log(quantity) against log(k).

    ``quantity`` is ``"gap_avg"`` (averaged-iterate objective gap, requires
    ``fstar``) or ``"feas_sq_avg"``.  Records with k < ``k_min`` are ignored
    as burn-in; at least 10 records with strictly positive values must remain.
    """
    if quantity == "gap_avg":
        if fstar is None:
            raise ValueError("gap_avg rate fit requires fstar")
        pairs = [(r.k, r.f_avg - fstar) for r in records if r.k >= k_min]
    elif quantity == "feas_sq_avg":
        pairs = [(r.k, r.feas_sq_avg) for r in records if r.k >= k_min]
    else:
        raise ValueError(f"unknown rate-fit quantity: {quantity!r}")
    if len(pairs) < 10:
        raise ValueError(f"rate fit needs at least 10 records with k >= {k_min}")
    ks = np.array([p[0] for p in pairs], dtype=float)
    vals = np.array([p[1] for p in pairs], dtype=float)
    if np.any(vals <= 0.0):
        raise ValueError(
            "rate fit requires strictly positive values; clamp or shrink the window"
        )
    slope, _ = np.polyfit(np.log(ks), np.log(vals), 1)
    return float(slope)


@dataclass
class TheoryConstantsReport:
    """Informational constants assembled from empirical estimates.

    ``b_sq`` is recomputable bit-for-bit from the stored fields via
    :meth:`recompute_b_sq`; nothing here feeds back into the algorithm.
    """

    b_f_emp: float
    b_h_emp: float
    c_emp: float
    rho: float
    beta: float
    gamma: float
    m: int
    b_sq: float
    theta: float
    k0: int

    def recompute_b_sq(self):
        return _b_sq_formula(
            self.b_f_emp, self.b_h_emp, self.c_emp, self.rho, self.beta, self.gamma, self.m
        )


def _b_sq_formula(b_f, b_h, c, rho, beta, gamma, m):
    tail = beta * (1.0 - beta) * (1.0 - gamma) ** 2 * (1.0 + rho / (2.0 * m * c**2 * b_h**2))
    return b_f**2 * (1.0 / (1.0 - beta) + tail)


def theory_constants(instance, config, b_f_emp, b_h_emp, c_emp):
    """Fill a :class:`TheoryConstantsReport` from empirical inputs.

    ``theta`` is the constant-phase contraction factor 1 - mu/L (1 when the
    objective is merely convex) and ``k0`` the stepsize switching index (None
    when mu = 0).
    """
    if c_emp == 0:
        raise ValueError("degenerate regularity constant: c_emp must be nonzero")
    from .core import switching_index  # local import to keep module layering acyclic

    mu = instance.objective.strong_convexity
    smoothness = instance.objective.smoothness
    rho = config.sampler.rho
    b_sq = _b_sq_formula(b_f_emp, b_h_emp, c_emp, rho, config.beta, config.gamma, instance.m)
    theta = 1.0 - mu / smoothness if mu > 0 else 1.0
    k0 = switching_index(smoothness, mu) if mu > 0 else None
    return TheoryConstantsReport(
        b_f_emp=b_f_emp,
        b_h_emp=b_h_emp,
        c_emp=c_emp,
        rho=rho,
        beta=config.beta,
        gamma=config.gamma,
        m=instance.m,
        b_sq=b_sq,
        theta=theta,
        k0=k0,
    )


def _format_value(name, value):
    if name in _INT_FIELDS:
        return str(int(value))
    return repr(float(value))


def emit_records(records, path, fmt="csv"):
    """Write records as CSV (pinned header) or JSONL; the file ends with a newline."""
    if fmt not in ("csv", "jsonl"):
        raise ValueError(f"unknown record format: {fmt!r}")
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        if fmt == "csv":
            fh.write(CSV_HEADER + "\n")
            for rec in records:
                fh.write(
                    ",".join(_format_value(n, getattr(rec, n)) for n in RECORD_FIELDS) + "\n"
                )
        else:
            for rec in records:
                row = {n: getattr(rec, n) for n in RECORD_FIELDS}
                fh.write(json.dumps(row) + "\n")
    os.replace(tmp, path)


def read_records(path, fmt=None):
    """Parse a file written by :func:`emit_records`."""
    if fmt is None:
        fmt = "jsonl" if str(path).endswith(".jsonl") else "csv"
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        if fmt == "csv":
            header = fh.readline().strip()
            if header != CSV_HEADER:
                raise ValueError(f"unexpected record header in {path}: {header!r}")
            for line in fh:
                parts = line.strip().split(",")
                row = {}
                for name, text in zip(RECORD_FIELDS, parts):
                    row[name] = int(text) if name in _INT_FIELDS else float(text)
                records.append(RunRecord(**row))
        elif fmt == "jsonl":
            for line in fh:
                if line.strip():
                    records.append(RunRecord(**json.loads(line)))
        else:
            raise ValueError(f"unknown record format: {fmt!r}")
    return records
