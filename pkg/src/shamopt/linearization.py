"""Halfspace cuts built from constraint linearizations.

Linearizing a convex constraint h at an anchor point gives
``l(y) = h(anchor) + <d, y - anchor>`` with d a subgradient; by convexity
l underestimates h everywhere, so the halfspace {l <= 0} contains the true
constraint set.  The solver's feasibility step is a relaxed projection onto
that halfspace, which has the closed form of a Polyak step: move along -d by
beta * (l(v))_+ / ||d||^2.
"""

import math
from dataclasses import dataclass

import numpy as np

#: A subgradient with norm below this (relative to the anchor scale) is
#: treated as zero, in which case the induced halfspace is all of R^n and the
#: step is the identity.  Avoids dividing by denormals.
ZERO_SUBGRADIENT_RTOL = 1e-14


@dataclass
class ConstraintLinearization:
    """Affine minorant of one constraint at an anchor point."""

    anchor: np.ndarray
    value: float
    subgradient: np.ndarray
    index: int

    def subgradient_is_zero(self):
        norm = math.sqrt(float(self.subgradient @ self.subgradient))
        return norm <= ZERO_SUBGRADIENT_RTOL * (1.0 + math.sqrt(float(self.anchor @ self.anchor)))


def linearize(constraints, j, anchor):
    """Linearization of constraint ``j`` at ``anchor`` from one value/subgradient query pair."""
    value, subgradient = constraints.value_and_subgradient(j, anchor)
    return ConstraintLinearization(anchor=anchor, value=float(value), subgradient=subgradient, index=j)


def halfspace_evaluate(lin, y):
    """l(y); membership in the halfspace is l(y) <= 0 (or a zero subgradient)."""
    if y is lin.anchor:
        return lin.value
    return lin.value + float(lin.subgradient @ (y - lin.anchor))


def halfspace_projection(lin, v):
    """Exact Euclidean projection of ``v`` onto {y : l(y) <= 0}.

    With a zero subgradient the halfspace degenerates to all of R^n and v is
    returned unchanged.
    """
    if lin.subgradient_is_zero():
        return v
    lv = halfspace_evaluate(lin, v)
    if lv <= 0.0:
        return v
    d = lin.subgradient
    return v - (lv / float(d @ d)) * d


def relaxed_halfspace_step(lin, v, beta):
    """Relaxed projection (1-beta) v + beta * proj(v), in one multiply-add.

    Computed directly as v - beta (l(v))_+ / ||d||^2 d, which is the same
    point; the convex-combination form exists only in the test suite.  The
    positive part uses an exact comparison with zero.  beta = 1 recovers the
    plain halfspace projection; the distance-contraction theory covers
    beta in (0, 2).
    """
    if not math.isfinite(beta):
        raise ValueError("beta must be finite")
    if not (math.isfinite(lin.value) and np.all(np.isfinite(v))):
        raise ValueError("relaxed halfspace step requires finite inputs")
    if lin.subgradient_is_zero():
        return v
    lv = halfspace_evaluate(lin, v)
    if lv <= 0.0:
        return v
    d = lin.subgradient
    return v - (beta * lv / float(d @ d)) * d
