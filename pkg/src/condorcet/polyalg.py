"""Evaluation of multilinear characteristic polynomials and their cumulant
generating function ``K(t) = log P(exp(t))``.

Both :class:`~condorcet.culture.CharPoly` and :class:`XYPoly` are dense
coefficient vectors over ``2**d`` monomials; everything here only relies on
the ``coeffs`` attribute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .culture import CharPoly
from .errors import InvalidInputError


@lru_cache(maxsize=32)
def exponents(d: int) -> np.ndarray:
    """``(2**d, d)`` 0/1 matrix; row ``s`` holds the bits of mask ``s``."""
    s = np.arange(1 << d)
    e = ((s[:, None] >> np.arange(d)[None, :]) & 1).astype(float)
    e.setflags(write=False)
    return e


def _dim(p) -> int:
    return int(round(math.log2(len(p.coeffs))))


@dataclass(frozen=True)
class XYPoly:
    """Polynomial tracking wins over ``x_set`` and non-wins over ``y_set``.

    Variables are ordered by adversary label; ``kinds[k]`` is ``"x"`` or
    ``"y"`` and ``positions[k]`` is the adversary's index in the parent
    polynomial (used to pick thresholds).  Bit ``k`` of a coefficient index
    marks variable ``k``.
    """

    x_set: frozenset
    y_set: frozenset
    variables: tuple
    kinds: tuple
    positions: tuple
    coeffs: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.variables)


@dataclass(frozen=True)
class CumulantEval:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    third: np.ndarray | None = None


def poly_eval(p, x):
    """Value, gradient and Hessian of the multilinear polynomial at ``x > 0``."""
    x = np.asarray(x, dtype=float)
    d = _dim(p)
    if x.shape != (d,):
        raise InvalidInputError(f"expected a point of dimension {d}, got shape {x.shape}")
    if np.any(~(x > 0)):
        raise InvalidInputError("evaluation point must be strictly positive")
    e = exponents(d)
    terms = np.asarray(p.coeffs) * np.exp(e @ np.log(x)) if d else np.asarray(p.coeffs, float)
    value = float(terms.sum())
    # d/dx_j of a multilinear monomial containing x_j is monomial / x_j
    grad = (e.T @ terms) / x
    hess = (e.T @ (terms[:, None] * e)) / np.outer(x, x)
    np.fill_diagonal(hess, 0.0)
    return value, grad, hess


def cumulant_eval(p, t, want_third: bool = False) -> CumulantEval:
    """``K`` and its derivatives at ``t`` as moments of the tilted distribution.

    The tilted law puts mass ``p_S exp(<1_S, t>) / P(exp(t))`` on subset
    ``S``; its mean, covariance and third central moment are the gradient,
    Hessian and third derivative tensor of ``K`` at ``t``.
    """
    t = np.asarray(t, dtype=float)
    d = _dim(p)
    if t.shape != (d,):
        raise InvalidInputError(f"expected a vector of dimension {d}, got shape {t.shape}")
    coeffs = np.asarray(p.coeffs, dtype=float)
    keep = coeffs > 0
    e = exponents(d)[keep]
    with np.errstate(divide="ignore"):
        logw = np.log(coeffs[keep]) + e @ t
    top = logw.max()
    w = np.exp(logw - top)
    total = w.sum()
    pi = w / total
    value = float(top + math.log(total))
    mean = pi @ e
    c = e - mean
    cov = c.T @ (pi[:, None] * c)
    third = None
    if want_third:
        third = np.einsum("s,si,sj,sk->ijk", pi, c, c, c)
    return CumulantEval(value, mean, cov, third)


def _positions(p: CharPoly, subset) -> list:
    return sorted(p.adversaries.index(j) for j in subset)


def transform_xy(p: CharPoly, x_set, y_set) -> XYPoly:
    """Substitute ``x_j -> 1/y_j`` (times ``y_j``) on ``y_set`` and ``x_j -> 1`` off ``x_set | y_set``."""
    x_set, y_set = frozenset(x_set), frozenset(y_set)
    if x_set & y_set:
        raise InvalidInputError(f"X and Y overlap on {sorted(x_set & y_set)}")
    unknown = (x_set | y_set) - set(p.adversaries)
    if unknown:
        raise InvalidInputError(f"{sorted(unknown)} are not adversaries of {p.candidate}")
    variables = tuple(sorted(x_set | y_set))
    kinds = tuple("x" if j in x_set else "y" for j in variables)
    positions = tuple(p.adversaries.index(j) for j in variables)

    old = np.arange(len(p.coeffs))
    new = np.zeros_like(old)
    for k, (pos, kind) in enumerate(zip(positions, kinds)):
        bit = (old >> pos) & 1
        new |= (bit if kind == "x" else 1 - bit) << k
    coeffs = np.bincount(new, weights=p.coeffs, minlength=1 << len(variables))
    coeffs.setflags(write=False)
    return XYPoly(x_set, y_set, variables, kinds, positions, coeffs)


def as_xy(p) -> XYPoly:
    if isinstance(p, XYPoly):
        return p
    return transform_xy(p, p.adversaries, ())
