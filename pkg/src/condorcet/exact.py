"""Exact finite-n winning probability by a capped convolution over voters.

The state records, for every adversary, how many voters so far rank it above
the candidate, saturating in an absorbing OVER bucket once the count exceeds
the allowed bound.  After ``n`` voters the winning probability is the mass
with no adversary in OVER.
"""

from __future__ import annotations

import math

import numpy as np

from .asymptotics import win_bound
from .culture import CharPoly, Culture, char_poly
from .errors import InvalidInputError, ResourceError
from .saddle import Thresholds

MAX_STATES = 1 << 28
MASS_TOL = 1e-9


def _shift(a: np.ndarray, axis: int) -> np.ndarray:
    """Add one to the count along ``axis``; the last (OVER) slot absorbs."""
    b = np.moveaxis(a, axis, 0)
    c = np.empty_like(b)
    c[0] = 0.0
    c[1:] = b[:-1]
    c[-1] += b[-1]
    return np.moveaxis(c, 0, axis)


def capped_bounds(th: Thresholds, n: int) -> list:
    return [win_bound(b, n, th.weak) for b in th.beta]


def exact_probability(
    culture,
    candidate: int | None,
    th: Thresholds,
    n: int,
    max_states: int = MAX_STATES,
    compensated: bool = False,
) -> float:
    """Probability that ``candidate`` is an alpha-winner among ``n`` voters."""
    if n < 1:
        raise InvalidInputError("n must be at least 1")
    if isinstance(culture, CharPoly):
        p = culture
    elif isinstance(culture, Culture):
        p = char_poly(culture, candidate)
    else:
        raise InvalidInputError("expected a Culture or CharPoly")
    if th.dim != p.dim:
        raise InvalidInputError(f"threshold vector has {th.dim} entries, expected {p.dim}")
    bounds = capped_bounds(th, n)
    if any(b < 0 for b in bounds):
        return 0.0
    shape = tuple(b + 2 for b in bounds)
    states = math.prod(shape)
    if states > max_states:
        raise ResourceError(
            f"exact computation needs {states} states (budget {max_states}); use Monte Carlo instead"
        )
    d = p.dim
    coeffs = np.asarray(p.coeffs, dtype=float)
    a = np.zeros(shape)
    a[(0,) * d] = 1.0
    for step in range(n):
        new = np.zeros(shape)
        comp = np.zeros(shape) if compensated else None
        for mask in np.flatnonzero(coeffs):
            b = a
            for j in range(d):
                if mask >> j & 1:
                    b = _shift(b, j)
            inc = coeffs[mask] * b
            if compensated:
                # Kahan summation across monomials
                y = inc - comp
                t = new + y
                comp = (t - new) - y
                new = t
            else:
                new += inc
        a = new
        total = a.sum()
        if abs(total - 1.0) > MASS_TOL:
            raise ArithmeticError(f"probability mass drifted to {total!r} after voter {step + 1}")
    return float(a[tuple(slice(0, b + 1) for b in bounds)].sum())
