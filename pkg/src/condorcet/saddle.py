"""Saddle points of the cumulant generating function and their criticality."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, SolverError
from .polyalg import cumulant_eval

EPS_C = 1e-9
WARN_BAND = 1e-4
RESIDUAL_TOL = 1e-12
MAX_STEP = 4.0

SUB, CRIT, SUPER = "subcritical", "critical", "supercritical"


class NearCriticalWarning(UserWarning):
    """A saddle coordinate is close to 1 but outside the criticality band."""


@dataclass(frozen=True)
class Thresholds:
    """Victory thresholds ``alpha`` (one per adversary) and ``beta = 1 - alpha``."""

    alpha: np.ndarray
    weak: bool = False
    beta: np.ndarray = field(init=False)

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.alpha, dtype=float)).copy()
        if a.ndim != 1 or a.size == 0:
            raise InvalidInputError("alpha must be a non-empty vector")
        if np.any(~((a > 0) & (a < 1))):
            raise InvalidInputError(f"every alpha must lie in (0, 1), got {a.tolist()}")
        a.setflags(write=False)
        b = 1.0 - a
        b.setflags(write=False)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @property
    def dim(self) -> int:
        return self.alpha.size

    @classmethod
    def condorcet(cls, d: int, weak: bool = False) -> "Thresholds":
        return cls(np.full(d, 0.5), weak)

    @classmethod
    def uniform(cls, d: int, alpha: float, weak: bool = False) -> "Thresholds":
        return cls(np.full(d, float(alpha)), weak)


@dataclass(frozen=True)
class SaddleResult:
    tau: np.ndarray
    zeta: np.ndarray
    hessian: np.ndarray
    classes: tuple
    iterations: int
    residual: float
    k_value: float = 0.0


def classify(zeta, eps_c: float = EPS_C, warn: bool = True) -> tuple:
    """Label each coordinate sub/critical/supercritical relative to 1."""
    z = np.atleast_1d(np.asarray(zeta, dtype=float))
    if np.any(~(z > 0)):
        raise InvalidInputError("saddle coordinates must be positive")
    labels = []
    for v in z:
        if abs(v - 1.0) <= eps_c:
            labels.append(CRIT)
        elif v < 1.0:
            labels.append(SUB)
        else:
            labels.append(SUPER)
    if warn:
        gap = np.abs(z - 1.0)
        near = (gap > eps_c) & (gap <= WARN_BAND)
        if np.any(near):
            warnings.warn(
                f"saddle coordinates {np.flatnonzero(near).tolist()} lie within "
                f"{WARN_BAND:g} of 1; asymptotic estimates may be unreliable",
                NearCriticalWarning,
                stacklevel=2,
            )
    return tuple(labels)


def solve_saddle(
    p,
    target,
    *,
    start=None,
    tol: float = RESIDUAL_TOL,
    max_iter: int = 200,
    eps_c: float = EPS_C,
) -> SaddleResult:
    """Solve ``grad K(tau) = target`` by damped Newton iteration."""
    target = np.atleast_1d(np.asarray(target, dtype=float))
    d = int(round(math.log2(len(p.coeffs))))
    if target.shape != (d,):
        raise InvalidInputError(f"target has shape {target.shape}, expected ({d},)")
    if np.any(~((target > 0) & (target < 1))):
        raise InvalidInputError("every target coordinate must lie in (0, 1)")

    def psi(t, ev):
        # convex objective whose gradient is g
        return ev.value - target @ t

    t = np.zeros(d) if start is None else np.asarray(start, dtype=float).copy()
    ev = cumulant_eval(p, t)
    g = ev.gradient - target
    res = float(np.max(np.abs(g))) if d else 0.0
    it = 0
    while res > tol:
        if it >= max_iter:
            raise SolverError(
                f"saddle solver did not converge in {max_iter} iterations (residual {res:.3g})",
                last_iterate=t,
                residual=res,
            )
        it += 1
        try:
            step = np.linalg.solve(ev.hessian, g)
        except np.linalg.LinAlgError as exc:
            raise SolverError("singular Hessian; culture is not generic", last_iterate=t, residual=res) from exc
        # far from the saddle the Hessian can be nearly singular; bound the step
        big = np.max(np.abs(step))
        if big > MAX_STEP:
            step *= MAX_STEP / big
        f0, n0 = psi(t, ev), np.linalg.norm(g)
        lam = 1.0
        for _ in range(41):
            t_new = t - lam * step
            ev_new = cumulant_eval(p, t_new)
            g_new = ev_new.gradient - target
            if np.linalg.norm(g_new) < n0 or psi(t_new, ev_new) < f0:
                break
            lam *= 0.5
        else:
            # no progress possible in floating point; keep what we have
            if res <= 100 * tol:
                break
            raise SolverError("line search stalled", last_iterate=t, residual=res)
        t, ev, g = t_new, ev_new, g_new
        res = float(np.max(np.abs(g)))
    if res > tol and res > 100 * tol:
        raise SolverError("saddle residual above tolerance", last_iterate=t, residual=res)
    zeta = np.exp(t)
    return SaddleResult(
        tau=t,
        zeta=zeta,
        hessian=ev.hessian,
        classes=classify(zeta, eps_c),
        iterations=it,
        residual=res,
        k_value=ev.value,
    )


def mallows_saddle(m: int, rho: float, orientation: str = "last") -> np.ndarray:
    """Closed-form log saddle point for Mallows cultures at ``alpha = 1/2``.

    ``last`` means the reference ranking puts the candidate last, ``first``
    puts it first.  Coordinates follow increasing adversary label with the
    usual reference orders ``(1, ..., m)`` and ``(m, ..., 1)``.
    """
    if m < 2:
        raise InvalidInputError("m must be at least 2")
    if rho < 0:
        raise InvalidInputError("rho must be non-negative")
    k = np.arange(1, m)
    if orientation in ("last", "m-last"):
        return (-m + 2 * (k - 1)) * rho / 2.0
    if orientation in ("first", "m-first"):
        return (m - 2 * (k - 1)) * rho / 2.0
    raise InvalidInputError(f"unknown orientation {orientation!r}")
