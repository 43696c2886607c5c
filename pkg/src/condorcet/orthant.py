"""Gaussian integrals over the positive orthant.

``orthant_integral`` returns ``int_{(0, inf)^c} exp(-u'Mu/2) du``.  Up to
``c = 3`` it uses the arcsine formulas for orthant probabilities; above that
(and for any polynomial weight) it uses a randomized-shift rank-1 lattice
rule applied to the separation-of-variables form of the integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import ndtr, ndtri

from .errors import InvalidInputError

QMC_POINTS = 1 << 16
QMC_SHIFTS = 16
# two-sided 99% Student t quantile with QMC_SHIFTS - 1 degrees of freedom
T99 = 2.946712883338615
SHIFT_SEED = 20240601


@dataclass(frozen=True)
class PolyWeight:
    """``w(u) = constant + linear.u + u'.quadratic.u + cubic[u, u, u]``."""

    constant: float = 0.0
    linear: np.ndarray | None = None
    quadratic: np.ndarray | None = None
    cubic: np.ndarray | None = None

    def __call__(self, u: np.ndarray) -> np.ndarray:
        u = np.atleast_2d(u)
        out = np.full(u.shape[0], float(self.constant))
        if self.linear is not None:
            out += u @ np.asarray(self.linear, float)
        if self.quadratic is not None:
            out += np.einsum("ni,ij,nj->n", u, np.asarray(self.quadratic, float), u)
        if self.cubic is not None:
            out += np.einsum("ni,nj,nk,ijk->n", u, u, u, np.asarray(self.cubic, float), optimize=True)
        return out

    @property
    def is_constant(self) -> bool:
        return self.linear is None and self.quadratic is None and self.cubic is None


@dataclass(frozen=True)
class OrthantRequest:
    M: np.ndarray
    weight: PolyWeight | None = None
    rel_tol: float = 1e-6
    qmc_points: int = QMC_POINTS
    chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.M, dtype=float))
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise InvalidInputError(f"M must be square, got shape {M.shape}")
        if M.size and not np.allclose(M, M.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(M).max())):
            raise InvalidInputError("M must be symmetric")
        M = (M + M.T) / 2
        try:
            L = np.linalg.cholesky(M) if M.size else M
        except np.linalg.LinAlgError as exc:
            raise InvalidInputError("M must be positive definite") from exc
        if self.qmc_points < 1:
            raise InvalidInputError("qmc_points must be positive")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "chol", L)

    @property
    def dim(self) -> int:
        return self.M.shape[0]


def _gauss_factor(M: np.ndarray) -> float:
    c = M.shape[0]
    sign, logdet = np.linalg.slogdet(M)
    return math.exp(0.5 * c * math.log(2 * math.pi) - 0.5 * logdet)


def _orthant_probability(sigma: np.ndarray) -> float:
    """P(N(0, sigma) > 0) for dimension up to 3."""
    c = sigma.shape[0]
    s = np.sqrt(np.diag(sigma))
    r = sigma / np.outer(s, s)
    if c == 1:
        return 0.5
    if c == 2:
        return 0.25 + math.asin(r[0, 1]) / (2 * math.pi)
    return 0.125 + (math.asin(r[0, 1]) + math.asin(r[0, 2]) + math.asin(r[1, 2])) / (4 * math.pi)


@lru_cache(maxsize=None)
def korobov_generator(n: int, dim: int) -> np.ndarray:
    """Rank-1 Korobov generating vector minimizing the P_2 criterion."""
    if dim == 1:
        return np.ones(1, dtype=np.int64)
    k = np.arange(n, dtype=np.int64)
    best, best_a = math.inf, 1
    # odd multipliers spread over (1, n/2); the criterion is symmetric in a -> n - a
    cands = np.unique(np.linspace(3, n // 2 - 1, 64).astype(np.int64) | 1)
    for a in cands:
        z = np.empty(dim, dtype=np.int64)
        z[0] = 1
        for j in range(1, dim):
            z[j] = (z[j - 1] * a) % n
        x = ((k[:, None] * z[None, :]) % n) / n
        b2 = x * x - x + 1.0 / 6.0
        p2 = np.prod(1.0 + 2 * math.pi**2 * b2, axis=1).mean() - 1.0
        if p2 < best:
            best, best_a = p2, int(a)
    z = np.empty(dim, dtype=np.int64)
    z[0] = 1
    for j in range(1, dim):
        z[j] = (z[j - 1] * best_a) % n
    z.setflags(write=False)
    return z


def _genz_values(w: np.ndarray, L: np.ndarray, weight: PolyWeight | None) -> np.ndarray:
    """Integrand of E[weight(X) 1{X > 0}], X = L z, evaluated at unit-cube points ``w``."""
    npts, c = w.shape
    z = np.empty_like(w)
    f = np.ones(npts)
    for i in range(c):
        a = -(z[:, :i] @ L[i, :i]) / L[i, i]
        tail = ndtr(-a)
        f *= tail
        z[:, i] = -ndtri(np.clip(tail * (1.0 - w[:, i]), 1e-300, 1.0))
    if weight is not None and not weight.is_constant:
        f = f * weight(z @ L.T)
    elif weight is not None:
        f = f * weight.constant
    return f


def _lattice(L: np.ndarray, weight, points: int) -> tuple[float, float]:
    c = L.shape[0]
    gen = korobov_generator(points, c)
    base = (np.arange(points)[:, None] * gen[None, :] % points) / points
    shifts = np.random.default_rng(SHIFT_SEED).random((QMC_SHIFTS, c))
    est = np.empty(QMC_SHIFTS)
    for s in range(QMC_SHIFTS):
        x = (base + shifts[s]) % 1.0
        x = 1.0 - np.abs(2.0 * x - 1.0)  # baker's transform
        est[s] = _genz_values(x, L, weight).mean()
    mean = float(est.mean())
    err = T99 * float(est.std(ddof=1)) / math.sqrt(QMC_SHIFTS)
    return mean, err


def _qmc(req: OrthantRequest, weight) -> tuple[float, float]:
    sigma = np.linalg.inv(req.M)
    sigma = (sigma + sigma.T) / 2
    L = np.linalg.cholesky(sigma)
    scale = _gauss_factor(req.M)
    points = req.qmc_points
    while True:
        mean, err = _lattice(L, weight, points)
        # grow the budget a few times if the requested accuracy is not met
        if err <= req.rel_tol * abs(mean) or points >= 16 * req.qmc_points:
            return scale * mean, scale * err
        points *= 4


def orthant_integral(req: OrthantRequest) -> tuple[float, float]:
    """``(value, error_estimate)``; the error is zero for the closed forms."""
    c = req.dim
    if c == 0:
        return 1.0, 0.0
    if c == 1:
        return math.sqrt(math.pi / (2 * req.M[0, 0])), 0.0
    if c <= 3:
        sigma = np.linalg.inv(req.M)
        return _gauss_factor(req.M) * _orthant_probability(sigma), 0.0
    return _qmc(req, None)


def orthant_weighted_integral(req: OrthantRequest) -> tuple[float, float]:
    """QMC estimate of ``int_{(0, inf)^c} weight(u) exp(-u'Mu/2) du``."""
    if req.weight is None:
        raise InvalidInputError("a weight is required")
    if req.dim == 0:
        return float(req.weight.constant), 0.0
    return _qmc(req, req.weight)


def ic_limit_erf(m: int) -> float:
    """``(1/sqrt(pi)) int exp(-u^2) (1 - Phi(u))^(m-1) du`` by adaptive quadrature."""
    if m < 2:
        raise InvalidInputError("m must be at least 2")
    val, _ = integrate.quad(
        lambda u: math.exp(-u * u) * ndtr(-u) ** (m - 1),
        -10.0,
        10.0,
        epsabs=1e-14,
        epsrel=1e-13,
        limit=200,
        points=[0.0],
    )
    return val / math.sqrt(math.pi)


def ic_hessian(m: int) -> np.ndarray:
    """Covariance of the adversary indicators under impartial culture."""
    d = m - 1
    return (np.eye(d) + np.ones((d, d)) / 2) / 6


def ic_limit_orthant(m: int) -> float:
    """Per-candidate limit under impartial culture as a normalized orthant integral."""
    H = ic_hessian(m)
    val, _ = orthant_integral(OrthantRequest(np.linalg.inv(H)))
    return val / math.sqrt((2 * math.pi) ** (m - 1) * np.linalg.det(H))
