import math

import numpy as np
import pytest

from condorcet.errors import InvalidInputError
from condorcet.orthant import (
    OrthantRequest,
    PolyWeight,
    ic_hessian,
    ic_limit_erf,
    ic_limit_orthant,
    orthant_integral,
    orthant_weighted_integral,
)


def rejection(M, weight, n, seed):
    """Plain Monte Carlo oracle: mean of weight * 1{X > 0} for X ~ N(0, M^-1)."""
    c = M.shape[0]
    rng = np.random.default_rng(seed)
    sigma = np.linalg.inv(M)
    L = np.linalg.cholesky(sigma)
    total, total2, done = 0.0, 0.0, 0
    while done < n:
        k = min(1_000_000, n - done)
        x = rng.standard_normal((k, c)) @ L.T
        f = np.where(np.all(x > 0, axis=1), weight(x), 0.0)
        total += f.sum()
        total2 += (f * f).sum()
        done += k
    mean = total / n
    se = math.sqrt(max(total2 / n - mean * mean, 0.0) / n)
    scale = (2 * math.pi) ** (c / 2) / math.sqrt(np.linalg.det(M))
    return scale * mean, scale * se


def random_spd(rng, c):
    A = rng.normal(size=(c, c))
    return A @ A.T + c * np.eye(c) * 0.5


def test_half_gaussian():
    v, e = orthant_integral(OrthantRequest(np.eye(1)))
    assert v == pytest.approx(math.sqrt(math.pi / 2), rel=1e-15)
    assert e == 0.0


def test_identity_2d():
    v, _ = orthant_integral(OrthantRequest(np.eye(2)))
    assert v == pytest.approx(math.pi / 2, rel=1e-14)


def test_ic_m3_orthant():
    H = ic_hessian(3)
    v, _ = orthant_integral(OrthantRequest(np.linalg.inv(H)))
    a0 = v / math.sqrt((2 * math.pi) ** 2 * np.linalg.det(H))
    assert a0 == pytest.approx(0.304086723984094, rel=1e-9)
    assert v == pytest.approx(0.304086723984094 * 2 * math.pi / math.sqrt(18), rel=1e-9)


def test_not_positive_definite():
    with pytest.raises(InvalidInputError):
        OrthantRequest(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(InvalidInputError):
        OrthantRequest(np.array([[1.0, 0.1], [0.0, 1.0]]))


@pytest.mark.parametrize("c", [1, 2, 3, 4])
def test_against_rejection(c):
    rng = np.random.default_rng(c)
    M = random_spd(rng, c)
    v, err = orthant_integral(OrthantRequest(M))
    ref, se = rejection(M, lambda x: np.ones(len(x)), 2_000_000, c)
    assert abs(v - ref) <= 4 * se + err


def test_qmc_matches_closed_form_in_3d():
    rng = np.random.default_rng(7)
    M = random_spd(rng, 3)
    exact, _ = orthant_integral(OrthantRequest(M))
    v, err = orthant_weighted_integral(OrthantRequest(M, PolyWeight(1.0)))
    assert abs(v - exact) <= max(err, 1e-12 * exact) * 3
    assert abs(v - exact) / exact < 1e-6


def test_weighted_linear_1d():
    v, err = orthant_weighted_integral(OrthantRequest(np.eye(1), PolyWeight(0.0, np.ones(1))))
    assert v == pytest.approx(1.0, abs=max(3 * err, 1e-6))


def test_weighted_against_rejection():
    M = np.linalg.inv(ic_hessian(3))
    w = PolyWeight(0.0, np.ones(2))
    v, err = orthant_weighted_integral(OrthantRequest(M, w))
    ref, se = rejection(M, w, 10_000_000, 3)
    assert abs(v - ref) <= 3 * math.hypot(err, se)


def test_weighted_cubic_against_rejection():
    rng = np.random.default_rng(9)
    M = random_spd(rng, 2)
    w = PolyWeight(0.3, np.array([1.0, -0.5]), np.array([[0.2, 0.1], [0.1, 0.0]]),
                   rng.normal(size=(2, 2, 2)))
    v, err = orthant_weighted_integral(OrthantRequest(M, w))
    ref, se = rejection(M, w, 2_000_000, 4)
    assert abs(v - ref) <= 4 * math.hypot(err, se)


def test_weight_required():
    with pytest.raises(InvalidInputError):
        orthant_weighted_integral(OrthantRequest(np.eye(2)))


def test_erf_limit_values():
    assert ic_limit_erf(2) == pytest.approx(0.5, abs=1e-12)
    assert ic_limit_erf(3) == pytest.approx(0.304086723984094, abs=1e-9)
    assert ic_limit_erf(3) == pytest.approx(0.25 + math.asin(1 / 3) / (2 * math.pi), abs=1e-12)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_erf_matches_orthant(m):
    assert ic_limit_erf(m) == pytest.approx(ic_limit_orthant(m), abs=1e-8)


def test_erf_limit_decreasing():
    vals = [ic_limit_erf(m) for m in range(2, 11)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_erf_matches_qmc_orthant_m5():
    assert ic_limit_erf(5) == pytest.approx(ic_limit_orthant(5), rel=1e-5)
