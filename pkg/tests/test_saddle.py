import math
import warnings

import numpy as np
import pytest

from condorcet.culture import char_poly, charpoly_from_coeffs, impartial, mallows
from condorcet.errors import InvalidInputError, SolverError
from condorcet.polyalg import cumulant_eval, poly_eval
from condorcet.saddle import (
    CRIT,
    SUB,
    SUPER,
    NearCriticalWarning,
    Thresholds,
    classify,
    mallows_saddle,
    solve_saddle,
)

LN2 = math.log(2)


def random_poly(rng, m):
    w = rng.random(1 << (m - 1)) + 0.05
    return charpoly_from_coeffs(w / w.sum())


def test_thresholds():
    th = Thresholds(np.array([0.5, 0.7]))
    assert np.array_equal(th.beta, 1 - th.alpha)
    with pytest.raises(InvalidInputError):
        Thresholds(np.array([0.5, 1.0]))
    with pytest.raises(InvalidInputError):
        Thresholds(np.array([0.0]))
    assert Thresholds.condorcet(3).alpha.tolist() == [0.5] * 3


def test_ic_saddle_is_origin():
    s = solve_saddle(char_poly(impartial(4)), np.full(3, 0.5))
    assert np.allclose(s.tau, 0.0, atol=1e-15)
    assert s.classes == (CRIT,) * 3
    assert s.iterations == 0


def test_mallows_m3_last_saddle():
    s = solve_saddle(char_poly(mallows(3, LN2)), np.full(2, 0.5))
    assert np.allclose(s.tau, [-1.5 * LN2, -0.5 * LN2], atol=1e-12)
    assert s.classes == (SUB, SUB)


def test_random_culture_residual():
    rng = np.random.default_rng(0)
    p = random_poly(rng, 3)
    target = rng.uniform(0.2, 0.8, 2)
    s = solve_saddle(p, target)
    assert np.max(np.abs(cumulant_eval(p, s.tau).gradient - target)) <= 1e-12
    assert s.residual <= 1e-12


def test_mallows_closed_forms():
    rho = 1.3
    assert np.allclose(mallows_saddle(3, rho, "last"), [-1.5 * rho, -0.5 * rho])
    assert np.allclose(np.exp(mallows_saddle(4, rho, "last")), [math.exp(-2 * rho), math.exp(-rho), 1.0])
    assert np.allclose(np.exp(mallows_saddle(3, rho, "first")), [math.exp(1.5 * rho), math.exp(0.5 * rho)])


@pytest.mark.parametrize("m", [3, 4, 5])
@pytest.mark.parametrize("rho", [0.1, LN2, 2.0])
@pytest.mark.parametrize("ref", ["last", "first"])
def test_solver_matches_closed_form(m, rho, ref):
    p = char_poly(mallows(m, rho, "m-" + ref))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearCriticalWarning)
        s = solve_saddle(p, np.full(m - 1, 0.5))
    assert np.allclose(s.tau, mallows_saddle(m, rho, ref), atol=1e-10, rtol=0)


def test_classify_examples():
    rho = LN2
    assert classify(np.ones(3)) == (CRIT,) * 3
    assert classify([math.exp(-2 * rho), math.exp(-rho), 1.0]) == (SUB, SUB, CRIT)
    assert classify([math.exp(1.5 * rho), math.exp(0.5 * rho)]) == (SUPER, SUPER)


def test_classify_warning_band():
    with pytest.warns(NearCriticalWarning):
        assert classify([1 + 1e-6]) == (SUPER,)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert classify([1 + 1e-10, 1 - 1e-3]) == (CRIT, SUB)
    assert classify([1 + 1e-6], eps_c=1e-5) == (CRIT,)


def test_saddle_minimizes_scaled_polynomial():
    rng = np.random.default_rng(1)
    p = random_poly(rng, 4)
    beta = np.full(3, 0.5)
    s = solve_saddle(p, beta)

    def objective(x):
        return poly_eval(p, x)[0] / np.prod(x**beta)

    f0 = objective(s.zeta)
    for _ in range(100):
        delta = rng.normal(size=3)
        delta *= 1e-2 / np.linalg.norm(delta)
        assert objective(s.zeta * np.exp(delta)) >= f0


def test_hessian_identity():
    rng = np.random.default_rng(2)
    for m in (3, 4, 5):
        p = random_poly(rng, m)
        beta = rng.uniform(0.3, 0.7, m - 1)
        s = solve_saddle(p, beta)
        v, _, HP = poly_eval(p, s.zeta)
        Z = np.diag(s.zeta)
        H = Z @ HP @ Z / v + np.diag(beta) - np.outer(beta, beta)
        assert np.allclose(s.hessian, H, atol=1e-10)


def test_solver_rejects_bad_target():
    p = char_poly(impartial(3))
    with pytest.raises(InvalidInputError):
        solve_saddle(p, np.array([0.5, 1.0]))
    with pytest.raises(InvalidInputError):
        solve_saddle(p, np.array([0.5]))


def test_solver_failure_carries_iterate():
    p = char_poly(mallows(4, 2.0))
    with pytest.raises(SolverError) as info:
        solve_saddle(p, np.full(3, 0.5), max_iter=1)
    assert info.value.last_iterate is not None and info.value.last_iterate.shape == (3,)


def test_extreme_target_converges():
    p = char_poly(mallows(5, 0.2))
    s = solve_saddle(p, np.array([0.01, 0.99, 0.5, 0.02]))
    assert s.residual <= 1e-12
