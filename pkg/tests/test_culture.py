import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from condorcet.culture import (
    CultureSpec,
    all_rankings,
    build_culture,
    char_poly,
    explicit,
    impartial,
    kendall_tau,
    mallows,
    mallows_normalizer,
    sample_profile,
    sample_rankings,
    validate_generic,
)
from condorcet.errors import InvalidInputError, NonGenericCultureError, NormalizationError
from condorcet.saddle import mallows_saddle

LN2 = math.log(2)


def test_kendall_tau_examples():
    assert kendall_tau((1, 2, 3), (1, 2, 3)) == 0
    assert kendall_tau((1, 2, 3), (3, 2, 1)) == 3
    assert kendall_tau((2, 1, 3), (1, 2, 3)) == 1


def test_kendall_tau_length_mismatch():
    with pytest.raises(InvalidInputError):
        kendall_tau((1, 2), (1, 2, 3))


@pytest.mark.parametrize("m", [2, 3, 4])
def test_kendall_tau_is_metric(m):
    perms = list(itertools.permutations(range(1, m + 1)))
    d = {(a, b): kendall_tau(a, b) for a in perms for b in perms}
    for a in perms:
        assert d[a, a] == 0
        for b in perms:
            assert d[a, b] == d[b, a]
            assert 0 <= d[a, b] <= m * (m - 1) // 2
            if a != b:
                assert d[a, b] > 0
            for c in perms:
                assert d[a, c] <= d[a, b] + d[b, c]


@pytest.mark.parametrize("m,rho", [(3, 0.0), (3, LN2), (5, 0.3), (6, 2.0), (4, 1e-9)])
def test_mallows_normalizer_matches_direct_sum(m, rho):
    ref = tuple(range(1, m + 1))
    direct = math.fsum(math.exp(-rho * kendall_tau(r, ref)) for r in itertools.permutations(ref))
    assert mallows_normalizer(m, rho) == pytest.approx(direct, rel=1e-12)


def test_impartial_uniform():
    c = impartial(3)
    assert len(c.rankings) == 6
    assert np.allclose(c.probs, 1 / 6, atol=1e-15)


def test_mallows_reference_probability():
    c = mallows(3, LN2, (1, 2, 3))
    assert c.prob((1, 2, 3)) == pytest.approx(8 / 21, abs=1e-15)
    assert math.fsum(c.probs) == pytest.approx(1.0, abs=1e-12)


def test_mallows_rho_zero_is_impartial():
    assert np.allclose(mallows(4, 0.0).probs, impartial(4).probs, atol=1e-15)


def test_explicit_rejects_zero_and_bad_sum():
    probs = {"".join(map(str, r)): 1 / 6 for r in itertools.permutations((1, 2, 3))}
    assert math.fsum(explicit(3, probs).probs) == pytest.approx(1.0)
    zero = dict(probs, **{"123": 0.0, "132": 1 / 3})
    with pytest.raises(NonGenericCultureError):
        explicit(3, zero)
    with pytest.raises(NormalizationError):
        explicit(3, dict(probs, **{"123": 0.2}))
    with pytest.raises(InvalidInputError):
        explicit(3, dict(probs, **{"123": -0.1}))


def test_explicit_rejects_duplicates():
    probs = {"".join(map(str, r)): 1 / 6 for r in itertools.permutations((1, 2, 3))}
    probs["1,2,3"] = 0.0
    with pytest.raises(InvalidInputError):
        explicit(3, probs)


def test_mallows_rejects_negative_rho():
    with pytest.raises(InvalidInputError):
        build_culture(CultureSpec("mallows", 3, rho=-1.0))


def test_char_poly_impartial():
    p = char_poly(impartial(3), 3)
    assert p.coeff(()) == pytest.approx(1 / 3)
    assert p.coeff((1,)) == pytest.approx(1 / 6)
    assert p.coeff((2,)) == pytest.approx(1 / 6)
    assert p.coeff((1, 2)) == pytest.approx(1 / 3)


@pytest.mark.parametrize("m", [3, 4, 5, 6])
def test_char_poly_impartial_factorial_formula(m):
    p = char_poly(impartial(m))
    for mask in range(1 << (m - 1)):
        k = bin(mask).count("1")
        expected = Fraction(math.factorial(k) * math.factorial(m - 1 - k), math.factorial(m))
        assert p.coeffs[mask] == pytest.approx(float(expected), rel=1e-12)


def test_char_poly_mallows_empty_set():
    p = char_poly(mallows(3, LN2, (1, 2, 3)), 3)
    assert p.coeff(()) == pytest.approx(1 / 7, rel=1e-14)


def test_char_poly_two_candidates():
    p = char_poly(mallows(2, 0.7))
    assert p.coeffs.sum() == pytest.approx(1.0, abs=1e-15)
    assert p.dim == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.floats(0, 3), st.data())
def test_char_poly_sums_to_one(m, rho, data):
    cand = data.draw(st.integers(1, m))
    p = char_poly(mallows(m, rho), cand)
    assert math.fsum(p.coeffs) == pytest.approx(1.0, abs=1e-12)
    assert cand not in p.adversaries


def test_validate_generic():
    validate_generic(char_poly(impartial(4)))
    validate_generic(char_poly(mallows(4, 3.0)))
    probs = {"".join(map(str, r)): 0.25 for r in itertools.permutations((1, 2, 3))}
    probs["123"] = probs["213"] = 0.0
    p = char_poly(explicit(3, probs, allow_zero=True), 3)
    with pytest.raises(NonGenericCultureError) as info:
        validate_generic(p)
    assert info.value.subset == frozenset({1, 2})


@pytest.mark.parametrize("m", [3, 4, 5])
def test_mallows_pairing_identity(m):
    rho = 0.8
    p = char_poly(mallows(m, rho, "m-last"))
    zeta = np.exp(mallows_saddle(m, rho, "last"))
    full = (1 << (m - 1)) - 1
    for mask in range(full + 1):
        inside = np.array([(mask >> k) & 1 for k in range(m - 1)], dtype=bool)
        lhs = p.coeffs[mask] * np.prod(zeta[inside])
        rhs = p.coeffs[full ^ mask] * np.prod(zeta[~inside])
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_sample_profile_deterministic():
    c = mallows(4, 0.5)
    a = sample_profile(c, 50, 7)
    b = sample_profile(c, 50, 7)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_profile(c, 50, 8))


def test_sample_partition_invariance():
    c = mallows(5, 0.9)
    whole = sample_rankings(c, 3, 0, 300)
    parts = np.vstack([sample_rankings(c, 3, s, 100) for s in (0, 100, 200)])
    assert np.array_equal(whole, parts)


def _freqs(culture, n, seed):
    r = sample_profile(culture, n, seed)
    index = {tuple(x): i for i, x in enumerate(culture.rankings.tolist())}
    return np.bincount([index[tuple(x)] for x in r.tolist()], minlength=len(index))


@pytest.mark.parametrize(
    "culture",
    [mallows(3, 0.0), mallows(3, LN2), mallows(3, LN2, "m-first"), impartial(3),
     explicit(3, {"123": 0.5, "132": 0.1, "213": 0.1, "231": 0.1, "312": 0.1, "321": 0.1})],
    ids=["ic-as-mallows", "mallows-last", "mallows-first", "impartial", "explicit"],
)
def test_sampling_chi_square(culture):
    n = 100_000
    counts = _freqs(culture, n, 11)
    _, pval = stats.chisquare(counts, culture.probs * n)
    assert pval > 1e-3


def test_sampling_reference_frequency():
    c = mallows(3, LN2, (1, 2, 3))
    n = 100_000
    counts = _freqs(c, n, 5)
    p = 8 / 21
    hat = counts[list(map(tuple, c.rankings.tolist())).index((1, 2, 3))] / n
    assert abs(hat - p) <= 4 * math.sqrt(p * (1 - p) / n)


def test_uniform_frequencies_rho_zero():
    n = 100_000
    counts = _freqs(mallows(3, 0.0), n, 2)
    se = math.sqrt((1 / 6) * (5 / 6) / n)
    assert np.all(np.abs(counts / n - 1 / 6) <= 4 * se)


def test_all_rankings_count():
    assert all_rankings(4).shape == (24, 4)
