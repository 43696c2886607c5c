"""Rankings, voter cultures and the characteristic polynomial.

Candidates are labelled ``1..m``.  A ranking is a tuple of labels listed
best-to-worst.  The characteristic polynomial of a culture, seen from a
designated candidate, is stored as a dense vector of ``2**d`` coefficients
(``d = m - 1``) indexed by a bitmask over the adversaries: bit ``k`` is set
when the ``k``-th adversary (in increasing label order) is ranked above the
designated candidate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidInputError, NonGenericCultureError, NormalizationError

Ranking = tuple  # tuple[int, ...], best-to-worst

MAX_POLY_M = 25
MAX_ENUM_M = 9
SUM_TOL = 1e-12


def check_ranking(r: Sequence[int], m: int | None = None) -> Ranking:
    r = tuple(int(c) for c in r)
    if m is None:
        m = len(r)
    if len(r) != m or sorted(r) != list(range(1, m + 1)):
        raise InvalidInputError(f"{r!r} is not a ranking of candidates 1..{m}")
    return r


def kendall_tau(r1: Sequence[int], r2: Sequence[int]) -> int:
    """Number of candidate pairs ordered differently by ``r1`` and ``r2``."""
    if len(r1) != len(r2):
        raise InvalidInputError("rankings have different lengths")
    r1 = check_ranking(r1)
    r2 = check_ranking(r2, len(r1))
    pos = {c: i for i, c in enumerate(r2)}
    seq = [pos[c] for c in r1]
    m = len(seq)
    return sum(1 for i in range(m) for j in range(i + 1, m) if seq[i] > seq[j])


def mallows_normalizer(m: int, rho: float) -> float:
    """Sum of ``exp(-rho * d(r, r0))`` over all rankings of ``m`` candidates."""
    if rho == 0.0:
        return float(math.factorial(m))
    q = math.exp(-rho)
    # (1 - q**i) / (1 - q) = 1 + q + ... + q**(i-1), written with expm1 for small rho
    z = 1.0
    for i in range(1, m + 1):
        z *= math.expm1(-rho * i) / math.expm1(-rho)
    return z


def resolve_reference(reference, m: int) -> Ranking:
    if isinstance(reference, str):
        token = reference.strip().lower()
        if token in ("m-last", "last"):
            return tuple(range(1, m + 1))
        if token in ("m-first", "first"):
            return tuple(range(m, 0, -1))
        return check_ranking(parse_ranking_key(reference, m), m)
    return check_ranking(reference, m)


def parse_ranking_key(key: str, m: int) -> Ranking:
    """Parse ``"123"`` (m <= 9) or ``"1,2,3"`` into a ranking tuple."""
    key = key.strip()
    if "," in key:
        parts = [p for p in key.split(",") if p.strip()]
    elif m <= 9:
        parts = list(key)
    else:
        raise InvalidInputError(f"ranking key {key!r} must be comma-separated when m > 9")
    try:
        return check_ranking([int(p) for p in parts], m)
    except ValueError as exc:
        raise InvalidInputError(f"malformed ranking key {key!r}") from exc


@dataclass(frozen=True)
class CultureSpec:
    kind: str
    m: int
    probs: Mapping | None = None
    rho: float | None = None
    reference: object = None

    def __post_init__(self):
        if self.kind not in ("explicit", "impartial", "mallows"):
            raise InvalidInputError(f"unknown culture kind {self.kind!r}")
        if int(self.m) != self.m or self.m < 2:
            raise InvalidInputError("a culture needs at least 2 candidates")
        if self.kind == "mallows":
            if self.rho is None or not math.isfinite(self.rho) or self.rho < 0:
                raise InvalidInputError("Mallows concentration rho must be a finite value >= 0")
            if self.reference is None:
                raise InvalidInputError("Mallows culture needs a reference ranking")
        if self.kind == "explicit" and not self.probs:
            raise InvalidInputError("explicit culture needs a probability table")


@dataclass(frozen=True)
class Culture:
    """Explicit distribution over all ``m!`` rankings.

    ``rankings`` is an ``(m!, m)`` integer array in lexicographic order and
    ``probs`` the matching probabilities.  Mallows cultures keep ``rho`` and
    ``reference`` so the sampler can use repeated insertion.
    """

    kind: str
    m: int
    rankings: np.ndarray
    probs: np.ndarray
    rho: float | None = None
    reference: Ranking | None = None
    _index: dict = field(default=None, repr=False, compare=False)

    def prob(self, r: Sequence[int]) -> float:
        return float(self.probs[self._index[tuple(r)]])

    def as_dict(self) -> dict:
        return {tuple(int(c) for c in r): float(p) for r, p in zip(self.rankings, self.probs)}


def all_rankings(m: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(1, m + 1))), dtype=np.int64)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def build_culture(spec: CultureSpec, allow_zero: bool = False) -> Culture:
    """Expand a CultureSpec into the full table of ranking probabilities.

    Explicit tables must list rankings with positive probability; unlisted
    rankings count as zero, which is rejected unless ``allow_zero`` is set
    (the exact and Monte Carlo paths accept non-generic cultures, the
    saddle-point path does not).
    """
    m = spec.m
    if m > MAX_ENUM_M:
        raise InvalidInputError(f"explicit ranking tables are limited to m <= {MAX_ENUM_M}")
    rankings = all_rankings(m)
    index = {tuple(int(c) for c in r): i for i, r in enumerate(rankings)}
    rho = reference = None

    if spec.kind == "impartial":
        probs = np.full(len(rankings), 1.0 / len(rankings))
    elif spec.kind == "mallows":
        rho = float(spec.rho)
        reference = resolve_reference(spec.reference, m)
        dist = np.array([kendall_tau(r, reference) for r in rankings], dtype=float)
        probs = np.exp(-rho * dist) / mallows_normalizer(m, rho)
    else:
        probs = np.zeros(len(rankings))
        exact_total = Fraction(0)
        seen = set()
        for key, value in spec.probs.items():
            r = parse_ranking_key(key, m) if isinstance(key, str) else check_ranking(key, m)
            if r in seen:
                raise InvalidInputError(f"ranking {r} listed twice")
            seen.add(r)
            value = float(value)
            if value < 0.0 or (value == 0.0 and not allow_zero) or not math.isfinite(value):
                raise NonGenericCultureError(f"ranking {r} has non-positive probability {value}")
            probs[index[r]] = value
            exact_total += Fraction(value)
        missing = [tuple(int(c) for c in rankings[i]) for i in np.flatnonzero(probs == 0.0)]
        if missing and not allow_zero:
            raise NonGenericCultureError(
                f"{len(missing)} ranking(s) have zero probability, e.g. {missing[0]}")
        if abs(float(exact_total) - 1.0) > SUM_TOL:
            raise NormalizationError(f"probabilities sum to {float(exact_total)!r}, not 1")

    if abs(math.fsum(probs) - 1.0) > SUM_TOL:
        raise NormalizationError(f"probabilities sum to {math.fsum(probs)!r}, not 1")
    return Culture(spec.kind, m, _frozen(rankings), _frozen(probs), rho, reference, index)


def impartial(m: int) -> Culture:
    return build_culture(CultureSpec("impartial", m))


def mallows(m: int, rho: float, reference="m-last") -> Culture:
    return build_culture(CultureSpec("mallows", m, rho=rho, reference=reference))


def explicit(m: int, probs: Mapping, allow_zero: bool = False) -> Culture:
    return build_culture(CultureSpec("explicit", m, probs=probs), allow_zero=allow_zero)


@dataclass(frozen=True)
class CharPoly:
    """Multilinear characteristic polynomial seen from ``candidate``."""

    m: int
    candidate: int
    adversaries: tuple
    coeffs: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.adversaries)

    def mask(self, subset) -> int:
        pos = {a: k for k, a in enumerate(self.adversaries)}
        try:
            return sum(1 << pos[j] for j in subset)
        except KeyError as exc:
            raise InvalidInputError(f"{exc.args[0]} is not an adversary of {self.candidate}") from None

    def subset(self, mask: int) -> frozenset:
        return frozenset(a for k, a in enumerate(self.adversaries) if mask >> k & 1)

    def coeff(self, subset) -> float:
        return float(self.coeffs[self.mask(subset)])


def char_poly(culture: Culture, candidate: int | None = None) -> CharPoly:
    m = culture.m
    if candidate is None:
        candidate = m
    if not 1 <= candidate <= m:
        raise InvalidInputError(f"candidate {candidate} not in 1..{m}")
    if m - 1 > MAX_POLY_M:
        raise InvalidInputError(f"polynomial representation is limited to m <= {MAX_POLY_M + 1}")
    adversaries = tuple(c for c in range(1, m + 1) if c != candidate)
    r = culture.rankings
    cand_pos = np.argmax(r == candidate, axis=1)
    masks = np.zeros(len(r), dtype=np.int64)
    for k, a in enumerate(adversaries):
        above = np.argmax(r == a, axis=1) < cand_pos
        masks |= above.astype(np.int64) << k
    coeffs = np.bincount(masks, weights=culture.probs, minlength=1 << len(adversaries))
    return CharPoly(m, candidate, adversaries, _frozen(coeffs))


def charpoly_from_coeffs(coeffs, candidate: int | None = None) -> CharPoly:
    """Wrap a raw coefficient vector of length ``2**(m-1)``."""
    coeffs = np.asarray(coeffs, dtype=float).copy()
    d = int(round(math.log2(len(coeffs))))
    if 1 << d != len(coeffs) or d < 1:
        raise InvalidInputError("coefficient vector length must be a power of two >= 2")
    m = d + 1
    candidate = m if candidate is None else candidate
    if np.any(coeffs < 0) or abs(math.fsum(coeffs) - 1.0) > SUM_TOL:
        raise NormalizationError("coefficients must be nonnegative and sum to 1")
    adversaries = tuple(c for c in range(1, m + 1) if c != candidate)
    return CharPoly(m, candidate, adversaries, _frozen(coeffs))


def validate_generic(p: CharPoly) -> None:
    """Raise :class:`NonGenericCultureError` unless every ``p_X`` is positive.

    Positive coefficients on every subset give full rank and aperiodicity,
    hence a unique saddle point for every threshold vector in ``(0, 1)^d``.
    """
    bad = np.flatnonzero(~(np.asarray(p.coeffs) > 0.0))
    if len(bad):
        subset = p.subset(int(bad[0]))
        raise NonGenericCultureError(
            f"coefficient of adversary subset {sorted(subset)} is zero", subset=subset)


# --- sampling -------------------------------------------------------------

def uniforms(seed: int, start: int, count: int, width: int) -> np.ndarray:
    """``(count, width)`` uniforms in [0, 1); row ``i`` depends only on ``(seed, start + i)``.

    Item ``i`` owns Philox counter blocks ``[i*K, (i+1)*K)`` with
    ``K = ceil(width / 4)``, so any partition of the index range yields the
    same numbers.
    """
    blocks = -(-width // 4)
    bitgen = np.random.Philox(key=int(seed) & (2**64 - 1), counter=int(start) * blocks)
    raw = bitgen.random_raw(count * blocks * 4).reshape(count, blocks * 4)[:, :width]
    return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53


def _rim_positions(u: np.ndarray, m: int, rho: float) -> np.ndarray:
    """Repeated insertion: final position of the ``k``-th reference item, per row."""
    n = len(u)
    pos = np.zeros((n, m), dtype=np.int64)
    for i in range(1, m):
        # slot s (0 = top) leaves i - s earlier items below the newcomer
        w = np.exp(-rho * (i - np.arange(i + 1)))
        cdf = np.cumsum(w / w.sum())
        cdf[-1] = 1.0
        slot = np.minimum(np.searchsorted(cdf, u[:, i], side="right"), i)
        pos[:, :i] += pos[:, :i] >= slot[:, None]
        pos[:, i] = slot
    return pos


def sample_rankings(culture: Culture, seed: int, start: int, count: int) -> np.ndarray:
    """Rankings of voters ``start .. start+count-1`` as a ``(count, m)`` array."""
    m = culture.m
    u = uniforms(seed, start, count, m)
    if culture.kind == "mallows":
        pos = _rim_positions(u, m, culture.rho)
        out = np.empty((count, m), dtype=np.int64)
        np.put_along_axis(out, pos, np.asarray(culture.reference, dtype=np.int64)[None, :], axis=1)
        return out
    if culture.kind == "impartial":
        return np.argsort(u, axis=1) + 1
    cdf = np.cumsum(culture.probs)
    idx = np.minimum(np.searchsorted(cdf, u[:, 0] * cdf[-1], side="right"), len(cdf) - 1)
    return culture.rankings[idx]


def sample_profile(culture: Culture, n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise InvalidInputError("a profile needs at least one voter")
    return sample_rankings(culture, seed, 0, n)
