"""Saddle-point asymptotics for alpha-winner probabilities.

A term ``(sign, X, Y)`` stands for ``sign * P(candidate beats every j in X
and does not beat any j in Y)``.  ``reduce_terms`` rewrites the full event
with the complement rule until no term has a supercritical saddle
coordinate, after which each term has a closed-form leading estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .culture import CharPoly, Culture, char_poly, validate_generic
from .errors import InvalidInputError, UnsupportedConfigurationError
from .orthant import OrthantRequest, PolyWeight, orthant_integral, orthant_weighted_integral
from .polyalg import XYPoly, cumulant_eval, transform_xy
from .saddle import CRIT, EPS_C, SUB, SUPER, SaddleResult, Thresholds, solve_saddle

LOG_2PI = math.log(2 * math.pi)
SNAP_TOL = 1e-9
RATE_TOL = 1e-9


def snap(v: float) -> float:
    """Treat values within ``SNAP_TOL`` of an integer as that integer."""
    r = round(v)
    return float(r) if abs(v - r) <= SNAP_TOL else v


def win_bound(beta: float, n: int, weak: bool) -> int:
    """Largest number of voters that may rank an adversary above the candidate."""
    v = snap(beta * n)
    return math.floor(v) if weak else math.ceil(v) - 1


def loss_bound(alpha: float, n: int, weak: bool) -> int:
    """Largest number of voters ranking the candidate above an adversary it does not beat."""
    v = snap(alpha * n)
    return math.ceil(v) - 1 if weak else math.floor(v)


@dataclass(frozen=True)
class TermSpec:
    sign: int
    x_set: frozenset
    y_set: frozenset
    poly: XYPoly
    saddle: SaddleResult
    target: np.ndarray = field(repr=False)
    log_orthant: float = 0.0
    orthant_error: float = 0.0

    @property
    def is_constant(self) -> bool:
        return not self.x_set and not self.y_set

    @property
    def subcritical(self) -> np.ndarray:
        """Indices of non-critical variables (subcritical X and all of Y)."""
        return np.array([k for k, c in enumerate(self.saddle.classes) if c != CRIT], dtype=int)

    @property
    def critical(self) -> np.ndarray:
        return np.array([k for k, c in enumerate(self.saddle.classes) if c == CRIT], dtype=int)

    @property
    def rate(self) -> float:
        """Exponential decay rate per voter of the term."""
        s = self.saddle
        return float(s.k_value - self.target @ s.tau) if s.tau.size else 0.0

    @property
    def label(self) -> str:
        fx = ",".join(map(str, sorted(self.x_set)))
        fy = ",".join(map(str, sorted(self.y_set)))
        return f"{'+' if self.sign > 0 else '-'}({{{fx}}};{{{fy}}})"


@dataclass(frozen=True)
class Estimate:
    log_value: float
    factors: dict
    parity_key: np.ndarray
    value: float | None = None

    def __post_init__(self):
        if self.value is None and abs(self.log_value) < 700:
            object.__setattr__(self, "value", math.exp(self.log_value))


@dataclass(frozen=True)
class TermResult:
    term: TermSpec
    estimate: Estimate
    dominant: bool


@dataclass(frozen=True)
class WinnerEstimate:
    """Signed combination of term estimates for one value of ``n``."""

    n: int
    terms: tuple
    probability: float
    complement: float
    log_probability: float
    log_complement: float
    primary: str

    @property
    def log_value(self) -> float:
        return self.log_complement if self.primary == "complement" else self.log_probability

    @property
    def value(self) -> float:
        return self.complement if self.primary == "complement" else self.probability

    @property
    def dominant_terms(self) -> tuple:
        return tuple(t.term.label for t in self.terms if t.dominant)


def _targets(poly: XYPoly, th: Thresholds) -> np.ndarray:
    return np.array(
        [th.beta[pos] if kind == "x" else th.alpha[pos] for kind, pos in zip(poly.kinds, poly.positions)]
    )


def _term_key(x_set, y_set, parent: CharPoly):
    mask = lambda s: sum(1 << parent.adversaries.index(j) for j in s)  # noqa: E731
    return (len(x_set), mask(x_set), len(y_set), mask(y_set))


def _finalize(sign, x_set, y_set, poly, sad, target) -> TermSpec:
    crit = [k for k, c in enumerate(sad.classes) if c == CRIT]
    log_orth, err = 0.0, 0.0
    if crit:
        Hinv = np.linalg.inv(sad.hessian)
        M = Hinv[np.ix_(crit, crit)]
        val, err = orthant_integral(OrthantRequest(M))
        log_orth = math.log(val)
        err = err / val
    return TermSpec(sign, x_set, y_set, poly, sad, target, log_orth, err)


def term_saddle(p: CharPoly, th: Thresholds, x_set, y_set, start=None, eps_c: float = EPS_C):
    poly = transform_xy(p, x_set, y_set)
    target = _targets(poly, th)
    return poly, target, solve_saddle(poly, target, start=start, eps_c=eps_c)


def reduce_terms(p: CharPoly, th: Thresholds, eps_c: float = EPS_C) -> list:
    """Signed terms whose saddle points have no supercritical coordinate."""
    validate_generic(p)
    if th.dim != p.dim:
        raise InvalidInputError(f"threshold vector has {th.dim} entries, expected {p.dim}")
    full = frozenset(p.adversaries)
    poly, target, sad = term_saddle(p, th, full, (), eps_c=eps_c)
    pending = [(1, full, frozenset(), poly, target, sad)]
    done: dict = {}
    while pending:
        sign, xs, ys, poly, target, sad = pending.pop()
        sup = [k for k, c in enumerate(sad.classes) if c == SUPER and poly.kinds[k] == "x"]
        if not sup:
            bad = [poly.variables[k] for k, c in enumerate(sad.classes) if poly.kinds[k] == "y" and c != SUB]
            if bad:
                raise UnsupportedConfigurationError(
                    f"loss constraints on {bad} have a saddle coordinate that is not subcritical"
                )
            key = (xs, ys)
            if key in done:
                prev = done[key]
                done[key] = (prev[0] + sign,) + prev[1:]
            else:
                done[key] = (sign, poly, target, sad)
            continue
        k = max(sup, key=lambda i: sad.zeta[i])
        j = poly.variables[k]
        # shrink: drop the constraint on j
        xs2 = xs - {j}
        poly2, target2, sad2 = term_saddle(p, th, xs2, ys, eps_c=eps_c)
        pending.append((sign, xs2, ys, poly2, target2, sad2))
        # flip: the saddle of the flipped term inverts coordinate j
        ys3 = ys | {j}
        poly3 = transform_xy(p, xs2, ys3)
        start = {v: t for v, t in zip(poly.variables, sad.tau)}
        start[j] = -start[j]
        t0 = np.array([start[v] for v in poly3.variables])
        target3 = _targets(poly3, th)
        sad3 = solve_saddle(poly3, target3, start=t0, eps_c=eps_c)
        pending.append((-sign, xs2, ys3, poly3, target3, sad3))
    terms = []
    for (xs, ys), (sign, poly, target, sad) in done.items():
        if sign != 0:
            terms.append(_finalize(sign, xs, ys, poly, sad, target))
    terms.sort(key=lambda t: _term_key(t.x_set, t.y_set, p))
    return terms


def _bounds(term: TermSpec, th: Thresholds, n: int) -> tuple[np.ndarray, np.ndarray]:
    kap = np.array(
        [
            win_bound(th.beta[pos], n, th.weak) if kind == "x" else loss_bound(th.alpha[pos], n, th.weak)
            for kind, pos in zip(term.poly.kinds, term.poly.positions)
        ],
        dtype=float,
    )
    return kap, kap - term.target * n


def term_estimate(term: TermSpec, th: Thresholds, n: int) -> Estimate:
    """Leading-order estimate of ``|term|`` at ``n`` voters (natural log scale)."""
    if n < 1:
        raise InvalidInputError("n must be positive")
    if term.is_constant:
        return Estimate(0.0, {"constant": 0.0}, np.zeros(0))
    sad = term.saddle
    kap, parity = _bounds(term, th, n)
    nc = term.subcritical
    d = sad.tau.size
    exp_n = n * sad.k_value
    exp_coord = -float(kap[nc] @ sad.tau[nc]) if nc.size else 0.0
    geom = -float(np.sum(np.log1p(-sad.zeta[nc]))) if nc.size else 0.0
    _, logdet = np.linalg.slogdet(sad.hessian)
    pref = -0.5 * (d * LOG_2PI + nc.size * math.log(n) + logdet)
    factors = {
        "n_log_P": exp_n,
        "coordinate_exponents": exp_coord,
        "geometric": geom,
        "prefactor": pref,
        "orthant": term.log_orthant,
    }
    return Estimate(sum(factors.values()), factors, parity)


def signed_logsumexp(items) -> tuple[int, float]:
    """Sum ``sign * exp(logv)`` pairs; returns ``(sign, log|sum|)``."""
    items = [(s, v) for s, v in items if s != 0 and v > -math.inf]
    if not items:
        return 0, -math.inf
    top = max(v for _, v in items)
    total = math.fsum(s * math.exp(v - top) for s, v in items)
    if total == 0.0:
        return 0, -math.inf
    return (1 if total > 0 else -1), top + math.log(abs(total))


def combine_terms(terms, th: Thresholds, n: int, dominant_only: bool = False) -> WinnerEstimate:
    """Evaluate every term at ``n`` and add them with their signs."""
    const = [t for t in terms if t.is_constant]
    rest = [t for t in terms if not t.is_constant]
    top = max((t.rate for t in rest), default=0.0)
    results = []
    for t in terms:
        dom = (not t.is_constant) and t.rate >= top - RATE_TOL
        results.append(TermResult(t, term_estimate(t, th, n), dom))
    picked = [r for r in results if not r.term.is_constant and (r.dominant or not dominant_only)]
    s_sign, s_log = signed_logsumexp([(r.term.sign, r.estimate.log_value) for r in picked])
    if const:
        c = sum(t.sign for t in const)
        # complement of the event: 1 - P = -(sum of the non-constant terms)
        comp_sign, comp_log = -s_sign, s_log
        comp = comp_sign * math.exp(comp_log) if comp_log < 700 else comp_sign * math.inf
        prob = c - comp
        log_prob = math.log(prob) if prob > 0 else -math.inf
        if comp_sign <= 0:
            log_comp = -math.inf
        else:
            log_comp = comp_log
        primary = "complement" if 0 < comp < 0.5 else "probability"
    else:
        prob = s_sign * math.exp(s_log) if s_log < 700 else math.inf
        log_prob = s_log if s_sign > 0 else -math.inf
        comp = 1.0 - prob
        log_comp = math.log(comp) if comp > 0 else -math.inf
        primary = "probability"
    return WinnerEstimate(n, tuple(results), prob, comp, log_prob, log_comp, primary)


def _as_poly(culture, candidate) -> CharPoly:
    if isinstance(culture, CharPoly):
        return culture
    if isinstance(culture, Culture):
        return char_poly(culture, candidate)
    raise InvalidInputError("expected a Culture or CharPoly")


def estimate_alpha_winner(
    culture,
    candidate: int | None,
    th: Thresholds,
    n: int,
    dominant_only: bool = False,
    eps_c: float = EPS_C,
) -> WinnerEstimate:
    p = _as_poly(culture, candidate)
    return combine_terms(reduce_terms(p, th, eps_c), th, n, dominant_only)


def limit_probability(culture, candidate: int | None, th: Thresholds, eps_c: float = EPS_C) -> float:
    """Limit of the winning probability as ``n -> infinity``.

    Non-zero only when every saddle coordinate is critical (the limit is then
    the normalized orthant integral); the terms with subcritical coordinates
    decay exponentially or like a power of ``n``.
    """
    p = _as_poly(culture, candidate)
    total = 0.0
    for t in reduce_terms(p, th, eps_c):
        if t.is_constant:
            total += t.sign
        elif t.subcritical.size == 0:
            _, logdet = np.linalg.slogdet(t.saddle.hessian)
            if abs(t.saddle.k_value) < 1e-12:
                d = t.saddle.tau.size
                total += t.sign * math.exp(t.log_orthant - 0.5 * (d * LOG_2PI + logdet))
    return total


@dataclass(frozen=True)
class Expansion:
    a0: float
    a1: float
    a1_error: float
    log_scale: float
    n: int

    @property
    def value(self) -> float:
        return math.exp(self.log_scale) * (self.a0 + self.a1 / math.sqrt(self.n))


_EXPANSION_CACHE: dict = {}


def expansion_coeffs(p: CharPoly, th: Thresholds, n_parity_key, eps_c: float = EPS_C, qmc_points: int | None = None):
    """``(a0, a1, a1_error)`` of the expansion ``a0 + a1 / sqrt(n) + O(1/n)``.

    The expansion is relative to ``P(zeta)^n prod_S zeta_j^(-kappa_j) n^(-|S|/2)``.
    ``n_parity_key`` is ``kappa - beta * n`` for each adversary.
    """
    delta = np.asarray(n_parity_key, dtype=float)
    key = (p.coeffs.tobytes(), th.alpha.tobytes(), th.weak, np.round(delta, 9).tobytes(), eps_c, qmc_points)
    if key not in _EXPANSION_CACHE:
        _EXPANSION_CACHE[key] = _expansion_coeffs(p, th, delta, eps_c, qmc_points)
    return _EXPANSION_CACHE[key]


def _expansion_coeffs(p, th, delta, eps_c, qmc_points):
    validate_generic(p)
    poly, target, sad = term_saddle(p, th, p.adversaries, (), eps_c=eps_c)
    if any(c == SUPER for c in sad.classes):
        raise UnsupportedConfigurationError("expansion coefficients need a saddle point without supercritical coordinates")
    d = sad.tau.size
    if delta.shape != (d,):
        raise InvalidInputError(f"parity key must have {d} entries")
    zeta = sad.zeta
    S = [k for k, c in enumerate(sad.classes) if c == SUB]
    C = [k for k, c in enumerate(sad.classes) if c == CRIT]
    H = sad.hessian
    Hinv = np.linalg.inv(H)
    _, logdet = np.linalg.slogdet(H)
    lead = -float(np.sum(np.log1p(-zeta[S]))) - 0.5 * (d * LOG_2PI + logdet)
    if not C:
        return math.exp(lead), 0.0, 0.0
    M = Hinv[np.ix_(C, C)]
    orth, _ = orthant_integral(OrthantRequest(M))
    a0 = math.exp(lead) * orth

    k3 = cumulant_eval(poly, sad.tau, want_third=True).third
    k3[np.abs(k3) < 1e-14] = 0.0  # rounding noise of symmetric cultures
    G = Hinv[:, C]
    crit = np.array(sad.classes) == CRIT
    b = np.where(crit, -0.5, zeta / np.where(crit, 1.0, 1.0 - zeta))
    contr = np.einsum("jkl,kl->j", k3, Hinv)
    linear = G.T @ (0.5 * contr - (b - delta))
    cubic = -np.einsum("ijk,ia,jb,kc->abc", k3, G, G, G) / 6.0
    if not np.any(linear) and not np.any(cubic):
        return a0, 0.0, 0.0
    weight = PolyWeight(0.0, linear, None, cubic if np.any(cubic) else None)
    kw = {} if qmc_points is None else {"qmc_points": qmc_points}
    val, err = orthant_weighted_integral(OrthantRequest(M, weight, rel_tol=1e-5, **kw))
    scale = math.exp(lead)
    return a0, scale * val, scale * err


def expansion_estimate(culture, candidate, th: Thresholds, n: int, eps_c: float = EPS_C) -> Expansion:
    """Two-term expansion of the winning probability at ``n`` voters."""
    p = _as_poly(culture, candidate)
    kap = np.array([win_bound(b, n, th.weak) for b in th.beta], dtype=float)
    a0, a1, err = expansion_coeffs(p, th, kap - th.beta * n, eps_c)
    _, _, sad = term_saddle(p, th, p.adversaries, (), eps_c=eps_c)
    S = [k for k, c in enumerate(sad.classes) if c == SUB]
    log_scale = n * sad.k_value - float(kap[S] @ sad.tau[S]) - 0.5 * len(S) * math.log(n)
    return Expansion(a0, a1, err, log_scale, n)
