"""Closed-form rate model for thresholded counting Bloom filters.

Under uniform hashing, each insertion of one element touches a given slot
with probability ``k/m``, so after ``n`` insertions a counter is Binomial
(n, k/m).  Everything else follows from that distribution:

* a bit in the binarized view is zero iff its counter is at most ``theta``;
* the expected query dot product for a stored element discounts the slots
  whose counters stayed at or below ``theta``;
* for an absent element each of its ``k`` slots is set independently-enough
  with the marginal bit probability, so the dot product is modeled as
  Binomial(k, p) and the true/false positive rates are its upper tails.

The per-slot means are exact marginals; only the Binomial shape of the dot
product is an approximation (slot correlations are O(1/m)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import gammaln

from ._validate import as_int


def _check_mnk(m: int, n: int, k: int) -> tuple[int, int, int]:
    m = as_int("m", m, minimum=1)
    n = as_int("n", n, minimum=1)
    k = as_int("k", k, minimum=1, maximum=m)
    return m, n, k


def _pmf_prefix(g: int, p: float, upto: int) -> np.ndarray:
    """Binomial(g, p) pmf for outcomes 0..min(upto, g)."""
    hi = min(upto, g)
    s = np.arange(hi + 1)
    if p == 0.0:
        out = np.zeros(hi + 1)
        out[0] = 1.0
        return out
    if p == 1.0:
        out = np.zeros(hi + 1)
        if g <= hi:
            out[g] = 1.0
        return out
    if p < 1e-16:
        # scipy's boost kernel overflows below ~1e-307 and drops digits at
        # extreme p; with the mass this concentrated the log-gamma formula
        # is exact to ulps, so take it for the whole tiny-p range
        logc = gammaln(g + 1) - gammaln(s + 1) - gammaln(g - s + 1)
        return np.exp(logc + s * math.log(p) + (g - s) * math.log1p(-p))
    # scipy's saddle-point pmf keeps the whole distribution normalized to
    # within a few ulps even at g ~ 10^4, where a log-gamma formula drifts
    return stats.binom.pmf(s, g, p)


def binom_pmf(g: int, p: float, s: int) -> float:
    """P[Binomial(g, p) = s]."""
    g = as_int("g", g, minimum=0)
    if not (0.0 <= p <= 1.0):
        raise ValueError("p must lie in [0, 1]")
    s = as_int("s", s)
    if s < 0 or s > g:
        return 0.0
    return float(_pmf_prefix(g, p, g)[s])


def binom_upper_tail(g: int, p: float) -> np.ndarray:
    """Array ``tail`` with ``tail[t] = P[Binomial(g, p) >= t]`` for t = 0..g.

    Accumulated from the large outcomes downward so small tails keep their
    relative precision; ``tail[0]`` is pinned to exactly 1.
    """
    pmf = _pmf_prefix(g, p, g)
    tail = np.cumsum(pmf[::-1])[::-1]
    np.clip(tail, 0.0, 1.0, out=tail)
    tail[0] = 1.0
    return tail


def counter_pmf(m: int, n: int, k: int, v: int) -> float:
    """Probability one counter equals ``v`` after ``n`` insertions."""
    m, n, k = _check_mnk(m, n, k)
    v = as_int("v", v, minimum=0)
    return binom_pmf(n, k / m, v)


def expected_count_histogram(m: int, n: int, k: int, upto: int) -> np.ndarray:
    """Expected number of counters holding each value 0..upto."""
    m, n, k = _check_mnk(m, n, k)
    upto = as_int("upto", upto, minimum=0)
    hist = np.zeros(upto + 1)
    pref = m * _pmf_prefix(n, k / m, upto)
    hist[:pref.shape[0]] = pref
    return hist


def p_empty(m: int, n: int, k: int, mode: str = "distinct") -> float:
    """Probability a given counter stays zero after ``n`` insertions.

    ``distinct`` treats each element's k indices as distinct (what the
    digests actually produce): (1 - k/m)^n.  ``with_replacement`` is the
    classic approximation (1 - 1/m)^(kn); the two agree to O(k^2/m) per
    element.
    """
    m, n, k = _check_mnk(m, n, k)
    if mode == "distinct":
        if k == m:
            return 0.0
        return math.exp(n * math.log1p(-k / m))
    if mode == "with_replacement":
        if m == 1:
            return 0.0
        return math.exp(k * n * math.log1p(-1.0 / m))
    raise ValueError(f"mode must be 'distinct' or 'with_replacement', got {mode!r}")


def p_zero_after_threshold(m: int, n: int, k: int, theta: int) -> tuple[float, float]:
    """(P[bit = 0], P[bit = 1]) in a view binarized at ``theta``."""
    m, n, k = _check_mnk(m, n, k)
    theta = as_int("theta", theta, minimum=0)
    if theta >= n:
        return 1.0, 0.0
    p0 = float(np.sum(_pmf_prefix(n, k / m, theta)))
    p0 = min(max(p0, 0.0), 1.0)
    return p0, 1.0 - p0


def expected_dot_stored(m: int, n: int, k: int, theta: int) -> float:
    """Mean dot product between a stored element's digest and the view bits.

    Exact marginal: of the element's own k slots, the ones lost are those
    whose counters ended at or below theta, and a slot at value v belongs
    to each of the v contributing elements with the same chance, giving
    k - (m/n) * sum_{v<=theta} v * P[counter = v].
    """
    m, n, k = _check_mnk(m, n, k)
    theta = as_int("theta", theta, minimum=0)
    if theta >= n:
        return 0.0
    pref = _pmf_prefix(n, k / m, theta)
    lost = (m / n) * float(np.dot(np.arange(pref.shape[0]), pref))
    return min(max(k - lost, 0.0), float(k))


def expected_dot_absent(m: int, n: int, k: int, theta: int) -> float:
    """Mean dot product for an element that was never inserted."""
    _, p1 = p_zero_after_threshold(m, n, k, theta)
    return k * p1


def per_slot_set_probs(m: int, n: int, k: int, theta: int) -> tuple[float, float]:
    """Per-slot bit probabilities (stored element, absent element)."""
    p_set_stored = expected_dot_stored(m, n, k, theta) / k
    _, p_set_absent = p_zero_after_threshold(m, n, k, theta)
    return min(max(p_set_stored, 0.0), 1.0), p_set_absent


def dot_product_pmfs(m: int, n: int, k: int,
                     theta: int) -> tuple[np.ndarray, np.ndarray]:
    """Model pmfs of the query dot product over 0..k (stored, absent)."""
    px, py = per_slot_set_probs(m, n, k, theta)
    return _pmf_prefix(k, px, k), _pmf_prefix(k, py, k)


@dataclass(frozen=True)
class ModelPoint:
    """One operating point of the model: filter shape plus both thresholds."""

    m: int
    n: int
    k: int
    theta: int
    decision_threshold: int

    def __post_init__(self):
        m, n, k = _check_mnk(self.m, self.n, self.k)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "theta", as_int("theta", self.theta, minimum=0))
        object.__setattr__(self, "decision_threshold", as_int(
            "decision_threshold", self.decision_threshold, minimum=0, maximum=k))


@dataclass(frozen=True)
class RateEstimate:
    """Predicted rates at one operating point.

    ``acc`` is balanced accuracy, (tpr + (1 - fpr)) / 2, i.e. accuracy on a
    query mix of half stored and half absent elements.
    """

    p_touch: float
    p_bit_zero: float
    p_bit_one: float
    mean_dot_stored: float
    mean_dot_absent: float
    p_set_stored: float
    p_set_absent: float
    tpr: float
    fpr: float
    acc: float

    def as_dict(self) -> dict[str, float]:
        return {
            "p_touch": self.p_touch,
            "p_bit_zero": self.p_bit_zero,
            "p_bit_one": self.p_bit_one,
            "mean_dot_stored": self.mean_dot_stored,
            "mean_dot_absent": self.mean_dot_absent,
            "p_set_stored": self.p_set_stored,
            "p_set_absent": self.p_set_absent,
            "tpr": self.tpr,
            "fpr": self.fpr,
            "acc": self.acc,
        }


def rates(point: ModelPoint) -> RateEstimate:
    """Predicted true/false positive rates and balanced accuracy."""
    m, n, k = point.m, point.n, point.k
    theta, t = point.theta, point.decision_threshold
    p0, p1 = p_zero_after_threshold(m, n, k, theta)
    dx = expected_dot_stored(m, n, k, theta)
    dy = expected_dot_absent(m, n, k, theta)
    px, py = per_slot_set_probs(m, n, k, theta)
    tpr = float(binom_upper_tail(k, px)[t])
    fpr = float(binom_upper_tail(k, py)[t])
    return RateEstimate(
        p_touch=k / m,
        p_bit_zero=p0,
        p_bit_one=p1,
        mean_dot_stored=dx,
        mean_dot_absent=dy,
        p_set_stored=px,
        p_set_absent=py,
        tpr=tpr,
        fpr=fpr,
        acc=0.5 * (tpr + (1.0 - fpr)),
    )


def optimal_k(m: int, n: int) -> int:
    """Hash count minimizing a standard filter's false-positive rate.

    Rounds (m/n) ln 2 half-up to the nearest integer, never below 1.
    """
    m = as_int("m", m, minimum=1)
    n = as_int("n", n, minimum=1)
    return max(1, math.floor((m / n) * math.log(2) + 0.5))
