"""Threshold selection: maximize predicted accuracy under a recall floor.

For a fixed binarization threshold ``theta`` the decision threshold sweep
is vectorized over all T = 0..k using the same upper-tail arrays the rate
model uses, so tuned predictions match :func:`abloom.analytic_model.rates`
bit for bit.  Ties are resolved deterministically:

* among decision thresholds within ``TIE_EPS`` of the best feasible
  accuracy, the largest T wins (strictest decision rule);
* among binarization thresholds within ``TIE_EPS`` of the overall best,
  the smallest theta wins (least information discarded).

T = 0 accepts everything (TPR = 1), so the recall floor is always
satisfiable and the search never comes back empty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analytic_model as model
from ._validate import as_int
from .filter_core import BinarizedView, CountingFilter

TIE_EPS = 1e-12


@dataclass(frozen=True)
class TuneConstraint:
    """Floor on the predicted true-positive rate."""

    min_tpr: float = 0.97

    def __post_init__(self):
        if not (0.0 <= self.min_tpr <= 1.0):
            raise ValueError(f"min_tpr must lie in [0, 1], got {self.min_tpr!r}")


@dataclass(frozen=True)
class TuneResult:
    """Chosen thresholds plus the rates the model predicts for them."""

    theta: int
    decision_threshold: int
    predicted: model.RateEstimate


def _acc_curve(m: int, n: int, k: int, theta: int) -> tuple[np.ndarray, np.ndarray]:
    """(tpr, acc) arrays indexed by decision threshold T = 0..k."""
    px, py = model.per_slot_set_probs(m, n, k, theta)
    tail_x = model.binom_upper_tail(k, px)
    tail_y = model.binom_upper_tail(k, py)
    return tail_x, 0.5 * (tail_x + (1.0 - tail_y))


def optimize_decision_threshold(m: int, n: int, k: int, theta: int,
                                constraint: TuneConstraint) -> TuneResult:
    """Best decision threshold at a fixed binarization threshold."""
    theta = as_int("theta", theta, minimum=0)
    tpr, acc = _acc_curve(m, n, k, theta)
    feasible = tpr >= constraint.min_tpr
    best_acc = float(acc[feasible].max())
    in_band = feasible & (acc >= best_acc - TIE_EPS)
    t = int(np.nonzero(in_band)[0].max())
    predicted = model.rates(model.ModelPoint(m=m, n=n, k=k, theta=theta,
                                             decision_threshold=t))
    return TuneResult(theta=theta, decision_threshold=t, predicted=predicted)


def theta_cap(m: int, n: int, k: int) -> int:
    """Largest binarization threshold worth searching.

    Counters are Binomial(n, k/m); six standard deviations above the mean
    the remaining probability mass (and hence any further accuracy change)
    is negligible.
    """
    m = as_int("m", m, minimum=1)
    n = as_int("n", n, minimum=1)
    k = as_int("k", k, minimum=1, maximum=m)
    p = k / m
    spread = math.ceil(n * p + 6.0 * math.sqrt(n * p * (1.0 - p)))
    return min(n, spread)


def optimize_thresholds(m: int, n: int, k: int, constraint: TuneConstraint,
                        theta_max: int | None = None) -> TuneResult:
    """Joint search over both thresholds.

    ``theta_max`` bounds the binarization sweep explicitly; when omitted
    the search stops at :func:`theta_cap`.
    """
    if theta_max is None:
        theta_max = theta_cap(m, n, k)
    else:
        theta_max = as_int("theta_max", theta_max, minimum=0)
    results = [optimize_decision_threshold(m, n, k, theta, constraint)
               for theta in range(theta_max + 1)]
    best_acc = max(r.predicted.acc for r in results)
    for r in results:
        if r.predicted.acc >= best_acc - TIE_EPS:
            return r
    raise AssertionError("threshold sweep produced no candidate")


class Autoscaler:
    """Keeps a filter's view tuned as its load changes.

    Re-binarizing is cheap and happens on every ``view`` call so the bits
    always reflect current counters; the threshold search is more costly
    and reruns only when the stored count has drifted more than
    ``retune_trigger`` (a fraction) from the count last tuned for.
    """

    def __init__(self, constraint: TuneConstraint, retune_trigger: float = 0.1):
        if retune_trigger < 0.0:
            raise ValueError("retune_trigger must be non-negative")
        self.constraint = constraint
        self.retune_trigger = retune_trigger
        self._tuned_for: tuple | None = None  # (params, n)
        self._result: TuneResult | None = None

    @property
    def last_result(self) -> TuneResult | None:
        """Result of the most recent threshold search, if any."""
        return self._result

    def _needs_retune(self, params, n: int) -> bool:
        if self._tuned_for is None or self._tuned_for[0] != params:
            return True
        n_tuned = self._tuned_for[1]
        return abs(n - n_tuned) > self.retune_trigger * n_tuned

    def view(self, filt: CountingFilter) -> BinarizedView:
        """Current snapshot of ``filt`` under (re)tuned thresholds."""
        n = filt.n_stored
        if n < 1:
            raise ValueError("cannot tune thresholds for an empty filter")
        if self._needs_retune(filt.params, n):
            self._result = optimize_thresholds(filt.params.m, n, filt.params.k,
                                               self.constraint)
            self._tuned_for = (filt.params, n)
        return filt.binarize(self._result.theta, self._result.decision_threshold)
