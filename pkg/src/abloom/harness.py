"""Monte Carlo measurement harness and experiment runners.

Two canned experiments mirror how thresholded filters are usually studied:

* :func:`run_threshold_sweep` holds the filter fixed and sweeps the
  binarization threshold, recording measured vs predicted rates and the
  full query dot-product distributions;
* :func:`run_growth_comparison` grows the stored set and compares four
  filters at each size: the threshold-tuned view, a plain Bloom filter with
  the same (oversized) k, one rebuilt with the optimal k for each size, and
  a "retouched" filter that randomly clears a small fraction of set bits.

Element values are synthesized from seeded counters pushed through a
64-bit avalanche (a bijection), so stored and probe sets are guaranteed
disjoint and every run is reproducible from ``base_seed``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analytic_model as model
from ._validate import as_int
from .filter_core import (BinarizedView, CountingFilter, FilterParams,
                          digest_many_u64)
from .kernels import hashspec as hs
from .kernels import numpy_impl
from .tuner import TuneConstraint, optimize_decision_threshold, optimize_thresholds

FILTER_KINDS = ("abf", "nonoptimized_bf", "optimized_bf", "retouched_bf")

CSV_HEADER = ("n,k,filter_kind,theta,T,tpr_emp,fpr_emp,acc_emp,"
              "tpr_ana,fpr_ana,acc_ana,rebuild")

_ABSENT_OFFSET = 1 << 32


def derive_seed(base: int, *parts) -> int:
    """Deterministically derive a 64-bit seed from a base and labels.

    Parts may be ints or strings; each is folded into the state through the
    avalanche mix, so ("a", 1) and ("a1",) land far apart.
    """
    state = hs.fmix64(as_int("base", base, minimum=0))
    for part in parts:
        if isinstance(part, str):
            pv = hs.hash_pair(part.encode("utf-8"), 0)[0]
        else:
            pv = as_int("seed part", part, minimum=0)
        state = hs.fmix64(state ^ pv)
    return state


def element_block(seed: int, offset: int, count: int) -> np.ndarray:
    """``count`` distinct pseudo-random uint64 elements.

    Element ``i`` is ``fmix64(seed + offset + i)``; the mix is a bijection
    on 64-bit words, so blocks of one seed with non-overlapping counter
    ranges (e.g. stored at offset 0, probes at offset 2^32) never collide.
    """
    seed = as_int("seed", seed, minimum=0)
    offset = as_int("offset", offset, minimum=0)
    count = as_int("count", count, minimum=0)
    idx = np.arange(count, dtype=np.uint64)
    base = np.uint64((seed + offset) & hs.MASK64)
    return numpy_impl._fmix64(base + idx)


@dataclass(frozen=True)
class ExperimentConfig:
    """Shared knobs for both experiment runners.

    ``n`` feeds the threshold sweep; ``n_range`` (inclusive stop) feeds the
    growth comparison.  ``min_tpr`` is the recall floor handed to the
    tuner, and ``erase_fraction`` the share of set bits the retouched
    filter clears.
    """

    m: int = 10000
    k: int = 100
    n: int = 500
    n_range: tuple[int, int, int] = (50, 5000, 50)
    theta_max: int = 5
    min_tpr: float = 0.97
    query_count: int = 10000
    trials: int = 10
    base_seed: int = 0xABF15EED
    erase_fraction: float = 0.001

    def __post_init__(self):
        object.__setattr__(self, "m", as_int("m", self.m, minimum=1))
        object.__setattr__(self, "k", as_int("k", self.k, minimum=1, maximum=self.m))
        object.__setattr__(self, "n", as_int("n", self.n, minimum=1))
        start, stop, step = (as_int("n_range value", v, minimum=1)
                             for v in self.n_range)
        if stop < start:
            raise ValueError("n_range stop must be >= start")
        object.__setattr__(self, "n_range", (start, stop, step))
        object.__setattr__(self, "theta_max", as_int("theta_max", self.theta_max,
                                                     minimum=0))
        if not (0.0 <= self.min_tpr <= 1.0):
            raise ValueError("min_tpr must lie in [0, 1]")
        object.__setattr__(self, "query_count", as_int("query_count",
                                                       self.query_count, minimum=1))
        object.__setattr__(self, "trials", as_int("trials", self.trials, minimum=1))
        object.__setattr__(self, "base_seed", as_int(
            "base_seed", self.base_seed, minimum=0, maximum=(1 << 64) - 1))
        if not (0.0 <= self.erase_fraction <= 1.0):
            raise ValueError("erase_fraction must lie in [0, 1]")

    def growth_sizes(self) -> list[int]:
        start, stop, step = self.n_range
        return list(range(start, stop + 1, step))


@dataclass(frozen=True)
class TrialRecord:
    """One aggregated row of experiment output (averaged over trials)."""

    n: int
    k: int
    filter_kind: str
    theta: int
    decision_threshold: int
    tpr_emp: float
    fpr_emp: float
    acc_emp: float
    tpr_ana: float
    fpr_ana: float
    acc_ana: float
    rebuild: bool


@dataclass(frozen=True)
class DotDistribution:
    """Query dot-product distributions at one binarization threshold."""

    theta: int
    decision_threshold: int
    pmf_stored: np.ndarray    # model pmf over dot = 0..k, stored elements
    pmf_absent: np.ndarray
    hist_stored: np.ndarray   # measured counts over dot = 0..k
    hist_absent: np.ndarray


@dataclass(frozen=True)
class SweepResult:
    config: ExperimentConfig
    records: list[TrialRecord]
    distributions: list[DotDistribution]


@dataclass(frozen=True)
class GrowthResult:
    config: ExperimentConfig
    records: list[TrialRecord]

    def rebuild_count(self, filter_kind: str = "optimized_bf") -> int:
        return sum(1 for r in self.records
                   if r.filter_kind == filter_kind and r.rebuild)


def measure_empirical_rates(params: FilterParams, stored: np.ndarray,
                            absent: np.ndarray, theta: int,
                            decision_threshold: int) -> tuple[float, float]:
    """Build a filter over ``stored`` and measure (tpr, fpr) empirically.

    ``stored`` and ``absent`` are uint64 element arrays and must be
    disjoint, else the measured rates would mix the two populations.
    """
    stored = np.ascontiguousarray(stored, dtype=np.uint64)
    absent = np.ascontiguousarray(absent, dtype=np.uint64)
    if stored.size == 0 or absent.size == 0:
        raise ValueError("stored and absent element sets must be non-empty")
    if np.intersect1d(stored, absent).size:
        raise ValueError("stored and absent element sets must be disjoint")
    filt = CountingFilter(params)
    sd = digest_many_u64(stored, params)
    ad = digest_many_u64(absent, params)
    filt.insert_many(sd)
    view = filt.binarize(theta, decision_threshold)
    return _view_rates(view, sd, ad)


def _view_rates(view: BinarizedView, stored_digests: np.ndarray,
                absent_digests: np.ndarray) -> tuple[float, float]:
    tpr = float(view.query_many(stored_digests).mean())
    fpr = float(view.query_many(absent_digests).mean())
    return tpr, fpr


def retouched_view(view: BinarizedView, erase_fraction: float,
                   rng_seed: int) -> BinarizedView:
    """Copy of an untresholded view with a random share of set bits cleared.

    Erasing trades recall for selectivity without touching the counters;
    the erased count rounds half-up from ``erase_fraction * popcount``.
    """
    if view.theta != 0:
        raise ValueError("retouching is defined on theta=0 views")
    if not (0.0 <= erase_fraction <= 1.0):
        raise ValueError("erase_fraction must lie in [0, 1]")
    set_positions = np.flatnonzero(view.bits)
    n_erase = math.floor(erase_fraction * set_positions.size + 0.5)
    bits = view.bits.copy()
    if n_erase:
        rng = np.random.default_rng(rng_seed)
        chosen = rng.choice(set_positions, size=n_erase, replace=False)
        bits[chosen] = 0
    return BinarizedView(view.params, view.theta, view.decision_threshold,
                         bits, view.n_at_snapshot)


def _retouched_rates(m: int, n: int, k: int,
                     erase_fraction: float) -> tuple[float, float, float]:
    """Model of the retouched filter: every set bit survives erasure
    independently with probability (1 - erase_fraction)."""
    px, py = model.per_slot_set_probs(m, n, k, 0)
    keep = 1.0 - erase_fraction
    tpr = float(model.binom_upper_tail(k, px * keep)[k])
    fpr = float(model.binom_upper_tail(k, py * keep)[k])
    return tpr, fpr, 0.5 * (tpr + (1.0 - fpr))


def brute_force_oracle(params: FilterParams, universe: list, stored: list,
                       theta: int, decision_threshold: int) -> tuple[float, float]:
    """Exact reference rates computed with plain Python over a tiny universe.

    Uses the pure-Python hashing/expansion reference and list arithmetic
    end to end, sharing no array code with the filter, so it can arbitrate
    the fast paths.  Elements are bytes, or ints taken as 8 LE bytes.
    Returns (tpr, fpr); fpr is NaN when every universe element is stored.
    """
    if params.m > 64:
        raise ValueError("oracle is for small filters (m <= 64)")
    if len(universe) > 10000:
        raise ValueError("oracle universe capped at 10000 elements")
    if not stored:
        raise ValueError("stored set must be non-empty")
    theta = as_int("theta", theta, minimum=0)
    decision_threshold = as_int("decision_threshold", decision_threshold,
                                minimum=0, maximum=params.k)

    def to_bytes(e) -> bytes:
        if isinstance(e, (bytes, bytearray)):
            return bytes(e)
        return (as_int("element", e, minimum=0) & hs.MASK64).to_bytes(8, "little")

    stored_b = [to_bytes(e) for e in stored]
    universe_b = [to_bytes(e) for e in universe]
    stored_set = set(stored_b)
    if not stored_set.issubset(set(universe_b)):
        raise ValueError("stored must be a subset of universe")

    def indices(data: bytes) -> list[int]:
        h1, h2 = hs.hash_pair(data, params.seed)
        return hs.expand_indices(h1, h2, params.m, params.k)

    counters = [0] * params.m
    for e in stored_b:
        for i in indices(e):
            counters[i] += 1
    bits = [1 if c > theta else 0 for c in counters]

    tp = fp = negatives = 0
    for e in universe_b:
        dot = sum(bits[i] for i in indices(e))
        accept = dot >= decision_threshold
        if e in stored_set:
            tp += accept
        else:
            negatives += 1
            fp += accept
    tpr = tp / len(stored_b)
    fpr = fp / negatives if negatives else float("nan")
    return tpr, fpr


def run_threshold_sweep(config: ExperimentConfig) -> SweepResult:
    """Sweep theta at fixed load, tuning the decision threshold per theta."""
    m, k, n = config.m, config.k, config.n
    constraint = TuneConstraint(config.min_tpr)
    thetas = list(range(config.theta_max + 1))
    tuned = {theta: optimize_decision_threshold(m, n, k, theta, constraint)
             for theta in thetas}

    tpr_sum = {theta: 0.0 for theta in thetas}
    fpr_sum = {theta: 0.0 for theta in thetas}
    hist_stored = {theta: np.zeros(k + 1, dtype=np.int64) for theta in thetas}
    hist_absent = {theta: np.zeros(k + 1, dtype=np.int64) for theta in thetas}

    for trial in range(config.trials):
        elem_seed = derive_seed(config.base_seed, "sweep-elements", trial)
        stored = element_block(elem_seed, 0, n)
        absent = element_block(elem_seed, _ABSENT_OFFSET, config.query_count)
        params = FilterParams(m, k, seed=derive_seed(config.base_seed,
                                                     "sweep-hash", trial))
        sd = digest_many_u64(stored, params)
        ad = digest_many_u64(absent, params)
        filt = CountingFilter(params)
        filt.insert_many(sd)
        for theta in thetas:
            view = filt.binarize(theta, tuned[theta].decision_threshold)
            dots_stored = view.dot_many(sd)
            dots_absent = view.dot_many(ad)
            t = tuned[theta].decision_threshold
            tpr_sum[theta] += float((dots_stored >= t).mean())
            fpr_sum[theta] += float((dots_absent >= t).mean())
            hist_stored[theta] += np.bincount(dots_stored, minlength=k + 1)
            hist_absent[theta] += np.bincount(dots_absent, minlength=k + 1)

    records = []
    distributions = []
    for theta in thetas:
        res = tuned[theta]
        tpr = tpr_sum[theta] / config.trials
        fpr = fpr_sum[theta] / config.trials
        records.append(TrialRecord(
            n=n, k=k, filter_kind="abf", theta=theta,
            decision_threshold=res.decision_threshold,
            tpr_emp=tpr, fpr_emp=fpr, acc_emp=0.5 * (tpr + (1.0 - fpr)),
            tpr_ana=res.predicted.tpr, fpr_ana=res.predicted.fpr,
            acc_ana=res.predicted.acc, rebuild=False))
        pmf_stored, pmf_absent = model.dot_product_pmfs(m, n, k, theta)
        distributions.append(DotDistribution(
            theta=theta, decision_threshold=res.decision_threshold,
            pmf_stored=pmf_stored, pmf_absent=pmf_absent,
            hist_stored=hist_stored[theta], hist_absent=hist_absent[theta]))
    return SweepResult(config=config, records=records,
                       distributions=distributions)


def run_growth_comparison(config: ExperimentConfig) -> GrowthResult:
    """Compare four filter variants as the stored set grows.

    The tuned view and the plain/retouched filters share one counting
    filter with fixed ``k``; the optimized variant is rebuilt (fresh k and
    hash family) whenever the optimal k for the current size changes, and
    its rows carry ``rebuild=True`` at those sizes.
    """
    m, k = config.m, config.k
    constraint = TuneConstraint(config.min_tpr)
    records = []
    prev_kopt = None

    for n in config.growth_sizes():
        tuned = optimize_thresholds(m, n, k, constraint)
        kopt = model.optimal_k(m, n)
        rebuild = kopt != prev_kopt
        prev_kopt = kopt

        sums = {kind: [0.0, 0.0] for kind in FILTER_KINDS}
        for trial in range(config.trials):
            elem_seed = derive_seed(config.base_seed, "growth-elements", n, trial)
            stored = element_block(elem_seed, 0, n)
            absent = element_block(elem_seed, _ABSENT_OFFSET, config.query_count)

            p_fix = FilterParams(m, k, seed=derive_seed(
                config.base_seed, "growth-hash", n, trial))
            p_opt = FilterParams(m, kopt, seed=derive_seed(
                config.base_seed, "growth-hash-opt", n, trial))
            sd_fix = digest_many_u64(stored, p_fix)
            ad_fix = digest_many_u64(absent, p_fix)
            sd_opt = digest_many_u64(stored, p_opt)
            ad_opt = digest_many_u64(absent, p_opt)

            f_fix = CountingFilter(p_fix)
            f_fix.insert_many(sd_fix)
            f_opt = CountingFilter(p_opt)
            f_opt.insert_many(sd_opt)

            plain = f_fix.binarize(0, k)
            cases = {
                "abf": (f_fix.binarize(tuned.theta, tuned.decision_threshold),
                        sd_fix, ad_fix),
                "nonoptimized_bf": (plain, sd_fix, ad_fix),
                "retouched_bf": (retouched_view(
                    plain, config.erase_fraction,
                    derive_seed(config.base_seed, "growth-erase", n, trial)),
                    sd_fix, ad_fix),
                "optimized_bf": (f_opt.binarize(0, kopt), sd_opt, ad_opt),
            }
            for kind, (view, sd, ad) in cases.items():
                tpr, fpr = _view_rates(view, sd, ad)
                sums[kind][0] += tpr
                sums[kind][1] += fpr

        ana = {
            "abf": (tuned.predicted.tpr, tuned.predicted.fpr, tuned.predicted.acc),
            "nonoptimized_bf": _point_rates(m, n, k, 0, k),
            "optimized_bf": _point_rates(m, n, kopt, 0, kopt),
            "retouched_bf": _retouched_rates(m, n, k, config.erase_fraction),
        }
        meta = {
            "abf": (k, tuned.theta, tuned.decision_threshold, False),
            "nonoptimized_bf": (k, 0, k, False),
            "optimized_bf": (kopt, 0, kopt, rebuild),
            "retouched_bf": (k, 0, k, False),
        }
        for kind in FILTER_KINDS:
            tpr = sums[kind][0] / config.trials
            fpr = sums[kind][1] / config.trials
            kk, theta, t, reb = meta[kind]
            ta, fa, aa = ana[kind]
            records.append(TrialRecord(
                n=n, k=kk, filter_kind=kind, theta=theta,
                decision_threshold=t,
                tpr_emp=tpr, fpr_emp=fpr, acc_emp=0.5 * (tpr + (1.0 - fpr)),
                tpr_ana=ta, fpr_ana=fa, acc_ana=aa, rebuild=reb))

    records.sort(key=lambda r: (r.n, r.filter_kind, r.theta))
    return GrowthResult(config=config, records=records)


def _point_rates(m: int, n: int, k: int, theta: int,
                 t: int) -> tuple[float, float, float]:
    est = model.rates(model.ModelPoint(m=m, n=n, k=k, theta=theta,
                                       decision_threshold=t))
    return est.tpr, est.fpr, est.acc


def write_records_csv(records: list[TrialRecord], path) -> None:
    """Write records in the fixed CSV layout (sorted, %.6g floats)."""
    rows = sorted(records, key=lambda r: (r.n, r.filter_kind, r.theta,
                                          r.decision_threshold))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in rows:
            fh.write(f"{r.n},{r.k},{r.filter_kind},{r.theta},"
                     f"{r.decision_threshold},{r.tpr_emp:.6g},{r.fpr_emp:.6g},"
                     f"{r.acc_emp:.6g},{r.tpr_ana:.6g},{r.fpr_ana:.6g},"
                     f"{r.acc_ana:.6g},{int(r.rebuild)}\n")
