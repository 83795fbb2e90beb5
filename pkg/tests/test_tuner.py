import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abloom import (Autoscaler, CountingFilter, FilterParams, TuneConstraint,
                    digest_many_u64, element_block)
from abloom import analytic_model as am
from abloom.tuner import (TIE_EPS, optimize_decision_threshold,
                          optimize_thresholds, theta_cap)

M, N, K = 10000, 500, 100

# independently derived per-theta optima at the reference point with a
# 0.97 recall floor: (decision threshold, tpr, fpr, acc)
TUNED_TABLE = {
    0: (100, 1.000000, 0.517257, 0.741372),
    1: (98, 0.970632, 0.235795, 0.867418),
    2: (92, 0.980763, 0.117830, 0.931466),
    3: (81, 0.979258, 0.056160, 0.961549),
    4: (65, 0.976835, 0.043130, 0.966853),
    5: (46, 0.981219, 0.073291, 0.953964),
}


def test_tuned_decision_threshold_per_theta():
    constraint = TuneConstraint(0.97)
    for theta, (t, tpr, fpr, acc) in TUNED_TABLE.items():
        res = optimize_decision_threshold(M, N, K, theta, constraint)
        assert res.theta == theta
        assert res.decision_threshold == t
        assert res.predicted.tpr == pytest.approx(tpr, abs=1e-6)
        assert res.predicted.fpr == pytest.approx(fpr, abs=1e-6)
        assert res.predicted.acc == pytest.approx(acc, abs=1e-6)


def test_joint_optimum_at_reference_point():
    res = optimize_thresholds(M, N, K, TuneConstraint(0.97))
    assert (res.theta, res.decision_threshold) == (4, 65)
    assert res.predicted.acc == pytest.approx(0.9668526827627919, abs=1e-12)
    # the unrestricted search can only match or beat the theta<=5 sweep
    restricted = max(acc for (_, _, _, acc) in TUNED_TABLE.values())
    assert res.predicted.acc >= restricted - 1e-6


def test_joint_optimum_matches_theta_capped_sweep():
    res5 = optimize_thresholds(M, N, K, TuneConstraint(0.97), theta_max=5)
    assert (res5.theta, res5.decision_threshold) == (4, 65)


def test_predictions_identical_to_rates():
    res = optimize_decision_threshold(M, N, K, 3, TuneConstraint(0.97))
    est = am.rates(am.ModelPoint(m=M, n=N, k=K, theta=3,
                                 decision_threshold=res.decision_threshold))
    assert res.predicted == est  # bitwise: both sides share the tail code


def test_theta_cap():
    assert theta_cap(M, N, K) == 19
    assert theta_cap(4, 10, 4) == 10          # p=1: capped by n
    assert theta_cap(1000, 1, 3) == 1
    for m, n, k in [(100, 30, 5), (10000, 5000, 100)]:
        assert 0 < theta_cap(m, n, k) <= n


def test_recall_floor_restricts_choice():
    # a tight floor forbids the unconstrained optimum and costs accuracy
    free = optimize_decision_threshold(M, N, K, 2, TuneConstraint(0.0))
    tight = optimize_decision_threshold(M, N, K, 2, TuneConstraint(0.999))
    assert free.decision_threshold == 93
    assert free.predicted.tpr < 0.999
    assert tight.decision_threshold < free.decision_threshold
    assert tight.predicted.tpr >= 0.999
    assert tight.predicted.acc < free.predicted.acc
    # a perfect-recall floor stays satisfiable (T=0 accepts everything)
    exact = optimize_decision_threshold(M, N, K, 2, TuneConstraint(1.0))
    assert exact.predicted.tpr == 1.0


def test_largest_T_wins_accuracy_ties():
    # theta >= n zeroes both populations: every T gives acc 0.5, every T is
    # feasible with a zero floor, so the strictest threshold must win
    res = optimize_decision_threshold(100, 1, 4, 1, TuneConstraint(0.0))
    assert res.decision_threshold == 4
    assert res.predicted.acc == 0.5
    res = optimize_decision_threshold(100, 1, 4, 1, TuneConstraint(0.9))
    assert res.decision_threshold == 0  # only T=0 clears a 0.9 floor


def test_smallest_theta_wins_accuracy_ties():
    # k=m, n=1: every (theta, T) combination is equally uninformative
    res = optimize_thresholds(4, 1, 4, TuneConstraint(0.5))
    assert res.theta == 0
    assert res.decision_threshold == 4
    assert res.predicted.acc == 0.5


def _exhaustive_reference(m, n, k, constraint, theta_max):
    """Brute-force argmax over every (theta, T), same declared tie rules."""
    per_theta = []
    for theta in range(theta_max + 1):
        cands = [am.rates(am.ModelPoint(m=m, n=n, k=k, theta=theta,
                                        decision_threshold=t))
                 for t in range(k + 1)]
        feas = [(t, c) for t, c in enumerate(cands)
                if c.tpr >= constraint.min_tpr]
        best = max(c.acc for _, c in feas)
        t_star, est = max((t, c) for t, c in feas if c.acc >= best - TIE_EPS)
        per_theta.append((theta, t_star, est))
    overall = max(est.acc for _, _, est in per_theta)
    for theta, t_star, est in per_theta:
        if est.acc >= overall - TIE_EPS:
            return theta, t_star, est.acc
    raise AssertionError


@pytest.mark.parametrize("m,n,k,floor", [
    (20, 10, 3, 0.9), (30, 40, 5, 0.5), (8, 3, 8, 0.97),
    (12, 25, 2, 0.0), (50, 7, 7, 1.0), (5, 5, 1, 0.8),
])
def test_tuner_matches_exhaustive_search(m, n, k, floor):
    constraint = TuneConstraint(floor)
    cap = theta_cap(m, n, k)
    res = optimize_thresholds(m, n, k, constraint)
    ref_theta, ref_t, ref_acc = _exhaustive_reference(m, n, k, constraint, cap)
    assert (res.theta, res.decision_threshold) == (ref_theta, ref_t)
    assert res.predicted.acc == ref_acc


@given(m=st.integers(2, 30), n=st.integers(1, 40), data=st.data())
@settings(max_examples=40, deadline=None)
def test_tuner_matches_exhaustive_search_random(m, n, data):
    k = data.draw(st.integers(1, min(m, 8)))
    floor = data.draw(st.sampled_from([0.0, 0.5, 0.9, 0.97, 1.0]))
    constraint = TuneConstraint(floor)
    res = optimize_thresholds(m, n, k, constraint)
    ref = _exhaustive_reference(m, n, k, constraint, theta_cap(m, n, k))
    assert (res.theta, res.decision_threshold, res.predicted.acc) == ref


@given(m=st.integers(2, 50), n=st.integers(1, 60), data=st.data())
@settings(max_examples=40, deadline=None)
def test_tuned_tpr_respects_floor(m, n, data):
    k = data.draw(st.integers(1, min(m, 10)))
    floor = data.draw(st.floats(0.0, 1.0))
    res = optimize_thresholds(m, n, k, TuneConstraint(floor))
    assert res.predicted.tpr >= floor


def test_tuned_never_worse_than_plain_bloom():
    # the joint search always has (theta=0, T=k) available, so its
    # predicted accuracy can never drop below the plain filter's
    for n in (100, 500, 1000, 2500, 5000):
        tuned = optimize_thresholds(M, n, K, TuneConstraint(0.9))
        plain = am.rates(am.ModelPoint(m=M, n=n, k=K, theta=0,
                                       decision_threshold=K))
        assert tuned.predicted.acc >= plain.acc


def test_constraint_validation():
    with pytest.raises(ValueError):
        TuneConstraint(-0.1)
    with pytest.raises(ValueError):
        TuneConstraint(1.5)


def _loaded_filter(n, seed=0):
    params = FilterParams(m=M, k=K, seed=seed)
    filt = CountingFilter(params)
    filt.insert_many(digest_many_u64(element_block(seed, 0, n), params))
    return filt


class TestAutoscaler:
    def test_rejects_empty_filter(self):
        scaler = Autoscaler(TuneConstraint(0.97))
        with pytest.raises(ValueError):
            scaler.view(CountingFilter(FilterParams(m=M, k=K)))

    def test_first_view_tunes_to_reference_thresholds(self):
        scaler = Autoscaler(TuneConstraint(0.97))
        view = scaler.view(_loaded_filter(500))
        assert (view.theta, view.decision_threshold) == (4, 65)
        assert scaler.last_result.predicted.acc == pytest.approx(
            0.9668526827627919, abs=1e-12)

    def test_small_drift_rebinarizes_without_retuning(self):
        scaler = Autoscaler(TuneConstraint(0.97), retune_trigger=0.1)
        filt = _loaded_filter(500)
        scaler.view(filt)
        first = scaler.last_result
        extra = element_block(99, 1 << 40, 20)  # 4% growth: below trigger
        filt.insert_many(digest_many_u64(extra, filt.params))
        view = scaler.view(filt)
        assert scaler.last_result is first  # no retune
        assert view.n_at_snapshot == 520    # but the snapshot is current
        probe = digest_many_u64(extra[:5], filt.params)
        assert view.query_many(probe).all()

    def test_large_drift_triggers_retune(self):
        scaler = Autoscaler(TuneConstraint(0.97), retune_trigger=0.1)
        filt = _loaded_filter(500)
        scaler.view(filt)
        first = scaler.last_result
        filt.insert_many(digest_many_u64(element_block(98, 1 << 40, 100),
                                         filt.params))
        scaler.view(filt)
        assert scaler.last_result is not first
        fresh = optimize_thresholds(M, 600, K, TuneConstraint(0.97))
        assert scaler.last_result.theta == fresh.theta
        assert scaler.last_result.decision_threshold == fresh.decision_threshold

    def test_zero_trigger_retunes_on_any_change(self):
        scaler = Autoscaler(TuneConstraint(0.9), retune_trigger=0.0)
        filt = _loaded_filter(100)
        scaler.view(filt)
        first = scaler.last_result
        scaler.view(filt)
        assert scaler.last_result is first  # unchanged n: still cached
        filt.insert(_probe_digest(filt))
        scaler.view(filt)
        assert scaler.last_result is not first

    def test_params_change_forces_retune(self):
        scaler = Autoscaler(TuneConstraint(0.9))
        scaler.view(_loaded_filter(200, seed=1))
        first = scaler.last_result
        scaler.view(_loaded_filter(200, seed=2))
        assert scaler.last_result is not first

    def test_negative_trigger_rejected(self):
        with pytest.raises(ValueError):
            Autoscaler(TuneConstraint(0.9), retune_trigger=-0.5)


def _probe_digest(filt):
    from abloom import digest
    return digest(b"one-more", filt.params)
