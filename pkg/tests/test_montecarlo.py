import math

import pytest

from seqgap.model import ModelParams
from seqgap.montecarlo import (
    ExperimentSpec,
    GapRuleSpec,
    GiRuleSpec,
    MaxGapRuleSpec,
    TrialResult,
    default_horizon_cap,
    derive_trial_seed,
    matched_sprt_config,
    ratio_sweep,
    rho_sweep,
    run_experiment,
    run_experiment_with_trials,
    run_trial,
    sprt_benchmark,
    summarize,
    theoretical_asymptote,
)
from seqgap.sprt import asn_asymptotic


def gap_spec(alpha=0.01, beta=None, rho=0.5, reps=200, seed=1234, K=4, m=2, **kwargs):
    return ExperimentSpec(
        params=ModelParams(K=K, rho=rho, mu=1.0, signal_set=frozenset(range(1, m + 1))),
        rule=GapRuleSpec(m=m),
        alpha=alpha,
        beta=alpha if beta is None else beta,
        replications=reps,
        master_seed=seed,
        **kwargs,
    )


# ------------------------------------------------------------- trial seeds


def test_seed_matches_published_mix_vector():
    # state 0 advanced once and finalized, from the SplitMix64 reference tests
    assert derive_trial_seed(0, 1) == 0xE220A8397B1DCDAF
    assert derive_trial_seed(0, 0) == 0


def test_seed_rejects_negative_index():
    with pytest.raises(ValueError, match="trial_index"):
        derive_trial_seed(0, -1)


def test_seed_injective_over_many_trials():
    seeds = {derive_trial_seed(987654321, i) for i in range(10**6)}
    assert len(seeds) == 10**6


def test_seed_streams_disjoint_across_masters():
    a = {derive_trial_seed(2**40, i) for i in range(10**4)}
    b = {derive_trial_seed(2**40 + 1, i) for i in range(10**4)}
    assert not a & b


# -------------------------------------------------------- spec validation


def test_spec_rejects_signal_count_mismatch():
    with pytest.raises(ValueError, match="m=2 signals"):
        ExperimentSpec(
            params=ModelParams(K=4, rho=0.0, mu=1.0, signal_set=frozenset({1})),
            rule=GapRuleSpec(m=2), alpha=0.01, beta=0.01,
            replications=10, master_seed=0,
        )
    with pytest.raises(ValueError, match="l < .signals. < u"):
        ExperimentSpec(
            params=ModelParams(K=5, rho=0.0, mu=1.0, signal_set=frozenset({1})),
            rule=MaxGapRuleSpec(l=1, u=3), alpha=0.01, beta=0.01,
            replications=10, master_seed=0,
        )


def test_spec_gates_correlated_gi():
    kwargs = dict(
        params=ModelParams(K=5, rho=0.5, mu=1.0, signal_set=frozenset({1, 2})),
        alpha=0.01, beta=0.01, replications=10, master_seed=0,
    )
    with pytest.raises(ValueError, match="independent streams"):
        ExperimentSpec(rule=GiRuleSpec(l=1, u=3), **kwargs)
    spec = ExperimentSpec(rule=GiRuleSpec(l=1, u=3, experimental_correlated=True), **kwargs)
    assert spec.rule.experimental_correlated


@pytest.mark.parametrize(
    "kwargs, fragment",
    [
        (dict(reps=0), "replications"),
        (dict(seed=-1), "master_seed"),
        (dict(seed=2**64), "master_seed"),
        (dict(horizon_cap=0), "horizon_cap"),
    ],
)
def test_spec_bounds(kwargs, fragment):
    with pytest.raises(ValueError, match=fragment):
        gap_spec(**kwargs)


# ------------------------------------------------------------- asymptotes


def test_theoretical_asymptote_frozen_values():
    assert theoretical_asymptote(gap_spec(alpha=1e-2)) == pytest.approx(2.302585, abs=1e-6)
    assert theoretical_asymptote(gap_spec(alpha=1e-8)) == pytest.approx(9.210340, abs=1e-6)
    maxgap = ExperimentSpec(
        params=ModelParams(K=5, rho=0.5, mu=1.0, signal_set=frozenset({1, 2})),
        rule=MaxGapRuleSpec(l=1, u=3), alpha=1e-2, beta=1e-2,
        replications=10, master_seed=0,
    )
    assert theoretical_asymptote(maxgap) == pytest.approx(2 * 2.302585, abs=2e-6)


def test_asymptote_uses_smaller_level():
    assert theoretical_asymptote(gap_spec(alpha=1e-4, beta=1e-2)) == theoretical_asymptote(
        gap_spec(alpha=1e-4)
    )


def test_gap_asymptote_at_rho_zero_equals_gi_baseline():
    gap = gap_spec(alpha=1e-3, rho=0.0, K=5, m=2)
    gi = ExperimentSpec(
        params=ModelParams(K=5, rho=0.0, mu=1.0, signal_set=frozenset({1, 2})),
        rule=GiRuleSpec(l=1, u=3), alpha=1e-3, beta=1e-3,
        replications=10, master_seed=0,
    )
    assert theoretical_asymptote(gap) == theoretical_asymptote(gi)


def test_default_horizon_cap():
    assert default_horizon_cap(gap_spec(alpha=0.01)) == 1000  # floor dominates
    big = gap_spec(alpha=1e-12, rho=0.0)
    assert 50 * theoretical_asymptote(big) > 1000  # floor does not mask the scaling
    assert default_horizon_cap(big) == math.ceil(50 * theoretical_asymptote(big))
    assert gap_spec(horizon_cap=77).resolved_horizon_cap() == 77


# ----------------------------------------------------------------- trials


def test_trial_is_pure_function_of_spec_and_index():
    spec = gap_spec()
    assert run_trial(spec, 3) == run_trial(spec, 3)
    assert run_trial(spec, 3) != run_trial(spec, 4)


def test_gap_trial_rejects_exactly_m():
    spec = gap_spec(reps=50)
    for i in range(50):
        trial = run_trial(spec, i)
        assert not trial.truncated
        assert len(trial.rejected) == 2
        assert 1 <= trial.stopping_time <= spec.resolved_horizon_cap()


def test_maxgap_trial_rejection_counts_within_bounds():
    spec = ExperimentSpec(
        params=ModelParams(K=5, rho=0.5, mu=1.0, signal_set=frozenset({1, 2})),
        rule=MaxGapRuleSpec(l=1, u=3), alpha=0.05, beta=0.05,
        replications=30, master_seed=42,
    )
    for i in range(30):
        trial = run_trial(spec, i)
        assert 1 < len(trial.rejected) < 3 or trial.truncated


def test_gi_trial_runs_at_rho_zero():
    spec = ExperimentSpec(
        params=ModelParams(K=5, rho=0.0, mu=1.0, signal_set=frozenset({1, 2})),
        rule=GiRuleSpec(l=1, u=3), alpha=0.05, beta=0.05,
        replications=30, master_seed=42,
    )
    for i in range(30):
        trial = run_trial(spec, i)
        assert trial.truncated or 1 <= len(trial.rejected) <= 3


def test_truncated_trial_scores_all_wrong():
    spec = gap_spec(horizon_cap=1, reps=20)
    trials = [run_trial(spec, i) for i in range(20)]
    truncated = [t for t in trials if t.truncated]
    assert truncated, "a 1-step horizon must truncate some trials"
    for t in truncated:
        assert t.stopping_time == 1
        assert t.rejected == frozenset({3, 4})  # complement of the signal set


# ------------------------------------------------------------ experiments


def test_experiment_is_deterministic():
    spec = gap_spec()
    assert run_experiment(spec) == run_experiment(spec)


def test_parallel_equals_serial():
    spec = gap_spec(reps=300)
    serial = run_experiment_with_trials(spec, workers=1)
    parallel = run_experiment_with_trials(spec, workers=3)
    assert serial == parallel


def test_experiment_summary_contents():
    spec = gap_spec(reps=400)
    summary, trials = run_experiment_with_trials(spec)
    assert len(trials) == 400
    assert summary.replications == 400
    assert summary.mean_T == pytest.approx(
        sum(t.stopping_time for t in trials) / 400, rel=1e-12
    )
    assert summary.ratio == pytest.approx(summary.mean_T / summary.asymptote, rel=1e-12)
    assert summary.truncation_count == 0
    assert summary.reliable


def test_summarize_time_moments():
    spec = gap_spec(reps=2)
    trials = [
        TrialResult(2, frozenset({1, 2}), False),
        TrialResult(4, frozenset({1, 2}), False),
    ]
    summary = summarize(spec, trials)
    assert summary.mean_T == 3.0
    assert summary.se_T == 1.0


def test_unreliable_flag_on_heavy_truncation():
    summary = run_experiment(gap_spec(horizon_cap=1, reps=50))
    assert summary.truncation_count > 0.05 * 50
    assert not summary.reliable
    # truncated trials drive every error metric up, not down
    assert summary.metrics.fwer1.value == summary.metrics.pics.value


def test_workers_validation():
    with pytest.raises(ValueError, match="workers"):
        run_experiment(gap_spec(reps=10), workers=0)


# ----------------------------------------------------------------- sweeps


def test_ratio_sweep_shares_seed_and_orders_points():
    points = ratio_sweep(gap_spec(reps=100), [1e-2, 1e-3])
    assert [p.value for p in points] == [1e-2, 1e-3]
    assert all(p.spec.master_seed == 1234 for p in points)
    assert all(p.spec.alpha == p.spec.beta == p.value for p in points)


def test_ratio_sweep_validates_grid():
    with pytest.raises(ValueError, match="nonempty"):
        ratio_sweep(gap_spec(), [])
    with pytest.raises(ValueError, match="strictly decreasing"):
        ratio_sweep(gap_spec(), [1e-3, 1e-2])


def test_rho_sweep_replaces_correlation():
    points = rho_sweep(gap_spec(reps=100), [0.0, 0.5])
    assert [p.spec.params.rho for p in points] == [0.0, 0.5]
    assert points[0].summary.asymptote == pytest.approx(
        2 * points[1].summary.asymptote, rel=1e-12
    )
    with pytest.raises(ValueError, match="nonempty"):
        rho_sweep(gap_spec(), [])


# -------------------------------------------------------------- benchmark


def test_matched_sprt_config_frozen_values():
    cfg = matched_sprt_config(gap_spec(alpha=1e-6))
    assert cfg.gamma == pytest.approx(2.5e-7, rel=1e-12)  # 1e-6 / (m*(K-m))
    assert cfg.delta == 0.0
    assert cfg.sigma2 == pytest.approx(1.0, rel=1e-12)  # 2*(1-rho)
    assert (cfg.theta0, cfg.theta1) == (-1.0, 1.0)
    assert asn_asymptotic(cfg) == pytest.approx(7.600902, abs=1e-6)


def test_benchmark_requires_gap_rule():
    spec = ExperimentSpec(
        params=ModelParams(K=5, rho=0.5, mu=1.0, signal_set=frozenset({1, 2})),
        rule=MaxGapRuleSpec(l=1, u=3), alpha=0.01, beta=0.01,
        replications=10, master_seed=0,
    )
    with pytest.raises(ValueError, match="gap rule"):
        matched_sprt_config(spec)


def test_benchmark_ratio_consistency():
    bench = sprt_benchmark(gap_spec(alpha=1e-4, reps=200))
    assert bench.ratio == pytest.approx(bench.gap_summary.mean_T / bench.sprt_asn, rel=1e-12)
    assert bench.sprt_level == pytest.approx(1e-4 / 4, rel=1e-12)
