use std::f64::consts::PI;

use proptest::prelude::*;
use sectorsim::measurement::{
    double_slit_scenario, epr_scenario, fringe_profile, polarization_run, polarization_scenario, run_batch,
    trajectory_scenario, TrajectorySpec,
};
use sectorsim::processes::{
    decay_collapse_sim, decay_report, decay_unitary_state, time_translation_diagnostic, DecaySpec,
};
use sectorsim::stats::two_proportion_z;
use sectorsim::toys::DecayToy;
use sectorsim::SeedPath;

#[test]
fn jump_times_follow_the_rate_two_tau_law() {
    let tau = 0.4;
    let spec = DecaySpec::new(tau, 12.0, 0.1).unwrap();
    let records = decay_collapse_sim(&spec, 42, 100_000).unwrap();
    let r = decay_report(&spec, &records).unwrap();
    assert!(r.ks_p_value > 0.01, "KS p = {}", r.ks_p_value);
    // mean of a right-censored exponential, computed directly
    let uncensored: Vec<f64> = records.iter().filter_map(|x| x.jump_time).collect();
    let rate = 2.0 * tau;
    let h = spec.horizon;
    let p_in = 1.0 - (-rate * h).exp();
    let mean_in = (1.0 / rate - (h + 1.0 / rate) * (-rate * h).exp()) / p_in;
    let mean = uncensored.iter().sum::<f64>() / uncensored.len() as f64;
    let var = uncensored.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / uncensored.len() as f64;
    assert!((mean - mean_in).abs() < 4.0 * (var / uncensored.len() as f64).sqrt());
    for p in &r.survival {
        let expected = (-rate * p.t).exp();
        assert!((p.expected - expected).abs() < 1e-15);
        let sigma = (expected * (1.0 - expected) / 1e5).sqrt().max(1e-12);
        assert!((p.empirical - expected).abs() < 4.0 * sigma + 1e-12, "t = {}", p.t);
    }
    assert!(r.memorylessness_spread < 3.0);
}

#[test]
fn unitary_window_weights_differ_by_e_squared() {
    let tau = 0.5;
    let spec = DecaySpec::new(tau, 10.0, 0.05).unwrap();
    let rows = time_translation_diagnostic(&spec, &[0.0, 1.0 / tau], None).unwrap();
    let ratio = rows[0].unitary_window_weight / rows[1].unitary_window_weight;
    assert!((ratio - 1f64.exp().powi(2)).abs() < 1e-9);
    assert_eq!(rows[0].collapse_conditional, rows[1].collapse_conditional);
    let toy = DecayToy::new();
    let psi = decay_unitary_state(&toy, tau, 1.3).unwrap();
    assert!((psi.amplitude(&toy.unstable_basis()).norm_sqr() - (-2.0 * tau * 1.3f64).exp()).abs() < 1e-15);
}

#[test]
fn polarization_frequencies_follow_cos_squared() {
    for deg in [0.0f64, 22.5, 45.0, 67.5, 90.0] {
        let theta = deg.to_radians();
        let r = polarization_run(theta, 3, 100_000).unwrap();
        let p = theta.cos().powi(2);
        let sigma = (p * (1.0 - p) / 1e5).sqrt();
        if sigma < 1e-9 {
            assert!((r.plus_frequency - p).abs() < 1e-9, "θ = {deg}");
        } else {
            assert!((r.plus_frequency - p).abs() < 3.0 * sigma, "θ = {deg}");
        }
    }
}

#[test]
fn epr_joint_probabilities_and_marginals() {
    let (ta, tb) = (0.2, 0.9);
    let r = epr_scenario(ta, tb, 5, 100_000).unwrap();
    // (|HH⟩ + |VV⟩)/√2 analyzed at θa, θb
    let same = (ta - tb).cos().powi(2) / 2.0;
    let diff = (ta - tb).sin().powi(2) / 2.0;
    let want = [[same, diff], [diff, same]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((r.probabilities[i][j] - want[i][j]).abs() < 1e-12);
        }
    }
    assert!(r.p_value > 1e-3);
    let equal = epr_scenario(0.7, 0.7, 6, 20_000).unwrap();
    assert!(equal.all_runs_equal);
    assert_eq!(equal.correlation, 1.0);
    let other = epr_scenario(0.2, 0.2, 9, 100_000).unwrap();
    let z = two_proportion_z(
        r.counts[0][0] + r.counts[0][1],
        r.trials,
        other.counts[0][0] + other.counts[0][1],
        other.trials,
    );
    assert!(z.abs() < 3.0);
}

#[test]
fn double_slit_histogram_matches_profile() {
    let profile = fringe_profile(16, 4.0, 4.0);
    let h = double_slit_scenario(&profile, 23, 100_000).unwrap();
    for (k, a) in profile.iter().enumerate() {
        let p = a.norm_sqr();
        assert!((h.expected[k] - p).abs() < 1e-15);
        let sigma = (p * (1.0 - p) / 1e5).sqrt();
        assert!((h.counts[k] as f64 / 1e5 - p).abs() < 3.0 * sigma.max(1e-12), "cell {k}");
    }
}

#[test]
fn trajectory_follows_the_drift() {
    let spec = TrajectorySpec {
        cells: 40,
        n_steps: 30,
        x0: 3.0,
        drift: 1.0,
        width: 0.6,
    };
    let r = trajectory_scenario(&spec, 8, 0).unwrap();
    assert_eq!(r.events.len(), 30);
    assert!((r.inferred_drift.unwrap() - 1.0).abs() < 0.1);
    let again = trajectory_scenario(&spec, 8, 0).unwrap();
    assert_eq!(again.cells, r.cells);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exactly_one_detector_fires(theta in 0.0f64..PI, root in any::<u64>()) {
        let (sc, input) = polarization_scenario(theta).unwrap();
        let prep = sc.prepare(&input).unwrap();
        for rec in run_batch(&prep, root, 200) {
            prop_assert_eq!(rec.fired.len(), 1);
            prop_assert!(rec.reported_eigenvalue() == 1.0 || rec.reported_eigenvalue() == -1.0);
        }
        let one = prep.run(&SeedPath::new(root, 3));
        prop_assert_eq!(one, prep.run(&SeedPath::new(root, 3)));
    }
}
