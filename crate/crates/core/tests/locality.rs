use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sectorsim::linalg::{frobenius, identity};
use sectorsim::locality::{
    cluster_decompose_3, momentum_exclusivity_check, no_signaling_mc, spacelike_prune, two_detector_scenario,
    Separation, ThreeBodyBlocks,
};
use sectorsim::suites::{random_three_body, random_unitary, SEED_BATTERY};
use sectorsim::{Error, MomentumGrid};

/// Every particle's momentum is conserved in total, and the spectator keeps
/// its own momentum.
fn conserves(q_in: [&[i32]; 3], q_out: [&[i32]; 3], spectator: usize) -> bool {
    let d = q_in[0].len();
    let balanced = (0..d).all(|k| {
        q_in.iter().map(|q| q[k]).sum::<i32>() == q_out.iter().map(|q| q[k]).sum::<i32>()
    });
    balanced && q_in[spectator] == q_out[spectator]
}

#[test]
fn one_three_unitary_tensor_identity_has_only_the_particle_two_spectator_term() {
    // S on (1,2,3) = U₁₃ ⊗ I₂ written in the 1,2,3 index order
    let mut rng = ChaCha20Rng::seed_from_u64(13);
    let dims = [2, 3, 2];
    let u13 = random_unitary(4, &mut rng);
    let n = 12;
    let s123 = sectorsim::linalg::CMatrix::from_fn(n, n, |r, c| {
        let (r1, r2, r3) = (r / 6, (r / 2) % 3, r % 2);
        let (c1, c2, c3) = (c / 6, (c / 2) % 3, c % 2);
        if r2 == c2 {
            u13[(r1 * 2 + r3, c1 * 2 + c3)]
        } else {
            Default::default()
        }
    });
    let blocks = ThreeBodyBlocks::new(dims, s123, [identity(6), u13.clone(), identity(6)]).unwrap();
    let d = cluster_decompose_3(&blocks);
    let (c3, c2) = d.term_norms();
    assert!(c3 < 1e-12);
    assert!(c2[0] < 1e-12 && c2[2] < 1e-12);
    assert!(frobenius(&(&d.connected_2[1] - (u13 - identity(4)))) < 1e-14);
    assert!(frobenius(&(d.reassemble() - &blocks.s123)) < 1e-12);
}

#[test]
fn exclusivity_holds_for_every_nonzero_q1() {
    for grid in [
        MomentumGrid::new(vec![-2], vec![2]).unwrap(),
        MomentumGrid::new(vec![-1, -1], vec![1, 1]).unwrap(),
        MomentumGrid::new(vec![-1, -1, -1], vec![1, 1, 1]).unwrap(),
    ] {
        let zero = vec![0; grid.dims()];
        for q1 in grid.points() {
            if q1 == zero {
                assert!(matches!(momentum_exclusivity_check(&grid, &q1), Err(Error::Domain(_))));
                continue;
            }
            let r = momentum_exclusivity_check(&grid, &q1).unwrap();
            assert_eq!(r.simultaneous, 0);
            for o in &r.outcomes {
                let q_in = [q1.as_slice(), zero.as_slice(), zero.as_slice()];
                let q_out = [zero.as_slice(), o.q2_out.as_slice(), o.q3_out.as_slice()];
                assert_eq!(o.branch_13, conserves(q_in, q_out, 1));
                assert_eq!(o.branch_12, conserves(q_in, q_out, 2));
            }
            assert_eq!(r.feasible_13, 1);
            assert_eq!(r.feasible_12, 1);
        }
    }
}

#[test]
fn own_two_detector_scenario_does_not_signal_on_any_battery_seed() {
    for root in SEED_BATTERY {
        let r = two_detector_scenario(100_000, root).unwrap();
        assert_eq!(r.p_m, 0.0);
        assert!((r.expected_both_on - 0.5).abs() < 1e-12);
        assert!((r.expected_one_off - 0.5).abs() < 1e-12);
        assert!(r.z_statistic.abs() < 3.0, "seed {root}: z = {}", r.z_statistic);
    }
}

#[test]
fn mutual_detection_process_signals() {
    let r = no_signaling_mc(0.2, 100_000, 77).unwrap();
    let sigma = (0.6f64 * 0.4 / 1e5).sqrt();
    assert!((r.p_both_on - 0.6).abs() < 3.0 * sigma);
    assert!((r.p_one_off - 0.5).abs() < 3.0 * (0.25f64 / 1e5).sqrt());
    assert!(r.z_statistic > 5.0);
    assert!(matches!(no_signaling_mc(1.5, 10, 0), Err(Error::Input(_))));
}

fn separation() -> impl Strategy<Value = Separation> {
    (any::<bool>(), any::<bool>(), any::<bool>()).prop_map(|(a, b, c)| Separation {
        pair_12: a,
        pair_13: b,
        pair_23: c,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_unitaries_reassemble(seed in any::<u64>()) {
        let blocks = random_three_body(&mut ChaCha20Rng::seed_from_u64(seed));
        prop_assert!(blocks.dims.iter().all(|&d| d <= 3));
        let d = cluster_decompose_3(&blocks);
        prop_assert!(frobenius(&(d.reassemble() - &blocks.s123)) < 1e-10);
    }

    #[test]
    fn pruning_is_idempotent(seed in any::<u64>(), sep in separation()) {
        let d = cluster_decompose_3(&random_three_body(&mut ChaCha20Rng::seed_from_u64(seed)));
        let once = spacelike_prune(&d, &sep);
        prop_assert_eq!(spacelike_prune(&once, &sep), once.clone());
        if sep.pair_12 || sep.pair_13 || sep.pair_23 {
            prop_assert_eq!(frobenius(&once.connected_3), 0.0);
        } else {
            prop_assert_eq!(once, d);
        }
    }
}
