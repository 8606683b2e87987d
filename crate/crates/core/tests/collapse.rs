use std::collections::BTreeMap;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sectorsim::collapse::{gamma_from_s, is_unistochastic, parse_table, RowWeights};
use sectorsim::dynamics::SMatrixOptions;
use sectorsim::processes::pair_production_scenario;
use sectorsim::sectors::signature;
use sectorsim::suites::{random_unitary, SEED_BATTERY};
use sectorsim::toys::{DecayToy, PairProductionToy};
use sectorsim::{ContentSignature, Verdict};

fn max_entry_error(u: &sectorsim::linalg::CMatrix, g: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            worst = worst.max((u[(i, j)].norm_sqr() - g[(i, j)]).abs());
        }
    }
    worst
}

#[test]
fn pair_production_frequencies_follow_sector_weights() {
    let toy = PairProductionToy::new();
    let sc = pair_production_scenario(&toy.default_model().unwrap(), &SMatrixOptions::default()).unwrap();
    // Oracle: sum |S_βα|² over out-states by content signature.
    let s = sc.s_matrix();
    let mut expected: BTreeMap<ContentSignature, f64> = BTreeMap::new();
    for b in s.basis().states() {
        let p = s.amplitude(&toy.in_basis(), b).unwrap().norm_sqr();
        if p > 0.0 {
            *expected.entry(signature(toy.registry(), b)).or_default() += p;
        }
    }
    let total: f64 = expected.values().sum();
    assert!((total - 1.0).abs() < 1e-9);
    // the collapse rule normalizes by the out-state norm
    expected.values_mut().for_each(|p| *p /= total);
    for root in SEED_BATTERY {
        let r = sc.frequencies(root, 0, 100_000).unwrap();
        assert_eq!(r.cross_sector_post_states, 0);
        assert_eq!(r.rows.len(), 3);
        assert!((r.rows.iter().map(|x| x.frequency).sum::<f64>() - 1.0).abs() < 1e-9);
        for row in &r.rows {
            let p = expected[&row.signature];
            assert!((row.probability - p).abs() < 1e-12);
            let sigma = (p * (1.0 - p) / 1e5).sqrt();
            assert!((row.frequency - p).abs() < 4.0 * sigma, "seed {root}: {row:?}");
        }
    }
}

#[test]
fn decay_gamma_off_diagonal_is_the_decay_probability() {
    let toy = DecayToy::new();
    let model = toy.model(0.01, [1.0, 0.6, 0.4]).unwrap();
    let ham = sectorsim::dynamics::build_hamiltonians(&model).unwrap();
    let s = sectorsim::dynamics::extract_s_matrix(&model, &ham, &SMatrixOptions::default()).unwrap();
    let g = gamma_from_s(
        toy.registry(),
        &s,
        &[RowWeights::PointMass(toy.unstable_basis()), RowWeights::PointMass(toy.decayed_basis())],
    )
    .unwrap();
    assert!(g.max_row_sum_error() < 1e-9);
    let p_decay = s.amplitude(&toy.unstable_basis(), &toy.decayed_basis()).unwrap().norm_sqr();
    assert!(p_decay > 1e-3);
    let decayed_col = g.col_labels.iter().position(|c| c == &g.row_labels[1]).unwrap();
    // the {Pu} row also leaks a little into higher sectors, so compare the
    // entry itself rather than 1 − diagonal
    let two_body_mass: f64 = s
        .basis()
        .states()
        .iter()
        .filter(|b| signature(toy.registry(), b) == g.row_labels[1])
        .map(|b| s.amplitude(&toy.unstable_basis(), b).unwrap().norm_sqr())
        .sum();
    assert!((g.entries[(0, decayed_col)] - two_body_mass).abs() < 1e-12);
    assert!(two_body_mass >= p_decay);
}

#[test]
fn table_round_trip() {
    let text = "# {a} {b}\n0.25 0.75\n0.75 0.25\n";
    let (labels, m) = parse_table(text).unwrap();
    assert_eq!(labels.unwrap().len(), 2);
    let v = is_unistochastic(&m, 1e-8).unwrap();
    assert_eq!(v.verdict, Verdict::True);
    assert!(parse_table("0.5 x\n").is_err());
}

#[test]
fn circulant_is_not_unistochastic() {
    let g = DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 0.5, 0.5, 0.0, 0.5, 0.5, 0.5, 0.0]);
    let v = is_unistochastic(&g, 1e-8).unwrap();
    assert_eq!(v.verdict, Verdict::False);
    assert!(v.witness.is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn doubly_stochastic_2x2_always_has_a_witness(p in 0.0f64..=1.0) {
        let g = DMatrix::from_row_slice(2, 2, &[p, 1.0 - p, 1.0 - p, p]);
        let v = is_unistochastic(&g, 1e-8).unwrap();
        prop_assert_eq!(v.verdict, Verdict::True);
        let u = v.witness.unwrap();
        prop_assert!(max_entry_error(&u, &g) < 1e-8);
        prop_assert!(sectorsim::linalg::unitarity_defect(&u) < 1e-10);
    }

    #[test]
    fn emitted_witnesses_reproduce_their_matrix(seed in any::<u64>(), n in 2usize..=5) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let u = random_unitary(n, &mut rng);
        let g = DMatrix::from_fn(n, n, |i, j| u[(i, j)].norm_sqr());
        let v = is_unistochastic(&g, 1e-8).unwrap();
        // |U|² is unistochastic by construction, so False would be wrong
        prop_assert_ne!(v.verdict, Verdict::False);
        if n <= 3 {
            prop_assert_eq!(v.verdict, Verdict::True);
        }
        if let Some(w) = &v.witness {
            prop_assert!(max_entry_error(w, &g) < 1e-8);
        }
    }
}

proptest! {
    // each case extracts an S-matrix
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn gamma_rows_are_stochastic(g_e in 0.005f64..0.05, g_mu in 0.005f64..0.05) {
        let toy = PairProductionToy::new();
        let model = toy.model(g_e, g_mu, [1.1, 0.55, 0.55, 0.55, 0.55]).unwrap();
        let ham = sectorsim::dynamics::build_hamiltonians(&model).unwrap();
        let s = sectorsim::dynamics::extract_s_matrix(&model, &ham, &SMatrixOptions::default()).unwrap();
        let g = gamma_from_s(toy.registry(), &s, &[
            RowWeights::PointMass(toy.in_basis()),
            RowWeights::Uniform(ContentSignature::new(["e", "e+"])),
        ]).unwrap();
        prop_assert!(g.max_row_sum_error() < 1e-9);
        prop_assert!(g.entries.iter().all(|&x| x >= 0.0));
    }
}
