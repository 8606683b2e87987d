use nalgebra::DMatrix;
use proptest::prelude::*;
use sectorsim::dynamics::{
    build_hamiltonians, dyson_truncated, extract_s_matrix, interaction_picture_u, DysonOptions, SMatrixOptions,
};
use sectorsim::linalg::{frobenius, unitarity_defect};
use sectorsim::suites::{bundled_models, loglog_slope, DYSON_COUPLINGS};
use sectorsim::toys::{DecayToy, PairProductionToy};
use sectorsim::{Complex64, Hamiltonians};

type C = DMatrix<Complex64>;

/// `e^{iH₀τ} e^{−iH(τ−τ₀)} e^{−iH₀τ₀}` using nalgebra's dense exponential.
fn oracle_ip(ham: &Hamiltonians, tau0: f64, tau: f64) -> C {
    let minus_i = Complex64::new(0.0, -1.0);
    let h = ham.h0() + ham.h1();
    let full = (h * (minus_i * (tau - tau0))).exp();
    let left = (ham.h0() * (-minus_i * tau)).exp();
    let right = (ham.h0() * (minus_i * tau0)).exp();
    left * full * right
}

fn decay_ham(g: f64) -> Hamiltonians {
    build_hamiltonians(&DecayToy::new().model(g, [1.0, 0.7, 0.5]).unwrap()).unwrap()
}

#[test]
fn exact_and_interaction_picture_evolution_are_unitary_on_bundled_models() {
    for (name, model) in bundled_models().unwrap() {
        let ham = build_hamiltonians(&model).unwrap();
        for t in [0.1, 3.7, 120.0] {
            assert!(unitarity_defect(&ham.propagator(t)) < 1e-10, "{name} t={t}");
        }
        let u = interaction_picture_u(&ham, -15.0, 40.0);
        assert!(unitarity_defect(&u) < 1e-10, "{name}");
        assert!(frobenius(&(u - oracle_ip(&ham, -15.0, 40.0))) < 1e-9, "{name}");
    }
}

#[test]
fn s_matrix_columns_sum_to_one_on_bundled_models() {
    for (name, model) in bundled_models().unwrap() {
        let ham = build_hamiltonians(&model).unwrap();
        let s = extract_s_matrix(&model, &ham, &SMatrixOptions::default()).unwrap();
        let e = s.entries();
        for j in 0..e.ncols() {
            let col: f64 = (0..e.nrows()).map(|i| e[(i, j)].norm_sqr()).sum();
            assert!((col - 1.0).abs() < 1e-9, "{name} column {j}: {col}");
        }
    }
}

#[test]
fn order_two_dyson_defect_scales_as_g_cubed() {
    let defects: Vec<f64> = DYSON_COUPLINGS
        .iter()
        .map(|&g| {
            let ham = decay_ham(g);
            let exact = oracle_ip(&ham, 0.0, 3.0);
            let d2 = dyson_truncated(&ham, 2, 0.0, 3.0, &DysonOptions::default()).unwrap();
            frobenius(&(exact - d2))
        })
        .collect();
    let slope = loglog_slope(&DYSON_COUPLINGS, &defects);
    assert!((slope - 3.0).abs() < 0.3, "slope {slope}, defects {defects:?}");
}

#[test]
fn pair_production_s_matrix_matches_pulse_area_formula() {
    // On resonance the interaction-picture coupling is constant within the
    // {γ, e e⁺, μ μᶜ} block, so the S amplitudes follow from the pulse area.
    let toy = PairProductionToy::new();
    let (ge, gm) = (0.02, 0.013);
    let model = toy.model(ge, gm, [1.1, 0.55, 0.55, 0.55, 0.55]).unwrap();
    let ham = build_hamiltonians(&model).unwrap();
    let s = extract_s_matrix(&model, &ham, &SMatrixOptions::default()).unwrap();
    let eps = model.switching_epsilon();
    let area = 2.0 * (1.0 - (-eps * s.half_time()).exp()) / eps;
    let big_g = (ge * ge + gm * gm).sqrt();
    let stay = s.amplitude(&toy.in_basis(), &toy.in_basis()).unwrap().norm_sqr();
    assert!((stay - (big_g * area).cos().powi(2)).abs() < 1e-8);
    let reg = toy.registry();
    let e_pair = sectorsim::BasisState::from_occupations([(reg.modes_of("e")[0], 1), (reg.modes_of("e+")[0], 1)]);
    let p_e = s.amplitude(&toy.in_basis(), &e_pair).unwrap().norm_sqr();
    let want = ge * ge / (big_g * big_g) * (big_g * area).sin().powi(2);
    assert!((p_e - want).abs() < 1e-8, "{p_e} vs {want}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn interaction_picture_composes(t0 in -60.0f64..60.0, t1 in -60.0f64..60.0, t2 in -60.0f64..60.0, g in 0.01f64..0.4) {
        let ham = decay_ham(g);
        let u21 = interaction_picture_u(&ham, t1, t2);
        let u10 = interaction_picture_u(&ham, t0, t1);
        let u20 = interaction_picture_u(&ham, t0, t2);
        prop_assert!(frobenius(&(u21 * u10 - u20)) < 1e-10);
    }

    #[test]
    fn propagator_agrees_with_dense_exponential(t in -30.0f64..30.0, g in 0.0f64..0.5) {
        let ham = decay_ham(g);
        let h = ham.h0() + ham.h1();
        let oracle = (h * Complex64::new(0.0, -t)).exp();
        prop_assert!(frobenius(&(ham.propagator(t) - oracle)) < 1e-9);
    }
}
