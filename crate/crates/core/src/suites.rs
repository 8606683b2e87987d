//! Property batteries run on fixed seeds. Each property yields a measured
//! value, the bound it is held to, and a verdict.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::collapse::{is_unistochastic, witness_error, Verdict};
use crate::dynamics::{
    build_hamiltonians, dyson_truncated, interaction_picture_u, DysonOptions, Hamiltonians, InteractionModel,
    SMatrixOptions,
};
use crate::error::{Error, Result};
use crate::fock::{commutator_defect, interior_probes, Mode, MomentumGrid, ParticleSpecies, Registry, StateVector};
use crate::linalg::{frobenius, unitarity_defect, CMatrix};
use crate::locality::{cluster_decompose_3, momentum_exclusivity_check, no_signaling_mc, two_detector_scenario, ThreeBodyBlocks, PAIRS};
use crate::measurement::{
    double_slit_scenario, epr_scenario, epr_setup, fringe_profile, polarization_run, polarization_scenario,
    run_batch, double_slit_setup, MeasurementScenario,
};
use crate::processes::{absorption_scenario, decay_collapse_sim, decay_report, pair_production_scenario, DecaySpec};
use crate::sectors::{sector_decompose, DEFAULT_SECTOR_EPSILON};
use crate::toys::{AbsorptionToy, DecayToy, PairProductionToy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Algebra,
    Dynamics,
    Collapse,
    Locality,
    Measurement,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 6] = ["algebra", "dynamics", "collapse", "locality", "measurement", "all"];

    /// The concrete batteries `self` stands for.
    pub fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![
                Suite::Algebra,
                Suite::Dynamics,
                Suite::Collapse,
                Suite::Locality,
                Suite::Measurement,
            ],
            s => vec![s],
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "algebra" => Ok(Suite::Algebra),
            "dynamics" => Ok(Suite::Dynamics),
            "collapse" => Ok(Suite::Collapse),
            "locality" => Ok(Suite::Locality),
            "measurement" => Ok(Suite::Measurement),
            "all" => Ok(Suite::All),
            _ => Err(Error::Input(format!(
                "unknown suite '{s}'; expected one of {}",
                Suite::NAMES.join(", ")
            ))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = match self {
            Suite::Algebra => 0,
            Suite::Dynamics => 1,
            Suite::Collapse => 2,
            Suite::Locality => 3,
            Suite::Measurement => 4,
            Suite::All => 5,
        };
        f.write_str(Suite::NAMES[i])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Below,
    Above,
    Equal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub suite: Suite,
    pub property: String,
    pub passed: bool,
    pub value: f64,
    pub bound: Bound,
    pub threshold: f64,
    pub detail: String,
}

impl PropertyResult {
    fn measured(suite: Suite, property: &str, value: f64, bound: Bound, threshold: f64, detail: String) -> Self {
        let passed = match bound {
            Bound::Below => value < threshold,
            Bound::Above => value > threshold,
            Bound::Equal => value == threshold,
        };
        Self {
            suite,
            property: property.into(),
            passed,
            value,
            bound,
            threshold,
            detail,
        }
    }

    fn from_result(suite: Suite, property: &str, bound: Bound, threshold: f64, r: Result<(f64, String)>) -> Self {
        match r {
            Ok((v, detail)) => Self::measured(suite, property, v, bound, threshold, detail),
            Err(e) => Self {
                suite,
                property: property.into(),
                passed: false,
                value: f64::NAN,
                bound,
                threshold,
                detail: e.to_string(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub results: Vec<PropertyResult>,
}

pub fn run_suite(suite: Suite) -> SuiteReport {
    let mut results = Vec::new();
    for s in suite.expand() {
        results.extend(match s {
            Suite::Algebra => algebra_battery(),
            Suite::Dynamics => dynamics_battery(),
            Suite::Collapse => collapse_battery(),
            Suite::Locality => locality_battery(),
            Suite::Measurement => measurement_battery(),
            Suite::All => unreachable!(),
        });
    }
    SuiteReport {
        suite,
        passed: results.iter().all(|r| r.passed),
        results,
    }
}

/// Fixed seed battery shared by the statistical properties.
pub const SEED_BATTERY: [u64; 10] = [1, 2, 3, 5, 8, 13, 21, 34, 55, 89];

pub const RANDOM_REGISTRY_COUNT: usize = 50;
pub const RANDOM_REGISTRY_CAP: usize = 1024;

/// A small registry with random species, statistics, caps and grid,
/// redrawn until its full basis fits in [`RANDOM_REGISTRY_CAP`] states.
pub fn random_registry(rng: &mut ChaCha20Rng) -> Registry {
    loop {
        let cells = rng.random_range(1..=3);
        let n_max = rng.random_range(3..=4);
        let n_species = rng.random_range(1..=3);
        let mut b = Registry::builder(MomentumGrid::line(cells), n_max);
        let mut names = Vec::new();
        for k in 0..n_species {
            let name = format!("s{k}");
            let sp = if rng.random_bool(0.5) {
                ParticleSpecies::fermion(&name)
            } else {
                ParticleSpecies::boson(&name, rng.random_range(2..=4))
            };
            b = b.species(sp.with_charge(rng.random_range(-1..=1)));
            names.push(name);
        }
        for name in &names {
            for p in 0..cells {
                if rng.random_bool(0.7) {
                    b = b.mode(Mode::new(name.clone(), vec![p], rng.random_range(0..=1)));
                }
            }
        }
        let Ok(reg) = b.build() else { continue };
        if reg.n_modes() == 0 {
            continue;
        }
        if reg.enumerate_basis(RANDOM_REGISTRY_CAP).is_ok() {
            return reg;
        }
    }
}

/// Haar-distributed unitary from the QR factorization of a complex
/// Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut ChaCha20Rng) -> CMatrix {
    let z = CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = z.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases: Vec<Complex64> = (0..n)
        .map(|i| {
            let d = r[(i, i)];
            if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) }
        })
        .collect();
    CMatrix::from_fn(n, n, |i, j| q[(i, j)] * phases[j])
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Largest commutation defect over every mode pair and interior probe.
pub fn registry_commutator_defect(reg: &Registry) -> Result<(f64, usize)> {
    let basis = reg.enumerate_basis(RANDOM_REGISTRY_CAP)?;
    let ids: Vec<_> = reg.modes().map(|(id, _)| id).collect();
    let mut worst: f64 = 0.0;
    let mut probes = 0;
    for &a in &ids {
        for &b in &ids {
            let p = interior_probes(reg, &basis, a, b);
            probes += p.len();
            worst = worst.max(commutator_defect(reg, a, b, &p)?);
        }
    }
    Ok((worst, probes))
}

const ALGEBRA_SEED: u64 = 0xa16e_b7a0;

fn algebra_battery() -> Vec<PropertyResult> {
    let s = Suite::Algebra;
    let commutation = (|| {
        let mut rng = ChaCha20Rng::seed_from_u64(ALGEBRA_SEED);
        let mut worst: f64 = 0.0;
        let mut probes = 0;
        let mut max_dim = 0;
        for _ in 0..RANDOM_REGISTRY_COUNT {
            let reg = random_registry(&mut rng);
            max_dim = max_dim.max(reg.enumerate_basis(RANDOM_REGISTRY_CAP)?.len());
            let (d, p) = registry_commutator_defect(&reg)?;
            worst = worst.max(d);
            probes += p;
        }
        Ok((
            worst,
            format!("{RANDOM_REGISTRY_COUNT} registries, {probes} probes, largest dimension {max_dim}"),
        ))
    })();
    let recombine = (|| {
        let mut rng = ChaCha20Rng::seed_from_u64(ALGEBRA_SEED + 1);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let reg = random_registry(&mut rng);
            let basis = reg.enumerate_basis(RANDOM_REGISTRY_CAP)?;
            let psi = StateVector::from_amplitudes(basis.iter().map(|b| {
                (
                    b.clone(),
                    Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)),
                )
            }))
            .normalize()?;
            let dec = sector_decompose(&reg, &psi, DEFAULT_SECTOR_EPSILON)?;
            worst = worst.max(dec.recombine().distance(&psi));
        }
        Ok((worst, "20 random states".into()))
    })();
    vec![
        PropertyResult::from_result(s, "commutation_relations", Bound::Below, 1e-12, commutation),
        PropertyResult::from_result(s, "sector_recombination", Bound::Below, 1e-12, recombine),
    ]
}

/// The bundled models: decay, absorption and pair production toys.
pub fn bundled_models() -> Result<Vec<(&'static str, InteractionModel)>> {
    Ok(vec![
        ("decay", DecayToy::new().model(0.05, [1.0, 0.6, 0.4])?),
        ("absorption", AbsorptionToy::new().model(0.02, [1.0, 10.0, 0.6, 10.4])?),
        ("pair_production", PairProductionToy::new().default_model()?),
    ])
}

pub const DYSON_COUPLINGS: [f64; 4] = [0.02, 0.04, 0.08, 0.16];

/// `‖U_I(τ, τ₀) − D_{≤order}‖` on the decay toy for each coupling.
pub fn dyson_defects(order: usize, couplings: &[f64]) -> Result<Vec<f64>> {
    let toy = DecayToy::new();
    let (tau0, tau) = (0.0, 3.0);
    couplings
        .iter()
        .map(|&g| {
            let ham = build_hamiltonians(&toy.model(g, [1.0, 0.7, 0.5])?)?;
            let exact = interaction_picture_u(&ham, tau0, tau);
            let trunc = dyson_truncated(&ham, order, tau0, tau, &DysonOptions::default())?;
            Ok(frobenius(&(exact - trunc)))
        })
        .collect()
}

fn unitarity_of(ham: &Hamiltonians) -> f64 {
    let mut worst: f64 = 0.0;
    for t in [0.7, 5.3, 40.0] {
        worst = worst.max(unitarity_defect(&ham.propagator(t)));
    }
    for (a, b) in [(-30.0, 25.0), (0.0, 1.5)] {
        worst = worst.max(unitarity_defect(&interaction_picture_u(ham, a, b)));
    }
    worst
}

fn dynamics_battery() -> Vec<PropertyResult> {
    let s = Suite::Dynamics;
    let models = bundled_models();
    let unitarity = models.clone().and_then(|ms| {
        let mut worst: f64 = 0.0;
        for (_, m) in &ms {
            worst = worst.max(unitarity_of(&build_hamiltonians(m)?));
        }
        Ok((worst, format!("{} models", ms.len())))
    });
    let columns = models.clone().and_then(|ms| {
        let mut worst: f64 = 0.0;
        for (_, m) in &ms {
            let ham = build_hamiltonians(m)?;
            let sm = crate::dynamics::extract_s_matrix(m, &ham, &SMatrixOptions::default())?;
            for b in sm.basis().states() {
                worst = worst.max((sm.column_probability(b)? - 1.0).abs());
            }
        }
        Ok((worst, "max |Σ_β |S_βα|² − 1| over all columns".into()))
    });
    let slope = dyson_defects(2, &DYSON_COUPLINGS).map(|d| {
        let k = loglog_slope(&DYSON_COUPLINGS, &d);
        ((k - 3.0).abs(), format!("slope {k:.4}; defects {d:?}"))
    });
    let composition = models.and_then(|ms| {
        let mut rng = ChaCha20Rng::seed_from_u64(0xc0_4405);
        let mut worst: f64 = 0.0;
        for (_, m) in &ms {
            let ham = build_hamiltonians(m)?;
            for _ in 0..20 {
                let t: [f64; 3] = std::array::from_fn(|_| rng.random_range(-50.0..50.0));
                let u21 = interaction_picture_u(&ham, t[1], t[2]);
                let u10 = interaction_picture_u(&ham, t[0], t[1]);
                let u20 = interaction_picture_u(&ham, t[0], t[2]);
                worst = worst.max(frobenius(&(u21 * u10 - u20)));
            }
        }
        Ok((worst, "20 random triples per model".into()))
    });
    vec![
        PropertyResult::from_result(s, "evolution_unitarity", Bound::Below, 1e-10, unitarity),
        PropertyResult::from_result(s, "s_matrix_column_sums", Bound::Below, 1e-9, columns),
        PropertyResult::from_result(s, "dyson_order2_slope_deviation", Bound::Below, 0.3, slope),
        PropertyResult::from_result(s, "interaction_picture_composition", Bound::Below, 1e-10, composition),
    ]
}

pub const COLLAPSE_TRIALS: usize = 100_000;

/// 2×2 doubly stochastic matrix `[[p, 1−p], [1−p, p]]`.
fn doubly_stochastic_2(p: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[p, 1.0 - p, 1.0 - p, p])
}

fn collapse_battery() -> Vec<PropertyResult> {
    let s = Suite::Collapse;
    let scenario = PairProductionToy::new()
        .default_model()
        .and_then(|m| pair_production_scenario(&m, &SMatrixOptions::default()));
    let (freq, cross) = match scenario {
        Ok(sc) => {
            let mut worst: f64 = 0.0;
            let mut cross = 0;
            let mut err = None;
            for root in SEED_BATTERY {
                match sc.frequencies(root, 0, COLLAPSE_TRIALS) {
                    Ok(r) => {
                        worst = worst.max(r.max_abs_z);
                        cross += r.cross_sector_post_states;
                    }
                    Err(e) => err = Some(e),
                }
            }
            match err {
                Some(e) => (Err(e.clone()), Err(e)),
                None => (
                    Ok((worst, format!("{} seeds × {COLLAPSE_TRIALS} trials", SEED_BATTERY.len()))),
                    Ok((cross as f64, "post-states spanning more than one sector".into())),
                ),
            }
        }
        Err(e) => (Err(e.clone()), Err(e)),
    };
    let two_by_two = (|| {
        let mut rng = ChaCha20Rng::seed_from_u64(0x2b2);
        let mut worst: f64 = 0.0;
        let mut not_true = 0;
        for _ in 0..100 {
            let g = doubly_stochastic_2(rng.random::<f64>());
            let v = is_unistochastic(&g, 1e-8)?;
            match (&v.verdict, &v.witness) {
                (Verdict::True, Some(u)) => worst = worst.max(witness_error(u, &g)),
                _ => not_true += 1,
            }
        }
        if not_true > 0 {
            return Err(Error::Scenario(format!("{not_true} of 100 matrices not certified")));
        }
        Ok((worst, "100 random 2×2 doubly stochastic matrices".into()))
    })();
    let circulant = (|| {
        let g = DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 0.5, 0.5, 0.0, 0.5, 0.5, 0.5, 0.0]);
        let v = is_unistochastic(&g, 1e-8)?;
        Ok((f64::from(u8::from(v.verdict == Verdict::False)), format!("verdict {:?}", v.verdict)))
    })();
    let witness = (|| {
        let mut rng = ChaCha20Rng::seed_from_u64(0x3177);
        let mut worst: f64 = 0.0;
        let mut emitted = 0;
        for n in [3, 3, 4, 4, 5] {
            let u = random_unitary(n, &mut rng);
            let g = DMatrix::from_fn(n, n, |i, j| u[(i, j)].norm_sqr());
            let v = is_unistochastic(&g, 1e-8)?;
            if let Some(w) = &v.witness {
                emitted += 1;
                worst = worst.max(witness_error(w, &g));
            }
        }
        Ok((worst, format!("{emitted} witnesses emitted")))
    })();
    let decay = (|| {
        let spec = DecaySpec::new(0.5, 10.0, 0.1)?;
        let records = decay_collapse_sim(&spec, 42, COLLAPSE_TRIALS)?;
        decay_report(&spec, &records)
    })();
    let (ks, survival, spread) = match decay {
        Ok(r) => {
            let surv = r.survival.iter().map(|p| p.z.abs()).fold(0.0, f64::max);
            (
                Ok((r.ks_p_value, format!("D = {:.5}", r.ks_statistic))),
                Ok((surv, format!("{} survival points", r.survival.len()))),
                Ok((r.memorylessness_spread, format!("{} windows", r.memorylessness.len()))),
            )
        }
        Err(e) => (Err(e.clone()), Err(e.clone()), Err(e)),
    };
    let absorption = AbsorptionToy::new()
        .model(0.02, [1.0, 10.0, 0.6, 10.4])
        .and_then(|m| absorption_scenario(&m, &SMatrixOptions::default()))
        .and_then(|sc| sc.frequencies(7, 0, COLLAPSE_TRIALS))
        .map(|r| (r.max_abs_z, format!("{} sectors", r.rows.len())));
    vec![
        PropertyResult::from_result(s, "pair_production_frequency_z", Bound::Below, 4.0, freq),
        PropertyResult::from_result(s, "cross_sector_post_states", Bound::Equal, 0.0, cross),
        PropertyResult::from_result(s, "absorption_frequency_z", Bound::Below, 4.0, absorption),
        PropertyResult::from_result(s, "unistochastic_2x2_witness_error", Bound::Below, 1e-8, two_by_two),
        PropertyResult::from_result(s, "circulant_rejected", Bound::Equal, 1.0, circulant),
        PropertyResult::from_result(s, "witness_verification", Bound::Below, 1e-8, witness),
        PropertyResult::from_result(s, "decay_ks_p_value", Bound::Above, 0.01, ks),
        PropertyResult::from_result(s, "decay_survival_z", Bound::Below, 4.0, survival),
        PropertyResult::from_result(s, "memorylessness_spread", Bound::Below, 3.0, spread),
    ]
}

/// Random three-body blocks: a random unitary on the three-particle sector
/// and random pair unitaries.
pub fn random_three_body(rng: &mut ChaCha20Rng) -> ThreeBodyBlocks {
    let dims: [usize; 3] = std::array::from_fn(|_| rng.random_range(1..=3));
    let n = dims.iter().product();
    let s123 = random_unitary(n, rng);
    let pairs = PAIRS.map(|(a, b)| random_unitary(dims[a] * dims[b], rng));
    ThreeBodyBlocks::new(dims, s123, pairs).expect("shapes match")
}

fn locality_battery() -> Vec<PropertyResult> {
    let s = Suite::Locality;
    let reassembly = (|| {
        let mut rng = ChaCha20Rng::seed_from_u64(0xc1_0505);
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let blocks = random_three_body(&mut rng);
            let d = cluster_decompose_3(&blocks);
            worst = worst.max(frobenius(&(d.reassemble() - &blocks.s123)));
        }
        Ok((worst, "50 random three-body unitaries".into()))
    })();
    let exclusivity = (|| {
        let grid = MomentumGrid::new(vec![-1, -1, -1], vec![1, 1, 1])?;
        let mut simultaneous = 0;
        let mut checked = 0;
        for q1 in grid.points() {
            if q1.iter().all(|&x| x == 0) {
                continue;
            }
            let r = momentum_exclusivity_check(&grid, &q1)?;
            simultaneous += r.simultaneous;
            checked += 1;
        }
        Ok((simultaneous as f64, format!("{checked} nonzero q1 on a 3×3×3 grid")))
    })();
    let own = (|| {
        let mut worst: f64 = 0.0;
        for root in SEED_BATTERY {
            let r = two_detector_scenario(COLLAPSE_TRIALS, root)?;
            if r.p_m != 0.0 {
                return Err(Error::Scenario(format!("mutual detection probability {}", r.p_m)));
            }
            worst = worst.max(r.z_statistic.abs());
        }
        Ok((worst, format!("{} seeds", SEED_BATTERY.len())))
    })();
    let hypothetical = no_signaling_mc(0.2, COLLAPSE_TRIALS, 1).map(|r| (r.z_statistic, "p_M = 0.2".into()));
    vec![
        PropertyResult::from_result(s, "cluster_reassembly", Bound::Below, 1e-10, reassembly),
        PropertyResult::from_result(s, "simultaneous_branches", Bound::Equal, 0.0, exclusivity),
        PropertyResult::from_result(s, "no_signaling_z", Bound::Below, 3.0, own),
        PropertyResult::from_result(s, "hypothetical_signaling_z", Bound::Above, 5.0, hypothetical),
    ]
}

pub const POLARIZATION_ANGLES_DEG: [f64; 5] = [0.0, 22.5, 45.0, 67.5, 90.0];

/// Bundled measurement scenarios with their input states.
pub fn bundled_measurements() -> Result<Vec<(String, MeasurementScenario, StateVector)>> {
    let mut out = Vec::new();
    for deg in POLARIZATION_ANGLES_DEG {
        let (sc, input) = polarization_scenario(deg.to_radians())?;
        out.push((format!("polarization_{deg}"), sc, input));
    }
    for (a, b) in [(0.0, 0.0), (0.0, 30.0), (22.5, 67.5)] {
        let (sc, input) = epr_setup(f64::to_radians(a), f64::to_radians(b))?;
        out.push((format!("epr_{a}_{b}"), sc, input));
    }
    let (sc, input) = double_slit_setup(&fringe_profile(16, 4.0, 4.0))?;
    out.push(("double_slit".into(), sc, input));
    Ok(out)
}

fn measurement_battery() -> Vec<PropertyResult> {
    let s = Suite::Measurement;
    let one_detector = (|| {
        let mut bad = 0usize;
        let mut runs = 0usize;
        for (_, sc, input) in bundled_measurements()? {
            let prep = sc.prepare(&input)?;
            for root in SEED_BATTERY {
                for rec in run_batch(&prep, root, 2_000) {
                    runs += 1;
                    let mut per_wing = vec![0usize; sc.wings()];
                    for f in &rec.fired {
                        per_wing[f.wing] += 1;
                    }
                    if per_wing.iter().any(|&k| k != 1) {
                        bad += 1;
                    }
                }
            }
        }
        Ok((bad as f64, format!("{runs} runs")))
    })();
    let polarization = (|| {
        let mut worst: f64 = 0.0;
        for deg in POLARIZATION_ANGLES_DEG {
            worst = worst.max(polarization_run(deg.to_radians(), 11, COLLAPSE_TRIALS)?.z.abs());
        }
        Ok((worst, "max |z| over five analyzer angles".into()))
    })();
    let epr_equal = (|| {
        let mut unequal = 0;
        for root in SEED_BATTERY {
            let r = epr_scenario(0.3, 0.3, root, 10_000)?;
            if !r.all_runs_equal || r.correlation != 1.0 {
                unequal += 1;
            }
        }
        Ok((unequal as f64, "seeds with a run of unequal outcomes".into()))
    })();
    let marginals = (|| {
        let near = epr_scenario(0.0, 0.0, 17, COLLAPSE_TRIALS)?;
        let far = epr_scenario(0.0, 1.0, 18, COLLAPSE_TRIALS)?;
        let z = crate::stats::two_proportion_z(
            near.counts[0][0] + near.counts[0][1],
            near.trials,
            far.counts[0][0] + far.counts[0][1],
            far.trials,
        );
        Ok((z.abs(), "wing-a marginal with θ_b = 0 vs θ_b = 1 rad".into()))
    })();
    let slit = double_slit_scenario(&fringe_profile(16, 4.0, 4.0), 19, COLLAPSE_TRIALS)
        .map(|h| (h.max_abs_z, format!("16 cells, chi-square p = {:.3}", h.p_value)));
    vec![
        PropertyResult::from_result(s, "runs_without_exactly_one_detector", Bound::Equal, 0.0, one_detector),
        PropertyResult::from_result(s, "polarization_z", Bound::Below, 3.0, polarization),
        PropertyResult::from_result(s, "epr_equal_angle_violations", Bound::Equal, 0.0, epr_equal),
        PropertyResult::from_result(s, "epr_marginal_z", Bound::Below, 3.0, marginals),
        PropertyResult::from_result(s, "double_slit_cell_z", Bound::Below, 3.0, slit),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for n in Suite::NAMES {
            assert_eq!(n.parse::<Suite>().unwrap().to_string(), n);
        }
        assert!(matches!("physics".parse::<Suite>(), Err(Error::Input(_))));
        assert_eq!(Suite::All.expand().len(), 5);
    }

    #[test]
    fn slope_of_a_power_law() {
        let xs = [1.0, 2.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 5.0 * x.powi(3)).collect();
        assert!((loglog_slope(&xs, &ys) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn random_unitaries_are_unitary() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for n in 1..6 {
            assert!(unitarity_defect(&random_unitary(n, &mut rng)) < 1e-12);
        }
    }

    #[test]
    fn random_registries_fit_the_cap() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        for _ in 0..10 {
            let reg = random_registry(&mut rng);
            assert!(reg.enumerate_basis(RANDOM_REGISTRY_CAP).unwrap().len() <= RANDOM_REGISTRY_CAP);
        }
    }

    #[test]
    fn algebra_suite_passes() {
        let r = run_suite(Suite::Algebra);
        assert!(r.passed, "{:#?}", r.results);
    }
}
