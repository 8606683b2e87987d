//! Three-stage measurement pipeline: a unitary coupling stage that routes
//! eigen-components to disjoint regions, a content-changing detector bank,
//! and a single collapse that decides which detector fired.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collapse::{CollapseEvent, Collapser};
use crate::error::{Error, Result};
use crate::fock::{create, BasisState, Mode, ModeId, MomentumGrid, ParticleSpecies, Registry, StateVector};
use crate::linalg::{unitarity_defect, CMatrix};
use crate::rng::SeedPath;
use crate::sectors::{signature, ContentSignature};
use crate::stats::{binomial_z, chi_square};

pub const COUPLING_UNITARITY_TOLERANCE: f64 = 1e-10;

/// Linear map on creation operators, `a†_m ↦ Σ_k c_k a†_k`. Modes without an
/// entry are left alone.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModeTransform {
    map: BTreeMap<ModeId, Vec<(ModeId, Complex64)>>,
}

impl ModeTransform {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn with(mut self, from: ModeId, image: Vec<(ModeId, Complex64)>) -> Self {
        self.map.insert(from, image);
        self
    }

    pub fn is_identity(&self) -> bool {
        self.map.is_empty()
    }

    pub fn domain(&self) -> impl Iterator<Item = ModeId> + '_ {
        self.map.keys().copied()
    }

    pub fn image(&self, m: ModeId) -> Vec<(ModeId, Complex64)> {
        self.map
            .get(&m)
            .cloned()
            .unwrap_or_else(|| vec![(m, Complex64::new(1.0, 0.0))])
    }

    /// Matrix from the listed modes to the modes they reach; square and
    /// unitary for a lossless coupling stage.
    pub fn matrix(&self) -> (Vec<ModeId>, Vec<ModeId>, CMatrix) {
        let domain: Vec<ModeId> = self.map.keys().copied().collect();
        let range: Vec<ModeId> = self
            .map
            .values()
            .flat_map(|img| img.iter().map(|(m, _)| *m))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut m = CMatrix::zeros(range.len(), domain.len());
        for (j, d) in domain.iter().enumerate() {
            for (k, c) in &self.map[d] {
                let i = range.iter().position(|r| r == k).expect("collected above");
                m[(i, j)] += c;
            }
        }
        (domain, range, m)
    }

    /// Lifts the map to Fock space: each basis state is rebuilt from the
    /// vacuum by applying transformed creators, highest mode first.
    pub fn apply(&self, reg: &Registry, s: &StateVector) -> Result<StateVector> {
        let mut out = StateVector::zero();
        for (b, amp) in s.iter() {
            let mut state = StateVector::vacuum();
            let occupied: Vec<(ModeId, u32)> = b.iter().collect();
            for &(m, n) in occupied.iter().rev() {
                let image = self.image(m);
                let mut norm = 1.0;
                for k in 1..=n {
                    let mut next = StateVector::zero();
                    for (target, c) in &image {
                        next = next.add(&create(reg, &state, *target)?.scale(*c));
                    }
                    state = next;
                    norm *= f64::from(k);
                }
                state = state.scale(Complex64::new(1.0 / norm.sqrt(), 0.0));
            }
            out = out.add(&state.scale(*amp));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub label: String,
    /// Independent measuring arm; one detector fires per wing.
    pub wing: usize,
    pub source: ModeId,
    pub detector: ModeId,
    pub eigenvalue: f64,
}

impl Region {
    pub fn new(label: impl Into<String>, wing: usize, source: ModeId, detector: ModeId, eigenvalue: f64) -> Self {
        Self {
            label: label.into(),
            wing,
            source,
            detector,
            eigenvalue,
        }
    }
}

/// Coupling stage, detector bank and record map.
#[derive(Clone, Debug)]
pub struct MeasurementScenario {
    registry: Registry,
    coupling: ModeTransform,
    regions: Vec<Region>,
    detector_stage: ModeTransform,
}

impl MeasurementScenario {
    /// Rejects a non-unitary or species-changing coupling stage and a
    /// detector bank that does not change particle content.
    pub fn new(registry: Registry, coupling: ModeTransform, regions: Vec<Region>) -> Result<Self> {
        let (domain, range, m) = coupling.matrix();
        for d in &domain {
            registry.check_mode(*d).map_err(|e| Error::Scenario(e.to_string()))?;
        }
        for r in &range {
            registry.check_mode(*r).map_err(|e| Error::Scenario(e.to_string()))?;
        }
        if !coupling.is_identity() {
            if domain.len() != range.len() {
                return Err(Error::Scenario(format!(
                    "coupling stage maps {} modes onto {}",
                    domain.len(),
                    range.len()
                )));
            }
            let defect = unitarity_defect(&m);
            if defect > COUPLING_UNITARITY_TOLERANCE {
                return Err(Error::Scenario(format!("coupling stage is not unitary (defect {defect:.3e})")));
            }
            for d in &domain {
                for (t, _) in coupling.image(*d) {
                    if registry.mode(t).species != registry.mode(*d).species {
                        return Err(Error::Scenario(format!(
                            "coupling stage turns {} into {}",
                            registry.mode(*d),
                            registry.mode(t)
                        )));
                    }
                }
            }
        }
        if regions.is_empty() {
            return Err(Error::Scenario("detector bank is empty".into()));
        }
        let mut labels = BTreeSet::new();
        let mut sources = BTreeSet::new();
        let mut detector_species = BTreeSet::new();
        let mut source_species = BTreeSet::new();
        for r in &regions {
            registry.check_mode(r.source).map_err(|e| Error::Scenario(e.to_string()))?;
            registry.check_mode(r.detector).map_err(|e| Error::Scenario(e.to_string()))?;
            if !labels.insert(r.label.clone()) {
                return Err(Error::Scenario(format!("duplicate region label '{}'", r.label)));
            }
            if !sources.insert(r.source) {
                return Err(Error::Scenario(format!("region '{}' reuses a source mode", r.label)));
            }
            if !detector_species.insert(registry.mode(r.detector).species.clone()) {
                return Err(Error::Scenario(format!("region '{}' shares a detector species", r.label)));
            }
            source_species.insert(registry.mode(r.source).species.clone());
        }
        if let Some(s) = detector_species.intersection(&source_species).next() {
            return Err(Error::Scenario(format!(
                "detector species '{s}' is also measured: the detector bank would not change content"
            )));
        }
        let detector_stage = regions.iter().fold(ModeTransform::identity(), |t, r| {
            t.with(r.source, vec![(r.detector, Complex64::new(1.0, 0.0))])
        });
        Ok(Self {
            registry,
            coupling,
            regions,
            detector_stage,
        })
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn coupling(&self) -> &ModeTransform {
        &self.coupling
    }

    pub fn wings(&self) -> usize {
        self.regions.iter().map(|r| r.wing + 1).max().unwrap_or(0)
    }

    /// Coupling stage only, detectors disabled.
    pub fn couple(&self, s: &StateVector) -> Result<StateVector> {
        self.coupling.apply(&self.registry, s)
    }

    /// True if the coupling stage keeps the content signature of every
    /// probe.
    pub fn coupling_preserves_content(&self, probes: &[BasisState]) -> Result<bool> {
        for b in probes {
            let sig = signature(&self.registry, b);
            let out = self.couple(&StateVector::basis(b.clone()))?;
            if out.iter().any(|(o, a)| a.norm_sqr() > 0.0 && signature(&self.registry, o) != sig) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Coupling then detection, without the collapse.
    pub fn detect(&self, s: &StateVector) -> Result<StateVector> {
        self.detector_stage.apply(&self.registry, &self.couple(s)?)
    }

    pub fn prepare(&self, in_state: &StateVector) -> Result<PreparedMeasurement> {
        if (in_state.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Input(format!("input state has norm {}", in_state.norm())));
        }
        let in_signature = in_state
            .iter()
            .next()
            .map(|(b, _)| signature(&self.registry, b))
            .unwrap_or_default();
        let detected = self.detect(in_state)?;
        let collapser = Collapser::new(&self.registry, &detected)?;
        let wings = self.wings();
        let mut fired = Vec::new();
        for sig in collapser.signatures() {
            let hits: Vec<usize> = (0..self.regions.len())
                .filter(|&i| sig.contains(&self.registry.mode(self.regions[i].detector).species))
                .collect();
            for w in 0..wings {
                let n = hits.iter().filter(|&&i| self.regions[i].wing == w).count();
                if n != 1 {
                    return Err(Error::Scenario(format!(
                        "outcome {sig} fires {n} detectors in wing {w}; exactly one is required"
                    )));
                }
            }
            fired.push(hits);
        }
        Ok(PreparedMeasurement {
            scenario: self.clone(),
            in_signature,
            collapser,
            fired,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiredRegion {
    pub wing: usize,
    pub label: String,
    pub eigenvalue: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord {
    /// One entry per wing, in wing order.
    pub fired: Vec<FiredRegion>,
    pub event: CollapseEvent,
    pub amplification_tag: String,
}

impl MeasurementRecord {
    pub fn fired_region(&self) -> &str {
        &self.fired[0].label
    }

    pub fn reported_eigenvalue(&self) -> f64 {
        self.fired[0].eigenvalue
    }
}

/// A scenario with its detected out-state decomposed once.
#[derive(Clone, Debug)]
pub struct PreparedMeasurement {
    scenario: MeasurementScenario,
    in_signature: ContentSignature,
    collapser: Collapser,
    fired: Vec<Vec<usize>>,
}

impl PreparedMeasurement {
    pub fn collapser(&self) -> &Collapser {
        &self.collapser
    }

    /// Region indices fired by each outcome sector.
    pub fn outcomes(&self) -> Vec<Vec<FiredRegion>> {
        (0..self.fired.len()).map(|k| self.fired_regions(k)).collect()
    }

    fn fired_regions(&self, k: usize) -> Vec<FiredRegion> {
        let mut out: Vec<FiredRegion> = self.fired[k]
            .iter()
            .map(|&i| {
                let r = &self.scenario.regions[i];
                FiredRegion {
                    wing: r.wing,
                    label: r.label.clone(),
                    eigenvalue: r.eigenvalue,
                }
            })
            .collect();
        out.sort_by_key(|f| f.wing);
        out
    }

    pub fn run(&self, seed: &SeedPath) -> MeasurementRecord {
        let event = self.collapser.sample(seed, &self.in_signature, 0.0);
        let k = self
            .collapser
            .signatures()
            .iter()
            .position(|s| *s == event.chosen_signature)
            .expect("sampled from the list");
        let fired = self.fired_regions(k);
        let labels: Vec<&str> = fired.iter().map(|f| f.label.as_str()).collect();
        MeasurementRecord {
            amplification_tag: format!("amp/{}/{}", seed, labels.join("+")),
            fired,
            event,
        }
    }

    /// Outcome counts over streams `root:first+i`.
    pub fn tally(&self, root: u64, first_stream: u64, trials: usize) -> Vec<usize> {
        self.collapser.tally(root, first_stream, trials)
    }
}

pub fn run_measurement(scenario: &MeasurementScenario, in_state: &StateVector, seed: &SeedPath) -> Result<MeasurementRecord> {
    Ok(scenario.prepare(in_state)?.run(seed))
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Wing `w` of an analyzer: input modes `(H, V)` at momentum 0, output
/// ports `(+, −)` at momentum 1 distinguished by spin.
fn analyzer(reg: &Registry, species: &str, theta: f64) -> Result<(ModeTransform, [ModeId; 4])> {
    let h = reg.mode_id(&Mode::new(species, vec![0], 0))?;
    let v = reg.mode_id(&Mode::new(species, vec![0], 1))?;
    let plus = reg.mode_id(&Mode::new(species, vec![1], 0))?;
    let minus = reg.mode_id(&Mode::new(species, vec![1], 1))?;
    let (cs, sn) = (theta.cos(), theta.sin());
    let t = ModeTransform::identity()
        .with(h, vec![(plus, c(cs)), (minus, c(-sn))])
        .with(v, vec![(plus, c(sn)), (minus, c(cs))]);
    Ok((t, [h, v, plus, minus]))
}

fn analyzer_registry(wings: &[&str]) -> Registry {
    let mut b = Registry::builder(MomentumGrid::line(2), wings.len() as u32);
    for w in wings {
        b = b
            .species(ParticleSpecies::boson(*w, 1))
            .species(ParticleSpecies::boson(format!("D{w}+"), 1))
            .species(ParticleSpecies::boson(format!("D{w}-"), 1));
    }
    for w in wings {
        for p in 0..2 {
            for spin in 0..2 {
                b = b.mode(Mode::new(*w, vec![p], spin));
            }
        }
        b = b.simple_mode(&format!("D{w}+")).simple_mode(&format!("D{w}-"));
    }
    b.build().expect("analyzer registry is valid")
}

/// A linear-polarization (or spin) analyzer at angle `θ`, fed a horizontally
/// polarized photon. Region "+" reports +1, region "−" reports −1.
pub fn polarization_scenario(theta: f64) -> Result<(MeasurementScenario, StateVector)> {
    let reg = analyzer_registry(&["photon"]);
    let (coupling, [h, _, plus, minus]) = analyzer(&reg, "photon", theta)?;
    let regions = vec![
        Region::new("+", 0, plus, reg.modes_of("Dphoton+")[0], 1.0),
        Region::new("-", 0, minus, reg.modes_of("Dphoton-")[0], -1.0),
    ];
    let input = StateVector::basis(BasisState::single(h));
    Ok((MeasurementScenario::new(reg, coupling, regions)?, input))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarizationReport {
    pub theta: f64,
    pub trials: usize,
    pub plus_count: usize,
    pub plus_frequency: f64,
    pub expected_plus: f64,
    pub z: f64,
}

pub fn polarization_run(theta: f64, root: u64, trials: usize) -> Result<PolarizationReport> {
    let (sc, input) = polarization_scenario(theta)?;
    let prep = sc.prepare(&input)?;
    let counts = prep.tally(root, 0, trials);
    let outcomes = prep.outcomes();
    let plus_count: usize = outcomes
        .iter()
        .zip(&counts)
        .filter(|(o, _)| o[0].label == "+")
        .map(|(_, n)| *n)
        .sum();
    let expected = theta.cos().powi(2);
    Ok(PolarizationReport {
        theta,
        trials,
        plus_count,
        plus_frequency: plus_count as f64 / trials as f64,
        expected_plus: expected,
        z: binomial_z(plus_count, trials, expected),
    })
}

/// Amplitudes on a screen of `cells` cells; must be normalized.
pub fn double_slit_setup(profile: &[Complex64]) -> Result<(MeasurementScenario, StateVector)> {
    if profile.is_empty() {
        return Err(Error::Input("screen needs at least one cell".into()));
    }
    let total: f64 = profile.iter().map(|a| a.norm_sqr()).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Input(format!("screen profile has total weight {total}, not 1")));
    }
    let cells = profile.len();
    let mut b = Registry::builder(MomentumGrid::line(cells as i32), 1).species(ParticleSpecies::boson("particle", 1));
    for k in 0..cells {
        b = b.species(ParticleSpecies::boson(format!("cell{k}"), 1));
    }
    for k in 0..cells {
        b = b.mode(Mode::new("particle", vec![k as i32], 0));
    }
    for k in 0..cells {
        b = b.simple_mode(&format!("cell{k}"));
    }
    let reg = b.build()?;
    let regions: Vec<Region> = (0..cells)
        .map(|k| {
            Region::new(
                format!("cell{k}"),
                0,
                reg.modes_of("particle")[k],
                reg.modes_of(&format!("cell{k}"))[0],
                k as f64,
            )
        })
        .collect();
    let input = StateVector::from_amplitudes(
        profile
            .iter()
            .enumerate()
            .map(|(k, a)| (BasisState::single(reg.modes_of("particle")[k]), *a)),
    );
    Ok((MeasurementScenario::new(reg, ModeTransform::identity(), regions)?, input))
}

/// Two Gaussian paths whose amplitudes add with a phase that advances
/// across the screen, giving fringes of the given period.
pub fn fringe_profile(cells: usize, fringe_period: f64, envelope_width: f64) -> Vec<Complex64> {
    let mid = (cells as f64 - 1.0) / 2.0;
    let raw: Vec<Complex64> = (0..cells)
        .map(|k| {
            let x = k as f64 - mid;
            let env = (-(x * x) / (4.0 * envelope_width * envelope_width)).exp();
            let phase = std::f64::consts::PI * x / fringe_period;
            Complex64::from_polar(env, phase) + Complex64::from_polar(env, -phase)
        })
        .collect();
    normalized(raw)
}

pub fn single_path_profile(cells: usize, center: f64, width: f64) -> Vec<Complex64> {
    normalized(
        (0..cells)
            .map(|k| {
                let x = k as f64 - center;
                c((-(x * x) / (4.0 * width * width)).exp())
            })
            .collect(),
    )
}

fn normalized(v: Vec<Complex64>) -> Vec<Complex64> {
    let n: f64 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / n).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitHistogram {
    pub trials: usize,
    pub counts: Vec<usize>,
    pub expected: Vec<f64>,
    pub z: Vec<f64>,
    pub max_abs_z: f64,
    pub chi_square: f64,
    pub p_value: f64,
}

pub fn double_slit_scenario(profile: &[Complex64], root: u64, trials: usize) -> Result<HitHistogram> {
    let (sc, input) = double_slit_setup(profile)?;
    let prep = sc.prepare(&input)?;
    let counts_by_sector = prep.tally(root, 0, trials);
    let mut counts = vec![0usize; profile.len()];
    for (o, n) in prep.outcomes().iter().zip(&counts_by_sector) {
        counts[o[0].eigenvalue as usize] += n;
    }
    let expected: Vec<f64> = profile.iter().map(|a| a.norm_sqr()).collect();
    let z: Vec<f64> = counts
        .iter()
        .zip(&expected)
        .map(|(&k, &p)| binomial_z(k, trials, p))
        .collect();
    let (chi, _, p) = chi_square(&counts, &expected)?;
    Ok(HitHistogram {
        trials,
        max_abs_z: z.iter().map(|x| x.abs()).fold(0.0, f64::max),
        counts,
        expected,
        z,
        chi_square: chi,
        p_value: p,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub cells: usize,
    pub n_steps: usize,
    pub x0: f64,
    /// Cells per step.
    pub drift: f64,
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryReport {
    pub events: Vec<CollapseEvent>,
    pub cells: Vec<usize>,
    /// Least-squares slope of cell against step.
    pub inferred_drift: Option<f64>,
}

/// A chain of independent ionization steps; step `k` sees a profile
/// centered on `x0 + drift·k`. Draws use `root:stream:k`.
pub fn trajectory_scenario(spec: &TrajectorySpec, root: u64, stream: u64) -> Result<TrajectoryReport> {
    let mut events = Vec::with_capacity(spec.n_steps);
    let mut cells = Vec::with_capacity(spec.n_steps);
    for k in 0..spec.n_steps {
        let center = spec.x0 + spec.drift * k as f64;
        let profile = single_path_profile(spec.cells, center, spec.width);
        let (sc, input) = double_slit_setup(&profile)?;
        let rec = run_measurement(&sc, &input, &SeedPath::new(root, stream).with_step(k as u32))?;
        cells.push(rec.reported_eigenvalue() as usize);
        events.push(rec.event);
    }
    Ok(TrajectoryReport {
        inferred_drift: slope(&cells),
        events,
        cells,
    })
}

fn slope(cells: &[usize]) -> Option<f64> {
    let n = cells.len();
    if n < 2 {
        return None;
    }
    let xm = (n as f64 - 1.0) / 2.0;
    let ym = cells.iter().map(|&c| c as f64).sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, &c) in cells.iter().enumerate() {
        let dx = k as f64 - xm;
        sxy += dx * (c as f64 - ym);
        sxx += dx * dx;
    }
    Some(sxy / sxx)
}

/// `(|H_a H_b⟩ + |V_a V_b⟩)/√2` with an analyzer on each wing.
pub fn epr_setup(theta_a: f64, theta_b: f64) -> Result<(MeasurementScenario, StateVector)> {
    let reg = analyzer_registry(&["a", "b"]);
    let (ta, [ha, va, pa, ma]) = analyzer(&reg, "a", theta_a)?;
    let (tb, [hb, vb, pb, mb]) = analyzer(&reg, "b", theta_b)?;
    let mut coupling = ta;
    for d in tb.domain().collect::<Vec<_>>() {
        coupling = coupling.with(d, tb.image(d));
    }
    let regions = vec![
        Region::new("a+", 0, pa, reg.modes_of("Da+")[0], 1.0),
        Region::new("a-", 0, ma, reg.modes_of("Da-")[0], -1.0),
        Region::new("b+", 1, pb, reg.modes_of("Db+")[0], 1.0),
        Region::new("b-", 1, mb, reg.modes_of("Db-")[0], -1.0),
    ];
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let input = StateVector::from_amplitudes([
        (BasisState::from_occupations([(ha, 1), (hb, 1)]), c(r)),
        (BasisState::from_occupations([(va, 1), (vb, 1)]), c(r)),
    ]);
    Ok((MeasurementScenario::new(reg, coupling, regions)?, input))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EprReport {
    pub theta_a: f64,
    pub theta_b: f64,
    pub trials: usize,
    /// `[[n(+,+), n(+,−)], [n(−,+), n(−,−)]]`.
    pub counts: [[usize; 2]; 2],
    pub probabilities: [[f64; 2]; 2],
    pub correlation: f64,
    pub expected_correlation: f64,
    pub marginal_a_plus: f64,
    pub marginal_a_z: f64,
    pub chi_square: f64,
    pub p_value: f64,
    /// Every run reported equal eigenvalues on both wings.
    pub all_runs_equal: bool,
}

pub fn epr_scenario(theta_a: f64, theta_b: f64, root: u64, trials: usize) -> Result<EprReport> {
    let (sc, input) = epr_setup(theta_a, theta_b)?;
    let prep = sc.prepare(&input)?;
    let by_sector = prep.tally(root, 0, trials);
    let mut counts = [[0usize; 2]; 2];
    let mut probabilities = [[0.0; 2]; 2];
    let idx = |x: f64| if x > 0.0 { 0 } else { 1 };
    for ((o, n), p) in prep.outcomes().iter().zip(&by_sector).zip(prep.collapser().probabilities()) {
        let (i, j) = (idx(o[0].eigenvalue), idx(o[1].eigenvalue));
        counts[i][j] += n;
        probabilities[i][j] += p;
    }
    let nf = trials as f64;
    let correlation = (counts[0][0] + counts[1][1]) as f64 / nf - (counts[0][1] + counts[1][0]) as f64 / nf;
    let a_plus = counts[0][0] + counts[0][1];
    let flat_counts = [counts[0][0], counts[0][1], counts[1][0], counts[1][1]];
    let flat_p = [probabilities[0][0], probabilities[0][1], probabilities[1][0], probabilities[1][1]];
    let (chi, _, p) = chi_square(&flat_counts, &flat_p)?;
    Ok(EprReport {
        theta_a,
        theta_b,
        trials,
        counts,
        probabilities,
        correlation,
        expected_correlation: (2.0 * (theta_a - theta_b)).cos(),
        marginal_a_plus: a_plus as f64 / nf,
        marginal_a_z: binomial_z(a_plus, trials, 0.5),
        chi_square: chi,
        p_value: p,
        all_runs_equal: counts[0][1] + counts[1][0] == 0,
    })
}

/// Runs many records in parallel; used to check the one-detector-per-wing
/// contract run by run.
pub fn run_batch(prep: &PreparedMeasurement, root: u64, trials: usize) -> Vec<MeasurementRecord> {
    (0..trials)
        .into_par_iter()
        .map(|i| prep.run(&SeedPath::new(root, i as u64)))
        .collect()
}
