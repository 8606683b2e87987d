//! Decay, absorption and pair production, each under the unitary picture and
//! under sector collapse.

use std::collections::BTreeSet;

use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collapse::{CollapseEvent, Collapser};
use crate::dynamics::{build_hamiltonians, extract_s_matrix, InteractionModel, SMatrix, SMatrixOptions};
use crate::error::{Error, Result};
use crate::fock::{BasisState, Registry, StateVector};
use crate::rng::SeedPath;
use crate::sectors::{is_cross_sector_superposition, signature, ContentSignature, DEFAULT_SECTOR_EPSILON};
use crate::stats::{binomial_z, ks_p_value, ks_statistic};
use crate::toys::DecayToy;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecaySpec {
    /// Amplitude decay constant: the survival amplitude is `e^{−τt}`.
    pub tau: f64,
    pub horizon: f64,
    /// Detection window Δ; also the spacing of the observation series.
    pub window: f64,
    /// Delay between the jump and the appearance of the products. Zero
    /// treats the interaction as instantaneous.
    #[serde(default)]
    pub product_delay: f64,
}

impl DecaySpec {
    pub fn new(tau: f64, horizon: f64, window: f64) -> Result<Self> {
        let s = Self {
            tau,
            horizon,
            window,
            product_delay: 0.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Input("decay tau must be positive".into()));
        }
        if !(self.window > 0.0 && self.horizon >= self.window && self.horizon.is_finite()) {
            return Err(Error::Input("decay spec needs horizon >= window > 0".into()));
        }
        if !(self.product_delay >= 0.0) {
            return Err(Error::Input("product delay must be non-negative".into()));
        }
        Ok(())
    }

    /// Jump rate `2τ`.
    pub fn rate(&self) -> f64 {
        2.0 * self.tau
    }

    pub fn survival(&self, t: f64) -> f64 {
        (-self.rate() * t).exp()
    }

    /// `P(jump in [s, s+Δ) | no jump before s)`.
    pub fn window_conditional(&self) -> f64 {
        -(-self.rate() * self.window).exp_m1()
    }

    pub fn observation_times(&self) -> Vec<f64> {
        let n = (self.horizon / self.window + 1e-9).floor() as usize;
        (0..=n).map(|k| k as f64 * self.window).collect()
    }
}

/// `e^{−τt}|P_u⟩ + √(1 − e^{−2τt}) |P_s, Q⟩`.
pub fn decay_unitary_state(toy: &DecayToy, tau: f64, t: f64) -> Result<StateVector> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("decay time must be non-negative, got {t}")));
    }
    let a = (-tau * t).exp();
    let b = (-(-2.0 * tau * t).exp_m1()).max(0.0).sqrt();
    Ok(toy
        .unstable_state()
        .scale(num_complex::Complex64::new(a, 0.0))
        .add(&toy.decayed_state().scale(num_complex::Complex64::new(b, 0.0))))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub seed_path: SeedPath,
    /// Absent when no jump happens before the horizon.
    pub jump_time: Option<f64>,
    /// `(t, still undecayed)`; non-increasing in the indicator.
    pub observations: Vec<(f64, bool)>,
    /// Time the products are present, `jump + delay`.
    pub product_time: Option<f64>,
}

/// One trajectory per stream `root:i`. Parallel and order-independent.
pub fn decay_collapse_sim(spec: &DecaySpec, root: u64, trials: usize) -> Result<Vec<TrajectoryRecord>> {
    spec.validate()?;
    if trials == 0 {
        return Err(Error::Input("trials must be at least 1".into()));
    }
    let exp = Exp::new(spec.rate()).map_err(|e| Error::Input(e.to_string()))?;
    let times = spec.observation_times();
    Ok((0..trials)
        .into_par_iter()
        .map(|i| {
            let seed = SeedPath::new(root, i as u64);
            let t_d: f64 = exp.sample(&mut seed.rng());
            let jump_time = (t_d <= spec.horizon).then_some(t_d);
            let observations = times
                .iter()
                .map(|&t| (t, jump_time.is_none_or(|j| t <= j)))
                .collect();
            TrajectoryRecord {
                seed_path: seed,
                jump_time,
                observations,
                product_time: jump_time.map(|j| j + spec.product_delay),
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalPoint {
    pub t: f64,
    pub empirical: f64,
    pub expected: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowPoint {
    pub s: f64,
    pub at_risk: usize,
    pub jumps: usize,
    pub conditional: f64,
    pub expected: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub trials: usize,
    pub censored: usize,
    pub mean_jump_time: f64,
    pub expected_mean: f64,
    /// Standard error of the uncensored mean.
    pub mean_sigma: f64,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    pub survival: Vec<SurvivalPoint>,
    pub memorylessness: Vec<WindowPoint>,
    /// `max_s |p̂_s − p| / σ_s` over the window grid.
    pub memorylessness_spread: f64,
}

/// Minimum number of surviving trajectories for a window to enter the
/// memorylessness grid.
pub const MIN_AT_RISK: usize = 1000;

pub fn decay_report(spec: &DecaySpec, records: &[TrajectoryRecord]) -> Result<DecayReport> {
    if records.is_empty() {
        return Err(Error::Input("no trajectories".into()));
    }
    let n = records.len();
    let samples: Vec<f64> = records.iter().map(|r| r.jump_time.unwrap_or(f64::INFINITY)).collect();
    let rate = spec.rate();
    let d = ks_statistic(&samples, |t| -(-rate * t).exp_m1(), Some(spec.horizon))?;
    let jumps: Vec<f64> = samples.iter().copied().filter(|x| x.is_finite()).collect();
    let censored = n - jumps.len();
    let mean = jumps.iter().sum::<f64>() / jumps.len().max(1) as f64;
    let survival = spec
        .observation_times()
        .into_iter()
        .map(|t| {
            let alive = samples.iter().filter(|&&x| x >= t).count();
            let p = spec.survival(t);
            SurvivalPoint {
                t,
                empirical: alive as f64 / n as f64,
                expected: p,
                z: binomial_z(alive, n, p),
            }
        })
        .collect();
    let p = spec.window_conditional();
    let mut memorylessness = Vec::new();
    let mut s = 0.0;
    while s + spec.window <= spec.horizon + 1e-12 {
        let at_risk = samples.iter().filter(|&&x| x >= s).count();
        if at_risk < MIN_AT_RISK {
            break;
        }
        let hits = samples.iter().filter(|&&x| x >= s && x < s + spec.window).count();
        memorylessness.push(WindowPoint {
            s,
            at_risk,
            jumps: hits,
            conditional: hits as f64 / at_risk as f64,
            expected: p,
            z: binomial_z(hits, at_risk, p),
        });
        s += spec.window;
    }
    let spread = memorylessness.iter().map(|w| w.z.abs()).fold(0.0, f64::max);
    Ok(DecayReport {
        trials: n,
        censored,
        mean_jump_time: mean,
        expected_mean: 1.0 / rate,
        mean_sigma: 1.0 / rate / (jumps.len().max(1) as f64).sqrt(),
        ks_statistic: d,
        ks_p_value: ks_p_value(d, n),
        survival,
        memorylessness,
        memorylessness_spread: spread,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeTranslationRow {
    pub s: f64,
    /// Constant `1 − e^{−2τΔ}`.
    pub collapse_conditional: f64,
    /// `e^{−2τs} − e^{−2τ(s+Δ)}`, varies with `s`.
    pub unitary_window_weight: f64,
    pub mc_conditional: Option<f64>,
    pub mc_sigma: Option<f64>,
}

/// Contrasts the memoryless conditional window probability of the jump
/// process with the unconditioned window weight of the unitary state.
pub fn time_translation_diagnostic(
    spec: &DecaySpec,
    s_values: &[f64],
    records: Option<&[TrajectoryRecord]>,
) -> Result<Vec<TimeTranslationRow>> {
    spec.validate()?;
    let rate = spec.rate();
    let p = spec.window_conditional();
    s_values
        .iter()
        .map(|&s| {
            if !(s >= 0.0 && s + spec.window <= spec.horizon + 1e-12) {
                return Err(Error::Domain(format!("s = {s} leaves the horizon")));
            }
            let (mc, sigma) = match records {
                Some(rs) => {
                    let at_risk = rs.iter().filter(|r| r.jump_time.is_none_or(|j| j >= s)).count();
                    let hits = rs
                        .iter()
                        .filter(|r| r.jump_time.is_some_and(|j| j >= s && j < s + spec.window))
                        .count();
                    if at_risk == 0 {
                        (None, None)
                    } else {
                        let f = hits as f64 / at_risk as f64;
                        (Some(f), Some((p * (1.0 - p) / at_risk as f64).sqrt()))
                    }
                }
                None => (None, None),
            };
            Ok(TimeTranslationRow {
                s,
                collapse_conditional: p,
                unitary_window_weight: (-rate * s).exp() - (-rate * (s + spec.window)).exp(),
                mc_conditional: mc,
                mc_sigma: sigma,
            })
        })
        .collect()
}

/// A scattering process with its S-matrix and out-state prepared once for
/// repeated collapse sampling.
#[derive(Clone, Debug)]
pub struct ScatteringScenario {
    registry: Registry,
    s_matrix: SMatrix,
    in_state: BasisState,
    in_signature: ContentSignature,
    out_state: StateVector,
    collapser: Collapser,
}

pub const ABSORPTION_SPECIES: [&str; 4] = ["gamma", "A", "e", "A+"];
pub const PAIR_PRODUCTION_SPECIES: [&str; 5] = ["gamma", "e", "e+", "mu", "muc"];

fn require_species(model: &InteractionModel, species: &[&str]) -> Result<()> {
    for s in species {
        if model.registry().species_by_id(s).is_none() {
            return Err(Error::Model(format!("model lacks species '{s}'")));
        }
    }
    let reg = model.registry();
    let changes = model.interaction_terms().iter().any(|t| {
        let mut created = BTreeSet::new();
        let mut removed = BTreeSet::new();
        for op in &t.ops {
            let sp = reg.mode(op.mode).species.clone();
            match op.kind {
                crate::fock::LadderKind::Create => created.insert(sp),
                crate::fock::LadderKind::Annihilate => removed.insert(sp),
            };
        }
        created != removed
    });
    if !changes {
        return Err(Error::Model("model has no content-changing interaction term".into()));
    }
    Ok(())
}

impl ScatteringScenario {
    pub fn prepare(model: &InteractionModel, in_state: BasisState, opts: &SMatrixOptions) -> Result<Self> {
        let ham = build_hamiltonians(model)?;
        let s_matrix = extract_s_matrix(model, &ham, opts)?;
        Self::from_s_matrix(model.registry().clone(), s_matrix, in_state)
    }

    pub fn from_s_matrix(registry: Registry, s_matrix: SMatrix, in_state: BasisState) -> Result<Self> {
        let out_state = s_matrix.apply(&StateVector::basis(in_state.clone()))?;
        let collapser = Collapser::new(&registry, &out_state)?;
        Ok(Self {
            in_signature: signature(&registry, &in_state),
            registry,
            s_matrix,
            in_state,
            out_state,
            collapser,
        })
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn s_matrix(&self) -> &SMatrix {
        &self.s_matrix
    }

    pub fn in_state(&self) -> &BasisState {
        &self.in_state
    }

    pub fn in_signature(&self) -> &ContentSignature {
        &self.in_signature
    }

    /// `S|in⟩`, the unitary description.
    pub fn out_state(&self) -> &StateVector {
        &self.out_state
    }

    pub fn collapser(&self) -> &Collapser {
        &self.collapser
    }

    pub fn sample(&self, seed: &SeedPath) -> CollapseEvent {
        self.collapser.sample(seed, &self.in_signature, self.s_matrix.half_time())
    }

    /// Sector frequencies over streams `root:first+i`.
    pub fn frequencies(&self, root: u64, first_stream: u64, trials: usize) -> Result<FrequencyReport> {
        if trials == 0 {
            return Err(Error::Input("trials must be at least 1".into()));
        }
        let n = self.collapser.signatures().len();
        let (counts, cross) = (0..trials)
            .into_par_iter()
            .map(|i| {
                let ev = self.sample(&SeedPath::new(root, first_stream + i as u64));
                let k = self
                    .collapser
                    .signatures()
                    .iter()
                    .position(|s| *s == ev.chosen_signature)
                    .expect("sampled from the list");
                let cross = is_cross_sector_superposition(&self.registry, &ev.post_state, DEFAULT_SECTOR_EPSILON);
                (k, cross as usize)
            })
            .fold(
                || (vec![0usize; n], 0usize),
                |(mut c, x), (k, cr)| {
                    c[k] += 1;
                    (c, x + cr)
                },
            )
            .reduce(
                || (vec![0usize; n], 0usize),
                |(mut a, xa), (b, xb)| {
                    for (p, q) in a.iter_mut().zip(b) {
                        *p += q;
                    }
                    (a, xa + xb)
                },
            );
        let rows = self
            .collapser
            .signatures()
            .iter()
            .zip(self.collapser.probabilities())
            .zip(&counts)
            .map(|((sig, &p), &k)| SectorFrequency {
                signature: sig.clone(),
                count: k,
                frequency: k as f64 / trials as f64,
                probability: p,
                z: binomial_z(k, trials, p),
            })
            .collect::<Vec<_>>();
        Ok(FrequencyReport {
            trials,
            root_seed: root,
            probability_sum: rows.iter().map(|r| r.probability).sum(),
            max_abs_z: rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max),
            cross_sector_post_states: cross,
            rows,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorFrequency {
    pub signature: ContentSignature,
    pub count: usize,
    pub frequency: f64,
    pub probability: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub trials: usize,
    pub root_seed: u64,
    pub rows: Vec<SectorFrequency>,
    pub probability_sum: f64,
    pub max_abs_z: f64,
    pub cross_sector_post_states: usize,
}

impl FrequencyReport {
    pub fn probability_of(&self, sig: &ContentSignature) -> f64 {
        self.rows
            .iter()
            .find(|r| &r.signature == sig)
            .map_or(0.0, |r| r.probability)
    }
}

/// `|γ, A⟩` scattered and collapsed onto `{γ,A}` or `{e,A⁺}`.
pub fn absorption_scenario(model: &InteractionModel, opts: &SMatrixOptions) -> Result<ScatteringScenario> {
    require_species(model, &ABSORPTION_SPECIES)?;
    let reg = model.registry();
    let in_state = BasisState::from_occupations([
        (reg.modes_of("gamma")[0], 1),
        (reg.modes_of("A")[0], 1),
    ]);
    ScatteringScenario::prepare(model, in_state, opts)
}

/// `|γ⟩` scattered into `{γ}`, `{e,e⁺}` or `{μ,μᶜ}`.
pub fn pair_production_scenario(model: &InteractionModel, opts: &SMatrixOptions) -> Result<ScatteringScenario> {
    require_species(model, &PAIR_PRODUCTION_SPECIES)?;
    let in_state = BasisState::single(model.registry().modes_of("gamma")[0]);
    ScatteringScenario::prepare(model, in_state, opts)
}
