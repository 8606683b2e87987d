//! Cluster decomposition of a three-particle S-matrix, momentum
//! conservation exclusivity, and the two-detector signaling comparison.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collapse::Collapser;
use crate::dynamics::SMatrix;
use crate::error::{Error, Result};
use crate::fock::{BasisState, Mode, ModeId, MomentumGrid, ParticleSpecies, Registry, StateVector};
use crate::linalg::{frobenius, identity, CMatrix};
use crate::measurement::ModeTransform;
use crate::rng::SeedPath;
use crate::stats::two_proportion_z;

/// Particle pairs in a fixed order: (1,2), (1,3), (2,3), zero-based.
pub const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// S restricted to the three-particle sector and to each two-particle
/// sector with the third particle absent. Particles are distinguishable;
/// a three-particle index is `(i₁ n₂ + i₂) n₃ + i₃`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThreeBodyBlocks {
    pub dims: [usize; 3],
    pub s123: CMatrix,
    /// Indexed like [`PAIRS`].
    pub pair_blocks: [CMatrix; 3],
}

impl ThreeBodyBlocks {
    pub fn new(dims: [usize; 3], s123: CMatrix, pair_blocks: [CMatrix; 3]) -> Result<Self> {
        let n = dims.iter().product::<usize>();
        if dims.contains(&0) || s123.shape() != (n, n) {
            return Err(Error::Input("three-particle block has the wrong shape".into()));
        }
        for (k, (a, b)) in PAIRS.iter().enumerate() {
            let m = dims[*a] * dims[*b];
            if pair_blocks[k].shape() != (m, m) {
                return Err(Error::Input(format!("pair block ({}, {}) has the wrong shape", a + 1, b + 1)));
            }
        }
        Ok(Self { dims, s123, pair_blocks })
    }

    /// Sub-blocks of a model S-matrix for three distinct species, one
    /// particle of each.
    pub fn from_s_matrix(reg: &Registry, s: &SMatrix, species: [&str; 3]) -> Result<Self> {
        if species[0] == species[1] || species[0] == species[2] || species[1] == species[2] {
            return Err(Error::Input("three distinct species are required".into()));
        }
        let modes: Vec<Vec<ModeId>> = species
            .iter()
            .map(|sp| {
                if reg.species_by_id(sp).is_none() {
                    return Err(Error::Input(format!("unknown species '{sp}'")));
                }
                Ok(reg.modes_of(sp))
            })
            .collect::<Result<_>>()?;
        let dims = [modes[0].len(), modes[1].len(), modes[2].len()];
        if dims.contains(&0) {
            return Err(Error::Input("every species needs at least one mode".into()));
        }
        let lookup = |states: Vec<BasisState>| -> Result<Vec<usize>> {
            states
                .iter()
                .map(|b| {
                    s.basis()
                        .index_of(b)
                        .ok_or_else(|| Error::Input("S-matrix basis lacks part of the three-particle sector".into()))
                })
                .collect()
        };
        let mut three = Vec::new();
        for &a in &modes[0] {
            for &b in &modes[1] {
                for &c in &modes[2] {
                    three.push(BasisState::from_occupations([(a, 1), (b, 1), (c, 1)]));
                }
            }
        }
        let idx3 = lookup(three)?;
        let sub = |idx: &[usize]| CMatrix::from_fn(idx.len(), idx.len(), |i, j| s.entries()[(idx[i], idx[j])]);
        let mut pair_blocks = Vec::new();
        for (p, q) in PAIRS {
            let mut two = Vec::new();
            for &a in &modes[p] {
                for &b in &modes[q] {
                    two.push(BasisState::from_occupations([(a, 1), (b, 1)]));
                }
            }
            pair_blocks.push(sub(&lookup(two)?));
        }
        let pair_blocks: [CMatrix; 3] = pair_blocks.try_into().expect("three pairs");
        Self::new(dims, sub(&idx3), pair_blocks)
    }
}

fn split(dims: [usize; 3], i: usize) -> [usize; 3] {
    [i / (dims[1] * dims[2]), (i / dims[2]) % dims[1], i % dims[2]]
}

/// `C_pq ⊗ δ(spectator)` on the three-particle sector.
pub fn embed_pair(dims: [usize; 3], pair: (usize, usize), block: &CMatrix) -> CMatrix {
    let n = dims.iter().product::<usize>();
    let (p, q) = pair;
    let k = 3 - p - q;
    CMatrix::from_fn(n, n, |r, c| {
        let (ri, ci) = (split(dims, r), split(dims, c));
        if ri[k] != ci[k] {
            return Complex64::new(0.0, 0.0);
        }
        block[(ri[p] * dims[q] + ri[q], ci[p] * dims[q] + ci[q])]
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterDecomposition {
    pub dims: [usize; 3],
    pub connected_3: CMatrix,
    /// `S_pq − I` for each pair, indexed like [`PAIRS`].
    pub connected_2: [CMatrix; 3],
    pub identity_term: bool,
}

impl ClusterDecomposition {
    /// `I + Σ C_pq ⊗ δ + C₁₂₃`.
    pub fn reassemble(&self) -> CMatrix {
        let n = self.dims.iter().product::<usize>();
        let mut out = if self.identity_term { identity(n) } else { CMatrix::zeros(n, n) };
        for (k, pair) in PAIRS.iter().enumerate() {
            out += embed_pair(self.dims, *pair, &self.connected_2[k]);
        }
        out + &self.connected_3
    }

    /// Frobenius norms of `C₁₂₃` and each `C_pq`.
    pub fn term_norms(&self) -> (f64, [f64; 3]) {
        (
            frobenius(&self.connected_3),
            [
                frobenius(&self.connected_2[0]),
                frobenius(&self.connected_2[1]),
                frobenius(&self.connected_2[2]),
            ],
        )
    }
}

/// Splits the three-particle block into the identity, the pair-connected
/// parts with spectator deltas, and the remainder `C₁₂₃`.
pub fn cluster_decompose_3(blocks: &ThreeBodyBlocks) -> ClusterDecomposition {
    let dims = blocks.dims;
    let connected_2 = blocks
        .pair_blocks
        .clone()
        .map(|b| {
            let n = b.nrows();
            b - identity(n)
        });
    let n = dims.iter().product::<usize>();
    let mut c3 = &blocks.s123 - identity(n);
    for (k, pair) in PAIRS.iter().enumerate() {
        c3 -= embed_pair(dims, *pair, &connected_2[k]);
    }
    ClusterDecomposition {
        dims,
        connected_3: c3,
        connected_2,
        identity_term: true,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Separation {
    pub pair_12: bool,
    pub pair_13: bool,
    pub pair_23: bool,
}

impl Separation {
    fn flags(&self) -> [bool; 3] {
        [self.pair_12, self.pair_13, self.pair_23]
    }
}

/// Drops every connected term that would join space-like separated
/// particles: `C₁₂₃` if any pair is separated, and `C_pq` for each
/// separated pair.
pub fn spacelike_prune(decomp: &ClusterDecomposition, sep: &Separation) -> ClusterDecomposition {
    let flags = sep.flags();
    let mut out = decomp.clone();
    if flags.iter().any(|&f| f) {
        out.connected_3.fill(Complex64::new(0.0, 0.0));
    }
    for (k, &f) in flags.iter().enumerate() {
        if f {
            out.connected_2[k].fill(Complex64::new(0.0, 0.0));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExclusivityOutcome {
    pub q2_out: Vec<i32>,
    pub q3_out: Vec<i32>,
    /// Particles 1,3 interact and 2 is a spectator.
    pub branch_13: bool,
    /// Particles 1,2 interact and 3 is a spectator.
    pub branch_12: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExclusivityReport {
    pub q1: Vec<i32>,
    pub outcomes: Vec<ExclusivityOutcome>,
    pub feasible_13: usize,
    pub feasible_12: usize,
    pub simultaneous: usize,
}

/// Which momentum-conservation branches an outcome satisfies, in the frame
/// `q₂ = q₃ = q₁' = 0`.
pub fn exclusivity_branches(q1: &[i32], q2_out: &[i32], q3_out: &[i32]) -> (bool, bool) {
    let zero = |v: &[i32]| v.iter().all(|&x| x == 0);
    let branch_13 = zero(q2_out) && q3_out == q1;
    let branch_12 = zero(q3_out) && q2_out == q1;
    (branch_13, branch_12)
}

/// Enumerates every grid outcome `(q₂', q₃')` and classifies it.
pub fn momentum_exclusivity_check(grid: &MomentumGrid, q1: &[i32]) -> Result<ExclusivityReport> {
    if q1.len() != grid.dims() {
        return Err(Error::Input(format!("q1 has {} components, grid has {}", q1.len(), grid.dims())));
    }
    if q1.iter().all(|&x| x == 0) {
        return Err(Error::Domain("degenerate frame: q1 = 0".into()));
    }
    let points = grid.points();
    let mut outcomes = Vec::new();
    for q2 in &points {
        for q3 in &points {
            let (b13, b12) = exclusivity_branches(q1, q2, q3);
            outcomes.push(ExclusivityOutcome {
                q2_out: q2.clone(),
                q3_out: q3.clone(),
                branch_13: b13,
                branch_12: b12,
            });
        }
    }
    Ok(ExclusivityReport {
        q1: q1.to_vec(),
        feasible_13: outcomes.iter().filter(|o| o.branch_13).count(),
        feasible_12: outcomes.iter().filter(|o| o.branch_12).count(),
        simultaneous: outcomes.iter().filter(|o| o.branch_13 && o.branch_12).count(),
        outcomes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalingReport {
    pub p_m: f64,
    pub trials: usize,
    /// Detector-1 frequency with both detectors on.
    pub p_both_on: f64,
    /// Detector-1 frequency with detector 2 off.
    pub p_one_off: f64,
    pub expected_both_on: f64,
    pub expected_one_off: f64,
    pub z_statistic: f64,
}

/// The hypothetical process in which a photon is caught by both detectors
/// with probability `p_M` and by either one alone with `(1 − p_M)/2`.
/// Run `i` draws at `root:i:0` with both detectors on and at `root:i:1`
/// with detector 2 off.
pub fn no_signaling_mc(p_m: f64, trials: usize, root: u64) -> Result<SignalingReport> {
    if !(0.0..=1.0).contains(&p_m) {
        return Err(Error::Input(format!("p_M = {p_m} is not a probability")));
    }
    if trials == 0 {
        return Err(Error::Input("trials must be at least 1".into()));
    }
    let p_s = (1.0 - p_m) / 2.0;
    let both: usize = (0..trials)
        .into_par_iter()
        .filter(|&i| SeedPath::new(root, i as u64).rng().random::<f64>() < p_m + p_s)
        .count();
    let off: usize = (0..trials)
        .into_par_iter()
        .filter(|&i| SeedPath::new(root, i as u64).with_step(1).rng().random::<f64>() < 0.5)
        .count();
    Ok(SignalingReport {
        p_m,
        trials,
        p_both_on: both as f64 / trials as f64,
        p_one_off: off as f64 / trials as f64,
        expected_both_on: p_m + p_s,
        expected_one_off: 0.5,
        z_statistic: two_proportion_z(both, trials, off, trials),
    })
}

/// One photon split over two paths toward two detectors. Detection turns
/// the photon into `D1` or `D2`; a switched-off detector lets it pass.
pub struct TwoDetectorSetup {
    registry: Registry,
    input: StateVector,
    paths: [ModeId; 2],
    detectors: [ModeId; 2],
}

impl Default for TwoDetectorSetup {
    fn default() -> Self {
        Self::new()
    }
}

impl TwoDetectorSetup {
    pub fn new() -> Self {
        let registry = Registry::builder(MomentumGrid::line(2), 2)
            .species(ParticleSpecies::boson("photon", 1))
            .species(ParticleSpecies::boson("D1", 1))
            .species(ParticleSpecies::boson("D2", 1))
            .mode(Mode::new("photon", vec![0], 0))
            .mode(Mode::new("photon", vec![1], 0))
            .simple_mode("D1")
            .simple_mode("D2")
            .build()
            .expect("valid registry");
        let paths = [registry.modes_of("photon")[0], registry.modes_of("photon")[1]];
        let detectors = [registry.modes_of("D1")[0], registry.modes_of("D2")[0]];
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let input = StateVector::from_amplitudes(paths.map(|m| (BasisState::single(m), Complex64::new(r, 0.0))));
        Self {
            registry,
            input,
            paths,
            detectors,
        }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn out_state(&self, detector_2_on: bool) -> Result<StateVector> {
        let one = Complex64::new(1.0, 0.0);
        let mut t = ModeTransform::identity().with(self.paths[0], vec![(self.detectors[0], one)]);
        if detector_2_on {
            t = t.with(self.paths[1], vec![(self.detectors[1], one)]);
        }
        t.apply(&self.registry, &self.input)
    }
}

/// The same comparison driven by the engine's collapse rule. A mutual
/// detection sector never appears, so `p_M = 0` and the detector-1
/// frequency does not depend on the other detector. Draws follow the
/// layout of [`no_signaling_mc`].
pub fn two_detector_scenario(trials: usize, root: u64) -> Result<SignalingReport> {
    if trials == 0 {
        return Err(Error::Input("trials must be at least 1".into()));
    }
    let setup = TwoDetectorSetup::new();
    let count_d1 = |on: bool, step: u32| -> Result<(usize, f64, f64)> {
        let col = Collapser::new(setup.registry(), &setup.out_state(on)?)?;
        let counts = col.tally_at_step(root, 0, trials, step);
        let mut d1 = 0;
        let mut p1 = 0.0;
        let mut mutual = 0.0;
        for ((sig, n), p) in col.signatures().iter().zip(&counts).zip(col.probabilities()) {
            if sig.contains("D1") {
                d1 += n;
                p1 += p;
            }
            if sig.contains("D1") && sig.contains("D2") {
                mutual += p;
            }
        }
        Ok((d1, p1, mutual))
    };
    let (both, p_both, p_m) = count_d1(true, 0)?;
    let (off, p_off, _) = count_d1(false, 1)?;
    Ok(SignalingReport {
        p_m,
        trials,
        p_both_on: both as f64 / trials as f64,
        p_one_off: off as f64 / trials as f64,
        expected_both_on: p_both,
        expected_one_off: p_off,
        z_statistic: two_proportion_z(both, trials, off, trials),
    })
}
