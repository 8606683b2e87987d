//! Sector-level Born probabilities, stochastic sector selection, the
//! sector transition matrix Γ and a unistochasticity checker.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::SMatrix;
use crate::error::{Error, Result};
use crate::fock::{BasisState, Registry, StateVector};
use crate::linalg::CMatrix;
use crate::rng::SeedPath;
use crate::sectors::{sector_decompose, signature, ContentSignature, DEFAULT_SECTOR_EPSILON};

/// Row-sum tolerance for stochastic matrices.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-9;
/// Out-signatures with less total mass than this are left out of Γ.
pub const GAMMA_MASS_FLOOR: f64 = 1e-14;

pub fn sector_probabilities(reg: &Registry, out_state: &StateVector) -> Result<BTreeMap<ContentSignature, f64>> {
    Ok(sector_decompose(reg, out_state, DEFAULT_SECTOR_EPSILON)?.probabilities())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollapseEvent {
    pub time_tag: f64,
    pub in_signature: ContentSignature,
    pub chosen_signature: ContentSignature,
    pub sector_probability: f64,
    /// Normalized, supported on the chosen sector only.
    pub post_state: StateVector,
    pub seed_path: SeedPath,
    /// True when the input had a single sector and no draw was made.
    pub deterministic: bool,
}

/// A decomposed out-state ready for repeated sampling.
#[derive(Clone, Debug)]
pub struct Collapser {
    signatures: Vec<ContentSignature>,
    probabilities: Vec<f64>,
    components: Vec<StateVector>,
    single_sector_input: Option<StateVector>,
}

impl Collapser {
    pub fn new(reg: &Registry, out_state: &StateVector) -> Result<Self> {
        let d = sector_decompose(reg, out_state, DEFAULT_SECTOR_EPSILON)?;
        let mut signatures = Vec::new();
        let mut probabilities = Vec::new();
        let mut components = Vec::new();
        for (sig, part) in d.parts() {
            signatures.push(sig.clone());
            probabilities.push(part.probability);
            components.push(part.component.clone());
        }
        let single_sector_input = if d.len() == 1 && d.dropped_weight() == 0.0 {
            Some(out_state.normalize()?)
        } else {
            None
        };
        Ok(Self {
            signatures,
            probabilities,
            components,
            single_sector_input,
        })
    }

    /// Sorted sector labels.
    pub fn signatures(&self) -> &[ContentSignature] {
        &self.signatures
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn is_deterministic(&self) -> bool {
        self.signatures.len() == 1
    }

    /// Index of the sampled sector. Draws one uniform from the seed path
    /// unless there is only one sector.
    pub fn sample_index(&self, seed: &SeedPath) -> usize {
        if self.is_deterministic() {
            return 0;
        }
        let mut rng = seed.rng();
        self.index_for(rng.random::<f64>())
    }

    fn index_for(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, p) in self.probabilities.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probabilities.len() - 1
    }

    pub fn sample(&self, seed: &SeedPath, in_signature: &ContentSignature, time_tag: f64) -> CollapseEvent {
        let k = self.sample_index(seed);
        let post_state = match &self.single_sector_input {
            Some(s) => s.clone(),
            None => self.components[k].clone(),
        };
        CollapseEvent {
            time_tag,
            in_signature: in_signature.clone(),
            chosen_signature: self.signatures[k].clone(),
            sector_probability: self.probabilities[k],
            post_state,
            seed_path: *seed,
            deterministic: self.is_deterministic(),
        }
    }

    /// Sector counts over `trials` independent streams `root:first+i:0`.
    /// Parallel and order-independent.
    pub fn tally(&self, root: u64, first_stream: u64, trials: usize) -> Vec<usize> {
        self.tally_at_step(root, first_stream, trials, 0)
    }

    /// Like [`Collapser::tally`] with draws taken at `root:first+i:step`.
    pub fn tally_at_step(&self, root: u64, first_stream: u64, trials: usize, step: u32) -> Vec<usize> {
        let n = self.signatures.len();
        (0..trials)
            .into_par_iter()
            .map(|i| self.sample_index(&SeedPath::new(root, first_stream + i as u64).with_step(step)))
            .fold(
                || vec![0usize; n],
                |mut acc, k| {
                    acc[k] += 1;
                    acc
                },
            )
            .reduce(
                || vec![0usize; n],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                },
            )
    }
}

/// Samples one sector of `out_state` with probability equal to its weight
/// and returns the renormalized projection onto it.
pub fn collapse_sample(
    reg: &Registry,
    seed: &SeedPath,
    out_state: &StateVector,
    in_signature: &ContentSignature,
    time_tag: f64,
) -> Result<CollapseEvent> {
    Ok(Collapser::new(reg, out_state)?.sample(seed, in_signature, time_tag))
}

/// Input distribution over basis states for one row of Γ.
#[derive(Clone, Debug, PartialEq)]
pub enum RowWeights {
    PointMass(BasisState),
    /// Uniform over every basis state of the S-matrix with this signature.
    Uniform(ContentSignature),
    Weighted(Vec<(BasisState, f64)>),
}

/// Right-stochastic sector transition matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaMatrix {
    pub row_labels: Vec<ContentSignature>,
    pub col_labels: Vec<ContentSignature>,
    pub entries: DMatrix<f64>,
}

impl GammaMatrix {
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn is_square(&self) -> bool {
        self.entries.is_square()
    }

    pub fn max_row_sum_error(&self) -> f64 {
        self.entries
            .row_iter()
            .map(|r| (r.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Entry by labels; zero for a column label that is absent.
    pub fn get(&self, row: &ContentSignature, col: &ContentSignature) -> Option<f64> {
        let i = self.row_labels.iter().position(|l| l == row)?;
        Some(
            self.col_labels
                .iter()
                .position(|l| l == col)
                .map(|j| self.entries[(i, j)])
                .unwrap_or(0.0),
        )
    }

    /// Plain-text table: `#` header of column labels, then one
    /// whitespace-separated row per line.
    pub fn to_table(&self) -> String {
        let mut out = String::from("#");
        for l in &self.col_labels {
            let _ = write!(out, " {l}");
        }
        out.push('\n');
        for r in self.entries.row_iter() {
            let row: Vec<String> = r.iter().map(|x| format!("{x:.17e}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Parses a plain-text numeric table. Lines starting with `#` carry
/// optional labels; blank lines are ignored.
pub fn parse_table(text: &str) -> Result<(Option<Vec<String>>, DMatrix<f64>)> {
    let mut labels = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if labels.is_none() && rows.is_empty() {
                let l: Vec<String> = rest.split_whitespace().map(String::from).collect();
                if !l.is_empty() {
                    labels = Some(l);
                }
            }
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Input(format!("line {}: '{t}' is not a number", lineno + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Input(format!(
                    "line {}: expected {} columns, found {}",
                    lineno + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Input("table has no rows".into()));
    }
    let (r, c) = (rows.len(), rows[0].len());
    if let Some(l) = &labels {
        if l.len() != c {
            return Err(Error::Input(format!("{} labels for {c} columns", l.len())));
        }
    }
    Ok((labels, DMatrix::from_fn(r, c, |i, j| rows[i][j])))
}

/// Aggregates `|S_βα|²` into sector transition probabilities. Rows follow
/// `rows`; columns list the row labels first, then every further
/// out-signature that receives mass, sorted.
pub fn gamma_from_s(reg: &Registry, s: &SMatrix, rows: &[RowWeights]) -> Result<GammaMatrix> {
    if rows.is_empty() {
        return Err(Error::Input("Γ needs at least one row".into()));
    }
    let basis = s.basis();
    let sigs: Vec<ContentSignature> = basis.states().iter().map(|b| signature(reg, b)).collect();
    let mut row_labels = Vec::new();
    let mut row_masses: Vec<BTreeMap<ContentSignature, f64>> = Vec::new();
    for spec in rows {
        let weights: Vec<(usize, f64)> = match spec {
            RowWeights::PointMass(b) => vec![(s.index(b)?, 1.0)],
            RowWeights::Uniform(sig) => {
                let idx: Vec<usize> = (0..basis.len()).filter(|&i| &sigs[i] == sig).collect();
                if idx.is_empty() {
                    return Err(Error::Index(format!("no basis state with signature {sig}")));
                }
                let w = 1.0 / idx.len() as f64;
                idx.into_iter().map(|i| (i, w)).collect()
            }
            RowWeights::Weighted(items) => {
                let total: f64 = items.iter().map(|(_, w)| w).sum();
                if items.is_empty() || !(total > 0.0) || items.iter().any(|(_, w)| *w < 0.0) {
                    return Err(Error::Input("row weights must be non-negative with positive sum".into()));
                }
                items
                    .iter()
                    .map(|(b, w)| Ok((s.index(b)?, w / total)))
                    .collect::<Result<_>>()?
            }
        };
        let label = sigs[weights[0].0].clone();
        if weights.iter().any(|(i, _)| sigs[*i] != label) {
            return Err(Error::Input(format!("row {label} mixes in-signatures")));
        }
        if row_labels.contains(&label) {
            return Err(Error::Input(format!("duplicate Γ row {label}")));
        }
        let mut mass: BTreeMap<ContentSignature, f64> = BTreeMap::new();
        for (alpha, w) in weights {
            for (beta, amp) in s.entries().column(alpha).iter().enumerate() {
                *mass.entry(sigs[beta].clone()).or_insert(0.0) += w * amp.norm_sqr();
            }
        }
        row_labels.push(label);
        row_masses.push(mass);
    }
    let mut extra: BTreeSet<ContentSignature> = BTreeSet::new();
    for m in &row_masses {
        for (sig, p) in m {
            if *p > GAMMA_MASS_FLOOR && !row_labels.contains(sig) {
                extra.insert(sig.clone());
            }
        }
    }
    let col_labels: Vec<ContentSignature> = row_labels.iter().cloned().chain(extra).collect();
    let entries = DMatrix::from_fn(row_labels.len(), col_labels.len(), |i, j| {
        row_masses[i].get(&col_labels[j]).copied().unwrap_or(0.0)
    });
    Ok(GammaMatrix {
        row_labels,
        col_labels,
        entries,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    True,
    False,
    Undecided,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnistochasticVerdict {
    pub verdict: Verdict,
    pub witness: Option<CMatrix>,
    /// `max |U_ij|² − G_ij|` of the witness.
    pub witness_error: Option<f64>,
    pub reason: String,
}

impl UnistochasticVerdict {
    fn negative(reason: impl Into<String>) -> Self {
        Self {
            verdict: Verdict::False,
            witness: None,
            witness_error: None,
            reason: reason.into(),
        }
    }
}

/// `max_ij | |U_ij|² − G_ij |`.
pub fn witness_error(u: &CMatrix, g: &DMatrix<f64>) -> f64 {
    u.iter()
        .zip(g.iter())
        .map(|(x, y)| (x.norm_sqr() - y).abs())
        .fold(0.0, f64::max)
}

/// Seed for the numerical phase search used on matrices larger than 3×3.
pub const UNISTOCHASTIC_SEARCH_SEED: u64 = 0x5ec7_0512;

/// Decides whether `G_ij = |U_ij|²` for some unitary `U`.
///
/// 2×2 is settled in closed form. 3×3 uses the triangle conditions on
/// `√(G_ik G_jk)` and builds the witness from the closed triangle. Larger
/// matrices are screened with the polygon conditions and then searched
/// numerically; a failed search is reported as undecided.
pub fn is_unistochastic(g: &DMatrix<f64>, tol: f64) -> Result<UnistochasticVerdict> {
    if !g.is_square() || g.nrows() == 0 {
        return Err(Error::Input(format!("matrix is {}×{}, not square", g.nrows(), g.ncols())));
    }
    if g.iter().any(|x| !x.is_finite() || *x < -STOCHASTIC_TOLERANCE) {
        return Err(Error::Input("matrix has negative or non-finite entries".into()));
    }
    let row_err = g.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max);
    if row_err > STOCHASTIC_TOLERANCE.max(tol) {
        return Err(Error::Input(format!("rows do not sum to 1 (max error {row_err:.3e})")));
    }
    let col_err = g.column_iter().map(|c| (c.sum() - 1.0).abs()).fold(0.0, f64::max);
    if col_err > STOCHASTIC_TOLERANCE.max(tol) {
        return Ok(UnistochasticVerdict::negative(format!(
            "not doubly stochastic (column-sum error {col_err:.3e})"
        )));
    }
    let n = g.nrows();
    let r = g.map(|x| x.max(0.0).sqrt());
    let candidate = match n {
        1 => Some(CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0))),
        2 => Some(two_by_two(g[(0, 0)])),
        _ => {
            if let Some(reason) = polygon_violation(g, tol) {
                return Ok(UnistochasticVerdict::negative(reason));
            }
            if n == 3 {
                three_by_three(&r)
            } else {
                None
            }
        }
    };
    if let Some(u) = candidate {
        let err = witness_error(&u, g);
        if err < tol {
            return Ok(accept(u, err, "closed-form witness"));
        }
    }
    if n >= 3 {
        if let Some(u) = phase_search(&r, tol, UNISTOCHASTIC_SEARCH_SEED) {
            let err = witness_error(&u, g);
            if err < tol {
                return Ok(accept(u, err, "numerical witness"));
            }
        }
    }
    Ok(UnistochasticVerdict {
        verdict: Verdict::Undecided,
        witness: None,
        witness_error: None,
        reason: "phase search did not reach the tolerance".into(),
    })
}

fn accept(u: CMatrix, err: f64, reason: &str) -> UnistochasticVerdict {
    UnistochasticVerdict {
        verdict: Verdict::True,
        witness: Some(u),
        witness_error: Some(err),
        reason: reason.into(),
    }
}

fn two_by_two(p: f64) -> CMatrix {
    let p = p.clamp(0.0, 1.0);
    let (a, b) = (p.sqrt(), (1.0 - p).sqrt());
    CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(a, 0.0),
            Complex64::new(b, 0.0),
            Complex64::new(-b, 0.0),
            Complex64::new(a, 0.0),
        ],
    )
}

/// Orthogonality of two rows (or columns) needs the moduli
/// `√(G_ik G_jk)` to close into a polygon.
fn polygon_violation(g: &DMatrix<f64>, tol: f64) -> Option<String> {
    let n = g.nrows();
    for (what, m) in [("rows", g.clone()), ("columns", g.transpose())] {
        for i in 0..n {
            for j in i + 1..n {
                let sides: Vec<f64> = (0..n).map(|k| (m[(i, k)] * m[(j, k)]).max(0.0).sqrt()).collect();
                let total: f64 = sides.iter().sum();
                let longest = sides.iter().cloned().fold(0.0, f64::max);
                if longest - (total - longest) > tol {
                    return Some(format!(
                        "{what} {i} and {j} cannot be orthogonal: side {longest:.6} exceeds the rest {:.6}",
                        total - longest
                    ));
                }
            }
        }
    }
    None
}

/// Phases `(φ₁, φ₂)` with `a + b e^{iφ₁} + c e^{iφ₂} = 0` for a closed
/// triangle.
fn triangle_phases(a: f64, b: f64, c: f64) -> (f64, f64) {
    use std::f64::consts::PI;
    if a == 0.0 && b == 0.0 {
        return (0.0, 0.0);
    }
    if a == 0.0 {
        return (0.0, PI);
    }
    if b == 0.0 {
        return (0.0, PI);
    }
    let cos1 = ((c * c - a * a - b * b) / (2.0 * a * b)).clamp(-1.0, 1.0);
    let phi1 = cos1.acos();
    let rest = -(Complex64::new(a, 0.0) + Complex64::from_polar(b, phi1));
    let phi2 = if rest.norm() == 0.0 { 0.0 } else { rest.arg() };
    (phi1, phi2)
}

fn three_by_three(r: &DMatrix<f64>) -> Option<CMatrix> {
    let a = r[(0, 0)] * r[(1, 0)];
    let b = r[(0, 1)] * r[(1, 1)];
    let c = r[(0, 2)] * r[(1, 2)];
    let (p1, p2) = triangle_phases(a, b, c);
    let row0 = [r[(0, 0)], r[(0, 1)], r[(0, 2)]].map(|x| Complex64::new(x, 0.0));
    let row1 = [
        Complex64::new(r[(1, 0)], 0.0),
        Complex64::from_polar(r[(1, 1)], p1),
        Complex64::from_polar(r[(1, 2)], p2),
    ];
    // unit vector orthogonal to both rows
    let cross = [
        row0[1] * row1[2] - row0[2] * row1[1],
        row0[2] * row1[0] - row0[0] * row1[2],
        row0[0] * row1[1] - row0[1] * row1[0],
    ]
    .map(|z| z.conj());
    let mut u = CMatrix::zeros(3, 3);
    for k in 0..3 {
        u[(0, k)] = row0[k];
        u[(1, k)] = row1[k];
        u[(2, k)] = cross[k];
    }
    Some(u)
}

/// Nearest unitary `W V†` from the SVD `M = W Σ V†`.
fn polar_unitary(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    svd.u.expect("requested") * svd.v_t.expect("requested")
}

/// Alternates between imposing the moduli `r` and projecting onto the
/// unitary group, from several seeded random phase starts.
fn phase_search(r: &DMatrix<f64>, tol: f64, seed: u64) -> Option<CMatrix> {
    let n = r.nrows();
    let g = r.map(|x| x * x);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut best: Option<(f64, CMatrix)> = None;
    for _ in 0..16 {
        let mut m = CMatrix::from_fn(n, n, |i, j| {
            Complex64::from_polar(r[(i, j)], rng.random::<f64>() * std::f64::consts::TAU)
        });
        let mut u = polar_unitary(&m);
        for _ in 0..5000 {
            let err = witness_error(&u, &g);
            if err < tol * 1e-2 {
                break;
            }
            m = CMatrix::from_fn(n, n, |i, j| {
                let z = u[(i, j)];
                let phase = if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) };
                phase * r[(i, j)]
            });
            u = polar_unitary(&m);
        }
        let err = witness_error(&u, &g);
        if best.as_ref().is_none_or(|(e, _)| err < *e) {
            best = Some((err, u));
        }
        if err < tol {
            break;
        }
    }
    best.map(|(_, u)| u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_hamiltonians, extract_s_matrix, SMatrixOptions};
    use crate::fock::{create, Mode, MomentumGrid, ParticleSpecies};
    use crate::linalg::{unitarity_defect, DenseBasis};
    use crate::stats::binomial_z;
    use crate::toys::DecayToy;

    fn reg() -> Registry {
        Registry::builder(MomentumGrid::line(1), 3)
            .species(ParticleSpecies::boson("gamma", 2))
            .species(ParticleSpecies::fermion("e"))
            .species(ParticleSpecies::fermion("e+"))
            .simple_mode("gamma")
            .simple_mode("e")
            .simple_mode("e+")
            .build()
            .unwrap()
    }

    fn id(r: &Registry, s: &str) -> crate::fock::ModeId {
        r.mode_id(&Mode::new(s, vec![0], 0)).unwrap()
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn photon_or_pair(r: &Registry) -> StateVector {
        let photon = StateVector::basis(BasisState::single(id(r, "gamma")));
        let pair = StateVector::basis(BasisState::from_occupations([(id(r, "e"), 1), (id(r, "e+"), 1)]));
        photon.scale(c(0.6)).add(&pair.scale(c(0.8)))
    }

    #[test]
    fn probabilities_of_photon_or_pair() {
        let r = reg();
        let p = sector_probabilities(&r, &photon_or_pair(&r)).unwrap();
        assert!((p[&ContentSignature::new(["gamma"])] - 0.36).abs() < 1e-12);
        assert!((p[&ContentSignature::new(["e", "e+"])] - 0.64).abs() < 1e-12);
        assert!(matches!(sector_probabilities(&r, &StateVector::zero()), Err(Error::DegenerateState(_))));
    }

    #[test]
    fn single_sector_is_deterministic() {
        let r = reg();
        let s = StateVector::basis(BasisState::single(id(&r, "gamma")));
        let ev = collapse_sample(&r, &SeedPath::new(1, 2), &s, &ContentSignature::vacuum(), 0.0).unwrap();
        assert!(ev.deterministic);
        assert_eq!(ev.post_state, s);
        assert_eq!(ev.sector_probability, 1.0);
    }

    #[test]
    fn frequencies_follow_born_weights() {
        let r = reg();
        let col = Collapser::new(&r, &photon_or_pair(&r)).unwrap();
        let n = 100_000;
        let counts = col.tally(42, 0, n);
        let k = col.signatures().iter().position(|s| s.contains("gamma")).unwrap();
        assert!(binomial_z(counts[k], n, 0.36).abs() < 3.0);
        assert_eq!(counts.iter().sum::<usize>(), n);
        // replay is bit-identical
        assert_eq!(counts, col.tally(42, 0, n));
    }

    #[test]
    fn intra_sector_structure_survives() {
        let r = reg();
        let g = id(&r, "gamma");
        let one = StateVector::basis(BasisState::single(g));
        let two = create(&r, &one, g).unwrap().normalize().unwrap();
        let pair = StateVector::basis(BasisState::from_occupations([(id(&r, "e"), 1), (id(&r, "e+"), 1)]));
        let (a, b, cc) = (Complex64::new(0.3, 0.4), Complex64::new(0.0, -0.5), c(0.7));
        let s = one.scale(a).add(&two.scale(b)).add(&pair.scale(cc)).normalize().unwrap();
        let col = Collapser::new(&r, &s).unwrap();
        let gamma_sig = ContentSignature::new(["gamma"]);
        let ev = (0..64)
            .map(|i| col.sample(&SeedPath::new(7, i), &ContentSignature::vacuum(), 1.0))
            .find(|e| e.chosen_signature == gamma_sig)
            .unwrap();
        let expected = one.scale(a).add(&two.scale(b)).normalize().unwrap();
        assert!(ev.post_state.distance(&expected) < 1e-12);
        // collapsing again is deterministic and leaves it alone
        let again = collapse_sample(&r, &SeedPath::new(0, 0), &ev.post_state, &gamma_sig, 2.0).unwrap();
        assert!(again.deterministic);
        assert!(again.post_state.distance(&ev.post_state) < 1e-15);
    }

    #[test]
    fn gamma_of_identity_is_identity() {
        let r = reg();
        let basis = DenseBasis::full(&r, 100).unwrap();
        let s = SMatrix::identity(basis);
        let rows = vec![
            RowWeights::Uniform(ContentSignature::new(["gamma"])),
            RowWeights::Uniform(ContentSignature::new(["e", "e+"])),
        ];
        let g = gamma_from_s(&r, &s, &rows).unwrap();
        assert_eq!(g.entries, DMatrix::identity(2, 2));
        assert!(matches!(
            gamma_from_s(&r, &s, &[RowWeights::Uniform(ContentSignature::new(["mu"]))]),
            Err(Error::Index(_))
        ));
    }

    #[test]
    fn decay_gamma_off_diagonal_is_decay_probability() {
        let toy = DecayToy::new();
        let model = toy.model(0.05, [1.0, 0.6, 0.4]).unwrap();
        let ham = build_hamiltonians(&model).unwrap();
        let s = extract_s_matrix(&model, &ham, &SMatrixOptions::default()).unwrap();
        assert!(unitarity_defect(s.entries()) < 1e-9);
        let rows = vec![
            RowWeights::PointMass(toy.unstable_basis()),
            RowWeights::PointMass(toy.decayed_basis()),
        ];
        let g = gamma_from_s(toy.registry(), &s, &rows).unwrap();
        assert_eq!(g.entries.shape(), (2, 2));
        let direct = s.amplitude(&toy.unstable_basis(), &toy.decayed_basis()).unwrap().norm_sqr();
        assert!((g.entries[(0, 1)] - direct).abs() < 1e-14);
        assert!(g.max_row_sum_error() < 1e-9);
    }

    #[test]
    fn table_round_trip() {
        let g = GammaMatrix {
            row_labels: vec![ContentSignature::new(["a"]), ContentSignature::new(["b", "c"])],
            col_labels: vec![ContentSignature::new(["a"]), ContentSignature::new(["b", "c"])],
            entries: DMatrix::from_row_slice(2, 2, &[0.25, 0.75, 0.75, 0.25]),
        };
        let (labels, m) = parse_table(&g.to_table()).unwrap();
        assert_eq!(labels.unwrap(), vec!["{a}".to_string(), "{b,c}".to_string()]);
        assert_eq!(m, g.entries);
        assert!(parse_table("1 2\n3").is_err());
        assert!(parse_table("# only a header\n").is_err());
    }

    #[test]
    fn identity_is_unistochastic() {
        for n in 1..=4 {
            let v = is_unistochastic(&DMatrix::identity(n, n), 1e-8).unwrap();
            assert_eq!(v.verdict, Verdict::True, "n = {n}");
            assert!(v.witness_error.unwrap() < 1e-8);
        }
    }

    #[test]
    fn two_by_two_rotation_witness() {
        let p = 0.3;
        let g = DMatrix::from_row_slice(2, 2, &[p, 1.0 - p, 1.0 - p, p]);
        let v = is_unistochastic(&g, 1e-10).unwrap();
        assert_eq!(v.verdict, Verdict::True);
        let u = v.witness.unwrap();
        assert!(unitarity_defect(&u) < 1e-14);
        assert!((u[(0, 0)].re - p.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn circulant_half_is_not_unistochastic() {
        let g = DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 0.5, 0.5, 0.0, 0.5, 0.5, 0.5, 0.0]);
        let v = is_unistochastic(&g, 1e-8).unwrap();
        assert_eq!(v.verdict, Verdict::False);
        assert!(v.witness.is_none());
    }

    #[test]
    fn van_der_waerden_matrix_is_unistochastic() {
        // all entries 1/3: the Fourier matrix is a witness
        let g = DMatrix::from_element(3, 3, 1.0 / 3.0);
        let v = is_unistochastic(&g, 1e-10).unwrap();
        assert_eq!(v.verdict, Verdict::True);
        assert!(unitarity_defect(&v.witness.unwrap()) < 1e-12);
    }

    #[test]
    fn squared_moduli_of_a_unitary_are_accepted() {
        let toy = DecayToy::new();
        let model = toy.model(0.3, [1.0, 0.6, 0.3]).unwrap();
        let ham = build_hamiltonians(&model).unwrap();
        let u = ham.propagator(2.0);
        // 4x4 principal block of a block-diagonal unitary is not unitary, so use the full 10x10
        let g = u.map(|z| z.norm_sqr());
        let v = is_unistochastic(&g, 1e-8).unwrap();
        assert_ne!(v.verdict, Verdict::False);
        if let Some(w) = v.witness {
            assert!(witness_error(&w, &g) < 1e-8);
        }
    }

    #[test]
    fn input_errors_and_non_bistochastic() {
        assert!(matches!(
            is_unistochastic(&DMatrix::from_element(2, 3, 1.0 / 3.0), 1e-8),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            is_unistochastic(&DMatrix::from_row_slice(2, 2, &[0.5, 0.6, 0.5, 0.5]), 1e-8),
            Err(Error::Input(_))
        ));
        let right_only = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(is_unistochastic(&right_only, 1e-8).unwrap().verdict, Verdict::False);
    }
}
