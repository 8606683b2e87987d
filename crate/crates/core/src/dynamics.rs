//! Hamiltonian assembly, exact unitary evolution, the interaction picture,
//! truncated Dyson series and S-matrix extraction with adiabatic switching.
//!
//! All matrices are dense over the full truncated basis of the model's
//! registry. Operator strings are products read left to right; the rightmost
//! factor acts first.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{ladder, BasisState, LadderKind, LadderOutcome, ModeId, Registry, StateVector};
use crate::linalg::{
    frobenius, hermitian_defect, identity, scale_cols, scale_rows, unitarity_defect, CMatrix,
    DenseBasis, HermitianEigen,
};

pub const DEFAULT_SWITCHING_EPSILON: f64 = 0.05;
pub const DEFAULT_DIMENSION_CAP: usize = 4096;
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
/// Column-sum tolerance for unitarity of an extracted S-matrix.
pub const UNITARITY_TOLERANCE: f64 = 1e-9;


#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LadderOp {
    pub kind: LadderKind,
    pub mode: ModeId,
}

impl LadderOp {
    pub fn create(mode: ModeId) -> Self {
        Self {
            kind: LadderKind::Create,
            mode,
        }
    }

    pub fn annihilate(mode: ModeId) -> Self {
        Self {
            kind: LadderKind::Annihilate,
            mode,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InteractionTerm {
    pub coupling: Complex64,
    pub ops: Vec<LadderOp>,
}

impl InteractionTerm {
    pub fn new(coupling: Complex64, ops: Vec<LadderOp>) -> Self {
        Self { coupling, ops }
    }

    fn adjoint_ops(ops: &[LadderOp]) -> Vec<LadderOp> {
        ops.iter()
            .rev()
            .map(|op| LadderOp {
                kind: op.kind.adjoint(),
                mode: op.mode,
            })
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            coupling: self.coupling.conj(),
            ops: Self::adjoint_ops(&self.ops),
        }
    }

    /// Operator string (without coupling) on one basis state, ignoring the
    /// truncation for intermediate states.
    pub(crate) fn apply_unbounded(&self, reg: &Registry, b: &BasisState) -> Option<(BasisState, f64)> {
        let mut state = b.clone();
        let mut factor = 1.0;
        for op in self.ops.iter().rev() {
            match ladder(reg, &state, op.mode.index(), op.kind, false) {
                LadderOutcome::State(next, f) => {
                    state = next;
                    factor *= f;
                }
                _ => return None,
            }
        }
        Some((state, factor))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreeTerm {
    pub mode: ModeId,
    pub energy: f64,
}

/// `H = H₀ + H₁` over a registry: `H₀ = Σ ω_m a†a`, `H₁` a Hermitian sum of
/// coupled operator strings.
#[derive(Clone, Debug)]
pub struct InteractionModel {
    registry: Registry,
    free_terms: Vec<FreeTerm>,
    interaction_terms: Vec<InteractionTerm>,
    switching_epsilon: f64,
    dimension_cap: usize,
}

#[derive(Clone, Debug)]
pub struct ModelBuilder {
    registry: Registry,
    free_terms: Vec<FreeTerm>,
    interaction_terms: Vec<InteractionTerm>,
    switching_epsilon: f64,
    dimension_cap: usize,
}

impl ModelBuilder {
    pub fn new(registry: Registry) -> Self {
        Self {
            registry,
            free_terms: Vec::new(),
            interaction_terms: Vec::new(),
            switching_epsilon: DEFAULT_SWITCHING_EPSILON,
            dimension_cap: DEFAULT_DIMENSION_CAP,
        }
    }

    pub fn free(mut self, mode: ModeId, energy: f64) -> Self {
        self.free_terms.push(FreeTerm { mode, energy });
        self
    }

    pub fn interaction(mut self, coupling: Complex64, ops: Vec<LadderOp>) -> Self {
        self.interaction_terms.push(InteractionTerm::new(coupling, ops));
        self
    }

    pub fn switching_epsilon(mut self, eps: f64) -> Self {
        self.switching_epsilon = eps;
        self
    }

    pub fn dimension_cap(mut self, cap: usize) -> Self {
        self.dimension_cap = cap;
        self
    }

    /// Validates modes and closes the term list under Hermitian conjugation.
    ///
    /// Terms with identical operator strings are merged. A string whose
    /// adjoint is absent gets the conjugate term appended; a declared
    /// adjoint with a non-conjugate coupling, or a self-adjoint string with a
    /// complex coupling, is rejected.
    pub fn build(self) -> Result<InteractionModel> {
        let reg = &self.registry;
        for f in &self.free_terms {
            reg.check_mode(f.mode)?;
            if !f.energy.is_finite() {
                return Err(Error::Model(format!("free energy of {} is not finite", reg.mode(f.mode))));
            }
        }
        if !(self.switching_epsilon >= 0.0) {
            return Err(Error::Model("switching epsilon must be non-negative".into()));
        }
        let mut order: Vec<Vec<LadderOp>> = Vec::new();
        let mut merged: BTreeMap<Vec<LadderOp>, Complex64> = BTreeMap::new();
        for t in &self.interaction_terms {
            if t.ops.is_empty() {
                return Err(Error::Model("interaction term without operators".into()));
            }
            for op in &t.ops {
                reg.check_mode(op.mode)?;
            }
            if !(t.coupling.re.is_finite() && t.coupling.im.is_finite()) {
                return Err(Error::Model("interaction coupling is not finite".into()));
            }
            let entry = merged.entry(t.ops.clone()).or_insert_with(|| {
                order.push(t.ops.clone());
                Complex64::new(0.0, 0.0)
            });
            *entry += t.coupling;
        }
        let mut terms = Vec::new();
        let mut appended = Vec::new();
        for ops in &order {
            let c = merged[ops];
            let adj = InteractionTerm::adjoint_ops(ops);
            if adj == *ops {
                if c.im.abs() > HERMITIAN_TOLERANCE {
                    return Err(Error::Model(format!(
                        "self-adjoint operator string carries complex coupling {c}"
                    )));
                }
            } else if let Some(c_adj) = merged.get(&adj) {
                if (c_adj - c.conj()).norm() > HERMITIAN_TOLERANCE {
                    return Err(Error::Model(format!(
                        "term and its declared conjugate have couplings {c} and {c_adj}"
                    )));
                }
            } else {
                appended.push(InteractionTerm::new(c.conj(), adj));
            }
            terms.push(InteractionTerm::new(c, ops.clone()));
        }
        terms.extend(appended);
        Ok(InteractionModel {
            registry: self.registry,
            free_terms: self.free_terms,
            interaction_terms: terms,
            switching_epsilon: self.switching_epsilon,
            dimension_cap: self.dimension_cap,
        })
    }
}

impl InteractionModel {
    pub fn builder(registry: Registry) -> ModelBuilder {
        ModelBuilder::new(registry)
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn free_terms(&self) -> &[FreeTerm] {
        &self.free_terms
    }

    /// Hermitian-closed term list.
    pub fn interaction_terms(&self) -> &[InteractionTerm] {
        &self.interaction_terms
    }

    pub fn switching_epsilon(&self) -> f64 {
        self.switching_epsilon
    }

    pub fn dimension_cap(&self) -> usize {
        self.dimension_cap
    }

    /// Same model with every coupling multiplied by `factor`.
    pub fn with_coupling_scale(&self, factor: f64) -> Self {
        let mut m = self.clone();
        for t in &mut m.interaction_terms {
            t.coupling *= factor;
        }
        m
    }

    /// `Σ ω_m n_m` for one basis state.
    pub fn free_energy(&self, b: &BasisState) -> f64 {
        self.free_terms
            .iter()
            .map(|f| f.energy * f64::from(b.occupation(f.mode)))
            .sum()
    }
}

/// `Σ_species charge · occupation`.
pub fn total_charge(reg: &Registry, b: &BasisState) -> i64 {
    b.iter()
        .map(|(m, n)| reg.species_of(m).charge * i64::from(n))
        .sum()
}

/// Dense `H₀` and `H₁` over the full truncated basis.
#[derive(Debug)]
pub struct Hamiltonians {
    basis: DenseBasis,
    energies: Vec<f64>,
    h0: CMatrix,
    h1: CMatrix,
    full_eigen: OnceLock<HermitianEigen>,
}

impl Clone for Hamiltonians {
    fn clone(&self) -> Self {
        Self {
            basis: self.basis.clone(),
            energies: self.energies.clone(),
            h0: self.h0.clone(),
            h1: self.h1.clone(),
            full_eigen: OnceLock::new(),
        }
    }
}

pub fn build_hamiltonians(model: &InteractionModel) -> Result<Hamiltonians> {
    let reg = model.registry();
    let basis = DenseBasis::full(reg, model.dimension_cap)?;
    let n = basis.len();
    let energies: Vec<f64> = basis.states().iter().map(|b| model.free_energy(b)).collect();
    let h0 = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        energies.iter().map(|&e| Complex64::new(e, 0.0)),
    ));
    let mut h1 = CMatrix::zeros(n, n);
    for (col, b) in basis.states().iter().enumerate() {
        for term in model.interaction_terms() {
            if let Some((out, f)) = term.apply_unbounded(reg, b) {
                if let Some(row) = basis.index_of(&out) {
                    h1[(row, col)] += term.coupling * f;
                }
            }
        }
    }
    let defect = hermitian_defect(&h1);
    if defect > HERMITIAN_TOLERANCE {
        return Err(Error::Model(format!(
            "assembled interaction Hamiltonian is not Hermitian (defect {defect:.3e})"
        )));
    }
    Ok(Hamiltonians {
        basis,
        energies,
        h0,
        h1,
        full_eigen: OnceLock::new(),
    })
}

impl Hamiltonians {
    pub fn basis(&self) -> &DenseBasis {
        &self.basis
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// Diagonal of `H₀`.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn h0(&self) -> &CMatrix {
        &self.h0
    }

    pub fn h1(&self) -> &CMatrix {
        &self.h1
    }

    pub fn total(&self) -> CMatrix {
        &self.h0 + &self.h1
    }

    fn eigen(&self) -> &HermitianEigen {
        self.full_eigen.get_or_init(|| {
            HermitianEigen::new(&self.total(), f64::INFINITY).expect("hermiticity checked at build")
        })
    }

    /// `exp(±i H₀ t)` as a diagonal.
    fn free_phases(&self, t: f64) -> Vec<Complex64> {
        self.energies
            .iter()
            .map(|e| Complex64::from_polar(1.0, e * t))
            .collect()
    }

    /// `exp(-i H t)`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        self.eigen().propagator(t)
    }

    pub fn evolve(&self, t: f64, s: &StateVector) -> Result<StateVector> {
        let v = self.basis.to_vector(s)?;
        Ok(self.basis.from_vector(&(self.propagator(t) * v)))
    }

    pub fn expectation(&self, s: &StateVector) -> Result<f64> {
        let v = self.basis.to_vector(s)?;
        let hv = self.total() * &v;
        Ok((v.adjoint() * hv)[(0, 0)].re)
    }
}

/// `exp(-i H t) s` for an arbitrary Hermitian `H` over `basis`.
pub fn evolve_exact(h: &CMatrix, basis: &DenseBasis, t: f64, s: &StateVector) -> Result<StateVector> {
    if h.nrows() != basis.len() {
        return Err(Error::Input("Hamiltonian and basis dimensions differ".into()));
    }
    let eig = HermitianEigen::new(h, HERMITIAN_TOLERANCE)?;
    let v = basis.to_vector(s)?;
    Ok(basis.from_vector(&(eig.propagator(t) * v)))
}

/// `U(τ, τ₀) = e^{iH₀τ} e^{-iH(τ-τ₀)} e^{-iH₀τ₀}`.
pub fn interaction_picture_u(ham: &Hamiltonians, tau0: f64, tau: f64) -> CMatrix {
    let mid = ham.propagator(tau - tau0);
    let left = ham.free_phases(tau);
    let right = ham.free_phases(-tau0);
    scale_cols(&scale_rows(&left, &mid), &right)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DysonOptions {
    /// Nominal quadrature step; the grid uses an even step count covering the
    /// interval exactly.
    pub step: f64,
    /// Bound on the Richardson estimate of the first-order quadrature error.
    pub tolerance: f64,
}

impl Default for DysonOptions {
    fn default() -> Self {
        Self {
            step: 1e-3,
            tolerance: 1e-8,
        }
    }
}

pub const MAX_DYSON_ORDER: usize = 4;

/// Sum of the Dyson series of the interaction-picture propagator through
/// `order`, by iterated midpoint quadrature on the time-ordered simplex.
///
/// Writing `D_n(t) = -i ∫_{τ₀}^{t} H₁(s) D_{n-1}(s) ds`, each level is
/// accumulated at the step midpoints; the partial cell on the diagonal of
/// the simplex gets half weight.
pub fn dyson_truncated(
    ham: &Hamiltonians,
    order: usize,
    tau0: f64,
    tau: f64,
    opts: &DysonOptions,
) -> Result<CMatrix> {
    if order > MAX_DYSON_ORDER {
        return Err(Error::Input(format!(
            "Dyson order {order} exceeds the supported maximum {MAX_DYSON_ORDER}"
        )));
    }
    if tau < tau0 {
        return Err(Error::Domain("Dyson interval must satisfy tau >= tau0".into()));
    }
    if !(opts.step > 0.0) {
        return Err(Error::Input("Dyson step must be positive".into()));
    }
    let d = ham.dimension();
    let mut total = identity(d);
    if order == 0 || tau == tau0 {
        return Ok(total);
    }
    let span = tau - tau0;
    let mut steps = (span / opts.step).ceil() as usize;
    steps = steps.max(2);
    if steps % 2 == 1 {
        steps += 1;
    }
    let h = span / steps as f64;
    let minus_i_h = Complex64::new(0.0, -h);

    let h1_at = |s: f64| -> CMatrix {
        let p = ham.free_phases(s);
        let conj: Vec<Complex64> = p.iter().map(|x| x.conj()).collect();
        scale_cols(&scale_rows(&p, ham.h1()), &conj)
    };

    // acc[n] = Σ_{l<j} H₁(s_l) D_n(s_l)
    let mut acc: Vec<CMatrix> = vec![CMatrix::zeros(d, d); order];
    let mut coarse_first = CMatrix::zeros(d, d);
    let mut level: Vec<CMatrix> = vec![CMatrix::zeros(d, d); order];
    for j in 0..steps {
        let s = tau0 + (j as f64 + 0.5) * h;
        let hs = h1_at(s);
        // D_0 = I; D_n(s_j) from levels below.
        let mut prev = identity(d);
        for n in 0..order {
            let prod = &hs * &prev;
            if n + 1 < order {
                level[n] = (&acc[n] + &prod * Complex64::new(0.5, 0.0)) * minus_i_h;
            }
            acc[n] += prod;
            if n + 1 < order {
                prev = level[n].clone();
            }
        }
        if j % 2 == 0 {
            // midpoint of the doubled cell [t_j, t_{j+2}]
            coarse_first += h1_at(tau0 + (j as f64 + 1.0) * h);
        }
    }
    let fine_first = &acc[0] * minus_i_h;
    let coarse = coarse_first * Complex64::new(0.0, -2.0 * h);
    let estimate = frobenius(&(&fine_first - coarse)) / 3.0;
    if estimate > opts.tolerance {
        return Err(Error::Accuracy {
            estimate,
            tolerance: opts.tolerance,
        });
    }
    for a in &acc {
        total += a * minus_i_h;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SMatrixOptions {
    /// Half-widths `T` tried in increasing order; `S ≈ U(T, -T)`.
    pub schedule: Vec<f64>,
    /// Step of the fourth-order commutator-free Magnus integrator.
    pub time_step: f64,
    /// Largest entry change between consecutive schedule points accepted as
    /// converged.
    pub convergence_tolerance: f64,
}

impl Default for SMatrixOptions {
    fn default() -> Self {
        Self {
            schedule: vec![200.0, 300.0, 400.0, 500.0, 600.0, 800.0, 1000.0],
            time_step: 0.05,
            convergence_tolerance: 10.0 * UNITARITY_TOLERANCE,
        }
    }
}

/// Asymptotic transition amplitudes over the truncated basis.
#[derive(Clone, Debug)]
pub struct SMatrix {
    entries: CMatrix,
    basis: DenseBasis,
    unitarity_defect: f64,
    half_time: f64,
}

impl SMatrix {
    pub fn from_entries(basis: DenseBasis, entries: CMatrix, half_time: f64) -> Result<Self> {
        if entries.nrows() != basis.len() || entries.ncols() != basis.len() {
            return Err(Error::Input("S-matrix shape does not match its basis".into()));
        }
        let unitarity_defect = unitarity_defect(&entries);
        Ok(Self {
            entries,
            basis,
            unitarity_defect,
            half_time,
        })
    }

    pub fn identity(basis: DenseBasis) -> Self {
        let n = basis.len();
        Self::from_entries(basis, identity(n), 0.0).expect("square by construction")
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn basis(&self) -> &DenseBasis {
        &self.basis
    }

    /// `‖S†S − I‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        self.unitarity_defect
    }

    pub fn half_time(&self) -> f64 {
        self.half_time
    }

    pub fn index(&self, b: &BasisState) -> Result<usize> {
        self.basis
            .index_of(b)
            .ok_or_else(|| Error::Index("basis state not in the S-matrix basis".into()))
    }

    pub fn amplitude(&self, alpha: &BasisState, beta: &BasisState) -> Result<Complex64> {
        Ok(self.entries[(self.index(beta)?, self.index(alpha)?)])
    }

    /// `Σ_β |S_βα|²`.
    pub fn column_probability(&self, alpha: &BasisState) -> Result<f64> {
        let a = self.index(alpha)?;
        Ok(self.entries.column(a).iter().map(|x| x.norm_sqr()).sum())
    }

    pub fn apply(&self, s: &StateVector) -> Result<StateVector> {
        let v = self.basis.to_vector(s)?;
        Ok(self.basis.from_vector(&(&self.entries * v)))
    }
}

/// `|S_βα|²`.
pub fn transition_probability(s: &SMatrix, alpha: &BasisState, beta: &BasisState) -> Result<f64> {
    Ok(s.amplitude(alpha, beta)?.norm_sqr())
}

const CF4_A1: f64 = (3.0 - 2.0 * 1.732_050_807_568_877_2) / 12.0;
const CF4_A2: f64 = (3.0 + 2.0 * 1.732_050_807_568_877_2) / 12.0;
const SQRT3_6: f64 = 1.732_050_807_568_877_2 / 6.0;

/// `exp(-i δ (½H₀ + c H₁))`.
fn half_step(ham: &Hamiltonians, c: f64, delta: f64) -> CMatrix {
    if c == 0.0 {
        let phases: Vec<Complex64> = ham
            .energies
            .iter()
            .map(|e| Complex64::from_polar(1.0, -0.5 * e * delta))
            .collect();
        return CMatrix::from_diagonal(&nalgebra::DVector::from_vec(phases));
    }
    let a = ham.h0() * Complex64::new(0.5, 0.0) + ham.h1() * Complex64::new(c, 0.0);
    HermitianEigen::new(&a, f64::INFINITY)
        .expect("hermitian by construction")
        .propagator(delta)
}

/// Schrödinger-picture propagator of `H₀ + f(t) H₁` from `t_start` to
/// `t_end` with the fourth-order commutator-free Magnus scheme. Exactly
/// unitary up to rounding.
pub fn time_ordered_propagator<F: Fn(f64) -> f64>(
    ham: &Hamiltonians,
    profile: F,
    t_start: f64,
    t_end: f64,
    step: f64,
) -> CMatrix {
    let d = ham.dimension();
    let span = t_end - t_start;
    if span == 0.0 {
        return identity(d);
    }
    let steps = ((span.abs() / step).ceil() as usize).max(1);
    let delta = span / steps as f64;
    let mut u = identity(d);
    for k in 0..steps {
        let t = t_start + k as f64 * delta;
        let f1 = profile(t + (0.5 - SQRT3_6) * delta);
        let f2 = profile(t + (0.5 + SQRT3_6) * delta);
        let first = half_step(ham, CF4_A2 * f1 + CF4_A1 * f2, delta);
        let second = half_step(ham, CF4_A1 * f1 + CF4_A2 * f2, delta);
        u = second * first * u;
    }
    u
}

/// `S ≈ U_I(T, −T)` with the coupling damped by `e^{−ε|t|}`, sweeping `T`
/// over the schedule until consecutive matrices agree.
pub fn extract_s_matrix(model: &InteractionModel, ham: &Hamiltonians, opts: &SMatrixOptions) -> Result<SMatrix> {
    let eps = model.switching_epsilon();
    if !(eps > 0.0) {
        return Err(Error::Model("S-matrix extraction needs a positive switching epsilon".into()));
    }
    if opts.schedule.is_empty() {
        return Err(Error::Input("empty T schedule".into()));
    }
    if opts.schedule.windows(2).any(|w| w[1] <= w[0]) || opts.schedule[0] <= 0.0 {
        return Err(Error::Input("T schedule must be positive and strictly increasing".into()));
    }
    if !(opts.time_step > 0.0) {
        return Err(Error::Input("time step must be positive".into()));
    }
    let profile = |t: f64| (-eps * t.abs()).exp();
    let mut u = identity(ham.dimension());
    let mut previous: Option<CMatrix> = None;
    let mut last_change = f64::INFINITY;
    let mut t_prev = 0.0;
    for &t in &opts.schedule {
        let forward = time_ordered_propagator(ham, profile, t_prev, t, opts.time_step);
        let backward = time_ordered_propagator(ham, profile, -t, -t_prev, opts.time_step);
        u = forward * u * backward;
        t_prev = t;
        let phases = ham.free_phases(t);
        let s = scale_cols(&scale_rows(&phases, &u), &phases);
        if let Some(prev) = &previous {
            last_change = (&s - prev).iter().map(|x| x.norm()).fold(0.0, f64::max);
            if last_change < opts.convergence_tolerance {
                return SMatrix::from_entries(ham.basis().clone(), s, t);
            }
        }
        previous = Some(s);
    }
    Err(Error::Convergence(format!(
        "S-matrix entries still changed by {last_change:.3e} (> {:.1e}) at T = {t_prev}; \
         epsilon = {eps}, schedule = {:?}",
        opts.convergence_tolerance, opts.schedule
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{Mode, MomentumGrid, ParticleSpecies};
    use crate::toys::DecayToy;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn free_registry() -> Registry {
        Registry::builder(MomentumGrid::line(2), 2)
            .species(ParticleSpecies::boson("a", 2))
            .mode(Mode::new("a", vec![0], 0))
            .mode(Mode::new("a", vec![1], 0))
            .build()
            .unwrap()
    }

    #[test]
    fn free_model_number_operator_spectrum() {
        let reg = free_registry();
        let m0 = reg.mode_id(&Mode::new("a", vec![0], 0)).unwrap();
        let m1 = reg.mode_id(&Mode::new("a", vec![1], 0)).unwrap();
        let model = InteractionModel::builder(reg).free(m0, 1.5).free(m1, 0.25).build().unwrap();
        let ham = build_hamiltonians(&model).unwrap();
        assert!(frobenius(ham.h1()) == 0.0);
        for (i, b) in ham.basis().states().iter().enumerate() {
            let expect = 1.5 * f64::from(b.occupation(m0)) + 0.25 * f64::from(b.occupation(m1));
            assert!((ham.h0()[(i, i)].re - expect).abs() < 1e-15);
        }
        let u = interaction_picture_u(&ham, -3.0, 5.0);
        assert!(frobenius(&(u - identity(ham.dimension()))) < 1e-12);
    }

    #[test]
    fn conjugate_terms_are_added_once() {
        let toy = DecayToy::new();
        let model = toy.model(0.1, [1.0, 0.6, 0.4]).unwrap();
        assert_eq!(model.interaction_terms().len(), 2);
        let reg = toy.registry().clone();
        let (pu, ps, q) = toy.modes();
        let explicit = InteractionModel::builder(reg.clone())
            .interaction(c(0.1), vec![LadderOp::create(ps), LadderOp::create(q), LadderOp::annihilate(pu)])
            .interaction(c(0.1), vec![LadderOp::create(pu), LadderOp::annihilate(q), LadderOp::annihilate(ps)])
            .build()
            .unwrap();
        assert_eq!(explicit.interaction_terms().len(), 2);
        let bad = InteractionModel::builder(reg.clone())
            .interaction(c(0.1), vec![LadderOp::create(ps), LadderOp::create(q), LadderOp::annihilate(pu)])
            .interaction(c(0.3), vec![LadderOp::create(pu), LadderOp::annihilate(q), LadderOp::annihilate(ps)])
            .build();
        assert!(matches!(bad, Err(Error::Model(_))));
        let complex_number_op = InteractionModel::builder(reg)
            .interaction(Complex64::new(0.0, 1.0), vec![LadderOp::create(pu), LadderOp::annihilate(pu)])
            .build();
        assert!(matches!(complex_number_op, Err(Error::Model(_))));
    }

    #[test]
    fn capacity_error() {
        let toy = DecayToy::new();
        let model = InteractionModel::builder(toy.registry().clone()).dimension_cap(3).build().unwrap();
        assert!(matches!(build_hamiltonians(&model), Err(Error::Capacity { .. })));
    }

    #[test]
    fn decay_toy_h1_entries_brute_force() {
        // a†(Ps) a†(Q) a(Pu) applied by hand to every basis state.
        let toy = DecayToy::new();
        let g = 0.07;
        let model = toy.model(g, [1.0, 0.5, 0.5]).unwrap();
        let ham = build_hamiltonians(&model).unwrap();
        let (pu, ps, q) = toy.modes();
        let basis = ham.basis();
        let mut expected = CMatrix::zeros(basis.len(), basis.len());
        for (col, b) in basis.states().iter().enumerate() {
            let nu = b.occupation(pu);
            let ns = b.occupation(ps);
            let nq = b.occupation(q);
            if nu >= 1 {
                let out = BasisState::from_occupations([(pu, nu - 1), (ps, ns + 1), (q, nq + 1)]);
                if let Some(row) = basis.index_of(&out) {
                    let f = (f64::from(nu) * f64::from(ns + 1) * f64::from(nq + 1)).sqrt();
                    expected[(row, col)] += c(g * f);
                    expected[(col, row)] += c(g * f);
                }
            }
        }
        assert!(frobenius(&(ham.h1() - &expected)) < 1e-15);
        let nonzero = ham.h1().iter().filter(|x| x.norm() > 0.0).count();
        assert_eq!(nonzero % 2, 0);
        assert!(nonzero > 0);
    }

    #[test]
    fn evolve_zero_time_and_eigenstates() {
        let toy = DecayToy::new();
        let model = toy.model(0.0, [1.0, 0.7, 0.2]).unwrap();
        let ham = build_hamiltonians(&model).unwrap();
        let (pu, _, _) = toy.modes();
        let s = StateVector::basis(BasisState::from_occupations([(pu, 2)]));
        let same = evolve_exact(&ham.total(), ham.basis(), 0.0, &s).unwrap();
        assert!(same.distance(&s) < 1e-14);
        let t = 1.3;
        let out = evolve_exact(&ham.total(), ham.basis(), t, &s).unwrap();
        let expect = s.scale(Complex64::from_polar(1.0, -2.0 * t));
        assert!(out.distance(&expect) < 1e-13);
    }

    #[test]
    fn rabi_survival_matches_two_level_formula() {
        let toy = DecayToy::new();
        let g = 0.05;
        let energies = [1.0, 0.55, 0.4];
        let model = toy.model(g, energies).unwrap();
        let ham = build_hamiltonians(&model).unwrap();
        let s = toy.unstable_state();
        let detuning = energies[0] - energies[1] - energies[2];
        let omega = (detuning * detuning + 4.0 * g * g).sqrt();
        for t in [0.5, 3.0, 17.0, 40.0] {
            let out = evolve_exact(&ham.total(), ham.basis(), t, &s).unwrap();
            let survival = out.amplitude(&toy.unstable_basis()).norm_sqr();
            let closed = 1.0 - 4.0 * g * g / (omega * omega) * (omega * t / 2.0).sin().powi(2);
            assert!((survival - closed).abs() < 1e-10, "t={t}");
            assert!((out.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn non_hermitian_evolution_rejected() {
        let toy = DecayToy::new();
        let ham = build_hamiltonians(&toy.model(0.1, [1.0, 0.5, 0.5]).unwrap()).unwrap();
        let mut h = ham.total();
        h[(0, 1)] += c(1.0);
        assert!(matches!(
            evolve_exact(&h, ham.basis(), 1.0, &toy.unstable_state()),
            Err(Error::Model(_))
        ));
    }

    #[test]
    fn interaction_picture_identities() {
        let toy = DecayToy::new();
        let ham = build_hamiltonians(&toy.model(0.2, [1.0, 0.6, 0.3]).unwrap()).unwrap();
        let d = ham.dimension();
        assert!(frobenius(&(interaction_picture_u(&ham, 2.0, 2.0) - identity(d))) < 1e-13);
        let u20 = interaction_picture_u(&ham, -1.0, 4.5);
        let u21 = interaction_picture_u(&ham, 1.2, 4.5);
        let u10 = interaction_picture_u(&ham, -1.0, 1.2);
        assert!(frobenius(&(u21 * u10 - &u20)) < 1e-10);
        assert!(unitarity_defect(&u20) < 1e-10);
    }

    #[test]
    fn dyson_order_zero_and_one() {
        let toy = DecayToy::new();
        let g = 0.1;
        let energies = [1.0, 0.7, 0.5];
        let ham = build_hamiltonians(&toy.model(g, energies).unwrap()).unwrap();
        let d = ham.dimension();
        let opts = DysonOptions::default();
        assert_eq!(dyson_truncated(&ham, 0, 0.0, 3.0, &opts).unwrap(), identity(d));
        // order one: -i ∫ H₁_{βα} e^{i(E_β-E_α)t} dt, closed form
        let (tau0, tau) = (-0.5, 2.5);
        let one = dyson_truncated(&ham, 1, tau0, tau, &opts).unwrap();
        let alpha = ham.basis().index_of(&toy.unstable_basis()).unwrap();
        let beta = ham.basis().index_of(&toy.decayed_basis()).unwrap();
        let w = energies[1] + energies[2] - energies[0];
        let integral = (Complex64::new(0.0, w * tau).exp() - Complex64::new(0.0, w * tau0).exp())
            / Complex64::new(0.0, w);
        let expected = Complex64::new(0.0, -g) * integral;
        assert!((one[(beta, alpha)] - expected).norm() < 1e-8);
        assert!(matches!(
            dyson_truncated(&ham, 5, 0.0, 1.0, &opts),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn dyson_coarse_step_is_accuracy_error() {
        let toy = DecayToy::new();
        let ham = build_hamiltonians(&toy.model(0.3, [5.0, 0.5, 0.5]).unwrap()).unwrap();
        let opts = DysonOptions { step: 0.5, tolerance: 1e-8 };
        assert!(matches!(
            dyson_truncated(&ham, 2, 0.0, 10.0, &opts),
            Err(Error::Accuracy { .. })
        ));
    }

    #[test]
    fn magnus_propagator_constant_profile_is_exact() {
        let toy = DecayToy::new();
        let ham = build_hamiltonians(&toy.model(0.3, [1.0, 0.6, 0.3]).unwrap()).unwrap();
        let u = time_ordered_propagator(&ham, |_| 1.0, -1.0, 2.0, 0.1);
        assert!(frobenius(&(u - ham.propagator(3.0))) < 1e-12);
    }

    #[test]
    fn magnus_propagator_converges_at_fourth_order() {
        let toy = DecayToy::new();
        let ham = build_hamiltonians(&toy.model(0.4, [1.0, 0.6, 0.3]).unwrap()).unwrap();
        let prof = |t: f64| (0.7 * t).sin();
        let reference = time_ordered_propagator(&ham, prof, 0.0, 4.0, 0.005);
        let e1 = frobenius(&(time_ordered_propagator(&ham, prof, 0.0, 4.0, 0.2) - &reference));
        let e2 = frobenius(&(time_ordered_propagator(&ham, prof, 0.0, 4.0, 0.1) - &reference));
        let rate = (e1 / e2).log2();
        assert!(rate > 3.5, "observed order {rate}");
    }

    #[test]
    fn free_model_s_matrix_is_identity() {
        let toy = DecayToy::new();
        let model = toy.model(0.0, [1.0, 0.6, 0.4]).unwrap();
        let ham = build_hamiltonians(&model).unwrap();
        let opts = SMatrixOptions {
            schedule: vec![10.0, 20.0],
            ..SMatrixOptions::default()
        };
        let s = extract_s_matrix(&model, &ham, &opts).unwrap();
        assert!(frobenius(&(s.entries() - identity(ham.dimension()))) < 1e-12);
        let b = toy.unstable_basis();
        assert!((transition_probability(&s, &b, &b).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(transition_probability(&s, &b, &toy.decayed_basis()).unwrap(), 0.0);
    }

    #[test]
    fn decay_toy_s_matrix_is_unitary_and_nontrivial() {
        let toy = DecayToy::new();
        let model = toy.model(0.05, [1.0, 0.6, 0.4]).unwrap();
        let ham = build_hamiltonians(&model).unwrap();
        let s = extract_s_matrix(&model, &ham, &SMatrixOptions::default()).unwrap();
        for b in ham.basis().states() {
            assert!((s.column_probability(b).unwrap() - 1.0).abs() < 1e-9);
        }
        let p = transition_probability(&s, &toy.unstable_basis(), &toy.decayed_basis()).unwrap();
        assert!(p > 0.0 && p < 1.0, "p = {p}");
    }

    #[test]
    fn resonant_pair_production_matches_pulse_area() {
        // On resonance the interaction-picture coupling is constant on the
        // {γ, ee⁺, μμᶜ} block, so U = exp(−i A H₁) with A = ∫ e^{−ε|t|} dt.
        let toy = crate::toys::PairProductionToy::new();
        let (ge, gm) = (0.03, 0.015);
        let model = toy.model(ge, gm, [1.1, 0.5, 0.6, 0.52, 0.58]).unwrap();
        let ham = build_hamiltonians(&model).unwrap();
        let s = extract_s_matrix(&model, &ham, &SMatrixOptions::default()).unwrap();
        let t = s.half_time();
        let eps = model.switching_epsilon();
        let area = 2.0 * (1.0 - (-eps * t).exp()) / eps;
        let big_g = (ge * ge + gm * gm).sqrt();
        let reg = toy.registry();
        let pair = |a: &str, b: &str| {
            BasisState::from_occupations([(reg.modes_of(a)[0], 1), (reg.modes_of(b)[0], 1)])
        };
        let gamma = toy.in_basis();
        let p_gamma = transition_probability(&s, &gamma, &gamma).unwrap();
        let p_e = transition_probability(&s, &gamma, &pair("e", "e+")).unwrap();
        let p_mu = transition_probability(&s, &gamma, &pair("mu", "muc")).unwrap();
        let sin2 = (big_g * area).sin().powi(2);
        assert!((p_gamma - (1.0 - sin2)).abs() < 1e-8);
        assert!((p_e - ge * ge / (big_g * big_g) * sin2).abs() < 1e-8);
        assert!((p_mu - gm * gm / (big_g * big_g) * sin2).abs() < 1e-8);
        assert!((s.column_probability(&gamma).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn charge_superselection() {
        let toy = crate::toys::PairProductionToy::new();
        let model = toy.model(0.04, 0.03, [1.0, 0.5, 0.55, 0.5, 0.45]).unwrap();
        let ham = build_hamiltonians(&model).unwrap();
        let s = extract_s_matrix(&model, &ham, &SMatrixOptions::default()).unwrap();
        let reg = model.registry();
        let states = ham.basis().states();
        for (i, b) in states.iter().enumerate() {
            for (j, a) in states.iter().enumerate() {
                if total_charge(reg, a) != total_charge(reg, b) {
                    assert!(s.entries()[(i, j)].norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn zero_epsilon_and_bad_schedule_rejected() {
        let toy = DecayToy::new();
        let model = InteractionModel::builder(toy.registry().clone())
            .switching_epsilon(0.0)
            .build()
            .unwrap();
        let ham = build_hamiltonians(&model).unwrap();
        assert!(matches!(
            extract_s_matrix(&model, &ham, &SMatrixOptions::default()),
            Err(Error::Model(_))
        ));
        let model = toy.model(0.1, [1.0, 0.6, 0.4]).unwrap();
        let ham = build_hamiltonians(&model).unwrap();
        let short = SMatrixOptions {
            schedule: vec![5.0, 10.0],
            ..SMatrixOptions::default()
        };
        assert!(matches!(extract_s_matrix(&model, &ham, &short), Err(Error::Convergence(_))));
    }

    #[test]
    fn unknown_state_is_index_error() {
        let toy = DecayToy::new();
        let s = SMatrix::identity(DenseBasis::new(vec![toy.unstable_basis()]));
        assert!(matches!(
            transition_probability(&s, &toy.unstable_basis(), &toy.decayed_basis()),
            Err(Error::Index(_))
        ));
    }
}
