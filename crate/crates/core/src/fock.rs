//! Truncated Fock space: species registry, occupation-number basis, sparse
//! state vectors and the creation/annihilation operator algebra.
//!
//! Modes carry a global canonical order (species id, then momentum index,
//! then spin). The fermionic sign of a ladder operator acting on mode `m` is
//! `(-1)^k`, where `k` counts the occupied fermionic modes that precede `m` in
//! that order. Bosonic modes never contribute to the sign, so bosons commute
//! with fermions.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amplitudes with modulus below this are dropped by [`StateVector::prune`].
///
/// Dropping `k` entries changes the squared norm by at most `k * tol^2`.
pub const DEFAULT_DROP_TOLERANCE: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Boson,
    Fermion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleSpecies {
    pub id: String,
    pub statistics: Statistics,
    pub mass: f64,
    pub charge: i64,
    /// Per-mode occupation cap. Forced to 1 for fermions.
    pub max_occupation: u32,
}

impl ParticleSpecies {
    pub fn boson(id: impl Into<String>, max_occupation: u32) -> Self {
        Self {
            id: id.into(),
            statistics: Statistics::Boson,
            mass: 0.0,
            charge: 0,
            max_occupation,
        }
    }

    pub fn fermion(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            statistics: Statistics::Fermion,
            mass: 0.0,
            charge: 0,
            max_occupation: 1,
        }
    }

    pub fn with_charge(mut self, charge: i64) -> Self {
        self.charge = charge;
        self
    }

    pub fn with_mass(mut self, mass: f64) -> Self {
        self.mass = mass;
        self
    }

    pub fn is_fermion(&self) -> bool {
        self.statistics == Statistics::Fermion
    }
}

/// A single-particle mode. The derived ordering is the canonical mode order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mode {
    pub species: String,
    pub momentum: Vec<i32>,
    pub spin: i32,
}

impl Mode {
    pub fn new(species: impl Into<String>, momentum: Vec<i32>, spin: i32) -> Self {
        Self {
            species: species.into(),
            momentum,
            spin,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@", self.species)?;
        for (i, p) in self.momentum.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        if self.spin != 0 {
            write!(f, "#{}", self.spin)?;
        }
        Ok(())
    }
}

/// Inclusive box of integer momentum indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentumGrid {
    lower: Vec<i32>,
    upper: Vec<i32>,
}

impl MomentumGrid {
    pub fn new(lower: Vec<i32>, upper: Vec<i32>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Registry(format!(
                "grid bounds have different dimensions ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::Registry("grid lower bound exceeds upper bound".into()));
        }
        Ok(Self { lower, upper })
    }

    /// One-dimensional grid `0..=cells-1`.
    pub fn line(cells: i32) -> Self {
        Self {
            lower: vec![0],
            upper: vec![cells.max(1) - 1],
        }
    }

    pub fn dims(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[i32] {
        &self.lower
    }

    pub fn upper(&self) -> &[i32] {
        &self.upper
    }

    pub fn contains(&self, p: &[i32]) -> bool {
        p.len() == self.dims()
            && p
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (l, u))| l <= x && x <= u)
    }

    /// All grid points in lexicographic order.
    pub fn points(&self) -> Vec<Vec<i32>> {
        let mut out = vec![Vec::new()];
        for (l, u) in self.lower.iter().zip(&self.upper) {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (*l..=*u).map(move |x| {
                        let mut p = prefix.clone();
                        p.push(x);
                        p
                    })
                })
                .collect();
        }
        out
    }
}

/// Index of a mode in a [`Registry`]'s canonical mode list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeId(pub(crate) usize);

impl ModeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Species, modes and truncation of one toy theory. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Registry {
    species: Vec<ParticleSpecies>,
    modes: Vec<Mode>,
    mode_species: Vec<usize>,
    grid: MomentumGrid,
    n_max: u32,
    drop_tolerance: f64,
}

#[derive(Clone, Debug)]
pub struct RegistryBuilder {
    species: Vec<ParticleSpecies>,
    modes: Vec<Mode>,
    grid: MomentumGrid,
    n_max: u32,
    drop_tolerance: f64,
}

impl RegistryBuilder {
    pub fn new(grid: MomentumGrid, n_max: u32) -> Self {
        Self {
            species: Vec::new(),
            modes: Vec::new(),
            grid,
            n_max,
            drop_tolerance: DEFAULT_DROP_TOLERANCE,
        }
    }

    pub fn species(mut self, species: ParticleSpecies) -> Self {
        self.species.push(species);
        self
    }

    pub fn mode(mut self, mode: Mode) -> Self {
        self.modes.push(mode);
        self
    }

    /// Adds a mode at the origin of the grid with spin 0.
    pub fn simple_mode(self, species: &str) -> Self {
        let origin = self.grid.lower().to_vec();
        self.mode(Mode::new(species, origin, 0))
    }

    pub fn drop_tolerance(mut self, tol: f64) -> Self {
        self.drop_tolerance = tol;
        self
    }

    pub fn build(self) -> Result<Registry> {
        let Self {
            mut species,
            mut modes,
            grid,
            n_max,
            drop_tolerance,
        } = self;
        if n_max == 0 {
            return Err(Error::Registry("truncation n_max must be positive".into()));
        }
        if !(drop_tolerance >= 0.0) {
            return Err(Error::Registry("drop tolerance must be non-negative".into()));
        }
        species.sort_by(|a, b| a.id.cmp(&b.id));
        for w in species.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::Registry(format!("duplicate species id '{}'", w[0].id)));
            }
        }
        for sp in &mut species {
            if sp.id.is_empty() {
                return Err(Error::Registry("empty species id".into()));
            }
            if sp.is_fermion() {
                sp.max_occupation = 1;
            } else if sp.max_occupation == 0 {
                return Err(Error::Registry(format!(
                    "species '{}' has zero max_occupation",
                    sp.id
                )));
            }
            if !(sp.mass >= 0.0) {
                return Err(Error::Registry(format!("species '{}' has negative mass", sp.id)));
            }
        }
        modes.sort();
        for w in modes.windows(2) {
            if w[0] == w[1] {
                return Err(Error::Registry(format!("duplicate mode {}", w[0])));
            }
        }
        let mut mode_species = Vec::with_capacity(modes.len());
        for m in &modes {
            let idx = species
                .binary_search_by(|s| s.id.as_str().cmp(&m.species))
                .map_err(|_| Error::Registry(format!("mode {m} references unknown species")))?;
            if !grid.contains(&m.momentum) {
                return Err(Error::Registry(format!("mode {m} lies outside the momentum grid")));
            }
            mode_species.push(idx);
        }
        Ok(Registry {
            species,
            modes,
            mode_species,
            grid,
            n_max,
            drop_tolerance,
        })
    }
}

impl Registry {
    pub fn builder(grid: MomentumGrid, n_max: u32) -> RegistryBuilder {
        RegistryBuilder::new(grid, n_max)
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn drop_tolerance(&self) -> f64 {
        self.drop_tolerance
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn species(&self) -> &[ParticleSpecies] {
        &self.species
    }

    pub fn species_by_id(&self, id: &str) -> Option<&ParticleSpecies> {
        self.species
            .binary_search_by(|s| s.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.species[i])
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> impl Iterator<Item = (ModeId, &Mode)> {
        self.modes.iter().enumerate().map(|(i, m)| (ModeId(i), m))
    }

    pub fn mode(&self, id: ModeId) -> &Mode {
        &self.modes[id.0]
    }

    pub fn mode_id(&self, mode: &Mode) -> Result<ModeId> {
        self.modes
            .binary_search(mode)
            .map(ModeId)
            .map_err(|_| Error::UnknownMode(mode.to_string()))
    }

    /// Modes of one species, in canonical order.
    pub fn modes_of(&self, species: &str) -> Vec<ModeId> {
        self.modes()
            .filter(|(_, m)| m.species == species)
            .map(|(id, _)| id)
            .collect()
    }

    pub fn check_mode(&self, id: ModeId) -> Result<()> {
        if id.0 < self.modes.len() {
            Ok(())
        } else {
            Err(Error::UnknownMode(format!("mode index {}", id.0)))
        }
    }

    pub fn species_of(&self, id: ModeId) -> &ParticleSpecies {
        &self.species[self.mode_species[id.0]]
    }

    pub(crate) fn is_fermion_index(&self, idx: usize) -> bool {
        self.species[self.mode_species[idx]].is_fermion()
    }

    pub(crate) fn cap_index(&self, idx: usize) -> u32 {
        self.species[self.mode_species[idx]].max_occupation
    }

    /// Checks per-mode caps and the global particle-number truncation.
    pub fn validate_basis(&self, b: &BasisState) -> Result<()> {
        let mut total = 0u32;
        for &(idx, n) in &b.occ {
            if idx >= self.modes.len() {
                return Err(Error::UnknownMode(format!("mode index {idx}")));
            }
            if n > self.cap_index(idx) {
                return Err(Error::Registry(format!(
                    "occupation {n} of {} exceeds its cap",
                    self.modes[idx]
                )));
            }
            total += n;
        }
        if total > self.n_max {
            return Err(Error::Registry(format!(
                "total particle number {total} exceeds n_max {}",
                self.n_max
            )));
        }
        Ok(())
    }

    /// Enumerates the full truncated basis in canonical order.
    pub fn enumerate_basis(&self, cap: usize) -> Result<Vec<BasisState>> {
        let mut out = Vec::new();
        let mut current: Vec<(usize, u32)> = Vec::new();
        self.enumerate_from(0, self.n_max, &mut current, &mut out, cap)?;
        out.sort();
        Ok(out)
    }

    fn enumerate_from(
        &self,
        idx: usize,
        remaining: u32,
        current: &mut Vec<(usize, u32)>,
        out: &mut Vec<BasisState>,
        cap: usize,
    ) -> Result<()> {
        if idx == self.modes.len() {
            if out.len() >= cap {
                return Err(Error::Capacity {
                    dimension: out.len() + 1,
                    cap,
                });
            }
            out.push(BasisState { occ: current.clone() });
            return Ok(());
        }
        let top = self.cap_index(idx).min(remaining);
        for n in 0..=top {
            if n > 0 {
                current.push((idx, n));
            }
            self.enumerate_from(idx + 1, remaining - n, current, out, cap)?;
            if n > 0 {
                current.pop();
            }
        }
        Ok(())
    }

    pub fn describe(&self, b: &BasisState) -> String {
        if b.occ.is_empty() {
            return "|0>".into();
        }
        let parts: Vec<String> = b
            .occ
            .iter()
            .map(|&(i, n)| {
                if n == 1 {
                    self.modes[i].to_string()
                } else {
                    format!("{}x{}", n, self.modes[i])
                }
            })
            .collect();
        format!("|{}>", parts.join(" "))
    }
}

/// Occupation-number configuration: sorted `(mode index, count)` pairs with
/// zero counts omitted, so structural equality is state equality.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisState {
    occ: Vec<(usize, u32)>,
}

impl BasisState {
    pub fn vacuum() -> Self {
        Self::default()
    }

    /// Builds a state from `(mode, count)` pairs; repeated modes add up.
    pub fn from_occupations<I: IntoIterator<Item = (ModeId, u32)>>(pairs: I) -> Self {
        let mut map: BTreeMap<usize, u32> = BTreeMap::new();
        for (m, n) in pairs {
            *map.entry(m.0).or_default() += n;
        }
        Self {
            occ: map.into_iter().filter(|&(_, n)| n > 0).collect(),
        }
    }

    pub fn single(mode: ModeId) -> Self {
        Self { occ: vec![(mode.0, 1)] }
    }

    pub fn occupation(&self, mode: ModeId) -> u32 {
        self.occ
            .binary_search_by_key(&mode.0, |&(i, _)| i)
            .map(|k| self.occ[k].1)
            .unwrap_or(0)
    }

    pub fn total(&self) -> u32 {
        self.occ.iter().map(|&(_, n)| n).sum()
    }

    pub fn is_vacuum(&self) -> bool {
        self.occ.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ModeId, u32)> + '_ {
        self.occ.iter().map(|&(i, n)| (ModeId(i), n))
    }

    fn with_occupation(&self, idx: usize, n: u32) -> Self {
        let mut occ = self.occ.clone();
        match occ.binary_search_by_key(&idx, |&(i, _)| i) {
            Ok(k) if n == 0 => {
                occ.remove(k);
            }
            Ok(k) => occ[k].1 = n,
            Err(_) if n == 0 => {}
            Err(k) => occ.insert(k, (idx, n)),
        }
        Self { occ }
    }

    fn fermion_parity_before(&self, reg: &Registry, idx: usize) -> bool {
        let mut odd = false;
        for &(i, n) in &self.occ {
            if i >= idx {
                break;
            }
            if reg.is_fermion_index(i) && n % 2 == 1 {
                odd = !odd;
            }
        }
        odd
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LadderKind {
    Create,
    Annihilate,
}

impl LadderKind {
    pub fn adjoint(self) -> Self {
        match self {
            LadderKind::Create => LadderKind::Annihilate,
            LadderKind::Annihilate => LadderKind::Create,
        }
    }
}

pub(crate) enum LadderOutcome {
    Zero,
    Truncated,
    State(BasisState, f64),
}

/// One ladder operator applied to one basis state.
///
/// With `bounded = false` the per-mode bosonic caps and `n_max` are ignored;
/// operator strings use this for intermediate states so that the assembled
/// Hamiltonian is the exact projection of the untruncated operator.
pub(crate) fn ladder(
    reg: &Registry,
    b: &BasisState,
    idx: usize,
    kind: LadderKind,
    bounded: bool,
) -> LadderOutcome {
    let n = b.occupation(ModeId(idx));
    let fermion = reg.is_fermion_index(idx);
    let sign = if fermion && b.fermion_parity_before(reg, idx) {
        -1.0
    } else {
        1.0
    };
    match kind {
        LadderKind::Create => {
            if fermion && n >= 1 {
                return LadderOutcome::Zero;
            }
            if bounded && (n + 1 > reg.cap_index(idx) || b.total() + 1 > reg.n_max) {
                return LadderOutcome::Truncated;
            }
            let factor = if fermion { sign } else { f64::from(n + 1).sqrt() };
            LadderOutcome::State(b.with_occupation(idx, n + 1), factor)
        }
        LadderKind::Annihilate => {
            if n == 0 {
                return LadderOutcome::Zero;
            }
            let factor = if fermion { sign } else { f64::from(n).sqrt() };
            LadderOutcome::State(b.with_occupation(idx, n - 1), factor)
        }
    }
}

/// Sparse superposition of basis states.
///
/// Iteration follows the canonical basis order, so every derived quantity
/// (including sampling) is deterministic.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StateVector {
    amps: BTreeMap<BasisState, Complex64>,
    truncated: bool,
}

impl StateVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn vacuum() -> Self {
        Self::basis(BasisState::vacuum())
    }

    pub fn basis(b: BasisState) -> Self {
        let mut amps = BTreeMap::new();
        amps.insert(b, Complex64::new(1.0, 0.0));
        Self {
            amps,
            truncated: false,
        }
    }

    /// Sums amplitudes of repeated basis states; exact zeros are dropped.
    pub fn from_amplitudes<I: IntoIterator<Item = (BasisState, Complex64)>>(items: I) -> Self {
        let mut amps: BTreeMap<BasisState, Complex64> = BTreeMap::new();
        for (b, a) in items {
            *amps.entry(b).or_default() += a;
        }
        amps.retain(|_, a| *a != Complex64::new(0.0, 0.0));
        Self {
            amps,
            truncated: false,
        }
    }

    pub fn amplitude(&self, b: &BasisState) -> Complex64 {
        self.amps.get(b).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BasisState, &Complex64)> {
        self.amps.iter()
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.amps.values().all(|a| a.norm_sqr() == 0.0)
    }

    /// Set when an operator dropped components beyond the truncation.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn inner_product(&self, other: &StateVector) -> Complex64 {
        let (small, large, conj_small) = if self.amps.len() <= other.amps.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, a) in &small.amps {
            if let Some(c) = large.amps.get(b) {
                acc += if conj_small { a.conj() * c } else { c.conj() * a };
            }
        }
        acc
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&self) -> Result<StateVector> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DegenerateState("cannot normalize a zero-norm state".into()));
        }
        Ok(self.scale(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> StateVector {
        Self {
            amps: self.amps.iter().map(|(b, a)| (b.clone(), a * c)).collect(),
            truncated: self.truncated,
        }
    }

    /// Exact zeros in the sum are dropped.
    pub fn add(&self, other: &StateVector) -> StateVector {
        let mut amps = self.amps.clone();
        for (b, a) in &other.amps {
            *amps.entry(b.clone()).or_default() += a;
        }
        amps.retain(|_, a| *a != Complex64::new(0.0, 0.0));
        Self {
            amps,
            truncated: self.truncated || other.truncated,
        }
    }

    /// Removes entries with `|amp| < tol`; returns the squared norm removed.
    pub fn prune(&mut self, tol: f64) -> f64 {
        let mut removed = 0.0;
        self.amps.retain(|_, a| {
            let keep = a.norm() >= tol;
            if !keep {
                removed += a.norm_sqr();
            }
            keep
        });
        removed
    }

    /// Restriction to basis states accepted by `keep`.
    pub fn filter<F: Fn(&BasisState) -> bool>(&self, keep: F) -> StateVector {
        Self {
            amps: self
                .amps
                .iter()
                .filter(|(b, _)| keep(b))
                .map(|(b, a)| (b.clone(), *a))
                .collect(),
            truncated: self.truncated,
        }
    }

    pub(crate) fn insert_amp(&mut self, b: BasisState, a: Complex64) {
        *self.amps.entry(b).or_default() += a;
    }

    pub fn distance(&self, other: &StateVector) -> f64 {
        self.add(&other.scale(Complex64::new(-1.0, 0.0))).norm()
    }
}

fn apply_ladder(reg: &Registry, state: &StateVector, mode: ModeId, kind: LadderKind) -> Result<StateVector> {
    reg.check_mode(mode)?;
    let mut out = StateVector {
        amps: BTreeMap::new(),
        truncated: state.truncated,
    };
    for (b, a) in &state.amps {
        match ladder(reg, b, mode.0, kind, true) {
            LadderOutcome::Zero => {}
            LadderOutcome::Truncated => out.truncated = true,
            LadderOutcome::State(nb, f) => out.insert_amp(nb, a * f),
        }
    }
    Ok(out)
}

/// `a†(mode)` on a state. Components pushed past a cap or `n_max` vanish and
/// set the truncation flag.
pub fn create(reg: &Registry, state: &StateVector, mode: ModeId) -> Result<StateVector> {
    apply_ladder(reg, state, mode, LadderKind::Create)
}

/// `a(mode)` on a state.
pub fn annihilate(reg: &Registry, state: &StateVector, mode: ModeId) -> Result<StateVector> {
    apply_ladder(reg, state, mode, LadderKind::Annihilate)
}

/// Largest violation of the canonical (anti)commutation relations for the
/// pair `(a, b)` over the given interior probes.
///
/// Two fermionic modes are checked with anticommutators; any pair involving a
/// boson with commutators. All three relations (`[a, b†] = δ`, `[a, b] = 0`,
/// `[a†, b†] = 0`) are evaluated on every probe.
pub fn commutator_defect(
    reg: &Registry,
    mode_a: ModeId,
    mode_b: ModeId,
    probes: &[BasisState],
) -> Result<f64> {
    reg.check_mode(mode_a)?;
    reg.check_mode(mode_b)?;
    let anti = reg.is_fermion_index(mode_a.0) && reg.is_fermion_index(mode_b.0);
    let sgn = Complex64::new(if anti { 1.0 } else { -1.0 }, 0.0);
    let delta = if mode_a == mode_b { 1.0 } else { 0.0 };
    let mut worst: f64 = 0.0;
    for probe in probes {
        reg.validate_basis(probe)?;
        if reg.n_max < 2 || probe.total() > reg.n_max - 2 {
            return Err(Error::Boundary(format!(
                "{} has {} particles; n_max is {}",
                reg.describe(probe),
                probe.total(),
                reg.n_max
            )));
        }
        for m in [mode_a, mode_b] {
            if !reg.is_fermion_index(m.0) {
                let cap = reg.cap_index(m.0);
                if cap < 2 || probe.occupation(m) > cap - 2 {
                    return Err(Error::Boundary(format!(
                        "{} sits at the occupation cap of {}",
                        reg.describe(probe),
                        reg.mode(m)
                    )));
                }
            }
        }
        let psi = StateVector::basis(probe.clone());
        let ab_dag = annihilate(reg, &create(reg, &psi, mode_b)?, mode_a)?;
        let b_dag_a = create(reg, &annihilate(reg, &psi, mode_a)?, mode_b)?;
        let r1 = ab_dag
            .add(&b_dag_a.scale(sgn))
            .add(&psi.scale(Complex64::new(-delta, 0.0)));
        let ab = annihilate(reg, &annihilate(reg, &psi, mode_b)?, mode_a)?;
        let ba = annihilate(reg, &annihilate(reg, &psi, mode_a)?, mode_b)?;
        let r2 = ab.add(&ba.scale(sgn));
        let adbd = create(reg, &create(reg, &psi, mode_b)?, mode_a)?;
        let bdad = create(reg, &create(reg, &psi, mode_a)?, mode_b)?;
        let r3 = adbd.add(&bdad.scale(sgn));
        worst = worst.max(r1.norm()).max(r2.norm()).max(r3.norm());
    }
    Ok(worst)
}

/// Probe states of the full basis that are strictly inside the truncation for
/// the pair `(a, b)`.
pub fn interior_probes(reg: &Registry, basis: &[BasisState], a: ModeId, b: ModeId) -> Vec<BasisState> {
    basis
        .iter()
        .filter(|p| reg.n_max >= 2 && p.total() <= reg.n_max - 2)
        .filter(|p| {
            [a, b].iter().all(|&m| {
                reg.is_fermion_index(m.0) || {
                    let cap = reg.cap_index(m.0);
                    cap >= 2 && p.occupation(m) <= cap - 2
                }
            })
        })
        .cloned()
        .collect()
}
