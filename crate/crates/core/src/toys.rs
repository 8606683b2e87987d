//! Small bundled models used by the scenarios, the check suites and the
//! tests.

use num_complex::Complex64;

use crate::dynamics::{InteractionModel, LadderOp};
use crate::error::Result;
use crate::fock::{BasisState, ModeId, MomentumGrid, ParticleSpecies, Registry, StateVector};

fn single_mode_registry(species: Vec<ParticleSpecies>, n_max: u32) -> Registry {
    let ids: Vec<String> = species.iter().map(|s| s.id.clone()).collect();
    let mut b = Registry::builder(MomentumGrid::line(1), n_max);
    for s in species {
        b = b.species(s);
    }
    for id in &ids {
        b = b.simple_mode(id);
    }
    b.build().expect("toy registry is valid")
}

fn mode(reg: &Registry, species: &str) -> ModeId {
    reg.modes_of(species)[0]
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `P_u → P_s + Q` with one mode per species.
#[derive(Clone, Debug)]
pub struct DecayToy {
    registry: Registry,
}

impl Default for DecayToy {
    fn default() -> Self {
        Self::new()
    }
}

impl DecayToy {
    pub fn new() -> Self {
        Self {
            registry: single_mode_registry(
                vec![
                    ParticleSpecies::boson("Pu", 2).with_mass(1.0),
                    ParticleSpecies::boson("Ps", 2).with_mass(0.6),
                    ParticleSpecies::boson("Q", 2),
                ],
                2,
            ),
        }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    /// `(P_u, P_s, Q)`.
    pub fn modes(&self) -> (ModeId, ModeId, ModeId) {
        let r = &self.registry;
        (mode(r, "Pu"), mode(r, "Ps"), mode(r, "Q"))
    }

    /// `g (a†_Ps a†_Q a_Pu + h.c.)` with free energies `[ω_Pu, ω_Ps, ω_Q]`.
    pub fn model(&self, g: f64, energies: [f64; 3]) -> Result<InteractionModel> {
        let (pu, ps, q) = self.modes();
        InteractionModel::builder(self.registry.clone())
            .free(pu, energies[0])
            .free(ps, energies[1])
            .free(q, energies[2])
            .interaction(
                real(g),
                vec![LadderOp::create(ps), LadderOp::create(q), LadderOp::annihilate(pu)],
            )
            .build()
    }

    pub fn unstable_basis(&self) -> BasisState {
        BasisState::single(self.modes().0)
    }

    pub fn decayed_basis(&self) -> BasisState {
        let (_, ps, q) = self.modes();
        BasisState::from_occupations([(ps, 1), (q, 1)])
    }

    pub fn unstable_state(&self) -> StateVector {
        StateVector::basis(self.unstable_basis())
    }

    pub fn decayed_state(&self) -> StateVector {
        StateVector::basis(self.decayed_basis())
    }
}

/// `γ + A → e + A⁺`.
#[derive(Clone, Debug)]
pub struct AbsorptionToy {
    registry: Registry,
}

impl Default for AbsorptionToy {
    fn default() -> Self {
        Self::new()
    }
}

impl AbsorptionToy {
    pub fn new() -> Self {
        Self {
            registry: single_mode_registry(
                vec![
                    ParticleSpecies::boson("gamma", 1),
                    ParticleSpecies::boson("A", 1).with_mass(10.0),
                    ParticleSpecies::fermion("e").with_charge(-1).with_mass(0.5),
                    ParticleSpecies::boson("A+", 1).with_charge(1).with_mass(9.5),
                ],
                2,
            ),
        }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    /// `g (a†_e a†_A⁺ a_A a_γ + h.c.)`, energies `[ω_γ, ω_A, ω_e, ω_A⁺]`.
    pub fn model(&self, g: f64, energies: [f64; 4]) -> Result<InteractionModel> {
        let r = &self.registry;
        let (gm, a, e, ap) = (mode(r, "gamma"), mode(r, "A"), mode(r, "e"), mode(r, "A+"));
        InteractionModel::builder(r.clone())
            .free(gm, energies[0])
            .free(a, energies[1])
            .free(e, energies[2])
            .free(ap, energies[3])
            .interaction(
                real(g),
                vec![
                    LadderOp::create(e),
                    LadderOp::create(ap),
                    LadderOp::annihilate(a),
                    LadderOp::annihilate(gm),
                ],
            )
            .build()
    }

    pub fn in_basis(&self) -> BasisState {
        let r = &self.registry;
        BasisState::from_occupations([(mode(r, "gamma"), 1), (mode(r, "A"), 1)])
    }
}

/// `γ → e e⁺` and `γ → μ μᶜ`.
#[derive(Clone, Debug)]
pub struct PairProductionToy {
    registry: Registry,
}

impl Default for PairProductionToy {
    fn default() -> Self {
        Self::new()
    }
}

impl PairProductionToy {
    pub fn new() -> Self {
        Self {
            registry: single_mode_registry(
                vec![
                    ParticleSpecies::boson("gamma", 1),
                    ParticleSpecies::fermion("e").with_charge(-1).with_mass(0.3),
                    ParticleSpecies::fermion("e+").with_charge(1).with_mass(0.3),
                    ParticleSpecies::fermion("mu").with_charge(-1).with_mass(0.45),
                    ParticleSpecies::fermion("muc").with_charge(1).with_mass(0.45),
                ],
                2,
            ),
        }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    /// Couplings `(g_e, g_μ)`; energies `[ω_γ, ω_e, ω_e⁺, ω_μ, ω_μᶜ]`.
    pub fn model(&self, g_e: f64, g_mu: f64, energies: [f64; 5]) -> Result<InteractionModel> {
        let r = &self.registry;
        let names = ["gamma", "e", "e+", "mu", "muc"];
        let m: Vec<ModeId> = names.iter().map(|n| mode(r, n)).collect();
        let mut b = InteractionModel::builder(r.clone());
        for (id, e) in m.iter().zip(energies) {
            b = b.free(*id, e);
        }
        b.interaction(
            real(g_e),
            vec![LadderOp::create(m[1]), LadderOp::create(m[2]), LadderOp::annihilate(m[0])],
        )
        .interaction(
            real(g_mu),
            vec![LadderOp::create(m[3]), LadderOp::create(m[4]), LadderOp::annihilate(m[0])],
        )
        .build()
    }

    /// Symmetric default: both pairs resonant with the photon.
    pub fn default_model(&self) -> Result<InteractionModel> {
        self.model(0.02, 0.02, [1.1, 0.55, 0.55, 0.55, 0.55])
    }

    pub fn in_basis(&self) -> BasisState {
        BasisState::single(mode(&self.registry, "gamma"))
    }
}
