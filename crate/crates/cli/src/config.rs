//! Scenario configuration: a TOML document with `registry`, `model`,
//! `process` and `execution` tables. Every table rejects unknown keys.

use serde::{Deserialize, Serialize};

use sectorsim::dynamics::{InteractionModel, LadderOp, SMatrixOptions, DEFAULT_DIMENSION_CAP, DEFAULT_SWITCHING_EPSILON};
use sectorsim::{BasisState, Complex64, Error, Mode, ModeId, MomentumGrid, ParticleSpecies, Registry, Statistics};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub registry: Option<RegistryConfig>,
    pub model: Option<ModelConfig>,
    pub process: ProcessConfig,
    #[serde(default)]
    pub execution: ExecutionConfig,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lower: Vec<i32>,
    pub upper: Vec<i32>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            lower: vec![0],
            upper: vec![0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistryConfig {
    #[serde(default)]
    pub grid: GridConfig,
    pub n_max: u32,
    pub species: Vec<SpeciesConfig>,
    pub modes: Vec<ModeConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesConfig {
    pub id: String,
    pub statistics: Statistics,
    /// Bosons only; fermions are always capped at one.
    #[serde(default = "one")]
    pub max_occupation: u32,
    #[serde(default)]
    pub mass: f64,
    #[serde(default)]
    pub charge: i64,
}

fn one() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub species: String,
    /// Defaults to the grid's lower corner.
    pub momentum: Option<Vec<i32>>,
    #[serde(default)]
    pub spin: i32,
    /// Free energy of one quantum in this mode.
    #[serde(default)]
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub coupling: f64,
    #[serde(default)]
    pub coupling_im: f64,
    /// Rightmost operator acts first. Each entry is `+label` (create) or
    /// `-label` (annihilate); see [`parse_mode_label`].
    pub ops: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub terms: Vec<TermConfig>,
    #[serde(default = "default_epsilon")]
    pub switching_epsilon: f64,
    #[serde(default = "default_cap")]
    pub dimension_cap: usize,
    /// Multiplies every coupling; handy for sweeps.
    #[serde(default = "unit")]
    pub coupling_scale: f64,
    #[serde(default)]
    pub s_matrix: SMatrixConfig,
}

fn default_epsilon() -> f64 {
    DEFAULT_SWITCHING_EPSILON
}

fn default_cap() -> usize {
    DEFAULT_DIMENSION_CAP
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SMatrixConfig {
    #[serde(default = "default_schedule")]
    pub schedule: Vec<f64>,
    #[serde(default = "default_time_step")]
    pub time_step: f64,
    #[serde(default = "default_convergence")]
    pub convergence_tolerance: f64,
}

impl Default for SMatrixConfig {
    fn default() -> Self {
        let o = SMatrixOptions::default();
        Self {
            schedule: o.schedule,
            time_step: o.time_step,
            convergence_tolerance: o.convergence_tolerance,
        }
    }
}

fn default_schedule() -> Vec<f64> {
    SMatrixOptions::default().schedule
}

fn default_time_step() -> f64 {
    SMatrixOptions::default().time_step
}

fn default_convergence() -> f64 {
    SMatrixOptions::default().convergence_tolerance
}

impl SMatrixConfig {
    pub fn options(&self) -> SMatrixOptions {
        SMatrixOptions {
            schedule: self.schedule.clone(),
            time_step: self.time_step,
            convergence_tolerance: self.convergence_tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaRowConfig {
    /// Point mass on this basis state (list of mode labels).
    pub state: Option<Vec<String>>,
    /// Uniform over every basis state with this content signature.
    pub sector: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessConfig {
    Decay {
        tau: f64,
        horizon: f64,
        window: f64,
        #[serde(default)]
        product_delay: f64,
        #[serde(default)]
        s_values: Vec<f64>,
    },
    Scattering {
        in_state: Vec<String>,
    },
    Dyson {
        order: usize,
        tau0: f64,
        tau: f64,
        #[serde(default = "dyson_step")]
        step: f64,
        #[serde(default = "dyson_tolerance")]
        tolerance: f64,
    },
    Gamma {
        rows: Vec<GammaRowConfig>,
        #[serde(default = "gamma_tolerance")]
        tolerance: f64,
    },
    Polarization {
        theta_deg: f64,
    },
    Epr {
        theta_a_deg: f64,
        theta_b_deg: f64,
    },
    DoubleSlit {
        cells: usize,
        fringe_period: f64,
        envelope_width: f64,
    },
    Trajectory {
        cells: usize,
        steps: usize,
        x0: f64,
        drift: f64,
        width: f64,
    },
    NoSignaling {
        /// Absent: the engine's own two-detector scenario.
        p_m: Option<f64>,
    },
}

fn dyson_step() -> f64 {
    sectorsim::dynamics::DysonOptions::default().step
}

fn dyson_tolerance() -> f64 {
    sectorsim::dynamics::DysonOptions::default().tolerance
}

fn gamma_tolerance() -> f64 {
    1e-8
}

impl ProcessConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ProcessConfig::Decay { .. } => "decay",
            ProcessConfig::Scattering { .. } => "scattering",
            ProcessConfig::Dyson { .. } => "dyson",
            ProcessConfig::Gamma { .. } => "gamma",
            ProcessConfig::Polarization { .. } => "polarization",
            ProcessConfig::Epr { .. } => "epr",
            ProcessConfig::DoubleSlit { .. } => "double_slit",
            ProcessConfig::Trajectory { .. } => "trajectory",
            ProcessConfig::NoSignaling { .. } => "no_signaling",
        }
    }

    fn needs_model(&self) -> bool {
        matches!(
            self,
            ProcessConfig::Scattering { .. } | ProcessConfig::Dyson { .. } | ProcessConfig::Gamma { .. }
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecutionConfig {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: Option<String>,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
}

/// Replace the tolerance of the same name in the model or process table.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub s_matrix_convergence: Option<f64>,
    pub dyson: Option<f64>,
    pub gamma: Option<f64>,
}

fn default_trials() -> usize {
    10_000
}

impl Default for ExecutionConfig {
    fn default() -> Self {
        Self {
            trials: default_trials(),
            seed: 0,
            output_dir: None,
            tolerances: ToleranceOverrides::default(),
        }
    }
}

/// A configuration problem, reported with the TOML location when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<Error> for ConfigError {
    fn from(e: Error) -> Self {
        ConfigError(e.to_string())
    }
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
    validate(&cfg)?;
    Ok(cfg)
}

/// `toml::Value` form for dotted-path edits before typed parsing.
pub fn parse_value(text: &str) -> Result<toml::Table, ConfigError> {
    text.parse::<toml::Table>().map_err(|e| ConfigError(e.to_string()))
}

pub fn from_value(table: toml::Table) -> Result<ScenarioConfig, ConfigError> {
    let cfg: ScenarioConfig = table.try_into().map_err(|e: toml::de::Error| ConfigError(e.to_string()))?;
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &ScenarioConfig) -> Result<(), ConfigError> {
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(ConfigError(format!(
            "schema_version {} is not supported (expected {SCHEMA_VERSION})",
            cfg.schema_version
        )));
    }
    if cfg.execution.trials == 0 {
        return Err(ConfigError("execution.trials must be at least 1".into()));
    }
    let t = &cfg.execution.tolerances;
    for (name, v) in [("s_matrix_convergence", t.s_matrix_convergence), ("dyson", t.dyson), ("gamma", t.gamma)] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError(format!("execution.tolerances.{name} must be positive")));
            }
        }
    }
    if cfg.process.needs_model() && (cfg.registry.is_none() || cfg.model.is_none()) {
        return Err(ConfigError(format!(
            "process kind '{}' needs [registry] and [model] tables",
            cfg.process.kind()
        )));
    }
    if cfg.model.is_some() && cfg.registry.is_none() {
        return Err(ConfigError("[model] needs a [registry] table".into()));
    }
    Ok(())
}

/// Parses `species@p1,p2:spin`. Momentum defaults to the grid's lower
/// corner and spin to zero, so `gamma` alone names the first cell.
pub fn parse_mode_label(reg: &Registry, label: &str) -> Result<ModeId, ConfigError> {
    let (rest, spin) = match label.rsplit_once(':') {
        Some((r, s)) => (
            r,
            s.trim()
                .parse::<i32>()
                .map_err(|_| ConfigError(format!("bad spin in mode label '{label}'")))?,
        ),
        None => (label, 0),
    };
    let (species, momentum) = match rest.split_once('@') {
        Some((sp, p)) => {
            let m = p
                .split(',')
                .map(|x| x.trim().parse::<i32>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| ConfigError(format!("bad momentum in mode label '{label}'")))?;
            (sp.trim(), m)
        }
        None => (rest.trim(), reg.grid().lower().to_vec()),
    };
    reg.mode_id(&Mode::new(species, momentum, spin))
        .map_err(|e| ConfigError(format!("mode label '{label}': {e}")))
}

pub fn parse_state(reg: &Registry, labels: &[String]) -> Result<BasisState, ConfigError> {
    let mut occ: Vec<(ModeId, u32)> = Vec::new();
    for l in labels {
        let id = parse_mode_label(reg, l)?;
        match occ.iter_mut().find(|(m, _)| *m == id) {
            Some((_, n)) => *n += 1,
            None => occ.push((id, 1)),
        }
    }
    let b = BasisState::from_occupations(occ);
    reg.validate_basis(&b)?;
    Ok(b)
}

pub fn build_registry(cfg: &RegistryConfig) -> Result<Registry, ConfigError> {
    let grid = MomentumGrid::new(cfg.grid.lower.clone(), cfg.grid.upper.clone())?;
    let mut b = Registry::builder(grid.clone(), cfg.n_max);
    for s in &cfg.species {
        let sp = match s.statistics {
            Statistics::Fermion => {
                if s.max_occupation != 1 {
                    return Err(ConfigError(format!("fermion '{}' cannot have max_occupation {}", s.id, s.max_occupation)));
                }
                ParticleSpecies::fermion(&s.id)
            }
            Statistics::Boson => ParticleSpecies::boson(&s.id, s.max_occupation),
        };
        b = b.species(sp.with_mass(s.mass).with_charge(s.charge));
    }
    for m in &cfg.modes {
        let p = m.momentum.clone().unwrap_or_else(|| grid.lower().to_vec());
        b = b.mode(Mode::new(&m.species, p, m.spin));
    }
    Ok(b.build()?)
}

pub fn build_model(reg_cfg: &RegistryConfig, model_cfg: &ModelConfig) -> Result<InteractionModel, ConfigError> {
    let reg = build_registry(reg_cfg)?;
    let mut b = InteractionModel::builder(reg.clone())
        .switching_epsilon(model_cfg.switching_epsilon)
        .dimension_cap(model_cfg.dimension_cap);
    for m in &reg_cfg.modes {
        let p = m.momentum.clone().unwrap_or_else(|| reg.grid().lower().to_vec());
        let id = reg.mode_id(&Mode::new(&m.species, p, m.spin))?;
        b = b.free(id, m.energy);
    }
    for (k, t) in model_cfg.terms.iter().enumerate() {
        if t.ops.is_empty() {
            return Err(ConfigError(format!("model.terms[{k}] has no operators")));
        }
        let ops = t
            .ops
            .iter()
            .map(|o| {
                let (create, label) = match o.trim().split_at_checked(1) {
                    Some(("+", l)) => (true, l),
                    Some(("-", l)) => (false, l),
                    _ => return Err(ConfigError(format!("model.terms[{k}]: operator '{o}' must start with + or -"))),
                };
                let id = parse_mode_label(&reg, label)?;
                Ok(if create { LadderOp::create(id) } else { LadderOp::annihilate(id) })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        let c = Complex64::new(t.coupling, t.coupling_im) * model_cfg.coupling_scale;
        b = b.interaction(c, ops);
    }
    Ok(b.build()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DECAY: &str = r#"
[registry]
n_max = 2
species = [
  { id = "Pu", statistics = "boson", max_occupation = 2, mass = 1.0 },
  { id = "Ps", statistics = "boson", max_occupation = 2 },
  { id = "Q", statistics = "boson", max_occupation = 2 },
]
modes = [
  { species = "Pu", energy = 1.0 },
  { species = "Ps", energy = 0.6 },
  { species = "Q", energy = 0.4 },
]

[model]
terms = [{ coupling = 0.05, ops = ["+Ps", "+Q", "-Pu"] }]

[process]
kind = "scattering"
in_state = ["Pu"]
"#;

    #[test]
    fn parses_and_builds() {
        let cfg = parse_config(DECAY).unwrap();
        assert_eq!(cfg.execution.trials, 10_000);
        let model = build_model(cfg.registry.as_ref().unwrap(), cfg.model.as_ref().unwrap()).unwrap();
        assert_eq!(model.interaction_terms().len(), 2);
        let reg = model.registry();
        assert_eq!(parse_state(reg, &["Pu".into()]).unwrap().total(), 1);
        assert_eq!(parse_mode_label(reg, "Q@0:0").unwrap(), parse_mode_label(reg, "Q").unwrap());
        assert!(parse_mode_label(reg, "X").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_location() {
        let bad = DECAY.replace("n_max = 2", "n_max = 2\ncolour = 3");
        let e = parse_config(&bad).unwrap_err();
        assert!(e.0.contains("colour") && e.0.contains("line"), "{e}");
        let bad = DECAY.replace("in_state = [\"Pu\"]", "in_state = [\"Pu\"]\nspeed = 1");
        assert!(parse_config(&bad).unwrap_err().0.contains("speed"));
    }

    #[test]
    fn model_kinds_need_a_registry() {
        let e = parse_config("[process]\nkind = \"dyson\"\norder = 2\ntau0 = 0.0\ntau = 1.0\n").unwrap_err();
        assert!(e.0.contains("registry"));
        assert!(parse_config("[process]\nkind = \"polarization\"\ntheta_deg = 10.0\n").is_ok());
    }
}
