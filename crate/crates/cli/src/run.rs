//! Executes one scenario in memory. Nothing touches the filesystem here, so
//! a failed run leaves no partial output behind.

use serde_json::{json, Map, Value};

use sectorsim::collapse::{gamma_from_s, is_unistochastic, RowWeights};
use sectorsim::dynamics::{build_hamiltonians, dyson_truncated, extract_s_matrix, interaction_picture_u, DysonOptions};
use sectorsim::linalg::{frobenius, CMatrix};
use sectorsim::locality::{no_signaling_mc, two_detector_scenario};
use sectorsim::measurement::{
    double_slit_scenario, double_slit_setup, epr_scenario, epr_setup, fringe_profile, polarization_run,
    polarization_scenario, run_batch, trajectory_scenario, MeasurementRecord, TrajectorySpec,
};
use sectorsim::processes::{decay_collapse_sim, decay_report, time_translation_diagnostic, DecaySpec, ScatteringScenario};
use sectorsim::{ContentSignature, InteractionModel, SeedPath};

use crate::config::{build_model, parse_state, ProcessConfig, ScenarioConfig};
use crate::CliError;

pub const SUMMARY_FILE: &str = "summary.json";
pub const TRIALS_FILE: &str = "trials.csv";

/// Data files of one run, in write order. `summary` is also serialized as
/// `summary.json` inside `files`.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub summary: Value,
    pub files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    fn new(mut summary: Value, cfg: &ScenarioConfig, mut files: Vec<(String, Vec<u8>)>) -> Result<Self, CliError> {
        let m = summary.as_object_mut().expect("summary is an object");
        m.insert("schema_version".into(), json!(cfg.schema_version));
        m.insert("kind".into(), json!(cfg.process.kind()));
        m.insert("seed".into(), json!(cfg.execution.seed));
        m.insert("trials".into(), json!(cfg.execution.trials));
        let mut text = serde_json::to_vec_pretty(&summary)?;
        text.push(b'\n');
        files.insert(0, (SUMMARY_FILE.into(), text));
        Ok(Self { summary, files })
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }
}

fn csv_bytes<const N: usize>(header: [&str; N], rows: impl IntoIterator<Item = [String; N]>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

fn model_of(cfg: &ScenarioConfig) -> Result<InteractionModel, CliError> {
    match (&cfg.registry, &cfg.model) {
        (Some(r), Some(m)) => Ok(build_model(r, m)?),
        _ => Err(CliError::Usage(format!(
            "process kind '{}' needs [registry] and [model] tables",
            cfg.process.kind()
        ))),
    }
}

fn s_options(cfg: &ScenarioConfig) -> sectorsim::dynamics::SMatrixOptions {
    let mut o = cfg.model.as_ref().map(|m| m.s_matrix.options()).unwrap_or_default();
    if let Some(t) = cfg.execution.tolerances.s_matrix_convergence {
        o.convergence_tolerance = t;
    }
    o
}

pub fn format_complex_table(m: &CMatrix) -> String {
    let mut out = String::new();
    for r in m.row_iter() {
        let row: Vec<String> = r.iter().map(|z| format!("{:.17e}{:+.17e}i", z.re, z.im)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

fn measurement_rows(records: &[MeasurementRecord]) -> Vec<[String; 4]> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let regions: Vec<&str> = r.fired.iter().map(|f| f.label.as_str()).collect();
            let eig: Vec<String> = r.fired.iter().map(|f| f.eigenvalue.to_string()).collect();
            [i.to_string(), regions.join(";"), eig.join(";"), r.event.seed_path.to_string()]
        })
        .collect()
}

fn one_per_wing(records: &[MeasurementRecord], wings: usize) -> bool {
    records
        .iter()
        .all(|r| r.fired.len() == wings && r.fired.iter().enumerate().all(|(w, f)| f.wing == w))
}

const MEASUREMENT_HEADER: [&str; 4] = ["run", "regions", "eigenvalues", "seed_path"];

pub fn execute(cfg: &ScenarioConfig) -> Result<Artifacts, CliError> {
    let seed = cfg.execution.seed;
    let trials = cfg.execution.trials;
    match &cfg.process {
        ProcessConfig::Decay {
            tau,
            horizon,
            window,
            product_delay,
            s_values,
        } => {
            let spec = DecaySpec {
                tau: *tau,
                horizon: *horizon,
                window: *window,
                product_delay: *product_delay,
            };
            let records = decay_collapse_sim(&spec, seed, trials)?;
            let report = decay_report(&spec, &records)?;
            let translation = time_translation_diagnostic(&spec, s_values, Some(&records))?;
            let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
            let csv = csv_bytes(
                ["run", "seed_path", "jump_time", "product_time"],
                records.iter().enumerate().map(|(i, r)| {
                    [i.to_string(), r.seed_path.to_string(), opt(r.jump_time), opt(r.product_time)]
                }),
            )?;
            let mut summary = serde_json::to_value(&report)?;
            summary["rate"] = json!(spec.rate());
            summary["time_translation"] = serde_json::to_value(&translation)?;
            Artifacts::new(summary, cfg, vec![(TRIALS_FILE.into(), csv)])
        }
        ProcessConfig::Scattering { in_state } => {
            let model = model_of(cfg)?;
            let input = parse_state(model.registry(), in_state)?;
            let sc = ScatteringScenario::prepare(&model, input, &s_options(cfg))?;
            let freq = sc.frequencies(seed, 0, trials)?;
            let c = sc.collapser();
            let csv = csv_bytes(
                ["run", "seed_path", "sector"],
                (0..trials).map(|i| {
                    let path = SeedPath::new(seed, i as u64);
                    [i.to_string(), path.to_string(), c.signatures()[c.sample_index(&path)].to_string()]
                }),
            )?;
            let summary = json!({
                "in_signature": sc.in_signature().to_string(),
                "s_unitarity_defect": sc.s_matrix().unitarity_defect(),
                "s_half_time": sc.s_matrix().half_time(),
                "sectors": freq.rows,
                "probability_sum": freq.probability_sum,
                "frequency_sum": freq.rows.iter().map(|r| r.frequency).sum::<f64>(),
                "max_abs_z": freq.max_abs_z,
                "cross_sector_post_states": freq.cross_sector_post_states,
            });
            Artifacts::new(summary, cfg, vec![(TRIALS_FILE.into(), csv)])
        }
        ProcessConfig::Dyson {
            order,
            tau0,
            tau,
            step,
            tolerance,
        } => {
            let model = model_of(cfg)?;
            let ham = build_hamiltonians(&model)?;
            let exact = interaction_picture_u(&ham, *tau0, *tau);
            let opts = DysonOptions {
                step: *step,
                tolerance: cfg.execution.tolerances.dyson.unwrap_or(*tolerance),
            };
            let mut defects = Vec::new();
            for n in 1..=*order {
                let d = dyson_truncated(&ham, n, *tau0, *tau, &opts)?;
                defects.push(frobenius(&(&exact - d)));
            }
            let csv = csv_bytes(
                ["order", "defect"],
                defects.iter().enumerate().map(|(k, d)| [(k + 1).to_string(), d.to_string()]),
            )?;
            let summary = json!({
                "order": order,
                "dimension": ham.dimension(),
                "defect": defects.last().copied(),
                "defects": defects,
            });
            Artifacts::new(summary, cfg, vec![("orders.csv".into(), csv)])
        }
        ProcessConfig::Gamma { rows, tolerance } => {
            let model = model_of(cfg)?;
            let reg = model.registry();
            let weights = rows
                .iter()
                .enumerate()
                .map(|(k, r)| match (&r.state, &r.sector) {
                    (Some(s), None) => Ok(RowWeights::PointMass(parse_state(reg, s)?)),
                    (None, Some(sig)) => Ok(RowWeights::Uniform(ContentSignature::new(sig.iter()))),
                    _ => Err(CliError::Usage(format!(
                        "process.rows[{k}] needs exactly one of 'state' or 'sector'"
                    ))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let ham = build_hamiltonians(&model)?;
            let s = extract_s_matrix(&model, &ham, &s_options(cfg))?;
            let g = gamma_from_s(reg, &s, &weights)?;
            let tol = cfg.execution.tolerances.gamma.unwrap_or(*tolerance);
            let mut files = vec![("gamma.txt".into(), g.to_table().into_bytes())];
            let mut summary = json!({
                "rows": g.row_labels.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
                "columns": g.col_labels.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
                "max_row_sum_error": g.max_row_sum_error(),
                "verdict": Value::Null,
                "witness_error": Value::Null,
                "reason": "Γ is not square",
            });
            if g.is_square() {
                let v = is_unistochastic(&g.entries, tol)?;
                summary["verdict"] = serde_json::to_value(v.verdict)?;
                summary["witness_error"] = json!(v.witness_error);
                summary["reason"] = json!(v.reason);
                if let Some(w) = &v.witness {
                    files.push(("witness.txt".into(), format_complex_table(w).into_bytes()));
                }
            }
            Artifacts::new(summary, cfg, files)
        }
        ProcessConfig::Polarization { theta_deg } => {
            let theta = theta_deg.to_radians();
            let report = polarization_run(theta, seed, trials)?;
            let (sc, input) = polarization_scenario(theta)?;
            let records = run_batch(&sc.prepare(&input)?, seed, trials);
            let mut summary = serde_json::to_value(&report)?;
            summary["theta_deg"] = json!(theta_deg);
            summary["exactly_one_per_wing"] = json!(one_per_wing(&records, 1));
            let csv = csv_bytes(MEASUREMENT_HEADER, measurement_rows(&records))?;
            Artifacts::new(summary, cfg, vec![(TRIALS_FILE.into(), csv)])
        }
        ProcessConfig::Epr { theta_a_deg, theta_b_deg } => {
            let (ta, tb) = (theta_a_deg.to_radians(), theta_b_deg.to_radians());
            let report = epr_scenario(ta, tb, seed, trials)?;
            let (sc, input) = epr_setup(ta, tb)?;
            let records = run_batch(&sc.prepare(&input)?, seed, trials);
            let mut summary = serde_json::to_value(&report)?;
            summary["theta_a_deg"] = json!(theta_a_deg);
            summary["theta_b_deg"] = json!(theta_b_deg);
            summary["exactly_one_per_wing"] = json!(one_per_wing(&records, 2));
            let csv = csv_bytes(MEASUREMENT_HEADER, measurement_rows(&records))?;
            Artifacts::new(summary, cfg, vec![(TRIALS_FILE.into(), csv)])
        }
        ProcessConfig::DoubleSlit {
            cells,
            fringe_period,
            envelope_width,
        } => {
            let profile = fringe_profile(*cells, *fringe_period, *envelope_width);
            let hist = double_slit_scenario(&profile, seed, trials)?;
            let (sc, input) = double_slit_setup(&profile)?;
            let records = run_batch(&sc.prepare(&input)?, seed, trials);
            let mut summary = serde_json::to_value(&hist)?;
            summary["exactly_one_per_wing"] = json!(one_per_wing(&records, 1));
            let csv = csv_bytes(MEASUREMENT_HEADER, measurement_rows(&records))?;
            Artifacts::new(summary, cfg, vec![(TRIALS_FILE.into(), csv)])
        }
        ProcessConfig::Trajectory {
            cells,
            steps,
            x0,
            drift,
            width,
        } => {
            let spec = TrajectorySpec {
                cells: *cells,
                n_steps: *steps,
                x0: *x0,
                drift: *drift,
                width: *width,
            };
            let mut rows = Vec::new();
            let mut drifts = Vec::new();
            for t in 0..trials {
                let r = trajectory_scenario(&spec, seed, t as u64)?;
                for (k, (cell, ev)) in r.cells.iter().zip(&r.events).enumerate() {
                    rows.push([t.to_string(), k.to_string(), cell.to_string(), ev.seed_path.to_string()]);
                }
                drifts.extend(r.inferred_drift);
            }
            let mean = drifts.iter().sum::<f64>() / drifts.len().max(1) as f64;
            let summary = json!({
                "drift": drift,
                "mean_inferred_drift": (!drifts.is_empty()).then_some(mean),
                "inferred_drifts": drifts,
            });
            let csv = csv_bytes(["trajectory", "step", "cell", "seed_path"], rows)?;
            Artifacts::new(summary, cfg, vec![(TRIALS_FILE.into(), csv)])
        }
        ProcessConfig::NoSignaling { p_m } => {
            let report = match p_m {
                Some(p) => no_signaling_mc(*p, trials, seed)?,
                None => two_detector_scenario(trials, seed)?,
            };
            let mut summary = serde_json::to_value(&report)?;
            summary["engine_scenario"] = json!(p_m.is_none());
            Artifacts::new(summary, cfg, Vec::new())
        }
    }
}

/// Top-level scalar entries of a summary, in key order.
pub fn scalar_fields(summary: &Value) -> Map<String, Value> {
    summary
        .as_object()
        .map(|m| {
            m.iter()
                .filter(|(_, v)| v.is_number() || v.is_boolean() || v.is_string() || v.is_null())
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect()
        })
        .unwrap_or_default()
}
