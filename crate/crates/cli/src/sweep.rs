//! Parameter sweeps over a dotted config path such as `process.theta_deg`
//! or `model.terms.0.coupling`.

use serde_json::Value as Json;
use toml::{Table, Value};

use crate::config::{from_value, parse_value, ScenarioConfig};
use crate::run::{execute, scalar_fields, Artifacts};
use crate::CliError;

pub const SWEEP_FILE: &str = "sweep.csv";

/// Parses a command-line value as a TOML literal, falling back to a bare
/// string.
pub fn parse_literal(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Sets `path` in `table`, creating missing tables along the way. Array
/// entries are addressed by index. The typed parse that follows rejects
/// keys the schema does not know.
pub fn set_path(table: &mut Table, path: &str, value: Value) -> Result<(), CliError> {
    let unknown = || CliError::Usage(format!("unknown parameter path '{path}'"));
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(unknown());
    }
    let (last, head) = parts.split_last().expect("split yields one part");
    let mut cur: &mut Value = table
        .entry(head.first().copied().unwrap_or(last).to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    if head.is_empty() {
        *cur = value;
        return Ok(());
    }
    for p in head.iter().skip(1).chain(std::iter::once(last)) {
        cur = match cur {
            Value::Table(t) => t.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new())),
            Value::Array(a) => {
                let i: usize = p.parse().map_err(|_| unknown())?;
                a.get_mut(i).ok_or_else(unknown)?
            }
            _ => return Err(unknown()),
        };
    }
    *cur = value;
    Ok(())
}

pub struct SweepPoint {
    pub raw: String,
    pub config: ScenarioConfig,
    pub artifacts: Artifacts,
}

pub fn prepare_sweep(text: &str, path: &str, values: &[String]) -> Result<Vec<ScenarioConfig>, CliError> {
    if values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value".into()));
    }
    let base = parse_value(text)?;
    // the base config must be valid on its own
    from_value(base.clone())?;
    values
        .iter()
        .map(|raw| {
            let mut t = base.clone();
            set_path(&mut t, path, parse_literal(raw))?;
            from_value(t).map_err(|e| {
                if e.0.contains("unknown field") || e.0.contains("unknown variant") {
                    CliError::Usage(format!("unknown parameter path '{path}': {e}"))
                } else {
                    CliError::Usage(format!("{path} = {raw}: {e}"))
                }
            })
        })
        .collect()
}

pub fn run_sweep(text: &str, path: &str, values: &[String]) -> Result<Vec<SweepPoint>, CliError> {
    let configs = prepare_sweep(text, path, values)?;
    configs
        .into_iter()
        .zip(values)
        .map(|(config, raw)| {
            let artifacts = execute(&config)?;
            Ok(SweepPoint {
                raw: raw.clone(),
                config,
                artifacts,
            })
        })
        .collect()
}

fn cell(v: &Json) -> String {
    match v {
        Json::Null => String::new(),
        Json::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// One row per value: the swept value followed by every scalar summary
/// field, columns in key order of the first run.
pub fn combined_csv(path: &str, points: &[SweepPoint]) -> Result<Vec<u8>, CliError> {
    let columns: Vec<String> = points
        .first()
        .map(|p| scalar_fields(&p.artifacts.summary).keys().cloned().collect())
        .unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![path.to_string()];
    header.extend(columns.iter().cloned());
    w.write_record(&header)?;
    for p in points {
        let fields = scalar_fields(&p.artifacts.summary);
        let mut row = vec![p.raw.clone()];
        row.extend(columns.iter().map(|c| fields.get(c).map(cell).unwrap_or_default()));
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

/// Directory name for the `k`-th sweep value.
pub fn point_dir(k: usize, raw: &str) -> String {
    let clean: String = raw
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect();
    format!("{k:03}_{clean}")
}

#[cfg(test)]
mod tests {
    use super::*;

    const POL: &str = "[process]\nkind = \"polarization\"\ntheta_deg = 0.0\n\n[execution]\ntrials = 100\n";

    #[test]
    fn literals() {
        assert_eq!(parse_literal("0.5"), Value::Float(0.5));
        assert_eq!(parse_literal("3"), Value::Integer(3));
        assert_eq!(parse_literal("abc"), Value::String("abc".into()));
    }

    #[test]
    fn paths_resolve_or_fail() {
        let cfgs = prepare_sweep(POL, "process.theta_deg", &["10".into(), "20.5".into()]).unwrap();
        assert!(matches!(cfgs[1].process, crate::config::ProcessConfig::Polarization { theta_deg } if theta_deg == 20.5));
        let cfgs = prepare_sweep(POL, "execution.seed", &["7".into()]).unwrap();
        assert_eq!(cfgs[0].execution.seed, 7);
        for bad in ["process.thetta", "execution.nope", "nothing", "process.theta_deg.x", ""] {
            assert!(matches!(prepare_sweep(POL, bad, &["1".into()]), Err(CliError::Usage(_))), "{bad}");
        }
        assert!(matches!(prepare_sweep(POL, "process.theta_deg", &[]), Err(CliError::Usage(_))));
    }

    #[test]
    fn array_index_paths() {
        let mut t: Table = "a = [{ b = 1 }]".parse().unwrap();
        set_path(&mut t, "a.0.b", Value::Integer(5)).unwrap();
        assert_eq!(t["a"][0]["b"].as_integer(), Some(5));
        assert!(set_path(&mut t, "a.1.b", Value::Integer(5)).is_err());
        assert!(set_path(&mut t, "a.x", Value::Integer(5)).is_err());
    }

    #[test]
    fn combined_rows() {
        let pts = run_sweep(POL, "process.theta_deg", &["0".into(), "90".into()]).unwrap();
        let text = String::from_utf8(combined_csv("process.theta_deg", &pts).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("process.theta_deg,"));
        assert!(lines[0].contains("plus_frequency"));
    }
}
