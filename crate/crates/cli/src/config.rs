//! Flat-section key-value configuration files.
//!
//! The format is deliberately small: `[section]` headers, `key = value`
//! lines, `#` comments, blank lines. Values are numbers, comma-separated
//! number lists, or bare words. Every key is optional; an empty file
//! resolves to the built-in defaults. Unknown keys abort in strict mode and
//! are reported as warnings otherwise.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use retrospin_core::{DecoherenceConfig, EnsembleConfig, SequenceConfig};

use crate::error::CliError;

/// Which scheme `simulate` runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Pick three-pulse when tau3 > 0, two-pulse otherwise.
    Auto,
    TwoPulse,
    ThreePulse,
}

/// Monte Carlo size shared by the run commands.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RunParams {
    pub scheme: Scheme,
    pub n_trajectories: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepParams {
    /// Squeezing-train durations, milliseconds.
    pub tau1_ms: Vec<f64>,
    /// Retrodiction-train durations, milliseconds; 0 runs the two-pulse scheme.
    pub tau3_ms: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareParams {
    /// Total probing durations, milliseconds.
    pub total_ms: Vec<f64>,
    /// Fixed squeezing fraction; absent means optimal-split scan.
    pub split_fraction: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleParams {
    /// Coupling values swept as a Cartesian cube.
    pub kappa_values: Vec<f64>,
    pub n_trajectories: usize,
    pub grid_half_width: f64,
    pub grid_points: usize,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BaeParams {
    /// Total coupling budget of the demonstration.
    pub kappa_budget: f64,
    pub n_trajectories: usize,
}

/// Fully validated configuration with defaults applied.
#[derive(Clone, Debug, Serialize)]
pub struct ResolvedConfig {
    pub ensemble: EnsembleConfig,
    pub sequence: SequenceConfig,
    pub decoherence: DecoherenceConfig,
    pub run: RunParams,
    pub sweep: SweepParams,
    pub compare: CompareParams,
    pub oracle: OracleParams,
    pub bae: BaeParams,
}

impl Default for ResolvedConfig {
    fn default() -> Self {
        Self {
            ensemble: EnsembleConfig::default(),
            sequence: SequenceConfig::default(),
            decoherence: DecoherenceConfig::default(),
            run: RunParams {
                scheme: Scheme::Auto,
                n_trajectories: 100_000,
            },
            sweep: SweepParams {
                tau1_ms: vec![0.6, 1.0, 1.4, 1.8],
                tau3_ms: vec![0.0, 0.9, 1.7, 2.5],
            },
            compare: CompareParams {
                total_ms: vec![0.4, 0.8, 1.23, 1.6, 2.0, 2.5, 3.0, 3.6],
                split_fraction: None,
            },
            oracle: OracleParams {
                kappa_values: vec![0.0, 0.5, 1.0, 2.0],
                n_trajectories: 200_000,
                grid_half_width: 8.0,
                grid_points: 2001,
            },
            bae: BaeParams {
                kappa_budget: 2.0,
                n_trajectories: 2000,
            },
        }
    }
}

impl ResolvedConfig {
    /// Content digest of the resolved configuration: SHA-256 over the
    /// canonical sorted-key JSON, so it is independent of key order in the
    /// source file.
    pub fn digest(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("value serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.ensemble.validate()?;
        self.sequence.validate()?;
        self.decoherence.validate()?;
        if self.run.n_trajectories == 0 {
            return Err(CliError::invalid("run.n_traj must be positive"));
        }
        if let Some(f) = self.compare.split_fraction {
            if !(f > 0.0 && f < 1.0) {
                return Err(CliError::invalid(
                    "compare.split_fraction must lie in (0, 1)",
                ));
            }
        }
        if self.bae.kappa_budget <= 0.0 {
            return Err(CliError::invalid("bae.kappa_budget must be positive"));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct Entry {
    section: String,
    key: String,
    value: String,
    line: usize,
}

fn tokenize(text: &str) -> Result<Vec<Entry>, CliError> {
    let mut entries = Vec::new();
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                return Err(CliError::parse(line, "unterminated section header"));
            };
            section = name.trim().to_string();
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(CliError::parse(line, "expected `key = value`"));
        };
        if section.is_empty() {
            return Err(CliError::parse(line, "key outside any [section]"));
        }
        entries.push(Entry {
            section: section.clone(),
            key: key.trim().to_string(),
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(entries)
}

fn parse_number(entry: &Entry) -> Result<f64, CliError> {
    entry.value.parse::<f64>().map_err(|_| {
        CliError::parse(
            entry.line,
            format!("`{}` is not a number for {}", entry.value, entry.key),
        )
    })
}

fn parse_count(entry: &Entry) -> Result<usize, CliError> {
    let n = parse_number(entry)?;
    if n < 0.0 || n.fract() != 0.0 || n > 1e15 {
        return Err(CliError::parse(
            entry.line,
            format!("`{}` is not a whole count for {}", entry.value, entry.key),
        ));
    }
    Ok(n as usize)
}

fn parse_list(entry: &Entry) -> Result<Vec<f64>, CliError> {
    entry
        .value
        .split(',')
        .map(|piece| {
            piece.trim().parse::<f64>().map_err(|_| {
                CliError::parse(
                    entry.line,
                    format!("`{}` is not a number list for {}", entry.value, entry.key),
                )
            })
        })
        .collect()
}

/// Result of loading a configuration file.
#[derive(Debug)]
pub struct LoadedConfig {
    pub config: ResolvedConfig,
    /// Unknown keys encountered outside strict mode.
    pub warnings: Vec<String>,
}

/// Parses and validates a configuration file. `strict` turns unknown keys
/// into errors.
pub fn load_config(path: &Path, strict: bool) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::invalid(format!("cannot read {}: {e}", path.display())))?;
    resolve_config(&text, strict)
}

/// Parses configuration text against defaults.
pub fn resolve_config(text: &str, strict: bool) -> Result<LoadedConfig, CliError> {
    let entries = tokenize(text)?;
    let mut config = ResolvedConfig::default();
    let mut warnings = Vec::new();
    let mut seen = BTreeSet::new();

    for entry in &entries {
        let full_key = format!("{}.{}", entry.section, entry.key);
        if !seen.insert(full_key.clone()) {
            return Err(CliError::parse(
                entry.line,
                format!("duplicate key {full_key}"),
            ));
        }
        let known = apply_entry(&mut config, entry)?;
        if !known {
            if strict {
                return Err(CliError::parse(
                    entry.line,
                    format!("unknown key {full_key}"),
                ));
            }
            warnings.push(format!("line {}: ignoring unknown key {full_key}", entry.line));
        }
    }

    config.validate()?;
    Ok(LoadedConfig { config, warnings })
}

/// Applies one entry; returns false when the key is not recognized.
fn apply_entry(config: &mut ResolvedConfig, entry: &Entry) -> Result<bool, CliError> {
    const MS: f64 = 1e-3;
    match (entry.section.as_str(), entry.key.as_str()) {
        ("ensemble", "atom_count") => config.ensemble.atom_count = parse_number(entry)?,
        ("ensemble", "spin_per_atom") => config.ensemble.spin_per_atom = parse_number(entry)?,
        ("ensemble", "polarization") => config.ensemble.polarization = parse_number(entry)?,
        ("ensemble", "thermal_factor") => config.ensemble.thermal_factor = parse_number(entry)?,

        ("sequence", "tau1_ms") => config.sequence.tau1 = parse_number(entry)? * MS,
        ("sequence", "tau2_ms") => config.sequence.tau2 = parse_number(entry)? * MS,
        ("sequence", "tau3_ms") => config.sequence.tau3 = parse_number(entry)? * MS,
        ("sequence", "gap_ms") => config.sequence.gap = parse_number(entry)? * MS,
        ("sequence", "larmor_khz") => {
            config.sequence.larmor_frequency =
                2.0 * std::f64::consts::PI * parse_number(entry)? * 1e3;
        }
        ("sequence", "duty_factor") => config.sequence.duty_factor = parse_number(entry)?,
        ("sequence", "kappa_rate") => config.sequence.kappa_rate = parse_number(entry)?,
        ("sequence", "strobe_multiplier") => {
            config.sequence.strobe_multiplier = parse_number(entry)?;
        }

        ("decoherence", "transverse_rate") => {
            config.decoherence.transverse_rate = parse_number(entry)?;
        }
        ("decoherence", "depumping_per_kappa2") => {
            config.decoherence.depumping_per_kappa2 = parse_number(entry)?;
        }
        ("decoherence", "dark_rate") => config.decoherence.dark_rate = parse_number(entry)?,

        ("run", "scheme") => {
            config.run.scheme = match entry.value.as_str() {
                "auto" => Scheme::Auto,
                "two-pulse" => Scheme::TwoPulse,
                "three-pulse" => Scheme::ThreePulse,
                other => {
                    return Err(CliError::parse(
                        entry.line,
                        format!("unknown scheme `{other}` (auto|two-pulse|three-pulse)"),
                    ))
                }
            };
        }
        ("run", "n_traj") => config.run.n_trajectories = parse_count(entry)?,

        ("sweep", "tau1_ms_list") => config.sweep.tau1_ms = parse_list(entry)?,
        ("sweep", "tau3_ms_list") => config.sweep.tau3_ms = parse_list(entry)?,

        ("compare", "total_ms_list") => config.compare.total_ms = parse_list(entry)?,
        ("compare", "split_fraction") => {
            config.compare.split_fraction = Some(parse_number(entry)?);
        }

        ("oracle", "kappa_values") => config.oracle.kappa_values = parse_list(entry)?,
        ("oracle", "n_traj") => config.oracle.n_trajectories = parse_count(entry)?,
        ("oracle", "grid_half_width") => config.oracle.grid_half_width = parse_number(entry)?,
        ("oracle", "grid_points") => config.oracle.grid_points = parse_count(entry)?,

        ("bae", "kappa_budget") => config.bae.kappa_budget = parse_number(entry)?,
        ("bae", "n_traj") => config.bae.n_trajectories = parse_count(entry)?,

        _ => return Ok(false),
    }
    Ok(true)
}

/// Renders the resolved configuration back into the file format, for the
/// `resolved_config` artifact every command emits.
pub fn render(config: &ResolvedConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[ensemble]");
    let _ = writeln!(out, "atom_count = {:e}", config.ensemble.atom_count);
    let _ = writeln!(out, "spin_per_atom = {}", config.ensemble.spin_per_atom);
    let _ = writeln!(out, "polarization = {}", config.ensemble.polarization);
    let _ = writeln!(out, "thermal_factor = {}", config.ensemble.thermal_factor);
    let _ = writeln!(out, "\n[sequence]");
    let _ = writeln!(out, "tau1_ms = {}", config.sequence.tau1 * 1e3);
    let _ = writeln!(out, "tau2_ms = {}", config.sequence.tau2 * 1e3);
    let _ = writeln!(out, "tau3_ms = {}", config.sequence.tau3 * 1e3);
    let _ = writeln!(out, "gap_ms = {}", config.sequence.gap * 1e3);
    let _ = writeln!(
        out,
        "larmor_khz = {}",
        config.sequence.larmor_frequency / (2.0 * std::f64::consts::PI * 1e3)
    );
    let _ = writeln!(out, "duty_factor = {}", config.sequence.duty_factor);
    let _ = writeln!(out, "kappa_rate = {}", config.sequence.kappa_rate);
    let _ = writeln!(
        out,
        "strobe_multiplier = {}",
        config.sequence.strobe_multiplier
    );
    let _ = writeln!(out, "\n[decoherence]");
    let _ = writeln!(
        out,
        "transverse_rate = {}",
        config.decoherence.transverse_rate
    );
    let _ = writeln!(
        out,
        "depumping_per_kappa2 = {}",
        config.decoherence.depumping_per_kappa2
    );
    let _ = writeln!(out, "dark_rate = {}", config.decoherence.dark_rate);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_valid_defaults() {
        let loaded = resolve_config("", true).unwrap();
        assert!(loaded.warnings.is_empty());
        assert_eq!(loaded.config.sequence.duty_factor, 0.14);
        assert_eq!(loaded.config.sequence.gap, 0.3e-3);
        assert_eq!(loaded.config.ensemble.thermal_factor, 1.06);
        let larmor_khz =
            loaded.config.sequence.larmor_frequency / (2.0 * std::f64::consts::PI * 1e3);
        assert!((larmor_khz - 500.0).abs() < 1e-9);
    }

    #[test]
    fn values_and_units_are_applied() {
        let text = "
[sequence]
tau1_ms = 1.4
tau3_ms = 1.7   # retrodiction train
larmor_khz = 250

[run]
n_traj = 50000
scheme = three-pulse
";
        let loaded = resolve_config(text, true).unwrap();
        assert_eq!(loaded.config.sequence.tau1, 1.4e-3);
        assert_eq!(loaded.config.sequence.tau3, 1.7e-3);
        assert_eq!(loaded.config.run.n_trajectories, 50_000);
        assert_eq!(loaded.config.run.scheme, Scheme::ThreePulse);
    }

    #[test]
    fn invariant_violations_name_the_field() {
        let err = resolve_config("[sequence]\nduty_factor = 1.5\n", true).unwrap_err();
        assert!(err.to_string().contains("duty_factor"), "{err}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = resolve_config("[sequence]\ntau1_ms == 3\n", true).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = resolve_config("[run]\nn_traj = many\n", true).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn unknown_keys_strict_vs_lenient() {
        let text = "[sequence]\nspelling_mistake = 1\n";
        assert!(resolve_config(text, true).is_err());
        let loaded = resolve_config(text, false).unwrap();
        assert_eq!(loaded.warnings.len(), 1);
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let text = "[sequence]\ntau1_ms = 1\ntau1_ms = 2\n";
        assert!(resolve_config(text, true).is_err());
    }

    #[test]
    fn digest_is_stable_under_key_reordering() {
        let a = resolve_config("[sequence]\ntau1_ms = 1.2\ngap_ms = 0.4\n", true).unwrap();
        let b = resolve_config("[sequence]\ngap_ms = 0.4\ntau1_ms = 1.2\n", true).unwrap();
        assert_eq!(a.config.digest(), b.config.digest());
        let c = resolve_config("[sequence]\ngap_ms = 0.4\ntau1_ms = 1.3\n", true).unwrap();
        assert_ne!(a.config.digest(), c.config.digest());
        // Defaults digest to the same value every time.
        assert_eq!(
            ResolvedConfig::default().digest(),
            ResolvedConfig::default().digest()
        );
    }
}
