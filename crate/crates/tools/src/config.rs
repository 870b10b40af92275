//! Flat key=value pipeline configuration.
//!
//! ```text
//! netlist = fixtures/small.net
//! library = fixtures/demo65.lib
//! manifest = fixtures/small.candidates
//! trojans = fixtures/small.trojans
//! clock_period = 2.0
//! target_density = 0.62
//! coverage_mode = exact        # structural | exact
//! unroll_depth = 2
//! budget = 4096
//! seed = 1
//! max_area_frac = 0.20
//! max_power_frac = 0.20
//! min_sc_gain = 0.0
//! sc_target = 0.75             # optional; switches basis to design-total
//! basis = per-assertion        # per-assertion | design-total
//! df_fraction = 0.25
//! max_rounds = 0               # 0 = unbounded
//! window_w = 20
//! window_h = 2
//! ```
//!
//! Relative paths resolve against the config file's directory.

use gatemon_core::assertion::{DecisionBasis, SelectionConfig};
use gatemon_core::coverage::CoverageMode;
use gatemon_core::eco::EcoConfig;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing required key {0}")]
    Missing(&'static str),
    #[error("key {key}: bad value `{value}`")]
    BadValue { key: String, value: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub netlist: PathBuf,
    pub library: PathBuf,
    pub manifest: Option<PathBuf>,
    pub trojans: Option<PathBuf>,
    pub clock_period: f64,
    pub target_density: f64,
    pub coverage_mode: CoverageMode,
    pub seed: u64,
    pub selection: SelectionConfig,
    pub eco: EcoConfig,
    /// Cycle budget for attack campaigns and clean-run checks.
    pub sim_cycles: usize,
}

impl PipelineConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut netlist = None;
        let mut library = None;
        let mut manifest = None;
        let mut trojans = None;
        let mut clock_period = None;
        let mut target_density = 0.62;
        let mut mode_tag = String::from("structural");
        let mut unroll_depth: u32 = 2;
        let mut budget: u64 = 4096;
        let mut seed: u64 = 0;
        let mut selection = SelectionConfig::default();
        let mut eco = EcoConfig::default();
        let mut sim_cycles: usize = 100_000;

        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let stmt = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if stmt.is_empty() {
                continue;
            }
            let (key, value) = stmt
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line, msg: "expected key = value".into() })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || ConfigError::BadValue { key: key.to_string(), value: value.to_string() };
            match key {
                "netlist" => netlist = Some(base_dir.join(value)),
                "library" => library = Some(base_dir.join(value)),
                "manifest" => manifest = Some(base_dir.join(value)),
                "trojans" => trojans = Some(base_dir.join(value)),
                "clock_period" => clock_period = Some(value.parse().map_err(|_| bad())?),
                "target_density" => target_density = value.parse().map_err(|_| bad())?,
                "coverage_mode" => mode_tag = value.to_string(),
                "unroll_depth" => unroll_depth = value.parse().map_err(|_| bad())?,
                "budget" => budget = value.parse().map_err(|_| bad())?,
                "seed" => seed = value.parse().map_err(|_| bad())?,
                "sim_cycles" => sim_cycles = value.parse().map_err(|_| bad())?,
                "max_area_frac" => selection.max_area_frac = value.parse().map_err(|_| bad())?,
                "max_power_frac" => selection.max_power_frac = value.parse().map_err(|_| bad())?,
                "min_sc_gain" => selection.min_sc_gain = value.parse().map_err(|_| bad())?,
                "sc_target" => selection.sc_target = Some(value.parse().map_err(|_| bad())?),
                "basis" => {
                    selection.basis = match value {
                        "per-assertion" => DecisionBasis::PerAssertion,
                        "design-total" => DecisionBasis::DesignTotal,
                        _ => return Err(bad()),
                    }
                }
                "df_fraction" => eco.df_fraction = value.parse().map_err(|_| bad())?,
                "max_rounds" => {
                    let n: usize = value.parse().map_err(|_| bad())?;
                    eco.max_rounds = if n == 0 { None } else { Some(n) };
                }
                "window_w" => eco.window_w = value.parse().map_err(|_| bad())?,
                "window_h" => eco.window_h = value.parse().map_err(|_| bad())?,
                other => {
                    return Err(ConfigError::Syntax {
                        line,
                        msg: format!("unknown key `{other}`"),
                    })
                }
            }
        }

        let coverage_mode = match mode_tag.as_str() {
            "structural" => CoverageMode::Structural,
            "exact" => CoverageMode::Exact { unroll_depth, budget, budgeted: false },
            other => {
                return Err(ConfigError::BadValue {
                    key: "coverage_mode".into(),
                    value: other.into(),
                })
            }
        };
        Ok(PipelineConfig {
            netlist: netlist.ok_or(ConfigError::Missing("netlist"))?,
            library: library.ok_or(ConfigError::Missing("library"))?,
            manifest,
            trojans,
            clock_period: clock_period.ok_or(ConfigError::Missing("clock_period"))?,
            target_density,
            coverage_mode,
            seed,
            selection,
            eco,
            sim_cycles,
        })
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Ok(Self::parse(&text, base)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = PipelineConfig::parse(
            "netlist = a.net\nlibrary = b.lib\nclock_period = 2.0\n\
             coverage_mode = exact\nunroll_depth = 3\nseed = 7\nsc_target = 0.75\n\
             basis = design-total\nmax_rounds = 5\n",
            Path::new("/tmp/x"),
        )
        .unwrap();
        assert_eq!(cfg.netlist, PathBuf::from("/tmp/x/a.net"));
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.selection.sc_target, Some(0.75));
        assert_eq!(cfg.selection.basis, DecisionBasis::DesignTotal);
        assert_eq!(cfg.eco.max_rounds, Some(5));
        assert!(matches!(cfg.coverage_mode, CoverageMode::Exact { unroll_depth: 3, .. }));
        assert_eq!(cfg.selection.max_area_frac, 0.20);
        assert_eq!(cfg.eco.df_fraction, 0.25);
    }

    #[test]
    fn missing_clock_is_an_error() {
        let err = PipelineConfig::parse("netlist = a\nlibrary = b\n", Path::new("."))
            .unwrap_err();
        assert_eq!(err, ConfigError::Missing("clock_period"));
    }
}
