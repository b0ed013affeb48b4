//! Scenario configuration: a TOML file with dotted sections, overridable from
//! the command line.

use std::collections::BTreeSet;
use std::f64::consts::TAU as FULL_TURN;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::RunError;
use crate::detection::{CoincidencePattern, DetectionConfig};
use crate::double_pass::{DoublePassConfig, FringeOrder};
use crate::fock::{ModeOccupation, Polarization, Slot, SpatialMode};
use crate::pdc::{minimal_cutoff, PdcParams, DEFAULT_TRUNCATION_TOLERANCE};
use crate::polarization::PolarizationUnitary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Distribution,
    DelayScan,
    FringeScan,
    Amplify,
    Project,
    Montecarlo,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Distribution,
        Scenario::DelayScan,
        Scenario::FringeScan,
        Scenario::Amplify,
        Scenario::Project,
        Scenario::Montecarlo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Distribution => "distribution",
            Scenario::DelayScan => "delay-scan",
            Scenario::FringeScan => "fringe-scan",
            Scenario::Amplify => "amplify",
            Scenario::Project => "project",
            Scenario::Montecarlo => "montecarlo",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Scenario::ALL.into_iter().find(|sc| sc.name() == s).ok_or_else(|| format!("unknown scenario `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(format!("unknown format `{s}` (csv|json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { path: None, format: OutputFormat::Csv }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdcSection {
    pub tau: f64,
    pub pump_phase: f64,
    /// Chosen from `tolerance` when absent.
    pub cutoff: Option<u32>,
    pub tolerance: f64,
}

impl Default for PdcSection {
    fn default() -> Self {
        PdcSection { tau: 0.5, pump_phase: 0.0, cutoff: None, tolerance: DEFAULT_TRUNCATION_TOLERANCE }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DoublePassSection {
    pub tau1: f64,
    pub tau2: f64,
    pub theta: f64,
    pub overlap: f64,
    pub pump_wavelength_um: f64,
    pub coherence_length_um: f64,
    pub cutoff: u32,
}

impl Default for DoublePassSection {
    fn default() -> Self {
        let d = DoublePassConfig::default();
        DoublePassSection {
            tau1: d.tau1,
            tau2: d.tau2,
            theta: d.theta,
            overlap: d.overlap,
            pump_wavelength_um: d.pump_wavelength_um,
            coherence_length_um: d.coherence_length_um,
            cutoff: d.cutoff,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionSection {
    /// `hv`, `diag`, or a real rotation angle in degrees such as `22.5`.
    pub basis_a: String,
    pub basis_b: String,
    pub splitter_slots: Vec<String>,
    pub efficiency: f64,
    pub number_resolving: bool,
}

impl Default for DetectionSection {
    fn default() -> Self {
        DetectionSection {
            basis_a: "hv".into(),
            basis_b: "hv".into(),
            splitter_slots: Vec::new(),
            efficiency: 1.0,
            number_resolving: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub theta_start: f64,
    pub theta_stop: f64,
    pub theta_steps: usize,
    pub delay_start_um: f64,
    pub delay_stop_um: f64,
    pub delay_steps: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            theta_start: 0.0,
            theta_stop: 2.0 * FULL_TURN,
            theta_steps: 201,
            delay_start_um: -400.0,
            delay_stop_um: 400.0,
            delay_steps: 801,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DelayScanSection {
    pub term: String,
}

impl Default for DelayScanSection {
    fn default() -> Self {
        DelayScanSection { term: "1,1;1,1".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FringeScanSection {
    pub order: u32,
}

impl Default for FringeScanSection {
    fn default() -> Self {
        FringeScanSection { order: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProjectSection {
    /// Pair number of the singlet that is measured.
    pub order: u32,
    pub mode: String,
    pub outcome: String,
    pub basis: String,
}

impl Default for ProjectSection {
    fn default() -> Self {
        ProjectSection { order: 2, mode: "a".into(), outcome: "H".into(), basis: "hv".into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Single pass with the `pdc` parameters.
    #[default]
    Single,
    /// Exact double pass with the `double_pass` parameters.
    Double,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloSection {
    pub pulses: u64,
    pub source: Source,
    pub patterns: Vec<String>,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        MonteCarloSection {
            pulses: 1_000_000,
            source: Source::Single,
            patterns: vec!["aH+bV".into(), "aH+aV+bH+bV".into()],
        }
    }
}

/// Everything a scenario run needs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub scenario: Option<Scenario>,
    pub seed: u64,
    pub output: OutputSection,
    pub pdc: PdcSection,
    pub double_pass: DoublePassSection,
    pub detection: DetectionSection,
    pub grid: GridSection,
    pub delay_scan: DelayScanSection,
    pub fringe_scan: FringeScanSection,
    pub project: ProjectSection,
    pub montecarlo: MonteCarloSection,
}

/// Command-line overrides; set fields win over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub tau: Option<f64>,
    pub theta: Option<f64>,
    pub cutoff: Option<u32>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

fn config_error(field: &str, message: impl fmt::Display) -> RunError {
    RunError::Config { field: field.to_string(), message: message.to_string() }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| {
            let field = e.message().split('`').nth(1).unwrap_or("<config>").to_string();
            RunError::Config { field, message: e.to_string() }
        })
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(tau) = o.tau {
            self.pdc.tau = tau;
            self.double_pass.tau1 = tau;
            self.double_pass.tau2 = tau;
        }
        if let Some(theta) = o.theta {
            self.double_pass.theta = theta;
        }
        if let Some(cutoff) = o.cutoff {
            self.pdc.cutoff = Some(cutoff);
            self.double_pass.cutoff = cutoff;
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(out) = &o.out {
            self.output.path = Some(out.clone());
        }
        if let Some(format) = o.format {
            self.output.format = format;
        }
    }

    pub fn pdc_params(&self) -> Result<PdcParams, RunError> {
        let p = &self.pdc;
        if p.tolerance.is_nan() || p.tolerance <= 0.0 {
            return Err(config_error("pdc.tolerance", "must be > 0"));
        }
        let cutoff = p.cutoff.unwrap_or_else(|| minimal_cutoff(p.tau, p.tolerance));
        PdcParams::with_tolerance(p.tau, p.pump_phase, cutoff, p.tolerance).map_err(|e| config_error("pdc", e))
    }

    pub fn double_pass_config(&self) -> Result<DoublePassConfig, RunError> {
        let d = &self.double_pass;
        let cfg = DoublePassConfig {
            tau1: d.tau1,
            tau2: d.tau2,
            theta: d.theta,
            overlap: d.overlap,
            pump_wavelength_um: d.pump_wavelength_um,
            coherence_length_um: d.coherence_length_um,
            cutoff: d.cutoff,
        };
        cfg.validate().map_err(|e| config_error("double_pass", e))?;
        Ok(cfg)
    }

    pub fn detection_config(&self) -> Result<DetectionConfig, RunError> {
        let d = &self.detection;
        let splitter_slots = d
            .splitter_slots
            .iter()
            .map(|s| s.parse::<Slot>().map_err(|e| config_error("detection.splitter_slots", e)))
            .collect::<Result<BTreeSet<_>, _>>()?;
        let cfg = DetectionConfig {
            basis_a: parse_basis(&d.basis_a).map_err(|e| config_error("detection.basis_a", e))?,
            basis_b: parse_basis(&d.basis_b).map_err(|e| config_error("detection.basis_b", e))?,
            splitter_slots,
            efficiency: d.efficiency,
            number_resolving: d.number_resolving,
        };
        cfg.validate().map_err(|e| config_error("detection.efficiency", e))?;
        Ok(cfg)
    }

    pub fn thetas(&self) -> Result<Vec<f64>, RunError> {
        let g = &self.grid;
        check_range("grid.theta", g.theta_start, g.theta_stop, g.theta_steps)?;
        Ok(crate::double_pass::linspace(g.theta_start, g.theta_stop, g.theta_steps))
    }

    pub fn delays_um(&self) -> Result<Vec<f64>, RunError> {
        let g = &self.grid;
        check_range("grid.delay", g.delay_start_um, g.delay_stop_um, g.delay_steps)?;
        Ok(crate::double_pass::linspace(g.delay_start_um, g.delay_stop_um, g.delay_steps))
    }

    pub fn delay_term(&self) -> Result<ModeOccupation, RunError> {
        let term: ModeOccupation = self.delay_scan.term.parse().map_err(|e| config_error("delay_scan.term", e))?;
        if term.total() != 2 && term.total() != 4 {
            return Err(config_error("delay_scan.term", "must be a 2- or 4-photon ket"));
        }
        Ok(term)
    }

    pub fn fringe_order(&self) -> Result<FringeOrder, RunError> {
        FringeOrder::try_from(self.fringe_scan.order).map_err(|e| config_error("fringe_scan.order", e))
    }

    pub fn projection(&self) -> Result<(SpatialMode, Polarization, PolarizationUnitary), RunError> {
        let p = &self.project;
        let mode = match p.mode.as_str() {
            "a" => SpatialMode::A,
            "b" => SpatialMode::B,
            other => return Err(config_error("project.mode", format!("`{other}` is not a|b"))),
        };
        let outcome = match p.outcome.as_str() {
            "H" => Polarization::H,
            "V" => Polarization::V,
            other => return Err(config_error("project.outcome", format!("`{other}` is not H|V"))),
        };
        let basis = parse_basis(&p.basis).map_err(|e| config_error("project.basis", e))?;
        Ok((mode, outcome, basis))
    }

    pub fn patterns(&self) -> Result<Vec<CoincidencePattern>, RunError> {
        if self.montecarlo.patterns.is_empty() {
            return Err(config_error("montecarlo.patterns", "must not be empty"));
        }
        self.montecarlo.patterns.iter().map(|p| p.parse().map_err(|e| config_error("montecarlo.patterns", e))).collect()
    }

    /// Checks everything the named scenario reads.
    pub fn validate(&self, scenario: Scenario) -> Result<(), RunError> {
        if let Some(path) = &self.output.path {
            check_output_dir(path)?;
        }
        match scenario {
            Scenario::Distribution => self.pdc_params().map(drop),
            Scenario::DelayScan => {
                self.double_pass_config()?;
                self.delays_um()?;
                self.delay_term().map(drop)
            }
            Scenario::FringeScan => {
                self.double_pass_config()?;
                self.thetas()?;
                self.fringe_order().map(drop)
            }
            Scenario::Amplify => self.double_pass_config().map(drop),
            Scenario::Project => self.projection().map(drop),
            Scenario::Montecarlo => {
                self.detection_config()?;
                self.patterns()?;
                match self.montecarlo.source {
                    Source::Single => self.pdc_params().map(drop),
                    Source::Double => self.double_pass_config().map(drop),
                }
            }
        }
    }
}

fn check_range(field: &str, start: f64, stop: f64, steps: usize) -> Result<(), RunError> {
    if !(start.is_finite() && stop.is_finite() && stop > start) {
        return Err(config_error(field, format!("empty range [{start}, {stop}]")));
    }
    if steps < 2 {
        return Err(config_error(&format!("{field}_steps"), "scans need at least 2 steps"));
    }
    Ok(())
}

fn check_output_dir(path: &Path) -> Result<(), RunError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let meta = std::fs::metadata(dir).map_err(|e| config_error("output.path", format!("{}: {e}", dir.display())))?;
    if !meta.is_dir() || meta.permissions().readonly() {
        return Err(config_error("output.path", format!("{} is not a writable directory", dir.display())));
    }
    Ok(())
}

/// `hv`, `diag`, or a rotation angle in degrees.
pub fn parse_basis(s: &str) -> Result<PolarizationUnitary, String> {
    match s.trim() {
        "hv" | "HV" => Ok(PolarizationUnitary::identity()),
        "diag" | "45" => Ok(PolarizationUnitary::diagonal()),
        other => other
            .parse::<f64>()
            .ok()
            .filter(|deg| deg.is_finite())
            .map(|deg| PolarizationUnitary::real_rotation(deg.to_radians()))
            .ok_or_else(|| format!("unknown basis `{other}` (hv|diag|<degrees>)")),
    }
}
