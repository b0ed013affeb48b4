//! Named scenarios behind the `easer-sim` binary.

mod config;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;

pub use config::{
    parse_basis, DelayScanSection, DetectionSection, DoublePassSection, FringeScanSection, GridSection,
    MonteCarloSection, OutputFormat, OutputSection, Overrides, PdcSection, ProjectSection, Scenario, ScenarioConfig,
    Source,
};
pub use output::{Cell, Table};

use crate::detection::{
    click_pattern_probability, entanglement_entropy, monte_carlo_counts, project_and_renormalize, schmidt_coefficients,
};
use crate::double_pass::{
    amplification_ratios, delay_scan, exact_double_pass, fringe_scan, measured_ratio, second_pass_gain,
    DoublePassConfig, FOUR_PHOTON_TERMS, MEASURED_SECOND_PASS_FOUR, MEASURED_SECOND_PASS_TWO, TWO_PHOTON_TERMS,
};
use crate::error::Error;
use crate::pdc::{mean_pair_number, pair_distribution, singlet_term, state_analytic};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("scenario {scenario}: {source}")]
    Library {
        scenario: Scenario,
        #[source]
        source: Error,
    },

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    /// 2 for configuration problems, 3 for numeric failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config { .. } => 2,
            RunError::Library { source, .. } => match source {
                Error::InvalidParameter(_)
                | Error::OutOfValidity(_)
                | Error::NotUnitary { .. }
                | Error::InvalidPattern(_) => 2,
                Error::ConvergenceFailure { .. }
                | Error::CutoffExceeded { .. }
                | Error::UnsupportedState(_)
                | Error::ZeroProbabilityOutcome => 3,
            },
            RunError::Io { .. } => 1,
        }
    }
}

/// Runs `scenario` and returns its table without writing anything.
pub fn run_scenario(scenario: Scenario, cfg: &ScenarioConfig) -> Result<Table, RunError> {
    cfg.validate(scenario)?;
    let lib = |source| RunError::Library { scenario, source };
    match scenario {
        Scenario::Distribution => distribution(cfg).map_err(lib),
        Scenario::DelayScan => delay(cfg).map_err(lib),
        Scenario::FringeScan => fringe(cfg).map_err(lib),
        Scenario::Amplify => amplify(cfg).map_err(lib),
        Scenario::Project => project(cfg).map_err(lib),
        Scenario::Montecarlo => montecarlo(cfg).map_err(lib),
    }
}

/// Runs `scenario` and writes the rendered table to the configured path, or
/// returns the bytes when no path is set.
pub fn run_and_write(scenario: Scenario, cfg: &ScenarioConfig) -> Result<Option<Vec<u8>>, RunError> {
    let table = run_scenario(scenario, cfg)?;
    let path = cfg.output.path.clone();
    let bytes = table
        .render(cfg.output.format)
        .map_err(|source| RunError::Io { path: path.clone().unwrap_or_default(), source })?;
    match path {
        Some(path) => {
            std::fs::write(&path, &bytes).map_err(|source| RunError::Io { path, source })?;
            Ok(None)
        }
        None => Ok(Some(bytes)),
    }
}

// The `config` module has already validated every field read below, so the
// `expect`s on config conversions cannot fire.

fn double_pass(cfg: &ScenarioConfig) -> DoublePassConfig {
    cfg.double_pass_config().expect("validated")
}

fn distribution(cfg: &ScenarioConfig) -> Result<Table, Error> {
    let params = cfg.pdc_params().expect("validated");
    let dist = pair_distribution(&state_analytic(&params))?;
    let mut t = Table::new("distribution", &["n", "P"]);
    t.comment("photon-pair number distribution of the single-pass down-converted state")
        .comment("columns: n = pair number (dimensionless), P = probability per pulse")
        .comment(format!(
            "tau = {:.16e}, cutoff = {}, mean pair number = {:.16e}",
            params.tau(),
            params.cutoff(),
            mean_pair_number(&dist)
        ));
    for (n, p) in dist.into_iter().filter(|(_, p)| *p > 0.0) {
        t.push(vec![u64::from(n).into(), p.into()]);
    }
    Ok(t)
}

fn delay(cfg: &ScenarioConfig) -> Result<Table, Error> {
    let dp = double_pass(cfg);
    let term = cfg.delay_term().expect("validated");
    let scan = delay_scan(&dp, &cfg.delays_um().expect("validated"), &term)?;
    let mut t = Table::new("delay-scan", &["delay_um", "rate_max", "rate_min", "rate_at_theta"]);
    t.comment(format!("coincidence probability of {term} versus pump delay, double pass"))
        .comment(
            "columns: delay_um = optical path delay (micrometres, not stage travel); rates = probability per pulse",
        )
        .comment("rate_max/rate_min = envelope over pump phase; rate_at_theta = value at the phase set by the delay")
        .comment(format!(
            "tau1 = {:.16e}, tau2 = {:.16e}, pump wavelength = {:.16e} um, coherence length = {:.16e} um",
            dp.tau1, dp.tau2, dp.pump_wavelength_um, dp.coherence_length_um
        ));
    for r in scan.rows {
        t.push(vec![r.delay_um.into(), r.rate_max.into(), r.rate_min.into(), r.rate_at_theta.into()]);
    }
    Ok(t)
}

fn fringe(cfg: &ScenarioConfig) -> Result<Table, Error> {
    let dp = double_pass(cfg);
    let order = cfg.fringe_order().expect("validated");
    let scan = fringe_scan(&dp, &cfg.thetas().expect("validated"), order)?;
    let mut t = Table::new("fringe-scan", &["theta_rad", "value"]);
    t.comment(format!(
        "{}-photon interference fringe of {} in the {} basis at zero delay",
        2 * order.exponent(),
        scan.term,
        scan.basis
    ))
    .comment("columns: theta_rad = relative pump phase (radians), value = probability per pulse")
    .comment(format!("expected shape (1 + cos theta)^{}", order.exponent()));
    for r in scan.rows {
        t.push(vec![r.x.into(), r.value.into()]);
    }
    Ok(t)
}

fn amplify(cfg: &ScenarioConfig) -> Result<Table, Error> {
    let dp = double_pass(cfg);
    let ratios = amplification_ratios(&dp)?;
    let gains = second_pass_gain(&DoublePassConfig { overlap: 1.0, theta: 0.0, ..dp })?;
    let mut t = Table::new("amplify", &["term", "ideal_ratio", "measured_ref", "measured_err"]);
    t.comment("zero-delay enhancement of each term (in phase, overlapping vs distinguishable passes)")
        .comment("and second-pass gain of two- and fourfold coincidences; all ratios dimensionless")
        .comment("measured_ref/measured_err: laboratory values with quoted uncertainty, empty where none");
    for term in TWO_PHOTON_TERMS.iter().chain(&FOUR_PHOTON_TERMS) {
        let m = measured_ratio(term);
        t.push(vec![
            term.to_string().into(),
            ratios[term].into(),
            m.map(|m| m.value).into(),
            m.map(|m| m.error).into(),
        ]);
    }
    for (name, gain, m) in [
        ("second_pass_2fold", gains.two_photon, MEASURED_SECOND_PASS_TWO),
        ("second_pass_4fold", gains.four_photon, MEASURED_SECOND_PASS_FOUR),
    ] {
        t.push(vec![name.into(), gain.into(), m.value.into(), m.error.into()]);
    }
    Ok(t)
}

fn project(cfg: &ScenarioConfig) -> Result<Table, Error> {
    let (mode, outcome, basis) = cfg.projection().expect("validated");
    let order = cfg.project.order;
    let state = singlet_term(order, order.max(1))?;
    let (probability, remainder) = project_and_renormalize(&state, mode, outcome, &basis)?;
    let schmidt = schmidt_coefficients(&remainder);
    let mut t = Table::new("project", &["component", "amplitude_re", "amplitude_im"]);
    t.comment(format!(
        "single-photon detection ({:?} in mode {:?}) on the {order}-pair singlet; remaining state",
        outcome, mode
    ))
    .comment("component rows: ket |aH,aV;bH,bV> with complex amplitude")
    .comment("schmidt_k rows: Schmidt coefficients across modes a|b (amplitude_re); outcome_probability; entropy_bits");
    for (ket, amp) in remainder.iter() {
        t.push(vec![ket.to_string().into(), amp.re.into(), amp.im.into()]);
    }
    for (k, c) in schmidt.iter().enumerate() {
        t.push(vec![format!("schmidt_{}", k + 1).into(), (*c).into(), 0.0.into()]);
    }
    t.push(vec!["outcome_probability".into(), probability.into(), 0.0.into()]);
    t.push(vec!["entropy_bits".into(), entanglement_entropy(&schmidt).into(), 0.0.into()]);
    Ok(t)
}

fn montecarlo(cfg: &ScenarioConfig) -> Result<Table, Error> {
    let detection = cfg.detection_config().expect("validated");
    let state = match cfg.montecarlo.source {
        Source::Single => state_analytic(&cfg.pdc_params().expect("validated")),
        Source::Double => exact_double_pass(&double_pass(cfg))?,
    };
    let mut probabilities = BTreeMap::new();
    for pattern in cfg.patterns().expect("validated") {
        let p = click_pattern_probability(&state, &detection, &pattern)?;
        probabilities.insert(pattern.to_string(), p.clamp(0.0, 1.0));
    }
    let pulses = cfg.montecarlo.pulses;
    let counts = monte_carlo_counts(&probabilities, pulses, cfg.seed)?;
    let mut t = Table::new("montecarlo", &["pattern", "analytic_p", "sampled_count", "pulses"]);
    t.comment("sampled coincidence counts versus analytic click probability per pulse")
        .comment("columns: pattern = required detectors joined by '+', '!' marks forbidden; analytic_p = probability per pulse")
        .comment(format!("source = {:?}, seed = {}", cfg.montecarlo.source, cfg.seed));
    for (name, p) in &probabilities {
        t.push(vec![name.as_str().into(), (*p).into(), counts[name].into(), pulses.into()]);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_tau_distribution_is_one_row() {
        let mut cfg = ScenarioConfig::default();
        cfg.pdc.tau = 0.0;
        let t = run_scenario(Scenario::Distribution, &cfg).unwrap();
        assert_eq!(t.rows, vec![vec![Cell::Int(0), Cell::Float(1.0)]]);
    }

    #[test]
    fn library_errors_map_to_exit_codes() {
        let mut cfg = ScenarioConfig::default();
        cfg.pdc.tau = 2.0;
        cfg.pdc.cutoff = Some(3);
        let err = run_scenario(Scenario::Distribution, &cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2);

        let mut cfg = ScenarioConfig::default();
        cfg.project.order = 0;
        let err = run_scenario(Scenario::Project, &cfg).unwrap_err();
        assert!(matches!(err, RunError::Library { source: Error::ZeroProbabilityOutcome, .. }));
        assert_eq!(err.exit_code(), 3);
    }
}
