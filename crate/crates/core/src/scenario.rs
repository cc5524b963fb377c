//! Scenario files: channel, modulations, SNR grid and Monte Carlo settings.
//!
//! ```json
//! {
//!   "metadata": {"title": "two layers", "labels": ["[2.4, 0.05]", "[2.4, 0.10]"]},
//!   "r": 2,
//!   "layers": "layers.json",
//!   "mu_r_db": {"start": 0, "stop": 60, "step": 5},
//!   "modulations": "modulations.json",
//!   "gamma_th_db": 10,
//!   "mc": {"samples": 100000, "seed": 1, "streams": 16}
//! }
//! ```
//!
//! `layers` and `modulations` are either inline arrays or paths relative
//! to the scenario file.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{CascadeChannel, Detection, Domain, EggLayer, MAX_LAYERS};
use crate::fox_h::DEFAULT_TOLERANCE;
use crate::metrics::{ber_params, capacity_params, Modulation};
use crate::montecarlo::{RngSpec, MIN_SAMPLES};

/// Upper bound on grid size.
pub const MAX_GRID_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    /// Points `start + i·step` up to and including `stop`.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    /// Samples per grid point; 0 disables simulation.
    pub samples: u64,
    pub seed: u64,
    #[serde(default = "default_streams")]
    pub streams: u32,
}

fn default_streams() -> u32 {
    16
}

/// Inline value or path to a JSON file holding it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    File(PathBuf),
    Inline(T),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default)]
    metadata: serde_json::Value,
    r: u8,
    layers: Source<Vec<EggLayer>>,
    mu_r_db: Grid,
    #[serde(default)]
    modulations: Option<Source<Vec<Modulation>>>,
    #[serde(default)]
    gamma_th_db: Option<f64>,
    #[serde(default)]
    mc: Option<McSettings>,
    #[serde(default)]
    tolerance: Option<f64>,
}

/// Fully resolved scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub metadata: serde_json::Value,
    pub detection: Detection,
    pub layers: Vec<EggLayer>,
    pub grid: Grid,
    pub modulations: Vec<Modulation>,
    pub gamma_th_db: Option<f64>,
    pub mc: Option<McSettings>,
    pub tolerance: f64,
}

impl Scenario {
    /// Channel at linear average SNR `mu_r`.
    pub fn channel(&self, mu_r: f64) -> crate::Result<CascadeChannel> {
        Ok(CascadeChannel::new(self.layers.clone(), self.detection, mu_r)?.with_tolerance(self.tolerance))
    }

    pub fn rng_spec(&self) -> Option<RngSpec> {
        self.mc.filter(|m| m.samples > 0).map(|m| RngSpec { seed: m.seed, streams: m.streams })
    }
}

/// One finding of [`validate_scenario`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// Field path such as `layers[1].omega`, or `file:line:column` for syntax errors.
    pub location: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// Outcome of [`validate_scenario`].
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub errors: Vec<Diagnostic>,
    pub warnings: Vec<Diagnostic>,
    /// Mixture terms that passed the pole-separation check.
    pub terms_checked: usize,
    pub scenario: Option<Scenario>,
}

impl Report {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty() && self.scenario.is_some()
    }

    fn error(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Diagnostic { location: location.into(), message: message.into() });
    }

    fn warn(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Diagnostic { location: location.into(), message: message.into() });
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, report: &mut Report) -> Option<T> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            report.error(path.display().to_string(), format!("cannot read: {e}"));
            return None;
        }
    };
    match serde_json::from_str(&text) {
        Ok(v) => Some(v),
        Err(e) => {
            report.error(format!("{}:{}:{}", path.display(), e.line(), e.column()), e.to_string());
            None
        }
    }
}

fn resolve<T: for<'de> Deserialize<'de>>(source: Source<T>, base: &Path, report: &mut Report) -> Option<T> {
    match source {
        Source::Inline(v) => Some(v),
        Source::File(p) => read_json(&base.join(p), report),
    }
}

/// Parses a scenario file and checks every invariant.
///
/// Besides field checks this builds the Fox H parameter sets of all `2^N`
/// SNR mixture terms for every metric, so pole collisions surface here
/// rather than in the middle of a sweep.
pub fn validate_scenario(path: &Path) -> Report {
    let mut report = Report::default();
    let Some(raw) = read_json::<RawScenario>(path, &mut report) else {
        return report;
    };
    let base = path.parent().unwrap_or(Path::new("."));

    let detection = match Detection::try_from(raw.r) {
        Ok(d) => Some(d),
        Err(e) => {
            report.error("r", e.to_string());
            None
        }
    };
    let layers = resolve(raw.layers, base, &mut report).unwrap_or_default();
    if layers.is_empty() && report.errors.is_empty() {
        report.error("layers", "at least one layer is required");
    }
    if layers.len() > MAX_LAYERS {
        report.error("layers", format!("{} layers exceed the limit of {MAX_LAYERS}", layers.len()));
    }
    for (i, layer) in layers.iter().enumerate() {
        if let Some((field, msg)) = layer.invalid_field() {
            report.error(format!("layers[{i}].{field}"), msg);
        }
    }

    let g = raw.mu_r_db;
    if !(g.start.is_finite() && g.stop.is_finite() && g.step.is_finite()) {
        report.error("mu_r_db", "start, stop and step must be finite");
    } else if !(g.step > 0.0) {
        report.error("mu_r_db.step", format!("{} must be positive", g.step));
    } else if g.stop < g.start {
        report.error("mu_r_db.stop", format!("{} is below start {}", g.stop, g.start));
    } else if (g.stop - g.start) / g.step >= MAX_GRID_POINTS as f64 {
        report.error("mu_r_db", format!("more than {MAX_GRID_POINTS} grid points"));
    }

    let modulations = raw.modulations.and_then(|m| resolve(m, base, &mut report)).unwrap_or_default();
    for (k, md) in modulations.iter().enumerate() {
        if let Some((field, msg)) = md.invalid_field() {
            report.error(format!("modulations[{k}].{field}"), msg);
        }
        if let (Some(want), Some(have)) = (md.detection, detection) {
            if want != have {
                report.warn(
                    format!("modulations[{k}].detection"),
                    format!("{} is tabulated for r = {}, scenario uses r = {}", md.name, want.r(), have.r()),
                );
            }
        }
    }

    if let Some(th) = raw.gamma_th_db {
        if !th.is_finite() {
            report.error("gamma_th_db", "must be finite");
        }
    }
    if let Some(mc) = raw.mc {
        if mc.samples != 0 && mc.samples < MIN_SAMPLES {
            report.error("mc.samples", format!("{} is below {MIN_SAMPLES}; use 0 to disable", mc.samples));
        }
        if mc.streams == 0 {
            report.error("mc.streams", "must be positive");
        }
    }
    let tolerance = raw.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    if !(tolerance > 0.0 && tolerance <= 1e-3) {
        report.error("tolerance", format!("{tolerance} is outside (0, 1e-3]"));
    }
    let Some(detection) = detection else {
        return report;
    };
    if !report.errors.is_empty() {
        return report;
    }

    let scenario = Scenario {
        metadata: raw.metadata,
        detection,
        layers,
        grid: g,
        modulations,
        gamma_th_db: raw.gamma_th_db,
        mc: raw.mc,
        tolerance,
    };
    let channel = match scenario.channel(1.0) {
        Ok(c) => c,
        Err(e) => {
            report.error("layers", e.to_string());
            return report;
        }
    };
    let mut ps: Vec<f64> = scenario.modulations.iter().map(|m| m.p).collect();
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    for term in channel.enumerate_terms(Domain::Snr) {
        let label: String = term.index.iter().map(|b| char::from(b'0' + b)).collect();
        let checks = [
            term.pdf_params().map(|_| ()),
            term.cdf_params().map(|_| ()),
            term.ccdf_params().map(|_| ()),
            capacity_params(&term, channel.r()).map(|_| ()),
        ];
        let ber = ps.iter().map(|p| ber_params(&term, *p).map(|_| ()));
        match checks.into_iter().chain(ber).find_map(Result::err) {
            None => report.terms_checked += 1,
            Some(e) => report.error(format!("terms[{label}]"), e.to_string()),
        }
    }
    if report.errors.is_empty() {
        report.scenario = Some(scenario);
    }
    report
}

/// Converts decibels to a linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
