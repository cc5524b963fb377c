//! Metric sweeps over the average-SNR grid of a [`Scenario`].

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::channel::CascadeChannel;
use crate::error::{Error, Result};
use crate::metrics::{self, Modulation};
use crate::montecarlo::{self, Estimate, RngSpec};
use crate::scenario::{db_to_linear, Scenario};

/// CSV header written by [`SweepResult::write_csv`].
pub const CSV_HEADER: [&str; 6] = ["mu_r_db", "exact", "asymptotic", "mc", "mc_stderr", "error"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Ber,
    Capacity,
    Outage,
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ber" => Ok(Metric::Ber),
            "capacity" => Ok(Metric::Capacity),
            "outage" => Ok(Metric::Outage),
            other => Err(format!("unknown metric {other:?}; expected ber, capacity or outage")),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Ber => "ber",
            Metric::Capacity => "capacity",
            Metric::Outage => "outage",
        })
    }
}

/// What to compute at each grid point.
#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Ber(Modulation),
    /// `bits` selects log base 2.
    Capacity { bits: bool },
    /// Threshold in dB.
    Outage { gamma_th_db: f64 },
}

impl Task {
    /// Resolves `metric` against the scenario.
    ///
    /// BER uses the modulation called `modulation`, or the first one listed;
    /// outage uses `gamma_th_db`, falling back to the scenario's threshold.
    pub fn resolve(
        scenario: &Scenario,
        metric: Metric,
        modulation: Option<&str>,
        gamma_th_db: Option<f64>,
        bits: bool,
    ) -> Result<Self> {
        match metric {
            Metric::Ber => {
                let found = match modulation {
                    Some(name) => scenario.modulations.iter().find(|m| m.name == name),
                    None => scenario.modulations.first(),
                };
                found.cloned().map(Task::Ber).ok_or_else(|| {
                    let names: Vec<&str> = scenario.modulations.iter().map(|m| m.name.as_str()).collect();
                    Error::InvalidModulation(match modulation {
                        Some(name) => format!("no modulation named {name:?}; available: {names:?}"),
                        None => "the scenario lists no modulations".into(),
                    })
                })
            }
            Metric::Capacity => Ok(Task::Capacity { bits }),
            Metric::Outage => gamma_th_db
                .or(scenario.gamma_th_db)
                .filter(|t| t.is_finite())
                .map(|gamma_th_db| Task::Outage { gamma_th_db })
                .ok_or_else(|| Error::InvalidParams("outage needs gamma_th_db".into())),
        }
    }

    pub fn metric(&self) -> Metric {
        match self {
            Task::Ber(_) => Metric::Ber,
            Task::Capacity { .. } => Metric::Capacity,
            Task::Outage { .. } => Metric::Outage,
        }
    }

    pub fn exact(&self, ch: &CascadeChannel) -> Result<f64> {
        match self {
            Task::Ber(md) => metrics::avg_ber_exact(ch, md),
            Task::Capacity { bits } => metrics::ergodic_capacity_exact(ch).map(|c| unit(c, *bits)),
            Task::Outage { gamma_th_db } => metrics::outage_probability(ch, db_to_linear(*gamma_th_db)),
        }
    }

    pub fn asymptotic(&self, ch: &CascadeChannel) -> Result<f64> {
        match self {
            Task::Ber(md) if ch.layers().len() == 2 => metrics::avg_ber_asymptotic(ch, md).map(|a| a.value),
            Task::Ber(md) => metrics::avg_ber_leading_order(ch, md),
            Task::Capacity { bits } => Ok(unit(metrics::ergodic_capacity_asymptotic(ch), *bits)),
            Task::Outage { gamma_th_db } => metrics::outage_leading_order(ch, db_to_linear(*gamma_th_db)),
        }
    }

    pub fn simulate(&self, ch: &CascadeChannel, samples: u64, spec: &RngSpec) -> Result<Estimate> {
        match self {
            Task::Ber(md) => montecarlo::estimate_ber(ch, md, samples, spec),
            Task::Capacity { bits } => montecarlo::estimate_capacity(ch, samples, spec).map(|e| Estimate {
                value: unit(e.value, *bits),
                std_error: unit(e.std_error, *bits),
                samples: e.samples,
            }),
            Task::Outage { gamma_th_db } => {
                montecarlo::estimate_outage(ch, db_to_linear(*gamma_th_db), samples, spec)
            }
        }
    }
}

fn unit(nats: f64, bits: bool) -> f64 {
    if bits {
        metrics::nats_to_bits(nats)
    } else {
        nats
    }
}

/// Results at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub mu_r_db: f64,
    pub exact: Option<f64>,
    pub asymptotic: Option<f64>,
    pub mc: Option<Estimate>,
    /// Failures at this point, `;`-separated.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub metric: Metric,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// True when the exact value failed at every grid point.
    pub fn all_failed(&self) -> bool {
        self.rows.iter().all(|r| r.exact.is_none())
    }

    /// Writes the table with 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        for row in &self.rows {
            w.write_record([
                format!("{:.16e}", row.mu_r_db),
                fmt(row.exact),
                fmt(row.asymptotic),
                fmt(row.mc.map(|e| e.value)),
                fmt(row.mc.map(|e| e.std_error)),
                row.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// SplitMix64 finalizer.
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed for grid point `index`, independent of evaluation order.
pub fn point_seed(seed: u64, index: usize) -> u64 {
    mix(seed ^ mix(index as u64))
}

fn evaluate_point(scenario: &Scenario, task: &Task, index: usize, mu_r_db: f64) -> SweepRow {
    let mut row = SweepRow { mu_r_db, exact: None, asymptotic: None, mc: None, error: None };
    let mut errors = Vec::new();
    let ch = match scenario.channel(db_to_linear(mu_r_db)) {
        Ok(ch) => ch,
        Err(e) => {
            row.error = Some(format!("channel: {e}"));
            return row;
        }
    };
    match task.exact(&ch) {
        Ok(v) => row.exact = Some(v),
        Err(e) => errors.push(format!("exact: {e}")),
    }
    match task.asymptotic(&ch) {
        Ok(v) if v.is_finite() => row.asymptotic = Some(v),
        Ok(v) => errors.push(format!("asymptotic: non-finite value {v}")),
        Err(e) => errors.push(format!("asymptotic: {e}")),
    }
    if let (Some(spec), Some(mc)) = (scenario.rng_spec(), scenario.mc) {
        let spec = RngSpec { seed: point_seed(spec.seed, index), ..spec };
        match task.simulate(&ch, mc.samples, &spec) {
            Ok(est) => row.mc = Some(est),
            Err(e) => errors.push(format!("mc: {e}")),
        }
    }
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    row
}

/// Evaluates `task` at every grid point, concurrently, in grid order.
pub fn run_sweep(scenario: &Scenario, task: &Task) -> SweepResult {
    let points = scenario.grid.points();
    let rows = points
        .par_iter()
        .enumerate()
        .map(|(i, db)| evaluate_point(scenario, task, i, *db))
        .collect();
    SweepResult { metric: task.metric(), rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_names_round_trip() {
        for m in [Metric::Ber, Metric::Capacity, Metric::Outage] {
            assert_eq!(m.to_string().parse::<Metric>().unwrap(), m);
        }
        assert!("snr".parse::<Metric>().is_err());
    }

    #[test]
    fn point_seeds_differ() {
        let seeds: Vec<u64> = (0..100).map(|i| point_seed(42, i)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), seeds.len());
        assert_ne!(point_seed(1, 0), point_seed(2, 0));
    }

    #[test]
    fn csv_quotes_messages_and_leaves_gaps() {
        let res = SweepResult {
            metric: Metric::Ber,
            rows: vec![SweepRow {
                mu_r_db: 10.0,
                exact: Some(0.25),
                asymptotic: None,
                mc: None,
                error: Some("asymptotic: a, b".into()),
            }],
        };
        let mut buf = Vec::new();
        res.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "mu_r_db,exact,asymptotic,mc,mc_stderr,error\n\
             1.0000000000000000e1,2.5000000000000000e-1,,,,\"asymptotic: a, b\"\n"
        );
    }
}
