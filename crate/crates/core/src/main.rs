use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use uwoc::channel::Domain;
use uwoc::montecarlo::RngSpec;
use uwoc::scenario::{db_to_linear, validate_scenario, McSettings, Scenario};
use uwoc::sweep::{point_seed, run_sweep, Metric, Task};

const EXIT_INVALID: u8 = 2;
const EXIT_ALL_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "uwoc", version, about = "Performance sweeps for cascaded mixture EGG turbulence channels")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a metric over the SNR grid and write CSV.
    Sweep(SweepArgs),
    /// Check a scenario file and report problems.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Tabulate the cascade density.
    Pdf(PdfArgs),
    /// Compare closed-form metrics against simulation at every grid point.
    McCheck(McCheckArgs),
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    scenario: PathBuf,
    /// Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo samples per grid point; 0 disables simulation.
    #[arg(long)]
    samples: Option<u64>,
    /// Modulation name for BER (default: first listed).
    #[arg(long)]
    modulation: Option<String>,
    /// Outage threshold in dB.
    #[arg(long)]
    gamma_th_db: Option<f64>,
    /// Output path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Overrides,
    #[arg(long)]
    metric: Metric,
    /// Report capacity in bits instead of nats.
    #[arg(long)]
    bits: bool,
}

#[derive(Args)]
struct McCheckArgs {
    #[command(flatten)]
    common: Overrides,
}

#[derive(Clone, Copy, ValueEnum)]
enum PdfDomain {
    Irradiance,
    Snr,
}

#[derive(Args)]
struct PdfArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum, default_value = "irradiance")]
    domain: PdfDomain,
    /// Average SNR for the SNR domain (default: first grid point).
    #[arg(long)]
    mu_r_db: Option<f64>,
    /// Smallest abscissa (default: 1e-3 times the mean).
    #[arg(long)]
    from: Option<f64>,
    /// Largest abscissa (default: 10 times the mean).
    #[arg(long)]
    to: Option<f64>,
    /// Log-spaced points.
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(path: &Path) -> Result<Scenario, ExitCode> {
    let report = validate_scenario(path);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for e in &report.errors {
        eprintln!("error: {e}");
    }
    report.scenario.ok_or(ExitCode::from(EXIT_INVALID))
}

fn apply_overrides(scenario: &mut Scenario, o: &Overrides) {
    if o.seed.is_none() && o.samples.is_none() {
        return;
    }
    let mut mc = scenario.mc.unwrap_or(McSettings { samples: 0, seed: 0, streams: 16 });
    if let Some(seed) = o.seed {
        mc.seed = seed;
    }
    if let Some(samples) = o.samples {
        mc.samples = samples;
    }
    scenario.mc = Some(mc);
}

fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn check_mc(scenario: &Scenario) -> Result<(), ExitCode> {
    match scenario.mc {
        Some(mc) if mc.samples != 0 && mc.samples < uwoc::montecarlo::MIN_SAMPLES => {
            eprintln!("error: samples: {} is below {}", mc.samples, uwoc::montecarlo::MIN_SAMPLES);
            Err(ExitCode::from(EXIT_INVALID))
        }
        Some(mc) if mc.streams == 0 => {
            eprintln!("error: mc.streams must be positive");
            Err(ExitCode::from(EXIT_INVALID))
        }
        _ => Ok(()),
    }
}

fn sweep(args: SweepArgs) -> Result<ExitCode, ExitCode> {
    let mut scenario = load(&args.common.scenario)?;
    apply_overrides(&mut scenario, &args.common);
    check_mc(&scenario)?;
    let task = Task::resolve(
        &scenario,
        args.metric,
        args.common.modulation.as_deref(),
        args.common.gamma_th_db,
        args.bits,
    )
    .map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_INVALID)
    })?;
    let result = run_sweep(&scenario, &task);
    let out = output(args.common.out.as_deref()).map_err(io_failure)?;
    result.write_csv(out).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::FAILURE
    })?;
    for row in result.rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("warning: mu_r_db = {}: {}", row.mu_r_db, row.error.as_deref().unwrap_or_default());
    }
    Ok(if result.all_failed() { ExitCode::from(EXIT_ALL_FAILED) } else { ExitCode::SUCCESS })
}

fn validate(path: &Path) -> ExitCode {
    let report = validate_scenario(path);
    for w in &report.warnings {
        println!("warning: {w}");
    }
    for e in &report.errors {
        println!("error: {e}");
    }
    match &report.scenario {
        Some(s) if report.errors.is_empty() => {
            println!(
                "ok: {} layer(s), r = {}, {} mixture term(s) pole-separated, {} grid point(s), {} modulation(s)",
                s.layers.len(),
                s.detection.r(),
                report.terms_checked,
                s.grid.points().len(),
                s.modulations.len()
            );
            ExitCode::SUCCESS
        }
        _ => ExitCode::from(EXIT_INVALID),
    }
}

fn io_failure(e: io::Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::FAILURE
}

fn pdf(args: PdfArgs) -> Result<ExitCode, ExitCode> {
    let scenario = load(&args.scenario)?;
    let mu_r_db = args.mu_r_db.unwrap_or(scenario.grid.start);
    let ch = scenario.channel(db_to_linear(mu_r_db)).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_INVALID)
    })?;
    let (domain, mean) = match args.domain {
        PdfDomain::Irradiance => (Domain::Irradiance, ch.mean_irradiance()),
        PdfDomain::Snr => (Domain::Snr, ch.mu_r()),
    };
    let lo = args.from.unwrap_or(1e-3 * mean);
    let hi = args.to.unwrap_or(10.0 * mean);
    if !(lo > 0.0 && hi > lo && args.points >= 2) {
        eprintln!("error: need 0 < from < to and at least 2 points");
        return Err(ExitCode::from(EXIT_INVALID));
    }
    let step = (hi / lo).ln() / (args.points - 1) as f64;
    let xs: Vec<f64> = (0..args.points).map(|i| lo * (i as f64 * step).exp()).collect();
    let rows: Vec<(f64, Result<f64, String>, Option<Result<f64, String>>)> = xs
        .par_iter()
        .map(|&x| match domain {
            Domain::Irradiance => (x, ch.irradiance_pdf(x).map_err(|e| e.to_string()), None),
            Domain::Snr => (
                x,
                ch.snr_pdf(x).map_err(|e| e.to_string()),
                Some(ch.snr_cdf(x).map_err(|e| e.to_string())),
            ),
        })
        .collect();
    let mut w = csv::Writer::from_writer(output(args.out.as_deref()).map_err(io_failure)?);
    let header: &[&str] = match domain {
        Domain::Irradiance => &["x", "pdf", "error"],
        Domain::Snr => &["x", "pdf", "cdf", "error"],
    };
    let fmt = |r: &Result<f64, String>| r.as_ref().map(|v| format!("{v:.16e}")).unwrap_or_default();
    let csv_err = |e: csv::Error| {
        eprintln!("error: {e}");
        ExitCode::FAILURE
    };
    w.write_record(header).map_err(csv_err)?;
    for (x, p, c) in &rows {
        let mut errs: Vec<&str> = Vec::new();
        if let Err(e) = p {
            errs.push(e);
        }
        let mut rec = vec![format!("{x:.16e}"), fmt(p)];
        if let Some(c) = c {
            if let Err(e) = c {
                errs.push(e);
            }
            rec.push(fmt(c));
        }
        rec.push(errs.join("; "));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(io_failure)?;
    Ok(ExitCode::SUCCESS)
}

fn mc_check(args: McCheckArgs) -> Result<ExitCode, ExitCode> {
    let mut scenario = load(&args.common.scenario)?;
    apply_overrides(&mut scenario, &args.common);
    check_mc(&scenario)?;
    let Some(spec) = scenario.rng_spec() else {
        eprintln!("error: mc-check needs mc.samples > 0 (scenario or --samples)");
        return Err(ExitCode::from(EXIT_INVALID));
    };
    let samples = scenario.mc.map(|m| m.samples).unwrap_or_default();
    let o = &args.common;
    let mut tasks = vec![Task::Capacity { bits: false }];
    if !scenario.modulations.is_empty() {
        tasks.push(Task::resolve(&scenario, Metric::Ber, o.modulation.as_deref(), None, false).map_err(|e| {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID)
        })?);
    }
    if let Ok(t) = Task::resolve(&scenario, Metric::Outage, None, o.gamma_th_db, false) {
        tasks.push(t);
    }
    let points = scenario.grid.points();
    let rows: Vec<Vec<String>> = points
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, db)| {
            let ch = scenario.channel(db_to_linear(*db));
            let spec = RngSpec { seed: point_seed(spec.seed, i), ..spec };
            tasks.iter().map(move |task| {
                let verdict = ch.as_ref().map_err(|e| e.to_string()).and_then(|ch| {
                    let exact = task.exact(ch).map_err(|e| e.to_string())?;
                    let est = task.simulate(ch, samples, &spec).map_err(|e| e.to_string())?;
                    Ok((exact, est))
                });
                let mut rec = vec![format!("{db:.16e}"), task.metric().to_string()];
                match verdict {
                    Ok((exact, est)) => {
                        let z = est.z_score(exact);
                        rec.extend([
                            format!("{exact:.16e}"),
                            format!("{:.16e}", est.value),
                            format!("{:.16e}", est.std_error),
                            format!("{z:.4}"),
                            if z <= 3.0 { "pass".into() } else { "fail".into() },
                        ]);
                    }
                    Err(e) => rec.extend([String::new(), String::new(), String::new(), String::new(), format!("error: {e}")]),
                }
                rec
            })
        })
        .collect();
    let failures = rows.iter().filter(|r| r[6] != "pass").count();
    let mut w = csv::Writer::from_writer(output(o.out.as_deref()).map_err(io_failure)?);
    let write = |w: &mut csv::Writer<Box<dyn Write>>| -> Result<(), csv::Error> {
        w.write_record(["mu_r_db", "metric", "exact", "mc", "mc_stderr", "z_score", "verdict"])?;
        for r in &rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    };
    write(&mut w).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::FAILURE
    })?;
    eprintln!("{} of {} comparisons within 3 standard errors", rows.len() - failures, rows.len());
    Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Validate { scenario } => Ok(validate(&scenario)),
        Command::Pdf(a) => pdf(a),
        Command::McCheck(a) => mc_check(a),
    };
    result.unwrap_or_else(|code| code)
}
