//! `histaudit` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use clap::{Args, Parser, Subcommand, ValueEnum};
use histaudit::canary::{
    one_shot_audit, one_shot_score_samples, whitebox_runs, OneShotConfig, Simulation,
    WhiteBoxConfig,
};
use histaudit::estimators::{
    audit_histogram, fit_mu_gdp_detailed, AuditConfig, AuditReport, EpsGrid, Method, SigmaFamily,
};
use histaudit::histogram::{auto_spec, build_histograms, BinningMode};
use histaudit::io::{
    curve_to_csv, format_sig12, parse_profile_csv, profile_to_csv, read_scores, write_scores,
    write_text,
};
use histaudit::mechanisms::{GaussianMech, LaplaceMech, SubsampledGaussianMech};
use histaudit::pld::{compose_profile, PldGridSpec};
use histaudit::profile::PrivacyProfile;
use histaudit::sampling::sample_pair;
use histaudit::{AuditError, EpsEstimate, ErrorKind};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_GRID: u8 = 4;
const EXIT_FIT: u8 = 5;

#[derive(Debug)]
struct CliError {
    code: u8,
    msg: String,
}

impl CliError {
    fn config(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            msg: msg.into(),
        }
    }
}

impl From<AuditError> for CliError {
    fn from(e: AuditError) -> Self {
        let code = match e.kind() {
            ErrorKind::Config => EXIT_CONFIG,
            ErrorKind::Input => EXIT_INPUT,
            ErrorKind::Grid => EXIT_GRID,
            ErrorKind::Fit => EXIT_FIT,
        };
        Self {
            code,
            msg: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "histaudit",
    version,
    about = "Histogram-based privacy auditing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw score samples from a synthetic mechanism pair.
    Simulate(SimulateArgs),
    /// Audit two score files and report epsilon per delta target.
    Audit(AuditArgs),
    /// Estimate the trade-off curve of two score files.
    Tradeoff(TradeoffArgs),
    /// Compose the estimated pair c times through its privacy-loss distribution.
    Compose(ComposeArgs),
    /// Fit a mu-GDP parameter to a profile CSV or to two score files.
    FitGdp(FitGdpArgs),
    /// Run a canary simulator and optionally audit its scores.
    Canary(CanaryArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mechanism {
    Gaussian,
    SubsampledGaussian,
    Laplace,
}

#[derive(Args, Debug)]
struct SeedArg {
    /// RNG seed; defaults to $HISTAUDIT_SEED, then 0.
    #[arg(long, env = "HISTAUDIT_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    mechanism: Mechanism,
    /// Gaussian or mixture noise scale.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Sensitivity of the Gaussian and Laplace mechanisms.
    #[arg(long, default_value_t = 1.0)]
    sensitivity: f64,
    /// Sampling rate of the subsampled Gaussian.
    #[arg(long, default_value_t = 0.25)]
    q: f64,
    /// Laplace scale.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Samples per side.
    #[arg(short, long)]
    n: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    out_p: PathBuf,
    #[arg(long)]
    out_q: PathBuf,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Scores under P, one per line.
    in_p: PathBuf,
    /// Scores under Q, one per line.
    in_q: PathBuf,
    /// Fixed number of bins.
    #[arg(long, conflicts_with = "auto_bins")]
    bins: Option<usize>,
    /// Scott-rule bin width (the default).
    #[arg(long)]
    auto_bins: bool,
}

impl InputArgs {
    fn binning(&self) -> CliResult<BinningMode> {
        match self.bins {
            Some(0) => Err(CliError::config("--bins must be at least 1")),
            Some(k) => Ok(BinningMode::FixedK(k)),
            None => Ok(BinningMode::ScottGaussian),
        }
    }

    fn load(&self) -> CliResult<(Vec<f64>, Vec<f64>)> {
        let p = read_scores(&self.in_p)?;
        let q = read_scores(&self.in_q)?;
        if p.len() != q.len() {
            return Err(CliError {
                code: EXIT_INPUT,
                msg: format!(
                    "score files have unequal counts: {} has {}, {} has {}",
                    self.in_p.display(),
                    p.len(),
                    self.in_q.display(),
                    q.len()
                ),
            });
        }
        Ok((p, q))
    }
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Delta targets; repeat or separate with commas.
    #[arg(long = "delta", value_delimiter = ',')]
    delta: Vec<f64>,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    /// Epsilon grid for tabulated curves, as lo:hi:m.
    #[arg(long, default_value = "0:10:201")]
    eps_grid: String,
    /// Invert the TV estimate to a noise scale: gaussian[:sensitivity=S] or mixture:q=Q.
    #[arg(long)]
    fit_sigma: Option<String>,
}

impl ReportArgs {
    fn config(&self, binning: BinningMode) -> CliResult<AuditConfig> {
        let mut cfg = AuditConfig {
            binning,
            confidence: self.confidence,
            eps_grid: EpsGrid::parse(&self.eps_grid)?,
            fit_sigma: self.fit_sigma.as_deref().map(parse_family).transpose()?,
            ..AuditConfig::default()
        };
        if !self.delta.is_empty() {
            cfg.delta_targets = self.delta.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_family(s: &str) -> CliResult<SigmaFamily> {
    let bad = || {
        CliError::config(format!(
            "expected gaussian[:sensitivity=S] or mixture:q=Q, got {s:?}"
        ))
    };
    let (name, rest) = s.split_once(':').unwrap_or((s, ""));
    let param = |key: &str| -> CliResult<Option<f64>> {
        if rest.is_empty() {
            return Ok(None);
        }
        let (k, v) = rest.split_once('=').ok_or_else(bad)?;
        if k.trim() != key {
            return Err(bad());
        }
        v.trim().parse().map(Some).map_err(|_| bad())
    };
    let family = match name.trim() {
        "gaussian" => SigmaFamily::Gaussian {
            sensitivity: param("sensitivity")?.unwrap_or(1.0),
        },
        "mixture" => SigmaFamily::Mixture {
            q: param("q")?.ok_or_else(bad)?,
        },
        _ => return Err(bad()),
    };
    family.validate()?;
    Ok(family)
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    report: ReportArgs,
    /// Write the JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write the estimated trade-off curve CSV here.
    #[arg(long)]
    curve: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TradeoffArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    /// Emit the curve of the lower-bound profile instead of the estimate.
    #[arg(long)]
    lower: bool,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ComposeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Number of compositions.
    #[arg(short, long)]
    compositions: usize,
    /// Privacy-loss grid as L:m; by default it covers every finite log-ratio.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value = "0:10:201")]
    eps_grid: String,
    /// Output profile CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitGdpArgs {
    /// Profile CSV with an epsilon,delta header.
    #[arg(long, conflicts_with_all = ["samples"])]
    profile: Option<PathBuf>,
    /// Two score files; the fit uses their estimated profile.
    #[arg(long, num_args = 2, value_names = ["IN_P", "IN_Q"])]
    samples: Option<Vec<PathBuf>>,
    #[arg(long)]
    bins: Option<usize>,
    /// Epsilon range of the fit as lo:hi; defaults to the profile's range.
    #[arg(long)]
    eps_range: Option<String>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum CanaryMode {
    OneShot,
    WhiteBox,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SimulationArg {
    Auto,
    Materialized,
    Projected,
}

impl From<SimulationArg> for Simulation {
    fn from(s: SimulationArg) -> Self {
        match s {
            SimulationArg::Auto => Simulation::Auto,
            SimulationArg::Materialized => Simulation::Materialized,
            SimulationArg::Projected => Simulation::Projected,
        }
    }
}

#[derive(Args, Debug)]
struct CanaryArgs {
    #[arg(long, value_enum)]
    mode: CanaryMode,
    /// Model dimension.
    #[arg(short, long)]
    d: usize,
    /// Canaries per side (one-shot).
    #[arg(short, long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Norm of the fixed base sum (one-shot).
    #[arg(long, default_value_t = 0.0)]
    x_norm: f64,
    /// Iterations per run (white-box).
    #[arg(short, long, default_value_t = 100)]
    t: usize,
    /// Canary inclusion probability (white-box).
    #[arg(long, default_value_t = 0.5)]
    q_c: f64,
    /// Data sampling rate (white-box).
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    /// Clip norm (white-box).
    #[arg(long, default_value_t = 1.0)]
    clip: f64,
    /// Nuisance dataset size (white-box).
    #[arg(long, default_value_t = 0)]
    data_size: usize,
    /// Independent runs concatenated (white-box).
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long, value_enum, default_value_t = SimulationArg::Auto)]
    simulation: SimulationArg,
    #[command(flatten)]
    seed: SeedArg,
    /// Write the score streams here.
    #[arg(long, requires = "out_q")]
    out_p: Option<PathBuf>,
    #[arg(long, requires = "out_p")]
    out_q: Option<PathBuf>,
    /// Audit the streams and print the report lines.
    #[arg(long)]
    audit: bool,
    #[arg(long)]
    bins: Option<usize>,
    #[command(flatten)]
    report: ReportArgs,
    #[arg(long, requires = "audit")]
    json: Option<PathBuf>,
}

fn eps_text(e: &EpsEstimate) -> String {
    match e {
        EpsEstimate::Finite(x) => format_sig12(*x),
        EpsEstimate::Unbounded => "inf".into(),
        EpsEstimate::Undefined => "nan".into(),
    }
}

fn print_report(report: &AuditReport) {
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for e in &report.eps {
        println!(
            "delta={} eps={} eps_lower={}",
            format_sig12(e.delta),
            eps_text(&e.point),
            eps_text(&e.lower)
        );
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    write_text(path, &(text + "\n"))?;
    Ok(())
}

fn emit(out: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write_text(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn audit_scores(p: &[f64], q: &[f64], cfg: &AuditConfig, method: Method) -> CliResult<AuditReport> {
    let spec = auto_spec(p, q, cfg.binning)?;
    Ok(audit_histogram(
        build_histograms(p, q, &spec)?,
        cfg,
        method,
    )?)
}

fn cmd_simulate(a: &SimulateArgs) -> CliResult<()> {
    if a.n == 0 {
        return Err(CliError::config("-n must be at least 1"));
    }
    let pair = match a.mechanism {
        Mechanism::Gaussian => GaussianMech::new(a.sigma, a.sensitivity)?.pair(),
        Mechanism::SubsampledGaussian => SubsampledGaussianMech::new(a.q, a.sigma)?.pair(),
        Mechanism::Laplace => LaplaceMech::new(a.lambda, a.sensitivity)?.pair(),
    };
    let (p, q) = sample_pair(&pair, a.n, a.seed.seed)?;
    write_scores(&a.out_p, &p)?;
    write_scores(&a.out_q, &q)?;
    Ok(())
}

fn cmd_audit(a: &AuditArgs) -> CliResult<()> {
    let cfg = a.report.config(a.input.binning()?)?;
    let (p, q) = a.input.load()?;
    let report = audit_scores(&p, &q, &cfg, Method::Histogram)?;
    print_report(&report);
    if let Some(path) = &a.json {
        write_json(path, &report.to_json())?;
    }
    if let Some(path) = &a.curve {
        write_text(path, &curve_to_csv(&report.tradeoff_estimate))?;
    }
    Ok(())
}

fn cmd_tradeoff(a: &TradeoffArgs) -> CliResult<()> {
    let cfg = AuditConfig {
        binning: a.input.binning()?,
        confidence: a.confidence,
        ..AuditConfig::default()
    };
    cfg.validate()?;
    let (p, q) = a.input.load()?;
    let report = audit_scores(&p, &q, &cfg, Method::Histogram)?;
    let curve = if a.lower {
        &report.tradeoff_bound
    } else {
        &report.tradeoff_estimate
    };
    emit(a.out.as_ref(), &curve_to_csv(curve))
}

fn parse_grid(s: &str) -> CliResult<PldGridSpec> {
    let bad = || CliError::config(format!("expected L:m, got {s:?}"));
    let (l, m) = s.split_once(':').ok_or_else(bad)?;
    let l: f64 = l.trim().parse().map_err(|_| bad())?;
    let m: usize = m.trim().parse().map_err(|_| bad())?;
    Ok(PldGridSpec::new(l, m)?)
}

fn cmd_compose(a: &ComposeArgs) -> CliResult<()> {
    if a.compositions == 0 {
        return Err(CliError::config("--compositions must be at least 1"));
    }
    let binning = a.input.binning()?;
    let eps_grid = EpsGrid::parse(&a.eps_grid)?;
    let grid = a.grid.as_deref().map(parse_grid).transpose()?;
    let (p, q) = a.input.load()?;
    let spec = auto_spec(&p, &q, binning)?;
    let hist = build_histograms(&p, &q, &spec)?;
    let grid = grid.unwrap_or_else(|| PldGridSpec::covering(&hist.p_hat, &hist.q_hat));
    let profile = compose_profile(
        &hist.p_hat,
        &hist.q_hat,
        a.compositions,
        &eps_grid.points(),
        &grid,
    )?;
    let table = match &profile {
        PrivacyProfile::Tabulated(t) => t.clone(),
        other => other.tabulate(&eps_grid.points())?,
    };
    let csv = profile_to_csv(&table);
    emit(a.out.as_ref(), &csv)?;
    if let Some(path) = &a.json {
        write_json(
            path,
            &json!({
                "method": Method::ComposedHeuristic.as_str(),
                "heuristic": true,
                "note": "composition of an estimated histogram pair; not a certified bound",
                "compositions": a.compositions,
                "n": hist.n,
                "binning": {"a": spec.a, "b": spec.b, "k": spec.k, "h": spec.h},
                "grid": {"half_width": grid.half_width, "nodes": grid.nodes},
                "profile": csv,
            }),
        )?;
    }
    Ok(())
}

fn parse_range(s: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::config(format!("expected lo:hi, got {s:?}"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn cmd_fit_gdp(a: &FitGdpArgs) -> CliResult<()> {
    let range = a.eps_range.as_deref().map(parse_range).transpose()?;
    let table = match (&a.profile, &a.samples) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::from(AuditError::Io(format!("{}: {e}", path.display()))))?;
            match parse_profile_csv(&text) {
                Ok(t) => t,
                Err(AuditError::Empty(_)) => {
                    return Err(CliError::config(format!(
                        "{} holds no profile rows",
                        path.display()
                    )))
                }
                Err(e) => return Err(e.into()),
            }
        }
        (None, Some(files)) => {
            let input = InputArgs {
                in_p: files[0].clone(),
                in_q: files[1].clone(),
                bins: a.bins,
                auto_bins: a.bins.is_none(),
            };
            let (p, q) = input.load()?;
            let cfg = AuditConfig {
                binning: input.binning()?,
                ..AuditConfig::default()
            };
            audit_scores(&p, &q, &cfg, Method::Histogram)?.profile
        }
        _ => {
            return Err(CliError::config(
                "pass exactly one of --profile or --samples",
            ))
        }
    };
    let range = match range {
        Some(r) => r,
        None => {
            let eps = table.eps();
            let (lo, hi) = (eps[0], eps[eps.len() - 1]);
            if !(lo < hi) {
                return Err(CliError::config(
                    "profile needs at least two distinct epsilon values",
                ));
            }
            (lo, hi)
        }
    };
    let fit = fit_mu_gdp_detailed(&PrivacyProfile::Tabulated(table), range)?;
    println!("mu={}", format_sig12(fit.mu));
    if let Some(path) = &a.json {
        write_json(
            path,
            &json!({
                "mu": fit.mu,
                "sigma": fit.sigma,
                "eps_touch": fit.eps_touch,
                "mismatch": fit.mismatch,
                "eps_range": [range.0, range.1],
            }),
        )?;
    }
    Ok(())
}

fn cmd_canary(a: &CanaryArgs) -> CliResult<()> {
    if a.d == 0 {
        return Err(CliError::config("-d must be at least 1"));
    }
    let (p, q, method) = match a.mode {
        CanaryMode::OneShot => {
            let mut cfg = OneShotConfig::new(a.d, a.n, a.sigma, a.x_norm, a.seed.seed)?;
            cfg.simulation = a.simulation.into();
            cfg.validate()?;
            if a.audit && a.out_p.is_none() {
                let audit = a.report.config(bins_mode(a.bins)?)?;
                let report = one_shot_audit(&cfg, &audit)?;
                return finish_canary(a, &report);
            }
            let (p, q) = one_shot_score_samples(&cfg)?;
            (p, q, Method::OneShot)
        }
        CanaryMode::WhiteBox => {
            if a.runs == 0 {
                return Err(CliError::config("--runs must be at least 1"));
            }
            let mut cfg = WhiteBoxConfig::new(a.t, a.q_c, a.q, a.sigma, a.clip, a.d, a.seed.seed)?;
            cfg.data_size = a.data_size;
            cfg.simulation = a.simulation.into();
            cfg.validate()?;
            let (o, o_prime) = whitebox_runs(&cfg, a.runs)?;
            // P carries the canary.
            (o_prime, o, Method::Histogram)
        }
    };
    if let (Some(out_p), Some(out_q)) = (&a.out_p, &a.out_q) {
        write_scores(out_p, &p)?;
        write_scores(out_q, &q)?;
    }
    if a.audit {
        let cfg = a.report.config(bins_mode(a.bins)?)?;
        let report = audit_scores(&p, &q, &cfg, method)?;
        finish_canary(a, &report)?;
    }
    Ok(())
}

fn bins_mode(bins: Option<usize>) -> CliResult<BinningMode> {
    match bins {
        Some(0) => Err(CliError::config("--bins must be at least 1")),
        Some(k) => Ok(BinningMode::FixedK(k)),
        None => Ok(BinningMode::ScottGaussian),
    }
}

fn finish_canary(a: &CanaryArgs, report: &AuditReport) -> CliResult<()> {
    print_report(report);
    println!("delta_at_1={}", format_sig12(report.profile.delta_at(1.0)));
    if let Some(path) = &a.json {
        write_json(path, &report.to_json())?;
    }
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Tradeoff(a) => cmd_tradeoff(a),
        Command::Compose(a) => cmd_compose(a),
        Command::FitGdp(a) => cmd_fit_gdp(a),
        Command::Canary(a) => cmd_canary(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}
