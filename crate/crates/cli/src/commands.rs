//! Subcommand definitions and their implementations.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use emitter_core::montecarlo::{calibrate_thresholds, SweepRow};
use emitter_core::{
    decide, pmiss_vs_n, roc_curves, snapshot_spectrum, synth_snapshots, ArrayConfig,
    CampaignConfig, DetectorKind, Hypothesis, RngStream, RocGrid, RocPoint, ScenarioConfig,
    SignalModel, ThresholdMode, ThresholdPolicy, ThresholdSource, TwOrder,
};

use crate::error::{CliError, Result};
use crate::plot::{LinePlot, Series};
use crate::table::{self, Table};
use crate::{snapfile, twfile};

#[derive(Debug, Parser)]
#[command(
    name = "emitter",
    version,
    about = "Eigenvalue-based passive emitter detection"
)]
pub struct Cli {
    /// Worker threads for Monte Carlo trials (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory holding tw1.txt / tw2.txt (overrides EMITTER_TW_DIR).
    #[arg(long, global = true)]
    pub tw_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic EMSNAP01 snapshot file.
    Synth(SynthArgs),
    /// Run detectors on a snapshot file.
    Detect(DetectArgs),
    /// Monte Carlo ROC curves.
    Roc(RocArgs),
    /// Miss probability versus array size.
    Pmiss(PmissArgs),
    /// Dump a loaded Tracy-Widom table.
    TwTable(TwTableArgs),
    /// Empirical CFAR thresholds from H0 trials.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum HypothesisArg {
    H0,
    H1,
}

impl From<HypothesisArg> for Hypothesis {
    fn from(h: HypothesisArg) -> Self {
        match h {
            HypothesisArg::H0 => Hypothesis::H0,
            HypothesisArg::H1 => Hypothesis::H1,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SignalArg {
    Gaussian,
    Qpsk,
}

impl From<SignalArg> for SignalModel {
    fn from(s: SignalArg) -> Self {
        match s {
            SignalArg::Gaussian => SignalModel::Gaussian,
            SignalArg::Qpsk => SignalModel::ConstantModulus,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum PolicyArg {
    Analytic,
    Empirical,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum FormatArg {
    Text,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Snapshots per trial (L).
    #[arg(long, default_value_t = 200)]
    pub snapshots: usize,
    #[arg(long, default_value_t = -18.0, allow_hyphen_values = true)]
    pub snr_db: f64,
    /// Direction of arrival in degrees from broadside.
    #[arg(long, default_value_t = 30.0, allow_hyphen_values = true)]
    pub theta_deg: f64,
    /// Antenna spacing in wavelengths.
    #[arg(long, default_value_t = ArrayConfig::DEFAULT_SPACING)]
    pub spacing: f64,
    #[arg(long, value_enum, default_value_t = SignalArg::Gaussian)]
    pub signal: SignalArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl ScenarioArgs {
    fn scenario(&self, hypothesis: Hypothesis) -> Result<ScenarioConfig> {
        if !(self.theta_deg.is_finite() && self.theta_deg.abs() < 90.0) {
            return Err(CliError::Flag(format!(
                "--theta-deg {} outside (-90, 90)",
                self.theta_deg
            )));
        }
        let mut sc = ScenarioConfig::new(
            self.snr_db,
            self.theta_deg * PI / 180.0,
            self.snapshots,
            hypothesis,
        );
        sc.signal = self.signal.into();
        sc.validate()?;
        Ok(sc)
    }
}

#[derive(Debug, Clone, Args)]
pub struct CampaignArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Trials per hypothesis.
    #[arg(long, default_value_t = emitter_core::montecarlo::DEFAULT_TRIALS)]
    pub trials: usize,
    /// Comma-separated detectors, or "all".
    #[arg(long, default_value = "all")]
    pub detectors: String,
}

impl CampaignArgs {
    fn config(&self, n: usize) -> Result<CampaignConfig> {
        let array = ArrayConfig::new(n, self.scenario.spacing)?;
        let cfg = CampaignConfig::new(
            self.scenario.scenario(Hypothesis::H0)?,
            array,
            self.trials,
            self.scenario.seed,
        )
        .with_detectors(&parse_detectors(&self.detectors)?);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// CSV destination (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write an SVG plot here.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_enum)]
    pub hypothesis: HypothesisArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Detector name, comma list or "all"; may repeat.
    #[arg(long = "detector")]
    pub detectors: Vec<String>,
    #[arg(long, default_value_t = 0.1)]
    pub pfa: f64,
    #[arg(long, value_enum, default_value_t = PolicyArg::Analytic)]
    pub policy: PolicyArg,
    /// Tracy-Widom order for the quantile and the centering constants.
    #[arg(long, default_value_t = 2)]
    pub tw_order: u8,
    /// Compare R-MaxEV-MinEV against λmax / (q·mu + nu) instead of the standard-form threshold.
    #[arg(long)]
    pub as_written: bool,
    /// Calibration CSV from `calibrate`; otherwise thresholds are calibrated on the fly.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// H0 trials for on-the-fly calibration.
    #[arg(long, default_value_t = 2000)]
    pub calibration_trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct RocArgs {
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[command(flatten)]
    pub campaign: CampaignArgs,
    /// "default", "order-stats", or a comma list of Pfa values.
    #[arg(long, default_value = "default")]
    pub grid: String,
    /// Logarithmic Pfa axis in the SVG.
    #[arg(long)]
    pub log_x: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PmissArgs {
    /// Comma-separated ascending array sizes.
    #[arg(long, default_value = "2,4,8,16,32,64,128,256,512")]
    pub n_list: String,
    #[command(flatten)]
    pub campaign: CampaignArgs,
    #[arg(long, default_value_t = 0.1)]
    pub pfa: f64,
    /// Logarithmic Pmiss axis in the SVG.
    #[arg(long)]
    pub log_y: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[command(flatten)]
    pub campaign: CampaignArgs,
    /// Comma-separated target false-alarm probabilities.
    #[arg(long, default_value = "0.01,0.05,0.1,0.3")]
    pub pfa_list: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TwTableArgs {
    #[arg(long, default_value_t = 1)]
    pub order: u8,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn parse_detectors(list: &str) -> Result<Vec<DetectorKind>> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if item.eq_ignore_ascii_case("all") {
            out.extend(DetectorKind::ALL);
        } else {
            out.push(item.parse()?);
        }
    }
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err(CliError::Flag("no detectors selected".into()));
    }
    Ok(out)
}

fn parse_list<T: std::str::FromStr>(flag: &str, list: &str) -> Result<Vec<T>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| CliError::Flag(format!("{flag}: cannot parse {s:?}")))
        })
        .collect()
}

fn check_pfa(flag: &str, pfa: f64) -> Result<()> {
    if pfa > 0.0 && pfa < 1.0 {
        Ok(())
    } else {
        Err(CliError::Flag(format!("{flag} {pfa} outside (0, 1)")))
    }
}

fn emit(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn write_svg(path: Option<&Path>, plot: LinePlot) -> Result<()> {
    if let Some(p) = path {
        fs::write(p, plot.to_svg()).map_err(|e| CliError::io(p, e))?;
    }
    Ok(())
}

/// Runs one subcommand. Data goes to `stdout`, diagnostics to `stderr`.
/// Returns `Ok(false)` when the command completed but reported a per-item
/// failure.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<bool> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Flag("--threads must be positive".into()));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match &cli.command {
        Command::Synth(a) => cmd_synth(a, stdout).map(|_| true),
        Command::Detect(a) => cmd_detect(a, cli.tw_dir.as_deref(), stdout, stderr),
        Command::Roc(a) => cmd_roc(a, stdout).map(|_| true),
        Command::Pmiss(a) => cmd_pmiss(a, stdout).map(|_| true),
        Command::TwTable(a) => cmd_tw_table(a, cli.tw_dir.as_deref(), stdout).map(|_| true),
        Command::Calibrate(a) => cmd_calibrate(a, stdout).map(|_| true),
    }
}

pub fn cmd_synth(a: &SynthArgs, stdout: &mut dyn Write) -> Result<()> {
    let array = ArrayConfig::new(a.n, a.scenario.spacing)?;
    let scenario = a.scenario.scenario(a.hypothesis.into())?;
    let y = synth_snapshots(&scenario, &array, RngStream::new(a.scenario.seed, 0))?;
    snapfile::write(&a.out, &y)?;
    let h = match scenario.hypothesis {
        Hypothesis::H0 => "h0",
        Hypothesis::H1 => "h1",
    };
    writeln!(
        stdout,
        "n={} l={} hypothesis={h} seed={}",
        y.n(),
        y.l(),
        a.scenario.seed
    )
    .map_err(|e| CliError::io("<stdout>", e))
}

pub fn cmd_detect(
    a: &DetectArgs,
    tw_dir: Option<&Path>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<bool> {
    check_pfa("--pfa", a.pfa)?;
    let order = TwOrder::from_u8(a.tw_order)?;
    let kinds = if a.detectors.is_empty() {
        match a.policy {
            PolicyArg::Analytic => vec![
                DetectorKind::RMaxMin,
                DetectorKind::RMaxNv,
                DetectorKind::MMaxMin,
            ],
            PolicyArg::Empirical => DetectorKind::ALL.to_vec(),
        }
    } else {
        parse_detectors(&a.detectors.join(","))?
    };
    let y = snapfile::read(&a.input)?;
    let spec = snapshot_spectrum(&y)?;

    let mut policy = ThresholdPolicy::analytic(order);
    policy.as_written = a.as_written;
    let mut source = ThresholdSource {
        tables: twfile::resolve(tw_dir)?,
        ..ThresholdSource::default()
    };
    if a.policy == PolicyArg::Empirical {
        policy.mode = ThresholdMode::EmpiricalCalibration;
        source.calibration = match &a.calibration {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                table::parse_calibration(&text)?
            }
            None => {
                let scenario = ScenarioConfig::new(0.0, 0.0, y.l(), Hypothesis::H0);
                let cfg = CampaignConfig::new(
                    scenario,
                    ArrayConfig::half_wavelength(y.n())?,
                    a.calibration_trials,
                    a.seed,
                )
                .with_detectors(&kinds);
                calibrate_on_the_fly(&cfg, a.pfa, stderr)?
            }
        };
    }

    let mut ok = true;
    let mut csv = Table::new(&["detector", "statistic", "threshold", "decision", "pfa"]);
    for kind in kinds {
        match decide(kind, &spec, a.pfa, &policy, &source) {
            Ok(d) => {
                let verdict = if d.emitter_present {
                    "present"
                } else {
                    "absent"
                };
                match a.format {
                    FormatArg::Text => writeln!(
                        stdout,
                        "{:<10} statistic={} threshold={} decision={verdict}",
                        kind.name(),
                        table::format_f64(d.statistic),
                        table::format_f64(d.threshold)
                    )
                    .map_err(|e| CliError::io("<stdout>", e))?,
                    FormatArg::Csv => csv.push(vec![
                        table::Field::Text(kind.name().into()),
                        table::Field::Float(d.statistic),
                        table::Field::Float(d.threshold),
                        table::Field::Text(verdict.into()),
                        table::Field::Float(a.pfa),
                    ]),
                }
            }
            Err(e) => {
                ok = false;
                let _ = writeln!(stderr, "error: {}: {e}", kind.name());
            }
        }
    }
    if a.format == FormatArg::Csv {
        emit(None, &csv.to_csv()?, stdout)?;
    }
    Ok(ok)
}

/// Calibrates only the detectors that are not degenerate at this N, L.
fn calibrate_on_the_fly(
    cfg: &CampaignConfig,
    pfa: f64,
    stderr: &mut dyn Write,
) -> Result<emitter_core::CalibrationTable> {
    let n = cfg.array.n_antennas();
    let l = cfg.scenario.n_snapshots;
    let usable: Vec<DetectorKind> = cfg
        .detectors
        .iter()
        .copied()
        .filter(|k| !(k.needs_full_rank() && n > l))
        .collect();
    if usable.is_empty() {
        return Ok(emitter_core::CalibrationTable::new());
    }
    let _ = writeln!(
        stderr,
        "calibrating {} detector(s) on {} H0 trials",
        usable.len(),
        cfg.trials
    );
    Ok(calibrate_thresholds(
        &cfg.clone().with_detectors(&usable),
        &[pfa],
    )?)
}

fn parse_grid(grid: &str) -> Result<RocGrid> {
    match grid {
        "default" => Ok(RocGrid::default()),
        "order-stats" => Ok(RocGrid::OrderStatistics),
        list => {
            let pfas: Vec<f64> = parse_list("--grid", list)?;
            for p in &pfas {
                check_pfa("--grid", *p)?;
            }
            Ok(RocGrid::Pfa(pfas))
        }
    }
}

pub fn roc_plot(points: &[RocPoint], log_x: bool) -> LinePlot {
    let mut kinds: Vec<DetectorKind> = points.iter().map(|p| p.detector).collect();
    kinds.dedup();
    LinePlot {
        title: "ROC".into(),
        x_label: "Pfa".into(),
        y_label: "Pd".into(),
        log_x,
        log_y: false,
        series: kinds
            .into_iter()
            .map(|k| Series {
                label: k.label().into(),
                points: points
                    .iter()
                    .filter(|p| p.detector == k)
                    .map(|p| (p.pfa, p.pd))
                    .collect(),
            })
            .collect(),
    }
}

pub fn cmd_roc(a: &RocArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = a.campaign.config(a.n)?;
    let grid = parse_grid(&a.grid)?;
    let points = roc_curves(&cfg, &grid)?;
    emit(
        a.output.out.as_deref(),
        &table::roc_table(&points).to_csv()?,
        stdout,
    )?;
    write_svg(a.output.svg.as_deref(), roc_plot(&points, a.log_x))
}

pub fn pmiss_plot(rows: &[SweepRow], log_y: bool) -> LinePlot {
    let kinds: Vec<DetectorKind> = rows
        .first()
        .map(|r| r.entries.iter().map(|e| e.detector).collect())
        .unwrap_or_default();
    LinePlot {
        title: "Miss probability versus array size".into(),
        x_label: "N".into(),
        y_label: "Pmiss".into(),
        log_x: true,
        log_y,
        series: kinds
            .into_iter()
            .map(|k| Series {
                label: k.label().into(),
                points: rows
                    .iter()
                    .filter_map(|r| Some((r.n_antennas as f64, r.pmiss(k)?)))
                    .collect(),
            })
            .collect(),
    }
}

pub fn cmd_pmiss(a: &PmissArgs, stdout: &mut dyn Write) -> Result<()> {
    check_pfa("--pfa", a.pfa)?;
    let n_values: Vec<usize> = parse_list("--n-list", &a.n_list)?;
    if n_values.is_empty() {
        return Err(CliError::Flag("--n-list is empty".into()));
    }
    for n in &n_values {
        ArrayConfig::new(*n, a.campaign.scenario.spacing)?;
    }
    let cfg = a.campaign.config(n_values[0])?;
    let rows = pmiss_vs_n(&cfg, &n_values, a.pfa)?;
    emit(
        a.output.out.as_deref(),
        &table::pmiss_table(&rows).to_csv()?,
        stdout,
    )?;
    write_svg(a.output.svg.as_deref(), pmiss_plot(&rows, a.log_y))
}

pub fn cmd_calibrate(a: &CalibrateArgs, stdout: &mut dyn Write) -> Result<()> {
    let pfas: Vec<f64> = parse_list("--pfa-list", &a.pfa_list)?;
    for p in &pfas {
        check_pfa("--pfa-list", *p)?;
    }
    let cfg = a.campaign.config(a.n)?;
    let cal = calibrate_thresholds(&cfg, &pfas)?;
    emit(
        a.out.as_deref(),
        &table::calibration_table(&cal).to_csv()?,
        stdout,
    )
}

pub fn cmd_tw_table(a: &TwTableArgs, tw_dir: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    let order = TwOrder::from_u8(a.order)?;
    let tables = twfile::resolve(tw_dir)?;
    let t = tables.get(order)?;
    emit(
        a.output.out.as_deref(),
        &table::tw_table(t).to_csv()?,
        stdout,
    )?;
    write_svg(
        a.output.svg.as_deref(),
        LinePlot {
            title: format!("Tracy-Widom CDF, order {}", a.order),
            x_label: "t".into(),
            y_label: "F(t)".into(),
            series: vec![Series {
                label: format!("TW{}", a.order),
                points: t
                    .grid()
                    .iter()
                    .copied()
                    .zip(t.cdf_values().iter().copied())
                    .collect(),
            }],
            ..LinePlot::default()
        },
    )
}
