//! Monte Carlo campaigns: repeated synth → covariance → statistic trials.
//!
//! Trial `t` of a run draws from `RngStream(seed, block | t)`, where the block
//! separates H0 calibration, H1 evaluation and fresh H0 validation draws.
//! Results are collected in trial order, so a campaign is a pure function of
//! its configuration whatever the thread count.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::array_signal::{synth_snapshots, ArrayConfig, Hypothesis, RngStream, ScenarioConfig};
use crate::covariance::{snapshot_spectrum, EigenSpectrum};
use crate::detectors::{
    analytic_threshold, statistic, CalibrationTable, DetectorKind, ThresholdPolicy,
};
use crate::error::{bail, Error, Result};
use crate::rmt::TwTables;

/// Default number of trials per hypothesis.
pub const DEFAULT_TRIALS: usize = 10_000;
/// Smallest trial count accepted for rate estimation.
pub const MIN_TRIALS: usize = 100;
/// `trials * pfa` must reach this many expected exceedances to calibrate.
pub const MIN_EXCEEDANCES: f64 = 20.0;

const BLOCK_SHIFT: u32 = 48;

/// Disjoint ranges of RNG stream ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamBlock {
    /// H0 draws used to set thresholds.
    Calibration,
    /// H1 draws used to measure detection.
    Detection,
    /// Fresh H0 draws used to measure false alarms.
    Validation,
}

impl StreamBlock {
    pub fn stream_id(self, trial: usize) -> u64 {
        let block: u64 = match self {
            StreamBlock::Calibration => 0,
            StreamBlock::Detection => 1,
            StreamBlock::Validation => 2,
        };
        (block << BLOCK_SHIFT) | trial as u64
    }

    pub fn for_hypothesis(h: Hypothesis) -> Self {
        match h {
            Hypothesis::H0 => StreamBlock::Calibration,
            Hypothesis::H1 => StreamBlock::Detection,
        }
    }

    fn hypothesis(self) -> Hypothesis {
        match self {
            StreamBlock::Detection => Hypothesis::H1,
            _ => Hypothesis::H0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    /// Scenario parameters; the hypothesis field is overridden per run.
    pub scenario: ScenarioConfig,
    pub array: ArrayConfig,
    pub trials: usize,
    pub seed: u64,
    pub detectors: Vec<DetectorKind>,
    pub policy: ThresholdPolicy,
}

impl CampaignConfig {
    pub fn new(scenario: ScenarioConfig, array: ArrayConfig, trials: usize, seed: u64) -> Self {
        Self {
            scenario,
            array,
            trials,
            seed,
            detectors: DetectorKind::ALL.to_vec(),
            policy: ThresholdPolicy::empirical(),
        }
    }

    pub fn with_detectors(mut self, detectors: &[DetectorKind]) -> Self {
        self.detectors = detectors.to_vec();
        self
    }

    pub fn with_antennas(&self, n: usize) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.array = ArrayConfig::new(n, self.array.spacing_wavelengths())?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.trials < MIN_TRIALS {
            bail!(
                Argument,
                "campaign needs at least {MIN_TRIALS} trials, got {}",
                self.trials
            );
        }
        if self.detectors.is_empty() {
            bail!(Argument, "campaign needs at least one detector");
        }
        Ok(())
    }

    fn scenario_for(&self, h: Hypothesis) -> ScenarioConfig {
        self.scenario.with_hypothesis(h)
    }
}

/// Runs `f` on the eigen-spectrum of every trial in `block`, in trial order.
pub fn run_trials<T, F>(cfg: &CampaignConfig, block: StreamBlock, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&EigenSpectrum) -> Result<T> + Sync,
{
    cfg.validate()?;
    let scenario = cfg.scenario_for(block.hypothesis());
    let trial = |t: usize| -> Result<T> {
        let y = synth_snapshots(
            &scenario,
            &cfg.array,
            RngStream::new(cfg.seed, block.stream_id(t)),
        )?;
        f(&snapshot_spectrum(&y)?)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..cfg.trials).into_par_iter().map(trial).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..cfg.trials).map(trial).collect()
    }
}

/// Per-detector statistic vectors of one run. Degenerate trials hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialStatistics {
    pub block: StreamBlock,
    detectors: Vec<DetectorKind>,
    values: Vec<Vec<f64>>,
}

impl TrialStatistics {
    pub fn detectors(&self) -> &[DetectorKind] {
        &self.detectors
    }

    /// Raw vector including NaN markers.
    pub fn get(&self, kind: DetectorKind) -> Option<&[f64]> {
        self.detectors
            .iter()
            .position(|k| *k == kind)
            .map(|i| self.values[i].as_slice())
    }

    /// Finite entries only.
    pub fn valid(&self, kind: DetectorKind) -> Vec<f64> {
        self.get(kind)
            .map(|v| v.iter().copied().filter(|x| !x.is_nan()).collect())
            .unwrap_or_default()
    }

    pub fn degenerate_count(&self, kind: DetectorKind) -> usize {
        self.get(kind)
            .map_or(0, |v| v.iter().filter(|x| x.is_nan()).count())
    }
}

fn collect_statistics(cfg: &CampaignConfig, block: StreamBlock) -> Result<TrialStatistics> {
    let kinds = cfg.detectors.clone();
    let rows = run_trials(cfg, block, |spec| {
        kinds
            .iter()
            .map(|k| match statistic(*k, spec) {
                Ok(v) => Ok(v),
                Err(Error::DegenerateSpectrum(_)) => Ok(f64::NAN),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let mut values = vec![Vec::with_capacity(rows.len()); kinds.len()];
    for row in rows {
        for (column, v) in values.iter_mut().zip(row) {
            column.push(v);
        }
    }
    let stats = TrialStatistics {
        block,
        detectors: kinds,
        values,
    };
    for k in stats.detectors() {
        let bad = stats.degenerate_count(*k);
        if bad > 0 {
            log::info!(
                "{k}: {bad} of {} trials degenerate and excluded",
                cfg.trials
            );
        }
    }
    Ok(stats)
}

fn require_some_valid(stats: &TrialStatistics) -> Result<()> {
    for k in stats.detectors() {
        if stats.valid(*k).is_empty() {
            bail!(Campaign, "every trial was degenerate for {k}");
        }
    }
    Ok(())
}

/// Statistic vectors for every configured detector under `hypothesis`.
pub fn run_statistics(cfg: &CampaignConfig, hypothesis: Hypothesis) -> Result<TrialStatistics> {
    run_statistics_in(cfg, StreamBlock::for_hypothesis(hypothesis))
}

pub fn run_statistics_in(cfg: &CampaignConfig, block: StreamBlock) -> Result<TrialStatistics> {
    let stats = collect_statistics(cfg, block)?;
    require_some_valid(&stats)?;
    Ok(stats)
}

/// Linearly interpolated empirical quantile (order statistics at `(n-1)·p`).
/// NaN entries are ignored.
pub fn empirical_quantile(values: &[f64], p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        bail!(Argument, "quantile level {p} outside [0, 1]");
    }
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    if sorted.is_empty() {
        bail!(Argument, "quantile of an empty sample");
    }
    sorted.sort_unstable_by(f64::total_cmp);
    let pos = p * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// Threshold whose empirical exceedance rate on `h0_values` is `pfa`.
pub fn threshold_from_h0(h0_values: &[f64], pfa: f64) -> Result<f64> {
    let n = h0_values.iter().filter(|v| !v.is_nan()).count();
    check_pfa(pfa, n)?;
    empirical_quantile(h0_values, 1.0 - pfa)
}

fn check_pfa(pfa: f64, trials: usize) -> Result<()> {
    if !(pfa > 0.0 && pfa < 1.0) {
        bail!(Argument, "false-alarm probability {pfa} outside (0, 1)");
    }
    if (trials as f64) * pfa < MIN_EXCEEDANCES {
        bail!(
            Argument,
            "{trials} trials give fewer than {MIN_EXCEEDANCES} expected false alarms at Pfa {pfa}"
        );
    }
    Ok(())
}

/// Empirical CFAR threshold: the H0 `(1 - pfa)`-quantile of the statistic.
pub fn calibrate_threshold(cfg: &CampaignConfig, kind: DetectorKind, pfa: f64) -> Result<f64> {
    check_pfa(pfa, cfg.trials)?;
    let single = CampaignConfig {
        detectors: vec![kind],
        ..cfg.clone()
    };
    let h0 = run_statistics(&single, Hypothesis::H0)?;
    threshold_from_h0(h0.get(kind).unwrap_or_default(), pfa)
}

/// Calibrates every configured detector at every target Pfa from one H0 run.
pub fn calibrate_thresholds(cfg: &CampaignConfig, pfas: &[f64]) -> Result<CalibrationTable> {
    for &pfa in pfas {
        check_pfa(pfa, cfg.trials)?;
    }
    let h0 = run_statistics(cfg, Hypothesis::H0)?;
    let mut table = CalibrationTable::new();
    for &kind in &cfg.detectors {
        let values = h0.get(kind).unwrap_or_default();
        for &pfa in pfas {
            table.insert(kind, pfa, threshold_from_h0(values, pfa)?);
        }
    }
    Ok(table)
}

/// A proportion estimated from Bernoulli trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub hits: usize,
    pub trials: usize,
}

impl RateEstimate {
    /// Counts entries strictly above `threshold`, skipping NaN markers.
    pub fn exceedances(values: &[f64], threshold: f64) -> Self {
        let valid = values.iter().filter(|v| !v.is_nan());
        let (hits, trials) =
            valid.fold((0, 0), |(h, t), v| (h + usize::from(*v > threshold), t + 1));
        Self { hits, trials }
    }

    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            return f64::NAN;
        }
        self.hits as f64 / self.trials as f64
    }

    /// Binomial standard error of the estimate at the true rate `p`.
    pub fn standard_error_at(&self, p: f64) -> f64 {
        binomial_standard_error(p, self.trials)
    }
}

pub fn binomial_standard_error(p: f64, trials: usize) -> f64 {
    libm::sqrt(p * (1.0 - p) / trials as f64)
}

/// Fresh-data false-alarm rate of calibrated thresholds, measured on the
/// validation stream block.
pub fn validate_false_alarms(
    cfg: &CampaignConfig,
    calibration: &CalibrationTable,
    pfa: f64,
) -> Result<Vec<(DetectorKind, RateEstimate)>> {
    let fresh = run_statistics_in(cfg, StreamBlock::Validation)?;
    cfg.detectors
        .iter()
        .map(|&kind| {
            let threshold = calibration.get(kind, pfa).ok_or_else(|| {
                Error::Configuration(format!("no calibrated threshold for {kind} at Pfa {pfa}"))
            })?;
            Ok((
                kind,
                RateEstimate::exceedances(fresh.get(kind).unwrap_or_default(), threshold),
            ))
        })
        .collect()
}

/// False-alarm rate of the closed-form threshold for `kind`, measured on
/// fresh H0 draws.
pub fn analytic_false_alarm_rate(
    cfg: &CampaignConfig,
    kind: DetectorKind,
    pfa: f64,
    policy: &ThresholdPolicy,
    tables: &TwTables,
) -> Result<RateEstimate> {
    let (n, l) = (cfg.array.n_antennas(), cfg.scenario.n_snapshots);
    let alarms = run_trials(cfg, StreamBlock::Validation, |spec| {
        let t = analytic_threshold(kind, pfa, n, l, spec, policy, tables)?;
        Ok(statistic(kind, spec)? > t)
    })?;
    Ok(RateEstimate {
        hits: alarms.iter().filter(|a| **a).count(),
        trials: alarms.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub detector: DetectorKind,
    pub pfa: f64,
    pub pd: f64,
}

/// Where the ROC threshold sweep is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum RocGrid {
    /// One point per distinct H0 order statistic.
    OrderStatistics,
    /// Target false-alarm probabilities; thresholds are H0 quantiles.
    Pfa(Vec<f64>),
}

impl Default for RocGrid {
    /// Log-spaced 0.001–0.005 followed by 0.01, 0.02, …, 0.50.
    fn default() -> Self {
        let mut grid = vec![0.001, 0.002, 0.005];
        grid.extend((1..=50).map(|k| k as f64 / 100.0));
        RocGrid::Pfa(grid)
    }
}

fn roc_from_statistics(
    kind: DetectorKind,
    h0: &[f64],
    h1: &[f64],
    grid: &RocGrid,
) -> Result<Vec<RocPoint>> {
    let mut h0_sorted: Vec<f64> = h0.iter().copied().filter(|v| !v.is_nan()).collect();
    if h0_sorted.is_empty() {
        bail!(Campaign, "every H0 trial was degenerate for {kind}");
    }
    h0_sorted.sort_unstable_by(f64::total_cmp);
    let mut points = Vec::new();
    match grid {
        RocGrid::OrderStatistics => {
            let mut thresholds = h0_sorted.clone();
            thresholds.dedup();
            for t in thresholds.iter().rev() {
                points.push(RocPoint {
                    detector: kind,
                    pfa: RateEstimate::exceedances(&h0_sorted, *t).rate(),
                    pd: RateEstimate::exceedances(h1, *t).rate(),
                });
            }
        }
        RocGrid::Pfa(pfas) => {
            for &pfa in pfas {
                if !(pfa > 0.0 && pfa < 1.0) {
                    bail!(Argument, "ROC grid value {pfa} outside (0, 1)");
                }
                let t = empirical_quantile(&h0_sorted, 1.0 - pfa)?;
                points.push(RocPoint {
                    detector: kind,
                    pfa,
                    pd: RateEstimate::exceedances(h1, t).rate(),
                });
            }
        }
    }
    points.sort_by(|a, b| a.pfa.total_cmp(&b.pfa));
    let mut best = 0.0_f64;
    for p in points.iter_mut() {
        best = best.max(p.pd);
        p.pd = best;
    }
    Ok(points)
}

/// ROC points for every configured detector, from one H0 run and one H1 run.
pub fn roc_curves(cfg: &CampaignConfig, grid: &RocGrid) -> Result<Vec<RocPoint>> {
    let h0 = run_statistics(cfg, Hypothesis::H0)?;
    let h1 = run_statistics(cfg, Hypothesis::H1)?;
    let mut out = Vec::new();
    for &kind in &cfg.detectors {
        out.extend(roc_from_statistics(
            kind,
            h0.get(kind).unwrap_or_default(),
            h1.get(kind).unwrap_or_default(),
            grid,
        )?);
    }
    Ok(out)
}

/// ROC of a single detector.
pub fn roc_curve(
    cfg: &CampaignConfig,
    kind: DetectorKind,
    grid: &RocGrid,
) -> Result<Vec<RocPoint>> {
    roc_curves(&cfg.clone().with_detectors(&[kind]), grid)
}

/// Miss probability of one detector at one array size; `pmiss` is `None`
/// when the detector is degenerate there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepEntry {
    pub detector: DetectorKind,
    pub pmiss: Option<f64>,
    pub trials_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n_antennas: usize,
    pub entries: Vec<SweepEntry>,
}

impl SweepRow {
    pub fn pmiss(&self, kind: DetectorKind) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.detector == kind)
            .and_then(|e| e.pmiss)
    }

    pub fn entry(&self, kind: DetectorKind) -> Option<&SweepEntry> {
        self.entries.iter().find(|e| e.detector == kind)
    }
}

/// Miss probability versus array size at a fixed target Pfa. Thresholds are
/// calibrated per size on H0 draws and applied to disjoint H1 draws.
pub fn pmiss_vs_n(cfg: &CampaignConfig, n_values: &[usize], pfa: f64) -> Result<Vec<SweepRow>> {
    if n_values.windows(2).any(|w| w[1] <= w[0]) {
        bail!(Argument, "array sizes must be strictly ascending");
    }
    check_pfa(pfa, cfg.trials)?;
    n_values
        .iter()
        .map(|&n| {
            let at_n = cfg.with_antennas(n)?;
            let h0 = collect_statistics(&at_n, StreamBlock::Calibration)?;
            let h1 = collect_statistics(&at_n, StreamBlock::Detection)?;
            let entries = at_n
                .detectors
                .iter()
                .map(|&kind| {
                    let h0v = h0.get(kind).unwrap_or_default();
                    let valid_h0 = h0v.iter().filter(|v| !v.is_nan()).count();
                    let h1v = h1.get(kind).unwrap_or_default();
                    let rate = if (valid_h0 as f64) * pfa < MIN_EXCEEDANCES {
                        None
                    } else {
                        let t = threshold_from_h0(h0v, pfa)?;
                        Some(RateEstimate::exceedances(h1v, t))
                    };
                    Ok(match rate {
                        Some(r) if r.trials > 0 => SweepEntry {
                            detector: kind,
                            pmiss: Some(1.0 - r.rate()),
                            trials_used: r.trials,
                        },
                        _ => SweepEntry {
                            detector: kind,
                            pmiss: None,
                            trials_used: 0,
                        },
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepRow {
                n_antennas: n,
                entries,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, l: usize, snr_db: f64, trials: usize) -> CampaignConfig {
        CampaignConfig::new(
            ScenarioConfig::new(snr_db, core::f64::consts::PI / 6.0, l, Hypothesis::H0),
            ArrayConfig::half_wavelength(n).unwrap(),
            trials,
            7,
        )
    }

    #[test]
    fn quantile_interpolates_order_statistics() {
        let v = [4.0, 1.0, 3.0, 2.0, 5.0];
        assert_eq!(empirical_quantile(&v, 0.5).unwrap(), 3.0);
        assert_eq!(empirical_quantile(&v, 0.0).unwrap(), 1.0);
        assert_eq!(empirical_quantile(&v, 1.0).unwrap(), 5.0);
        assert!((empirical_quantile(&v, 0.9).unwrap() - 4.6).abs() < 1e-12);
        assert_eq!(empirical_quantile(&[2.5; 40], 0.73).unwrap(), 2.5);
        assert_eq!(empirical_quantile(&[f64::NAN, 1.0, 3.0], 0.5).unwrap(), 2.0);
        assert!(empirical_quantile(&[], 0.5).is_err());
    }

    #[test]
    fn threshold_needs_enough_exceedances() {
        let v = [1.0; 100];
        assert!(threshold_from_h0(&v, 0.1).is_err());
        assert_eq!(threshold_from_h0(&v, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn stream_blocks_are_disjoint() {
        let ids: Vec<u64> = [
            StreamBlock::Calibration,
            StreamBlock::Detection,
            StreamBlock::Validation,
        ]
        .iter()
        .map(|b| b.stream_id(12345))
        .collect();
        assert_eq!(ids[0], 12345);
        assert!(ids[1] != ids[0] && ids[2] != ids[1]);
    }

    #[test]
    fn config_validation() {
        assert!(cfg(4, 10, 0.0, 99).validate().is_err());
        assert!(cfg(4, 10, 0.0, 100).with_detectors(&[]).validate().is_err());
    }

    #[test]
    fn rate_counts_strict_exceedances() {
        let r = RateEstimate::exceedances(&[1.0, 2.0, 3.0, f64::NAN], 2.0);
        assert_eq!((r.hits, r.trials), (1, 3));
        assert!((binomial_standard_error(0.1, 10_000) - 0.003).abs() < 1e-12);
        // doubling trials shrinks the standard error by √2
        let ratio = binomial_standard_error(0.3, 500) / binomial_standard_error(0.3, 1000);
        assert!((ratio - core::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn degenerate_detectors_marked_nan() {
        let c = cfg(8, 4, 0.0, 100);
        let stats = collect_statistics(&c, StreamBlock::Calibration).unwrap();
        assert_eq!(stats.degenerate_count(DetectorKind::Glrt), 100);
        assert_eq!(stats.degenerate_count(DetectorKind::RMaxNv), 0);
        assert!(matches!(
            run_statistics(&c, Hypothesis::H0),
            Err(Error::Campaign(_))
        ));
        let ok = c.with_detectors(&[DetectorKind::RMaxNv, DetectorKind::MMaxMin]);
        assert!(run_statistics(&ok, Hypothesis::H0).is_ok());
    }

    #[test]
    fn roc_is_monotone() {
        let c = cfg(4, 20, -3.0, 200);
        for grid in [RocGrid::OrderStatistics, RocGrid::default()] {
            let roc = roc_curve(&c, DetectorKind::RMaxNv, &grid).unwrap();
            assert!(roc
                .windows(2)
                .all(|w| w[0].pfa <= w[1].pfa && w[0].pd <= w[1].pd));
            assert!(roc.iter().all(|p| (0.0..=1.0).contains(&p.pd)));
        }
    }

    #[test]
    fn sweep_marks_absent_detectors() {
        let c = cfg(2, 6, -20.0, 200);
        let rows = pmiss_vs_n(&c, &[4, 8], 0.2).unwrap();
        assert!(rows[0].pmiss(DetectorKind::Glrt).is_some());
        assert!(rows[1].pmiss(DetectorKind::Glrt).is_none());
        assert!(rows[1].pmiss(DetectorKind::RMaxMin).is_none());
        assert_eq!(rows[1].entry(DetectorKind::Glrt).unwrap().trials_used, 0);
        assert!(rows[1].pmiss(DetectorKind::MMaxMin).is_some());
        assert!(pmiss_vs_n(&c, &[8, 4], 0.2).is_err());
    }
}
