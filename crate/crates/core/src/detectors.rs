//! Eigenvalue test statistics and their CFAR thresholds.
//!
//! | kind      | statistic                | threshold                        |
//! |-----------|--------------------------|----------------------------------|
//! | `Glrt`    | AM / GM of eigenvalues   | empirical calibration only       |
//! | `RMaxMin` | λmax / λmin              | Tracy-Widom (two forms) or empirical |
//! | `RMaxNv`  | λmax / σ̂²               | Tracy-Widom or empirical         |
//! | `MMaxMin` | (λmax + λmin) / 2        | Tracy-Widom or empirical         |
//!
//! Decisions use a strict comparison: a statistic equal to its threshold
//! reads as "absent".

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::covariance::{noise_variance_estimate, EigenSpectrum};
use crate::error::{bail, Error, Result};
use crate::rmt::{mp_edges, tw_constants, TwOrder, TwTables, MAX_COVERAGE, MIN_COVERAGE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DetectorKind {
    /// Sphericity GLRT: arithmetic over geometric mean.
    Glrt,
    /// Largest over smallest eigenvalue.
    RMaxMin,
    /// Largest eigenvalue over the noise-variance estimate.
    RMaxNv,
    /// Mean of the largest and smallest eigenvalue.
    MMaxMin,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 4] = [
        DetectorKind::Glrt,
        DetectorKind::RMaxMin,
        DetectorKind::RMaxNv,
        DetectorKind::MMaxMin,
    ];

    /// Short machine name used on the command line and in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Glrt => "glrt",
            DetectorKind::RMaxMin => "r-max-min",
            DetectorKind::RMaxNv => "r-max-nv",
            DetectorKind::MMaxMin => "m-max-min",
        }
    }

    /// Display label for plots.
    pub fn label(self) -> &'static str {
        match self {
            DetectorKind::Glrt => "GLRT",
            DetectorKind::RMaxMin => "R-MaxEV-MinEV",
            DetectorKind::RMaxNv => "R-MaxEV-NV",
            DetectorKind::MMaxMin => "M-MaxEV-MinEV",
        }
    }

    /// Whether the statistic divides by a zero eigenvalue when `N > L`.
    pub fn needs_full_rank(self) -> bool {
        matches!(self, DetectorKind::Glrt | DetectorKind::RMaxMin)
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DetectorKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s) || k.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Argument(format!("unknown detector {s:?}")))
    }
}

/// `(mean λ) / (Π λ)^(1/N)`, with the geometric mean taken in the log domain.
pub fn glrt_statistic(spec: &EigenSpectrum) -> Result<f64> {
    if spec.min() <= 0.0 {
        bail!(
            DegenerateSpectrum,
            "GLRT needs all eigenvalues positive (N={}, L={})",
            spec.n(),
            spec.l()
        );
    }
    let scale = spec.max();
    let n = spec.n() as f64;
    let mean = spec.values().iter().map(|v| v / scale).sum::<f64>() / n;
    let log_gm = spec
        .values()
        .iter()
        .map(|v| libm::log(v / scale))
        .sum::<f64>()
        / n;
    // AM >= GM; rounding can only push the ratio a few ulps below 1
    Ok(libm::exp(libm::log(mean) - log_gm).max(1.0))
}

/// `λmax / λmin`.
pub fn ratio_max_min(spec: &EigenSpectrum) -> Result<f64> {
    if spec.min() <= 0.0 {
        bail!(
            DegenerateSpectrum,
            "smallest eigenvalue is zero (N={}, L={})",
            spec.n(),
            spec.l()
        );
    }
    Ok(spec.max() / spec.min())
}

/// `λmax / σ̂²` with `σ̂² = (trace − λmax) / (N − 1)`.
pub fn ratio_max_nv(spec: &EigenSpectrum) -> Result<f64> {
    let noise = noise_variance_estimate(spec)?;
    if noise <= 0.0 {
        bail!(DegenerateSpectrum, "noise variance estimate is zero");
    }
    Ok(spec.max() / noise)
}

/// `(λmax + λmin) / 2`.
pub fn mean_max_min(spec: &EigenSpectrum) -> f64 {
    0.5 * (spec.max() + spec.min())
}

pub fn statistic(kind: DetectorKind, spec: &EigenSpectrum) -> Result<f64> {
    match kind {
        DetectorKind::Glrt => glrt_statistic(spec),
        DetectorKind::RMaxMin => ratio_max_min(spec),
        DetectorKind::RMaxNv => ratio_max_nv(spec),
        DetectorKind::MMaxMin => Ok(mean_max_min(spec)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThresholdMode {
    /// Closed-form Tracy-Widom threshold.
    Analytic,
    /// Monte Carlo quantile of the statistic under H0.
    EmpiricalCalibration,
}

/// How thresholds are obtained.
///
/// `tw_order` picks the Tracy-Widom law whose quantile is used, `centering`
/// picks the convention for `mu` and `nu`. `as_written` switches the
/// R-MaxEV-MinEV threshold to `λmax / (q·mu + nu)`; otherwise it is
/// `(q·nu + mu) / (a·σ̂²)` with `a` the lower M-P edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ThresholdPolicy {
    pub mode: ThresholdMode,
    pub tw_order: TwOrder,
    pub centering: TwOrder,
    pub as_written: bool,
}

impl ThresholdPolicy {
    pub fn analytic(order: TwOrder) -> Self {
        Self {
            mode: ThresholdMode::Analytic,
            tw_order: order,
            centering: order,
            as_written: false,
        }
    }

    pub fn empirical() -> Self {
        Self {
            mode: ThresholdMode::EmpiricalCalibration,
            ..Self::default()
        }
    }
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        Self::analytic(TwOrder::Two)
    }
}

/// Closed-form CFAR threshold for `kind` at false-alarm probability `pfa`.
///
/// The R-MaxEV-NV and M-MaxEV-MinEV thresholds, and the `as_written`
/// R-MaxEV-MinEV form, depend on the observed spectrum.
pub fn analytic_threshold(
    kind: DetectorKind,
    pfa: f64,
    n: usize,
    l: usize,
    spec: &EigenSpectrum,
    policy: &ThresholdPolicy,
    tables: &TwTables,
) -> Result<f64> {
    if kind == DetectorKind::Glrt {
        bail!(
            Unsupported,
            "GLRT has no closed-form threshold; use empirical calibration"
        );
    }
    if !(pfa > MIN_COVERAGE && pfa < MAX_COVERAGE) {
        bail!(
            Domain,
            "false-alarm probability {pfa} outside ({MIN_COVERAGE}, {MAX_COVERAGE})"
        );
    }
    let q = tables.quantile(1.0 - pfa, policy.tw_order)?;
    let c = tw_constants(n, l, policy.centering)?;
    let edge = q * c.nu + c.mu;
    match kind {
        DetectorKind::RMaxNv => {
            let noise = noise_variance_estimate(spec)?;
            if noise <= 0.0 {
                bail!(DegenerateSpectrum, "noise variance estimate is zero");
            }
            Ok(edge / noise)
        }
        DetectorKind::MMaxMin => Ok((edge + spec.max()) / 2.0),
        DetectorKind::RMaxMin if policy.as_written => Ok(spec.max() / (q * c.mu + c.nu)),
        DetectorKind::RMaxMin => {
            let lower = mp_edges(n, l)?.a * noise_variance_estimate(spec)?;
            if lower <= 0.0 {
                bail!(
                    DegenerateSpectrum,
                    "lower M-P edge proxy is zero (N={n}, L={l})"
                );
            }
            Ok(edge / lower)
        }
        DetectorKind::Glrt => unreachable!(),
    }
}

/// Outcome of one detector on one spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub kind: DetectorKind,
    pub statistic: f64,
    pub threshold: f64,
    pub emitter_present: bool,
    pub target_pfa: f64,
}

impl Decision {
    pub fn new(kind: DetectorKind, statistic: f64, threshold: f64, target_pfa: f64) -> Self {
        Self {
            kind,
            statistic,
            threshold,
            emitter_present: statistic > threshold,
            target_pfa,
        }
    }
}

/// Empirically calibrated thresholds keyed by detector and target Pfa.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CalibrationTable {
    entries: Vec<CalibrationEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationEntry {
    pub kind: DetectorKind,
    pub pfa: f64,
    pub threshold: f64,
}

impl CalibrationTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, kind: DetectorKind, pfa: f64, threshold: f64) {
        match self
            .entries
            .iter_mut()
            .find(|e| e.kind == kind && same_pfa(e.pfa, pfa))
        {
            Some(entry) => entry.threshold = threshold,
            None => self.entries.push(CalibrationEntry {
                kind,
                pfa,
                threshold,
            }),
        }
    }

    pub fn get(&self, kind: DetectorKind, pfa: f64) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.kind == kind && same_pfa(e.pfa, pfa))
            .map(|e| e.threshold)
    }

    pub fn entries(&self) -> &[CalibrationEntry] {
        &self.entries
    }
}

fn same_pfa(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

/// Everything `decide` may need to produce a threshold.
#[derive(Debug, Clone, Default)]
pub struct ThresholdSource {
    pub tables: TwTables,
    pub calibration: CalibrationTable,
}

impl ThresholdSource {
    pub fn with_embedded_tables() -> Self {
        Self {
            tables: TwTables::embedded(),
            calibration: CalibrationTable::new(),
        }
    }
}

/// Computes the statistic and threshold for `kind` and compares them.
pub fn decide(
    kind: DetectorKind,
    spec: &EigenSpectrum,
    pfa: f64,
    policy: &ThresholdPolicy,
    source: &ThresholdSource,
) -> Result<Decision> {
    let stat = statistic(kind, spec)?;
    let threshold = match policy.mode {
        ThresholdMode::Analytic => {
            analytic_threshold(kind, pfa, spec.n(), spec.l(), spec, policy, &source.tables)?
        }
        ThresholdMode::EmpiricalCalibration => {
            source.calibration.get(kind, pfa).ok_or_else(|| {
                Error::Configuration(format!("no calibrated threshold for {kind} at Pfa {pfa}"))
            })?
        }
    };
    Ok(Decision::new(kind, stat, threshold, pfa))
}

/// Compares against an explicit threshold.
pub fn decide_with_threshold(
    kind: DetectorKind,
    spec: &EigenSpectrum,
    threshold: f64,
    target_pfa: f64,
) -> Result<Decision> {
    Ok(Decision::new(
        kind,
        statistic(kind, spec)?,
        threshold,
        target_pfa,
    ))
}
