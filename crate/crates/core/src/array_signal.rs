//! Uniform linear array model: steering vectors and synthetic snapshots.
//!
//! Noise is circularly symmetric complex Gaussian with unit variance per
//! antenna, so the SNR alone parameterizes the emitter hypothesis. The first
//! antenna is the phase reference, `a_0 = 1`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{bail, Result};

pub type C64 = Complex<f64>;

/// Geometry of a uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayConfig {
    n_antennas: usize,
    spacing_wavelengths: f64,
}

impl ArrayConfig {
    /// Half-wavelength spacing.
    pub const DEFAULT_SPACING: f64 = 0.5;

    pub fn new(n_antennas: usize, spacing_wavelengths: f64) -> Result<Self> {
        if n_antennas < 2 {
            bail!(
                Argument,
                "array needs at least 2 antennas, got {n_antennas}"
            );
        }
        if !(spacing_wavelengths.is_finite() && spacing_wavelengths > 0.0) {
            bail!(
                Argument,
                "antenna spacing must be positive, got {spacing_wavelengths}"
            );
        }
        Ok(Self {
            n_antennas,
            spacing_wavelengths,
        })
    }

    pub fn half_wavelength(n_antennas: usize) -> Result<Self> {
        Self::new(n_antennas, Self::DEFAULT_SPACING)
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    /// Element spacing in wavelengths (d/λ).
    pub fn spacing_wavelengths(&self) -> f64 {
        self.spacing_wavelengths
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    /// Noise only.
    H0,
    /// One emitter plus noise.
    H1,
}

/// Distribution of the emitter's baseband symbols. Both have unit power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignalModel {
    /// Circularly symmetric complex Gaussian.
    #[default]
    Gaussian,
    /// Equiprobable QPSK points on the unit circle.
    ConstantModulus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    pub snr_db: f64,
    /// Direction of arrival, measured from broadside.
    pub theta_rad: f64,
    pub n_snapshots: usize,
    pub hypothesis: Hypothesis,
    pub signal: SignalModel,
}

impl ScenarioConfig {
    pub fn new(snr_db: f64, theta_rad: f64, n_snapshots: usize, hypothesis: Hypothesis) -> Self {
        Self {
            snr_db,
            theta_rad,
            n_snapshots,
            hypothesis,
            signal: SignalModel::Gaussian,
        }
    }

    pub fn with_hypothesis(mut self, hypothesis: Hypothesis) -> Self {
        self.hypothesis = hypothesis;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_snapshots < 1 {
            bail!(Argument, "need at least one snapshot");
        }
        if !self.snr_db.is_finite() {
            bail!(Argument, "SNR must be finite, got {} dB", self.snr_db);
        }
        check_theta(self.theta_rad)
    }

    /// Linear SNR, `10^(snr_db / 10)`.
    pub fn snr_linear(&self) -> f64 {
        libm::pow(10.0, self.snr_db / 10.0)
    }
}

fn check_theta(theta_rad: f64) -> Result<()> {
    if !theta_rad.is_finite() {
        bail!(
            Argument,
            "direction of arrival must be finite, got {theta_rad}"
        );
    }
    if theta_rad <= -FRAC_PI_2 || theta_rad >= FRAC_PI_2 {
        bail!(
            Argument,
            "direction of arrival {theta_rad} rad is outside (-pi/2, pi/2)"
        );
    }
    Ok(())
}

/// Identifies an independent random stream: a campaign seed plus a trial index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// N x L complex receive samples, stored column-major (one column per snapshot).
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    n: usize,
    l: usize,
    data: Vec<C64>,
}

impl SnapshotMatrix {
    pub fn from_column_major(n: usize, l: usize, data: Vec<C64>) -> Result<Self> {
        if n == 0 || l == 0 {
            bail!(Argument, "snapshot matrix must be non-empty, got {n}x{l}");
        }
        if data.len() != n * l {
            bail!(
                Argument,
                "expected {} samples for a {n}x{l} matrix, got {}",
                n * l,
                data.len()
            );
        }
        if let Some(pos) = data
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            bail!(
                Argument,
                "non-finite sample at antenna {}, snapshot {}",
                pos % n,
                pos / n
            );
        }
        Ok(Self { n, l, data })
    }

    /// Number of antennas (rows).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of snapshots (columns).
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn column(&self, k: usize) -> &[C64] {
        &self.data[k * self.n..(k + 1) * self.n]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[C64]> {
        self.data.chunks_exact(self.n)
    }

    pub fn get(&self, antenna: usize, snapshot: usize) -> C64 {
        self.data[snapshot * self.n + antenna]
    }

    pub fn as_column_major(&self) -> &[C64] {
        &self.data
    }
}

/// Array manifold `a(θ)`: element m is `exp(j·2π·(d/λ)·m·sin θ)`.
pub fn steering_vector(theta_rad: f64, cfg: &ArrayConfig) -> Result<Vec<C64>> {
    check_theta(theta_rad)?;
    let step = 2.0 * PI * cfg.spacing_wavelengths * libm::sin(theta_rad);
    Ok((0..cfg.n_antennas)
        .map(|m| {
            let phase = step * m as f64;
            C64::new(libm::cos(phase), libm::sin(phase))
        })
        .collect())
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

fn qpsk<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let quadrant = rng.random_range(0..4u32);
    let phase = FRAC_PI_4 + FRAC_PI_2 * quadrant as f64;
    C64::new(libm::cos(phase), libm::sin(phase))
}

/// Draw an N x L snapshot matrix under the scenario's hypothesis.
///
/// The noise matrix is drawn first, column by column, and the emitter symbols
/// after it; an H1 draw therefore shares its noise with the H0 draw of the
/// same stream.
pub fn synth_snapshots(
    scenario: &ScenarioConfig,
    cfg: &ArrayConfig,
    stream: RngStream,
) -> Result<SnapshotMatrix> {
    scenario.validate()?;
    let (n, l) = (cfg.n_antennas, scenario.n_snapshots);
    let mut rng = stream.rng();
    let mut data = vec![C64::new(0.0, 0.0); n * l];
    for z in data.iter_mut() {
        *z = complex_gaussian(&mut rng);
    }
    if scenario.hypothesis == Hypothesis::H1 {
        let amplitude = libm::sqrt(scenario.snr_linear());
        let a = steering_vector(scenario.theta_rad, cfg)?;
        for column in data.chunks_exact_mut(n) {
            let s = match scenario.signal {
                SignalModel::Gaussian => complex_gaussian(&mut rng),
                SignalModel::ConstantModulus => qpsk(&mut rng),
            } * amplitude;
            for (y, am) in column.iter_mut().zip(&a) {
                *y += am * s;
            }
        }
    }
    SnapshotMatrix::from_column_major(n, l, data)
        .map_err(|e| crate::error::Error::Numeric(format!("synthesized matrix rejected: {e}")))
}
