//! Random-matrix limit laws used for CFAR thresholds.
//!
//! Marchenko-Pastur support edges, largest-eigenvalue centering and scaling
//! constants, and tabulated Tracy-Widom CDFs evaluated by monotone cubic
//! (PCHIP) interpolation. The shipped tables cover `t ∈ [-5, 4]` at a step of
//! 0.05; `tables/generate_tw_tables.py` regenerates them.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{bail, Error, Result};

/// Lowest probability accepted by [`TwTable::quantile`].
pub const MIN_COVERAGE: f64 = 0.001;
/// Highest probability accepted by [`TwTable::quantile`].
pub const MAX_COVERAGE: f64 = 0.999;

const TW1_TEXT: &str = include_str!("../tables/tw1.txt");
const TW2_TEXT: &str = include_str!("../tables/tw2.txt");

/// Marchenko-Pastur support `[a, b]` of the sample covariance of white
/// unit-variance data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpEdges {
    pub a: f64,
    pub b: f64,
}

/// `a = (√L − √N)² / L`, `b = (√L + √N)² / L`, defined for `1 <= N <= L`.
pub fn mp_edges(n: usize, l: usize) -> Result<MpEdges> {
    if n == 0 || l == 0 {
        bail!(
            Argument,
            "M-P edges need N >= 1 and L >= 1, got N={n}, L={l}"
        );
    }
    if n > l {
        bail!(Domain, "M-P edges are defined for N <= L, got N={n}, L={l}");
    }
    let (sn, sl) = (libm::sqrt(n as f64), libm::sqrt(l as f64));
    let lf = l as f64;
    Ok(MpEdges {
        a: (sl - sn) * (sl - sn) / lf,
        b: (sl + sn) * (sl + sn) / lf,
    })
}

/// Tracy-Widom order: 1 for real ensembles, 2 for complex ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TwOrder {
    One,
    Two,
}

impl TwOrder {
    pub fn as_u8(self) -> u8 {
        match self {
            TwOrder::One => 1,
            TwOrder::Two => 2,
        }
    }

    pub fn from_u8(order: u8) -> Result<Self> {
        match order {
            1 => Ok(TwOrder::One),
            2 => Ok(TwOrder::Two),
            other => bail!(Argument, "Tracy-Widom order must be 1 or 2, got {other}"),
        }
    }
}

/// Centering `mu` and scaling `nu` such that `(λmax − mu) / nu` is
/// approximately Tracy-Widom distributed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwConstants {
    pub mu: f64,
    pub nu: f64,
    pub order: TwOrder,
}

impl TwConstants {
    /// Maps a standardized Tracy-Widom abscissa back to the eigenvalue scale.
    pub fn eigenvalue_at(&self, t: f64) -> f64 {
        self.mu + t * self.nu
    }

    pub fn standardize(&self, lambda: f64) -> f64 {
        (lambda - self.mu) / self.nu
    }
}

/// Largest-eigenvalue constants for a covariance normalized by `1/L`.
///
/// Order 1 uses the real-data convention with `L − 1` degrees of freedom,
/// order 2 the complex-data convention with `L`.
pub fn tw_constants(n: usize, l: usize, order: TwOrder) -> Result<TwConstants> {
    if n < 2 || l < 2 {
        bail!(
            Argument,
            "Tracy-Widom constants need N >= 2 and L >= 2, got N={n}, L={l}"
        );
    }
    let dof = match order {
        TwOrder::One => (l - 1) as f64,
        TwOrder::Two => l as f64,
    };
    let (sd, sn) = (libm::sqrt(dof), libm::sqrt(n as f64));
    let lf = l as f64;
    Ok(TwConstants {
        mu: (sd + sn) * (sd + sn) / lf,
        nu: (sd + sn) * libm::cbrt(1.0 / sd + 1.0 / sn) / lf,
        order,
    })
}

/// Tabulated Tracy-Widom CDF with a shape-preserving cubic interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct TwTable {
    order: TwOrder,
    grid: Vec<f64>,
    cdf: Vec<f64>,
    slopes: Vec<f64>,
}

impl TwTable {
    pub fn from_points(order: TwOrder, grid: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        if grid.len() != cdf.len() {
            bail!(
                Configuration,
                "table has {} abscissae but {} CDF values",
                grid.len(),
                cdf.len()
            );
        }
        if grid.len() < 3 {
            bail!(
                Configuration,
                "table needs at least 3 points, got {}",
                grid.len()
            );
        }
        if grid.iter().chain(&cdf).any(|v| !v.is_finite()) {
            bail!(Configuration, "table contains non-finite values");
        }
        if cdf.iter().any(|p| !(0.0..=1.0).contains(p)) {
            bail!(Configuration, "table CDF values must lie in [0, 1]");
        }
        for i in 1..grid.len() {
            if grid[i] <= grid[i - 1] {
                bail!(Configuration, "table abscissae must ascend (row {i})");
            }
            if cdf[i] <= cdf[i - 1] {
                bail!(
                    Configuration,
                    "table CDF must be strictly increasing (row {i})"
                );
            }
        }
        if cdf[0] >= MIN_COVERAGE || cdf[cdf.len() - 1] <= MAX_COVERAGE {
            bail!(
                Configuration,
                "table must span CDF values below {MIN_COVERAGE} and above {MAX_COVERAGE}"
            );
        }
        let slopes = pchip_slopes(&grid, &cdf);
        Ok(Self {
            order,
            grid,
            cdf,
            slopes,
        })
    }

    /// Parses the two-column `t cdf` text format; `#` starts a comment.
    pub fn parse(text: &str, order: TwOrder) -> Result<Self> {
        let mut grid = Vec::new();
        let mut cdf = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let (Some(t), Some(p), None) = (fields.next(), fields.next(), fields.next()) else {
                bail!(Configuration, "line {}: expected two columns", lineno + 1);
            };
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| {
                    Error::Configuration(format!("line {}: bad number {s:?}", lineno + 1))
                })
            };
            grid.push(parse(t)?);
            cdf.push(parse(p)?);
        }
        Self::from_points(order, grid, cdf)
    }

    /// The table compiled into the crate.
    pub fn embedded(order: TwOrder) -> Self {
        let text = match order {
            TwOrder::One => TW1_TEXT,
            TwOrder::Two => TW2_TEXT,
        };
        Self::parse(text, order).expect("embedded Tracy-Widom table is valid")
    }

    pub fn order(&self) -> TwOrder {
        self.order
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf
    }

    /// Interpolated CDF; 0 below the grid and 1 above it.
    pub fn cdf(&self, t: f64) -> f64 {
        let last = self.grid.len() - 1;
        if t.is_nan() {
            return f64::NAN;
        }
        if t < self.grid[0] {
            return 0.0;
        }
        if t > self.grid[last] {
            return 1.0;
        }
        let k = match self.grid.binary_search_by(|g| g.total_cmp(&t)) {
            Ok(k) => return self.cdf[k],
            Err(k) => k - 1,
        };
        self.segment(k, t).clamp(0.0, 1.0)
    }

    /// Inverse CDF for `p` strictly inside the table's coverage.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        let last = self.cdf.len() - 1;
        if !(p > MIN_COVERAGE && p < MAX_COVERAGE) || p < self.cdf[0] || p > self.cdf[last] {
            bail!(
                Domain,
                "probability {p} outside Tracy-Widom table coverage ({MIN_COVERAGE}, {MAX_COVERAGE})"
            );
        }
        let k = match self.cdf.binary_search_by(|c| c.total_cmp(&p)) {
            Ok(k) => return Ok(self.grid[k]),
            Err(k) => k - 1,
        };
        // the Hermite segment is monotone, so bisection cannot leave the bracket
        let (mut lo, mut hi) = (self.grid[k], self.grid[k + 1]);
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if self.segment(k, mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn segment(&self, k: usize, t: f64) -> f64 {
        let h = self.grid[k + 1] - self.grid[k];
        let s = (t - self.grid[k]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.cdf[k]
            + h10 * h * self.slopes[k]
            + h01 * self.cdf[k + 1]
            + h11 * h * self.slopes[k + 1]
    }
}

/// Fritsch-Butland weighted harmonic slopes; endpoint slopes are the
/// adjacent secants.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = y
        .windows(2)
        .zip(&h)
        .map(|(w, h)| (w[1] - w[0]) / h)
        .collect();
    let mut d = Vec::with_capacity(n);
    d.push(delta[0]);
    for k in 1..n - 1 {
        let (a, b) = (delta[k - 1], delta[k]);
        if a * b <= 0.0 {
            d.push(0.0);
        } else {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d.push((w1 + w2) / (w1 / a + w2 / b));
        }
    }
    d.push(delta[n - 2]);
    d
}

/// A set of loaded tables, one slot per order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TwTables {
    one: Option<TwTable>,
    two: Option<TwTable>,
}

impl TwTables {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn embedded() -> Self {
        Self {
            one: Some(TwTable::embedded(TwOrder::One)),
            two: Some(TwTable::embedded(TwOrder::Two)),
        }
    }

    pub fn insert(&mut self, table: TwTable) {
        match table.order {
            TwOrder::One => self.one = Some(table),
            TwOrder::Two => self.two = Some(table),
        }
    }

    pub fn get(&self, order: TwOrder) -> Result<&TwTable> {
        let slot = match order {
            TwOrder::One => &self.one,
            TwOrder::Two => &self.two,
        };
        slot.as_ref().ok_or_else(|| {
            Error::Configuration(format!(
                "no Tracy-Widom table loaded for order {}",
                order.as_u8()
            ))
        })
    }

    pub fn cdf(&self, t: f64, order: TwOrder) -> Result<f64> {
        Ok(self.get(order)?.cdf(t))
    }

    pub fn quantile(&self, p: f64, order: TwOrder) -> Result<f64> {
        self.get(order)?.quantile(p)
    }
}

#[cfg(feature = "std")]
fn shared_tables() -> &'static TwTables {
    static TABLES: std::sync::OnceLock<TwTables> = std::sync::OnceLock::new();
    TABLES.get_or_init(TwTables::embedded)
}

/// Tracy-Widom CDF from the embedded tables.
#[cfg(feature = "std")]
pub fn tw_cdf(t: f64, order: TwOrder) -> f64 {
    shared_tables()
        .get(order)
        .map(|table| table.cdf(t))
        .unwrap_or(f64::NAN)
}

/// Tracy-Widom quantile from the embedded tables.
#[cfg(feature = "std")]
pub fn tw_quantile(p: f64, order: TwOrder) -> Result<f64> {
    shared_tables().quantile(p, order)
}

#[cfg(not(feature = "std"))]
pub fn tw_cdf(t: f64, order: TwOrder) -> f64 {
    TwTable::embedded(order).cdf(t)
}

#[cfg(not(feature = "std"))]
pub fn tw_quantile(p: f64, order: TwOrder) -> Result<f64> {
    TwTable::embedded(order).quantile(p)
}
