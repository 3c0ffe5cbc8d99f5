//! Sample covariance and its eigen-spectrum.
//!
//! Only eigenvalues are kept. The Hermitian matrix is reduced to a real
//! symmetric tridiagonal form with Householder reflections and the
//! eigenvalues are extracted with implicit-shift QL iterations. Products of
//! snapshot matrices go through nalgebra's real GEMM.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::array_signal::{SnapshotMatrix, C64};
use crate::error::{bail, Error, Result};

/// Absolute tolerance on `|r_ij - conj(r_ji)|`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues above `-PSD_TOL * trace` are clamped to zero; lower ones are rejected.
pub const PSD_TOL: f64 = 1e-10;

const MAX_QL_SWEEPS: usize = 60;

/// Square complex matrix that is conjugate-symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    entries: DMatrix<C64>,
}

impl HermitianMatrix {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            bail!(
                Argument,
                "expected a non-empty square matrix, got {}x{}",
                n,
                entries.ncols()
            );
        }
        for j in 0..n {
            for i in 0..=j {
                let d = entries[(i, j)] - entries[(j, i)].conj();
                let gap = libm::hypot(d.re, d.im);
                if !gap.is_finite() || gap > HERMITIAN_TOL {
                    bail!(
                        InvariantViolation,
                        "entry ({i}, {j}) breaks Hermitian symmetry by {gap:e}"
                    );
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re).sum()
    }
}

/// Eigenvalues of a sample covariance, sorted descending and clamped nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpectrum {
    values: Vec<f64>,
    trace: f64,
    l: usize,
}

impl EigenSpectrum {
    /// Builds a spectrum from raw eigenvalues (any order). `l` records the
    /// snapshot count that produced them.
    pub fn from_values(mut values: Vec<f64>, l: usize) -> Result<Self> {
        if values.is_empty() {
            bail!(Argument, "spectrum must contain at least one eigenvalue");
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            bail!(
                InvariantViolation,
                "eigenvalues must be finite and nonnegative"
            );
        }
        values.sort_unstable_by(|a, b| b.total_cmp(a));
        let trace = values.iter().sum();
        Ok(Self { values, trace, l })
    }

    /// Eigenvalues, largest first.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }

    pub fn min(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Multiplies every eigenvalue (and the trace) by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * c).collect(),
            trace: self.trace * c,
            l: self.l,
        }
    }
}

/// `(1/L) Σ_k y[k] y[k]^H`, symmetrized so the result is exactly Hermitian.
pub fn sample_covariance(y: &SnapshotMatrix) -> Result<HermitianMatrix> {
    if y.l() == 0 {
        bail!(Argument, "sample covariance needs at least one snapshot");
    }
    let (n, l) = (y.n(), y.l());
    // with Y = A + jB: Re(YY^H) = [A B][A B]^T, Im(YY^H) = [B -A][A B]^T
    let p = DMatrix::from_fn(n, 2 * l, |m, k| {
        let z = y.get(m, k % l);
        if k < l {
            z.re
        } else {
            z.im
        }
    });
    let q = DMatrix::from_fn(n, 2 * l, |m, k| {
        let z = y.get(m, k % l);
        if k < l {
            z.im
        } else {
            -z.re
        }
    });
    let re = &p * p.transpose();
    let im = &q * p.transpose();
    Ok(HermitianMatrix {
        entries: hermitian_from_parts(&re, &im, 1.0 / l as f64),
    })
}

/// Averages each entry with the conjugate of its mirror image.
fn hermitian_from_parts(re: &DMatrix<f64>, im: &DMatrix<f64>, scale: f64) -> DMatrix<C64> {
    let n = re.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(re[(i, i)] * scale, 0.0)
        } else {
            let r = 0.5 * (re[(i, j)] + re[(j, i)]);
            let m = 0.5 * (im[(i, j)] - im[(j, i)]);
            C64::new(r * scale, m * scale)
        }
    })
}

/// Sorted, clamped eigenvalues of a Hermitian positive semidefinite matrix.
pub fn eigen_spectrum(r: &HermitianMatrix) -> Result<EigenSpectrum> {
    spectrum_of(r.entries.clone(), r.trace(), 0, 0)
}

/// Eigen-spectrum tagged with the snapshot count `l` that produced `r`.
pub fn eigen_spectrum_with_snapshots(r: &HermitianMatrix, l: usize) -> Result<EigenSpectrum> {
    spectrum_of(r.entries.clone(), r.trace(), 0, l)
}

/// Eigen-spectrum of the sample covariance of `y`.
///
/// When there are fewer snapshots than antennas the nonzero eigenvalues are
/// taken from the L x L Gram matrix `(1/L) Y^H Y`, and `N - L` exact zeros
/// are appended.
pub fn snapshot_spectrum(y: &SnapshotMatrix) -> Result<EigenSpectrum> {
    let (n, l) = (y.n(), y.l());
    if n <= l {
        let r = sample_covariance(y)?;
        return eigen_spectrum_with_snapshots(&r, l);
    }
    // Y^H Y with Y = A + jB: Re = [A; B]^T [A; B], Im = [-B; A]^T [A; B]
    let p = DMatrix::from_fn(2 * n, l, |m, k| {
        let z = y.get(m % n, k);
        if m < n {
            z.re
        } else {
            z.im
        }
    });
    let q = DMatrix::from_fn(2 * n, l, |m, k| {
        let z = y.get(m % n, k);
        if m < n {
            -z.im
        } else {
            z.re
        }
    });
    let pt = p.transpose();
    let re = &pt * &p;
    let im = q.transpose() * &p;
    let gram = hermitian_from_parts(&re, &im, 1.0 / l as f64);
    let trace = gram.diagonal().iter().map(|z| z.re).sum();
    spectrum_of(gram, trace, n - l, l)
}

fn spectrum_of(m: DMatrix<C64>, trace: f64, extra_zeros: usize, l: usize) -> Result<EigenSpectrum> {
    let n = m.nrows();
    let (diag, off) = if n == 1 {
        (vec![m[(0, 0)].re], Vec::new())
    } else {
        hermitian_tridiagonal(&m)
    };
    let mut values = tridiagonal_eigenvalues(diag, off)?;
    let floor = -PSD_TOL * trace.abs();
    for v in values.iter_mut() {
        if !v.is_finite() {
            bail!(Numeric, "eigensolver produced a non-finite eigenvalue");
        }
        if *v < floor {
            bail!(
                InvariantViolation,
                "eigenvalue {v:e} is below the PSD tolerance {floor:e}"
            );
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    values.extend(core::iter::repeat_n(0.0, extra_zeros));
    values.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(EigenSpectrum { values, trace, l })
}

/// Householder reduction of a Hermitian matrix to real symmetric tridiagonal
/// form, returning the diagonal and the (real, nonnegative up to sign)
/// sub-diagonal. Works on split real/imaginary column-major storage.
fn hermitian_tridiagonal(m: &DMatrix<C64>) -> (Vec<f64>, Vec<f64>) {
    let n = m.nrows();
    let mut re: Vec<f64> = m.iter().map(|z| z.re).collect();
    let mut im: Vec<f64> = m.iter().map(|z| z.im).collect();
    let mut off = Vec::with_capacity(n - 1);
    let (mut vr, mut vi) = (vec![0.0; n], vec![0.0; n]);
    let (mut wr, mut wi) = (vec![0.0; n], vec![0.0; n]);

    for k in 0..n - 1 {
        let start = k + 1;
        let len = n - start;
        let col = k * n;
        let (ar, ai) = (re[col + start], im[col + start]);
        let tail: f64 = (start + 1..n)
            .map(|i| re[col + i] * re[col + i] + im[col + i] * im[col + i])
            .sum();
        if tail == 0.0 && ai == 0.0 {
            off.push(ar);
            continue;
        }
        // reflector H = I - tau v v^H with v[0] = 1 and H^H x = beta e1
        let beta = -libm::copysign(libm::sqrt(ar * ar + ai * ai + tail), ar);
        let (tau_r, tau_i) = ((beta - ar) / beta, -ai / beta);
        let (dr, di) = (ar - beta, ai);
        let dd = dr * dr + di * di;
        let (sr, si) = (dr / dd, -di / dd);
        let (vr, vi) = (&mut vr[..len], &mut vi[..len]);
        vr[0] = 1.0;
        vi[0] = 0.0;
        for i in 1..len {
            let (xr, xi) = (re[col + start + i], im[col + start + i]);
            vr[i] = xr * sr - xi * si;
            vi[i] = xr * si + xi * sr;
        }
        off.push(beta);

        // w = tau B v over the trailing block B
        let (wr, wi) = (&mut wr[..len], &mut wi[..len]);
        wr.fill(0.0);
        wi.fill(0.0);
        for j in 0..len {
            let c = (start + j) * n + start;
            let (br, bi) = (&re[c..c + len], &im[c..c + len]);
            let (xr, xi) = (vr[j], vi[j]);
            for i in 0..len {
                wr[i] += br[i] * xr - bi[i] * xi;
                wi[i] += br[i] * xi + bi[i] * xr;
            }
        }
        for i in 0..len {
            let (pr, pi) = (wr[i], wi[i]);
            wr[i] = tau_r * pr - tau_i * pi;
            wi[i] = tau_r * pi + tau_i * pr;
        }
        // w += alpha v with alpha = -tau (w^H v) / 2
        let (mut hr, mut hi) = (0.0, 0.0);
        for i in 0..len {
            hr += wr[i] * vr[i] + wi[i] * vi[i];
            hi += wr[i] * vi[i] - wi[i] * vr[i];
        }
        let (alr, ali) = (
            -0.5 * (tau_r * hr - tau_i * hi),
            -0.5 * (tau_r * hi + tau_i * hr),
        );
        for i in 0..len {
            let (xr, xi) = (vr[i], vi[i]);
            wr[i] += alr * xr - ali * xi;
            wi[i] += alr * xi + ali * xr;
        }
        // B -= v w^H + w v^H
        for j in 0..len {
            let c = (start + j) * n + start;
            let (br, bi) = (&mut re[c..c + len], &mut im[c..c + len]);
            let (cwr, cwi) = (wr[j], -wi[j]);
            let (cvr, cvi) = (vr[j], -vi[j]);
            for i in 0..len {
                br[i] -= vr[i] * cwr - vi[i] * cwi + wr[i] * cvr - wi[i] * cvi;
                bi[i] -= vr[i] * cwi + vi[i] * cwr + wr[i] * cvi + wi[i] * cvr;
            }
        }
    }
    let diag = (0..n).map(|k| re[k * n + k]).collect();
    (diag, off)
}

/// Eigenvalues of the real symmetric tridiagonal matrix with diagonal `d`
/// and sub-diagonal `e` (implicit QL with Wilkinson shifts).
fn tridiagonal_eigenvalues(mut d: Vec<f64>, e: Vec<f64>) -> Result<Vec<f64>> {
    let n = d.len();
    let mut e = {
        let mut padded = e;
        padded.resize(n, 0.0);
        padded
    };
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(Error::Numeric(alloc::format!(
                    "QL iteration did not converge for eigenvalue {l} of {n}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = libm::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + libm::copysign(r, g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = libm::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}

/// Noise variance estimate from all but the largest eigenvalue,
/// `(trace - λmax) / (N - 1)`.
pub fn noise_variance_estimate(spec: &EigenSpectrum) -> Result<f64> {
    let n = spec.n();
    if n < 2 {
        bail!(Argument, "noise variance estimate needs N >= 2, got {n}");
    }
    let rest: f64 = spec.values[1..].iter().sum();
    Ok(rest / (n - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array_signal::{
        synth_snapshots, ArrayConfig, Hypothesis, RngStream, ScenarioConfig,
    };

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn spectrum(values: &[f64]) -> EigenSpectrum {
        EigenSpectrum::from_values(values.to_vec(), 0).unwrap()
    }

    #[test]
    fn single_snapshot_outer_product() {
        let y = SnapshotMatrix::from_column_major(2, 1, vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let r = sample_covariance(&y).unwrap();
        let e = r.entries();
        assert_eq!(e[(0, 0)], c(1.0, 0.0));
        assert_eq!(e[(0, 1)], c(0.0, -1.0));
        assert_eq!(e[(1, 0)], c(0.0, 1.0));
        assert_eq!(e[(1, 1)], c(1.0, 0.0));
    }

    #[test]
    fn zero_and_identity_snapshots() {
        let zero = SnapshotMatrix::from_column_major(3, 4, vec![c(0.0, 0.0); 12]).unwrap();
        assert!(sample_covariance(&zero)
            .unwrap()
            .entries()
            .iter()
            .all(|z| *z == c(0.0, 0.0)));

        let y = SnapshotMatrix::from_column_major(
            2,
            2,
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        let r = sample_covariance(&y).unwrap();
        assert_eq!(*r.entries(), DMatrix::identity(2, 2) * c(0.5, 0.0));
    }

    #[test]
    fn small_spectra() {
        let diag =
            HermitianMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                c(1.0, 0.0),
                c(2.0, 0.0),
            ])))
            .unwrap();
        assert_eq!(eigen_spectrum(&diag).unwrap().values(), &[2.0, 1.0]);

        let eye = HermitianMatrix::new(DMatrix::identity(5, 5)).unwrap();
        for v in eigen_spectrum(&eye).unwrap().values() {
            assert!((v - 1.0).abs() < 1e-14);
        }

        let ones = HermitianMatrix::new(DMatrix::from_element(2, 2, c(1.0, 0.0))).unwrap();
        let s = eigen_spectrum(&ones).unwrap();
        assert!((s.values()[0] - 2.0).abs() < 1e-14);
        assert!(s.values()[1].abs() < 1e-14 && s.values()[1] >= 0.0);
    }

    #[test]
    fn rejects_non_hermitian_and_indefinite() {
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = c(1.0, 1.0);
        m[(1, 0)] = c(1.0, 1.0);
        assert!(matches!(
            HermitianMatrix::new(m),
            Err(Error::InvariantViolation(_))
        ));

        let indefinite =
            HermitianMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                c(1.0, 0.0),
                c(-0.5, 0.0),
            ])))
            .unwrap();
        assert!(matches!(
            eigen_spectrum(&indefinite),
            Err(Error::InvariantViolation(_))
        ));
    }

    #[test]
    fn noise_variance_examples() {
        assert_eq!(
            noise_variance_estimate(&spectrum(&[5.0, 1.0, 1.0, 1.0])).unwrap(),
            1.0
        );
        assert_eq!(noise_variance_estimate(&spectrum(&[3.5; 6])).unwrap(), 3.5);
        assert_eq!(
            noise_variance_estimate(&spectrum(&[6.0, 2.0, 2.0, 2.0, 2.0])).unwrap(),
            2.0
        );
        assert!(noise_variance_estimate(&spectrum(&[1.0])).is_err());
    }

    #[test]
    fn matches_reference_eigensolver() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for n in [2usize, 3, 5, 17, 40] {
            let a = DMatrix::from_fn(n, n, |_, _| {
                c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            let h = &a * a.adjoint();
            let reference = nalgebra::SymmetricEigen::new(h.clone()).eigenvalues;
            let mut expected: Vec<f64> = reference.iter().map(|v| v.max(0.0)).collect();
            expected.sort_unstable_by(|x, y| y.total_cmp(x));
            let got = eigen_spectrum(&HermitianMatrix::new(h).unwrap()).unwrap();
            for (g, e) in got.values().iter().zip(&expected) {
                assert!((g - e).abs() < 1e-10 * got.trace(), "n={n}: {g} vs {e}");
            }
        }
    }

    #[test]
    fn gram_route_matches_covariance_route() {
        let cfg = ArrayConfig::half_wavelength(12).unwrap();
        let sc = ScenarioConfig::new(-3.0, 0.4, 5, Hypothesis::H1);
        let y = synth_snapshots(&sc, &cfg, RngStream::new(8, 1)).unwrap();
        let direct = eigen_spectrum(&sample_covariance(&y).unwrap()).unwrap();
        let gram = snapshot_spectrum(&y).unwrap();
        assert_eq!(gram.n(), 12);
        assert_eq!(gram.l(), 5);
        for (a, b) in direct.values().iter().zip(gram.values()) {
            assert!((a - b).abs() < 1e-12 * direct.trace(), "{a} vs {b}");
        }
        assert!(gram.values()[5..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn whitened_ratio_concentrates_with_many_snapshots() {
        let cfg = ArrayConfig::half_wavelength(4).unwrap();
        let sc = ScenarioConfig::new(0.0, 0.0, 100_000, Hypothesis::H0);
        let y = synth_snapshots(&sc, &cfg, RngStream::new(21, 0)).unwrap();
        let s = snapshot_spectrum(&y).unwrap();
        assert!(s.max() / s.min() < 1.2, "{:?}", s.values());
    }

    #[test]
    fn h1_covariance_converges_to_rank_one_plus_identity() {
        let cfg = ArrayConfig::half_wavelength(4).unwrap();
        let sc = ScenarioConfig::new(0.0, core::f64::consts::PI / 6.0, 200_000, Hypothesis::H1);
        let y = synth_snapshots(&sc, &cfg, RngStream::new(2, 2)).unwrap();
        let r = sample_covariance(&y).unwrap();
        let a = crate::array_signal::steering_vector(sc.theta_rad, &cfg).unwrap();
        let snr = sc.snr_linear();
        let l = sc.n_snapshots as f64;
        for i in 0..4 {
            for j in 0..4 {
                let ident = if i == j { 1.0 } else { 0.0 };
                let expected = a[i] * a[j].conj() * snr + c(ident, 0.0);
                // E|y_i y_j*|^2 = R_ii R_jj for complex Gaussian data
                let se = libm::sqrt((1.0 + snr) * (1.0 + snr) / l);
                let gap = (r.entries()[(i, j)] - expected).norm();
                assert!(gap < 5.0 * se, "({i},{j}) gap {gap} se {se}");
            }
        }
    }

    #[test]
    fn h0_off_diagonals_vanish() {
        let cfg = ArrayConfig::half_wavelength(6).unwrap();
        let sc = ScenarioConfig::new(0.0, 0.0, 100_000, Hypothesis::H0);
        let y = synth_snapshots(&sc, &cfg, RngStream::new(4, 4)).unwrap();
        let r = sample_covariance(&y).unwrap();
        let se = 1.0 / libm::sqrt(100_000.0);
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    assert!(r.entries()[(i, j)].norm() < 5.0 * se);
                }
            }
        }
    }
}
