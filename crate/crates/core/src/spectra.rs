//! Spectral quantities of samples: singular values, eigenvalues, the Girko
//! Hermitization, empirical Stieltjes transforms and distribution distances.

use std::f64::consts::PI;
use std::path::Path;

use faer::{Mat, MatRef, Side};
use num_complex::Complex64;

use crate::ensemble::{shifted, EntryDistribution, MatrixSample};
use crate::error::{Error, Result};
use crate::profile::ProfileKind;

fn as_real(y: MatRef<'_, Complex64>) -> Option<Mat<f64>> {
    let real = (0..y.ncols()).all(|j| (0..y.nrows()).all(|i| y[(i, j)].im == 0.0));
    real.then(|| Mat::from_fn(y.nrows(), y.ncols(), |i, j| y[(i, j)].re))
}

fn decomposition_error(y: MatRef<'_, Complex64>, e: impl std::fmt::Debug) -> Error {
    Error::Decomposition {
        rows: y.nrows(),
        cols: y.ncols(),
        reason: format!("{e:?}"),
    }
}

/// All singular values, ascending.
///
/// Real input takes the (faster) real SVD path.
pub fn singular_values(y: MatRef<'_, Complex64>) -> Result<Vec<f64>> {
    let mut s = match as_real(y) {
        Some(real) => real.singular_values().map_err(|e| decomposition_error(y, e))?,
        None => y.singular_values().map_err(|e| decomposition_error(y, e))?,
    };
    s.iter_mut().for_each(|v| *v = v.abs());
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// Eigenvalues of a general square matrix, unordered.
pub fn eigenvalues(x: MatRef<'_, Complex64>) -> Result<Vec<Complex64>> {
    if x.nrows() != x.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "eigenvalues need a square matrix, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    match as_real(x) {
        Some(real) => real.eigenvalues().map_err(|e| decomposition_error(x, e)),
        None => x.eigenvalues().map_err(|e| decomposition_error(x, e)),
    }
}

/// `[[0, Y], [Y*, 0]]`.
#[derive(Clone, Debug)]
pub struct HermitizedMatrix {
    pub matrix: Mat<Complex64>,
    pub z: Complex64,
}

pub fn hermitize(y: MatRef<'_, Complex64>, z: Complex64) -> HermitizedMatrix {
    let n = y.nrows();
    let zero = Complex64::new(0.0, 0.0);
    let matrix = Mat::from_fn(2 * n, 2 * n, |r, c| match (r < n, c < n) {
        (true, false) => y[(r, c - n)],
        (false, true) => y[(c, r - n)].conj(),
        _ => zero,
    });
    HermitizedMatrix { matrix, z }
}

impl HermitizedMatrix {
    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.matrix
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| decomposition_error(self.matrix.as_ref(), e))
    }

    /// Largest `|M_ij - conj(M_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let m = &self.matrix;
        let mut worst = 0.0_f64;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.matrix.nrows()).map(|i| self.matrix[(i, i)]).sum()
    }
}

/// `(1/n) Σ 1 / (σ_i² - iη)`, the normalized trace of `(Y*Y - iη)⁻¹`.
pub fn empirical_stieltjes(svals: &[f64], eta: f64) -> Complex64 {
    let w = Complex64::new(0.0, eta);
    let sum: Complex64 = svals.iter().map(|s| (s * s - w).inv()).sum();
    sum / svals.len() as f64
}

/// Singular values and right singular vectors of `Y`, enough to evaluate
/// `G(iη) = (Y*Y - iη)⁻¹ = V diag(1 / (σ² - iη)) V*` entrywise.
#[derive(Clone, Debug)]
pub struct GramResolvent {
    sigma: Vec<f64>,
    v: Mat<Complex64>,
}

impl GramResolvent {
    pub fn new(y: MatRef<'_, Complex64>) -> Result<Self> {
        let svd = y.svd().map_err(|e| decomposition_error(y, e))?;
        let s = svd.S().column_vector();
        let sigma = (0..s.nrows()).map(|k| s[k].re.abs()).collect();
        Ok(GramResolvent {
            sigma,
            v: svd.V().to_owned(),
        })
    }

    /// Ascending.
    pub fn singular_values(&self) -> Vec<f64> {
        sorted(&self.sigma)
    }

    pub fn entry(&self, i: usize, j: usize, eta: f64) -> Complex64 {
        let w = Complex64::new(0.0, eta);
        self.sigma
            .iter()
            .enumerate()
            .map(|(k, s)| self.v[(i, k)] * self.v[(j, k)].conj() / (s * s - w))
            .sum()
    }
}

/// Number of singular values in the closed interval `[0, threshold]`.
pub fn count_small_singulars(svals: &[f64], threshold: f64) -> usize {
    svals.iter().filter(|&&s| s <= threshold).count()
}

/// Smallest element of an ascending list.
pub fn least_singular(svals: &[f64]) -> Result<f64> {
    svals.first().copied().ok_or(Error::EmptyInput("singular values"))
}

/// `(1/n) Σ log σ_i`, i.e. `(1/n) log |det Y|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogDetAverage {
    /// `-inf` when `singular` is set.
    pub value: f64,
    pub singular: bool,
}

pub fn log_det_avg(svals: &[f64]) -> LogDetAverage {
    if svals.iter().any(|&s| !(s > 0.0)) {
        return LogDetAverage {
            value: f64::NEG_INFINITY,
            singular: true,
        };
    }
    let value = svals.iter().map(|s| s.ln()).sum::<f64>() / svals.len() as f64;
    LogDetAverage {
        value,
        singular: false,
    }
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    out.sort_by(f64::total_cmp);
    out
}

/// Exact sup distance between two empirical CDFs.
pub fn kolmogorov_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("kolmogorov_distance needs two nonempty samples"));
    }
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best = 0.0_f64;
    // both CDFs are right-continuous step functions; compare after each jump
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(best)
}

/// Exact sup distance between the empirical CDF of `values` and a continuous
/// CDF, using both one-sided limits at every jump.
pub fn kolmogorov_to_cdf(values: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("kolmogorov_to_cdf needs a nonempty sample"));
    }
    let v = sorted(values);
    let n = v.len() as f64;
    let mut best = 0.0_f64;
    let mut k = 0;
    while k < v.len() {
        let x = v[k];
        let before = k as f64 / n;
        while k < v.len() && v[k] == x {
            k += 1;
        }
        let after = k as f64 / n;
        let f = cdf(x);
        best = best.max((f - before).abs()).max((after - f).abs());
    }
    Ok(best)
}

/// Radial and angular Kolmogorov distances of an eigenvalue cloud to the
/// uniform law on the unit disk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircularLawDistance {
    /// Against `F(r) = min(r², 1)`.
    pub radial: f64,
    /// Against the uniform CDF of `arg λ` on `(-π, π]`.
    pub angular: f64,
}

pub fn circular_law_distance(eigs: &[Complex64]) -> Result<CircularLawDistance> {
    if eigs.is_empty() {
        return Err(Error::EmptyInput("circular_law_distance needs eigenvalues"));
    }
    let radii: Vec<f64> = eigs.iter().map(|l| l.norm()).collect();
    let angles: Vec<f64> = eigs
        .iter()
        .map(|l| {
            let a = l.arg();
            // arg maps the negative real axis to ±π; fold -π onto π
            if a == -PI {
                PI
            } else {
                a
            }
        })
        .collect();
    Ok(CircularLawDistance {
        radial: kolmogorov_to_cdf(&radii, |r| (r * r).min(1.0))?,
        angular: kolmogorov_to_cdf(&angles, |t| ((t + PI) / (2.0 * PI)).clamp(0.0, 1.0))?,
    })
}

/// Where a spectral summary came from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleSource {
    pub profile: ProfileKind,
    pub dist: EntryDistribution,
    pub seed: u64,
}

/// Singular values of `X - zI` and, optionally, eigenvalues of `X`.
#[derive(Clone, Debug)]
pub struct SpectralSummary {
    pub z: Complex64,
    pub singular_values: Vec<f64>,
    pub eigenvalues: Option<Vec<Complex64>>,
    pub source: SampleSource,
}

impl SpectralSummary {
    pub fn of(sample: &MatrixSample, z: Complex64, with_eigenvalues: bool) -> Result<Self> {
        let y = shifted(sample, z);
        let singular_values = singular_values(y.as_ref())?;
        let eigenvalues = if with_eigenvalues {
            Some(eigenvalues(sample.matrix.as_ref())?)
        } else {
            None
        };
        Ok(SpectralSummary {
            z,
            singular_values,
            eigenvalues,
            source: SampleSource {
                profile: sample.profile.kind(),
                dist: sample.dist,
                seed: sample.seed,
            },
        })
    }

    /// `index,sigma`.
    pub fn write_singular_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(["index", "sigma"]).map_err(|e| Error::csv(path, e))?;
        for (k, s) in self.singular_values.iter().enumerate() {
            w.write_record([k.to_string(), crate::fmt::float(*s)])
                .map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// `index,lambda_re,lambda_im`; no-op when eigenvalues were not computed.
    pub fn write_eigen_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let Some(eigs) = &self.eigenvalues else {
            return Ok(());
        };
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(["index", "lambda_re", "lambda_im"])
            .map_err(|e| Error::csv(path, e))?;
        for (k, l) in eigs.iter().enumerate() {
            w.write_record([k.to_string(), crate::fmt::float(l.re), crate::fmt::float(l.im)])
                .map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}
