//! Variance profiles `S = (b_ij^2)` and the inverse-norm stability condition.
//!
//! A profile is doubly stochastic, nonnegative, and bounded entrywise by
//! `cw / w`. Three structural kinds are supported: the cyclic block band
//! profile, symmetric circulant profiles generated from a profile function,
//! and explicit dense profiles (loaded from CSV, for instance).
//!
//! The stability condition concerns the `L∞ → L∞` norm of
//!
//! ```text
//! ( I_2n - [[y2 S, y1 Sᵀ], [y1 S, y2 Sᵀ]] )^-1
//! ```
//!
//! for `(y1, y2)` near `(|z|² - 1, -|z|²)`. It can always be evaluated by dense
//! inversion; circulant profiles have an exact Fourier fast path and block band
//! profiles a cheap upper bound obtained by reducing to the block-level matrix.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, MatRef};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Tolerance on row and column sums for a profile to count as doubly stochastic.
pub const STOCHASTIC_TOL: f64 = 1e-10;

/// Default radius of the `(y1, y2)` probe disks.
pub const DEFAULT_SCAN_RADIUS: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    BlockBand,
    Circulant,
    Explicit,
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProfileKind::BlockBand => "block_band",
            ProfileKind::Circulant => "circulant",
            ProfileKind::Explicit => "explicit",
        })
    }
}

#[derive(Clone, Debug)]
enum Storage {
    /// Entries follow from `n` and `w`.
    BlockBand,
    /// First row; `S_ij = row[(j - i) mod n]`.
    Circulant(Vec<f64>),
    /// Row-major `n × n`.
    Dense(Vec<f64>),
}

/// A variance profile `S` with its bandwidth metadata.
#[derive(Clone, Debug)]
pub struct VarianceProfile {
    n: usize,
    w: usize,
    cw: f64,
    storage: Storage,
}

/// The function `f` generating a circulant profile through
/// `S_ab ∝ f(|a - b|_n / w) / w`.
#[derive(Clone)]
pub struct ProfileFunction {
    evaluator: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// `None` when the support is unbounded.
    pub support_radius: Option<f64>,
    pub description: String,
}

impl fmt::Debug for ProfileFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProfileFunction")
            .field("support_radius", &self.support_radius)
            .field("description", &self.description)
            .finish()
    }
}

impl ProfileFunction {
    pub fn new(
        description: impl Into<String>,
        support_radius: Option<f64>,
        evaluator: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ProfileFunction {
            evaluator: Arc::new(evaluator),
            support_radius,
            description: description.into(),
        }
    }

    /// Indicator of `[0, 1]`, giving the periodic band with `2w + 1` diagonals.
    pub fn indicator() -> Self {
        Self::new("indicator", Some(1.0), |x| {
            if (0.0..=1.0).contains(&x) {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Standard normal density.
    pub fn gauss() -> Self {
        Self::new("gauss", None, |x| {
            (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
        })
    }

    /// The identically zero function, useful only to exercise error paths.
    pub fn zero() -> Self {
        Self::new("zero", Some(0.0), |_| 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.evaluator)(x)
    }
}

/// Cyclic distance `min(d, n - d)` between two indices mod `n`.
pub fn graph_distance(i: usize, j: usize, n: usize) -> usize {
    let d = i.abs_diff(j) % n;
    d.min(n - d)
}

/// Cyclic block tridiagonal profile with `n / w` blocks of size `w`.
///
/// `S_ij = 1 / (3w)` when the blocks of `i` and `j` are equal or adjacent
/// modulo the number of blocks, and zero otherwise.
pub fn build_block_band(n: usize, w: usize) -> Result<VarianceProfile> {
    if w == 0 || n == 0 || n % w != 0 {
        return Err(Error::DimensionMismatch(format!(
            "block band needs w | n (n = {n}, w = {w})"
        )));
    }
    if n / w < 3 {
        return Err(Error::DimensionMismatch(format!(
            "block band needs at least 3 blocks (n / w = {})",
            n / w
        )));
    }
    Ok(VarianceProfile {
        n,
        w,
        cw: 1.0 / 3.0,
        storage: Storage::BlockBand,
    })
}

/// Symmetric circulant profile from `f`, rescaled so rows sum to exactly one.
pub fn build_circulant(n: usize, w: usize, f: &ProfileFunction) -> Result<VarianceProfile> {
    if w == 0 || n < 2 * w {
        return Err(Error::DimensionMismatch(format!(
            "circulant profile needs n >= 2w >= 2 (n = {n}, w = {w})"
        )));
    }
    let wf = w as f64;
    let mut row = Vec::with_capacity(n);
    for b in 0..n {
        let d = b.min(n - b) as f64;
        let v = f.eval(d / wf) / wf;
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidEntry {
                row: 0,
                col: b,
                value: v,
            });
        }
        row.push(v);
    }
    let mass: f64 = row.iter().sum();
    if mass <= 0.0 {
        return Err(Error::DegenerateProfile(format!(
            "profile function '{}' vanishes on the lattice",
            f.description
        )));
    }
    row.iter_mut().for_each(|v| *v /= mass);
    let max = row.iter().copied().fold(0.0, f64::max);
    Ok(VarianceProfile {
        n,
        w,
        cw: max * wf,
        storage: Storage::Circulant(row),
    })
}

impl VarianceProfile {
    /// Explicit profile from row-major entries. Only shape and nonnegativity are
    /// enforced here; use [`validate`] for the remaining invariants.
    pub fn explicit(n: usize, w: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 || w == 0 || w > n {
            return Err(Error::DimensionMismatch(format!(
                "explicit profile needs 1 <= w <= n (n = {n}, w = {w})"
            )));
        }
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        if let Some(k) = entries.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidEntry {
                row: k / n,
                col: k % n,
                value: entries[k],
            });
        }
        let max = entries.iter().copied().fold(0.0, f64::max);
        Ok(VarianceProfile {
            n,
            w,
            cw: max * w as f64,
            storage: Storage::Dense(entries),
        })
    }

    /// Loads an explicit profile from a headerless CSV of `n` rows of `n`
    /// comma-separated nonnegative numbers.
    pub fn load_csv(path: impl AsRef<Path>, w: usize) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::csv(path, e))?;
        let mut entries = Vec::new();
        let mut rows = 0;
        for record in reader.records() {
            let record = record.map_err(|e| Error::csv(path, e))?;
            for field in record.iter() {
                let v: f64 = field.parse().map_err(|_| Error::Format {
                    path: path.to_path_buf(),
                    reason: format!("row {rows}: cannot parse '{field}' as a number"),
                })?;
                entries.push(v);
            }
            rows += 1;
        }
        if rows * rows != entries.len() {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: format!("{rows} rows with {} entries is not square", entries.len()),
            });
        }
        Self::explicit(rows, w, entries)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn w(&self) -> usize {
        self.w
    }

    /// The bandwidth constant, `(max S_ij) · w`.
    pub fn cw(&self) -> f64 {
        self.cw
    }

    pub fn kind(&self) -> ProfileKind {
        match self.storage {
            Storage::BlockBand => ProfileKind::BlockBand,
            Storage::Circulant(_) => ProfileKind::Circulant,
            Storage::Dense(_) => ProfileKind::Explicit,
        }
    }

    /// Number of blocks of a block band profile.
    pub fn blocks(&self) -> Option<usize> {
        matches!(self.storage, Storage::BlockBand).then(|| self.n / self.w)
    }

    /// First row of a circulant profile.
    pub fn circulant_row(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::Circulant(row) => Some(row),
            _ => None,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::BlockBand => {
                let blocks = self.n / self.w;
                if graph_distance(i / self.w, j / self.w, blocks) <= 1 {
                    1.0 / (3.0 * self.w as f64)
                } else {
                    0.0
                }
            }
            Storage::Circulant(row) => row[(j + self.n - i) % self.n],
            Storage::Dense(entries) => entries[i * self.n + j],
        }
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.n).map(|j| self.get(i, j)).collect()
    }

    pub fn to_dense(&self) -> Mat<f64> {
        Mat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

/// One named diagnostic from [`validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub measured: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Measures every profile invariant. Never fails.
///
/// The `diagonal_band_mass` check is informational: it reports the largest `c`
/// with `S_ij >= c / w` whenever `|i - j|_n <= c·w`, and always passes.
pub fn validate(p: &VarianceProfile) -> ValidationReport {
    let n = p.n;
    let mut min_entry = f64::INFINITY;
    let mut max_entry = 0.0_f64;
    let mut row_defect = 0.0_f64;
    let mut col_sums = vec![0.0; n];
    for i in 0..n {
        let mut row_sum = 0.0;
        for (j, col) in col_sums.iter_mut().enumerate() {
            let v = p.get(i, j);
            min_entry = min_entry.min(v);
            max_entry = max_entry.max(v);
            row_sum += v;
            *col += v;
        }
        row_defect = row_defect.max((row_sum - 1.0).abs());
    }
    let col_defect = col_sums
        .iter()
        .map(|s| (s - 1.0).abs())
        .fold(0.0, f64::max);
    let ratio = max_entry * p.w as f64;

    let mut checks = vec![
        Check {
            name: "nonnegativity",
            passed: min_entry >= 0.0,
            measured: min_entry,
        },
        Check {
            name: "row_sums",
            passed: row_defect <= STOCHASTIC_TOL,
            measured: row_defect,
        },
        Check {
            name: "column_sums",
            passed: col_defect <= STOCHASTIC_TOL,
            measured: col_defect,
        },
        Check {
            name: "max_entry_ratio",
            passed: ratio <= p.cw * (1.0 + 1e-12),
            measured: ratio,
        },
    ];

    match p.kind() {
        ProfileKind::Circulant => {
            let row = p.circulant_row().expect("circulant storage");
            let asym = (0..n)
                .map(|x| (row[x] - row[(n - x) % n]).abs())
                .fold(0.0, f64::max);
            checks.push(Check {
                name: "circulant_symmetry",
                passed: asym <= STOCHASTIC_TOL,
                measured: asym,
            });
        }
        ProfileKind::BlockBand => {
            let blocks = n / p.w;
            let expected = 1.0 / (3.0 * p.w as f64);
            let mut dev = 0.0_f64;
            for i in 0..n {
                for j in 0..n {
                    let target = if graph_distance(i / p.w, j / p.w, blocks) <= 1 {
                        expected
                    } else {
                        0.0
                    };
                    dev = dev.max((p.get(i, j) - target).abs());
                }
            }
            checks.push(Check {
                name: "block_pattern",
                passed: dev == 0.0 && blocks >= 3,
                measured: dev,
            });
        }
        ProfileKind::Explicit => {}
    }

    checks.push(Check {
        name: "diagonal_band_mass",
        passed: true,
        measured: diagonal_band_mass(p),
    });

    ValidationReport { checks }
}

/// Largest `c` with `S_ij >= c / w` for all `|i - j|_n <= c·w` (a supremum).
pub fn diagonal_band_mass(p: &VarianceProfile) -> f64 {
    let n = p.n;
    let wf = p.w as f64;
    let max_d = n / 2;
    // min over pairs at each graph distance, scaled by w
    let mut by_distance = vec![f64::INFINITY; max_d + 1];
    for i in 0..n {
        for j in 0..n {
            let d = graph_distance(i, j, n);
            by_distance[d] = by_distance[d].min(p.get(i, j) * wf);
        }
    }
    let mut best = 0.0_f64;
    let mut prefix = f64::INFINITY;
    for (k, m) in by_distance.iter().enumerate() {
        prefix = prefix.min(*m);
        // c in [k/w, (k+1)/w) is feasible iff c <= prefix
        let lo = k as f64 / wf;
        if prefix < lo {
            break;
        }
        let hi = if k == max_d {
            f64::INFINITY
        } else {
            (k + 1) as f64 / wf
        };
        best = best.max(prefix.min(hi));
    }
    best
}

/// How a norm was evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    Dense,
    CirculantFast,
    /// An upper bound, not the exact norm.
    BlockFast,
}

impl NormMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            NormMethod::Dense => "dense",
            NormMethod::CirculantFast => "circulant_fast",
            NormMethod::BlockFast => "block_fast",
        }
    }

    /// Whether values produced by this method are upper bounds rather than
    /// exact norms.
    pub fn is_upper_bound(&self) -> bool {
        matches!(self, NormMethod::BlockFast)
    }

    /// Fastest method applicable to a profile kind.
    pub fn fastest_for(kind: ProfileKind) -> Self {
        match kind {
            ProfileKind::Circulant => NormMethod::CirculantFast,
            ProfileKind::BlockBand => NormMethod::BlockFast,
            ProfileKind::Explicit => NormMethod::Dense,
        }
    }
}

impl fmt::Display for NormMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Numerical guards for the norm computations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormSettings {
    /// Largest accepted `‖A‖∞ ‖A⁻¹‖∞` for dense inversion.
    pub cond_cap: f64,
    /// Smallest accepted `min_p |1 - y Ŝ(p)|` on the circulant path.
    pub spectrum_margin: f64,
}

impl Default for NormSettings {
    fn default() -> Self {
        NormSettings {
            cond_cap: 1e12,
            spectrum_margin: 1e-8,
        }
    }
}

/// Maximum absolute row sum, the `L∞ → L∞` operator norm.
pub fn linf_norm<T>(m: MatRef<'_, T>) -> f64
where
    T: Copy + Into<Complex64>,
{
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].into().norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn checked_inverse(a: &Mat<Complex64>, cap: f64, what: &str) -> Result<Mat<Complex64>> {
    let inv = a.partial_piv_lu().inverse();
    let inv_norm = linf_norm(inv.as_ref());
    let cond = linf_norm(a.as_ref()) * inv_norm;
    if !cond.is_finite() || cond > cap {
        return Err(Error::SingularOperator(format!(
            "{what}: condition estimate {cond:e} exceeds cap {cap:e}"
        )));
    }
    Ok(inv)
}

/// `‖(I_2n - [[y2 S, y1 Sᵀ], [y1 S, y2 Sᵀ]])⁻¹‖∞` by dense inversion.
pub fn inverse_norm_dense(p: &VarianceProfile, y1: Complex64, y2: Complex64) -> Result<f64> {
    inverse_norm_dense_with(p, y1, y2, &NormSettings::default())
}

pub fn inverse_norm_dense_with(
    p: &VarianceProfile,
    y1: Complex64,
    y2: Complex64,
    settings: &NormSettings,
) -> Result<f64> {
    let n = p.n;
    let s = p.to_dense();
    let a = Mat::<Complex64>::from_fn(2 * n, 2 * n, |r, c| {
        let (bi, i) = (r / n, r % n);
        let (bj, j) = (c / n, c % n);
        // blocks: [[y2 S, y1 Sᵀ], [y1 S, y2 Sᵀ]]
        let v = match (bi, bj) {
            (0, 0) => y2 * s[(i, j)],
            (0, 1) => y1 * s[(j, i)],
            (1, 0) => y1 * s[(i, j)],
            _ => y2 * s[(j, i)],
        };
        let id = if r == c { 1.0 } else { 0.0 };
        Complex64::new(id, 0.0) - v
    });
    let inv = checked_inverse(&a, settings.cond_cap, "2n block operator")?;
    Ok(linf_norm(inv.as_ref()))
}

/// `‖(I - yS)⁻¹‖∞` by dense inversion.
pub fn resolvent_norm_dense(p: &VarianceProfile, y: Complex64) -> Result<f64> {
    resolvent_norm_dense_with(p, y, &NormSettings::default())
}

pub fn resolvent_norm_dense_with(
    p: &VarianceProfile,
    y: Complex64,
    settings: &NormSettings,
) -> Result<f64> {
    let s = p.to_dense();
    let a = Mat::<Complex64>::from_fn(p.n, p.n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        Complex64::new(id, 0.0) - y * s[(i, j)]
    });
    let inv = checked_inverse(&a, settings.cond_cap, "I - yS")?;
    Ok(linf_norm(inv.as_ref()))
}

/// Discrete Fourier transform `Ŝ(p) = Σ_x S_0x e^{-ipx}`, `p = 2πk/n`.
pub fn circulant_symbol(row: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// First row of `(I - yS)⁻¹` for a symmetric circulant `S` with symbol `symbol`.
fn circulant_resolvent_row(symbol: &[Complex64], y: Complex64, margin: f64) -> Result<Vec<Complex64>> {
    let n = symbol.len();
    if y == Complex64::new(0.0, 0.0) {
        let mut row = vec![Complex64::new(0.0, 0.0); n];
        row[0] = Complex64::new(1.0, 0.0);
        return Ok(row);
    }
    let mut buf = Vec::with_capacity(n);
    let mut distance = f64::INFINITY;
    for s in symbol {
        let d = Complex64::new(1.0, 0.0) - y * s;
        distance = distance.min(d.norm());
        buf.push(d.inv());
    }
    if distance < margin {
        return Err(Error::SpectrumProximity { y, distance, margin });
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    Ok(buf)
}

/// Exact 2n block norm for a symmetric circulant profile.
///
/// With `a = y1 + y2`, `b = y2 - y1`, `P = (I - aS)⁻¹` and `Q = (I - bS)⁻¹` the
/// block inverse is `½[[P + Q, P - Q], [P - Q, P + Q]]`. Every row of it has the
/// same absolute sum, `Σ_x (|P_0x + Q_0x| + |P_0x - Q_0x|) / 2`.
pub fn inverse_norm_circulant_fast(
    p: &VarianceProfile,
    y1: Complex64,
    y2: Complex64,
) -> Result<f64> {
    inverse_norm_circulant_fast_with(p, y1, y2, &NormSettings::default())
}

pub fn inverse_norm_circulant_fast_with(
    p: &VarianceProfile,
    y1: Complex64,
    y2: Complex64,
    settings: &NormSettings,
) -> Result<f64> {
    let row = p.circulant_row().ok_or_else(|| {
        Error::DimensionMismatch(format!("circulant fast path needs a circulant profile, got {}", p.kind()))
    })?;
    let symbol = circulant_symbol(row);
    let pr = circulant_resolvent_row(&symbol, y1 + y2, settings.spectrum_margin)?;
    let qr = circulant_resolvent_row(&symbol, y2 - y1, settings.spectrum_margin)?;
    Ok(pr
        .iter()
        .zip(&qr)
        .map(|(pv, qv)| 0.5 * ((pv + qv).norm() + (pv - qv).norm()))
        .sum())
}

/// `‖(I - yS)⁻¹‖∞` for a symmetric circulant profile via the Fourier path.
pub fn resolvent_norm_circulant_fast(p: &VarianceProfile, y: Complex64) -> Result<f64> {
    let row = p.circulant_row().ok_or_else(|| {
        Error::DimensionMismatch(format!("circulant fast path needs a circulant profile, got {}", p.kind()))
    })?;
    let symbol = circulant_symbol(row);
    let r = circulant_resolvent_row(&symbol, y, NormSettings::default().spectrum_margin)?;
    Ok(r.iter().map(|v| v.norm()).sum())
}

/// Upper bound `1 + ‖D_y⁻¹‖∞` for `‖(I - yS)⁻¹‖∞` on a block band profile.
///
/// `D_y` is the `L × L` cyclic tridiagonal matrix with `1 - y/3` on the
/// diagonal and `-y/3` on the off-diagonals and corners, `L = n / w`.
///
/// Since `(I - yS)⁻¹ = I + (D_y⁻¹ - I) ⊗ J/w`, the norm itself is available from
/// `D_y⁻¹` too. `1 + ‖D_y⁻¹‖` falls below it when a diagonal entry of `D_y⁻¹`
/// is small; there the exact value is returned so the result is always an
/// upper bound.
pub fn inverse_norm_block_fast(p: &VarianceProfile, y: Complex64) -> Result<f64> {
    inverse_norm_block_fast_with(p, y, &NormSettings::default())
}

pub fn inverse_norm_block_fast_with(
    p: &VarianceProfile,
    y: Complex64,
    settings: &NormSettings,
) -> Result<f64> {
    let blocks = p.blocks().ok_or_else(|| {
        Error::DimensionMismatch(format!("block fast path needs a block band profile, got {}", p.kind()))
    })?;
    let d = block_reduction(blocks, y);
    let inv = checked_inverse(&d, settings.cond_cap, "block reduction D_y")?;
    let bound = 1.0 + linf_norm(inv.as_ref());
    Ok(bound.max(block_exact_norm(inv.as_ref(), p.w())))
}

/// `‖I + (D⁻¹ - I) ⊗ J/w‖∞` from the reduced inverse.
fn block_exact_norm(inv: MatRef<'_, Complex64>, w: usize) -> f64 {
    let w = w as f64;
    let one = Complex64::new(1.0, 0.0);
    (0..inv.nrows())
        .map(|t| {
            let d = inv[(t, t)] - one;
            let own = (one + d / w).norm() + (w - 1.0) / w * d.norm();
            let rest: f64 = (0..inv.ncols()).filter(|&s| s != t).map(|s| inv[(t, s)].norm()).sum();
            own + rest
        })
        .fold(0.0, f64::max)
}

/// The cyclic tridiagonal block-level matrix `D_y`.
pub fn block_reduction(blocks: usize, y: Complex64) -> Mat<Complex64> {
    let off = -y / 3.0;
    let diag = Complex64::new(1.0, 0.0) - y / 3.0;
    Mat::from_fn(blocks, blocks, |i, j| {
        if i == j {
            diag
        } else if graph_distance(i, j, blocks) == 1 {
            off
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Outcome of one `(y1, y2)` probe.
#[derive(Clone, Debug, PartialEq)]
pub struct NormProbe {
    pub y1: Complex64,
    pub y2: Complex64,
    pub norm: std::result::Result<f64, String>,
}

impl NormProbe {
    pub fn status(&self) -> &str {
        match &self.norm {
            Ok(_) => "ok",
            Err(msg) => msg,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormConditionReport {
    pub z: Complex64,
    pub radius: f64,
    pub grid_points: usize,
    pub method: NormMethod,
    pub probes: Vec<NormProbe>,
    /// Maximum over successful probes; `None` if every probe failed.
    pub max_norm: Option<f64>,
}

impl NormConditionReport {
    pub fn norms(&self) -> impl Iterator<Item = f64> + '_ {
        self.probes.iter().filter_map(|p| p.norm.as_ref().ok().copied())
    }

    pub fn failed(&self) -> usize {
        self.probes.iter().filter(|p| p.norm.is_err()).count()
    }

    pub const CSV_HEADER: [&'static str; 7] =
        ["y1_re", "y1_im", "y2_re", "y2_im", "norm", "method", "status"];

    pub fn csv_records(&self) -> Vec<Vec<String>> {
        self.probes
            .iter()
            .map(|p| {
                let norm = p.norm.as_ref().map(|v| crate::fmt::float(*v)).unwrap_or_default();
                vec![
                    crate::fmt::float(p.y1.re),
                    crate::fmt::float(p.y1.im),
                    crate::fmt::float(p.y2.re),
                    crate::fmt::float(p.y2.im),
                    norm,
                    self.method.to_string(),
                    if p.norm.is_ok() { "ok".into() } else { format!("failed: {}", p.status()) },
                ]
            })
            .collect()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(Self::CSV_HEADER).map_err(|e| Error::csv(path, e))?;
        for rec in self.csv_records() {
            w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Offsets `-r..=r` on `points` equally spaced nodes (`0` when `points == 1`).
fn grid_offsets(radius: f64, points: usize) -> Vec<f64> {
    if points <= 1 || radius == 0.0 {
        return vec![0.0];
    }
    (0..points)
        .map(|k| -radius + 2.0 * radius * k as f64 / (points - 1) as f64)
        .collect()
}

/// Evaluates the 2n block norm at one probe with the given method.
pub fn block_operator_norm(
    p: &VarianceProfile,
    y1: Complex64,
    y2: Complex64,
    method: NormMethod,
    settings: &NormSettings,
) -> Result<f64> {
    match method {
        NormMethod::Dense => inverse_norm_dense_with(p, y1, y2, settings),
        NormMethod::CirculantFast => inverse_norm_circulant_fast_with(p, y1, y2, settings),
        NormMethod::BlockFast => {
            // ½(|p+q| + |p-q|) <= |p| + |q| rowwise, so ‖P‖ + ‖Q‖ bounds the block norm
            let pa = inverse_norm_block_fast_with(p, y1 + y2, settings)?;
            let qb = inverse_norm_block_fast_with(p, y2 - y1, settings)?;
            Ok(pa + qb)
        }
    }
}

/// Probes the stability condition on a grid around `(|z|² - 1, -|z|²)`.
///
/// Each of the four real coordinates (real and imaginary parts of `y1` and
/// `y2`) takes `grid_points` values in `[-radius, radius]` around its center,
/// so a full scan has `grid_points⁴` probes. A zero radius collapses to the
/// single center probe. Failing probes are recorded, not propagated.
pub fn scan_norm_condition(
    p: &VarianceProfile,
    z: Complex64,
    radius: f64,
    grid_points: usize,
) -> Result<NormConditionReport> {
    scan_norm_condition_with(
        p,
        z,
        radius,
        grid_points,
        NormMethod::fastest_for(p.kind()),
        &NormSettings::default(),
    )
}

pub fn scan_norm_condition_with(
    p: &VarianceProfile,
    z: Complex64,
    radius: f64,
    grid_points: usize,
    method: NormMethod,
    settings: &NormSettings,
) -> Result<NormConditionReport> {
    let modulus = z.norm();
    if !(modulus > 0.0 && modulus < 1.0) {
        return Err(Error::Domain(format!("scan needs 0 < |z| < 1, got |z| = {modulus}")));
    }
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::Domain(format!("scan radius must be >= 0, got {radius}")));
    }
    if grid_points == 0 {
        return Err(Error::Domain("grid_points must be positive".into()));
    }
    match (method, p.kind()) {
        (NormMethod::CirculantFast, ProfileKind::Circulant)
        | (NormMethod::BlockFast, ProfileKind::BlockBand)
        | (NormMethod::Dense, _) => {}
        (m, k) => {
            return Err(Error::DimensionMismatch(format!("method {m} does not apply to a {k} profile")))
        }
    }
    let z2 = modulus * modulus;
    let c1 = Complex64::new(z2 - 1.0, 0.0);
    let c2 = Complex64::new(-z2, 0.0);
    let offsets = grid_offsets(radius, grid_points);

    let mut grid = Vec::with_capacity(offsets.len().pow(4));
    for &a in &offsets {
        for &b in &offsets {
            for &c in &offsets {
                for &d in &offsets {
                    grid.push((c1 + Complex64::new(a, b), c2 + Complex64::new(c, d)));
                }
            }
        }
    }

    let probes: Vec<NormProbe> = grid
        .into_par_iter()
        .map(|(y1, y2)| NormProbe {
            y1,
            y2,
            norm: block_operator_norm(p, y1, y2, method, settings).map_err(|e| e.to_string()),
        })
        .collect();
    let max_norm = probes
        .iter()
        .filter_map(|pr| pr.norm.as_ref().ok().copied())
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |m| m.max(v))));
    Ok(NormConditionReport {
        z,
        radius,
        grid_points,
        method,
        probes,
        max_norm,
    })
}
