//! Seeded sampling of `X = (b_ij x_ij)` for a variance profile.
//!
//! Entry `(i, j)` is drawn from words `[4j, 4j + 4)` of ChaCha8 stream `i`
//! under key `seed`, so every entry is a pure function of `(seed, i, j)`.
//! Rows are filled in parallel and the result does not depend on scheduling.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Error;
use crate::profile::VarianceProfile;

/// XORed into a sample's seed to derive its Gaussian companion.
pub const COMPANION_SEED_MASK: u64 = 0x9E37_79B9_7F4A_7C15;

/// ChaCha words consumed per entry (two `u64` draws).
const WORDS_PER_ENTRY: u128 = 4;

/// Mean-zero, unit-variance entry laws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryDistribution {
    #[serde(alias = "gaussian")]
    GaussianReal,
    /// Independent real and imaginary parts of variance 1/2 each.
    #[serde(alias = "cgaussian")]
    GaussianComplex,
    /// Uniform on `[-√3, √3]`.
    #[serde(alias = "uniform")]
    UniformReal,
    Rademacher,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DistributionProperties {
    pub bounded_density: bool,
    pub subgaussian: bool,
    pub all_moments: bool,
    pub complex_valued: bool,
}

impl EntryDistribution {
    pub const ALL: [EntryDistribution; 4] = [
        EntryDistribution::GaussianReal,
        EntryDistribution::GaussianComplex,
        EntryDistribution::UniformReal,
        EntryDistribution::Rademacher,
    ];

    pub fn properties(&self) -> DistributionProperties {
        DistributionProperties {
            bounded_density: !matches!(self, EntryDistribution::Rademacher),
            subgaussian: true,
            all_moments: true,
            complex_valued: matches!(self, EntryDistribution::GaussianComplex),
        }
    }

    /// The Gaussian law with the same real/complex type.
    pub fn gaussian_counterpart(&self) -> Self {
        if self.properties().complex_valued {
            EntryDistribution::GaussianComplex
        } else {
            EntryDistribution::GaussianReal
        }
    }

    /// CLI spelling.
    pub fn flag(&self) -> &'static str {
        match self {
            EntryDistribution::GaussianReal => "gaussian",
            EntryDistribution::GaussianComplex => "cgaussian",
            EntryDistribution::UniformReal => "uniform",
            EntryDistribution::Rademacher => "rademacher",
        }
    }

    /// Maps two uniform words to one entry.
    #[inline]
    fn draw(&self, a: u64, b: u64) -> Complex64 {
        match self {
            EntryDistribution::GaussianReal => {
                let r = (-2.0 * open01(a).ln()).sqrt();
                Complex64::new(r * (std::f64::consts::TAU * unit(b)).cos(), 0.0)
            }
            EntryDistribution::GaussianComplex => {
                // |x|² ~ Exp(1) and a uniform phase
                let r = (-open01(a).ln()).sqrt();
                Complex64::from_polar(r, std::f64::consts::TAU * unit(b))
            }
            EntryDistribution::UniformReal => {
                Complex64::new(3f64.sqrt() * (2.0 * unit(a) - 1.0), 0.0)
            }
            EntryDistribution::Rademacher => {
                Complex64::new(if a >> 63 == 0 { 1.0 } else { -1.0 }, 0.0)
            }
        }
    }
}

impl fmt::Display for EntryDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntryDistribution::GaussianReal => "gaussian_real",
            EntryDistribution::GaussianComplex => "gaussian_complex",
            EntryDistribution::UniformReal => "uniform_real",
            EntryDistribution::Rademacher => "rademacher",
        })
    }
}

impl FromStr for EntryDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "gaussian" | "gaussian_real" => Ok(EntryDistribution::GaussianReal),
            "cgaussian" | "gaussian_complex" => Ok(EntryDistribution::GaussianComplex),
            "uniform" | "uniform_real" => Ok(EntryDistribution::UniformReal),
            "rademacher" => Ok(EntryDistribution::Rademacher),
            other => Err(Error::Usage(format!("unknown distribution '{other}'"))),
        }
    }
}

/// `[0, 1)` with 53 bits.
#[inline]
fn unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `(0, 1]`, safe for `ln`.
#[inline]
fn open01(x: u64) -> f64 {
    ((x >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn row_rng(seed: u64, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row as u64);
    rng
}

/// The normalized entry `x_ij` (before scaling by `b_ij`) for `(seed, i, j)`.
pub fn entry(dist: EntryDistribution, seed: u64, i: usize, j: usize) -> Complex64 {
    let mut rng = row_rng(seed, i);
    rng.set_word_pos(j as u128 * WORDS_PER_ENTRY);
    let (a, b) = (rng.next_u64(), rng.next_u64());
    dist.draw(a, b)
}

/// One realization of the ensemble.
#[derive(Clone, Debug)]
pub struct MatrixSample {
    pub profile: Arc<VarianceProfile>,
    pub dist: EntryDistribution,
    pub seed: u64,
    pub matrix: Mat<Complex64>,
}

/// Draws `X_ij = sqrt(S_ij) · x_ij`; entries with `S_ij = 0` are exactly zero.
pub fn sample(profile: &Arc<VarianceProfile>, dist: EntryDistribution, seed: u64) -> MatrixSample {
    let n = profile.n();
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            // sequential reads follow the same word layout as `entry`
            let mut rng = row_rng(seed, i);
            (0..n)
                .map(|j| {
                    let (a, b) = (rng.next_u64(), rng.next_u64());
                    let s = profile.get(i, j);
                    if s == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        dist.draw(a, b) * s.sqrt()
                    }
                })
                .collect()
        })
        .collect();
    MatrixSample {
        profile: Arc::clone(profile),
        dist,
        seed,
        matrix: Mat::from_fn(n, n, |i, j| rows[i][j]),
    }
}

/// The Gaussian matrix with the same profile and real/complex type, seeded with
/// `seed ^ COMPANION_SEED_MASK`.
pub fn gaussian_companion(s: &MatrixSample) -> MatrixSample {
    sample(
        &s.profile,
        s.dist.gaussian_counterpart(),
        s.seed ^ COMPANION_SEED_MASK,
    )
}

/// `Y_z = X - zI`.
pub fn shifted(s: &MatrixSample, z: Complex64) -> Mat<Complex64> {
    let mut y = s.matrix.clone();
    for i in 0..y.nrows() {
        y[(i, i)] -= z;
    }
    y
}

impl MatrixSample {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// True when every entry has zero imaginary part.
    pub fn is_real(&self) -> bool {
        !self.dist.properties().complex_valued
    }
}
