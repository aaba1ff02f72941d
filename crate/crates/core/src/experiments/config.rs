use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::EntryDistribution;
use crate::error::{Error, Result};
use crate::profile::{build_block_band, build_circulant, ProfileFunction, VarianceProfile, DEFAULT_SCAN_RADIUS};
use crate::selfconsistent::geometric_grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    /// Eigenvalue distances to the uniform law on the disk.
    Circlaw,
    /// `|m - m_c|` along the η grid.
    Locallaw,
    /// Number of singular values below `1/w`.
    Singcount,
    /// Smallest singular value against the tail thresholds.
    Leastsing,
    /// Log-determinant and singular-value law against a Gaussian companion.
    Replacement,
    /// Stability-operator norm scan.
    Normcond,
    /// Solution of the self-consistent equation along the η grid.
    Mc,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Circlaw,
        ExperimentKind::Locallaw,
        ExperimentKind::Singcount,
        ExperimentKind::Leastsing,
        ExperimentKind::Replacement,
        ExperimentKind::Normcond,
        ExperimentKind::Mc,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Circlaw => "circlaw",
            ExperimentKind::Locallaw => "locallaw",
            ExperimentKind::Singcount => "singcount",
            ExperimentKind::Leastsing => "leastsing",
            ExperimentKind::Replacement => "replacement",
            ExperimentKind::Normcond => "normcond",
            ExperimentKind::Mc => "mc",
        }
    }

    /// Kinds that do not sample and produce a single row.
    pub fn is_deterministic(&self) -> bool {
        matches!(self, ExperimentKind::Normcond | ExperimentKind::Mc)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProfileChoice {
    Block,
    Circulant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ShapeChoice {
    Indicator,
    Gauss,
}

impl ShapeChoice {
    pub fn function(&self) -> ProfileFunction {
        match self {
            ShapeChoice::Indicator => ProfileFunction::indicator(),
            ShapeChoice::Gauss => ProfileFunction::gauss(),
        }
    }
}

/// Everything needed to reproduce one experiment.
///
/// Keys of the JSON form match the CLI flag names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: usize,
    pub w: usize,
    pub profile: ProfileChoice,
    /// Only used by circulant profiles.
    pub f: ShapeChoice,
    pub dist: EntryDistribution,
    pub z_re: f64,
    pub z_im: f64,
    pub trials: usize,
    pub seed: u64,
    /// `None` means `W^{-2} N^{γ0}`.
    pub eta_min: Option<f64>,
    pub eta_max: f64,
    pub eta_points: usize,
    pub gamma0: f64,
    /// Exponent in the `N^ε` slack of count and local-law bounds.
    pub epsilon: f64,
    pub kappa: f64,
    pub radius: f64,
    /// Scan nodes per real coordinate.
    pub grid_points: usize,
    pub out: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::Circlaw,
            n: 256,
            w: 32,
            profile: ProfileChoice::Circulant,
            f: ShapeChoice::Indicator,
            dist: EntryDistribution::GaussianReal,
            z_re: 0.5,
            z_im: 0.0,
            trials: 10,
            seed: 1,
            eta_min: None,
            eta_max: 10.0,
            eta_points: 20,
            gamma0: 0.1,
            epsilon: 0.1,
            kappa: 0.05,
            radius: DEFAULT_SCAN_RADIUS,
            grid_points: 3,
            out: None,
            plot: None,
        }
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            ..Default::default()
        }
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.z_re, self.z_im)
    }

    pub fn eta_min_resolved(&self) -> f64 {
        self.eta_min
            .unwrap_or_else(|| (self.n as f64).powf(self.gamma0) / (self.w as f64).powi(2))
    }

    /// Geometric, descending from `eta_max`.
    pub fn eta_grid(&self) -> Vec<f64> {
        geometric_grid(self.eta_max, self.eta_min_resolved(), self.eta_points)
    }

    pub fn build_profile(&self) -> Result<Arc<VarianceProfile>> {
        let p = match self.profile {
            ProfileChoice::Block => build_block_band(self.n, self.w)?,
            ProfileChoice::Circulant => build_circulant(self.n, self.w, &self.f.function())?,
        };
        Ok(Arc::new(p))
    }

    /// Checks ranges, profile shape and the hypotheses each kind relies on.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(usage("--n must be at least 1"));
        }
        if self.w == 0 {
            return Err(usage("--w must be at least 1"));
        }
        if self.w > self.n {
            return Err(usage(format!("--w ({}) must not exceed --n ({})", self.w, self.n)));
        }
        if self.trials == 0 {
            return Err(usage("--trials must be at least 1"));
        }
        if !(self.z_re.is_finite() && self.z_im.is_finite()) {
            return Err(usage("--z-re and --z-im must be finite"));
        }
        if let Some(min) = self.eta_min {
            if !(min > 0.0 && min.is_finite()) {
                return Err(usage(format!("--eta-min must be positive, got {min}")));
            }
        }
        let eta_min = self.eta_min_resolved();
        if !(self.eta_max.is_finite() && self.eta_max >= eta_min) {
            return Err(usage(format!(
                "--eta-max ({}) must be finite and at least eta-min ({eta_min})",
                self.eta_max
            )));
        }
        if self.eta_points == 0 {
            return Err(usage("--eta-points must be at least 1"));
        }
        for (flag, v) in [("--gamma0", self.gamma0), ("--epsilon", self.epsilon), ("--kappa", self.kappa)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(usage(format!("{flag} must be positive, got {v}")));
            }
        }
        if !(self.radius >= 0.0 && self.radius.is_finite()) {
            return Err(usage(format!("--radius must be nonnegative, got {}", self.radius)));
        }
        if self.grid_points == 0 {
            return Err(usage("--grid-points must be at least 1"));
        }
        match self.profile {
            ProfileChoice::Block => {
                if self.n % self.w != 0 || self.n / self.w < 3 {
                    return Err(usage(format!(
                        "--w ({}) must divide --n ({}) into at least 3 blocks for --profile block",
                        self.w, self.n
                    )));
                }
            }
            ProfileChoice::Circulant => {
                if self.n < 2 * self.w {
                    return Err(usage(format!(
                        "--w ({}) must be at most half of --n ({}) for --profile circulant",
                        self.w, self.n
                    )));
                }
            }
        }
        let modulus = self.z().norm();
        match self.kind {
            ExperimentKind::Locallaw | ExperimentKind::Singcount | ExperimentKind::Normcond
                if !(modulus > 0.0 && modulus < 1.0) =>
            {
                return Err(usage(format!("{} needs 0 < |z| < 1 (--z-re, --z-im), got |z| = {modulus}", self.kind)));
            }
            _ => {}
        }
        self.check_hypotheses()
    }

    fn check_hypotheses(&self) -> Result<()> {
        let props = self.dist.properties();
        match self.kind {
            ExperimentKind::Circlaw | ExperimentKind::Leastsing
                if !props.bounded_density && self.profile != ProfileChoice::Block =>
            {
                Err(Error::Hypothesis(format!(
                    "--dist {} has no bounded density; {} accepts it only with --profile block",
                    self.dist.flag(),
                    self.kind
                )))
            }
            ExperimentKind::Locallaw | ExperimentKind::Singcount | ExperimentKind::Replacement
                if !props.all_moments =>
            {
                Err(Error::Hypothesis(format!(
                    "--dist {} lacks finite moments of all orders, required by {}",
                    self.dist.flag(),
                    self.kind
                )))
            }
            _ => Ok(()),
        }
    }
}

fn parse_dist(s: &str) -> std::result::Result<EntryDistribution, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// `bandlab <kind> [flags]`
#[derive(Debug, Parser)]
#[command(name = "bandlab", version, about = "Monte-Carlo experiments on non-Hermitian random band matrices")]
#[command(allow_negative_numbers = true)]
struct Cli {
    #[arg(value_enum)]
    kind: ExperimentKind,
    /// JSON file with keys matching the flag names; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    w: Option<usize>,
    #[arg(long, value_enum)]
    profile: Option<ProfileChoice>,
    #[arg(long, value_enum)]
    f: Option<ShapeChoice>,
    /// gaussian, cgaussian, uniform or rademacher.
    #[arg(long, value_parser = parse_dist)]
    dist: Option<EntryDistribution>,
    #[arg(long = "z-re")]
    z_re: Option<f64>,
    #[arg(long = "z-im")]
    z_im: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "eta-min")]
    eta_min: Option<f64>,
    #[arg(long = "eta-max")]
    eta_max: Option<f64>,
    #[arg(long = "eta-points")]
    eta_points: Option<usize>,
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long = "grid-points")]
    grid_points: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    plot: Option<PathBuf>,
}

/// Parses `<kind> [flags]` (no program name) into a validated config.
///
/// `--help` and `--version` come back as [`Error::Help`] carrying the text.
pub fn parse_cli<I, S>(args: I) -> Result<ExperimentConfig>
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let argv = std::iter::once(OsString::from("bandlab")).chain(args.into_iter().map(Into::into));
    let cli = Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            Error::Help(e.to_string())
        }
        _ => Error::Usage(e.to_string().trim_end().to_owned()),
    })?;

    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text).map_err(|e| Error::Format {
                path: path.clone(),
                reason: e.to_string(),
            })?
        }
        None => ExperimentConfig::default(),
    };
    cfg.kind = cli.kind;
    macro_rules! set {
        ($($field:ident),*) => {
            $(if let Some(v) = cli.$field { cfg.$field = v; })*
        };
    }
    set!(n, w, profile, f, dist, z_re, z_im, trials, seed, eta_max, eta_points, gamma0, epsilon, kappa, radius, grid_points);
    if cli.eta_min.is_some() {
        cfg.eta_min = cli.eta_min;
    }
    if cli.out.is_some() {
        cfg.out = cli.out;
    }
    if cli.plot.is_some() {
        cfg.plot = cli.plot;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let cfg = parse_cli(["circlaw", "--n", "256", "--w", "32", "--profile", "block", "--dist", "rademacher"]).unwrap();
        assert_eq!(cfg.trials, 10);
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.z(), Complex64::new(0.5, 0.0));
        assert_eq!(cfg.dist, EntryDistribution::Rademacher);
        assert_eq!(cfg.profile, ProfileChoice::Block);
        assert_eq!(cfg.gamma0, 0.1);
        assert_eq!(cfg.kappa, 0.05);
        assert_eq!(cfg.radius, 0.02);
        assert_eq!(cfg.eta_points, 20);
    }

    #[test]
    fn zero_bandwidth_is_a_usage_error() {
        match parse_cli(["locallaw", "--n", "256", "--w", "0"]) {
            Err(Error::Usage(msg)) => assert!(msg.contains("--w"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_flag_is_rejected() {
        match parse_cli(["mc", "--bogus", "1"]) {
            Err(Error::Usage(msg)) => assert!(msg.contains("--bogus"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_value_names_flag() {
        match parse_cli(["mc", "--trials", "many"]) {
            Err(Error::Usage(msg)) => assert!(msg.contains("--trials"), "{msg}"),
            other => panic!("{other:?}"),
        }
        match parse_cli(["mc", "--dist", "cauchy"]) {
            Err(Error::Usage(msg)) => assert!(msg.contains("--dist"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rademacher_needs_block_for_density_kinds() {
        for kind in ["leastsing", "circlaw"] {
            let r = parse_cli([kind, "--dist", "rademacher", "--profile", "circulant", "--n", "256", "--w", "64"]);
            assert!(matches!(r, Err(Error::Hypothesis(_))), "{kind}: {r:?}");
        }
        parse_cli(["leastsing", "--dist", "rademacher", "--profile", "block", "--n", "256", "--w", "64"]).unwrap();
        parse_cli(["singcount", "--dist", "rademacher", "--profile", "circulant"]).unwrap();
    }

    #[test]
    fn profile_shape_rules() {
        let r = parse_cli(["circlaw", "--profile", "block", "--n", "100", "--w", "30"]);
        assert!(matches!(r, Err(Error::Usage(ref m)) if m.contains("--w")), "{r:?}");
        let r = parse_cli(["circlaw", "--profile", "block", "--n", "100", "--w", "50"]);
        assert!(matches!(r, Err(Error::Usage(_))));
        let r = parse_cli(["circlaw", "--profile", "circulant", "--n", "100", "--w", "60"]);
        assert!(matches!(r, Err(Error::Usage(_))));
        let r = parse_cli(["circlaw", "--n", "10", "--w", "11"]);
        assert!(matches!(r, Err(Error::Usage(_))));
    }

    #[test]
    fn z_domain_for_bulk_kinds() {
        for kind in ["locallaw", "singcount", "normcond"] {
            let r = parse_cli([kind, "--z-re", "1.2"]);
            assert!(matches!(r, Err(Error::Usage(ref m)) if m.contains("--z-re")), "{kind}: {r:?}");
        }
        let cfg = parse_cli(["circlaw", "--z-re", "-1.5", "--z-im", "-0.25"]).unwrap();
        assert_eq!(cfg.z(), Complex64::new(-1.5, -0.25));
    }

    #[test]
    fn numeric_ranges() {
        for args in [
            vec!["mc", "--trials", "0"],
            vec!["mc", "--eta-min", "0"],
            vec!["mc", "--eta-min", "5", "--eta-max", "1"],
            vec!["mc", "--eta-points", "0"],
            vec!["mc", "--gamma0", "-1"],
            vec!["mc", "--radius", "-0.1"],
        ] {
            assert!(matches!(parse_cli(&args), Err(Error::Usage(_))), "{args:?}");
        }
    }

    #[test]
    fn eta_grid_defaults_to_bulk_domain() {
        let cfg = parse_cli(["locallaw", "--n", "1024", "--w", "64"]).unwrap();
        let grid = cfg.eta_grid();
        assert_eq!(grid.len(), 20);
        assert_eq!(grid[0], 10.0);
        let expected = 1024f64.powf(0.1) / 64.0 / 64.0;
        assert!((grid[19] - expected).abs() <= 1e-15 * expected);
        assert!(grid.windows(2).all(|p| p[1] < p[0]));
    }

    #[test]
    fn config_file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"n": 512, "w": 64, "dist": "uniform", "trials": 3, "z-re": 0.25}"#).unwrap();
        let p = path.to_str().unwrap();
        let cfg = parse_cli(["singcount", "--config", p, "--trials", "7"]).unwrap();
        assert_eq!((cfg.n, cfg.w, cfg.trials), (512, 64, 7));
        assert_eq!(cfg.dist, EntryDistribution::UniformReal);
        assert_eq!(cfg.z_re, 0.25);
        assert_eq!(cfg.kind, ExperimentKind::Singcount);

        std::fs::write(&path, r#"{"n": 512, "colour": 1}"#).unwrap();
        assert!(matches!(parse_cli(["mc", "--config", p]), Err(Error::Format { .. })));
    }

    #[test]
    fn json_round_trip() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Replacement);
        cfg.eta_min = Some(1e-3);
        cfg.out = Some("x.csv".into());
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn help_is_not_a_usage_error() {
        assert!(matches!(parse_cli(["--help"]), Err(Error::Help(_))));
    }
}
