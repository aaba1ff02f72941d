//! Monte-Carlo experiments: configuration, per-trial runners, aggregation and
//! CSV/PNG output.
//!
//! Trial `t` uses seed `seed + t`, so reports do not depend on how trials are
//! scheduled across threads.

mod config;
mod output;
mod plot;

use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::{parse_cli, ExperimentConfig, ExperimentKind, ProfileChoice, ShapeChoice};
pub use output::{emit_csv, emit_plot, read_csv, write_csv};

use crate::ensemble::{gaussian_companion, sample, shifted};
use crate::error::Result;
use crate::profile::{scan_norm_condition_with, NormConditionReport, NormMethod, NormSettings, ProfileKind, VarianceProfile};
use crate::selfconsistent::{mc_curve, SelfConsistentSolution, RESIDUAL_TOL};
use crate::spectra::{
    circular_law_distance, count_small_singulars, eigenvalues, empirical_stieltjes, kolmogorov_distance,
    log_det_avg, singular_values, GramResolvent,
};

/// `‖X‖ ≤ 3` asymptotically; the extra half absorbs finite-size fluctuations.
pub const OP_NORM_BOUND: f64 = 3.5;

/// Calibrated ceiling for `|m - m_c| W^{1/2} η^{3/4}`.
pub const LOCAL_LAW_CEILING: f64 = 10.0;

/// Number of `(i, j)` entries of the resolvent checked per local-law trial.
pub const SPOT_CHECKS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalLawPoint {
    pub eta: f64,
    pub abs_err: f64,
    /// `abs_err · W^{1/2} η^{3/4}`.
    pub normalized_err: f64,
    /// Largest `|G_ij - m_c δ_ij| · W^{1/2} η^{3/4}` over the spot-checked entries.
    pub entry_spot_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McPoint {
    pub eta: f64,
    pub mc: Complex64,
    pub residual: f64,
}

/// Statistics of one successful trial.
#[derive(Clone, Debug, PartialEq)]
pub enum TrialStats {
    Circlaw {
        radial_ks: f64,
        angular_ks: f64,
        /// Largest singular value of `X`.
        op_norm: f64,
        eigenvalues: Vec<Complex64>,
    },
    Locallaw {
        points: Vec<LocalLawPoint>,
    },
    Singcount {
        count: usize,
        bound: f64,
        /// `max_η count(√η) / (4 n η Im m(iη))` with the empirical `m`.
        max_stieltjes_ratio: f64,
    },
    Leastsing {
        sigma_min: f64,
        thresh_2_10: f64,
        /// Only for block profiles.
        thresh_2_3: Option<f64>,
    },
    Replacement {
        delta: f64,
        /// Distance between the singular-value laws of `X - z` and `G - z`.
        kolmogorov: f64,
    },
    Normcond {
        scan: NormConditionReport,
        /// `max_norm / (log n)²`.
        normalized: f64,
    },
    Mc {
        points: Vec<McPoint>,
    },
}

impl TrialStats {
    /// Named scalar statistics, the inputs to aggregation.
    pub fn values(&self, cfg: &ExperimentConfig) -> Vec<(&'static str, f64)> {
        match self {
            TrialStats::Circlaw {
                radial_ks,
                angular_ks,
                op_norm,
                ..
            } => vec![("radial_ks", *radial_ks), ("angular_ks", *angular_ks), ("op_norm", *op_norm)],
            TrialStats::Locallaw { points } => {
                let max = |f: fn(&LocalLawPoint) -> f64| points.iter().map(f).fold(0.0, f64::max);
                vec![
                    ("abs_err_max", max(|p| p.abs_err)),
                    ("normalized_err_max", max(|p| p.normalized_err)),
                    ("entry_spot_max", max(|p| p.entry_spot_max)),
                ]
            }
            TrialStats::Singcount {
                count,
                max_stieltjes_ratio,
                ..
            } => vec![("count", *count as f64), ("max_stieltjes_ratio", *max_stieltjes_ratio)],
            TrialStats::Leastsing { sigma_min, .. } => vec![
                ("sigma_min", *sigma_min),
                ("log10_sigma_min", sigma_min.log10()),
            ],
            TrialStats::Replacement { delta, kolmogorov } => {
                vec![("delta", *delta), ("kolmogorov", *kolmogorov)]
            }
            TrialStats::Normcond { scan, normalized } => vec![
                ("max_norm", scan.max_norm.unwrap_or(f64::NAN)),
                ("max_norm_over_log2", *normalized),
                ("failed_probes", scan.failed() as f64),
            ],
            TrialStats::Mc { points } => {
                let _ = cfg;
                vec![("max_residual", points.iter().map(|p| p.residual).fold(0.0, f64::max))]
            }
        }
    }

    /// Named pass/fail checks.
    pub fn checks(&self, cfg: &ExperimentConfig) -> Vec<(&'static str, bool)> {
        let n = cfg.n as f64;
        match self {
            TrialStats::Circlaw { op_norm, .. } => vec![("op_norm_bounded", *op_norm <= OP_NORM_BOUND)],
            TrialStats::Locallaw { points } => vec![
                ("normalized_err_le_n_eps", points.iter().all(|p| p.normalized_err <= n.powf(cfg.epsilon))),
                ("normalized_err_le_ceiling", points.iter().all(|p| p.normalized_err <= LOCAL_LAW_CEILING)),
            ],
            TrialStats::Singcount {
                count,
                bound,
                max_stieltjes_ratio,
            } => vec![
                ("count_le_bound", (*count as f64) <= *bound),
                ("stieltjes_inequality", *max_stieltjes_ratio <= 1.0),
            ],
            TrialStats::Leastsing {
                sigma_min,
                thresh_2_10,
                thresh_2_3,
            } => {
                let mut out = vec![("no_event_2_10", sigma_min > thresh_2_10)];
                if thresh_2_3.is_some() {
                    // w^{-50 n/w} underflows at desk sizes; compare logarithms
                    let w = cfg.w as f64;
                    out.push(("no_event_2_3", sigma_min.ln() > -50.0 * n / w * w.ln()));
                }
                out
            }
            TrialStats::Replacement { delta, .. } => vec![("delta_finite", delta.is_finite())],
            TrialStats::Normcond { scan, .. } => vec![("all_probes_ok", scan.failed() == 0)],
            TrialStats::Mc { points } => {
                vec![("residual_le_tol", points.iter().all(|p| p.residual <= RESIDUAL_TOL))]
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trial {
    pub trial: usize,
    pub seed: u64,
    /// `Err` carries the failure message; the row is kept.
    pub outcome: std::result::Result<TrialStats, String>,
}

impl Trial {
    pub fn status(&self) -> String {
        match &self.outcome {
            Ok(_) => "ok".into(),
            Err(msg) => format!("failed: {msg}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub median: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    /// Ignores NaN; `None` when nothing is left.
    pub fn of(values: &[f64]) -> Option<Summary> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let k = v.len();
        let median = if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) };
        Some(Summary {
            count: k,
            median,
            mean: v.iter().sum::<f64>() / k as f64,
            min: v[0],
            max: v[k - 1],
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub name: &'static str,
    pub summary: Summary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckFraction {
    pub name: &'static str,
    pub passed: usize,
    /// All trials, failed ones included.
    pub total: usize,
}

impl CheckFraction {
    pub fn fraction(&self) -> f64 {
        self.passed as f64 / self.total as f64
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub trials: Vec<Trial>,
    pub aggregates: Vec<Aggregate>,
    pub checks: Vec<CheckFraction>,
    pub elapsed: Duration,
}

impl ExperimentReport {
    /// A report without trials, e.g. for emitting a bare header.
    pub fn empty(config: ExperimentConfig) -> Self {
        ExperimentReport {
            config,
            trials: Vec::new(),
            aggregates: Vec::new(),
            checks: Vec::new(),
            elapsed: Duration::ZERO,
        }
    }

    pub fn aggregate(&self, name: &str) -> Option<&Summary> {
        self.aggregates.iter().find(|a| a.name == name).map(|a| &a.summary)
    }

    pub fn check(&self, name: &str) -> Option<&CheckFraction> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> usize {
        self.trials.iter().filter(|t| t.outcome.is_err()).count()
    }

    /// Values of one named statistic over successful trials, in trial order.
    pub fn values(&self, name: &str) -> Vec<f64> {
        self.trials
            .iter()
            .filter_map(|t| t.outcome.as_ref().ok())
            .filter_map(|s| s.values(&self.config).into_iter().find(|(k, _)| *k == name))
            .map(|(_, v)| v)
            .collect()
    }

    /// Rebuilds `aggregates` and `checks` from the trial rows.
    pub fn recompute(&mut self) {
        let cfg = &self.config;
        let mut names: Vec<&'static str> = Vec::new();
        let mut check_names: Vec<&'static str> = Vec::new();
        for s in self.trials.iter().filter_map(|t| t.outcome.as_ref().ok()) {
            for (k, _) in s.values(cfg) {
                if !names.contains(&k) {
                    names.push(k);
                }
            }
            for (k, _) in s.checks(cfg) {
                if !check_names.contains(&k) {
                    check_names.push(k);
                }
            }
        }
        self.aggregates = names
            .into_iter()
            .filter_map(|name| Summary::of(&self.values(name)).map(|summary| Aggregate { name, summary }))
            .collect();
        self.checks = check_names
            .into_iter()
            .map(|name| CheckFraction {
                name,
                passed: self
                    .trials
                    .iter()
                    .filter_map(|t| t.outcome.as_ref().ok())
                    .filter(|s| s.checks(cfg).iter().any(|(k, ok)| *k == name && *ok))
                    .count(),
                total: self.trials.len(),
            })
            .collect();
    }
}

/// Shared, trial-independent inputs.
struct Context {
    cfg: ExperimentConfig,
    profile: Arc<VarianceProfile>,
    etas: Vec<f64>,
    mc: Vec<SelfConsistentSolution>,
}

/// Runs every trial of `config` and aggregates the results.
///
/// Configuration errors abort before any trial; errors inside a trial are
/// recorded in its row.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let profile = config.build_profile()?;
    let etas = config.eta_grid();
    let mc = match config.kind {
        ExperimentKind::Locallaw => mc_curve(config.z(), &etas)?,
        _ => Vec::new(),
    };
    let ctx = Context {
        cfg: config.clone(),
        profile,
        etas,
        mc,
    };
    let trials = if config.kind.is_deterministic() { 1 } else { config.trials };
    let rows: Vec<Trial> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = config.seed.wrapping_add(t as u64);
            Trial {
                trial: t,
                seed,
                outcome: run_trial(&ctx, seed).map_err(|e| e.to_string()),
            }
        })
        .collect();
    let mut report = ExperimentReport {
        config: config.clone(),
        trials: rows,
        aggregates: Vec::new(),
        checks: Vec::new(),
        elapsed: Duration::ZERO,
    };
    report.recompute();
    report.elapsed = start.elapsed();
    Ok(report)
}

fn run_trial(ctx: &Context, seed: u64) -> Result<TrialStats> {
    let cfg = &ctx.cfg;
    let (n, w) = (cfg.n as f64, cfg.w as f64);
    let z = cfg.z();
    match cfg.kind {
        ExperimentKind::Circlaw => {
            let x = sample(&ctx.profile, cfg.dist, seed);
            let eigs = eigenvalues(x.matrix.as_ref())?;
            let d = circular_law_distance(&eigs)?;
            let sv = singular_values(x.matrix.as_ref())?;
            Ok(TrialStats::Circlaw {
                radial_ks: d.radial,
                angular_ks: d.angular,
                op_norm: *sv.last().expect("n >= 1"),
                eigenvalues: eigs,
            })
        }
        ExperimentKind::Locallaw => {
            let x = sample(&ctx.profile, cfg.dist, seed);
            let g = GramResolvent::new(shifted(&x, z).as_ref())?;
            let sv = g.singular_values();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // streams 0..n drive the sample; the last one picks the entries
            rng.set_stream(u64::MAX);
            let pairs: Vec<(usize, usize)> = (0..SPOT_CHECKS)
                .map(|_| ((rng.next_u64() % cfg.n as u64) as usize, (rng.next_u64() % cfg.n as u64) as usize))
                .collect();
            let points = ctx
                .etas
                .iter()
                .zip(&ctx.mc)
                .map(|(&eta, sol)| {
                    let scale = w.sqrt() * eta.powf(0.75);
                    let abs_err = (empirical_stieltjes(&sv, eta) - sol.mc).norm();
                    let entry_spot_max = pairs
                        .iter()
                        .map(|&(i, j)| {
                            let target = if i == j { sol.mc } else { Complex64::new(0.0, 0.0) };
                            (g.entry(i, j, eta) - target).norm() * scale
                        })
                        .fold(0.0, f64::max);
                    LocalLawPoint {
                        eta,
                        abs_err,
                        normalized_err: abs_err * scale,
                        entry_spot_max,
                    }
                })
                .collect();
            Ok(TrialStats::Locallaw { points })
        }
        ExperimentKind::Singcount => {
            let x = sample(&ctx.profile, cfg.dist, seed);
            let sv = singular_values(shifted(&x, z).as_ref())?;
            let max_stieltjes_ratio = ctx
                .etas
                .iter()
                .map(|&eta| {
                    let c = count_small_singulars(&sv, eta.sqrt()) as f64;
                    c / (4.0 * n * eta * empirical_stieltjes(&sv, eta).im)
                })
                .fold(0.0, f64::max);
            Ok(TrialStats::Singcount {
                count: count_small_singulars(&sv, 1.0 / w),
                bound: n.powf(1.0 + cfg.epsilon) / w,
                max_stieltjes_ratio,
            })
        }
        ExperimentKind::Leastsing => {
            let x = sample(&ctx.profile, cfg.dist, seed);
            let sv = singular_values(shifted(&x, z).as_ref())?;
            let thresh_2_3 = (ctx.profile.kind() == ProfileKind::BlockBand).then(|| w.powf(-50.0 * n / w));
            Ok(TrialStats::Leastsing {
                sigma_min: sv[0],
                thresh_2_10: (-n.powf(3.0 * cfg.kappa) * n / w).exp(),
                thresh_2_3,
            })
        }
        ExperimentKind::Replacement => {
            let x = sample(&ctx.profile, cfg.dist, seed);
            let g = gaussian_companion(&x);
            let sx = singular_values(shifted(&x, z).as_ref())?;
            let sg = singular_values(shifted(&g, z).as_ref())?;
            let (lx, lg) = (log_det_avg(&sx), log_det_avg(&sg));
            let delta = if lx.singular || lg.singular {
                f64::INFINITY
            } else {
                (lx.value - lg.value).abs()
            };
            Ok(TrialStats::Replacement {
                delta,
                kolmogorov: kolmogorov_distance(&sx, &sg)?,
            })
        }
        ExperimentKind::Normcond => {
            let scan = scan_norm_condition_with(
                &ctx.profile,
                z,
                cfg.radius,
                cfg.grid_points,
                NormMethod::fastest_for(ctx.profile.kind()),
                &NormSettings::default(),
            )?;
            let normalized = scan.max_norm.map_or(f64::NAN, |m| m / n.ln().powi(2));
            Ok(TrialStats::Normcond { scan, normalized })
        }
        ExperimentKind::Mc => {
            let points = mc_curve(z, &ctx.etas)?
                .into_iter()
                .map(|s| McPoint {
                    eta: s.w.im,
                    mc: s.mc,
                    residual: s.residual,
                })
                .collect();
            Ok(TrialStats::Mc { points })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(kind: ExperimentKind) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(kind);
        c.n = 64;
        c.w = 16;
        c.trials = 3;
        c
    }

    #[test]
    fn summary_statistics() {
        let s = Summary::of(&[3.0, 1.0, f64::NAN, 2.0, 10.0]).unwrap();
        assert_eq!((s.count, s.median, s.mean, s.min, s.max), (4, 2.5, 4.0, 1.0, 10.0));
        assert_eq!(Summary::of(&[5.0]).unwrap().median, 5.0);
        assert!(Summary::of(&[f64::NAN]).is_none());
    }

    #[test]
    fn circlaw_block_rademacher_single_trial() {
        let mut c = ExperimentConfig::new(ExperimentKind::Circlaw);
        c.n = 256;
        c.w = 32;
        c.profile = ProfileChoice::Block;
        c.dist = crate::ensemble::EntryDistribution::Rademacher;
        c.trials = 1;
        let r = run(&c).unwrap();
        assert_eq!(r.trials.len(), 1);
        let Ok(TrialStats::Circlaw { radial_ks, angular_ks, eigenvalues, .. }) = &r.trials[0].outcome else {
            panic!("{:?}", r.trials[0].outcome);
        };
        assert!((0.0..=1.0).contains(radial_ks) && (0.0..=1.0).contains(angular_ks));
        assert_eq!(eigenvalues.len(), 256);
    }

    #[test]
    fn reports_are_deterministic() {
        for kind in [ExperimentKind::Circlaw, ExperimentKind::Replacement, ExperimentKind::Singcount] {
            let a = run(&cfg(kind)).unwrap();
            let b = run(&cfg(kind)).unwrap();
            assert_eq!(a.trials, b.trials);
            assert_eq!(a.aggregates, b.aggregates);
            assert_eq!(a.trials.iter().map(|t| t.seed).collect::<Vec<_>>(), vec![1, 2, 3]);
        }
    }

    #[test]
    fn trial_seed_is_base_plus_index() {
        let mut c = cfg(ExperimentKind::Leastsing);
        c.seed = 40;
        let r = run(&c).unwrap();
        c.seed = 42;
        c.trials = 1;
        let single = run(&c).unwrap();
        assert_eq!(r.trials[2].outcome, single.trials[0].outcome);
    }

    #[test]
    fn aggregates_recompute_from_rows() {
        let mut r = run(&cfg(ExperimentKind::Circlaw)).unwrap();
        let before = (r.aggregates.clone(), r.checks.clone());
        r.aggregates.clear();
        r.checks.clear();
        r.recompute();
        assert_eq!((r.aggregates.clone(), r.checks.clone()), before);
        let radial = r.values("radial_ks");
        assert_eq!(radial.len(), 3);
        let s = r.aggregate("radial_ks").unwrap();
        assert_eq!(s.max, radial.iter().copied().fold(0.0, f64::max));
    }

    #[test]
    fn failed_trials_are_kept() {
        let mut r = run(&cfg(ExperimentKind::Replacement)).unwrap();
        r.trials[1].outcome = Err("synthetic".into());
        r.recompute();
        assert_eq!(r.trials.len(), 3);
        assert_eq!(r.failed(), 1);
        assert_eq!(r.trials[1].status(), "failed: synthetic");
        let c = r.check("delta_finite").unwrap();
        assert_eq!((c.passed, c.total), (2, 3));
        assert_eq!(r.aggregate("delta").unwrap().count, 2);
    }

    #[test]
    fn config_errors_abort() {
        let mut c = cfg(ExperimentKind::Circlaw);
        c.w = 0;
        assert!(run(&c).is_err());
    }

    #[test]
    fn singcount_events() {
        let r = run(&cfg(ExperimentKind::Singcount)).unwrap();
        assert_eq!(r.check("stieltjes_inequality").unwrap().passed, 3);
        for t in &r.trials {
            let Ok(TrialStats::Singcount { bound, .. }) = t.outcome else { panic!() };
            assert_eq!(bound, 64f64.powf(1.1) / 16.0);
        }
    }

    #[test]
    fn leastsing_thresholds() {
        let mut c = cfg(ExperimentKind::Leastsing);
        c.profile = ProfileChoice::Block;
        let r = run(&c).unwrap();
        let Ok(TrialStats::Leastsing { thresh_2_10, thresh_2_3, .. }) = r.trials[0].outcome else { panic!() };
        assert!((thresh_2_10 - (-(64f64.powf(0.15)) * 4.0).exp()).abs() < 1e-15);
        assert_eq!(thresh_2_3, Some(16f64.powf(-200.0)));
        let c = cfg(ExperimentKind::Leastsing);
        let r = run(&c).unwrap();
        let Ok(TrialStats::Leastsing { thresh_2_3, .. }) = r.trials[0].outcome else { panic!() };
        assert_eq!(thresh_2_3, None);
    }

    #[test]
    fn locallaw_rows_follow_the_grid() {
        let mut c = cfg(ExperimentKind::Locallaw);
        c.eta_points = 5;
        c.trials = 2;
        let r = run(&c).unwrap();
        let Ok(TrialStats::Locallaw { points }) = &r.trials[0].outcome else { panic!() };
        assert_eq!(points.len(), 5);
        assert_eq!(points[0].eta, 10.0);
        // at η = 10 the resolvent is nearly deterministic
        assert!(points[0].abs_err < 1e-2);
    }

    #[test]
    fn deterministic_kinds_have_one_row() {
        let mut c = cfg(ExperimentKind::Normcond);
        c.trials = 5;
        let r = run(&c).unwrap();
        assert_eq!(r.trials.len(), 1);
        let Ok(TrialStats::Normcond { scan, .. }) = &r.trials[0].outcome else { panic!() };
        assert_eq!(scan.probes.len(), 81);
        let r = run(&cfg(ExperimentKind::Mc)).unwrap();
        assert_eq!(r.check("residual_le_tol").unwrap().passed, 1);
    }
}
