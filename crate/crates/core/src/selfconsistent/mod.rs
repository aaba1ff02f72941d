//! The deterministic limit `m_c(w, z)` of the Stieltjes transform of
//! `Y_z* Y_z`, and its Hermitized counterpart.
//!
//! `m_c` solves
//!
//! ```text
//! 1/m = -w (1 + m) + |z|² / (1 + m)
//! ```
//!
//! which, after clearing denominators, is the cubic
//! `w m³ + 2w m² + (w + 1 - |z|²) m + 1 = 0`. The Hermitized transform solves
//! `-1/m = w + m - |z|² / (w + m)`, i.e. `m³ + 2w m² + (w² + 1 - |z|²) m + w = 0`,
//! and satisfies `m̲_c(w) = w m_c(w²)`.
//!
//! The physical root is the one with positive imaginary part. When more than
//! one root lies in the upper half plane it is identified by continuation from
//! `Im w = 10`, where it is the root closest to `-1/w`.

pub mod cubic;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use cubic::cubic_roots;

/// Largest accepted residual of the defining equation.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Imaginary part at which continuation starts.
pub const CONTINUATION_START: f64 = 10.0;
/// A continuation step is accepted when the tracked root moves by at most this
/// fraction of its modulus.
pub const MATCH_RADIUS: f64 = 0.1;
/// Maximum number of step bisections.
pub const MAX_REFINEMENT: u32 = 8;
/// Root pairs closer than this (relative) mark a spectral edge.
pub const EDGE_TOL: f64 = 1e-6;

/// Which of the two self-consistent equations is being solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Equation {
    /// `1/m = -w(1 + m) + |z|²/(1 + m)`.
    Resolvent,
    /// `-1/m = w + m - |z|²/(w + m)`.
    Hermitized,
}

impl Equation {
    pub fn coefficients(&self, w: Complex64, z2: f64) -> [Complex64; 4] {
        let one = Complex64::new(1.0, 0.0);
        match self {
            Equation::Resolvent => [w, 2.0 * w, w + 1.0 - z2, one],
            Equation::Hermitized => [one, 2.0 * w, w * w + 1.0 - z2, w],
        }
    }

    /// Defect of the un-cleared equation at `m`, relative to its largest term.
    pub fn residual(&self, m: Complex64, w: Complex64, z2: f64) -> f64 {
        let terms = match self {
            Equation::Resolvent => [m.inv(), w * (1.0 + m), -z2 / (1.0 + m)],
            Equation::Hermitized => [m.inv(), w + m, -z2 / (w + m)],
        };
        let scale = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
        let defect: Complex64 = terms.iter().sum();
        if scale > 0.0 {
            defect.norm() / scale
        } else {
            defect.norm()
        }
    }

    fn roots(&self, w: Complex64, z2: f64) -> [Complex64; 3] {
        cubic_roots(self.coefficients(w, z2))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelectionRule {
    /// Exactly one root had positive imaginary part.
    UniquePositive,
    /// Picked by tracking the root from `Im w = 10` (or from a seed solution).
    Continuation,
}

/// How the returned root was chosen among the three cubic roots.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchCertificate {
    pub roots: [Complex64; 3],
    pub selected: usize,
    pub rule: SelectionRule,
    /// Two roots (nearly) coincide: `w` sits at a spectral edge.
    pub edge_degenerate: bool,
    pub continuation_steps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelfConsistentSolution {
    pub w: Complex64,
    pub z: Complex64,
    pub mc: Complex64,
    pub residual: f64,
    pub certificate: BranchCertificate,
}

fn edge_degenerate(roots: &[Complex64; 3], selected: Complex64) -> bool {
    let scale = selected.norm().max(1.0);
    (0..3).any(|a| ((a + 1)..3).any(|b| (roots[a] - roots[b]).norm() < EDGE_TOL * scale))
}

/// Index of the root nearest `target`, plus the nearest and second distances.
fn nearest(roots: &[Complex64; 3], target: Complex64) -> (usize, f64, f64) {
    let mut d: Vec<(usize, f64)> = roots.iter().map(|r| (r - target).norm()).enumerate().collect();
    d.sort_by(|a, b| a.1.total_cmp(&b.1));
    (d[0].0, d[0].1, d[1].1)
}

/// Point on the continuation path: real part linear, imaginary part geometric.
fn path(from: Complex64, to: Complex64, s: f64) -> Complex64 {
    let re = from.re + (to.re - from.re) * s;
    let im = from.im.powf(1.0 - s) * to.im.powf(s);
    Complex64::new(re, im)
}

struct Tracker {
    equation: Equation,
    z2: f64,
    steps: usize,
}

impl Tracker {
    /// Follows the root `m_from` at `path(s0)` to `path(s1)`, bisecting up to
    /// `MAX_REFINEMENT` times when the match is not clean.
    fn step(
        &mut self,
        from: Complex64,
        to: Complex64,
        m_from: Complex64,
        s0: f64,
        s1: f64,
        depth: u32,
    ) -> Result<Complex64> {
        let w = path(from, to, s1);
        let roots = self.equation.roots(w, self.z2);
        let (k, d1, d2) = nearest(&roots, m_from);
        self.steps += 1;
        if d1 <= MATCH_RADIUS * m_from.norm() && d1 < 0.5 * d2 {
            return Ok(roots[k]);
        }
        if depth >= MAX_REFINEMENT {
            return Err(Error::BranchAmbiguity {
                w,
                reason: format!(
                    "no root within {MATCH_RADIUS} x |m| of the tracked path after {MAX_REFINEMENT} refinements \
                     (nearest {d1:e}, runner-up {d2:e})"
                ),
            });
        }
        let mid = 0.5 * (s0 + s1);
        let m_mid = self.step(from, to, m_from, s0, mid, depth + 1)?;
        self.step(from, to, m_mid, mid, s1, depth + 1)
    }

    fn track(&mut self, from: Complex64, m_from: Complex64, to: Complex64) -> Result<Complex64> {
        let decades = (from.im / to.im).ln().abs();
        let segments = ((decades / 1.5f64.ln()).ceil() as usize).max(1)
            + ((to.re - from.re).abs() / 0.25).ceil() as usize;
        let mut m = m_from;
        for k in 0..segments {
            let s0 = k as f64 / segments as f64;
            let s1 = (k + 1) as f64 / segments as f64;
            m = self.step(from, to, m, s0, s1, 0)?;
        }
        Ok(m)
    }
}

fn finish(
    equation: Equation,
    w: Complex64,
    z: Complex64,
    roots: [Complex64; 3],
    selected: usize,
    rule: SelectionRule,
    steps: usize,
) -> Result<SelfConsistentSolution> {
    let mc = roots[selected];
    if !(mc.im > 0.0) {
        return Err(Error::BranchAmbiguity {
            w,
            reason: format!("selected root {mc} is not in the upper half plane"),
        });
    }
    let z2 = z.norm_sqr();
    let residual = equation.residual(mc, w, z2);
    if !(residual <= RESIDUAL_TOL) {
        return Err(Error::BranchAmbiguity {
            w,
            reason: format!("residual {residual:e} of root {mc} exceeds {RESIDUAL_TOL:e}"),
        });
    }
    Ok(SelfConsistentSolution {
        w,
        z,
        mc,
        residual,
        certificate: BranchCertificate {
            roots,
            selected,
            rule,
            edge_degenerate: edge_degenerate(&roots, mc),
            continuation_steps: steps,
        },
    })
}

/// Solves either equation at `w` (`Im w > 0`), selecting the physical root.
pub fn solve(equation: Equation, w: Complex64, z: Complex64) -> Result<SelfConsistentSolution> {
    if !(w.im > 0.0) || !w.re.is_finite() || !w.im.is_finite() {
        return Err(Error::Domain(format!("need Im w > 0, got w = {w}")));
    }
    let z2 = z.norm_sqr();
    let roots = equation.roots(w, z2);
    let positive: Vec<usize> = (0..3).filter(|&k| roots[k].im > 0.0).collect();
    if positive.len() == 1 {
        return finish(equation, w, z, roots, positive[0], SelectionRule::UniquePositive, 0);
    }

    let start = Complex64::new(w.re, w.im.max(CONTINUATION_START));
    let start_roots = equation.roots(start, z2);
    let asymptote = -start.inv();
    let (k, d1, d2) = nearest(&start_roots, asymptote);
    if !(d1 < 0.5 * asymptote.norm() && d1 < 0.5 * d2) {
        return Err(Error::BranchAmbiguity {
            w: start,
            reason: format!("no root isolated near -1/w (nearest {d1:e}, runner-up {d2:e})"),
        });
    }
    let mut tracker = Tracker {
        equation,
        z2,
        steps: 0,
    };
    let m = if start == w {
        start_roots[k]
    } else {
        tracker.track(start, start_roots[k], w)?
    };
    let (selected, _, _) = nearest(&roots, m);
    finish(equation, w, z, roots, selected, SelectionRule::Continuation, tracker.steps)
}

/// `m_c(w, z)`.
pub fn solve_mc(w: Complex64, z: Complex64) -> Result<SelfConsistentSolution> {
    solve(Equation::Resolvent, w, z)
}

/// The Hermitized transform `m̲_c(w)`.
pub fn solve_mc_hermitized(w: Complex64, z: Complex64) -> Result<SelfConsistentSolution> {
    solve(Equation::Hermitized, w, z)
}

/// `lim_{η→0+} √(iη) m_c(iη, z) = i √(1 - |z|²)` for `|z| < 1`.
pub fn mc_limit(z: Complex64) -> Result<Complex64> {
    let z2 = z.norm_sqr();
    if !(z2 < 1.0) {
        return Err(Error::Domain(format!("small-eta limit needs |z| < 1, got |z| = {}", z.norm())));
    }
    Ok(Complex64::new(0.0, (1.0 - z2).sqrt()))
}

/// `m_c(iη, z)` along non-increasing `etas`, each point continued from the
/// previous one.
pub fn mc_curve(z: Complex64, etas: &[f64]) -> Result<Vec<SelfConsistentSolution>> {
    if let Some(bad) = etas.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(Error::Domain(format!("eta must be positive and finite, got {bad}")));
    }
    if etas.windows(2).any(|p| p[1] > p[0]) {
        return Err(Error::Domain("etas must be sorted in descending order".into()));
    }
    let Some(&first) = etas.first() else {
        return Ok(Vec::new());
    };
    let z2 = z.norm_sqr();
    let mut out = Vec::with_capacity(etas.len());
    out.push(solve_mc(Complex64::new(0.0, first), z)?);
    for &eta in &etas[1..] {
        let prev = out.last().expect("nonempty");
        let w = Complex64::new(0.0, eta);
        let mut tracker = Tracker {
            equation: Equation::Resolvent,
            z2,
            steps: 0,
        };
        let m = if eta == prev.w.im {
            prev.mc
        } else {
            tracker.track(prev.w, prev.mc, w).map_err(|e| match e {
                Error::BranchAmbiguity { reason, .. } => Error::BranchAmbiguity {
                    w,
                    reason: format!("continuation to eta = {eta}: {reason}"),
                },
                other => other,
            })?
        };
        let roots = Equation::Resolvent.roots(w, z2);
        let (selected, _, _) = nearest(&roots, m);
        out.push(finish(
            Equation::Resolvent,
            w,
            z,
            roots,
            selected,
            SelectionRule::Continuation,
            tracker.steps,
        )?);
    }
    Ok(out)
}

/// `count` geometrically spaced values from `max` down to `min`.
pub fn geometric_grid(max: f64, min: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![max],
        _ => {
            let ratio = (min / max).ln() / (count - 1) as f64;
            (0..count)
                .map(|k| {
                    if k == count - 1 {
                        min
                    } else {
                        max * (ratio * k as f64).exp()
                    }
                })
                .collect()
        }
    }
}
