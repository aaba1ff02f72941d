//! Minimal raster plots: no text, just axes frames, points, lines and bars.

use std::path::Path;

use image::{Rgb, RgbImage};

use super::{ExperimentKind, ExperimentReport, TrialStats};
use crate::error::{Error, Result};

pub(crate) const WIDTH: u32 = 640;
pub(crate) const HEIGHT: u32 = 480;
const MARGIN: u32 = 40;

const BLACK: Rgb<u8> = Rgb([0, 0, 0]);
const GRID: Rgb<u8> = Rgb([225, 225, 225]);
const BLUE: Rgb<u8> = Rgb([31, 119, 180]);
const RED: Rgb<u8> = Rgb([214, 39, 40]);

pub(crate) struct Canvas {
    img: RgbImage,
    x: (f64, f64),
    y: (f64, f64),
}

impl Canvas {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let img = RgbImage::from_pixel(WIDTH, HEIGHT, Rgb([255, 255, 255]));
        Canvas { img, x, y }
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        let w = (WIDTH - 2 * MARGIN) as f64;
        let h = (HEIGHT - 2 * MARGIN) as f64;
        let u = MARGIN as f64 + (x - self.x.0) / (self.x.1 - self.x.0) * w;
        let v = (HEIGHT - MARGIN) as f64 - (y - self.y.0) / (self.y.1 - self.y.0) * h;
        (u, v)
    }

    fn put(&mut self, u: f64, v: f64, c: Rgb<u8>) {
        let (lo, hi_u, hi_v) = (MARGIN as f64, (WIDTH - MARGIN) as f64, (HEIGHT - MARGIN) as f64);
        if (lo..=hi_u).contains(&u) && (lo..=hi_v).contains(&v) {
            self.img.put_pixel(u.round() as u32, v.round() as u32, c);
        }
    }

    fn line(&mut self, a: (f64, f64), b: (f64, f64), c: Rgb<u8>) {
        let (u0, v0) = self.px(a.0, a.1);
        let (u1, v1) = self.px(b.0, b.1);
        let steps = (u1 - u0).abs().max((v1 - v0).abs()).ceil().clamp(1.0, 1e4) as usize;
        for k in 0..=steps {
            let t = k as f64 / steps as f64;
            self.put(u0 + t * (u1 - u0), v0 + t * (v1 - v0), c);
        }
    }

    fn polyline(&mut self, pts: &[(f64, f64)], c: Rgb<u8>) {
        for p in pts.windows(2) {
            self.line(p[0], p[1], c);
        }
    }

    fn dot(&mut self, x: f64, y: f64, c: Rgb<u8>) {
        let (u, v) = self.px(x, y);
        for du in -1..=1 {
            for dv in -1..=1 {
                self.put(u + du as f64, v + dv as f64, c);
            }
        }
    }

    fn bar(&mut self, x0: f64, x1: f64, height: f64, c: Rgb<u8>) {
        let (u0, v0) = self.px(x0, 0.0);
        let (u1, v1) = self.px(x1, height);
        for u in u0.round() as i64..u1.round() as i64 {
            for v in v1.round() as i64..=v0.round() as i64 {
                self.put(u as f64, v as f64, c);
            }
        }
    }

    fn frame(&mut self) {
        let (x, y) = (self.x, self.y);
        for (a, b) in [
            ((x.0, y.0), (x.1, y.0)),
            ((x.1, y.0), (x.1, y.1)),
            ((x.1, y.1), (x.0, y.1)),
            ((x.0, y.1), (x.0, y.0)),
        ] {
            self.line(a, b, BLACK);
        }
    }

    /// Light lines at integer coordinates (decades on log axes).
    fn integer_grid(&mut self) {
        let (x, y) = (self.x, self.y);
        for k in x.0.ceil() as i64..=x.1.floor() as i64 {
            self.line((k as f64, y.0), (k as f64, y.1), GRID);
        }
        for k in y.0.ceil() as i64..=y.1.floor() as i64 {
            self.line((x.0, k as f64), (x.1, k as f64), GRID);
        }
    }

    pub(crate) fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.img
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| match e {
                image::ImageError::IoError(io) => Error::io(path, io),
                other => Error::Format {
                    path: path.to_owned(),
                    reason: other.to_string(),
                },
            })
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn scatter(report: &ExperimentReport) -> Canvas {
    let aspect = (WIDTH - 2 * MARGIN) as f64 / (HEIGHT - 2 * MARGIN) as f64;
    let r = 1.5;
    let mut c = Canvas::new((-r * aspect, r * aspect), (-r, r));
    c.line((-r * aspect, 0.0), (r * aspect, 0.0), GRID);
    c.line((0.0, -r), (0.0, r), GRID);
    for s in report.trials.iter().filter_map(|t| t.outcome.as_ref().ok()) {
        if let TrialStats::Circlaw { eigenvalues, .. } = s {
            for l in eigenvalues {
                c.dot(l.re, l.im, BLUE);
            }
        }
    }
    let circle: Vec<(f64, f64)> = (0..=720)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / 720.0;
            (t.cos(), t.sin())
        })
        .collect();
    c.polyline(&circle, RED);
    c.frame();
    c
}

fn error_curve(report: &ExperimentReport) -> Canvas {
    // median |m - m_c| per η over successful trials
    let mut per_eta: Vec<(f64, Vec<f64>)> = Vec::new();
    for s in report.trials.iter().filter_map(|t| t.outcome.as_ref().ok()) {
        if let TrialStats::Locallaw { points } = s {
            for (k, p) in points.iter().enumerate() {
                if per_eta.len() <= k {
                    per_eta.push((p.eta, Vec::new()));
                }
                per_eta[k].1.push(p.abs_err);
            }
        }
    }
    let measured: Vec<(f64, f64)> = per_eta
        .iter()
        .filter_map(|(eta, errs)| {
            let m = super::Summary::of(errs)?.median;
            (m > 0.0).then(|| (eta.log10(), m.log10()))
        })
        .collect();
    let w = report.config.w as f64;
    let reference: Vec<(f64, f64)> = per_eta
        .iter()
        .map(|(eta, _)| (eta.log10(), (w.powf(-0.5) * eta.powf(-0.75)).log10()))
        .collect();
    let all = measured.iter().chain(&reference);
    let (xl, xh) = all.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.0), a.1.max(p.0)));
    let (yl, yh) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.1), a.1.max(p.1)));
    let mut c = Canvas::new(padded(xl, xh), padded(yl, yh));
    c.integer_grid();
    c.polyline(&reference, RED);
    c.polyline(&measured, BLUE);
    for &(x, y) in &measured {
        c.dot(x, y, BLUE);
    }
    c.frame();
    c
}

fn histogram(values: &[f64], marker: Option<f64>) -> Canvas {
    let v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, &x| (a.0.min(x), a.1.max(x)));
    let (lo, hi) = if v.is_empty() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    };
    let bins = ((v.len() as f64).sqrt().ceil() as usize).clamp(5, 40);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for x in &v {
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let top = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let mut c = Canvas::new(padded(lo, hi), (0.0, 1.05 * top));
    for (k, &n) in counts.iter().enumerate() {
        let x0 = lo + k as f64 * width;
        c.bar(x0, x0 + width, n as f64, BLUE);
    }
    if let Some(m) = marker.filter(|m| m.is_finite()) {
        c.line((m, 0.0), (m, 1.05 * top), RED);
    }
    c.frame();
    c
}

pub(crate) fn render(report: &ExperimentReport) -> Canvas {
    let ok = || report.trials.iter().filter_map(|t| t.outcome.as_ref().ok());
    match report.config.kind {
        ExperimentKind::Circlaw => scatter(report),
        ExperimentKind::Locallaw => error_curve(report),
        ExperimentKind::Singcount => histogram(&report.values("count"), None),
        ExperimentKind::Leastsing => {
            let marker = ok().find_map(|s| match s {
                TrialStats::Leastsing { thresh_2_10, .. } => Some(thresh_2_10.log10()),
                _ => None,
            });
            histogram(&report.values("log10_sigma_min"), marker)
        }
        ExperimentKind::Replacement => histogram(&report.values("delta"), None),
        ExperimentKind::Normcond => {
            let norms: Vec<f64> = ok()
                .flat_map(|s| match s {
                    TrialStats::Normcond { scan, .. } => scan.norms().collect(),
                    _ => Vec::new(),
                })
                .collect();
            histogram(&norms, None)
        }
        ExperimentKind::Mc => {
            let im: Vec<f64> = ok()
                .flat_map(|s| match s {
                    TrialStats::Mc { points } => points.iter().map(|p| p.mc.im).collect(),
                    _ => Vec::new(),
                })
                .collect();
            histogram(&im, None)
        }
    }
}
