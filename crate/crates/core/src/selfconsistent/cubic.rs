//! Closed-form roots of complex cubics with Newton polishing.

use num_complex::Complex64;

const NEWTON_STEPS: usize = 6;

/// Roots of `c[0] m³ + c[1] m² + c[2] m + c[3]` (`c[0] != 0`).
///
/// Cardano's formula on the depressed cubic, choosing the square-root branch
/// that keeps `|u³|` large, followed by a few Newton steps per root.
pub fn cubic_roots(c: [Complex64; 4]) -> [Complex64; 3] {
    let b = c[1] / c[0];
    let cc = c[2] / c[0];
    let d = c[3] / c[0];
    let shift = b / 3.0;
    // m = t - b/3 gives t³ + p t + q = 0
    let p = cc - b * shift;
    let q = 2.0 * shift * shift * shift - shift * cc + d;

    let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    let u3 = {
        let plus = -q / 2.0 + disc;
        let minus = -q / 2.0 - disc;
        if plus.norm() >= minus.norm() {
            plus
        } else {
            minus
        }
    };
    let omega = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
    let mut roots = [Complex64::new(0.0, 0.0); 3];
    if u3.norm() == 0.0 {
        // p = q = 0: triple root
        roots = [-shift; 3];
    } else {
        let mut u = u3.cbrt();
        for r in roots.iter_mut() {
            *r = u - p / (3.0 * u) - shift;
            u *= omega;
        }
    }
    let monic = [Complex64::new(1.0, 0.0), b, cc, d];
    for r in roots.iter_mut() {
        *r = polish(monic, *r);
    }
    roots
}

/// Horner evaluation of the polynomial and its derivative.
pub fn eval(c: [Complex64; 4], m: Complex64) -> (Complex64, Complex64) {
    let value = ((c[0] * m + c[1]) * m + c[2]) * m + c[3];
    let deriv = (3.0 * c[0] * m + 2.0 * c[1]) * m + c[2];
    (value, deriv)
}

fn polish(c: [Complex64; 4], mut m: Complex64) -> Complex64 {
    let mut best = eval(c, m).0.norm();
    for _ in 0..NEWTON_STEPS {
        let (v, dv) = eval(c, m);
        if v.norm() == 0.0 || dv.norm() == 0.0 {
            break;
        }
        let next = m - v / dv;
        let nv = eval(c, next).0.norm();
        if !(nv < best) {
            break;
        }
        best = nv;
        m = next;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn expand(r: [Complex64; 3]) -> [Complex64; 4] {
        [
            c(1.0, 0.0),
            -(r[0] + r[1] + r[2]),
            r[0] * r[1] + r[0] * r[2] + r[1] * r[2],
            -(r[0] * r[1] * r[2]),
        ]
    }

    fn matches(found: [Complex64; 3], expected: [Complex64; 3], tol: f64) -> bool {
        let mut used = [false; 3];
        expected.iter().all(|e| {
            let hit = (0..3).find(|&k| !used[k] && (found[k] - e).norm() <= tol);
            hit.map(|k| used[k] = true).is_some()
        })
    }

    #[test]
    fn known_roots() {
        let r = [c(1.0, 0.0), c(-2.0, 0.5), c(0.0, 3.0)];
        let found = cubic_roots(expand(r));
        assert!(matches(found, r, 1e-12), "{found:?}");
    }

    #[test]
    fn triple_and_double_roots() {
        let r = [c(0.5, -1.0); 3];
        assert!(matches(cubic_roots(expand(r)), r, 1e-5));
        let r = [c(2.0, 0.0), c(2.0, 0.0), c(-1.0, 0.0)];
        assert!(matches(cubic_roots(expand(r)), r, 1e-6));
        let r = [c(0.0, 0.0); 3];
        assert_eq!(cubic_roots(expand(r)), r);
    }

    #[test]
    fn scaled_leading_coefficient() {
        let r = [c(0.1, 0.2), c(-3.0, 0.0), c(1.0, -1.0)];
        let mut coeffs = expand(r);
        let k = c(0.0, 1e-3);
        coeffs.iter_mut().for_each(|x| *x *= k);
        assert!(matches(cubic_roots(coeffs), r, 1e-10));
    }

    proptest! {
        #[test]
        fn roots_are_recovered(
            a in (-5.0..5.0f64, -5.0..5.0f64),
            b in (-5.0..5.0f64, -5.0..5.0f64),
            d in (-5.0..5.0f64, -5.0..5.0f64),
        ) {
            let r = [c(a.0, a.1), c(b.0, b.1), c(d.0, d.1)];
            let min_gap = (r[0] - r[1]).norm().min((r[0] - r[2]).norm()).min((r[1] - r[2]).norm());
            prop_assume!(min_gap > 1e-2);
            let found = cubic_roots(expand(r));
            prop_assert!(matches(found, r, 1e-8), "{:?} vs {:?}", found, r);
        }
    }
}
