//! Scalar root bracketing and refinement.

use crate::error::Result;

/// Default number of scan samples when bracketing over a window.
pub(crate) const SCAN_SAMPLES: usize = 96;

/// Refines a root of `f` inside `[a, b]`, where `f(a)` and `f(b)` differ in sign.
///
/// Secant steps are taken while they stay inside the bracket and at least halve it
/// every other step; otherwise the bracket is bisected. Stops at `|f| < tol` or when
/// the bracket collapses to adjacent floats.
pub(crate) fn refine(
    f: &mut impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut fa: f64,
    mut b: f64,
    mut fb: f64,
    tol: f64,
) -> Result<f64> {
    let best = |a: f64, fa: f64, b: f64, fb: f64| if fa.abs() <= fb.abs() { a } else { b };
    let mut force_bisect = false;
    let mut width = b - a;
    for _ in 0..400 {
        if fa.abs() < tol {
            return Ok(a);
        }
        if fb.abs() < tol {
            return Ok(b);
        }
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            return Ok(best(a, fa, b, fb));
        }
        let secant = b - fb * (b - a) / (fb - fa);
        let c = if !force_bisect && secant > a && secant < b {
            secant
        } else {
            mid
        };
        let fc = f(c)?;
        if fc == 0.0 || fc.abs() < tol {
            return Ok(c);
        }
        if (fc < 0.0) == (fa < 0.0) {
            a = c;
            fa = fc;
        } else {
            b = c;
            fb = fc;
        }
        force_bisect = (b - a) > 0.5 * width;
        width = b - a;
    }
    Ok(best(a, fa, b, fb))
}

/// Lowest root of `f` on `[lo, hi]` found by a uniform scan followed by refinement.
///
/// Samples where `f` fails are treated as gaps when `skip_errors` is set; otherwise
/// the first failure is returned.
pub(crate) fn first_root(
    mut f: impl FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    samples: usize,
    tol: f64,
    skip_errors: bool,
) -> Result<Option<f64>> {
    let samples = samples.max(2);
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..samples {
        let x = if i + 1 == samples {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (samples - 1) as f64
        };
        let fx = match f(x) {
            Ok(v) if v.is_finite() => v,
            Ok(_) => {
                prev = None;
                continue;
            }
            Err(e) => {
                if skip_errors {
                    prev = None;
                    continue;
                }
                return Err(e);
            }
        };
        if fx == 0.0 {
            return Ok(Some(x));
        }
        if let Some((px, pf)) = prev {
            if (pf < 0.0) != (fx < 0.0) {
                return refine(&mut f, px, pf, x, fx, tol).map(Some);
            }
        }
        prev = Some((x, fx));
    }
    Ok(None)
}
