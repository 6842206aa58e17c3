//! Bracketed scalar root finding.
//!
//! Bisection only: every caller in this crate has a sign-changing bracket and
//! cares more about guaranteed convergence than about iteration counts.

use crate::error::{Error, Result};

/// Stopping rule: the bracket width must fall below `abs + rel * |x|`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn absolute(abs: f64) -> Self {
        Self { abs, rel: 0.0 }
    }

    pub fn relative(rel: f64) -> Self {
        Self { abs: 0.0, rel }
    }

    fn satisfied(&self, lo: f64, hi: f64) -> bool {
        let mid = 0.5 * (lo + hi);
        (hi - lo).abs() <= self.abs + self.rel * mid.abs()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub x: f64,
    pub iterations: usize,
}

const MAX_ITER: usize = 400;

/// Bisection on `[lo, hi]`. `f(lo)` and `f(hi)` must differ in sign (a zero at
/// either end is returned directly).
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, tol: Tolerance) -> Result<Root>
where
    F: FnMut(f64) -> f64,
{
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(Root { x: lo, iterations: 0 });
    }
    if f_hi == 0.0 {
        return Ok(Root { x: hi, iterations: 0 });
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::NotBracketed { lo, hi, f_lo, f_hi });
    }

    let mut iterations = 0;
    while !tol.satisfied(lo, hi) && iterations < MAX_ITER {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(Root { x: mid, iterations });
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(Root { x: 0.5 * (lo + hi), iterations })
}

/// Bisection in `ln x` for a strictly positive bracket. The relative
/// tolerance applies to `x` itself.
pub fn bisect_log<F>(mut f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<Root>
where
    F: FnMut(f64) -> f64,
{
    if !(lo > 0.0 && hi > 0.0) {
        return Err(Error::InvalidInput(format!(
            "log bracket must be positive, got [{lo}, {hi}]"
        )));
    }
    // |d ln x| <= rel_tol  <=>  relative step in x below rel_tol (to first order).
    let root = bisect(|u| f(u.exp()), lo.ln(), hi.ln(), Tolerance::absolute(rel_tol))?;
    Ok(Root { x: root.x.exp(), iterations: root.iterations })
}

/// Scan a log-spaced grid on `[lo, hi]` and bisect the first sign change.
/// Returns `Ok(None)` when no sign change is found.
pub fn first_crossing_log<F>(
    mut f: F,
    lo: f64,
    hi: f64,
    per_decade: usize,
    rel_tol: f64,
) -> Result<Option<Root>>
where
    F: FnMut(f64) -> f64,
{
    let decades = (hi / lo).log10();
    let steps = ((decades * per_decade as f64).ceil() as usize).max(1);
    let ratio = (hi / lo).powf(1.0 / steps as f64);

    let mut prev_x = lo;
    let mut prev_f = f(lo);
    let mut evaluations = 1;
    if prev_f == 0.0 {
        return Ok(Some(Root { x: lo, iterations: evaluations }));
    }
    for i in 1..=steps {
        let x = if i == steps { hi } else { lo * ratio.powi(i as i32) };
        let fx = f(x);
        evaluations += 1;
        if fx == 0.0 {
            return Ok(Some(Root { x, iterations: evaluations }));
        }
        if fx.signum() != prev_f.signum() && !fx.is_nan() && !prev_f.is_nan() {
            let root = bisect_log(&mut f, prev_x, x, rel_tol)?;
            return Ok(Some(Root { x: root.x, iterations: evaluations + root.iterations }));
        }
        prev_x = x;
        prev_f = fx;
    }
    Ok(None)
}
