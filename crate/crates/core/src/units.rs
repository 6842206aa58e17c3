//! Physical constants and the Hz <-> rad/s boundary.

use std::f64::consts::TAU;

/// Speed of light in vacuum, m/s (exact).
pub const C: f64 = 299_792_458.0;

pub fn mhz_to_rad_s(mhz: f64) -> f64 {
    mhz * 1e6 * TAU
}

pub fn rad_s_to_mhz(omega: f64) -> f64 {
    omega / TAU / 1e6
}

pub fn rad_s_to_hz(omega: f64) -> f64 {
    omega / TAU
}

/// Angular frequency of light with vacuum wavelength `lambda_m`.
pub fn omega_from_wavelength(lambda_m: f64) -> f64 {
    TAU * C / lambda_m
}

/// Exact product `a * b` as an unevaluated sum `hi + lo`.
pub(crate) fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let hi = a * b;
    (hi, a.mul_add(b, -hi))
}

/// Fractional part of `(num_hi + num_lo) / (den_hi + den_lo)` measured from the
/// nearest integer, in (-0.5, 0.5]. Carries roughly twice f64 precision through
/// the division so large cycle counts keep their sub-ulp remainder.
pub(crate) fn frac_of_quotient(num: (f64, f64), den: (f64, f64)) -> f64 {
    let q1 = num.0 / den.0;
    let rem = (-q1).mul_add(den.0, num.0) + num.1 - q1 * den.1;
    let q2 = rem / den.0;
    let n = q1.round();
    (q1 - n) + q2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mhz_round_trip() {
        for f in [0.5, 3.0, 7.95, 299.792458] {
            let back = rad_s_to_mhz(mhz_to_rad_s(f));
            assert!((back - f).abs() <= 1e-12 * f);
        }
    }

    #[test]
    fn quotient_remainder_resolves_below_ulp() {
        // 1e6 + 0.25 cycles; q1 alone would keep the quarter but lose the tail.
        let num = two_prod(1_000_000.25, 3.0);
        let f = frac_of_quotient(num, (3.0, 0.0));
        assert!((f - 0.25).abs() < 1e-12);
    }
}
