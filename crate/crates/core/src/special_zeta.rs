//! Riemann zeta `ζ(s) = Σ_{k≥1} k^{-s}`, the half-shifted zeta
//! `ζ̃(s) = Σ_{k≥1} (k - 1/2)^{-s}`, and the boundary zeta functions of the
//! unit-half-length interval built from them.
//!
//! Series are summed directly up to a cutoff and the tail is replaced by an
//! Euler–Maclaurin expansion. The same expansion is the analytic
//! continuation of the series, so the `*_continued` evaluators are valid for
//! every real `s > -5` except the pole at `s = 1`.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of directly summed terms for convergent arguments.
const CUTOFF: usize = 10_000;

/// Number of directly summed terms when `s ≤ 3/2`. Larger heads would cancel
/// catastrophically against the growing Euler–Maclaurin tail.
const CONTINUATION_CUTOFF: usize = 100;

/// `B_{2j} / (2j)!` for `j = 1..=4`, followed by the `j = 5` coefficient used
/// only for the truncation bound.
const BERNOULLI_OVER_FACTORIAL: [f64; 5] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
];

/// Value and first derivative of a zeta function at `s = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaValue {
    pub value_at_0: f64,
    pub deriv_at_0: f64,
    /// Bound on the truncation error of whatever series or quadrature
    /// produced the two numbers. Zero for stored constants.
    pub error_bound: f64,
}

impl ZetaValue {
    pub const fn exact(value_at_0: f64, deriv_at_0: f64) -> Self {
        ZetaValue {
            value_at_0,
            deriv_at_0,
            error_bound: 0.0,
        }
    }

    /// Zeta data of `s ↦ prefactor · base^{2s} · Z(2s)` given the data of `Z`.
    pub fn rescaled(self, prefactor: f64, base: f64) -> Self {
        ZetaValue {
            value_at_0: prefactor * self.value_at_0,
            deriv_at_0: 2.0 * base.ln() * prefactor * self.value_at_0
                + 2.0 * prefactor * self.deriv_at_0,
            error_bound: prefactor.abs() * (1.0 + 2.0 * base.ln().abs()) * self.error_bound,
        }
    }
}

/// `Σ_{k≥0} (k + shift)^{-s}` with Euler–Maclaurin tail, together with a
/// bound on the neglected remainder.
fn shifted_series(s: f64, shift: f64) -> (f64, f64) {
    let cutoff = if s > 1.5 { CUTOFF } else { CONTINUATION_CUTOFF };
    let n = cutoff as f64 + shift;
    // Smallest terms first.
    let head: f64 = (0..cutoff).rev().map(|k| (k as f64 + shift).powf(-s)).sum();

    let mut tail = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // Rising factorial s(s+1)...(s+2j-2) times n^{-s-2j+1}.
    let mut rising = s;
    let mut power = n.powf(-s - 1.0);
    for (j, coeff) in BERNOULLI_OVER_FACTORIAL[..4].iter().enumerate() {
        tail += coeff * rising * power;
        let next = 2.0 * (j as f64 + 1.0);
        rising *= (s + next - 1.0) * (s + next);
        power /= n * n;
    }
    let bound = (BERNOULLI_OVER_FACTORIAL[4] * rising * power).abs();
    (head + tail, bound)
}

/// `ζ(s)` for `s > 1`.
pub fn riemann_zeta(s: f64) -> Result<f64> {
    if s.is_nan() || s <= 1.0 {
        return Err(Error::domain(format!(
            "riemann_zeta needs s > 1, got {s}; use riemann_zeta_at_0 for s = 0"
        )));
    }
    Ok(shifted_series(s, 1.0).0)
}

/// `ζ̃(s) = Σ_{k≥1} (k - 1/2)^{-s}` for `s > 1`.
pub fn shifted_zeta(s: f64) -> Result<f64> {
    if s.is_nan() || s <= 1.0 {
        return Err(Error::domain(format!("shifted_zeta needs s > 1, got {s}")));
    }
    Ok(shifted_series(s, 0.5).0)
}

fn check_continuation_domain(s: f64) -> Result<()> {
    if s.is_nan() || s <= -5.0 || (s - 1.0).abs() < 1e-12 {
        return Err(Error::domain(format!(
            "continued zeta evaluated outside (-5, ∞) \\ {{1}}: {s}"
        )));
    }
    Ok(())
}

/// Analytic continuation of `ζ` to `s > -5`, `s ≠ 1`.
pub fn riemann_zeta_continued(s: f64) -> Result<f64> {
    check_continuation_domain(s)?;
    Ok(shifted_series(s, 1.0).0)
}

/// Analytic continuation of `ζ̃` to `s > -5`, `s ≠ 1`.
pub fn shifted_zeta_continued(s: f64) -> Result<f64> {
    check_continuation_domain(s)?;
    Ok(shifted_series(s, 0.5).0)
}

/// `ζ(0) = -1/2`, `ζ'(0) = -log(2π)/2`.
pub fn riemann_zeta_at_0() -> ZetaValue {
    ZetaValue::exact(-0.5, -0.5 * (2.0 * PI).ln())
}

/// `ζ̃(0) = 0`, `ζ̃'(0) = -log(2)/2`.
pub fn shifted_zeta_at_0() -> ZetaValue {
    ZetaValue::exact(0.0, -0.5 * LN_2)
}

/// `ζ_{D,D}(s) = 2 (2/π)^{2s} ζ(2s)` for `s > 1/2`.
pub fn zeta_dd_closed(s: f64) -> Result<f64> {
    Ok(2.0 * (2.0 / PI).powf(2.0 * s) * riemann_zeta(2.0 * s)?)
}

/// `ζ_{D,N}(s) = 2 (2/π)^{2s} ζ̃(2s)` for `s > 1/2`.
pub fn zeta_dn_closed(s: f64) -> Result<f64> {
    Ok(2.0 * (2.0 / PI).powf(2.0 * s) * shifted_zeta(2.0 * s)?)
}

/// Value and derivative at 0 of [`zeta_dd_closed`], by the product rule on
/// the stored `ζ(0)`, `ζ'(0)`.
pub fn zeta_dd_closed_at_0() -> ZetaValue {
    riemann_zeta_at_0().rescaled(2.0, 2.0 / PI)
}

/// Value and derivative at 0 of [`zeta_dn_closed`].
pub fn zeta_dn_closed_at_0() -> ZetaValue {
    shifted_zeta_at_0().rescaled(2.0, 2.0 / PI)
}

/// Central difference of `s ↦ prefactor · base^{2s} · Z(2s)` at `s = 0`,
/// where `Z` is a continued zeta evaluator.
pub fn central_difference_at_0(
    zeta: fn(f64) -> Result<f64>,
    prefactor: f64,
    base: f64,
    step: f64,
) -> Result<f64> {
    let f = |s: f64| -> Result<f64> { Ok(prefactor * base.powf(2.0 * s) * zeta(2.0 * s)?) };
    Ok((f(step)? - f(-step)?) / (2.0 * step))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force partial sum with an integral tail, independent of the
    /// Euler–Maclaurin path.
    fn brute_force(s: f64, shift: f64, terms: usize) -> f64 {
        let head: f64 = (0..terms).rev().map(|k| (k as f64 + shift).powf(-s)).sum();
        let n = terms as f64 + shift;
        head + n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s)
    }

    #[test]
    fn even_values_match_closed_forms() {
        assert!((riemann_zeta(2.0).unwrap() - PI * PI / 6.0).abs() < 1e-12);
        assert!((riemann_zeta(4.0).unwrap() - PI.powi(4) / 90.0).abs() < 1e-12);
    }

    #[test]
    fn zeta_ten_matches_direct_series() {
        let direct: f64 = (1..=40).rev().map(|k| (k as f64).powf(-10.0)).sum();
        assert!((riemann_zeta(10.0).unwrap() - direct).abs() < 1e-12);
        assert!((riemann_zeta(10.0).unwrap() - 1.000_994_575_127_818).abs() < 1e-12);
    }

    #[test]
    fn agrees_with_million_term_oracle() {
        for s in [1.5, 2.0, 3.0, 5.0] {
            let oracle = brute_force(s, 1.0, 1_000_000);
            assert!((riemann_zeta(s).unwrap() - oracle).abs() < 1e-11, "s = {s}");
        }
    }

    #[test]
    fn rejects_s_at_most_one() {
        assert!(matches!(riemann_zeta(1.0), Err(Error::Domain(_))));
        assert!(matches!(riemann_zeta(0.0), Err(Error::Domain(_))));
        assert!(shifted_zeta(0.5).is_err());
    }

    #[test]
    fn stored_constants() {
        let z = riemann_zeta_at_0();
        assert_eq!(z.value_at_0, -0.5);
        assert!((z.deriv_at_0 + 0.918_938_533_204_672_7).abs() < 1e-15);
        assert!((z.deriv_at_0 + 0.5 * (LN_2 + PI.ln())).abs() < 1e-15);
        assert_eq!(z.error_bound, 0.0);
        let zt = shifted_zeta_at_0();
        assert_eq!(zt.value_at_0, 0.0);
        assert!((zt.deriv_at_0 + 0.346_573_590_279_973).abs() < 1e-15);
    }

    #[test]
    fn shifted_zeta_functional_identity() {
        assert!((shifted_zeta(2.0).unwrap() - PI * PI / 2.0).abs() < 1e-10);
        for s in [1.5, 2.0, 3.0, 4.0, 5.0] {
            let lhs = shifted_zeta(s).unwrap();
            let rhs = (2f64.powf(s) - 1.0) * riemann_zeta(s).unwrap();
            assert!((lhs - rhs).abs() < 1e-10, "s = {s}");
            let oracle = brute_force(s, 0.5, 1_000_000);
            assert!((lhs - oracle).abs() < 1e-10, "s = {s}");
        }
    }

    #[test]
    fn boundary_zeta_derivatives() {
        assert!((zeta_dd_closed_at_0().deriv_at_0 + 4.0 * LN_2).abs() < 1e-12);
        assert!((zeta_dn_closed_at_0().deriv_at_0 + 2.0 * LN_2).abs() < 1e-12);
        assert_eq!(zeta_dn_closed_at_0().value_at_0, 0.0);
        assert_eq!(zeta_dd_closed_at_0().value_at_0, -1.0);
    }

    #[test]
    fn closed_forms_match_direct_sums() {
        let s = 1.5;
        let dd: f64 = 2.0
            * (1..200_000)
                .rev()
                .map(|k| (k as f64 * PI / 2.0).powf(-2.0 * s))
                .sum::<f64>();
        assert!((zeta_dd_closed(s).unwrap() - dd).abs() < 1e-9);
    }

    #[test]
    fn continuation_reproduces_stored_values() {
        assert!((riemann_zeta_continued(0.0).unwrap() + 0.5).abs() < 1e-12);
        assert!(shifted_zeta_continued(0.0).unwrap().abs() < 1e-12);
        // ζ(-1) = -1/12
        assert!((riemann_zeta_continued(-1.0).unwrap() + 1.0 / 12.0).abs() < 1e-12);
        assert!(riemann_zeta_continued(1.0).is_err());
        assert!(riemann_zeta_continued(-6.0).is_err());
    }

    #[test]
    fn chain_rule_matches_central_differences() {
        for (prefactor, base) in [(2.0, 2.0 / PI), (1.0, 4.0 / PI), (3.0, 1.7)] {
            let analytic = riemann_zeta_at_0().rescaled(prefactor, base).deriv_at_0;
            let fd =
                central_difference_at_0(riemann_zeta_continued, prefactor, base, 1e-5).unwrap();
            assert!((analytic - fd).abs() < 1e-7, "A = {prefactor}, B = {base}");
            let analytic = shifted_zeta_at_0().rescaled(prefactor, base).deriv_at_0;
            let fd =
                central_difference_at_0(shifted_zeta_continued, prefactor, base, 1e-5).unwrap();
            assert!((analytic - fd).abs() < 1e-7);
        }
    }

    #[test]
    fn truncation_bounds_are_small_and_nonnegative() {
        for s in [1.5, 2.0, 3.0, 5.0] {
            let (_, bound) = shifted_series(s, 1.0);
            assert!((0.0..1e-12).contains(&bound));
        }
    }
}
