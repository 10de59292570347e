//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Intervals are bisected in order of largest error estimate until the
//! summed estimate drops below the absolute tolerance. Bisection order is
//! deterministic so repeated runs give bit-identical results.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];

/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    /// Absolute tolerance on the whole integral.
    pub abs_tol: f64,
    /// Maximum number of panels kept at any time.
    pub max_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            abs_tol: 1e-11,
            max_panels: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod_panel<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[a, b]`, starting from `initial_panels` equal
/// panels.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    initial_panels: usize,
    options: QuadratureOptions,
) -> Result<QuadratureResult> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::domain(format!(
            "invalid integration range [{a}, {b}]"
        )));
    }
    let n = initial_panels.max(1);
    let width = (b - a) / n as f64;
    let mut panels: Vec<Panel> = (0..n)
        .map(|i| {
            let lo = a + width * i as f64;
            let hi = if i + 1 == n { b } else { lo + width };
            kronrod_panel(&mut f, lo, hi)
        })
        .collect();
    let mut evaluations = 15 * n;

    loop {
        let (value, error) = totals(&panels);
        if !value.is_finite() {
            return Err(Error::numerical(
                "integrand produced a non-finite value",
                value,
            ));
        }
        if error <= options.abs_tol {
            return Ok(QuadratureResult {
                value,
                error_estimate: error,
                evaluations,
            });
        }
        if panels.len() >= options.max_panels {
            return Err(Error::numerical(
                format!(
                    "quadrature did not converge: error estimate {error:.3e} > tolerance {:.3e}",
                    options.abs_tol
                ),
                value,
            ));
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("at least one panel");
        let Panel { a: lo, b: hi, .. } = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        panels.push(kronrod_panel(&mut f, lo, mid));
        panels.push(kronrod_panel(&mut f, mid, hi));
        evaluations += 30;
    }
}

fn totals(panels: &[Panel]) -> (f64, f64) {
    // Sort-free but order-stable summation: panels are summed by position.
    let mut ordered: Vec<&Panel> = panels.iter().collect();
    ordered.sort_by(|x, y| x.a.total_cmp(&y.a));
    ordered
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
}
