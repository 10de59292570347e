//! Heat traces of one-dimensional model operators and their tensor products.
//!
//! Every one-dimensional family used here is a shifted lattice theta
//! function
//!
//! ```text
//! G(τ; P, a) = Σ_{k∈ℤ} exp(-τ (2π(k+a)/P)²)
//!            = P/√(4πτ) · Σ_{n∈ℤ} cos(2πna) exp(-n²P²/(4τ))
//! ```
//!
//! (circles of length `P` with holonomy `2πa`; intervals of half-length `l`
//! use `P = 4l` with `a = 0` or `a = 1/2`). The left form is the eigenvalue
//! series, the right form the method of images. Traces are carried around as
//! [`HeatSample`]s: the polynomial part of the small-time expansion is kept
//! symbolically and only the exponentially small remainder is a float, so
//! the cancellations that define torsion happen exactly.
//!
//! Two time conventions appear. Internally the Mellin variable is `τ` and
//! traces are `Σ exp(-τλ)`. The public interval functions take `t` with the
//! heat operator `exp((t/4)∂²)`, i.e. `τ = t/4`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureOptions};
use crate::special_zeta::ZetaValue;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponent beyond which `exp(-x)` is treated as zero relative to `O(1)`
/// quantities.
const NEGLIGIBLE_EXPONENT: f64 = 70.0;

/// Lower Mellin limit for remainders that vanish like `O(τ)`: the omitted
/// piece of `∫ R dτ/τ` is then `O(τ_lo)`.
pub(crate) const LINEAR_REMAINDER_CUTOFF: f64 = 1e-14;

/// Hard cap on image terms. The image series is only used when its decay
/// rate is at least π, so a handful of terms always suffices.
const MAX_IMAGES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarBc {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScalarBcPair {
    pub left: ScalarBc,
    pub right: ScalarBc,
}

impl ScalarBcPair {
    pub const DD: ScalarBcPair = ScalarBcPair::new(ScalarBc::Dirichlet, ScalarBc::Dirichlet);
    pub const NN: ScalarBcPair = ScalarBcPair::new(ScalarBc::Neumann, ScalarBc::Neumann);
    pub const DN: ScalarBcPair = ScalarBcPair::new(ScalarBc::Dirichlet, ScalarBc::Neumann);
    pub const ND: ScalarBcPair = ScalarBcPair::new(ScalarBc::Neumann, ScalarBc::Dirichlet);

    pub const fn new(left: ScalarBc, right: ScalarBc) -> Self {
        ScalarBcPair { left, right }
    }

    pub fn is_mixed(self) -> bool {
        self.left != self.right
    }

    pub fn label(self) -> &'static str {
        match (self.left, self.right) {
            (ScalarBc::Dirichlet, ScalarBc::Dirichlet) => "dd",
            (ScalarBc::Neumann, ScalarBc::Neumann) => "nn",
            (ScalarBc::Dirichlet, ScalarBc::Neumann) => "dn",
            (ScalarBc::Neumann, ScalarBc::Dirichlet) => "nd",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dd" => Ok(Self::DD),
            "nn" => Ok(Self::NN),
            "dn" => Ok(Self::DN),
            "nd" => Ok(Self::ND),
            other => Err(Error::Usage(format!("unknown boundary pair '{other}'"))),
        }
    }
}

/// Interval `[-l, l]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalSpec {
    half_length: f64,
}

impl IntervalSpec {
    pub fn new(half_length: f64) -> Result<Self> {
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(Error::domain(format!(
                "interval half-length must be positive, got {half_length}"
            )));
        }
        Ok(IntervalSpec { half_length })
    }

    pub fn unit() -> Self {
        IntervalSpec { half_length: 1.0 }
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    pub value: f64,
    pub multiplicity: u64,
}

// ---------------------------------------------------------------------------
// Samples: polynomial part + remainder
// ---------------------------------------------------------------------------

/// A heat trace at one time `τ`, split as
/// `Σ_i coeffs[i] τ^{-i/2} + remainder`. Derivatives are `τ ∂/∂τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatSample {
    pub tau: f64,
    pub coeffs: Vec<f64>,
    pub remainder: f64,
    pub remainder_deriv: f64,
}

impl HeatSample {
    pub fn zero(tau: f64) -> Self {
        HeatSample {
            tau,
            coeffs: Vec::new(),
            remainder: 0.0,
            remainder_deriv: 0.0,
        }
    }

    pub fn constant(tau: f64, c: f64) -> Self {
        HeatSample {
            tau,
            coeffs: vec![c],
            remainder: 0.0,
            remainder_deriv: 0.0,
        }
    }

    /// `exp(-τ)`, split as `1 + expm1(-τ)`.
    pub fn unit_exponential(tau: f64) -> Self {
        HeatSample {
            tau,
            coeffs: vec![1.0],
            remainder: (-tau).exp_m1(),
            remainder_deriv: -tau * (-tau).exp(),
        }
    }

    fn power(&self, i: usize) -> f64 {
        self.tau.powf(-(i as f64) / 2.0)
    }

    pub fn poly_value(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * self.power(i))
            .sum()
    }

    pub fn poly_deriv(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| -(i as f64) / 2.0 * c * self.power(i))
            .sum()
    }

    pub fn value(&self) -> f64 {
        self.poly_value() + self.remainder
    }

    /// `τ ∂/∂τ` of the trace.
    pub fn tau_deriv(&self) -> f64 {
        self.poly_deriv() + self.remainder_deriv
    }

    pub fn scaled(mut self, c: f64) -> Self {
        self.coeffs.iter_mut().for_each(|x| *x *= c);
        self.remainder *= c;
        self.remainder_deriv *= c;
        self
    }

    pub fn add_scaled(&mut self, other: &HeatSample, c: f64) {
        if self.coeffs.len() < other.coeffs.len() {
            self.coeffs.resize(other.coeffs.len(), 0.0);
        }
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += c * y;
        }
        self.remainder += c * other.remainder;
        self.remainder_deriv += c * other.remainder_deriv;
    }

    pub fn product(&self, other: &HeatSample) -> HeatSample {
        let mut coeffs = vec![0.0; (self.coeffs.len() + other.coeffs.len()).saturating_sub(1)];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        let (pa, da, ra, rda) = (
            self.poly_value(),
            self.poly_deriv(),
            self.remainder,
            self.remainder_deriv,
        );
        let (pb, db, rb, rdb) = (
            other.poly_value(),
            other.poly_deriv(),
            other.remainder,
            other.remainder_deriv,
        );
        HeatSample {
            tau: self.tau,
            coeffs,
            remainder: pa * rb + ra * pb + ra * rb,
            remainder_deriv: da * rb + pa * rdb + rda * pb + ra * db + rda * rb + ra * rdb,
        }
    }

    /// Applies `1 + 2τ ∂/∂τ`. Returns the transformed polynomial
    /// coefficients (coefficient of `τ^{-1/2}` is annihilated) and the
    /// transformed remainder.
    pub fn one_plus_two_tau_dtau(&self) -> (Vec<f64>, f64) {
        let poly = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| (1.0 - i as f64) * c)
            .collect();
        (poly, self.remainder + 2.0 * self.remainder_deriv)
    }
}

// ---------------------------------------------------------------------------
// Lattice theta functions
// ---------------------------------------------------------------------------

fn normalized_shift(a: f64) -> f64 {
    let r = a.rem_euclid(1.0);
    if (1.0 - r).abs() < 1e-15 {
        0.0
    } else {
        r
    }
}

/// Whether the image series converges at least as fast as the eigen series.
fn use_images(tau: f64, period: f64) -> bool {
    period * period / (4.0 * tau) >= PI
}

/// Eigen series of `G(τ; P, a)`: `(value, τ∂τ value)`.
pub fn lattice_theta_eigen(tau: f64, period: f64, shift: f64) -> (f64, f64) {
    let a = normalized_shift(shift);
    let rate = tau * (2.0 * PI / period).powi(2);
    let mut value = 0.0;
    let mut deriv = 0.0;
    // Two branches with increasing |k + a|: k ≥ 0 gives k + a, k < 0 gives
    // |k| - a. Each is summed until the exponent is negligible.
    for (first, sign) in [(0u64, 1.0), (1u64, -1.0)] {
        for k in first.. {
            let x = k as f64 + sign * a;
            let e = rate * x * x;
            let term = (-e).exp();
            value += term;
            deriv -= e * term;
            if e > NEGLIGIBLE_EXPONENT + 10.0 {
                break;
            }
        }
    }
    (value, deriv)
}

/// Image series of `G(τ; P, a)`: `(coefficient of τ^{-1/2}, remainder,
/// τ∂τ remainder)`.
pub fn lattice_theta_images(tau: f64, period: f64, shift: f64) -> (f64, f64, f64) {
    let a = normalized_shift(shift);
    let lead = period / (4.0 * PI).sqrt();
    let prefactor = lead / tau.sqrt();
    let mut rem = 0.0;
    let mut rem_d = 0.0;
    for n in 1..=MAX_IMAGES {
        let b = (n as f64 * period).powi(2) / (4.0 * tau);
        if b > NEGLIGIBLE_EXPONENT + 10.0 {
            break;
        }
        let c = 2.0 * (2.0 * PI * n as f64 * a).cos() * (-b).exp();
        rem += c;
        rem_d += c * (b - 0.5);
    }
    (lead, prefactor * rem, prefactor * rem_d)
}

/// `G(τ; P, a)` as a [`HeatSample`], choosing the faster series.
pub fn lattice_theta_sample(tau: f64, period: f64, shift: f64) -> HeatSample {
    let lead = period / (4.0 * PI).sqrt();
    if use_images(tau, period) {
        let (lead, rem, rem_d) = lattice_theta_images(tau, period, shift);
        HeatSample {
            tau,
            coeffs: vec![0.0, lead],
            remainder: rem,
            remainder_deriv: rem_d,
        }
    } else {
        let (value, deriv) = lattice_theta_eigen(tau, period, shift);
        let poly = lead / tau.sqrt();
        HeatSample {
            tau,
            coeffs: vec![0.0, lead],
            remainder: value - poly,
            remainder_deriv: deriv + 0.5 * poly,
        }
    }
}

// ---------------------------------------------------------------------------
// One-dimensional factors and spectral streams
// ---------------------------------------------------------------------------

/// A one-dimensional (or zero-dimensional) scalar spectral family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralFactor {
    /// `count` points: spectrum `{0}` with multiplicity `count`.
    Points { count: u64 },
    /// `λ_k = (2π(k + shift)/period)²`, `k ∈ ℤ`.
    Lattice { period: f64, shift: f64 },
    /// `-∂²` on `[-l, l]` with scalar boundary conditions.
    Interval { half_length: f64, bc: ScalarBcPair },
}

impl SpectralFactor {
    pub fn sample(&self, tau: f64) -> HeatSample {
        match *self {
            SpectralFactor::Points { count } => HeatSample::constant(tau, count as f64),
            SpectralFactor::Lattice { period, shift } => lattice_theta_sample(tau, period, shift),
            SpectralFactor::Interval { half_length, bc } => {
                let period = 4.0 * half_length;
                if bc.is_mixed() {
                    lattice_theta_sample(tau, period, 0.5).scaled(0.5)
                } else {
                    let zero = if bc == ScalarBcPair::NN { 0.5 } else { -0.5 };
                    let mut s = lattice_theta_sample(tau, period, 0.0).scaled(0.5);
                    s.coeffs[0] += zero;
                    s
                }
            }
        }
    }

    pub fn zero_modes(&self) -> u64 {
        match *self {
            SpectralFactor::Points { count } => count,
            SpectralFactor::Lattice { shift, .. } => u64::from(normalized_shift(shift) == 0.0),
            SpectralFactor::Interval { bc, .. } => u64::from(bc == ScalarBcPair::NN),
        }
    }

    /// Smallest eigenvalue (zero if there is a zero mode).
    pub fn bottom(&self) -> f64 {
        if self.zero_modes() > 0 {
            0.0
        } else {
            self.gap()
        }
    }

    /// Smallest positive eigenvalue (infinite for point sets).
    pub fn gap(&self) -> f64 {
        match *self {
            SpectralFactor::Points { .. } => f64::INFINITY,
            SpectralFactor::Lattice { period, shift } => {
                let a = normalized_shift(shift);
                let d = if a == 0.0 { 1.0 } else { a.min(1.0 - a) };
                (2.0 * PI * d / period).powi(2)
            }
            SpectralFactor::Interval { half_length, bc } => {
                let d = if bc.is_mixed() { 0.5 } else { 1.0 };
                (d * PI / (2.0 * half_length)).powi(2)
            }
        }
    }

    /// Shortest image period, which controls small-time decay of the
    /// remainder.
    pub fn period(&self) -> Option<f64> {
        match *self {
            SpectralFactor::Points { .. } => None,
            SpectralFactor::Lattice { period, .. } => Some(period),
            SpectralFactor::Interval { half_length, .. } => Some(4.0 * half_length),
        }
    }

    /// First `n` eigenpairs in nondecreasing order.
    pub fn first(&self, n: usize) -> Vec<Eigenpair> {
        let one = |value: f64| Eigenpair {
            value,
            multiplicity: 1,
        };
        match *self {
            SpectralFactor::Points { count } => vec![Eigenpair {
                value: 0.0,
                multiplicity: count,
            }]
            .into_iter()
            .take(n)
            .collect(),
            SpectralFactor::Interval { half_length, bc } => {
                let scale = PI / (2.0 * half_length);
                let start = if bc == ScalarBcPair::NN { 0 } else { 1 };
                (start..)
                    .map(|k| {
                        let x = if bc.is_mixed() {
                            k as f64 - 0.5
                        } else {
                            k as f64
                        };
                        one((x * scale).powi(2))
                    })
                    .take(n)
                    .collect()
            }
            SpectralFactor::Lattice { period, shift } => {
                let a = normalized_shift(shift);
                let scale = 2.0 * PI / period;
                let mut out = Vec::with_capacity(n);
                if a == 0.0 || a == 0.5 {
                    // Symmetric: ±x pairs collapse to multiplicity 2.
                    let mut m = 0u64;
                    while out.len() < n {
                        let x = m as f64 + a;
                        let mult = if x == 0.0 { 1 } else { 2 };
                        out.push(Eigenpair {
                            value: (x * scale).powi(2),
                            multiplicity: mult,
                        });
                        m += 1;
                    }
                } else {
                    let (mut up, mut down) = (0u64, 1u64);
                    while out.len() < n {
                        let xu = up as f64 + a;
                        let xd = down as f64 - a;
                        if xu <= xd {
                            out.push(one((xu * scale).powi(2)));
                            up += 1;
                        } else {
                            out.push(one((xd * scale).powi(2)));
                            down += 1;
                        }
                    }
                }
                out
            }
        }
    }
}

/// A tensor product of factors with a multiplicity (bundle rank, number of
/// components, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductTerm {
    pub factors: Vec<SpectralFactor>,
    pub multiplicity: u64,
}

impl ProductTerm {
    fn zero_modes(&self) -> u64 {
        self.multiplicity * self.factors.iter().map(|f| f.zero_modes()).product::<u64>()
    }

    fn gap(&self) -> f64 {
        let bottom: f64 = self.factors.iter().map(|f| f.bottom()).sum();
        if bottom > 0.0 {
            bottom
        } else {
            self.factors
                .iter()
                .map(|f| f.gap())
                .fold(f64::INFINITY, f64::min)
        }
    }

    fn sample(&self, tau: f64) -> HeatSample {
        let mut acc = HeatSample::constant(tau, self.multiplicity as f64);
        for f in &self.factors {
            acc = acc.product(&f.sample(tau));
        }
        acc
    }

    fn first(&self, n: usize) -> Vec<Eigenpair> {
        let mut acc = vec![Eigenpair {
            value: 0.0,
            multiplicity: self.multiplicity,
        }];
        for f in &self.factors {
            acc = smallest_sums(&acc, &f.first(n), n);
        }
        acc
    }
}

/// The `n` smallest pairwise sums of two sorted spectra (k-way merge).
fn smallest_sums(a: &[Eigenpair], b: &[Eigenpair], n: usize) -> Vec<Eigenpair> {
    #[derive(PartialEq)]
    struct Entry(f64, usize, usize);
    impl Eq for Entry {}
    impl PartialOrd for Entry {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Entry {
        fn cmp(&self, other: &Self) -> Ordering {
            other
                .0
                .total_cmp(&self.0)
                .then(other.1.cmp(&self.1))
                .then(other.2.cmp(&self.2))
        }
    }
    let mut out = Vec::with_capacity(n.min(a.len() * b.len()));
    if b.is_empty() {
        return out;
    }
    let mut heap: BinaryHeap<Entry> = a
        .iter()
        .enumerate()
        .map(|(i, x)| Entry(x.value + b[0].value, i, 0))
        .collect();
    while out.len() < n {
        let Some(Entry(value, i, j)) = heap.pop() else {
            break;
        };
        out.push(Eigenpair {
            value,
            multiplicity: a[i].multiplicity * b[j].multiplicity,
        });
        if j + 1 < b.len() {
            heap.push(Entry(a[i].value + b[j + 1].value, i, j + 1));
        }
    }
    out
}

/// Closed-form spectrum of one form degree: a finite sum of tensor products
/// of one-dimensional families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumStream {
    pub degree_label: i32,
    pub terms: Vec<ProductTerm>,
}

impl SpectrumStream {
    pub fn empty(degree_label: i32) -> Self {
        SpectrumStream {
            degree_label,
            terms: Vec::new(),
        }
    }

    pub fn single(degree_label: i32, factor: SpectralFactor, multiplicity: u64) -> Self {
        SpectrumStream {
            degree_label,
            terms: vec![ProductTerm {
                factors: vec![factor],
                multiplicity,
            }],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.iter().all(|t| t.multiplicity == 0)
    }

    pub fn zero_modes(&self) -> u64 {
        self.terms.iter().map(|t| t.zero_modes()).sum()
    }

    /// Smallest positive eigenvalue.
    pub fn gap(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.gap())
            .fold(f64::INFINITY, f64::min)
    }

    /// Shortest image period over all factors.
    pub fn min_period(&self) -> Option<f64> {
        self.terms
            .iter()
            .flat_map(|t| t.factors.iter().filter_map(|f| f.period()))
            .reduce(f64::min)
    }

    /// `Σ exp(-τλ)` over the whole spectrum, zero modes included.
    pub fn sample(&self, tau: f64) -> HeatSample {
        let mut acc = HeatSample::zero(tau);
        for t in &self.terms {
            acc.add_scaled(&t.sample(tau), 1.0);
        }
        acc
    }

    /// Eigenvalue `k` (0-based, counted by entries, not multiplicity).
    pub fn eigenpair(&self, k: usize) -> Eigenpair {
        self.first(k + 1)[k]
    }

    /// First `n` entries of the spectrum in nondecreasing order.
    pub fn first(&self, n: usize) -> Vec<Eigenpair> {
        let mut all: Vec<Eigenpair> = self.terms.iter().flat_map(|t| t.first(n)).collect();
        all.sort_by(|x, y| x.value.total_cmp(&y.value));
        all.truncate(n);
        all
    }

    /// Upper bound on `Σ_{k ≥ cutoff} m_k exp(-(t/4) λ_k)`, the mass omitted
    /// when only the first `cutoff` entries are summed. Uses
    /// `exp(-τλ) ≤ exp(-τλ_c/2) exp(-τλ/2)` for `λ ≥ λ_c`.
    pub fn tail_bound(&self, t: f64, cutoff: usize) -> f64 {
        let tau = t / 4.0;
        let lambda_c = self.eigenpair(cutoff).value;
        (-tau * lambda_c / 2.0).exp() * self.sample(tau / 2.0).value()
    }
}

// ---------------------------------------------------------------------------
// Interval traces in the `exp((t/4)∂²)` convention
// ---------------------------------------------------------------------------

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t <= 0.0 || t.is_infinite() {
        return Err(Error::domain(format!("time must be positive, got {t}")));
    }
    Ok(())
}

/// Eigenvalues of `-∂²` on the interval with the given scalar conditions.
pub fn interval_spectrum(spec: IntervalSpec, bc: ScalarBcPair) -> SpectrumStream {
    SpectrumStream::single(
        0,
        SpectralFactor::Interval {
            half_length: spec.half_length,
            bc,
        },
        1,
    )
}

/// `Tr exp((t/4)∂²)` on the interval.
pub fn heat_trace(spec: IntervalSpec, bc: ScalarBcPair, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(interval_spectrum(spec, bc).sample(t / 4.0).value())
}

/// `t ∂/∂t Tr exp((t/4)∂²)`.
pub fn heat_trace_t_deriv(spec: IntervalSpec, bc: ScalarBcPair, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(interval_spectrum(spec, bc).sample(t / 4.0).tau_deriv())
}

fn interval_lattice(spec: IntervalSpec, bc: ScalarBcPair) -> (f64, f64, f64, f64) {
    // (period, shift, scale, offset): trace = scale * G + offset.
    let period = 4.0 * spec.half_length;
    match bc {
        b if b.is_mixed() => (period, 0.5, 0.5, 0.0),
        ScalarBcPair::NN => (period, 0.0, 0.5, 0.5),
        _ => (period, 0.0, 0.5, -0.5),
    }
}

/// Eigen-series evaluation of the interval heat trace, regardless of `t`.
pub fn eigen_series_trace(spec: IntervalSpec, bc: ScalarBcPair, t: f64) -> Result<f64> {
    check_time(t)?;
    let (p, a, scale, offset) = interval_lattice(spec, bc);
    Ok(scale * lattice_theta_eigen(t / 4.0, p, a).0 + offset)
}

/// Image-series evaluation of the interval heat trace, regardless of `t`.
pub fn image_series_trace(spec: IntervalSpec, bc: ScalarBcPair, t: f64) -> Result<f64> {
    check_time(t)?;
    let tau = t / 4.0;
    let (p, a, scale, offset) = interval_lattice(spec, bc);
    let (lead, rem, _) = lattice_theta_images(tau, p, a);
    Ok(scale * (lead / tau.sqrt() + rem) + offset)
}

/// `f'(i√t/2) = (1 - t/2) exp(-t/4)` as a sample in `τ = t/4`.
pub fn counterterm_sample(tau: f64) -> HeatSample {
    HeatSample::unit_exponential(tau)
}

fn corrected_sample(bc: ScalarBcPair, tau: f64, trace_scale: f64) -> Result<HeatSample> {
    let mut s = interval_spectrum(IntervalSpec::unit(), bc)
        .sample(tau)
        .scaled(trace_scale);
    match bc {
        ScalarBcPair::DD => s.add_scaled(&counterterm_sample(tau), 0.5),
        b if b.is_mixed() => {}
        _ => {
            return Err(Error::Unsupported(
                "corrected integrand is defined for DD and mixed conditions".into(),
            ))
        }
    }
    Ok(s)
}

/// The corrected integrand `Tr[(1 + 2t∂_t) e_{D,D}] + f'(i√t/2)/2` (DD) or
/// `Tr[(1 + 2t∂_t) e_{D,N}]` (mixed) on `[-1, 1]`.
pub fn corrected_integrand(bc: ScalarBcPair, t: f64) -> Result<f64> {
    check_time(t)?;
    let s = corrected_sample(bc, t / 4.0, 1.0)?;
    let (poly, rem) = s.one_plus_two_tau_dtau();
    let tau = t / 4.0;
    Ok(rem
        + poly
            .iter()
            .enumerate()
            .map(|(i, c)| c * tau.powf(-(i as f64) / 2.0))
            .sum::<f64>())
}

// ---------------------------------------------------------------------------
// Mellin integrals
// ---------------------------------------------------------------------------

/// `∫_{τ_lo}^{τ_hi} f(τ) dτ/τ` via `u = log τ`. Returns `(value, error)`.
pub(crate) fn integrate_dtau_over_tau<F: Fn(f64) -> f64>(
    f: F,
    tau_lo: f64,
    tau_hi: f64,
    abs_tol: f64,
) -> Result<(f64, f64)> {
    if tau_hi <= tau_lo {
        return Ok((0.0, 0.0));
    }
    let (u0, u1) = (tau_lo.ln(), tau_hi.ln());
    let panels = ((u1 - u0) * 2.0).ceil().max(1.0) as usize;
    let r = integrate(
        |u| f(u.exp()),
        u0,
        u1,
        panels,
        QuadratureOptions {
            abs_tol,
            ..Default::default()
        },
    )?;
    Ok((r.value, r.error_estimate))
}

/// Smallest `τ` at which image remainders with period `p` still matter.
pub(crate) fn small_time_cutoff(min_period: Option<f64>) -> f64 {
    match min_period {
        Some(p) => (p * p / (4.0 * NEGLIGIBLE_EXPONENT)).min(1.0),
        None => 1.0,
    }
}

/// Largest `τ` at which a spectrum with the given gap still matters.
pub(crate) fn large_time_cutoff(gap: f64) -> f64 {
    if gap.is_finite() {
        (NEGLIGIBLE_EXPONENT / gap).max(1.0)
    } else {
        1.0
    }
}

/// Result of a corrected-integrand quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectedIntegral {
    pub value: f64,
    pub error_estimate: f64,
}

/// `∫_0^∞ (corrected integrand) dt/t` with the trace part multiplied by
/// `trace_scale`. Fails when the scaled integrand keeps a nonzero constant
/// as `t → 0`, which makes the integral diverge logarithmically.
pub fn corrected_integral(
    bc: ScalarBcPair,
    trace_scale: f64,
    abs_tol: f64,
) -> Result<CorrectedIntegral> {
    let probe = corrected_sample(bc, 1.0, trace_scale)?;
    let (poly, _) = probe.one_plus_two_tau_dtau();
    if let Some((i, c)) = poly.iter().enumerate().find(|(_, c)| c.abs() > 1e-12) {
        return Err(Error::numerical(
            format!(
                "corrected integrand does not vanish as t → 0: coefficient of t^(-{}/2) is {c}",
                i
            ),
            f64::NAN,
        ));
    }
    let spectrum = interval_spectrum(IntervalSpec::unit(), bc);
    let mut tau_lo = small_time_cutoff(spectrum.min_period());
    if bc == ScalarBcPair::DD {
        // The counterterm remainder vanishes only linearly in τ.
        tau_lo = tau_lo.min(LINEAR_REMAINDER_CUTOFF);
    }
    let tau_hi = large_time_cutoff(spectrum.gap().min(1.0));
    let (value, error_estimate) = integrate_dtau_over_tau(
        |tau| {
            corrected_sample(bc, tau, trace_scale)
                .map(|s| s.one_plus_two_tau_dtau().1)
                .unwrap_or(f64::NAN)
        },
        tau_lo,
        tau_hi,
        abs_tol,
    )?;
    Ok(CorrectedIntegral {
        value,
        error_estimate,
    })
}

/// Single-component values of the two corrected integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectedIntegrals {
    pub dd: f64,
    pub dn: f64,
}

/// Quadrature of both corrected integrals with unit trace weight.
pub fn lemma22_by_quadrature() -> Result<CorrectedIntegrals> {
    lemma22_with_tolerance(1e-11)
}

pub fn lemma22_with_tolerance(abs_tol: f64) -> Result<CorrectedIntegrals> {
    Ok(CorrectedIntegrals {
        dd: corrected_integral(ScalarBcPair::DD, 1.0, abs_tol)?.value,
        dn: corrected_integral(ScalarBcPair::DN, 1.0, abs_tol)?.value,
    })
}

/// `ζ(0)` and `ζ'(0)` of the positive spectrum of a stream, in the
/// eigenvalues `λ` themselves (Mellin transform of `Σ exp(-τλ)` in `τ`).
///
/// `ζ(s) Γ(s) = ∫_0^1 τ^{s-1} R dτ + Σ_j a_j/(s+j) + ∫_1^∞ τ^{s-1}(Θ - z) dτ`
/// where `a_j` are the small-time coefficients, `R` the remainder and `z`
/// the number of zero modes.
pub fn zeta_of_stream(stream: &SpectrumStream, abs_tol: f64) -> Result<ZetaValue> {
    if stream.is_empty() {
        return Ok(ZetaValue::exact(0.0, 0.0));
    }
    let probe = stream.sample(1.0);
    let zero = stream.zero_modes() as f64;
    let a0 = probe.coeffs.first().copied().unwrap_or(0.0) - zero;
    let poly_part: f64 = probe
        .coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c / (-(i as f64) / 2.0))
        .sum();

    let tau_lo = small_time_cutoff(stream.min_period());
    let tau_hi = large_time_cutoff(stream.gap());
    let (small, e1) =
        integrate_dtau_over_tau(|tau| stream.sample(tau).remainder, tau_lo, 1.0, abs_tol)?;
    let (large, e2) = integrate_dtau_over_tau(
        |tau| stream.sample(tau).value() - zero,
        1.0,
        tau_hi,
        abs_tol,
    )?;

    Ok(ZetaValue {
        value_at_0: a0,
        deriv_at_0: EULER_GAMMA * a0 + poly_part + small + large,
        error_bound: e1 + e2,
    })
}

/// Zeta data of the interval spectrum with the given scalar conditions.
pub fn zeta_from_trace(spec: IntervalSpec, bc: ScalarBcPair) -> Result<ZetaValue> {
    let stream = interval_spectrum(spec, bc);
    if stream.zero_modes() > 1 {
        return Err(Error::Unsupported("more than one zero mode".into()));
    }
    zeta_of_stream(&stream, 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_zeta::{riemann_zeta_at_0, shifted_zeta_at_0};
    use std::f64::consts::LN_2;

    const ALL_BC: [ScalarBcPair; 4] = [
        ScalarBcPair::DD,
        ScalarBcPair::NN,
        ScalarBcPair::DN,
        ScalarBcPair::ND,
    ];

    /// Image-series oracle written directly from the reflection principle.
    fn image_oracle(l: f64, bc: ScalarBcPair, t: f64) -> f64 {
        let tau = t / 4.0;
        let p = 4.0 * l;
        let pre = p / (4.0 * PI * tau).sqrt();
        let mut sum = 1.0;
        for n in 1..=50 {
            let sign = if bc.is_mixed() && n % 2 == 1 {
                -1.0
            } else {
                1.0
            };
            sum += 2.0 * sign * (-(n as f64 * p).powi(2) / (4.0 * tau)).exp();
        }
        let offset = match bc {
            ScalarBcPair::NN => 0.5,
            ScalarBcPair::DD => -0.5,
            _ => 0.0,
        };
        0.5 * pre * sum + offset
    }

    #[test]
    fn eigenvalue_examples() {
        let unit = IntervalSpec::unit();
        let dd = interval_spectrum(unit, ScalarBcPair::DD).eigenpair(0);
        assert!((dd.value - PI * PI / 4.0).abs() < 1e-15);
        let dn = interval_spectrum(unit, ScalarBcPair::DN).eigenpair(0);
        assert!((dn.value - PI * PI / 16.0).abs() < 1e-15);
        let nn = interval_spectrum(unit, ScalarBcPair::NN).eigenpair(0);
        assert_eq!((nn.value, nn.multiplicity), (0.0, 1));
    }

    #[test]
    fn eigen_and_image_series_agree() {
        for l in [0.5, 1.0, 2.0] {
            let spec = IntervalSpec::new(l).unwrap();
            for bc in ALL_BC {
                for i in 0..=30 {
                    let t = 0.5 + 1.5 * i as f64 / 30.0;
                    let a = eigen_series_trace(spec, bc, t).unwrap();
                    let b = image_series_trace(spec, bc, t).unwrap();
                    assert!((a - b).abs() < 2e-12, "l={l} bc={bc:?} t={t}: {a} vs {b}");
                    let c = heat_trace(spec, bc, t).unwrap();
                    assert!((a - c).abs() < 2e-12);
                }
            }
        }
    }

    #[test]
    fn mckean_singer() {
        for l in [0.5, 1.0, 2.0] {
            let spec = IntervalSpec::new(l).unwrap();
            for t in [0.1, 1.0, 10.0] {
                let d = heat_trace(spec, ScalarBcPair::NN, t).unwrap()
                    - heat_trace(spec, ScalarBcPair::DD, t).unwrap();
                assert!((d - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn long_time_limits() {
        let unit = IntervalSpec::unit();
        assert!(heat_trace(unit, ScalarBcPair::DN, 500.0).unwrap() < 1e-12);
        assert!((heat_trace(unit, ScalarBcPair::NN, 500.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn short_time_leading_term() {
        let unit = IntervalSpec::unit();
        let t = 0.01;
        let lead = 2.0 / (PI * t).sqrt();
        for bc in ALL_BC {
            let v = heat_trace(unit, bc, t).unwrap();
            let offset = match bc {
                ScalarBcPair::NN => 0.5,
                ScalarBcPair::DD => -0.5,
                _ => 0.0,
            };
            assert!((v - offset - lead).abs() < 1e-12 * lead);
            assert!((v - image_oracle(1.0, bc, t)).abs() < 1e-12);
        }
    }

    #[test]
    fn traces_without_zero_mode_decrease() {
        let unit = IntervalSpec::unit();
        for bc in [ScalarBcPair::DD, ScalarBcPair::DN] {
            let mut prev = f64::INFINITY;
            for i in 1..200 {
                let t = 0.05 * i as f64;
                let v = heat_trace(unit, bc, t).unwrap();
                assert!(v < prev);
                prev = v;
            }
        }
    }

    #[test]
    fn time_derivative_matches_finite_differences() {
        for l in [0.5, 1.0, 2.0] {
            let spec = IntervalSpec::new(l).unwrap();
            for bc in ALL_BC {
                for t in [0.5, 1.0, 5.0] {
                    let h = 1e-5;
                    let fd = (heat_trace(spec, bc, t + h).unwrap()
                        - heat_trace(spec, bc, t - h).unwrap())
                        / (2.0 * h);
                    let analytic = heat_trace_t_deriv(spec, bc, t).unwrap() / t;
                    assert!((fd - analytic).abs() < 1e-7, "l={l} {bc:?} t={t}");
                }
            }
        }
    }

    #[test]
    fn rejects_nonpositive_time() {
        assert!(heat_trace(IntervalSpec::unit(), ScalarBcPair::DD, 0.0).is_err());
        assert!(corrected_integrand(ScalarBcPair::DD, -1.0).is_err());
        assert!(IntervalSpec::new(0.0).is_err());
    }

    #[test]
    fn corrected_integrands_vanish_at_both_ends() {
        // DD tends to zero linearly (counterterm), DN exponentially.
        let small = corrected_integrand(ScalarBcPair::DD, 1e-6).unwrap();
        assert!(small.abs() < 1e-6, "{small}");
        assert_eq!(corrected_integrand(ScalarBcPair::DN, 1e-2).unwrap(), 0.0);
        assert!(corrected_integrand(ScalarBcPair::DD, 1e6).unwrap().abs() < 1e-15);
        assert!(corrected_integrand(ScalarBcPair::DN, 1e4).unwrap().abs() < 1e-100);
        assert!(corrected_integrand(ScalarBcPair::NN, 1.0).is_err());
    }

    #[test]
    fn corrected_integrand_matches_differenced_oracle() {
        // Oracle: (1 + 2t∂_t) applied to the image series by differences.
        let h = 1e-6;
        for t in [0.3, 1.0, 3.0] {
            for bc in [ScalarBcPair::DD, ScalarBcPair::DN] {
                let ct = |t: f64| {
                    if bc == ScalarBcPair::DD {
                        0.5 * (-t / 4.0).exp()
                    } else {
                        0.0
                    }
                };
                let f = |t: f64| image_oracle(1.0, bc, t) + ct(t);
                let oracle = f(t) + 2.0 * t * (f(t + h) - f(t - h)) / (2.0 * h);
                let v = corrected_integrand(bc, t).unwrap();
                assert!((v - oracle).abs() < 1e-8, "{bc:?} t={t}: {v} vs {oracle}");
            }
        }
    }

    #[test]
    fn corrected_integrals_single_component() {
        let r = lemma22_by_quadrature().unwrap();
        assert!((r.dd + 2.0 * LN_2).abs() < 1e-9, "{}", r.dd);
        assert!((r.dn + LN_2).abs() < 1e-9, "{}", r.dn);
        let looser = lemma22_with_tolerance(2e-11).unwrap();
        assert!((looser.dd - r.dd).abs() < 1e-7 && (looser.dn - r.dn).abs() < 1e-7);
    }

    #[test]
    fn doubled_trace_diverges_for_dd() {
        assert!(matches!(
            corrected_integral(ScalarBcPair::DD, 2.0, 1e-10),
            Err(Error::Numerical { .. })
        ));
    }

    #[test]
    fn zeta_from_trace_matches_closed_forms() {
        let unit = IntervalSpec::unit();
        // Eigenvalues (kπ/2)² and ((k-1/2)π/2)²: ζ(s) = (2/π)^{2s} Z(2s).
        let dd_closed = riemann_zeta_at_0().rescaled(1.0, 2.0 / PI);
        let dn_closed = shifted_zeta_at_0().rescaled(1.0, 2.0 / PI);
        let dd = zeta_from_trace(unit, ScalarBcPair::DD).unwrap();
        let dn = zeta_from_trace(unit, ScalarBcPair::DN).unwrap();
        assert!((dd.deriv_at_0 - dd_closed.deriv_at_0).abs() < 1e-9);
        assert!((dn.deriv_at_0 - dn_closed.deriv_at_0).abs() < 1e-9);
        assert!((dn.deriv_at_0 + LN_2).abs() < 1e-9);
        assert!((dd.deriv_at_0 + 2.0 * LN_2).abs() < 1e-9);
        assert!((dd.deriv_at_0 - dn.deriv_at_0 + LN_2).abs() < 1e-9);
        assert!(dn.value_at_0.abs() < 1e-14);
        assert!((dd.value_at_0 + 0.5).abs() < 1e-14);
        // NN: positive spectrum equals DD.
        let nn = zeta_from_trace(unit, ScalarBcPair::NN).unwrap();
        assert!((nn.deriv_at_0 - dd.deriv_at_0).abs() < 1e-9);
    }

    #[test]
    fn zeta_scales_with_length() {
        // (kπ/(2l))²: ζ'(0) = -log(4l).
        for l in [0.5, 2.0, 3.0] {
            let z = zeta_from_trace(IntervalSpec::new(l).unwrap(), ScalarBcPair::DD).unwrap();
            assert!((z.deriv_at_0 + (4.0 * l).ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn tail_bound_covers_omitted_mass() {
        let stream = interval_spectrum(IntervalSpec::unit(), ScalarBcPair::DN);
        for t in [0.5, 1.0, 4.0] {
            for cutoff in [1usize, 3, 10] {
                let partial: f64 = stream
                    .first(cutoff)
                    .iter()
                    .map(|e| e.multiplicity as f64 * (-(t / 4.0) * e.value).exp())
                    .sum();
                let omitted =
                    heat_trace(IntervalSpec::unit(), ScalarBcPair::DN, t).unwrap() - partial;
                assert!(omitted <= stream.tail_bound(t, cutoff) + 1e-15);
            }
        }
    }

    #[test]
    fn product_sample_matches_direct_product() {
        let a = SpectralFactor::Lattice {
            period: 2.0 * PI,
            shift: 0.0,
        };
        let b = SpectralFactor::Interval {
            half_length: 1.0,
            bc: ScalarBcPair::DD,
        };
        for tau in [0.01, 0.3, 1.0, 4.0] {
            let p = a.sample(tau).product(&b.sample(tau));
            let direct = a.sample(tau).value() * b.sample(tau).value();
            assert!((p.value() - direct).abs() < 1e-10 * direct.abs().max(1.0));
            let d = a.sample(tau).tau_deriv() * b.sample(tau).value()
                + a.sample(tau).value() * b.sample(tau).tau_deriv();
            assert!((p.tau_deriv() - d).abs() < 1e-10 * d.abs().max(1.0));
        }
    }

    #[test]
    fn circle_eigen_and_image_agree_with_holonomy() {
        for shift in [0.0, 0.5, 0.17, 0.83] {
            for tau in [0.5, 1.0, 2.0] {
                let (e, ed) = lattice_theta_eigen(tau, 3.0, shift);
                let (lead, r, rd) = lattice_theta_images(tau, 3.0, shift);
                let poly = lead / tau.sqrt();
                assert!((e - poly - r).abs() < 1e-12);
                assert!((ed - (-0.5 * poly + rd)).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn bc_labels_round_trip() {
        for bc in ALL_BC {
            assert_eq!(ScalarBcPair::parse(bc.label()).unwrap(), bc);
            let json = serde_json::to_string(&bc).unwrap();
            assert_eq!(serde_json::from_str::<ScalarBcPair>(&json).unwrap(), bc);
        }
    }
}
