//! Catalog of flat model fibers: point sets, intervals, circles with
//! holonomy and cylinders `Y × [-l, l]` over boundaryless cross-sections.
//!
//! For each fiber this module gives the exact form-Laplacian spectrum per
//! degree, the Betti numbers under absolute/relative boundary conditions,
//! harmonic representatives with their L² Gram matrices, and the metrized
//! Mayer–Vietoris sequences used by the gluing identities.
//!
//! Conventions: on a cylinder factor, an absolute end imposes Neumann
//! conditions on 0-forms and Dirichlet conditions on the `du` component of
//! 1-forms; a relative end is the reverse. A degree-`k` form on `Y × I`
//! splits as `φ₁ + du ∧ φ₂` with `φ₁` of degree `k` and `φ₂` of degree
//! `k − 1` on `Y`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::complex::{block_diag, MetrizedComplex, Term};
use crate::error::{Error, Result};
use crate::heat_kernel::{ProductTerm, ScalarBc, ScalarBcPair, SpectralFactor, SpectrumStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormBc {
    Absolute,
    Relative,
}

/// Boundary conditions at the left (`u = -l`) and right (`u = l`) ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FormBcPair {
    pub left: FormBc,
    pub right: FormBc,
}

impl FormBcPair {
    pub const AA: FormBcPair = FormBcPair::new(FormBc::Absolute, FormBc::Absolute);
    pub const AR: FormBcPair = FormBcPair::new(FormBc::Absolute, FormBc::Relative);
    pub const RA: FormBcPair = FormBcPair::new(FormBc::Relative, FormBc::Absolute);
    pub const RR: FormBcPair = FormBcPair::new(FormBc::Relative, FormBc::Relative);

    pub const fn new(left: FormBc, right: FormBc) -> Self {
        FormBcPair { left, right }
    }

    pub fn is_mixed(self) -> bool {
        self.left != self.right
    }

    pub fn label(self) -> &'static str {
        match (self.left, self.right) {
            (FormBc::Absolute, FormBc::Absolute) => "aa",
            (FormBc::Absolute, FormBc::Relative) => "ar",
            (FormBc::Relative, FormBc::Absolute) => "ra",
            (FormBc::Relative, FormBc::Relative) => "rr",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aa" => Ok(Self::AA),
            "ar" => Ok(Self::AR),
            "ra" => Ok(Self::RA),
            "rr" => Ok(Self::RR),
            other => Err(Error::Usage(format!(
                "unknown form boundary pair '{other}'"
            ))),
        }
    }

    /// Scalar conditions for 0-forms (the `φ₁` component).
    pub fn scalar_for_functions(self) -> ScalarBcPair {
        let f = |b| match b {
            FormBc::Absolute => ScalarBc::Neumann,
            FormBc::Relative => ScalarBc::Dirichlet,
        };
        ScalarBcPair::new(f(self.left), f(self.right))
    }

    /// Scalar conditions for the `du` coefficient (the `φ₂` component).
    pub fn scalar_for_normal_part(self) -> ScalarBcPair {
        let f = |b| match b {
            FormBc::Absolute => ScalarBc::Dirichlet,
            FormBc::Relative => ScalarBc::Neumann,
        };
        ScalarBcPair::new(f(self.left), f(self.right))
    }
}

/// Geometry of a catalog fiber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FiberShape {
    PointSet {
        count: u64,
    },
    Interval {
        half_length: f64,
        bc: FormBcPair,
    },
    Circle {
        length: f64,
        #[serde(default)]
        holonomy_angle: f64,
    },
    Cylinder {
        cross_section: Box<FiberShape>,
        half_length: f64,
        bc: FormBcPair,
    },
}

/// A catalog fiber with a flat bundle of the given rank. Holonomy acts as
/// the same unitary scalar on every copy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFiber {
    pub shape: FiberShape,
    #[serde(default = "one")]
    pub bundle_rank: u64,
}

fn one() -> u64 {
    1
}

/// L² data of harmonic representatives in one degree.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicDegree {
    pub dimension: usize,
    pub gram: DMatrix<f64>,
}

/// Harmonic Grams for every degree `0..=dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct CohomologyData {
    pub degrees: Vec<HarmonicDegree>,
}

impl FiberShape {
    pub fn point(count: u64) -> Self {
        FiberShape::PointSet { count }
    }

    pub fn circle(length: f64, holonomy_angle: f64) -> Self {
        FiberShape::Circle {
            length,
            holonomy_angle,
        }
    }

    pub fn cylinder(cross_section: FiberShape, half_length: f64, bc: FormBcPair) -> Self {
        FiberShape::Cylinder {
            cross_section: Box::new(cross_section),
            half_length,
            bc,
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            FiberShape::PointSet { .. } => 0,
            FiberShape::Interval { .. } | FiberShape::Circle { .. } => 1,
            FiberShape::Cylinder { cross_section, .. } => cross_section.dimension() + 1,
        }
    }

    pub fn has_boundary(&self) -> bool {
        matches!(
            self,
            FiberShape::Interval { .. } | FiberShape::Cylinder { .. }
        )
    }

    /// Interval as the cylinder over a single point.
    fn normalized(&self) -> FiberShape {
        match self {
            FiberShape::Interval { half_length, bc } => {
                FiberShape::cylinder(FiberShape::point(1), *half_length, *bc)
            }
            other => other.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(format!("{name} must be positive, got {x}")))
            }
        };
        match self {
            FiberShape::PointSet { count } => {
                if *count == 0 {
                    return Err(Error::domain("point set must be nonempty"));
                }
                Ok(())
            }
            FiberShape::Interval { half_length, .. } => positive("half_length", *half_length),
            FiberShape::Circle {
                length,
                holonomy_angle,
            } => {
                positive("length", *length)?;
                if !(0.0..2.0 * PI).contains(holonomy_angle) {
                    return Err(Error::domain(format!(
                        "holonomy angle must lie in [0, 2π), got {holonomy_angle}"
                    )));
                }
                Ok(())
            }
            FiberShape::Cylinder {
                cross_section,
                half_length,
                ..
            } => {
                positive("half_length", *half_length)?;
                if cross_section.has_boundary() {
                    return Err(Error::domain("cylinder cross-section must be boundaryless"));
                }
                cross_section.validate()
            }
        }
    }

    /// Betti numbers of the trivial rank-one bundle, degree `0..=dim`.
    fn unit_betti(&self) -> Vec<u64> {
        match self.normalized() {
            FiberShape::PointSet { count } => vec![count],
            FiberShape::Circle { holonomy_angle, .. } => {
                let b = u64::from(holonomy_angle == 0.0);
                vec![b, b]
            }
            FiberShape::Cylinder {
                cross_section, bc, ..
            } => {
                let y = cross_section.unit_betti();
                let n = y.len() + 1;
                if bc.is_mixed() {
                    vec![0; n]
                } else if bc == FormBcPair::AA {
                    let mut b = y;
                    b.push(0);
                    b
                } else {
                    let mut b = vec![0];
                    b.extend(y);
                    b
                }
            }
            FiberShape::Interval { .. } => unreachable!("normalized"),
        }
    }

    fn unit_spectrum(&self) -> Vec<Vec<ProductTerm>> {
        match self.normalized() {
            FiberShape::PointSet { count } => vec![vec![ProductTerm {
                factors: vec![SpectralFactor::Points { count }],
                multiplicity: 1,
            }]],
            FiberShape::Circle {
                length,
                holonomy_angle,
            } => {
                let t = ProductTerm {
                    factors: vec![SpectralFactor::Lattice {
                        period: length,
                        shift: holonomy_angle / (2.0 * PI),
                    }],
                    multiplicity: 1,
                };
                vec![vec![t.clone()], vec![t]]
            }
            FiberShape::Cylinder {
                cross_section,
                half_length,
                bc,
            } => {
                let y = cross_section.unit_spectrum();
                let tangential = SpectralFactor::Interval {
                    half_length,
                    bc: bc.scalar_for_functions(),
                };
                let normal = SpectralFactor::Interval {
                    half_length,
                    bc: bc.scalar_for_normal_part(),
                };
                let with = |terms: &[ProductTerm], f: SpectralFactor| -> Vec<ProductTerm> {
                    terms
                        .iter()
                        .map(|t| {
                            let mut factors = t.factors.clone();
                            factors.push(f);
                            ProductTerm {
                                factors,
                                multiplicity: t.multiplicity,
                            }
                        })
                        .collect()
                };
                (0..=y.len())
                    .map(|k| {
                        let mut terms = Vec::new();
                        if k < y.len() {
                            terms.extend(with(&y[k], tangential));
                        }
                        if k > 0 {
                            terms.extend(with(&y[k - 1], normal));
                        }
                        terms
                    })
                    .collect()
            }
            FiberShape::Interval { .. } => unreachable!("normalized"),
        }
    }

    /// Harmonic Grams of the rank-one bundle.
    fn unit_harmonic(&self) -> Vec<DMatrix<f64>> {
        let b = self.unit_betti();
        match self.normalized() {
            FiberShape::PointSet { count } => {
                vec![DMatrix::identity(count as usize, count as usize)]
            }
            FiberShape::Circle { length, .. } => b
                .iter()
                .map(|&n| DMatrix::identity(n as usize, n as usize) * length)
                .collect(),
            FiberShape::Cylinder {
                cross_section,
                half_length,
                bc,
            } => {
                // Pulled-back classes φ (absolute) or du ∧ φ (relative) both
                // have ‖·‖² = 2l ‖φ‖²_Y.
                let y = cross_section.unit_harmonic();
                let len = 2.0 * half_length;
                let empty = DMatrix::zeros(0, 0);
                let n = y.len() + 1;
                (0..n)
                    .map(|k| {
                        if bc.is_mixed() {
                            empty.clone()
                        } else if bc == FormBcPair::AA {
                            y.get(k).map(|g| g * len).unwrap_or_else(|| empty.clone())
                        } else if k == 0 {
                            empty.clone()
                        } else {
                            &y[k - 1] * len
                        }
                    })
                    .collect()
            }
            FiberShape::Interval { .. } => unreachable!("normalized"),
        }
    }
}

fn kron_identity(m: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    m.kronecker(&DMatrix::identity(r, r))
}

impl ModelFiber {
    pub fn new(shape: FiberShape, bundle_rank: u64) -> Result<Self> {
        let f = ModelFiber { shape, bundle_rank };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bundle_rank == 0 {
            return Err(Error::domain("bundle rank must be positive"));
        }
        self.shape.validate()
    }

    pub fn dimension(&self) -> usize {
        self.shape.dimension()
    }

    /// Betti numbers under the fiber's boundary conditions.
    pub fn betti(&self) -> Vec<u64> {
        self.shape
            .unit_betti()
            .into_iter()
            .map(|b| b * self.bundle_rank)
            .collect()
    }

    /// `(χ, χ′) = (Σ (-1)^p b_p, Σ (-1)^p p b_p)`.
    pub fn euler_chars(&self) -> (i64, i64) {
        self.betti()
            .iter()
            .enumerate()
            .fold((0, 0), |(c, cp), (p, &b)| {
                let s = if p % 2 == 0 { 1 } else { -1 };
                (c + s * b as i64, cp + s * p as i64 * b as i64)
            })
    }

    /// Form-Laplacian spectrum of each degree `0..=dim`.
    pub fn form_spectrum(&self) -> Vec<SpectrumStream> {
        self.shape
            .unit_spectrum()
            .into_iter()
            .enumerate()
            .map(|(k, terms)| SpectrumStream {
                degree_label: k as i32,
                terms: terms
                    .into_iter()
                    .map(|t| ProductTerm {
                        multiplicity: t.multiplicity * self.bundle_rank,
                        ..t
                    })
                    .collect(),
            })
            .collect()
    }

    pub fn harmonic_metric(&self) -> CohomologyData {
        let r = self.bundle_rank as usize;
        CohomologyData {
            degrees: self
                .shape
                .unit_harmonic()
                .iter()
                .map(|g| {
                    let gram = kron_identity(g, r);
                    HarmonicDegree {
                        dimension: gram.nrows(),
                        gram,
                    }
                })
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Mayer–Vietoris sequences
// ---------------------------------------------------------------------------

/// Supported splittings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MayerVietorisInstance {
    /// Circle of length `arc1 + arc2` cut at two points `Y` into arcs `Z₁`
    /// (length `arc1`) and `Z₂` (length `arc2`); `Y_{[-h,h]}` is the collar.
    CircleArcs {
        arc1: f64,
        arc2: f64,
        collar_half_length: f64,
        bundle_rank: u64,
    },
    /// `Z₁ = Y × [-l, l]` with `∂Z₁ = Y ⊔ Y`, for `Y` a point set or a
    /// circle. The boundary cohomology carries either the metric of `Y`
    /// itself or that of the collar `Y_{[-h,h]}`.
    CylinderBoundary {
        cross_section: FiberShape,
        half_length: f64,
        collar_half_length: f64,
        bundle_rank: u64,
    },
    /// Interval cut into two subintervals with mixed conditions on each
    /// piece: all cohomology vanishes.
    IntervalSplit {
        left: f64,
        right: f64,
        bundle_rank: u64,
    },
}

/// Which long exact sequence of an instance to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sequence {
    /// `… → H^k(Z₁, Y) → H^k(Z) → H^k(Z₂) → …`
    Gluing,
    /// `… → H^k(Z) → H^k(Z₁) ⊕ H^k(Z₂) → H^k(Y_{[-h,h]}) → …` for arcs, or
    /// the pair sequence of `(Z₁, ∂Z₁)` with collar metrics on `∂Z₁`.
    Collar,
    /// `… → H^k(Z₁, Y) → H^k(Z₁) → H^k(Y_*) → …` where `Y_*` is the collar
    /// for arcs and `Y` itself for cylinders.
    Pair,
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive, got {x}")))
    }
}

fn rows(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(r, c, v)
}

fn scalar(g: f64, r: usize) -> DMatrix<f64> {
    DMatrix::identity(r, r) * g
}

/// Builds a complex from per-term Grams and maps on the trivial line bundle,
/// then tensors with `ℝ^r`.
fn assemble(
    first_label: i32,
    grams: Vec<DMatrix<f64>>,
    maps: Vec<DMatrix<f64>>,
    r: usize,
) -> Result<MetrizedComplex> {
    let terms = grams
        .iter()
        .enumerate()
        .map(|(i, g)| Term::new(first_label + i as i32, kron_identity(g, r)))
        .collect();
    let maps = maps.iter().map(|m| kron_identity(m, r)).collect();
    MetrizedComplex::new(terms, maps)
}

pub fn mayer_vietoris(
    instance: &MayerVietorisInstance,
    sequence: Sequence,
) -> Result<MetrizedComplex> {
    match instance {
        MayerVietorisInstance::CircleArcs {
            arc1,
            arc2,
            collar_half_length,
            bundle_rank,
        } => {
            positive("arc1", *arc1)?;
            positive("arc2", *arc2)?;
            positive("collar_half_length", *collar_half_length)?;
            circle_arcs(
                *arc1,
                *arc2,
                *collar_half_length,
                *bundle_rank as usize,
                sequence,
            )
        }
        MayerVietorisInstance::CylinderBoundary {
            cross_section,
            half_length,
            collar_half_length,
            bundle_rank,
        } => {
            positive("half_length", *half_length)?;
            positive("collar_half_length", *collar_half_length)?;
            if cross_section.has_boundary() {
                return Err(Error::domain("cross-section must be boundaryless"));
            }
            cross_section.validate()?;
            let boundary_scale = match sequence {
                Sequence::Pair => 1.0,
                Sequence::Collar => 2.0 * collar_half_length,
                Sequence::Gluing => {
                    return Err(Error::domain(
                        "cylinder-boundary instance has no gluing sequence",
                    ))
                }
            };
            cylinder_pair(
                cross_section,
                2.0 * half_length,
                boundary_scale,
                *bundle_rank as usize,
            )
        }
        MayerVietorisInstance::IntervalSplit { left, right, .. } => {
            positive("left", *left)?;
            positive("right", *right)?;
            Ok(MetrizedComplex::zero())
        }
    }
}

/// Circle `Z` of length `L = L₁ + L₂`, arcs `Z₁`, `Z₂` meeting at `Y = {p, q}`.
/// Representatives: constants for `H⁰`, `dx` for `H¹` (Grams = lengths);
/// `H⁰(Y_{[-h,h]})` has Gram `2h I₂`.
fn circle_arcs(l1: f64, l2: f64, h: f64, r: usize, sequence: Sequence) -> Result<MetrizedComplex> {
    let l = l1 + l2;
    let empty = DMatrix::zeros(0, 0);
    match sequence {
        Sequence::Gluing => {
            // H⁰(Z₁,Y)=0 → H⁰(Z) → H⁰(Z₂) → H¹(Z₁,Y) → H¹(Z) → H¹(Z₂)=0.
            // Restriction 1 ↦ 1; connecting map vanishes; the class of dx on
            // Z₁ (extended by zero) has period L₁, i.e. (L₁/L) dx on Z.
            assemble(
                0,
                vec![
                    empty.clone(),
                    scalar(l, 1),
                    scalar(l2, 1),
                    scalar(l1, 1),
                    scalar(l, 1),
                    empty,
                ],
                vec![
                    DMatrix::zeros(1, 0),
                    rows(1, 1, &[1.0]),
                    rows(1, 1, &[0.0]),
                    rows(1, 1, &[l1 / l]),
                    DMatrix::zeros(0, 1),
                ],
                r,
            )
        }
        Sequence::Pair => {
            // H⁰(Z₁,Y)=0 → H⁰(Z₁) → H⁰(Y) → H¹(Z₁,Y) → H¹(Z₁)=0.
            // 1 ↦ (1,1); (f_p, f_q) ↦ (f_q − f_p)/L₁ · dx.
            assemble(
                0,
                vec![
                    empty.clone(),
                    scalar(l1, 1),
                    scalar(2.0 * h, 2),
                    scalar(l1, 1),
                    empty,
                ],
                vec![
                    DMatrix::zeros(1, 0),
                    rows(2, 1, &[1.0, 1.0]),
                    rows(1, 2, &[-1.0 / l1, 1.0 / l1]),
                    DMatrix::zeros(0, 1),
                ],
                r,
            )
        }
        Sequence::Collar => {
            // H⁰(Z) → H⁰(Z₁)⊕H⁰(Z₂) → H⁰(Y) → H¹(Z) → H¹(Z₁)⊕H¹(Z₂)=0.
            // c ↦ (c,c); (a,b) ↦ (a−b)(1,1); (f_p,f_q) ↦ (f_q − f_p)/L · dx.
            assemble(
                0,
                vec![
                    scalar(l, 1),
                    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![l1, l2])),
                    scalar(2.0 * h, 2),
                    scalar(l, 1),
                    empty,
                ],
                vec![
                    rows(2, 1, &[1.0, 1.0]),
                    rows(2, 2, &[1.0, -1.0, 1.0, -1.0]),
                    rows(1, 2, &[-1.0 / l, 1.0 / l]),
                    DMatrix::zeros(0, 1),
                ],
                r,
            )
        }
    }
}

/// Pair sequence of `(Z₁, ∂Z₁)` with `Z₁ = Y × [0, a]`. Labels follow the
/// `3k, 3k+1, 3k+2` rule for `H^k(Z₁,∂)`, `H^k(Z₁)`, `H^k(∂)`.
///
/// Representatives: `H^k(Z₁) ∋ φ` (Gram `a G_Y`), `H^k(Z₁,∂) ∋ du ∧ φ`
/// (Gram `a G_Y`), `H^k(∂) ∋ (φ₋, φ₊)` (Gram `s · diag(G_Y, G_Y)`). The
/// restriction is `φ ↦ (φ, φ)`, the connecting map
/// `(φ₋, φ₊) ↦ (1/a) du ∧ (φ₊ − φ₋)`, and `du ∧ φ = d(uφ)` is exact in `Z₁`.
fn cylinder_pair(y: &FiberShape, a: f64, s: f64, r: usize) -> Result<MetrizedComplex> {
    let gy = y.unit_harmonic();
    let top = gy.len(); // H^{top}(Z₁, ∂) is the last nonzero relative group
    let dim = |k: usize| gy.get(k).map(|g| g.nrows()).unwrap_or(0);
    let mut grams = Vec::new();
    let mut maps = Vec::new();
    for k in 0..=top {
        let rel = if k == 0 { 0 } else { dim(k - 1) };
        let abs = dim(k);
        // H^k(Z₁, ∂)
        grams.push(if k == 0 {
            DMatrix::zeros(0, 0)
        } else {
            &gy[k - 1] * a
        });
        if k == top {
            break;
        }
        // H^k(Z₁, ∂) → H^k(Z₁): zero.
        maps.push(DMatrix::zeros(abs, rel));
        grams.push(&gy[k] * a);
        // H^k(Z₁) → H^k(∂): φ ↦ (φ, φ).
        let id = DMatrix::<f64>::identity(abs, abs);
        let mut restrict = DMatrix::zeros(2 * abs, abs);
        restrict.view_mut((0, 0), (abs, abs)).copy_from(&id);
        restrict.view_mut((abs, 0), (abs, abs)).copy_from(&id);
        maps.push(restrict);
        grams.push(block_diag(&gy[k], &gy[k]) * s);
        // H^k(∂) → H^{k+1}(Z₁, ∂).
        let mut delta = DMatrix::zeros(abs, 2 * abs);
        delta.view_mut((0, 0), (abs, abs)).copy_from(&(-&id / a));
        delta.view_mut((0, abs), (abs, abs)).copy_from(&(&id / a));
        maps.push(delta);
    }
    assemble(0, grams, maps, r)
}
