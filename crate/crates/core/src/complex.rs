//! Finite metrized complexes `0 → E⁰ → E¹ → … → Eⁿ → 0` with explicit
//! integer grading labels, and their torsion.
//!
//! Every term carries a symmetric positive definite Gram matrix. Adjoints are
//! handled by whitening: with `G = L Lᵀ`, the coordinates `Lᵀx` are
//! orthonormal and the differential becomes `d̃ = L_{k+1}ᵀ d L_k^{-ᵀ}`. The
//! torsion
//!
//! ```text
//! T = ½ Σ_k (-1)^{g_k} g_k log det Δ_k,   Δ_k = d_{k-1} d_{k-1}† + d_k† d_k
//! ```
//!
//! is evaluated from singular values: on an exact complex the nonzero
//! spectrum of `Δ_k` is the union of the squared singular values of `d̃_{k-1}`
//! and `d̃_k`, so `log det Δ_k = 2 (s_{k-1} + s_k)` with `s_j = Σ log σ(d̃_j)`.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative singular-value cutoff for ranks.
pub const RANK_CUTOFF: f64 = 1e-10;

/// Relative tolerance on `d_{k+1} d_k` against `‖d_{k+1}‖ ‖d_k‖`.
pub const COMPOSITION_TOL: f64 = 1e-12;

/// One graded term: a copy of `ℝ^dim` with a Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub label: i32,
    pub gram: DMatrix<f64>,
}

impl Term {
    pub fn new(label: i32, gram: DMatrix<f64>) -> Self {
        Term { label, gram }
    }

    pub fn identity(label: i32, dim: usize) -> Self {
        Term {
            label,
            gram: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetrizedComplex {
    terms: Vec<Term>,
    differentials: Vec<DMatrix<f64>>,
}

/// Torsion of an exact metrized complex (log scale).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorsionOfComplex {
    pub value: f64,
}

/// Numerical health report of a complex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub labels: Vec<i32>,
    pub dims: Vec<usize>,
    /// Rank of each whitened differential.
    pub ranks: Vec<usize>,
    /// `‖d_{k+1} d_k‖ / (‖d_{k+1}‖ ‖d_k‖)` for each consecutive pair.
    pub composition_residuals: Vec<f64>,
    /// Spectral condition number of each Gram matrix.
    pub gram_conditions: Vec<f64>,
    /// `dim ker d_k − rank d_{k-1}` per term.
    pub cohomology_dims: Vec<i64>,
}

impl Diagnostics {
    pub fn is_exact(&self) -> bool {
        self.cohomology_dims.iter().all(|&h| h == 0)
    }

    pub fn is_complex(&self) -> bool {
        self.composition_residuals
            .iter()
            .all(|&r| r <= COMPOSITION_TOL)
    }
}

fn cholesky_lower(gram: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if gram.nrows() == 0 {
        return Some(DMatrix::zeros(0, 0));
    }
    gram.clone().cholesky().map(|c| c.l())
}

fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn numerical_rank(sv: &[f64]) -> usize {
    match sv.first() {
        Some(&top) if top > 0.0 => sv.iter().filter(|&&s| s > RANK_CUTOFF * top).count(),
        _ => 0,
    }
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

impl MetrizedComplex {
    /// Builds a complex, checking shapes, strictly increasing labels and
    /// positive definiteness of every Gram. `d ∘ d = 0` is *not* enforced
    /// here; [`MetrizedComplex::validate`] reports it.
    pub fn new(terms: Vec<Term>, differentials: Vec<DMatrix<f64>>) -> Result<Self> {
        if terms.is_empty() {
            if !differentials.is_empty() {
                return Err(Error::domain("differentials given for an empty complex"));
            }
            return Ok(MetrizedComplex {
                terms,
                differentials,
            });
        }
        if differentials.len() + 1 != terms.len() {
            return Err(Error::domain(format!(
                "{} terms need {} differentials, got {}",
                terms.len(),
                terms.len() - 1,
                differentials.len()
            )));
        }
        for w in terms.windows(2) {
            if w[1].label <= w[0].label {
                return Err(Error::domain(format!(
                    "grading labels must strictly increase ({} then {})",
                    w[0].label, w[1].label
                )));
            }
        }
        for t in &terms {
            let g = &t.gram;
            if !g.is_square() {
                return Err(Error::domain(format!(
                    "Gram at label {} is not square",
                    t.label
                )));
            }
            let asym = (g - g.transpose()).abs().max();
            if g.nrows() > 0 && asym > 1e-12 * g.abs().max() {
                return Err(Error::domain(format!(
                    "Gram at label {} is not symmetric",
                    t.label
                )));
            }
            if cholesky_lower(g).is_none() {
                return Err(Error::domain(format!(
                    "Gram at label {} is not positive definite",
                    t.label
                )));
            }
        }
        for (k, d) in differentials.iter().enumerate() {
            let (src, dst) = (terms[k].dim(), terms[k + 1].dim());
            if d.nrows() != dst || d.ncols() != src {
                return Err(Error::domain(format!(
                    "differential from label {} is {}×{}, expected {}×{}",
                    terms[k].label,
                    d.nrows(),
                    d.ncols(),
                    dst,
                    src
                )));
            }
        }
        Ok(MetrizedComplex {
            terms,
            differentials,
        })
    }

    /// Complex with identity Grams and consecutive labels from `first_label`.
    pub fn with_identity_grams(
        first_label: i32,
        dims: &[usize],
        differentials: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let terms = dims
            .iter()
            .enumerate()
            .map(|(i, &n)| Term::identity(first_label + i as i32, n))
            .collect();
        Self::new(terms, differentials)
    }

    pub fn zero() -> Self {
        MetrizedComplex {
            terms: Vec::new(),
            differentials: Vec::new(),
        }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn differentials(&self) -> &[DMatrix<f64>] {
        &self.differentials
    }

    pub fn labels(&self) -> Vec<i32> {
        self.terms.iter().map(|t| t.label).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.terms.iter().map(|t| t.dim()).collect()
    }

    /// Differentials in orthonormal coordinates.
    pub fn whitened_differentials(&self) -> Vec<DMatrix<f64>> {
        let factors: Vec<DMatrix<f64>> = self
            .terms
            .iter()
            .map(|t| cholesky_lower(&t.gram).expect("Gram checked at construction"))
            .collect();
        self.differentials
            .iter()
            .enumerate()
            .map(|(k, d)| {
                let (src, dst) = (&factors[k], &factors[k + 1]);
                if d.nrows() == 0 || d.ncols() == 0 {
                    return d.clone();
                }
                // d̃ᵀ = L_k^{-1} dᵀ L_{k+1}
                let rhs = d.transpose() * dst;
                src.solve_lower_triangular(&rhs)
                    .expect("Cholesky factor is invertible")
                    .transpose()
            })
            .collect()
    }

    pub fn validate(&self) -> Diagnostics {
        let whitened = self.whitened_differentials();
        let ranks: Vec<usize> = whitened
            .iter()
            .map(|d| numerical_rank(&singular_values(d)))
            .collect();
        let composition_residuals = self
            .differentials
            .windows(2)
            .map(|w| {
                let scale = spectral_norm(&w[1]) * spectral_norm(&w[0]);
                let prod = &w[1] * &w[0];
                let r = spectral_norm(&prod);
                if scale > 0.0 {
                    r / scale
                } else {
                    r
                }
            })
            .collect();
        let gram_conditions = self
            .terms
            .iter()
            .map(|t| {
                if t.dim() == 0 {
                    return 1.0;
                }
                let ev = t.gram.clone().symmetric_eigen().eigenvalues;
                ev.max() / ev.min()
            })
            .collect();
        let n = self.terms.len();
        let cohomology_dims = (0..n)
            .map(|k| {
                let into = if k > 0 { ranks[k - 1] } else { 0 };
                let out = if k + 1 < n { ranks[k] } else { 0 };
                self.terms[k].dim() as i64 - into as i64 - out as i64
            })
            .collect();
        Diagnostics {
            labels: self.labels(),
            dims: self.dims(),
            ranks,
            composition_residuals,
            gram_conditions,
            cohomology_dims,
        }
    }

    /// Log-volumes `s_j = Σ log σ(d̃_j)` of the whitened differentials,
    /// after checking exactness.
    pub fn log_volumes(&self) -> Result<Vec<f64>> {
        let diag = self.validate();
        if let Some((k, r)) = diag
            .composition_residuals
            .iter()
            .enumerate()
            .find(|(_, &r)| r > COMPOSITION_TOL)
        {
            return Err(Error::Precondition(format!(
                "not a complex: composition at label {} has relative size {r:.3e}",
                self.terms[k].label
            )));
        }
        let whitened = self.whitened_differentials();
        let svs: Vec<Vec<f64>> = whitened.iter().map(singular_values).collect();
        if let Some(k) = diag.cohomology_dims.iter().position(|&h| h != 0) {
            // Distinguish genuine cohomology from a numerically singular
            // Laplacian (tiny but nonzero singular values).
            let loose_rank = |j: usize| svs[j].iter().filter(|&&s| s > 1e-300).count();
            let n = self.terms.len();
            let into = if k > 0 { loose_rank(k - 1) } else { 0 };
            let out = if k + 1 < n { loose_rank(k) } else { 0 };
            let label = self.terms[k].label;
            if into + out == self.terms[k].dim() {
                return Err(Error::Degenerate(format!(
                    "Laplacian at label {label} is singular within the rank cutoff"
                )));
            }
            return Err(Error::Precondition(format!(
                "complex is not exact at label {label} (cohomology dimension {})",
                diag.cohomology_dims[k]
            )));
        }
        Ok(svs
            .iter()
            .zip(&diag.ranks)
            .map(|(s, &r)| s[..r].iter().map(|x| x.ln()).sum())
            .collect())
    }

    /// `log det Δ_k` for every term of an exact complex.
    pub fn laplacian_log_dets(&self) -> Result<Vec<f64>> {
        let s = self.log_volumes()?;
        let n = self.terms.len();
        Ok((0..n)
            .map(|k| {
                let into = if k > 0 { s[k - 1] } else { 0.0 };
                let out = if k + 1 < n { s[k] } else { 0.0 };
                2.0 * (into + out)
            })
            .collect())
    }

    pub fn torsion_acyclic(&self) -> Result<TorsionOfComplex> {
        let log_dets = self.laplacian_log_dets()?;
        let value = self
            .terms
            .iter()
            .zip(&log_dets)
            .map(|(t, ld)| {
                let g = t.label as f64;
                let sign = if t.label.rem_euclid(2) == 0 {
                    1.0
                } else {
                    -1.0
                };
                0.5 * sign * g * ld
            })
            .sum();
        Ok(TorsionOfComplex { value })
    }

    pub fn shift_grading(&self, l: i32) -> Self {
        let mut out = self.clone();
        out.terms.iter_mut().for_each(|t| t.label += l);
        out
    }

    /// `0 → E⁰ → … → E^k → Im(d_k) → 0` where `Im(d_k) ⊂ E^{k+1}` carries the
    /// restricted Gram and the label of `E^{k+1}`.
    pub fn truncate(&self, k: i32) -> Result<Self> {
        let i = self
            .terms
            .iter()
            .position(|t| t.label == k)
            .ok_or_else(|| Error::domain(format!("no term with label {k}")))?;
        let diag = self.validate();
        if !diag.is_exact() || !diag.is_complex() {
            return Err(Error::Precondition(
                "truncation needs an exact complex".into(),
            ));
        }
        if i + 1 == self.terms.len() {
            return Ok(self.clone());
        }
        let d = &self.differentials[i];
        let next = &self.terms[i + 1];
        let mut terms = self.terms[..=i].to_vec();
        let mut differentials = self.differentials[..i].to_vec();
        let rank = numerical_rank(&singular_values(d));
        if rank == next.dim() {
            terms.push(next.clone());
            differentials.push(d.clone());
        } else {
            // Euclidean-orthonormal basis of the column space.
            let svd = d.clone().svd(true, false);
            let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
            order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
            let u = svd.u.expect("requested U");
            let basis = DMatrix::from_fn(next.dim(), rank, |r, c| u[(r, order[c])]);
            let gram = basis.transpose() * &next.gram * &basis;
            let gram = 0.5 * (&gram + gram.transpose());
            terms.push(Term::new(next.label, gram));
            differentials.push(basis.transpose() * d);
        }
        Self::new(terms, differentials)
    }

    /// Termwise orthogonal direct sum; both complexes need the same labels.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.labels() != other.labels() {
            return Err(Error::domain("direct sum needs identical grading labels"));
        }
        let terms = self
            .terms
            .iter()
            .zip(&other.terms)
            .map(|(a, b)| Term::new(a.label, block_diag(&a.gram, &b.gram)))
            .collect();
        let differentials = self
            .differentials
            .iter()
            .zip(&other.differentials)
            .map(|(a, b)| block_diag(a, b))
            .collect();
        Self::new(terms, differentials)
    }

    /// Replaces the Gram at each listed term index by `factor⁻² · Gram`.
    pub fn with_scaled_grams(&self, scale_positions: &[(usize, f64)]) -> Result<Self> {
        let mut out = self.clone();
        for &(idx, factor) in scale_positions {
            if !(factor > 0.0 && factor.is_finite()) {
                return Err(Error::domain(format!(
                    "scale factor must be positive, got {factor}"
                )));
            }
            let term = out
                .terms
                .get_mut(idx)
                .ok_or_else(|| Error::domain(format!("no term at position {idx}")))?;
            term.gram /= factor * factor;
        }
        Ok(out)
    }

    /// Same complex in a new basis `x = P x'` on every term: Grams become
    /// `PᵀGP` and differentials `P_{k+1}^{-1} d P_k`. Torsion is unchanged.
    pub fn change_basis(&self, bases: &[DMatrix<f64>]) -> Result<Self> {
        if bases.len() != self.terms.len() {
            return Err(Error::domain("one basis change per term is required"));
        }
        let inverses = bases
            .iter()
            .map(|p| {
                if p.nrows() == 0 {
                    Some(p.clone())
                } else {
                    p.clone().try_inverse()
                }
            })
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::domain("basis change is singular"))?;
        let terms = self
            .terms
            .iter()
            .zip(bases)
            .map(|(t, p)| {
                let g = p.transpose() * &t.gram * p;
                Term::new(t.label, 0.5 * (&g + g.transpose()))
            })
            .collect();
        let differentials = self
            .differentials
            .iter()
            .enumerate()
            .map(|(k, d)| &inverses[k + 1] * d * &bases[k])
            .collect();
        Self::new(terms, differentials)
    }

    // -----------------------------------------------------------------------
    // Text format
    // -----------------------------------------------------------------------

    /// Parses the plain-text matrix format:
    ///
    /// ```text
    /// # comment lines and blank lines are ignored
    /// dims 1 2 1
    /// grading 0 1 2
    /// # then one row-major matrix per differential, dims[k+1] rows of
    /// # dims[k] numbers each
    /// 1
    /// 1
    /// 1 -1
    /// # optional Gram sections: "gram <position>" then dims rows
    /// gram 1
    /// 2 0
    /// 0 2
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let perr = |line: usize, message: String| Error::Parse { line, message };
        let mut header = |key: &str| -> Result<(usize, Vec<String>)> {
            let (n, l) = lines
                .next()
                .ok_or_else(|| perr(0, format!("missing '{key}' line")))?;
            let mut words = l.split_whitespace();
            if words.next() != Some(key) {
                return Err(perr(n, format!("expected '{key}' line")));
            }
            Ok((n, words.map(str::to_string).collect()))
        };
        let (n_dims, dims_raw) = header("dims")?;
        let dims = dims_raw
            .iter()
            .map(|w| w.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| perr(n_dims, format!("bad dimension: {e}")))?;
        let (n_grad, grad_raw) = header("grading")?;
        let labels = grad_raw
            .iter()
            .map(|w| w.parse::<i32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| perr(n_grad, format!("bad grading label: {e}")))?;
        if labels.len() != dims.len() {
            return Err(perr(
                n_grad,
                "grading and dims have different lengths".into(),
            ));
        }

        let rest: Vec<(usize, &str)> = lines.collect();
        let mut cursor = 0usize;
        let read_matrix = |cursor: &mut usize, rows: usize, cols: usize| -> Result<DMatrix<f64>> {
            let mut m = DMatrix::zeros(rows, cols);
            if cols == 0 {
                return Ok(m);
            }
            for r in 0..rows {
                let (n, l) = rest
                    .get(*cursor)
                    .copied()
                    .ok_or_else(|| perr(0, "unexpected end of file inside a matrix".into()))?;
                *cursor += 1;
                let vals = l
                    .split_whitespace()
                    .map(str::parse::<f64>)
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| perr(n, format!("bad number: {e}")))?;
                if vals.len() != cols {
                    return Err(perr(
                        n,
                        format!("expected {cols} entries, found {}", vals.len()),
                    ));
                }
                for (c, v) in vals.into_iter().enumerate() {
                    m[(r, c)] = v;
                }
            }
            Ok(m)
        };

        let mut differentials = Vec::new();
        for k in 0..dims.len().saturating_sub(1) {
            differentials.push(read_matrix(&mut cursor, dims[k + 1], dims[k])?);
        }
        let mut grams: Vec<DMatrix<f64>> = dims.iter().map(|&n| DMatrix::identity(n, n)).collect();
        while let Some(&(n, l)) = rest.get(cursor) {
            cursor += 1;
            let mut words = l.split_whitespace();
            if words.next() != Some("gram") {
                return Err(perr(n, "expected 'gram <position>' or end of file".into()));
            }
            let pos: usize = words
                .next()
                .and_then(|w| w.parse().ok())
                .filter(|&p: &usize| p < dims.len())
                .ok_or_else(|| perr(n, "bad gram position".into()))?;
            grams[pos] = read_matrix(&mut cursor, dims[pos], dims[pos])?;
        }
        let terms = labels
            .into_iter()
            .zip(grams)
            .map(|(l, g)| Term::new(l, g))
            .collect();
        Self::new(terms, differentials)
    }

    /// Inverse of [`MetrizedComplex::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let join = |v: Vec<String>| v.join(" ");
        let _ = writeln!(
            s,
            "dims {}",
            join(self.dims().iter().map(|d| d.to_string()).collect())
        );
        let _ = writeln!(
            s,
            "grading {}",
            join(self.labels().iter().map(|d| d.to_string()).collect())
        );
        let write_matrix = |s: &mut String, m: &DMatrix<f64>| {
            if m.ncols() == 0 {
                return;
            }
            for r in 0..m.nrows() {
                let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:e}", m[(r, c)])).collect();
                let _ = writeln!(s, "{}", row.join(" "));
            }
        };
        for d in &self.differentials {
            write_matrix(&mut s, d);
        }
        for (i, t) in self.terms.iter().enumerate() {
            if t.gram != DMatrix::identity(t.dim(), t.dim()) {
                let _ = writeln!(s, "gram {i}");
                write_matrix(&mut s, &t.gram);
            }
        }
        s
    }
}

pub fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    m
}

/// `|T(H″[1]) + T(H) − T(H′[1])|`, where `[1]` shifts labels by one.
pub fn additivity_check(
    h_dd: &MetrizedComplex,
    h: &MetrizedComplex,
    h_d: &MetrizedComplex,
) -> Result<f64> {
    let a = h_dd.shift_grading(1).torsion_acyclic()?.value;
    let b = h.torsion_acyclic()?.value;
    let c = h_d.shift_grading(1).torsion_acyclic()?.value;
    Ok((a + b - c).abs())
}

/// `T(scaled) − T(base)` where each listed term's Gram is multiplied by
/// `factor⁻²`.
pub fn compare_scaled_sequences(
    base: &MetrizedComplex,
    scale_positions: &[(usize, f64)],
) -> Result<f64> {
    let scaled = base.with_scaled_grams(scale_positions)?;
    Ok(scaled.torsion_acyclic()?.value - base.torsion_acyclic()?.value)
}

// ---------------------------------------------------------------------------
// Random generators
// ---------------------------------------------------------------------------

fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Orthogonal matrix from the QR factorization of a Gaussian matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    gaussian(n, n, rng).qr().q()
}

/// Well-conditioned invertible matrix `Q₁ D Q₂` with `D` in `[1/2, 2]`.
pub fn random_invertible<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let q1 = random_orthogonal(n, rng);
    let q2 = random_orthogonal(n, rng);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| {
        2f64.powf(rng.random_range(-1.0..1.0))
    }));
    q1 * d * q2
}

fn random_nonsingular_square<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    random_invertible(n, rng) * rng.random_range(0.5..2.0)
}

/// Random exact complex whose `j`-th differential has rank `ranks[j]`,
/// expressed in random non-orthonormal bases with non-identity Grams.
pub fn random_exact_complex<R: Rng + ?Sized>(
    ranks: &[usize],
    first_label: i32,
    rng: &mut R,
) -> MetrizedComplex {
    let n_terms = ranks.len() + 1;
    let rank = |j: isize| -> usize {
        if j < 0 || j as usize >= ranks.len() {
            0
        } else {
            ranks[j as usize]
        }
    };
    let dims: Vec<usize> = (0..n_terms as isize)
        .map(|k| rank(k - 1) + rank(k))
        .collect();
    // Term k = Im(d_{k-1}) ⊕ complement; d_k maps the complement onto the
    // first block of term k+1.
    let differentials: Vec<DMatrix<f64>> = (0..ranks.len())
        .map(|j| {
            let r = ranks[j];
            let mut d = DMatrix::zeros(dims[j + 1], dims[j]);
            let m = random_nonsingular_square(r, rng);
            d.view_mut((0, dims[j] - r), (r, r)).copy_from(&m);
            d
        })
        .collect();
    let c = MetrizedComplex::with_identity_grams(first_label, &dims, differentials)
        .expect("shapes are consistent by construction");
    let bases: Vec<DMatrix<f64>> = dims.iter().map(|&n| random_invertible(n, rng)).collect();
    c.change_basis(&bases).expect("random bases are invertible")
}

/// Short exact sequence `0 → A → B → C → 0` of exact complexes with
/// compatible metrics (`A` isometric onto its image, `C` isometric to the
/// orthogonal complement), `B` carrying a nontrivial extension class and all
/// three expressed in independent random bases. Returns `(A, B, C)`.
pub fn random_compatible_triple<R: Rng + ?Sized>(
    ranks_a: &[usize],
    ranks_c: &[usize],
    first_label: i32,
    rng: &mut R,
) -> Result<(MetrizedComplex, MetrizedComplex, MetrizedComplex)> {
    if ranks_a.len() != ranks_c.len() {
        return Err(Error::domain("A and C need the same number of terms"));
    }
    let a = random_exact_complex(ranks_a, first_label, rng);
    let c = random_exact_complex(ranks_c, first_label, rng);
    let (da, dc) = (a.dims(), c.dims());
    let n = da.len();
    // Homotopy-like maps h_k: C_k → A_k give X_k = d_A h_k − h_{k+1} d_C,
    // which makes the block-triangular differential square to zero.
    let h: Vec<DMatrix<f64>> = (0..n).map(|k| gaussian(da[k], dc[k], rng)).collect();
    let terms: Vec<Term> = (0..n)
        .map(|k| {
            Term::new(
                a.terms[k].label,
                block_diag(&a.terms[k].gram, &c.terms[k].gram),
            )
        })
        .collect();
    let differentials: Vec<DMatrix<f64>> = (0..n - 1)
        .map(|k| {
            let x = &a.differentials[k] * &h[k] - &h[k + 1] * &c.differentials[k];
            let mut d = block_diag(&a.differentials[k], &c.differentials[k]);
            d.view_mut((0, da[k]), x.shape()).copy_from(&x);
            d
        })
        .collect();
    // Orthogonal complements: the Gram of B must make A ⊥ C. With
    // block-diagonal Gram this already holds.
    let b = MetrizedComplex::new(terms, differentials)?;
    let bases: Vec<DMatrix<f64>> = b
        .dims()
        .iter()
        .map(|&m| random_invertible(m, rng))
        .collect();
    Ok((a, b.change_basis(&bases)?, c))
}
