//! Identity catalog, scenario runner and JSON reports.
//!
//! A scenario names an identity, a parameter map, a tolerance and a
//! computation mode. Every identity evaluates a left- and a right-hand side;
//! a row passes when `|lhs − rhs| ≤ tolerance`. Calibration is performed
//! once per suite and embedded in every row.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI, SQRT_2};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::complex::{
    additivity_check, compare_scaled_sequences, random_compatible_triple, MetrizedComplex,
};
use crate::error::{Error, Result};
use crate::heat_kernel::{corrected_integral, heat_trace, IntervalSpec, ScalarBcPair};
use crate::model::{
    mayer_vietoris, FiberShape, FormBcPair, MayerVietorisInstance, ModelFiber, Sequence,
};
use crate::torsion::{
    calibrate, theorem23_sweep, torsion, CalibrationRecord, CalibrationTarget, TorsionMode,
};

/// Registered identities.
pub const IDENTITY_IDS: [&str; 11] = [
    "E2.32", "E2.35", "E2.36", "L2.2", "L3.1", "MS", "P2.1", "T0.2", "T2.3", "T2.4", "T3.2",
];

/// Default tolerance for identities between closed-form quantities.
pub const CLOSED_FORM_TOL: f64 = 1e-10;

/// Default tolerance for identities that go through quadrature.
pub const QUADRATURE_TOL: f64 = 1e-6;

/// Absolute tolerance used for the corrected interval integrals.
const LEMMA_QUADRATURE_TOL: f64 = 1e-10;

/// Half-lengths of the cylinder-length sweep.
pub const SWEEP_LENGTHS: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigMode {
    PaperClosedForm,
    #[default]
    DirectSpectral,
    Both,
}

impl ConfigMode {
    pub fn modes(self) -> Vec<TorsionMode> {
        match self {
            ConfigMode::PaperClosedForm => vec![TorsionMode::PaperClosedForm],
            ConfigMode::DirectSpectral => vec![TorsionMode::DirectSpectral],
            ConfigMode::Both => vec![TorsionMode::PaperClosedForm, TorsionMode::DirectSpectral],
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.to_string())).map_err(|_| {
            Error::usage(format!(
                "unknown mode '{s}' (expected paper_closed_form, direct_spectral or both)"
            ))
        })
    }
}

/// Parameter map; keys are kept sorted so reports order deterministically.
pub type Parameters = serde_json::Map<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub identity_id: String,
    #[serde(default)]
    pub parameters: Parameters,
    /// Defaults to the identity's registered tolerance.
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub mode: ConfigMode,
}

impl ScenarioConfig {
    pub fn new(identity_id: &str, parameters: Value) -> Self {
        let parameters = match parameters {
            Value::Object(map) => map,
            _ => Parameters::new(),
        };
        ScenarioConfig {
            identity_id: identity_id.to_string(),
            parameters,
            tolerance: None,
            mode: ConfigMode::DirectSpectral,
        }
    }

    pub fn with_mode(mut self, mode: ConfigMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = Some(tolerance);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !IDENTITY_IDS.contains(&self.identity_id.as_str()) {
            return Err(Error::usage(format!(
                "unknown identity '{}' (registered: {})",
                self.identity_id,
                IDENTITY_IDS.join(", ")
            )));
        }
        if let Some(t) = self.tolerance {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::usage(format!("tolerance must be ≥ 0, got {t}")));
            }
        }
        let allowed = allowed_parameters(&self.identity_id);
        if let Some(k) = self
            .parameters
            .keys()
            .find(|k| !allowed.contains(&k.as_str()))
        {
            return Err(Error::usage(format!(
                "identity {} does not take parameter '{k}' (allowed: {})",
                self.identity_id,
                allowed.join(", ")
            )));
        }
        Ok(())
    }

    fn tolerance(&self) -> f64 {
        self.tolerance
            .unwrap_or_else(|| default_tolerance(&self.identity_id))
    }
}

/// Suite configuration file: `{"scenarios": [...], "only": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub scenarios: Vec<ScenarioConfig>,
    /// Optional subset of identity ids to run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub only: Option<Vec<String>>,
}

impl SuiteConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: SuiteConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: format!("column {}: {e}", e.column()),
        })?;
        for s in &cfg.scenarios {
            s.validate()?;
        }
        if let Some(only) = &cfg.only {
            if let Some(bad) = only.iter().find(|id| !IDENTITY_IDS.contains(&id.as_str())) {
                return Err(Error::usage(format!("unknown identity '{bad}' in 'only'")));
            }
        }
        Ok(cfg)
    }

    pub fn selected(&self) -> Vec<&ScenarioConfig> {
        self.scenarios
            .iter()
            .filter(|s| {
                self.only
                    .as_ref()
                    .is_none_or(|ids| ids.contains(&s.identity_id))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity_id: String,
    pub parameters: Parameters,
    pub mode: TorsionMode,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub calibration: CalibrationRecord,
    /// Supporting quantities (raw values, alternative normalizations).
    pub diagnostics: BTreeMap<String, f64>,
    pub runtime_ms: f64,
}

impl IdentityReport {
    fn sort_key(&self) -> (String, String, String) {
        (
            self.identity_id.clone(),
            Value::Object(self.parameters.clone()).to_string(),
            format!("{:?}", self.mode),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub calibration: CalibrationRecord,
    pub rows: Vec<IdentityReport>,
    pub all_pass: bool,
}

impl SuiteReport {
    pub fn exit_code(&self) -> i32 {
        if self.all_pass {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only JSON-safe values") + "\n"
    }

    /// JSON payload with the timing fields removed.
    pub fn to_json_without_timing(&self) -> String {
        let mut v = serde_json::to_value(self).expect("reports contain only JSON-safe values");
        if let Some(rows) = v.get_mut("rows").and_then(Value::as_array_mut) {
            for row in rows {
                if let Some(obj) = row.as_object_mut() {
                    obj.remove("runtime_ms");
                }
            }
        }
        serde_json::to_string_pretty(&v).expect("valid JSON") + "\n"
    }
}

fn default_tolerance(id: &str) -> f64 {
    match id {
        "L2.2" | "T2.3" | "T2.4" | "T3.2" | "T0.2" => QUADRATURE_TOL,
        "MS" | "E2.35" => 1e-12,
        "E2.32" => 1e-8,
        "E2.36" | "L3.1" => 1e-9,
        _ => CLOSED_FORM_TOL,
    }
}

const CROSS_SECTION_KEYS: [&str; 4] = ["cross_section", "count", "length", "holonomy"];

fn allowed_parameters(id: &str) -> Vec<&'static str> {
    let mut keys: Vec<&'static str> = match id {
        "L2.2" => vec!["bc"],
        "MS" => vec!["half_length", "t"],
        "P2.1" => vec!["half_length", "bc", "rank"],
        "T2.3" => vec!["bc", "rank"],
        "E2.32" => vec!["rank"],
        "E2.35" => vec!["rank", "label"],
        "E2.36" => vec!["half_length", "rank"],
        "L3.1" => vec!["family", "seed", "count", "l1", "l2", "rank"],
        "T2.4" => vec!["half_length", "rank"],
        "T3.2" | "T0.2" => vec!["l1", "l2", "rank"],
        _ => vec![],
    };
    if matches!(id, "P2.1" | "T2.3" | "E2.32" | "E2.36") {
        keys.extend(CROSS_SECTION_KEYS);
    }
    keys
}

// ---------------------------------------------------------------------------
// Parameter access
// ---------------------------------------------------------------------------

struct Params<'a>(&'a Parameters);

impl Params<'_> {
    fn num(&self, key: &str, default: f64) -> Result<f64> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| {
                Error::usage(format!("parameter '{key}' must be a number, got {v}"))
            }),
        }
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let x = self.num(key, default)?;
        if x > 0.0 && x.is_finite() {
            Ok(x)
        } else {
            Err(Error::usage(format!(
                "parameter '{key}' must be positive, got {x}"
            )))
        }
    }

    fn count(&self, key: &str, default: u64) -> Result<u64> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v.as_u64().filter(|&n| n > 0).ok_or_else(|| {
                Error::usage(format!(
                    "parameter '{key}' must be a positive integer, got {v}"
                ))
            }),
        }
    }

    fn int(&self, key: &str, default: i64) -> Result<i64> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v.as_i64().ok_or_else(|| {
                Error::usage(format!("parameter '{key}' must be an integer, got {v}"))
            }),
        }
    }

    fn text<'b>(&'b self, key: &str, default: &'b str) -> Result<&'b str> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v.as_str().ok_or_else(|| {
                Error::usage(format!("parameter '{key}' must be a string, got {v}"))
            }),
        }
    }

    fn form_bc(&self, default: FormBcPair) -> Result<FormBcPair> {
        match self.0.get("bc") {
            None => Ok(default),
            Some(_) => FormBcPair::parse(self.text("bc", "")?),
        }
    }

    fn cross_section(&self) -> Result<FiberShape> {
        let shape = match self.text("cross_section", "point")? {
            "point" | "points" => FiberShape::point(self.count("count", 1)?),
            "circle" => FiberShape::circle(
                self.positive("length", 2.0 * PI)?,
                self.num("holonomy", 0.0)?,
            ),
            other => {
                return Err(Error::usage(format!(
                    "cross_section must be 'point' or 'circle', got '{other}'"
                )))
            }
        };
        shape.validate()?;
        Ok(shape)
    }
}

// ---------------------------------------------------------------------------
// Identities
// ---------------------------------------------------------------------------

struct Outcome {
    lhs: f64,
    rhs: f64,
    diagnostics: BTreeMap<String, f64>,
}

impl Outcome {
    fn new(lhs: f64, rhs: f64) -> Self {
        Outcome {
            lhs,
            rhs,
            diagnostics: BTreeMap::new(),
        }
    }

    fn note(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }
}

/// `χ` of a fiber, counting the bundle rank.
fn chi(shape: &FiberShape, rank: u64) -> Result<f64> {
    Ok(ModelFiber::new(shape.clone(), rank)?.euler_chars().0 as f64)
}

fn fiber_torsion(
    shape: FiberShape,
    rank: u64,
    mode: TorsionMode,
    cal: &CalibrationRecord,
) -> Result<f64> {
    Ok(torsion(&ModelFiber::new(shape, rank)?, mode, cal)?.value)
}

fn lemma22(p: &Params, cal: &CalibrationRecord) -> Result<Outcome> {
    let (bc, target) = match p.text("bc", "dd")? {
        "dd" => (ScalarBcPair::DD, -4.0 * LN_2),
        "dn" => (ScalarBcPair::DN, -2.0 * LN_2),
        other => {
            return Err(Error::usage(format!(
                "bc must be 'dd' or 'dn', got '{other}'"
            )))
        }
    };
    let raw = corrected_integral(bc, 1.0, LEMMA_QUADRATURE_TOL)?;
    let lhs = match cal.applied_to {
        CalibrationTarget::FinalTorsion => cal.kappa * raw.value,
        CalibrationTarget::HeatTrace => {
            corrected_integral(bc, cal.kappa, LEMMA_QUADRATURE_TOL)?.value
        }
    };
    Ok(Outcome::new(lhs, target)
        .note("raw_integral", raw.value)
        .note("quadrature_error_estimate", raw.error_estimate))
}

fn mckean_singer(p: &Params) -> Result<Outcome> {
    let spec = IntervalSpec::new(p.positive("half_length", 1.0)?)?;
    let t = p.positive("t", 1.0)?;
    let nn = heat_trace(spec, ScalarBcPair::NN, t)?;
    let dd = heat_trace(spec, ScalarBcPair::DD, t)?;
    Ok(Outcome::new(nn - dd, 1.0)
        .note("trace_nn", nn)
        .note("trace_dd", dd))
}

fn betti_vanishing(p: &Params) -> Result<Outcome> {
    let bc = p.form_bc(FormBcPair::AR)?;
    if !bc.is_mixed() {
        return Err(Error::usage(
            "P2.1 needs mixed boundary conditions (ar or ra)",
        ));
    }
    let y = p.cross_section()?;
    let fiber = ModelFiber::new(
        FiberShape::cylinder(y, p.positive("half_length", 1.0)?, bc),
        p.count("rank", 1)?,
    )?;
    // Kernel dimensions read off the spectra, independent of the Betti table.
    let zero_modes: u64 = fiber.form_spectrum().iter().map(|s| s.zero_modes()).sum();
    let betti: u64 = fiber.betti().iter().sum();
    Ok(Outcome::new(zero_modes as f64, 0.0).note("betti_sum", betti as f64))
}

fn theorem23(p: &Params, mode: TorsionMode, cal: &CalibrationRecord) -> Result<Outcome> {
    let y = p.cross_section()?;
    let rank = p.count("rank", 1)?;
    let bc = p.form_bc(FormBcPair::AA)?;
    let chi_y = chi(&y, rank)?;
    let lhs = fiber_torsion(FiberShape::cylinder(y.clone(), 1.0, bc), rank, mode, cal)?;
    let rhs = if bc.is_mixed() {
        -LN_2 * chi_y
    } else if bc == FormBcPair::AA {
        let t_y = match y {
            FiberShape::PointSet { .. } => 0.0,
            _ => fiber_torsion(y, rank, TorsionMode::DirectSpectral, cal)?,
        };
        t_y - 2.0 * LN_2 * chi_y
    } else {
        return Err(Error::usage("T2.3 covers the ar, ra and aa lines"));
    };
    Ok(Outcome::new(lhs, rhs).note("chi_y", chi_y))
}

fn length_sweep(p: &Params, mode: TorsionMode, cal: &CalibrationRecord) -> Result<Outcome> {
    let y = p.cross_section()?;
    let s = theorem23_sweep(&y, p.count("rank", 1)?, &SWEEP_LENGTHS, mode, cal)?;
    let mut out = Outcome::new(s.absolute_relative_spread.max(s.fit_residual), 0.0)
        .note("absolute_relative_spread", s.absolute_relative_spread)
        .note("fit_residual", s.fit_residual)
        .note("measured_slope", s.measured_slope)
        .note("paper_slope", s.paper_slope)
        .note("slope_mismatch", s.measured_slope - s.paper_slope);
    for row in &s.rows {
        out = out
            .note(
                &format!("t_ar(l={})", row.half_length),
                row.absolute_relative,
            )
            .note(
                &format!("t_aa(l={})", row.half_length),
                row.absolute_absolute,
            );
    }
    Ok(out)
}

/// `0 → ℝ^r --√2--> ℝ^r → 0` with labels `(k, k+1)`.
pub fn sqrt2_complex(rank: usize, first_label: i32) -> Result<MetrizedComplex> {
    MetrizedComplex::with_identity_grams(
        first_label,
        &[rank, rank],
        vec![DMatrix::identity(rank, rank) * SQRT_2],
    )
}

fn scaling_torsion(p: &Params) -> Result<Outcome> {
    let rank = p.count("rank", 1)? as usize;
    let label = p.int("label", 0)?;
    let label = i32::try_from(label).map_err(|_| Error::usage("label out of range"))?;
    let lhs = sqrt2_complex(rank, label)?.torsion_acyclic()?.value;
    let sign = if label.rem_euclid(2) == 0 { -1.0 } else { 1.0 };
    Ok(Outcome::new(lhs, sign * rank as f64 / 2.0 * LN_2))
}

/// `(position, √2)` for every nonempty `H^k(∂)` slot (labels `3k + 2`).
pub fn boundary_slots(c: &MetrizedComplex) -> Vec<(usize, f64)> {
    c.terms()
        .iter()
        .enumerate()
        .filter(|(_, t)| t.label.rem_euclid(3) == 2 && t.dim() > 0)
        .map(|(i, _)| (i, SQRT_2))
        .collect()
}

fn sequence_comparison(p: &Params) -> Result<Outcome> {
    let y = p.cross_section()?;
    let rank = p.count("rank", 1)?;
    let inst = MayerVietorisInstance::CylinderBoundary {
        cross_section: y.clone(),
        half_length: p.positive("half_length", 1.0)?,
        collar_half_length: 1.0,
        bundle_rank: rank,
    };
    let pair = mayer_vietoris(&inst, Sequence::Pair)?;
    let slots = boundary_slots(&pair);
    let lhs = compare_scaled_sequences(&pair, &slots)?;
    // -(log 2)/2 Σ_k (-1)^k rk H^k(∂), read off the slots themselves.
    let alternating: f64 = slots
        .iter()
        .map(|&(i, _)| {
            let t = &pair.terms()[i];
            let k = t.label.div_euclid(3);
            if k % 2 == 0 {
                t.dim() as f64
            } else {
                -(t.dim() as f64)
            }
        })
        .sum();
    let collar = mayer_vietoris(&inst, Sequence::Collar)?;
    let t_pair = pair.torsion_acyclic()?.value;
    Ok(Outcome::new(lhs, -LN_2 / 2.0 * alternating)
        .note("chi_boundary", alternating)
        .note("chi_y", chi(&y, rank)?)
        .note(
            "collar_minus_pair",
            collar.torsion_acyclic()?.value - t_pair,
        ))
}

fn additivity(p: &Params) -> Result<Outcome> {
    match p.text("family", "random")? {
        "random" => {
            let seed = p.int("seed", 7)?;
            let count = p.count("count", 100)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
            let mut worst: f64 = 0.0;
            for _ in 0..count {
                let maps = rng.random_range(1..=4usize);
                let ranks = |rng: &mut ChaCha8Rng| -> Vec<usize> {
                    (0..maps).map(|_| rng.random_range(0..=2usize)).collect()
                };
                let ranks_a = ranks(&mut rng);
                let ranks_c = ranks(&mut rng);
                let first_label = rng.random_range(-3..=3);
                let (a, b, c) =
                    random_compatible_triple(&ranks_a, &ranks_c, first_label, &mut rng)?;
                worst = worst.max(additivity_check(&a, &c.shift_grading(1), &b)?);
            }
            Ok(Outcome::new(worst, 0.0).note("triples", count as f64))
        }
        "arcs" => {
            let inst = MayerVietorisInstance::CircleArcs {
                arc1: p.positive("l1", 1.0)?,
                arc2: p.positive("l2", 1.0)?,
                collar_half_length: 1.0,
                bundle_rank: p.count("rank", 1)?,
            };
            let t = |s| -> Result<MetrizedComplex> { mayer_vietoris(&inst, s) };
            let (h, h_d, h_dd) = (
                t(Sequence::Gluing)?,
                t(Sequence::Collar)?,
                t(Sequence::Pair)?,
            );
            let lhs = h_dd.shift_grading(1).torsion_acyclic()?.value + h.torsion_acyclic()?.value;
            let rhs = h_d.shift_grading(1).torsion_acyclic()?.value;
            Ok(Outcome::new(lhs, rhs))
        }
        other => Err(Error::usage(format!(
            "family must be 'random' or 'arcs', got '{other}'"
        ))),
    }
}

fn comparison_formula(p: &Params, mode: TorsionMode, cal: &CalibrationRecord) -> Result<Outcome> {
    let l = p.positive("half_length", 1.0)?;
    let rank = p.count("rank", 1)?;
    // Z = [-l, l] with Y = both endpoints.
    let y = FiberShape::point(2);
    let chi_y = chi(&y, rank)?;
    let pieces = |cal: &CalibrationRecord| -> Result<(f64, f64, f64)> {
        let t_r = fiber_torsion(
            FiberShape::Interval {
                half_length: l,
                bc: FormBcPair::RR,
            },
            rank,
            mode,
            cal,
        )?;
        let t_a = fiber_torsion(
            FiberShape::Interval {
                half_length: l,
                bc: FormBcPair::AA,
            },
            rank,
            mode,
            cal,
        )?;
        let t_y = fiber_torsion(y.clone(), rank, mode, cal)?;
        Ok((t_r, t_a, t_y))
    };
    let inst = MayerVietorisInstance::CylinderBoundary {
        cross_section: FiberShape::point(1),
        half_length: l,
        collar_half_length: 1.0,
        bundle_rank: rank,
    };
    let t_h2 = mayer_vietoris(&inst, Sequence::Pair)?
        .torsion_acyclic()?
        .value;
    let (t_r, t_a, t_y) = pieces(cal)?;
    let (raw_r, raw_a, raw_y) = pieces(&CalibrationRecord::unit())?;
    let lhs = t_r - t_a + t_y + t_h2;
    let rhs = 1.5 * LN_2 * chi_y;
    Ok(Outcome::new(lhs, rhs)
        .note("t_relative", t_r)
        .note("t_absolute", t_a)
        .note("t_y", t_y)
        .note("t_h_pair", t_h2)
        .note("chi_y", chi_y)
        .note("unit_count_lhs", raw_r - raw_a + raw_y + t_h2)
        .note("residual_over_log2", (lhs - rhs) / LN_2))
}

/// `T(circle) − T_r(Z₁) − T_a(Z₂)` against `T_H + c · rk χ(Y)` with the
/// circle of length `L₁ + L₂` cut at two points into arcs of lengths `L₁`
/// (relative) and `L₂` (absolute).
fn gluing(p: &Params, c: f64, mode: TorsionMode, cal: &CalibrationRecord) -> Result<Outcome> {
    let l1 = p.positive("l1", 1.0)?;
    let l2 = p.positive("l2", 1.0)?;
    let rank = p.count("rank", 1)?;
    let chi_y = chi(&FiberShape::point(2), rank)?;
    let sides = |cal: &CalibrationRecord| -> Result<f64> {
        let t = fiber_torsion(FiberShape::circle(l1 + l2, 0.0), rank, mode, cal)?;
        let t1 = fiber_torsion(
            FiberShape::Interval {
                half_length: l1 / 2.0,
                bc: FormBcPair::RR,
            },
            rank,
            mode,
            cal,
        )?;
        let t2 = fiber_torsion(
            FiberShape::Interval {
                half_length: l2 / 2.0,
                bc: FormBcPair::AA,
            },
            rank,
            mode,
            cal,
        )?;
        Ok(t - t1 - t2)
    };
    let inst = MayerVietorisInstance::CircleArcs {
        arc1: l1,
        arc2: l2,
        collar_half_length: 1.0,
        bundle_rank: rank,
    };
    let t_h = mayer_vietoris(&inst, Sequence::Gluing)?
        .torsion_acyclic()?
        .value;
    let lhs = sides(cal)?;
    let rhs = t_h + c * chi_y;
    let unit_lhs = sides(&CalibrationRecord::unit())?;
    let unit_offset = (unit_lhs - t_h) / (LN_2 / 2.0 * chi_y);
    Ok(Outcome::new(lhs, rhs)
        .note("t_h", t_h)
        .note("chi_y", chi_y)
        .note(
            "offset_over_half_log2_chi",
            (lhs - t_h) / (LN_2 / 2.0 * chi_y),
        )
        .note("unit_count_lhs", unit_lhs)
        .note("unit_count_offset_over_half_log2_chi", unit_offset))
}

/// Evaluates one identity in one mode.
pub fn run_identity(
    config: &ScenarioConfig,
    mode: TorsionMode,
    cal: &CalibrationRecord,
) -> Result<IdentityReport> {
    config.validate()?;
    let start = Instant::now();
    let p = Params(&config.parameters);
    let outcome = match config.identity_id.as_str() {
        "L2.2" => lemma22(&p, cal)?,
        "MS" => mckean_singer(&p)?,
        "P2.1" => betti_vanishing(&p)?,
        "T2.3" => theorem23(&p, mode, cal)?,
        "E2.32" => length_sweep(&p, mode, cal)?,
        "E2.35" => scaling_torsion(&p)?,
        "E2.36" => sequence_comparison(&p)?,
        "L3.1" => additivity(&p)?,
        "T2.4" => comparison_formula(&p, mode, cal)?,
        "T3.2" => gluing(&p, LN_2, mode, cal)?,
        "T0.2" => gluing(&p, LN_2 / 2.0, mode, cal)?,
        other => unreachable!("validated identity id {other}"),
    };
    let tolerance = config.tolerance();
    let residual = (outcome.lhs - outcome.rhs).abs();
    Ok(IdentityReport {
        identity_id: config.identity_id.clone(),
        parameters: config.parameters.clone(),
        mode,
        lhs: outcome.lhs,
        rhs: outcome.rhs,
        residual,
        tolerance,
        pass: residual <= tolerance,
        calibration: *cal,
        diagnostics: outcome.diagnostics,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// All rows of one scenario (two when the mode is `both`).
pub fn run_scenario(
    config: &ScenarioConfig,
    cal: &CalibrationRecord,
) -> Result<Vec<IdentityReport>> {
    config
        .mode
        .modes()
        .into_iter()
        .map(|m| run_identity(config, m, cal))
        .collect()
}

/// Calibrates once, then evaluates the selected scenarios in parallel.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    let cal = calibrate()?;
    run_suite_with(config, &cal, true)
}

/// As [`run_suite`] with a fixed calibration; `parallel = false` evaluates
/// serially (same report).
pub fn run_suite_with(
    config: &SuiteConfig,
    cal: &CalibrationRecord,
    parallel: bool,
) -> Result<SuiteReport> {
    let scenarios = config.selected();
    let results: Vec<Result<Vec<IdentityReport>>> = if parallel {
        scenarios.par_iter().map(|s| run_scenario(s, cal)).collect()
    } else {
        scenarios.iter().map(|s| run_scenario(s, cal)).collect()
    };
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    rows.sort_by_cached_key(IdentityReport::sort_key);
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(SuiteReport {
        calibration: *cal,
        rows,
        all_pass,
    })
}

/// Reads a suite configuration file and runs it.
pub fn run_all(config_path: &std::path::Path) -> Result<SuiteReport> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| Error::usage(format!("cannot read config {}: {e}", config_path.display())))?;
    run_suite(&SuiteConfig::parse(&text)?)
}

/// The registered catalog with default parameters.
pub fn default_suite() -> SuiteConfig {
    use serde_json::json;
    let mut s = Vec::new();
    let sc = ScenarioConfig::new;
    for bc in ["dd", "dn"] {
        s.push(sc("L2.2", json!({ "bc": bc })));
    }
    for l in [0.5, 1.0, 2.0] {
        for t in [0.1, 1.0, 10.0] {
            s.push(sc("MS", json!({ "half_length": l, "t": t })));
        }
    }
    s.push(sc("P2.1", json!({ "bc": "ar" })));
    s.push(sc("P2.1", json!({ "bc": "ra", "count": 3, "rank": 2 })));
    s.push(sc("P2.1", json!({ "bc": "ar", "cross_section": "circle" })));
    for bc in ["ar", "aa"] {
        s.push(sc("T2.3", json!({ "bc": bc })).with_mode(ConfigMode::Both));
        s.push(sc("T2.3", json!({ "bc": bc, "count": 2, "rank": 2 })).with_mode(ConfigMode::Both));
        s.push(
            sc("T2.3", json!({ "bc": bc, "cross_section": "circle" })).with_mode(ConfigMode::Both),
        );
    }
    s.push(sc("E2.32", json!({})));
    s.push(sc("E2.32", json!({ "cross_section": "circle" })));
    for r in [1, 2, 5] {
        s.push(sc("E2.35", json!({ "rank": r })));
    }
    s.push(sc("E2.36", json!({})));
    s.push(sc("E2.36", json!({ "count": 3, "rank": 2 })));
    s.push(sc("E2.36", json!({ "cross_section": "circle" })));
    s.push(sc(
        "L3.1",
        json!({ "family": "random", "seed": 7, "count": 100 }),
    ));
    for (l1, l2) in [(1.0, 1.0), (1.0, 2.0)] {
        s.push(sc("L3.1", json!({ "family": "arcs", "l1": l1, "l2": l2 })));
    }
    s.push(sc("T2.4", json!({ "half_length": 1.0 })));
    for id in ["T3.2", "T0.2"] {
        for (l1, l2) in [(1.0, 1.0), (1.0, 2.0)] {
            s.push(sc(id, json!({ "l1": l1, "l2": l2 })));
        }
    }
    SuiteConfig {
        scenarios: s,
        only: None,
    }
}
