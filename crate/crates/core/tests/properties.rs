use std::f64::consts::LN_2;

use proptest::prelude::*;
use serde_json::json;

use torsion_core::complex::additivity_check;
use torsion_core::model::{
    mayer_vietoris, FiberShape, FormBcPair, MayerVietorisInstance, ModelFiber, Sequence,
};
use torsion_core::torsion::{
    calibrate, torsion_by_definition, torsion_by_zeta, CalibrationRecord, TorsionMode,
};
use torsion_core::verify::{run_identity, run_suite_with, ScenarioConfig, SuiteConfig};

fn cylinder(count: u64, rank: u64, l: f64, bc: FormBcPair) -> ModelFiber {
    ModelFiber::new(FiberShape::cylinder(FiberShape::point(count), l, bc), rank).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mixed_cylinder_torsion_is_length_independent(count in 1u64..4, rank in 1u64..3, l in 0.2f64..5.0) {
        let cal = calibrate().unwrap();
        let t = torsion_by_zeta(&cylinder(count, rank, l, FormBcPair::AR), &cal).unwrap().value;
        prop_assert!((t + LN_2 * (count * rank) as f64).abs() < 1e-10);
    }

    #[test]
    fn absolute_cylinder_torsion_is_affine_in_log_length(count in 1u64..4, l in 0.2f64..5.0) {
        // Calibrated: T_aa(l) = −(2 log 2 + log l) · χ(Y).
        let cal = calibrate().unwrap();
        let t = torsion_by_zeta(&cylinder(count, 1, l, FormBcPair::AA), &cal).unwrap().value;
        let chi = count as f64;
        prop_assert!((t + (2.0 * LN_2 + l.ln()) * chi).abs() < 1e-10);
    }

    #[test]
    fn routes_agree_on_random_point_cylinders(l in 0.3f64..3.0, bc_ix in 0usize..4) {
        let bc = [FormBcPair::AA, FormBcPair::AR, FormBcPair::RA, FormBcPair::RR][bc_ix];
        let f = cylinder(1, 1, l, bc);
        let unit = CalibrationRecord::unit();
        let a = torsion_by_definition(&f, &unit).unwrap().value;
        let b = torsion_by_zeta(&f, &unit).unwrap().value;
        prop_assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn circle_arc_sequences_are_additive(l1 in 0.2f64..4.0, l2 in 0.2f64..4.0, h in 0.2f64..3.0, rank in 1u64..4) {
        let inst = MayerVietorisInstance::CircleArcs { arc1: l1, arc2: l2, collar_half_length: h, bundle_rank: rank };
        let s = |q| mayer_vietoris(&inst, q).unwrap();
        prop_assert!(additivity_check(&s(Sequence::Pair), &s(Sequence::Gluing), &s(Sequence::Collar)).unwrap() < 1e-9);
    }

    #[test]
    fn single_count_gluing_offset_is_half_log_two_per_unit_chi(l1 in 0.3f64..3.0, l2 in 0.3f64..3.0) {
        let cal = calibrate().unwrap();
        let r = run_identity(
            &ScenarioConfig::new("T0.2", json!({ "l1": l1, "l2": l2 })),
            TorsionMode::DirectSpectral,
            &cal,
        ).unwrap();
        prop_assert!((r.diagnostics["unit_count_offset_over_half_log2_chi"] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn pass_flag_matches_tolerance(tol in 0.0f64..1e-15, rank in 1u64..6) {
        let cal = CalibrationRecord::unit();
        let c = ScenarioConfig::new("E2.35", json!({ "rank": rank })).with_tolerance(tol);
        let r = run_identity(&c, TorsionMode::DirectSpectral, &cal).unwrap();
        prop_assert_eq!(r.pass, r.residual <= tol);
    }
}

#[test]
fn parallel_and_serial_reports_match() {
    let cal = calibrate().unwrap();
    let suite = SuiteConfig {
        scenarios: vec![
            ScenarioConfig::new("T3.2", json!({ "l1": 1.0, "l2": 2.0 })),
            ScenarioConfig::new("MS", json!({ "t": 0.1 })),
            ScenarioConfig::new("E2.36", json!({ "cross_section": "circle" })),
            ScenarioConfig::new("L2.2", json!({ "bc": "dn" })),
        ],
        only: None,
    };
    let a = run_suite_with(&suite, &cal, true).unwrap();
    let b = run_suite_with(&suite, &cal, false).unwrap();
    assert_eq!(a.to_json_without_timing(), b.to_json_without_timing());
    let ids: Vec<&str> = a.rows.iter().map(|r| r.identity_id.as_str()).collect();
    assert_eq!(ids, ["E2.36", "L2.2", "MS", "T3.2"]);
}
