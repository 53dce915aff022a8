use std::f64::consts::{FRAC_PI_4, PI};

use holo_core::adiabatic::{self, Schedule};
use holo_core::holonomy::{self, PlanarRegion};
use holo_core::manifold::{self, GrassmannianPoint};
use holo_core::matrix::unitary_distance;
use holo_core::{
    CoordinateIndex as Ci, HolonomySign, Loop, OrderedOptions, Point, Profile, Region, RotationConvention,
    SubspaceLabel,
};

fn conv() -> RotationConvention {
    RotationConvention::default()
}

#[test]
fn loop_json_round_trip() {
    let text = r#"{
        "base": {"theta13": 0.2, "phi24": 1.0},
        "segments": [{"theta24": 0.5}, {"phi24": 1.0, "theta13": 0.1}, {"theta24": -0.5}, {"phi24": -1.0, "theta13": -0.1}],
        "steps_per_segment": 64
    }"#;
    let l: Loop = serde_json::from_str(text).unwrap();
    assert_eq!(l.segments.len(), 4);
    assert_eq!(l.base.get(Ci::THETA13), 0.2);
    l.check_closed().unwrap();
    let back: Loop = serde_json::from_str(&serde_json::to_string(&l).unwrap()).unwrap();
    assert_eq!(back.segments, l.segments);
    assert_eq!(back.base, l.base);
    assert_eq!(back.steps_per_segment, 64);
}

#[test]
fn loop_json_rejects_unknown_coordinate() {
    let text = r#"{"segments": [{"theta12": 0.5}], "steps_per_segment": 4}"#;
    assert!(serde_json::from_str::<Loop>(text).is_err());
}

#[test]
fn f32_pipeline_tracks_f64() {
    let p64 = Point::from_array([0.3, 0.7, 0.2, 0.5, 1.0, 2.0, 3.0, 4.0]);
    let p32 = GrassmannianPoint::<f32>::from_array(p64.to_array().map(|x| x as f32));
    let u32_ = manifold::build_unitary(&p32, conv());
    assert!(u32_.unitarity_residual() < 1e-5);

    let region = PlanarRegion::<f32>::new((Ci::THETA24, Ci::PHI24), [[0.0, 0.785_398_2], [0.0, 3.141_592_7]], GrassmannianPoint::origin())
        .unwrap();
    let l = holonomy::loop_boundary(&region, 400).unwrap();
    let opts = OrderedOptions { h: 1e-3, ..OrderedOptions::default() };
    let g = holonomy::holonomy_ordered(&l, conv(), opts).unwrap();
    let z = g.gamma_plus[(1, 1)];
    assert!((z.re).abs() < 1e-2 && (z.im + 1.0).abs() < 1e-2, "{z}");
}

#[test]
fn adiabatic_evolution_approaches_schrodinger_holonomy() {
    let region = Region::new((Ci::THETA24, Ci::PHI24), [[0.0, FRAC_PI_4], [0.0, PI]], Point::origin()).unwrap();
    let l = holonomy::loop_boundary(&region, 4000).unwrap();
    let opts = OrderedOptions { sign: HolonomySign::Schrodinger, ..OrderedOptions::default() };
    let predicted = holonomy::holonomy_ordered(&l, conv(), opts).unwrap();

    let mut errs = Vec::new();
    for t in [100.0, 400.0] {
        let sched = Schedule::new(l.clone(), t, (t * 100.0) as usize, Profile::Smoothstep).unwrap();
        let m = adiabatic::to_eigenframe(&adiabatic::evolve(&sched, 1.0, conv()), &l.base, conv());
        let r = adiabatic::extract_geometric(&m, t, 1.0).unwrap();
        errs.push(unitary_distance(&r.geometric.gamma_plus, &predicted.gamma_plus));
        assert!(r.leakage < 0.05);
    }
    assert!(errs[1] < errs[0] / 2.0, "{errs:?}");
}

#[test]
fn stokes_and_ordered_agree_off_origin() {
    let fixed = Point::from_array([0.3, 0.9, 1.2, 0.0, 2.0, 0.7, 4.0, 0.0]);
    let region = Region::new((Ci::THETA24, Ci::PHI24), [[0.2, 1.0], [0.4, 2.1]], fixed).unwrap();
    let l = holonomy::loop_boundary(&region, 20_000).unwrap();
    let ordered = holonomy::holonomy_ordered(&l, conv(), OrderedOptions::default()).unwrap();
    for s in SubspaceLabel::BOTH {
        let st = holonomy::holonomy_stokes(&region, s, conv(), 1e-10).unwrap();
        assert!(unitary_distance(&st, ordered.get(s)) < 1e-5);
    }
}
