use std::f64::consts::FRAC_PI_2;

use knotfield::geometry::{fit_plane_frame, make_circle, make_double, make_folded};
use knotfield::insertion::run_insertion;
use knotfield::{FieldParams, InsertionParams, Loop, StopRule, Termination, Vec3};
use proptest::prelude::*;

const GAMMA: f64 = 0.01;

fn shapes() -> Vec<(&'static str, Loop)> {
    vec![
        ("planar", make_circle(1.0, 0.1, Vec3::zeros(), Vec3::z()).unwrap()),
        ("folded", make_folded(1.0, 0.1, FRAC_PI_2).unwrap()),
        ("double", make_double(1.0, 0.1, 0.1).unwrap()),
    ]
}

fn entry_start(lp: &Loop, distance: f64) -> Vec3 {
    lp.centroid() - lp.area_vector().normalize() * distance
}

/// Flux argmax along a run that never stops, integrated well past the loop.
fn free_run_peak(lp: &Loop, start: Vec3, iters: usize) -> Vec3 {
    let never = StopRule::consecutive(iters + 1);
    let p = InsertionParams::new(FieldParams::with_gamma(GAMMA), iters, never, false).unwrap();
    let out = run_insertion(start, lp, |_| lp.clone(), &p);
    assert_eq!(out.termination, Termination::MaxIters);
    let (i, _) = out
        .trajectory
        .flux
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |best, (i, &f)| if f > best.1 { (i, f) } else { best });
    out.trajectory.positions[i]
}

fn stop(lp: &Loop, start: Vec3) -> (Termination, Vec3) {
    let p = InsertionParams::for_start(FieldParams::with_gamma(GAMMA), &start, lp);
    let out = run_insertion(start, lp, |_| lp.clone(), &p);
    (out.termination, out.stop_point)
}

#[test]
fn each_shape_stops_at_the_flux_peak() {
    for (name, lp) in shapes() {
        let start = entry_start(&lp, 2.0);
        let (term, at) = stop(&lp, start);
        assert_eq!(term, Termination::FieldDrop, "{name}");
        let peak = free_run_peak(&lp, start, 400);
        assert!((at - peak).norm() <= 2.0 * GAMMA, "{name}: stop {at} peak {peak}");
    }
}

#[test]
fn axial_planar_stop_is_in_the_plane() {
    let lp = make_circle(1.0, 0.1, Vec3::zeros(), Vec3::z()).unwrap();
    for z0 in [-2.0, -1.0, -0.37] {
        let (term, at) = stop(&lp, Vec3::new(0.0, 0.0, z0));
        assert_eq!(term, Termination::FieldDrop);
        assert!(at.z.abs() <= GAMMA, "from {z0}: {at}");
        assert!(at.x.hypot(at.y) < 1e-12);
    }
}

#[test]
fn reversed_loop_is_entered_from_the_other_side() {
    let lp = make_circle(1.0, 0.1, Vec3::zeros(), Vec3::z()).unwrap().reversed();
    let start = entry_start(&lp, 2.0);
    assert!(start.z > 0.0);
    let (term, at) = stop(&lp, start);
    assert_eq!(term, Termination::FieldDrop);
    assert!(at.z.abs() <= GAMMA);
}

#[test]
fn weighting_trades_quality_for_delay() {
    let lp = make_circle(1.0, 0.1, Vec3::zeros(), Vec3::z()).unwrap();
    let frame = fit_plane_frame(&lp).unwrap();
    let start = Vec3::new(0.3, 0.0, -2.0);
    let run = |alpha: f64, beta: f64| {
        let f = FieldParams::new(1.0, GAMMA, alpha, beta).unwrap();
        let p = InsertionParams::for_start(f, &start, &lp);
        let out = run_insertion(start, &lp, |_| lp.clone(), &p);
        assert!(out.success);
        let cross = out.trajectory.first_crossing(&frame).unwrap().1;
        (cross.x.hypot(cross.y), out.delay.unwrap())
    };
    let (q11, d11) = run(1.0, 1.0);
    let (q21, d21) = run(2.0, 1.0);
    let (q12, d12) = run(1.0, 2.0);
    assert!(q21 < q11 && q11 < q12, "{q21} {q11} {q12}");
    assert!(d21 > d11 && d11 > d12, "{d21} {d11} {d12}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn near_axis_starts_stop_at_the_peak(
        shape in 0usize..3,
        dx in -0.3f64..0.3,
        dy in -0.3f64..0.3,
        distance in 0.8f64..2.5,
    ) {
        let (name, lp) = shapes().swap_remove(shape);
        let start = entry_start(&lp, distance) + Vec3::new(dx, dy, 0.0);
        let (term, at) = stop(&lp, start);
        prop_assert_eq!(term, Termination::FieldDrop);
        let peak = free_run_peak(&lp, start, 500);
        prop_assert!((at - peak).norm() <= 2.0 * GAMMA, "{}: stop {} peak {}", name, at, peak);
    }
}
