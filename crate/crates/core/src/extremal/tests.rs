use super::*;
use crate::classical::hyperbolic_closed_form;
use crate::extremal::winding::count_s_points;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn quick() -> Context {
    Context::new(ExtremalConfig {
        degree: 2,
        restarts: 2,
        ..Default::default()
    })
}

#[test]
fn disk_into_disk_reaches_the_hyperbolic_density() {
    let d = Domain::unit_disk();
    let lb = cara_lower(&d, &d, c(0.0, 0.0), c(0.5, 0.0), &quick()).unwrap();
    let target = 8.0 / 3.0;
    assert!(lb.value >= target * (1.0 - 2e-6), "{}", lb.value);
    assert!(lb.value <= target * (1.0 + 1e-9));
    assert_eq!(lb.witness.kind, WitnessKind::Family);
}

#[test]
fn annulus_into_disk_beats_the_seed() {
    let ann = Domain::annulus(c(0.0, 0.0), 0.25, 1.0).unwrap();
    let d = Domain::unit_disk();
    let lb = cara_lower(&ann, &d, c(0.0, 0.0), c(0.5, 0.0), &quick()).unwrap();
    assert!(lb.value > 8.0 / 3.0 * 1.01, "{}", lb.value);
    let lam = hyperbolic_closed_form(&ann, c(0.5, 0.0)).unwrap().value;
    assert!(lb.value <= lam);
    assert!(lb.witness.degree >= 1);
}

#[test]
fn witness_reconstructs_a_certified_map() {
    let ann = Domain::annulus(c(0.0, 0.0), 0.25, 1.0).unwrap();
    let d = Domain::unit_disk();
    let ctx = quick();
    let (s, w) = (c(0.0, 0.0), c(0.0, 0.5));
    let lb = cara_lower(&ann, &d, s, w, &ctx).unwrap();
    let fam = CandidateFamily::new(&ann, &d, s, w, 2.0, &ctx.config).unwrap();
    let h = fam.candidate(&lb.witness.exponents, &lb.witness.theta).unwrap();
    let (v, dv) = h.value_and_derivative(w);
    assert!(v.norm() < 1e-12);
    assert!((2.0 * dv.norm() - lb.value).abs() < 1e-9 * lb.value);
    assert_eq!(count_s_points(&h, &ann, s).unwrap(), 1);
    for n in [1024, 4096] {
        assert!(admissibility_check_sampled(&h, &ann, &d, w, s, n).unwrap());
    }
}

#[test]
fn value_is_monotone_in_degree() {
    let ann = Domain::annulus(c(0.0, 0.0), 0.3, 1.0).unwrap();
    let d = Domain::unit_disk();
    let mut prev = 0.0;
    for degree in 0..=3 {
        let ctx = Context::new(ExtremalConfig {
            degree,
            restarts: 2,
            ..Default::default()
        });
        let v = cara_lower(&ann, &d, c(0.0, 0.0), c(0.6, 0.1), &ctx).unwrap().value;
        assert!(v >= prev, "degree {degree}: {v} < {prev}");
        prev = v;
    }
}

#[test]
fn whole_plane_has_empty_family() {
    let ctx = quick();
    let pair = cara_bounds(&Domain::whole_plane(), &Domain::unit_disk(), c(0.0, 0.0), c(3.0, 1.0), &ctx).unwrap();
    assert_eq!((pair.lower, pair.upper), (0.0, 0.0));
    assert_eq!(pair.upper_source, UpperSource::EmptyFamily);
    assert!(pair.flags.contains(&BoundFlag::EmptyFamily));
}

#[test]
fn identity_pinches_on_simply_connected_domains() {
    let h = Domain::upper_half_plane();
    let w = c(0.2, 1.5);
    let pair = cara_bounds(&h, &h, w, w, &quick()).unwrap();
    let lam = hyperbolic_closed_form(&h, w).unwrap().value;
    assert_eq!(pair.witness.kind, WitnessKind::Inclusion);
    assert!((pair.lower - lam).abs() <= 1e-12 * lam);
    assert!((pair.upper - lam).abs() <= 1e-12 * lam);
    assert_eq!(pair.upper_source, UpperSource::MinOfBoth);
}

#[test]
fn upper_bound_on_annulus_is_schwarz_pick() {
    let ann = Domain::annulus(c(0.0, 0.0), 0.25, 1.0).unwrap();
    let w = c(0.5, 0.0);
    let ub = cara_upper(&ann, &Domain::unit_disk(), c(0.0, 0.0), w, &quick()).unwrap();
    let lam = hyperbolic_closed_form(&ann, w).unwrap().value;
    assert!(ub.value <= lam * (1.0 + 1e-12));
    assert!((ub.value - lam).abs() <= ub.error + 1e-9);
    assert!((ub.value - 4.5324).abs() < 1e-3, "{}", ub.value);
}

#[test]
fn kobayashi_upper_on_disk_base() {
    let h = Domain::upper_half_plane();
    let w = c(0.0, 2.0);
    let kb = kobayashi_upper(&h, &Domain::unit_disk(), w, &quick()).unwrap();
    assert!((kb.value - 0.5).abs() < 1e-12, "{}", kb.value);
    let kb = kobayashi_upper(&Domain::whole_plane(), &Domain::unit_disk(), w, &quick()).unwrap();
    assert_eq!(kb.value, 0.0);
}

#[test]
fn trace_is_recorded_and_written() {
    let d = Domain::unit_disk();
    let ctx = Context::new(ExtremalConfig {
        degree: 1,
        restarts: 1,
        trace: true,
        ..Default::default()
    });
    let lb = cara_lower(&d, &d, c(0.0, 0.0), c(0.1, 0.2), &ctx).unwrap();
    assert!(!lb.trace.is_empty());
    assert!(lb.trace.iter().all(|r| (r.winding - 1.0).abs() < 0.1));
    let mut buf = Vec::new();
    write_trace_csv(&lb.trace, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("degree,restart,iteration,objective,boundary_max,winding\n"));
}

#[test]
fn points_outside_are_rejected() {
    let d = Domain::unit_disk();
    assert!(matches!(
        cara_lower(&d, &d, c(0.0, 0.0), c(2.0, 0.0), &quick()),
        Err(Error::PointOutsideDomain(..))
    ));
}
