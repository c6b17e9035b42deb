use std::f64::consts::PI;
use std::sync::OnceLock;

use metriclab::classical::hyperbolic_closed_form;
use metriclab::extremal::winding::count_s_points;
use metriclab::extremal::{cara_bounds, cara_lower, Context, ExtremalConfig};
use metriclab::pathmetric::{distance, hurwitz_field, PathField};
use metriclab::verify::RunConfig;
use metriclab::{Domain, MapKind};
use num_complex::Complex64;
use proptest::prelude::*;

fn quick() -> Context {
    Context::new(ExtremalConfig {
        degree: 2,
        restarts: 2,
        ..Default::default()
    })
}

fn disk_point(max_r: f64) -> impl Strategy<Value = Complex64> {
    (0.0..max_r, 0.0..2.0 * PI).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

fn disk_field() -> &'static PathField {
    static FIELD: OnceLock<PathField> = OnceLock::new();
    FIELD.get_or_init(|| hurwitz_field(&Domain::unit_disk(), 64, 16, &quick()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn disk_automorphisms_take_each_value_once(a in disk_point(0.9), phi in 0.0..2.0 * PI, s in disk_point(0.9)) {
        let m = MapKind::disk_automorphism(a, phi).unwrap();
        prop_assert_eq!(count_s_points(&m, &Domain::unit_disk(), s).unwrap(), 1);
    }

    #[test]
    fn disk_density_is_automorphism_invariant(a in disk_point(0.9), phi in 0.0..2.0 * PI, z in disk_point(0.95)) {
        let d = Domain::unit_disk();
        let m = MapKind::disk_automorphism(a, phi).unwrap();
        let (v, dv) = m.eval(z);
        let pulled = hyperbolic_closed_form(&d, v).unwrap().value * dv.norm();
        let lam = hyperbolic_closed_form(&d, z).unwrap().value;
        prop_assert!((pulled - lam).abs() <= 1e-9 * lam, "{pulled} vs {lam}");
    }

    #[test]
    fn annulus_density_scales(r in 0.05..0.8f64, k in 0.2..5.0f64, t in 0.0..1.0f64, angle in 0.0..2.0 * PI) {
        let small = Domain::annulus(Complex64::new(0.0, 0.0), r, 1.0).unwrap();
        let big = Domain::annulus(Complex64::new(0.0, 0.0), k * r, k).unwrap();
        let z = Complex64::from_polar(r + t * (1.0 - r), angle);
        if t > 0.0 && t < 1.0 {
            let a = hyperbolic_closed_form(&small, z).unwrap().value;
            let b = hyperbolic_closed_form(&big, k * z).unwrap().value * k;
            prop_assert!((a - b).abs() <= 1e-9 * a);
        }
    }

    #[test]
    fn configs_round_trip(seed in any::<u64>(), points in 1usize..20, grid in 32usize..256) {
        let cfg = RunConfig { seed, points, grid, ..RunConfig::default() };
        let text = serde_json::to_string(&cfg).unwrap();
        prop_assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn path_distance_is_symmetric(a in disk_point(0.8), b in disk_point(0.8)) {
        let f = disk_field();
        let ab = distance(f, a, b).unwrap().value;
        let ba = distance(f, b, a).unwrap().value;
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn path_distance_satisfies_triangle(a in disk_point(0.8), b in disk_point(0.8), m in disk_point(0.8)) {
        let f = disk_field();
        let ab = distance(f, a, b).unwrap().value;
        let am = distance(f, a, m).unwrap().value;
        let mb = distance(f, m, b).unwrap().value;
        prop_assert!(ab <= (am + mb) * (1.0 + 0.01), "{ab} > {am} + {mb}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn disk_lower_bound_is_rotation_invariant(w in disk_point(0.8), angle in 0.0..2.0 * PI) {
        let d = Domain::unit_disk();
        let s = Complex64::new(0.0, 0.0);
        let rot = Complex64::from_polar(1.0, angle);
        let a = cara_lower(&d, &d, s, w, &quick()).unwrap().value;
        let b = cara_lower(&d, &d, s, rot * w, &quick()).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-5 * a, "{a} vs {b}");
    }

    #[test]
    fn annulus_bounds_are_ordered(w in (0.35..0.9f64, 0.0..2.0 * PI), s in disk_point(0.7)) {
        let ann = Domain::annulus(Complex64::new(0.0, 0.0), 0.25, 1.0).unwrap();
        let w = Complex64::from_polar(w.0, w.1);
        let pair = cara_bounds(&ann, &Domain::unit_disk(), s, w, &quick()).unwrap();
        prop_assert!(pair.lower > 0.0);
        prop_assert!(pair.lower <= pair.upper);
    }
}
