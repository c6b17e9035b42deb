//! Argument-principle certification of candidate maps.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::domain::{BoundaryComponent, Domain, DomainKind};
use crate::error::{Error, Result};
use crate::maps::Holomorphic;
use crate::ComplexPoint;

/// Default number of samples per boundary component.
pub const DEFAULT_BOUNDARY_SAMPLES: usize = 512;
/// Smallest admissible `|h - s|` on the boundary.
pub const MIN_BOUNDARY_GAP: f64 = 1e-6;
/// Largest accepted distance of the winding integral from an integer.
pub const WINDING_SLACK: f64 = 0.1;
/// Tolerance on `h(w) = s`.
pub const VALUE_TOLERANCE: f64 = 1e-9;
/// Slack on the sampled range condition `max |h| <= 1`.
const RANGE_SLACK: f64 = 1e-12;

/// `(1/2πi) Σ_components ∮ h'/(h - s) dz` by the trapezoid rule, unrounded.
pub fn winding_integral<H: Holomorphic + ?Sized>(
    h: &H,
    components: &[BoundaryComponent],
    s: ComplexPoint,
) -> Result<f64> {
    let mut total = Complex64::new(0.0, 0.0);
    let mut closest = f64::INFINITY;
    for comp in components {
        for p in &comp.samples {
            let (v, dv) = h.value_and_derivative(p.point);
            if !v.is_finite() || !dv.is_finite() {
                return Err(Error::InvalidMap(format!(
                    "candidate is not finite at boundary point {}",
                    p.point
                )));
            }
            let gap = (v - s).norm();
            closest = closest.min(gap);
            if gap < MIN_BOUNDARY_GAP {
                return Err(Error::BoundaryTooClose { distance: gap });
            }
            total += dv / (v - s) * p.tangent * p.weight;
        }
    }
    if !total.is_finite() {
        return Err(Error::BoundaryTooClose { distance: closest });
    }
    Ok(total.im / (2.0 * PI))
}

/// Rounds a winding integral, rejecting values far from an integer.
pub fn round_winding(x: f64) -> Result<i64> {
    let n = x.round();
    if (x - n).abs() > WINDING_SLACK {
        return Err(Error::NonIntegerWinding(x));
    }
    Ok(n as i64)
}

/// Number of `s`-points of `h` in `omega`, counted with multiplicity.
pub fn count_s_points<H: Holomorphic + ?Sized>(
    h: &H,
    omega: &Domain,
    s: ComplexPoint,
) -> Result<i64> {
    count_s_points_sampled(h, omega, s, DEFAULT_BOUNDARY_SAMPLES)
}

pub fn count_s_points_sampled<H: Holomorphic + ?Sized>(
    h: &H,
    omega: &Domain,
    s: ComplexPoint,
    samples: usize,
) -> Result<i64> {
    let comps = omega.boundary_sample(samples)?;
    round_winding(winding_integral(h, &comps, s)?)
}

/// Multiplicity of `h` at `a`: the winding number of `h - h(a)` on a small
/// circle around `a`.
pub fn local_multiplicity<H: Holomorphic + ?Sized>(
    h: &H,
    omega: &Domain,
    a: ComplexPoint,
    samples: usize,
) -> Result<i64> {
    let d = omega.boundary_distance(a)?;
    let b = h.value_and_derivative(a).0;
    let mut r = 1e-3 * d.min(1.0);
    // Grow the circle (up to half the boundary distance) while |h - h(a)| is
    // below the boundary gap rule.
    for _ in 0..8 {
        let circle = Domain::disk(a, r)?.boundary_sample(samples)?;
        match winding_integral(h, &circle, b) {
            Ok(x) => return round_winding(x),
            Err(Error::BoundaryTooClose { .. }) => r *= 10.0_f64.min(0.5 * d / r),
            Err(e) => return Err(e),
        }
    }
    Err(Error::BoundaryTooClose { distance: 0.0 })
}

/// Whether `a` is the only preimage of `h(a)` in `omega`, multiplicity allowed:
/// the total count of `h(a)`-points equals the local multiplicity at `a`.
pub fn single_preimage<H: Holomorphic + ?Sized>(
    h: &H,
    omega: &Domain,
    a: ComplexPoint,
    samples: usize,
) -> Result<bool> {
    let b = h.value_and_derivative(a).0;
    let total = count_s_points_sampled(h, omega, b, samples)?;
    let local = local_multiplicity(h, omega, a, samples)?;
    Ok(total == local && local >= 1)
}

/// Certificate that `h` belongs to the family of maps `omega -> y` taking the
/// value `s` exactly once, at `w`.
///
/// Checks `h(w) = s`, a single `s`-point by the argument principle, and the
/// range condition on boundary samples: `|h - c| <= r` for a disk `y`, and
/// membership of slightly inward-shifted boundary images otherwise.
pub fn admissibility_check<H: Holomorphic + ?Sized>(
    h: &H,
    omega: &Domain,
    y: &Domain,
    w: ComplexPoint,
    s: ComplexPoint,
) -> Result<bool> {
    admissibility_check_sampled(h, omega, y, w, s, DEFAULT_BOUNDARY_SAMPLES)
}

pub fn admissibility_check_sampled<H: Holomorphic + ?Sized>(
    h: &H,
    omega: &Domain,
    y: &Domain,
    w: ComplexPoint,
    s: ComplexPoint,
    samples: usize,
) -> Result<bool> {
    if !omega.contains(w) {
        return Err(Error::PointOutsideDomain(w, omega.label().to_string()));
    }
    let (hw, _) = h.value_and_derivative(w);
    if !((hw - s).norm() <= VALUE_TOLERANCE) {
        return Ok(false);
    }
    let comps = omega.boundary_sample(samples)?;
    let count = match winding_integral(h, &comps, s) {
        Ok(x) => round_winding(x)?,
        // A map that equals s on the boundary is not in the family.
        Err(Error::BoundaryTooClose { .. }) => return Ok(false),
        Err(e) => return Err(e),
    };
    if count != 1 {
        return Ok(false);
    }
    Ok(range_ok(h, &comps, y))
}

fn range_ok<H: Holomorphic + ?Sized>(h: &H, comps: &[BoundaryComponent], y: &Domain) -> bool {
    let edge = comps.iter().filter(|c| !c.puncture).flat_map(|c| &c.samples);
    match y.kind() {
        DomainKind::Disk { center, radius } => edge
            .map(|p| (h.value_and_derivative(p.point).0 - center).norm())
            .all(|m| m <= radius * (1.0 + RANGE_SLACK)),
        _ => edge.into_iter().all(|p| {
            let inward = p.point + 1e-9 * Complex64::i() * p.tangent;
            y.contains(h.value_and_derivative(inward).0)
        }),
    }
}

/// Largest `|h|` over the non-puncture boundary samples.
pub fn boundary_max<H: Holomorphic + ?Sized>(h: &H, comps: &[BoundaryComponent]) -> f64 {
    comps
        .iter()
        .filter(|c| !c.puncture)
        .flat_map(|c| &c.samples)
        .map(|p| h.value_and_derivative(p.point).0.norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::MapKind;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mobius_has_one_zero() {
        let t = MapKind::disk_automorphism(c(0.5, 0.0), 0.0).unwrap();
        assert_eq!(count_s_points(&t, &Domain::unit_disk(), c(0.0, 0.0)).unwrap(), 1);
    }

    #[test]
    fn square_has_double_zero() {
        let sq = |z: Complex64| (z * z, 2.0 * z);
        assert_eq!(count_s_points(&sq, &Domain::unit_disk(), c(0.0, 0.0)).unwrap(), 2);
    }

    #[test]
    fn mobius_on_annulus() {
        // The only root of the numerator z - 0.5 lies in the annulus.
        let t = MapKind::disk_automorphism(c(0.5, 0.0), 0.0).unwrap();
        let ann = Domain::annulus(c(0.0, 0.0), 0.25, 1.0).unwrap();
        assert_eq!(count_s_points(&t, &ann, c(0.0, 0.0)).unwrap(), 1);
        let t = MapKind::disk_automorphism(c(0.1, 0.0), 0.0).unwrap();
        assert_eq!(count_s_points(&t, &ann, c(0.0, 0.0)).unwrap(), 0);
    }

    #[test]
    fn boundary_gap_is_reported() {
        let t = MapKind::disk_automorphism(c(0.5, 0.0), 0.0).unwrap();
        let err = count_s_points(&t, &Domain::unit_disk(), c(1.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::BoundaryTooClose { .. }));
    }

    #[test]
    fn identity_inclusion_is_admissible() {
        let ann = Domain::annulus(c(0.0, 0.0), 0.25, 1.0).unwrap();
        let id = MapKind::identity();
        let w = c(0.5, 0.2);
        assert!(admissibility_check(&id, &ann, &Domain::unit_disk(), w, w).unwrap());
        assert!(admissibility_check(&id, &ann, &ann, w, w).unwrap());
    }

    #[test]
    fn restricted_mobius_is_admissible() {
        let ann = Domain::annulus(c(0.0, 0.0), 0.25, 1.0).unwrap();
        let w = c(0.5, 0.0);
        let t = MapKind::disk_automorphism(w, 0.0).unwrap();
        assert!(admissibility_check(&t, &ann, &Domain::unit_disk(), w, c(0.0, 0.0)).unwrap());
    }

    #[test]
    fn constant_and_oversized_maps_are_rejected() {
        let d = Domain::unit_disk();
        let konst = |_z: Complex64| (c(0.0, 0.0), c(0.0, 0.0));
        assert!(!admissibility_check(&konst, &d, &d, c(0.0, 0.0), c(0.0, 0.0)).unwrap());
        let big = MapKind::affine(c(1.5, 0.0), c(0.0, 0.0));
        assert!(!admissibility_check(&big, &d, &d, c(0.0, 0.0), c(0.0, 0.0)).unwrap());
    }

    #[test]
    fn single_preimage_allows_multiplicity() {
        let d = Domain::unit_disk();
        let sq = |z: Complex64| (z * z, 2.0 * z);
        assert!(single_preimage(&sq, &d, c(0.0, 0.0), 256).unwrap());
        assert!(!single_preimage(&sq, &d, c(0.3, 0.0), 256).unwrap());
        let t = MapKind::disk_automorphism(c(0.2, 0.1), 0.3).unwrap();
        assert!(single_preimage(&t, &d, c(-0.4, 0.5), 256).unwrap());
    }
}
