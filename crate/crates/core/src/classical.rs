//! Closed-form hyperbolic densities, normalized to curvature -1 so that the
//! unit disk has density 2 at the origin.
//!
//! Only the disk, punctured disk and annulus have formulas of their own.
//! Half-planes, strips, uniformized generic domains and punctured
//! simply connected domains are all reached by transporting the disk
//! density through a catalog map.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{Domain, DomainKind};
use crate::error::{Error, Result};
use crate::maps::{AnalyticMap, MapKind};
use crate::ComplexPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensitySource {
    ClosedForm,
    Pde,
    Transported,
    ExtremalBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityValue {
    pub value: f64,
    pub source: DensitySource,
}

impl DensityValue {
    pub fn new(value: f64, source: DensitySource) -> Self {
        DensityValue { value, source }
    }
}

/// `2R / (R^2 - |z - c|^2)`
pub fn disk_density(center: ComplexPoint, radius: f64, z: ComplexPoint) -> f64 {
    let r2 = (z - center).norm_sqr();
    2.0 * radius / ((radius - r2.sqrt()) * (radius + r2.sqrt()))
}

/// `1 / (|z - c| log(R / |z - c|))`
pub fn punctured_disk_density(center: ComplexPoint, radius: f64, z: ComplexPoint) -> f64 {
    let rho = (z - center).norm();
    1.0 / (rho * (radius / rho).ln())
}

pub fn annulus_density(center: ComplexPoint, inner: f64, outer: f64, z: ComplexPoint) -> f64 {
    let t = (z - center).norm() / outer;
    let log_ratio = (inner / outer).ln();
    PI / (outer * t * (-log_ratio) * (PI * t.ln() / log_ratio).sin())
}

/// Which domains [`hyperbolic_closed_form`] handles.
pub fn has_closed_form(d: &Domain) -> bool {
    match d.kind() {
        DomainKind::Disk { .. } | DomainKind::PuncturedDisk { .. } | DomainKind::Annulus { .. } => {
            true
        }
        DomainKind::Punctured { base, .. } => base.uniformizer().is_some(),
        _ => d.uniformizer().is_some(),
    }
}

pub fn hyperbolic_closed_form(d: &Domain, z: ComplexPoint) -> Result<DensityValue> {
    if !d.contains(z) {
        return Err(Error::PointOutsideDomain(z, d.label().to_string()));
    }
    let closed = |v| Ok(DensityValue::new(v, DensitySource::ClosedForm));
    match d.kind() {
        DomainKind::Disk { center, radius } => closed(disk_density(*center, *radius, z)),
        DomainKind::PuncturedDisk { center, radius } => {
            closed(punctured_disk_density(*center, *radius, z))
        }
        DomainKind::Annulus {
            center,
            inner,
            outer,
        } => closed(annulus_density(*center, *inner, *outer, z)),
        DomainKind::Punctured { base, puncture } => {
            let phi = base.uniformizer().ok_or_else(|| unsupported(d))?;
            let inv = phi.inverse().ok_or_else(|| unsupported(d))?;
            let zeta = inv.value(z);
            let a = inv.value(*puncture);
            let (_, dphi) = phi.eval(zeta);
            // Move the puncture to the origin, then use the punctured disk.
            let t = MapKind::disk_automorphism(a, 0.0)?;
            let (tz, dt) = t.eval(zeta);
            let v = punctured_disk_density(Complex64::new(0.0, 0.0), 1.0, tz) * dt.norm()
                / dphi.norm();
            Ok(DensityValue::new(v, DensitySource::Transported))
        }
        DomainKind::WholePlane => Err(unsupported(d)),
        _ => {
            let phi = d.uniformizer().ok_or_else(|| unsupported(d))?;
            let inv = phi.inverse().ok_or_else(|| unsupported(d))?;
            let zeta = inv.value(z);
            let (w, dphi) = phi.eval(zeta);
            if !(zeta.norm() < 1.0) || (w - z).norm() > 1e-8 * (1.0 + z.norm()) {
                return Err(Error::InvalidMap(format!(
                    "uniformizer of `{}` does not invert at {z}",
                    d.label()
                )));
            }
            if dphi.norm() == 0.0 {
                return Err(Error::NonConformalMap(zeta));
            }
            let v = disk_density(Complex64::new(0.0, 0.0), 1.0, zeta) / dphi.norm();
            Ok(DensityValue::new(v, DensitySource::Transported))
        }
    }
}

fn unsupported(d: &Domain) -> Error {
    Error::UnsupportedDomain {
        domain: d.label().to_string(),
        operation: "closed-form hyperbolic density".into(),
    }
}

/// Push-forward of a density through a conformal map: the result `rho`
/// satisfies `rho(m(z)) |m'(z)| = lambda(z)`.
pub struct Transported<F> {
    map: AnalyticMap,
    inverse: MapKind,
    source_density: F,
}

pub fn transport<F>(map: AnalyticMap, source_density: F) -> Result<Transported<F>>
where
    F: Fn(ComplexPoint) -> Result<f64>,
{
    let inverse = map
        .kind
        .inverse()
        .ok_or_else(|| Error::InvalidMap("transport needs an invertible map".into()))?;
    Ok(Transported {
        map,
        inverse,
        source_density,
    })
}

impl<F> Transported<F>
where
    F: Fn(ComplexPoint) -> Result<f64>,
{
    pub fn eval(&self, w: ComplexPoint) -> Result<DensityValue> {
        if !self.map.target.contains(w) {
            return Err(Error::PointOutsideDomain(w, self.map.target.label().to_string()));
        }
        let z = self.inverse.value(w);
        let (back, dm) = self.map.eval(z)?;
        if (back - w).norm() > 1e-8 * (1.0 + w.norm()) {
            return Err(Error::InvalidMap(format!(
                "map is not invertible at {w} on the principal branch"
            )));
        }
        if dm.norm() == 0.0 || !dm.is_finite() {
            return Err(Error::NonConformalMap(z));
        }
        let v = (self.source_density)(z)? / dm.norm();
        Ok(DensityValue::new(v, DensitySource::Transported))
    }

    pub fn map(&self) -> &AnalyticMap {
        &self.map
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn lam(d: &Domain, z: Complex64) -> f64 {
        hyperbolic_closed_form(d, z).unwrap().value
    }

    #[test]
    fn disk_values() {
        let d = Domain::unit_disk();
        assert_eq!(lam(&d, c(0.0, 0.0)), 2.0);
        assert_relative_eq!(lam(&d, c(0.5, 0.0)), 8.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn annulus_value() {
        let d = Domain::annulus(c(0.0, 0.0), 0.25, 1.0).unwrap();
        assert_relative_eq!(
            lam(&d, c(0.5, 0.0)),
            2.0 * PI / 4f64.ln(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn outside_and_unsupported() {
        let d = Domain::unit_disk();
        assert!(matches!(
            hyperbolic_closed_form(&d, c(2.0, 0.0)),
            Err(Error::PointOutsideDomain(..))
        ));
        assert!(matches!(
            hyperbolic_closed_form(&Domain::whole_plane(), c(0.0, 0.0)),
            Err(Error::UnsupportedDomain { .. })
        ));
    }

    #[test]
    fn half_plane_and_strip_match_cross_checks() {
        let h = Domain::upper_half_plane();
        let s = Domain::strip(2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let z = c(rng.gen_range(-5.0..5.0), rng.gen_range(0.01..1.99));
            assert_relative_eq!(lam(&h, z), 1.0 / z.im, max_relative = 1e-10);
            let cross = PI / (2.0 * (PI * z.im / 2.0).sin());
            assert_relative_eq!(lam(&s, z), cross, max_relative = 1e-9);
        }
        let tilted = Domain::half_plane(c(1.0, 1.0), c(1.0, 1.0) / 2f64.sqrt()).unwrap();
        let z = c(2.0, 3.0);
        let dist = ((z - c(1.0, 1.0)) * c(1.0, -1.0) / 2f64.sqrt()).re;
        assert_relative_eq!(lam(&tilted, z), 1.0 / dist, max_relative = 1e-10);
    }

    #[test]
    fn punctured_base_matches_mobius_transport() {
        let d = Domain::punctured(Domain::unit_disk(), c(0.5, 0.0)).unwrap();
        let z = c(0.2, 0.3);
        let t = MapKind::disk_automorphism(c(0.5, 0.0), 0.0).unwrap();
        let (w, dw) = t.eval(z);
        let expect = punctured_disk_density(c(0.0, 0.0), 1.0, w) * dw.norm();
        assert_relative_eq!(lam(&d, z), expect, max_relative = 1e-12);
        // Centered puncture reduces to the punctured disk.
        let p = Domain::punctured(Domain::unit_disk(), c(0.0, 0.0)).unwrap();
        let q = Domain::punctured_disk(c(0.0, 0.0), 1.0).unwrap();
        assert_relative_eq!(lam(&p, z), lam(&q, z), max_relative = 1e-12);
    }

    fn curvature_error(d: &Domain, z: Complex64) -> f64 {
        let h = 1e-3;
        let u = |p: Complex64| lam(d, p).ln();
        let lap = (u(z + h) + u(z - h) + u(z + c(0.0, h)) + u(z - c(0.0, h)) - 4.0 * u(z)) / (h * h);
        let l = lam(d, z);
        (lap - l * l).abs() / (l * l)
    }

    #[test]
    fn closed_forms_have_curvature_minus_one() {
        let cases = [
            (Domain::unit_disk(), vec![c(0.0, 0.0), c(0.3, -0.4), c(0.7, 0.1)]),
            (
                Domain::punctured_disk(c(0.0, 0.0), 1.0).unwrap(),
                vec![c(0.2, 0.0), c(0.5, 0.5), c(-0.1, 0.6)],
            ),
            (
                Domain::annulus(c(0.0, 0.0), 0.25, 1.0).unwrap(),
                vec![c(0.5, 0.0), c(0.3, 0.3), c(-0.8, 0.1)],
            ),
            (Domain::upper_half_plane(), vec![c(0.0, 1.0), c(3.0, 0.2)]),
            (Domain::strip(PI).unwrap(), vec![c(0.0, 1.0), c(-2.0, 2.5)]),
            (
                Domain::punctured(Domain::unit_disk(), c(0.4, 0.1)).unwrap(),
                vec![c(0.0, 0.0), c(-0.5, 0.2)],
            ),
        ];
        for (d, pts) in &cases {
            for &z in pts {
                let e = curvature_error(d, z);
                assert!(e < 1e-4, "{} at {z}: {e}", d.label());
            }
        }
    }

    #[test]
    fn disk_automorphisms_preserve_density() {
        let d = Domain::unit_disk();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a = Complex64::from_polar(rng.gen_range(0.0..0.95), rng.gen_range(0.0..2.0 * PI));
            let t = MapKind::disk_automorphism(a, rng.gen_range(0.0..2.0 * PI)).unwrap();
            let z = Complex64::from_polar(rng.gen_range(0.0..0.9), rng.gen_range(0.0..2.0 * PI));
            let (w, dw) = t.eval(z);
            let diff = lam(&d, w) * dw.norm() - lam(&d, z);
            assert!(diff.abs() <= 1e-10 * lam(&d, z).max(1.0), "{diff}");
        }
    }

    #[test]
    fn transport_exp_strip_to_half_plane() {
        let strip = Domain::strip(PI).unwrap();
        let hp = Domain::upper_half_plane();
        let m = AnalyticMap::new(MapKind::Exp, strip.clone(), hp).unwrap();
        let rho = transport(m, |z| Ok(lam(&strip, z))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let z = c(rng.gen_range(-3.0..3.0), rng.gen_range(0.01..PI - 0.01));
            let w = z.exp();
            let v = rho.eval(w).unwrap().value;
            assert!((v - 1.0 / w.im).abs() / v < 1e-10);
        }
    }

    #[test]
    fn transport_identity_and_automorphism() {
        let d = Domain::unit_disk();
        let id = AnalyticMap::new(MapKind::identity(), d.clone(), d.clone()).unwrap();
        let rho = transport(id, |z| Ok(lam(&d, z))).unwrap();
        assert_relative_eq!(rho.eval(c(0.3, 0.2)).unwrap().value, lam(&d, c(0.3, 0.2)));
        let t = MapKind::disk_automorphism(c(0.5, 0.0), 0.0).unwrap();
        let m = AnalyticMap::new(t, d.clone(), d.clone()).unwrap();
        let rho = transport(m, |z| Ok(lam(&d, z))).unwrap();
        for z in [c(0.0, 0.0), c(-0.6, 0.3)] {
            assert_relative_eq!(rho.eval(z).unwrap().value, lam(&d, z), max_relative = 1e-12);
        }
    }

    #[test]
    fn annulus_tends_to_punctured_disk() {
        // The gap closes like 1/log(1/r)^2, so it is still ~4e-3 at r = 1e-6.
        let z = c(0.5, 0.0);
        let pd = punctured_disk_density(c(0.0, 0.0), 1.0, z);
        let gap = |r: f64| (annulus_density(c(0.0, 0.0), r, 1.0, z) - pd).abs() / pd;
        assert!(gap(1e-6) < 5e-3);
        assert!(gap(1e-20) < 1e-3);
        assert!(gap(1e-40) < gap(1e-20) && gap(1e-20) < gap(1e-6));
    }
}
