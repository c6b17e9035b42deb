//! Holomorphic maps from the unit disk into a catalog domain that send 0 to a
//! given point and take that value nowhere else.
//!
//! They serve as post-maps `𝔻 -> Y` for candidates of the Carathéodory-type
//! extremal problem, and as maps `𝔻 -> Ω` for the Kobayashi-type upper bound.
//! On multiply connected domains they are built from the exponential covering
//! restricted so that the image never wraps around once more.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{Domain, DomainKind};
use crate::error::Result;
use crate::maps::MapKind;
use crate::ComplexPoint;

/// Largest allowed excursion of the lifted argument, `|Im v - arg p|`,
/// kept strictly below `2π`.
pub const ARGUMENT_WINDOW: f64 = 2.0 * PI * (1.0 - 1e-3);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiskMapKind {
    /// Riemann map of a simply connected domain.
    RiemannMap,
    /// Exponential of a shrunken strip map, for annuli.
    LogStrip,
    /// Exponential of a shrunken half-plane map, for once-punctured
    /// simply connected domains.
    PuncturedExp,
    /// Affine map onto the largest disk about the point.
    InscribedDisk,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiskMap {
    pub kind: MapKind,
    pub family: DiskMapKind,
    /// `|g'(0)|`.
    pub derivative: f64,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// All catalog maps `g: 𝔻 -> d` with `g(0) = p` and no other `p`-point,
/// sorted by decreasing `|g'(0)|`.
pub fn disk_maps_into(d: &Domain, p: ComplexPoint) -> Result<Vec<DiskMap>> {
    let mut out = Vec::new();
    if !d.contains(p) || d.is_whole_plane() {
        return Ok(out);
    }
    let mut push = |kind: MapKind, family: DiskMapKind| {
        let (v, dv) = kind.eval(c(0.0, 0.0));
        if v.is_finite() && (v - p).norm() <= 1e-9 * (1.0 + p.norm()) && dv.norm() > 0.0 {
            out.push(DiskMap {
                derivative: dv.norm(),
                kind,
                family,
            });
        }
    };
    if let Some(k) = riemann_map(d, p) {
        push(k, DiskMapKind::RiemannMap);
    }
    if let DomainKind::Annulus {
        center,
        inner,
        outer,
    } = d.kind()
    {
        push(log_strip(*center, *inner, *outer, p)?, DiskMapKind::LogStrip);
    }
    if let Some(k) = punctured_exp(d, p)? {
        push(k, DiskMapKind::PuncturedExp);
    }
    let r = d.boundary_distance(p)?;
    if r.is_finite() && r > 0.0 {
        push(MapKind::affine(c(r * (1.0 - 1e-12), 0.0), p), DiskMapKind::InscribedDisk);
    }
    out.sort_by(|a, b| b.derivative.total_cmp(&a.derivative).then(a.family.cmp(&b.family)));
    Ok(out)
}

pub fn best_disk_map(d: &Domain, p: ComplexPoint) -> Result<Option<DiskMap>> {
    Ok(disk_maps_into(d, p)?.into_iter().next())
}

fn riemann_map(d: &Domain, p: ComplexPoint) -> Option<MapKind> {
    let phi = d.uniformizer()?;
    let a = phi.inverse()?.value(p);
    if !(a.norm() < 1.0) {
        return None;
    }
    let t = MapKind::disk_automorphism(-a, 0.0).ok()?;
    Some(MapKind::compose(vec![t, phi]))
}

/// `g(ζ) = c + exp(v)` with `v` a strip map onto `ln r < Re v < ln R`, composed
/// with `ζ -> ρζ` so that `|Im v - arg(p - c)| < 2π`. Then `g(ζ) = p` forces
/// `v = ln(p - c)` exactly, which the injective strip map takes once.
fn log_strip(center: ComplexPoint, inner: f64, outer: f64, p: ComplexPoint) -> Result<MapKind> {
    let width = (outer / inner).ln();
    let q = p - center;
    let (y0, theta0) = ((q.norm() / inner).ln(), q.arg());
    let strip = MapKind::compose(vec![
        MapKind::cayley(),
        MapKind::Log { branch: 0 },
        MapKind::affine(c(width / PI, 0.0), c(0.0, 0.0)),
    ]);
    let a = strip.inverse().expect("strip map inverts").value(c(0.0, y0));
    // Re of the strip map is (W/π) ln|(1 + ξ)/(1 - ξ)|; bound it over the
    // disk image of |ζ| < ρ under the automorphism sending 0 to a.
    let excursion = |rho: f64| {
        let den = 1.0 - a.norm_sqr() * rho * rho;
        let cc = a * (1.0 - rho * rho) / den;
        let rr = rho * (1.0 - a.norm_sqr()) / den;
        let (np, nm) = ((1.0 + cc).norm(), (1.0 - cc).norm());
        if nm <= rr || np <= rr {
            return f64::INFINITY;
        }
        let hi = ((np + rr) / (nm - rr)).ln();
        let lo = ((nm + rr) / (np - rr)).ln();
        width / PI * hi.max(lo)
    };
    let rho = bisect_radius(|r| excursion(r) <= ARGUMENT_WINDOW);
    Ok(MapKind::compose(vec![
        MapKind::affine(c(rho, 0.0), c(0.0, 0.0)),
        MapKind::disk_automorphism(-a, 0.0)?,
        strip,
        MapKind::affine(c(0.0, -1.0), c(inner.ln(), theta0)),
        MapKind::Exp,
        MapKind::affine(c(1.0, 0.0), center),
    ]))
}

/// For a domain with exactly one puncture whose filled-in domain has a
/// uniformizer `φ`: move the puncture to 0, then use
/// `ζ -> exp(i L cayley(ρζ) + iθ)` into the punctured unit disk.
fn punctured_exp(d: &Domain, p: ComplexPoint) -> Result<Option<MapKind>> {
    let punctures = d.punctures();
    if punctures.len() != 1 {
        return Ok(None);
    }
    let Some(phi) = d.unpunctured().uniformizer() else {
        return Ok(None);
    };
    let Some(inv) = phi.inverse() else {
        return Ok(None);
    };
    let b = inv.value(punctures[0]);
    if !(b.norm() < 1.0) {
        return Ok(None);
    }
    let to_zero = MapKind::disk_automorphism(b, 0.0)?;
    let q = to_zero.value(inv.value(p));
    let l0 = -q.norm().ln();
    if !(l0 > 0.0 && l0.is_finite()) {
        return Ok(None);
    }
    // sup |Re cayley| over |ξ| <= ρ is 2ρ / (1 - ρ²).
    let x = ARGUMENT_WINDOW;
    let rho = (-l0 + (l0 * l0 + x * x).sqrt()) / x;
    Ok(Some(MapKind::compose(vec![
        MapKind::affine(c(rho, 0.0), c(0.0, 0.0)),
        MapKind::cayley(),
        MapKind::affine(c(0.0, l0), c(0.0, q.arg())),
        MapKind::Exp,
        MapKind::disk_automorphism(-b, 0.0)?,
        phi,
    ])))
}

/// Largest `ρ` in `[0, 1)` with `ok(ρ)`, for a predicate that holds on an
/// initial interval.
fn bisect_radius(ok: impl Fn(f64) -> bool) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::hyperbolic_closed_form;
    use crate::extremal::winding::count_s_points_sampled;

    fn lift_stays_in_window(g: &MapKind, center: ComplexPoint, p: ComplexPoint) {
        // Sampled check of |arg((g - c)/(p - c))| on a fine circle, unwrapped.
        // The circle stays 1e-3 inside the disk so the logarithmic spikes of
        // the strip map are resolved.
        // The lift starts at 0 for ζ = 0 and follows a radius out to the circle.
        let n = 20_000;
        let path = (0..=1000)
            .map(|k| c(0.999 * k as f64 / 1000.0, 0.0))
            .chain((1..=n).map(|k| Complex64::from_polar(0.999, 2.0 * PI * k as f64 / n as f64)));
        let mut prev = 0.0;
        let mut acc = 0.0f64;
        let mut worst = 0.0f64;
        for z in path {
            let a = ((g.value(z) - center) / (p - center)).arg();
            let mut d = a - prev;
            while d > PI {
                d -= 2.0 * PI;
            }
            while d < -PI {
                d += 2.0 * PI;
            }
            acc += d;
            prev = a;
            worst = worst.max(acc.abs());
        }
        assert!(worst < 2.0 * PI, "excursion {worst}");
    }

    #[test]
    fn annulus_log_strip_is_nearly_extremal() {
        let ann = Domain::annulus(c(0.0, 0.0), 0.25, 1.0).unwrap();
        let p = c(0.5, 0.0);
        let maps = disk_maps_into(&ann, p).unwrap();
        let g = &maps[0];
        assert_eq!(g.family, DiskMapKind::LogStrip);
        let lam = hyperbolic_closed_form(&ann, p).unwrap().value;
        // 2 / |g'(0)| matches the hyperbolic density up to the shrink factor.
        let ratio = 2.0 / g.derivative / lam;
        assert!(ratio > 1.0 && ratio < 1.0 + 1e-5, "{ratio}");
        for k in 0..64 {
            let z = Complex64::from_polar(0.999, 0.1 * k as f64);
            assert!(ann.contains(g.kind.value(z)));
        }
        lift_stays_in_window(&g.kind, c(0.0, 0.0), p);
        let inner = Domain::disk(c(0.0, 0.0), 0.999).unwrap();
        assert_eq!(count_s_points_sampled(&g.kind, &inner, p, 20_000).unwrap(), 1);
    }

    #[test]
    fn punctured_disk_exp_map() {
        let pd = Domain::punctured_disk(c(0.0, 0.0), 1.0).unwrap();
        let p = c(0.0, 0.5);
        let maps = disk_maps_into(&pd, p).unwrap();
        assert_eq!(maps[0].family, DiskMapKind::PuncturedExp);
        assert!(maps[0].derivative > maps.last().unwrap().derivative);
        for k in 0..64 {
            let z = Complex64::from_polar(0.99, 0.1 * k as f64);
            assert!(pd.contains(maps[0].kind.value(z)));
        }
        lift_stays_in_window(&maps[0].kind, c(0.0, 0.0), p);
    }

    #[test]
    fn riemann_map_of_half_plane() {
        let h = Domain::upper_half_plane();
        let p = c(0.3, 2.0);
        let g = best_disk_map(&h, p).unwrap().unwrap();
        assert_eq!(g.family, DiskMapKind::RiemannMap);
        let lam = hyperbolic_closed_form(&h, p).unwrap().value;
        assert!((2.0 / g.derivative - lam).abs() < 1e-12 * lam);
    }

    #[test]
    fn whole_plane_has_none() {
        assert!(disk_maps_into(&Domain::whole_plane(), c(0.0, 0.0)).unwrap().is_empty());
    }
}
