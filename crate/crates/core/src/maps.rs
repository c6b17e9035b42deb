//! Catalog of holomorphic maps with analytic derivatives.
//!
//! [`MapKind`] is a bare formula: it can be evaluated anywhere it is finite.
//! [`AnalyticMap`] pairs a formula with a source and target domain and is
//! spot-checked on construction, so it is the type used wherever a map
//! between two specific domains matters (transport, distance-decreasing
//! test maps, base-domain coverings).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::ComplexPoint;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Probe count used when a map between domains is constructed.
pub const SPOT_CHECK_POINTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapKind {
    /// `(a z + b) / (c z + d)`
    Mobius {
        a: ComplexPoint,
        b: ComplexPoint,
        c: ComplexPoint,
        d: ComplexPoint,
    },
    Exp,
    /// `ln|z| + i (Arg z + 2 pi branch)` with `Arg` in `(-pi, pi]`.
    Log {
        #[serde(default)]
        branch: i32,
    },
    /// Principal branch of `z^exponent`; integer exponents are single valued.
    Power { exponent: f64 },
    /// `scale * z + shift`
    Affine {
        scale: ComplexPoint,
        shift: ComplexPoint,
    },
    /// Applied first to last.
    Composition { maps: Vec<MapKind> },
}

impl MapKind {
    pub fn identity() -> Self {
        MapKind::Affine {
            scale: Complex64::new(1.0, 0.0),
            shift: Complex64::new(0.0, 0.0),
        }
    }

    pub fn mobius(a: ComplexPoint, b: ComplexPoint, c: ComplexPoint, d: ComplexPoint) -> Result<Self> {
        let det = a * d - b * c;
        if !(det.norm() > 0.0) || !det.is_finite() {
            return Err(Error::InvalidMap(format!(
                "Mobius coefficients have ad - bc = {det}"
            )));
        }
        Ok(MapKind::Mobius { a, b, c, d })
    }

    pub fn affine(scale: ComplexPoint, shift: ComplexPoint) -> Self {
        MapKind::Affine { scale, shift }
    }

    pub fn rotation(angle: f64) -> Self {
        MapKind::affine(Complex64::from_polar(1.0, angle), Complex64::new(0.0, 0.0))
    }

    /// Disk automorphism `e^{i phi} (z - a) / (1 - conj(a) z)`, sending `a` to 0.
    pub fn disk_automorphism(a: ComplexPoint, phi: f64) -> Result<Self> {
        if a.norm() >= 1.0 {
            return Err(Error::InvalidMap(format!(
                "disk automorphism needs |a| < 1, got {a}"
            )));
        }
        let rot = Complex64::from_polar(1.0, phi);
        MapKind::mobius(rot, -rot * a, -a.conj(), Complex64::new(1.0, 0.0))
    }

    /// Cayley map `i (1 + z) / (1 - z)` from the unit disk onto the upper half-plane.
    pub fn cayley() -> Self {
        MapKind::Mobius {
            a: I,
            b: I,
            c: Complex64::new(-1.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    pub fn compose(maps: Vec<MapKind>) -> Self {
        MapKind::Composition { maps }
    }

    /// Value and derivative at `z`. Either may be non-finite at a singularity.
    pub fn eval(&self, z: ComplexPoint) -> (ComplexPoint, ComplexPoint) {
        match self {
            MapKind::Mobius { a, b, c, d } => {
                let den = c * z + d;
                ((a * z + b) / den, (a * d - b * c) / (den * den))
            }
            MapKind::Exp => {
                let e = z.exp();
                (e, e)
            }
            MapKind::Log { branch } => {
                if z == Complex64::new(0.0, 0.0) {
                    let nan = Complex64::new(f64::NAN, f64::NAN);
                    return (nan, nan);
                }
                (z.ln() + I * (2.0 * PI * f64::from(*branch)), z.inv())
            }
            MapKind::Power { exponent } => {
                let n = exponent.round();
                if (exponent - n).abs() < 1e-15 && n.abs() <= 64.0 {
                    let n = n as i32;
                    if n == 0 {
                        return (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
                    }
                    (z.powi(n), f64::from(n) * z.powi(n - 1))
                } else {
                    if z == Complex64::new(0.0, 0.0) {
                        let nan = Complex64::new(f64::NAN, f64::NAN);
                        return (nan, nan);
                    }
                    let v = (exponent * z.ln()).exp();
                    (v, exponent * v / z)
                }
            }
            MapKind::Affine { scale, shift } => (scale * z + shift, *scale),
            MapKind::Composition { maps } => {
                let mut value = z;
                let mut derivative = Complex64::new(1.0, 0.0);
                for m in maps {
                    let (v, d) = m.eval(value);
                    value = v;
                    derivative *= d;
                }
                (value, derivative)
            }
        }
    }

    pub fn value(&self, z: ComplexPoint) -> ComplexPoint {
        self.eval(z).0
    }

    /// Formal inverse. Branch-dependent inverses (`Exp`, non-integer `Power`)
    /// use the principal branch.
    pub fn inverse(&self) -> Option<MapKind> {
        match self {
            MapKind::Mobius { a, b, c, d } => Some(MapKind::Mobius {
                a: *d,
                b: -b,
                c: -c,
                d: *a,
            }),
            MapKind::Exp => Some(MapKind::Log { branch: 0 }),
            MapKind::Log { branch } => Some(MapKind::compose(vec![
                MapKind::affine(
                    Complex64::new(1.0, 0.0),
                    -I * (2.0 * PI * f64::from(*branch)),
                ),
                MapKind::Exp,
            ])),
            MapKind::Power { exponent } => {
                if *exponent == 0.0 {
                    None
                } else {
                    Some(MapKind::Power {
                        exponent: 1.0 / exponent,
                    })
                }
            }
            MapKind::Affine { scale, shift } => {
                if scale.norm() == 0.0 {
                    None
                } else {
                    Some(MapKind::Affine {
                        scale: scale.inv(),
                        shift: -shift / scale,
                    })
                }
            }
            MapKind::Composition { maps } => {
                let inv: Option<Vec<MapKind>> = maps.iter().rev().map(|m| m.inverse()).collect();
                inv.map(MapKind::compose)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MapKind::Mobius { a, b, c, d } => {
                MapKind::mobius(*a, *b, *c, *d)?;
            }
            MapKind::Power { exponent } if !exponent.is_finite() => {
                return Err(Error::InvalidMap("non-finite exponent".into()));
            }
            MapKind::Affine { scale, .. } if scale.norm() == 0.0 => {
                return Err(Error::InvalidMap("affine map with zero scale".into()));
            }
            MapKind::Composition { maps } => {
                for m in maps {
                    m.validate()?;
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Anything with a pointwise value and complex derivative.
pub trait Holomorphic {
    fn value_and_derivative(&self, z: ComplexPoint) -> (ComplexPoint, ComplexPoint);
}

impl Holomorphic for MapKind {
    fn value_and_derivative(&self, z: ComplexPoint) -> (ComplexPoint, ComplexPoint) {
        self.eval(z)
    }
}

impl<F> Holomorphic for F
where
    F: Fn(ComplexPoint) -> (ComplexPoint, ComplexPoint),
{
    fn value_and_derivative(&self, z: ComplexPoint) -> (ComplexPoint, ComplexPoint) {
        self(z)
    }
}

/// A catalog map together with the domains it connects.
#[derive(Debug, Clone)]
pub struct AnalyticMap {
    pub kind: MapKind,
    pub source: Domain,
    pub target: Domain,
}

impl AnalyticMap {
    /// Builds the map after checking that it sends [`SPOT_CHECK_POINTS`]
    /// random source points into the target.
    pub fn new(kind: MapKind, source: Domain, target: Domain) -> Result<Self> {
        kind.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_0a9);
        let probes = source.sample_points(&mut rng, SPOT_CHECK_POINTS)?;
        for z in probes {
            let (w, dw) = kind.eval(z);
            if !w.is_finite() || !dw.is_finite() || !target.contains(w) {
                return Err(Error::InvalidMap(format!(
                    "map sends {z} in `{}` to {w}, outside `{}`",
                    source.label(),
                    target.label()
                )));
            }
        }
        Ok(AnalyticMap {
            kind,
            source,
            target,
        })
    }

    pub fn eval(&self, z: ComplexPoint) -> Result<(ComplexPoint, ComplexPoint)> {
        if !self.source.contains(z) {
            return Err(Error::PointOutsideDomain(z, self.source.label().to_string()));
        }
        let (w, dw) = self.kind.eval(z);
        if !w.is_finite() || !dw.is_finite() {
            return Err(Error::PointOutsideDomain(z, self.source.label().to_string()));
        }
        Ok((w, dw))
    }

    /// Inverse map between the same domains, swapped. Only meaningful for
    /// conformal maps onto the target.
    pub fn inverse(&self) -> Result<AnalyticMap> {
        let kind = self
            .kind
            .inverse()
            .ok_or_else(|| Error::InvalidMap("map has no catalog inverse".into()))?;
        AnalyticMap::new(kind, self.target.clone(), self.source.clone())
    }
}

impl Holomorphic for AnalyticMap {
    fn value_and_derivative(&self, z: ComplexPoint) -> (ComplexPoint, ComplexPoint) {
        self.kind.eval(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mobius_sends_a_to_zero() {
        let t = MapKind::disk_automorphism(c(0.5, 0.0), 0.0).unwrap();
        let (v, d) = t.eval(c(0.5, 0.0));
        assert!(v.norm() < 1e-15);
        assert_relative_eq!(d.re, 4.0 / 3.0, epsilon = 1e-14);
        assert!(d.im.abs() < 1e-15);
    }

    #[test]
    fn exp_at_zero() {
        let (v, d) = MapKind::Exp.eval(c(0.0, 0.0));
        assert_eq!(v, c(1.0, 0.0));
        assert_eq!(d, c(1.0, 0.0));
    }

    #[test]
    fn composition_uses_chain_rule() {
        let m = MapKind::compose(vec![MapKind::affine(c(2.0, 0.0), c(0.0, 0.0)), MapKind::Exp]);
        let (v, d) = m.eval(c(0.0, 0.0));
        assert_eq!(v, c(1.0, 0.0));
        assert_eq!(d, c(2.0, 0.0));
    }

    #[test]
    fn degenerate_mobius_rejected() {
        assert!(MapKind::mobius(c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)).is_err());
    }

    #[test]
    fn inverses_round_trip() {
        let maps = vec![
            MapKind::disk_automorphism(c(0.3, -0.2), 0.7).unwrap(),
            MapKind::cayley(),
            MapKind::affine(c(2.0, 1.0), c(-0.5, 0.25)),
            MapKind::compose(vec![MapKind::cayley(), MapKind::Log { branch: 0 }]),
            MapKind::Power { exponent: 0.5 },
        ];
        let z = c(0.21, 0.13);
        for m in maps {
            let inv = m.inverse().unwrap();
            let back = inv.value(m.value(z));
            assert!((back - z).norm() < 1e-12, "{m:?}: {back} vs {z}");
        }
    }

    #[test]
    fn integer_power_derivative() {
        let (v, d) = MapKind::Power { exponent: 2.0 }.eval(c(0.0, 0.0));
        assert_eq!(v, c(0.0, 0.0));
        assert_eq!(d, c(0.0, 0.0));
        let (v, d) = MapKind::Power { exponent: 3.0 }.eval(c(1.0, 1.0));
        assert!((v - c(1.0, 1.0).powi(3)).norm() < 1e-14);
        assert!((d - 3.0 * c(1.0, 1.0).powi(2)).norm() < 1e-14);
    }

    #[test]
    fn spot_check_rejects_bad_target() {
        let disk = Domain::unit_disk();
        let small = Domain::disk(c(0.0, 0.0), 0.5).unwrap();
        assert!(AnalyticMap::new(MapKind::identity(), disk.clone(), small).is_err());
        assert!(AnalyticMap::new(MapKind::cayley(), disk, Domain::upper_half_plane()).is_ok());
    }
}
