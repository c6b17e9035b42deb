//! Plane domains: the catalog, membership, boundary distance and boundary
//! sampling.
//!
//! Punctures are explicit ([`DomainKind::Punctured`]) because the Hurwitz
//! construction works with `Y \ {s}` all the time. A puncture is a boundary
//! point for [`Domain::boundary_distance`]; for contour integrals it is
//! represented by a small clockwise circle.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::MapKind;
use crate::ComplexPoint;

type Membership = Arc<dyn Fn(ComplexPoint) -> bool + Send + Sync>;
type DistanceFn = Arc<dyn Fn(ComplexPoint) -> f64 + Send + Sync>;
/// Closed curve parametrized over `t in [0, 1)`, positively oriented.
pub type BoundaryCurve = Arc<dyn Fn(f64) -> ComplexPoint + Send + Sync>;

/// Half-width of the sampled window for straight boundary lines, in units of
/// the strip width. Contributions of bounded catalog maps beyond it decay like
/// `exp(-pi * window / width)`, far below 1e-9.
pub const STRIP_WINDOW_WIDTHS: f64 = 8.0;
/// Half-width of the sampled window for half-plane boundary lines.
pub const HALF_PLANE_WINDOW: f64 = 1.0e4;
/// Radius of the contour standing in for a puncture, relative to the local scale.
pub const PUNCTURE_CONTOUR_FRACTION: f64 = 1.0e-3;

#[derive(Clone)]
pub struct GenericDomain {
    membership: Membership,
    distance: DistanceFn,
    boundary: Vec<BoundaryCurve>,
    bounds: Option<(ComplexPoint, ComplexPoint)>,
    uniformizer: Option<MapKind>,
}

impl GenericDomain {
    pub fn new(
        membership: impl Fn(ComplexPoint) -> bool + Send + Sync + 'static,
        distance: impl Fn(ComplexPoint) -> f64 + Send + Sync + 'static,
    ) -> Self {
        GenericDomain {
            membership: Arc::new(membership),
            distance: Arc::new(distance),
            boundary: Vec::new(),
            bounds: None,
            uniformizer: None,
        }
    }

    pub fn with_boundary(mut self, curves: Vec<BoundaryCurve>) -> Self {
        self.boundary = curves;
        self
    }

    pub fn with_bounds(mut self, lo: ComplexPoint, hi: ComplexPoint) -> Self {
        self.bounds = Some((lo, hi));
        self
    }

    /// Records a conformal map from the unit disk onto the domain.
    pub fn with_uniformizer(mut self, map: MapKind) -> Self {
        self.uniformizer = Some(map);
        self
    }
}

#[derive(Clone)]
pub enum DomainKind {
    Disk {
        center: ComplexPoint,
        radius: f64,
    },
    /// `{ z : Re((z - point) * conj(normal)) > 0 }`, `normal` the unit inward normal.
    HalfPlane {
        point: ComplexPoint,
        normal: ComplexPoint,
    },
    /// `{ z : 0 < Im z < width }`
    Strip {
        width: f64,
    },
    Annulus {
        center: ComplexPoint,
        inner: f64,
        outer: f64,
    },
    PuncturedDisk {
        center: ComplexPoint,
        radius: f64,
    },
    Punctured {
        base: Box<Domain>,
        puncture: ComplexPoint,
    },
    Generic(GenericDomain),
    /// The whole plane; only used to exercise the empty-family convention.
    WholePlane,
}

impl fmt::Debug for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainKind::Disk { center, radius } => write!(f, "Disk({center}, {radius})"),
            DomainKind::HalfPlane { point, normal } => write!(f, "HalfPlane({point}, {normal})"),
            DomainKind::Strip { width } => write!(f, "Strip({width})"),
            DomainKind::Annulus {
                center,
                inner,
                outer,
            } => write!(f, "Annulus({inner}, {outer}, {center})"),
            DomainKind::PuncturedDisk { center, radius } => {
                write!(f, "PuncturedDisk({center}, {radius})")
            }
            DomainKind::Punctured { base, puncture } => {
                write!(f, "Punctured({:?}, {puncture})", base.kind)
            }
            DomainKind::Generic(_) => write!(f, "Generic"),
            DomainKind::WholePlane => write!(f, "WholePlane"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Domain {
    kind: DomainKind,
    label: String,
}

/// One sampled boundary point with its positively oriented unit tangent and
/// the arclength weight for quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample {
    pub point: ComplexPoint,
    pub tangent: ComplexPoint,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct BoundaryComponent {
    pub samples: Vec<BoundarySample>,
    /// False for truncated boundary lines.
    pub closed: bool,
    /// True for the small circle standing in for a puncture.
    pub puncture: bool,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn finite(z: ComplexPoint) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

impl Domain {
    pub fn new(kind: DomainKind, label: impl Into<String>) -> Result<Self> {
        let d = Domain {
            kind,
            label: label.into(),
        };
        d.validate()?;
        Ok(d)
    }

    fn auto(kind: DomainKind) -> Result<Self> {
        let label = format!("{kind:?}");
        Domain::new(kind, label)
    }

    pub fn disk(center: ComplexPoint, radius: f64) -> Result<Self> {
        Domain::auto(DomainKind::Disk { center, radius })
    }

    pub fn unit_disk() -> Self {
        Domain::disk(c(0.0, 0.0), 1.0).expect("unit disk is valid")
    }

    pub fn half_plane(point: ComplexPoint, normal: ComplexPoint) -> Result<Self> {
        let n = normal.norm();
        if !(n > 0.0) || !finite(normal) {
            return Err(Error::InvalidDomain("half-plane normal must be nonzero".into()));
        }
        Domain::auto(DomainKind::HalfPlane {
            point,
            normal: normal / n,
        })
    }

    pub fn upper_half_plane() -> Self {
        Domain::half_plane(c(0.0, 0.0), c(0.0, 1.0)).expect("valid")
    }

    pub fn strip(width: f64) -> Result<Self> {
        Domain::auto(DomainKind::Strip { width })
    }

    pub fn annulus(center: ComplexPoint, inner: f64, outer: f64) -> Result<Self> {
        Domain::auto(DomainKind::Annulus {
            center,
            inner,
            outer,
        })
    }

    pub fn punctured_disk(center: ComplexPoint, radius: f64) -> Result<Self> {
        Domain::auto(DomainKind::PuncturedDisk { center, radius })
    }

    pub fn punctured(base: Domain, puncture: ComplexPoint) -> Result<Self> {
        Domain::auto(DomainKind::Punctured {
            base: Box::new(base),
            puncture,
        })
    }

    pub fn whole_plane() -> Self {
        Domain::auto(DomainKind::WholePlane).expect("valid")
    }

    pub fn generic(g: GenericDomain, label: impl Into<String>) -> Result<Self> {
        Domain::new(DomainKind::Generic(g), label)
    }

    /// The image of the unit disk under a catalog map that is injective on
    /// the closed disk. Membership goes through the formal inverse.
    pub fn conformal_image_of_disk(map: MapKind, label: impl Into<String>) -> Result<Self> {
        map.validate()?;
        let inverse = map
            .inverse()
            .ok_or_else(|| Error::InvalidMap("uniformizer needs a catalog inverse".into()))?;
        let n = 4096;
        let pts: Vec<ComplexPoint> = (0..n)
            .map(|k| map.value(Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)))
            .collect();
        if pts.iter().any(|p| !finite(*p)) {
            return Err(Error::InvalidDomain(
                "uniformizer must be finite on the closed unit disk".into(),
            ));
        }
        let (mut lo, mut hi) = (pts[0], pts[0]);
        for p in &pts {
            lo = c(lo.re.min(p.re), lo.im.min(p.im));
            hi = c(hi.re.max(p.re), hi.im.max(p.im));
        }
        let fwd = map.clone();
        let curve: BoundaryCurve =
            Arc::new(move |t: f64| fwd.value(Complex64::from_polar(1.0, 2.0 * PI * t)));
        let member_map = map.clone();
        let membership = move |z: ComplexPoint| {
            if !finite(z) {
                return false;
            }
            let zeta = inverse.value(z);
            if !finite(zeta) || zeta.norm() >= 1.0 {
                return false;
            }
            (member_map.value(zeta) - z).norm() <= 1e-9 * (1.0 + z.norm())
        };
        let dist_curve = curve.clone();
        let distance = move |z: ComplexPoint| curve_distance(&dist_curve, z, &pts);
        let g = GenericDomain::new(membership, distance)
            .with_boundary(vec![curve])
            .with_bounds(lo, hi)
            .with_uniformizer(map);
        Domain::generic(g, label)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDomain(msg));
        match &self.kind {
            DomainKind::Disk { center, radius } | DomainKind::PuncturedDisk { center, radius } => {
                if !finite(*center) || !(*radius > 0.0) || !radius.is_finite() {
                    return bad(format!("disk radius must be positive, got {radius}"));
                }
            }
            DomainKind::HalfPlane { point, normal } => {
                if !finite(*point) || !finite(*normal) || (normal.norm() - 1.0).abs() > 1e-12 {
                    return bad("half-plane needs a finite point and unit normal".into());
                }
            }
            DomainKind::Strip { width } => {
                if !(*width > 0.0) || !width.is_finite() {
                    return bad(format!("strip width must be positive, got {width}"));
                }
            }
            DomainKind::Annulus {
                center,
                inner,
                outer,
            } => {
                if !finite(*center) || !(*inner > 0.0) || !(inner < outer) || !outer.is_finite() {
                    return bad(format!("annulus needs 0 < r < R, got r={inner}, R={outer}"));
                }
            }
            DomainKind::Punctured { base, puncture } => {
                if !finite(*puncture) || !base.contains(*puncture) {
                    return bad(format!("puncture {puncture} must lie inside the base domain"));
                }
                if !(base.boundary_distance(*puncture)? > 0.0) {
                    return bad("puncture must be strictly interior".into());
                }
            }
            DomainKind::Generic(_) | DomainKind::WholePlane => {}
        }
        Ok(())
    }

    pub fn is_whole_plane(&self) -> bool {
        matches!(self.kind, DomainKind::WholePlane)
    }

    pub fn is_bounded(&self) -> bool {
        match &self.kind {
            DomainKind::Disk { .. }
            | DomainKind::Annulus { .. }
            | DomainKind::PuncturedDisk { .. } => true,
            DomainKind::Punctured { base, .. } => base.is_bounded(),
            DomainKind::Generic(g) => g.bounds.is_some(),
            DomainKind::HalfPlane { .. } | DomainKind::Strip { .. } | DomainKind::WholePlane => {
                false
            }
        }
    }

    /// Simply connected proper subdomain (catalog knowledge).
    pub fn is_simply_connected(&self) -> bool {
        match &self.kind {
            DomainKind::Disk { .. } | DomainKind::HalfPlane { .. } | DomainKind::Strip { .. } => {
                true
            }
            DomainKind::Generic(g) => g.uniformizer.is_some(),
            _ => false,
        }
    }

    /// A conformal map from the unit disk onto the domain, when the catalog has one.
    pub fn uniformizer(&self) -> Option<MapKind> {
        match &self.kind {
            DomainKind::Disk { center, radius } => {
                Some(MapKind::affine(c(*radius, 0.0), *center))
            }
            DomainKind::HalfPlane { point, normal } => {
                // point + normal (1 + z) / (1 - z)
                Some(MapKind::Mobius {
                    a: normal - point,
                    b: point + normal,
                    c: c(-1.0, 0.0),
                    d: c(1.0, 0.0),
                })
            }
            DomainKind::Strip { width } => Some(MapKind::compose(vec![
                MapKind::cayley(),
                MapKind::Log { branch: 0 },
                MapKind::affine(c(width / PI, 0.0), c(0.0, 0.0)),
            ])),
            DomainKind::Generic(g) => g.uniformizer.clone(),
            _ => None,
        }
    }

    /// Puncture points, innermost last.
    pub fn punctures(&self) -> Vec<ComplexPoint> {
        match &self.kind {
            DomainKind::PuncturedDisk { center, .. } => vec![*center],
            DomainKind::Punctured { base, puncture } => {
                let mut p = base.punctures();
                p.push(*puncture);
                p
            }
            _ => Vec::new(),
        }
    }

    /// The domain with all punctures filled in.
    pub fn unpunctured(&self) -> Domain {
        match &self.kind {
            DomainKind::PuncturedDisk { center, radius } => {
                Domain::disk(*center, *radius).expect("valid")
            }
            DomainKind::Punctured { base, .. } => base.unpunctured(),
            _ => self.clone(),
        }
    }

    pub fn contains(&self, z: ComplexPoint) -> bool {
        if !finite(z) {
            return false;
        }
        match &self.kind {
            DomainKind::Disk { center, radius } => (z - center).norm() < *radius,
            DomainKind::HalfPlane { point, normal } => ((z - point) * normal.conj()).re > 0.0,
            DomainKind::Strip { width } => z.im > 0.0 && z.im < *width,
            DomainKind::Annulus {
                center,
                inner,
                outer,
            } => {
                let r = (z - center).norm();
                r > *inner && r < *outer
            }
            DomainKind::PuncturedDisk { center, radius } => {
                let r = (z - center).norm();
                r > 0.0 && r < *radius
            }
            DomainKind::Punctured { base, puncture } => z != *puncture && base.contains(z),
            DomainKind::Generic(g) => (g.membership)(z),
            DomainKind::WholePlane => true,
        }
    }

    /// Euclidean distance from `z` to the complement, punctures included.
    pub fn boundary_distance(&self, z: ComplexPoint) -> Result<f64> {
        self.boundary_distance_excluding(z, &[])
    }

    /// Distance to the complement ignoring the listed punctures.
    pub fn boundary_distance_excluding(
        &self,
        z: ComplexPoint,
        ignored: &[ComplexPoint],
    ) -> Result<f64> {
        if !self.contains(z) {
            return Err(Error::PointOutsideDomain(z, self.label.clone()));
        }
        Ok(self.raw_distance(z, ignored))
    }

    /// Distance from a puncture to the rest of the boundary.
    pub fn puncture_clearance(&self, p: ComplexPoint) -> f64 {
        self.raw_distance(p, &[p])
    }

    fn raw_distance(&self, z: ComplexPoint, ignored: &[ComplexPoint]) -> f64 {
        let skip = |p: &ComplexPoint| ignored.iter().any(|q| q == p);
        match &self.kind {
            DomainKind::Disk { center, radius } => radius - (z - center).norm(),
            DomainKind::HalfPlane { point, normal } => ((z - point) * normal.conj()).re,
            DomainKind::Strip { width } => z.im.min(width - z.im),
            DomainKind::Annulus {
                center,
                inner,
                outer,
            } => {
                let r = (z - center).norm();
                (r - inner).min(outer - r)
            }
            DomainKind::PuncturedDisk { center, radius } => {
                let r = (z - center).norm();
                if skip(center) {
                    radius - r
                } else {
                    r.min(radius - r)
                }
            }
            DomainKind::Punctured { base, puncture } => {
                let d = base.raw_distance(z, ignored);
                if skip(puncture) {
                    d
                } else {
                    d.min((z - puncture).norm())
                }
            }
            DomainKind::Generic(g) => (g.distance)(z),
            DomainKind::WholePlane => f64::INFINITY,
        }
    }

    /// Axis-aligned bounding box of a bounded domain.
    pub fn bounding_box(&self) -> Option<(ComplexPoint, ComplexPoint)> {
        match &self.kind {
            DomainKind::Disk { center, radius } | DomainKind::PuncturedDisk { center, radius } => {
                Some((center - c(*radius, *radius), center + c(*radius, *radius)))
            }
            DomainKind::Annulus { center, outer, .. } => {
                Some((center - c(*outer, *outer), center + c(*outer, *outer)))
            }
            DomainKind::Punctured { base, .. } => base.bounding_box(),
            DomainKind::Generic(g) => g.bounds,
            _ => None,
        }
    }

    /// Boundary points with positively oriented unit tangents, one group per
    /// boundary component. Unbounded lines are truncated to a window.
    pub fn boundary_sample(&self, n: usize) -> Result<Vec<BoundaryComponent>> {
        self.boundary_sample_windowed(n, None)
    }

    pub fn boundary_sample_windowed(
        &self,
        n: usize,
        window: Option<f64>,
    ) -> Result<Vec<BoundaryComponent>> {
        if n < 4 {
            return Err(Error::InvalidArgument(format!(
                "need at least 4 samples per boundary component, got {n}"
            )));
        }
        let out = match &self.kind {
            DomainKind::Disk { center, radius } => vec![circle(*center, *radius, n, true)],
            DomainKind::Annulus {
                center,
                inner,
                outer,
            } => vec![
                circle(*center, *outer, n, true),
                circle(*center, *inner, n, false),
            ],
            DomainKind::PuncturedDisk { center, radius } => {
                let mut pc = circle(*center, radius * PUNCTURE_CONTOUR_FRACTION, n, false);
                pc.puncture = true;
                vec![circle(*center, *radius, n, true), pc]
            }
            DomainKind::Punctured { base, puncture } => {
                let mut comps = base.boundary_sample_windowed(n, window)?;
                let scale = base.raw_distance(*puncture, &[]).min(1.0);
                let mut pc = circle(*puncture, scale * PUNCTURE_CONTOUR_FRACTION, n, false);
                pc.puncture = true;
                comps.push(pc);
                comps
            }
            DomainKind::HalfPlane { point, normal } => {
                let x = window.unwrap_or(HALF_PLANE_WINDOW);
                let tangent = -Complex64::i() * normal;
                vec![line(*point, tangent, x, n)]
            }
            DomainKind::Strip { width } => {
                let x = window.unwrap_or(STRIP_WINDOW_WIDTHS * width);
                vec![
                    line(c(0.0, 0.0), c(1.0, 0.0), x, n),
                    line(c(0.0, *width), c(-1.0, 0.0), x, n),
                ]
            }
            DomainKind::Generic(g) => {
                if g.boundary.is_empty() {
                    return Err(Error::UnsupportedDomain {
                        domain: self.label.clone(),
                        operation: "boundary sampling (no boundary curves supplied)".into(),
                    });
                }
                g.boundary.iter().map(|curve| sample_curve(curve, n)).collect()
            }
            DomainKind::WholePlane => {
                return Err(Error::UnsupportedDomain {
                    domain: self.label.clone(),
                    operation: "boundary sampling".into(),
                })
            }
        };
        Ok(out)
    }

    /// Uniform random points inside the domain (rejection sampling in the
    /// bounding box; unbounded domains use a window around the origin).
    pub fn sample_points<R: Rng>(&self, rng: &mut R, n: usize) -> Result<Vec<ComplexPoint>> {
        let (lo, hi) = match (&self.kind, self.bounding_box()) {
            (_, Some(b)) => b,
            (DomainKind::Strip { width }, None) => (c(-4.0 * width, 0.0), c(4.0 * width, *width)),
            (DomainKind::HalfPlane { point, .. }, None) => {
                (point - c(4.0, 4.0), point + c(4.0, 4.0))
            }
            _ => (c(-4.0, -4.0), c(4.0, 4.0)),
        };
        let mut out = Vec::with_capacity(n);
        let mut tries = 0usize;
        while out.len() < n {
            tries += 1;
            if tries > 1000 * n + 10_000 {
                return Err(Error::InvalidDomain(format!(
                    "could not sample points inside `{}`",
                    self.label
                )));
            }
            let z = c(rng.gen_range(lo.re..hi.re), rng.gen_range(lo.im..hi.im));
            if self.contains(z) {
                out.push(z);
            }
        }
        Ok(out)
    }

    /// Stable identity for caching computed quantities.
    pub fn fingerprint(&self) -> String {
        match &self.kind {
            DomainKind::Generic(_) => format!("generic:{}", self.label),
            DomainKind::Punctured { base, puncture } => format!(
                "punctured[{}]@({:e},{:e})",
                base.fingerprint(),
                puncture.re,
                puncture.im
            ),
            other => format!("{other:?}"),
        }
    }
}

/// Whether `inner` is contained in `outer`. Catalog pairs are decided
/// analytically; anything else is decided by sampling.
pub fn is_subdomain(inner: &Domain, outer: &Domain) -> bool {
    if inner.fingerprint() == outer.fingerprint() {
        return true;
    }
    use DomainKind as K;
    match (&inner.kind, &outer.kind) {
        (_, K::WholePlane) => return true,
        (K::Punctured { base, .. }, _) => return is_subdomain(base, outer),
        (_, K::Punctured { base, puncture }) => {
            return !inner.contains(*puncture) && is_subdomain(inner, base)
        }
        (_, K::PuncturedDisk { center, radius }) => {
            let disk = Domain::disk(*center, *radius).expect("valid");
            return !inner.contains(*center) && is_subdomain(inner, &disk);
        }
        _ => {}
    }
    let footprint = match &inner.kind {
        K::Disk { center, radius } | K::PuncturedDisk { center, radius } => {
            Some((*center, *radius, None))
        }
        K::Annulus {
            center,
            inner: r,
            outer: big,
        } => Some((*center, *big, Some(*r))),
        _ => None,
    };
    match (footprint, &outer.kind) {
        (Some((ci, ri, _)), K::Disk { center, radius }) => {
            return (ci - center).norm() + ri <= *radius * (1.0 + 1e-15)
        }
        (
            Some((ci, ri, hole)),
            K::Annulus {
                center,
                inner: r,
                outer: big,
            },
        ) => {
            if (ci - center).norm() + ri > *big * (1.0 + 1e-15) {
                return false;
            }
            return match hole {
                Some(h) if ci == *center => h >= *r * (1.0 - 1e-15),
                _ => (ci - center).norm() - ri >= *r,
            };
        }
        (Some((ci, ri, _)), K::HalfPlane { point, normal }) => {
            return ((ci - point) * normal.conj()).re >= ri
        }
        (Some((ci, ri, _)), K::Strip { width }) => {
            return ci.im - ri >= 0.0 && ci.im + ri <= *width
        }
        _ => {}
    }
    subdomain_by_sampling(inner, outer)
}

fn subdomain_by_sampling(inner: &Domain, outer: &Domain) -> bool {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    let Ok(points) = inner.sample_points(&mut rng, 2000) else {
        return false;
    };
    if points.iter().any(|z| !outer.contains(*z)) {
        return false;
    }
    match inner.boundary_sample(1024) {
        Ok(comps) => comps.iter().filter(|c| !c.puncture).all(|comp| {
            comp.samples.iter().all(|s| {
                let inward = Complex64::i() * s.tangent;
                outer.contains(s.point + 1e-9 * inward)
            })
        }),
        Err(_) => true,
    }
}

fn circle(center: ComplexPoint, radius: f64, n: usize, ccw: bool) -> BoundaryComponent {
    let sign = if ccw { 1.0 } else { -1.0 };
    let weight = 2.0 * PI * radius / n as f64;
    let samples = (0..n)
        .map(|k| {
            let e = Complex64::from_polar(1.0, sign * 2.0 * PI * k as f64 / n as f64);
            BoundarySample {
                point: center + radius * e,
                tangent: sign * Complex64::i() * e,
                weight,
            }
        })
        .collect();
    BoundaryComponent {
        samples,
        closed: true,
        puncture: false,
    }
}

fn line(anchor: ComplexPoint, tangent: ComplexPoint, half: f64, n: usize) -> BoundaryComponent {
    let step = 2.0 * half / (n - 1) as f64;
    let samples = (0..n)
        .map(|k| {
            let end = k == 0 || k == n - 1;
            BoundarySample {
                point: anchor + tangent * (-half + step * k as f64),
                tangent,
                weight: if end { 0.5 * step } else { step },
            }
        })
        .collect();
    BoundaryComponent {
        samples,
        closed: false,
        puncture: false,
    }
}

fn sample_curve(curve: &BoundaryCurve, n: usize) -> BoundaryComponent {
    let dt = 1.0 / n as f64;
    let h = 1e-6;
    let samples = (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            let d = (curve(t + h) - curve(t - h)) / (2.0 * h);
            let speed = d.norm();
            BoundarySample {
                point: curve(t),
                tangent: d / speed,
                weight: speed * dt,
            }
        })
        .collect();
    BoundaryComponent {
        samples,
        closed: true,
        puncture: false,
    }
}

/// Distance to a closed parametrized curve: nearest of the dense samples,
/// refined by golden-section search on the parameter.
fn curve_distance(curve: &BoundaryCurve, z: ComplexPoint, dense: &[ComplexPoint]) -> f64 {
    let n = dense.len();
    let (k, _) = dense
        .iter()
        .enumerate()
        .map(|(k, p)| (k, (p - z).norm()))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    let dt = 1.0 / n as f64;
    let f = |t: f64| (curve(t) - z).norm();
    let (mut a, mut b) = ((k as f64 - 1.0) * dt, (k as f64 + 1.0) * dt);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..60 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    f1.min(f2).min((dense[k] - z).norm())
}

/// JSON description of a domain, as read from CLI configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    Disk {
        #[serde(default)]
        center: ComplexPoint,
        radius: f64,
        #[serde(default)]
        label: Option<String>,
    },
    HalfPlane {
        #[serde(default)]
        point: ComplexPoint,
        normal: ComplexPoint,
        #[serde(default)]
        label: Option<String>,
    },
    Strip {
        width: f64,
        #[serde(default)]
        label: Option<String>,
    },
    Annulus {
        #[serde(default)]
        center: ComplexPoint,
        inner: f64,
        outer: f64,
        #[serde(default)]
        label: Option<String>,
    },
    PuncturedDisk {
        #[serde(default)]
        center: ComplexPoint,
        radius: f64,
        #[serde(default)]
        label: Option<String>,
    },
    Punctured {
        base: Box<DomainSpec>,
        puncture: ComplexPoint,
        #[serde(default)]
        label: Option<String>,
    },
    /// Image of the unit disk under a catalog map injective on the closed disk.
    DiskImage {
        map: MapKind,
        #[serde(default)]
        label: Option<String>,
    },
    WholePlane {
        #[serde(default)]
        label: Option<String>,
    },
}

impl DomainSpec {
    pub fn label(&self) -> Option<&str> {
        match self {
            DomainSpec::Disk { label, .. }
            | DomainSpec::HalfPlane { label, .. }
            | DomainSpec::Strip { label, .. }
            | DomainSpec::Annulus { label, .. }
            | DomainSpec::PuncturedDisk { label, .. }
            | DomainSpec::Punctured { label, .. }
            | DomainSpec::DiskImage { label, .. }
            | DomainSpec::WholePlane { label } => label.as_deref(),
        }
    }

    pub fn build(&self) -> Result<Domain> {
        let d = match self {
            DomainSpec::Disk { center, radius, .. } => Domain::disk(*center, *radius)?,
            DomainSpec::HalfPlane { point, normal, .. } => Domain::half_plane(*point, *normal)?,
            DomainSpec::Strip { width, .. } => Domain::strip(*width)?,
            DomainSpec::Annulus {
                center,
                inner,
                outer,
                ..
            } => Domain::annulus(*center, *inner, *outer)?,
            DomainSpec::PuncturedDisk { center, radius, .. } => {
                Domain::punctured_disk(*center, *radius)?
            }
            DomainSpec::Punctured { base, puncture, .. } => {
                Domain::punctured(base.build()?, *puncture)?
            }
            DomainSpec::DiskImage { map, label } => Domain::conformal_image_of_disk(
                map.clone(),
                label.clone().unwrap_or_else(|| format!("image of disk under {map:?}")),
            )?,
            DomainSpec::WholePlane { .. } => Domain::whole_plane(),
        };
        Ok(match self.label() {
            Some(l) => d.with_label(l),
            None => d,
        })
    }
}
