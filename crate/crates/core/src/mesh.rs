//! Cartesian meshes of bounded domains, with optional log-polar patches
//! around punctures.
//!
//! Lattice nodes sit at integer multiples of the spacing, so a node at the
//! origin exists whenever the origin is inside the domain. Nodes closer than
//! 1.5 spacings to the boundary form the collar. Around each focused puncture
//! a polar patch with radii `rho_min * 2^(k/q)` replaces the Cartesian nodes
//! inside its hole radius; the two grids overlap by 1.5 spacings.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::ComplexPoint;

/// Collar width in units of the spacing.
pub const COLLAR_CELLS: f64 = 1.5;
/// Innermost patch radius is `spacing / PATCH_DEPTH`.
pub const PATCH_DEPTH: f64 = 64.0;
pub const MIN_NODES: usize = 100;
const MAX_NODES: usize = 16_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatus {
    Outside,
    /// Inside, within the collar: carries Dirichlet data.
    Collar,
    Interior,
    /// Inside a polar patch's hole: values come from the patch.
    Hole,
}

impl NodeStatus {
    pub fn in_domain(self) -> bool {
        self != NodeStatus::Outside
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions {
    pub n_theta: usize,
    pub rings_per_octave: usize,
    /// Outer patch radius cap, in spacings.
    pub patch_radius_cells: f64,
    /// Outer patch radius cap as a fraction of the puncture's distance to the
    /// rest of the boundary.
    pub patch_radius_fraction: f64,
}

impl Default for MeshOptions {
    fn default() -> Self {
        MeshOptions {
            n_theta: 64,
            rings_per_octave: 7,
            patch_radius_cells: f64::INFINITY,
            patch_radius_fraction: 0.45,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarPatch {
    pub center: ComplexPoint,
    /// Strictly decreasing; `radii[0]` is the outer ring.
    pub radii: Vec<f64>,
    pub n_theta: usize,
    pub rings_per_octave: usize,
    /// Cartesian nodes closer than this to the center are holes.
    pub hole_radius: f64,
}

impl PolarPatch {
    pub fn rings(&self) -> usize {
        self.radii.len()
    }

    pub fn len(&self) -> usize {
        self.radii.len() * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn log_step(&self) -> f64 {
        LN_2 / self.rings_per_octave as f64
    }

    pub fn angle_step(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn outer_radius(&self) -> f64 {
        self.radii[0]
    }

    pub fn inner_radius(&self) -> f64 {
        *self.radii.last().expect("patch has rings")
    }

    pub fn index(&self, ring: usize, angle: usize) -> usize {
        ring * self.n_theta + angle % self.n_theta
    }

    pub fn node(&self, ring: usize, angle: usize) -> ComplexPoint {
        self.center + Complex64::from_polar(self.radii[ring], angle as f64 * self.angle_step())
    }

    pub fn covers(&self, z: ComplexPoint) -> bool {
        let r = (z - self.center).norm();
        r >= self.inner_radius() * (1.0 - 1e-12) && r <= self.outer_radius() * (1.0 + 1e-12)
    }

    /// Bilinear stencil in (log radius, angle): `(patch index, weight)` pairs.
    pub fn stencil(&self, z: ComplexPoint) -> Option<[(usize, f64); 4]> {
        if !self.covers(z) {
            return None;
        }
        let d = z - self.center;
        let s = (self.outer_radius() / d.norm()).ln() / self.log_step();
        let last = (self.rings() - 1) as f64;
        let s = s.clamp(0.0, last);
        let k0 = (s.floor() as usize).min(self.rings() - 2);
        let fk = s - k0 as f64;
        let mut theta = d.im.atan2(d.re);
        if theta < 0.0 {
            theta += 2.0 * PI;
        }
        let t = theta / self.angle_step();
        let j0 = (t.floor() as usize) % self.n_theta;
        let fj = t - t.floor();
        let j1 = (j0 + 1) % self.n_theta;
        Some([
            (self.index(k0, j0), (1.0 - fk) * (1.0 - fj)),
            (self.index(k0, j1), (1.0 - fk) * fj),
            (self.index(k0 + 1, j0), fk * (1.0 - fj)),
            (self.index(k0 + 1, j1), fk * fj),
        ])
    }
}

#[derive(Debug, Clone)]
pub struct MeshGrid {
    pub spacing: f64,
    /// Lattice index of column 0 / row 0.
    pub i0: i64,
    pub j0: i64,
    pub nx: usize,
    pub ny: usize,
    pub status: Vec<NodeStatus>,
    /// Boundary distance ignoring focused punctures; NaN outside.
    pub distance: Vec<f64>,
    /// Signed curvature of the nearest boundary at collar nodes (positive
    /// when the domain lies on the concave side), zero elsewhere.
    pub curvature: Vec<f64>,
    /// Unit gradient of the boundary distance at collar and interior nodes.
    pub normal: Vec<(f64, f64)>,
    pub patches: Vec<PolarPatch>,
}

impl MeshGrid {
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn point(&self, idx: usize) -> ComplexPoint {
        let (i, j) = self.coords(idx);
        Complex64::new(
            (self.i0 + i as i64) as f64 * self.spacing,
            (self.j0 + j as i64) as f64 * self.spacing,
        )
    }

    pub fn len(&self) -> usize {
        self.status.len()
    }

    pub fn is_empty(&self) -> bool {
        self.status.is_empty()
    }

    /// In-domain lattice nodes.
    pub fn nodes(&self) -> impl Iterator<Item = ComplexPoint> + '_ {
        (0..self.len())
            .filter(|&k| self.status[k].in_domain())
            .map(|k| self.point(k))
    }

    pub fn node_count(&self) -> usize {
        self.status.iter().filter(|s| s.in_domain()).count()
    }

    pub fn count(&self, status: NodeStatus) -> usize {
        self.status.iter().filter(|&&s| s == status).count()
    }

    /// Neighbor index in lattice direction `(di, dj)`, if on the grid.
    pub fn neighbor(&self, idx: usize, di: i64, dj: i64) -> Option<usize> {
        let (i, j) = self.coords(idx);
        let (ni, nj) = (i as i64 + di, j as i64 + dj);
        if ni < 0 || nj < 0 || ni >= self.nx as i64 || nj >= self.ny as i64 {
            return None;
        }
        Some(self.index(ni as usize, nj as usize))
    }

    /// Cell containing `z`: lower-left node index and fractional offsets.
    pub fn cell(&self, z: ComplexPoint) -> Option<(usize, f64, f64)> {
        let x = z.re / self.spacing - self.i0 as f64;
        let y = z.im / self.spacing - self.j0 as f64;
        if !(x >= 0.0 && y >= 0.0) {
            return None;
        }
        let (mut i, mut j) = (x.floor() as usize, y.floor() as usize);
        if i + 1 >= self.nx {
            if i + 1 == self.nx && x == i as f64 && i > 0 {
                i -= 1;
            } else {
                return None;
            }
        }
        if j + 1 >= self.ny {
            if j + 1 == self.ny && y == j as f64 && j > 0 {
                j -= 1;
            } else {
                return None;
            }
        }
        Some((self.index(i, j), x - i as f64, y - j as f64))
    }

    /// Nearest lattice node to `z` (may be outside the domain).
    pub fn nearest(&self, z: ComplexPoint) -> Option<usize> {
        let x = (z.re / self.spacing - self.i0 as f64).round();
        let y = (z.im / self.spacing - self.j0 as f64).round();
        if x < 0.0 || y < 0.0 || x >= self.nx as f64 || y >= self.ny as f64 {
            return None;
        }
        Some(self.index(x as usize, y as usize))
    }

    pub fn patch_for(&self, z: ComplexPoint) -> Option<usize> {
        self.patches.iter().position(|p| p.covers(z))
    }
}

/// Meshes a bounded domain with default patch options.
pub fn mesh(d: &Domain, spacing: f64, foci: &[ComplexPoint]) -> Result<MeshGrid> {
    mesh_with(d, spacing, foci, &MeshOptions::default())
}

pub fn mesh_with(
    d: &Domain,
    spacing: f64,
    foci: &[ComplexPoint],
    opts: &MeshOptions,
) -> Result<MeshGrid> {
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "mesh spacing must be positive, got {spacing}"
        )));
    }
    if opts.n_theta < 8 || opts.rings_per_octave == 0 {
        return Err(Error::InvalidArgument("polar patch too coarse".into()));
    }
    let (lo, hi) = match (d.is_bounded(), d.bounding_box()) {
        (true, Some(b)) => b,
        _ => {
            return Err(Error::UnsupportedDomain {
                domain: d.label().to_string(),
                operation: "meshing (unbounded domains are handled by closed forms)".into(),
            })
        }
    };
    let punctures = d.punctures();
    for f in foci {
        if !punctures.contains(f) {
            return Err(Error::InvalidArgument(format!(
                "focus {f} is not a puncture of `{}`",
                d.label()
            )));
        }
    }
    let i0 = (lo.re / spacing).floor() as i64;
    let j0 = (lo.im / spacing).floor() as i64;
    let i1 = (hi.re / spacing).ceil() as i64;
    let j1 = (hi.im / spacing).ceil() as i64;
    let nx = (i1 - i0 + 1) as usize;
    let ny = (j1 - j0 + 1) as usize;
    if nx.saturating_mul(ny) > MAX_NODES {
        return Err(Error::InvalidArgument(format!(
            "mesh of {nx} x {ny} nodes is too large"
        )));
    }

    let mut patches = Vec::with_capacity(foci.len());
    for &p in foci {
        let rest = d.puncture_clearance(p);
        patches.push(build_patch(p, rest, spacing, opts)?);
    }

    let mut grid = MeshGrid {
        spacing,
        i0,
        j0,
        nx,
        ny,
        status: vec![NodeStatus::Outside; nx * ny],
        distance: vec![f64::NAN; nx * ny],
        curvature: vec![0.0; nx * ny],
        normal: vec![(0.0, 0.0); nx * ny],
        patches,
    };
    for idx in 0..grid.len() {
        let z = grid.point(idx);
        if !d.contains(z) {
            continue;
        }
        let dist = d.boundary_distance_excluding(z, foci)?;
        grid.distance[idx] = dist;
        grid.status[idx] = if grid
            .patches
            .iter()
            .any(|p| (z - p.center).norm() < p.hole_radius)
        {
            NodeStatus::Hole
        } else if dist < COLLAR_CELLS * spacing {
            NodeStatus::Collar
        } else {
            NodeStatus::Interior
        };
    }
    for idx in 0..grid.len() {
        if matches!(grid.status[idx], NodeStatus::Collar | NodeStatus::Interior) {
            let (normal, kappa) =
                distance_geometry(d, grid.point(idx), grid.distance[idx], spacing, foci);
            grid.normal[idx] = normal;
            if grid.status[idx] == NodeStatus::Collar {
                grid.curvature[idx] = kappa;
            }
        }
    }
    let count = grid.node_count();
    if count < MIN_NODES {
        return Err(Error::MeshTooCoarse(format!(
            "only {count} nodes inside `{}` at spacing {spacing}",
            d.label()
        )));
    }
    Ok(grid)
}

/// Unit gradient and curvature of the distance function at `z`, using
/// `Δd = -κ / (1 - κ d)`. Falls back to a diagonal direction and zero
/// curvature where the distance is not smooth.
fn distance_geometry(
    d: &Domain,
    z: ComplexPoint,
    dist: f64,
    spacing: f64,
    foci: &[ComplexPoint],
) -> ((f64, f64), f64) {
    let fallback = ((0.5f64.sqrt(), 0.5f64.sqrt()), 0.0);
    let step = (0.5 * spacing).min(0.5 * dist);
    if !(step > 0.0) {
        return fallback;
    }
    let mut v = [0.0; 4];
    for (slot, dz) in v.iter_mut().zip([
        Complex64::new(step, 0.0),
        Complex64::new(-step, 0.0),
        Complex64::new(0.0, step),
        Complex64::new(0.0, -step),
    ]) {
        match d.boundary_distance_excluding(z + dz, foci) {
            Ok(x) => *slot = x,
            Err(_) => return fallback,
        }
    }
    let gx = (v[0] - v[1]) / (2.0 * step);
    let gy = (v[2] - v[3]) / (2.0 * step);
    let g = gx.hypot(gy);
    let lap = (v.iter().sum::<f64>() - 4.0 * dist) / (step * step);
    let kappa = -lap / (1.0 - dist * lap);
    if !(g > 0.9 && g < 1.1) || !kappa.is_finite() {
        return fallback;
    }
    ((gx / g, gy / g), kappa)
}

fn build_patch(
    center: ComplexPoint,
    rest_distance: f64,
    spacing: f64,
    opts: &MeshOptions,
) -> Result<PolarPatch> {
    let rho_min = spacing / PATCH_DEPTH;
    let cap = (opts.patch_radius_fraction * rest_distance).min(opts.patch_radius_cells * spacing);
    let q = opts.rings_per_octave;
    let octaves = (cap / rho_min).log2();
    let steps = (octaves * q as f64).floor() as usize;
    let outer = rho_min * 2f64.powf(steps as f64 / q as f64);
    if outer < 3.0 * spacing {
        return Err(Error::MeshTooCoarse(format!(
            "puncture at {center} is too close to the boundary for spacing {spacing}"
        )));
    }
    let radii = (0..=steps)
        .map(|k| rho_min * 2f64.powf((steps - k) as f64 / q as f64))
        .collect();
    Ok(PolarPatch {
        center,
        radii,
        n_theta: opts.n_theta,
        rings_per_octave: q,
        hole_radius: 0.5 * outer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn disk_node_count_matches_area() {
        let g = mesh(&Domain::unit_disk(), 0.05, &[]).unwrap();
        let expected = PI / 0.05f64.powi(2);
        let n = g.node_count() as f64;
        assert!((n - expected).abs() / expected < 0.1, "{n} vs {expected}");
        assert!(g.nodes().all(|z| z.norm() < 1.0));
    }

    #[test]
    fn origin_is_a_node() {
        let g = mesh(&Domain::unit_disk(), 0.02, &[]).unwrap();
        let (idx, fx, fy) = g.cell(c(0.0, 0.0)).unwrap();
        assert_eq!((fx, fy), (0.0, 0.0));
        assert_eq!(g.point(idx), c(0.0, 0.0));
    }

    #[test]
    fn coarse_mesh_rejected() {
        assert!(matches!(
            mesh(&Domain::unit_disk(), 10.0, &[]),
            Err(Error::MeshTooCoarse(_))
        ));
    }

    #[test]
    fn unbounded_rejected() {
        assert!(matches!(
            mesh(&Domain::strip(1.0).unwrap(), 0.1, &[]),
            Err(Error::UnsupportedDomain { .. })
        ));
    }

    #[test]
    fn polar_patch_radii() {
        let d = Domain::punctured(Domain::unit_disk(), c(0.0, 0.0)).unwrap();
        let g = mesh(&d, 0.05, &[c(0.0, 0.0)]).unwrap();
        assert_eq!(g.patches.len(), 1);
        let p = &g.patches[0];
        assert!(p.radii.windows(2).all(|w| w[1] < w[0]));
        assert!((p.inner_radius() - 0.05 / 64.0).abs() < 1e-15);
        for k in 0..=6 {
            let r = 0.05 * 2f64.powi(-k);
            assert!(
                p.radii.iter().any(|x| (x - r).abs() < 1e-12 * r),
                "missing radius {r}"
            );
        }
        assert!(g.count(NodeStatus::Hole) > 0);
        assert!(g.nodes().all(|z| d.contains(z)));
    }

    #[test]
    fn focus_must_be_a_puncture() {
        assert!(mesh(&Domain::unit_disk(), 0.05, &[c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn collar_is_near_boundary() {
        let d = Domain::annulus(c(0.0, 0.0), 0.25, 1.0).unwrap();
        let g = mesh(&d, 0.02, &[]).unwrap();
        for idx in 0..g.len() {
            match g.status[idx] {
                NodeStatus::Collar => assert!(g.distance[idx] < 0.03),
                NodeStatus::Interior => assert!(g.distance[idx] >= 0.03),
                _ => {}
            }
            if g.status[idx] == NodeStatus::Collar {
                let z = g.point(idx);
                let expect = if z.norm() < 0.6 { -4.0 } else { 1.0 };
                assert!((g.curvature[idx] - expect).abs() < 1e-3 * expect.abs());
            }
        }
    }

    #[test]
    fn patch_stencil_reproduces_nodes() {
        let d = Domain::punctured(Domain::unit_disk(), c(0.1, 0.0)).unwrap();
        let g = mesh(&d, 0.02, &[c(0.1, 0.0)]).unwrap();
        let p = &g.patches[0];
        let st = p.stencil(p.node(5, 3)).unwrap();
        let (best, w) = st.iter().fold((0, 0.0), |a, &(i, w)| if w > a.1 { (i, w) } else { a });
        assert_eq!(best, p.index(5, 3));
        assert!((w - 1.0).abs() < 1e-9);
    }
}
