//! Integrated distances `inf_γ ∫_γ δ(z) |dz|` over grid paths.
//!
//! A [`PathField`] holds a density on the lattice nodes of a bounded domain.
//! [`distance`] runs Dijkstra on the 8-neighbour graph with edge weight
//! "mean endpoint density × length", then shortens the polyline greedily
//! with straight segments that lower the integral.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{has_closed_form, hyperbolic_closed_form};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::extremal::{cara_lower, Context};
use crate::liouville::DensityField;
use crate::mesh::{mesh, MeshGrid};
use crate::output::fmt_f64;
use crate::ComplexPoint;

/// Smallest accepted grid resolution (nodes across the bounding box).
pub const MIN_RESOLUTION: usize = 32;
/// Relative slack of the triangle inequality on graph distances.
pub const TRIANGLE_SLACK: f64 = 0.01;
/// Relative slack of the positivity comparison against a reference metric.
pub const POSITIVITY_SLACK: f64 = 0.02;
/// Largest number of path vertices a single shortcut may skip.
const SHORTCUT_WINDOW: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldMode {
    /// Certified lower bound of the diagonal density at every node.
    Bounds,
    /// The inclusion value `η_Y(w)`.
    Cheap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldOptions {
    /// Grid nodes across the longer side of the bounding box.
    pub resolution: usize,
    pub mode: FieldMode,
    /// Sampling stride (in nodes) for densities that need puncture
    /// extraction; the rest are interpolated.
    pub stride: usize,
}

impl Default for FieldOptions {
    fn default() -> Self {
        FieldOptions {
            resolution: 128,
            mode: FieldMode::Cheap,
            stride: 16,
        }
    }
}

/// A density on the lattice of a bounded domain.
#[derive(Debug, Clone)]
pub struct PathField {
    pub domain: Domain,
    pub field: DensityField,
    /// Nodes whose value was extrapolated or interpolated rather than computed.
    pub flagged: Vec<usize>,
    pub label: String,
}

impl PathField {
    pub fn grid(&self) -> &MeshGrid {
        &self.field.grid
    }

    pub fn spacing(&self) -> f64 {
        self.field.grid.spacing
    }

    /// Samples `f` on the lattice of `domain`.
    pub fn from_fn<F>(domain: &Domain, resolution: usize, label: &str, f: F) -> Result<Self>
    where
        F: Fn(ComplexPoint) -> Result<f64> + Sync,
    {
        let grid = lattice(domain, resolution)?;
        let values = node_values(&grid, |z| f(z))?;
        Self::from_values(domain, grid, values, Vec::new(), label)
    }

    /// The hyperbolic density of a catalog domain.
    pub fn hyperbolic(domain: &Domain, resolution: usize) -> Result<Self> {
        if !has_closed_form(domain) {
            return Err(Error::UnsupportedDomain {
                domain: domain.label().to_string(),
                operation: "closed-form hyperbolic density field".into(),
            });
        }
        let label = format!("lambda[{}]", domain.label());
        Self::from_fn(domain, resolution, &label, |z| Ok(hyperbolic_closed_form(domain, z)?.value))
    }

    fn from_values(
        domain: &Domain,
        grid: MeshGrid,
        values: Vec<f64>,
        flagged: Vec<usize>,
        label: &str,
    ) -> Result<Self> {
        let lookup = |z: ComplexPoint| {
            let idx = grid.nearest(z).expect("lattice node");
            Ok(values[idx])
        };
        let field = DensityField::from_fn(grid.clone(), label, lookup)?;
        Ok(PathField {
            domain: domain.clone(),
            field,
            flagged,
            label: label.to_string(),
        })
    }

    /// Density at `z`: interpolated inside the meshed region, else the
    /// nearest in-domain corner of its cell.
    pub fn density_at(&self, z: ComplexPoint) -> Option<f64> {
        if !self.domain.contains(z) {
            return None;
        }
        if let Ok(v) = self.field.eval(z) {
            return Some(v.value);
        }
        let g = self.grid();
        let (idx, _, _) = g.cell(z)?;
        [idx, idx + 1, idx + g.nx, idx + g.nx + 1]
            .into_iter()
            .filter_map(|k| self.field.node_value(k).map(|v| ((g.point(k) - z).norm(), v)))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, v)| v)
    }
}

fn lattice(domain: &Domain, resolution: usize) -> Result<MeshGrid> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::MeshTooCoarse(format!(
            "path fields need at least {MIN_RESOLUTION} nodes across, got {resolution}"
        )));
    }
    let (lo, hi) = domain.bounding_box().filter(|_| domain.is_bounded()).ok_or_else(|| {
        Error::UnsupportedDomain {
            domain: domain.label().to_string(),
            operation: "path distances on unbounded domains".into(),
        }
    })?;
    let side = (hi.re - lo.re).max(hi.im - lo.im);
    mesh(domain, side / resolution as f64, &[])
}

fn node_values<F>(grid: &MeshGrid, f: F) -> Result<Vec<f64>>
where
    F: Fn(ComplexPoint) -> Result<f64> + Sync,
{
    (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if grid.status[k].in_domain() {
                f(grid.point(k))
            } else {
                Ok(f64::NAN)
            }
        })
        .collect()
}

/// Hurwitz density of `y` on the lattice of `omega ⊂ y`. Closed form when `y`
/// is simply connected; otherwise extracted on a strided subset and
/// interpolated in `log(η/λ)` (or `log η` without a closed-form λ).
fn hurwitz_values(
    omega: &Domain,
    y: &Domain,
    grid: &MeshGrid,
    stride: usize,
    ctx: &Context,
) -> Result<(Vec<f64>, Vec<usize>)> {
    if y.is_simply_connected() {
        let v = node_values(grid, |z| Ok(hyperbolic_closed_form(y, z)?.value))?;
        return Ok((v, Vec::new()));
    }
    let base = |z: ComplexPoint| -> f64 {
        if has_closed_form(y) {
            hyperbolic_closed_form(y, z).map(|d| d.value.ln()).unwrap_or(0.0)
        } else {
            0.0
        }
    };
    let stride = stride.max(1);
    let candidates: Vec<usize> = (0..grid.len())
        .filter(|&k| {
            let (i, j) = grid.coords(k);
            i % stride == 0 && j % stride == 0 && grid.status[k].in_domain() && omega.contains(grid.point(k))
        })
        .collect();
    let sampled: Vec<(ComplexPoint, f64)> = candidates
        .par_iter()
        .filter_map(|&k| {
            let z = grid.point(k);
            ctx.eta(y, z).ok().map(|(eta, _)| (z, eta.ln() - base(z)))
        })
        .collect();
    if sampled.is_empty() {
        return Err(Error::ExtractionUnstable(format!(
            "no Hurwitz density could be extracted on `{}` at stride {stride}",
            y.label()
        )));
    }
    let exact: std::collections::BTreeMap<usize, f64> = candidates
        .iter()
        .filter_map(|&k| {
            let z = grid.point(k);
            sampled.iter().find(|(p, _)| *p == z).map(|(_, v)| (k, *v))
        })
        .collect();
    let mut flagged = Vec::new();
    let mut values = vec![f64::NAN; grid.len()];
    for k in 0..grid.len() {
        if !grid.status[k].in_domain() {
            continue;
        }
        let z = grid.point(k);
        let log_ratio = match exact.get(&k) {
            Some(v) => *v,
            None => {
                flagged.push(k);
                idw(&sampled, z)
            }
        };
        values[k] = (base(z) + log_ratio).exp();
    }
    Ok((values, flagged))
}

/// Inverse-distance-squared weighted mean.
fn idw(samples: &[(ComplexPoint, f64)], z: ComplexPoint) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (p, v) in samples {
        let d2 = (p - z).norm_sqr();
        if d2 == 0.0 {
            return *v;
        }
        num += v / d2;
        den += 1.0 / d2;
    }
    num / den
}

/// The diagonal density `w -> 𝒞_Ω^{Y,w}(w)` on a lattice of `omega`:
/// the certified lower bound in `Bounds` mode, the inclusion value `η_Y(w)`
/// in `Cheap` mode. Bounds-mode nodes within two spacings of `∂Ω` take the
/// geometric mean of their computed neighbours (at least the inclusion value)
/// and are flagged.
pub fn diagonal_density_field(omega: &Domain, y: &Domain, opts: &FieldOptions, ctx: &Context) -> Result<PathField> {
    let grid = lattice(omega, opts.resolution)?;
    let (cheap, mut flagged) = hurwitz_values(omega, y, &grid, opts.stride, ctx)?;
    let mode = match opts.mode {
        FieldMode::Cheap => "cheap",
        FieldMode::Bounds => "bounds",
    };
    let label = format!("diagonal[{}|{}|{mode}]", omega.label(), y.label());
    if opts.mode == FieldMode::Cheap {
        return PathField::from_values(omega, grid, cheap, flagged, &label);
    }
    let h = grid.spacing;
    let near: Vec<bool> = (0..grid.len())
        .map(|k| grid.status[k].in_domain() && omega.boundary_distance(grid.point(k)).map_or(true, |d| d < 2.0 * h))
        .collect();
    let computed: Vec<Option<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if !grid.status[k].in_domain() || near[k] {
                return Ok(None);
            }
            let w = grid.point(k);
            let lb = cara_lower(omega, y, w, w, ctx)?;
            Ok(Some(lb.value.max(cheap[k])))
        })
        .collect::<Result<_>>()?;
    let mut values = vec![f64::NAN; grid.len()];
    for k in 0..grid.len() {
        if let Some(v) = computed[k] {
            values[k] = v;
        }
    }
    // Fill near-boundary nodes outward ring by ring.
    let mut pending: Vec<usize> = (0..grid.len()).filter(|&k| near[k]).collect();
    while !pending.is_empty() {
        let mut filled = Vec::new();
        for &k in &pending {
            let logs: Vec<f64> = neighbours(&grid, k)
                .filter_map(|n| values[n].is_finite().then(|| values[n].ln()))
                .collect();
            if !logs.is_empty() {
                let mean = logs.iter().sum::<f64>() / logs.len() as f64;
                filled.push((k, mean.exp().max(cheap[k])));
            }
        }
        if filled.is_empty() {
            for &k in &pending {
                filled.push((k, cheap[k]));
            }
        }
        for &(k, v) in &filled {
            values[k] = v;
            flagged.push(k);
        }
        pending.retain(|k| !values[*k].is_finite());
    }
    flagged.sort_unstable();
    flagged.dedup();
    PathField::from_values(omega, grid, values, flagged, &label)
}

/// Field of `η_Y` on the lattice of `y`.
pub fn hurwitz_field(y: &Domain, resolution: usize, stride: usize, ctx: &Context) -> Result<PathField> {
    let grid = lattice(y, resolution)?;
    let (values, flagged) = hurwitz_values(y, y, &grid, stride, ctx)?;
    PathField::from_values(y, grid, values, flagged, &format!("eta[{}]", y.label()))
}

/// Hurwitz distance of `y` between two points.
pub fn hurwitz_distance(
    y: &Domain,
    w1: ComplexPoint,
    w2: ComplexPoint,
    resolution: usize,
    ctx: &Context,
) -> Result<PathResult> {
    distance(&hurwitz_field(y, resolution, FieldOptions::default().stride, ctx)?, w1, w2)
}

fn neighbours(grid: &MeshGrid, k: usize) -> impl Iterator<Item = usize> + '_ {
    DIRECTIONS.iter().filter_map(move |&(di, dj)| grid.neighbor(k, di, dj))
}

const DIRECTIONS: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub value: f64,
    pub path: Vec<ComplexPoint>,
    pub density_id: String,
}

impl PathResult {
    /// Polyline as CSV with columns `re,im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "re,im")?;
        for z in &self.path {
            writeln!(out, "{},{}", fmt_f64(z.re), fmt_f64(z.im))?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    cost: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn lex_less(a: ComplexPoint, b: ComplexPoint) -> bool {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)) == Ordering::Less
}

/// Integrated distance between two points of the field's domain.
pub fn distance(field: &PathField, w1: ComplexPoint, w2: ComplexPoint) -> Result<PathResult> {
    for w in [w1, w2] {
        if field.density_at(w).is_none() {
            return Err(Error::PointOutsideDomain(w, format!("path field `{}`", field.label)));
        }
    }
    if w1 == w2 {
        return Ok(PathResult {
            value: 0.0,
            path: vec![w1],
            density_id: field.label.clone(),
        });
    }
    // Solve in a canonical direction so the result is exactly symmetric.
    if lex_less(w2, w1) {
        let mut r = distance(field, w2, w1)?;
        r.path.reverse();
        return Ok(r);
    }
    let path = graph_path(field, w1, w2)?;
    let path = shortcut(field, path);
    let value = polyline_integral(field, &path).ok_or_else(|| {
        Error::InvalidArgument("path leaves the field".into())
    })?;
    Ok(PathResult {
        value,
        path,
        density_id: field.label.clone(),
    })
}

fn edge_ok(field: &PathField, a: ComplexPoint, b: ComplexPoint) -> bool {
    field.domain.contains(0.5 * (a + b))
}

fn graph_path(field: &PathField, w1: ComplexPoint, w2: ComplexPoint) -> Result<Vec<ComplexPoint>> {
    let g = field.grid();
    let n = g.len();
    let (src, dst) = (n, n + 1);
    let value = |k: usize| field.field.node_value(k);
    let d1 = field.density_at(w1).expect("checked");
    let d2 = field.density_at(w2).expect("checked");

    let corners = |w: ComplexPoint| -> Vec<usize> {
        let Some((idx, _, _)) = g.cell(w) else {
            return g.nearest(w).into_iter().filter(|&k| value(k).is_some()).collect();
        };
        [idx, idx + 1, idx + g.nx, idx + g.nx + 1]
            .into_iter()
            .filter(|&k| value(k).is_some() && edge_ok(field, w, g.point(k)))
            .collect()
    };
    let c1 = corners(w1);
    let c2 = corners(w2);
    let mut into_dst = vec![None; n];
    for &k in &c2 {
        let cost = 0.5 * (value(k).expect("in domain") + d2) * (g.point(k) - w2).norm();
        into_dst[k] = Some(cost);
    }

    let mut dist = vec![f64::INFINITY; n + 2];
    let mut prev = vec![usize::MAX; n + 2];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(HeapEntry { cost: 0.0, node: src });
    let same_cell = c1.iter().any(|k| c2.contains(k)) && edge_ok(field, w1, w2);

    while let Some(HeapEntry { cost, node }) = heap.pop() {
        if cost > dist[node] {
            continue;
        }
        if node == dst {
            break;
        }
        let mut relax = |to: usize, w: f64, heap: &mut BinaryHeap<HeapEntry>| {
            let c = cost + w;
            if c < dist[to] {
                dist[to] = c;
                prev[to] = node;
                heap.push(HeapEntry { cost: c, node: to });
            }
        };
        if node == src {
            for &k in &c1 {
                let w = 0.5 * (d1 + value(k).expect("in domain")) * (g.point(k) - w1).norm();
                relax(k, w, &mut heap);
            }
            if same_cell {
                relax(dst, 0.5 * (d1 + d2) * (w2 - w1).norm(), &mut heap);
            }
            continue;
        }
        let vz = value(node).expect("in domain");
        let z = g.point(node);
        for &(di, dj) in &DIRECTIONS {
            let Some(m) = g.neighbor(node, di, dj) else { continue };
            let Some(vm) = value(m) else { continue };
            let zm = g.point(m);
            if !edge_ok(field, z, zm) {
                continue;
            }
            relax(m, 0.5 * (vz + vm) * (zm - z).norm(), &mut heap);
        }
        if let Some(w) = into_dst[node] {
            relax(dst, w, &mut heap);
        }
    }
    if !dist[dst].is_finite() {
        return Err(Error::Disconnected);
    }
    let mut path = vec![w2];
    let mut k = prev[dst];
    while k != src {
        path.push(g.point(k));
        k = prev[k];
    }
    path.push(w1);
    path.reverse();
    Ok(path)
}

fn polyline_integral(field: &PathField, path: &[ComplexPoint]) -> Option<f64> {
    let dens: Option<Vec<f64>> = path.iter().map(|&z| field.density_at(z)).collect();
    let dens = dens?;
    Some(
        path.windows(2)
            .zip(dens.windows(2))
            .map(|(p, d)| 0.5 * (d[0] + d[1]) * (p[1] - p[0]).norm())
            .sum(),
    )
}

/// Straight segment from `a` to `b` subdivided at half the grid spacing, with
/// its integral, if it stays inside and on the field.
fn straight(field: &PathField, a: ComplexPoint, b: ComplexPoint) -> Option<(Vec<ComplexPoint>, f64)> {
    let pieces = ((b - a).norm() / (0.5 * field.spacing())).ceil().max(1.0) as usize;
    let pts: Vec<ComplexPoint> = (0..=pieces)
        .map(|t| {
            if t == pieces {
                b
            } else {
                a + (b - a) * (t as f64 / pieces as f64)
            }
        })
        .collect();
    if !pts.windows(2).all(|p| edge_ok(field, p[0], p[1])) {
        return None;
    }
    let v = polyline_integral(field, &pts)?;
    Some((pts, v))
}

/// One greedy pass: from each kept vertex, jump to the farthest later vertex
/// (within a window) whose straight connection has a smaller integral.
fn shortcut(field: &PathField, path: Vec<ComplexPoint>) -> Vec<ComplexPoint> {
    let Some(dens) = path.iter().map(|&z| field.density_at(z)).collect::<Option<Vec<f64>>>() else {
        return path;
    };
    let mut prefix = vec![0.0; path.len()];
    for k in 1..path.len() {
        prefix[k] = prefix[k - 1] + 0.5 * (dens[k - 1] + dens[k]) * (path[k] - path[k - 1]).norm();
    }
    let mut out = vec![path[0]];
    let mut i = 0;
    let last = path.len() - 1;
    while i < last {
        let mut jumped = false;
        for j in ((i + 2)..=(i + SHORTCUT_WINDOW).min(last)).rev() {
            if let Some((pts, v)) = straight(field, path[i], path[j]) {
                if v < prefix[j] - prefix[i] {
                    out.extend_from_slice(&pts[1..]);
                    i = j;
                    jumped = true;
                    break;
                }
            }
        }
        if !jumped {
            out.push(path[i + 1]);
            i += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleRecord {
    pub points: [ComplexPoint; 3],
    /// `d(a,c) - d(a,b) - d(b,c)`, relative to `d(a,c)`.
    pub relative_excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityRecord {
    pub points: [ComplexPoint; 2],
    pub distance: f64,
    pub reference: f64,
    /// `distance / reference - 1 + POSITIVITY_SLACK`; nonnegative passes.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub field: String,
    pub triples: usize,
    pub symmetry_violations: usize,
    /// Largest relative symmetry defect.
    pub max_asymmetry: f64,
    pub triangle_violations: Vec<TriangleRecord>,
    pub max_triangle_excess: f64,
    pub positivity: Vec<PositivityRecord>,
    pub min_positivity_margin: Option<f64>,
}

impl AxiomReport {
    pub fn violations(&self) -> usize {
        self.symmetry_violations
            + self.triangle_violations.len()
            + self.positivity.iter().filter(|p| p.margin < 0.0).count()
    }
}

/// Symmetry, triangle inequality and (with a reference field) positivity
/// against a reference metric, on `n` random triples at least two grid
/// spacings from the boundary.
pub fn metric_axiom_check(field: &PathField, n: usize, reference: Option<&PathField>, seed: u64) -> Result<AxiomReport> {
    let pts = interior_points(field, 3 * n, seed)?;
    let triples: Vec<[ComplexPoint; 3]> = pts.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
    triangle_report(field, &triples, reference)
}

/// Axiom report on given triples.
pub fn triangle_report(
    field: &PathField,
    triples: &[[ComplexPoint; 3]],
    reference: Option<&PathField>,
) -> Result<AxiomReport> {
    let rows: Vec<_> = triples
        .par_iter()
        .map(|t| -> Result<_> {
            let [a, b, c] = *t;
            let ab = distance(field, a, b)?.value;
            let ba = distance(field, b, a)?.value;
            let bc = distance(field, b, c)?.value;
            let ac = distance(field, a, c)?.value;
            let pos = match reference {
                Some(r) if a != b => Some(distance(r, a, b)?.value),
                _ => None,
            };
            Ok((ab, ba, bc, ac, pos))
        })
        .collect::<Result<_>>()?;
    let mut report = AxiomReport {
        field: field.label.clone(),
        triples: triples.len(),
        symmetry_violations: 0,
        max_asymmetry: 0.0,
        triangle_violations: Vec::new(),
        max_triangle_excess: f64::NEG_INFINITY,
        positivity: Vec::new(),
        min_positivity_margin: None,
    };
    for (t, (ab, ba, bc, ac, pos)) in triples.iter().zip(rows) {
        if ab != ba {
            report.symmetry_violations += 1;
        }
        report.max_asymmetry = report.max_asymmetry.max((ab - ba).abs() / ab.max(f64::MIN_POSITIVE));
        let excess = if ac > 0.0 { (ac - ab - bc) / ac } else { -(ab + bc) };
        report.max_triangle_excess = report.max_triangle_excess.max(excess);
        if excess > TRIANGLE_SLACK {
            report.triangle_violations.push(TriangleRecord {
                points: *t,
                relative_excess: excess,
            });
        }
        if let Some(r) = pos {
            let margin = if r > 0.0 { ab / r - 1.0 + POSITIVITY_SLACK } else { f64::NEG_INFINITY };
            report.min_positivity_margin = Some(report.min_positivity_margin.map_or(margin, |m: f64| m.min(margin)));
            report.positivity.push(PositivityRecord {
                points: [t[0], t[1]],
                distance: ab,
                reference: r,
                margin,
            });
        }
    }
    if triples.is_empty() {
        report.max_triangle_excess = 0.0;
    }
    Ok(report)
}

/// Deterministic random points of the field's domain at least two spacings
/// from its boundary.
pub fn interior_points(field: &PathField, n: usize, seed: u64) -> Result<Vec<ComplexPoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = field.spacing();
    let mut out = Vec::with_capacity(n);
    let mut rounds = 0;
    while out.len() < n {
        rounds += 1;
        if rounds > 1000 {
            return Err(Error::InvalidDomain(format!("no interior points in `{}`", field.label)));
        }
        for z in field.domain.sample_points(&mut rng, n)? {
            if out.len() < n && field.domain.boundary_distance(z)? >= 2.0 * h && field.density_at(z).is_some() {
                out.push(z);
            }
        }
    }
    Ok(out)
}

/// `2 artanh(r)`: hyperbolic distance from 0 to `r` in the unit disk with
/// `λ_𝔻(0) = 2`.
pub fn disk_distance_from_origin(r: f64) -> f64 {
    2.0 * r.atanh()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn disk_geodesic_from_origin() {
        let f = PathField::hyperbolic(&Domain::unit_disk(), 128).unwrap();
        let r = distance(&f, c(0.0, 0.0), c(0.5, 0.0)).unwrap();
        let exact = disk_distance_from_origin(0.5);
        assert!((r.value - exact).abs() < 0.02 * exact, "{} vs {exact}", r.value);
        assert_eq!(r.path.first(), Some(&c(0.0, 0.0)));
        assert_eq!(r.path.last(), Some(&c(0.5, 0.0)));
    }

    #[test]
    fn off_lattice_oblique_pair() {
        // d(z1, z2) = 2 artanh |z1 - z2| / |1 - conj(z1) z2|.
        let f = PathField::hyperbolic(&Domain::unit_disk(), 128).unwrap();
        let (a, b) = (c(-0.31, 0.17), c(0.42, -0.29));
        let exact = 2.0 * ((a - b).norm() / (1.0 - a.conj() * b).norm()).atanh();
        let r = distance(&f, a, b).unwrap();
        assert!((r.value - exact).abs() < 0.02 * exact, "{} vs {exact}", r.value);
        assert!(r.value >= exact * (1.0 - 1e-3));
    }

    #[test]
    fn symmetric_and_zero_on_diagonal() {
        let ann = Domain::annulus(c(0.0, 0.0), 0.5, 1.0).unwrap();
        let f = PathField::hyperbolic(&ann, 64).unwrap();
        let (a, b) = (c(0.7, 0.1), c(-0.75, -0.05));
        let ab = distance(&f, a, b).unwrap();
        let ba = distance(&f, b, a).unwrap();
        assert_eq!(ab.value, ba.value);
        assert!(ab.path.iter().all(|z| ann.contains(*z)));
        assert_eq!(distance(&f, a, a).unwrap().value, 0.0);
    }

    #[test]
    fn cheap_mode_values() {
        let ann = Domain::annulus(c(0.0, 0.0), 0.5, 1.0).unwrap();
        let ctx = Context::default();
        let f = diagonal_density_field(&ann, &Domain::unit_disk(), &FieldOptions::default(), &ctx).unwrap();
        let k = f.grid().nearest(c(0.7, 0.0)).unwrap();
        let z = f.grid().point(k);
        let v = f.field.node_value(k).unwrap();
        assert!((v - 2.0 / (1.0 - z.norm_sqr())).abs() < 1e-9, "{v}");
        let v = f.density_at(c(0.7, 0.0)).unwrap();
        assert!((v - 2.0 / 0.51).abs() < 1e-3 * v, "{v}");
    }

    #[test]
    fn bounds_mode_dominates_cheap_mode() {
        let d = Domain::unit_disk();
        let ctx = Context::new(crate::extremal::ExtremalConfig {
            degree: 1,
            restarts: 1,
            ..Default::default()
        });
        let opts = FieldOptions {
            resolution: 32,
            mode: FieldMode::Bounds,
            ..Default::default()
        };
        let b = diagonal_density_field(&d, &d, &opts, &ctx).unwrap();
        let cheap = diagonal_density_field(&d, &d, &FieldOptions { mode: FieldMode::Cheap, ..opts }, &ctx).unwrap();
        assert!((b.density_at(c(0.0, 0.0)).unwrap() - 2.0).abs() < 1e-9);
        for k in 0..b.grid().len() {
            if let (Some(x), Some(y)) = (b.field.node_value(k), cheap.field.node_value(k)) {
                assert!(x >= y, "node {k}: {x} < {y}");
            }
        }
        assert!(!b.flagged.is_empty());
    }

    #[test]
    fn axioms_on_the_disk() {
        let f = PathField::hyperbolic(&Domain::unit_disk(), 64).unwrap();
        let rep = metric_axiom_check(&f, 20, None, 3).unwrap();
        assert_eq!(rep.violations(), 0, "{rep:?}");
        let a = c(0.1, 0.2);
        let rep = triangle_report(&f, &[[a, a, c(-0.3, 0.0)]], None).unwrap();
        assert!(rep.max_triangle_excess.abs() < 1e-15);
    }

    #[test]
    fn path_csv_has_header() {
        let f = PathField::hyperbolic(&Domain::unit_disk(), 32).unwrap();
        let r = distance(&f, c(0.0, 0.0), c(0.3, 0.3)).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("re,im\n"));
        assert_eq!(text.lines().count(), r.path.len() + 1);
    }
}
