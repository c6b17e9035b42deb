//! Numerical hyperbolic density on bounded domains: Newton's method for the
//! five-point discretization of `Δu = e^{2u}`, `u = log λ`.
//!
//! Collar nodes carry `u = -log d + log(1 + κ d / 2)`, the half-plane value
//! corrected for boundary curvature κ. Each focused puncture gets a log-polar
//! patch on which the unknown is `U = log(ρ λ)` in the variables
//! `s = log ρ` and `θ`, so the equation reads `U_ss + U_θθ = e^{2U}`. The
//! innermost ring uses `U_s = e^U`, which is what the puncture asymptotic
//! `λ ~ 1/(ρ log(r/ρ))` satisfies. The patch and the Cartesian grid are
//! coupled by bilinear interpolation in both directions.

use std::io::Write;

use crate::classical::{DensitySource, DensityValue};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::mesh::{self, MeshGrid, NodeStatus, PolarPatch};
use crate::output::fmt_f64;
use crate::sparse::{bicgstab, CsrMatrix, Ilu0};
use crate::ComplexPoint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Bound on the scaled residual: equation residuals times `h²` on the
    /// grid and times `Δs²` on polar patches.
    pub tol: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    pub linear_tol: f64,
    pub linear_max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-8,
            max_iterations: 200,
            max_halvings: 30,
            linear_tol: 1e-10,
            linear_max_iterations: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DensityField {
    pub grid: MeshGrid,
    /// `log λ` at Cartesian nodes, NaN outside.
    log_cart: Vec<f64>,
    /// `log(ρ λ)` at patch nodes, ring-major.
    log_patch: Vec<Vec<f64>>,
    pub residual_norm: f64,
    pub iterations: usize,
    /// Newton stalled at least once and Gauss-Seidel sweeps were used.
    pub fallback_used: bool,
    pub source: DensitySource,
    label: String,
}

impl DensityField {
    /// Samples a known density on the nodes of `grid`.
    pub fn from_fn<F>(grid: MeshGrid, label: &str, f: F) -> Result<Self>
    where
        F: Fn(ComplexPoint) -> Result<f64>,
    {
        let mut log_cart = vec![f64::NAN; grid.len()];
        for (idx, slot) in log_cart.iter_mut().enumerate() {
            if grid.status[idx].in_domain() {
                *slot = positive(f(grid.point(idx))?, grid.point(idx))?.ln();
            }
        }
        let mut log_patch = Vec::with_capacity(grid.patches.len());
        for p in &grid.patches {
            let mut vals = vec![0.0; p.len()];
            for k in 0..p.rings() {
                for j in 0..p.n_theta {
                    let z = p.node(k, j);
                    vals[p.index(k, j)] = (p.radii[k] * positive(f(z)?, z)?).ln();
                }
            }
            log_patch.push(vals);
        }
        Ok(DensityField {
            grid,
            log_cart,
            log_patch,
            residual_norm: 0.0,
            iterations: 0,
            fallback_used: false,
            source: DensitySource::ClosedForm,
            label: label.to_string(),
        })
    }

    /// Density at Cartesian node `idx`, if it is inside the domain.
    pub fn node_value(&self, idx: usize) -> Option<f64> {
        let u = self.log_cart[idx];
        (!u.is_nan()).then(|| u.exp())
    }

    /// Density at ring `k`, angle `j` of patch `p`.
    pub fn patch_value(&self, p: usize, k: usize, j: usize) -> f64 {
        let patch = &self.grid.patches[p];
        self.log_patch[p][patch.index(k, j)].exp() / patch.radii[k]
    }

    /// `log(ρ λ)` at ring `k`, angle `j` of patch `p`.
    pub fn patch_log_scaled(&self, p: usize, k: usize, j: usize) -> f64 {
        self.log_patch[p][self.grid.patches[p].index(k, j)]
    }

    /// All stored `(point, λ)` pairs: Cartesian nodes, then patch nodes.
    pub fn samples(&self) -> Vec<(ComplexPoint, f64)> {
        let mut out: Vec<_> = (0..self.grid.len())
            .filter_map(|i| self.node_value(i).map(|v| (self.grid.point(i), v)))
            .collect();
        for (pi, p) in self.grid.patches.iter().enumerate() {
            for k in 0..p.rings() {
                for j in 0..p.n_theta {
                    out.push((p.node(k, j), self.patch_value(pi, k, j)));
                }
            }
        }
        out
    }

    pub fn eval(&self, z: ComplexPoint) -> Result<DensityValue> {
        field_eval(self, z)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "re,im,lambda")?;
        for (z, v) in self.samples() {
            writeln!(w, "{},{},{}", fmt_f64(z.re), fmt_f64(z.im), fmt_f64(v))?;
        }
        Ok(())
    }

    fn outside(&self, z: ComplexPoint) -> Error {
        Error::PointOutsideDomain(z, format!("meshed region of `{}`", self.label))
    }
}

fn positive(v: f64, z: ComplexPoint) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidArgument(format!("density {v} at {z} is not positive")))
    }
}

/// Interpolated density: log-bilinear on the Cartesian grid, bilinear in
/// `(log ρ, θ)` for `log(ρ λ)` on a polar patch. Nodes are reproduced exactly.
pub fn field_eval(f: &DensityField, z: ComplexPoint) -> Result<DensityValue> {
    let g = &f.grid;
    let pde = |v: f64| Ok(DensityValue::new(v, f.source));
    if let Some(idx) = g.nearest(z) {
        if g.point(idx) == z && matches!(g.status[idx], NodeStatus::Interior | NodeStatus::Collar)
        {
            return pde(f.log_cart[idx].exp());
        }
    }
    let cell = g.cell(z);
    for (pi, p) in g.patches.iter().enumerate() {
        let rho = (z - p.center).norm();
        if rho <= p.outer_radius() * (1.0 + 1e-12) {
            let st = p.stencil(z).ok_or_else(|| f.outside(z))?;
            let u: f64 = st.iter().map(|&(i, w)| w * f.log_patch[pi][i]).sum();
            return pde(u.exp() / rho);
        }
    }
    let (idx, fx, fy) = cell.ok_or_else(|| f.outside(z))?;
    let corners = [
        (idx, (1.0 - fx) * (1.0 - fy)),
        (idx + 1, fx * (1.0 - fy)),
        (idx + g.nx, (1.0 - fx) * fy),
        (idx + g.nx + 1, fx * fy),
    ];
    let mut u = 0.0;
    for (c, w) in corners {
        if w == 0.0 {
            continue;
        }
        let v = f.log_cart[c];
        if v.is_nan() {
            return Err(f.outside(z));
        }
        u += w * v;
    }
    pde(u.exp())
}

/// Meshes and solves in one step.
pub fn solve_domain(d: &Domain, spacing: f64, foci: &[ComplexPoint]) -> Result<DensityField> {
    let grid = mesh::mesh(d, spacing, foci)?;
    solve_with(d, grid, &SolverConfig::default())
}

pub fn solve(d: &Domain, grid: MeshGrid, tol: f64) -> Result<DensityField> {
    solve_with(
        d,
        grid,
        &SolverConfig {
            tol,
            ..SolverConfig::default()
        },
    )
}

#[derive(Debug, Clone, Copy)]
enum Nonlinear {
    None,
    /// `e^{2x}`
    Liouville,
    /// `-Σ log(1 - a_k e^{2x}) / h²` over both axes, `a_k = h² n_k²`: the
    /// axis second differences of `-log d` for a straight boundary with unit
    /// normal `n`, so half-planes are solved exactly. Multiplied by `h²`.
    Lattice(f64, f64),
    /// `e^{2x} + c e^x`
    Robin(f64),
}

/// `-log(1 - t)` continued quadratically past `t = 3/4`.
fn neg_log1m(t: f64) -> (f64, f64) {
    const T0: f64 = 0.75;
    if t <= T0 {
        (-(-t).ln_1p(), 1.0 / (1.0 - t))
    } else {
        let (f0, f1, f2) = (-(1.0 - T0).ln(), 1.0 / (1.0 - T0), 1.0 / (1.0 - T0).powi(2));
        let dt = t - T0;
        (f0 + f1 * dt + 0.5 * f2 * dt * dt, f1 + f2 * dt)
    }
}

impl Nonlinear {
    fn value(self, x: f64) -> (f64, f64) {
        match self {
            Nonlinear::None => (0.0, 0.0),
            Nonlinear::Liouville => {
                let e = (2.0 * x).exp();
                (e, 2.0 * e)
            }
            Nonlinear::Lattice(a, b) => {
                let e = (2.0 * x).exp();
                let (fa, da) = neg_log1m(a * e);
                let (fb, db) = neg_log1m(b * e);
                (fa + fb, 2.0 * e * (a * da + b * db))
            }
            Nonlinear::Robin(c) => {
                let e = x.exp();
                (e * e + c * e, 2.0 * e * e + c * e)
            }
        }
    }
}

/// One scaled equation `Σ a x + b - s N(x_i) = 0`.
#[derive(Debug, Clone)]
struct Row {
    terms: Vec<(usize, f64)>,
    constant: f64,
    nonlinear: Nonlinear,
    nl_scale: f64,
    /// Coefficient of the row's own unknown.
    diag: f64,
}

struct System {
    rows: Vec<Row>,
}

impl System {
    fn residual(&self, x: &[f64], out: &mut [f64]) {
        for (i, r) in self.rows.iter().enumerate() {
            let lin: f64 = r.terms.iter().map(|&(j, a)| a * x[j]).sum();
            out[i] = lin + r.constant - r.nl_scale * r.nonlinear.value(x[i]).0;
        }
    }

    fn jacobian(&self, x: &[f64]) -> CsrMatrix {
        let mut t = Vec::with_capacity(self.rows.iter().map(|r| r.terms.len() + 1).sum());
        for (i, r) in self.rows.iter().enumerate() {
            t.extend(r.terms.iter().map(|&(j, a)| (i, j, a)));
            t.push((i, i, -r.nl_scale * r.nonlinear.value(x[i]).1));
        }
        CsrMatrix::from_triplets(self.rows.len(), t)
    }

    /// Nonlinear Gauss-Seidel sweep; each row is monotone in its unknown.
    fn gauss_seidel(&self, x: &mut [f64]) {
        for (i, r) in self.rows.iter().enumerate() {
            let off: f64 = r
                .terms
                .iter()
                .filter(|&&(j, _)| j != i)
                .map(|&(j, a)| a * x[j])
                .sum::<f64>()
                + r.constant;
            let mut xi = x[i];
            for _ in 0..20 {
                let (n, dn) = r.nonlinear.value(xi);
                let g = r.diag * xi + off - r.nl_scale * n;
                let dg = r.diag - r.nl_scale * dn;
                let step = g / dg;
                xi -= step.clamp(-1.0, 1.0);
                if step.abs() < 1e-15 {
                    break;
                }
            }
            x[i] = xi;
        }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Layout {
    cart: Vec<Option<usize>>,
    patch_offset: Vec<usize>,
    n: usize,
}

fn layout(g: &MeshGrid) -> Layout {
    let mut n = 0;
    let cart = g
        .status
        .iter()
        .map(|s| {
            (*s == NodeStatus::Interior).then(|| {
                n += 1;
                n - 1
            })
        })
        .collect();
    let mut patch_offset = Vec::new();
    for p in &g.patches {
        patch_offset.push(n);
        n += p.len();
    }
    Layout {
        cart,
        patch_offset,
        n,
    }
}

fn hole_patch(g: &MeshGrid, z: ComplexPoint) -> Option<usize> {
    g.patches
        .iter()
        .position(|p| (z - p.center).norm() < p.hole_radius)
}

/// Dirichlet value for a collar node.
fn collar_value(g: &MeshGrid, idx: usize) -> f64 {
    let d = g.distance[idx].max(1e-300);
    let correction = (0.5 * g.curvature[idx] * d).clamp(-0.5, 0.5);
    -d.ln() + correction.ln_1p()
}

fn initial_density(g: &MeshGrid, clearance: &[f64], z: ComplexPoint, dist: f64) -> f64 {
    let mut lam = 1.0 / dist;
    for (p, &r) in g.patches.iter().zip(clearance) {
        let rho = (z - p.center).norm();
        if rho < 0.5 * r {
            lam = lam.max(1.0 / (rho * (r / rho).ln()));
        }
    }
    lam
}

fn build_system(g: &MeshGrid, lay: &Layout) -> Result<System> {
    let h = g.spacing;
    let h2 = h * h;
    let mut rows = Vec::with_capacity(lay.n);
    for idx in 0..g.len() {
        let Some(me) = lay.cart[idx] else { continue };
        let (nx, ny) = g.normal[idx];
        let mut terms = vec![(me, -4.0)];
        let mut constant = 0.0;
        for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let nb = g.neighbor(idx, di, dj).expect("interior nodes have neighbors");
            match g.status[nb] {
                NodeStatus::Interior => terms.push((lay.cart[nb].unwrap(), 1.0)),
                NodeStatus::Collar => constant += collar_value(g, nb),
                NodeStatus::Hole => {
                    let z = g.point(nb);
                    let pi = hole_patch(g, z).expect("hole belongs to a patch");
                    let p = &g.patches[pi];
                    let st = p.stencil(z).ok_or_else(|| {
                        Error::MeshTooCoarse("hole neighbor not covered by its patch".into())
                    })?;
                    for (i, w) in st {
                        terms.push((lay.patch_offset[pi] + i, w));
                    }
                    constant -= (z - p.center).norm().ln();
                }
                NodeStatus::Outside => constant += -(0.5 * h).ln(),
            }
        }
        rows.push(Row {
            terms,
            constant,
            nonlinear: Nonlinear::Lattice(h2 * nx * nx, h2 * ny * ny),
            nl_scale: 1.0,
            diag: -4.0,
        });
    }
    for (pi, p) in g.patches.iter().enumerate() {
        rows.extend(patch_rows(g, lay, pi, p)?);
    }
    Ok(System { rows })
}

fn patch_rows(g: &MeshGrid, lay: &Layout, pi: usize, p: &PolarPatch) -> Result<Vec<Row>> {
    let off = lay.patch_offset[pi];
    let ds = p.log_step();
    let dt = p.angle_step();
    let a = (ds / dt).powi(2);
    let last = p.rings() - 1;
    let mut rows = Vec::with_capacity(p.len());
    for k in 0..p.rings() {
        for j in 0..p.n_theta {
            let me = off + p.index(k, j);
            if k == 0 {
                // Outer ring: U equals the interpolated Cartesian value.
                let z = p.node(0, j);
                let (idx, fx, fy) = g.cell(z).ok_or_else(|| {
                    Error::MeshTooCoarse("polar patch leaves the grid".into())
                })?;
                let mut terms = vec![(me, 1.0)];
                let mut constant = 0.0;
                for (c, w) in [
                    (idx, (1.0 - fx) * (1.0 - fy)),
                    (idx + 1, fx * (1.0 - fy)),
                    (idx + g.nx, (1.0 - fx) * fy),
                    (idx + g.nx + 1, fx * fy),
                ] {
                    let shift = (g.point(c) - p.center).norm().ln();
                    match g.status[c] {
                        NodeStatus::Interior => {
                            terms.push((lay.cart[c].unwrap(), -w));
                            constant -= w * shift;
                        }
                        NodeStatus::Collar => constant -= w * (collar_value(g, c) + shift),
                        _ if w == 0.0 => {}
                        _ => {
                            return Err(Error::MeshTooCoarse(
                                "polar patch overlaps the collar or another patch".into(),
                            ))
                        }
                    }
                }
                rows.push(Row {
                    terms,
                    constant,
                    nonlinear: Nonlinear::None,
                    nl_scale: 0.0,
                    diag: 1.0,
                });
                continue;
            }
            let left = off + p.index(k, j + p.n_theta - 1);
            let right = off + p.index(k, j + 1);
            let mut terms = vec![(left, a), (right, a)];
            let (nonlinear, diag) = if k < last {
                terms.push((off + p.index(k - 1, j), 1.0));
                terms.push((off + p.index(k + 1, j), 1.0));
                (Nonlinear::Liouville, -2.0 - 2.0 * a)
            } else {
                terms.push((off + p.index(k - 1, j), 2.0));
                (Nonlinear::Robin(2.0 / ds), -2.0 - 2.0 * a)
            };
            terms.push((me, diag));
            rows.push(Row {
                terms,
                constant: 0.0,
                nonlinear,
                nl_scale: ds * ds,
                diag,
            });
        }
    }
    Ok(rows)
}

pub fn solve_with(d: &Domain, grid: MeshGrid, cfg: &SolverConfig) -> Result<DensityField> {
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "solver tolerance must be positive, got {}",
            cfg.tol
        )));
    }
    if !d.is_bounded() {
        return Err(Error::UnsupportedDomain {
            domain: d.label().to_string(),
            operation: "PDE solve".into(),
        });
    }
    let g = grid;
    let lay = layout(&g);
    let sys = build_system(&g, &lay)?;
    let clearance: Vec<f64> = g
        .patches
        .iter()
        .map(|p| d.puncture_clearance(p.center))
        .collect();

    let mut x = vec![0.0; lay.n];
    for idx in 0..g.len() {
        if let Some(k) = lay.cart[idx] {
            x[k] = initial_density(&g, &clearance, g.point(idx), g.distance[idx]).ln();
        }
    }
    for (pi, p) in g.patches.iter().enumerate() {
        for k in 0..p.rings() {
            for j in 0..p.n_theta {
                let z = p.node(k, j);
                let dist = d.boundary_distance_excluding(z, &[p.center]).unwrap_or(p.radii[k]);
                x[lay.patch_offset[pi] + p.index(k, j)] =
                    (p.radii[k] * initial_density(&g, &clearance, z, dist)).ln();
            }
        }
    }

    let mut res = vec![0.0; lay.n];
    let mut trial = vec![0.0; lay.n];
    let mut trial_res = vec![0.0; lay.n];
    let mut fallback_used = false;
    let mut iterations = 0;
    sys.residual(&x, &mut res);
    let mut scaled = max_abs(&res);
    while scaled > cfg.tol {
        if iterations >= cfg.max_iterations {
            return Err(Error::DidNotConverge {
                iterations,
                residual: scaled,
            });
        }
        iterations += 1;
        let jac = sys.jacobian(&x);
        let ilu = Ilu0::new(&jac);
        let rhs: Vec<f64> = res.iter().map(|r| -r).collect();
        let mut step = vec![0.0; lay.n];
        bicgstab(&jac, &rhs, &mut step, &ilu, cfg.linear_tol, cfg.linear_max_iterations);
        let norm0 = l2(&res);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..=cfg.max_halvings {
            for i in 0..lay.n {
                trial[i] = x[i] + alpha * step[i];
            }
            sys.residual(&trial, &mut trial_res);
            let n1 = l2(&trial_res);
            if n1.is_finite() && n1 <= (1.0 - 1e-4 * alpha) * norm0 {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if accepted {
            std::mem::swap(&mut x, &mut trial);
            std::mem::swap(&mut res, &mut trial_res);
        } else {
            fallback_used = true;
            for _ in 0..50 {
                sys.gauss_seidel(&mut x);
            }
            sys.residual(&x, &mut res);
        }
        scaled = max_abs(&res);
    }

    let mut log_cart = vec![f64::NAN; g.len()];
    for idx in 0..g.len() {
        log_cart[idx] = match g.status[idx] {
            NodeStatus::Interior => x[lay.cart[idx].unwrap()],
            NodeStatus::Collar => collar_value(&g, idx),
            _ => f64::NAN,
        };
    }
    let log_patch: Vec<Vec<f64>> = g
        .patches
        .iter()
        .enumerate()
        .map(|(pi, p)| x[lay.patch_offset[pi]..lay.patch_offset[pi] + p.len()].to_vec())
        .collect();
    for idx in 0..g.len() {
        if g.status[idx] != NodeStatus::Hole {
            continue;
        }
        let z = g.point(idx);
        let pi = hole_patch(&g, z).expect("hole belongs to a patch");
        let p = &g.patches[pi];
        let rho = (z - p.center).norm();
        let u = match p.stencil(z) {
            Some(st) => st.iter().map(|&(i, w)| w * log_patch[pi][i]).sum::<f64>(),
            None => {
                // Inside the innermost ring: use the ring average.
                let k = p.rings() - 1;
                (0..p.n_theta).map(|j| log_patch[pi][p.index(k, j)]).sum::<f64>()
                    / p.n_theta as f64
            }
        };
        log_cart[idx] = u - rho.ln();
    }

    Ok(DensityField {
        grid: g,
        log_cart,
        log_patch,
        residual_norm: scaled,
        iterations,
        fallback_used,
        source: DensitySource::Pde,
        label: d.label().to_string(),
    })
}
