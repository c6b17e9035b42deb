//! Hurwitz radius `r_Y(w)` and Hurwitz density `η_Y(w) = 2 / r_Y(w)`.
//!
//! On simply connected catalog domains the Hurwitz density is the hyperbolic
//! density. Elsewhere `r_Y(w)` is read off the asymptotics of the hyperbolic
//! density of `Y \ {w}` near `w`:
//!
//! ```text
//! λ(ζ) ≈ 1 / (ρ log(r / ρ)),   ρ = |ζ - w|,
//! ```
//!
//! so `s(ρ) = mean_θ 1/(ρ λ) + log ρ` tends to `log r` as `ρ → 0`.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};
use std::sync::Mutex;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::hyperbolic_closed_form;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::liouville::{solve_with, DensityField, SolverConfig};
use crate::mesh::{mesh_with, MeshOptions, PolarPatch};
use crate::ComplexPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HurwitzMethod {
    SimplyConnected,
    Extraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HurwitzValue {
    pub radius: f64,
    pub density: f64,
    pub method: HurwitzMethod,
    /// Uncertainty of `density`, in density units.
    pub error_estimate: f64,
}

impl HurwitzValue {
    fn from_log_radius(log_r: f64, log_err: f64) -> Self {
        let radius = log_r.exp();
        let density = 2.0 / radius;
        HurwitzValue {
            radius,
            density,
            method: HurwitzMethod::Extraction,
            error_estimate: density * log_err.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HurwitzConfig {
    /// Grid nodes across the longer side of the bounding box.
    pub resolution: usize,
    pub solver: SolverConfig,
    pub mesh: MeshOptions,
    /// Extraction radii; `None` selects [`default_radii`].
    pub radii: Option<Vec<f64>>,
    /// Repeat the solve with twice the rings per octave and extrapolate the
    /// second-order patch error away.
    pub richardson: bool,
}

impl Default for HurwitzConfig {
    fn default() -> Self {
        HurwitzConfig {
            resolution: 100,
            solver: SolverConfig::default(),
            mesh: MeshOptions::default(),
            radii: None,
            richardson: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub log_radius: f64,
    pub error_estimate: f64,
    /// `(ρ, s(ρ))`, ascending in `ρ`.
    pub samples: Vec<(f64, f64)>,
}

pub fn hurwitz_density(y: &Domain, w: ComplexPoint) -> Result<HurwitzValue> {
    hurwitz_density_with(y, w, &HurwitzConfig::default())
}

pub fn hurwitz_density_with(y: &Domain, w: ComplexPoint, cfg: &HurwitzConfig) -> Result<HurwitzValue> {
    if !y.contains(w) {
        return Err(Error::PointOutsideDomain(w, y.label().to_string()));
    }
    if y.is_simply_connected() {
        let density = hyperbolic_closed_form(y, w)?.value;
        return Ok(HurwitzValue {
            radius: 2.0 / density,
            density,
            method: HurwitzMethod::SimplyConnected,
            error_estimate: 0.0,
        });
    }
    hurwitz_by_extraction(y, w, cfg)
}

/// Smallest outer patch radius, in grid spacings, used for extraction.
pub const MIN_PATCH_CELLS: f64 = 12.0;

/// Spacing used for `Y \ {w}`: the configured resolution, refined so the
/// polar patch at `w` fits.
pub fn extraction_spacing(y: &Domain, w: ComplexPoint, cfg: &HurwitzConfig) -> Result<f64> {
    let (lo, hi) = y.bounding_box().filter(|_| y.is_bounded()).ok_or_else(|| {
        Error::UnsupportedDomain {
            domain: y.label().to_string(),
            operation: "Hurwitz density of an unbounded multiply connected domain".into(),
        }
    })?;
    let side = (hi.re - lo.re).max(hi.im - lo.im);
    let clearance = y.boundary_distance(w)?;
    let fit = cfg.mesh.patch_radius_fraction * clearance / MIN_PATCH_CELLS;
    Ok((side / cfg.resolution.max(1) as f64).min(fit))
}

/// Extraction-based Hurwitz density, also on simply connected domains.
///
/// With `richardson` set, `log r` is extrapolated from patches with `q` and
/// `2q` rings per octave. The error estimate then adds the fine extraction
/// spread, the size of that correction, and the change seen when the grid
/// spacing is doubled.
pub fn hurwitz_by_extraction(y: &Domain, w: ComplexPoint, cfg: &HurwitzConfig) -> Result<HurwitzValue> {
    if !y.contains(w) {
        return Err(Error::PointOutsideDomain(w, y.label().to_string()));
    }
    let spacing = extraction_spacing(y, w, cfg)?;
    let minus = Domain::punctured(y.clone(), w)?;
    let coarse = extract_once(&minus, w, spacing, cfg, &cfg.mesh)?;
    if !cfg.richardson {
        return Ok(HurwitzValue::from_log_radius(coarse.log_radius, coarse.error_estimate));
    }
    let fine_mesh = MeshOptions {
        rings_per_octave: 2 * cfg.mesh.rings_per_octave,
        ..cfg.mesh
    };
    let fine = extract_once(&minus, w, spacing, cfg, &fine_mesh)?;
    let wide = extract_once(&minus, w, 2.0 * spacing, cfg, &fine_mesh)?;
    let correction = (fine.log_radius - coarse.log_radius) / 3.0;
    let spacing_change = (fine.log_radius - wide.log_radius).abs();
    Ok(HurwitzValue::from_log_radius(
        fine.log_radius + correction,
        fine.error_estimate + correction.abs() + spacing_change,
    ))
}

fn extract_once(
    minus: &Domain,
    w: ComplexPoint,
    spacing: f64,
    cfg: &HurwitzConfig,
    opts: &MeshOptions,
) -> Result<Extraction> {
    let foci = minus.punctures();
    let grid = mesh_with(minus, spacing, &foci, opts)?;
    let field = solve_with(minus, grid, &cfg.solver)?;
    let patch = patch_at(&field, w)?;
    let radii = cfg.radii.clone().unwrap_or_else(|| default_radii(patch));
    puncture_extraction(&field, w, &radii)
}

fn patch_at(field: &DensityField, w: ComplexPoint) -> Result<&PolarPatch> {
    field
        .grid
        .patches
        .iter()
        .find(|p| p.center == w)
        .ok_or_else(|| Error::InvalidArgument(format!("field has no polar patch at {w}")))
}

/// Octave rings `ρ_min 2^j`, `j = 1..=6`; the innermost ring is skipped.
pub fn default_radii(patch: &PolarPatch) -> Vec<f64> {
    let q = patch.rings_per_octave;
    let last = patch.rings() - 1;
    (1..=6)
        .filter_map(|j| last.checked_sub(j * q))
        .map(|k| patch.radii[k])
        .collect()
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (intercept, slope, rms)
}

/// Recovers `log r_Y(w)` from a solved field on `Y \ {w}`.
///
/// Two extrapolations to `ρ = 0` are formed, one linear in
/// `1 / log(ρ_ref / ρ)` and one linear in `ρ`. The second is returned and
/// their spread is the error estimate.
pub fn puncture_extraction(field: &DensityField, w: ComplexPoint, radii: &[f64]) -> Result<Extraction> {
    if radii.len() < 4 {
        return Err(Error::ExtractionUnstable(format!(
            "need at least 4 radii, got {}",
            radii.len()
        )));
    }
    let patch = patch_at(field, w)?;
    let mut rs: Vec<f64> = radii.to_vec();
    rs.sort_by(f64::total_cmp);
    rs.dedup();
    if rs.len() < 4 {
        return Err(Error::ExtractionUnstable("radii must be distinct".into()));
    }
    let mut samples = Vec::with_capacity(rs.len());
    for &rho in &rs {
        if !(rho > 0.0) || rho > patch.outer_radius() * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "extraction radius {rho} is outside the polar patch"
            )));
        }
        let n = patch.n_theta;
        let mut acc = 0.0;
        for j in 0..n {
            let z = w + Complex64::from_polar(rho, 2.0 * PI * j as f64 / n as f64);
            acc += 1.0 / (rho * field.eval(z)?.value);
        }
        samples.push((rho, acc / n as f64 + rho.ln()));
    }
    let s: Vec<f64> = samples.iter().map(|p| p.1).collect();
    let rho_ref = E * rs[rs.len() - 1];
    let x1: Vec<f64> = rs.iter().map(|r| 1.0 / (rho_ref / r).ln()).collect();
    let (e1, _, _) = linear_fit(&x1, &s);
    let (e2, _, rms) = linear_fit(&rs, &s);

    let diffs: Vec<f64> = s.windows(2).map(|p| p[1] - p[0]).collect();
    let trend = diffs.iter().sum::<f64>().signum();
    if let Some(bad) = diffs
        .iter()
        .find(|d| d.signum() == -trend && d.abs() > 3.0 * rms && d.abs() > 1e-12)
    {
        return Err(Error::ExtractionUnstable(format!(
            "s(ρ) reverses by {bad:.3e}, fit residual {rms:.3e}"
        )));
    }
    if !e2.is_finite() {
        return Err(Error::ExtractionUnstable("non-finite extrapolation".into()));
    }
    Ok(Extraction {
        log_radius: e2,
        error_estimate: (e1 - e2).abs(),
        samples,
    })
}

/// Memoized Hurwitz densities keyed by domain, point and resolution.
#[derive(Debug, Default)]
pub struct HurwitzCache {
    entries: Mutex<BTreeMap<String, HurwitzValue>>,
}

impl HurwitzCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, y: &Domain, w: ComplexPoint, cfg: &HurwitzConfig) -> Result<HurwitzValue> {
        let key = format!(
            "{}|{:016x}|{:016x}|{}|{:?}",
            y.fingerprint(),
            w.re.to_bits(),
            w.im.to_bits(),
            cfg.resolution,
            cfg.radii
        );
        if let Some(v) = self.entries.lock().expect("cache lock").get(&key) {
            return Ok(*v);
        }
        let v = hurwitz_density_with(y, w, cfg)?;
        self.entries.lock().expect("cache lock").insert(key, v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::mesh;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn exact_field(y: &Domain, w: Complex64, h: f64) -> DensityField {
        let minus = Domain::punctured(y.clone(), w).unwrap();
        let grid = mesh(&minus, h, &[w]).unwrap();
        DensityField::from_fn(grid, "exact", |z| Ok(hyperbolic_closed_form(&minus, z)?.value)).unwrap()
    }

    #[test]
    fn shortcut_on_disk() {
        let d = Domain::unit_disk();
        let v = hurwitz_density(&d, c(0.0, 0.0)).unwrap();
        assert_eq!((v.density, v.radius), (2.0, 1.0));
        let v = hurwitz_density(&d, c(0.5, 0.0)).unwrap();
        assert!((v.density - 8.0 / 3.0).abs() < 1e-14);
        assert!((v.radius - 0.75).abs() < 1e-14);
        assert_eq!(v.method, HurwitzMethod::SimplyConnected);
    }

    #[test]
    fn exact_centered_field_gives_unit_radius() {
        let f = exact_field(&Domain::unit_disk(), c(0.0, 0.0), 0.02);
        let p = &f.grid.patches[0];
        let ex = puncture_extraction(&f, c(0.0, 0.0), &default_radii(p)).unwrap();
        assert!(ex.log_radius.abs() < 1e-10, "{}", ex.log_radius);
        assert!(ex.samples.iter().all(|s| s.1.abs() < 1e-10));
    }

    #[test]
    fn exact_mobius_field_gives_three_quarters() {
        let f = exact_field(&Domain::unit_disk(), c(0.5, 0.0), 0.02);
        let p = &f.grid.patches[0];
        let ex = puncture_extraction(&f, c(0.5, 0.0), &default_radii(p)).unwrap();
        let r = ex.log_radius.exp();
        assert!((r - 0.75).abs() / 0.75 < 0.01, "{r}");
    }

    #[test]
    fn too_few_radii() {
        let f = exact_field(&Domain::unit_disk(), c(0.0, 0.0), 0.05);
        let p = &f.grid.patches[0];
        let r = default_radii(p);
        assert!(matches!(
            puncture_extraction(&f, c(0.0, 0.0), &r[..2]),
            Err(Error::ExtractionUnstable(_))
        ));
    }

    #[test]
    fn pde_extraction_on_disk() {
        let v = hurwitz_by_extraction(&Domain::unit_disk(), c(0.5, 0.0), &HurwitzConfig::default()).unwrap();
        assert!((v.radius - 0.75).abs() / 0.75 < 0.02, "{v:?}");
        assert!((v.density * v.radius - 2.0).abs() < 1e-15);
    }
}
