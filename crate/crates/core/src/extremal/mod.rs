//! Certified bounds for the Carathéodory-type density
//! `𝒞_Ω^{Y,s}(w) = sup η_Y(h(w)) |h'(w)|` over holomorphic `h: Ω -> Y` taking
//! the value `s` exactly once, at `w`, and an upper bound for the
//! Kobayashi-type density `η_Ω^Y(w) = inf η_Y(s) / |h'(s)|`.
//!
//! Lower bounds come from explicit candidates
//!
//! ```text
//! h = g ∘ (T_a(ζ) exp(Σ θ_k ζ^k / β_k) / (M (1 + margin))) ∘ ψ
//! ```
//!
//! where `ψ` maps Ω into a chart (the unit disk or a centred annulus),
//! `T_a` is the disk automorphism vanishing at `a = ψ(w)`, `M` is the
//! boundary maximum of the numerator and `g: 𝔻 -> Y` is a catalog map with
//! `g(0) = s` and no other `s`-point. The exponential never vanishes, so the
//! zero count of the seed is preserved; every reported value is re-certified
//! by the argument principle on the chart boundary.
//!
//! Upper bounds come from `𝒞 <= η_Ω` and, for simply connected `Y`, from
//! the Schwarz–Pick bound `𝒞 <= λ_Ω`.

pub mod disk_maps;
pub mod nelder_mead;
pub mod winding;

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{has_closed_form, hyperbolic_closed_form};
use crate::domain::{is_subdomain, BoundaryComponent, Domain, DomainKind};
use crate::error::{Error, Result};
use crate::hurwitz::{HurwitzCache, HurwitzConfig};
use crate::liouville::solve_domain;
use crate::maps::{Holomorphic, MapKind};
use crate::output::fmt_f64;
use crate::ComplexPoint;

use disk_maps::{best_disk_map, DiskMap, DiskMapKind};
use nelder_mead::{minimize, NelderMeadOptions};
use winding::{admissibility_check, admissibility_check_sampled, winding_integral};

/// Slack allowed in `lower <= upper`.
pub const ORDER_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalConfig {
    /// Laurent degree `m`: exponents `-m..=m` without 0 on annular charts,
    /// `1..=m` on disk charts.
    pub degree: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Samples per boundary component for the objective and certification.
    pub boundary_samples: usize,
    /// Relative margin in the rescaling, so candidates map strictly into 𝔻.
    pub margin: f64,
    /// Oversampling factor for the boundary maximum of a certified candidate.
    pub refine: usize,
    pub nelder_mead: NelderMeadOptions,
    pub hurwitz: HurwitzConfig,
    /// Grid nodes across the bounding box when a hyperbolic density has to
    /// be solved for.
    pub density_resolution: usize,
    /// Record optimizer traces.
    pub trace: bool,
}

impl Default for ExtremalConfig {
    fn default() -> Self {
        ExtremalConfig {
            degree: 3,
            restarts: 5,
            seed: 0,
            boundary_samples: winding::DEFAULT_BOUNDARY_SAMPLES,
            margin: 1e-6,
            refine: 8,
            nelder_mead: NelderMeadOptions {
                max_evaluations: 3000,
                f_tol: 1e-13,
                x_tol: 1e-9,
            },
            hurwitz: HurwitzConfig::default(),
            density_resolution: 128,
            trace: false,
        }
    }
}

/// Configuration plus a Hurwitz density cache shared by every bound computed
/// through it.
#[derive(Debug, Clone, Default)]
pub struct Context {
    pub config: ExtremalConfig,
    pub cache: Arc<HurwitzCache>,
}

impl Context {
    pub fn new(config: ExtremalConfig) -> Self {
        Context {
            config,
            cache: Arc::new(HurwitzCache::new()),
        }
    }

    /// Hurwitz density and its error estimate.
    pub fn eta(&self, y: &Domain, w: ComplexPoint) -> Result<(f64, f64)> {
        let v = self.cache.get(y, w, &self.config.hurwitz)?;
        Ok((v.density, v.error_estimate))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpperSource {
    HurwitzBound,
    SchwarzPickBound,
    MinOfBoth,
    /// `Ω = ℂ`: the family is empty and the density is 0 by convention.
    EmptyFamily,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFlag {
    /// No admissible map exists; the value is the 0 / +∞ convention.
    EmptyFamily,
    /// The certified lower bound exceeded the estimated upper bound within
    /// their combined error bars and was lowered to it.
    LowerClampedToUpper,
    /// The optimizer found no certifiable candidate.
    NoCertifiedCandidate,
    /// A hyperbolic density came from the finite-difference solver.
    PdeDensity,
    /// `Ω = ℂ` as target: maps `w + t(z - s)` drive the infimum to 0.
    WholePlaneTarget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    None,
    /// The inclusion `Ω ⊂ Y` with `s = w`.
    Inclusion,
    Family,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub kind: WitnessKind,
    pub degree: usize,
    pub exponents: Vec<i32>,
    pub theta: Vec<ComplexPoint>,
    pub post_map: Option<DiskMapKind>,
}

impl Witness {
    fn none() -> Self {
        Witness {
            kind: WitnessKind::None,
            degree: 0,
            exponents: Vec::new(),
            theta: Vec::new(),
            post_map: None,
        }
    }
}

/// One optimizer iteration: best objective so far (density units, with the
/// sampled boundary maximum), the unscaled boundary maximum and the winding
/// number of the rescaled candidate about `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub degree: usize,
    pub restart: usize,
    pub iteration: usize,
    pub objective: f64,
    pub boundary_max: f64,
    pub winding: f64,
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], mut out: W) -> Result<()> {
    writeln!(out, "degree,restart,iteration,objective,boundary_max,winding")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.degree,
            r.restart,
            r.iteration,
            fmt_f64(r.objective),
            fmt_f64(r.boundary_max),
            fmt_f64(r.winding)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBound {
    pub value: f64,
    /// Uncertainty inherited from `η_Y(s)`.
    pub error: f64,
    pub witness: Witness,
    pub flags: Vec<BoundFlag>,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperBound {
    pub value: f64,
    pub error: f64,
    pub source: UpperSource,
    pub pde: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundPair {
    pub lower: f64,
    pub lower_error: f64,
    pub upper: f64,
    pub upper_error: f64,
    pub witness: Witness,
    pub upper_source: UpperSource,
    pub flags: Vec<BoundFlag>,
}

/// Where candidates are built: `ζ = ψ(z)` lands in `domain`, which lies in 𝔻.
#[derive(Debug, Clone)]
pub struct Chart {
    pub to_chart: MapKind,
    pub domain: Domain,
    /// Negative exponents are allowed (the chart has a hole at 0).
    pub holed: bool,
}

impl Chart {
    /// Chart of the domain with its punctures filled in: bounded holomorphic
    /// functions extend across punctures, so candidates built there restrict
    /// to candidates on Ω.
    pub fn for_domain(omega: &Domain) -> Result<Chart> {
        let base = omega.unpunctured();
        if let Some(inv) = base.uniformizer().and_then(|phi| phi.inverse()) {
            return Ok(Chart {
                to_chart: inv,
                domain: Domain::unit_disk(),
                holed: false,
            });
        }
        if let DomainKind::Annulus {
            center,
            inner,
            outer,
        } = base.kind()
        {
            return Ok(Chart {
                to_chart: MapKind::affine(Complex64::new(1.0 / *outer, 0.0), -*center / *outer),
                domain: Domain::annulus(Complex64::new(0.0, 0.0), *inner / *outer, 1.0)?,
                holed: true,
            });
        }
        Err(Error::UnsupportedDomain {
            domain: omega.label().to_string(),
            operation: "candidate families (needs a simply connected or annular filling)".into(),
        })
    }

    pub fn exponents(&self, degree: usize) -> Vec<i32> {
        let mut out = Vec::new();
        for k in 1..=degree as i32 {
            out.push(k);
            if self.holed {
                out.push(-k);
            }
        }
        out
    }
}

/// The parametrized family of candidates for one `(Ω, Y, s, w)`.
#[derive(Debug, Clone)]
pub struct CandidateFamily {
    pub chart: Chart,
    pub w: ComplexPoint,
    pub s: ComplexPoint,
    /// `ψ(w)`.
    pub a: ComplexPoint,
    /// `|ψ'(w)|`.
    pub chart_derivative: f64,
    /// `T_a`, the seed with its single zero at `a`.
    pub seed: MapKind,
    pub post: DiskMap,
    /// `η_Y(s) |g'(0)|`.
    pub post_factor: f64,
    samples: usize,
    margin: f64,
    refine: usize,
}

impl CandidateFamily {
    pub fn new(
        omega: &Domain,
        y: &Domain,
        s: ComplexPoint,
        w: ComplexPoint,
        eta_s: f64,
        cfg: &ExtremalConfig,
    ) -> Result<Self> {
        let chart = Chart::for_domain(omega)?;
        let (a, dpsi) = chart.to_chart.eval(w);
        if !chart.domain.contains(a) || !(dpsi.norm() > 0.0) {
            return Err(Error::InvalidMap(format!("chart does not map {w} inside")));
        }
        let post = best_disk_map(y, s)?.ok_or_else(|| Error::UnsupportedDomain {
            domain: y.label().to_string(),
            operation: "maps from the unit disk into the base domain".into(),
        })?;
        Ok(CandidateFamily {
            seed: MapKind::disk_automorphism(a, 0.0)?,
            post_factor: eta_s * post.derivative,
            chart,
            w,
            s,
            a,
            chart_derivative: dpsi.norm(),
            post,
            samples: cfg.boundary_samples,
            margin: cfg.margin,
            refine: cfg.refine.max(1),
        })
    }

    fn boundary(&self, n: usize) -> Result<Vec<BoundaryComponent>> {
        self.chart.domain.boundary_sample(n)
    }

    fn norms(&self, exps: &[i32]) -> Result<Vec<f64>> {
        let comps = self.boundary(self.samples)?;
        Ok(exps
            .iter()
            .map(|&k| {
                comps
                    .iter()
                    .flat_map(|c| &c.samples)
                    .map(|p| p.point.powi(k).norm())
                    .fold(0.0, f64::max)
            })
            .collect())
    }

    /// `exp(Σ θ_k ζ^k / β_k)` numerator and its log-derivative.
    fn exponent_sum(theta: &[ComplexPoint], exps: &[i32], norms: &[f64], z: ComplexPoint) -> (ComplexPoint, ComplexPoint) {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut dsum = Complex64::new(0.0, 0.0);
        for ((t, &k), b) in theta.iter().zip(exps).zip(norms) {
            sum += t * z.powi(k) / b;
            dsum += t * f64::from(k) * z.powi(k - 1) / b;
        }
        (sum, dsum)
    }

    /// Unscaled numerator `T_a(ζ) exp(Σ θ_k ζ^k / β_k)` and its derivative.
    fn numerator(&self, theta: &[ComplexPoint], exps: &[i32], norms: &[f64], z: ComplexPoint) -> (ComplexPoint, ComplexPoint) {
        let (t, dt) = self.seed.eval(z);
        let (sum, dsum) = Self::exponent_sum(theta, exps, norms, z);
        let e = sum.exp();
        (t * e, (dt + t * dsum) * e)
    }

    /// The rescaled chart-side candidate for parameters `theta` and its
    /// scale `M (1 + margin)`, with `M` the oversampled boundary maximum.
    pub fn pre_stage(&self, exps: &[i32], theta: &[ComplexPoint]) -> Result<PreStage> {
        let norms = self.norms(exps)?;
        let refined = self.boundary(self.samples * self.refine)?;
        let m = refined
            .iter()
            .flat_map(|c| &c.samples)
            .map(|p| self.numerator(theta, exps, &norms, p.point).0.norm())
            .fold(0.0, f64::max);
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::InvalidMap("candidate boundary maximum is not finite".into()));
        }
        Ok(PreStage {
            family: self.clone(),
            exps: exps.to_vec(),
            norms,
            theta: theta.to_vec(),
            scale: m * (1.0 + self.margin),
        })
    }

    /// Certified value of the candidate, or `None` if certification fails.
    pub fn certify(&self, exps: &[i32], theta: &[ComplexPoint]) -> Result<Option<f64>> {
        let pre = self.pre_stage(exps, theta)?;
        let disk = Domain::unit_disk();
        let zero = Complex64::new(0.0, 0.0);
        for n in [self.samples, 2 * self.samples] {
            match admissibility_check_sampled(&pre, &self.chart.domain, &disk, self.a, zero, n) {
                Ok(true) => {}
                Ok(false) | Err(Error::NonIntegerWinding(_)) | Err(Error::BoundaryTooClose { .. }) => {
                    return Ok(None)
                }
                Err(e) => return Err(e),
            }
        }
        let (_, dpre) = pre.value_and_derivative(self.a);
        Ok(Some(self.post_factor * dpre.norm() * self.chart_derivative))
    }

    /// The full candidate `Ω -> Y`.
    pub fn candidate(&self, exps: &[i32], theta: &[ComplexPoint]) -> Result<Candidate> {
        Ok(Candidate {
            pre: self.pre_stage(exps, theta)?,
        })
    }
}

/// Chart-side candidate `ζ -> numerator(ζ) / scale`, mapping into 𝔻.
#[derive(Debug, Clone)]
pub struct PreStage {
    family: CandidateFamily,
    exps: Vec<i32>,
    norms: Vec<f64>,
    theta: Vec<ComplexPoint>,
    pub scale: f64,
}

impl Holomorphic for PreStage {
    fn value_and_derivative(&self, z: ComplexPoint) -> (ComplexPoint, ComplexPoint) {
        let (v, dv) = self.family.numerator(&self.theta, &self.exps, &self.norms, z);
        (v / self.scale, dv / self.scale)
    }
}

/// `h = g ∘ pre ∘ ψ`.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub pre: PreStage,
}

impl Holomorphic for Candidate {
    fn value_and_derivative(&self, z: ComplexPoint) -> (ComplexPoint, ComplexPoint) {
        let fam = &self.pre.family;
        let (zeta, dpsi) = fam.chart.to_chart.eval(z);
        let (p, dp) = self.pre.value_and_derivative(zeta);
        let (v, dg) = fam.post.kind.eval(p);
        (v, dg * dp * dpsi)
    }
}

/// Boundary data for fast objective evaluation at fixed exponents.
struct Samples {
    log_seed: Vec<f64>,
    /// Row-major `[sample][exponent]` normalized monomials.
    basis: Vec<ComplexPoint>,
    at_a: Vec<ComplexPoint>,
    nk: usize,
}

impl Samples {
    fn new(fam: &CandidateFamily, exps: &[i32], norms: &[f64]) -> Result<Self> {
        let comps = fam.boundary(fam.samples)?;
        let pts: Vec<ComplexPoint> = comps.iter().flat_map(|c| &c.samples).map(|p| p.point).collect();
        let mut basis = Vec::with_capacity(pts.len() * exps.len());
        let mut log_seed = Vec::with_capacity(pts.len());
        for z in &pts {
            log_seed.push(fam.seed.value(*z).norm().ln());
            for (&k, b) in exps.iter().zip(norms) {
                basis.push(z.powi(k) / b);
            }
        }
        let at_a = exps.iter().zip(norms).map(|(&k, b)| fam.a.powi(k) / b).collect();
        Ok(Samples {
            log_seed,
            basis,
            at_a,
            nk: exps.len(),
        })
    }

    fn re_sum(theta: &[f64], row: &[ComplexPoint]) -> f64 {
        row.iter()
            .enumerate()
            .map(|(k, b)| theta[2 * k] * b.re - theta[2 * k + 1] * b.im)
            .sum()
    }

    fn log_max(&self, theta: &[f64]) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for (j, ls) in self.log_seed.iter().enumerate() {
            let row = &self.basis[j * self.nk..(j + 1) * self.nk];
            best = best.max(ls + Self::re_sum(theta, row));
        }
        best
    }

    /// `log |numerator'(a)| - log M` up to the constant `log |T_a'(a)|`.
    fn log_objective(&self, theta: &[f64]) -> f64 {
        Self::re_sum(theta, &self.at_a) - self.log_max(theta)
    }
}

fn to_complex(theta: &[f64]) -> Vec<ComplexPoint> {
    theta.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

fn check_arguments(omega: &Domain, y: &Domain, s: ComplexPoint, w: ComplexPoint) -> Result<()> {
    if y.is_whole_plane() {
        return Err(Error::InvalidArgument("the base domain must be a proper subdomain".into()));
    }
    if !omega.contains(w) {
        return Err(Error::PointOutsideDomain(w, omega.label().to_string()));
    }
    if !y.contains(s) {
        return Err(Error::PointOutsideDomain(s, y.label().to_string()));
    }
    Ok(())
}

/// Certified lower bound for `𝒞_Ω^{Y,s}(w)`.
pub fn cara_lower(
    omega: &Domain,
    y: &Domain,
    s: ComplexPoint,
    w: ComplexPoint,
    ctx: &Context,
) -> Result<LowerBound> {
    check_arguments(omega, y, s, w)?;
    if omega.is_whole_plane() {
        return Ok(LowerBound {
            value: 0.0,
            error: 0.0,
            witness: Witness::none(),
            flags: vec![BoundFlag::EmptyFamily],
            trace: Vec::new(),
        });
    }
    let cfg = &ctx.config;
    let (eta_s, eta_err) = ctx.eta(y, s)?;
    let rel_err = eta_err / eta_s;

    let mut best = LowerBound {
        value: 0.0,
        error: 0.0,
        witness: Witness::none(),
        flags: Vec::new(),
        trace: Vec::new(),
    };

    if (s - w).norm() <= 1e-12 && is_subdomain(omega, y) {
        let id = MapKind::identity();
        let certified = !omega.is_bounded() || admissibility_check(&id, omega, y, w, s)?;
        if certified {
            best.value = eta_s;
            best.witness.kind = WitnessKind::Inclusion;
        }
    }

    let family = match CandidateFamily::new(omega, y, s, w, eta_s, cfg) {
        Ok(f) => Some(f),
        Err(Error::UnsupportedDomain { .. }) if best.witness.kind == WitnessKind::Inclusion => None,
        Err(e) => return Err(e),
    };
    if let Some(fam) = family {
        let fam_best = optimize_family(&fam, cfg)?;
        best.trace = fam_best.trace;
        if fam_best.value > best.value {
            best.value = fam_best.value;
            best.witness = fam_best.witness;
        }
    }
    if best.witness.kind == WitnessKind::None {
        best.flags.push(BoundFlag::NoCertifiedCandidate);
    }
    best.error = best.value * rel_err;
    Ok(best)
}

struct FamilyBest {
    value: f64,
    witness: Witness,
    trace: Vec<TraceRow>,
}

/// Degree continuation: degree `m + 1` starts from the optimum of degree `m`,
/// so the certified value never decreases with the degree.
fn optimize_family(fam: &CandidateFamily, cfg: &ExtremalConfig) -> Result<FamilyBest> {
    let mut best = FamilyBest {
        value: 0.0,
        witness: Witness::none(),
        trace: Vec::new(),
    };
    if let Some(v) = fam.certify(&[], &[])? {
        best.value = v;
        best.witness = Witness {
            kind: WitnessKind::Family,
            degree: 0,
            exponents: Vec::new(),
            theta: Vec::new(),
            post_map: Some(fam.post.family),
        };
    }
    let seed_const = fam.post_factor * fam.seed.eval(fam.a).1.norm() * fam.chart_derivative / (1.0 + fam.margin);
    let mut warm: Vec<f64> = Vec::new();
    for m in 1..=cfg.degree {
        let exps = fam.chart.exponents(m);
        let norms = fam.norms(&exps)?;
        let data = Samples::new(fam, &exps, &norms)?;
        let dim = 2 * exps.len();
        let mut start = warm.clone();
        start.resize(dim, 0.0);

        let runs: Vec<(Vec<f64>, f64, Vec<TraceRow>)> = (0..cfg.restarts.max(1))
            .into_par_iter()
            .map(|r| {
                let x0 = if r == 0 {
                    start.clone()
                } else {
                    let mut rng = ChaCha8Rng::seed_from_u64(
                        cfg.seed ^ ((m as u64) << 32) ^ (r as u64).wrapping_mul(0x9e37_79b9),
                    );
                    (0..dim).map(|_| rng.gen_range(-0.5..0.5)).collect()
                };
                let mut trace = Vec::new();
                let res = minimize(
                    |x| -data.log_objective(x),
                    &x0,
                    0.25,
                    &cfg.nelder_mead,
                    |it, x, f| {
                        if cfg.trace {
                            trace.push(trace_row(fam, &exps, &norms, &data, m, r, it, x, -f, seed_const));
                        }
                    },
                );
                (res.x, -res.f, trace)
            })
            .collect();

        let mut top = 0;
        for (i, run) in runs.iter().enumerate() {
            if run.1 > runs[top].1 {
                top = i;
            }
        }
        for run in &runs {
            best.trace.extend_from_slice(&run.2);
        }
        let theta = to_complex(&runs[top].0);
        if let Some(v) = fam.certify(&exps, &theta)? {
            if v > best.value {
                best.value = v;
                best.witness = Witness {
                    kind: WitnessKind::Family,
                    degree: m,
                    exponents: exps.clone(),
                    theta,
                    post_map: Some(fam.post.family),
                };
            }
        }
        warm = runs[top].0.clone();
    }
    Ok(best)
}

#[allow(clippy::too_many_arguments)]
fn trace_row(
    fam: &CandidateFamily,
    exps: &[i32],
    norms: &[f64],
    data: &Samples,
    degree: usize,
    restart: usize,
    iteration: usize,
    x: &[f64],
    log_obj: f64,
    seed_const: f64,
) -> TraceRow {
    let log_max = data.log_max(x);
    let theta = to_complex(x);
    let m = log_max.exp() * (1.0 + fam.margin);
    let pre = |z: ComplexPoint| {
        let (v, dv) = fam.numerator(&theta, exps, norms, z);
        (v / m, dv / m)
    };
    let winding = fam
        .boundary(fam.samples)
        .ok()
        .and_then(|comps| winding_integral(&pre, &comps, Complex64::new(0.0, 0.0)).ok())
        .unwrap_or(f64::NAN);
    TraceRow {
        degree,
        restart,
        iteration,
        objective: seed_const * log_obj.exp(),
        boundary_max: log_max.exp(),
        winding,
    }
}

/// Hyperbolic density and an error estimate: exact for the catalog, else
/// the finite-difference solution at two spacings.
pub fn hyperbolic_density(d: &Domain, z: ComplexPoint, resolution: usize) -> Result<(f64, f64, bool)> {
    if has_closed_form(d) {
        return Ok((hyperbolic_closed_form(d, z)?.value, 0.0, false));
    }
    let (lo, hi) = d.bounding_box().filter(|_| d.is_bounded()).ok_or_else(|| Error::UnsupportedDomain {
        domain: d.label().to_string(),
        operation: "hyperbolic density of an unbounded domain without a uniformizer".into(),
    })?;
    let side = (hi.re - lo.re).max(hi.im - lo.im);
    let h = side / resolution.max(8) as f64;
    let foci = d.punctures();
    let fine = solve_domain(d, h, &foci)?.eval(z)?.value;
    let coarse = solve_domain(d, 2.0 * h, &foci)?.eval(z)?.value;
    Ok((fine, (fine - coarse).abs(), true))
}

/// Upper bound for `𝒞_Ω^{Y,s}(w)`: `η_Ω(w)` for any base, and `λ_Ω(w)` when
/// `Y` is simply connected.
pub fn cara_upper(
    omega: &Domain,
    y: &Domain,
    s: ComplexPoint,
    w: ComplexPoint,
    ctx: &Context,
) -> Result<UpperBound> {
    check_arguments(omega, y, s, w)?;
    if omega.is_whole_plane() {
        return Ok(UpperBound {
            value: 0.0,
            error: 0.0,
            source: UpperSource::EmptyFamily,
            pde: false,
        });
    }
    let schwarz_pick = y.is_simply_connected();
    let eta = ctx.eta(omega, w);
    let lambda = if schwarz_pick {
        Some(hyperbolic_density(omega, w, ctx.config.density_resolution)?)
    } else {
        None
    };
    let (eta, eta_err) = match (eta, &lambda) {
        (Ok(v), _) => (Some(v.0), v.1),
        (Err(_), Some(_)) => (None, 0.0),
        (Err(e), None) => return Err(e),
    };
    let out = match (eta, lambda) {
        (Some(e), Some((l, l_err, pde))) => {
            if (e - l).abs() <= (eta_err + l_err).max(1e-12 * e) {
                // Agreement within the error bars: keep the more accurate one.
                let (value, error) = if l_err < eta_err || (l_err == eta_err && l <= e) {
                    (l, l_err)
                } else {
                    (e, eta_err)
                };
                UpperBound { value, error, source: UpperSource::MinOfBoth, pde }
            } else if l < e {
                UpperBound { value: l, error: l_err, source: UpperSource::SchwarzPickBound, pde }
            } else {
                UpperBound { value: e, error: eta_err, source: UpperSource::HurwitzBound, pde: false }
            }
        }
        (None, Some((l, l_err, pde))) => UpperBound {
            value: l,
            error: l_err,
            source: UpperSource::SchwarzPickBound,
            pde,
        },
        (Some(e), None) => UpperBound {
            value: e,
            error: eta_err,
            source: UpperSource::HurwitzBound,
            pde: false,
        },
        (None, None) => unreachable!("handled above"),
    };
    Ok(out)
}

/// Both bounds, with `lower <= upper + 1e-9` enforced.
pub fn cara_bounds(
    omega: &Domain,
    y: &Domain,
    s: ComplexPoint,
    w: ComplexPoint,
    ctx: &Context,
) -> Result<BoundPair> {
    let lower = cara_lower(omega, y, s, w, ctx)?;
    let upper = cara_upper(omega, y, s, w, ctx)?;
    let mut flags = lower.flags.clone();
    if upper.pde {
        flags.push(BoundFlag::PdeDensity);
    }
    let mut lo = lower.value;
    if lo > upper.value + ORDER_SLACK {
        if lo - upper.value <= lower.error + upper.error + ORDER_SLACK {
            lo = upper.value;
            flags.push(BoundFlag::LowerClampedToUpper);
        } else {
            return Err(Error::InconsistentBounds {
                lower: lo,
                upper: upper.value,
            });
        }
    }
    flags.sort();
    flags.dedup();
    Ok(BoundPair {
        lower: lo,
        lower_error: lower.error,
        upper: upper.value,
        upper_error: upper.error,
        witness: lower.witness,
        upper_source: upper.source,
        flags,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KobayashiBound {
    pub value: f64,
    /// Base point used in `Y`.
    pub s: Option<ComplexPoint>,
    pub map: Option<DiskMapKind>,
    pub flags: Vec<BoundFlag>,
}

/// Upper bound for `η_Ω^Y(w)` from one explicit map `h = g ∘ P: Y -> Ω`
/// with `h(s) = w` and no other `w`-point: `g: 𝔻 -> Ω` from the disk-map
/// catalog, and `P: Y -> 𝔻` a Riemann map (simply connected `Y`) or the best
/// certified candidate of the Carathéodory family of `Y`.
pub fn kobayashi_upper(omega: &Domain, y: &Domain, w: ComplexPoint, ctx: &Context) -> Result<KobayashiBound> {
    if y.is_whole_plane() {
        return Err(Error::InvalidArgument("the base domain must be a proper subdomain".into()));
    }
    if !omega.contains(w) {
        return Err(Error::PointOutsideDomain(w, omega.label().to_string()));
    }
    if omega.is_whole_plane() {
        return Ok(KobayashiBound {
            value: 0.0,
            s: None,
            map: None,
            flags: vec![BoundFlag::WholePlaneTarget],
        });
    }
    let Some(g) = best_disk_map(omega, w)? else {
        return Ok(KobayashiBound {
            value: f64::INFINITY,
            s: None,
            map: None,
            flags: vec![BoundFlag::EmptyFamily],
        });
    };
    if let Some(phi) = y.uniformizer() {
        // η_Y(s) / |(g ∘ φ^{-1})'(s)| = λ_Y(s) |φ'(0)| / |g'(0)| = 2 / |g'(0)|.
        return Ok(KobayashiBound {
            value: 2.0 / g.derivative,
            s: Some(phi.value(Complex64::new(0.0, 0.0))),
            map: Some(g.family),
            flags: Vec::new(),
        });
    }
    let s = deepest_point(y)?;
    let (eta_s, _) = ctx.eta(y, s)?;
    let disk = Domain::unit_disk();
    let p = cara_lower(y, &disk, Complex64::new(0.0, 0.0), s, ctx)?;
    if p.witness.kind == WitnessKind::None || p.value <= 0.0 {
        return Ok(KobayashiBound {
            value: f64::INFINITY,
            s: Some(s),
            map: Some(g.family),
            flags: vec![BoundFlag::EmptyFamily],
        });
    }
    // cara_lower into 𝔻 with s = 0 is 2 |P'(s)|.
    Ok(KobayashiBound {
        value: eta_s / (g.derivative * p.value / 2.0),
        s: Some(s),
        map: Some(g.family),
        flags: Vec::new(),
    })
}

/// A point far from the boundary: the middle circle of an annulus, else the
/// best of a fixed sample.
fn deepest_point(y: &Domain) -> Result<ComplexPoint> {
    if let DomainKind::Annulus {
        center,
        inner,
        outer,
    } = y.unpunctured().kind()
    {
        let z = *center + Complex64::new((*inner * *outer).sqrt(), 0.0);
        if y.contains(z) {
            return Ok(z);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pts = y.sample_points(&mut rng, 256)?;
    let mut best = (pts[0], f64::NEG_INFINITY);
    for z in pts {
        let d = y.boundary_distance(z)?;
        if d > best.1 {
            best = (z, d);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests;
