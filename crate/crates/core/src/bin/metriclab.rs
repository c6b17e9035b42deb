use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use metriclab::extremal::{cara_bounds, Context, ExtremalConfig};
use metriclab::hurwitz::{hurwitz_density_with, HurwitzConfig, HurwitzMethod};
use metriclab::liouville::solve_domain;
use metriclab::output::to_json_string;
use metriclab::pathmetric::{diagonal_density_field, distance, FieldMode, FieldOptions};
use metriclab::verify::{run_and_report, RunConfig};
use metriclab::{ComplexPoint, Domain, DomainSpec, Error, Result};

#[derive(Parser)]
#[command(name = "metriclab", version, about = "Conformal densities on plane domains")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tolerance applied to every verification check.
    #[arg(long, global = true, allow_negative_numbers = true)]
    tol: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Cheap,
    Bounds,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the hyperbolic density on a grid and write it as CSV.
    Density {
        #[arg(long)]
        domain: String,
        #[arg(long, default_value_t = 128)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hurwitz radius and density at a point.
    Hurwitz {
        #[arg(long)]
        domain: String,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        at: ComplexPoint,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certified bounds for the Carathéodory-type density.
    Cara {
        #[arg(long)]
        omega: String,
        #[arg(long)]
        base: String,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        s: ComplexPoint,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        at: ComplexPoint,
        #[arg(long, default_value_t = 3)]
        degree: usize,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        /// Write the optimizer trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Integrated diagonal-density distance between two points.
    Distance {
        #[arg(long)]
        omega: String,
        #[arg(long)]
        base: String,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        from: ComplexPoint,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        to: ComplexPoint,
        #[arg(long, default_value_t = 128)]
        grid: usize,
        #[arg(long, value_enum, default_value_t = Mode::Cheap)]
        mode: Mode,
        /// Where to write the path polyline.
        #[arg(long, default_value = "path.csv")]
        path_csv: PathBuf,
    },
    /// Run the verification suite.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
    },
}

fn parse_point(s: &str) -> std::result::Result<ComplexPoint, String> {
    let (re, im) = s.split_once(',').ok_or_else(|| format!("expected RE,IM, got `{s}`"))?;
    let re: f64 = re.trim().parse().map_err(|e| format!("{e}"))?;
    let im: f64 = im.trim().parse().map_err(|e| format!("{e}"))?;
    Ok(Complex64::new(re, im))
}

/// A domain spec given inline as JSON or as a path to a JSON file.
fn load_domain(arg: &str) -> Result<Domain> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)?
    };
    let spec: DomainSpec = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{arg}: {e}")))?;
    spec.build()
}

#[derive(Serialize)]
struct HurwitzRow {
    radius: f64,
    eta: f64,
    method: HurwitzMethod,
    error_estimate: f64,
}

#[derive(Serialize)]
struct DistanceRow {
    value: f64,
    density_id: String,
    vertices: usize,
}

fn context(cli: &Cli, degree: usize, restarts: usize) -> Context {
    Context::new(ExtremalConfig {
        degree,
        restarts,
        seed: cli.seed.unwrap_or(0),
        ..ExtremalConfig::default()
    })
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Density { domain, grid, out } => {
            let d = load_domain(domain)?;
            let (lo, hi) = d.bounding_box().filter(|_| d.is_bounded()).ok_or_else(|| Error::UnsupportedDomain {
                domain: d.label().to_string(),
                operation: "grid solve of an unbounded domain".into(),
            })?;
            let side = (hi.re - lo.re).max(hi.im - lo.im);
            let field = solve_domain(&d, side / (*grid).max(1) as f64, &d.punctures())?;
            field.write_csv(BufWriter::new(File::create(out)?))?;
        }
        Command::Hurwitz { domain, at, out } => {
            let d = load_domain(domain)?;
            let v = hurwitz_density_with(&d, *at, &HurwitzConfig::default())?;
            let json = to_json_string(&HurwitzRow {
                radius: v.radius,
                eta: v.density,
                method: v.method,
                error_estimate: v.error_estimate,
            })?;
            match out {
                Some(p) => std::fs::write(p, json)?,
                None => print!("{json}"),
            }
        }
        Command::Cara {
            omega,
            base,
            s,
            at,
            degree,
            restarts,
            trace,
        } => {
            let omega = load_domain(omega)?;
            let y = load_domain(base)?;
            let mut ctx = context(cli, *degree, *restarts);
            ctx.config.trace = trace.is_some();
            let pair = cara_bounds(&omega, &y, *s, *at, &ctx)?;
            if let Some(path) = trace {
                let lb = metriclab::extremal::cara_lower(&omega, &y, *s, *at, &ctx)?;
                metriclab::extremal::write_trace_csv(&lb.trace, BufWriter::new(File::create(path)?))?;
            }
            print!("{}", to_json_string(&pair)?);
        }
        Command::Distance {
            omega,
            base,
            from,
            to,
            grid,
            mode,
            path_csv,
        } => {
            let omega = load_domain(omega)?;
            let y = load_domain(base)?;
            let ctx = context(cli, 3, 5);
            let opts = FieldOptions {
                resolution: *grid,
                mode: match mode {
                    Mode::Cheap => FieldMode::Cheap,
                    Mode::Bounds => FieldMode::Bounds,
                },
                ..FieldOptions::default()
            };
            let field = diagonal_density_field(&omega, &y, &opts, &ctx)?;
            let r = distance(&field, *from, *to)?;
            r.write_csv(BufWriter::new(File::create(path_csv)?))?;
            print!(
                "{}",
                to_json_string(&DistanceRow {
                    value: r.value,
                    density_id: r.density_id.clone(),
                    vertices: r.path.len(),
                })?
            );
        }
        Command::Verify { config, report } => {
            let mut cfg = match config {
                Some(p) => RunConfig::from_json(&std::fs::read_to_string(p)?)?,
                None => RunConfig::default(),
            };
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            if let Some(t) = cli.tol {
                cfg.tolerance_override = Some(t);
            }
            let rep = run_and_report(&cfg)?;
            rep.write(report)?;
            for r in &rep.checks {
                eprintln!("{:<32} {:?}  margin {:.3e}  tolerance {:.3e}", r.check_id, r.status, r.margin, r.tolerance);
            }
            return Ok(rep.exit_code as u8);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("metriclab: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("metriclab: {e}");
            ExitCode::from(1)
        }
    }
}
