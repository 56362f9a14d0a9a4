//! `ncfield`: classify anti-polynomial vector fields, count their
//! strata, and realize prescribed invariants.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numeric failure, 4
//! verification failure after convergence. Codes 3 and 4 put a JSON
//! diagnostic on standard error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;

use ncfield_cli::bifurcation::{self, GridSpec};
use ncfield_cli::io;
use ncfield_cli::svg;
use ncfield_core::heteroclinic::{self, HeteroError, TernaryTree};
use ncfield_core::invariants::{self, ClassifyError};
use ncfield_core::realization::{RealizationProblem, RealizeError, RealizeOptions};
use ncfield_core::vector_field::AntiPolyField;
use ncfield_core::{counting, nc_tree, NcTree, TraceConfig};

#[derive(Parser)]
#[command(name = "ncfield", version, about = "Anti-polynomial vector field classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CountKind {
    #[value(name = "A")]
    A,
    #[value(name = "A1")]
    A1,
    #[value(name = "Ar")]
    Ar,
    #[value(name = "T")]
    T,
    #[value(name = "strata")]
    Strata,
}

#[derive(Subcommand)]
enum Command {
    /// Exact counts: noncrossing trees (A), degree-one-root trees (A1),
    /// rotation classes (Ar), ternary trees (T), generic strata
    Count {
        #[arg(long)]
        kind: CountKind,
        #[arg(long)]
        n: u64,
    },
    /// Emit every noncrossing tree of order n, one JSON object per line
    Enumerate {
        #[arg(long)]
        n: u32,
        /// Refuse to emit more than this many trees
        #[arg(long)]
        cap: Option<u64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Combinatorial and analytic invariants of a generic field
    Invariants {
        poly: PathBuf,
        /// Override the integrator step tolerance
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Equivalence of two fields of the same degree
    Classify {
        poly1: PathBuf,
        poly2: PathBuf,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Polynomial with prescribed (tree, eta), by continuation
    Realize {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        eta: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Seed for randomized seeding retries
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Ternary-tree invariant of a maximal-heteroclinic field
    HeteroExtract {
        poly: PathBuf,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Boundary realization of a ternary invariant
    HeteroRealize {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sample the quadratic bifurcation diagram to CSV (and SVG)
    Bifurcate {
        #[arg(long)]
        out_csv: PathBuf,
        #[arg(long)]
        out_svg: Option<PathBuf>,
        /// Cartesian grid instead of the default polar grid
        #[arg(long)]
        cart: bool,
        #[arg(long, default_value_t = 0.5)]
        r_min: f64,
        #[arg(long, default_value_t = 1.5)]
        r_max: f64,
        #[arg(long, default_value_t = 3)]
        r_steps: usize,
        #[arg(long, default_value_t = 24)]
        theta_steps: usize,
        #[arg(long, default_value_t = -1.5)]
        re_min: f64,
        #[arg(long, default_value_t = 1.5)]
        re_max: f64,
        #[arg(long, default_value_t = -1.5)]
        im_min: f64,
        #[arg(long, default_value_t = 1.5)]
        im_max: f64,
        #[arg(long, default_value_t = 16)]
        re_steps: usize,
        #[arg(long, default_value_t = 16)]
        im_steps: usize,
        /// Angular half-width of the ray detection band
        #[arg(long, default_value_t = bifurcation::DEFAULT_RAY_TOLERANCE)]
        ray_tol: f64,
        /// Skip per-sample stratum tree extraction
        #[arg(long)]
        no_trees: bool,
        /// "re,im" parameter values whose portraits are inset in the SVG
        #[arg(long)]
        portrait_eps: Vec<String>,
    },
    /// Phase portrait SVG of a field (connections highlighted)
    Portrait {
        poly: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

enum Failure {
    Invalid(String),
    Numeric(serde_json::Value),
    Verification(serde_json::Value),
}

impl Failure {
    fn numeric(kind: &str, message: impl ToString) -> Self {
        Failure::Numeric(json!({ "error": kind, "message": message.to_string() }))
    }

    fn verification(kind: &str, message: impl ToString) -> Self {
        Failure::Verification(json!({ "error": kind, "message": message.to_string() }))
    }
}

impl From<RealizeError<f64>> for Failure {
    fn from(e: RealizeError<f64>) -> Self {
        match &e {
            RealizeError::TreeTooSmall { .. }
            | RealizeError::EtaLengthMismatch { .. }
            | RealizeError::EtaNotUpperHalf { .. } => Failure::Invalid(e.to_string()),
            RealizeError::VerificationFailed { .. } => {
                Failure::verification("verification_failed", e)
            }
            RealizeError::SeedNotFound { .. } => Failure::numeric("seed_not_found", e),
            RealizeError::HomotopyStalled { .. } => Failure::numeric("homotopy_stalled", e),
            RealizeError::SingularJacobian { .. } => Failure::numeric("singular_jacobian", e),
            RealizeError::Extract(_) => Failure::numeric("extraction_failed", e),
        }
    }
}

impl From<HeteroError> for Failure {
    fn from(e: HeteroError) -> Self {
        match &e {
            HeteroError::NuLengthMismatch { .. } | HeteroError::NuNotPositive { .. } => {
                Failure::Invalid(e.to_string())
            }
            HeteroError::VerificationFailed { .. } => {
                Failure::verification("verification_failed", e)
            }
            _ => Failure::numeric("hetero_failure", e),
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))
}

fn read_field(path: &Path) -> Result<AntiPolyField<f64>, Failure> {
    let text = read_text(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Invalid(format!("invalid polynomial {}: {e}", path.display())))
}

fn trace_config(f: &AntiPolyField<f64>, tolerance: Option<f64>) -> TraceConfig<f64> {
    let cfg = TraceConfig::for_field(f);
    match tolerance {
        Some(t) => cfg.with_step_tol(t),
        None => cfg,
    }
}

fn emit(output: Option<&Path>, contents: &str) -> Result<(), Failure> {
    match output {
        Some(path) => io::write_atomic(path, contents)
            .map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Count { kind, n } => {
            let value = match kind {
                CountKind::A | CountKind::A1 | CountKind::Ar => {
                    if n == 0 {
                        return Err(Failure::Invalid("counts need n >= 1".into()));
                    }
                    match kind {
                        CountKind::A => counting::count_A(n),
                        CountKind::A1 => counting::count_A1(n),
                        _ => counting::count_Ar(n),
                    }
                }
                CountKind::T => counting::count_ternary(n),
                CountKind::Strata => counting::strata_count(n),
            };
            println!("{value}");
            Ok(())
        }
        Command::Enumerate { n, cap, output } => {
            if n == 0 {
                return Err(Failure::Invalid("enumeration needs n >= 1".into()));
            }
            let trees = match cap {
                Some(cap) => nc_tree::enumerate_capped(n, cap)
                    .map_err(|e| Failure::Invalid(e.to_string()))?,
                None => nc_tree::enumerate(n),
            };
            let mut out = String::new();
            for t in &trees {
                out.push_str(&serde_json::to_string(t).expect("tree serializes"));
                out.push('\n');
            }
            emit(output.as_deref(), &out)
        }
        Command::Invariants { poly, tolerance } => {
            let f = read_field(&poly)?;
            let cfg = trace_config(&f, tolerance);
            let pair = invariants::invariant_pair(&f, &cfg)
                .map_err(|e| Failure::numeric("extraction_failed", e))?;
            println!("{}", serde_json::to_string_pretty(&pair).expect("pair serializes"));
            Ok(())
        }
        Command::Classify { poly1, poly2, tolerance } => {
            let f1 = read_field(&poly1)?;
            let f2 = read_field(&poly2)?;
            let c1 = trace_config(&f1, tolerance);
            let c2 = trace_config(&f2, tolerance);
            let cls = invariants::classify_pair(&f1, &f2, &c1, &c2).map_err(|e| match e {
                ClassifyError::DegreeMismatch { .. } => Failure::Invalid(e.to_string()),
                ClassifyError::Extract(inner) => Failure::numeric("extraction_failed", inner),
            })?;
            println!("{}", serde_json::to_string_pretty(&cls).expect("classification serializes"));
            Ok(())
        }
        Command::Realize { tree, eta, output, seed } => {
            let tree: NcTree = serde_json::from_str(&read_text(&tree)?)
                .map_err(|e| Failure::Invalid(format!("invalid tree: {e}")))?;
            let eta = io::parse_complex_list(&read_text(&eta)?)
                .map_err(|e| Failure::Invalid(format!("invalid eta: {e}")))?;
            let options =
                RealizeOptions { rng_seed: seed.unwrap_or(0), ..RealizeOptions::default() };
            let problem = RealizationProblem::new(tree, eta)
                .map_err(Failure::from)?
                .with_options(options);
            let field = problem.realize().map_err(Failure::from)?;
            let text = serde_json::to_string_pretty(&field).expect("field serializes");
            emit(output.as_deref(), &format!("{text}\n"))
        }
        Command::HeteroExtract { poly, tolerance } => {
            let f = read_field(&poly)?;
            let cfg = trace_config(&f, tolerance);
            let inv = heteroclinic::extract_hetero(&f, &cfg).map_err(Failure::from)?;
            println!("{}", serde_json::to_string_pretty(&inv).expect("invariant serializes"));
            Ok(())
        }
        Command::HeteroRealize { tree, nu, output, seed } => {
            let tree: TernaryTree = serde_json::from_str(&read_text(&tree)?)
                .map_err(|e| Failure::Invalid(format!("invalid ternary tree: {e}")))?;
            let nu = io::parse_real_list(&read_text(&nu)?)
                .map_err(|e| Failure::Invalid(format!("invalid nu: {e}")))?;
            let field = heteroclinic::realize_hetero_seeded(&tree, &nu, seed.unwrap_or(0))
                .map_err(Failure::from)?;
            let text = serde_json::to_string_pretty(&field).expect("field serializes");
            emit(output.as_deref(), &format!("{text}\n"))
        }
        Command::Bifurcate {
            out_csv,
            out_svg,
            cart,
            r_min,
            r_max,
            r_steps,
            theta_steps,
            re_min,
            re_max,
            im_min,
            im_max,
            re_steps,
            im_steps,
            ray_tol,
            no_trees,
            portrait_eps,
        } => {
            let grid = if cart {
                GridSpec::Cartesian { re_min, re_max, im_min, im_max, re_steps, im_steps }
            } else {
                GridSpec::Polar { r_min, r_max, r_steps, theta_steps }
            };
            let samples = bifurcation::sample_grid(&grid, ray_tol, !no_trees);
            io::write_atomic(&out_csv, &bifurcation::diagram_csv(&samples))
                .map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", out_csv.display())))?;
            if let Some(svg_path) = out_svg {
                let mut portraits = Vec::new();
                for raw in &portrait_eps {
                    let eps = parse_eps(raw)?;
                    let f = AntiPolyField::from_coefficients(vec![
                        -eps,
                        Complex64::new(0.0, 0.0),
                        Complex64::new(1.0, 0.0),
                    ])
                    .map_err(|e| Failure::numeric("field_construction", e))?;
                    let cfg = TraceConfig::for_field(&f);
                    let doc = svg::render_portrait(&f, &cfg)
                        .map_err(|e| Failure::numeric("trace_failed", e))?;
                    portraits.push((eps, doc));
                }
                let doc = svg::render_bifurcation_diagram(&samples, &portraits);
                io::write_atomic(&svg_path, &doc).map_err(|e| {
                    Failure::Invalid(format!("cannot write {}: {e}", svg_path.display()))
                })?;
            }
            Ok(())
        }
        Command::Portrait { poly, output, tolerance } => {
            let f = read_field(&poly)?;
            let cfg = trace_config(&f, tolerance);
            let doc =
                svg::render_portrait(&f, &cfg).map_err(|e| Failure::numeric("trace_failed", e))?;
            emit(output.as_deref(), &doc)
        }
    }
}

fn parse_eps(raw: &str) -> Result<Complex64, Failure> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 2 {
        return Err(Failure::Invalid(format!("eps must be \"re,im\": {raw}")));
    }
    let re: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|e| Failure::Invalid(format!("bad eps {raw}: {e}")))?;
    let im: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|e| Failure::Invalid(format!("bad eps {raw}: {e}")))?;
    Ok(Complex64::new(re, im))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(diag)) => {
            eprintln!("{diag}");
            ExitCode::from(3)
        }
        Err(Failure::Verification(diag)) => {
            eprintln!("{diag}");
            ExitCode::from(4)
        }
    }
}
