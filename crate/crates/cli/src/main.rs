use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{info, warn};
use polyscatter::config::{validate, ExperimentConfig, ValidatedConfig};
use polyscatter::farfield::farfield_from_total;
use polyscatter::forward::BornOrder;
use polyscatter::grid::ComplexField;
use polyscatter::io::{self, FieldMeta};
use polyscatter::pipeline;
use polyscatter::{Dim, Error, Result};

#[derive(Parser)]
#[command(name = "polyscatter", version, about = "Polyharmonic scattering by complex GMIG potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one potential realization and write it as a field file.
    SampleField {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the scattering problem at one wavenumber.
    Forward {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        kappa: f64,
        /// Incident direction angles: polar angle in 2D; polar and azimuth in 3D.
        #[arg(long, num_args = 1..=2, allow_negative_numbers = true)]
        theta: Vec<f64>,
        #[arg(long)]
        tol: Option<f64>,
        /// A positive order or `full`.
        #[arg(long)]
        born_order: Option<BornOrder>,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Use this potential instead of sampling one from the configuration.
        #[arg(long)]
        potential: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Backscattering far fields over the configured band and directions.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        born_order: Option<BornOrder>,
        #[arg(long)]
        potential: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Strength estimates and reconstructions from a sweep dataset.
    Invert {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        sweep: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Check stamps, regenerate artifacts and run the statistical checks.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        dir: PathBuf,
    },
    /// Run the whole experiment and write every artifact.
    Reproduce {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn configure(path: &Path, edit: impl FnOnce(&mut ExperimentConfig)) -> Result<ValidatedConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    edit(&mut cfg);
    let v = validate(&cfg)?;
    for w in &v.warnings {
        warn!("{w}");
    }
    Ok(v)
}

fn potential(v: &ValidatedConfig, file: Option<&Path>) -> Result<ComplexField> {
    match file {
        None => Ok(pipeline::sample_stage(v)?.rho),
        Some(p) => {
            let (field, _) = io::read_field(p)?;
            if field.spec() != &v.grid {
                return Err(Error::Validation(vec![format!(
                    "{}: potential grid differs from the configured grid",
                    p.display()
                )]));
            }
            Ok(field)
        }
    }
}

fn direction(angles: &[f64], d: Dim) -> Result<Vec<f64>> {
    match (d, angles) {
        (Dim::Two, [phi]) => Ok(vec![phi.cos(), phi.sin()]),
        (Dim::Three, [t, p]) => Ok(vec![t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]),
        _ => Err(Error::Validation(vec![format!(
            "--theta needs {} angle(s) in {} dimensions",
            d.get() - 1,
            d.get()
        )])),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SampleField { config, seed, out } => {
            let v = configure(&config, |c| {
                if let Some(s) = seed {
                    c.seed = s;
                }
            })?;
            let r = pipeline::sample_stage(&v)?;
            let meta = FieldMeta::new("potential", &v.grid, &pipeline::stamp(&v))
                .with("dominance", v.potential.dominance())
                .with("m", v.potential.m());
            io::write_field(&out, &r.rho, &meta)?;
            info!("wrote {}", out.display());
        }
        Command::Forward {
            config,
            kappa,
            theta,
            tol,
            born_order,
            max_iter,
            potential: file,
            out,
        } => {
            let v = configure(&config, |c| {
                if let Some(t) = tol {
                    c.solver.tol = t;
                }
                if let Some(b) = born_order {
                    c.solver.born_order = b;
                }
                if let Some(m) = max_iter {
                    c.solver.max_iter = m;
                }
            })?;
            if !(kappa > 0.0 && kappa.is_finite()) {
                return Err(Error::Validation(vec![format!("--kappa = {kappa} must be positive")]));
            }
            let theta = direction(&theta, v.grid.d())?;
            let rho = potential(&v, file.as_deref())?;
            let n = v.potential.n();
            let u = pipeline::forward_stage(&rho, n, kappa, &theta, &v.config.solver)?;
            let rs = polyscatter::greens::root_system(kappa, n)?;
            let back: Vec<f64> = theta.iter().map(|t| -t).collect();
            let ff_back = farfield_from_total(&u, &rho, &back, &rs)?;
            let ff_fwd = farfield_from_total(&u, &rho, &theta, &rs)?;
            let meta = FieldMeta::new("total_field", &v.grid, &pipeline::stamp(&v))
                .with("kappa", kappa)
                .with("theta", &theta)
                .with("born_order", v.config.solver.born_order)
                .with("residual", u.residual)
                .with("iterations", u.iterations)
                .with("farfield_backscatter", [ff_back.re, ff_back.im])
                .with("farfield_forward", [ff_fwd.re, ff_fwd.im]);
            let field = ComplexField::new(v.grid, u.values.values().to_vec())?;
            io::write_field(&out, &field, &meta)?;
            println!(
                "{}",
                serde_json::json!({
                    "residual": u.residual,
                    "iterations": u.iterations,
                    "farfield_backscatter": [ff_back.re, ff_back.im],
                    "out": out,
                })
            );
        }
        Command::Sweep {
            config,
            q,
            born_order,
            potential: file,
            out,
        } => {
            let v = configure(&config, |c| {
                if let Some(q) = q {
                    c.sweep.q = q;
                }
                if let Some(b) = born_order {
                    c.solver.born_order = b;
                }
            })?;
            let rho = potential(&v, file.as_deref())?;
            let ds = pipeline::sweep_stage(&v, &rho, &v.config.solver)?;
            io::write_sweep(&out, &ds, &pipeline::stamp(&v))?;
            info!("wrote {} ({} wavenumbers x {} directions)", out.display(), ds.kappas.len(), ds.directions.len());
        }
        Command::Invert { config, sweep, out_dir } => {
            let v = configure(&config, |_| {})?;
            let (ds, meta) = io::read_sweep(&sweep)?;
            if meta.config_hash != v.hash {
                warn!("sweep was produced by configuration {}, not {}", meta.config_hash, v.hash);
            }
            std::fs::create_dir_all(&out_dir)?;
            let est = pipeline::estimate_stage(&v, &ds)?;
            let rec = pipeline::reconstruct_stage(&v, &est)?;
            let stamp = io::Stamp {
                config_hash: v.hash.clone(),
                seed: ds.seed,
            };
            pipeline::write_inversion(&v, &out_dir, &rec, &stamp).map_err(|e| e.in_stage("invert"))?;
            if rec.coverage.unsampled_cone {
                warn!("largest angular gap {:.3} rad leaves a cone unsampled", rec.coverage.largest_angular_gap);
            }
            info!("wrote {} estimates to {}", est.len(), out_dir.display());
        }
        Command::Verify { config, dir } => {
            let v = configure(&config, |_| {})?;
            let report = pipeline::verify(&v, &dir)?;
            for c in &report.invariants {
                println!("{:<28} {:>12.4e}  (tol {:.1e})  {}", c.name, c.value, c.tolerance, if c.pass { "pass" } else { "FAIL" });
            }
            for f in report.files.iter().filter(|f| !f.pass) {
                println!("stamp mismatch: {}", f.file);
            }
            println!("verify: {}", if report.pass { "pass" } else { "FAIL" });
            if !report.pass {
                return Err(Error::Accuracy("verification failed".into()));
            }
        }
        Command::Reproduce {
            config,
            output_dir,
            q,
            seed,
        } => {
            let v = configure(&config, |c| {
                if let Some(q) = q {
                    c.sweep.q = q;
                }
                if let Some(s) = seed {
                    c.seed = s;
                }
                if let Some(d) = &output_dir {
                    c.output_dir = Some(d.clone());
                }
            })?;
            let dir = v
                .config
                .output_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("out").join(&v.hash[..12]));
            let out = pipeline::reproduce(&v, &dir)?;
            let row = &out.summary.current;
            println!(
                "Q = {}: L2 error a_c {:.4}, a_r {:.4} ({} files in {})",
                row.q,
                row.l2_error_c,
                row.l2_error_r,
                out.files.len(),
                dir.display()
            );
        }
    }
    Ok(())
}

fn init_threads() -> Result<()> {
    let Ok(text) = std::env::var("POLYSCATTER_THREADS") else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Validation(vec![format!("POLYSCATTER_THREADS = {text:?} must be a positive integer")]))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Validation(vec![e.to_string()]))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match init_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
