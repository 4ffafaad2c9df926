//! End-to-end stages: sample -> sweep -> invert -> verify, and the
//! `reproduce` driver that writes every artifact of an experiment.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{validate, ExperimentConfig, StrengthConfig, ValidatedConfig};
use crate::farfield::{backscatter_sweep, SweepDataset};
use crate::forward::{solve_ls, BornOrder, ScatteringOperator, SolveConfig, WaveField};
use crate::gmig::{sample_complex_gmig, PotentialRealization, PotentialSpec, StrengthGrid};
use crate::greens::{green, root_system};
use crate::grid::{fft, ifft, ComplexField, GridSpec, PeriodizedKernel};
use crate::inverse::{
    expectation_check, realization_seeds, reconstruct_strengths, relative_l2_error, strength_fourier_estimate,
    ExpectationReport, ReconstructionResult, StrengthEstimate,
};
use crate::io::{self, FieldMeta, Stamp};
use crate::stats::median;
use crate::{Error, Result};

pub const POTENTIAL_FILE: &str = "potential.psfd";
pub const SWEEP_FILE: &str = "sweep.pssw";
pub const ESTIMATES_FILE: &str = "estimates.csv";
pub const A_C_FILE: &str = "a_c.psfd";
pub const A_R_FILE: &str = "a_r.psfd";
pub const SLICE_FILE: &str = "reconstruction_slice.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TIMINGS_FILE: &str = "timings.json";
pub const ADVISORY_FILE: &str = "advisory.json";
pub const VERIFY_FILE: &str = "verify_report.json";
pub const INVARIANTS_FILE: &str = "verify_invariants.csv";

/// Load and validate a configuration file.
pub fn load_config(path: &Path) -> Result<ValidatedConfig> {
    let cfg = ExperimentConfig::load(path)?;
    validate(&cfg)
}

pub fn stamp(v: &ValidatedConfig) -> Stamp {
    Stamp {
        config_hash: v.hash.clone(),
        seed: v.config.seed,
    }
}

pub fn sample_stage(v: &ValidatedConfig) -> Result<PotentialRealization> {
    sample_complex_gmig(&v.potential, &v.grid, v.config.seed).map_err(|e| e.in_stage("sample"))
}

pub fn sweep_stage(v: &ValidatedConfig, rho: &ComplexField, solver: &SolveConfig) -> Result<SweepDataset> {
    backscatter_sweep(rho, v.potential.n(), &v.directions, &v.band, solver, v.config.seed).map_err(|e| e.in_stage("sweep"))
}

/// Estimates for every configured direction and shift at band start `Q`.
pub fn estimate_stage(v: &ValidatedConfig, ds: &SweepDataset) -> Result<Vec<StrengthEstimate>> {
    let mut out = Vec::with_capacity(v.directions.len() * v.taus.len());
    for x in &v.directions {
        for &tau in &v.taus {
            out.push(strength_fourier_estimate(ds, x, tau, v.m, v.band.q).map_err(|e| e.in_stage("invert"))?);
        }
    }
    Ok(out)
}

pub fn reconstruct_stage(v: &ValidatedConfig, estimates: &[StrengthEstimate]) -> Result<ReconstructionResult> {
    reconstruct_strengths(estimates, &v.reconstruction_grid).map_err(|e| e.in_stage("invert"))
}

/// Forward solve at one wavenumber for an incident direction.
pub fn forward_stage(rho: &ComplexField, n: usize, kappa: f64, theta: &[f64], solver: &SolveConfig) -> Result<WaveField> {
    let rs = root_system(kappa, n).map_err(|e| e.in_stage("forward"))?;
    let op = ScatteringOperator::new(rho, &rs).map_err(|e| e.in_stage("forward"))?;
    solve_ls(&op, theta, solver).map_err(|e| e.in_stage("forward"))
}

fn strength_on(cfg: &StrengthConfig, grid: GridSpec) -> Result<StrengthGrid> {
    match &cfg.file {
        None => StrengthGrid::from_bumps(grid, &cfg.bumps),
        Some(path) => {
            let (field, _) = io::read_field(path)?;
            let src = *field.spec();
            let factor = src.n_points() / grid.n_points();
            if src.half_width() != grid.half_width() || factor * grid.n_points() != src.n_points() {
                return Err(Error::Domain("reconstruction grid must subsample the strength file grid".into()));
            }
            let values = (0..grid.len())
                .map(|i| {
                    let idx = grid.multi_index(i);
                    let j: Vec<usize> = idx[..grid.dim()].iter().map(|k| k * factor).collect();
                    field.values()[src.flat_index(&j)].re
                })
                .collect();
            StrengthGrid::new(grid, values)
        }
    }
}

/// The potential law evaluated on another grid over the same box.
pub fn spec_on(v: &ValidatedConfig, grid: GridSpec) -> Result<PotentialSpec> {
    let p = &v.config.potential;
    PotentialSpec::new(
        v.potential.n(),
        strength_on(&p.a1, grid)?,
        p.m1,
        strength_on(&p.a2, grid)?,
        p.m2,
    )
}

/// Per-`Q` accuracy row of the summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub config_hash: String,
    pub q: f64,
    pub n_kappa: usize,
    /// Median over nodes of `|ĉ - â^c(ξ)| / |â^c(0)|`.
    pub median_estimate_error_c: f64,
    pub median_estimate_error_r: f64,
    /// Relative L² errors of the reconstructions against the true strengths.
    pub l2_error_c: f64,
    pub l2_error_r: f64,
    /// Same, against the reconstruction from exact Fourier data at the same
    /// nodes (isolates the estimation error from band limitation).
    pub l2_error_vs_exact_data_c: f64,
    pub l2_error_vs_exact_data_r: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub seed: u64,
    pub d: usize,
    pub n: usize,
    pub m: f64,
    pub dominance: crate::gmig::Dominance,
    pub born_order: BornOrder,
    pub n_kappa: usize,
    pub kappa_range: [f64; 2],
    pub n_directions: usize,
    pub n_estimates: usize,
    pub coverage: crate::inverse::CoverageReport,
    pub imag_residue_c: f64,
    pub imag_residue_r: f64,
    pub current: ErrorRow,
    pub error_vs_q: Vec<ErrorRow>,
    pub warnings: Vec<String>,
}

/// Error metrics of a reconstruction against the configured truth.
pub fn error_row(v: &ValidatedConfig, rec: &ReconstructionResult) -> Result<ErrorRow> {
    let truth = spec_on(v, v.reconstruction_grid)?;
    let (tc, tr) = truth.dominant_strengths();
    let c0 = v.potential.covariance_strength_hat(&vec![0.0; v.grid.dim()]).norm();
    let r0 = v.potential.relation_strength_hat(&vec![0.0; v.grid.dim()]).norm().max(c0 * 1e-300);
    let exact: Vec<StrengthEstimate> = rec
        .estimates
        .iter()
        .map(|e| StrengthEstimate {
            c_hat: v.potential.covariance_strength_hat(&e.xi),
            r_hat: v.potential.relation_strength_hat(&e.xi),
            ..e.clone()
        })
        .collect();
    let ec: Vec<f64> = rec.estimates.iter().zip(&exact).map(|(a, b)| (a.c_hat - b.c_hat).norm() / c0).collect();
    let er: Vec<f64> = rec.estimates.iter().zip(&exact).map(|(a, b)| (a.r_hat - b.r_hat).norm() / r0).collect();
    let bandlimited = reconstruct_strengths(&exact, &v.reconstruction_grid)?;
    Ok(ErrorRow {
        config_hash: v.hash.clone(),
        q: v.band.q,
        n_kappa: rec.estimates.first().map(|e| e.n_kappa).unwrap_or(0),
        median_estimate_error_c: median(&ec).unwrap_or(f64::NAN),
        median_estimate_error_r: median(&er).unwrap_or(f64::NAN),
        l2_error_c: relative_l2_error(&rec.a_c, &tc),
        l2_error_r: relative_l2_error(&rec.a_r, &tr),
        l2_error_vs_exact_data_c: relative_l2_error(&rec.a_c, &bandlimited.a_c),
        l2_error_vs_exact_data_r: relative_l2_error(&rec.a_r, &bandlimited.a_r),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Timings {
    config_hash: String,
    seed: u64,
    seconds: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Advisory {
    config_hash: String,
    seed: u64,
    warnings: Vec<String>,
    sweep_non_convergence: bool,
    unsampled_cone: bool,
    largest_angular_gap: f64,
    max_frequency: f64,
}

/// Paths written by [`reproduce`].
#[derive(Clone, Debug)]
pub struct ReproduceOutput {
    pub dir: PathBuf,
    pub summary: Summary,
    pub files: Vec<PathBuf>,
}

/// Run sample, sweep and invert, writing every artifact into `dir`.
/// A `summary.json` already in `dir` contributes its error-vs-Q rows for
/// other values of `Q`.
pub fn reproduce(v: &ValidatedConfig, dir: &Path) -> Result<ReproduceOutput> {
    std::fs::create_dir_all(dir)?;
    let st = stamp(v);
    let mut seconds = BTreeMap::new();
    let mut files = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, seconds: &mut BTreeMap<String, f64>| {
        seconds.insert(name.to_string(), clock.elapsed().as_secs_f64());
        clock = Instant::now();
    };

    let realization = sample_stage(v)?;
    let path = dir.join(POTENTIAL_FILE);
    io::write_field(&path, &realization.rho, &FieldMeta::new("potential", &v.grid, &st))
        .map_err(|e| e.in_stage("sample"))?;
    files.push(path);
    lap("sample", &mut seconds);

    let ds = sweep_stage(v, &realization.rho, &v.config.solver)?;
    let path = dir.join(SWEEP_FILE);
    io::write_sweep(&path, &ds, &st).map_err(|e| e.in_stage("sweep"))?;
    files.push(path);
    lap("sweep", &mut seconds);

    let estimates = estimate_stage(v, &ds)?;
    let rec = reconstruct_stage(v, &estimates)?;
    let row = error_row(v, &rec).map_err(|e| e.in_stage("invert"))?;
    let written = write_inversion(v, dir, &rec, &st).map_err(|e| e.in_stage("invert"))?;
    files.extend(written);
    lap("invert", &mut seconds);

    let mut rows: Vec<ErrorRow> = match io::read_json::<Summary>(&dir.join(SUMMARY_FILE)) {
        Ok(prev) => prev.error_vs_q.into_iter().filter(|r| r.q != row.q).collect(),
        Err(_) => Vec::new(),
    };
    rows.push(row.clone());
    rows.sort_by(|a, b| a.q.total_cmp(&b.q));
    let summary = Summary {
        config_hash: v.hash.clone(),
        seed: v.config.seed,
        d: v.grid.dim(),
        n: v.potential.n(),
        m: v.m,
        dominance: v.potential.dominance(),
        born_order: ds.born_order,
        n_kappa: ds.kappas.len(),
        kappa_range: [v.band.q, v.band.upper()],
        n_directions: v.directions.len(),
        n_estimates: estimates.len(),
        coverage: rec.coverage.clone(),
        imag_residue_c: rec.imag_residue_c,
        imag_residue_r: rec.imag_residue_r,
        current: row,
        error_vs_q: rows,
        warnings: v.warnings.clone(),
    };
    let path = dir.join(SUMMARY_FILE);
    io::write_json(&path, &summary)?;
    files.push(path);

    let mut warnings = v.warnings.clone();
    if rec.coverage.unsampled_cone {
        warnings.push(format!(
            "directions leave an angular gap of {:.3} rad unsampled",
            rec.coverage.largest_angular_gap
        ));
    }
    let advisory = Advisory {
        config_hash: v.hash.clone(),
        seed: v.config.seed,
        warnings,
        sweep_non_convergence: false,
        unsampled_cone: rec.coverage.unsampled_cone,
        largest_angular_gap: rec.coverage.largest_angular_gap,
        max_frequency: rec.coverage.max_frequency,
    };
    let path = dir.join(ADVISORY_FILE);
    io::write_json(&path, &advisory)?;
    files.push(path);

    let path = dir.join("config.toml");
    std::fs::write(&path, v.config.to_toml_string())?;
    files.push(path);

    lap("report", &mut seconds);
    io::write_json(
        &dir.join(TIMINGS_FILE),
        &Timings {
            config_hash: v.hash.clone(),
            seed: v.config.seed,
            seconds,
        },
    )?;
    files.push(dir.join(TIMINGS_FILE));
    Ok(ReproduceOutput {
        dir: dir.to_path_buf(),
        summary,
        files,
    })
}

/// Estimates CSV, reconstructed grids, a slice table and its plot script.
pub fn write_inversion(v: &ValidatedConfig, dir: &Path, rec: &ReconstructionResult, st: &Stamp) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let path = dir.join(ESTIMATES_FILE);
    io::write_estimates(&path, &rec.estimates, st)?;
    files.push(path);
    let g = rec.grid;
    for (name, values, kind) in [(A_C_FILE, &rec.a_c, "a_c"), (A_R_FILE, &rec.a_r, "a_r")] {
        let field = ComplexField::new(g, values.iter().map(|&x| Complex64::new(x, 0.0)).collect())?;
        let path = dir.join(name);
        let meta = FieldMeta::new(&format!("reconstructed_{kind}"), &g, st)
            .with("q", v.band.q)
            .with("max_frequency", rec.coverage.max_frequency);
        io::write_field(&path, &field, &meta)?;
        files.push(path);
    }
    // slice along the first axis through the center
    let truth = spec_on(v, g)?;
    let (tc, tr) = truth.dominant_strengths();
    let centre = g.n_points() / 2;
    let rows: Vec<Vec<f64>> = (0..g.n_points())
        .map(|i| {
            let mut idx = vec![centre; g.dim()];
            idx[0] = i;
            let f = g.flat_index(&idx);
            vec![g.axis_coordinate(i), tc[f], rec.a_c[f], tr[f], rec.a_r[f]]
        })
        .collect();
    let path = dir.join(SLICE_FILE);
    io::write_table(&path, &["x", "a_c_true", "a_c_rec", "a_r_true", "a_r_rec"], &rows, st)?;
    files.push(path);
    let path = dir.join("plot_reconstruction.py");
    std::fs::write(&path, plot_script(st, SLICE_FILE, "x", &["a_c_true", "a_c_rec", "a_r_true", "a_r_rec"]))?;
    files.push(path);
    Ok(files)
}

fn plot_script(st: &Stamp, csv: &str, x: &str, ys: &[&str]) -> String {
    let ys: Vec<String> = ys.iter().map(|y| format!("{y:?}")).collect();
    format!(
        r##"# config_hash={hash}
# seed={seed}
import csv
import matplotlib.pyplot as plt

with open({csv:?}) as f:
    rows = list(csv.DictReader(line for line in f if not line.startswith("#")))
xs = [float(r[{x:?}]) for r in rows]
for name in [{ys}]:
    plt.plot(xs, [float(r[name]) for r in rows], label=name)
plt.xlabel({x:?})
plt.legend()
plt.savefig({png:?}, dpi=120)
"##,
        hash = st.config_hash,
        seed = st.seed,
        ys = ys.join(", "),
        png = csv.replace(".csv", ".png"),
    )
}

/// One checked property in the verification report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl InvariantCheck {
    fn new(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            tolerance,
            pass: value.is_finite() && value <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileCheck {
    pub file: String,
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config_hash: String,
    pub seed: u64,
    pub files: Vec<FileCheck>,
    pub expectation: ExpectationReport,
    pub expectation_covariance_z: f64,
    pub expectation_relation_z: f64,
    pub invariants: Vec<InvariantCheck>,
    pub pass: bool,
}

/// Recompute stamps and derived artifacts in `dir`, run the Monte-Carlo
/// expectation check and the invariant suite, and write the report.
pub fn verify(v: &ValidatedConfig, dir: &Path) -> Result<VerifyReport> {
    verify_inner(v, dir).map_err(|e| e.in_stage("verify"))
}

fn verify_inner(v: &ValidatedConfig, dir: &Path) -> Result<VerifyReport> {
    let st = stamp(v);
    let mut names: Vec<String> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| {
            let own = [VERIFY_FILE, INVARIANTS_FILE, "plot_verify.py"];
            let data = n.ends_with(".psfd") || n.ends_with(".pssw") || n.ends_with(".csv") || n.ends_with(".py");
            let json = n.ends_with(".json") && !n.ends_with(".psfd.json") && !n.ends_with(".pssw.json");
            (data || json) && !own.contains(&n.as_str())
        })
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(Error::Format(format!("{}: no artifacts to verify", dir.display())));
    }
    let files: Vec<FileCheck> = names
        .iter()
        .map(|n| match io::read_stamp(&dir.join(n)) {
            Ok(s) => FileCheck {
                file: n.clone(),
                pass: s == st,
                config_hash: Some(s.config_hash),
                seed: Some(s.seed),
            },
            Err(_) => FileCheck {
                file: n.clone(),
                config_hash: None,
                seed: None,
                pass: false,
            },
        })
        .collect();

    let mut invariants = Vec::new();
    // artifacts regenerate from the configuration
    let realization = sample_stage(v)?;
    if let Ok((field, _)) = io::read_field(&dir.join(POTENTIAL_FILE)) {
        let diff = field.sub(&realization.rho).l2_norm() / realization.rho.l2_norm().max(f64::MIN_POSITIVE);
        invariants.push(InvariantCheck::new("potential_regenerates", diff, 1e-6));
    }
    if let Ok((ds, _)) = io::read_sweep(&dir.join(SWEEP_FILE)) {
        let recomputed = sweep_stage(v, &realization.rho, &v.config.solver)?;
        let worst = ds
            .forward
            .iter()
            .flatten()
            .chain(ds.reverse.iter().flatten())
            .zip(recomputed.forward.iter().flatten().chain(recomputed.reverse.iter().flatten()))
            .map(|(a, b)| (a - b).norm() / b.norm().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        invariants.push(InvariantCheck::new("sweep_regenerates", worst, 1e-12));
        if let Ok((est, _)) = io::read_estimates(&dir.join(ESTIMATES_FILE)) {
            let again = estimate_stage(v, &ds)?;
            let worst = est
                .iter()
                .zip(&again)
                .map(|(a, b)| (a.c_hat - b.c_hat).norm().max((a.r_hat - b.r_hat).norm()))
                .fold(if est.len() == again.len() { 0.0 } else { f64::INFINITY }, f64::max);
            invariants.push(InvariantCheck::new("estimates_regenerate", worst, 0.0));
        }
    }
    invariants.extend(invariant_suite(v)?);

    let x_hat = &v.directions[0];
    let tau = v.taus.iter().copied().find(|&t| t > 0.0).unwrap_or(0.0);
    let seed = realization_seeds(v.config.seed ^ 0x5eed_0fe5_7a7e, 1)[0];
    let expectation = expectation_check(
        &v.potential,
        x_hat,
        tau,
        v.band.q,
        v.config.inverse.expectation_realizations,
        seed,
    )?;
    let cz = expectation.covariance_z();
    let rz = expectation.relation_z();
    invariants.push(InvariantCheck::new("expectation_covariance_z", cz, 4.0));
    invariants.push(InvariantCheck::new("expectation_relation_z", rz, 4.0));

    let pass = files.iter().all(|f| f.pass) && invariants.iter().all(|c| c.pass);
    let report = VerifyReport {
        config_hash: st.config_hash.clone(),
        seed: st.seed,
        files,
        expectation,
        expectation_covariance_z: cz,
        expectation_relation_z: rz,
        invariants,
        pass,
    };
    io::write_json(&dir.join(VERIFY_FILE), &report)?;
    let rows: Vec<Vec<f64>> = report
        .invariants
        .iter()
        .enumerate()
        .map(|(i, c)| vec![i as f64, c.value, c.tolerance, if c.pass { 1.0 } else { 0.0 }])
        .collect();
    io::write_table(&dir.join(INVARIANTS_FILE), &["index", "value", "tolerance", "pass"], &rows, &st)?;
    let mut script = plot_script(&st, INVARIANTS_FILE, "index", &["value", "tolerance"]);
    script.push_str("# invariant names, by index:\n");
    for (i, c) in report.invariants.iter().enumerate() {
        script.push_str(&format!("#   {i}: {}\n", c.name));
    }
    std::fs::write(dir.join("plot_verify.py"), script)?;
    Ok(report)
}

/// Deterministic identities that must hold for the configured model.
pub fn invariant_suite(v: &ValidatedConfig) -> Result<Vec<InvariantCheck>> {
    let mut out = Vec::new();
    let n = v.potential.n();
    let kappa = v.band.q;
    let rs = root_system(kappa, n)?;

    // ∏(z - κ_j) = z^n - κ^{2n} at a few points
    let worst = [Complex64::new(0.3, 0.7), Complex64::new(-1.1, 0.2), Complex64::new(kappa, kappa)]
        .iter()
        .map(|&z| (rs.monic_polynomial(z) - rs.factored_polynomial(z)).norm() / rs.monic_polynomial(z).norm())
        .fold(0.0, f64::max);
    out.push(InvariantCheck::new("root_factorization", worst, 1e-12));

    // Green's function against the independent reference
    let worst = [0.05, 0.5, 2.0]
        .iter()
        .map(|&t| {
            let r = t / kappa;
            let a = green(r, &rs, v.grid.d())?;
            let b = crate::oracle::green_reference(r, &rs, v.grid.d())?;
            Ok((a - b).norm() / b.norm())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    out.push(InvariantCheck::new("green_vs_reference", worst, 1e-10));

    // FFT round trip on the potential grid
    let probe = ComplexField::from_fn(v.grid, |x| Complex64::new((x[0] * 3.0).cos(), x.iter().sum::<f64>().sin()));
    let back = ifft(&fft(&probe));
    out.push(InvariantCheck::new("fft_round_trip", back.sub(&probe).l2_norm() / probe.l2_norm(), 1e-12));

    // periodized convolution against direct summation on a small grid
    let small = GridSpec::new(v.grid.d(), v.grid.half_width(), 8)?;
    let wave = kappa.min(3.0);
    let small_rs = root_system(wave, n)?;
    let phi = ComplexField::from_fn(small, |x| {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        if x.iter().all(|c| c.abs() < 0.5 * small.half_width() - 1e-12) {
            Complex64::new(1.0 - r2, 0.5 * x[0])
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let kernel = PeriodizedKernel::new(&small_rs, &small)?;
    let conv = kernel.convolve(phi.values());
    let targets: Vec<usize> = (0..small.len()).filter(|&i| small.in_safe_box(i)).collect();
    let direct = crate::oracle::direct_volume_potential(&phi, &small_rs, &targets)?;
    let num: f64 = targets.iter().zip(&direct).map(|(&t, b)| (conv[t] - b).norm_sqr()).sum();
    let den: f64 = direct.iter().map(|b| b.norm_sqr()).sum();
    out.push(InvariantCheck::new("convolution_vs_direct_sum", (num / den).sqrt(), 1e-10));

    // reconstruction is real for Hermitian-merged data
    let exact: Vec<StrengthEstimate> = v
        .directions
        .iter()
        .flat_map(|x| {
            v.taus.iter().map(move |&tau| {
                let xi: Vec<f64> = x.iter().map(|c| 2.0 * tau * c).collect();
                StrengthEstimate {
                    x_hat: x.clone(),
                    tau,
                    c_hat: v.potential.covariance_strength_hat(&xi),
                    r_hat: v.potential.relation_strength_hat(&xi),
                    xi,
                    q: v.band.q,
                    n_kappa: 0,
                }
            })
        })
        .collect();
    if let Ok(rec) = reconstruct_strengths(&exact, &v.reconstruction_grid) {
        out.push(InvariantCheck::new("reconstruction_is_real", rec.imag_residue_c.max(rec.imag_residue_r), 1e-10));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn demo_config(n_points: usize) -> ExperimentConfig {
        ExperimentConfig::from_toml_str(&format!(
            r#"
seed = 11

[grid]
d = 2
half_width = 1.0
n_points = {n_points}

[model]
n = 2

[potential]
m1 = 2.0
m2 = 2.0
a1.bumps = [{{ amplitude = 1.0, center = [0.05, 0.0], radius = 0.4 }}]
a2.bumps = [{{ amplitude = 0.5, center = [-0.05, 0.05], radius = 0.35 }}]

[solver]
born_order = 1

[sweep]
q = 4.0
kappa_step = 0.5
tau_count = 6
direction_count = 8

[inverse]
grid_points = 32
"#
        ))
        .unwrap()
    }

    #[test]
    fn reproduce_then_verify() {
        let v = validate(&demo_config(64)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = reproduce(&v, dir.path()).unwrap();
        assert_eq!(out.summary.error_vs_q.len(), 1);
        assert!(out.summary.current.l2_error_c.is_finite());
        let report = verify(&v, dir.path()).unwrap();
        assert!(report.pass, "{:#?}", report.invariants);
        assert!(report.files.iter().any(|f| f.file == ESTIMATES_FILE));

        // a foreign stamp is detected
        let mut other = v.config.clone();
        other.seed += 1;
        let w = validate(&other).unwrap();
        let report = verify(&w, dir.path()).unwrap();
        assert!(!report.pass);
        assert!(report.files.iter().all(|f| !f.pass));
    }

    #[test]
    fn error_rows_accumulate_over_q() {
        let dir = tempfile::tempdir().unwrap();
        let v = validate(&demo_config(64)).unwrap();
        reproduce(&v, dir.path()).unwrap();
        let mut cfg = v.config.clone();
        cfg.sweep.q = 8.0;
        let w = validate(&cfg).unwrap();
        let out = reproduce(&w, dir.path()).unwrap();
        let qs: Vec<f64> = out.summary.error_vs_q.iter().map(|r| r.q).collect();
        assert_eq!(qs, vec![4.0, 8.0]);
    }

    #[test]
    fn stage_errors_name_the_stage() {
        let v = validate(&demo_config(64)).unwrap();
        let rho = sample_stage(&v).unwrap().rho;
        let mut solver = v.config.solver.clone();
        solver.born_order = BornOrder::Converge;
        solver.max_iter = 1;
        solver.tol = 1e-14;
        let big = rho.scaled(Complex64::new(1e4, 0.0));
        match sweep_stage(&v, &big, &solver) {
            Err(Error::Stage { stage, source }) => {
                assert_eq!(stage, "sweep");
                assert_eq!(source.exit_code(), 3);
            }
            other => panic!("expected a sweep-stage error, got {other:?}"),
        }
    }
}
