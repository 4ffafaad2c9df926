//! Experiment configuration (TOML), validation against the admissible
//! parameter ranges, and the configuration hash stamped on every artifact.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::farfield::Band;
use crate::forward::SolveConfig;
use crate::gmig::{order_range, reconstruction_threshold, Bump, PotentialSpec, StrengthGrid};
use crate::grid::GridSpec;
use crate::inverse::default_directions;
use crate::{Dim, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub d: u32,
    pub half_width: f64,
    pub n_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Polyharmonic order.
    pub n: usize,
}

/// A strength given either by parametric bumps or by a binary field file
/// (real part used).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrengthConfig {
    #[serde(default)]
    pub bumps: Vec<Bump>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub m1: f64,
    pub m2: f64,
    #[serde(default)]
    pub a1: StrengthConfig,
    #[serde(default)]
    pub a2: StrengthConfig,
}

fn default_direction_count() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Band start `Q`; data cover `[Q, 2Q + τ_max]`.
    pub q: f64,
    pub kappa_step: f64,
    /// Explicit shifts τ; otherwise `tau_count` multiples of `tau_step`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taus: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_count: Option<usize>,
    /// Explicit unit directions; otherwise `direction_count` evenly spaced ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_direction_count")]
    pub direction_count: usize,
}

fn default_expectation_realizations() -> usize {
    50
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverseConfig {
    /// Order used in the estimator weight; defaults to `min(m1, m2)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    /// Points per axis of the reconstruction grid (same box as the potential).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(default = "default_expectation_realizations")]
    pub expectation_realizations: usize,
}

impl Default for InverseConfig {
    fn default() -> Self {
        Self {
            m: None,
            grid_points: None,
            expectation_realizations: default_expectation_realizations(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub grid: GridConfig,
    pub model: ModelConfig,
    pub potential: PotentialConfig,
    #[serde(default)]
    pub solver: SolveConfig,
    pub sweep: SweepConfig,
    #[serde(default)]
    pub inverse: InverseConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Validation(vec![format!("config parse error: {e}")]))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml_str(&text)?;
        // strength files are resolved relative to the config file
        if let Some(base) = path.parent() {
            for s in [&mut cfg.potential.a1, &mut cfg.potential.a2] {
                if let Some(f) = &s.file {
                    if f.is_relative() {
                        s.file = Some(base.join(f));
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical JSON form of the configuration without its
    /// output directory, extended by the bytes of any strength files.
    pub fn hash(&self) -> Result<String> {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let value = serde_json::to_value(&canonical)?;
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&value)?);
        for s in [&self.potential.a1, &self.potential.a2] {
            if let Some(f) = &s.file {
                hasher.update(std::fs::read(f)?);
            }
        }
        Ok(hex(&hasher.finalize()))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Configuration after validation, with derived quantities.
#[derive(Clone, Debug)]
pub struct ValidatedConfig {
    pub config: ExperimentConfig,
    pub hash: String,
    pub grid: GridSpec,
    pub potential: Arc<PotentialSpec>,
    pub band: Band,
    pub taus: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
    /// Order used by the estimators.
    pub m: f64,
    pub reconstruction_grid: GridSpec,
    pub warnings: Vec<String>,
}

impl ValidatedConfig {
    pub fn spacing(&self) -> f64 {
        self.grid.spacing()
    }

    pub fn kappas(&self) -> Vec<f64> {
        self.band.kappas()
    }
}

fn is_multiple(value: f64, step: f64) -> bool {
    let k = value / step;
    (k - k.round()).abs() <= 1e-9 * k.abs().max(1.0)
}

fn load_strength(cfg: &StrengthConfig, grid: GridSpec, name: &str, errors: &mut Vec<String>) -> Option<StrengthGrid> {
    let result = match (&cfg.file, cfg.bumps.is_empty()) {
        (Some(_), false) => {
            errors.push(format!("{name}: give either bumps or a file, not both"));
            return None;
        }
        (Some(path), true) => crate::io::read_field(path).and_then(|(field, _)| {
            if field.spec() != &grid {
                return Err(Error::Domain(format!("{name}: file grid differs from the configured grid")));
            }
            StrengthGrid::new(grid, field.values().iter().map(|v| v.re).collect())
        }),
        (None, _) => StrengthGrid::from_bumps(grid, &cfg.bumps),
    };
    match result {
        Ok(s) => Some(s),
        Err(e) => {
            errors.push(format!("{name}: {e}"));
            None
        }
    }
}

/// Check every range and consistency rule; hard violations are collected into
/// a single validation error, soft ones become warnings.
pub fn validate(config: &ExperimentConfig) -> Result<ValidatedConfig> {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    if config.seed > i64::MAX as u64 {
        errors.push(format!("seed = {} must fit in a signed 64-bit integer", config.seed));
    }
    let g = &config.grid;
    let d = match Dim::try_from(g.d) {
        Ok(d) => Some(d),
        Err(_) => {
            errors.push(format!("grid.d = {} must be 2 or 3", g.d));
            None
        }
    };
    if g.n_points < 16 || g.n_points % 2 != 0 {
        errors.push(format!("grid.n_points = {} must be even and >= 16", g.n_points));
    }
    if !(g.half_width > 0.0 && g.half_width.is_finite()) {
        errors.push(format!("grid.half_width = {} must be positive", g.half_width));
    }
    let n = config.model.n;
    if n < 2 {
        errors.push(format!("model.n = {n} must be >= 2"));
    }
    let p = &config.potential;
    if let Some(d) = d {
        let (lo, hi) = order_range(d.get(), n);
        for (name, m) in [("m1", p.m1), ("m2", p.m2)] {
            if !(m > lo && m <= hi) {
                errors.push(format!("potential.{name} = {m} violates m in ({lo}, {hi}] for d = {}, n = {n}", d.get()));
            }
        }
    }
    if let Err(e) = config.solver.check() {
        errors.push(format!("solver: {e}"));
    }
    let s = &config.sweep;
    if !(s.q > 0.0 && s.q.is_finite()) {
        errors.push(format!("sweep.q = {} must be positive", s.q));
    }
    if !(s.kappa_step > 0.0 && s.kappa_step.is_finite()) {
        errors.push(format!("sweep.kappa_step = {} must be positive", s.kappa_step));
    } else if s.q > 0.0 && !is_multiple(s.q, s.kappa_step) {
        errors.push(format!("sweep.q = {} must be a multiple of kappa_step = {}", s.q, s.kappa_step));
    }
    let taus: Vec<f64> = match (&s.taus, s.tau_count) {
        (Some(t), None) => t.clone(),
        (None, Some(count)) => {
            let step = s.tau_step.unwrap_or(s.kappa_step);
            (0..count).map(|k| k as f64 * step).collect()
        }
        (None, None) => vec![0.0],
        (Some(_), Some(_)) => {
            errors.push("sweep: give either taus or tau_count, not both".into());
            vec![0.0]
        }
    };
    for &t in &taus {
        if !(t >= 0.0) || (s.kappa_step > 0.0 && !is_multiple(t, s.kappa_step)) {
            errors.push(format!("sweep: tau = {t} must be a nonnegative multiple of kappa_step"));
        }
    }
    let tau_max = taus.iter().copied().fold(0.0, f64::max);

    let grid = match (d, GridSpec::new(d.unwrap_or(Dim::Two), g.half_width, g.n_points)) {
        (Some(_), Ok(grid)) if errors.iter().all(|e| !e.starts_with("grid")) => Some(grid),
        _ => None,
    };

    let directions: Vec<Vec<f64>> = match (&s.directions, d) {
        (Some(list), Some(d)) => {
            for x in list {
                if let Err(e) = crate::greens::check_direction(x, d) {
                    errors.push(format!("sweep.directions: {e}"));
                }
            }
            list.clone()
        }
        (None, Some(d)) => default_directions(d, s.direction_count),
        _ => Vec::new(),
    };
    if d.is_some() && directions.is_empty() {
        errors.push("sweep: at least one direction is required".into());
    }

    let mut potential = None;
    if let Some(grid) = grid {
        let nyquist = grid.nyquist();
        let top = 2.0 * (2.0 * s.q + tau_max);
        if top >= nyquist {
            errors.push(format!(
                "sweep: the data probe |xi| up to {top} but the grid resolves only {nyquist:.1}; raise grid.n_points"
            ));
        }
        let a1 = load_strength(&p.a1, grid, "potential.a1", &mut errors);
        let a2 = load_strength(&p.a2, grid, "potential.a2", &mut errors);
        if let (Some(a1), Some(a2)) = (a1, a2) {
            match PotentialSpec::new(n.max(2), a1, p.m1, a2, p.m2) {
                Ok(spec) => potential = Some(spec),
                Err(e) if errors.is_empty() => errors.push(format!("potential: {e}")),
                Err(_) => {}
            }
        }
        // decorrelation scale of the data in κ
        let diameter = potential.as_ref().map(|sp: &PotentialSpec| support_diameter(sp)).unwrap_or(0.0);
        if diameter > 0.0 && s.kappa_step > PI / (4.0 * diameter) {
            warnings.push(format!(
                "sweep.kappa_step = {} exceeds pi/(4 diam D) = {:.4}; the band average is under-sampled",
                s.kappa_step,
                PI / (4.0 * diameter)
            ));
        }
    }
    let m = match &potential {
        Some(sp) => {
            let threshold = reconstruction_threshold(sp.grid().dim(), n);
            if sp.reconstruction_warning() {
                warnings.push(format!(
                    "m = {} <= (4d - 4n + 2)/3 = {threshold:.4}: forward solves are valid but the reconstruction formulas are not guaranteed",
                    sp.m()
                ));
            }
            let m = config.inverse.m.unwrap_or(sp.m());
            if (m - sp.m()).abs() > 1e-12 {
                warnings.push(format!("inverse.m = {m} differs from the potential order {}", sp.m()));
            }
            m
        }
        None => config.inverse.m.unwrap_or(p.m1.min(p.m2)),
    };
    if config.inverse.expectation_realizations < 50 {
        errors.push(format!(
            "inverse.expectation_realizations = {} must be >= 50",
            config.inverse.expectation_realizations
        ));
    }
    let reconstruction_grid = grid.and_then(|grid| {
        let points = config.inverse.grid_points.unwrap_or(grid.n_points().min(64));
        match GridSpec::new(grid.d(), grid.half_width(), points) {
            Ok(r) if points >= 16 => Some(r),
            _ => {
                errors.push(format!("inverse.grid_points = {points} must be even and >= 16"));
                None
            }
        }
    });
    if !errors.is_empty() {
        return Err(Error::Validation(errors));
    }
    let band = Band::new(s.q, tau_max, s.kappa_step)?;
    Ok(ValidatedConfig {
        hash: config.hash()?,
        config: config.clone(),
        grid: grid.expect("validated"),
        potential: Arc::new(potential.expect("validated")),
        band,
        taus,
        directions,
        m,
        reconstruction_grid: reconstruction_grid.expect("validated"),
        warnings,
    })
}

/// Diameter of the smallest centered ball around the support centroid,
/// doubled; a cheap bound for `diam(D)`.
fn support_diameter(spec: &PotentialSpec) -> f64 {
    let grid = spec.grid();
    let d = grid.dim();
    let cells: Vec<[f64; 3]> = (0..grid.len())
        .filter(|&i| spec.a1().values()[i] > 0.0 || spec.a2().values()[i] > 0.0)
        .map(|i| grid.point(i))
        .collect();
    if cells.is_empty() {
        return 0.0;
    }
    let mut c = [0.0; 3];
    for p in &cells {
        for a in 0..d {
            c[a] += p[a] / cells.len() as f64;
        }
    }
    let r = cells
        .iter()
        .map(|p| (0..d).map(|a| (p[a] - c[a]).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    2.0 * r + grid.spacing()
}
