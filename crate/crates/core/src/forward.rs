//! Volume potential `H_κ`, scattering operator `K_κ φ = H_κ(ρφ)`, the Born
//! sequence and the Lippmann–Schwinger solve `u - K_κ u = u^i`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::greens::{check_direction, dot, RootSystem};
use crate::grid::{periodized_kernel, ComplexField, GridSpec, PeriodizedKernel};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative `l1` mass allowed outside the safe half-box before `apply_h`
/// refuses its input.
const SUPPORT_TOLERANCE: f64 = 1e-12;

/// Residual level above which the fixed-point iteration is declared divergent.
const DIVERGENCE_LEVEL: f64 = 1e6;

/// Number of Born terms used in far fields: a fixed order `J` (partial sum
/// `u_0 + … + u_{J-1}` inside the far-field integral) or the converged solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BornOrderRepr", into = "BornOrderRepr")]
pub enum BornOrder {
    Order(usize),
    Converge,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BornOrderRepr {
    Int(usize),
    Text(String),
}

impl TryFrom<BornOrderRepr> for BornOrder {
    type Error = String;

    fn try_from(r: BornOrderRepr) -> std::result::Result<Self, String> {
        match r {
            BornOrderRepr::Int(0) => Err("born order must be >= 1".into()),
            BornOrderRepr::Int(j) => Ok(BornOrder::Order(j)),
            BornOrderRepr::Text(s) => s.parse(),
        }
    }
}

impl From<BornOrder> for BornOrderRepr {
    fn from(b: BornOrder) -> Self {
        match b {
            BornOrder::Order(j) => BornOrderRepr::Int(j),
            BornOrder::Converge => BornOrderRepr::Text("converge".into()),
        }
    }
}

impl FromStr for BornOrder {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "converge" | "full" => Ok(BornOrder::Converge),
            t => match t.parse::<usize>() {
                Ok(0) => Err("born order must be >= 1".into()),
                Ok(j) => Ok(BornOrder::Order(j)),
                Err(_) => Err(format!("born order must be a positive integer or \"converge\", got {t:?}")),
            },
        }
    }
}

impl fmt::Display for BornOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BornOrder::Order(j) => write!(f, "{j}"),
            BornOrder::Converge => f.write_str("full"),
        }
    }
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    200
}

fn default_born_order() -> BornOrder {
    BornOrder::Converge
}

fn default_restart() -> usize {
    30
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_born_order")]
    pub born_order: BornOrder,
    /// Use restarted GMRES instead of the plain fixed-point iteration.
    #[serde(default)]
    pub krylov: bool,
    #[serde(default = "default_restart")]
    pub restart: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: default_max_iter(),
            born_order: default_born_order(),
            krylov: false,
            restart: default_restart(),
        }
    }
}

impl SolveConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Domain(format!("solver tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 || self.restart == 0 {
            return Err(Error::Domain("max_iter and restart must be positive".into()));
        }
        Ok(())
    }
}

/// Total field for one incident direction and wavenumber.
#[derive(Clone, Debug)]
pub struct WaveField {
    pub values: ComplexField,
    pub theta: Vec<f64>,
    pub kappa: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Samples of the plane wave `e^{iκ x·θ}`.
pub fn incident_wave(theta: &[f64], kappa: f64, spec: &GridSpec) -> Result<ComplexField> {
    check_direction(theta, spec.d())?;
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
    }
    let d = spec.dim();
    Ok(ComplexField::from_fn(*spec, |x| {
        Complex64::from_polar(1.0, kappa * dot(&x[..d], theta))
    }))
}

fn safe_norm(spec: &GridSpec, v: &[Complex64]) -> f64 {
    v.iter()
        .enumerate()
        .filter(|(i, _)| spec.in_safe_box(*i))
        .map(|(_, x)| x.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `(H_κ φ)(x) = ∫ G(|x-y|) φ(y) dy` for densities supported in the safe
/// half-box. Density outside the half-box is rejected if its relative `l1`
/// mass exceeds `1e-12` and is masked off otherwise.
pub fn apply_h(phi: &ComplexField, kernel: &PeriodizedKernel) -> Result<ComplexField> {
    let spec = *phi.spec();
    if spec != *kernel.spec() {
        return Err(Error::Domain("density and kernel live on different grids".into()));
    }
    let mut total = 0.0;
    let mut outside = 0.0;
    let mut masked = phi.values().to_vec();
    for (i, v) in masked.iter_mut().enumerate() {
        let a = v.norm();
        total += a;
        if !spec.in_safe_box(i) {
            outside += a;
            *v = ZERO;
        }
    }
    if total > 0.0 && outside / total > SUPPORT_TOLERANCE {
        return Err(Error::Support {
            outside: outside / total,
        });
    }
    ComplexField::new(spec, kernel.convolve(&masked))
}

/// `K_κ u = H_κ(ρ u)`.
pub fn apply_k(u: &ComplexField, rho: &ComplexField, kernel: &PeriodizedKernel) -> Result<ComplexField> {
    apply_h(&u.pointwise_mul(rho), kernel)
}

/// `K_κ` for a fixed potential, with the kernel assembled once.
#[derive(Clone, Debug)]
pub struct ScatteringOperator {
    rho: ComplexField,
    kernel: PeriodizedKernel,
}

impl ScatteringOperator {
    pub fn new(rho: &ComplexField, rs: &RootSystem) -> Result<Self> {
        let kernel = periodized_kernel(rs, rho.spec())?;
        Self::with_kernel(rho, kernel)
    }

    pub fn with_kernel(rho: &ComplexField, kernel: PeriodizedKernel) -> Result<Self> {
        let spec = *rho.spec();
        let mut total = 0.0;
        let mut outside = 0.0;
        for (i, v) in rho.values().iter().enumerate() {
            total += v.norm();
            if !spec.in_safe_box(i) {
                outside += v.norm();
            }
        }
        if total > 0.0 && outside / total > SUPPORT_TOLERANCE {
            return Err(Error::Support {
                outside: outside / total,
            });
        }
        Ok(Self {
            rho: rho.masked_to_safe_box(),
            kernel,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        self.rho.spec()
    }

    pub fn kappa(&self) -> f64 {
        self.kernel.roots().kappa()
    }

    pub fn roots(&self) -> &RootSystem {
        self.kernel.roots()
    }

    pub fn rho(&self) -> &ComplexField {
        &self.rho
    }

    pub fn kernel(&self) -> &PeriodizedKernel {
        &self.kernel
    }

    pub fn apply(&self, u: &[Complex64]) -> Vec<Complex64> {
        let prod: Vec<Complex64> = u.iter().zip(self.rho.values()).map(|(a, b)| a * b).collect();
        self.kernel.convolve(&prod)
    }

    pub fn apply_field(&self, u: &ComplexField) -> Result<ComplexField> {
        ComplexField::new(*self.spec(), self.apply(u.values()))
    }

    /// `‖u - K u - u^i‖ / ‖u^i‖` on the safe half-box.
    pub fn residual(&self, u: &ComplexField, incident: &ComplexField) -> f64 {
        let ku = self.apply(u.values());
        let r: Vec<Complex64> = u
            .values()
            .iter()
            .zip(&ku)
            .zip(incident.values())
            .map(|((a, b), c)| a - b - c)
            .collect();
        safe_norm(self.spec(), &r) / safe_norm(self.spec(), incident.values())
    }
}

/// Born iterates `u_0 = u^i`, `u_j = K u_{j-1}`.
#[derive(Clone, Debug)]
pub struct BornSeries {
    pub terms: Vec<ComplexField>,
    /// Set when `‖u_J‖ >= ‖u_{J-1}‖`, i.e. the series is not contracting.
    pub non_convergence_warning: bool,
}

impl BornSeries {
    /// `u_0 + … + u_{J-1}`
    pub fn partial_sum(&self, count: usize) -> ComplexField {
        let mut acc = ComplexField::zeros(*self.terms[0].spec());
        for t in self.terms.iter().take(count) {
            for (a, b) in acc.values_mut().iter_mut().zip(t.values()) {
                *a += b;
            }
        }
        acc
    }

    /// Successive norm ratios `‖u_{j+1}‖ / ‖u_j‖` on the safe half-box.
    pub fn ratios(&self) -> Vec<f64> {
        let norms: Vec<f64> = self.terms.iter().map(|t| t.safe_l2_norm()).collect();
        norms.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 }).collect()
    }
}

pub fn born_terms(op: &ScatteringOperator, theta: &[f64], order: usize) -> Result<BornSeries> {
    if order == 0 {
        return Err(Error::Domain("Born order must be >= 1".into()));
    }
    let u0 = incident_wave(theta, op.kappa(), op.spec())?;
    let mut terms = Vec::with_capacity(order + 1);
    terms.push(u0);
    for _ in 0..order {
        let next = op.apply_field(terms.last().expect("non-empty"))?;
        terms.push(next);
    }
    let last = terms[order].safe_l2_norm();
    let prev = terms[order - 1].safe_l2_norm();
    let warning = prev > 0.0 && last >= prev;
    if warning {
        log::warn!(
            "Born series not contracting at kappa = {}: ratio {:.3}",
            op.kappa(),
            last / prev
        );
    }
    Ok(BornSeries {
        terms,
        non_convergence_warning: warning,
    })
}

/// Solve `u - K_κ u = u^i`. The fixed-point iteration returns the last iterate
/// together with its exact residual; with `cfg.krylov` restarted GMRES is used.
pub fn solve_ls(op: &ScatteringOperator, theta: &[f64], cfg: &SolveConfig) -> Result<WaveField> {
    cfg.check()?;
    let incident = incident_wave(theta, op.kappa(), op.spec())?;
    let (values, residual, iterations) = if cfg.krylov {
        gmres(op, &incident, cfg)?
    } else {
        fixed_point(op, &incident, cfg)?
    };
    Ok(WaveField {
        values,
        theta: theta.to_vec(),
        kappa: op.kappa(),
        residual,
        iterations,
    })
}

fn fixed_point(op: &ScatteringOperator, incident: &ComplexField, cfg: &SolveConfig) -> Result<(ComplexField, f64, usize)> {
    let spec = *op.spec();
    let scale = safe_norm(&spec, incident.values());
    let mut u = incident.values().to_vec();
    let mut residual = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        let ku = op.apply(&u);
        let next: Vec<Complex64> = incident.values().iter().zip(&ku).map(|(a, b)| a + b).collect();
        let diff: Vec<Complex64> = u.iter().zip(&next).map(|(a, b)| a - b).collect();
        residual = safe_norm(&spec, &diff) / scale;
        if residual <= cfg.tol {
            return Ok((ComplexField::new(spec, u)?, residual, it));
        }
        if !residual.is_finite() || residual > DIVERGENCE_LEVEL {
            return Err(Error::NonConvergence {
                kappa: op.kappa(),
                residual,
                iterations: it,
            });
        }
        u = next;
    }
    Err(Error::NonConvergence {
        kappa: op.kappa(),
        residual,
        iterations: cfg.max_iter,
    })
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn gmres(op: &ScatteringOperator, incident: &ComplexField, cfg: &SolveConfig) -> Result<(ComplexField, f64, usize)> {
    let spec = *op.spec();
    let b = incident.values();
    // Stop on the full-grid residual; it bounds the half-box one.
    let target = cfg.tol * safe_norm(&spec, b);
    let system = |v: &[Complex64]| -> Vec<Complex64> {
        let kv = op.apply(v);
        v.iter().zip(&kv).map(|(a, c)| a - c).collect()
    };
    let mut x = b.to_vec();
    let mut applications = 0usize;
    loop {
        let ax = system(&x);
        applications += 1;
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let beta = norm(&r);
        if beta <= target {
            break;
        }
        if applications >= cfg.max_iter || !beta.is_finite() {
            return Err(Error::NonConvergence {
                kappa: op.kappa(),
                residual: safe_norm(&spec, &r) / safe_norm(&spec, b),
                iterations: applications,
            });
        }
        let m = cfg.restart;
        let mut basis: Vec<Vec<Complex64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess = vec![vec![ZERO; m]; m + 1];
        let mut cs = vec![ZERO; m];
        let mut sn = vec![ZERO; m];
        let mut g = vec![ZERO; m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..m {
            let mut w = system(&basis[k]);
            applications += 1;
            for (j, q) in basis.iter().enumerate() {
                let hjk = inner(q, &w);
                hess[j][k] = hjk;
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= hjk * qi;
                }
            }
            let wn = norm(&w);
            hess[k + 1][k] = Complex64::new(wn, 0.0);
            for j in 0..k {
                let t = cs[j].conj() * hess[j][k] + sn[j].conj() * hess[j + 1][k];
                hess[j + 1][k] = -sn[j] * hess[j][k] + cs[j] * hess[j + 1][k];
                hess[j][k] = t;
            }
            let (a, bb) = (hess[k][k], hess[k + 1][k]);
            let denom = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = a / denom;
            sn[k] = bb / denom;
            hess[k][k] = Complex64::new(denom, 0.0);
            hess[k + 1][k] = ZERO;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k].conj() * g[k];
            k_used = k + 1;
            if g[k + 1].norm() <= target || wn == 0.0 || applications >= cfg.max_iter {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let mut y = vec![ZERO; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= hess[i][j] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, qi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * qi;
            }
        }
    }
    let u = ComplexField::new(spec, x)?;
    let residual = op.residual(&u, incident);
    Ok((u, residual, applications))
}

/// Spectral-radius estimate of `K_κ` by power iteration from a seeded random
/// start, returned as the geometric mean of the last `tail` norm ratios.
pub fn contraction_ratio(op: &ScatteringOperator, iterations: usize, tail: usize, seed: u64) -> f64 {
    let spec = *op.spec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..spec.len())
        .map(|i| {
            if spec.in_safe_box(i) {
                Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            } else {
                ZERO
            }
        })
        .collect();
    let mut logs = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let before = safe_norm(&spec, &v);
        if before == 0.0 {
            return 0.0;
        }
        let w = op.apply(&v);
        let after = safe_norm(&spec, &w);
        if after == 0.0 {
            return 0.0;
        }
        logs.push((after / before).ln());
        v = w.iter().map(|x| x / after).collect();
    }
    let tail = tail.clamp(1, logs.len().max(1));
    let start = logs.len().saturating_sub(tail);
    let slice = &logs[start..];
    (slice.iter().sum::<f64>() / slice.len() as f64).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::{green, root_system};
    use crate::Dim;

    fn smooth_rho(spec: GridSpec, amp: f64) -> ComplexField {
        ComplexField::from_fn(spec, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            let s = r2 / 0.16;
            if s < 1.0 {
                Complex64::new(amp, 0.3 * amp) * (1.0 - 1.0 / (1.0 - s)).exp()
            } else {
                ZERO
            }
        })
    }

    #[test]
    fn born_order_parsing() {
        assert_eq!("converge".parse::<BornOrder>().unwrap(), BornOrder::Converge);
        assert_eq!("full".parse::<BornOrder>().unwrap(), BornOrder::Converge);
        assert_eq!("3".parse::<BornOrder>().unwrap(), BornOrder::Order(3));
        assert!("0".parse::<BornOrder>().is_err());
        let cfg: SolveConfig = serde_json::from_str(r#"{"born_order": 2}"#).unwrap();
        assert_eq!(cfg.born_order, BornOrder::Order(2));
        assert_eq!(cfg.tol, 1e-8);
        assert_eq!(cfg.max_iter, 200);
        let cfg: SolveConfig = serde_json::from_str(r#"{"born_order": "converge"}"#).unwrap();
        assert_eq!(cfg.born_order, BornOrder::Converge);
        assert_eq!(serde_json::to_string(&BornOrder::Order(4)).unwrap(), "4");
    }

    #[test]
    fn incident_wave_properties() {
        let spec = GridSpec::new(Dim::Two, 1.0, 32).unwrap();
        let u = incident_wave(&[0.6, 0.8], 5.0, &spec).unwrap();
        assert!(u.values().iter().all(|v| (v.norm() - 1.0).abs() < 1e-14));
        let origin = spec.flat_index(&[16, 16]);
        assert!((u.values()[origin] - 1.0).norm() < 1e-15);
        assert!(incident_wave(&[1.0, 1.0], 5.0, &spec).is_err());
    }

    #[test]
    fn lattice_plane_wave_solves_free_equation() {
        // κθ on the frequency lattice: spectral (-Δ)^n - κ^{2n} annihilates it.
        let spec = GridSpec::new(Dim::Two, 1.0, 32).unwrap();
        let step = std::f64::consts::PI;
        let kappa = 5.0 * step;
        let u = incident_wave(&[0.6, 0.8], kappa, &spec).unwrap();
        let n = 2;
        let out = crate::grid::apply_radial_symbol(&u, |r2| Complex64::new(r2.powi(n) - kappa.powi(2 * n as i32), 0.0));
        let scale = kappa.powi(4);
        assert!(out.values().iter().all(|v| v.norm() / scale < 1e-10));
    }

    #[test]
    fn apply_h_rejects_mass_outside_safe_box() {
        let rs = root_system(4.0, 2).unwrap();
        let spec = GridSpec::new(Dim::Two, 1.0, 16).unwrap();
        let kernel = periodized_kernel(&rs, &spec).unwrap();
        let mut phi = ComplexField::zeros(spec);
        phi.values_mut()[0] = Complex64::new(1.0, 0.0);
        assert!(matches!(apply_h(&phi, &kernel), Err(Error::Support { .. })));
        let zero = ComplexField::zeros(spec);
        assert!(apply_h(&zero, &kernel).unwrap().values().iter().all(|v| *v == ZERO));
    }

    #[test]
    fn impulse_response_matches_green() {
        let rs = root_system(10.0, 2).unwrap();
        let spec = GridSpec::new(Dim::Three, 1.0, 32).unwrap();
        let kernel = periodized_kernel(&rs, &spec).unwrap();
        let src = spec.flat_index(&[12, 16, 18]);
        let mut phi = ComplexField::zeros(spec);
        phi.values_mut()[src] = Complex64::new(1.0 / spec.cell_volume(), 0.0);
        let out = apply_h(&phi, &kernel).unwrap();
        let t = spec.flat_index(&[22, 9, 13]);
        let (ps, pt) = (spec.point(src), spec.point(t));
        let r = (0..3).map(|a| (ps[a] - pt[a]).powi(2)).sum::<f64>().sqrt();
        let g = green(r, &rs, Dim::Three).unwrap();
        assert!((out.values()[t] - g).norm() <= 1e-3 * g.norm());
    }

    #[test]
    fn zero_potential_gives_incident_field_in_one_iteration() {
        let rs = root_system(8.0, 2).unwrap();
        let spec = GridSpec::new(Dim::Two, 1.0, 32).unwrap();
        let op = ScatteringOperator::new(&ComplexField::zeros(spec), &rs).unwrap();
        let theta = [1.0, 0.0];
        let w = solve_ls(&op, &theta, &SolveConfig::default()).unwrap();
        assert_eq!(w.iterations, 1);
        assert_eq!(w.residual, 0.0);
        assert_eq!(w.values, incident_wave(&theta, 8.0, &spec).unwrap());
        let born = born_terms(&op, &theta, 3).unwrap();
        assert!(born.terms[1..].iter().all(|t| t.values().iter().all(|v| *v == ZERO)));
    }

    #[test]
    fn k_is_linear_in_rho() {
        let rs = root_system(6.0, 2).unwrap();
        let spec = GridSpec::new(Dim::Two, 1.0, 32).unwrap();
        let rho = smooth_rho(spec, 5.0);
        let u = incident_wave(&[0.0, 1.0], 6.0, &spec).unwrap();
        let kernel = periodized_kernel(&rs, &spec).unwrap();
        let a = apply_k(&u, &rho, &kernel).unwrap();
        let b = apply_k(&u, &rho.scaled(Complex64::new(2.0, 0.0)), &kernel).unwrap();
        let diff = b.sub(&a.scaled(Complex64::new(2.0, 0.0))).l2_norm();
        assert!(diff <= 1e-13 * b.l2_norm());
    }

    #[test]
    fn solution_matches_born_partial_sums_and_gmres() {
        let rs = root_system(12.0, 2).unwrap();
        let spec = GridSpec::new(Dim::Two, 1.0, 64).unwrap();
        let op = ScatteringOperator::new(&smooth_rho(spec, 300.0), &rs).unwrap();
        let theta = [0.8, -0.6];
        let cfg = SolveConfig::default();
        let w = solve_ls(&op, &theta, &cfg).unwrap();
        assert!(w.residual <= cfg.tol);
        assert!((op.residual(&w.values, &incident_wave(&theta, 12.0, &spec).unwrap()) - w.residual).abs() < 1e-12);
        assert!(w.iterations > 2);

        let born = born_terms(&op, &theta, w.iterations).unwrap();
        let partial = born.partial_sum(w.iterations);
        let err = partial.sub(&w.values).safe_l2_norm() / w.values.safe_l2_norm();
        assert!(err < 1e-12, "{err}");

        let kcfg = SolveConfig {
            krylov: true,
            ..SolveConfig::default()
        };
        let g = solve_ls(&op, &theta, &kcfg).unwrap();
        assert!(g.residual <= cfg.tol);
        assert!(g.iterations <= w.iterations + 1, "{} vs {}", g.iterations, w.iterations);
        let err = g.values.sub(&w.values).safe_l2_norm() / w.values.safe_l2_norm();
        assert!(err < 1e-7);
    }

    #[test]
    fn strong_potential_at_low_kappa_does_not_converge() {
        let rs = root_system(2.0, 2).unwrap();
        let spec = GridSpec::new(Dim::Two, 1.0, 32).unwrap();
        let op = ScatteringOperator::new(&smooth_rho(spec, 2000.0), &rs).unwrap();
        assert!(contraction_ratio(&op, 30, 5, 1) > 1.0);
        let err = solve_ls(&op, &[1.0, 0.0], &SolveConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn contraction_ratio_matches_born_decay() {
        let rs = root_system(10.0, 2).unwrap();
        let spec = GridSpec::new(Dim::Two, 1.0, 64).unwrap();
        let op = ScatteringOperator::new(&smooth_rho(spec, 400.0), &rs).unwrap();
        let q = contraction_ratio(&op, 40, 5, 3);
        let born = born_terms(&op, &[1.0, 0.0], 40).unwrap();
        let last = *born.ratios().last().unwrap();
        assert!(q > 0.0 && q < 1.0);
        assert!((last - q).abs() < 0.05 * q, "{last} vs {q}");
    }
}
