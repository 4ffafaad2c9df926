//! Far-field patterns from the integral representation of the scattered field
//! and backscattering sweeps over a frequency band.
//!
//! With `A(κ) = -(C_d/n) κ^{-(2n-(d+1)/2)}` the far-field pattern is
//! `u^∞(x̂, θ, κ) = A(κ) ∫ e^{-iκx̂·y} ρ(y) u(y) dy`. Replacing `u` by the
//! incident wave gives the Born approximation; for backscattering (`θ = -x̂`)
//! this is `A(κ) ρ̂(2κx̂)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::forward::{born_terms, solve_ls, BornOrder, ScatteringOperator, SolveConfig, WaveField};
use crate::greens::{check_direction, dot, farfield_amplitude, root_system, RootSystem};
use crate::grid::{ComplexField, GridSpec, SupportSamples};
use crate::{Error, Result};

/// Direction-matching tolerance used when looking up records.
const DIRECTION_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FarFieldRecord {
    pub x_hat: Vec<f64>,
    pub theta: Vec<f64>,
    pub kappa: f64,
    pub value: Complex64,
    pub born_order: BornOrder,
}

/// `A(κ) Σ_y e^{-iκx̂·y} ρ(y) u(y) h^d` for an arbitrary field `u`.
pub fn farfield_of_field(u: &ComplexField, rho: &ComplexField, x_hat: &[f64], rs: &RootSystem) -> Result<Complex64> {
    let spec = *rho.spec();
    check_direction(x_hat, spec.d())?;
    if u.spec() != rho.spec() {
        return Err(Error::Domain("field and potential live on different grids".into()));
    }
    let kappa = rs.kappa();
    let d = spec.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, (r, v)) in rho.values().iter().zip(u.values()).enumerate() {
        if r.re == 0.0 && r.im == 0.0 {
            continue;
        }
        let y = spec.point(i);
        acc += r * v * Complex64::from_polar(1.0, -kappa * dot(x_hat, &y[..d]));
    }
    Ok(farfield_amplitude(rs, spec.d()) * acc * spec.cell_volume())
}

/// Far field of a solved total field.
pub fn farfield_from_total(u: &WaveField, rho: &ComplexField, x_hat: &[f64], rs: &RootSystem) -> Result<Complex64> {
    if (u.kappa - rs.kappa()).abs() > 1e-12 * rs.kappa() {
        return Err(Error::Domain(format!(
            "field was solved at kappa = {}, root system has {}",
            u.kappa,
            rs.kappa()
        )));
    }
    farfield_of_field(&u.values, rho, x_hat, rs)
}

/// Born backscattering far field `u₁^∞(x̂, -x̂, κ) = A(κ) ρ̂(2κx̂)` at the
/// wavenumber of `rs`, by direct summation over the support of `ρ`.
pub fn born1_farfield(rho: &ComplexField, x_hat: &[f64], rs: &RootSystem) -> Result<Complex64> {
    let spec = rho.spec();
    check_direction(x_hat, spec.d())?;
    let xi: Vec<f64> = x_hat.iter().map(|v| 2.0 * rs.kappa() * v).collect();
    let hat = SupportSamples::from_field(rho).fourier_at(&xi);
    Ok(farfield_amplitude(rs, spec.d()) * hat)
}

/// Uniform wavenumber lattice `Q, Q + δ, …` covering `[Q, 2Q + τ_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub q: f64,
    pub tau_max: f64,
    pub kappa_step: f64,
}

impl Band {
    pub fn new(q: f64, tau_max: f64, kappa_step: f64) -> Result<Self> {
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::Domain(format!("band start Q must be positive, got {q}")));
        }
        if !(tau_max >= 0.0 && tau_max.is_finite()) {
            return Err(Error::Domain(format!("tau_max must be nonnegative, got {tau_max}")));
        }
        if !(kappa_step > 0.0 && kappa_step.is_finite()) {
            return Err(Error::Domain(format!("kappa_step must be positive, got {kappa_step}")));
        }
        Ok(Self { q, tau_max, kappa_step })
    }

    pub fn upper(&self) -> f64 {
        2.0 * self.q + self.tau_max
    }

    pub fn len(&self) -> usize {
        let span = (self.upper() - self.q) / self.kappa_step;
        (span - 1e-9).ceil() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn kappa(&self, k: usize) -> f64 {
        self.q + k as f64 * self.kappa_step
    }

    pub fn kappas(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.kappa(k)).collect()
    }
}

/// Backscattering data for a set of directions over a wavenumber lattice.
/// `forward[j][k] = u^∞(x̂_j, -x̂_j, κ_k)` and
/// `reverse[j][k] = u^∞(-x̂_j, x̂_j, κ_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepDataset {
    pub grid: GridSpec,
    pub n: usize,
    pub band: Band,
    pub directions: Vec<Vec<f64>>,
    pub kappas: Vec<f64>,
    pub forward: Vec<Vec<Complex64>>,
    pub reverse: Vec<Vec<Complex64>>,
    pub born_order: BornOrder,
    pub seed: u64,
}

impl SweepDataset {
    pub fn d(&self) -> usize {
        self.grid.dim()
    }

    pub fn kappa_step(&self) -> f64 {
        self.band.kappa_step
    }

    pub fn direction_index(&self, x_hat: &[f64]) -> Result<usize> {
        self.directions
            .iter()
            .position(|d| d.len() == x_hat.len() && d.iter().zip(x_hat).all(|(a, b)| (a - b).abs() < DIRECTION_TOL))
            .ok_or_else(|| Error::OrientationMissing(format!("direction {x_hat:?} not in dataset")))
    }

    /// All records, both orientations, in direction-major order.
    pub fn records(&self) -> Vec<FarFieldRecord> {
        let mut out = Vec::with_capacity(2 * self.directions.len() * self.kappas.len());
        for (j, x) in self.directions.iter().enumerate() {
            let minus: Vec<f64> = x.iter().map(|v| -v).collect();
            for (k, &kappa) in self.kappas.iter().enumerate() {
                out.push(FarFieldRecord {
                    x_hat: x.clone(),
                    theta: minus.clone(),
                    kappa,
                    value: self.forward[j][k],
                    born_order: self.born_order,
                });
                out.push(FarFieldRecord {
                    x_hat: minus.clone(),
                    theta: x.clone(),
                    kappa,
                    value: self.reverse[j][k],
                    born_order: self.born_order,
                });
            }
        }
        out
    }

    /// Rebuild from records, which must contain both orientations for every
    /// direction at every lattice wavenumber.
    #[allow(clippy::too_many_arguments)]
    pub fn from_records(
        grid: GridSpec,
        n: usize,
        band: Band,
        directions: Vec<Vec<f64>>,
        born_order: BornOrder,
        seed: u64,
        records: &[FarFieldRecord],
    ) -> Result<Self> {
        let kappas = band.kappas();
        let nan = Complex64::new(f64::NAN, f64::NAN);
        let mut forward = vec![vec![nan; kappas.len()]; directions.len()];
        let mut reverse = forward.clone();
        let close = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < DIRECTION_TOL);
        for r in records {
            let k = ((r.kappa - band.q) / band.kappa_step).round();
            if k < 0.0 || k as usize >= kappas.len() || (kappas[k as usize] - r.kappa).abs() > 1e-9 * r.kappa.max(1.0) {
                return Err(Error::BandCoverage(format!("record at kappa = {} is off the lattice", r.kappa)));
            }
            let k = k as usize;
            let minus: Vec<f64> = r.x_hat.iter().map(|v| -v).collect();
            if !close(&r.theta, &minus) {
                return Err(Error::Format("record is not a backscattering observation".into()));
            }
            for (j, d) in directions.iter().enumerate() {
                let neg: Vec<f64> = d.iter().map(|v| -v).collect();
                if close(&r.x_hat, d) {
                    forward[j][k] = r.value;
                } else if close(&r.x_hat, &neg) {
                    reverse[j][k] = r.value;
                }
            }
        }
        for (j, d) in directions.iter().enumerate() {
            if let Some(k) = forward[j].iter().chain(&reverse[j]).position(|v| v.re.is_nan()) {
                return Err(Error::OrientationMissing(format!(
                    "direction {d:?} lacks a record at lattice index {}",
                    k % kappas.len()
                )));
            }
        }
        Ok(Self {
            grid,
            n,
            band,
            directions,
            kappas,
            forward,
            reverse,
            born_order,
            seed,
        })
    }
}

/// Compute `u^∞(x̂, -x̂, κ)` and `u^∞(-x̂, x̂, κ)` for every direction and every
/// lattice wavenumber of `band`, at the Born order of `cfg`.
pub fn backscatter_sweep(
    rho: &ComplexField,
    n: usize,
    directions: &[Vec<f64>],
    band: &Band,
    cfg: &SolveConfig,
    seed: u64,
) -> Result<SweepDataset> {
    let grid = *rho.spec();
    if directions.is_empty() {
        return Err(Error::Domain("sweep needs at least one direction".into()));
    }
    for x in directions {
        check_direction(x, grid.d())?;
    }
    let kappas = band.kappas();
    let (forward, reverse) = match cfg.born_order {
        BornOrder::Order(1) => born1_sweep(rho, n, directions, band)?,
        _ => solved_sweep(rho, n, directions, &kappas, cfg)?,
    };
    Ok(SweepDataset {
        grid,
        n,
        band: *band,
        directions: directions.to_vec(),
        kappas,
        forward,
        reverse,
        born_order: cfg.born_order,
        seed,
    })
}

type Series = Vec<Vec<Complex64>>;

fn born1_sweep(rho: &ComplexField, n: usize, directions: &[Vec<f64>], band: &Band) -> Result<(Series, Series)> {
    let support = SupportSamples::from_field(rho);
    let d = rho.spec().d();
    let amplitudes: Vec<Complex64> = band
        .kappas()
        .iter()
        .map(|&k| Ok(farfield_amplitude(&root_system(k, n)?, d)))
        .collect::<Result<_>>()?;
    let count = band.len();
    let rows: Vec<(Vec<Complex64>, Vec<Complex64>)> = directions
        .par_iter()
        .map(|x| {
            let (plus, minus) = support.fourier_along_ray(x, 2.0 * band.q, 2.0 * band.kappa_step, count);
            (
                plus.iter().zip(&amplitudes).map(|(a, b)| a * b).collect(),
                minus.iter().zip(&amplitudes).map(|(a, b)| a * b).collect(),
            )
        })
        .collect();
    Ok(rows.into_iter().unzip())
}

/// Far field at one wavenumber for incidence `θ = -x̂`, observed at `x̂`.
pub fn backscatter_value(op: &ScatteringOperator, x_hat: &[f64], cfg: &SolveConfig) -> Result<Complex64> {
    let theta: Vec<f64> = x_hat.iter().map(|v| -v).collect();
    let field = match cfg.born_order {
        BornOrder::Order(j) => born_terms(op, &theta, j.saturating_sub(1).max(1))?.partial_sum(j),
        BornOrder::Converge => solve_ls(op, &theta, cfg)?.values,
    };
    farfield_of_field(&field, op.rho(), x_hat, op.roots())
}

fn solved_sweep(
    rho: &ComplexField,
    n: usize,
    directions: &[Vec<f64>],
    kappas: &[f64],
    cfg: &SolveConfig,
) -> Result<(Series, Series)> {
    let columns: Vec<Vec<(Complex64, Complex64)>> = kappas
        .par_iter()
        .map(|&kappa| {
            let rs = root_system(kappa, n)?;
            let op = ScatteringOperator::new(rho, &rs)?;
            directions
                .iter()
                .map(|x| {
                    let minus: Vec<f64> = x.iter().map(|v| -v).collect();
                    Ok((backscatter_value(&op, x, cfg)?, backscatter_value(&op, &minus, cfg)?))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut forward = vec![Vec::with_capacity(kappas.len()); directions.len()];
    let mut reverse = forward.clone();
    for col in columns {
        for (j, (f, r)) in col.into_iter().enumerate() {
            forward[j].push(f);
            reverse[j].push(r);
        }
    }
    Ok((forward, reverse))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::incident_wave;
    use crate::Dim;

    fn gaussian(spec: GridSpec, s2: f64) -> ComplexField {
        ComplexField::from_fn(spec, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            Complex64::new((-r2 / (2.0 * s2)).exp(), 0.0)
        })
    }

    fn bump_rho(spec: GridSpec, amp: Complex64) -> ComplexField {
        ComplexField::from_fn(spec, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum::<f64>() / 0.2;
            if r2 < 1.0 {
                amp * (1.0 - 1.0 / (1.0 - r2)).exp() * (1.0 + x[0])
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn band_counting() {
        let b = Band::new(8.0, 0.0, 0.25).unwrap();
        assert_eq!(b.len(), 33);
        assert_eq!(b.kappa(32), 16.0);
        let b = Band::new(8.0, 1.0, 0.25).unwrap();
        assert_eq!(b.len(), 37);
        assert!(Band::new(0.0, 0.0, 0.25).is_err());
    }

    #[test]
    fn gaussian_born_value() {
        // |y|² / (2·0.25) Gaussian on a box wide enough for it to decay
        let spec = GridSpec::new(Dim::Two, 8.0, 256).unwrap();
        let rho = gaussian(spec, 0.25).masked_to_safe_box();
        let rs = root_system(4.0, 2).unwrap();
        let v = born1_farfield(&rho, &[1.0, 0.0], &rs).unwrap();
        let c2 = Complex64::from_polar((8.0 * std::f64::consts::PI).sqrt().recip(), std::f64::consts::FRAC_PI_4);
        let expected = -(c2 / 2.0) * 4f64.powf(-2.5) * (2.0 * std::f64::consts::PI * 0.25 * (-8.0f64).exp());
        assert!((v - expected).norm() < 1e-10 * expected.norm());
        assert!((v.re + 1.16e-6).abs() < 0.01e-6 && (v.im + 1.16e-6).abs() < 0.01e-6);
    }

    #[test]
    fn zero_potential_scatters_nothing() {
        let spec = GridSpec::new(Dim::Two, 1.0, 32).unwrap();
        let rho = ComplexField::zeros(spec);
        let rs = root_system(5.0, 2).unwrap();
        assert_eq!(born1_farfield(&rho, &[0.0, 1.0], &rs).unwrap(), Complex64::new(0.0, 0.0));
        let band = Band::new(5.0, 0.0, 0.5).unwrap();
        let ds = backscatter_sweep(&rho, 2, &[vec![1.0, 0.0]], &band, &SolveConfig::default(), 0).unwrap();
        assert!(ds.forward[0].iter().chain(&ds.reverse[0]).all(|v| v.norm() == 0.0));
    }

    #[test]
    fn incident_substitution_equals_born() {
        let spec = GridSpec::new(Dim::Two, 1.0, 64).unwrap();
        let rho = bump_rho(spec, Complex64::new(30.0, 10.0));
        let rs = root_system(7.0, 3).unwrap();
        let x = [0.6, -0.8];
        let ui = incident_wave(&[-0.6, 0.8], 7.0, &spec).unwrap();
        let a = farfield_of_field(&ui, &rho, &x, &rs).unwrap();
        let b = born1_farfield(&rho, &x, &rs).unwrap();
        assert!((a - b).norm() < 1e-13 * b.norm());
    }

    #[test]
    fn real_potential_has_symmetric_backscatter() {
        let spec = GridSpec::new(Dim::Two, 1.0, 64).unwrap();
        let rho = bump_rho(spec, Complex64::new(1.0, 0.0));
        let rs = root_system(9.0, 2).unwrap();
        let plus = born1_farfield(&rho, &[0.6, 0.8], &rs).unwrap();
        let minus = born1_farfield(&rho, &[-0.6, -0.8], &rs).unwrap();
        let a = farfield_amplitude(&rs, Dim::Two);
        assert!((minus / a - (plus / a).conj()).norm() < 1e-13 * plus.norm() / a.norm());
    }

    #[test]
    fn born1_sweep_matches_pointwise_calls_and_is_linear() {
        let spec = GridSpec::new(Dim::Two, 1.0, 64).unwrap();
        let rho = bump_rho(spec, Complex64::new(2.0, -1.0));
        let dirs = vec![vec![1.0, 0.0], vec![0.0, -1.0]];
        let band = Band::new(6.0, 1.0, 0.25).unwrap();
        let cfg = SolveConfig {
            born_order: BornOrder::Order(1),
            ..SolveConfig::default()
        };
        let ds = backscatter_sweep(&rho, 2, &dirs, &band, &cfg, 1).unwrap();
        for (j, x) in dirs.iter().enumerate() {
            let minus: Vec<f64> = x.iter().map(|v| -v).collect();
            for k in [0, 7, band.len() - 1] {
                let rs = root_system(band.kappa(k), 2).unwrap();
                let f = born1_farfield(&rho, x, &rs).unwrap();
                let r = born1_farfield(&rho, &minus, &rs).unwrap();
                assert!((ds.forward[j][k] - f).norm() < 1e-12 * f.norm());
                assert!((ds.reverse[j][k] - r).norm() < 1e-12 * r.norm());
            }
        }
        let alpha = Complex64::new(-0.5, 2.0);
        let scaled = backscatter_sweep(&rho.scaled(alpha), 2, &dirs, &band, &cfg, 1).unwrap();
        for (a, b) in scaled.forward[1].iter().zip(&ds.forward[1]) {
            assert!((a - alpha * b).norm() < 1e-12 * a.norm());
        }
        let records = ds.records();
        assert_eq!(records.len(), 2 * 2 * band.len());
        let back = SweepDataset::from_records(spec, 2, band, dirs.clone(), cfg.born_order, 1, &records).unwrap();
        assert_eq!(back, ds);
        assert!(SweepDataset::from_records(spec, 2, band, dirs, cfg.born_order, 1, &records[1..]).is_err());
    }

    #[test]
    fn higher_order_sweeps_approach_full_solve() {
        let spec = GridSpec::new(Dim::Two, 1.0, 32).unwrap();
        let rho = bump_rho(spec, Complex64::new(150.0, 40.0));
        let dirs = vec![vec![0.6, 0.8]];
        let band = Band::new(10.0, 0.0, 5.0).unwrap();
        let full = backscatter_sweep(&rho, 2, &dirs, &band, &SolveConfig::default(), 0).unwrap();
        let mut errors = Vec::new();
        for j in 1..=4 {
            let cfg = SolveConfig {
                born_order: BornOrder::Order(j),
                ..SolveConfig::default()
            };
            let ds = backscatter_sweep(&rho, 2, &dirs, &band, &cfg, 0).unwrap();
            errors.push((ds.forward[0][0] - full.forward[0][0]).norm());
        }
        assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    }
}
