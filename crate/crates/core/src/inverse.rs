//! Frequency-band-averaged estimators of the Fourier transforms of the
//! covariance and relation strengths, and their inverse Fourier synthesis.
//!
//! For a direction `x̂` and shift `τ`, with `p = m + 4n - d - 1`,
//!
//! ```text
//! ĉ(2τx̂) = n² 2^m / |C_d|² · (1/Q) ∫_Q^{2Q} κ^p U₊(κ+τ) conj U₊(κ) dκ
//! r̂(2τx̂) = n² 2^m / C_d²   · (1/Q) ∫_Q^{2Q} κ^p U₊(κ+τ) U₋(κ) dκ
//! ```
//!
//! where `U₊(κ) = u^∞(x̂, -x̂, κ)` and `U₋(κ) = u^∞(-x̂, x̂, κ)`. Both converge
//! to `â^c(2τx̂)` and `â^r(2τx̂)` almost surely as `Q → ∞`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::farfield::SweepDataset;
use crate::gmig::{sample_complex_gmig, PotentialSpec};
use crate::greens::{check_direction, farfield_amplitude, farfield_exponent, root_system, FarFieldConstant};
use crate::grid::GridSpec;
use crate::stats::{fit_power_law, ComplexMean};
use crate::{Dim, Error, Result};

const LATTICE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrengthEstimate {
    pub x_hat: Vec<f64>,
    pub tau: f64,
    /// `ξ = 2τx̂`
    pub xi: Vec<f64>,
    pub c_hat: Complex64,
    pub r_hat: Complex64,
    pub q: f64,
    pub n_kappa: usize,
}

/// Exponent `m + 4n - d - 1` of the frequency weight.
pub fn weight_exponent(m: f64, n: usize, d: usize) -> f64 {
    m + 4.0 * n as f64 - d as f64 - 1.0
}

fn lattice_steps(value: f64, step: f64, what: &str) -> Result<usize> {
    let k = value / step;
    let r = k.round();
    if r < 0.0 || (k - r).abs() > LATTICE_TOL * k.abs().max(1.0) {
        return Err(Error::BandCoverage(format!(
            "{what} = {value} is not a nonnegative multiple of kappa_step = {step}"
        )));
    }
    Ok(r as usize)
}

/// Band-averaged estimate of `â^c(2τx̂)` and `â^r(2τx̂)` from one dataset,
/// using the trapezoidal rule on the dataset's wavenumber lattice.
pub fn strength_fourier_estimate(ds: &SweepDataset, x_hat: &[f64], tau: f64, m: f64, q: f64) -> Result<StrengthEstimate> {
    let d = ds.grid.d();
    check_direction(x_hat, d)?;
    let step = ds.kappa_step();
    let shift = lattice_steps(tau, step, "tau")?;
    let width = lattice_steps(q, step, "Q")?;
    let start = lattice_steps(q - ds.band.q, step, "Q - band start")?;
    if width == 0 {
        return Err(Error::BandCoverage("Q must span at least one kappa step".into()));
    }
    let last = start + width + shift;
    if last >= ds.kappas.len() {
        return Err(Error::BandCoverage(format!(
            "estimate needs kappa up to {} but the dataset ends at {}",
            2.0 * q + tau,
            ds.kappas.last().copied().unwrap_or(f64::NAN)
        )));
    }
    let j = ds.direction_index(x_hat)?;
    let plus = &ds.forward[j];
    let minus = &ds.reverse[j];
    let p = weight_exponent(m, ds.n, d.get());
    let mut c_sum = Complex64::new(0.0, 0.0);
    let mut r_sum = Complex64::new(0.0, 0.0);
    for k in start..=start + width {
        let w = if k == start || k == start + width { 0.5 } else { 1.0 };
        let weight = w * ds.kappas[k].powf(p);
        c_sum += weight * plus[k + shift] * plus[k].conj();
        r_sum += weight * plus[k + shift] * minus[k];
    }
    let cd = FarFieldConstant::new(ds.grid.d()).value;
    let n2 = (ds.n * ds.n) as f64;
    let scale = step / q * n2 * 2f64.powf(m);
    Ok(StrengthEstimate {
        x_hat: x_hat.to_vec(),
        tau,
        xi: x_hat.iter().map(|v| 2.0 * tau * v).collect(),
        c_hat: c_sum * scale / cd.norm_sqr(),
        r_hat: r_sum * scale / (cd * cd),
        q,
        n_kappa: width + 1,
    })
}

/// Estimates over a raster of directions and shifts.
pub fn estimate_raster(ds: &SweepDataset, taus: &[f64], m: f64, q: f64) -> Result<Vec<StrengthEstimate>> {
    let mut out = Vec::with_capacity(ds.directions.len() * taus.len());
    for x in &ds.directions {
        for &tau in taus {
            out.push(strength_fourier_estimate(ds, x, tau, m, q)?);
        }
    }
    Ok(out)
}

/// Fit `m` from the decay `E|u^∞|² ∝ κ^{-(m+4n-d-1)}` of the dataset's
/// backscattering amplitudes, averaged over directions within `bins`
/// equal-width wavenumber bins.
pub fn fit_order_from_decay(ds: &SweepDataset, bins: usize) -> Result<f64> {
    let len = ds.kappas.len();
    if bins < 2 || len < bins {
        return Err(Error::InsufficientSamples { needed: bins.max(2), got: len });
    }
    let per = len / bins;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for b in 0..bins {
        let range = b * per..(b + 1) * per;
        let mut power = 0.0;
        for j in 0..ds.directions.len() {
            power += range.clone().map(|k| ds.forward[j][k].norm_sqr() + ds.reverse[j][k].norm_sqr()).sum::<f64>();
        }
        xs.push(range.clone().map(|k| ds.kappas[k]).sum::<f64>() / per as f64);
        ys.push(power);
    }
    let fit = fit_power_law(&xs, &ys)?;
    Ok(-fit.slope - 4.0 * ds.n as f64 + ds.d() as f64 + 1.0)
}

/// Monte-Carlo check of the second-moment identities of Born backscattering
/// data at a single wavenumber.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpectationReport {
    pub x_hat: Vec<f64>,
    pub tau: f64,
    pub kappa: f64,
    pub n_realizations: usize,
    /// Mean of `κ^p U₊(κ+τ) conj U₊(κ)`.
    pub covariance: ComplexMean,
    pub covariance_target: Complex64,
    /// Mean of `κ^p U₊(κ+τ) U₋(κ)`.
    pub relation: ComplexMean,
    pub relation_target: Complex64,
    /// Mean of the unweighted `U₊(κ+τ) conj U₊(κ)`.
    pub unweighted_covariance: ComplexMean,
}

impl ExpectationReport {
    pub fn covariance_z(&self) -> f64 {
        self.covariance.z_score(self.covariance_target)
    }

    pub fn relation_z(&self) -> f64 {
        self.relation.z_score(self.relation_target)
    }

    pub fn covariance_relative_error(&self) -> f64 {
        (self.covariance.mean - self.covariance_target).norm() / self.covariance_target.norm()
    }

    pub fn relation_relative_error(&self) -> f64 {
        (self.relation.mean - self.relation_target).norm() / self.relation_target.norm()
    }
}

/// Independent realization seeds derived from a base seed.
pub fn realization_seeds(base: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    (0..count).map(|_| rng.next_u64()).collect()
}

/// Leading-order target `(|C_d|²/(n²2^m)) (κ/(κ+τ))^{2n-(d+1)/2} â^c(2τx̂)`
/// and its relation analogue with `C_d²` and `â^r`.
pub fn expectation_targets(spec: &PotentialSpec, x_hat: &[f64], tau: f64, kappa: f64) -> (Complex64, Complex64) {
    let d = spec.grid().d();
    let n = spec.n();
    let m = spec.m();
    let cd = FarFieldConstant::new(d).value;
    let factor = (kappa / (kappa + tau)).powf(farfield_exponent(n, d)) / ((n * n) as f64 * 2f64.powf(m));
    let xi: Vec<f64> = x_hat.iter().map(|v| 2.0 * tau * v).collect();
    (
        cd.norm_sqr() * factor * spec.covariance_strength_hat(&xi),
        cd * cd * factor * spec.relation_strength_hat(&xi),
    )
}

pub fn expectation_check(
    spec: &Arc<PotentialSpec>,
    x_hat: &[f64],
    tau: f64,
    kappa: f64,
    n_realizations: usize,
    seed: u64,
) -> Result<ExpectationReport> {
    const MIN_REALIZATIONS: usize = 50;
    if n_realizations < MIN_REALIZATIONS {
        return Err(Error::InsufficientSamples {
            needed: MIN_REALIZATIONS,
            got: n_realizations,
        });
    }
    let grid: GridSpec = *spec.grid();
    let d = grid.d();
    check_direction(x_hat, d)?;
    if !(tau >= 0.0) {
        return Err(Error::Domain(format!("tau must be nonnegative, got {tau}")));
    }
    let n = spec.n();
    let a0 = farfield_amplitude(&root_system(kappa, n)?, d);
    let a1 = farfield_amplitude(&root_system(kappa + tau, n)?, d);
    let p = weight_exponent(spec.m(), n, d.get());
    let weight = kappa.powf(p);
    let xi = |k: f64, s: f64| -> Vec<f64> { x_hat.iter().map(|v| 2.0 * k * s * v).collect() };
    let (xi_p0, xi_m0, xi_p1) = (xi(kappa, 1.0), xi(kappa, -1.0), xi(kappa + tau, 1.0));
    let seeds = realization_seeds(seed, n_realizations);
    let samples: Vec<(Complex64, Complex64)> = seeds
        .par_iter()
        .map(|&s| {
            let r = sample_complex_gmig(spec, &grid, s)?;
            let support = r.support();
            let up0 = a0 * support.fourier_at(&xi_p0);
            let um0 = a0 * support.fourier_at(&xi_m0);
            let up1 = a1 * support.fourier_at(&xi_p1);
            Ok((up1 * up0.conj(), up1 * um0))
        })
        .collect::<Result<_>>()?;
    let cov: Vec<Complex64> = samples.iter().map(|s| s.0 * weight).collect();
    let rel: Vec<Complex64> = samples.iter().map(|s| s.1 * weight).collect();
    let raw: Vec<Complex64> = samples.iter().map(|s| s.0).collect();
    let (ct, rt) = expectation_targets(spec, x_hat, tau, kappa);
    Ok(ExpectationReport {
        x_hat: x_hat.to_vec(),
        tau,
        kappa,
        n_realizations,
        covariance: ComplexMean::from_samples(&cov)?,
        covariance_target: ct,
        relation: ComplexMean::from_samples(&rel)?,
        relation_target: rt,
        unweighted_covariance: ComplexMean::from_samples(&raw)?,
    })
}

/// How well the sampled frequencies cover the plane (or space).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub radii: Vec<f64>,
    pub n_directions: usize,
    /// Outer radius of the covered disc or ball (last sampled radius plus half
    /// a radial step).
    pub max_frequency: f64,
    /// Largest angular gap between sampled directions (after adding the
    /// mirrored directions), in radians.
    pub largest_angular_gap: f64,
    /// Set when some cone of directions is left unsampled.
    pub unsampled_cone: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub estimates: Vec<StrengthEstimate>,
    pub grid: GridSpec,
    pub a_c: Vec<f64>,
    pub a_r: Vec<f64>,
    /// Largest imaginary part of the synthesized grids relative to the
    /// largest real part.
    pub imag_residue_c: f64,
    pub imag_residue_r: f64,
    pub coverage: CoverageReport,
}

/// Relative discrete `L²` error `‖a - b‖ / ‖b‖`.
pub fn relative_l2_error(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

struct PolarNode {
    xi: Vec<f64>,
    c: Complex64,
    r: Complex64,
    weight: f64,
}

fn key(v: f64) -> i64 {
    (v * 1e8).round() as i64
}

/// Inverse Fourier synthesis `a(x) = (2π)^{-d} Σ_ξ w(ξ) â(ξ) e^{ix·ξ}` from
/// polar samples, after Hermitian symmetrization of both strengths.
pub fn reconstruct_strengths(estimates: &[StrengthEstimate], target: &GridSpec) -> Result<ReconstructionResult> {
    let d = target.dim();
    if estimates.is_empty() {
        return Err(Error::Coverage("no estimates to reconstruct from".into()));
    }
    if estimates.iter().any(|e| e.x_hat.len() != d) {
        return Err(Error::Domain("estimate dimension differs from the target grid".into()));
    }
    // Merge ξ and -ξ samples: the strengths are real, so â(-ξ) = conj â(ξ).
    let mut nodes: Vec<(Vec<f64>, Complex64, Complex64, usize)> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for e in estimates {
        for sign in [1.0, -1.0] {
            let xi: Vec<f64> = e.xi.iter().map(|v| sign * v).collect();
            let (c, r) = if sign > 0.0 { (e.c_hat, e.r_hat) } else { (e.c_hat.conj(), e.r_hat.conj()) };
            let k: Vec<i64> = xi.iter().map(|v| key(*v)).collect();
            match index.get(&k) {
                Some(&i) => {
                    let node: &mut (Vec<f64>, Complex64, Complex64, usize) = &mut nodes[i];
                    node.1 += c;
                    node.2 += r;
                    node.3 += 1;
                }
                None => {
                    index.insert(k, nodes.len());
                    nodes.push((xi, c, r, 1));
                }
            }
        }
    }
    let radius_of = |xi: &[f64]| xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut radii: Vec<f64> = nodes.iter().map(|n| radius_of(&n.0)).collect();
    radii.sort_by(|a, b| a.total_cmp(b));
    radii.dedup_by(|a, b| (*a - *b).abs() < 1e-8);
    let spacing = if radii.len() > 1 {
        radii.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };
    if radii.len() < 2 || radii[0] > spacing + 1e-8 {
        return Err(Error::Coverage(format!(
            "sampled radii {:?} miss the low frequencies that carry the strength",
            &radii[..radii.len().min(3)]
        )));
    }
    // Trapezoidal rule in the radius, with the Euler-Maclaurin endpoint
    // correction at the origin: the radial integrand r^{d-1} g(r) is odd or
    // even, which makes the rule fourth-order accurate.
    let radial_weight = |i: usize| -> f64 {
        let r = radii[i];
        let gap = if i + 1 == radii.len() {
            radii[i] - radii[i - 1]
        } else if i == 0 {
            0.0
        } else {
            0.5 * (radii[i + 1] - radii[i - 1])
        };
        r.powi(d as i32 - 1) * gap
    };
    let origin_weight = {
        let h = radii[1];
        if d == 2 {
            2.0 * PI * h * h / 12.0
        } else {
            -4.0 * PI * h * h * h / 120.0
        }
    };
    let mut polar: Vec<PolarNode> = Vec::with_capacity(nodes.len());
    let mut largest_gap: f64 = 0.0;
    for (i, &rad) in radii.iter().enumerate() {
        let ring: Vec<usize> = (0..nodes.len())
            .filter(|&k| (radius_of(&nodes[k].0) - rad).abs() < 1e-8)
            .collect();
        let radial = radial_weight(i);
        if rad < 1e-12 {
            for &k in &ring {
                let nd = &nodes[k];
                polar.push(PolarNode {
                    xi: nd.0.clone(),
                    c: nd.1 / nd.3 as f64,
                    r: nd.2 / nd.3 as f64,
                    weight: origin_weight / ring.len() as f64,
                });
            }
            continue;
        }
        let angular: Vec<f64> = if d == 2 {
            let mut ang: Vec<(f64, usize)> = ring.iter().map(|&k| (nodes[k].0[1].atan2(nodes[k].0[0]), k)).collect();
            ang.sort_by(|a, b| a.0.total_cmp(&b.0));
            let len = ang.len();
            let mut w = vec![0.0; nodes.len()];
            for t in 0..len {
                let prev = if t == 0 { ang[len - 1].0 - 2.0 * PI } else { ang[t - 1].0 };
                let next = if t + 1 == len { ang[0].0 + 2.0 * PI } else { ang[t + 1].0 };
                let gap = if len == 1 { 2.0 * PI } else { next - ang[t].0 };
                largest_gap = largest_gap.max(gap);
                w[ang[t].1] = if len == 1 { 2.0 * PI } else { 0.5 * (next - prev) };
            }
            ring.iter().map(|&k| w[k]).collect()
        } else {
            for &a in &ring {
                let nearest = ring
                    .iter()
                    .filter(|&&b| b != a)
                    .map(|&b| {
                        let cos = nodes[a].0.iter().zip(&nodes[b].0).map(|(x, y)| x * y).sum::<f64>() / (rad * rad);
                        cos.clamp(-1.0, 1.0).acos()
                    })
                    .fold(PI, f64::min);
                largest_gap = largest_gap.max(2.0 * nearest);
            }
            vec![4.0 * PI / ring.len() as f64; ring.len()]
        };
        for (&k, &ang) in ring.iter().zip(&angular) {
            let nd = &nodes[k];
            polar.push(PolarNode {
                xi: nd.0.clone(),
                c: nd.1 / nd.3 as f64,
                r: nd.2 / nd.3 as f64,
                weight: ang * radial,
            });
        }
    }
    let norm = (2.0 * PI).powi(d as i32).recip();
    let synth: Vec<(Complex64, Complex64)> = (0..target.len())
        .into_par_iter()
        .map(|i| {
            let x = target.point(i);
            let mut c = Complex64::new(0.0, 0.0);
            let mut r = Complex64::new(0.0, 0.0);
            for node in &polar {
                let phase = Complex64::from_polar(node.weight, node.xi.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>());
                c += node.c * phase;
                r += node.r * phase;
            }
            (c * norm, r * norm)
        })
        .collect();
    let residue = |f: &dyn Fn(&(Complex64, Complex64)) -> Complex64| -> f64 {
        let re = synth.iter().map(|s| f(s).re.abs()).fold(0.0, f64::max);
        let im = synth.iter().map(|s| f(s).im.abs()).fold(0.0, f64::max);
        if re == 0.0 {
            im
        } else {
            im / re
        }
    };
    let imag_residue_c = residue(&|s| s.0);
    let imag_residue_r = residue(&|s| s.1);
    let n_directions = {
        let mut dirs: Vec<Vec<i64>> = estimates.iter().map(|e| e.x_hat.iter().map(|v| key(*v)).collect()).collect();
        dirs.sort();
        dirs.dedup();
        dirs.len()
    };
    let max_frequency = radii[radii.len() - 1] + 0.5 * (radii[radii.len() - 1] - radii[radii.len() - 2]);
    Ok(ReconstructionResult {
        estimates: estimates.to_vec(),
        grid: *target,
        a_c: synth.iter().map(|s| s.0.re).collect(),
        a_r: synth.iter().map(|s| s.1.re).collect(),
        imag_residue_c,
        imag_residue_r,
        coverage: CoverageReport {
            radii,
            n_directions,
            max_frequency,
            largest_angular_gap: largest_gap,
            unsampled_cone: largest_gap > PI / 4.0 + 1e-9,
        },
    })
}

/// Uniformly spaced directions on the upper half circle (2D) or a Fibonacci
/// set on the upper hemisphere (3D); mirrored directions are implied by the
/// backscattering data.
pub fn default_directions(d: Dim, count: usize) -> Vec<Vec<f64>> {
    match d {
        Dim::Two => (0..count)
            .map(|j| {
                let t = PI * j as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        Dim::Three => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|j| {
                    let z = 1.0 - (j as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * j as f64;
                    vec![r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::farfield::{backscatter_sweep, Band};
    use crate::forward::{BornOrder, SolveConfig};
    use crate::gmig::{Bump, StrengthGrid};
    use crate::grid::ComplexField;

    fn born1() -> SolveConfig {
        SolveConfig {
            born_order: BornOrder::Order(1),
            ..SolveConfig::default()
        }
    }

    fn bump_grid(spec: GridSpec, r: f64) -> StrengthGrid {
        StrengthGrid::from_bumps(
            spec,
            &[Bump {
                amplitude: 1.0,
                center: vec![0.0; spec.dim()],
                radius: r,
            }],
        )
        .unwrap()
    }

    #[test]
    fn zero_potential_gives_zero_estimates() {
        let spec = GridSpec::new(Dim::Two, 1.0, 32).unwrap();
        let band = Band::new(4.0, 1.0, 0.5).unwrap();
        let ds = backscatter_sweep(&ComplexField::zeros(spec), 2, &[vec![1.0, 0.0]], &band, &born1(), 0).unwrap();
        let e = strength_fourier_estimate(&ds, &[1.0, 0.0], 0.5, 2.0, 4.0).unwrap();
        assert_eq!(e.c_hat, Complex64::new(0.0, 0.0));
        assert_eq!(e.r_hat, Complex64::new(0.0, 0.0));
        assert_eq!(e.n_kappa, 9);
    }

    #[test]
    fn coverage_and_orientation_errors() {
        let spec = GridSpec::new(Dim::Two, 1.0, 32).unwrap();
        let band = Band::new(4.0, 1.0, 0.5).unwrap();
        let ds = backscatter_sweep(&ComplexField::zeros(spec), 2, &[vec![1.0, 0.0]], &band, &born1(), 0).unwrap();
        assert!(matches!(strength_fourier_estimate(&ds, &[1.0, 0.0], 0.3, 2.0, 4.0), Err(Error::BandCoverage(_))));
        assert!(matches!(strength_fourier_estimate(&ds, &[1.0, 0.0], 1.5, 2.0, 4.0), Err(Error::BandCoverage(_))));
        assert!(matches!(strength_fourier_estimate(&ds, &[0.0, 1.0], 0.5, 2.0, 4.0), Err(Error::OrientationMissing(_))));
    }

    #[test]
    fn deterministic_plane_wave_data_is_inverted_exactly() {
        // Synthetic data U₊(κ) = A(κ)·κ^{-m/2}·2^{-m/2}·e^{iκs}: the band average
        // of κ^p U₊(κ+τ) conj U₊(κ) is known in closed form.
        let spec = GridSpec::new(Dim::Two, 1.0, 16).unwrap();
        let band = Band::new(10.0, 2.0, 0.25).unwrap();
        let m = 2.0;
        let s = 0.3;
        let kappas = band.kappas();
        let series: Vec<Complex64> = kappas
            .iter()
            .map(|&k| {
                let a = farfield_amplitude(&root_system(k, 2).unwrap(), Dim::Two);
                a * (2.0 * k).powf(-m / 2.0) * Complex64::from_polar(1.0, k * s)
            })
            .collect();
        let ds = SweepDataset {
            grid: spec,
            n: 2,
            band,
            directions: vec![vec![1.0, 0.0]],
            kappas: kappas.clone(),
            forward: vec![series.clone()],
            reverse: vec![series.iter().map(|v| v.conj()).collect()],
            born_order: BornOrder::Order(1),
            seed: 0,
        };
        let tau = 1.0;
        let e = strength_fourier_estimate(&ds, &[1.0, 0.0], tau, m, 10.0).unwrap();
        // integrand is (κ/(κ+τ))^{…+m/2} e^{iτs}, averaged over [Q, 2Q]
        let pw = farfield_exponent(2, Dim::Two) + m / 2.0;
        let exact: f64 = {
            let f = |k: f64| (k / (k + tau)).powf(pw);
            let steps = 4000;
            let h = 10.0 / steps as f64;
            (0..=steps).map(|i| {
                let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
                w * f(10.0 + i as f64 * h)
            }).sum::<f64>() * h / 10.0
        };
        let expected = Complex64::from_polar(exact, tau * s);
        assert!((e.c_hat - expected).norm() < 1e-4, "{} vs {}", e.c_hat, expected);
    }

    #[test]
    fn reconstruction_of_zero_is_zero() {
        let spec = GridSpec::new(Dim::Two, 1.0, 16).unwrap();
        let est: Vec<StrengthEstimate> = (0..4)
            .flat_map(|k| {
                default_directions(Dim::Two, 4).into_iter().map(move |x| StrengthEstimate {
                    xi: x.iter().map(|v| 2.0 * 0.5 * k as f64 * v).collect(),
                    x_hat: x,
                    tau: 0.5 * k as f64,
                    c_hat: Complex64::new(0.0, 0.0),
                    r_hat: Complex64::new(0.0, 0.0),
                    q: 1.0,
                    n_kappa: 1,
                })
            })
            .collect();
        let r = reconstruct_strengths(&est, &spec).unwrap();
        assert!(r.a_c.iter().chain(&r.a_r).all(|v| *v == 0.0));
        assert!(!r.coverage.unsampled_cone);
        assert!(reconstruct_strengths(&[], &spec).is_err());
        // raster that starts away from the origin misses the bulk of the strength
        let shifted: Vec<StrengthEstimate> = est.iter().filter(|e| e.tau > 0.6).cloned().collect();
        assert!(matches!(reconstruct_strengths(&shifted, &spec), Err(Error::Coverage(_))));
    }

    #[test]
    fn exact_transforms_reconstruct_a_bump() {
        let spec = GridSpec::new(Dim::Two, 1.0, 32).unwrap();
        let a = bump_grid(spec, 0.45);
        let taus: Vec<f64> = (0..48).map(|k| 0.5 * k as f64).collect();
        let est: Vec<StrengthEstimate> = default_directions(Dim::Two, 48)
            .into_iter()
            .flat_map(|x| {
                let a = &a;
                taus.iter().map(move |&t| {
                    let xi: Vec<f64> = x.iter().map(|v| 2.0 * t * v).collect();
                    let v = a.fourier_at(&xi);
                    StrengthEstimate {
                        x_hat: x.clone(),
                        tau: t,
                        xi,
                        c_hat: v,
                        r_hat: v,
                        q: 1.0,
                        n_kappa: 1,
                    }
                })
            })
            .collect();
        let r = reconstruct_strengths(&est, &spec).unwrap();
        let err = relative_l2_error(&r.a_c, a.values());
        assert!(err < 0.02, "{err}");
        assert!(r.imag_residue_c < 1e-10);
    }

    #[test]
    fn single_direction_flags_unsampled_cone() {
        let spec = GridSpec::new(Dim::Two, 1.0, 16).unwrap();
        let est: Vec<StrengthEstimate> = (0..4)
            .map(|k| StrengthEstimate {
                x_hat: vec![1.0, 0.0],
                tau: k as f64,
                xi: vec![2.0 * k as f64, 0.0],
                c_hat: Complex64::new(1.0, 0.0),
                r_hat: Complex64::new(1.0, 0.0),
                q: 1.0,
                n_kappa: 1,
            })
            .collect();
        let r = reconstruct_strengths(&est, &spec).unwrap();
        assert!(r.coverage.unsampled_cone);
        assert!((r.coverage.largest_angular_gap - PI).abs() < 1e-12);
    }

    #[test]
    fn insufficient_realizations_are_rejected() {
        let spec = GridSpec::new(Dim::Two, 1.0, 32).unwrap();
        let a = bump_grid(spec, 0.3);
        let p = Arc::new(PotentialSpec::new(2, a.clone(), 2.0, a, 2.0).unwrap());
        assert!(matches!(
            expectation_check(&p, &[1.0, 0.0], 0.0, 8.0, 10, 1),
            Err(Error::InsufficientSamples { .. })
        ));
    }
}
