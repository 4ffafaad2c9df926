//! Generalized microlocally isotropic Gaussian (GMIG) random potentials.
//!
//! A real GMIG field of order `m` with strength `a` is synthesized as
//! `ρ = √a · (-Δ)^{-m/4} Ẇ` on the periodic grid, where `Ẇ` is white noise with
//! unit spectral density (variance `1/h^d` per cell). Its covariance symbol is
//! `a(x)|ξ|^{-m}` up to lower order terms, so `E|ρ̂(ξ)|² ≈ (∫a) |ξ|^{-m}`.
//! Complex potentials combine two independent real fields, `ρ = ρ₁ + iρ₂`.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::grid::{apply_radial_symbol, fft, ComplexField, GridSpec, SupportSamples};
use crate::stats::ComplexMean;
use crate::{Error, Result};

/// Isotropic C^∞ bump `A·exp(1 - 1/(1 - |x-c|²/R²))` supported in the ball of
/// radius `R` around `c`; its peak value is `A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Bump {
    pub fn value(&self, x: &[f64]) -> f64 {
        let r2: f64 = x
            .iter()
            .zip(self.center.iter().chain(std::iter::repeat(&0.0)))
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let s = r2 / (self.radius * self.radius);
        if s >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - 1.0 / (1.0 - s)).exp()
        }
    }
}

/// Real nonnegative strength sampled on a grid and vanishing outside the safe
/// half-box.
#[derive(Clone, Debug, PartialEq)]
pub struct StrengthGrid {
    grid: GridSpec,
    values: Vec<f64>,
}

impl StrengthGrid {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!(
                "strength has {} samples, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Domain(format!(
                "strength values must be finite and nonnegative, found {v}"
            )));
        }
        let outside: f64 = values
            .iter()
            .enumerate()
            .filter(|(i, _)| !grid.in_safe_box(*i))
            .map(|(_, v)| v.abs())
            .sum();
        if outside > 0.0 {
            return Err(Error::Support { outside });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_bumps(grid: GridSpec, bumps: &[Bump]) -> Result<Self> {
        let d = grid.dim();
        for b in bumps {
            if b.center.len() != d {
                return Err(Error::Domain(format!(
                    "bump center has {} coordinates, expected {d}",
                    b.center.len()
                )));
            }
            if !(b.radius > 0.0 && b.amplitude >= 0.0) {
                return Err(Error::Domain("bump needs positive radius and nonnegative amplitude".into()));
            }
        }
        let values = (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                bumps.iter().map(|b| b.value(&x[..d])).sum()
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// `∫ a` by the rectangle rule, which is spectrally accurate for smooth
    /// compactly supported strengths.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn to_field(&self) -> ComplexField {
        let values = self.values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        ComplexField::new(self.grid, values).expect("strength grid is finite")
    }

    /// `â(ξ) = ∫ a(x) e^{-ix·ξ} dx` at an arbitrary frequency.
    pub fn fourier_at(&self, xi: &[f64]) -> Complex64 {
        SupportSamples::from_field(&self.to_field()).fourier_at(xi)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }
}

/// Which part of the potential dominates its covariance and relation
/// operators, according to the orders of the real and imaginary parts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dominance {
    /// `m1 < m2`: `a^c = a^r = a1`.
    RealPart,
    /// `m1 > m2`: `a^c = a2`, `a^r = -a2`.
    ImaginaryPart,
    /// `m1 = m2`: `a^c = a1 + a2`, `a^r = a1 - a2`.
    Balanced,
}

pub fn dominance(m1: f64, m2: f64) -> Dominance {
    if m1 < m2 {
        Dominance::RealPart
    } else if m1 > m2 {
        Dominance::ImaginaryPart
    } else {
        Dominance::Balanced
    }
}

/// Admissible open-closed interval `(d - 2n + 1, d]` for the orders.
pub fn order_range(d: usize, n: usize) -> (f64, f64) {
    (d as f64 - 2.0 * n as f64 + 1.0, d as f64)
}

/// Lower bound `(4d - 4n + 2)/3` that `m` must exceed for reconstruction.
pub fn reconstruction_threshold(d: usize, n: usize) -> f64 {
    (4.0 * d as f64 - 4.0 * n as f64 + 2.0) / 3.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSpec {
    n: usize,
    a1: StrengthGrid,
    m1: f64,
    a2: StrengthGrid,
    m2: f64,
}

impl PotentialSpec {
    /// `n` is the polyharmonic order the potential is meant for; it fixes the
    /// admissible order range.
    pub fn new(n: usize, a1: StrengthGrid, m1: f64, a2: StrengthGrid, m2: f64) -> Result<Self> {
        if a1.grid() != a2.grid() {
            return Err(Error::Domain("strengths live on different grids".into()));
        }
        if n < 2 {
            return Err(Error::Domain(format!("polyharmonic order must be >= 2, got {n}")));
        }
        let (lo, hi) = order_range(a1.grid().dim(), n);
        for (name, m) in [("m1", m1), ("m2", m2)] {
            if !(m > lo && m <= hi) {
                return Err(Error::Domain(format!("{name} = {m} outside ({lo}, {hi}]")));
            }
        }
        Ok(Self { n, a1, m1, a2, m2 })
    }

    pub fn grid(&self) -> &GridSpec {
        self.a1.grid()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a1(&self) -> &StrengthGrid {
        &self.a1
    }

    pub fn a2(&self) -> &StrengthGrid {
        &self.a2
    }

    pub fn m1(&self) -> f64 {
        self.m1
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// Effective order `m = min(m1, m2)`; when one strength vanishes
    /// identically the other part's order is used.
    pub fn m(&self) -> f64 {
        match (self.a1.is_zero(), self.a2.is_zero()) {
            (false, true) => self.m1,
            (true, false) => self.m2,
            _ => self.m1.min(self.m2),
        }
    }

    pub fn dominance(&self) -> Dominance {
        match (self.a1.is_zero(), self.a2.is_zero()) {
            (false, true) => Dominance::RealPart,
            (true, false) => Dominance::ImaginaryPart,
            _ => dominance(self.m1, self.m2),
        }
    }

    /// True when `m <= (4d - 4n + 2)/3`, outside the reconstruction regime.
    pub fn reconstruction_warning(&self) -> bool {
        self.m() <= reconstruction_threshold(self.grid().dim(), self.n)
    }

    /// Dominant strengths `(a^c, a^r)` of the covariance and relation operators.
    pub fn dominant_strengths(&self) -> (Vec<f64>, Vec<f64>) {
        let a1 = self.a1.values();
        let a2 = self.a2.values();
        match self.dominance() {
            Dominance::RealPart => (a1.to_vec(), a1.to_vec()),
            Dominance::ImaginaryPart => (a2.to_vec(), a2.iter().map(|v| -v).collect()),
            Dominance::Balanced => (
                a1.iter().zip(a2).map(|(x, y)| x + y).collect(),
                a1.iter().zip(a2).map(|(x, y)| x - y).collect(),
            ),
        }
    }

    fn strength_hat(&self, xi: &[f64], relation: bool) -> Complex64 {
        let h1 = self.a1.fourier_at(xi);
        let h2 = self.a2.fourier_at(xi);
        match (self.dominance(), relation) {
            (Dominance::RealPart, _) => h1,
            (Dominance::ImaginaryPart, false) => h2,
            (Dominance::ImaginaryPart, true) => -h2,
            (Dominance::Balanced, false) => h1 + h2,
            (Dominance::Balanced, true) => h1 - h2,
        }
    }

    /// `â^c(ξ)`
    pub fn covariance_strength_hat(&self, xi: &[f64]) -> Complex64 {
        self.strength_hat(xi, false)
    }

    /// `â^r(ξ)`
    pub fn relation_strength_hat(&self, xi: &[f64]) -> Complex64 {
        self.strength_hat(xi, true)
    }
}

/// One seeded draw `ρ = ρ₁ + iρ₂` of a complex GMIG potential.
#[derive(Clone, Debug)]
pub struct PotentialRealization {
    pub rho: ComplexField,
    pub spec: Arc<PotentialSpec>,
    pub seed: u64,
}

impl PotentialRealization {
    /// Deterministic potential without a random law, for tests and oracles.
    pub fn deterministic(rho: ComplexField, spec: Arc<PotentialSpec>) -> Self {
        Self { rho, spec, seed: 0 }
    }

    pub fn support(&self) -> SupportSamples {
        SupportSamples::from_field(&self.rho)
    }

    /// `ρ̂(ξ)` at an arbitrary frequency.
    pub fn fourier_at(&self, xi: &[f64]) -> Complex64 {
        self.support().fourier_at(xi)
    }
}

fn white_noise(grid: &GridSpec, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = grid.cell_volume().sqrt().recip();
    (0..grid.len())
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        })
        .collect()
}

/// `√a · (-Δ)^{-m/4} Ẇ` with the zero mode removed.
pub fn sample_real_gmig(a: &StrengthGrid, m: f64, grid: &GridSpec, seed: u64) -> Result<Vec<f64>> {
    if a.grid() != grid {
        return Err(Error::Seed("strength grid differs from the sampling grid".into()));
    }
    if !m.is_finite() {
        return Err(Error::Seed(format!("order must be finite, got {m}")));
    }
    if a.is_zero() {
        return Ok(vec![0.0; grid.len()]);
    }
    let noise = white_noise(grid, seed);
    let field = ComplexField::new(*grid, noise.iter().map(|v| Complex64::new(*v, 0.0)).collect())
        .map_err(|e| Error::Seed(e.to_string()))?;
    let filtered = apply_radial_symbol(&field, |r2| {
        if r2 == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(r2.powf(-m / 4.0), 0.0)
        }
    });
    Ok(filtered
        .values()
        .iter()
        .zip(a.values())
        .map(|(f, w)| if *w > 0.0 { w.sqrt() * f.re } else { 0.0 })
        .collect())
}

/// Two sub-seeds for the real and imaginary parts, drawn from `seed`.
pub fn sub_seeds(seed: u64) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (rng.next_u64(), rng.next_u64())
}

pub fn sample_complex_gmig(spec: &Arc<PotentialSpec>, grid: &GridSpec, seed: u64) -> Result<PotentialRealization> {
    let (s1, s2) = sub_seeds(seed);
    let rho1 = sample_real_gmig(spec.a1(), spec.m1(), grid, s1)?;
    let rho2 = sample_real_gmig(spec.a2(), spec.m2(), grid, s2)?;
    let values = rho1.iter().zip(&rho2).map(|(r, i)| Complex64::new(*r, *i)).collect();
    Ok(PotentialRealization {
        rho: ComplexField::new(*grid, values)?,
        spec: Arc::clone(spec),
        seed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    /// `E[ρ̂(ξ) conj ρ̂(ξ)]`
    Covariance,
    /// `E[ρ̂(ξ) ρ̂(-ξ)]`
    Relation,
}

/// Monte-Carlo estimate of the integrated symbol `∫σ^η(y, ξ) dy`.
pub fn empirical_symbol(realizations: &[PotentialRealization], xi: &[f64], kind: SymbolKind) -> Result<ComplexMean> {
    if realizations.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: realizations.len(),
        });
    }
    let minus: Vec<f64> = xi.iter().map(|v| -v).collect();
    let samples: Vec<Complex64> = realizations
        .iter()
        .map(|r| {
            let s = r.support();
            let plus = s.fourier_at(xi);
            match kind {
                SymbolKind::Covariance => plus * plus.conj(),
                SymbolKind::Relation => plus * s.fourier_at(&minus),
            }
        })
        .collect();
    ComplexMean::from_samples(&samples)
}

/// Radially binned mean of `|ρ̂(ξ)|²` over lattice frequencies, accumulated over
/// fields. Returns `(mean |ξ|, mean power)` per non-empty bin.
pub fn radial_power_spectrum(fields: &[ComplexField], edges: &[f64]) -> Vec<(f64, f64)> {
    let bins = edges.len().saturating_sub(1);
    let mut power = vec![0.0; bins];
    let mut radius = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for f in fields {
        let spec = *f.spec();
        let hat = fft(f);
        for (k, v) in hat.values().iter().enumerate() {
            let xi = spec.frequency(k);
            let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
            if let Some(b) = (0..bins).find(|&b| r >= edges[b] && r < edges[b + 1]) {
                power[b] += v.norm_sqr();
                radius[b] += r;
                count[b] += 1;
            }
        }
    }
    (0..bins)
        .filter(|&b| count[b] > 0)
        .map(|b| (radius[b] / count[b] as f64, power[b] / count[b] as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Dim;

    fn grid() -> GridSpec {
        GridSpec::new(Dim::Two, 1.0, 64).unwrap()
    }

    fn bump(a: f64) -> Bump {
        Bump {
            amplitude: a,
            center: vec![0.05, -0.02],
            radius: 0.4,
        }
    }

    fn spec(a1: f64, m1: f64, a2: f64, m2: f64) -> Arc<PotentialSpec> {
        let g = grid();
        Arc::new(
            PotentialSpec::new(
                2,
                StrengthGrid::from_bumps(g, &[bump(a1)]).unwrap(),
                m1,
                StrengthGrid::from_bumps(g, &[bump(a2)]).unwrap(),
                m2,
            )
            .unwrap(),
        )
    }

    #[test]
    fn bump_peak_and_support() {
        let b = bump(2.0);
        assert!((b.value(&[0.05, -0.02]) - 2.0).abs() < 1e-15);
        assert_eq!(b.value(&[0.45, -0.02]), 0.0);
    }

    #[test]
    fn strength_outside_safe_box_is_rejected() {
        let g = grid();
        let far = Bump {
            amplitude: 1.0,
            center: vec![0.4, 0.0],
            radius: 0.3,
        };
        assert!(matches!(StrengthGrid::from_bumps(g, &[far]), Err(Error::Support { .. })));
        let mut v = vec![0.0; g.len()];
        v[0] = -1.0;
        assert!(StrengthGrid::new(g, v).is_err());
    }

    #[test]
    fn order_range_is_enforced() {
        let g = grid();
        let a = StrengthGrid::from_bumps(g, &[bump(1.0)]).unwrap();
        assert!(PotentialSpec::new(2, a.clone(), 2.5, a.clone(), 2.0).is_err());
        assert!(PotentialSpec::new(2, a.clone(), -1.0, a.clone(), 2.0).is_err());
        let s = PotentialSpec::new(2, a.clone(), 0.5, a, 2.0).unwrap();
        assert!(s.reconstruction_warning());
        assert!(!spec(1.0, 2.0, 1.0, 2.0).reconstruction_warning());
    }

    #[test]
    fn zero_strength_gives_zero_field() {
        let g = grid();
        let f = sample_real_gmig(&StrengthGrid::zeros(g), 1.0, &g, 4).unwrap();
        assert!(f.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn sampling_is_deterministic_and_seed_dependent() {
        let s = spec(1.0, 2.0, 0.5, 2.0);
        let a = sample_complex_gmig(&s, &grid(), 11).unwrap();
        let b = sample_complex_gmig(&s, &grid(), 11).unwrap();
        let c = sample_complex_gmig(&s, &grid(), 12).unwrap();
        assert_eq!(a.rho.values(), b.rho.values());
        assert_ne!(a.rho.values(), c.rho.values());
    }

    #[test]
    fn vanishing_imaginary_strength_gives_real_potential() {
        let s = spec(1.0, 2.0, 0.0, 2.0);
        let r = sample_complex_gmig(&s, &grid(), 5).unwrap();
        assert!(r.rho.values().iter().all(|v| v.im == 0.0));
        assert!(r.rho.values().iter().any(|v| v.re != 0.0));
        assert_eq!(s.dominance(), Dominance::RealPart);
    }

    #[test]
    fn white_noise_case_has_cell_variance() {
        // m = 0 is the identity filter apart from the removed mean.
        let g = grid();
        let ones: Vec<f64> = (0..g.len()).map(|i| if g.in_safe_box(i) { 1.0 } else { 0.0 }).collect();
        let a = StrengthGrid::new(g, ones).unwrap();
        let f = sample_real_gmig(&a, 0.0, &g, 99).unwrap();
        let inside: Vec<f64> = (0..g.len()).filter(|&i| g.in_safe_box(i)).map(|i| f[i]).collect();
        let var = inside.iter().map(|v| v * v).sum::<f64>() / inside.len() as f64;
        let target = 1.0 / g.cell_volume();
        assert!((var / target - 1.0).abs() < 0.05, "variance ratio {}", var / target);
        let lag: f64 = inside.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (inside.len() - 1) as f64;
        assert!(lag.abs() / target < 0.05);
    }

    #[test]
    fn remark_cases_for_dominant_strengths() {
        let s = spec(1.0, 1.5, 0.5, 2.0);
        let (c, r) = s.dominant_strengths();
        assert_eq!(c, s.a1().values());
        assert_eq!(r, s.a1().values());

        let s = spec(1.0, 2.0, 0.5, 1.5);
        let (c, r) = s.dominant_strengths();
        assert_eq!(c, s.a2().values());
        assert!(r.iter().zip(s.a2().values()).all(|(x, y)| *x == -y));

        let s = spec(1.0, 2.0, 0.5, 2.0);
        let xi = [3.0, -1.0];
        let expect_c = s.a1().fourier_at(&xi) + s.a2().fourier_at(&xi);
        assert!((s.covariance_strength_hat(&xi) - expect_c).norm() < 1e-14);
        let expect_r = s.a1().fourier_at(&xi) - s.a2().fourier_at(&xi);
        assert!((s.relation_strength_hat(&xi) - expect_r).norm() < 1e-14);
    }

    #[test]
    fn empirical_symbol_of_constant_field_is_exact() {
        let s = spec(1.0, 2.0, 0.0, 2.0);
        let g = grid();
        let rho = ComplexField::from_fn(g, |x| Complex64::new(if x[0].abs() < 0.2 && x[1].abs() < 0.2 { 1.0 } else { 0.0 }, 0.0));
        let r = PotentialRealization::deterministic(rho, s);
        let xi = [4.0, 1.0];
        let est = empirical_symbol(&[r.clone(), r.clone(), r.clone(), r.clone()], &xi, SymbolKind::Covariance).unwrap();
        assert_eq!(est.std_err, 0.0);
        assert!((est.mean - r.fourier_at(&xi).norm_sqr()).norm() < 1e-14);
        assert!(empirical_symbol(&[r], &xi, SymbolKind::Covariance).is_err());
    }
}
