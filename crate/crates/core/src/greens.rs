//! Root wavenumbers `κ_j = κ e^{ijπ/n}`, the polyharmonic Green function
//! `G = -(1/(nκ^{2n})) Σ_j κ_j² Φ(·, κ_j)` and its far-field kernel.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::special_fn::helmholtz_fundamental;
use crate::{Dim, Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// The `n` Helmholtz wavenumbers splitting `(-Δ)^n - κ^{2n}` into
/// `Π_j (-Δ - κ_j²)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootSystem {
    kappa: f64,
    n: usize,
    roots: Vec<Complex64>,
}

impl RootSystem {
    pub fn new(kappa: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("polyharmonic order must be >= 2, got {n}")));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::Domain(format!("modified wavenumber must be positive, got {kappa}")));
        }
        let roots = (0..n)
            .map(|j| {
                if j == 0 {
                    Complex64::new(kappa, 0.0)
                } else {
                    Complex64::from_polar(kappa, j as f64 * PI / n as f64)
                }
            })
            .collect();
        Ok(Self { kappa, n, roots })
    }

    /// Modified wavenumber `κ = k^{1/n}`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    /// Physical wavenumber `k = κ^n`.
    pub fn wavenumber(&self) -> f64 {
        self.kappa.powi(self.n as i32)
    }

    /// `κ^{2n}`
    pub fn kappa_2n(&self) -> f64 {
        self.kappa.powi(2 * self.n as i32)
    }

    /// `z^n - κ^{2n}`
    pub fn monic_polynomial(&self, z: Complex64) -> Complex64 {
        z.powu(self.n as u32) - self.kappa_2n()
    }

    /// `Π_l (z - κ_l²)`
    pub fn factored_polynomial(&self, z: Complex64) -> Complex64 {
        self.roots.iter().map(|k| z - k * k).product()
    }

    /// Elementary symmetric sums `e_1..e_n` of `{-κ_l²}`; all vanish except
    /// `e_n = -κ^{2n}`, which is what makes the Vandermonde system for the
    /// radiation-condition splitting collapse.
    pub fn elementary_symmetric_sums(&self) -> Vec<Complex64> {
        let mut e = vec![Complex64::new(0.0, 0.0); self.n + 1];
        e[0] = Complex64::new(1.0, 0.0);
        for k in &self.roots {
            let c = -k * k;
            for j in (1..=self.n).rev() {
                let prev = e[j - 1];
                e[j] += c * prev;
            }
        }
        e.split_off(1)
    }

    /// Decay rate `κ sin(π/n)` of the slowest evanescent component.
    pub fn evanescent_rate(&self) -> f64 {
        self.kappa * (PI / self.n as f64).sin()
    }
}

pub fn root_system(kappa: f64, n: usize) -> Result<RootSystem> {
    RootSystem::new(kappa, n)
}

/// The dimension-dependent constant of the far-field asymptotics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FarFieldConstant {
    pub d: Dim,
    pub value: Complex64,
}

impl FarFieldConstant {
    pub fn new(d: Dim) -> Self {
        let value = match d {
            Dim::Two => Complex64::from_polar(1.0, FRAC_PI_4) / (8.0 * PI).sqrt(),
            Dim::Three => Complex64::new(1.0 / (4.0 * PI), 0.0),
        };
        Self { d, value }
    }
}

/// `G(r)` for `r > 0`.
pub fn green(r: f64, rs: &RootSystem, d: Dim) -> Result<Complex64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!(
            "Green function is evaluated at positive distances only, got r = {r}"
        )));
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for k in rs.roots() {
        sum += k * k * helmholtz_fundamental(r, *k, d)?;
    }
    Ok(-sum / (rs.n() as f64 * rs.kappa_2n()))
}

/// `lim_{r→0} G(r)`. The singular parts of the `Φ(·, κ_j)` cancel because
/// `Σ_j κ_j² = 0` for `n >= 2`.
pub fn green_at_origin(rs: &RootSystem, d: Dim) -> Complex64 {
    let n = rs.n() as f64;
    match d {
        Dim::Two => {
            // G(0) = (1/(2π n κ^{2n})) Σ κ_j² log κ_j, and log κ_j = log κ + ijπ/n.
            let s: Complex64 = rs
                .roots()
                .iter()
                .enumerate()
                .map(|(j, k)| k * k * j as f64)
                .sum();
            I * s / (2.0 * n * n * rs.kappa_2n())
        }
        Dim::Three => {
            let s: Complex64 = rs.roots().iter().map(|k| k * k * k).sum();
            -I * s / (4.0 * PI * n * rs.kappa_2n())
        }
    }
}

/// Exponent `2n - (d+1)/2` of the far-field amplitude decay in `κ`.
pub fn farfield_exponent(n: usize, d: Dim) -> f64 {
    2.0 * n as f64 - (d.as_f64() + 1.0) / 2.0
}

/// Coefficient of `e^{iκ|x|} |x|^{-(d-1)/2} e^{-iκ x̂·y}` in the large-`|x|`
/// expansion of `G(x, y)`: `-(C_d/n) κ^{-(2n-(d+1)/2)}`.
pub fn farfield_amplitude(rs: &RootSystem, d: Dim) -> Complex64 {
    let c = FarFieldConstant::new(d).value;
    -c / rs.n() as f64 * rs.kappa().powf(-farfield_exponent(rs.n(), d))
}

/// Far-field kernel `-(C_d/n) κ^{-(2n-(d+1)/2)} e^{-iκ x̂·y}`.
pub fn farfield_kernel(x_hat: &[f64], y: &[f64], rs: &RootSystem, d: Dim) -> Result<Complex64> {
    check_direction(x_hat, d)?;
    if y.len() != d.get() {
        return Err(Error::Domain(format!("point has {} components, expected {}", y.len(), d.get())));
    }
    let phase = dot(x_hat, y) * rs.kappa();
    Ok(farfield_amplitude(rs, d) * Complex64::from_polar(1.0, -phase))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn check_direction(v: &[f64], d: Dim) -> Result<()> {
    if v.len() != d.get() {
        return Err(Error::Domain(format!(
            "direction has {} components, expected {}",
            v.len(),
            d.get()
        )));
    }
    let norm = dot(v, v).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("direction must be a unit vector, |v| = {norm}")));
    }
    Ok(())
}
