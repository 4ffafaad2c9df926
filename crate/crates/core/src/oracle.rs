//! Independent references for tests and the `verify` command. Nothing here is
//! used by the production paths, and nothing here calls them for the quantity
//! being certified: the Bessel series run in 256-bit arithmetic, the volume
//! potential is an explicit double loop, and band-limited reconstructions use
//! Gauss–Legendre polar quadrature.

use std::f64::consts::PI;

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::greens::RootSystem;
use crate::grid::{ComplexField, GridSpec};
use crate::{Dim, Error, Result};

const PREC: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;
const SERIES_LIMIT: f64 = 20.0;
const EULER_GAMMA_DIGITS: &str =
    "0.57721566490153286060651209008240243104215933593992359880576723488486772677766467093694706329174674951";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub quantity: String,
    pub values: Vec<f64>,
    pub method: String,
    pub error_estimate: f64,
}

impl OracleReport {
    /// An oracle certifies a tolerance only if its own error is at least ten
    /// times smaller.
    pub fn certifies(&self, tolerance: f64) -> bool {
        self.error_estimate <= tolerance / 10.0
    }
}

#[derive(Clone)]
struct Big {
    re: BigFloat,
    im: BigFloat,
}

struct Ctx {
    cc: Consts,
}

impl Ctx {
    fn new() -> Self {
        Self {
            cc: Consts::new().expect("constant cache"),
        }
    }

    fn real(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, PREC)
    }

    fn big(&self, z: Complex64) -> Big {
        Big {
            re: self.real(z.re),
            im: self.real(z.im),
        }
    }

    fn add(&self, a: &Big, b: &Big) -> Big {
        Big {
            re: a.re.add(&b.re, PREC, RM),
            im: a.im.add(&b.im, PREC, RM),
        }
    }

    fn mul(&self, a: &Big, b: &Big) -> Big {
        Big {
            re: a.re.mul(&b.re, PREC, RM).sub(&a.im.mul(&b.im, PREC, RM), PREC, RM),
            im: a.re.mul(&b.im, PREC, RM).add(&a.im.mul(&b.re, PREC, RM), PREC, RM),
        }
    }

    fn scale(&self, a: &Big, s: &BigFloat) -> Big {
        Big {
            re: a.re.mul(s, PREC, RM),
            im: a.im.mul(s, PREC, RM),
        }
    }

    fn to_f64(&self, x: &BigFloat) -> f64 {
        if x.is_zero() {
            return 0.0;
        }
        format!("{x}").parse::<f64>().expect("decimal rendering of a finite value")
    }

    fn to_c64(&self, z: &Big) -> Complex64 {
        Complex64::new(self.to_f64(&z.re), self.to_f64(&z.im))
    }

    /// Principal `ln z` for `Im z >= 0`, `z != 0`.
    fn ln(&mut self, z: &Big) -> Big {
        let modulus2 = z.re.mul(&z.re, PREC, RM).add(&z.im.mul(&z.im, PREC, RM), PREC, RM);
        let half = self.real(0.5);
        let ln_mod = modulus2.ln(PREC, RM, &mut self.cc).mul(&half, PREC, RM);
        let pi = self.cc.pi(PREC, RM);
        let arg = if z.re.is_zero() {
            pi.mul(&half, PREC, RM)
        } else {
            let t = z.im.div(&z.re, PREC, RM).atan(PREC, RM, &mut self.cc);
            if z.re.is_negative() {
                t.add(&pi, PREC, RM)
            } else {
                t
            }
        };
        Big { re: ln_mod, im: arg }
    }
}

/// Reference values of `J0`, `Y0` and `H0^{(1)} = J0 + iY0` at complex
/// argument from the ascending series in 256-bit arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesselReference {
    pub j0: Complex64,
    pub y0: Complex64,
    pub h0: Complex64,
    /// Bound on the neglected tail plus final rounding to double precision,
    /// relative to `|H0|`.
    pub relative_error: f64,
}

pub fn series_bessel(z: Complex64) -> Result<BesselReference> {
    let radius = z.norm();
    if !(radius <= SERIES_LIMIT) {
        return Err(Error::RadiusGuard(radius));
    }
    if radius == 0.0 {
        return Ok(BesselReference {
            j0: Complex64::new(1.0, 0.0),
            y0: Complex64::new(f64::NEG_INFINITY, 0.0),
            h0: Complex64::new(f64::NAN, f64::NEG_INFINITY),
            relative_error: 0.0,
        });
    }
    let mut ctx = Ctx::new();
    let zb = ctx.big(z);
    let quarter = ctx.real(0.25);
    let q = ctx.scale(&ctx.mul(&zb, &zb), &quarter); // z²/4
    let neg_q = Big {
        re: q.re.neg(),
        im: q.im.neg(),
    };
    // term_k = (-z²/4)^k / (k!)²
    let mut term = ctx.big(Complex64::new(1.0, 0.0));
    let mut j0 = term.clone();
    let mut ysum = ctx.big(Complex64::new(0.0, 0.0));
    let mut harmonic = ctx.real(0.0);
    let qabs = radius * radius / 4.0;
    let mut k = 1usize;
    let mut tail_bound;
    loop {
        let kk = ctx.real((k * k) as f64);
        term = ctx.mul(&term, &neg_q);
        term = Big {
            re: term.re.div(&kk, PREC, RM),
            im: term.im.div(&kk, PREC, RM),
        };
        harmonic = harmonic.add(&ctx.real(1.0).div(&ctx.real(k as f64), PREC, RM), PREC, RM);
        j0 = ctx.add(&j0, &term);
        // Y series carries -H_k times the J term
        let weighted = ctx.scale(&term, &harmonic);
        ysum = Big {
            re: ysum.re.sub(&weighted.re, PREC, RM),
            im: ysum.im.sub(&weighted.im, PREC, RM),
        };
        let tnorm = ctx.to_c64(&term).norm();
        let ratio = qabs / ((k + 1) * (k + 1)) as f64;
        // after the peak the terms decay at least geometrically with `ratio`
        tail_bound = tnorm * (1.0 + (k as f64).ln() + 1.0) * ratio / (1.0 - ratio).max(1e-300);
        if (k as f64) > qabs.sqrt() + 2.0 && ratio < 0.5 && tail_bound < 1e-40 {
            break;
        }
        k += 1;
        if k > 2000 {
            return Err(Error::Accuracy("Bessel series did not terminate".into()));
        }
    }
    let gamma = BigFloat::parse(EULER_GAMMA_DIGITS, Radix::Dec, PREC, RM, &mut ctx.cc);
    let half_z = ctx.scale(&zb, &ctx.real(0.5));
    let mut log_term = ctx.ln(&half_z);
    log_term.re = log_term.re.add(&gamma, PREC, RM);
    let pi = ctx.cc.pi(PREC, RM);
    let two_over_pi = ctx.real(2.0).div(&pi, PREC, RM);
    let y0 = ctx.scale(&ctx.add(&ctx.mul(&log_term, &j0), &ysum), &two_over_pi);
    let h0 = Big {
        re: j0.re.sub(&y0.im, PREC, RM),
        im: j0.im.add(&y0.re, PREC, RM),
    };
    let h0f = ctx.to_c64(&h0);
    Ok(BesselReference {
        j0: ctx.to_c64(&j0),
        y0: ctx.to_c64(&y0),
        h0: h0f,
        relative_error: tail_bound / h0f.norm() + 2.0 * f64::EPSILON,
    })
}

/// `K0(x) = ∫_0^∞ e^{-x cosh t} dt` by the trapezoidal rule, which converges
/// doubly exponentially for this integrand. Returns the value and the change
/// between step `h` and `h/2` as an error estimate.
pub fn k0_integral(x: f64) -> Result<(f64, f64)> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("K0 needs a positive argument, got {x}")));
    }
    let upper = (750.0 / x).acosh().max(1.0);
    let rule = |h: f64| -> f64 {
        let steps = (upper / h).ceil() as usize;
        let mut s = 0.5 * (-x).exp();
        for i in 1..=steps {
            s += (-x * (i as f64 * h).cosh()).exp();
        }
        s * h
    };
    let coarse = rule(0.1);
    let fine = rule(0.05);
    Ok((fine, (fine - coarse).abs() + 4.0 * f64::EPSILON * fine))
}

/// `(2πs²)^{d/2} e^{-s²|ξ|²/2}`, the transform of `e^{-|x|²/(2s²)}`.
pub fn gaussian_hat(s: f64, xi: &[f64]) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("Gaussian width must be positive, got {s}")));
    }
    let d = xi.len() as i32;
    let r2: f64 = xi.iter().map(|v| v * v).sum();
    Ok((2.0 * PI * s * s).powf(d as f64 / 2.0) * (-s * s * r2 / 2.0).exp())
}

/// Polyharmonic Green function from the extended-precision Hankel series
/// (d = 2) or the closed-form exponential (d = 3), with `r = 0` handled by the
/// Taylor expansion in which the singular parts cancel.
pub fn green_reference(r: f64, rs: &RootSystem, d: Dim) -> Result<Complex64> {
    let n = rs.n() as f64;
    let scale = -1.0 / (n * rs.kappa().powf(2.0 * n));
    let roots = rs.roots();
    let i = Complex64::new(0.0, 1.0);
    if r == 0.0 {
        let s: Complex64 = match d {
            Dim::Three => roots.iter().map(|k| k * k * i * k / (4.0 * PI)).sum(),
            Dim::Two => {
                // (i/4) H0(κ r) ≈ (i/4)(1 + (2i/π)(ln(κr/2) + γ)); Σκ_j² = 0 removes ln r
                let gamma = 0.577_215_664_901_532_9;
                roots
                    .iter()
                    .map(|k| {
                        let h = Complex64::new(1.0, 0.0) + 2.0 * i / PI * ((k / 2.0).ln() + gamma);
                        k * k * 0.25 * i * h
                    })
                    .sum()
            }
        };
        return Ok(scale * s);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for k in roots {
        let phi = match d {
            Dim::Three => (i * k * r).exp() / (4.0 * PI * r),
            Dim::Two => 0.25 * i * series_bessel(k * r)?.h0,
        };
        acc += k * k * phi;
    }
    Ok(scale * acc)
}

/// Free-space volume potential `Σ_j G(|x_i - y_j|) φ_j h^d` at the requested
/// target indices by explicit summation.
pub fn direct_volume_potential(phi: &ComplexField, rs: &RootSystem, targets: &[usize]) -> Result<Vec<Complex64>> {
    let spec = phi.spec();
    let limit = match spec.d() {
        Dim::Two => 64,
        Dim::Three => 16,
    };
    if spec.n_points() > limit {
        return Err(Error::SizeGuard(format!(
            "direct summation allows N <= {limit} in {} dimensions, got {}",
            spec.dim(),
            spec.n_points()
        )));
    }
    let d = spec.dim();
    let h = spec.spacing();
    let mut cache: std::collections::HashMap<i64, Complex64> = std::collections::HashMap::new();
    let mut out = Vec::with_capacity(targets.len());
    for &t in targets {
        let ti = spec.multi_index(t);
        let mut acc = Complex64::new(0.0, 0.0);
        for (s, v) in phi.values().iter().enumerate() {
            if v.re == 0.0 && v.im == 0.0 {
                continue;
            }
            let si = spec.multi_index(s);
            let m2: i64 = (0..d).map(|a| (ti[a] as i64 - si[a] as i64).pow(2)).sum();
            let g = match cache.get(&m2) {
                Some(g) => *g,
                None => {
                    let g = green_reference(h * (m2 as f64).sqrt(), rs, spec.d())?;
                    cache.insert(m2, g);
                    g
                }
            };
            acc += g * v;
        }
        out.push(acc * spec.cell_volume());
    }
    Ok(out)
}

/// Gauss–Legendre nodes and weights on `[a, b]` by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(count: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut x = (PI * (i as f64 + 0.75) / (count as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=count {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = count as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * w));
    }
    out
}

/// Band-limited reconstruction `(2π)^{-2} ∫_{|ξ|<R} â(ξ) e^{ix·ξ} dξ` of a
/// real two-dimensional strength on `grid`, from its exact transform, by
/// Gauss–Legendre quadrature in `|ξ|` and the trapezoidal rule in angle.
pub fn truncated_fourier_reconstruction(
    hat: impl Fn(&[f64]) -> Complex64 + Sync,
    radius: f64,
    grid: &GridSpec,
    radial_nodes: usize,
    angles: usize,
) -> Result<Vec<f64>> {
    if grid.d() != Dim::Two {
        return Err(Error::Domain("truncated reconstruction oracle is two-dimensional".into()));
    }
    let rad = gauss_legendre(radial_nodes, 0.0, radius);
    let mut nodes: Vec<([f64; 2], Complex64)> = Vec::with_capacity(radial_nodes * angles);
    for &(r, w) in &rad {
        for a in 0..angles {
            let t = 2.0 * PI * a as f64 / angles as f64;
            let xi = [r * t.cos(), r * t.sin()];
            let weight = w * r * 2.0 * PI / angles as f64;
            nodes.push((xi, hat(&xi) * weight));
        }
    }
    let norm = 1.0 / (4.0 * PI * PI);
    Ok((0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            let mut s = Complex64::new(0.0, 0.0);
            for (xi, v) in &nodes {
                s += v * Complex64::from_polar(1.0, xi[0] * x[0] + xi[1] * x[1]);
            }
            s.re * norm
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::root_system;

    #[test]
    fn bessel_reference_values() {
        let r = series_bessel(Complex64::new(1.0, 0.0)).unwrap();
        assert!((r.j0.re - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((r.y0.re - 0.088_256_964_215_676_96).abs() < 1e-15);
        assert!(r.relative_error < 1e-14);
        assert!(matches!(series_bessel(Complex64::new(20.5, 0.0)), Err(Error::RadiusGuard(_))));
        let zero = series_bessel(Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(zero.j0, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn series_survives_cancellation_far_up_the_imaginary_axis() {
        // H0(iy) = -(2i/π) K0(y), compared at y where the series cancels badly
        for y in [1.0, 7.5, 19.0] {
            let h = series_bessel(Complex64::new(0.0, y)).unwrap();
            let (k0, err) = k0_integral(y).unwrap();
            let expected = Complex64::new(0.0, -2.0 / PI * k0);
            assert!((h.h0 - expected).norm() <= 1e-12 * expected.norm() + err, "y = {y}");
        }
    }

    #[test]
    fn k0_known_value() {
        let (k0, err) = k0_integral(1.0).unwrap();
        assert!((k0 - 0.421_024_438_240_708_3).abs() < 1e-15);
        assert!(err < 1e-14);
    }

    #[test]
    fn gaussian_transform_values() {
        assert!((gaussian_hat(0.5, &[0.0, 0.0]).unwrap() - PI / 2.0).abs() < 1e-15);
        let v = gaussian_hat(1.0, &[1.0, 0.0, 0.0]).unwrap();
        assert!((v - (2.0 * PI).powf(1.5) * (-0.5f64).exp()).abs() < 1e-13);
        assert!(gaussian_hat(0.5, &[200.0, 0.0]).unwrap() < 1e-300);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let nodes = gauss_legendre(10, 0.0, 2.0);
        let s: f64 = nodes.iter().map(|(x, w)| w * x.powi(19)).sum();
        assert!((s - 2f64.powi(20) / 20.0).abs() < 1e-9 * s);
    }

    #[test]
    fn direct_potential_is_linear_and_guarded() {
        let rs = root_system(3.0, 2).unwrap();
        let spec = GridSpec::new(Dim::Two, 1.0, 8).unwrap();
        let mut phi = ComplexField::zeros(spec);
        let targets: Vec<usize> = (0..spec.len()).collect();
        assert!(direct_volume_potential(&phi, &rs, &targets).unwrap().iter().all(|v| v.norm() == 0.0));
        phi.values_mut()[spec.flat_index(&[3, 4])] = Complex64::new(1.0, 2.0);
        let a = direct_volume_potential(&phi, &rs, &targets).unwrap();
        let b = direct_volume_potential(&phi.scaled(Complex64::new(0.0, 3.0)), &rs, &targets).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((y - Complex64::new(0.0, 3.0) * x).norm() <= 1e-14 * y.norm().max(1e-300));
        }
        let big = GridSpec::new(Dim::Three, 1.0, 32).unwrap();
        assert!(matches!(
            direct_volume_potential(&ComplexField::zeros(big), &rs, &[0]),
            Err(Error::SizeGuard(_))
        ));
    }
}
