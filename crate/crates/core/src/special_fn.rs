//! Hankel functions of the first kind (orders 0 and 1) at complex argument in
//! the closed upper half plane, and the Helmholtz fundamental solutions built
//! from them.
//!
//! Three regimes are used:
//!
//! * `|z| <= 4`: ascending power series for `J_ν` and `Y_ν`.
//! * `4 < |z| <= 25`: Watson's Laplace-type integral
//!   `H_ν(z) = sqrt(2/(πz)) e^{i(z-νπ/2-π/4)} / Γ(ν+1/2) ∫ e^{-t²} t^{2ν} (1 + i t²/(2z))^{ν-1/2} dt`
//!   over the real line, evaluated with the trapezoidal rule. The integrand is
//!   analytic in a strip of half-width at least 2 around the real axis, so the
//!   rule converges geometrically.
//! * `|z| > 25`: the Hankel asymptotic expansion, truncated at its smallest term.
//!
//! The series loses about `e^{2 Im z}` to cancellation, which is why it is
//! restricted to a small disc.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::{Dim, Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_RADIUS: f64 = 4.0;
const ASYMPTOTIC_RADIUS: f64 = 25.0;

const WATSON_STEP: f64 = 0.2;
const WATSON_NODES: usize = 34;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `H_0^{(1)}(z)` for `z != 0`, `Im z >= 0`.
pub fn hankel0_first(z: Complex64) -> Result<Complex64> {
    hankel_first(Order::Zero, z)
}

/// `H_1^{(1)}(z)` for `z != 0`, `Im z >= 0`.
pub fn hankel1_first(z: Complex64) -> Result<Complex64> {
    hankel_first(Order::One, z)
}

/// `(J0, Y0, J1, Y1)` at a positive real argument.
pub fn bessel_jy01(x: f64) -> Result<[f64; 4]> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("real Bessel argument must be positive, got {x}")));
    }
    let h0 = hankel0_first(Complex64::new(x, 0.0))?;
    let h1 = hankel1_first(Complex64::new(x, 0.0))?;
    Ok([h0.re, h0.im, h1.re, h1.im])
}

/// Outgoing fundamental solution of `Δ + κ_j²`: `(i/4) H_0^{(1)}(κ_j r)` in two
/// dimensions and `e^{iκ_j r} / (4πr)` in three.
pub fn helmholtz_fundamental(r: f64, kappa_j: Complex64, d: Dim) -> Result<Complex64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!(
            "fundamental solution needs a positive finite distance, got r = {r}"
        )));
    }
    if kappa_j.im < 0.0 || !kappa_j.is_finite() {
        return Err(Error::Domain(format!(
            "wavenumber {kappa_j} must be finite with non-negative imaginary part"
        )));
    }
    match d {
        Dim::Two => Ok(0.25 * I * hankel0_first(kappa_j * r)?),
        Dim::Three => Ok((I * kappa_j * r).exp() / (4.0 * PI * r)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Order {
    Zero,
    One,
}

impl Order {
    fn nu(self) -> f64 {
        match self {
            Order::Zero => 0.0,
            Order::One => 1.0,
        }
    }
}

fn checked_argument(z: Complex64) -> Result<Complex64> {
    if !z.is_finite() {
        return Err(Error::Domain(format!("non-finite Hankel argument {z}")));
    }
    if z.re == 0.0 && z.im == 0.0 {
        return Err(Error::Domain(
            "Hankel function is singular at z = 0".to_string(),
        ));
    }
    if z.im < 0.0 {
        return Err(Error::Domain(format!(
            "Hankel argument {z} lies in the lower half plane"
        )));
    }
    // -0.0 would put the principal branch on the wrong side of the cut.
    Ok(Complex64::new(z.re, z.im.abs()))
}

fn hankel_first(order: Order, z: Complex64) -> Result<Complex64> {
    let z = checked_argument(z)?;
    let radius = z.norm();
    let h = if radius <= SERIES_RADIUS {
        ascending_series(order, z)?
    } else if radius <= ASYMPTOTIC_RADIUS {
        watson_integral(order, z)
    } else {
        asymptotic_expansion(order, z)?
    };
    if h.is_finite() {
        Ok(h)
    } else {
        Err(Error::Accuracy(format!("non-finite Hankel value at z = {z}")))
    }
}

fn ascending_series(order: Order, z: Complex64) -> Result<Complex64> {
    const MAX_TERMS: usize = 80;
    let q = -z * z / 4.0;
    let log_half = (z / 2.0).ln();

    // term_k = q^k / (k! (k+ν)!), harmonic_k = H_k
    let mut term = Complex64::new(1.0, 0.0);
    let mut harmonic = 0.0;
    let mut j_sum = term;
    let mut y_sum = match order {
        Order::Zero => Complex64::new(0.0, 0.0),
        Order::One => term * (1.0 - 2.0 * EULER_GAMMA),
    };
    let mut largest = 1.0_f64;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        term *= match order {
            Order::Zero => q / (kf * kf),
            Order::One => q / (kf * (kf + 1.0)),
        };
        harmonic += 1.0 / kf;
        let weight = match order {
            Order::Zero => harmonic,
            Order::One => 2.0 * harmonic + 1.0 / (kf + 1.0) - 2.0 * EULER_GAMMA,
        };
        j_sum += term;
        y_sum += term * weight;
        let size = term.norm() * (1.0 + weight.abs());
        largest = largest.max(size);
        if size < 1e-18 * largest {
            return Ok(match order {
                Order::Zero => {
                    let y0 = (2.0 / PI) * ((log_half + EULER_GAMMA) * j_sum - y_sum);
                    j_sum + I * y0
                }
                Order::One => {
                    let j1 = z / 2.0 * j_sum;
                    let y1 = (2.0 / PI) * log_half * j1 - 2.0 / (PI * z) - z / (2.0 * PI) * y_sum;
                    j1 + I * y1
                }
            });
        }
    }
    Err(Error::Accuracy(format!(
        "ascending series did not converge within {MAX_TERMS} terms at z = {z}"
    )))
}

fn watson_integral(order: Order, z: Complex64) -> Complex64 {
    let scale = I / (2.0 * z);
    let integrand = |t: f64| -> Complex64 {
        let t2 = t * t;
        let w = Complex64::new(1.0, 0.0) + scale * t2;
        let gauss = (-t2).exp();
        match order {
            Order::Zero => gauss / w.sqrt(),
            Order::One => gauss * t2 * w.sqrt(),
        }
    };
    let mut sum = integrand(0.0);
    for k in 1..WATSON_NODES {
        sum += 2.0 * integrand(k as f64 * WATSON_STEP);
    }
    let integral = sum * WATSON_STEP;
    let gamma = match order {
        Order::Zero => PI.sqrt(),
        Order::One => 0.5 * PI.sqrt(),
    };
    let phase = I * (z - order.nu() * FRAC_PI_2 - FRAC_PI_4);
    (2.0 / PI).sqrt() / z.sqrt() * phase.exp() * integral / gamma
}

fn asymptotic_expansion(order: Order, z: Complex64) -> Result<Complex64> {
    let four_nu2 = 4.0 * order.nu() * order.nu();
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = term * I * (four_nu2 - odd * odd) / (8.0 * kf * z);
        let size = next.norm();
        if size >= last {
            break;
        }
        sum += next;
        term = next;
        last = size;
        if size < 1e-17 {
            break;
        }
    }
    if last > 1e-13 {
        return Err(Error::Accuracy(format!(
            "asymptotic expansion cannot certify accuracy at z = {z} (smallest term {last:.2e})"
        )));
    }
    let phase = I * (z - order.nu() * FRAC_PI_2 - FRAC_PI_4);
    Ok((2.0 / PI).sqrt() / z.sqrt() * phase.exp() * sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn hankel_at_one() {
        let h = hankel0_first(Complex64::new(1.0, 0.0)).unwrap();
        assert!(rel(h, Complex64::new(0.765_197_686_557_966_6, 0.088_256_964_215_676_96)) < 1e-12);
    }

    #[test]
    fn hankel_on_imaginary_axis_is_scaled_k0() {
        // H0(i) = -(2i/pi) K0(1)
        let h = hankel0_first(I).unwrap();
        let k0 = 0.421_024_438_240_708_3;
        assert!(rel(h, Complex64::new(0.0, -2.0 / PI * k0)) < 1e-12);
        assert!((h.im + 0.268_032_5).abs() < 1e-7);
    }

    #[test]
    fn origin_and_lower_half_plane_are_rejected() {
        assert!(matches!(hankel0_first(Complex64::new(0.0, 0.0)), Err(Error::Domain(_))));
        assert!(matches!(hankel0_first(Complex64::new(1.0, -0.5)), Err(Error::Domain(_))));
        assert!(matches!(
            hankel0_first(Complex64::new(f64::NAN, 0.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn modulus_grows_without_bound_toward_origin() {
        let a = hankel0_first(Complex64::new(1e-3, 0.0)).unwrap().norm();
        let b = hankel0_first(Complex64::new(1e-9, 0.0)).unwrap().norm();
        assert!(b > a && b > 10.0);
    }

    #[test]
    fn regimes_agree_at_their_seams() {
        for &radius in &[SERIES_RADIUS, ASYMPTOTIC_RADIUS] {
            for k in 0..=8 {
                let phi = PI * k as f64 / 8.0;
                let z = Complex64::from_polar(radius, phi);
                for order in [Order::Zero, Order::One] {
                    let inside = if radius == SERIES_RADIUS {
                        ascending_series(order, z).unwrap()
                    } else {
                        watson_integral(order, z)
                    };
                    let outside = if radius == SERIES_RADIUS {
                        watson_integral(order, z)
                    } else {
                        asymptotic_expansion(order, z).unwrap()
                    };
                    assert!(rel(inside, outside) < 1e-12, "seam {radius} phi {phi}");
                }
            }
        }
    }

    #[test]
    fn wronskian() {
        let mut x = 0.1;
        while x <= 50.0 {
            let [j0, y0, j1, y1] = bessel_jy01(x).unwrap();
            // J0 Y0' - J0' Y0 = J1 Y0 - J0 Y1 = 2/(pi x)
            let w = j1 * y0 - j0 * y1;
            let expected = 2.0 / (PI * x);
            assert!(((w - expected) / expected).abs() < 1e-8, "x = {x}");
            x += 0.37;
        }
    }

    #[test]
    fn decays_along_upper_half_plane_rays() {
        for k in 1..12 {
            let phi = PI * k as f64 / 12.0;
            let mut prev = f64::INFINITY;
            let mut t = 5.0;
            while t < 60.0 {
                let m = hankel0_first(Complex64::from_polar(t, phi)).unwrap().norm();
                assert!(m < prev, "phi {phi} t {t}");
                prev = m;
                t += 0.5;
            }
        }
    }

    #[test]
    fn fundamental_solution_examples() {
        let p = helmholtz_fundamental(1.0, Complex64::new(1.0, 0.0), Dim::Three).unwrap();
        assert!(rel(p, Complex64::new(1f64.cos(), 1f64.sin()) / (4.0 * PI)) < 1e-14);
        assert!((p.re - 0.042_995_9).abs() < 1e-7 && (p.im - 0.066_962_1).abs() < 1e-7);

        let p = helmholtz_fundamental(1.0, I, Dim::Three).unwrap();
        assert!((p.re - (-1f64).exp() / (4.0 * PI)).abs() < 1e-15 && p.im.abs() < 1e-15);
        assert!((p.re - 0.029_274_9).abs() < 1e-7);

        let p = helmholtz_fundamental(1.0, Complex64::new(1.0, 0.0), Dim::Two).unwrap();
        assert!((p.re + 0.022_064_2).abs() < 1e-7 && (p.im - 0.191_299_4).abs() < 1e-7);

        assert!(helmholtz_fundamental(0.0, I, Dim::Two).is_err());
    }

    #[test]
    fn three_dimensional_solution_is_annihilated_by_radial_helmholtz() {
        // sixth-order central differences of Φ'' + (2/r) Φ' + κ² Φ
        let kappa = Complex64::new(2.0, 0.0);
        let phi = |r: f64| helmholtz_fundamental(r, kappa, Dim::Three).unwrap();
        let h = 1e-2;
        let d1 = [-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
        let d2 = [1.0 / 90.0, -3.0 / 20.0, 3.0 / 2.0, -49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
        for &r in &[0.5, 1.0, 2.0, 4.0] {
            let mut first = Complex64::new(0.0, 0.0);
            let mut second = Complex64::new(0.0, 0.0);
            for (k, (a, b)) in d1.iter().zip(d2.iter()).enumerate() {
                let v = phi(r + (k as f64 - 3.0) * h);
                first += v * *a / h;
                second += v * *b / (h * h);
            }
            let residual = second + first * (2.0 / r) + kappa * kappa * phi(r);
            let scale = (kappa * kappa * phi(r)).norm();
            assert!(residual.norm() / scale < 1e-4, "r = {r}");
        }
    }
}
