//! Periodic computational boxes `[-L, L)^d`, complex grid fields, Fourier
//! transforms with the integral convention `φ̂(ξ) = ∫ φ(x) e^{-ix·ξ} dx`, and
//! convolution with the periodized Green kernel.
//!
//! Fields are stored row-major with axis 0 slowest. Grid point `i` along an
//! axis sits at `x = -L + i h`, `h = 2L/N`. Frequencies follow the usual FFT
//! layout: index `k` maps to `ξ = (π/L) k̃` with `k̃ = k` for `k < N/2` and
//! `k̃ = k - N` otherwise.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::greens::{green, green_at_origin, RootSystem};
use crate::{Dim, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    d: Dim,
    half_width: f64,
    n_points: usize,
}

impl GridSpec {
    /// `n_points` must be even and at least 8; experiment configurations
    /// additionally require 16 or more.
    pub fn new(d: Dim, half_width: f64, n_points: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Domain(format!("half width must be positive, got {half_width}")));
        }
        if n_points < 8 || n_points % 2 != 0 {
            return Err(Error::Domain(format!(
                "points per axis must be even and >= 8, got {n_points}"
            )));
        }
        Ok(Self {
            d,
            half_width,
            n_points,
        })
    }

    pub fn d(&self) -> Dim {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.d.get()
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n_points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim() as i32)
    }

    /// Total number of grid points `N^d`.
    pub fn len(&self) -> usize {
        self.n_points.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest resolvable frequency along an axis, `πN/(2L)`.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI * self.n_points as f64 / (2.0 * self.half_width)
    }

    pub fn axis_coordinate(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn multi_index(&self, mut flat: usize) -> [usize; 3] {
        let n = self.n_points;
        let mut idx = [0usize; 3];
        for axis in (0..self.dim()).rev() {
            idx[axis] = flat % n;
            flat /= n;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().take(self.dim()).fold(0, |acc, &i| acc * self.n_points + i)
    }

    /// Coordinates of a grid point; unused trailing components are zero.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim() {
            x[axis] = self.axis_coordinate(idx[axis]);
        }
        x
    }

    pub fn signed_frequency_index(&self, k: usize) -> i64 {
        let n = self.n_points as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// Lattice frequency of a flat spectral index.
    pub fn frequency(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let step = std::f64::consts::PI / self.half_width;
        let mut xi = [0.0; 3];
        for axis in 0..self.dim() {
            xi[axis] = step * self.signed_frequency_index(idx[axis]) as f64;
        }
        xi
    }

    /// Whether axis index `i` lies in the safe half-box `[-L/2, L/2)`.
    pub fn axis_in_safe_box(&self, i: usize) -> bool {
        let n = self.n_points;
        4 * i >= n && 4 * i < 3 * n
    }

    pub fn in_safe_box(&self, flat: usize) -> bool {
        let idx = self.multi_index(flat);
        (0..self.dim()).all(|a| self.axis_in_safe_box(idx[a]))
    }

    /// Boolean mask of the safe half-box, the region where interactions are
    /// reproduced exactly by the periodized kernel.
    pub fn safe_mask(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.in_safe_box(i)).collect()
    }
}

/// Complex samples on a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    spec: GridSpec,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(spec: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::Domain(format!(
                "field has {} samples, grid needs {}",
                values.len(),
                spec.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("field contains non-finite samples".into()));
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            values: vec![Complex64::new(0.0, 0.0); spec.len()],
        }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let d = spec.dim();
        let values = (0..spec.len()).map(|i| f(&spec.point(i)[..d])).collect();
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Discrete `L²` norm `(Σ |f|² h^d)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.spec.cell_volume()).sqrt()
    }

    /// `L²` norm restricted to the safe half-box.
    pub fn safe_l2_norm(&self) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.spec.in_safe_box(*i))
            .map(|(_, v)| v.norm_sqr())
            .sum();
        (s * self.spec.cell_volume()).sqrt()
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().map(|v| v * a).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn pointwise_mul(&self, other: &Self) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        }
    }

    /// Zero every sample outside the safe half-box.
    pub fn masked_to_safe_box(&self) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| if self.spec.in_safe_box(i) { *v } else { Complex64::new(0.0, 0.0) })
            .collect();
        Self {
            spec: self.spec,
            values,
        }
    }
}

/// In-place multi-dimensional FFT (unnormalized) assembled from 1-D
/// transforms along each axis.
pub(crate) fn raw_fft(data: &mut [Complex64], n: usize, d: usize, direction: FftDirection) {
    let plan: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft(n, direction);
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    let total = data.len();
    debug_assert_eq!(total, n.pow(d as u32));
    // last axis: contiguous lines
    plan.process_with_scratch(data, &mut scratch);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..d.saturating_sub(1) {
        let stride = n.pow((d - 1 - axis) as u32);
        let block = stride * n;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (k, v) in line.iter_mut().enumerate() {
                    *v = data[base + k * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (k, v) in line.iter().enumerate() {
                    data[base + k * stride] = *v;
                }
            }
        }
    }
}

fn parity_sign(spec: &GridSpec, flat: usize) -> f64 {
    let idx = spec.multi_index(flat);
    let s: usize = idx.iter().take(spec.dim()).sum();
    if s % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `F(ξ_k) = h^d Σ_j f_j e^{-iξ_k·x_j}` on the frequency lattice.
pub fn fft(field: &ComplexField) -> ComplexField {
    let spec = *field.spec();
    let mut data = field.values().to_vec();
    raw_fft(&mut data, spec.n_points(), spec.dim(), FftDirection::Forward);
    let hd = spec.cell_volume();
    for (k, v) in data.iter_mut().enumerate() {
        *v *= hd * parity_sign(&spec, k);
    }
    ComplexField { spec, values: data }
}

/// Inverse of [`fft`]: `f_j = (2L)^{-d} Σ_k F_k e^{iξ_k·x_j}`.
pub fn ifft(spectrum: &ComplexField) -> ComplexField {
    let spec = *spectrum.spec();
    let mut data: Vec<Complex64> = spectrum
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| v * parity_sign(&spec, k))
        .collect();
    raw_fft(&mut data, spec.n_points(), spec.dim(), FftDirection::Inverse);
    let scale = 1.0 / (2.0 * spec.half_width()).powi(spec.dim() as i32);
    for v in &mut data {
        *v *= scale;
    }
    ComplexField { spec, values: data }
}

/// Apply a radial Fourier multiplier `symbol(|ξ|²)`.
pub fn apply_radial_symbol(field: &ComplexField, symbol: impl Fn(f64) -> Complex64) -> ComplexField {
    let spec = *field.spec();
    let mut data = field.values().to_vec();
    raw_fft(&mut data, spec.n_points(), spec.dim(), FftDirection::Forward);
    let inv = 1.0 / spec.len() as f64;
    for (k, v) in data.iter_mut().enumerate() {
        let xi = spec.frequency(k);
        let r2 = xi.iter().map(|x| x * x).sum::<f64>();
        *v *= symbol(r2) * inv;
    }
    raw_fft(&mut data, spec.n_points(), spec.dim(), FftDirection::Inverse);
    ComplexField { spec, values: data }
}

/// C^∞ cutoff equal to one on `[0, 0.9 R]` and zero beyond `R`.
fn smooth_cutoff(r: f64, radius: f64) -> f64 {
    let start = 0.9 * radius;
    if r <= start {
        return 1.0;
    }
    if r >= radius {
        return 0.0;
    }
    let s = (r - start) / (radius - start);
    let bump = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    bump(1.0 - s) / (bump(1.0 - s) + bump(s))
}

/// Green kernel sampled at minimal-image offsets of the periodic box and
/// truncated at radius `2L - h`, stored as its DFT for fast convolution.
///
/// For sources and targets inside the safe half-box every offset is shorter
/// than `L√d < 0.9 (2L - h)`, so the truncation never touches those
/// interactions (for `N >= 32` in three dimensions).
#[derive(Clone, Debug)]
pub struct PeriodizedKernel {
    spec: GridSpec,
    roots: RootSystem,
    samples: Vec<Complex64>,
    spectrum: Vec<Complex64>,
}

impl PeriodizedKernel {
    pub fn new(rs: &RootSystem, spec: &GridSpec) -> Result<Self> {
        let n = spec.n_points();
        let d = spec.dim();
        let h = spec.spacing();
        let cutoff_radius = 2.0 * spec.half_width() - h;
        let half = (n / 2) as i64;
        // G depends on the integer squared offset only.
        let mut cache: Vec<Option<Complex64>> = vec![None; d * (n / 2) * (n / 2) + 1];
        let origin = green_at_origin(rs, spec.d());
        let mut samples = Vec::with_capacity(spec.len());
        for flat in 0..spec.len() {
            let idx = spec.multi_index(flat);
            let mut m2 = 0usize;
            for &i in idx.iter().take(d) {
                let mut a = i as i64;
                if a >= half {
                    a -= n as i64;
                }
                m2 += (a * a) as usize;
            }
            let value = match cache[m2] {
                Some(v) => v,
                None => {
                    let v = if m2 == 0 {
                        origin
                    } else {
                        let r = h * (m2 as f64).sqrt();
                        green(r, rs, spec.d())? * smooth_cutoff(r, cutoff_radius)
                    };
                    cache[m2] = Some(v);
                    v
                }
            };
            samples.push(value);
        }
        let mut spectrum = samples.clone();
        raw_fft(&mut spectrum, n, d, FftDirection::Forward);
        let scale = spec.cell_volume() / spec.len() as f64;
        for v in &mut spectrum {
            *v *= scale;
        }
        Ok(Self {
            spec: *spec,
            roots: rs.clone(),
            samples,
            spectrum,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn roots(&self) -> &RootSystem {
        &self.roots
    }

    /// Kernel samples `G(|x|)` on the minimal-image lattice.
    pub fn samples(&self) -> ComplexField {
        ComplexField {
            spec: self.spec,
            values: self.samples.clone(),
        }
    }

    /// Cyclic convolution `Σ_j G(x_i - x_j) φ_j h^d`.
    pub fn convolve(&self, phi: &[Complex64]) -> Vec<Complex64> {
        let mut data = phi.to_vec();
        let n = self.spec.n_points();
        let d = self.spec.dim();
        raw_fft(&mut data, n, d, FftDirection::Forward);
        for (v, k) in data.iter_mut().zip(&self.spectrum) {
            *v *= k;
        }
        raw_fft(&mut data, n, d, FftDirection::Inverse);
        data
    }
}

pub fn periodized_kernel(rs: &RootSystem, spec: &GridSpec) -> Result<PeriodizedKernel> {
    PeriodizedKernel::new(rs, spec)
}

/// Nonzero cells of a grid function, kept for direct (nonuniform) Fourier sums
/// `Σ f(y) e^{-iξ·y} h^d` at off-lattice frequencies.
#[derive(Clone, Debug, Default)]
pub struct SupportSamples {
    d: usize,
    points: Vec<[f64; 3]>,
    values: Vec<Complex64>,
    cell_volume: f64,
}

impl SupportSamples {
    pub fn from_field(field: &ComplexField) -> Self {
        let spec = field.spec();
        let mut points = Vec::new();
        let mut values = Vec::new();
        for (i, v) in field.values().iter().enumerate() {
            if v.re != 0.0 || v.im != 0.0 {
                points.push(spec.point(i));
                values.push(*v);
            }
        }
        Self {
            d: spec.dim(),
            points,
            values,
            cell_volume: spec.cell_volume(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn projection(&self, p: &[f64; 3], dir: &[f64]) -> f64 {
        dir.iter().take(self.d).zip(p).map(|(a, b)| a * b).sum()
    }

    /// `Σ f(y) e^{-iξ·y} h^d`
    pub fn fourier_at(&self, xi: &[f64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (p, v) in self.points.iter().zip(&self.values) {
            acc += v * Complex64::from_polar(1.0, -self.projection(p, xi));
        }
        acc * self.cell_volume
    }

    /// Transform along a ray: returns `(F(s_k ω), F(-s_k ω))` for
    /// `s_k = start + k·step`, `k < count`, using a phase recurrence that is
    /// re-seeded every 64 steps.
    pub fn fourier_along_ray(
        &self,
        direction: &[f64],
        start: f64,
        step: f64,
        count: usize,
    ) -> (Vec<Complex64>, Vec<Complex64>) {
        const RESEED: usize = 64;
        let mut plus = vec![Complex64::new(0.0, 0.0); count];
        let mut minus = vec![Complex64::new(0.0, 0.0); count];
        for (p, v) in self.points.iter().zip(&self.values) {
            let s = self.projection(p, direction);
            let increment = Complex64::from_polar(1.0, -step * s);
            let mut k0 = 0;
            while k0 < count {
                let mut phase = Complex64::from_polar(1.0, -(start + k0 as f64 * step) * s);
                let end = (k0 + RESEED).min(count);
                for k in k0..end {
                    plus[k] += v * phase;
                    minus[k] += v * phase.conj();
                    phase *= increment;
                }
                k0 = end;
            }
        }
        for x in plus.iter_mut().chain(minus.iter_mut()) {
            *x *= self.cell_volume;
        }
        (plus, minus)
    }
}
