//! Monte-Carlo means with standard errors and least-squares line fits.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Sample mean of complex observations together with the standard error of
/// the mean, `sqrt(Σ|x - x̄|² / (k(k-1)))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMean {
    pub mean: Complex64,
    pub std_err: f64,
    pub count: usize,
}

impl ComplexMean {
    pub fn from_samples(samples: &[Complex64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                got: samples.len(),
            });
        }
        let k = samples.len() as f64;
        let mean = samples.iter().sum::<Complex64>() / k;
        let ss: f64 = samples.iter().map(|x| (x - mean).norm_sqr()).sum();
        Ok(Self {
            mean,
            std_err: (ss / (k * (k - 1.0))).sqrt(),
            count: samples.len(),
        })
    }

    /// Distance to `target` in units of the standard error.
    pub fn z_score(&self, target: Complex64) -> f64 {
        let dist = (self.mean - target).norm();
        if self.std_err == 0.0 {
            if dist == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            dist / self.std_err
        }
    }
}

/// Real analogue of [`ComplexMean`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealMean {
    pub mean: f64,
    pub std_err: f64,
    pub count: usize,
}

impl RealMean {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                got: samples.len(),
            });
        }
        let k = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / k;
        let ss: f64 = samples.iter().map(|x| (x - mean).powi(2)).sum();
        Ok(Self {
            mean,
            std_err: (ss / (k * (k - 1.0))).sqrt(),
            count: samples.len(),
        })
    }
}

/// Ordinary least-squares fit `y ≈ intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: x.len().min(y.len()),
        });
    }
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("line fit needs distinct abscissae".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Fit in log-log coordinates; all inputs must be positive.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("power-law fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    fit_line(&lx, &ly)
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len();
    Some(if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    })
}
