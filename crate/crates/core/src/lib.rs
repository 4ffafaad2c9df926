//! Scattering of plane waves by complex-valued microlocally isotropic Gaussian
//! random potentials under the polyharmonic wave equation
//! `(-Δ)^n u - κ^{2n} u + ρ u = 0` in two and three dimensions, together with the
//! frequency-band-averaged estimators that recover the microlocal strengths of
//! the potential's covariance and relation operators from backscattering
//! far-field data.
//!
//! Module map:
//!
//! * [`special_fn`] – Hankel functions of the first kind and Helmholtz fundamental solutions.
//! * [`greens`] – root wavenumbers, the polyharmonic Green function and its far-field kernel.
//! * [`grid`] – periodic boxes, grid fields, Fourier transforms and kernel convolution.
//! * [`gmig`] – sampling of real and complex GMIG potentials and symbol estimation.
//! * [`forward`] – volume potentials, Born series and Lippmann–Schwinger solves.
//! * [`farfield`] – far-field patterns and backscattering sweeps.
//! * [`inverse`] – band-averaged strength estimators and inverse Fourier synthesis.
//! * [`oracle`] – independent brute-force references used by tests and `verify`.
//! * [`config`], [`io`], [`pipeline`] – experiment configuration, file formats, orchestration.

pub mod config;
pub mod error;
pub mod farfield;
pub mod forward;
pub mod gmig;
pub mod greens;
pub mod grid;
pub mod inverse;
pub mod io;
pub mod oracle;
pub mod pipeline;
pub mod special_fn;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Spatial dimension of the problem. Only two and three dimensions are modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn get(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.get() as f64
    }
}

impl TryFrom<u32> for Dim {
    type Error = Error;

    fn try_from(d: u32) -> Result<Self> {
        match d {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            other => Err(Error::Domain(format!("dimension must be 2 or 3, got {other}"))),
        }
    }
}

impl TryFrom<usize> for Dim {
    type Error = Error;

    fn try_from(d: usize) -> Result<Self> {
        Dim::try_from(d as u32)
    }
}

impl From<Dim> for u32 {
    fn from(d: Dim) -> u32 {
        d.get() as u32
    }
}
