//! Periodic sums of two-dimensional kernels via low-rank plane-wave
//! periodizing operators.
//!
//! The periodic field of `N` sources is split into the images in the
//! adjacent cells, summed directly, and the far images, whose contribution
//! is a low-rank operator `L D R` per direction (south, north, west, east).
//! Supported kernels are Poisson, modified Helmholtz, Stokes and modified
//! Stokes (velocity, pressure, double layer), plus multipole sources for the
//! scalar kernels. Cells are singly or doubly periodic, rectangular or
//! skewed.
//!
//! Everything numeric is generic over [`scalar::Real`] (`f32` or `f64`);
//! the aliases below fix the scalar for the common entry points.
//!
//! ```
//! use perfmm::{apply::{total_field, FieldOptions}, cell::*, kernels::Pde};
//!
//! let cell = make_unit_cell(1.0, 0.0, 0.5, Periodicity::Doubly).unwrap();
//! let sys = ParticleSystem::new(
//!     vec![[0.1, 0.1], [-0.2, 0.05]],
//!     Strengths::Scalar(vec![1.0, -1.0]),
//!     vec![[0.3, -0.1]],
//! )
//! .unwrap();
//! let u = total_field(Pde::Poisson, 0.0, &cell, 1e-10, &sys, FieldOptions::default()).unwrap();
//! assert_eq!(u.values.len(), 1);
//! ```

pub mod apply;
pub mod bessel;
pub mod cell;
pub mod error;
pub mod factorization;
pub mod harness;
pub mod kernels;
pub mod multipole;
pub mod nufft;
pub mod oracle;
pub mod periodizer;
pub mod quadrature;
pub mod scalar;
pub mod stokes;

pub use error::{Error, Result};

pub type UnitCell64 = cell::UnitCell<f64>;
pub type UnitCell32 = cell::UnitCell<f32>;
pub type ParticleSystem64 = cell::ParticleSystem<f64>;
pub type ParticleSystem32 = cell::ParticleSystem<f32>;
pub type Periodizer64 = periodizer::Periodizer<f64>;
pub type Periodizer32 = periodizer::Periodizer<f32>;
pub type Factorization64 = factorization::PlaneWaveFactorization<f64>;
pub type Factorization32 = factorization::PlaneWaveFactorization<f32>;
pub type NdftPlan64 = nufft::NdftPlan<f64>;
pub type NdftPlan32 = nufft::NdftPlan<f32>;
