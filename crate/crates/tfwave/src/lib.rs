//! Time-frequency toolkit: Gabor frames, painless nonstationary Gabor systems,
//! ε-perturbations of frames and numerical estimation of Gabor ω-wave front sets.
//!
//! Generic over the scalar type through [`Real`]; the aliases below fix `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gabor;
pub mod nsgt;
pub mod perturb;
pub mod scalar;
pub mod signals;
pub mod wavefront;
pub mod weights;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Grid = signals::GridSpec<f64>;
pub type Signal = signals::SampledSignal<f64>;
pub type Oracle = signals::CoefficientOracle<f64>;
pub type Weight = weights::WeightFunction<f64>;
pub type Coefficients = gabor::CoefficientGrid<f64>;
pub type Gabor = gabor::GaborSystem<f64>;
