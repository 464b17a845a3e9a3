//! Heterogeneous ubiquitous systems at desk scale: c-adic measures, multifractal
//! spectra, point–scale systems, conditioned limsup selection and a constructive
//! mass-distribution (Cantor) builder.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cantor;
pub mod cgrid;
pub mod demo;
pub mod error;
pub mod measures;
pub mod numerics;
pub mod redundancy;
pub mod rng;
pub mod selection;
pub mod spectrum;
pub mod systems;

pub use error::{Error, Result};
