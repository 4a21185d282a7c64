//! Explicit monotone finite-difference solver for the one- and two-phase
//! fractional Stefan problems `∂_t h + (−Δ)^s Φ(h) = 0` in one space
//! dimension, with selfsimilar-profile analysis and reference oracles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod grid;
pub mod nonlinearity;
pub mod operator;
pub mod oracle;
pub mod quadrature;
pub mod selfsimilar;
pub mod stepper;

pub use error::{Error, Result};
pub use grid::{
    excess_mass, l1_local_distance, sample_initial, sample_initial_with, FarField, Field, Grid1D,
    InitialDatum, SamplingRule,
};
pub use nonlinearity::{center_shift, reflect_two_to_one, GraphKind, StefanGraph};
pub use operator::{consistency_error, Order, Stencil};
pub use stepper::{cfl_dt, run, step, RunConfig, SnapshotSeries};
