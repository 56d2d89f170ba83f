//! Variational bound states of a charged particle in its own image potential
//! at a polarizable wedge.
//!
//! A charge near a highly polarizable body is attracted to its own induced
//! surface charge. When the body is a wedge of opening angle `alpha`, the
//! self-energy has the separable form `[k(alpha) - f(theta, alpha)]/(4r)` in
//! atomic units, producing potential channels along both walls. This crate
//! evaluates that potential, minimizes the energy of a small family of trial
//! wavefunctions over it with a Nelder-Mead simplex, and tracks how the
//! lowest symmetric/antisymmetric pair of levels collapses onto a single
//! degenerate level once the opening exceeds a half plane.
//!
//! Modules follow the pipeline: [`numerics`] (quadrature, log-gamma),
//! [`potential`] (the wedge kernel and a method-of-images oracle),
//! [`trial`] (the wavefunction families), [`energy`] (three independent
//! expectation-value routes), [`optimizer`] (constrained simplex search),
//! and [`degeneracy`] (angle sweeps and the level-splitting estimator).

mod angular;
pub mod degeneracy;
pub mod energy;
pub mod error;
pub mod numerics;
pub mod optimizer;
pub mod potential;
pub mod trial;
pub mod units;

pub use error::{Error, Result};
pub use units::HARTREE_TO_EV;
