//! Numerical laboratory for the self-dual abelian Yang–Mills–Higgs functional
//! on line bundles over the flat torus and the round sphere.

pub mod bundle;
pub mod cli;
pub mod energy;
pub mod error;
pub mod io;
pub mod mesh;
pub mod numeric;
pub mod solver;
pub mod stability;

pub use error::{Error, Result};
