//! Numerical laboratory for Fredholm-determinant identities: half-line Jost
//! functions and Birman–Schwinger determinants, and their boundary analogues
//! built from Dirichlet-to-Neumann maps for finite-rank nonlocal potentials
//! on the unit disk and the unit ball.

pub mod geometry;
pub mod halfline;
pub mod lab;
pub mod numerics;
pub mod parallel;
pub mod potential;

pub use num_complex::Complex64;
