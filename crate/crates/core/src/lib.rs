//! Whittle–Matérn random fields on the unit sphere and the Dirichlet interval:
//! simulation, likelihood-based smoothness estimation and equivalence of the
//! induced Gaussian measures.

pub mod bessel;
pub mod geometry;
pub mod kernels;
pub mod linalg;
pub mod quadrature;
pub mod spectral;
pub mod sampler;
pub mod likelihood;
pub mod estimator;
pub mod measures;
