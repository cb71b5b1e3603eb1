//! Numerical laboratory for long-range O(n) lattice models below the upper critical
//! dimension: fractional-Laplacian kernels, finite-range covariance decompositions,
//! the perturbative RG flow of bulk and observable couplings, cluster-expansion
//! checks and a weakly self-avoiding walk Monte Carlo.

pub mod cluster;
pub mod decomposition;
pub mod error;
pub mod fit;
pub mod flow;
pub mod fourier;
pub mod geometry;
pub mod jet;
pub mod kernels;
pub mod lattice;
pub mod quad;
pub mod scales;
pub mod subordinator;
pub mod wsaw;

pub use decomposition::{decompose, decompose_with, CovarianceDecomposition, DecompositionConfig};
pub use error::{Error, Result};
pub use geometry::{BlockLattice, Polymer};
pub use jet::{Algebra, Jet};
pub use lattice::{KernelField, LatticeSpec};
pub use quad::ZdQuadrature;
pub use scales::{LatticeScales, ScaleData};
