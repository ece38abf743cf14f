//! Decentralized formation control in the plane.
//!
//! The crate covers the whole analysis pipeline for directed formations:
//!
//! * [`numkernel`]: a small dense linear-algebra and numerics kernel
//!   (eigenvalues, SVD-based rank and null spaces, Newton, RK4, finite
//!   differences) generic over the scalar type.
//! * [`graph`]: directed information-flow graphs and their mixed and
//!   edge adjacency matrices.
//! * [`rigidity`]: frameworks, edge vectors, rigidity matrices, and the
//!   feasible / singular edge-length sets of the 2-cycles formation.
//! * [`dynamics`]: compatible control laws, the vector field in agent and
//!   edge coordinates, and the analytic Jacobian factorizations.
//! * [`equilibria`]: design and ancillary equilibria, gauge-fixed spectra,
//!   Poincaré–Hopf indices and the equilibrium census.
//! * [`bifurcation`]: the Sotomayor transcritical test and one-parameter
//!   continuation across the singular set.
//!
//! All numerical types are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`, which is what the
//! tolerances in the test-suite assume.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bifurcation;
pub mod dynamics;
pub mod equilibria;
pub mod graph;
pub mod numkernel;
pub mod rigidity;
mod scalar;

pub use scalar::Scalar;

pub use bifurcation::{
    logistic_reference, most_parallel_design, mu_sweep, mu_sweep_from, sotomayor_check, transcritical_detect, BranchKind, BranchPoint,
    Detection, FnFamily, FormationMuFamily, ParamFamily, SotomayorOptions, SotomayorReport,
    SweepResult,
};
pub use dynamics::{
    builtin_law, BuiltinLaw, ControlLaw, CustomLaw, Eq1Sign, JacobianBundle, VectorFieldBundle,
};
pub use equilibria::{
    census, design_frameworks, gauge_fixed_spectrum, identify_convention, poincare_index,
    solve_ancillary_aligned, CensusOptions, CensusReport, ConventionId, ConventionReport,
    EquilibriumKind, EquilibriumRecord, PublishedSpectra,
};
pub use graph::{FormationGraph, TwoCyclesMap};
pub use numkernel::{DenseMatrix, Spectrum};
pub use rigidity::{Framework, LengthConvention, TargetLengths, Vec2};

/// Scalar used by the concrete aliases below.
pub type Real = f64;
pub type Matrix = DenseMatrix<Real>;
pub type RealSpectrum = Spectrum<Real>;
pub type RealFramework = Framework<Real>;
pub type RealLengths = TargetLengths<Real>;
pub type RealBundle = VectorFieldBundle<Real>;
pub type RealRecord = EquilibriumRecord<Real>;
pub type RealCensus = CensusReport<Real>;
pub type RealPoint = Vec2<Real>;
