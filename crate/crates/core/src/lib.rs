//! Asymmetric affine `L^p` energies on grid functions, symmetric
//! rearrangement, `L^p` projection bodies of polytopes, a solver for the
//! discrete normalized `L^p` Minkowski problem, and numerical checks of the
//! sharp affine functional inequalities built on them.
//!
//! Every numeric routine is generic over [`Real`] (`f32` or `f64`). The
//! aliases at the crate root fix the scalar to `f64`.

pub mod error;
pub mod scalar;
pub mod specfun;
pub mod sphere;
pub mod gridfn;
pub mod energy;
pub mod report;
pub mod convexgeom;
pub mod minkowski;
pub mod verify;
pub mod io;

pub use error::{Error, Result};
pub use minkowski::SolverOptions;
pub use report::InequalityReport;
pub use scalar::Real;
pub use specfun::{ConstantKind, GnExponents};
pub use verify::{CorpusEntry, InequalityKind, InequalityParams, Suite, SuiteOptions};

pub type ConstantQuery = specfun::ConstantQuery<f64>;
pub type DirectionSet = sphere::DirectionSet<f64>;
pub type DiscreteSphereMeasure = sphere::DiscreteSphereMeasure<f64>;
pub type GridFunction = gridfn::GridFunction<f64>;
pub type SupportProfile = energy::SupportProfile<f64>;
pub type Energies = energy::Energies<f64>;
pub type Polytope = convexgeom::Polytope<f64>;
pub type PolytopeData = convexgeom::PolytopeData<f64>;
pub type SolverResult = minkowski::SolverResult<f64>;
