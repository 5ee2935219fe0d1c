//! Dynamic maintenance of matrix formulas.
//!
//! A formula over `+`, `−`, `×` and `inv` is compiled into a square block
//! matrix `N` whose inverse contains the formula's value at rows `I` and
//! columns `J` ([`construct`]). Entry updates of the inputs become entry
//! updates of `N`, which the engines in [`dyninv`] absorb without
//! re-inverting. On top of this sit determinant maintenance ([`dyndet`]),
//! rank maintenance over a prime field ([`rank`]) and dynamic matching size
//! ([`matching`]). [`oracle`] holds the exact reference implementations
//! everything is tested against.
//!
//! All algorithms are generic over a scalar ring context (see [`scalar`]);
//! the aliases below name the common instantiations.

pub mod construct;
pub mod corpus;
pub mod dyndet;
pub mod dyninv;
pub mod formula;
pub mod maintain;
pub mod matching;
pub mod matrix;
pub mod oracle;
pub mod rank;
pub mod scalar;

pub use construct::{build, build_hat, Construction, HatConstruction};
pub use dyndet::{signed_logdet_qr, DetTracker, SignedLogDet};
pub use dyninv::{Engine, EngineKind, InverseEngine};
pub use formula::Formula;
pub use maintain::FormulaMaintainer;
pub use matching::{GraphUpdate, TutteState};
pub use matrix::Matrix;
pub use rank::{FieldDetState, RankState};
pub use scalar::{Field, RealField, Ring};

/// Binary64 floating point.
pub type F64Ring = scalar::FloatRing<f64>;
/// Binary32 floating point.
pub type F32Ring = scalar::FloatRing<f32>;

pub type F64Matrix = Matrix<f64>;
pub type FixedMatrix = Matrix<scalar::FixedPoint>;
pub type RationalMatrix = Matrix<num_rational::BigRational>;
pub type FieldMatrix = Matrix<scalar::FieldElem>;

pub type F64Maintainer = FormulaMaintainer<F64Ring>;
pub type FixedMaintainer = FormulaMaintainer<scalar::FixedRing>;
pub type RationalMaintainer = FormulaMaintainer<scalar::RationalRing>;
pub type F64DetTracker = DetTracker<F64Ring>;
pub type FixedDetTracker = DetTracker<scalar::FixedRing>;
pub type RationalDetTracker = DetTracker<scalar::RationalRing>;
