//! Dynamic matrix inverse engines.
//!
//! Each engine keeps the true current matrix `Z` alongside an approximation
//! of `Z⁻¹` and supports entry updates `Z[i, j] += δ` and entry queries of
//! `Z⁻¹`:
//!
//! * [`WoodburyState`]: explicit inverse, one Sherman–Morrison step per
//!   update (`O(n²)` per update, `O(1)` per query).
//! * [`LazyState`]: base inverse plus a list of low-rank corrections, folded
//!   back every `⌈n^(μ-ν)⌉` updates; accepts batches of up to `⌈n^ν⌉` columns.
//! * [`TwoLevelState`]: a [`LazyState`] base plus `⌈n^ν⌉` buffered entry
//!   updates whose small Woodbury core is tracked by a [`WoodburyState`].
//!
//! With cubic matrix multiplication the exponents `μ`, `ν` only set the
//! flush cadences. Every engine recomputes its inverse from the tracked `Z`
//! after `n` updates.

mod explicit;
mod lazy;
mod precision;
mod twolevel;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::matrix::{inverse, LinalgError, Matrix};
use crate::scalar::Field;

pub use explicit::WoodburyState;
pub use lazy::{LazyState, LAZY_MU, LAZY_NU};
pub use precision::{certified_bits, PrecisionMode};
pub use twolevel::{TwoLevelState, TWO_LEVEL_MU, TWO_LEVEL_NU};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DynInvError {
    #[error("matrix is singular to working precision")]
    SingularMatrix,
    #[error("update would make the matrix singular")]
    SingularUpdate,
    #[error("batch of {got} columns exceeds the limit of {cap}")]
    TooManyColumns { got: usize, cap: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

impl From<LinalgError> for DynInvError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::SingularMatrix => DynInvError::SingularMatrix,
            LinalgError::Shape(s) => DynInvError::Shape(s),
        }
    }
}

/// Inverse of `z` to the ring's working precision (exact in exact rings).
pub fn approx_inverse<F: Field>(
    field: &F,
    z: &Matrix<F::Elem>,
) -> Result<Matrix<F::Elem>, DynInvError> {
    Ok(inverse(field, z)?)
}

/// `⌈n^e⌉`, at least 1.
pub(crate) fn ceil_pow(n: usize, e: f64) -> usize {
    let v = (n as f64).powf(e);
    // Guard against 4.0000000001-style noise on exact powers.
    let r = v.round();
    let c = if (v - r).abs() < 1e-9 { r } else { v.ceil() };
    (c as usize).max(1)
}

/// Introspection data for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineSnapshot {
    pub kind: EngineKind,
    pub n: usize,
    pub updates_since_reset: usize,
    /// Additive error budget `(k+1)·ε'` for the current epoch.
    pub ledger: f64,
    pub pairs: usize,
    pub buffer_fill: usize,
    pub flushes: usize,
    pub resets: usize,
}

pub trait InverseEngine<F: Field> {
    fn side(&self) -> usize;
    /// `Z[i, j] += delta`. On error the engine is unchanged.
    fn update_entry(&mut self, i: usize, j: usize, delta: &F::Elem) -> Result<(), DynInvError>;
    /// Entry `(i, j)` of the maintained inverse. Panics when out of range.
    fn query_entry(&self, i: usize, j: usize) -> F::Elem;
    /// The tracked true matrix `Z`.
    fn matrix(&self) -> &Matrix<F::Elem>;
    fn snapshot(&self) -> EngineSnapshot;

    fn inverse_matrix(&self) -> Matrix<F::Elem> {
        let n = self.side();
        Matrix::from_fn(n, n, |i, j| self.query_entry(i, j))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Explicit,
    Lazy,
    #[serde(alias = "two-level")]
    TwoLevel,
}

impl EngineKind {
    pub const ALL: [EngineKind; 3] = [EngineKind::Explicit, EngineKind::Lazy, EngineKind::TwoLevel];
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineKind::Explicit => "explicit",
            EngineKind::Lazy => "lazy",
            EngineKind::TwoLevel => "twolevel",
        })
    }
}

impl FromStr for EngineKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "explicit" => Ok(EngineKind::Explicit),
            "lazy" => Ok(EngineKind::Lazy),
            "twolevel" | "two-level" => Ok(EngineKind::TwoLevel),
            other => Err(format!("unknown engine {other:?}")),
        }
    }
}

/// Any of the three engines with their default parameters.
#[derive(Debug, Clone)]
pub enum Engine<F: Field> {
    Explicit(WoodburyState<F>),
    Lazy(LazyState<F>),
    TwoLevel(TwoLevelState<F>),
}

impl<F: Field> Engine<F> {
    pub fn new(
        kind: EngineKind,
        field: &F,
        z: Matrix<F::Elem>,
        eps_step: f64,
    ) -> Result<Self, DynInvError> {
        Ok(match kind {
            EngineKind::Explicit => Engine::Explicit(WoodburyState::new(field, z, eps_step)?),
            EngineKind::Lazy => Engine::Lazy(LazyState::new(field, z, LAZY_MU, LAZY_NU, eps_step)?),
            EngineKind::TwoLevel => Engine::TwoLevel(TwoLevelState::new(field, z, eps_step)?),
        })
    }

    pub fn kind(&self) -> EngineKind {
        match self {
            Engine::Explicit(_) => EngineKind::Explicit,
            Engine::Lazy(_) => EngineKind::Lazy,
            Engine::TwoLevel(_) => EngineKind::TwoLevel,
        }
    }

    fn inner(&self) -> &dyn InverseEngine<F> {
        match self {
            Engine::Explicit(e) => e,
            Engine::Lazy(e) => e,
            Engine::TwoLevel(e) => e,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn InverseEngine<F> {
        match self {
            Engine::Explicit(e) => e,
            Engine::Lazy(e) => e,
            Engine::TwoLevel(e) => e,
        }
    }
}

impl<F: Field> InverseEngine<F> for Engine<F> {
    fn side(&self) -> usize {
        self.inner().side()
    }
    fn update_entry(&mut self, i: usize, j: usize, delta: &F::Elem) -> Result<(), DynInvError> {
        self.inner_mut().update_entry(i, j, delta)
    }
    fn query_entry(&self, i: usize, j: usize) -> F::Elem {
        self.inner().query_entry(i, j)
    }
    fn matrix(&self) -> &Matrix<F::Elem> {
        self.inner().matrix()
    }
    fn snapshot(&self) -> EngineSnapshot {
        self.inner().snapshot()
    }
}
