//! Local and non-signaling fractions of two-party, two-setting, two-outcome
//! Bell behaviors.
//!
//! A behavior is the 16-vector of conditional probabilities `P(a,b|x,y)`.
//! Its local fraction `μ_L` is the largest weight `p` such that the behavior
//! splits as `p·(local) + (1−p)·(anything)`; the non-signaling fraction
//! `μ_NS` is the same with the non-signaling polytope as target.
//!
//! Three independent routes compute both quantities:
//!
//! * [`measures`]: closed form, the minimum of integer "measure vectors"
//!   over the fixed solution sets ℚ (128 vectors) and 𝕊 (120 vectors);
//! * [`lp`]: an exact rational simplex on the primal decomposition LP,
//!   which also yields an explicit optimal decomposition;
//! * [`enumeration`]: double-description vertex enumeration of the dual
//!   polyhedron, re-deriving ℚ and 𝕊 from scratch.
//!
//! [`sampler`] reproduces the random-behavior prevalence statistics and
//! builds the non-redundancy witnesses. [`document`] holds the JSON/CSV
//! interchange formats used by the `bellfrac` binary.

pub mod behavior;
pub mod document;
pub mod enumeration;
pub mod lp;
pub mod measures;
pub mod polytopes;
pub mod rational;
pub mod sampler;
pub mod verify;

pub use behavior::{Behavior, BehaviorError, BehaviorStats, Classification};
pub use measures::{FractionResult, MeasureVector, SetKind, VectorClass};
pub use rational::Rational;

/// Which polytope a fraction or decomposition refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Local,
    NonSignaling,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Local => "local",
            Target::NonSignaling => "ns",
        }
    }

    pub fn solution_set(self) -> SetKind {
        match self {
            Target::Local => SetKind::Q,
            Target::NonSignaling => SetKind::S,
        }
    }
}
