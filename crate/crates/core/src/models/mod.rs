//! Built-in problem instances.

pub mod poisson;
pub mod random;
pub mod sequence;
pub mod synthetic;

pub use poisson::{build_poisson_1d, DiscreteForm, DiscreteSpace, Poisson1dParams, PoissonSmoother};
pub use random::{random_consistent_method, random_restriction_case, RandomSmallParams};
pub use sequence::{build_sequence_example, SequenceExampleParams, SequenceVariant};
pub use synthetic::{
    build_synthetic_2d, oblique_method, RestrictionCase, Synthetic2dParams, SyntheticCase, SyntheticModel,
};
