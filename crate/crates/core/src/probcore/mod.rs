//! Exact and floating-point representation of discrete joint distributions
//! over the five EPR/B experiment variables.

mod angle;
mod dist;
mod numeric;
mod space;

pub use angle::Angle;
pub use dist::{
    Conditional, DeviationProfile, DistBuilder, JointDistribution, PairDeviation, PairKind,
    ProbTable,
};
pub use numeric::{format_exact, parse_exact, Exact, Numeric};
pub use space::{Assignment, Condition, Outcome, Var, VarSet, VariableSpace};

