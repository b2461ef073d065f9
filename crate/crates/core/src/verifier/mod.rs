//! Desk-scale verification harness: structural inconsistency proofs, exact
//! reduction propagation, feasibility and max-violation searches, the hidden
//! state partition machinery, and the class-table reproduction.

mod lambda;
mod search;
mod structural;
mod table1;

pub use lambda::{lambda_partition, verify_table2, LambdaPartition, Table2Cell, Table2Report};
pub use search::{
    feasibility_search, max_violation_search, sample_h16_model, ClassModel, FeasibilityOutcome,
    MarginMetric, MaxViolationOutcome, Orientation, SearchObjective, SearchSpace,
    WitnessEvidence, FEASIBLE_RESIDUAL, WITNESS_CLASS_TOL,
};
pub use structural::{
    missing_setting_inconsistency, reduction_under_strict_perfectness, MissingSettingProof,
    ReductionProof,
};
pub use table1::{
    expected_status, render_table1, reproduce_table1, verify_class, ClassVerdict, Evidence,
    Table1Report, VerdictStatus, FALSIFICATION_MARGIN_TOL,
};

use serde::Serialize;

/// Background assumptions a class is checked against. Autonomy is always
/// assumed; the correlation mode is either strictly perfect or nearly perfect
/// with deviations bounded by `delta_max` (summed over the two offending
/// cells of a setting pair). Strict mode is nearly-mode with `delta_max = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AssumptionRegime {
    pub delta_max: f64,
}

impl AssumptionRegime {
    pub const STRICT: AssumptionRegime = AssumptionRegime { delta_max: 0.0 };

    pub fn nearly(delta_max: f64) -> Self {
        assert!(delta_max >= 0.0, "delta_max must be nonnegative");
        AssumptionRegime { delta_max }
    }

    pub fn is_strict(&self) -> bool {
        self.delta_max == 0.0
    }
}

impl std::fmt::Display for AssumptionRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_strict() {
            write!(f, "strict")
        } else {
            write!(f, "nearly({})", self.delta_max)
        }
    }
}
