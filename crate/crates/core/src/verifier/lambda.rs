//! The hidden-state partition behind the generalized inequality derivation,
//! and the interval bounds it imposes on the hidden joint probability.
//!
//! For a direction `i` and deviation parameter `eps`, hidden states split
//! into the heavy states whose first factor nearly forbids `alpha = +` given
//! `beta = -` (set 1), the heavy states that nearly force it (set 2), and the
//! light states with weight at most `eps` (set 3). Intersecting partitions of
//! two directions bounds every cell of the hidden joint probability; those
//! bounds are what the derivation of the generalized inequality consumes, and
//! they are provable whenever `eps < 1/2`.

use crate::error::{Error, Result};
use crate::probcore::{
    Angle, Condition, Conditional, JointDistribution, Numeric, Outcome, Var, VarSet,
};
use crate::taxonomy::{form_valid_for, Partition, ProductForm, FORMS};
use serde::Serialize;

/// The three index sets over the hidden states, for one direction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaPartition {
    pub direction: Angle,
    pub epsilon: f64,
    /// heavy, `P(alpha+ | beta- a_i lambda) <= eps`
    pub set1: Vec<usize>,
    /// heavy, complementary case (for `eps < 1/2` provably
    /// `P(alpha+ | beta- a_i lambda) >= 1 - eps`)
    pub set2: Vec<usize>,
    /// light: `P(lambda) <= eps`
    pub set3: Vec<usize>,
}

/// Builds the partition for one direction. The distribution must be valid
/// for the purely outcome dependent form (its hidden joint probability
/// factorizes as `P(alpha|beta a lambda) P(beta|b lambda)`); that is checked
/// against `form_tol` and violated forms are a usage error.
pub fn lambda_partition<N: Numeric>(
    dist: &JointDistribution<N>,
    direction: Angle,
    eps: f64,
    form_tol: &N,
) -> Result<LambdaPartition> {
    let form16 = ProductForm { partition: Partition::Alpha, bits: FORMS[15] };
    if !form_valid_for(dist, &form16, form_tol)? {
        return Err(Error::Usage(
            "the hidden joint probability is not valid for the purely outcome dependent form"
                .into(),
        ));
    }
    let space = dist.space();
    if space.a_index(direction).is_none() {
        return Err(Error::UnknownValue(format!("direction {direction} not among a-settings")));
    }
    let lambda_weights = dist.marginal(VarSet::of(&[Var::Lambda]))?;
    let mut part = LambdaPartition {
        direction,
        epsilon: eps,
        set1: Vec::new(),
        set2: Vec::new(),
        set3: Vec::new(),
    };
    for (idx, label) in space.lambda_values().iter().enumerate() {
        let weight = lambda_weights
            .get(&Condition::new().lambda(label.clone()))?
            .to_f64();
        if weight <= eps {
            part.set3.push(idx);
            continue;
        }
        let f = first_factor_plus_given_minus(dist, direction, label)?;
        // zero-mass conditioning cannot put a state into set 2
        if f.is_none_or(|v| v <= eps) {
            part.set1.push(idx);
        } else {
            part.set2.push(idx);
        }
    }
    Ok(part)
}

/// `P(alpha+ | beta- a_i lambda)` read off the distribution, `None` when the
/// conditioning event has zero mass.
fn first_factor_plus_given_minus<N: Numeric>(
    dist: &JointDistribution<N>,
    direction: Angle,
    lambda: &str,
) -> Result<Option<f64>> {
    let given = Condition::new().beta(Outcome::Minus).a(direction).lambda(lambda);
    match dist.conditional(VarSet::of(&[Var::Alpha]), &given)? {
        Conditional::Defined(t) => {
            Ok(Some(t.get(&Condition::new().alpha(Outcome::Plus))?.to_f64()))
        }
        Conditional::Undefined => Ok(None),
    }
}

/// One verified bound on a hidden joint probability cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table2Cell {
    /// which sets the state was drawn from, per direction: (k, l) in 1..=3
    pub intersection: (u8, u8),
    pub alpha: Outcome,
    pub beta: Outcome,
    pub lambda: String,
    pub value: f64,
    pub bound: Bound,
    pub holds: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Bound {
    /// value <= eps^2
    AtMostEpsSquared,
    /// value <= eps
    AtMostEps,
    /// value > (1 - eps)^2
    MoreThanOneMinusEpsSquared,
    /// no restriction (light states)
    NoRestriction,
}

/// Bound checks for one ordered direction pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table2Report {
    pub direction_i: Angle,
    pub direction_j: Angle,
    pub epsilon: f64,
    /// true when the emptiness of the mixed heavy/light intersections and
    /// the set-2 membership rule were confirmed
    pub partition_consistent: bool,
    pub cells: Vec<Table2Cell>,
}

impl Table2Report {
    pub fn all_hold(&self) -> bool {
        self.partition_consistent && self.cells.iter().all(|c| c.holds)
    }
}

fn bound_for(row: (Outcome, Outcome), column: (u8, u8)) -> Bound {
    use Outcome::{Minus, Plus};
    // rows: hidden joint cells; columns: set intersections (1,1),(1,2),(2,1),(2,2)
    match (row, column) {
        ((Plus, Plus), (1, 1)) => Bound::AtMostEpsSquared,
        ((Plus, Plus), (1, 2)) => Bound::AtMostEps,
        ((Plus, Plus), (2, 1)) => Bound::AtMostEps,
        ((Plus, Plus), (2, 2)) => Bound::MoreThanOneMinusEpsSquared,
        ((Plus, Minus), (1, 1)) => Bound::AtMostEps,
        ((Plus, Minus), (1, 2)) => Bound::AtMostEpsSquared,
        ((Plus, Minus), (2, 1)) => Bound::MoreThanOneMinusEpsSquared,
        ((Plus, Minus), (2, 2)) => Bound::AtMostEps,
        ((Minus, Plus), (1, 1)) => Bound::AtMostEps,
        ((Minus, Plus), (1, 2)) => Bound::MoreThanOneMinusEpsSquared,
        ((Minus, Plus), (2, 1)) => Bound::AtMostEpsSquared,
        ((Minus, Plus), (2, 2)) => Bound::AtMostEps,
        ((Minus, Minus), (1, 1)) => Bound::MoreThanOneMinusEpsSquared,
        ((Minus, Minus), (1, 2)) => Bound::AtMostEps,
        ((Minus, Minus), (2, 1)) => Bound::AtMostEps,
        ((Minus, Minus), (2, 2)) => Bound::AtMostEpsSquared,
        _ => Bound::NoRestriction,
    }
}

fn check(value: f64, bound: Bound, eps: f64) -> bool {
    // tiny slack absorbs float rounding in the conditionals
    let slack = 1e-12;
    match bound {
        Bound::AtMostEpsSquared => value <= eps * eps + slack,
        Bound::AtMostEps => value <= eps + slack,
        Bound::MoreThanOneMinusEpsSquared => value > (1.0 - eps) * (1.0 - eps) - slack,
        Bound::NoRestriction => true,
    }
}

/// Verifies every hidden-joint-probability bound for one ordered pair of
/// directions, including the emptiness of the heavy/light mixed
/// intersections and the set-2 membership rule of the partition.
pub fn verify_table2<N: Numeric>(
    dist: &JointDistribution<N>,
    direction_i: Angle,
    direction_j: Angle,
    eps: f64,
    form_tol: &N,
) -> Result<Table2Report> {
    let part_i = lambda_partition(dist, direction_i, eps, form_tol)?;
    let part_j = lambda_partition(dist, direction_j, eps, form_tol)?;
    let space = dist.space();
    if space.b_index(direction_j).is_none() {
        return Err(Error::UnknownValue(format!(
            "direction {direction_j} not among b-settings"
        )));
    }
    let set_of = |part: &LambdaPartition, idx: usize| -> u8 {
        if part.set1.contains(&idx) {
            1
        } else if part.set2.contains(&idx) {
            2
        } else {
            3
        }
    };
    // partition consistency: light states agree between directions, and for
    // eps < 1/2 every set-2 member obeys the >= 1 - eps rule
    let mut partition_consistent = part_i.set3 == part_j.set3;
    if eps < 0.5 {
        for part in [&part_i, &part_j] {
            for idx in &part.set2 {
                let label = &space.lambda_values()[*idx];
                let f = first_factor_plus_given_minus(dist, part.direction, label)?;
                if f.is_none_or(|v| v < 1.0 - eps - 1e-12) {
                    partition_consistent = false;
                }
            }
        }
    }
    let mut cells = Vec::new();
    for (idx, label) in space.lambda_values().iter().enumerate() {
        let column = (set_of(&part_i, idx), set_of(&part_j, idx));
        let given = Condition::new().a(direction_i).b(direction_j).lambda(label.clone());
        let table = match dist.conditional(VarSet::of(&[Var::Alpha, Var::Beta]), &given)? {
            Conditional::Defined(t) => t,
            Conditional::Undefined => continue,
        };
        for alpha in Outcome::BOTH {
            for beta in Outcome::BOTH {
                let value = table
                    .get(&Condition::new().alpha(alpha).beta(beta))?
                    .to_f64();
                let bound = bound_for((alpha, beta), column);
                cells.push(Table2Cell {
                    intersection: column,
                    alpha,
                    beta,
                    lambda: label.clone(),
                    value,
                    bound,
                    holds: check(value, bound, eps),
                });
            }
        }
    }
    Ok(Table2Report {
        direction_i,
        direction_j,
        epsilon: eps,
        partition_consistent,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probcore::Exact;
    use num_traits::Zero;

    fn deg(d: f64) -> Angle {
        Angle::from_degrees(d)
    }

    #[test]
    fn rejects_non_outcome_dependent_forms() {
        // the h14 witness has a both-settings second factor, far from the
        // purely outcome dependent form
        let d = crate::constructors::h14_violating_example();
        let err = lambda_partition(&d, deg(0.0), 0.1, &Exact::zero());
        assert!(matches!(err, Err(Error::Usage(_))));
    }

    #[test]
    fn strictly_perfect_input_has_no_light_states() {
        // the perfect local model is (vacuously) valid for the outcome
        // dependent form; with eps below the state weights, every state is
        // heavy and the factor values sit at 0 or 1
        let d = crate::constructors::h29_perfect_example();
        let part = lambda_partition(&d, deg(0.0), 0.01, &Exact::zero()).unwrap();
        assert!(part.set3.is_empty());
        assert_eq!(part.set1.len() + part.set2.len(), 2);
    }

    #[test]
    fn partition_is_exhaustive_and_disjoint() {
        use rand::SeedableRng;
        let space = crate::verifier::SearchSpace::desk_default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..25 {
            let model = crate::verifier::sample_h16_model(&space, &mut rng);
            let dist = model.to_distribution(Partition::Alpha).unwrap();
            let eps = model.epsilon();
            let part = lambda_partition(&dist, deg(0.0), eps, &1e-9).unwrap();
            let mut all: Vec<usize> =
                part.set1.iter().chain(&part.set2).chain(&part.set3).copied().collect();
            all.sort_unstable();
            assert_eq!(all, vec![0, 1]);
        }
    }
}
