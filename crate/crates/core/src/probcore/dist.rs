//! Discrete joint distributions over the five experiment variables, with
//! marginalization, conditioning and tolerance-based independence tests.
//!
//! A [`JointDistribution`] is an immutable value after construction and every
//! operation here is a pure function, so values can be freely shared across
//! threads.

use crate::error::{Error, Result};
use crate::probcore::angle::Angle;
use crate::probcore::numeric::Numeric;
use crate::probcore::space::{
    Assignment, CompiledCondition, Condition, Outcome, Var, VarSet, VariableSpace,
};

/// Full joint distribution `P(alpha, beta, a, b, lambda)`. Weights are stored
/// densely; absent entries are zero.
#[derive(Clone, PartialEq, Debug)]
pub struct JointDistribution<N: Numeric> {
    space: VariableSpace,
    weights: Vec<N>,
}

/// Result of conditioning: either a probability table over the target
/// variables or the distinguished value for conditioning on a zero-mass event.
#[derive(Clone, PartialEq, Debug)]
pub enum Conditional<N: Numeric> {
    Defined(ProbTable<N>),
    Undefined,
}

impl<N: Numeric> Conditional<N> {
    pub fn defined(self) -> Option<ProbTable<N>> {
        match self {
            Conditional::Defined(t) => Some(t),
            Conditional::Undefined => None,
        }
    }

    pub fn as_defined(&self) -> Option<&ProbTable<N>> {
        match self {
            Conditional::Defined(t) => Some(t),
            Conditional::Undefined => None,
        }
    }

    pub fn is_undefined(&self) -> bool {
        matches!(self, Conditional::Undefined)
    }
}

/// A probability table over a subset of the variables (the result of
/// marginalization or conditioning).
#[derive(Clone, PartialEq, Debug)]
pub struct ProbTable<N: Numeric> {
    space: VariableSpace,
    vars: VarSet,
    entries: Vec<(CompiledCondition, N)>,
}

impl<N: Numeric> ProbTable<N> {
    pub fn vars(&self) -> VarSet {
        self.vars
    }

    pub fn space(&self) -> &VariableSpace {
        &self.space
    }

    /// Probability of one cell, identified by a condition over exactly the
    /// table's variables.
    pub fn get(&self, key: &Condition) -> Result<N> {
        if key.vars() != self.vars {
            return Err(Error::Usage(format!(
                "table is over {:?} but key names {:?}",
                self.vars,
                key.vars()
            )));
        }
        let compiled = key.compile(&self.space)?;
        Ok(self
            .entries
            .iter()
            .find(|(k, _)| *k == compiled)
            .map(|(_, w)| w.clone())
            .unwrap_or_else(N::zero))
    }

    /// The table's nonzero cells with values resolved against the space.
    pub fn entries(&self) -> Vec<(Condition, N)> {
        self.entries
            .iter()
            .map(|(k, w)| {
                let mut c = Condition::new();
                c.alpha = k.alpha;
                c.beta = k.beta;
                c.a = k.a.map(|i| self.space.a_settings()[i]);
                c.b = k.b.map(|i| self.space.b_settings()[i]);
                c.lambda = k.lambda.map(|i| self.space.lambda_values()[i].clone());
                (c, w.clone())
            })
            .collect()
    }

    pub fn total(&self) -> N {
        self.entries.iter().map(|(_, w)| w.clone()).sum()
    }

    /// Marginal of this table onto a subset of its variables.
    pub fn marginal(&self, keep: VarSet) -> Result<ProbTable<N>> {
        if keep.is_empty() {
            return Err(Error::Usage("marginal onto the empty variable set".into()));
        }
        if !keep.is_subset_of(self.vars) {
            return Err(Error::Usage(format!(
                "marginal onto {:?} which is not a subset of table variables {:?}",
                keep, self.vars
            )));
        }
        let mut entries: Vec<(CompiledCondition, N)> = Vec::new();
        for (key, w) in &self.entries {
            let reduced = restrict_condition(key, keep);
            match entries.iter_mut().find(|(k, _)| *k == reduced) {
                Some((_, acc)) => *acc = acc.clone() + w.clone(),
                None => entries.push((reduced, w.clone())),
            }
        }
        Ok(ProbTable { space: self.space.clone(), vars: keep, entries })
    }

}

fn restrict_condition(c: &CompiledCondition, keep: VarSet) -> CompiledCondition {
    CompiledCondition {
        alpha: if keep.contains(Var::Alpha) { c.alpha } else { None },
        beta: if keep.contains(Var::Beta) { c.beta } else { None },
        a: if keep.contains(Var::SettingA) { c.a } else { None },
        b: if keep.contains(Var::SettingB) { c.b } else { None },
        lambda: if keep.contains(Var::Lambda) { c.lambda } else { None },
    }
}

/// Incremental builder; entries not set stay zero.
pub struct DistBuilder<N: Numeric> {
    space: VariableSpace,
    weights: Vec<N>,
}

impl<N: Numeric> DistBuilder<N> {
    pub fn new(space: VariableSpace) -> Self {
        let n = space.cell_count();
        DistBuilder { space, weights: vec![N::zero(); n] }
    }

    pub fn set(
        &mut self,
        alpha: Outcome,
        beta: Outcome,
        a: Angle,
        b: Angle,
        lambda: &str,
        weight: N,
    ) -> Result<&mut Self> {
        let asg = Assignment {
            alpha,
            beta,
            a: self
                .space
                .a_index(a)
                .ok_or_else(|| Error::UnknownValue(format!("a = {a}")))?,
            b: self
                .space
                .b_index(b)
                .ok_or_else(|| Error::UnknownValue(format!("b = {b}")))?,
            lambda: self
                .space
                .lambda_index(lambda)
                .ok_or_else(|| Error::UnknownValue(format!("lambda = {lambda}")))?,
        };
        let idx = self.space.flat_index(&asg);
        self.weights[idx] = weight;
        Ok(self)
    }

    pub fn build(self) -> Result<JointDistribution<N>> {
        JointDistribution::new(self.space, self.weights)
    }
}

impl<N: Numeric> JointDistribution<N> {
    /// Validates non-negativity and normalization. In exact mode the weights
    /// must sum to exactly one; in float mode to one within 1e-12.
    pub fn new(space: VariableSpace, weights: Vec<N>) -> Result<Self> {
        if weights.len() != space.cell_count() {
            return Err(Error::InvalidDistribution(format!(
                "expected {} weights, got {}",
                space.cell_count(),
                weights.len()
            )));
        }
        for w in &weights {
            if w.to_f64().is_nan() {
                return Err(Error::InvalidDistribution("weight is NaN".into()));
            }
            if *w < N::zero() {
                return Err(Error::InvalidDistribution(format!("negative weight {w}")));
            }
        }
        let total: N = weights.iter().cloned().sum();
        let ok = if N::EXACT {
            total == N::one()
        } else {
            (total.to_f64() - 1.0).abs() <= 1e-12
        };
        if !ok {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}, not 1")));
        }
        Ok(JointDistribution { space, weights })
    }

    pub fn from_fn(
        space: VariableSpace,
        f: impl Fn(&Assignment) -> N,
    ) -> Result<Self> {
        let weights = space.assignments().map(|asg| f(&asg)).collect();
        JointDistribution::new(space, weights)
    }

    pub fn space(&self) -> &VariableSpace {
        &self.space
    }

    pub fn weight(&self, asg: &Assignment) -> &N {
        &self.weights[self.space.flat_index(asg)]
    }

    pub fn assignments(&self) -> impl Iterator<Item = (Assignment, &N)> {
        self.space
            .assignments()
            .map(|asg| (asg, &self.weights[self.space.flat_index(&asg)]))
    }

    /// Total probability of an event described by a condition.
    pub fn prob(&self, event: &Condition) -> Result<N> {
        Ok(self.prob_compiled(&event.compile(&self.space)?))
    }

    pub(crate) fn prob_compiled(&self, event: &CompiledCondition) -> N {
        self.space
            .assignments()
            .filter(|asg| event.matches(asg))
            .map(|asg| self.weights[self.space.flat_index(&asg)].clone())
            .sum()
    }

    /// Marginal distribution over `keep`, summing out the other variables.
    pub fn marginal(&self, keep: VarSet) -> Result<ProbTable<N>> {
        if keep.is_empty() {
            return Err(Error::Usage("marginal onto the empty variable set".into()));
        }
        let mut entries: Vec<(CompiledCondition, N)> = Vec::new();
        for asg in self.space.assignments() {
            let w = &self.weights[self.space.flat_index(&asg)];
            if w.is_zero() {
                continue;
            }
            let key = CompiledCondition::restrict(&asg, keep);
            match entries.iter_mut().find(|(k, _)| *k == key) {
                Some((_, acc)) => *acc = acc.clone() + w.clone(),
                None => entries.push((key, w.clone())),
            }
        }
        Ok(ProbTable { space: self.space.clone(), vars: keep, entries })
    }

    /// `P(target | given)`, or [`Conditional::Undefined`] when the
    /// conditioning event has zero mass. Overlapping target and conditioning
    /// variables are a usage error.
    pub fn conditional(&self, target: VarSet, given: &Condition) -> Result<Conditional<N>> {
        if target.is_empty() {
            return Err(Error::Usage("conditional with empty target set".into()));
        }
        if target.intersects(given.vars()) {
            return Err(Error::Usage(format!(
                "target {:?} overlaps conditioning variables {:?}",
                target,
                given.vars()
            )));
        }
        let compiled = given.compile(&self.space)?;
        Ok(self.conditional_compiled(target, &compiled))
    }

    pub(crate) fn conditional_compiled(
        &self,
        target: VarSet,
        given: &CompiledCondition,
    ) -> Conditional<N> {
        let mass = self.prob_compiled(given);
        if mass.is_zero() {
            return Conditional::Undefined;
        }
        let mut entries: Vec<(CompiledCondition, N)> = Vec::new();
        for asg in self.space.assignments() {
            if !given.matches(&asg) {
                continue;
            }
            let w = &self.weights[self.space.flat_index(&asg)];
            if w.is_zero() {
                continue;
            }
            let key = CompiledCondition::restrict(&asg, target);
            match entries.iter_mut().find(|(k, _)| *k == key) {
                Some((_, acc)) => *acc = acc.clone() + w.clone(),
                None => entries.push((key, w.clone())),
            }
        }
        for (_, w) in &mut entries {
            *w = w.clone() / mass.clone();
        }
        Conditional::Defined(ProbTable {
            space: self.space.clone(),
            vars: target,
            entries,
        })
    }

    /// True when `target` is conditionally independent of `dropped` given
    /// `retained`, within an absolute per-cell tolerance. Conditioning events
    /// with zero mass impose no constraint.
    pub fn is_conditionally_irrelevant(
        &self,
        target: Var,
        dropped: Var,
        retained: VarSet,
        tol: &N,
    ) -> Result<bool> {
        let target_set = VarSet::of(&[target]);
        if retained.contains(target) || retained.contains(dropped) || target == dropped {
            return Err(Error::Usage(
                "target, dropped and retained variables must be distinct".into(),
            ));
        }
        let outer = retained.with(dropped);
        for ret_key in self.keys_over(retained) {
            let reduced = match self.conditional_compiled(target_set, &ret_key) {
                Conditional::Defined(t) => t,
                Conditional::Undefined => continue,
            };
            for full_key in self.keys_over(outer) {
                if restrict_condition(&full_key, retained) != ret_key {
                    continue;
                }
                let full = match self.conditional_compiled(target_set, &full_key) {
                    Conditional::Defined(t) => t,
                    Conditional::Undefined => continue,
                };
                for value_key in self.keys_over(target_set) {
                    let p_full = lookup(&full, &value_key);
                    let p_reduced = lookup(&reduced, &value_key);
                    if !p_full.within(&p_reduced, tol) {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// Autonomy check: `P(lambda | a, b) = P(lambda)` within `tol` for every
    /// setting pair with positive mass.
    pub fn check_autonomy(&self, tol: &N) -> bool {
        let lambda = VarSet::of(&[Var::Lambda]);
        let base = match self.conditional_compiled(lambda, &CompiledCondition::default()) {
            Conditional::Defined(t) => t,
            Conditional::Undefined => return true,
        };
        for ab in self.keys_over(VarSet::of(&[Var::SettingA, Var::SettingB])) {
            let cond = match self.conditional_compiled(lambda, &ab) {
                Conditional::Defined(t) => t,
                Conditional::Undefined => continue,
            };
            for key in self.keys_over(lambda) {
                if !lookup(&cond, &key).within(&lookup(&base, &key), tol) {
                    return false;
                }
            }
        }
        true
    }

    /// Exchanges the two setting variables: the resulting distribution has
    /// the wings' setting lists swapped and `P'(.., a = y, b = x, ..) =
    /// P(.., a = x, b = y, ..)`. An involution.
    pub fn swap_settings(&self) -> Result<JointDistribution<N>> {
        let space = VariableSpace::new(
            self.space.b_settings().to_vec(),
            self.space.a_settings().to_vec(),
            self.space.lambda_values().to_vec(),
        )?;
        let old = &self.space;
        let weights = space
            .assignments()
            .map(|asg| {
                let swapped = Assignment {
                    alpha: asg.alpha,
                    beta: asg.beta,
                    a: asg.b,
                    b: asg.a,
                    lambda: asg.lambda,
                };
                self.weights[old.flat_index(&swapped)].clone()
            })
            .collect();
        JointDistribution::new(space, weights)
    }

    /// Transposes the roles of the two wings: outcomes `alpha <-> beta` and
    /// settings `a <-> b` simultaneously. A distribution in class `(i, alpha)`
    /// maps to one in class `(i, beta)` and vice versa.
    pub fn swap_outcome_roles(&self) -> Result<JointDistribution<N>> {
        let space = VariableSpace::new(
            self.space.b_settings().to_vec(),
            self.space.a_settings().to_vec(),
            self.space.lambda_values().to_vec(),
        )?;
        let old = &self.space;
        let weights = space
            .assignments()
            .map(|asg| {
                let transposed = Assignment {
                    alpha: asg.beta,
                    beta: asg.alpha,
                    a: asg.b,
                    b: asg.a,
                    lambda: asg.lambda,
                };
                self.weights[old.flat_index(&transposed)].clone()
            })
            .collect();
        JointDistribution::new(space, weights)
    }

    /// Relabels `+ <-> -` on both outcomes. Preserves every conditional
    /// independence and every setting-pair deviation.
    pub fn flip_outcomes(&self) -> JointDistribution<N> {
        let weights = self
            .space
            .assignments()
            .map(|asg| {
                let flipped = Assignment {
                    alpha: asg.alpha.flipped(),
                    beta: asg.beta.flipped(),
                    ..asg
                };
                self.weights[self.space.flat_index(&flipped)].clone()
            })
            .collect();
        JointDistribution { space: self.space.clone(), weights }
    }

    pub fn to_float(&self) -> JointDistribution<f64> {
        // renormalize: rounding the exact weights individually can leave the
        // sum a few ulps off one
        let mut weights: Vec<f64> = self.weights.iter().map(|w| w.to_f64()).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        JointDistribution { space: self.space.clone(), weights }
    }

    /// Enumerates the positive-mass value combinations of a variable subset.
    pub(crate) fn keys_over(&self, vars: VarSet) -> Vec<CompiledCondition> {
        let mut keys: Vec<CompiledCondition> = Vec::new();
        for asg in self.space.assignments() {
            let key = CompiledCondition::restrict(&asg, vars);
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        keys
    }
}

fn lookup<N: Numeric>(table: &ProbTable<N>, key: &CompiledCondition) -> N {
    table
        .entries
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, w)| w.clone())
        .unwrap_or_else(N::zero)
}

/// Per-setting-pair deviation from perfect (anti-)correlations.
#[derive(Clone, Debug, PartialEq)]
pub struct PairDeviation<N: Numeric> {
    pub a: Angle,
    pub b: Angle,
    pub kind: PairKind,
    /// Summed over the two offending cells: mismatch cells at parallel pairs,
    /// match cells at perpendicular pairs.
    pub delta: N,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairKind {
    Parallel,
    Perpendicular,
}

/// Deviations per setting pair together with the derived correction
/// parameter: epsilon is the maximum cube root of the per-pair deviations.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviationProfile<N: Numeric> {
    pub pairs: Vec<PairDeviation<N>>,
    pub epsilon: f64,
}

impl<N: Numeric> DeviationProfile<N> {
    pub fn delta_max(&self) -> N {
        let mut best = N::zero();
        for p in &self.pairs {
            if p.delta > best {
                best = p.delta.clone();
            }
        }
        best
    }
}

impl<N: Numeric> JointDistribution<N> {
    /// Reads the deviation profile off the distribution. Every a-setting must
    /// have at least one parallel and one perpendicular partner among the
    /// b-settings; pairs with zero setting mass contribute no entry.
    pub fn deviation_profile(&self) -> Result<DeviationProfile<N>> {
        let parallel = self.space.parallel_pairs();
        let perpendicular = self.space.perpendicular_pairs();
        for (idx, a) in self.space.a_settings().iter().enumerate() {
            if !parallel.iter().any(|(i, _)| *i == idx) {
                return Err(Error::Configuration(format!(
                    "no parallel partner for direction {a} among the b-settings"
                )));
            }
            if !perpendicular.iter().any(|(i, _)| *i == idx) {
                return Err(Error::Configuration(format!(
                    "no perpendicular partner for direction {a} among the b-settings"
                )));
            }
        }
        let mut pairs = Vec::new();
        let mut epsilon: f64 = 0.0;
        for (kind, list) in
            [(PairKind::Parallel, &parallel), (PairKind::Perpendicular, &perpendicular)]
        {
            for (ai, bi) in list {
                let a = self.space.a_settings()[*ai];
                let b = self.space.b_settings()[*bi];
                let given = CompiledCondition { a: Some(*ai), b: Some(*bi), ..Default::default() };
                let table = match self
                    .conditional_compiled(VarSet::of(&[Var::Alpha, Var::Beta]), &given)
                {
                    Conditional::Defined(t) => t,
                    Conditional::Undefined => continue,
                };
                let cell = |alpha: Outcome, beta: Outcome| {
                    lookup(
                        &table,
                        &CompiledCondition {
                            alpha: Some(alpha),
                            beta: Some(beta),
                            ..Default::default()
                        },
                    )
                };
                let delta = match kind {
                    PairKind::Parallel => {
                        cell(Outcome::Plus, Outcome::Minus) + cell(Outcome::Minus, Outcome::Plus)
                    }
                    PairKind::Perpendicular => {
                        cell(Outcome::Plus, Outcome::Plus) + cell(Outcome::Minus, Outcome::Minus)
                    }
                };
                epsilon = epsilon.max(delta.to_f64().cbrt());
                pairs.push(PairDeviation { a, b, kind, delta });
            }
        }
        Ok(DeviationProfile { pairs, epsilon })
    }
}
