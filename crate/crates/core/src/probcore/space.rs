//! The five experiment variables and their value sets: binary outcomes on
//! each wing, setting angles on each wing, and a finite set of hidden states.

use crate::error::{Error, Result};
use crate::probcore::angle::Angle;
use serde::{Deserialize, Serialize};
use std::fmt;

/// A binary measurement outcome, canonically written `+` / `-`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn flipped(self) -> Outcome {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Plus => write!(f, "+"),
            Outcome::Minus => write!(f, "-"),
        }
    }
}

/// One of the five experiment variables.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Var {
    Alpha,
    Beta,
    SettingA,
    SettingB,
    Lambda,
}

impl Var {
    pub const ALL: [Var; 5] = [Var::Alpha, Var::Beta, Var::SettingA, Var::SettingB, Var::Lambda];

    fn bit(self) -> u8 {
        match self {
            Var::Alpha => 1,
            Var::Beta => 2,
            Var::SettingA => 4,
            Var::SettingB => 8,
            Var::Lambda => 16,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Var::Alpha => "alpha",
            Var::Beta => "beta",
            Var::SettingA => "a",
            Var::SettingB => "b",
            Var::Lambda => "lambda",
        };
        write!(f, "{s}")
    }
}

/// A set of experiment variables.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct VarSet(u8);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);
    pub const ALL: VarSet = VarSet(31);

    pub fn of(vars: &[Var]) -> Self {
        vars.iter().fold(VarSet(0), |s, v| s.with(*v))
    }

    pub fn with(self, v: Var) -> Self {
        VarSet(self.0 | v.bit())
    }

    pub fn without(self, v: Var) -> Self {
        VarSet(self.0 & !v.bit())
    }

    pub fn contains(self, v: Var) -> bool {
        self.0 & v.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: VarSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersects(self, other: VarSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn union(self, other: VarSet) -> VarSet {
        VarSet(self.0 | other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = Var> {
        Var::ALL.into_iter().filter(move |v| self.contains(*v))
    }
}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

/// Value sets for the five variables. Outcomes are always the fixed binary
/// `+`/`-` pair; settings are distinct angles per wing; hidden states are
/// opaque labels (a singleton models "no hidden state").
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct VariableSpace {
    a_settings: Vec<Angle>,
    b_settings: Vec<Angle>,
    lambda_values: Vec<String>,
}

impl VariableSpace {
    pub fn new(
        a_settings: Vec<Angle>,
        b_settings: Vec<Angle>,
        lambda_values: Vec<String>,
    ) -> Result<Self> {
        if a_settings.is_empty() || b_settings.is_empty() {
            return Err(Error::InvalidSpace("setting lists must be nonempty".into()));
        }
        if lambda_values.is_empty() {
            return Err(Error::InvalidSpace("lambda value list must be nonempty".into()));
        }
        for (name, list) in [("a_settings", &a_settings), ("b_settings", &b_settings)] {
            let mut sorted = list.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != list.len() {
                return Err(Error::InvalidSpace(format!(
                    "{name} contains duplicate angles modulo 180"
                )));
            }
        }
        let mut labels = lambda_values.clone();
        labels.sort();
        labels.dedup();
        if labels.len() != lambda_values.len() {
            return Err(Error::InvalidSpace("lambda labels must be distinct".into()));
        }
        Ok(VariableSpace { a_settings, b_settings, lambda_values })
    }

    /// Convenience constructor with hidden states named `l1..ln`.
    pub fn with_lambda_count(a: Vec<Angle>, b: Vec<Angle>, n: usize) -> Result<Self> {
        let labels = (1..=n).map(|i| format!("l{i}")).collect();
        VariableSpace::new(a, b, labels)
    }

    pub fn alpha_values(&self) -> [Outcome; 2] {
        Outcome::BOTH
    }

    pub fn beta_values(&self) -> [Outcome; 2] {
        Outcome::BOTH
    }

    pub fn a_settings(&self) -> &[Angle] {
        &self.a_settings
    }

    pub fn b_settings(&self) -> &[Angle] {
        &self.b_settings
    }

    pub fn lambda_values(&self) -> &[String] {
        &self.lambda_values
    }

    pub fn a_index(&self, angle: Angle) -> Option<usize> {
        self.a_settings.iter().position(|x| *x == angle)
    }

    pub fn b_index(&self, angle: Angle) -> Option<usize> {
        self.b_settings.iter().position(|x| *x == angle)
    }

    pub fn lambda_index(&self, label: &str) -> Option<usize> {
        self.lambda_values.iter().position(|x| x == label)
    }

    pub fn cell_count(&self) -> usize {
        4 * self.a_settings.len() * self.b_settings.len() * self.lambda_values.len()
    }

    /// Parallel `(a, b)` index pairs (equal angles).
    pub fn parallel_pairs(&self) -> Vec<(usize, usize)> {
        self.pairs_where(|a, b| a.is_parallel_to(b))
    }

    /// Perpendicular `(a, b)` index pairs (angles differing by 90 degrees).
    pub fn perpendicular_pairs(&self) -> Vec<(usize, usize)> {
        self.pairs_where(|a, b| a.is_perpendicular_to(b))
    }

    fn pairs_where(&self, pred: impl Fn(Angle, Angle) -> bool) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, a) in self.a_settings.iter().enumerate() {
            for (j, b) in self.b_settings.iter().enumerate() {
                if pred(*a, *b) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn assignments(&self) -> impl Iterator<Item = Assignment> + '_ {
        let na = self.a_settings.len();
        let nb = self.b_settings.len();
        let nl = self.lambda_values.len();
        Outcome::BOTH.into_iter().flat_map(move |alpha| {
            Outcome::BOTH.into_iter().flat_map(move |beta| {
                (0..na).flat_map(move |a| {
                    (0..nb).flat_map(move |b| {
                        (0..nl).map(move |lambda| Assignment { alpha, beta, a, b, lambda })
                    })
                })
            })
        })
    }

    pub fn flat_index(&self, asg: &Assignment) -> usize {
        let nb = self.b_settings.len();
        let nl = self.lambda_values.len();
        let na = self.a_settings.len();
        debug_assert!(asg.a < na && asg.b < nb && asg.lambda < nl);
        (((asg.alpha.index() * 2 + asg.beta.index()) * na + asg.a) * nb + asg.b) * nl + asg.lambda
    }
}

/// A full assignment of all five variables, with settings and hidden state
/// given as indices into the space.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Assignment {
    pub alpha: Outcome,
    pub beta: Outcome,
    pub a: usize,
    pub b: usize,
    pub lambda: usize,
}

/// A partial assignment naming a subset of variables; used both for
/// conditioning events and as keys of marginal tables.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Condition {
    pub alpha: Option<Outcome>,
    pub beta: Option<Outcome>,
    pub a: Option<Angle>,
    pub b: Option<Angle>,
    pub lambda: Option<String>,
}

impl Condition {
    pub fn new() -> Self {
        Condition::default()
    }

    pub fn alpha(mut self, v: Outcome) -> Self {
        self.alpha = Some(v);
        self
    }

    pub fn beta(mut self, v: Outcome) -> Self {
        self.beta = Some(v);
        self
    }

    pub fn a(mut self, v: Angle) -> Self {
        self.a = Some(v);
        self
    }

    pub fn b(mut self, v: Angle) -> Self {
        self.b = Some(v);
        self
    }

    pub fn lambda(mut self, v: impl Into<String>) -> Self {
        self.lambda = Some(v.into());
        self
    }

    pub fn vars(&self) -> VarSet {
        let mut s = VarSet::EMPTY;
        if self.alpha.is_some() {
            s = s.with(Var::Alpha);
        }
        if self.beta.is_some() {
            s = s.with(Var::Beta);
        }
        if self.a.is_some() {
            s = s.with(Var::SettingA);
        }
        if self.b.is_some() {
            s = s.with(Var::SettingB);
        }
        if self.lambda.is_some() {
            s = s.with(Var::Lambda);
        }
        s
    }

    /// Resolves angle / label values against a space, failing on unknown values.
    pub(crate) fn compile(&self, space: &VariableSpace) -> Result<CompiledCondition> {
        let a = match self.a {
            None => None,
            Some(angle) => Some(
                space
                    .a_index(angle)
                    .ok_or_else(|| Error::UnknownValue(format!("a = {angle}")))?,
            ),
        };
        let b = match self.b {
            None => None,
            Some(angle) => Some(
                space
                    .b_index(angle)
                    .ok_or_else(|| Error::UnknownValue(format!("b = {angle}")))?,
            ),
        };
        let lambda = match &self.lambda {
            None => None,
            Some(label) => Some(
                space
                    .lambda_index(label)
                    .ok_or_else(|| Error::UnknownValue(format!("lambda = {label}")))?,
            ),
        };
        Ok(CompiledCondition { alpha: self.alpha, beta: self.beta, a, b, lambda })
    }
}

/// A condition with setting/lambda values resolved to indices.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub(crate) struct CompiledCondition {
    pub alpha: Option<Outcome>,
    pub beta: Option<Outcome>,
    pub a: Option<usize>,
    pub b: Option<usize>,
    pub lambda: Option<usize>,
}

impl CompiledCondition {
    pub fn matches(&self, asg: &Assignment) -> bool {
        self.alpha.is_none_or(|v| v == asg.alpha)
            && self.beta.is_none_or(|v| v == asg.beta)
            && self.a.is_none_or(|v| v == asg.a)
            && self.b.is_none_or(|v| v == asg.b)
            && self.lambda.is_none_or(|v| v == asg.lambda)
    }

    /// Restriction of a full assignment to a variable set.
    pub fn restrict(asg: &Assignment, keep: VarSet) -> Self {
        CompiledCondition {
            alpha: keep.contains(Var::Alpha).then_some(asg.alpha),
            beta: keep.contains(Var::Beta).then_some(asg.beta),
            a: keep.contains(Var::SettingA).then_some(asg.a),
            b: keep.contains(Var::SettingB).then_some(asg.b),
            lambda: keep.contains(Var::Lambda).then_some(asg.lambda),
        }
    }
}
