//! The usual Wigner-Bell inequality, its epsilon-corrected generalization,
//! and violation thresholds.
//!
//! The usual inequality over three directions reads
//! `P(a-b+ | a1 b3) <= P(a-b+ | a1 b2) + P(a-b+ | a2 b3)`.
//! The generalized inequality carries correction terms in a parameter
//! `epsilon` measuring the deviation from perfect (anti-)correlations:
//! `lhs - 2e - e^2 <= rhs / (1-e)^2`. A looser variant dividing by
//! `(1 - e^2)` instead is available behind an explicit flag; the default is
//! the form the published thresholds belong to.

use crate::error::{Error, Result};
use crate::probcore::{
    Angle, Condition, Conditional, JointDistribution, Numeric, Outcome, Var, VarSet,
};
use serde::Serialize;

/// The three conditional probabilities entering a Wigner-Bell inequality:
/// `p13 = P(a-b+ | a1 b3)`, `p12 = P(a-b+ | a1 b2)`, `p23 = P(a-b+ | a2 b3)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerTriple<N: Numeric> {
    pub p13: N,
    pub p12: N,
    pub p23: N,
}

impl<N: Numeric> WignerTriple<N> {
    pub fn new(p13: N, p12: N, p23: N) -> Result<Self> {
        for (name, v) in [("p13", &p13), ("p12", &p12), ("p23", &p23)] {
            let x = v.to_f64();
            if !(0.0..=1.0).contains(&x) || x.is_nan() {
                return Err(Error::Domain(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(WignerTriple { p13, p12, p23 })
    }

    pub fn to_f64(&self) -> WignerTriple<f64> {
        WignerTriple {
            p13: self.p13.to_f64(),
            p12: self.p12.to_f64(),
            p23: self.p23.to_f64(),
        }
    }
}

/// Evaluation of one inequality instance. `violated` means `margin > 0`
/// strictly.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityReport<N: Numeric> {
    pub lhs: N,
    pub rhs: N,
    pub margin: N,
    pub violated: bool,
    pub epsilon: f64,
}

fn report<N: Numeric>(lhs: N, rhs: N, epsilon: f64) -> InequalityReport<N> {
    let margin = lhs.clone() - rhs.clone();
    let violated = margin > N::zero();
    InequalityReport { lhs, rhs, margin, violated, epsilon }
}

/// The usual Wigner-Bell inequality: `lhs = p13`, `rhs = p12 + p23`.
pub fn usual_wbi<N: Numeric>(t: &WignerTriple<N>) -> InequalityReport<N> {
    report(t.p13.clone(), t.p12.clone() + t.p23.clone(), 0.0)
}

/// Denominator placement of the correction term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrectionVariant {
    /// `rhs / (1 - e)^2`, from bounding each of the two factors by `1 - e`
    /// separately; the published threshold numbers belong to this form.
    /// Default.
    Tight,
    /// `rhs / (1 - e^2)`, a looser denominator giving a larger threshold;
    /// exposed for comparison.
    Loose,
}

/// The generalized Wigner-Bell inequality at deviation parameter `eps`.
/// At `eps = 0` it coincides with [`usual_wbi`] exactly.
pub fn generalized_wbi(t: &WignerTriple<f64>, eps: f64) -> Result<InequalityReport<f64>> {
    generalized_wbi_with(t, eps, CorrectionVariant::Tight)
}

pub fn generalized_wbi_with(
    t: &WignerTriple<f64>,
    eps: f64,
    variant: CorrectionVariant,
) -> Result<InequalityReport<f64>> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Domain(format!("epsilon = {eps} outside [0, 1)")));
    }
    let lhs = t.p13 - 2.0 * eps - eps * eps;
    let denom = match variant {
        CorrectionVariant::Tight => (1.0 - eps) * (1.0 - eps),
        CorrectionVariant::Loose => 1.0 - eps * eps,
    };
    let rhs = (t.p12 + t.p23) / denom;
    Ok(report(lhs, rhs, eps))
}

/// Largest `eps` for which the generalized inequality is still violated,
/// found by bisection to absolute tolerance `tol`. Returns `None` when the
/// usual inequality is not violated (no positive threshold exists). The
/// violation set is the interval `[0, eps_max)`: the left side is strictly
/// decreasing and the right side strictly increasing in `eps`, so bisection
/// is sound.
pub fn epsilon_max(t: &WignerTriple<f64>, tol: f64) -> Option<f64> {
    epsilon_max_with(t, tol, CorrectionVariant::Tight)
}

pub fn epsilon_max_with(t: &WignerTriple<f64>, tol: f64, variant: CorrectionVariant) -> Option<f64> {
    if !usual_wbi(t).violated {
        return None;
    }
    let violated_at = |e: f64| {
        generalized_wbi_with(t, e, variant).map(|r| r.violated).unwrap_or(false)
    };
    // at e = 0.5 the left side is at most p13 - 1.25 < 0, never violated
    let mut lo = 0.0f64;
    let mut hi = 0.5f64;
    debug_assert!(!violated_at(hi));
    for _ in 0..80 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if violated_at(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// The deviation threshold `eps_max^3`: the largest per-setting-pair
/// imperfection under which the generalized inequality can still be violated.
pub fn delta_threshold(t: &WignerTriple<f64>, tol: f64) -> Option<f64> {
    epsilon_max(t, tol).map(|e| e * e * e)
}

/// Reads the Wigner triple off a distribution at directions `a1, a2` (first
/// wing) and `b2, b3` (second wing): `p13 = P(a-b+ | a1 b3)` and so on.
pub fn triple_from<N: Numeric>(
    dist: &JointDistribution<N>,
    a1: Angle,
    a2: Angle,
    b2: Angle,
    b3: Angle,
) -> Result<WignerTriple<N>> {
    let space = dist.space();
    for (name, angle) in [("a1", a1), ("a2", a2)] {
        if space.a_index(angle).is_none() {
            return Err(Error::Configuration(format!("{name} = {angle} not among the a-settings")));
        }
    }
    for (name, angle) in [("b2", b2), ("b3", b3)] {
        if space.b_index(angle).is_none() {
            return Err(Error::Configuration(format!("{name} = {angle} not among the b-settings")));
        }
    }
    let read = |a: Angle, b: Angle| -> Result<N> {
        let table = dist
            .conditional(VarSet::of(&[Var::Alpha, Var::Beta]), &Condition::new().a(a).b(b))?;
        match table {
            Conditional::Defined(t) => {
                t.get(&Condition::new().alpha(Outcome::Minus).beta(Outcome::Plus))
            }
            Conditional::Undefined => Err(Error::Undefined(format!(
                "setting pair ({a}, {b}) has zero probability"
            ))),
        }
    };
    WignerTriple::new(read(a1, b3)?, read(a1, b2)?, read(a2, b3)?)
}
