//! Explicit distributions: the quantum statistics for (partially) entangled
//! photon pairs and the witness families used to establish class consistency
//! and inequality violation.
//!
//! All witness tables are built in exact rational arithmetic. The violating
//! witnesses keep the published four-setting grids so that their cells can be
//! compared literally; the perfect family generalizes to arbitrary direction
//! sets.

use crate::error::{Error, Result};
use crate::probcore::{
    Angle, DistBuilder, Exact, JointDistribution, Numeric, Outcome, VariableSpace,
};
use num_traits::{One, Zero};

fn deg(d: f64) -> Angle {
    Angle::from_degrees(d)
}

fn ratio(n: i64, d: i64) -> Exact {
    Exact::from_ratio(n, d)
}

/// Configuration for the quantum statistics of the state
/// `sqrt(p) |++> + sqrt(1-p) |-->` measured with linear polarizers.
#[derive(Clone, Debug)]
pub struct QuantumConfig {
    pub a_settings: Vec<Angle>,
    pub b_settings: Vec<Angle>,
    /// Entanglement weight `p` in [0, 1]; `p = 1/2` is the maximally
    /// entangled state.
    pub entanglement: f64,
}

impl QuantumConfig {
    pub fn maximally_entangled(a_settings: Vec<Angle>, b_settings: Vec<Angle>) -> Self {
        QuantumConfig { a_settings, b_settings, entanglement: 0.5 }
    }
}

/// Exact quantum distribution for the maximally entangled state: singleton
/// hidden state, uniform settings, outcome cells `cos^2(a-b)/2` on the
/// diagonal and `sin^2(a-b)/2` off it. Requires every setting-pair difference
/// to be a multiple of 30 or 45 degrees so the cells stay rational.
pub fn quantum_distribution_exact(
    a_settings: Vec<Angle>,
    b_settings: Vec<Angle>,
) -> Result<JointDistribution<Exact>> {
    let space = VariableSpace::new(a_settings, b_settings, vec!["q".into()])?;
    let na = space.a_settings().len() as i64;
    let nb = space.b_settings().len() as i64;
    let setting_weight = ratio(1, 2 * na * nb);
    let mut weights = Vec::with_capacity(space.cell_count());
    for asg in space.assignments() {
        let a = space.a_settings()[asg.a];
        let b = space.b_settings()[asg.b];
        let cos2 = a.exact_cos2_diff(b).ok_or_else(|| {
            Error::Configuration(format!(
                "cos^2({a} - {b}) is irrational; exact mode needs differences in multiples of 30 or 45 degrees"
            ))
        })?;
        let cell = if asg.alpha == asg.beta { cos2 } else { Exact::one() - cos2 };
        weights.push(cell * setting_weight.clone());
    }
    JointDistribution::new(space, weights)
}

/// Quantum statistics for arbitrary entanglement `p` in float mode. At
/// `p = 1/2` the conditional cells are `cos^2 / sin^2` of the setting
/// difference; away from it the outcome marginals become `p` and `1-p` and
/// the second factor picks up a local-setting dependence.
pub fn quantum_distribution(cfg: &QuantumConfig) -> Result<JointDistribution<f64>> {
    if !(0.0..=1.0).contains(&cfg.entanglement) {
        return Err(Error::Domain(format!(
            "entanglement p = {} outside [0, 1]",
            cfg.entanglement
        )));
    }
    let space =
        VariableSpace::new(cfg.a_settings.clone(), cfg.b_settings.clone(), vec!["q".into()])?;
    let (sp, sq) = (cfg.entanglement.sqrt(), (1.0 - cfg.entanglement).sqrt());
    let setting_weight = 1.0 / (space.a_settings().len() * space.b_settings().len()) as f64;
    let weights = space
        .assignments()
        .map(|asg| {
            let a = space.a_settings()[asg.a].degrees().to_radians();
            let b = space.b_settings()[asg.b].degrees().to_radians();
            let (ca, sa) = (a.cos(), a.sin());
            let (cb, sb) = (b.cos(), b.sin());
            let amp = match (asg.alpha, asg.beta) {
                (Outcome::Plus, Outcome::Plus) => sp * ca * cb + sq * sa * sb,
                (Outcome::Plus, Outcome::Minus) => -sp * ca * sb + sq * sa * cb,
                (Outcome::Minus, Outcome::Plus) => -sp * sa * cb + sq * ca * sb,
                (Outcome::Minus, Outcome::Minus) => sp * sa * sb + sq * ca * cb,
            };
            amp * amp * setting_weight
        })
        .collect();
    normalized(space, weights)
}

fn normalized(space: VariableSpace, mut weights: Vec<f64>) -> Result<JointDistribution<f64>> {
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    JointDistribution::new(space, weights)
}

/// The strictly perfect two-state local model over direction 0: settings
/// {0, 90} on both wings, two hidden states with mirrored deterministic
/// outcome functions, every nonzero cell 1/8.
pub fn h29_perfect_example() -> JointDistribution<Exact> {
    let space = VariableSpace::new(
        vec![deg(0.0), deg(90.0)],
        vec![deg(0.0), deg(90.0)],
        vec!["l1".into(), "l2".into()],
    )
    .expect("static space");
    let mut b = DistBuilder::new(space);
    let w = ratio(1, 8);
    use Outcome::{Minus, Plus};
    // l1: outcome - along 0 on both wings, + along 90
    for (alpha, beta, a, bb) in [
        (Minus, Minus, 0.0, 0.0),
        (Minus, Plus, 0.0, 90.0),
        (Plus, Minus, 90.0, 0.0),
        (Plus, Plus, 90.0, 90.0),
    ] {
        b.set(alpha, beta, deg(a), deg(bb), "l1", w.clone()).expect("static entries");
    }
    // l2: the mirrored sign pattern
    for (alpha, beta, a, bb) in [
        (Plus, Plus, 0.0, 0.0),
        (Plus, Minus, 0.0, 90.0),
        (Minus, Plus, 90.0, 0.0),
        (Minus, Minus, 90.0, 90.0),
    ] {
        b.set(alpha, beta, deg(a), deg(bb), "l2", w.clone()).expect("static entries");
    }
    b.build().expect("normalized by construction")
}

/// Shared skeleton of the violating witnesses: the first factor is
/// deterministic per hidden state (`alpha = -` under l1, `+` under l2), the
/// second factor `P(beta | a b lambda)` is supplied per setting pair.
fn two_state_table(
    a_settings: Vec<Angle>,
    b_settings: Vec<Angle>,
    beta_plus_given_l1: impl Fn(Angle, Angle) -> Exact,
) -> Result<JointDistribution<Exact>> {
    let space =
        VariableSpace::new(a_settings, b_settings, vec!["l1".into(), "l2".into()])?;
    let na = space.a_settings().len() as i64;
    let nb = space.b_settings().len() as i64;
    // P(lambda) P(a) P(b) with uniform settings and P(lambda) = 1/2
    let base = ratio(1, 2 * na * nb);
    let weights = space
        .assignments()
        .map(|asg| {
            let a = space.a_settings()[asg.a];
            let b = space.b_settings()[asg.b];
            let beta_plus_l1 = beta_plus_given_l1(a, b);
            // l2 mirrors l1 under a global outcome flip
            let (alpha_det, beta_plus) = match asg.lambda {
                0 => (Outcome::Minus, beta_plus_l1),
                _ => (Outcome::Plus, Exact::one() - beta_plus_l1),
            };
            if asg.alpha != alpha_det {
                return Exact::zero();
            }
            let beta_factor = match asg.beta {
                Outcome::Plus => beta_plus,
                Outcome::Minus => Exact::one() - beta_plus,
            };
            base.clone() * beta_factor
        })
        .collect();
    JointDistribution::new(space, weights)
}

/// The strictly perfect violating witness: deterministic first wing per
/// hidden state, second factor reproducing the quantum statistics at the
/// published grid `a = {0, 30}`, `b = {30, 60}`. Nonzero cells are
/// 1/32, 3/32 and 1/8.
pub fn h14_violating_example() -> JointDistribution<Exact> {
    two_state_table(
        vec![deg(0.0), deg(30.0)],
        vec![deg(30.0), deg(60.0)],
        |a, b| Exact::one() - a.exact_cos2_diff(b).expect("grid differences are multiples of 30"),
    )
    .expect("static table")
}

/// The same construction extended with the parallel and perpendicular
/// partners of both directions, so that a deviation profile can be read off.
pub fn h14_violating_extended() -> JointDistribution<Exact> {
    two_state_table(
        vec![deg(0.0), deg(30.0)],
        vec![deg(0.0), deg(30.0), deg(60.0), deg(90.0), deg(120.0)],
        |a, b| Exact::one() - a.exact_cos2_diff(b).expect("grid differences are multiples of 30"),
    )
    .expect("static table")
}

fn check_delta(delta: &Exact, upper_num: i64, upper_den: i64, what: &str) -> Result<()> {
    if *delta <= Exact::zero() || *delta >= ratio(upper_num, upper_den) {
        return Err(Error::Domain(format!(
            "delta = {delta} outside (0, {upper_num}/{upper_den}) for {what}"
        )));
    }
    Ok(())
}

/// Nearly perfect witness with outcome dependence in the first factor:
/// `P(alpha | beta lambda) . P(beta | a b lambda)` over settings {0, 90} on
/// both wings, with per-cell deviation `delta` at every parallel and
/// perpendicular pair. Valid for `0 < delta < 1/4`.
pub fn h10_nearly_perfect_example(delta: &Exact) -> Result<JointDistribution<Exact>> {
    check_delta(delta, 1, 4, "the nearly perfect family")?;
    let space = VariableSpace::new(
        vec![deg(0.0), deg(90.0)],
        vec![deg(0.0), deg(90.0)],
        vec!["l1".into(), "l2".into()],
    )?;
    let one = Exact::one;
    let two_delta = ratio(2, 1) * delta.clone();
    // P(beta+ | a b l1): 0 at parallel pairs, (1-4d)/(1-2d) at perpendicular
    let perp_val = (one() - ratio(4, 1) * delta.clone()) / (one() - two_delta.clone());
    let beta_plus_l1 = move |a: Angle, b: Angle| {
        if a.is_parallel_to(b) {
            Exact::zero()
        } else {
            perp_val.clone()
        }
    };
    // P(alpha+ | beta l1): 0 given beta+, 2d given beta-; l2 mirrored
    let alpha_plus = |beta: Outcome, lambda: usize| match (beta, lambda) {
        (Outcome::Plus, 0) => Exact::zero(),
        (Outcome::Minus, 0) => two_delta.clone(),
        (Outcome::Plus, _) => one() - two_delta.clone(),
        (Outcome::Minus, _) => one(),
    };
    let base = ratio(1, 8);
    let weights = space
        .assignments()
        .map(|asg| {
            let a = space.a_settings()[asg.a];
            let b = space.b_settings()[asg.b];
            let bp = match asg.lambda {
                0 => beta_plus_l1(a, b),
                _ => one() - beta_plus_l1(a, b),
            };
            let beta_factor = match asg.beta {
                Outcome::Plus => bp,
                Outcome::Minus => one() - bp,
            };
            let ap = alpha_plus(asg.beta, asg.lambda);
            let alpha_factor = match asg.alpha {
                Outcome::Plus => ap,
                Outcome::Minus => one() - ap,
            };
            base.clone() * alpha_factor * beta_factor
        })
        .collect();
    JointDistribution::new(space, weights)
}

/// Nearly perfect violating witness over the published grid `a = {0, 30}`,
/// `b = {30, 60}`: outcome-dependent first factor as in the nearly perfect
/// family, second factor solved to reproduce the quantum statistics at the
/// non-parallel pairs. Its Wigner triple is exactly (3/8, 1/8, 1/8) for every
/// admissible `delta`. Valid for `0 < delta < 1/8`.
pub fn h10_violating_example(delta: &Exact) -> Result<JointDistribution<Exact>> {
    check_delta(delta, 1, 8, "the nearly perfect violating family")?;
    let space = VariableSpace::new(
        vec![deg(0.0), deg(30.0)],
        vec![deg(30.0), deg(60.0)],
        vec!["l1".into(), "l2".into()],
    )?;
    let one = Exact::one;
    let two_delta = ratio(2, 1) * delta.clone();
    let eight_delta = ratio(8, 1) * delta.clone();
    let quarter_scale = ratio(4, 1) * (one() - two_delta.clone());
    // P(beta+ | a b l1) per pair, from the published solution
    let beta_plus_l1 = {
        let quarter_scale = quarter_scale.clone();
        let eight_delta = eight_delta.clone();
        move |a: Angle, b: Angle| -> Exact {
            if a.is_parallel_to(b) {
                return Exact::zero();
            }
            let diff_cos2 = a.exact_cos2_diff(b).expect("grid differences are multiples of 30");
            // cos^2 = 3/4 pairs carry (1-8d), cos^2 = 1/4 pairs carry (3-8d)
            let numerator = if diff_cos2 == ratio(3, 4) {
                one() - eight_delta.clone()
            } else {
                ratio(3, 1) - eight_delta.clone()
            };
            numerator / quarter_scale.clone()
        }
    };
    let alpha_plus = |beta: Outcome, lambda: usize| match (beta, lambda) {
        (Outcome::Plus, 0) => Exact::zero(),
        (Outcome::Minus, 0) => two_delta.clone(),
        (Outcome::Plus, _) => one() - two_delta.clone(),
        (Outcome::Minus, _) => one(),
    };
    let base = ratio(1, 8);
    let weights = space
        .assignments()
        .map(|asg| {
            let a = space.a_settings()[asg.a];
            let b = space.b_settings()[asg.b];
            let bp = match asg.lambda {
                0 => beta_plus_l1(a, b),
                _ => one() - beta_plus_l1(a, b),
            };
            let beta_factor = match asg.beta {
                Outcome::Plus => bp,
                Outcome::Minus => one() - bp,
            };
            let ap = alpha_plus(asg.beta, asg.lambda);
            let alpha_factor = match asg.alpha {
                Outcome::Plus => ap,
                Outcome::Minus => one() - ap,
            };
            base.clone() * alpha_factor * beta_factor
        })
        .collect();
    JointDistribution::new(space, weights)
}

/// Strictly perfect deterministic local model over an arbitrary set of
/// pairwise non-perpendicular directions. Both wings measure along the
/// directions and their perpendiculars. Hidden states are the 2^k sign
/// patterns over the directions, extended to perpendiculars by sign flip.
pub fn perfect_local_example(directions: &[Angle]) -> Result<JointDistribution<Exact>> {
    if directions.is_empty() {
        return Err(Error::Configuration("need at least one direction".into()));
    }
    for (i, x) in directions.iter().enumerate() {
        for y in directions.iter().skip(i + 1) {
            if x.is_parallel_to(*y) || x.is_perpendicular_to(*y) {
                return Err(Error::Configuration(format!(
                    "directions {x} and {y} are parallel or perpendicular; their sign patterns would not be independent"
                )));
            }
        }
    }
    let k = directions.len();
    let mut settings = directions.to_vec();
    for d in directions {
        let p = d.perpendicular();
        if !settings.contains(&p) {
            settings.push(p);
        }
    }
    let labels = (0..1usize << k).map(|m| format!("s{m}")).collect();
    let space = VariableSpace::new(settings.clone(), settings, labels)?;
    // sign of pattern `m` at an angle: the direction's bit, flipped on its
    // perpendicular
    let sign_at = |m: usize, angle: Angle| -> Option<Outcome> {
        for (i, d) in directions.iter().enumerate() {
            if angle.is_parallel_to(*d) {
                return Some(if m >> i & 1 == 0 { Outcome::Plus } else { Outcome::Minus });
            }
            if angle.is_perpendicular_to(*d) {
                return Some(if m >> i & 1 == 0 { Outcome::Minus } else { Outcome::Plus });
            }
        }
        None
    };
    let na = space.a_settings().len() as i64;
    let nb = space.b_settings().len() as i64;
    let base = Exact::from_ratio(1, (1i64 << k) * na * nb);
    let weights = space
        .assignments()
        .map(|asg| {
            let sa = sign_at(asg.lambda, space.a_settings()[asg.a]).expect("a-setting covered");
            let sb = sign_at(asg.lambda, space.b_settings()[asg.b]).expect("b-setting covered");
            if asg.alpha == sa && asg.beta == sb {
                base.clone()
            } else {
                Exact::zero()
            }
        })
        .collect();
    JointDistribution::new(space, weights)
}

/// Transformations that derive further class witnesses from a base one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VariantTransform {
    /// Exchange the setting variables; maps e.g. the local factorization
    /// class to its setting-swapped counterpart.
    SwapSettings,
    /// Transpose the wings (outcomes and settings together); maps a class of
    /// one partition to the same index in the complementary partition.
    SwapOutcomeRoles,
}

pub fn derive_class_variant<N: Numeric>(
    base: &JointDistribution<N>,
    transform: VariantTransform,
) -> Result<JointDistribution<N>> {
    match transform {
        VariantTransform::SwapSettings => base.swap_settings(),
        VariantTransform::SwapOutcomeRoles => base.swap_outcome_roles(),
    }
}
