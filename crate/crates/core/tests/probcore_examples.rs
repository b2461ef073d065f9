//! Worked examples for the probability core operations: marginals,
//! conditionals, independence tests, autonomy and deviation profiles on the
//! named distributions.

use belltax::constructors::{
    h10_nearly_perfect_example, h14_violating_example, h29_perfect_example,
    quantum_distribution_exact,
};
use belltax::probcore::{
    Angle, Condition, Conditional, Exact, JointDistribution, Numeric, Outcome, PairKind, Var,
    VarSet, VariableSpace,
};
use num_traits::{One, Zero};

fn deg(d: f64) -> Angle {
    Angle::from_degrees(d)
}

fn ratio(n: i64, d: i64) -> Exact {
    Exact::from_ratio(n, d)
}

#[test]
fn marginal_of_uniform_outcomes() {
    let space =
        VariableSpace::with_lambda_count(vec![deg(0.0)], vec![deg(0.0)], 1).unwrap();
    let n = space.cell_count() as i64;
    let uniform =
        JointDistribution::new(space, vec![ratio(1, n); n as usize]).unwrap();
    let table = uniform.marginal(VarSet::of(&[Var::Alpha])).unwrap();
    assert_eq!(table.get(&Condition::new().alpha(Outcome::Plus)).unwrap(), ratio(1, 2));
    assert_eq!(table.get(&Condition::new().alpha(Outcome::Minus)).unwrap(), ratio(1, 2));
}

#[test]
fn quantum_settings_marginal_is_uniform() {
    let d = quantum_distribution_exact(vec![deg(0.0), deg(30.0)], vec![deg(30.0), deg(60.0)])
        .unwrap();
    let table = d.marginal(VarSet::of(&[Var::SettingA, Var::SettingB])).unwrap();
    for a in [0.0, 30.0] {
        for b in [30.0, 60.0] {
            assert_eq!(
                table.get(&Condition::new().a(deg(a)).b(deg(b))).unwrap(),
                ratio(1, 4)
            );
        }
    }
}

#[test]
fn h14_lambda_marginal_is_balanced() {
    let table =
        h14_violating_example().marginal(VarSet::of(&[Var::Lambda])).unwrap();
    assert_eq!(table.get(&Condition::new().lambda("l1")).unwrap(), ratio(1, 2));
    assert_eq!(table.get(&Condition::new().lambda("l2")).unwrap(), ratio(1, 2));
}

#[test]
fn quantum_parallel_conditional_is_perfectly_correlated() {
    let d = quantum_distribution_exact(vec![deg(0.0)], vec![deg(0.0)]).unwrap();
    let table = d
        .conditional(
            VarSet::of(&[Var::Alpha, Var::Beta]),
            &Condition::new().a(deg(0.0)).b(deg(0.0)),
        )
        .unwrap()
        .defined()
        .unwrap();
    let cell = |a: Outcome, b: Outcome| {
        table.get(&Condition::new().alpha(a).beta(b)).unwrap()
    };
    assert_eq!(cell(Outcome::Plus, Outcome::Plus), ratio(1, 2));
    assert_eq!(cell(Outcome::Minus, Outcome::Minus), ratio(1, 2));
    assert_eq!(cell(Outcome::Plus, Outcome::Minus), Exact::zero());
    assert_eq!(cell(Outcome::Minus, Outcome::Plus), Exact::zero());
}

#[test]
fn conditioning_on_zero_mass_is_undefined() {
    // the h29 table has no mass on (alpha+, a = 0, lambda = l1)
    let d = h29_perfect_example();
    let cond = d
        .conditional(
            VarSet::of(&[Var::Beta]),
            &Condition::new().alpha(Outcome::Plus).a(deg(0.0)).lambda("l1"),
        )
        .unwrap();
    assert!(cond.is_undefined());
}

#[test]
fn h29_beta_is_determined_at_parallel_settings() {
    let d = h29_perfect_example();
    let table = d
        .conditional(
            VarSet::of(&[Var::Beta]),
            &Condition::new().a(deg(0.0)).b(deg(0.0)).lambda("l1"),
        )
        .unwrap()
        .defined()
        .unwrap();
    assert_eq!(table.get(&Condition::new().beta(Outcome::Minus)).unwrap(), Exact::one());
}

#[test]
fn overlapping_target_and_condition_is_a_usage_error() {
    let d = h29_perfect_example();
    let err = d.conditional(
        VarSet::of(&[Var::Beta]),
        &Condition::new().beta(Outcome::Plus).a(deg(0.0)),
    );
    assert!(matches!(err, Err(belltax::Error::Usage(_))));
}

#[test]
fn independence_examples() {
    let zero = Exact::zero();
    // a locally factorized distribution drops the distant outcome
    let local = h29_perfect_example();
    assert!(local
        .is_conditionally_irrelevant(
            Var::Alpha,
            Var::Beta,
            VarSet::of(&[Var::SettingA, Var::SettingB, Var::Lambda]),
            &zero,
        )
        .unwrap());
    // the entangled statistics retain the distant setting
    let quantum =
        quantum_distribution_exact(vec![deg(0.0), deg(30.0)], vec![deg(30.0), deg(60.0)])
            .unwrap();
    assert!(!quantum
        .is_conditionally_irrelevant(
            Var::Alpha,
            Var::SettingB,
            VarSet::of(&[Var::Beta, Var::SettingA]),
            &zero,
        )
        .unwrap());
    // independent oracle for the h29 second factor: recompute both
    // conditionals by raw summation over the published cells
    let d = h29_perfect_example();
    let raw = |cond: &Condition| d.prob(cond).unwrap();
    for b in [0.0, 90.0] {
        for lambda in ["l1", "l2"] {
            let with_a = |a: f64, beta: Outcome| {
                let num = raw(&Condition::new().beta(beta).a(deg(a)).b(deg(b)).lambda(lambda));
                let den = raw(&Condition::new().a(deg(a)).b(deg(b)).lambda(lambda));
                num / den
            };
            let without_a = |beta: Outcome| {
                let num = raw(&Condition::new().beta(beta).b(deg(b)).lambda(lambda));
                let den = raw(&Condition::new().b(deg(b)).lambda(lambda));
                num / den
            };
            for beta in Outcome::BOTH {
                assert_eq!(with_a(0.0, beta), without_a(beta));
                assert_eq!(with_a(90.0, beta), without_a(beta));
            }
        }
    }
    assert!(d
        .is_conditionally_irrelevant(
            Var::Beta,
            Var::SettingA,
            VarSet::of(&[Var::SettingB, Var::Lambda]),
            &zero,
        )
        .unwrap());
}

#[test]
fn autonomy_examples() {
    let zero = Exact::zero();
    assert!(h29_perfect_example().check_autonomy(&zero));
    assert!(h14_violating_example().check_autonomy(&zero));
    assert!(quantum_distribution_exact(vec![deg(0.0)], vec![deg(0.0)])
        .unwrap()
        .check_autonomy(&zero));
    // a hidden state that copies the first setting is maximally dependent
    let space = VariableSpace::with_lambda_count(
        vec![deg(0.0), deg(90.0)],
        vec![deg(0.0)],
        2,
    )
    .unwrap();
    let copying = JointDistribution::from_fn(space, |asg| {
        if asg.lambda == asg.a {
            ratio(1, 8)
        } else {
            Exact::zero()
        }
    })
    .unwrap();
    assert!(!copying.check_autonomy(&zero));
}

#[test]
fn deviation_profile_of_strict_perfectness_is_zero() {
    let profile = h29_perfect_example().deviation_profile().unwrap();
    assert_eq!(profile.pairs.len(), 4); // two parallel, two perpendicular
    for pair in &profile.pairs {
        assert_eq!(pair.delta, Exact::zero());
    }
    assert_eq!(profile.epsilon, 0.0);
}

#[test]
fn deviation_profile_of_the_nearly_perfect_family() {
    // each pair's summed deviation is twice the per-cell parameter
    let delta = ratio(1, 1000);
    let d = h10_nearly_perfect_example(&delta).unwrap();
    let profile = d.deviation_profile().unwrap();
    let expected = ratio(2, 1000);
    for pair in &profile.pairs {
        assert_eq!(pair.delta, expected, "{:?} pair ({}, {})", pair.kind, pair.a, pair.b);
    }
    assert!((profile.epsilon - 0.002f64.cbrt()).abs() < 1e-12);
    assert_eq!(profile.delta_max(), expected);
    // kinds are split evenly on this grid
    assert_eq!(
        profile.pairs.iter().filter(|p| p.kind == PairKind::Parallel).count(),
        2
    );
}

#[test]
fn deviation_profile_at_the_violation_threshold() {
    // per-cell parameter of half the threshold deviation gives pair sums at
    // the threshold; the derived correction parameter is its cube root
    let delta = ratio(141, 2_500_000); // 5.64e-5
    let d = h10_nearly_perfect_example(&delta).unwrap();
    let profile = d.deviation_profile().unwrap();
    assert_eq!(profile.delta_max(), ratio(282, 2_500_000));
    let expected = (282.0 / 2_500_000.0f64).cbrt();
    assert!((profile.epsilon - expected).abs() < 1e-12);
    // the threshold maps to the verified epsilon value near 0.0483
    assert!((profile.epsilon - 0.048317).abs() < 2e-5);
}

#[test]
fn deviation_profile_requires_partner_pairs() {
    // the published violating grid has no perpendicular partners
    let err = h14_violating_example().deviation_profile();
    assert!(matches!(err, Err(belltax::Error::Configuration(_))));
}

#[test]
fn extended_violating_witness_is_strictly_perfect() {
    let profile = belltax::constructors::h14_violating_extended()
        .deviation_profile()
        .unwrap();
    for pair in &profile.pairs {
        assert_eq!(pair.delta, Exact::zero());
    }
    assert_eq!(profile.epsilon, 0.0);
}

#[test]
fn perfect_local_triple_satisfies_the_inequality() {
    // with a third direction available, the deterministic local model's
    // triple exists and satisfies the inequality; independent oracle: each
    // cell is the fraction of sign patterns with the two required signs,
    // 2 of 8 patterns each
    let d = belltax::constructors::perfect_local_example(&[deg(0.0), deg(30.0), deg(60.0)])
        .unwrap();
    let t = belltax::inequalities::triple_from(&d, deg(0.0), deg(30.0), deg(30.0), deg(60.0))
        .unwrap();
    assert_eq!(t.p13, ratio(1, 4));
    assert_eq!(t.p12, ratio(1, 4));
    assert_eq!(t.p23, ratio(1, 4));
    let report = belltax::inequalities::usual_wbi(&t);
    assert!(!report.violated);
    assert_eq!(report.margin, ratio(-1, 4));
}

#[test]
fn float_mode_accepts_rounding_noise() {
    let d = h14_violating_example().to_float();
    assert!(d.check_autonomy(&1e-9));
    let profile_err = d.deviation_profile();
    assert!(profile_err.is_err()); // same grid limitation in float mode
}
