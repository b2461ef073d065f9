//! Property-based invariants of the probability core, the classifier and the
//! inequality evaluators.

use belltax::inequalities::{generalized_wbi, usual_wbi, WignerTriple};
use belltax::probcore::{
    Angle, Condition, Conditional, Exact, JointDistribution, Numeric, Outcome, Var, VarSet,
    VariableSpace,
};
use belltax::taxonomy::{classify, form_valid_for, Partition, ProductForm, FORMS};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn deg(d: f64) -> Angle {
    Angle::from_degrees(d)
}

fn small_space() -> VariableSpace {
    VariableSpace::with_lambda_count(
        vec![deg(0.0), deg(90.0)],
        vec![deg(0.0), deg(90.0)],
        2,
    )
    .unwrap()
}

/// Random exact distribution: positive integer weights, exactly normalized.
fn exact_dist() -> impl Strategy<Value = JointDistribution<Exact>> {
    let space = small_space();
    let cells = space.cell_count();
    prop::collection::vec(0u32..12, cells)
        .prop_filter("needs mass", |w| w.iter().any(|x| *x > 0))
        .prop_map(move |raw| {
            let total: i64 = raw.iter().map(|x| *x as i64).sum();
            let weights =
                raw.iter().map(|x| Exact::from_ratio(*x as i64, total)).collect::<Vec<_>>();
            JointDistribution::new(space.clone(), weights).unwrap()
        })
}

fn probability() -> impl Strategy<Value = f64> {
    (0u32..=1000).prop_map(|x| x as f64 / 1000.0)
}

proptest! {
    #[test]
    fn marginals_stay_normalized(dist in exact_dist()) {
        for keep in [
            VarSet::of(&[Var::Alpha]),
            VarSet::of(&[Var::Alpha, Var::SettingB]),
            VarSet::of(&[Var::Lambda, Var::Beta, Var::SettingA]),
        ] {
            let table = dist.marginal(keep).unwrap();
            prop_assert_eq!(table.total(), Exact::one());
        }
    }

    #[test]
    fn marginal_of_marginal_is_marginal(dist in exact_dist()) {
        let big = VarSet::of(&[Var::Alpha, Var::Beta, Var::SettingB]);
        let small = VarSet::of(&[Var::Alpha, Var::SettingB]);
        let direct = dist.marginal(small).unwrap();
        let nested = dist.marginal(big).unwrap().marginal(small).unwrap();
        for (cond, w) in direct.entries() {
            prop_assert_eq!(nested.get(&cond).unwrap(), w);
        }
    }

    #[test]
    fn chain_rule_holds(dist in exact_dist()) {
        let outcomes = VarSet::of(&[Var::Alpha, Var::Beta]);
        let space = dist.space().clone();
        for a in space.a_settings() {
            for b in space.b_settings() {
                for lambda in space.lambda_values() {
                    let given = Condition::new().a(*a).b(*b).lambda(lambda.clone());
                    let joint = match dist.conditional(outcomes, &given).unwrap() {
                        Conditional::Defined(t) => t,
                        Conditional::Undefined => continue,
                    };
                    let beta_table = dist
                        .conditional(VarSet::of(&[Var::Beta]), &given)
                        .unwrap()
                        .defined()
                        .unwrap();
                    for alpha in Outcome::BOTH {
                        for beta in Outcome::BOTH {
                            let lhs = joint
                                .get(&Condition::new().alpha(alpha).beta(beta))
                                .unwrap();
                            let p_beta =
                                beta_table.get(&Condition::new().beta(beta)).unwrap();
                            if p_beta.is_zero() {
                                prop_assert_eq!(lhs, Exact::zero());
                                continue;
                            }
                            let alpha_given_beta = dist
                                .conditional(
                                    VarSet::of(&[Var::Alpha]),
                                    &given.clone().beta(beta),
                                )
                                .unwrap()
                                .defined()
                                .unwrap()
                                .get(&Condition::new().alpha(alpha))
                                .unwrap();
                            prop_assert_eq!(lhs, alpha_given_beta * p_beta);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn zero_mass_conditioning_is_undefined(dist in exact_dist()) {
        // condition on an impossible event by zeroing one lambda's mass:
        // pick the lighter lambda; if both carry mass the property is vacuous
        let space = dist.space().clone();
        for lambda in space.lambda_values() {
            let mass = dist.prob(&Condition::new().lambda(lambda.clone())).unwrap();
            if mass.is_zero() {
                let cond = dist
                    .conditional(VarSet::of(&[Var::Alpha]), &Condition::new().lambda(lambda.clone()))
                    .unwrap();
                prop_assert!(cond.is_undefined());
            }
        }
    }

    #[test]
    fn full_form_is_valid_for_everything(dist in exact_dist()) {
        for partition in [Partition::Alpha, Partition::Beta] {
            let form = ProductForm { partition, bits: FORMS[0] };
            prop_assert!(form_valid_for(&dist, &form, &Exact::zero()).unwrap());
        }
    }

    #[test]
    fn validity_is_monotone(dist in exact_dist()) {
        let valid: Vec<bool> = FORMS
            .iter()
            .map(|bits| {
                let form = ProductForm { partition: Partition::Alpha, bits: *bits };
                form_valid_for(&dist, &form, &Exact::zero()).unwrap()
            })
            .collect();
        for (i, a) in FORMS.iter().enumerate() {
            for (j, b) in FORMS.iter().enumerate() {
                let superset = b.first_distant_outcome >= a.first_distant_outcome
                    && b.first_distant_setting >= a.first_distant_setting
                    && b.first_local_setting >= a.first_local_setting
                    && b.second_distant_setting >= a.second_distant_setting
                    && b.second_local_setting >= a.second_local_setting;
                if superset && valid[i] {
                    prop_assert!(valid[j], "form {} valid but superset {} not", i + 1, j + 1);
                }
            }
        }
    }

    #[test]
    fn classification_is_reweighting_invariant(
        dist in exact_dist(),
        wa in 1u32..6,
        wb in 1u32..6,
    ) {
        let base = classify(&dist, Partition::Alpha, &Exact::zero()).unwrap();
        let a_weights = [Exact::from_ratio(wa as i64, 7), Exact::from_ratio(7 - wa as i64, 7)];
        let b_weights = [Exact::from_ratio(wb as i64, 7), Exact::from_ratio(7 - wb as i64, 7)];
        let mut weights = Vec::new();
        let mut total = Exact::zero();
        for (asg, w) in dist.assignments() {
            let scaled = w.clone() * a_weights[asg.a].clone() * b_weights[asg.b].clone();
            total = total + scaled.clone();
            weights.push(scaled);
        }
        prop_assume!(!total.is_zero());
        let weights: Vec<Exact> = weights.into_iter().map(|w| w / total.clone()).collect();
        let scaled = JointDistribution::new(dist.space().clone(), weights).unwrap();
        let got = classify(&scaled, Partition::Alpha, &Exact::zero()).unwrap();
        prop_assert_eq!(got.class, base.class);
    }

    #[test]
    fn swap_settings_is_involutive(dist in exact_dist()) {
        let twice = dist.swap_settings().unwrap().swap_settings().unwrap();
        prop_assert_eq!(twice, dist);
    }

    #[test]
    fn transposition_swaps_partitions(dist in exact_dist()) {
        let transposed = dist.swap_outcome_roles().unwrap();
        let alpha = classify(&dist, Partition::Alpha, &Exact::zero()).unwrap();
        let beta_of_transposed = classify(&transposed, Partition::Beta, &Exact::zero()).unwrap();
        prop_assert_eq!(alpha.class.index, beta_of_transposed.class.index);
    }

    #[test]
    fn outcome_flip_preserves_class(dist in exact_dist()) {
        let flipped = dist.flip_outcomes();
        let a = classify(&dist, Partition::Alpha, &Exact::zero()).unwrap();
        let b = classify(&flipped, Partition::Alpha, &Exact::zero()).unwrap();
        prop_assert_eq!(a.class, b.class);
    }

    #[test]
    fn generalized_at_zero_is_usual(
        p13 in probability(),
        p12 in probability(),
        p23 in probability(),
    ) {
        let t = WignerTriple::new(p13, p12, p23).unwrap();
        let u = usual_wbi(&t);
        let g = generalized_wbi(&t, 0.0).unwrap();
        prop_assert_eq!(u.lhs, g.lhs);
        prop_assert_eq!(u.rhs, g.rhs);
        prop_assert_eq!(u.violated, g.violated);
    }

    #[test]
    fn generalized_margin_decreases_in_epsilon(
        p13 in probability(),
        p12 in probability(),
        p23 in probability(),
        e1 in 0u32..900,
        step in 1u32..100,
    ) {
        let t = WignerTriple::new(p13, p12, p23).unwrap();
        let lo = e1 as f64 / 1000.0;
        let hi = (e1 + step) as f64 / 1000.0;
        let m_lo = generalized_wbi(&t, lo).unwrap().margin;
        let m_hi = generalized_wbi(&t, hi).unwrap().margin;
        prop_assert!(m_hi < m_lo);
    }

    #[test]
    fn exact_json_round_trip(dist in exact_dist()) {
        let text = belltax::jsonio::save_exact(&dist);
        match belltax::jsonio::load_distribution(&text).unwrap() {
            belltax::jsonio::AnyDistribution::Exact(back) => prop_assert_eq!(back, dist),
            _ => prop_assert!(false, "numeric mode lost"),
        }
    }
}
