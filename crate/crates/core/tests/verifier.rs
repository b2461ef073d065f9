//! Integration tests for the verification harness: feasibility and
//! max-violation searches, the hidden-state partition with its interval
//! bounds, and spot checks of the class-table reproduction.

use belltax::probcore::Angle;
use belltax::taxonomy::{ClassId, Partition};
use belltax::verifier::{
    expected_status, feasibility_search, lambda_partition, max_violation_search,
    reproduce_table1, sample_h16_model, verify_table2, AssumptionRegime, FeasibilityOutcome,
    Orientation, SearchObjective, SearchSpace, VerdictStatus, FEASIBLE_RESIDUAL,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn deg(d: f64) -> Angle {
    Angle::from_degrees(d)
}

const SEED: u64 = 17;

#[test]
fn local_class_is_strictly_feasible() {
    let out = feasibility_search(
        ClassId::alpha(29),
        AssumptionRegime::STRICT,
        &SearchSpace::desk_default(),
        SEED,
        12,
    )
    .unwrap();
    match out {
        FeasibilityOutcome::Witness(w) => {
            assert_eq!(w.classified, ClassId::alpha(29));
            assert!(w.residual < FEASIBLE_RESIDUAL);
            assert!(!w.usual.violated);
        }
        other => panic!("expected a witness, got {other:?}"),
    }
}

#[test]
fn outcome_dependent_class_collapses_under_strictness() {
    let out = feasibility_search(
        ClassId::alpha(16),
        AssumptionRegime::STRICT,
        &SearchSpace::desk_default(),
        SEED,
        24,
    )
    .unwrap();
    match out {
        FeasibilityOutcome::Reduces {
            feasible_points,
            max_first_outcome_variation,
            ..
        } => {
            assert!(feasible_points > 0, "the collapse needs feasible evidence");
            assert!(
                max_first_outcome_variation <= 1e-6,
                "outcome dependence must vanish, got {max_first_outcome_variation:.3e}"
            );
        }
        other => panic!("expected a reduction, got {other:?}"),
    }
}

#[test]
fn outcome_dependent_class_is_nearly_feasible() {
    let out = feasibility_search(
        ClassId::alpha(16),
        AssumptionRegime::nearly(1e-3),
        &SearchSpace::desk_default(),
        SEED,
        24,
    )
    .unwrap();
    match out {
        FeasibilityOutcome::Witness(w) => assert_eq!(w.classified, ClassId::alpha(16)),
        other => panic!("expected a witness, got {other:?}"),
    }
}

#[test]
fn class_14_violates_strictly() {
    let out = max_violation_search(
        ClassId::alpha(14),
        AssumptionRegime::STRICT,
        &SearchSpace::desk_default(),
        SEED,
        12,
        SearchObjective::USUAL,
    )
    .unwrap();
    let w = out.best.expect("violating witness");
    assert_eq!(w.classified, ClassId::alpha(14));
    // the published witness with margin 1/8 is a feasible point, so the
    // search has to do at least as well
    assert!(w.usual.margin >= 0.125 - 1e-9, "margin {}", w.usual.margin);
}

#[test]
fn class_10_violates_nearly() {
    let out = max_violation_search(
        ClassId::alpha(10),
        AssumptionRegime::nearly(1e-3),
        &SearchSpace::desk_default(),
        SEED,
        12,
        SearchObjective::USUAL,
    )
    .unwrap();
    let w = out.best.expect("violating witness");
    assert_eq!(w.classified, ClassId::alpha(10));
    assert!(w.usual.margin > 0.1, "margin {}", w.usual.margin);
}

#[test]
fn local_class_survives_falsification() {
    for orientation in [Orientation::Forward, Orientation::Reversed] {
        let out = max_violation_search(
            ClassId::alpha(29),
            AssumptionRegime::STRICT,
            &SearchSpace::desk_default(),
            SEED,
            24,
            SearchObjective::usual(orientation),
        )
        .unwrap();
        assert!(
            out.best_feasible_margin <= 1e-9,
            "{orientation:?} margin {}",
            out.best_feasible_margin
        );
    }
}

#[test]
fn swapped_outcome_dependent_class_survives_falsification_on_its_grid() {
    // the settings-swapped sibling of the outcome dependent class draws its
    // hypotheses from the swapped pairs; on the symmetric grid both triple
    // orientations survive
    let space = SearchSpace::desk_default().symmetric();
    for orientation in [Orientation::Forward, Orientation::Reversed] {
        let out = max_violation_search(
            ClassId::alpha(15),
            AssumptionRegime::nearly(1e-3),
            &space,
            SEED,
            12,
            SearchObjective::generalized(orientation),
        )
        .unwrap();
        assert!(out.best.is_some(), "the attack must at least find feasible members");
        assert!(
            out.best_feasible_margin <= 1e-9,
            "{orientation:?} margin {}",
            out.best_feasible_margin
        );
    }
}

#[test]
fn lambda_partition_bounds_hold_on_near_perfect_models() {
    // near-perfect models keep epsilon below one half, where the interval
    // bounds are provable; require a substantive number of heavy states
    let space = SearchSpace::desk_default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut substantive = 0;
    for k in 0..200 {
        let model = belltax::verifier::ClassModel::new_structured(
            belltax::taxonomy::FORMS[15],
            space.clone(),
            &mut rng,
            0.01 + (k % 10) as f64 * 0.002,
        );
        let dist = model.to_distribution(Partition::Alpha).unwrap();
        let eps = dist.deviation_profile().unwrap().epsilon;
        if eps >= 0.5 {
            continue;
        }
        for (i, j) in [(0.0, 30.0), (0.0, 60.0), (30.0, 60.0), (60.0, 0.0)] {
            let report = verify_table2(&dist, deg(i), deg(j), eps, &1e-9).unwrap();
            assert!(
                report.all_hold(),
                "bounds failed at eps {eps} for pair ({i}, {j}): {:#?}",
                report.cells.iter().filter(|c| !c.holds).collect::<Vec<_>>()
            );
            if report.cells.iter().any(|c| c.intersection.0 <= 2 && c.intersection.1 <= 2) {
                substantive += 1;
            }
        }
    }
    assert!(substantive >= 50, "only {substantive} substantive intersection checks");
}

#[test]
fn generalized_inequality_never_violated_at_own_epsilon() {
    // uniformly random outcome-dependent models with autonomy: the
    // conclusion holds at every sample's own epsilon, small or not
    let space = SearchSpace::desk_default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0xabcd);
    for _ in 0..300 {
        let model = sample_h16_model(&space, &mut rng);
        let dist = model.to_distribution(Partition::Alpha).unwrap();
        let eps = dist.deviation_profile().unwrap().epsilon.min(0.999_999);
        let triple = belltax::inequalities::triple_from(
            &dist,
            deg(0.0),
            deg(30.0),
            deg(30.0),
            deg(60.0),
        )
        .unwrap();
        let report = belltax::inequalities::generalized_wbi(&triple, eps).unwrap();
        assert!(!report.violated, "violated at eps {eps}: {report:?}");
    }
}

#[test]
fn partition_light_states_match_their_definition() {
    let space = SearchSpace::desk_default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x77);
    for _ in 0..50 {
        let model = sample_h16_model(&space, &mut rng);
        let dist = model.to_distribution(Partition::Alpha).unwrap();
        let eps = dist.deviation_profile().unwrap().epsilon;
        let part = lambda_partition(&dist, deg(30.0), eps, &1e-9).unwrap();
        let mut all: Vec<usize> =
            part.set1.iter().chain(&part.set2).chain(&part.set3).copied().collect();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1], "exhaustive and disjoint");
        for idx in &part.set3 {
            let label = dist.space().lambda_values()[*idx].clone();
            let weight = dist
                .prob(&belltax::probcore::Condition::new().lambda(label))
                .unwrap();
            assert!(weight <= eps + 1e-12);
        }
    }
}

#[test]
fn generalized_inequality_holds_for_the_other_implied_forms() {
    // the implied-inequality property extends to the settings-swapped
    // outcome-dependent form (on the symmetric grid that carries its
    // constraint pairs) and to the two local-style forms, in the orientation
    // each form's derivation yields
    let desk = SearchSpace::desk_default();
    let symmetric = desk.symmetric();
    let checks: [(usize, &SearchSpace, &[Orientation]); 3] = [
        (15, &symmetric, &[Orientation::Forward, Orientation::Reversed]),
        (22, &desk, &[Orientation::Forward, Orientation::Reversed]),
        (29, &desk, &[Orientation::Forward, Orientation::Reversed]),
    ];
    for (row, space, orientations) in checks {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ row as u64);
        for _ in 0..150 {
            let model = belltax::verifier::ClassModel::new_random(
                belltax::taxonomy::FORMS[row - 1],
                (*space).clone(),
                &mut rng,
            );
            let dist = model.to_distribution(Partition::Alpha).unwrap();
            let eps = dist.deviation_profile().unwrap().epsilon.min(0.999_999);
            for &orientation in orientations {
                let (a1, a2, b2, b3) = space.triple_angles(orientation);
                let triple =
                    belltax::inequalities::triple_from(&dist, a1, a2, b2, b3).unwrap();
                let report = belltax::inequalities::generalized_wbi(&triple, eps).unwrap();
                assert!(
                    !report.violated,
                    "form {row} violated {orientation:?} at eps {eps}: {report:?}"
                );
            }
        }
    }
}

#[test]
fn nearly_column_is_stable_across_small_deltas() {
    // the published nearly-perfect column does not depend on how small the
    // deviation bound is; spot classes of every status at 1e-3 and 1e-5
    let space = SearchSpace::desk_default();
    for delta in [1e-3, 1e-5] {
        let regime = AssumptionRegime::nearly(delta);
        for (index, expected) in [
            (4u8, VerdictStatus::CanViolate),
            (10, VerdictStatus::CanViolate),
            (16, VerdictStatus::ImpliesBi),
            (17, VerdictStatus::Inconsistent),
            (22, VerdictStatus::ImpliesBi),
            (29, VerdictStatus::ImpliesBi),
        ] {
            let verdict = belltax::verifier::verify_class(
                ClassId::alpha(index),
                regime,
                &space,
                SEED,
                12,
            )
            .unwrap();
            assert_eq!(verdict.status, expected, "class {index} at delta {delta}");
        }
    }
}

#[test]
fn table_spot_checks() {
    let space = SearchSpace::desk_default();
    let strict = reproduce_table1(AssumptionRegime::STRICT, &space, SEED, 9).unwrap();
    let nearly = reproduce_table1(AssumptionRegime::nearly(1e-3), &space, SEED, 9).unwrap();
    // the published spot values
    assert_eq!(strict.alpha[3].status, VerdictStatus::Inconsistent); // class 4
    assert_eq!(nearly.alpha[3].status, VerdictStatus::CanViolate);
    assert_eq!(nearly.alpha[21].status, VerdictStatus::ImpliesBi); // class 22
    assert_eq!(strict.alpha[28].status, VerdictStatus::ImpliesBi); // class 29
    // the full columns at this restart budget
    for (report, regime) in
        [(&strict, AssumptionRegime::STRICT), (&nearly, AssumptionRegime::nearly(1e-3))]
    {
        for verdicts in [&report.alpha, &report.beta] {
            for v in verdicts {
                assert_eq!(
                    v.status,
                    expected_status(v.class.index, regime),
                    "class {} under {regime}",
                    v.class
                );
            }
        }
    }
}
