//! Machine-checkable reproduction of the class table's consistency and
//! implication columns, for both partitions.
//!
//! Per class the harness applies the exact structural arguments first
//! (missing setting; strict-perfectness reduction), then settles the
//! remaining classes by search: implied-inequality classes get a restarted
//! falsification attempt, the rest a witness hunt for a violating member.
//! Verdicts for the complementary partition follow by the wing-transposition
//! symmetry, with witnesses transposed and re-verified rather than re-searched.

use crate::error::Result;
use crate::inequalities::{generalized_wbi, triple_from, usual_wbi};
use crate::taxonomy::{form_of, strength_of, ClassId, Partition, Strength};
use crate::verifier::search::{
    max_violation_search, MaxViolationOutcome, Orientation, SearchObjective, SearchSpace,
    WitnessEvidence, WITNESS_CLASS_TOL,
};
use crate::verifier::structural::{
    missing_setting_inconsistency, reduction_under_strict_perfectness, MissingSettingProof,
    ReductionProof,
};
use crate::verifier::AssumptionRegime;
use serde::Serialize;

/// Status of a class under a background-assumption regime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VerdictStatus {
    #[serde(rename = "inconsistent")]
    Inconsistent,
    #[serde(rename = "implies-bi")]
    ImpliesBi,
    #[serde(rename = "can-violate")]
    CanViolate,
}

impl VerdictStatus {
    /// The published column glyphs: `-` inconsistent, `1` implies the
    /// inequalities, `0` does not (can violate).
    pub fn glyph(self) -> char {
        match self {
            VerdictStatus::Inconsistent => '-',
            VerdictStatus::ImpliesBi => '1',
            VerdictStatus::CanViolate => '0',
        }
    }
}

/// Supporting evidence attached to a verdict.
#[derive(Clone, Debug, Serialize)]
pub enum Evidence {
    MissingSetting(MissingSettingProof),
    Reduction(ReductionProof),
    /// Concrete violating member: classification, margins, residual.
    Witness(WitnessEvidence),
    /// Best feasible margin found while trying to break the implied
    /// inequality; surviving means it stayed at or below zero.
    Falsification {
        objective: SearchObjective,
        best_feasible_margin: f64,
        best_residual: f64,
        restarts: u32,
    },
    /// The search found no violating member although one was expected.
    SearchExhausted { best_feasible_margin: f64, best_residual: f64, restarts: u32 },
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassVerdict {
    pub class: ClassId,
    pub status: VerdictStatus,
    pub evidence: Evidence,
}

#[derive(Clone, Debug, Serialize)]
pub struct Table1Report {
    pub regime: AssumptionRegime,
    pub seed: u64,
    pub restarts: u32,
    pub alpha: Vec<ClassVerdict>,
    pub beta: Vec<ClassVerdict>,
}

/// A surviving falsification attempt may leave float-level slack in the best
/// feasible margin; anything at or below this is a pass.
pub const FALSIFICATION_MARGIN_TOL: f64 = 1e-9;

/// The published status of a class index under strict or nearly perfect
/// correlations (columns VII and VIII of the class table).
pub fn expected_status(index: u8, regime: AssumptionRegime) -> VerdictStatus {
    let bits = crate::taxonomy::FORMS[index as usize - 1];
    let (m1, m2) = bits.missing_settings();
    if m1 || m2 {
        return VerdictStatus::Inconsistent;
    }
    if regime.is_strict() && [4, 5, 10, 15, 16].contains(&index) {
        return VerdictStatus::Inconsistent;
    }
    if [15, 16, 22, 29].contains(&index) {
        return VerdictStatus::ImpliesBi;
    }
    VerdictStatus::CanViolate
}

/// Reproduces both partitions' verdict columns for one regime.
pub fn reproduce_table1(
    regime: AssumptionRegime,
    space: &SearchSpace,
    seed: u64,
    restarts: u32,
) -> Result<Table1Report> {
    space.validate()?;
    let mut alpha = Vec::with_capacity(32);
    for index in 1..=32u8 {
        alpha.push(alpha_verdict(ClassId::alpha(index), regime, space, seed, restarts)?);
    }
    let beta = alpha
        .iter()
        .map(|v| transpose_verdict(v, regime, space))
        .collect::<Result<Vec<_>>>()?;
    Ok(Table1Report { regime, seed, restarts, alpha, beta })
}

/// Verdict for a single class; complementary-partition classes go through
/// the wing-transposition symmetry like the full table does.
pub fn verify_class(
    class: ClassId,
    regime: AssumptionRegime,
    space: &SearchSpace,
    seed: u64,
    restarts: u32,
) -> Result<ClassVerdict> {
    space.validate()?;
    match class.partition {
        Partition::Alpha => alpha_verdict(class, regime, space, seed, restarts),
        Partition::Beta => {
            let alpha = alpha_verdict(ClassId::alpha(class.index), regime, space, seed, restarts)?;
            transpose_verdict(&alpha, regime, space)
        }
    }
}

fn alpha_verdict(
    class: ClassId,
    regime: AssumptionRegime,
    space: &SearchSpace,
    seed: u64,
    restarts: u32,
) -> Result<ClassVerdict> {
    if let Some(proof) = missing_setting_inconsistency(class, regime) {
        return Ok(ClassVerdict {
            class,
            status: VerdictStatus::Inconsistent,
            evidence: Evidence::MissingSetting(proof),
        });
    }
    if regime.is_strict() {
        if let Some(proof) = reduction_under_strict_perfectness(class) {
            return Ok(ClassVerdict {
                class,
                status: VerdictStatus::Inconsistent,
                evidence: Evidence::Reduction(proof),
            });
        }
    }
    if strength_of(class) != Strength::StronglyNonlocal {
        // the surviving weakly non-local and local classes imply the
        // inequalities; attack that claim with a restarted search over every
        // triple orientation the class's form implies
        let orientations: &[Orientation] = match class.index {
            // the outcome dependent form retains the local setting: its
            // derivation yields the forward instance on this grid
            16 => &[Orientation::Forward],
            _ => &[Orientation::Forward, Orientation::Reversed],
        };
        // the settings-swapped sibling of the outcome dependent form draws
        // its correlation hypotheses from the swapped setting pairs, which
        // only a symmetric grid carries; the other implied classes are
        // attackable on the plain grid (a strictly weaker constraint set,
        // hence stronger surviving evidence)
        let attack_space = if class.index == 15 { space.symmetric() } else { space.clone() };
        let mut best_margin = f64::NEG_INFINITY;
        let mut best_residual = f64::INFINITY;
        let mut total_restarts = 0;
        let mut objective = SearchObjective::USUAL;
        for &orientation in orientations {
            objective = if regime.is_strict() {
                SearchObjective::usual(orientation)
            } else {
                SearchObjective::generalized(orientation)
            };
            let out =
                max_violation_search(class, regime, &attack_space, seed, restarts, objective)?;
            best_margin = best_margin.max(out.best_feasible_margin);
            best_residual = best_residual.min(out.best_residual);
            total_restarts += out.restarts;
        }
        let status = if best_margin <= FALSIFICATION_MARGIN_TOL {
            VerdictStatus::ImpliesBi
        } else {
            // a genuine violation of the implied inequality would mean a bug
            // in either the analysis or the constraints; surface it
            VerdictStatus::CanViolate
        };
        return Ok(ClassVerdict {
            class,
            status,
            evidence: Evidence::Falsification {
                objective,
                best_feasible_margin: best_margin,
                best_residual,
                restarts: total_restarts,
            },
        });
    }
    let out =
        max_violation_search(class, regime, space, seed, restarts, SearchObjective::USUAL)?;
    match best_violating(&out) {
        Some(w) => Ok(ClassVerdict {
            class,
            status: VerdictStatus::CanViolate,
            evidence: Evidence::Witness(w),
        }),
        None => Ok(ClassVerdict {
            class,
            status: VerdictStatus::ImpliesBi,
            evidence: Evidence::SearchExhausted {
                best_feasible_margin: out.best_feasible_margin,
                best_residual: out.best_residual,
                restarts: out.restarts,
            },
        }),
    }
}

fn best_violating(out: &MaxViolationOutcome) -> Option<WitnessEvidence> {
    out.best.clone().filter(|w| w.usual.violated)
}

/// Derives the complementary-partition verdict from an alpha one. Structural
/// proofs are regenerated for the transposed class. Witnesses are carried
/// over by transposing the wings and flipping both outcomes, which maps an
/// alpha-class member to the same-index beta-class member and preserves the
/// (alpha-, beta+) triple cells exactly; the transported witness is
/// re-classified and its reports recomputed rather than trusted.
fn transpose_verdict(
    verdict: &ClassVerdict,
    regime: AssumptionRegime,
    space: &SearchSpace,
) -> Result<ClassVerdict> {
    let class = ClassId { index: verdict.class.index, partition: Partition::Beta };
    let evidence = match &verdict.evidence {
        Evidence::MissingSetting(_) => Evidence::MissingSetting(
            missing_setting_inconsistency(class, regime)
                .expect("missing-setting proofs are partition-symmetric"),
        ),
        Evidence::Reduction(_) => Evidence::Reduction(
            reduction_under_strict_perfectness(class)
                .expect("reduction proofs are partition-symmetric"),
        ),
        Evidence::Falsification { objective, best_feasible_margin, best_residual, restarts } => {
            // wing transposition is a margin-preserving bijection between the
            // feasible sets of the two partitions, so the statistic carries over
            Evidence::Falsification {
                objective: *objective,
                best_feasible_margin: *best_feasible_margin,
                best_residual: *best_residual,
                restarts: *restarts,
            }
        }
        Evidence::SearchExhausted { best_feasible_margin, best_residual, restarts } => {
            Evidence::SearchExhausted {
                best_feasible_margin: *best_feasible_margin,
                best_residual: *best_residual,
                restarts: *restarts,
            }
        }
        Evidence::Witness(w) => Evidence::Witness(transpose_witness(w, space)?),
    };
    Ok(ClassVerdict { class, status: verdict.status, evidence })
}

fn transpose_witness(w: &WitnessEvidence, space: &SearchSpace) -> Result<WitnessEvidence> {
    let transported = w.distribution.swap_outcome_roles()?.flip_outcomes();
    let classification =
        crate::taxonomy::classify(&transported, Partition::Beta, &WITNESS_CLASS_TOL)?;
    // the triple instance transposes with the wings: the forward instance of
    // the original is the reversed instance of the transported distribution,
    // cell for cell
    let transported_orientation = match w.orientation {
        Orientation::Forward => Orientation::Reversed,
        Orientation::Reversed => Orientation::Forward,
    };
    let (a1, a2, b2, b3) = space.triple_angles(transported_orientation);
    let triple = triple_from(&transported, a1, a2, b2, b3)?;
    let usual = usual_wbi(&triple);
    let generalized = generalized_wbi(&triple, w.epsilon.min(0.999_999))?;
    Ok(WitnessEvidence {
        distribution: transported,
        classified: classification.class,
        residual: w.residual,
        epsilon: w.epsilon,
        usual,
        generalized,
        orientation: transported_orientation,
        restart: w.restart,
    })
}

/// Renders two regime reports side by side in the published layout: one row
/// per class with the form's conditioner pattern, the strict and nearly
/// columns (computed next to expected), and a note for the named classes.
pub fn render_table1(strict: &Table1Report, nearly: &Table1Report) -> String {
    let note = |i: u8| match i {
        3 => "partially entangled QM",
        7 => "maximally entangled QM",
        16 => "purely outcome dependent",
        22 => "settings-swapped local form",
        29 => "local factorization",
        _ => "",
    };
    let mut out = String::new();
    out.push_str(
        "  i | P(alpha| beta b a L) . P(beta| a b L) | strict       | nearly       | note\n",
    );
    out.push_str(
        "    |      (first factor)    (second factor)| got expected | got expected |\n",
    );
    out.push_str(&"-".repeat(96));
    out.push('\n');
    for i in 1..=32u8 {
        let bits = form_of(ClassId::alpha(i)).bits;
        let b = |x: bool| if x { '1' } else { '0' };
        let strict_v = &strict.alpha[i as usize - 1];
        let nearly_v = &nearly.alpha[i as usize - 1];
        out.push_str(&format!(
            " {i:>2} |        {} {} {}                {} {}      |  {}     {}     |  {}     {}     | {}\n",
            b(bits.first_distant_outcome),
            b(bits.first_distant_setting),
            b(bits.first_local_setting),
            b(bits.second_distant_setting),
            b(bits.second_local_setting),
            strict_v.status.glyph(),
            expected_status(i, strict.regime).glyph(),
            nearly_v.status.glyph(),
            expected_status(i, nearly.regime).glyph(),
            note(i),
        ));
    }
    out
}
