//! Exact structural arguments: the missing-setting inconsistency and the
//! collapse of outcome-dependent forms under strictly perfect
//! (anti-)correlations.
//!
//! Both arguments are independent of numeric search. The missing-setting
//! proof is a two-line variation argument; the reduction proof implements the
//! zero-propagation case analysis over the factor tables as exact constraint
//! propagation with a `{= 0, > 0}` case split.

use crate::taxonomy::{form_of, index_of_bits, ClassId, FormBits};
use crate::verifier::AssumptionRegime;
use serde::Serialize;

/// Structural proof that a class cannot reproduce the (nearly) perfect
/// correlation pattern because its form omits a setting entirely: under
/// autonomy the empirical outcome distribution then cannot vary with that
/// setting, yet the correlation pattern varies between parallel and
/// perpendicular pairs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MissingSettingProof {
    pub class: ClassId,
    /// Names of the omitted settings ("a", "b" for the alpha-led partition;
    /// roles transpose for the beta-led one).
    pub missing: Vec<String>,
    /// Lower bound on the match cell at parallel pairs, `(1 - delta_max)/2`.
    pub parallel_match_at_least: f64,
    /// Upper bound on the same cell at perpendicular pairs, `delta_max`.
    pub perpendicular_match_at_most: f64,
}

/// Proof that a form collapses to a smaller one under autonomy and strictly
/// perfect (anti-)correlations: in every consistent branch of the case
/// analysis the first factor's dependence on the distant outcome vanishes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReductionProof {
    pub from: ClassId,
    pub to: ClassId,
    /// Number of consistent case-analysis leaves examined.
    pub leaves: usize,
}

/// Returns the structural proof when the class's form omits a setting; `None`
/// otherwise, or when `delta_max >= 1/3` (the variation argument then has no
/// bite: the bounds `(1-d)/2` and `d` no longer separate).
pub fn missing_setting_inconsistency(
    class: ClassId,
    regime: AssumptionRegime,
) -> Option<MissingSettingProof> {
    if regime.delta_max >= 1.0 / 3.0 {
        return None;
    }
    let bits = form_of(class).bits;
    let (first_side_missing, second_side_missing) = bits.missing_settings();
    if !first_side_missing && !second_side_missing {
        return None;
    }
    // roles: for the alpha-led partition the first factor's distant setting
    // is b and its local setting a; the beta-led partition transposes them
    let (distant_name, local_name) = match class.partition {
        crate::taxonomy::Partition::Alpha => ("b", "a"),
        crate::taxonomy::Partition::Beta => ("a", "b"),
    };
    let mut missing = Vec::new();
    if first_side_missing {
        missing.push(distant_name.to_string());
    }
    if second_side_missing {
        missing.push(local_name.to_string());
    }
    Some(MissingSettingProof {
        class,
        missing,
        parallel_match_at_least: (1.0 - regime.delta_max) / 2.0,
        perpendicular_match_at_most: regime.delta_max,
    })
}

/// Symbolic setting values used in the case analysis: one direction and its
/// perpendicular.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Sym {
    Dir,
    Perp,
}

const SYMS: [Sym; 2] = [Sym::Dir, Sym::Perp];

/// Knowledge about one factor probability.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Val {
    Unknown,
    Zero,
    One,
    /// Strictly positive, exact value unknown.
    Pos,
}

/// Cell index layout for the propagation state. First-factor cells are
/// indexed by (outcome, conditioning outcome?, distant sym?, local sym?);
/// second-factor cells by (outcome, distant sym?, local sym?). Absent
/// conditioners collapse the corresponding axis.
#[derive(Clone)]
struct State {
    bits: FormBits,
    first: Vec<Val>,
    second: Vec<Val>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum CellRef {
    First(usize),
    Second(usize),
}

impl State {
    fn new(bits: FormBits) -> Self {
        State { bits, first: vec![Val::Unknown; 16], second: vec![Val::Unknown; 8] }
    }

    fn first_index(&self, out: usize, beta: usize, distant: Sym, local: Sym) -> usize {
        let b = if self.bits.first_distant_outcome { beta } else { 0 };
        let d = if self.bits.first_distant_setting { distant as usize } else { 0 };
        let l = if self.bits.first_local_setting { local as usize } else { 0 };
        ((out * 2 + b) * 2 + d) * 2 + l
    }

    fn second_index(&self, out: usize, distant: Sym, local: Sym) -> usize {
        let d = if self.bits.second_distant_setting { distant as usize } else { 0 };
        let l = if self.bits.second_local_setting { local as usize } else { 0 };
        (out * 2 + d) * 2 + l
    }

    fn get(&self, r: CellRef) -> Val {
        match r {
            CellRef::First(i) => self.first[i],
            CellRef::Second(i) => self.second[i],
        }
    }

    /// Complementary cell (same context, flipped outcome).
    fn partner(&self, r: CellRef) -> CellRef {
        match r {
            CellRef::First(i) => CellRef::First(i ^ 8),
            CellRef::Second(i) => CellRef::Second(i ^ 4),
        }
    }

    /// Assigns, propagating the complement rule. Returns false on conflict.
    fn assign(&mut self, r: CellRef, v: Val) -> bool {
        let cur = self.get(r);
        let merged = match (cur, v) {
            (a, b) if a == b => a,
            (Val::Unknown, b) => b,
            (Val::Pos, Val::One) | (Val::One, Val::Pos) => Val::One,
            (Val::Zero, Val::Pos | Val::One) | (Val::Pos | Val::One, Val::Zero) => return false,
            (a, Val::Unknown) => a,
            _ => unreachable!("exhaustive merge"),
        };
        if merged == cur {
            return true;
        }
        match r {
            CellRef::First(i) => self.first[i] = merged,
            CellRef::Second(i) => self.second[i] = merged,
        }
        match merged {
            Val::Zero => self.assign(self.partner(r), Val::One),
            Val::One => self.assign(self.partner(r), Val::Zero),
            _ => true,
        }
    }
}

/// One product-is-zero constraint: `first * second = 0`.
#[derive(Clone, Copy, Debug)]
struct ZeroProduct {
    first: CellRef,
    second: CellRef,
}

/// The eight zero equations of strictly perfect (anti-)correlations, written
/// against the factor cells the form actually retains: mismatch cells vanish
/// at the two parallel pairs and match cells at the two perpendicular pairs.
type PairConstraints = (Sym, Sym, [(usize, usize); 2]);

fn zero_constraints(state: &State) -> Vec<ZeroProduct> {
    let mut out = Vec::new();
    // (first-wing sym, second-wing sym, cells that vanish)
    let pairs: [PairConstraints; 4] = [
        (Sym::Dir, Sym::Dir, [(0, 1), (1, 0)]),
        (Sym::Perp, Sym::Perp, [(0, 1), (1, 0)]),
        (Sym::Dir, Sym::Perp, [(0, 0), (1, 1)]),
        (Sym::Perp, Sym::Dir, [(0, 0), (1, 1)]),
    ];
    for (a_sym, b_sym, cells) in pairs {
        for (alpha, beta) in cells {
            out.push(ZeroProduct {
                // the first factor's distant setting is the second wing's
                first: CellRef::First(state.first_index(alpha, beta, b_sym, a_sym)),
                second: CellRef::Second(state.second_index(beta, a_sym, b_sym)),
            });
        }
    }
    out
}

/// Fixpoint propagation of the zero-product constraints. Returns false on
/// contradiction.
fn propagate(state: &mut State, constraints: &[ZeroProduct]) -> bool {
    loop {
        let mut changed = false;
        for c in constraints {
            let f = state.get(c.first);
            let g = state.get(c.second);
            match (f, g) {
                (Val::Pos | Val::One, Val::Pos | Val::One) => return false,
                (Val::Pos | Val::One, _) if g != Val::Zero => {
                    if !state.assign(c.second, Val::Zero) {
                        return false;
                    }
                    changed = true;
                }
                (_, Val::Pos | Val::One) if f != Val::Zero => {
                    if !state.assign(c.first, Val::Zero) {
                        return false;
                    }
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            return true;
        }
    }
}

/// Cells still undetermined that appear in a not-yet-satisfied constraint.
fn open_cell(state: &State, constraints: &[ZeroProduct]) -> Option<CellRef> {
    for c in constraints {
        let f = state.get(c.first);
        let g = state.get(c.second);
        if f == Val::Zero || g == Val::Zero {
            continue;
        }
        if f == Val::Unknown {
            return Some(c.first);
        }
        if g == Val::Unknown {
            return Some(c.second);
        }
    }
    None
}

/// Explores the `{= 0, > 0}` case tree. Returns the number of consistent
/// leaves, or `None` when some consistent leaf fails the outcome-invariance
/// check (meaning no collapse can be concluded).
fn explore(state: State, constraints: &[ZeroProduct]) -> Option<usize> {
    let mut state = state;
    if !propagate(&mut state, constraints) {
        // contradictory branch contributes no leaves
        return Some(0);
    }
    if let Some(cell) = open_cell(&state, constraints) {
        let mut zero_branch = state.clone();
        let leaves_zero = if zero_branch.assign(cell, Val::Zero) {
            explore(zero_branch, constraints)?
        } else {
            0
        };
        let mut pos_branch = state;
        let leaves_pos = if pos_branch.assign(cell, Val::Pos) {
            explore(pos_branch, constraints)?
        } else {
            0
        };
        return Some(leaves_zero + leaves_pos);
    }
    // a consistent leaf: the first factor must have lost its dependence on
    // the distant outcome, with all involved cells pinned to 0 or 1
    for out in 0..2 {
        for d in SYMS {
            for l in SYMS {
                let with_plus = state.first[state.first_index(out, 0, d, l)];
                let with_minus = state.first[state.first_index(out, 1, d, l)];
                let determined =
                    matches!(with_plus, Val::Zero | Val::One) && with_plus == with_minus;
                if !determined {
                    return None;
                }
            }
        }
    }
    Some(1)
}

/// Implements the strict-perfectness collapse: for classes whose form retains
/// the distant outcome and at most one setting in the first factor (while the
/// form as a whole retains both settings), the case analysis forces the first
/// factor's outcome dependence to vanish, so the class reduces to the one
/// with that conditioner dropped. Returns `None` when the precondition fails
/// or the analysis cannot force the collapse.
pub fn reduction_under_strict_perfectness(class: ClassId) -> Option<ReductionProof> {
    let bits = form_of(class).bits;
    if !bits.first_distant_outcome {
        return None;
    }
    if bits.first_distant_setting && bits.first_local_setting {
        return None;
    }
    let (miss_first, miss_second) = bits.missing_settings();
    if miss_first || miss_second {
        return None;
    }
    let state = State::new(bits);
    let constraints = zero_constraints(&state);
    let leaves = explore(state, &constraints)?;
    if leaves == 0 {
        return None;
    }
    let reduced = FormBits { first_distant_outcome: false, ..bits };
    let to = ClassId { index: index_of_bits(&reduced), partition: class.partition };
    Some(ReductionProof { from: class, to, leaves })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::Partition;

    #[test]
    fn missing_setting_fires_for_condition_i_classes() {
        let expected: Vec<u8> = (17..=32).filter(|i| *i != 22 && *i != 29).collect();
        for i in 1..=32u8 {
            let hit = missing_setting_inconsistency(ClassId::alpha(i), AssumptionRegime::STRICT)
                .is_some();
            assert_eq!(hit, expected.contains(&i), "class {i}");
            let hit_nearly = missing_setting_inconsistency(
                ClassId::alpha(i),
                AssumptionRegime::nearly(1e-3),
            )
            .is_some();
            assert_eq!(hit_nearly, expected.contains(&i), "class {i} nearly");
        }
    }

    #[test]
    fn missing_setting_names_the_omitted_variable() {
        let proof =
            missing_setting_inconsistency(ClassId::alpha(17), AssumptionRegime::STRICT).unwrap();
        assert_eq!(proof.missing, vec!["b".to_string()]);
        let proof =
            missing_setting_inconsistency(ClassId::alpha(18), AssumptionRegime::STRICT).unwrap();
        assert_eq!(proof.missing, vec!["a".to_string()]);
        let proof =
            missing_setting_inconsistency(ClassId::alpha(32), AssumptionRegime::STRICT).unwrap();
        assert_eq!(proof.missing, vec!["b".to_string(), "a".to_string()]);
    }

    #[test]
    fn missing_setting_vacuous_for_huge_delta() {
        assert!(missing_setting_inconsistency(
            ClassId::alpha(17),
            AssumptionRegime::nearly(0.4)
        )
        .is_none());
    }

    #[test]
    fn reductions_match_the_published_map() {
        let expected = [(16u8, 29u8), (10, 14), (15, 22), (4, 11), (5, 12)];
        for (from, to) in expected {
            let proof = reduction_under_strict_perfectness(ClassId::alpha(from))
                .unwrap_or_else(|| panic!("class {from} must reduce"));
            assert_eq!(proof.to, ClassId::alpha(to), "class {from}");
            assert!(proof.leaves >= 2, "class {from} case analysis is nontrivial");
            // same collapse in the complementary partition
            let proof = reduction_under_strict_perfectness(ClassId::beta(from)).unwrap();
            assert_eq!(proof.to.index, to);
            assert_eq!(proof.to.partition, Partition::Beta);
        }
    }

    #[test]
    fn no_reduction_outside_condition_ii() {
        for i in (1..=32u8).filter(|i| ![4, 5, 10, 15, 16].contains(i)) {
            assert!(
                reduction_under_strict_perfectness(ClassId::alpha(i)).is_none(),
                "class {i} must not reduce"
            );
        }
    }
}
