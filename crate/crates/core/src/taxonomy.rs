//! The 32-class product-form scheme for both partitions of the hidden joint
//! probability `P(alpha beta | a b lambda)`.
//!
//! Writing the hidden joint probability with the chain rule leading with
//! either outcome gives two factors; each factor may or may not retain each
//! of the variables available to it (the hidden state is always retained).
//! That yields 2^5 = 32 forms per partition. A distribution is classified by
//! its simplest valid form: the one with the fewest conditioning variables.

use crate::error::{Error, Result};
use crate::probcore::{JointDistribution, Numeric};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Which outcome's conditional leads the factorization.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Partition {
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "beta")]
    Beta,
}

impl Partition {
    pub fn suffix(self) -> char {
        match self {
            Partition::Alpha => 'a',
            Partition::Beta => 'b',
        }
    }
}

/// Conditioner pattern of a product form, expressed by variable role. For the
/// alpha-led partition the first factor is `P(alpha | ...)`, whose distant
/// outcome is beta, distant setting b and local setting a; the second factor
/// is `P(beta | ...)` with distant setting a and local setting b. The beta-led
/// partition mirrors all roles.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct FormBits {
    pub first_distant_outcome: bool,
    pub first_distant_setting: bool,
    pub first_local_setting: bool,
    pub second_distant_setting: bool,
    pub second_local_setting: bool,
}

impl FormBits {
    pub const fn new(o: bool, d: bool, l: bool, sd: bool, sl: bool) -> Self {
        FormBits {
            first_distant_outcome: o,
            first_distant_setting: d,
            first_local_setting: l,
            second_distant_setting: sd,
            second_local_setting: sl,
        }
    }

    /// Number of conditioning variables (the hidden state not counted).
    pub fn conditioner_count(&self) -> u32 {
        self.first_distant_outcome as u32
            + self.first_distant_setting as u32
            + self.first_local_setting as u32
            + self.second_distant_setting as u32
            + self.second_local_setting as u32
    }

    /// True when at least one factor retains both settings.
    pub fn has_both_settings_factor(&self) -> bool {
        (self.first_distant_setting && self.first_local_setting)
            || (self.second_distant_setting && self.second_local_setting)
    }

    /// True when some factor retains a space-like separated variable.
    pub fn has_spacelike_conditioner(&self) -> bool {
        self.first_distant_outcome || self.first_distant_setting || self.second_distant_setting
    }

    /// Settings missing from the form entirely, as (distant-of-first,
    /// local-of-first) flags: for the alpha-led partition that is (b, a).
    pub fn missing_settings(&self) -> (bool, bool) {
        let first_side = self.first_distant_setting || self.second_local_setting;
        let second_side = self.first_local_setting || self.second_distant_setting;
        (!first_side, !second_side)
    }

    /// Lexicographic simplicity key used to break ties among valid forms of
    /// equal conditioner count: prefer dropping the distant outcome, then the
    /// first factor's distant setting, then the second factor's distant
    /// setting, then the local settings.
    fn simplicity_key(&self) -> (u32, bool, bool, bool, bool, bool) {
        (
            self.conditioner_count(),
            self.first_distant_outcome,
            self.first_distant_setting,
            self.second_distant_setting,
            self.first_local_setting,
            self.second_local_setting,
        )
    }
}

/// The rows of the class table in their published order (index 1 is
/// `FORMS[0]`). Column order per row: first factor (distant outcome, distant
/// setting, local setting), second factor (distant setting, local setting).
pub const FORMS: [FormBits; 32] = [
    FormBits::new(true, true, true, true, true),    // 1
    FormBits::new(true, true, true, true, false),   // 2
    FormBits::new(true, true, true, false, true),   // 3  QM_p
    FormBits::new(true, true, false, true, true),   // 4
    FormBits::new(true, false, true, true, true),   // 5
    FormBits::new(false, true, true, true, true),   // 6  Bohm_s
    FormBits::new(true, true, true, false, false),  // 7  QM_m
    FormBits::new(false, true, true, true, false),  // 8
    FormBits::new(false, true, true, false, true),  // 9
    FormBits::new(true, false, false, true, true),  // 10
    FormBits::new(false, true, false, true, true),  // 11
    FormBits::new(false, false, true, true, true),  // 12
    FormBits::new(false, true, true, false, false), // 13
    FormBits::new(false, false, false, true, true), // 14
    FormBits::new(true, true, false, true, false),  // 15
    FormBits::new(true, false, true, false, true),  // 16 pure outcome dep.
    FormBits::new(true, false, true, true, false),  // 17
    FormBits::new(true, true, false, false, true),  // 18
    FormBits::new(true, true, false, false, false), // 19
    FormBits::new(true, false, true, false, false), // 20
    FormBits::new(true, false, false, true, false), // 21
    FormBits::new(false, true, false, true, false), // 22
    FormBits::new(false, false, true, true, false), // 23
    FormBits::new(true, false, false, false, true), // 24
    FormBits::new(false, true, false, false, true), // 25
    FormBits::new(true, false, false, false, false), // 26
    FormBits::new(false, true, false, false, false), // 27
    FormBits::new(false, false, false, true, false), // 28
    FormBits::new(false, false, true, false, true), // 29 local factorization
    FormBits::new(false, false, true, false, false), // 30
    FormBits::new(false, false, false, false, true), // 31
    FormBits::new(false, false, false, false, false), // 32
];

/// Identifier of one of the 32 classes in one of the two partitions.
/// Serialized as the string `H16a` / `H16b`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct ClassId {
    pub index: u8,
    pub partition: Partition,
}

impl Serialize for ClassId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ClassId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        ClassId::parse(&s).map_err(serde::de::Error::custom)
    }
}

impl ClassId {
    pub fn new(index: u8, partition: Partition) -> Result<Self> {
        if !(1..=32).contains(&index) {
            return Err(Error::Usage(format!("class index {index} out of range 1..=32")));
        }
        Ok(ClassId { index, partition })
    }

    pub fn alpha(index: u8) -> Self {
        ClassId::new(index, Partition::Alpha).expect("index in range")
    }

    pub fn beta(index: u8) -> Self {
        ClassId::new(index, Partition::Beta).expect("index in range")
    }

    /// Parses ids of the shape `H16a` / `H16b`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let rest = s
            .strip_prefix('H')
            .or_else(|| s.strip_prefix('h'))
            .ok_or_else(|| Error::Parse(format!("class id must look like H16a, got {s:?}")))?;
        let partition = match rest.chars().last() {
            Some('a' | 'A') => Partition::Alpha,
            Some('b' | 'B') => Partition::Beta,
            _ => return Err(Error::Parse(format!("class id must end in a or b, got {s:?}"))),
        };
        let index: u8 = rest[..rest.len() - 1]
            .parse()
            .map_err(|_| Error::Parse(format!("bad class index in {s:?}")))?;
        ClassId::new(index, partition)
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "H{}{}", self.index, self.partition.suffix())
    }
}

/// A product form: a partition plus the conditioner pattern.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct ProductForm {
    pub partition: Partition,
    pub bits: FormBits,
}

/// The class table row for a class id.
pub fn form_of(class: ClassId) -> ProductForm {
    ProductForm { partition: class.partition, bits: FORMS[class.index as usize - 1] }
}

/// Inverse of [`form_of`] within a partition.
pub fn index_of_bits(bits: &FormBits) -> u8 {
    FORMS
        .iter()
        .position(|f| f == bits)
        .map(|i| (i + 1) as u8)
        .expect("every bit pattern appears in the table")
}

/// Locality grouping of a class.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Strength {
    #[serde(rename = "local")]
    Local,
    #[serde(rename = "weak")]
    WeaklyNonlocal,
    #[serde(rename = "strong")]
    StronglyNonlocal,
}

impl fmt::Display for Strength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Strength::Local => "local",
            Strength::WeaklyNonlocal => "weak",
            Strength::StronglyNonlocal => "strong",
        };
        write!(f, "{s}")
    }
}

pub fn strength_of(class: ClassId) -> Strength {
    let by_range = match class.index {
        1..=14 => Strength::StronglyNonlocal,
        15..=28 => Strength::WeaklyNonlocal,
        _ => Strength::Local,
    };
    debug_assert_eq!(by_range, strength_of_bits(&FORMS[class.index as usize - 1]));
    by_range
}

fn strength_of_bits(bits: &FormBits) -> Strength {
    if bits.has_both_settings_factor() {
        Strength::StronglyNonlocal
    } else if bits.has_spacelike_conditioner() {
        Strength::WeaklyNonlocal
    } else {
        Strength::Local
    }
}

/// Outcome of [`classify`].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Classification {
    pub class: ClassId,
    /// True when more than one valid form shares the minimal conditioner
    /// count; the reported class is then fixed by the documented tie order.
    pub tie: bool,
}

/// Conditional tables of a distribution arranged for fast validity checks of
/// all 32 alpha-led forms. The beta-led partition is handled by transposing
/// the distribution (wing roles swapped), which maps each class index to the
/// same index in the other partition.
struct AlphaLedTables<N: Numeric> {
    na: usize,
    nb: usize,
    nl: usize,
    /// mass over (a, b, lambda)
    w3: Vec<N>,
    /// mass over (beta, a, b, lambda)
    w4: Vec<N>,
    /// full weights indexed (alpha, beta, a, b, lambda)
    w5: Vec<N>,
}

impl<N: Numeric> AlphaLedTables<N> {
    fn build(dist: &JointDistribution<N>) -> Self {
        let space = dist.space();
        let (na, nb, nl) =
            (space.a_settings().len(), space.b_settings().len(), space.lambda_values().len());
        let mut w3 = vec![N::zero(); na * nb * nl];
        let mut w4 = vec![N::zero(); 2 * na * nb * nl];
        let mut w5 = vec![N::zero(); 4 * na * nb * nl];
        for (asg, w) in dist.assignments() {
            if w.is_zero() {
                continue;
            }
            let i3 = (asg.a * nb + asg.b) * nl + asg.lambda;
            let i4 = ((asg.beta.index() * na + asg.a) * nb + asg.b) * nl + asg.lambda;
            let i5 = (((asg.alpha.index() * 2 + asg.beta.index()) * na + asg.a) * nb + asg.b) * nl
                + asg.lambda;
            w3[i3] = w3[i3].clone() + w.clone();
            w4[i4] = w4[i4].clone() + w.clone();
            w5[i5] = w5[i5].clone() + w.clone();
        }
        AlphaLedTables { na, nb, nl, w3, w4, w5 }
    }

    fn idx3(&self, a: usize, b: usize, l: usize) -> usize {
        (a * self.nb + b) * self.nl + l
    }

    fn idx4(&self, beta: usize, a: usize, b: usize, l: usize) -> usize {
        ((beta * self.na + a) * self.nb + b) * self.nl + l
    }

    fn idx5(&self, alpha: usize, beta: usize, a: usize, b: usize, l: usize) -> usize {
        (((alpha * 2 + beta) * self.na + a) * self.nb + b) * self.nl + l
    }

    /// Reduced second-factor conditional `P(beta | kept settings, lambda)`.
    /// `keep_a` / `keep_b` select the retained settings; dropped ones are
    /// summed out. Returns `None` on zero conditioning mass.
    fn second_reduced(
        &self,
        beta: usize,
        a: usize,
        b: usize,
        l: usize,
        keep_a: bool,
        keep_b: bool,
    ) -> Option<N> {
        let mut num = N::zero();
        let mut den = N::zero();
        for aa in 0..self.na {
            if keep_a && aa != a {
                continue;
            }
            for bb in 0..self.nb {
                if keep_b && bb != b {
                    continue;
                }
                num = num + self.w4[self.idx4(beta, aa, bb, l)].clone();
                den = den + self.w3[self.idx3(aa, bb, l)].clone();
            }
        }
        if den.is_zero() {
            None
        } else {
            Some(num / den)
        }
    }

    /// Reduced first-factor conditional `P(alpha | kept conditioners, lambda)`.
    #[allow(clippy::too_many_arguments)]
    fn first_reduced(
        &self,
        alpha: usize,
        beta: usize,
        a: usize,
        b: usize,
        l: usize,
        keep_beta: bool,
        keep_b: bool,
        keep_a: bool,
    ) -> Option<N> {
        let mut num = N::zero();
        let mut den = N::zero();
        for bb_out in 0..2 {
            if keep_beta && bb_out != beta {
                continue;
            }
            for aa in 0..self.na {
                if keep_a && aa != a {
                    continue;
                }
                for bb in 0..self.nb {
                    if keep_b && bb != b {
                        continue;
                    }
                    num = num + self.w5[self.idx5(alpha, bb_out, aa, bb, l)].clone();
                    den = den + self.w4[self.idx4(bb_out, aa, bb, l)].clone();
                }
            }
        }
        if den.is_zero() {
            None
        } else {
            Some(num / den)
        }
    }

    /// Validity of one alpha-led form: both factor reductions must hold
    /// within `tol` on every cell with positive conditioning mass.
    fn form_valid(&self, bits: &FormBits, tol: &N) -> bool {
        // second factor: P(beta | a b lambda) must not depend on dropped settings
        for a in 0..self.na {
            for b in 0..self.nb {
                for l in 0..self.nl {
                    let mass = &self.w3[self.idx3(a, b, l)];
                    if mass.is_zero() {
                        continue;
                    }
                    for beta in 0..2 {
                        let full = self.w4[self.idx4(beta, a, b, l)].clone() / mass.clone();
                        let red = self
                            .second_reduced(
                                beta,
                                a,
                                b,
                                l,
                                bits.second_distant_setting,
                                bits.second_local_setting,
                            )
                            .expect("conditioning mass positive");
                        if !full.within(&red, tol) {
                            return false;
                        }
                    }
                }
            }
        }
        // first factor: P(alpha | beta a b lambda) must not depend on dropped vars
        for beta in 0..2 {
            for a in 0..self.na {
                for b in 0..self.nb {
                    for l in 0..self.nl {
                        let mass = &self.w4[self.idx4(beta, a, b, l)];
                        if mass.is_zero() {
                            continue;
                        }
                        for alpha in 0..2 {
                            let full =
                                self.w5[self.idx5(alpha, beta, a, b, l)].clone() / mass.clone();
                            let red = self
                                .first_reduced(
                                    alpha,
                                    beta,
                                    a,
                                    b,
                                    l,
                                    bits.first_distant_outcome,
                                    bits.first_distant_setting,
                                    bits.first_local_setting,
                                )
                                .expect("conditioning mass positive");
                            if !full.within(&red, tol) {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    }
}

fn alpha_led_view<N: Numeric>(
    dist: &JointDistribution<N>,
    partition: Partition,
) -> Result<AlphaLedTables<N>> {
    match partition {
        Partition::Alpha => Ok(AlphaLedTables::build(dist)),
        Partition::Beta => Ok(AlphaLedTables::build(&dist.swap_outcome_roles()?)),
    }
}

/// True when the distribution's hidden joint probability factorizes per the
/// given form, within an absolute per-cell tolerance on the reduced
/// conditionals. Conditioning events with zero mass impose no constraint.
pub fn form_valid_for<N: Numeric>(
    dist: &JointDistribution<N>,
    form: &ProductForm,
    tol: &N,
) -> Result<bool> {
    Ok(alpha_led_view(dist, form.partition)?.form_valid(&form.bits, tol))
}

/// Classifies a distribution into its simplest valid form for the given
/// partition. The full form is always valid, so classification always
/// succeeds; ties at the minimal conditioner count are resolved by the
/// documented order and flagged.
pub fn classify<N: Numeric>(
    dist: &JointDistribution<N>,
    partition: Partition,
    tol: &N,
) -> Result<Classification> {
    let tables = alpha_led_view(dist, partition)?;
    let mut best: Option<(u8, FormBits)> = None;
    let mut valid_at_min = 0usize;
    for (row, bits) in FORMS.iter().enumerate() {
        if !tables.form_valid(bits, tol) {
            continue;
        }
        match &best {
            None => {
                best = Some(((row + 1) as u8, *bits));
                valid_at_min = 1;
            }
            Some((_, cur)) => {
                let cur_count = cur.conditioner_count();
                let new_count = bits.conditioner_count();
                if new_count == cur_count {
                    valid_at_min += 1;
                } else if new_count < cur_count {
                    valid_at_min = 1;
                }
                if bits.simplicity_key() < cur.simplicity_key() {
                    best = Some(((row + 1) as u8, *bits));
                }
            }
        }
    }
    let (index, _) = best.expect("the full form is always valid");
    Ok(Classification { class: ClassId { index, partition }, tie: valid_at_min > 1 })
}

/// Probabilistic Bell contextuality: in both partitions the minimal form has
/// a factor retaining both settings.
pub fn pbc_holds<N: Numeric>(dist: &JointDistribution<N>, tol: &N) -> Result<bool> {
    let a = classify(dist, Partition::Alpha, tol)?;
    let b = classify(dist, Partition::Beta, tol)?;
    Ok(strength_of(a.class) == Strength::StronglyNonlocal
        && strength_of(b.class) == Strength::StronglyNonlocal)
}
