//! Numerical companion to the structural arguments: feasibility search and
//! margin maximization over the factor-table parameterization of a class.
//!
//! A class model consists of the hidden-state weights plus the two factor
//! tables the class's form allows, with uniform setting marginals. Autonomy
//! holds by construction. Searches run independent random restarts (each with
//! a deterministic sub-seed derived from the master seed), locally minimize a
//! residual with a damped Gauss-Newton step, and merge results with
//! order-independent reductions, so parallel and sequential runs agree.

use crate::error::{Error, Result};
use crate::inequalities::{generalized_wbi, usual_wbi, InequalityReport, WignerTriple};
use crate::probcore::{Angle, JointDistribution, VariableSpace};
use crate::taxonomy::{classify, form_of, ClassId, FormBits, Partition};
use crate::verifier::AssumptionRegime;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Classification tolerance for float-mode witnesses: far above the
/// feasibility noise floor, far below any genuine dependence a witness model
/// carries.
pub const WITNESS_CLASS_TOL: f64 = 1e-7;

/// Setting grid and hidden-state count the searches run on.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchSpace {
    pub a_settings: Vec<Angle>,
    pub b_settings: Vec<Angle>,
    pub lambda_count: usize,
}

impl SearchSpace {
    /// Default desk-scale space: three directions with parallel and
    /// perpendicular partners for each, two hidden states.
    pub fn desk_default() -> Self {
        let deg = Angle::from_degrees;
        SearchSpace {
            a_settings: vec![deg(0.0), deg(30.0), deg(60.0)],
            b_settings: vec![deg(0.0), deg(30.0), deg(60.0), deg(90.0), deg(120.0), deg(150.0)],
            lambda_count: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_count == 0 || self.lambda_count > 8 {
            return Err(Error::Configuration(format!(
                "lambda_count = {} outside 1..=8",
                self.lambda_count
            )));
        }
        let space = self.variable_space()?;
        for (idx, a) in space.a_settings().iter().enumerate() {
            let has_parallel = space.parallel_pairs().iter().any(|(i, _)| *i == idx);
            let has_perp = space.perpendicular_pairs().iter().any(|(i, _)| *i == idx);
            if !has_parallel || !has_perp {
                return Err(Error::Configuration(format!(
                    "direction {a} lacks a parallel or perpendicular partner"
                )));
            }
        }
        Ok(())
    }

    pub fn variable_space(&self) -> Result<VariableSpace> {
        VariableSpace::with_lambda_count(
            self.a_settings.clone(),
            self.b_settings.clone(),
            self.lambda_count,
        )
    }

    /// The symmetrized grid: both wings get the union of the setting lists.
    /// Forms keyed on the first wing's settings (the settings-swapped
    /// siblings) have their correlation constraints only on a grid where the
    /// swapped parallel and perpendicular pairs exist as well.
    pub fn symmetric(&self) -> SearchSpace {
        let mut union = self.a_settings.clone();
        for b in &self.b_settings {
            if !union.contains(b) {
                union.push(*b);
            }
        }
        SearchSpace {
            a_settings: union.clone(),
            b_settings: union,
            lambda_count: self.lambda_count,
        }
    }

    /// The canonical triple directions (d1, d2, d3) on this grid.
    pub fn triple_directions(&self) -> (Angle, Angle, Angle) {
        let d1 = self.a_settings[0];
        let d2 = self.a_settings[1 % self.a_settings.len()];
        let d3 = self
            .b_settings
            .iter()
            .copied()
            .find(|b| *b != d1 && *b != d2)
            .unwrap_or(self.b_settings[0]);
        (d1, d2, d3)
    }

    /// The Wigner triple angles `(a1, a2, b2, b3)` for an orientation: the
    /// forward instance reads `P(a- b+ | d1 d3) <= P(.. | d1 d2) + P(.. | d2 d3)`,
    /// the reversed instance interchanges the wings' roles of the directions,
    /// `P(a- b+ | d3 d1) <= P(.. | d2 d1) + P(.. | d3 d2)`.
    pub fn triple_angles(&self, orientation: Orientation) -> (Angle, Angle, Angle, Angle) {
        let (d1, d2, d3) = self.triple_directions();
        match orientation {
            Orientation::Forward => (d1, d2, d2, d3),
            Orientation::Reversed => (d3, d2, d2, d1),
        }
    }
}

/// A distribution constrained to a class's product form: hidden-state weights
/// plus Bernoulli rows of the two factor tables. Roles follow the partition;
/// the model always materializes as an alpha-led table and is transposed at
/// the end for beta-led classes.
#[derive(Clone, Debug)]
pub struct ClassModel {
    pub bits: FormBits,
    pub space: SearchSpace,
    /// hidden-state weights, kept positive and normalized
    pub p_lambda: Vec<f64>,
    /// first-factor rows: P(first outcome = + | ctx), indexed by
    /// (conditioning outcome, distant setting, local setting, lambda) with
    /// absent conditioners collapsed
    pub first: Vec<f64>,
    /// second-factor rows: P(second outcome = + | ctx), indexed by
    /// (distant setting, local setting, lambda)
    pub second: Vec<f64>,
}

impl ClassModel {
    fn first_dims(&self) -> (usize, usize, usize) {
        let nb = self.space.b_settings.len();
        let na = self.space.a_settings.len();
        (
            if self.bits.first_distant_outcome { 2 } else { 1 },
            if self.bits.first_distant_setting { nb } else { 1 },
            if self.bits.first_local_setting { na } else { 1 },
        )
    }

    fn second_dims(&self) -> (usize, usize) {
        let na = self.space.a_settings.len();
        let nb = self.space.b_settings.len();
        (
            if self.bits.second_distant_setting { na } else { 1 },
            if self.bits.second_local_setting { nb } else { 1 },
        )
    }

    pub fn new_random(bits: FormBits, space: SearchSpace, rng: &mut ChaCha8Rng) -> Self {
        let nl = space.lambda_count;
        let mut model = ClassModel { bits, space, p_lambda: vec![0.0; nl], first: vec![], second: vec![] };
        let (f0, f1, f2) = model.first_dims();
        let (s0, s1) = model.second_dims();
        model.first = (0..f0 * f1 * f2 * nl).map(|_| rng.random_range(0.0..1.0)).collect();
        model.second = (0..s0 * s1 * nl).map(|_| rng.random_range(0.0..1.0)).collect();
        // positive simplex draw for the hidden-state weights
        let mut total = 0.0;
        for w in &mut model.p_lambda {
            *w = -f64::ln(rng.random_range(f64::MIN_POSITIVE..1.0));
            total += *w;
        }
        for w in &mut model.p_lambda {
            *w /= total;
        }
        model
    }

    /// Structured draw: a deterministic correlated backbone (a random sign
    /// pattern per hidden state, anti-correlated at perpendicular partners)
    /// softened by noise. Close to the strict-regime feasible set, which
    /// speeds convergence without biasing which class member is found.
    pub fn new_structured(
        bits: FormBits,
        space: SearchSpace,
        rng: &mut ChaCha8Rng,
        noise: f64,
    ) -> Self {
        let mut model = ClassModel::new_random(bits, space.clone(), rng);
        let nl = space.lambda_count;
        for lambda in 0..nl {
            // sign pattern over the direction of each setting
            let mut sign_of = |angle: Angle| -> f64 {
                // derive the sign from a per-lambda random direction table;
                // perpendicular partners get the opposite sign
                let canonical = angle.min(angle.perpendicular());
                let flip = angle != canonical;
                let mut h = canonical.degrees().to_bits() ^ (lambda as u64).wrapping_mul(0x9e37);
                h ^= h >> 33;
                let base = if h.is_multiple_of(2) { 1.0 } else { -1.0 };
                let noise_draw: f64 = rng.random_range(0.0..noise);
                let p = if base > 0.0 { 1.0 - noise_draw } else { noise_draw };
                if flip {
                    1.0 - p
                } else {
                    p
                }
            };
            let (f0, f1, f2) = model.first_dims();
            for io in 0..f0 {
                for id in 0..f1 {
                    for il in 0..f2 {
                        let angle = if model.bits.first_local_setting {
                            model.space.a_settings[il]
                        } else if model.bits.first_distant_setting {
                            model.space.b_settings[id]
                        } else {
                            model.space.a_settings[0]
                        };
                        let idx = ((io * f1 + id) * f2 + il) * model.space.lambda_count + lambda;
                        model.first[idx] = sign_of(angle);
                    }
                }
            }
            let (s0, s1) = model.second_dims();
            for id in 0..s0 {
                for il in 0..s1 {
                    let angle = if model.bits.second_local_setting {
                        model.space.b_settings[il]
                    } else if model.bits.second_distant_setting {
                        model.space.a_settings[id]
                    } else {
                        model.space.b_settings[0]
                    };
                    let idx = (id * s1 + il) * model.space.lambda_count + lambda;
                    model.second[idx] = sign_of(angle);
                }
            }
        }
        let n = nl as f64;
        for w in &mut model.p_lambda {
            *w = 1.0 / n;
        }
        model
    }

    pub fn first_prob(&self, beta_idx: usize, a: usize, b: usize, lambda: usize) -> f64 {
        let (_, f1, f2) = self.first_dims();
        let io = if self.bits.first_distant_outcome { beta_idx } else { 0 };
        let id = if self.bits.first_distant_setting { b } else { 0 };
        let il = if self.bits.first_local_setting { a } else { 0 };
        self.first[((io * f1 + id) * f2 + il) * self.space.lambda_count + lambda]
    }

    pub fn second_prob(&self, a: usize, b: usize, lambda: usize) -> f64 {
        let (_, s1) = self.second_dims();
        let id = if self.bits.second_distant_setting { a } else { 0 };
        let il = if self.bits.second_local_setting { b } else { 0 };
        self.second[(id * s1 + il) * self.space.lambda_count + lambda]
    }

    /// Outcome cell `P(alpha beta | a b)` of the induced empirical
    /// distribution, cells indexed (alpha+, beta+) = (0, 0).
    pub fn joint_cell(&self, alpha: usize, beta: usize, a: usize, b: usize) -> f64 {
        let mut total = 0.0;
        for lambda in 0..self.space.lambda_count {
            let g_plus = self.second_prob(a, b, lambda);
            let g = if beta == 0 { g_plus } else { 1.0 - g_plus };
            let f_plus = self.first_prob(beta, a, b, lambda);
            let f = if alpha == 0 { f_plus } else { 1.0 - f_plus };
            total += self.p_lambda[lambda] * f * g;
        }
        total
    }

    /// Parameter vector view: hidden-state weights then the two tables.
    fn params(&self) -> Vec<f64> {
        let mut v = self.p_lambda.clone();
        v.extend_from_slice(&self.first);
        v.extend_from_slice(&self.second);
        v
    }

    fn set_params(&mut self, v: &[f64]) {
        let nl = self.p_lambda.len();
        self.p_lambda.copy_from_slice(&v[..nl]);
        let nf = self.first.len();
        self.first.copy_from_slice(&v[nl..nl + nf]);
        self.second.copy_from_slice(&v[nl + nf..]);
        self.project();
    }

    /// Clamps table rows into [0, 1] and renormalizes the hidden-state
    /// weights on the positive simplex.
    fn project(&mut self) {
        for w in self.first.iter_mut().chain(self.second.iter_mut()) {
            *w = w.clamp(0.0, 1.0);
        }
        let mut total = 0.0;
        for w in &mut self.p_lambda {
            *w = w.max(1e-9);
            total += *w;
        }
        for w in &mut self.p_lambda {
            *w /= total;
        }
    }

    /// Materializes the model as a joint distribution with uniform settings.
    /// Beta-led models are transposed so the class lands in the beta
    /// partition.
    pub fn to_distribution(&self, partition: Partition) -> Result<JointDistribution<f64>> {
        let space = self.space.variable_space()?;
        let na = space.a_settings().len();
        let nb = space.b_settings().len();
        let setting_weight = 1.0 / (na * nb) as f64;
        let mut weights = vec![0.0; space.cell_count()];
        for asg in space.assignments() {
            let g_plus = self.second_prob(asg.a, asg.b, asg.lambda);
            let g = if asg.beta.index() == 0 { g_plus } else { 1.0 - g_plus };
            let f_plus = self.first_prob(asg.beta.index(), asg.a, asg.b, asg.lambda);
            let f = if asg.alpha.index() == 0 { f_plus } else { 1.0 - f_plus };
            weights[space.flat_index(&asg)] = self.p_lambda[asg.lambda] * f * g * setting_weight;
        }
        let sum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= sum;
        }
        let dist = JointDistribution::new(space, weights)?;
        match partition {
            Partition::Alpha => Ok(dist),
            Partition::Beta => dist.swap_outcome_roles(),
        }
    }

    /// Per-pair deviations of the induced empirical distribution: mismatch
    /// sums at parallel pairs, match sums at perpendicular pairs.
    pub fn deviations(&self) -> (Vec<f64>, Vec<f64>) {
        let pairs = |list: Vec<(usize, usize)>, mismatch: bool| -> Vec<f64> {
            list.into_iter()
                .map(|(a, b)| {
                    if mismatch {
                        self.joint_cell(0, 1, a, b) + self.joint_cell(1, 0, a, b)
                    } else {
                        self.joint_cell(0, 0, a, b) + self.joint_cell(1, 1, a, b)
                    }
                })
                .collect()
        };
        let space = self.space.variable_space().expect("validated space");
        (
            pairs(space.parallel_pairs(), true),
            pairs(space.perpendicular_pairs(), false),
        )
    }

    /// Epsilon as read off the model's own deviation profile.
    pub fn epsilon(&self) -> f64 {
        let (par, perp) = self.deviations();
        par.into_iter()
            .chain(perp)
            .map(|d| d.cbrt())
            .fold(0.0, f64::max)
    }

    /// The model's Wigner triple on the grid's canonical directions.
    pub fn triple(&self, orientation: Orientation) -> WignerTriple<f64> {
        let (a1, a2, b2, b3) = self.space.triple_angles(orientation);
        let space = self.space.variable_space().expect("validated space");
        let read = |a: Angle, b: Angle| {
            let ai = space.a_index(a).expect("triple angle in grid");
            let bi = space.b_index(b).expect("triple angle in grid");
            self.joint_cell(1, 0, ai, bi)
        };
        WignerTriple { p13: read(a1, b3), p12: read(a1, b2), p23: read(a2, b3) }
    }

    /// Usual-inequality margin of the model's triple.
    pub fn usual_margin(&self, orientation: Orientation) -> f64 {
        let t = self.triple(orientation);
        t.p13 - t.p12 - t.p23
    }

    /// Largest variation of the first factor across the conditioning
    /// outcome; zero when the form omits it.
    pub fn first_outcome_variation(&self) -> f64 {
        if !self.bits.first_distant_outcome {
            return 0.0;
        }
        let (_, f1, f2) = self.first_dims();
        let nl = self.space.lambda_count;
        let mut worst = 0.0f64;
        for id in 0..f1 {
            for il in 0..f2 {
                for lambda in 0..nl {
                    let plus = self.first[((id) * f2 + il) * nl + lambda];
                    let minus = self.first[((f1 + id) * f2 + il) * nl + lambda];
                    worst = worst.max((plus - minus).abs());
                }
            }
        }
        worst
    }
}

/// Residual vector of the regime constraints: per constrained pair, the
/// clamped deviation excess and the two symmetry defects. A model satisfies
/// the regime exactly when every component vanishes.
fn residual_vector(model: &ClassModel, regime: AssumptionRegime, out: &mut Vec<f64>) {
    out.clear();
    let space = model.space.variable_space().expect("validated space");
    for (a, b) in space.parallel_pairs() {
        let mismatch = model.joint_cell(0, 1, a, b) + model.joint_cell(1, 0, a, b);
        out.push((mismatch - regime.delta_max).max(0.0));
        out.push(model.joint_cell(0, 0, a, b) - model.joint_cell(1, 1, a, b));
        out.push(model.joint_cell(0, 1, a, b) - model.joint_cell(1, 0, a, b));
    }
    for (a, b) in space.perpendicular_pairs() {
        let matched = model.joint_cell(0, 0, a, b) + model.joint_cell(1, 1, a, b);
        out.push((matched - regime.delta_max).max(0.0));
        out.push(model.joint_cell(0, 1, a, b) - model.joint_cell(1, 0, a, b));
        out.push(model.joint_cell(0, 0, a, b) - model.joint_cell(1, 1, a, b));
    }
}

pub fn residual(model: &ClassModel, regime: AssumptionRegime) -> f64 {
    let mut r = Vec::new();
    residual_vector(model, regime, &mut r);
    r.iter().map(|x| x * x).sum()
}

/// Solves `(J^T J + mu I) d = -J^T r` in place; returns the step.
fn damped_normal_step(jt_j: &mut [f64], jt_r: &[f64], n: usize, mu: f64) -> Option<Vec<f64>> {
    for i in 0..n {
        jt_j[i * n + i] += mu;
    }
    // Gaussian elimination with partial pivoting
    let mut rhs: Vec<f64> = jt_r.iter().map(|x| -x).collect();
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if jt_j[row * n + col].abs() > jt_j[pivot * n + col].abs() {
                pivot = row;
            }
        }
        if jt_j[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                jt_j.swap(col * n + k, pivot * n + k);
            }
            rhs.swap(col, pivot);
        }
        let diag = jt_j[col * n + col];
        for row in col + 1..n {
            let factor = jt_j[row * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                jt_j[row * n + k] -= factor * jt_j[col * n + k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = rhs[col];
        for k in col + 1..n {
            acc -= jt_j[col * n + k] * rhs[k];
        }
        rhs[col] = acc / jt_j[col * n + col];
    }
    Some(rhs)
}

/// Damped Gauss-Newton descent on the residual vector with a numeric
/// Jacobian. Accurate feasible points need the full quadratic convergence;
/// plain gradient steps stall far above the 1e-10 target.
fn minimize_residual(model: &mut ClassModel, regime: AssumptionRegime, max_iters: usize) -> f64 {
    let mut r = Vec::new();
    residual_vector(model, regime, &mut r);
    let mut best = r.iter().map(|x| x * x).sum::<f64>();
    let mut mu = 1e-3;
    let h = 1e-7;
    for _ in 0..max_iters {
        if best <= 1e-26 {
            break;
        }
        let params = model.params();
        let n = params.len();
        residual_vector(model, regime, &mut r);
        let m = r.len();
        // numeric Jacobian, forward differences
        let mut jac = vec![0.0f64; m * n];
        let mut probe = model.clone();
        let mut r2 = Vec::new();
        for j in 0..n {
            let mut p = params.clone();
            p[j] += h;
            probe.set_params(&p);
            residual_vector(&probe, regime, &mut r2);
            for i in 0..m {
                jac[i * n + j] = (r2[i] - r[i]) / h;
            }
        }
        let mut jt_j = vec![0.0f64; n * n];
        for i in 0..n {
            for k in i..n {
                let mut acc = 0.0;
                for row in 0..m {
                    acc += jac[row * n + i] * jac[row * n + k];
                }
                jt_j[i * n + k] = acc;
                jt_j[k * n + i] = acc;
            }
        }
        let mut jt_r = vec![0.0f64; n];
        for i in 0..n {
            let mut acc = 0.0;
            for row in 0..m {
                acc += jac[row * n + i] * r[row];
            }
            jt_r[i] = acc;
        }
        let mut improved = false;
        for _ in 0..8 {
            let mut lhs = jt_j.clone();
            let Some(step) = damped_normal_step(&mut lhs, &jt_r, n, mu) else {
                mu *= 10.0;
                continue;
            };
            let mut candidate = model.clone();
            let mut p = params.clone();
            for (pi, si) in p.iter_mut().zip(&step) {
                *pi += si;
            }
            candidate.set_params(&p);
            let value = residual(&candidate, regime);
            if value < best {
                *model = candidate;
                best = value;
                mu = (mu * 0.3).max(1e-12);
                improved = true;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    best
}

/// Ascends the chosen margin objective under an exact-penalty on the regime
/// residual, then polishes feasibility. Returns the achieved residual.
fn maximize_margin(
    model: &mut ClassModel,
    regime: AssumptionRegime,
    objective: SearchObjective,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let value = |m: &ClassModel, weight: f64| -> f64 {
        objective_margin(m, objective).unwrap_or(f64::NEG_INFINITY)
            - weight * residual(m, regime)
    };
    let h = 1e-6;
    for weight in [1e2, 1e4, 1e6] {
        let mut step = 0.05;
        for _ in 0..120 {
            let params = model.params();
            let base = value(model, weight);
            let n = params.len();
            let mut grad = vec![0.0f64; n];
            let mut probe = model.clone();
            for j in 0..n {
                let mut p = params.clone();
                p[j] += h;
                probe.set_params(&p);
                grad[j] = (value(&probe, weight) - base) / h;
            }
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm < 1e-12 {
                break;
            }
            let mut advanced = false;
            while step > 1e-9 {
                let mut p = params.clone();
                for (pi, gi) in p.iter_mut().zip(&grad) {
                    *pi += step * gi / norm;
                }
                let mut candidate = model.clone();
                candidate.set_params(&p);
                if value(&candidate, weight) > base {
                    *model = candidate;
                    step *= 1.5;
                    advanced = true;
                    break;
                }
                step *= 0.5;
            }
            if !advanced {
                // small random kick to escape a kink of the clamp
                let mut p = params;
                for pi in p.iter_mut() {
                    *pi += rng.random_range(-1e-6..1e-6);
                }
                model.set_params(&p);
                break;
            }
        }
    }
    minimize_residual(model, regime, 60)
}

/// Margin-preserving backbone initialization. Every strongly non-local class
/// admits an exactly regime-feasible member built from a balanced family of
/// sign functions: the factor carrying both settings either follows the
/// entangled cos^2 profile (when it also retains the distant outcome) or a
/// deterministic response pinned to its partner's signs at parallel and
/// perpendicular pairs and chosen greedily at the free pairs. Small tilts on
/// unconstrained cells keep every conditioner of the form genuinely active.
/// Returns `None` for forms without a both-settings factor.
fn backbone_init(
    bits: FormBits,
    space: &SearchSpace,
    regime: AssumptionRegime,
    rng: &mut ChaCha8Rng,
) -> Option<ClassModel> {
    let first_both = bits.first_distant_setting && bits.first_local_setting;
    let second_both = bits.second_distant_setting && bits.second_local_setting;
    if !first_both && !second_both {
        return None;
    }
    let nl = space.lambda_count;
    let mut model = ClassModel {
        bits,
        space: space.clone(),
        p_lambda: vec![1.0 / nl as f64; nl],
        first: vec![],
        second: vec![],
    };
    let (f0, f1, f2) = model.first_dims();
    let (s0, s1) = model.second_dims();
    model.first = vec![0.5; f0 * f1 * f2 * nl];
    model.second = vec![0.5; s0 * s1 * nl];

    // balanced sign family: lambda 2k+1 mirrors lambda 2k; a state's sign at
    // an angle is a random function of the angle
    let mut base_signs: Vec<Vec<bool>> = Vec::new();
    let mut all_angles: Vec<Angle> = space.a_settings.clone();
    for b in &space.b_settings {
        if !all_angles.contains(b) {
            all_angles.push(*b);
        }
    }
    for lambda in 0..nl {
        if lambda % 2 == 0 {
            base_signs.push(all_angles.iter().map(|_| rng.random::<bool>()).collect());
        } else {
            let mirror = base_signs[lambda - 1].iter().map(|s| !s).collect();
            base_signs.push(mirror);
        }
    }
    let sign_at = |lambda: usize, angle: Angle| -> bool {
        let pos = all_angles.iter().position(|x| *x == angle).expect("angle catalogued");
        base_signs[lambda][pos]
    };
    let pair_kind = |a: Angle, b: Angle| -> i8 {
        if a.is_parallel_to(b) {
            1
        } else if a.is_perpendicular_to(b) {
            -1
        } else {
            0
        }
    };
    let (t1, t2, tb2, tb3) = space.triple_angles(Orientation::Forward);
    let is_triple_pair =
        |a: Angle, b: Angle| (a == t1 && b == tb3) || (a == t1 && b == tb2) || (a == t2 && b == tb3);
    // beta-side asymmetry budget for forms retaining the distant outcome in a
    // deterministic first factor: only a nearly-perfect regime can afford one
    let asym = (regime.delta_max * 0.5).min(0.01);

    if second_both {
        // first factor: deterministic response over its available setting;
        // second factor: entangled profile keyed on the first factor's sign
        let f_key = |a: Angle, b: Angle| -> Angle {
            if bits.first_distant_setting {
                b
            } else if bits.first_local_setting {
                a
            } else {
                all_angles[0]
            }
        };
        for io in 0..f0 {
            for id in 0..f1 {
                for il in 0..f2 {
                    for lambda in 0..nl {
                        let key = if bits.first_distant_setting {
                            space.b_settings[id]
                        } else if bits.first_local_setting {
                            space.a_settings[il]
                        } else {
                            all_angles[0]
                        };
                        let aligned = sign_at(lambda, key);
                        let mut p = if aligned { 1.0 } else { 0.0 };
                        // io = 1 is the beta = minus context
                        if bits.first_distant_outcome && io == 1 {
                            p = if aligned { 1.0 - asym } else { asym };
                        }
                        let idx = ((io * f1 + id) * f2 + il) * nl + lambda;
                        model.first[idx] = p;
                    }
                }
            }
        }
        for (ai, a) in space.a_settings.iter().enumerate() {
            for (bi, b) in space.b_settings.iter().enumerate() {
                for lambda in 0..nl {
                    let cos2 = a.cos2_diff(*b);
                    let p = if sign_at(lambda, f_key(*a, *b)) { cos2 } else { 1.0 - cos2 };
                    let idx = (ai * s1 + bi) * nl + lambda;
                    model.second[idx] = p;
                }
            }
        }
        return Some(model);
    }

    // first factor carries both settings
    if bits.first_distant_outcome {
        // entangled profile: P(alpha+ | beta, a, b) is cos^2 of the setting
        // difference when beta = +, sin^2 when beta = -
        for (ai, a) in space.a_settings.iter().enumerate() {
            for (bi, b) in space.b_settings.iter().enumerate() {
                let cos2 = a.cos2_diff(*b);
                for io in 0..f0 {
                    let p = if io == 0 { cos2 } else { 1.0 - cos2 };
                    for lambda in 0..nl {
                        model.first[((io * f1 + bi) * f2 + ai) * nl + lambda] = p;
                    }
                }
            }
        }
        // second factor: one half plus balanced tilts over its context,
        // keeping the lambda-weighted mean at one half everywhere
        for id in 0..s0 {
            for il in 0..s1 {
                let tilt: f64 = rng.random_range(-0.2..0.2);
                for lambda in 0..nl {
                    let signed = if lambda % 2 == 0 { tilt } else { -tilt };
                    model.second[(id * s1 + il) * nl + lambda] = 0.5 + signed;
                }
            }
        }
        return Some(model);
    }

    // deterministic first factor without the distant outcome: the second
    // factor is a deterministic sign response on its own context, the first
    // factor copies it at parallel pairs, negates it at perpendicular pairs
    // and exploits the free pairs for violation
    let g_key = |a: Angle, b: Angle| -> Angle {
        if bits.second_local_setting {
            b
        } else if bits.second_distant_setting {
            a
        } else {
            all_angles[0]
        }
    };
    for id in 0..s0 {
        for il in 0..s1 {
            for lambda in 0..nl {
                let a = if bits.second_distant_setting { space.a_settings[id] } else { space.a_settings[0] };
                let b = if bits.second_local_setting { space.b_settings[il] } else { space.b_settings[0] };
                let p = if sign_at(lambda, g_key(a, b)) { 1.0 } else { 0.0 };
                model.second[(id * s1 + il) * nl + lambda] = p;
            }
        }
    }
    for (ai, a) in space.a_settings.iter().enumerate() {
        for (bi, b) in space.b_settings.iter().enumerate() {
            for lambda in 0..nl {
                let beta_plus = sign_at(lambda, g_key(*a, *b));
                let alpha_plus = match pair_kind(*a, *b) {
                    1 => beta_plus,
                    -1 => !beta_plus,
                    _ => {
                        if *a == t1 && *b == tb3 {
                            // all mass onto alpha = minus: the (alpha-, beta+)
                            // cell then carries the full beta+ weight
                            false
                        } else if is_triple_pair(*a, *b) {
                            // keep the remaining triple cells empty of
                            // (alpha-, beta+) mass
                            true
                        } else {
                            // unconstrained: free signs keep the first
                            // factor's setting dependences alive
                            rng.random::<bool>()
                        }
                    }
                };
                let p = if alpha_plus { 1.0 } else { 0.0 };
                model.first[(bi * f2 + ai) * nl + lambda] = p;
            }
        }
    }
    // a both-settings second factor additionally needs its other setting
    // genuinely active: soften unconstrained non-triple cells by an
    // interior tilt
    if bits.second_distant_setting && bits.second_local_setting {
        for (ai, a) in space.a_settings.iter().enumerate() {
            for (bi, b) in space.b_settings.iter().enumerate() {
                if pair_kind(*a, *b) != 0 || is_triple_pair(*a, *b) {
                    continue;
                }
                for lambda in 0..nl {
                    let idx = (ai * s1 + bi) * nl + lambda;
                    let tilt: f64 = rng.random_range(0.02..0.1);
                    model.second[idx] = (model.second[idx] - tilt).abs();
                }
            }
        }
    }
    Some(model)
}

/// Which way round the three directions enter the triple. A form whose
/// first factor retains the local setting implies the forward instance; a
/// form retaining the distant setting implies the reversed one (the
/// derivation with the settings interchanged). Local-style forms imply both.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Orientation {
    Forward,
    Reversed,
}

/// What the margin search optimizes: the plain inequality margin (witness
/// hunting) or the generalized margin at the candidate's own epsilon
/// (falsification of implied inequalities), each over a triple orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SearchObjective {
    pub metric: MarginMetric,
    pub orientation: Orientation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MarginMetric {
    Usual,
    GeneralizedAtOwnEpsilon,
}

impl SearchObjective {
    pub const USUAL: SearchObjective =
        SearchObjective { metric: MarginMetric::Usual, orientation: Orientation::Forward };

    pub fn usual(orientation: Orientation) -> Self {
        SearchObjective { metric: MarginMetric::Usual, orientation }
    }

    pub fn generalized(orientation: Orientation) -> Self {
        SearchObjective { metric: MarginMetric::GeneralizedAtOwnEpsilon, orientation }
    }
}

/// The objective's margin at a model; `None` when the generalized inequality
/// is undefined at the model's epsilon.
fn objective_margin(model: &ClassModel, objective: SearchObjective) -> Option<f64> {
    let triple = model.triple(objective.orientation);
    match objective.metric {
        MarginMetric::Usual => Some(triple.p13 - triple.p12 - triple.p23),
        MarginMetric::GeneralizedAtOwnEpsilon => {
            let eps = model.epsilon().min(0.999_999);
            generalized_wbi(&triple, eps).ok().map(|r| r.margin)
        }
    }
}

/// A concrete distribution certifying that its class can realize the regime
/// (and, for violation witnesses, break the inequality).
#[derive(Clone, Debug, Serialize)]
pub struct WitnessEvidence {
    #[serde(skip)]
    pub distribution: JointDistribution<f64>,
    pub classified: ClassId,
    pub residual: f64,
    pub epsilon: f64,
    pub usual: InequalityReport<f64>,
    pub generalized: InequalityReport<f64>,
    pub orientation: Orientation,
    pub restart: u32,
}

#[derive(Clone, Debug, Serialize)]
pub enum FeasibilityOutcome {
    /// A regime-feasible point that classifies to the target class.
    Witness(WitnessEvidence),
    /// Feasible points exist but every one of them classifies to a smaller
    /// class (the collapse predicted under strict perfectness).
    Reduces {
        to: ClassId,
        best_residual: f64,
        max_first_outcome_variation: f64,
        feasible_points: u32,
        restarts: u32,
    },
    /// No feasible point found; best squared residual over all restarts.
    Infeasible { best_residual: f64, restarts: u32 },
}

#[derive(Clone, Debug, Serialize)]
pub struct MaxViolationOutcome {
    /// Best feasible witness classifying to the target class, by objective.
    pub best: Option<WitnessEvidence>,
    /// Best objective margin over every feasible point (regardless of
    /// classification); the falsification statistic.
    pub best_feasible_margin: f64,
    pub best_residual: f64,
    pub restarts: u32,
    pub objective: SearchObjective,
}

pub const FEASIBLE_RESIDUAL: f64 = 1e-10;

fn restart_rng(seed: u64, class: ClassId, restart: u32, salt: u64) -> ChaCha8Rng {
    let tag = (class.index as u64) << 1 | matches!(class.partition, Partition::Beta) as u64;
    ChaCha8Rng::seed_from_u64(
        seed ^ tag.wrapping_mul(0x9e3779b97f4a7c15) ^ (restart as u64).wrapping_mul(0xd1342543de82ef95) ^ salt,
    )
}

/// Restart initialization rotates through three flavors: the feasible
/// backbone (when the class admits one), the softened deterministic draw and
/// the fully random draw. Returns the model and whether it is a backbone
/// start (which margin searches keep as-is apart from feasibility polish).
fn init_model(
    bits: FormBits,
    space: &SearchSpace,
    regime: AssumptionRegime,
    rng: &mut ChaCha8Rng,
    restart: u32,
) -> (ClassModel, bool) {
    match restart % 3 {
        0 => {
            if let Some(model) = backbone_init(bits, space, regime, rng) {
                return (model, true);
            }
            let noise = rng.random_range(0.02..0.2);
            (ClassModel::new_structured(bits, space.clone(), rng, noise), false)
        }
        1 => {
            let noise = rng.random_range(0.02..0.2);
            (ClassModel::new_structured(bits, space.clone(), rng, noise), false)
        }
        _ => (ClassModel::new_random(bits, space.clone(), rng), false),
    }
}

fn evidence_for(
    model: &ClassModel,
    class: ClassId,
    orientation: Orientation,
    res: f64,
    restart: u32,
) -> Result<(ClassId, Option<WitnessEvidence>)> {
    let dist = model.to_distribution(class.partition)?;
    let classified = classify(&dist, class.partition, &WITNESS_CLASS_TOL)?;
    let eps = model.epsilon();
    let triple = model.triple(orientation);
    let usual = usual_wbi(&triple);
    let generalized = generalized_wbi(&triple, eps.min(0.999_999))?;
    let witness = (classified.class == class).then_some(WitnessEvidence {
        distribution: dist,
        classified: classified.class,
        residual: res,
        epsilon: eps,
        usual,
        generalized,
        orientation,
        restart,
    });
    Ok((classified.class, witness))
}

/// Runs restarts in parallel over the available cores. The per-restart
/// closure is deterministic in the restart index and results are re-ordered
/// by index, so thread scheduling cannot change the outcome.
fn run_restarts<T: Send>(restarts: u32, work: impl Fn(u32) -> T + Sync) -> Vec<T> {
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let threads = threads.min(restarts.max(1) as usize).max(1);
    let next = std::sync::atomic::AtomicU32::new(0);
    let collected = std::sync::Mutex::new(Vec::with_capacity(restarts as usize));
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= restarts {
                    break;
                }
                let value = work(i);
                collected.lock().expect("result sink").push((i, value));
            });
        }
    });
    let mut v = collected.into_inner().expect("result sink");
    v.sort_by_key(|(i, _)| *i);
    v.into_iter().map(|(_, x)| x).collect()
}

/// Searches for a regime-feasible member of the class by randomly restarted
/// local least squares on the factor tables. Feasibility means squared
/// residual below 1e-10; a witness must additionally classify to the class
/// itself rather than to a reduction of it.
pub fn feasibility_search(
    class: ClassId,
    regime: AssumptionRegime,
    space: &SearchSpace,
    seed: u64,
    restarts: u32,
) -> Result<FeasibilityOutcome> {
    space.validate()?;
    let bits = form_of(class).bits;
    let runs = run_restarts(restarts, |i| {
        let mut rng = restart_rng(seed, class, i, 0x66ea);
        let (mut model, _) = init_model(bits, space, regime, &mut rng, i);
        let res = minimize_residual(&mut model, regime, 60);
        (model, res)
    });
    let mut best_residual = f64::INFINITY;
    let mut reduction: Option<(ClassId, f64)> = None;
    let mut feasible_points = 0u32;
    let mut witness: Option<WitnessEvidence> = None;
    for (i, (model, res)) in runs.into_iter().enumerate() {
        best_residual = best_residual.min(res);
        if res > FEASIBLE_RESIDUAL {
            continue;
        }
        feasible_points += 1;
        let (classified, maybe_witness) =
            evidence_for(&model, class, Orientation::Forward, res, i as u32)?;
        match maybe_witness {
            Some(w) => {
                if witness.is_none() {
                    witness = Some(w);
                }
            }
            None => {
                let variation = model.first_outcome_variation();
                let entry = reduction.get_or_insert((classified, variation));
                entry.1 = entry.1.max(variation);
            }
        }
    }
    if let Some(w) = witness {
        return Ok(FeasibilityOutcome::Witness(w));
    }
    if let Some((to, variation)) = reduction {
        return Ok(FeasibilityOutcome::Reduces {
            to,
            best_residual,
            max_first_outcome_variation: variation,
            feasible_points,
            restarts,
        });
    }
    Ok(FeasibilityOutcome::Infeasible { best_residual, restarts })
}

/// Maximizes an inequality margin over regime-feasible members of the class.
/// Returns the best feasible witness that classifies to the class, plus the
/// best objective margin over all feasible points as falsification evidence.
pub fn max_violation_search(
    class: ClassId,
    regime: AssumptionRegime,
    space: &SearchSpace,
    seed: u64,
    restarts: u32,
    objective: SearchObjective,
) -> Result<MaxViolationOutcome> {
    space.validate()?;
    let bits = form_of(class).bits;
    let runs = run_restarts(restarts, |i| {
        let mut rng = restart_rng(seed, class, i, xv_salt(objective));
        let (mut model, backbone) = init_model(bits, space, regime, &mut rng, i);
        let res = if backbone {
            // a backbone start is feasible with its margin built in; polish
            // only, so the class's dependences survive
            minimize_residual(&mut model, regime, 60)
        } else {
            maximize_margin(&mut model, regime, objective, &mut rng)
        };
        (model, res)
    });
    let mut best: Option<WitnessEvidence> = None;
    let mut best_feasible_margin = f64::NEG_INFINITY;
    let mut best_residual = f64::INFINITY;
    for (i, (model, res)) in runs.into_iter().enumerate() {
        best_residual = best_residual.min(res);
        if res > FEASIBLE_RESIDUAL {
            continue;
        }
        if let Some(margin) = objective_margin(&model, objective) {
            best_feasible_margin = best_feasible_margin.max(margin);
        }
        let (_, maybe_witness) =
            evidence_for(&model, class, objective.orientation, res, i as u32)?;
        if let Some(w) = maybe_witness {
            let better = match &best {
                None => true,
                Some(cur) => match objective.metric {
                    MarginMetric::Usual => w.usual.margin > cur.usual.margin,
                    MarginMetric::GeneralizedAtOwnEpsilon => {
                        w.generalized.margin > cur.generalized.margin
                    }
                },
            };
            if better {
                best = Some(w);
            }
        }
    }
    Ok(MaxViolationOutcome { best, best_feasible_margin, best_residual, restarts, objective })
}

fn xv_salt(objective: SearchObjective) -> u64 {
    let metric = match objective.metric {
        MarginMetric::Usual => 0x7a11,
        MarginMetric::GeneralizedAtOwnEpsilon => 0x9c55,
    };
    let orientation = match objective.orientation {
        Orientation::Forward => 0,
        Orientation::Reversed => 0x4000_0000,
    };
    metric | orientation
}

/// Random purely outcome-dependent model with autonomy: Dirichlet-like
/// hidden-state weights and uniformly drawn factor rows. Used by the
/// inequality property suites; every sample is a test case because the
/// generalized inequality is evaluated at the sample's own epsilon.
pub fn sample_h16_model(space: &SearchSpace, rng: &mut ChaCha8Rng) -> ClassModel {
    ClassModel::new_random(crate::taxonomy::FORMS[15], space.clone(), rng)
}
