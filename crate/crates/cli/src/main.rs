//! Command-line surface: load and save distributions, classify them, run
//! inequality checks and thresholds, build the named witness distributions,
//! and reproduce the class table.
//!
//! Exit codes: 0 on success, 1 when a `--assert` expectation fails, 2 on
//! usage or input errors.

use belltax::constructors::{
    h10_nearly_perfect_example, h10_violating_example, h14_violating_example,
    h14_violating_extended, h29_perfect_example, perfect_local_example, quantum_distribution,
    quantum_distribution_exact, QuantumConfig,
};
use belltax::inequalities::{
    epsilon_max_with, usual_wbi, CorrectionVariant,
    WignerTriple,
};
use belltax::jsonio::{load_distribution, save_exact, save_float, AnyDistribution};
use belltax::probcore::{parse_exact, Angle, Numeric};
use belltax::taxonomy::{classify, pbc_holds, strength_of, ClassId, Partition};
use belltax::verifier::{
    render_table1, reproduce_table1, verify_class, AssumptionRegime, Evidence, SearchSpace,
    VerdictStatus,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "belltax", version, about = "EPR/B distribution taxonomy and Wigner-Bell inequality toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PartitionArg {
    Alpha,
    Beta,
}

impl From<PartitionArg> for Partition {
    fn from(p: PartitionArg) -> Partition {
        match p {
            PartitionArg::Alpha => Partition::Alpha,
            PartitionArg::Beta => Partition::Beta,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Strict,
    Nearly,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Tight,
    Loose,
}

#[derive(Args)]
struct RegimeOpts {
    /// Background-assumption regime for the correlations
    #[arg(long, value_enum, default_value = "strict")]
    regime: RegimeArg,
    /// Deviation bound for the nearly-perfect regime
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
}

impl RegimeOpts {
    fn regime(&self) -> AssumptionRegime {
        match self.regime {
            RegimeArg::Strict => AssumptionRegime::STRICT,
            RegimeArg::Nearly => AssumptionRegime::nearly(self.delta),
        }
    }
}

#[derive(Args)]
struct SearchOpts {
    /// Master seed; defaults to the BELLTAX_SEED environment variable
    #[arg(long, env = "BELLTAX_SEED", default_value_t = 2017)]
    seed: u64,
    /// Independent random restarts per search
    #[arg(long, default_value_t = 100)]
    restarts: u32,
    /// Hidden-state count of the search grid (1..=8)
    #[arg(long, default_value_t = 2)]
    lambda: usize,
}

impl SearchOpts {
    fn space(&self) -> SearchSpace {
        let mut space = SearchSpace::desk_default();
        space.lambda_count = self.lambda;
        space
    }
}

#[derive(Subcommand)]
enum Command {
    /// Classify a distribution into its minimal product-form class
    Classify {
        /// Distribution file (JSON)
        #[arg(long = "in")]
        input: String,
        #[arg(long, value_enum, default_value = "alpha")]
        partition: PartitionArg,
        /// Absolute per-cell tolerance for float-mode inputs
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Expectation: class id (H14a) or strength (local/weak/strong)
        #[arg(long)]
        assert: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Normalization, autonomy, both classifications, contextuality and the
    /// deviation profile of a distribution
    Check {
        #[arg(long = "in")]
        input: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Expectation: any fact the check prints (autonomy, pbc, H14a, ...)
        #[arg(long)]
        assert: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Build one of the named distributions and write it to a file
    Construct {
        /// h29-perfect | h14-violating | h14-violating-extended |
        /// h10-nearly-perfect | h10-violating | quantum | perfect-local
        #[arg(long)]
        name: String,
        /// Deviation parameter for the nearly perfect families (exact, e.g. 0.001)
        #[arg(long)]
        delta: Option<String>,
        /// Entanglement weight for the quantum statistics
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        /// Comma-separated degree lists
        #[arg(long, value_delimiter = ',')]
        a_settings: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        b_settings: Option<Vec<f64>>,
        /// Directions for the perfect local model
        #[arg(long, value_delimiter = ',')]
        directions: Option<Vec<f64>>,
        /// Emit float weights instead of exact rationals
        #[arg(long)]
        float: bool,
        #[arg(long = "out")]
        output: String,
    },
    /// Evaluate the usual inequality and the violation thresholds of a triple
    Threshold {
        /// p13,p12,p23
        #[arg(long, value_delimiter = ',')]
        triple: Vec<f64>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Correction denominator of the generalized inequality: tight is
        /// (1-e)^2, loose is (1-e^2)
        #[arg(long, value_enum, default_value = "tight")]
        variant: VariantArg,
        /// Expectation: violated or not-violated
        #[arg(long)]
        assert: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Verdict for a single class under a regime
    Verify {
        /// Class id such as H16a
        #[arg(long)]
        class: String,
        #[command(flatten)]
        regime: RegimeOpts,
        #[command(flatten)]
        search: SearchOpts,
        /// Expectation: inconsistent, implies-bi or can-violate
        #[arg(long)]
        assert: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Reproduce the 32-class table for both regimes
    Report {
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
        #[command(flatten)]
        search: SearchOpts,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(assert_ok) => {
            if assert_ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn read_input(path: &str) -> Result<AnyDistribution, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    load_distribution(&text).map_err(|e| format!("{path}: {e}"))
}

fn check_assert(assert: &Option<String>, facts: &[String]) -> bool {
    match assert {
        None => true,
        Some(token) => {
            let ok = facts.iter().any(|f| f.eq_ignore_ascii_case(token));
            if !ok {
                eprintln!("assertion failed: {token:?} not among {facts:?}");
            }
            ok
        }
    }
}

fn run(command: Command) -> Result<bool, String> {
    match command {
        Command::Classify { input, partition, tol, assert, json } => {
            let dist = read_input(&input)?;
            let partition: Partition = partition.into();
            let (classification, tie) = match &dist {
                AnyDistribution::Exact(d) => {
                    let c = classify(d, partition, &belltax::probcore::Exact::from_ratio(0, 1))
                        .map_err(|e| e.to_string())?;
                    (c.class, c.tie)
                }
                AnyDistribution::Float(d) => {
                    let c = classify(d, partition, &tol).map_err(|e| e.to_string())?;
                    (c.class, c.tie)
                }
            };
            let strength = strength_of(classification);
            if json {
                println!(
                    "{}",
                    json!({
                        "class": classification.to_string(),
                        "strength": strength.to_string(),
                        "tie": tie,
                        "exact": dist.is_exact(),
                    })
                );
            } else {
                let tie_note = if tie { " (tie resolved by the documented order)" } else { "" };
                println!("{classification} {strength}{tie_note}");
            }
            Ok(check_assert(&assert, &[classification.to_string(), strength.to_string()]))
        }
        Command::Check { input, tol, assert, json } => {
            let dist = read_input(&input)?;
            let mut facts: Vec<String> = Vec::new();
            let (autonomy, alpha, beta, pbc, profile) = match &dist {
                AnyDistribution::Exact(d) => {
                    let zero = belltax::probcore::Exact::from_ratio(0, 1);
                    let alpha =
                        classify(d, Partition::Alpha, &zero).map_err(|e| e.to_string())?;
                    let beta = classify(d, Partition::Beta, &zero).map_err(|e| e.to_string())?;
                    (
                        d.check_autonomy(&zero),
                        alpha,
                        beta,
                        pbc_holds(d, &zero).map_err(|e| e.to_string())?,
                        d.deviation_profile().ok().map(|p| {
                            (p.pairs.iter().map(|x| x.delta.to_f64()).collect::<Vec<_>>(), p.epsilon)
                        }),
                    )
                }
                AnyDistribution::Float(d) => {
                    let alpha = classify(d, Partition::Alpha, &tol).map_err(|e| e.to_string())?;
                    let beta = classify(d, Partition::Beta, &tol).map_err(|e| e.to_string())?;
                    (
                        d.check_autonomy(&tol),
                        alpha,
                        beta,
                        pbc_holds(d, &tol).map_err(|e| e.to_string())?,
                        d.deviation_profile().ok().map(|p| {
                            (p.pairs.iter().map(|x| x.delta).collect::<Vec<_>>(), p.epsilon)
                        }),
                    )
                }
            };
            facts.push(if autonomy { "autonomy".into() } else { "no-autonomy".into() });
            facts.push(alpha.class.to_string());
            facts.push(beta.class.to_string());
            facts.push(if pbc { "pbc".into() } else { "no-pbc".into() });
            if json {
                println!(
                    "{}",
                    json!({
                        "exact": dist.is_exact(),
                        "autonomy": autonomy,
                        "class_alpha": alpha.class.to_string(),
                        "class_beta": beta.class.to_string(),
                        "strength_alpha": strength_of(alpha.class).to_string(),
                        "strength_beta": strength_of(beta.class).to_string(),
                        "pbc": pbc,
                        "deviations": profile.as_ref().map(|(d, _)| d.clone()),
                        "epsilon": profile.as_ref().map(|(_, e)| *e),
                    })
                );
            } else {
                println!("mode: {}", if dist.is_exact() { "exact" } else { "float" });
                println!("autonomy: {}", if autonomy { "yes" } else { "no" });
                println!("class: {} {} / {} {}", alpha.class, strength_of(alpha.class), beta.class, strength_of(beta.class));
                println!("probabilistic contextuality: {}", if pbc { "yes" } else { "no" });
                match profile {
                    Some((deltas, eps)) => {
                        println!("deviation profile: {deltas:?}, epsilon {eps:.6}")
                    }
                    None => println!("deviation profile: n/a (missing partner settings)"),
                }
            }
            Ok(check_assert(&assert, &facts))
        }
        Command::Construct {
            name,
            delta,
            p,
            a_settings,
            b_settings,
            directions,
            float,
            output,
        } => {
            let angles = |v: &Option<Vec<f64>>, fallback: &[f64]| -> Vec<Angle> {
                v.clone()
                    .unwrap_or_else(|| fallback.to_vec())
                    .into_iter()
                    .map(Angle::from_degrees)
                    .collect()
            };
            let parse_delta = || -> Result<belltax::probcore::Exact, String> {
                let text = delta.clone().ok_or("--delta is required for this family")?;
                parse_exact(&text).ok_or(format!("bad --delta value {text:?}"))
            };
            let exact = match name.as_str() {
                "h29-perfect" => Some(h29_perfect_example()),
                "h14-violating" => Some(h14_violating_example()),
                "h14-violating-extended" => Some(h14_violating_extended()),
                "h10-nearly-perfect" => {
                    Some(h10_nearly_perfect_example(&parse_delta()?).map_err(|e| e.to_string())?)
                }
                "h10-violating" => {
                    Some(h10_violating_example(&parse_delta()?).map_err(|e| e.to_string())?)
                }
                "perfect-local" => Some(
                    perfect_local_example(&angles(&directions, &[0.0, 30.0, 60.0]))
                        .map_err(|e| e.to_string())?,
                ),
                "quantum" => None,
                other => return Err(format!("unknown constructor {other:?}")),
            };
            let text = match exact {
                Some(dist) if float => save_float(&dist.to_float()),
                Some(dist) => save_exact(&dist),
                None => {
                    let a = angles(&a_settings, &[0.0, 30.0, 60.0]);
                    let b = angles(&b_settings, &[0.0, 30.0, 60.0, 90.0]);
                    if (p - 0.5).abs() < f64::EPSILON && !float {
                        save_exact(
                            &quantum_distribution_exact(a, b).map_err(|e| e.to_string())?,
                        )
                    } else {
                        let cfg = QuantumConfig { a_settings: a, b_settings: b, entanglement: p };
                        save_float(&quantum_distribution(&cfg).map_err(|e| e.to_string())?)
                    }
                }
            };
            std::fs::write(&output, text).map_err(|e| format!("{output}: {e}"))?;
            println!("wrote {output}");
            Ok(true)
        }
        Command::Threshold { triple, tol, variant, assert, json } => {
            if triple.len() != 3 {
                return Err("expected --triple p13,p12,p23".into());
            }
            let variant = match variant {
                VariantArg::Tight => CorrectionVariant::Tight,
                VariantArg::Loose => CorrectionVariant::Loose,
            };
            let t = WignerTriple::new(triple[0], triple[1], triple[2])
                .map_err(|e| e.to_string())?;
            let usual = usual_wbi(&t);
            let eps = epsilon_max_with(&t, tol, variant);
            let delta = eps.map(|e| e * e * e);
            let fact = if usual.violated { "violated" } else { "not-violated" };
            if json {
                println!(
                    "{}",
                    json!({
                        "lhs": usual.lhs,
                        "rhs": usual.rhs,
                        "margin": usual.margin,
                        "violated": usual.violated,
                        "epsilon": usual.epsilon,
                        "epsilon_max": eps,
                        "delta_threshold": delta,
                    })
                );
            } else {
                println!(
                    "usual inequality: lhs {:.6} rhs {:.6} margin {:.6} ({fact})",
                    usual.lhs, usual.rhs, usual.margin
                );
                match (eps, delta) {
                    (Some(e), Some(d)) => {
                        println!("epsilon_max = {e:.6}");
                        println!(
                            "delta threshold = {d:.6e} (perfectly correlated fraction at least {:.5})",
                            1.0 - d
                        );
                    }
                    _ => println!("epsilon_max: none (the usual inequality is not violated)"),
                }
            }
            Ok(check_assert(&assert, &[fact.to_string()]))
        }
        Command::Verify { class, regime, search, assert, json } => {
            let class = ClassId::parse(&class).map_err(|e| e.to_string())?;
            let verdict = verify_class(
                class,
                regime.regime(),
                &search.space(),
                search.seed,
                search.restarts,
            )
            .map_err(|e| e.to_string())?;
            let status = match verdict.status {
                VerdictStatus::Inconsistent => "inconsistent",
                VerdictStatus::ImpliesBi => "implies-bi",
                VerdictStatus::CanViolate => "can-violate",
            };
            if json {
                println!("{}", serde_json::to_string_pretty(&verdict).map_err(|e| e.to_string())?);
            } else {
                println!("{} under {}: {status}", verdict.class, regime.regime());
                match &verdict.evidence {
                    Evidence::MissingSetting(p) => {
                        println!(
                            "  structural proof: the form omits setting(s) {:?}; the correlation \
                             pattern at parallel pairs (match cell >= {:.4}) contradicts the \
                             perpendicular one (match cell <= {:.4})",
                            p.missing, p.parallel_match_at_least, p.perpendicular_match_at_most
                        );
                    }
                    Evidence::Reduction(p) => {
                        println!(
                            "  structural proof: the case analysis over {} leaves collapses the \
                             first factor's outcome dependence, reducing the form to {}",
                            p.leaves, p.to
                        );
                    }
                    Evidence::Witness(w) => {
                        println!(
                            "  witness: classifies {} | usual margin {:.6} | generalized margin \
                             {:.6} at epsilon {:.6} | residual {:.2e} | restart {}",
                            w.classified,
                            w.usual.margin,
                            w.generalized.margin,
                            w.epsilon,
                            w.residual,
                            w.restart
                        );
                    }
                    Evidence::Falsification {
                        best_feasible_margin, best_residual, restarts, ..
                    } => {
                        println!(
                            "  falsification attempt survived: best feasible margin {:.3e} over \
                             {restarts} restarts (best residual {:.2e})",
                            best_feasible_margin, best_residual
                        );
                    }
                    Evidence::SearchExhausted { best_feasible_margin, restarts, .. } => {
                        println!(
                            "  search exhausted without a violating witness (best margin {:.3e} \
                             over {restarts} restarts)",
                            best_feasible_margin
                        );
                    }
                }
            }
            Ok(check_assert(&assert, &[status.to_string()]))
        }
        Command::Report { delta, search, json } => {
            let space = search.space();
            let strict = reproduce_table1(AssumptionRegime::STRICT, &space, search.seed, search.restarts)
                .map_err(|e| e.to_string())?;
            let nearly = reproduce_table1(
                AssumptionRegime::nearly(delta),
                &space,
                search.seed,
                search.restarts,
            )
            .map_err(|e| e.to_string())?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&json!({
                        "strict": strict,
                        "nearly": nearly,
                    }))
                    .map_err(|e| e.to_string())?
                );
            } else {
                println!("{}", render_table1(&strict, &nearly));
                println!("glyphs: '-' inconsistent with the background assumptions, '1' implies the inequalities, '0' can violate them");
            }
            Ok(true)
        }
    }
}
