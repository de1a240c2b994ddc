//! The four subcommands.

use std::path::PathBuf;

use clap::{Args, ValueEnum};

use dyncount::comparison::{
    bound_rows, pure_tree_max_constant, pure_tree_mean_constant, zcdp_tree_max_constant,
    zcdp_tree_mean_constant,
};
use dyncount::estimator::{
    estimate, EstimateConfig, EstimateOutputs, Problem, StreamData, TrueValues,
};
use dyncount::mechanism::{analytic_error, empirical_error, MechanismConfig};
use dyncount::sens::{sensitivity, Method, NormOrder, SensOptions, SensQuery};
use dyncount::vectors::SetParams;

use crate::fmt::fmt12;
use crate::io::parse_stream_file;
use crate::{
    parse_scale_int, thread_pool_size, BudgetArgs, CliError, FactArgs, MAX_SIMULATED_HORIZON,
};

/// Reporting only: a zCDP budget with a delta implies an approximate-DP
/// guarantee; calibration never uses it.
fn report_conversion(budget: &dyncount::mechanism::PrivacyBudget) {
    if let (Some(eps), Some(delta)) = (budget.converted_epsilon(), budget.delta) {
        eprintln!("note: this zCDP budget also satisfies ({eps:.6}, {delta})-DP");
    }
}

fn checked_horizon(t: u128) -> Result<usize, CliError> {
    if t < 1 {
        return Err(CliError::Usage("the horizon must be at least 1".into()));
    }
    if t > MAX_SIMULATED_HORIZON {
        return Err(CliError::Feasibility(format!(
            "horizon {t} exceeds the simulation cap {MAX_SIMULATED_HORIZON}; \
             only the bounds subcommand accepts larger horizons"
        )));
    }
    Ok(t as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Dp,
    Bound,
    Brute,
    Empirical,
}

#[derive(Args, Debug)]
pub struct SensArgs {
    #[command(flatten)]
    fact: FactArgs,
    /// Time horizon (supports 2^e notation).
    #[arg(long = "T")]
    t: String,
    /// ℓ1 bound of the vector set.
    #[arg(long)]
    k: u64,
    /// Interval-sum bound of the vector set.
    #[arg(long = "D", default_value_t = 1)]
    d: u64,
    /// Norm order (1 or 2).
    #[arg(long, default_value_t = 2)]
    p: u8,
    /// Computation method (default: dp for trees, bound otherwise).
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Trials for the sampling estimator paths.
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

pub fn run_sens(args: &SensArgs) -> Result<String, CliError> {
    let t = checked_horizon(parse_scale_int(&args.t)?)?;
    let p = match args.p {
        1 => NormOrder::One,
        2 => NormOrder::Two,
        other => return Err(CliError::Usage(format!("unsupported norm order {other}"))),
    };
    let spec = args.fact.spec()?;
    let f = spec.build(t)?;
    let method = match args.method {
        Some(MethodArg::Dp) => Method::ExactDp,
        Some(MethodArg::Bound) => Method::ClosedBound,
        Some(MethodArg::Brute) => Method::BruteForce,
        Some(MethodArg::Empirical) => Method::Empirical,
        None => match f {
            dyncount::factor::Factorization::Tree(_) => Method::ExactDp,
            _ => Method::ClosedBound,
        },
    };
    let set = SetParams::new(args.d, args.k, t)?;
    let opts = SensOptions {
        empirical_trials: args.trials,
        seed: args.seed,
        threads: thread_pool_size()?,
        ..SensOptions::default()
    };
    let query = SensQuery { factorization: &f, p, set, method };
    let result = sensitivity(&query, &opts)?;
    let notes: serde_json::Map<String, serde_json::Value> = result
        .notes
        .iter()
        .map(|(k, v)| (k.clone(), serde_json::json!(v)))
        .collect();
    let out = serde_json::json!({
        "factorization": f.label(),
        "T": t,
        "k": args.k,
        "D": args.d,
        "p": args.p,
        "method": format!("{:?}", method),
        "value": result.value,
        "lower": result.lower,
        "upper": result.upper,
        "witness": result.witness.as_ref().map(|w| w.entries().to_vec()),
        "provenance": result.provenance,
        "notes": notes,
    });
    Ok(serde_json::to_string_pretty(&out).expect("serializable") + "\n")
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    /// Time horizon (supports 2^e notation); bounds are pure arithmetic,
    /// so there is no cap.
    #[arg(long = "T")]
    t: String,
    /// Comma-separated ℓ1 bounds (each supports 2^e notation).
    #[arg(long)]
    k: Option<String>,
    #[arg(long = "D", default_value_t = 1)]
    d: u64,
    #[command(flatten)]
    budget: BudgetArgs,
    /// Tree branching factor for the tree row (default: 5 under zCDP,
    /// 17 under pure DP).
    #[arg(long)]
    b: Option<u64>,
    /// Emit the leading-constant scan over odd branching factors instead.
    #[arg(long, default_value_t = false)]
    constants: bool,
}

pub fn run_bounds(args: &BoundsArgs) -> Result<String, CliError> {
    let mut out = String::new();
    if args.constants {
        out.push_str("b,zcdp_max_constant,zcdp_mean_constant,pure_max_constant,pure_mean_constant\n");
        for b in (3u64..=31).step_by(2) {
            out.push_str(&format!(
                "{b},{},{},{},{}\n",
                fmt12(zcdp_tree_max_constant(b)),
                fmt12(zcdp_tree_mean_constant(b)),
                fmt12(pure_tree_max_constant(b)),
                fmt12(pure_tree_mean_constant(b))
            ));
        }
        return Ok(out);
    }
    let t = parse_scale_int(&args.t)?;
    let ks = args
        .k
        .as_ref()
        .ok_or_else(|| CliError::Usage("--k is required unless --constants is given".into()))?;
    let budget = args.budget.budget()?;
    let label = args.budget.label();
    out.push_str("mechanism,T,k,D,budget,max_se,mean_se,sensitivity,sens_exact,method\n");
    for token in ks.split(',') {
        let k = parse_scale_int(token)?;
        let rows = bound_rows(t, k, args.d as u128, &budget, args.b)?;
        for r in rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.mechanism,
                r.horizon,
                r.l1_bound,
                r.interval_bound,
                label,
                fmt12(r.max_se),
                fmt12(r.mean_se),
                fmt12(r.sensitivity),
                r.sensitivity_exact,
                r.method
            ));
        }
    }
    Ok(out)
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    fact: FactArgs,
    #[arg(long = "T")]
    t: String,
    #[arg(long)]
    k: u64,
    #[arg(long = "D", default_value_t = 1)]
    d: u64,
    #[command(flatten)]
    budget: BudgetArgs,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Disable noise (test hook): analytic and empirical errors become 0.
    #[arg(long, default_value_t = false)]
    sigma0: bool,
}

pub fn run_simulate(args: &SimulateArgs) -> Result<String, CliError> {
    let t = checked_horizon(parse_scale_int(&args.t)?)?;
    let spec = args.fact.spec()?;
    let f = spec.build(t)?;
    let set = SetParams::new(args.d, args.k, t)?;
    let budget = args.budget.budget()?;
    report_conversion(&budget);
    let opts = SensOptions { threads: thread_pool_size()?, ..SensOptions::default() };
    let mut config = MechanismConfig::new(budget, set, args.seed);
    if args.sigma0 {
        config = config.with_scale_override(0.0);
    }
    let emp = empirical_error(&f, &config, args.trials, opts.threads, &opts)?;
    let (ana_max, ana_mean) = if args.sigma0 {
        (0.0, 0.0)
    } else {
        let a = analytic_error(&f, &budget, &set, &opts)?;
        (a.max_se, a.mean_se)
    };
    let rel = |emp: f64, ana: f64| {
        if ana == 0.0 {
            if emp == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (emp - ana) / ana
        }
    };
    let label = args.budget.label();
    let mut out = String::from("mechanism,T,k,D,budget,metric,analytic,empirical,rel_deviation\n");
    out.push_str(&format!(
        "{},{t},{},{},{label},max_se,{},{},{}\n",
        f.label(),
        args.k,
        args.d,
        fmt12(ana_max),
        fmt12(emp.max_se),
        fmt12(rel(emp.max_se, ana_max))
    ));
    out.push_str(&format!(
        "{},{t},{},{},{label},mean_se,{},{},{}\n",
        f.label(),
        args.k,
        args.d,
        fmt12(ana_mean),
        fmt12(emp.mean_se),
        fmt12(rel(emp.mean_se, ana_mean))
    ));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemArg {
    Countdistinct,
    Degreecount,
    Trianglecount,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[arg(long, value_enum)]
    problem: ProblemArg,
    /// JSONL stream file.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    fact: FactArgs,
    #[command(flatten)]
    budget: BudgetArgs,
    /// Contribution bound (flippancy / degree contribution / triangle
    /// contribution).
    #[arg(long)]
    k: u64,
    /// Degree bound, required for trianglecount.
    #[arg(long = "D")]
    d: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Disable noise (test hook).
    #[arg(long, default_value_t = false)]
    sigma0: bool,
    /// Include the exact statistic columns.
    #[arg(long, default_value_t = false)]
    with_truth: bool,
    /// Write the CSV here instead of stdout; the truncation log goes to the
    /// same path with a .trunc.csv suffix.
    #[arg(long)]
    output: Option<PathBuf>,
}

pub fn run_estimate(args: &EstimateArgs) -> Result<String, CliError> {
    let content = std::fs::read_to_string(&args.input)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.input.display())))?;
    let file = parse_stream_file(&content)?;
    let problem = match args.problem {
        ProblemArg::Countdistinct => Problem::CountDistinct,
        ProblemArg::Degreecount => Problem::DegreeCount,
        ProblemArg::Trianglecount => Problem::TriangleCount,
    };
    match (&file.data, problem) {
        (StreamData::Items(_), Problem::CountDistinct) => {}
        (StreamData::Graph(_), Problem::DegreeCount | Problem::TriangleCount) => {}
        _ => {
            return Err(CliError::Data(
                "stream kind does not match the requested problem".into(),
            ))
        }
    }
    let horizon = match &file.data {
        StreamData::Items(s) => s.horizon(),
        StreamData::Graph(g) => g.horizon(),
    };
    checked_horizon(horizon as u128)?;
    let budget = args.budget.budget()?;
    report_conversion(&budget);
    let config = EstimateConfig {
        factorization: args.fact.spec()?,
        budget,
        l1_bound: args.k,
        interval_bound: args.d,
        seed: args.seed,
        scale_override: if args.sigma0 { Some(0.0) } else { None },
    };
    let opts = SensOptions { threads: thread_pool_size()?, ..SensOptions::default() };
    let run = estimate(problem, &file.data, &config, &opts)?;

    let mut csv = String::new();
    match (&run.outputs, &run.truth) {
        (EstimateOutputs::Scalar(out), TrueValues::Scalar(truth)) => {
            if args.with_truth {
                csv.push_str("t,true_value,estimate\n");
                for (t, (o, w)) in out.iter().zip(truth).enumerate() {
                    csv.push_str(&format!("{t},{w},{}\n", fmt12(*o)));
                }
            } else {
                csv.push_str("t,estimate\n");
                for (t, o) in out.iter().enumerate() {
                    csv.push_str(&format!("{t},{}\n", fmt12(*o)));
                }
            }
        }
        (EstimateOutputs::PerNode(out), TrueValues::PerNode(truth)) => {
            let names = &file.node_names;
            csv.push('t');
            if args.with_truth {
                for n in names {
                    csv.push_str(&format!(",true_{n}"));
                }
            }
            for n in names {
                csv.push_str(&format!(",est_{n}"));
            }
            csv.push('\n');
            for t in 0..horizon {
                csv.push_str(&t.to_string());
                if args.with_truth {
                    for node in truth {
                        csv.push_str(&format!(",{}", node[t]));
                    }
                }
                for node in out {
                    csv.push_str(&format!(",{}", fmt12(node[t])));
                }
                csv.push('\n');
            }
        }
        _ => unreachable!("outputs and truth always share a shape"),
    }

    let mut trunc_csv = String::from("step,index,key\n");
    for e in &run.truncation_log {
        trunc_csv.push_str(&format!("{},{},{}\n", e.step, e.index, e.key));
    }

    match &args.output {
        Some(path) => {
            std::fs::write(path, csv)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let mut trunc_path = path.clone();
            let stem = trunc_path
                .extension()
                .map(|e| e.to_string_lossy().to_string())
                .unwrap_or_default();
            trunc_path.set_extension(if stem.is_empty() {
                "trunc.csv".to_string()
            } else {
                format!("{stem}.trunc.csv")
            });
            std::fs::write(&trunc_path, trunc_csv)
                .map_err(|e| CliError::Data(format!("{}: {e}", trunc_path.display())))?;
        }
        None => {
            if !run.truncation_log.is_empty() {
                eprintln!(
                    "note: {} update(s) were truncated; pass --output to capture the log",
                    run.truncation_log.len()
                );
            }
            return Ok(csv);
        }
    }
    Ok(String::new())
}
