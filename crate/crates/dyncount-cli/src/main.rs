//! Command-line harness for private continual counting and cardinality
//! estimation: sensitivity queries, analytic bound tables, Monte-Carlo
//! simulation, and end-to-end estimation over JSONL stream files.

mod cmds;
mod fmt;
mod io;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit codes: 0 ok, 2 usage, 3 data error, 4 budget/feasibility.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Feasibility(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Feasibility(m) => write!(f, "feasibility error: {m}"),
        }
    }
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Feasibility(_) => 4,
        }
    }
}

impl From<dyncount::Error> for CliError {
    fn from(e: dyncount::Error) -> Self {
        use dyncount::Error::*;
        match e {
            EnumerationLimit(_) | Infeasible(_) | BudgetExceeded(_) => {
                CliError::Feasibility(e.to_string())
            }
            LengthMismatch { .. } | EntryOutOfRange { .. } | NotAMember(_) | Overflow(_)
            | SelfLoop(_) | UnknownNode(_, _) | DegreeBoundViolated { .. } => {
                CliError::Data(e.to_string())
            }
            InvalidParams(_) | MissingSensitivity(_) | NotMonotone(_) | TruncationUndefined => {
                CliError::Usage(e.to_string())
            }
        }
    }
}

#[derive(Parser)]
#[command(
    name = "dyncount",
    about = "Differentially private continual counting over fully dynamic streams",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sensitivity of a factorization over a structured vector set.
    Sens(cmds::SensArgs),
    /// Analytic MaxSE/MeanSE bound tables across mechanisms (CSV).
    Bounds(cmds::BoundsArgs),
    /// Analytic vs Monte-Carlo error of a calibrated mechanism (CSV).
    Simulate(cmds::SimulateArgs),
    /// End-to-end private estimation over a JSONL stream file (CSV).
    Estimate(cmds::EstimateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FactKind {
    Sqrt,
    Tree,
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Plain,
    Subtract,
    SubtractReduced,
}

impl From<VariantArg> for dyncount::factor::TreeVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Plain => dyncount::factor::TreeVariant::Plain,
            VariantArg::Subtract => dyncount::factor::TreeVariant::Subtract,
            VariantArg::SubtractReduced => dyncount::factor::TreeVariant::SubtractReduced,
        }
    }
}

/// Factorization selection shared by several subcommands.
#[derive(Args, Debug)]
pub struct FactArgs {
    /// Which factorization to use.
    #[arg(long = "fact", value_enum)]
    pub fact: FactKind,
    /// Tree branching factor (required with --fact tree).
    #[arg(long)]
    pub b: Option<u64>,
    /// Tree variant (default: subtract).
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
}

impl FactArgs {
    pub fn spec(&self) -> Result<dyncount::estimator::FactorSpec, CliError> {
        use dyncount::estimator::FactorSpec;
        match self.fact {
            FactKind::Sqrt => Ok(FactorSpec::Sqrt),
            FactKind::Naive => Ok(FactorSpec::Naive),
            FactKind::Tree => {
                let branching = self
                    .b
                    .ok_or_else(|| CliError::Usage("--fact tree requires --b".into()))?;
                let variant = self.variant.unwrap_or(VariantArg::Subtract).into();
                Ok(FactorSpec::Tree { branching, variant })
            }
        }
    }
}

/// Privacy budget flags: exactly one of --rho / --eps.
#[derive(Args, Debug)]
pub struct BudgetArgs {
    /// zCDP budget rho (Gaussian noise).
    #[arg(long)]
    pub rho: Option<f64>,
    /// Pure-DP budget epsilon (Laplace noise).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Reporting delta for the implied approximate-DP guarantee.
    #[arg(long)]
    pub delta: Option<f64>,
}

impl BudgetArgs {
    pub fn budget(&self) -> Result<dyncount::mechanism::PrivacyBudget, CliError> {
        use dyncount::mechanism::PrivacyBudget;
        let b = match (self.rho, self.eps) {
            (Some(rho), None) => PrivacyBudget::zcdp(rho)?,
            (None, Some(eps)) => PrivacyBudget::pure_dp(eps)?,
            _ => {
                return Err(CliError::Usage(
                    "exactly one of --rho or --eps must be given".into(),
                ))
            }
        };
        Ok(match self.delta {
            Some(d) => b.with_delta(d)?,
            None => b,
        })
    }

    pub fn label(&self) -> String {
        match (self.rho, self.eps) {
            (Some(rho), _) => format!("rho={rho}"),
            (_, Some(eps)) => format!("eps={eps}"),
            _ => String::new(),
        }
    }
}

/// Parses an integer that may use `2^e` notation.
pub fn parse_scale_int(s: &str) -> Result<u128, CliError> {
    let s = s.trim();
    if let Some(exp) = s.strip_prefix("2^") {
        let e: u32 = exp
            .parse()
            .map_err(|_| CliError::Usage(format!("bad exponent in {s:?}")))?;
        if e > 126 {
            return Err(CliError::Usage("exponent beyond 2^126".into()));
        }
        Ok(1u128 << e)
    } else {
        s.parse().map_err(|_| CliError::Usage(format!("bad integer {s:?}")))
    }
}

/// Reads DYNCOUNT_THREADS; unset means auto.
pub fn thread_pool_size() -> Result<Option<usize>, CliError> {
    match std::env::var("DYNCOUNT_THREADS") {
        Ok(v) => {
            let n: usize = v
                .parse()
                .map_err(|_| CliError::Usage(format!("DYNCOUNT_THREADS={v:?} is not a number")))?;
            if n == 0 {
                return Err(CliError::Usage("DYNCOUNT_THREADS must be positive".into()));
            }
            Ok(Some(n))
        }
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Usage(format!("DYNCOUNT_THREADS: {e}"))),
    }
}

/// Largest horizon any command will actually build a factorization for.
/// Pure bound formulas (the `bounds` subcommand) have no cap.
pub const MAX_SIMULATED_HORIZON: u128 = 1 << 22;

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sens(a) => cmds::run_sens(&a),
        Command::Bounds(a) => cmds::run_bounds(&a),
        Command::Simulate(a) => cmds::run_simulate(&a),
        Command::Estimate(a) => cmds::run_estimate(&a),
    };
    match result {
        Ok(payload) => {
            // A closed pipe (e.g. piping into `head`) is not an error.
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            if let Err(e) = stdout.write_all(payload.as_bytes()) {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    eprintln!("error writing output: {e}");
                    std::process::exit(3);
                }
            }
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.code());
        }
    }
}
