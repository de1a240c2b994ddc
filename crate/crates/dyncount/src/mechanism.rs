//! Privacy budgets, noise calibration, and the streaming factorization
//! mechanism producing private prefix sums.
//!
//! Under zero-concentrated differential privacy a run adds Gaussian noise
//! with per-coordinate standard deviation `sens_2 / sqrt(2 rho)`; under pure
//! differential privacy it adds Laplace noise with scale `sens_1 / eps`.
//! The per-step error formulas follow from the factorization norms:
//!
//! ```text
//!   MaxSE  = ||L||_{2->inf} * sens_2 / sqrt(2 rho)
//!   MeanSE = ||L||_F / sqrt(T) * sens_2 / sqrt(2 rho)
//! ```
//!
//! with `sens_2 / sqrt(2 rho)` replaced by `sqrt(2) sens_1 / eps` for the
//! Laplace mechanism.

use crate::error::{Error, Result};
use crate::factor::{Factorization, NoiseStream};
use crate::noise::{derive_seed, NoiseKind};
use crate::parallel::run_chunked;
use crate::sens::{resolve_sens, NormOrder, ResolvedSens, SensOptions};
use crate::vectors::SetParams;

/// The privacy accounting regime of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BudgetKind {
    Zcdp { rho: f64 },
    PureDp { epsilon: f64 },
}

/// A privacy budget, with an optional `delta` for reporting the implied
/// approximate-DP guarantee of a zCDP budget. The conversion is metadata
/// only; calibration never uses it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    pub kind: BudgetKind,
    pub delta: Option<f64>,
}

impl PrivacyBudget {
    pub fn zcdp(rho: f64) -> Result<Self> {
        if rho.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::InvalidParams("rho must be positive".into()));
        }
        Ok(Self { kind: BudgetKind::Zcdp { rho }, delta: None })
    }

    pub fn pure_dp(epsilon: f64) -> Result<Self> {
        if epsilon.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::InvalidParams("epsilon must be positive".into()));
        }
        Ok(Self { kind: BudgetKind::PureDp { epsilon }, delta: None })
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParams("delta must lie in (0, 1)".into()));
        }
        self.delta = Some(delta);
        Ok(self)
    }

    pub fn noise_kind(&self) -> NoiseKind {
        match self.kind {
            BudgetKind::Zcdp { .. } => NoiseKind::Gaussian,
            BudgetKind::PureDp { .. } => NoiseKind::Laplace,
        }
    }

    /// Which norm order calibrates this budget.
    pub fn norm_order(&self) -> NormOrder {
        match self.kind {
            BudgetKind::Zcdp { .. } => NormOrder::Two,
            BudgetKind::PureDp { .. } => NormOrder::One,
        }
    }

    /// A `rho`-zCDP budget with a reporting `delta` also satisfies
    /// `(rho + 2 sqrt(rho ln(1/delta)), delta)`-DP.
    pub fn converted_epsilon(&self) -> Option<f64> {
        match (self.kind, self.delta) {
            (BudgetKind::Zcdp { rho }, Some(delta)) => {
                Some(rho + 2.0 * (rho * (1.0 / delta).ln()).sqrt())
            }
            _ => None,
        }
    }

    /// Splits the budget across `ways` parallel runs by composition.
    pub fn split(&self, ways: f64) -> Self {
        let kind = match self.kind {
            BudgetKind::Zcdp { rho } => BudgetKind::Zcdp { rho: rho / ways },
            BudgetKind::PureDp { epsilon } => BudgetKind::PureDp { epsilon: epsilon / ways },
        };
        Self { kind, delta: self.delta }
    }
}

/// Calibrated per-coordinate noise.
#[derive(Debug, Clone, Copy)]
pub struct NoiseDescriptor {
    pub kind: NoiseKind,
    /// Gaussian: the standard deviation. Laplace: the scale parameter.
    pub scale: f64,
    pub per_coord_std: f64,
    /// `(epsilon, delta)` implied by a zCDP budget with a reporting delta.
    pub converted: Option<(f64, f64)>,
}

/// Derives the noise distribution from a budget and the relevant
/// sensitivity: Gaussian `sens_2 / sqrt(2 rho)` or Laplace `sens_1 / eps`.
pub fn calibrate(
    budget: &PrivacyBudget,
    sens1: Option<f64>,
    sens2: Option<f64>,
) -> Result<NoiseDescriptor> {
    match budget.kind {
        BudgetKind::Zcdp { rho } => {
            let s2 = sens2.filter(|s| *s > 0.0).ok_or_else(|| {
                Error::MissingSensitivity("zCDP calibration needs a positive l2 sensitivity".into())
            })?;
            let sigma = s2 / (2.0 * rho).sqrt();
            Ok(NoiseDescriptor {
                kind: NoiseKind::Gaussian,
                scale: sigma,
                per_coord_std: sigma,
                converted: budget.converted_epsilon().zip(budget.delta),
            })
        }
        BudgetKind::PureDp { epsilon } => {
            let s1 = sens1.filter(|s| *s > 0.0).ok_or_else(|| {
                Error::MissingSensitivity(
                    "pure-DP calibration needs a positive l1 sensitivity".into(),
                )
            })?;
            let b = s1 / epsilon;
            Ok(NoiseDescriptor {
                kind: NoiseKind::Laplace,
                scale: b,
                per_coord_std: std::f64::consts::SQRT_2 * b,
                converted: None,
            })
        }
    }
}

/// Configuration of a mechanism run.
#[derive(Debug, Clone)]
pub struct MechanismConfig {
    pub budget: PrivacyBudget,
    pub set: SetParams,
    pub seed: u64,
    /// Test hook: overrides the calibrated noise scale (0 disables noise).
    pub scale_override: Option<f64>,
}

impl MechanismConfig {
    pub fn new(budget: PrivacyBudget, set: SetParams, seed: u64) -> Self {
        Self { budget, set, seed, scale_override: None }
    }

    pub fn with_scale_override(mut self, scale: f64) -> Self {
        self.scale_override = Some(scale);
        self
    }
}

/// A completed run: per-step private prefix sums plus the calibration record.
#[derive(Debug, Clone)]
pub struct MechanismRun {
    pub factorization: String,
    pub noise_kind: NoiseKind,
    pub noise_scale: f64,
    pub sensitivity_used: f64,
    pub sensitivity_exact: bool,
    pub sensitivity_provenance: String,
    pub seed: u64,
    pub outputs: Vec<f64>,
}

/// Resolves kind, scale and the sensitivity record for a run.
fn resolve_noise(
    f: &Factorization,
    config: &MechanismConfig,
    opts: &SensOptions,
) -> Result<(NoiseKind, f64, ResolvedSens)> {
    let sens = resolve_sens(f, config.budget.norm_order(), &config.set, opts)?;
    let descriptor = match config.budget.kind {
        BudgetKind::Zcdp { .. } => calibrate(&config.budget, None, Some(sens.value))?,
        BudgetKind::PureDp { .. } => calibrate(&config.budget, Some(sens.value), None)?,
    };
    let scale = config.scale_override.unwrap_or(descriptor.scale);
    Ok((descriptor.kind, scale, sens))
}

/// The online mechanism: consumes one input per step and immediately emits
/// the private prefix sum for that step.
pub struct StreamingMechanism {
    prefix: i64,
    noise: NoiseStream,
}

impl StreamingMechanism {
    /// Steps emitted so far.
    pub fn step(&self) -> usize {
        self.noise.step()
    }

    /// Feeds `x[t]` and returns the private output for step `t`.
    pub fn push(&mut self, x: i64) -> f64 {
        self.prefix += x;
        let z = self.noise.next().expect("more steps than the declared horizon");
        self.prefix as f64 + z
    }
}

/// Builds the streaming mechanism for a factorization and returns it with
/// the resolved calibration record (outputs still empty).
pub fn streaming_mechanism(
    f: &Factorization,
    config: &MechanismConfig,
    opts: &SensOptions,
) -> Result<(StreamingMechanism, MechanismRun)> {
    if config.set.horizon() != f.horizon() {
        return Err(Error::LengthMismatch { expected: f.horizon(), got: config.set.horizon() });
    }
    let (kind, scale, sens) = resolve_noise(f, config, opts)?;
    let mech = StreamingMechanism { prefix: 0, noise: f.noise_stream(kind, scale, config.seed) };
    let record = MechanismRun {
        factorization: f.label(),
        noise_kind: kind,
        noise_scale: scale,
        sensitivity_used: sens.value,
        sensitivity_exact: sens.exact,
        sensitivity_provenance: sens.provenance,
        seed: config.seed,
        outputs: Vec::new(),
    };
    Ok((mech, record))
}

/// Runs the mechanism over a full input stream, one step at a time. The
/// input at step `t' > t` is never read before the output for step `t` is
/// produced.
pub fn run_stream(
    f: &Factorization,
    config: &MechanismConfig,
    input: &[i64],
    opts: &SensOptions,
) -> Result<MechanismRun> {
    if input.len() != f.horizon() {
        return Err(Error::LengthMismatch { expected: f.horizon(), got: input.len() });
    }
    let (mut mech, mut record) = streaming_mechanism(f, config, opts)?;
    record.outputs.reserve(input.len());
    for &x in input {
        let out = mech.push(x);
        record.outputs.push(out);
    }
    Ok(record)
}

/// The analytic per-step error of a calibrated mechanism.
#[derive(Debug, Clone, Copy)]
pub struct ErrorBounds {
    pub max_se: f64,
    pub mean_se: f64,
    pub sensitivity: f64,
    pub sensitivity_exact: bool,
}

/// `MaxSE` and `MeanSE` from the factorization norms and the resolved
/// sensitivity. When only an upper bound on the sensitivity is available,
/// the flag is false and the reported error is conservative.
pub fn analytic_error(
    f: &Factorization,
    budget: &PrivacyBudget,
    set: &SetParams,
    opts: &SensOptions,
) -> Result<ErrorBounds> {
    let sens = resolve_sens(f, budget.norm_order(), set, opts)?;
    let norms = f.norms();
    let per_unit = match budget.kind {
        BudgetKind::Zcdp { rho } => sens.value / (2.0 * rho).sqrt(),
        BudgetKind::PureDp { epsilon } => std::f64::consts::SQRT_2 * sens.value / epsilon,
    };
    Ok(ErrorBounds {
        max_se: norms.l_two_to_inf * per_unit,
        mean_se: norms.l_frobenius_over_sqrt_t * per_unit,
        sensitivity: sens.value,
        sensitivity_exact: sens.exact,
    })
}

/// Monte-Carlo estimate of the same two error quantities.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalError {
    pub max_se: f64,
    pub mean_se: f64,
    pub trials: usize,
}

/// Runs the mechanism on the zero stream `trials` times and estimates the
/// per-step output variance. The mechanism is unbiased, so the zero stream
/// suffices and the estimates converge to the analytic formulas.
pub fn empirical_error(
    f: &Factorization,
    config: &MechanismConfig,
    trials: usize,
    threads: Option<usize>,
    opts: &SensOptions,
) -> Result<EmpiricalError> {
    if trials == 0 {
        return Err(Error::InvalidParams("at least one trial is required".into()));
    }
    let t = f.horizon();
    let (kind, scale, _) = resolve_noise(f, config, opts)?;
    let work = |range: std::ops::Range<usize>| -> Vec<f64> {
        let mut sumsq = vec![0.0f64; t];
        for trial in range {
            let seed = derive_seed(config.seed, trial as u64);
            for (step, z) in f.noise_stream(kind, scale, seed).enumerate() {
                sumsq[step] += z * z;
            }
        }
        sumsq
    };
    let total = run_chunked(trials, threads, work, vec![0.0f64; t], |mut acc, part| {
        for (a, p) in acc.iter_mut().zip(&part) {
            *a += p;
        }
        acc
    });
    let vars: Vec<f64> = total.iter().map(|s| s / trials as f64).collect();
    let max_var = vars.iter().cloned().fold(0.0f64, f64::max);
    let mean_var = vars.iter().sum::<f64>() / t as f64;
    Ok(EmpiricalError { max_se: max_var.sqrt(), mean_se: mean_var.sqrt(), trials })
}
