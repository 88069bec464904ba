//! Classical iterative proportional scaling.
//!
//! Starting from the uniform distribution, each step rescales the current
//! estimate so that its marginals under one block match the data marginals:
//!
//! ```text
//! p <- p * (A^l d) / (A^l p)
//! ```
//!
//! which is the information projection onto the linear family
//! `{p : A^l p = A^l d}`. Cycling through the blocks converges to the MLE.
//! Exact mode runs on rationals and terminates only at a genuine fixpoint of
//! a full cycle; float mode stops on a step-size tolerance.
//!
//! Step counting: the terminating verification step (or cycle, in exact
//! mode) is not counted, so a representation whose first step already lands
//! on the MLE reports one step.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Error;
use crate::fraction::{check_normalized, check_positive, Fraction};
use crate::matrix::MultipartitionMatrix;

/// Arithmetic mode of an IPS run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IpsMode {
    Exact,
    Float,
}

/// Current estimate vector, exact or floating point.
#[derive(Clone, Debug, PartialEq)]
pub enum IpsVector {
    Exact(Vec<Fraction>),
    Float(Vec<f64>),
}

impl IpsVector {
    pub fn len(&self) -> usize {
        match self {
            IpsVector::Exact(v) => v.len(),
            IpsVector::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Exact entries, when in exact mode.
    pub fn as_exact(&self) -> Option<&[Fraction]> {
        match self {
            IpsVector::Exact(v) => Some(v),
            IpsVector::Float(_) => None,
        }
    }

    /// Floating-point view (lossy in exact mode).
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            IpsVector::Exact(v) => v.iter().map(Fraction::to_f64).collect(),
            IpsVector::Float(v) => v.clone(),
        }
    }
}

/// One tracked step, for diagnostics.
#[derive(Clone, Debug)]
pub struct HistoryEntry {
    pub step: usize,
    pub max_delta: f64,
    pub kl_to_data: Option<f64>,
}

/// Mutable IPS state.
#[derive(Clone, Debug)]
pub struct IpsState {
    pub p: IpsVector,
    pub step_count: usize,
    pub history: Vec<HistoryEntry>,
}

/// The uniform starting distribution over the matrix's m outcomes.
pub fn initial_state(mat: &MultipartitionMatrix, mode: IpsMode) -> IpsState {
    let m = mat.n_cols();
    let p = match mode {
        IpsMode::Exact => IpsVector::Exact(vec![Fraction::new(1, m as i64); m]),
        IpsMode::Float => IpsVector::Float(vec![1.0 / m as f64; m]),
    };
    IpsState {
        p,
        step_count: 0,
        history: Vec::new(),
    }
}

/// One exact projection step on `block`. The state keeps exact
/// normalization and positivity; the block marginals match the data
/// marginals exactly afterwards.
pub fn ips_step_exact(
    mat: &MultipartitionMatrix,
    p: &mut [Fraction],
    d: &[Fraction],
    block: usize,
) -> Result<(), Error> {
    let rows = mat.block(block).n_rows();
    let mut data_marginal = Vec::with_capacity(rows);
    let mut state_marginal = Vec::with_capacity(rows);
    for i in 0..rows {
        data_marginal.push(mat.row_dot(block, i, d));
        state_marginal.push(mat.row_dot(block, i, p));
    }
    let mut factor = Vec::with_capacity(rows);
    for i in 0..rows {
        if state_marginal[i].is_zero() {
            if data_marginal[i].is_zero() {
                // A zero row of the block scales nothing.
                factor.push(Fraction::one());
                continue;
            }
            return Err(Error::ZeroMarginal { block, row: i });
        }
        factor.push(&data_marginal[i] / &state_marginal[i]);
    }
    for (j, x) in p.iter_mut().enumerate() {
        *x *= &factor[mat.selector(block, j)];
    }
    #[cfg(debug_assertions)]
    {
        for i in 0..rows {
            debug_assert_eq!(mat.row_dot(block, i, p), data_marginal[i]);
        }
        let total: Fraction = p.iter().sum();
        debug_assert!(total.is_one(), "projection must preserve normalization");
    }
    Ok(())
}

/// One float projection step on `block`; returns the max entrywise delta.
pub fn ips_step_float(
    mat: &MultipartitionMatrix,
    p: &mut [f64],
    d: &[f64],
    block: usize,
) -> Result<f64, Error> {
    let rows = mat.block(block).n_rows();
    let mut factor = Vec::with_capacity(rows);
    for i in 0..rows {
        let dm = mat.row_dot_f64(block, i, d);
        let pm = mat.row_dot_f64(block, i, p);
        if pm == 0.0 {
            if dm == 0.0 {
                factor.push(1.0);
                continue;
            }
            return Err(Error::ZeroMarginal { block, row: i });
        }
        factor.push(dm / pm);
    }
    let mut max_delta = 0.0f64;
    for (j, x) in p.iter_mut().enumerate() {
        let next = *x * factor[mat.selector(block, j)];
        max_delta = max_delta.max((next - *x).abs());
        *x = next;
    }
    Ok(max_delta)
}

/// The step operation on an immutable state; returns the advanced state.
pub fn ips_step(
    state: &IpsState,
    mat: &MultipartitionMatrix,
    d: &[Fraction],
    block: usize,
) -> Result<IpsState, Error> {
    check_positive(d)?;
    check_normalized(d)?;
    let mut next = state.clone();
    match &mut next.p {
        IpsVector::Exact(p) => ips_step_exact(mat, p, d, block)?,
        IpsVector::Float(p) => {
            let fd: Vec<f64> = d.iter().map(Fraction::to_f64).collect();
            ips_step_float(mat, p, &fd, block)?;
        }
    }
    next.step_count += 1;
    Ok(next)
}

/// Configuration of a full IPS run.
#[derive(Clone, Debug)]
pub struct IpsConfig {
    pub mode: IpsMode,
    pub max_cycles: usize,
    pub float_tolerance: f64,
    pub record_history: bool,
}

impl Default for IpsConfig {
    fn default() -> Self {
        IpsConfig {
            mode: IpsMode::Exact,
            max_cycles: 10_000,
            float_tolerance: 1e-8,
            record_history: false,
        }
    }
}

/// Outcome of a full IPS run.
#[derive(Clone, Debug)]
pub struct IpsResult {
    pub final_p: IpsVector,
    /// Productive steps; the terminating verification step/cycle is not
    /// counted.
    pub steps_taken: usize,
    /// steps_taken / k, as an exact fraction of cycles.
    pub cycles_taken: Fraction,
    pub converged: bool,
    /// Exact mode: max block-marginal residual |A(p - d)| (zero iff the
    /// Birch conditions hold exactly).
    pub birch_residual_exact: Option<Fraction>,
    /// Float view of the residual, available in both modes.
    pub birch_residual_float: f64,
    /// Exact mode: whether the state after exactly k steps already
    /// satisfies Ap = Ad.
    pub one_cycle_exact: Option<bool>,
    pub history: Vec<HistoryEntry>,
}

/// Max over all block rows of |alpha.(p - d)|, exactly.
pub fn birch_residual_exact(
    mat: &MultipartitionMatrix,
    p: &[Fraction],
    d: &[Fraction],
) -> Fraction {
    let mut worst = Fraction::zero();
    for l in 0..mat.k() {
        for i in 0..mat.block(l).n_rows() {
            let r = (mat.row_dot(l, i, p) - mat.row_dot(l, i, d)).abs();
            if r > worst {
                worst = r;
            }
        }
    }
    worst
}

/// Float version of the Birch residual.
pub fn birch_residual_float(mat: &MultipartitionMatrix, p: &[f64], d: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for l in 0..mat.k() {
        for i in 0..mat.block(l).n_rows() {
            worst = worst.max((mat.row_dot_f64(l, i, p) - mat.row_dot_f64(l, i, d)).abs());
        }
    }
    worst
}

/// KL divergence sum(q ln(q/p)) for strictly positive vectors.
pub fn kl_divergence(q: &[f64], p: &[f64]) -> f64 {
    q.iter().zip(p).map(|(&a, &b)| a * (a / b).ln()).sum()
}

/// Runs IPS to convergence (or `max_cycles`). The data vector must be
/// strictly positive and exactly normalized.
pub fn ips_run(
    mat: &MultipartitionMatrix,
    d: &[Fraction],
    config: &IpsConfig,
) -> Result<IpsResult, Error> {
    if d.len() != mat.n_cols() {
        return Err(Error::DimensionMismatch(format!(
            "data length {} for {} columns",
            d.len(),
            mat.n_cols()
        )));
    }
    check_positive(d)?;
    check_normalized(d)?;
    match config.mode {
        IpsMode::Exact => run_exact(mat, d, config),
        IpsMode::Float => {
            let fd: Vec<f64> = d.iter().map(Fraction::to_f64).collect();
            run_float(mat, &fd, config)
        }
    }
}

fn run_exact(
    mat: &MultipartitionMatrix,
    d: &[Fraction],
    config: &IpsConfig,
) -> Result<IpsResult, Error> {
    let k = mat.k();
    let m = mat.n_cols();
    let mut p = vec![Fraction::new(1, m as i64); m];
    let mut history = Vec::new();
    let mut steps_taken = 0usize;
    let mut converged = false;
    let mut one_cycle_exact = None;
    let fd: Vec<f64> = d.iter().map(Fraction::to_f64).collect();
    for cycle in 0..config.max_cycles.max(1) {
        let before = p.clone();
        for l in 0..k {
            let prev: Option<Vec<f64>> = config
                .record_history
                .then(|| p.iter().map(Fraction::to_f64).collect());
            ips_step_exact(mat, &mut p, d, l)?;
            if let Some(prev) = prev {
                let now: Vec<f64> = p.iter().map(Fraction::to_f64).collect();
                let max_delta = prev
                    .iter()
                    .zip(&now)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                history.push(HistoryEntry {
                    step: cycle * k + l + 1,
                    max_delta,
                    kl_to_data: Some(kl_divergence(&fd, &now)),
                });
            }
        }
        if cycle == 0 {
            one_cycle_exact = Some(birch_residual_exact(mat, &p, d).is_zero());
        }
        if p == before {
            converged = true;
            break;
        }
        steps_taken += k;
    }
    let residual = birch_residual_exact(mat, &p, d);
    Ok(IpsResult {
        cycles_taken: Fraction::from(steps_taken as u64) / Fraction::from(k as u64),
        steps_taken,
        converged,
        birch_residual_float: residual.to_f64(),
        birch_residual_exact: Some(residual),
        one_cycle_exact,
        final_p: IpsVector::Exact(p),
        history,
    })
}

fn run_float(
    mat: &MultipartitionMatrix,
    d: &[f64],
    config: &IpsConfig,
) -> Result<IpsResult, Error> {
    let k = mat.k();
    let m = mat.n_cols();
    let mut p = vec![1.0 / m as f64; m];
    let mut history = Vec::new();
    let max_steps = config.max_cycles.max(1) * k;
    let mut steps_performed = 0usize;
    let mut converged = false;
    while steps_performed < max_steps {
        let block = steps_performed % k;
        let delta = ips_step_float(mat, &mut p, d, block)?;
        steps_performed += 1;
        if config.record_history {
            history.push(HistoryEntry {
                step: steps_performed,
                max_delta: delta,
                kl_to_data: Some(kl_divergence(d, &p)),
            });
        }
        if delta < config.float_tolerance {
            converged = true;
            break;
        }
    }
    let steps_taken = if converged {
        steps_performed - 1
    } else {
        steps_performed
    };
    let residual = birch_residual_float(mat, &p, d);
    Ok(IpsResult {
        cycles_taken: Fraction::from(steps_taken as u64) / Fraction::from(k as u64),
        steps_taken,
        converged,
        birch_residual_exact: None,
        birch_residual_float: residual,
        one_cycle_exact: None,
        final_p: IpsVector::Float(p),
        history,
    })
}

/// Configuration of the step-count experiment.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub trials: usize,
    pub tolerance: f64,
    pub seed: u64,
    /// Hard per-trial bound on steps.
    pub max_steps: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            trials: 1000,
            tolerance: 1e-8,
            seed: 0,
            max_steps: 10_000_000,
        }
    }
}

/// One experiment trial.
#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub trial: usize,
    pub steps: usize,
    pub final_birch_residual: f64,
}

/// Aggregate of an experiment run.
#[derive(Clone, Debug)]
pub struct ExperimentStats {
    pub mean: f64,
    pub min: usize,
    pub max: usize,
    /// Power-of-two buckets (lo, hi exclusive, count), nonempty only.
    pub histogram: Vec<(usize, usize, usize)>,
    pub outcomes: Vec<TrialOutcome>,
}

/// Samples a point of the open simplex: i.i.d. standard exponentials,
/// normalized (a uniform Dirichlet draw).
pub fn sample_simplex<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    let mut e = vec![0.0f64; m];
    for x in e.iter_mut() {
        loop {
            let u: f64 = rng.gen();
            let v = -(1.0 - u).ln();
            if v > 0.0 {
                *x = v;
                break;
            }
        }
    }
    let total: f64 = e.iter().sum();
    e.iter().map(|x| x / total).collect()
}

/// Per-trial stream: a splitmix-style blend of the master seed and the
/// trial index, so different master seeds share no trial streams while
/// each (seed, trial) pair stays deterministic and order-independent.
fn trial_seed(seed: u64, trial: usize) -> u64 {
    let mut z = seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs float-mode IPS on `trials` random data vectors, counting the steps
/// needed before the step size drops under `tolerance`. Trials run in
/// parallel; the statistics are reproducible regardless of scheduling.
pub fn iteration_experiment(
    mat: &MultipartitionMatrix,
    config: &ExperimentConfig,
) -> ExperimentStats {
    let k = mat.k();
    let outcomes: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(config.seed, trial));
            let d = sample_simplex(&mut rng, mat.n_cols());
            let mut p = vec![1.0 / mat.n_cols() as f64; mat.n_cols()];
            let mut steps_performed = 0usize;
            let mut converged = false;
            while steps_performed < config.max_steps {
                let block = steps_performed % k;
                let delta = ips_step_float(mat, &mut p, &d, block)
                    .expect("positive data keeps marginals positive");
                steps_performed += 1;
                if delta < config.tolerance {
                    converged = true;
                    break;
                }
            }
            let steps = if converged {
                steps_performed - 1
            } else {
                steps_performed
            };
            TrialOutcome {
                trial,
                steps,
                final_birch_residual: birch_residual_float(mat, &p, &d),
            }
        })
        .collect();
    summarize(outcomes)
}

fn summarize(outcomes: Vec<TrialOutcome>) -> ExperimentStats {
    let n = outcomes.len().max(1);
    let mean = outcomes.iter().map(|o| o.steps as f64).sum::<f64>() / n as f64;
    let min = outcomes.iter().map(|o| o.steps).min().unwrap_or(0);
    let max = outcomes.iter().map(|o| o.steps).max().unwrap_or(0);
    let mut buckets: std::collections::BTreeMap<usize, usize> = Default::default();
    for o in &outcomes {
        let b = (o.steps.max(1) as f64).log2().floor() as usize;
        *buckets.entry(b).or_insert(0) += 1;
    }
    let histogram = buckets
        .into_iter()
        .map(|(b, count)| (1usize << b, 1usize << (b + 1), count))
        .collect();
    ExperimentStats {
        mean,
        min,
        max,
        histogram,
        outcomes,
    }
}
