//! Sampling-based receding-horizon controller that maximizes the gap
//! between open-loop and closed-loop entropy rates over candidate action
//! sequences, with an iCEM-style elite-distribution update.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use thiserror::Error;

use crate::dynamics::{Model, Trajectory};
use crate::noise::NoiseGenerator;
use crate::par;
use crate::riccati::{cip_rates, CostWeights};

/// Score assigned to candidates whose rollout or entropy evaluation failed;
/// keeps the elite ranking total without special cases.
pub const DIVERGED_SCORE: f64 = -1e9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PlannerError {
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
    #[error("all candidates diverged at environment step {step}")]
    Stalled { step: u64 },
}

/// Hyperparameters of the elite-distribution optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct CemConfig {
    /// Planning horizon in steps (at least 2).
    pub horizon: usize,
    /// Candidate sequences per iteration.
    pub num_samples: usize,
    /// Elite set size (at most `num_samples`).
    pub num_elites: usize,
    /// Distribution refits per environment step.
    pub cem_iterations: usize,
    /// Initial (and tail-padding) sampling standard deviation, control units.
    pub init_std: f64,
    /// Floor on the sampling standard deviation.
    pub min_std: f64,
    /// Colored-noise exponent; 0 is white noise.
    pub noise_beta: f64,
    /// Fraction of the elite set re-injected into the next sample batch.
    pub elite_reuse_fraction: f64,
    /// Weight kept on the previous mean/std when refitting (0 = pure elite
    /// statistics).
    pub momentum: f64,
    pub seed: u64,
}

impl CemConfig {
    /// Defaults scaled to the model's actuation limits.
    pub fn defaults_for(model: &Model) -> Self {
        let init_std = model
            .control_limit()
            .map(|l| 0.5 * l.min())
            .unwrap_or(1.0);
        Self {
            horizon: 30,
            num_samples: 128,
            num_elites: 16,
            cem_iterations: 4,
            init_std,
            min_std: 0.05,
            noise_beta: 2.0,
            elite_reuse_fraction: 0.3,
            momentum: 0.1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), PlannerError> {
        if self.horizon < 2 {
            return Err(PlannerError::InvalidConfig("horizon must be at least 2".into()));
        }
        if self.num_samples == 0 {
            return Err(PlannerError::InvalidConfig("num_samples must be positive".into()));
        }
        if self.num_elites == 0 || self.num_elites > self.num_samples {
            return Err(PlannerError::InvalidConfig(
                "num_elites must satisfy 1 <= K <= num_samples".into(),
            ));
        }
        if self.cem_iterations == 0 {
            return Err(PlannerError::InvalidConfig("cem_iterations must be positive".into()));
        }
        if !(self.min_std > 0.0) {
            return Err(PlannerError::InvalidConfig("min_std must be positive".into()));
        }
        if self.init_std < self.min_std {
            return Err(PlannerError::InvalidConfig("init_std must be at least min_std".into()));
        }
        if !(0.0..=1.0).contains(&self.elite_reuse_fraction) {
            return Err(PlannerError::InvalidConfig(
                "elite_reuse_fraction must lie in [0, 1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.momentum) {
            return Err(PlannerError::InvalidConfig("momentum must lie in [0, 1]".into()));
        }
        if !(self.noise_beta >= 0.0) {
            return Err(PlannerError::InvalidConfig("noise_beta must be non-negative".into()));
        }
        Ok(())
    }
}

/// Action-sequence search distribution plus retained elites and RNG lineage.
/// Sequences are `horizon x control_dim` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct CemState {
    pub mean: DMatrix<f64>,
    pub std: DMatrix<f64>,
    pub elites: Vec<DMatrix<f64>>,
    pub seed: u64,
    pub mpc_step: u64,
    /// Refit counter inside the current environment step, part of the RNG
    /// lineage.
    pub round: u64,
}

impl CemState {
    pub fn init(model: &Model, config: &CemConfig) -> Self {
        Self {
            mean: DMatrix::zeros(config.horizon, model.control_dim()),
            std: DMatrix::from_element(config.horizon, model.control_dim(), config.init_std),
            elites: Vec::new(),
            seed: config.seed,
            mpc_step: 0,
            round: 0,
        }
    }
}

/// Entropy-gap score of one candidate action sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateScore {
    pub sequence_index: usize,
    /// Nats per step; `DIVERGED_SCORE` when diverged.
    pub cip: f64,
    pub h_ol: f64,
    pub h_cl: f64,
    pub diverged: bool,
}

impl CandidateScore {
    fn diverged(sequence_index: usize) -> Self {
        Self {
            sequence_index,
            cip: DIVERGED_SCORE,
            h_ol: 0.0,
            h_cl: 0.0,
            diverged: true,
        }
    }
}

/// Elite-averaged diagnostics of one planning step.
#[derive(Debug, Clone, Copy)]
pub struct PlanDiagnostics {
    pub best: CandidateScore,
    /// Averages over the non-diverged members of the final elite set.
    pub elite_cip: f64,
    pub elite_h_ol: f64,
    pub elite_h_cl: f64,
    pub diverged_candidates: usize,
}

/// Scores a candidate action sequence from `x0`: rollout, linearization,
/// optimal-gain Riccati pass, and the finite-horizon entropy gap with
/// identity cost weights. Failures never surface as errors; they come back
/// as diverged scores so the planner can keep ranking.
pub fn score_sequence(model: &Model, x0: &DVector<f64>, controls: &[DVector<f64>]) -> CandidateScore {
    let costs = CostWeights::identity(model.state_dim(), model.control_dim());
    score_with_costs(model, x0, controls, &costs, 0)
}

fn score_with_costs(
    model: &Model,
    x0: &DVector<f64>,
    controls: &[DVector<f64>],
    costs: &CostWeights,
    sequence_index: usize,
) -> CandidateScore {
    let Ok(traj) = model.rollout(x0, controls) else {
        return CandidateScore::diverged(sequence_index);
    };
    let Ok(traj) = model.linearize_trajectory(&traj) else {
        return CandidateScore::diverged(sequence_index);
    };
    let lin = traj.linearization.as_ref().expect("linearization populated");
    match cip_rates(lin, costs) {
        Ok((est, _)) if est.cip.is_finite() => CandidateScore {
            sequence_index,
            cip: est.cip,
            h_ol: est.h_ol,
            h_cl: est.h_cl,
            diverged: false,
        },
        _ => CandidateScore::diverged(sequence_index),
    }
}

fn columns_of(seq: &DMatrix<f64>) -> Vec<DVector<f64>> {
    (0..seq.nrows())
        .map(|t| seq.row(t).transpose())
        .collect()
}

/// Scores a batch of candidate sequences (rows are steps). Runs candidates
/// in parallel when the `parallel` feature is enabled; the result order and
/// values are identical either way.
pub fn score_batch(model: &Model, x0: &DVector<f64>, candidates: &[DMatrix<f64>]) -> Vec<CandidateScore> {
    let costs = CostWeights::identity(model.state_dim(), model.control_dim());
    par::map_indexed(candidates, |i, seq| {
        score_with_costs(model, x0, &columns_of(seq), &costs, i)
    })
}

/// Sequential reference implementation of [`score_batch`], kept for direct
/// comparison in tests and benchmarks.
pub fn score_batch_serial(
    model: &Model,
    x0: &DVector<f64>,
    candidates: &[DMatrix<f64>],
) -> Vec<CandidateScore> {
    let costs = CostWeights::identity(model.state_dim(), model.control_dim());
    par::map_indexed_serial(candidates, |i, seq| {
        score_with_costs(model, x0, &columns_of(seq), &costs, i)
    })
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Deterministic RNG lineage: one stream per (seed, environment step,
/// refit round, candidate index), so parallel and serial scoring draw
/// identical noise.
fn candidate_seed(seed: u64, mpc_step: u64, round: u64, index: u64) -> u64 {
    let mut s = splitmix64(seed ^ 0x5851f42d4c957f2d);
    s = splitmix64(s ^ mpc_step);
    s = splitmix64(s ^ round);
    splitmix64(s ^ index)
}

struct IterationOutcome {
    state: CemState,
    best: CandidateScore,
    elite_scores: Vec<CandidateScore>,
    diverged_candidates: usize,
}

/// One sample/score/refit round, generic over the scoring function so tests
/// can drive the optimizer with a deterministic surrogate objective.
fn cem_iteration_with<F>(
    model: &Model,
    state: &CemState,
    config: &CemConfig,
    score: F,
) -> Result<IterationOutcome, PlannerError>
where
    F: Fn(usize, &DMatrix<f64>) -> CandidateScore + Sync + Send,
{
    config.validate()?;
    let control_dim = model.control_dim();
    let limit = model.control_limit();
    let noise = NoiseGenerator::new(config.noise_beta, config.horizon);

    let reused = ((config.num_elites as f64 * config.elite_reuse_fraction).floor() as usize)
        .min(state.elites.len());
    let candidates: Vec<DMatrix<f64>> = (0..config.num_samples)
        .map(|i| {
            if i < reused {
                return state.elites[i].clone();
            }
            let mut rng = ChaCha8Rng::seed_from_u64(candidate_seed(
                state.seed,
                state.mpc_step,
                state.round,
                i as u64,
            ));
            let mut seq = DMatrix::zeros(config.horizon, control_dim);
            for d in 0..control_dim {
                let channel = noise.sample(&mut rng);
                for t in 0..config.horizon {
                    let mut v = state.mean[(t, d)] + state.std[(t, d)] * channel[t];
                    if let Some(l) = &limit {
                        v = v.clamp(-l[d], l[d]);
                    }
                    seq[(t, d)] = v;
                }
            }
            seq
        })
        .collect();

    let scores = par::map_indexed(&candidates, |i, seq| score(i, seq));
    let diverged_candidates = scores.iter().filter(|s| s.diverged).count();
    if diverged_candidates == config.num_samples {
        return Err(PlannerError::Stalled {
            step: state.mpc_step,
        });
    }

    // Rank by score, ties broken toward the lower sequence index.
    let mut order: Vec<usize> = (0..config.num_samples).collect();
    order.sort_by(|&i, &j| scores[j].cip.total_cmp(&scores[i].cip).then(i.cmp(&j)));
    let elite_idx = &order[..config.num_elites];
    let elites: Vec<DMatrix<f64>> = elite_idx.iter().map(|&i| candidates[i].clone()).collect();
    let elite_scores: Vec<CandidateScore> = elite_idx.iter().map(|&i| scores[i]).collect();

    let k = elites.len() as f64;
    let mut elite_mean = DMatrix::zeros(config.horizon, control_dim);
    for e in &elites {
        elite_mean += e;
    }
    elite_mean /= k;
    let mut elite_var = DMatrix::zeros(config.horizon, control_dim);
    for e in &elites {
        let d = e - &elite_mean;
        elite_var += d.component_mul(&d);
    }
    elite_var /= k;

    let alpha = config.momentum;
    let mean = &state.mean * alpha + elite_mean * (1.0 - alpha);
    let std = (&state.std * alpha + elite_var.map(f64::sqrt) * (1.0 - alpha))
        .map(|s| s.max(config.min_std));

    Ok(IterationOutcome {
        state: CemState {
            mean,
            std,
            elites,
            seed: state.seed,
            mpc_step: state.mpc_step,
            round: state.round + 1,
        },
        best: scores[order[0]],
        elite_scores,
        diverged_candidates,
    })
}

/// Samples, scores, and refits once. Returns the updated state and the best
/// candidate's score.
pub fn cem_iteration(
    model: &Model,
    x0: &DVector<f64>,
    state: &CemState,
    config: &CemConfig,
) -> Result<(CemState, CandidateScore), PlannerError> {
    let costs = CostWeights::identity(model.state_dim(), model.control_dim());
    let out = cem_iteration_with(model, state, config, |i, seq| {
        score_with_costs(model, x0, &columns_of(seq), &costs, i)
    })?;
    Ok((out.state, out.best))
}

/// Full planning step: `cem_iterations` refits, then the first action of the
/// fitted mean sequence. The returned state is shifted one step forward
/// (receding horizon) with zero/init-std padding at the tail.
pub fn plan(
    model: &Model,
    x0: &DVector<f64>,
    state: &CemState,
    config: &CemConfig,
) -> Result<(DVector<f64>, PlanDiagnostics, CemState), PlannerError> {
    config.validate()?;
    let costs = CostWeights::identity(model.state_dim(), model.control_dim());
    let mut current = state.clone();
    current.round = 0;
    let mut last: Option<IterationOutcome> = None;
    for _ in 0..config.cem_iterations {
        let out = cem_iteration_with(model, &current, config, |i, seq| {
            score_with_costs(model, x0, &columns_of(seq), &costs, i)
        })?;
        current = out.state.clone();
        last = Some(out);
    }
    let last = last.expect("at least one iteration");

    let action = model.clamp_control(&current.mean.row(0).transpose());

    let live: Vec<&CandidateScore> = last.elite_scores.iter().filter(|s| !s.diverged).collect();
    let denom = live.len().max(1) as f64;
    let diagnostics = PlanDiagnostics {
        best: last.best,
        elite_cip: live.iter().map(|s| s.cip).sum::<f64>() / denom,
        elite_h_ol: live.iter().map(|s| s.h_ol).sum::<f64>() / denom,
        elite_h_cl: live.iter().map(|s| s.h_cl).sum::<f64>() / denom,
        diverged_candidates: last.diverged_candidates,
    };

    // Receding-horizon shift of the distribution and the retained elites.
    let t_len = config.horizon;
    let shift_matrix = |m: &DMatrix<f64>, pad: f64| -> DMatrix<f64> {
        let mut out = DMatrix::from_element(t_len, m.ncols(), pad);
        for t in 0..t_len - 1 {
            for d in 0..m.ncols() {
                out[(t, d)] = m[(t + 1, d)];
            }
        }
        out
    };
    let next = CemState {
        mean: shift_matrix(&current.mean, 0.0),
        std: shift_matrix(&current.std, config.init_std),
        elites: current.elites.iter().map(|e| shift_matrix(e, 0.0)).collect(),
        seed: current.seed,
        mpc_step: current.mpc_step + 1,
        round: 0,
    };

    Ok((action, diagnostics, next))
}

/// Per-step log row of a closed-loop run.
#[derive(Debug, Clone, Copy)]
pub struct StepDiagnostics {
    pub elite_cip: f64,
    pub elite_h_ol: f64,
    pub elite_h_cl: f64,
    pub best_cip: f64,
    pub diverged_candidates: usize,
}

/// Outcome of a closed-loop run; on failure the trajectory collected so far
/// is returned with the error annotated.
#[derive(Debug)]
pub struct MpcRun {
    pub trajectory: Trajectory,
    pub steps: Vec<StepDiagnostics>,
    pub failure: Option<PlannerError>,
}

/// Alternates planning and environment stepping for `num_steps` steps.
pub fn mpc_loop(model: &Model, x0: &DVector<f64>, config: &CemConfig, num_steps: usize) -> MpcRun {
    let mut state = CemState::init(model, config);
    let mut states = vec![x0.clone()];
    let mut controls = Vec::with_capacity(num_steps);
    let mut steps = Vec::with_capacity(num_steps);
    let mut x = x0.clone();

    for _ in 0..num_steps {
        match plan(model, &x, &state, config) {
            Ok((action, diag, next_state)) => {
                match model.step(&x, &action) {
                    Ok(next_x) if next_x.iter().all(|v| v.is_finite()) => {
                        steps.push(StepDiagnostics {
                            elite_cip: diag.elite_cip,
                            elite_h_ol: diag.elite_h_ol,
                            elite_h_cl: diag.elite_h_cl,
                            best_cip: diag.best.cip,
                            diverged_candidates: diag.diverged_candidates,
                        });
                        controls.push(action);
                        states.push(next_x.clone());
                        x = next_x;
                        state = next_state;
                    }
                    _ => {
                        return MpcRun {
                            trajectory: Trajectory {
                                states,
                                controls,
                                linearization: None,
                            },
                            steps,
                            failure: Some(PlannerError::Stalled {
                                step: state.mpc_step,
                            }),
                        }
                    }
                }
            }
            Err(e) => {
                return MpcRun {
                    trajectory: Trajectory {
                        states,
                        controls,
                        linearization: None,
                    },
                    steps,
                    failure: Some(e),
                }
            }
        }
    }

    MpcRun {
        trajectory: Trajectory {
            states,
            controls,
            linearization: None,
        },
        steps,
        failure: None,
    }
}

#[cfg(test)]
mod tests;
