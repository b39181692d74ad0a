//! Loss assembly and the Adam training loop.
//!
//! With `N_r` interior, `N_ic` initial and `N_bc` boundary points the loss is
//!
//! ```text
//! L = sum_i w_r[i] mean_r(R_i^2)             residual of law i
//!   + sum_j w_f[j] mean_r((v_j - F_j(u))^2)  relaxed rows only
//!   + w_ic mean_ic(|u - u_0|^2) + w_bc mean_bc(|u - u_0|^2)
//! ```
//!
//! where `R_i = d_t q_i + d_x G_i` (see [`crate::systems::residual_terms`]).
//! The plain physics-informed loss is the same with no relaxed rows. The
//! boundary target is the initial state at the boundary point, and the flux
//! network is not fitted to any initial data.

mod adam;
mod catalog;
mod loss;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use catalog::{default_mode, network_configs};
pub use loss::{loss_and_gradient, total_loss, LossContext};

use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::AutodiffError;
use crate::mlp::{MlpConfig, MlpError, ParamSet};
use crate::output::num;
use crate::rng::Stream;
use crate::sampling::{PointCounts, PointSets};
use crate::systems::{relaxed_rows, Mode, ProblemSpec, SystemError, SystemKind};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid setup: {0}")]
    Setup(String),
    #[error("loss diverged at epoch {epoch}: total = {total}")]
    Diverged {
        epoch: usize,
        total: f64,
        /// Records up to and including the failing epoch.
        history: LossHistory,
    },
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Network(#[from] MlpError),
    #[error(transparent)]
    Tape(#[from] AutodiffError),
    #[error("{0}")]
    Observer(String),
}

/// Loss weights. `residual` and `flux` are indexed by conservation law;
/// flux weights of rows that are not relaxed are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossWeights {
    pub residual: Vec<f64>,
    #[serde(default)]
    pub flux: Vec<f64>,
    pub ic: f64,
    pub bc: f64,
}

impl LossWeights {
    pub fn validate(&self, kind: SystemKind, mode: Mode) -> Result<(), TrainError> {
        let m = kind.num_laws();
        if self.residual.len() != m {
            return Err(TrainError::Setup(format!(
                "{} residual weights for {m} conservation laws",
                self.residual.len()
            )));
        }
        let relaxed = relaxed_rows(kind, mode)?;
        if !relaxed.is_empty() && self.flux.len() != m {
            return Err(TrainError::Setup(format!(
                "{} flux weights for {m} conservation laws",
                self.flux.len()
            )));
        }
        let all = self.residual.iter().chain(&self.flux).chain([&self.ic, &self.bc]);
        if let Some(w) = all.into_iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(TrainError::Setup(format!("loss weight {w} must be finite and non-negative")));
        }
        Ok(())
    }

    /// Weight of the `j`-th relaxed row.
    pub(crate) fn flux_row(&self, row: usize) -> f64 {
        self.flux.get(row).copied().unwrap_or(0.0)
    }
}

/// Unweighted mean-square loss terms and the weighted total.
#[derive(Clone, Debug, PartialEq)]
pub struct LossBreakdown {
    /// One per conservation law.
    pub residual: Vec<f64>,
    /// One per relaxed row, in flux-network output order.
    pub flux: Vec<f64>,
    pub ic: f64,
    pub bc: f64,
    pub total: f64,
}

impl LossBreakdown {
    /// `sum w * term`, recomputed from the parts.
    pub fn weighted_sum(&self, weights: &LossWeights, relaxed: &[usize]) -> f64 {
        let mut s = 0.0;
        for (w, r) in weights.residual.iter().zip(&self.residual) {
            s += w * r;
        }
        for (&row, f) in relaxed.iter().zip(&self.flux) {
            s += weights.flux_row(row) * f;
        }
        s + weights.ic * self.ic + weights.bc * self.bc
    }
}

/// Point sets with the initial-state targets of the initial and boundary
/// points.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingData {
    pub points: PointSets,
    pub ic_target: Array2<f64>,
    pub bc_target: Array2<f64>,
}

impl TrainingData {
    pub fn new(problem: &ProblemSpec, points: PointSets) -> Result<Self, SystemError> {
        let m = problem.kind.num_laws();
        let targets = |set: &Array2<f64>| -> Result<Array2<f64>, SystemError> {
            let mut out = Array2::zeros((set.nrows(), m));
            for (i, row) in set.rows().into_iter().enumerate() {
                let row = row.to_vec();
                let state = problem.initial_state_z(row[1], &row[2..])?;
                for (c, s) in state.into_iter().enumerate() {
                    out[[i, c]] = s;
                }
            }
            Ok(out)
        };
        Ok(Self {
            ic_target: targets(&points.initial)?,
            bc_target: targets(&points.boundary)?,
            points,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub decay_rate: f64,
    pub decay_steps: usize,
    pub adam: AdamConfig,
    /// Set from the experiment seed, not read from config files.
    #[serde(skip)]
    pub seed: u64,
    /// Draw fresh collocation points every epoch.
    pub resample: bool,
    /// Abort once the total loss exceeds this value.
    pub divergence_threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300_000,
            learning_rate: 1e-3,
            decay_rate: 0.99,
            decay_steps: 1000,
            adam: AdamConfig::default(),
            seed: crate::rng::DEFAULT_SEED,
            resample: false,
            divergence_threshold: 1e8,
        }
    }
}

impl TrainConfig {
    /// Default epochs: 300000 for Burgers, 600000 for the systems.
    pub fn for_kind(kind: SystemKind) -> Self {
        Self {
            epochs: if matches!(kind, SystemKind::Burgers) { 300_000 } else { 600_000 },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.learning_rate > 0.0) || !(self.decay_rate > 0.0) || self.decay_steps == 0 {
            return Err(TrainError::Setup(
                "learning rate, decay rate and decay steps must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Staircase schedule `lr * decay^floor(epoch / steps)`.
///
/// ```
/// use relaxnn::trainer::{lr_at, TrainConfig};
/// let cfg = TrainConfig::default();
/// assert_eq!(lr_at(999, &cfg), 1e-3);
/// assert!((lr_at(5000, &cfg) - 9.5099e-4).abs() < 1e-8);
/// ```
pub fn lr_at(epoch: usize, cfg: &TrainConfig) -> f64 {
    cfg.learning_rate * cfg.decay_rate.powi((epoch / cfg.decay_steps) as i32)
}

/// One line of the loss history.
#[derive(Clone, Debug, PartialEq)]
pub struct LossRecord {
    pub epoch: usize,
    pub lr: f64,
    pub loss: LossBreakdown,
}

/// Per-epoch losses with the names of their terms.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct LossHistory {
    pub residual_names: Vec<String>,
    pub flux_names: Vec<String>,
    pub records: Vec<LossRecord>,
}

impl LossHistory {
    pub fn new(kind: SystemKind, mode: Mode) -> Result<Self, SystemError> {
        let names = kind.conserved_names();
        Ok(Self {
            residual_names: names.iter().map(|n| format!("residual_{n}")).collect(),
            flux_names: relaxed_rows(kind, mode)?
                .iter()
                .map(|&r| format!("flux_{}", names[r]))
                .collect(),
            records: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&LossRecord> {
        self.records.last()
    }

    /// One JSON object per record, keys in a fixed order.
    pub fn record_json(&self, r: &LossRecord) -> String {
        let mut s = format!("{{\"epoch\":{},\"lr\":{},\"total\":{}", r.epoch, num(r.lr), num(r.loss.total));
        for (name, v) in self.residual_names.iter().zip(&r.loss.residual) {
            s += &format!(",\"{name}\":{}", num(*v));
        }
        for (name, v) in self.flux_names.iter().zip(&r.loss.flux) {
            s += &format!(",\"{name}\":{}", num(*v));
        }
        s += &format!(",\"ic\":{},\"bc\":{}}}", num(r.loss.ic), num(r.loss.bc));
        s
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for r in &self.records {
            writeln!(out, "{}", self.record_json(r))?;
        }
        out.flush()
    }
}

/// Everything that defines one training run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainSetup {
    pub problem: ProblemSpec,
    pub mode: Mode,
    pub u_config: MlpConfig,
    /// Present exactly in relaxed modes.
    pub v_config: Option<MlpConfig>,
    pub weights: LossWeights,
    pub train: TrainConfig,
    pub counts: PointCounts,
}

impl TrainSetup {
    pub fn validate(&self) -> Result<(), TrainError> {
        let kind = self.problem.kind;
        self.problem.validate()?;
        self.weights.validate(kind, self.mode)?;
        self.train.validate()?;
        let relaxed = relaxed_rows(kind, self.mode)?;
        let d_in = self.problem.input_dim();
        if self.u_config.input_dim != d_in || self.u_config.output_dim != kind.num_laws() {
            return Err(TrainError::Setup(format!(
                "solution network {:?} must map {d_in} inputs to {} outputs",
                self.u_config.dims(),
                kind.num_laws()
            )));
        }
        match (&self.v_config, relaxed.len()) {
            (None, 0) => Ok(()),
            (Some(v), r) if r > 0 && v.input_dim == d_in && v.output_dim == r => Ok(()),
            (v, r) => Err(TrainError::Setup(format!(
                "flux network {:?} does not fit {r} relaxed rows with {d_in} inputs",
                v.as_ref().map(|c| c.dims())
            ))),
        }
    }

    /// Initial parameters from the experiment seed.
    pub fn initial_params(&self) -> (ParamSet, Option<ParamSet>) {
        let seed = self.train.seed;
        let u = ParamSet::init_he_uniform(self.u_config.clone(), seed, Stream::SolutionNet);
        let v = self
            .v_config
            .clone()
            .map(|c| ParamSet::init_he_uniform(c, seed, Stream::FluxNet));
        (u, v)
    }
}

/// State handed to the per-epoch observer, after the update of `epoch`.
pub struct EpochReport<'a> {
    pub epoch: usize,
    pub record: &'a LossRecord,
    pub history: &'a LossHistory,
    pub u: &'a ParamSet,
    pub v: Option<&'a ParamSet>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub u: ParamSet,
    pub v: Option<ParamSet>,
    pub history: LossHistory,
}

/// Full-batch Adam, one step per epoch. The loss recorded for an epoch is
/// the one whose gradient is applied in that epoch.
pub fn train(setup: &TrainSetup) -> Result<TrainOutcome, TrainError> {
    train_with(setup, |_| Ok(()))
}

/// [`train`] with a callback after every epoch (progress, checkpoints).
pub fn train_with(
    setup: &TrainSetup,
    mut observer: impl FnMut(&EpochReport<'_>) -> Result<(), TrainError>,
) -> Result<TrainOutcome, TrainError> {
    setup.validate()?;
    let cfg = &setup.train;
    let problem = &setup.problem;
    let (mut u, mut v) = setup.initial_params();
    let mut history = LossHistory::new(problem.kind, setup.mode)?;
    let mut data = TrainingData::new(problem, PointSets::sample(problem, setup.counts, cfg.seed))?;

    let mut adam_u = AdamState::new(u.len());
    let mut adam_v = v.as_ref().map(|v| AdamState::new(v.len()));
    let mut grad_u = vec![0.0; u.len()];
    let mut grad_v = vec![0.0; v.as_ref().map_or(0, ParamSet::len)];

    for epoch in 0..cfg.epochs {
        if cfg.resample && epoch > 0 {
            let points = PointSets::sample_epoch(problem, setup.counts, cfg.seed, epoch as u64);
            data = TrainingData::new(problem, points)?;
        }
        let ctx = LossContext {
            problem,
            mode: setup.mode,
            weights: &setup.weights,
            data: &data,
        };
        let loss = loss_and_gradient(&ctx, &u, v.as_ref(), &mut grad_u, &mut grad_v)?;
        let total = loss.total;
        let lr = lr_at(epoch, cfg);
        history.records.push(LossRecord { epoch, lr, loss });
        if !total.is_finite() || total > cfg.divergence_threshold {
            return Err(TrainError::Diverged { epoch, total, history });
        }

        adam_step(u.as_mut_slice(), &grad_u, &mut adam_u, lr, &cfg.adam);
        if let (Some(v), Some(state)) = (v.as_mut(), adam_v.as_mut()) {
            adam_step(v.as_mut_slice(), &grad_v, state, lr, &cfg.adam);
        }
        observer(&EpochReport {
            epoch,
            record: history.records.last().unwrap(),
            history: &history,
            u: &u,
            v: v.as_ref(),
        })?;
    }
    Ok(TrainOutcome { u, v, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{InitialCondition, ProblemId, RelaxType};

    fn toy(epochs: usize) -> TrainSetup {
        let c = 0.5;
        let mut problem = ProblemId::BurgersRiemann.spec();
        problem.initial = InitialCondition::Riemann {
            left: vec![c],
            right: vec![c],
            interface: 0.0,
        };
        TrainSetup {
            problem,
            mode: Mode::Relax(RelaxType::Type1),
            u_config: MlpConfig::new(2, vec![8], 1).unwrap(),
            v_config: Some(MlpConfig::new(2, vec![8], 1).unwrap()),
            weights: LossWeights::catalog(ProblemId::BurgersRiemann),
            train: TrainConfig {
                epochs,
                ..TrainConfig::default()
            },
            counts: PointCounts {
                interior: 200,
                initial: 40,
                boundary: 20,
            },
        }
    }

    #[test]
    fn zero_epochs() {
        let setup = toy(0);
        let out = train(&setup).unwrap();
        let (u, v) = setup.initial_params();
        assert_eq!(out.u, u);
        assert_eq!(out.v, v);
        assert!(out.history.is_empty());
    }

    #[test]
    fn constant_state_is_learned() {
        let mut setup = toy(500);
        setup.u_config = MlpConfig::new(2, vec![2], 1).unwrap();
        setup.v_config = Some(setup.u_config.clone());
        setup.train.learning_rate = 3e-2;
        let out = train(&setup).unwrap();
        let last = out.history.last().unwrap().loss.total;
        assert!(last < 1e-6, "{last}");
    }

    #[test]
    fn deterministic_and_consistent_history() {
        let setup = toy(100);
        let a = train(&setup).unwrap();
        let b = train(&setup).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.history.len(), 100);
        for r in &a.history.records {
            let again = r.loss.weighted_sum(&setup.weights, &[0]);
            assert!((again - r.loss.total).abs() <= 1e-12 * r.loss.total.abs());
        }
        let mut buf = Vec::new();
        a.history.write_jsonl(&mut buf).unwrap();
        let first = String::from_utf8(buf).unwrap().lines().next().unwrap().to_string();
        let obj: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&first).unwrap();
        assert_eq!(obj.len(), 7);
        assert!(first.starts_with("{\"epoch\":0,\"lr\":1.0000000000000000e-3,\"total\":"));
        assert!(first.contains("\"residual_u\":") && first.contains("\"flux_u\":"));
    }

    #[test]
    fn divergence_aborts_with_history() {
        let mut setup = toy(10);
        setup.train.divergence_threshold = 1e-30;
        match train(&setup) {
            Err(TrainError::Diverged { epoch, history, .. }) => {
                assert_eq!(epoch, 0);
                assert_eq!(history.len(), 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn observer_sees_every_epoch() {
        let mut seen = Vec::new();
        train_with(&toy(5), |r| {
            seen.push(r.epoch);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, [0, 1, 2, 3, 4]);
    }

    #[test]
    fn invalid_setups() {
        let mut s = toy(1);
        s.v_config = None;
        assert!(matches!(s.validate(), Err(TrainError::Setup(_))));
        let mut s = toy(1);
        s.weights.ic = -1.0;
        assert!(s.validate().is_err());
        let mut s = toy(1);
        s.train.learning_rate = 0.0;
        assert!(s.validate().is_err());
    }
}
