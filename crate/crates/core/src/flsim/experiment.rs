use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{AdversaryError, Roles};
use crate::byitfl::{Byitfl, ByitflConfig};
use crate::config::{ExperimentConfig, ExperimentConfigError};
use crate::discriminator::{plaintext_aggregate_real, DiscriminatorError, DiscriminatorPoly};
use crate::lobyitfl::{Lobyitfl, LobyitflConfig, MaterialError, SessionMaterial};
use crate::params::ProtocolParams;
use crate::protocol::{IterationContext, IterationOutcome, ProtocolError};
use crate::quantize::{normalize, RealUpdate, DEFAULT_NORM_FLOOR};
use crate::rng::{Purpose, FEDERATOR};
use crate::transcript::Transcript;
use crate::Real;

use super::descent::{descent_slack, descent_tolerance};
use super::metrics::{IterationMetrics, RunSummary};
use super::model::{accuracy, local_train, Loss};
use super::task::{Dataset, Task};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregator {
    #[serde(rename = "fedavg")]
    FedAvg,
    /// Trust-weighted aggregation in the clear with the same discriminator.
    FltrustHPlain,
    Byitfl,
    Lobyitfl,
}

impl Aggregator {
    pub const ALL: [Aggregator; 4] = [
        Aggregator::FedAvg,
        Aggregator::FltrustHPlain,
        Aggregator::Byitfl,
        Aggregator::Lobyitfl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Aggregator::FedAvg => "fedavg",
            Aggregator::FltrustHPlain => "fltrust_h_plain",
            Aggregator::Byitfl => "byitfl",
            Aggregator::Lobyitfl => "lobyitfl",
        }
    }

    pub fn is_private(self) -> bool {
        matches!(self, Aggregator::Byitfl | Aggregator::Lobyitfl)
    }
}

impl std::str::FromStr for Aggregator {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Aggregator::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown aggregator {s:?}"))
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ExperimentConfigError),
    #[error("iteration {iteration}: {source}")]
    Protocol {
        iteration: usize,
        #[source]
        source: ProtocolError,
    },
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Discriminator(#[from] DiscriminatorError),
}

enum Engine<T> {
    FedAvg,
    Plain(DiscriminatorPoly<T>),
    Byitfl(Byitfl<T>),
    Lobyitfl(Lobyitfl<T>),
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub metrics: Vec<IterationMetrics>,
    pub summary: RunSummary,
    pub model: Vec<f64>,
}

struct Aggregate<T> {
    update: Vec<T>,
    included: usize,
    excluded: usize,
    flagged: usize,
    degenerate: bool,
    messages: u64,
    elements: u64,
}

/// One training run: the task, the current model and the aggregator.
pub struct Simulation<T> {
    cfg: ExperimentConfig,
    params: ProtocolParams,
    seed: u64,
    task: Task<T>,
    union: Dataset<T>,
    loss: Loss,
    engine: Engine<T>,
    session: Option<SessionMaterial>,
    w: Vec<T>,
    iteration: usize,
}

fn scaled<T: Real>(u: RealUpdate<T>, c: T) -> RealUpdate<T> {
    let v: Vec<T> = u.values().iter().map(|&x| x * c).collect();
    RealUpdate::new(v).unwrap_or_else(|_| RealUpdate::zeros(u.len()))
}

impl<T: Real> Simulation<T> {
    pub fn new(cfg: &ExperimentConfig, seed: u64) -> Result<Self, SimError> {
        cfg.validate()?;
        let params = cfg.params();
        let engine = match cfg.aggregator {
            Aggregator::FedAvg => Engine::FedAvg,
            Aggregator::FltrustHPlain => Engine::Plain(DiscriminatorPoly::new(
                params.coeffs.iter().map(|&c| T::of(c)).collect(),
                params.q,
                params.coeff_scale,
                params.modulus,
            )?),
            Aggregator::Byitfl => Engine::Byitfl(
                Byitfl::new(
                    ByitflConfig::new(params.clone()).map_err(ExperimentConfigError::from)?,
                )
                .map_err(|source| SimError::Protocol {
                    iteration: 0,
                    source,
                })?,
            ),
            Aggregator::Lobyitfl => Engine::Lobyitfl(
                Lobyitfl::new(
                    LobyitflConfig::new(params.clone()).map_err(ExperimentConfigError::from)?,
                )
                .map_err(|source| SimError::Protocol {
                    iteration: 0,
                    source,
                })?,
            ),
        };
        let task = Task::generate(&cfg.task, params.n, seed);
        let union = task.union();
        Ok(Self {
            cfg: cfg.clone(),
            params,
            seed,
            loss: Loss::from(cfg.task.kind),
            w: vec![T::zero(); task.dim()],
            union,
            task,
            engine,
            session: None,
            iteration: 0,
        })
    }

    /// Consumes pre-provisioned material instead of sampling it per
    /// iteration.
    pub fn with_session(mut self, session: SessionMaterial) -> Self {
        self.session = Some(session);
        self
    }

    pub fn model(&self) -> &[T] {
        &self.w
    }

    /// Replaces the current model, e.g. to warm-start or to compare
    /// aggregators from a common state.
    pub fn set_model(&mut self, w: &[T]) {
        assert_eq!(w.len(), self.w.len(), "model dimension");
        self.w = w.to_vec();
    }

    pub fn task(&self) -> &Task<T> {
        &self.task
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    /// Local training for users and federator; updates are pseudo-gradients
    /// `(w - w_final) / eta_local`.
    fn local_updates(&self, ctx: IterationContext) -> (Vec<RealUpdate<T>>, RealUpdate<T>) {
        let t = &self.cfg.train;
        let lr = T::of(t.local_rate());
        let inv = if lr == T::zero() {
            T::zero()
        } else {
            -T::one() / lr
        };
        let train = |data: &Dataset<T>, party: u64| {
            let u = local_train(
                self.loss,
                &self.w,
                data,
                lr,
                t.local_steps,
                t.batch,
                &mut ctx.rng(party, Purpose::Train),
            );
            scaled(u, inv)
        };
        let users = self
            .task
            .users
            .iter()
            .enumerate()
            .map(|(i, d)| train(d, i as u64))
            .collect();
        (users, train(&self.task.root, FEDERATOR))
    }

    fn protocol_result(&self, out: IterationOutcome<T>, tr: &Transcript) -> Aggregate<T> {
        let total = tr.total();
        Aggregate {
            update: if self.cfg.train.use_nu {
                out.nu
            } else {
                out.update
            },
            included: out.included.len(),
            excluded: out.excluded.len(),
            flagged: out.flagged.len(),
            degenerate: out.degenerate,
            messages: total.messages,
            elements: total.elements,
        }
    }

    fn aggregate(
        &mut self,
        ctx: IterationContext,
        updates: &[RealUpdate<T>],
        u0: &RealUpdate<T>,
        roles: &Roles,
    ) -> Result<Aggregate<T>, SimError> {
        let d = self.w.len();
        let present: Vec<usize> = (0..self.params.n).filter(|&i| roles.present(i)).collect();
        let wrap = |source| SimError::Protocol {
            iteration: ctx.iteration,
            source,
        };
        match &self.engine {
            Engine::FedAvg => {
                let mut mean = vec![T::zero(); d];
                for &i in &present {
                    mean.iter_mut()
                        .zip(updates[i].values())
                        .for_each(|(m, &x)| *m = *m + x);
                }
                let k = T::of(present.len().max(1) as f64);
                mean.iter_mut().for_each(|m| *m = *m / k);
                Ok(Aggregate {
                    update: mean,
                    included: present.len(),
                    excluded: self.params.n - present.len(),
                    flagged: 0,
                    degenerate: present.is_empty(),
                    messages: 0,
                    elements: 0,
                })
            }
            Engine::Plain(poly) => {
                let floor = T::of(DEFAULT_NORM_FLOOR);
                let users: Vec<_> = present
                    .iter()
                    .filter_map(|&i| normalize(&updates[i], floor).ok())
                    .collect();
                let zero = Aggregate {
                    update: vec![T::zero(); d],
                    included: users.len(),
                    excluded: self.params.n - users.len(),
                    flagged: 0,
                    degenerate: true,
                    messages: 0,
                    elements: 0,
                };
                let Ok(root) = normalize(u0, floor) else {
                    return Ok(zero);
                };
                match plaintext_aggregate_real(poly, &root, &users) {
                    Ok(r) => Ok(Aggregate {
                        update: if self.cfg.train.use_nu {
                            r.nu
                        } else {
                            r.final_update
                        },
                        degenerate: r.degenerate,
                        ..zero
                    }),
                    Err(DiscriminatorError::Degenerate) => Ok(zero),
                    Err(e) => Err(e.into()),
                }
            }
            Engine::Byitfl(eng) => {
                let mut tr = Transcript::counting(ctx.iteration);
                let out = eng
                    .run_iteration(ctx, updates, u0, roles, &mut tr)
                    .map_err(wrap)?;
                Ok(self.protocol_result(out, &tr))
            }
            Engine::Lobyitfl(eng) => {
                let mut tr = Transcript::counting(ctx.iteration);
                let mut fresh;
                let material = match self.session.as_mut() {
                    Some(s) => s.next_iteration()?,
                    None => {
                        fresh = eng.generate_material(ctx);
                        &mut fresh
                    }
                };
                let out = eng
                    .run_iteration(ctx, updates, u0, roles, material, &mut tr)
                    .map_err(wrap)?;
                Ok(self.protocol_result(out, &tr))
            }
        }
    }

    /// Runs one global iteration and reports test metrics after the update.
    pub fn step(&mut self) -> Result<IterationMetrics, SimError> {
        let ctx = IterationContext::new(self.seed, self.iteration);
        let (mut updates, u0) = self.local_updates(ctx);
        self.cfg
            .attack
            .corrupt_updates(&mut updates, self.seed, ctx.iteration)?;
        let roles = self
            .cfg
            .attack
            .roles(self.params.n, self.seed, ctx.iteration);
        let agg = self.aggregate(ctx, &updates, &u0, &roles)?;

        let grad = self.loss.gradient(&self.w, &self.union);
        let slack = descent_slack(&agg.update, u0.values(), &grad);
        let floor = -descent_tolerance(u0.values(), self.params.q);
        let eta = T::of(self.cfg.train.lr);
        self.w
            .iter_mut()
            .zip(&agg.update)
            .for_each(|(w, &u)| *w = *w - eta * u);
        self.iteration += 1;
        Ok(IterationMetrics {
            iteration: ctx.iteration,
            accuracy: accuracy(self.loss, &self.w, &self.task.test).as_f64(),
            loss: self.loss.mean_loss(&self.w, &self.task.test).as_f64(),
            slack: slack.as_f64(),
            slack_floor: floor.as_f64(),
            included: agg.included,
            excluded: agg.excluded,
            flagged: agg.flagged,
            degenerate: agg.degenerate,
            messages: agg.messages,
            elements: agg.elements,
        })
    }

    pub fn run(mut self) -> Result<RunOutput, SimError> {
        let metrics = (0..self.cfg.train.iterations)
            .map(|_| self.step())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RunOutput {
            summary: RunSummary::from_metrics(self.cfg.aggregator.name(), self.seed, &metrics),
            metrics,
            model: self.w.iter().map(|x| x.as_f64()).collect(),
        })
    }
}

/// A full run for one seed.
pub fn run_experiment<T: Real>(cfg: &ExperimentConfig, seed: u64) -> Result<RunOutput, SimError> {
    Simulation::<T>::new(cfg, seed)?.run()
}

/// Runs every configured seed in parallel on the current rayon pool.
pub fn run_seeds<T: Real>(cfg: &ExperimentConfig) -> Vec<Result<RunOutput, SimError>> {
    cfg.seeds
        .par_iter()
        .map(|&s| run_experiment::<T>(cfg, s))
        .collect()
}

/// Test accuracy of full-batch gradient descent on the pooled user data
/// with the run's rate and iteration count.
pub fn centralized_accuracy<T: Real>(cfg: &ExperimentConfig, seed: u64) -> f64 {
    let task: Task<T> = Task::generate(&cfg.task, cfg.protocol.n, seed);
    let loss = Loss::from(cfg.task.kind);
    let data = task.union();
    let mut w = vec![T::zero(); task.dim()];
    let eta = T::of(cfg.train.lr);
    for _ in 0..cfg.train.iterations * cfg.train.local_steps.max(1) {
        let g = loss.gradient(&w, &data);
        w.iter_mut().zip(&g).for_each(|(a, &b)| *a = *a - eta * b);
    }
    accuracy(loss, &w, &task.test).as_f64()
}
