//! Synthetic learning tasks split across users, a federator root set and a
//! held-out test set.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::rng::{stream, Purpose, FEDERATOR};
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    SyntheticLogreg,
    SyntheticLinreg,
    #[serde(alias = "two_cluster_classification")]
    TwoCluster,
}

impl TaskKind {
    pub fn is_classification(self) -> bool {
        !matches!(self, TaskKind::SyntheticLinreg)
    }
}

fn default_features() -> usize {
    10
}
fn default_per_user() -> usize {
    50
}
fn default_root() -> usize {
    100
}
fn default_test() -> usize {
    1000
}
fn default_noise() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub kind: TaskKind,
    #[serde(default = "default_features")]
    pub features: usize,
    #[serde(default = "default_per_user")]
    pub samples_per_user: usize,
    /// Size of the federator's root dataset.
    #[serde(default = "default_root")]
    pub root_samples: usize,
    #[serde(default = "default_test")]
    pub test_samples: usize,
    /// Label noise (flip probability) or regression noise level.
    #[serde(default = "default_noise")]
    pub noise: f64,
    /// Group-assignment bias `a`: a sample with label `l` goes to user group
    /// `l` with probability `a`, otherwise to a uniformly chosen other group.
    /// `None` deals samples uniformly.
    #[serde(default)]
    pub noniid: Option<f64>,
}

impl TaskConfig {
    pub fn new(kind: TaskKind) -> Self {
        Self {
            kind,
            features: default_features(),
            samples_per_user: default_per_user(),
            root_samples: default_root(),
            test_samples: default_test(),
            noise: default_noise(),
            noniid: None,
        }
    }

    /// Model dimension: one weight per feature plus a bias.
    pub fn model_dim(&self) -> usize {
        self.features + 1
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Dataset<T> {
    pub x: Vec<Vec<T>>,
    pub y: Vec<T>,
}

impl<T: Real> Dataset<T> {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    fn push(&mut self, x: Vec<T>, y: T) {
        self.x.push(x);
        self.y.push(y);
    }

    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Dataset<T>>) -> Self {
        let mut out = Dataset::default();
        for p in parts {
            out.x.extend(p.x.iter().cloned());
            out.y.extend(p.y.iter().copied());
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct Task<T> {
    pub config: TaskConfig,
    pub users: Vec<Dataset<T>>,
    pub root: Dataset<T>,
    pub test: Dataset<T>,
}

struct Sampler {
    kind: TaskKind,
    w: Vec<f64>,
    bias: f64,
    noise: f64,
}

impl Sampler {
    fn new<R: Rng>(cfg: &TaskConfig, rng: &mut R) -> Self {
        let w: Vec<f64> = (0..cfg.features)
            .map(|_| StandardNormal.sample(rng))
            .collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        let scale = match cfg.kind {
            TaskKind::SyntheticLogreg => 4.0 / norm,
            _ => 1.0 / norm,
        };
        Self {
            kind: cfg.kind,
            w: w.into_iter().map(|x| x * scale).collect(),
            bias: 0.25,
            noise: cfg.noise,
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> (Vec<f64>, f64) {
        let mut x: Vec<f64> = self.w.iter().map(|_| StandardNormal.sample(rng)).collect();
        match self.kind {
            TaskKind::SyntheticLogreg => {
                let z: f64 = x.iter().zip(&self.w).map(|(a, b)| a * b).sum::<f64>() + self.bias;
                let mut y = if rng.random::<f64>() < 1.0 / (1.0 + (-z).exp()) {
                    1.0
                } else {
                    0.0
                };
                if rng.random::<f64>() < self.noise {
                    y = 1.0 - y;
                }
                (x, y)
            }
            TaskKind::SyntheticLinreg => {
                let e: f64 = StandardNormal.sample(rng);
                let y = x.iter().zip(&self.w).map(|(a, b)| a * b).sum::<f64>()
                    + self.bias
                    + self.noise * e;
                (x, y)
            }
            TaskKind::TwoCluster => {
                let label = rng.random::<bool>();
                let sign = if label { 1.5 } else { -1.5 };
                x.iter_mut().zip(&self.w).for_each(|(a, &c)| *a += sign * c);
                let mut y = if label { 1.0 } else { 0.0 };
                if rng.random::<f64>() < self.noise {
                    y = 1.0 - y;
                }
                (x, y)
            }
        }
    }
}

fn convert<T: Real>(x: Vec<f64>) -> Vec<T> {
    x.into_iter().map(T::of).collect()
}

impl<T: Real> Task<T> {
    /// Draws every split from one stream keyed by `seed`.
    pub fn generate(cfg: &TaskConfig, n: usize, seed: u64) -> Self {
        let mut rng = stream(seed, 0, FEDERATOR, Purpose::Data);
        let sampler = Sampler::new(cfg, &mut rng);
        let draw = |count: usize, rng: &mut rand_chacha::ChaCha20Rng| {
            let mut d = Dataset::default();
            for _ in 0..count {
                let (x, y) = sampler.draw(rng);
                d.push(convert(x), T::of(y));
            }
            d
        };
        let pool = draw(n * cfg.samples_per_user, &mut rng);
        let users = split(&pool, n, cfg, &mut rng);
        let root = draw(cfg.root_samples, &mut rng);
        let test = draw(cfg.test_samples, &mut rng);
        Self {
            config: cfg.clone(),
            users,
            root,
            test,
        }
    }

    pub fn dim(&self) -> usize {
        self.config.model_dim()
    }

    /// Union of the user datasets.
    pub fn union(&self) -> Dataset<T> {
        Dataset::concat(&self.users)
    }
}

fn split<T: Real, R: Rng>(
    pool: &Dataset<T>,
    n: usize,
    cfg: &TaskConfig,
    rng: &mut R,
) -> Vec<Dataset<T>> {
    let mut users = vec![Dataset::default(); n];
    let Some(a) = cfg
        .noniid
        .filter(|_| cfg.kind.is_classification() && n >= 2)
    else {
        for (i, (x, &y)) in pool.x.iter().zip(&pool.y).enumerate() {
            users[i % n].push(x.clone(), y);
        }
        return users;
    };
    let groups = 2usize;
    let members = |g: usize| (0..n).filter(move |u| u % groups == g);
    let mut next = [0usize; 2];
    for (x, &y) in pool.x.iter().zip(&pool.y) {
        let label = (y.as_f64() > 0.5) as usize;
        let g = if rng.random::<f64>() < a {
            label
        } else {
            1 - label
        };
        let list: Vec<usize> = members(g).collect();
        let u = list[next[g] % list.len()];
        next[g] += 1;
        users[u].push(x.clone(), y);
    }
    users
}
