//! Linear models with logistic or squared loss, local SGD and evaluation.

use rand::seq::index::sample;
use rand::Rng;

use crate::quantize::RealUpdate;
use crate::Real;

use super::task::{Dataset, TaskKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Loss {
    Logistic,
    Squared,
}

impl From<TaskKind> for Loss {
    fn from(k: TaskKind) -> Self {
        if k.is_classification() {
            Loss::Logistic
        } else {
            Loss::Squared
        }
    }
}

/// `w . [x, 1]`.
pub fn score<T: Real>(w: &[T], x: &[T]) -> T {
    let (bias, weights) = w.split_last().expect("nonempty model");
    weights.iter().zip(x).map(|(&a, &b)| a * b).sum::<T>() + *bias
}

fn softplus<T: Real>(z: T) -> T {
    if z > T::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid<T: Real>(z: T) -> T {
    T::one() / (T::one() + (-z).exp())
}

impl Loss {
    pub fn sample_loss<T: Real>(self, z: T, y: T) -> T {
        match self {
            Loss::Logistic => softplus(z) - y * z,
            Loss::Squared => T::of(0.5) * (z - y) * (z - y),
        }
    }

    fn residual<T: Real>(self, z: T, y: T) -> T {
        match self {
            Loss::Logistic => sigmoid(z) - y,
            Loss::Squared => z - y,
        }
    }

    pub fn mean_loss<T: Real>(self, w: &[T], data: &Dataset<T>) -> T {
        if data.is_empty() {
            return T::zero();
        }
        let total: T = data
            .x
            .iter()
            .zip(&data.y)
            .map(|(x, &y)| self.sample_loss(score(w, x), y))
            .sum();
        total / T::of(data.len() as f64)
    }

    /// Mean gradient over the samples at `idx`.
    pub fn gradient_on<T: Real>(self, w: &[T], data: &Dataset<T>, idx: &[usize]) -> Vec<T> {
        let mut g = vec![T::zero(); w.len()];
        if idx.is_empty() {
            return g;
        }
        let last = w.len() - 1;
        for &i in idx {
            let r = self.residual(score(w, &data.x[i]), data.y[i]);
            for (gk, &xk) in g.iter_mut().zip(&data.x[i]) {
                *gk = *gk + r * xk;
            }
            g[last] = g[last] + r;
        }
        let inv = T::one() / T::of(idx.len() as f64);
        g.iter_mut().for_each(|v| *v = *v * inv);
        g
    }

    pub fn gradient<T: Real>(self, w: &[T], data: &Dataset<T>) -> Vec<T> {
        let idx: Vec<usize> = (0..data.len()).collect();
        self.gradient_on(w, data, &idx)
    }
}

/// Accuracy for classification, coefficient of determination for regression.
pub fn accuracy<T: Real>(loss: Loss, w: &[T], data: &Dataset<T>) -> T {
    if data.is_empty() {
        return T::zero();
    }
    let count = T::of(data.len() as f64);
    match loss {
        Loss::Logistic => {
            let hits = data
                .x
                .iter()
                .zip(&data.y)
                .filter(|(x, &y)| (score(w, x) > T::zero()) == (y > T::of(0.5)))
                .count();
            T::of(hits as f64) / count
        }
        Loss::Squared => {
            let mean = data.y.iter().copied().sum::<T>() / count;
            let tot: T = data.y.iter().map(|&y| (y - mean) * (y - mean)).sum();
            let res: T = data
                .x
                .iter()
                .zip(&data.y)
                .map(|(x, &y)| (score(w, x) - y).powi(2))
                .sum();
            if tot == T::zero() {
                T::zero()
            } else {
                T::one() - res / tot
            }
        }
    }
}

/// `steps` minibatch SGD steps from `w`; returns `w_final - w`.
pub fn local_train<T: Real, R: Rng + ?Sized>(
    loss: Loss,
    w: &[T],
    data: &Dataset<T>,
    lr: T,
    steps: usize,
    batch: usize,
    rng: &mut R,
) -> RealUpdate<T> {
    let mut cur = w.to_vec();
    for _ in 0..steps {
        let idx: Vec<usize> = if batch == 0 || batch >= data.len() {
            (0..data.len()).collect()
        } else {
            sample(rng, data.len(), batch).into_vec()
        };
        let g = loss.gradient_on(&cur, data, &idx);
        cur.iter_mut()
            .zip(&g)
            .for_each(|(c, &gk)| *c = *c - lr * gk);
    }
    let diff: Vec<T> = cur.iter().zip(w).map(|(&a, &b)| a - b).collect();
    RealUpdate::new(diff).unwrap_or_else(|_| RealUpdate::zeros(w.len()))
}
