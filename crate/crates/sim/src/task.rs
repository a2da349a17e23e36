//! Synthetic learning tasks and per-worker data shards.

use aegis_core::SeedRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    LinearRegression,
    LogisticRegression,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub dim: usize,
    /// Samples per worker shard.
    pub samples: usize,
    /// 0.0 keeps shards identically distributed; larger values shift each
    /// worker's feature distribution apart.
    #[serde(default)]
    pub skew: f64,
}

#[derive(Debug, Clone)]
pub struct Shard {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Task {
    pub spec: TaskSpec,
    pub truth: Vec<f64>,
    pub shards: Vec<Shard>,
}

impl Task {
    /// Build `n` seeded shards from a common ground-truth model.
    pub fn generate(spec: TaskSpec, n: usize, rng: &mut SeedRng) -> Task {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let truth: Vec<f64> = (0..spec.dim).map(|_| normal.sample(rng)).collect();
        let noise = Normal::new(0.0, 0.05).unwrap();
        let shards = (0..n)
            .map(|w| {
                let offset = spec.skew * (w as f64 - (n as f64 - 1.0) / 2.0);
                let mut shard_rng = rng.fork();
                let xs: Vec<Vec<f64>> = (0..spec.samples)
                    .map(|_| {
                        (0..spec.dim)
                            .map(|_| normal.sample(&mut shard_rng) + offset)
                            .collect()
                    })
                    .collect();
                let ys = xs
                    .iter()
                    .map(|x| {
                        let z = dot(&truth, x) + noise.sample(&mut shard_rng);
                        match spec.kind {
                            TaskKind::LinearRegression => z,
                            TaskKind::LogisticRegression => {
                                if sigmoid(z) > 0.5 { 1.0 } else { 0.0 }
                            }
                        }
                    })
                    .collect();
                Shard { xs, ys }
            })
            .collect();
        Task { spec, truth, shards }
    }

    /// Mean gradient of the loss over one worker's shard, coordinates
    /// clamped to `bound` so the fixed-point encoding cannot overflow.
    pub fn gradient(&self, worker: usize, w: &[f64], bound: f64) -> Vec<f64> {
        let shard = &self.shards[worker];
        let mut g = vec![0.0; self.spec.dim];
        for (x, &y) in shard.xs.iter().zip(&shard.ys) {
            let pred = match self.spec.kind {
                TaskKind::LinearRegression => dot(w, x),
                TaskKind::LogisticRegression => sigmoid(dot(w, x)),
            };
            let err = pred - y;
            for (gi, xi) in g.iter_mut().zip(x) {
                *gi += err * xi;
            }
        }
        let m = shard.xs.len().max(1) as f64;
        for gi in g.iter_mut() {
            *gi = (*gi / m).clamp(-bound, bound);
        }
        g
    }

    /// Mean loss over all shards.
    pub fn loss(&self, w: &[f64]) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for shard in &self.shards {
            for (x, &y) in shard.xs.iter().zip(&shard.ys) {
                let z = dot(w, x);
                total += match self.spec.kind {
                    TaskKind::LinearRegression => 0.5 * (z - y) * (z - y),
                    TaskKind::LogisticRegression => {
                        let p = sigmoid(z).clamp(1e-9, 1.0 - 1e-9);
                        -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
                    }
                };
                count += 1;
            }
        }
        total / count.max(1) as f64
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}
