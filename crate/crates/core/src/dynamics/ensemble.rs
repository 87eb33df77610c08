//! Monte-Carlo average of per-realization solutions.

use rayon::prelude::*;

use super::{solve_per_realization, AveragedState, BlochState, KernelTables, Method, Trajectory};
use crate::error::{invalid, Result};
use crate::noise::sample_trajectory_stream;
use crate::scalar::Real;

const CHUNK: usize = 64;

/// Sample means of `P_i` and `α P_i` with their standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult<T> {
    pub mean: Trajectory<T, AveragedState<T>>,
    pub stderr: Trajectory<T, AveragedState<T>>,
    pub trajectories: usize,
}

struct Moments<T> {
    sum: Vec<[T; 6]>,
    sq: Vec<[T; 6]>,
}

impl<T: Real> Moments<T> {
    fn zeros(len: usize) -> Self {
        Self {
            sum: vec![[T::zero(); 6]; len],
            sq: vec![[T::zero(); 6]; len],
        }
    }

    fn merge(mut self, other: &Self) -> Self {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            for i in 0..6 {
                a[i] = a[i] + b[i];
            }
        }
        for (a, b) in self.sq.iter_mut().zip(&other.sq) {
            for i in 0..6 {
                a[i] = a[i] + b[i];
            }
        }
        self
    }
}

/// Averages `trajectories` realizations; member `k` uses substream `k` of
/// `seed`, and partial sums are combined in a fixed order, so the result does
/// not depend on the thread count.
pub fn ensemble_average<T: Real>(
    tables: &KernelTables<T>,
    method: Method,
    initial: BlochState<T>,
    trajectories: usize,
    seed: u64,
) -> Result<EnsembleResult<T>> {
    if trajectories < 2 {
        return Err(invalid("trajectories", format!("need at least 2, got {trajectories}")));
    }
    let h = tables.step();
    let len = tables.steps() + 1;
    let horizon = h * T::count(tables.steps());
    let chunks: Vec<usize> = (0..trajectories.div_ceil(CHUNK)).collect();
    let partial: Vec<Moments<T>> = chunks
        .par_iter()
        .map(|&c| -> Result<Moments<T>> {
            let mut m = Moments::zeros(len);
            for k in c * CHUNK..((c + 1) * CHUNK).min(trajectories) {
                let noise = sample_trajectory_stream(tables.noise(), horizon, seed, k as u64)?;
                let sol = solve_per_realization(tables, &noise, method, initial)?;
                for (n, p) in sol.states.iter().enumerate() {
                    let t = (h * T::count(n)).min(noise.horizon());
                    let alpha = noise.value_at(t)?;
                    let row = [p.px, p.py, p.pz, alpha * p.px, alpha * p.py, alpha * p.pz];
                    for i in 0..6 {
                        m.sum[n][i] = m.sum[n][i] + row[i];
                        m.sq[n][i] = m.sq[n][i] + row[i] * row[i];
                    }
                }
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;
    let total = partial.iter().fold(Moments::zeros(len), |acc, m| acc.merge(m));

    let count = T::count(trajectories);
    let mut mean = Vec::with_capacity(len);
    let mut stderr = Vec::with_capacity(len);
    for (s, q) in total.sum.iter().zip(&total.sq) {
        let mu: [T; 6] = std::array::from_fn(|i| s[i] / count);
        let se: [T; 6] = std::array::from_fn(|i| {
            let var = ((q[i] - count * mu[i] * mu[i]) / (count - T::one())).max(T::zero());
            (var / count).sqrt()
        });
        mean.push(AveragedState::from_array(mu));
        stderr.push(AveragedState::from_array(se));
    }
    Ok(EnsembleResult {
        mean: Trajectory { step: h, states: mean },
        stderr: Trajectory { step: h, states: stderr },
        trajectories,
    })
}
