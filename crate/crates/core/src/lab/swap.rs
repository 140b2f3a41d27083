//! `det(I - AB) = det(I - BA)` for `A: C^r -> C^n`, `B: C^n -> C^r`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{relative_residual, LabError};
use crate::numerics::{det, OperatorMatrix};
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapConfig {
    pub trials: usize,
    pub seed: u64,
    /// Ranks are drawn from `1..=max_rank`.
    pub max_rank: usize,
    /// Large dimensions are drawn from `max_rank..=max_size`.
    pub max_size: usize,
}

impl Default for SwapConfig {
    fn default() -> Self {
        Self {
            trials: 200,
            seed: 0,
            max_rank: 5,
            max_size: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapStatistics {
    pub trials: usize,
    /// Largest `|det(I - AB) - det(I - BA)| / max(|det(I - AB)|, 1)`.
    pub max_deviation: f64,
    pub mean_deviation: f64,
}

/// `(det(I_n - AB), det(I_r - BA))`.
pub fn det_swap_pair(
    a: &OperatorMatrix,
    b: &OperatorMatrix,
) -> Result<(Complex64, Complex64), LabError> {
    let ab = a.matmul(b)?;
    let ba = b.matmul(a)?;
    let big = det(&OperatorMatrix::identity(ab.rows()).sub(&ab)?)?.value;
    let small = det(&OperatorMatrix::identity(ba.rows()).sub(&ba)?)?.value;
    Ok((big, small))
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> OperatorMatrix {
    OperatorMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
    })
}

/// Runs `trials` random factor pairs; each trial has its own stream derived
/// from `seed`, so results do not depend on scheduling.
pub fn det_swap_property(config: &SwapConfig) -> Result<SwapStatistics, LabError> {
    if config.trials == 0 || config.max_rank == 0 || config.max_size < config.max_rank {
        return Err(LabError::InvalidArgument(format!("{config:?}")));
    }
    let deviations = parallel::map_range(config.trials, |t| -> Result<f64, LabError> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(t as u64);
        let r = rng.gen_range(1..=config.max_rank);
        let n = rng.gen_range(config.max_rank..=config.max_size);
        // entries of size n^{-1/2} keep BA of order one
        let s = 1.0 / (n as f64).sqrt();
        let a = random_matrix(&mut rng, n, r, s);
        let b = random_matrix(&mut rng, r, n, s);
        let (big, small) = det_swap_pair(&a, &b)?;
        Ok(relative_residual(big, small))
    });
    let deviations = deviations.into_iter().collect::<Result<Vec<_>, _>>()?;
    let max_deviation = deviations.iter().fold(0.0f64, |m, &d| m.max(d));
    let mean_deviation = deviations.iter().sum::<f64>() / deviations.len() as f64;
    Ok(SwapStatistics {
        trials: config.trials,
        max_deviation,
        mean_deviation,
    })
}
