//! Seeded sampling plans shared by every sampled checker.
//!
//! Each sample index owns an independent PRNG stream derived from
//! `(seed, index)`, so results do not depend on how indices are scheduled
//! across worker threads.

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;

pub const DEFAULT_MIN_SEPARATION: f64 = 1e-3;
pub const DEFAULT_BOX: (f64, f64) = (-10.0, 10.0);

const STREAM_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;
const MAX_STRUCTURED_CORNERS: usize = 8;

/// How the per-index work of a check is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Execution {
    Sequential,
    /// Rayon work-stealing when the `parallel` feature is enabled, sequential otherwise.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub seed: u64,
    pub count: usize,
    /// Per-coordinate `(low, high)` bounds.
    pub bounds: Vec<(f64, f64)>,
    pub min_separation: f64,
    #[serde(skip)]
    pub execution: Execution,
}

impl SamplePlan {
    /// A plan over the default box `[-10, 10]^dim`.
    pub fn new(seed: u64, count: usize, dim: usize) -> Self {
        SamplePlan {
            seed,
            count,
            bounds: vec![DEFAULT_BOX; dim],
            min_separation: DEFAULT_MIN_SEPARATION,
            execution: Execution::default(),
        }
    }

    pub fn with_box(mut self, low: f64, high: f64) -> Self {
        let dim = self.bounds.len();
        self.bounds = vec![(low, high); dim];
        self
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn with_min_separation(mut self, min_separation: f64) -> Self {
        self.min_separation = min_separation;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.count == 0 {
            return Err(Error::invalid("sample count must be at least 1"));
        }
        if self.bounds.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.bounds.len(),
            });
        }
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(format!(
                    "coordinate {i}: bounds ({lo}, {hi}) must be finite with low < high"
                )));
            }
        }
        if !(self.min_separation >= 0.0 && self.min_separation.is_finite()) {
            return Err(Error::invalid("min_separation must be a finite nonnegative real"));
        }
        Ok(())
    }

    /// The PRNG stream owned by sample `index`.
    pub fn stream(&self, index: usize) -> SplitMix64 {
        let offset = STREAM_STRIDE.wrapping_mul(index as u64 + 1);
        SplitMix64::seed_from_u64(self.seed.wrapping_add(offset))
    }

    /// A uniform point in the bounding box.
    pub fn uniform_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point::from_raw(
            self.bounds
                .iter()
                .map(|&(lo, hi)| rng.gen_range(lo..hi))
                .collect(),
        )
    }

    /// Deterministic points appended to every plan: box corners (at most
    /// eight), the points halfway between each corner and the centre, and
    /// the centre itself.
    pub fn structured_points(&self) -> Vec<Point> {
        let dim = self.dim();
        let center: Vec<f64> = self.bounds.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect();
        let n_corners = if dim >= 3 {
            MAX_STRUCTURED_CORNERS
        } else {
            1 << dim
        };
        let corners: Vec<Vec<f64>> = (0..n_corners)
            .map(|mask| {
                self.bounds
                    .iter()
                    .enumerate()
                    .map(|(j, &(lo, hi))| if j < 3 && mask >> j & 1 == 1 { hi } else { lo })
                    .collect()
            })
            .collect();
        let halves = corners.iter().map(|c| {
            c.iter()
                .zip(&center)
                .map(|(a, m)| 0.5 * (a + m))
                .collect::<Vec<_>>()
        });
        let mut out: Vec<Point> = corners.iter().cloned().map(Point::from_raw).collect();
        out.extend(halves.map(Point::from_raw));
        out.push(Point::from_raw(center));
        out
    }
}

/// Runs `f` for every index in `0..count` and returns the results in index order.
pub fn map_indices<T, F>(count: usize, execution: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..count).into_par_iter().map(f).collect()
        }
        _ => (0..count).map(f).collect(),
    }
}
