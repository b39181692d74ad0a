//! Collocation points.
//!
//! Interior points are uniform on the space-time rectangle, initial points
//! lie on `t = t0` and boundary points on the two ends `x = x_min`,
//! `x = x_max` (split evenly, the left end taking any odd one out). For a
//! stochastic problem every point also carries `z ~ U([-1, 1]^s)` after
//! `(t, x)`.

use std::io::Write;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::output::num;
use crate::rng::{self, Stream};
use crate::systems::ProblemSpec;

// Maps a uniform draw and its index to a `(t, x)` pair.
type PointMap = dyn FnMut(&mut rand_chacha::ChaCha20Rng, usize) -> (f64, f64);

/// Sizes of the three point sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointCounts {
    pub interior: usize,
    pub initial: usize,
    pub boundary: usize,
}

impl Default for PointCounts {
    fn default() -> Self {
        Self {
            interior: 2540,
            initial: 320,
            boundary: 160,
        }
    }
}

/// Point coordinates, one row per point: `(t, x, z_1, ..., z_s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSets {
    pub interior: Array2<f64>,
    pub initial: Array2<f64>,
    pub boundary: Array2<f64>,
}

// Stream ids for resampled epochs are spaced so they never collide with the
// fixed streams.
const EPOCH_STRIDE: u64 = 16;

impl PointSets {
    /// The fixed point sets of an experiment.
    pub fn sample(problem: &ProblemSpec, counts: PointCounts, seed: u64) -> Self {
        Self::sample_epoch(problem, counts, seed, 0)
    }

    /// Fresh point sets for `epoch`; epoch 0 gives [`PointSets::sample`].
    pub fn sample_epoch(problem: &ProblemSpec, counts: PointCounts, seed: u64, epoch: u64) -> Self {
        let d = problem.input_dim();
        let id = |s: Stream| s as u64 + EPOCH_STRIDE * epoch;
        let (t0, t1, x0, x1) = (problem.t0, problem.t_end, problem.x_min, problem.x_max);

        let fill = |n: usize, stream: Stream, mut tx: Box<PointMap>| {
            let mut r = rng::stream_raw(seed, id(stream));
            let mut a = Array2::zeros((n, d));
            for i in 0..n {
                let (t, x) = tx(&mut r, i);
                a[[i, 0]] = t;
                a[[i, 1]] = x;
                for k in 2..d {
                    a[[i, k]] = r.random_range(-1.0..=1.0);
                }
            }
            a
        };

        let interior = fill(
            counts.interior,
            Stream::Interior,
            Box::new(move |r, _| (r.random_range(t0..t1), r.random_range(x0..x1))),
        );
        let initial = fill(
            counts.initial,
            Stream::Initial,
            Box::new(move |r, _| (t0, r.random_range(x0..=x1))),
        );
        let left = counts.boundary.div_ceil(2);
        let boundary = fill(
            counts.boundary,
            Stream::Boundary,
            Box::new(move |r, i| (r.random_range(t0..=t1), if i < left { x0 } else { x1 })),
        );
        Self {
            interior,
            initial,
            boundary,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.interior.ncols()
    }

    /// CSV with columns `set, t, x, z1, ..., zs`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["set".to_string(), "t".into(), "x".into()];
        header.extend((1..self.input_dim().saturating_sub(1)).map(|k| format!("z{k}")));
        w.write_record(&header)?;
        for (name, set) in [
            ("interior", &self.interior),
            ("initial", &self.initial),
            ("boundary", &self.boundary),
        ] {
            for row in set.rows() {
                let mut rec = vec![name.to_string()];
                rec.extend(row.iter().map(|&v| num(v)));
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
