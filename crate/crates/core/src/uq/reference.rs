use ndarray::Array2;

use super::{mc_statistics, sample_uniform, Moments};
use crate::fvref::{solve, FvError, Grid1D};
use crate::rng::{self, Stream};
use crate::systems::{ProblemSpec, SystemError};

/// Monte Carlo statistics of the finite-volume solution of a stochastic
/// problem, sampled at `x` for each of `times`. Row `k * x.len() + j` of
/// the moment fields belongs to `(times[k], x[j])`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceMoments {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub moments: Moments,
}

#[derive(Debug, thiserror::Error)]
pub enum ReferenceError {
    #[error(transparent)]
    Solver(#[from] FvError),
    #[error(transparent)]
    Problem(#[from] SystemError),
}

/// Runs the solver once per draw `z ~ U([-1, 1]^s)` (statistics stream of
/// `seed`) and accumulates mean and unbiased variance of the primitive
/// variables.
pub fn mc_reference(
    problem: &ProblemSpec,
    n_cells: usize,
    cfl: f64,
    times: &[f64],
    x: &[f64],
    samples: usize,
    seed: u64,
) -> Result<ReferenceMoments, ReferenceError> {
    let dims = problem.stochastic_dim();
    let grid = Grid1D::for_problem(problem, n_cells)?;
    let z = sample_uniform(&mut rng::stream(seed, Stream::Statistics), samples, dims);
    let m = problem.kind.num_laws();
    let moments = mc_statistics(z.view(), |zk| -> Result<Array2<f64>, ReferenceError> {
        let realized = problem.realize(zk.as_slice().unwrap())?;
        let sol = solve(&realized, grid, cfl, times)?;
        let mut field = Array2::zeros((times.len() * x.len(), m));
        for (k, snap) in sol.snapshots.iter().enumerate() {
            for (j, &xj) in x.iter().enumerate() {
                let prim = snap.cells.interpolate_primitive(xj);
                for c in 0..m {
                    field[[k * x.len() + j, c]] = prim[c];
                }
            }
        }
        Ok(field)
    })?;
    Ok(ReferenceMoments {
        times: times.to_vec(),
        x: x.to_vec(),
        moments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::ProblemId;

    #[test]
    fn far_field_has_no_variance() {
        let p = ProblemId::EulerSodUq.spec();
        let r = mc_reference(&p, 80, 0.5, &[0.04], &[-0.7, 0.0, 0.7], 6, 1).unwrap();
        assert_eq!(r.moments.mean.dim(), (3, 3));
        assert_eq!(r.moments.variance[[0, 0]], 0.0);
        assert_eq!(r.moments.variance[[2, 2]], 0.0);
        assert!(r.moments.variance[[1, 0]] > 0.0);
        assert!((r.moments.mean[[0, 0]] - 1.0).abs() < 1e-14);
    }
}
