use ndarray::{s, Array2, ArrayView1, ArrayView2};
use rand::Rng;

use super::TensorNodes;
use crate::mlp::batch::BatchForward;
use crate::mlp::{MlpError, ParamSet};
use crate::rng::{self, Stream};

// rows per batched network evaluation
const BATCH_ROWS: usize = 8192;

/// Pointwise mean and variance of a field, `points x components`.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub mean: Array2<f64>,
    pub variance: Array2<f64>,
    /// Number of samples or quadrature nodes.
    pub samples: usize,
}

/// `n` draws from `U([-1, 1]^dim)`, one per row.
pub fn sample_uniform<R: Rng>(rng: &mut R, n: usize, dim: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, dim), || rng.random_range(-1.0..=1.0))
}

// Welford's update; the unbiased variance is m2 / (n - 1).
struct Welford {
    n: usize,
    mean: Array2<f64>,
    m2: Array2<f64>,
}

impl Welford {
    fn new(shape: (usize, usize)) -> Self {
        Self {
            n: 0,
            mean: Array2::zeros(shape),
            m2: Array2::zeros(shape),
        }
    }

    fn push_at(&mut self, n: usize, p: usize, row: ArrayView1<'_, f64>) {
        for (c, &f) in row.iter().enumerate() {
            let mean = &mut self.mean[[p, c]];
            let delta = f - *mean;
            *mean += delta / n as f64;
            self.m2[[p, c]] += delta * (f - *mean);
        }
    }

    fn finish(self) -> Moments {
        let denom = self.n.saturating_sub(1).max(1) as f64;
        Moments {
            mean: self.mean,
            variance: self.m2 / denom,
            samples: self.n,
        }
    }
}

// Weighted second moment about a shift `f0`, so fields that do not depend
// on z get exactly zero variance.
struct Weighted {
    n: usize,
    shift: Option<Array2<f64>>,
    first: Array2<f64>,
    second: Array2<f64>,
}

impl Weighted {
    fn new(shape: (usize, usize)) -> Self {
        Self {
            n: 0,
            shift: None,
            first: Array2::zeros(shape),
            second: Array2::zeros(shape),
        }
    }

    fn push_at(&mut self, p: usize, w: f64, row: ArrayView1<'_, f64>) {
        let shift = self.shift.as_ref().unwrap();
        for (c, &f) in row.iter().enumerate() {
            let d = f - shift[[p, c]];
            self.first[[p, c]] += w * d;
            self.second[[p, c]] += w * d * d;
        }
    }

    fn finish(self) -> Moments {
        let shift = self.shift.unwrap_or_else(|| Array2::zeros(self.first.raw_dim()));
        let variance = (&self.second - &self.first.mapv(|m| m * m)).mapv(|v| v.max(0.0));
        Moments {
            mean: &shift + &self.first,
            variance,
            samples: self.n,
        }
    }
}

/// Sample mean and unbiased variance of `f(z)` over the rows of `z`.
/// `f` returns a `points x components` field; all calls must agree in shape.
pub fn mc_statistics<E>(
    z: ArrayView2<'_, f64>,
    mut f: impl FnMut(ArrayView1<'_, f64>) -> Result<Array2<f64>, E>,
) -> Result<Moments, E> {
    let mut acc: Option<Welford> = None;
    for (k, zk) in z.rows().into_iter().enumerate() {
        let field = f(zk)?;
        let acc = acc.get_or_insert_with(|| Welford::new(field.dim()));
        assert_eq!(acc.mean.dim(), field.dim(), "field shape changed between samples");
        acc.n = k + 1;
        for (p, row) in field.rows().into_iter().enumerate() {
            acc.push_at(k + 1, p, row);
        }
    }
    Ok(acc.map(Welford::finish).unwrap_or(Moments {
        mean: Array2::zeros((0, 0)),
        variance: Array2::zeros((0, 0)),
        samples: 0,
    }))
}

/// Mean `sum w f` and variance `sum w f^2 - mean^2` of `f(z)` over a tensor
/// rule (weights already normalised to a probability).
pub fn quad_statistics<E>(
    nodes: TensorNodes<'_>,
    mut f: impl FnMut(ArrayView1<'_, f64>) -> Result<Array2<f64>, E>,
) -> Result<Moments, E> {
    let mut z = Array2::zeros((1, nodes.dims()));
    let mut acc: Option<Weighted> = None;
    for k in 0..nodes.len() {
        let w = nodes.point(k, z.row_mut(0).as_slice_mut().unwrap());
        let field = f(z.row(0))?;
        let acc = acc.get_or_insert_with(|| Weighted::new(field.dim()));
        if acc.shift.is_none() {
            acc.shift = Some(field.clone());
        }
        acc.n = k + 1;
        for (p, row) in field.rows().into_iter().enumerate() {
            acc.push_at(p, w, row);
        }
    }
    Ok(acc.map(Weighted::finish).unwrap_or(Moments {
        mean: Array2::zeros((0, 0)),
        variance: Array2::zeros((0, 0)),
        samples: 0,
    }))
}

fn check_inputs(params: &ParamSet, points: ArrayView2<'_, f64>, dims: usize) -> Result<(), MlpError> {
    let expected = params.config().input_dim;
    if points.ncols() != 2 || expected != 2 + dims {
        return Err(MlpError::InputDim {
            expected,
            got: points.ncols() + dims,
        });
    }
    Ok(())
}

// Evaluates the network at every (point, z_k) pair, walking samples in order
// for each point, and hands (sample index, point index, output row) to `sink`.
fn sweep(
    params: &ParamSet,
    points: ArrayView2<'_, f64>,
    z: ArrayView2<'_, f64>,
    mut sink: impl FnMut(usize, usize, ArrayView1<'_, f64>),
) -> Result<(), MlpError> {
    let (g, n, dims) = (points.nrows(), z.nrows(), z.ncols());
    let zc = (BATCH_ROWS / g.max(1)).clamp(1, n.max(1));
    let gc = (BATCH_ROWS / zc).clamp(1, g.max(1));
    for z0 in (0..n).step_by(zc) {
        let z1 = (z0 + zc).min(n);
        for g0 in (0..g).step_by(gc) {
            let g1 = (g0 + gc).min(g);
            let mut x = Array2::zeros(((g1 - g0) * (z1 - z0), 2 + dims));
            let mut r = 0;
            for p in g0..g1 {
                for k in z0..z1 {
                    x.slice_mut(s![r, 0..2]).assign(&points.row(p));
                    x.slice_mut(s![r, 2..]).assign(&z.row(k));
                    r += 1;
                }
            }
            let fwd = BatchForward::run(params, x.view(), &[])?;
            let out = fwd.values();
            let mut r = 0;
            for p in g0..g1 {
                for k in z0..z1 {
                    sink(k, p, out.row(r));
                    r += 1;
                }
            }
        }
    }
    Ok(())
}

/// Monte Carlo mean and unbiased variance of a stochastic network at the
/// `(t, x)` rows of `points`, over `n` draws of `z ~ U([-1, 1]^s)` from the
/// statistics stream of `seed`. All points share the same draws.
pub fn mc_mean_variance(
    params: &ParamSet,
    points: ArrayView2<'_, f64>,
    n: usize,
    seed: u64,
) -> Result<Moments, MlpError> {
    let dims = params.config().input_dim.saturating_sub(2);
    check_inputs(params, points, dims)?;
    let z = sample_uniform(&mut rng::stream(seed, Stream::Statistics), n, dims);
    mc_mean_variance_with(params, points, z.view())
}

/// [`mc_mean_variance`] with caller-supplied samples (one per row of `z`).
pub fn mc_mean_variance_with(
    params: &ParamSet,
    points: ArrayView2<'_, f64>,
    z: ArrayView2<'_, f64>,
) -> Result<Moments, MlpError> {
    check_inputs(params, points, z.ncols())?;
    let mut acc = Welford::new((points.nrows(), params.config().output_dim));
    acc.n = z.nrows();
    sweep(params, points, z, |k, p, row| acc.push_at(k + 1, p, row))?;
    Ok(acc.finish())
}

/// Mean and variance of a stochastic network at the `(t, x)` rows of
/// `points` by a tensorised Gauss–Legendre rule over all stochastic inputs.
pub fn quad_mean_variance(
    params: &ParamSet,
    points: ArrayView2<'_, f64>,
    nodes: TensorNodes<'_>,
) -> Result<Moments, MlpError> {
    let dims = nodes.dims();
    check_inputs(params, points, dims)?;
    let len = nodes.len();
    let mut z = Array2::zeros((len, dims));
    let mut w = vec![0.0; len];
    for (k, wk) in w.iter_mut().enumerate() {
        *wk = nodes.point(k, z.row_mut(k).as_slice_mut().unwrap());
    }
    let shape = (points.nrows(), params.config().output_dim);
    let mut acc = Weighted::new(shape);
    acc.n = len;
    let mut shift = Array2::zeros(shape);
    let first = z.slice(s![0..1.min(len), ..]);
    sweep(params, points, first, |_, p, row| shift.row_mut(p).assign(&row))?;
    acc.shift = Some(shift);
    sweep(params, points, z.view(), |k, p, row| acc.push_at(p, w[k], row))?;
    Ok(acc.finish())
}
