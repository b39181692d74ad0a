//! Central-difference checks of reverse-mode gradients.

use super::{AutodiffError, NodeId, Tape};

/// Per-coordinate comparison between an analytic and a numeric gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    /// `max_i |a_i - n_i| / max(|a_i|, |n_i|)`, with `0/0` read as 0.
    pub max_rel_dev: f64,
}

impl GradCheckReport {
    pub fn new(analytic: Vec<f64>, numeric: Vec<f64>) -> Self {
        assert_eq!(analytic.len(), numeric.len(), "gradient length mismatch");
        let max_rel_dev = analytic
            .iter()
            .zip(&numeric)
            .map(|(&a, &n)| relative_deviation(a, n))
            .fold(0.0, f64::max);
        Self {
            analytic,
            numeric,
            max_rel_dev,
        }
    }

    /// Largest relative deviation over coordinates whose gradient magnitude
    /// is at least `floor`.
    pub fn max_rel_dev_above(&self, floor: f64) -> f64 {
        self.pairs()
            .filter(|(a, n)| a.abs().max(n.abs()) >= floor)
            .map(|(a, n)| relative_deviation(a, n))
            .fold(0.0, f64::max)
    }

    /// Largest absolute deviation over coordinates whose gradient magnitude
    /// is below `floor`.
    pub fn max_abs_dev_below(&self, floor: f64) -> f64 {
        self.pairs()
            .filter(|(a, n)| a.abs().max(n.abs()) < floor)
            .map(|(a, n)| (a - n).abs())
            .fold(0.0, f64::max)
    }

    /// Relative tolerance `rtol` where the gradient is at least `floor` in
    /// magnitude, absolute tolerance `atol` below it.
    pub fn passes(&self, rtol: f64, floor: f64, atol: f64) -> bool {
        self.max_rel_dev_above(floor) <= rtol && self.max_abs_dev_below(floor) <= atol
    }

    fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.analytic.iter().copied().zip(self.numeric.iter().copied())
    }
}

pub fn relative_deviation(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Central differences `(f(x + h e_i) - f(x - h e_i)) / 2h` for every
/// coordinate.
pub fn central_difference<F>(mut f: F, point: &[f64], step: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut x = point.to_vec();
    (0..point.len())
        .map(|i| {
            let x0 = x[i];
            x[i] = x0 + step;
            let fp = f(&x);
            x[i] = x0 - step;
            let fm = f(&x);
            x[i] = x0;
            (fp - fm) / (2.0 * step)
        })
        .collect()
}

/// Compares the tape gradient of `f` at `point` with central differences.
///
/// `f` receives a tape and one trainable leaf per coordinate and returns the
/// root of the scalar it computes.
pub fn grad_check<F>(f: F, point: &[f64], step: f64) -> Result<GradCheckReport, AutodiffError>
where
    F: Fn(&mut Tape, &[NodeId]) -> Result<NodeId, AutodiffError>,
{
    assert!(step > 0.0, "finite-difference step must be positive");
    let eval = |x: &[f64], trainable: bool| -> Result<(Tape, NodeId), AutodiffError> {
        let mut tape = Tape::with_capacity(64);
        let leaves = x
            .iter()
            .map(|&v| tape.leaf(v, trainable))
            .collect::<Result<Vec<_>, _>>()?;
        let root = f(&mut tape, &leaves)?;
        Ok((tape, root))
    };

    let (tape, root) = eval(point, true)?;
    let grads = tape.backward(root);
    // Leaves are the first |point| nodes, so registration order is coordinate order.
    let analytic = grads.param_vec();

    let mut failure = None;
    let numeric = central_difference(
        |x| match eval(x, false) {
            Ok((t, r)) => t.value(r),
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        point,
        step,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(GradCheckReport::new(analytic, numeric))
}
