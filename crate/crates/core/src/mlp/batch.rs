//! Many-point evaluation with a hand-written reverse pass.
//!
//! All channels are stacked row-wise: for `n` points and derivative
//! directions `wrt = [k_1, ..]`, every layer works on a `(1 + |wrt|) n x width`
//! matrix whose first `n` rows are activations and whose following blocks of
//! `n` rows are `d(activation)/d(input k_c)`. One matrix product per layer
//! then advances all channels; the bias only touches the value block.
//!
//! For a hidden layer with `A = tanh(Z)`, `S = 1 - A^2` and `DA_c = S * DZ_c`,
//! the reverse pass is
//!
//! ```text
//! gDZ_c = gDA_c * S
//! gZ    = (gA - 2 A * sum_c gDA_c * DZ_c) * S
//! ```
//!
//! which is the same chain rule the tape applies node by node.

use ndarray::{s, Array2, ArrayView2, ArrayViewMut2, Axis, Zip};

use super::{MlpError, ParamSet, X};

/// Cached activations of one batched forward pass.
#[derive(Clone, Debug)]
pub struct BatchForward {
    n: usize,
    wrt: Vec<usize>,
    // stacked input of each affine layer
    inputs: Vec<Array2<f64>>,
    // 1 - A^2 for each hidden layer (value block only)
    slopes: Vec<Array2<f64>>,
    // derivative blocks of the pre-activation of each hidden layer
    pre_derivs: Vec<Array2<f64>>,
    output: Array2<f64>,
}

impl BatchForward {
    /// Evaluates `params` at the rows of `x` (`n x input_dim`).
    pub fn run(params: &ParamSet, x: ArrayView2<'_, f64>, wrt: &[usize]) -> Result<Self, MlpError> {
        let cfg = params.config();
        if x.ncols() != cfg.input_dim {
            return Err(MlpError::InputDim {
                expected: cfg.input_dim,
                got: x.ncols(),
            });
        }
        if let Some(&k) = wrt.iter().find(|&&k| k > X || k >= cfg.input_dim) {
            return Err(MlpError::Wrt(k));
        }
        let n = x.nrows();
        let channels = 1 + wrt.len();
        let layers = params.num_layers();

        let mut h = Array2::zeros((channels * n, cfg.input_dim));
        h.slice_mut(s![0..n, ..]).assign(&x);
        for (c, &k) in wrt.iter().enumerate() {
            h.slice_mut(s![(c + 1) * n..(c + 2) * n, k]).fill(1.0);
        }

        let mut inputs = Vec::with_capacity(layers);
        let mut slopes = Vec::with_capacity(layers - 1);
        let mut pre_derivs = Vec::with_capacity(layers - 1);
        for l in 0..layers {
            let mut z = h.dot(&params.weight(l).t());
            {
                let b = params.bias(l);
                let mut zv = z.slice_mut(s![0..n, ..]);
                zv += &b;
            }
            inputs.push(h);
            if l + 1 == layers {
                return Ok(Self {
                    n,
                    wrt: wrt.to_vec(),
                    inputs,
                    slopes,
                    pre_derivs,
                    output: z,
                });
            }
            let width = z.ncols();
            let mut next = Array2::zeros((channels * n, width));
            let mut slope = Array2::zeros((n, width));
            Zip::from(next.slice_mut(s![0..n, ..]))
                .and(&mut slope)
                .and(z.slice(s![0..n, ..]))
                .for_each(|a, s, &z| {
                    let t = z.tanh();
                    *a = t;
                    *s = 1.0 - t * t;
                });
            let dz = z.slice(s![n.., ..]).to_owned();
            for c in 0..wrt.len() {
                Zip::from(next.slice_mut(s![(c + 1) * n..(c + 2) * n, ..]))
                    .and(dz.slice(s![c * n..(c + 1) * n, ..]))
                    .and(&slope)
                    .for_each(|da, &d, &s| *da = s * d);
            }
            slopes.push(slope);
            pre_derivs.push(dz);
            h = next;
        }
        unreachable!("a network has at least one layer")
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn wrt(&self) -> &[usize] {
        &self.wrt
    }

    /// Output values, `n x output_dim`.
    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.output.slice(s![0..self.n, ..])
    }

    /// Derivatives of the outputs along input `k`, if requested.
    pub fn derivs(&self, k: usize) -> Option<ArrayView2<'_, f64>> {
        let c = self.wrt.iter().position(|&w| w == k)?;
        Some(self.output.slice(s![(c + 1) * self.n..(c + 2) * self.n, ..]))
    }

    /// A zeroed seed for [`BatchForward::backward`] with the output's stacked shape.
    pub fn zero_seed(&self) -> Array2<f64> {
        Array2::zeros(self.output.raw_dim())
    }

    /// Value block of a stacked seed.
    pub fn seed_values<'a>(&self, seed: &'a mut Array2<f64>) -> ArrayViewMut2<'a, f64> {
        seed.slice_mut(s![0..self.n, ..])
    }

    /// Derivative block for input `k` of a stacked seed.
    pub fn seed_derivs<'a>(&self, seed: &'a mut Array2<f64>, k: usize) -> Option<ArrayViewMut2<'a, f64>> {
        let c = self.wrt.iter().position(|&w| w == k)?;
        Some(seed.slice_mut(s![(c + 1) * self.n..(c + 2) * self.n, ..]))
    }

    /// Pulls the stacked output adjoint `seed` back to the parameters and
    /// adds the result into `grad` (flat, same layout as `params`).
    pub fn backward(&self, params: &ParamSet, seed: &Array2<f64>, grad: &mut [f64]) {
        assert_eq!(seed.dim(), self.output.dim(), "seed shape");
        assert_eq!(grad.len(), params.len(), "gradient length");
        let n = self.n;
        let k = self.wrt.len();
        let mut g = seed.clone();
        for l in (0..params.num_layers()).rev() {
            let h = &self.inputs[l];
            let gw = g.t().dot(h);
            let gb = g.slice(s![0..n, ..]).sum_axis(Axis(0));
            let (o, i) = params.config().layer_shape(l);
            let off = params.layer_offset(l);
            for (dst, src) in grad[off..off + o * i].iter_mut().zip(gw.iter()) {
                *dst += src;
            }
            for (dst, src) in grad[off + o * i..off + o * i + o].iter_mut().zip(gb.iter()) {
                *dst += src;
            }
            if l == 0 {
                break;
            }

            // adjoint of this layer's stacked input = output of hidden layer l-1
            let mut gh = g.dot(&params.weight(l));
            let slope = &self.slopes[l - 1];
            let dz = &self.pre_derivs[l - 1];
            let act = h.slice(s![0..n, ..]);
            let mut g_slope = Array2::<f64>::zeros(slope.raw_dim());
            for c in 0..k {
                let mut block = gh.slice_mut(s![(c + 1) * n..(c + 2) * n, ..]);
                Zip::from(&mut g_slope)
                    .and(&mut block)
                    .and(dz.slice(s![c * n..(c + 1) * n, ..]))
                    .and(slope)
                    .for_each(|gs, gda, &d, &s| {
                        *gs += *gda * d;
                        *gda *= s;
                    });
            }
            Zip::from(gh.slice_mut(s![0..n, ..]))
                .and(&g_slope)
                .and(act)
                .and(slope)
                .for_each(|ga, &gs, &a, &s| *ga = (*ga - 2.0 * a * gs) * s);
            g = gh;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tape;
    use crate::mlp::{forward_with_input_derivatives, MlpConfig, TapeNet, T};
    use crate::rng::{self, Stream};
    use rand::Rng;

    fn random_params(dims: &[usize], seed: u64) -> ParamSet {
        let mut p = ParamSet::init_he_uniform(MlpConfig::from_dims(dims).unwrap(), seed, Stream::Check);
        // non-zero biases so the bias path is exercised
        let mut r = rng::stream_raw(seed, 99);
        for l in 0..p.num_layers() {
            for j in 0..p.config().layer_shape(l).0 {
                let idx = p.bias_index(l, j);
                p.as_mut_slice()[idx] = r.random_range(-0.5..0.5);
            }
        }
        p
    }

    #[test]
    fn values_and_derivatives_match_tape() {
        let p = random_params(&[2, 7, 5, 3], 4);
        let pts = ndarray::array![[0.1, -0.3], [0.9, 0.4], [0.0, 0.0]];
        let fwd = BatchForward::run(&p, pts.view(), &[T, X]).unwrap();
        for (r, row) in pts.rows().into_iter().enumerate() {
            let mut tape = Tape::new();
            let net = TapeNet::record(&p, &mut tape, false).unwrap();
            let out = forward_with_input_derivatives(&net, row.as_slice().unwrap(), &[T, X], &mut tape).unwrap();
            for (j, o) in out.iter().enumerate() {
                let close = |a: f64, b: f64| (a - b).abs() <= 1e-14 * (1.0 + a.abs());
                assert!(close(fwd.values()[[r, j]], tape.value(o.value)));
                assert!(close(fwd.derivs(T).unwrap()[[r, j]], tape.value(o.d_dt.unwrap())));
                assert!(close(fwd.derivs(X).unwrap()[[r, j]], tape.value(o.d_dx.unwrap())));
            }
        }
    }

    #[test]
    fn backward_matches_tape_gradient() {
        // loss = sum over points/outputs of c1*value + c2*d_dt + c3*d_dx^2
        let p = random_params(&[2, 6, 6, 2], 8);
        let pts = ndarray::array![[0.2, 0.1], [0.7, -0.5], [0.4, 0.3], [0.05, 0.9]];
        let (c1, c2, c3) = (0.3, -1.2, 0.8);

        let fwd = BatchForward::run(&p, pts.view(), &[T, X]).unwrap();
        let mut seed = fwd.zero_seed();
        fwd.seed_values(&mut seed).fill(c1);
        fwd.seed_derivs(&mut seed, T).unwrap().fill(c2);
        let dx = fwd.derivs(X).unwrap().to_owned();
        fwd.seed_derivs(&mut seed, X).unwrap().assign(&dx.mapv(|d| 2.0 * c3 * d));
        let mut grad = vec![0.0; p.len()];
        fwd.backward(&p, &seed, &mut grad);

        let mut tape = Tape::new();
        let net = TapeNet::record(&p, &mut tape, true).unwrap();
        let mut terms = Vec::new();
        for row in pts.rows() {
            for o in forward_with_input_derivatives(&net, row.as_slice().unwrap(), &[T, X], &mut tape).unwrap() {
                terms.push(tape.scale(c1, o.value).unwrap());
                terms.push(tape.scale(c2, o.d_dt.unwrap()).unwrap());
                let sq = tape.square(o.d_dx.unwrap()).unwrap();
                terms.push(tape.scale(c3, sq).unwrap());
            }
        }
        let root = tape.sum(&terms).unwrap();
        let tape_grad = tape.backward(root).param_vec();
        for (a, b) in grad.iter().zip(&tape_grad) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn value_only_pass() {
        let p = random_params(&[3, 4, 1], 2);
        let pts = ndarray::array![[0.1, 0.2, 0.3]];
        let fwd = BatchForward::run(&p, pts.view(), &[]).unwrap();
        assert!(fwd.derivs(T).is_none());
        let expect = crate::mlp::eval(&p, &[0.1, 0.2, 0.3])[0];
        assert!((fwd.values()[[0, 0]] - expect).abs() < 1e-15);
    }
}
