//! Fully connected tanh networks.
//!
//! Hidden layers apply `tanh`, the output layer is affine. Besides the plain
//! forward pass, the network can carry directional derivatives with respect
//! to chosen input coordinates through every layer (the affine map sends a
//! derivative row through the weight matrix, `tanh` multiplies it by
//! `1 - a^2`). On a [`Tape`] those derivatives are ordinary nodes, so the
//! loss can contain `du/dt` and `du/dx` and still be differentiated with
//! respect to the weights.
//!
//! [`batch`] evaluates the same algebra for many points at once with dense
//! matrix products and a hand-written reverse pass; training uses it, and the
//! tape path is the reference it is checked against.

pub mod batch;
mod params;

pub use params::{he_uniform_bound, ParamSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AutodiffError, NodeId, Tape};

/// Input coordinate of time in every network.
pub const T: usize = 0;
/// Input coordinate of space in every network.
pub const X: usize = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MlpError {
    #[error("invalid network shape: {0}")]
    Shape(String),
    #[error("expected {expected} inputs, got {got}")]
    InputDim { expected: usize, got: usize },
    #[error("expected {expected} parameters, got {got}")]
    ParamCount { expected: usize, got: usize },
    #[error("non-finite parameter {0}")]
    NonFinite(f64),
    #[error("derivatives are available only with respect to t (0) and x (1), not input {0}")]
    Wrt(usize),
    #[error("parameter file: {0}")]
    Format(String),
    #[error(transparent)]
    Tape(#[from] AutodiffError),
}

/// Layer widths of a network.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
}

impl MlpConfig {
    pub fn new(input_dim: usize, hidden: Vec<usize>, output_dim: usize) -> Result<Self, MlpError> {
        let cfg = Self {
            input_dim,
            hidden,
            output_dim,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `depth` hidden layers of equal `width`.
    pub fn uniform(input_dim: usize, depth: usize, width: usize, output_dim: usize) -> Result<Self, MlpError> {
        Self::new(input_dim, vec![width; depth], output_dim)
    }

    /// From the bracket notation `[d_in, w_1, ..., w_k, d_out]`.
    pub fn from_dims(dims: &[usize]) -> Result<Self, MlpError> {
        if dims.len() < 2 {
            return Err(MlpError::Shape(format!("{dims:?} needs input and output widths")));
        }
        Self::new(dims[0], dims[1..dims.len() - 1].to_vec(), dims[dims.len() - 1])
    }

    pub fn validate(&self) -> Result<(), MlpError> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden.contains(&0) {
            return Err(MlpError::Shape(format!("{:?} has a zero width", self.dims())));
        }
        Ok(())
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = Vec::with_capacity(self.hidden.len() + 2);
        d.push(self.input_dim);
        d.extend_from_slice(&self.hidden);
        d.push(self.output_dim);
        d
    }

    /// Number of affine layers (hidden layers plus the output layer).
    pub fn num_layers(&self) -> usize {
        self.hidden.len() + 1
    }

    /// `(fan_out, fan_in)` of affine layer `l`.
    pub fn layer_shape(&self, l: usize) -> (usize, usize) {
        let fan_in = if l == 0 { self.input_dim } else { self.hidden[l - 1] };
        let fan_out = if l == self.hidden.len() {
            self.output_dim
        } else {
            self.hidden[l]
        };
        (fan_out, fan_in)
    }

    pub fn num_params(&self) -> usize {
        (0..self.num_layers())
            .map(|l| {
                let (o, i) = self.layer_shape(l);
                o * i + o
            })
            .sum()
    }
}

/// Value and requested input derivatives of one network output.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutputTriple {
    pub value: NodeId,
    pub d_dt: Option<NodeId>,
    pub d_dx: Option<NodeId>,
}

impl OutputTriple {
    pub fn constant(value: NodeId) -> Self {
        Self {
            value,
            d_dt: None,
            d_dx: None,
        }
    }
}

/// A parameter set recorded on a tape.
#[derive(Clone, Debug)]
pub struct TapeNet {
    config: MlpConfig,
    offsets: Vec<usize>,
    ids: Vec<NodeId>,
}

impl TapeNet {
    /// Records every parameter as a leaf, trainable if requested.
    pub fn record(params: &ParamSet, tape: &mut Tape, trainable: bool) -> Result<Self, MlpError> {
        let ids = params
            .as_slice()
            .iter()
            .map(|&v| tape.leaf(v, trainable))
            .collect::<Result<Vec<_>, _>>()?;
        let offsets = (0..=params.num_layers()).map(|l| params.layer_offset(l)).collect();
        Ok(Self {
            config: params.config().clone(),
            offsets,
            ids,
        })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    /// Leaf ids in flat parameter order.
    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    fn weight(&self, l: usize, row: usize, col: usize) -> NodeId {
        let (_, i) = self.config.layer_shape(l);
        self.ids[self.offsets[l] + row * i + col]
    }

    fn bias(&self, l: usize, row: usize) -> NodeId {
        let (o, i) = self.config.layer_shape(l);
        self.ids[self.offsets[l] + o * i + row]
    }
}

/// Plain forward pass; returns one node per output.
pub fn forward(net: &TapeNet, x: &[f64], tape: &mut Tape) -> Result<Vec<NodeId>, MlpError> {
    Ok(forward_with_input_derivatives(net, x, &[], tape)?
        .into_iter()
        .map(|o| o.value)
        .collect())
}

/// Forward pass that also propagates `d/d(input k)` for each `k` in `wrt`
/// (a subset of `{T, X}`).
pub fn forward_with_input_derivatives(
    net: &TapeNet,
    x: &[f64],
    wrt: &[usize],
    tape: &mut Tape,
) -> Result<Vec<OutputTriple>, MlpError> {
    let cfg = &net.config;
    if x.len() != cfg.input_dim {
        return Err(MlpError::InputDim {
            expected: cfg.input_dim,
            got: x.len(),
        });
    }
    if let Some(&k) = wrt.iter().find(|&&k| k > X || k >= cfg.input_dim) {
        return Err(MlpError::Wrt(k));
    }

    let mut act = x
        .iter()
        .map(|&v| tape.constant(v))
        .collect::<Result<Vec<_>, _>>()?;
    // derivative rows; `None` marks the one-hot input rows of the first layer
    let mut deriv: Vec<Option<Vec<NodeId>>> = vec![None; wrt.len()];
    let one = tape.constant(1.0)?;

    let layers = cfg.num_layers();
    for l in 0..layers {
        let (fan_out, fan_in) = cfg.layer_shape(l);
        let last = l + 1 == layers;
        let mut next_act = Vec::with_capacity(fan_out);
        let mut next_deriv = vec![Vec::with_capacity(fan_out); wrt.len()];
        for j in 0..fan_out {
            let mut z = net.bias(l, j);
            for (i, &a) in act.iter().enumerate().take(fan_in) {
                let wa = tape.mul(net.weight(l, j, i), a)?;
                z = tape.add(z, wa)?;
            }
            let mut dz = Vec::with_capacity(wrt.len());
            for (c, &k) in wrt.iter().enumerate() {
                let d = match &deriv[c] {
                    None => net.weight(l, j, k),
                    Some(row) => {
                        let mut acc = tape.mul(net.weight(l, j, 0), row[0])?;
                        for (i, &r) in row.iter().enumerate().skip(1) {
                            let wr = tape.mul(net.weight(l, j, i), r)?;
                            acc = tape.add(acc, wr)?;
                        }
                        acc
                    }
                };
                dz.push(d);
            }
            if last {
                next_act.push(z);
                for (c, d) in dz.into_iter().enumerate() {
                    next_deriv[c].push(d);
                }
            } else {
                let a = tape.tanh(z)?;
                next_act.push(a);
                if !wrt.is_empty() {
                    let a2 = tape.square(a)?;
                    let slope = tape.sub(one, a2)?;
                    for (c, d) in dz.into_iter().enumerate() {
                        next_deriv[c].push(tape.mul(slope, d)?);
                    }
                }
            }
        }
        act = next_act;
        deriv = next_deriv.into_iter().map(Some).collect();
    }

    let pick = |k: usize, j: usize| {
        wrt.iter()
            .position(|&w| w == k)
            .map(|c| deriv[c].as_ref().unwrap()[j])
    };
    Ok((0..cfg.output_dim)
        .map(|j| OutputTriple {
            value: act[j],
            d_dt: pick(T, j),
            d_dx: pick(X, j),
        })
        .collect())
}

/// Evaluates the network off-tape for plotting and statistics.
pub fn eval(params: &ParamSet, x: &[f64]) -> Vec<f64> {
    let cfg = params.config();
    assert_eq!(x.len(), cfg.input_dim, "input dimension");
    let mut act = x.to_vec();
    let layers = params.num_layers();
    for l in 0..layers {
        let w = params.weight(l);
        let b = params.bias(l);
        let mut next: Vec<f64> = (0..w.nrows())
            .map(|j| {
                let mut z = b[j];
                for (i, &a) in act.iter().enumerate() {
                    z += w[[j, i]] * a;
                }
                z
            })
            .collect();
        if l + 1 < layers {
            next.iter_mut().for_each(|z| *z = z.tanh());
        }
        act = next;
    }
    act
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_from_dims() {
        let c = MlpConfig::from_dims(&[2, 64, 64, 1]).unwrap();
        assert_eq!(c.hidden, vec![64, 64]);
        assert_eq!(c.num_params(), 2 * 64 + 64 + 64 * 64 + 64 + 64 + 1);
        assert!(MlpConfig::from_dims(&[2]).is_err());
        assert!(MlpConfig::from_dims(&[2, 0, 1]).is_err());
        assert_eq!(MlpConfig::uniform(2, 4, 128, 1).unwrap().dims(), vec![2, 128, 128, 128, 128, 1]);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let p = ParamSet::zeros(MlpConfig::from_dims(&[2, 5, 5, 3]).unwrap());
        let mut tape = Tape::new();
        let net = TapeNet::record(&p, &mut tape, true).unwrap();
        let out = forward(&net, &[0.3, -0.7], &mut tape).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|&o| tape.value(o) == 0.0));
    }

    #[test]
    fn affine_identity_without_hidden_layers() {
        let cfg = MlpConfig::from_dims(&[2, 1]).unwrap();
        let p = ParamSet::from_vec(cfg, vec![1.0, 0.0, 0.0]).unwrap();
        let mut tape = Tape::new();
        let net = TapeNet::record(&p, &mut tape, false).unwrap();
        let out = forward(&net, &[0.42, 9.0], &mut tape).unwrap();
        assert_eq!(tape.value(out[0]), 0.42);
    }

    #[test]
    fn linear_net_derivatives() {
        // output = 2t + 3x + 1
        let cfg = MlpConfig::from_dims(&[2, 1]).unwrap();
        let p = ParamSet::from_vec(cfg, vec![2.0, 3.0, 1.0]).unwrap();
        let mut tape = Tape::new();
        let net = TapeNet::record(&p, &mut tape, false).unwrap();
        for x in [[0.0, 0.0], [0.5, -1.0], [3.0, 7.0]] {
            let o = forward_with_input_derivatives(&net, &x, &[T, X], &mut tape).unwrap()[0];
            assert_eq!(tape.value(o.d_dt.unwrap()), 2.0);
            assert_eq!(tape.value(o.d_dx.unwrap()), 3.0);
        }
    }

    #[test]
    fn constant_net_has_zero_derivatives() {
        let cfg = MlpConfig::from_dims(&[2, 4, 1]).unwrap();
        let mut p = ParamSet::zeros(cfg);
        let bi = p.bias_index(1, 0);
        p.as_mut_slice()[bi] = 0.7;
        let mut tape = Tape::new();
        let net = TapeNet::record(&p, &mut tape, false).unwrap();
        let o = forward_with_input_derivatives(&net, &[0.1, 0.2], &[T, X], &mut tape).unwrap()[0];
        assert_eq!(tape.value(o.value), 0.7);
        assert_eq!(tape.value(o.d_dt.unwrap()), 0.0);
        assert_eq!(tape.value(o.d_dx.unwrap()), 0.0);
    }

    #[test]
    fn only_requested_derivatives_are_present() {
        let cfg = MlpConfig::from_dims(&[2, 3, 2]).unwrap();
        let p = ParamSet::init_he_uniform(cfg, 3, crate::rng::Stream::Check);
        let mut tape = Tape::new();
        let net = TapeNet::record(&p, &mut tape, false).unwrap();
        let o = forward_with_input_derivatives(&net, &[0.1, 0.2], &[X], &mut tape).unwrap();
        assert!(o.iter().all(|t| t.d_dt.is_none() && t.d_dx.is_some()));
    }

    #[test]
    fn dimension_errors() {
        let cfg = MlpConfig::from_dims(&[3, 2, 1]).unwrap();
        let p = ParamSet::zeros(cfg);
        let mut tape = Tape::new();
        let net = TapeNet::record(&p, &mut tape, false).unwrap();
        assert!(matches!(
            forward(&net, &[1.0, 2.0], &mut tape),
            Err(MlpError::InputDim { expected: 3, got: 2 })
        ));
        assert!(matches!(
            forward_with_input_derivatives(&net, &[1.0, 2.0, 3.0], &[2], &mut tape),
            Err(MlpError::Wrt(2))
        ));
    }
}
