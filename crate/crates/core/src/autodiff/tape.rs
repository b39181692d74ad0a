//! Scalar computation tape with reverse accumulation.
//!
//! Nodes are appended in evaluation order, so a node's parents always have
//! smaller ids and a single descending sweep over the tape visits every node
//! after all of its consumers. That sweep is the whole backward pass.
//!
//! ```
//! use relaxnn::autodiff::Tape;
//!
//! let mut tape = Tape::new();
//! let x = tape.param(3.0).unwrap();
//! let y = tape.square(x).unwrap();
//! let grads = tape.backward(y);
//! assert_eq!(tape.value(y), 9.0);
//! assert_eq!(grads.wrt(x), 6.0);
//! ```

use std::fmt;

use super::AutodiffError;

/// Index of a node on the tape that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "%{}", self.0)
    }
}

/// Elementary operations recorded on the tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Square,
    Tanh,
}

impl OpKind {
    pub fn arity(self) -> usize {
        match self {
            OpKind::Add | OpKind::Sub | OpKind::Mul | OpKind::Div => 2,
            OpKind::Neg | OpKind::Square | OpKind::Tanh => 1,
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Leaf,
    Unary(OpKind, usize),
    Binary(OpKind, usize, usize),
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    value: f64,
}

/// Append-only record of a scalar computation.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: Vec<NodeId>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(nodes: usize) -> Self {
        Self {
            nodes: Vec::with_capacity(nodes),
            params: Vec::new(),
        }
    }

    /// Drops every node while keeping the allocation.
    pub fn clear(&mut self) {
        self.nodes.clear();
        self.params.clear();
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> f64 {
        self.nodes[id.0].value
    }

    /// Trainable leaves in registration order.
    pub fn params(&self) -> &[NodeId] {
        &self.params
    }

    pub fn is_param(&self, id: NodeId) -> bool {
        self.params.binary_search(&id).is_ok()
    }

    /// Records a leaf. Trainable leaves receive an entry in the gradient map
    /// returned by [`Tape::backward`].
    pub fn leaf(&mut self, value: f64, trainable: bool) -> Result<NodeId, AutodiffError> {
        if !value.is_finite() {
            return Err(AutodiffError::NonFinite {
                what: "leaf",
                value,
            });
        }
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            op: Op::Leaf,
            value,
        });
        if trainable {
            self.params.push(id);
        }
        Ok(id)
    }

    pub fn constant(&mut self, value: f64) -> Result<NodeId, AutodiffError> {
        self.leaf(value, false)
    }

    pub fn param(&mut self, value: f64) -> Result<NodeId, AutodiffError> {
        self.leaf(value, true)
    }

    /// Records `kind` applied to `operands`.
    pub fn apply(&mut self, kind: OpKind, operands: &[NodeId]) -> Result<NodeId, AutodiffError> {
        if operands.len() != kind.arity() {
            return Err(AutodiffError::Arity {
                kind,
                expected: kind.arity(),
                got: operands.len(),
            });
        }
        for &id in operands {
            if id.0 >= self.nodes.len() {
                return Err(AutodiffError::UnknownNode(id.0));
            }
        }
        let (op, value) = match kind {
            OpKind::Add | OpKind::Sub | OpKind::Mul | OpKind::Div => {
                let (a, b) = (operands[0].0, operands[1].0);
                let (x, y) = (self.nodes[a].value, self.nodes[b].value);
                let v = match kind {
                    OpKind::Add => x + y,
                    OpKind::Sub => x - y,
                    OpKind::Mul => x * y,
                    _ => {
                        if y == 0.0 {
                            return Err(AutodiffError::DivisionByZero);
                        }
                        x / y
                    }
                };
                (Op::Binary(kind, a, b), v)
            }
            OpKind::Neg | OpKind::Square | OpKind::Tanh => {
                let a = operands[0].0;
                let x = self.nodes[a].value;
                let v = match kind {
                    OpKind::Neg => -x,
                    OpKind::Square => x * x,
                    _ => x.tanh(),
                };
                (Op::Unary(kind, a), v)
            }
        };
        if !value.is_finite() {
            return Err(AutodiffError::NonFinite { what: "node", value });
        }
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node { op, value });
        Ok(id)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.apply(OpKind::Add, &[a, b])
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.apply(OpKind::Sub, &[a, b])
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.apply(OpKind::Mul, &[a, b])
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.apply(OpKind::Div, &[a, b])
    }

    pub fn neg(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        self.apply(OpKind::Neg, &[a])
    }

    pub fn square(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        self.apply(OpKind::Square, &[a])
    }

    pub fn tanh(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        self.apply(OpKind::Tanh, &[a])
    }

    /// `c * a` with `c` recorded as a constant leaf.
    pub fn scale(&mut self, c: f64, a: NodeId) -> Result<NodeId, AutodiffError> {
        let c = self.constant(c)?;
        self.mul(c, a)
    }

    /// Left fold of `add` over `terms`; an empty slice yields a zero constant.
    pub fn sum(&mut self, terms: &[NodeId]) -> Result<NodeId, AutodiffError> {
        match terms.split_first() {
            None => self.constant(0.0),
            Some((&first, rest)) => {
                let mut acc = first;
                for &t in rest {
                    acc = self.add(acc, t)?;
                }
                Ok(acc)
            }
        }
    }

    /// Reverse accumulation from `root`. Each node is visited once, in
    /// descending id order.
    pub fn backward(&self, root: NodeId) -> Gradients {
        let mut adjoint = vec![0.0; root.0 + 1];
        adjoint[root.0] = 1.0;
        for i in (0..=root.0).rev() {
            let g = adjoint[i];
            if g == 0.0 {
                continue;
            }
            match self.nodes[i].op {
                Op::Leaf => {}
                Op::Unary(kind, a) => {
                    let x = self.nodes[a].value;
                    adjoint[a] += match kind {
                        OpKind::Neg => -g,
                        OpKind::Square => 2.0 * x * g,
                        OpKind::Tanh => {
                            let y = self.nodes[i].value;
                            (1.0 - y * y) * g
                        }
                        _ => unreachable!("binary kind in unary node"),
                    };
                }
                Op::Binary(kind, a, b) => {
                    let (x, y) = (self.nodes[a].value, self.nodes[b].value);
                    let (ga, gb) = match kind {
                        OpKind::Add => (g, g),
                        OpKind::Sub => (g, -g),
                        OpKind::Mul => (g * y, g * x),
                        OpKind::Div => (g / y, -g * x / (y * y)),
                        _ => unreachable!("unary kind in binary node"),
                    };
                    adjoint[a] += ga;
                    adjoint[b] += gb;
                }
            }
        }
        let params = self
            .params
            .iter()
            .copied()
            .filter(|p| p.0 <= root.0)
            .collect();
        Gradients { adjoint, params }
    }
}

/// Result of a backward pass: adjoints of every node up to the root.
#[derive(Clone, Debug)]
pub struct Gradients {
    adjoint: Vec<f64>,
    params: Vec<NodeId>,
}

impl Gradients {
    /// Adjoint of any node recorded before the root; zero for later nodes.
    pub fn wrt(&self, id: NodeId) -> f64 {
        self.adjoint.get(id.0).copied().unwrap_or(0.0)
    }

    /// `(leaf, gradient)` for each trainable leaf, in registration order.
    pub fn params(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.params.iter().map(|&p| (p, self.adjoint[p.0]))
    }

    pub fn param_vec(&self) -> Vec<f64> {
        self.params().map(|(_, g)| g).collect()
    }
}
