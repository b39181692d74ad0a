use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `sum_i w_i f(x_i)`, an approximation of the integral over `[-1, 1]`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// The tensor product over `dims` copies of this rule, weighted for the
    /// uniform probability measure on `[-1, 1]^dims`.
    pub fn tensor(&self, dims: usize) -> TensorNodes<'_> {
        TensorNodes { rule: self, dims }
    }
}

// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

/// The `n`-point Gauss–Legendre rule, exact for polynomials of degree
/// `2n - 1`.
///
/// ```
/// let rule = relaxnn::uq::gauss_legendre(2);
/// let r = 1.0 / 3f64.sqrt();
/// assert!((rule.nodes[0] + r).abs() < 1e-15 && (rule.nodes[1] - r).abs() < 1e-15);
/// assert!((rule.integrate(|x| x * x) - 2.0 / 3.0).abs() < 1e-15);
/// ```
pub fn gauss_legendre(n: usize) -> QuadratureRule {
    assert!(n >= 1, "a quadrature rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    QuadratureRule { nodes, weights }
}

/// Tensorised nodes of a rule; point `k` is enumerated with the last
/// coordinate varying fastest.
#[derive(Clone, Copy, Debug)]
pub struct TensorNodes<'a> {
    rule: &'a QuadratureRule,
    dims: usize,
}

impl TensorNodes<'_> {
    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.rule.len().pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes point `k` into `z` and returns its probability weight.
    pub fn point(&self, mut k: usize, z: &mut [f64]) -> f64 {
        let n = self.rule.len();
        let mut w = 1.0;
        for d in (0..self.dims).rev() {
            let i = k % n;
            k /= n;
            z[d] = self.rule.nodes[i];
            w *= 0.5 * self.rule.weights[i];
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in 1..=20 {
            let r = gauss_legendre(n);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-14, "n = {n}: {s}");
            for i in 0..n {
                assert!((r.nodes[i] + r.nodes[n - 1 - i]).abs() < 1e-15);
            }
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn ten_point_exactness() {
        let r = gauss_legendre(10);
        for k in 0..=19 {
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            let got = r.integrate(|x| x.powi(k));
            assert!((got - exact).abs() < 1e-13, "x^{k}: {got}");
        }
    }

    #[test]
    fn known_three_point_rule() {
        let r = gauss_legendre(3);
        let a = (0.6f64).sqrt();
        assert!((r.nodes[2] - a).abs() < 1e-15);
        assert_eq!(r.nodes[1], 0.0);
        assert!((r.weights[1] - 8.0 / 9.0).abs() < 1e-15);
        assert!((r.weights[0] - 5.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn tensor_weights_are_a_probability() {
        let r = gauss_legendre(4);
        let t = r.tensor(3);
        assert_eq!(t.len(), 64);
        let mut z = [0.0; 3];
        let total: f64 = (0..t.len()).map(|k| t.point(k, &mut z)).sum();
        assert!((total - 1.0).abs() < 1e-14);
        t.point(1, &mut z);
        assert_eq!(z[0], r.nodes[0]);
        assert_eq!(z[1], r.nodes[0]);
        assert_eq!(z[2], r.nodes[1]);
    }
}
