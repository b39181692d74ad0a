//! Random initial data and the statistics of solutions that depend on it.
//!
//! A stochastic problem carries `s` extra inputs `z ~ U([-1, 1]^s)` that are
//! appended to the network input after `(t, x)`. Two perturbations are
//! supported: an additive shift of the left Riemann state by `eps * sum(z)`,
//! and a shift of the Riemann interface to `psi(z)`.
//!
//! Means and variances over `z` are estimated either by Monte Carlo or by a
//! tensorised Gauss–Legendre rule; see [`mc_mean_variance`] and
//! [`quad_mean_variance`].

mod quadrature;
mod reference;
mod stats;

pub use quadrature::{gauss_legendre, QuadratureRule, TensorNodes};
pub use reference::{mc_reference, ReferenceError, ReferenceMoments};
pub use stats::{
    mc_mean_variance, mc_mean_variance_with, mc_statistics, quad_mean_variance, quad_statistics, sample_uniform, Moments,
};

use serde::{Deserialize, Serialize};

use crate::systems::{InitialCondition, SystemError};

/// How the stochastic inputs enter the initial data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StochasticKind {
    /// Left Riemann state plus `eps * (z_1 + ... + z_s)`.
    AdditiveSum,
    /// Riemann interface moved to `psi(z)`; needs `s = 5`.
    InterfaceShift,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StochasticIc {
    pub kind: StochasticKind,
    pub epsilon: f64,
    pub dim: usize,
}

impl StochasticIc {
    pub fn new(kind: StochasticKind, epsilon: f64, dim: usize) -> Self {
        Self { kind, epsilon, dim }
    }

    pub fn validate(&self) -> Result<(), SystemError> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) || self.dim == 0 {
            return Err(SystemError::Constant(format!(
                "stochastic amplitude {} and dimension {} must be positive",
                self.epsilon, self.dim
            )));
        }
        if self.kind == StochasticKind::InterfaceShift && self.dim != 5 {
            return Err(SystemError::Count {
                what: "stochastic inputs for an interface shift",
                expected: 5,
                got: self.dim,
            });
        }
        Ok(())
    }

    /// Deterministic initial data for one realisation `z`.
    pub fn realize(&self, initial: &InitialCondition, z: &[f64]) -> Result<InitialCondition, SystemError> {
        self.validate()?;
        if z.len() != self.dim {
            return Err(SystemError::Count {
                what: "stochastic inputs",
                expected: self.dim,
                got: z.len(),
            });
        }
        let InitialCondition::Riemann { left, right, interface } = initial else {
            return Err(SystemError::Constant(
                "stochastic perturbations apply to Riemann data only".into(),
            ));
        };
        Ok(match self.kind {
            StochasticKind::AdditiveSum => {
                let shift = self.epsilon * z.iter().sum::<f64>();
                InitialCondition::Riemann {
                    left: left.iter().map(|l| l + shift).collect(),
                    right: right.clone(),
                    interface: *interface,
                }
            }
            StochasticKind::InterfaceShift => InitialCondition::Riemann {
                left: left.clone(),
                right: right.clone(),
                interface: interface + psi(z, self.epsilon),
            },
        })
    }
}

/// `psi(z) = eps * (z_1 relu(z_2 z_3 + z_4) + z_5)`.
///
/// ```
/// use relaxnn::uq::psi;
/// assert!((psi(&[1.0; 5], 0.005) - 0.015).abs() < 1e-15);
/// assert_eq!(psi(&[1.0, -1.0, 1.0, 0.0, 0.0], 0.005), 0.0);
/// ```
pub fn psi(z: &[f64], epsilon: f64) -> f64 {
    assert_eq!(z.len(), 5, "psi takes five inputs");
    epsilon * (z[0] * (z[1] * z[2] + z[3]).max(0.0) + z[4])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::ProblemId;

    #[test]
    fn psi_values() {
        assert_eq!(psi(&[0.0; 5], 0.005), 0.0);
        assert!((psi(&[1.0; 5], 0.005) - 0.015).abs() < 1e-15);
        assert_eq!(psi(&[1.0, -1.0, 1.0, 0.0, 0.0], 0.005), 0.0);
    }

    #[test]
    fn zero_realisation_is_deterministic_problem() {
        for (uq, det) in [
            (ProblemId::BurgersRiemannUq, ProblemId::BurgersRiemann),
            (ProblemId::Swe2ShockUq, ProblemId::Swe2Shock),
            (ProblemId::EulerSodUq, ProblemId::EulerSod),
        ] {
            let uq = uq.spec();
            let det = det.spec();
            let z = vec![0.0; uq.stochastic_dim()];
            assert_eq!(uq.realize(&z).unwrap().initial, det.initial);
            for i in 0..=40 {
                let x = det.x_min + (det.x_max - det.x_min) * i as f64 / 40.0;
                assert_eq!(uq.initial_state_z(x, &z).unwrap(), det.initial_state(x).unwrap());
            }
        }
    }

    #[test]
    fn additive_left_state() {
        let p = ProblemId::BurgersRiemannUq.spec();
        let z = vec![1.0; 100];
        assert!((p.initial_state_z(-0.3, &z).unwrap()[0] - 1.5).abs() < 1e-12);
        assert_eq!(p.initial_state_z(0.3, &z).unwrap(), vec![0.0]);
    }

    #[test]
    fn shifted_interface() {
        let p = ProblemId::EulerSodUq.spec();
        let z = [1.0; 5];
        // psi = 0.015
        assert_eq!(p.initial_state_z(0.01, &z).unwrap(), vec![1.0, 0.0, 1.0]);
        assert_eq!(p.initial_state_z(0.02, &z).unwrap(), vec![0.125, 0.0, 0.1]);
        // psi = -0.01
        let z = [-1.0, 1.0, 1.0, 1.0, 0.0];
        assert_eq!(p.initial_state_z(-0.011, &z).unwrap(), vec![1.0, 0.0, 1.0]);
        assert_eq!(p.initial_state_z(-0.005, &z).unwrap(), vec![0.125, 0.0, 0.1]);
    }

    #[test]
    fn wrong_dimension() {
        let p = ProblemId::Swe2ShockUq.spec();
        assert!(p.initial_state_z(0.0, &[0.0; 4]).is_err());
        assert!(ProblemId::Swe2Shock.spec().initial_state_z(0.0, &[0.0]).is_err());
        let bad = StochasticIc::new(StochasticKind::InterfaceShift, 0.005, 3);
        assert!(bad.validate().is_err());
    }
}
