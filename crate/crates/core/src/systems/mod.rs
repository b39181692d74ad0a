//! Conservation laws, their initial data, and the loss terms built from them.
//!
//! Three systems are covered, all written as `d_t q + d_x F(q) = 0`:
//!
//! * Burgers: `q = u`, `F = u^2 / 2`
//! * shallow water: `q = (h, hu)`, `F = (hu, hu^2 + g h^2 / 2)`
//! * Euler: `q = (rho, rho u, E)`, `F = (rho u, rho u^2 + p, u (E + p))`
//!   with `E = p / (gamma - 1) + rho u^2 / 2`.
//!
//! Networks always output primitive variables (`u`; `h, u`; `rho, u, p`).
//! A relaxed row replaces `F_i(q)` in the residual by an independent flux
//! variable and adds the mismatch `v_i - F_i(q)` as a separate term.

mod problem;
mod terms;

pub use problem::{InitialCondition, ProblemId, ProblemSpec};
pub use terms::{flux_mismatch_terms, required_derivatives, residual_terms};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::AutodiffError;

/// Default gravitational constant for shallow water (nondimensional).
pub const DEFAULT_GRAVITY: f64 = 1.0;
/// Adiabatic index of a diatomic ideal gas.
pub const DEFAULT_GAMMA: f64 = 1.4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("{relax:?} is not a relaxation variant of {kind}")]
    Variant { kind: &'static str, relax: RelaxType },
    #[error("expected {expected} {what}, got {got}")]
    Count {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("residual needs the {0} derivative channel, which was not computed")]
    MissingChannel(&'static str),
    #[error("x = {x} lies outside [{x_min}, {x_max}]")]
    OutsideDomain { x: f64, x_min: f64, x_max: f64 },
    #[error("unknown problem id `{0}`")]
    UnknownProblem(String),
    #[error("invalid constant: {0}")]
    Constant(String),
    #[error(transparent)]
    Tape(#[from] AutodiffError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SystemKind {
    Burgers,
    ShallowWater { g: f64 },
    Euler { gamma: f64 },
}

impl SystemKind {
    pub fn shallow_water(g: f64) -> Result<Self, SystemError> {
        if !(g > 0.0 && g.is_finite()) {
            return Err(SystemError::Constant(format!("gravity g = {g} must be positive")));
        }
        Ok(Self::ShallowWater { g })
    }

    pub fn euler(gamma: f64) -> Result<Self, SystemError> {
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(SystemError::Constant(format!("gamma = {gamma} must exceed 1")));
        }
        Ok(Self::Euler { gamma })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Burgers => "burgers",
            Self::ShallowWater { .. } => "shallow-water",
            Self::Euler { .. } => "euler",
        }
    }

    /// Number of conservation laws (also the number of primitive outputs).
    pub fn num_laws(&self) -> usize {
        match self {
            Self::Burgers => 1,
            Self::ShallowWater { .. } => 2,
            Self::Euler { .. } => 3,
        }
    }

    pub fn primitive_names(&self) -> &'static [&'static str] {
        match self {
            Self::Burgers => &["u"],
            Self::ShallowWater { .. } => &["h", "u"],
            Self::Euler { .. } => &["rho", "u", "p"],
        }
    }

    pub fn conserved_names(&self) -> &'static [&'static str] {
        match self {
            Self::Burgers => &["u"],
            Self::ShallowWater { .. } => &["h", "hu"],
            Self::Euler { .. } => &["rho", "rhou", "E"],
        }
    }

    /// Conserved vector from primitives.
    pub fn conserved(&self, prim: &[f64]) -> Vec<f64> {
        match *self {
            Self::Burgers => vec![prim[0]],
            Self::ShallowWater { .. } => vec![prim[0], prim[0] * prim[1]],
            Self::Euler { gamma } => {
                let (rho, u, p) = (prim[0], prim[1], prim[2]);
                vec![rho, rho * u, total_energy(rho, u, p, gamma)]
            }
        }
    }

    /// Primitive vector from conserved variables.
    pub fn primitive(&self, q: &[f64]) -> Vec<f64> {
        match *self {
            Self::Burgers => vec![q[0]],
            Self::ShallowWater { .. } => vec![q[0], q[1] / q[0]],
            Self::Euler { gamma } => {
                let (rho, mom, e) = (q[0], q[1], q[2]);
                let u = mom / rho;
                vec![rho, u, (gamma - 1.0) * (e - 0.5 * rho * u * u)]
            }
        }
    }

    /// `F(q)` evaluated from primitive variables.
    pub fn physical_flux(&self, prim: &[f64]) -> Vec<f64> {
        match *self {
            Self::Burgers => vec![0.5 * prim[0] * prim[0]],
            Self::ShallowWater { g } => {
                let (h, u) = (prim[0], prim[1]);
                vec![h * u, h * u * u + 0.5 * g * h * h]
            }
            Self::Euler { gamma } => {
                let (rho, u, p) = (prim[0], prim[1], prim[2]);
                let e = total_energy(rho, u, p, gamma);
                vec![rho * u, rho * u * u + p, u * (e + p)]
            }
        }
    }

    /// Largest characteristic speed `|u| + c` at a primitive state.
    pub fn max_wave_speed(&self, prim: &[f64]) -> f64 {
        match *self {
            Self::Burgers => prim[0].abs(),
            Self::ShallowWater { g } => prim[1].abs() + (g * prim[0]).sqrt(),
            Self::Euler { gamma } => prim[1].abs() + (gamma * prim[2] / prim[0]).sqrt(),
        }
    }

    /// Positivity of depth, density and pressure. Burgers is always admissible.
    pub fn is_physical(&self, prim: &[f64]) -> bool {
        match self {
            Self::Burgers => prim[0].is_finite(),
            Self::ShallowWater { .. } => prim[0] > 0.0 && prim[1].is_finite(),
            Self::Euler { .. } => prim[0] > 0.0 && prim[2] > 0.0 && prim[1].is_finite(),
        }
    }
}

/// Relaxation variants. Type1 relaxes every law; Type2 keeps mass
/// unrelaxed; Type3 (Euler only) relaxes energy alone. Burgers has the single
/// variant Type1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelaxType {
    Type1,
    Type2,
    Type3,
}

impl RelaxType {
    pub fn from_level(level: u8) -> Option<Self> {
        match level {
            1 => Some(Self::Type1),
            2 => Some(Self::Type2),
            3 => Some(Self::Type3),
            _ => None,
        }
    }

    pub fn level(self) -> u8 {
        match self {
            Self::Type1 => 1,
            Self::Type2 => 2,
            Self::Type3 => 3,
        }
    }
}

/// Plain physics-informed loss or a relaxation variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Pinn,
    Relax(RelaxType),
}

impl Mode {
    pub fn is_relaxed(self) -> bool {
        matches!(self, Mode::Relax(_))
    }
}

/// Indices of the conservation laws whose flux is carried by the flux
/// network, in the order of the flux network's outputs.
pub fn relaxed_rows(kind: SystemKind, mode: Mode) -> Result<&'static [usize], SystemError> {
    use RelaxType::*;
    let relax = match mode {
        Mode::Pinn => return Ok(&[]),
        Mode::Relax(r) => r,
    };
    match (kind, relax) {
        (SystemKind::Burgers, Type1) => Ok(&[0]),
        (SystemKind::ShallowWater { .. }, Type1) => Ok(&[0, 1]),
        (SystemKind::ShallowWater { .. }, Type2) => Ok(&[1]),
        (SystemKind::Euler { .. }, Type1) => Ok(&[0, 1, 2]),
        (SystemKind::Euler { .. }, Type2) => Ok(&[1, 2]),
        (SystemKind::Euler { .. }, Type3) => Ok(&[2]),
        _ => Err(SystemError::Variant {
            kind: kind.name(),
            relax,
        }),
    }
}

/// `E = p / (gamma - 1) + rho u^2 / 2`.
pub fn total_energy(rho: f64, u: f64, p: f64, gamma: f64) -> f64 {
    p / (gamma - 1.0) + 0.5 * rho * u * u
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SWE: SystemKind = SystemKind::ShallowWater { g: 1.0 };
    const EULER: SystemKind = SystemKind::Euler { gamma: 1.4 };

    #[test]
    fn fluxes_by_hand() {
        assert_eq!(SystemKind::Burgers.physical_flux(&[2.0]), vec![2.0]);
        assert_eq!(SWE.physical_flux(&[1.0, 1.0]), vec![1.0, 1.5]);
        assert_eq!(EULER.physical_flux(&[1.0, 0.0, 1.0]), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn energies() {
        assert!((total_energy(1.0, 0.0, 1.0, 1.4) - 2.5).abs() < 1e-15);
        assert!((total_energy(0.125, 0.0, 0.1, 1.4) - 0.25).abs() < 1e-15);
        // 3.528 / 0.4 + 0.5 * 0.445 * 0.698^2
        let lax = total_energy(0.445, 0.698, 3.528, 1.4);
        assert!((lax - 8.928_402_89).abs() < 1e-8, "{lax}");
    }

    #[test]
    fn invalid_constants() {
        assert!(SystemKind::shallow_water(0.0).is_err());
        assert!(SystemKind::euler(1.0).is_err());
        assert!(SystemKind::euler(1.4).is_ok());
    }

    #[test]
    fn variant_table() {
        use RelaxType::*;
        assert_eq!(relaxed_rows(SystemKind::Burgers, Mode::Relax(Type1)).unwrap(), &[0]);
        assert!(relaxed_rows(SystemKind::Burgers, Mode::Relax(Type2)).is_err());
        assert!(relaxed_rows(SWE, Mode::Relax(Type3)).is_err());
        assert_eq!(relaxed_rows(EULER, Mode::Relax(Type2)).unwrap(), &[1, 2]);
        assert_eq!(relaxed_rows(EULER, Mode::Pinn).unwrap(), &[] as &[usize]);
    }

    proptest! {
        #[test]
        fn euler_conversion_round_trip(rho in 0.1f64..5.0, u in -3.0f64..3.0, p in 0.1f64..5.0) {
            let q = EULER.conserved(&[rho, u, p]);
            prop_assert!((q[2] - (p / 0.4 + 0.5 * rho * u * u)).abs() <= 1e-12 * q[2].abs());
            let back = EULER.primitive(&q);
            prop_assert!((back[0] - rho).abs() < 1e-12);
            prop_assert!((back[1] - u).abs() < 1e-12);
            prop_assert!((back[2] - p).abs() < 1e-11);
        }

        #[test]
        fn euler_energy_flux_identity(rho in 0.1f64..5.0, u in -3.0f64..3.0, p in 0.1f64..5.0) {
            let f = EULER.physical_flux(&[rho, u, p]);
            let alt = 1.4 / 0.4 * p * u + 0.5 * rho * u * u * u;
            prop_assert!((f[2] - alt).abs() <= 1e-12 * (1.0 + alt.abs()));
        }
    }
}
