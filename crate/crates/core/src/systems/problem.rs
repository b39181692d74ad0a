use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{SystemError, SystemKind, DEFAULT_GAMMA, DEFAULT_GRAVITY};
use crate::uq::{StochasticIc, StochasticKind};

/// Catalogued experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ProblemId {
    BurgersRiemann,
    BurgersSine,
    SweDam,
    Swe2Shock,
    EulerSod,
    EulerLax,
    BurgersRiemannUq,
    Swe2ShockUq,
    EulerSodUq,
}

impl ProblemId {
    pub const ALL: [ProblemId; 9] = [
        Self::BurgersRiemann,
        Self::BurgersSine,
        Self::SweDam,
        Self::Swe2Shock,
        Self::EulerSod,
        Self::EulerLax,
        Self::BurgersRiemannUq,
        Self::Swe2ShockUq,
        Self::EulerSodUq,
    ];

    pub const DETERMINISTIC: [ProblemId; 6] = [
        Self::BurgersRiemann,
        Self::BurgersSine,
        Self::SweDam,
        Self::Swe2Shock,
        Self::EulerSod,
        Self::EulerLax,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::BurgersRiemann => "burgers-riemann",
            Self::BurgersSine => "burgers-sine",
            Self::SweDam => "swe-dam",
            Self::Swe2Shock => "swe-2shock",
            Self::EulerSod => "euler-sod",
            Self::EulerLax => "euler-lax",
            Self::BurgersRiemannUq => "burgers-riemann-uq",
            Self::Swe2ShockUq => "swe-2shock-uq",
            Self::EulerSodUq => "euler-sod-uq",
        }
    }

    /// Times at which solution slices are reported.
    pub fn figure_times(self) -> Vec<f64> {
        match self {
            Self::BurgersRiemann | Self::BurgersSine | Self::SweDam | Self::Swe2Shock => {
                vec![0.0, 0.2, 0.4, 0.6]
            }
            Self::EulerSod => vec![0.0, 0.08, 0.16, 0.24, 0.32, 0.40],
            Self::EulerLax => vec![0.0, 0.032, 0.064, 0.096, 0.128, 0.16],
            Self::BurgersRiemannUq | Self::Swe2ShockUq => vec![0.1, 0.5, 1.0],
            Self::EulerSodUq => vec![0.04, 0.20, 0.40],
        }
    }

    pub fn spec(self) -> ProblemSpec {
        let swe = SystemKind::ShallowWater { g: DEFAULT_GRAVITY };
        let euler = SystemKind::Euler { gamma: DEFAULT_GAMMA };
        let riemann = |left: &[f64], right: &[f64]| InitialCondition::Riemann {
            left: left.to_vec(),
            right: right.to_vec(),
            interface: 0.0,
        };
        let (kind, t_end, x_min, x_max, initial, stochastic) = match self {
            Self::BurgersRiemann => (SystemKind::Burgers, 1.0, -0.6, 0.6, riemann(&[1.0], &[0.0]), None),
            Self::BurgersSine => (SystemKind::Burgers, 1.0, -1.0, 1.0, InitialCondition::NegSine, None),
            Self::SweDam => (swe, 1.0, -1.5, 1.5, riemann(&[1.0, 0.0], &[0.5, 0.0]), None),
            Self::Swe2Shock => (swe, 1.0, -1.0, 1.0, riemann(&[1.0, 1.0], &[1.0, -1.0]), None),
            Self::EulerSod => (euler, 0.4, -0.8, 0.8, riemann(&[1.0, 0.0, 1.0], &[0.125, 0.0, 0.1]), None),
            Self::EulerLax => (
                euler,
                0.16,
                -0.5,
                0.5,
                riemann(&[0.445, 0.698, 3.528], &[0.5, 0.0, 0.571]),
                None,
            ),
            Self::BurgersRiemannUq => (
                SystemKind::Burgers,
                1.0,
                -0.6,
                0.6,
                riemann(&[1.0], &[0.0]),
                Some(StochasticIc::new(StochasticKind::AdditiveSum, 0.005, 100)),
            ),
            Self::Swe2ShockUq => (
                swe,
                1.0,
                -1.0,
                1.0,
                riemann(&[1.0, 1.0], &[1.0, -1.0]),
                Some(StochasticIc::new(StochasticKind::InterfaceShift, 0.005, 5)),
            ),
            Self::EulerSodUq => (
                euler,
                0.4,
                -0.8,
                0.8,
                riemann(&[1.0, 0.0, 1.0], &[0.125, 0.0, 0.1]),
                Some(StochasticIc::new(StochasticKind::InterfaceShift, 0.005, 5)),
            ),
        };
        ProblemSpec {
            id: self,
            kind,
            t0: 0.0,
            t_end,
            x_min,
            x_max,
            initial,
            stochastic,
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemId {
    type Err = SystemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| SystemError::UnknownProblem(s.to_string()))
    }
}

impl TryFrom<String> for ProblemId {
    type Error = SystemError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ProblemId> for String {
    fn from(p: ProblemId) -> Self {
        p.as_str().to_string()
    }
}

/// Initial data in primitive variables.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    /// Two constant states split at `interface`; the interface itself takes
    /// the left state.
    Riemann {
        left: Vec<f64>,
        right: Vec<f64>,
        interface: f64,
    },
    /// `u_0(x) = -sin(pi x)`.
    NegSine,
}

/// A conservation law on a space-time rectangle with its initial data.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub id: ProblemId,
    pub kind: SystemKind,
    pub t0: f64,
    pub t_end: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub initial: InitialCondition,
    pub stochastic: Option<StochasticIc>,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<(), SystemError> {
        if !(self.t_end > self.t0) || !(self.x_max > self.x_min) {
            return Err(SystemError::Constant(format!(
                "empty domain [{}, {}] x [{}, {}]",
                self.t0, self.t_end, self.x_min, self.x_max
            )));
        }
        Ok(())
    }

    pub fn with_kind(mut self, kind: SystemKind) -> Self {
        self.kind = kind;
        self
    }

    /// Number of stochastic inputs appended after `(t, x)`.
    pub fn stochastic_dim(&self) -> usize {
        self.stochastic.as_ref().map_or(0, |s| s.dim)
    }

    /// Network input width: `t`, `x` and any stochastic coordinates.
    pub fn input_dim(&self) -> usize {
        2 + self.stochastic_dim()
    }

    pub fn contains_x(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }

    fn check_x(&self, x: f64) -> Result<(), SystemError> {
        if self.contains_x(x) {
            Ok(())
        } else {
            Err(SystemError::OutsideDomain {
                x,
                x_min: self.x_min,
                x_max: self.x_max,
            })
        }
    }

    /// Deterministic initial state (primitive variables) at `x`.
    pub fn initial_state(&self, x: f64) -> Result<Vec<f64>, SystemError> {
        self.check_x(x)?;
        Ok(self.initial_state_unchecked(x))
    }

    pub(crate) fn initial_state_unchecked(&self, x: f64) -> Vec<f64> {
        match &self.initial {
            InitialCondition::Riemann { left, right, interface } => {
                if x <= *interface {
                    left.clone()
                } else {
                    right.clone()
                }
            }
            InitialCondition::NegSine => vec![-(PI * x).sin()],
        }
    }

    /// The deterministic problem obtained by fixing the stochastic inputs to
    /// `z`. Without a stochastic model, `z` must be empty.
    pub fn realize(&self, z: &[f64]) -> Result<ProblemSpec, SystemError> {
        match &self.stochastic {
            None if z.is_empty() => Ok(self.clone()),
            None => Err(SystemError::Count {
                what: "stochastic inputs",
                expected: 0,
                got: z.len(),
            }),
            Some(sic) => Ok(ProblemSpec {
                initial: sic.realize(&self.initial, z)?,
                stochastic: None,
                ..self.clone()
            }),
        }
    }

    /// Initial state for a realisation `z` of the stochastic inputs.
    pub fn initial_state_z(&self, x: f64, z: &[f64]) -> Result<Vec<f64>, SystemError> {
        self.check_x(x)?;
        Ok(self.realize(z)?.initial_state_unchecked(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for id in ProblemId::ALL {
            assert_eq!(id.as_str().parse::<ProblemId>().unwrap(), id);
            assert_eq!(id.spec().id, id);
            id.spec().validate().unwrap();
        }
        assert!("euler-foo".parse::<ProblemId>().is_err());
    }

    #[test]
    fn catalog_initial_states() {
        assert_eq!(ProblemId::EulerSod.spec().initial_state(-0.1).unwrap(), vec![1.0, 0.0, 1.0]);
        assert_eq!(ProblemId::EulerSod.spec().initial_state(0.1).unwrap(), vec![0.125, 0.0, 0.1]);
        assert_eq!(ProblemId::BurgersSine.spec().initial_state(0.5).unwrap(), vec![-1.0]);
        assert_eq!(ProblemId::Swe2Shock.spec().initial_state(0.3).unwrap(), vec![1.0, -1.0]);
        assert_eq!(ProblemId::SweDam.spec().initial_state(-1.5).unwrap(), vec![1.0, 0.0]);
        assert_eq!(
            ProblemId::EulerLax.spec().initial_state(-0.2).unwrap(),
            vec![0.445, 0.698, 3.528]
        );
    }

    #[test]
    fn interface_takes_left_state() {
        assert_eq!(ProblemId::BurgersRiemann.spec().initial_state(0.0).unwrap(), vec![1.0]);
        assert_eq!(ProblemId::SweDam.spec().initial_state(0.0).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn outside_domain_is_an_error() {
        let sod = ProblemId::EulerSod.spec();
        assert!(matches!(sod.initial_state(0.81), Err(SystemError::OutsideDomain { .. })));
        assert!(sod.initial_state(0.8).is_ok());
    }

    #[test]
    fn domains() {
        let sod = ProblemId::EulerSod.spec();
        assert_eq!((sod.t_end, sod.x_min, sod.x_max), (0.4, -0.8, 0.8));
        let lax = ProblemId::EulerLax.spec();
        assert_eq!((lax.t_end, lax.x_min, lax.x_max), (0.16, -0.5, 0.5));
        assert_eq!(ProblemId::BurgersRiemannUq.spec().input_dim(), 102);
        assert_eq!(ProblemId::EulerSodUq.spec().input_dim(), 7);
    }
}
