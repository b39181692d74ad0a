//! Default networks, weights and modes of the catalogued problems.

use super::{LossWeights, TrainError};
use crate::mlp::MlpConfig;
use crate::systems::{relaxed_rows, Mode, ProblemId, RelaxType, SystemKind};

/// The relaxation variant each problem is run with by default.
pub fn default_mode(id: ProblemId) -> Mode {
    match id.spec().kind {
        SystemKind::Burgers => Mode::Relax(RelaxType::Type1),
        SystemKind::ShallowWater { .. } => Mode::Relax(RelaxType::Type2),
        SystemKind::Euler { .. } => Mode::Relax(RelaxType::Type3),
    }
}

/// Solution and flux network shapes for `id` in `mode`; the flux network is
/// `None` in plain physics-informed mode.
///
/// ```
/// use relaxnn::systems::{Mode, ProblemId, RelaxType};
/// use relaxnn::trainer::network_configs;
/// let (u, v) = network_configs(ProblemId::EulerSod, Mode::Relax(RelaxType::Type3)).unwrap();
/// assert_eq!(u.dims(), [2, 384, 384, 384, 384, 384, 384, 3]);
/// assert_eq!(v.unwrap().dims(), [2, 128, 128, 128, 128, 128, 128, 1]);
/// ```
pub fn network_configs(id: ProblemId, mode: Mode) -> Result<(MlpConfig, Option<MlpConfig>), TrainError> {
    let spec = id.spec();
    let kind = spec.kind;
    let d = spec.input_dim();
    let m = kind.num_laws();
    let r = relaxed_rows(kind, mode)?.len();
    let uq = spec.stochastic.is_some();

    let (u_depth, u_width) = match (kind, uq) {
        (SystemKind::Burgers, false) => (4, 128),
        (SystemKind::Burgers, true) => (3, 128),
        (SystemKind::ShallowWater { .. }, false) => (5, 128),
        (SystemKind::ShallowWater { .. }, true) => (6, 256),
        (SystemKind::Euler { .. }, _) => (6, 384),
    };
    let (v_depth, v_width) = match (kind, uq, r) {
        (SystemKind::Burgers, false, _) => (4, 64),
        (SystemKind::Burgers, true, _) => (3, 64),
        (SystemKind::ShallowWater { .. }, true, _) => (6, 128),
        (SystemKind::ShallowWater { .. }, false, 2) => (5, 128),
        (SystemKind::ShallowWater { .. }, false, _) => (5, 64),
        (SystemKind::Euler { .. }, _, 3) => (6, 384),
        (SystemKind::Euler { .. }, _, 2) => (6, 256),
        (SystemKind::Euler { .. }, _, _) => (6, 128),
    };
    let u = MlpConfig::uniform(d, u_depth, u_width, m)?;
    let v = if r == 0 {
        None
    } else {
        Some(MlpConfig::uniform(d, v_depth, v_width, r)?)
    };
    Ok((u, v))
}

impl LossWeights {
    /// Tuned weights of a catalogued problem. Stochastic problems use the
    /// weights of their deterministic counterpart.
    ///
    /// ```
    /// use relaxnn::systems::ProblemId;
    /// use relaxnn::trainer::LossWeights;
    /// let w = LossWeights::catalog(ProblemId::BurgersRiemann);
    /// assert_eq!((w.residual[0], w.flux[0], w.ic, w.bc), (0.1, 2.0, 10.0, 10.0));
    /// ```
    pub fn catalog(id: ProblemId) -> Self {
        let w = |residual: &[f64], flux: &[f64], ic: f64, bc: f64| Self {
            residual: residual.to_vec(),
            flux: flux.to_vec(),
            ic,
            bc,
        };
        match id {
            ProblemId::BurgersRiemann | ProblemId::BurgersRiemannUq => w(&[0.1], &[2.0], 10.0, 10.0),
            ProblemId::BurgersSine => w(&[0.5], &[2.0], 5.0, 5.0),
            ProblemId::SweDam => w(&[0.01, 0.01], &[1.0, 1.0], 1.0, 1.0),
            ProblemId::Swe2Shock | ProblemId::Swe2ShockUq => w(&[0.1, 0.1], &[1.0, 1.0], 1.0, 1.0),
            ProblemId::EulerSod | ProblemId::EulerSodUq => w(&[0.1, 0.05, 0.01], &[5.0, 5.0, 5.0], 5.0, 5.0),
            ProblemId::EulerLax => w(&[1.0, 0.5, 0.1], &[100.0, 100.0, 10.0], 100.0, 100.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_problem_has_consistent_defaults() {
        for id in ProblemId::ALL {
            let spec = id.spec();
            let mode = default_mode(id);
            let w = LossWeights::catalog(id);
            w.validate(spec.kind, mode).unwrap();
            w.validate(spec.kind, Mode::Pinn).unwrap();
            let (u, v) = network_configs(id, mode).unwrap();
            assert_eq!(u.input_dim, spec.input_dim());
            assert_eq!(v.unwrap().output_dim, relaxed_rows(spec.kind, mode).unwrap().len());
            assert!(network_configs(id, Mode::Pinn).unwrap().1.is_none());
        }
    }

    #[test]
    fn uq_shapes() {
        let (u, v) = network_configs(ProblemId::BurgersRiemannUq, default_mode(ProblemId::BurgersRiemannUq)).unwrap();
        assert_eq!(u.dims(), [102, 128, 128, 128, 1]);
        assert_eq!(v.unwrap().dims(), [102, 64, 64, 64, 1]);
        let (u, v) = network_configs(ProblemId::Swe2ShockUq, default_mode(ProblemId::Swe2ShockUq)).unwrap();
        assert_eq!(u.dims()[..2], [7, 256]);
        assert_eq!(v.unwrap().dims().last(), Some(&1));
    }

    #[test]
    fn invalid_variant() {
        assert!(network_configs(ProblemId::BurgersRiemann, Mode::Relax(RelaxType::Type2)).is_err());
    }
}
