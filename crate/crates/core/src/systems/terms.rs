//! Residual and flux-mismatch terms on the tape.
//!
//! Conserved quantities and fluxes are composed from the primitive network
//! outputs with exact product rules, e.g. `d_t(hu) = h_t u + h u_t`, so the
//! derivative of every composed quantity is itself a tape expression.

use super::{relaxed_rows, Mode, SystemError, SystemKind};
use crate::autodiff::{NodeId, Tape};
use crate::mlp::{OutputTriple, T, X};

/// A value with its derivative along one input direction.
#[derive(Clone, Copy)]
struct Jet {
    v: NodeId,
    d: Option<NodeId>,
}

impl Jet {
    fn mul(tape: &mut Tape, a: Jet, b: Jet) -> Result<Jet, SystemError> {
        let v = tape.mul(a.v, b.v)?;
        let d = match (a.d, b.d) {
            (Some(ad), Some(bd)) => {
                let l = tape.mul(ad, b.v)?;
                let r = tape.mul(a.v, bd)?;
                Some(tape.add(l, r)?)
            }
            _ => None,
        };
        Ok(Jet { v, d })
    }

    fn add(tape: &mut Tape, a: Jet, b: Jet) -> Result<Jet, SystemError> {
        let v = tape.add(a.v, b.v)?;
        let d = match (a.d, b.d) {
            (Some(ad), Some(bd)) => Some(tape.add(ad, bd)?),
            _ => None,
        };
        Ok(Jet { v, d })
    }

    fn scale(tape: &mut Tape, c: f64, a: Jet) -> Result<Jet, SystemError> {
        let c = tape.constant(c)?;
        let v = tape.mul(c, a.v)?;
        let d = match a.d {
            Some(ad) => Some(tape.mul(c, ad)?),
            None => None,
        };
        Ok(Jet { v, d })
    }
}

fn project(u: &[OutputTriple], dir: usize) -> Vec<Jet> {
    u.iter()
        .map(|o| Jet {
            v: o.value,
            d: if dir == T { o.d_dt } else { o.d_dx },
        })
        .collect()
}

fn conserved(kind: SystemKind, tape: &mut Tape, p: &[Jet]) -> Result<Vec<Jet>, SystemError> {
    Ok(match kind {
        SystemKind::Burgers => vec![p[0]],
        SystemKind::ShallowWater { .. } => {
            let hu = Jet::mul(tape, p[0], p[1])?;
            vec![p[0], hu]
        }
        SystemKind::Euler { gamma } => {
            let (rho, u, pr) = (p[0], p[1], p[2]);
            let mom = Jet::mul(tape, rho, u)?;
            let e = energy(tape, gamma, rho, u, pr, mom)?;
            vec![rho, mom, e]
        }
    })
}

// E = p / (gamma - 1) + (rho u) u / 2
fn energy(tape: &mut Tape, gamma: f64, _rho: Jet, u: Jet, p: Jet, mom: Jet) -> Result<Jet, SystemError> {
    let internal = Jet::scale(tape, 1.0 / (gamma - 1.0), p)?;
    let mu = Jet::mul(tape, mom, u)?;
    let kinetic = Jet::scale(tape, 0.5, mu)?;
    Jet::add(tape, internal, kinetic)
}

fn flux(kind: SystemKind, tape: &mut Tape, p: &[Jet]) -> Result<Vec<Jet>, SystemError> {
    Ok(match kind {
        SystemKind::Burgers => {
            let uu = Jet::mul(tape, p[0], p[0])?;
            vec![Jet::scale(tape, 0.5, uu)?]
        }
        SystemKind::ShallowWater { g } => {
            let (h, u) = (p[0], p[1]);
            let hu = Jet::mul(tape, h, u)?;
            let huu = Jet::mul(tape, hu, u)?;
            let hh = Jet::mul(tape, h, h)?;
            let pressure = Jet::scale(tape, 0.5 * g, hh)?;
            vec![hu, Jet::add(tape, huu, pressure)?]
        }
        SystemKind::Euler { gamma } => {
            let (rho, u, pr) = (p[0], p[1], p[2]);
            let mom = Jet::mul(tape, rho, u)?;
            let muu = Jet::mul(tape, mom, u)?;
            let momentum_flux = Jet::add(tape, muu, pr)?;
            let e = energy(tape, gamma, rho, u, pr, mom)?;
            let ep = Jet::add(tape, e, pr)?;
            let energy_flux = Jet::mul(tape, u, ep)?;
            vec![mom, momentum_flux, energy_flux]
        }
    })
}

/// Which input derivatives the solution and flux networks must provide for
/// [`residual_terms`] under `mode`.
pub fn required_derivatives(kind: SystemKind, mode: Mode) -> Result<(Vec<usize>, Vec<usize>), SystemError> {
    let relaxed = relaxed_rows(kind, mode)?;
    let mut u_wrt = vec![T];
    if relaxed.len() < kind.num_laws() {
        u_wrt.push(X);
    }
    let v_wrt = if relaxed.is_empty() { vec![] } else { vec![X] };
    Ok((u_wrt, v_wrt))
}

fn check_count(what: &'static str, expected: usize, got: usize) -> Result<(), SystemError> {
    if expected == got {
        Ok(())
    } else {
        Err(SystemError::Count { what, expected, got })
    }
}

/// One node per conservation law: `d_t q_i + d_x G_i`, where `G_i` is the
/// flux-network output for relaxed rows and the physical flux of the
/// solution network otherwise.
///
/// `u` holds the primitive outputs of the solution network, `v` the outputs
/// of the flux network (empty in [`Mode::Pinn`]).
pub fn residual_terms(
    kind: SystemKind,
    mode: Mode,
    u: &[OutputTriple],
    v: &[OutputTriple],
    tape: &mut Tape,
) -> Result<Vec<NodeId>, SystemError> {
    let relaxed = relaxed_rows(kind, mode)?;
    check_count("solution outputs", kind.num_laws(), u.len())?;
    check_count("flux outputs", relaxed.len(), v.len())?;

    let cons_t = conserved(kind, tape, &project(u, T))?;
    let flux_x = if relaxed.len() < kind.num_laws() {
        Some(flux(kind, tape, &project(u, X))?)
    } else {
        None
    };

    let mut out = Vec::with_capacity(kind.num_laws());
    for (row, q) in cons_t.iter().enumerate() {
        let qt = q.d.ok_or(SystemError::MissingChannel("t"))?;
        let fx = match relaxed.iter().position(|&r| r == row) {
            Some(j) => v[j].d_dx,
            None => flux_x.as_ref().unwrap()[row].d,
        }
        .ok_or(SystemError::MissingChannel("x"))?;
        out.push(tape.add(qt, fx)?);
    }
    Ok(out)
}

/// One node per relaxed row: `v_j - F_row(u)`. The Euler energy row uses the
/// closed form `gamma / (gamma - 1) p u + rho u^3 / 2` of `u (E + p)`.
pub fn flux_mismatch_terms(
    kind: SystemKind,
    mode: Mode,
    u: &[NodeId],
    v: &[NodeId],
    tape: &mut Tape,
) -> Result<Vec<NodeId>, SystemError> {
    let relaxed = relaxed_rows(kind, mode)?;
    check_count("solution outputs", kind.num_laws(), u.len())?;
    check_count("flux outputs", relaxed.len(), v.len())?;
    if relaxed.is_empty() {
        return Ok(Vec::new());
    }

    let prim: Vec<Jet> = u.iter().map(|&v| Jet { v, d: None }).collect();
    let mut rows = Vec::with_capacity(relaxed.len());
    for (&row, &vj) in relaxed.iter().zip(v) {
        let f = match (kind, row) {
            (SystemKind::Euler { gamma }, 2) => {
                let (rho, uu, p) = (prim[0].v, prim[1].v, prim[2].v);
                let pu = tape.mul(p, uu)?;
                let enthalpy = tape.scale(gamma / (gamma - 1.0), pu)?;
                let u2 = tape.square(uu)?;
                let u3 = tape.mul(u2, uu)?;
                let ru3 = tape.mul(rho, u3)?;
                let kinetic = tape.scale(0.5, ru3)?;
                tape.add(enthalpy, kinetic)?
            }
            _ => flux(kind, tape, &prim)?[row].v,
        };
        rows.push(tape.sub(vj, f)?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::RelaxType;

    fn leaves(tape: &mut Tape, vals: &[f64]) -> Vec<NodeId> {
        vals.iter().map(|&v| tape.constant(v).unwrap()).collect()
    }

    fn triples(tape: &mut Tape, rows: &[[f64; 3]]) -> Vec<OutputTriple> {
        rows.iter()
            .map(|r| {
                let ids = leaves(tape, r);
                OutputTriple {
                    value: ids[0],
                    d_dt: Some(ids[1]),
                    d_dx: Some(ids[2]),
                }
            })
            .collect()
    }

    #[test]
    fn burgers_exact_cancellation() {
        let mut tape = Tape::new();
        let u = triples(&mut tape, &[[0.3, 1.0, 0.0]]);
        let v = triples(&mut tape, &[[0.0, 0.0, -1.0]]);
        let r = residual_terms(SystemKind::Burgers, Mode::Relax(RelaxType::Type1), &u, &v, &mut tape).unwrap();
        assert_eq!(tape.value(r[0]), 0.0);
    }

    #[test]
    fn constant_fields_have_zero_residual() {
        let cases = [
            (SystemKind::Burgers, vec![Mode::Pinn, Mode::Relax(RelaxType::Type1)]),
            (
                SystemKind::ShallowWater { g: 1.0 },
                vec![Mode::Pinn, Mode::Relax(RelaxType::Type1), Mode::Relax(RelaxType::Type2)],
            ),
            (
                SystemKind::Euler { gamma: 1.4 },
                vec![
                    Mode::Pinn,
                    Mode::Relax(RelaxType::Type1),
                    Mode::Relax(RelaxType::Type2),
                    Mode::Relax(RelaxType::Type3),
                ],
            ),
        ];
        for (kind, modes) in cases {
            for mode in modes {
                let mut tape = Tape::new();
                let n = kind.num_laws();
                let u = triples(&mut tape, &vec![[0.7, 0.0, 0.0]; n]);
                let m = relaxed_rows(kind, mode).unwrap().len();
                let v = triples(&mut tape, &vec![[1.3, 0.0, 0.0]; m]);
                let r = residual_terms(kind, mode, &u, &v, &mut tape).unwrap();
                assert_eq!(r.len(), n);
                assert!(r.iter().all(|&id| tape.value(id) == 0.0), "{kind:?} {mode:?}");
            }
        }
    }

    #[test]
    fn burgers_flux_mismatch() {
        let mut tape = Tape::new();
        let u = leaves(&mut tape, &[1.0]);
        let mode = Mode::Relax(RelaxType::Type1);
        let v = leaves(&mut tape, &[0.5]);
        let r = flux_mismatch_terms(SystemKind::Burgers, mode, &u, &v, &mut tape).unwrap();
        assert_eq!(tape.value(r[0]), 0.0);
        let v = leaves(&mut tape, &[0.4]);
        let r = flux_mismatch_terms(SystemKind::Burgers, mode, &u, &v, &mut tape).unwrap();
        assert!((tape.value(r[0]) + 0.1).abs() < 1e-15);
    }

    #[test]
    fn euler_type1_mismatch_vanishes_at_physical_flux() {
        // rho = u = p = 1: E = 3, fluxes (1, 2, 4)
        let mut tape = Tape::new();
        let u = leaves(&mut tape, &[1.0, 1.0, 1.0]);
        let v = leaves(&mut tape, &[1.0, 2.0, 4.0]);
        let kind = SystemKind::Euler { gamma: 1.4 };
        let r = flux_mismatch_terms(kind, Mode::Relax(RelaxType::Type1), &u, &v, &mut tape).unwrap();
        for id in r {
            assert!(tape.value(id).abs() < 1e-15);
        }
    }

    #[test]
    fn count_and_channel_errors() {
        let kind = SystemKind::ShallowWater { g: 1.0 };
        let mut tape = Tape::new();
        let u = triples(&mut tape, &[[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        let err = residual_terms(kind, Mode::Relax(RelaxType::Type2), &u, &[], &mut tape);
        assert!(matches!(err, Err(SystemError::Count { .. })));
        let err = residual_terms(kind, Mode::Relax(RelaxType::Type3), &u, &[], &mut tape);
        assert!(matches!(err, Err(SystemError::Variant { .. })));

        // Type2 needs u_x for the mass row
        let mut no_x = u.clone();
        for t in &mut no_x {
            t.d_dx = None;
        }
        let v = triples(&mut tape, &[[0.0, 0.0, 0.0]]);
        let err = residual_terms(kind, Mode::Relax(RelaxType::Type2), &no_x, &v, &mut tape);
        assert_eq!(err, Err(SystemError::MissingChannel("x")));
        // Type1 does not
        let v2 = triples(&mut tape, &[[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        assert!(residual_terms(kind, Mode::Relax(RelaxType::Type1), &no_x, &v2, &mut tape).is_ok());
    }

    #[test]
    fn required_channels() {
        let burgers = SystemKind::Burgers;
        assert_eq!(
            required_derivatives(burgers, Mode::Relax(RelaxType::Type1)).unwrap(),
            (vec![T], vec![X])
        );
        assert_eq!(required_derivatives(burgers, Mode::Pinn).unwrap(), (vec![T, X], vec![]));
        let euler = SystemKind::Euler { gamma: 1.4 };
        assert_eq!(
            required_derivatives(euler, Mode::Relax(RelaxType::Type3)).unwrap(),
            (vec![T, X], vec![X])
        );
    }
}
