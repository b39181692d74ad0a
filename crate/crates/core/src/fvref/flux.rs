//! Interface fluxes for the Godunov update. All take conserved states.

use super::FvError;
use crate::systems::SystemKind;

/// Exact Godunov flux of `u^2 / 2`.
///
/// ```
/// use relaxnn::fvref::godunov_flux_burgers;
/// assert_eq!(godunov_flux_burgers(1.0, 0.0), 0.5);
/// assert_eq!(godunov_flux_burgers(-1.0, 1.0), 0.0);
/// ```
pub fn godunov_flux_burgers(ul: f64, ur: f64) -> f64 {
    if ul > ur {
        let s = 0.5 * (ul + ur);
        if s > 0.0 {
            0.5 * ul * ul
        } else {
            0.5 * ur * ur
        }
    } else if ul > 0.0 {
        0.5 * ul * ul
    } else if ur < 0.0 {
        0.5 * ur * ur
    } else {
        0.0
    }
}

/// Physical flux as a function of the conserved state.
pub fn conserved_flux(kind: SystemKind, q: &[f64]) -> Vec<f64> {
    kind.physical_flux(&kind.primitive(q))
}

fn swe_speeds(q: &[f64], g: f64) -> Result<(f64, f64), FvError> {
    if !(q[0] > 0.0) {
        return Err(FvError::NonPhysical(format!("depth {} is not positive", q[0])));
    }
    let u = q[1] / q[0];
    Ok((u, (g * q[0]).sqrt()))
}

/// HLL flux for shallow water with Davis speed estimates.
pub fn hll_flux_swe(ql: &[f64], qr: &[f64], g: f64) -> Result<[f64; 2], FvError> {
    let kind = SystemKind::ShallowWater { g };
    let (ul, cl) = swe_speeds(ql, g)?;
    let (ur, cr) = swe_speeds(qr, g)?;
    let fl = conserved_flux(kind, ql);
    if ql == qr {
        return Ok([fl[0], fl[1]]);
    }
    let fr = conserved_flux(kind, qr);
    let sl = (ul - cl).min(ur - cr);
    let sr = (ul + cl).max(ur + cr);
    if sl >= 0.0 {
        return Ok([fl[0], fl[1]]);
    }
    if sr <= 0.0 {
        return Ok([fr[0], fr[1]]);
    }
    let hll = |i: usize| (sr * fl[i] - sl * fr[i] + sl * sr * (qr[i] - ql[i])) / (sr - sl);
    Ok([hll(0), hll(1)])
}

struct Gas {
    rho: f64,
    u: f64,
    p: f64,
    e: f64,
    c: f64,
}

fn gas(q: &[f64], gamma: f64) -> Result<Gas, FvError> {
    let rho = q[0];
    if !(rho > 0.0) {
        return Err(FvError::NonPhysical(format!("density {rho} is not positive")));
    }
    let u = q[1] / rho;
    let p = (gamma - 1.0) * (q[2] - 0.5 * rho * u * u);
    if !(p > 0.0) {
        return Err(FvError::NonPhysical(format!("pressure {p} is not positive")));
    }
    Ok(Gas {
        rho,
        u,
        p,
        e: q[2],
        c: (gamma * p / rho).sqrt(),
    })
}

/// HLLC flux for the Euler equations with Davis speed estimates.
pub fn hllc_flux_euler(ql: &[f64], qr: &[f64], gamma: f64) -> Result<[f64; 3], FvError> {
    let kind = SystemKind::Euler { gamma };
    let l = gas(ql, gamma)?;
    let r = gas(qr, gamma)?;
    let fl = conserved_flux(kind, ql);
    if ql == qr {
        return Ok([fl[0], fl[1], fl[2]]);
    }
    let fr = conserved_flux(kind, qr);
    let sl = (l.u - l.c).min(r.u - r.c);
    let sr = (l.u + l.c).max(r.u + r.c);
    if sl >= 0.0 {
        return Ok([fl[0], fl[1], fl[2]]);
    }
    if sr <= 0.0 {
        return Ok([fr[0], fr[1], fr[2]]);
    }
    let ml = l.rho * (sl - l.u);
    let mr = r.rho * (sr - r.u);
    let s_star = (r.p - l.p + l.u * ml - r.u * mr) / (ml - mr);
    let star = |k: &Gas, s: f64, q: &[f64], f: &[f64]| {
        let factor = k.rho * (s - k.u) / (s - s_star);
        let qs = [
            factor,
            factor * s_star,
            factor * (k.e / k.rho + (s_star - k.u) * (s_star + k.p / (k.rho * (s - k.u)))),
        ];
        [
            f[0] + s * (qs[0] - q[0]),
            f[1] + s * (qs[1] - q[1]),
            f[2] + s * (qs[2] - q[2]),
        ]
    };
    Ok(if s_star >= 0.0 {
        star(&l, sl, ql, &fl)
    } else {
        star(&r, sr, qr, &fr)
    })
}

/// Interface flux for any system, written into `out`.
pub fn numerical_flux(kind: SystemKind, ql: &[f64], qr: &[f64], out: &mut [f64]) -> Result<(), FvError> {
    match kind {
        SystemKind::Burgers => out[0] = godunov_flux_burgers(ql[0], qr[0]),
        SystemKind::ShallowWater { g } => out.copy_from_slice(&hll_flux_swe(ql, qr, g)?),
        SystemKind::Euler { gamma } => out.copy_from_slice(&hllc_flux_euler(ql, qr, gamma)?),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EULER: SystemKind = SystemKind::Euler { gamma: 1.4 };
    const SWE: SystemKind = SystemKind::ShallowWater { g: 1.0 };

    #[test]
    fn burgers_cases() {
        assert_eq!(godunov_flux_burgers(1.0, 0.0), 0.5);
        assert_eq!(godunov_flux_burgers(-1.0, 1.0), 0.0);
        assert_eq!(godunov_flux_burgers(0.0, -2.0), 2.0);
        for a in [-2.0, -0.3, 0.0, 0.7] {
            assert_eq!(godunov_flux_burgers(a, a), 0.5 * a * a);
        }
    }

    #[test]
    fn swe_cases() {
        assert_eq!(hll_flux_swe(&[1.0, 0.0], &[1.0, 0.0], 1.0).unwrap(), [0.0, 0.5]);
        let f = hll_flux_swe(&[1.0, 1.0], &[1.0, -1.0], 1.0).unwrap();
        assert_eq!(f[0], 0.0);
        let dam = hll_flux_swe(&[1.0, 0.0], &[0.5, 0.0], 1.0).unwrap();
        // mass flows right, momentum flux between the two hydrostatic values
        assert!(dam[0] > 0.0);
        assert!(dam[1] > 0.125 && dam[1] < 0.5);
        assert!(hll_flux_swe(&[0.0, 0.0], &[1.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn euler_errors() {
        assert!(hllc_flux_euler(&[1.0, 0.0, -1.0], &[1.0, 0.0, 2.5], 1.4).is_err());
        assert!(hllc_flux_euler(&[-1.0, 0.0, 1.0], &[1.0, 0.0, 2.5], 1.4).is_err());
    }

    #[test]
    fn supersonic_upwinding() {
        let q = EULER.conserved(&[1.0, 5.0, 1.0]);
        let q2 = EULER.conserved(&[0.5, 5.0, 0.5]);
        let f = hllc_flux_euler(&q, &q2, 1.4).unwrap();
        assert_eq!(f.to_vec(), conserved_flux(EULER, &q));
    }

    proptest! {
        #[test]
        fn consistency(rho in 0.1f64..3.0, u in -2.0f64..2.0, p in 0.1f64..3.0) {
            let q = EULER.conserved(&[rho, u, p]);
            prop_assert_eq!(hllc_flux_euler(&q, &q, 1.4).unwrap().to_vec(), conserved_flux(EULER, &q));
            let q = SWE.conserved(&[rho, u]);
            prop_assert_eq!(hll_flux_swe(&q, &q, 1.0).unwrap().to_vec(), conserved_flux(SWE, &q));
        }

        #[test]
        fn euler_mirror_symmetry(
            rl in 0.1f64..3.0, ul in -2.0f64..2.0, pl in 0.1f64..3.0,
            rr in 0.1f64..3.0, ur in -2.0f64..2.0, pr in 0.1f64..3.0,
        ) {
            let f = hllc_flux_euler(&EULER.conserved(&[rl, ul, pl]), &EULER.conserved(&[rr, ur, pr]), 1.4).unwrap();
            let m = hllc_flux_euler(&EULER.conserved(&[rr, -ur, pr]), &EULER.conserved(&[rl, -ul, pl]), 1.4).unwrap();
            prop_assert!((f[0] + m[0]).abs() <= 1e-12 * (1.0 + f[0].abs()));
            prop_assert!((f[1] - m[1]).abs() <= 1e-12 * (1.0 + f[1].abs()));
            prop_assert!((f[2] + m[2]).abs() <= 1e-12 * (1.0 + f[2].abs()));
        }
    }
}
