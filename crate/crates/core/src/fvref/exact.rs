//! Exact Riemann solutions used as oracles.

use super::FvError;

/// Entropy solution of the Burgers Riemann problem with states `ul | ur`
/// at `x = 0`.
///
/// ```
/// use relaxnn::fvref::exact_burgers_riemann;
/// assert_eq!(exact_burgers_riemann(1.0, 0.0, 0.1, 0.4), 1.0);
/// assert_eq!(exact_burgers_riemann(1.0, 0.0, 0.3, 0.4), 0.0);
/// assert_eq!(exact_burgers_riemann(0.0, 1.0, 0.2, 0.4), 0.5);
/// ```
pub fn exact_burgers_riemann(ul: f64, ur: f64, x: f64, t: f64) -> f64 {
    assert!(t > 0.0, "the Riemann solution is self-similar only for t > 0");
    let xi = x / t;
    if ul > ur {
        if xi <= 0.5 * (ul + ur) {
            ul
        } else {
            ur
        }
    } else if xi <= ul {
        ul
    } else if xi >= ur {
        ur
    } else {
        xi
    }
}

/// Pressure and velocity in the star region of an Euler Riemann problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarState {
    pub p: f64,
    pub u: f64,
}

// f_K(p) and its derivative for one side.
fn pressure_function(p: f64, rho: f64, pk: f64, c: f64, gamma: f64) -> (f64, f64) {
    if p > pk {
        let a = 2.0 / ((gamma + 1.0) * rho);
        let b = (gamma - 1.0) / (gamma + 1.0) * pk;
        let root = (a / (p + b)).sqrt();
        (
            (p - pk) * root,
            root * (1.0 - 0.5 * (p - pk) / (b + p)),
        )
    } else {
        let ex = (gamma - 1.0) / (2.0 * gamma);
        let ratio = p / pk;
        (
            2.0 * c / (gamma - 1.0) * (ratio.powf(ex) - 1.0),
            ratio.powf(-(gamma + 1.0) / (2.0 * gamma)) / (rho * c),
        )
    }
}

/// Solves for the star state by safeguarded Newton iteration on the
/// pressure function. States are primitive `(rho, u, p)`.
pub fn euler_star_state(left: &[f64], right: &[f64], gamma: f64) -> Result<StarState, FvError> {
    let (rl, ul, pl) = (left[0], left[1], left[2]);
    let (rr, ur, pr) = (right[0], right[1], right[2]);
    if !(rl > 0.0 && pl > 0.0 && rr > 0.0 && pr > 0.0) {
        return Err(FvError::NonPhysical("Riemann states need positive density and pressure".into()));
    }
    let cl = (gamma * pl / rl).sqrt();
    let cr = (gamma * pr / rr).sqrt();
    let du = ur - ul;
    if 2.0 * (cl + cr) / (gamma - 1.0) <= du {
        return Err(FvError::Vacuum);
    }
    let g = |p: f64| {
        let (fl, dl) = pressure_function(p, rl, pl, cl, gamma);
        let (fr, dr) = pressure_function(p, rr, pr, cr, gamma);
        (fl + fr + du, dl + dr)
    };

    // g is increasing; bracket the root, then Newton with bisection fallback.
    let mut lo = 0.0;
    let mut hi = pl.max(pr);
    while g(hi).0 < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut p = 0.5 * (pl + pr);
    if !(p > lo && p < hi) {
        p = 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let (v, d) = g(p);
        if v == 0.0 {
            break;
        }
        if v < 0.0 {
            lo = p;
        } else {
            hi = p;
        }
        let mut next = p - v / d;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - p).abs() <= 4.0 * f64::EPSILON * next;
        p = next;
        if done || hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let (fl, _) = pressure_function(p, rl, pl, cl, gamma);
    let (fr, _) = pressure_function(p, rr, pr, cr, gamma);
    Ok(StarState {
        p,
        u: 0.5 * (ul + ur) + 0.5 * (fr - fl),
    })
}

/// Exact solution of the Euler Riemann problem (interface at `x = 0`) at
/// `(x, t)`, in primitive variables `(rho, u, p)`.
pub fn exact_sod(left: &[f64], right: &[f64], gamma: f64, x: f64, t: f64) -> Result<Vec<f64>, FvError> {
    assert!(t > 0.0, "the Riemann solution is self-similar only for t > 0");
    let star = euler_star_state(left, right, gamma)?;
    let s = x / t;
    let gm = (gamma - 1.0) / (gamma + 1.0);
    // Mirror so that the sampled side is always the left one.
    let (side, sign) = if s <= star.u {
        (left, 1.0)
    } else {
        (right, -1.0)
    };
    let (rho, u, p) = (side[0], sign * side[1], side[2]);
    let (us, s) = (sign * star.u, sign * s);
    let c = (gamma * p / rho).sqrt();
    let out = |r: f64, v: f64, pp: f64| vec![r, sign * v, pp];

    if star.p > p {
        // shock
        let ratio = star.p / p;
        let speed = u - c * ((gamma + 1.0) / (2.0 * gamma) * ratio + (gamma - 1.0) / (2.0 * gamma)).sqrt();
        if s <= speed {
            Ok(out(rho, u, p))
        } else {
            let r = rho * (ratio + gm) / (gm * ratio + 1.0);
            Ok(out(r, us, star.p))
        }
    } else {
        // rarefaction
        let head = u - c;
        let c_star = c * (star.p / p).powf((gamma - 1.0) / (2.0 * gamma));
        let tail = us - c_star;
        if s <= head {
            Ok(out(rho, u, p))
        } else if s >= tail {
            Ok(out(rho * (star.p / p).powf(1.0 / gamma), us, star.p))
        } else {
            let k = 2.0 / (gamma + 1.0) + gm / c * (u - s);
            let r = rho * k.powf(2.0 / (gamma - 1.0));
            let v = 2.0 / (gamma + 1.0) * (c + (gamma - 1.0) / 2.0 * u + s);
            Ok(out(r, v, p * k.powf(2.0 * gamma / (gamma - 1.0))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SOD_L: [f64; 3] = [1.0, 0.0, 1.0];
    const SOD_R: [f64; 3] = [0.125, 0.0, 0.1];

    #[test]
    fn sod_star_values() {
        let s = euler_star_state(&SOD_L, &SOD_R, 1.4).unwrap();
        // standard reference values of the Sod star region
        assert!((s.p - 0.303_130).abs() < 1e-5, "{}", s.p);
        assert!((s.u - 0.927_453).abs() < 1e-5, "{}", s.u);
    }

    #[test]
    fn star_pressure_is_a_root() {
        let s = euler_star_state(&SOD_L, &SOD_R, 1.4).unwrap();
        let cl = (1.4f64).sqrt();
        let cr = (1.4 * 0.1 / 0.125f64).sqrt();
        let (fl, _) = pressure_function(s.p, 1.0, 1.0, cl, 1.4);
        let (fr, _) = pressure_function(s.p, 0.125, 0.1, cr, 1.4);
        assert!((fl + fr).abs() < 1e-12, "{}", fl + fr);
    }

    #[test]
    fn sod_regions() {
        let t = 0.2;
        assert_eq!(exact_sod(&SOD_L, &SOD_R, 1.4, -0.5, t).unwrap(), SOD_L.to_vec());
        assert_eq!(exact_sod(&SOD_L, &SOD_R, 1.4, 0.5, t).unwrap(), SOD_R.to_vec());
        // between contact and shock: rho ~ 0.26557, left of contact ~ 0.42632
        let a = exact_sod(&SOD_L, &SOD_R, 1.4, 0.25, t).unwrap();
        assert!((a[0] - 0.265_574).abs() < 1e-5, "{a:?}");
        let b = exact_sod(&SOD_L, &SOD_R, 1.4, 0.12, t).unwrap();
        assert!((b[0] - 0.426_319).abs() < 1e-5, "{b:?}");
        assert!((b[2] - 0.303_130).abs() < 1e-5);
    }

    #[test]
    fn constant_data_and_vacuum() {
        let s = [0.7, 0.3, 1.1];
        for x in [-1.0, 0.0, 0.2, 1.0] {
            let v = exact_sod(&s, &s, 1.4, x, 0.3).unwrap();
            for (a, b) in v.iter().zip(&s) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert_eq!(
            euler_star_state(&[1.0, -10.0, 1.0], &[1.0, 10.0, 1.0], 1.4),
            Err(FvError::Vacuum)
        );
    }

    #[test]
    fn burgers_fan() {
        assert_eq!(exact_burgers_riemann(0.0, 1.0, 0.5, 1.0), 0.5);
        assert_eq!(exact_burgers_riemann(0.0, 1.0, -0.1, 1.0), 0.0);
        assert_eq!(exact_burgers_riemann(0.0, 1.0, 1.1, 1.0), 1.0);
    }
}
