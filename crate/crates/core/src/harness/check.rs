//! Finite-difference verification of the gradients used in training.

use std::fmt;
use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::HarnessError;
use crate::autodiff::{central_difference, GradCheckReport, Tape};
use crate::mlp::batch::BatchForward;
use crate::mlp::{eval, forward_with_input_derivatives, MlpConfig, ParamSet, TapeNet, T, X};
use crate::output::num;
use crate::rng::{self, Stream};
use crate::sampling::{PointCounts, PointSets};
use crate::systems::{relaxed_rows, Mode, ProblemId, RelaxType};
use crate::trainer::{loss_and_gradient, LossContext, LossWeights, TrainingData};

/// Parameter-gradient step and tolerances.
pub const LOSS_STEP: f64 = 1e-6;
pub const LOSS_RTOL: f64 = 1e-5;
/// Input-derivative step and tolerance.
pub const INPUT_STEP: f64 = 1e-5;
pub const INPUT_RTOL: f64 = 1e-6;
/// Components smaller than this are compared absolutely with [`ABS_TOL`]:
/// there the finite-difference rounding error, not the gradient, dominates.
pub const FLOOR: f64 = 1e-3;
pub const ABS_TOL: f64 = 1e-8;

/// One term family of the loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossFamily {
    Residual(usize),
    Flux(usize),
    Ic,
    Bc,
}

impl fmt::Display for LossFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Residual(i) => write!(f, "residual{i}"),
            Self::Flux(i) => write!(f, "flux{i}"),
            Self::Ic => write!(f, "ic"),
            Self::Bc => write!(f, "bc"),
        }
    }
}

/// Outcome of one finite-difference comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub suite: String,
    pub case: usize,
    /// Over components at or above [`FLOOR`].
    pub max_rel_dev: f64,
    /// Over components below [`FLOOR`].
    pub max_abs_dev: f64,
    pub passed: bool,
}

impl CheckRow {
    fn new(suite: String, case: usize, report: &GradCheckReport, rtol: f64) -> Self {
        let max_rel_dev = report.max_rel_dev_above(FLOOR);
        let max_abs_dev = report.max_abs_dev_below(FLOOR);
        Self {
            suite,
            case,
            max_rel_dev,
            max_abs_dev,
            passed: report.passes(rtol, FLOOR, ABS_TOL),
        }
    }

    pub fn write_csv<W: Write>(rows: &[CheckRow], out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["suite", "case", "max_rel_dev", "max_abs_dev", "passed"])?;
        for r in rows {
            w.write_record([
                r.suite.clone(),
                r.case.to_string(),
                num(r.max_rel_dev),
                num(r.max_abs_dev),
                r.passed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn random_net(dims: &[usize], rng: &mut ChaCha20Rng) -> ParamSet {
    let cfg = MlpConfig::from_dims(dims).expect("valid test shape");
    let mut p = ParamSet::zeros(cfg);
    for w in p.as_mut_slice() {
        *w = rng.random_range(-1.0..1.0);
    }
    p
}

/// Parameter gradients of each loss family against central differences, on
/// `[2, 8, 8, m]` solution and `[2, 8, 8, r]` flux networks, for Burgers
/// (relaxed) and Euler (energy relaxed), `draws` random draws each.
pub fn gradient_suite(draws: usize, seed: u64) -> Result<Vec<CheckRow>, HarnessError> {
    let cases = [
        (ProblemId::BurgersRiemann, Mode::Relax(RelaxType::Type1)),
        (ProblemId::EulerSod, Mode::Relax(RelaxType::Type3)),
    ];
    let counts = PointCounts {
        interior: 6,
        initial: 3,
        boundary: 2,
    };
    let mut rows = Vec::new();
    for (id, mode) in cases {
        let problem = id.spec();
        let m = problem.kind.num_laws();
        let relaxed = relaxed_rows(problem.kind, mode)?;
        let mut families: Vec<LossFamily> = (0..m).map(LossFamily::Residual).collect();
        families.extend(relaxed.iter().map(|&r| LossFamily::Flux(r)));
        families.extend([LossFamily::Ic, LossFamily::Bc]);
        let mut rng = rng::stream(seed, Stream::Check);
        for draw in 0..draws {
            let u = random_net(&[2, 8, 8, m], &mut rng);
            let v = random_net(&[2, 8, 8, relaxed.len()], &mut rng);
            let point_seed = rng.random::<u64>();
            let data = TrainingData::new(&problem, PointSets::sample(&problem, counts, point_seed))?;
            for family in &families {
                let mut weights = LossWeights {
                    residual: vec![0.0; m],
                    flux: vec![0.0; m],
                    ic: 0.0,
                    bc: 0.0,
                };
                match *family {
                    LossFamily::Residual(i) => weights.residual[i] = 1.0,
                    LossFamily::Flux(i) => weights.flux[i] = 1.0,
                    LossFamily::Ic => weights.ic = 1.0,
                    LossFamily::Bc => weights.bc = 1.0,
                }
                let ctx = LossContext {
                    problem: &problem,
                    mode,
                    weights: &weights,
                    data: &data,
                };
                let mut gu = vec![0.0; u.len()];
                let mut gv = vec![0.0; v.len()];
                loss_and_gradient(&ctx, &u, Some(&v), &mut gu, &mut gv)?;
                gu.extend(gv);
                let mut flat = u.as_slice().to_vec();
                flat.extend_from_slice(v.as_slice());
                let nu = u.len();
                let (mut su, mut sv) = (vec![0.0; nu], vec![0.0; v.len()]);
                let numeric = central_difference(
                    |x| {
                        let uu = ParamSet::from_vec(u.config().clone(), x[..nu].to_vec()).expect("same shape");
                        let vv = ParamSet::from_vec(v.config().clone(), x[nu..].to_vec()).expect("same shape");
                        loss_and_gradient(&ctx, &uu, Some(&vv), &mut su, &mut sv).map_or(f64::NAN, |b| b.total)
                    },
                    &flat,
                    LOSS_STEP,
                );
                let report = GradCheckReport::new(gu, numeric);
                rows.push(CheckRow::new(format!("{id}/{family}"), draw, &report, LOSS_RTOL));
            }
        }
    }
    Ok(rows)
}

/// Input derivatives of random networks, from the tape and from the batched
/// engine, against central differences of the plain forward pass.
pub fn input_derivative_suite(cases: usize, seed: u64) -> Result<Vec<CheckRow>, HarnessError> {
    let mut rng = rng::stream_raw(seed, Stream::Check as u64 + 1);
    let mut rows = Vec::new();
    for case in 0..cases {
        let depth = rng.random_range(1..=3);
        let mut dims = vec![2];
        dims.extend((0..depth).map(|_| rng.random_range(1..=8)));
        dims.push(rng.random_range(1..=3));
        let p = random_net(&dims, &mut rng);
        let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let out = dims[dims.len() - 1];

        let mut tape = Tape::new();
        let net = TapeNet::record(&p, &mut tape, false)?;
        let triples = forward_with_input_derivatives(&net, &x, &[T, X], &mut tape)?;
        let batch = BatchForward::run(&p, ndarray::aview2(&[x]), &[T, X])?;
        let (bt, bx) = (batch.derivs(T).expect("requested"), batch.derivs(X).expect("requested"));

        let mut tape_d = Vec::with_capacity(2 * out);
        let mut batch_d = Vec::with_capacity(2 * out);
        let mut numeric = Vec::with_capacity(2 * out);
        for c in 0..out {
            let fd = central_difference(|y| eval(&p, y)[c], &x, INPUT_STEP);
            let tr = triples[c];
            tape_d.extend([tape.value(tr.d_dt.expect("requested")), tape.value(tr.d_dx.expect("requested"))]);
            batch_d.extend([bt[[0, c]], bx[[0, c]]]);
            numeric.extend(fd);
        }
        let tape_report = GradCheckReport::new(tape_d, numeric.clone());
        let batch_report = GradCheckReport::new(batch_d, numeric);
        rows.push(CheckRow::new(format!("input/tape/{dims:?}"), case, &tape_report, INPUT_RTOL));
        rows.push(CheckRow::new(format!("input/batch/{dims:?}"), case, &batch_report, INPUT_RTOL));
    }
    Ok(rows)
}
