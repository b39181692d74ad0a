//! The CLI subcommands as library functions. Each reads an
//! [`ExperimentConfig`] and writes its artefacts under `cfg.out`.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use ndarray::{concatenate, Array2, Axis};

use super::report::{grid_points, predict};
use super::{evaluate, CheckRow, ErrorReport, ExperimentConfig, FieldTable, HarnessError};
use crate::fvref::{solve, Grid1D};
use crate::mlp::ParamSet;
use crate::sampling::PointSets;
use crate::trainer::{train_with, TrainError, TrainOutcome};
use crate::uq::{gauss_legendre, mc_mean_variance, mc_reference, quad_mean_variance, Moments};

pub const HISTORY: &str = "history.jsonl";
pub const U_PARAMS: &str = "u.params";
pub const V_PARAMS: &str = "v.params";
pub const REFERENCE: &str = "reference.csv";
pub const REFERENCE_MOMENTS: &str = "reference_moments.csv";

// Largest tensor grid the quadrature statistics will build.
const MAX_QUAD_NODES: usize = 10_000_000;

fn create_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, HarnessError> {
    fs::File::create(path).map(BufWriter::new).map_err(|e| HarnessError::io(path, e))
}

fn save_params(p: &ParamSet, path: &Path) -> Result<(), HarnessError> {
    p.save(path).map_err(|e| HarnessError::io(path, e))
}

fn load_params(path: &Path) -> Result<ParamSet, HarnessError> {
    if !path.exists() {
        return Err(HarnessError::MissingParams(path.to_path_buf()));
    }
    Ok(ParamSet::load(path)?)
}

/// Cell centres of the evaluation grid.
pub fn evaluation_x(cfg: &ExperimentConfig) -> Result<Vec<f64>, HarnessError> {
    Ok(Grid1D::for_problem(&cfg.problem.spec(), cfg.evaluation.n_cells)?.centers())
}

/// Trains and writes `config.toml`, `points.csv`, `history.jsonl`,
/// `u.params`, `v.params` and periodic `checkpoints/`. A diverged run still
/// leaves its history behind.
pub fn run_train(cfg: &ExperimentConfig) -> Result<TrainOutcome, HarnessError> {
    cfg.validate()?;
    let setup = cfg.setup()?;
    let out = &cfg.out;
    create_dir(out)?;
    fs::write(out.join("config.toml"), cfg.to_toml()?).map_err(|e| HarnessError::io(&out.join("config.toml"), e))?;
    PointSets::sample(&setup.problem, setup.counts, setup.train.seed).write_csv(create(&out.join("points.csv"))?)?;

    let checkpoints = out.join("checkpoints");
    let every = cfg.output.checkpoint_every;
    let log_every = cfg.output.log_every;
    let result = train_with(&setup, |r| {
        let done = r.epoch + 1;
        if log_every > 0 && (done % log_every == 0 || done == 1) {
            eprintln!("epoch {done:>7}  lr {:.3e}  loss {:.6e}", r.record.lr, r.record.loss.total);
        }
        if every > 0 && done % every == 0 {
            let save = || -> Result<(), HarnessError> {
                create_dir(&checkpoints)?;
                save_params(r.u, &checkpoints.join(format!("u_{done}.params")))?;
                if let Some(v) = r.v {
                    save_params(v, &checkpoints.join(format!("v_{done}.params")))?;
                }
                Ok(())
            };
            save().map_err(|e| TrainError::Observer(e.to_string()))?;
        }
        Ok(())
    });
    let history_path = out.join(HISTORY);
    match result {
        Ok(outcome) => {
            let mut w = create(&history_path)?;
            outcome.history.write_jsonl(&mut w).map_err(|e| HarnessError::io(&history_path, e))?;
            save_params(&outcome.u, &out.join(U_PARAMS))?;
            if let Some(v) = &outcome.v {
                save_params(v, &out.join(V_PARAMS))?;
            }
            Ok(outcome)
        }
        Err(TrainError::Diverged { epoch, total, history }) => {
            let mut w = create(&history_path)?;
            history.write_jsonl(&mut w).map_err(|e| HarnessError::io(&history_path, e))?;
            Err(TrainError::Diverged { epoch, total, history }.into())
        }
        Err(e) => Err(e.into()),
    }
}

fn moments_table(prefixes: [&str; 2], names: &[&str], times: &[f64], x: &[f64], m: &Moments) -> Result<FieldTable, HarnessError> {
    let mut cols: Vec<String> = names.iter().map(|n| format!("{}_{n}", prefixes[0])).collect();
    cols.extend(names.iter().map(|n| format!("{}_{n}", prefixes[1])));
    let values = concatenate(Axis(1), &[m.mean.view(), m.variance.view()])
        .map_err(|e| HarnessError::Mismatch(e.to_string()))?;
    FieldTable::new(cols, times.to_vec(), x.to_vec(), values)
}

/// Finite-volume reference on the evaluation grid.
///
/// Deterministic problems: `snapshots.csv` (every reference cell) and
/// `reference.csv` (primitives interpolated to the evaluation grid).
/// Stochastic problems: `reference_moments.csv`, Monte Carlo mean and
/// variance over `reference.samples` solver runs.
pub fn run_reference(cfg: &ExperimentConfig) -> Result<PathBuf, HarnessError> {
    cfg.validate()?;
    let problem = cfg.problem.spec();
    let names = problem.kind.primitive_names();
    let x = evaluation_x(cfg)?;
    let times = &cfg.evaluation.times;
    create_dir(&cfg.out)?;
    if problem.stochastic.is_some() {
        let r = mc_reference(
            &problem,
            cfg.reference.n_cells,
            cfg.reference.cfl,
            times,
            &x,
            cfg.reference.samples,
            cfg.seed,
        )?;
        let path = cfg.out.join(REFERENCE_MOMENTS);
        moments_table(["mean", "var"], names, times, &x, &r.moments)?.save(&path)?;
        return Ok(path);
    }
    let grid = Grid1D::for_problem(&problem, cfg.reference.n_cells)?;
    let sol = solve(&problem, grid, cfg.reference.cfl, times)?;
    sol.write_csv(create(&cfg.out.join("snapshots.csv"))?)?;
    let m = names.len();
    let mut values = Array2::zeros((times.len() * x.len(), m));
    for (k, snap) in sol.snapshots.iter().enumerate() {
        for (j, &xj) in x.iter().enumerate() {
            for (c, v) in snap.cells.interpolate_primitive(xj).into_iter().enumerate() {
                values[[k * x.len() + j, c]] = v;
            }
        }
    }
    let table = FieldTable::new(names.iter().map(|n| n.to_string()).collect(), times.clone(), x, values)?;
    let path = cfg.out.join(REFERENCE);
    table.save(&path)?;
    Ok(path)
}

/// Compares the trained solution network with `reference.csv` and writes
/// `report.csv`, `error_field.csv` and `slices/`.
pub fn run_evaluate(cfg: &ExperimentConfig) -> Result<ErrorReport, HarnessError> {
    cfg.validate()?;
    if cfg.problem.spec().stochastic.is_some() {
        return Err(HarnessError::Config(format!(
            "{} is stochastic; use the uq command",
            cfg.problem
        )));
    }
    let ref_path = cfg.out.join(REFERENCE);
    if !ref_path.exists() {
        return Err(HarnessError::MissingReference(ref_path));
    }
    let reference = FieldTable::load(&ref_path)?;
    let u = load_params(&cfg.out.join(U_PARAMS))?;
    let report = evaluate(&u, &reference)?;
    report.save(&cfg.out)?;
    Ok(report)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct UqOptions {
    /// Train first; otherwise use the saved `u.params`.
    pub train: bool,
}

/// Statistics of a stochastic solution network on the evaluation grid:
/// `uq_mc.csv` (Monte Carlo), `uq_quad.csv` (tensor Gauss–Legendre, when
/// the grid is small enough) and, if `reference_moments.csv` exists,
/// `uq_report.csv` with relative L2 errors of mean and variance.
pub fn run_uq(cfg: &ExperimentConfig, opts: UqOptions) -> Result<Vec<PathBuf>, HarnessError> {
    cfg.validate()?;
    let problem = cfg.problem.spec();
    let dims = problem.stochastic_dim();
    if dims == 0 {
        return Err(HarnessError::Config(format!(
            "{} has no stochastic inputs; use the evaluate command",
            cfg.problem
        )));
    }
    if opts.train {
        run_train(cfg)?;
    }
    let u = load_params(&cfg.out.join(U_PARAMS))?;
    let names = problem.kind.primitive_names();
    let x = evaluation_x(cfg)?;
    let times = &cfg.evaluation.times;
    let points = grid_points(times, &x);

    let mut written = Vec::new();
    let mut estimates = Vec::new();
    let mc = mc_mean_variance(&u, points.view(), cfg.uq.mc_samples, cfg.seed)?;
    let mc = moments_table(["mean", "var"], names, times, &x, &mc)?;
    let path = cfg.out.join("uq_mc.csv");
    mc.save(&path)?;
    written.push(path);
    estimates.push(("mc", mc));

    let q = cfg.uq.quad_points;
    if q > 0 && (q as f64).powi(dims as i32) <= MAX_QUAD_NODES as f64 {
        let rule = gauss_legendre(q);
        let quad = quad_mean_variance(&u, points.view(), rule.tensor(dims))?;
        let quad = moments_table(["mean", "var"], names, times, &x, &quad)?;
        let path = cfg.out.join("uq_quad.csv");
        quad.save(&path)?;
        written.push(path);
        estimates.push(("quad", quad));
    }

    let ref_path = cfg.out.join(REFERENCE_MOMENTS);
    if ref_path.exists() {
        let reference = FieldTable::load(&ref_path)?;
        let m = names.len();
        let mut w = csv::Writer::from_writer(create(&cfg.out.join("uq_report.csv"))?);
        w.write_record(["metric", "value"])?;
        for (label, est) in &estimates {
            if est.names != reference.names || est.x != reference.x || est.times != reference.times {
                return Err(HarnessError::Mismatch(format!("{} does not match the uq grid", ref_path.display())));
            }
            for (part, cols) in [("mean", 0..m), ("variance", m..2 * m)] {
                let pick = |t: &FieldTable| t.values.slice(ndarray::s![.., cols.clone()]).to_owned();
                let rel = super::relative_l2(pick(est).view(), pick(&reference).view()).unwrap_or(f64::NAN);
                w.write_record([format!("relative_l2_{part}_{label}"), crate::output::num(rel)])?;
            }
        }
        w.flush().map_err(|e| HarnessError::io(&ref_path, e))?;
        written.push(cfg.out.join("uq_report.csv"));
    }
    Ok(written)
}

/// Runs both finite-difference suites and writes `grad_check.csv` to `out`.
pub fn run_grad_check(out: &Path, draws: usize, cases: usize, seed: u64) -> Result<Vec<CheckRow>, HarnessError> {
    let mut rows = super::gradient_suite(draws, seed)?;
    rows.extend(super::input_derivative_suite(cases, seed)?);
    create_dir(out)?;
    CheckRow::write_csv(&rows, create(&out.join("grad_check.csv"))?)?;
    Ok(rows)
}

/// Network outputs at the evaluation grid, for inspection.
pub fn prediction_table(cfg: &ExperimentConfig, u: &ParamSet) -> Result<FieldTable, HarnessError> {
    let x = evaluation_x(cfg)?;
    let points = grid_points(&cfg.evaluation.times, &x);
    let names = cfg.problem.spec().kind.primitive_names();
    FieldTable::new(
        names.iter().map(|n| n.to_string()).collect(),
        cfg.evaluation.times.clone(),
        x,
        predict(u, points.view())?,
    )
}
