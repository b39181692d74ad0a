//! First-order Godunov finite-volume solver used as the reference solution.
//!
//! Cells hold conserved averages. Each step takes
//! `dt = cfl * dx / max |wave speed|`, clipped so every requested output time
//! is hit exactly, and applies
//!
//! ```text
//! q_i <- q_i - dt / dx * (F_{i+1/2} - F_{i-1/2})
//! ```
//!
//! with a copy of the edge cell as ghost state on both sides. The fluxes
//! leaving through the two ends are accumulated so that the change of the
//! totals can be checked against them.

mod exact;
mod flux;

pub use exact::{euler_star_state, exact_burgers_riemann, exact_sod, StarState};
pub use flux::{conserved_flux, godunov_flux_burgers, hll_flux_swe, hllc_flux_euler, numerical_flux};

use std::f64::consts::PI;
use std::io::Write;

use ndarray::{Array2, ArrayView1};
use thiserror::Error;

use crate::output::num;
use crate::systems::{InitialCondition, ProblemSpec, SystemKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FvError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("CFL number {0} outside (0, 1]")]
    Cfl(f64),
    #[error("output times must be ascending within [{t0}, {t_end}]: {times:?}")]
    Times { t0: f64, t_end: f64, times: Vec<f64> },
    #[error("non-physical state: {0}")]
    NonPhysical(String),
    #[error("positivity lost at step {step}, t = {t}, cell {cell}: {state:?}")]
    Positivity {
        step: usize,
        t: f64,
        cell: usize,
        state: Vec<f64>,
    },
    #[error("the Riemann problem generates a vacuum")]
    Vacuum,
}

/// A uniform grid of `n_cells` cells on `[x_min, x_max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self, FvError> {
        if n_cells < 2 || !(x_max > x_min) {
            return Err(FvError::Grid(format!("{n_cells} cells on [{x_min}, {x_max}]")));
        }
        Ok(Self { x_min, x_max, n_cells })
    }

    /// The grid spanning a problem's spatial domain.
    pub fn for_problem(problem: &ProblemSpec, n_cells: usize) -> Result<Self, FvError> {
        Self::new(problem.x_min, problem.x_max, n_cells)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }
}

/// Conserved cell averages, `n_cells x num_laws`.
#[derive(Clone, Debug, PartialEq)]
pub struct CellStates {
    pub kind: SystemKind,
    pub grid: Grid1D,
    pub q: Array2<f64>,
}

impl CellStates {
    /// Exact cell averages of the initial data.
    pub fn initial(problem: &ProblemSpec, grid: Grid1D) -> Self {
        let kind = problem.kind;
        let m = kind.num_laws();
        let dx = grid.dx();
        let mut q = Array2::zeros((grid.n_cells, m));
        for i in 0..grid.n_cells {
            let a = grid.x_min + i as f64 * dx;
            let b = a + dx;
            let avg: Vec<f64> = match &problem.initial {
                InitialCondition::Riemann { left, right, interface } => {
                    let ql = kind.conserved(left);
                    let qr = kind.conserved(right);
                    let frac = ((interface - a) / dx).clamp(0.0, 1.0);
                    if frac == 1.0 {
                        ql
                    } else if frac == 0.0 {
                        qr
                    } else {
                        ql.iter().zip(&qr).map(|(l, r)| frac * l + (1.0 - frac) * r).collect()
                    }
                }
                InitialCondition::NegSine => vec![((PI * b).cos() - (PI * a).cos()) / (PI * dx)],
            };
            q.row_mut(i).assign(&ArrayView1::from(&avg));
        }
        Self { kind, grid, q }
    }

    /// `sum_i q_i dx` per component.
    pub fn totals(&self) -> Vec<f64> {
        let dx = self.grid.dx();
        self.q.columns().into_iter().map(|c| c.sum() * dx).collect()
    }

    pub fn primitive(&self, i: usize) -> Vec<f64> {
        self.kind.primitive(self.q.row(i).as_slice().unwrap())
    }

    /// Primitive variables of every cell, `n_cells x num_laws`.
    pub fn primitives(&self) -> Array2<f64> {
        let mut out = Array2::zeros(self.q.raw_dim());
        for i in 0..self.grid.n_cells {
            out.row_mut(i).assign(&ArrayView1::from(&self.primitive(i)));
        }
        out
    }

    /// Primitive state at `x` by linear interpolation between cell centres
    /// (constant beyond the outermost centres).
    pub fn interpolate_primitive(&self, x: f64) -> Vec<f64> {
        let n = self.grid.n_cells;
        let s = (x - self.grid.x_min) / self.grid.dx() - 0.5;
        if s <= 0.0 {
            return self.primitive(0);
        }
        if s >= (n - 1) as f64 {
            return self.primitive(n - 1);
        }
        let i = s.floor() as usize;
        let w = s - i as f64;
        let (a, b) = (self.primitive(i), self.primitive(i + 1));
        a.iter().zip(&b).map(|(a, b)| (1.0 - w) * a + w * b).collect()
    }

    fn check_physical(&self, step: usize, t: f64) -> Result<(), FvError> {
        if matches!(self.kind, SystemKind::Burgers) {
            return Ok(());
        }
        for i in 0..self.grid.n_cells {
            let prim = self.primitive(i);
            if !self.kind.is_physical(&prim) {
                return Err(FvError::Positivity {
                    step,
                    t,
                    cell: i,
                    state: prim,
                });
            }
        }
        Ok(())
    }
}

/// Cell states at one output time.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub cells: CellStates,
    /// `int_0^t (F_left - F_right) dt`, the net inflow through both ends.
    pub boundary_inflow: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub initial_totals: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub steps: usize,
}

impl Solution {
    /// Snapshot at exactly `t`, if one was requested.
    pub fn at(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| s.t == t)
    }

    /// Largest relative deviation, over snapshots and components, of the
    /// totals from `initial + boundary inflow`. Components with zero total
    /// are measured absolutely.
    pub fn conservation_drift(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for s in &self.snapshots {
            for ((now, start), inflow) in s.cells.totals().iter().zip(&self.initial_totals).zip(&s.boundary_inflow) {
                let expected = start + inflow;
                let scale = expected.abs().max(start.abs()).max(1.0);
                worst = worst.max((now - expected).abs() / scale);
            }
        }
        worst
    }

    /// Writes all snapshots as CSV: `t, x`, conserved columns, primitive
    /// columns.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let Some(first) = self.snapshots.first() else {
            return w.flush().map_err(Into::into);
        };
        let kind = first.cells.kind;
        let mut header = vec!["t".to_string(), "x".to_string()];
        header.extend(kind.conserved_names().iter().map(|n| format!("q_{n}")));
        header.extend(kind.primitive_names().iter().map(|n| n.to_string()));
        w.write_record(&header)?;
        for s in &self.snapshots {
            for i in 0..s.cells.grid.n_cells {
                let mut row = vec![num(s.t), num(s.cells.grid.center(i))];
                row.extend(s.cells.q.row(i).iter().map(|&v| num(v)));
                row.extend(s.cells.primitive(i).into_iter().map(num));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

const MAX_STEPS: usize = 10_000_000;

/// Runs the Godunov scheme from `problem.t0` and records the state at each
/// of `t_outputs`.
pub fn solve(problem: &ProblemSpec, grid: Grid1D, cfl: f64, t_outputs: &[f64]) -> Result<Solution, FvError> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(FvError::Cfl(cfl));
    }
    let (t0, t_end) = (problem.t0, problem.t_end);
    let ascending = t_outputs.windows(2).all(|w| w[0] < w[1]);
    let inside = t_outputs.iter().all(|&t| t >= t0 && t <= t_end);
    if !ascending || !inside {
        return Err(FvError::Times {
            t0,
            t_end,
            times: t_outputs.to_vec(),
        });
    }

    let kind = problem.kind;
    let m = kind.num_laws();
    let n = grid.n_cells;
    let dx = grid.dx();
    let mut cells = CellStates::initial(problem, grid);
    cells.check_physical(0, t0)?;
    let initial_totals = cells.totals();

    let mut flux = vec![0.0; (n + 1) * m];
    let mut inflow = vec![0.0; m];
    let mut snapshots = Vec::with_capacity(t_outputs.len());
    let mut t = t0;
    let mut step = 0;
    for &target in t_outputs {
        while t < target {
            if step >= MAX_STEPS {
                return Err(FvError::Grid(format!("no convergence to t = {target} in {MAX_STEPS} steps")));
            }
            let q = cells.q.as_slice().unwrap();
            let speed = (0..n)
                .map(|i| kind.max_wave_speed(&kind.primitive(&q[i * m..(i + 1) * m])))
                .fold(0.0, f64::max);
            let remaining = target - t;
            let dt = if speed > 0.0 { (cfl * dx / speed).min(remaining) } else { remaining };

            for j in 0..=n {
                let l = j.saturating_sub(1);
                let r = j.min(n - 1);
                numerical_flux(
                    kind,
                    &q[l * m..(l + 1) * m],
                    &q[r * m..(r + 1) * m],
                    &mut flux[j * m..(j + 1) * m],
                )?;
            }
            let q = cells.q.as_slice_mut().unwrap();
            let ratio = dt / dx;
            for i in 0..n {
                for c in 0..m {
                    q[i * m + c] -= ratio * (flux[(i + 1) * m + c] - flux[i * m + c]);
                }
            }
            for c in 0..m {
                inflow[c] += dt * (flux[c] - flux[n * m + c]);
            }
            step += 1;
            t = if dt == remaining { target } else { t + dt };
            cells.check_physical(step, t)?;
        }
        snapshots.push(Snapshot {
            t: target,
            cells: cells.clone(),
            boundary_inflow: inflow.clone(),
        });
    }
    Ok(Solution {
        initial_totals,
        snapshots,
        steps: step,
    })
}

/// Discrete L1 norm `sum |a_i - b_i| dx` of one component.
pub fn l1_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>, dx: f64) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum::<f64>() * dx
}

/// Averages pairs of cells, mapping a `2n`-cell field onto `n` cells.
pub fn coarsen(q: &Array2<f64>) -> Array2<f64> {
    let n = q.nrows() / 2;
    Array2::from_shape_fn((n, q.ncols()), |(i, c)| 0.5 * (q[[2 * i, c]] + q[[2 * i + 1, c]]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::ProblemId;

    #[test]
    fn constant_state_stays_constant() {
        let mut p = ProblemId::EulerSod.spec();
        p.initial = InitialCondition::Riemann {
            left: vec![0.8, 0.3, 1.2],
            right: vec![0.8, 0.3, 1.2],
            interface: 0.0,
        };
        let grid = Grid1D::for_problem(&p, 100).unwrap();
        let sol = solve(&p, grid, 0.5, &[0.1, 0.4]).unwrap();
        let q0 = CellStates::initial(&p, grid).q;
        for s in &sol.snapshots {
            let diff = (&s.cells.q - &q0).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
            assert!(diff < 1e-14, "{diff}");
        }
    }

    #[test]
    fn output_times_are_hit_exactly() {
        let p = ProblemId::BurgersSine.spec();
        let grid = Grid1D::for_problem(&p, 50).unwrap();
        let times = [0.0, 0.1, 0.33, 1.0];
        let sol = solve(&p, grid, 0.5, &times).unwrap();
        let got: Vec<f64> = sol.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(got, times);
        assert_eq!(sol.snapshots[0].cells, CellStates::initial(&p, grid));
    }

    #[test]
    fn rejects_bad_arguments() {
        let p = ProblemId::BurgersRiemann.spec();
        let grid = Grid1D::for_problem(&p, 10).unwrap();
        assert_eq!(solve(&p, grid, 0.0, &[0.5]), Err(FvError::Cfl(0.0)));
        assert!(matches!(solve(&p, grid, 0.5, &[0.5, 0.2]), Err(FvError::Times { .. })));
        assert!(matches!(solve(&p, grid, 0.5, &[2.0]), Err(FvError::Times { .. })));
        assert!(Grid1D::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn initial_averages() {
        let mut p = ProblemId::BurgersRiemann.spec();
        p.initial = InitialCondition::Riemann {
            left: vec![1.0],
            right: vec![0.0],
            interface: 0.25 * 1.2 / 4.0,
        };
        // 4 cells of width 0.3 on [-0.6, 0.6]; interface a quarter into cell 2
        let c = CellStates::initial(&p, Grid1D::for_problem(&p, 4).unwrap());
        let col: Vec<f64> = c.q.column(0).to_vec();
        assert_eq!(&col[..2], &[1.0, 1.0]);
        assert!((col[2] - 0.25).abs() < 1e-12);
        assert_eq!(col[3], 0.0);

        let sine = ProblemId::BurgersSine.spec();
        let c = CellStates::initial(&sine, Grid1D::for_problem(&sine, 2).unwrap());
        assert!((c.q[[0, 0]] - 2.0 / PI).abs() < 1e-15);
        assert!((c.q[[1, 0]] + 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn interpolation() {
        let p = ProblemId::BurgersSine.spec();
        let c = CellStates::initial(&p, Grid1D::for_problem(&p, 4).unwrap());
        let (a, b) = (c.q[[1, 0]], c.q[[2, 0]]);
        assert!((c.interpolate_primitive(0.0)[0] - 0.5 * (a + b)).abs() < 1e-15);
        assert_eq!(c.interpolate_primitive(-1.0)[0], c.q[[0, 0]]);
        assert_eq!(c.interpolate_primitive(1.0)[0], c.q[[3, 0]]);
    }

    #[test]
    fn csv_layout() {
        let p = ProblemId::SweDam.spec();
        let sol = solve(&p, Grid1D::for_problem(&p, 3).unwrap(), 0.5, &[0.0]).unwrap();
        let mut buf = Vec::new();
        sol.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,x,q_h,q_hu,h,u");
        assert_eq!(lines.count(), 3);
    }
}
