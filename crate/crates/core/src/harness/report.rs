use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{s, Array2, ArrayView2};

use super::HarnessError;
use crate::mlp::batch::BatchForward;
use crate::mlp::ParamSet;
use crate::output::num;

/// Named columns sampled on a space-time grid; row `k * x.len() + j` holds
/// `(times[k], x[j])`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldTable {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub values: Array2<f64>,
}

impl FieldTable {
    pub fn new(names: Vec<String>, times: Vec<f64>, x: Vec<f64>, values: Array2<f64>) -> Result<Self, HarnessError> {
        if values.dim() != (times.len() * x.len(), names.len()) {
            return Err(HarnessError::Mismatch(format!(
                "{:?} values for {} times, {} positions and {} columns",
                values.dim(),
                times.len(),
                x.len(),
                names.len()
            )));
        }
        Ok(Self { names, times, x, values })
    }

    /// The `(t, x)` rows of the grid.
    pub fn points(&self) -> Array2<f64> {
        grid_points(&self.times, &self.x)
    }

    /// Rows of time slice `k`.
    pub fn slice(&self, k: usize) -> ArrayView2<'_, f64> {
        let n = self.x.len();
        self.values.slice(s![k * n..(k + 1) * n, ..])
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string(), "x".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (k, &t) in self.times.iter().enumerate() {
            for (j, &x) in self.x.iter().enumerate() {
                let mut row = vec![num(t), num(x)];
                row.extend(self.values.row(k * self.x.len() + j).iter().map(|&v| num(v)));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        let file = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
        Ok(self.write_csv(std::io::BufWriter::new(file))?)
    }

    /// Reads a table written by [`FieldTable::write_csv`]; rows must be
    /// grouped by time with the same positions in every group.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let bad = |reason: String| HarnessError::Table {
            path: path.to_path_buf(),
            reason,
        };
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.clone();
        if header.len() < 3 || &header[0] != "t" || &header[1] != "x" {
            return Err(bad("expected columns t, x, ...".into()));
        }
        let names: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
        let mut times: Vec<f64> = Vec::new();
        let mut x: Vec<f64> = Vec::new();
        let mut flat = Vec::new();
        let mut rows = 0;
        for rec in r.records() {
            let rec = rec?;
            let vals = rec
                .iter()
                .map(|v| v.parse::<f64>().map_err(|e| bad(format!("{v:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            if vals.len() != header.len() {
                return Err(bad(format!("row {rows} has {} fields", vals.len())));
            }
            if times.last() != Some(&vals[0]) {
                times.push(vals[0]);
            }
            if times.len() == 1 {
                x.push(vals[1]);
            } else if x.get(rows % x.len().max(1)) != Some(&vals[1]) {
                return Err(bad(format!("row {rows} is off the grid")));
            }
            flat.extend_from_slice(&vals[2..]);
            rows += 1;
        }
        if rows != times.len() * x.len() {
            return Err(bad("ragged time groups".into()));
        }
        let values = Array2::from_shape_vec((rows, names.len()), flat).map_err(|e| bad(e.to_string()))?;
        Self::new(names, times, x, values)
    }
}

pub(crate) fn grid_points(times: &[f64], x: &[f64]) -> Array2<f64> {
    let mut p = Array2::zeros((times.len() * x.len(), 2));
    for (k, &t) in times.iter().enumerate() {
        for (j, &xj) in x.iter().enumerate() {
            p[[k * x.len() + j, 0]] = t;
            p[[k * x.len() + j, 1]] = xj;
        }
    }
    p
}

/// `||pred - reference||_2 / ||reference||_2` over all entries.
///
/// ```
/// use ndarray::array;
/// use relaxnn::harness::relative_l2;
///
/// let r = array![[1.0, 0.0], [0.0, 0.0]];
/// assert_eq!(relative_l2(r.view(), r.view()).unwrap(), 0.0);
/// assert_eq!(relative_l2(array![[1.0, 1.0], [0.0, 0.0]].view(), r.view()).unwrap(), 1.0);
/// ```
pub fn relative_l2(pred: ArrayView2<'_, f64>, reference: ArrayView2<'_, f64>) -> Result<f64, HarnessError> {
    if pred.dim() != reference.dim() {
        return Err(HarnessError::Mismatch(format!(
            "prediction {:?} vs reference {:?}",
            pred.dim(),
            reference.dim()
        )));
    }
    let norm = reference.iter().map(|r| r * r).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(HarnessError::ZeroReference);
    }
    let err = pred.iter().zip(reference).map(|(p, r)| (p - r) * (p - r)).sum::<f64>().sqrt();
    Ok(err / norm)
}

/// Errors of a prediction against a reference on the evaluation grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub relative_l2: f64,
    /// Per column; `NaN` where the reference column vanishes.
    pub per_component: Vec<f64>,
    pub prediction: FieldTable,
    pub reference: FieldTable,
    /// `|pred - reference|` on the grid.
    pub abs_error: FieldTable,
}

impl ErrorReport {
    pub fn new(prediction: FieldTable, reference: FieldTable) -> Result<Self, HarnessError> {
        if prediction.names != reference.names || prediction.times != reference.times || prediction.x != reference.x {
            return Err(HarnessError::Mismatch("prediction and reference grids differ".into()));
        }
        let rel = relative_l2(prediction.values.view(), reference.values.view())?;
        let per_component = (0..reference.names.len())
            .map(|c| {
                let col = |a: &Array2<f64>| a.slice(s![.., c..c + 1]).to_owned();
                relative_l2(col(&prediction.values).view(), col(&reference.values).view()).unwrap_or(f64::NAN)
            })
            .collect();
        let abs = (&prediction.values - &reference.values).mapv(f64::abs);
        let abs_error = FieldTable::new(
            reference.names.clone(),
            reference.times.clone(),
            reference.x.clone(),
            abs,
        )?;
        Ok(Self {
            relative_l2: rel,
            per_component,
            prediction,
            reference,
            abs_error,
        })
    }

    /// `metric,value` lines: the stacked relative L2, then one per column.
    pub fn write_summary<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["metric", "value"])?;
        w.write_record(["relative_l2".to_string(), num(self.relative_l2)])?;
        for (name, v) in self.reference.names.iter().zip(&self.per_component) {
            w.write_record([format!("relative_l2_{name}"), num(*v)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One file per time: `x` and predicted, reference and absolute error
    /// columns.
    pub fn write_slice<W: Write>(&self, k: usize, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["x".to_string()];
        for n in &self.reference.names {
            header.extend([format!("{n}_pred"), format!("{n}_ref"), format!("{n}_abs_err")]);
        }
        w.write_record(&header)?;
        let (p, r, e) = (
            self.prediction.slice(k),
            self.reference.slice(k),
            self.abs_error.slice(k),
        );
        for (j, &x) in self.reference.x.iter().enumerate() {
            let mut row = vec![num(x)];
            for c in 0..self.reference.names.len() {
                row.extend([num(p[[j, c]]), num(r[[j, c]]), num(e[[j, c]])]);
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// `report.csv`, `error_field.csv` and `slices/slice_<k>_t<t>.csv` in `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), HarnessError> {
        let create = |p: &Path| fs::File::create(p).map(std::io::BufWriter::new).map_err(|e| HarnessError::io(p, e));
        self.write_summary(create(&dir.join("report.csv"))?)?;
        self.abs_error.save(&dir.join("error_field.csv"))?;
        let slices = dir.join("slices");
        fs::create_dir_all(&slices).map_err(|e| HarnessError::io(&slices, e))?;
        for (k, t) in self.reference.times.iter().enumerate() {
            self.write_slice(k, create(&slices.join(format!("slice_{k}_t{t}.csv")))?)?;
        }
        Ok(())
    }
}

/// Network outputs at the rows of `points` (`n x input_dim`).
pub(crate) fn predict(params: &ParamSet, points: ArrayView2<'_, f64>) -> Result<Array2<f64>, HarnessError> {
    Ok(BatchForward::run(params, points, &[])?.values().to_owned())
}

/// Compares a deterministic solution network with `reference`.
pub fn evaluate(u: &ParamSet, reference: &FieldTable) -> Result<ErrorReport, HarnessError> {
    if u.config().input_dim != 2 || u.config().output_dim != reference.names.len() {
        return Err(HarnessError::Mismatch(format!(
            "network {:?} cannot be compared with reference columns {:?}",
            u.config().dims(),
            reference.names
        )));
    }
    let values = predict(u, reference.points().view())?;
    let prediction = FieldTable::new(reference.names.clone(), reference.times.clone(), reference.x.clone(), values)?;
    ErrorReport::new(prediction, reference.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::MlpConfig;
    use ndarray::array;

    fn table(values: Array2<f64>) -> FieldTable {
        FieldTable::new(vec!["h".into(), "u".into()], vec![0.0, 0.5], vec![-1.0, 1.0], values).unwrap()
    }

    #[test]
    fn relative_l2_cases() {
        let r = array![[1.0, 2.0], [3.0, 4.0]];
        assert_eq!(relative_l2(Array2::zeros((2, 2)).view(), r.view()).unwrap(), 1.0);
        let scaled = relative_l2((&r * 1.1).view(), r.view()).unwrap();
        assert!((scaled - 0.1).abs() < 1e-15);
        // scale covariance
        let a = array![[0.3, -1.0], [2.0, 0.1]];
        let base = relative_l2(a.view(), r.view()).unwrap();
        for c in [-3.0, 1e-3, 7.5] {
            let v = relative_l2((&a * c).view(), (&r * c).view()).unwrap();
            assert!((v - base).abs() < 1e-14 * base);
        }
        assert!(matches!(
            relative_l2(r.view(), Array2::zeros((2, 2)).view()),
            Err(HarnessError::ZeroReference)
        ));
        assert!(relative_l2(r.view(), Array2::zeros((1, 2)).view()).is_err());
    }

    #[test]
    fn identical_fields_have_no_error() {
        let v = Array2::from_shape_fn((4, 2), |(i, j)| (i + 2 * j) as f64 + 0.5);
        let rep = ErrorReport::new(table(v.clone()), table(v)).unwrap();
        assert_eq!(rep.relative_l2, 0.0);
        assert!(rep.abs_error.values.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = table(array![[1.0, 0.1], [2.0, 0.2], [3.0, 1.0 / 3.0], [4.0, -0.4]]);
        let path = dir.path().join("t.csv");
        t.save(&path).unwrap();
        assert_eq!(FieldTable::load(&path).unwrap(), t);
        assert_eq!(t.points()[[2, 0]], 0.5);
        assert_eq!(t.points()[[3, 1]], 1.0);
    }

    #[test]
    fn report_files() {
        let dir = tempfile::tempdir().unwrap();
        let r = table(array![[1.0, 0.0], [1.0, 0.0], [1.0, 1.0], [1.0, 1.0]]);
        let p = table(array![[1.0, 0.0], [1.0, 0.0], [1.0, 1.0], [1.0, 0.0]]);
        let rep = ErrorReport::new(p, r).unwrap();
        assert!((rep.relative_l2 - (1.0f64 / 6.0).sqrt()).abs() < 1e-15);
        assert!((rep.per_component[1] - (0.5f64).sqrt()).abs() < 1e-15);
        rep.save(dir.path()).unwrap();
        let summary = fs::read_to_string(dir.path().join("report.csv")).unwrap();
        assert!(summary.starts_with("metric,value\nrelative_l2,"));
        let slice = fs::read_to_string(dir.path().join("slices/slice_1_t0.5.csv")).unwrap();
        assert!(slice.starts_with("x,h_pred,h_ref,h_abs_err,u_pred,u_ref,u_abs_err\n"));
        assert_eq!(slice.lines().count(), 3);
    }

    #[test]
    fn evaluate_checks_shapes() {
        let net = ParamSet::zeros(MlpConfig::new(2, vec![3], 1).unwrap());
        let r = table(Array2::ones((4, 2)));
        assert!(matches!(evaluate(&net, &r), Err(HarnessError::Mismatch(_))));
        let net = ParamSet::zeros(MlpConfig::new(2, vec![3], 2).unwrap());
        let rep = evaluate(&net, &r).unwrap();
        assert_eq!(rep.relative_l2, 1.0);
    }
}
