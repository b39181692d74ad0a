use ndarray::{Array2, ArrayView2};

use super::{LossBreakdown, LossWeights, TrainError, TrainingData};
use crate::autodiff::{NodeId, Tape};
use crate::mlp::batch::BatchForward;
use crate::mlp::{forward, forward_with_input_derivatives, OutputTriple, ParamSet, TapeNet, T, X};
use crate::systems::{flux_mismatch_terms, relaxed_rows, required_derivatives, residual_terms, Mode, ProblemSpec};

/// What a loss evaluation needs besides the parameters.
#[derive(Clone, Copy, Debug)]
pub struct LossContext<'a> {
    pub problem: &'a ProblemSpec,
    pub mode: Mode,
    pub weights: &'a LossWeights,
    pub data: &'a TrainingData,
}

impl LossContext<'_> {
    fn check(&self, u: &ParamSet, v: Option<&ParamSet>) -> Result<&'static [usize], TrainError> {
        let kind = self.problem.kind;
        self.weights.validate(kind, self.mode)?;
        let relaxed = relaxed_rows(kind, self.mode)?;
        let d_in = self.problem.input_dim();
        let u_ok = u.config().input_dim == d_in && u.config().output_dim == kind.num_laws();
        let v_ok = match v {
            None => relaxed.is_empty(),
            Some(v) => !relaxed.is_empty() && v.config().input_dim == d_in && v.config().output_dim == relaxed.len(),
        };
        if !u_ok || !v_ok {
            return Err(TrainError::Setup(format!(
                "networks {:?} / {:?} do not match {:?} on a {}-law system",
                u.config().dims(),
                v.map(|v| v.config().dims()),
                self.mode,
                kind.num_laws()
            )));
        }
        if self.data.points.input_dim() != d_in {
            return Err(TrainError::Setup("point sets do not match the problem's inputs".into()));
        }
        Ok(relaxed)
    }
}

fn mean(tape: &mut Tape, terms: &[NodeId]) -> Result<NodeId, TrainError> {
    if terms.is_empty() {
        return Ok(tape.constant(0.0)?);
    }
    let s = tape.sum(terms)?;
    Ok(tape.scale(1.0 / terms.len() as f64, s)?)
}

/// The loss recorded on `tape` with every network weight as a trainable
/// leaf (solution network first, then the flux network), so that
/// `tape.backward(root).param_vec()` is the gradient over both parameter
/// vectors concatenated. This is the reference implementation; training uses
/// [`loss_and_gradient`].
pub fn total_loss(
    ctx: &LossContext<'_>,
    u: &ParamSet,
    v: Option<&ParamSet>,
    tape: &mut Tape,
) -> Result<(NodeId, LossBreakdown), TrainError> {
    let relaxed = ctx.check(u, v)?;
    let kind = ctx.problem.kind;
    let m = kind.num_laws();
    let (u_wrt, v_wrt) = required_derivatives(kind, ctx.mode)?;
    let u_net = TapeNet::record(u, tape, true)?;
    let v_net = v.map(|v| TapeNet::record(v, tape, true)).transpose()?;

    let mut res_sq = vec![Vec::new(); m];
    let mut mis_sq = vec![Vec::new(); relaxed.len()];
    for row in ctx.data.points.interior.rows() {
        let x = row.to_vec();
        let ut = forward_with_input_derivatives(&u_net, &x, &u_wrt, tape)?;
        let vt = match &v_net {
            Some(net) => forward_with_input_derivatives(net, &x, &v_wrt, tape)?,
            None => Vec::new(),
        };
        for (i, r) in residual_terms(kind, ctx.mode, &ut, &vt, tape)?.into_iter().enumerate() {
            res_sq[i].push(tape.square(r)?);
        }
        let uv: Vec<NodeId> = ut.iter().map(|o| o.value).collect();
        let vv: Vec<NodeId> = vt.iter().map(|o| o.value).collect();
        for (j, d) in flux_mismatch_terms(kind, ctx.mode, &uv, &vv, tape)?.into_iter().enumerate() {
            mis_sq[j].push(tape.square(d)?);
        }
    }

    let fit = |set: ArrayView2<'_, f64>, target: &Array2<f64>, tape: &mut Tape| -> Result<NodeId, TrainError> {
        let mut sq = Vec::with_capacity(set.nrows());
        for (i, row) in set.rows().into_iter().enumerate() {
            let out = forward(&u_net, &row.to_vec(), tape)?;
            let mut parts = Vec::with_capacity(m);
            for (c, &o) in out.iter().enumerate() {
                let g = tape.constant(target[[i, c]])?;
                let d = tape.sub(o, g)?;
                parts.push(tape.square(d)?);
            }
            sq.push(tape.sum(&parts)?);
        }
        mean(tape, &sq)
    };
    let ic = fit(ctx.data.points.initial.view(), &ctx.data.ic_target, tape)?;
    let bc = fit(ctx.data.points.boundary.view(), &ctx.data.bc_target, tape)?;

    let mut weighted = Vec::new();
    let mut breakdown = LossBreakdown {
        residual: Vec::with_capacity(m),
        flux: Vec::with_capacity(relaxed.len()),
        ic: tape.value(ic),
        bc: tape.value(bc),
        total: 0.0,
    };
    for (i, sq) in res_sq.iter().enumerate() {
        let mn = mean(tape, sq)?;
        breakdown.residual.push(tape.value(mn));
        weighted.push(tape.scale(ctx.weights.residual[i], mn)?);
    }
    for (j, sq) in mis_sq.iter().enumerate() {
        let mn = mean(tape, sq)?;
        breakdown.flux.push(tape.value(mn));
        weighted.push(tape.scale(ctx.weights.flux_row(relaxed[j]), mn)?);
    }
    weighted.push(tape.scale(ctx.weights.ic, ic)?);
    weighted.push(tape.scale(ctx.weights.bc, bc)?);
    let root = tape.sum(&weighted)?;
    breakdown.total = tape.value(root);
    Ok((root, breakdown))
}

// Squared misfit of the solution network against fixed targets; returns
// the mean and writes the value seed `2 w / n (u - g)`.
fn data_term(
    u: &ParamSet,
    set: ArrayView2<'_, f64>,
    target: &Array2<f64>,
    weight: f64,
    grad: &mut [f64],
) -> Result<f64, TrainError> {
    let n = set.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let fwd = BatchForward::run(u, set, &[])?;
    let diff = &fwd.values() - target;
    let value = diff.iter().map(|d| d * d).sum::<f64>() / n as f64;
    let mut seed = fwd.zero_seed();
    fwd.seed_values(&mut seed).assign(&(diff * (2.0 * weight / n as f64)));
    fwd.backward(u, &seed, grad);
    Ok(value)
}

/// Loss and its gradient by batched network passes. `grad_u` and `grad_v`
/// are overwritten (`grad_v` may be empty without a flux network).
///
/// The network part runs on whole point sets at once; the pointwise loss
/// head (residuals, flux mismatches and their squares) is recorded on a
/// small tape per point whose leaves are the network outputs and their
/// input derivatives, and its adjoints seed the batched reverse pass.
pub fn loss_and_gradient(
    ctx: &LossContext<'_>,
    u: &ParamSet,
    v: Option<&ParamSet>,
    grad_u: &mut [f64],
    grad_v: &mut [f64],
) -> Result<LossBreakdown, TrainError> {
    let relaxed = ctx.check(u, v)?;
    let kind = ctx.problem.kind;
    let m = kind.num_laws();
    let r = relaxed.len();
    let (u_wrt, v_wrt) = required_derivatives(kind, ctx.mode)?;
    grad_u.fill(0.0);
    grad_v.fill(0.0);

    let interior = ctx.data.points.interior.view();
    let n = interior.nrows();
    let mut res_sum = vec![0.0; m];
    let mut mis_sum = vec![0.0; r];
    if n > 0 {
        let fu = BatchForward::run(u, interior, &u_wrt)?;
        let fv = v.map(|v| BatchForward::run(v, interior, &v_wrt)).transpose()?;
        let mut su = fu.zero_seed();
        let mut sv = fv.as_ref().map(BatchForward::zero_seed);

        let u_val = fu.values();
        let u_dt = fu.derivs(T);
        let u_dx = fu.derivs(X);
        let v_val = fv.as_ref().map(|f| f.values());
        let v_dx = fv.as_ref().and_then(|f| f.derivs(X));
        let res_w: Vec<f64> = ctx.weights.residual.iter().map(|w| w / n as f64).collect();
        let mis_w: Vec<f64> = relaxed.iter().map(|&row| ctx.weights.flux_row(row) / n as f64).collect();

        let mut tape = Tape::with_capacity(256);
        let mut u_ids = Vec::with_capacity(m);
        let mut v_ids = Vec::with_capacity(r);
        // adjoints of (value, d_dt, d_dx) per output for one point
        let mut gu = vec![[0.0; 3]; m];
        let mut gv = vec![[0.0; 2]; r];
        for p in 0..n {
            tape.clear();
            u_ids.clear();
            v_ids.clear();
            for c in 0..m {
                u_ids.push(OutputTriple {
                    value: tape.param(u_val[[p, c]])?,
                    d_dt: u_dt.map(|d| tape.param(d[[p, c]])).transpose()?,
                    d_dx: u_dx.map(|d| tape.param(d[[p, c]])).transpose()?,
                });
            }
            if let Some(vv) = &v_val {
                for c in 0..r {
                    v_ids.push(OutputTriple {
                        value: tape.param(vv[[p, c]])?,
                        d_dt: None,
                        d_dx: v_dx.map(|d| tape.param(d[[p, c]])).transpose()?,
                    });
                }
            }
            let mut terms = Vec::with_capacity(m + r);
            for (i, res) in residual_terms(kind, ctx.mode, &u_ids, &v_ids, &mut tape)?.into_iter().enumerate() {
                let sq = tape.square(res)?;
                res_sum[i] += tape.value(sq);
                terms.push(tape.scale(res_w[i], sq)?);
            }
            let uv: Vec<NodeId> = u_ids.iter().map(|o| o.value).collect();
            let vv: Vec<NodeId> = v_ids.iter().map(|o| o.value).collect();
            for (j, d) in flux_mismatch_terms(kind, ctx.mode, &uv, &vv, &mut tape)?.into_iter().enumerate() {
                let sq = tape.square(d)?;
                mis_sum[j] += tape.value(sq);
                terms.push(tape.scale(mis_w[j], sq)?);
            }
            let root = tape.sum(&terms)?;
            let g = tape.backward(root);
            for (c, o) in u_ids.iter().enumerate() {
                gu[c] = [
                    g.wrt(o.value),
                    o.d_dt.map_or(0.0, |id| g.wrt(id)),
                    o.d_dx.map_or(0.0, |id| g.wrt(id)),
                ];
            }
            for (c, o) in v_ids.iter().enumerate() {
                gv[c] = [g.wrt(o.value), o.d_dx.map_or(0.0, |id| g.wrt(id))];
            }
            for (c, a) in gu.iter().enumerate() {
                fu.seed_values(&mut su)[[p, c]] = a[0];
                if let Some(mut s) = fu.seed_derivs(&mut su, T) {
                    s[[p, c]] = a[1];
                }
                if let Some(mut s) = fu.seed_derivs(&mut su, X) {
                    s[[p, c]] = a[2];
                }
            }
            if let (Some(fv), Some(sv)) = (&fv, sv.as_mut()) {
                for (c, a) in gv.iter().enumerate() {
                    fv.seed_values(sv)[[p, c]] = a[0];
                    if let Some(mut s) = fv.seed_derivs(sv, X) {
                        s[[p, c]] = a[1];
                    }
                }
            }
        }
        fu.backward(u, &su, grad_u);
        if let (Some(fv), Some(sv), Some(v)) = (&fv, &sv, v) {
            fv.backward(v, sv, grad_v);
        }
    }

    let data = ctx.data;
    let ic = data_term(u, data.points.initial.view(), &data.ic_target, ctx.weights.ic, grad_u)?;
    let bc = data_term(u, data.points.boundary.view(), &data.bc_target, ctx.weights.bc, grad_u)?;
    let nf = n.max(1) as f64;
    let mut breakdown = LossBreakdown {
        residual: res_sum.iter().map(|s| s / nf).collect(),
        flux: mis_sum.iter().map(|s| s / nf).collect(),
        ic,
        bc,
        total: 0.0,
    };
    breakdown.total = breakdown.weighted_sum(ctx.weights, relaxed);
    Ok(breakdown)
}
