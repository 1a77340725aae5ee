use crate::error::{Error, Result};
use crate::ngm::{step_grads, NetConfig, NetParams, Sample};
use crate::numerics::relative_error;
use crate::scalar::Scalar;

/// Relative-error floor, in units of `max(1, max |analytic gradient|)`.
/// Central differences of a loss `L` carry rounding noise of a few ulps of
/// `L` divided by `2h`, so entries whose true gradient is zero cannot be
/// resolved below that scale.
pub const GRAD_CHECK_FLOOR: f64 = 1e-6;

/// Central differences are taken at `h * s` for each of these factors and
/// the closest one counts. A large step can straddle a ReLU kink and a
/// small one drowns in rounding noise; a wrong gradient disagrees at all
/// of them.
pub const STEP_FACTORS: [f64; 3] = [10.0, 1.0, 0.1];

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_err: f64,
    /// Absolute floor actually used.
    pub floor: f64,
    /// Entries whose best step was not `h`.
    pub off_step: usize,
    /// Parameter block and flat offset of the worst entry.
    pub worst: Option<(String, usize)>,
}

/// Compares tape gradients of `loss(params)` with central differences of
/// step `h` over every scalar parameter.
pub fn check_param_grads<T: Scalar>(
    params: &NetParams<T>,
    mut loss_and_grads: impl FnMut(&NetParams<T>) -> Result<(f64, Vec<T>)>,
    h: f64,
) -> Result<GradCheckReport> {
    if !(h > 0.0) {
        return Err(Error::Invalid(format!("finite-difference step {h}")));
    }
    let (_, analytic) = loss_and_grads(params)?;
    let x0 = params.flatten();
    if analytic.len() != x0.len() {
        return Err(Error::Shape(format!("{} gradients for {} parameters", analytic.len(), x0.len())));
    }
    let scale = analytic.iter().fold(1.0f64, |m, v| m.max(v.as_f64().abs()));
    let mut report = GradCheckReport {
        checked: x0.len(),
        max_rel_err: 0.0,
        floor: GRAD_CHECK_FLOOR * scale,
        off_step: 0,
        worst: None,
    };
    let mut offsets = Vec::with_capacity(params.len());
    let mut acc = 0;
    for m in params.values() {
        offsets.push(acc);
        acc += m.data().len();
    }

    let mut probe = params.clone();
    let mut x = x0.clone();
    let mut eval = |x: &mut Vec<T>, i: usize, d: f64| -> Result<f64> {
        x[i] = x0[i] + T::lit(d);
        probe.assign_flat(x)?;
        let l = loss_and_grads(&probe)?.0;
        x[i] = x0[i];
        Ok(l)
    };
    for i in 0..x0.len() {
        let mut best = (f64::INFINITY, 1.0);
        for factor in STEP_FACTORS {
            let step = h * factor;
            let central = (eval(&mut x, i, step)? - eval(&mut x, i, -step)?) / (2.0 * step);
            let e = relative_error(analytic[i].as_f64(), central, report.floor);
            if e < best.0 {
                best = (e, factor);
            }
        }
        if best.1 != 1.0 {
            report.off_step += 1;
        }
        if best.0 > report.max_rel_err {
            report.max_rel_err = best.0;
            let block = offsets.partition_point(|&o| o <= i) - 1;
            report.worst = Some((params.names()[block].clone(), i - offsets[block]));
        }
    }
    Ok(report)
}

/// Gradient check of the training loss of one sample.
pub fn check_sample_grads<T: Scalar>(sample: &Sample<T>, params: &NetParams<T>, cfg: &NetConfig, h: f64) -> Result<GradCheckReport> {
    check_param_grads(
        params,
        |p| {
            let (l, g, _) = step_grads(sample, p, cfg)?;
            Ok((l, g.iter().flat_map(|m| m.data().iter().copied()).collect()))
        },
        h,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tape;

    fn quadratic_loss(p: &NetParams<f64>, skew: f64) -> Result<(f64, Vec<f64>)> {
        let mut tape = Tape::new();
        let vars: Vec<_> = p.values().iter().map(|m| tape.leaf(m.clone())).collect();
        let mut total = None;
        for &v in &vars {
            let sq = tape.mul(v, v)?;
            let r = tape.relu(sq);
            let s = tape.sum(r);
            total = Some(match total {
                Some(t) => tape.add(t, s)?,
                None => s,
            });
        }
        let out = total.unwrap();
        tape.backward(out)?;
        let mut g: Vec<f64> = vars.iter().flat_map(|&v| tape.grad_or_zero(v).data().to_vec()).collect();
        g[0] *= skew;
        Ok((tape.value(out)[(0, 0)], g))
    }

    #[test]
    fn exact_gradients_pass_and_skewed_ones_fail() {
        let cfg = NetConfig {
            num_layers: 1,
            channels: 2,
            ..NetConfig::default()
        };
        let p = NetParams::<f64>::init(&cfg, 3).unwrap();
        let ok = check_param_grads(&p, |q| quadratic_loss(q, 1.0), 1e-5).unwrap();
        assert!(ok.max_rel_err < 1e-8, "{ok:?}");
        let bad = check_param_grads(&p, |q| quadratic_loss(q, 1.01), 1e-5).unwrap();
        assert!(bad.max_rel_err > 5e-3, "{bad:?}");
        assert_eq!(bad.worst.as_ref().map(|w| w.1), Some(0));
    }
}
