use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::math::{ln, xlnx_neg};

use super::{Channel, Distribution, JointDistribution};

pub(crate) fn entropy_slice(p: &[f64]) -> f64 {
    p.iter().map(|&x| xlnx_neg(x)).sum()
}

/// `I = H(X) + H(Y) − H(X,Y)` on a row-major `nx × ny` table, clamped at 0.
pub(crate) fn mutual_information_table(t: &[f64], nx: usize, ny: usize) -> f64 {
    let mut h_x = 0.0;
    let mut h_xy = 0.0;
    for row in t.chunks_exact(ny) {
        let mut r = 0.0;
        for &q in row {
            h_xy += xlnx_neg(q);
            r += q;
        }
        h_x += xlnx_neg(r);
    }
    let mut h_y = 0.0;
    for y in 0..ny {
        let c: f64 = (0..nx).map(|x| t[x * ny + y]).sum();
        h_y += xlnx_neg(c);
    }
    (h_x + h_y - h_xy).max(0.0)
}

/// Shannon entropy in nats, `0 ln 0 = 0`.
pub fn entropy(p: &Distribution) -> f64 {
    entropy_slice(p.probs())
}

/// `I(Q)`: mutual information between the row and column variables.
pub fn mutual_information(q: &JointDistribution) -> f64 {
    mutual_information_table(q.table(), q.rows(), q.cols())
}

/// `D(p‖q) = Σ p ln(p/q)`; `+∞` when `p` is not absolutely continuous
/// with respect to `q`.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<ExtReal> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
            context: "kl_divergence alphabets",
        });
    }
    Ok(ExtReal::from_f64(kl_slice(p.probs(), q.probs())))
}

pub(crate) fn kl_slice(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * ln(a / b);
        }
    }
    d.max(0.0)
}

/// `D(Q_{Y|X} ‖ W | Q_X) = D(Q_XY ‖ Q_X × W)`.
pub fn conditional_divergence(q_joint: &JointDistribution, w: &Channel) -> Result<ExtReal> {
    if q_joint.rows() != w.inputs() || q_joint.cols() != w.outputs() {
        return Err(Error::DimensionMismatch {
            expected: w.inputs() * w.outputs(),
            found: q_joint.rows() * q_joint.cols(),
            context: "conditional_divergence: joint vs channel",
        });
    }
    let mut d = 0.0;
    for x in 0..q_joint.rows() {
        let row = &q_joint.table()[x * q_joint.cols()..(x + 1) * q_joint.cols()];
        let qx: f64 = row.iter().sum();
        if qx <= 0.0 {
            continue;
        }
        for (y, &q) in row.iter().enumerate() {
            if q > 0.0 {
                let wy = w.prob(x, y);
                if wy <= 0.0 {
                    return Ok(ExtReal::INFINITY);
                }
                d += q * ln(q / (qx * wy));
            }
        }
    }
    Ok(ExtReal::from_f64(d.max(0.0)))
}

/// The joint `Q_X × W` with entries `q_x(x) W(y|x)`.
pub fn compose(q_x: &Distribution, w: &Channel) -> Result<JointDistribution> {
    if q_x.len() != w.inputs() {
        return Err(Error::DimensionMismatch {
            expected: w.inputs(),
            found: q_x.len(),
            context: "compose: input distribution vs channel",
        });
    }
    let table = (0..w.inputs())
        .flat_map(|x| w.row(x).iter().map(move |&p| q_x.get(x) * p))
        .collect();
    Ok(JointDistribution::from_vec_unchecked(
        w.inputs(),
        w.outputs(),
        table,
    ))
}

/// `max_i |p_i − q_i|`.
pub fn linf_distance(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}
