//! Decoder functionals: `g` scores a codeword/output joint type, `f` scores a
//! source/side-information joint type. The decoder samples candidates with
//! probability proportional to `exp{n (f + g)}`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::math::ln;
use crate::probkit::{entropy_slice, mutual_information_table, Channel, JointDistribution};

fn check_beta(beta: f64) -> Result<f64> {
    if beta >= 0.0 && beta.is_finite() {
        Ok(beta)
    } else {
        Err(Error::InvalidParameter(format!(
            "beta must be finite and non-negative, got {beta}"
        )))
    }
}

/// `β Σ Q ln P` against a fixed table `P`, with `ln 0 = −∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLikelihood {
    rows: usize,
    cols: usize,
    beta: f64,
    log_p: Vec<f64>,
}

impl LogLikelihood {
    fn new(rows: usize, cols: usize, probs: &[f64], beta: f64) -> Result<Self> {
        Ok(LogLikelihood {
            rows,
            cols,
            beta: check_beta(beta)?,
            log_p: probs
                .iter()
                .map(|&p| if p > 0.0 { ln(p) } else { f64::NEG_INFINITY })
                .collect(),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    #[inline]
    fn eval(&self, t: &[f64]) -> f64 {
        if self.beta == 0.0 {
            return 0.0;
        }
        let mut s = 0.0;
        for (&q, &lp) in t.iter().zip(&self.log_p) {
            if q > 0.0 {
                if lp == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                s += q * lp;
            }
        }
        self.beta * s
    }

    fn scaled(&self, c: f64) -> Self {
        LogLikelihood {
            beta: self.beta * c,
            ..self.clone()
        }
    }
}

/// A fixed coefficient table: the functional `Σ c(a,b) Q(a,b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTable {
    rows: usize,
    cols: usize,
    coefficients: Vec<f64>,
}

impl LinearTable {
    pub fn new(table: &[Vec<f64>]) -> Result<Self> {
        let rows = table.len();
        let cols = table.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(Error::Empty);
        }
        let mut coefficients = Vec::with_capacity(rows * cols);
        for (r, row) in table.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                    context: "linear metric row length",
                });
            }
            for (i, &c) in row.iter().enumerate() {
                if !c.is_finite() {
                    return Err(Error::InvalidEntry {
                        row: r,
                        index: i,
                        value: c,
                    });
                }
            }
            coefficients.extend_from_slice(row);
        }
        Ok(LinearTable {
            rows,
            cols,
            coefficients,
        })
    }

    #[inline]
    fn eval(&self, t: &[f64]) -> f64 {
        t.iter().zip(&self.coefficients).map(|(q, c)| q * c).sum()
    }

    fn scaled(&self, c: f64) -> Self {
        LinearTable {
            coefficients: self.coefficients.iter().map(|x| x * c).collect(),
            ..self.clone()
        }
    }
}

fn check_dims(expected: (usize, usize), found: (usize, usize), context: &'static str) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: expected.0 * expected.1,
            found: found.0 * found.1,
            context,
        })
    }
}

/// The channel-side functional `g` of the generalized likelihood decoder.
#[derive(Debug, Clone, PartialEq)]
pub enum DecoderMetric {
    /// `β E_Q ln W(Y|X)` with the true channel.
    Matched(LogLikelihood),
    /// `β E_Q ln W'(Y|X)` with a decoding channel `W'`.
    Mismatched(LogLikelihood),
    /// `β I(Q)`, the stochastic MMI decoder.
    Mmi { beta: f64 },
    Linear(LinearTable),
}

impl DecoderMetric {
    pub fn matched(channel: &Channel, beta: f64) -> Result<Self> {
        Ok(DecoderMetric::Matched(Self::log_metric(channel, beta)?))
    }

    pub fn mismatched(channel: &Channel, beta: f64) -> Result<Self> {
        Ok(DecoderMetric::Mismatched(Self::log_metric(channel, beta)?))
    }

    pub fn mmi(beta: f64) -> Result<Self> {
        Ok(DecoderMetric::Mmi {
            beta: check_beta(beta)?,
        })
    }

    pub fn linear(table: &[Vec<f64>]) -> Result<Self> {
        Ok(DecoderMetric::Linear(LinearTable::new(table)?))
    }

    fn log_metric(channel: &Channel, beta: f64) -> Result<LogLikelihood> {
        let probs: Vec<f64> = channel.rows().flatten().copied().collect();
        LogLikelihood::new(channel.inputs(), channel.outputs(), &probs, beta)
    }

    pub fn beta(&self) -> Option<f64> {
        match self {
            DecoderMetric::Matched(m) | DecoderMetric::Mismatched(m) => Some(m.beta),
            DecoderMetric::Mmi { beta } => Some(*beta),
            DecoderMetric::Linear(_) => None,
        }
    }

    /// The same functional multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        check_beta(c)?;
        Ok(match self {
            DecoderMetric::Matched(m) => DecoderMetric::Matched(m.scaled(c)),
            DecoderMetric::Mismatched(m) => DecoderMetric::Mismatched(m.scaled(c)),
            DecoderMetric::Mmi { beta } => DecoderMetric::Mmi { beta: beta * c },
            DecoderMetric::Linear(t) => DecoderMetric::Linear(t.scaled(c)),
        })
    }

    /// Whether `g` is affine in `Q` (on its finite domain).
    pub fn is_affine(&self) -> bool {
        !matches!(self, DecoderMetric::Mmi { .. })
    }

    /// Checks that the metric can score `nx × ny` joints.
    pub fn check_dims(&self, nx: usize, ny: usize) -> Result<()> {
        match self {
            DecoderMetric::Matched(m) | DecoderMetric::Mismatched(m) => {
                check_dims((m.rows, m.cols), (nx, ny), "decoder metric channel vs joint")
            }
            DecoderMetric::Linear(t) => {
                check_dims((t.rows, t.cols), (nx, ny), "decoder metric table vs joint")
            }
            DecoderMetric::Mmi { .. } => Ok(()),
        }
    }

    /// `g` on a row-major table; `−∞` is returned as `f64::NEG_INFINITY`.
    #[inline]
    pub(crate) fn eval_table(&self, t: &[f64], nx: usize, ny: usize) -> f64 {
        match self {
            DecoderMetric::Matched(m) | DecoderMetric::Mismatched(m) => m.eval(t),
            DecoderMetric::Mmi { beta } => {
                if *beta == 0.0 {
                    0.0
                } else {
                    beta * mutual_information_table(t, nx, ny)
                }
            }
            DecoderMetric::Linear(l) => l.eval(t),
        }
    }
}

/// `g(Q)` for a decoder metric.
pub fn eval_g(m: &DecoderMetric, q: &JointDistribution) -> Result<ExtReal> {
    m.check_dims(q.rows(), q.cols())?;
    Ok(ExtReal::from_f64(m.eval_table(q.table(), q.rows(), q.cols())))
}

/// The source-side functional `f` over `(U, V)` joint types.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceMetric {
    /// `β E_Q ln P(U,V)` against a (possibly mismatched) source model.
    Matched(LogLikelihood),
    /// `−β H_Q(U|V)`, the stochastic minimum conditional entropy decoder.
    NegCondEntropy { beta: f64 },
    Linear(LinearTable),
}

impl SourceMetric {
    pub fn matched(p_uv: &JointDistribution, beta: f64) -> Result<Self> {
        Ok(SourceMetric::Matched(LogLikelihood::new(
            p_uv.rows(),
            p_uv.cols(),
            p_uv.table(),
            beta,
        )?))
    }

    pub fn neg_cond_entropy(beta: f64) -> Result<Self> {
        Ok(SourceMetric::NegCondEntropy {
            beta: check_beta(beta)?,
        })
    }

    pub fn linear(table: &[Vec<f64>]) -> Result<Self> {
        Ok(SourceMetric::Linear(LinearTable::new(table)?))
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        check_beta(c)?;
        Ok(match self {
            SourceMetric::Matched(m) => SourceMetric::Matched(m.scaled(c)),
            SourceMetric::NegCondEntropy { beta } => SourceMetric::NegCondEntropy { beta: beta * c },
            SourceMetric::Linear(t) => SourceMetric::Linear(t.scaled(c)),
        })
    }

    pub fn check_dims(&self, nu: usize, nv: usize) -> Result<()> {
        match self {
            SourceMetric::Matched(m) => {
                check_dims((m.rows, m.cols), (nu, nv), "source metric model vs joint")
            }
            SourceMetric::Linear(t) => {
                check_dims((t.rows, t.cols), (nu, nv), "source metric table vs joint")
            }
            SourceMetric::NegCondEntropy { .. } => Ok(()),
        }
    }

    #[inline]
    pub(crate) fn eval_table(&self, t: &[f64], nu: usize, nv: usize) -> f64 {
        match self {
            SourceMetric::Matched(m) => m.eval(t),
            SourceMetric::NegCondEntropy { beta } => {
                if *beta == 0.0 {
                    return 0.0;
                }
                let h_uv = entropy_slice(t);
                let h_v: f64 = (0..nv)
                    .map(|v| crate::math::xlnx_neg((0..nu).map(|u| t[u * nv + v]).sum()))
                    .sum();
                -beta * (h_uv - h_v).max(0.0)
            }
            SourceMetric::Linear(l) => l.eval(t),
        }
    }
}

/// `f(Q)` for a source metric; `q` is indexed `(u, v)`.
pub fn eval_f(m: &SourceMetric, q: &JointDistribution) -> Result<ExtReal> {
    m.check_dims(q.rows(), q.cols())?;
    Ok(ExtReal::from_f64(m.eval_table(q.table(), q.rows(), q.cols())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probkit::{compose, mutual_information, Distribution};
    use alloc::vec;

    #[test]
    fn matched_at_channel_joint_is_negative_conditional_entropy() {
        let w = Channel::new(&[vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]]).unwrap();
        let q_x = Distribution::new(vec![0.4, 0.6]).unwrap();
        let q = compose(&q_x, &w).unwrap();
        let g = eval_g(&DecoderMetric::matched(&w, 1.0).unwrap(), &q).unwrap();
        let h_y_given_x = q.joint_entropy() - crate::probkit::entropy(&q_x);
        assert!((g.value() + h_y_given_x).abs() < 1e-12);
    }

    #[test]
    fn mmi_vanishes_on_products() {
        let p = JointDistribution::product(
            &Distribution::new(vec![0.3, 0.7]).unwrap(),
            &Distribution::new(vec![0.5, 0.25, 0.25]).unwrap(),
        );
        let g = eval_g(&DecoderMetric::mmi(1.0).unwrap(), &p).unwrap();
        assert!(g.value().abs() < 1e-12);
    }

    #[test]
    fn matched_hits_minus_infinity_on_channel_zero() {
        // Z-channel: W(0|1) = 0, so any mass on (x=1, y=0) is impossible.
        let z = Channel::z_channel(0.9).unwrap();
        let q = JointDistribution::from_rows(&[vec![0.3, 0.2], vec![0.1, 0.4]]).unwrap();
        let g = eval_g(&DecoderMetric::matched(&z, 1.0).unwrap(), &q).unwrap();
        assert!(g.is_neg_infinite());
    }

    #[test]
    fn source_metric_examples() {
        let p = JointDistribution::from_rows(&[vec![0.45, 0.05], vec![0.05, 0.45]]).unwrap();
        let f = eval_f(&SourceMetric::matched(&p, 1.0).unwrap(), &p).unwrap();
        assert!((f.value() + p.joint_entropy()).abs() < 1e-12);

        let det = JointDistribution::from_rows(&[vec![0.3, 0.0], vec![0.0, 0.7]]).unwrap();
        let f = eval_f(&SourceMetric::neg_cond_entropy(2.0).unwrap(), &det).unwrap();
        assert!(f.value().abs() < 1e-12);

        let q = JointDistribution::from_rows(&[vec![0.2, 0.3], vec![0.1, 0.4]]).unwrap();
        let f1 = eval_f(&SourceMetric::matched(&p, 1.0).unwrap(), &q).unwrap();
        let f2 = eval_f(&SourceMetric::matched(&p, 2.0).unwrap(), &q).unwrap();
        assert!((f2.value() - 2.0 * f1.value()).abs() < 1e-12);
    }

    #[test]
    fn mmi_equals_beta_times_information() {
        let q = JointDistribution::from_rows(&[vec![0.2, 0.3], vec![0.1, 0.4]]).unwrap();
        let g = eval_g(&DecoderMetric::mmi(3.0).unwrap(), &q).unwrap();
        assert_eq!(g.value(), 3.0 * mutual_information(&q));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(DecoderMetric::mmi(-1.0).is_err());
        let w = Channel::bsc(0.1).unwrap();
        let m = DecoderMetric::matched(&w, 1.0).unwrap();
        let q = JointDistribution::from_rows(&[vec![0.2, 0.3, 0.0], vec![0.1, 0.4, 0.0]]).unwrap();
        assert!(eval_g(&m, &q).is_err());
        assert!(DecoderMetric::linear(&[vec![1.0, f64::NAN]]).is_err());
    }
}
