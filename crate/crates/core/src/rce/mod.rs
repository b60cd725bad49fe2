//! Random coding error exponent of the generalized likelihood decoder over
//! the constant-composition ensemble.
//!
//! With `Q` the joint type of the transmitted codeword and the output and
//! `Q'` that of a competing codeword,
//!
//! ```text
//! E(R)  = min_Q  D(Q ‖ Q_X × W) + E₃(Q, R)
//! E₃    = min_Q' [I(Q') − R + [g(Q) − g(Q')]₊]₊
//! ```
//!
//! where `Q'` ranges over the couplings of `Q` (same input composition, same
//! output marginal). Since `R` enters `E₃` only through the outer clamp,
//! `E₃(Q, R) = [m(Q) − R]₊` with `m(Q) = min_Q' I(Q') + [g(Q) − g(Q')]₊`.
//! [`RceEngine`] computes `m` once for every grid joint and then answers any
//! rate by a scan over a small Pareto front.

pub(crate) mod index;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::ext::{pos_diff, ExtReal};
use crate::metrics::DecoderMetric;
use crate::probkit::{
    linf_distance, mutual_information_table, Channel, Distribution, JointDistribution,
    SimplexGrid, MARGINAL_SLACK,
};
use crate::refine::coordinate_descent;
use crate::threshold::NO_ARG;

use index::{
    col_marginal_table, cond_divergence_table, inner_minima, pareto_front, product_g, Cells,
    Pool, PRODUCT,
};


const REFINE_SWEEPS: usize = 200;
const T_POINTS: usize = 101;

/// Composition, channel, decoder metric and grid of a random coding problem.
#[derive(Debug, Clone)]
pub struct RceProblem {
    q_x: Distribution,
    w: Channel,
    metric: DecoderMetric,
    grid: SimplexGrid,
}

impl RceProblem {
    pub fn new(
        q_x: Distribution,
        w: Channel,
        metric: DecoderMetric,
        grid: SimplexGrid,
    ) -> Result<Self> {
        if q_x.len() != w.inputs() {
            return Err(Error::DimensionMismatch {
                expected: w.inputs(),
                found: q_x.len(),
                context: "input distribution vs channel inputs",
            });
        }
        metric.check_dims(w.inputs(), w.outputs())?;
        Ok(RceProblem {
            q_x,
            w,
            metric,
            grid,
        })
    }

    pub fn q_x(&self) -> &Distribution {
        &self.q_x
    }

    pub fn channel(&self) -> &Channel {
        &self.w
    }

    pub fn metric(&self) -> &DecoderMetric {
        &self.metric
    }

    pub fn grid(&self) -> &SimplexGrid {
        &self.grid
    }
}

/// One row of an exponent curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub rate: f64,
    pub exponent: f64,
    pub witness_q: JointDistribution,
    pub witness_qprime: JointDistribution,
}

/// Exponent values at strictly increasing rates, with the minimizing pair of
/// joint types at each rate.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExponentCurve {
    points: Vec<CurvePoint>,
}

impl ExponentCurve {
    pub fn new(points: Vec<CurvePoint>) -> Result<Self> {
        for pair in points.windows(2) {
            if pair[1].rate <= pair[0].rate {
                return Err(Error::InvalidParameter(format!(
                    "curve rates must be strictly increasing ({} then {})",
                    pair[0].rate, pair[1].rate
                )));
            }
        }
        if let Some(p) = points.iter().find(|p| p.exponent.is_nan() || p.exponent < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "exponent {} at rate {} is negative or NaN",
                p.exponent, p.rate
            )));
        }
        Ok(ExponentCurve { points })
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn rates(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.rate)
    }

    pub fn exponents(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.exponent)
    }
}

/// The minimizing pair `(Q, Q')` behind an exponent value.
#[derive(Debug, Clone, PartialEq)]
pub struct RceWitness {
    pub q: JointDistribution,
    pub q_prime: JointDistribution,
}

/// `R₀` (the zero crossing of `E(R)`) with its analytic bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalRate {
    pub r0: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

pub(crate) fn check_rate(r: f64) -> Result<()> {
    if r.is_finite() && r >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "rate must be finite and non-negative, got {r}"
        )))
    }
}

/// `[I' − R + [g − g']₊]₊`; `g` and `g'` may be `−∞`.
pub fn pairwise_value(i_qp: f64, r: f64, g_q: ExtReal, g_qp: ExtReal) -> f64 {
    let d = ExtReal::pos_diff(g_q, g_qp).value();
    ((i_qp - r) + d).max(0.0)
}

/// The same quantity split on the sign of `R − I'`: `[I' − R + Δg]₊` when
/// `R ≥ I'`, and `I' − R + [Δg]₊` otherwise.
pub fn pairwise_value_two_branch(i_qp: f64, r: f64, g_q: ExtReal, g_qp: ExtReal) -> f64 {
    let dg = if g_q.is_neg_infinite() && g_qp.is_neg_infinite() {
        0.0
    } else {
        g_q.value() - g_qp.value()
    };
    if r >= i_qp {
        ((i_qp - r) + dg).max(0.0)
    } else {
        (i_qp - r) + dg.max(0.0)
    }
}

fn check_same_rows(q: &JointDistribution, qp: &JointDistribution) -> Result<()> {
    if q.rows() != qp.rows() || q.cols() != qp.cols() {
        return Err(Error::DimensionMismatch {
            expected: q.rows() * q.cols(),
            found: qp.rows() * qp.cols(),
            context: "joint types of a pair",
        });
    }
    let d = linf_distance(q.row_marginal().probs(), qp.row_marginal().probs());
    if d > MARGINAL_SLACK {
        return Err(Error::MarginalMismatch {
            distance: d,
            tolerance: MARGINAL_SLACK,
        });
    }
    Ok(())
}

/// `E₂(Q, Q', R)` for one pair of joint types. `Q'` must share the row
/// marginal of `Q` and have a column marginal within the grid tolerance.
pub fn pairwise_exponent(
    q: &JointDistribution,
    qp: &JointDistribution,
    r: f64,
    m: &DecoderMetric,
    grid: &SimplexGrid,
) -> Result<f64> {
    check_same_rows(q, qp)?;
    let d = linf_distance(q.col_marginal().probs(), qp.col_marginal().probs());
    if d > grid.marginal_tolerance() + MARGINAL_SLACK {
        return Err(Error::MarginalMismatch {
            distance: d,
            tolerance: grid.marginal_tolerance(),
        });
    }
    m.check_dims(q.rows(), q.cols())?;
    let g = ExtReal::from_f64(m.eval_table(q.table(), q.rows(), q.cols()));
    let gp = ExtReal::from_f64(m.eval_table(qp.table(), qp.rows(), qp.cols()));
    Ok(pairwise_value(crate::probkit::mutual_information(qp), r, g, gp))
}

/// Precomputed inner minima for every grid joint of a problem. Building is
/// the expensive step; each rate query afterwards is cheap.
pub struct RceEngine {
    problem: RceProblem,
    pool: Pool,
    cells: Cells,
    inner: Vec<(f64, u32)>,
    front: Vec<u32>,
}

impl RceEngine {
    pub fn new(problem: &RceProblem) -> Result<Self> {
        let pool = Pool::new(&problem.q_x, &problem.w, Some(&problem.metric), &problem.grid)?;
        let cells = Cells::build(&pool, &problem.grid);
        let inner = inner_minima(&pool, &cells, &problem.metric);
        let front = pareto_front(&pool.div, |i| inner[i].0);
        Ok(RceEngine {
            problem: problem.clone(),
            pool,
            cells,
            inner,
            front,
        })
    }

    pub fn problem(&self) -> &RceProblem {
        &self.problem
    }

    /// Number of candidate joints (grid joints plus the anchor `Q_X × W`).
    pub fn pool_size(&self) -> usize {
        self.pool.len()
    }

    fn dims(&self) -> (usize, usize) {
        (self.problem.w.inputs(), self.problem.w.outputs())
    }

    fn joint(&self, id: u32) -> JointDistribution {
        let (nx, ny) = self.dims();
        let mut t = vec![0.0; nx * ny];
        self.pool.fill(id, &mut t);
        JointDistribution::from_vec_unchecked(nx, ny, t)
    }

    fn product_with(&self, col: &[f64]) -> JointDistribution {
        let q_x = self.problem.q_x.probs();
        let t = q_x
            .iter()
            .flat_map(|&a| col.iter().map(move |&b| a * b))
            .collect();
        JointDistribution::from_vec_unchecked(q_x.len(), col.len(), t)
    }

    fn witness_joint(&self, arg: u32, col: &[f64]) -> JointDistribution {
        if arg == PRODUCT {
            self.product_with(col)
        } else {
            self.joint(arg)
        }
    }

    /// `m(Q)` and its minimizing coupling for an arbitrary table with the
    /// problem's row marginal.
    fn inner_min_table(&self, t: &[f64], col: &mut [f64]) -> (f64, u32) {
        let (nx, ny) = self.dims();
        col_marginal_table(t, ny, col);
        let metric = &self.problem.metric;
        let g = metric.eval_table(t, nx, ny);
        let mut best = (f64::INFINITY, NO_ARG);
        for c in self.cells.window(col) {
            let cand = self.cells.index(c).query(g);
            if cand.0 < best.0 {
                best = cand;
            }
        }
        let v = pos_diff(g, product_g(metric, self.problem.q_x.probs(), col));
        if v < best.0 {
            best = (v, PRODUCT);
        }
        best
    }

    /// `E₃(Q, R)` and the minimizing `Q'`.
    pub fn inner(&self, q: &JointDistribution, r: f64) -> Result<(f64, JointDistribution)> {
        check_rate(r)?;
        let (nx, ny) = self.dims();
        if q.rows() != nx || q.cols() != ny {
            return Err(Error::DimensionMismatch {
                expected: nx * ny,
                found: q.rows() * q.cols(),
                context: "joint type vs channel",
            });
        }
        let d = linf_distance(q.row_marginal().probs(), self.problem.q_x.probs());
        if d > MARGINAL_SLACK {
            return Err(Error::MarginalMismatch {
                distance: d,
                tolerance: MARGINAL_SLACK,
            });
        }
        let mut col = vec![0.0; ny];
        let (m, arg) = self.inner_min_table(q.table(), &mut col);
        if arg == NO_ARG {
            return Err(Error::EmptyCouplings {
                tolerance: self.problem.grid.marginal_tolerance(),
            });
        }
        Ok((pos_diff(m, r), self.witness_joint(arg, &col)))
    }

    /// `E(R)` with its witnesses.
    pub fn exponent(&self, r: f64) -> Result<(f64, RceWitness)> {
        check_rate(r)?;
        let mut best = (f64::INFINITY, NO_ARG);
        for &id in &self.front {
            let v = self.pool.div[id as usize] + pos_diff(self.inner[id as usize].0, r);
            if v < best.0 {
                best = (v, id);
            }
        }
        let (nx, ny) = self.dims();
        let mut table = vec![0.0; nx * ny];
        self.pool.fill(best.1, &mut table);
        let mut col = vec![0.0; ny];
        let mut value = best.0;
        let mut arg = self.inner[best.1 as usize].1;
        if self.problem.grid.refine() {
            let step = 1.0 / (4.0 * self.problem.grid.resolution() as f64);
            let q_x = self.problem.q_x.probs().to_vec();
            let mut scratch = vec![0.0; ny];
            value = coordinate_descent(&mut table, ny, &q_x, step, REFINE_SWEEPS, |t| {
                let d = cond_divergence_table(t, &q_x, &self.problem.w);
                if !d.is_finite() {
                    return f64::INFINITY;
                }
                d + pos_diff(self.inner_min_table(t, &mut scratch).0, r)
            })
            .min(value);
            arg = self.inner_min_table(&table, &mut col).1;
        }
        col_marginal_table(&table, ny, &mut col);
        let witness = RceWitness {
            q: JointDistribution::from_vec_unchecked(nx, ny, table),
            q_prime: self.witness_joint(arg, &col),
        };
        Ok((value.max(0.0), witness))
    }

    /// `E(R)` at each of the strictly increasing `rates`.
    pub fn curve(&self, rates: &[f64]) -> Result<ExponentCurve> {
        let points = rates
            .iter()
            .map(|&r| {
                let (e, w) = self.exponent(r)?;
                Ok(CurvePoint {
                    rate: r,
                    exponent: e,
                    witness_q: w.q,
                    witness_qprime: w.q_prime,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ExponentCurve::new(points)
    }

    /// `R₀ = min_Q' I(Q') + [g(Q_X × W) − g(Q')]₊` over the couplings of
    /// `Q_X × W`, bracketed by `max_t min_Q' I(Q') − t g(Q') + t g(Q_X × W)`
    /// (101 points of `t ∈ [0,1]`) from below and by
    /// `min { I(Q') : g(Q') ≥ g(Q_X × W) }` from above.
    pub fn critical_rate(&self) -> CriticalRate {
        let anchor = self.pool.anchor_id();
        let g0 = self.pool.g[anchor as usize];
        let ny = self.dims().1;
        let mut col = vec![0.0; ny];
        col_marginal_table(&self.pool.anchor, ny, &mut col);
        let r0 = self.inner[anchor as usize].0;
        let gp = product_g(&self.problem.metric, self.problem.q_x.probs(), &col);
        let window: Vec<usize> = self.cells.window(&col).collect();

        let mut upper = if gp >= g0 { 0.0 } else { f64::INFINITY };
        for &c in &window {
            upper = upper.min(self.cells.index(c).suffix_min(g0).0);
        }

        let mut lower = f64::NEG_INFINITY;
        for step in 0..T_POINTS {
            let t = step as f64 / (T_POINTS - 1) as f64;
            let term = |i: f64, g: f64| {
                if t == 0.0 {
                    i
                } else if g == f64::NEG_INFINITY {
                    f64::INFINITY
                } else {
                    i - t * g + t * g0
                }
            };
            let mut low = term(0.0, gp);
            for &c in &window {
                let idx = self.cells.index(c);
                for (&g, &id) in idx.keys().iter().zip(idx.ids()) {
                    low = low.min(term(self.pool.info[id as usize], g));
                }
            }
            lower = lower.max(low);
        }
        CriticalRate {
            r0,
            lower_bound: lower,
            upper_bound: upper,
        }
    }
}

/// `E₃(Q, R)` with the minimizing coupling.
pub fn inner_exponent(
    q: &JointDistribution,
    r: f64,
    prob: &RceProblem,
) -> Result<(f64, JointDistribution)> {
    RceEngine::new(prob)?.inner(q, r)
}

/// `E(R)` with the minimizing pair.
pub fn random_coding_exponent(prob: &RceProblem, r: f64) -> Result<(f64, RceWitness)> {
    RceEngine::new(prob)?.exponent(r)
}

/// `E(R)` over a list of strictly increasing rates.
pub fn random_coding_curve(prob: &RceProblem, rates: &[f64]) -> Result<ExponentCurve> {
    RceEngine::new(prob)?.curve(rates)
}

pub fn critical_rate(prob: &RceProblem) -> Result<CriticalRate> {
    Ok(RceEngine::new(prob)?.critical_rate())
}

/// The constant-composition exponent of maximum-likelihood decoding,
/// `min_Q D(Q ‖ Q_X × W) + [I(Q) − R]₊`, precomputed for repeated queries.
pub struct MlBaseline {
    q_x: Distribution,
    w: Channel,
    grid: SimplexGrid,
    pool: Pool,
    front: Vec<u32>,
}

impl MlBaseline {
    pub fn new(q_x: &Distribution, w: &Channel, grid: &SimplexGrid) -> Result<Self> {
        if q_x.len() != w.inputs() {
            return Err(Error::DimensionMismatch {
                expected: w.inputs(),
                found: q_x.len(),
                context: "input distribution vs channel inputs",
            });
        }
        let pool = Pool::new(q_x, w, None, grid)?;
        let front = pareto_front(&pool.div, |i| pool.info[i]);
        Ok(MlBaseline {
            q_x: q_x.clone(),
            w: w.clone(),
            grid: *grid,
            pool,
            front,
        })
    }

    /// The exponent at rate `r` and its minimizing joint type.
    pub fn exponent(&self, r: f64) -> Result<(f64, JointDistribution)> {
        check_rate(r)?;
        let mut best = (f64::INFINITY, NO_ARG);
        for &id in &self.front {
            let v = self.pool.div[id as usize] + pos_diff(self.pool.info[id as usize], r);
            if v < best.0 {
                best = (v, id);
            }
        }
        let (nx, ny) = (self.w.inputs(), self.w.outputs());
        let mut table = vec![0.0; nx * ny];
        self.pool.fill(best.1, &mut table);
        let mut value = best.0;
        if self.grid.refine() {
            let step = 1.0 / (4.0 * self.grid.resolution() as f64);
            value = coordinate_descent(&mut table, ny, self.q_x.probs(), step, REFINE_SWEEPS, |t| {
                cond_divergence_table(t, self.q_x.probs(), &self.w)
                    + pos_diff(mutual_information_table(t, nx, ny), r)
            })
            .min(value);
        }
        Ok((
            value.max(0.0),
            JointDistribution::from_vec_unchecked(nx, ny, table),
        ))
    }
}

/// `min_Q D(Q ‖ Q_X × W) + [I(Q) − R]₊` over the grid.
pub fn ml_baseline(q_x: &Distribution, w: &Channel, r: f64, grid: &SimplexGrid) -> Result<f64> {
    Ok(MlBaseline::new(q_x, w, grid)?.exponent(r)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_examples() {
        let z = ExtReal::ZERO;
        let e = |i, r, dg: f64| pairwise_value(i, r, ExtReal::from_f64(dg), z);
        assert!((e(0.5, 0.3, 0.1) - 0.3).abs() < 1e-15);
        assert_eq!(e(0.2, 0.5, -0.1), 0.0);
        assert!((e(0.2, 0.5, 0.4) - 0.1).abs() < 1e-15);
        let ninf = ExtReal::NEG_INFINITY;
        assert_eq!(pairwise_value(0.3, 0.1, ninf, ninf), 0.3 - 0.1);
        assert_eq!(pairwise_value(0.3, 0.1, z, ninf), f64::INFINITY);
        assert_eq!(pairwise_value(0.3, 0.1, ninf, z), 0.3 - 0.1);
    }
}
