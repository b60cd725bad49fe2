//! Expurgated exponent of the generalized likelihood decoder, the
//! Csiszár–Körner–Marton (CKM) baseline, and closed forms for the z-channel.
//!
//! ```text
//! α(R, Q_Y)    = sup { g(Q_XY) − I(Q_XY) : Q_X|Y, I ≤ R } + R
//! Γ(Q_XX', R)  = inf_{Q_Y|XX'} D(Q_Y|X ‖ W | Q_X) + I(X';Y|X)
//!                   + [max{g(Q_XY), α(R, Q_Y)} − g(Q_X'Y)]₊
//! E_ex(R)      = min { Γ(Q_XX', R) + I(X;X') : I(X;X') ≤ R } − R
//! ```

pub mod zchannel;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::ext::{pos_diff, ExtReal};
use crate::math::{ln, round, sqrt};
use crate::memo::Memo;
use crate::metrics::DecoderMetric;
use crate::par;
use crate::probkit::{
    kl_slice, linf_distance, mutual_information_table, Channel, Distribution, FixedRowLattice,
    JointDistribution, SimplexGrid, SimplexPoints, MARGINAL_SLACK,
};

/// Slack on the `I ≤ R` constraints, absorbing rounding in `I`.
const RATE_SLACK: f64 = 1e-12;
const KEY_SCALE: f64 = 1e12;
/// Upper limit on the number of conditional tables searched per `Γ`.
pub const MAX_CONDITIONALS: u64 = 50_000_000;

/// Inputs of the expurgated exponent.
#[derive(Debug, Clone)]
pub struct ExpurgationProblem {
    q_x: Distribution,
    w: Channel,
    metric: DecoderMetric,
    grid: SimplexGrid,
    epsilon: f64,
}

impl ExpurgationProblem {
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
        Ok(ExpurgationProblem {
            q_x,
            w,
            metric,
            grid,
            epsilon: 0.0,
        })
    }

    /// Evaluates `α` at `R − ε` instead of `R`.
    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be finite and non-negative, got {epsilon}"
            )));
        }
        self.epsilon = epsilon;
        Ok(self)
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

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn dims(&self) -> (usize, usize) {
        (self.w.inputs(), self.w.outputs())
    }
}

fn check_rate(r: f64) -> Result<()> {
    if r.is_finite() && r >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "rate must be finite and non-negative, got {r}"
        )))
    }
}

/// `α(R, Q_Y)` without memoization; `q_y` is a probability vector over the
/// output alphabet. The input marginal of `Q_XY` is held within the grid
/// tolerance of the code composition.
fn alpha_direct(r: f64, q_y: &[f64], prob: &ExpurgationProblem) -> f64 {
    let (nx, ny) = prob.dims();
    let metric = &prob.metric;
    let q_x = prob.q_x.probs();
    let mut t_xy = vec![0.0; nx * ny];
    let mut best = f64::NEG_INFINITY;
    let mut consider = |t_xy: &[f64]| {
        let i = mutual_information_table(t_xy, nx, ny);
        if i <= r + RATE_SLACK {
            let v = metric.eval_table(t_xy, nx, ny) - i;
            if v > best {
                best = v;
            }
        }
    };

    let qy = Distribution::from_vec_unchecked(q_y.to_vec());
    let lattice = FixedRowLattice::new(&qy, nx, &prob.grid).expect("non-empty alphabets");
    let mut t_yx = vec![0.0; ny * nx];
    let mut x_marg = vec![0.0; nx];
    for idx in 0..lattice.len() {
        lattice.fill(idx, &mut t_yx);
        x_marg.iter_mut().for_each(|v| *v = 0.0);
        for row in t_yx.chunks_exact(nx) {
            for (m, &v) in x_marg.iter_mut().zip(row) {
                *m += v;
            }
        }
        if !prob.grid.marginals_close(&x_marg, q_x) {
            continue;
        }
        for y in 0..ny {
            for x in 0..nx {
                t_xy[x * ny + y] = t_yx[y * nx + x];
            }
        }
        consider(&t_xy);
    }
    for x in 0..nx {
        for y in 0..ny {
            t_xy[x * ny + y] = q_x[x] * q_y[y];
        }
    }
    consider(&t_xy);
    if best == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        best + r
    }
}

fn check_output_dist(q_y: &Distribution, ny: usize) -> Result<()> {
    if q_y.len() != ny {
        return Err(Error::DimensionMismatch {
            expected: ny,
            found: q_y.len(),
            context: "output distribution vs channel outputs",
        });
    }
    Ok(())
}

/// `α(R, Q_Y)`; `−∞` when no conditional satisfies `I ≤ R` with a finite
/// metric.
pub fn alpha(r: f64, q_y: &Distribution, prob: &ExpurgationProblem) -> Result<ExtReal> {
    check_rate(r)?;
    check_output_dist(q_y, prob.dims().1)?;
    Ok(ExtReal::from_f64(alpha_direct(r, q_y.probs(), prob)))
}

/// `α(R, ·)` memoized on the output marginal.
struct AlphaCache<'a> {
    r: f64,
    prob: &'a ExpurgationProblem,
    memo: Memo<f64>,
}

impl<'a> AlphaCache<'a> {
    fn new(r: f64, prob: &'a ExpurgationProblem) -> Self {
        AlphaCache {
            r,
            prob,
            memo: Memo::new(),
        }
    }

    fn get(&self, q_y: &[f64], key: &mut Vec<i64>) -> f64 {
        key.clear();
        key.extend(q_y.iter().map(|&p| round(p * KEY_SCALE) as i64));
        if let Some(v) = self.memo.get(key) {
            return v;
        }
        let v = alpha_direct(self.r, q_y, self.prob);
        self.memo.insert(key.clone(), v);
        v
    }
}

/// The minimizer of `Γ`: the joint `Q_XX'Y` in row-major `(x, x', y)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaWitness {
    pub table: Vec<f64>,
}

fn gamma_search(
    q_xx: &[f64],
    prob: &ExpurgationProblem,
    alpha: &AlphaCache<'_>,
) -> Result<(f64, Option<GammaWitness>)> {
    let (nx, ny) = prob.dims();
    let points = SimplexPoints::new(ny, prob.grid.resolution());
    let pairs: Vec<(usize, usize, f64)> = (0..nx)
        .flat_map(|x| (0..nx).map(move |xp| (x, xp)))
        .filter_map(|(x, xp)| {
            let m = q_xx[x * nx + xp];
            (m > 0.0).then_some((x, xp, m))
        })
        .collect();
    // Conditional rows with finite divergence from W(·|x), and their cost.
    let options: Vec<Vec<(usize, f64)>> = pairs
        .iter()
        .map(|&(x, _, m)| {
            (0..points.len())
                .filter_map(|p| {
                    let d = kl_slice(points.probs(p), prob.w.row(x));
                    d.is_finite().then_some((p, m * d))
                })
                .collect()
        })
        .collect();
    let total = options
        .iter()
        .try_fold(1u64, |acc, o| acc.checked_mul(o.len() as u64))
        .unwrap_or(u64::MAX);
    if total > MAX_CONDITIONALS {
        return Err(Error::InstanceTooLarge(format!(
            "Γ search needs {total} conditional tables (limit {MAX_CONDITIONALS}); lower the grid resolution"
        )));
    }
    if total == 0 {
        return Ok((f64::INFINITY, None));
    }

    let metric = &prob.metric;
    let mut digits = vec![0usize; pairs.len()];
    let mut t_xy = vec![0.0; nx * ny];
    let mut t_xpy = vec![0.0; nx * ny];
    let mut q_y = vec![0.0; ny];
    let mut key = Vec::with_capacity(ny);
    let mut best = (f64::INFINITY, Vec::new());
    loop {
        t_xy.iter_mut().for_each(|v| *v = 0.0);
        t_xpy.iter_mut().for_each(|v| *v = 0.0);
        q_y.iter_mut().for_each(|v| *v = 0.0);
        let mut d = 0.0;
        for (slot, &(x, xp, m)) in pairs.iter().enumerate() {
            let (p, cost) = options[slot][digits[slot]];
            d += cost;
            for (y, &c) in points.probs(p).iter().enumerate() {
                let v = m * c;
                t_xy[x * ny + y] += v;
                t_xpy[xp * ny + y] += v;
                q_y[y] += v;
            }
        }
        if d < best.0 {
            let g = metric.eval_table(&t_xy, nx, ny);
            let gp = metric.eval_table(&t_xpy, nx, ny);
            let a = alpha.get(&q_y, &mut key);
            let v = d + pos_diff(g.max(a), gp);
            if v < best.0 {
                best = (v, digits.clone());
            }
        }
        // Odometer step.
        let mut slot = pairs.len();
        loop {
            if slot == 0 {
                let witness = best.0.is_finite().then(|| {
                    let mut table = vec![0.0; nx * nx * ny];
                    for (s, &(x, xp, m)) in pairs.iter().enumerate() {
                        let p = options[s][best.1[s]].0;
                        for (y, &c) in points.probs(p).iter().enumerate() {
                            table[(x * nx + xp) * ny + y] = m * c;
                        }
                    }
                    GammaWitness { table }
                });
                return Ok((best.0, witness));
            }
            slot -= 1;
            digits[slot] += 1;
            if digits[slot] < options[slot].len() {
                break;
            }
            digits[slot] = 0;
        }
    }
}

fn check_pair_marginals(q_xx: &JointDistribution, prob: &ExpurgationProblem) -> Result<()> {
    let nx = prob.dims().0;
    if q_xx.rows() != nx || q_xx.cols() != nx {
        return Err(Error::DimensionMismatch {
            expected: nx * nx,
            found: q_xx.rows() * q_xx.cols(),
            context: "pair joint vs channel inputs",
        });
    }
    let tol = prob.grid.marginal_tolerance();
    for m in [q_xx.row_marginal(), q_xx.col_marginal()] {
        let d = linf_distance(m.probs(), prob.q_x.probs());
        if d > tol + MARGINAL_SLACK {
            return Err(Error::MarginalMismatch {
                distance: d,
                tolerance: tol,
            });
        }
    }
    Ok(())
}

/// `Γ(Q_XX', R)` over grid conditionals `Q_Y|XX'`, with its minimizer.
pub fn gamma_with_witness(
    q_xx: &JointDistribution,
    r: f64,
    prob: &ExpurgationProblem,
) -> Result<(ExtReal, Option<GammaWitness>)> {
    check_rate(r)?;
    check_pair_marginals(q_xx, prob)?;
    let cache = AlphaCache::new((r - prob.epsilon).max(0.0), prob);
    let (v, w) = gamma_search(q_xx.table(), prob, &cache)?;
    Ok((ExtReal::from_f64(v), w))
}

/// `Γ(Q_XX', R)`.
pub fn gamma(q_xx: &JointDistribution, r: f64, prob: &ExpurgationProblem) -> Result<ExtReal> {
    Ok(gamma_with_witness(q_xx, r, prob)?.0)
}

/// Candidate pair types `Q_XX'`: grid joints with row marginal `Q_X` and
/// column marginal within tolerance, plus the independent and the diagonal
/// pairing.
fn pair_candidates(q_x: &Distribution, grid: &SimplexGrid) -> Result<Vec<Vec<f64>>> {
    let nx = q_x.len();
    let lattice = FixedRowLattice::new(q_x, nx, grid)?;
    let mut out = Vec::new();
    let mut t = vec![0.0; nx * nx];
    let mut col = vec![0.0; nx];
    for idx in 0..lattice.len() {
        lattice.fill(idx, &mut t);
        col.iter_mut().for_each(|v| *v = 0.0);
        for row in t.chunks_exact(nx) {
            for (c, &v) in col.iter_mut().zip(row) {
                *c += v;
            }
        }
        if grid.marginals_close(&col, q_x.probs()) {
            out.push(t.clone());
        }
    }
    let p = q_x.probs();
    out.push(p.iter().flat_map(|&a| p.iter().map(move |&b| a * b)).collect());
    let mut diag = vec![0.0; nx * nx];
    for x in 0..nx {
        diag[x * nx + x] = p[x];
    }
    out.push(diag);
    Ok(out)
}

/// Result of an expurgated-exponent evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpurgatedPoint {
    pub rate: f64,
    /// The exponent clamped at zero.
    pub exponent: f64,
    /// `min [Γ + I] − R` before clamping; `+∞` when nothing is feasible.
    pub raw: f64,
    /// Number of pair types satisfying `I(X;X') ≤ R`.
    pub feasible: usize,
    pub witness_qxx: Option<JointDistribution>,
    pub witness_qxxy: Option<GammaWitness>,
}

/// `E_ex(R)` with witnesses and feasibility diagnostics.
pub fn expurgated_point(prob: &ExpurgationProblem, r: f64) -> Result<ExpurgatedPoint> {
    check_rate(r)?;
    let nx = prob.dims().0;
    let feasible: Vec<Vec<f64>> = pair_candidates(&prob.q_x, &prob.grid)?
        .into_iter()
        .filter(|t| mutual_information_table(t, nx, nx) <= r + RATE_SLACK)
        .collect();
    let cache = AlphaCache::new((r - prob.epsilon).max(0.0), prob);
    let results = par::map_range(feasible.len(), |i| {
        gamma_search(&feasible[i], prob, &cache).map(|(g, w)| {
            (g + mutual_information_table(&feasible[i], nx, nx), w)
        })
    });
    let mut best: (f64, Option<usize>, Option<GammaWitness>) = (f64::INFINITY, None, None);
    for (i, res) in results.into_iter().enumerate() {
        let (v, w) = res?;
        if v < best.0 {
            best = (v, Some(i), w);
        }
    }
    let raw = best.0 - r;
    Ok(ExpurgatedPoint {
        rate: r,
        exponent: raw.max(0.0),
        raw,
        feasible: feasible.len(),
        witness_qxx: best
            .1
            .map(|i| JointDistribution::from_vec_unchecked(nx, nx, feasible[i].clone())),
        witness_qxxy: best.2,
    })
}

/// `E_ex(R)` clamped at zero; `+∞` when no pair type is feasible.
pub fn expurgated_exponent(prob: &ExpurgationProblem, r: f64) -> Result<f64> {
    Ok(expurgated_point(prob, r)?.exponent)
}

/// Bhattacharyya distances `d_B(x, x') = −ln Σ_y √(W(y|x) W(y|x'))`, `+∞`
/// for inputs with disjoint output supports.
pub fn bhattacharyya_distances(w: &Channel) -> Vec<f64> {
    let n = w.inputs();
    let mut out = vec![0.0; n * n];
    for x in 0..n {
        for xp in 0..n {
            let s: f64 = w
                .row(x)
                .iter()
                .zip(w.row(xp))
                .map(|(&a, &b)| sqrt(a * b))
                .sum();
            out[x * n + xp] = if x == xp {
                0.0
            } else if s > 0.0 {
                (-ln(s)).max(0.0)
            } else {
                f64::INFINITY
            };
        }
    }
    out
}

/// The CKM expurgated exponent `min { E_Q d_B + I(X;X') : I ≤ R } − R`
/// over the same pair types as [`expurgated_exponent`], not clamped.
pub fn ckm_baseline(q_x: &Distribution, w: &Channel, r: f64, grid: &SimplexGrid) -> Result<f64> {
    check_rate(r)?;
    if q_x.len() != w.inputs() {
        return Err(Error::DimensionMismatch {
            expected: w.inputs(),
            found: q_x.len(),
            context: "input distribution vs channel inputs",
        });
    }
    let nx = q_x.len();
    let db = bhattacharyya_distances(w);
    let mut best = f64::INFINITY;
    for t in pair_candidates(q_x, grid)? {
        let i = mutual_information_table(&t, nx, nx);
        if i > r + RATE_SLACK {
            continue;
        }
        let e: f64 = t
            .iter()
            .zip(&db)
            .map(|(&q, &d)| if q > 0.0 { q * d } else { 0.0 })
            .sum();
        best = best.min(e + i);
    }
    Ok(best - r)
}
