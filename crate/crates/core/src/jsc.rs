//! Random binning–coding exponent for source–channel coding with decoder
//! side information, under the decoder that samples source sequences with
//! weight `exp{n [f(P_uv) + g(P_xy)]}`.
//!
//! ```text
//! E₁(R, Q_UV) = min_{Q_U'V} [[f(Q_UV) − f(Q_U'V)]₊ + R − H(U'|V)]₊
//! E₂(R)       = min_{Q_UV} D(Q_UV ‖ P_UV) + E₁(R, Q_UV)
//! E₃          = [[h(Q_UV, Q_XY) − h(Q_U'V, Q_X'Y)]₊ + I(X';Y) − H(U'|V)]₊,  h = f + g
//! E₅          = min_{Q_UV, Q_XY} D(Q_UV ‖ P_UV) + D(Q_Y|X ‖ W | Q_X) + min_{Q_U'V, Q_X'Y} E₃
//! E(R)        = min{E₂(R), E₅}
//! ```
//!
//! `Q_U'V` shares the side-information marginal of `Q_UV` exactly: the
//! candidates are the joints `Q_V(v)·Q(u|v)` with grid conditionals, plus
//! every outer candidate with the same `V` marginal. `Q_X'Y` ranges over
//! the couplings of `Q_XY` as in [`crate::rce`].

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::ext::{pos_diff, ExtReal};
use crate::math::round;
use crate::metrics::{DecoderMetric, SourceMetric};
use crate::par;
use crate::probkit::{
    entropy_slice, kl_slice, linf_distance, mutual_information_table, Channel, Distribution,
    FixedRowLattice, JointDistribution, SimplexGrid, SimplexPoints, MARGINAL_SLACK,
};
use crate::rce::index::{Cells, Pool, PRODUCT};
use crate::rce::{check_rate, CurvePoint, ExponentCurve};
use crate::threshold::{ThresholdMin, NO_ARG};

const KEY_SCALE: f64 = 1e9;

/// Source, side information, channel, and the two decoder functionals.
#[derive(Debug, Clone)]
pub struct JscProblem {
    p_uv: JointDistribution,
    q_x: Distribution,
    w: Channel,
    f: SourceMetric,
    g: DecoderMetric,
    grid: SimplexGrid,
}

impl JscProblem {
    /// `p_uv` has rows indexed by the source symbol `u` and columns by the
    /// side-information symbol `v`.
    pub fn new(
        p_uv: JointDistribution,
        q_x: Distribution,
        w: Channel,
        f: SourceMetric,
        g: DecoderMetric,
        grid: SimplexGrid,
    ) -> Result<Self> {
        if q_x.len() != w.inputs() {
            return Err(Error::DimensionMismatch {
                expected: w.inputs(),
                found: q_x.len(),
                context: "input distribution vs channel inputs",
            });
        }
        f.check_dims(p_uv.rows(), p_uv.cols())?;
        g.check_dims(w.inputs(), w.outputs())?;
        Ok(JscProblem {
            p_uv,
            q_x,
            w,
            f,
            g,
            grid,
        })
    }

    pub fn p_uv(&self) -> &JointDistribution {
        &self.p_uv
    }

    pub fn q_x(&self) -> &Distribution {
        &self.q_x
    }

    pub fn channel(&self) -> &Channel {
        &self.w
    }

    pub fn f(&self) -> &SourceMetric {
        &self.f
    }

    pub fn g(&self) -> &DecoderMetric {
        &self.g
    }

    pub fn grid(&self) -> &SimplexGrid {
        &self.grid
    }

    fn source_dims(&self) -> (usize, usize) {
        (self.p_uv.rows(), self.p_uv.cols())
    }
}

/// The four joint types behind an `E₅` value.
#[derive(Debug, Clone, PartialEq)]
pub struct JscWitness {
    pub q_uv: JointDistribution,
    pub q_xy: JointDistribution,
    pub q_upv: JointDistribution,
    pub q_xpy: JointDistribution,
}

/// Both terms of the exponent over a rate grid.
#[derive(Debug, Clone, PartialEq)]
pub struct JscExponents {
    pub e2_curve: ExponentCurve,
    pub e5: f64,
    pub e_of_r: ExponentCurve,
    /// Smallest rate from which `E₂(R) ≥ E₅`, i.e. `E(R) = E₅`.
    pub saturation_rate: Option<f64>,
    pub e5_witness: Option<JscWitness>,
}

/// `[[Δh]₊ + I' − H']₊` with `Δh = h − h'`; `h`, `h'` may be `−∞`.
pub fn e3_value(h: ExtReal, h_prime: ExtReal, i_prime: f64, h_cond: f64) -> f64 {
    (ExtReal::pos_diff(h, h_prime).value() + (i_prime - h_cond)).max(0.0)
}

/// The same quantity split on the sign of `I' − H'`.
pub fn e3_value_two_branch(h: ExtReal, h_prime: ExtReal, i_prime: f64, h_cond: f64) -> f64 {
    let dh = if h.is_neg_infinite() && h_prime.is_neg_infinite() {
        0.0
    } else {
        h.value() - h_prime.value()
    };
    let s = i_prime - h_cond;
    if i_prime < h_cond {
        (dh + s).max(0.0)
    } else {
        s + dh.max(0.0)
    }
}

fn key_of(v: &[f64]) -> Vec<i64> {
    v.iter().map(|&p| round(p * KEY_SCALE) as i64).collect()
}

fn col_marginal(t: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    (0..cols)
        .map(|c| (0..rows).map(|r| t[r * cols + c]).sum())
        .collect()
}

/// `H(U|V)` of a `U × V` table.
fn cond_entropy(t: &[f64], nu: usize, nv: usize) -> f64 {
    (entropy_slice(t) - entropy_slice(&col_marginal(t, nu, nv))).max(0.0)
}

/// Scored `U'V` candidates sharing one side-information marginal.
struct VGroup {
    /// Outer candidates (indices into the outer list) in this group.
    members: Vec<u32>,
    /// Candidate tables (row-major `U × V`).
    tables: Vec<Vec<f64>>,
    f: Vec<f64>,
    h: Vec<f64>,
    /// `min [f − f']₊ − H'` lookup: items `(f', −H')`.
    e1: ThresholdMin,
}

/// Precomputed state for all exponent queries on one problem.
pub struct JscEngine {
    problem: JscProblem,
    outer: Vec<Vec<f64>>,
    outer_f: Vec<f64>,
    outer_div: Vec<f64>,
    groups: Vec<VGroup>,
    /// Group of each outer candidate and its position in the group tables.
    group_of: Vec<(u32, u32)>,
    m1: Vec<(f64, u32)>,
    front: Vec<u32>,
    e5: f64,
    e5_witness: Option<JscWitness>,
}

impl JscEngine {
    pub fn new(problem: &JscProblem) -> Result<Self> {
        let (nu, nv) = problem.source_dims();
        let f = &problem.f;
        let p = problem.p_uv.table();

        let points = SimplexPoints::new(nu * nv, problem.grid.resolution());
        let mut outer: Vec<Vec<f64>> = (0..points.len()).map(|i| points.probs(i).to_vec()).collect();
        outer.push(p.to_vec());
        let outer_f: Vec<f64> = outer.iter().map(|t| f.eval_table(t, nu, nv)).collect();
        let outer_div: Vec<f64> = outer.iter().map(|t| kl_slice(t, p)).collect();

        // Group outer candidates by side-information marginal.
        let mut by_key: BTreeMap<Vec<i64>, Vec<u32>> = BTreeMap::new();
        for (i, t) in outer.iter().enumerate() {
            by_key
                .entry(key_of(&col_marginal(t, nu, nv)))
                .or_default()
                .push(i as u32);
        }
        let keyed: Vec<Vec<u32>> = by_key.into_values().collect();
        let groups: Vec<VGroup> = par::map_range(keyed.len(), |gi| {
            let members = keyed[gi].clone();
            let q_v = col_marginal(&outer[members[0] as usize], nu, nv);
            let mut tables = candidate_tables(&q_v, nu, &problem.grid);
            tables.extend(members.iter().map(|&m| outer[m as usize].clone()));
            let fs: Vec<f64> = tables.iter().map(|t| f.eval_table(t, nu, nv)).collect();
            let hs: Vec<f64> = tables.iter().map(|t| cond_entropy(t, nu, nv)).collect();
            let e1 = ThresholdMin::build(
                fs.iter()
                    .zip(&hs)
                    .enumerate()
                    .map(|(i, (&fa, &ha))| (fa, -ha, i as u32))
                    .collect(),
            );
            VGroup {
                members,
                tables,
                f: fs,
                h: hs,
                e1,
            }
        });
        let mut group_of = vec![(0u32, 0u32); outer.len()];
        for (gi, g) in groups.iter().enumerate() {
            let base = g.tables.len() - g.members.len();
            for (j, &m) in g.members.iter().enumerate() {
                group_of[m as usize] = (gi as u32, (base + j) as u32);
            }
        }
        let m1: Vec<(f64, u32)> = (0..outer.len())
            .map(|i| groups[group_of[i].0 as usize].e1.query(outer_f[i]))
            .collect();
        let front = crate::rce::index::pareto_front(&outer_div, |i| m1[i].0);

        let mut engine = JscEngine {
            problem: problem.clone(),
            outer,
            outer_f,
            outer_div,
            groups,
            group_of,
            m1,
            front,
            e5: f64::INFINITY,
            e5_witness: None,
        };
        engine.compute_e5()?;
        Ok(engine)
    }

    pub fn problem(&self) -> &JscProblem {
        &self.problem
    }

    fn source_joint(&self, t: &[f64]) -> JointDistribution {
        let (nu, nv) = self.problem.source_dims();
        JointDistribution::from_vec_unchecked(nu, nv, t.to_vec())
    }

    fn compute_e5(&mut self) -> Result<()> {
        let prob = &self.problem;
        let (nx, ny) = (prob.w.inputs(), prob.w.outputs());
        let pool = Pool::new(&prob.q_x, &prob.w, Some(&prob.g), &prob.grid)?;
        let cells = Cells::build(&pool, &prob.grid);
        let q_x = prob.q_x.probs();

        // Couplings of each channel cell: pool members of nearby cells plus the
        // product with the cell's output marginal, as (g, I, id) triples.
        let couplings: Vec<Vec<(f64, f64, u32)>> = (0..cells.len())
            .map(|c| {
                let mut list = Vec::new();
                for o in cells.window(cells.col(c)) {
                    let idx = cells.index(o);
                    for (&g, &id) in idx.keys().iter().zip(idx.ids()) {
                        list.push((g, pool.info[id as usize], id));
                    }
                }
                let gp = crate::rce::index::product_g(&prob.g, q_x, cells.col(c));
                list.push((gp, 0.0, PRODUCT));
                list
            })
            .collect();

        let tasks: Vec<(usize, usize)> = (0..self.groups.len())
            .flat_map(|g| (0..cells.len()).map(move |c| (g, c)))
            .collect();
        let groups = &self.groups;
        let outer_f = &self.outer_f;
        let outer_div = &self.outer_div;
        // Each task: best (value, outer uv, outer xy, u'v index, x'y id).
        let results = par::map_range(tasks.len(), |t| {
            let (gi, c) = tasks[t];
            let group = &groups[gi];
            let b = &couplings[c];
            let mut items = Vec::with_capacity(group.tables.len() * b.len());
            for a in 0..group.tables.len() {
                for (j, &(g, i, _)) in b.iter().enumerate() {
                    items.push((group.f[a] + g, i - group.h[a], (a * b.len() + j) as u32));
                }
            }
            let index = ThresholdMin::build(items);
            let cell = cells.index(c);
            let mut best = (f64::INFINITY, 0u32, 0u32, NO_ARG);
            for &u in &group.members {
                let du = outer_div[u as usize];
                if !du.is_finite() {
                    continue;
                }
                for (&g, &x) in cell.keys().iter().zip(cell.ids()) {
                    let dx = pool.div[x as usize];
                    if !dx.is_finite() {
                        continue;
                    }
                    let h = outer_f[u as usize] + g;
                    let (m4, arg) = index.query(h);
                    let v = du + dx + m4.max(0.0);
                    if v < best.0 {
                        best = (v, u, x, arg);
                    }
                }
            }
            (best, b.len())
        });
        let mut best = (f64::INFINITY, 0u32, 0u32, NO_ARG, 0usize, 0usize);
        for (t, ((v, u, x, arg), blen)) in results.into_iter().enumerate() {
            if v < best.0 {
                best = (v, u, x, arg, tasks[t].1, blen);
            }
        }
        self.e5 = best.0;
        if best.3 != NO_ARG {
            let (v, u, x, arg, c, blen) = best;
            let _ = v;
            let group = &self.groups[self.group_of[u as usize].0 as usize];
            let a = arg as usize / blen;
            let (_, _, bid) = couplings[c][arg as usize % blen];
            let mut t = vec![0.0; nx * ny];
            pool.fill(x, &mut t);
            let q_xy = JointDistribution::from_vec_unchecked(nx, ny, t.clone());
            let q_xpy = if bid == PRODUCT {
                let col = col_marginal(&t, nx, ny);
                JointDistribution::from_vec_unchecked(
                    nx,
                    ny,
                    q_x.iter().flat_map(|&a| col.iter().map(move |&b| a * b)).collect(),
                )
            } else {
                let mut tp = vec![0.0; nx * ny];
                pool.fill(bid, &mut tp);
                JointDistribution::from_vec_unchecked(nx, ny, tp)
            };
            self.e5_witness = Some(JscWitness {
                q_uv: self.source_joint(&self.outer[u as usize]),
                q_xy,
                q_upv: self.source_joint(&group.tables[a]),
                q_xpy,
            });
        }
        Ok(())
    }

    /// `E₅`, independent of the rate.
    pub fn e5(&self) -> f64 {
        self.e5
    }

    pub fn e5_witness(&self) -> Option<&JscWitness> {
        self.e5_witness.as_ref()
    }

    /// `E₁(R, Q_UV)` for an arbitrary source type.
    pub fn e1(&self, r: f64, q_uv: &JointDistribution) -> Result<(f64, JointDistribution)> {
        check_rate(r)?;
        let (nu, nv) = self.problem.source_dims();
        if q_uv.rows() != nu || q_uv.cols() != nv {
            return Err(Error::DimensionMismatch {
                expected: nu * nv,
                found: q_uv.rows() * q_uv.cols(),
                context: "source joint type vs source alphabets",
            });
        }
        let f = &self.problem.f;
        let fq = f.eval_table(q_uv.table(), nu, nv);
        let q_v = q_uv.col_marginal();
        let key = key_of(q_v.probs());
        let mut tables = candidate_tables(q_v.probs(), nu, &self.problem.grid);
        tables.extend(
            self.groups
                .iter()
                .filter(|g| key_of(&col_marginal(&self.outer[g.members[0] as usize], nu, nv)) == key)
                .flat_map(|g| g.members.iter().map(|&m| self.outer[m as usize].clone())),
        );
        tables.push(q_uv.table().to_vec());
        let mut best = (f64::INFINITY, 0);
        for (i, t) in tables.iter().enumerate() {
            let v = pos_diff(fq, f.eval_table(t, nu, nv)) + r - cond_entropy(t, nu, nv);
            if v.max(0.0) < best.0 {
                best = (v.max(0.0), i);
            }
        }
        Ok((best.0, self.source_joint(&tables[best.1])))
    }

    /// `E₂(R)` with the minimizing `(Q_UV, Q_U'V)`.
    pub fn e2(&self, r: f64) -> Result<(f64, JointDistribution, JointDistribution)> {
        check_rate(r)?;
        let mut best = (f64::INFINITY, NO_ARG);
        for &i in &self.front {
            let v = self.outer_div[i as usize] + (r + self.m1[i as usize].0).max(0.0);
            if v < best.0 {
                best = (v, i);
            }
        }
        let i = best.1 as usize;
        let group = &self.groups[self.group_of[i].0 as usize];
        Ok((
            best.0,
            self.source_joint(&self.outer[i]),
            self.source_joint(&group.tables[self.m1[i].1 as usize]),
        ))
    }

    /// Smallest rate at which `E₂(R)` reaches `E₅`.
    pub fn saturation_rate(&self) -> Option<f64> {
        if !self.e5.is_finite() {
            return None;
        }
        let mut r = 0.0f64;
        for &i in &self.front {
            let d = self.outer_div[i as usize];
            if d < self.e5 {
                r = r.max(self.e5 - d - self.m1[i as usize].0);
            }
        }
        Some(r)
    }

    /// `E₂`, `E₅` and `E = min{E₂, E₅}` at strictly increasing rates.
    pub fn exponents(&self, rates: &[f64]) -> Result<JscExponents> {
        let mut e2_points = Vec::with_capacity(rates.len());
        let mut e_points = Vec::with_capacity(rates.len());
        for &r in rates {
            let (e2, q, qp) = self.e2(r)?;
            e2_points.push(CurvePoint {
                rate: r,
                exponent: e2,
                witness_q: q.clone(),
                witness_qprime: qp.clone(),
            });
            let point = match &self.e5_witness {
                Some(w) if self.e5 < e2 => CurvePoint {
                    rate: r,
                    exponent: self.e5,
                    witness_q: w.q_uv.clone(),
                    witness_qprime: w.q_upv.clone(),
                },
                _ => CurvePoint {
                    rate: r,
                    exponent: e2,
                    witness_q: q,
                    witness_qprime: qp,
                },
            };
            e_points.push(point);
        }
        Ok(JscExponents {
            e2_curve: ExponentCurve::new(e2_points)?,
            e5: self.e5,
            e_of_r: ExponentCurve::new(e_points)?,
            saturation_rate: self.saturation_rate(),
            e5_witness: self.e5_witness.clone(),
        })
    }
}

/// Joints `Q_V(v)·Q(u|v)` with conditionals on the grid, row-major `U × V`.
fn candidate_tables(q_v: &[f64], nu: usize, grid: &SimplexGrid) -> Vec<Vec<f64>> {
    let nv = q_v.len();
    let qv = Distribution::from_vec_unchecked(q_v.to_vec());
    let lattice = FixedRowLattice::new(&qv, nu, grid).expect("non-empty alphabets");
    let mut t_vu = vec![0.0; nv * nu];
    (0..lattice.len())
        .map(|idx| {
            lattice.fill(idx, &mut t_vu);
            let mut t = vec![0.0; nu * nv];
            for v in 0..nv {
                for u in 0..nu {
                    t[u * nv + v] = t_vu[v * nu + u];
                }
            }
            t
        })
        .collect()
}

/// `E₁(R, Q_UV)` with the minimizing `Q_U'V`.
pub fn e1_source(r: f64, q_uv: &JointDistribution, prob: &JscProblem) -> Result<f64> {
    Ok(JscEngine::new(prob)?.e1(r, q_uv)?.0)
}

/// `E₂(R)`.
pub fn e2_source(r: f64, prob: &JscProblem) -> Result<f64> {
    Ok(JscEngine::new(prob)?.e2(r)?.0)
}

/// `E₅`.
pub fn e5_channel(prob: &JscProblem) -> Result<f64> {
    Ok(JscEngine::new(prob)?.e5())
}

/// `E₂(R)`, `E₅` and their minimum over a rate grid.
pub fn jsc_exponent(prob: &JscProblem, rates: &[f64]) -> Result<JscExponents> {
    JscEngine::new(prob)?.exponents(rates)
}

fn mismatch(distance: f64, tolerance: f64) -> Error {
    Error::MarginalMismatch {
        distance,
        tolerance,
    }
}

/// `E₃` for one quadruple of joint types.
pub fn e3_pairwise(
    q_uv: &JointDistribution,
    q_xy: &JointDistribution,
    q_upv: &JointDistribution,
    q_xpy: &JointDistribution,
    prob: &JscProblem,
) -> Result<f64> {
    let (nu, nv) = prob.source_dims();
    let (nx, ny) = (prob.w.inputs(), prob.w.outputs());
    for (j, (r, c)) in [(q_uv, (nu, nv)), (q_upv, (nu, nv)), (q_xy, (nx, ny)), (q_xpy, (nx, ny))] {
        if j.rows() != r || j.cols() != c {
            return Err(Error::DimensionMismatch {
                expected: r * c,
                found: j.rows() * j.cols(),
                context: "joint type dimensions",
            });
        }
    }
    let tol = prob.grid.marginal_tolerance() + MARGINAL_SLACK;
    let d = linf_distance(q_uv.col_marginal().probs(), q_upv.col_marginal().probs());
    if d > tol {
        return Err(mismatch(d, tol));
    }
    let d = linf_distance(q_xy.col_marginal().probs(), q_xpy.col_marginal().probs());
    if d > tol {
        return Err(mismatch(d, tol));
    }
    for j in [q_xy, q_xpy] {
        let d = linf_distance(j.row_marginal().probs(), prob.q_x.probs());
        if d > MARGINAL_SLACK {
            return Err(mismatch(d, MARGINAL_SLACK));
        }
    }
    let h = |uv: &JointDistribution, xy: &JointDistribution| {
        ExtReal::from_f64(prob.f.eval_table(uv.table(), nu, nv))
            + ExtReal::from_f64(prob.g.eval_table(xy.table(), nx, ny))
    };
    Ok(e3_value(
        h(q_uv, q_xy),
        h(q_upv, q_xpy),
        mutual_information_table(q_xpy.table(), nx, ny),
        cond_entropy(q_upv.table(), nu, nv),
    ))
}
