//! Candidate pool and column-marginal cell index shared by the random coding
//! engine and its critical-rate analysis.
//!
//! The pool holds every grid joint with the prescribed row marginal plus the
//! anchor `Q_X × W`. Joints are grouped into cells of (numerically) equal
//! column marginal; the couplings of any `Q` are then the members of all
//! cells whose marginal lies within `δ` of `Q_Y`, together with the product
//! `Q_X ⊗ Q_Y`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::ext::pos_diff;
use crate::math::{ln, round};
use crate::metrics::DecoderMetric;
use crate::par;
use crate::probkit::{
    mutual_information_table, Channel, Distribution, FixedRowLattice, SimplexGrid,
    MARGINAL_SLACK,
};
use crate::threshold::ThresholdMin;

/// Witness code for the product coupling `Q_X ⊗ Q_Y`.
pub(crate) const PRODUCT: u32 = u32::MAX - 1;

const CHUNK: usize = 4096;
const KEY_SCALE: f64 = 1e9;

/// `D(Q ‖ Q_X × W)` for a joint whose rows sum to `q_x`.
pub(crate) fn cond_divergence_table(t: &[f64], q_x: &[f64], w: &Channel) -> f64 {
    let ny = w.outputs();
    let mut d = 0.0;
    for (x, &qx) in q_x.iter().enumerate() {
        if qx <= 0.0 {
            continue;
        }
        for (y, &q) in t[x * ny..(x + 1) * ny].iter().enumerate() {
            if q > 0.0 {
                let wy = w.prob(x, y);
                if wy <= 0.0 {
                    return f64::INFINITY;
                }
                d += q * ln(q / (qx * wy));
            }
        }
    }
    d.max(0.0)
}

pub(crate) fn col_marginal_table(t: &[f64], ny: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|c| *c = 0.0);
    for row in t.chunks_exact(ny) {
        for (c, &q) in out.iter_mut().zip(row) {
            *c += q;
        }
    }
}

/// Per-candidate statistics of the pool.
pub(crate) struct Pool {
    pub lattice: FixedRowLattice,
    pub anchor: Vec<f64>,
    pub g: Vec<f64>,
    pub info: Vec<f64>,
    pub div: Vec<f64>,
}

impl Pool {
    pub fn new(
        q_x: &Distribution,
        w: &Channel,
        metric: Option<&DecoderMetric>,
        grid: &SimplexGrid,
    ) -> Result<Self> {
        let lattice = FixedRowLattice::new(q_x, w.outputs(), grid)?;
        let (nx, ny) = (w.inputs(), w.outputs());
        let anchor: Vec<f64> = (0..nx)
            .flat_map(|x| w.row(x).iter().map(move |&p| q_x.get(x) * p))
            .collect();
        let n = lattice.len() + 1;

        // Divergence is separable over rows: tabulate each (row, grid point).
        let points = lattice.points();
        let row_div: Vec<Vec<f64>> = (0..nx)
            .map(|x| {
                (0..points.len())
                    .map(|p| crate::probkit::kl_slice(points.probs(p), w.row(x)))
                    .collect()
            })
            .collect();

        let stats = par::map_chunks(n, CHUNK, |range| {
            let mut table = vec![0.0; nx * ny];
            let mut digits = vec![0usize; lattice.free_rows().len()];
            range
                .map(|id| {
                    if id == lattice.len() {
                        let g = metric.map_or(0.0, |m| m.eval_table(&anchor, nx, ny));
                        return (g, mutual_information_table(&anchor, nx, ny), 0.0);
                    }
                    lattice.fill(id, &mut table);
                    lattice.digits(id, &mut digits);
                    let mut d = 0.0;
                    for (slot, &x) in lattice.free_rows().iter().enumerate() {
                        d += q_x.get(x) * row_div[x][digits[slot]];
                    }
                    let g = metric.map_or(0.0, |m| m.eval_table(&table, nx, ny));
                    (g, mutual_information_table(&table, nx, ny), d)
                })
                .collect()
        });
        let mut g = Vec::with_capacity(n);
        let mut info = Vec::with_capacity(n);
        let mut div = Vec::with_capacity(n);
        for (a, b, c) in stats {
            g.push(a);
            info.push(b);
            div.push(c);
        }
        Ok(Pool {
            lattice,
            anchor,
            g,
            info,
            div,
        })
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn anchor_id(&self) -> u32 {
        self.lattice.len() as u32
    }

    pub fn fill(&self, id: u32, table: &mut [f64]) {
        if id as usize == self.lattice.len() {
            table.copy_from_slice(&self.anchor);
        } else {
            self.lattice.fill(id as usize, table);
        }
    }
}

/// Pool members grouped by column marginal.
pub(crate) struct Cells {
    ny: usize,
    reach: f64,
    cols: Vec<f64>,
    index: Vec<ThresholdMin>,
}

impl Cells {
    pub fn build(pool: &Pool, grid: &SimplexGrid) -> Self {
        let (nx, ny) = (pool.lattice.nx(), pool.lattice.ny());
        let kd = ny - 1;
        let n = pool.len();
        let keys: Vec<i64> = par::map_chunks(n, CHUNK, |range| {
            let mut table = vec![0.0; nx * ny];
            let mut col = vec![0.0; ny];
            let mut out = Vec::with_capacity(range.len() * kd);
            for id in range {
                pool.fill(id as u32, &mut table);
                col_marginal_table(&table, ny, &mut col);
                out.extend(col[..kd].iter().map(|&c| round(c * KEY_SCALE) as i64));
            }
            out
        });
        let key = |id: usize| &keys[id * kd..(id + 1) * kd];
        let mut ids: Vec<u32> = (0..n as u32).collect();
        ids.sort_unstable_by(|&a, &b| key(a as usize).cmp(key(b as usize)).then(a.cmp(&b)));

        let mut bounds = vec![0usize];
        for i in 1..n {
            if key(ids[i] as usize) != key(ids[i - 1] as usize) {
                bounds.push(i);
            }
        }
        bounds.push(n);

        let cells: Vec<(Vec<f64>, ThresholdMin)> = par::map_range(bounds.len() - 1, |c| {
            let members = &ids[bounds[c]..bounds[c + 1]];
            let mut table = vec![0.0; nx * ny];
            let mut col = vec![0.0; ny];
            pool.fill(members[0], &mut table);
            col_marginal_table(&table, ny, &mut col);
            let items = members
                .iter()
                .map(|&id| (pool.g[id as usize], pool.info[id as usize], id))
                .collect();
            (col, ThresholdMin::build(items))
        });
        let mut cols = Vec::with_capacity(cells.len() * ny);
        let mut index = Vec::with_capacity(cells.len());
        for (c, t) in cells {
            cols.extend_from_slice(&c);
            index.push(t);
        }
        Cells {
            ny,
            reach: grid.marginal_tolerance() + MARGINAL_SLACK,
            cols,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn col(&self, c: usize) -> &[f64] {
        &self.cols[c * self.ny..(c + 1) * self.ny]
    }

    pub fn index(&self, c: usize) -> &ThresholdMin {
        &self.index[c]
    }

    /// Cells whose marginal lies within the coupling tolerance of `col`.
    pub fn window<'a>(&'a self, col: &'a [f64]) -> impl Iterator<Item = usize> + 'a {
        let ny = self.ny;
        let first = |c: usize| self.cols[c * ny];
        let margin = self.reach + 1e-8;
        let n = self.index.len();
        let lo = partition(n, |c| first(c) < col[0] - margin);
        let hi = partition(n, |c| first(c) <= col[0] + margin);
        (lo..hi).filter(move |&c| {
            self.col(c)
                .iter()
                .zip(col)
                .all(|(a, b)| (a - b).abs() <= self.reach)
        })
    }
}

fn partition(n: usize, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, n);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `g(Q_X ⊗ Q_Y)`.
pub(crate) fn product_g(metric: &DecoderMetric, q_x: &[f64], col: &[f64]) -> f64 {
    let table: Vec<f64> = q_x
        .iter()
        .flat_map(|&a| col.iter().map(move |&b| a * b))
        .collect();
    metric.eval_table(&table, q_x.len(), col.len())
}

/// `min_{Q'} I(Q') + [g − g(Q')]₊` over the couplings of every pool member,
/// indexed by pool id.
pub(crate) fn inner_minima(pool: &Pool, cells: &Cells, metric: &DecoderMetric) -> Vec<(f64, u32)> {
    let q_x = pool.lattice.q_x();
    let per_cell: Vec<Vec<(f64, u32)>> = par::map_range(cells.len(), |c| {
        let own = cells.index(c);
        let mut best = vec![(f64::INFINITY, crate::threshold::NO_ARG); own.len()];
        for other in cells.window(cells.col(c)) {
            cells.index(other).merge_queries(own, &mut best);
        }
        let gp = product_g(metric, q_x, cells.col(c));
        for (b, &g) in best.iter_mut().zip(own.keys()) {
            let v = pos_diff(g, gp);
            if v < b.0 {
                *b = (v, PRODUCT);
            }
        }
        best
    });
    let mut out = vec![(f64::INFINITY, crate::threshold::NO_ARG); pool.len()];
    for (c, best) in per_cell.into_iter().enumerate() {
        for (&id, b) in cells.index(c).ids().iter().zip(best) {
            out[id as usize] = b;
        }
    }
    out
}

/// Ids sorted by `(div, value)` keeping only strict improvements in `value`:
/// every minimizer of `div + φ(value)` with `φ` nondecreasing is among them.
pub(crate) fn pareto_front(div: &[f64], value: impl Fn(usize) -> f64) -> Vec<u32> {
    let mut ids: Vec<u32> = (0..div.len() as u32)
        .filter(|&i| div[i as usize].is_finite())
        .collect();
    ids.sort_unstable_by(|&a, &b| {
        div[a as usize]
            .total_cmp(&div[b as usize])
            .then(value(a as usize).total_cmp(&value(b as usize)))
            .then(a.cmp(&b))
    });
    let mut front = Vec::new();
    let mut low = f64::INFINITY;
    for id in ids {
        let v = value(id as usize);
        if v < low {
            low = v;
            front.push(id);
        }
    }
    front
}
