use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

use super::info::linf_distance;
use super::{Distribution, JointDistribution};

/// Floating-point slack added to every marginal-tolerance comparison, so a
/// tolerance that lands exactly on a lattice spacing is not lost to rounding.
pub const MARGINAL_SLACK: f64 = 1e-9;

/// Discretization of the probability simplex: conditional rows take values
/// in multiples of `1/resolution`; marginal constraints are relaxed to an
/// L∞ ball of radius `marginal_tolerance`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexGrid {
    resolution: u32,
    marginal_tolerance: f64,
    refine: bool,
}

impl SimplexGrid {
    /// Grid with `δ = 1/k` and no local refinement.
    pub fn new(resolution: u32) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidGrid(format!(
                "resolution must be at least 2, got {resolution}"
            )));
        }
        Ok(SimplexGrid {
            resolution,
            marginal_tolerance: 1.0 / resolution as f64,
            refine: false,
        })
    }

    /// Default resolution for an alphabet of the given size: 64 for binary,
    /// 16 otherwise.
    pub fn default_for_alphabet(size: usize) -> Self {
        SimplexGrid::new(if size <= 2 { 64 } else { 16 }).expect("valid default")
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        if !(tolerance >= 0.0 && tolerance.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "marginal tolerance must be finite and non-negative, got {tolerance}"
            )));
        }
        self.marginal_tolerance = tolerance;
        Ok(self)
    }

    /// Enables coordinate-descent polishing of the outer minimizer at step
    /// `1/(4k)` after the grid search (random coding and ML exponents only).
    pub fn with_refinement(mut self, refine: bool) -> Self {
        self.refine = refine;
        self
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn marginal_tolerance(&self) -> f64 {
        self.marginal_tolerance
    }

    pub fn refine(&self) -> bool {
        self.refine
    }

    /// Whether two marginals are within the tolerance.
    pub fn marginals_close(&self, a: &[f64], b: &[f64]) -> bool {
        linf_distance(a, b) <= self.marginal_tolerance + MARGINAL_SLACK
    }
}

/// All points of `{c ∈ ℕ^dim : Σc = k}` in lexicographic order of the count
/// vectors, with the matching probability vectors `c/k`.
#[derive(Debug, Clone)]
pub struct SimplexPoints {
    dim: usize,
    resolution: u32,
    counts: Vec<u32>,
    probs: Vec<f64>,
}

impl SimplexPoints {
    pub fn new(dim: usize, resolution: u32) -> Self {
        assert!(dim >= 1, "simplex dimension must be positive");
        let mut counts = Vec::new();
        let mut current = alloc::vec![0u32; dim];
        fn rec(slot: usize, left: u32, cur: &mut [u32], out: &mut Vec<u32>) {
            if slot + 1 == cur.len() {
                cur[slot] = left;
                out.extend_from_slice(cur);
                return;
            }
            for c in 0..=left {
                cur[slot] = c;
                rec(slot + 1, left - c, cur, out);
            }
        }
        rec(0, resolution, &mut current, &mut counts);
        let k = resolution.max(1) as f64;
        let probs = counts.iter().map(|&c| c as f64 / k).collect();
        SimplexPoints {
            dim,
            resolution,
            counts,
            probs,
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn counts(&self, i: usize) -> &[u32] {
        &self.counts[i * self.dim..(i + 1) * self.dim]
    }

    pub fn probs(&self, i: usize) -> &[f64] {
        &self.probs[i * self.dim..(i + 1) * self.dim]
    }
}

/// The joints `Q(x,y) = q_x(x)·Q(y|x)` whose conditional rows lie on a
/// simplex grid, indexed in mixed radix (first input symbol most
/// significant). Inputs with `q_x(x) = 0` contribute a zero row and no
/// index digit.
#[derive(Debug, Clone)]
pub struct FixedRowLattice {
    q_x: Vec<f64>,
    ny: usize,
    points: SimplexPoints,
    free_rows: Vec<usize>,
    len: usize,
}

impl FixedRowLattice {
    pub fn new(q_x: &Distribution, ny: usize, grid: &SimplexGrid) -> Result<Self> {
        Self::with_resolution(q_x, ny, grid.resolution())
    }

    /// Like [`FixedRowLattice::new`] but accepts any resolution `k ≥ 1`.
    pub fn with_resolution(q_x: &Distribution, ny: usize, resolution: u32) -> Result<Self> {
        if ny == 0 {
            return Err(Error::Empty);
        }
        if resolution == 0 {
            return Err(Error::InvalidGrid("resolution must be positive".into()));
        }
        let points = SimplexPoints::new(ny, resolution);
        let free_rows: Vec<usize> = (0..q_x.len()).filter(|&x| q_x.get(x) > 0.0).collect();
        let len = (0..free_rows.len())
            .try_fold(1usize, |acc, _| acc.checked_mul(points.len()))
            .ok_or_else(|| Error::InvalidGrid("lattice size overflows usize".into()))?;
        Ok(FixedRowLattice {
            q_x: q_x.probs().to_vec(),
            ny,
            points,
            free_rows,
            len,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn nx(&self) -> usize {
        self.q_x.len()
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn q_x(&self) -> &[f64] {
        &self.q_x
    }

    pub fn points(&self) -> &SimplexPoints {
        &self.points
    }

    /// Input symbols with positive mass, in digit order.
    pub fn free_rows(&self) -> &[usize] {
        &self.free_rows
    }

    /// Writes the grid-point index of every free row of joint `idx` into `out`.
    #[inline]
    pub fn digits(&self, mut idx: usize, out: &mut [usize]) {
        let p = self.points.len();
        for slot in (0..self.free_rows.len()).rev() {
            out[slot] = idx % p;
            idx /= p;
        }
    }

    /// Writes the row-major table of joint `idx` into `table`.
    pub fn fill(&self, idx: usize, table: &mut [f64]) {
        debug_assert_eq!(table.len(), self.q_x.len() * self.ny);
        table.iter_mut().for_each(|t| *t = 0.0);
        let p = self.points.len();
        let mut rest = idx;
        for slot in (0..self.free_rows.len()).rev() {
            let point = rest % p;
            rest /= p;
            let x = self.free_rows[slot];
            let qx = self.q_x[x];
            for (t, c) in table[x * self.ny..(x + 1) * self.ny]
                .iter_mut()
                .zip(self.points.probs(point))
            {
                *t = qx * c;
            }
        }
    }

    pub fn joint(&self, idx: usize) -> JointDistribution {
        let mut table = alloc::vec![0.0; self.q_x.len() * self.ny];
        self.fill(idx, &mut table);
        JointDistribution::from_vec_unchecked(self.q_x.len(), self.ny, table)
    }

    pub fn iter(&self) -> impl Iterator<Item = JointDistribution> + '_ {
        (0..self.len).map(move |i| self.joint(i))
    }
}

/// Every grid joint with row marginal exactly `q_x`, in lexicographic order
/// of the grid indices.
pub fn enumerate_joints_fixed_row(
    q_x: &Distribution,
    ny: usize,
    grid: &SimplexGrid,
) -> Result<impl Iterator<Item = JointDistribution>> {
    let lattice = FixedRowLattice::new(q_x, ny, grid)?;
    Ok((0..lattice.len()).map(move |i| lattice.joint(i)))
}

/// Grid joints with row marginal `q_x` whose column marginal lies within
/// the grid's tolerance of `q_y`, followed by the product `q_x ⊗ q_y`
/// (whose marginals are exact).
pub fn enumerate_couplings(
    q_x: &Distribution,
    q_y: &Distribution,
    grid: &SimplexGrid,
) -> Result<impl Iterator<Item = JointDistribution>> {
    let lattice = FixedRowLattice::new(q_x, q_y.len(), grid)?;
    let target = q_y.probs().to_vec();
    let grid = *grid;
    let product = JointDistribution::product(q_x, q_y);
    Ok((0..lattice.len())
        .map(move |i| lattice.joint(i))
        .filter(move |j| grid.marginals_close(j.col_marginal().probs(), &target))
        .chain(core::iter::once(product)))
}
