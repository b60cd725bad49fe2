use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Sum-to-one tolerance applied when a distribution is constructed from
/// caller-supplied numbers. Accepted inputs are renormalized afterwards.
pub const LOAD_TOLERANCE: f64 = 1e-9;

fn check_row(row: &[f64], row_index: usize) -> Result<f64> {
    if row.is_empty() {
        return Err(Error::Empty);
    }
    let mut sum = 0.0;
    for (i, &p) in row.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidEntry {
                row: row_index,
                index: i,
                value: p,
            });
        }
        sum += p;
    }
    if (sum - 1.0).abs() > LOAD_TOLERANCE {
        return Err(Error::NotNormalized { row: row_index, sum });
    }
    Ok(sum)
}

/// A probability vector over a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        let sum = check_row(&probs, 0)?;
        probs.iter_mut().for_each(|p| *p /= sum);
        Ok(Distribution { probs })
    }

    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Empty);
        }
        Ok(Distribution {
            probs: alloc::vec![1.0 / size as f64; size],
        })
    }

    pub fn point_mass(size: usize, symbol: usize) -> Result<Self> {
        if symbol >= size {
            return Err(Error::DimensionMismatch {
                expected: size,
                found: symbol + 1,
                context: "point mass symbol",
            });
        }
        let mut probs = alloc::vec![0.0; size];
        probs[symbol] = 1.0;
        Ok(Distribution { probs })
    }

    /// Builds without validation; callers guarantee a valid vector.
    pub(crate) fn from_vec_unchecked(probs: Vec<f64>) -> Self {
        Distribution { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }
}

/// A joint distribution over `rows × cols`, stored row-major.
///
/// The row symbol is always the first random variable of the pair
/// (`X` in `Q_XY`, `U` in `Q_UV`, `X` in `Q_XX'`).
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    rows: usize,
    cols: usize,
    table: Vec<f64>,
}

impl JointDistribution {
    pub fn new(rows: usize, cols: usize, mut table: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty);
        }
        if table.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: table.len(),
                context: "joint table entries",
            });
        }
        let sum = check_row(&table, 0)?;
        table.iter_mut().for_each(|p| *p /= sum);
        Ok(JointDistribution { rows, cols, table })
    }

    /// Builds from nested rows (`table[row][col]`).
    pub fn from_rows(table: &[Vec<f64>]) -> Result<Self> {
        let rows = table.len();
        let cols = table.first().map_or(0, Vec::len);
        if let Some((_, r)) = table.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                expected: cols,
                found: r.len(),
                context: "joint table row length",
            });
        }
        JointDistribution::new(rows, cols, table.iter().flatten().copied().collect())
    }

    /// The product distribution `p ⊗ q`.
    pub fn product(p: &Distribution, q: &Distribution) -> Self {
        let table = p
            .probs()
            .iter()
            .flat_map(|&a| q.probs().iter().map(move |&b| a * b))
            .collect();
        JointDistribution {
            rows: p.len(),
            cols: q.len(),
            table,
        }
    }

    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, table: Vec<f64>) -> Self {
        debug_assert_eq!(table.len(), rows * cols);
        JointDistribution { rows, cols, table }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.table[row * self.cols + col]
    }

    pub fn row_marginal(&self) -> Distribution {
        Distribution::from_vec_unchecked(
            self.table.chunks(self.cols).map(|r| r.iter().sum()).collect(),
        )
    }

    pub fn col_marginal(&self) -> Distribution {
        Distribution::from_vec_unchecked(
            (0..self.cols)
                .map(|c| (0..self.rows).map(|r| self.get(r, c)).sum())
                .collect(),
        )
    }

    pub fn transpose(&self) -> Self {
        let mut table = Vec::with_capacity(self.table.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                table.push(self.get(r, c));
            }
        }
        JointDistribution {
            rows: self.cols,
            cols: self.rows,
            table,
        }
    }

    /// Joint entropy `H(row, col)`.
    pub fn joint_entropy(&self) -> f64 {
        super::entropy_slice(&self.table)
    }

    /// `H(row | col)`, e.g. `H(U|V)` for a `Q_UV` table.
    pub fn cond_entropy_row_given_col(&self) -> f64 {
        (self.joint_entropy() - super::entropy(&self.col_marginal())).max(0.0)
    }

    /// Conditional row `Q(· | row)`; `None` when the row has no mass.
    pub fn conditional_row(&self, row: usize) -> Option<Vec<f64>> {
        let r = &self.table[row * self.cols..(row + 1) * self.cols];
        let mass: f64 = r.iter().sum();
        (mass > 0.0).then(|| r.iter().map(|p| p / mass).collect())
    }

    /// Entries flattened row-major.
    pub fn flattened(&self) -> &[f64] {
        &self.table
    }
}

/// A row-stochastic transition matrix `W(y|x)`: rows are inputs, columns
/// are outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    inputs: usize,
    outputs: usize,
    matrix: Vec<f64>,
}

impl Channel {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let inputs = rows.len();
        if inputs == 0 {
            return Err(Error::Empty);
        }
        let outputs = rows[0].len();
        let mut matrix = Vec::with_capacity(inputs * outputs);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != outputs {
                return Err(Error::DimensionMismatch {
                    expected: outputs,
                    found: row.len(),
                    context: "channel row length",
                });
            }
            let sum = check_row(row, i)?;
            matrix.extend(row.iter().map(|p| p / sum));
        }
        Ok(Channel {
            inputs,
            outputs,
            matrix,
        })
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        Channel::new(&[alloc::vec![1.0 - p, p], alloc::vec![p, 1.0 - p]])
    }

    /// Z-channel: `W(0|0) = w`, `W(1|0) = 1 − w`, input 1 is noiseless.
    pub fn z_channel(w: f64) -> Result<Self> {
        Channel::new(&[alloc::vec![w, 1.0 - w], alloc::vec![0.0, 1.0]])
    }

    /// Noiseless channel on `size` symbols.
    pub fn identity(size: usize) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..size)
            .map(|i| (0..size).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Channel::new(&rows)
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    /// `W(y|x)`.
    #[inline]
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.matrix[x * self.outputs + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.matrix[x * self.outputs..(x + 1) * self.outputs]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.matrix.chunks(self.outputs)
    }
}
