//! Minimization of `c + [h − s]₊` over a fixed set of `(s, c)` pairs for many
//! thresholds `h`.
//!
//! Every nested minimization in the exponent formulas reduces to this form
//! once the rate is pulled out of the inner bracket: `s` is the competitor's
//! metric value and `c` its rate-like cost (`I(Q')`, `−H(U'|V)`, ...).
//! Items sorted by `s` with prefix minima of `c − s` and suffix minima of
//! `c` answer a query in one binary search.

use alloc::vec::Vec;

pub(crate) const NO_ARG: u32 = u32::MAX;

#[derive(Debug, Clone, Default)]
pub(crate) struct ThresholdMin {
    keys: Vec<f64>,
    ids: Vec<u32>,
    pre_val: Vec<f64>,
    pre_arg: Vec<u32>,
    suf_val: Vec<f64>,
    suf_arg: Vec<u32>,
}

impl ThresholdMin {
    /// `items` are `(s, c, id)`; `s` may be `−∞`, `c` must be finite.
    pub fn build(mut items: Vec<(f64, f64, u32)>) -> Self {
        items.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
        let n = items.len();
        let mut pre_val = Vec::with_capacity(n);
        let mut pre_arg = Vec::with_capacity(n);
        let (mut best, mut arg) = (f64::INFINITY, NO_ARG);
        for &(s, c, id) in &items {
            let v = c - s;
            if v < best {
                best = v;
                arg = id;
            }
            pre_val.push(best);
            pre_arg.push(arg);
        }
        let mut suf_val = alloc::vec![f64::INFINITY; n];
        let mut suf_arg = alloc::vec![NO_ARG; n];
        let (mut best, mut arg) = (f64::INFINITY, NO_ARG);
        for i in (0..n).rev() {
            let (_, c, id) = items[i];
            if c <= best {
                best = c;
                arg = id;
            }
            suf_val[i] = best;
            suf_arg[i] = arg;
        }
        ThresholdMin {
            keys: items.iter().map(|t| t.0).collect(),
            ids: items.iter().map(|t| t.2).collect(),
            pre_val,
            pre_arg,
            suf_val,
            suf_arg,
        }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    /// Item keys in ascending order, aligned with [`ThresholdMin::ids`].
    pub fn keys(&self) -> &[f64] {
        &self.keys
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    /// Number of items with `s < h`.
    #[inline]
    pub fn split(&self, h: f64) -> usize {
        self.keys.partition_point(|&s| s < h)
    }

    /// `min c + [h − s]₊` given the precomputed split point of `h`.
    #[inline]
    pub fn query_at(&self, split: usize, h: f64) -> (f64, u32) {
        let mut best = (f64::INFINITY, NO_ARG);
        if split < self.keys.len() {
            best = (self.suf_val[split], self.suf_arg[split]);
        }
        if split > 0 {
            let v = self.pre_val[split - 1] + h;
            if v < best.0 {
                best = (v, self.pre_arg[split - 1]);
            }
        }
        best
    }

    #[inline]
    pub fn query(&self, h: f64) -> (f64, u32) {
        self.query_at(self.split(h), h)
    }

    /// `min { c : s ≥ h }`.
    pub fn suffix_min(&self, h: f64) -> (f64, u32) {
        let s = self.split(h);
        if s < self.keys.len() {
            (self.suf_val[s], self.suf_arg[s])
        } else {
            (f64::INFINITY, NO_ARG)
        }
    }

    /// Answers the queries `h = self.keys()[i]` of `outer` (already sorted)
    /// with a single merge pass, folding each result into `best[i]`.
    pub fn merge_queries(&self, outer: &ThresholdMin, best: &mut [(f64, u32)]) {
        let mut split = 0;
        for (i, &h) in outer.keys.iter().enumerate() {
            while split < self.keys.len() && self.keys[split] < h {
                split += 1;
            }
            let cand = self.query_at(split, h);
            if cand.0 < best[i].0 {
                best[i] = cand;
            }
        }
    }
}
