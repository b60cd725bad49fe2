//! Closed forms for the z-channel `W = [[w, 1−w], [0, 1]]` with uniform
//! inputs and the matched metric `g(Q) = E_Q ln W(Y|X)`.
//!
//! A joint type with finite metric is determined by `q = Q(Y=0 | X=0)`, and
//! a symmetric pair type by `θ = Q_XX'(0,0) ∈ [0, 1/2]`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::ext::{pos_diff, ExtReal};
use crate::math::{ln, sqrt, xlnx_neg};
use crate::metrics::DecoderMetric;
use crate::probkit::{Channel, Distribution, SimplexGrid};
use crate::rce::{RceEngine, RceProblem};

const LN2: f64 = core::f64::consts::LN_2;
/// Points per axis of the `(θ, q)` search.
pub const SEARCH_POINTS: usize = 1001;
/// Default grid resolution of the random coding curve.
pub const RC_RESOLUTION: u32 = 64;

/// Binary entropy in nats.
pub fn h(p: f64) -> f64 {
    xlnx_neg(p) + xlnx_neg(1.0 - p)
}

/// The inverse of `h` on `[0, 1/2]`, by bisection to `1e-12`.
pub fn h_inv(v: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    if v >= LN2 {
        return 0.5;
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < v {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `I(q) = h(q/2) − h(q)/2`.
pub fn mutual_information(q: f64) -> f64 {
    (h(0.5 * q) - 0.5 * h(q)).max(0.0)
}

fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if y == 0.0 {
        f64::NEG_INFINITY
    } else {
        x * ln(y)
    }
}

/// `g(q) = (q/2) ln w + ((1−q)/2) ln(1−w)`.
pub fn metric(q: f64, w: f64) -> f64 {
    xlny(0.5 * q, w) + xlny(0.5 * (1.0 - q), 1.0 - w)
}

/// `α(R, q)`: `g(q) − I(q) + R` when `I(q) ≤ R`, else `−∞`.
pub fn alpha(r: f64, q: f64, w: f64) -> ExtReal {
    let i = mutual_information(q);
    if i <= r {
        ExtReal::from_f64(metric(q, w) - i + r)
    } else {
        ExtReal::NEG_INFINITY
    }
}

/// `Γ(θ) = [R − I(q)]₊ − g(q) − θ h(q/2θ)` for `q ≤ 2θ`.
pub fn gamma(theta: f64, q: f64, r: f64, w: f64) -> f64 {
    let s = if theta > 0.0 { q / (2.0 * theta) } else { 0.0 };
    pos_diff(r, mutual_information(q)) - metric(q, w) - theta * h(s)
}

fn check(w: f64, r: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidParameter(format!(
            "z-channel parameter must lie in [0, 1], got {w}"
        )));
    }
    if !(r > 0.0 && r < LN2) {
        return Err(Error::InvalidParameter(format!(
            "rate must lie in (0, ln 2), got {r}"
        )));
    }
    Ok(())
}

fn gld_search(w: f64, r: f64, with_bracket: bool) -> f64 {
    let u = h_inv(LN2 - r);
    let (lo, hi) = (0.5 * u, 0.5 * (1.0 - u));
    let last = (SEARCH_POINTS - 1) as f64;
    let mut best = f64::INFINITY;
    for i in 0..SEARCH_POINTS {
        let theta = lo + (hi - lo) * i as f64 / last;
        let base = LN2 - r - h(2.0 * theta);
        for j in 0..SEARCH_POINTS {
            let s = j as f64 / last;
            let q = 2.0 * theta * s;
            let bracket = if with_bracket {
                pos_diff(r, mutual_information(q))
            } else {
                0.0
            };
            let v = bracket - metric(q, w) - theta * h(s) + base;
            if v < best {
                best = v;
            }
        }
    }
    best
}

/// The expurgated exponent of the generalized likelihood decoder, by a
/// dense search over `(θ, q)`.
pub fn e_gld(w: f64, r: f64) -> Result<f64> {
    check(w, r)?;
    Ok(gld_search(w, r, true))
}

/// [`e_gld`] with the `[R − I(q)]₊` term removed from the objective.
pub fn e_gld_without_bracket(w: f64, r: f64) -> Result<f64> {
    check(w, r)?;
    Ok(gld_search(w, r, false))
}

/// Rate at which the CKM exponent switches to its straight-line branch.
pub fn ckm_threshold(w: f64) -> f64 {
    LN2 - h(1.0 / (1.0 + sqrt(1.0 - w)))
}

/// The CKM expurgated exponent, two-branch closed form (not clamped).
pub fn e_ckm(w: f64, r: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&w) || !(0.0..LN2).contains(&r) {
        return Err(Error::InvalidParameter(format!(
            "need w in [0, 1] and R in [0, ln 2), got w = {w}, R = {r}"
        )));
    }
    Ok(if r <= ckm_threshold(w) {
        -0.5 * xlny(h_inv(LN2 - r), 1.0 - w)
    } else {
        ln(2.0 / (1.0 + sqrt(1.0 - w))) - r
    })
}

/// One row of the three-curve comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZRow {
    pub rate: f64,
    pub e_gld: f64,
    pub e_ckm: f64,
    pub e_rc: f64,
}

/// `E_gld`, `E_ckm` and the random coding exponent (matched decoder,
/// `β = 1`, grid resolution 64) at each rate.
pub fn zchannel_curves(w: f64, rates: &[f64]) -> Result<Vec<ZRow>> {
    zchannel_curves_with_grid(w, rates, &SimplexGrid::new(RC_RESOLUTION)?)
}

/// [`zchannel_curves`] with a chosen grid for the random coding curve.
pub fn zchannel_curves_with_grid(w: f64, rates: &[f64], grid: &SimplexGrid) -> Result<Vec<ZRow>> {
    for &r in rates {
        check(w, r)?;
    }
    let channel = Channel::z_channel(w)?;
    let prob = RceProblem::new(
        Distribution::uniform(2)?,
        channel.clone(),
        DecoderMetric::matched(&channel, 1.0)?,
        *grid,
    )?;
    let engine = RceEngine::new(&prob)?;
    let gld = crate::par::map_range(rates.len(), |i| gld_search(w, rates[i], true));
    rates
        .iter()
        .zip(gld)
        .map(|(&r, e_gld)| {
            Ok(ZRow {
                rate: r,
                e_gld,
                e_ckm: e_ckm(w, r)?,
                e_rc: engine.exponent(r)?.0,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_entropy_round_trip() {
        for p in [0.01, 0.1, 0.3, 0.49] {
            assert!((h_inv(h(p)) - p).abs() < 1e-11);
        }
        assert_eq!(h_inv(LN2), 0.5);
    }

    #[test]
    fn ckm_at_zero_rate() {
        assert!((e_ckm(0.9, 0.0).unwrap() - 0.575646273248511).abs() < 1e-9);
    }

    #[test]
    fn ckm_branches_meet() {
        let rc = ckm_threshold(0.9);
        let a = e_ckm(0.9, rc).unwrap();
        let b = ln(2.0 / (1.0 + sqrt(0.1))) - rc;
        assert!((a - b).abs() < 1e-9);
    }
}
