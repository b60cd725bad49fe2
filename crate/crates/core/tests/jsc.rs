use gld_core::jsc::*;
use gld_core::metrics::{eval_f, eval_g};
use gld_core::probkit::{
    compose, conditional_divergence, entropy, enumerate_couplings, enumerate_joints_fixed_row,
    kl_divergence, linf_distance, mutual_information, SimplexPoints,
};
use gld_core::{
    Channel, DecoderMetric, Distribution, ExtReal, JointDistribution, SimplexGrid, SourceMetric,
};
use proptest::prelude::*;

fn dsbs(p: f64) -> JointDistribution {
    JointDistribution::from_rows(&[vec![0.5 * (1.0 - p), 0.5 * p], vec![0.5 * p, 0.5 * (1.0 - p)]])
        .unwrap()
}

fn uniform2() -> Distribution {
    Distribution::uniform(2).unwrap()
}

fn matched_problem(k: u32) -> JscProblem {
    let p = dsbs(0.1);
    let w = Channel::bsc(0.1).unwrap();
    JscProblem::new(
        p.clone(),
        uniform2(),
        w.clone(),
        SourceMetric::matched(&p, 1.0).unwrap(),
        DecoderMetric::matched(&w, 1.0).unwrap(),
        SimplexGrid::new(k).unwrap(),
    )
    .unwrap()
}

fn flat(j: &JointDistribution) -> Distribution {
    Distribution::new(j.table().to_vec()).unwrap()
}

fn cond_entropy(j: &JointDistribution) -> f64 {
    (entropy(&flat(j)) - entropy(&j.col_marginal())).max(0.0)
}

fn outer_sources(prob: &JscProblem) -> Vec<JointDistribution> {
    let k = prob.grid().resolution();
    let pts = SimplexPoints::new(4, k);
    let mut out: Vec<_> = (0..pts.len())
        .map(|i| JointDistribution::from_rows(&[pts.probs(i)[..2].to_vec(), pts.probs(i)[2..].to_vec()]).unwrap())
        .collect();
    out.push(prob.p_uv().clone());
    out
}

/// `Q_U'V` candidates: grid conditionals on the exact `V` marginal, plus
/// outer types with the same `V` marginal, plus `q` itself.
fn source_candidates(q: &JointDistribution, prob: &JscProblem) -> Vec<JointDistribution> {
    let q_v = q.col_marginal();
    let mut out: Vec<_> = enumerate_joints_fixed_row(&q_v, 2, prob.grid())
        .unwrap()
        .map(|j| j.transpose())
        .collect();
    out.extend(
        outer_sources(prob)
            .into_iter()
            .filter(|o| linf_distance(o.col_marginal().probs(), q_v.probs()) < 1e-10),
    );
    out.push(q.clone());
    out
}

fn f_of(q: &JointDistribution, prob: &JscProblem) -> ExtReal {
    eval_f(prob.f(), q).unwrap()
}

fn g_of(q: &JointDistribution, prob: &JscProblem) -> ExtReal {
    eval_g(prob.g(), q).unwrap()
}

fn brute_e1(r: f64, q: &JointDistribution, prob: &JscProblem) -> f64 {
    let f = f_of(q, prob);
    source_candidates(q, prob)
        .iter()
        .map(|qp| {
            let d = ExtReal::pos_diff(f, f_of(qp, prob)).value();
            (d + r - cond_entropy(qp)).max(0.0)
        })
        .fold(f64::INFINITY, f64::min)
}

fn brute_e2(r: f64, prob: &JscProblem) -> f64 {
    outer_sources(prob)
        .iter()
        .map(|q| kl_divergence(&flat(q), &flat(prob.p_uv())).unwrap().value() + brute_e1(r, q, prob))
        .fold(f64::INFINITY, f64::min)
}

fn brute_e5(prob: &JscProblem) -> f64 {
    let anchor = compose(prob.q_x(), prob.channel()).unwrap();
    let mut channel_outer: Vec<_> = enumerate_joints_fixed_row(prob.q_x(), 2, prob.grid())
        .unwrap()
        .collect();
    channel_outer.push(anchor.clone());
    let tol = prob.grid().marginal_tolerance() + 1e-9;
    let mut best = f64::INFINITY;
    for q_uv in outer_sources(prob) {
        let du = kl_divergence(&flat(&q_uv), &flat(prob.p_uv())).unwrap();
        if !du.is_finite() {
            continue;
        }
        let sources = source_candidates(&q_uv, prob);
        let f = f_of(&q_uv, prob);
        for q_xy in &channel_outer {
            let dx = conditional_divergence(q_xy, prob.channel()).unwrap();
            if !dx.is_finite() {
                continue;
            }
            let col = q_xy.col_marginal();
            let mut couplings: Vec<_> = enumerate_couplings(prob.q_x(), &col, prob.grid())
                .unwrap()
                .collect();
            if linf_distance(anchor.col_marginal().probs(), col.probs()) <= tol {
                couplings.push(anchor.clone());
            }
            let h = f + g_of(q_xy, prob);
            for q_upv in &sources {
                let fp = f_of(q_upv, prob);
                let hc = cond_entropy(q_upv);
                for q_xpy in &couplings {
                    let hp = fp + g_of(q_xpy, prob);
                    let e3 = (ExtReal::pos_diff(h, hp).value() + (mutual_information(q_xpy) - hc)).max(0.0);
                    best = best.min(du.value() + dx.value() + e3);
                }
            }
        }
    }
    best
}

#[test]
fn e5_matches_exhaustive_enumeration() {
    let prob = matched_problem(4);
    let e5 = e5_channel(&prob).unwrap();
    let brute = brute_e5(&prob);
    assert!((e5 - brute).abs() < 1e-12, "{e5} vs {brute}");
    assert!(e5 > 0.0);
}

#[test]
fn e5_matches_exhaustive_enumeration_mismatched() {
    let p = JointDistribution::from_rows(&[vec![0.4, 0.1], vec![0.15, 0.35]]).unwrap();
    let w = Channel::new(&[vec![0.85, 0.15], vec![0.25, 0.75]]).unwrap();
    let prob = JscProblem::new(
        p,
        Distribution::new(vec![0.25, 0.75]).unwrap(),
        w.clone(),
        SourceMetric::neg_cond_entropy(1.5).unwrap(),
        DecoderMetric::mismatched(&Channel::bsc(0.2).unwrap(), 2.0).unwrap(),
        SimplexGrid::new(4).unwrap(),
    )
    .unwrap();
    let e5 = e5_channel(&prob).unwrap();
    let brute = brute_e5(&prob);
    assert!((e5 - brute).abs() < 1e-12, "{e5} vs {brute}");
}

#[test]
fn e5_witness_reproduces_value() {
    let prob = matched_problem(4);
    let engine = JscEngine::new(&prob).unwrap();
    let w = engine.e5_witness().unwrap();
    let du = kl_divergence(&flat(&w.q_uv), &flat(prob.p_uv())).unwrap().value();
    let dx = conditional_divergence(&w.q_xy, prob.channel()).unwrap().value();
    let e3 = e3_pairwise(&w.q_uv, &w.q_xy, &w.q_upv, &w.q_xpy, &prob).unwrap();
    assert!((du + dx + e3 - engine.e5()).abs() < 1e-12);
}

#[test]
fn e2_matches_exhaustive_enumeration() {
    let prob = matched_problem(8);
    let engine = JscEngine::new(&prob).unwrap();
    for r in [0.0, 0.1, 0.25, 0.4, 0.7] {
        let (e2, q, qp) = engine.e2(r).unwrap();
        let brute = brute_e2(r, &prob);
        assert!((e2 - brute).abs() < 1e-12, "R={r}: {e2} vs {brute}");
        let d = kl_divergence(&flat(&q), &flat(prob.p_uv())).unwrap().value();
        let e1 = (ExtReal::pos_diff(f_of(&q, &prob), f_of(&qp, &prob)).value() + r - cond_entropy(&qp)).max(0.0);
        assert!((d + e1 - e2).abs() < 1e-12);
    }
}

#[test]
fn e1_matches_brute_force_off_grid() {
    let prob = matched_problem(8);
    let q = JointDistribution::from_rows(&[vec![0.37, 0.11], vec![0.2, 0.32]]).unwrap();
    for r in [0.0, 0.2, 0.5] {
        let e1 = e1_source(r, &q, &prob).unwrap();
        assert!((e1 - brute_e1(r, &q, &prob)).abs() < 1e-12);
    }
}

#[test]
fn e1_fine_grid_agrees_with_coarse_brute_force() {
    let fine = matched_problem(32);
    let coarse = matched_problem(8);
    let engine = JscEngine::new(&fine).unwrap();
    for q in [dsbs(0.1), dsbs(0.25), JointDistribution::from_rows(&[vec![0.5, 0.125], vec![0.125, 0.25]]).unwrap()] {
        for r in [0.1, 0.3, 0.6] {
            let a = engine.e1(r, &q).unwrap().0;
            let b = brute_e1(r, &q, &coarse);
            assert!((a - b).abs() < 5e-2, "R={r}: {a} vs {b}");
        }
    }
}

#[test]
fn e2_vanishes_at_zero_rate_and_is_nondecreasing() {
    let prob = matched_problem(8);
    let engine = JscEngine::new(&prob).unwrap();
    assert_eq!(engine.e2(0.0).unwrap().0, 0.0);
    let mut last = 0.0;
    for i in 0..=40 {
        let e = engine.e2(i as f64 * 0.025).unwrap().0;
        assert!(e >= last);
        last = e;
    }
}

#[test]
fn exponent_saturates_at_e5() {
    let prob = matched_problem(8);
    let engine = JscEngine::new(&prob).unwrap();
    let rates: Vec<f64> = (1..=60).map(|i| i as f64 * 0.025).collect();
    let ex = engine.exponents(&rates).unwrap();
    let r_sat = ex.saturation_rate.unwrap();
    assert!(r_sat > 0.0 && r_sat < 1.5, "{r_sat}");
    let e: Vec<f64> = ex.e_of_r.exponents().collect();
    let e2s: Vec<f64> = ex.e2_curve.exponents().collect();
    for w in e.windows(2) {
        assert!(w[1] >= w[0]);
    }
    for (i, &r) in rates.iter().enumerate() {
        let e2 = e2s[i];
        assert_eq!(e[i], e2.min(ex.e5));
        if r >= r_sat + 1e-9 {
            assert_eq!(e[i].to_bits(), ex.e5.to_bits());
        } else if r < r_sat - 1e-9 {
            assert!(e2 < ex.e5);
        }
    }
    assert!(engine.e2(r_sat).unwrap().0 >= ex.e5 - 1e-12);
}

#[test]
fn mmi_source_channel_functional_matches_map() {
    let p = dsbs(0.1);
    let w = Channel::bsc(0.1).unwrap();
    let map = e5_channel(&matched_problem(8)).unwrap();
    for beta in [1.0, 2.0] {
        let prob = JscProblem::new(
            p.clone(),
            uniform2(),
            w.clone(),
            SourceMetric::neg_cond_entropy(beta).unwrap(),
            DecoderMetric::mmi(beta).unwrap(),
            SimplexGrid::new(8).unwrap(),
        )
        .unwrap();
        let e5 = e5_channel(&prob).unwrap();
        assert!((e5 - map).abs() < 5e-2, "beta={beta}: {e5} vs {map}");
    }
}

#[test]
fn e3_at_identical_types() {
    let prob = matched_problem(8);
    let q_uv = dsbs(0.25);
    let q_xy = compose(&uniform2(), &Channel::bsc(0.125).unwrap()).unwrap();
    let e3 = e3_pairwise(&q_uv, &q_xy, &q_uv, &q_xy, &prob).unwrap();
    let expect = (mutual_information(&q_xy) - cond_entropy(&q_uv)).max(0.0);
    assert!((e3 - expect).abs() < 1e-12);
}

#[test]
fn e3_rejects_incompatible_marginals() {
    let prob = matched_problem(8);
    let q_uv = dsbs(0.1);
    let far = JointDistribution::from_rows(&[vec![0.9, 0.0], vec![0.05, 0.05]]).unwrap();
    let q_xy = compose(&uniform2(), prob.channel()).unwrap();
    assert!(e3_pairwise(&q_uv, &q_xy, &far, &q_xy, &prob).is_err());
    let skew = compose(&Distribution::new(vec![0.1, 0.9]).unwrap(), prob.channel()).unwrap();
    assert!(e3_pairwise(&q_uv, &q_xy, &q_uv, &skew, &prob).is_err());
    let three = JointDistribution::from_rows(&[vec![0.5, 0.0, 0.0], vec![0.0, 0.5, 0.0]]).unwrap();
    assert!(e3_pairwise(&q_uv, &q_xy, &q_uv, &three, &prob).is_err());
}

#[test]
fn rejects_bad_rates_and_dimensions() {
    let prob = matched_problem(8);
    assert!(e2_source(-0.1, &prob).is_err());
    assert!(e2_source(f64::NAN, &prob).is_err());
    let w = Channel::bsc(0.1).unwrap();
    assert!(JscProblem::new(
        dsbs(0.1),
        Distribution::uniform(3).unwrap(),
        w.clone(),
        SourceMetric::neg_cond_entropy(1.0).unwrap(),
        DecoderMetric::matched(&w, 1.0).unwrap(),
        SimplexGrid::new(8).unwrap(),
    )
    .is_err());
}

fn ext() -> impl Strategy<Value = ExtReal> {
    prop_oneof![
        1 => Just(ExtReal::NEG_INFINITY),
        8 => (-5.0f64..5.0).prop_map(ExtReal::from_f64),
    ]
}

proptest! {
    #[test]
    fn two_branch_form_is_identical(h in ext(), hp in ext(), i in 0.0f64..2.0, hc in 0.0f64..2.0) {
        prop_assert_eq!(e3_value(h, hp, i, hc).to_bits(), e3_value_two_branch(h, hp, i, hc).to_bits());
    }

    #[test]
    fn e3_is_nonnegative_and_monotone_in_dh(a in -3.0f64..3.0, b in -3.0f64..3.0, i in 0.0f64..1.0, hc in 0.0f64..1.0) {
        let lo = a.min(b);
        let hi = a.max(b);
        let e_lo = e3_value(ExtReal::from_f64(lo), ExtReal::ZERO, i, hc);
        let e_hi = e3_value(ExtReal::from_f64(hi), ExtReal::ZERO, i, hc);
        prop_assert!(e_lo >= 0.0 && e_lo <= e_hi);
    }
}
