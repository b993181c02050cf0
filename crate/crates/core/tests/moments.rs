use ciid::moments::{
    b_from_p, hausdorff_extendible, is_d_monotone, is_log_d_monotone, nabla, p_from_b, pattern_index,
    polya_pattern_probability, BinaryExchangeableLaw, MonotoneSequence, MONOTONE_TOL,
};
use ciid::{draw_seeded, RowSampler};
use ciid::moments::PolyaUrn;
use proptest::prelude::*;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// A random exchangeable binary law from unnormalized weights per number of ones.
fn law_from_weights(w: &[f64]) -> BinaryExchangeableLaw {
    let d = w.len() - 1;
    let total: f64 = w.iter().sum();
    let p = w.iter().enumerate().map(|(k, v)| v / total / binomial(d, k)).collect();
    BinaryExchangeableLaw::new(p).unwrap()
}

fn raw_d_monotone(v: &[f64], order: usize) -> bool {
    (0..order).all(|k| nabla(v, order - k, k) >= -MONOTONE_TOL)
}

proptest! {
    #[test]
    fn shorter_sequences_stay_monotone(w in prop::collection::vec(0.01f64..1.0, 3..8)) {
        let seq = b_from_p(&law_from_weights(&w));
        prop_assert!(is_d_monotone(&seq));
        let b = seq.values();
        let d = b.len() - 1;
        prop_assert!(raw_d_monotone(&b[..d], d - 1));
        let tail: Vec<f64> = b[1..].iter().map(|v| v / b[1]).collect();
        prop_assert!(raw_d_monotone(&tail, d - 1));
    }

    #[test]
    fn binary_reparametrizations_invert(w in prop::collection::vec(0.0f64..1.0, 2..9)) {
        prop_assume!(w.iter().sum::<f64>() > 0.1);
        let law = law_from_weights(&w);
        let back = p_from_b(&b_from_p(&law)).unwrap();
        for (a, b) in law.p().iter().zip(back.p()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let seq = b_from_p(&law);
        let again = b_from_p(&p_from_b(&seq).unwrap());
        for (a, b) in seq.values().iter().zip(again.values()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn log_monotonicity_matches_the_exp_cumulative_transform() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut both = [0usize; 2];
    for _ in 0..1000 {
        let d = rng.random_range(2..7usize);
        // mix in genuinely monotone inputs so both verdicts occur often
        let b: Vec<f64> = if rng.random_bool(0.5) {
            let w: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let c = rng.random_range(0.1..3.0);
            b_from_p(&law_from_weights(&w)).values().iter().map(|v| c * v).collect()
        } else {
            (0..d).map(|_| rng.random_range(0.0..2.0)).collect()
        };
        let mut tilde = vec![1.0];
        let mut acc = 0.0;
        for v in &b {
            acc += v;
            tilde.push((-acc).exp());
        }
        let lhs = raw_d_monotone(&b, d - 1);
        let rhs = is_log_d_monotone(&MonotoneSequence::new(tilde).unwrap()).unwrap();
        assert_eq!(lhs, rhs, "b = {b:?}");
        both[usize::from(lhs)] += 1;
    }
    assert!(both[0] > 50 && both[1] > 50, "{both:?}");
}

#[test]
fn hankel_verdict_flips_at_one_quarter() {
    let verdict = |eps: f64| hausdorff_extendible(&MonotoneSequence::new(vec![1.0, 0.5, eps]).unwrap()).unwrap().extendible;
    let (mut lo, mut hi) = (0.0, 0.5);
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if verdict(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    assert!((hi - 0.25).abs() < 1e-6);
}

#[test]
fn polya_urn_pattern_frequencies() {
    for (r, b, d) in [(1u32, 1u32, 3usize), (2, 1, 4), (1, 3, 2)] {
        let urn = PolyaUrn { r, b, d };
        assert_eq!(urn.dim(), d);
        let s = draw_seeded(&urn, 50_000, 77, 0).unwrap();
        for pat in 0..(1usize << d) {
            let exact = polya_pattern_probability(r, b, d, pat.count_ones() as usize);
            let (e, se) = s.fraction(|row| pattern_index(row) == pat);
            assert!((e - exact).abs() <= 3.0 * se + 1e-3, "r={r} b={b} pattern {pat}: {e} vs {exact}");
        }
    }
}
