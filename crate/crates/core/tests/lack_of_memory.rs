use ciid::diagnostics::tie_frequency;
use ciid::draw_seeded;
use ciid::lack_of_memory::{mo_survival, CompoundPoissonSubordinatorSpec, JumpAtom, MoCiid, MoShocks, ShockRateSpec};

fn jumpy() -> CompoundPoissonSubordinatorSpec {
    CompoundPoissonSubordinatorSpec { drift: 0.3, kill: 0.1, jumps: vec![JumpAtom { size: 0.8, rate: 1.5 }] }
}

#[test]
fn residual_lifetimes_forget_the_past() {
    let d = 3;
    let spec = ShockRateSpec::CardinalityRates(vec![0.5, 0.3, 0.4]);
    let s = draw_seeded(&MoShocks::new(&spec, d).unwrap(), 200_000, 17, 0).unwrap();
    let t = 0.4;
    for x in [[0.2, 0.5, 0.1], [1.0, 0.3, 0.6], [0.0, 0.0, 0.9]] {
        let shifted: Vec<f64> = x.iter().map(|v| v + t).collect();
        let alive = s.rows().filter(|r| r.iter().all(|v| *v > t)).count() as f64;
        let both = s.rows().filter(|r| r.iter().zip(&shifted).all(|(v, w)| v > w)).count() as f64;
        let cond = both / alive;
        let cond_se = (cond * (1.0 - cond) / alive).sqrt();
        let (plain, plain_se) = s.empirical_survival(&x);
        let se = (cond_se.powi(2) + plain_se.powi(2)).sqrt();
        assert!((cond - plain).abs() <= 3.0 * se + 1e-3, "x = {x:?}: {cond} vs {plain}");
    }
}

#[test]
fn ties_appear_exactly_when_the_subordinator_jumps() {
    let drift = CompoundPoissonSubordinatorSpec { drift: 1.0, kill: 0.0, jumps: vec![] };
    let s = draw_seeded(&MoCiid::new(drift, 3).unwrap(), 20_000, 5, 0).unwrap();
    assert_eq!(tie_frequency(&s).unwrap(), 0.0);
    let s = draw_seeded(&MoCiid::new(jumpy(), 3).unwrap(), 20_000, 6, 0).unwrap();
    assert!(tie_frequency(&s).unwrap() > 0.1);
}

#[test]
fn minima_are_exponential() {
    let d = 3;
    let sub = jumpy();
    let params = sub.b_sequence(d).unwrap();
    let rate = -mo_survival(&params, &[1.0; 3]).unwrap().ln();
    let s = draw_seeded(&MoCiid::new(sub, d).unwrap(), 50_000, 9, 0).unwrap();
    let mut mins: Vec<f64> = s.rows().map(|r| r.iter().copied().fold(f64::INFINITY, f64::min)).collect();
    mins.sort_by(f64::total_cmp);
    let n = mins.len() as f64;
    let ks = mins
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let f = 1.0 - (-rate * v).exp();
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    // 1% critical value of the one-sample KS statistic
    assert!(ks < 1.628 / n.sqrt(), "ks = {ks}");
}
