use ciid::draw_seeded;
use ciid::extreme_value::{stdf_eval, GSpec, MinStableSeries, StdfSpec, WeightedG};
use ciid::mixtures::MixingLawSpec;
use proptest::prelude::*;

fn specs() -> Vec<StdfSpec> {
    vec![
        StdfSpec::Independence,
        StdfSpec::Logistic { theta: 0.5 },
        StdfSpec::NegativeLogistic { theta: 2.0 },
        StdfSpec::Lf { g: GSpec::Weibull { theta: 0.5 } },
        StdfSpec::Lf { g: GSpec::MoAtom { m: MixingLawSpec::PointMass { m: 1.0 } } },
        StdfSpec::Lf { g: GSpec::Step { breakpoints: vec![0.5, 1.5], values: vec![0.5, 1.0] } },
        StdfSpec::Triplet {
            b: 0.5,
            c: 1.0,
            atoms: vec![
                WeightedG { g: GSpec::Frechet { theta: 0.3 }, weight: 0.6 },
                WeightedG { g: GSpec::Weibull { theta: 1.2 }, weight: 0.4 },
            ],
        },
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn stdf_is_homogeneous_and_bounded(
        which in 0usize..7,
        x in prop::collection::vec(0.0f64..5.0, 2..4),
        t in 0.05f64..20.0,
    ) {
        let spec = &specs()[which];
        let l = stdf_eval(spec, &x).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| t * v).collect();
        let lt = stdf_eval(spec, &scaled).unwrap();
        prop_assert!((lt - t * l).abs() <= 1e-9 * lt.max(1e-300), "{spec:?}: {lt} vs {}", t * l);
        let top = x.iter().copied().fold(0.0, f64::max);
        let sum: f64 = x.iter().sum();
        prop_assert!(l >= top - 1e-9 * sum && l <= sum + 1e-9 * sum, "{spec:?}: {l} outside [{top}, {sum}]");
    }
}

#[test]
fn series_margins_are_exponential() {
    for (i, spec) in specs().into_iter().enumerate() {
        let rate = spec.natural_rate();
        let s = draw_seeded(&MinStableSeries::new(&spec, rate, 3).unwrap(), 20_000, 60 + i as u64, 0).unwrap();
        for k in 0..3 {
            let mut col = s.column(k);
            col.sort_by(f64::total_cmp);
            let n = col.len() as f64;
            let ks = col
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let f = 1.0 - (-rate * v).exp();
                    (f - j as f64 / n).abs().max(((j + 1) as f64 / n - f).abs())
                })
                .fold(0.0, f64::max);
            // Bonferroni over 21 columns at 1%
            assert!(ks < 2.16 / n.sqrt(), "{spec:?} column {k}: ks = {ks}");
        }
    }
}
