use ciid::diagnostics::radial_symmetry_test;
use ciid::draw_seeded;
use ciid::lack_of_memory::{CompoundPoissonSubordinatorSpec, JumpAtom, MoShocks, ShockRateSpec};
use ciid::numerics::generalized_inverse_decreasing;
use ciid::shock_models::{
    additive_survival, exshock_copula_eval, AdditiveFamilySpec, BaseDistSpec, DirichletUrn, ExShock, ShockSurvival,
    ShockSurvivalSpec,
};
use proptest::prelude::*;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn shocks() -> Vec<ShockSurvival> {
    vec![
        ShockSurvival::Weibull { rate: 1.0, shape: 1.5 },
        ShockSurvival::Pareto { alpha: 1.0, scale: 2.0 },
        ShockSurvival::Exponential { rate: 0.3 },
    ]
}

#[test]
fn symmetric_dirichlet_samples_are_radially_symmetric_and_shocks_are_not() {
    let urn = DirichletUrn::new(2.0, BaseDistSpec::Normal { mean: 0.0, sd: 1.0 }, 3).unwrap();
    let s = draw_seeded(&urn, 20_000, 12, 0).unwrap();
    assert!(radial_symmetry_test(&s, 0.0).unwrap());

    let urn = DirichletUrn::new(1.0, BaseDistSpec::Uniform { lo: 0.0, hi: 1.0 }, 3).unwrap();
    let s = draw_seeded(&urn, 20_000, 13, 0).unwrap();
    assert!(radial_symmetry_test(&s, 0.5).unwrap());

    let mo = MoShocks::new(&ShockRateSpec::CardinalityRates(vec![1.0, 0.5, 0.5]), 3).unwrap();
    let s = draw_seeded(&mo, 20_000, 14, 0).unwrap();
    let mut pooled = s.data.clone();
    pooled.sort_by(f64::total_cmp);
    assert!(!radial_symmetry_test(&s, pooled[pooled.len() / 2]).unwrap());
}

#[test]
fn exchangeable_shock_copula_on_the_diagonal() {
    let h = shocks();
    let d = h.len();
    let law = ExShock::new(&ShockSurvivalSpec { by_cardinality: h.clone() }).unwrap();
    let level = |k: usize, x: f64| -> f64 {
        (1..=d - k + 1).map(|m| h[m - 1].survival(x).powf(binomial(d - k, m - 1))).product()
    };
    let s = draw_seeded(&law, 100_000, 15, 0).unwrap();
    for u in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let t = generalized_inverse_decreasing(|x| level(1, x), u, 1e-13);
        let oracle = u * (2..=d).map(|k| level(k, t)).product::<f64>();
        let c = exshock_copula_eval(&ShockSurvivalSpec { by_cardinality: h.clone() }, &vec![u; d]).unwrap();
        assert!((c - oracle).abs() < 1e-9, "u = {u}: {c} vs {oracle}");
        let (e, se) = s.empirical_survival(&vec![t; d]);
        assert!((e - c).abs() <= 3.0 * se + 1e-3, "u = {u}: empirical {e} vs {c}");
    }
}

fn families() -> Vec<AdditiveFamilySpec> {
    vec![
        AdditiveFamilySpec::PiecewiseLevy {
            breakpoints: vec![0.5, 2.0],
            pieces: vec![
                CompoundPoissonSubordinatorSpec { drift: 1.0, kill: 0.0, jumps: vec![] },
                CompoundPoissonSubordinatorSpec { drift: 0.2, kill: 0.1, jumps: vec![JumpAtom { size: 1.0, rate: 2.0 }] },
                CompoundPoissonSubordinatorSpec { drift: 0.5, kill: 0.0, jumps: vec![JumpAtom { size: 0.3, rate: 0.5 }] },
            ],
        },
        AdditiveFamilySpec::DirichletPrior { c: 1.5, g: BaseDistSpec::Exponential { rate: 1.0 } },
        AdditiveFamilySpec::Sato { alpha: 0.7 },
    ]
}

proptest! {
    #[test]
    fn additive_survival_is_monotone_and_exchangeable(
        which in 0usize..3,
        x in prop::collection::vec(0.0f64..4.0, 2..5),
        k in 0usize..5,
        bump in 0.0f64..1.0,
        rot in 0usize..5,
    ) {
        let fam = &families()[which];
        let base = additive_survival(fam, &x).unwrap();
        prop_assert!((0.0..=1.0).contains(&base));
        let mut y = x.clone();
        y[k % x.len()] += bump;
        prop_assert!(additive_survival(fam, &y).unwrap() <= base + 1e-12);
        let mut z = x.clone();
        z.rotate_left(rot % x.len());
        z.reverse();
        prop_assert!((additive_survival(fam, &z).unwrap() - base).abs() <= 1e-12);
    }
}
