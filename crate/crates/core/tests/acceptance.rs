//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints its `PASS`/`FAIL` line; the process fails if any criterion does.

use ciid::diagnostics::{
    empirical_h, kendall_tau, mc_verify, necessary_conditions, quantile_grid, within_tolerance, ConditionalInversion,
    EventKind, ScarsiniModel,
};
use ciid::extreme_value::{minstable_survival, LogisticDirect, MinStableSeries, StdfSpec};
use ciid::lack_of_memory::{lambda_from_b, mo_survival, CompoundPoissonSubordinatorSpec, GeoCiid, JumpAtom, MoCiid, MoShocks, ShockRateSpec};
use ciid::mixtures::{archimedean_copula_eval, ArchimedeanGenerator, ArchimedeanSampler, ExchNormal, L1Ciid, LinfCiid, MixingLawSpec, SphericalCiid};
use ciid::moments::{p_from_b, pattern_index, BinaryMixture, MonotoneSequence, PolyaUrn};
use ciid::shock_models::{additive_survival, dp_copula_eval, sato_survival, AdditiveFamilySpec, BaseDistSpec, DirichletUrn};
use ciid::{draw_seeded, RowSampler, SampleMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const N: usize = 100_000;

type Outcome = (bool, String);

/// Two samples agree at a point when the gap is within the combined band.
fn two_sample_ok(a: (f64, f64), b: (f64, f64)) -> bool {
    within_tolerance(a.0, b.0, (a.1 * a.1 + b.1 * b.1).sqrt())
}

fn check_extendible(eps: f64) -> bool {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let model = format!(r#"{{"family":"binary","b":[1,0.5,{eps:e}]}}"#);
    let code = ciid::cli::run(["ciid", "check", "--model", &model], &mut out, &mut err);
    assert_eq!(code, 0, "{}", String::from_utf8_lossy(&err));
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    v["extendible"].as_bool().unwrap()
}

fn criterion_01_hankel_boundary() -> Outcome {
    let (mut lo, mut hi) = (0.0, 0.5);
    assert!(!check_extendible(lo) && check_extendible(hi));
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if check_extendible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let boundary = 0.5 * (lo + hi);
    let ok = (boundary - 0.25).abs() <= 1e-6 && check_extendible(0.25) && check_extendible(0.5);
    (ok, format!("flip at {boundary:.9}"))
}

fn criterion_02_binary_equivalence() -> Outcome {
    let d = 3;
    let urn = draw_seeded(&PolyaUrn { r: 1, b: 1, d }, N, 21, 0).unwrap();
    let mix = draw_seeded(&BinaryMixture { m: MixingLawSpec::Beta { p: 1.0, q: 1.0 }, d }, N, 22, 0).unwrap();
    let law = p_from_b(&MonotoneSequence::new(vec![1.0, 0.5, 1.0 / 3.0, 0.25]).unwrap()).unwrap();
    let freq = |s: &SampleMatrix, pat: usize| s.fraction(|r| pattern_index(r) == pat);
    let mut ok = true;
    let mut worst = 0.0f64;
    for pat in 0..8usize {
        let exact = law.p()[pat.count_ones() as usize];
        let (a, b) = (freq(&urn, pat), freq(&mix, pat));
        ok &= two_sample_ok(a, b) && within_tolerance(a.0, exact, a.1) && within_tolerance(b.0, exact, b.1);
        worst = worst.max((a.0 - exact).abs()).max((b.0 - exact).abs());
    }
    (ok, format!("max |freq - p| = {worst:.5}"))
}

fn criterion_03_l1_oracle() -> Outcome {
    let m = MixingLawSpec::Gamma { theta: 1.0 };
    let law = L1Ciid::new(m.clone(), 3).unwrap();
    let s = draw_seeded(&law, N, 31, 0).unwrap();
    let (e, se) = s.empirical_survival(&[1.0, 1.0, 1.0]);
    let sf_ok = within_tolerance(e, 0.25, se) && (law.survival(&[1.0, 1.0, 1.0]) - 0.25).abs() < 1e-12;

    let gen = ArchimedeanGenerator::new(m).unwrap();
    let grid: Vec<Vec<f64>> = quantile_grid(|p| p, 3).into_iter().take(5).collect();
    let rep = mc_verify(&ArchimedeanSampler { inner: law }, |u| archimedean_copula_eval(&gen, u), EventKind::Cdf, &grid, N, 32, 0).unwrap();
    let ok = sf_ok && rep.pass;
    (ok, format!("survival(1,1,1) = {e:.4} +- {se:.4}; copula grid pass = {}", rep.pass))
}

fn criterion_04_marshall_olkin_two_samplers() -> Outcome {
    let d = 3;
    let sub = CompoundPoissonSubordinatorSpec { drift: 0.5, kill: 0.0, jumps: vec![JumpAtom { size: 1.0, rate: 1.0 }] };
    let params = sub.b_sequence(d).unwrap();
    let shocks = MoShocks::new(&ShockRateSpec::CardinalityRates(lambda_from_b(&params)), d).unwrap();
    let first_passage = MoCiid::new(sub, d).unwrap();

    let rate = -mo_survival(&params, &[1.0, 0.0, 0.0]).unwrap().ln();
    let grid = quantile_grid(|p| -(1.0 - p).ln() / rate, d);
    let closed = |x: &[f64]| mo_survival(&params, x);
    let a = draw_seeded(&shocks, N, 41, 0).unwrap();
    let b = draw_seeded(&first_passage, N, 42, 0).unwrap();
    let ra = ciid::diagnostics::compare_with_closed_form(&a, closed, EventKind::Survival, &grid).unwrap();
    let rb = ciid::diagnostics::compare_with_closed_form(&b, closed, EventKind::Survival, &grid).unwrap();
    let agree = grid.iter().all(|x| two_sample_ok(a.empirical_survival(x), b.empirical_survival(x)));
    let ok = ra.pass && rb.pass && agree;
    (ok, format!("shock pass = {}, first-passage pass = {}, agree = {agree}", ra.pass, rb.pass))
}

fn criterion_05_min_stable() -> Outcome {
    let theta = 0.5;
    let spec = StdfSpec::Logistic { theta };
    let direct = LogisticDirect { theta, rate: 1.0, d: 2 };
    let s = draw_seeded(&direct, N, 51, 0).unwrap();
    let exact = (-(2.0f64).sqrt()).exp();
    let (e, se) = s.empirical_survival(&[1.0, 1.0]);
    let sf_ok = within_tolerance(e, exact, se) && (minstable_survival(&spec, 1.0, &[1.0, 1.0]).unwrap() - exact).abs() < 1e-12;

    let mut stable_err = 0.0f64;
    for x in [[0.1, 0.2], [1.0, 1.0], [0.3, 2.5], [0.0, 0.7], [1.7, 0.05]] {
        let f = minstable_survival(&spec, 1.0, &x).unwrap();
        let f2 = minstable_survival(&spec, 1.0, &[2.0 * x[0], 2.0 * x[1]]).unwrap();
        stable_err = stable_err.max((f * f - f2).abs());
    }

    let series = draw_seeded(&MinStableSeries::new(&spec, 1.0, 2).unwrap(), N, 52, 0).unwrap();
    let grid = quantile_grid(|p| -(1.0 - p).ln(), 2);
    let agree = grid.iter().all(|x| two_sample_ok(s.empirical_survival(x), series.empirical_survival(x)));
    let ok = sf_ok && stable_err <= 1e-12 && agree;
    (ok, format!("survival(1,1) = {e:.4} +- {se:.4}, stability err = {stable_err:.1e}, series agrees = {agree}"))
}

fn criterion_06_dirichlet_prior() -> Outcome {
    let urn = DirichletUrn::new(1.0, BaseDistSpec::Uniform { lo: 0.0, hi: 1.0 }, 3).unwrap();
    let grid = quantile_grid(|p| p, 3);
    let rep = mc_verify(
        &urn,
        |x| dp_copula_eval(1.0, &x.iter().map(|v| 1.0 - v).collect::<Vec<_>>()),
        EventKind::Survival,
        &grid,
        N,
        61,
        0,
    )
    .unwrap();
    let point = dp_copula_eval(1.0, &[0.5, 0.5]).unwrap();
    let ok = rep.pass && (point - 0.375).abs() < 1e-12;
    (ok, format!("grid pass = {}, copula(0.5,0.5) = {point}", rep.pass))
}

fn criterion_07_sato_frailty() -> Outcome {
    let alpha = 1.0;
    let f = move |x: &[f64]| sato_survival(alpha, x).unwrap_or(f64::NAN);
    let sampler = ConditionalInversion::new(f, 2).unwrap();
    let grid: Vec<Vec<f64>> = quantile_grid(|p| (1.0 - p).powf(-1.0 / alpha) - 1.0, 2).into_iter().take(5).collect();
    let rep = mc_verify(&sampler, |x| sato_survival(alpha, x), EventKind::Survival, &grid, N, 71, 0).unwrap();

    let fam = AdditiveFamilySpec::Sato { alpha };
    let mut gap = 0.0f64;
    for a in [0.0, 0.1, 0.5, 1.0, 2.0, 7.5] {
        for b in [0.0, 0.3, 1.0, 4.0] {
            let x = [a, b];
            gap = gap.max((sato_survival(alpha, &x).unwrap() - additive_survival(&fam, &x).unwrap()).abs());
        }
    }
    let ok = rep.pass && gap <= 1e-12;
    (ok, format!("grid pass = {}, max additive gap = {gap:.1e}", rep.pass))
}

fn criterion_08_scarsini_counterexample() -> Outcome {
    let s = draw_seeded(&ScarsiniModel, N, 81, 0).unwrap();
    let (p, _) = s.empirical_cdf(&[0.25, 0.75]);
    let tau = kendall_tau(&s.column(0), &s.column(1)).unwrap().value;
    let ok = (p - 0.125).abs() <= 0.005 && p < 0.1875 && tau.abs() <= 0.01;
    (ok, format!("P(X1<=1/4, X2<=3/4) = {p:.4}, tau = {tau:.4}"))
}

fn criterion_09_necessary_condition_sweep() -> Outcome {
    let gamma = MixingLawSpec::Gamma { theta: 1.0 };
    let samplers: Vec<(&str, Box<dyn RowSampler>)> = vec![
        ("exch_normal", Box::new(ExchNormal::new(0.0, 1.0, 0.5, 3).unwrap())),
        ("spherical", Box::new(SphericalCiid::new(MixingLawSpec::PointMass { m: 1.0 }, 3).unwrap())),
        ("l1", Box::new(L1Ciid::new(gamma.clone(), 3).unwrap())),
        ("linf", Box::new(LinfCiid::new(gamma.clone(), 3).unwrap())),
        ("archimedean", Box::new(ArchimedeanSampler { inner: L1Ciid::new(gamma, 3).unwrap() })),
        ("binary_mixture", Box::new(BinaryMixture { m: MixingLawSpec::Beta { p: 1.0, q: 1.0 }, d: 3 })),
        ("polya_urn", Box::new(PolyaUrn { r: 1, b: 1, d: 3 })),
        ("mo_ciid", Box::new(MoCiid::new(CompoundPoissonSubordinatorSpec { drift: 0.5, kill: 0.0, jumps: vec![JumpAtom { size: 1.0, rate: 1.0 }] }, 3).unwrap())),
        ("geo_ciid", Box::new(GeoCiid::new(MixingLawSpec::Beta { p: 2.0, q: 2.0 }, 3).unwrap())),
        ("minstable_series", Box::new(MinStableSeries::new(&StdfSpec::Logistic { theta: 0.5 }, 1.0, 3).unwrap())),
        ("logistic_direct", Box::new(LogisticDirect { theta: 0.5, rate: 1.0, d: 3 })),
        ("dirichlet_urn", Box::new(DirichletUrn::new(1.0, BaseDistSpec::Uniform { lo: 0.0, hi: 1.0 }, 3).unwrap())),
        ("sato", Box::new(ConditionalInversion::new(|x: &[f64]| sato_survival(1.0, x).unwrap_or(f64::NAN), 3).unwrap())),
    ];
    let mut failed = Vec::new();
    for (i, (name, s)) in samplers.iter().enumerate() {
        let m = draw_seeded(s.as_ref(), N, 900 + i as u64, 0).unwrap();
        if !necessary_conditions(&m).unwrap().pass {
            failed.push(*name);
        }
    }
    let ok = failed.is_empty();
    (ok, format!("{} samplers, failed: {failed:?}", samplers.len()))
}

fn criterion_10_glivenko_cantelli() -> Outcome {
    let law = LinfCiid::new(MixingLawSpec::Gamma { theta: 1.0 }, 10_000).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut row = vec![0.0; law.d];
    let m = law.sample_row_with_m(&mut rng, &mut row);
    let dist = empirical_h(&row).unwrap().sup_distance(|t| (t / m).clamp(0.0, 1.0));
    let ok = dist < 0.03;
    (ok, format!("M = {m:.4}, sup distance = {dist:.4}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("hankel boundary", criterion_01_hankel_boundary),
        ("binary equivalence", criterion_02_binary_equivalence),
        ("l1 oracle", criterion_03_l1_oracle),
        ("marshall-olkin samplers", criterion_04_marshall_olkin_two_samplers),
        ("min-stable logistic", criterion_05_min_stable),
        ("dirichlet prior", criterion_06_dirichlet_prior),
        ("sato frailty", criterion_07_sato_frailty),
        ("scarsini", criterion_08_scarsini_counterexample),
        ("necessary conditions", criterion_09_necessary_condition_sweep),
        ("glivenko-cantelli", criterion_10_glivenko_cantelli),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            (false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        println!("acceptance criterion {:>2} {name}: {} ({detail})", i + 1, if ok { "PASS" } else { "FAIL" });
        failures += usize::from(!ok);
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
