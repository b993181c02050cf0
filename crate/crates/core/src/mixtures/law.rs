//! Laws of the latent mixing variable `M`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Beta as BetaDist, Distribution, Gamma as GammaDist};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{gamma, integrate, integrate_pieces, integrate_to_inf, ln_gamma, QUAD_TOL};
use crate::sampling::unit_exp;

/// Law of a non-negative mixing variable. Point masses and finite discrete
/// atoms may sit at `+∞` (written `"inf"` in JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MixingLawSpec {
    PointMass {
        #[serde(with = "crate::serde_real")]
        m: f64,
    },
    FiniteDiscrete {
        #[serde(with = "crate::serde_real::vec")]
        atoms: Vec<f64>,
        weights: Vec<f64>,
    },
    Gamma {
        theta: f64,
    },
    Beta {
        p: f64,
        q: f64,
    },
    Pareto {
        alpha: f64,
    },
    PositiveStable {
        theta: f64,
    },
    LogSeries {
        theta: f64,
    },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{name} must be a finite positive real, got {v}"))
    }
}

/// `e^{−m x}` with the conventions `∞·0 = 0`.
pub(crate) fn exp_neg_prod(m: f64, x: f64) -> f64 {
    if m == 0.0 || x == 0.0 {
        1.0
    } else {
        (-m * x).exp()
    }
}

impl MixingLawSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::PointMass { m } => {
                if m.is_nan() || *m < 0.0 {
                    return invalid(format!("point mass location must be >= 0, got {m}"));
                }
            }
            Self::FiniteDiscrete { atoms, weights } => {
                if atoms.is_empty() || atoms.len() != weights.len() {
                    return invalid("finite discrete law needs equally many atoms and weights");
                }
                if atoms.iter().any(|a| a.is_nan() || *a < 0.0) {
                    return invalid("atoms must be >= 0");
                }
                if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
                    return invalid("weights must be finite and >= 0");
                }
                let s: f64 = weights.iter().sum();
                if (s - 1.0).abs() > 1e-12 {
                    return invalid(format!("weights sum to {s}, not 1"));
                }
            }
            Self::Gamma { theta } => positive("gamma shape", *theta)?,
            Self::Beta { p, q } => {
                positive("beta p", *p)?;
                positive("beta q", *q)?;
            }
            Self::Pareto { alpha } => positive("pareto tail", *alpha)?,
            Self::PositiveStable { theta } => {
                if !(*theta > 0.0 && *theta < 1.0) {
                    return invalid(format!("stable index must lie in (0,1), got {theta}"));
                }
            }
            Self::LogSeries { theta } => positive("log-series parameter", *theta)?,
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::PointMass { .. } => "point_mass",
            Self::FiniteDiscrete { .. } => "finite_discrete",
            Self::Gamma { .. } => "gamma",
            Self::Beta { .. } => "beta",
            Self::Pareto { .. } => "pareto",
            Self::PositiveStable { .. } => "positive_stable",
            Self::LogSeries { .. } => "log_series",
        }
    }

    /// True when the law is concentrated on `[0, 1]`.
    pub fn on_unit_interval(&self) -> bool {
        match self {
            Self::PointMass { m } => *m <= 1.0,
            Self::FiniteDiscrete { atoms, .. } => atoms.iter().all(|a| *a <= 1.0),
            Self::Beta { .. } => true,
            _ => false,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::PointMass { m } => *m,
            Self::FiniteDiscrete { atoms, weights } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (a, w) in atoms.iter().zip(weights) {
                    acc += w;
                    if u < acc {
                        return *a;
                    }
                }
                let last = weights.iter().rposition(|w| *w > 0.0).unwrap_or(atoms.len() - 1);
                atoms[last]
            }
            Self::Gamma { theta } => GammaDist::new(*theta, 1.0).expect("validated").sample(rng),
            Self::Beta { p, q } => BetaDist::new(*p, *q).expect("validated").sample(rng),
            Self::Pareto { alpha } => (1.0 - rng.random::<f64>()).powf(-1.0 / alpha),
            Self::PositiveStable { theta } => sample_positive_stable(*theta, rng),
            Self::LogSeries { theta } => sample_log_series(*theta, rng) as f64,
        }
    }

    /// Laplace transform `E[e^{−x M}]`.
    pub fn laplace(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 1.0;
        }
        if x == f64::INFINITY {
            return self.prob_zero();
        }
        match self {
            Self::PointMass { m } => exp_neg_prod(*m, x),
            Self::FiniteDiscrete { atoms, weights } => {
                atoms.iter().zip(weights).map(|(a, w)| w * exp_neg_prod(*a, x)).sum()
            }
            Self::Gamma { theta } => (1.0 + x).powf(-theta),
            Self::PositiveStable { theta } => (-x.powf(*theta)).exp(),
            Self::LogSeries { theta } => {
                let p = -(-theta).exp_m1();
                let a = p * (-x).exp();
                // 1 - a cancels when a is close to one
                let rest = if a < 0.5 { (-a).ln_1p() } else { (-(-x).exp_m1() + (-theta - x).exp()).ln() };
                -rest / theta
            }
            Self::Beta { .. } | Self::Pareto { .. } => self.expect(|m| (-m * x).exp(), &[]),
        }
    }

    fn prob_zero(&self) -> f64 {
        match self {
            Self::PointMass { m } => f64::from(u8::from(*m == 0.0)),
            Self::FiniteDiscrete { atoms, weights } => {
                atoms.iter().zip(weights).filter(|(a, _)| **a == 0.0).map(|(_, w)| w).sum()
            }
            _ => 0.0,
        }
    }

    /// Raw moment `E[M^k]`; `+∞` when it diverges.
    pub fn moment(&self, k: u32) -> Result<f64> {
        if k == 0 {
            return Ok(1.0);
        }
        let kf = f64::from(k);
        Ok(match self {
            Self::PointMass { m } => m.powi(k as i32),
            Self::FiniteDiscrete { atoms, weights } => {
                atoms.iter().zip(weights).filter(|(_, w)| **w > 0.0).map(|(a, w)| w * a.powi(k as i32)).sum()
            }
            Self::Gamma { theta } => (ln_gamma(theta + kf) - ln_gamma(*theta)).exp(),
            Self::Beta { p, q } => beta_moment(*p, *q, k as usize),
            Self::Pareto { alpha } => {
                if kf < *alpha {
                    alpha / (alpha - kf)
                } else {
                    f64::INFINITY
                }
            }
            Self::PositiveStable { .. } => f64::INFINITY,
            Self::LogSeries { theta } => {
                let p = -(-theta).exp_m1();
                let mut s = 0.0;
                let mut pm = 1.0;
                for m in 1..2_000_000u32 {
                    pm *= p;
                    let t = f64::from(m).powi(k as i32 - 1) * pm / theta;
                    s += t;
                    if t < 1e-17 * s && f64::from(m) * (1.0 - p) > kf {
                        break;
                    }
                }
                s
            }
        })
    }

    /// `E[f(M)]`. Exact for discrete laws, adaptive quadrature otherwise.
    /// `breaks` lists points where `f` has kinks or jumps.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F, breaks: &[f64]) -> f64 {
        let tol = QUAD_TOL;
        match self {
            Self::PointMass { m } => f(*m),
            Self::FiniteDiscrete { atoms, weights } => {
                atoms.iter().zip(weights).filter(|(_, w)| **w > 0.0).map(|(a, w)| w * f(*a)).sum()
            }
            Self::Gamma { theta } => {
                let th = *theta;
                if th < 1.0 {
                    let c = 1.0 / gamma(th + 1.0);
                    let tb: Vec<f64> = breaks.iter().map(|b| b.powf(th)).collect();
                    integrate_to_inf(
                        |s| {
                            let x = s.powf(1.0 / th);
                            let w = (-x).exp();
                            if w == 0.0 {
                                0.0
                            } else {
                                c * f(x) * w
                            }
                        },
                        0.0,
                        &tb,
                        tol,
                    )
                } else {
                    let lg = ln_gamma(th);
                    let mut tb = breaks.to_vec();
                    tb.push(th - 1.0);
                    integrate_to_inf(
                        |x| {
                            if x <= 0.0 {
                                return if th == 1.0 { f(0.0) } else { 0.0 };
                            }
                            let w = ((th - 1.0) * x.ln() - x - lg).exp();
                            if w == 0.0 {
                                0.0
                            } else {
                                f(x) * w
                            }
                        },
                        0.0,
                        &tb,
                        tol,
                    )
                }
            }
            Self::Beta { p, q } => {
                let (p, q) = (*p, *q);
                let lb = ln_gamma(p) + ln_gamma(q) - ln_gamma(p + q);
                let lo_b: Vec<f64> = breaks.iter().filter(|b| **b < 0.5).map(|b| b.powf(p)).collect();
                let lo = integrate_pieces(
                    |s| {
                        let x = s.powf(1.0 / p);
                        f(x) * ((q - 1.0) * (-x).ln_1p() - lb).exp() / p
                    },
                    0.0,
                    0.5f64.powf(p),
                    &lo_b,
                    tol / 2.0,
                );
                let hi_b: Vec<f64> = breaks.iter().filter(|b| **b > 0.5).map(|b| (1.0 - b).powf(q)).collect();
                let hi = integrate_pieces(
                    |s| {
                        let y = s.powf(1.0 / q);
                        f(1.0 - y) * ((p - 1.0) * (-y).ln_1p() - lb).exp() / q
                    },
                    0.0,
                    0.5f64.powf(q),
                    &hi_b,
                    tol / 2.0,
                );
                lo + hi
            }
            Self::Pareto { alpha } => {
                let a = *alpha;
                let tb: Vec<f64> = breaks.iter().filter(|b| **b > 1.0).map(|b| b.powf(-a)).collect();
                integrate_pieces(|s| f(s.powf(-1.0 / a)), 0.0, 1.0, &tb, tol)
            }
            Self::LogSeries { theta } => {
                let p = -(-theta).exp_m1();
                let mut s = 0.0;
                let mut pm = 1.0;
                let mut mass = 0.0;
                for m in 1..10_000_000u64 {
                    pm *= p;
                    let w = pm / (m as f64 * theta);
                    s += w * f(m as f64);
                    mass += w;
                    if 1.0 - mass < 1e-15 {
                        break;
                    }
                }
                s
            }
            Self::PositiveStable { theta } => {
                let th = *theta;
                let ex = (1.0 - th) / th;
                integrate(
                    |u| {
                        let a = kanter_a(th, u);
                        let vb: Vec<f64> = breaks
                            .iter()
                            .filter(|b| **b > 0.0 && b.is_finite())
                            .map(|b| (-a / b.powf(1.0 / ex)).exp())
                            .collect();
                        integrate_pieces(
                            |v| {
                                let e = -v.ln();
                                f((a / e).powf(ex))
                            },
                            0.0,
                            1.0,
                            &vb,
                            tol,
                        ) / PI
                    },
                    0.0,
                    PI,
                    tol,
                )
            }
        }
    }
}

/// `Γ(p+k)Γ(p+q) / (Γ(p)Γ(p+q+k))`, the `k`-th moment of Beta(p, q).
pub fn beta_moment(p: f64, q: f64, k: usize) -> f64 {
    (0..k).map(|i| (p + i as f64) / (p + q + i as f64)).product()
}

fn kanter_a(theta: f64, u: f64) -> f64 {
    let a = (theta * u).sin().powf(theta / (1.0 - theta)) * ((1.0 - theta) * u).sin();
    a / u.sin().powf(1.0 / (1.0 - theta))
}

/// Positive `θ`-stable variate with Laplace transform `exp(−x^θ)` (Kanter's method).
pub fn sample_positive_stable<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> f64 {
    let u = PI * (1.0 - rng.random::<f64>());
    let u = if u >= PI { PI * (1.0 - 1e-16) } else { u };
    let e = unit_exp(rng);
    (kanter_a(theta, u) / e).powf((1.0 - theta) / theta)
}

fn sample_log_series<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> u64 {
    let p = -(-theta).exp_m1();
    let r = (-p).ln_1p();
    loop {
        let v: f64 = rng.random();
        if v >= p {
            return 1;
        }
        let u: f64 = rng.random();
        let q = -(r * u).exp_m1();
        if v <= q * q {
            let k = (1.0 + v.ln() / q.ln()).floor();
            if k < 1.0 || v == 0.0 || !k.is_finite() {
                continue;
            }
            return k as u64;
        }
        return if v >= q { 1 } else { 2 };
    }
}

impl std::fmt::Display for MixingLawSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", serde_json::to_string(self).map_err(|_| std::fmt::Error)?)
    }
}

pub(crate) fn require_finite_support(m: &MixingLawSpec) -> Result<()> {
    let bad = match m {
        MixingLawSpec::PointMass { m } => !m.is_finite(),
        MixingLawSpec::FiniteDiscrete { atoms, .. } => atoms.iter().any(|a| !a.is_finite()),
        _ => false,
    };
    if bad {
        Err(Error::UnsupportedLaw(format!("{} with an atom at infinity", m.name())))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mc_mean<F: Fn(f64) -> f64>(law: &MixingLawSpec, f: F, n: usize) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..n).map(|_| f(law.sample(&mut rng))).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
        (m, (v / n as f64).sqrt())
    }

    #[test]
    fn laplace_matches_sampler() {
        let laws = [
            MixingLawSpec::Gamma { theta: 0.7 },
            MixingLawSpec::Beta { p: 0.5, q: 2.0 },
            MixingLawSpec::Pareto { alpha: 1.5 },
            MixingLawSpec::PositiveStable { theta: 0.4 },
            MixingLawSpec::LogSeries { theta: 2.0 },
        ];
        for law in &laws {
            for x in [0.3, 1.0, 2.5] {
                let exact = law.laplace(x);
                let (emp, se) = mc_mean(law, |m| (-x * m).exp(), 100_000);
                assert!((emp - exact).abs() < 4.0 * se + 1e-3, "{law} x={x}: {emp} vs {exact}");
            }
        }
    }

    #[test]
    fn quadrature_expectation_matches_closed_laplace() {
        for law in [
            MixingLawSpec::Gamma { theta: 0.4 },
            MixingLawSpec::Gamma { theta: 3.0 },
            MixingLawSpec::PositiveStable { theta: 0.6 },
        ] {
            let q = law.expect(|m| (-1.3 * m).exp(), &[1.0]);
            assert!((q - law.laplace(1.3)).abs() < 1e-8, "{law}: {q}");
        }
        let ls = MixingLawSpec::LogSeries { theta: 1.5 };
        assert!((ls.expect(|m| (-0.8 * m).exp(), &[]) - ls.laplace(0.8)).abs() < 1e-12);
    }

    #[test]
    fn moments_closed_forms() {
        let b = MixingLawSpec::Beta { p: 2.0, q: 3.0 };
        assert!((b.moment(2).unwrap() - 0.2).abs() < 1e-14);
        assert!((b.expect(|m| m * m, &[]) - 0.2).abs() < 1e-10);
        let g = MixingLawSpec::Gamma { theta: 2.5 };
        assert!((g.moment(2).unwrap() - 2.5 * 3.5).abs() < 1e-10);
        let ls = MixingLawSpec::LogSeries { theta: 1.0 };
        let p = 1.0 - (-1.0f64).exp();
        assert!((ls.moment(1).unwrap() - p / (1.0 - p)).abs() < 1e-12);
        assert_eq!(MixingLawSpec::Pareto { alpha: 2.0 }.moment(2).unwrap(), f64::INFINITY);
    }

    #[test]
    fn validation_and_json() {
        assert!(MixingLawSpec::PositiveStable { theta: 1.0 }.validate().is_err());
        assert!(MixingLawSpec::FiniteDiscrete { atoms: vec![1.0], weights: vec![0.9] }.validate().is_err());
        let law: MixingLawSpec = serde_json::from_str(r#"{"family":"point_mass","m":"inf"}"#).unwrap();
        assert_eq!(law, MixingLawSpec::PointMass { m: f64::INFINITY });
        assert_eq!(law.laplace(1.0), 0.0);
        let back = serde_json::to_string(&law).unwrap();
        assert!(back.contains("\"inf\""));
    }
}
